use nalgebra::Vector3;

use super::{umeyama, NearestNeighbors};
use crate::{Error, Result, RigidTransform, Scalar};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IcpParams {
    pub max_iterations: usize,
    /// Stop once the RMS improves by less than this (mm).
    pub convergence_mm: f64,
}

impl Default for IcpParams {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            convergence_mm: 1e-9,
        }
    }
}

impl IcpParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 || !(self.convergence_mm > 0.0) {
            return Err(Error::InvalidValue(format!(
                "ICP needs max_iterations >= 1 and convergence_mm > 0, got {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcpResult<T: Scalar> {
    /// Maps `src` onto `dst`.
    pub transform: RigidTransform<T>,
    /// Nearest-neighbour RMS before the first step and after each accepted step.
    pub rms_history: Vec<T>,
    /// Correspondence + Umeyama steps performed.
    pub iterations: usize,
    pub converged: bool,
}

impl<T: Scalar> IcpResult<T> {
    pub fn final_rms(&self) -> T {
        *self.rms_history.last().expect("history holds the initial RMS")
    }
}

fn matched_rms<T: Scalar>(index: &NearestNeighbors<'_, T>, moved: &[Vector3<T>]) -> (Vec<Vector3<T>>, T) {
    let hits = index.nearest_all(moved);
    let sum = hits.iter().fold(T::zero(), |a, (_, d)| a + *d);
    let matched = hits.iter().map(|(i, _)| index.points()[*i]).collect();
    (matched, (sum / T::lit(moved.len() as f64)).sqrt())
}

/// Point-to-point ICP with fixed-scale Umeyama updates.
///
/// A step whose RMS would exceed the previous one is discarded and the
/// loop stops, so `rms_history` is non-increasing.
pub fn icp_align<T: Scalar>(
    src: &[Vector3<T>],
    dst: &[Vector3<T>],
    params: &IcpParams,
    init: &RigidTransform<T>,
) -> Result<IcpResult<T>> {
    params.validate()?;
    for cloud in [src, dst] {
        if cloud.len() < 3 {
            return Err(Error::InsufficientPoints {
                needed: 3,
                got: cloud.len(),
            });
        }
    }
    let index = NearestNeighbors::new(dst);
    let mut current = *init;
    let mut moved = current.apply(src);
    let (mut matched, mut rms) = matched_rms(&index, &moved);
    let mut history = vec![rms];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < params.max_iterations {
        iterations += 1;
        let step = umeyama(&moved, &matched, true)?;
        let candidate = step.rigid().compose(&current);
        let cand_moved = candidate.apply(src);
        let (cand_matched, cand_rms) = matched_rms(&index, &cand_moved);
        if cand_rms > rms {
            converged = true;
            break;
        }
        let gain = rms - cand_rms;
        current = candidate;
        moved = cand_moved;
        matched = cand_matched;
        rms = cand_rms;
        history.push(rms);
        if gain.as_f64() < params.convergence_mm {
            converged = true;
            break;
        }
    }

    Ok(IcpResult {
        transform: current,
        rms_history: history,
        iterations,
        converged,
    })
}
