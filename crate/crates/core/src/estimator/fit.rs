use nalgebra::{DMatrix, DVector, Rotation3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{FitParams, KeypointModel, PARAM_COUNT};
use crate::alignment::canonicalize_deformation;
use crate::camera::{refine_pose, solve_pnp};
use crate::datagen::{stable_seed, uniform_rotation, AnnotatedSample};
use crate::geometry::matrix_to_rot6d;
use crate::optim::{levenberg_marquardt, LeastSquares, LmConfig, Termination};
use crate::{CornerOffsets, Error, LatticeBox, Result, RotationMatrix, TriMesh};

/// Fewest keypoints for which `2K` comfortably exceeds the 33 unknowns.
pub const MIN_KEYPOINTS: usize = 17;

/// Below this initial RMS (px) the regularized warm-up stage is skipped.
const WARM_START_RMS: f64 = 1e-6;

/// Rounds of noise re-estimation in the joint refinement.
const MAX_PRIOR_ROUNDS: usize = 8;

/// Effective unknowns: 3 rotation, 3 translation, 24 offsets, less the
/// 3-dimensional trade between uniform offsets and translation.
const EFFECTIVE_PARAMS: usize = 27;

/// Largest rotation (deg) applied to the PnP start by local restarts.
const LOCAL_RESTART_DEG: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub lm: LmConfig,
    /// Weight of the `|delta|^2` prior (px^2 per mm^2) in the warm-up
    /// stage; 0 skips the warm-up.
    pub delta_prior: f64,
    /// Expected spread of each offset component (mm). When set, the joint
    /// refinement keeps a prior of weight `sigma^2 / std^2`, with the pixel
    /// noise `sigma` re-estimated from the residuals after each round; on
    /// noise-free data the weight vanishes. When unset the joint refinement
    /// is unregularized.
    pub delta_prior_std_mm: Option<f64>,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            lm: LmConfig::default(),
            delta_prior: 1e-4,
            delta_prior_std_mm: Some(5.0),
        }
    }
}

impl FitConfig {
    /// Default configuration with the offset spread matched to offsets
    /// drawn uniformly from `[-bound_mm, bound_mm]`.
    pub fn for_deformation_bound(bound_mm: f64) -> Self {
        Self {
            delta_prior_std_mm: Some(bound_mm / 3f64.sqrt()),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.lm.validate()?;
        if !(self.delta_prior >= 0.0) || !self.delta_prior.is_finite() {
            return Err(Error::InvalidValue(
                "delta_prior must be finite and non-negative".into(),
            ));
        }
        if let Some(std) = self.delta_prior_std_mm {
            if !(std > 0.0) || !std.is_finite() {
                return Err(Error::InvalidValue("delta_prior_std_mm must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    /// Final reprojection RMS over keypoints, px.
    pub rms_px: f64,
    /// Final `0.5 |r|^2`.
    pub cost: f64,
    /// LM trial steps over all stages.
    pub iterations: usize,
    /// How the last joint refinement round stopped.
    pub termination: Termination,
    pub converged: bool,
    /// Index of the start this result came from.
    pub start: usize,
    /// Estimated pixel noise from the joint refinement residuals.
    pub noise_sigma_px: f64,
    /// Prior weight used in the last joint round.
    pub delta_prior_weight: f64,
    /// Objective (including the prior) at the start and after each accepted
    /// step of the last joint round.
    pub cost_history: Vec<f64>,
}

struct JointProblem<'a> {
    model: &'a KeypointModel,
    prior_sqrt: f64,
}

impl LeastSquares for JointProblem<'_> {
    type State = FitParams;

    fn residuals(&self, p: &FitParams) -> Result<DVector<f64>> {
        let r = self.model.residuals(p)?;
        if self.prior_sqrt == 0.0 {
            return Ok(r);
        }
        let n = r.len();
        let mut out = DVector::zeros(n + 24);
        out.rows_mut(0, n).copy_from(&r);
        for (i, v) in p.delta.to_flat().into_iter().enumerate() {
            out[n + i] = self.prior_sqrt * v;
        }
        Ok(out)
    }

    fn jacobian(&self, p: &FitParams) -> Result<DMatrix<f64>> {
        let j = self.model.jacobian(p)?;
        if self.prior_sqrt == 0.0 {
            return Ok(j);
        }
        let n = j.nrows();
        let mut out = DMatrix::zeros(n + 24, PARAM_COUNT);
        out.rows_mut(0, n).copy_from(&j);
        for i in 0..24 {
            out[(n + i, 9 + i)] = self.prior_sqrt;
        }
        Ok(out)
    }

    fn retract(&self, p: &FitParams, step: &DVector<f64>) -> FitParams {
        let v = p.to_vector() + step;
        let mut next = FitParams::from_slice(v.as_slice()).expect("33 parameters");
        // Keep the 6D encoding orthonormal; the rotation it encodes is unchanged.
        if let Ok(r) = next.r6d.to_matrix() {
            next.r6d = matrix_to_rot6d(&r);
        }
        next
    }
}

fn rms(r: &DVector<f64>, keypoints: usize) -> f64 {
    if keypoints == 0 {
        0.0
    } else {
        (r.norm_squared() / keypoints as f64).sqrt()
    }
}

struct Context<'a> {
    model: KeypointModel,
    base: &'a TriMesh<f64>,
    lattice: &'a LatticeBox<f64>,
}

impl<'a> Context<'a> {
    fn new(sample: &AnnotatedSample, base: &'a TriMesh<f64>, lattice: &'a LatticeBox<f64>) -> Result<Self> {
        let model = KeypointModel::new(sample, base, lattice)?;
        if model.len() < MIN_KEYPOINTS {
            return Err(Error::InsufficientKeypoints {
                needed: MIN_KEYPOINTS,
                got: model.len(),
            });
        }
        Ok(Self { model, base, lattice })
    }

    fn fit(&self, init: &FitParams, cfg: &FitConfig, start: usize) -> Result<(FitParams, FitReport)> {
        let model = &self.model;
        let k = model.len();
        let mut params = *init;
        let mut iterations = 0;

        if cfg.delta_prior > 0.0 && rms(&model.residuals(init)?, k) > WARM_START_RMS {
            let warm = JointProblem {
                model,
                prior_sqrt: cfg.delta_prior.sqrt(),
            };
            let (p, report) = levenberg_marquardt(&warm, params, &cfg.lm)?;
            params = p;
            iterations += report.iterations;
        }

        let mut joint_report = None;
        let mut weight = 0.0;
        let mut sigma = 0.0;
        for _ in 0..MAX_PRIOR_ROUNDS {
            let r = model.residuals(&params)?;
            sigma = (r.norm_squared() / (2 * k).saturating_sub(EFFECTIVE_PARAMS).max(1) as f64).sqrt();
            let next = cfg.delta_prior_std_mm.map_or(0.0, |std| (sigma / std).powi(2));
            if joint_report.is_some() && (next - weight).abs() <= 0.05 * weight {
                break;
            }
            weight = next;
            let joint = JointProblem {
                model,
                prior_sqrt: weight.sqrt(),
            };
            let (p, report) = levenberg_marquardt(&joint, params, &cfg.lm)?;
            params = p;
            iterations += report.iterations;
            joint_report = Some(report);
            if weight == 0.0 {
                break;
            }
        }
        let joint_report = joint_report.expect("at least one joint round");
        let p = params;

        // Uniform offsets trade exactly against translation; move the
        // solution to the canonical deformation and absorb the rigid part
        // into the pose.
        let canon = canonicalize_deformation(self.base, self.lattice, &p.delta)?;
        let pose = p.pose()?.compose(&canon.removed);
        let candidate = FitParams {
            delta: canon.offsets,
            ..p
        };
        let (pose, pose_report) = refine_pose(
            model.intrinsics(),
            &model.deformed(&candidate),
            model.observed(),
            pose,
            &cfg.lm,
        )?;
        iterations += pose_report.iterations;
        let result = FitParams::new(&pose.rotation, pose.translation, canon.offsets);

        let r = model.residuals(&result)?;
        let converged = joint_report.termination.converged() && pose_report.termination.converged();
        Ok((
            result,
            FitReport {
                rms_px: rms(&r, k),
                cost: 0.5 * r.norm_squared(),
                iterations,
                termination: joint_report.termination,
                converged,
                start,
                noise_sigma_px: sigma,
                delta_prior_weight: weight,
                cost_history: joint_report.cost_history,
            },
        ))
    }

    fn initial_guess(&self, start: usize, seed: u64) -> Result<FitParams> {
        let k = self.model.intrinsics();
        let points = self.model.base_points();
        let observed = self.model.observed();
        let pnp = solve_pnp(k, points, observed, None).map(|s| s.transform);
        if start == 0 {
            let pose = pnp?;
            return Ok(FitParams::new(&pose.rotation, pose.translation, CornerOffsets::zeros()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(stable_seed(seed, start as u64));
        let rotation: RotationMatrix<f64> = match (&pnp, start % 2) {
            (Ok(pose), 1) => {
                let axis = uniform_rotation(&mut rng) * Vector3::z();
                let angle = rng.random_range(0.0..=LOCAL_RESTART_DEG).to_radians();
                Rotation3::new(axis * angle) * pose.rotation
            }
            _ => uniform_rotation(&mut rng),
        };
        let translation = match solve_pnp(k, points, observed, Some(&rotation)) {
            Ok(s) => s.transform.translation,
            Err(e) => pnp.map_err(|_| e)?.translation,
        };
        Ok(FitParams::new(&rotation, translation, CornerOffsets::zeros()))
    }
}

/// Recovers pose and deformation from the sample's observed keypoints by
/// Levenberg-Marquardt on the pixel reprojection error.
///
/// Stages: an optional warm-up with a small `|delta|^2` prior (skipped when
/// `init` already reproduces the observations), an unregularized joint
/// refinement of all 33 parameters, canonicalization of the recovered
/// offsets, and a final pose-only refinement with the offsets held fixed.
/// Running out of iterations is reported through `converged`, with the best
/// estimate still returned.
pub fn fit(
    sample: &AnnotatedSample,
    base: &TriMesh<f64>,
    lattice: &LatticeBox<f64>,
    init: &FitParams,
    cfg: &FitConfig,
) -> Result<(FitParams, FitReport)> {
    cfg.validate()?;
    Context::new(sample, base, lattice)?.fit(init, cfg, 0)
}

/// Start `start` of [`fit_multistart`]: 0 is EPnP on the undeformed
/// keypoints; odd starts rotate that pose by up to 60 degrees about a random
/// axis; even starts draw a uniform rotation. Translations come from the
/// fixed-rotation PnP solve and offsets start at zero.
pub fn initial_guess(
    sample: &AnnotatedSample,
    base: &TriMesh<f64>,
    lattice: &LatticeBox<f64>,
    start: usize,
    seed: u64,
) -> Result<FitParams> {
    Context::new(sample, base, lattice)?.initial_guess(start, seed)
}

/// Runs [`fit`] from `n_starts` deterministic initializations in parallel
/// and keeps the lowest final cost (ties to the lowest start index). Starts
/// that fail are skipped; if all fail the first error is returned.
pub fn fit_multistart(
    sample: &AnnotatedSample,
    base: &TriMesh<f64>,
    lattice: &LatticeBox<f64>,
    n_starts: usize,
    seed: u64,
    cfg: &FitConfig,
) -> Result<(FitParams, FitReport)> {
    cfg.validate()?;
    if n_starts == 0 {
        return Err(Error::InvalidValue("n_starts must be at least 1".into()));
    }
    let ctx = Context::new(sample, base, lattice)?;
    let results: Vec<Result<(FitParams, FitReport)>> = (0..n_starts)
        .into_par_iter()
        .map(|start| ctx.fit(&ctx.initial_guess(start, seed)?, cfg, start))
        .collect();

    let mut best: Option<(FitParams, FitReport)> = None;
    let mut first_error = None;
    for r in results {
        match r {
            Ok(candidate) => {
                if best.as_ref().is_none_or(|b| candidate.1.cost < b.1.cost) {
                    best = Some(candidate);
                }
            }
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }
    best.ok_or_else(|| first_error.expect("at least one start ran"))
}
