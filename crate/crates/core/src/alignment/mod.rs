//! Rigid and similarity alignment: Umeyama's closed form, removal of the
//! rigid motion a lattice perturbation introduces, and point-to-point ICP.

mod canonical;
mod icp;
pub mod nearest;
mod umeyama;

pub use canonical::{canonicalize_deformation, conjugate_offsets, Canonicalized};
pub use icp::{icp_align, IcpParams, IcpResult};
pub use nearest::NearestNeighbors;
pub use umeyama::{umeyama, UmeyamaResult};
