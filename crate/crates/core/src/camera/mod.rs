//! Pinhole projection, crop/full-image bookkeeping and PnP.

mod crop;
mod epnp;
mod pinhole;
mod pnp;

pub use crop::{crop_to_full, full_to_crop, CropTransform};
pub use epnp::epnp;
pub(crate) use pinhole::MIN_DEPTH;
pub use pinhole::{project_points, Intrinsics};
pub(crate) use pnp::{projection_jacobian, refine_pose};
pub use pnp::{solve_pnp, PnpMode, PnpSolution};
