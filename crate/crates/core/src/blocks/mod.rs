//! Explicit building blocks: shears, intermittent pipes, bundles and helical pipes.

mod bundle;
mod frame;
mod helical;
mod pipe;
mod profile;
mod shear;

pub use bundle::{cutoff_tiles, make_bundle, make_bundling, Bundle, BundleSpec, BundlingSpec, CutoffTiles};
pub use frame::Frame;
pub use helical::{make_helical, make_helical_relaxed, HelicalDiagnostics, HelicalFields, HelicalPipe, HelicalSpec};
pub use pipe::{make_pipe, PipeDiagnostics, PipeFlow, PipeLattice, PipeSpec, PipeValue};
pub use profile::{bundle_bump, PipeProfile, PROFILE_RADIUS};
pub use shear::{random_shear, shear, ShearMode, ShearSpec};
