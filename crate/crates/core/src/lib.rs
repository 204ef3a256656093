//! Passive-scalar mixing by instantaneously optimal incompressible stirring.
//!
//! Rectangles are handled by a Fourier pseudospectral backend (with even
//! extension for no-flux walls), general planar domains by P1 finite
//! elements. Both implement [`Backend`], on top of which the optimal
//! flows ([`stirring`]), the frozen-flow time loop ([`timestepper`]) and
//! the diagnostics are written.

pub mod backend;
pub mod diagnostics;
pub mod error;
pub mod fem;
pub mod fields;
pub mod io;
pub mod mesh;
pub mod par;
pub mod spectral;
pub mod stirring;
pub mod timestepper;
pub mod validation;

pub use backend::Backend;
pub use diagnostics::{DiagnosticsRecord, RateFit};
pub use error::{Error, Result};
pub use fem::{FemBackend, MeshShape};
pub use fields::{BoundaryCondition, Constraint, ConstraintKind, Domain, RectDomain, ScalarField, VectorField};
pub use mesh::MeshDomain;
pub use spectral::{DealiasRule, SpectralWorkspace};
pub use stirring::StirringResult;
pub use timestepper::{run_simulation, RunSettings, SimClock};
