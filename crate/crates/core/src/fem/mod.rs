//! Lagrange finite elements on triangles.

pub mod assembly;
pub mod field;
pub mod lagrange;
pub mod norms;
pub mod quadrature;
pub mod space;

pub use assembly::{integrate, integrate_cells, project, MassSolver};
pub use field::LagrangeField;
pub use norms::{h1_seminorm, l2_error, l2_error_vector, l2_norm, linf_norm};
pub use quadrature::QuadRule;
pub use space::{LagrangeSpace, Tabulation};
