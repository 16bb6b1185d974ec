//! Reference-triangle machinery.

pub mod basis;
pub mod interp;
pub mod piola;
pub mod poly;
pub mod quadrature;

pub use basis::{bdm_basis, pk_basis, rt_basis, DofKind, Family, ReferenceBasis};
pub use interp::{interp_hdiv, l2_project};
pub use piola::{piola_push, AffineMap, PhysicalValues};
pub use quadrature::{quadrature_rule, QuadRule};
