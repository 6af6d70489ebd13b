//! Riemannian geometry of the n-qubit unitary group under right-invariant penalty metrics.

pub mod curvature;
pub mod deform;
pub mod error;
pub mod extension;
pub mod geodesic;
pub mod io;
pub mod jacobi;
pub mod linalg;
pub mod metric;
pub mod pauli;

pub use error::{Error, Result};
pub use linalg::{HermitianOp, UnitaryOp};
pub use metric::{MetricKind, MetricSpec, PenaltyMetric};
pub use pauli::{PauliAlgebra, PauliVector, PauliWord};
