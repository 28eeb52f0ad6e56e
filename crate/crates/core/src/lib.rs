//! Fundamental tensors of (α,β)-Finsler metrics `F = α φ(β/α)`.
//!
//! The metric, its inverse, the Cartan tensor and the T-tensor are computed
//! from closed forms in [`engine`], cross-checked against exact multi-dual
//! differentiation of `F²` in [`oracle`], and used by [`classifier`] to decide
//! the Riemannian, T- and σT-conditions on grids of `s = β/α`.
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases below fix `f64`.

pub mod audit;
pub mod classifier;
pub mod engine;
pub mod error;
pub mod fixtures;
pub mod geometry;
pub mod jet;
pub mod linalg;
pub mod multidual;
pub mod ode_lab;
pub mod oracle;
pub mod phi;
pub mod quadrature;
pub mod report;
pub mod scalar;
pub mod suite;
pub mod tensor;

pub use classifier::{classify, ClassificationVerdict, VerdictKind};
pub use engine::{Frame, RhoSet, TCoefficients, TensorBundle};
pub use error::{FinslerError, Result};
pub use geometry::{eval_geometry, make_metric_point, BaseGeometry, Direction, MetricFixture, MetricPoint};
pub use jet::ScalarJet;
pub use linalg::Matrix;
pub use multidual::MultiDual;
pub use oracle::{compare, verify_point, ComparisonReport};
pub use phi::{phi_jet, PhiFamily, PhiSpec, QSpec};
pub use scalar::Scalar;
pub use tensor::{DenseTensor, SymTensor, Tensor3, Tensor4};

pub type MetricPoint64 = MetricPoint<f64>;
pub type Direction64 = Direction<f64>;
pub type PhiSpec64 = PhiSpec<f64>;
pub type QSpec64 = QSpec<f64>;
pub type Matrix64 = Matrix<f64>;
pub type Tensor3_64 = Tensor3<f64>;
pub type Tensor4_64 = Tensor4<f64>;
pub type MetricPoint32 = MetricPoint<f32>;
pub type PhiSpec32 = PhiSpec<f32>;
