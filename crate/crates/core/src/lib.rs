//! Numerical toolkit for time-oriented Finsler spacetimes: fundamental tensors,
//! geodesics, Chern connection and curvature, Jacobi fields, conjugate points,
//! and a numerical verification harness for Fermat's principle on causal curves.

pub mod causal;
pub mod connection;
pub mod curve;
pub mod error;
pub mod fermat;
pub mod geodesic;
pub mod jet;
pub mod model;
pub mod models;
pub mod ode;
pub mod point;
pub mod quadrature;
pub mod scenario;
pub mod validate;
pub mod vertical;

pub use error::{FinslerError, Result};
pub use model::{GenericLagrangian, Lagrangian, Model, NumericLagrangian};
pub use point::{PointedVector, Tolerances};
