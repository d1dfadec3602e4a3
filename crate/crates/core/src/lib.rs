pub mod config;
pub mod error;
pub mod fields;
pub mod generic;
pub mod io;
pub mod mesh;
pub mod operators;
pub mod picard;
pub mod pipeline;
pub mod solver;
pub mod sparse;
pub mod spectral;
pub mod tensor;
pub mod verify;
pub mod weights;

pub use error::{DeformError, Result};
pub use fields::{Mat3, SymTensorField};
pub use mesh::{DomainGrid, Role, SigmaFace};
pub use tensor::{curvature, CurvatureData, MetricField, MetricSpec};
