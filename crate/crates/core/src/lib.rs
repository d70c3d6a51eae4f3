pub mod error;
pub mod eval;
pub mod embed;
pub mod graphgeom;
pub mod graphio;
pub mod manifolds;
pub mod matrix;
pub mod sampler;
pub mod smallmat;

pub use error::{Error, Result};
pub use matrix::Matrix;
