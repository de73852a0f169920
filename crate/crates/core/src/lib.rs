pub mod composite;
pub mod curves;
pub mod error;
pub mod mc;
pub mod models;
pub mod numerics;
pub mod specfun;
pub mod validation;

pub use error::{Error, Result};
