//! Mixed measures of planar convex bodies under densities
//! `c0 · e^{-φ(‖x‖_L)}`, their decay rates under dilation, and brute-force
//! oracles built straight from the variational definitions.

pub mod asymptotics;
pub mod bodies2d;
pub mod cli;
pub mod densities;
pub mod error;
pub mod log_value;
pub mod mixed;
pub mod oracles;
pub mod quadrature;

pub use bodies2d::{inradius, minkowski_combine, Angle, SupportBody2D, Vec2};
pub use densities::{MeasureSpec, PhiFunction};
pub use error::{Error, Result};
pub use log_value::LogValue;
