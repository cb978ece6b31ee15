// `!(x > 0.0)` deliberately rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audit;
pub mod beltrami;
pub mod calculus;
pub mod config;
pub mod criteria;
pub mod dilatation;
pub mod domain;
pub mod error;
pub mod export;
mod fft;
pub mod grid;
pub mod harmonic;
pub mod poisson;
pub mod presets;
pub mod qc;
pub mod scalar;
pub mod singular;

pub use domain::{BoundaryData, DomainSpec};
pub use error::{Error, Result, Stage};
pub use grid::{ComplexField, Field, FieldValue, Grid, RealField};
pub use scalar::Real;

pub use num_complex::Complex;

pub type C64 = Complex<f64>;
pub type Grid64 = Grid<f64>;
pub type ComplexField64 = ComplexField<f64>;
pub type RealField64 = RealField<f64>;
