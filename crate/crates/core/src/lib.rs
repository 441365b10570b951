//! Time-varying measurement of market efficiency.
//!
//! The crate estimates an autoregression whose slope coefficients follow
//! independent random walks around a fixed intercept, turns the per-period
//! coefficients into impulse responses and long-run multipliers, and carries
//! the usual supporting battery: descriptive statistics, the ADF-GLS unit
//! root test, OLS AR fits with Newey-West standard errors, and Hansen's
//! parameter-constancy test.
//!
//! It is `no_std` (with `alloc`); file formats and the command-line pipeline
//! live in the `tvar` crate.
#![no_std]

extern crate alloc;

pub mod armodel;
pub mod constancy;
pub mod critical;
pub mod dist;
pub mod efficiency;
mod error;
pub mod linalg;
pub mod random;
pub mod series;
pub mod simlab;
pub mod stationarity;
pub mod tvar;

pub use error::{Error, Result};
pub use series::{DescriptiveStats, PriceSeries, ReturnSeries};
