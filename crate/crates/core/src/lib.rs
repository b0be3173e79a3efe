//! Weighted metrics on plane domains and growth exponents of analytic maps.
//!
//! Start with [`domain::DomainSpec`], fit a kernel with
//! [`kernel::fit_kernel_on`], pick a [`metric::MetricDensity`] and measure
//! distances with [`geodesic::weighted_distance`]. The [`experiment`] module
//! ties these together into reproducible verification runs.

pub mod domain;
pub mod error;
pub mod experiment;
pub mod geodesic;
pub mod growth;
pub mod kernel;
pub mod maps;
pub mod metric;
pub mod poly;
pub mod quad1d;
pub mod quadrature;

pub use error::{Error, Result};

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/intro.md")]
mod book_intro {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/domains.md")]
mod book_domains {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/kernels.md")]
mod book_kernels {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/metrics.md")]
mod book_metrics {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/maps.md")]
mod book_maps {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/growth.md")]
mod book_growth {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/experiments.md")]
mod book_experiments {}

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
mod readme {}
