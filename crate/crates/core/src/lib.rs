//! Stored energy of quench-charged quantum batteries built from two-band
//! models, and the non-analyticities it inherits at gap closings.
//!
//! The entry points are [`kernel::total_energy`] for a general band map,
//! the model-specific fast paths in [`models`], the radial Dirac integrals
//! in [`quadrature`], and the scan analysis in [`criticality`].

// `!(a < b)` is used on purpose so that NaN bounds are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod criticality;
pub mod kernel;
pub mod models;
pub mod quadrature;
pub mod scan;
