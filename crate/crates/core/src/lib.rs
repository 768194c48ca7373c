#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod bonnet;
pub mod calculus;
pub mod catalog;
pub mod chart;
pub mod error;
pub mod extraction;
pub mod integrability;
pub mod linalg;
pub mod reconstruction;
pub mod surface;
pub mod winding;

pub use error::{Error, Result};
