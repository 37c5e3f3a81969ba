#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::type_complexity,
    clippy::needless_range_loop
)]

mod dd;
pub mod error;
pub mod frac_time;
pub mod kernels;
pub mod lp_check;
pub mod mittag_leffler;
pub mod noise;
pub mod orders;
pub mod solver;
pub mod spectral;

pub use error::{Diagnosed, Error, Result, Warning};
pub use frac_time::{SampledPath, TimeGrid};
pub use orders::FracOrders;
pub use spectral::{Field, SpectralField, TorusGrid};
