// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod airlink;
pub mod bench;
pub mod dsp;
pub mod error;
pub mod frame;
pub mod golay;
pub mod radar;
pub mod seed;
pub mod sync;
