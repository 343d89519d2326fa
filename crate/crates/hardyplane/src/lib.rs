//! Phase-plane toolkit for radial solutions of the quasilinear equation
//! with Hardy potential and absorption,
//!   -Delta_p u + mu u^{p-1}/|x|^p + |x|^theta u^q = 0,
//! reduced to an autonomous two-dimensional system in logarithmic time.

pub mod bvp;
pub mod cli;
pub mod flow;
pub mod params;
pub mod phase;
pub mod profiles;
pub mod util;
