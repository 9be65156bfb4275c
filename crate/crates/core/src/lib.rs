pub mod algebra;
pub mod cli;
pub mod coeffs;
pub mod cones;
pub mod error;
mod fft;
pub mod grid;
pub mod io;
pub mod spaces;
pub mod testcases;
pub mod wavefront;
