//! Numerical building blocks: special functions, root finding, quadrature,
//! interpolation and sample statistics.

pub mod interp;
pub mod quad;
pub mod roots;
pub mod special;
pub mod stats;
