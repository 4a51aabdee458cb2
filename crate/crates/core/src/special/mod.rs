//! Special functions and quadrature used by the semiclassical formulas.

pub mod bessel;
pub mod gamma;
pub mod quadrature;

pub use bessel::{bessel_j, bessel_j_third, ThirdOrder, BESSEL_CROSSOVER};
pub use gamma::{gamma, GammaConstants, GAMMA_CONSTANTS};
pub use quadrature::{adaptive_quadrature, integrate_sqrt_endpoints, Endpoints, Quadrature};
