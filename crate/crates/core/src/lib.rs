//! Fractional Orlicz–Sobolev modulars in the small-smoothness regime.
//!
//! The crate evaluates
//! `J_s(u) = int int A(|u(x) - u(y)| / |x - y|^s) dx dy / |x - y|^n`
//! for Young functions `A` and explicit test functions `u`, studies the
//! behaviour of `s * J_s(u)` as `s -> 0`, and builds the Hardy-type companion
//! Young function attached to `A`.

pub mod error;
pub mod hardy;
pub mod limits;
pub mod modular;
pub mod quad;
pub mod seminorm;
pub mod testfn;
pub mod young;

pub use error::{Error, Result};
pub use quad::QuadratureConfig;
pub use testfn::TestFunction;
pub use young::YoungFunction;

/// Lebesgue measure of the unit ball in `R^n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    use std::f64::consts::PI;
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(n - 2) * 2.0 * PI / n as f64,
    }
}

/// Surface measure of the unit sphere `S^{n-1}`, equal to `n` times the ball
/// volume. For `n = 1` this counts the two points `{-1, 1}`.
pub fn sphere_area(n: usize) -> f64 {
    n as f64 * unit_ball_volume(n)
}
