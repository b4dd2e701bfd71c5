//! Explicit test functions with the analytic data the integrators need:
//! Lipschitz constants, sup norms, supports, decay certificates and kinks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::unit_ball_volume;

/// Default `kappa` for the logarithmically decaying odd function.
pub const DEFAULT_KAPPA: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Shape {
    Zero,
    Constant { value: f64 },
    /// `(1 - |x|)_+` on the line.
    Tent,
    /// `exp(-|x|)`.
    ExpDecay,
    /// `x_1 / (|x| ln^{1/gamma}(kappa + |x|))` outside the unit ball and the
    /// linear function `x_1 / ln^{1/gamma}(kappa + 1)` inside it.
    OddLogDecay { gamma: f64, kappa: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Structure {
    Radial,
    Compact,
    /// The odd function above divided by `lambda`.
    Counterexample { gamma: f64, kappa: f64, lambda: f64 },
    General,
}

/// `amplitude * shape(x)` on `R^dim`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    dim: usize,
    shape: Shape,
    amplitude: f64,
    /// Offset of the centre along the first axis.
    shift: f64,
}

impl TestFunction {
    pub fn zero(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self::raw(dim, Shape::Zero))
    }

    /// A nonzero constant. It has no decay certificate, so integrators fall
    /// back to the configured outer truncation.
    pub fn constant(dim: usize, value: f64) -> Result<Self> {
        check_dim(dim)?;
        if !value.is_finite() {
            return Err(Error::invalid("constant must be finite"));
        }
        Ok(Self::raw(dim, Shape::Constant { value }))
    }

    pub fn tent() -> Self {
        Self::raw(1, Shape::Tent)
    }

    pub fn exp_decay(dim: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::invalid(format!("exp_decay supports n in 1..=3, got {dim}")));
        }
        Ok(Self::raw(dim, Shape::ExpDecay))
    }

    pub fn counterexample_v(dim: usize, gamma: f64, kappa: f64) -> Result<Self> {
        check_dim(dim)?;
        if !(gamma > 1.0 && gamma.is_finite()) {
            return Err(Error::invalid(format!("gamma must exceed 1, got {gamma}")));
        }
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::invalid(format!("kappa must be positive, got {kappa}")));
        }
        Ok(Self::raw(dim, Shape::OddLogDecay { gamma, kappa }))
    }

    fn raw(dim: usize, shape: Shape) -> Self {
        Self {
            dim,
            shape,
            amplitude: 1.0,
            shift: 0.0,
        }
    }

    /// `u / lambda`.
    pub fn scale(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::invalid(format!("scale factor must be positive, got {lambda}")));
        }
        Ok(Self {
            amplitude: self.amplitude / lambda,
            ..*self
        })
    }

    /// `u(x - offset e_1)`. Modulars are translation invariant, so the
    /// deterministic engines work with the centred function; only pointwise
    /// evaluation and Monte Carlo sampling see the offset.
    pub fn translate(&self, offset: f64) -> Result<Self> {
        if !offset.is_finite() {
            return Err(Error::invalid("offset must be finite"));
        }
        Ok(Self {
            shift: self.shift + offset,
            ..*self
        })
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn structure(&self) -> Structure {
        match self.shape {
            Shape::Zero | Shape::Tent => Structure::Compact,
            Shape::ExpDecay => Structure::Radial,
            Shape::OddLogDecay { gamma, kappa } => Structure::Counterexample {
                gamma,
                kappa,
                lambda: 1.0 / self.amplitude,
            },
            Shape::Constant { .. } => Structure::General,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.shape, Shape::Zero)
            || matches!(self.shape, Shape::Constant { value } if value == 0.0)
    }

    /// All increments `u(x) - u(y)` vanish.
    pub fn is_constant(&self) -> bool {
        matches!(self.shape, Shape::Zero | Shape::Constant { .. })
    }

    /// True when `u(x)` depends on `|x|` only.
    pub fn is_radial(&self) -> bool {
        !matches!(self.shape, Shape::OddLogDecay { .. })
    }

    fn inner_slope(gamma: f64, kappa: f64) -> f64 {
        (kappa + 1.0).ln().powf(-1.0 / gamma)
    }

    /// Value at a point with `|x| = rho` and `x_1 = rho * cos_theta`.
    pub fn polar(&self, rho: f64, cos_theta: f64) -> f64 {
        let v = match self.shape {
            Shape::Zero => 0.0,
            Shape::Constant { value } => value,
            Shape::Tent => (1.0 - rho).max(0.0),
            Shape::ExpDecay => (-rho).exp(),
            Shape::OddLogDecay { gamma, kappa } => {
                if rho >= 1.0 {
                    cos_theta * (kappa + rho).ln().powf(-1.0 / gamma)
                } else {
                    cos_theta * rho * Self::inner_slope(gamma, kappa)
                }
            }
        };
        self.amplitude * v
    }

    /// Radial profile `f` with `u(x) = f(|x|)`.
    pub fn profile(&self, rho: f64) -> f64 {
        debug_assert!(self.is_radial());
        self.polar(rho, 1.0)
    }

    /// Value of the centred function on the line; only meaningful for
    /// `dim == 1`.
    pub fn eval_1d(&self, x: f64) -> f64 {
        self.polar(x.abs(), if x < 0.0 { -1.0 } else { 1.0 })
    }

    /// `u(x + r) - u(x)` for the centred function on the line, `r > 0`.
    /// Inside a smooth piece the increment is formed from `r` itself, so it
    /// keeps full relative accuracy when `x + r` rounds to `x`.
    pub fn increment_1d(&self, x: f64, r: f64) -> f64 {
        let y = x + r;
        let a = self.amplitude;
        let plain = || self.eval_1d(y) - self.eval_1d(x);
        match self.shape {
            Shape::Zero | Shape::Constant { .. } => 0.0,
            Shape::Tent => {
                if y <= -1.0 || x >= 1.0 {
                    0.0
                } else if x >= -1.0 && y <= 0.0 {
                    a * r
                } else if x >= 0.0 && y <= 1.0 {
                    -a * r
                } else {
                    plain()
                }
            }
            Shape::ExpDecay => {
                if x >= 0.0 {
                    a * (-x).exp() * (-r).exp_m1()
                } else if y <= 0.0 {
                    a * x.exp() * r.exp_m1()
                } else {
                    plain()
                }
            }
            Shape::OddLogDecay { gamma, kappa } => {
                // f(rho + r) - f(rho) for f = ln^{-1/gamma}(kappa + rho), rho >= 1
                let outer = |rho: f64| {
                    let l = (kappa + rho).ln();
                    let ratio = (r / (kappa + rho)).ln_1p() / l;
                    l.powf(-1.0 / gamma) * (-ratio.ln_1p() / gamma).exp_m1()
                };
                if x >= 1.0 {
                    a * outer(x)
                } else if y <= -1.0 {
                    a * outer(-y)
                } else if x >= -1.0 && y <= 1.0 {
                    a * Self::inner_slope(gamma, kappa) * r
                } else {
                    plain()
                }
            }
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim, "point has wrong dimension");
        let first = x[0] - self.shift;
        let rho = (first * first + x[1..].iter().map(|c| c * c).sum::<f64>()).sqrt();
        let cos_theta = if rho > 0.0 { first / rho } else { 0.0 };
        self.polar(rho, cos_theta)
    }

    pub fn lipschitz_constant(&self) -> f64 {
        let a = self.amplitude.abs();
        match self.shape {
            Shape::Zero | Shape::Constant { .. } => 0.0,
            Shape::Tent | Shape::ExpDecay => a,
            Shape::OddLogDecay { gamma, kappa } => {
                let h = Self::inner_slope(gamma, kappa);
                if self.dim == 1 {
                    a * h
                } else {
                    // |grad v| <= 2/(rho L(rho)) + L'(rho)/L(rho)^2 outside the ball
                    // with L = ln^{1/gamma}(kappa + rho); both terms peak at rho = 1.
                    a * (2.0 * h + h.powf(gamma + 1.0) / (gamma * (kappa + 1.0)))
                }
            }
        }
    }

    pub fn sup_norm(&self) -> f64 {
        let a = self.amplitude.abs();
        match self.shape {
            Shape::Zero => 0.0,
            Shape::Constant { value } => a * value.abs(),
            Shape::Tent | Shape::ExpDecay => a,
            Shape::OddLogDecay { gamma, kappa } => a * Self::inner_slope(gamma, kappa),
        }
    }

    /// Radius of a ball containing the support, when compact.
    pub fn support_radius(&self) -> Option<f64> {
        match self.shape {
            Shape::Zero => Some(0.0),
            Shape::Tent => Some(1.0),
            _ => None,
        }
    }

    /// `sup_{|x| >= r} |u(x)|`.
    pub fn tail_sup(&self, r: f64) -> f64 {
        let a = self.amplitude.abs();
        match self.shape {
            Shape::Zero => 0.0,
            Shape::Constant { value } => a * value.abs(),
            Shape::Tent => a * (1.0 - r).max(0.0),
            Shape::ExpDecay => a * (-r.max(0.0)).exp(),
            Shape::OddLogDecay { gamma, kappa } => a * (kappa + r.max(1.0)).ln().powf(-1.0 / gamma),
        }
    }

    /// `ln |{x : |u(x)| > t}|`, or `None` when `u` does not decay.
    pub fn ln_decay_certificate(&self, t: f64) -> Option<f64> {
        if !(t > 0.0) {
            return None;
        }
        let a = self.amplitude.abs();
        let n = self.dim as f64;
        let ln_ball = unit_ball_volume(self.dim).ln();
        match self.shape {
            Shape::Zero => Some(f64::NEG_INFINITY),
            Shape::Constant { value } => {
                if a * value.abs() <= t {
                    Some(f64::NEG_INFINITY)
                } else {
                    None
                }
            }
            Shape::Tent => Some(if t < a { (2.0 * (1.0 - t / a)).ln() } else { f64::NEG_INFINITY }),
            Shape::ExpDecay => Some(if t < a {
                ln_ball + n * (a / t).ln().ln()
            } else {
                f64::NEG_INFINITY
            }),
            Shape::OddLogDecay { gamma, kappa } => {
                if t >= a * Self::inner_slope(gamma, kappa) {
                    Some(f64::NEG_INFINITY)
                } else {
                    // |u| > t forces ln(kappa + |x|) < (a/t)^gamma.
                    Some(ln_ball + n * (a / t).powf(gamma))
                }
            }
        }
    }

    /// Upper bound for `|{x : |u(x)| > t}|`; values beyond the double range
    /// are clamped to `f64::MAX`.
    pub fn decay_certificate(&self, t: f64) -> Option<f64> {
        self.ln_decay_certificate(t).map(|l| l.exp().min(f64::MAX))
    }

    /// `int |grad u|`, when finite.
    pub fn gradient_l1(&self) -> Option<f64> {
        let a = self.amplitude.abs();
        match self.shape {
            Shape::Zero | Shape::Constant { .. } => Some(0.0),
            Shape::Tent => Some(2.0 * a),
            Shape::ExpDecay => {
                let fact: f64 = (1..self.dim).map(|k| k as f64).product();
                Some(a * crate::sphere_area(self.dim) * fact)
            }
            Shape::OddLogDecay { gamma, kappa } if self.dim == 1 => Some(4.0 * a * Self::inner_slope(gamma, kappa)),
            Shape::OddLogDecay { .. } => None,
        }
    }

    /// Points of the line where the centred one-dimensional restriction is
    /// not smooth.
    pub fn kinks_1d(&self) -> Vec<f64> {
        match self.shape {
            Shape::Tent => vec![-1.0, 0.0, 1.0],
            Shape::ExpDecay => vec![0.0],
            Shape::OddLogDecay { .. } => vec![-1.0, 1.0],
            _ => Vec::new(),
        }
    }

    /// Mean-value bound for the odd function:
    /// `|v(x) - v(y)| <= 3|x - y| / (m ln^{1/gamma}(kappa + m))`, where `m` is
    /// the distance from the origin to the segment `[x, y]`, valid when that
    /// segment avoids the closed unit ball.
    pub fn mean_value_bound(&self, x: &[f64], y: &[f64]) -> Option<f64> {
        let Shape::OddLogDecay { gamma, kappa } = self.shape else {
            return None;
        };
        let mut x = x.to_vec();
        let mut y = y.to_vec();
        x[0] -= self.shift;
        y[0] -= self.shift;
        let d: Vec<f64> = x.iter().zip(&y).map(|(a, b)| b - a).collect();
        let dd: f64 = d.iter().map(|c| c * c).sum();
        let tau = if dd > 0.0 {
            (-x.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>() / dd).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let m = x
            .iter()
            .zip(&d)
            .map(|(a, b)| (a + tau * b).powi(2))
            .sum::<f64>()
            .sqrt();
        if m <= 1.0 {
            return None;
        }
        Some(self.amplitude.abs() * 3.0 * dd.sqrt() / (m * (kappa + m).ln().powf(1.0 / gamma)))
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        Err(Error::invalid("dimension must be at least 1"))
    } else {
        Ok(())
    }
}

/// Smallest `kappa` with `sup |v| / lambda < 1/(2e)`, so that `v / lambda`
/// only probes the exponential part of the counterexample Young function.
pub fn kappa_threshold(gamma: f64, lambda: f64) -> f64 {
    (2.0 * std::f64::consts::E / lambda).powf(gamma).exp() - 1.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tent_data() {
        let u = TestFunction::tent();
        assert_eq!(u.dim(), 1);
        assert_eq!(u.lipschitz_constant(), 1.0);
        assert_eq!(u.support_radius(), Some(1.0));
        assert_eq!(u.sup_norm(), 1.0);
        assert!((u.decay_certificate(0.5).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(u.eval(&[0.25]), 0.75);
        assert_eq!(u.eval(&[-2.0]), 0.0);
    }

    #[test]
    fn exp_decay_certificate() {
        let u = TestFunction::exp_decay(2).unwrap();
        let t: f64 = 0.1;
        let want = std::f64::consts::PI * (1.0 / t).ln().powi(2);
        assert!((u.decay_certificate(t).unwrap() / want - 1.0).abs() < 1e-14);
        assert_eq!(u.decay_certificate(1.5).unwrap(), 0.0);
        assert!(TestFunction::exp_decay(4).is_err());
    }

    #[test]
    fn counterexample_value_and_symmetry() {
        let v = TestFunction::counterexample_v(2, 2.0, DEFAULT_KAPPA).unwrap();
        assert!((v.eval(&[2.0, 0.0]) - 0.269_039_779_906_478_4).abs() < 1e-12);
        assert_eq!(v.eval(&[-2.0, 0.5]), -v.eval(&[2.0, -0.5]));
    }

    #[test]
    fn scaling_rules() {
        let u = TestFunction::exp_decay(1).unwrap();
        let w = u.scale(4.0).unwrap();
        assert_eq!(w.eval(&[0.3]), u.eval(&[0.3]) / 4.0);
        assert_eq!(w.lipschitz_constant(), 0.25);
        let t = 0.1;
        assert_eq!(w.decay_certificate(t), u.decay_certificate(4.0 * t));
        assert!(u.scale(0.0).is_err());
    }

    #[test]
    fn increments_match_differences() {
        let shapes = [
            TestFunction::tent(),
            TestFunction::exp_decay(1).unwrap(),
            TestFunction::counterexample_v(1, 2.0, 10.0).unwrap().scale(0.5).unwrap(),
        ];
        for u in shapes {
            for x in [-3.0, -1.2, -0.7, -0.1, 0.2, 0.9, 1.5, 4.0] {
                for r in [0.05, 0.3, 2.5] {
                    let plain = u.eval_1d(x + r) - u.eval_1d(x);
                    assert!((u.increment_1d(x, r) - plain).abs() < 1e-13, "{u:?} {x} {r}");
                }
            }
        }
        let tiny = TestFunction::exp_decay(1).unwrap().increment_1d(2.0, 1e-20);
        assert!((tiny / (-2.0f64).exp() + 1e-20).abs() < 1e-33);
    }

    #[test]
    fn kappa_threshold_value() {
        let k = kappa_threshold(2.0, 1.5);
        assert!((k / 5.06e5 - 1.0).abs() < 0.01, "{k}");
    }
}
