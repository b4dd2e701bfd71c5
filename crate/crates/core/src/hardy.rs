//! The Hardy companion `B` of a Young function `A` and the fractional Hardy
//! inequality `int B(|u|/|x|^s) dx <= (1-s) J_s(C u)`.
//!
//! With `q = s/(n-s)`, `Phi(t) = int_0^t a^{-q}` and
//! `b^{-1}(r) = (int_{a^{-1}(r)}^inf Phi^{-n/s} a^{-n/(n-s)} dt)^{s/(s-n)}`,
//! `B = int b`. Everything is tabulated on a logarithmic grid and carried in
//! log space; between nodes every tabulated quantity is treated as a local
//! power law, which is exact for power-type `A`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modular::{self, Gauge, Method, ModularResult};
use crate::quad::{self, QuadratureConfig, Tolerance};
use crate::seminorm;
use crate::testfn::TestFunction;
use crate::young::{log_add_exp, YoungFunction};

/// Convention for `a^{-1}` when `a` has plateaus or is bounded.
pub const INVERSE_CONVENTION: &str = "a^{-1}(r) = inf{t : a(t) >= r}; +inf above sup a";

/// Relative slack allowed when comparing the two sides of the inequality.
const HARDY_SLACK: f64 = 1e-3;
/// Spatial cut-off below which the weighted integrand is extended as a power law.
const LN_RHO_FLOOR: f64 = -40.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConditionMethod {
    Analytic,
    Probe,
}

/// The two integrability conditions on `(t/A(t))^{s/(n-s)}`: divergence at
/// infinity and convergence at zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub at_infinity: Verdict,
    pub near_zero: Verdict,
    pub method: ConditionMethod,
}

impl ConditionReport {
    pub fn admissible(&self) -> bool {
        self.at_infinity == Verdict::Holds && self.near_zero == Verdict::Holds
    }
}

fn check_params(s: f64, n: usize) -> Result<()> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::invalid(format!("s must lie in (0,1), got {s}")));
    }
    if !(1..=3).contains(&n) {
        return Err(Error::invalid(format!("dimension must be 1, 2 or 3, got {n}")));
    }
    Ok(())
}

/// Decides both conditions, from the power asymptotics when `A` has them and
/// otherwise from the trend of decade-wise partial integrals.
pub fn check_conditions(a: &YoungFunction, s: f64, n: usize) -> Result<ConditionReport> {
    check_params(s, n)?;
    let q = s / (n as f64 - s);
    if let Some((p0, p_inf)) = a.asymptotics() {
        let verdict = |ok: bool| if ok { Verdict::Holds } else { Verdict::Fails };
        return Ok(ConditionReport {
            at_infinity: verdict((p_inf - 1.0) * q <= 1.0),
            near_zero: verdict((p0 - 1.0) * q < 1.0),
            method: ConditionMethod::Analytic,
        });
    }
    let ln_f = |sigma: f64| sigma + q * (sigma - a.ln_eval(sigma.exp()));
    let decade = std::f64::consts::LN_10;
    let ln_decade = |lo: f64| {
        let est = quad::ln_integrate(ln_f, &[lo, lo + decade], Tolerance::new(0.0, 1e-8, 200));
        if est.ln_value.is_nan() {
            // Too steep to integrate; the endpoint maximum still shows the trend.
            ln_f(lo).max(ln_f(lo + decade)) + decade.ln()
        } else {
            est.ln_value
        }
    };
    // Successive log-ratios of decade integrals, moving away from t = 1.
    let trend = |direction: f64| -> Vec<f64> {
        let vals: Vec<f64> = (0..16)
            .map(|k| {
                let lo = if direction > 0.0 { k as f64 * decade } else { -(k as f64 + 1.0) * decade };
                ln_decade(lo)
            })
            .collect();
        vals.windows(2)
            .map(|w| match (w[0].is_finite(), w[1].is_finite()) {
                (true, true) => w[1] - w[0],
                (_, false) if w[1] == f64::INFINITY => f64::INFINITY,
                (true, false) => f64::NEG_INFINITY,
                (false, _) if w[0] == f64::INFINITY => f64::INFINITY,
                _ => f64::NEG_INFINITY,
            })
            .collect()
    };
    let classify = |deltas: &[f64], diverges_is_holds: bool| {
        let tail = &deltas[deltas.len() - 6..];
        let max = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = tail.iter().copied().fold(f64::INFINITY, f64::min);
        let converges = max < -1e-3;
        let diverges = min >= -1e-9;
        match (converges, diverges) {
            (true, _) => {
                if diverges_is_holds {
                    Verdict::Fails
                } else {
                    Verdict::Holds
                }
            }
            (_, true) => {
                if diverges_is_holds {
                    Verdict::Holds
                } else {
                    Verdict::Fails
                }
            }
            _ => Verdict::Inconclusive,
        }
    };
    Ok(ConditionReport {
        at_infinity: classify(&trend(1.0), true),
        near_zero: classify(&trend(-1.0), false),
        method: ConditionMethod::Probe,
    })
}

/// Logarithmic grid on which the companion is tabulated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompanionGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub points_per_decade: usize,
}

impl Default for CompanionGrid {
    fn default() -> Self {
        Self {
            t_min: 1e-8,
            t_max: 1e8,
            points_per_decade: 24,
        }
    }
}

/// `ln int_{x0}^{x1} e^{y(x)} dx` for `y` linear between `(x0, y0)` and
/// `(x1, y1)`, i.e. a power law in `e^x`.
fn ln_power_segment(x0: f64, y0: f64, x1: f64, y1: f64) -> f64 {
    let h = x1 - x0;
    if h <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let d = (y1 - y0).abs();
    let top = y0.max(y1);
    if d < 1e-12 {
        return top + h.ln();
    }
    top + h.ln() + (-(-d).exp_m1() / d).ln()
}

/// Piecewise-linear interpolation in log-log coordinates, extended past the
/// ends with the slope of the end segment.
fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let last = xs.len() - 1;
    let j = xs.partition_point(|&v| v <= x).clamp(1, last);
    let (x0, x1, y0, y1) = (xs[j - 1], xs[j], ys[j - 1], ys[j]);
    if x1 == x0 {
        return y1;
    }
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HardyCompanion {
    s: f64,
    n: usize,
    conditions: ConditionReport,
    grid: CompanionGrid,
    /// `ln r` nodes and `ln b^{-1}(r)`.
    ln_r: Vec<f64>,
    ln_b_inverse: Vec<f64>,
    /// `ln B` at `t = b^{-1}(r_j)`.
    ln_big_b: Vec<f64>,
    /// Local exponent of `b` below the first node.
    low_exponent: f64,
}

/// Builds the companion on the default grid.
pub fn build_companion(a: &YoungFunction, s: f64, n: usize, cfg: &QuadratureConfig) -> Result<HardyCompanion> {
    build_companion_on(a, s, n, cfg, &CompanionGrid::default())
}

pub fn build_companion_on(
    a: &YoungFunction,
    s: f64,
    n: usize,
    cfg: &QuadratureConfig,
    grid: &CompanionGrid,
) -> Result<HardyCompanion> {
    cfg.validate()?;
    let conditions = check_conditions(a, s, n)?;
    if conditions.near_zero != Verdict::Holds {
        return Err(Error::ConstructionFailure(
            "int_0 (t/A(t))^{s/(n-s)} dt is not finite, so Phi is undefined".into(),
        ));
    }
    if conditions.at_infinity != Verdict::Holds {
        return Err(Error::ConstructionFailure(
            "int^inf (t/A(t))^{s/(n-s)} dt does not diverge".into(),
        ));
    }
    if !(grid.t_min > 0.0 && grid.t_max > grid.t_min * 1e4 && grid.points_per_decade >= 4) {
        return Err(Error::invalid("companion grid needs t_min > 0, four decades and 4 points per decade"));
    }
    let nf = n as f64;
    let q = s / (nf - s);
    let ppd = grid.points_per_decade;
    let step = std::f64::consts::LN_10 / ppd as f64;
    let count = ((grid.t_max / grid.t_min).ln() / step).ceil() as usize + 1;
    let sigma: Vec<f64> = (0..count).map(|i| grid.t_min.ln() + i as f64 * step).collect();
    let ln_a: Vec<f64> = sigma.iter().map(|&x| a.ln_deriv(x.exp())).collect();
    if ln_a.iter().any(|v| !v.is_finite()) {
        return Err(Error::ConstructionFailure("a vanishes or overflows on the companion grid".into()));
    }

    // Phi, starting from the power law of `a` below the grid.
    let beta = (ln_a[1] - ln_a[0]) / step;
    if beta * q >= 1.0 {
        return Err(Error::ConstructionFailure("a^{-s/(n-s)} is not integrable at 0".into()));
    }
    let tol = Tolerance::new(0.0, cfg.rel_tol.min(1e-8), cfg.max_subdivisions);
    let mut ln_phi = vec![sigma[0] - q * ln_a[0] - (1.0 - beta * q).ln()];
    for w in sigma.windows(2) {
        let est = quad::ln_integrate(|x| x - q * a.ln_deriv(x.exp()), &quad::with_breaks(w[0], w[1], &a.breakpoints().iter().filter(|b| **b > 0.0).map(|b| b.ln()).collect::<Vec<_>>()), tol);
        if !est.converged {
            return Err(Error::numeric("companion inner integral", est.ln_value.exp(), est.rel_error));
        }
        let prev = *ln_phi.last().unwrap();
        ln_phi.push(log_add_exp(prev, est.ln_value));
    }

    // Outer integrand in sigma-measure, then its cumulative integral from the top.
    let ln_g: Vec<f64> = (0..count)
        .map(|i| sigma[i] - nf / s * ln_phi[i] - nf / (nf - s) * ln_a[i])
        .collect();
    let last = count - 1;
    let decay = (ln_g[last] - ln_g[last - ppd]) / (sigma[last] - sigma[last - ppd]);
    if decay >= 0.0 {
        return Err(Error::ConstructionFailure(format!(
            "outer integrand does not decay: fitted exponent {} >= -1",
            decay - 1.0
        )));
    }
    let mut ln_outer = vec![0.0; count];
    ln_outer[last] = ln_g[last] - (-decay).ln();
    for i in (0..last).rev() {
        let seg = ln_power_segment(sigma[i], ln_g[i], sigma[i + 1], ln_g[i + 1]);
        ln_outer[i] = log_add_exp(ln_outer[i + 1], seg);
    }

    // r grid kept one decade inside the t grid so that a^{-1}(r) has room.
    let r_lo = a.deriv(sigma[ppd].exp());
    let r_hi = a.deriv(sigma[last - ppd].exp());
    if !(r_lo > 0.0 && r_hi > r_lo) {
        return Err(Error::ConstructionFailure("a is constant on the companion grid".into()));
    }
    let r_count = ((r_hi / r_lo).ln() / step).ceil() as usize + 1;
    let r_step = (r_hi / r_lo).ln() / (r_count - 1) as f64;
    let ln_r: Vec<f64> = (0..r_count).map(|j| r_lo.ln() + j as f64 * r_step).collect();
    let exponent = s / (s - nf);
    let ln_b_inverse: Vec<f64> = ln_r
        .iter()
        .map(|&lr| {
            let lt = ln_inverse_derivative(a, lr, sigma[0], sigma[last]);
            let i = sigma.partition_point(|&v| v <= lt).clamp(1, last) - 1;
            let g_t = interp(&sigma, &ln_g, lt);
            let partial = ln_power_segment(lt, g_t, sigma[i + 1], ln_g[i + 1]);
            exponent * log_add_exp(partial, ln_outer[i + 1])
        })
        .collect();
    for w in ln_b_inverse.windows(2) {
        if w[1] < w[0] - 1e-9 * w[0].abs().max(1.0) {
            return Err(Error::numeric("companion inverse is not monotone", w[0].exp(), (w[0] - w[1]).abs()));
        }
    }

    // B = int b, integrating r as a function of t = b^{-1}(r).
    let first_distinct = (1..r_count).find(|&j| ln_b_inverse[j] > ln_b_inverse[0] + 1e-12);
    let low_exponent = match first_distinct {
        Some(j) => (ln_r[j] - ln_r[0]) / (ln_b_inverse[j] - ln_b_inverse[0]),
        None => return Err(Error::ConstructionFailure("b^{-1} is constant on the grid".into())),
    };
    let mut ln_big_b = vec![ln_b_inverse[0] + ln_r[0] - (1.0 + low_exponent).ln()];
    for j in 1..r_count {
        let (x0, x1) = (ln_b_inverse[j - 1], ln_b_inverse[j]);
        let seg = ln_power_segment(x0, x0 + ln_r[j - 1], x1, x1 + ln_r[j]);
        let prev = ln_big_b[j - 1];
        ln_big_b.push(log_add_exp(prev, seg));
    }
    Ok(HardyCompanion {
        s,
        n,
        conditions,
        grid: *grid,
        ln_r,
        ln_b_inverse,
        ln_big_b,
        low_exponent,
    })
}

/// `ln a^{-1}(e^{ln_r})` by bisection in `ln t`, clamped to the grid.
fn ln_inverse_derivative(a: &YoungFunction, ln_r: f64, lo: f64, hi: f64) -> f64 {
    let (mut lo, mut hi) = (lo, hi);
    if a.ln_deriv(lo.exp()) >= ln_r {
        return lo;
    }
    while hi - lo > 1e-13 * hi.abs().max(1.0) {
        let mid = 0.5 * (lo + hi);
        if a.ln_deriv(mid.exp()) >= ln_r {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

impl HardyCompanion {
    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn conditions(&self) -> ConditionReport {
        self.conditions
    }

    pub fn grid(&self) -> CompanionGrid {
        self.grid
    }

    pub fn inverse_convention(&self) -> &'static str {
        INVERSE_CONVENTION
    }

    /// Range of `r` on which `b^{-1}` is tabulated.
    pub fn r_range(&self) -> (f64, f64) {
        (self.ln_r[0].exp(), self.ln_r[self.ln_r.len() - 1].exp())
    }

    /// Range of `t` on which `b` and `B` are tabulated.
    pub fn t_range(&self) -> (f64, f64) {
        (self.ln_b_inverse[0].exp(), self.ln_b_inverse[self.ln_b_inverse.len() - 1].exp())
    }

    pub fn b_inverse(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        interp(&self.ln_r, &self.ln_b_inverse, r.ln()).exp()
    }

    /// `b(t) = inf{r : b^{-1}(r) >= t}`.
    pub fn b(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        self.ln_b(t.ln()).exp()
    }

    fn ln_b(&self, ln_t: f64) -> f64 {
        let xs = &self.ln_b_inverse;
        let j = xs.partition_point(|&v| v < ln_t);
        if j == 0 {
            return self.ln_r[0] + self.low_exponent * (ln_t - xs[0]);
        }
        interp(xs, &self.ln_r, ln_t)
    }

    /// `B(t) = int_0^t b`.
    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        self.ln_eval(t).exp()
    }

    pub fn ln_eval(&self, t: f64) -> f64 {
        let lt = t.ln();
        let xs = &self.ln_b_inverse;
        if lt <= xs[0] {
            return self.ln_big_b[0] + (1.0 + self.low_exponent) * (lt - xs[0]);
        }
        let j = xs.partition_point(|&v| v < lt).min(xs.len() - 1).max(1) - 1;
        let seg = ln_power_segment(xs[j], xs[j] + self.ln_r[j], lt, lt + self.ln_b(lt));
        log_add_exp(self.ln_big_b[j], seg)
    }

    /// `r,b_inverse` rows at the tabulated nodes.
    pub fn b_inverse_csv(&self) -> String {
        let mut out = String::from("r,b_inverse\n");
        for (r, b) in self.ln_r.iter().zip(&self.ln_b_inverse) {
            out.push_str(&format!("{:?},{:?}\n", r.exp(), b.exp()));
        }
        out
    }

    /// `t,B` rows at the tabulated nodes.
    pub fn companion_csv(&self) -> String {
        let mut out = String::from("t,B\n");
        for (t, b) in self.ln_b_inverse.iter().zip(&self.ln_big_b) {
            out.push_str(&format!("{:?},{:?}\n", t.exp(), b.exp()));
        }
        out
    }
}

impl Gauge for HardyCompanion {
    fn value(&self, t: f64) -> f64 {
        self.eval(t)
    }
    fn ln_value(&self, t: f64) -> f64 {
        if t <= 0.0 {
            f64::NEG_INFINITY
        } else {
            self.ln_eval(t)
        }
    }
    fn ln_slope(&self, t: f64) -> f64 {
        if t <= 0.0 {
            f64::NEG_INFINITY
        } else {
            self.ln_b(t.ln())
        }
    }
}

/// `int G(|u(x)| / |x|^s) dx`.
///
/// The origin is handled in `ln |x|`, extending the integrand below
/// `|x| = e^{-40}` by its local power law. Outside the unit ball the weight
/// is at most one, so the layer-cake bound of `int G(|u|)` covers the tail.
pub fn weighted_modular<G: Gauge + ?Sized>(u: &TestFunction, g: &G, s: f64, cfg: &QuadratureConfig) -> Result<ModularResult> {
    cfg.validate()?;
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::invalid(format!("s must lie in (0,1), got {s}")));
    }
    if u.is_zero() {
        return Ok(modular::ModularResult {
            value: 0.0,
            abs_error_estimate: 0.0,
            truncation_radius: 0.0,
            evaluations: 0,
            method: Method::Deterministic,
            standard_error: None,
            warnings: Vec::new(),
        });
    }
    let tol = cfg.tolerance();
    let density = modular::shell_density(u, tol, |rho, c| g.value(u.polar(rho, c).abs() * rho.powf(-s)));
    let integrate_to = |radius: f64| -> Result<(f64, f64, u64)> {
        let top = radius.ln();
        let h = |x: f64| {
            let rho = x.exp();
            density(rho) * rho
        };
        let mut breaks: Vec<f64> = vec![0.0];
        breaks.extend(u.kinks_1d().iter().filter(|k| **k > 0.0).map(|k| k.ln()));
        let pts = quad::with_breaks(LN_RHO_FLOOR, top, &breaks);
        let est = quad::integrate(h, &pts, tol).require("weighted modular")?;
        // Power-law extension below the floor.
        let (h0, h1) = (h(LN_RHO_FLOOR), h(LN_RHO_FLOOR + 1.0));
        let below = if h0 > 0.0 && h1 > 0.0 {
            let k = (h1 / h0).ln();
            if k <= 0.0 {
                return Err(Error::numeric("weighted modular near the origin", est.value, f64::INFINITY));
            }
            h0 / k
        } else {
            0.0
        };
        Ok((est.value + below, est.abs_error + below * 1e-3, est.evaluations as u64))
    };
    if let Some(radius) = u.support_radius() {
        let (value, err, evals) = integrate_to(radius)?;
        return Ok(ModularResult {
            value,
            abs_error_estimate: err,
            truncation_radius: radius,
            evaluations: evals,
            method: Method::Deterministic,
            standard_error: None,
            warnings: Vec::new(),
        });
    }
    let mut ln_radius = 1.0f64;
    let mut evaluations = 0;
    loop {
        let radius = ln_radius.exp();
        let (value, err, evals) = integrate_to(radius)?;
        evaluations += evals;
        let tail = modular::tail_bound(u, g, 1.0, radius);
        if tail <= 0.25 * cfg.abs_tol.max(cfg.rel_tol * value) {
            return Ok(ModularResult {
                value,
                abs_error_estimate: err + tail,
                truncation_radius: radius,
                evaluations,
                method: Method::Deterministic,
                standard_error: None,
                warnings: Vec::new(),
            });
        }
        if ln_radius >= 512.0 {
            return Err(Error::numeric("weighted modular tail bound", value, tail));
        }
        ln_radius *= 2.0;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardyRow {
    pub c: f64,
    /// `(1-s) J_s(C u)`.
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardyCheck {
    /// Least grid constant for which the inequality holds; `None` when no
    /// grid value works.
    pub constant: Option<f64>,
    /// `int B(|u|/|x|^s)`.
    pub lhs: f64,
    pub rows: Vec<HardyRow>,
}

/// Builds the companion of `a` and searches `c_grid` for the least `C`
/// with `int B(|u|/|x|^s) <= (1-s) J_s(C u)`.
pub fn hardy_check(
    u: &TestFunction,
    a: &YoungFunction,
    s: f64,
    n: usize,
    c_grid: &[f64],
    cfg: &QuadratureConfig,
) -> Result<HardyCheck> {
    check_params(s, n)?;
    if u.dim() != n {
        return Err(Error::invalid(format!("test function has dimension {}, expected {n}", u.dim())));
    }
    if c_grid.is_empty() || c_grid.iter().any(|c| !(*c > 0.0 && c.is_finite())) {
        return Err(Error::invalid("the constant grid must be non-empty and positive"));
    }
    let mut grid = c_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    if u.is_zero() {
        return Ok(HardyCheck {
            constant: Some(grid[0]),
            lhs: 0.0,
            rows: Vec::new(),
        });
    }
    let companion = build_companion(a, s, n, cfg)?;
    check_with(u, &companion, a, &grid, cfg)
}

/// Same as [`hardy_check`] with a prebuilt companion and a sorted grid.
pub fn check_with(
    u: &TestFunction,
    companion: &HardyCompanion,
    a: &YoungFunction,
    c_grid: &[f64],
    cfg: &QuadratureConfig,
) -> Result<HardyCheck> {
    let s = companion.s();
    let lhs = weighted_modular(u, companion, s, cfg)?.value;
    let mut rows = Vec::new();
    for &c in c_grid {
        let rhs = (1.0 - s) * seminorm::frac_modular(&u.scale(1.0 / c)?, a, s, cfg)?.value;
        let holds = lhs <= rhs * (1.0 + HARDY_SLACK);
        rows.push(HardyRow { c, rhs, holds });
        if holds {
            return Ok(HardyCheck {
                constant: Some(c),
                lhs,
                rows,
            });
        }
    }
    Ok(HardyCheck {
        constant: None,
        lhs,
        rows,
    })
}
