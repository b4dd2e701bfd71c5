//! Young functions, their logarithmic averages and growth diagnostics.
//!
//! Every family is evaluated both directly and through its logarithm, so that
//! functions such as `exp(-t^-gamma)` stay usable far below the smallest
//! representable double.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{self, QuadratureConfig, Tolerance};

/// Formula used on one piece of a piecewise Young function. Each piece adds
/// `F(t) - F(start)` to the value reached at its left end, so the result is
/// continuous by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Formula {
    /// `sum c * t^p` over `(c, p)` terms.
    PowerSum(Vec<(f64, f64)>),
    /// `coef * (exp(rate * t) - 1)`.
    ExpMinusOne { coef: f64, rate: f64 },
    /// `slope * t`; `None` continues with the left derivative at the breakpoint.
    Linear { slope: Option<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub start: f64,
    pub formula: Formula,
}

/// Family tag reported alongside every diagnostic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Family {
    Power { p: f64 },
    PowerLog { p: f64 },
    ExpCounterexample { gamma: f64, t0: f64 },
    Custom(Vec<Piece>),
}

#[derive(Debug, Clone, PartialEq)]
struct Segment {
    start: f64,
    formula: Formula,
    /// Value of the Young function at `start`.
    base: f64,
    /// `F(start)`.
    offset: f64,
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Power(f64),
    PowerLog(f64),
    ExpCounterexample {
        gamma: f64,
        t0: f64,
        value_t0: f64,
        slope: f64,
    },
    Piecewise(Vec<Segment>),
}

/// A convex, increasing function `A` on `[0, inf)` with `A(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct YoungFunction {
    kind: Kind,
    family: Family,
}

impl Formula {
    fn value(&self, t: f64) -> f64 {
        match self {
            Formula::PowerSum(terms) => terms.iter().map(|&(c, p)| c * t.powf(p)).sum(),
            Formula::ExpMinusOne { coef, rate } => coef * (rate * t).exp_m1(),
            Formula::Linear { slope } => slope.unwrap_or(0.0) * t,
        }
    }

    fn ln_value(&self, t: f64) -> f64 {
        match self {
            Formula::PowerSum(terms) => {
                let lt = t.ln();
                log_sum_exp(terms.iter().map(|&(c, p)| c.ln() + p * lt))
            }
            Formula::ExpMinusOne { coef, rate } => {
                let x = rate * t;
                let ln_em1 = if x > 30.0 { x + (-(-x).exp()).ln_1p() } else { x.exp_m1().ln() };
                coef.ln() + ln_em1
            }
            Formula::Linear { slope } => slope.unwrap_or(0.0).ln() + t.ln(),
        }
    }

    fn deriv(&self, t: f64) -> f64 {
        match self {
            Formula::PowerSum(terms) => terms
                .iter()
                .map(|&(c, p)| if p == 1.0 { c } else { c * p * t.powf(p - 1.0) })
                .sum(),
            Formula::ExpMinusOne { coef, rate } => coef * rate * (rate * t).exp(),
            Formula::Linear { slope } => slope.unwrap_or(0.0),
        }
    }

    /// Antiderivative of `F(t)/t`, when elementary.
    fn averaged(&self, t: f64) -> Option<f64> {
        match self {
            Formula::PowerSum(terms) => Some(terms.iter().map(|&(c, p)| c * t.powf(p) / p).sum()),
            Formula::Linear { slope } => Some(slope.unwrap_or(0.0) * t),
            Formula::ExpMinusOne { .. } => None,
        }
    }

    fn low_exponent(&self) -> Option<f64> {
        match self {
            Formula::PowerSum(terms) => terms.iter().map(|t| t.1).reduce(f64::min),
            _ => Some(1.0),
        }
    }

    fn high_exponent(&self) -> Option<f64> {
        match self {
            Formula::PowerSum(terms) => terms.iter().map(|t| t.1).reduce(f64::max),
            Formula::Linear { .. } => Some(1.0),
            Formula::ExpMinusOne { .. } => None,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Formula::PowerSum(terms) => {
                if terms.is_empty() {
                    return Err(Error::invalid("power-sum piece needs at least one term"));
                }
                for &(c, p) in terms {
                    if !(c > 0.0 && c.is_finite() && p >= 1.0 && p.is_finite()) {
                        return Err(Error::invalid(format!(
                            "power-sum term {c}*t^{p} needs c > 0 and p >= 1"
                        )));
                    }
                }
            }
            Formula::ExpMinusOne { coef, rate } => {
                if !(*coef > 0.0 && *rate > 0.0 && coef.is_finite() && rate.is_finite()) {
                    return Err(Error::invalid("exp-minus-one piece needs positive coef and rate"));
                }
            }
            Formula::Linear { slope } => {
                if let Some(m) = slope {
                    if !(*m > 0.0 && m.is_finite()) {
                        return Err(Error::invalid("linear piece needs a positive slope"));
                    }
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn log_sum_exp(it: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = it.collect();
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m.is_infinite() {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `ln(exp(a) + exp(b))`.
pub(crate) fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

impl YoungFunction {
    /// `A(t) = t^p`, `p >= 1`.
    pub fn power(p: f64) -> Result<Self> {
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::invalid(format!("power exponent must be >= 1, got {p}")));
        }
        Ok(Self {
            kind: Kind::Power(p),
            family: Family::Power { p },
        })
    }

    /// `A(t) = t^p ln(e + t)`, `p >= 1`.
    pub fn power_log(p: f64) -> Result<Self> {
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::invalid(format!("power-log exponent must be >= 1, got {p}")));
        }
        Ok(Self {
            kind: Kind::PowerLog(p),
            family: Family::PowerLog { p },
        })
    }

    /// `A(t) = exp(-t^-gamma)` on `(0, t0]`, continued affinely with slope
    /// `A'(t0)`. Convexity on `(0, t0]` needs `t0` below the inflection point;
    /// `t0 <= 1/(2e)` keeps it there for every `gamma > 1`.
    pub fn exp_counterexample(gamma: f64, t0: f64) -> Result<Self> {
        if !(gamma > 1.0 && gamma.is_finite()) {
            return Err(Error::invalid(format!("gamma must exceed 1, got {gamma}")));
        }
        let t0_max = 0.5 / std::f64::consts::E;
        if !(t0 > 0.0 && t0 <= t0_max * (1.0 + 1e-15)) {
            return Err(Error::invalid(format!("t0 must lie in (0, 1/(2e)], got {t0}")));
        }
        let value_t0 = (-t0.powf(-gamma)).exp();
        let slope = gamma * t0.powf(-gamma - 1.0) * value_t0;
        Ok(Self {
            kind: Kind::ExpCounterexample {
                gamma,
                t0,
                value_t0,
                slope,
            },
            family: Family::ExpCounterexample { gamma, t0 },
        })
    }

    /// Counterexample family with the largest admissible junction point.
    pub fn exp_counterexample_default(gamma: f64) -> Result<Self> {
        Self::exp_counterexample(gamma, 0.5 / std::f64::consts::E)
    }

    /// Single-piece polynomial `sum c * t^p`.
    pub fn poly(terms: &[(f64, f64)]) -> Result<Self> {
        Self::piecewise(vec![Piece {
            start: 0.0,
            formula: Formula::PowerSum(terms.to_vec()),
        }])
    }

    /// `A(t) = e^t - 1`.
    pub fn expm1() -> Result<Self> {
        Self::piecewise(vec![Piece {
            start: 0.0,
            formula: Formula::ExpMinusOne { coef: 1.0, rate: 1.0 },
        }])
    }

    /// Piecewise Young function. The first piece must start at 0, starts must
    /// increase, and the derivative may only jump upwards.
    pub fn piecewise(pieces: Vec<Piece>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::invalid("piecewise Young function needs at least one piece"));
        }
        if pieces[0].start != 0.0 {
            return Err(Error::invalid("first piece must start at 0"));
        }
        if let Formula::Linear { slope: None } = pieces[0].formula {
            return Err(Error::invalid("first linear piece needs an explicit slope"));
        }
        let mut segments: Vec<Segment> = Vec::with_capacity(pieces.len());
        for (i, piece) in pieces.iter().enumerate() {
            piece.formula.validate()?;
            if i > 0 && !(piece.start > pieces[i - 1].start && piece.start.is_finite()) {
                return Err(Error::invalid("piece starts must be strictly increasing"));
            }
            let mut formula = piece.formula.clone();
            let base = match segments.last() {
                None => 0.0,
                Some(prev) => prev.base + prev.formula.value(piece.start) - prev.offset,
            };
            if let (Formula::Linear { slope: None }, Some(prev)) = (&formula, segments.last()) {
                formula = Formula::Linear {
                    slope: Some(prev.formula.deriv(piece.start)),
                };
            }
            if let Some(prev) = segments.last() {
                let left = prev.formula.deriv(piece.start);
                let right = formula.deriv(piece.start);
                if right < left * (1.0 - 1e-12) {
                    return Err(Error::invalid(format!(
                        "derivative drops at breakpoint {}: {left} -> {right}",
                        piece.start
                    )));
                }
            }
            let offset = formula.value(piece.start);
            segments.push(Segment {
                start: piece.start,
                formula,
                base,
                offset,
            });
        }
        let f = Self {
            kind: Kind::Piecewise(segments),
            family: Family::Custom(pieces),
        };
        f.check_convex_on_grid()?;
        Ok(f)
    }

    fn check_convex_on_grid(&self) -> Result<()> {
        let mut prev = 0.0;
        for k in 0..=240 {
            let t = 10f64.powf(-6.0 + 12.0 * k as f64 / 240.0);
            let d = self.deriv(t);
            if !(d > 0.0) || d < prev * (1.0 - 1e-12) {
                return Err(Error::invalid(format!("derivative not positive and nondecreasing near t = {t:e}")));
            }
            prev = d;
        }
        Ok(())
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match &self.kind {
            Kind::Power(p) => t.powf(*p),
            Kind::PowerLog(p) => t.powf(*p) * (std::f64::consts::E + t).ln(),
            Kind::ExpCounterexample {
                gamma,
                t0,
                value_t0,
                slope,
            } => {
                if t <= *t0 {
                    (-t.powf(-gamma)).exp()
                } else {
                    value_t0 + slope * (t - t0)
                }
            }
            Kind::Piecewise(segs) => {
                let s = segment_at(segs, t);
                s.base + s.formula.value(t) - s.offset
            }
        }
    }

    /// `ln A(t)`, finite wherever `A(t) > 0` even if `A(t)` underflows.
    pub fn ln_eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return f64::NEG_INFINITY;
        }
        match &self.kind {
            Kind::Power(p) => p * t.ln(),
            Kind::PowerLog(p) => p * t.ln() + (std::f64::consts::E + t).ln().ln(),
            Kind::ExpCounterexample {
                gamma,
                t0,
                value_t0,
                slope,
            } => {
                if t <= *t0 {
                    -t.powf(-gamma)
                } else {
                    (value_t0 + slope * (t - t0)).ln()
                }
            }
            Kind::Piecewise(segs) => {
                let s = segment_at(segs, t);
                if s.start == 0.0 {
                    return s.formula.ln_value(t);
                }
                let v = s.base + s.formula.value(t) - s.offset;
                if v.is_finite() {
                    v.ln()
                } else {
                    let lf = s.formula.ln_value(t);
                    lf + ((s.base - s.offset) / lf.exp()).ln_1p()
                }
            }
        }
    }

    /// Right derivative `a(t)`.
    pub fn deriv(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        match &self.kind {
            Kind::Power(p) => {
                if *p == 1.0 {
                    1.0
                } else {
                    p * t.powf(p - 1.0)
                }
            }
            Kind::PowerLog(p) => {
                let e = std::f64::consts::E;
                let lead = if *p == 1.0 { 1.0 } else { p * t.powf(p - 1.0) };
                lead * (e + t).ln() + t.powf(*p) / (e + t)
            }
            Kind::ExpCounterexample {
                gamma, t0, slope, ..
            } => {
                if t == 0.0 {
                    0.0
                } else if t < *t0 {
                    gamma * t.powf(-gamma - 1.0) * (-t.powf(-gamma)).exp()
                } else {
                    *slope
                }
            }
            Kind::Piecewise(segs) => segment_at(segs, t).formula.deriv(t),
        }
    }

    /// `ln a(t)`, for integrands raising the derivative to large powers.
    pub fn ln_deriv(&self, t: f64) -> f64 {
        match &self.kind {
            Kind::ExpCounterexample { gamma, t0, .. } if t > 0.0 && t < *t0 => {
                gamma.ln() - (gamma + 1.0) * t.ln() - t.powf(-gamma)
            }
            _ => self.deriv(t).ln(),
        }
    }

    /// `ln (t a(t) / A(t))`, free of the cancellation between the two
    /// logarithms where both are huge.
    pub fn ln_elasticity(&self, t: f64) -> f64 {
        match &self.kind {
            Kind::ExpCounterexample { gamma, t0, .. } if t > 0.0 && t < *t0 => gamma.ln() - gamma * t.ln(),
            _ => self.ln_deriv(t) + t.ln() - self.ln_eval(t),
        }
    }

    /// Points where the formula changes.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            Kind::ExpCounterexample { t0, .. } => vec![*t0],
            Kind::Piecewise(segs) => segs.iter().skip(1).map(|s| s.start).collect(),
            _ => Vec::new(),
        }
    }

    /// Closed form of the logarithmic average, when one exists.
    pub fn abar_closed_form(&self, t: f64) -> Option<f64> {
        if t <= 0.0 {
            return Some(0.0);
        }
        match &self.kind {
            Kind::Power(p) => Some(t.powf(*p) / p),
            Kind::Piecewise(segs) => {
                let mut total = 0.0;
                for (i, s) in segs.iter().enumerate() {
                    if s.start >= t {
                        break;
                    }
                    let end = segs.get(i + 1).map_or(t, |n| n.start.min(t));
                    let shift = s.base - s.offset;
                    if s.start > 0.0 && shift != 0.0 {
                        total += shift * (end / s.start).ln();
                    }
                    total += s.formula.averaged(end)? - s.formula.averaged(s.start)?;
                }
                Some(total)
            }
            _ => None,
        }
    }

    /// Power-like exponents `(p0, p_inf)` at zero and infinity, when known.
    pub fn asymptotics(&self) -> Option<(f64, f64)> {
        match &self.kind {
            Kind::Power(p) | Kind::PowerLog(p) => Some((*p, *p)),
            Kind::ExpCounterexample { .. } => None,
            Kind::Piecewise(segs) => {
                let first = segs.first()?.formula.low_exponent()?;
                let last = segs.last()?.formula.high_exponent()?;
                Some((first, last))
            }
        }
    }
}

fn segment_at(segs: &[Segment], t: f64) -> &Segment {
    let idx = segs.partition_point(|s| s.start < t);
    &segs[idx.saturating_sub(1)]
}

/// `Abar(t) = int_0^t A(tau)/tau dtau`.
pub fn abar(a: &YoungFunction, t: f64, cfg: &QuadratureConfig) -> Result<f64> {
    if let Some(v) = a.abar_closed_form(t) {
        return Ok(v);
    }
    Ok(ln_abar(a, t, cfg)?.exp())
}

/// Endpoint expansion for very steep `A`: with `E = t a(t) / A(t)` and
/// `E' = dE/d ln t`, `Abar(t) = A(t)/E (1 + E'/E^2 + O((E'/E^2)^2))`.
/// Used only where the correction is below `1e-5`.
fn ln_abar_laplace(a: &YoungFunction, t: f64) -> Option<f64> {
    let ln_e = a.ln_elasticity(t);
    if !(ln_e > 1e6f64.ln()) || !ln_e.is_finite() {
        return None;
    }
    let h: f64 = 1e-4;
    let slope = (a.ln_elasticity(t * h.exp()) - a.ln_elasticity(t * (-h).exp())) / (2.0 * h);
    // E'/E^2 = (d ln E / d ln t) / E
    let correction = slope * (-ln_e).exp();
    if !(correction.abs() < 1e-5) {
        return None;
    }
    Some(a.ln_eval(t) - ln_e + correction.ln_1p())
}

/// `ln Abar(t)`, computed with `tau = e^sigma` so that the integrand is
/// `A(e^sigma)` and tiny values never leave log space.
pub fn ln_abar(a: &YoungFunction, t: f64, cfg: &QuadratureConfig) -> Result<f64> {
    if !(t >= 0.0) || t.is_infinite() {
        return Err(Error::invalid(format!("Abar needs a finite t >= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    if let Some(v) = a.abar_closed_form(t) {
        if v > 0.0 && v.is_finite() {
            return Ok(v.ln());
        }
    }
    if let Some(v) = ln_abar_laplace(a, t) {
        return Ok(v);
    }
    let top = t.ln();
    let breaks: Vec<f64> = a.breakpoints().iter().filter(|&&b| b > 0.0).map(|b| b.ln()).collect();
    let tol = Tolerance::new(0.0, cfg.rel_tol * 0.1, cfg.max_subdivisions);
    let mut depth = 8.0;
    loop {
        let bottom = top - depth;
        let mut pts = vec![bottom];
        let mut x = bottom + 4.0;
        while x < top {
            pts.push(x);
            x += 4.0;
        }
        pts.push(top);
        let pts = quad::with_breaks(bottom, top, &[pts.as_slice(), breaks.as_slice()].concat());
        let est = quad::ln_integrate(|s| a.ln_eval(s.exp()), &pts, tol);
        if !est.converged || est.ln_value.is_nan() {
            return Err(Error::numeric("Abar quadrature", est.ln_value.exp(), est.rel_error));
        }
        // Below `bottom`, A(e^s) <= A(e^bottom) e^(s - bottom).
        let tail_rel = (a.ln_eval(bottom.exp()) - est.ln_value).exp();
        if tail_rel <= cfg.rel_tol * 0.01 || depth > 2000.0 {
            if tail_rel > cfg.rel_tol {
                return Err(Error::numeric("Abar lower tail", est.ln_value.exp(), tail_rel));
            }
            return Ok(est.ln_value);
        }
        depth *= 2.0;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Delta2Flag {
    /// The doubling ratio keeps growing toward an edge of the grid.
    UnboundedOnGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Delta2Report {
    /// `sup A(2t)/A(t)` over the grid; may be infinite when only its
    /// logarithm is representable.
    pub constant: f64,
    pub ln_constant: f64,
    pub argmax: f64,
    pub flag: Option<Delta2Flag>,
}

fn log_grid(t_min: f64, t_max: f64, points: usize) -> Vec<f64> {
    let (l0, l1) = (t_min.ln(), t_max.ln());
    (0..points)
        .map(|k| (l0 + (l1 - l0) * k as f64 / (points - 1) as f64).exp())
        .collect()
}

/// `ln(A(lambda t) / A(t))`, using the plain ratio when both values are
/// ordinary doubles so that exact cases stay exact.
fn ln_ratio(a: &YoungFunction, lambda: f64, t: f64) -> f64 {
    let (num, den) = (a.eval(lambda * t), a.eval(t));
    if num.is_normal() && den.is_normal() {
        (num / den).ln()
    } else {
        a.ln_eval(lambda * t) - a.ln_eval(t)
    }
}

/// Doubling diagnostics on a log grid of `[t_min, t_max]`.
pub fn delta2_diagnose(a: &YoungFunction, t_min: f64, t_max: f64, grid_points: usize) -> Result<Delta2Report> {
    if !(t_min > 0.0 && t_max > t_min && t_max.is_finite()) {
        return Err(Error::invalid(format!("need 0 < t_min < t_max, got [{t_min}, {t_max}]")));
    }
    if grid_points < 16 {
        return Err(Error::invalid(format!("need at least 16 grid points, got {grid_points}")));
    }
    let grid = log_grid(t_min, t_max, grid_points);
    let logs: Vec<f64> = grid.iter().map(|&t| ln_ratio(a, 2.0, t)).collect();
    let mut best = 0;
    for (k, v) in logs.iter().enumerate() {
        if v.is_nan() {
            return Err(Error::numeric("doubling ratio", f64::NAN, f64::INFINITY));
        }
        if *v > logs[best] {
            best = k;
        }
    }
    let ln_constant = logs[best];
    let (num, den) = (a.eval(2.0 * grid[best]), a.eval(grid[best]));
    let constant = if num.is_normal() && den.is_normal() {
        num / den
    } else {
        ln_constant.exp()
    };
    let flag = if edge_blows_up(&grid, &logs) {
        Some(Delta2Flag::UnboundedOnGrid)
    } else {
        None
    };
    Ok(Delta2Report {
        constant,
        ln_constant,
        argmax: grid[best],
        flag,
    })
}

/// Within the decade next to either end, the ratio grows monotonically toward
/// that end by more than a factor 1e3.
fn edge_blows_up(grid: &[f64], logs: &[f64]) -> bool {
    let n = grid.len();
    let bottom_end = grid.partition_point(|&t| t <= grid[0] * 10.0).max(2);
    let bottom = &logs[..bottom_end.min(n)];
    let rising_down = bottom.windows(2).all(|w| w[0] >= w[1]);
    if rising_down && bottom[0] - bottom[bottom.len() - 1] > 1e3f64.ln() {
        return true;
    }
    let top_start = grid.partition_point(|&t| t < grid[n - 1] / 10.0).min(n - 2);
    let top = &logs[top_start..];
    let rising_up = top.windows(2).all(|w| w[0] <= w[1]);
    rising_up && top[top.len() - 1] - top[0] > 1e3f64.ln()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexEstimate {
    /// Extrapolated upper index; `f64::INFINITY` when unbounded.
    pub value: f64,
    pub unbounded: bool,
    /// `(lambda, ln sup_t A(lambda t)/A(t))` for every sampled `lambda`.
    pub samples: Vec<(f64, f64)>,
}

/// Default `lambda` ladder for the index estimate.
pub fn default_index_lambdas() -> Vec<f64> {
    (1..=14).map(|k| 2f64.powi(k)).collect()
}

/// Upper Matuszewska–Orlicz index
/// `lim_{lambda -> inf} ln(sup_t A(lambda t)/A(t)) / ln(lambda)`.
///
/// The limit is extrapolated by least squares on the largest half of the
/// ladder with the basis `{1, 1/ln lambda, ln(ln lambda)/ln lambda}`, which
/// absorbs slowly varying factors such as `ln(e + t)`.
pub fn matuszewska_index(a: &YoungFunction, lambdas: &[f64], t_grid: &[f64]) -> Result<IndexEstimate> {
    if lambdas.len() < 4 || lambdas.iter().any(|&l| !(l > 1.0 && l.is_finite())) {
        return Err(Error::invalid("need at least four lambdas, all > 1"));
    }
    if t_grid.len() < 16 || t_grid.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return Err(Error::invalid("need at least 16 positive grid points"));
    }
    let mut samples = Vec::with_capacity(lambdas.len());
    let mut unbounded = false;
    for &lambda in lambdas {
        let logs: Vec<f64> = t_grid.iter().map(|&t| ln_ratio(a, lambda, t)).collect();
        let best = (0..logs.len()).fold(0, |b, k| if logs[k] > logs[b] { k } else { b });
        if !logs[best].is_finite() || grows_at_edge(a, lambda, t_grid, best) {
            unbounded = true;
        }
        samples.push((lambda, logs[best]));
    }
    if unbounded {
        return Ok(IndexEstimate {
            value: f64::INFINITY,
            unbounded,
            samples,
        });
    }
    let mut sorted = samples.clone();
    sorted.sort_by(|x, y| x.0.total_cmp(&y.0));
    let tail = &sorted[sorted.len() / 2..];
    let rows: Vec<[f64; 3]> = tail
        .iter()
        .map(|&(l, _)| {
            let ll = l.ln();
            [1.0, 1.0 / ll, ll.ln() / ll]
        })
        .collect();
    let rhs: Vec<f64> = tail.iter().map(|&(l, m)| m / l.ln()).collect();
    let coef = least_squares3(&rows, &rhs)
        .ok_or_else(|| Error::numeric("index extrapolation", f64::NAN, f64::INFINITY))?;
    Ok(IndexEstimate {
        value: coef[0],
        unbounded,
        samples,
    })
}

/// The maximiser sits on an edge and the ratio still climbs there at a
/// non-decaying rate across the last two decades.
fn grows_at_edge(a: &YoungFunction, lambda: f64, grid: &[f64], best: usize) -> bool {
    let step = if best == 0 {
        0.1
    } else if best == grid.len() - 1 {
        10.0
    } else {
        return false;
    };
    let t = grid[best];
    let f0 = ln_ratio(a, lambda, t);
    let f1 = ln_ratio(a, lambda, t / step);
    let f2 = ln_ratio(a, lambda, t / (step * step));
    let d1 = f0 - f1;
    let d2 = f1 - f2;
    d1 > 1e-9 && d1 >= 0.5 * d2
}

fn least_squares3(rows: &[[f64; 3]], rhs: &[f64]) -> Option<[f64; 3]> {
    let mut m = [[0.0; 4]; 3];
    for (r, &y) in rows.iter().zip(rhs) {
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += r[i] * r[j];
            }
            m[i][3] += r[i] * y;
        }
    }
    for col in 0..3 {
        let piv = (col..3).max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs()))?;
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        for row in 0..3 {
            if row != col {
                let factor = m[row][col] / m[col][col];
                for k in col..4 {
                    m[row][k] -= factor * m[col][k];
                }
            }
        }
    }
    Some([m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]])
}

/// Smallest `C` with `A(lambda t) <= C lambda^exponent A(t)` over
/// `lambda in [1, lambda_max]` and the grid, returned as `ln C`.
pub fn ln_growth_constant(a: &YoungFunction, exponent: f64, lambda_max: f64, t_grid: &[f64]) -> f64 {
    let ladder = log_grid(1.0, lambda_max, 64);
    let mut best = f64::NEG_INFINITY;
    for &lambda in &ladder {
        for &t in t_grid {
            let v = ln_ratio(a, lambda, t) - exponent * lambda.ln();
            best = best.max(v);
        }
    }
    best
}

/// Default evaluation grid for index and growth diagnostics.
pub fn default_t_grid() -> Vec<f64> {
    log_grid(1e-6, 1e6, 241)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YoungDiagnostics {
    pub family: Family,
    pub delta2: Delta2Report,
    pub index: IndexEstimate,
    /// `C` with `A(lambda t) <= C lambda^{I+1} A(t)` on the grid for
    /// `lambda` up to `2^14`; infinite when the index is.
    pub growth_constant: f64,
    pub abar_at_one: f64,
}

/// Doubling constant on `[1e-6, 1e6]`, upper index, growth constant and `Abar(1)`.
pub fn diagnose(a: &YoungFunction, cfg: &QuadratureConfig) -> Result<YoungDiagnostics> {
    let index = matuszewska_index(a, &default_index_lambdas(), &default_t_grid())?;
    let growth_constant = if index.unbounded {
        f64::INFINITY
    } else {
        ln_growth_constant(a, index.value + 1.0, 2f64.powi(14), &default_t_grid()).exp()
    };
    Ok(YoungDiagnostics {
        family: a.family().clone(),
        delta2: delta2_diagnose(a, 1e-6, 1e6, 241)?,
        index,
        growth_constant,
        abar_at_one: abar(a, 1.0, cfg)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> QuadratureConfig {
        QuadratureConfig {
            rel_tol: 1e-12,
            ..Default::default()
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(YoungFunction::power(0.5).is_err());
        assert!(YoungFunction::power_log(f64::NAN).is_err());
        assert!(YoungFunction::exp_counterexample(1.0, 0.1).is_err());
        assert!(YoungFunction::exp_counterexample(2.0, 0.2).is_err());
        assert!(YoungFunction::poly(&[(1.0, 0.5)]).is_err());
    }

    #[test]
    fn counterexample_is_c1_at_junction() {
        let a = YoungFunction::exp_counterexample_default(2.0).unwrap();
        let t0 = 0.5 / std::f64::consts::E;
        let left = a.deriv(t0 * (1.0 - 1e-9));
        let right = a.deriv(t0 * (1.0 + 1e-9));
        assert!((left / right - 1.0).abs() < 1e-7);
        assert!((a.eval(t0) - (-t0.powi(-2)).exp()).abs() < 1e-25);
    }

    #[test]
    fn abar_expm1_at_one() {
        let a = YoungFunction::expm1().unwrap();
        let v = abar(&a, 1.0, &cfg()).unwrap();
        assert!((v - 1.317_902_151_454_403_9).abs() < 1e-10, "{v}");
    }

    #[test]
    fn abar_counterexample_matches_exponential_integral() {
        let a = YoungFunction::exp_counterexample_default(2.0).unwrap();
        let cases = [
            (0.1, 1.841_798_880_841_016e-46),
            (0.15, 5.491_791_640_452_666e-22),
            (1.0, 2.390_120_053_072_496_6e-11),
            (5.0, 1.977_418_813_074_961_6e-10),
        ];
        for (t, want) in cases {
            let got = abar(&a, t, &cfg()).unwrap();
            assert!((got / want - 1.0).abs() < 1e-9, "t={t}: {got} vs {want}");
        }
    }

    #[test]
    fn piecewise_closed_form_matches_quadrature() {
        let a = YoungFunction::piecewise(vec![
            Piece {
                start: 0.0,
                formula: Formula::PowerSum(vec![(1.0, 2.0)]),
            },
            Piece {
                start: 1.0,
                formula: Formula::Linear { slope: None },
            },
            Piece {
                start: 3.0,
                formula: Formula::PowerSum(vec![(0.5, 2.0), (1.0, 3.0)]),
            },
        ])
        .unwrap();
        for t in [0.5, 1.0, 2.0, 3.5, 10.0] {
            let closed = a.abar_closed_form(t).unwrap();
            let numeric = {
                let e = quad::integrate(|x| a.eval(x) / x, &quad::with_breaks(0.0, t, &[1.0, 3.0]), Tolerance::new(0.0, 1e-13, 2000));
                e.value
            };
            assert!((closed / numeric - 1.0).abs() < 1e-11, "t={t}: {closed} vs {numeric}");
            let ln_num = ln_abar(&YoungFunction::piecewise(match a.family() {
                Family::Custom(p) => p.clone(),
                _ => unreachable!(),
            }).unwrap(), t, &cfg()).unwrap();
            assert!((ln_num - closed.ln()).abs() < 1e-10);
        }
    }

    #[test]
    fn doubling_constant_of_powers() {
        for p in [1.0, 2.0, 3.0] {
            let a = YoungFunction::power(p).unwrap();
            let r = delta2_diagnose(&a, 1e-6, 1e6, 241).unwrap();
            assert!((r.constant - 2f64.powf(p)).abs() <= 1e-9);
            assert!(r.flag.is_none());
        }
    }

    #[test]
    fn doubling_flags() {
        let ce = YoungFunction::exp_counterexample_default(2.0).unwrap();
        let r = delta2_diagnose(&ce, 1e-3, 1e3, 200).unwrap();
        assert_eq!(r.flag, Some(Delta2Flag::UnboundedOnGrid));
        let e = YoungFunction::expm1().unwrap();
        let r = delta2_diagnose(&e, 1e-3, 1e3, 200).unwrap();
        assert_eq!(r.flag, Some(Delta2Flag::UnboundedOnGrid));
        let pl = YoungFunction::power_log(2.0).unwrap();
        assert!(delta2_diagnose(&pl, 1e-3, 1e3, 200).unwrap().flag.is_none());
        assert!(delta2_diagnose(&pl, 1e-3, 1e3, 8).is_err());
    }

    #[test]
    fn index_values() {
        let lam = default_index_lambdas();
        let grid = default_t_grid();
        let idx = |a: YoungFunction| matuszewska_index(&a, &lam, &grid).unwrap();
        assert!((idx(YoungFunction::power(3.0).unwrap()).value - 3.0).abs() < 1e-9);
        assert!((idx(YoungFunction::poly(&[(1.0, 2.0), (1.0, 3.0)]).unwrap()).value - 3.0).abs() < 0.05);
        assert!((idx(YoungFunction::power_log(2.0).unwrap()).value - 2.0).abs() < 0.05);
        let ce = idx(YoungFunction::exp_counterexample_default(2.0).unwrap());
        assert!(ce.unbounded && ce.value.is_infinite());
    }
}
