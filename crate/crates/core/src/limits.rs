//! Small-s studies of `s J_s(u)` and the counterexample's divergent lower bound.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modular::{self, limit_constant};
use crate::quad::{self, QuadratureConfig, Tolerance};
use crate::seminorm;
use crate::testfn::TestFunction;
use crate::young::{self, YoungFunction};

/// Description of the extrapolation, echoed in every report.
pub const EXTRAPOLATION_MODEL: &str = "v(s) = v0 + c*s, linear least squares; v0 is reported";
/// Total growth across the grid that counts as a divergence trend.
pub const DIVERGENCE_FACTOR: f64 = 5.0;
const TARGET_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StudyVerdict {
    ConvergesToTarget,
    DivergenceTrend,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitRow {
    pub s: f64,
    /// `s J_s(u)`.
    pub value: f64,
    pub abs_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedRow {
    pub s: f64,
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyMetadata {
    pub tolerance: f64,
    pub extrapolation_model: String,
    pub delta2_unbounded: bool,
    pub failed_rows: Vec<FailedRow>,
    pub warnings: Vec<String>,
    pub config: QuadratureConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitStudyResult {
    /// Successful rows, by decreasing `s`.
    pub rows: Vec<LimitRow>,
    pub target: f64,
    pub extrapolated: f64,
    pub verdict: StudyVerdict,
    pub metadata: StudyMetadata,
}

impl LimitStudyResult {
    /// `s,value,abs_err` rows, numbers in shortest round-trip form.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,value,abs_err\n");
        for r in &self.rows {
            out.push_str(&format!("{:?},{:?},{:?}\n", r.s, r.value, r.abs_error));
        }
        out
    }
}

fn check_grid(s_list: &[f64], tol: f64) -> Result<()> {
    if s_list.len() < 3 {
        return Err(Error::invalid("a study needs at least three values of s"));
    }
    if s_list.iter().any(|s| !(*s > 0.0 && *s < 1.0)) {
        return Err(Error::invalid("every s must lie in (0,1)"));
    }
    if s_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::invalid("s values must be strictly decreasing"));
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::invalid(format!("tolerance must be positive, got {tol}")));
    }
    Ok(())
}

/// Intercept of the least-squares line through `(s, value)`.
pub fn extrapolate_linear(rows: &[LimitRow]) -> f64 {
    let m = rows.len() as f64;
    let mean_s = rows.iter().map(|r| r.s).sum::<f64>() / m;
    let mean_v = rows.iter().map(|r| r.value).sum::<f64>() / m;
    let sxx: f64 = rows.iter().map(|r| (r.s - mean_s).powi(2)).sum();
    let sxy: f64 = rows.iter().map(|r| (r.s - mean_s) * (r.value - mean_v)).sum();
    if sxx == 0.0 {
        return mean_v;
    }
    mean_v - sxy / sxx * mean_s
}

fn classify(rows: &[LimitRow], target: f64, extrapolated: f64, tol: f64, delta2_unbounded: bool) -> StudyVerdict {
    let scale = target.abs().max(TARGET_FLOOR);
    let worst_row_error = rows.iter().map(|r| r.abs_error).fold(0.0, f64::max);
    let close = (extrapolated - target).abs() <= tol * scale;
    if !delta2_unbounded && close && worst_row_error <= tol * scale {
        return StudyVerdict::ConvergesToTarget;
    }
    let increasing = rows.windows(2).all(|w| w[1].value > w[0].value);
    let first = rows[0].value;
    let last = rows[rows.len() - 1].value;
    if increasing && first > 0.0 && last >= DIVERGENCE_FACTOR * first {
        return StudyVerdict::DivergenceTrend;
    }
    StudyVerdict::Inconclusive
}

/// `s J_s(u)` over `s_list`, compared with `2 |S^{n-1}| int Abar(|u|)`.
pub fn limit_study(
    u: &TestFunction,
    a: &YoungFunction,
    s_list: &[f64],
    cfg: &QuadratureConfig,
    tol: f64,
) -> Result<LimitStudyResult> {
    check_grid(s_list, tol)?;
    cfg.validate()?;
    let target = modular::limit_target(u, a, cfg)?.value;
    study_with_target(u, a, s_list, cfg, tol, target)
}

fn study_with_target(
    u: &TestFunction,
    a: &YoungFunction,
    s_list: &[f64],
    cfg: &QuadratureConfig,
    tol: f64,
    target: f64,
) -> Result<LimitStudyResult> {
    let mut warnings = Vec::new();
    let delta2 = young::delta2_diagnose(a, 1e-6, 1e6, 241)?;
    let delta2_unbounded = delta2.flag.is_some();
    if delta2_unbounded {
        warnings.push("A fails the doubling test on the grid; convergence to the target is not expected".to_string());
    }
    let outcomes: Vec<(f64, Result<modular::ModularResult>)> = s_list
        .par_iter()
        .map(|&s| (s, seminorm::frac_modular(u, a, s, cfg)))
        .collect();
    let mut rows = Vec::new();
    let mut failed_rows = Vec::new();
    for (s, outcome) in outcomes {
        match outcome {
            Ok(r) => {
                warnings.extend(r.warnings.iter().map(|w| format!("s={s}: {w}")));
                rows.push(LimitRow {
                    s,
                    value: s * r.value,
                    abs_error: s * r.abs_error_estimate,
                });
            }
            Err(e) => failed_rows.push(FailedRow {
                s,
                code: e.code().to_string(),
                message: e.to_string(),
            }),
        }
    }
    if rows.len() < 3 {
        return Err(Error::StudyFailure(format!(
            "only {} of {} rows succeeded",
            rows.len(),
            s_list.len()
        )));
    }
    let extrapolated = extrapolate_linear(&rows);
    let verdict = classify(&rows, target, extrapolated, tol, delta2_unbounded);
    Ok(LimitStudyResult {
        rows,
        target,
        extrapolated,
        verdict,
        metadata: StudyMetadata {
            tolerance: tol,
            extrapolation_model: EXTRAPOLATION_MODEL.to_string(),
            delta2_unbounded,
            failed_rows,
            warnings,
            config: *cfg,
        },
    })
}

/// [`limit_study`] for `A(t) = t^p`, whose target is
/// `2 |S^{n-1}| / p * int |u|^p`.
pub fn ms_power_study(u: &TestFunction, p: f64, s_list: &[f64], cfg: &QuadratureConfig, tol: f64) -> Result<LimitStudyResult> {
    check_grid(s_list, tol)?;
    cfg.validate()?;
    let a = YoungFunction::power(p)?;
    let lp = modular::orlicz_modular(u, &a, 1.0, cfg)?.value;
    let target = limit_constant(u.dim()) / p * lp;
    let general = modular::limit_target(u, &a, cfg)?.value;
    if (target - general).abs() > 1e-10 * target.abs().max(TARGET_FLOOR) {
        return Err(Error::numeric("power target disagrees with the averaged target", target, (target - general).abs()));
    }
    study_with_target(u, &a, s_list, cfg, tol, target)
}

/// Parameters of the counterexample lower bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleParams {
    pub gamma: f64,
    pub lambda: f64,
    pub sigma: f64,
    pub kappa: f64,
    pub alpha: f64,
    pub n: usize,
}

impl Default for CounterexampleParams {
    fn default() -> Self {
        Self {
            gamma: 2.0,
            lambda: 1.5,
            sigma: 0.9,
            kappa: 1e6,
            alpha: 1.0,
            n: 1,
        }
    }
}

impl CounterexampleParams {
    pub fn validate(&self) -> Result<()> {
        let p = self;
        if !(p.gamma > 1.0) {
            return Err(Error::invalid(format!("gamma must exceed 1, got {}", p.gamma)));
        }
        if !(p.lambda > 1.0 && p.lambda < 2.0) {
            return Err(Error::invalid(format!("lambda must lie in (1,2), got {}", p.lambda)));
        }
        if !(p.sigma > 0.5 * p.lambda && p.sigma < 1.0) {
            return Err(Error::invalid(format!("sigma must lie in (lambda/2, 1), got {}", p.sigma)));
        }
        if !(p.kappa > 1.0 && p.kappa.is_finite()) {
            return Err(Error::invalid(format!("kappa must exceed 1, got {}", p.kappa)));
        }
        if !(p.alpha > 0.0 && p.alpha < 2.0) {
            return Err(Error::invalid(format!("alpha must lie in (0,2), got {}", p.alpha)));
        }
        if !(1..=3).contains(&p.n) {
            return Err(Error::invalid(format!("dimension must be 1, 2 or 3, got {}", p.n)));
        }
        Ok(())
    }

    fn rate(&self) -> f64 {
        (self.lambda / (2.0 * self.sigma)).powf(self.gamma)
    }
}

/// `ln(kappa + e^x)` without overflow.
fn ln_kappa_plus_exp(ln_kappa: f64, x: f64) -> f64 {
    if x > ln_kappa {
        x + (ln_kappa - x).exp().ln_1p()
    } else {
        ln_kappa + (x - ln_kappa).exp().ln_1p()
    }
}

/// `ln` of the integrand `t^{1/s} (kappa + t^{1/s})^{-c t^gamma}`, before the
/// `dt/t` measure, with `c = (lambda/(2 sigma))^gamma`.
pub fn ln_lower_bound_integrand(t: f64, s: f64, params: &CounterexampleParams) -> Result<f64> {
    params.validate()?;
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::invalid(format!("s must lie in (0,1), got {s}")));
    }
    if !(t > 0.0) {
        return Err(Error::invalid(format!("t must be positive, got {t}")));
    }
    Ok(ln_integrand(t.ln(), s, params))
}

fn ln_integrand(w: f64, s: f64, p: &CounterexampleParams) -> f64 {
    w / s - p.rate() * (p.gamma * w).exp() * ln_kappa_plus_exp(p.kappa.ln(), w / s)
}

/// `ln` of `(alpha^n / s) int_{(4/(2-alpha))^s}^inf t^{1/s} (kappa + t^{1/s})^{-c t^gamma} dt/t`.
///
/// The bound carries a further positive factor that depends only on `sigma`
/// and `n` and is left unevaluated, so only its growth in `s` is meaningful.
pub fn ln_counterexample_lower_bound(s: f64, params: &CounterexampleParams) -> Result<f64> {
    params.validate()?;
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::invalid(format!("s must lie in (0,1), got {s}")));
    }
    let lo = s * (4.0 / (2.0 - params.alpha)).ln();
    let f = |w: f64| ln_integrand(w, s, params);
    // The integrand is log-concave in w = ln t: walk up past the peak, then
    // until it has fallen 60 e-folds below the running maximum.
    let mut peak = f(lo);
    let mut hi = lo;
    let mut step = 0.01f64.max(s * 0.05);
    loop {
        let next = hi + step;
        let v = f(next);
        hi = next;
        if v > peak {
            peak = v;
        } else if v < peak - 60.0 {
            break;
        }
        step *= 1.25;
        if hi > lo + 1e4 {
            return Err(Error::numeric("counterexample bound: integrand does not decay", peak.exp(), f64::INFINITY));
        }
    }
    let pts = quad::graded_points(lo, hi, (hi - lo) / 64.0);
    let est = quad::ln_integrate(f, &pts, Tolerance::new(0.0, 1e-10, 4000));
    if !est.converged || !est.ln_value.is_finite() {
        return Err(Error::numeric("counterexample bound", est.ln_value.exp(), est.rel_error));
    }
    Ok(params.n as f64 * params.alpha.ln() - s.ln() + est.ln_value)
}

pub fn counterexample_lower_bound(s: f64, params: &CounterexampleParams) -> Result<f64> {
    Ok(ln_counterexample_lower_bound(s, params)?.exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    const S_GRID: [f64; 4] = [0.2, 0.1, 0.05, 0.025];

    #[test]
    fn lower_bound_matches_direct_quadrature() {
        let expected = [
            (0.2, 3.638872993853117e-8),
            (0.1, 7.045416080273023e-6),
            (0.05, 1.857306318624132e-4),
            (0.025, 2.293824274026801e-2),
        ];
        let p = CounterexampleParams::default();
        for (s, v) in expected {
            let got = counterexample_lower_bound(s, &p).unwrap();
            assert!((got / v - 1.0).abs() < 1e-8, "s={s}: {got} vs {v}");
        }
    }

    #[test]
    fn integrand_grows_between_one_and_two_sigma_over_lambda() {
        let p = CounterexampleParams::default();
        let small = ln_lower_bound_integrand(1.2, 0.025, &p).unwrap();
        let large = ln_lower_bound_integrand(1.2, 0.1, &p).unwrap();
        assert!(small > large);
    }

    #[test]
    fn bad_parameters_are_rejected() {
        let p = CounterexampleParams {
            sigma: 0.7,
            ..CounterexampleParams::default()
        };
        assert!(counterexample_lower_bound(0.1, &p).is_err());
    }

    #[test]
    fn tent_power_two_converges() {
        let r = ms_power_study(&TestFunction::tent(), 2.0, &S_GRID, &QuadratureConfig::default(), 0.02).unwrap();
        assert_eq!(r.verdict, StudyVerdict::ConvergesToTarget, "{r:?}");
        assert!((r.target - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn zero_function_converges_to_zero() {
        let r = limit_study(
            &TestFunction::zero(1).unwrap(),
            &YoungFunction::power(2.0).unwrap(),
            &S_GRID,
            &QuadratureConfig::default(),
            0.02,
        )
        .unwrap();
        assert_eq!(r.target, 0.0);
        assert!(r.rows.iter().all(|row| row.value == 0.0));
        assert_eq!(r.verdict, StudyVerdict::ConvergesToTarget);
    }

    #[test]
    fn grid_must_decrease() {
        let u = TestFunction::tent();
        let a = YoungFunction::power(2.0).unwrap();
        assert!(limit_study(&u, &a, &[0.1, 0.2, 0.05], &QuadratureConfig::default(), 0.02).is_err());
    }

    #[test]
    fn extrapolation_recovers_a_line() {
        let rows: Vec<LimitRow> = S_GRID
            .iter()
            .map(|&s| LimitRow {
                s,
                value: 2.0 - 3.0 * s,
                abs_error: 0.0,
            })
            .collect();
        assert!((extrapolate_linear(&rows) - 2.0).abs() < 1e-12);
    }
}
