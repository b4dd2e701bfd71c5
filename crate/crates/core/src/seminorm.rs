//! The fractional Orlicz modular
//! `J_s(u) = int int A(|u(x) - u(y)| / |x - y|^s) dx dy / |x - y|^n`.
//!
//! Writing `y = x + r w` with `|w| = 1` gives
//! `J_s(u) = |S^{n-1}| int_R G(e^tau) dtau`, where
//! `G(r) = int A(|u(x + r e_1) - u(x)| r^{-s}) dx` and `tau = ln r`.
//! The deterministic engines integrate `G` over a finite window in `tau` and
//! bound both tails:
//!
//! * below the window, `G(r) <= |grad u|_1 A(L r^{1-s}) / L`;
//! * above it, `G(r) <= M(2 r^{-s})` with `M(c) = int A(c|u|)`, and for
//!   compactly supported `u` the tail is exactly
//!   `(2/s) int Abar(|u| r^{-s})` once `r` exceeds the diameter of the support.

use std::cell::Cell;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use crate::quad::QuadratureConfig;
use crate::modular::{self, Averaged, Method, ModularResult};
use crate::quad::{self, Estimate, Tolerance};
use crate::testfn::TestFunction;
use crate::young::{self, YoungFunction};
use crate::sphere_area;

/// Largest `tau` used as a window edge; `e^tau` must stay finite.
const TAU_CAP: f64 = 700.0;
/// Samples drawn from one independent random stream.
const BATCH: u64 = 8192;

fn check_order(s: f64) -> Result<()> {
    if s > 0.0 && s < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("s must lie in (0,1), got {s}")))
    }
}

fn zero_result(method: Method) -> ModularResult {
    ModularResult::exact_zero(method)
}

/// Window edges and the treatment of the region beyond the upper edge.
#[derive(Debug, Clone, Copy)]
struct Window {
    lo: f64,
    hi: f64,
    left_bound: f64,
    right: RightTail,
}

#[derive(Debug, Clone, Copy)]
enum RightTail {
    /// Exact value of the tail (compact support).
    Exact(f64),
    /// Certified upper bound; the tail is not added.
    Bounded(f64),
    /// Two-cluster asymptotics `G(r) ~ 2 M(r^{-s})` at the cap.
    Asymptotic,
}

struct Problem<'a> {
    u: &'a TestFunction,
    a: &'a YoungFunction,
    s: f64,
    cfg: &'a QuadratureConfig,
    kappa: f64,
}

impl Problem<'_> {
    fn left_bound(&self, tau: f64) -> f64 {
        let lip = self.u.lipschitz_constant();
        let tv = self.u.gradient_l1().unwrap_or(f64::INFINITY);
        if lip == 0.0 || tv == 0.0 {
            return 0.0;
        }
        self.kappa * tv / lip * self.a.eval(lip * ((1.0 - self.s) * tau).exp()) / (1.0 - self.s)
    }

    /// `M(c) = int A(c |u|)`.
    fn modular_at(&self, c: f64) -> Result<f64> {
        Ok(modular::orlicz_modular(self.u, self.a, 1.0 / c, self.cfg)?.value)
    }

    /// `int Abar(c |u|)`.
    fn averaged_modular_at(&self, c: f64) -> Result<f64> {
        let avg = Averaged {
            young: self.a,
            cfg: *self.cfg,
        };
        Ok(modular::gauge_modular(self.u, &avg, 1.0 / c, self.cfg)?.value)
    }

    /// Rough size of `J_s`, used to turn the relative tolerance into an
    /// absolute one before `J_s` is known.
    fn scale_guess(&self) -> Result<f64> {
        Ok(self.kappa * self.modular_at(1.0)? / self.s)
    }

    fn window(&self) -> Result<Window> {
        let s = self.s;
        let target = self.cfg.abs_tol.max(self.cfg.rel_tol * self.scale_guess()?);
        let diameter = self.u.support_radius().map(|r| 2.0 * r);
        if let Some((lo, hi)) = self.cfg.log_radius_window {
            let right = match diameter {
                Some(d) if hi >= d.ln() => RightTail::Exact(self.exact_tail(hi)?),
                _ => RightTail::Bounded(self.kappa * self.modular_at(2.0 * (-s * hi).exp())? / s),
            };
            return Ok(Window {
                lo,
                hi,
                left_bound: self.left_bound(lo),
                right,
            });
        }
        let mut lo = -1.0;
        while self.left_bound(lo) > 0.1 * target && lo > -TAU_CAP {
            lo -= 1.0;
        }
        if let Some(d) = diameter {
            let hi = d.ln();
            return Ok(Window {
                lo: lo.min(hi - 1.0),
                hi,
                left_bound: self.left_bound(lo),
                right: RightTail::Exact(self.exact_tail(hi)?),
            });
        }
        let mut hi = 2.0f64.max(lo + 1.0);
        loop {
            let bound = self.kappa * self.modular_at(2.0 * (-s * hi).exp()).unwrap_or(f64::INFINITY) / s;
            if bound <= 0.1 * target {
                return Ok(Window {
                    lo,
                    hi,
                    left_bound: self.left_bound(lo),
                    right: RightTail::Bounded(bound),
                });
            }
            if hi >= TAU_CAP {
                return Ok(Window {
                    lo,
                    hi: TAU_CAP,
                    left_bound: self.left_bound(lo),
                    right: RightTail::Asymptotic,
                });
            }
            hi = (hi + 2.0 / s).min(TAU_CAP);
        }
    }

    /// `|S^{n-1}| int_{tau}^inf 2 M(e^{-s t}) dt = |S^{n-1}| (2/s) int Abar(e^{-s tau} |u|)`.
    fn exact_tail(&self, tau: f64) -> Result<f64> {
        Ok(self.kappa * 2.0 / self.s * self.averaged_modular_at((-self.s * tau).exp())?)
    }

    fn window_breaks(&self, w: &Window) -> Vec<f64> {
        let mut pts = vec![0.0];
        let mut step = 1.0;
        while -step > w.lo || step < w.hi {
            pts.push(-step);
            pts.push(step);
            step *= 2.0;
        }
        let kinks = self.u.kinks_1d();
        for i in 0..kinks.len() {
            for j in 0..i {
                let d = (kinks[i] - kinks[j]).abs();
                if d > 0.0 {
                    pts.push(d.ln());
                }
            }
        }
        if let Some(r) = self.u.support_radius() {
            pts.push((2.0 * r).ln());
        }
        quad::with_breaks(w.lo, w.hi, &pts)
    }

    /// Integrate `gap` over the window, add the tails and check tolerances.
    fn assemble<F: Fn(f64, Tolerance) -> Estimate>(&self, gap: F) -> Result<ModularResult> {
        let w = self.window()?;
        let evaluations = Cell::new(0u64);
        let span = w.hi - w.lo;
        let scale = self.scale_guess()?;
        let inner = Tolerance::new(
            self.cfg.abs_tol * 1e-3 / span,
            (self.cfg.rel_tol * 0.05).max(1e-14),
            self.cfg.max_subdivisions,
        );
        let outer = Tolerance::new(
            0.25 * self.cfg.abs_tol.max(self.cfg.rel_tol * scale * 1e-2),
            self.cfg.rel_tol * 0.5,
            self.cfg.max_subdivisions,
        );
        let est = quad::integrate(
            |tau| {
                let g = gap(tau.exp(), inner);
                evaluations.set(evaluations.get() + g.evaluations as u64);
                self.kappa * g.value
            },
            &self.window_breaks(&w),
            outer,
        );
        let est = est.require("window quadrature")?;
        let mut warnings = Vec::new();
        let (tail_value, tail_error) = match w.right {
            // Computed to the working tolerance, so it is reported but not gated.
            RightTail::Exact(v) => (v, 0.0),
            RightTail::Bounded(b) => (0.0, b),
            RightTail::Asymptotic => {
                let r = w.hi.exp();
                let c = (-self.s * w.hi).exp();
                let g = gap(r, inner).value;
                let two_m = 2.0 * self.modular_at(c)?;
                let mismatch = if two_m > 0.0 { (g - two_m).abs() / two_m } else { 0.0 };
                let v = self.exact_tail(w.hi)?;
                warnings.push(format!(
                    "tail beyond tau = {} taken from two-cluster asymptotics (relative mismatch {mismatch:e})",
                    w.hi
                ));
                (v, v * mismatch.max(self.cfg.rel_tol))
            }
        };
        let value = est.value + tail_value;
        let exact_tail_error = match w.right {
            RightTail::Exact(v) => v * self.cfg.rel_tol,
            _ => 0.0,
        };
        let error = est.abs_error + w.left_bound + tail_error + exact_tail_error;
        let allowed = self.cfg.abs_tol.max(self.cfg.rel_tol * value.abs());
        if w.left_bound + tail_error > allowed {
            return Err(Error::numeric("fractional modular tails", value, error));
        }
        Ok(ModularResult {
            value,
            abs_error_estimate: error,
            truncation_radius: w.hi.exp(),
            evaluations: evaluations.get() + est.evaluations as u64,
            method: Method::Deterministic,
            standard_error: None,
            warnings,
        })
    }
}

/// One-dimensional gap integral `G(r) = int A(|u(x + r) - u(x)| r^{-s}) dx`.
///
/// Every supported shape is even or odd, so `G` is twice the integral over
/// `x >= -r/2`.
fn gap_1d(u: &TestFunction, a: &YoungFunction, s: f64, r: f64, tol: Tolerance) -> Estimate {
    let c = r.powf(-s);
    let h = |x: f64| a.eval(u.increment_1d(x, r).abs() * c);
    let kinks = u.kinks_1d();
    let mut breaks: Vec<f64> = kinks.clone();
    breaks.extend(kinks.iter().map(|k| k - r));
    let left = -0.5 * r;
    let est = if let Some(radius) = u.support_radius() {
        let lo = left.max(-radius);
        if lo >= radius {
            return Estimate::zero();
        }
        quad::integrate(h, &quad::with_breaks(lo, radius, &breaks), tol)
    } else {
        let mut total = Estimate::zero();
        let mut add = |e: Estimate| {
            total.value += e.value;
            total.abs_error += e.abs_error;
            total.evaluations += e.evaluations;
            total.converged &= e.converged;
        };
        if left < -1.0 {
            // x = -e^sigma on [-r/2, -1]
            let top = (-left).ln();
            let mut pts: Vec<f64> = (0..).map(|k| 2.0 * k as f64).take_while(|&x| x < top).collect();
            pts.push(top);
            pts.extend(breaks.iter().filter(|&&b| b < -1.0 && b > left).map(|b| (-b).ln()));
            pts.sort_by(f64::total_cmp);
            pts.dedup();
            add(quad::integrate(
                |sg: f64| {
                    let x = -sg.exp();
                    h(x) * (-x)
                },
                &pts,
                tol,
            ));
        }
        add(quad::integrate(h, &quad::with_breaks(left.max(-1.0), 1.0, &breaks), tol));
        add(quad::integrate(
            |sg: f64| {
                let x = sg.exp();
                h(x) * x
            },
            &quad::graded_points(0.0, TAU_CAP, 0.5),
            tol,
        ));
        total
    };
    Estimate {
        value: 2.0 * est.value,
        abs_error: 2.0 * est.abs_error,
        ..est
    }
}

/// `J_s(u)` on the line, by adaptive quadrature in `(tau, x)`.
pub fn frac_modular_1d(u: &TestFunction, a: &YoungFunction, s: f64, cfg: &QuadratureConfig) -> Result<ModularResult> {
    check_order(s)?;
    cfg.validate()?;
    if u.dim() != 1 {
        return Err(Error::invalid(format!("one-dimensional engine needs n = 1, got {}", u.dim())));
    }
    if u.is_constant() {
        return Ok(zero_result(Method::Deterministic));
    }
    let p = Problem {
        u,
        a,
        s,
        cfg,
        kappa: sphere_area(1),
    };
    p.assemble(|r, tol| gap_1d(u, a, s, r, tol))
}

/// Radial gap integral in `R^n`, `n >= 2`:
/// `G(r) = 2 |S^{n-2}| int_0^inf rho^{n-1} int_0^{theta_max}
/// A(|f(rho') - f(rho)| r^{-s}) sin^{n-2}(theta) dtheta drho`
/// with `rho' = |x + r e_1|` and the half-space `x_1 >= -r/2` encoded in
/// `theta_max`.
fn gap_radial(u: &TestFunction, a: &YoungFunction, s: f64, r: f64, tol: Tolerance) -> Estimate {
    let n = u.dim();
    let c = r.powf(-s);
    let theta_tol = Tolerance::new(tol.abs * 1e-2, tol.rel * 0.1, tol.max_subdivisions);
    let inner = |rho: f64| -> f64 {
        let f0 = u.profile(rho);
        let theta_max = if rho <= 0.5 * r { PI } else { (-0.5 * r / rho).acos() };
        let e = quad::integrate(
            |th: f64| {
                let (sn, cs) = th.sin_cos();
                let rho2 = (r + rho * cs).hypot(rho * sn);
                let w = if n == 2 { 1.0 } else { sn.powi(n as i32 - 2) };
                a.eval((u.profile(rho2) - f0).abs() * c) * w
            },
            &[0.0, theta_max],
            theta_tol,
        );
        rho.powi(n as i32 - 1) * e.value
    };
    let radius = u.support_radius().unwrap_or_else(|| decay_radius(u));
    let mut breaks = vec![0.5 * r, r];
    breaks.push(1.0);
    let est = if radius <= 1.0 {
        quad::integrate(inner, &quad::with_breaks(0.0, radius, &breaks), tol)
    } else {
        let near = quad::integrate(inner, &quad::with_breaks(0.0, 1.0, &breaks), tol);
        let top = radius.ln();
        let mut pts = quad::graded_points(0.0, top, 0.5);
        pts.extend(breaks.iter().filter(|&&b| b > 1.0 && b < radius).map(|b| b.ln()));
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let far = quad::integrate(
            |sg: f64| {
                let rho = sg.exp();
                inner(rho) * rho
            },
            &pts,
            tol,
        );
        Estimate {
            value: near.value + far.value,
            abs_error: near.abs_error + far.abs_error,
            evaluations: near.evaluations + far.evaluations,
            converged: near.converged && far.converged,
        }
    };
    let k = 2.0 * sphere_area(n - 1);
    Estimate {
        value: k * est.value,
        abs_error: k * est.abs_error,
        ..est
    }
}

/// Radius beyond which `|u|` underflows.
fn decay_radius(u: &TestFunction) -> f64 {
    let mut r: f64 = 1.0;
    while u.tail_sup(r) > 1e-300 && r < 1e300 {
        r *= 2.0;
    }
    r
}

/// `J_s(u)` for a radial `u` on `R^n`, `n` in `{2, 3}`.
pub fn frac_modular_radial(u: &TestFunction, a: &YoungFunction, s: f64, cfg: &QuadratureConfig) -> Result<ModularResult> {
    check_order(s)?;
    cfg.validate()?;
    let n = u.dim();
    if !(2..=3).contains(&n) {
        return Err(Error::invalid(format!("radial engine supports n in {{2, 3}}, got {n}")));
    }
    if !u.is_radial() {
        return Err(Error::invalid("radial engine needs a radial test function"));
    }
    if u.is_constant() {
        return Ok(zero_result(Method::Deterministic));
    }
    let p = Problem {
        u,
        a,
        s,
        cfg,
        kappa: sphere_area(n),
    };
    p.assemble(|r, tol| gap_radial(u, a, s, r, tol))
}

/// Deterministic `J_s(u)`: the line engine for `n = 1`, the radial engine
/// otherwise.
pub fn frac_modular(u: &TestFunction, a: &YoungFunction, s: f64, cfg: &QuadratureConfig) -> Result<ModularResult> {
    if u.dim() == 1 {
        frac_modular_1d(u, a, s, cfg)
    } else {
        frac_modular_radial(u, a, s, cfg)
    }
}

fn random_direction(rng: &mut ChaCha8Rng, n: usize, out: &mut [f64]) {
    match n {
        1 => out[0] = if rng.gen::<bool>() { 1.0 } else { -1.0 },
        2 => {
            let phi = rng.gen::<f64>() * 2.0 * PI;
            out[0] = phi.cos();
            out[1] = phi.sin();
        }
        _ => loop {
            let mut norm = 0.0;
            for v in out.iter_mut() {
                *v = 2.0 * rng.gen::<f64>() - 1.0;
                norm += *v * *v;
            }
            if norm > 1e-12 && norm <= 1.0 {
                let k = norm.sqrt().recip();
                out.iter_mut().for_each(|v| *v *= k);
                break;
            }
        },
    }
}

/// Monte Carlo estimate of `J_s(u)`.
///
/// The increment `z = y - x` has log-uniform length on the `tau` window and a
/// uniform direction, which cancels the kernel `|z|^{-n}`. The base point is
/// drawn from an equal mixture of the sampling box and the box shifted by
/// `-z`, so both orderings of a pair near the support are covered. Each batch
/// of samples owns a ChaCha stream indexed by the batch number, and batch
/// sums are reduced in order, so results do not depend on the thread count.
pub fn frac_modular_mc(u: &TestFunction, a: &YoungFunction, s: f64, cfg: &QuadratureConfig) -> Result<ModularResult> {
    check_order(s)?;
    cfg.validate()?;
    if cfg.mc_samples < 10_000 {
        return Err(Error::invalid(format!("Monte Carlo needs at least 1e4 samples, got {}", cfg.mc_samples)));
    }
    if u.is_constant() {
        return Ok(zero_result(Method::MonteCarlo));
    }
    let n = u.dim();
    let p = Problem {
        u,
        a,
        s,
        cfg,
        kappa: sphere_area(n),
    };
    let w = p.window()?;
    let mut warnings = Vec::new();
    let half = match u.support_radius() {
        Some(r) => r,
        None => {
            let mut r: f64 = 1.0;
            while u.tail_sup(r) > 1e-16 * u.sup_norm() && r < cfg.outer_truncation {
                r *= 1.25;
            }
            if u.tail_sup(r) > 1e-16 * u.sup_norm() {
                warnings.push(format!("sampling box truncated at half-width {}", cfg.outer_truncation));
                cfg.outer_truncation
            } else {
                r
            }
        }
    };
    let centre = u.shift();
    let volume = (2.0 * half).powi(n as i32);
    let weight = (w.hi - w.lo) * sphere_area(n);
    let inside = |x: &[f64]| {
        x.iter()
            .enumerate()
            .all(|(i, v)| (v - if i == 0 { centre } else { 0.0 }).abs() <= half)
    };
    let total = cfg.mc_samples;
    let batches = total.div_ceil(BATCH);
    let sums: Vec<(f64, f64)> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
            rng.set_stream(b);
            let count = BATCH.min(total - b * BATCH);
            let mut dir = vec![0.0; n];
            let mut x = vec![0.0; n];
            let mut y = vec![0.0; n];
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..count {
                let tau = w.lo + (w.hi - w.lo) * rng.gen::<f64>();
                let r = tau.exp();
                random_direction(&mut rng, n, &mut dir);
                let shifted = rng.gen::<bool>();
                for i in 0..n {
                    let base = (2.0 * rng.gen::<f64>() - 1.0) * half + if i == 0 { centre } else { 0.0 };
                    // Keep the in-box endpoint exact so rounding cannot push it out.
                    if shifted {
                        x[i] = base - r * dir[i];
                        y[i] = base;
                    } else {
                        x[i] = base;
                        y[i] = base + r * dir[i];
                    }
                }
                let hits = inside(&x) as u8 + inside(&y) as u8;
                let density = 0.5 * hits as f64 / volume;
                let value = a.eval((u.eval(&y) - u.eval(&x)).abs() * r.powf(-s)) * weight / density;
                s1 += value;
                s2 += value * value;
            }
            (s1, s2)
        })
        .collect();
    let (s1, s2) = sums.iter().fold((0.0, 0.0), |acc, v| (acc.0 + v.0, acc.1 + v.1));
    let nf = total as f64;
    let mean = s1 / nf;
    let variance = (s2 / nf - mean * mean).max(0.0) * nf / (nf - 1.0);
    let se = (variance / nf).sqrt();
    let (tail_value, tail_error) = match w.right {
        RightTail::Exact(v) => (v, 0.0),
        RightTail::Bounded(b) => (0.0, b),
        RightTail::Asymptotic => {
            let v = p.exact_tail(w.hi)?;
            warnings.push(format!("tail beyond tau = {} taken from two-cluster asymptotics", w.hi));
            (v, 0.0)
        }
    };
    let value = mean + tail_value;
    if se > cfg.rel_tol * value.abs() {
        warnings.push("relative standard error above rel_tol".to_string());
    }
    Ok(ModularResult {
        value,
        abs_error_estimate: 3.0 * se + w.left_bound + tail_error,
        truncation_radius: half,
        evaluations: total,
        method: Method::MonteCarlo,
        standard_error: Some(se),
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

/// `ln int_0^inf A(m e^{-s w}) dw`, the radial shell integral evaluated
/// directly (not through `Abar`).
fn ln_shell_integral(a: &YoungFunction, m: f64, s: f64, rel: f64) -> Result<f64> {
    if m == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let tol = Tolerance::new(0.0, rel, 4000);
    let ln_f = |w: f64| a.ln_eval(m * (-s * w).exp());
    let mut breaks: Vec<f64> = a
        .breakpoints()
        .iter()
        .filter(|&&b| b < m)
        .map(|b| (m / b).ln() / s)
        .collect();
    let mut width = 8.0 / s;
    loop {
        let mut pts = quad::graded_points(0.0, width, 0.25 / s);
        pts.append(&mut breaks.clone());
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts.retain(|&x| x <= width);
        let est = quad::ln_integrate(ln_f, &pts, tol);
        if !est.converged || est.ln_value.is_nan() {
            return Err(Error::numeric("shell integral", est.ln_value.exp(), est.rel_error));
        }
        // A(m e^{-s w}) <= A(m e^{-s W}) e^{-s (w - W)} beyond W.
        let tail = (ln_f(width) - est.ln_value).exp() / s;
        if tail <= rel * 1e-2 {
            return Ok(est.ln_value);
        }
        if width > 1e5 / s {
            return Err(Error::numeric("shell integral tail", est.ln_value.exp(), tail));
        }
        width *= 2.0;
        breaks.retain(|&b| b < width);
    }
}

/// Checks `int_t^inf A((1+eps) rho / r^s) dr / r = Abar((1+eps) rho / t^s) / s`
/// with the left side integrated directly in `ln r`.
pub fn radial_identity_residual(
    a: &YoungFunction,
    rho: f64,
    t: f64,
    s: f64,
    eps: f64,
    cfg: &QuadratureConfig,
) -> Result<IdentityCheck> {
    check_order(s)?;
    if !(rho > 0.0 && t > 0.0 && eps >= 0.0) {
        return Err(Error::invalid("need rho > 0, t > 0 and eps >= 0"));
    }
    let m = (1.0 + eps) * rho / t.powf(s);
    let lhs = ln_shell_integral(a, m, s, (cfg.rel_tol * 1e-2).max(1e-14))?;
    let rhs = young::ln_abar(a, m, cfg)? - s.ln();
    Ok(IdentityCheck {
        lhs: lhs.exp(),
        rhs: rhs.exp(),
        residual: (lhs - rhs).exp_m1().abs(),
    })
}

/// Checks
/// `int int_{|x-y| > 2|x|} A(|u(x)|/|x-y|^s) dy dx / |x-y|^n
///  = (|S^{n-1}|/s) int Abar(|u(x)| / (2|x|)^s) dx`.
///
/// The left side integrates the `y` shell directly in `ln |x - y|`; both
/// sides share the spatial quadrature over `e^{-40} <= |x| <= R`, where `R`
/// is the support radius or the point where `u` underflows.
pub fn shell_identity_residual(u: &TestFunction, a: &YoungFunction, s: f64, cfg: &QuadratureConfig) -> Result<IdentityCheck> {
    check_order(s)?;
    cfg.validate()?;
    if !(u.is_radial() || u.dim() == 1) {
        return Err(Error::invalid("shell identity needs a radial test function or n = 1"));
    }
    let n = u.dim();
    let area = sphere_area(n);
    let radius = u.support_radius().unwrap_or_else(|| decay_radius(u).min(1e6));
    let rel = (cfg.rel_tol * 1e-2).max(1e-14);
    let failed = Cell::new(None);
    let weight = |rho: f64| rho.powi(n as i32 - 1) * area;
    let arg = |rho: f64| u.polar(rho, 1.0).abs() / (2.0 * rho).powf(s);
    let tol = Tolerance::new(0.0, rel, cfg.max_subdivisions);
    let integrate = |h: &dyn Fn(f64) -> f64| {
        let lo = -40.0;
        let hi = radius.ln();
        let mut pts = vec![lo];
        let mut x = lo + 4.0;
        while x < hi {
            pts.push(x);
            x += 4.0;
        }
        pts.push(hi);
        pts.push(0.0);
        let pts = quad::with_breaks(lo, hi, &pts);
        quad::integrate(
            |sg: f64| {
                let rho = sg.exp();
                h(rho) * weight(rho) * rho
            },
            &pts,
            tol,
        )
    };
    let lhs = integrate(&|rho| {
        let m = arg(rho);
        match ln_shell_integral(a, m, s, rel) {
            Ok(v) => area * v.exp(),
            Err(e) => {
                failed.set(Some(e));
                f64::NAN
            }
        }
    });
    if let Some(e) = failed.take() {
        return Err(e);
    }
    let rhs = integrate(&|rho| {
        let m = arg(rho);
        match young::abar(a, m, cfg) {
            Ok(v) => area / s * v,
            Err(e) => {
                failed.set(Some(e));
                f64::NAN
            }
        }
    });
    if let Some(e) = failed.take() {
        return Err(e);
    }
    let l = lhs.require("shell identity lhs")?.value;
    let r = rhs.require("shell identity rhs")?.value;
    Ok(IdentityCheck {
        lhs: l,
        rhs: r,
        residual: (l - r).abs() / r.abs().max(1e-300),
    })
}
