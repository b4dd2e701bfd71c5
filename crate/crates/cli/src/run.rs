//! Dispatch of a validated run to the library and shaping of its artifacts.

use orlicz_frac::hardy::{self, CompanionGrid};
use orlicz_frac::limits::{self, CounterexampleParams};
use orlicz_frac::modular;
use orlicz_frac::seminorm::{self, IdentityCheck};
use orlicz_frac::testfn::DEFAULT_KAPPA;
use orlicz_frac::young;
use orlicz_frac::{Error, Result, TestFunction, YoungFunction};
use serde_json::{json, Value};

use crate::config::{Command, RunConfig};

/// Everything a run produces. `extra` holds additional CSV tables keyed by
/// a file-name suffix.
pub struct Artifacts {
    pub csv: String,
    pub result: Value,
    pub extra: Vec<(&'static str, String)>,
}

/// Shortest representation that parses back to the same double.
fn num(x: f64) -> String {
    format!("{x:?}")
}

fn csv_pairs(rows: &[(&str, String)]) -> String {
    let mut out = String::from("quantity,value\n");
    for (k, v) in rows {
        out.push_str(&format!("{k},{v}\n"));
    }
    out
}

pub fn young_from(cfg: &RunConfig) -> Result<YoungFunction> {
    match cfg.str_or("family", "power") {
        "power" => YoungFunction::power(cfg.f64_or("p", 2.0)?),
        "power-log" => YoungFunction::power_log(cfg.f64_or("p", 2.0)?),
        "exp-counterexample" => {
            let gamma = cfg.f64_or("gamma", 2.0)?;
            match cfg.f64("t0")? {
                Some(t0) => YoungFunction::exp_counterexample(gamma, t0),
                None => YoungFunction::exp_counterexample_default(gamma),
            }
        }
        "poly" => {
            let spec = cfg
                .get("terms")
                .ok_or_else(|| Error::InvalidParameter("family poly requires --terms c:p,c:p".into()))?;
            let mut terms = Vec::new();
            for item in spec.split(',') {
                let (c, p) = item
                    .split_once(':')
                    .ok_or_else(|| Error::InvalidParameter(format!("term '{item}' is not c:p")))?;
                let parse = |x: &str| {
                    x.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::InvalidParameter(format!("term '{item}' is not numeric")))
                };
                terms.push((parse(c)?, parse(p)?));
            }
            YoungFunction::poly(&terms)
        }
        "expm1" => YoungFunction::expm1(),
        other => Err(Error::InvalidParameter(format!(
            "unknown family '{other}' (power, power-log, exp-counterexample, poly, expm1)"
        ))),
    }
}

pub fn testfn_from(cfg: &RunConfig) -> Result<TestFunction> {
    let n = cfg.usize_or("n", 1)?;
    let base = match cfg.str_or("testfn", "tent") {
        "zero" => TestFunction::zero(n)?,
        "constant" => TestFunction::constant(n, cfg.f64_or("value", 1.0)?)?,
        "tent" => {
            if n != 1 {
                return Err(Error::InvalidParameter("the tent lives in one dimension".into()));
            }
            TestFunction::tent()
        }
        "exp" => TestFunction::exp_decay(n)?,
        "v" => TestFunction::counterexample_v(n, cfg.f64_or("gamma", 2.0)?, cfg.f64_or("kappa", DEFAULT_KAPPA)?)?,
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown test function '{other}' (zero, constant, tent, exp, v)"
            )))
        }
    };
    let scaled = match cfg.f64("scale")? {
        Some(l) => base.scale(l)?,
        None => base,
    };
    match cfg.f64("shift")? {
        Some(x) => scaled.translate(x),
        None => Ok(scaled),
    }
}

fn s_single(cfg: &RunConfig) -> Result<f64> {
    let s = cfg.list("s")?.unwrap_or_default();
    match s.as_slice() {
        [one] => Ok(*one),
        _ => Err(Error::InvalidParameter("--s expects a single value for this command".into())),
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

pub fn run(cfg: &RunConfig) -> Result<Artifacts> {
    let quad = cfg.quadrature()?;
    match cfg.command {
        Command::YoungInfo => {
            let a = young_from(cfg)?;
            let d = young::diagnose(&a, &quad)?;
            let csv = csv_pairs(&[
                ("delta2_constant", num(d.delta2.constant)),
                ("delta2_unbounded_on_grid", d.delta2.flag.is_some().to_string()),
                ("index", num(d.index.value)),
                ("index_unbounded", d.index.unbounded.to_string()),
                ("growth_constant", num(d.growth_constant)),
                ("abar_at_one", num(d.abar_at_one)),
            ]);
            Ok(Artifacts {
                csv,
                result: to_value(&d),
                extra: Vec::new(),
            })
        }
        Command::Modular => {
            let a = young_from(cfg)?;
            let u = testfn_from(cfg)?;
            let lambda = cfg.f64_or("lambda", 1.0)?;
            let m = modular::orlicz_modular(&u, &a, lambda, &quad)?;
            let norm = if u.is_zero() {
                0.0
            } else {
                modular::luxemburg_norm(&u, &a, &quad)?
            };
            let csv = csv_pairs(&[
                ("modular", num(m.value)),
                ("abs_error", num(m.abs_error_estimate)),
                ("luxemburg_norm", num(norm)),
            ]);
            Ok(Artifacts {
                csv,
                result: json!({ "modular": to_value(&m), "luxemburg_norm": norm }),
                extra: Vec::new(),
            })
        }
        Command::Seminorm => {
            let a = young_from(cfg)?;
            let u = testfn_from(cfg)?;
            let s = s_single(cfg)?;
            let r = match cfg.str_or("method", "deterministic") {
                "deterministic" => seminorm::frac_modular(&u, &a, s, &quad)?,
                "mc" => seminorm::frac_modular_mc(&u, &a, s, &quad)?,
                other => return Err(Error::InvalidParameter(format!("unknown method '{other}' (deterministic, mc)"))),
            };
            let mut rows = vec![
                ("value", num(r.value)),
                ("abs_error", num(r.abs_error_estimate)),
                ("truncation_radius", num(r.truncation_radius)),
                ("evaluations", r.evaluations.to_string()),
            ];
            if let Some(se) = r.standard_error {
                rows.push(("standard_error", num(se)));
            }
            Ok(Artifacts {
                csv: csv_pairs(&rows),
                result: to_value(&r),
                extra: Vec::new(),
            })
        }
        Command::Limit | Command::MsLimit => {
            let u = testfn_from(cfg)?;
            let s_list = cfg.list("s")?.unwrap_or_default();
            let tol = cfg.f64_or("tol", 0.02)?;
            let study = if cfg.command == Command::Limit {
                limits::limit_study(&u, &young_from(cfg)?, &s_list, &quad, tol)?
            } else {
                let p = cfg.f64("p")?.unwrap_or(2.0);
                limits::ms_power_study(&u, p, &s_list, &quad, tol)?
            };
            Ok(Artifacts {
                csv: study.to_csv(),
                result: to_value(&study),
                extra: Vec::new(),
            })
        }
        Command::Hardy => {
            let a = young_from(cfg)?;
            let u = testfn_from(cfg)?;
            let s = s_single(cfg)?;
            let grid = CompanionGrid {
                points_per_decade: cfg.usize_or("points-per-decade", CompanionGrid::default().points_per_decade)?,
                ..CompanionGrid::default()
            };
            let mut c_grid = cfg.list("c-grid")?.unwrap_or_else(|| vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0]);
            if c_grid.is_empty() || c_grid.iter().any(|c| !(*c > 0.0)) {
                return Err(Error::InvalidParameter("--c-grid must list positive constants".into()));
            }
            c_grid.sort_by(f64::total_cmp);
            let companion = hardy::build_companion_on(&a, s, u.dim(), &quad, &grid)?;
            let check = hardy::check_with(&u, &companion, &a, &c_grid, &quad)?;
            let mut csv = String::from("c,rhs,holds\n");
            for row in &check.rows {
                csv.push_str(&format!("{:?},{:?},{}\n", row.c, row.rhs, row.holds));
            }
            Ok(Artifacts {
                csv,
                result: json!({
                    "conditions": to_value(&companion.conditions()),
                    "inverse_convention": companion.inverse_convention(),
                    "grid": to_value(&companion.grid()),
                    "lhs": check.lhs,
                    "constant": check.constant,
                    "verdict": if check.constant.is_some() { "holds-in-grid" } else { "none-in-grid" },
                    "rows": to_value(&check.rows),
                }),
                extra: vec![
                    ("b_inverse", companion.b_inverse_csv()),
                    ("companion", companion.companion_csv()),
                ],
            })
        }
        Command::Counterexample => {
            let d = CounterexampleParams::default();
            let params = CounterexampleParams {
                gamma: cfg.f64_or("gamma", d.gamma)?,
                lambda: cfg.f64_or("lambda", d.lambda)?,
                sigma: cfg.f64_or("sigma", d.sigma)?,
                kappa: cfg.f64_or("kappa", d.kappa)?,
                alpha: cfg.f64_or("alpha", d.alpha)?,
                n: cfg.usize_or("n", d.n)?,
            };
            params.validate()?;
            let s_list = cfg.list("s")?.unwrap_or_default();
            if s_list.is_empty() {
                return Err(Error::InvalidParameter("--s needs at least one value".into()));
            }
            let mut csv = String::from("s,lower_bound,ln_lower_bound\n");
            let mut values = Vec::new();
            for &s in &s_list {
                let ln_v = limits::ln_counterexample_lower_bound(s, &params)?;
                csv.push_str(&format!("{s:?},{:?},{ln_v:?}\n", ln_v.exp()));
                values.push(ln_v);
            }
            let monotone = values.windows(2).all(|w| w[1] > w[0]);
            let growth = (values[values.len() - 1] - values[0]).exp();
            let a = YoungFunction::exp_counterexample_default(params.gamma)?;
            let v = TestFunction::counterexample_v(params.n, params.gamma, params.kappa)?.scale(params.lambda)?;
            let finite = modular::orlicz_modular(&v, &a, 1.0, &quad)?;
            Ok(Artifacts {
                csv,
                result: json!({
                    "params": to_value(&params),
                    "ln_lower_bound": values,
                    "monotone_growth": monotone,
                    "growth_factor": growth,
                    "unevaluated_constant": "positive factor depending on sigma and n, not evaluated",
                    "modular_of_v_over_lambda": to_value(&finite),
                }),
                extra: Vec::new(),
            })
        }
        Command::Identities => {
            let mut cases: Vec<(String, IdentityCheck)> = Vec::new();
            let power = |p: f64| YoungFunction::power(p);
            let radial = [
                ("radial_power2_rho1_t1_s0.5", power(2.0)?, 1.0, 1.0, 0.5, 0.0),
                ("radial_counterexample_rho0.1_t2_s0.2", YoungFunction::exp_counterexample_default(2.0)?, 0.1, 2.0, 0.2, 0.0),
                ("radial_power3_rho0.5_t1.5_s0.7_eps1", power(3.0)?, 0.5, 1.5, 0.7, 1.0),
            ];
            for (name, a, rho, t, s, eps) in radial {
                cases.push((name.to_string(), seminorm::radial_identity_residual(&a, rho, t, s, eps, &quad)?));
            }
            cases.push((
                "shell_tent_power2_s0.3_n1".to_string(),
                seminorm::shell_identity_residual(&TestFunction::tent(), &power(2.0)?, 0.3, &quad)?,
            ));
            cases.push((
                "shell_exp_power1_s0.5_n2".to_string(),
                seminorm::shell_identity_residual(&TestFunction::exp_decay(2)?, &power(1.0)?, 0.5, &quad)?,
            ));
            let mut csv = String::from("case,lhs,rhs,residual\n");
            for (name, c) in &cases {
                csv.push_str(&format!("{name},{:?},{:?},{:?}\n", c.lhs, c.rhs, c.residual));
            }
            let result = cases
                .iter()
                .map(|(name, c)| json!({ "case": name, "lhs": c.lhs, "rhs": c.rhs, "residual": c.residual }))
                .collect();
            Ok(Artifacts {
                csv,
                result: Value::Array(result),
                extra: Vec::new(),
            })
        }
    }
}
