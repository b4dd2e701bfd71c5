//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit if any fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use orlicz_frac::hardy::{build_companion, hardy_check};
use orlicz_frac::limits::{self, CounterexampleParams};
use orlicz_frac::modular::orlicz_modular;
use orlicz_frac::seminorm::{frac_modular_1d, frac_modular_mc, radial_identity_residual, shell_identity_residual};
use orlicz_frac::young::{abar, delta2_diagnose, Formula, Piece};
use orlicz_frac::{QuadratureConfig, TestFunction, YoungFunction};

#[path = "../../core/tests/common/mod.rs"]
mod oracle;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const S_GRID: [f64; 4] = [0.2, 0.1, 0.05, 0.025];

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn fmt_err(e: orlicz_frac::Error) -> String {
    format!("error: {e}")
}

fn within_time(start: Instant, budget: Duration, detail: String) -> Outcome {
    let elapsed = start.elapsed();
    check(elapsed < budget, format!("{detail}, {:.2?} (budget {budget:?})", elapsed))
}

fn power_limit() -> Outcome {
    let start = Instant::now();
    let study = limits::ms_power_study(&TestFunction::tent(), 2.0, &S_GRID, &QuadratureConfig::default(), 0.02)
        .map_err(fmt_err)?;
    let target = 4.0 / 3.0;
    let rel = (study.extrapolated - target).abs() / target;
    let detail = format!("extrapolated {:.6} vs 4/3, rel {rel:.2e}, verdict {:?}", study.extrapolated, study.verdict);
    if rel > 0.02 {
        return Err(detail);
    }
    within_time(start, Duration::from_secs(60), detail)
}

fn orlicz_limit() -> Outcome {
    let start = Instant::now();
    let a = YoungFunction::poly(&[(1.0, 2.0), (1.0, 3.0)]).map_err(fmt_err)?;
    let study = limits::limit_study(&TestFunction::tent(), &a, &S_GRID, &QuadratureConfig::default(), 0.03)
        .map_err(fmt_err)?;
    // int_{-1}^{1} (1-|x|)^2/2 + (1-|x|)^3/3 dx = 1/3 + 1/6, times 2 omega_1 = 4
    let target = 4.0 * (1.0 / 3.0 + 1.0 / 6.0);
    let rel = (study.extrapolated - target).abs() / target;
    let detail = format!("extrapolated {:.6} vs {target}, rel {rel:.2e}", study.extrapolated);
    if rel > 0.03 {
        return Err(detail);
    }
    within_time(start, Duration::from_secs(120), detail)
}

fn shell_identity() -> Outcome {
    let cfg = QuadratureConfig::default();
    let tent = shell_identity_residual(&TestFunction::tent(), &YoungFunction::power(2.0).unwrap(), 0.3, &cfg)
        .map_err(fmt_err)?;
    let exp = shell_identity_residual(
        &TestFunction::exp_decay(2).unwrap(),
        &YoungFunction::power(1.0).unwrap(),
        0.5,
        &cfg,
    )
    .map_err(fmt_err)?;
    let worst = tent.residual.max(exp.residual);
    check(worst <= 1e-6, format!("residuals {:.2e}, {:.2e}", tent.residual, exp.residual))
}

fn radial_identity() -> Outcome {
    let cfg = QuadratureConfig::default();
    let cases = [
        (YoungFunction::power(2.0).unwrap(), 1.0, 1.0, 0.5, 0.0),
        (YoungFunction::exp_counterexample_default(2.0).unwrap(), 0.1, 2.0, 0.2, 0.0),
        (YoungFunction::power(3.0).unwrap(), 0.5, 1.5, 0.7, 1.0),
    ];
    let mut residuals = Vec::new();
    for (a, rho, t, s, eps) in cases {
        residuals.push(radial_identity_residual(&a, rho, t, s, eps, &cfg).map_err(fmt_err)?);
    }
    let unit = &residuals[0];
    let analytic = (unit.lhs - 1.0).abs() <= 1e-8 && (unit.rhs - 1.0).abs() <= 1e-8;
    let worst = residuals.iter().map(|c| c.residual).fold(0.0, f64::max);
    check(
        worst <= 1e-8 && analytic,
        format!("worst residual {worst:.2e}, analytic case lhs {} rhs {}", unit.lhs, unit.rhs),
    )
}

fn sandwich() -> Outcome {
    let cfg = QuadratureConfig::default();
    let custom = YoungFunction::piecewise(vec![
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
            formula: Formula::ExpMinusOne { coef: 1.0, rate: 1.0 },
        },
    ])
    .map_err(fmt_err)?;
    let families = [
        YoungFunction::power(1.0).unwrap(),
        YoungFunction::power(2.5).unwrap(),
        YoungFunction::power_log(1.5).unwrap(),
        YoungFunction::exp_counterexample_default(2.0).unwrap(),
        YoungFunction::poly(&[(1.0, 2.0), (1.0, 3.0)]).unwrap(),
        YoungFunction::expm1().unwrap(),
        custom,
    ];
    let slack = 1e-10;
    let mut violations = 0;
    let mut checked = 0;
    for a in &families {
        for k in 0..1000 {
            let t = 10f64.powf(-4.0 + 8.0 * k as f64 / 999.0);
            let bar = abar(a, t, &cfg).map_err(|e| format!("{:?} at t={t:e}: {e}", a.family()))?;
            checked += 1;
            if a.eval(t / 2.0) > bar * (1.0 + slack) || bar > a.eval(t) * (1.0 + slack) {
                violations += 1;
            }
        }
    }
    check(
        violations == 0,
        format!("{violations} violations in {checked} checks over t in [1e-4, 1e4]"),
    )
}

fn hardy_power() -> Outcome {
    let cfg = QuadratureConfig::default();
    let a = YoungFunction::power(2.0).unwrap();
    let b = build_companion(&a, 0.1, 1, &cfg).map_err(fmt_err)?;
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for k in 0..=400 {
        let t = 10f64.powf(-2.0 + k as f64 / 100.0);
        let ratio = b.eval(t) / (t * t);
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    let spread = hi / lo;
    let hardy = hardy_check(&TestFunction::tent(), &a, 0.1, 1, &[1.0, 2.0, 4.0, 8.0, 16.0, 32.0], &cfg)
        .map_err(fmt_err)?;
    let detail = format!("B/t^2 spread {spread:.4}, constant {:?}", hardy.constant);
    check(spread <= 2.0 && hardy.constant.is_some_and(f64::is_finite), detail)
}

fn counterexample() -> Outcome {
    let start = Instant::now();
    let params = CounterexampleParams {
        gamma: 2.0,
        lambda: 1.5,
        sigma: 0.9,
        kappa: 1e6,
        alpha: 1.0,
        n: 1,
    };
    let mut ln_values = Vec::new();
    for s in S_GRID {
        ln_values.push(limits::ln_counterexample_lower_bound(s, &params).map_err(fmt_err)?);
    }
    let monotone = ln_values.windows(2).all(|w| w[1] > w[0]);
    let growth = (ln_values[3] - ln_values[0]).exp();
    let a = YoungFunction::exp_counterexample_default(params.gamma).unwrap();
    let v = TestFunction::counterexample_v(params.n, params.gamma, params.kappa)
        .and_then(|v| v.scale(params.lambda))
        .map_err(fmt_err)?;
    let modular = orlicz_modular(&v, &a, 1.0, &QuadratureConfig::default()).map_err(fmt_err)?;
    let detail = format!(
        "monotone {monotone}, growth {growth:.3e}, modular of v/lambda {:.4e}",
        modular.value
    );
    if !(monotone && growth >= 10.0 && modular.value.is_finite()) {
        return Err(detail);
    }
    within_time(start, Duration::from_secs(30), detail)
}

fn doubling() -> Outcome {
    let mut worst = 0.0f64;
    for p in [1.0, 2.0, 3.0] {
        let r = delta2_diagnose(&YoungFunction::power(p).unwrap(), 1e-6, 1e6, 241).map_err(fmt_err)?;
        worst = worst.max((r.constant - 2f64.powf(p)).abs());
    }
    let ce = delta2_diagnose(&YoungFunction::exp_counterexample_default(2.0).unwrap(), 1e-6, 1e6, 241)
        .map_err(fmt_err)?;
    check(
        worst <= 1e-9 && ce.flag.is_some(),
        format!("max |K - 2^p| {worst:.1e}, counterexample flag {:?}", ce.flag),
    )
}

fn oracle() -> Outcome {
    let cfg = QuadratureConfig::default();
    let u = TestFunction::tent();
    let mut worst = 0.0f64;
    for p in [1.5, 2.0, 3.0] {
        let a = YoungFunction::power(p).unwrap();
        for s in [0.2, 0.5, 0.8] {
            let reference = oracle::tent_power_brute_force(p, s);
            let v = frac_modular_1d(&u, &a, s, &cfg).map_err(fmt_err)?.value;
            worst = worst.max((v / reference - 1.0).abs());
        }
    }
    let a = YoungFunction::power(2.0).unwrap();
    let mc_cfg = QuadratureConfig {
        mc_samples: 1_000_000,
        rng_seed: 20_241_017,
        ..cfg
    };
    let det = frac_modular_1d(&u, &a, 0.5, &cfg).map_err(fmt_err)?.value;
    let mc = frac_modular_mc(&u, &a, 0.5, &mc_cfg).map_err(fmt_err)?;
    let se = mc.standard_error.unwrap_or(f64::INFINITY);
    let z = (mc.value - det).abs() / se;
    check(
        worst <= 1e-4 && z <= 3.0,
        format!("tensor oracle rel {worst:.2e} over 9 cases, MC {:.5} vs {det:.5} at {z:.2} SE", mc.value),
    )
}

fn run_cli(args: &[&str], out: &Path) -> Result<String, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_orlicz-frac"))
        .args(args)
        .arg("--out")
        .arg(out)
        .status()
        .map_err(|e| e.to_string())?;
    if !status.success() {
        return Err(format!("{args:?} exited with {status}"));
    }
    let mut csv = out.as_os_str().to_owned();
    csv.push(".csv");
    std::fs::read_to_string(&csv).map_err(|e| e.to_string())
}

fn determinism() -> Outcome {
    let dir = std::env::temp_dir().join(format!("orlicz-frac-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let runs: [&[&str]; 2] = [
        &[
            "seminorm", "--family", "power", "--p", "2", "--testfn", "tent", "--s", "0.4", "--method", "mc",
            "--mc-samples", "20000", "--seed", "7",
        ],
        &[
            "limit", "--family", "power", "--p", "2", "--testfn", "tent", "--n", "1", "--s", "0.2,0.1,0.05,0.025",
            "--tol", "0.02",
        ],
    ];
    let mut compared = 0;
    for (i, args) in runs.iter().enumerate() {
        let first = run_cli(args, &dir.join(format!("run{i}a")))?;
        let second = run_cli(args, &dir.join(format!("run{i}b")))?;
        if first != second {
            return Err(format!("{} CSV bodies differ", args[0]));
        }
        compared += first.len();
    }
    let _ = std::fs::remove_dir_all(&dir);
    Ok(format!("{} runs repeated, {compared} bytes identical", runs.len()))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("power-case limit, tent, p = 2", power_limit),
        ("Orlicz limit, A = t^2 + t^3", orlicz_limit),
        ("shell identity", shell_identity),
        ("radial identity", radial_identity),
        ("sandwich A(t/2) <= Abar(t) <= A(t)", sandwich),
        ("Hardy companion, power case", hardy_power),
        ("counterexample divergence trend", counterexample),
        ("doubling dichotomy", doubling),
        ("oracle and Monte Carlo agreement", oracle),
        ("CLI determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, criterion)) in criteria.iter().enumerate() {
        match criterion() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
