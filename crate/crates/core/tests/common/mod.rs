//! Test-side reference computations, independent of the library's engines.
#![allow(dead_code)]

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Composite fixed-order rule over the sorted break list.
pub fn fixed_rule<F: Fn(f64) -> f64>(f: F, breaks: &[f64], rule: &[(f64, f64)]) -> f64 {
    let mut total = 0.0;
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
        total += rule.iter().map(|(x, wt)| wt * f(c + h * x)).sum::<f64>() * h;
    }
    total
}

fn tent(x: f64) -> f64 {
    (1.0 - x.abs()).max(0.0)
}

/// `int int |tent(x) - tent(y)|^p / |x - y|^{1 + s p} dx dy` by an iterated
/// fixed Gauss–Legendre rule in `(x, r = y - x)`: the inner `x` integral is
/// split at every kink, the increment uses `r = v^8` near zero, and the
/// region `r > 2`, where the supports separate, is added in closed form.
pub fn tent_power_brute_force(p: f64, s: f64) -> f64 {
    let rule = gauss_legendre(24);
    let inner = |r: f64| {
        let mut breaks = vec![-1.0 - r, -r, 1.0 - r, -1.0, 0.0, 1.0];
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        fixed_rule(|x| ((tent(x + r) - tent(x)).abs() * r.powf(-s)).powf(p), &breaks, &rule)
    };
    let m = 8.0;
    let panels: Vec<f64> = (0..=64).map(|k| k as f64 / 64.0).collect();
    let near = fixed_rule(
        |v| {
            if v <= 0.0 {
                return 0.0;
            }
            let r = v.powf(m);
            inner(r) / r * m * v.powf(m - 1.0)
        },
        &panels,
        &rule,
    );
    let mid_breaks: Vec<f64> = (0..=32).map(|k| 1.0 + k as f64 / 32.0).collect();
    let mid = fixed_rule(|r| inner(r) / r, &mid_breaks, &rule);
    // For r > 2 the inner integral is 2 int tent^p r^{-sp} = 4 r^{-sp} / (p + 1).
    let far = 4.0 * 2f64.powf(-s * p) / ((p + 1.0) * s * p);
    2.0 * (near + mid + far)
}
