//! Special functions and quadrature: generalized Laguerre polynomials,
//! ln Γ and adaptive Gauss-Legendre integration.

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// A single evaluation of L_n^(α)(x).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaguerreEval {
    pub n: u32,
    pub alpha: f64,
    pub x: f64,
    pub value: f64,
}

impl LaguerreEval {
    pub fn new(n: u32, alpha: f64, x: f64) -> Result<Self> {
        Ok(Self {
            n,
            alpha,
            x,
            value: laguerre(n, alpha, x)?,
        })
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > -1.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("laguerre order alpha = {alpha} must be > -1")))
    }
}

/// Generalized Laguerre polynomial L_n^(α)(x) by the ascending three-term
/// recurrence
///
/// k·L_k = (2k − 1 + α − x)·L_{k−1} − (k − 1 + α)·L_{k−2},
///
/// starting from L_0 = 1 and L_1 = 1 + α − x.
pub fn laguerre(n: u32, alpha: f64, x: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(laguerre_unchecked(n, alpha, x))
}

/// L_n^(α)(x) with the convention L_{−1} ≡ 0, as needed by derivative terms.
pub fn laguerre_or_zero(n: i64, alpha: f64, x: f64) -> Result<f64> {
    if n < 0 {
        check_alpha(alpha)?;
        return Ok(0.0);
    }
    laguerre(n as u32, alpha, x)
}

pub(crate) fn laguerre_unchecked(n: u32, alpha: f64, x: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut cur = 1.0 + alpha - x;
    for k in 2..=n {
        let k = f64::from(k);
        let next = ((2.0 * k - 1.0 + alpha - x) * cur - (k - 1.0 + alpha) * prev) / k;
        prev = cur;
        cur = next;
    }
    cur
}

/// Counts sign changes of L_n^(α) sampled on (0, x_max] with x_max = 4n + 2α + 4,
/// which lies beyond the largest zero.
pub fn laguerre_node_count(n: u32, alpha: f64, samples: usize) -> Result<u32> {
    check_alpha(alpha)?;
    let x_max = 4.0 * f64::from(n) + 2.0 * alpha + 4.0;
    let samples = samples.max(2);
    let step = x_max / samples as f64;
    let values = (1..=samples).map(|i| laguerre_unchecked(n, alpha, step * i as f64));
    Ok(count_sign_changes(values))
}

/// Number of strict sign changes in a sequence, skipping exact zeros.
pub fn count_sign_changes<I: IntoIterator<Item = f64>>(values: I) -> u32 {
    let mut count = 0;
    let mut last = 0.0_f64;
    for v in values {
        if v == 0.0 || !v.is_finite() {
            continue;
        }
        if last != 0.0 && (v > 0.0) != (last > 0.0) {
            count += 1;
        }
        last = v;
    }
    count
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// ln Γ(x) for x > 0 (Lanczos, g = 7).
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("log_gamma requires x > 0, got {x}")));
    }
    // exact zeros of ln Γ
    if x == 1.0 || x == 2.0 {
        return Ok(0.0);
    }
    if x < 0.5 {
        // reflection: Γ(x)Γ(1 − x) = π / sin(πx)
        let pi = std::f64::consts::PI;
        return Ok((pi / (pi * x).sin()).ln() - log_gamma(1.0 - x)?);
    }
    if x < 1.5 {
        // shift so the Lanczos sum is evaluated away from its least accurate region
        return Ok(log_gamma(x + 1.0)? - x.ln());
    }
    let z = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    Ok(0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + acc.ln())
}

/// Nodes and weights of the 10-point Gauss-Legendre rule on [−1, 1].
fn gauss_legendre_rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre_nodes(10))
}

/// Computes the n-point Gauss-Legendre rule by Newton iteration on P_n.
pub fn gauss_legendre_nodes(n: usize) -> Vec<(f64, f64)> {
    let nf = n as f64;
    let mut rule = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d.is_finite() {
            dp = d;
        }
        rule.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    rule
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    (p1, nf * (x * p1 - p0) / (x * x - 1.0))
}

fn gl_panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    half * gauss_legendre_rule()
        .iter()
        .map(|&(x, w)| w * f(mid + half * x))
        .sum::<f64>()
}

const MAX_PANELS: usize = 200_000;

/// Adaptive composite Gauss-Legendre quadrature of f over [a, b].
///
/// `b` may be `f64::INFINITY`; the tail is then integrated in growing panels
/// until a panel contributes less than `tol·1e-3`, which suits integrands with
/// an exponential envelope.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be > 0, got {tol}")));
    }
    if !a.is_finite() || b.is_nan() || b < a {
        return Err(Error::Domain(format!("bad integration interval [{a}, {b}]")));
    }
    if b.is_finite() {
        return integrate_finite(&f, a, b, tol);
    }

    let cutoff = tol * 1e-3;
    let mut total = 0.0;
    let mut lo = a;
    let mut width = 1.0;
    let mut quiet_panels = 0;
    for _ in 0..2000 {
        let hi = lo + width;
        let part = integrate_finite(&f, lo, hi, tol * 0.5)?;
        total += part;
        let edge = f(hi).abs() * width;
        if part.abs() < cutoff && edge < cutoff {
            quiet_panels += 1;
            if quiet_panels >= 2 {
                return Ok(total);
            }
        } else {
            quiet_panels = 0;
        }
        lo = hi;
        width = (width * 2.0).min(64.0);
    }
    Err(Error::NoConvergence(
        "integrand tail did not decay within the truncation limit".into(),
    ))
}

fn integrate_finite<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let span = b - a;
    let mut stack = vec![(a, b, gl_panel(f, a, b))];
    let mut total = 0.0;
    let mut panels = 0;
    while let Some((lo, hi, coarse)) = stack.pop() {
        panels += 1;
        if panels > MAX_PANELS {
            return Err(Error::NoConvergence(format!(
                "adaptive quadrature on [{a}, {b}] exceeded {MAX_PANELS} panels"
            )));
        }
        let mid = 0.5 * (lo + hi);
        let left = gl_panel(f, lo, mid);
        let right = gl_panel(f, mid, hi);
        let fine = left + right;
        if !fine.is_finite() {
            return Err(Error::NoConvergence(format!("non-finite integrand near {mid}")));
        }
        let local_tol = (tol * (hi - lo) / span).max(4.0 * f64::EPSILON * fine.abs());
        let diff = (fine - coarse).abs();
        if diff <= local_tol {
            total += fine;
        } else if hi - lo <= span * 1e-12 {
            // integrable endpoint singularities leave only a tiny residue here
            if diff > tol * 1e-3 {
                return Err(Error::NoConvergence(format!(
                    "quadrature stalled near {mid} (panel error {diff:e})"
                )));
            }
            total += fine;
        } else {
            stack.push((lo, mid, left));
            stack.push((mid, hi, right));
        }
    }
    Ok(total)
}
