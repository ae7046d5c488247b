//! Radial functions φ_s and the reconstructed two-component spinor.
//!
//! φ_s(ρ) = C_s (2ηρ)^{|γ_s|} e^{−ηρ} L_n^{(2|γ_s|)}(2ηρ), normalized so that
//! ∫ φ_s² ρ dρ = 1. The spinor components follow from applying the first-order
//! reconstruction operator
//!
//! Ψ = m(ρ)⁻¹ U(θ) [σ3(i∂t + Zα/ρ) + m(ρ) + σ2(∂ρ + 1/(2ρ)) + iσ1((i/ρ)∂θ − Φ_AB/ρ)] ψ_R
//!
//! to ψ_R = e^{i(m_l θ − E t)} (φ̄_+, φ̄_−), φ̄_s = C̄_s ρ^{|γ_s|} e^{−ηρ} L_n^{(2|γ_s|)}(2ηρ).

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{check_rho, pdm_mass, Spin};
use crate::specfun::{self, integrate, log_gamma};
use crate::spectrum::EnergyLevel;

/// Geometric radial mesh, all scales set by 1/η.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    /// ρ_min·η.
    pub inner: f64,
    /// ρ_max·η = n + |γ_s| + `tail`.
    pub tail: f64,
    /// 8192 keeps the second-difference residual below 1e-5 for n ≤ 3;
    /// 2048 leaves it near 3e-5.
    pub points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            inner: 1e-4,
            tail: 20.0,
            points: 8192,
        }
    }
}

impl GridSpec {
    pub fn with_points(points: usize) -> Self {
        Self {
            points,
            ..Self::default()
        }
    }

    /// Strictly increasing geometric mesh for `level`, component `s`.
    pub fn mesh(&self, level: &EnergyLevel, s: Spin) -> Result<Vec<f64>> {
        if self.points < 3 || !(self.inner > 0.0) || !(self.tail > 0.0) {
            return Err(Error::InvalidParameter(format!("bad grid spec {self:?}")));
        }
        let eta = level.eta();
        let a = component_gamma(level, s).abs();
        let lo = self.inner / eta;
        let hi = (f64::from(level.qn.n) + a + self.tail) / eta;
        Ok(geometric_mesh(lo, hi, self.points))
    }
}

pub(crate) fn geometric_mesh(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    let h = (b - a) / (points - 1) as f64;
    (0..points).map(|i| (a + h * i as f64).exp()).collect()
}

/// γ_s of component `s` in the channel of `level` (same m_l, same γ).
pub fn component_gamma(level: &EnergyLevel, s: Spin) -> f64 {
    level.gamma - s.sign() / 2.0
}

/// C_s such that ∫₀^∞ φ_s² ρ dρ = 1.
///
/// Closed form from ∫ z^{α+1} e^{−z} [L_n^{(α)}]² dz = Γ(n+α+1)(2n+α+1)/n!,
/// cross-checked by quadrature.
pub fn normalize(level: &EnergyLevel, s: Spin) -> Result<f64> {
    let closed = closed_form_norm(level.qn.n, component_gamma(level, s).abs(), level.eta())?;
    let q = quadrature_norm_integral(level, s, closed, 1e-12)?;
    if (q - 1.0).abs() > 1e-8 {
        return Err(Error::NoConvergence(format!(
            "normalization quadrature gives {q}, closed form disagrees"
        )));
    }
    Ok(closed)
}

pub(crate) fn closed_form_norm(n: u32, a: f64, eta: f64) -> Result<f64> {
    let alpha = 2.0 * a;
    let nf = f64::from(n);
    let ln_ratio = log_gamma(nf + 1.0)? - log_gamma(nf + alpha + 1.0)?;
    Ok(2.0 * eta * (ln_ratio.exp() / (2.0 * nf + alpha + 1.0)).sqrt())
}

/// ∫₀^∞ φ_s² ρ dρ for a given constant, evaluated in z = 2ηρ.
pub fn quadrature_norm_integral(level: &EnergyLevel, s: Spin, norm_constant: f64, tol: f64) -> Result<f64> {
    let a = component_gamma(level, s).abs();
    let eta = level.eta();
    let n = level.qn.n;
    let alpha = 2.0 * a;
    let integral = integrate(
        |z: f64| {
            if z == 0.0 {
                return 0.0;
            }
            let l = specfun::laguerre_unchecked(n, alpha, z);
            z.powf(alpha + 1.0) * (-z).exp() * l * l
        },
        0.0,
        f64::INFINITY,
        tol,
    )?;
    Ok(norm_constant * norm_constant * integral / (4.0 * eta * eta))
}

/// φ_s(ρ) of component `s`, normalized.
pub fn radial_phi(level: &EnergyLevel, s: Spin, rho: f64) -> Result<f64> {
    check_rho(rho)?;
    let c = closed_form_norm(level.qn.n, component_gamma(level, s).abs(), level.eta())?;
    Ok(c * radial_shape(level, s, rho))
}

/// (2ηρ)^{|γ_s|} e^{−ηρ} L_n^{(2|γ_s|)}(2ηρ), without the constant.
fn radial_shape(level: &EnergyLevel, s: Spin, rho: f64) -> f64 {
    let a = component_gamma(level, s).abs();
    let z = 2.0 * level.eta() * rho;
    z.powf(a) * (-0.5 * z).exp() * specfun::laguerre_unchecked(level.qn.n, 2.0 * a, z)
}

/// Sampled, normalized φ_s.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialFunction {
    pub level: EnergyLevel,
    pub component: Spin,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub norm_constant: f64,
}

impl RadialFunction {
    pub fn sample(level: &EnergyLevel, s: Spin, spec: &GridSpec) -> Result<Self> {
        let grid = spec.mesh(level, s)?;
        Self::on_grid(level, s, grid)
    }

    pub fn on_grid(level: &EnergyLevel, s: Spin, grid: Vec<f64>) -> Result<Self> {
        if grid.windows(2).any(|w| !(w[1] > w[0])) || grid.first().is_some_and(|r| !(*r > 0.0)) {
            return Err(Error::InvalidParameter("grid must be positive and strictly increasing".into()));
        }
        let norm_constant = normalize(level, s)?;
        let values = grid
            .iter()
            .map(|&r| norm_constant * radial_shape(level, s, r))
            .collect();
        Ok(Self {
            level: *level,
            component: s,
            grid,
            values,
            norm_constant,
        })
    }
}

/// Sign changes of a sampled radial function; equals n for a correct level.
pub fn count_nodes(radial: &RadialFunction) -> Result<u32> {
    let expected = radial.level.qn.n as usize;
    if radial.values.len() < 40 * (expected + 1) {
        return Err(Error::GridTooCoarse(format!(
            "{} samples for a function with {expected} nodes",
            radial.values.len()
        )));
    }
    let peak = radial.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    for w in radial.values.windows(2) {
        // a zero crossing between two large samples was not resolved
        if w[0] * w[1] < 0.0 && w[0].abs().min(w[1].abs()) > 0.5 * peak {
            return Err(Error::GridTooCoarse("unresolved oscillation".into()));
        }
    }
    Ok(specfun::count_sign_changes(radial.values.iter().copied()))
}

/// Relative weight of the two radial components inside the spinor.
///
/// The overall constants C̄_± are not fixed by the bound-state problem; by
/// default C̄_+ comes from the normalized φ_+ and C̄_− = `lower_to_upper`·C̄_+.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpinorConvention {
    pub lower_to_upper: f64,
}

impl Default for SpinorConvention {
    fn default() -> Self {
        Self { lower_to_upper: 1.0 }
    }
}

impl SpinorConvention {
    pub fn describe(&self) -> String {
        format!(
            "phi_s normalized independently under rho drho; spinor uses Cbar_+ = C_+ (2 eta)^|gamma_+| / sqrt(2 pi) and Cbar_- = {} * Cbar_+",
            self.lower_to_upper
        )
    }

    /// (C̄_+, C̄_−) for `level`.
    pub fn constants(&self, level: &EnergyLevel) -> Result<(f64, f64)> {
        let eta = level.eta();
        let a_up = component_gamma(level, Spin::Up).abs();
        let c_up = closed_form_norm(level.qn.n, a_up, eta)?;
        let bar_up = c_up * (2.0 * eta).powf(a_up) / (2.0 * std::f64::consts::PI).sqrt();
        Ok((bar_up, self.lower_to_upper * bar_up))
    }
}

/// Real radial parts of the reconstructed spinor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpinorComponents {
    pub f_plus: f64,
    pub f_minus: f64,
    pub g_plus: f64,
    pub g_minus: f64,
}

impl SpinorComponents {
    /// |upper|² + |lower|².
    pub fn density(&self) -> f64 {
        self.f_plus.powi(2) + self.g_minus.powi(2) + self.f_minus.powi(2) + self.g_plus.powi(2)
    }
}

/// F_±, G_± at ρ:
///
/// F_s = m(ρ)⁻¹ (m0 + sE + (κ + sZα)/ρ) φ̄_s
/// G_s = m(ρ)⁻¹ C̄_s ρ^{a} e^{−ηρ} [(η + (s·m_l − 1/2 − a + s·Φ_AB)/ρ) L_n^{(2a)} + 2η L_{n−1}^{(2a+1)}],  a = |γ_s|,
///
/// with L_{−1} ≡ 0 and Laguerre arguments 2ηρ.
pub fn spinor_components(level: &EnergyLevel, rho: f64, convention: &SpinorConvention) -> Result<SpinorComponents> {
    check_rho(rho)?;
    let p = &level.params;
    let mass = pdm_mass(p, rho)?;
    let eta = level.eta();
    let (bar_up, bar_down) = convention.constants(level)?;
    let n = i64::from(level.qn.n);
    let m_l = level.qn.m_l.value();

    let part = |s: Spin, bar: f64| -> Result<(f64, f64)> {
        let sg = s.sign();
        let a = component_gamma(level, s).abs();
        let z = 2.0 * eta * rho;
        let envelope = bar * rho.powf(a) * (-eta * rho).exp();
        let l_n = specfun::laguerre_or_zero(n, 2.0 * a, z)?;
        let l_prev = specfun::laguerre_or_zero(n - 1, 2.0 * a + 1.0, z)?;
        let f = (p.m0 + sg * level.energy + (p.kappa + sg * p.z_alpha) / rho) * envelope * l_n / mass;
        let centrifugal = (sg * m_l - 0.5 - a + sg * p.phi_ab) / rho;
        let g = envelope * ((eta + centrifugal) * l_n + 2.0 * eta * l_prev) / mass;
        Ok((f, g))
    };
    let (f_plus, g_plus) = part(Spin::Up, bar_up)?;
    let (f_minus, g_minus) = part(Spin::Down, bar_down)?;
    Ok(SpinorComponents {
        f_plus,
        f_minus,
        g_plus,
        g_minus,
    })
}

/// Full spinor amplitudes at (t, ρ, θ):
/// upper = e^{i[(m_l − 1/2)θ − Et]}(F_+ + iG_−), lower = e^{i[(m_l + 1/2)θ − Et]}(F_− − iG_+).
pub fn assemble_spinor(
    level: &EnergyLevel,
    rho: f64,
    theta: f64,
    t: f64,
    convention: &SpinorConvention,
) -> Result<(Complex64, Complex64)> {
    let c = spinor_components(level, rho, convention)?;
    let theta = theta.rem_euclid(std::f64::consts::TAU);
    let twice = level.qn.m_l.twice();
    // m_l ∓ 1/2 are integers
    let k_up = f64::from((twice - 1) / 2);
    let k_down = f64::from((twice + 1) / 2);
    let phase = |k: f64| Complex64::from_polar(1.0, k * theta - level.energy * t);
    let upper = phase(k_up) * Complex64::new(c.f_plus, c.g_minus);
    let lower = phase(k_down) * Complex64::new(c.f_minus, -c.g_plus);
    Ok((upper, lower))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{QuantumNumbers, SystemParams};

    fn level(za: f64, phi: f64, k: f64, n: u32, twice: i32, s: i32) -> EnergyLevel {
        let p = SystemParams::new(1.0, za, phi, k).unwrap();
        EnergyLevel::new(&p, QuantumNumbers::from_raw(n, twice, s).unwrap()).unwrap()
    }

    #[test]
    fn ground_state_is_positive_and_nodeless() {
        let lv = level(0.5, 0.25, 0.2, 0, 1, 1);
        let r = RadialFunction::sample(&lv, Spin::Up, &GridSpec::default()).unwrap();
        assert!(r.values.iter().all(|v| *v >= 0.0));
        assert_eq!(count_nodes(&r).unwrap(), 0);
        assert!(r.values.last().unwrap().abs() < 1e-6 * r.values.iter().cloned().fold(0.0, f64::max));
    }

    #[test]
    fn ground_state_norm_matches_gamma_integral() {
        // n = 0: ∫ ρ^{2a+1} e^{−2ηρ} dρ = Γ(2a+2)/(2η)^{2a+2}
        let lv = level(0.5, 0.25, 0.2, 0, 1, -1);
        let a = component_gamma(&lv, Spin::Down).abs();
        let eta = lv.eta();
        let c = normalize(&lv, Spin::Down).unwrap();
        let integral = log_gamma(2.0 * a + 2.0).unwrap().exp() / (2.0 * eta).powf(2.0 * a + 2.0);
        // φ = C (2η)^a ρ^a e^{−ηρ}
        let expected = 1.0 / ((2.0 * eta).powf(a) * integral.sqrt());
        assert!((c - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn norm_scales_with_eta() {
        // C ∝ η at fixed n and a
        let c1 = closed_form_norm(2, 0.7, 0.3).unwrap();
        let c2 = closed_form_norm(2, 0.7, 0.6).unwrap();
        assert!((c2 / c1 - 2.0).abs() < 1e-14);
    }

    #[test]
    fn excited_norm_by_quadrature() {
        let lv = level(0.5, 0.25, 0.2, 2, 1, 1);
        let c = normalize(&lv, Spin::Up).unwrap();
        let q = quadrature_norm_integral(&lv, Spin::Up, c, 1e-12).unwrap();
        assert!((q - 1.0).abs() < 1e-8);
        assert!(radial_phi(&lv, Spin::Up, 0.0).is_err());
    }

    #[test]
    fn node_counts_follow_n() {
        for n in 0..=3 {
            let lv = level(0.5, 0.25, 0.2, n, 1, 1);
            let r = RadialFunction::sample(&lv, Spin::Up, &GridSpec::default()).unwrap();
            assert_eq!(count_nodes(&r).unwrap(), n);
        }
        let lv = level(0.5, 0.25, 0.2, 3, 1, 1);
        let coarse = RadialFunction::sample(&lv, Spin::Up, &GridSpec::with_points(100)).unwrap();
        assert!(matches!(count_nodes(&coarse), Err(Error::GridTooCoarse(_))));
    }

    #[test]
    fn n0_lower_component_has_no_laguerre_derivative_term() {
        // L_{−1} ≡ 0: G_s reduces to the (η + c/ρ) L_0 term
        let lv = level(0.3, 0.5, 0.1, 0, 1, 1);
        let conv = SpinorConvention::default();
        let c = spinor_components(&lv, 0.7, &conv).unwrap();
        let (bar_up, _) = conv.constants(&lv).unwrap();
        let a = component_gamma(&lv, Spin::Up).abs();
        let eta = lv.eta();
        let m = 1.0 + 0.1 / 0.7;
        let expected = bar_up * 0.7f64.powf(a) * (-eta * 0.7).exp() * (eta + (0.5 - 0.5 - a + 0.5) / 0.7) / m;
        assert!((c.g_plus - expected).abs() < 1e-14);
    }

    #[test]
    fn density_and_phase_identities() {
        let lv = level(0.5, 0.25, 0.2, 1, 3, 1);
        let conv = SpinorConvention::default();
        for &rho in &[0.3, 1.0, 4.0] {
            let c = spinor_components(&lv, rho, &conv).unwrap();
            let (u0, l0) = assemble_spinor(&lv, rho, 0.0, 0.0, &conv).unwrap();
            let (u1, l1) = assemble_spinor(&lv, rho, 1.234, 5.6, &conv).unwrap();
            assert!((u0.norm() - u1.norm()).abs() < 1e-14 * u0.norm().max(1e-300));
            assert!((u1.norm_sqr() + l1.norm_sqr() - c.density()).abs() < 1e-13 * c.density());
            let (u2, l2) = assemble_spinor(&lv, rho, 1.234 + std::f64::consts::TAU, 5.6, &conv).unwrap();
            assert!((u2 - u1).norm() < 1e-13 * u1.norm());
            assert!((l2 - l1).norm() < 1e-13 * l1.norm());
            let _ = l0;
        }
        assert!(assemble_spinor(&lv, -1.0, 0.0, 0.0, &conv).is_err());
    }

    /// Applies m⁻¹ U(θ)[σ3(i∂t + Zα/ρ) + m + σ2(∂ρ + 1/2ρ) + iσ1((i∂θ − Φ)/ρ)] to
    /// ψ_R = e^{i(m_l θ − Et)}(φ̄_+, φ̄_−) with every derivative taken by central
    /// differences.
    fn reconstruct_by_differences(lv: &EnergyLevel, rho: f64, theta: f64, t: f64) -> (Complex64, Complex64) {
        let p = &lv.params;
        let (bar_up, bar_down) = SpinorConvention::default().constants(lv).unwrap();
        let eta = lv.eta();
        let radial = |s: Spin, bar: f64, r: f64| {
            let a = component_gamma(lv, s).abs();
            bar * r.powf(a) * (-eta * r).exp() * specfun::laguerre(lv.qn.n, 2.0 * a, 2.0 * eta * r).unwrap()
        };
        let psi = |t: f64, r: f64, th: f64| {
            let ph = Complex64::from_polar(1.0, lv.qn.m_l.value() * th - lv.energy * t);
            [ph * radial(Spin::Up, bar_up, r), ph * radial(Spin::Down, bar_down, r)]
        };
        let h = 1e-5;
        let d = |f: &dyn Fn(f64) -> [Complex64; 2], x: f64, step: f64| {
            let (a, b) = (f(x + step), f(x - step));
            [(a[0] - b[0]) / (2.0 * step), (a[1] - b[1]) / (2.0 * step)]
        };
        let v = psi(t, rho, theta);
        let dt = d(&|x| psi(x, rho, theta), t, h);
        let dr = d(&|x| psi(t, x, theta), rho, h * rho);
        let dth = d(&|x| psi(t, rho, x), theta, h);
        let i = Complex64::i();
        let m = p.m0 + p.kappa / rho;
        // σ3 X = (X0, −X1); σ2 X = (−i X1, i X0); σ1 X = (X1, X0)
        let x3 = [i * dt[0] + p.z_alpha / rho * v[0], i * dt[1] + p.z_alpha / rho * v[1]];
        let x2 = [dr[0] + v[0] / (2.0 * rho), dr[1] + v[1] / (2.0 * rho)];
        let x1 = [(i * dth[0] - p.phi_ab * v[0]) / rho, (i * dth[1] - p.phi_ab * v[1]) / rho];
        let up = x3[0] + m * v[0] - i * x2[1] + i * x1[1];
        let down = -x3[1] + m * v[1] + i * x2[0] + i * x1[0];
        let u = |sign: f64| Complex64::from_polar(1.0, sign * theta / 2.0);
        (u(-1.0) * up / m, u(1.0) * down / m)
    }

    #[test]
    fn spinor_matches_reconstruction_operator() {
        for lv in [level(0.5, 0.25, 0.2, 0, 1, 1), level(0.5, 0.25, 0.2, 2, 3, -1), level(0.3, 0.9, 0.1, 1, -3, 1)] {
            let conv = SpinorConvention::default();
            for &(rho, theta, t) in &[(0.4, 0.3, 0.0), (2.0, 2.5, 1.1), (7.5, -1.0, 3.0)] {
                let (u, l) = assemble_spinor(&lv, rho, theta, t, &conv).unwrap();
                let (ue, le) = reconstruct_by_differences(&lv, rho, theta, t);
                let scale = u.norm().max(l.norm());
                assert!((u - ue).norm() < 1e-7 * scale, "{}: {u} vs {ue}", lv.qn);
                assert!((l - le).norm() < 1e-7 * scale, "{}: {l} vs {le}", lv.qn);
            }
        }
    }
}
