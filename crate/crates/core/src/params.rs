//! Physical configuration, quantum labels and the scalar quantities derived
//! from them.
//!
//! Natural units (ħ = c = 1) are used throughout; the rest mass `m0` sets the
//! energy scale and `1/m0` the length scale.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fine-structure constant used when the Coulomb strength is given as an
/// integer charge number.
pub const FINE_STRUCTURE: f64 = 0.0072973525693;

/// Physical parameters of the Aharonov-Bohm-Coulomb system with
/// position-dependent mass `m(ρ) = m0 + κ/ρ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Rest mass.
    pub m0: f64,
    /// Coulomb coupling Zα.
    pub z_alpha: f64,
    /// Flux ratio Φ/Φ₀.
    pub phi_ab: f64,
    /// Strength of the 1/ρ mass term.
    pub kappa: f64,
}

impl SystemParams {
    pub fn new(m0: f64, z_alpha: f64, phi_ab: f64, kappa: f64) -> Result<Self> {
        let p = Self {
            m0,
            z_alpha,
            phi_ab,
            kappa,
        };
        p.validate()?;
        Ok(p)
    }

    /// Builds the parameters from an integer charge number, using Zα = Z·α.
    pub fn with_charge(m0: f64, z: u32, phi_ab: f64, kappa: f64) -> Result<Self> {
        Self::new(m0, f64::from(z) * FINE_STRUCTURE, phi_ab, kappa)
    }

    pub fn validate(&self) -> Result<()> {
        let check = |name: &str, v: f64, strict: bool| {
            let ok = v.is_finite() && if strict { v > 0.0 } else { v >= 0.0 };
            if ok {
                Ok(())
            } else {
                let bound = if strict { "> 0" } else { ">= 0" };
                Err(Error::InvalidParameter(format!("{name} = {v} must be finite and {bound}")))
            }
        };
        check("m0", self.m0, true)?;
        check("z_alpha", self.z_alpha, false)?;
        check("phi_ab", self.phi_ab, false)?;
        check("kappa", self.kappa, false)
    }

    /// Constant-mass limit (κ = 0).
    pub fn is_constant_mass(&self) -> bool {
        self.kappa == 0.0
    }

    /// True when κ or Φ_AB sit at the zero limit rather than strictly positive.
    pub fn is_limiting_case(&self) -> bool {
        self.kappa == 0.0 || self.phi_ab == 0.0
    }

    /// (m_l + Φ_AB)² − (Zα)² + κ², the square of γ.
    pub fn gamma_radicand(&self, m_l: MagneticNumber) -> f64 {
        let j = m_l.value() + self.phi_ab;
        j * j - self.z_alpha * self.z_alpha + self.kappa * self.kappa
    }

    pub fn is_subcritical(&self, m_l: MagneticNumber) -> bool {
        self.gamma_radicand(m_l) > 0.0
    }
}

/// Orbital magnetic quantum number m_l, a half-odd integer stored as `2·m_l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct MagneticNumber(i32);

impl MagneticNumber {
    /// From twice the value; `twice` must be odd.
    pub fn from_twice(twice: i32) -> Result<Self> {
        if twice % 2 == 0 {
            return Err(Error::InvalidParameter(format!(
                "m_l = {twice}/2 is not a half-odd integer"
            )));
        }
        Ok(Self(twice))
    }

    pub fn twice(self) -> i32 {
        self.0
    }

    pub fn value(self) -> f64 {
        f64::from(self.0) / 2.0
    }
}

impl std::ops::Neg for MagneticNumber {
    type Output = Self;

    fn neg(self) -> Self {
        Self(-self.0)
    }
}

impl TryFrom<f64> for MagneticNumber {
    type Error = Error;

    fn try_from(v: f64) -> Result<Self> {
        let twice = 2.0 * v;
        if !twice.is_finite() || twice.fract() != 0.0 || twice.abs() > f64::from(i32::MAX) {
            return Err(Error::InvalidParameter(format!(
                "m_l = {v} is not a half-odd integer"
            )));
        }
        Self::from_twice(twice as i32)
    }
}

impl From<MagneticNumber> for f64 {
    fn from(m: MagneticNumber) -> f64 {
        m.value()
    }
}

impl fmt::Display for MagneticNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

/// Spinor-component label s = ±1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "i32", into = "i32")]
pub enum Spin {
    Down,
    Up,
}

impl Spin {
    pub const BOTH: [Spin; 2] = [Spin::Up, Spin::Down];

    pub fn sign(self) -> f64 {
        match self {
            Spin::Up => 1.0,
            Spin::Down => -1.0,
        }
    }

    pub fn as_i32(self) -> i32 {
        match self {
            Spin::Up => 1,
            Spin::Down => -1,
        }
    }
}

impl TryFrom<i32> for Spin {
    type Error = Error;

    fn try_from(v: i32) -> Result<Self> {
        match v {
            1 => Ok(Spin::Up),
            -1 => Ok(Spin::Down),
            _ => Err(Error::InvalidParameter(format!("s = {v} must be +1 or -1"))),
        }
    }
}

impl From<Spin> for i32 {
    fn from(s: Spin) -> i32 {
        s.as_i32()
    }
}

/// Labels of a bound state: radial number n, m_l and the spinor label s.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QuantumNumbers {
    pub n: u32,
    pub m_l: MagneticNumber,
    pub s: Spin,
}

impl QuantumNumbers {
    pub fn new(n: u32, m_l: MagneticNumber, s: Spin) -> Self {
        Self { n, m_l, s }
    }

    /// Convenience constructor from `2·m_l` and `s = ±1`.
    pub fn from_raw(n: u32, twice_m_l: i32, s: i32) -> Result<Self> {
        Ok(Self::new(n, MagneticNumber::from_twice(twice_m_l)?, Spin::try_from(s)?))
    }

    /// n_s = n + (1 − s)/2.
    pub fn n_s(&self) -> u32 {
        match self.s {
            Spin::Up => self.n,
            Spin::Down => self.n + 1,
        }
    }
}

impl fmt::Display for QuantumNumbers {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(n={}, m_l={}, s={:+})", self.n, self.m_l, self.s.as_i32())
    }
}

/// Derived scalars at a given energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedQuantities {
    pub gamma_s: f64,
    pub gamma: f64,
    pub eta: f64,
    pub z0: f64,
}

impl DerivedQuantities {
    pub fn compute(params: &SystemParams, qn: &QuantumNumbers, energy: f64) -> Result<Self> {
        let g = gamma(params, qn.m_l)?;
        Ok(Self {
            gamma_s: g - qn.s.sign() / 2.0,
            gamma: g,
            eta: eta(params, energy)?,
            z0: z0(params, energy)?,
        })
    }
}

/// γ = √((m_l + Φ_AB)² − (Zα)² + κ²).
pub fn gamma(params: &SystemParams, m_l: MagneticNumber) -> Result<f64> {
    let radicand = params.gamma_radicand(m_l);
    if radicand > 0.0 {
        Ok(radicand.sqrt())
    } else {
        Err(Error::SupercriticalCoupling { radicand })
    }
}

/// γ_s = γ − s/2.
pub fn gamma_s(params: &SystemParams, qn: &QuantumNumbers) -> Result<f64> {
    Ok(gamma(params, qn.m_l)? - qn.s.sign() / 2.0)
}

/// η = √(m0² − E²), the decay constant of a bound state.
pub fn eta(params: &SystemParams, energy: f64) -> Result<f64> {
    if !(energy.abs() < params.m0) {
        return Err(Error::NotABoundState {
            energy,
            m0: params.m0,
        });
    }
    // (m0 - E)(m0 + E) keeps precision near threshold
    Ok(((params.m0 - energy) * (params.m0 + energy)).sqrt())
}

/// z0 = (Zα·E − m0·κ)/η.
pub fn z0(params: &SystemParams, energy: f64) -> Result<f64> {
    let eta = eta(params, energy)?;
    Ok((params.z_alpha * energy - params.m0 * params.kappa) / eta)
}

/// m(ρ) = m0 + κ/ρ.
pub fn pdm_mass(params: &SystemParams, rho: f64) -> Result<f64> {
    check_rho(rho)?;
    Ok(params.m0 + params.kappa / rho)
}

/// Exterior field configuration at radius ρ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Potentials {
    /// Azimuthal vector potential A_θ = Φ/(2πρ), in units where Φ₀ = 2π/e and e = 1.
    pub a_theta: f64,
    /// Coulomb potential energy V = −Zα/ρ.
    pub v: f64,
}

/// Vector and scalar potentials at ρ (exterior region only).
pub fn potentials(params: &SystemParams, rho: f64) -> Result<Potentials> {
    check_rho(rho)?;
    // Φ = Φ_AB·Φ₀ with Φ₀ = 2π (unit charge), so A_θ = Φ_AB/ρ.
    let flux = params.phi_ab * 2.0 * std::f64::consts::PI;
    Ok(Potentials {
        a_theta: flux / (2.0 * std::f64::consts::PI * rho),
        v: -params.z_alpha / rho,
    })
}

pub(crate) fn check_rho(rho: f64) -> Result<()> {
    if rho > 0.0 && rho.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("rho = {rho} must be finite and > 0")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(m0: f64, za: f64, phi: f64, k: f64) -> SystemParams {
        SystemParams::new(m0, za, phi, k).unwrap()
    }

    fn qn(n: u32, twice: i32, s: i32) -> QuantumNumbers {
        QuantumNumbers::from_raw(n, twice, s).unwrap()
    }

    #[test]
    fn gamma_s_free_case() {
        let free = p(1.0, 0.0, 0.0, 0.0);
        assert_eq!(gamma_s(&free, &qn(0, 1, 1)).unwrap(), 0.0);
        assert_eq!(gamma_s(&free, &qn(0, 1, -1)).unwrap(), 1.0);
    }

    #[test]
    fn gamma_s_full_point() {
        // 40-digit reference: sqrt(0.3525) - 1/2
        let g = gamma_s(&p(1.0, 0.5, 0.25, 0.2), &qn(0, 1, 1)).unwrap();
        let expected = 0.3525_f64.sqrt() - 0.5;
        assert!((g - expected).abs() < 1e-15);
        assert!((g - 0.093_717_104_351_895_86).abs() < 1e-12);
    }

    #[test]
    fn supercritical_is_rejected() {
        let strong = p(1.0, 0.6, 0.0, 0.1);
        assert!(matches!(
            gamma_s(&strong, &qn(0, 1, 1)),
            Err(Error::SupercriticalCoupling { .. })
        ));
        // same radicand exactly zero
        let edge = p(1.0, 0.5, 0.0, 0.0);
        assert!(gamma(&edge, MagneticNumber::from_twice(1).unwrap()).is_err());
    }

    #[test]
    fn eta_examples() {
        let free = p(1.0, 0.0, 0.0, 0.0);
        assert_eq!(eta(&free, 0.0).unwrap(), 1.0);
        assert!((eta(&free, 0.6).unwrap() - 0.8).abs() < 1e-15);
        assert!(matches!(eta(&free, 1.0), Err(Error::NotABoundState { .. })));
        assert!(eta(&free, -1.0).is_err());
        assert!(eta(&free, f64::NAN).is_err());
    }

    #[test]
    fn z0_examples() {
        assert_eq!(z0(&p(1.0, 0.0, 0.3, 0.0), 0.42).unwrap(), 0.0);
        assert!((z0(&p(1.0, 0.5, 0.0, 0.0), 0.6).unwrap() - 0.375).abs() < 1e-15);
        assert!((z0(&p(1.0, 0.5, 0.0, 0.2), 0.6).unwrap() - 0.125).abs() < 1e-15);
    }

    #[test]
    fn pdm_mass_examples() {
        assert_eq!(pdm_mass(&p(1.3, 0.0, 0.0, 0.0), 0.01).unwrap(), 1.3);
        assert!((pdm_mass(&p(1.0, 0.0, 0.0, 0.2), 0.2).unwrap() - 2.0).abs() < 1e-15);
        assert!((pdm_mass(&p(1.0, 0.0, 0.0, 0.2), 1e12).unwrap() - 1.0).abs() < 1e-12);
        assert!(pdm_mass(&p(1.0, 0.0, 0.0, 0.2), 0.0).is_err());
        assert!(pdm_mass(&p(1.0, 0.0, 0.0, 0.2), -1.0).is_err());
    }

    #[test]
    fn potentials_examples() {
        let v = potentials(&p(1.0, 0.5, 0.0, 0.0), 2.0).unwrap();
        assert_eq!(v.v, -0.25);
        assert_eq!(v.a_theta, 0.0);
        let a = potentials(&p(1.0, 0.0, 0.5, 0.0), 2.0).unwrap();
        assert_eq!(a.v, 0.0);
        assert!((a.a_theta - 0.25).abs() < 1e-15);
        assert!(potentials(&p(1.0, 0.0, 0.5, 0.0), 0.0).is_err());
    }

    #[test]
    fn parameter_validation() {
        assert!(SystemParams::new(0.0, 0.1, 0.1, 0.1).is_err());
        assert!(SystemParams::new(1.0, -0.1, 0.1, 0.1).is_err());
        assert!(SystemParams::new(1.0, 0.1, -0.1, 0.1).is_err());
        assert!(SystemParams::new(1.0, 0.1, 0.1, f64::INFINITY).is_err());
        let hydrogen = SystemParams::with_charge(1.0, 1, 0.0, 0.0).unwrap();
        assert_eq!(hydrogen.z_alpha, FINE_STRUCTURE);
        assert!(hydrogen.is_limiting_case());
    }

    #[test]
    fn quantum_number_labels() {
        assert!(MagneticNumber::from_twice(2).is_err());
        assert!(MagneticNumber::try_from(0.5).is_ok());
        assert!(MagneticNumber::try_from(1.0).is_err());
        assert!(MagneticNumber::try_from(0.3).is_err());
        assert_eq!(qn(2, 3, 1).n_s(), 2);
        assert_eq!(qn(2, 3, -1).n_s(), 3);
        assert!(Spin::try_from(0).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn params() -> impl Strategy<Value = SystemParams> {
            (0.1f64..5.0, 0.0f64..0.7, 0.0f64..2.0, 0.0f64..1.0)
                .prop_map(|(m0, za, phi, k)| SystemParams::new(m0, za, phi, k).unwrap())
        }

        proptest! {
            #[test]
            fn spin_split_is_exactly_one(p in params(), twice in prop::sample::select(vec![-7, -5, -3, -1, 1, 3, 5, 7])) {
                let up = QuantumNumbers::from_raw(0, twice, 1).unwrap();
                let down = QuantumNumbers::from_raw(0, twice, -1).unwrap();
                if let (Ok(a), Ok(b)) = (gamma_s(&p, &up), gamma_s(&p, &down)) {
                    prop_assert!((b - a - 1.0).abs() <= 4.0 * f64::EPSILON * b.abs().max(1.0));
                }
            }

            #[test]
            fn gamma_depends_on_square_of_shifted_m(m0 in 0.5f64..2.0, za in 0.0f64..0.7, k in 0.0f64..1.0, twice in prop::sample::select(vec![-5, -3, -1, 1, 3, 5])) {
                // m_l + Φ → −(m_l + Φ) with Φ half-integer so both points are admissible
                let phi = 0.5;
                let p = SystemParams::new(m0, za, phi, k).unwrap();
                let m = MagneticNumber::from_twice(twice).unwrap();
                let mirrored = MagneticNumber::from_twice(-twice - 2).unwrap();
                prop_assert!((m.value() + phi + mirrored.value() + phi).abs() < 1e-15);
                prop_assert_eq!(p.gamma_radicand(m), p.gamma_radicand(mirrored));
            }

            #[test]
            fn eta_satisfies_mass_shell(p in params(), f in -0.999f64..0.999) {
                let e = f * p.m0;
                let h = eta(&p, e).unwrap();
                prop_assert!((h * h + e * e - p.m0 * p.m0).abs() <= 4.0 * f64::EPSILON * p.m0 * p.m0);
            }

            #[test]
            fn pdm_mass_monotone(p in params(), r in 1e-3f64..1e3, dr in 1e-3f64..10.0) {
                let a = pdm_mass(&p, r).unwrap();
                let b = pdm_mass(&p, r + dr).unwrap();
                if p.kappa > 0.0 {
                    prop_assert!(b < a);
                } else {
                    prop_assert_eq!(a, b);
                }
            }
        }
    }
}
