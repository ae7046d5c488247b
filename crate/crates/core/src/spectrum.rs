//! Closed-form bound-state energies, the quantization condition, limiting
//! forms and spectrum enumeration.
//!
//! Only the positive-energy branch is produced. A closed-form value is
//! returned as a level only when it satisfies the quantization condition
//! z0(E) = n + |γ_s| + 1/2; otherwise the channel has no bound state.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{self, MagneticNumber, QuantumNumbers, Spin, SystemParams};

/// Largest |z0 − (n + |γ_s| + 1/2)| accepted when certifying a closed-form energy.
pub const QUANTIZATION_ACCEPT: f64 = 1e-10;

/// Relative resolution used for the γ part of the degeneracy key.
pub const DEGENERACY_RESOLUTION: f64 = 1e-12;

/// A certified bound state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyLevel {
    pub params: SystemParams,
    pub qn: QuantumNumbers,
    pub energy: f64,
    pub n_s: u32,
    pub gamma: f64,
    pub gamma_s: f64,
    /// z0(E) − (n + |γ_s| + 1/2) at the stored energy.
    pub residual: f64,
}

impl EnergyLevel {
    pub fn new(params: &SystemParams, qn: QuantumNumbers) -> Result<Self> {
        let energy = analytic_energy(params, &qn)?;
        let gamma = params::gamma(params, qn.m_l)?;
        Ok(Self {
            params: *params,
            qn,
            energy,
            n_s: qn.n_s(),
            gamma,
            gamma_s: gamma - qn.s.sign() / 2.0,
            residual: quantization_residual(params, &qn, energy)?,
        })
    }

    pub fn eta(&self) -> f64 {
        let m0 = self.params.m0;
        ((m0 - self.energy) * (m0 + self.energy)).sqrt()
    }

    pub fn reduced_energy(&self) -> f64 {
        self.energy / self.params.m0
    }

    /// The effective principal number n + |γ_s| + 1/2 (equal to z0 at the eigenvalue).
    pub fn principal(&self) -> f64 {
        f64::from(self.qn.n) + self.gamma_s.abs() + 0.5
    }
}

/// The positive-branch closed form
///
/// E = Zα·m0·κ/D + m0·√((Zα·κ)²/D² + (N² − κ²)/D),  N = n_s + γ,  D = N² + (Zα)²,
///
/// evaluated without checking it against the quantization condition.
pub fn closed_form_energy(params: &SystemParams, qn: &QuantumNumbers) -> Result<f64> {
    let gamma = params::gamma(params, qn.m_l)?;
    let big_n = f64::from(qn.n_s()) + gamma;
    let za = params.z_alpha;
    let k = params.kappa;
    let d = big_n * big_n + za * za;
    let radicand = (za * k) * (za * k) / (d * d) + (big_n * big_n - k * k) / d;
    if radicand < 0.0 {
        return Err(Error::NoBoundState(format!(
            "{qn}: closed-form radicand {radicand:e} < 0 (kappa exceeds n_s + gamma)"
        )));
    }
    Ok(za * params.m0 * k / d + params.m0 * radicand.sqrt())
}

/// Bound-state energy of the channel `qn`.
///
/// The closed form is certified against the quantization condition. It fails
/// that check when Zα·E < m0·κ (the 1/ρ term is then repulsive and the value
/// solves the condition with z0 = −(n_s + γ)), and for s = +1 when γ < 1/2
/// (then n_s + γ ≠ n + |γ_s| + 1/2); both cases report `NoBoundState`.
pub fn analytic_energy(params: &SystemParams, qn: &QuantumNumbers) -> Result<f64> {
    let energy = closed_form_energy(params, qn)?;
    if !(energy > 0.0 && energy < params.m0) {
        return Err(Error::NoBoundState(format!(
            "{qn}: closed-form energy {energy} outside (0, m0 = {})",
            params.m0
        )));
    }
    let z0 = params::z0(params, energy)?;
    let gamma_s = params::gamma_s(params, qn)?;
    let residual = quantization_residual(params, qn, energy)?;
    let why = if z0 <= 0.0 {
        "z0 <= 0, the 1/r coupling is repulsive"
    } else if gamma_s < 0.0 {
        "gamma_s < 0, closed form assumes n_s + gamma = n + |gamma_s| + 1/2"
    } else if residual.abs() > quantization_tolerance(params, energy) {
        "quantization condition violated"
    } else {
        return Ok(energy);
    };
    Err(Error::NoBoundState(format!(
        "{qn}: closed-form energy {energy} has residual {residual:e} ({why})"
    )))
}

/// Residual accepted at `energy`: `QUANTIZATION_ACCEPT`, or the rounding floor
/// 16·ε·E·|dz0/dE| near threshold where dz0/dE = m0(Zα·m0 − κE)/η³ grows
/// like η⁻².
pub fn quantization_tolerance(params: &SystemParams, energy: f64) -> f64 {
    let Ok(eta) = params::eta(params, energy) else {
        return QUANTIZATION_ACCEPT;
    };
    let slope = params.m0 * (params.z_alpha * params.m0 - params.kappa * energy) / eta.powi(3);
    QUANTIZATION_ACCEPT.max(16.0 * f64::EPSILON * energy * slope.abs())
}

/// z0(E) − (n + |γ_s| + 1/2); zero exactly at the eigenvalue of `qn`.
pub fn quantization_residual(params: &SystemParams, qn: &QuantumNumbers, energy: f64) -> Result<f64> {
    let z0 = params::z0(params, energy)?;
    let gamma_s = params::gamma_s(params, qn)?;
    Ok(z0 - (f64::from(qn.n) + gamma_s.abs() + 0.5))
}

/// Constant-mass (κ = 0) spectrum m0·N/√(N² + (Zα)²), N = n_s + √((m_l + Φ_AB)² − (Zα)²).
pub fn abc_energy(params: &SystemParams, qn: &QuantumNumbers) -> Result<f64> {
    let constant_mass = SystemParams {
        kappa: 0.0,
        ..*params
    };
    let gamma = params::gamma(&constant_mass, qn.m_l)?;
    let big_n = f64::from(qn.n_s()) + gamma;
    Ok(params.m0 * big_n / (big_n * big_n + params.z_alpha * params.z_alpha).sqrt())
}

/// Pure scalar-coupling formula m0·√(1 − κ²/(n_s + √(m_l² + κ²))²).
///
/// Uses only m0 and κ from `params`; it is the Zα = Φ_AB = 0 reduction of
/// [`closed_form_energy`].
pub fn scalar_coupling_energy(params: &SystemParams, qn: &QuantumNumbers) -> f64 {
    let m = qn.m_l.value();
    let k = params.kappa;
    let big_n = f64::from(qn.n_s()) + (m * m + k * k).sqrt();
    params.m0 * (1.0 - (k / big_n).powi(2)).sqrt()
}

/// Channel that produced no level during enumeration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedLevel {
    pub qn: QuantumNumbers,
    pub reason: String,
}

/// Levels sharing (n_s, γ).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegeneracyClass {
    pub id: usize,
    pub n_s: u32,
    pub gamma: f64,
    /// Indices into `SpectrumTable::levels`.
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumTable {
    pub params: SystemParams,
    pub levels: Vec<EnergyLevel>,
    pub degeneracy_classes: Vec<DegeneracyClass>,
    pub skipped: Vec<SkippedLevel>,
}

impl SpectrumTable {
    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Degeneracy-class id of each level, aligned with `levels`.
    pub fn class_ids(&self) -> Vec<usize> {
        let mut ids = vec![0; self.levels.len()];
        for class in &self.degeneracy_classes {
            for &i in &class.members {
                ids[i] = class.id;
            }
        }
        ids
    }
}

fn degeneracy_key(level: &EnergyLevel) -> (u32, i64) {
    (level.n_s, (level.gamma / DEGENERACY_RESOLUTION).round() as i64)
}

/// Every channel with n ≤ `n_max`, |m_l| ≤ `m_l_max`, s = ±1; levels sorted by
/// energy, then n, m_l, s. Channels without a bound state are recorded in
/// `skipped`.
pub fn enumerate_spectrum(
    params: &SystemParams,
    n_max: u32,
    m_l_max: MagneticNumber,
) -> Result<SpectrumTable> {
    params.validate()?;
    if m_l_max.twice() < 1 {
        return Err(Error::InvalidParameter(format!(
            "m_l_max = {m_l_max} must be >= 1/2"
        )));
    }
    let mut levels = Vec::new();
    let mut skipped = Vec::new();
    let top = m_l_max.twice();
    for twice in (-top..=top).step_by(2) {
        let m_l = MagneticNumber::from_twice(twice)?;
        for n in 0..=n_max {
            for s in Spin::BOTH {
                let qn = QuantumNumbers::new(n, m_l, s);
                match EnergyLevel::new(params, qn) {
                    Ok(level) => levels.push(level),
                    Err(e) => skipped.push(SkippedLevel {
                        qn,
                        reason: e.to_string(),
                    }),
                }
            }
        }
    }
    levels.sort_by(|a, b| {
        a.energy
            .total_cmp(&b.energy)
            .then(a.qn.n.cmp(&b.qn.n))
            .then(a.qn.m_l.cmp(&b.qn.m_l))
            .then(b.qn.s.cmp(&a.qn.s))
    });

    let mut degeneracy_classes: Vec<DegeneracyClass> = Vec::new();
    let mut keys: Vec<(u32, i64)> = Vec::new();
    for (i, level) in levels.iter().enumerate() {
        let key = degeneracy_key(level);
        match keys.iter().position(|k| *k == key) {
            Some(c) => degeneracy_classes[c].members.push(i),
            None => {
                keys.push(key);
                degeneracy_classes.push(DegeneracyClass {
                    id: degeneracy_classes.len(),
                    n_s: level.n_s,
                    gamma: level.gamma,
                    members: vec![i],
                });
            }
        }
    }

    Ok(SpectrumTable {
        params: *params,
        levels,
        degeneracy_classes,
        skipped,
    })
}

/// Parameter varied by a scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Kappa,
    ZAlpha,
    PhiAb,
}

impl SweepAxis {
    pub fn apply(self, base: &SystemParams, value: f64) -> Result<SystemParams> {
        let mut p = *base;
        match self {
            SweepAxis::Kappa => p.kappa = value,
            SweepAxis::ZAlpha => p.z_alpha = value,
            SweepAxis::PhiAb => p.phi_ab = value,
        }
        p.validate()?;
        Ok(p)
    }

    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Kappa => "kappa",
            SweepAxis::ZAlpha => "z_alpha",
            SweepAxis::PhiAb => "phi_ab",
        }
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kappa" => Ok(SweepAxis::Kappa),
            "z_alpha" | "z-alpha" => Ok(SweepAxis::ZAlpha),
            "phi_ab" | "phi-ab" => Ok(SweepAxis::PhiAb),
            other => Err(Error::InvalidParameter(format!("unknown sweep axis {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityReport {
    pub axis: SweepAxis,
    pub qn: QuantumNumbers,
    pub values: Vec<f64>,
    /// Energy at each grid value, `None` where the channel has no level.
    pub energies: Vec<Option<f64>>,
    /// E(v_{i+1}) − E(v_i) for consecutive grid points where both exist.
    pub differences: Vec<Option<f64>>,
    /// Every grid point has a level.
    pub complete: bool,
    pub nondecreasing: bool,
    pub nonincreasing: bool,
    /// First consecutive pair (v_a, E_a, v_b, E_b) with E_b < E_a − tol.
    pub counterexample: Option<(f64, f64, f64, f64)>,
}

/// Evaluates E along `values` of one axis and reports monotonicity up to `tol`.
pub fn monotonicity_scan(
    base: &SystemParams,
    axis: SweepAxis,
    values: &[f64],
    qn: &QuantumNumbers,
    tol: f64,
) -> Result<MonotonicityReport> {
    let mut energies = Vec::with_capacity(values.len());
    for &v in values {
        let p = axis.apply(base, v)?;
        energies.push(analytic_energy(&p, qn).ok());
    }
    let mut differences = Vec::new();
    let mut counterexample = None;
    let mut nondecreasing = true;
    let mut nonincreasing = true;
    for i in 1..values.len() {
        let d = match (energies[i - 1], energies[i]) {
            (Some(a), Some(b)) => {
                if b < a - tol {
                    nondecreasing = false;
                    counterexample.get_or_insert((values[i - 1], a, values[i], b));
                }
                if b > a + tol {
                    nonincreasing = false;
                }
                Some(b - a)
            }
            _ => None,
        };
        differences.push(d);
    }
    Ok(MonotonicityReport {
        axis,
        qn: *qn,
        values: values.to_vec(),
        complete: energies.iter().all(Option::is_some),
        energies,
        differences,
        nondecreasing,
        nonincreasing,
        counterexample,
    })
}

/// Monotonicity of E(κ) for a fixed channel.
pub fn kappa_monotonicity_scan(
    base: &SystemParams,
    kappas: &[f64],
    qn: &QuantumNumbers,
) -> Result<MonotonicityReport> {
    monotonicity_scan(base, SweepAxis::Kappa, kappas, qn, 1e-12 * base.m0)
}
