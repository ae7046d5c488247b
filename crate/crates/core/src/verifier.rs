//! Numerical oracle for the bound-state problem.
//!
//! The radial equation is integrated directly with Numerov's method and its
//! eigenvalues are located by node counting and logarithmic-derivative
//! matching. Nothing here evaluates the closed-form spectrum: only the
//! parameter scalars and special functions are shared with the analytic path.
//!
//! With x = ln ρ the radial operator φ'' + φ'/ρ + Q̃(ρ)φ has no first-derivative
//! term: φ_xx + K(x)φ = 0 with K = ρ²Q(ρ) − 1/4, where Q is the coefficient of
//! the normal form u'' + Q u = 0, u = √ρ φ. A geometric ρ mesh is uniform in x.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{self, QuantumNumbers, SystemParams};
use crate::specfun::count_sign_changes;
use crate::spectrum::EnergyLevel;
use crate::wavefunction::{geometric_mesh, radial_phi, RadialFunction};

/// Coefficients of u'' + Q(ρ)u = 0 with
/// Q(ρ) = −(γ_s² − 1/4)/ρ² + (2ZαE − 2m0κ)/ρ + (E² − m0²).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalForm {
    /// γ_s² − 1/4.
    pub centrifugal: f64,
    /// 2ZαE − 2m0κ.
    pub coulomb: f64,
    /// E² − m0².
    pub binding: f64,
    /// |γ_s|.
    pub gamma_s_abs: f64,
}

impl NormalForm {
    pub fn q(&self, rho: f64) -> f64 {
        -self.centrifugal / (rho * rho) + self.coulomb / rho + self.binding
    }

    /// K = ρ²Q − 1/4, the coefficient in the ln ρ variable.
    pub fn k_log(&self, rho: f64) -> f64 {
        -(self.centrifugal + 0.25) + self.coulomb * rho + self.binding * rho * rho
    }

    /// Larger root of K(ρ) = 0, if the classically allowed region exists.
    fn outer_turning_point(&self) -> Option<f64> {
        let a = -self.binding;
        let g2 = self.centrifugal + 0.25;
        let disc = self.coulomb * self.coulomb - 4.0 * a * g2;
        if a <= 0.0 || disc < 0.0 || self.coulomb <= 0.0 {
            return None;
        }
        Some((self.coulomb + disc.sqrt()) / (2.0 * a))
    }
}

pub fn transform_to_normal_form(params: &SystemParams, qn: &QuantumNumbers, energy: f64) -> Result<NormalForm> {
    let gamma_s = params::gamma_s(params, qn)?;
    Ok(NormalForm {
        centrifugal: gamma_s * gamma_s - 0.25,
        coulomb: 2.0 * params.z_alpha * energy - 2.0 * params.m0 * params.kappa,
        binding: energy * energy - params.m0 * params.m0,
        gamma_s_abs: gamma_s.abs(),
    })
}

/// Search configuration for one eigenvalue.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShootingConfig {
    /// ρ_min·η at the trial energy.
    pub inner: f64,
    /// ρ_max·η = `tail` + 4·z0 at the trial energy (at least 35).
    pub tail: f64,
    pub points: usize,
    pub energy_bracket: (f64, f64),
    pub node_target: u32,
    /// Matching index; `None` picks the point nearest the outer turning point.
    pub match_point: Option<usize>,
    /// Absolute tolerance on E/m0.
    pub tol_e: f64,
    /// Energies in the initial node-count sweep, geometric in m0 − E.
    pub sweep: usize,
}

impl ShootingConfig {
    pub fn new(params: &SystemParams, node_target: u32) -> Self {
        let m0 = params.m0;
        Self {
            inner: 1e-6,
            tail: 40.0,
            points: 8000,
            energy_bracket: (1e-12 * m0, m0 * (1.0 - 1e-12)),
            node_target,
            match_point: None,
            tol_e: 1e-14,
            sweep: 64,
        }
    }

    pub fn validate(&self, params: &SystemParams) -> Result<()> {
        let (lo, hi) = self.energy_bracket;
        if !(0.0 < lo && lo < hi && hi < params.m0) {
            return Err(Error::InvalidParameter(format!(
                "energy bracket ({lo}, {hi}) must satisfy 0 < lo < hi < m0"
            )));
        }
        if self.points < 64 || !(self.inner > 0.0) || !(self.tail >= 35.0) || !(self.tol_e > 0.0) || self.sweep < 2 {
            return Err(Error::InvalidParameter(format!("bad shooting config {self:?}")));
        }
        if let Some(m) = self.match_point {
            if m < 2 || m + 2 >= self.points {
                return Err(Error::InvalidParameter(format!("match point {m} is not interior")));
            }
        }
        Ok(())
    }
}

const MAX_POINTS: usize = 4_000_000;

/// Geometric mesh adapted to a trial energy.
#[derive(Debug, Clone)]
struct LogMesh {
    rho: Vec<f64>,
    h: f64,
}

impl LogMesh {
    fn for_energy(params: &SystemParams, config: &ShootingConfig, energy: f64, form: &NormalForm) -> Result<Self> {
        let eta = params::eta(params, energy)?;
        let z0 = (form.coulomb / (2.0 * eta)).max(0.0);
        let lo = config.inner / eta;
        let hi = (config.tail + 4.0 * z0) / eta;
        // keep h·√K_max small where the solution oscillates
        let span = (hi / lo).ln();
        let k_max = (z0 * z0 - form.centrifugal - 0.25).max(1.0);
        let points = config.points.max((span * k_max.sqrt() / 0.05).ceil() as usize);
        if points > MAX_POINTS {
            return Err(Error::NoConvergence(format!(
                "mesh at E = {energy} needs {points} points (z0 = {z0:.3e})"
            )));
        }
        let rho = geometric_mesh(lo, hi, points);
        Ok(Self {
            h: span / (points - 1) as f64,
            rho,
        })
    }

    fn len(&self) -> usize {
        self.rho.len()
    }
}

/// Numerov step coefficients 1 + h²K/12.
fn numerov_weights(mesh: &LogMesh, form: &NormalForm) -> Vec<f64> {
    let c = mesh.h * mesh.h / 12.0;
    mesh.rho.iter().map(|&r| 1.0 + c * form.k_log(r)).collect()
}

/// Regular solution φ ≈ ρ^a (1 + c1·ρ), c1 = −(2ZαE − 2m0κ)/(2a + 1).
fn outward(mesh: &LogMesh, form: &NormalForm, w: &[f64], upto: usize) -> Vec<f64> {
    let a = form.gamma_s_abs;
    let c1 = -form.coulomb / (2.0 * a + 1.0);
    let start = |r: f64| (r / mesh.rho[0]).powf(a) * (1.0 + c1 * r);
    let mut phi = Vec::with_capacity(upto + 1);
    phi.push(start(mesh.rho[0]));
    phi.push(start(mesh.rho[1]));
    for i in 1..upto {
        let next = ((12.0 - 10.0 * w[i]) * phi[i] - w[i - 1] * phi[i - 1]) / w[i + 1];
        phi.push(next);
        if next.abs() > 1e200 {
            let scale = 1e-200;
            phi.iter_mut().for_each(|v| *v *= scale);
        }
    }
    phi
}

/// Decaying solution φ ≈ ρ^{z0 − 1/2} e^{−ηρ} integrated inward down to `from`.
fn inward(mesh: &LogMesh, form: &NormalForm, w: &[f64], from: usize) -> Vec<f64> {
    let n = mesh.len();
    let eta = (-form.binding).sqrt();
    let z0 = form.coulomb / (2.0 * eta);
    let last = mesh.rho[n - 1];
    let tail = |r: f64| ((z0 - 0.5) * (r / last).ln() - eta * (r - last)).exp();
    let mut phi = vec![0.0; n];
    phi[n - 1] = tail(mesh.rho[n - 1]);
    phi[n - 2] = tail(mesh.rho[n - 2]);
    for i in (from + 1..n - 1).rev() {
        phi[i - 1] = ((12.0 - 10.0 * w[i]) * phi[i] - w[i + 1] * phi[i + 1]) / w[i - 1];
        if phi[i - 1].abs() > 1e200 {
            phi[i - 1..].iter_mut().for_each(|v| *v *= 1e-200);
        }
    }
    phi
}

/// Sign changes of the outward solution across the whole mesh at `energy`.
fn node_count_at(params: &SystemParams, qn: &QuantumNumbers, config: &ShootingConfig, energy: f64) -> Result<u32> {
    let form = transform_to_normal_form(params, qn, energy)?;
    let mesh = LogMesh::for_energy(params, config, energy, &form)?;
    let w = numerov_weights(&mesh, &form);
    let phi = outward(&mesh, &form, &w, mesh.len() - 1);
    Ok(count_sign_changes(phi))
}

/// Result of a shooting search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShootingSolution {
    pub energy: f64,
    /// Nodes of the matched eigenfunction.
    pub nodes: u32,
    /// Log-derivative mismatch at the matching point (dimensionless, in ln ρ).
    pub defect: f64,
    pub grid: Vec<f64>,
    /// Eigenfunction normalized to ∫ φ² ρ dρ = 1, positive near the origin.
    pub values: Vec<f64>,
}

struct Matched {
    defect: f64,
    phi: Vec<f64>,
}

fn matched_solution(mesh: &LogMesh, form: &NormalForm, m: usize) -> Matched {
    let w = numerov_weights(mesh, form);
    let out = outward(mesh, form, &w, m + 1);
    let inn = inward(mesh, form, &w, m - 1);
    let log_deriv = |p: &[f64]| (p[m + 1] - p[m - 1]) / (2.0 * mesh.h * p[m]);
    let defect = log_deriv(&out) - log_deriv(&inn);
    let scale = out[m] / inn[m];
    let mut phi = out[..=m].to_vec();
    phi.extend(inn[m + 1..].iter().map(|v| v * scale));
    Matched { defect, phi }
}

/// Locates the eigenvalue with `config.node_target` nodes.
///
/// A node-count sweep brackets the level, bisection on the node count narrows
/// it, and the final energy is fixed by matching logarithmic derivatives of the
/// outward and inward solutions on a mesh frozen at the bracket.
pub fn shoot_eigenvalue(params: &SystemParams, qn: &QuantumNumbers, config: &ShootingConfig) -> Result<ShootingSolution> {
    config.validate(params)?;
    if config.node_target != qn.n {
        return Err(Error::InvalidParameter(format!(
            "node target {} does not match n = {}",
            config.node_target, qn.n
        )));
    }
    let m0 = params.m0;
    let target = config.node_target;
    let (e_lo, e_hi) = config.energy_bracket;

    let count = |e: f64| node_count_at(params, qn, config, e);
    let lowest = count(e_lo)?;
    if lowest > target {
        return Err(Error::NodeCountMismatch {
            expected: target,
            found: lowest,
        });
    }
    let mut lo = e_lo;
    let mut hi = None;
    // levels accumulate at threshold: space the sweep geometrically in m0 − E
    let (gap_lo, gap_hi) = (m0 - e_lo, m0 - e_hi);
    for k in 1..=config.sweep {
        let e = m0 - gap_lo * (gap_hi / gap_lo).powf(k as f64 / config.sweep as f64);
        if count(e)? > target {
            hi = Some(e);
            break;
        }
        lo = e;
    }
    let mut hi = hi.ok_or(Error::NoRootInBracket { lo: e_lo, hi: e_hi })?;

    while hi - lo > 1e-9 * m0 {
        let mid = 0.5 * (lo + hi);
        if count(mid)? > target {
            hi = mid;
        } else {
            lo = mid;
        }
    }

    // freeze the mesh so the matching defect is continuous in E
    let e_mid = 0.5 * (lo + hi);
    let form_mid = transform_to_normal_form(params, qn, e_mid)?;
    let mesh = LogMesh::for_energy(params, config, e_mid, &form_mid)?;
    let m = match config.match_point {
        Some(m) => m.min(mesh.len() - 3),
        None => {
            let turning = form_mid.outer_turning_point().unwrap_or(mesh.rho[mesh.len() / 2]);
            let idx = mesh.rho.partition_point(|&r| r < turning);
            idx.clamp(8, mesh.len() - 9)
        }
    };
    let at = |e: f64| -> Result<Matched> {
        let form = transform_to_normal_form(params, qn, e)?;
        Ok(matched_solution(&mesh, &form, m))
    };

    // widen slightly: the frozen mesh may shift the root by the discretization error
    let pad = 1e-8 * m0;
    let (mut a, mut b) = ((lo - pad).max(e_lo), (hi + pad).min(e_hi));
    let (mut da, db) = (at(a)?.defect, at(b)?.defect);
    if da.signum() == db.signum() || !da.is_finite() || !db.is_finite() {
        return Err(Error::NoRootInBracket { lo: a, hi: b });
    }
    while b - a > config.tol_e * m0 {
        let mid = 0.5 * (a + b);
        let d = at(mid)?.defect;
        if d.signum() == da.signum() {
            a = mid;
            da = d;
        } else {
            b = mid;
        }
    }
    let energy = 0.5 * (a + b);
    let matched = at(energy)?;
    let nodes = count_sign_changes(matched.phi.iter().copied());
    if nodes != target {
        return Err(Error::NodeCountMismatch {
            expected: target,
            found: nodes,
        });
    }

    // normalize: ∫ φ² ρ dρ = ∫ φ² ρ² dx (trapezoid on the uniform x mesh)
    let norm2: f64 = mesh
        .rho
        .iter()
        .zip(&matched.phi)
        .enumerate()
        .map(|(i, (r, p))| {
            let w = if i == 0 || i == mesh.len() - 1 { 0.5 } else { 1.0 };
            w * p * p * r * r
        })
        .sum::<f64>()
        * mesh.h;
    let sign = if matched.phi[1] < 0.0 { -1.0 } else { 1.0 };
    let scale = sign / norm2.sqrt();
    Ok(ShootingSolution {
        energy,
        nodes,
        defect: matched.defect,
        values: matched.phi.iter().map(|v| v * scale).collect(),
        grid: mesh.rho,
    })
}

/// Oracle search with the default configuration.
pub fn oracle_energy(params: &SystemParams, qn: &QuantumNumbers) -> Result<ShootingSolution> {
    let config = ShootingConfig::new(params, qn.n);
    shoot_eigenvalue(params, qn, &config)
}

/// Finite-difference residual of the radial equation for a sampled φ_s on a
/// geometric grid, evaluated at the level's energy.
pub fn residual_check(level: &EnergyLevel, radial: &RadialFunction) -> Result<f64> {
    residual_at_energy(level, radial, level.energy)
}

/// Residual with the sampled function held fixed and the operator built at
/// `energy`.
///
/// Uses the second difference in ln ρ (second order on a geometric grid) for
/// ρ²·[φ'' + φ'/ρ − γ_s²/ρ² + (2ZαE − 2m0κ)/ρ + E² − m0²]φ and returns its
/// maximum over interior points divided by max(ρ²(m0² − E²)|φ|).
pub fn residual_at_energy(level: &EnergyLevel, radial: &RadialFunction, energy: f64) -> Result<f64> {
    let grid = &radial.grid;
    let values = &radial.values;
    if grid.len() < 5 || grid.len() != values.len() {
        return Err(Error::GridTooCoarse(format!("{} samples", grid.len())));
    }
    let h = (grid[1] / grid[0]).ln();
    for w in grid.windows(2) {
        if ((w[1] / w[0]).ln() - h).abs() > 1e-9 * h {
            return Err(Error::InvalidParameter("residual check needs a geometric grid".into()));
        }
    }
    let mut qn = level.qn;
    qn.s = radial.component;
    let form = transform_to_normal_form(&level.params, &qn, energy)?;
    let eta2 = -form.binding;
    let mut worst = 0.0_f64;
    let mut scale = 0.0_f64;
    for i in 0..grid.len() {
        scale = scale.max(eta2 * grid[i] * grid[i] * values[i].abs());
        if i == 0 || i + 1 == grid.len() {
            continue;
        }
        let second = (values[i + 1] - 2.0 * values[i] + values[i - 1]) / (h * h);
        let r = second + form.k_log(grid[i]) * values[i];
        worst = worst.max(r.abs());
    }
    if !(scale > 0.0) {
        return Err(Error::GridTooCoarse("sampled function vanishes".into()));
    }
    Ok(worst / scale)
}

/// Tolerances for a verification run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerifyConfig {
    /// |ΔE|/m0.
    pub tol_e: f64,
    /// Max deviation of the oracle eigenfunction relative to its peak.
    pub tol_shape: f64,
    pub tol_residual: f64,
    /// Fault injection: analytic energy shifted by this multiple of m0.
    pub perturb_energy: f64,
    /// Points of the geometric grid used for the residual check.
    pub residual_points: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            tol_e: 1e-6,
            tol_shape: 1e-4,
            tol_residual: 1e-5,
            perturb_energy: 0.0,
            residual_points: crate::wavefunction::GridSpec::default().points,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CheckFlags {
    pub energy: bool,
    pub nodes: bool,
    pub shape: bool,
    pub residual: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub qn: QuantumNumbers,
    pub analytic_energy: f64,
    pub oracle_energy: Option<f64>,
    pub delta_e_rel: Option<f64>,
    pub shape_deviation: Option<f64>,
    pub residual: Option<f64>,
    pub nodes_observed: Option<u32>,
    pub nodes_expected: u32,
    pub checks: CheckFlags,
    pub passed: bool,
    pub error: Option<String>,
}

/// Cross-checks one closed-form level against the oracle.
pub fn verify_level(level: &EnergyLevel, config: &VerifyConfig) -> VerificationReport {
    let m0 = level.params.m0;
    let claimed = level.energy + config.perturb_energy * m0;
    let mut report = VerificationReport {
        qn: level.qn,
        analytic_energy: claimed,
        oracle_energy: None,
        delta_e_rel: None,
        shape_deviation: None,
        residual: None,
        nodes_observed: None,
        nodes_expected: level.qn.n,
        checks: CheckFlags {
            energy: false,
            nodes: false,
            shape: false,
            residual: false,
        },
        passed: false,
        error: None,
    };
    let mut errors = Vec::new();

    match oracle_energy(&level.params, &level.qn) {
        Ok(sol) => {
            let de = (sol.energy - claimed).abs() / m0;
            report.oracle_energy = Some(sol.energy);
            report.delta_e_rel = Some(de);
            report.nodes_observed = Some(sol.nodes);
            report.checks.energy = de <= config.tol_e;
            report.checks.nodes = sol.nodes == level.qn.n;
            match shape_deviation(level, &sol) {
                Ok(dev) => {
                    report.shape_deviation = Some(dev);
                    report.checks.shape = dev <= config.tol_shape;
                }
                Err(e) => errors.push(e.to_string()),
            }
        }
        Err(e) => errors.push(format!("oracle: {e}")),
    }

    let grid = crate::wavefunction::GridSpec::with_points(config.residual_points);
    match RadialFunction::sample(level, level.qn.s, &grid).and_then(|r| residual_at_energy(level, &r, claimed)) {
        Ok(r) => {
            report.residual = Some(r);
            report.checks.residual = r <= config.tol_residual;
        }
        Err(e) => errors.push(format!("residual: {e}")),
    }

    let c = report.checks;
    report.passed = c.energy && c.nodes && c.shape && c.residual;
    if !errors.is_empty() {
        report.error = Some(errors.join("; "));
    }
    report
}

/// max |φ_oracle − φ_analytic| / max |φ_analytic| over the oracle mesh.
pub fn shape_deviation(level: &EnergyLevel, sol: &ShootingSolution) -> Result<f64> {
    let mut peak = 0.0_f64;
    let mut worst = 0.0_f64;
    for (&r, &v) in sol.grid.iter().zip(&sol.values) {
        let a = radial_phi(level, level.qn.s, r)?;
        peak = peak.max(a.abs());
        worst = worst.max((v - a).abs());
    }
    Ok(worst / peak)
}
