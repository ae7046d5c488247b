//! Command-line front end: spectrum tables, wavefunction samples, parameter
//! sweeps and verification runs.
//!
//! Exit codes: 0 success, 1 verification failure, 2 configuration error,
//! 3 empty or absent result.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::error::Error;
use crate::params::{MagneticNumber, QuantumNumbers, Spin, SystemParams, FINE_STRUCTURE};
use crate::spectrum::{enumerate_spectrum, monotonicity_scan, EnergyLevel, SpectrumTable, SweepAxis};
use crate::verifier::{verify_level, VerificationReport, VerifyConfig};
use crate::wavefunction::{radial_phi, spinor_components, GridSpec, SpinorConvention};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_EMPTY: i32 = 3;

/// Environment variable capping worker threads.
pub const THREADS_ENV: &str = "ABCPDM_THREADS";

#[derive(Debug, Parser)]
#[command(name = "abcpdm", version, about = "Dirac bound states with position-dependent mass in an Aharonov-Bohm-Coulomb field")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Enumerate bound levels.
    #[command(allow_negative_numbers = true)]
    Spectrum(CommonArgs),
    /// Sample φ_±, F_±, G_± and the density of one level.
    #[command(allow_negative_numbers = true)]
    Wavefunction {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        level: LevelArgs,
    },
    /// Check every enumerated level against the shooting oracle.
    #[command(allow_negative_numbers = true)]
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        /// Shift the claimed energies by this multiple of m0 (fault injection).
        #[arg(long = "perturb-energy")]
        perturb_energy: Option<f64>,
    },
    /// Energies along one parameter axis.
    #[command(allow_negative_numbers = true)]
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        sweep: SweepArgs,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// key=value file with the same names as the long flags; flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub m0: Option<f64>,
    /// Coupling Zα (exclusive with --Z).
    #[arg(long = "z-alpha")]
    pub z_alpha: Option<f64>,
    /// Integer charge; Zα = Z·α with α = 0.0072973525693.
    #[arg(long = "Z")]
    pub charge: Option<u32>,
    #[arg(long = "phi-ab")]
    pub phi_ab: Option<f64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long = "n-max")]
    pub n_max: Option<u32>,
    /// Largest |m_l| (half-odd integer).
    #[arg(long = "m-l-max")]
    pub m_l_max: Option<f64>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file (stdout if absent).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long = "tol-e")]
    pub tol_e: Option<f64>,
    #[arg(long = "tol-shape")]
    pub tol_shape: Option<f64>,
    #[arg(long = "tol-residual")]
    pub tol_residual: Option<f64>,
    #[arg(long = "grid-points")]
    pub grid_points: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct LevelArgs {
    #[arg(long, default_value_t = 0)]
    pub n: u32,
    #[arg(long = "m-l", default_value_t = 0.5)]
    pub m_l: f64,
    #[arg(long, default_value_t = 1)]
    pub s: i32,
}

/// Values are `a,b,c` or `start:stop:count` (inclusive).
#[derive(Debug, Clone, Default, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub sweep_kappa: Option<String>,
    #[arg(long)]
    pub sweep_z_alpha: Option<String>,
    #[arg(long)]
    pub sweep_phi_ab: Option<String>,
}

/// Failure carrying its exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NoBoundState(_) | Error::NotABoundState { .. } | Error::SupercriticalCoupling { .. } => EXIT_EMPTY,
            Error::InvalidParameter(_) | Error::Domain(_) => EXIT_CONFIG,
            _ => EXIT_VERIFY_FAILED,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Fully resolved settings of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: SystemParams,
    /// Integer charge if Zα came from --Z.
    pub charge: Option<u32>,
    pub n_max: u32,
    pub m_l_max: MagneticNumber,
    pub format: Format,
    pub output: Option<PathBuf>,
    pub verify: VerifyConfig,
    pub grid: GridSpec,
}

const CONFIG_KEYS: &[&str] = &[
    "m0",
    "z-alpha",
    "Z",
    "phi-ab",
    "kappa",
    "n-max",
    "m-l-max",
    "format",
    "output",
    "tol-e",
    "tol-shape",
    "tol-residual",
    "grid-points",
];

/// Parses `key = value` lines; `#` starts a comment. Underscores in keys are
/// read as hyphens.
pub fn parse_config_file(text: &str) -> CliResult<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("config line {}: expected key=value", no + 1)))?;
        let key = k.trim().trim_start_matches("--").replace('_', "-");
        if !CONFIG_KEYS.contains(&key.as_str()) {
            return Err(CliError::config(format!("config line {}: unknown key '{key}'", no + 1)));
        }
        if map.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(CliError::config(format!("config line {}: duplicate key '{key}'", no + 1)));
        }
    }
    Ok(map)
}

fn from_file<T: std::str::FromStr>(file: &BTreeMap<String, String>, key: &str) -> CliResult<Option<T>> {
    file.get(key)
        .map(|v| v.parse::<T>().map_err(|_| CliError::config(format!("config: bad value '{v}' for {key}"))))
        .transpose()
}

impl RunConfig {
    /// Merges flags over the optional config file. `need_coupling` is false
    /// only for Zα sweeps.
    pub fn resolve(args: &CommonArgs, default_format: Format, need_coupling: bool) -> CliResult<Self> {
        let file = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
                parse_config_file(&text)?
            }
            None => BTreeMap::new(),
        };

        // the coupling is taken from the flags if either flag is present
        let (z_alpha, charge) = if args.z_alpha.is_some() || args.charge.is_some() {
            (args.z_alpha, args.charge)
        } else {
            (from_file::<f64>(&file, "z-alpha")?, from_file::<u32>(&file, "Z")?)
        };
        let m0 = args.m0.or(from_file(&file, "m0")?).unwrap_or(1.0);
        let phi_ab = args.phi_ab.or(from_file(&file, "phi-ab")?).unwrap_or(0.0);
        let kappa = args.kappa.or(from_file(&file, "kappa")?).unwrap_or(0.0);
        let params = match (z_alpha, charge) {
            (Some(_), Some(_)) => return Err(CliError::config("give exactly one of --z-alpha and --Z")),
            (Some(za), None) => SystemParams::new(m0, za, phi_ab, kappa)?,
            (None, Some(z)) => SystemParams::with_charge(m0, z, phi_ab, kappa)?,
            (None, None) if !need_coupling => SystemParams::new(m0, 0.0, phi_ab, kappa)?,
            (None, None) => return Err(CliError::config("one of --z-alpha or --Z is required")),
        };

        let n_max = args.n_max.or(from_file(&file, "n-max")?).unwrap_or(3);
        let m_l_max = MagneticNumber::try_from(args.m_l_max.or(from_file(&file, "m-l-max")?).unwrap_or(1.5))?;
        if m_l_max.twice() < 1 {
            return Err(CliError::config("m-l-max must be >= 1/2"));
        }
        let format = match args.format {
            Some(f) => f,
            None => match file.get("format").map(String::as_str) {
                None => default_format,
                Some("csv") => Format::Csv,
                Some("json") => Format::Json,
                Some(other) => return Err(CliError::config(format!("config: unknown format '{other}'"))),
            },
        };
        let output = args.output.clone().or_else(|| file.get("output").map(PathBuf::from));

        let grid_points = args.grid_points.or(from_file(&file, "grid-points")?);
        let mut grid = GridSpec::default();
        if let Some(points) = grid_points {
            if points < 16 {
                return Err(CliError::config("grid-points must be >= 16"));
            }
            grid.points = points;
        }
        let mut verify = VerifyConfig {
            residual_points: grid.points,
            ..VerifyConfig::default()
        };
        for (flag, key, slot) in [
            (args.tol_e, "tol-e", &mut verify.tol_e),
            (args.tol_shape, "tol-shape", &mut verify.tol_shape),
            (args.tol_residual, "tol-residual", &mut verify.tol_residual),
        ] {
            if let Some(v) = flag.or(from_file(&file, key)?) {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(CliError::config(format!("{key} must be > 0")));
                }
                *slot = v;
            }
        }

        Ok(Self {
            params,
            charge,
            n_max,
            m_l_max,
            format,
            output,
            verify,
            grid,
        })
    }
}

/// Fixed float format: 17 significant digits, lowercase exponent.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn num(x: f64) -> Value {
    if x.is_finite() {
        Value::Number(fmt_f64(x).parse().expect("formatted float is a JSON number"))
    } else {
        Value::Null
    }
}

fn opt_num(x: Option<f64>) -> Value {
    x.map_or(Value::Null, num)
}

fn regime(params: &SystemParams) -> &'static str {
    if params.is_constant_mass() {
        "constant-mass limit"
    } else {
        "position-dependent mass"
    }
}

fn param_pairs(config: &RunConfig) -> Vec<(&'static str, String)> {
    let p = &config.params;
    let mut pairs = vec![
        ("m0", fmt_f64(p.m0)),
        ("z_alpha", fmt_f64(p.z_alpha)),
        ("phi_ab", fmt_f64(p.phi_ab)),
        ("kappa", fmt_f64(p.kappa)),
        ("n_max", config.n_max.to_string()),
        ("m_l_max", config.m_l_max.to_string()),
        ("regime", regime(p).to_string()),
    ];
    if let Some(z) = config.charge {
        pairs.push(("Z", z.to_string()));
        pairs.push(("alpha", fmt_f64(FINE_STRUCTURE)));
    }
    pairs
}

fn params_json(config: &RunConfig) -> Value {
    let p = &config.params;
    let mut m = Map::new();
    m.insert("m0".into(), num(p.m0));
    m.insert("z_alpha".into(), num(p.z_alpha));
    m.insert("phi_ab".into(), num(p.phi_ab));
    m.insert("kappa".into(), num(p.kappa));
    m.insert("n_max".into(), json!(config.n_max));
    m.insert("m_l_max".into(), num(config.m_l_max.value()));
    m.insert("regime".into(), json!(regime(p)));
    if let Some(z) = config.charge {
        m.insert("Z".into(), json!(z));
        m.insert("alpha".into(), num(FINE_STRUCTURE));
    }
    Value::Object(m)
}

fn header(out: &mut String, command: &str, pairs: &[(&str, String)]) {
    out.push_str(&format!("#command={command}\n"));
    for (k, v) in pairs {
        out.push_str(&format!("#{k}={v}\n"));
    }
}

fn csv_rows(columns: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::config(format!("csv: {e}"));
    w.write_record(columns).map_err(io)?;
    for row in rows {
        w.write_record(&row).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::config(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

/// Output of one subcommand before it is written.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub text: String,
    pub warnings: Vec<String>,
    pub code: i32,
}

pub fn cmd_spectrum(config: &RunConfig) -> CliResult<Outcome> {
    let table = enumerate_spectrum(&config.params, config.n_max, config.m_l_max)?;
    let mut warnings = Vec::new();
    if table.is_empty() {
        warnings.push("no bound states".to_string());
    }
    let text = match config.format {
        Format::Csv => spectrum_csv(config, &table, &warnings)?,
        Format::Json => json_text(&spectrum_json(config, &table, &warnings)),
    };
    let code = if table.is_empty() { EXIT_EMPTY } else { EXIT_OK };
    Ok(Outcome { text, warnings, code })
}

const SPECTRUM_CONVENTION: &str = "positive-energy branch; rows sorted by E, then n, m_l, s (+1 first)";

fn spectrum_csv(config: &RunConfig, table: &SpectrumTable, warnings: &[String]) -> CliResult<String> {
    let mut out = String::new();
    let mut pairs = param_pairs(config);
    pairs.push(("convention", SPECTRUM_CONVENTION.to_string()));
    pairs.push(("levels", table.levels.len().to_string()));
    pairs.push(("skipped", table.skipped.len().to_string()));
    for w in warnings {
        pairs.push(("warning", w.clone()));
    }
    header(&mut out, "spectrum", &pairs);
    let ids = table.class_ids();
    let m0 = config.params.m0;
    let rows = table.levels.iter().zip(&ids).map(|(l, id)| {
        vec![
            l.qn.n.to_string(),
            l.qn.m_l.to_string(),
            l.qn.s.as_i32().to_string(),
            l.n_s.to_string(),
            fmt_f64(l.gamma),
            fmt_f64(l.energy),
            fmt_f64(l.energy / m0),
            id.to_string(),
            fmt_f64(l.residual),
        ]
    });
    out.push_str(&csv_rows(
        &["n", "m_l", "s", "n_s", "gamma", "E", "E_over_m0", "degeneracy_class_id", "quantization_residual"],
        rows,
    )?);
    Ok(out)
}

fn spectrum_json(config: &RunConfig, table: &SpectrumTable, warnings: &[String]) -> Value {
    let ids = table.class_ids();
    let m0 = config.params.m0;
    let levels: Vec<Value> = table
        .levels
        .iter()
        .zip(&ids)
        .map(|(l, id)| {
            json!({
                "n": l.qn.n,
                "m_l": num(l.qn.m_l.value()),
                "s": l.qn.s.as_i32(),
                "n_s": l.n_s,
                "gamma": num(l.gamma),
                "E": num(l.energy),
                "E_over_m0": num(l.energy / m0),
                "degeneracy_class_id": id,
                "quantization_residual": num(l.residual),
            })
        })
        .collect();
    let skipped: Vec<Value> = table
        .skipped
        .iter()
        .map(|s| json!({"n": s.qn.n, "m_l": num(s.qn.m_l.value()), "s": s.qn.s.as_i32(), "reason": s.reason}))
        .collect();
    json!({
        "params": params_json(config),
        "levels": levels,
        "convention": SPECTRUM_CONVENTION,
        "skipped": skipped,
        "warnings": warnings,
    })
}

pub fn cmd_wavefunction(config: &RunConfig, selector: &LevelArgs) -> CliResult<Outcome> {
    let m_l = MagneticNumber::try_from(selector.m_l)?;
    let s = Spin::try_from(selector.s)?;
    let qn = QuantumNumbers::new(selector.n, m_l, s);
    let level = EnergyLevel::new(&config.params, qn)?;
    let convention = SpinorConvention::default();
    // the s = −1 component reaches further out; its mesh covers both
    let grid = config.grid.mesh(&level, Spin::Down)?;
    let mut rows = Vec::with_capacity(grid.len());
    for &rho in &grid {
        let c = spinor_components(&level, rho, &convention)?;
        rows.push([
            rho,
            radial_phi(&level, Spin::Up, rho)?,
            radial_phi(&level, Spin::Down, rho)?,
            c.f_plus,
            c.f_minus,
            c.g_plus,
            c.g_minus,
            c.density(),
        ]);
    }
    const COLUMNS: [&str; 8] = ["rho", "phi_plus", "phi_minus", "F_plus", "F_minus", "G_plus", "G_minus", "density"];
    let text = match config.format {
        Format::Csv => {
            let mut out = String::new();
            let mut pairs = param_pairs(config);
            pairs.extend([
                ("n", qn.n.to_string()),
                ("m_l", qn.m_l.to_string()),
                ("s", qn.s.as_i32().to_string()),
                ("E", fmt_f64(level.energy)),
                ("eta", fmt_f64(level.eta())),
                ("grid_points", grid.len().to_string()),
                ("convention", convention.describe()),
                ("density", "F_plus^2 + G_minus^2 + F_minus^2 + G_plus^2".to_string()),
            ]);
            header(&mut out, "wavefunction", &pairs);
            out.push_str(&csv_rows(&COLUMNS, rows.iter().map(|r| r.iter().map(|v| fmt_f64(*v)).collect()))?);
            out
        }
        Format::Json => {
            let samples: Vec<Value> = rows
                .iter()
                .map(|r| Value::Object(COLUMNS.iter().zip(r).map(|(k, v)| (k.to_string(), num(*v))).collect()))
                .collect();
            json_text(&json!({
                "params": params_json(config),
                "level": {"n": qn.n, "m_l": num(qn.m_l.value()), "s": qn.s.as_i32(), "E": num(level.energy), "eta": num(level.eta())},
                "levels": samples,
                "convention": convention.describe(),
            }))
        }
    };
    Ok(Outcome {
        text,
        warnings: Vec::new(),
        code: EXIT_OK,
    })
}

/// Worker pool sized by `ABCPDM_THREADS` (all cores if unset).
pub fn thread_pool() -> CliResult<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|n| *n >= 1)
            .ok_or_else(|| CliError::config(format!("{THREADS_ENV} must be an integer >= 1, got '{v}'")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| CliError::config(format!("thread pool: {e}")))
}

pub fn cmd_verify(config: &RunConfig, perturb_energy: f64) -> CliResult<Outcome> {
    if !perturb_energy.is_finite() {
        return Err(CliError::config("perturb-energy must be finite"));
    }
    let table = enumerate_spectrum(&config.params, config.n_max, config.m_l_max)?;
    let mut warnings = Vec::new();
    if table.is_empty() {
        warnings.push("no bound states".to_string());
    }
    let vc = VerifyConfig {
        perturb_energy,
        ..config.verify
    };
    let pool = thread_pool()?;
    let reports: Vec<VerificationReport> = pool.install(|| table.levels.par_iter().map(|l| verify_level(l, &vc)).collect());
    let failed = reports.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        let worst = reports.iter().filter_map(|r| r.residual).fold(0.0, f64::max);
        warnings.push(format!(
            "verification failed for {failed} of {} levels (max residual {})",
            reports.len(),
            fmt_f64(worst)
        ));
    }

    let text = match config.format {
        Format::Json => {
            let levels: Vec<Value> = reports.iter().map(report_json).collect();
            json_text(&json!({
                "params": params_json(config),
                "levels": levels,
                "convention": {
                    "regime": regime(&config.params),
                    "tol_e": num(vc.tol_e),
                    "tol_shape": num(vc.tol_shape),
                    "tol_residual": num(vc.tol_residual),
                    "residual_grid_points": vc.residual_points,
                    "perturb_energy": num(vc.perturb_energy),
                },
                "summary": {"levels": reports.len(), "passed": reports.len() - failed, "failed": failed},
                "warnings": warnings,
            }))
        }
        Format::Csv => {
            let mut out = String::new();
            let mut pairs = param_pairs(config);
            pairs.extend([
                ("tol_e", fmt_f64(vc.tol_e)),
                ("tol_shape", fmt_f64(vc.tol_shape)),
                ("tol_residual", fmt_f64(vc.tol_residual)),
                ("perturb_energy", fmt_f64(vc.perturb_energy)),
                ("failed", failed.to_string()),
            ]);
            for w in &warnings {
                pairs.push(("warning", w.clone()));
            }
            header(&mut out, "verify", &pairs);
            let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
            let rows = reports.iter().map(|r| {
                vec![
                    r.qn.n.to_string(),
                    r.qn.m_l.to_string(),
                    r.qn.s.as_i32().to_string(),
                    fmt_f64(r.analytic_energy),
                    opt(r.oracle_energy),
                    opt(r.delta_e_rel),
                    opt(r.shape_deviation),
                    opt(r.residual),
                    r.nodes_observed.map(|n| n.to_string()).unwrap_or_default(),
                    r.nodes_expected.to_string(),
                    r.passed.to_string(),
                ]
            });
            out.push_str(&csv_rows(
                &[
                    "n",
                    "m_l",
                    "s",
                    "E_analytic",
                    "E_oracle",
                    "delta_E_over_m0",
                    "shape_deviation",
                    "residual",
                    "nodes_observed",
                    "nodes_expected",
                    "passed",
                ],
                rows,
            )?);
            out
        }
    };
    let code = if table.is_empty() {
        EXIT_EMPTY
    } else if failed > 0 {
        EXIT_VERIFY_FAILED
    } else {
        EXIT_OK
    };
    Ok(Outcome { text, warnings, code })
}

fn report_json(r: &VerificationReport) -> Value {
    json!({
        "n": r.qn.n,
        "m_l": num(r.qn.m_l.value()),
        "s": r.qn.s.as_i32(),
        "E_analytic": num(r.analytic_energy),
        "E_oracle": opt_num(r.oracle_energy),
        "delta_E_over_m0": opt_num(r.delta_e_rel),
        "shape_deviation": opt_num(r.shape_deviation),
        "residual": opt_num(r.residual),
        "nodes_observed": r.nodes_observed,
        "nodes_expected": r.nodes_expected,
        "checks": {
            "energy": r.checks.energy,
            "nodes": r.checks.nodes,
            "shape": r.checks.shape,
            "residual": r.checks.residual,
        },
        "passed": r.passed,
        "error": r.error,
    })
}

/// `a,b,c` or `start:stop:count` with count ≥ 2.
pub fn parse_sweep_values(spec: &str) -> CliResult<Vec<f64>> {
    let bad = || CliError::config(format!("bad sweep values '{spec}'"));
    let values: Vec<f64> = if let [a, b, c] = spec.split(':').collect::<Vec<_>>()[..] {
        let (start, stop): (f64, f64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        let count: usize = c.trim().parse().map_err(|_| bad())?;
        if count < 2 {
            return Err(bad());
        }
        (0..count)
            .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
            .collect()
    } else {
        spec.split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<CliResult<_>>()?
    };
    if values.len() < 2 || values.iter().any(|v| !v.is_finite()) {
        return Err(CliError::config(format!("sweep '{spec}' needs at least 2 finite values")));
    }
    Ok(values)
}

impl SweepArgs {
    pub fn axis(&self) -> CliResult<(SweepAxis, Vec<f64>)> {
        let given: Vec<(SweepAxis, &String)> = [
            (SweepAxis::Kappa, &self.sweep_kappa),
            (SweepAxis::ZAlpha, &self.sweep_z_alpha),
            (SweepAxis::PhiAb, &self.sweep_phi_ab),
        ]
        .into_iter()
        .filter_map(|(a, v)| v.as_ref().map(|v| (a, v)))
        .collect();
        match given[..] {
            [(axis, spec)] => Ok((axis, parse_sweep_values(spec)?)),
            [] => Err(CliError::config("give one of --sweep-kappa, --sweep-z-alpha, --sweep-phi-ab")),
            _ => Err(CliError::config("sweep over exactly one axis")),
        }
    }
}

pub fn cmd_sweep(config: &RunConfig, axis: SweepAxis, values: &[f64]) -> CliResult<Outcome> {
    let base = &config.params;
    for &v in values {
        axis.apply(base, v)?;
    }
    let mut channels = Vec::new();
    let top = config.m_l_max.twice();
    for twice in (-top..=top).step_by(2) {
        for n in 0..=config.n_max {
            for s in Spin::BOTH {
                channels.push(QuantumNumbers::new(n, MagneticNumber::from_twice(twice)?, s));
            }
        }
    }
    let tol = 1e-12 * base.m0;
    let scans = channels
        .iter()
        .map(|qn| monotonicity_scan(base, axis, values, qn, tol))
        .collect::<crate::Result<Vec<_>>>()?;
    let any = scans.iter().any(|r| r.energies.iter().any(Option::is_some));
    let mut warnings = Vec::new();
    if !any {
        warnings.push("no bound states".to_string());
    }
    let m0 = base.m0;

    // long format: value-major, then channel order
    let mut rows = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        for r in &scans {
            if let Some(e) = r.energies[i] {
                rows.push((v, r.qn, e));
            }
        }
    }
    let summary = |r: &crate::spectrum::MonotonicityReport| {
        let diffs: Vec<f64> = r.differences.iter().flatten().copied().collect();
        let min = diffs.iter().copied().fold(f64::INFINITY, f64::min);
        let max = diffs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (diffs.len(), min, max)
    };

    let text = match config.format {
        Format::Csv => {
            let mut out = String::new();
            let mut pairs = param_pairs(config);
            pairs.push(("axis", axis.name().to_string()));
            pairs.push(("values", values.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(";")));
            for w in &warnings {
                pairs.push(("warning", w.clone()));
            }
            header(&mut out, "sweep", &pairs);
            out.push_str(&csv_rows(
                &["sweep_value", "n", "m_l", "s", "E", "E_over_m0"],
                rows.iter().map(|(v, qn, e)| {
                    vec![
                        fmt_f64(*v),
                        qn.n.to_string(),
                        qn.m_l.to_string(),
                        qn.s.as_i32().to_string(),
                        fmt_f64(*e),
                        fmt_f64(e / m0),
                    ]
                }),
            )?);
            for r in scans.iter().filter(|r| r.energies.iter().any(Option::is_some)) {
                let (count, min, max) = summary(r);
                let mut line = format!(
                    "#monotonicity n={} m_l={} s={} points={} complete={} nondecreasing={} nonincreasing={}",
                    r.qn.n,
                    r.qn.m_l,
                    r.qn.s.as_i32(),
                    r.energies.iter().flatten().count(),
                    r.complete,
                    r.nondecreasing,
                    r.nonincreasing
                );
                if count > 0 {
                    line.push_str(&format!(" min_difference={} max_difference={}", fmt_f64(min), fmt_f64(max)));
                }
                if let Some((va, ea, vb, eb)) = r.counterexample {
                    line.push_str(&format!(
                        " counterexample={},{},{},{}",
                        fmt_f64(va),
                        fmt_f64(ea),
                        fmt_f64(vb),
                        fmt_f64(eb)
                    ));
                }
                out.push_str(&line);
                out.push('\n');
            }
            out
        }
        Format::Json => {
            let levels: Vec<Value> = rows
                .iter()
                .map(|(v, qn, e)| {
                    json!({"sweep_value": num(*v), "n": qn.n, "m_l": num(qn.m_l.value()), "s": qn.s.as_i32(), "E": num(*e), "E_over_m0": num(e / m0)})
                })
                .collect();
            let monotonicity: Vec<Value> = scans
                .iter()
                .filter(|r| r.energies.iter().any(Option::is_some))
                .map(|r| {
                    let (count, min, max) = summary(r);
                    json!({
                        "n": r.qn.n,
                        "m_l": num(r.qn.m_l.value()),
                        "s": r.qn.s.as_i32(),
                        "complete": r.complete,
                        "nondecreasing": r.nondecreasing,
                        "nonincreasing": r.nonincreasing,
                        "differences": r.differences.iter().map(|d| opt_num(*d)).collect::<Vec<_>>(),
                        "min_difference": if count > 0 { num(min) } else { Value::Null },
                        "max_difference": if count > 0 { num(max) } else { Value::Null },
                        "counterexample": r.counterexample.map(|(a, b, c, d)| vec![num(a), num(b), num(c), num(d)]),
                    })
                })
                .collect();
            json_text(&json!({
                "params": params_json(config),
                "axis": axis.name(),
                "values": values.iter().map(|v| num(*v)).collect::<Vec<_>>(),
                "levels": levels,
                "monotonicity": monotonicity,
                "convention": "long format; one row per (sweep value, level) that exists",
                "warnings": warnings,
            }))
        }
    };
    let code = if any { EXIT_OK } else { EXIT_EMPTY };
    Ok(Outcome { text, warnings, code })
}

fn dispatch(cli: &Cli) -> CliResult<(Outcome, Option<PathBuf>)> {
    let (outcome, config) = match &cli.command {
        Command::Spectrum(common) => {
            let config = RunConfig::resolve(common, Format::Csv, true)?;
            (cmd_spectrum(&config)?, config)
        }
        Command::Wavefunction { common, level } => {
            let config = RunConfig::resolve(common, Format::Csv, true)?;
            (cmd_wavefunction(&config, level)?, config)
        }
        Command::Verify { common, perturb_energy } => {
            let config = RunConfig::resolve(common, Format::Json, true)?;
            (cmd_verify(&config, perturb_energy.unwrap_or(0.0))?, config)
        }
        Command::Sweep { common, sweep } => {
            let (axis, values) = sweep.axis()?;
            let config = RunConfig::resolve(common, Format::Csv, axis != SweepAxis::ZAlpha)?;
            (cmd_sweep(&config, axis, &values)?, config)
        }
    };
    Ok((outcome, config.output))
}

fn write_output(text: &str, path: Option<&Path>, stdout: &mut dyn Write) -> CliResult<()> {
    let res = match path {
        Some(p) => std::fs::write(p, text),
        None => stdout.write_all(text.as_bytes()),
    };
    res.map_err(|e| CliError::config(format!("cannot write output: {e}")))
}

/// Runs the program on `args` (including the program name) and returns the
/// exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    match dispatch(&cli) {
        Ok((outcome, path)) => {
            for w in &outcome.warnings {
                let _ = writeln!(stderr, "warning: {w}");
            }
            if let Err(e) = write_output(&outcome.text, path.as_deref(), stdout) {
                let _ = writeln!(stderr, "error: {}", e.message);
                return e.code;
            }
            outcome.code
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.message);
            e.code
        }
    }
}
