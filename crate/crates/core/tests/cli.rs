use std::collections::HashMap;
use std::path::Path;
use std::process::{Command, Output};

const REFERENCE: [&str; 6] = ["--z-alpha", "0.5", "--phi-ab", "0.25", "--kappa", "0.2"];

fn abcpdm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_abcpdm")).args(args).output().expect("binary runs")
}

fn with_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_abcpdm"))
        .args(args)
        .env(key, value)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

struct Table {
    meta: HashMap<String, String>,
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn parse(text: &str) -> Self {
        let mut meta = HashMap::new();
        let mut body = String::new();
        for line in text.lines() {
            match line.strip_prefix('#') {
                Some(kv) => {
                    if let Some((k, v)) = kv.split_once('=') {
                        meta.insert(k.to_string(), v.to_string());
                    }
                }
                None => {
                    body.push_str(line);
                    body.push('\n');
                }
            }
        }
        let mut reader = csv::Reader::from_reader(body.as_bytes());
        let columns = reader.headers().unwrap().iter().map(String::from).collect();
        let rows = reader
            .records()
            .map(|r| r.unwrap().iter().map(String::from).collect())
            .collect();
        Self { meta, columns, rows }
    }

    fn col(&self, name: &str) -> Vec<f64> {
        let i = self.columns.iter().position(|c| c == name).unwrap_or_else(|| panic!("no column {name}"));
        self.rows.iter().map(|r| r[i].parse().unwrap()).collect()
    }
}

fn args<'a>(head: &[&'a str], tail: &[&'a str]) -> Vec<&'a str> {
    head.iter().chain(REFERENCE.iter()).chain(tail).copied().collect()
}

#[test]
fn spectrum_matches_golden_file() {
    let out = abcpdm(&args(&["spectrum"], &[]));
    assert!(out.status.success());
    let golden = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/spectrum_reference.csv")).unwrap();
    assert_eq!(stdout(&out), golden, "regenerate the golden file only after `abcpdm verify` passes on the reference point");
}

#[test]
fn spectrum_row_count_is_bounded() {
    for charge in ["1", "80"] {
        let out = abcpdm(&["spectrum", "--Z", charge, "--phi-ab", "0.25", "--kappa", "0.2", "--n-max", "2"]);
        let t = Table::parse(&stdout(&out));
        assert!(t.rows.len() <= 2 * 3 * 4);
        assert_eq!(t.meta["Z"], charge);
        // Zα = α < κ: the 1/ρ term is repulsive for every channel
        let expected = if charge == "1" { 3 } else { 0 };
        assert_eq!(out.status.code(), Some(expected));
    }
}

#[test]
fn spectrum_rows_sorted_and_residuals_small() {
    let t = Table::parse(&stdout(&abcpdm(&args(&["spectrum"], &[]))));
    let e = t.col("E");
    assert!(e.windows(2).all(|w| w[0] <= w[1]));
    assert!(t.col("quantization_residual").iter().all(|r| r.abs() < 1e-10));
    let ratio: Vec<f64> = t.col("E_over_m0");
    assert_eq!(ratio, e);
}

#[test]
fn json_mirror_has_same_levels() {
    let csv = Table::parse(&stdout(&abcpdm(&args(&["spectrum"], &[]))));
    let json: serde_json::Value = serde_json::from_str(&stdout(&abcpdm(&args(&["spectrum"], &["--format", "json"])))).unwrap();
    let levels = json["levels"].as_array().unwrap();
    assert_eq!(levels.len(), csv.rows.len());
    for (row, lv) in csv.rows.iter().zip(levels) {
        assert_eq!(lv["E"].to_string(), row[5]);
    }
    assert!(json["convention"].is_string());
}

#[test]
fn wavefunction_columns() {
    for n in ["0", "1"] {
        let out = abcpdm(&args(&["wavefunction"], &["--n", n, "--m-l", "0.5", "--s", "1"]));
        assert!(out.status.success());
        let t = Table::parse(&stdout(&out));
        assert!(t.meta.contains_key("convention"));
        let rho = t.col("rho");
        let phi = t.col("phi_plus");
        let density = t.col("density");
        let (fp, fm, gp, gm) = (t.col("F_plus"), t.col("F_minus"), t.col("G_plus"), t.col("G_minus"));
        for i in 0..rho.len() {
            let sum = fp[i].powi(2) + gm[i].powi(2) + fm[i].powi(2) + gp[i].powi(2);
            assert!((density[i] - sum).abs() <= 1e-14 * sum.max(1e-300));
        }
        if n == "0" {
            assert!(phi.iter().all(|v| *v >= 0.0));
            assert!(t.col("phi_minus").iter().all(|v| *v >= 0.0));
        }

        // fit over the last decade, past the outermost node; −c2 is the decay rate
        let eta: f64 = t.meta["eta"].parse().unwrap();
        let last = *rho.last().unwrap();
        let outer_node = (1..rho.len()).rev().find(|&i| phi[i] * phi[i - 1] < 0.0).map_or(0.0, |i| 2.0 * rho[i]);
        let from = (last / 10.0).max(outer_node);
        let pts: Vec<(f64, f64)> = rho
            .iter()
            .zip(&phi)
            .filter(|(r, p)| **r >= from && p.abs() > 0.0)
            .map(|(r, p)| (*r, p.abs().ln()))
            .collect();
        let c2 = fit_decay(&pts);
        assert!((-c2 - eta).abs() < 0.01 * eta, "n={n}: slope {} vs eta {eta}", -c2);
    }
}

/// Least squares for ln|φ| = c0 + c1 ln ρ + c2 ρ + c3/ρ (asymptotic form to
/// next order); returns c2.
fn fit_decay(pts: &[(f64, f64)]) -> f64 {
    let a = nalgebra::DMatrix::from_fn(pts.len(), 4, |i, j| {
        let x = pts[i].0;
        [1.0, x.ln(), x, 1.0 / x][j]
    });
    let b = nalgebra::DVector::from_iterator(pts.len(), pts.iter().map(|p| p.1));
    let c = a.svd(true, true).solve(&b, 1e-14).unwrap();
    c[2]
}

#[test]
fn wavefunction_for_absent_level_exits_3() {
    let out = abcpdm(&["wavefunction", "--z-alpha", "0", "--kappa", "0.3"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn verify_reference_point_passes() {
    let out = abcpdm(&args(&["verify"], &["--n-max", "1"]));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["summary"]["failed"], 0);
    assert_eq!(v["convention"]["regime"], "position-dependent mass");
}

#[test]
fn verify_perturbed_energy_fails_with_residual_report() {
    let out = abcpdm(&args(&["verify"], &["--n-max", "0", "--perturb-energy", "1e-3"]));
    assert_eq!(out.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    for level in v["levels"].as_array().unwrap() {
        assert_eq!(level["checks"]["residual"], false);
        assert!(level["residual"].as_f64().unwrap() > 1e-3);
    }
    assert!(String::from_utf8_lossy(&out.stderr).contains("max residual"));
}

#[test]
fn verify_constant_mass_label() {
    let out = abcpdm(&["verify", "--z-alpha", "0.5", "--phi-ab", "0.25", "--kappa", "0", "--n-max", "0"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("\"constant-mass limit\""));
}

#[test]
fn verify_is_independent_of_thread_count() {
    let a = with_env(&args(&["verify"], &["--n-max", "1"]), "ABCPDM_THREADS", "1");
    let b = with_env(&args(&["verify"], &["--n-max", "1"]), "ABCPDM_THREADS", "4");
    assert_eq!(a.stdout, b.stdout);
    let bad = with_env(&args(&["verify"], &["--n-max", "0"]), "ABCPDM_THREADS", "0");
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "# reference point\nz-alpha = 0.5\nphi_ab = 0.25\nkappa = 0.3\nn-max = 1\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let t = Table::parse(&stdout(&abcpdm(&["spectrum", "--config", cfg, "--kappa", "0.2"])));
    assert_eq!(t.meta["kappa"], "2.0000000000000001e-1");
    assert_eq!(t.meta["n_max"], "1");
    // a charge flag replaces the file's coupling
    let t = Table::parse(&stdout(&abcpdm(&["spectrum", "--config", cfg, "--Z", "60"])));
    assert_eq!(t.meta["Z"], "60");
    std::fs::write(dir.path().join("bad.conf"), "z-alpha = 0.5\nZ = 3\n").unwrap();
    let out = abcpdm(&["spectrum", "--config", dir.path().join("bad.conf").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn output_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("spectrum.csv");
    let out = abcpdm(&args(&["spectrum"], &["--output", path.to_str().unwrap()]));
    assert!(out.status.success() && out.stdout.is_empty());
    assert_eq!(std::fs::read(&path).unwrap(), abcpdm(&args(&["spectrum"], &[])).stdout);
}

#[test]
fn kappa_sweep_reports_differences() {
    let out = abcpdm(&["sweep", "--z-alpha", "0.5", "--phi-ab", "0.25", "--n-max", "1", "--sweep-kappa", "0:0.4:5"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let t = Table::parse(&text);
    assert_eq!(t.columns, ["sweep_value", "n", "m_l", "s", "E", "E_over_m0"]);
    let summaries: Vec<&str> = text.lines().filter(|l| l.starts_with("#monotonicity")).collect();
    assert!(!summaries.is_empty());
    assert!(summaries.iter().all(|l| l.contains("nondecreasing=")));
    assert!(summaries.iter().any(|l| l.contains("min_difference=")));
}

#[test]
fn flux_sweep_depends_on_m_l_plus_flux() {
    let out = abcpdm(&["sweep", "--z-alpha", "0.3", "--kappa", "0.1", "--n-max", "1", "--sweep-phi-ab", "0.25,0.75"]);
    let t = Table::parse(&stdout(&out));
    let v = t.col("sweep_value");
    let m = t.col("m_l");
    let e = t.col("E");
    let mut matched = 0;
    for i in 0..t.rows.len() {
        for j in 0..t.rows.len() {
            let same_channel = t.rows[i][1] == t.rows[j][1] && t.rows[i][3] == t.rows[j][3];
            if i != j && same_channel && ((m[i] + v[i]).abs() - (m[j] + v[j]).abs()).abs() < 1e-15 {
                assert!((e[i] - e[j]).abs() <= 1e-15, "{:?} vs {:?}", t.rows[i], t.rows[j]);
                matched += 1;
            }
        }
    }
    assert!(matched > 0);
}

#[test]
fn sweep_axis_errors() {
    assert_eq!(abcpdm(&["sweep", "--z-alpha", "0.5", "--sweep-kappa", "0,0.1", "--sweep-z-alpha", "0.1,0.2"]).status.code(), Some(2));
    assert_eq!(abcpdm(&["sweep", "--z-alpha", "0.5", "--sweep-kappa", "0.1"]).status.code(), Some(2));
    // a Zα sweep needs no base coupling
    assert_eq!(abcpdm(&["sweep", "--phi-ab", "0.25", "--sweep-z-alpha", "0.3:0.6:4"]).status.code(), Some(0));
}

#[test]
fn help_and_bad_flags() {
    assert_eq!(abcpdm(&["--help"]).status.code(), Some(0));
    assert_eq!(abcpdm(&["spectrum", "--bogus"]).status.code(), Some(2));
    assert_eq!(abcpdm(&[]).status.code(), Some(2));
}
