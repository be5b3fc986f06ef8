//! Command entry points behind the `bernloc` binary.
//!
//! Every command returns a process exit code: 0 success (confidence
//! termination for `run`), 1 usage or configuration error, 2 timeout
//! termination, 3 internal fault. Files are written to a temporary name and
//! renamed into place, so a failed command never leaves a half-written
//! artifact behind.
//!
//! A run directory holds:
//!
//! ```text
//! config.txt        canonical config echo
//! measurements.csv  t, range, true_range, veh_x, veh_y
//! estimates.csv     t, xhat, yhat, err, residual_rms, sigma_x, sigma_y
//! trajectory.csv    t, x, y, vx, vy
//! plans.csv         one row per trajectory segment, control points flattened
//! density.csv       t, kind, axis, j, cdf_coeff (replan snapshots and final fit)
//! summary.txt       key = value, including config_hash
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::bernstein::BernsteinPoly;
use crate::config::{config_hash, parse_config, to_config_string};
use crate::error::{Error, Result};
use crate::estimator::{Axis, DensityModel};
use crate::mission::{self, ComparisonSummary, MissionConfig, MissionLog, Termination, DENSITY_GRID};
use crate::Vec2;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_TIMEOUT: i32 = 2;
pub const EXIT_FAULT: i32 = 3;

pub const RUN_ARTIFACTS: [&str; 7] =
    ["config.txt", "measurements.csv", "estimates.csv", "trajectory.csv", "plans.csv", "density.csv", "summary.txt"];

/// Files emitted by [`cmd_run`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunArtifacts {
    pub config: PathBuf,
    pub measurements: PathBuf,
    pub estimates: PathBuf,
    pub trajectory: PathBuf,
    pub plans: PathBuf,
    pub density: PathBuf,
    pub summary: PathBuf,
}

impl RunArtifacts {
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            config: dir.join("config.txt"),
            measurements: dir.join("measurements.csv"),
            estimates: dir.join("estimates.csv"),
            trajectory: dir.join("trajectory.csv"),
            plans: dir.join("plans.csv"),
            density: dir.join("density.csv"),
            summary: dir.join("summary.txt"),
        }
    }

    pub fn all(&self) -> [&Path; 7] {
        [&self.config, &self.measurements, &self.estimates, &self.trajectory, &self.plans, &self.density, &self.summary]
    }
}

/// Plot-ready files emitted by [`cmd_plotdata`].
pub const PLOT_FILES: [&str; 3] = ["path.dat", "error.dat", "density.dat"];

enum Failure {
    Usage(String),
    Fault(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::ConfigLine { .. } | Error::MissingArtifact(_) | Error::MalformedArtifact { .. } => {
                Failure::Usage(e.to_string())
            }
            other => Failure::Fault(other.to_string()),
        }
    }
}

fn report(result: std::result::Result<i32, Failure>) -> i32 {
    match result {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Fault(msg)) => {
            eprintln!("internal fault: {msg}");
            EXIT_FAULT
        }
    }
}

/// Writes `contents` next to `path` and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("artifact");
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

fn csv_bytes<I>(header: &[&str], rows: I) -> Result<Vec<u8>>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(&row).map_err(io)?;
    }
    w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
}

fn num(x: f64) -> String {
    x.to_string()
}

fn load_config(path: &Path) -> std::result::Result<MissionConfig, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn ensure_dir(dir: &Path) -> std::result::Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Usage(format!("cannot create {}: {e}", dir.display())))
}

fn plan_header(degree: usize) -> Vec<String> {
    let mut h: Vec<String> = ["t_start", "tf", "time", "effort", "terminal", "information", "objective", "converged", "planner_fault", "initializer"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for j in 0..=degree {
        h.push(format!("c{j}_x"));
        h.push(format!("c{j}_y"));
    }
    h
}

fn density_rows(t: f64, kind: &str, d: &DensityModel, rows: &mut Vec<Vec<String>>) {
    for axis in Axis::BOTH {
        for (j, c) in d.cdf(axis).flat_coeffs().iter().enumerate() {
            rows.push(vec![num(t), kind.to_string(), axis.as_str().to_string(), j.to_string(), num(*c)]);
        }
    }
}

fn summary_text(config: &MissionConfig, log: &MissionLog) -> String {
    let mut s = String::new();
    let mut put = |k: &str, v: String| {
        let _ = writeln!(s, "{k} = {v}");
    };
    put("config_hash", config_hash(config));
    put("rng_seed", config.rng_seed.to_string());
    put("fim_enabled", config.fim_enabled.to_string());
    put("termination", log.termination.as_str().to_string());
    put("termination_time", num(log.termination_time));
    put("final_error", num(log.final_error));
    put("time_averaged_error", num(log.time_averaged_error()));
    if let Some(last) = log.estimates.last() {
        put("final_xhat", num(last.estimate.p_hat.x));
        put("final_yhat", num(last.estimate.p_hat.y));
        put("final_sigma_x", num(last.sigma.x));
        put("final_sigma_y", num(last.sigma.y));
        put("final_raw_sigma_x", num(last.raw_sigma.x));
        put("final_raw_sigma_y", num(last.raw_sigma.y));
    }
    put("measurements", log.measurements.len().to_string());
    put("plans", log.plans.len().to_string());
    put("planner_faults", log.planner_faults.to_string());
    put("estimator_failures", log.estimator_failures.to_string());
    put("artifacts", RUN_ARTIFACTS.join(", "));
    s
}

/// Serializes a finished mission into `dir`.
pub fn write_run(dir: &Path, config: &MissionConfig, log: &MissionLog) -> Result<RunArtifacts> {
    fs::create_dir_all(dir)?;
    let out = RunArtifacts::in_dir(dir);

    write_atomic(&out.config, to_config_string(config).as_bytes())?;

    let rows = log.measurements.iter().map(|m| {
        vec![num(m.t), num(m.range), num(m.true_range), num(m.vehicle_pos.x), num(m.vehicle_pos.y)]
    });
    write_atomic(&out.measurements, &csv_bytes(&["t", "range", "true_range", "veh_x", "veh_y"], rows)?)?;

    let rows = log.estimates.iter().map(|e| {
        vec![
            num(e.estimate.t),
            num(e.estimate.p_hat.x),
            num(e.estimate.p_hat.y),
            num(e.err),
            num(e.estimate.residual_rms),
            num(e.sigma.x),
            num(e.sigma.y),
        ]
    });
    write_atomic(&out.estimates, &csv_bytes(&["t", "xhat", "yhat", "err", "residual_rms", "sigma_x", "sigma_y"], rows)?)?;

    let rows = log.vehicle.iter().map(|v| vec![num(v.t), num(v.pos.x), num(v.pos.y), num(v.vel.x), num(v.vel.y)]);
    write_atomic(&out.trajectory, &csv_bytes(&["t", "x", "y", "vx", "vy"], rows)?)?;

    let header = plan_header(config.degree);
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = log.plans.iter().map(|p| {
        let mut row = vec![
            num(p.t_start),
            num(p.poly.tf()),
            num(p.cost.time),
            num(p.cost.effort),
            num(p.cost.terminal),
            num(p.cost.information),
            num(p.objective),
            p.converged.to_string(),
            p.planner_fault.to_string(),
            p.initializer.to_string(),
        ];
        row.extend(p.poly.flat_coeffs().iter().map(|c| num(*c)));
        row
    });
    write_atomic(&out.plans, &csv_bytes(&header, rows)?)?;

    let mut rows = Vec::new();
    for snap in &log.snapshots {
        density_rows(snap.t, "snapshot", &snap.density, &mut rows);
    }
    if let Some(d) = &log.final_density {
        density_rows(log.termination_time, "final", d, &mut rows);
    }
    write_atomic(&out.density, &csv_bytes(&["t", "kind", "axis", "j", "cdf_coeff"], rows)?)?;

    write_atomic(&out.summary, summary_text(config, log).as_bytes())?;
    Ok(out)
}

fn termination_code(t: Termination) -> i32 {
    match t {
        Termination::Confidence => EXIT_OK,
        Termination::Timeout => EXIT_TIMEOUT,
    }
}

/// Runs one mission from a config file and writes its artifacts.
pub fn cmd_run(config_path: &Path, out_dir: &Path) -> i32 {
    report((|| {
        let config = load_config(config_path)?;
        ensure_dir(out_dir)?;
        let log = mission::run(&config)?;
        write_run(out_dir, &config, &log)?;
        println!(
            "{}: {} at t = {} s, final error {:.3} m",
            out_dir.display(),
            log.termination.as_str(),
            log.termination_time,
            log.final_error
        );
        Ok(termination_code(log.termination))
    })())
}

/// Parses a seed list such as `0..20`, `1,2,7` or `0..3,10`.
pub fn parse_seeds(text: &str) -> std::result::Result<Vec<u64>, String> {
    let mut seeds = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let a: u64 = a.trim().parse().map_err(|_| format!("bad seed range `{part}`"))?;
            let b: u64 = b.trim().parse().map_err(|_| format!("bad seed range `{part}`"))?;
            if b <= a {
                return Err(format!("empty seed range `{part}`"));
            }
            seeds.extend(a..b);
        } else {
            seeds.push(part.parse().map_err(|_| format!("bad seed `{part}`"))?);
        }
    }
    if seeds.is_empty() {
        return Err("no seeds given".into());
    }
    Ok(seeds)
}

pub fn run_dir_name(seed: u64, fim: bool) -> String {
    format!("seed{seed}_{}", if fim { "fim" } else { "nofim" })
}

fn density_curve_rows(seed: u64, mode: &str, kind: &str, t: f64, d: &DensityModel, rows: &mut Vec<Vec<String>>) -> Result<()> {
    for i in 0..DENSITY_GRID {
        let z = d.zeta_min + (d.zeta_max - d.zeta_min) * i as f64 / (DENSITY_GRID - 1) as f64;
        rows.push(vec![
            seed.to_string(),
            mode.to_string(),
            kind.to_string(),
            num(t),
            num(z),
            num(d.cdf_x.eval_scalar(z)?),
            num(d.pdf_x.eval_scalar(z)?),
            num(d.cdf_y.eval_scalar(z)?),
            num(d.pdf_y.eval_scalar(z)?),
        ]);
    }
    Ok(())
}

fn comparison_text(config: &MissionConfig, s: &ComparisonSummary) -> String {
    let mut out = String::new();
    let mut put = |k: &str, v: String| {
        let _ = writeln!(out, "{k} = {v}");
    };
    put("config_hash", config_hash(config));
    put("seeds", s.runs.iter().map(|r| r.seed.to_string()).collect::<Vec<_>>().join(", "));
    put("median_final_error_fim", num(s.median_final_error_fim));
    put("median_final_error_nofim", num(s.median_final_error_nofim));
    put("median_avg_error_fim", num(s.median_avg_error_fim));
    put("median_avg_error_nofim", num(s.median_avg_error_nofim));
    put("confidence_fraction_fim", num(s.confidence_fraction_fim));
    put("confidence_fraction_nofim", num(s.confidence_fraction_nofim));
    put("peak_win_fraction", num(s.peak_win_fraction));
    for r in &s.runs {
        let k = |name: &str| format!("seed{}.{name}", r.seed);
        put(&k("fim.termination"), r.with_fim.termination.as_str().into());
        put(&k("fim.termination_time"), num(r.with_fim.termination_time));
        put(&k("fim.final_error"), num(r.with_fim.final_error));
        put(&k("fim.avg_error"), num(r.with_fim.time_averaged_error()));
        put(&k("nofim.termination"), r.without_fim.termination.as_str().into());
        put(&k("nofim.termination_time"), num(r.without_fim.termination_time));
        put(&k("nofim.final_error"), num(r.without_fim.final_error));
        put(&k("nofim.avg_error"), num(r.without_fim.time_averaged_error()));
        put(&k("peak_snapshot_t"), num(r.common_snapshot_t));
        put(&k("peak_fim"), num(r.peak_with_fim));
        put(&k("peak_nofim"), num(r.peak_without_fim));
    }
    out
}

/// Runs every seed in both modes and writes the paired run directories,
/// `comparison.txt`, `error_curves.csv` and `densities.csv`.
pub fn cmd_compare(config_path: &Path, seeds: &[u64], out_dir: &Path) -> i32 {
    report((|| {
        let config = load_config(config_path)?;
        if seeds.is_empty() {
            return Err(Failure::Usage("no seeds given".into()));
        }
        ensure_dir(out_dir)?;
        let summary = mission::compare_modes(&config, seeds)?;

        let mut curves = Vec::new();
        let mut densities = Vec::new();
        for r in &summary.runs {
            for (fim, log) in [(true, &r.with_fim), (false, &r.without_fim)] {
                let cfg = MissionConfig { rng_seed: r.seed, fim_enabled: fim, ..config.clone() };
                write_run(&out_dir.join(run_dir_name(r.seed, fim)), &cfg, log)?;
                let mode = if fim { "fim" } else { "nofim" };
                for e in &log.estimates {
                    curves.push(vec![r.seed.to_string(), mode.to_string(), num(e.estimate.t), num(e.err)]);
                }
                if let Some(d) = &log.final_density {
                    density_curve_rows(r.seed, mode, "final", log.termination_time, d, &mut densities)?;
                }
                let common = log.snapshots.iter().find(|s| (s.t - r.common_snapshot_t).abs() < 1e-9);
                if let Some(s) = common {
                    density_curve_rows(r.seed, mode, "common", s.t, &s.density, &mut densities)?;
                }
            }
        }
        write_atomic(&out_dir.join("error_curves.csv"), &csv_bytes(&["seed", "mode", "t", "err"], curves)?)?;
        write_atomic(
            &out_dir.join("densities.csv"),
            &csv_bytes(&["seed", "mode", "kind", "t", "zeta", "cdf_x", "pdf_x", "cdf_y", "pdf_y"], densities)?,
        )?;
        write_atomic(&out_dir.join("comparison.txt"), comparison_text(&config, &summary).as_bytes())?;
        println!(
            "{} seeds: median time-averaged error {:.3} m with information term, {:.3} m without; confidence {:.0}% / {:.0}%",
            seeds.len(),
            summary.median_avg_error_fim,
            summary.median_avg_error_nofim,
            100.0 * summary.confidence_fraction_fim,
            100.0 * summary.confidence_fraction_nofim
        );
        Ok(EXIT_OK)
    })())
}

type Table = Vec<Vec<f64>>;

/// Reads a numeric CSV, checking its header.
fn read_numeric_csv(path: &Path, header: &[&str]) -> Result<Table> {
    let malformed = |msg: String| Error::MalformedArtifact { path: path.to_path_buf(), msg };
    if !path.is_file() {
        return Err(Error::MissingArtifact(path.to_path_buf()));
    }
    let mut r = csv::Reader::from_path(path).map_err(|e| malformed(e.to_string()))?;
    let found: Vec<String> = r.headers().map_err(|e| malformed(e.to_string()))?.iter().map(str::to_string).collect();
    if found != header {
        return Err(malformed(format!("expected columns {header:?}, found {found:?}")));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| malformed(e.to_string()))?;
        let row = rec.iter().map(|v| v.parse::<f64>().map_err(|_| malformed(format!("non-numeric value `{v}`")))).collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// Final density fit stored in a run's `density.csv`.
pub fn read_final_density(path: &Path, zeta_min: f64, zeta_max: f64) -> Result<DensityModel> {
    let malformed = |msg: String| Error::MalformedArtifact { path: path.to_path_buf(), msg };
    if !path.is_file() {
        return Err(Error::MissingArtifact(path.to_path_buf()));
    }
    let mut r = csv::Reader::from_path(path).map_err(|e| malformed(e.to_string()))?;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for rec in r.records() {
        let rec = rec.map_err(|e| malformed(e.to_string()))?;
        if rec.len() != 5 {
            return Err(malformed("expected 5 columns".into()));
        }
        if &rec[1] != "final" {
            continue;
        }
        let c: f64 = rec[4].parse().map_err(|_| malformed(format!("non-numeric value `{}`", &rec[4])))?;
        match &rec[2] {
            "x" => xs.push(c),
            "y" => ys.push(c),
            other => return Err(malformed(format!("unknown axis `{other}`"))),
        }
    }
    if xs.is_empty() || xs.len() != ys.len() {
        return Err(malformed("no final density".into()));
    }
    let m = xs.len() - 1;
    let cdf_x = BernsteinPoly::scalar(xs, zeta_min, zeta_max)?;
    let cdf_y = BernsteinPoly::scalar(ys, zeta_min, zeta_max)?;
    Ok(DensityModel { pdf_x: cdf_x.derivative(), pdf_y: cdf_y.derivative(), cdf_x, cdf_y, m, n: 0, zeta_min, zeta_max })
}

/// Writes `path.dat`, `error.dat` and `density.dat` (whitespace-separated,
/// `#` header rows) into `run_dir/plot/`.
pub fn cmd_plotdata(run_dir: &Path) -> i32 {
    report((|| {
        let files = RunArtifacts::in_dir(run_dir);
        if !files.config.is_file() {
            return Err(Error::MissingArtifact(files.config.clone()).into());
        }
        let config = load_config(&files.config)?;
        let traj = read_numeric_csv(&files.trajectory, &["t", "x", "y", "vx", "vy"])?;
        let est = read_numeric_csv(&files.estimates, &["t", "xhat", "yhat", "err", "residual_rms", "sigma_x", "sigma_y"])?;
        let density = read_final_density(&files.density, config.zeta_min, config.zeta_max)?;
        let target: Vec2 = config.target_pos;

        let plot_dir = run_dir.join("plot");
        ensure_dir(&plot_dir)?;

        let mut s = String::from("# vehicle path and true target\n# t x y target_x target_y\n");
        for r in &traj {
            let _ = writeln!(s, "{} {} {} {} {}", r[0], r[1], r[2], target.x, target.y);
        }
        write_atomic(&plot_dir.join("path.dat"), s.as_bytes())?;

        let mut s = String::from("# estimation error over time\n# t err sigma_x sigma_y\n");
        for r in &est {
            let _ = writeln!(s, "{} {} {} {}", r[0], r[3], r[5], r[6]);
        }
        write_atomic(&plot_dir.join("error.dat"), s.as_bytes())?;

        let mut s = format!(
            "# final density fit, m = {}; target at x = {}, y = {}\n# zeta cdf_x pdf_x cdf_y pdf_y target_x target_y\n",
            density.m, target.x, target.y
        );
        for i in 0..DENSITY_GRID {
            let z = config.zeta_min + (config.zeta_max - config.zeta_min) * i as f64 / (DENSITY_GRID - 1) as f64;
            let _ = writeln!(
                s,
                "{} {} {} {} {} {} {}",
                z,
                density.cdf_x.eval_scalar(z)?,
                density.pdf_x.eval_scalar(z)?,
                density.cdf_y.eval_scalar(z)?,
                density.pdf_y.eval_scalar(z)?,
                target.x,
                target.y
            );
        }
        write_atomic(&plot_dir.join("density.dat"), s.as_bytes())?;
        println!("wrote {}", plot_dir.display());
        Ok(EXIT_OK)
    })())
}
