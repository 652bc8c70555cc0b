//! Command-line front end: configuration, sweeps, CSV/JSON export and plots.

pub mod config;
pub mod error;
pub mod output;
pub mod plot;
pub mod report;
pub mod sweep;
pub mod verify;

use std::path::{Path, PathBuf};

use korn::geometry::{BcMode, CurvatureClass};
use korn::scaling::{classify_regime, Regime, SweepRow};
use korn::solver::{estimate_from_forms, AssemblyInfo, TensorBasis};
use serde::Serialize;

pub use config::{RunConfig, Stamp};
pub use error::{CliError, Result, Status};
pub use plot::{emit_plot, render_svg, Guide};
pub use report::{build_report, Report};

/// Output files of one command.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Artifacts {
    pub csv: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    pub json: Vec<PathBuf>,
}

/// Rows, their report and the files written.
#[derive(Clone, Debug)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub report: Report,
    pub artifacts: Artifacts,
    pub non_converged: usize,
}

/// Reads `KORN_THREADS` and sizes the global thread pool.
pub fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var("KORN_THREADS") else { return Ok(()) };
    let n: usize = v.trim().parse().map_err(|_| CliError::config(format!("KORN_THREADS: not a count: {v:?}")))?;
    if n == 0 {
        return Err(CliError::config("KORN_THREADS: must be positive"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::config(format!("KORN_THREADS: {e}")))
}

fn class_of(config: &RunConfig) -> Result<CurvatureClass> {
    let (h, e) = config.points()[0];
    Ok(config.shell(h, e)?.patch.curvature_class())
}

/// Writes CSV, report JSON and, when the rows form one fitted group, the SVG.
fn finish_sweep(config: &RunConfig, out: &Path, name: &str, rows: Vec<SweepRow>) -> Result<SweepOutcome> {
    let stamp = config.stamp();
    let class = class_of(config)?;
    let report = build_report(&rows, &stamp, config.report.eps0, |_| Some(class));
    let mut artifacts = Artifacts::default();
    let csv = out.join(format!("{name}.csv"));
    output::write_csv(&csv, &rows, &stamp)?;
    artifacts.csv = Some(csv);
    if let [group] = report.groups.as_slice() {
        if let Some(fit) = &group.fit {
            let fitted: Vec<SweepRow> = rows.iter().filter(|r| r.resolved).cloned().collect();
            let guide = report::guide_for(group, &fitted);
            let title = format!("{name}: {} {}, {}", group.source, group.patch, group.bc_mode);
            let svg = out.join(format!("{name}.svg"));
            emit_plot(&fitted, fit, guide.as_ref(), &title, &stamp, &svg)?;
            artifacts.svg = Some(svg);
        }
    }
    let json = out.join(format!("{name}_report.json"));
    output::write_json(&json, &report)?;
    artifacts.json.push(json);
    Ok(SweepOutcome { rows, report, artifacts, non_converged: 0 })
}

/// `korn ansatz`: trial-field ratios over the grid.
pub fn run_ansatz(config: &RunConfig, out: &Path) -> Result<SweepOutcome> {
    let rows = sweep::ansatz_rows(config)?;
    finish_sweep(config, out, "ansatz", rows)
}

/// `korn sweep`: discrete optimal constants over the grid.
pub fn run_sweep(config: &RunConfig, out: &Path, allow_unresolved: bool) -> Result<SweepOutcome> {
    let points = sweep::solver_points(config, allow_unresolved)?;
    let meta: Vec<sweep::RowMeta> = points.iter().map(|p| p.meta()).collect();
    let non_converged = points.iter().filter(|p| !p.estimate.converged).count();
    let rows = points.into_iter().map(|p| p.row).collect();
    let mut outcome = finish_sweep(config, out, "sweep", rows)?;
    let path = out.join("sweep_rows.json");
    output::write_json(&path, &RowsFile { config_hash: outcome.report.config_hash.clone(), seed: config.seed, rows: meta })?;
    outcome.artifacts.json.push(path);
    outcome.non_converged = non_converged;
    Ok(outcome)
}

#[derive(Serialize, serde::Deserialize)]
struct RowsFile {
    config_hash: String,
    seed: u64,
    rows: Vec<sweep::RowMeta>,
}

/// `korn report`: fits and theory comparison from an existing sweep CSV. A
/// `<stem>_rows.json` file next to the CSV supplies the resolution flags.
pub fn run_report(input: &Path, config: Option<&RunConfig>, out: &Path) -> Result<(Report, PathBuf)> {
    let (stamp, mut rows) = output::read_csv(input)?;
    if rows.is_empty() {
        return Err(CliError::check(format!("{}: no rows", input.display())));
    }
    let stamp = stamp.or_else(|| config.map(RunConfig::stamp)).unwrap_or(Stamp { config_hash: "unknown".into(), seed: 0 });
    let stem = input.file_stem().and_then(|s| s.to_str()).unwrap_or("sweep");
    let side = input.with_file_name(format!("{stem}_rows.json"));
    if let Ok(text) = std::fs::read_to_string(&side) {
        let file: RowsFile = serde_json::from_str(&text)?;
        for r in rows.iter_mut() {
            if let Some(m) = file.rows.iter().find(|m| m.h == r.h && m.epsilon == r.epsilon) {
                r.resolved = m.resolved;
            }
        }
    }
    let class = match config {
        Some(c) => Some(class_of(c)?),
        None => None,
    };
    let eps0 = config.and_then(|c| c.report.eps0);
    let report = build_report(&rows, &stamp, eps0, |label| class.or_else(|| config::class_of_label(label)));
    let path = out.join(format!("{stem}_fit.json"));
    output::write_json(&path, &report)?;
    Ok((report, path))
}

#[derive(Clone, Debug, Serialize)]
pub struct KornReport {
    pub config_hash: String,
    pub seed: u64,
    pub patch: String,
    pub class: CurvatureClass,
    pub h: f64,
    pub epsilon: f64,
    pub regime: Regime,
    pub bc_mode: BcMode,
    #[serde(rename = "C1")]
    pub c1: f64,
    pub lambda_min: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub resolved: bool,
    pub required_n_theta: usize,
    pub basis: TensorBasis,
    pub quadrature_change: f64,
    pub assembly: AssemblyInfo,
    pub solve_seconds: f64,
}

/// `korn korn`: one eigensolve at the first grid point. With `dump`, the
/// assembled matrices are written there as `row col value` triplets; in free
/// mode `g.txt` holds the form before deflation.
pub fn run_korn(config: &RunConfig, out: &Path, allow_unresolved: bool, dump: Option<&Path>) -> Result<(KornReport, PathBuf)> {
    let (h, e) = config.points()[0];
    let single = RunConfig { thickness: config::ThicknessGrid::List { values: vec![h] }, width: config::WidthPath::Fixed { value: e }, ..config.clone() };
    sweep::check_resolution(&single, allow_unresolved)?;
    let shell = config.shell(h, e)?;
    let forms = sweep::assemble_point(config, h, e)?;
    if let Some(dir) = dump {
        std::fs::create_dir_all(dir)?;
        let mut mats = vec![("s.txt", &forms.s), ("g.txt", &forms.g)];
        if let Some(m) = &forms.mass {
            mats.push(("mass.txt", m));
        }
        for (name, m) in mats {
            let file = std::fs::File::create(dir.join(name))?;
            m.write_triplets(std::io::BufWriter::new(file))?;
        }
    }
    let est = estimate_from_forms(&shell, &forms, &config.solver_config())?;
    let stamp = config.stamp();
    let report = KornReport {
        config_hash: stamp.config_hash,
        seed: stamp.seed,
        patch: config.patch.label(),
        class: shell.patch.curvature_class(),
        h,
        epsilon: e,
        regime: classify_regime(h, e)?,
        bc_mode: shell.bc,
        c1: est.c1,
        lambda_min: est.lambda_min,
        residual: est.residual,
        iterations: est.iterations,
        converged: est.converged,
        resolved: est.resolved,
        required_n_theta: est.required_n_theta,
        basis: est.basis,
        quadrature_change: est.quadrature_change,
        assembly: est.assembly,
        solve_seconds: est.solve_seconds,
    };
    let path = out.join("korn.json");
    output::write_json(&path, &report)?;
    Ok((report, path))
}

/// `korn verify`: geometry and identity suites on the configured patch.
pub fn run_verify(config: &RunConfig, out: &Path) -> Result<(verify::VerifyReport, PathBuf)> {
    let report = verify::run_verify(config, &config.stamp())?;
    let path = out.join("verify.json");
    output::write_json(&path, &report)?;
    Ok((report, path))
}
