//! The `cosserat` command line: `energy`, `verify`, `thinlimit` and
//! `report-schema`.
//!
//! Exit codes: 0 success, 1 verification or runtime failure, 2
//! configuration error.

pub mod config;
pub mod report;
pub mod verify;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::curvature::nye_gamma_to_alpha;
use crate::energy::{w_curv_alpha, w_curv_devsym, w_curv_gamma, w_mp, w_mp_lame, EnergyBreakdown};
use crate::geometry::SurfaceFrame;
use crate::homogenization::{
    optimal_curvature_completion, optimal_director, strain_assembly, w_curv_hom, w_curv_hom_plate, w_mp_hom,
    MidsurfaceMap,
};
use crate::tensor::{Mat3, Vec3};
use crate::thin_limit::{convergence_study, family, study_params};

use config::{rows, ConfigError, Overrides, RunConfig, SampleSpec};
use report::{Record, Report, Table, Value};
use verify::Verifier;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

/// Configuration and report reference, printed by `report-schema`.
pub const SCHEMA: &str = include_str!("../../../../book/src/schema.md");

#[derive(Debug, Parser)]
#[command(name = "cosserat", version, about = "Cosserat shell energies, homogenization checks and thin-limit studies")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct Common {
    /// JSON run configuration; defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory for `report.jsonl` and `tables/`.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Instances per randomized verification suite.
    #[arg(long)]
    pub instances: Option<usize>,
    /// Relative tolerance of the verification comparisons.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate energies at the configured samples.
    Energy(Common),
    /// Run the closed-form versus oracle suites.
    Verify(Common),
    /// Thin-limit convergence studies.
    Thinlimit(Common),
    /// Print the configuration and report schema.
    ReportSchema,
}

/// Why a command stopped.
#[derive(Debug)]
pub enum Failure {
    Config(ConfigError),
    Runtime(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

fn load(c: &Common) -> Result<RunConfig, ConfigError> {
    let src = match &c.config {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?,
        None => "{}".to_string(),
    };
    RunConfig::from_json(&src, Overrides { seed: c.seed, instances: c.instances, tol: c.tol })
}

fn breakdown(r: Record, e: &EnergyBreakdown) -> Record {
    r.with("sym", e.sym_term).with("skew", e.skew_term).with("trace", e.trace_term).with("normal", e.normal_term).with("total", e.total)
}

fn vec3(v: &Vec3) -> Value {
    Value::Nums(v.iter().copied().collect())
}

fn third_column_zero(m: &Mat3, what: &str) -> Result<(), ConfigError> {
    if m.column(2).iter().any(|v| *v != 0.0) {
        return Err(ConfigError(format!("{what}: third column must be zero")));
    }
    Ok(())
}

/// Evaluates every configured energy sample.
pub fn cmd_energy(c: &RunConfig) -> Result<Report, Failure> {
    let p = c.require_material()?;
    let surface = c.require_surface()?;
    let mut rep = Report::new(c.hash(), c.seed());
    let mut table = Table::new("energy", &["sample", "quantity", "sym", "skew", "trace", "normal", "total"]);
    let mut emit = |rep: &mut Report, sample: &str, quantity: &str, e: &EnergyBreakdown| {
        rep.push(breakdown(Record::new("energy").with("sample", sample).with("quantity", quantity), e));
        table.push(vec![
            sample.into(),
            quantity.into(),
            e.sym_term.into(),
            e.skew_term.into(),
            e.trace_term.into(),
            e.normal_term.into(),
            e.total.into(),
        ]);
    };
    for (i, s) in c.energy.samples.iter().enumerate() {
        let at = |e: crate::Error| ConfigError(format!("energy.samples[{i}]: {e}"));
        match s {
            SampleSpec::Bulk { name, u, gamma } => {
                let label = name.clone().unwrap_or_else(|| format!("sample{i}"));
                let (u, g) = (rows(u), rows(gamma));
                emit(&mut rep, &label, "w_mp", &w_mp(&u, &p));
                emit(&mut rep, &label, "w_mp_lame", &w_mp_lame(&u, &p));
                emit(&mut rep, &label, "w_curv_gamma", &w_curv_gamma(&g, &p));
                emit(&mut rep, &label, "w_curv_alpha", &w_curv_alpha(&nye_gamma_to_alpha(&g), &p));
                emit(&mut rep, &label, "w_curv_devsym", &w_curv_devsym(&g, &p));
            }
            SampleSpec::Plate { name, membrane, curvature } => {
                let label = name.clone().unwrap_or_else(|| format!("sample{i}"));
                let (e, k) = (rows(membrane), rows(curvature));
                third_column_zero(&e, &format!("energy.samples[{i}].membrane"))?;
                third_column_zero(&k, &format!("energy.samples[{i}].curvature"))?;
                let flat = SurfaceFrame::flat();
                emit(&mut rep, &label, "w_mp_hom", &w_mp_hom(&e, &flat, &p));
                emit(&mut rep, &label, "w_curv_hom_plate", &w_curv_hom_plate(&k, &p).map_err(at)?);
                rep.push(
                    Record::new("completion")
                        .with("sample", label.as_str())
                        .with("director", vec3(&optimal_director(&e, &Mat3::identity(), &flat, &p)))
                        .with("curvature", vec3(&optimal_curvature_completion(&k, &flat, &p))),
                );
            }
            SampleSpec::Shell { name, point, rotation, midsurface } => {
                let label = name.clone().unwrap_or_else(|| format!("sample{i}"));
                let field = c.fields[rotation].build().map_err(at)?;
                let frame = surface.frame_at(*point).map_err(at)?;
                let m = MidsurfaceMap::SurfacePlusAffine {
                    surface: surface.clone(),
                    offset: Vec3::from(midsurface.offset),
                    matrix: midsurface.matrix(),
                };
                let (mem, bend) = strain_assembly(&m, &field, &frame).map_err(at)?;
                let q = field.eval(&Vec3::new(point[0], point[1], 0.0)).map_err(at)?;
                emit(&mut rep, &label, "w_mp_hom", &w_mp_hom(&mem.e, &frame, &p));
                emit(&mut rep, &label, "w_curv_hom", &w_curv_hom(&bend.k, &frame, &p));
                rep.push(
                    Record::new("completion")
                        .with("sample", label.as_str())
                        .with("director", vec3(&optimal_director(&mem.e, &q, &frame, &p)))
                        .with("curvature", vec3(&optimal_curvature_completion(&bend.k, &frame, &p)))
                        .with("area_element", frame.dtheta0.determinant()),
                );
            }
        }
    }
    rep.tables.push(table);
    Ok(rep)
}

/// Runs all verification suites; the boolean is the overall verdict.
pub fn cmd_verify(c: &RunConfig) -> Result<(Report, bool), Failure> {
    let checks = Verifier::from_config(c).run_all();
    let mut rep = Report::new(c.hash(), c.seed());
    for ch in &checks {
        rep.push(ch.record());
    }
    let failed = checks.iter().filter(|ch| !ch.pass).count();
    rep.push(Record::new("summary").with("checks", checks.len()).with("failed", failed).with("pass", failed == 0));
    rep.tables.push(verify::table(&checks));
    Ok((rep, failed == 0))
}

/// Convergence studies for the configured families.
pub fn cmd_thinlimit(c: &RunConfig) -> Result<Report, Failure> {
    let p = c.material.unwrap_or_else(study_params);
    let t = &c.thinlimit;
    let mut rep = Report::new(c.hash(), c.seed());
    for name in &t.families {
        let problem = family(name).ok_or_else(|| ConfigError(format!("thinlimit.families: unknown family `{name}`")))?;
        let ansatz = problem.ansatz(p, t.h_list.clone(), t.corrected);
        let study = convergence_study(&ansatz, &problem, &p, &t.quadrature)
            .map_err(|e| Failure::Runtime(format!("{name}: {e}")))?;
        let mut table = Table::new(&format!("thinlimit_{name}"), &["h", "energy", "limit", "abs_err", "rate"]);
        for r in &study.rows {
            rep.push(
                Record::new("thinlimit_row")
                    .with("family", name.as_str())
                    .with("h", r.h)
                    .with("energy", r.energy)
                    .with("limit", r.limit)
                    .with("abs_err", r.abs_err)
                    .with("rate", r.rate),
            );
            table.push(vec![r.h.into(), r.energy.into(), r.limit.into(), r.abs_err.into(), r.rate.into()]);
        }
        rep.push(
            Record::new("thinlimit_summary")
                .with("family", name.as_str())
                .with("corrected", t.corrected)
                .with("slope", study.slope)
                .with("monotone", study.monotone)
                .with("strictly_decreasing", study.strictly_decreasing)
                .with("non_monotone", !study.monotone),
        );
        rep.tables.push(table);
    }
    Ok(rep)
}

fn write(rep: &Report, out: &Path) -> Result<(), Failure> {
    rep.write(out).map_err(|e| Failure::Runtime(format!("cannot write report to {}: {e}", out.display())))
}

fn status(r: Result<i32, Failure>) -> i32 {
    match r {
        Ok(code) => code,
        Err(Failure::Config(e)) => {
            eprintln!("configuration error: {e}");
            EXIT_CONFIG
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            EXIT_FAILURE
        }
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    status(dispatch(cli.command))
}

fn dispatch(cmd: Command) -> Result<i32, Failure> {
    match cmd {
        Command::ReportSchema => {
            print!("{SCHEMA}");
            Ok(EXIT_OK)
        }
        Command::Energy(common) => {
            let c = load(&common)?;
            let rep = cmd_energy(&c)?;
            write(&rep, &common.out)?;
            println!("energy: {} records written to {}", rep.records.len(), common.out.display());
            Ok(EXIT_OK)
        }
        Command::Verify(common) => {
            let c = load(&common)?;
            let started = std::time::Instant::now();
            let (rep, ok) = cmd_verify(&c)?;
            write(&rep, &common.out)?;
            for r in &rep.records {
                if let (Some(Value::Str(s)), Some(Value::Str(k)), Some(Value::Bool(pass))) =
                    (r.get("suite"), r.get("check"), r.get("pass"))
                {
                    println!("{} {s}/{k}", if *pass { "PASS" } else { "FAIL" });
                }
            }
            eprintln!("verify finished in {:.2?}", started.elapsed());
            Ok(if ok { EXIT_OK } else { EXIT_FAILURE })
        }
        Command::Thinlimit(common) => {
            let c = load(&common)?;
            let rep = cmd_thinlimit(&c)?;
            write(&rep, &common.out)?;
            for r in &rep.records {
                if let (Some(Value::Str(f)), Some(slope), Some(Value::Bool(mono))) =
                    (r.get("family"), r.get("slope"), r.get("monotone"))
                {
                    let slope = match slope {
                        Value::Num(s) => format!("{s:.4}"),
                        _ => "n/a".into(),
                    };
                    println!("{f}: slope {slope}, monotone {mono}");
                }
            }
            Ok(EXIT_OK)
        }
    }
}
