//! Command-line front end: one subcommand per analytic or Monte Carlo
//! operation, CSV on stdout or `--out`, and a JSON `meta` sidecar.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::acceptance;
use crate::density::{DensityGrid, DEFAULT_GRID_POINTS};
use crate::error::{Error, Result};
use crate::fluctuation::{self, Estimate};
use crate::model::{SizeDist, SpectrallyPositiveModel, SubordinatorModel};
use crate::path_sim::{ballot_mc, kendall_mc, McEstimate};
use crate::subordinator::{simulate_time_change, solve_phi_y, time_changed_density, TimeChangeSpec, DEFAULT_TRUNCATION};

/// Seed used when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug, Parser)]
#[command(name = "levyflux", version, about = "Fluctuation identities of spectrally positive Lévy processes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct Output {
    /// CSV destination; a `<out>.meta.json` sidecar is written next to it. Defaults to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Clone)]
pub struct ModelArg {
    /// Model JSON file.
    #[arg(long)]
    pub model: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Density p_t(x) on a grid.
    Density {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long)]
        t: f64,
        #[arg(long, allow_hyphen_values = true)]
        xmin: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        xmax: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
        n: usize,
        #[command(flatten)]
        output: Output,
    },
    /// First-passage density (x/t) p_t(−x).
    Fpt {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long, value_delimiter = ',', required = true)]
        x: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        t: Vec<f64>,
        #[command(flatten)]
        output: Output,
    },
    /// P(sup_t > x), or the joint density at z with --z.
    Sup {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long, value_delimiter = ',', required = true)]
        x: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        t: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        z: Vec<f64>,
        #[command(flatten)]
        output: Output,
    },
    /// P(inf_t < −x) by both formulas, or the joint density at z with --z.
    Inf {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long, value_delimiter = ',', required = true)]
        x: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        t: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        z: Vec<f64>,
        #[command(flatten)]
        output: Output,
    },
    /// P(sup_t = 0), or its density at z < 0 with --z.
    Atoms {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long, value_delimiter = ',', required = true)]
        t: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        z: Vec<f64>,
        #[command(flatten)]
        output: Output,
    },
    /// E e^{−λ sup_t} and E e^{λ inf_t}.
    Laplace {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long, value_delimiter = ',', required = true)]
        lam: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        t: Vec<f64>,
        #[command(flatten)]
        output: Output,
    },
    /// E sup_t^n and E (−inf_t)^n.
    Moments {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<u32>,
        #[arg(long, value_delimiter = ',', required = true)]
        t: Vec<f64>,
        #[command(flatten)]
        output: Output,
    },
    /// φ(λ, z), Φ(λ) and the residuals of the multiplicative and ODE forms.
    PhiIdentity {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long, value_delimiter = ',', required = true)]
        lam: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        z: Vec<f64>,
        #[command(flatten)]
        output: Output,
    },
    /// Monte Carlo of P(T_x = t) for uniformly shifted pinned paths.
    BallotMc {
        #[arg(long, default_value_t = 5)]
        jumps: usize,
        #[arg(long)]
        c: f64,
        #[arg(long)]
        x: f64,
        #[arg(long)]
        t: f64,
        /// Mean of the exponential jump sizes before rescaling.
        #[arg(long, default_value_t = 1.0)]
        size_mean: f64,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Monte Carlo of the first-passage cloud against (x/t) p_t(−x), per cell.
    KendallMc {
        #[command(flatten)]
        model: ModelArg,
        /// Upper end of the x axis.
        #[arg(long, default_value_t = 1.0)]
        x: f64,
        /// Upper end of the t axis.
        #[arg(long, default_value_t = 2.5)]
        t: f64,
        #[arg(long, default_value_t = 5)]
        cells: usize,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Laplace exponent of the time-changed subordinator, analytic and Monte Carlo.
    Subord {
        /// Subordinator JSON file.
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        r: Vec<f64>,
        /// One z vector per use; components separated by ':' (e.g. 1:0.5).
        #[arg(long, value_delimiter = ',', required = true)]
        z: Vec<String>,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Also write the density of Y_t (d = 1) on this many points to <out>.density.csv.
        #[arg(long)]
        density_points: Option<usize>,
        #[command(flatten)]
        output: Output,
    },
    /// Runs the acceptance criteria and prints a verdict per criterion.
    Selftest {
        #[arg(long, value_delimiter = ',')]
        criteria: Vec<u32>,
    },
}

/// Formats a computed value with 17 significant digits.
pub fn sig17(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let e = v.abs().log10().floor() as i32;
    if (-5..17).contains(&e) {
        format!("{:.*}", (16 - e) as usize, v)
    } else {
        format!("{v:.16e}")
    }
}

struct Table {
    header: Vec<&'static str>,
    body: String,
    rows: Vec<Value>,
}

impl Table {
    fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            body: String::new(),
            rows: Vec::new(),
        }
    }

    /// Inputs print as given; outputs with 17 significant digits.
    fn row(&mut self, inputs: &[f64], outputs: &[f64], meta: Value) {
        let cells: Vec<String> = inputs.iter().map(|v| format!("{v}")).chain(outputs.iter().map(|&v| sig17(v))).collect();
        let _ = writeln!(self.body, "{}", cells.join(","));
        self.rows.push(meta);
    }

    fn csv(&self) -> String {
        format!("{}\n{}", self.header.join(","), self.body)
    }
}

fn estimate_meta(e: &Estimate) -> Value {
    json!({ "abs_error": e.abs_error, "flags": e.flags.iter().map(|f| format!("{f:?}")).collect::<Vec<_>>() })
}

struct Run {
    command: &'static str,
    model_hash: Option<String>,
    seed: Option<u64>,
    extra: Value,
}

fn read_model(path: &Path) -> Result<(SpectrallyPositiveModel, String)> {
    let bytes = fs::read(path).map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| Error::InvalidModel(format!("{} is not UTF-8", path.display())))?;
    Ok((SpectrallyPositiveModel::from_json(&text)?, hash(&bytes)))
}

fn hash(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn emit(table: &Table, run: &Run, output: &Output) -> Result<()> {
    let csv = table.csv();
    match &output.out {
        None => print!("{csv}"),
        Some(path) => {
            write_file(path, &csv)?;
            let tol = fluctuation::tolerance();
            let meta = json!({
                "command": run.command,
                "model_sha256": run.model_hash,
                "seed": run.seed,
                "tolerances": { "abs": tol.abs, "rel": tol.rel, "max_intervals": tol.max_intervals },
                "rows": table.rows,
                "extra": run.extra,
                "version": env!("CARGO_PKG_VERSION"),
            });
            let text = serde_json::to_string_pretty(&meta).expect("meta serializes");
            write_file(&sidecar(path, "meta.json"), &text)?;
        }
    }
    Ok(())
}

fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".");
    name.push(suffix);
    PathBuf::from(name)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::InvalidArgument(format!("cannot write {}: {e}", path.display())))
}

fn grid2(a: &[f64], b: &[f64]) -> Vec<(f64, f64)> {
    a.iter().flat_map(|&x| b.iter().map(move |&y| (x, y))).collect()
}

fn parse_vector(text: &str) -> Result<Vec<f64>> {
    text.split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| Error::InvalidArgument(format!("bad number {p:?} in {text:?}"))))
        .collect()
}

fn mc_meta(e: &McEstimate) -> Value {
    json!({ "samples": e.samples, "std_error": e.std_error })
}

/// Runs one parsed command.
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Density { model, t, xmin, xmax, n, output } => {
            let (m, h) = read_model(&model.model)?;
            let grid = match (xmin, xmax) {
                (Some(a), Some(b)) => DensityGrid::on_range(&m, t, a, b, n)?,
                (None, None) => DensityGrid::covering(&m, t, n)?,
                _ => return Err(Error::InvalidArgument("give both --xmin and --xmax, or neither".into())),
            };
            let mut table = Table::new(&["x", "p"]);
            for (&x, &p) in grid.x_values.iter().zip(&grid.p_values) {
                table.row(&[], &[x, p], Value::Null);
            }
            table.rows.clear();
            let run = Run {
                command: "density",
                model_hash: Some(h),
                seed: None,
                extra: json!({ "t": t, "method": grid.method.as_str(), "trapezoid_mass": grid.trapezoid() }),
            };
            emit(&table, &run, &output)
        }
        Command::Fpt { model, x, t, output } => {
            let (m, h) = read_model(&model.model)?;
            let mut table = Table::new(&["x", "t", "fpt_density"]);
            for (xv, tv) in grid2(&x, &t) {
                table.row(&[xv, tv], &[fluctuation::fpt_density(&m, xv, tv)?], json!({ "abs_error": 0.0 }));
            }
            emit(&table, &Run { command: "fpt", model_hash: Some(h), seed: None, extra: Value::Null }, &output)
        }
        Command::Sup { model, x, t, z, output } => {
            let (m, h) = read_model(&model.model)?;
            let table = if z.is_empty() {
                let mut table = Table::new(&["x", "t", "sup_tail", "abs_error"]);
                for (xv, tv) in grid2(&x, &t) {
                    let e = fluctuation::sup_tail(&m, xv, tv)?;
                    table.row(&[xv, tv], &[e.value, e.abs_error], estimate_meta(&e));
                }
                table
            } else {
                let mut table = Table::new(&["x", "t", "z", "sup_joint_density", "abs_error"]);
                for (xv, tv) in grid2(&x, &t) {
                    for &zv in &z {
                        let e = fluctuation::sup_joint_density(&m, tv, xv, zv)?;
                        table.row(&[xv, tv, zv], &[e.value, e.abs_error], estimate_meta(&e));
                    }
                }
                table
            };
            emit(&table, &Run { command: "sup", model_hash: Some(h), seed: None, extra: Value::Null }, &output)
        }
        Command::Inf { model, x, t, z, output } => {
            let (m, h) = read_model(&model.model)?;
            let table = if z.is_empty() {
                let mut table = Table::new(&["x", "t", "inf_tail", "inf_tail_alt", "abs_error"]);
                for (xv, tv) in grid2(&x, &t) {
                    let a = fluctuation::inf_tail(&m, xv, tv)?;
                    let b = fluctuation::inf_tail_alt(&m, xv, tv)?;
                    let err = a.abs_error.max(b.abs_error);
                    table.row(&[xv, tv], &[a.value, b.value, err], json!([estimate_meta(&a), estimate_meta(&b)]));
                }
                table
            } else {
                let mut table = Table::new(&["x", "t", "z", "inf_joint_density", "abs_error"]);
                for (xv, tv) in grid2(&x, &t) {
                    for &zv in &z {
                        let e = fluctuation::inf_joint_density(&m, tv, xv, zv)?;
                        table.row(&[xv, tv, zv], &[e.value, e.abs_error], estimate_meta(&e));
                    }
                }
                table
            };
            emit(&table, &Run { command: "inf", model_hash: Some(h), seed: None, extra: Value::Null }, &output)
        }
        Command::Atoms { model, t, z, output } => {
            let (m, h) = read_model(&model.model)?;
            let table = if z.is_empty() {
                let mut table = Table::new(&["t", "p_sup_zero", "abs_error"]);
                for &tv in &t {
                    let e = fluctuation::sup_atom_total(&m, tv)?;
                    table.row(&[tv], &[e.value, e.abs_error], estimate_meta(&e));
                }
                table
            } else {
                let mut table = Table::new(&["t", "z", "sup_zero_density"]);
                for (tv, zv) in grid2(&t, &z) {
                    let e = fluctuation::sup_atom_density(&m, tv, zv)?;
                    table.row(&[tv, zv], &[e.value], estimate_meta(&e));
                }
                table
            };
            emit(&table, &Run { command: "atoms", model_hash: Some(h), seed: None, extra: Value::Null }, &output)
        }
        Command::Laplace { model, lam, t, output } => {
            let (m, h) = read_model(&model.model)?;
            let mut table = Table::new(&["lam", "t", "sup_laplace", "inf_laplace"]);
            for (l, tv) in grid2(&lam, &t) {
                let a = fluctuation::sup_laplace(&m, l, tv)?;
                let b = fluctuation::inf_laplace(&m, l, tv)?;
                table.row(&[l, tv], &[a.value, b.value], json!([estimate_meta(&a), estimate_meta(&b)]));
            }
            emit(&table, &Run { command: "laplace", model_hash: Some(h), seed: None, extra: Value::Null }, &output)
        }
        Command::Moments { model, n, t, output } => {
            let (m, h) = read_model(&model.model)?;
            let mut table = Table::new(&["n", "t", "sup_moment", "inf_moment"]);
            for &k in &n {
                for &tv in &t {
                    let a = fluctuation::sup_moment(&m, k, tv)?;
                    let b = fluctuation::inf_moment(&m, k, tv)?;
                    table.row(&[k as f64, tv], &[a.value, b.value], json!([estimate_meta(&a), estimate_meta(&b)]));
                }
            }
            emit(&table, &Run { command: "moments", model_hash: Some(h), seed: None, extra: Value::Null }, &output)
        }
        Command::PhiIdentity { model, lam, z, output } => {
            let (m, h) = read_model(&model.model)?;
            let mut table = Table::new(&[
                "lam",
                "z",
                "phi",
                "big_phi",
                "identity_residual",
                "ode_residual",
                "ode_residual_with_atom",
            ]);
            for (l, zv) in grid2(&lam, &z) {
                let phi = fluctuation::phi_lambda_z(&m, l, zv)?;
                let big = fluctuation::big_phi(&m, l)?;
                let res = fluctuation::phi_identity_residual(&m, l, zv)?;
                let (ode, ode_atom) = if l > 0.0 {
                    let c = fluctuation::phi_ode_check(&m, l, zv)?;
                    (c.residual, c.residual_with_atom)
                } else {
                    (f64::NAN, f64::NAN)
                };
                table.row(
                    &[l, zv],
                    &[phi.value, big.value, res.value, ode, ode_atom],
                    json!([estimate_meta(&phi), estimate_meta(&big), estimate_meta(&res)]),
                );
            }
            emit(&table, &Run { command: "phi-identity", model_hash: Some(h), seed: None, extra: Value::Null }, &output)
        }
        Command::BallotMc { jumps, c, x, t, size_mean, samples, seed, output } => {
            let dist = SizeDist::Exponential { mean: size_mean };
            let est = ballot_mc(jumps, &dist, c, t, x, samples, seed)?;
            let mut table = Table::new(&["cell_t", "cell_x", "empirical", "analytic", "stderr"]);
            table.row(
                &[t, x],
                &[est.frequency.mean, est.target, est.frequency.std_error],
                mc_meta(&est.frequency),
            );
            let run = Run {
                command: "ballot-mc",
                model_hash: None,
                seed: Some(seed),
                extra: json!({ "jumps": jumps, "c": c, "mean_lebesgue_e_over_t": est.lebesgue_ratio.mean }),
            };
            emit(&table, &run, &output)
        }
        Command::KendallMc { model, x, t, cells, samples, seed, output } => {
            let (m, h) = read_model(&model.model)?;
            if cells == 0 {
                return Err(Error::InvalidArgument("--cells must be >= 1".into()));
            }
            let edges = |top: f64| (0..=cells).map(|i| top * i as f64 / cells as f64).collect::<Vec<_>>();
            let rec = kendall_mc(&m, &edges(x), &edges(t), samples, seed)?;
            let mut table = Table::new(&["cell_t", "cell_x", "empirical", "analytic", "stderr"]);
            for c in &rec.cells {
                let mid = |r: (f64, f64)| 0.5 * (r.0 + r.1);
                table.row(
                    &[mid(c.t_range), mid(c.x_range)],
                    &[c.empirical, c.analytic, c.std_error],
                    json!({ "t_range": [c.t_range.0, c.t_range.1], "x_range": [c.x_range.0, c.x_range.1] }),
                );
            }
            let run = Run {
                command: "kendall-mc",
                model_hash: Some(h),
                seed: Some(seed),
                extra: json!({
                    "samples": samples,
                    "uncrossed": rec.uncrossed,
                    "column_totals": rec.column_totals,
                    "truncation_bias": rec.truncation_bias,
                }),
            };
            emit(&table, &run, &output)
        }
        Command::Subord { model, r, z, t, samples, seed, density_points, output } => {
            let bytes = fs::read(&model).map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", model.display())))?;
            let text = String::from_utf8(bytes.clone()).map_err(|_| Error::InvalidModel("model is not UTF-8".into()))?;
            let spec = TimeChangeSpec::new(SubordinatorModel::from_json(&text)?, r)?;
            let draws = simulate_time_change(&spec, t, samples, seed, DEFAULT_TRUNCATION, None)?;
            let mut table = Table::new(&["z", "phi_Y_analytic", "phi_Y_mc", "stderr"]);
            let mut body = String::new();
            for zs in &z {
                let zv = parse_vector(zs)?;
                let w = solve_phi_y(&spec, &zv)?;
                let (mc, se) = draws.phi_estimate(&zv);
                let cells = [sig17(w.value), sig17(mc), sig17(se)];
                let _ = writeln!(body, "{zs},{}", cells.join(","));
                table.rows.push(json!({ "residual": w.residual, "iterations": w.iterations, "critical": w.critical }));
            }
            table.body = body;
            if let (Some(n), Some(out)) = (density_points, &output.out) {
                if spec.model.dim() != 1 {
                    return Err(Error::Unsupported("density grids are written for d = 1 only".into()));
                }
                let ymax = 10.0 * (spec.model.means()[0] * t).max(1.0);
                let mut csv = String::from("y,p_Y\n");
                for i in 0..n.max(2) {
                    let y = ymax * i as f64 / (n.max(2) - 1) as f64;
                    let _ = writeln!(csv, "{y},{}", sig17(time_changed_density(&spec, t, &[y])?));
                }
                write_file(&sidecar(out, "density.csv"), &csv)?;
            }
            let run = Run {
                command: "subord",
                model_hash: Some(hash(&bytes)),
                seed: Some(seed),
                extra: json!({
                    "t": t,
                    "samples": samples,
                    "truncation": DEFAULT_TRUNCATION,
                    "truncation_bias": draws.truncation_bias,
                    "support_defect": draws.support_defect(&spec),
                }),
            };
            emit(&table, &run, &output)
        }
        Command::Selftest { criteria } => {
            if selftest(&criteria) {
                Ok(())
            } else {
                Err(Error::Unsupported("selftest failed".into()))
            }
        }
    }
}

/// Prints one verdict per criterion; true when all pass.
pub fn selftest(criteria: &[u32]) -> bool {
    let ids: Vec<u32> = if criteria.is_empty() { (1..=12).collect() } else { criteria.to_vec() };
    let mut ok = true;
    for id in ids {
        let c = acceptance::run(id);
        print!("{c}");
        ok &= c.passed();
    }
    ok
}

/// Exit status for an error: 3 for model validation, 2 for numerical failure, 1 otherwise.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidModel(_) => 3,
        e if e.is_numerical() => 2,
        _ => 1,
    }
}

/// Parses the process arguments, runs the command and maps the outcome to an exit code.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    if let Command::Selftest { criteria } = &cli.command {
        return ExitCode::from(if selftest(criteria) { 0 } else { 2 });
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("levyflux: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
