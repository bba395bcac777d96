//! Command-line front end.
//!
//! Exit codes: 0 success, 1 when an analysis check fails (a battery row,
//! a non-metastable window asked for a witness), 2 for usage and input
//! errors. CSV output starts with a `#` line naming the tool version, the
//! model hash and the seed, followed by the header row.

use std::ffi::OsString;
use std::io::Write;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::backend::{DynamicsBackend, QuantumBackend};
use crate::battery::{bound_battery, BatteryOptions, DEFAULT_TOL};
use crate::classical::{classical_evolution, ClassicalBackend};
use crate::heisenberg::{observable_change, quasi_conserved_witness, trajectory};
use crate::io::{load_model, LoadedModel};
use crate::mode::e_pm;
use crate::models::{random_hermitian, spin_ops, Model};
use crate::operator::max_norm;
use crate::regimes::{change_measure, distance_curves, scan_metastable, timescales, GridOptions, TimeGrid};
use crate::spectral_meta::{detect_separation, spectral_projection_report};
use crate::{CMat, Error, NormOptions, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "metastab", version, about = "Metastability diagnostics for Lindblad and Markov-chain dynamics")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// `builtin:<name>` or `file:<path>`.
    #[arg(long, global = true, default_value = "builtin:spin_half")]
    pub model: String,
    /// Model parameter `name=value`, repeatable.
    #[arg(long = "param", global = true, value_parser = parse_param)]
    pub params: Vec<(String, f64)>,
    /// Seed for random models, optimizer restarts and random observables.
    /// Falls back to METASTAB_SEED, then 0.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Write the output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<std::path::PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Eigenvalues of the generator (JSON).
    Spectrum,
    /// `d_I(t)` and `d_ss(t)` on a log grid (CSV).
    Distances(GridArgs),
    /// `C_Δ(t'', r·t'')` with its thresholds (CSV).
    Changes(ChangesArgs),
    /// Metastable windows and timescales (JSON).
    Detect(DetectArgs),
    /// Slow-mode projection report for one window (JSON).
    Project(ProjectArgs),
    /// Every inequality of the bound battery (CSV).
    VerifyBounds(BoundsArgs),
    /// Observable trajectories, or a quasi-conserved witness (CSV or JSON).
    Heisenberg(HeisenbergArgs),
    /// The same analyses, requiring a classical generator.
    #[command(subcommand)]
    Classical(ClassicalCommand),
}

#[derive(Debug, Subcommand)]
pub enum ClassicalCommand {
    Spectrum,
    Distances(GridArgs),
    Changes(ChangesArgs),
    Detect(DetectArgs),
    Project(ProjectArgs),
    VerifyBounds(BoundsArgs),
    /// Evolution `f_t = e^{tQᵀ} f` of a function on the states.
    Heisenberg(ClassicalObservableArgs),
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    #[arg(long, default_value_t = 1e-3)]
    pub t_min: f64,
    #[arg(long, default_value_t = 1e3)]
    pub t_max: f64,
    #[arg(long, default_value_t = 50)]
    pub points: usize,
}

#[derive(Debug, Clone, Args)]
pub struct ChangesArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    /// Window ratio `t'/t''`.
    #[arg(long, default_value_t = 2.0)]
    pub ratio: f64,
}

#[derive(Debug, Clone, Args)]
pub struct DetectArgs {
    #[arg(long, default_value_t = 0.1)]
    pub cdelta_max: f64,
    #[arg(long, default_value_t = 2.0)]
    pub ratio: f64,
    /// First window start; defaults to `10⁻²/‖L‖`.
    #[arg(long)]
    pub t_min: Option<f64>,
    /// Last window start; defaults to twice the slowest relaxation time.
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long, default_value_t = 60)]
    pub points: usize,
}

#[derive(Debug, Clone, Args)]
pub struct ProjectArgs {
    /// Window `t'',t'`.
    #[arg(long, value_parser = parse_pair)]
    pub window: (f64, f64),
    /// Number of slow modes; detected from the spectrum when omitted.
    #[arg(long)]
    pub cut: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
}

#[derive(Debug, Clone, Args)]
pub struct BoundsArgs {
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = 50)]
    pub points: usize,
    /// Window starts taken from the grid.
    #[arg(long, default_value_t = 6)]
    pub windows: usize,
    /// Extra window start `t''`, repeatable.
    #[arg(long = "window-start")]
    pub window_starts: Vec<f64>,
    /// First grid point; defaults to `10⁻³/‖L‖`.
    #[arg(long)]
    pub t_min: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct HeisenbergArgs {
    /// `sx`, `sy`, `sz` (dimension 2), `random`, or `file:<path>` holding a
    /// matrix of `[re, im]` pairs.
    #[arg(long, default_value = "sz")]
    pub observable: String,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Build a quasi-conserved witness for `t'',t',t₀` instead.
    #[arg(long, value_parser = parse_triple)]
    pub witness: Option<(f64, f64, f64)>,
}

#[derive(Debug, Clone, Args)]
pub struct ClassicalObservableArgs {
    /// Comma-separated values of the function on the states.
    #[arg(long, value_delimiter = ',', required = true)]
    pub function: Vec<f64>,
    #[command(flatten)]
    pub grid: GridArgs,
}

fn parse_param(s: &str) -> std::result::Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected name=value, got '{s}'"))?;
    let v = v.trim().parse::<f64>().map_err(|e| format!("parameter '{k}': {e}"))?;
    Ok((k.trim().to_string(), v))
}

fn parse_floats(s: &str, n: usize) -> std::result::Result<Vec<f64>, String> {
    let v = s.split(',').map(|x| x.trim().parse::<f64>()).collect::<std::result::Result<Vec<_>, _>>();
    match v {
        Ok(v) if v.len() == n => Ok(v),
        _ => Err(format!("expected {n} comma-separated numbers, got '{s}'")),
    }
}

fn parse_pair(s: &str) -> std::result::Result<(f64, f64), String> {
    parse_floats(s, 2).map(|v| (v[0], v[1]))
}

fn parse_triple(s: &str) -> std::result::Result<(f64, f64, f64), String> {
    parse_floats(s, 3).map(|v| (v[0], v[1], v[2]))
}

/// Result of a subcommand: the text to emit and whether checks passed.
struct Output {
    text: String,
    ok: bool,
}

struct Context {
    loaded: LoadedModel,
    seed: u64,
}

impl Context {
    fn meta_line(&self) -> String {
        format!("# metastab {VERSION} model={} seed={}\n", self.loaded.hash, self.seed)
    }

    fn meta_json(&self) -> serde_json::Value {
        json!({ "version": VERSION, "model": self.loaded.description, "model_hash": self.loaded.hash, "seed": self.seed })
    }

    fn json(&self, body: impl Serialize) -> Result<String> {
        let v = json!({ "meta": self.meta_json(), "result": body });
        serde_json::to_string_pretty(&v).map(|s| s + "\n").map_err(|e| Error::InvalidInput(e.to_string()))
    }

    fn norm_options(&self) -> NormOptions {
        NormOptions { seed: self.seed, ..Default::default() }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NotMetastable { .. } | Error::SeparationInconsistency(_) => 1,
        _ => 2,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(out) => {
            if let Err(e) = emit(&cli.global, &out.text) {
                eprintln!("error: {e}");
                return 2;
            }
            if out.ok {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn emit(g: &GlobalArgs, text: &str) -> std::io::Result<()> {
    match &g.out {
        Some(p) => std::fs::write(p, text),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    }
}

fn resolve_seed(flag: Option<u64>) -> Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var("METASTAB_SEED") {
        Ok(v) => v.trim().parse().map_err(|_| Error::InvalidInput(format!("METASTAB_SEED='{v}' is not an integer"))),
        Err(_) => Ok(0),
    }
}

fn execute(cli: &Cli) -> Result<Output> {
    let g = &cli.global;
    if let Some(n) = g.threads {
        if n == 0 {
            return Err(Error::InvalidInput("--threads must be positive".into()));
        }
        // the global pool can be set once per process; later calls keep it
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let seed = resolve_seed(g.seed)?;
    let loaded = load_model(&g.model, &g.params, Some(seed))?;
    let ctx = Context { loaded, seed };
    match &cli.command {
        Command::Classical(c) => {
            let Model::Classical(q) = &ctx.loaded.model else {
                return Err(Error::InvalidInput("classical subcommands need a classical generator".into()));
            };
            let b = ClassicalBackend::new(q)?;
            match c {
                ClassicalCommand::Spectrum => spectrum(&ctx, &b),
                ClassicalCommand::Distances(a) => distances(&ctx, &b, a),
                ClassicalCommand::Changes(a) => changes(&ctx, &b, a),
                ClassicalCommand::Detect(a) => detect(&ctx, &b, a),
                ClassicalCommand::Project(a) => project(&ctx, &b, a),
                ClassicalCommand::VerifyBounds(a) => verify(&ctx, &b, a),
                ClassicalCommand::Heisenberg(a) => classical_heisenberg(&ctx, &b, a),
            }
        }
        cmd => {
            let backend: Box<dyn DynamicsBackend> = match &ctx.loaded.model {
                Model::Quantum(m) => Box::new(QuantumBackend::new(m, ctx.norm_options())?),
                Model::Classical(q) => Box::new(ClassicalBackend::new(q)?),
            };
            let b = backend.as_ref();
            match cmd {
                Command::Spectrum => spectrum(&ctx, b),
                Command::Distances(a) => distances(&ctx, b, a),
                Command::Changes(a) => changes(&ctx, b, a),
                Command::Detect(a) => detect(&ctx, b, a),
                Command::Project(a) => project(&ctx, b, a),
                Command::VerifyBounds(a) => verify(&ctx, b, a),
                Command::Heisenberg(a) => match &ctx.loaded.model {
                    Model::Quantum(m) => heisenberg(&ctx, &QuantumBackend::new(m, ctx.norm_options())?, a),
                    Model::Classical(_) => {
                        Err(Error::InvalidInput("use 'classical heisenberg' for a classical generator".into()))
                    }
                },
                Command::Classical(_) => unreachable!("handled above"),
            }
        }
    }
}

fn grid_points(a: &GridArgs) -> Result<Vec<f64>> {
    Ok(TimeGrid::log(a.t_min, a.t_max, a.points)?.points())
}

fn spectrum(ctx: &Context, b: &dyn DynamicsBackend) -> Result<Output> {
    let body = json!({
        "dim": b.dim(),
        "eigenvalues": b.eigenvalues().iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
        "m_ss": b.m_ss(),
        "generator_norm": b.generator_norm(),
    });
    Ok(Output { text: ctx.json(body)?, ok: true })
}

fn distances(ctx: &Context, b: &dyn DynamicsBackend, a: &GridArgs) -> Result<Output> {
    let mut text = ctx.meta_line() + "t,d_I,d_ss\n";
    for (t, di, ds) in distance_curves(b, &grid_points(a)?) {
        text += &format!("{t},{di},{ds}\n");
    }
    Ok(Output { text, ok: true })
}

fn changes(ctx: &Context, b: &dyn DynamicsBackend, a: &ChangesArgs) -> Result<Output> {
    if !(a.ratio >= 1.0) {
        return Err(Error::InvalidInput("--ratio must be at least 1".into()));
    }
    let opts = GridOptions::default();
    let mut text = ctx.meta_line() + "t2,c_delta,e_minus,e_plus\n";
    for t2 in grid_points(&a.grid)? {
        let c = change_measure(b, t2, a.ratio * t2, &opts)?.value;
        let (em, ep) = match e_pm(c) {
            Ok((m, p)) => (m.to_string(), p.to_string()),
            Err(_) => (String::new(), String::new()),
        };
        text += &format!("{t2},{c},{em},{ep}\n");
    }
    Ok(Output { text, ok: true })
}

fn detect(ctx: &Context, b: &dyn DynamicsBackend, a: &DetectArgs) -> Result<Output> {
    let scales = timescales(b)?;
    let ln = b.generator_norm();
    let t_min = a.t_min.unwrap_or(1e-2 / ln);
    let slowest = b.eigenvalues()[b.m_ss()..].iter().map(|l| -l.re).filter(|&r| r > 0.0).reduce(f64::min);
    let t_max = a.t_max.unwrap_or_else(|| slowest.map_or(1e4 / ln, |r| 2.0 / r));
    let grid = TimeGrid::log(t_min, t_max, a.points)?.points();
    let scan = scan_metastable(b, a.cdelta_max, a.ratio, &grid, &GridOptions::default())?;
    let body = json!({ "timescales": scales, "windows": scan.windows, "merged": scan.merged });
    Ok(Output { text: ctx.json(body)?, ok: true })
}

fn project(ctx: &Context, b: &dyn DynamicsBackend, a: &ProjectArgs) -> Result<Output> {
    let (t2, t1) = a.window;
    let opts = GridOptions::default();
    let m = match a.cut {
        Some(m) => m,
        None => {
            let c = change_measure(b, t2, t1, &opts)?.value;
            detect_separation(b, t2, t1, c)?.m
        }
    };
    let r = spectral_projection_report(b, m, t2, t1, &opts)?;
    let ok = r.bound_slacks.iter().all(|row| row.passes(a.tol));
    Ok(Output { text: ctx.json(&r)?, ok })
}

fn verify(ctx: &Context, b: &dyn DynamicsBackend, a: &BoundsArgs) -> Result<Output> {
    let opts = BatteryOptions {
        tol: a.tol,
        t_min: a.t_min,
        points: a.points,
        windows: a.windows,
        window_starts: a.window_starts.clone(),
        seed: ctx.seed,
        ..Default::default()
    };
    let r = bound_battery(b, &opts)?;
    Ok(Output { text: ctx.meta_line() + &r.to_csv(), ok: r.pass })
}

fn named_observable(name: &str, d: usize, seed: u64) -> Result<CMat> {
    let spin = |k: usize| -> Result<CMat> {
        if d != 2 {
            return Err(Error::InvalidInput(format!("observable '{name}' needs dimension 2")));
        }
        let (x, y, z) = spin_ops();
        Ok([x, y, z][k].clone())
    };
    match name {
        "sx" => spin(0),
        "sy" => spin(1),
        "sz" => spin(2),
        "random" => Ok(random_hermitian(d, seed)),
        other => {
            let Some(path) = other.strip_prefix("file:") else {
                return Err(Error::InvalidInput(format!("unknown observable '{other}'")));
            };
            let text = std::fs::read_to_string(path).map_err(|e| Error::InvalidInput(format!("cannot read {path}: {e}")))?;
            let rows: Vec<Vec<[f64; 2]>> = serde_json::from_str(&text)
                .map_err(|e| Error::Parse(format!("{path}: line {}, column {}: {e}", e.line(), e.column())))?;
            crate::operator::from_pairs(&rows)
        }
    }
}

fn heisenberg(ctx: &Context, b: &QuantumBackend, a: &HeisenbergArgs) -> Result<Output> {
    let opts = GridOptions::default();
    if let Some((t2, t1, t0)) = a.witness {
        let w = quasi_conserved_witness(b, t2, t1, t0, &opts)?;
        let ok = w.within_bound;
        return Ok(Output { text: ctx.json(&w)?, ok });
    }
    let s = b.spectral();
    let o = named_observable(&a.observable, s.dim, ctx.seed)?;
    let times = grid_points(&a.grid)?;
    let tr = trajectory(s, &o, &times)?;
    let scale = max_norm(&o)?;
    let d = s.dim;
    let mut text = ctx.meta_line() + "t,max_norm,change";
    for i in 0..d {
        for j in 0..d {
            text += &format!(",re_{i}_{j},im_{i}_{j}");
        }
    }
    text.push('\n');
    for (&t, v) in tr.times.iter().zip(&tr.values) {
        let change = if scale > 0.0 { observable_change(s, &o, 0.0, t, &opts)?.value } else { 0.0 };
        text += &format!("{t},{},{change}", max_norm(v)?);
        for i in 0..d {
            for j in 0..d {
                text += &format!(",{},{}", v[(i, j)].re, v[(i, j)].im);
            }
        }
        text.push('\n');
    }
    Ok(Output { text, ok: true })
}

fn classical_heisenberg(ctx: &Context, b: &ClassicalBackend, a: &ClassicalObservableArgs) -> Result<Output> {
    let q = b.generator_data();
    let n = q.dim;
    if a.function.len() != n {
        return Err(Error::DimensionMismatch(format!("function has {} values, chain has {n} states", a.function.len())));
    }
    let f = nalgebra::DVector::from_column_slice(&a.function);
    let mut text = ctx.meta_line() + "t,max_abs";
    for i in 0..n {
        text += &format!(",f_{i}");
    }
    text.push('\n');
    for t in grid_points(&a.grid)? {
        let ft = classical_evolution(q, t)?.transpose() * &f;
        text += &format!("{t},{}", ft.amax());
        for x in ft.iter() {
            text += &format!(",{x}");
        }
        text.push('\n');
    }
    Ok(Output { text, ok: true })
}
