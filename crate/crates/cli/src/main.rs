mod config;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use qcbp_core::adversarial::{discontinuity_report, report_csv, FamilyParams};
use qcbp_core::halting::{decide_membership, decisions_csv, BoundedMachine};
use qcbp_core::nn::{default_dims, gen_training_set, instability_eval, train, Mlp, NnError, TrainConfig};
use qcbp_core::qcbp::{oracle_solution_set, select, solve_numeric, Instance, SolveOptions};
use qcbp_core::Rational;

use config::RunConfig;

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Numerical(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    fn to_json(&self) -> Value {
        let (kind, msg) = match self {
            CliError::Input(m) => ("input", m),
            CliError::Numerical(m) => ("numerical", m),
        };
        json!({ "error": msg, "kind": kind })
    }
}

fn input<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Input(e.to_string())
}

#[derive(Parser)]
#[command(name = "qcbp", version, about = "Experiments on the solution map of quadratically constrained basis pursuit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact solution set of a single-row instance
    Oracle(Flags),
    /// Certified numerical solve of a general instance
    Solve(Flags),
    /// Discontinuity report for the adversarial families
    Adversarial(Flags),
    /// Bounded membership decisions driven by a Turing machine
    Halting(Flags),
    /// Train a network and evaluate it on the adversarial families
    Nn(Flags),
    /// Write an oracle-labelled training set
    GenData(Flags),
}

/// Every flag can also be given as `key=value` in `--config`; flags win.
#[derive(Args, Clone, Default)]
struct Flags {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base entry of the adversarial families
    #[arg(long)]
    a: Option<String>,
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    n_max: Option<String>,
    #[arg(long)]
    n_min: Option<String>,
    #[arg(long)]
    j_budget: Option<String>,
    #[arg(long)]
    precision: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    machine: Option<PathBuf>,
    /// Also run the numerical solver
    #[arg(long)]
    solve: bool,
    /// Comma-separated single row, e.g. `2,1`
    #[arg(long)]
    row: Option<String>,
    /// Instance JSON file
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Rows m of the family instances
    #[arg(long)]
    rows: Option<String>,
    /// Columns N of the family instances
    #[arg(long)]
    cols: Option<String>,
    #[arg(long)]
    steps: Option<String>,
    #[arg(long)]
    lr: Option<String>,
    #[arg(long)]
    batch: Option<String>,
    #[arg(long)]
    noise: Option<String>,
    #[arg(long)]
    max_iter: Option<String>,
    /// Network checkpoint path
    #[arg(long)]
    checkpoint: Option<PathBuf>,
}

impl Flags {
    fn into_config(self, command: &str) -> Result<RunConfig, CliError> {
        let mut c = RunConfig::new(command);
        if let Some(path) = &self.config {
            c.load_file(path)?;
        }
        let strings = [
            ("a", self.a),
            ("eps", self.eps),
            ("n_max", self.n_max),
            ("n_min", self.n_min),
            ("j_budget", self.j_budget),
            ("precision", self.precision),
            ("tol", self.tol),
            ("seed", self.seed),
            ("row", self.row),
            ("rows", self.rows),
            ("cols", self.cols),
            ("steps", self.steps),
            ("lr", self.lr),
            ("batch", self.batch),
            ("noise", self.noise),
            ("max_iter", self.max_iter),
        ];
        for (k, v) in strings {
            if let Some(v) = v {
                c.set(k, &v);
            }
        }
        let paths = [("out", self.out), ("machine", self.machine), ("instance", self.instance), ("checkpoint", self.checkpoint)];
        for (k, v) in paths {
            if let Some(v) = v {
                c.set(k, &v.to_string_lossy());
            }
        }
        if self.solve {
            c.set("solve", "true");
        }
        Ok(c)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (name, flags) = match cli.command {
        Command::Oracle(f) => ("oracle", f),
        Command::Solve(f) => ("solve", f),
        Command::Adversarial(f) => ("adversarial", f),
        Command::Halting(f) => ("halting", f),
        Command::Nn(f) => ("nn", f),
        Command::GenData(f) => ("gen-data", f),
    };
    let result = flags.into_config(name).and_then(|cfg| match name {
        "oracle" => cmd_oracle(&cfg),
        "solve" => cmd_solve(&cfg),
        "adversarial" => cmd_adversarial(&cfg),
        "halting" => cmd_halting(&cfg),
        "nn" => cmd_nn(&cfg),
        _ => cmd_gen_data(&cfg),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            println!("{}", e.to_json());
            ExitCode::from(e.code())
        }
    }
}

/// Write to `out` atomically, or to stdout when no path is configured.
fn emit(cfg: &RunConfig, key: &str, text: &str) -> Result<(), CliError> {
    match cfg.get(key) {
        Some(path) => write_atomic(Path::new(path), text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_atomic(path: &Path, text: &str) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let fail = |e: &dyn std::fmt::Display| CliError::Input(format!("cannot write {}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| fail(&e))?;
    tmp.write_all(text.as_bytes()).map_err(|e| fail(&e))?;
    tmp.persist(path).map_err(|e| fail(&e.error))?;
    Ok(())
}

fn json_text(cfg: &RunConfig, mut body: Value) -> String {
    body.as_object_mut().expect("object body").insert("_meta".into(), cfg.meta());
    serde_json::to_string_pretty(&body).expect("serializable") + "\n"
}

fn csv_text(cfg: &RunConfig, body: &str) -> String {
    format!("{}\n{body}", cfg.header())
}

fn load_instance(cfg: &RunConfig) -> Result<Instance, CliError> {
    if let Some(path) = cfg.get("instance") {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {path}: {e}")))?;
        return serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{path}: {e}")));
    }
    let row = cfg.get("row").ok_or_else(|| CliError::Input("give --row or --instance".into()))?;
    let entries = row
        .split(',')
        .map(|s| s.trim().parse::<Rational>().map_err(input))
        .collect::<Result<Vec<_>, _>>()?;
    Instance::single_row(entries, cfg.rational("eps", "0")?).map_err(input)
}

fn family(cfg: &RunConfig) -> Result<FamilyParams, CliError> {
    FamilyParams::new(
        cfg.rational("a", "1")?,
        cfg.rational("eps", "1/2")?,
        cfg.parse("cols", 2)?,
        cfg.parse("rows", 1)?,
    )
    .map_err(input)
}

fn strings(v: &qcbp_core::RationalVector) -> Vec<String> {
    v.entries()
        .iter()
        .map(|z| if z.im.is_zero() { z.re.to_string() } else { format!("{}+{}i", z.re, z.im) })
        .collect()
}

fn cmd_oracle(cfg: &RunConfig) -> Result<(), CliError> {
    let inst = load_instance(cfg)?;
    let s = oracle_solution_set(&inst).map_err(input)?;
    let x = select(&s);
    let body = json!({
        "active": s.active().iter().map(|j| j + 1).collect::<Vec<_>>(),
        "scale": s.scale().to_string(),
        "coeff": s.coeff().iter().map(|c| c.to_string()).collect::<Vec<_>>(),
        "x": strings(&x),
        "l1": s.l1_value().to_string(),
    });
    emit(cfg, "out", &json_text(cfg, body))
}

fn solve_options(cfg: &RunConfig) -> Result<SolveOptions, CliError> {
    let d = SolveOptions::default();
    Ok(SolveOptions {
        tol: cfg.parse("tol", d.tol)?,
        max_iter: cfg.parse("max_iter", d.max_iter)?,
        check_every: d.check_every,
    })
}

fn cmd_solve(cfg: &RunConfig) -> Result<(), CliError> {
    let inst = load_instance(cfg)?;
    let r = solve_numeric(&inst, &solve_options(cfg)?).map_err(input)?;
    let body = json!({
        "x": strings(&r.x_hat),
        "objective_upper": r.objective_upper.to_string(),
        "objective": r.objective(),
        "lower_bound": r.lower_bound.to_string(),
        "residual_bound": r.residual_bound.to_string(),
        "iterations": r.iterations,
        "converged": r.converged,
    });
    emit(cfg, "out", &json_text(cfg, body))?;
    if !r.converged {
        return Err(CliError::Numerical(format!("no certified convergence after {} iterations", r.iterations)));
    }
    Ok(())
}

fn cmd_adversarial(cfg: &RunConfig) -> Result<(), CliError> {
    let p = family(cfg)?;
    let n_max: u32 = cfg.parse("n_max", 30)?;
    if n_max == 0 {
        return Err(CliError::Input("n_max must be at least 1".into()));
    }
    let opts = if cfg.flag("solve")? { Some(solve_options(cfg)?) } else { None };
    let rows = discontinuity_report(&p, n_max, opts.as_ref()).map_err(|e| CliError::Numerical(e.to_string()))?;
    emit(cfg, "out", &csv_text(cfg, &report_csv(&rows)))
}

fn cmd_halting(cfg: &RunConfig) -> Result<(), CliError> {
    let machine = match cfg.get("machine") {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {path}: {e}")))?;
            BoundedMachine::parse(&text).map_err(|e| CliError::Input(format!("{path}: {e}")))?
        }
        None => BoundedMachine::even(),
    };
    let p = family(cfg)?;
    let n_max: u64 = cfg.parse("n_max", 20)?;
    let j_budget: u64 = cfg.parse("j_budget", 10_000)?;
    let precision: u32 = cfg.parse("precision", 64)?;
    let rows: Vec<_> = (0..=n_max).map(|n| (n, decide_membership(&machine, n, j_budget, precision, &p))).collect();
    emit(cfg, "out", &csv_text(cfg, &decisions_csv(&rows)))
}

fn train_config(cfg: &RunConfig) -> Result<TrainConfig, CliError> {
    let d = TrainConfig::default();
    let batch = match cfg.get("batch") {
        None | Some("full") => None,
        Some(_) => Some(cfg.parse("batch", 0usize)?),
    };
    Ok(TrainConfig { steps: cfg.parse("steps", d.steps)?, lr: cfg.parse("lr", d.lr)?, batch, seed: cfg.seed()? })
}

fn cmd_nn(cfg: &RunConfig) -> Result<(), CliError> {
    let p = family(cfg)?;
    let tc = train_config(cfg)?;
    let n_min: u32 = cfg.parse("n_min", 1)?;
    let n_max: u32 = cfg.parse("n_max", 30)?;
    if n_max == 0 || n_min > n_max {
        return Err(CliError::Input("need 1 <= n_max and n_min <= n_max".into()));
    }
    let data = gen_training_set(&p, n_min..=n_max, &cfg.rational("noise", "0")?, tc.seed).map_err(input)?;
    let net = Mlp::new(&default_dims(&p), tc.seed).map_err(input)?;
    let (net, trace) = match train(&net, &data, &tc) {
        Ok(r) => r,
        Err(e @ NnError::Diverged { .. }) => return Err(CliError::Numerical(e.to_string())),
        Err(e) => return Err(input(e)),
    };
    let report = instability_eval(&net, &p, n_max).map_err(input)?;

    let ckpt = serde_json::to_value(&net).expect("serializable");
    let ckpt_text = json_text(cfg, ckpt);
    match cfg.get("checkpoint") {
        Some(path) => write_atomic(Path::new(path), &ckpt_text)?,
        None => {
            if let Some(out) = cfg.get("out") {
                write_atomic(Path::new(&format!("{out}.net.json")), &ckpt_text)?;
            }
        }
    }
    emit(cfg, "out", &csv_text(cfg, &report.csv()))?;

    let last = report.rows.last().expect("n_max >= 1");
    let margin = report.rows.iter().map(|r| r.bound_lhs - r.kappa).fold(f64::INFINITY, f64::min);
    eprintln!(
        "conflict bound {}: min(e1+e2+L*gap-kappa) = {margin:.3e}, L = {:.4}, final loss = {:.6}, max error at n={} = {:.6} >= {:.6}",
        if report.all_bounds_hold() { "holds" } else { "VIOLATED" },
        report.lipschitz,
        trace.last().copied().unwrap_or(f64::NAN),
        last.n,
        last.max_error(),
        (last.kappa - last.lip_slack) / 2.0
    );
    if !report.all_bounds_hold() {
        return Err(CliError::Numerical("conflict bound violated; Lipschitz estimate too small".into()));
    }
    Ok(())
}

fn cmd_gen_data(cfg: &RunConfig) -> Result<(), CliError> {
    let p = family(cfg)?;
    let n_min: u32 = cfg.parse("n_min", 1)?;
    let n_max: u32 = cfg.parse("n_max", 30)?;
    let noise = cfg.rational("noise", "0")?;
    let seed = if noise.is_zero() { cfg.parse("seed", 0)? } else { cfg.seed()? };
    let data = gen_training_set(&p, n_min..=n_max, &noise, seed).map_err(input)?;
    let body = serde_json::to_value(&data).expect("serializable");
    emit(cfg, "out", &json_text(cfg, body))
}
