use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use qsvm::data::{load_csv, Dataset};
use qsvm::embedding::{embed, EmbeddingMode};
use qsvm::ensemble::{optimize_vote_count, VotingEnsemble};
use qsvm::experiment::{
    complexity_probe, noise_sweep, run, size_sweep, DataSource, ExperimentConfig, ExperimentReport, NOISE_SWEEP_ATOMS,
};
use qsvm::metrics::{ConfusionCounts, SelectionMetric};
use qsvm::qubo::QuboProblem;
use qsvm::rydberg::{anneal_qubo_detailed, default_schedule, AtomRegister, NoiseConfig};
use qsvm::solver::{solve_qubo, train_qubo_svm, SolverBackend, SolverConfig};
use qsvm::svm::Kernel;

#[derive(Parser)]
#[command(name = "qsvm", version, about = "QUBO SVM training, annealing and experiments")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a QUBO SVM on a CSV training set and write the model document.
    Train(TrainArgs),
    /// Score a model document on a labelled CSV.
    Evaluate(EvaluateArgs),
    /// Place atoms for a QUBO read from a plain-text matrix.
    Embed(EmbedArgs),
    /// Solve a plain-text QUBO with one backend and write the distribution.
    Anneal(AnnealArgs),
    /// Repeat the experiment over noise scales.
    SweepNoise(SweepNoiseArgs),
    /// Repeat the experiment over training-set sizes.
    SweepSize(SweepSizeArgs),
    /// Time QUBO construction over N and K.
    Complexity(ComplexityArgs),
    /// Run the experiment (or re-render a saved report) and write the tables.
    Report(ReportArgs),
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment configuration (JSON).
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Directory for written artifacts.
    #[arg(long, short, env = "QSVM_OUTPUT_DIR")]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Clone, Default)]
struct SolverArgs {
    #[arg(long)]
    backend: Option<SolverBackend>,
    #[arg(long)]
    shots: Option<usize>,
    /// Noise scale in percent of the default levels.
    #[arg(long)]
    noise_scale: Option<f64>,
    /// Binary digits per coefficient.
    #[arg(long)]
    k: Option<usize>,
    /// Encoding base.
    #[arg(long)]
    base: Option<f64>,
    #[arg(long)]
    xi: Option<f64>,
    /// RBF kernel with this gamma instead of the linear kernel.
    #[arg(long)]
    rbf_gamma: Option<f64>,
    #[arg(long)]
    sa_sweeps: Option<usize>,
    #[arg(long)]
    sa_restarts: Option<usize>,
    #[arg(long, value_enum)]
    embedding: Option<EmbedMode>,
    #[arg(long)]
    rydberg_max_atoms: Option<usize>,
    /// Fail instead of falling back to sim_anneal above the atom bound.
    #[arg(long)]
    no_fallback: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum EmbedMode {
    Continuous,
    Lattice,
}

#[derive(Clone, Copy, ValueEnum)]
enum Metric {
    Recall,
    BalancedAccuracy,
}

impl From<Metric> for SelectionMetric {
    fn from(m: Metric) -> Self {
        match m {
            Metric::Recall => SelectionMetric::Recall,
            Metric::BalancedAccuracy => SelectionMetric::BalancedAccuracy,
        }
    }
}

#[derive(Args, Clone, Default)]
struct ExperimentArgs {
    /// Labelled CSV instead of the configured data source.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    label_column: Option<String>,
    #[arg(long)]
    n_train: Option<usize>,
    #[arg(long)]
    repeats: Option<usize>,
    /// Roster entry; repeat to run several.
    #[arg(long = "model")]
    models: Vec<String>,
    #[arg(long)]
    ideal_backend: Option<SolverBackend>,
    #[arg(long)]
    noisy_backend: Option<SolverBackend>,
    #[arg(long, value_enum)]
    metric: Option<Metric>,
    /// Weight votes by sampling probability.
    #[arg(long)]
    weighted: bool,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    solver: SolverArgs,
    /// Labelled training CSV.
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    label_column: Option<String>,
    /// Labelled validation CSV used to choose how many sampled models vote.
    #[arg(long)]
    validation: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "recall")]
    metric: Metric,
    /// Model document path; defaults to model.json in the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    label_column: Option<String>,
    /// Write one prediction per row to this CSV.
    #[arg(long)]
    predictions: Option<PathBuf>,
}

#[derive(Args)]
struct EmbedArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    solver: SolverArgs,
    /// Plain-text QUBO matrix.
    #[arg(long)]
    qubo: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnnealArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    qubo: PathBuf,
    /// Register document from `embed`; embedded on the fly when absent.
    #[arg(long)]
    register: Option<PathBuf>,
    /// Write the Ω/δ schedule table with this many points.
    #[arg(long)]
    pulse_points: Option<usize>,
    /// Rows of the distribution to print.
    #[arg(long, default_value_t = 10)]
    top: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepNoiseArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    exp: ExperimentArgs,
    /// Noise scales in percent.
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 50.0, 100.0, 200.0, 500.0, 1000.0])]
    scales: Vec<f64>,
    /// Register size; sets n_train to atoms / K.
    #[arg(long)]
    atoms: Option<usize>,
}

#[derive(Args)]
struct SweepSizeArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    exp: ExperimentArgs,
    #[arg(long, value_delimiter = ',', default_values_t = [4usize, 5, 6, 7, 8])]
    sizes: Vec<usize>,
}

#[derive(Args)]
struct ComplexityArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_delimiter = ',', default_values_t = [50usize, 100, 200, 400])]
    n: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [2usize, 4, 8])]
    k: Vec<usize>,
    #[arg(long, default_value_t = 4)]
    features: usize,
    #[arg(long, default_value_t = 5)]
    reps: usize,
}

#[derive(Args)]
struct ReportArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    exp: ExperimentArgs,
    /// Re-render a saved report instead of running.
    #[arg(long, conflicts_with = "config")]
    input: Option<PathBuf>,
}

fn load_config(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.plan.seed = seed;
        cfg.solver.seed = seed;
        cfg.solver.embedding.seed = seed;
    }
    if let Some(dir) = &common.output_dir {
        cfg.output_dir = Some(dir.clone());
    }
    Ok(cfg)
}

fn apply_solver(s: &mut SolverConfig, a: &SolverArgs) {
    if let Some(b) = a.backend {
        s.backend = b;
    }
    if let Some(v) = a.shots {
        s.shots = v;
    }
    if let Some(v) = a.noise_scale {
        s.noise.scale_percent = v;
    }
    if let Some(v) = a.k {
        s.encoding.k = v;
    }
    if let Some(v) = a.base {
        s.encoding.base = v;
    }
    if let Some(v) = a.xi {
        s.encoding.xi = v;
    }
    if let Some(gamma) = a.rbf_gamma {
        s.kernel = Kernel::Rbf { gamma };
    }
    if let Some(v) = a.sa_sweeps {
        s.sa_sweeps = v;
    }
    if let Some(v) = a.sa_restarts {
        s.sa_restarts = v;
    }
    if let Some(m) = a.embedding {
        s.embedding.mode = match m {
            EmbedMode::Continuous => EmbeddingMode::Continuous,
            EmbedMode::Lattice => EmbeddingMode::TriangularLattice,
        };
    }
    if let Some(v) = a.rydberg_max_atoms {
        s.rydberg_max_atoms = v;
    }
    if a.no_fallback {
        s.fallback = false;
    }
}

fn apply_experiment(cfg: &mut ExperimentConfig, a: &ExperimentArgs) {
    if let Some(path) = &a.csv {
        cfg.data = DataSource::Csv {
            path: path.clone(),
            label_column: a.label_column.clone(),
        };
    }
    if let Some(v) = a.n_train {
        cfg.plan.n_train = v;
    }
    if let Some(v) = a.repeats {
        cfg.plan.repeats = v;
    }
    if !a.models.is_empty() {
        cfg.models = a.models.clone();
    }
    if let Some(b) = a.ideal_backend {
        cfg.ideal_backend = b;
    }
    if let Some(b) = a.noisy_backend {
        cfg.noisy_backend = b;
    }
    if let Some(m) = a.metric {
        cfg.selection_metric = m.into();
    }
    if a.weighted {
        cfg.weighted_vote = true;
    }
}

fn experiment_config(common: &Common, solver: &SolverArgs, exp: &ExperimentArgs) -> Result<ExperimentConfig> {
    let mut cfg = load_config(common)?;
    apply_solver(&mut cfg.solver, solver);
    apply_experiment(&mut cfg, exp);
    cfg.validate()?;
    Ok(cfg)
}

fn solver_config(common: &Common, solver: &SolverArgs) -> Result<(SolverConfig, PathBuf)> {
    let cfg = load_config(common)?;
    let dir = output_dir(&cfg);
    let mut s = cfg.solver;
    apply_solver(&mut s, solver);
    Ok((s, dir))
}

fn output_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.output_dir.clone().unwrap_or_else(|| PathBuf::from("."))
}

fn write(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn write_to(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn load_labelled(path: &Path, label: Option<&str>) -> Result<Dataset> {
    load_csv(path, label).with_context(|| format!("loading {}", path.display()))
}

fn load_qubo(path: &Path) -> Result<QuboProblem> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    QuboProblem::parse_text(&text).with_context(|| format!("parsing {}", path.display()))
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let (solver, dir) = solver_config(&a.common, &a.solver)?;
    let ts = load_labelled(&a.data, a.label_column.as_deref())?.to_training_set()?;
    let trained = train_qubo_svm(&ts, &solver)?;
    let ens = match &a.validation {
        Some(p) => {
            let val = load_labelled(p, a.label_column.as_deref())?;
            optimize_vote_count(
                trained.models.clone(),
                trained.probabilities.clone(),
                val.x(),
                val.y(),
                a.metric.into(),
                false,
            )?
        }
        None => VotingEnsemble::from_trained(&trained)?,
    };
    let out = a.out.unwrap_or_else(|| dir.join("model.json"));
    write_to(&out, &serde_json::to_string_pretty(&ens)?)?;
    let modal = trained.modal();
    println!(
        "backend {:?}, {} sampled models, {} voting, modal support {} of {}, input scale {:.4}",
        trained.solve.backend_used,
        trained.models.len(),
        ens.n_used,
        modal.support_count(),
        ts.len(),
        modal.input_scale
    );
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_evaluate(a: EvaluateArgs) -> Result<()> {
    let text = fs::read_to_string(&a.model).with_context(|| format!("reading {}", a.model.display()))?;
    let ens: VotingEnsemble = serde_json::from_str(&text).with_context(|| format!("parsing {}", a.model.display()))?;
    let ds = load_labelled(&a.data, a.label_column.as_deref())?;
    let pred = ens.predict_all(ds.x())?;
    let counts = ConfusionCounts::from_predictions(ds.y(), &pred)?;
    let doc = serde_json::json!({ "counts": counts, "metrics": counts.metrics() });
    println!("{}", serde_json::to_string_pretty(&doc)?);
    if let Some(p) = &a.predictions {
        let mut out = String::from("row,label,prediction\n");
        for (i, (y, p)) in ds.y().iter().zip(&pred).enumerate() {
            out.push_str(&format!("{i},{y},{p}\n"));
        }
        write_to(p, &out)?;
    }
    Ok(())
}

fn cmd_embed(a: EmbedArgs) -> Result<()> {
    let (solver, dir) = solver_config(&a.common, &a.solver)?;
    let q = load_qubo(&a.qubo)?;
    let rep = embed(&q, &solver.embedding)?;
    let out = a.out.unwrap_or_else(|| dir.join("register.json"));
    write_to(&out, &serde_json::to_string_pretty(&rep)?)?;
    print!("{}", rep.register.coordinate_table());
    println!(
        "objective {:.6e}, clipped coupling mass {:.4}, diagonal mass {:.4}",
        rep.objective, rep.target.clipped_mass, rep.target.diagonal_mass
    );
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_anneal(a: AnnealArgs) -> Result<()> {
    let (solver, dir) = solver_config(&a.common, &a.solver)?;
    let q = load_qubo(&a.qubo)?;
    let backend = solver.resolve_backend(q.n())?;
    let dist = match (&a.register, backend.is_rydberg()) {
        (Some(path), true) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let doc: serde_json::Value = serde_json::from_str(&text)?;
            let reg: AtomRegister = serde_json::from_value(doc.get("register").cloned().unwrap_or(doc))
                .with_context(|| format!("parsing register in {}", path.display()))?;
            let sched = default_schedule(&q, solver.duration, solver.omega_max)?;
            let noise = if backend == SolverBackend::RydbergIdeal {
                NoiseConfig::ideal()
            } else {
                solver.noise.clone()
            };
            let res = anneal_qubo_detailed(&q, &reg, &sched, &noise, solver.shots, solver.seed)?;
            println!("norm drift {:.2e}", res.norm_drift);
            res.distribution
        }
        _ => {
            let res = solve_qubo(&q, &solver)?;
            if let Some(d) = res.norm_drift {
                println!("norm drift {d:.2e}");
            }
            res.distribution
        }
    };
    println!("backend {backend:?}, {} distinct states", dist.len());
    println!("{:>width$}  {:>8}  {:>12}", "bits", "prob", "energy", width = q.n().max(4));
    for e in dist.entries().iter().take(a.top) {
        println!(
            "{:>width$}  {:>8.4}  {:>12.6}",
            e.bits.to_string(),
            e.probability,
            q.energy(&e.bits)?,
            width = q.n().max(4)
        );
    }
    let out = a.out.unwrap_or_else(|| dir.join("distribution.json"));
    write_to(&out, &serde_json::to_string_pretty(&dist)?)?;
    if let Some(points) = a.pulse_points {
        let sched = default_schedule(&q, solver.duration, solver.omega_max)?;
        let p = write(out.parent().unwrap_or(Path::new(".")), "pulse.csv", &sched.table_csv(points))?;
        println!("wrote {}", p.display());
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_sweep_noise(a: SweepNoiseArgs) -> Result<()> {
    let mut cfg = experiment_config(&a.common, &a.solver, &a.exp)?;
    if let Some(atoms) = a.atoms {
        if !NOISE_SWEEP_ATOMS.contains(&atoms) {
            log::warn!("{atoms} atoms is not one of the preset sizes {NOISE_SWEEP_ATOMS:?}");
        }
        let k = cfg.solver.encoding.k;
        if atoms % k != 0 {
            bail!("{atoms} atoms is not a multiple of K = {k}");
        }
        cfg.plan.n_train = atoms / k;
        cfg.validate()?;
    }
    let sweep = noise_sweep(&cfg, &a.scales)?;
    let dir = output_dir(&cfg);
    print!("{}", sweep.table_csv());
    let j = write(&dir, "sweep_noise.json", &serde_json::to_string_pretty(&sweep)?)?;
    let c = write(&dir, "sweep_noise.csv", &sweep.table_csv())?;
    println!("wrote {} and {}", j.display(), c.display());
    Ok(())
}

fn cmd_sweep_size(a: SweepSizeArgs) -> Result<()> {
    let cfg = experiment_config(&a.common, &a.solver, &a.exp)?;
    let sweep = size_sweep(&cfg, &a.sizes)?;
    let dir = output_dir(&cfg);
    print!("{}", sweep.table_csv());
    let j = write(&dir, "sweep_size.json", &serde_json::to_string_pretty(&sweep)?)?;
    let c = write(&dir, "sweep_size.csv", &sweep.table_csv())?;
    println!("wrote {} and {}", j.display(), c.display());
    Ok(())
}

fn cmd_complexity(a: ComplexityArgs) -> Result<()> {
    let cfg = load_config(&a.common)?;
    let rep = complexity_probe(&a.n, &a.k, a.features, a.reps, a.common.seed.unwrap_or(0))?;
    print!("{}", rep.table_csv());
    println!("slope in N {:.3}, slope in K {:.3}", rep.slope_n, rep.slope_k);
    let p = write(&output_dir(&cfg), "complexity.csv", &rep.table_csv())?;
    println!("wrote {}", p.display());
    Ok(())
}

fn cmd_report(a: ReportArgs) -> Result<()> {
    let (report, dir) = match &a.input {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            let r: ExperimentReport = serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?;
            let dir = a
                .common
                .output_dir
                .clone()
                .unwrap_or_else(|| p.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(".")));
            (r, dir)
        }
        None => {
            let cfg = experiment_config(&a.common, &a.solver, &a.exp)?;
            (run(&cfg)?, output_dir(&cfg))
        }
    };
    print!("{}", report.render());
    if a.input.is_none() {
        write(&dir, "report.json", &report.to_json()?)?;
    }
    write(&dir, "summary.csv", &report.summary_csv())?;
    write(&dir, "cells.csv", &report.cells_csv())?;
    println!("wrote tables to {}", dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let res = match cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Embed(a) => cmd_embed(a),
        Command::Anneal(a) => cmd_anneal(a),
        Command::SweepNoise(a) => cmd_sweep_noise(a),
        Command::SweepSize(a) => cmd_sweep_size(a),
        Command::Complexity(a) => cmd_complexity(a),
        Command::Report(a) => cmd_report(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
