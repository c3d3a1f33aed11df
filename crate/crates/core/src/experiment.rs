//! The experiment matrix: roster models × split repeats, noise and size
//! sweeps, and the QUBO build-time probe.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::anneal::stream_rng;
use crate::baselines::{train, BaselineSpec};
use crate::data::{load_csv, repeated_split, synth_fraud, Dataset, SplitPlan, SplitRepeat, Standardizer};
use crate::ensemble::{default_base_specs, optimize_vote_count, stack_train, VotingEnsemble};
use crate::error::{Error, Result};
use crate::metrics::{mean_std, ConfusionCounts, Metrics, SelectionMetric};
use crate::rydberg::MAX_ATOMS;
use crate::solver::{train_qubo_svm, SolverBackend, SolverConfig};
use crate::svm::{build_qubo, Encoding, Kernel, TrainingSet};

/// Roster entries that can be run in simulation, in table order.
pub const ROSTER: [&str; 17] = [
    "KNN",
    "Random Forest",
    "Decision Tree",
    "Naive Bayes",
    "Logistic Regression",
    "SVM Lin",
    "SVM RBF",
    "QUBO SVM i",
    "QUBO SVM i opt",
    "QUBO SVM N",
    "QUBO SVM N opt",
    "QUBO SVM 500",
    "QUBO SVM N opt 500",
    "QUBO SVM N 100",
    "QUBO SVM N opt 100",
    "QUBO SVM i Stack",
    "QUBO SVM N Stack",
];

/// Entries that need hardware runs.
pub const HARDWARE_ONLY: [&str; 2] = ["QUBO SVM opt QPU", "QUBO SVM Stack QPU"];

/// Atom counts used for the noise sweeps.
pub const NOISE_SWEEP_ATOMS: [usize; 2] = [10, 14];

pub const BASELINE_NAMES: [&str; 7] = [
    "KNN",
    "Random Forest",
    "Decision Tree",
    "Naive Bayes",
    "Logistic Regression",
    "SVM Lin",
    "SVM RBF",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RosterEntry {
    Baseline(&'static str),
    Qubo {
        noisy: bool,
        shots: Option<usize>,
        optimized: bool,
    },
    Stack {
        noisy: bool,
    },
}

impl FromStr for RosterEntry {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(b) = BASELINE_NAMES.iter().find(|&&b| b == s) {
            return Ok(RosterEntry::Baseline(b));
        }
        let qubo = |noisy, shots, optimized| RosterEntry::Qubo { noisy, shots, optimized };
        Ok(match s {
            "QUBO SVM i" => qubo(false, None, false),
            "QUBO SVM i opt" => qubo(false, None, true),
            "QUBO SVM N" => qubo(true, Some(1000), false),
            "QUBO SVM N opt" => qubo(true, Some(1000), true),
            "QUBO SVM 500" => qubo(true, Some(500), false),
            "QUBO SVM N opt 500" => qubo(true, Some(500), true),
            "QUBO SVM N 100" => qubo(true, Some(100), false),
            "QUBO SVM N opt 100" => qubo(true, Some(100), true),
            "QUBO SVM i Stack" => RosterEntry::Stack { noisy: false },
            "QUBO SVM N Stack" => RosterEntry::Stack { noisy: true },
            s if HARDWARE_ONLY.contains(&s) => {
                return Err(Error::InvalidParameter(format!("'{s}' needs a hardware run and cannot be simulated")))
            }
            other => return Err(Error::InvalidParameter(format!("unknown roster entry '{other}'"))),
        })
    }
}

impl RosterEntry {
    pub fn is_qubo(&self) -> bool {
        !matches!(self, RosterEntry::Baseline(_))
    }

    fn noisy(&self) -> bool {
        match *self {
            RosterEntry::Baseline(_) => false,
            RosterEntry::Qubo { noisy, .. } | RosterEntry::Stack { noisy } => noisy,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DataSource {
    Csv {
        path: PathBuf,
        #[serde(default)]
        label_column: Option<String>,
    },
    Synthetic {
        m: usize,
        d: usize,
        positive_rate: f64,
        separation: f64,
        seed: u64,
    },
}

impl Default for DataSource {
    fn default() -> Self {
        DataSource::Synthetic {
            m: 20_000,
            d: 4,
            positive_rate: 0.0017,
            separation: 4.0,
            seed: 0,
        }
    }
}

impl DataSource {
    pub fn load(&self) -> Result<Dataset> {
        match self {
            DataSource::Csv { path, label_column } => load_csv(path, label_column.as_deref()),
            DataSource::Synthetic {
                m,
                d,
                positive_rate,
                separation,
                seed,
            } => synth_fraud(*seed, *m, *d, *positive_rate, *separation),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub data: DataSource,
    pub plan: SplitPlan,
    pub models: Vec<String>,
    /// Backend for the ideal-simulation roster entries.
    pub ideal_backend: SolverBackend,
    /// Backend for the noisy-simulation roster entries.
    pub noisy_backend: SolverBackend,
    /// Shared QUBO SVM settings: kernel, encoding, shots for ideal entries,
    /// noise, embedding, pulse, capacity and fallback.
    pub solver: SolverConfig,
    /// Metric the "opt" entries maximize on validation data.
    pub selection_metric: SelectionMetric,
    /// Weight votes by sampling probability.
    pub weighted_vote: bool,
    /// Standardize features using train ∪ validation statistics.
    pub standardize: bool,
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            data: DataSource::default(),
            plan: SplitPlan::default(),
            models: vec!["SVM Lin".into(), "QUBO SVM i".into()],
            ideal_backend: SolverBackend::RydbergIdeal,
            noisy_backend: SolverBackend::RydbergNoisy,
            solver: SolverConfig::default(),
            selection_metric: SelectionMetric::Recall,
            weighted_vote: false,
            standardize: true,
            output_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn roster(&self) -> Result<Vec<RosterEntry>> {
        if self.models.is_empty() {
            return Err(Error::Empty("model roster"));
        }
        self.models.iter().map(|m| m.parse()).collect()
    }

    pub fn qubits(&self) -> usize {
        self.solver.encoding.k * self.plan.n_train
    }

    pub fn validate(&self) -> Result<()> {
        self.plan.validate()?;
        self.solver.encoding.validate()?;
        self.solver.kernel.validate()?;
        self.solver.noise.validate()?;
        self.solver.embedding.validate()?;
        let roster = self.roster()?;
        let atoms = self.qubits();
        let cap = self.solver.rydberg_max_atoms.min(MAX_ATOMS);
        for entry in &roster {
            let backend = if entry.noisy() { self.noisy_backend } else { self.ideal_backend };
            if entry.is_qubo() && backend.is_rydberg() && atoms > cap && !self.solver.fallback {
                return Err(Error::Capacity {
                    what: "atoms",
                    required: atoms,
                    capacity: cap,
                });
            }
        }
        Ok(())
    }
}

/// One (repeat, model) evaluation on the test half.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub model: String,
    pub repeat: usize,
    pub seed: u64,
    pub counts: ConfusionCounts,
    pub metrics: Metrics,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub backend: Option<SolverBackend>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shots: Option<usize>,
    /// Distinct sampled models and how many voted.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub models_sampled: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_used: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input_scale: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub embedding_objective: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub norm_drift: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    fn of(values: &[f64]) -> Self {
        let (mean, std) = mean_std(values);
        Self { mean, std }
    }
}

impl fmt::Display for MeanStd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.4} ± {:.4}", self.mean, self.std)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub model: String,
    pub repeats: usize,
    pub recall: MeanStd,
    pub balanced_accuracy: MeanStd,
    pub accuracy: MeanStd,
    pub precision: MeanStd,
    pub f1: MeanStd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellTiming {
    pub model: String,
    pub repeat: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub n_train: usize,
    pub qubits: usize,
    pub repeat_seeds: Vec<u64>,
    pub cells: Vec<CellResult>,
    pub summary: Vec<ModelSummary>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub timings: Vec<CellTiming>,
}

impl ExperimentReport {
    pub fn summary_for(&self, model: &str) -> Option<&ModelSummary> {
        self.summary.iter().find(|s| s.model == model)
    }

    /// JSON without timings; identical for identical configs.
    pub fn canonical_json(&self) -> Result<String> {
        let mut r = self.clone();
        r.timings.clear();
        Ok(serde_json::to_string_pretty(&r)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from(
            "model,repeats,recall_mean,recall_std,balanced_accuracy_mean,balanced_accuracy_std,accuracy_mean,accuracy_std,precision_mean,precision_std,f1_mean,f1_std\n",
        );
        for s in &self.summary {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{}\n",
                s.model,
                s.repeats,
                s.recall.mean,
                s.recall.std,
                s.balanced_accuracy.mean,
                s.balanced_accuracy.std,
                s.accuracy.mean,
                s.accuracy.std,
                s.precision.mean,
                s.precision.std,
                s.f1.mean,
                s.f1.std
            ));
        }
        out
    }

    pub fn cells_csv(&self) -> String {
        let mut out = String::from("model,repeat,seed,tp,fp,tn,fn,recall,balanced_accuracy,backend,n_used\n");
        for c in &self.cells {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                c.model,
                c.repeat,
                c.seed,
                c.counts.tp,
                c.counts.fp,
                c.counts.tn,
                c.counts.fn_,
                c.metrics.recall,
                c.metrics.balanced_accuracy,
                c.backend.map(|b| format!("{b:?}")).unwrap_or_default(),
                c.n_used.map(|n| n.to_string()).unwrap_or_default()
            ));
        }
        out
    }

    /// Human-readable mean ± std table.
    pub fn render(&self) -> String {
        let width = self.summary.iter().map(|s| s.model.len()).max().unwrap_or(5).max(5);
        let mut out = format!(
            "n_train = {}, qubits = {}, repeats = {}\n{:<width$}  {:<17}  {:<17}\n",
            self.n_train,
            self.qubits,
            self.repeat_seeds.len(),
            "model",
            "recall",
            "balanced accuracy"
        );
        for s in &self.summary {
            out.push_str(&format!(
                "{:<width$}  {:<17}  {:<17}\n",
                s.model,
                s.recall.to_string(),
                s.balanced_accuracy.to_string()
            ));
        }
        out
    }
}

fn fnv1a(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Seed for one (repeat, model) cell; independent of roster order.
pub fn cell_seed(repeat_seed: u64, model: &str) -> u64 {
    stream_rng(repeat_seed, fnv1a(model)).random()
}

struct PreparedSplit {
    train: TrainingSet,
    validation: TrainingSet,
    test: TrainingSet,
}

fn prepare(split: &SplitRepeat, standardize: bool) -> Result<PreparedSplit> {
    let (train, validation, test) = if standardize {
        let mut rows = split.train.x().to_vec();
        rows.extend_from_slice(split.validation.x());
        let st = Standardizer::fit(&rows);
        let f = |r: &[f64]| st.apply(r);
        (
            split.train.map_features(f),
            split.validation.map_features(f),
            split.test.map_features(f),
        )
    } else {
        (split.train.clone(), split.validation.clone(), split.test.clone())
    };
    Ok(PreparedSplit {
        train: train.to_training_set()?,
        validation: validation.to_training_set()?,
        test: test.to_training_set()?,
    })
}

fn baseline_spec(name: &str, d: usize, seed: u64) -> BaselineSpec {
    match name {
        "KNN" => BaselineSpec::knn(),
        "Random Forest" => BaselineSpec::random_forest(seed),
        "Decision Tree" => BaselineSpec::decision_tree(),
        "Naive Bayes" => BaselineSpec::gaussian_nb(),
        "Logistic Regression" => BaselineSpec::logistic(),
        "SVM Lin" => BaselineSpec::svm(Kernel::Linear),
        _ => BaselineSpec::svm(Kernel::Rbf { gamma: 1.0 / d as f64 }),
    }
}

fn run_cell(
    cfg: &ExperimentConfig,
    entry: RosterEntry,
    name: &str,
    repeat: usize,
    repeat_seed: u64,
    split: &PreparedSplit,
) -> Result<CellResult> {
    let seed = cell_seed(repeat_seed, name);
    let mut cell = CellResult {
        model: name.to_string(),
        repeat,
        seed,
        counts: ConfusionCounts::default(),
        metrics: ConfusionCounts::default().metrics(),
        backend: None,
        shots: None,
        models_sampled: None,
        n_used: None,
        input_scale: None,
        embedding_objective: None,
        norm_drift: None,
    };
    let solver_for = |noisy: bool, shots: Option<usize>| SolverConfig {
        backend: if noisy { cfg.noisy_backend } else { cfg.ideal_backend },
        shots: shots.unwrap_or(cfg.solver.shots),
        seed,
        embedding: crate::embedding::EmbeddingConfig {
            seed,
            ..cfg.solver.embedding.clone()
        },
        ..cfg.solver.clone()
    };
    let predictions = match entry {
        RosterEntry::Baseline(b) => {
            let model = train(&baseline_spec(b, split.train.dim(), seed), &split.train)?;
            model.predict_all(split.test.x())?
        }
        RosterEntry::Qubo {
            noisy,
            shots,
            optimized,
        } => {
            let solver = solver_for(noisy, shots);
            let trained = train_qubo_svm(&split.train, &solver)?;
            let ens = if optimized {
                optimize_vote_count(
                    trained.models.clone(),
                    trained.probabilities.clone(),
                    split.validation.x(),
                    split.validation.y(),
                    cfg.selection_metric,
                    cfg.weighted_vote,
                )?
            } else {
                VotingEnsemble::from_trained(&trained)?
            };
            cell.backend = Some(trained.solve.backend_used);
            cell.shots = trained.solve.backend_used.is_rydberg().then_some(solver.shots);
            cell.models_sampled = Some(trained.models.len());
            cell.n_used = Some(ens.n_used);
            cell.input_scale = Some(trained.modal().input_scale);
            cell.embedding_objective = trained.solve.embedding_objective;
            cell.norm_drift = trained.solve.norm_drift;
            ens.predict_all(split.test.x())?
        }
        RosterEntry::Stack { noisy } => {
            let solver = solver_for(noisy, None);
            let (model, trained) = stack_train(&default_base_specs(seed), &split.train, &split.train, &solver)?;
            cell.backend = Some(trained.solve.backend_used);
            cell.shots = trained.solve.backend_used.is_rydberg().then_some(solver.shots);
            cell.models_sampled = Some(trained.models.len());
            cell.n_used = Some(1);
            cell.input_scale = Some(model.meta.input_scale);
            cell.embedding_objective = trained.solve.embedding_objective;
            cell.norm_drift = trained.solve.norm_drift;
            model.predict_all(split.test.x())?
        }
    };
    cell.counts = ConfusionCounts::from_predictions(split.test.y(), &predictions)?;
    cell.metrics = cell.counts.metrics();
    Ok(cell)
}

/// Runs every roster model on every repeat and evaluates on the test halves.
pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let ds = cfg.data.load()?;
    run_on(cfg, &ds)
}

/// As [`run`] with an already loaded dataset.
pub fn run_on(cfg: &ExperimentConfig, ds: &Dataset) -> Result<ExperimentReport> {
    cfg.validate()?;
    let roster = cfg.roster()?;
    let splits = repeated_split(ds, &cfg.plan)?;
    let prepared = splits
        .iter()
        .map(|s| prepare(s, cfg.standardize))
        .collect::<Result<Vec<_>>>()?;
    let grid: Vec<(usize, usize)> = (0..splits.len())
        .flat_map(|r| (0..roster.len()).map(move |m| (r, m)))
        .collect();
    let results: Vec<(CellResult, f64)> = grid
        .par_iter()
        .map(|&(r, m)| {
            let start = Instant::now();
            let name = cfg.models[m].trim();
            run_cell(cfg, roster[m], name, r, splits[r].seed, &prepared[r])
                .map(|c| (c, start.elapsed().as_secs_f64()))
                .map_err(|e| Error::Experiment {
                    repeat: r,
                    model: name.to_string(),
                    source: Box::new(e),
                })
        })
        .collect::<Result<_>>()?;
    let timings = results
        .iter()
        .map(|(c, s)| CellTiming {
            model: c.model.clone(),
            repeat: c.repeat,
            seconds: *s,
        })
        .collect();
    let cells: Vec<CellResult> = results.into_iter().map(|(c, _)| c).collect();
    let summary = cfg
        .models
        .iter()
        .map(|name| {
            let name = name.trim();
            let of = |f: fn(&Metrics) -> f64| {
                let v: Vec<f64> = cells.iter().filter(|c| c.model == name).map(|c| f(&c.metrics)).collect();
                MeanStd::of(&v)
            };
            ModelSummary {
                model: name.to_string(),
                repeats: splits.len(),
                recall: of(|m| m.recall),
                balanced_accuracy: of(|m| m.balanced_accuracy),
                accuracy: of(|m| m.accuracy),
                precision: of(|m| m.precision),
                f1: of(|m| m.f1),
            }
        })
        .collect();
    Ok(ExperimentReport {
        config: cfg.clone(),
        n_train: cfg.plan.n_train,
        qubits: cfg.qubits(),
        repeat_seeds: splits.iter().map(|s| s.seed).collect(),
        cells,
        summary,
        timings,
    })
}

/// One run per swept value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    /// `scale_percent` or `n_train`.
    pub parameter: String,
    pub points: Vec<SweepPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub report: ExperimentReport,
}

impl SweepReport {
    /// One row per (value, model).
    pub fn table_csv(&self) -> String {
        let mut out = format!(
            "{},qubits,model,recall_mean,recall_std,balanced_accuracy_mean,balanced_accuracy_std\n",
            self.parameter
        );
        for p in &self.points {
            for s in &p.report.summary {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    p.value,
                    p.report.qubits,
                    s.model,
                    s.recall.mean,
                    s.recall.std,
                    s.balanced_accuracy.mean,
                    s.balanced_accuracy.std
                ));
            }
        }
        out
    }

    pub fn canonical_json(&self) -> Result<String> {
        let mut r = self.clone();
        for p in &mut r.points {
            p.report.timings.clear();
        }
        Ok(serde_json::to_string_pretty(&r)?)
    }
}

/// Repeats the experiment at each noise `scale_percent`.
pub fn noise_sweep(cfg: &ExperimentConfig, scales: &[f64]) -> Result<SweepReport> {
    if scales.is_empty() {
        return Err(Error::Empty("noise scales"));
    }
    cfg.validate()?;
    let ds = cfg.data.load()?;
    let points = scales
        .iter()
        .map(|&s| {
            let mut c = cfg.clone();
            c.solver.noise.scale_percent = s;
            Ok(SweepPoint {
                value: s,
                report: run_on(&c, &ds)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(SweepReport {
        parameter: "scale_percent".into(),
        points,
    })
}

/// Repeats the experiment for each training-set size.
pub fn size_sweep(cfg: &ExperimentConfig, n_trains: &[usize]) -> Result<SweepReport> {
    if n_trains.is_empty() {
        return Err(Error::Empty("training sizes"));
    }
    let ds = cfg.data.load()?;
    let points = n_trains
        .iter()
        .map(|&n| {
            let mut c = cfg.clone();
            c.plan.n_train = n;
            Ok(SweepPoint {
                value: n as f64,
                report: run_on(&c, &ds)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(SweepReport {
        parameter: "n_train".into(),
        points,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityRow {
    pub n: usize,
    pub k: usize,
    pub qubits: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityReport {
    pub features: usize,
    pub rows: Vec<ComplexityRow>,
    /// Mean over `K` of the log-log slope of time against `N`.
    pub slope_n: f64,
    /// Mean over `N` of the log-log slope of time against `K`.
    pub slope_k: f64,
}

impl ComplexityReport {
    pub fn table_csv(&self) -> String {
        let mut out = String::from("n,k,qubits,seconds\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{}\n", r.n, r.k, r.qubits, r.seconds));
        }
        out
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Times `build_qubo` on random `n × features` sets for every `(n, k)`,
/// keeping the fastest of `reps` runs.
pub fn complexity_probe(
    n_list: &[usize],
    k_list: &[usize],
    features: usize,
    reps: usize,
    seed: u64,
) -> Result<ComplexityReport> {
    if n_list.len() < 2 || k_list.len() < 2 {
        return Err(Error::InvalidParameter("need at least two N and two K values".into()));
    }
    let mut rows = Vec::new();
    for &n in n_list {
        let mut rng = stream_rng(seed, n as u64);
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..features).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
            .collect();
        let y: Vec<i8> = (0..n).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect();
        let ts = TrainingSet::new(x, y)?;
        for &k in k_list {
            let enc = Encoding::new(k, 2.0, 0.5)?;
            let mut best = f64::INFINITY;
            for _ in 0..reps.max(1) {
                let start = Instant::now();
                let q = build_qubo(&ts, &Kernel::Linear, &enc)?;
                let t = start.elapsed().as_secs_f64();
                std::hint::black_box(&q);
                best = best.min(t);
            }
            rows.push(ComplexityRow {
                n,
                k,
                qubits: n * k,
                seconds: best,
            });
        }
    }
    let slope_n = k_list
        .iter()
        .map(|&k| {
            let pts: Vec<(f64, f64)> = rows.iter().filter(|r| r.k == k).map(|r| (r.n as f64, r.seconds)).collect();
            loglog_slope(&pts)
        })
        .sum::<f64>()
        / k_list.len() as f64;
    let slope_k = n_list
        .iter()
        .map(|&n| {
            let pts: Vec<(f64, f64)> = rows.iter().filter(|r| r.n == n).map(|r| (r.k as f64, r.seconds)).collect();
            loglog_slope(&pts)
        })
        .sum::<f64>()
        / n_list.len() as f64;
    Ok(ComplexityReport {
        features,
        rows,
        slope_n,
        slope_k,
    })
}
