//! QUBO SVM training through a pluggable solver backend.

use serde::{Deserialize, Serialize};

use crate::anneal::{sa_solve, AnnealSchedule};
use crate::embedding::{embed, EmbeddingConfig};
use crate::error::{Error, Result};
use crate::qubo::{brute_force_solve, QuboProblem, SolutionDistribution};
use crate::rydberg::{
    anneal_qubo_detailed, default_schedule, NoiseConfig, DEFAULT_DURATION, DEFAULT_OMEGA_MAX, MAX_ATOMS,
};
use crate::svm::{build_qubo, models_from_distribution, Encoding, InputScale, Kernel, QuboSvmModel, TrainingSet};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverBackend {
    BruteForce,
    #[default]
    SimAnneal,
    RydbergIdeal,
    RydbergNoisy,
}

impl SolverBackend {
    pub fn is_rydberg(&self) -> bool {
        matches!(self, SolverBackend::RydbergIdeal | SolverBackend::RydbergNoisy)
    }
}

impl std::str::FromStr for SolverBackend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "brute_force" | "brute-force" => Ok(SolverBackend::BruteForce),
            "sim_anneal" | "sim-anneal" => Ok(SolverBackend::SimAnneal),
            "rydberg_ideal" | "rydberg-ideal" => Ok(SolverBackend::RydbergIdeal),
            "rydberg_noisy" | "rydberg-noisy" => Ok(SolverBackend::RydbergNoisy),
            other => Err(Error::InvalidParameter(format!("unknown solver backend '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub backend: SolverBackend,
    pub kernel: Kernel,
    pub encoding: Encoding,
    pub input_scale: InputScale,
    /// Readout shots for Rydberg backends.
    pub shots: usize,
    pub sa_sweeps: usize,
    pub sa_restarts: usize,
    pub noise: NoiseConfig,
    pub embedding: EmbeddingConfig,
    pub duration: f64,
    pub omega_max: f64,
    /// Rydberg backends are used only up to this many atoms.
    pub rydberg_max_atoms: usize,
    /// Above `rydberg_max_atoms`, fall back to simulated annealing instead of failing.
    pub fallback: bool,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            backend: SolverBackend::SimAnneal,
            kernel: Kernel::Linear,
            encoding: Encoding::default(),
            input_scale: InputScale::Auto,
            shots: 1000,
            sa_sweeps: 2000,
            sa_restarts: 50,
            noise: NoiseConfig::default(),
            embedding: EmbeddingConfig::default(),
            duration: DEFAULT_DURATION,
            omega_max: DEFAULT_OMEGA_MAX,
            rydberg_max_atoms: MAX_ATOMS,
            fallback: true,
            seed: 0,
        }
    }
}

impl SolverConfig {
    /// Backend actually used for a problem of `vars` binary variables.
    pub fn resolve_backend(&self, vars: usize) -> Result<SolverBackend> {
        let cap = self.rydberg_max_atoms.min(MAX_ATOMS);
        if self.backend.is_rydberg() && vars > cap {
            if self.fallback {
                log::warn!("{vars} atoms exceed the simulator bound of {cap}; using sim_anneal");
                return Ok(SolverBackend::SimAnneal);
            }
            return Err(Error::Capacity {
                what: "atoms",
                required: vars,
                capacity: cap,
            });
        }
        Ok(self.backend)
    }
}

/// Everything produced by one QUBO solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub distribution: SolutionDistribution,
    pub backend_used: SolverBackend,
    pub embedding_objective: Option<f64>,
    pub norm_drift: Option<f64>,
}

pub fn solve_qubo(q: &QuboProblem, cfg: &SolverConfig) -> Result<SolveOutcome> {
    let backend = cfg.resolve_backend(q.n())?;
    let (distribution, embedding_objective, norm_drift) = match backend {
        SolverBackend::BruteForce => {
            let best = brute_force_solve(q, 1)?;
            (SolutionDistribution::from_counts([(best[0].0.clone(), 1u64)])?, None, None)
        }
        SolverBackend::SimAnneal => {
            let sched = AnnealSchedule::for_problem(q, cfg.sa_sweeps, cfg.sa_restarts, cfg.seed);
            (sa_solve(q, &sched)?, None, None)
        }
        SolverBackend::RydbergIdeal | SolverBackend::RydbergNoisy => {
            let emb = embed(q, &cfg.embedding)?;
            let sched = default_schedule(q, cfg.duration, cfg.omega_max)?;
            let noise = if backend == SolverBackend::RydbergIdeal {
                NoiseConfig::ideal()
            } else {
                cfg.noise.clone()
            };
            let res = anneal_qubo_detailed(q, &emb.register, &sched, &noise, cfg.shots, cfg.seed)?;
            (res.distribution, Some(emb.objective), Some(res.norm_drift))
        }
    };
    Ok(SolveOutcome {
        distribution,
        backend_used: backend,
        embedding_objective,
        norm_drift,
    })
}

/// QUBO SVM trained on one training set: every sampled bitstring as a model,
/// most probable first.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedQuboSvm {
    pub models: Vec<QuboSvmModel>,
    /// Sampling probability of each model, aligned with `models`.
    pub probabilities: Vec<f64>,
    pub solve: SolveOutcome,
}

impl TrainedQuboSvm {
    pub fn modal(&self) -> &QuboSvmModel {
        &self.models[0]
    }
}

pub fn train_qubo_svm(ts: &TrainingSet, cfg: &SolverConfig) -> Result<TrainedQuboSvm> {
    let scale = cfg.input_scale.resolve(ts)?;
    let ts = ts.scaled(scale);
    let q = build_qubo(&ts, &cfg.kernel, &cfg.encoding)?;
    let solve = solve_qubo(&q, cfg)?;
    let mut models = models_from_distribution(&solve.distribution, &ts, &cfg.kernel, &cfg.encoding)?;
    for m in &mut models {
        m.input_scale = scale;
    }
    let probabilities = solve.distribution.entries().iter().map(|e| e.probability).collect();
    Ok(TrainedQuboSvm {
        models,
        probabilities,
        solve,
    })
}
