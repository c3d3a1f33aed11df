//! Average voting over the sampled QUBO SVM models, and stacking with a QUBO
//! SVM meta-model over classical base learners.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{train, BaselineSpec, ClassifierModel};
use crate::error::{Error, Result};
use crate::metrics::{ConfusionCounts, SelectionMetric};
use crate::solver::{train_qubo_svm, SolverConfig, TrainedQuboSvm};
use crate::svm::{sign_label, QuboSvmModel, TrainingSet};

/// Members ordered by descending sampling probability; only the first
/// `n_used` vote.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VotingEnsemble {
    pub members: Vec<QuboSvmModel>,
    pub probabilities: Vec<f64>,
    pub n_used: usize,
    /// Weight each vote by its sampling probability instead of equally.
    pub weighted: bool,
}

impl VotingEnsemble {
    pub fn new(members: Vec<QuboSvmModel>, probabilities: Vec<f64>, n_used: usize, weighted: bool) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Empty("ensemble members"));
        }
        if probabilities.len() != members.len() {
            return Err(Error::DimensionMismatch {
                expected: members.len(),
                got: probabilities.len(),
            });
        }
        if n_used == 0 || n_used > members.len() {
            return Err(Error::InvalidParameter(format!(
                "n_used {n_used} outside 1..={}",
                members.len()
            )));
        }
        Ok(Self {
            members,
            probabilities,
            n_used,
            weighted,
        })
    }

    /// Ensemble of the modal model alone.
    pub fn from_trained(t: &TrainedQuboSvm) -> Result<Self> {
        Self::new(t.models.clone(), t.probabilities.clone(), 1, false)
    }

    fn weight(&self, m: usize) -> f64 {
        if self.weighted {
            self.probabilities[m]
        } else {
            1.0
        }
    }

    pub fn vote_predict(&self, x: &[f64]) -> Result<i8> {
        let mut total = 0.0;
        for (m, model) in self.members[..self.n_used].iter().enumerate() {
            total += self.weight(m) * f64::from(model.predict(x)?);
        }
        Ok(sign_label(total))
    }

    pub fn predict_all(&self, rows: &[Vec<f64>]) -> Result<Vec<i8>> {
        rows.par_iter().map(|r| self.vote_predict(r)).collect()
    }
}

/// Picks the smallest `n_used` that maximizes `metric` on the validation
/// rows, trying prefixes of `members` from the most probable model down.
pub fn optimize_vote_count(
    members: Vec<QuboSvmModel>,
    probabilities: Vec<f64>,
    val_x: &[Vec<f64>],
    val_y: &[i8],
    metric: SelectionMetric,
    weighted: bool,
) -> Result<VotingEnsemble> {
    if val_x.is_empty() {
        return Err(Error::Empty("validation set"));
    }
    let mut ens = VotingEnsemble::new(members, probabilities, 1, weighted)?;
    let preds: Vec<Vec<i8>> = ens
        .members
        .par_iter()
        .map(|m| val_x.iter().map(|x| m.predict(x)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let mut sums = vec![0.0; val_x.len()];
    let mut best = (f64::NEG_INFINITY, 1);
    for (m, p) in preds.iter().enumerate() {
        let w = ens.weight(m);
        for (s, &v) in sums.iter_mut().zip(p) {
            *s += w * f64::from(v);
        }
        let voted: Vec<i8> = sums.iter().map(|&s| sign_label(s)).collect();
        let score = metric.score(&ConfusionCounts::from_predictions(val_y, &voted)?.metrics());
        if score > best.0 {
            best = (score, m + 1);
        }
    }
    ens.n_used = best.1;
    Ok(ens)
}

/// Base learners named in the stacked roster entries.
pub fn default_base_specs(seed: u64) -> Vec<BaselineSpec> {
    vec![
        BaselineSpec::gaussian_nb(),
        BaselineSpec::random_forest(seed),
        BaselineSpec::logistic(),
        BaselineSpec::knn(),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackedModel {
    pub base_names: Vec<String>,
    pub base_learners: Vec<ClassifierModel>,
    pub meta: QuboSvmModel,
}

fn meta_features(bases: &[ClassifierModel], names: &[String], x: &[f64]) -> Result<Vec<f64>> {
    bases
        .iter()
        .zip(names)
        .map(|(b, name)| {
            b.predict(x).map(f64::from).map_err(|e| Error::Learner {
                learner: name.clone(),
                source: Box::new(e),
            })
        })
        .collect()
}

/// Trains the base learners on `base_set`, then a QUBO SVM on their `±1`
/// predictions for `meta_set` against its true labels. Passing the same set
/// twice trains both layers on the same samples.
pub fn stack_train(
    specs: &[BaselineSpec],
    base_set: &TrainingSet,
    meta_set: &TrainingSet,
    cfg: &SolverConfig,
) -> Result<(StackedModel, TrainedQuboSvm)> {
    if specs.is_empty() {
        return Err(Error::Empty("base learners"));
    }
    let base_names: Vec<String> = specs.iter().map(|s| s.name().to_string()).collect();
    let base_learners = specs
        .iter()
        .zip(&base_names)
        .map(|(s, name)| {
            train(s, base_set).map_err(|e| Error::Learner {
                learner: name.clone(),
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let z = meta_set
        .x()
        .iter()
        .map(|x| meta_features(&base_learners, &base_names, x))
        .collect::<Result<Vec<_>>>()?;
    let meta_ts = TrainingSet::new(z, meta_set.y().to_vec())?;
    let trained = train_qubo_svm(&meta_ts, cfg)?;
    let model = StackedModel {
        base_names,
        base_learners,
        meta: trained.modal().clone(),
    };
    Ok((model, trained))
}

impl StackedModel {
    pub fn stack_predict(&self, x: &[f64]) -> Result<i8> {
        let z = meta_features(&self.base_learners, &self.base_names, x)?;
        self.meta.predict(&z)
    }

    pub fn meta_dim(&self) -> usize {
        self.base_learners.len()
    }

    pub fn predict_all(&self, rows: &[Vec<f64>]) -> Result<Vec<i8>> {
        rows.par_iter().map(|r| self.stack_predict(r)).collect()
    }
}
