//! Regularized conditional log-likelihood training.
//!
//! The objective for weights `w` is
//! `sum_i [score(gold_i) - log Z(x_i)] - l2 * |w|^2`, maximized with L-BFGS
//! on its negation.

pub mod lbfgs;
mod model;

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Mention, Sentence};
use crate::error::{Error, Result};
use crate::features::{BrownClusters, EdgeFeatureTable, FeatureConfig, FeatureDictionary, SentenceInputs};
use crate::inference;
use crate::network::{self, Network, Scheme};

pub use lbfgs::{LbfgsConfig, StopReason};
pub use model::{Model, Prepared, FORMAT_VERSION};

/// Sentences per unit of parallel work. Partial sums are added in unit
/// order, so results do not depend on the thread count.
const CHUNK: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Coefficient of the squared l2 norm subtracted from the objective.
    pub l2: f64,
    pub max_iters: usize,
    pub grad_tol: f64,
    pub history: usize,
    pub seed: u64,
    /// Fail on gold mentions the scheme cannot represent instead of dropping
    /// them.
    pub strict: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            l2: 0.01,
            max_iters: 100,
            grad_tol: 1e-4,
            history: 10,
            seed: 0,
            strict: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveReport {
    pub iteration: usize,
    pub objective: f64,
    pub grad_norm: f64,
    pub seconds: f64,
}

/// One training sentence with its network, features and gold counts.
#[derive(Debug, Clone)]
pub struct Instance {
    pub network: Network,
    pub table: EdgeFeatureTable,
    /// Gold feature counts as sorted `(index, count)`.
    pub gold: Vec<(u32, f64)>,
}

#[derive(Debug, Clone)]
pub struct TrainingSet {
    pub scheme: Scheme,
    pub labels: Vec<String>,
    pub dictionary: FeatureDictionary,
    pub instances: Vec<Instance>,
    /// Gold mentions removed because the scheme cannot hold them, with the
    /// sentence id.
    pub dropped: Vec<(String, Mention)>,
}

struct Built {
    network: Network,
    inputs: SentenceInputs,
    gold: network::Structure,
}

fn build_one(
    s: &Sentence,
    scheme: Scheme,
    labels: &[String],
    features: &FeatureConfig,
    brown: Option<&BrownClusters>,
) -> Result<Built> {
    let mut net = network::build(scheme, s.len(), labels)?;
    network::attach_penalty(&mut net);
    let gold = network::gold_structure(&net, s.mentions())?;
    Ok(Built {
        inputs: SentenceInputs::new(s, features, brown),
        network: net,
        gold,
    })
}

fn gold_counts(net: &Network, table: &EdgeFeatureTable, gold: &network::Structure) -> Vec<(u32, f64)> {
    let mut acc: BTreeMap<u32, f64> = BTreeMap::new();
    for (e, mult) in gold.edge_counts(net) {
        for &i in table.edge(e) {
            *acc.entry(i).or_default() += mult as f64;
        }
    }
    acc.into_iter().collect()
}

impl TrainingSet {
    /// Builds networks and gold structures, and indexes the features of
    /// every edge into a fresh dictionary, which is then frozen.
    pub fn prepare(
        corpus: &Corpus,
        scheme: Scheme,
        features: &FeatureConfig,
        brown: Option<&BrownClusters>,
        strict: bool,
    ) -> Result<Self> {
        Self::with_dictionary(corpus, scheme, corpus.labels(), features, brown, FeatureDictionary::new(), strict)
    }

    /// Like [`TrainingSet::prepare`] but resolving features through `dict`,
    /// which only grows if it is not frozen.
    pub fn with_dictionary(
        corpus: &Corpus,
        scheme: Scheme,
        labels: &[String],
        features: &FeatureConfig,
        brown: Option<&BrownClusters>,
        mut dict: FeatureDictionary,
        strict: bool,
    ) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidArgument("training corpus declares no mention labels".into()));
        }
        let mut dropped = Vec::new();
        let sentences: Vec<Sentence> = corpus
            .sentences
            .iter()
            .filter(|s| !s.is_empty())
            .map(|s| {
                if strict {
                    return s.clone();
                }
                let (reduced, lost) = network::reduce_to_capacity(scheme, s);
                for m in lost {
                    log::warn!("sentence {}: {scheme} cannot hold {m}; dropped from training", s.id);
                    dropped.push((s.id.clone(), m));
                }
                reduced
            })
            .collect();
        let built: Vec<Built> = sentences
            .par_iter()
            .map(|s| build_one(s, scheme, labels, features, brown))
            .collect::<Result<_>>()?;
        let mut instances = Vec::with_capacity(built.len());
        for b in built {
            let table = EdgeFeatureTable::new(&b.network, &b.inputs, &mut dict);
            let gold = gold_counts(&b.network, &table, &b.gold);
            instances.push(Instance {
                network: b.network,
                table,
                gold,
            });
        }
        dict.freeze();
        Ok(Self {
            scheme,
            labels: labels.to_vec(),
            dictionary: dict,
            instances,
            dropped,
        })
    }

    pub fn dim(&self) -> usize {
        self.dictionary.len()
    }
}

fn chunk_terms(instances: &[Instance], weights: &[f64]) -> (f64, Vec<f64>) {
    let mut value = 0.0;
    let mut grad = vec![0.0; weights.len()];
    for inst in instances {
        let pot = inst.table.potentials(weights, 0.0);
        let ins = inference::inside(&inst.network, &pot);
        let marg = inference::edge_marginals(&inst.network, &pot, &ins);
        let mut gold_score = 0.0;
        for &(i, c) in &inst.gold {
            gold_score += weights[i as usize] * c;
            grad[i as usize] += c;
        }
        value += gold_score - ins.log_z;
        for (e, &p) in marg.iter().enumerate() {
            if p != 0.0 {
                inst.table.add_scaled(e, -p, &mut grad);
            }
        }
    }
    (value, grad)
}

/// Objective value and gradient at `weights`.
pub fn objective_and_gradient(set: &TrainingSet, weights: &[f64], l2: f64) -> (f64, Vec<f64>) {
    assert_eq!(weights.len(), set.dim(), "weight vector does not match the dictionary");
    let chunks: Vec<&[Instance]> = set.instances.chunks(CHUNK).collect();
    let wave = rayon::current_num_threads().max(1);
    let mut value = 0.0;
    let mut grad = vec![0.0; weights.len()];
    for group in chunks.chunks(wave) {
        let parts: Vec<(f64, Vec<f64>)> = group.par_iter().map(|c| chunk_terms(c, weights)).collect();
        for (v, g) in parts {
            value += v;
            for (a, b) in grad.iter_mut().zip(&g) {
                *a += b;
            }
        }
    }
    let sq: f64 = weights.iter().map(|w| w * w).sum();
    value -= l2 * sq;
    for (g, w) in grad.iter_mut().zip(weights) {
        *g -= 2.0 * l2 * w;
    }
    (value, grad)
}

/// Largest relative gap between the analytic gradient and central
/// differences of the objective, with relative error
/// `|a - fd| / max(1, |a|, |fd|)`.
pub fn finite_difference_check(set: &TrainingSet, weights: &[f64], l2: f64, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    let (_, grad) = objective_and_gradient(set, weights, l2);
    let mut w = weights.to_vec();
    let mut worst: f64 = 0.0;
    for i in 0..w.len() {
        let orig = w[i];
        w[i] = orig + epsilon;
        let up = objective_and_gradient(set, &w, l2).0;
        w[i] = orig - epsilon;
        let down = objective_and_gradient(set, &w, l2).0;
        w[i] = orig;
        let fd = (up - down) / (2.0 * epsilon);
        let err = (grad[i] - fd).abs() / 1f64.max(grad[i].abs()).max(fd.abs());
        worst = worst.max(err);
    }
    Ok(worst)
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: Model,
    pub reports: Vec<ObjectiveReport>,
    pub stop: StopReason,
    pub dropped: Vec<(String, Mention)>,
}

/// Optimizes the weights of `set` from zero.
pub fn optimize(set: &TrainingSet, cfg: &TrainConfig) -> (Vec<f64>, Vec<ObjectiveReport>, StopReason) {
    let start = Instant::now();
    let lcfg = LbfgsConfig {
        history: cfg.history.max(1),
        max_iters: cfg.max_iters,
        grad_tol: cfg.grad_tol,
        ..LbfgsConfig::default()
    };
    let mut reports = Vec::new();
    let result = lbfgs::minimize(
        |w| {
            let (v, g) = objective_and_gradient(set, w, cfg.l2);
            (-v, g.into_iter().map(|x| -x).collect())
        },
        vec![0.0; set.dim()],
        &lcfg,
        |iteration, value, grad_norm| {
            let r = ObjectiveReport {
                iteration,
                objective: -value,
                grad_norm,
                seconds: start.elapsed().as_secs_f64(),
            };
            log::info!(
                "iter {:>4}  objective {:.6}  |grad| {:.3e}",
                r.iteration,
                r.objective,
                r.grad_norm
            );
            reports.push(r);
        },
    );
    (result.x, reports, result.reason)
}

pub fn train(
    corpus: &Corpus,
    scheme: Scheme,
    features: &FeatureConfig,
    brown: Option<BrownClusters>,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    if corpus.is_empty() {
        return Err(Error::InvalidArgument("empty training corpus".into()));
    }
    let brown = brown.filter(|_| features.uses_brown());
    let set = TrainingSet::prepare(corpus, scheme, features, brown.as_ref(), cfg.strict)?;
    let (weights, reports, stop) = optimize(&set, cfg);
    let model = Model {
        format_version: FORMAT_VERSION,
        scheme,
        labels: set.labels.clone(),
        features: features.clone(),
        brown,
        dictionary: set.dictionary.clone(),
        weights,
        penalty_offset: 0.0,
    };
    Ok(TrainOutcome {
        model,
        reports,
        stop,
        dropped: set.dropped,
    })
}
