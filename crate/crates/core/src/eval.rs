//! Exact-match mention scoring, paired bootstrap significance, penalty
//! tuning and throughput.

use std::collections::BTreeSet;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{split_by_overlap, Corpus, Mention, Sentence};
use crate::error::{Error, Result};
use crate::learning::{Model, Prepared};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Prf {
    pub true_positives: usize,
    pub num_predicted: usize,
    pub num_gold: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    /// Empty prediction against non-empty gold has precision 0; empty gold
    /// with non-empty prediction has recall 0; both empty score 1.
    pub fn from_counts(tp: usize, predicted: usize, gold: usize) -> Self {
        let ratio = |a: usize, b: usize, other: usize| {
            if b > 0 {
                a as f64 / b as f64
            } else if other == 0 {
                1.0
            } else {
                0.0
            }
        };
        let precision = ratio(tp, predicted, gold);
        let recall = ratio(tp, gold, predicted);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Self {
            true_positives: tp,
            num_predicted: predicted,
            num_gold: gold,
            precision,
            recall,
            f1,
        }
    }

    /// One human-readable line followed by `key=value` lines under
    /// `[name]`.
    pub fn report(&self, name: &str) -> String {
        format!(
            "{name:<10} P {:>6.2}  R {:>6.2}  F1 {:>6.2}  (tp {} pred {} gold {})\n[{name}]\nP={:.6}\nR={:.6}\nF1={:.6}\nTP={}\npred={}\ngold={}\n",
            100.0 * self.precision,
            100.0 * self.recall,
            100.0 * self.f1,
            self.true_positives,
            self.num_predicted,
            self.num_gold,
            self.precision,
            self.recall,
            self.f1,
            self.true_positives,
            self.num_predicted,
            self.num_gold,
        )
    }
}

/// `(tp, predicted, gold)` for each sentence.
pub fn sentence_counts(gold: &Corpus, predicted: &[Vec<Mention>]) -> Result<Vec<(usize, usize, usize)>> {
    if gold.len() != predicted.len() {
        return Err(Error::Misaligned(format!(
            "{} gold sentences but {} predictions",
            gold.len(),
            predicted.len()
        )));
    }
    Ok(gold
        .sentences
        .iter()
        .zip(predicted)
        .map(|(s, p)| {
            let g: BTreeSet<&Mention> = s.mentions().iter().collect();
            let p: BTreeSet<&Mention> = p.iter().collect();
            (g.intersection(&p).count(), p.len(), g.len())
        })
        .collect())
}

fn total(counts: impl Iterator<Item = (usize, usize, usize)>) -> Prf {
    let (tp, p, g) = counts.fold((0, 0, 0), |a, c| (a.0 + c.0, a.1 + c.1, a.2 + c.2));
    Prf::from_counts(tp, p, g)
}

pub fn score(gold: &Corpus, predicted: &[Vec<Mention>]) -> Result<Prf> {
    Ok(total(sentence_counts(gold, predicted)?.into_iter()))
}

/// Scores on all sentences, then on those with and without overlapping
/// gold mentions.
pub fn score_split(gold: &Corpus, predicted: &[Vec<Mention>]) -> Result<(Prf, Prf, Prf)> {
    let counts = sentence_counts(gold, predicted)?;
    let flags: Vec<bool> = gold
        .sentences
        .iter()
        .map(|s| crate::corpus::overlapping_flags(s).iter().any(|f| f.0))
        .collect();
    let pick = |want: bool| {
        total(counts.iter().zip(&flags).filter(|(_, &f)| f == want).map(|(c, _)| *c))
    };
    // Keep the same partition as the corpus-level split.
    debug_assert_eq!(
        split_by_overlap(gold).0.len(),
        flags.iter().filter(|&&f| f).count()
    );
    Ok((total(counts.iter().copied()), pick(true), pick(false)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignificanceResult {
    pub f1_a: f64,
    pub f1_b: f64,
    pub p_value: f64,
    pub replicates: usize,
}

pub const MIN_REPLICATES: usize = 1000;

/// Paired bootstrap over sentences: the p-value is the fraction of
/// resampled corpora on which the F1 difference does not keep the sign it
/// has on the full data. Identical scores give 1.
pub fn bootstrap_significance(
    gold: &Corpus,
    pred_a: &[Vec<Mention>],
    pred_b: &[Vec<Mention>],
    replicates: usize,
    seed: u64,
) -> Result<SignificanceResult> {
    if replicates < MIN_REPLICATES {
        return Err(Error::InvalidArgument(format!(
            "at least {MIN_REPLICATES} bootstrap replicates required, got {replicates}"
        )));
    }
    let a = sentence_counts(gold, pred_a)?;
    let b = sentence_counts(gold, pred_b)?;
    let f1_a = total(a.iter().copied()).f1;
    let f1_b = total(b.iter().copied()).f1;
    let diff = f1_a - f1_b;
    let n = a.len();
    if diff == 0.0 || n == 0 {
        return Ok(SignificanceResult {
            f1_a,
            f1_b,
            p_value: 1.0,
            replicates,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut flips = 0usize;
    let mut idx = vec![0usize; n];
    for _ in 0..replicates {
        for i in &mut idx {
            *i = rng.gen_range(0..n);
        }
        let fa = total(idx.iter().map(|&i| a[i])).f1;
        let fb = total(idx.iter().map(|&i| b[i])).f1;
        if (fa - fb) * diff.signum() <= 0.0 {
            flips += 1;
        }
    }
    Ok(SignificanceResult {
        f1_a,
        f1_b,
        p_value: flips as f64 / replicates as f64,
        replicates,
    })
}

/// Offsets `lo, lo + step, ..., hi`, rounded to 1e-9 so that decimal grids
/// hit exact values such as 0.
pub fn penalty_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if step.is_nan() || step <= 0.0 || !lo.is_finite() || !hi.is_finite() || hi < lo {
        return Err(Error::InvalidArgument(format!("bad penalty grid {lo}:{hi}:{step}")));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize;
    if count > 100_000 {
        return Err(Error::InvalidArgument("penalty grid too large".into()));
    }
    Ok((0..=count)
        .map(|i| ((lo + i as f64 * step) * 1e9).round() / 1e9)
        .collect())
}

pub fn default_penalty_grid() -> Vec<f64> {
    penalty_grid(-2.0, 2.0, 0.1).expect("valid default grid")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub offset: f64,
    pub prf: Prf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltySweep {
    pub points: Vec<SweepPoint>,
    pub chosen: f64,
}

impl PenaltySweep {
    pub fn chosen_point(&self) -> &SweepPoint {
        self.points
            .iter()
            .find(|p| p.offset == self.chosen)
            .expect("chosen offset is on the grid")
    }

    /// Whether the predicted-mention count never drops as the offset grows.
    pub fn is_monotone(&self) -> bool {
        let mut pts: Vec<&SweepPoint> = self.points.iter().collect();
        pts.sort_by(|a, b| a.offset.total_cmp(&b.offset));
        pts.windows(2)
            .all(|w| w[0].prf.num_predicted <= w[1].prf.num_predicted)
    }

    pub fn report(&self) -> String {
        let mut out = String::from("offset        P       R      F1    pred\n");
        for p in &self.points {
            let mark = if p.offset == self.chosen { " *" } else { "" };
            out.push_str(&format!(
                "{:>+6.2}  {:>6.2}  {:>6.2}  {:>6.2}  {:>6}{mark}\n",
                p.offset,
                100.0 * p.prf.precision,
                100.0 * p.prf.recall,
                100.0 * p.prf.f1,
                p.prf.num_predicted
            ));
        }
        let best = self.chosen_point();
        out.push_str(&format!(
            "[penalty]\nchosen={}\nF1={:.6}\nmonotone={}\n",
            self.chosen,
            best.prf.f1,
            self.is_monotone()
        ));
        out
    }
}

/// Decodes `dev` at every grid offset, picks the offset with the best F1
/// (ties: smallest magnitude, then the smaller value) and stores it in the
/// model.
pub fn tune_penalty(model: &mut Model, dev: &Corpus, grid: &[f64]) -> Result<PenaltySweep> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty penalty grid".into()));
    }
    let prepared: Vec<Prepared> = dev
        .sentences
        .par_iter()
        .map(|s| model.prepare(s))
        .collect::<Result<_>>()?;
    let base = model.penalty_offset;
    let mut points = Vec::with_capacity(grid.len());
    for &c in grid {
        let preds: Vec<Vec<Mention>> = prepared
            .par_iter()
            .map(|p| model.decode_prepared(p, c - base))
            .collect::<Result<_>>()?;
        points.push(SweepPoint {
            offset: c,
            prf: score(dev, &preds)?,
        });
    }
    let best = points
        .iter()
        .min_by(|a, b| {
            b.prf
                .f1
                .total_cmp(&a.prf.f1)
                .then(a.offset.abs().total_cmp(&b.offset.abs()))
                .then(a.offset.total_cmp(&b.offset))
        })
        .expect("non-empty grid");
    let chosen = best.offset;
    let sweep = PenaltySweep { points, chosen };
    if !sweep.is_monotone() {
        log::warn!("predicted mention count is not monotone in the penalty offset");
    }
    model.penalty_offset = chosen;
    Ok(sweep)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThroughputReport {
    pub words_per_second: f64,
    pub total_words: usize,
    pub wall_seconds: f64,
}

impl ThroughputReport {
    pub fn report(&self) -> String {
        format!(
            "{:.0} words/s ({} words in {:.3}s)\n[throughput]\nw/s={:.3}\nwords={}\nseconds={:.6}\n",
            self.words_per_second,
            self.total_words,
            self.wall_seconds,
            self.words_per_second,
            self.total_words,
            self.wall_seconds
        )
    }
}

/// Single-threaded decoding speed, counting network and feature
/// construction as part of decoding.
pub fn throughput(model: &Model, sentences: &[Sentence]) -> Result<ThroughputReport> {
    let total_words: usize = sentences.iter().map(Sentence::len).sum();
    if total_words == 0 {
        return Err(Error::InvalidArgument("no words".into()));
    }
    let start = Instant::now();
    for s in sentences {
        std::hint::black_box(model.predict(s)?);
    }
    let wall_seconds = start.elapsed().as_secs_f64().max(1e-9);
    Ok(ThroughputReport {
        words_per_second: total_words as f64 / wall_seconds,
        total_words,
        wall_seconds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(s: usize, e: usize, l: &str) -> Mention {
        Mention::new(s, e, l)
    }

    fn gold() -> Corpus {
        Corpus::new(vec![Sentence::from_words("a b c d", &[(1, 3, "P"), (2, 2, "P")])])
    }

    #[test]
    fn prf_examples() {
        let g = gold();
        let full = score(&g, &[vec![m(1, 3, "P"), m(2, 2, "P")]]).unwrap();
        assert_eq!((full.precision, full.recall, full.f1), (1.0, 1.0, 1.0));
        let half = score(&g, &[vec![m(2, 2, "P")]]).unwrap();
        assert_eq!((half.precision, half.recall), (1.0, 0.5));
        assert!((half.f1 - 2.0 / 3.0).abs() < 1e-12);
        let wrong = score(&g, &[vec![m(2, 2, "Q")]]).unwrap();
        assert_eq!((wrong.true_positives, wrong.num_predicted, wrong.f1), (0, 1, 0.0));
        let none = score(&g, &[vec![]]).unwrap();
        assert_eq!((none.precision, none.f1), (0.0, 0.0));
        assert!(score(&g, &[]).is_err());
    }

    #[test]
    fn grid_hits_zero() {
        let g = default_penalty_grid();
        assert_eq!(g.len(), 41);
        assert!(g.contains(&0.0));
        assert_eq!(g[0], -2.0);
        assert_eq!(g[40], 2.0);
        assert_eq!(penalty_grid(0.0, 0.0, 0.1).unwrap(), [0.0]);
        assert!(penalty_grid(1.0, 0.0, 0.1).is_err());
    }

    #[test]
    fn bootstrap_examples() {
        let sents: Vec<Sentence> = (0..50)
            .map(|i| Sentence::from_words("x y z", &[(i % 3, 2, "P")]))
            .collect();
        let g = Corpus::new(sents);
        let perfect: Vec<Vec<Mention>> = g.sentences.iter().map(|s| s.mentions().to_vec()).collect();
        let empty = vec![Vec::new(); 50];
        let same = bootstrap_significance(&g, &perfect, &perfect, 1000, 1).unwrap();
        assert_eq!(same.p_value, 1.0);
        let r = bootstrap_significance(&g, &perfect, &empty, 1000, 1).unwrap();
        assert!(r.p_value < 0.01);
        let again = bootstrap_significance(&g, &perfect, &empty, 1000, 1).unwrap();
        assert_eq!(r, again);
        assert!(bootstrap_significance(&g, &perfect, &empty, 999, 1).is_err());
    }

    #[test]
    fn split_scores() {
        let g = Corpus::new(vec![
            Sentence::from_words("a b c d", &[(1, 3, "P"), (2, 2, "P")]),
            Sentence::from_words("a b", &[(0, 0, "P")]),
        ]);
        let preds = vec![vec![m(1, 3, "P")], vec![m(0, 0, "P")]];
        let (all, ol, plain) = score_split(&g, &preds).unwrap();
        assert_eq!((all.true_positives, all.num_gold), (2, 3));
        assert_eq!((ol.true_positives, ol.num_gold), (1, 2));
        assert_eq!(plain.f1, 1.0);
    }
}
