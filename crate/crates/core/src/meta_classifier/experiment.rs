use std::collections::BTreeSet;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::eval::{evaluate, EvalReport, MeanStd, RunMeta};
use super::rules::feature_importance;
use super::tree::{train_tree, TreeParams};
use super::MetaError;
use crate::label_gen::LabeledPool;
use crate::meta_features::{DiagnosisLabel, Feature, N_FEATURES};
use crate::models::Family;

/// Feature rows and label indices of a pool.
pub fn pool_matrix(pool: &LabeledPool) -> Result<(Vec<[f64; N_FEATURES]>, Vec<usize>), MetaError> {
    let mut x = Vec::with_capacity(pool.len());
    let mut y = Vec::with_capacity(pool.len());
    for (i, p) in pool.profiles.iter().enumerate() {
        y.push(p.label.ok_or(MetaError::Unlabelled(i))?.index());
        x.push(p.values);
    }
    Ok((x, y))
}

fn indices_by_class(pool: &LabeledPool) -> Result<[Vec<usize>; 3], MetaError> {
    let mut by_class: [Vec<usize>; 3] = Default::default();
    for (i, p) in pool.profiles.iter().enumerate() {
        by_class[p.label.ok_or(MetaError::Unlabelled(i))?.index()].push(i);
    }
    Ok(by_class)
}

/// Random undersampling of every class down to the smallest class count.
/// Selected profiles keep their original relative order.
pub fn rebalance(pool: &LabeledPool, seed: u64) -> Result<LabeledPool, MetaError> {
    let mut by_class = indices_by_class(pool)?;
    if let Some(l) = DiagnosisLabel::ALL.into_iter().find(|l| by_class[l.index()].is_empty()) {
        return Err(MetaError::MissingClass(l));
    }
    let n_min = by_class.iter().map(Vec::len).min().unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = Vec::with_capacity(3 * n_min);
    for idx in &mut by_class {
        idx.shuffle(&mut rng);
        keep.extend_from_slice(&idx[..n_min]);
    }
    keep.sort_unstable();
    Ok(pool.subset(&keep))
}

/// Stratified random split; `train_fraction` of every class goes to the
/// first pool (rounded to nearest).
pub fn split_pool(pool: &LabeledPool, train_fraction: f64, seed: u64) -> Result<(LabeledPool, LabeledPool), MetaError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(MetaError::Partition(format!("train fraction must lie in (0, 1), got {train_fraction}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for mut idx in indices_by_class(pool)? {
        idx.shuffle(&mut rng);
        let n_train = (idx.len() as f64 * train_fraction).round() as usize;
        train.extend_from_slice(&idx[..n_train]);
        test.extend_from_slice(&idx[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((pool.subset(&train), pool.subset(&test)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Configuration {
    /// Leave one dataset out: train on the rest, test on it.
    CrossDatasetSmall,
    /// Per seed, a random half of the datasets is held out for testing.
    CrossDatasetRandom,
    /// Train on one family's pools, test on the other's, both directions.
    CrossFamily,
    /// Pool everything, random stratified train/test split.
    PooledSplit,
}

impl Configuration {
    pub const ALL: [Configuration; 4] = [
        Configuration::CrossDatasetSmall,
        Configuration::CrossDatasetRandom,
        Configuration::CrossFamily,
        Configuration::PooledSplit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Configuration::CrossDatasetSmall => "cross_dataset_small",
            Configuration::CrossDatasetRandom => "cross_dataset_random",
            Configuration::CrossFamily => "cross_family",
            Configuration::PooledSplit => "pooled_split",
        }
    }
}

impl std::fmt::Display for Configuration {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Configuration {
    type Err = MetaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| MetaError::UnknownConfiguration(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub params: TreeParams,
    pub seeds: Vec<u64>,
    /// Datasets held out in turn by `cross_dataset_small`; empty means every dataset.
    #[serde(default)]
    pub held_out: Vec<String>,
    /// Undersample test pools to equal class counts as well.
    #[serde(default = "yes")]
    pub rebalance_test: bool,
    #[serde(default = "default_fraction")]
    pub train_fraction: f64,
}

fn yes() -> bool {
    true
}

fn default_fraction() -> f64 {
    0.75
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            params: TreeParams::default(),
            seeds: vec![0, 1, 2, 3, 4],
            held_out: Vec::new(),
            rebalance_test: true,
            train_fraction: default_fraction(),
        }
    }
}

fn datasets_of(pool: &LabeledPool) -> Vec<String> {
    let set: BTreeSet<&str> = pool.provenance.iter().map(|p| p.dataset.as_str()).collect();
    set.into_iter().map(str::to_string).collect()
}

fn require_classes(pool: &LabeledPool, what: &str) -> Result<(), MetaError> {
    let counts = pool.class_counts();
    match DiagnosisLabel::ALL.into_iter().find(|l| counts[l.index()] == 0) {
        Some(l) => Err(MetaError::Partition(format!("{what} has no {l} profiles"))),
        None => Ok(()),
    }
}

/// Rebalance, train and evaluate one train/test assembly.
fn fit_and_evaluate(
    train: &LabeledPool,
    test: &LabeledPool,
    opts: &RunOptions,
    seed: u64,
    mut meta: RunMeta,
) -> Result<EvalReport, MetaError> {
    require_classes(train, &format!("training pool `{}`", meta.train))?;
    require_classes(test, &format!("test pool `{}`", meta.test))?;
    let train = rebalance(train, seed)?;
    let test = if opts.rebalance_test {
        rebalance(test, seed)?
    } else {
        test.clone()
    };
    let tree = train_tree(&train, &opts.params, seed)?;
    meta.seed = seed;
    meta.n_train = train.len();
    meta.tree_depth = tree.depth;
    meta.tree_leaves = tree.n_leaves;
    evaluate(&tree, &test, meta)
}

/// Assembles the train/test pools of `config` and runs
/// rebalance, train and evaluate once per seed and per assembly.
pub fn run_configuration(
    pool: &LabeledPool,
    config: Configuration,
    opts: &RunOptions,
) -> Result<Vec<EvalReport>, MetaError> {
    if pool.is_empty() {
        return Err(MetaError::EmptyPool);
    }
    if opts.seeds.is_empty() {
        return Err(MetaError::Partition("no seeds given".into()));
    }
    let meta = |train: String, test: String| RunMeta {
        configuration: config.name().to_string(),
        train,
        test,
        ..RunMeta::default()
    };
    let mut reports = Vec::new();
    match config {
        Configuration::CrossDatasetSmall => {
            let all = datasets_of(pool);
            let held: Vec<String> = if opts.held_out.is_empty() { all.clone() } else { opts.held_out.clone() };
            for h in &held {
                if !all.contains(h) {
                    return Err(MetaError::Partition(format!("no pool for held-out dataset `{h}`")));
                }
                if all.len() < 2 {
                    return Err(MetaError::Partition("need at least two datasets".into()));
                }
                let train = pool.filter(|p| &p.dataset != h);
                let test = pool.filter(|p| &p.dataset == h);
                for &seed in &opts.seeds {
                    let m = meta(format!("all but {h}"), h.clone());
                    reports.push(fit_and_evaluate(&train, &test, opts, seed, m)?);
                }
            }
        }
        Configuration::CrossDatasetRandom => {
            let all = datasets_of(pool);
            if all.len() < 2 {
                return Err(MetaError::Partition("need at least two datasets".into()));
            }
            for &seed in &opts.seeds {
                let mut names = all.clone();
                names.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
                let mut test_names = names.split_off(names.len() - all.len() / 2);
                test_names.sort();
                let train = pool.filter(|p| !test_names.contains(&p.dataset));
                let test = pool.filter(|p| test_names.contains(&p.dataset));
                let m = meta(
                    names.iter().map(String::as_str).collect::<BTreeSet<_>>().into_iter().collect::<Vec<_>>().join("+"),
                    test_names.join("+"),
                );
                reports.push(fit_and_evaluate(&train, &test, opts, seed, m)?);
            }
        }
        Configuration::CrossFamily => {
            for (from, to) in [(Family::Gbt, Family::Mlp), (Family::Mlp, Family::Gbt)] {
                let train = pool.filter(|p| p.family == from);
                let test = pool.filter(|p| p.family == to);
                if train.is_empty() || test.is_empty() {
                    return Err(MetaError::Partition(format!("need both {from} and {to} pools")));
                }
                for &seed in &opts.seeds {
                    let m = meta(from.to_string(), to.to_string());
                    reports.push(fit_and_evaluate(&train, &test, opts, seed, m)?);
                }
            }
        }
        Configuration::PooledSplit => {
            for &seed in &opts.seeds {
                let (train, test) = split_pool(pool, opts.train_fraction, seed)?;
                let pct = (opts.train_fraction * 100.0).round();
                let m = meta(format!("pooled {pct}%"), format!("pooled {}%", 100.0 - pct));
                reports.push(fit_and_evaluate(&train, &test, opts, seed, m)?);
            }
        }
    }
    Ok(reports)
}

/// Metrics after muting the `n_removed` least important features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationStep {
    pub n_removed: usize,
    /// Feature muted at this step; `None` for the full-feature baseline.
    pub removed: Option<Feature>,
    pub importance: f64,
    pub accuracy: MeanStd,
    pub precision: [MeanStd; 3],
    pub recall: [MeanStd; 3],
}

impl AblationStep {
    pub fn n_remaining(&self) -> usize {
        N_FEATURES - self.n_removed
    }

    pub const CSV_HEADER: &'static str = "n_removed,n_remaining,removed,importance,accuracy_mean,accuracy_std,\
precision_DataMixedUp,precision_GoodPrediction,precision_WeakModel,\
recall_DataMixedUp,recall_GoodPrediction,recall_WeakModel";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
            self.n_removed,
            self.n_remaining(),
            self.removed.map_or("", |f| f.name()),
            self.importance,
            self.accuracy.mean,
            self.accuracy.std,
            self.precision[0].mean,
            self.precision[1].mean,
            self.precision[2].mean,
            self.recall[0].mean,
            self.recall[1].mean,
            self.recall[2].mean
        )
    }
}

/// Seed of the reference tree that fixes the removal order.
pub const REFERENCE_SEED: u64 = 0;

fn mute(pool: &LabeledPool, muted: &[Feature]) -> LabeledPool {
    let mut out = pool.clone();
    for p in &mut out.profiles {
        for f in muted {
            p.values[f.index()] = 0.0;
        }
    }
    out
}

/// Mutes features one at a time from least to most important (importance
/// from a reference tree on the full rebalanced pool), retraining on a
/// stratified split for every seed. Returns `N_FEATURES + 1` steps.
pub fn ablation(pool: &LabeledPool, opts: &RunOptions) -> Result<Vec<AblationStep>, MetaError> {
    if opts.seeds.is_empty() {
        return Err(MetaError::Partition("no seeds given".into()));
    }
    let reference = train_tree(&rebalance(pool, REFERENCE_SEED)?, &opts.params, REFERENCE_SEED)?;
    let mut order = feature_importance(&reference);
    // stable: equal importances keep feature order
    order.sort_by(|a, b| a.1.total_cmp(&b.1));

    let splits: Vec<(LabeledPool, LabeledPool)> = opts
        .seeds
        .iter()
        .map(|&s| split_pool(pool, opts.train_fraction, s))
        .collect::<Result<_, _>>()?;
    let mut steps = Vec::with_capacity(N_FEATURES + 1);
    for n_removed in 0..=N_FEATURES {
        let muted: Vec<Feature> = order[..n_removed].iter().map(|(f, _)| *f).collect();
        let mut reports = Vec::with_capacity(opts.seeds.len());
        for (&seed, (train, test)) in opts.seeds.iter().zip(&splits) {
            let m = RunMeta {
                configuration: format!("ablation_{n_removed}"),
                train: "pooled".into(),
                test: "pooled".into(),
                ..RunMeta::default()
            };
            reports.push(fit_and_evaluate(&mute(train, &muted), &mute(test, &muted), opts, seed, m)?);
        }
        let s = super::eval::summarize(&reports);
        let removed = n_removed.checked_sub(1).map(|i| order[i]);
        steps.push(AblationStep {
            n_removed,
            removed: removed.map(|(f, _)| f),
            importance: removed.map_or(0.0, |(_, v)| v),
            accuracy: s.accuracy,
            precision: s.precision,
            recall: s.recall,
        });
    }
    Ok(steps)
}
