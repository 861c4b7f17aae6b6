use misdiag::data::RowId;
use misdiag::label_gen::{Generator, LabeledPool, Provenance};
use misdiag::meta_classifier::{
    ablation, evaluate, extract_rules, feature_importance, rebalance, run_configuration, split_pool, summarize,
    train_tree, Configuration, MeanStd, MetaError, MetaNode, MetaTree, RunMeta, RunOptions, TreeParams,
};
use misdiag::meta_features::{DiagnosisLabel, Feature, ProfileVector, N_FEATURES};
use misdiag::models::Family;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn profile(id: u64, values: [f64; N_FEATURES], label: DiagnosisLabel) -> ProfileVector {
    ProfileVector {
        row_id: RowId(id),
        values,
        lsc_no_opponent: false,
        label: Some(label),
    }
}

fn prov(dataset: &str, family: Family) -> Provenance {
    Provenance {
        dataset: dataset.into(),
        family,
        generator: Generator::Weak,
        config: String::new(),
    }
}

/// Labels driven by two features plus label noise, spread over datasets
/// and families so every configuration can be assembled.
fn random_pool(n: usize, noise: f64, seed: u64) -> LabeledPool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool = LabeledPool::default();
    for i in 0..n {
        let mut v = [0.0; N_FEATURES];
        for x in v.iter_mut() {
            *x = rng.random_range(0.0..1.0);
        }
        let mut l = if v[4] > 0.6 {
            DiagnosisLabel::WeakModel
        } else if v[9] < 0.4 {
            DiagnosisLabel::DataMixedUp
        } else {
            DiagnosisLabel::GoodPrediction
        };
        if rng.random_bool(noise) {
            l = DiagnosisLabel::ALL[rng.random_range(0..3)];
        }
        pool.profiles.push(profile(i as u64, v, l));
        let family = if i % 2 == 0 { Family::Gbt } else { Family::Mlp };
        pool.provenance.push(prov(["a", "b", "c"][i % 3], family));
    }
    pool
}

fn pool_with_counts(counts: [usize; 3]) -> LabeledPool {
    let mut pool = LabeledPool::default();
    let mut id = 0;
    for (c, &n) in counts.iter().enumerate() {
        for _ in 0..n {
            let mut v = [0.0; N_FEATURES];
            v[0] = id as f64;
            pool.profiles.push(profile(id, v, DiagnosisLabel::ALL[c]));
            pool.provenance.push(prov("a", Family::Gbt));
            id += 1;
        }
    }
    pool
}

/// Feature 0 alone separates the classes via two thresholds.
fn separable_pool() -> LabeledPool {
    let mut pool = LabeledPool::default();
    for i in 0..60u64 {
        let c = (i % 3) as usize;
        let mut v = [0.5; N_FEATURES];
        v[0] = 2.0 * c as f64 + (i as f64) / 100.0;
        pool.profiles.push(profile(i, v, DiagnosisLabel::ALL[c]));
        pool.provenance.push(prov("a", Family::Gbt));
    }
    pool
}

fn params(max_depth: usize, min_leaf: usize) -> TreeParams {
    TreeParams { max_depth, min_leaf }
}

#[test]
fn two_threshold_pool_gives_depth_two_perfect_tree() {
    let pool = separable_pool();
    let tree = train_tree(&pool, &TreeParams::default(), 0).unwrap();
    assert_eq!(tree.depth, 2);
    assert_eq!(tree.n_leaves, 3);
    let report = evaluate(&tree, &pool, RunMeta::default()).unwrap();
    assert_eq!(report.accuracy, 1.0);
    assert_eq!(report.precision, [1.0; 3]);
    assert_eq!(report.recall, [1.0; 3]);

    let rules = extract_rules(&tree, 0);
    assert!(rules.len() <= 4);
    for r in &rules {
        assert!((1..=2).contains(&r.conditions.len()), "{r}");
        assert!(r.conditions.iter().all(|c| c.feature == "local accuracy"));
        assert_eq!(r.confidence, 1.0);
    }
    let imp = feature_importance(&tree);
    assert_eq!(imp[0], (Feature::LocalAccuracy, 1.0));
}

#[test]
fn single_split_tree_has_unit_importance() {
    let mut pool = LabeledPool::default();
    for i in 0..20u64 {
        let mut v = [0.0; N_FEATURES];
        v[Feature::RFn.index()] = i as f64;
        let l = if i < 10 { DiagnosisLabel::GoodPrediction } else { DiagnosisLabel::WeakModel };
        pool.profiles.push(profile(i, v, l));
        pool.provenance.push(prov("a", Family::Gbt));
    }
    let tree = train_tree(&pool, &TreeParams::default(), 3).unwrap();
    assert_eq!(tree.n_leaves, 2);
    for (f, v) in feature_importance(&tree) {
        assert_eq!(v, if f == Feature::RFn { 1.0 } else { 0.0 });
    }
    let rules = extract_rules(&tree, 0);
    assert_eq!(rules[1].to_string(), "WM: (rFN>9.5)");
}

#[test]
fn threshold_ties_route_left() {
    let tree = train_tree(&separable_pool(), &TreeParams::default(), 0).unwrap();
    let MetaNode::Split { feature, threshold, left, .. } = tree.nodes[0] else {
        panic!("root is a leaf");
    };
    let mut v = [0.5; N_FEATURES];
    v[feature] = threshold;
    let mut i = left;
    while let MetaNode::Split { feature, threshold, left, right, .. } = &tree.nodes[i] {
        i = if v[*feature] <= *threshold { *left } else { *right };
    }
    assert_eq!(tree.leaf_of(&v), i);
}

#[test]
fn rule_replay_matches_leaf_counts() {
    let pool = random_pool(600, 0.15, 5);
    let tree = train_tree(&pool, &params(8, 3), 1).unwrap();
    let rules = extract_rules(&tree, 0);
    assert_eq!(rules.len(), tree.n_leaves);
    for r in &rules {
        let mut counts = [0usize; 3];
        for p in pool.profiles.iter().filter(|p| r.matches(&p.values)) {
            counts[p.label.unwrap().index()] += 1;
        }
        let MetaNode::Leaf { counts: leaf_counts, .. } = tree.nodes[r.leaf] else {
            panic!("rule points at a split");
        };
        assert_eq!(counts, leaf_counts);
        assert_eq!(counts.iter().sum::<usize>(), r.support);
    }
    // support sorted descending
    assert!(rules.windows(2).all(|w| w[0].support >= w[1].support));
}

#[test]
fn leaf_labels_are_first_argmax() {
    let tree = train_tree(&random_pool(400, 0.4, 2), &params(6, 5), 0).unwrap();
    for n in &tree.nodes {
        if let MetaNode::Leaf { counts, label } = n {
            let max = *counts.iter().max().unwrap();
            let first = counts.iter().position(|&c| c == max).unwrap();
            assert_eq!(label.index(), first);
        }
    }
}

#[test]
fn duplicated_pool_gives_identical_tree() {
    let pool = random_pool(300, 0.2, 8);
    let mut doubled = pool.clone();
    doubled.extend(pool.clone());
    let p = params(12, 1);
    let a = train_tree(&pool, &p, 4).unwrap();
    let b = train_tree(&doubled, &p, 4).unwrap();
    let splits = |t: &MetaTree| -> Vec<(usize, f64)> {
        t.nodes
            .iter()
            .filter_map(|n| match n {
                MetaNode::Split { feature, threshold, .. } => Some((*feature, *threshold)),
                MetaNode::Leaf { .. } => None,
            })
            .collect()
    };
    assert_eq!(splits(&a), splits(&b));
    assert_eq!(a.n_leaves, b.n_leaves);
}

#[test]
fn training_is_deterministic() {
    let pool = random_pool(300, 0.2, 1);
    let a = train_tree(&pool, &TreeParams::default(), 7).unwrap().to_json().unwrap();
    let b = train_tree(&pool, &TreeParams::default(), 7).unwrap().to_json().unwrap();
    assert_eq!(a, b);
    let back = MetaTree::from_json(&a).unwrap();
    assert_eq!(back.to_json().unwrap(), a);
}

#[test]
fn tree_respects_bounds() {
    let pool = random_pool(800, 0.3, 3);
    for (depth, min_leaf) in [(1, 1), (3, 5), (6, 20), (18, 5)] {
        let tree = train_tree(&pool, &params(depth, min_leaf), 0).unwrap();
        assert!(tree.depth <= depth);
        assert!(tree.n_leaves <= 1 << tree.depth);
        for n in &tree.nodes {
            if let MetaNode::Leaf { counts, .. } = n {
                assert!(counts.iter().sum::<usize>() >= min_leaf);
            }
        }
    }
    assert!(matches!(
        train_tree(&pool, &params(0, 1), 0),
        Err(MetaError::InvalidParams(_))
    ));
    assert!(matches!(
        train_tree(&LabeledPool::default(), &TreeParams::default(), 0),
        Err(MetaError::EmptyPool)
    ));
}

#[test]
fn rebalance_undersamples_to_minority() {
    let pool = pool_with_counts([1000, 500, 250]);
    let a = rebalance(&pool, 1).unwrap();
    assert_eq!(a.class_counts(), [250, 250, 250]);
    let b = rebalance(&pool, 2).unwrap();
    assert_eq!(b.class_counts(), [250, 250, 250]);
    let ids = |p: &LabeledPool| p.profiles.iter().map(|p| p.row_id).collect::<Vec<_>>();
    assert_ne!(ids(&a), ids(&b));
    assert_eq!(ids(&a), ids(&rebalance(&pool, 1).unwrap()));

    let balanced = pool_with_counts([40, 40, 40]);
    assert_eq!(ids(&rebalance(&balanced, 9).unwrap()), ids(&balanced));

    let missing = pool_with_counts([10, 0, 10]);
    assert!(matches!(
        rebalance(&missing, 0),
        Err(MetaError::MissingClass(DiagnosisLabel::GoodPrediction))
    ));
}

#[test]
fn split_is_stratified_and_disjoint() {
    let pool = pool_with_counts([400, 200, 100]);
    let (train, test) = split_pool(&pool, 0.75, 3).unwrap();
    assert_eq!(train.class_counts(), [300, 150, 75]);
    assert_eq!(test.class_counts(), [100, 50, 25]);
    let mut ids: Vec<_> = train.profiles.iter().chain(&test.profiles).map(|p| p.row_id).collect();
    ids.sort();
    ids.dedup();
    assert_eq!(ids.len(), 700);
}

#[test]
fn constant_predictor_on_balanced_pool() {
    let tree = MetaTree {
        nodes: vec![MetaNode::Leaf {
            counts: [0, 1, 0],
            label: DiagnosisLabel::GoodPrediction,
        }],
        feature_names: vec![],
        params: TreeParams::default(),
        seed: 0,
        depth: 0,
        n_leaves: 1,
        n_train: 1,
    };
    let r = evaluate(&tree, &pool_with_counts([30, 30, 30]), RunMeta::default()).unwrap();
    assert_eq!(r.recall, [0.0, 1.0, 0.0]);
    assert!((r.accuracy - 1.0 / 3.0).abs() < 1e-15);
    // classes never predicted get precision 0
    assert_eq!(r.precision[0], 0.0);
    assert!((r.precision[1] - 1.0 / 3.0).abs() < 1e-15);
    assert!(evaluate(&tree, &LabeledPool::default(), RunMeta::default()).is_err());
}

#[test]
fn precision_recall_match_brute_force() {
    let train = random_pool(500, 0.25, 11);
    let test = random_pool(400, 0.25, 12);
    let tree = train_tree(&train, &params(5, 5), 0).unwrap();
    let r = evaluate(&tree, &test, RunMeta::default()).unwrap();
    let pairs: Vec<(usize, usize)> = test
        .profiles
        .iter()
        .map(|p| (p.label.unwrap().index(), tree.predict(p).unwrap().index()))
        .collect();
    for c in 0..3 {
        let tp = pairs.iter().filter(|&&(t, p)| t == c && p == c).count() as f64;
        let pred = pairs.iter().filter(|&&(_, p)| p == c).count() as f64;
        let actual = pairs.iter().filter(|&&(t, _)| t == c).count() as f64;
        assert_eq!(r.precision[c], if pred == 0.0 { 0.0 } else { tp / pred });
        assert_eq!(r.recall[c], tp / actual);
        assert_eq!(r.confusion[c].iter().sum::<usize>() as f64, actual);
    }
    let correct = pairs.iter().filter(|(t, p)| t == p).count() as f64;
    assert_eq!(r.accuracy, correct / 400.0);
    assert_eq!(r.n_test, 400);
}

#[test]
fn non_finite_profile_rejected() {
    let tree = train_tree(&separable_pool(), &TreeParams::default(), 0).unwrap();
    let mut v = [0.0; N_FEATURES];
    v[3] = f64::NAN;
    assert!(matches!(tree.predict_values(&v), Err(MetaError::NonFinite { .. })));
}

#[test]
fn population_std_summary() {
    let m = MeanStd::of(&[0.5, 1.0]);
    assert_eq!(m.mean, 0.75);
    assert_eq!(m.std, 0.25);
    assert_eq!(m.to_string(), "0.750±0.250");
}

#[test]
fn configurations() {
    let pool = random_pool(900, 0.1, 21);
    let opts = RunOptions {
        params: params(8, 5),
        ..RunOptions::default()
    };
    let pooled = run_configuration(&pool, Configuration::PooledSplit, &opts).unwrap();
    assert_eq!(pooled.len(), 5);
    let s = summarize(&pooled);
    assert_eq!(s.n_runs, 5);
    assert!(s.accuracy.mean > 0.7, "{s}");

    let fam = run_configuration(&pool, Configuration::CrossFamily, &opts).unwrap();
    assert_eq!(fam.len(), 10);
    assert_eq!(fam[0].meta.train, "gbt");
    assert_eq!(fam[9].meta.train, "mlp");

    let lodo = run_configuration(&pool, Configuration::CrossDatasetSmall, &opts).unwrap();
    assert_eq!(lodo.len(), 15);
    assert!(lodo.iter().all(|r| r.meta.train == format!("all but {}", r.meta.test)));

    let random = run_configuration(&pool, Configuration::CrossDatasetRandom, &opts).unwrap();
    assert_eq!(random.len(), 5);
    assert!(random.iter().all(|r| !r.meta.test.is_empty() && !r.meta.test.contains('+')));

    let gbt_only = pool.filter(|p| p.family == Family::Gbt);
    assert!(matches!(
        run_configuration(&gbt_only, Configuration::CrossFamily, &opts),
        Err(MetaError::Partition(_))
    ));
    let bad_held = RunOptions {
        held_out: vec!["zzz".into()],
        ..opts.clone()
    };
    assert!(matches!(
        run_configuration(&pool, Configuration::CrossDatasetSmall, &bad_held),
        Err(MetaError::Partition(_))
    ));
    assert!(matches!(
        "table_row_9".parse::<Configuration>(),
        Err(MetaError::UnknownConfiguration(_))
    ));
    assert_eq!("cross_family".parse::<Configuration>().unwrap(), Configuration::CrossFamily);
}

#[test]
fn ablation_collapses_to_prior() {
    let pool = random_pool(900, 0.05, 4);
    let opts = RunOptions {
        params: params(8, 5),
        seeds: vec![0, 1],
        ..RunOptions::default()
    };
    let steps = ablation(&pool, &opts).unwrap();
    assert_eq!(steps.len(), N_FEATURES + 1);
    assert!(steps[0].removed.is_none());
    // both informative features are the most important, so they go last
    let last_two: Vec<Feature> = steps[N_FEATURES - 1..].iter().map(|s| s.removed.unwrap()).collect();
    assert!(last_two.contains(&Feature::RFn) && last_two.contains(&Feature::RateDistGt), "{last_two:?}");
    // noise features removed first: accuracy holds
    assert!(steps[N_FEATURES - 2].accuracy.mean >= steps[0].accuracy.mean - 0.05);
    // nothing left: a single leaf on a balanced test pool
    assert!((steps[N_FEATURES].accuracy.mean - 1.0 / 3.0).abs() < 1e-12);
    // order is increasing importance
    assert!(steps[1..].windows(2).all(|w| w[0].importance <= w[1].importance));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn predictions_agree_with_rules(seed in 0u64..10_000, depth in 1usize..10) {
        let train = random_pool(200, 0.3, seed);
        let tree = train_tree(&train, &params(depth, 2), seed).unwrap();
        let rules = extract_rules(&tree, 0);
        for p in random_pool(100, 0.3, seed + 1).profiles.iter().chain(&train.profiles) {
            let matching: Vec<_> = rules.iter().filter(|r| r.matches(&p.values)).collect();
            prop_assert_eq!(matching.len(), 1);
            prop_assert_eq!(matching[0].label, tree.predict(p).unwrap());
            prop_assert_eq!(matching[0].leaf, tree.leaf_of(&p.values));
        }
    }
}
