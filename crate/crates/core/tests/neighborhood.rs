use misdiag::data::{Dataset, RowId};
use misdiag::neighborhood::{build_mst, build_mst_kruskal, KnnIndex};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_dataset(n: usize, p: usize, seed: u64, grid: bool) -> Dataset {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (0..p)
                .map(|_| {
                    if grid {
                        // coarse grid makes exact distance ties common
                        f64::from(r.random_range(0..4i32))
                    } else {
                        r.random_range(-3.0..3.0)
                    }
                })
                .collect()
        })
        .collect();
    let labels = (0..n).map(|_| r.random_range(0..2u8)).collect();
    Dataset::from_rows(&rows, labels).unwrap()
}

/// Full sort of every (squared distance, row id) pair.
fn brute_knn(d: &Dataset, x: &[f64], k: usize, exclude: Option<usize>) -> Vec<(u64, f64)> {
    let mut all: Vec<(u64, f64)> = (0..d.n_rows())
        .filter(|&i| Some(i) != exclude)
        .map(|i| {
            let sq: f64 = d.row(i).iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum();
            (d.row_id(i).0, sq.sqrt())
        })
        .collect();
    all.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
    all.truncate(k);
    all
}

#[test]
fn knn_matches_brute_force_on_100_queries() {
    for (seed, grid) in [(1, false), (2, true)] {
        let d = random_dataset(2000, 3, seed, grid);
        let idx = KnnIndex::new(&d).unwrap();
        let mut r = ChaCha8Rng::seed_from_u64(seed + 10);
        for q in 0..100 {
            let k = r.random_range(1..120);
            let (got, want) = if q % 2 == 0 {
                let pos = r.random_range(0..d.n_rows());
                (idx.query_member(pos, k).unwrap(), brute_knn(&d, d.row(pos), k, Some(pos)))
            } else {
                let x: Vec<f64> = (0..3).map(|_| r.random_range(-3.0..3.0)).collect();
                (idx.query(&x, k).unwrap(), brute_knn(&d, &x, k, None))
            };
            let got: Vec<(u64, f64)> = got.iter().map(|n| (n.row_id.0, n.distance)).collect();
            assert_eq!(got, want, "query {q}");
        }
    }
}

#[test]
fn member_query_excludes_self() {
    let d = random_dataset(50, 2, 3, true);
    let idx = KnnIndex::new(&d).unwrap();
    for pos in 0..50 {
        let s = idx.query_member(pos, 49).unwrap();
        assert_eq!(s.len(), 49);
        assert!(s.iter().all(|n| n.position != pos));
    }
}

/// Minimum weight over every spanning tree, enumerating all (n−1)-edge subsets.
fn exhaustive_mst_weight(d: &Dataset) -> f64 {
    let n = d.n_rows();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let w: f64 = d.row(i).iter().zip(d.row(j)).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            edges.push((i, j, w));
        }
    }
    let mut best = f64::INFINITY;
    let mut chosen = Vec::new();
    fn recurse(
        edges: &[(usize, usize, f64)],
        start: usize,
        need: usize,
        n: usize,
        chosen: &mut Vec<usize>,
        best: &mut f64,
    ) {
        if need == 0 {
            // n−1 edges with no cycle span the graph
            let mut comp: Vec<usize> = (0..n).collect();
            for &e in chosen.iter() {
                let (a, b, _) = edges[e];
                let (ca, cb) = (comp[a], comp[b]);
                if ca == cb {
                    return;
                }
                comp.iter_mut().filter(|c| **c == cb).for_each(|c| *c = ca);
            }
            let w: f64 = chosen.iter().map(|&e| edges[e].2).sum();
            *best = best.min(w);
            return;
        }
        for e in start..=edges.len() - need {
            chosen.push(e);
            recurse(edges, e + 1, need - 1, n, chosen, best);
            chosen.pop();
        }
    }
    recurse(&edges, 0, n - 1, n, &mut chosen, &mut best);
    best
}

fn assert_spanning_tree(d: &Dataset, g: &misdiag::neighborhood::MstGraph) {
    let n = d.n_rows();
    let edges = g.edges();
    assert_eq!(edges.len(), n - 1);
    // connected via graph search from node 0
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for &w in g.neighbors_of(v) {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    assert!(seen.iter().all(|&s| s), "not connected");
}

#[test]
fn small_trees_match_exhaustive_minimum() {
    for seed in 0..12 {
        let n = 3 + (seed as usize % 6);
        let d = random_dataset(n, 2, seed, seed % 3 == 0);
        let g = build_mst(&d).unwrap();
        assert_spanning_tree(&d, &g);
        let oracle = exhaustive_mst_weight(&d);
        assert!((g.total_weight() - oracle).abs() < 1e-9, "n={n}: {} vs {oracle}", g.total_weight());
    }
}

#[test]
fn cross_label_edges_counted_from_both_ends() {
    let d = random_dataset(300, 2, 5, false);
    let g = build_mst(&d).unwrap();
    let cross = g
        .edges()
        .iter()
        .filter(|e| d.label(d.position_of(e.a).unwrap()) != d.label(d.position_of(e.b).unwrap()))
        .count();
    let summed: f64 = (0..d.n_rows())
        .map(|i| g.degree(i) as f64 * g.mst_fraction(g.labels(), RowId(i as u64)).unwrap())
        .sum();
    assert!((summed / 2.0 - cross as f64).abs() < 1e-9);
}

#[test]
fn query_insertion_matches_rebuild() {
    let d = random_dataset(120, 3, 8, false);
    let g = build_mst(&d).unwrap();
    let mut r = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..30 {
        let x: Vec<f64> = (0..3).map(|_| r.random_range(-3.0..3.0)).collect();
        let mut rows: Vec<Vec<f64>> = d.rows().map(|r| r.to_vec()).collect();
        rows.push(x.clone());
        let mut labels = d.labels().to_vec();
        labels.push(0);
        let full = build_mst_kruskal(&Dataset::from_rows(&rows, labels).unwrap()).unwrap();
        let q = d.n_rows();
        let mut want: Vec<usize> = full.neighbors_of(q).to_vec();
        want.sort_unstable();
        assert_eq!(g.query_neighbors(&x).unwrap(), want);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]
    #[test]
    fn prim_and_kruskal_agree(seed in 0u64..10_000, n in 2usize..60, grid in any::<bool>()) {
        let d = random_dataset(n, 3, seed, grid);
        let a = build_mst(&d).unwrap();
        let b = build_mst_kruskal(&d).unwrap();
        prop_assert_eq!(a.edges().len(), n - 1);
        prop_assert!((a.total_weight() - b.total_weight()).abs() < 1e-9);
    }

    #[test]
    fn neighbor_sets_well_formed(seed in 0u64..10_000, k in 1usize..40) {
        let d = random_dataset(30, 2, seed, true);
        let idx = KnnIndex::new(&d).unwrap();
        let s = idx.query(&[1.5, 1.5], k).unwrap();
        prop_assert_eq!(s.len(), k.min(30));
        for w in s.neighbors.windows(2) {
            prop_assert!(w[0].distance <= w[1].distance);
            if w[0].distance == w[1].distance {
                prop_assert!(w[0].row_id < w[1].row_id);
            }
        }
        prop_assert!(s.iter().all(|n| n.distance.is_finite() && n.distance >= 0.0));
    }
}
