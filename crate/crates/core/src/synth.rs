//! Seeded synthetic binary datasets with known geometry.
//!
//! Besides the usual toy shapes this module provides the controllable-overlap
//! generator, whose ambiguous region is known exactly, and two stand-ins that
//! mimic the shape of the small tabular benchmarks (row counts, class balance,
//! dimensionality, missing cells) when the real files are not available.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::data::{Dataset, RowId};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn named(rows: &[Vec<f64>], labels: Vec<u8>, names: &[&str]) -> Dataset {
    let n_features = rows.first().map_or(names.len(), Vec::len);
    let flat = rows.iter().flatten().copied().collect();
    let ids = (0..labels.len() as u64).map(RowId).collect();
    let names = names.iter().map(|s| s.to_string()).collect();
    Dataset::from_flat(flat, n_features, labels, ids, names).expect("generator output is valid")
}

/// Two Gaussian blobs centred at (∓2, 0), linearly separable: points closer
/// than `margin` to the line x = 0 are redrawn.
pub fn blobs(n: usize, margin: f64, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let label = (i % 2) as u8;
        let cx = if label == 0 { -2.0 } else { 2.0 };
        loop {
            let x = cx + normal.sample(&mut r);
            let y = normal.sample(&mut r);
            let on_side = if label == 0 { x < -margin } else { x > margin };
            if on_side {
                rows.push(vec![x, y]);
                labels.push(label);
                break;
            }
        }
    }
    named(&rows, labels, &["x", "y"])
}

/// Separable blobs with a fraction of labels flipped; returns the flip mask.
pub fn noisy_blobs(n: usize, flip_fraction: f64, seed: u64) -> (Dataset, Vec<bool>) {
    let clean = blobs(n, 0.5, seed);
    let mut r = rng(seed ^ 0x5eed);
    let n_flip = (flip_fraction * n as f64).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut r);
    let mut flipped = vec![false; n];
    order[..n_flip].iter().for_each(|&i| flipped[i] = true);
    let labels = clean
        .labels()
        .iter()
        .zip(&flipped)
        .map(|(&l, &f)| if f { 1 - l } else { l })
        .collect();
    let d = Dataset::from_flat(
        clean.flat_features().to_vec(),
        2,
        labels,
        clean.row_ids().to_vec(),
        clean.feature_names().to_vec(),
    )
    .expect("same shape");
    (d, flipped)
}

/// Uniform square, label = (x > 0) xor (y > 0).
pub fn xor(n: usize, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let x: f64 = r.random_range(-1.0..1.0);
        let y: f64 = r.random_range(-1.0..1.0);
        rows.push(vec![x, y]);
        labels.push(((x > 0.0) ^ (y > 0.0)) as u8);
    }
    named(&rows, labels, &["x", "y"])
}

/// Concentric rings: class 0 at radius 0.5, class 1 at radius 1.0.
pub fn circles(n: usize, noise: f64, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let normal = Normal::new(0.0, noise).unwrap();
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let label = (i % 2) as u8;
        let radius = if label == 0 { 0.5 } else { 1.0 };
        let t: f64 = r.random_range(0.0..std::f64::consts::TAU);
        rows.push(vec![
            radius * t.cos() + normal.sample(&mut r),
            radius * t.sin() + normal.sample(&mut r),
        ]);
        labels.push(label);
    }
    named(&rows, labels, &["x", "y"])
}

/// The boundary of [`curved`]: y = 0.8 sin(2.5 x).
pub fn curved_boundary(x: f64) -> f64 {
    0.8 * (2.5 * x).sin()
}

/// Noise-free curved boundary on [-2, 2]²: label 1 above `curved_boundary`.
/// Also returns each point's vertical distance to the boundary.
pub fn curved(n: usize, seed: u64) -> (Dataset, Vec<f64>) {
    let mut r = rng(seed);
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let mut dist = Vec::with_capacity(n);
    for _ in 0..n {
        let x: f64 = r.random_range(-2.0..2.0);
        let y: f64 = r.random_range(-2.0..2.0);
        let gap = y - curved_boundary(x);
        rows.push(vec![x, y]);
        labels.push((gap > 0.0) as u8);
        dist.push(gap.abs());
    }
    (named(&rows, labels, &["x", "y"]), dist)
}

/// Output of [`overlap`]: the dataset plus, per row, whether it lies in the
/// region whose label is only recoverable from the dominant latent direction.
#[derive(Debug, Clone)]
pub struct OverlapSample {
    pub dataset: Dataset,
    pub ambiguous: Vec<bool>,
}

/// Lower edge of the ambiguous band in the `b` coordinate of [`overlap`].
pub const OVERLAP_BAND_START: f64 = 0.0;

/// Controllable-overlap generator.
///
/// Five observed features: three noisy copies of a latent `a ~ N(0, 1)`
/// (so that after standardization `a` is the top principal direction), then
/// `b` and `c`, both uniform on [-2, 2].
///
/// * Outside the band (`b < OVERLAP_BAND_START`) the label is
///   `c > curved_boundary(b)`, a wavy boundary that needs model capacity.
/// * Inside the band the label is `a > 0`.
///
/// The generator is noise free, so a strong model fits it. Once the top
/// principal component (≈ `a`) is dropped, band points become 50/50 mixed
/// while points outside the band stay separable: the band is the known
/// ambiguous region of the projected space.
pub fn overlap(n: usize, seed: u64) -> OverlapSample {
    let mut r = rng(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let copy_noise = Normal::new(0.0, 0.1).unwrap();
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let mut ambiguous = Vec::with_capacity(n);
    for _ in 0..n {
        let a: f64 = normal.sample(&mut r);
        let b: f64 = r.random_range(-2.0..2.0);
        let c: f64 = r.random_range(-2.0..2.0);
        let in_band = b >= OVERLAP_BAND_START;
        let label = if in_band { a > 0.0 } else { c > curved_boundary(b) };
        let mut row: Vec<f64> = (0..3).map(|_| a + copy_noise.sample(&mut r)).collect();
        row.push(b);
        row.push(c);
        rows.push(row);
        labels.push(label as u8);
        ambiguous.push(in_band);
    }
    OverlapSample {
        dataset: named(&rows, labels, &["a1", "a2", "a3", "b", "c"]),
        ambiguous,
    }
}

/// Stand-in shaped like the banknote benchmark: 1371 rows (761 / 610), four
/// correlated features, a mildly curved boundary with a clear margin, and
/// about 1.2% flipped labels.
pub fn banknote_like(seed: u64) -> Dataset {
    let mut r = rng(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let (n0, n1) = (761usize, 610usize);
    let mut rows = Vec::with_capacity(n0 + n1);
    let mut labels = Vec::with_capacity(n0 + n1);
    for label in [0u8, 1] {
        let target = if label == 0 { n0 } else { n1 };
        let mut made = 0;
        while made < target {
            let u: f64 = normal.sample(&mut r) * 1.6;
            let v: f64 = normal.sample(&mut r) * 1.4;
            let score = u + 0.9 * v - 0.08 * v * v - 0.3;
            if (score < 0.0) != (label == 0) || score.abs() < 0.8 {
                continue;
            }
            let w = -0.8 * v + 0.5 * normal.sample(&mut r);
            let e = 0.45 * u - 0.3 * w + 0.6 * normal.sample(&mut r);
            rows.push(vec![2.0 * u + 0.4, 5.0 * v + 1.9, 4.0 * w + 1.4, 2.0 * e - 1.2]);
            labels.push(label);
            made += 1;
        }
    }
    let n = rows.len();
    let n_flip = (0.012 * n as f64).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut r);
    for &i in &order[..n_flip] {
        labels[i] = 1 - labels[i];
    }
    // interleave the classes so row order carries no label information
    let mut perm: Vec<usize> = (0..n).collect();
    rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut r);
    let rows: Vec<Vec<f64>> = perm.iter().map(|&i| rows[i].clone()).collect();
    let labels = perm.iter().map(|&i| labels[i]).collect();
    named(&rows, labels, &["variance", "skewness", "curtosis", "entropy"])
}

/// Stand-in shaped like the water-potability benchmark: 3276 rows
/// (1998 / 1278), nine features, heavy class overlap, and missing cells in
/// three columns (`None`).
pub fn water_like(seed: u64) -> (Vec<String>, Vec<Vec<Option<f64>>>, Vec<u8>) {
    let mut r = rng(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let names = [
        "ph",
        "hardness",
        "solids",
        "chloramines",
        "sulfate",
        "conductivity",
        "organic_carbon",
        "trihalomethanes",
        "turbidity",
    ];
    let means = [7.0, 196.0, 22000.0, 7.1, 333.0, 426.0, 14.3, 66.4, 3.97];
    let sds = [1.6, 33.0, 8800.0, 1.6, 41.0, 81.0, 3.3, 16.0, 0.78];
    let missing_rate = [0.15, 0.0, 0.0, 0.0, 0.24, 0.0, 0.0, 0.05, 0.0];
    let (n0, n1) = (1998usize, 1278usize);
    let mut rows = Vec::with_capacity(n0 + n1);
    let mut labels = Vec::with_capacity(n0 + n1);
    for label in [0u8, 1] {
        let target = if label == 0 { n0 } else { n1 };
        let mut made = 0;
        while made < target {
            let z: Vec<f64> = (0..9).map(|_| normal.sample(&mut r)).collect();
            // potable water sits in a band of ph/sulfate/chloramines
            let s = 0.9 * (z[0] * z[0] - 1.0) + 0.7 * z[4] * z[3] - 0.5 * z[6] + 0.3 * z[2];
            let p1 = 1.0 / (1.0 + (-(s - 0.9)).exp());
            let draw: f64 = r.random();
            if (draw < p1) != (label == 1) {
                continue;
            }
            let row: Vec<Option<f64>> = (0..9)
                .map(|j| {
                    let v = means[j] + sds[j] * z[j];
                    if r.random::<f64>() < missing_rate[j] {
                        None
                    } else {
                        Some(v)
                    }
                })
                .collect();
            rows.push(row);
            labels.push(label);
            made += 1;
        }
    }
    let n = rows.len();
    let mut perm: Vec<usize> = (0..n).collect();
    rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut r);
    let rows = perm.iter().map(|&i| rows[i].clone()).collect();
    let labels = perm.iter().map(|&i| labels[i]).collect();
    (names.iter().map(|s| s.to_string()).collect(), rows, labels)
}

/// CSV text for a table with optional cells; `None` is written as an empty
/// cell. The label column is named `label_name`.
pub fn table_to_csv(
    names: &[String],
    rows: &[Vec<Option<f64>>],
    labels: &[u8],
    label_name: &str,
) -> String {
    let mut out = names.join(",");
    out.push(',');
    out.push_str(label_name);
    out.push('\n');
    for (row, l) in rows.iter().zip(labels) {
        for v in row {
            if let Some(v) = v {
                out.push_str(&format!("{v:?}"));
            }
            out.push(',');
        }
        out.push_str(&l.to_string());
        out.push('\n');
    }
    out
}

/// [`banknote_like`] as CSV text with label column `class`.
pub fn banknote_like_csv(seed: u64) -> String {
    let d = banknote_like(seed);
    let rows: Vec<Vec<Option<f64>>> = d.rows().map(|r| r.iter().copied().map(Some).collect()).collect();
    table_to_csv(d.feature_names(), &rows, d.labels(), "class")
}

/// [`water_like`] as CSV text with label column `potability`.
pub fn water_like_csv(seed: u64) -> String {
    let (names, rows, labels) = water_like(seed);
    table_to_csv(&names, &rows, &labels, "potability")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blobs_are_separable_with_margin() {
        let d = blobs(200, 0.5, 1);
        for (row, &l) in d.rows().zip(d.labels()) {
            if l == 0 {
                assert!(row[0] < -0.5);
            } else {
                assert!(row[0] > 0.5);
            }
        }
    }

    #[test]
    fn noisy_blobs_flip_exact_count() {
        let (d, flipped) = noisy_blobs(200, 0.1, 2);
        assert_eq!(flipped.iter().filter(|&&f| f).count(), 20);
        let clean = blobs(200, 0.5, 2);
        for i in 0..200 {
            assert_eq!(d.label(i) != clean.label(i), flipped[i]);
        }
    }

    #[test]
    fn stand_in_shapes() {
        let b = banknote_like(0);
        assert_eq!(b.n_rows(), 1371);
        assert_eq!(b.n_features(), 4);
        let counts = b.class_counts();
        assert!((counts[0] as i64 - 761).abs() <= 20, "{counts:?}");
        let (names, rows, labels) = water_like(0);
        assert_eq!((names.len(), rows.len()), (9, 3276));
        assert_eq!(labels.iter().filter(|&&l| l == 0).count(), 1998);
        let complete = rows.iter().filter(|r| r.iter().all(Option::is_some)).count();
        assert!(complete > 1500 && complete < 2500, "{complete}");
    }

    #[test]
    fn overlap_band_labels_follow_latent_sign() {
        let s = overlap(500, 3);
        for i in 0..500 {
            let row = s.dataset.row(i);
            assert_eq!(s.ambiguous[i], row[3] >= OVERLAP_BAND_START);
            if s.ambiguous[i] {
                let a_hat = (row[0] + row[1] + row[2]) / 3.0;
                if a_hat.abs() > 0.5 {
                    assert_eq!(s.dataset.label(i), (a_hat > 0.0) as u8);
                }
            }
        }
    }
}
