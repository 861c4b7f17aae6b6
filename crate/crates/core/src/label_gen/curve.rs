use serde::{Deserialize, Serialize};

use super::LabelGenError;
use crate::data::{standardize, Dataset, PcaModel};
use crate::models::ModelConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub n_drop: usize,
    pub variance_removed: f64,
    pub train_acc: f64,
    pub test_acc: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UnderfitGuard {
    pub gap_max: f64,
    pub drop_min: f64,
}

impl Default for UnderfitGuard {
    fn default() -> Self {
        Self {
            gap_max: 0.05,
            drop_min: 0.02,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Train and test accuracy fall together: the cut model underfits.
    Underfit,
    /// Test accuracy falls away from training accuracy.
    Overfit,
    /// Training accuracy barely moved; the cut removed too little.
    NoEffect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnderfitVerdict {
    pub passed: bool,
    pub verdict: Verdict,
    /// `train_acc − test_acc` at the operating point.
    pub gap: f64,
    /// Fall in training accuracy from the uncut point to the operating point.
    pub train_drop: f64,
    pub test_drop: f64,
    pub curve: Vec<CurvePoint>,
}

impl UnderfitVerdict {
    pub fn guidance(&self) -> &'static str {
        match self.verdict {
            Verdict::Underfit => "ok",
            Verdict::Overfit => "overfitting: choose a weaker base model",
            Verdict::NoEffect => "the cut leaves accuracy unchanged: drop more components",
        }
    }
}

impl std::fmt::Display for UnderfitVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} (gap {:.4}, train drop {:.4}, test drop {:.4})",
            self.guidance(),
            self.gap,
            self.train_drop,
            self.test_drop
        )
    }
}

/// Judges the last point of `curve` against its first (uncut) point.
pub fn underfit_check(curve: &[CurvePoint], guard: &UnderfitGuard) -> Result<UnderfitVerdict, LabelGenError> {
    if curve.len() < 2 {
        return Err(LabelGenError::MalformedCurve(format!("{} point(s), need at least 2", curve.len())));
    }
    if curve[0].variance_removed != 0.0 {
        return Err(LabelGenError::MalformedCurve("first point must have no variance removed".into()));
    }
    if curve.windows(2).any(|w| w[1].variance_removed < w[0].variance_removed) {
        return Err(LabelGenError::MalformedCurve("variance axis is not monotone".into()));
    }
    let in_unit = |v: f64| (0.0..=1.0).contains(&v);
    if curve.iter().any(|c| !in_unit(c.train_acc) || !in_unit(c.test_acc) || !in_unit(c.variance_removed)) {
        return Err(LabelGenError::MalformedCurve("values outside [0, 1]".into()));
    }
    let (first, op) = (curve[0], curve[curve.len() - 1]);
    let gap = op.train_acc - op.test_acc;
    let train_drop = first.train_acc - op.train_acc;
    let verdict = if gap > guard.gap_max {
        Verdict::Overfit
    } else if train_drop < guard.drop_min {
        Verdict::NoEffect
    } else {
        Verdict::Underfit
    };
    Ok(UnderfitVerdict {
        passed: verdict == Verdict::Underfit,
        verdict,
        gap,
        train_drop,
        test_drop: first.test_acc - op.test_acc,
        curve: curve.to_vec(),
    })
}

/// Train/test split projected onto the components left after dropping the
/// top `n_drop`, each re-standardized with statistics of the training part.
pub(crate) fn project_split(
    pca: &PcaModel,
    train: &Dataset,
    test: &Dataset,
    n_drop: usize,
) -> Result<(Dataset, Dataset), LabelGenError> {
    let (tr, scaler) = standardize(&pca.project(train, n_drop)?)?;
    let te = scaler.transform(&pca.project(test, n_drop)?)?;
    Ok((tr, te))
}

/// Train and test accuracy of `cfg` for every cut from 0 to `max_drop`
/// components, with PCA fitted on `train`.
pub fn accuracy_curve(
    train: &Dataset,
    test: &Dataset,
    pca: &PcaModel,
    cfg: &ModelConfig,
    max_drop: usize,
) -> Result<Vec<CurvePoint>, LabelGenError> {
    (0..=max_drop)
        .map(|n_drop| {
            let (tr, te) = project_split(pca, train, test, n_drop)?;
            let m = cfg.train(&tr)?;
            Ok(CurvePoint {
                n_drop,
                variance_removed: pca.dropped_variance_fraction(n_drop),
                train_acc: m.accuracy(&tr)?,
                test_acc: m.accuracy(&te)?,
            })
        })
        .collect()
}

/// Smallest cut whose test accuracy falls by more than `min_test_drop` while
/// the guard passes.
pub fn select_n_drop(curve: &[CurvePoint], guard: &UnderfitGuard, min_test_drop: f64) -> Option<usize> {
    (1..curve.len()).find_map(|end| {
        let v = underfit_check(&curve[..=end], guard).ok()?;
        (v.passed && v.test_drop > min_test_drop).then_some(curve[end].n_drop)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(n_drop: usize, variance_removed: f64, train_acc: f64, test_acc: f64) -> CurvePoint {
        CurvePoint {
            n_drop,
            variance_removed,
            train_acc,
            test_acc,
        }
    }

    #[test]
    fn underfit_passes() {
        let c = [pt(0, 0.0, 0.99, 0.98), pt(2, 0.6, 0.85, 0.83)];
        let v = underfit_check(&c, &UnderfitGuard::default()).unwrap();
        assert!(v.passed);
        assert!((v.gap - 0.02).abs() < 1e-12);
    }

    #[test]
    fn overfit_fails() {
        let c = [pt(0, 0.0, 1.0, 0.98), pt(2, 0.6, 1.0, 0.70)];
        let v = underfit_check(&c, &UnderfitGuard::default()).unwrap();
        assert!(!v.passed);
        assert_eq!(v.verdict, Verdict::Overfit);
        assert!(v.guidance().contains("weaker base model"));
    }

    #[test]
    fn malformed_curves() {
        let g = UnderfitGuard::default();
        assert!(underfit_check(&[pt(0, 0.0, 1.0, 1.0)], &g).is_err());
        assert!(underfit_check(&[pt(0, 0.0, 1.0, 1.0), pt(2, 0.5, 0.9, 0.9), pt(3, 0.4, 0.9, 0.9)], &g).is_err());
        assert!(underfit_check(&[pt(1, 0.2, 1.0, 1.0), pt(2, 0.5, 0.9, 0.9)], &g).is_err());
    }

    #[test]
    fn select_smallest_passing_cut() {
        let c = [
            pt(0, 0.0, 0.99, 0.98),
            pt(1, 0.3, 0.97, 0.95),
            pt(2, 0.6, 0.85, 0.83),
            pt(3, 0.8, 0.70, 0.69),
        ];
        assert_eq!(select_n_drop(&c, &UnderfitGuard::default(), 0.05), Some(2));
    }
}
