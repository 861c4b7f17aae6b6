use serde::{Deserialize, Serialize};

use super::curve::{accuracy_curve, project_split, underfit_check, UnderfitGuard, UnderfitVerdict};
use super::pool::{Generator, LabeledPool, Provenance};
use super::LabelGenError;
use crate::data::{pca_fit, split_random, standardize, DataError, Dataset};
use crate::meta_features::{DiagnosisLabel, ProfileContext};
use crate::models::{label_from_proba, ModelConfig, TrainedModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenOptions {
    /// Dataset name recorded in provenance.
    pub dataset: String,
    /// Seed of the train/test split.
    pub seed: u64,
    /// Neighbourhood size; the training-size default when `None`.
    pub k: Option<usize>,
}

impl GenOptions {
    pub fn new(dataset: impl Into<String>, seed: u64) -> Self {
        Self {
            dataset: dataset.into(),
            seed,
            k: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct WeakOutcome {
    pub pool: LabeledPool,
    pub weak_test_acc: f64,
    pub base_test_acc: f64,
    /// Weakening did not lower test accuracy.
    pub ineffective: bool,
}

#[derive(Debug, Clone)]
pub struct MixedOutcome {
    pub pool: LabeledPool,
    pub verdict: UnderfitVerdict,
    pub variance_removed: f64,
}

fn standardized_halves(easy: &Dataset, seed: u64) -> Result<(Dataset, Dataset), LabelGenError> {
    let halves = split_random(easy, 0.5, seed)?;
    let (train, scaler) = standardize(&halves.part_a)?;
    let test = scaler.transform(&halves.part_b)?;
    Ok((train, test))
}

/// Profiles of every test row, labelled `faulty` where `model` is wrong and
/// GoodPrediction where it is right.
fn label_test_rows(
    model: &TrainedModel,
    train: &Dataset,
    test: &Dataset,
    faulty: DiagnosisLabel,
    generator: Generator,
    opts: &GenOptions,
) -> Result<LabeledPool, LabelGenError> {
    let ctx = ProfileContext::new(model, train, opts.k, opts.seed)?;
    let proba = model.predict_dataset(test)?;
    let profiles = ctx
        .extract_all(test)?
        .into_iter()
        .zip(&proba)
        .enumerate()
        .map(|(i, (p, &p0))| {
            let wrong = label_from_proba(p0) != test.label(i);
            p.with_label(if wrong { faulty } else { DiagnosisLabel::GoodPrediction })
        })
        .collect::<Vec<_>>();
    let prov = Provenance {
        dataset: opts.dataset.clone(),
        family: model.family(),
        generator,
        config: model.config.describe(),
    };
    let provenance = vec![prov; profiles.len()];
    Ok(LabeledPool { profiles, provenance })
}

/// Trains `weak` on one half of the easy set and labels the other half:
/// WeakModel where the weak model errs, GoodPrediction elsewhere.
pub fn gen_weak_labels(
    easy: &Dataset,
    base: &ModelConfig,
    weak: &ModelConfig,
    opts: &GenOptions,
) -> Result<WeakOutcome, LabelGenError> {
    if !weak.is_weaker_than(base) {
        return Err(LabelGenError::NotWeaker {
            weak: weak.describe(),
            base: base.describe(),
        });
    }
    let (train, test) = standardized_halves(easy, opts.seed)?;
    let weak_model = weak.train(&train)?;
    let base_model = base.train(&train)?;
    let weak_test_acc = weak_model.accuracy(&test)?;
    let base_test_acc = base_model.accuracy(&test)?;
    let ineffective = weak_test_acc >= base_test_acc;
    if ineffective {
        log::warn!(
            "{}: weak model ({}) is no worse than base ({}) on test: {weak_test_acc:.4} vs {base_test_acc:.4}",
            opts.dataset,
            weak.describe(),
            base.describe()
        );
    }
    let pool = label_test_rows(&weak_model, &train, &test, DiagnosisLabel::WeakModel, Generator::Weak, opts)?;
    Ok(WeakOutcome {
        pool,
        weak_test_acc,
        base_test_acc,
        ineffective,
    })
}

/// Drops the top `n_drop` principal components (fitted on the training half)
/// and labels the test half: DataMixedUp where the model trained in the
/// reduced space errs, GoodPrediction elsewhere. Refuses when the accuracy
/// curve does not show underfitting.
pub fn gen_mixed_labels(
    easy: &Dataset,
    cfg: &ModelConfig,
    n_drop: usize,
    guard: &UnderfitGuard,
    opts: &GenOptions,
) -> Result<MixedOutcome, LabelGenError> {
    let p = easy.n_features();
    if n_drop == 0 || n_drop >= p {
        return Err(DataError::DropOutOfRange { n_drop, n_features: p }.into());
    }
    let (train, test) = standardized_halves(easy, opts.seed)?;
    let pca = pca_fit(&train)?;
    let curve = accuracy_curve(&train, &test, &pca, cfg, n_drop)?;
    let verdict = underfit_check(&curve, guard)?;
    if !verdict.passed {
        return Err(LabelGenError::Refused(Box::new(verdict)));
    }
    let (tr, te) = project_split(&pca, &train, &test, n_drop)?;
    let model = cfg.train(&tr)?;
    let pool = label_test_rows(&model, &tr, &te, DiagnosisLabel::DataMixedUp, Generator::Cut, opts)?;
    Ok(MixedOutcome {
        pool,
        verdict,
        variance_removed: pca.dropped_variance_fraction(n_drop),
    })
}

/// Test-accuracy fall that makes a cut count as mixing the data when the
/// number of dropped components is chosen automatically.
pub const AUTO_DROP_MIN_TEST_DROP: f64 = 0.05;

/// Full accuracy curve (0 to `p − 1` dropped components) on the same halves
/// [`gen_mixed_labels`] uses, and the smallest cut whose test accuracy falls
/// by more than [`AUTO_DROP_MIN_TEST_DROP`] while the guard passes.
pub fn choose_n_drop(
    easy: &Dataset,
    cfg: &ModelConfig,
    guard: &UnderfitGuard,
    opts: &GenOptions,
) -> Result<(Option<usize>, Vec<super::CurvePoint>), LabelGenError> {
    let (train, test) = standardized_halves(easy, opts.seed)?;
    let pca = pca_fit(&train)?;
    let curve = accuracy_curve(&train, &test, &pca, cfg, easy.n_features() - 1)?;
    Ok((super::select_n_drop(&curve, guard, AUTO_DROP_MIN_TEST_DROP), curve))
}
