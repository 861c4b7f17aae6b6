use rayon::prelude::*;

use super::features::{
    ally_opponent_distances, confidence, local_confusion, local_set_cardinality, rate_dist,
};
use super::{Feature, ProfileError, ProfileVector, ABSENT, N_FEATURES};
use crate::data::{Dataset, RowId};
use crate::models::{label_from_proba, TrainedModel};
use crate::neighborhood::{build_mst_sampled, default_k, KnnIndex, MstGraph, MST_MAX_ROWS};

/// Everything needed to profile query points against one trained model and
/// the (standardized) split it was trained on. Training-set predictions,
/// confidences and leaf signatures are computed once up front.
pub struct ProfileContext<'a> {
    model: &'a TrainedModel,
    train: &'a Dataset,
    index: KnnIndex<'a>,
    mst: MstGraph,
    k: usize,
    train_pred: Vec<u8>,
    train_conf: Vec<f64>,
    train_leaves: Option<Vec<Vec<usize>>>,
}

impl<'a> ProfileContext<'a> {
    /// `k` defaults to [`default_k`] of the training size. `mst_seed` is only
    /// used when the training set exceeds [`MST_MAX_ROWS`].
    pub fn new(
        model: &'a TrainedModel,
        train: &'a Dataset,
        k: Option<usize>,
        mst_seed: u64,
    ) -> Result<Self, ProfileError> {
        let index = KnnIndex::new(train)?;
        let mst = build_mst_sampled(train, MST_MAX_ROWS, mst_seed)?;
        let proba = model.predict_dataset(train)?;
        let train_pred = proba.iter().map(|&p| label_from_proba(p)).collect();
        let train_conf = proba.iter().map(|&p| confidence(p)).collect::<Result<_, _>>()?;
        let train_leaves = match model.gbt() {
            Ok(g) => Some(train.rows().map(|r| g.leaf_signature(r)).collect()),
            Err(_) => None,
        };
        Ok(Self {
            model,
            train,
            index,
            mst,
            k: k.unwrap_or_else(|| default_k(train.n_rows())),
            train_pred,
            train_conf,
            train_leaves,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn mst(&self) -> &MstGraph {
        &self.mst
    }

    pub fn train_predictions(&self) -> &[u8] {
        &self.train_pred
    }

    /// Profile of an external point `x` with ground-truth label `y`.
    pub fn extract(&self, row_id: RowId, x: &[f64], y: u8) -> Result<ProfileVector, ProfileError> {
        let neighbors = self.index.query(x, self.k)?;
        let truth = self.train.labels();
        let p0 = self.model.predict_proba(x)?;
        let y_pred = label_from_proba(p0);

        let cm = local_confusion(&neighbors, truth, &self.train_pred)?;
        let knn_conf =
            neighbors.iter().map(|n| self.train_conf[n.position]).sum::<f64>() / neighbors.len() as f64;
        let (ally_gt, opp_gt) = ally_opponent_distances(y, &neighbors, truth);
        let (ally_pred, opp_pred) = ally_opponent_distances(y_pred, &neighbors, &self.train_pred);
        let mst_frac = self.mst.query_fraction(x, y, self.mst.labels())?;
        let lsc = local_set_cardinality(x, y_pred, self.train, &self.train_pred);
        let prox = match &self.train_leaves {
            Some(leaves) => {
                let sig = self.model.gbt()?.leaf_signature(x);
                let shared: usize = neighbors
                    .iter()
                    .map(|n| leaves[n.position].iter().zip(&sig).filter(|(a, b)| a == b).count())
                    .sum();
                shared as f64 / (neighbors.len() * sig.len()) as f64
            }
            None => ABSENT,
        };

        let mut values = [0.0; N_FEATURES];
        let mut set = |f: Feature, v: f64| values[f.index()] = v;
        set(Feature::LocalAccuracy, cm.accuracy);
        set(Feature::RTp, cm.r_tp);
        set(Feature::RTn, cm.r_tn);
        set(Feature::RFp, cm.r_fp);
        set(Feature::RFn, cm.r_fn);
        set(Feature::Conf, confidence(p0)?);
        set(Feature::KnnPredConf, knn_conf);
        set(Feature::DAllyGt, ally_gt.unwrap_or(ABSENT));
        set(Feature::DOppGt, opp_gt.unwrap_or(ABSENT));
        set(Feature::RateDistGt, rate_dist(ally_gt, opp_gt)?);
        set(Feature::DAllyPred, ally_pred.unwrap_or(ABSENT));
        set(Feature::DOppPred, opp_pred.unwrap_or(ABSENT));
        set(Feature::RateDistPred, rate_dist(ally_pred, opp_pred)?);
        set(Feature::MstFracGt, mst_frac);
        set(Feature::Proximity, prox);
        set(Feature::LocalSetCardinalityPred, lsc.cardinality);
        Ok(ProfileVector {
            row_id,
            values,
            lsc_no_opponent: lsc.no_opponent,
            label: None,
        })
    }

    /// Profiles for every row of `queries`, in row order. Runs in parallel;
    /// the output does not depend on scheduling.
    pub fn extract_all(&self, queries: &Dataset) -> Result<Vec<ProfileVector>, ProfileError> {
        (0..queries.n_rows())
            .into_par_iter()
            .map(|i| self.extract(queries.row_id(i), queries.row(i), queries.label(i)))
            .collect()
    }
}
