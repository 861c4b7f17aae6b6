use super::ProfileError;
use crate::data::Dataset;
use crate::models::TrainedModel;
use crate::neighborhood::{euclidean, NeighborSet};

/// `|ŷ − 0.5| / 0.5` for a class-0 probability `ŷ`.
pub fn confidence(y_hat: f64) -> Result<f64, ProfileError> {
    if !(0.0..=1.0).contains(&y_hat) {
        return Err(ProfileError::OutOfRange(y_hat));
    }
    Ok((y_hat - 0.5).abs() / 0.5)
}

/// Confusion rates over a neighbour set, class 1 taken as positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalConfusion {
    pub r_tp: f64,
    pub r_tn: f64,
    pub r_fp: f64,
    pub r_fn: f64,
    pub accuracy: f64,
}

/// `truth` and `predicted` are indexed by row position of the indexed dataset.
pub fn local_confusion(
    neighbors: &NeighborSet,
    truth: &[u8],
    predicted: &[u8],
) -> Result<LocalConfusion, ProfileError> {
    if neighbors.is_empty() {
        return Err(ProfileError::EmptyNeighborhood);
    }
    let mut counts = [[0usize; 2]; 2];
    for n in neighbors.iter() {
        counts[truth[n.position] as usize][predicted[n.position] as usize] += 1;
    }
    let k = neighbors.len() as f64;
    let r_tp = counts[1][1] as f64 / k;
    let r_tn = counts[0][0] as f64 / k;
    Ok(LocalConfusion {
        r_tp,
        r_tn,
        r_fp: counts[0][1] as f64 / k,
        r_fn: counts[1][0] as f64 / k,
        accuracy: r_tp + r_tn,
    })
}

/// Mean distance to neighbours sharing `reference` label (allies) and to
/// the others (opponents). `None` when the group is empty.
pub fn ally_opponent_distances(
    reference: u8,
    neighbors: &NeighborSet,
    labels: &[u8],
) -> (Option<f64>, Option<f64>) {
    let mut sum = [0.0; 2];
    let mut count = [0usize; 2];
    for n in neighbors.iter() {
        let g = usize::from(labels[n.position] != reference);
        sum[g] += n.distance;
        count[g] += 1;
    }
    let mean = |g: usize| (count[g] > 0).then(|| sum[g] / count[g] as f64);
    (mean(0), mean(1))
}

/// `D_ally / (D_ally + D_opp)`. No allies gives 1, no opponents gives 0,
/// and two zero distances give 0.5.
pub fn rate_dist(d_ally: Option<f64>, d_opp: Option<f64>) -> Result<f64, ProfileError> {
    match (d_ally, d_opp) {
        (None, None) => Err(ProfileError::NoDistances),
        (None, Some(_)) => Ok(1.0),
        (Some(_), None) => Ok(0.0),
        (Some(a), Some(o)) if a + o == 0.0 => Ok(0.5),
        (Some(a), Some(o)) => Ok(a / (a + o)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalSet {
    pub cardinality: f64,
    pub no_opponent: bool,
}

/// Fraction of rows of `d` strictly closer to `x` than the nearest row whose
/// label in `labels` differs from `reference`.
pub fn local_set_cardinality(x: &[f64], reference: u8, d: &Dataset, labels: &[u8]) -> LocalSet {
    let dist: Vec<f64> = d.rows().map(|r| euclidean(x, r)).collect();
    let nearest_opp = dist
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l != reference)
        .map(|(&v, _)| v)
        .fold(f64::INFINITY, f64::min);
    if nearest_opp.is_infinite() {
        return LocalSet {
            cardinality: 1.0,
            no_opponent: true,
        };
    }
    let inside = dist.iter().filter(|&&v| v < nearest_opp).count();
    LocalSet {
        cardinality: inside as f64 / d.n_rows() as f64,
        no_opponent: false,
    }
}

/// Mean shared-leaf fraction between `x` and its neighbours. `None` for
/// models that are not tree ensembles.
pub fn proximity(
    model: &TrainedModel,
    x: &[f64],
    neighbors: &NeighborSet,
    d: &Dataset,
) -> Result<Option<f64>, ProfileError> {
    let Some(n_trees) = model.n_trees() else {
        return Ok(None);
    };
    if neighbors.is_empty() {
        return Err(ProfileError::EmptyNeighborhood);
    }
    let mut total = 0usize;
    for n in neighbors.iter() {
        total += model.leaf_comembership(x, d.row(n.position))?;
    }
    Ok(Some(total as f64 / (neighbors.len() * n_trees) as f64))
}
