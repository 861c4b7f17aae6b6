//! One-hidden-layer perceptron: tanh hidden units, sigmoid output, binary
//! cross-entropy, trained with full-batch Adam. One iteration is one pass
//! over the whole training set.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::gbt::sigmoid;
use super::ModelError;
use crate::data::Dataset;

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub hidden_size: usize,
    pub n_iterations: usize,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_learning_rate() -> f64 {
    0.01
}

impl MlpConfig {
    pub fn new(hidden_size: usize, n_iterations: usize) -> Self {
        Self {
            hidden_size,
            n_iterations,
            learning_rate: default_learning_rate(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.hidden_size == 0 || self.n_iterations == 0 {
            return Err(ModelError::InvalidConfig(format!(
                "MLP needs hidden_size >= 1 and n_iterations >= 1, got {} units and {} iterations",
                self.hidden_size, self.n_iterations
            )));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(ModelError::InvalidConfig(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

/// Weights stored row-major: `w_hidden[h * n_in + j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub n_inputs: usize,
    pub w_hidden: Vec<f64>,
    pub b_hidden: Vec<f64>,
    pub w_out: Vec<f64>,
    pub b_out: f64,
}

impl MlpModel {
    fn hidden(&self, x: &[f64], out: &mut [f64]) {
        for (h, o) in out.iter_mut().enumerate() {
            let w = &self.w_hidden[h * self.n_inputs..(h + 1) * self.n_inputs];
            let z: f64 = w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + self.b_hidden[h];
            *o = z.tanh();
        }
    }

    /// Log-odds of class 1.
    pub fn raw_score(&self, x: &[f64]) -> f64 {
        let mut a = vec![0.0; self.b_hidden.len()];
        self.hidden(x, &mut a);
        a.iter().zip(&self.w_out).map(|(a, w)| a * w).sum::<f64>() + self.b_out
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [&mut f64], grads: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - BETA1.powi(self.t);
        let c2 = 1.0 - BETA2.powi(self.t);
        for (k, p) in params.iter_mut().enumerate() {
            let g = grads[k];
            self.m[k] = BETA1 * self.m[k] + (1.0 - BETA1) * g;
            self.v[k] = BETA2 * self.v[k] + (1.0 - BETA2) * g * g;
            **p -= lr * (self.m[k] / c1) / ((self.v[k] / c2).sqrt() + EPS);
        }
    }
}

pub(crate) fn fit(d: &Dataset, cfg: &MlpConfig) -> Result<MlpModel, ModelError> {
    cfg.validate()?;
    let n_in = d.n_features();
    let hsize = cfg.hidden_size;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let bound_h = (6.0 / (n_in + hsize) as f64).sqrt();
    let bound_o = (6.0 / (hsize + 1) as f64).sqrt();
    let mut model = MlpModel {
        n_inputs: n_in,
        w_hidden: (0..hsize * n_in).map(|_| rng.random_range(-bound_h..bound_h)).collect(),
        b_hidden: (0..hsize).map(|_| rng.random_range(-bound_h..bound_h)).collect(),
        w_out: (0..hsize).map(|_| rng.random_range(-bound_o..bound_o)).collect(),
        b_out: 0.0,
    };

    let n = d.n_rows() as f64;
    let n_params = hsize * n_in + 2 * hsize + 1;
    let mut adam = Adam::new(n_params);
    let mut act = vec![0.0; hsize];
    let mut grads = vec![0.0; n_params];
    for iteration in 0..cfg.n_iterations {
        grads.iter_mut().for_each(|g| *g = 0.0);
        let mut loss = 0.0;
        {
            let (g_wh, rest) = grads.split_at_mut(hsize * n_in);
            let (g_bh, rest) = rest.split_at_mut(hsize);
            let (g_wo, g_bo) = rest.split_at_mut(hsize);
            for (x, &label) in d.rows().zip(d.labels()) {
                model.hidden(x, &mut act);
                let z: f64 =
                    act.iter().zip(&model.w_out).map(|(a, w)| a * w).sum::<f64>() + model.b_out;
                let y = f64::from(label);
                // log(1 + e^z) - y z, computed without overflow
                loss += z.max(0.0) + (-z.abs()).exp().ln_1p() - y * z;
                let delta = (sigmoid(z) - y) / n;
                g_bo[0] += delta;
                for h in 0..hsize {
                    g_wo[h] += delta * act[h];
                    let dh = delta * model.w_out[h] * (1.0 - act[h] * act[h]);
                    g_bh[h] += dh;
                    let row = &mut g_wh[h * n_in..(h + 1) * n_in];
                    for (g, xv) in row.iter_mut().zip(x) {
                        *g += dh * xv;
                    }
                }
            }
        }
        let loss = loss / n;
        if !loss.is_finite() || grads.iter().any(|g| !g.is_finite()) {
            return Err(ModelError::Diverged {
                iteration,
                loss,
                detail: format!("hidden_size={hsize}, learning_rate={}", cfg.learning_rate),
            });
        }
        let mut params: Vec<&mut f64> = model
            .w_hidden
            .iter_mut()
            .chain(model.b_hidden.iter_mut())
            .chain(model.w_out.iter_mut())
            .chain(std::iter::once(&mut model.b_out))
            .collect();
        adam.step(&mut params, &grads, cfg.learning_rate);
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_matches_finite_differences() {
        // one Adam step moves each weight by ~lr * sign(grad); compare the
        // direction of movement with a finite-difference gradient of the loss
        let rows = vec![vec![0.5, -1.0], vec![-0.3, 0.8], vec![1.2, 0.1], vec![-1.0, -0.7]];
        let d = Dataset::from_rows(&rows, vec![1, 0, 1, 0]).unwrap();
        let cfg = MlpConfig {
            hidden_size: 3,
            n_iterations: 1,
            learning_rate: 1e-6,
            seed: 4,
        };
        let start = fit(
            &d,
            &MlpConfig {
                learning_rate: 1e-300,
                ..cfg.clone()
            },
        )
        .unwrap();
        let after = fit(&d, &cfg).unwrap();
        let loss = |m: &MlpModel| -> f64 {
            d.rows()
                .zip(d.labels())
                .map(|(x, &y)| {
                    let p = sigmoid(m.raw_score(x));
                    if y == 1 {
                        -p.ln()
                    } else {
                        -(1.0 - p).ln()
                    }
                })
                .sum::<f64>()
                / 4.0
        };
        for k in 0..start.w_out.len() {
            let mut plus = start.clone();
            plus.w_out[k] += 1e-6;
            let mut minus = start.clone();
            minus.w_out[k] -= 1e-6;
            let fd = (loss(&plus) - loss(&minus)) / 2e-6;
            let moved = after.w_out[k] - start.w_out[k];
            if fd.abs() > 1e-6 {
                assert_eq!(moved.signum(), -fd.signum(), "weight {k}: fd {fd}, moved {moved}");
            }
        }
    }

    #[test]
    fn zero_iterations_rejected() {
        let cfg = MlpConfig::new(4, 0);
        assert!(matches!(cfg.validate(), Err(ModelError::InvalidConfig(_))));
    }

    #[test]
    fn huge_learning_rate_reports_divergence_or_finishes_finite() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64 * 1e150]).collect();
        let d = Dataset::from_rows(&rows, (0..20).map(|i| (i % 2) as u8).collect()).unwrap();
        let cfg = MlpConfig {
            hidden_size: 2,
            n_iterations: 50,
            learning_rate: 1e200,
            seed: 0,
        };
        match fit(&d, &cfg) {
            Err(ModelError::Diverged { .. }) => {}
            Ok(m) => assert!(m.w_out.iter().all(|w| w.is_finite())),
            Err(e) => panic!("unexpected error {e}"),
        }
    }
}
