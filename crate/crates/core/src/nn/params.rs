//! Named parameter storage shared by the tape, the optimizer, and
//! checkpointing. Parameters are `Arc`ed so a tape can alias them without
//! copying; the optimizer uses copy-on-write to step.

use std::collections::HashMap;
use std::sync::Arc;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

pub type ParamId = usize;

/// Cloning is cheap on the value side: tensors are shared until someone
/// writes through [`ParamStore::value_mut`], so a clone makes a good
/// starting snapshot for independent training runs.
#[derive(Default, Clone)]
pub struct ParamStore {
    names: Vec<String>,
    values: Vec<Arc<Array2<f64>>>,
    grads: Vec<Array2<f64>>,
    trainable: Vec<bool>,
    index: HashMap<String, ParamId>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Register a parameter. Names are unique; re-registering panics since
    /// it always indicates a model construction bug.
    pub fn def(&mut self, name: &str, value: Array2<f64>) -> ParamId {
        self.def_inner(name, value, true)
    }

    /// Register a frozen parameter: it participates in forward passes but
    /// the optimizer and gradient clipping leave it untouched.
    pub fn def_frozen(&mut self, name: &str, value: Array2<f64>) -> ParamId {
        self.def_inner(name, value, false)
    }

    fn def_inner(&mut self, name: &str, value: Array2<f64>, trainable: bool) -> ParamId {
        assert!(
            !self.index.contains_key(name),
            "duplicate parameter name: {name}"
        );
        let id = self.values.len();
        self.names.push(name.to_string());
        self.grads.push(Array2::zeros(value.dim()));
        self.values.push(Arc::new(value));
        self.trainable.push(trainable);
        self.index.insert(name.to_string(), id);
        id
    }

    pub fn is_trainable(&self, id: ParamId) -> bool {
        self.trainable[id]
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Total scalar count across all parameters.
    pub fn scalar_count(&self) -> usize {
        self.values.iter().map(|v| v.len()).sum()
    }

    pub fn value(&self, id: ParamId) -> &Array2<f64> {
        &self.values[id]
    }

    pub(crate) fn value_arc(&self, id: ParamId) -> &Arc<Array2<f64>> {
        &self.values[id]
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Array2<f64> {
        Arc::make_mut(&mut self.values[id])
    }

    pub fn grad(&self, id: ParamId) -> &Array2<f64> {
        &self.grads[id]
    }

    pub fn accumulate_grad(&mut self, id: ParamId, contribution: &Array2<f64>) {
        self.grads[id] += contribution;
    }

    pub fn zero_grads(&mut self) {
        for g in &mut self.grads {
            g.fill(0.0);
        }
    }

    /// Nudge one coordinate in place (finite-difference probes).
    pub fn perturb(&mut self, id: ParamId, row: usize, col: usize, delta: f64) {
        self.value_mut(id)[[row, col]] += delta;
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &str, &Array2<f64>)> {
        self.names
            .iter()
            .enumerate()
            .map(|(i, n)| (i, n.as_str(), self.values[i].as_ref()))
    }

    /// Names in registration order; this order is the checkpoint layout.
    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(String::as_str)
    }

    /// Global L2 norm over the gradients of trainable parameters.
    pub fn grad_global_norm(&self) -> f64 {
        self.grads
            .iter()
            .zip(&self.trainable)
            .filter(|(_, &t)| t)
            .map(|(g, _)| g.iter().map(|x| x * x).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }
}

/// Rescale trainable gradients so their global L2 norm is at most
/// `max_norm`. Returns the norm before clipping.
pub fn clip_global_norm(store: &mut ParamStore, max_norm: f64) -> f64 {
    let norm = store.grad_global_norm();
    if norm > max_norm && norm > 0.0 {
        let scale = max_norm / norm;
        for (g, &t) in store.grads.iter_mut().zip(&store.trainable) {
            if t {
                g.mapv_inplace(|x| x * scale);
            }
        }
    }
    norm
}

/// Adam moment coefficients. Weight decay is decoupled (applied directly to
/// the weights, scaled by the learning rate, outside the moment estimates).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamParams {
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub weight_decay: f64,
}

fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_epsilon() -> f64 {
    1e-8
}

impl Default for AdamParams {
    fn default() -> Self {
        AdamParams {
            beta1: default_beta1(),
            beta2: default_beta2(),
            epsilon: default_epsilon(),
            weight_decay: 0.0,
        }
    }
}

/// Adam with bias correction. Moment buffers are keyed by [`ParamId`], so an
/// optimizer instance is tied to the store it was built from.
pub struct Adam {
    params: AdamParams,
    m: Vec<Array2<f64>>,
    v: Vec<Array2<f64>>,
    t: u64,
}

impl Adam {
    pub fn new(store: &ParamStore, params: AdamParams) -> Self {
        let m = store.values.iter().map(|v| Array2::zeros(v.dim())).collect();
        let v = store.values.iter().map(|v| Array2::zeros(v.dim())).collect();
        Adam { params, m, v, t: 0 }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    /// One update from the gradients currently in `store`. The caller owns
    /// zeroing gradients between steps.
    pub fn step(&mut self, store: &mut ParamStore, learning_rate: f64) {
        assert_eq!(self.m.len(), store.len(), "optimizer/store mismatch");
        self.t += 1;
        let t = self.t as i32;
        let AdamParams {
            beta1,
            beta2,
            epsilon,
            weight_decay,
        } = self.params;
        let bc1 = 1.0 - beta1.powi(t);
        let bc2 = 1.0 - beta2.powi(t);
        for id in 0..store.len() {
            if !store.trainable[id] {
                continue;
            }
            let g = store.grads[id].clone();
            let m = &mut self.m[id];
            let v = &mut self.v[id];
            ndarray::Zip::from(&mut *m).and(&g).for_each(|m, &g| {
                *m = beta1 * *m + (1.0 - beta1) * g;
            });
            ndarray::Zip::from(&mut *v).and(&g).for_each(|v, &g| {
                *v = beta2 * *v + (1.0 - beta2) * g * g;
            });
            let theta = store.value_mut(id);
            ndarray::Zip::from(&mut *theta).and(&*m).and(&*v).for_each(|t, &m, &v| {
                let mhat = m / bc1;
                let vhat = v / bc2;
                *t -= learning_rate * mhat / (vhat.sqrt() + epsilon);
            });
            if weight_decay > 0.0 {
                theta.mapv_inplace(|t| t - learning_rate * weight_decay * t);
            }
        }
    }
}
