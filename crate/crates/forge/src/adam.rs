//! Adam with serializable moment estimates.

use std::collections::BTreeMap;

use candle_core::backprop::GradStore;
use candle_core::Tensor;

use crate::checkpoint::NamedArray;
use crate::error::{ForgeError, Result};
use crate::networks::ParamStore;

/// Adam hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AdamConfig {
    /// Step size.
    pub learning_rate: f64,
    /// First-moment decay.
    pub beta1: f64,
    /// Second-moment decay.
    pub beta2: f64,
    /// Denominator offset.
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 2e-5,
            beta1: 0.5,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Optimizer state for one [`ParamStore`].
#[derive(Debug, Clone)]
pub struct Adam {
    config: AdamConfig,
    steps: u64,
    first: BTreeMap<String, Tensor>,
    second: BTreeMap<String, Tensor>,
}

impl Adam {
    /// Zero moments for every parameter in `params`.
    pub fn new(config: AdamConfig, params: &ParamStore) -> Result<Self> {
        let mut first = BTreeMap::new();
        let mut second = BTreeMap::new();
        for (name, var) in params.iter() {
            first.insert(name.clone(), var.zeros_like()?);
            second.insert(name.clone(), var.zeros_like()?);
        }
        Ok(Self {
            config,
            steps: 0,
            first,
            second,
        })
    }

    /// Updates performed so far.
    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Hyperparameters.
    pub fn config(&self) -> &AdamConfig {
        &self.config
    }

    /// Replaces the learning rate, keeping the moments.
    pub fn set_learning_rate(&mut self, lr: f64) {
        self.config.learning_rate = lr;
    }

    /// One update of every parameter that has a gradient in `grads`.
    pub fn step(&mut self, params: &ParamStore, grads: &GradStore) -> Result<()> {
        self.steps += 1;
        let t = self.steps as i32;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            eps,
        } = self.config;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        for (name, var) in params.iter() {
            let Some(g) = grads.get(var.as_tensor()) else {
                continue;
            };
            let g = g.detach();
            let m = self.first.get_mut(name).expect("moment for every parameter");
            let v = self.second.get_mut(name).expect("moment for every parameter");
            *m = (m.affine(beta1, 0.0)? + g.affine(1.0 - beta1, 0.0)?)?.detach();
            *v = (v.affine(beta2, 0.0)? + g.sqr()?.affine(1.0 - beta2, 0.0)?)?.detach();
            let denom = v.affine(1.0 / c2, 0.0)?.sqrt()?.affine(1.0, eps)?;
            let update = m.affine(learning_rate / c1, 0.0)?.div(&denom)?;
            var.set(&var.as_tensor().detach().sub(&update)?)?;
        }
        Ok(())
    }

    /// Moments as named arrays, `{prefix}m.{name}` and `{prefix}v.{name}`.
    pub fn state_arrays(&self, prefix: &str) -> Result<Vec<NamedArray>> {
        let mut out = Vec::with_capacity(2 * self.first.len());
        for (tag, map) in [("m", &self.first), ("v", &self.second)] {
            for (name, t) in map {
                out.push(NamedArray {
                    name: format!("{prefix}{tag}.{name}"),
                    shape: t.dims().to_vec(),
                    data: t.to_dtype(candle_core::DType::F32)?.flatten_all()?.to_vec1::<f32>()?,
                });
            }
        }
        Ok(out)
    }

    /// Restores moments written by [`Adam::state_arrays`] (prefix already stripped).
    pub fn load_state(&mut self, arrays: &[NamedArray], steps: u64) -> Result<()> {
        let mut staged = Vec::with_capacity(arrays.len());
        for a in arrays {
            let (tag, name) = a
                .name
                .split_once('.')
                .ok_or_else(|| ForgeError::CorruptCheckpoint(format!("bad moment name {}", a.name)))?;
            let map = match tag {
                "m" => &self.first,
                "v" => &self.second,
                _ => return Err(ForgeError::CorruptCheckpoint(format!("bad moment name {}", a.name))),
            };
            let old = map
                .get(name)
                .ok_or_else(|| ForgeError::CorruptCheckpoint(format!("moment for unknown parameter {name}")))?;
            if old.dims() != a.shape.as_slice() {
                return Err(ForgeError::CorruptCheckpoint(format!("moment {} has wrong shape", a.name)));
            }
            let t = Tensor::from_slice(&a.data, a.shape.as_slice(), old.device())?.to_dtype(old.dtype())?;
            staged.push((tag == "m", name.to_string(), t));
        }
        if staged.len() != 2 * self.first.len() {
            return Err(ForgeError::CorruptCheckpoint(format!(
                "expected {} moment arrays, found {}",
                2 * self.first.len(),
                staged.len()
            )));
        }
        for (is_first, name, t) in staged {
            let map = if is_first { &mut self.first } else { &mut self.second };
            map.insert(name, t);
        }
        self.steps = steps;
        Ok(())
    }
}
