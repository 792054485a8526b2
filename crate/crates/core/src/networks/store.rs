use std::collections::BTreeMap;

use candle_core::{DType, Device, Tensor, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which function family a parameter belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParamGroup {
    /// categorical encoder `h`
    Upsilon,
    /// continuous encoder `f`
    Phi,
    /// decoder `g`
    Theta,
    /// mixture prior
    Prior,
}

impl ParamGroup {
    pub fn of(name: &str) -> Self {
        match name.split('.').next() {
            Some("h") => Self::Upsilon,
            Some("f") => Self::Phi,
            Some("prior") => Self::Prior,
            _ => Self::Theta,
        }
    }
}

/// Named trainable parameters in a deterministic order.
#[derive(Debug, Default)]
pub struct ParamStore {
    vars: BTreeMap<String, Var>,
}

impl ParamStore {
    pub fn get(&self, name: &str) -> Option<&Var> {
        self.vars.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Var)> {
        self.vars.iter()
    }

    pub fn vars(&self) -> Vec<Var> {
        self.vars.values().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn count(&self) -> usize {
        self.vars.values().map(|v| v.elem_count()).sum()
    }

    pub fn count_group(&self, group: ParamGroup) -> usize {
        self.vars
            .iter()
            .filter(|(n, _)| ParamGroup::of(n) == group)
            .map(|(_, v)| v.elem_count())
            .sum()
    }

    fn insert(&mut self, name: &str, t: Tensor) -> Result<Tensor> {
        if self.vars.contains_key(name) {
            return Err(Error::Config(format!("duplicate parameter {name}")));
        }
        let v = Var::from_tensor(&t)?;
        let out = v.as_tensor().clone();
        self.vars.insert(name.to_string(), v);
        Ok(out)
    }
}

/// Allocates and initializes parameters from one seeded stream, in
/// construction order.
pub(crate) struct Builder<'a> {
    store: &'a mut ParamStore,
    rng: ChaCha8Rng,
    pub dtype: DType,
    pub device: Device,
}

impl<'a> Builder<'a> {
    pub fn new(store: &'a mut ParamStore, seed: u64, dtype: DType, device: Device) -> Self {
        Self {
            store,
            rng: ChaCha8Rng::seed_from_u64(seed),
            dtype,
            device,
        }
    }

    fn tensor(&self, data: Vec<f64>, shape: &[usize]) -> Result<Tensor> {
        Ok(Tensor::from_vec(data, shape, &self.device)?.to_dtype(self.dtype)?)
    }

    pub fn uniform(&mut self, name: &str, shape: &[usize], lo: f64, hi: f64) -> Result<Tensor> {
        let n: usize = shape.iter().product();
        let data: Vec<f64> = (0..n).map(|_| self.rng.random_range(lo..hi)).collect();
        let t = self.tensor(data, shape)?;
        self.store.insert(name, t)
    }

    /// Uniform in `+-sqrt(6 / fan_in)`.
    pub fn kaiming(&mut self, name: &str, shape: &[usize], fan_in: usize) -> Result<Tensor> {
        let bound = (6.0 / fan_in as f64).sqrt();
        self.uniform(name, shape, -bound, bound)
    }

    /// Uniform in `+-sqrt(6 / (fan_in + fan_out))`.
    pub fn xavier(&mut self, name: &str, shape: &[usize], fan_in: usize, fan_out: usize) -> Result<Tensor> {
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        self.uniform(name, shape, -bound, bound)
    }

    pub fn zeros(&mut self, name: &str, shape: &[usize]) -> Result<Tensor> {
        let n = shape.iter().product();
        let t = self.tensor(vec![0.0; n], shape)?;
        self.store.insert(name, t)
    }

    pub fn ones(&mut self, name: &str, shape: &[usize]) -> Result<Tensor> {
        let n = shape.iter().product();
        let t = self.tensor(vec![1.0; n], shape)?;
        self.store.insert(name, t)
    }
}
