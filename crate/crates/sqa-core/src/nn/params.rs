//! Named, shaped, ordered storage for learnable arrays and batch-norm
//! running statistics. Iteration order is insertion order and identical
//! across runs, which fixes both the initialization draw order and the
//! weight-file layout.

use std::collections::HashMap;

use crate::nn::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct Param<F> {
    pub shape: Vec<usize>,
    pub values: Vec<F>,
    pub grad: Vec<F>,
}

/// Non-learnable per-channel batch-norm statistics.
#[derive(Debug, Clone)]
pub struct BnStats<F> {
    pub running_mean: Vec<F>,
    pub running_var: Vec<F>,
}

#[derive(Debug, Clone)]
pub struct ParameterStore<F> {
    names: Vec<String>,
    index: HashMap<String, usize>,
    params: Vec<Param<F>>,
    stat_names: Vec<String>,
    stat_index: HashMap<String, usize>,
    stats: Vec<BnStats<F>>,
}

impl<F: Scalar> ParameterStore<F> {
    pub fn new() -> Self {
        Self {
            names: Vec::new(),
            index: HashMap::new(),
            params: Vec::new(),
            stat_names: Vec::new(),
            stat_index: HashMap::new(),
            stats: Vec::new(),
        }
    }

    pub fn insert(&mut self, name: &str, shape: Vec<usize>, values: Vec<F>) {
        assert_eq!(
            values.len(),
            shape.iter().product::<usize>(),
            "shape/value mismatch for {name}"
        );
        assert!(
            !self.index.contains_key(name),
            "duplicate parameter {name}"
        );
        self.index.insert(name.to_string(), self.params.len());
        self.names.push(name.to_string());
        let grad = vec![F::zero(); values.len()];
        self.params.push(Param {
            shape,
            values,
            grad,
        });
    }

    /// Register batch-norm running statistics initialized to mean 0, var 1.
    pub fn insert_stats(&mut self, name: &str, channels: usize) {
        assert!(
            !self.stat_index.contains_key(name),
            "duplicate stats {name}"
        );
        self.stat_index.insert(name.to_string(), self.stats.len());
        self.stat_names.push(name.to_string());
        self.stats.push(BnStats {
            running_mean: vec![F::zero(); channels],
            running_var: vec![F::one(); channels],
        });
    }

    pub fn get(&self, name: &str) -> &Param<F> {
        &self.params[*self.index.get(name).unwrap_or_else(|| panic!("unknown parameter {name}"))]
    }

    pub fn get_mut(&mut self, name: &str) -> &mut Param<F> {
        let i = *self
            .index
            .get(name)
            .unwrap_or_else(|| panic!("unknown parameter {name}"));
        &mut self.params[i]
    }

    pub fn stats(&self, name: &str) -> &BnStats<F> {
        &self.stats[*self
            .stat_index
            .get(name)
            .unwrap_or_else(|| panic!("unknown stats {name}"))]
    }

    pub fn stats_mut(&mut self, name: &str) -> &mut BnStats<F> {
        let i = *self
            .stat_index
            .get(name)
            .unwrap_or_else(|| panic!("unknown stats {name}"));
        &mut self.stats[i]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn stat_names(&self) -> &[String] {
        &self.stat_names
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Param<F>)> {
        self.names.iter().map(|n| n.as_str()).zip(self.params.iter())
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Param<F>)> {
        self.names
            .iter()
            .map(|n| n.as_str())
            .zip(self.params.iter_mut())
    }

    pub fn zero_grads(&mut self) {
        for p in &mut self.params {
            p.grad.iter_mut().for_each(|g| *g = F::zero());
        }
    }

    /// Total number of learnable scalars (running stats excluded).
    pub fn total_scalars(&self) -> usize {
        self.params.iter().map(|p| p.values.len()).sum()
    }
}

impl<F: Scalar> Default for ParameterStore<F> {
    fn default() -> Self {
        Self::new()
    }
}
