use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OptimizerKind {
    Adam { beta1: f64, beta2: f64, epsilon: f64 },
    Sgd,
}

impl Default for OptimizerKind {
    fn default() -> Self {
        OptimizerKind::Adam { beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// Optimizer moments over a flat parameter vector.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    kind: OptimizerKind,
    first: Vec<f64>,
    second: Vec<f64>,
    step: u64,
}

impl OptimizerState {
    pub fn new(kind: OptimizerKind, len: usize) -> Self {
        let (first, second) = match kind {
            OptimizerKind::Adam { .. } => (vec![0.0; len], vec![0.0; len]),
            OptimizerKind::Sgd => (Vec::new(), Vec::new()),
        };
        Self { kind, first, second, step: 0 }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// Applies one update in place.
    pub fn update(&mut self, params: &mut [f64], grads: &[f64], lr: f64) {
        assert_eq!(params.len(), grads.len(), "parameter and gradient lengths differ");
        self.step += 1;
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, g) in params.iter_mut().zip(grads) {
                    *p -= lr * g;
                }
            }
            OptimizerKind::Adam { beta1, beta2, epsilon } => {
                assert_eq!(self.first.len(), params.len(), "optimizer built for a different model");
                let t = self.step as i32;
                let c1 = 1.0 - beta1.powi(t);
                let c2 = 1.0 - beta2.powi(t);
                for i in 0..params.len() {
                    let g = grads[i];
                    self.first[i] = beta1 * self.first[i] + (1.0 - beta1) * g;
                    self.second[i] = beta2 * self.second[i] + (1.0 - beta2) * g * g;
                    let m = self.first[i] / c1;
                    let v = self.second[i] / c2;
                    params[i] -= lr * m / (v.sqrt() + epsilon);
                }
            }
        }
    }
}
