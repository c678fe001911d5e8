use super::backward::GradientSet;
use crate::grounding::GroundingParams;

/// Adaptive-moment optimizer state over every parameter tensor.
#[derive(Debug, Clone)]
pub struct Adam {
    beta1: f64,
    beta2: f64,
    eps: f64,
    step: u64,
    first: GroundingParams,
    second: GroundingParams,
}

impl Adam {
    pub fn new(params: &GroundingParams, beta1: f64, beta2: f64, eps: f64) -> Self {
        let zeros =
            GroundingParams::zeros(params.vocab_size(), params.feat_dim(), params.embed_dim());
        Self {
            beta1,
            beta2,
            eps,
            step: 0,
            first: zeros.clone(),
            second: zeros,
        }
    }

    pub fn step(&mut self, params: &mut GroundingParams, grads: &GradientSet, lr: f64) {
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        let (b1, b2, eps) = (self.beta1, self.beta2, self.eps);
        for (((p, g), m), v) in params
            .tensors_mut()
            .into_iter()
            .zip(grads.0.tensors())
            .zip(self.first.tensors_mut())
            .zip(self.second.tensors_mut())
        {
            for i in 0..p.len() {
                m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}

/// Plain gradient descent step.
pub fn sgd_step(params: &mut GroundingParams, grads: &GradientSet, lr: f64) {
    for (p, g) in params.tensors_mut().into_iter().zip(grads.0.tensors()) {
        for (x, d) in p.iter_mut().zip(g) {
            *x -= lr * d;
        }
    }
}
