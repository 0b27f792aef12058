use super::network::Gradients;

/// Adam hyperparameters. The effective learning rate at step `t` (1-based)
/// is `lr / (1 + decay * t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 1e-4, decay: 1e-6, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(config: AdamConfig, params: &[&[f64]]) -> Self {
        let zeros: Vec<Vec<f64>> = params.iter().map(|p| vec![0.0; p.len()]).collect();
        Self { config, step: 0, m: zeros.clone(), v: zeros }
    }

    pub fn learning_rate(&self) -> f64 {
        self.config.lr / (1.0 + self.config.decay * self.step as f64)
    }

    /// Applies one bias-corrected update in place.
    pub fn update(&mut self, params: Vec<&mut [f64]>, grads: &Gradients) {
        assert_eq!(params.len(), self.m.len(), "parameter tensor count changed");
        self.step += 1;
        let c = self.config;
        let t = self.step as i32;
        let lr = self.learning_rate();
        let bc1 = 1.0 - c.beta1.powi(t);
        let bc2 = 1.0 - c.beta2.powi(t);
        for (((p, g), m), v) in params.into_iter().zip(&grads.0).zip(&mut self.m).zip(&mut self.v) {
            assert_eq!(p.len(), g.len());
            for i in 0..p.len() {
                m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
                v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p[i] -= lr * m_hat / (v_hat.sqrt() + c.epsilon);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = vec![1.0, -2.0];
        let mut st = AdamState::new(AdamConfig::default(), &[&p]);
        st.update(vec![&mut p], &Gradients(vec![vec![0.0, 0.0]]));
        assert_eq!(p, vec![1.0, -2.0]);
        assert_eq!(st.step, 1);
    }

    #[test]
    fn first_step_magnitude() {
        let cfg = AdamConfig::default();
        let mut p = vec![0.0; 4];
        let g = vec![3.0, -1e-3, 250.0, -0.5];
        let mut st = AdamState::new(cfg, &[&p]);
        st.update(vec![&mut p], &Gradients(vec![g.clone()]));
        let expected = cfg.lr / (1.0 + cfg.decay);
        for (x, gi) in p.iter().zip(&g) {
            assert_eq!(x.signum(), -gi.signum());
            let rel = (x.abs() - expected).abs() / expected;
            assert!(rel < 1e-4, "{rel}");
        }
    }

    #[test]
    fn quadratic_converges() {
        let cfg = AdamConfig { lr: 1e-3, ..Default::default() };
        let mut w = vec![1.0];
        let mut st = AdamState::new(cfg, &[&w]);
        for _ in 0..4000 {
            let g = vec![2.0 * w[0]];
            st.update(vec![&mut w], &Gradients(vec![g]));
        }
        assert!(w[0].abs() < 0.5, "{}", w[0]);
    }
}
