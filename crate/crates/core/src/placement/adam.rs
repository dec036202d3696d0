use crate::geometry::Vec2;

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// Adam with bias correction over a single 2-vector parameter.
#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    step: i32,
    m: Vec2,
    v: Vec2,
}

impl Adam {
    pub fn new(lr: f64) -> Self {
        Self { lr, step: 0, m: Vec2::zeros(), v: Vec2::zeros() }
    }

    pub fn steps(&self) -> i32 {
        self.step
    }

    pub fn update(&mut self, param: &mut Vec2, grad: &Vec2) {
        self.step += 1;
        let bc1 = 1.0 - BETA1.powi(self.step);
        let bc2 = 1.0 - BETA2.powi(self.step);
        for i in 0..2 {
            self.m[i] = BETA1 * self.m[i] + (1.0 - BETA1) * grad[i];
            self.v[i] = BETA2 * self.v[i] + (1.0 - BETA2) * grad[i] * grad[i];
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            param[i] -= self.lr * m_hat / (v_hat.sqrt() + EPSILON);
        }
    }
}
