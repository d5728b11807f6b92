use crate::config::Optimizer;
use crate::model::Trainable;

/// Optimizer state. Adam keeps first and second moments per parameter.
#[derive(Debug, Clone)]
pub struct OptState {
    kind: Optimizer,
    step: u64,
    m: Option<Trainable>,
    v: Option<Trainable>,
}

impl OptState {
    pub fn new(kind: Optimizer, like: &Trainable) -> Self {
        let (m, v) = match kind {
            Optimizer::Sgd => (None, None),
            Optimizer::Adam { .. } => (Some(like.zeros_like()), Some(like.zeros_like())),
        };
        Self { kind, step: 0, m, v }
    }

    /// Descent step on `params` with gradient `grads`.
    pub fn update(&mut self, params: &mut Trainable, grads: &Trainable, lr: f64) {
        self.step += 1;
        match self.kind {
            Optimizer::Sgd => {
                for (p, g) in params.tensors_mut().into_iter().zip(grads.tensors()) {
                    for (x, gx) in p.as_mut_slice().iter_mut().zip(g.as_slice()) {
                        *x -= lr * gx;
                    }
                }
            }
            Optimizer::Adam { beta1, beta2, eps } => {
                let c1 = 1.0 - beta1.powi(self.step as i32);
                let c2 = 1.0 - beta2.powi(self.step as i32);
                let m = self.m.as_mut().expect("adam state");
                let v = self.v.as_mut().expect("adam state");
                let tensors = params.tensors_mut().into_iter().zip(grads.tensors());
                for ((p, g), (mt, vt)) in tensors.zip(m.tensors_mut().into_iter().zip(v.tensors_mut())) {
                    let it = p.as_mut_slice().iter_mut().zip(g.as_slice());
                    for ((x, gx), (mx, vx)) in it.zip(mt.as_mut_slice().iter_mut().zip(vt.as_mut_slice().iter_mut())) {
                        *mx = beta1 * *mx + (1.0 - beta1) * gx;
                        *vx = beta2 * *vx + (1.0 - beta2) * gx * gx;
                        *x -= lr * (*mx / c1) / ((*vx / c2).sqrt() + eps);
                    }
                }
            }
        }
    }
}
