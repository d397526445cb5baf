//! Adam optimizer over a flat list of parameter tensors.

use std::sync::Arc;

use ndarray::Array2;

use super::scalar::Scalar;

pub struct Adam<S> {
    learning_rate: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    step: u64,
    first_moment: Vec<Array2<S>>,
    second_moment: Vec<Array2<S>>,
}

impl<S: Scalar> Adam<S> {
    /// Fresh optimizer state (zero moments) for the given tensor shapes.
    pub fn new(learning_rate: f64, tensors: &[Arc<Array2<S>>]) -> Self {
        let zeros: Vec<Array2<S>> = tensors.iter().map(|t| Array2::zeros(t.raw_dim())).collect();
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            first_moment: zeros.clone(),
            second_moment: zeros,
        }
    }

    /// One bias-corrected update. `grads` must parallel the tensor list
    /// the optimizer was built with.
    pub fn step(&mut self, tensors: &mut [Arc<Array2<S>>], grads: &[Array2<S>]) {
        assert_eq!(tensors.len(), grads.len());
        self.step += 1;
        let b1 = S::from_f64(self.beta1);
        let b2 = S::from_f64(self.beta2);
        let one = S::one();
        let correction1 = S::from_f64(1.0 - self.beta1.powi(self.step as i32));
        let correction2 = S::from_f64(1.0 - self.beta2.powi(self.step as i32));
        let lr = S::from_f64(self.learning_rate);
        let eps = S::from_f64(self.epsilon);
        for ((tensor, grad), (m, v)) in tensors
            .iter_mut()
            .zip(grads)
            .zip(self.first_moment.iter_mut().zip(&mut self.second_moment))
        {
            let target = Arc::make_mut(tensor);
            azip(target, grad, m, v, |t, &g, m, v| {
                *m = b1 * *m + (one - b1) * g;
                *v = b2 * *v + (one - b2) * g * g;
                let m_hat = *m / correction1;
                let v_hat = *v / correction2;
                *t = *t - lr * m_hat / (v_hat.sqrt() + eps);
            });
        }
    }
}

fn azip<S: Scalar>(
    t: &mut Array2<S>,
    g: &Array2<S>,
    m: &mut Array2<S>,
    v: &mut Array2<S>,
    mut f: impl FnMut(&mut S, &S, &mut S, &mut S),
) {
    ndarray::Zip::from(t)
        .and(g)
        .and(m)
        .and(v)
        .for_each(|t, g, m, v| f(t, g, m, v));
}

/// Scales `grads` in place so their global L2 norm is at most `max_norm`.
pub fn clip_global_norm<S: Scalar>(grads: &mut [Array2<S>], max_norm: f64) {
    let mut total = 0.0f64;
    for g in grads.iter() {
        for v in g.iter() {
            let x = v.as_f64();
            total += x * x;
        }
    }
    let norm = total.sqrt();
    if norm > max_norm && norm > 0.0 {
        let scale = S::from_f64(max_norm / norm);
        for g in grads.iter_mut() {
            g.mapv_inplace(|v| v * scale);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr2;

    #[test]
    fn adam_descends_a_quadratic() {
        // Minimize f(x) = x², gradient 2x, from x = 1.
        let mut tensors = vec![Arc::new(arr2(&[[1.0f64]]))];
        let mut opt = Adam::new(0.05, &tensors);
        for _ in 0..200 {
            let x = tensors[0][[0, 0]];
            let grad = vec![arr2(&[[2.0 * x]])];
            opt.step(&mut tensors, &grad);
        }
        assert!(tensors[0][[0, 0]].abs() < 1e-2);
    }

    #[test]
    fn clip_rescales_only_above_threshold() {
        let mut grads = vec![arr2(&[[3.0f64, 4.0]])]; // norm 5
        clip_global_norm(&mut grads, 10.0);
        assert_eq!(grads[0], arr2(&[[3.0, 4.0]]));
        clip_global_norm(&mut grads, 1.0);
        let norm: f64 = grads[0].iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
    }
}
