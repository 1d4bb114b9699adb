//! Named tensor traversal shared by the optimizer, gradient checker and
//! checkpoint code.
//!
//! Gradients are represented with the same type as the model they belong
//! to: a zeroed clone of the model accumulates gradients in place, and
//! the optimizer pairs up tensors by visiting both in the same order.

use super::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TensorRole {
    /// Learnable; visited by the optimizer.
    Trainable,
    /// Checkpointed state that is not updated by gradients (frozen word
    /// vectors, running normalization statistics).
    Buffer,
}

pub trait Parameters {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &Matrix, TensorRole));
    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Matrix, TensorRole));

    /// A clone with every tensor zeroed, used as a gradient accumulator.
    fn zeros_like(&self) -> Self
    where
        Self: Sized + Clone,
    {
        let mut out = self.clone();
        out.visit_mut("", &mut |_, m, _| m.fill(0.0));
        out
    }

    fn num_trainable(&self) -> usize {
        let mut n = 0;
        self.visit("", &mut |_, m, role| {
            if role == TensorRole::Trainable {
                n += m.len();
            }
        });
        n
    }

    fn trainable_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        self.visit("", &mut |name, _, role| {
            if role == TensorRole::Trainable {
                names.push(name.to_string());
            }
        });
        names
    }

    fn all_finite(&self) -> bool {
        let mut ok = true;
        self.visit("", &mut |_, m, _| ok &= m.is_finite());
        ok
    }

    /// Trainable entries flattened in visit order.
    fn flatten_trainable(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.visit("", &mut |_, m, role| {
            if role == TensorRole::Trainable {
                out.extend_from_slice(m.as_slice());
            }
        });
        out
    }

    /// Euclidean norm over trainable tensors.
    fn trainable_norm(&self) -> f64 {
        let mut s = 0.0;
        self.visit("", &mut |_, m, role| {
            if role == TensorRole::Trainable {
                s += m.sum_squares();
            }
        });
        s.sqrt()
    }

    fn scale_trainable(&mut self, factor: f64) {
        self.visit_mut("", &mut |_, m, role| {
            if role == TensorRole::Trainable {
                m.scale(factor);
            }
        });
    }

    /// Elementwise `self += other` over trainable tensors; both must share
    /// a layout.
    fn accumulate(&mut self, other: &Self)
    where
        Self: Sized,
    {
        let mut flat = Vec::new();
        other.visit("", &mut |_, m, role| {
            if role == TensorRole::Trainable {
                flat.push(m.as_slice().to_vec());
            }
        });
        let mut it = flat.into_iter();
        self.visit_mut("", &mut |_, m, role| {
            if role == TensorRole::Trainable {
                let src = it.next().expect("layouts differ");
                super::axpy(1.0, &src, m.as_mut_slice());
            }
        });
    }
}

/// Joins a prefix and a field name with a dot.
pub fn join(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_string()
    } else {
        format!("{prefix}.{name}")
    }
}

/// Rescales `grads` so its trainable norm is at most `max_norm`. Returns the
/// norm before clipping.
pub fn clip_global_norm<P: Parameters>(grads: &mut P, max_norm: f64) -> f64 {
    let norm = grads.trainable_norm();
    if norm > max_norm && norm > 0.0 {
        grads.scale_trainable(max_norm / norm);
    }
    norm
}
