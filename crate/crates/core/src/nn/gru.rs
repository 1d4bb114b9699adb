//! Gated recurrent unit and its bidirectional wrapper.
//!
//! Cell equations (update gate `z`, reset gate `r`, candidate `n`):
//!
//! ```text
//! z  = sigmoid(Wz x + Uz h + bz)
//! r  = sigmoid(Wr x + Ur h + br)
//! n  = tanh(Wn x + Un (r * h) + bn)
//! h' = z * h + (1 - z) * n
//! ```

use rand::Rng;

use super::params::{join, Parameters, TensorRole};
use super::{axpy, sigmoid, Matrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct GruCell {
    pub w_z: Matrix,
    pub w_r: Matrix,
    pub w_n: Matrix,
    pub u_z: Matrix,
    pub u_r: Matrix,
    pub u_n: Matrix,
    pub b_z: Matrix,
    pub b_r: Matrix,
    pub b_n: Matrix,
}

#[derive(Debug, Clone)]
struct StepCache {
    x: Vec<f64>,
    h: Vec<f64>,
    z: Vec<f64>,
    r: Vec<f64>,
    n: Vec<f64>,
    rh: Vec<f64>,
}

/// Intermediates for one left-to-right pass over a sequence.
#[derive(Debug, Clone, Default)]
pub struct GruSeqCache {
    steps: Vec<StepCache>,
}

impl GruSeqCache {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

impl GruCell {
    /// Weights uniform in `±sqrt(1/hidden)`, zero biases.
    pub fn new<R: Rng + ?Sized>(input: usize, hidden: usize, rng: &mut R) -> Self {
        let b = (1.0 / hidden.max(1) as f64).sqrt();
        Self {
            w_z: Matrix::uniform(hidden, input, b, rng),
            w_r: Matrix::uniform(hidden, input, b, rng),
            w_n: Matrix::uniform(hidden, input, b, rng),
            u_z: Matrix::uniform(hidden, hidden, b, rng),
            u_r: Matrix::uniform(hidden, hidden, b, rng),
            u_n: Matrix::uniform(hidden, hidden, b, rng),
            b_z: Matrix::zeros(hidden, 1),
            b_r: Matrix::zeros(hidden, 1),
            b_n: Matrix::zeros(hidden, 1),
        }
    }

    pub fn zeroed(input: usize, hidden: usize) -> Self {
        Self {
            w_z: Matrix::zeros(hidden, input),
            w_r: Matrix::zeros(hidden, input),
            w_n: Matrix::zeros(hidden, input),
            u_z: Matrix::zeros(hidden, hidden),
            u_r: Matrix::zeros(hidden, hidden),
            u_n: Matrix::zeros(hidden, hidden),
            b_z: Matrix::zeros(hidden, 1),
            b_r: Matrix::zeros(hidden, 1),
            b_n: Matrix::zeros(hidden, 1),
        }
    }

    pub fn input_size(&self) -> usize {
        self.w_z.cols()
    }

    pub fn hidden_size(&self) -> usize {
        self.w_z.rows()
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_size() {
            return Err(Error::dim("recurrent cell input", self.input_size(), x.len()));
        }
        Ok(())
    }

    fn check_hidden(&self, h: &[f64], what: &str) -> Result<()> {
        if h.len() != self.hidden_size() {
            return Err(Error::dim(
                format!("recurrent cell {what}"),
                self.hidden_size(),
                h.len(),
            ));
        }
        Ok(())
    }

    fn step_inner(&self, x: &[f64], h: &[f64]) -> StepCache {
        let mut az = self.b_z.as_slice().to_vec();
        self.w_z.matvec_acc(x, &mut az);
        self.u_z.matvec_acc(h, &mut az);
        let z: Vec<f64> = az.into_iter().map(sigmoid).collect();

        let mut ar = self.b_r.as_slice().to_vec();
        self.w_r.matvec_acc(x, &mut ar);
        self.u_r.matvec_acc(h, &mut ar);
        let r: Vec<f64> = ar.into_iter().map(sigmoid).collect();

        let rh: Vec<f64> = r.iter().zip(h).map(|(r, h)| r * h).collect();
        let mut an = self.b_n.as_slice().to_vec();
        self.w_n.matvec_acc(x, &mut an);
        self.u_n.matvec_acc(&rh, &mut an);
        let n: Vec<f64> = an.into_iter().map(f64::tanh).collect();

        StepCache {
            x: x.to_vec(),
            h: h.to_vec(),
            z,
            r,
            n,
            rh,
        }
    }

    fn output_of(c: &StepCache) -> Vec<f64> {
        c.z.iter()
            .zip(&c.h)
            .zip(&c.n)
            .map(|((z, h), n)| z * h + (1.0 - z) * n)
            .collect()
    }

    /// One application of the cell.
    pub fn step(&self, x: &[f64], h: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        self.check_hidden(h, "state")?;
        Ok(Self::output_of(&self.step_inner(x, h)))
    }

    /// Runs the cell left to right from `h0`, returning one state per input.
    pub fn forward_seq(&self, inputs: &[Vec<f64>], h0: &[f64]) -> Result<(Vec<Vec<f64>>, GruSeqCache)> {
        if inputs.is_empty() {
            return Err(Error::Empty("recurrent sequence"));
        }
        self.check_hidden(h0, "initial state")?;
        let mut h = h0.to_vec();
        let mut states = Vec::with_capacity(inputs.len());
        let mut steps = Vec::with_capacity(inputs.len());
        for x in inputs {
            self.check_input(x)?;
            let c = self.step_inner(x, &h);
            h = Self::output_of(&c);
            states.push(h.clone());
            steps.push(c);
        }
        Ok((states, GruSeqCache { steps }))
    }

    /// Backpropagation through time. `d_states[t]` is the gradient of the
    /// loss with respect to the `t`-th returned state. Returns
    /// `(d_inputs, d_h0)`.
    pub fn backward_seq(
        &self,
        cache: &GruSeqCache,
        d_states: &[Vec<f64>],
        grads: &mut GruCell,
    ) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
        if cache.steps.is_empty() {
            return Err(Error::BackwardBeforeForward("recurrent cell"));
        }
        if d_states.len() != cache.steps.len() {
            return Err(Error::dim(
                "recurrent upstream gradients",
                cache.steps.len(),
                d_states.len(),
            ));
        }
        let hs = self.hidden_size();
        let mut d_inputs = vec![Vec::new(); cache.steps.len()];
        let mut dh_next = vec![0.0; hs];
        for t in (0..cache.steps.len()).rev() {
            let c = &cache.steps[t];
            self.check_hidden(&d_states[t], "upstream gradient")?;
            let dh_out: Vec<f64> = d_states[t].iter().zip(&dh_next).map(|(a, b)| a + b).collect();

            let mut dh = vec![0.0; hs];
            let mut dan = vec![0.0; hs];
            let mut daz = vec![0.0; hs];
            for k in 0..hs {
                let g = dh_out[k];
                let dz = g * (c.h[k] - c.n[k]);
                let dn = g * (1.0 - c.z[k]);
                dh[k] = g * c.z[k];
                dan[k] = dn * (1.0 - c.n[k] * c.n[k]);
                daz[k] = dz * c.z[k] * (1.0 - c.z[k]);
            }
            grads.w_n.add_outer(&dan, &c.x);
            grads.u_n.add_outer(&dan, &c.rh);
            axpy(1.0, &dan, grads.b_n.as_mut_slice());
            let mut d_rh = vec![0.0; hs];
            self.u_n.matvec_t_acc(&dan, &mut d_rh);
            let mut dar = vec![0.0; hs];
            for k in 0..hs {
                dh[k] += d_rh[k] * c.r[k];
                let dr = d_rh[k] * c.h[k];
                dar[k] = dr * c.r[k] * (1.0 - c.r[k]);
            }

            grads.w_z.add_outer(&daz, &c.x);
            grads.u_z.add_outer(&daz, &c.h);
            axpy(1.0, &daz, grads.b_z.as_mut_slice());
            grads.w_r.add_outer(&dar, &c.x);
            grads.u_r.add_outer(&dar, &c.h);
            axpy(1.0, &dar, grads.b_r.as_mut_slice());

            self.u_z.matvec_t_acc(&daz, &mut dh);
            self.u_r.matvec_t_acc(&dar, &mut dh);

            let mut dx = vec![0.0; self.input_size()];
            self.w_n.matvec_t_acc(&dan, &mut dx);
            self.w_z.matvec_t_acc(&daz, &mut dx);
            self.w_r.matvec_t_acc(&dar, &mut dx);
            d_inputs[t] = dx;
            dh_next = dh;
        }
        Ok((d_inputs, dh_next))
    }
}

impl Parameters for GruCell {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &Matrix, TensorRole)) {
        for (name, m) in [
            ("w_z", &self.w_z),
            ("w_r", &self.w_r),
            ("w_n", &self.w_n),
            ("u_z", &self.u_z),
            ("u_r", &self.u_r),
            ("u_n", &self.u_n),
            ("b_z", &self.b_z),
            ("b_r", &self.b_r),
            ("b_n", &self.b_n),
        ] {
            f(&join(prefix, name), m, TensorRole::Trainable);
        }
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Matrix, TensorRole)) {
        for (name, m) in [
            ("w_z", &mut self.w_z),
            ("w_r", &mut self.w_r),
            ("w_n", &mut self.w_n),
            ("u_z", &mut self.u_z),
            ("u_r", &mut self.u_r),
            ("u_n", &mut self.u_n),
            ("b_z", &mut self.b_z),
            ("b_r", &mut self.b_r),
            ("b_n", &mut self.b_n),
        ] {
            f(&join(prefix, name), m, TensorRole::Trainable);
        }
    }
}

/// Forward and backward cells over the same sequence. The state at step
/// `t` is `[forward_t ; backward_t]`, where the backward cell consumes the
/// inputs in reverse order.
#[derive(Debug, Clone)]
pub struct BiGru {
    pub fwd: GruCell,
    pub bwd: GruCell,
}

#[derive(Debug, Clone, Default)]
pub struct BiGruCache {
    fwd: GruSeqCache,
    bwd: GruSeqCache,
}

impl BiGru {
    pub fn new<R: Rng + ?Sized>(input: usize, hidden: usize, rng: &mut R) -> Self {
        Self {
            fwd: GruCell::new(input, hidden, rng),
            bwd: GruCell::new(input, hidden, rng),
        }
    }

    pub fn hidden_size(&self) -> usize {
        self.fwd.hidden_size()
    }

    pub fn output_size(&self) -> usize {
        self.fwd.hidden_size() + self.bwd.hidden_size()
    }

    pub fn forward(
        &self,
        inputs: &[Vec<f64>],
        h0_fwd: &[f64],
        h0_bwd: &[f64],
    ) -> Result<(Vec<Vec<f64>>, BiGruCache)> {
        let (fs, fc) = self.fwd.forward_seq(inputs, h0_fwd)?;
        let reversed: Vec<Vec<f64>> = inputs.iter().rev().cloned().collect();
        let (mut bs, bc) = self.bwd.forward_seq(&reversed, h0_bwd)?;
        bs.reverse();
        let states = fs
            .into_iter()
            .zip(bs)
            .map(|(mut f, b)| {
                f.extend(b);
                f
            })
            .collect();
        Ok((states, BiGruCache { fwd: fc, bwd: bc }))
    }

    /// Returns `(d_inputs, d_h0_fwd, d_h0_bwd)`.
    pub fn backward(
        &self,
        cache: &BiGruCache,
        d_states: &[Vec<f64>],
        grads: &mut BiGru,
    ) -> Result<(Vec<Vec<f64>>, Vec<f64>, Vec<f64>)> {
        let hf = self.fwd.hidden_size();
        let mut d_f = Vec::with_capacity(d_states.len());
        let mut d_b = Vec::with_capacity(d_states.len());
        for d in d_states {
            if d.len() != self.output_size() {
                return Err(Error::dim("bidirectional upstream gradient", self.output_size(), d.len()));
            }
            d_f.push(d[..hf].to_vec());
            d_b.push(d[hf..].to_vec());
        }
        d_b.reverse();
        let (mut dx, dh0f) = self.fwd.backward_seq(&cache.fwd, &d_f, &mut grads.fwd)?;
        let (mut dxb, dh0b) = self.bwd.backward_seq(&cache.bwd, &d_b, &mut grads.bwd)?;
        dxb.reverse();
        for (a, b) in dx.iter_mut().zip(&dxb) {
            axpy(1.0, b, a);
        }
        Ok((dx, dh0f, dh0b))
    }
}

impl Parameters for BiGru {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &Matrix, TensorRole)) {
        self.fwd.visit(&join(prefix, "fwd"), f);
        self.bwd.visit(&join(prefix, "bwd"), f);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Matrix, TensorRole)) {
        self.fwd.visit_mut(&join(prefix, "fwd"), f);
        self.bwd.visit_mut(&join(prefix, "bwd"), f);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_seq(rng: &mut ChaCha8Rng, len: usize, dim: usize) -> Vec<Vec<f64>> {
        (0..len)
            .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect()
    }

    #[test]
    fn zero_weights_keep_zero_state() {
        let cell = GruCell::zeroed(3, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (states, _) = cell.forward_seq(&random_seq(&mut rng, 6, 3), &[0.0; 4]).unwrap();
        assert!(states.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn single_step_sequence_equals_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let cell = GruCell::new(3, 4, &mut rng);
        let x = random_seq(&mut rng, 1, 3);
        let h0 = [0.1, -0.2, 0.3, 0.0];
        let (states, _) = cell.forward_seq(&x, &h0).unwrap();
        assert_eq!(states[0], cell.step(&x[0], &h0).unwrap());
    }

    /// Independent reimplementation of the cell equations, unrolled.
    fn oracle_step(c: &GruCell, x: &[f64], h: &[f64]) -> Vec<f64> {
        let hs = c.hidden_size();
        let lin = |w: &Matrix, u: &Matrix, b: &Matrix, x: &[f64], h: &[f64], k: usize| {
            let mut s = b.get(k, 0);
            for j in 0..x.len() {
                s += w.get(k, j) * x[j];
            }
            for j in 0..h.len() {
                s += u.get(k, j) * h[j];
            }
            s
        };
        let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
        let z: Vec<f64> = (0..hs).map(|k| sig(lin(&c.w_z, &c.u_z, &c.b_z, x, h, k))).collect();
        let r: Vec<f64> = (0..hs).map(|k| sig(lin(&c.w_r, &c.u_r, &c.b_r, x, h, k))).collect();
        let rh: Vec<f64> = (0..hs).map(|k| r[k] * h[k]).collect();
        (0..hs)
            .map(|k| {
                let n = lin(&c.w_n, &c.u_n, &c.b_n, x, &rh, k).tanh();
                z[k] * h[k] + (1.0 - z[k]) * n
            })
            .collect()
    }

    #[test]
    fn five_step_sequence_matches_unrolled_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cell = GruCell::new(4, 3, &mut rng);
        let xs = random_seq(&mut rng, 5, 4);
        let h0 = vec![0.2, -0.1, 0.05];
        let (states, _) = cell.forward_seq(&xs, &h0).unwrap();
        let mut h = h0.clone();
        for (x, s) in xs.iter().zip(&states) {
            h = oracle_step(&cell, x, &h);
            for (a, b) in h.iter().zip(s) {
                assert!((a - b).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn states_bounded_on_long_zero_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let cell = GruCell::new(2, 5, &mut rng);
        let xs = vec![vec![0.0; 2]; 200];
        let (states, _) = cell.forward_seq(&xs, &[0.0; 5]).unwrap();
        assert!(states.iter().flatten().all(|v| v.abs() <= 1.0));
    }

    #[test]
    fn empty_sequence_is_an_error() {
        let cell = GruCell::zeroed(2, 2);
        assert!(matches!(cell.forward_seq(&[], &[0.0; 2]), Err(Error::Empty(_))));
    }

    #[test]
    fn palindrome_with_shared_weights_is_swap_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let cell = GruCell::new(3, 4, &mut rng);
        let bi = BiGru {
            fwd: cell.clone(),
            bwd: cell,
        };
        let a = random_seq(&mut rng, 2, 3);
        let xs = vec![a[0].clone(), a[1].clone(), a[0].clone()];
        let (states, _) = bi.forward(&xs, &[0.0; 4], &[0.0; 4]).unwrap();
        assert_eq!(states[0].len(), 8);
        let n = states.len();
        for t in 0..n {
            let mirror = &states[n - 1 - t];
            let swapped: Vec<f64> = mirror[4..].iter().chain(&mirror[..4]).cloned().collect();
            for (x, y) in states[t].iter().zip(&swapped) {
                assert!((x - y).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn zero_bigru_gives_zero_states() {
        let bi = BiGru {
            fwd: GruCell::zeroed(3, 2),
            bwd: GruCell::zeroed(3, 2),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (states, _) = bi.forward(&random_seq(&mut rng, 4, 3), &[0.0; 2], &[0.0; 2]).unwrap();
        assert!(states.iter().all(|s| s.len() == 4 && s.iter().all(|&v| v == 0.0)));
    }
}
