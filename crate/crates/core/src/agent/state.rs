//! State encodings: reversed positional encoding, skip one-hot and the
//! concatenated observation.

use crate::error::{Error, Result};

/// Sinusoidal encoding of the distance to the video end. Pair `j` (zero
/// based, dimensions `2j` and `2j + 1`) holds `sin((F - f) / F^(2k/q))` and
/// the matching cosine with `k = j + 1`, so the slowest pair divides by `F`.
pub fn nrpe(frame: usize, num_frames: usize, q: usize) -> Result<Vec<f64>> {
    if frame == 0 || frame > num_frames {
        return Err(Error::InvalidArgument(format!("frame {frame} outside [1, {num_frames}]")));
    }
    if q == 0 || q % 2 != 0 {
        return Err(Error::InvalidArgument(format!("encoding size {q} must be even and positive")));
    }
    let remaining = (num_frames - frame) as f64;
    let big_f = num_frames as f64;
    let mut out = Vec::with_capacity(q);
    for k in 0..q / 2 {
        let angle = remaining / big_f.powf(2.0 * (k + 1) as f64 / q as f64);
        out.push(angle.sin());
        out.push(angle.cos());
    }
    Ok(out)
}

/// 1-based hot index `floor(S_t) - S* + nu_max`, clamped to `[1, 2 nu_max]`.
pub fn skip_index(avg_skip: f64, target: usize, nu_max: usize) -> Result<usize> {
    if target == 0 || target > nu_max {
        return Err(Error::InvalidArgument(format!("target speed-up {target} outside [1, {nu_max}]")));
    }
    if !avg_skip.is_finite() {
        return Err(Error::NonFinite("average skip".into()));
    }
    let raw = avg_skip.floor() as i64 - target as i64 + nu_max as i64;
    Ok(raw.clamp(1, 2 * nu_max as i64) as usize)
}

/// One-hot of length `2 nu_max` at [`skip_index`].
pub fn skip_encoding(avg_skip: f64, target: usize, nu_max: usize) -> Result<Vec<f64>> {
    let i = skip_index(avg_skip, target, nu_max)?;
    let mut v = vec![0.0; 2 * nu_max];
    v[i - 1] = 1.0;
    Ok(v)
}

/// Component sizes of the observation `[e_D; e_v; e_p; e_s]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateLayout {
    pub embed_dim: usize,
    pub position_dim: usize,
    pub skip_dim: usize,
}

impl StateLayout {
    pub fn len(&self) -> usize {
        2 * self.embed_dim + self.position_dim + self.skip_dim
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn compose(&self, e_d: &[f64], e_v: &[f64], e_p: &[f64], e_s: &[f64]) -> Result<AgentState> {
        let checks = [
            ("document embedding", self.embed_dim, e_d.len()),
            ("clip embedding", self.embed_dim, e_v.len()),
            ("positional encoding", self.position_dim, e_p.len()),
            ("skip encoding", self.skip_dim, e_s.len()),
        ];
        for (what, want, got) in checks {
            if want != got {
                return Err(Error::dim(what, want, got));
            }
        }
        let mut values = Vec::with_capacity(self.len());
        for part in [e_d, e_v, e_p, e_s] {
            values.extend_from_slice(part);
        }
        Ok(AgentState { layout: *self, values })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub layout: StateLayout,
    pub values: Vec<f64>,
}

impl AgentState {
    pub fn e_d(&self) -> &[f64] {
        &self.values[..self.layout.embed_dim]
    }

    pub fn e_v(&self) -> &[f64] {
        let d = self.layout.embed_dim;
        &self.values[d..2 * d]
    }

    pub fn e_p(&self) -> &[f64] {
        let d = self.layout.embed_dim;
        &self.values[2 * d..2 * d + self.layout.position_dim]
    }

    pub fn e_s(&self) -> &[f64] {
        &self.values[self.layout.len() - self.layout.skip_dim..]
    }
}
