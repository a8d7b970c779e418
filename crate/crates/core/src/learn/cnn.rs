use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::loss::{output_loss, Target};
use super::model::{axpy, dot, Model};
use super::params::{ParamLayout, Params};
use crate::sqltext::PAD;
use crate::{Error, Result, Scalar};

pub const WINDOWS: [usize; 3] = [3, 4, 5];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnnConfig {
    pub vocab_size: usize,
    pub embed_dim: usize,
    /// Kernels per window size.
    pub kernels: usize,
    pub dropout: f64,
    pub n_outputs: usize,
}

impl CnnConfig {
    pub fn layout(&self) -> ParamLayout {
        let (d, k) = (self.embed_dim, self.kernels);
        let mut l = ParamLayout::new();
        l.push("embedding", &[self.vocab_size, d]);
        for m in WINDOWS {
            l.push(format!("conv{m}.weight"), &[k, m * d]);
            l.push(format!("conv{m}.bias"), &[k]);
        }
        l.push("head.weight", &[self.n_outputs, WINDOWS.len() * k]);
        l.push("head.bias", &[self.n_outputs]);
        l
    }

    fn validate(&self) -> Result<()> {
        if self.vocab_size < 2 || self.embed_dim == 0 || self.kernels == 0 || self.n_outputs == 0 {
            return Err(Error::InvalidInput(format!("degenerate CNN configuration {self:?}")));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidInput(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        Ok(())
    }
}

/// Valid convolution of one kernel over a row-major `[len, d]` sequence:
/// `p_j = w . x[j..j+m] + b` with `m = w.len() / d`.
pub fn convolve<T: Scalar>(x: &[T], d: usize, w: &[T], b: T) -> Vec<T> {
    let m = w.len() / d;
    let len = x.len() / d;
    if len < m {
        return Vec::new();
    }
    (0..=len - m).map(|j| dot(w, &x[j * d..(j + m) * d]) + b).collect()
}

/// Embeddings, one convolution layer with windows 3, 4 and 5, ReLU,
/// max-over-time pooling, dropout and an affine head.
#[derive(Debug, Clone, PartialEq)]
pub struct CnnModel<T> {
    config: CnnConfig,
    params: Params<T>,
}

struct Pass<T> {
    ids: Vec<u32>,
    x: Vec<T>,
    /// Winning position per pooled feature; `None` when ReLU clipped it.
    argmax: Vec<Option<usize>>,
    mask: Vec<T>,
    h: Vec<T>,
    out: Vec<T>,
}

impl<T: Scalar> CnnModel<T> {
    pub fn new(config: CnnConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Params::uniform(config.layout(), 0.05, &mut rng);
        zero_pad_row(&mut params, config.embed_dim);
        Ok(CnnModel { config, params })
    }

    pub fn from_params(config: CnnConfig, params: Params<T>) -> Result<Self> {
        config.validate()?;
        if params.layout != config.layout() {
            return Err(Error::Shape("CNN parameters do not match the configuration".into()));
        }
        Ok(CnnModel { config, params })
    }

    pub fn config(&self) -> &CnnConfig {
        &self.config
    }

    /// Closed-form parameter count.
    pub fn parameter_count(config: &CnnConfig) -> usize {
        let (v, d, k, o) = (config.vocab_size, config.embed_dim, config.kernels, config.n_outputs);
        v * d + WINDOWS.iter().map(|m| k * (m * d + 1)).sum::<usize>() + o * (WINDOWS.len() * k + 1)
    }

    fn run(&self, ids: &[u32], rng: Option<&mut dyn RngCore>) -> Result<Pass<T>> {
        if ids.is_empty() {
            return Err(Error::EmptyStatement);
        }
        let (d, k) = (self.config.embed_dim, self.config.kernels);
        let max_window = WINDOWS[WINDOWS.len() - 1];
        let mut ids = ids.to_vec();
        if ids.len() < max_window {
            ids.resize(max_window, PAD);
        }
        let emb = self.params.slice("embedding");
        let mut x = Vec::with_capacity(ids.len() * d);
        for &id in &ids {
            let id = id as usize;
            if id >= self.config.vocab_size {
                return Err(Error::Shape(format!("token id {id} outside vocabulary of {}", self.config.vocab_size)));
            }
            x.extend_from_slice(&emb[id * d..(id + 1) * d]);
        }

        let mut pooled = Vec::with_capacity(WINDOWS.len() * k);
        let mut argmax = Vec::with_capacity(WINDOWS.len() * k);
        for m in WINDOWS {
            let w = self.params.slice(&format!("conv{m}.weight"));
            let b = self.params.slice(&format!("conv{m}.bias"));
            for kk in 0..k {
                let p = convolve(&x, d, &w[kk * m * d..(kk + 1) * m * d], b[kk]);
                let (mut best, mut at) = (p[0], 0);
                for (j, &v) in p.iter().enumerate().skip(1) {
                    if v > best {
                        best = v;
                        at = j;
                    }
                }
                if best > T::zero() {
                    pooled.push(best);
                    argmax.push(Some(at));
                } else {
                    pooled.push(T::zero());
                    argmax.push(None);
                }
            }
        }

        let p = self.config.dropout;
        let mask: Vec<T> = match rng {
            Some(rng) if p > 0.0 => {
                let keep = T::of(1.0 / (1.0 - p));
                (0..pooled.len())
                    .map(|_| if rng.gen::<f64>() < p { T::zero() } else { keep })
                    .collect()
            }
            _ => vec![T::one(); pooled.len()],
        };
        let h: Vec<T> = pooled.iter().zip(&mask).map(|(&g, &r)| g * r).collect();

        let hw = self.params.slice("head.weight");
        let hb = self.params.slice("head.bias");
        let n = h.len();
        let out = (0..self.config.n_outputs)
            .map(|c| hb[c] + dot(&hw[c * n..(c + 1) * n], &h))
            .collect();
        Ok(Pass {
            ids,
            x,
            argmax,
            mask,
            h,
            out,
        })
    }
}

fn zero_pad_row<T: Scalar>(params: &mut Params<T>, d: usize) {
    let pad = PAD as usize;
    params.slice_mut("embedding")[pad * d..(pad + 1) * d].fill(T::zero());
}

impl<T: Scalar> Model<T> for CnnModel<T> {
    type Input = [u32];

    fn params(&self) -> &Params<T> {
        &self.params
    }

    fn params_mut(&mut self) -> &mut Params<T> {
        &mut self.params
    }

    fn n_outputs(&self) -> usize {
        self.config.n_outputs
    }

    fn forward(&self, ids: &[u32]) -> Result<Vec<T>> {
        Ok(self.run(ids, None)?.out)
    }

    fn loss(&self, ids: &[u32], target: Target<T>, rng: Option<&mut dyn RngCore>) -> Result<T> {
        Ok(output_loss(&self.run(ids, rng)?.out, target).0)
    }

    fn backward(
        &self,
        ids: &[u32],
        target: Target<T>,
        scale: T,
        grads: &mut [T],
        rng: Option<&mut dyn RngCore>,
    ) -> Result<T> {
        let pass = self.run(ids, rng)?;
        let (loss, dout) = output_loss(&pass.out, target);
        let (d, k) = (self.config.embed_dim, self.config.kernels);
        let layout = &self.params.layout;
        let n = pass.h.len();

        let hw_seg = layout.get("head.weight").expect("head.weight");
        let hb_off = layout.get("head.bias").expect("head.bias").offset;
        let hw = self.params.slice("head.weight");
        let mut dh = vec![T::zero(); n];
        for (c, &g) in dout.iter().enumerate() {
            let g = g * scale;
            axpy(g, &pass.h, &mut grads[hw_seg.offset + c * n..hw_seg.offset + (c + 1) * n]);
            grads[hb_off + c] += g;
            axpy(g, &hw[c * n..(c + 1) * n], &mut dh);
        }

        let emb_off = layout.get("embedding").expect("embedding").offset;
        for (wi, m) in WINDOWS.into_iter().enumerate() {
            let w_off = layout.get(&format!("conv{m}.weight")).expect("conv weight").offset;
            let b_off = layout.get(&format!("conv{m}.bias")).expect("conv bias").offset;
            let w = self.params.slice(&format!("conv{m}.weight"));
            for kk in 0..k {
                let idx = wi * k + kk;
                let Some(j) = pass.argmax[idx] else { continue };
                let dp = dh[idx] * pass.mask[idx];
                if dp == T::zero() {
                    continue;
                }
                let row = kk * m * d;
                axpy(dp, &pass.x[j * d..(j + m) * d], &mut grads[w_off + row..w_off + row + m * d]);
                grads[b_off + kk] += dp;
                for r in 0..m {
                    let tok = pass.ids[j + r];
                    if tok == PAD {
                        continue;
                    }
                    let at = emb_off + tok as usize * d;
                    axpy(dp, &w[row + r * d..row + (r + 1) * d], &mut grads[at..at + d]);
                }
            }
        }
        Ok(loss)
    }

    fn after_update(&mut self) {
        zero_pad_row(&mut self.params, self.config.embed_dim);
    }

    #[allow(clippy::single_range_in_vec_init)]
    fn frozen(&self) -> Vec<std::ops::Range<usize>> {
        let start = self.params.layout.get("embedding").expect("embedding").offset + PAD as usize * self.config.embed_dim;
        vec![start..start + self.config.embed_dim]
    }
}
