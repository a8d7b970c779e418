use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::loss::{output_loss, Target};
use super::model::{axpy, dot, sigmoid, Model};
use super::params::{ParamLayout, Params};
use crate::sqltext::PAD;
use crate::{Error, Result, Scalar};

pub const DEFAULT_LAYERS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmConfig {
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub hidden: usize,
    pub layers: usize,
    pub n_outputs: usize,
}

impl LstmConfig {
    fn input_dim(&self, layer: usize) -> usize {
        if layer == 0 {
            self.embed_dim
        } else {
            self.hidden
        }
    }

    /// Gate rows are stacked as candidate, update, forget, output.
    pub fn layout(&self) -> ParamLayout {
        let k = self.hidden;
        let mut l = ParamLayout::new();
        l.push("embedding", &[self.vocab_size, self.embed_dim]);
        for layer in 0..self.layers {
            l.push(format!("lstm{layer}.w"), &[4 * k, self.input_dim(layer)]);
            l.push(format!("lstm{layer}.u"), &[4 * k, k]);
            l.push(format!("lstm{layer}.b"), &[4 * k]);
        }
        l.push("head.weight", &[self.n_outputs, k]);
        l.push("head.bias", &[self.n_outputs]);
        l
    }

    pub fn parameter_count(&self) -> usize {
        let (d, k) = (self.embed_dim, self.hidden);
        self.vocab_size * d
            + (0..self.layers).map(|l| 4 * k * (self.input_dim(l) + k + 1)).sum::<usize>()
            + self.n_outputs * (k + 1)
    }

    fn validate(&self) -> Result<()> {
        if self.vocab_size < 2 || self.embed_dim == 0 || self.hidden == 0 || self.layers == 0 || self.n_outputs == 0 {
            return Err(Error::InvalidInput(format!("degenerate LSTM configuration {self:?}")));
        }
        Ok(())
    }
}

/// Stacked LSTM; the head reads the top layer's hidden state after the last token.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmModel<T> {
    config: LstmConfig,
    params: Params<T>,
}

/// Activations of one layer at one step.
struct Cell<T> {
    /// Activated gates: candidate, update, forget, output.
    gates: Vec<T>,
    c: Vec<T>,
    tanh_c: Vec<T>,
    h: Vec<T>,
}

struct Pass<T> {
    x: Vec<Vec<T>>,
    /// `cells[t][layer]`
    cells: Vec<Vec<Cell<T>>>,
    out: Vec<T>,
}

impl<T: Scalar> LstmModel<T> {
    pub fn new(config: LstmConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Params::uniform(config.layout(), 0.05, &mut rng);
        zero_pad_row(&mut params, config.embed_dim);
        Ok(LstmModel { config, params })
    }

    pub fn from_params(config: LstmConfig, params: Params<T>) -> Result<Self> {
        config.validate()?;
        if params.layout != config.layout() {
            return Err(Error::Shape("LSTM parameters do not match the configuration".into()));
        }
        Ok(LstmModel { config, params })
    }

    pub fn config(&self) -> &LstmConfig {
        &self.config
    }

    fn run(&self, ids: &[u32]) -> Result<Pass<T>> {
        if ids.is_empty() {
            return Err(Error::EmptyStatement);
        }
        let (d, k) = (self.config.embed_dim, self.config.hidden);
        let emb = self.params.slice("embedding");
        let x: Vec<Vec<T>> = ids
            .iter()
            .map(|&id| {
                let id = id as usize;
                if id >= self.config.vocab_size {
                    return Err(Error::Shape(format!("token id {id} outside vocabulary of {}", self.config.vocab_size)));
                }
                Ok(emb[id * d..(id + 1) * d].to_vec())
            })
            .collect::<Result<_>>()?;

        let weights: Vec<(&[T], &[T], &[T])> = (0..self.config.layers)
            .map(|l| {
                (
                    self.params.slice(&format!("lstm{l}.w")),
                    self.params.slice(&format!("lstm{l}.u")),
                    self.params.slice(&format!("lstm{l}.b")),
                )
            })
            .collect();
        let zeros = vec![T::zero(); k];
        let mut cells: Vec<Vec<Cell<T>>> = Vec::with_capacity(ids.len());
        for t in 0..ids.len() {
            let mut row: Vec<Cell<T>> = Vec::with_capacity(self.config.layers);
            for (l, &(w, u, b)) in weights.iter().enumerate() {
                let input = if l == 0 { &x[t] } else { &row[l - 1].h };
                let n_in = input.len();
                let (h_prev, c_prev) = match t {
                    0 => (&zeros, &zeros),
                    _ => (&cells[t - 1][l].h, &cells[t - 1][l].c),
                };
                let gates: Vec<T> = (0..4 * k)
                    .map(|r| {
                        let z = b[r] + dot(&w[r * n_in..(r + 1) * n_in], input) + dot(&u[r * k..(r + 1) * k], h_prev);
                        if r < k {
                            z.tanh()
                        } else {
                            sigmoid(z)
                        }
                    })
                    .collect();
                let c: Vec<T> = (0..k).map(|i| gates[k + i] * gates[i] + gates[2 * k + i] * c_prev[i]).collect();
                let tanh_c: Vec<T> = c.iter().map(|v| v.tanh()).collect();
                let h = (0..k).map(|i| gates[3 * k + i] * tanh_c[i]).collect();
                row.push(Cell { gates, c, tanh_c, h });
            }
            cells.push(row);
        }

        let top = &cells[ids.len() - 1][self.config.layers - 1].h;
        let hw = self.params.slice("head.weight");
        let hb = self.params.slice("head.bias");
        let out = (0..self.config.n_outputs)
            .map(|c| hb[c] + dot(&hw[c * k..(c + 1) * k], top))
            .collect();
        Ok(Pass { x, cells, out })
    }
}

fn zero_pad_row<T: Scalar>(params: &mut Params<T>, d: usize) {
    let pad = PAD as usize;
    params.slice_mut("embedding")[pad * d..(pad + 1) * d].fill(T::zero());
}

impl<T: Scalar> Model<T> for LstmModel<T> {
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
        Ok(self.run(ids)?.out)
    }

    fn loss(&self, ids: &[u32], target: Target<T>, _rng: Option<&mut dyn RngCore>) -> Result<T> {
        Ok(output_loss(&self.run(ids)?.out, target).0)
    }

    /// Backpropagation through time. At each step the top layer is handled
    /// first so its input gradient is ready for the layer below.
    fn backward(
        &self,
        ids: &[u32],
        target: Target<T>,
        scale: T,
        grads: &mut [T],
        _rng: Option<&mut dyn RngCore>,
    ) -> Result<T> {
        let pass = self.run(ids)?;
        let (loss, dout) = output_loss(&pass.out, target);
        let (d, k, layers) = (self.config.embed_dim, self.config.hidden, self.config.layers);
        let n = ids.len();
        let layout = &self.params.layout;
        let one = T::one();

        let hw_off = layout.get("head.weight").expect("head.weight").offset;
        let hb_off = layout.get("head.bias").expect("head.bias").offset;
        let hw = self.params.slice("head.weight");
        let mut dh_head = vec![T::zero(); k];
        let top_h = &pass.cells[n - 1][layers - 1].h;
        for (c, &g) in dout.iter().enumerate() {
            let g = g * scale;
            axpy(g, top_h, &mut grads[hw_off + c * k..hw_off + (c + 1) * k]);
            grads[hb_off + c] += g;
            axpy(g, &hw[c * k..(c + 1) * k], &mut dh_head);
        }

        let offsets: Vec<(usize, usize, usize)> = (0..layers)
            .map(|l| {
                let get = |s: &str| layout.get(&format!("lstm{l}.{s}")).expect("lstm segment").offset;
                (get("w"), get("u"), get("b"))
            })
            .collect();
        let emb_off = layout.get("embedding").expect("embedding").offset;
        let zeros = vec![T::zero(); k];

        let mut dh_rec = vec![vec![T::zero(); k]; layers];
        let mut dc_rec = vec![vec![T::zero(); k]; layers];
        for t in (0..n).rev() {
            // gradient flowing into h[t][l] from layer l+1's input at step t
            let mut dh_above: Option<Vec<T>> = None;
            for l in (0..layers).rev() {
                let cell = &pass.cells[t][l];
                let mut dh = std::mem::replace(&mut dh_rec[l], vec![T::zero(); k]);
                if let Some(above) = dh_above.take() {
                    axpy(one, &above, &mut dh);
                }
                if t == n - 1 && l == layers - 1 {
                    axpy(one, &dh_head, &mut dh);
                }
                let g = &cell.gates;
                let (h_prev, c_prev) = match t {
                    0 => (&zeros, &zeros),
                    _ => (&pass.cells[t - 1][l].h, &pass.cells[t - 1][l].c),
                };
                let mut dz = vec![T::zero(); 4 * k];
                let dc_next = &mut dc_rec[l];
                for i in 0..k {
                    let (cand, upd, fgt, outg, tc) = (g[i], g[k + i], g[2 * k + i], g[3 * k + i], cell.tanh_c[i]);
                    let dc = dc_next[i] + dh[i] * outg * (one - tc * tc);
                    dz[i] = dc * upd * (one - cand * cand);
                    dz[k + i] = dc * cand * upd * (one - upd);
                    dz[2 * k + i] = dc * c_prev[i] * fgt * (one - fgt);
                    dz[3 * k + i] = dh[i] * tc * outg * (one - outg);
                    dc_next[i] = dc * fgt;
                }

                let input: &[T] = if l == 0 { &pass.x[t] } else { &pass.cells[t][l - 1].h };
                let n_in = input.len();
                let (w_off, u_off, b_off) = offsets[l];
                let w = &self.params.values[w_off..w_off + 4 * k * n_in];
                let u = &self.params.values[u_off..u_off + 4 * k * k];
                let mut dx = vec![T::zero(); n_in];
                let mut dh_prev = vec![T::zero(); k];
                for (r, &dzr) in dz.iter().enumerate() {
                    if dzr == T::zero() {
                        continue;
                    }
                    axpy(dzr, input, &mut grads[w_off + r * n_in..w_off + (r + 1) * n_in]);
                    axpy(dzr, h_prev, &mut grads[u_off + r * k..u_off + (r + 1) * k]);
                    grads[b_off + r] += dzr;
                    axpy(dzr, &w[r * n_in..(r + 1) * n_in], &mut dx);
                    axpy(dzr, &u[r * k..(r + 1) * k], &mut dh_prev);
                }
                dh_rec[l] = dh_prev;
                if l > 0 {
                    dh_above = Some(dx);
                } else if ids[t] != PAD {
                    let at = emb_off + ids[t] as usize * d;
                    axpy(one, &dx, &mut grads[at..at + d]);
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
