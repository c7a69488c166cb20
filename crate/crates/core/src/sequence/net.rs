//! Recurrent network over one window: optional valid 1-D convolution, a
//! stack of LSTM layers and a linear head on the last hidden state.
//!
//! Parameters live in one flat vector so the training loop and gradient
//! checks can treat every architecture alike.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;
use crate::nn;
use crate::seed;

/// Nonlinearity for the candidate and the cell output. Gates are sigmoid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellActivation {
    Relu,
    Tanh,
}

impl CellActivation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            CellActivation::Relu => x.max(0.0),
            CellActivation::Tanh => math::tanh(x),
        }
    }

    /// Derivative expressed through the activation's output.
    #[inline]
    fn slope(self, out: f64) -> f64 {
        match self {
            CellActivation::Relu => {
                if out > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            CellActivation::Tanh => 1.0 - out * out,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvSpec {
    pub filters: usize,
    pub kernel: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub channels: usize,
    pub window: usize,
    pub conv: Option<ConvSpec>,
    /// Units per LSTM layer, bottom first.
    pub units: Vec<usize>,
    pub outputs: usize,
    pub activation: CellActivation,
}

#[derive(Debug, Clone, Copy)]
struct LstmAt {
    input: usize,
    units: usize,
    wx: usize,
    wh: usize,
    b: usize,
}

#[derive(Debug, Clone)]
struct Layout {
    conv: Option<(usize, usize)>,
    lstm: Vec<LstmAt>,
    dense_w: usize,
    dense_b: usize,
    total: usize,
}

impl Architecture {
    pub fn validate(&self) -> Result<()> {
        let bad = |name: &str, reason: &str| Error::InvalidParam { name: name.into(), reason: reason.into() };
        if self.channels == 0 || self.outputs == 0 {
            return Err(bad("channels", "must be at least 1"));
        }
        if self.window == 0 {
            return Err(bad("window", "must be at least 1"));
        }
        if self.units.is_empty() || self.units.contains(&0) {
            return Err(bad("units", "need at least one layer of at least one unit"));
        }
        if let Some(c) = self.conv {
            if c.filters == 0 || c.kernel == 0 {
                return Err(bad("filters", "filters and kernel must be at least 1"));
            }
            if c.kernel > self.window {
                return Err(Error::KernelTooLarge { kernel: c.kernel, window: self.window });
            }
        }
        Ok(())
    }

    /// Steps seen by the recurrent stack.
    pub fn steps(&self) -> usize {
        match self.conv {
            Some(c) => self.window + 1 - c.kernel,
            None => self.window,
        }
    }

    fn layout(&self) -> Layout {
        let mut at = 0;
        let mut take = |n: usize| {
            let o = at;
            at += n;
            o
        };
        let (conv, mut input) = match self.conv {
            Some(c) => {
                let w = take(c.filters * c.kernel * self.channels);
                (Some((w, take(c.filters))), c.filters)
            }
            None => (None, self.channels),
        };
        let mut lstm = Vec::with_capacity(self.units.len());
        for &u in &self.units {
            let wx = take(4 * u * input);
            let wh = take(4 * u * u);
            let b = take(4 * u);
            lstm.push(LstmAt { input, units: u, wx, wh, b });
            input = u;
        }
        let dense_w = take(self.outputs * input);
        let dense_b = take(self.outputs);
        Layout { conv, lstm, dense_w, dense_b, total: at }
    }

    pub fn param_count(&self) -> usize {
        self.layout().total
    }

    /// Glorot-uniform weights, zero biases except a unit forget-gate bias.
    pub fn init(&self, seed: u64) -> Vec<f64> {
        let lay = self.layout();
        let mut rng = seed::rng(seed);
        let mut p = vec![0.0; lay.total];
        if let (Some((w, b)), Some(c)) = (lay.conv, self.conv) {
            let fan = c.kernel * self.channels;
            nn::glorot(&mut rng, fan, c.kernel * c.filters, &mut p[w..b]);
        }
        for l in &lay.lstm {
            nn::glorot(&mut rng, l.input, 4 * l.units, &mut p[l.wx..l.wh]);
            nn::glorot(&mut rng, l.units, 4 * l.units, &mut p[l.wh..l.b]);
            p[l.b + l.units..l.b + 2 * l.units].iter_mut().for_each(|v| *v = 1.0);
        }
        let top = *self.units.last().unwrap();
        nn::glorot(&mut rng, top, self.outputs, &mut p[lay.dense_w..lay.dense_b]);
        p
    }

    pub fn network(&self) -> Network {
        Network { arch: self.clone(), lay: self.layout(), cache: Cache::default() }
    }
}

#[derive(Debug, Clone, Default)]
struct LayerCache {
    /// `(steps + 1) x units`; row 0 is the zero initial state.
    h: Vec<f64>,
    c: Vec<f64>,
    /// `steps x units`, activation of the cell state.
    act_c: Vec<f64>,
    /// `steps x 4 units`, activated gates in order i, f, g, o.
    gates: Vec<f64>,
}

#[derive(Debug, Clone, Default)]
struct Cache {
    conv: Vec<f64>,
    layers: Vec<LayerCache>,
    out: Vec<f64>,
}

/// Evaluator with scratch buffers; not shared across threads.
#[derive(Debug, Clone)]
pub struct Network {
    arch: Architecture,
    lay: Layout,
    cache: Cache,
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl Network {
    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn param_count(&self) -> usize {
        self.lay.total
    }

    /// Convolution output, `steps x filters`, post-ReLU.
    pub fn conv_forward(&mut self, p: &[f64], window: &[f64]) -> &[f64] {
        let (Some((w_at, b_at)), Some(spec)) = (self.lay.conv, self.arch.conv) else {
            return &[];
        };
        let ch = self.arch.channels;
        let steps = self.arch.steps();
        let span = spec.kernel * ch;
        let out = &mut self.cache.conv;
        out.clear();
        out.resize(steps * spec.filters, 0.0);
        for t in 0..steps {
            let patch = &window[t * ch..t * ch + span];
            for f in 0..spec.filters {
                let z = p[b_at + f] + dot(&p[w_at + f * span..w_at + (f + 1) * span], patch);
                out[t * spec.filters + f] = z.max(0.0);
            }
        }
        &self.cache.conv
    }

    /// Outputs for one `window x channels` sample, row-major.
    pub fn forward(&mut self, p: &[f64], window: &[f64]) -> Result<&[f64]> {
        if window.len() != self.arch.window * self.arch.channels {
            return Err(Error::ShapeMismatch(alloc::format!(
                "window of {} values, expected {}x{}",
                window.len(),
                self.arch.window,
                self.arch.channels
            )));
        }
        if p.len() != self.lay.total {
            return Err(Error::ShapeMismatch(alloc::format!("{} parameters, expected {}", p.len(), self.lay.total)));
        }
        self.conv_forward(p, window);
        let steps = self.arch.steps();
        let act = self.arch.activation;
        self.cache.layers.resize(self.lay.lstm.len(), LayerCache::default());
        for (li, l) in self.lay.lstm.iter().enumerate() {
            let u = l.units;
            let (below, rest) = self.cache.layers.split_at_mut(li);
            let lc = &mut rest[0];
            lc.h.clear();
            lc.h.resize((steps + 1) * u, 0.0);
            lc.c.clear();
            lc.c.resize((steps + 1) * u, 0.0);
            lc.act_c.clear();
            lc.act_c.resize(steps * u, 0.0);
            lc.gates.clear();
            lc.gates.resize(steps * 4 * u, 0.0);
            for t in 0..steps {
                let x: &[f64] = if li > 0 {
                    let lu = l.input;
                    &below[li - 1].h[(t + 1) * lu..(t + 2) * lu]
                } else if self.arch.conv.is_some() {
                    &self.cache.conv[t * l.input..(t + 1) * l.input]
                } else {
                    &window[t * l.input..(t + 1) * l.input]
                };
                let (h_prev, h_rest) = lc.h.split_at_mut((t + 1) * u);
                let h_prev = &h_prev[t * u..];
                let gates = &mut lc.gates[t * 4 * u..(t + 1) * 4 * u];
                for r in 0..4 * u {
                    let a = p[l.b + r]
                        + dot(&p[l.wx + r * l.input..l.wx + (r + 1) * l.input], x)
                        + dot(&p[l.wh + r * u..l.wh + (r + 1) * u], h_prev);
                    gates[r] = if (2 * u..3 * u).contains(&r) { act.apply(a) } else { math::sigmoid(a) };
                }
                let (c_prev, c_rest) = lc.c.split_at_mut((t + 1) * u);
                let c_prev = &c_prev[t * u..];
                for k in 0..u {
                    let (i, f, g, o) = (gates[k], gates[u + k], gates[2 * u + k], gates[3 * u + k]);
                    let c = f * c_prev[k] + i * g;
                    c_rest[k] = c;
                    let ac = act.apply(c);
                    lc.act_c[t * u + k] = ac;
                    h_rest[k] = o * ac;
                }
            }
        }
        let top = self.lay.lstm.last().unwrap();
        let h_last = &self.cache.layers.last().unwrap().h[steps * top.units..];
        let m = self.arch.outputs;
        self.cache.out.clear();
        for o in 0..m {
            let w = &p[self.lay.dense_w + o * top.units..self.lay.dense_w + (o + 1) * top.units];
            self.cache.out.push(p[self.lay.dense_b + o] + dot(w, h_last));
        }
        Ok(&self.cache.out)
    }

    /// Backpropagates `d_out` through the last [`Network::forward`] call,
    /// accumulating into `grad`.
    pub fn backward(&mut self, p: &[f64], window: &[f64], d_out: &[f64], grad: &mut [f64]) {
        let steps = self.arch.steps();
        let act = self.arch.activation;
        let lay = &self.lay;
        let top = *lay.lstm.last().unwrap();
        let h_last = &self.cache.layers.last().unwrap().h[steps * top.units..];
        // d loss / d h for every step of the current layer
        let mut dh_seq = vec![0.0; steps * top.units];
        for (o, d) in d_out.iter().enumerate() {
            grad[lay.dense_b + o] += d;
            let w_at = lay.dense_w + o * top.units;
            for k in 0..top.units {
                grad[w_at + k] += d * h_last[k];
                dh_seq[(steps - 1) * top.units + k] += d * p[w_at + k];
            }
        }
        for li in (0..lay.lstm.len()).rev() {
            let l = lay.lstm[li];
            let u = l.units;
            let lc = &self.cache.layers[li];
            let mut dx_seq = vec![0.0; steps * l.input];
            let mut dh_next = vec![0.0; u];
            let mut dc_next = vec![0.0; u];
            let mut da = vec![0.0; 4 * u];
            for t in (0..steps).rev() {
                let gates = &lc.gates[t * 4 * u..(t + 1) * 4 * u];
                let c_prev = &lc.c[t * u..(t + 1) * u];
                let h_prev = &lc.h[t * u..(t + 1) * u];
                for k in 0..u {
                    let (i, f, g, o) = (gates[k], gates[u + k], gates[2 * u + k], gates[3 * u + k]);
                    let ac = lc.act_c[t * u + k];
                    let dh = dh_seq[t * u + k] + dh_next[k];
                    let d_o = dh * ac;
                    let dc = dh * o * act.slope(ac) + dc_next[k];
                    da[k] = dc * g * i * (1.0 - i);
                    da[u + k] = dc * c_prev[k] * f * (1.0 - f);
                    da[2 * u + k] = dc * i * act.slope(g);
                    da[3 * u + k] = d_o * o * (1.0 - o);
                    dc_next[k] = dc * f;
                }
                let x: &[f64] = if li > 0 {
                    let lu = lay.lstm[li - 1].units;
                    &self.cache.layers[li - 1].h[(t + 1) * lu..(t + 2) * lu]
                } else if self.arch.conv.is_some() {
                    &self.cache.conv[t * l.input..(t + 1) * l.input]
                } else {
                    &window[t * l.input..(t + 1) * l.input]
                };
                dh_next.iter_mut().for_each(|v| *v = 0.0);
                let dx = &mut dx_seq[t * l.input..(t + 1) * l.input];
                for (r, &d) in da.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    grad[l.b + r] += d;
                    let wx = l.wx + r * l.input;
                    for j in 0..l.input {
                        grad[wx + j] += d * x[j];
                        dx[j] += d * p[wx + j];
                    }
                    let wh = l.wh + r * u;
                    for j in 0..u {
                        grad[wh + j] += d * h_prev[j];
                        dh_next[j] += d * p[wh + j];
                    }
                }
            }
            dh_seq = dx_seq;
        }
        if let (Some((w_at, b_at)), Some(spec)) = (lay.conv, self.arch.conv) {
            let ch = self.arch.channels;
            let span = spec.kernel * ch;
            for t in 0..steps {
                let patch = &window[t * ch..t * ch + span];
                for f in 0..spec.filters {
                    if self.cache.conv[t * spec.filters + f] <= 0.0 {
                        continue;
                    }
                    let d = dh_seq[t * spec.filters + f];
                    grad[b_at + f] += d;
                    for (g, x) in grad[w_at + f * span..w_at + (f + 1) * span].iter_mut().zip(patch) {
                        *g += d * x;
                    }
                }
            }
        }
    }

    /// Mean squared error over a set of samples and its gradient.
    pub fn loss_and_grad(
        &mut self,
        p: &[f64],
        x: &super::SequenceTensor,
        y: &crate::matrix::Matrix,
        rows: &[usize],
        grad: &mut [f64],
    ) -> Result<f64> {
        let scale = 1.0 / (rows.len() * y.cols()) as f64;
        let mut loss = 0.0;
        let mut d_out = vec![0.0; y.cols()];
        for &r in rows {
            let out = self.forward(p, x.sample(r))?;
            for (k, (o, t)) in out.iter().zip(y.row(r)).enumerate() {
                let e = o - t;
                loss += e * e * scale;
                d_out[k] = 2.0 * e * scale;
            }
            self.backward(p, x.sample(r), &d_out, grad);
        }
        Ok(loss)
    }
}
