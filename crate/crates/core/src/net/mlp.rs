//! Two-layer perceptrons stored as offsets into a flat parameter vector.

use serde::{Deserialize, Serialize};

pub(crate) fn silu(x: f64) -> f64 {
    x / (1.0 + (-x).exp())
}

pub(crate) fn silu_grad(x: f64) -> f64 {
    let s = 1.0 / (1.0 + (-x).exp());
    s * (1.0 + x * (1.0 - s))
}

/// `out = W2 · silu(W1 · x + b1) + b2`, weights row-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mlp {
    pub input: usize,
    pub hidden: usize,
    pub output: usize,
    pub offset: usize,
}

impl Mlp {
    pub fn new(input: usize, hidden: usize, output: usize, offset: usize) -> Self {
        Mlp {
            input,
            hidden,
            output,
            offset,
        }
    }

    pub fn num_params(&self) -> usize {
        self.hidden * self.input + self.hidden + self.output * self.hidden + self.output
    }

    pub fn end(&self) -> usize {
        self.offset + self.num_params()
    }

    fn w1(&self) -> usize {
        self.offset
    }

    fn b1(&self) -> usize {
        self.w1() + self.hidden * self.input
    }

    fn w2(&self) -> usize {
        self.b1() + self.hidden
    }

    fn b2(&self) -> usize {
        self.w2() + self.output * self.hidden
    }

    /// Ranges of the two weight matrices, with their fan-in.
    pub(crate) fn weight_ranges(&self) -> [(std::ops::Range<usize>, usize); 2] {
        [
            (self.w1()..self.b1(), self.input),
            (self.w2()..self.b2(), self.hidden),
        ]
    }

    /// Writes the hidden pre-activations into `pre` and the output into `out`.
    pub fn forward(&self, p: &[f64], x: &[f64], pre: &mut [f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.input);
        let w1 = &p[self.w1()..self.b1()];
        let b1 = &p[self.b1()..self.w2()];
        for h in 0..self.hidden {
            let row = &w1[h * self.input..(h + 1) * self.input];
            let mut acc = b1[h];
            for (w, xi) in row.iter().zip(x) {
                acc += w * xi;
            }
            pre[h] = acc;
        }
        let w2 = &p[self.w2()..self.b2()];
        let b2 = &p[self.b2()..self.end()];
        for o in 0..self.output {
            let row = &w2[o * self.hidden..(o + 1) * self.hidden];
            let mut acc = b2[o];
            for (w, z) in row.iter().zip(pre.iter()) {
                acc += w * silu(*z);
            }
            out[o] = acc;
        }
    }

    /// Accumulates parameter gradients into `g` and input gradients into `dx`.
    pub fn backward(&self, p: &[f64], x: &[f64], pre: &[f64], dout: &[f64], g: &mut [f64], dx: &mut [f64]) {
        let (w1, b1, w2, b2) = (self.w1(), self.b1(), self.w2(), self.b2());
        let mut dh = vec![0.0; self.hidden];
        for o in 0..self.output {
            let d = dout[o];
            if d == 0.0 {
                continue;
            }
            g[b2 + o] += d;
            let row = w2 + o * self.hidden;
            for h in 0..self.hidden {
                g[row + h] += d * silu(pre[h]);
                dh[h] += d * p[row + h];
            }
        }
        for h in 0..self.hidden {
            let dz = dh[h] * silu_grad(pre[h]);
            if dz == 0.0 {
                continue;
            }
            g[b1 + h] += dz;
            let row = w1 + h * self.input;
            for i in 0..self.input {
                g[row + i] += dz * x[i];
                dx[i] += dz * p[row + i];
            }
        }
    }
}
