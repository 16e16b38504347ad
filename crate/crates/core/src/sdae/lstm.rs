//! Standard LSTM cell (input, forget, output gates; no peepholes) with
//! hand-written backpropagation through time.

use crate::numeric::{Matrix, Real, Rng};

/// Gate rows are stacked as `[input; forget; output; candidate]`, each
/// `hidden` rows tall. Columns are `[x; h_prev]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmParams<T: Real = f32> {
    pub weights: Matrix<T>,
    pub bias: Vec<T>,
    pub input: usize,
    pub hidden: usize,
}

/// Activations of one forward step, kept for the backward pass.
#[derive(Clone, Debug)]
pub struct LstmStep<T> {
    xh: Vec<T>,
    gates: Vec<T>,
    c_prev: Vec<T>,
    pub(crate) c: Vec<T>,
    tanh_c: Vec<T>,
    pub h: Vec<T>,
}

impl<T: Real> LstmStep<T> {
    pub fn c(&self) -> &[T] {
        &self.c
    }
}

#[inline]
fn sigmoid<T: Real>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

impl<T: Real> LstmParams<T> {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        LstmParams {
            weights: Matrix::zeros(4 * hidden, input + hidden),
            bias: vec![T::zero(); 4 * hidden],
            input,
            hidden,
        }
    }

    /// Weights uniform in `[-scale, scale]`, forget-gate bias 1, other biases 0.
    pub fn init(input: usize, hidden: usize, scale: f64, rng: &mut Rng) -> Self {
        let mut p = LstmParams {
            weights: Matrix::uniform(4 * hidden, input + hidden, scale, rng),
            bias: vec![T::zero(); 4 * hidden],
            input,
            hidden,
        };
        p.bias[hidden..2 * hidden].iter_mut().for_each(|b| *b = T::one());
        p
    }

    pub fn cast<U: Real>(&self) -> LstmParams<U> {
        LstmParams {
            weights: self.weights.cast(),
            bias: self.bias.iter().map(|&b| U::cast(b.to_f64c())).collect(),
            input: self.input,
            hidden: self.hidden,
        }
    }

    /// One step from `(h_prev, c_prev)` on input `x`.
    pub fn forward(&self, x: &[T], h_prev: &[T], c_prev: &[T]) -> LstmStep<T> {
        let hd = self.hidden;
        let mut xh = Vec::with_capacity(self.input + hd);
        xh.extend_from_slice(x);
        xh.extend_from_slice(h_prev);
        let mut gates = self.bias.clone();
        for (r, g) in gates.iter_mut().enumerate() {
            *g += crate::numeric::dot(self.weights.row(r), &xh);
        }
        for (r, g) in gates.iter_mut().enumerate() {
            *g = if r < 3 * hd { sigmoid(*g) } else { g.tanh() };
        }
        let mut c = vec![T::zero(); hd];
        let mut tanh_c = vec![T::zero(); hd];
        let mut h = vec![T::zero(); hd];
        for k in 0..hd {
            let (i, f, o, g) = (gates[k], gates[hd + k], gates[2 * hd + k], gates[3 * hd + k]);
            c[k] = f * c_prev[k] + i * g;
            tanh_c[k] = c[k].tanh();
            h[k] = o * tanh_c[k];
        }
        LstmStep {
            xh,
            gates,
            c_prev: c_prev.to_vec(),
            c,
            tanh_c,
            h,
        }
    }

    /// Inference-only step updating `h` and `c` in place; `gates` is scratch.
    pub fn step_in_place(&self, x: &[T], h: &mut [T], c: &mut [T], gates: &mut Vec<T>) {
        let hd = self.hidden;
        gates.clear();
        gates.extend_from_slice(&self.bias);
        let split = self.input;
        for (r, g) in gates.iter_mut().enumerate() {
            let row = self.weights.row(r);
            *g += crate::numeric::dot(&row[..split], x) + crate::numeric::dot(&row[split..], h);
        }
        for k in 0..hd {
            let i = sigmoid(gates[k]);
            let f = sigmoid(gates[hd + k]);
            let o = sigmoid(gates[2 * hd + k]);
            let g = gates[3 * hd + k].tanh();
            c[k] = f * c[k] + i * g;
            h[k] = o * c[k].tanh();
        }
    }

    /// Backward through one step. `dh`/`dc` are the gradients flowing into this
    /// step's outputs; they are overwritten with the gradients for
    /// `h_prev`/`c_prev`. Returns the gradient for `x`.
    pub fn backward(&self, step: &LstmStep<T>, dh: &mut [T], dc: &mut [T], grads: &mut LstmParams<T>) -> Vec<T> {
        let hd = self.hidden;
        let mut da = vec![T::zero(); 4 * hd];
        for k in 0..hd {
            let (i, f, o, g) = (
                step.gates[k],
                step.gates[hd + k],
                step.gates[2 * hd + k],
                step.gates[3 * hd + k],
            );
            let tc = step.tanh_c[k];
            let d_o = dh[k] * tc;
            let dck = dc[k] + dh[k] * o * (T::one() - tc * tc);
            let d_i = dck * g;
            let d_g = dck * i;
            let d_f = dck * step.c_prev[k];
            dc[k] = dck * f;
            da[k] = d_i * i * (T::one() - i);
            da[hd + k] = d_f * f * (T::one() - f);
            da[2 * hd + k] = d_o * o * (T::one() - o);
            da[3 * hd + k] = d_g * (T::one() - g * g);
        }
        grads.weights.rank1_acc(T::one(), &da, &step.xh);
        for (b, d) in grads.bias.iter_mut().zip(&da) {
            *b += *d;
        }
        let mut dxh = vec![T::zero(); self.input + hd];
        self.weights.matvec_t_acc(&da, &mut dxh);
        dh.copy_from_slice(&dxh[self.input..]);
        dxh.truncate(self.input);
        dxh
    }

    pub fn fill_zero(&mut self) {
        self.weights.fill(T::zero());
        self.bias.iter_mut().for_each(|b| *b = T::zero());
    }

    pub fn sq_norm(&self) -> f64 {
        self.weights
            .as_slice()
            .iter()
            .chain(&self.bias)
            .map(|v| v.to_f64c() * v.to_f64c())
            .sum()
    }

    /// `self += alpha · other`
    pub fn add_scaled(&mut self, alpha: T, other: &LstmParams<T>) {
        crate::numeric::axpy(alpha, other.weights.as_slice(), self.weights.as_mut_slice());
        crate::numeric::axpy(alpha, &other.bias, &mut self.bias);
    }

    pub fn is_finite(&self) -> bool {
        self.weights.is_finite() && self.bias.iter().all(|b| b.is_finite())
    }
}
