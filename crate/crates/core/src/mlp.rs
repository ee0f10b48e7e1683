//! Two-layer perceptron with bipolar-sigmoid activations and a
//! plant-Jacobian-weighted gradient-descent update.
//!
//! The same network type serves both roles in the controller: the gain tuner
//! (3 inputs, 3 bipolar outputs) and the plant identifier (4 inputs, 1 linear
//! output). Training minimizes E = e_c²/2 per sample; the update chains the
//! tracking error through the plant Jacobian and the sensitivity of the
//! control signal to each network output, so the caller supplies `e_c`,
//! `J_p` and `du/do` and the network handles its own layers.

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Bipolar sigmoid: (1 - e^-x) / (1 + e^-x), odd, range (-1, 1).
pub fn bipolar_sigmoid(x: f64) -> f64 {
    let e = (-x).exp();
    (1.0 - e) / (1.0 + e)
}

/// Derivative of the bipolar sigmoid expressed through its output:
/// f'(x) = (1 - f(x)²) / 2.
pub fn bipolar_sigmoid_deriv(fx: f64) -> f64 {
    (1.0 - fx * fx) / 2.0
}

/// Output-layer activation choice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OutputActivation {
    /// Bipolar sigmoid, outputs in (-1, 1). Used by the gain tuner.
    Bipolar,
    /// Identity, unbounded outputs. Used by the identifier so predictions
    /// are not squashed.
    Linear,
}

#[derive(Debug, Clone)]
struct ForwardCache {
    /// Input with the constant 1 appended.
    input_ext: Vec<f64>,
    net1: Vec<f64>,
    /// Hidden activations with the constant 1 appended.
    hidden_ext: Vec<f64>,
    output: Vec<f64>,
}

/// A two-layer perceptron. Biases are realized by appending a constant 1 to
/// the input and to the hidden vector, keeping both layers pure matrix
/// products.
#[derive(Debug, Clone)]
pub struct Mlp {
    /// (inputs + 1) x hidden.
    w1: Vec<Vec<f64>>,
    /// (hidden + 1) x outputs.
    w2: Vec<Vec<f64>>,
    n_in: usize,
    n_hidden: usize,
    n_out: usize,
    out_act: OutputActivation,
    /// Learning rate.
    pub eta: f64,
    cache: Option<ForwardCache>,
}

impl Mlp {
    /// New network with weights drawn uniformly from [-0.5, 0.5).
    pub fn new(
        n_in: usize,
        n_hidden: usize,
        n_out: usize,
        out_act: OutputActivation,
        eta: f64,
        rng: &mut SplitMix64,
    ) -> Self {
        let w1 = (0..n_in + 1)
            .map(|_| (0..n_hidden).map(|_| rng.uniform(-0.5, 0.5)).collect())
            .collect();
        let w2 = (0..n_hidden + 1)
            .map(|_| (0..n_out).map(|_| rng.uniform(-0.5, 0.5)).collect())
            .collect();
        Mlp {
            w1,
            w2,
            n_in,
            n_hidden,
            n_out,
            out_act,
            eta,
            cache: None,
        }
    }

    pub fn input_len(&self) -> usize {
        self.n_in
    }

    pub fn output_len(&self) -> usize {
        self.n_out
    }

    /// Forward pass; activations are cached for the next backward call.
    pub fn forward(&mut self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.n_in {
            return Err(Error::Dimension {
                expected: self.n_in,
                got: input.len(),
            });
        }
        let mut input_ext = Vec::with_capacity(self.n_in + 1);
        input_ext.extend_from_slice(input);
        input_ext.push(1.0);

        let mut net1 = vec![0.0; self.n_hidden];
        for (a, row) in self.w1.iter().enumerate() {
            for (i, w) in row.iter().enumerate() {
                net1[i] += w * input_ext[a];
            }
        }
        let mut hidden_ext: Vec<f64> = net1.iter().map(|&x| bipolar_sigmoid(x)).collect();
        hidden_ext.push(1.0);

        let mut net2 = vec![0.0; self.n_out];
        for (i, row) in self.w2.iter().enumerate() {
            for (j, w) in row.iter().enumerate() {
                net2[j] += w * hidden_ext[i];
            }
        }
        let output: Vec<f64> = match self.out_act {
            OutputActivation::Bipolar => net2.iter().map(|&x| bipolar_sigmoid(x)).collect(),
            OutputActivation::Linear => net2.clone(),
        };

        self.cache = Some(ForwardCache {
            input_ext,
            net1,
            hidden_ext,
            output: output.clone(),
        });
        Ok(output)
    }

    /// Output of the last forward pass.
    pub fn last_output(&self) -> Option<&[f64]> {
        self.cache.as_ref().map(|c| c.output.as_slice())
    }

    /// One gradient-descent step on E = e_c²/2 using the cached activations.
    ///
    /// `du_do[j]` is the sensitivity of the control signal to output j; the
    /// chain for weight w is dE/dw = -e_c · j_p · du/do · do/dw. The second
    /// layer is updated from the pre-update first-layer error terms, matching
    /// plain backpropagation.
    pub fn backward(&mut self, e_c: f64, j_p: f64, du_do: &[f64]) -> Result<()> {
        let cache = self
            .cache
            .as_ref()
            .ok_or(Error::Usage("backward called before forward"))?;
        if du_do.len() != self.n_out {
            return Err(Error::Dimension {
                expected: self.n_out,
                got: du_do.len(),
            });
        }

        // delta2_j = e_c * J_p * du/do_j * f2'(net2_j)
        let delta2: Vec<f64> = (0..self.n_out)
            .map(|j| {
                let f2p = match self.out_act {
                    OutputActivation::Bipolar => bipolar_sigmoid_deriv(cache.output[j]),
                    OutputActivation::Linear => 1.0,
                };
                e_c * j_p * du_do[j] * f2p
            })
            .collect();

        // delta1_i = f1'(net1_i) * sum_j w2[i][j] * delta2_j  (pre-update w2)
        let delta1: Vec<f64> = (0..self.n_hidden)
            .map(|i| {
                let acc: f64 = self.w2[i].iter().zip(&delta2).map(|(w, d)| w * d).sum();
                bipolar_sigmoid_deriv(bipolar_sigmoid(cache.net1[i])) * acc
            })
            .collect();

        for (i, row) in self.w2.iter_mut().enumerate() {
            for (j, w) in row.iter_mut().enumerate() {
                *w += self.eta * delta2[j] * cache.hidden_ext[i];
            }
        }
        for (a, row) in self.w1.iter_mut().enumerate() {
            for (i, w) in row.iter_mut().enumerate() {
                *w += self.eta * delta1[i] * cache.input_ext[a];
            }
        }
        Ok(())
    }

    /// Analytic derivative of output `out` with respect to input `inp`,
    /// evaluated at the cached forward pass.
    pub fn input_jacobian(&self, out: usize, inp: usize) -> Result<f64> {
        let cache = self
            .cache
            .as_ref()
            .ok_or(Error::Usage("input_jacobian called before forward"))?;
        if out >= self.n_out || inp >= self.n_in {
            return Err(Error::Dimension {
                expected: self.n_out.max(self.n_in),
                got: out.max(inp),
            });
        }
        let f2p = match self.out_act {
            OutputActivation::Bipolar => bipolar_sigmoid_deriv(cache.output[out]),
            OutputActivation::Linear => 1.0,
        };
        let mut acc = 0.0;
        for i in 0..self.n_hidden {
            let f1p = bipolar_sigmoid_deriv(bipolar_sigmoid(cache.net1[i]));
            acc += self.w1[inp][i] * f1p * self.w2[i][out];
        }
        Ok(acc * f2p)
    }

    /// Flat-text weight snapshot: dimensions then the two matrices row by
    /// row, full float precision.
    pub fn export_weights(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("{} {} {}\n", self.n_in, self.n_hidden, self.n_out));
        for row in self.w1.iter().chain(self.w2.iter()) {
            let joined: Vec<String> = row.iter().map(|w| w.to_string()).collect();
            out.push_str(&joined.join(" "));
            out.push('\n');
        }
        out
    }

    /// Restore weights from [`export_weights`] text. Dimensions must match.
    pub fn import_weights(&mut self, text: &str) -> Result<()> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or(Error::BadTrace("empty snapshot".into()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| {
                t.parse()
                    .map_err(|_| Error::BadTrace(format!("bad dim `{t}`")))
            })
            .collect::<Result<_>>()?;
        if dims != [self.n_in, self.n_hidden, self.n_out] {
            return Err(Error::BadTrace(format!(
                "snapshot dims {dims:?} do not match network ({}, {}, {})",
                self.n_in, self.n_hidden, self.n_out
            )));
        }
        let mut parse_row = |len: usize| -> Result<Vec<f64>> {
            let line = lines
                .next()
                .ok_or(Error::BadTrace("truncated snapshot".into()))?;
            let row: Vec<f64> = line
                .split_whitespace()
                .map(|t| {
                    t.parse()
                        .map_err(|_| Error::BadTrace(format!("bad weight `{t}`")))
                })
                .collect::<Result<_>>()?;
            if row.len() != len {
                return Err(Error::BadTrace(format!(
                    "row length {} != {len}",
                    row.len()
                )));
            }
            Ok(row)
        };
        let mut w1 = Vec::with_capacity(self.n_in + 1);
        for _ in 0..self.n_in + 1 {
            w1.push(parse_row(self.n_hidden)?);
        }
        let mut w2 = Vec::with_capacity(self.n_hidden + 1);
        for _ in 0..self.n_hidden + 1 {
            w2.push(parse_row(self.n_out)?);
        }
        self.w1 = w1;
        self.w2 = w2;
        self.cache = None;
        Ok(())
    }

    /// Flat weight access for finite-difference probing (diagnostics only).
    fn weight(&self, idx: usize) -> f64 {
        let w1_len = (self.n_in + 1) * self.n_hidden;
        if idx < w1_len {
            self.w1[idx / self.n_hidden][idx % self.n_hidden]
        } else {
            let k = idx - w1_len;
            self.w2[k / self.n_out][k % self.n_out]
        }
    }

    fn weight_mut(&mut self, idx: usize) -> &mut f64 {
        let w1_len = (self.n_in + 1) * self.n_hidden;
        if idx < w1_len {
            &mut self.w1[idx / self.n_hidden][idx % self.n_hidden]
        } else {
            let k = idx - w1_len;
            &mut self.w2[k / self.n_out][k % self.n_out]
        }
    }

    fn weight_count(&self) -> usize {
        (self.n_in + 1) * self.n_hidden + (self.n_hidden + 1) * self.n_out
    }
}

/// Finite-difference check of the tuner-style update against the loss
/// E(w) = (y_d - c·u(w))²/2 under a frozen linear surrogate plant y = c·u,
/// where u(w) = Σ_j map(o_j(w))·e_j is the control produced from the network
/// outputs. Returns the maximum relative error between the analytic gradient
/// implied by `backward` and central differences over all weights.
///
/// This is the independent oracle for the update rule: it never calls
/// `backward`, only `forward`.
pub fn gradient_check(seed: u64) -> f64 {
    let mut rng = SplitMix64::new(seed);
    let n_in = 3;
    let hidden = 6;
    let n_out = 3;
    let mut net = Mlp::new(
        n_in,
        hidden,
        n_out,
        OutputActivation::Bipolar,
        0.01,
        &mut rng,
    );

    let errors = [
        rng.uniform(-1.0, 1.0),
        rng.uniform(-1.0, 1.0),
        rng.uniform(-1.0, 1.0),
    ];
    let g_half = [
        rng.uniform(0.5, 2.0),
        rng.uniform(0.5, 2.0),
        rng.uniform(0.5, 2.0),
    ];
    let plant_gain = rng.uniform(0.3, 1.5);
    let y_d = rng.uniform(-1.0, 1.0);
    let input = errors;

    // Loss as a pure function of the weights.
    let loss = |net: &mut Mlp| -> f64 {
        let o = net.forward(&input).unwrap();
        let u: f64 = (0..n_out)
            .map(|j| g_half[j] * (1.0 + o[j]) * errors[j])
            .sum();
        let y = plant_gain * u;
        0.5 * (y_d - y) * (y_d - y)
    };

    // Analytic gradient of the same loss, written independently of
    // `backward`: dE/do_j = -e_c * c * du/do_j, then standard layer chain.
    let o = net.forward(&input).unwrap();
    let u: f64 = (0..n_out)
        .map(|j| g_half[j] * (1.0 + o[j]) * errors[j])
        .sum();
    let e_c = y_d - plant_gain * u;
    let du_do: Vec<f64> = (0..n_out).map(|j| g_half[j] * errors[j]).collect();

    // backward() applies dw = eta * e_c * j_p * du/do * (layer terms); the
    // gradient it descends is dE/dw = -(dw/eta). Recover it by diffing
    // weights across one update with eta = 1.
    let mut updated = net.clone();
    updated.eta = 1.0;
    updated.backward(e_c, plant_gain, &du_do).unwrap();

    let mut max_rel = 0.0_f64;
    let h = 1e-6;
    for idx in 0..net.weight_count() {
        let base = net.weight(idx);
        let mut plus = net.clone();
        *plus.weight_mut(idx) = base + h;
        let mut minus = net.clone();
        *minus.weight_mut(idx) = base - h;
        let fd = (loss(&mut plus) - loss(&mut minus)) / (2.0 * h);
        let analytic = -(updated.weight(idx) - base);
        let denom = fd.abs().max(analytic.abs()).max(1e-8);
        max_rel = max_rel.max((fd - analytic).abs() / denom);
    }
    max_rel
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_shape() {
        assert_eq!(bipolar_sigmoid(0.0), 0.0);
        // Saturates to exactly 1.0 in f64 for large inputs.
        assert!(bipolar_sigmoid(100.0) <= 1.0);
        assert!(bipolar_sigmoid(100.0) > 0.999);
        assert!(bipolar_sigmoid(5.0) < 1.0);
        for x in [-3.0, -0.5, 0.7, 2.0] {
            let f = bipolar_sigmoid(x);
            assert!((bipolar_sigmoid(-x) + f).abs() < 1e-12, "odd at {x}");
            assert!((-1.0..1.0).contains(&f));
        }
    }

    #[test]
    fn sigmoid_derivative_matches_finite_difference() {
        let h = 1e-6;
        for x in [-2.0, -0.3, 0.0, 0.9, 3.0] {
            let fd = (bipolar_sigmoid(x + h) - bipolar_sigmoid(x - h)) / (2.0 * h);
            let analytic = bipolar_sigmoid_deriv(bipolar_sigmoid(x));
            assert!((fd - analytic).abs() < 1e-8, "x = {x}");
        }
    }

    #[test]
    fn zero_weights_give_zero_output() {
        let mut rng = SplitMix64::new(1);
        let mut net = Mlp::new(3, 4, 2, OutputActivation::Bipolar, 0.01, &mut rng);
        for row in net.w1.iter_mut().chain(net.w2.iter_mut()) {
            for w in row.iter_mut() {
                *w = 0.0;
            }
        }
        let out = net.forward(&[0.4, -0.7, 2.0]).unwrap();
        assert_eq!(out, vec![0.0, 0.0]);
    }

    #[test]
    fn zero_input_zero_first_layer_gives_zero() {
        let mut rng = SplitMix64::new(2);
        let mut net = Mlp::new(2, 3, 1, OutputActivation::Bipolar, 0.01, &mut rng);
        for row in net.w1.iter_mut() {
            for w in row.iter_mut() {
                *w = 0.0;
            }
        }
        // Hidden outputs are f(0) = 0; only the hidden bias row of w2 remains.
        for j in 0..1 {
            net.w2[3][j] = 0.0;
        }
        let out = net.forward(&[0.0, 0.0]).unwrap();
        assert_eq!(out, vec![0.0]);
    }

    /// Independent re-implementation of the forward pass, kept deliberately
    /// naive (explicit transposed products).
    fn forward_oracle(net: &Mlp, input: &[f64], bipolar_out: bool) -> Vec<f64> {
        let mut u: Vec<f64> = input.to_vec();
        u.push(1.0);
        let net1: Vec<f64> = (0..net.n_hidden)
            .map(|i| (0..u.len()).map(|a| net.w1[a][i] * u[a]).sum())
            .collect();
        let mut o0: Vec<f64> = net1.iter().map(|&x| bipolar_sigmoid(x)).collect();
        o0.push(1.0);
        (0..net.n_out)
            .map(|j| {
                let s: f64 = (0..o0.len()).map(|i| net.w2[i][j] * o0[i]).sum();
                if bipolar_out {
                    bipolar_sigmoid(s)
                } else {
                    s
                }
            })
            .collect()
    }

    #[test]
    fn forward_matches_independent_oracle() {
        let mut rng = SplitMix64::new(33);
        for _ in 0..20 {
            let mut net = Mlp::new(4, 5, 3, OutputActivation::Bipolar, 0.01, &mut rng);
            let input: Vec<f64> = (0..4).map(|_| rng.uniform(-2.0, 2.0)).collect();
            let got = net.forward(&input).unwrap();
            let want = forward_oracle(&net, &input, true);
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let mut rng = SplitMix64::new(4);
        let mut net = Mlp::new(3, 4, 2, OutputActivation::Bipolar, 0.01, &mut rng);
        assert!(matches!(
            net.forward(&[1.0, 2.0]),
            Err(Error::Dimension {
                expected: 3,
                got: 2
            })
        ));
    }

    #[test]
    fn backward_before_forward_rejected() {
        let mut rng = SplitMix64::new(4);
        let mut net = Mlp::new(3, 4, 2, OutputActivation::Bipolar, 0.01, &mut rng);
        assert!(net.backward(1.0, 1.0, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn zero_error_freezes_weights() {
        let mut rng = SplitMix64::new(5);
        let mut net = Mlp::new(3, 4, 3, OutputActivation::Bipolar, 0.01, &mut rng);
        let before = net.clone();
        net.forward(&[0.1, 0.2, 0.3]).unwrap();
        net.backward(0.0, 1.3, &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(net.w1, before.w1);
        assert_eq!(net.w2, before.w2);
    }

    #[test]
    fn zero_jacobian_freezes_weights() {
        let mut rng = SplitMix64::new(6);
        let mut net = Mlp::new(3, 4, 3, OutputActivation::Bipolar, 0.01, &mut rng);
        let before = net.clone();
        net.forward(&[0.1, 0.2, 0.3]).unwrap();
        net.backward(0.7, 0.0, &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(net.w1, before.w1);
        assert_eq!(net.w2, before.w2);
    }

    #[test]
    fn update_is_linear_in_error() {
        let mut rng = SplitMix64::new(7);
        let base = Mlp::new(3, 5, 3, OutputActivation::Bipolar, 0.01, &mut rng);
        let input = [0.3, -0.2, 0.9];
        let du = [0.5, 1.0, -0.7];

        let mut a = base.clone();
        a.forward(&input).unwrap();
        a.backward(0.4, 1.1, &du).unwrap();
        let mut b = base.clone();
        b.forward(&input).unwrap();
        b.backward(0.8, 1.1, &du).unwrap();

        for idx in 0..base.weight_count() {
            let da = a.weight(idx) - base.weight(idx);
            let db = b.weight(idx) - base.weight(idx);
            assert!((db - 2.0 * da).abs() < 1e-12, "{da} {db}");
        }
    }

    #[test]
    fn gradient_matches_finite_difference() {
        for seed in 0..5 {
            let err = gradient_check(seed);
            assert!(err <= 1e-4, "seed {seed}: max rel error {err}");
        }
    }

    #[test]
    fn one_step_decreases_loss_on_surrogate_plant() {
        for &eta in &[1e-3, 1e-4] {
            let mut rng = SplitMix64::new(12);
            let mut net = Mlp::new(3, 6, 3, OutputActivation::Bipolar, eta, &mut rng);
            let errors = [0.5, 0.2, -0.3];
            let g_half = [1.0, 1.0, 1.0];
            let c = 0.8;
            let y_d = 0.9;
            let loss = |net: &mut Mlp| -> f64 {
                let o = net.forward(&errors).unwrap();
                let u: f64 = (0..3).map(|j| g_half[j] * (1.0 + o[j]) * errors[j]).sum();
                0.5 * (y_d - c * u) * (y_d - c * u)
            };
            let before = loss(&mut net);
            let o = net.last_output().unwrap().to_vec();
            let u: f64 = (0..3).map(|j| g_half[j] * (1.0 + o[j]) * errors[j]).sum();
            let e_c = y_d - c * u;
            let du: Vec<f64> = (0..3).map(|j| g_half[j] * errors[j]).collect();
            net.backward(e_c, c, &du).unwrap();
            let after = loss(&mut net);
            assert!(after < before, "eta {eta}: {before} -> {after}");
        }
    }

    #[test]
    fn snapshot_round_trips() {
        let mut rng = SplitMix64::new(8);
        let net = Mlp::new(4, 6, 2, OutputActivation::Linear, 0.01, &mut rng);
        let text = net.export_weights();
        let mut other = Mlp::new(4, 6, 2, OutputActivation::Linear, 0.01, &mut rng);
        other.import_weights(&text).unwrap();
        assert_eq!(net.w1, other.w1);
        assert_eq!(net.w2, other.w2);
    }

    #[test]
    fn snapshot_dim_mismatch_rejected() {
        let mut rng = SplitMix64::new(9);
        let net = Mlp::new(4, 6, 2, OutputActivation::Linear, 0.01, &mut rng);
        let mut other = Mlp::new(3, 6, 2, OutputActivation::Linear, 0.01, &mut rng);
        assert!(other.import_weights(&net.export_weights()).is_err());
    }

    #[test]
    fn input_jacobian_matches_finite_difference() {
        let mut rng = SplitMix64::new(10);
        let mut net = Mlp::new(4, 6, 1, OutputActivation::Linear, 0.01, &mut rng);
        let x = [0.2, -0.4, 0.1, 0.8];
        net.forward(&x).unwrap();
        let analytic = net.input_jacobian(0, 0).unwrap();
        let h = 1e-7;
        let mut xp = x;
        xp[0] += h;
        let mut xm = x;
        xm[0] -= h;
        let fp = net.clone().forward(&xp).unwrap()[0];
        let fm = net.clone().forward(&xm).unwrap()[0];
        let fd = (fp - fm) / (2.0 * h);
        assert!(
            (analytic - fd).abs() <= 1e-6 * fd.abs().max(1e-8),
            "{analytic} vs {fd}"
        );
    }
}
