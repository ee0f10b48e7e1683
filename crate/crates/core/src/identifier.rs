//! Online neural plant model.
//!
//! A series-parallel NARX model of order (2, 2): the network predicts the
//! next plant output from the two most recent controls and the two most
//! recent measured outputs, trained by one SGD step per sample. Its job is
//! to hand the gain tuner the plant Jacobian — the sensitivity of the plant
//! output to the control — which signs and scales the tuner's update.
//!
//! Controls and outputs are normalized by fixed scale factors before they
//! reach the network; volts and meters differ by orders of magnitude and
//! plain SGD needs inputs of comparable size.

use crate::error::{Error, Result};
use crate::mlp::{Mlp, OutputActivation};
use crate::rng::SplitMix64;

/// Regressor order: number of past controls and past outputs used.
const ORDER: usize = 2;

#[derive(Debug, Clone)]
pub struct Identifier {
    net: Mlp,
    /// Most recent controls, newest first. Zero-padded at start.
    u_hist: [f64; ORDER],
    /// Most recent measured outputs, newest first.
    y_hist: [f64; ORDER],
    u_scale: f64,
    y_scale: f64,
    /// Scaled prediction from the last `predict` call.
    last_scaled_pred: Option<f64>,
}

impl Identifier {
    /// `u_scale` and `y_scale` must be strictly positive.
    pub fn new(
        hidden_width: usize,
        eta: f64,
        u_scale: f64,
        y_scale: f64,
        rng: &mut SplitMix64,
    ) -> Result<Self> {
        if !(u_scale > 0.0) {
            return Err(Error::InvalidParam {
                key: "u_scale".into(),
                message: "must be strictly positive".into(),
            });
        }
        if !(y_scale > 0.0) {
            return Err(Error::InvalidParam {
                key: "y_scale".into(),
                message: "must be strictly positive".into(),
            });
        }
        Ok(Identifier {
            net: Mlp::new(
                2 * ORDER,
                hidden_width,
                1,
                OutputActivation::Linear,
                eta,
                rng,
            ),
            u_hist: [0.0; ORDER],
            y_hist: [0.0; ORDER],
            u_scale,
            y_scale,
            last_scaled_pred: None,
        })
    }

    fn regressors(&self) -> [f64; 2 * ORDER] {
        [
            self.u_hist[0] / self.u_scale,
            self.u_hist[1] / self.u_scale,
            self.y_hist[0] / self.y_scale,
            self.y_hist[1] / self.y_scale,
        ]
    }

    /// Predict the plant output for the current tick from past samples only.
    pub fn predict(&mut self) -> f64 {
        let x = self.regressors();
        let out = self.net.forward(&x).expect("regressor length is fixed");
        self.last_scaled_pred = Some(out[0]);
        out[0] * self.y_scale
    }

    /// One SGD step against the measured output, then advance the output
    /// history. Returns the prediction error `y_actual - y_hat`.
    ///
    /// `predict` must have been called this tick.
    pub fn train_step(&mut self, y_actual: f64) -> Result<f64> {
        let pred = self
            .last_scaled_pred
            .take()
            .ok_or(Error::Usage("train_step called before predict"))?;
        let residual_scaled = y_actual / self.y_scale - pred;
        // Identity chain: the "plant" of the identifier loss is its own
        // output, so J = 1 and du/do = 1.
        self.net.backward(residual_scaled, 1.0, &[1.0])?;
        self.y_hist = [y_actual, self.y_hist[0]];
        Ok(y_actual - pred * self.y_scale)
    }

    /// Record the control applied this tick, advancing the input history.
    pub fn push_control(&mut self, u: f64) {
        self.u_hist = [u, self.u_hist[0]];
    }

    /// Plant Jacobian estimate: d(y_hat)/d(u(k-1)) in physical units,
    /// differentiated through the activations cached by the last `predict`.
    pub fn jacobian(&self) -> Result<f64> {
        let scaled = self.net.input_jacobian(0, 0)?;
        Ok(scaled * self.y_scale / self.u_scale)
    }

    /// Weight snapshot in the shared flat-text format.
    pub fn export_weights(&self) -> String {
        self.net.export_weights()
    }

    pub fn import_weights(&mut self, text: &str) -> Result<()> {
        self.net.import_weights(text)
    }
}

/// Finite-difference check of the analytic Jacobian on a randomly
/// initialized network: perturb u(k-1) and compare. Returns the relative
/// error. Independent oracle: uses only `predict`.
pub fn jacobian_check(seed: u64) -> f64 {
    let mut rng = SplitMix64::new(seed);
    let mut ident = Identifier::new(8, 0.01, 1.0, 1.0, &mut rng).unwrap();
    // Populate histories with arbitrary values.
    ident.u_hist = [rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)];
    ident.y_hist = [rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)];

    ident.predict();
    let analytic = ident.jacobian().unwrap();

    let h = 1e-6;
    let base_u = ident.u_hist[0];
    let mut plus = ident.clone();
    plus.u_hist[0] = base_u + h;
    let mut minus = ident.clone();
    minus.u_hist[0] = base_u - h;
    let fd = (plus.predict() - minus.predict()) / (2.0 * h);

    (analytic - fd).abs() / fd.abs().max(analytic.abs()).max(1e-10)
}

/// Drive an identifier against the synthetic linear plant
/// y(k) = gain * u(k-1) with seeded uniform controls in [-1, 1].
/// Returns (mean-square prediction error over the last quarter of the run
/// divided by the signal power, final Jacobian estimate).
pub fn linear_plant_demo(gain: f64, steps: usize, eta: f64, seed: u64) -> (f64, f64) {
    let mut rng = SplitMix64::new(seed);
    let mut ident = Identifier::new(8, eta, 1.0, 1.0, &mut rng).unwrap();
    let mut u_prev = 0.0;
    let mut sq_err_tail = 0.0;
    let mut sq_sig_tail = 0.0;
    let tail_start = steps - steps / 4;
    let mut jac = 0.0;
    for k in 0..steps {
        let y = gain * u_prev;
        let pred = ident.predict();
        jac = ident.jacobian().unwrap();
        ident.train_step(y).unwrap();
        let u = rng.uniform(-1.0, 1.0);
        ident.push_control(u);
        if k >= tail_start {
            sq_err_tail += (y - pred) * (y - pred);
            sq_sig_tail += y * y;
        }
        u_prev = u;
    }
    (sq_err_tail / sq_sig_tail.max(1e-300), jac)
}
