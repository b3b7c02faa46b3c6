use super::DspError;

/// All-pole model `1 / A(z)` with `A(z) = 1 + sum_k a_k z^-k`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpcModel {
    coeffs: Vec<f64>,
    gain: f64,
    passthrough: bool,
}

impl LpcModel {
    pub fn new(coeffs: Vec<f64>, gain: f64) -> Result<Self, DspError> {
        if coeffs.len() < 2 {
            return Err(DspError::InvalidModel(format!(
                "order must be at least 2, got {}",
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) || !gain.is_finite() {
            return Err(DspError::InvalidModel("non-finite coefficient".into()));
        }
        Ok(Self {
            coeffs,
            gain,
            passthrough: false,
        })
    }

    /// Model with all-zero coefficients, used for silent or degenerate
    /// frames that must pass through untouched.
    pub fn identity(order: usize) -> Self {
        Self {
            coeffs: vec![0.0; order.max(2)],
            gain: 0.0,
            passthrough: true,
        }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    /// `a_1 ..= a_p`.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Square root of the prediction error energy.
    pub fn gain(&self) -> f64 {
        self.gain
    }

    pub fn is_passthrough(&self) -> bool {
        self.passthrough
    }

    /// Monic polynomial in descending powers: `[1, a_1, ..., a_p]`.
    pub fn polynomial(&self) -> Vec<f64> {
        std::iter::once(1.0)
            .chain(self.coeffs.iter().copied())
            .collect()
    }
}

/// Biased autocorrelation `r[k] = sum_n x[n] x[n+k]` for `k = 0..=max_lag`.
pub fn autocorrelation(x: &[f64], max_lag: usize) -> Vec<f64> {
    (0..=max_lag)
        .map(|k| x.iter().zip(x.iter().skip(k)).map(|(a, b)| a * b).sum())
        .collect()
}

/// Solves the normal equations for `order` prediction coefficients.
///
/// Returns the coefficients in `A(z)` sign convention and the final
/// prediction error, or `None` when the recursion breaks down (a reflection
/// coefficient reaches unit magnitude or the error stops being positive).
pub fn levinson_durbin(r: &[f64], order: usize) -> Option<(Vec<f64>, f64)> {
    if r.len() <= order || !(r[0] > 0.0) || !r[0].is_finite() {
        return None;
    }
    let mut a = vec![0.0; order];
    let mut prev = vec![0.0; order];
    let mut err = r[0];
    for m in 0..order {
        let acc = r[m + 1] + (0..m).map(|i| a[i] * r[m - i]).sum::<f64>();
        let k = -acc / err;
        if !k.is_finite() || k.abs() >= 1.0 {
            return None;
        }
        prev[..m].copy_from_slice(&a[..m]);
        for i in 0..m {
            a[i] = prev[i] + k * prev[m - 1 - i];
        }
        a[m] = k;
        err *= 1.0 - k * k;
        if !(err > 0.0) {
            return None;
        }
    }
    Some((a, err))
}

fn check_frame(frame: &[f64], order: usize) -> Result<(), DspError> {
    if order < 2 {
        return Err(DspError::InvalidParameter(format!(
            "LPC order must be at least 2, got {order}"
        )));
    }
    if frame.len() <= order {
        return Err(DspError::InvalidParameter(format!(
            "frame of {} samples is too short for order {order}",
            frame.len()
        )));
    }
    Ok(())
}

/// Autocorrelation-method LPC analysis of one frame.
///
/// All-zero and numerically degenerate frames yield
/// [`LpcModel::identity`], flagged as passthrough.
pub fn lpc_coefficients(frame: &[f64], order: usize) -> Result<LpcModel, DspError> {
    check_frame(frame, order)?;
    lpc_from_autocorrelation(autocorrelation(frame, order), order)
}

/// Gaussian lag window with a `bandwidth_hz` smoothing bandwidth, plus a
/// 40 dB white-noise floor on `r[0]`.
///
/// Widens every resonance by roughly `bandwidth_hz`, which keeps the model
/// from locking onto single harmonics of high-pitched voices.
pub fn apply_lag_window(r: &mut [f64], bandwidth_hz: f64, sample_rate: u32) {
    for (k, v) in r.iter_mut().enumerate().skip(1) {
        let x = 2.0 * std::f64::consts::PI * bandwidth_hz * k as f64 / sample_rate as f64;
        *v *= (-0.5 * x * x).exp();
    }
    if let Some(r0) = r.first_mut() {
        *r0 *= 1.0001;
    }
}

/// [`lpc_coefficients`] with [`apply_lag_window`] applied to the
/// autocorrelation; a zero bandwidth disables the window.
pub fn lpc_coefficients_lagged(
    frame: &[f64],
    order: usize,
    bandwidth_hz: f64,
    sample_rate: u32,
) -> Result<LpcModel, DspError> {
    if bandwidth_hz == 0.0 {
        return lpc_coefficients(frame, order);
    }
    if !(bandwidth_hz > 0.0 && bandwidth_hz.is_finite()) {
        return Err(DspError::InvalidParameter(format!(
            "lag window bandwidth must be >= 0 Hz, got {bandwidth_hz}"
        )));
    }
    check_frame(frame, order)?;
    let mut r = autocorrelation(frame, order);
    apply_lag_window(&mut r, bandwidth_hz, sample_rate);
    lpc_from_autocorrelation(r, order)
}

fn lpc_from_autocorrelation(r: Vec<f64>, order: usize) -> Result<LpcModel, DspError> {
    match levinson_durbin(&r, order) {
        Some((coeffs, err)) => LpcModel::new(coeffs, err.sqrt()),
        None => Ok(LpcModel::identity(order)),
    }
}
