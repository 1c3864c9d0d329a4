use super::FeatureError;

/// `r[k] = sum_{t=0}^{N-1-k} s[t] s[t+k]` for `k = 0..=max_lag`.
pub fn autocorrelation(frame: &[f64], max_lag: usize) -> Result<Vec<f64>, FeatureError> {
    if max_lag >= frame.len() {
        return Err(FeatureError::LagTooLarge {
            lag: max_lag,
            len: frame.len(),
        });
    }
    Ok((0..=max_lag)
        .map(|k| frame[..frame.len() - k].iter().zip(&frame[k..]).map(|(a, b)| a * b).sum())
        .collect())
}

/// All-pole predictor `s_hat[t] = sum_k coeffs[k-1] s[t-k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearPredictor {
    pub coeffs: Vec<f64>,
    /// Square root of the final prediction-error energy.
    pub gain: f64,
    pub reflection: Vec<f64>,
}

impl LinearPredictor {
    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    pub fn residual_energy(&self) -> f64 {
        self.gain * self.gain
    }
}

/// Levinson-Durbin recursion over autocorrelation lags `r[0..=order]`.
///
/// Stops early, leaving the remaining coefficients at zero, once the
/// prediction error is exhausted to rounding level.
pub fn levinson_durbin(r: &[f64], order: usize) -> Result<LinearPredictor, FeatureError> {
    if order == 0 || r.len() <= order {
        return Err(FeatureError::ConfigInvalid(format!(
            "LPC order {order} needs {} autocorrelation lags, got {}",
            order + 1,
            r.len()
        )));
    }
    if !(r[0] > 0.0) {
        return Err(FeatureError::ZeroEnergy);
    }
    let mut a = vec![0.0; order];
    let mut reflection = vec![0.0; order];
    let mut scratch = vec![0.0; order];
    let mut error = r[0];
    for i in 0..order {
        if error <= f64::EPSILON * r[0] {
            break;
        }
        let acc = r[i + 1] - (0..i).map(|j| a[j] * r[i - j]).sum::<f64>();
        let k = acc / error;
        if !k.is_finite() || k.abs() > 1.0 {
            return Err(FeatureError::UnstableRecursion { stage: i + 1, k });
        }
        scratch[..i].copy_from_slice(&a[..i]);
        for j in 0..i {
            a[j] = scratch[j] - k * scratch[i - 1 - j];
        }
        a[i] = k;
        reflection[i] = k;
        error *= 1.0 - k * k;
    }
    Ok(LinearPredictor {
        coeffs: a,
        gain: error.max(0.0).sqrt(),
        reflection,
    })
}

/// Autocorrelation-method LPC of one frame.
pub fn lpc(frame: &[f64], order: usize) -> Result<LinearPredictor, FeatureError> {
    if order == 0 {
        return Err(FeatureError::ConfigInvalid("LPC order must be >= 1".into()));
    }
    let r = autocorrelation(frame, order)?;
    levinson_durbin(&r, order)
}

/// Cepstrum of the all-pole model `1 / A(z)` from its predictor coefficients.
///
/// Returns `c[1..=n_ceps]`.
pub fn lpcc(a: &[f64], n_ceps: usize) -> Result<Vec<f64>, FeatureError> {
    if n_ceps == 0 || a.is_empty() {
        return Err(FeatureError::ConfigInvalid(
            "LPCC needs n_ceps >= 1 and at least one predictor coefficient".into(),
        ));
    }
    let p = a.len();
    // c[0] unused so indices match the recursion.
    let mut c = vec![0.0; n_ceps + 1];
    for m in 1..=n_ceps {
        let lo = if m > p { m - p } else { 1 };
        let mut acc = if m <= p { a[m - 1] } else { 0.0 };
        for k in lo..m {
            acc += (k as f64 / m as f64) * c[k] * a[m - k - 1];
        }
        c[m] = acc;
    }
    c.remove(0);
    Ok(c)
}
