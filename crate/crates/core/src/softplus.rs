//! Softplus smoothing `p_δ(t) = δ·log(1 + e^{t/δ})` of the hinge `max(t, 0)`
//! and its symmetric counterpart `ψ_δ(t) = p_δ(t) + p_δ(−t)` smoothing `|t|`.
//!
//! Every quantity is written in terms of `x = t/δ` and the logistic `σ(x)`,
//! evaluated without overflow for any finite `t`. For `|x| > 30` the value
//! uses the one-term expansions `t + δe^{−x}` and `δe^{x}`.

/// Branch point for the asymptotic softplus value.
pub const ASYMPTOTIC_BRANCH: f64 = 30.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SoftplusEval {
    /// `p_δ(t)`
    pub value: f64,
    /// `p_δ′(t) = σ(t/δ)`
    pub first: f64,
    /// `p_δ″(t) = σ(1−σ)/δ`
    pub second: f64,
    /// `ψ_δ′(t) = tanh(t/2δ)`
    pub sym_first: f64,
    /// `ψ_δ″(t) = sech²(t/2δ)/(2δ)`
    pub sym_second: f64,
}

/// Logistic function, evaluated on the branch where `e^{−|x|}` cannot overflow.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

/// `σ(x)·σ(−x)` without forming `1 − σ(x)`.
#[inline]
fn sigmoid_product(x: f64) -> f64 {
    let e = libm::exp(-x.abs());
    let denom = 1.0 + e;
    e / (denom * denom)
}

#[inline]
pub fn softplus_value(t: f64, delta: f64) -> f64 {
    let x = t / delta;
    if x > ASYMPTOTIC_BRANCH {
        t + delta * libm::exp(-x)
    } else if x < -ASYMPTOTIC_BRANCH {
        delta * libm::exp(x)
    } else {
        delta * libm::log1p(libm::exp(x))
    }
}

/// `p_δ′(t)`
#[inline]
pub fn softplus_first(t: f64, delta: f64) -> f64 {
    sigmoid(t / delta)
}

/// `p_δ″(t)`
#[inline]
pub fn softplus_second(t: f64, delta: f64) -> f64 {
    sigmoid_product(t / delta) / delta
}

pub fn softplus_eval(t: f64, delta: f64) -> SoftplusEval {
    let x = t / delta;
    let prod = sigmoid_product(x);
    SoftplusEval {
        value: softplus_value(t, delta),
        first: sigmoid(x),
        second: prod / delta,
        sym_first: libm::tanh(0.5 * x),
        sym_second: 2.0 * prod / delta,
    }
}

/// `ψ_δ(t) = p_δ(t) + p_δ(−t)`
pub fn symmetric_value(t: f64, delta: f64) -> f64 {
    softplus_value(t, delta) + softplus_value(-t, delta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_at_zero() {
        let e = softplus_eval(0.0, 0.1);
        assert!((e.value - 0.1 * core::f64::consts::LN_2).abs() < 1e-16);
        assert_eq!(e.second, 2.5);
        assert_eq!(e.sym_second, 5.0);
        assert_eq!(e.first, 0.5);
        assert_eq!(e.sym_first, 0.0);
    }

    #[test]
    fn far_negative_underflows_cleanly() {
        let e = softplus_eval(-1.0, 0.01);
        assert!(e.first <= libm::exp(-100.0));
        assert!(e.second <= libm::exp(-100.0) / 0.01);
        assert!(e.value >= 0.0 && e.value.is_finite());
        let far = softplus_eval(-1.0, 1e-6);
        assert_eq!(far.first, 0.0);
        assert_eq!(far.value, 0.0);
    }

    #[test]
    fn far_positive_is_finite() {
        let e = softplus_eval(1.0, 1e-6);
        assert_eq!(e.value, 1.0);
        assert_eq!(e.first, 1.0);
        assert_eq!(e.second, 0.0);
        assert_eq!(e.sym_first, 1.0);
    }

    #[test]
    fn branch_is_continuous() {
        let delta = 0.5;
        let t = ASYMPTOTIC_BRANCH * delta;
        let below = softplus_value(t * (1.0 - 1e-12), delta);
        let above = softplus_value(t * (1.0 + 1e-12), delta);
        assert!((below - above).abs() < 1e-9);
    }
}
