#[inline]
pub fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

/// Subgradient convention: 0 at the kink.
#[inline]
pub fn relu_grad(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Logistic function in the branch form that never evaluates `exp` of a
/// large positive argument.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Derivative expressed through the sigmoid output `s`.
#[inline]
pub fn sigmoid_grad(s: f64) -> f64 {
    s * (1.0 - s)
}

#[inline]
pub fn tanh(x: f64) -> f64 {
    x.tanh()
}

/// Derivative expressed through the tanh output `t`.
#[inline]
pub fn tanh_grad(t: f64) -> f64 {
    1.0 - t * t
}
