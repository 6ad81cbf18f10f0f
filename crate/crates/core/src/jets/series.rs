//! Univariate truncated Taylor series, used to build the coefficients that
//! [`Jet::compose`](super::Jet::compose) feeds into the nilpotent part of a jet.
//!
//! Every function returns `c[0..=n]` with `c[k] = g^(k)(a) / k!`.

use super::JetError;

pub(crate) fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().min(b.len());
    let mut out = vec![0.0; n];
    for i in 0..n {
        if a[i] == 0.0 {
            continue;
        }
        for j in 0..n - i {
            out[i + j] += a[i] * b[j];
        }
    }
    out
}

pub(crate) fn recip(a: &[f64]) -> Result<Vec<f64>, JetError> {
    let a0 = a[0];
    if a0 == 0.0 || !a0.is_finite() {
        return Err(JetError::SingularDivision);
    }
    let mut out = vec![0.0; a.len()];
    out[0] = 1.0 / a0;
    for n in 1..a.len() {
        let s: f64 = (1..=n).map(|k| a[k] * out[n - k]).sum();
        out[n] = -s / a0;
    }
    Ok(out)
}

/// Antiderivative with constant term `c0`; the last coefficient of `a` is dropped.
pub(crate) fn integrate(a: &[f64], c0: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len());
    out.push(c0);
    for (k, &ak) in a.iter().enumerate().take(a.len() - 1) {
        out.push(ak / (k + 1) as f64);
    }
    out
}

fn identity(a0: f64, n: usize) -> Vec<f64> {
    let mut s = vec![0.0; n + 1];
    s[0] = a0;
    if n >= 1 {
        s[1] = 1.0;
    }
    s
}

pub(crate) fn exp(a0: f64, n: usize) -> Vec<f64> {
    let e = a0.exp();
    let mut out = Vec::with_capacity(n + 1);
    let mut fact = 1.0;
    for k in 0..=n {
        if k > 0 {
            fact *= k as f64;
        }
        out.push(e / fact);
    }
    out
}

pub(crate) fn ln(a0: f64, n: usize) -> Result<Vec<f64>, JetError> {
    if !(a0 > 0.0) {
        return Err(JetError::Domain {
            function: "ln",
            value: a0,
        });
    }
    let mut out = vec![a0.ln()];
    for k in 1..=n {
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        out.push(sign / (k as f64 * a0.powi(k as i32)));
    }
    Ok(out)
}

/// `a^p` for real `p`, through the binomial series; needs `a > 0`.
pub(crate) fn powf(a0: f64, p: f64, n: usize, name: &'static str) -> Result<Vec<f64>, JetError> {
    if !(a0 > 0.0) {
        return Err(JetError::Domain {
            function: name,
            value: a0,
        });
    }
    let mut out = Vec::with_capacity(n + 1);
    let mut c = a0.powf(p);
    out.push(c);
    for k in 1..=n {
        c *= (p - (k - 1) as f64) / (k as f64 * a0);
        out.push(c);
    }
    Ok(out)
}

pub(crate) fn sin_cos(a0: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let (s0, c0) = a0.sin_cos();
    // k-th derivative of sin is sin(a + k pi/2)
    let cycle_sin = [s0, c0, -s0, -c0];
    let cycle_cos = [c0, -s0, -c0, s0];
    let mut sin = Vec::with_capacity(n + 1);
    let mut cos = Vec::with_capacity(n + 1);
    let mut fact = 1.0;
    for k in 0..=n {
        if k > 0 {
            fact *= k as f64;
        }
        sin.push(cycle_sin[k % 4] / fact);
        cos.push(cycle_cos[k % 4] / fact);
    }
    (sin, cos)
}

pub(crate) fn tan(a0: f64, n: usize) -> Result<Vec<f64>, JetError> {
    let (s, c) = sin_cos(a0, n);
    if c[0].abs() < 1e-300 {
        return Err(JetError::Domain {
            function: "tan",
            value: a0,
        });
    }
    Ok(mul(&s, &recip(&c)?))
}

pub(crate) fn atan(a0: f64, n: usize) -> Result<Vec<f64>, JetError> {
    // atan' = 1 / (1 + z^2)
    let z = identity(a0, n);
    let mut d = mul(&z, &z);
    d[0] += 1.0;
    Ok(integrate(&recip(&d)?, a0.atan()))
}

/// Real-log extension of arctanh: `z -> 1/2 ln|(1+z)/(1-z)|`, smooth for `|z| != 1`.
pub(crate) fn atanh_ext_value(z: f64) -> f64 {
    0.5 * ((1.0 + z) / (1.0 - z)).abs().ln()
}

pub(crate) fn atanh_ext(a0: f64, n: usize) -> Result<Vec<f64>, JetError> {
    if !a0.is_finite() || (a0.abs() - 1.0).abs() < 1e-14 {
        return Err(JetError::Domain {
            function: "atanh",
            value: a0,
        });
    }
    // the derivative is 1 / (1 - z^2) on both branches
    let z = identity(a0, n);
    let mut d: Vec<f64> = mul(&z, &z).into_iter().map(|v| -v).collect();
    d[0] += 1.0;
    Ok(integrate(&recip(&d)?, atanh_ext_value(a0)))
}
