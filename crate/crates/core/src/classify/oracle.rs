//! Finite-difference reference values that never touch the jet engine.

/// Central-difference weights for the `n`-th derivative on the nodes
/// `(n/2 - j) h`, `j = 0..=n` (binomial coefficients with alternating sign).
fn central_weights(n: usize) -> Vec<(f64, f64)> {
    let mut c = 1.0;
    (0..=n)
        .map(|j| {
            let w = if j % 2 == 0 { c } else { -c };
            let node = 0.5 * n as f64 - j as f64;
            c = c * (n - j) as f64 / (j + 1) as f64;
            (node, w)
        })
        .collect()
}

/// Tensor-product central difference of `d^a/dx1^a d^b/dx2^b d^k/du^k` with step `h`.
pub fn central_difference(
    f: &dyn Fn(f64, f64, f64) -> Option<f64>,
    at: [f64; 3],
    orders: [usize; 3],
    h: f64,
) -> Option<f64> {
    let [w1, w2, w3] = orders.map(central_weights);
    let mut sum = 0.0;
    for &(n1, c1) in &w1 {
        for &(n2, c2) in &w2 {
            for &(n3, c3) in &w3 {
                sum += c1 * c2 * c3 * f(at[0] + n1 * h, at[1] + n2 * h, at[2] + n3 * h)?;
            }
        }
    }
    Some(sum / h.powi((orders[0] + orders[1] + orders[2]) as i32))
}

/// Step ratio between successive rows of the Richardson table.
pub const RATIO: f64 = 1.15;

pub const LEVELS: usize = 14;

/// Base steps tried by [`derivative`], coarse to fine.
pub const BASE_STEPS: [f64; 9] = [1.2, 1.0, 0.8, 0.6, 0.45, 0.34, 0.25, 0.18, 0.13];

/// Richardson extrapolation of [`central_difference`] over `levels` steps
/// `h0 / RATIO^i`. Returns the table entry whose neighbours agree best, with
/// that disagreement as its error indicator.
///
/// The central stencils have even error expansions, so each column removes
/// one power of `h^2`. A gentle ratio keeps the finest step coarse enough
/// that rounding (`~ 2^n eps / h^n`) stays below the target for seventh-order
/// mixed slots.
pub fn richardson(
    f: &dyn Fn(f64, f64, f64) -> Option<f64>,
    at: [f64; 3],
    orders: [usize; 3],
    h0: f64,
    levels: usize,
) -> Option<(f64, f64)> {
    let r2 = RATIO * RATIO;
    let mut prev: Vec<f64> = Vec::new();
    let mut best = (f64::NAN, f64::INFINITY);
    for i in 0..levels {
        let mut row = vec![central_difference(
            f,
            at,
            orders,
            h0 / RATIO.powi(i as i32),
        )?];
        let mut factor = r2;
        for j in 1..=i {
            let v = row[j - 1] + (row[j - 1] - prev[j - 1]) / (factor - 1.0);
            row.push(v);
            factor *= r2;
        }
        for j in 1..i {
            let e = (row[j] - row[j - 1])
                .abs()
                .max((row[j] - prev[j - 1]).abs())
                .max((row[j] - prev[j]).abs());
            if e < best.1 {
                best = (row[j], e);
            }
        }
        prev = row;
    }
    best.0.is_finite().then_some(best)
}

/// Richardson-extrapolated derivative: the estimate with the smallest
/// error indicator over [`BASE_STEPS`].
pub fn derivative(
    f: &dyn Fn(f64, f64, f64) -> Option<f64>,
    at: [f64; 3],
    orders: [usize; 3],
) -> Option<f64> {
    if orders == [0, 0, 0] {
        return f(at[0], at[1], at[2]);
    }
    BASE_STEPS
        .iter()
        .filter_map(|&h0| richardson(f, at, orders, h0, LEVELS))
        .filter(|(v, e)| v.is_finite() && !e.is_nan())
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(v, _)| v)
}
