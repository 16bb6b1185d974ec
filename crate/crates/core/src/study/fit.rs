//! Least-squares fit of `lambda(h) = lambda_extr + C h^t`.

use serde::Serialize;

use crate::error::{Error, Result};

pub const ORDER_RANGE: (f64, f64) = (0.25, 10.0);
pub const ORDER_TOL: f64 = 1e-4;
const GRID: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OrderFit {
    /// Fitted order `t`; infinite when all values coincide.
    pub order: f64,
    pub extrapolated: f64,
    pub constant: f64,
    /// Sum of squared residuals at the optimum.
    pub residual: f64,
}

/// Closed-form `(lambda_extr, C, residual)` for a fixed `t`.
fn linear_fit(levels: &[(f64, f64)], t: f64) -> (f64, f64, f64) {
    let n = levels.len() as f64;
    let xs: Vec<f64> = levels.iter().map(|(h, _)| h.powf(t)).collect();
    let xm = xs.iter().sum::<f64>() / n;
    let ym = levels.iter().map(|l| l.1).sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
    let sxy: f64 = xs.iter().zip(levels).map(|(x, l)| (x - xm) * (l.1 - ym)).sum();
    let c = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = ym - c * xm;
    let r = xs.iter().zip(levels).map(|(x, l)| (l.1 - a - c * x).powi(2)).sum();
    (a, c, r)
}

/// Fits `(t, lambda_extr, C)` to `(h, lambda_h)` pairs: a grid scan over
/// `t` in [0.25, 10] brackets the minimum, golden-section search refines it
/// to 1e-4, and the linear parameters are solved in closed form.
pub fn fit_order(levels: &[(f64, f64)]) -> Result<OrderFit> {
    let mut hs: Vec<f64> = levels.iter().map(|l| l.0).collect();
    hs.sort_by(f64::total_cmp);
    hs.dedup();
    if hs.len() < 3 {
        return Err(Error::TooFewLevels(hs.len()));
    }
    if levels.iter().any(|(h, l)| !(*h > 0.0) || !h.is_finite() || !l.is_finite()) {
        return Err(Error::InvalidInput("fit data must be finite with h > 0".into()));
    }
    let lo = levels.iter().map(|l| l.1).fold(f64::INFINITY, f64::min);
    let hi = levels.iter().map(|l| l.1).fold(f64::NEG_INFINITY, f64::max);
    if hi - lo <= 1e-14 * hi.abs().max(lo.abs()) {
        return Ok(OrderFit { order: f64::INFINITY, extrapolated: levels[0].1, constant: 0.0, residual: 0.0 });
    }
    let (a, b) = ORDER_RANGE;
    let res = |t: f64| linear_fit(levels, t).2;
    let step = (b - a) / GRID as f64;
    let best = (0..=GRID)
        .map(|i| (i, res(a + i as f64 * step)))
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .map(|x| x.0)
        .unwrap();
    let mut l = a + best.saturating_sub(1) as f64 * step;
    let mut r = (a + (best + 1) as f64 * step).min(b);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = r - g * (r - l);
    let mut x2 = l + g * (r - l);
    let (mut f1, mut f2) = (res(x1), res(x2));
    while r - l > ORDER_TOL {
        if f1 <= f2 {
            r = x2;
            x2 = x1;
            f2 = f1;
            x1 = r - g * (r - l);
            f1 = res(x1);
        } else {
            l = x1;
            x1 = x2;
            f1 = f2;
            x2 = l + g * (r - l);
            f2 = res(x2);
        }
    }
    let t = 0.5 * (l + r);
    let (extr, c, residual) = linear_fit(levels, t);
    Ok(OrderFit { order: t, extrapolated: extr, constant: c, residual })
}
