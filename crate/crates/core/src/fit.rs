//! Log-linear decay fits `log v(n) = log A - p log n - a n`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

/// Values below this are treated as exact zeros and dropped from fits.
pub const UNDERFLOW: f64 = 1e-300;

/// A parameter that is either held fixed or fitted.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Param {
    Fixed(f64),
    Free,
}

/// Result of a decay fit over an explicit window.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayFit {
    pub rate: f64,
    pub power: f64,
    pub amplitude: f64,
    /// Max absolute deviation in log scale over the fitted points.
    pub residual: f64,
    pub window: (f64, f64),
    pub points: usize,
}

impl DecayFit {
    pub fn predict(&self, n: f64) -> f64 {
        self.amplitude * n.powf(-self.power) * (-self.rate * n).exp()
    }
}

/// Least-squares fit of `log v` against `log A - p log n - a n`.
///
/// Points with `v < UNDERFLOW` are trimmed first. At least four points must
/// remain.
pub fn fit_decay(data: &[(f64, f64)], power: Param, rate: Param) -> Result<DecayFit> {
    let pts: Vec<(f64, f64)> = data
        .iter()
        .copied()
        .filter(|&(n, v)| v >= UNDERFLOW && n > 0.0 && v.is_finite())
        .collect();
    if pts.len() < 4 {
        return Err(Error::domain(format!(
            "decay fit needs at least 4 usable points, got {}",
            pts.len()
        )));
    }
    let mut cols: Vec<Box<dyn Fn(f64) -> f64>> = vec![Box::new(|_| 1.0)];
    if power == Param::Free {
        cols.push(Box::new(|n: f64| -n.ln()));
    }
    if rate == Param::Free {
        cols.push(Box::new(|n: f64| -n));
    }
    let fixed = |n: f64| {
        let mut s = 0.0;
        if let Param::Fixed(p) = power {
            s -= p * n.ln();
        }
        if let Param::Fixed(a) = rate {
            s -= a * n;
        }
        s
    };
    let a = DMatrix::from_fn(pts.len(), cols.len(), |i, j| cols[j](pts[i].0));
    let b = DVector::from_iterator(pts.len(), pts.iter().map(|&(n, v)| v.ln() - fixed(n)));
    let sol = a
        .clone()
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| Error::Numerical(format!("least squares failed: {e}")))?;
    let mut k = 1;
    let mut take = |p: Param| match p {
        Param::Fixed(v) => v,
        Param::Free => {
            k += 1;
            sol[k - 1]
        }
    };
    let p = take(power);
    let r = take(rate);
    let fit = DecayFit {
        rate: r,
        power: p,
        amplitude: sol[0].exp(),
        residual: 0.0,
        window: (pts[0].0, pts[pts.len() - 1].0),
        points: pts.len(),
    };
    let residual = pts
        .iter()
        .map(|&(n, v)| (v.ln() - fit.predict(n).ln()).abs())
        .fold(0.0, f64::max);
    Ok(DecayFit { residual, ..fit })
}

/// Parse a window `a:b` into an inclusive integer range.
pub fn parse_window(s: &str) -> Result<(i64, i64)> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| Error::Parse(format!("window must be a:b, got {s:?}")))?;
    let a: i64 = a.trim().parse().map_err(|_| Error::Parse(format!("bad window start {a:?}")))?;
    let b: i64 = b.trim().parse().map_err(|_| Error::Parse(format!("bad window end {b:?}")))?;
    if a < 1 || b < a {
        return Err(Error::Parse(format!("window {s:?} must satisfy 1 <= a <= b")));
    }
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_model() {
        let data: Vec<(f64, f64)> = (5..30)
            .map(|n| {
                let n = n as f64;
                (n, 2.5 * n.powf(-1.3) * (-0.2 * n).exp())
            })
            .collect();
        let f = fit_decay(&data, Param::Free, Param::Free).unwrap();
        assert!((f.rate - 0.2).abs() < 1e-10);
        assert!((f.power - 1.3).abs() < 1e-9);
        assert!((f.amplitude - 2.5).abs() < 1e-8);
        assert!(f.residual < 1e-10);
        let g = fit_decay(&data, Param::Fixed(1.3), Param::Free).unwrap();
        assert!((g.rate - 0.2).abs() < 1e-12);
        let h = fit_decay(&data, Param::Fixed(1.3), Param::Fixed(0.2)).unwrap();
        assert!((h.amplitude - 2.5).abs() < 1e-10);
    }

    #[test]
    fn short_or_underflowing_windows_are_rejected() {
        let data = vec![(1.0, 1.0), (2.0, 0.5), (3.0, 1e-320), (4.0, 0.0)];
        assert!(fit_decay(&data, Param::Free, Param::Free).is_err());
    }

    #[test]
    fn windows_parse() {
        assert_eq!(parse_window("10:30").unwrap(), (10, 30));
        assert!(parse_window("30:10").is_err());
        assert!(parse_window("x").is_err());
    }
}
