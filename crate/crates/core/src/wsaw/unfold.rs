//! Walks on the torus seen through their lifts to `Z^d`.
//!
//! A torus walk from `0` lifts uniquely to a `Z^d` walk from `0`. A pair
//! `s < t` coincides on the torus when the lifts agree (`U_st`) or differ by a
//! nonzero multiple of `r` (`U+_st`), so `K^T = K K+`.

use std::collections::HashMap;

use serde::Serialize;

use super::{enumerate_pairs, enumerate_two_point, EnumOptions, SeriesTable, WsawParams};
use crate::error::{Error, Result};
use crate::lattice::{Geometry, LatticePoint};

/// One walk with its three weights.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WalkRecord {
    /// Lifted sites `omega(0..=n)` in `Z^d`.
    pub sites: Vec<LatticePoint>,
    pub period: usize,
    /// `prod (1 + beta U_st)`.
    pub k: f64,
    /// `prod (1 + beta U^T_st)`.
    pub k_torus: f64,
    /// `prod (1 + beta U+_st)`.
    pub k_plus: f64,
    pub pairs: usize,
    pub pairs_torus: usize,
    pub pairs_plus: usize,
}

impl WalkRecord {
    /// `K^T = K K+`, both as pair counts and as floating weights.
    pub fn factorizes(&self) -> bool {
        self.pairs_torus == self.pairs + self.pairs_plus
            && (self.k_torus - self.k * self.k_plus).abs() <= 1e-14 * self.k_torus.abs().max(f64::MIN_POSITIVE)
    }

    pub fn len(&self) -> usize {
        self.sites.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.sites.len() == 1
    }
}

/// Weights of a lifted walk by the literal product over all pairs.
pub fn walk_record(sites: Vec<LatticePoint>, period: usize, beta: f64) -> Result<WalkRecord> {
    if sites.is_empty() {
        return Err(Error::domain("a walk has at least one site"));
    }
    let d = sites[0].dim();
    let torus = Geometry::torus(d, period)?;
    for w in sites.windows(2) {
        if (&w[1] - &w[0]).norm_1() != 1 {
            return Err(Error::domain(format!("{} -> {} is not a lattice step", w[0], w[1])));
        }
    }
    let proj: Vec<LatticePoint> = sites.iter().map(|x| torus.project(x)).collect();
    let (mut k, mut k_torus, mut k_plus) = (1.0, 1.0, 1.0);
    let (mut pairs, mut pairs_torus, mut pairs_plus) = (0, 0, 0);
    for t in 0..sites.len() {
        for s in 0..t {
            let u = sites[s] == sites[t];
            let ut = proj[s] == proj[t];
            if u {
                k *= 1.0 - beta;
                pairs += 1;
            }
            if ut {
                k_torus *= 1.0 - beta;
                pairs_torus += 1;
            }
            if ut && !u {
                k_plus *= 1.0 - beta;
                pairs_plus += 1;
            }
        }
    }
    Ok(WalkRecord { sites, period, k, k_torus, k_plus, pairs, pairs_torus, pairs_plus })
}

/// Outcome of the walk-by-walk unfolding comparison.
#[derive(Clone, Debug, Serialize)]
pub struct UnfoldReport {
    pub dim: usize,
    pub period: usize,
    pub beta: f64,
    pub nmax: usize,
    pub walks: u64,
    pub factorization_failures: u64,
    /// Pairs `(n, x)` with torus coefficient above the unfolded sum.
    pub ggg_violations: u64,
    /// Smallest `sum_u c_n(x + r u) - c^T_n(x)` seen.
    pub min_ggg_gap: f64,
    /// Walks with `K^T > (1 - beta)^{binom(N_n, 2)}`, `N_n = ceil(n / r^d)`.
    pub pigeonhole_violations: u64,
    /// Largest difference between the torus coefficients found here and those
    /// of the incremental enumerator.
    pub enumerator_mismatch: f64,
}

impl UnfoldReport {
    pub fn pass(&self) -> bool {
        self.factorization_failures == 0
            && self.ggg_violations == 0
            && self.pigeonhole_violations == 0
            && self.enumerator_mismatch <= 1e-12
    }
}

fn all_walks(dim: usize, n: usize, mut visit: impl FnMut(&[LatticePoint])) {
    let mut path = vec![LatticePoint::origin(dim)];
    fn rec(path: &mut Vec<LatticePoint>, dim: usize, n: usize, visit: &mut dyn FnMut(&[LatticePoint])) {
        if path.len() == n + 1 {
            visit(path);
            return;
        }
        for j in 0..dim {
            for s in [1, -1] {
                let next = path.last().unwrap() + &LatticePoint::unit(dim, j, s);
                path.push(next);
                rec(path, dim, n, visit);
                path.pop();
            }
        }
    }
    rec(&mut path, dim, n, &mut visit);
}

fn binom2(n: usize) -> i32 {
    (n * n.saturating_sub(1) / 2) as i32
}

/// Check every torus walk of length `<= nmax` against its lift.
pub fn unfolding_check(dim: usize, period: usize, nmax: usize, beta: f64) -> Result<UnfoldReport> {
    let torus = Geometry::torus(dim, period)?;
    let walks_total: f64 = (0..=nmax).map(|n| (2.0 * dim as f64).powi(n as i32)).sum();
    if walks_total > 5e7 {
        return Err(Error::Budget { what: "unfolding check".into(), estimate: walks_total, limit: 5e7 });
    }
    let h = enumerate_pairs(&torus, nmax, EnumOptions::default())?;
    let reference = SeriesTable::from_histogram(&h, beta)?;
    let vol = torus.volume().unwrap() as f64;
    let mut rep = UnfoldReport {
        dim,
        period,
        beta,
        nmax,
        walks: 0,
        factorization_failures: 0,
        ggg_violations: 0,
        min_ggg_gap: f64::INFINITY,
        pigeonhole_violations: 0,
        enumerator_mismatch: 0.0,
    };
    for n in 0..=nmax {
        // torus endpoint -> (c^T_n, unfolded sum of c_n)
        let mut acc: HashMap<LatticePoint, (f64, f64)> = HashMap::new();
        let bound = (1.0 - beta).powi(binom2((n as f64 / vol).ceil() as usize));
        let mut err = None;
        all_walks(dim, n, |path| {
            let r = match walk_record(path.to_vec(), period, beta) {
                Ok(r) => r,
                Err(e) => {
                    err.get_or_insert(e);
                    return;
                }
            };
            rep.walks += 1;
            if !r.factorizes() {
                rep.factorization_failures += 1;
            }
            if r.k_torus > bound * (1.0 + 1e-14) {
                rep.pigeonhole_violations += 1;
            }
            let e = acc.entry(torus.project(path.last().unwrap())).or_insert((0.0, 0.0));
            e.0 += r.k_torus;
            e.1 += r.k;
        });
        if let Some(e) = err {
            return Err(e);
        }
        for (x, (ct, unfolded)) in &acc {
            let gap = unfolded - ct;
            rep.min_ggg_gap = rep.min_ggg_gap.min(gap);
            if gap < -1e-12 * unfolded.max(1.0) {
                rep.ggg_violations += 1;
            }
            let diff = (reference.coeff(n, x) - ct).abs();
            rep.enumerator_mismatch = rep.enumerator_mismatch.max(diff / ct.max(1.0));
        }
    }
    Ok(rep)
}

/// Exact torus coefficients, weighted by `U^T`.
pub fn torus_two_point(dim: usize, period: usize, beta: f64, nmax: usize, opts: EnumOptions) -> Result<SeriesTable> {
    let params = WsawParams { geometry: Geometry::torus(dim, period)?, beta, nmax };
    enumerate_two_point(&params, opts)
}

/// Torus against lattice susceptibility at one `z`.
#[derive(Clone, Debug, Serialize)]
pub struct ChiComparison {
    pub z: f64,
    pub chi_torus: f64,
    pub chi_lattice: f64,
    /// `chi^T_n <= chi_n` for every enumerated `n`.
    pub coefficientwise: bool,
    /// Largest `chi^T_n / chi_n`.
    pub worst_ratio: f64,
    /// `max_x (G^T_z(x) - G_z(x)) r^d / chi(z)`, the empirical constant.
    pub c2: f64,
}

/// Compare torus and lattice series of equal `beta` and `nmax`.
pub fn chi_comparison(torus: &SeriesTable, lattice: &SeriesTable, z: f64) -> Result<ChiComparison> {
    let r = torus.geometry().period().ok_or_else(|| Error::domain("first series must be on a torus"))?;
    if lattice.geometry().is_torus() {
        return Err(Error::domain("second series must be on Z^d"));
    }
    if torus.dim() != lattice.dim() || torus.nmax() != lattice.nmax() || torus.beta() != lattice.beta() {
        return Err(Error::GeometryMismatch("series differ in dimension, beta or nmax".into()));
    }
    let ct = torus.chi_coeffs();
    let cl = lattice.chi_coeffs();
    let mut worst_ratio: f64 = 0.0;
    let mut coefficientwise = true;
    for (a, b) in ct.iter().zip(&cl) {
        if *a > *b * (1.0 + 1e-12) {
            coefficientwise = false;
        }
        worst_ratio = worst_ratio.max(a / b);
    }
    let chi_torus = super::susceptibility(torus, z)?.value;
    let chi_lattice = super::susceptibility(lattice, z)?.value;
    let vol = (r as f64).powi(torus.dim() as i32);
    let c2 = torus
        .reps()
        .iter()
        .map(|x| (torus.value(z, x) - lattice.value(z, x)) * vol / chi_lattice)
        .fold(f64::MIN, f64::max);
    Ok(ChiComparison { z, chi_torus, chi_lattice, coefficientwise, worst_ratio, c2 })
}

/// Coefficientwise `n c_n(x) <= sum_m (c_m * c_{n-m})(x)`.
#[derive(Clone, Debug, Serialize)]
pub struct SubwalkReport {
    pub checked: u64,
    pub violations: u64,
    /// Smallest `convolution / (n c_n)` over `n >= 1` with `c_n(x) > 0`.
    pub min_ratio: f64,
}

/// Subwalk inequality on `Z^d` over the enumerated support.
pub fn subwalk_check(series: &SeriesTable) -> Result<SubwalkReport> {
    if series.geometry().is_torus() {
        return Err(Error::domain("the subwalk check runs on Z^d"));
    }
    let d = series.dim();
    let nmax = series.nmax();
    let side = 2 * nmax + 1;
    let size = side.pow(d as u32);
    let point = |mut i: usize| {
        let c: Vec<i64> = (0..d)
            .map(|_| {
                let v = (i % side) as i64 - nmax as i64;
                i /= side;
                v
            })
            .collect();
        LatticePoint::new(c)
    };
    let index = |c: &[i64]| -> Option<usize> {
        let mut i = 0;
        for &v in c.iter().rev() {
            if v.unsigned_abs() as usize > nmax {
                return None;
            }
            i = i * side + (v + nmax as i64) as usize;
        }
        Some(i)
    };
    let points: Vec<LatticePoint> = (0..size).map(point).collect();
    let dense: Vec<Vec<f64>> =
        (0..=nmax).map(|n| points.iter().map(|x| series.coeff(n, x)).collect()).collect();
    let mut rep = SubwalkReport { checked: 0, violations: 0, min_ratio: f64::INFINITY };
    let mut diff = vec![0i64; d];
    for n in 1..=nmax {
        for x in series.reps() {
            let cn = series.coeff(n, x);
            let mut conv = 0.0;
            for m in 0..=n {
                for (iy, y) in points.iter().enumerate() {
                    let a = dense[m][iy];
                    if a == 0.0 {
                        continue;
                    }
                    for j in 0..d {
                        diff[j] = x.coords()[j] - y.coords()[j];
                    }
                    if let Some(ix) = index(&diff) {
                        conv += a * dense[n - m][ix];
                    }
                }
            }
            rep.checked += 1;
            let lhs = n as f64 * cn;
            if lhs > conv * (1.0 + 1e-12) {
                rep.violations += 1;
            }
            if cn > 0.0 {
                rep.min_ratio = rep.min_ratio.min(conv / lhs);
            }
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn walk(c: &[i64]) -> Vec<LatticePoint> {
        c.iter().map(|&v| LatticePoint::new(vec![v])).collect()
    }

    #[test]
    fn listed_records() {
        let beta = 0.3;
        let r = walk_record(walk(&[0, 1, 2]), 3, beta).unwrap();
        assert_eq!((r.k, r.k_plus, r.k_torus), (1.0, 1.0, 1.0));
        let r = walk_record(walk(&[0, 1, 2, 3]), 3, beta).unwrap();
        assert_eq!(r.k, 1.0);
        assert_eq!(r.k_plus, 1.0 - beta);
        assert_eq!(r.k_torus, 1.0 - beta);
        assert!(r.factorizes());
        let r = walk_record(walk(&[0, 1, 0, 1, 2, 3]), 3, 0.0).unwrap();
        assert_eq!((r.k, r.k_plus, r.k_torus), (1.0, 1.0, 1.0));
        assert!(walk_record(walk(&[0, 2]), 3, beta).is_err());
    }

    #[test]
    fn unfolding_small() {
        for (d, r) in [(1, 3), (2, 3)] {
            let rep = unfolding_check(d, r, 6, 0.4).unwrap();
            assert!(rep.pass(), "{rep:?}");
            assert!(rep.min_ggg_gap >= 0.0);
        }
    }

    #[test]
    fn torus_susceptibility_is_smaller() {
        let t = torus_two_point(2, 4, 0.5, 8, EnumOptions::default()).unwrap();
        let p = WsawParams { geometry: Geometry::lattice(2).unwrap(), beta: 0.5, nmax: 8 };
        let l = enumerate_two_point(&p, EnumOptions::default()).unwrap();
        let c = chi_comparison(&t, &l, 0.15).unwrap();
        assert!(c.coefficientwise);
        assert!(c.chi_torus <= c.chi_lattice);
        assert!(c.worst_ratio <= 1.0 + 1e-12);
        // At beta = 0 the torus simply counts more walks per site.
        let t0 = torus_two_point(1, 3, 0.0, 6, EnumOptions::default()).unwrap();
        assert_eq!(t0.chi_coeffs()[6], 64.0);
    }

    #[test]
    fn subwalk_inequality() {
        for beta in [0.0, 0.5, 1.0] {
            let p = WsawParams { geometry: Geometry::lattice(2).unwrap(), beta, nmax: 7 };
            let s = enumerate_two_point(&p, EnumOptions::default()).unwrap();
            let rep = subwalk_check(&s).unwrap();
            assert_eq!(rep.violations, 0, "{rep:?}");
            assert!(rep.checked > 0);
        }
        // At beta = 0 the ratio is (n + 1) / n on the diagonal.
        let p = WsawParams { geometry: Geometry::lattice(1).unwrap(), beta: 0.0, nmax: 6 };
        let s = enumerate_two_point(&p, EnumOptions::default()).unwrap();
        let rep = subwalk_check(&s).unwrap();
        assert!((rep.min_ratio - 7.0 / 6.0).abs() < 1e-12);
    }
}
