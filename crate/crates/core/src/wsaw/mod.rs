//! Weakly self-avoiding walk by exact enumeration.
//!
//! `G_z(x) = sum_n c_n(x) z^n` with `c_n(x) = sum_{omega : 0 -> x, |omega| = n} prod_{s<t} (1 + beta U_st)`.
//! Coefficients are exact up to `nmax`; nothing is extrapolated beyond it.

mod enumerate;
mod unfold;

use std::collections::HashMap;
use std::io::{Read, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::{fit_decay, DecayFit, Param};
use crate::lattice::{Geometry, LatticePoint, OrthantTable};

pub use enumerate::{
    canonical, enumerate_pairs, enumeration_cost, orbit, orbit_size, EnumOptions, PairHistogram, NODE_LIMIT,
};
pub use unfold::{
    chi_comparison, subwalk_check, torus_two_point, unfolding_check, walk_record, ChiComparison, SubwalkReport,
    UnfoldReport, WalkRecord,
};

/// Model and truncation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WsawParams {
    pub geometry: Geometry,
    /// `0` is simple random walk, `1` is strictly self-avoiding walk.
    pub beta: f64,
    pub nmax: usize,
}

impl WsawParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::domain(format!("beta must lie in [0, 1], got {}", self.beta)));
        }
        Ok(())
    }
}

/// Exact coefficients `c_n(x)`, `n <= nmax`, stored per symmetry orbit.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesTable {
    geometry: Geometry,
    beta: f64,
    nmax: usize,
    reps: Vec<LatticePoint>,
    orbit_sizes: Vec<u64>,
    index: HashMap<LatticePoint, usize>,
    /// `[n * reps + rep]`.
    coeffs: Vec<f64>,
}

impl SeriesTable {
    pub fn from_histogram(h: &PairHistogram, beta: f64) -> Result<Self> {
        let coeffs = h.weighted(beta)?;
        Ok(Self::from_parts(h.geometry(), beta, h.nmax(), h.reps().to_vec(), h.orbit_sizes().to_vec(), coeffs))
    }

    fn from_parts(
        geometry: Geometry,
        beta: f64,
        nmax: usize,
        reps: Vec<LatticePoint>,
        orbit_sizes: Vec<u64>,
        coeffs: Vec<f64>,
    ) -> Self {
        let index = reps.iter().enumerate().map(|(i, r)| (r.clone(), i)).collect();
        SeriesTable { geometry, beta, nmax, reps, orbit_sizes, index, coeffs }
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn nmax(&self) -> usize {
        self.nmax
    }

    pub fn dim(&self) -> usize {
        self.geometry.dim()
    }

    /// Orbit representatives (sorted absolute coordinates, decreasing).
    pub fn reps(&self) -> &[LatticePoint] {
        &self.reps
    }

    pub fn orbit_sizes(&self) -> &[u64] {
        &self.orbit_sizes
    }

    pub(crate) fn rep(&self, x: &LatticePoint) -> Option<usize> {
        if x.dim() != self.dim() {
            return None;
        }
        self.index.get(&canonical(&self.geometry, x)).copied()
    }

    /// `c_n(x)`; zero beyond the enumerated support.
    pub fn coeff(&self, n: usize, x: &LatticePoint) -> f64 {
        match self.rep(x) {
            Some(i) if n <= self.nmax => self.coeffs[n * self.reps.len() + i],
            _ => 0.0,
        }
    }

    pub(crate) fn coeff_rep(&self, n: usize, rep: usize) -> f64 {
        self.coeffs[n * self.reps.len() + rep]
    }

    /// `chi_n = sum_x c_n(x)`.
    pub fn chi_coeffs(&self) -> Vec<f64> {
        (0..=self.nmax)
            .map(|n| {
                self.orbit_sizes
                    .iter()
                    .enumerate()
                    .map(|(i, &s)| s as f64 * self.coeff_rep(n, i))
                    .sum()
            })
            .collect()
    }

    /// `sum_{n <= nmax} c_n(x) z^n`.
    pub fn value(&self, z: f64, x: &LatticePoint) -> f64 {
        match self.rep(x) {
            Some(i) => horner(z, (0..=self.nmax).map(|n| self.coeff_rep(n, i))),
            None => 0.0,
        }
    }

    fn value_rep(&self, z: f64, i: usize) -> f64 {
        horner(z, (0..=self.nmax).map(|n| self.coeff_rep(n, i)))
    }

    /// Rows `n,x1,...,xd,coeff`, one per orbit representative.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["n".to_string()];
        header.extend((1..=self.dim()).map(|i| format!("x{i}")));
        header.push("coeff".into());
        out.write_record(&header)?;
        for n in 0..=self.nmax {
            for (i, r) in self.reps.iter().enumerate() {
                let mut row = vec![n.to_string()];
                row.extend(r.coords().iter().map(|c| c.to_string()));
                row.push(format!("{}", self.coeff_rep(n, i)));
                out.write_record(&row)?;
            }
        }
        out.flush()?;
        Ok(())
    }

    /// Inverse of [`write_csv`](Self::write_csv).
    pub fn read_csv<R: Read>(r: R, geometry: Geometry, beta: f64) -> Result<Self> {
        let d = geometry.dim();
        let mut rd = csv::Reader::from_reader(r);
        let mut rows: Vec<(usize, LatticePoint, f64)> = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            if rec.len() != d + 2 {
                return Err(Error::Parse(format!("expected {} columns, got {}", d + 2, rec.len())));
            }
            let p = |s: &str| s.parse::<i64>().map_err(|_| Error::Parse(format!("bad integer {s:?}")));
            let n = p(&rec[0])? as usize;
            let x: Vec<i64> = (1..=d).map(|i| p(&rec[i])).collect::<Result<_>>()?;
            let v: f64 = rec[d + 1].parse().map_err(|_| Error::Parse(format!("bad value {:?}", &rec[d + 1])))?;
            rows.push((n, LatticePoint::new(x), v));
        }
        let nmax = rows.iter().map(|r| r.0).max().ok_or_else(|| Error::Parse("empty series".into()))?;
        let mut reps: Vec<LatticePoint> = Vec::new();
        let mut index: HashMap<LatticePoint, usize> = HashMap::new();
        for (_, x, _) in &rows {
            if !index.contains_key(x) {
                index.insert(x.clone(), reps.len());
                reps.push(x.clone());
            }
        }
        let mut coeffs = vec![0.0; (nmax + 1) * reps.len()];
        for (n, x, v) in rows {
            coeffs[n * reps.len() + index[&x]] = v;
        }
        let orbit_sizes = reps.iter().map(|r| orbit_size(&geometry, r)).collect();
        Ok(Self::from_parts(geometry, beta, nmax, reps, orbit_sizes, coeffs))
    }
}

fn horner(z: f64, coeffs: impl DoubleEndedIterator<Item = f64>) -> f64 {
    coeffs.rev().fold(0.0, |acc, c| acc * z + c)
}

/// Exact coefficients for `params`.
///
/// At `beta = 1` walks with a coinciding pair carry weight zero and are pruned.
pub fn enumerate_two_point(params: &WsawParams, opts: EnumOptions) -> Result<SeriesTable> {
    params.validate()?;
    let opts = if params.beta == 1.0 && opts.pair_limit.is_none() {
        EnumOptions { pair_limit: Some(0), ..opts }
    } else {
        opts
    };
    let h = enumerate_pairs(&params.geometry, params.nmax, opts)?;
    SeriesTable::from_histogram(&h, params.beta)
}

/// A truncated series value with its tail flag.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SeriesValue {
    pub value: f64,
    /// Set when the last three terms are not strictly decreasing.
    pub tail_flag: bool,
}

fn tail_flag(terms: &[f64]) -> bool {
    // On the bipartite lattice odd or even terms can vanish; compare the
    // nonzero ones.
    let nz: Vec<f64> = terms.iter().copied().filter(|&t| t != 0.0).collect();
    if nz.len() < 3 {
        return false;
    }
    let t = &nz[nz.len() - 3..];
    !(t[0] > t[1] && t[1] > t[2])
}

/// `G_z(x)` on the orthant of the enumerated support (radius `nmax` on `Z^d`,
/// `r/2` on the torus).
pub fn evaluate(series: &SeriesTable, z: f64) -> Result<(OrthantTable, bool)> {
    if !(z >= 0.0) {
        return Err(Error::domain("z must be nonnegative"));
    }
    let extent = match series.geometry {
        Geometry::Lattice { .. } => series.nmax,
        Geometry::Torus { period, .. } => period / 2,
    };
    let t = OrthantTable::from_fn(series.geometry, extent, |x| series.value(z, x));
    Ok((t, susceptibility(series, z)?.tail_flag))
}

/// `chi(z) = sum_n chi_n z^n`.
pub fn susceptibility(series: &SeriesTable, z: f64) -> Result<SeriesValue> {
    if !(z >= 0.0) {
        return Err(Error::domain("z must be nonnegative"));
    }
    let chi = series.chi_coeffs();
    let mut zn = 1.0;
    let terms: Vec<f64> = chi
        .iter()
        .map(|&c| {
            let t = c * zn;
            zn *= z;
            t
        })
        .collect();
    Ok(SeriesValue { value: horner(z, chi.iter().copied()), tail_flag: z > 0.0 && tail_flag(&terms) })
}

/// Tilted bubble `B^(m)(z) = sum_x (G_z(x) e^{m x_1})^2` over the enumerated support.
pub fn bubble(series: &SeriesTable, z: f64, m: f64) -> Result<f64> {
    if series.geometry.is_torus() {
        return Err(Error::domain("the tilted bubble is defined on Z^d only"));
    }
    if !(m >= 0.0) || !(z >= 0.0) {
        return Err(Error::domain("bubble needs z >= 0 and m >= 0"));
    }
    let d = series.dim() as f64;
    Ok(series
        .reps
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let g = series.value_rep(z, i);
            // Average of e^{2 m y_1} over the orbit of r.
            let tilt = r.coords().iter().map(|&c| (2.0 * m * c as f64).cosh()).sum::<f64>() / d;
            series.orbit_sizes[i] as f64 * g * g * tilt
        })
        .sum())
}

/// On-axis decay fit of `G_z(n e_1)` with the power fixed at `(d - 1) / 2`.
pub fn mass_estimate(series: &SeriesTable, z: f64, window: (i64, i64)) -> Result<DecayFit> {
    if series.geometry.is_torus() {
        return Err(Error::domain("mass estimates need Z^d"));
    }
    if window.1 as usize > series.nmax {
        return Err(Error::domain(format!(
            "window end {} exceeds the enumerated support {}",
            window.1, series.nmax
        )));
    }
    let d = series.dim();
    let data: Vec<(f64, f64)> = (window.0..=window.1)
        .map(|n| (n as f64, series.value(z, &LatticePoint::on_axis(d, n))))
        .collect();
    fit_decay(&data, Param::Fixed((d as f64 - 1.0) / 2.0), Param::Free)
}

/// `max_x G_z(x) / (B(z)^{1/2} e^{-rate |x|_inf})` over the enumerated support.
pub fn bubble_bound_ratio(series: &SeriesTable, z: f64, rate: f64) -> Result<f64> {
    let b = bubble(series, z, 0.0)?.sqrt();
    Ok(series
        .reps
        .iter()
        .enumerate()
        .map(|(i, r)| series.value_rep(z, i) / (b * (-rate * r.norm_sup() as f64).exp()))
        .fold(0.0, f64::max))
}

/// Critical point estimate from the susceptibility coefficients.
#[derive(Clone, Debug, Serialize)]
pub struct ZcEstimate {
    pub value: f64,
    pub uncertainty: f64,
    /// `z_n = (chi_{n-2} / chi_n)^{1/2}`.
    pub ratios: Vec<f64>,
    /// Aitken transforms of `z_n`.
    pub accelerated: Vec<f64>,
    /// The `z_n` were monotone over the last three terms.
    pub monotone: bool,
}

/// Ratio method with Aitken acceleration.
///
/// Two-step ratios are used because the lattice is bipartite. The estimate is
/// the last accelerated value and the uncertainty half the spread of the last
/// three, widened to the spread of the raw ratios when those are not
/// monotone.
pub fn zc_estimate(series: &SeriesTable) -> Result<ZcEstimate> {
    if series.nmax < 8 {
        return Err(Error::domain("critical point estimate needs nmax >= 8"));
    }
    let chi = series.chi_coeffs();
    let ratios: Vec<f64> = (2..=series.nmax).map(|n| (chi[n - 2] / chi[n]).sqrt()).collect();
    let accelerated: Vec<f64> = ratios
        .windows(3)
        .map(|w| {
            let den = w[2] - 2.0 * w[1] + w[0];
            if den.abs() <= 1e-12 * w[2].abs() {
                w[2]
            } else {
                w[2] - (w[2] - w[1]).powi(2) / den
            }
        })
        .collect();
    let last3 = &accelerated[accelerated.len() - 3..];
    let hi = last3.iter().copied().fold(f64::MIN, f64::max);
    let lo = last3.iter().copied().fold(f64::MAX, f64::min);
    let r3 = &ratios[ratios.len() - 3..];
    let monotone = (r3[0] <= r3[1] && r3[1] <= r3[2]) || (r3[0] >= r3[1] && r3[1] >= r3[2]);
    let mut uncertainty = (hi - lo) / 2.0;
    if !monotone {
        let rhi = r3.iter().copied().fold(f64::MIN, f64::max);
        let rlo = r3.iter().copied().fold(f64::MAX, f64::min);
        uncertainty = uncertainty.max(rhi - rlo);
    }
    Ok(ZcEstimate { value: *accelerated.last().unwrap(), uncertainty, ratios, accelerated, monotone })
}

/// Amplitude `A` of `chi(z) ~ A (1 - z/zc)^{-1}`, read off as `chi_n zc^n`
/// averaged over the last two orders.
pub fn chi_amplitude(series: &SeriesTable, zc: f64) -> f64 {
    let chi = series.chi_coeffs();
    let n = series.nmax;
    (chi[n] * zc.powi(n as i32) + chi[n - 1] * zc.powi(n as i32 - 1)) / 2.0
}
