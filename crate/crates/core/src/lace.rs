//! Lace-expansion quantities recovered from exact series.
//!
//! `Pi` is defined by `F = delta - z Omega D - Pi` and `G * F = delta`. Both
//! sides are power series in `z`; inverting `G` as a series gives
//! coefficients `pi_n(x)` that are exact for every `n <= nmax`, so at
//! `beta = 0` the kernel vanishes identically rather than up to a truncation
//! tail. A coefficient of order `n` is supported in `|x|_1 <= n`, so all
//! products of order `<= nmax` are computed without aliasing on a torus of
//! period `M >= 2 nmax + 1`.
//!
//! Quantities with infinite support (`C_mu`, the resummed `G = 1/F`) live on
//! that same torus; their distance from the `Z^d` objects is reported as the
//! periodization bound.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::{fit_decay, Param};
use crate::lattice::{even_transform, tabulate_axis_sum, DualGrid, DualGridKind, FieldTable, Geometry, HalfAxis, LatticePoint, OrthantTable};
use crate::torus::image_tail;
use crate::wsaw::{zc_estimate, SeriesTable};

/// Refusal threshold for the stored coefficient tables, in bytes.
pub const MEMORY_LIMIT: f64 = 2e9;

/// Coefficients `pi_n(x)` together with the transforms they were built from.
#[derive(Clone, Debug)]
pub struct PiSeries {
    dim: usize,
    nmax: usize,
    period: usize,
    beta: f64,
    geometry: Geometry,
    /// `pi_n` on the site orthant.
    pi: Vec<Vec<f64>>,
    /// `hat g_n` on the frequency orthant.
    g_hat: Vec<Vec<f64>>,
    /// `hat D`.
    d_hat: Vec<f64>,
    sites: HalfAxis,
    freqs: HalfAxis,
}

/// Invert the series of `G` frequency by frequency.
///
/// `grid` is the torus period `M`; the default is `2 nmax + 1`.
pub fn pi_series(series: &SeriesTable, grid: Option<usize>) -> Result<PiSeries> {
    if series.geometry().is_torus() {
        return Err(Error::domain("the lace kernel is recovered from a Z^d series"));
    }
    let d = series.dim();
    let n = series.nmax();
    let m = grid.unwrap_or(2 * n + 1);
    if m < 2 * n + 1 {
        return Err(Error::domain(format!(
            "grid period {m} aliases coefficients of order {n}; need at least {}",
            2 * n + 1
        )));
    }
    let geometry = Geometry::torus(d, m)?;
    let half = (m / 2 + 1) as f64;
    let bytes = 3.0 * (n as f64 + 1.0) * half.powi(d as i32) * 8.0;
    if bytes > MEMORY_LIMIT {
        return Err(Error::Budget { what: "lace coefficient tables (bytes)".into(), estimate: bytes, limit: MEMORY_LIMIT });
    }
    let template = OrthantTable::zeros(geometry, 0);
    let len = template.values().len();
    let reps: Vec<Option<usize>> = (0..len).into_par_iter().map(|i| series.rep(&template.point_at(i))).collect();
    let sites = template.site_axis();
    let freqs = HalfAxis::torus(m);
    let g_hat: Vec<Vec<f64>> = (0..=n)
        .map(|k| {
            let g: Vec<f64> = reps.iter().map(|r| r.map_or(0.0, |r| series.coeff_rep(k, r))).collect();
            even_transform(&g, d, &sites, &freqs.nodes, 1.0)
        })
        .collect();
    let cosines: Vec<f64> = freqs.nodes.iter().map(|k| k.cos() / d as f64).collect();
    let d_hat = tabulate_axis_sum(d, &cosines, |s| s);
    let omega = (2 * d) as f64;
    let nk = d_hat.len();
    // pi_hat[n][k]
    let mut pi_hat = vec![vec![0.0; nk]; n + 1];
    let mut f = vec![0.0; n + 1];
    for k in 0..nk {
        f[0] = 1.0 / g_hat[0][k];
        for j in 1..=n {
            let mut acc = 0.0;
            for i in 1..=j {
                acc += g_hat[i][k] * f[j - i];
            }
            f[j] = -acc * f[0];
        }
        for j in 1..=n {
            pi_hat[j][k] = if j == 1 { -f[1] - omega * d_hat[k] } else { -f[j] };
        }
    }
    let scale = (m as f64).powi(-(d as i32));
    let pi = pi_hat.iter().map(|p| even_transform(p, d, &freqs, &sites.nodes, scale)).collect();
    Ok(PiSeries { dim: d, nmax: n, period: m, beta: series.beta(), geometry, pi, g_hat, d_hat, sites, freqs })
}

impl PiSeries {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nmax(&self) -> usize {
        self.nmax
    }

    pub fn period(&self) -> usize {
        self.period
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    fn omega(&self) -> f64 {
        (2 * self.dim) as f64
    }

    /// `pi_n` as a table.
    pub fn coefficient(&self, n: usize) -> Result<OrthantTable> {
        let v = self.pi.get(n).ok_or_else(|| Error::domain(format!("order {n} exceeds nmax {}", self.nmax)))?;
        Ok(OrthantTable::from_raw(self.geometry, 0, v.clone()))
    }

    /// `sum_{n <= upto} pi_n z^n`.
    pub fn pi_at(&self, z: f64, upto: usize) -> OrthantTable {
        let upto = upto.min(self.nmax);
        let mut v = vec![0.0; self.pi[0].len()];
        for n in (0..=upto).rev() {
            for (a, p) in v.iter_mut().zip(&self.pi[n]) {
                *a = *a * z + p;
            }
        }
        OrthantTable::from_raw(self.geometry, 0, v)
    }

    /// `Pi_z` on the full dual torus. Refused above four million frequencies.
    pub fn pi_dual_grid(&self, z: f64) -> Result<DualGrid> {
        let kind = DualGridKind::torus(self.dim, self.period)?;
        if kind.len() > 4_000_000 {
            return Err(Error::Budget { what: "dual grid size".into(), estimate: kind.len() as f64, limit: 4e6 });
        }
        let half = self.forward(self.pi_at(z, self.nmax).values());
        let m = self.period;
        let side = m / 2 + 1;
        Ok(DualGrid::from_fn(kind, |k| {
            let mut idx = 0;
            for &kj in k.iter().rev() {
                let j = (kj * m as f64 / (2.0 * std::f64::consts::PI)).round() as i64;
                idx = idx * side + j.unsigned_abs() as usize;
            }
            Complex64::new(half[idx], 0.0)
        }))
    }

    fn forward(&self, v: &[f64]) -> Vec<f64> {
        even_transform(v, self.dim, &self.sites, &self.freqs.nodes, 1.0)
    }

    fn inverse(&self, v: &[f64]) -> Vec<f64> {
        even_transform(v, self.dim, &self.freqs, &self.sites.nodes, (self.period as f64).powi(-(self.dim as i32)))
    }

    fn step_table(&self) -> Vec<f64> {
        let d = self.dim;
        OrthantTable::from_fn(self.geometry, 0, |x| if x.norm_1() == 1 { 1.0 / (2 * d) as f64 } else { 0.0 })
            .values()
            .to_vec()
    }

    /// `max_x |sum_{n <= nmax} z^n (sum_m g_m * f_{n-m})(x) - delta(x)|`
    /// with `f_n` rebuilt from the real-space `pi_n`.
    pub fn convolution_residual(&self, z: f64) -> f64 {
        let len = self.pi[0].len();
        let step = self.step_table();
        let f_hat: Vec<Vec<f64>> = (0..=self.nmax)
            .map(|n| {
                let f: Vec<f64> = match n {
                    0 => (0..len).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect(),
                    1 => step.iter().zip(&self.pi[1]).map(|(dv, p)| -self.omega() * dv - p).collect(),
                    _ => self.pi[n].iter().map(|p| -p).collect(),
                };
                self.forward(&f)
            })
            .collect();
        let nk = self.d_hat.len();
        let h: Vec<f64> = (0..nk)
            .map(|k| {
                let mut acc = 0.0;
                let mut zn = 1.0;
                for n in 0..=self.nmax {
                    let mut c = 0.0;
                    for m in 0..=n {
                        c += self.g_hat[m][k] * f_hat[n - m][k];
                    }
                    acc += zn * c;
                    zn *= z;
                }
                acc
            })
            .collect();
        let mut r = self.inverse(&h);
        r[0] -= 1.0;
        r.iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

/// `lambda_z` and `mu_z` from the moments of `Pi_z`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LambdaMu {
    pub lambda: f64,
    pub mu: f64,
    pub mu_omega: f64,
    /// `mu Omega` in `(0, 1)` and `lambda` in `(0, 2)`.
    pub regime_ok: bool,
}

/// Solve the two moment conditions on `E = A_mu - lambda F`.
///
/// `lambda = 1 / (1 - sum Pi + sum |x|^2 Pi)` and `mu Omega = 1 - lambda / chi`.
pub fn solve_lambda_mu(pi_moment0: f64, pi_moment2: f64, chi: f64, dim: usize) -> Result<LambdaMu> {
    let den = 1.0 - pi_moment0 + pi_moment2;
    if !(den.abs() > 1e-300) || !chi.is_finite() || chi == 0.0 {
        return Err(Error::Numerical(format!("degenerate moment system: denominator {den}, chi {chi}")));
    }
    let lambda = 1.0 / den;
    let mu_omega = 1.0 - lambda / chi;
    let omega = (2 * dim) as f64;
    Ok(LambdaMu {
        lambda,
        mu: mu_omega / omega,
        mu_omega,
        regime_ok: mu_omega > 0.0 && mu_omega < 1.0 && lambda > 0.0 && lambda < 2.0,
    })
}

/// `G = lambda C_mu + f` at one `z`.
#[derive(Clone, Debug, Serialize)]
pub struct LaceSolution {
    pub dim: usize,
    pub beta: f64,
    pub z: f64,
    pub nmax: usize,
    pub period: usize,
    pub tilt: f64,
    pub lambda: f64,
    pub mu: f64,
    pub mu_omega: f64,
    pub regime_ok: bool,
    /// `1 / hat F(0)`.
    pub chi: f64,
    pub pi_moment0: f64,
    pub pi_moment2: f64,
    pub pi_abs_sum: f64,
    /// `max_x |pi_{nmax-1}(x) z^{nmax-1} + pi_nmax(x) z^nmax|`, the change from dropping two orders.
    pub pi_sensitivity: f64,
    /// `lambda` recomputed without the last two orders, minus `lambda`.
    pub lambda_sensitivity: f64,
    /// `sum E` and `sum |x|^2 E`.
    pub e_moment_residuals: [f64; 2],
    /// `max |(G - lambda C) - C * E * G|`.
    pub f_route_residual: f64,
    /// `max |f^(m)(x)| (1 v |x|^{d-2})` over `|x|_inf <= nmax / 2`.
    pub f_sup_weighted: f64,
    /// The same functional of `lambda C^(m)`.
    pub lambda_c_sup_weighted: f64,
    /// Bound on `lambda (C^T_mu - C_mu)` over the same core.
    pub periodization_bound: f64,
    pub min_f_hat: f64,
    #[serde(skip)]
    pub pi: OrthantTable,
    #[serde(skip)]
    pub e: OrthantTable,
    #[serde(skip)]
    pub f: OrthantTable,
    /// Resummed `1 / F` on the torus.
    #[serde(skip)]
    pub g: OrthantTable,
}

impl LaceSolution {
    pub fn e_table(&self) -> FieldTable {
        self.e.to_field_table()
    }

    pub fn f_table(&self) -> FieldTable {
        self.f.to_field_table()
    }

    pub fn pi_table(&self) -> FieldTable {
        self.pi.to_field_table()
    }
}

fn lambda_of(pi: &OrthantTable) -> f64 {
    1.0 / (1.0 - pi.sum() + pi.second_moment())
}

/// Assemble the decomposition at `z`, with the tilt `e^{m x_1}` applied to the
/// weighted sup of `f`.
pub fn decompose(pis: &PiSeries, z: f64, tilt: f64) -> Result<LaceSolution> {
    if !(z > 0.0) {
        return Err(Error::domain("z must be positive"));
    }
    if !(tilt >= 0.0) {
        return Err(Error::domain("tilt must be nonnegative"));
    }
    let d = pis.dim;
    let omega = pis.omega();
    let pi = pis.pi_at(z, pis.nmax);
    let m0 = pi.sum();
    let m2 = pi.second_moment();
    let f0 = 1.0 - z * omega - m0;
    if !(f0 > 0.0) {
        return Err(Error::domain(format!(
            "z = {z} is at or above the resummed critical point (hat F(0) = {f0:.3e})"
        )));
    }
    let chi = 1.0 / f0;
    let lm = solve_lambda_mu(m0, m2, chi, d)?;
    let pi_hat = pis.forward(pi.values());
    let f_hat: Vec<f64> = pis.d_hat.iter().zip(&pi_hat).map(|(dh, ph)| 1.0 - z * omega * dh - ph).collect();
    let min_f_hat = f_hat.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min_f_hat > 1e-12 * f0) {
        return Err(Error::Numerical(format!(
            "hat F vanishes on the grid (min {min_f_hat:.3e}); the truncated kernel is not invertible at z = {z}"
        )));
    }
    let a_hat: Vec<f64> = pis.d_hat.iter().map(|dh| 1.0 - lm.mu_omega * dh).collect();
    if a_hat.iter().any(|a| !(*a > 0.0)) {
        return Err(Error::Numerical(format!("mu Omega = {} leaves hat A non-positive", lm.mu_omega)));
    }
    let step = pis.step_table();
    let e_vals: Vec<f64> = step
        .iter()
        .zip(pi.values())
        .enumerate()
        .map(|(i, (dv, p))| {
            let delta = if i == 0 { 1.0 - lm.lambda } else { 0.0 };
            delta + (lm.lambda * z * omega - lm.mu_omega) * dv + lm.lambda * p
        })
        .collect();
    let e = OrthantTable::from_raw(pis.geometry, 0, e_vals);
    let e_moment_residuals = [e.sum(), e.second_moment()];
    let g_vals = pis.inverse(&f_hat.iter().map(|f| 1.0 / f).collect::<Vec<_>>());
    let c_vals = pis.inverse(&a_hat.iter().map(|a| 1.0 / a).collect::<Vec<_>>());
    let f1: Vec<f64> = g_vals.iter().zip(&c_vals).map(|(g, c)| g - lm.lambda * c).collect();
    let e_hat = pis.forward(e.values());
    let prod: Vec<f64> = e_hat.iter().zip(&a_hat).zip(&f_hat).map(|((e, a), f)| e / (a * f)).collect();
    let f2 = pis.inverse(&prod);
    let f_route_residual = f1.iter().zip(&f2).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));

    let f = OrthantTable::from_raw(pis.geometry, 0, f1);
    let c = OrthantTable::from_raw(pis.geometry, 0, c_vals);
    let core = (pis.nmax / 2).max(1) as i64;
    let weight = |x: &LatticePoint| {
        let r = x.norm_euclid().powi(d as i32 - 2).max(1.0);
        r * (tilt * x.coords()[0] as f64).exp()
    };
    let mut f_sup: f64 = 0.0;
    let mut c_sup: f64 = 0.0;
    for (x, v) in f.iter() {
        if x.norm_sup() <= core {
            let w = weight(&x);
            f_sup = f_sup.max(v.abs() * w);
            c_sup = c_sup.max(lm.lambda * c.get(&x) * w);
        }
    }
    let periodization_bound = if lm.mu > 0.0 && lm.mu_omega < 1.0 {
        lm.lambda * image_tail(d, pis.period, lm.mu, core, 0)?
    } else {
        f64::INFINITY
    };
    let lower = pis.pi_at(z, pis.nmax.saturating_sub(2));
    let pi_sensitivity = pi.zip_with(&lower, |a, b| a - b)?.max_abs();
    let lambda_sensitivity = lambda_of(&lower) - lm.lambda;
    Ok(LaceSolution {
        dim: d,
        beta: pis.beta,
        z,
        nmax: pis.nmax,
        period: pis.period,
        tilt,
        lambda: lm.lambda,
        mu: lm.mu,
        mu_omega: lm.mu_omega,
        regime_ok: lm.regime_ok,
        chi,
        pi_moment0: m0,
        pi_moment2: m2,
        pi_abs_sum: pi.abs_sum(),
        pi_sensitivity,
        lambda_sensitivity,
        e_moment_residuals,
        f_route_residual,
        f_sup_weighted: f_sup,
        lambda_c_sup_weighted: c_sup,
        periodization_bound,
        min_f_hat,
        pi,
        e,
        f,
        g: OrthantTable::from_raw(pis.geometry, 0, g_vals),
    })
}

/// Log-log slope of `max_{|x|_inf = l} |Pi(x)|` against `l`.
pub fn pi_decay_slope(pi: &OrthantTable, shells: (i64, i64)) -> Result<f64> {
    let mut pts = Vec::new();
    for l in shells.0.max(1)..=shells.1 {
        let v = pi.iter().filter(|(x, _)| x.norm_sup() == l).fold(0.0f64, |m, (_, v)| m.max(v.abs()));
        if v > 0.0 {
            pts.push(((l as f64).ln(), v.ln()));
        }
    }
    if pts.len() < 2 {
        return Err(Error::domain("need two nonzero shells for a slope"));
    }
    Ok(line_fit(&pts).1)
}

fn line_fit(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / n, sy / n);
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (my - slope * mx, slope)
}

/// One `z` of the mass identity
/// `1/chi = 2 z (cosh m - 1) + sum_x Pi(x) (cosh(m x_1) - 1)`.
#[derive(Clone, Debug, Serialize)]
pub struct MassIdentityRow {
    pub z: f64,
    pub z_omega: f64,
    pub chi: f64,
    /// Decay rate of the resummed two-point function along the first axis.
    pub m_fit: Option<f64>,
    /// Root of the identity for the recovered kernel.
    pub m_lace: f64,
    /// `|lhs - rhs(m_fit)| chi`.
    pub residual: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct MassIdentityReport {
    pub dim: usize,
    pub beta: f64,
    pub zc: f64,
    pub omega: f64,
    pub rows: Vec<MassIdentityRow>,
    /// Intercept of `m^2 / (1 - z / zc)` extrapolated to `z = zc`.
    pub c2_limit: Option<f64>,
}

fn identity_rhs(pi: &OrthantTable, z: f64, m: f64) -> f64 {
    2.0 * z * (m.cosh() - 1.0) + pi.tilted_zero_mode_shift(m)
}

/// Evaluate the mass identity at each `z`, with the rate fitted on `window`
/// along the first axis of the resummed two-point function.
pub fn mass_identity_check(pis: &PiSeries, series: &SeriesTable, zs: &[f64], window: (i64, i64)) -> Result<MassIdentityReport> {
    let d = pis.dim;
    if window.1 as usize > pis.period / 2 {
        return Err(Error::domain(format!("window end {} exceeds the half period {}", window.1, pis.period / 2)));
    }
    let zc = zc_estimate(series)?.value;
    let mut rows = Vec::new();
    for &z in zs {
        let sol = decompose(pis, z, 0.0)?;
        let lhs = 1.0 / sol.chi;
        let data: Vec<(f64, f64)> =
            (window.0..=window.1).map(|n| (n as f64, sol.g.get(&LatticePoint::on_axis(d, n)))).collect();
        let m_fit = fit_decay(&data, Param::Fixed((d as f64 - 1.0) / 2.0), Param::Free).ok().map(|f| f.rate);
        let mut hi = 1.0;
        while identity_rhs(&sol.pi, z, hi) < lhs && hi < 50.0 {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if identity_rhs(&sol.pi, z, mid) < lhs {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        rows.push(MassIdentityRow {
            z,
            z_omega: z * (2 * d) as f64,
            chi: sol.chi,
            m_fit,
            m_lace: 0.5 * (lo + hi),
            residual: m_fit.map(|m| (lhs - identity_rhs(&sol.pi, z, m)).abs() * sol.chi),
        });
    }
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.m_fit.map(|m| (1.0 - r.z / zc, m * m / (1.0 - r.z / zc))))
        .filter(|(t, _)| *t > 0.0)
        .collect();
    let c2_limit = if pts.len() >= 2 { Some(line_fit(&pts).0) } else { pts.first().map(|p| p.1) };
    Ok(MassIdentityReport { dim: d, beta: pis.beta, zc, omega: (2 * d) as f64, rows, c2_limit })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wsaw::{enumerate_two_point, EnumOptions, WsawParams};

    fn series(d: usize, beta: f64, nmax: usize) -> SeriesTable {
        let p = WsawParams { geometry: Geometry::lattice(d).unwrap(), beta, nmax };
        enumerate_two_point(&p, EnumOptions::default()).unwrap()
    }

    #[test]
    fn simple_random_walk_collapses() {
        let pis = pi_series(&series(2, 0.0, 10), None).unwrap();
        for n in 0..=10 {
            assert!(pis.coefficient(n).unwrap().max_abs() < 1e-10 * 4f64.powi(n as i32).max(1.0));
        }
        let sol = decompose(&pis, 0.2, 0.0).unwrap();
        assert!((sol.lambda - 1.0).abs() < 1e-12);
        assert!((sol.mu - 0.2).abs() < 1e-12);
        assert!(sol.f.max_abs() < 1e-12);
        assert!(sol.e.max_abs() < 1e-12);
        assert!(sol.regime_ok);
    }

    #[test]
    fn one_dimensional_kernel_matches_direct_recursion() {
        let n = 10;
        let s = series(1, 0.4, n);
        let pis = pi_series(&s, Some(31)).unwrap();
        // f_0 = delta, f_j = -sum_{i >= 1} g_i * f_{j-i}, on the integers.
        let w = n as i64;
        let idx = |x: i64| (x + 2 * w) as usize;
        let size = (4 * w + 1) as usize;
        let g: Vec<Vec<f64>> =
            (0..=n).map(|j| (0..size).map(|i| s.coeff(j, &LatticePoint::new(vec![i as i64 - 2 * w]))).collect()).collect();
        let mut f = vec![vec![0.0; size]; n + 1];
        f[0][idx(0)] = 1.0;
        for j in 1..=n {
            for i in 1..=j {
                for a in 0..size {
                    if g[i][a] == 0.0 {
                        continue;
                    }
                    for b in 0..size {
                        let x = a as i64 + b as i64 - 4 * w;
                        if x.abs() <= 2 * w {
                            f[j][idx(x)] -= g[i][a] * f[j - i][b];
                        }
                    }
                }
            }
        }
        for j in 2..=n {
            let c = pis.coefficient(j).unwrap();
            for x in 0..=w {
                let want = -f[j][idx(x)];
                assert!((c.get(&LatticePoint::new(vec![x])) - want).abs() < 1e-9, "order {j} at {x}");
            }
        }
        // The first orders: pi_1 = 0, pi_2(0) = -2 beta.
        assert!(pis.coefficient(1).unwrap().max_abs() < 1e-12);
        assert!((pis.coefficient(2).unwrap().get(&LatticePoint::new(vec![0])) + 0.8).abs() < 1e-12);
    }

    #[test]
    fn moments_and_routes_agree() {
        let pis = pi_series(&series(2, 0.3, 10), None).unwrap();
        let sol = decompose(&pis, 0.15, 0.1).unwrap();
        assert!(sol.e_moment_residuals[0].abs() < 1e-12);
        assert!(sol.e_moment_residuals[1].abs() < 1e-12);
        assert!(sol.f_route_residual < 1e-10);
        assert!(sol.lambda > 0.5 && sol.lambda < 1.0);
        assert!(sol.regime_ok);
        assert!(pis.convolution_residual(0.125) < 1e-10);
    }

    #[test]
    fn lambda_mu_formulas() {
        let lm = solve_lambda_mu(0.0, 0.0, 2.0, 2).unwrap();
        assert_eq!(lm.lambda, 1.0);
        assert_eq!(lm.mu_omega, 0.5);
        assert!(solve_lambda_mu(1.0, 0.0, 2.0, 2).is_err());
        let lm = solve_lambda_mu(0.1, 0.05, 10.0, 2).unwrap();
        assert!((lm.lambda - 1.0 / 0.95).abs() < 1e-15);
    }

    #[test]
    fn one_dimensional_mass_identity() {
        let s = series(1, 0.0, 16);
        let pis = pi_series(&s, None).unwrap();
        let z = 0.3;
        let rep = mass_identity_check(&pis, &s, &[z], (2, 8)).unwrap();
        let m0 = crate::srw::mass_m0(1, z).unwrap();
        assert!((rep.rows[0].m_lace - m0).abs() < 1e-10);
        assert!(rep.rows[0].residual.unwrap() < 1e-3);
    }

    #[test]
    fn refuses_aliasing_grids() {
        let s = series(1, 0.0, 6);
        assert!(pi_series(&s, Some(12)).is_err());
        assert!(pi_series(&s, Some(13)).is_ok());
    }
}
