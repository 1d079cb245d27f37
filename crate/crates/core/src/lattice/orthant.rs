use std::f64::consts::PI;

use super::fourier::contract;
use super::point::{torus_rep, Geometry, LatticePoint};
use super::table::FieldTable;
use crate::error::{Error, Result};

/// A function that is even in every coordinate, stored on the nonnegative
/// orthant `[0, extent]^d`.
///
/// On `Z^d` the extent is the box radius; on a torus of period `r` it is
/// `r / 2`. Two-point functions, the lace kernel and their relatives are all
/// of this form, which cuts storage and transform cost by roughly `2^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct OrthantTable {
    geometry: Geometry,
    extent: usize,
    values: Vec<f64>,
}

impl OrthantTable {
    pub fn zeros(geometry: Geometry, extent: usize) -> Self {
        let extent = match geometry {
            Geometry::Lattice { .. } => extent,
            Geometry::Torus { period, .. } => period / 2,
        };
        OrthantTable {
            geometry,
            extent,
            values: vec![0.0; (extent + 1).pow(geometry.dim() as u32)],
        }
    }

    pub fn from_fn(geometry: Geometry, extent: usize, f: impl Fn(&LatticePoint) -> f64) -> Self {
        let mut t = Self::zeros(geometry, extent);
        for i in 0..t.values.len() {
            t.values[i] = f(&t.point_at(i));
        }
        t
    }

    pub(crate) fn from_raw(geometry: Geometry, extent: usize, values: Vec<f64>) -> Self {
        let t = Self::zeros(geometry, extent);
        debug_assert_eq!(t.values.len(), values.len());
        OrthantTable { values, ..t }
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn dim(&self) -> usize {
        self.geometry.dim()
    }

    pub fn extent(&self) -> usize {
        self.extent
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn point_at(&self, mut idx: usize) -> LatticePoint {
        let side = self.extent + 1;
        let c: Vec<i64> = (0..self.dim())
            .map(|_| {
                let v = (idx % side) as i64;
                idx /= side;
                v
            })
            .collect();
        LatticePoint::new(c)
    }

    fn fold(&self, c: i64) -> i64 {
        match self.geometry {
            Geometry::Lattice { .. } => c.abs(),
            Geometry::Torus { period, .. } => torus_rep(c, period).abs(),
        }
    }

    fn index(&self, x: &LatticePoint) -> Option<usize> {
        if x.dim() != self.dim() {
            return None;
        }
        let side = self.extent + 1;
        let mut idx = 0;
        let mut stride = 1;
        for &c in x.coords() {
            let a = self.fold(c) as usize;
            if a > self.extent {
                return None;
            }
            idx += a * stride;
            stride *= side;
        }
        Some(idx)
    }

    pub fn get(&self, x: &LatticePoint) -> f64 {
        self.index(x).map_or(0.0, |i| self.values[i])
    }

    pub fn set(&mut self, x: &LatticePoint, v: f64) -> Result<()> {
        let i = self
            .index(x)
            .ok_or_else(|| Error::domain(format!("point {x} outside orthant of extent {}", self.extent)))?;
        self.values[i] = v;
        Ok(())
    }

    /// Orthant points and values.
    pub fn iter(&self) -> impl Iterator<Item = (LatticePoint, f64)> + '_ {
        self.values.iter().enumerate().map(|(i, &v)| (self.point_at(i), v))
    }

    fn coord_weight(&self, c: i64) -> f64 {
        if c == 0 {
            return 1.0;
        }
        match self.geometry {
            Geometry::Torus { period, .. } if period % 2 == 0 && c as usize == period / 2 => 1.0,
            _ => 2.0,
        }
    }

    /// Number of full-lattice (or torus) points represented by orthant point `x`.
    pub fn multiplicity(&self, x: &LatticePoint) -> f64 {
        x.coords().iter().map(|&c| self.coord_weight(c)).product()
    }

    pub fn sum(&self) -> f64 {
        self.iter().map(|(x, v)| self.multiplicity(&x) * v).sum()
    }

    pub fn abs_sum(&self) -> f64 {
        self.iter().map(|(x, v)| self.multiplicity(&x) * v.abs()).sum()
    }

    /// `sum_x |x|^2 f(x)`.
    pub fn second_moment(&self) -> f64 {
        self.iter()
            .map(|(x, v)| self.multiplicity(&x) * x.norm_euclid_sq() as f64 * v)
            .sum()
    }

    /// `sum_x (cosh(m x_1) - 1) f(x)`, which equals `f^(m)(0) - f^(0)` for even `f`.
    pub fn tilted_zero_mode_shift(&self, m: f64) -> f64 {
        self.iter()
            .map(|(x, v)| self.multiplicity(&x) * ((m * x.coords()[0] as f64).cosh() - 1.0) * v)
            .sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        OrthantTable {
            values: self.values.iter().map(|&v| f(v)).collect(),
            ..self.clone()
        }
    }

    pub fn zip_with(&self, other: &OrthantTable, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.geometry != other.geometry || self.extent != other.extent {
            return Err(Error::GeometryMismatch("orthant tables differ in geometry or extent".into()));
        }
        Ok(OrthantTable {
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
            ..self.clone()
        })
    }

    /// All points of the full lattice (or torus) folding onto orthant point `x`.
    pub fn images(&self, x: &LatticePoint) -> Vec<LatticePoint> {
        let mut out = vec![Vec::with_capacity(self.dim())];
        for &c in x.coords() {
            let flip = self.coord_weight(c) > 1.0;
            let mut next = Vec::with_capacity(out.len() * 2);
            for p in &out {
                let mut a = p.clone();
                a.push(c);
                next.push(a);
                if flip {
                    let mut b = p.clone();
                    b.push(-c);
                    next.push(b);
                }
            }
            out = next;
        }
        out.into_iter().map(LatticePoint::new).collect()
    }

    /// `(f * g)(x)` summed over the full support of `self`.
    pub fn convolve_at(&self, other: &OrthantTable, x: &LatticePoint) -> f64 {
        let mut acc = 0.0;
        for (y, v) in self.iter() {
            if v == 0.0 {
                continue;
            }
            for yy in self.images(&y) {
                acc += v * other.get(&(x - &yy));
            }
        }
        acc
    }

    pub fn to_field_table(&self) -> FieldTable {
        FieldTable::from_fn(self.geometry, self.extent, |x| self.get(x))
    }

    /// Restriction of an even table to the orthant. Evenness is not checked.
    pub fn from_field_table(t: &FieldTable) -> Self {
        let extent = match t.geometry() {
            Geometry::Lattice { .. } => t.radius(),
            Geometry::Torus { period, .. } => period / 2,
        };
        OrthantTable::from_fn(t.geometry(), extent, |x| t.get(x))
    }

    /// Half-axis of site coordinates `0..=extent` with fold weights.
    pub(crate) fn site_axis(&self) -> HalfAxis {
        let nodes: Vec<f64> = (0..=self.extent).map(|c| c as f64).collect();
        let weights = (0..=self.extent as i64).map(|c| self.coord_weight(c)).collect();
        HalfAxis { nodes, weights }
    }
}

/// Nonnegative half of a symmetric node set, with the number of nodes each
/// entry stands for.
#[derive(Clone, Debug)]
pub(crate) struct HalfAxis {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl HalfAxis {
    /// Positive midpoints of the `m`-point quadrature grid on `[-pi, pi)`.
    pub fn quadrature(m: usize) -> Self {
        let h = 2.0 * PI / m as f64;
        let nodes: Vec<f64> = (m / 2..m).map(|i| -PI + (i as f64 + 0.5) * h).collect();
        let weights = vec![2.0; nodes.len()];
        HalfAxis { nodes, weights }
    }

    /// Frequencies `2 pi j / r`, `0 <= j <= r/2`.
    pub fn torus(r: usize) -> Self {
        let nodes: Vec<f64> = (0..=r / 2).map(|j| 2.0 * PI * j as f64 / r as f64).collect();
        let weights = (0..=r / 2)
            .map(|j| if j == 0 || (r % 2 == 0 && j == r / 2) { 1.0 } else { 2.0 })
            .collect();
        HalfAxis { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }
}

/// Even cosine transform `out(p) = scale * sum_q w_q in(q) prod_j cos(p_j q_j)`
/// from the half-axis `from` to the node list `to` (same in every direction).
pub(crate) fn even_transform(input: &[f64], dim: usize, from: &HalfAxis, to: &[f64], scale: f64) -> Vec<f64> {
    let mat: Vec<f64> = to
        .iter()
        .flat_map(|&p| from.nodes.iter().zip(&from.weights).map(move |(&q, &w)| w * (p * q).cos()))
        .collect();
    let shape = vec![from.len(); dim];
    let mats: Vec<(usize, &[f64])> = (0..dim).map(|_| (to.len(), mat.as_slice())).collect();
    let mut out = contract(input, &shape, &mats);
    if scale != 1.0 {
        out.iter_mut().for_each(|v| *v *= scale);
    }
    out
}

/// Values of `f(v[i_1] + ... + v[i_d])` on the half grid, for integrands that
/// depend on `k` only through a sum of per-axis terms.
pub(crate) fn tabulate_axis_sum(dim: usize, axis_values: &[f64], f: impl Fn(f64) -> f64 + Sync) -> Vec<f64> {
    use rayon::prelude::*;
    let n = axis_values.len();
    let inner = n.pow(dim as u32 - 1);
    let mut out = vec![0.0; n * inner];
    // Chunks along the slowest axis keep the work split deterministic.
    out.par_chunks_mut(inner).enumerate().for_each(|(top, chunk)| {
        let base = axis_values[top];
        let mut idx = vec![0usize; dim - 1];
        for slot in chunk.iter_mut() {
            let s: f64 = idx.iter().map(|&i| axis_values[i]).sum::<f64>() + base;
            *slot = f(s);
            for i in idx.iter_mut() {
                *i += 1;
                if *i < n {
                    break;
                }
                *i = 0;
            }
        }
    });
    out
}
