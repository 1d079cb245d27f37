use std::io::{Read, Write};

use super::point::{torus_rep, Geometry, LatticePoint};
use crate::error::{Error, Result};

/// A real function on a finite box `||x||_inf <= L` of `Z^d` or on a whole torus.
///
/// Values outside the box read as zero. Storage is a dense array with the first
/// coordinate varying fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldTable {
    geometry: Geometry,
    radius: usize,
    values: Vec<f64>,
}

impl FieldTable {
    /// Zero table. `radius` is ignored on a torus.
    pub fn zeros(geometry: Geometry, radius: usize) -> Self {
        let radius = if geometry.is_torus() { 0 } else { radius };
        let side = side_of(&geometry, radius);
        FieldTable {
            geometry,
            radius,
            values: vec![0.0; side.pow(geometry.dim() as u32)],
        }
    }

    /// Kronecker delta at the origin.
    pub fn delta(geometry: Geometry) -> Self {
        let mut t = Self::zeros(geometry, 0);
        let o = LatticePoint::origin(geometry.dim());
        let i = t.index(&o).expect("origin is in every table");
        t.values[i] = 1.0;
        t
    }

    pub fn from_fn(geometry: Geometry, radius: usize, f: impl Fn(&LatticePoint) -> f64) -> Self {
        let mut t = Self::zeros(geometry, radius);
        for i in 0..t.values.len() {
            let x = t.point_at(i);
            t.values[i] = f(&x);
        }
        t
    }

    pub(crate) fn from_raw(geometry: Geometry, radius: usize, values: Vec<f64>) -> Self {
        let radius = if geometry.is_torus() { 0 } else { radius };
        debug_assert_eq!(values.len(), side_of(&geometry, radius).pow(geometry.dim() as u32));
        FieldTable { geometry, radius, values }
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    /// Box half-width on `Z^d` (zero for a torus).
    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn dim(&self) -> usize {
        self.geometry.dim()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub(crate) fn side(&self) -> usize {
        side_of(&self.geometry, self.radius)
    }

    /// Raw values, first coordinate fastest.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn offset(&self) -> i64 {
        match self.geometry {
            Geometry::Lattice { .. } => self.radius as i64,
            Geometry::Torus { .. } => 0,
        }
    }

    fn index_of_coords(&self, coords: &[i64]) -> Option<usize> {
        let side = self.side();
        let mut idx = 0usize;
        let mut stride = 1usize;
        match self.geometry {
            Geometry::Lattice { .. } => {
                let l = self.radius as i64;
                for &c in coords {
                    if c < -l || c > l {
                        return None;
                    }
                    idx += (c + l) as usize * stride;
                    stride *= side;
                }
            }
            Geometry::Torus { period, .. } => {
                for &c in coords {
                    idx += c.rem_euclid(period as i64) as usize * stride;
                    stride *= side;
                }
            }
        }
        Some(idx)
    }

    pub(crate) fn index(&self, x: &LatticePoint) -> Option<usize> {
        if x.dim() != self.dim() {
            return None;
        }
        self.index_of_coords(x.coords())
    }

    pub(crate) fn point_at(&self, mut idx: usize) -> LatticePoint {
        let side = self.side();
        let off = self.offset();
        let mut c = Vec::with_capacity(self.dim());
        for _ in 0..self.dim() {
            let digit = (idx % side) as i64;
            idx /= side;
            c.push(match self.geometry {
                Geometry::Lattice { .. } => digit - off,
                Geometry::Torus { period, .. } => torus_rep(digit, period),
            });
        }
        LatticePoint::new(c)
    }

    /// Value at `x`; zero outside the box. Torus points are reduced mod `r`.
    pub fn get(&self, x: &LatticePoint) -> f64 {
        self.index(x).map_or(0.0, |i| self.values[i])
    }

    pub fn set(&mut self, x: &LatticePoint, v: f64) -> Result<()> {
        match self.index(x) {
            Some(i) => {
                self.values[i] = v;
                Ok(())
            }
            None => Err(Error::domain(format!("point {x} outside table of radius {}", self.radius))),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (LatticePoint, f64)> + '_ {
        self.values.iter().enumerate().map(|(i, &v)| (self.point_at(i), v))
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// `sum_x |x|^2 f(x)` with `x` the stored representative.
    pub fn second_moment(&self) -> f64 {
        self.iter().map(|(x, v)| x.norm_euclid_sq() as f64 * v).sum()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        FieldTable {
            geometry: self.geometry,
            radius: self.radius,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Re-box a lattice table to `radius`, dropping or zero-padding.
    pub fn with_radius(&self, radius: usize) -> Result<Self> {
        if self.geometry.is_torus() {
            return Err(Error::domain("torus tables have no box radius"));
        }
        let mut out = Self::zeros(self.geometry, radius);
        let r = radius.min(self.radius) as i64;
        for (x, v) in self.iter() {
            if x.norm_sup() <= r {
                out.set(&x, v)?;
            }
        }
        Ok(out)
    }

    /// `self + scale * other`, on the larger of the two boxes.
    pub fn add_scaled(&self, other: &FieldTable, scale: f64) -> Result<Self> {
        self.check_same_geometry(other)?;
        let radius = self.radius.max(other.radius);
        let mut out = if self.radius == radius { self.clone() } else { self.with_radius(radius)? };
        for (x, v) in other.iter() {
            if v != 0.0 {
                let i = out.index(&x).expect("box covers both operands");
                out.values[i] += scale * v;
            }
        }
        Ok(out)
    }

    pub fn max_abs_diff(&self, other: &FieldTable) -> Result<f64> {
        let diff = self.add_scaled(other, -1.0)?;
        Ok(diff.values.iter().fold(0.0f64, |m, v| m.max(v.abs())))
    }

    /// Whether the table is invariant under coordinate permutations and
    /// reflections, to absolute tolerance `tol`.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        let d = self.dim();
        self.iter().all(|(x, v)| {
            let c = x.coords();
            // Generators of the hyperoctahedral group: one reflection and the
            // adjacent transpositions.
            let mut refl = c.to_vec();
            refl[0] = -refl[0];
            let reflected = self.get(&LatticePoint::new(refl));
            let swapped_ok = (0..d.saturating_sub(1)).all(|j| {
                let mut s = c.to_vec();
                s.swap(j, j + 1);
                (self.get(&LatticePoint::new(s)) - v).abs() <= tol
            });
            (reflected - v).abs() <= tol && swapped_ok
        })
    }

    fn check_same_geometry(&self, other: &FieldTable) -> Result<()> {
        if self.geometry != other.geometry {
            return Err(Error::GeometryMismatch(format!(
                "{:?} vs {:?}",
                self.geometry, other.geometry
            )));
        }
        Ok(())
    }

    /// One-step distribution `D` of simple random walk.
    pub fn step_distribution(geometry: Geometry) -> Result<Self> {
        if let Geometry::Torus { period, .. } = geometry {
            if period < 3 {
                return Err(Error::Geometry(format!("torus period must be >= 3, got {period}")));
            }
        }
        let d = geometry.dim();
        let mut t = Self::zeros(geometry, 1);
        let w = 1.0 / geometry.degree() as f64;
        for axis in 0..d {
            for sign in [1, -1] {
                t.set(&LatticePoint::unit(d, axis, sign), w)?;
            }
        }
        Ok(t)
    }

    /// `(f * g)(x) = sum_y f(y) g(x - y)`. On `Z^d` the result lives on the
    /// box of radius `L_f + L_g`; on the torus the sum wraps.
    pub fn convolve(&self, other: &FieldTable) -> Result<Self> {
        self.check_same_geometry(other)?;
        let (big, small) = if self.nnz() >= other.nnz() { (self, other) } else { (other, self) };
        let radius = self.radius + other.radius;
        let mut out = Self::zeros(self.geometry, radius);
        let d = self.dim();
        let small_pts: Vec<(LatticePoint, f64)> = small.iter().filter(|(_, v)| *v != 0.0).collect();
        let mut buf = vec![0i64; d];
        for (i, &bv) in big.values.iter().enumerate() {
            if bv == 0.0 {
                continue;
            }
            let y = big.point_at(i);
            for (s, sv) in &small_pts {
                for j in 0..d {
                    buf[j] = y.coords()[j] + s.coords()[j];
                }
                let k = out.index_of_coords(&buf).expect("result box covers all sums");
                out.values[k] += bv * sv;
            }
        }
        Ok(out)
    }

    fn nnz(&self) -> usize {
        self.values.iter().filter(|v| **v != 0.0).count()
    }

    /// Exponential tilt `f(x) e^{m x_1}`. Only defined on `Z^d`.
    pub fn tilt(&self, m: f64) -> Result<Self> {
        if self.geometry.is_torus() {
            return Err(Error::domain("the exponential tilt is not torus-periodic"));
        }
        if !(m >= 0.0) {
            return Err(Error::domain(format!("tilt parameter must be >= 0, got {m}")));
        }
        let mut out = self.clone();
        let side = self.side();
        let l = self.radius as i64;
        for (i, v) in out.values.iter_mut().enumerate() {
            let x1 = (i % side) as i64 - l;
            *v *= (m * x1 as f64).exp();
        }
        Ok(out)
    }

    /// CSV with header `x1,...,xd,value`, one row per stored site.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header: Vec<String> = (1..=self.dim()).map(|j| format!("x{j}")).collect();
        header.push("value".into());
        wr.write_record(&header)?;
        for (x, v) in self.iter() {
            let mut row: Vec<String> = x.coords().iter().map(|c| c.to_string()).collect();
            row.push(format!("{v}"));
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Inverse of [`FieldTable::write_csv`]. On `Z^d` the box radius is the
    /// largest sup norm present.
    pub fn read_csv<R: Read>(r: R, geometry: Geometry) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let d = geometry.dim();
        let header = rd.headers()?.clone();
        if header.len() != d + 1 || header.get(d) != Some("value") {
            return Err(Error::Parse(format!("expected header x1..x{d},value, got {header:?}")));
        }
        let mut rows = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let coords: Vec<i64> = (0..d)
                .map(|j| rec[j].parse::<i64>().map_err(|e| Error::Parse(e.to_string())))
                .collect::<Result<_>>()?;
            let v: f64 = rec[d].parse().map_err(|e: std::num::ParseFloatError| Error::Parse(e.to_string()))?;
            rows.push((LatticePoint::new(coords), v));
        }
        let radius = rows.iter().map(|(x, _)| x.norm_sup()).max().unwrap_or(0) as usize;
        let mut t = Self::zeros(geometry, radius);
        for (x, v) in rows {
            t.set(&x, v)?;
        }
        Ok(t)
    }
}

fn side_of(geometry: &Geometry, radius: usize) -> usize {
    match *geometry {
        Geometry::Lattice { .. } => 2 * radius + 1,
        Geometry::Torus { period, .. } => period,
    }
}
