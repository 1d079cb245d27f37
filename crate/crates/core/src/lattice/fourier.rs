use std::f64::consts::PI;
use std::io::Write;
use std::ops::{AddAssign, Mul};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::point::{torus_rep, Geometry, LatticePoint};
use super::table::FieldTable;
use crate::error::{Error, Result};

/// Frequency set of a [`DualGrid`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DualGridKind {
    /// Frequencies `(2 pi / r) j` with `j` in the torus index set `[-r/2, r/2)`.
    TorusDual { dim: usize, period: usize },
    /// Uniform midpoint grid with `points` nodes per axis on `[-pi, pi)`.
    /// The node count must be even, so `k = 0` is never sampled.
    Quadrature { dim: usize, points: usize },
}

impl DualGridKind {
    pub fn torus(dim: usize, period: usize) -> Result<Self> {
        Geometry::torus(dim, period)?;
        Ok(DualGridKind::TorusDual { dim, period })
    }

    pub fn quadrature(dim: usize, points: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Geometry("dimension must be at least 1".into()));
        }
        if points == 0 || points % 2 != 0 {
            return Err(Error::domain(format!("quadrature size must be even and positive, got {points}")));
        }
        Ok(DualGridKind::Quadrature { dim, points })
    }

    pub fn dim(&self) -> usize {
        match *self {
            DualGridKind::TorusDual { dim, .. } | DualGridKind::Quadrature { dim, .. } => dim,
        }
    }

    pub fn points_per_axis(&self) -> usize {
        match *self {
            DualGridKind::TorusDual { period, .. } => period,
            DualGridKind::Quadrature { points, .. } => points,
        }
    }

    pub fn len(&self) -> usize {
        self.points_per_axis().pow(self.dim() as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn axis_frequencies(&self) -> Vec<f64> {
        match *self {
            DualGridKind::TorusDual { period, .. } => (0..period)
                .map(|i| 2.0 * PI * torus_rep(i as i64 - (period / 2) as i64, period) as f64 / period as f64)
                .collect(),
            DualGridKind::Quadrature { points, .. } => {
                let h = 2.0 * PI / points as f64;
                (0..points).map(|i| -PI + (i as f64 + 0.5) * h).collect()
            }
        }
    }

    /// The frequency vector stored at flat index `idx` (first axis fastest).
    pub fn frequency(&self, mut idx: usize) -> Vec<f64> {
        let ax = self.axis_frequencies();
        let n = ax.len();
        (0..self.dim())
            .map(|_| {
                let k = ax[idx % n];
                idx /= n;
                k
            })
            .collect()
    }
}

/// Values of a function on a set of dual frequencies.
#[derive(Clone, Debug, PartialEq)]
pub struct DualGrid {
    kind: DualGridKind,
    values: Vec<Complex64>,
}

impl DualGrid {
    pub fn from_fn(kind: DualGridKind, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let values = (0..kind.len()).map(|i| f(&kind.frequency(i))).collect();
        DualGrid { kind, values }
    }

    pub fn kind(&self) -> DualGridKind {
        self.kind
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn map(&self, f: impl Fn(&[f64], Complex64) -> Complex64) -> Self {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| f(&self.kind.frequency(i), v))
            .collect();
        DualGrid { kind: self.kind, values }
    }

    /// Value at the frequency closest to zero (exactly zero on a torus dual).
    pub fn at_zero(&self) -> Complex64 {
        let ax = self.kind.axis_frequencies();
        let i0 = ax
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let n = ax.len();
        let mut idx = 0;
        let mut stride = 1;
        for _ in 0..self.kind.dim() {
            idx += i0 * stride;
            stride *= n;
        }
        self.values[idx]
    }

    fn normalization(&self) -> f64 {
        1.0 / self.kind.len() as f64
    }

    /// Inverse transform at a single site: the exact finite sum on a torus
    /// dual, the midpoint rule for the `T^d` integral on a quadrature grid.
    pub fn inverse_at(&self, x: &LatticePoint) -> Result<Complex64> {
        x.check_dim(self.kind.dim())?;
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, v) in self.values.iter().enumerate() {
            let k = self.kind.frequency(i);
            let phase: f64 = k.iter().zip(x.coords()).map(|(k, &x)| k * x as f64).sum();
            acc += v * Complex64::from_polar(1.0, -phase);
        }
        Ok(acc * self.normalization())
    }

    /// Real part of the inverse transform on a whole table: the full torus for
    /// a torus dual, the box `||x||_inf <= radius` for a quadrature grid.
    pub fn inverse_table(&self, radius: usize) -> Result<FieldTable> {
        let d = self.kind.dim();
        let (geometry, xs): (Geometry, Vec<i64>) = match self.kind {
            DualGridKind::TorusDual { period, .. } => (
                Geometry::torus(d, period)?,
                (0..period as i64).map(|i| torus_rep(i, period)).collect(),
            ),
            DualGridKind::Quadrature { .. } => {
                (Geometry::lattice(d)?, (-(radius as i64)..=radius as i64).collect())
            }
        };
        let ks = self.kind.axis_frequencies();
        let mat: Vec<Complex64> = xs
            .iter()
            .flat_map(|&x| ks.iter().map(move |&k| Complex64::from_polar(1.0, -k * x as f64)))
            .collect();
        let shape = vec![ks.len(); d];
        let mats: Vec<(usize, &[Complex64])> = (0..d).map(|_| (xs.len(), mat.as_slice())).collect();
        let out = contract(&self.values, &shape, &mats);
        let norm = self.normalization();
        Ok(FieldTable::from_raw(geometry, radius, out.iter().map(|v| v.re * norm).collect()))
    }

    /// CSV with header `k1,...,kd,re,im`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let d = self.kind.dim();
        let mut header: Vec<String> = (1..=d).map(|j| format!("k{j}")).collect();
        header.push("re".into());
        header.push("im".into());
        wr.write_record(&header)?;
        for (i, v) in self.values.iter().enumerate() {
            let mut row: Vec<String> = self.kind.frequency(i).iter().map(|k| format!("{k}")).collect();
            row.push(format!("{}", v.re));
            row.push(format!("{}", v.im));
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// `f^(k) = sum_x f(x) e^{i k.x}` on the given frequency set.
///
/// A torus dual requires a torus table of the same period; a quadrature grid
/// requires a `Z^d` table.
pub fn fourier(f: &FieldTable, kind: DualGridKind) -> Result<DualGrid> {
    let d = f.dim();
    if kind.dim() != d {
        return Err(Error::GeometryMismatch(format!("table dimension {d}, grid dimension {}", kind.dim())));
    }
    let xs: Vec<i64> = match (f.geometry(), kind) {
        (Geometry::Torus { period, .. }, DualGridKind::TorusDual { period: p, .. }) if p == period => {
            (0..period as i64).map(|i| torus_rep(i, period)).collect()
        }
        (Geometry::Lattice { .. }, DualGridKind::Quadrature { .. }) => {
            let l = f.radius() as i64;
            (-l..=l).collect()
        }
        (g, k) => {
            return Err(Error::GeometryMismatch(format!("cannot transform {g:?} onto {k:?}")));
        }
    };
    let ks = kind.axis_frequencies();
    let mat: Vec<Complex64> = ks
        .iter()
        .flat_map(|&k| xs.iter().map(move |&x| Complex64::from_polar(1.0, k * x as f64)))
        .collect();
    let data: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let shape = vec![xs.len(); d];
    let mats: Vec<(usize, &[Complex64])> = (0..d).map(|_| (ks.len(), mat.as_slice())).collect();
    Ok(DualGrid { kind, values: contract(&data, &shape, &mats) })
}

/// Transform of the tilted step distribution `D^(m)`:
/// `i sinh(m) sin(k_1)/d + cosh(m) cos(k_1)/d + sum_{j>=2} cos(k_j)/d`.
pub fn tilted_step_transform(k: &[f64], m: f64) -> Complex64 {
    let d = k.len() as f64;
    let rest: f64 = k[1..].iter().map(|kj| kj.cos()).sum();
    Complex64::new((m.cosh() * k[0].cos() + rest) / d, m.sinh() * k[0].sin() / d)
}

/// `D^(k) = d^{-1} sum_j cos k_j`.
pub fn step_transform(k: &[f64]) -> f64 {
    k.iter().map(|kj| kj.cos()).sum::<f64>() / k.len() as f64
}

pub(crate) trait Scalar: Copy + AddAssign + Mul<Output = Self> + PartialEq {
    const ZERO: Self;
}

impl Scalar for f64 {
    const ZERO: Self = 0.0;
}

impl Scalar for Complex64 {
    const ZERO: Self = Complex64::new(0.0, 0.0);
}

/// Tensor-product contraction. `data` has shape `shape` with the first axis
/// fastest; `mats[j] = (m_j, M_j)` with `M_j` an `m_j x shape[j]` row-major
/// matrix. Returns `(M_1 x ... x M_d) data` with shape `(m_1, ..., m_d)`.
pub(crate) fn contract<T: Scalar>(data: &[T], shape: &[usize], mats: &[(usize, &[T])]) -> Vec<T> {
    let mut cur = data.to_vec();
    let mut cur_shape = shape.to_vec();
    for (j, &(m, mat)) in mats.iter().enumerate() {
        let n = cur_shape[j];
        debug_assert_eq!(mat.len(), m * n);
        let inner: usize = cur_shape[..j].iter().product();
        let outer: usize = cur_shape[j + 1..].iter().product();
        let mut next = vec![T::ZERO; outer * m * inner];
        for o in 0..outer {
            for a in 0..m {
                let row = &mat[a * n..(a + 1) * n];
                let dst = &mut next[(o * m + a) * inner..(o * m + a + 1) * inner];
                for (b, &w) in row.iter().enumerate() {
                    if w == T::ZERO {
                        continue;
                    }
                    let src = &cur[(o * n + b) * inner..(o * n + b + 1) * inner];
                    for (d, &s) in dst.iter_mut().zip(src) {
                        *d += w * s;
                    }
                }
            }
        }
        cur = next;
        cur_shape[j] = m;
    }
    cur
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn step_transform_matches_direct_sum() {
        let g = Geometry::lattice(3).unwrap();
        let d = FieldTable::step_distribution(g).unwrap();
        let kind = DualGridKind::quadrature(3, 6).unwrap();
        let hat = fourier(&d, kind).unwrap();
        for (i, v) in hat.values().iter().enumerate() {
            let k = kind.frequency(i);
            assert!((v.re - step_transform(&k)).abs() < 1e-14);
            assert!(v.im.abs() < 1e-14);
        }
        assert!((step_transform(&[0.0, 0.0]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn delta_transform_is_one() {
        let t = FieldTable::delta(Geometry::torus(2, 5).unwrap());
        let hat = fourier(&t, DualGridKind::torus(2, 5).unwrap()).unwrap();
        assert!(hat.values().iter().all(|v| (v - Complex64::new(1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn tilted_step_transform_matches_tilted_table() {
        let g = Geometry::lattice(2).unwrap();
        let m = 0.7;
        let dm = FieldTable::step_distribution(g).unwrap().tilt(m).unwrap();
        let kind = DualGridKind::quadrature(2, 8).unwrap();
        let hat = fourier(&dm, kind).unwrap();
        for (i, v) in hat.values().iter().enumerate() {
            let k = kind.frequency(i);
            assert!((v - tilted_step_transform(&k, m)).norm() < 1e-14);
        }
    }

    #[test]
    fn torus_dual_contains_zero_and_has_r_pow_d_points() {
        for r in 3..9 {
            let kind = DualGridKind::torus(2, r).unwrap();
            assert_eq!(kind.len(), r * r);
            assert!(kind.axis_frequencies().iter().any(|k| *k == 0.0));
        }
        assert!(DualGridKind::quadrature(2, 7).is_err());
    }

    #[test]
    fn torus_inverse_recovers_table() {
        let g = Geometry::torus(2, 5).unwrap();
        let f = FieldTable::from_fn(g, 0, |x| (x.coords()[0] * 7 - x.coords()[1] * 3) as f64 + 0.5);
        let hat = fourier(&f, DualGridKind::torus(2, 5).unwrap()).unwrap();
        let back = hat.inverse_table(0).unwrap();
        assert!(back.max_abs_diff(&f).unwrap() < 1e-12);
        let x = LatticePoint::new(vec![2, -1]);
        assert!((hat.inverse_at(&x).unwrap().re - f.get(&x)).abs() < 1e-12);
    }

    #[test]
    fn quadrature_inverse_recovers_box_table() {
        // A table supported on radius 2 is recovered exactly once the grid has
        // more than 4 points per axis.
        let g = Geometry::lattice(2).unwrap();
        let f = FieldTable::from_fn(g, 2, |x| 1.0 / (1.0 + x.norm_1() as f64));
        let hat = fourier(&f, DualGridKind::quadrature(2, 10).unwrap()).unwrap();
        let back = hat.inverse_table(2).unwrap();
        assert!(back.max_abs_diff(&f).unwrap() < 1e-13);
    }

    #[test]
    fn dual_grid_csv_header() {
        let hat = DualGrid::from_fn(DualGridKind::torus(1, 3).unwrap(), |_| Complex64::new(1.0, 0.0));
        let mut buf = Vec::new();
        hat.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("k1,re,im\n"));
    }

    proptest! {
        #[test]
        fn parseval_on_torus(a in proptest::collection::vec(-1.0f64..1.0, 16), b in proptest::collection::vec(-1.0f64..1.0, 16)) {
            let g = Geometry::torus(2, 4).unwrap();
            let mk = |v: &[f64]| FieldTable::from_fn(g, 0, |x| {
                let i = (x.coords()[0].rem_euclid(4) + 4 * x.coords()[1].rem_euclid(4)) as usize;
                v[i]
            });
            let (f, h) = (mk(&a), mk(&b));
            let kind = DualGridKind::torus(2, 4).unwrap();
            let (fh, hh) = (fourier(&f, kind).unwrap(), fourier(&h, kind).unwrap());
            let lhs: f64 = f.iter().map(|(x, v)| v * h.get(&x)).sum();
            let rhs: Complex64 = fh.values().iter().zip(hh.values()).map(|(p, q)| p * q.conj()).sum::<Complex64>() / 16.0;
            prop_assert!((lhs - rhs.re).abs() < 1e-12);
            prop_assert!(rhs.im.abs() < 1e-12);
        }
    }
}
