//! Uniform Cartesian grids and the complex/real fields sampled on them.
//!
//! Node `(i, j)` sits at `center + (-L + i·h) + 𝕚(-L + j·h)` with `h = 2L/n`;
//! values are stored row-major with `j` (the `y` index) as the outer index.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid<T> {
    center: Complex<T>,
    half_width: T,
    n: usize,
}

impl<T: Real> Grid<T> {
    pub fn new(center: Complex<T>, half_width: T, n: usize) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "nodes per side must be a power of two >= 8, got {n}"
            )));
        }
        if !(half_width > T::zero()) || !half_width.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "half width must be positive and finite, got {half_width}"
            )));
        }
        Ok(Grid {
            center,
            half_width,
            n,
        })
    }

    /// Grid centered at the origin.
    pub fn centered(half_width: T, n: usize) -> Result<Self> {
        Self::new(Complex::zero(), half_width, n)
    }

    pub fn center(&self) -> Complex<T> {
        self.center
    }

    pub fn half_width(&self) -> T {
        self.half_width
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> T {
        T::lit(2.0) * self.half_width / T::from_usize(self.n).unwrap()
    }

    /// Area element of one cell.
    pub fn cell_area(&self) -> T {
        let h = self.spacing();
        h * h
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    #[inline]
    pub fn coords(&self, k: usize) -> (usize, usize) {
        (k % self.n, k / self.n)
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> Complex<T> {
        let h = self.spacing();
        let x = -self.half_width + T::from_usize(i).unwrap() * h;
        let y = -self.half_width + T::from_usize(j).unwrap() * h;
        self.center + Complex::new(x, y)
    }

    pub fn node_at(&self, k: usize) -> Complex<T> {
        let (i, j) = self.coords(k);
        self.node(i, j)
    }

    pub fn nodes(&self) -> impl Iterator<Item = Complex<T>> + '_ {
        (0..self.len()).map(move |k| self.node_at(k))
    }

    /// Continuous index coordinates of a point: `(x, y)` such that the point is
    /// `node(x, y)` if both were integers.
    pub fn fractional_index(&self, z: Complex<T>) -> (T, T) {
        let h = self.spacing();
        let d = z - self.center;
        ((d.re + self.half_width) / h, (d.im + self.half_width) / h)
    }

    /// Nearest node to `z`, clamped to the grid.
    pub fn nearest(&self, z: Complex<T>) -> (usize, usize) {
        let (x, y) = self.fractional_index(z);
        let clamp = |v: T| {
            let r = v.round().max(T::zero()).to_usize().unwrap_or(0);
            r.min(self.n - 1)
        };
        (clamp(x), clamp(y))
    }

    /// Distance from `z` to the edge of the sampled box.
    pub fn distance_to_edge(&self, z: Complex<T>) -> T {
        let d = z - self.center;
        let hi = self.half_width - self.spacing();
        let dx = (d.re + self.half_width).min(hi - d.re);
        let dy = (d.im + self.half_width).min(hi - d.im);
        dx.min(dy)
    }

    /// Same box with `n` doubled or halved etc.
    pub fn with_n(&self, n: usize) -> Result<Self> {
        Self::new(self.center, self.half_width, n)
    }
}

/// Values a [`Field`] can carry.
pub trait FieldValue<T>:
    Copy + Zero + Add<Output = Self> + Sub<Output = Self> + Mul<T, Output = Self> + Send + Sync
{
    fn modulus(self) -> T;
    fn is_finite_value(self) -> bool;
}

impl<T: Real> FieldValue<T> for T {
    fn modulus(self) -> T {
        self.abs()
    }
    fn is_finite_value(self) -> bool {
        self.is_finite()
    }
}

impl<T: Real> FieldValue<T> for Complex<T> {
    fn modulus(self) -> T {
        self.norm()
    }
    fn is_finite_value(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// A scalar field sampled at every node of a grid, with an optional validity mask
/// (`true` = node belongs to the domain of the field).
#[derive(Debug, Clone, PartialEq)]
pub struct Field<V, T> {
    grid: Grid<T>,
    values: Vec<V>,
    mask: Option<Vec<bool>>,
}

pub type ComplexField<T> = Field<Complex<T>, T>;
pub type RealField<T> = Field<T, T>;

impl<V: FieldValue<T>, T: Real> Field<V, T> {
    pub fn zeros(grid: Grid<T>) -> Self {
        Field {
            grid,
            values: vec![V::zero(); grid.len()],
            mask: None,
        }
    }

    pub fn from_values(grid: Grid<T>, values: Vec<V>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Field {
            grid,
            values,
            mask: None,
        })
    }

    pub fn from_fn(grid: Grid<T>, f: impl Fn(Complex<T>) -> V) -> Self {
        let values = grid.nodes().map(f).collect();
        Field {
            grid,
            values,
            mask: None,
        }
    }

    pub fn with_mask(mut self, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != self.grid.len() {
            return Err(Error::InvalidGrid("mask length does not match grid".into()));
        }
        self.mask = Some(mask);
        Ok(self)
    }

    pub fn without_mask(mut self) -> Self {
        self.mask = None;
        self
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn values(&self) -> &[V] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [V] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<V> {
        self.values
    }

    pub fn mask(&self) -> Option<&[bool]> {
        self.mask.as_deref()
    }

    #[inline]
    pub fn is_valid(&self, k: usize) -> bool {
        self.mask.as_ref().is_none_or(|m| m[k])
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> V {
        self.values[self.grid.index(i, j)]
    }

    pub fn map<W: FieldValue<T>>(&self, f: impl Fn(V) -> W) -> Field<W, T> {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
            mask: self.mask.clone(),
        }
    }

    pub fn map_with_node<W: FieldValue<T>>(&self, f: impl Fn(Complex<T>, V) -> W) -> Field<W, T> {
        Field {
            grid: self.grid,
            values: self
                .values
                .iter()
                .enumerate()
                .map(|(k, &v)| f(self.grid.node_at(k), v))
                .collect(),
            mask: self.mask.clone(),
        }
    }

    pub fn zip_with<W: FieldValue<T>, U: FieldValue<T>>(
        &self,
        other: &Field<W, T>,
        f: impl Fn(V, W) -> U,
    ) -> Result<Field<U, T>> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let mask = match (&self.mask, &other.mask) {
            (Some(a), Some(b)) => Some(a.iter().zip(b).map(|(&x, &y)| x && y).collect()),
            (Some(a), None) => Some(a.clone()),
            (None, Some(b)) => Some(b.clone()),
            (None, None) => None,
        };
        Ok(Field {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            mask,
        })
    }

    /// Set masked-out nodes to `fill`.
    pub fn fill_masked(&self, fill: V) -> Self {
        let mut out = self.clone();
        if let Some(mask) = &self.mask {
            for (v, &m) in out.values.iter_mut().zip(mask) {
                if !m {
                    *v = fill;
                }
            }
        }
        out
    }

    /// Maximum modulus over valid nodes.
    pub fn max_modulus(&self) -> T {
        self.values
            .iter()
            .enumerate()
            .filter(|(k, _)| self.is_valid(*k))
            .map(|(_, v)| v.modulus())
            .fold(T::zero(), T::max)
    }

    /// Discrete L² norm `(Σ |v|² h²)^{1/2}` over valid nodes.
    pub fn l2_norm(&self) -> T {
        self.lp_norm(T::lit(2.0))
    }

    /// Discrete L^p norm over valid nodes.
    pub fn lp_norm(&self, p: T) -> T {
        let sum = self
            .values
            .iter()
            .enumerate()
            .filter(|(k, _)| self.is_valid(*k))
            .fold(T::zero(), |acc, (_, v)| acc + v.modulus().powf(p));
        (sum * self.grid.cell_area()).powf(p.recip())
    }

    /// Check that every valid node holds a finite value.
    pub fn check_finite(&self, what: &str) -> Result<()> {
        for (k, v) in self.values.iter().enumerate() {
            if self.is_valid(k) && !v.is_finite_value() {
                let z = self.grid.node_at(k);
                return Err(Error::NonFinite(format!(
                    "{what} at ({}, {})",
                    z.re.to_f64_lossy(),
                    z.im.to_f64_lossy()
                )));
            }
        }
        Ok(())
    }

    /// Bilinear interpolation at an arbitrary point. Corners outside the mask are
    /// dropped and the remaining weights renormalized; `None` when no valid corner
    /// exists or the point is outside the sampled box.
    pub fn interpolate(&self, z: Complex<T>) -> Option<V> {
        let n = self.grid.n;
        let (x, y) = self.grid.fractional_index(z);
        if !(x >= T::zero() && y >= T::zero()) {
            return None;
        }
        let last = T::from_usize(n - 1).unwrap();
        if x > last || y > last {
            return None;
        }
        let i0 = x.floor().to_usize()?.min(n - 2);
        let j0 = y.floor().to_usize()?.min(n - 2);
        let fx = x - T::from_usize(i0).unwrap();
        let fy = y - T::from_usize(j0).unwrap();
        let one = T::one();
        let corners = [
            (i0, j0, (one - fx) * (one - fy)),
            (i0 + 1, j0, fx * (one - fy)),
            (i0, j0 + 1, (one - fx) * fy),
            (i0 + 1, j0 + 1, fx * fy),
        ];
        let mut acc = V::zero();
        let mut wsum = T::zero();
        let mut any = false;
        for (i, j, w) in corners {
            let k = self.grid.index(i, j);
            if self.is_valid(k) {
                acc = acc + self.values[k] * w;
                wsum = wsum + w;
                any = true;
            }
        }
        if !any {
            return None;
        }
        if wsum <= T::zero() {
            // Point sits exactly on a masked corner; fall back to the valid ones equally.
            let mut cnt = T::zero();
            let mut acc = V::zero();
            for (i, j, _) in corners {
                let k = self.grid.index(i, j);
                if self.is_valid(k) {
                    acc = acc + self.values[k];
                    cnt = cnt + one;
                }
            }
            return Some(acc * cnt.recip());
        }
        Some(acc * wsum.recip())
    }
}

impl<T: Real> ComplexField<T> {
    pub fn re(&self) -> RealField<T> {
        self.map(|v| v.re)
    }

    pub fn im(&self) -> RealField<T> {
        self.map(|v| v.im)
    }
}

impl<T: Real> RealField<T> {
    pub fn to_complex(&self) -> ComplexField<T> {
        self.map(|v| Complex::new(v, T::zero()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        assert!(Grid::<f64>::centered(1.0, 4).is_err());
        assert!(Grid::<f64>::centered(1.0, 100).is_err());
        assert!(Grid::<f64>::centered(0.0, 16).is_err());
        assert!(Grid::<f64>::centered(1.0, 16).is_ok());
    }

    #[test]
    fn node_layout() {
        let g = Grid::new(Complex::new(1.0, -2.0), 2.0, 8).unwrap();
        assert_eq!(g.spacing(), 0.5);
        assert_eq!(g.node(0, 0), Complex::new(-1.0, -4.0));
        assert_eq!(g.node(4, 4), Complex::new(1.0, -2.0));
        assert_eq!(g.node(3, 5), Complex::new(0.5, -1.5));
        let k = g.index(3, 5);
        assert_eq!(g.coords(k), (3, 5));
        assert_eq!(g.nearest(Complex::new(0.6, -1.4)), (3, 5));
    }

    #[test]
    fn bilinear_is_exact_on_affine_fields() {
        let g = Grid::<f64>::centered(1.0, 16).unwrap();
        let f = ComplexField::from_fn(g, |z| z * Complex::new(2.0, 1.0) + 3.0);
        let p = Complex::new(0.123, -0.456);
        let v = f.interpolate(p).unwrap();
        assert!((v - (p * Complex::new(2.0, 1.0) + 3.0)).norm() < 1e-12);
        assert!(f.interpolate(Complex::new(5.0, 0.0)).is_none());
    }

    #[test]
    fn norms_respect_mask() {
        let g = Grid::<f64>::centered(1.0, 8).unwrap();
        let mut mask = vec![false; g.len()];
        mask[0] = true;
        let f = RealField::from_fn(g, |_| 2.0).with_mask(mask).unwrap();
        assert!((f.l2_norm() - 2.0 * g.spacing()).abs() < 1e-14);
        assert_eq!(f.max_modulus(), 2.0);
    }
}
