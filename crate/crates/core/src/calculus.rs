//! Finite-difference calculus on grid fields: Wirtinger derivatives, gradients
//! and the five-point Laplacian.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::grid::{ComplexField, Field, FieldValue, RealField};
use crate::scalar::Real;

fn ensure_size(n: usize) -> Result<()> {
    if n < 8 {
        return Err(Error::InvalidGrid(format!("grid too small for differentiation (n = {n})")));
    }
    Ok(())
}

/// Partial derivatives along x and y: centered in the interior, second-order
/// one-sided stencils on the box edge.
pub fn partials<V: FieldValue<T>, T: Real>(f: &Field<V, T>) -> Result<(Field<V, T>, Field<V, T>)> {
    let grid = *f.grid();
    let n = grid.n();
    ensure_size(n)?;
    let h = grid.spacing();
    let inv2h = (T::lit(2.0) * h).recip();
    let v = f.values();
    let at = |i: usize, j: usize| v[grid.index(i, j)];
    let three = T::lit(3.0);
    let four = T::lit(4.0);

    let diff = |get: &dyn Fn(usize) -> V, m: usize| -> V {
        if m == 0 {
            (get(1) * four - get(0) * three - get(2)) * inv2h
        } else if m == n - 1 {
            (get(n - 1) * three - get(n - 2) * four + get(n - 3)) * inv2h
        } else {
            (get(m + 1) - get(m - 1)) * inv2h
        }
    };

    let mut dx = vec![V::zero(); grid.len()];
    let mut dy = vec![V::zero(); grid.len()];
    for j in 0..n {
        for i in 0..n {
            let k = grid.index(i, j);
            dx[k] = diff(&|ii| at(ii, j), i);
            dy[k] = diff(&|jj| at(i, jj), j);
        }
    }
    let mut fx = Field::from_values(grid, dx)?;
    let mut fy = Field::from_values(grid, dy)?;
    if let Some(m) = f.mask() {
        fx = fx.with_mask(m.to_vec())?;
        fy = fy.with_mask(m.to_vec())?;
    }
    Ok((fx, fy))
}

/// `(F_z, F_z̄)` with `∂_z = (∂_x − 𝕚∂_y)/2`, `∂_z̄ = (∂_x + 𝕚∂_y)/2`.
pub fn wirtinger_derivatives<T: Real>(f: &ComplexField<T>) -> Result<(ComplexField<T>, ComplexField<T>)> {
    let (fx, fy) = partials(f)?;
    let half = T::lit(0.5);
    let i = Complex::new(T::zero(), T::one());
    let fz = fx.zip_with(&fy, |a, b| (a - i * b) * half)?;
    let fzb = fx.zip_with(&fy, |a, b| (a + i * b) * half)?;
    Ok((fz, fzb))
}

/// Gradient `(u_x, u_y)` of a real field.
pub fn gradient<T: Real>(u: &RealField<T>) -> Result<(RealField<T>, RealField<T>)> {
    partials(u)
}

/// Five-point Laplacian; edge nodes are set to zero and masked out.
pub fn laplacian<V: FieldValue<T>, T: Real>(f: &Field<V, T>) -> Result<Field<V, T>> {
    let grid = *f.grid();
    let n = grid.n();
    ensure_size(n)?;
    let h = grid.spacing();
    let inv = (h * h).recip();
    let four = T::lit(4.0);
    let v = f.values();
    let mut out = vec![V::zero(); grid.len()];
    let mut mask = vec![false; grid.len()];
    for j in 1..n - 1 {
        for i in 1..n - 1 {
            let k = grid.index(i, j);
            out[k] = (v[k + 1] + v[k - 1] + v[k + n] + v[k - n] - v[k] * four) * inv;
            mask[k] = f.is_valid(k);
        }
    }
    Field::from_values(grid, out)?.with_mask(mask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn identity_and_conjugate() {
        let g = Grid::<f64>::centered(1.0, 32).unwrap();
        let f = ComplexField::from_fn(g, |z| z);
        let (fz, fzb) = wirtinger_derivatives(&f).unwrap();
        for k in 0..g.len() {
            assert!((fz.values()[k] - 1.0).norm() < 1e-12);
            assert!(fzb.values()[k].norm() < 1e-12);
        }
        let f = ComplexField::from_fn(g, |z| z.conj());
        let (fz, fzb) = wirtinger_derivatives(&f).unwrap();
        for k in 0..g.len() {
            assert!(fz.values()[k].norm() < 1e-12);
            assert!((fzb.values()[k] - 1.0).norm() < 1e-12);
        }
    }

    #[test]
    fn square_matches_closed_form() {
        let g = Grid::<f64>::centered(1.0, 256).unwrap();
        let h = g.spacing();
        let f = ComplexField::from_fn(g, |z| z * z);
        let (fz, _) = wirtinger_derivatives(&f).unwrap();
        let err = fz
            .values()
            .iter()
            .zip(g.nodes())
            .map(|(d, z)| (d - 2.0 * z).norm())
            .fold(0.0, f64::max);
        assert!(err <= 10.0 * h * h, "err {err}");
    }

    #[test]
    fn annihilates_constants_in_f32() {
        let g = Grid::<f32>::centered(1.0, 16).unwrap();
        let f = ComplexField::from_fn(g, |_| Complex::new(3.0f32, -1.0));
        let (fz, fzb) = wirtinger_derivatives(&f).unwrap();
        assert!(fz.max_modulus() < 1e-5 && fzb.max_modulus() < 1e-5);
    }

    #[test]
    fn laplacian_of_quadratic() {
        let g = Grid::<f64>::centered(1.0, 32).unwrap();
        let f = RealField::from_fn(g, |z| z.norm_sqr());
        let l = laplacian(&f).unwrap();
        for k in 0..g.len() {
            if l.is_valid(k) {
                assert!((l.values()[k] - 4.0).abs() < 1e-9);
            }
        }
    }
}
