//! Dilatation quotients of a Beltrami coefficient.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::grid::{ComplexField, RealField};
use crate::scalar::Real;

/// `K_μ = (1+|μ|)/(1−|μ|)` at a single point.
pub fn dilatation_value<T: Real>(mu: Complex<T>) -> T {
    let m = mu.norm();
    (T::one() + m) / (T::one() - m)
}

/// Tangent dilatation `|1 − (conj(z−z0)/(z−z0))·μ|² / (1−|μ|²)`; equals `K_μ` at `z = z0`.
pub fn tangent_value<T: Real>(mu: Complex<T>, z: Complex<T>, z0: Complex<T>) -> T {
    let d = z - z0;
    let r = d.norm();
    if r == T::zero() {
        return dilatation_value(mu);
    }
    let phase = d.conj() / d;
    (Complex::new(T::one(), T::zero()) - phase * mu).norm_sqr() / (T::one() - mu.norm_sqr())
}

/// Radially rescale μ so that `K_μ ≤ cap`, keeping its argument.
pub fn clip_to_cap<T: Real>(mu: Complex<T>, cap: T) -> Complex<T> {
    let kmax = (cap - T::one()) / (cap + T::one());
    let m = mu.norm();
    if m > kmax {
        mu * (kmax / m)
    } else {
        mu
    }
}

fn check_elliptic<T: Real>(mu: &ComplexField<T>) -> Result<()> {
    for (k, v) in mu.values().iter().enumerate() {
        if !mu.is_valid(k) {
            continue;
        }
        let m = v.norm();
        if !(m < T::one()) {
            let z = mu.grid().node_at(k);
            return Err(Error::Ellipticity {
                x: z.re.to_f64_lossy(),
                y: z.im.to_f64_lossy(),
                modulus: m.to_f64_lossy(),
            });
        }
    }
    Ok(())
}

/// Dilatation quotient per node; masked nodes (outside the domain) report 1.
pub fn dilatation_quotient<T: Real>(mu: &ComplexField<T>) -> Result<RealField<T>> {
    check_elliptic(mu)?;
    let vals = mu
        .values()
        .iter()
        .enumerate()
        .map(|(k, &m)| if mu.is_valid(k) { dilatation_value(m) } else { T::one() })
        .collect();
    RealField::from_values(*mu.grid(), vals)
}

/// Tangent dilatation quotient `K^T_μ(·, z0)` per node; masked nodes report 1.
pub fn tangent_dilatation<T: Real>(mu: &ComplexField<T>, z0: Complex<T>) -> Result<RealField<T>> {
    check_elliptic(mu)?;
    let grid = *mu.grid();
    let vals = mu
        .values()
        .iter()
        .enumerate()
        .map(|(k, &m)| {
            if mu.is_valid(k) {
                tangent_value(m, grid.node_at(k), z0)
            } else {
                T::one()
            }
        })
        .collect();
    RealField::from_values(grid, vals)
}
