//! Cauchy transform, Beurling transform and logarithmic potential on a grid.
//!
//! Sources must vanish within 10% of the half-width from the box edge; the
//! convolutions are linear (zero-padded), the Beurling transform is a periodic
//! unitary multiplier.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::fft::{convolve, wavenumber, Fft2};
use crate::grid::{ComplexField, Field, FieldValue, Grid, RealField};
use crate::scalar::Real;

/// Fraction of the half-width that must stay free of support.
pub const MARGIN_FRACTION: f64 = 0.1;

/// Values below this fraction of the peak modulus count as outside the support.
pub const SUPPORT_FLOOR: f64 = 1e-4;

/// Kernel offsets up to this Chebyshev distance are replaced by cell averages.
const NEAR_CELLS: isize = 2;
const CELL_QUAD_ORDER: usize = 12;

fn check_margin<V: FieldValue<T>, T: Real>(f: &Field<V, T>, operator: &'static str) -> Result<()> {
    let grid = f.grid();
    let margin = grid.half_width() * T::lit(MARGIN_FRACTION);
    let floor = f.max_modulus() * T::lit(SUPPORT_FLOOR);
    let mut closest: Option<T> = None;
    for (k, v) in f.values().iter().enumerate() {
        if f.is_valid(k) && v.modulus() > floor {
            let d = grid.distance_to_edge(grid.node_at(k));
            if d < margin {
                closest = Some(closest.map_or(d, |c: T| c.min(d)));
            }
        }
    }
    match closest {
        Some(d) => Err(Error::Margin {
            operator,
            distance: d.to_f64_lossy(),
            margin: margin.to_f64_lossy(),
        }),
        None => Ok(()),
    }
}

fn source_values<V: FieldValue<T>, T: Real>(f: &Field<V, T>) -> Vec<V> {
    f.values()
        .iter()
        .enumerate()
        .map(|(k, &v)| if f.is_valid(k) { v } else { V::zero() })
        .collect()
}

/// Average of `g` over the cell of side `h` centred at `h·(p + 𝕚q)`.
fn cell_average(p: isize, q: isize, h: f64, g: impl Fn(f64, f64) -> f64) -> f64 {
    let quad = GaussLegendre::new(NonZeroUsize::new(CELL_QUAD_ORDER).unwrap());
    let (x0, y0) = (p as f64 * h, q as f64 * h);
    let a = h / 2.0;
    quad.integrate(x0 - a, x0 + a, |x| quad.integrate(y0 - a, y0 + a, |y| g(x, y))) / (h * h)
}

/// `H(w) = (1/π)∫ S(ζ)/(w−ζ) dm(ζ)`, so that `∂_w̄ H = S`.
pub fn cauchy_transform<T: Real>(s: &ComplexField<T>) -> Result<ComplexField<T>> {
    s.check_finite("Cauchy transform source")?;
    check_margin(s, "cauchy_transform")?;
    let grid = *s.grid();
    let n = grid.n();
    let h = grid.spacing().to_f64_lossy();
    let near = |p: isize, q: isize| p.abs() <= NEAR_CELLS && q.abs() <= NEAR_CELLS;
    let weight = h * h / PI;
    let kernel = |p: isize, q: isize| -> Complex<T> {
        if p == 0 && q == 0 {
            return Complex::new(T::zero(), T::zero());
        }
        let (re, im) = if near(p, q) {
            // 1/z = z̄/|z|²
            (
                cell_average(p, q, h, |x, y| x / (x * x + y * y)),
                cell_average(p, q, h, |x, y| -y / (x * x + y * y)),
            )
        } else {
            let z = Complex::new(p as f64 * h, q as f64 * h);
            let r = z.inv();
            (r.re, r.im)
        };
        Complex::new(T::lit(re * weight), T::lit(im * weight))
    };
    let out = convolve(&source_values(s), n, kernel);
    ComplexField::from_values(grid, out)
}

/// Beurling transform as the Fourier multiplier `ξ̄/ξ` (zero mode sent to 0).
pub fn beurling_transform<T: Real>(h: &ComplexField<T>) -> Result<ComplexField<T>> {
    h.check_finite("Beurling transform input")?;
    check_margin(h, "beurling_transform")?;
    let grid = *h.grid();
    let mut data = source_values(h);
    apply_beurling_multiplier(&grid, &mut data);
    ComplexField::from_values(grid, data)
}

/// In-place periodic Beurling multiplier without margin checks; used by the
/// fixed-point iteration once the input has been validated.
pub(crate) fn apply_beurling_multiplier<T: Real>(grid: &Grid<T>, data: &mut [Complex<T>]) {
    let n = grid.n();
    let period = grid.half_width() * T::lit(2.0);
    let fft = Fft2::new(n);
    fft.forward(data);
    for q in 0..n {
        let k2 = wavenumber::<T>(q, n, period);
        for p in 0..n {
            let k1 = wavenumber::<T>(p, n, period);
            let idx = q * n + p;
            if p == 0 && q == 0 {
                data[idx] = Complex::new(T::zero(), T::zero());
            } else {
                let xi = Complex::new(k1, k2);
                data[idx] = data[idx] * (xi.conj() / xi);
            }
        }
    }
    fft.inverse(data);
}

/// Exact mean of `ln|z|` over the square `[−a, a]²`.
pub fn log_center_cell_average(a: f64) -> f64 {
    0.5 * ((2.0 * a * a).ln() - 3.0 + PI / 2.0)
}

/// `(1/2π)∫ ln|z−w| G(w) dm(w)` with no additive normalization.
pub fn log_potential_raw<T: Real>(g: &RealField<T>) -> Result<RealField<T>> {
    g.check_finite("potential density")?;
    check_margin(g, "log_potential")?;
    let grid = *g.grid();
    let n = grid.n();
    let h = grid.spacing().to_f64_lossy();
    let weight = h * h / (2.0 * PI);
    let kernel = |p: isize, q: isize| -> Complex<T> {
        let v = if p == 0 && q == 0 {
            log_center_cell_average(h / 2.0)
        } else if p.abs() <= NEAR_CELLS && q.abs() <= NEAR_CELLS {
            cell_average(p, q, h, |x, y| 0.5 * (x * x + y * y).ln())
        } else {
            0.5 * ((p * p + q * q) as f64 * h * h).ln()
        };
        Complex::new(T::lit(v * weight), T::zero())
    };
    let src: Vec<Complex<T>> = source_values(g).into_iter().map(|v| Complex::new(v, T::zero())).collect();
    let out = convolve(&src, n, kernel);
    RealField::from_values(grid, out.into_iter().map(|c| c.re).collect())
}

/// Logarithmic potential normalized to vanish at the node nearest the grid centre.
pub fn log_potential<T: Real>(g: &RealField<T>) -> Result<RealField<T>> {
    let raw = log_potential_raw(g)?;
    let grid = *raw.grid();
    let (i, j) = grid.nearest(grid.center());
    let c = raw.at(i, j);
    Ok(raw.map(|v| v - c))
}

/// Claimed regularity for [`verify_regularity`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegularityClass {
    /// Hölder continuity of the field with the given exponent.
    Holder(f64),
    /// Field generated by a source in `L_p`, `p > 2`; expected exponent `1 − 2/p`.
    SourceLp(f64),
    /// Continuously differentiable with Hölder gradient of the given exponent.
    C1(f64),
}

impl RegularityClass {
    pub fn expected_exponent(&self) -> f64 {
        match *self {
            RegularityClass::Holder(a) | RegularityClass::C1(a) => a,
            RegularityClass::SourceLp(p) => 1.0 - 2.0 / p,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegularityReport {
    pub claimed: RegularityClass,
    /// Estimated exponent; `None` when the field is flat.
    pub exponent: Option<f64>,
    pub flat: bool,
    /// `(step length, max increment)` per dyadic scale.
    pub increments: Vec<(f64, f64)>,
    pub pass: bool,
}

const REGULARITY_TOLERANCE: f64 = 0.1;

fn max_increments<V: FieldValue<T>, T: Real>(f: &Field<V, T>, steps: &[usize]) -> Vec<(f64, f64)> {
    let grid = f.grid();
    let n = grid.n();
    let h = grid.spacing().to_f64_lossy();
    steps
        .iter()
        .map(|&s| {
            let mut best: f64 = 0.0;
            for j in 0..n {
                for i in 0..n {
                    let k = grid.index(i, j);
                    if !f.is_valid(k) {
                        continue;
                    }
                    let v = f.values()[k];
                    if i + s < n && f.is_valid(k + s) {
                        best = best.max((f.values()[k + s] - v).modulus().to_f64_lossy());
                    }
                    if j + s < n && f.is_valid(k + s * n) {
                        best = best.max((f.values()[k + s * n] - v).modulus().to_f64_lossy());
                    }
                }
            }
            (s as f64 * h, best)
        })
        .collect()
}

fn fit_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (sx, sy) = points.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (mx, my) = (sx / n, sy / n);
    let num: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let den: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    num / den
}

/// Empirical Hölder exponent from dyadic increments (steps 1, 2, …, 16 cells).
/// For [`RegularityClass::C1`] the exponent is estimated on the gradient.
pub fn verify_regularity<V: FieldValue<T>, T: Real>(f: &Field<V, T>, claimed: RegularityClass) -> Result<RegularityReport> {
    let steps: Vec<usize> = [1, 2, 4, 8, 16].into_iter().filter(|&s| s < f.grid().n() / 4).collect();
    let increments = match claimed {
        RegularityClass::C1(_) => {
            let (fx, fy) = crate::calculus::partials(f)?;
            let (ix, iy) = (max_increments(&fx, &steps), max_increments(&fy, &steps));
            ix.iter().zip(&iy).map(|(a, b)| (a.0, a.1.max(b.1))).collect()
        }
        _ => max_increments(f, &steps),
    };
    let scale = f.max_modulus().to_f64_lossy().max(1.0);
    let flat = increments.iter().all(|&(_, d)| d <= 1e-12 * scale);
    let exponent = if flat {
        None
    } else {
        let pts: Vec<(f64, f64)> = increments.iter().filter(|p| p.1 > 0.0).map(|&(s, d)| (s.ln(), d.ln())).collect();
        Some(if pts.len() >= 2 { fit_slope(&pts) } else { 0.0 })
    };
    let pass = match exponent {
        None => true,
        Some(e) => e >= claimed.expected_exponent() - REGULARITY_TOLERANCE,
    };
    Ok(RegularityReport { claimed, exponent, flat, increments, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{laplacian, wirtinger_derivatives};

    type C = Complex<f64>;

    fn disk_indicator(g: Grid<f64>, r: f64) -> ComplexField<f64> {
        ComplexField::from_fn(g, |z| if z.norm() <= r { C::new(1.0, 0.0) } else { C::new(0.0, 0.0) })
    }

    fn value_at(f: &ComplexField<f64>, z: C) -> C {
        let (i, j) = f.grid().nearest(z);
        f.at(i, j)
    }

    #[test]
    fn center_cell_average_matches_quadrature() {
        let a = 0.37;
        // polar form over the triangle 0 ≤ θ ≤ π/4, radial integral in closed form
        let quad = GaussLegendre::new(NonZeroUsize::new(40).unwrap());
        let q = quad.integrate(0.0, PI / 4.0, |t| {
            let r = a / t.cos();
            r * r / 2.0 * r.ln() - r * r / 4.0
        }) * 2.0 / (a * a);
        assert!((q - log_center_cell_average(a)).abs() < 1e-10);
    }

    #[test]
    fn zero_source_gives_zero() {
        let g = Grid::centered(2.0, 32).unwrap();
        let z = ComplexField::zeros(g);
        assert_eq!(cauchy_transform(&z).unwrap().max_modulus(), 0.0);
        assert_eq!(beurling_transform(&z).unwrap().max_modulus(), 0.0);
        assert_eq!(log_potential(&RealField::zeros(g)).unwrap().max_modulus(), 0.0);
    }

    #[test]
    fn cauchy_transform_of_disk() {
        let g = Grid::centered(2.0, 256).unwrap();
        let hh = cauchy_transform(&disk_indicator(g, 1.0)).unwrap();
        assert!(value_at(&hh, C::new(0.0, 0.0)).norm() < 1e-10);
        assert!((value_at(&hh, C::new(0.5, 0.0)) - 0.5).norm() < 2e-2);
        assert!((value_at(&hh, C::new(1.5, 0.0)) - 1.0 / 1.5).norm() < 2e-2);
        let hh = cauchy_transform(&disk_indicator(g, 0.5)).unwrap();
        assert!((value_at(&hh, C::new(1.0, 0.0)) - 0.25).norm() < 1e-2);
    }

    #[test]
    fn log_potential_of_disk() {
        let g = Grid::centered(2.5, 256).unwrap();
        let ind = disk_indicator(g, 1.0).re();
        let pot = log_potential(&ind).unwrap();
        let at = |x: f64| {
            let (i, j) = g.nearest(C::new(x, 0.0));
            pot.at(i, j)
        };
        assert_eq!(at(0.0), 0.0);
        assert!((at(1.0) - 0.25).abs() < 1e-2);
        assert!((at(2.0) - (0.5 * 2f64.ln() + 0.25)).abs() < 1e-2);
        let raw = log_potential_raw(&ind).unwrap();
        let (i, j) = g.nearest(C::new(0.0, 0.0));
        assert!((raw.at(i, j) + 0.25).abs() < 1e-2);
    }

    #[test]
    fn margin_violation_is_rejected() {
        let g = Grid::centered(1.0, 32).unwrap();
        let s = ComplexField::from_fn(g, |_| C::new(1.0, 0.0));
        assert!(matches!(cauchy_transform(&s), Err(Error::Margin { operator: "cauchy_transform", .. })));
        assert!(matches!(beurling_transform(&s), Err(Error::Margin { .. })));
        assert!(matches!(log_potential(&s.re()), Err(Error::Margin { .. })));
    }

    fn gaussian_bump(g: Grid<f64>) -> ComplexField<f64> {
        ComplexField::from_fn(g, |z| C::new((-4.0 * z.norm_sqr()).exp(), 0.5 * z.re * (-4.0 * z.norm_sqr()).exp()))
    }

    fn interior_error(a: &ComplexField<f64>, b: &ComplexField<f64>) -> f64 {
        let g = a.grid();
        let mut e: f64 = 0.0;
        for (k, z) in g.nodes().enumerate() {
            if g.distance_to_edge(z) > 0.2 * g.half_width() {
                e = e.max((a.values()[k] - b.values()[k]).norm());
            }
        }
        e
    }

    #[test]
    fn cauchy_inverts_dbar_and_refines() {
        let errs: Vec<f64> = [64, 128]
            .iter()
            .map(|&n| {
                let g = Grid::centered(2.5, n).unwrap();
                let s = gaussian_bump(g);
                let (_, hzb) = wirtinger_derivatives(&cauchy_transform(&s).unwrap()).unwrap();
                interior_error(&hzb, &s)
            })
            .collect();
        assert!(errs[1] < 0.55 * errs[0], "{errs:?}");
        assert!(errs[1] < 1e-2, "{errs:?}");
    }

    #[test]
    fn log_potential_inverts_laplacian() {
        let errs: Vec<f64> = [64, 128]
            .iter()
            .map(|&n| {
                let g = Grid::centered(2.5, n).unwrap();
                let s = gaussian_bump(g).re();
                let lap = laplacian(&log_potential(&s).unwrap()).unwrap();
                interior_error(&lap.to_complex(), &s.to_complex())
            })
            .collect();
        assert!(errs[1] < 0.55 * errs[0], "{errs:?}");
    }

    #[test]
    fn beurling_maps_dbar_to_dz() {
        let g = Grid::centered(4.0, 512).unwrap();
        // F = z̄ e^{−|z|²}
        let hbar = ComplexField::from_fn(g, |z: C| {
            let e = (-z.norm_sqr()).exp();
            e * (1.0 - z.conj() * z)
        });
        let dz = ComplexField::from_fn(g, |z: C| {
            let e = (-z.norm_sqr()).exp();
            -e * z.conj() * z.conj()
        });
        let b = beurling_transform(&hbar).unwrap();
        let err = b.values().iter().zip(dz.values()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err <= 1e-3, "err {err}");
        assert!((b.l2_norm() - hbar.l2_norm()).abs() <= 1e-6 * hbar.l2_norm());
    }

    #[test]
    fn regularity_reports() {
        let g = Grid::centered(2.0, 128).unwrap();
        let hh = cauchy_transform(&disk_indicator(g, 1.0)).unwrap();
        let rep = verify_regularity(&hh, RegularityClass::Holder(1.0)).unwrap();
        assert!(rep.pass && rep.exponent.unwrap() >= 0.9, "{rep:?}");
        let pot = log_potential(&disk_indicator(g, 1.0).re()).unwrap();
        assert!(verify_regularity(&pot, RegularityClass::C1(0.5)).unwrap().pass);
        let rep = verify_regularity(&ComplexField::<f64>::zeros(g), RegularityClass::SourceLp(4.0)).unwrap();
        assert!(rep.flat && rep.pass && rep.exponent.is_none());
    }

    #[test]
    fn works_in_single_precision() {
        let g = Grid::<f32>::centered(2.0, 64).unwrap();
        // zero mean, so the dropped zero mode does not affect the norm
        let s = ComplexField::from_fn(g, |z| z * (-4.0 * z.norm_sqr()).exp());
        let b = beurling_transform(&s).unwrap();
        assert!((b.l2_norm() - s.l2_norm()).abs() <= 1e-4 * s.l2_norm());
        assert!(cauchy_transform(&s).unwrap().check_finite("h").is_ok());
    }
}
