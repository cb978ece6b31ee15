//! Dirichlet problem for harmonic functions by a double-layer potential with
//! Nyström discretization, and harmonic conjugates by path integration.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::{BoundaryData, DomainSpec};
use crate::error::{Error, Result};
use crate::grid::RealField;
use crate::{Grid64, RealField64, C64};

/// Nodes closer than this many boundary spacings to the curve are flagged.
pub const NEAR_BOUNDARY_SPACINGS: f64 = 2.0;

/// Double-layer density on a closed curve; evaluates `u` and its holomorphic
/// completion anywhere inside.
#[derive(Debug, Clone)]
pub struct DoubleLayer {
    points: Vec<C64>,
    tangents: Vec<C64>,
    density: Vec<f64>,
    coarse_density: Vec<f64>,
}

/// Boundary data are refined by this factor (trigonometric interpolation)
/// before interior evaluation, which keeps the trapezoid rule accurate closer
/// to the curve.
pub const EVALUATION_UPSAMPLING: usize = 4;

/// Trigonometric interpolation of periodic samples onto `fine` equispaced points.
fn upsample(v: &[C64], fine: usize) -> Vec<C64> {
    let m = v.len();
    let mut planner = rustfft::FftPlanner::<f64>::new();
    let mut spec = v.to_vec();
    planner.plan_fft_forward(m).process(&mut spec);
    let mut padded = vec![C64::new(0.0, 0.0); fine];
    let half = m / 2;
    for k in 0..m {
        let s = spec[k] / m as f64;
        if m.is_multiple_of(2) && k == half {
            // split the Nyquist mode symmetrically
            padded[half] += s * 0.5;
            padded[fine - half] += s * 0.5;
        } else if k < half || (m % 2 == 1 && k == half) {
            padded[k] = s;
        } else {
            padded[fine - (m - k)] = s;
        }
    }
    planner.plan_fft_inverse(fine).process(&mut padded);
    padded
}

impl DoubleLayer {
    /// Solve `ρ_i/2 + Σ_j w_ij ρ_j = φ_i`.
    pub fn solve(domain: &DomainSpec, phi: &BoundaryData) -> Result<Self> {
        let pts = domain.samples().to_vec();
        let m = pts.len();
        if phi.values().len() != m {
            return Err(Error::InvalidDomain("boundary data does not match the domain samples".into()));
        }
        let (d1, d2) = domain.parameter_derivatives();
        let inv_m = 1.0 / m as f64;
        let mut a = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                let w = if i == j {
                    (d2[j] * d1[j].conj()).im / (2.0 * d1[j].norm_sqr()) * inv_m
                } else {
                    (d1[j] / (pts[j] - pts[i])).im * inv_m
                };
                a[(i, j)] = w;
            }
            a[(i, i)] += 0.5;
        }
        let rhs = DVector::from_column_slice(phi.values());
        let rho = a
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::InvalidMatrix("singular double-layer system".into()))?;
        if rho.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("double-layer density".into()));
        }
        let density: Vec<f64> = rho.iter().copied().collect();
        let fine = m * EVALUATION_UPSAMPLING;
        let points = upsample(&pts, fine);
        let dens = upsample(&density.iter().map(|&r| C64::new(r, 0.0)).collect::<Vec<_>>(), fine);
        let tangents = DomainSpec::from_samples(points.clone())
            .map(|d| d.parameter_derivatives().0)
            .unwrap_or_else(|_| upsample(&d1, fine));
        Ok(DoubleLayer { points, tangents, density: dens.iter().map(|c| c.re).collect(), coarse_density: density })
    }

    /// Density at the original boundary samples.
    pub fn sample_density(&self) -> &[f64] {
        &self.coarse_density
    }

    fn nearest_sample(&self, x: C64) -> usize {
        let mut best = (0, f64::INFINITY);
        for (k, p) in self.points.iter().enumerate() {
            let d = (p - x).norm_sqr();
            if d < best.1 {
                best = (k, d);
            }
        }
        best.0
    }

    /// Cauchy integral `F(x) = (1/2π𝕚)∮ ρ dζ/(ζ−x)` for interior `x`, whose real
    /// part is the harmonic extension. The nearest density value is subtracted
    /// to tame the near-boundary singularity.
    pub fn holomorphic(&self, x: C64) -> C64 {
        let m = self.points.len();
        let r0 = self.density[self.nearest_sample(x)];
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..m {
            let dr = self.density[j] - r0;
            if dr != 0.0 {
                acc += self.tangents[j] / (self.points[j] - x) * dr;
            }
        }
        acc / (C64::new(0.0, 1.0) * m as f64) + r0
    }

    pub fn value(&self, x: C64) -> f64 {
        self.holomorphic(x).re
    }

    /// `(u_x, u_y)` from `F'(x) = (1/2π𝕚)∮ ρ dζ/(ζ−x)²`.
    pub fn gradient(&self, x: C64) -> (f64, f64) {
        let m = self.points.len();
        let r0 = self.density[self.nearest_sample(x)];
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..m {
            let dr = self.density[j] - r0;
            if dr != 0.0 {
                let d = self.points[j] - x;
                acc += self.tangents[j] / (d * d) * dr;
            }
        }
        let fp = acc / (C64::new(0.0, 1.0) * m as f64);
        (fp.re, -fp.im)
    }
}

/// Harmonic extension sampled on a grid. `u` is masked to interior nodes that
/// are not flagged as near-boundary.
#[derive(Debug, Clone)]
pub struct HarmonicSolution {
    pub u: RealField64,
    /// Interior nodes within two boundary spacings of the curve.
    pub flagged: Vec<bool>,
    pub layer: DoubleLayer,
}

pub fn solve_dirichlet_harmonic(domain: &DomainSpec, phi: &BoundaryData, grid: &Grid64) -> Result<HarmonicSolution> {
    let layer = DoubleLayer::solve(domain, phi)?;
    let near = NEAR_BOUNDARY_SPACINGS * domain.mean_spacing();
    let mut values = vec![0.0; grid.len()];
    let mut valid = vec![false; grid.len()];
    let mut flagged = vec![false; grid.len()];
    for (k, z) in grid.nodes().enumerate() {
        if !domain.contains(z) {
            continue;
        }
        values[k] = layer.value(z);
        if domain.distance_to_boundary(z) < near {
            flagged[k] = true;
        } else {
            valid[k] = true;
        }
    }
    let u = RealField::from_values(*grid, values)?.with_mask(valid)?;
    u.check_finite("harmonic extension")?;
    Ok(HarmonicSolution { u, flagged, layer })
}

/// Conjugate field with its closed-loop diagnostic.
#[derive(Debug, Clone)]
pub struct Conjugate {
    pub v: RealField64,
    /// Largest normalized closed-loop integral of the conjugate differential.
    pub loop_residual: f64,
}

pub const DEFAULT_LOOP_TOLERANCE: f64 = 1e-2;
const LOOP_COUNT: usize = 10;

/// Node-wise `(u_x, u_y)` using centred differences where both neighbours are
/// valid and one-sided differences otherwise.
fn masked_gradient(u: &RealField64) -> (Vec<f64>, Vec<f64>) {
    let g = u.grid();
    let n = g.n();
    let h = g.spacing();
    let vals = u.values();
    let ok = |i: isize, j: isize| i >= 0 && j >= 0 && (i as usize) < n && (j as usize) < n && u.is_valid(g.index(i as usize, j as usize));
    let at = |i: isize, j: isize| vals[g.index(i as usize, j as usize)];
    let mut gx = vec![0.0; g.len()];
    let mut gy = vec![0.0; g.len()];
    let d = |c: (isize, isize), step: (isize, isize)| -> f64 {
        let (i, j) = c;
        let (p, m) = ((i + step.0, j + step.1), (i - step.0, j - step.1));
        match (ok(p.0, p.1), ok(m.0, m.1)) {
            (true, true) => (at(p.0, p.1) - at(m.0, m.1)) / (2.0 * h),
            (true, false) => {
                let pp = (i + 2 * step.0, j + 2 * step.1);
                if ok(pp.0, pp.1) {
                    (-3.0 * at(i, j) + 4.0 * at(p.0, p.1) - at(pp.0, pp.1)) / (2.0 * h)
                } else {
                    (at(p.0, p.1) - at(i, j)) / h
                }
            }
            (false, true) => {
                let mm = (i - 2 * step.0, j - 2 * step.1);
                if ok(mm.0, mm.1) {
                    (3.0 * at(i, j) - 4.0 * at(m.0, m.1) + at(mm.0, mm.1)) / (2.0 * h)
                } else {
                    (at(i, j) - at(m.0, m.1)) / h
                }
            }
            (false, false) => 0.0,
        }
    };
    for j in 0..n as isize {
        for i in 0..n as isize {
            if ok(i, j) {
                let k = g.index(i as usize, j as usize);
                gx[k] = d((i, j), (1, 0));
                gy[k] = d((i, j), (0, 1));
            }
        }
    }
    (gx, gy)
}

/// Increment of `v` along the grid edge from node `a` to its neighbour `b`
/// (trapezoid rule on `dv = −u_y dx + u_x dy`).
fn edge_increment(a: usize, b: usize, n: usize, h: f64, gx: &[f64], gy: &[f64]) -> f64 {
    if b == a + 1 {
        -h * 0.5 * (gy[a] + gy[b])
    } else if a == b + 1 {
        h * 0.5 * (gy[a] + gy[b])
    } else if b == a + n {
        h * 0.5 * (gx[a] + gx[b])
    } else {
        -h * 0.5 * (gx[a] + gx[b])
    }
}

/// Harmonic conjugate of `u` over its valid nodes, integrated along a
/// breadth-first spanning tree from the node nearest `anchor` and shifted so
/// that the interpolated `v(anchor) = 0`.
pub fn harmonic_conjugate(u: &RealField64, domain: &DomainSpec, anchor: C64) -> Result<Conjugate> {
    harmonic_conjugate_with(u, domain, anchor, DEFAULT_LOOP_TOLERANCE, 0)
}

pub fn harmonic_conjugate_with(u: &RealField64, domain: &DomainSpec, anchor: C64, loop_tolerance: f64, seed: u64) -> Result<Conjugate> {
    let (gx, gy) = masked_gradient(u);
    integrate_conjugate(u, gx, gy, domain, anchor, loop_tolerance, seed)
}

/// As [`harmonic_conjugate_with`], with `∇u` supplied pointwise instead of
/// differenced from the grid values (e.g. from a boundary-integral representation).
pub fn conjugate_from_gradient(
    u: &RealField64,
    gradient: impl Fn(C64) -> (f64, f64),
    domain: &DomainSpec,
    anchor: C64,
    loop_tolerance: f64,
    seed: u64,
) -> Result<Conjugate> {
    let g = u.grid();
    let mut gx = vec![0.0; g.len()];
    let mut gy = vec![0.0; g.len()];
    for k in 0..g.len() {
        if u.is_valid(k) {
            (gx[k], gy[k]) = gradient(g.node_at(k));
        }
    }
    integrate_conjugate(u, gx, gy, domain, anchor, loop_tolerance, seed)
}

fn integrate_conjugate(
    u: &RealField64,
    gx: Vec<f64>,
    gy: Vec<f64>,
    domain: &DomainSpec,
    anchor: C64,
    loop_tolerance: f64,
    seed: u64,
) -> Result<Conjugate> {
    if !domain.contains(anchor) {
        return Err(Error::InvalidParameter(format!("anchor {anchor} is not inside the domain")));
    }
    let g = *u.grid();
    let n = g.n();
    let h = g.spacing();
    let start = (0..g.len())
        .filter(|&k| u.is_valid(k))
        .min_by(|&a, &b| (g.node_at(a) - anchor).norm().total_cmp(&(g.node_at(b) - anchor).norm()))
        .ok_or_else(|| Error::InvalidDomain("no valid nodes for conjugate integration".into()))?;

    let mut v = vec![0.0; g.len()];
    let mut seen = vec![false; g.len()];
    seen[start] = true;
    let mut queue = VecDeque::from([start]);
    while let Some(a) = queue.pop_front() {
        let (i, j) = g.coords(a);
        let mut nbrs = Vec::with_capacity(4);
        if i + 1 < n {
            nbrs.push(a + 1);
        }
        if i > 0 {
            nbrs.push(a - 1);
        }
        if j + 1 < n {
            nbrs.push(a + n);
        }
        if j > 0 {
            nbrs.push(a - n);
        }
        for b in nbrs {
            if !seen[b] && u.is_valid(b) {
                seen[b] = true;
                v[b] = v[a] + edge_increment(a, b, n, h, &gx, &gy);
                queue.push_back(b);
            }
        }
    }
    let mut field = RealField::from_values(g, v)?.with_mask(seen)?;
    let shift = field.interpolate(anchor).unwrap_or(0.0);
    field.values_mut().iter_mut().for_each(|x| *x -= shift);

    let loop_residual = loop_residual(u, &gx, &gy, seed);
    if loop_residual > loop_tolerance {
        return Err(Error::LoopResidual { residual: loop_residual, tolerance: loop_tolerance });
    }
    Ok(Conjugate { v: field, loop_residual })
}

/// Normalized closed-loop integrals of the conjugate differential over random
/// axis-aligned rectangles of valid nodes.
fn loop_residual(u: &RealField64, gx: &[f64], gy: &[f64], seed: u64) -> f64 {
    let g = u.grid();
    let n = g.n();
    let h = g.spacing();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut found = 0;
    for _ in 0..LOOP_COUNT * 200 {
        if found == LOOP_COUNT {
            break;
        }
        let (i0, j0) = (rng.random_range(0..n - 2), rng.random_range(0..n - 2));
        let (w, hgt) = (rng.random_range(2..=(n / 8).max(2)), rng.random_range(2..=(n / 8).max(2)));
        let (i1, j1) = ((i0 + w).min(n - 1), (j0 + hgt).min(n - 1));
        let mut path = Vec::new();
        path.extend((i0..i1).map(|i| g.index(i, j0)));
        path.extend((j0..j1).map(|j| g.index(i1, j)));
        path.extend((i0 + 1..=i1).rev().map(|i| g.index(i, j1)));
        path.extend((j0 + 1..=j1).rev().map(|j| g.index(i0, j)));
        if !path.iter().all(|&k| u.is_valid(k)) {
            continue;
        }
        found += 1;
        let mut sum = 0.0;
        let mut scale: f64 = 0.0;
        for s in 0..path.len() {
            let (a, b) = (path[s], path[(s + 1) % path.len()]);
            sum += edge_increment(a, b, n, h, gx, gy);
            scale = scale.max(gx[a].hypot(gy[a]));
        }
        let perimeter = path.len() as f64 * h;
        if scale > 0.0 {
            worst = worst.max(sum.abs() / (scale * perimeter));
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn unit_disk() -> DomainSpec {
        DomainSpec::disk(C64::new(0.0, 0.0), 1.0, 256).unwrap()
    }

    fn grid() -> Grid64 {
        Grid64::centered(1.25, 128).unwrap()
    }

    fn max_err(u: &RealField64, f: impl Fn(C64) -> f64) -> f64 {
        let g = u.grid();
        (0..g.len()).filter(|&k| u.is_valid(k)).map(|k| (u.values()[k] - f(g.node_at(k))).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn disk_cosine_extends_to_x() {
        let d = unit_disk();
        let phi = BoundaryData::cos_angle(&d, C64::new(0.0, 0.0)).unwrap();
        let sol = solve_dirichlet_harmonic(&d, &phi, &grid()).unwrap();
        assert!((sol.layer.value(C64::new(0.5, 0.0)) - 0.5).abs() < 1e-10);
        let e = max_err(&sol.u, |z| z.re);
        assert!(e < 1e-6, "{e}");
        assert!(sol.flagged.iter().any(|&f| f));
        let (ux, uy) = sol.layer.gradient(C64::new(0.2, 0.3));
        assert!((ux - 1.0).abs() < 1e-9 && uy.abs() < 1e-9);
    }

    #[test]
    fn constant_data_gives_constant() {
        let d = unit_disk();
        let phi = BoundaryData::constant(&d, 2.5).unwrap();
        let sol = solve_dirichlet_harmonic(&d, &phi, &grid()).unwrap();
        assert!(max_err(&sol.u, |_| 2.5) < 1e-10);
    }

    #[test]
    fn ellipse_quadratic() {
        let d = DomainSpec::ellipse(C64::new(0.0, 0.0), 1.5, 1.0, 512).unwrap();
        let phi = BoundaryData::from_fn(&d, |z| (z * z).re).unwrap();
        let g = Grid64::centered(1.75, 128).unwrap();
        let sol = solve_dirichlet_harmonic(&d, &phi, &g).unwrap();
        let e = max_err(&sol.u, |z| (z * z).re);
        assert!(e < 5e-6, "{e}");
    }

    #[test]
    fn maximum_principle_and_mean_value() {
        let d = unit_disk();
        let phi = BoundaryData::from_angle_table(&d, C64::new(0.0, 0.0), &[(0.0, -1.0), (1.0, 2.0), (3.0, 0.5)]).unwrap();
        let sol = solve_dirichlet_harmonic(&d, &phi, &grid()).unwrap();
        for k in 0..sol.u.values().len() {
            if sol.u.is_valid(k) {
                let v = sol.u.values()[k];
                assert!(v >= phi.min() - 1e-6 && v <= phi.max() + 1e-6);
            }
        }
        let c = C64::new(0.1, -0.2);
        let r = 0.4;
        let avg = (0..256).map(|k| sol.layer.value(c + C64::from_polar(r, 2.0 * PI * k as f64 / 256.0))).sum::<f64>() / 256.0;
        assert!((avg - sol.layer.value(c)).abs() < 1e-8);
    }

    #[test]
    fn conjugates() {
        let d = unit_disk();
        let g = grid();
        let mask = d.interior_mask(&g, 0.05);
        let u = RealField::from_fn(g, |z| z.re).with_mask(mask.clone()).unwrap();
        let c = harmonic_conjugate(&u, &d, C64::new(0.0, 0.0)).unwrap();
        assert!(max_err(&c.v, |z| z.im) < 1e-10);
        assert!(c.loop_residual < 1e-10);

        let u = RealField::from_fn(g, |_| 3.0).with_mask(mask.clone()).unwrap();
        let c = harmonic_conjugate(&u, &d, C64::new(0.0, 0.0)).unwrap();
        assert!(max_err(&c.v, |_| 0.0) == 0.0);

        let h = g.spacing();
        let u = RealField::from_fn(g, |z| (z * z).re).with_mask(mask).unwrap();
        let c = harmonic_conjugate(&u, &d, C64::new(0.0, 0.0)).unwrap();
        assert!(max_err(&c.v, |z| 2.0 * z.re * z.im) <= 10.0 * h * h);
    }

    #[test]
    fn non_harmonic_field_fails_loop_check() {
        let d = unit_disk();
        let g = grid();
        let u = RealField::from_fn(g, |z| z.norm_sqr()).with_mask(d.interior_mask(&g, 0.05)).unwrap();
        assert!(matches!(harmonic_conjugate(&u, &d, C64::new(0.0, 0.0)), Err(Error::LoopResidual { .. })));
        assert!(harmonic_conjugate(&u, &d, C64::new(3.0, 0.0)).is_err());
    }
}
