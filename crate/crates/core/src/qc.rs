//! Construction of the μ-conformal homeomorphism `f = z + C(h)`, `h = μ + μ·B(h)`,
//! truncation ladders for degenerate coefficients, and numerical inversion.

use std::sync::OnceLock;

use num_complex::Complex;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{ComplexField, Grid, RealField};
use crate::scalar::Real;
use crate::dilatation::clip_to_cap;
use crate::singular::{apply_beurling_multiplier, beurling_transform, cauchy_transform};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QcOptions {
    /// L² change between successive iterates that ends the iteration.
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for QcOptions {
    fn default() -> Self {
        QcOptions { tol: 1e-6, max_iterations: 5000 }
    }
}

/// A computed μ-conformal map on a grid, normalized by `f(z) = z + O(1/z)`.
#[derive(Debug)]
pub struct QCMap<T: Real> {
    pub mu: ComplexField<T>,
    pub f: ComplexField<T>,
    pub f_z: ComplexField<T>,
    pub f_zbar: ComplexField<T>,
    pub jacobian: RealField<T>,
    pub iterations: usize,
    /// Last L² change of the fixed-point iteration.
    pub last_change: f64,
    /// `‖f_z̄ − μ f_z‖₂ / ‖1 + |f_z|‖₂`.
    pub beltrami_residual: f64,
    inverse: OnceLock<InverseLookup<T>>,
}

impl<T: Real> Clone for QCMap<T> {
    fn clone(&self) -> Self {
        QCMap {
            mu: self.mu.clone(),
            f: self.f.clone(),
            f_z: self.f_z.clone(),
            f_zbar: self.f_zbar.clone(),
            jacobian: self.jacobian.clone(),
            iterations: self.iterations,
            last_change: self.last_change,
            beltrami_residual: self.beltrami_residual,
            inverse: OnceLock::new(),
        }
    }
}

fn zero_extended<T: Real>(mu: &ComplexField<T>) -> ComplexField<T> {
    mu.fill_masked(Complex::new(T::zero(), T::zero())).without_mask()
}

/// Solve `f_z̄ = μ f_z` for a uniformly elliptic, compactly supported μ
/// (masked nodes count as μ = 0).
pub fn solve_mu_conformal<T: Real>(mu: &ComplexField<T>, tol: T) -> Result<QCMap<T>> {
    solve_mu_conformal_with(mu, &QcOptions { tol: tol.to_f64_lossy(), ..QcOptions::default() })
}

pub fn solve_mu_conformal_with<T: Real>(mu: &ComplexField<T>, opts: &QcOptions) -> Result<QCMap<T>> {
    mu.check_finite("Beltrami coefficient")?;
    let mu = zero_extended(mu);
    let k_max = mu.max_modulus().to_f64_lossy();
    if k_max >= 1.0 {
        return Err(Error::NonContraction { k_max });
    }
    // validates the margin once; the loop below uses the unchecked multiplier
    beurling_transform(&mu)?;
    let grid = *mu.grid();
    let m = mu.values();
    let area = grid.cell_area();
    let mut h: Vec<Complex<T>> = m.to_vec();
    let mut work = h.clone();
    let mut iterations = 0;
    let mut change = f64::INFINITY;
    while iterations < opts.max_iterations {
        work.copy_from_slice(&h);
        apply_beurling_multiplier(&grid, &mut work);
        let mut diff = T::zero();
        for k in 0..h.len() {
            let next = m[k] + m[k] * work[k];
            diff = diff + (next - h[k]).norm_sqr();
            h[k] = next;
        }
        iterations += 1;
        change = (diff * area).sqrt().to_f64_lossy();
        if !change.is_finite() {
            return Err(Error::NonFinite("fixed-point iterate".into()));
        }
        if change < opts.tol {
            break;
        }
    }
    if change >= opts.tol {
        return Err(Error::IterationCap { iterations, last_change: change });
    }
    let h_field = ComplexField::from_values(grid, h)?;
    let ch = cauchy_transform(&h_field)?;
    let f = ch.map_with_node(|z, c| z + c);
    let mut bh = h_field.values().to_vec();
    apply_beurling_multiplier(&grid, &mut bh);
    let one = Complex::new(T::one(), T::zero());
    let f_z = ComplexField::from_values(grid, bh.into_iter().map(|b| one + b).collect())?;
    let jacobian = f_z.zip_with(&h_field, |a, b| a.norm_sqr() - b.norm_sqr())?;
    let beltrami_residual = beltrami_residual(&mu, &f_z, &h_field);
    Ok(QCMap {
        mu,
        f,
        f_z,
        f_zbar: h_field,
        jacobian,
        iterations,
        last_change: change,
        beltrami_residual,
        inverse: OnceLock::new(),
    })
}

fn beltrami_residual<T: Real>(mu: &ComplexField<T>, f_z: &ComplexField<T>, f_zbar: &ComplexField<T>) -> f64 {
    let mut num = T::zero();
    let mut den = T::zero();
    for k in 0..mu.values().len() {
        let fz = f_z.values()[k];
        num = num + (f_zbar.values()[k] - mu.values()[k] * fz).norm_sqr();
        den = den + (T::one() + fz.norm()).powi(2);
    }
    (num / den).sqrt().to_f64_lossy()
}

impl<T: Real> QCMap<T> {
    pub fn grid(&self) -> &Grid<T> {
        self.f.grid()
    }

    pub fn min_jacobian(&self) -> T {
        self.jacobian.values().iter().copied().fold(T::infinity(), T::min)
    }

    /// Bilinear interpolation of `f`; `None` outside the grid box.
    pub fn eval(&self, z: Complex<T>) -> Option<Complex<T>> {
        self.f.interpolate(z)
    }

    /// Preimage of `w`: triangulated lookup for a seed, then Newton on the
    /// bilinear interpolant of `f`. Tolerance `1e-9·L`, at most 50 steps.
    pub fn invert(&self, w: Complex<T>) -> Result<Complex<T>> {
        let lookup = self.inverse.get_or_init(|| InverseLookup::build(&self.f));
        let seed = lookup.seed(&self.f, w).ok_or(Error::OutsideImage {
            re: w.re.to_f64_lossy(),
            im: w.im.to_f64_lossy(),
        })?;
        newton_refine(&self.f, w, seed)
    }

    /// Non-degeneracy and non-overlap of grid-cell images on a random sample
    /// of `fraction` of all cells.
    pub fn homeomorphism_probe(&self, fraction: f64, seed: u64) -> HomeomorphismReport {
        let grid = *self.grid();
        let n = grid.n();
        let cells = (n - 1) * (n - 1);
        let count = ((cells as f64 * fraction).ceil() as usize).clamp(1, cells);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut chosen: Vec<(usize, usize)> = (0..count)
            .map(|_| (rng.random_range(0..n - 1), rng.random_range(0..n - 1)))
            .collect();
        chosen.sort_unstable();
        chosen.dedup();
        let quads: Vec<[Complex<T>; 4]> = chosen.iter().map(|&(i, j)| cell_image(&self.f, i, j)).collect();
        let degenerate = quads.iter().filter(|q| !quad_is_proper(q)).count();
        let mut overlaps = 0;
        for a in 0..quads.len() {
            for b in a + 1..quads.len() {
                let (ia, ja) = chosen[a];
                let (ib, jb) = chosen[b];
                if ia.abs_diff(ib) <= 1 && ja.abs_diff(jb) <= 1 {
                    continue;
                }
                if quads_overlap(&quads[a], &quads[b]) {
                    overlaps += 1;
                }
            }
        }
        HomeomorphismReport { cells_checked: quads.len(), degenerate, overlaps }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HomeomorphismReport {
    pub cells_checked: usize,
    pub degenerate: usize,
    pub overlaps: usize,
}

impl HomeomorphismReport {
    pub fn passed(&self) -> bool {
        self.degenerate == 0 && self.overlaps == 0
    }
}

fn cell_image<T: Real>(f: &ComplexField<T>, i: usize, j: usize) -> [Complex<T>; 4] {
    [f.at(i, j), f.at(i + 1, j), f.at(i + 1, j + 1), f.at(i, j + 1)]
}

fn cross<T: Real>(a: Complex<T>, b: Complex<T>) -> T {
    a.re * b.im - a.im * b.re
}

/// Positively oriented and convex (all corner turns left).
fn quad_is_proper<T: Real>(q: &[Complex<T>; 4]) -> bool {
    (0..4).all(|k| cross(q[(k + 1) % 4] - q[k], q[(k + 2) % 4] - q[(k + 1) % 4]) > T::zero())
}

fn point_in_convex<T: Real>(q: &[Complex<T>; 4], p: Complex<T>) -> bool {
    (0..4).all(|k| cross(q[(k + 1) % 4] - q[k], p - q[k]) > T::zero())
}

fn quads_overlap<T: Real>(a: &[Complex<T>; 4], b: &[Complex<T>; 4]) -> bool {
    for k in 0..4 {
        for l in 0..4 {
            let (p1, p2) = (a[k], a[(k + 1) % 4]);
            let (q1, q2) = (b[l], b[(l + 1) % 4]);
            let d1 = cross(q2 - q1, p1 - q1);
            let d2 = cross(q2 - q1, p2 - q1);
            let d3 = cross(p2 - p1, q1 - p1);
            let d4 = cross(p2 - p1, q2 - p1);
            if d1 * d2 < T::zero() && d3 * d4 < T::zero() {
                return true;
            }
        }
    }
    point_in_convex(a, b[0]) || point_in_convex(b, a[0])
}

/// Bucket index of the image triangulation (two triangles per grid cell).
#[derive(Debug)]
struct InverseLookup<T> {
    lo: Complex<T>,
    cell: T,
    buckets_per_side: usize,
    buckets: Vec<Vec<u32>>,
}

impl<T: Real> InverseLookup<T> {
    fn build(f: &ComplexField<T>) -> Self {
        let n = f.grid().n();
        let mut lo = Complex::new(T::infinity(), T::infinity());
        let mut hi = Complex::new(T::neg_infinity(), T::neg_infinity());
        for w in f.values() {
            lo.re = lo.re.min(w.re);
            lo.im = lo.im.min(w.im);
            hi.re = hi.re.max(w.re);
            hi.im = hi.im.max(w.im);
        }
        let b = n;
        let cell = (hi.re - lo.re).max(hi.im - lo.im) / T::from_usize(b).unwrap() * T::lit(1.000001);
        let mut buckets = vec![Vec::new(); b * b];
        let clampi = |x: T| -> usize { x.to_f64_lossy().floor().clamp(0.0, (b - 1) as f64) as usize };
        for j in 0..n - 1 {
            for i in 0..n - 1 {
                let q = cell_image(f, i, j);
                let (mut qlo, mut qhi) = (q[0], q[0]);
                for p in &q[1..] {
                    qlo.re = qlo.re.min(p.re);
                    qlo.im = qlo.im.min(p.im);
                    qhi.re = qhi.re.max(p.re);
                    qhi.im = qhi.im.max(p.im);
                }
                let (i0, i1) = (clampi((qlo.re - lo.re) / cell), clampi((qhi.re - lo.re) / cell));
                let (j0, j1) = (clampi((qlo.im - lo.im) / cell), clampi((qhi.im - lo.im) / cell));
                let id = (j * (n - 1) + i) as u32;
                for bj in j0..=j1 {
                    for bi in i0..=i1 {
                        buckets[bj * b + bi].push(id);
                    }
                }
            }
        }
        InverseLookup { lo, cell, buckets_per_side: b, buckets }
    }

    /// Piecewise-linear preimage from the triangle containing `w`.
    fn seed(&self, f: &ComplexField<T>, w: Complex<T>) -> Option<Complex<T>> {
        let b = self.buckets_per_side;
        let bi = ((w.re - self.lo.re) / self.cell).to_f64_lossy().floor();
        let bj = ((w.im - self.lo.im) / self.cell).to_f64_lossy().floor();
        if !(bi >= 0.0 && bj >= 0.0 && bi < b as f64 && bj < b as f64) {
            return None;
        }
        let grid = f.grid();
        let n = grid.n();
        let eps = T::lit(-1e-10);
        for &id in &self.buckets[bj as usize * b + bi as usize] {
            let (i, j) = (id as usize % (n - 1), id as usize / (n - 1));
            let q = cell_image(f, i, j);
            let z = [grid.node(i, j), grid.node(i + 1, j), grid.node(i + 1, j + 1), grid.node(i, j + 1)];
            for (a, bb, c) in [(0, 1, 2), (0, 2, 3)] {
                let det = cross(q[bb] - q[a], q[c] - q[a]);
                if det == T::zero() {
                    continue;
                }
                let l1 = cross(w - q[a], q[c] - q[a]) / det;
                let l2 = cross(q[bb] - q[a], w - q[a]) / det;
                let l0 = T::one() - l1 - l2;
                if l0 >= eps && l1 >= eps && l2 >= eps {
                    return Some(z[a] * l0 + z[bb] * l1 + z[c] * l2);
                }
            }
        }
        None
    }
}

const NEWTON_MAX_STEPS: usize = 50;
const NEWTON_REL_TOL: f64 = 1e-9;

/// Bilinear value of `f` and its exact partials `(f, f_x, f_y)` at `z`.
fn bilinear_with_partials<T: Real>(f: &ComplexField<T>, z: Complex<T>) -> Option<(Complex<T>, Complex<T>, Complex<T>)> {
    let grid = f.grid();
    let n = grid.n();
    let (x, y) = grid.fractional_index(z);
    let last = T::from_usize(n - 1).unwrap();
    if !(x >= T::zero() && y >= T::zero() && x <= last && y <= last) {
        return None;
    }
    let i = (x.floor().to_usize().unwrap()).min(n - 2);
    let j = (y.floor().to_usize().unwrap()).min(n - 2);
    let tx = x - T::from_usize(i).unwrap();
    let ty = y - T::from_usize(j).unwrap();
    let (a, b, c, d) = (f.at(i, j), f.at(i + 1, j), f.at(i, j + 1), f.at(i + 1, j + 1));
    let one = T::one();
    let val = a * (one - tx) * (one - ty) + b * tx * (one - ty) + c * (one - tx) * ty + d * tx * ty;
    let h = grid.spacing();
    let fx = ((b - a) * (one - ty) + (d - c) * ty) / h;
    let fy = ((c - a) * (one - tx) + (d - b) * tx) / h;
    Some((val, fx, fy))
}

fn newton_refine<T: Real>(f: &ComplexField<T>, w: Complex<T>, seed: Complex<T>) -> Result<Complex<T>> {
    let tol = T::lit(NEWTON_REL_TOL) * f.grid().half_width();
    let half = T::lit(0.5);
    let i = Complex::new(T::zero(), T::one());
    let mut z = seed;
    let (val, mut fx, mut fy) = bilinear_with_partials(f, z).ok_or(Error::OutsideImage {
        re: w.re.to_f64_lossy(),
        im: w.im.to_f64_lossy(),
    })?;
    let mut r = w - val;
    for _ in 0..NEWTON_MAX_STEPS {
        if r.norm() <= tol {
            return Ok(z);
        }
        let fz = (fx - i * fy) * half;
        let fzb = (fx + i * fy) * half;
        let jac = fz.norm_sqr() - fzb.norm_sqr();
        if jac <= T::zero() {
            break;
        }
        let mut step = (fz.conj() * r - fzb * r.conj()) / jac;
        // damped: halve until the residual decreases
        let mut accepted = false;
        for _ in 0..30 {
            if let Some((v2, fx2, fy2)) = bilinear_with_partials(f, z + step) {
                let r2 = w - v2;
                if r2.norm() < r.norm() {
                    z = z + step;
                    fx = fx2;
                    fy = fy2;
                    r = r2;
                    accepted = true;
                    break;
                }
            }
            step = step * half;
        }
        if !accepted {
            break;
        }
    }
    if r.norm() <= tol {
        Ok(z)
    } else {
        Err(Error::NewtonFailure { residual: r.norm().to_f64_lossy() })
    }
}

/// Clipped solves for an increasing list of dilatation caps.
#[derive(Debug, Clone)]
pub struct TruncationLadder<T: Real> {
    pub levels: Vec<f64>,
    pub maps: Vec<QCMap<T>>,
    /// Sup distance on the probe compact between consecutive maps; entry `k`
    /// compares levels `k` and `k+1`.
    pub convergence_trace: Vec<f64>,
    /// Index of the level at which the trace first fell below tolerance.
    pub converged_at: Option<usize>,
    /// Largest distance of a probe image point from the probe image centroid, per level.
    pub probe_extent: Vec<f64>,
}

/// A ladder whose probe image shrinks below this fraction of its first-level
/// extent is collapsing to a constant map; it is never declared converged.
pub const COLLAPSE_RATIO: f64 = 1e-2;

impl<T: Real> TruncationLadder<T> {
    pub fn converged(&self) -> bool {
        self.converged_at.is_some()
    }

    /// The probe image has collapsed (degenerate limit).
    pub fn collapsed(&self) -> bool {
        match (self.probe_extent.first(), self.probe_extent.last()) {
            (Some(&a), Some(&b)) => b < COLLAPSE_RATIO * a,
            _ => false,
        }
    }

    /// Map of the converged level, or the last level otherwise.
    pub fn final_map(&self) -> &QCMap<T> {
        &self.maps[self.converged_at.unwrap_or(self.maps.len() - 1)]
    }

    pub fn into_final_map(mut self) -> QCMap<T> {
        let k = self.converged_at.unwrap_or(self.maps.len() - 1);
        self.maps.swap_remove(k)
    }
}

pub const DEFAULT_CAPS: [f64; 6] = [2.0, 4.0, 8.0, 16.0, 32.0, 64.0];

#[derive(Debug, Clone, PartialEq)]
pub struct LadderOptions {
    pub caps: Vec<f64>,
    /// Sup-distance threshold declaring convergence.
    pub tol: f64,
    pub solver: QcOptions,
    /// Keep solving the remaining caps after convergence (full trace).
    pub run_all_levels: bool,
}

impl Default for LadderOptions {
    fn default() -> Self {
        LadderOptions { caps: DEFAULT_CAPS.to_vec(), tol: 1e-3, solver: QcOptions::default(), run_all_levels: false }
    }
}

/// Solve with μ radially clipped to `K ≤ cap` for each cap; `probe` marks the
/// compact set on which consecutive maps are compared.
pub fn solve_degenerate<T: Real>(mu: &ComplexField<T>, probe: &[bool], opts: &LadderOptions) -> Result<TruncationLadder<T>> {
    if opts.caps.is_empty() || opts.caps.windows(2).any(|w| w[1] <= w[0]) || opts.caps[0] <= 1.0 {
        return Err(Error::InvalidParameter("ladder caps must be increasing and > 1".into()));
    }
    if probe.len() != mu.grid().len() {
        return Err(Error::GridMismatch);
    }
    let base = zero_extended(mu);
    for v in base.values() {
        if !(v.norm() < T::one()) {
            return Err(Error::NonContraction { k_max: v.norm().to_f64_lossy() });
        }
    }
    let mut ladder =
        TruncationLadder { levels: Vec::new(), maps: Vec::new(), convergence_trace: Vec::new(), converged_at: None, probe_extent: Vec::new() };
    let inside: Vec<usize> = probe.iter().enumerate().filter(|(_, &p)| p).map(|(k, _)| k).collect();
    for &cap in &opts.caps {
        let clipped = base.map(|m| clip_to_cap(m, T::lit(cap)));
        let map = solve_mu_conformal_with(&clipped, &opts.solver)?;
        ladder.probe_extent.push(extent(&map.f, &inside));
        if let Some(prev) = ladder.maps.last() {
            let d = probe
                .iter()
                .enumerate()
                .filter(|(_, &p)| p)
                .map(|(k, _)| (map.f.values()[k] - prev.f.values()[k]).norm().to_f64_lossy())
                .fold(0.0, f64::max);
            ladder.convergence_trace.push(d);
            let collapsed = ladder.probe_extent.last().is_some_and(|&e| e < COLLAPSE_RATIO * ladder.probe_extent[0]);
            if d < opts.tol && !collapsed && ladder.converged_at.is_none() {
                ladder.converged_at = Some(ladder.maps.len());
            }
        }
        ladder.levels.push(cap);
        ladder.maps.push(map);
        if ladder.converged_at.is_some() && !opts.run_all_levels {
            break;
        }
    }
    Ok(ladder)
}

fn extent<T: Real>(f: &ComplexField<T>, nodes: &[usize]) -> f64 {
    if nodes.is_empty() {
        return 0.0;
    }
    let pts: Vec<Complex<f64>> = nodes.iter().map(|&k| {
        let w = f.values()[k];
        Complex::new(w.re.to_f64_lossy(), w.im.to_f64_lossy())
    }).collect();
    let c = pts.iter().sum::<Complex<f64>>() / pts.len() as f64;
    pts.iter().map(|w| (w - c).norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    type C = Complex<f64>;

    fn radial_stretch(g: Grid<f64>) -> ComplexField<f64> {
        ComplexField::from_fn(g, |z: C| if z.norm() < 1.0 && z.norm() > 0.0 { z / z.conj() / 3.0 } else { C::new(0.0, 0.0) })
    }

    #[test]
    fn radial_stretch_oracle_satisfies_beltrami() {
        // f = z|z| inside: f_z = 1.5|z|, f_z̄ = 0.5|z| z/z̄
        let z = C::new(0.3, -0.4);
        let fz = 1.5 * z.norm();
        let fzb = 0.5 * z.norm() * z / z.conj();
        assert!((fzb - z / z.conj() / 3.0 * fz).norm() < 1e-15);
    }

    #[test]
    fn zero_coefficient_gives_identity() {
        let g = Grid::centered(2.0, 32).unwrap();
        let map = solve_mu_conformal(&ComplexField::zeros(g), 1e-8).unwrap();
        for (w, z) in map.f.values().iter().zip(g.nodes()) {
            assert!((w - z).norm() < 1e-14);
        }
        assert!(map.jacobian.values().iter().all(|j: &f64| (*j - 1.0).abs() < 1e-14));
        let w = C::new(0.3, 0.4);
        assert!((map.invert(w).unwrap() - w).norm() < 1e-9);
    }

    #[test]
    fn radial_stretch_matches_oracle() {
        let g = Grid::centered(2.0, 256).unwrap();
        let map = solve_mu_conformal(&radial_stretch(g), 1e-8).unwrap();
        assert!(map.beltrami_residual <= 1e-6, "{}", map.beltrami_residual);
        assert!((map.eval(C::new(0.5, 0.0)).unwrap() - 0.25).norm() < 2e-2);
        assert!(map.min_jacobian() > 0.0);
        let z = map.invert(C::new(0.25, 0.0)).unwrap();
        assert!((z - 0.5).norm() < 2e-2);
    }

    #[test]
    fn constant_disk_coefficient_residual_and_probes() {
        let g = Grid::centered(2.0, 128).unwrap();
        let mu = ComplexField::from_fn(g, |z: C| if z.norm() < 1.0 { C::new(0.5, 0.0) } else { C::new(0.0, 0.0) });
        let map = solve_mu_conformal(&mu, 1e-8).unwrap();
        assert!(map.beltrami_residual <= 1e-8);
        assert!(map.min_jacobian() > 0.0);
        let rep = map.homeomorphism_probe(0.01, 7);
        assert!(rep.passed(), "{rep:?}");
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let w = C::new(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5));
            let z = map.invert(w).unwrap();
            assert!((map.eval(z).unwrap() - w).norm() < 1e-6);
        }
        assert!(matches!(map.invert(C::new(10.0, 0.0)), Err(Error::OutsideImage { .. })));
    }

    #[test]
    fn conformal_outside_support() {
        let g = Grid::centered(2.0, 128).unwrap();
        let map = solve_mu_conformal(&radial_stretch(g), 1e-8).unwrap();
        let (_, dbar) = crate::calculus::wirtinger_derivatives(&map.f).unwrap();
        for (k, z) in g.nodes().enumerate() {
            if z.norm() > 1.3 && g.distance_to_edge(z) > 0.3 {
                assert!(dbar.values()[k].norm() < 2e-2, "{} at {z}", dbar.values()[k].norm());
            }
        }
    }

    #[test]
    fn rejects_non_elliptic_and_caps_iterations() {
        let g = Grid::centered(2.0, 32).unwrap();
        let mu = ComplexField::from_fn(g, |z: C| if z.norm() < 1.0 { C::new(1.0, 0.0) } else { C::new(0.0, 0.0) });
        assert!(matches!(solve_mu_conformal(&mu, 1e-6), Err(Error::NonContraction { .. })));
        let mu = ComplexField::from_fn(g, |z: C| if z.norm() < 1.0 { C::new(0.9, 0.0) } else { C::new(0.0, 0.0) });
        let opts = QcOptions { tol: 1e-12, max_iterations: 3 };
        assert!(matches!(solve_mu_conformal_with(&mu, &opts), Err(Error::IterationCap { iterations: 3, .. })));
    }

    #[test]
    fn ladder_on_zero_converges_immediately() {
        let g = Grid::centered(2.0, 32).unwrap();
        let probe = vec![true; g.len()];
        let ladder = solve_degenerate(&ComplexField::zeros(g), &probe, &LadderOptions::default()).unwrap();
        assert_eq!(ladder.converged_at, Some(1));
        assert_eq!(ladder.convergence_trace, vec![0.0]);
        assert!(!ladder.collapsed());
        assert_eq!(ladder.probe_extent.len(), 2);
    }

    #[test]
    fn single_precision_solve() {
        let g = Grid::<f32>::centered(2.0, 64).unwrap();
        let mu = ComplexField::from_fn(g, |z| if z.norm() < 1.0 { Complex::new(0.3f32, 0.1) } else { Complex::new(0.0, 0.0) });
        let map = solve_mu_conformal(&mu, 1e-4).unwrap();
        assert!(map.min_jacobian() > 0.0);
        assert!(map.beltrami_residual < 1e-4);
    }
}
