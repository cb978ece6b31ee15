//! Dirichlet problem for `ω_z̄ = μ ω_z + σ` by the factorization `ω = (𝒜 + H)∘f`:
//! `f` is μ-conformal, `H` is the Cauchy transform of the pushed-forward source
//! and `𝒜` is holomorphic in `D* = f(D)` with transferred boundary values.

use crate::calculus::wirtinger_derivatives;
use crate::dilatation::dilatation_quotient;
use crate::domain::{BoundaryData, DomainSpec};
use crate::error::{Error, Result, Stage};
use crate::harmonic::{conjugate_from_gradient, solve_dirichlet_harmonic, Conjugate, HarmonicSolution, DEFAULT_LOOP_TOLERANCE};
use crate::qc::{solve_degenerate, solve_mu_conformal_with, LadderOptions, QCMap, QcOptions};
use crate::singular::cauchy_transform;
use crate::{ComplexField64, Grid64, C64};

/// Minimum distance of `supp σ` from `∂D`, as a fraction of `diam D`.
pub const SOURCE_MARGIN_FRACTION: f64 = 0.05;
/// Exclusion band (in cells) around `∂D` and the jump set of `σ` for residuals.
pub const EXCLUSION_CELLS: f64 = 2.0;
/// Maximum `K_μ` handled by a single solve; larger values go through the ladder.
pub const LADDER_THRESHOLD: f64 = 16.0;
/// Exponents of the reported discrete norms of `S`.
pub const SOURCE_NORM_EXPONENTS: [f64; 3] = [2.5, 3.0, 4.0];

#[derive(Debug, Clone)]
pub struct BeltramiProblem {
    pub domain: DomainSpec,
    /// Beltrami coefficient sampled on the solve grid; values outside `D` are ignored.
    pub mu: ComplexField64,
    /// Source term on the same grid, compactly supported in `D`.
    pub sigma: ComplexField64,
    pub phi: BoundaryData,
    /// Interior point where `Im ω` is fixed to zero.
    pub anchor: C64,
}

impl BeltramiProblem {
    pub fn new(domain: DomainSpec, mu: ComplexField64, sigma: ComplexField64, phi: BoundaryData, anchor: Option<C64>) -> Result<Self> {
        if mu.grid() != sigma.grid() {
            return Err(Error::GridMismatch);
        }
        let anchor = anchor.unwrap_or_else(|| domain.centroid());
        if !domain.contains(anchor) {
            return Err(Error::InvalidParameter(format!("anchor {anchor} lies outside the domain")));
        }
        check_source_support(&domain, &sigma)?;
        Ok(BeltramiProblem { domain, mu, sigma, phi, anchor })
    }

    pub fn grid(&self) -> &Grid64 {
        self.mu.grid()
    }

    /// μ restricted to `D` and extended by zero.
    pub fn zero_extended_mu(&self) -> ComplexField64 {
        let d = &self.domain;
        self.mu.map_with_node(|z, m| if d.contains(z) { m } else { C64::new(0.0, 0.0) }).without_mask()
    }
}

/// Reject sources whose support comes within `0.05·diam D` of `∂D`; values
/// below `SUPPORT_FLOOR` times the peak count as outside the support.
pub fn check_source_support(domain: &DomainSpec, sigma: &ComplexField64) -> Result<()> {
    let margin = SOURCE_MARGIN_FRACTION * domain.diameter();
    let grid = sigma.grid();
    let floor = sigma.max_modulus() * crate::singular::SUPPORT_FLOOR;
    for (k, v) in sigma.values().iter().enumerate() {
        if v.norm() <= floor || !sigma.is_valid(k) {
            continue;
        }
        let z = grid.node_at(k);
        if !domain.contains(z) {
            return Err(Error::InvalidParameter(format!("source support reaches {z}, outside the domain")));
        }
        let d = domain.distance_to_boundary(z);
        if d < margin {
            return Err(Error::InvalidParameter(format!(
                "source support must stay {margin:.4} (compact-support margin) from the boundary; found a node at distance {d:.4}"
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub qc: QcOptions,
    pub ladder: LadderOptions,
    /// Use the truncation ladder when `max K_μ` exceeds this value.
    pub ladder_threshold: f64,
    pub loop_tolerance: f64,
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            qc: QcOptions::default(),
            ladder: LadderOptions::default(),
            ladder_threshold: LADDER_THRESHOLD,
            loop_tolerance: DEFAULT_LOOP_TOLERANCE,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BeltramiSolution {
    /// `ω` on nodes of `D` (masked elsewhere).
    pub omega: ComplexField64,
    pub map: QCMap<f64>,
    /// Consecutive-map distances when the truncation ladder was used.
    pub ladder_trace: Option<Vec<f64>>,
    /// Pushed-forward source on `D*`.
    pub s: ComplexField64,
    /// Cauchy part `H = C[S]`.
    pub h: ComplexField64,
    /// Holomorphic part `𝒜 = u + 𝕚v` on `D*`.
    pub a: ComplexField64,
    pub image_domain: DomainSpec,
    pub phi_star: BoundaryData,
    pub harmonic: HarmonicSolution,
    pub conjugate: Conjugate,
    /// Constant subtracted from `(𝒜 + H)∘f` to enforce the gauge.
    pub gauge_constant: C64,
    /// `(q, ‖S‖_q)` for the reported exponents.
    pub source_norms: Vec<(f64, f64)>,
    pub warnings: Vec<String>,
}

impl BeltramiSolution {
    /// `(𝒜 + H)(w) − c` for `w ∈ D*`, with `Re 𝒜` from the double layer.
    pub fn eval_image(&self, w: C64) -> Option<C64> {
        let h = self.h.interpolate(w)?;
        let v = self.conjugate.v.interpolate(w)?;
        Some(C64::new(self.harmonic.layer.value(w), v) + h - self.gauge_constant)
    }

    /// `ω(z)` at an arbitrary point of `D`.
    pub fn eval(&self, z: C64) -> Option<C64> {
        self.eval_image(self.map.eval(z)?)
    }

    /// Same solution plus an additive constant (used to sanity-check the diagnostics).
    pub fn shifted(&self, c: C64) -> Self {
        let mut out = self.clone();
        out.gauge_constant -= c;
        out.omega = out.omega.map(|w| w + c);
        out
    }
}

/// `S = (σ f_z / J)∘f⁻¹` on the nodes of `image` (the grid of `map`).
pub fn pushforward_source(sigma: &ComplexField64, map: &QCMap<f64>, image: &DomainSpec) -> Result<ComplexField64> {
    let grid = *map.grid();
    if sigma.grid() != &grid {
        return Err(Error::GridMismatch);
    }
    // only nodes near the image of supp σ need an inversion
    let mut lo = C64::new(f64::INFINITY, f64::INFINITY);
    let mut hi = C64::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (k, v) in sigma.values().iter().enumerate() {
        if v.norm() != 0.0 && sigma.is_valid(k) {
            let w = map.f.values()[k];
            lo = C64::new(lo.re.min(w.re), lo.im.min(w.im));
            hi = C64::new(hi.re.max(w.re), hi.im.max(w.im));
        }
    }
    let pad = 2.0 * grid.spacing();
    let mut out = vec![C64::new(0.0, 0.0); grid.len()];
    for (k, w) in grid.nodes().enumerate() {
        if w.re < lo.re - pad || w.re > hi.re + pad || w.im < lo.im - pad || w.im > hi.im + pad || !image.contains(w) {
            continue;
        }
        let z = map.invert(w)?;
        let s = sigma.interpolate(z).unwrap_or_default();
        if s.norm() == 0.0 {
            continue;
        }
        let fz = map.f_z.interpolate(z).ok_or(Error::OutsideImage { re: w.re, im: w.im })?;
        let j = map.jacobian.interpolate(z).ok_or(Error::OutsideImage { re: w.re, im: w.im })?;
        if j <= 0.0 {
            return Err(Error::NonFinite(format!("non-positive Jacobian at preimage {z}")));
        }
        out[k] = s * fz / j;
    }
    let field = ComplexField64::from_values(grid, out)?;
    field.check_finite("pushed-forward source")?;
    Ok(field)
}

/// `φ*(f(ζ_k)) = φ(ζ_k) − Re H(f(ζ_k))`, returned on the image samples.
pub fn transfer_boundary(phi: &BoundaryData, image: &DomainSpec, h: &ComplexField64) -> Result<BoundaryData> {
    let vals = image
        .samples()
        .iter()
        .zip(phi.values())
        .map(|(&w, &p)| {
            let hv = h.interpolate(w).ok_or(Error::OutsideImage { re: w.re, im: w.im })?;
            if !hv.re.is_finite() {
                return Err(Error::NonFinite(format!("Cauchy transform at boundary image {w}")));
            }
            Ok(p - hv.re)
        })
        .collect::<Result<Vec<f64>>>()?;
    BoundaryData::new(image, vals)
}

/// Image of the boundary samples under the map, as a domain.
pub fn image_domain(domain: &DomainSpec, map: &QCMap<f64>) -> Result<DomainSpec> {
    let pts = domain
        .samples()
        .iter()
        .map(|&z| map.eval(z).ok_or(Error::OutsideImage { re: z.re, im: z.im }))
        .collect::<Result<Vec<_>>>()?;
    let image = DomainSpec::from_samples(pts)?;
    if image.samples()[0] != map.eval(domain.samples()[0]).unwrap_or_default() {
        return Err(Error::InvalidDomain("boundary image reverses orientation".into()));
    }
    Ok(image)
}

/// μ-conformal map for a zero-extended coefficient; switches to the truncation
/// ladder when `max K_μ` exceeds the threshold. Returns the ladder trace if used.
pub fn conformal_map(
    mu: &ComplexField64,
    domain: &DomainSpec,
    opts: &SolveOptions,
    warnings: &mut Vec<String>,
) -> Result<(QCMap<f64>, Option<Vec<f64>>)> {
    let k = dilatation_quotient(mu)?;
    let k_max = k.values().iter().copied().fold(1.0, f64::max);
    if k_max <= opts.ladder_threshold {
        return Ok((solve_mu_conformal_with(mu, &opts.qc)?, None));
    }
    let probe = probe_compact(domain, mu.grid());
    let ladder = solve_degenerate(mu, &probe, &opts.ladder)?;
    if ladder.collapsed() {
        warnings.push(format!(
            "truncation ladder collapses the probe compact (extent {:?}); the limit map is degenerate",
            ladder.probe_extent
        ));
    }
    if !ladder.converged() {
        warnings.push(format!(
            "truncation ladder did not converge (trace {:?})",
            ladder.convergence_trace
        ));
    }
    let trace = ladder.convergence_trace.clone();
    Ok((ladder.into_final_map(), Some(trace)))
}

/// Nodes of `D` at distance ≥ `0.1·diam D` from the boundary.
pub fn probe_compact(domain: &DomainSpec, grid: &Grid64) -> Vec<bool> {
    domain.interior_mask(grid, 0.1 * domain.diameter())
}

pub fn solve(problem: &BeltramiProblem) -> Result<BeltramiSolution> {
    solve_with(problem, &SolveOptions::default())
}

pub fn solve_with(problem: &BeltramiProblem, opts: &SolveOptions) -> Result<BeltramiSolution> {
    let mut warnings = Vec::new();
    let grid = *problem.grid();
    let (map, ladder_trace) = conformal_map(&problem.zero_extended_mu(), &problem.domain, opts, &mut warnings).map_err(|e| e.at_stage(Stage::Map))?;
    if map.min_jacobian() <= 0.0 {
        warnings.push(format!("non-positive Jacobian on the grid (min {:e})", map.min_jacobian()));
    }

    let image = image_domain(&problem.domain, &map).map_err(|e| e.at_stage(Stage::Pushforward))?;
    let s = pushforward_source(&problem.sigma, &map, &image).map_err(|e| e.at_stage(Stage::Pushforward))?;
    let source_norms = SOURCE_NORM_EXPONENTS.iter().map(|&q| (q, s.lp_norm(q))).collect();

    let h = cauchy_transform(&s).map_err(|e| e.at_stage(Stage::Cauchy))?;
    let phi_star = transfer_boundary(&problem.phi, &image, &h).map_err(|e| e.at_stage(Stage::BoundaryTransfer))?;
    let ratio = image.spacing_ratio();
    if ratio > 4.0 {
        warnings.push(format!("image boundary spacing is irregular (max/min ratio {ratio:.2})"));
    }

    let harmonic = solve_dirichlet_harmonic(&image, &phi_star, &grid).map_err(|e| e.at_stage(Stage::Harmonic))?;
    // integrate the conjugate over every interior node, including the flagged band
    let inside = image.inside_mask(&grid);
    let u_all = harmonic.u.clone().with_mask(inside.clone())?;
    let anchor_image = map.eval(problem.anchor).ok_or(Error::OutsideImage { re: problem.anchor.re, im: problem.anchor.im })
        .map_err(|e| e.at_stage(Stage::Conjugate))?;
    let layer = &harmonic.layer;
    let conjugate = conjugate_from_gradient(&u_all, |w| layer.gradient(w), &image, anchor_image, opts.loop_tolerance, opts.seed)
        .map_err(|e| e.at_stage(Stage::Conjugate))?;
    let a = u_all.to_complex().zip_with(&conjugate.v, |u, v| C64::new(u.re, v))?;

    let mut sol = BeltramiSolution {
        omega: ComplexField64::zeros(grid),
        map,
        ladder_trace,
        s,
        h,
        a,
        image_domain: image,
        phi_star,
        harmonic,
        conjugate,
        gauge_constant: C64::new(0.0, 0.0),
        source_norms,
        warnings,
    };
    let at_anchor = sol.eval_image(anchor_image).ok_or(Error::OutsideImage { re: anchor_image.re, im: anchor_image.im })
        .map_err(|e| e.at_stage(Stage::Compose))?;
    sol.gauge_constant = C64::new(0.0, at_anchor.im);

    let mut omega = vec![C64::new(0.0, 0.0); grid.len()];
    let mut mask = vec![false; grid.len()];
    for (k, z) in grid.nodes().enumerate() {
        if problem.domain.contains(z) {
            if let Some(v) = sol.eval_image(sol.map.f.values()[k]) {
                omega[k] = v;
                mask[k] = true;
            }
        }
    }
    sol.omega = ComplexField64::from_values(grid, omega)?.with_mask(mask)?;
    sol.omega.check_finite("omega").map_err(|e| e.at_stage(Stage::Compose))?;
    Ok(sol)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    /// `‖ω_z̄ − μω_z − σ‖₂` over the nodes kept after the exclusion bands.
    pub interior_residual: f64,
    /// Interior residual divided by `‖ω_z‖₂ + ‖σ‖₂` over the same nodes.
    pub relative_residual: f64,
    pub nodes_used: usize,
    /// `max_k |Re ω̃(ζ_k) − φ(ζ_k)|`, `ω̃` linearly extrapolated along the inward
    /// normal from depths `2h` and `4h`.
    pub boundary_error: f64,
    /// `Im ω(anchor)`.
    pub gauge: f64,
}

/// Nodes at least `cells` spacings from `∂D` and from the jump set of `σ`.
pub fn residual_mask(problem: &BeltramiProblem, cells: f64) -> Vec<bool> {
    let grid = problem.grid();
    let n = grid.n();
    let h = grid.spacing();
    let reach = cells.ceil() as isize;
    let sig = problem.sigma.values();
    let mut jump = vec![false; grid.len()];
    for j in 0..n {
        for i in 0..n {
            let k = grid.index(i, j);
            if (i + 1 < n && sig[k] != sig[k + 1]) || (j + 1 < n && sig[k] != sig[k + n]) {
                jump[k] = true;
            }
        }
    }
    let mut near_jump = vec![false; grid.len()];
    for (k, _) in jump.iter().enumerate().filter(|(_, &b)| b) {
        let (i, j) = grid.coords(k);
        for dj in -reach..=reach + 1 {
            for di in -reach..=reach + 1 {
                let (ii, jj) = (i as isize + di, j as isize + dj);
                if ii >= 0 && jj >= 0 && (ii as usize) < n && (jj as usize) < n {
                    near_jump[grid.index(ii as usize, jj as usize)] = true;
                }
            }
        }
    }
    grid.nodes()
        .enumerate()
        .map(|(k, z)| !near_jump[k] && problem.domain.contains(z) && problem.domain.distance_to_boundary(z) >= cells * h)
        .collect()
}

pub fn residual_report(sol: &BeltramiSolution, problem: &BeltramiProblem) -> Result<ResidualReport> {
    let grid = *problem.grid();
    let h = grid.spacing();
    let (wz, wzb) = wirtinger_derivatives(&sol.omega.clone().without_mask())?;
    let keep = residual_mask(problem, EXCLUSION_CELLS);
    let mu = problem.zero_extended_mu();
    let (mut num, mut den, mut used) = (0.0, 0.0, 0);
    for (k, &kept) in keep.iter().enumerate() {
        if !kept || !sol.omega.is_valid(k) {
            continue;
        }
        let r = wzb.values()[k] - mu.values()[k] * wz.values()[k] - problem.sigma.values()[k];
        num += r.norm_sqr();
        den += wz.values()[k].norm_sqr() + problem.sigma.values()[k].norm_sqr();
        used += 1;
    }
    let area = grid.cell_area();
    let interior_residual = (num * area).sqrt();
    let relative_residual = if den > 0.0 { (num / den).sqrt() } else { interior_residual };

    let normals = problem.domain.inward_normals();
    let mut boundary_error: f64 = 0.0;
    for ((&zeta, &nrm), &p) in problem.domain.samples().iter().zip(&normals).zip(problem.phi.values()) {
        let at = |depth: f64| {
            let z = zeta + nrm * (depth * h);
            sol.eval(z).ok_or(Error::OutsideImage { re: z.re, im: z.im })
        };
        let w = at(2.0)? * 2.0 - at(4.0)?;
        boundary_error = boundary_error.max((w.re - p).abs());
    }
    let gauge = sol
        .eval(problem.anchor)
        .ok_or(Error::OutsideImage { re: problem.anchor.re, im: problem.anchor.im })?
        .im;
    Ok(ResidualReport { interior_residual, relative_residual, nodes_used: used, boundary_error, gauge })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disk() -> DomainSpec {
        DomainSpec::disk(C64::new(0.0, 0.0), 1.0, 256).unwrap()
    }

    fn grid() -> Grid64 {
        Grid64::centered(2.0, 128).unwrap()
    }

    fn zero(g: Grid64) -> ComplexField64 {
        ComplexField64::zeros(g)
    }

    #[test]
    fn source_too_close_to_boundary_is_rejected() {
        let g = grid();
        let d = disk();
        let sigma = ComplexField64::from_fn(g, |z| if z.norm() < 0.98 { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) });
        let phi = BoundaryData::constant(&d, 0.0).unwrap();
        let err = BeltramiProblem::new(d, zero(g), sigma, phi, None).unwrap_err();
        assert!(err.to_string().contains("compact-support margin"), "{err}");
    }

    #[test]
    fn analytic_completion_of_re_z() {
        let g = grid();
        let d = disk();
        let phi = BoundaryData::cos_angle(&d, C64::new(0.0, 0.0)).unwrap();
        let p = BeltramiProblem::new(d, zero(g), zero(g), phi, Some(C64::new(0.0, 0.0))).unwrap();
        let sol = solve(&p).unwrap();
        assert!((sol.eval(C64::new(0.5, 0.0)).unwrap() - 0.5).norm() < 1e-6);
        let rep = residual_report(&sol, &p).unwrap();
        assert!(rep.interior_residual <= 1e-6, "{rep:?}");
        assert!(rep.boundary_error <= 10.0 * g.spacing(), "{rep:?}");
        assert!(rep.gauge.abs() < 1e-12);
        let shifted = residual_report(&sol.shifted(C64::new(0.1, 0.0)), &p).unwrap();
        assert!((shifted.boundary_error - rep.boundary_error - 0.1).abs() < 0.02, "{shifted:?}");
    }

    #[test]
    fn transfer_boundary_of_disk_source() {
        let d = disk();
        let g = Grid64::centered(2.0, 256).unwrap();
        let s = ComplexField64::from_fn(g, |z| if z.norm() <= 0.5 { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) });
        let h = cauchy_transform(&s).unwrap();
        let phi = BoundaryData::constant(&d, 0.0).unwrap();
        let star = transfer_boundary(&phi, &d, &h).unwrap();
        for (z, v) in d.samples().iter().zip(star.values()) {
            assert!((v + 0.25 * z.re).abs() < 5e-3, "{v} vs {}", -0.25 * z.re);
        }
    }

    #[test]
    fn identity_pushforward_keeps_source() {
        let g = grid();
        let d = disk();
        let sigma = ComplexField64::from_fn(g, |z| if z.norm() <= 0.5 { C64::new(1.0, 2.0) } else { C64::new(0.0, 0.0) });
        let map = solve_mu_conformal_with(&zero(g), &QcOptions::default()).unwrap();
        let s = pushforward_source(&sigma, &map, &d).unwrap();
        for (a, b) in s.values().iter().zip(sigma.values()) {
            assert!((a - b).norm() < 1e-9);
        }
        let s0 = pushforward_source(&zero(g), &map, &d).unwrap();
        assert_eq!(s0.max_modulus(), 0.0);
    }
}
