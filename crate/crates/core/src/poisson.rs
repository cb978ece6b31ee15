//! Dirichlet problem for `div[A∇u] = g` with `det A = 1`, through the
//! factorization `u = (ℋ + 𝒩^G)∘f` where `f` is `μ_A`-conformal.

use crate::beltrami::{check_source_support, conformal_map, image_domain, SolveOptions};
use crate::calculus::gradient;
use crate::domain::{BoundaryData, DomainSpec};
use crate::error::{Error, Result, Stage};
use crate::harmonic::{solve_dirichlet_harmonic, HarmonicSolution};
use crate::qc::QCMap;
use crate::singular::{log_potential, verify_regularity, RegularityClass, RegularityReport};
use crate::{ComplexField64, Grid64, RealField64, C64};

const SYMMETRY_TOL: f64 = 1e-10;
const DET_TOL: f64 = 1e-8;

/// `μ_A = −(a11 − a22 + 𝕚(a12 + a21)) / (2 + a11 + a22)`.
pub fn mu_from_a_value(a: [f64; 4]) -> Result<C64> {
    let [a11, a12, a21, a22] = a;
    let den = 2.0 + a11 + a22;
    if !(den > 0.0) {
        return Err(Error::InvalidMatrix(format!("2 + a11 + a22 = {den} is not positive")));
    }
    Ok(-C64::new(a11 - a22, a12 + a21) / den)
}

/// Symmetric, unit-determinant matrix with entries `|1−μ|²`, `−2 Im μ`,
/// `|1+μ|²` over `1 − |μ|²`, as `[a11, a12, a21, a22]`.
pub fn a_from_mu_value(mu: C64) -> Result<[f64; 4]> {
    let m2 = mu.norm_sqr();
    if !(m2 < 1.0) {
        return Err(Error::InvalidParameter(format!("|mu| = {} violates the ellipticity bound |mu| < 1", mu.norm())));
    }
    let d = 1.0 - m2;
    let one = C64::new(1.0, 0.0);
    let off = -2.0 * mu.im / d;
    Ok([(one - mu).norm_sqr() / d, off, off, (one + mu).norm_sqr() / d])
}

/// Symmetric matrix-valued coefficient on a grid.
#[derive(Debug, Clone)]
pub struct MatrixField {
    pub a11: RealField64,
    pub a12: RealField64,
    pub a21: RealField64,
    pub a22: RealField64,
}

impl MatrixField {
    /// Validated construction: symmetry, `det A = 1`, `det(I + A) > 0` on valid nodes.
    pub fn new(a11: RealField64, a12: RealField64, a21: RealField64, a22: RealField64) -> Result<Self> {
        let g = a11.grid();
        if a12.grid() != g || a21.grid() != g || a22.grid() != g {
            return Err(Error::GridMismatch);
        }
        let m = MatrixField { a11, a12, a21, a22 };
        m.validate()?;
        Ok(m)
    }

    pub fn identity(grid: Grid64) -> Self {
        Self::from_fn(grid, |_| [1.0, 0.0, 0.0, 1.0]).expect("identity is a valid coefficient")
    }

    pub fn from_fn(grid: Grid64, f: impl Fn(C64) -> [f64; 4]) -> Result<Self> {
        let vals: Vec<[f64; 4]> = grid.nodes().map(f).collect();
        let pick = |i: usize| RealField64::from_values(grid, vals.iter().map(|a| a[i]).collect());
        Self::new(pick(0)?, pick(1)?, pick(2)?, pick(3)?)
    }

    pub fn grid(&self) -> &Grid64 {
        self.a11.grid()
    }

    pub fn at(&self, k: usize) -> [f64; 4] {
        [self.a11.values()[k], self.a12.values()[k], self.a21.values()[k], self.a22.values()[k]]
    }

    pub fn is_valid(&self, k: usize) -> bool {
        self.a11.is_valid(k)
    }

    pub fn with_mask(self, mask: Vec<bool>) -> Result<Self> {
        Ok(MatrixField {
            a11: self.a11.with_mask(mask.clone())?,
            a12: self.a12.with_mask(mask.clone())?,
            a21: self.a21.with_mask(mask.clone())?,
            a22: self.a22.with_mask(mask)?,
        })
    }

    fn validate(&self) -> Result<()> {
        let g = *self.grid();
        for k in 0..g.len() {
            if !self.is_valid(k) {
                continue;
            }
            let [a11, a12, a21, a22] = self.at(k);
            let z = g.node_at(k);
            if ![a11, a12, a21, a22].iter().all(|v| v.is_finite()) {
                return Err(Error::InvalidMatrix(format!("non-finite entry at {z}")));
            }
            if (a12 - a21).abs() > SYMMETRY_TOL * (1.0 + a12.abs()) {
                return Err(Error::InvalidMatrix(format!("not symmetric at {z}: a12 = {a12}, a21 = {a21}")));
            }
            let det = a11 * a22 - a12 * a21;
            if (det - 1.0).abs() > DET_TOL * (1.0 + a11.abs() + a22.abs()) {
                return Err(Error::InvalidMatrix(format!("det A = {det} != 1 at {z}")));
            }
            if !((1.0 + a11) * (1.0 + a22) > a12 * a21) {
                return Err(Error::InvalidMatrix(format!("ellipticity det(I + A) > 0 fails at {z}")));
            }
        }
        Ok(())
    }

    /// Empirical Hölder exponent of each entry (increment ratios), worst first.
    pub fn holder_diagnostics(&self) -> Result<Vec<RegularityReport>> {
        let mut reps = [&self.a11, &self.a12, &self.a21, &self.a22]
            .iter()
            .map(|f| verify_regularity(*f, RegularityClass::Holder(0.0)))
            .collect::<Result<Vec<_>>>()?;
        reps.sort_by(|a, b| a.exponent.unwrap_or(f64::INFINITY).total_cmp(&b.exponent.unwrap_or(f64::INFINITY)));
        Ok(reps)
    }
}

/// `μ_A` per node; masked nodes get 0.
pub fn mu_from_a(a: &MatrixField) -> Result<ComplexField64> {
    let g = *a.grid();
    let vals = (0..g.len())
        .map(|k| if a.is_valid(k) { mu_from_a_value(a.at(k)) } else { Ok(C64::new(0.0, 0.0)) })
        .collect::<Result<Vec<_>>>()?;
    for (k, m) in vals.iter().enumerate() {
        if m.norm() >= 1.0 {
            let z = g.node_at(k);
            return Err(Error::Ellipticity { x: z.re, y: z.im, modulus: m.norm() });
        }
    }
    ComplexField64::from_values(g, vals)
}

/// Matrix coefficient of a Beltrami coefficient; masks are carried over.
pub fn a_from_mu(mu: &ComplexField64) -> Result<MatrixField> {
    let g = *mu.grid();
    let vals = (0..g.len())
        .map(|k| if mu.is_valid(k) { a_from_mu_value(mu.values()[k]) } else { Ok([1.0, 0.0, 0.0, 1.0]) })
        .collect::<Result<Vec<_>>>()?;
    let pick = |i: usize| -> Result<RealField64> {
        let f = RealField64::from_values(g, vals.iter().map(|a| a[i]).collect())?;
        match mu.mask() {
            Some(m) => f.with_mask(m.to_vec()),
            None => Ok(f),
        }
    };
    MatrixField::new(pick(0)?, pick(1)?, pick(2)?, pick(3)?)
}

#[derive(Debug, Clone)]
pub struct PoissonProblem {
    pub domain: DomainSpec,
    pub a: MatrixField,
    pub g: RealField64,
    pub phi: BoundaryData,
}

impl PoissonProblem {
    pub fn new(domain: DomainSpec, a: MatrixField, g: RealField64, phi: BoundaryData) -> Result<Self> {
        if a.grid() != g.grid() {
            return Err(Error::GridMismatch);
        }
        check_source_support(&domain, &g.to_complex())?;
        let a = a.with_mask(domain.inside_mask(g.grid()))?;
        Ok(PoissonProblem { domain, a, g, phi })
    }

    pub fn grid(&self) -> &Grid64 {
        self.g.grid()
    }
}

/// `G = (g/J)∘f⁻¹` on the nodes of `image`.
pub fn pushforward_density(g: &RealField64, map: &QCMap<f64>, image: &DomainSpec) -> Result<RealField64> {
    let grid = *map.grid();
    if g.grid() != &grid {
        return Err(Error::GridMismatch);
    }
    let mut lo = C64::new(f64::INFINITY, f64::INFINITY);
    let mut hi = C64::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (k, &v) in g.values().iter().enumerate() {
        if v != 0.0 && g.is_valid(k) {
            let w = map.f.values()[k];
            lo = C64::new(lo.re.min(w.re), lo.im.min(w.im));
            hi = C64::new(hi.re.max(w.re), hi.im.max(w.im));
        }
    }
    let pad = 2.0 * grid.spacing();
    let mut out = vec![0.0; grid.len()];
    for (k, w) in grid.nodes().enumerate() {
        if w.re < lo.re - pad || w.re > hi.re + pad || w.im < lo.im - pad || w.im > hi.im + pad || !image.contains(w) {
            continue;
        }
        let z = map.invert(w)?;
        let gv = g.interpolate(z).unwrap_or(0.0);
        if gv == 0.0 {
            continue;
        }
        let j = map.jacobian.interpolate(z).ok_or(Error::OutsideImage { re: w.re, im: w.im })?;
        if j <= 0.0 {
            return Err(Error::NonFinite(format!("non-positive Jacobian at preimage {z}")));
        }
        out[k] = gv / j;
    }
    let field = RealField64::from_values(grid, out)?;
    field.check_finite("pushed-forward density")?;
    Ok(field)
}

#[derive(Debug, Clone)]
pub struct PoissonSolution {
    /// `u` on nodes of `D`.
    pub u: RealField64,
    pub map: QCMap<f64>,
    pub ladder_trace: Option<Vec<f64>>,
    /// Pushed-forward density `G`.
    pub density: RealField64,
    /// Logarithmic potential `𝒩^G`.
    pub potential: RealField64,
    /// Harmonic part `ℋ` on `D*`.
    pub harmonic: HarmonicSolution,
    pub image_domain: DomainSpec,
    pub phi_star: BoundaryData,
    /// `(q, ‖G‖_q)` for `q ∈ {1.5, 2, 3}`.
    pub density_norms: Vec<(f64, f64)>,
    pub warnings: Vec<String>,
}

impl PoissonSolution {
    /// `U(w) = ℋ(w) + 𝒩^G(w)` for `w ∈ D*`.
    pub fn eval_image(&self, w: C64) -> Option<f64> {
        Some(self.harmonic.layer.value(w) + self.potential.interpolate(w)?)
    }

    /// `u(z) = U(f(z))`.
    pub fn eval(&self, z: C64) -> Option<f64> {
        self.eval_image(self.map.eval(z)?)
    }
}

pub fn solve_poisson(problem: &PoissonProblem) -> Result<PoissonSolution> {
    solve_poisson_with(problem, &SolveOptions::default())
}

pub fn solve_poisson_with(problem: &PoissonProblem, opts: &SolveOptions) -> Result<PoissonSolution> {
    let grid = *problem.grid();
    let mut warnings = Vec::new();
    let mu = mu_from_a(&problem.a).map_err(|e| e.at_stage(Stage::Map))?.without_mask();
    let (map, ladder_trace) = conformal_map(&mu, &problem.domain, opts, &mut warnings).map_err(|e| e.at_stage(Stage::Map))?;

    let image = image_domain(&problem.domain, &map).map_err(|e| e.at_stage(Stage::Pushforward))?;
    let density = pushforward_density(&problem.g, &map, &image).map_err(|e| e.at_stage(Stage::Pushforward))?;
    let density_norms = [1.5, 2.0, 3.0].iter().map(|&q| (q, density.lp_norm(q))).collect();
    let potential = log_potential(&density).map_err(|e| e.at_stage(Stage::Potential))?;

    let star = image
        .samples()
        .iter()
        .zip(problem.phi.values())
        .map(|(&w, &p)| potential.interpolate(w).map(|n| p - n).ok_or(Error::OutsideImage { re: w.re, im: w.im }))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.at_stage(Stage::BoundaryTransfer))?;
    let phi_star = BoundaryData::new(&image, star).map_err(|e| e.at_stage(Stage::BoundaryTransfer))?;
    let harmonic = solve_dirichlet_harmonic(&image, &phi_star, &grid).map_err(|e| e.at_stage(Stage::Harmonic))?;

    let mut sol = PoissonSolution {
        u: RealField64::zeros(grid),
        map,
        ladder_trace,
        density,
        potential,
        harmonic,
        image_domain: image,
        phi_star,
        density_norms,
        warnings,
    };
    let mut vals = vec![0.0; grid.len()];
    let mut mask = vec![false; grid.len()];
    for (k, z) in grid.nodes().enumerate() {
        if problem.domain.contains(z) {
            if let Some(v) = sol.eval_image(sol.map.f.values()[k]) {
                vals[k] = v;
                mask[k] = true;
            }
        }
    }
    sol.u = RealField64::from_values(grid, vals)?.with_mask(mask)?;
    sol.u.check_finite("u").map_err(|e| e.at_stage(Stage::Compose))?;
    Ok(sol)
}

/// Bump `ψ(z) = (1 − |(z−c)/ρ|²)³` on the disc `|z−c| < ρ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub center: C64,
    pub radius: f64,
}

impl Bump {
    pub fn value(&self, z: C64) -> f64 {
        let s = (z - self.center).norm_sqr() / (self.radius * self.radius);
        if s >= 1.0 {
            0.0
        } else {
            (1.0 - s).powi(3)
        }
    }

    pub fn gradient(&self, z: C64) -> (f64, f64) {
        let d = z - self.center;
        let r2 = self.radius * self.radius;
        let s = d.norm_sqr() / r2;
        if s >= 1.0 {
            return (0.0, 0.0);
        }
        let c = -6.0 * (1.0 - s).powi(2) / r2;
        (c * d.re, c * d.im)
    }
}

/// Lattice of bumps: a `k×k` centre lattice spanning `c ± R/2` with radius
/// `0.2·R`, where `c` is the centroid and `R` its distance to `∂D`; bumps not
/// fully inside `D` are dropped.
pub fn test_basis(domain: &DomainSpec, size: usize) -> Result<Vec<Bump>> {
    let k = (size as f64).sqrt().round() as usize;
    if k * k != size || k == 0 {
        return Err(Error::InvalidParameter(format!("test basis size {size} is not a perfect square")));
    }
    let c = domain.centroid();
    let r_in = domain.distance_to_boundary(c);
    let rho = 0.2 * r_in;
    let mut out = Vec::with_capacity(size);
    for j in 0..k {
        for i in 0..k {
            let t = |a: usize| if k == 1 { 0.0 } else { -0.5 + a as f64 / (k - 1) as f64 };
            let center = c + C64::new(t(i), t(j)) * r_in;
            if domain.contains(center) && domain.distance_to_boundary(center) > rho {
                out.push(Bump { center, radius: rho });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeakResidualReport {
    /// Raw `r_m = ∫⟨A∇u, ∇ψ_m⟩ + ∫ g ψ_m`.
    pub residuals: Vec<f64>,
    /// `|r_m| / ‖∇ψ_m‖₂`.
    pub normalized: Vec<f64>,
    pub max_normalized: f64,
    /// `max_k |ũ(ζ_k) − φ(ζ_k)|`, `ũ` linearly extrapolated along the inward
    /// normal from the grid field at depths `2h` and `4h`.
    pub boundary_error: f64,
}

/// Grid quadrature of the weak form against `test_basis(domain, basis_size)`.
pub fn weak_residual(u: &RealField64, problem: &PoissonProblem, basis_size: usize) -> Result<WeakResidualReport> {
    let grid = *problem.grid();
    if u.grid() != &grid {
        return Err(Error::GridMismatch);
    }
    let (ux, uy) = gradient(&u.clone().without_mask())?;
    let area = grid.cell_area();
    let basis = test_basis(&problem.domain, basis_size)?;
    let mut residuals = Vec::with_capacity(basis.len());
    let mut normalized = Vec::with_capacity(basis.len());
    for b in &basis {
        let (mut r, mut gn) = (0.0, 0.0);
        for (k, z) in grid.nodes().enumerate() {
            let psi = b.value(z);
            if psi == 0.0 {
                continue;
            }
            let (px, py) = b.gradient(z);
            let [a11, a12, a21, a22] = problem.a.at(k);
            let (gx, gy) = (ux.values()[k], uy.values()[k]);
            r += (a11 * gx + a12 * gy) * px + (a21 * gx + a22 * gy) * py + problem.g.values()[k] * psi;
            gn += px * px + py * py;
        }
        r *= area;
        let norm = (gn * area).sqrt();
        residuals.push(r);
        normalized.push(r.abs() / norm);
    }
    let h = grid.spacing();
    let normals = problem.domain.inward_normals();
    let mut boundary_error: f64 = 0.0;
    for ((&zeta, &nrm), &p) in problem.domain.samples().iter().zip(&normals).zip(problem.phi.values()) {
        let at = |d: f64| {
            let z = zeta + nrm * (d * h);
            u.interpolate(z).ok_or(Error::OutsideImage { re: z.re, im: z.im })
        };
        let v = 2.0 * at(2.0)? - at(4.0)?;
        boundary_error = boundary_error.max((v - p).abs());
    }
    let max_normalized = normalized.iter().copied().fold(0.0, f64::max);
    Ok(WeakResidualReport { residuals, normalized, max_normalized, boundary_error })
}

/// Smooth test function `T` with its Laplacian, both in closed form.
pub struct SmoothFunction<'a> {
    pub value: &'a dyn Fn(C64) -> f64,
    pub laplacian: &'a dyn Fn(C64) -> f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceReport {
    /// `−∫⟨A∇(T∘f), ∇ψ_m⟩` per bump.
    pub lhs: Vec<f64>,
    /// `∫ J·(ΔT)∘f·ψ_m` per bump.
    pub rhs: Vec<f64>,
    pub max_difference: f64,
}

const CONSISTENCY_TOL: f64 = 1e-6;

/// Weak form of `div[A∇(T∘f)] = J·(ΔT)∘f` against the given bumps.
pub fn divergence_identity_check(t: &SmoothFunction<'_>, map: &QCMap<f64>, a: &MatrixField, basis: &[Bump]) -> Result<DivergenceReport> {
    let grid = *map.grid();
    if a.grid() != &grid {
        return Err(Error::GridMismatch);
    }
    for k in 0..grid.len() {
        if !a.is_valid(k) {
            continue;
        }
        let expect = a_from_mu_value(map.mu.values()[k])?;
        let got = a.at(k);
        if expect.iter().zip(&got).any(|(e, g)| (e - g).abs() > CONSISTENCY_TOL * (1.0 + e.abs())) {
            let z = grid.node_at(k);
            return Err(Error::InvalidMatrix(format!("A is inconsistent with the map's coefficient at {z}")));
        }
    }
    let composed = RealField64::from_values(grid, map.f.values().iter().map(|&w| (t.value)(w)).collect())?;
    let (tx, ty) = gradient(&composed)?;
    let area = grid.cell_area();
    let mut lhs = Vec::with_capacity(basis.len());
    let mut rhs = Vec::with_capacity(basis.len());
    for b in basis {
        let (mut l, mut r) = (0.0, 0.0);
        for (k, z) in grid.nodes().enumerate() {
            let psi = b.value(z);
            if psi == 0.0 {
                continue;
            }
            let (px, py) = b.gradient(z);
            let [a11, a12, a21, a22] = a.at(k);
            let (gx, gy) = (tx.values()[k], ty.values()[k]);
            l -= (a11 * gx + a12 * gy) * px + (a21 * gx + a22 * gy) * py;
            r += map.jacobian.values()[k] * (t.laplacian)(map.f.values()[k]) * psi;
        }
        lhs.push(l * area);
        rhs.push(r * area);
    }
    let max_difference = lhs.iter().zip(&rhs).map(|(l, r)| (l - r).abs()).fold(0.0, f64::max);
    Ok(DivergenceReport { lhs, rhs, max_difference })
}

/// `∫ψ` by the same grid quadrature (used to predict residual shifts).
pub fn bump_integral(b: &Bump, grid: &Grid64) -> f64 {
    grid.nodes().map(|z| b.value(z)).sum::<f64>() * grid.cell_area()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qc::{solve_mu_conformal_with, QcOptions};
    use proptest::prelude::*;

    fn disk() -> DomainSpec {
        DomainSpec::disk(C64::new(0.0, 0.0), 1.0, 256).unwrap()
    }

    #[test]
    fn dictionary_examples() {
        assert_eq!(mu_from_a_value([1.0, 0.0, 0.0, 1.0]).unwrap(), C64::new(0.0, 0.0));
        let mu = mu_from_a_value([3.0, 0.0, 0.0, 1.0 / 3.0]).unwrap();
        assert!((mu - C64::new(-0.5, 0.0)).norm() < 1e-15);
        let s: f64 = 0.7;
        let d = (1.0 + s * s).sqrt();
        let mu = mu_from_a_value([d, s, s, d]).unwrap();
        assert!((mu - C64::new(0.0, -2.0 * s / (2.0 + 2.0 * d))).norm() < 1e-15);
        let a = a_from_mu_value(C64::new(-0.5, 0.0)).unwrap();
        assert!((a[0] - 3.0).abs() < 1e-14 && (a[3] - 1.0 / 3.0).abs() < 1e-14 && a[1] == 0.0);
        assert_eq!(a_from_mu_value(C64::new(0.0, 0.0)).unwrap(), [1.0, 0.0, 0.0, 1.0]);
        assert!(a_from_mu_value(C64::new(1.0, 0.0)).is_err());
        assert!(mu_from_a_value([-3.0, 0.0, 0.0, -1.0 / 3.0]).is_err());
    }

    proptest! {
        #[test]
        fn dictionary_round_trip(r in 0.0f64..0.95, t in 0.0f64..6.3) {
            let mu = C64::from_polar(r, t);
            let a = a_from_mu_value(mu).unwrap();
            prop_assert!((a[0] * a[3] - a[1] * a[2] - 1.0).abs() < 1e-10);
            prop_assert!((1.0 + a[0]) * (1.0 + a[3]) > a[1] * a[2]);
            prop_assert!((mu_from_a_value(a).unwrap() - mu).norm() < 1e-12);
        }
    }

    #[test]
    fn matrix_field_validation() {
        let g = Grid64::centered(1.0, 16).unwrap();
        assert!(MatrixField::from_fn(g, |_| [2.0, 0.0, 0.0, 1.0]).is_err());
        assert!(MatrixField::from_fn(g, |_| [1.0, 0.1, 0.0, 1.0]).is_err());
        let a = a_from_mu(&ComplexField64::from_fn(g, |z| z * 0.3)).unwrap();
        let back = mu_from_a(&a).unwrap();
        for (z, m) in g.nodes().zip(back.values()) {
            assert!((m - z * 0.3).norm() < 1e-12);
        }
    }

    #[test]
    fn harmonic_case() {
        let g = Grid64::centered(2.0, 128).unwrap();
        let d = disk();
        let phi = BoundaryData::cos_angle(&d, C64::new(0.0, 0.0)).unwrap();
        let p = PoissonProblem::new(d, MatrixField::identity(g), RealField64::zeros(g), phi).unwrap();
        let sol = solve_poisson(&p).unwrap();
        assert!((sol.eval(C64::new(0.5, 0.2)).unwrap() - 0.5).abs() < 1e-6);
        let rep = weak_residual(&sol.u, &p, 25).unwrap();
        assert_eq!(rep.residuals.len(), 25);
        assert!(rep.max_normalized < 1e-5, "{rep:?}");
        assert!(rep.boundary_error < 1e-3, "{rep:?}");
    }

    #[test]
    fn perturbation_shifts_residual_predictably() {
        let g = Grid64::centered(2.0, 128).unwrap();
        let d = disk();
        let phi = BoundaryData::cos_angle(&d, C64::new(0.0, 0.0)).unwrap();
        let p = PoissonProblem::new(d.clone(), MatrixField::identity(g), RealField64::zeros(g), phi).unwrap();
        let u = RealField64::from_fn(g, |z| z.re).with_mask(d.inside_mask(&g)).unwrap();
        let u2 = RealField64::from_fn(g, |z| z.re + 0.1 * z.re * z.re).with_mask(d.inside_mask(&g)).unwrap();
        let r1 = weak_residual(&u, &p, 25).unwrap();
        let r2 = weak_residual(&u2, &p, 25).unwrap();
        let basis = test_basis(&d, 25).unwrap();
        for ((a, b), bump) in r1.residuals.iter().zip(&r2.residuals).zip(&basis) {
            let expect = -0.2 * bump_integral(bump, &g);
            assert!((b - a - expect).abs() < 1e-2 * expect.abs(), "{} vs {expect}", b - a);
        }
    }

    #[test]
    fn divergence_identity_trivial_cases() {
        let g = Grid64::centered(2.0, 128).unwrap();
        let map = solve_mu_conformal_with(&ComplexField64::zeros(g), &QcOptions::default()).unwrap();
        let a = MatrixField::identity(g);
        let basis = test_basis(&disk(), 25).unwrap();
        let sq = SmoothFunction { value: &|w: C64| w.norm_sqr(), laplacian: &|_| 4.0 };
        let rep = divergence_identity_check(&sq, &map, &a, &basis).unwrap();
        for (l, b) in rep.lhs.iter().zip(&basis) {
            assert!((l - 4.0 * bump_integral(b, &g)).abs() < 1e-2 * l.abs());
        }
        assert!(rep.max_difference < 1e-2 * rep.rhs[0].abs());
        let harm = SmoothFunction { value: &|w: C64| (w * w).re, laplacian: &|_| 0.0 };
        assert!(divergence_identity_check(&harm, &map, &a, &basis).unwrap().max_difference < 1e-5);
        let wrong = MatrixField::from_fn(g, |_| [3.0, 0.0, 0.0, 1.0 / 3.0]).unwrap();
        assert!(divergence_identity_check(&sq, &map, &wrong, &basis).is_err());
    }

    #[test]
    fn identity_pushforward_density() {
        let g = Grid64::centered(2.0, 64).unwrap();
        let map = solve_mu_conformal_with(&ComplexField64::zeros(g), &QcOptions::default()).unwrap();
        let dens = RealField64::from_fn(g, |z| if z.norm() < 0.5 { 2.0 } else { 0.0 });
        let out = pushforward_density(&dens, &map, &disk()).unwrap();
        for (a, b) in out.values().iter().zip(dens.values()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn holder_diagnostics_on_smooth_coefficient() {
        let g = Grid64::centered(2.0, 64).unwrap();
        let a = a_from_mu(&ComplexField64::from_fn(g, |z| z * 0.1)).unwrap();
        let reps = a.holder_diagnostics().unwrap();
        assert!(reps.iter().all(|r| r.pass));
    }
}
