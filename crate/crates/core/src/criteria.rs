//! Solvability criteria at a boundary point `z0`, evaluated on dyadic
//! `ε`-ladders. Divergence and "little-o" statements are asymptotic, so every
//! verdict is a trend certificate that carries its trace.
//!
//! Criteria take local callables `d ↦ K(z0 + d)` of the offset `d = z − z0`,
//! so shells far below `f64` resolution of `z0` stay resolved.

use std::f64::consts::{E, TAU};
use std::fmt;
use std::num::NonZeroUsize;
use std::sync::Arc;

use gauss_quad::GaussLegendre;

use crate::dilatation::tangent_value;
use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::{Grid64, RealField64, C64};

/// Angular nodes of every circle mean.
pub const ANGULAR_NODES: usize = 512;
/// Dyadic levels for integral criteria on callables.
pub const INTEGRAL_LEVELS: usize = 200;
/// Dyadic levels for the mean-oscillation ladder.
pub const FMO_LEVELS: usize = 40;
/// Points of the trailing growth fit.
pub const FIT_POINTS: usize = 4;
/// Slope of a partial integral against `log log` at or above which it diverges.
pub const DIVERGENT_SLOPE: f64 = 0.1;
/// Last increment below which a partial integral is taken as converged.
pub const CAUCHY_TAIL: f64 = 1e-6;
/// Log-log slope of a ratio at or below which it tends to zero.
pub const RATIO_ZERO_SLOPE: f64 = -0.3;
/// Log-log slope of a ratio at or above which it does not tend to zero.
pub const RATIO_FLAT_SLOPE: f64 = -0.15;
/// Log-log slope at or below which a quantity is bounded.
pub const BOUNDED_SLOPE: f64 = 0.02;
/// Log-log slope at or above which a quantity is unbounded.
pub const UNBOUNDED_SLOPE: f64 = 0.1;

const SHELL_ORDER: usize = 8;
const TAIL_ORDER: usize = 16;
const DISC_PANELS: usize = 40;
const DISC_ORDER: usize = 6;

/// Local callable `d ↦ K(z0 + d)`.
pub type Local<'a> = dyn Fn(C64) -> f64 + 'a;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Criterion {
    Fmo,
    BmoDominant,
    Mean,
    Cz,
    Lehto,
    Orlicz,
    Exp,
    Psi,
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Criterion::Fmo => "FMO",
            Criterion::BmoDominant => "BMO-dominant",
            Criterion::Mean => "MEAN",
            Criterion::Cz => "CZ",
            Criterion::Lehto => "LEHTO",
            Criterion::Orlicz => "ORLICZ",
            Criterion::Exp => "EXP",
            Criterion::Psi => "PSI",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Satisfied,
    Violated,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Satisfied => "SATISFIED",
            Verdict::Violated => "VIOLATED",
            Verdict::Inconclusive => "INCONCLUSIVE",
        })
    }
}

/// Fate of a truncated improper integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Divergence {
    Divergent,
    Convergent,
    Inconclusive,
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Divergence::Divergent => "DIVERGENT",
            Divergence::Convergent => "CONVERGENT",
            Divergence::Inconclusive => "INCONCLUSIVE",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionVerdict {
    pub criterion: Criterion,
    pub verdict: Verdict,
    /// `(ε_k, value_k)` with `ε_k` strictly decreasing.
    pub trace: Vec<(f64, f64)>,
    /// Trailing slope the verdict was decided on.
    pub growth_exponent: f64,
    /// Named parameters (`eps0`, `alpha`, `delta`, ...).
    pub params: Vec<(String, f64)>,
    pub note: String,
}

impl CriterionVerdict {
    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|(n, _)| n == name).map(|&(_, v)| v)
    }
}

/// Dyadic radii `ε_k = ε₀·2^{−k}`, `k = 1..=levels`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ladder {
    pub eps0: f64,
    pub levels: usize,
}

impl Ladder {
    pub fn new(eps0: f64, levels: usize) -> Result<Self> {
        if !(eps0 > 0.0 && eps0 < 1.0) {
            return Err(Error::InvalidParameter(format!("eps0 = {eps0} must lie in (0, 1)")));
        }
        if levels < FIT_POINTS {
            return Err(Error::InvalidParameter(format!("ladder needs at least {FIT_POINTS} levels, got {levels}")));
        }
        Ok(Ladder { eps0, levels })
    }

    /// Deepest ladder whose smallest radius stays at or above `floor`.
    pub fn resolution_limited(eps0: f64, floor: f64) -> Result<Self> {
        let levels = if floor > 0.0 { (eps0 / floor).log2().floor().max(0.0) as usize } else { INTEGRAL_LEVELS };
        Ladder::new(eps0, levels.min(INTEGRAL_LEVELS))
    }

    pub fn radii(&self) -> Vec<f64> {
        (1..=self.levels).map(|k| self.eps0 * (-(k as f64)).exp2()).collect()
    }
}

/// `0.5·min(e^{−e}, max_k |ζ_k − z0|)`.
pub fn default_eps0(domain: &DomainSpec, z0: C64) -> f64 {
    let far = domain.samples().iter().map(|&s| (s - z0).norm()).fold(0.0, f64::max);
    0.5 * (-E).exp().min(far)
}

/// `d ↦ K^T_μ(z0 + d, z0)` for a callable Beltrami coefficient.
pub fn tangent_dilatation_local(mu: impl Fn(C64) -> C64, z0: C64) -> impl Fn(C64) -> f64 {
    move |d| tangent_value(mu(z0 + d), d, C64::new(0.0, 0.0))
}

/// Bilinear interpolant of a grid field around `z0`; NaN off the grid.
pub fn field_local(field: &RealField64, z0: C64) -> impl Fn(C64) -> f64 + '_ {
    move |d| field.interpolate(z0 + d).unwrap_or(f64::NAN)
}

fn angles() -> impl Iterator<Item = C64> {
    (0..ANGULAR_NODES).map(|j| C64::from_polar(1.0, TAU * (j as f64 + 0.5) / ANGULAR_NODES as f64))
}

/// `k(r) = (1/2π)∮ K(z0 + r e^{iθ}) dθ`, trapezoidal in `θ`.
pub fn circle_mean(k: &Local<'_>, r: f64) -> Result<f64> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!("circle radius {r} must be positive")));
    }
    let s: f64 = angles().map(|u| k(u * r)).sum();
    let m = s / ANGULAR_NODES as f64;
    if !m.is_finite() {
        return Err(Error::Criterion(format!("circle mean at r = {r:e} is not finite")));
    }
    Ok(m)
}

/// Circle mean of a grid field; radii under two grid spacings need a callable.
pub fn circle_mean_field(field: &RealField64, z0: C64, r: f64) -> Result<f64> {
    let floor = 2.0 * field.grid().spacing();
    if r < floor {
        return Err(Error::Criterion(format!(
            "radius {r:e} is below the grid resolution floor {floor:e}; use a callable"
        )));
    }
    circle_mean(&field_local(field, z0), r)
}

/// `ln((1/2π)∮ e^{h} dθ)` without overflow.
fn log_circle_mean(h: &dyn Fn(C64) -> f64, r: f64) -> Result<f64> {
    let vals: Vec<f64> = angles().map(|u| h(u * r)).collect();
    if vals.iter().any(|v| v.is_nan()) {
        return Err(Error::Criterion(format!("log-domain circle mean at r = {r:e} is not a number")));
    }
    Ok(log_sum_exp(&vals) - (ANGULAR_NODES as f64).ln())
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    log_sum_exp(&[a, b])
}

fn rule(order: usize) -> Vec<(f64, f64)> {
    GaussLegendre::new(NonZeroUsize::new(order).expect("positive order")).as_node_weight_pairs().to_vec()
}

/// `∫_a^b g(r) dr` by Gauss–Legendre in `ln r`.
fn log_panel(q: &[(f64, f64)], a: f64, b: f64, g: &mut dyn FnMut(f64) -> Result<f64>) -> Result<f64> {
    let (la, lb) = (a.ln(), b.ln());
    let (mid, half) = (0.5 * (la + lb), 0.5 * (lb - la));
    let mut s = 0.0;
    for &(x, w) in q {
        let r = (mid + half * x).exp();
        s += w * g(r)? * r;
    }
    Ok(s * half)
}

/// Partial integrals `∫_{ε_k}^{ε₀} g(r) dr` along the ladder.
fn cumulative(ladder: &Ladder, g: &mut dyn FnMut(f64) -> Result<f64>) -> Result<Vec<(f64, f64)>> {
    let q = rule(SHELL_ORDER);
    let mut acc = 0.0;
    let mut hi = ladder.eps0;
    let mut out = Vec::with_capacity(ladder.levels);
    for eps in ladder.radii() {
        acc += log_panel(&q, eps, hi, g)?;
        if !acc.is_finite() {
            return Err(Error::Criterion(format!("partial integral is not finite at eps = {eps:e}")));
        }
        out.push((eps, acc));
        hi = eps;
    }
    Ok(out)
}

/// Least-squares slope over the last `FIT_POINTS` pairs.
fn trailing_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len().min(FIT_POINTS);
    let (x, y) = (&x[x.len() - n..], &y[y.len() - n..]);
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

fn full_slope(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let s = sxy / sxx;
    (s, my - s * mx)
}

fn loglog_inv(eps: f64) -> f64 {
    (1.0 / eps).ln().ln()
}

/// Partial integrals `t` against scale `x`: trailing slope, then Cauchy tail.
fn divergence_of(x: &[f64], t: &[f64]) -> (Divergence, f64) {
    let s = trailing_slope(x, t);
    let tail = (t[t.len() - 1] - t[t.len() - 2]).abs();
    let d = if s >= DIVERGENT_SLOPE {
        Divergence::Divergent
    } else if tail < CAUCHY_TAIL {
        Divergence::Convergent
    } else {
        Divergence::Inconclusive
    };
    (d, s)
}

/// Ratio tends to zero: trailing slope of `ln R` against `ln X`.
fn ratio_verdict(x: &[f64], r: &[f64]) -> (Verdict, f64) {
    if r.iter().all(|&v| v == 0.0) {
        return (Verdict::Satisfied, f64::NEG_INFINITY);
    }
    if r.iter().any(|&v| !(v > 0.0)) {
        return (Verdict::Inconclusive, f64::NAN);
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let lr: Vec<f64> = r.iter().map(|v| v.ln()).collect();
    let s = trailing_slope(&lx, &lr);
    let v = if s <= RATIO_ZERO_SLOPE {
        Verdict::Satisfied
    } else if s >= RATIO_FLAT_SLOPE {
        Verdict::Violated
    } else {
        Verdict::Inconclusive
    };
    (v, s)
}

/// Quantity bounded: trailing slope of `ln q` against `ln ln(1/ε)`.
fn bounded_verdict(x: &[f64], q: &[f64]) -> (Verdict, f64) {
    let tail = &q[q.len().saturating_sub(FIT_POINTS)..];
    if tail.iter().all(|&v| v.abs() < 1e-300) {
        return (Verdict::Satisfied, 0.0);
    }
    if tail.iter().any(|&v| !(v > 0.0)) {
        return (Verdict::Inconclusive, f64::NAN);
    }
    let lq: Vec<f64> = q.iter().map(|v| v.max(1e-300).ln()).collect();
    let s = trailing_slope(x, &lq);
    let v = if s >= UNBOUNDED_SLOPE {
        Verdict::Violated
    } else if s <= BOUNDED_SLOPE {
        Verdict::Satisfied
    } else {
        Verdict::Inconclusive
    };
    (v, s)
}

fn positive_mean(k: &Local<'_>, r: f64) -> Result<f64> {
    let m = circle_mean(k, r)?;
    if !(m > 0.0) {
        return Err(Error::Criterion(format!("circle mean k(r) = {m} at r = {r:e} is not positive")));
    }
    Ok(m)
}

fn verdict(criterion: Criterion, verdict: Verdict, trace: Vec<(f64, f64)>, slope: f64, params: Vec<(&str, f64)>, note: &str) -> CriterionVerdict {
    CriterionVerdict {
        criterion,
        verdict,
        trace,
        growth_exponent: slope,
        params: params.into_iter().map(|(n, v)| (n.to_string(), v)).collect(),
        note: note.to_string(),
    }
}

/// `∫_0^{ε₀} dr / (r k(r)) = ∞`: SATISFIED when the partial integrals grow
/// against `log log(1/ε)`, VIOLATED when they settle.
pub fn lehto_test(k: &Local<'_>, ladder: &Ladder) -> Result<CriterionVerdict> {
    let trace = cumulative(ladder, &mut |r| Ok(1.0 / (r * positive_mean(k, r)?)))?;
    let x: Vec<f64> = trace.iter().map(|p| loglog_inv(p.0)).collect();
    let t: Vec<f64> = trace.iter().map(|p| p.1).collect();
    let (d, s) = divergence_of(&x, &t);
    let v = match d {
        Divergence::Divergent => Verdict::Satisfied,
        Divergence::Convergent => Verdict::Violated,
        Divergence::Inconclusive => Verdict::Inconclusive,
    };
    Ok(verdict(Criterion::Lehto, v, trace, s, vec![("eps0", ladder.eps0)], "heuristic: divergence read from the dyadic growth of T(eps) against log log(1/eps)"))
}

/// `k(ε) = O(log 1/ε)`: boundedness of `k(ε)/log(1/ε)`.
pub fn mean_test(k: &Local<'_>, ladder: &Ladder) -> Result<CriterionVerdict> {
    let trace = ladder
        .radii()
        .into_iter()
        .map(|e| Ok((e, positive_mean(k, e)? / (1.0 / e).ln())))
        .collect::<Result<Vec<_>>>()?;
    let x: Vec<f64> = trace.iter().map(|p| loglog_inv(p.0)).collect();
    let q: Vec<f64> = trace.iter().map(|p| p.1).collect();
    let (v, s) = bounded_verdict(&x, &q);
    Ok(verdict(Criterion::Mean, v, trace, s, vec![("eps0", ladder.eps0)], "trace holds k(eps)/log(1/eps)"))
}

/// `∫_{ε<|z−z0|<ε₀} K dm/|z−z0|² = o(log²(1/ε))`.
pub fn cz_test(k: &Local<'_>, ladder: &Ladder) -> Result<CriterionVerdict> {
    let a = cumulative(ladder, &mut |r| Ok(TAU * circle_mean(k, r)? / r))?;
    let x: Vec<f64> = a.iter().map(|p| (1.0 / p.0).ln()).collect();
    let trace: Vec<(f64, f64)> = a.iter().zip(&x).map(|(&(e, v), l)| (e, v / (l * l))).collect();
    let r: Vec<f64> = trace.iter().map(|p| p.1).collect();
    let (v, s) = ratio_verdict(&x, &r);
    Ok(verdict(Criterion::Cz, v, trace, s, vec![("eps0", ladder.eps0)], "trace holds A(eps)/log^2(1/eps)"))
}

/// Family `ψ` with `I(ε) = ∫_ε^{ε₀} ψ(t) dt`.
#[derive(Clone)]
pub enum PsiFamily {
    /// `ψ(t) = 1/t`.
    Inverse,
    /// `ψ(t) = 1/(t log(e/t))`.
    InverseLog,
    Custom { name: String, psi: Arc<dyn Fn(f64) -> f64 + Send + Sync> },
}

impl fmt::Debug for PsiFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl PsiFamily {
    pub fn name(&self) -> String {
        match self {
            PsiFamily::Inverse => "1/t".into(),
            PsiFamily::InverseLog => "1/(t log(e/t))".into(),
            PsiFamily::Custom { name, .. } => name.clone(),
        }
    }

    pub fn psi(&self, t: f64) -> f64 {
        match self {
            PsiFamily::Inverse => 1.0 / t,
            PsiFamily::InverseLog => 1.0 / (t * (E / t).ln()),
            PsiFamily::Custom { psi, .. } => psi(t),
        }
    }

    /// `I(ε)`, closed form for the shipped families.
    pub fn integral(&self, eps: f64, eps0: f64) -> Result<f64> {
        let i = match self {
            PsiFamily::Inverse => (eps0 / eps).ln(),
            PsiFamily::InverseLog => (E / eps).ln().ln() - (E / eps0).ln().ln(),
            PsiFamily::Custom { .. } => {
                let q = rule(SHELL_ORDER);
                let panels = (eps0 / eps).log2().ceil().max(1.0) as usize;
                let ratio = (eps0 / eps).powf(1.0 / panels as f64);
                let mut s = 0.0;
                let mut hi = eps0;
                for _ in 0..panels {
                    let lo = hi / ratio;
                    s += log_panel(&q, lo.max(eps), hi, &mut |t| Ok(self.psi(t)))?;
                    hi = lo;
                }
                s
            }
        };
        if !i.is_finite() {
            return Err(Error::Criterion(format!("I({eps:e}) is not finite")));
        }
        Ok(i)
    }
}

/// `∫_{ε<|z−z0|<ε₀} K ψ²(|z−z0|) dm = o(I²(ε))`.
pub fn psi_condition_test(k: &Local<'_>, family: &PsiFamily, ladder: &Ladder) -> Result<CriterionVerdict> {
    let num = cumulative(ladder, &mut |r| {
        let p = family.psi(r);
        if !(p > 0.0) {
            return Err(Error::Criterion(format!("psi({r:e}) = {p} is not positive")));
        }
        Ok(TAU * circle_mean(k, r)? * p * p * r)
    })?;
    let mut trace = Vec::with_capacity(num.len());
    let mut x = Vec::with_capacity(num.len());
    for &(e, n) in &num {
        let i = family.integral(e, ladder.eps0)?;
        if !(i > 0.0) {
            return Err(Error::Criterion(format!("I({e:e}) = {i} is not positive")));
        }
        x.push(i);
        trace.push((e, n / (i * i)));
    }
    let r: Vec<f64> = trace.iter().map(|p| p.1).collect();
    let (v, s) = ratio_verdict(&x, &r);
    Ok(verdict(Criterion::Psi, v, trace, s, vec![("eps0", ladder.eps0)], &format!("psi = {}; trace holds numerator/I^2", family.name())))
}

/// Mean of `Q` over `B(z0, ε)` and its dispersion `⨍|Q − Q̃_ε|`.
fn disc_dispersion(q: &Local<'_>, eps: f64, rule: &[(f64, f64)]) -> Result<(f64, f64)> {
    let mut nodes = Vec::with_capacity(DISC_PANELS * rule.len());
    let mut hi = eps;
    for _ in 0..DISC_PANELS {
        let lo = 0.5 * hi;
        let (la, lb) = (lo.ln(), hi.ln());
        for &(x, w) in rule {
            let r = (0.5 * (la + lb) + 0.5 * (lb - la) * x).exp();
            nodes.push((r, w * 0.5 * (lb - la) * r * r));
        }
        hi = lo;
    }
    let vals: Vec<Vec<f64>> = nodes.iter().map(|&(r, _)| angles().map(|u| q(u * r)).collect()).collect();
    if vals.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Criterion(format!("Q is not finite on B(z0, {eps:e})")));
    }
    let area: f64 = nodes.iter().map(|&(_, w)| w * TAU).sum();
    let n = ANGULAR_NODES as f64;
    let mean = nodes.iter().zip(&vals).map(|(&(_, w), v)| w * TAU * v.iter().sum::<f64>() / n).sum::<f64>() / area;
    let disp = nodes
        .iter()
        .zip(&vals)
        .map(|(&(_, w), v)| w * TAU * v.iter().map(|x| (x - mean).abs()).sum::<f64>() / n)
        .sum::<f64>()
        / area;
    let scale = nodes.iter().zip(&vals).map(|(&(_, w), v)| w * TAU * v.iter().map(|x| x.abs()).sum::<f64>() / n).sum::<f64>() / area;
    // Rounding residue of a constant is not oscillation.
    Ok((mean, if disp <= 1e-13 * scale { 0.0 } else { disp }))
}

/// Finite mean oscillation at `z0`: `limsup ⨍_{B(z0,ε)} |Q − Q̃_ε| < ∞`.
pub fn fmo_test(q: &Local<'_>, eps: &[f64]) -> Result<CriterionVerdict> {
    if eps.len() < FIT_POINTS || eps.windows(2).any(|w| !(w[1] < w[0])) || !(eps[0] < 1.0) || !(eps[eps.len() - 1] > 0.0) {
        return Err(Error::InvalidParameter(format!("FMO needs >= {FIT_POINTS} strictly decreasing radii in (0, 1)")));
    }
    let gl = rule(DISC_ORDER);
    let trace = eps.iter().map(|&e| Ok((e, disc_dispersion(q, e, &gl)?.1))).collect::<Result<Vec<_>>>()?;
    let x: Vec<f64> = trace.iter().map(|p| loglog_inv(p.0)).collect();
    let d: Vec<f64> = trace.iter().map(|p| p.1).collect();
    let (v, s) = bounded_verdict(&x, &d);
    let limsup = d[d.len() - 3..].iter().copied().fold(0.0, f64::max);
    Ok(verdict(Criterion::Fmo, v, trace, s, vec![("eps0", eps[0]), ("limsup_estimate", limsup)], "trace holds the dispersion d(eps)"))
}

/// Default FMO radii: the first `FMO_LEVELS` ladder radii.
pub fn fmo_radii(eps0: f64) -> Result<Vec<f64>> {
    Ok(Ladder::new(eps0, FMO_LEVELS)?.radii())
}

/// Lower bound of `‖Q‖_*` over discs inside `region`: centres on a coarse
/// lattice, radii halving from the distance to `∂region` down to four spacings.
pub fn bmo_norm(q: &RealField64, region: &DomainSpec) -> Result<f64> {
    let g = *q.grid();
    let h = g.spacing();
    let stride = (g.n() / 16).max(1);
    let mut best: Option<f64> = None;
    for j in (0..g.n()).step_by(stride) {
        for i in (0..g.n()).step_by(stride) {
            let c = g.node(i, j);
            if !region.contains(c) {
                continue;
            }
            let mut r = region.distance_to_boundary(c);
            while r >= 4.0 * h {
                if let Some(m) = disc_oscillation(q, c, r) {
                    best = Some(best.map_or(m, |b: f64| b.max(m)));
                }
                r *= 0.5;
            }
        }
    }
    best.ok_or_else(|| Error::Criterion("region admits no disc of radius >= 4 grid spacings".into()))
}

fn disc_oscillation(q: &RealField64, c: C64, r: f64) -> Option<f64> {
    let g = q.grid();
    let (fi, fj) = g.fractional_index(c);
    let span = (r / g.spacing()).ceil() as isize + 1;
    let (ci, cj) = (fi.round() as isize, fj.round() as isize);
    let n = g.n() as isize;
    let mut vals = Vec::new();
    for j in (cj - span).max(0)..=(cj + span).min(n - 1) {
        for i in (ci - span).max(0)..=(ci + span).min(n - 1) {
            let k = g.index(i as usize, j as usize);
            let v = q.values()[k];
            if q.is_valid(k) && v.is_finite() && (g.node_at(k) - c).norm() < r {
                vals.push(v);
            }
        }
    }
    if vals.is_empty() {
        return None;
    }
    let m = vals.iter().sum::<f64>() / vals.len() as f64;
    Some(vals.iter().map(|v| (v - m).abs()).sum::<f64>() / vals.len() as f64)
}

/// `bmo_norm` of a sampled callable under grid refinement; growth of the
/// lower bound with `n` means the dominant is not in BMO. Non-finite samples
/// (a singular node) are masked.
pub fn bmo_refinement_test(q: &dyn Fn(C64) -> f64, region: &DomainSpec, sizes: &[usize]) -> Result<CriterionVerdict> {
    if sizes.len() < 2 {
        return Err(Error::InvalidParameter("BMO refinement needs at least two grid sizes".into()));
    }
    let (lo, hi) = region.bounding_box();
    let center = (lo + hi) * 0.5;
    let half = 0.5 * (hi.re - lo.re).max(hi.im - lo.im) * 1.05;
    let mut trace = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let g = Grid64::new(center, half, n)?;
        let vals: Vec<f64> = g.nodes().map(q).collect();
        let mask = vals.iter().map(|v| v.is_finite()).collect();
        let f = RealField64::from_values(g, vals.iter().map(|v| if v.is_finite() { *v } else { 0.0 }).collect())?.with_mask(mask)?;
        trace.push((g.spacing(), bmo_norm(&f, region)?));
    }
    let x: Vec<f64> = trace.iter().map(|p| (1.0 / p.0).ln()).collect();
    let lq: Vec<f64> = trace.iter().map(|p| p.1.max(1e-300).ln()).collect();
    let (s, _) = full_slope(&x, &lq);
    let v = if trace.iter().all(|p| p.1 < 1e-300) || s <= BOUNDED_SLOPE {
        Verdict::Satisfied
    } else if s >= UNBOUNDED_SLOPE {
        Verdict::Violated
    } else {
        Verdict::Inconclusive
    };
    Ok(verdict(Criterion::BmoDominant, v, trace, s, vec![], "trace holds (grid spacing, BMO lower bound); slope of ln bound against ln(1/h)"))
}

/// Convex non-decreasing `Φ: [0, ∞] → [0, ∞]`, represented through
/// `H = log Φ` so that tails never overflow.
#[derive(Clone)]
pub enum OrliczFunction {
    /// `e^{αt}`.
    Exp { alpha: f64 },
    /// `t^p`, `p ≥ 1`.
    Power { p: f64 },
    /// `exp(√(1+t))`.
    ExpSqrt,
    /// `exp(t / log(e+t))`.
    ExpOverLog,
    Custom { name: String, log_eval: Arc<dyn Fn(f64) -> f64 + Send + Sync> },
}

impl fmt::Debug for OrliczFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Sampled-lattice checks of an Orlicz function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OrliczReport {
    pub monotone: bool,
    pub convex: bool,
    /// `Φ⁻¹(Φ(t)) ≤ t` on the lattice.
    pub inverse_below: bool,
}

impl OrliczReport {
    pub fn valid(&self) -> bool {
        self.monotone && self.convex && self.inverse_below
    }
}

impl OrliczFunction {
    pub fn exp(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("exp rate alpha = {alpha} must be positive")));
        }
        Ok(OrliczFunction::Exp { alpha })
    }

    pub fn power(p: f64) -> Result<Self> {
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::InvalidParameter(format!("power p = {p} must be >= 1 for convexity")));
        }
        Ok(OrliczFunction::Power { p })
    }

    pub fn name(&self) -> String {
        match self {
            OrliczFunction::Exp { alpha } => format!("exp({alpha} t)"),
            OrliczFunction::Power { p } => format!("t^{p}"),
            OrliczFunction::ExpSqrt => "exp(sqrt(1+t))".into(),
            OrliczFunction::ExpOverLog => "exp(t/log(e+t))".into(),
            OrliczFunction::Custom { name, .. } => name.clone(),
        }
    }

    /// `H(t) = log Φ(t)`.
    pub fn log_eval(&self, t: f64) -> f64 {
        match self {
            OrliczFunction::Exp { alpha } => alpha * t,
            OrliczFunction::Power { p } => p * t.ln(),
            OrliczFunction::ExpSqrt => (1.0 + t).sqrt(),
            OrliczFunction::ExpOverLog => t / (E + t).ln(),
            OrliczFunction::Custom { log_eval, .. } => log_eval(t),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.log_eval(t).exp()
    }

    /// `H⁻¹(η) = inf{t ≥ 0 : H(t) ≥ η}`; `∞` when `H` stays below `η`.
    pub fn log_inverse(&self, eta: f64) -> f64 {
        if self.log_eval(0.0) >= eta {
            return 0.0;
        }
        let mut hi = 1.0;
        while self.log_eval(hi) < eta {
            hi *= 2.0;
            if !hi.is_finite() {
                return f64::INFINITY;
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.log_eval(mid) >= eta {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    /// Generalized inverse `Φ⁻¹(τ) = inf{t : Φ(t) ≥ τ}`.
    pub fn inverse(&self, tau: f64) -> f64 {
        self.log_inverse(tau.ln())
    }

    /// Monotonicity, midpoint convexity and the inverse inequality on
    /// `t = 0, 0.05, …, 50`, compared in the log domain.
    pub fn validate(&self) -> OrliczReport {
        let ts: Vec<f64> = (0..=1000).map(|i| i as f64 * 0.05).collect();
        let hs: Vec<f64> = ts.iter().map(|&t| self.log_eval(t)).collect();
        let tol = |h: f64| 1e-12 * (1.0 + h.abs());
        let monotone = hs.windows(2).all(|w| w[1] >= w[0] - tol(w[0]));
        let convex = (1..ts.len() - 1).all(|i| {
            let avg = log_add_exp(hs[i - 1], hs[i + 1]) - 2f64.ln();
            hs[i] <= avg + tol(avg) || hs[i] == f64::NEG_INFINITY
        });
        let inverse_below = ts.iter().zip(&hs).all(|(&t, &h)| self.log_inverse(h) <= t * (1.0 + 1e-12) + 1e-12);
        OrliczReport { monotone, convex, inverse_below }
    }

    /// Closed-form fate of `∫_Δ^∞ log Φ(t) dt/t²` for the shipped presets.
    pub fn symbolic_log_tail(&self) -> Option<Divergence> {
        match self {
            OrliczFunction::Exp { .. } | OrliczFunction::ExpOverLog => Some(Divergence::Divergent),
            OrliczFunction::Power { .. } | OrliczFunction::ExpSqrt => Some(Divergence::Convergent),
            OrliczFunction::Custom { .. } => None,
        }
    }

    /// Numerical fate of `∫_Δ^∞ log Φ(t) dt/t²`.
    pub fn numeric_log_tail(&self, delta: f64) -> Result<ConditionResult> {
        tail_condition("log-tail", delta, INTEGRAL_LEVELS, |t| self.log_eval(t) / (t * t))
    }
}

/// One truncated improper integral of the equivalence suite.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionResult {
    pub name: &'static str,
    pub divergence: Divergence,
    pub slope: f64,
    /// `(upper limit, partial integral)`.
    pub trace: Vec<(f64, f64)>,
}

/// `∫_a^{U_k} g` with `U_k = a·2^k`, fitted against `log(1 + log(U_k/a))`.
fn tail_condition(name: &'static str, a: f64, levels: usize, g: impl Fn(f64) -> f64) -> Result<ConditionResult> {
    let q = rule(TAIL_ORDER);
    let mut acc = 0.0;
    let mut trace = Vec::with_capacity(levels);
    let mut x = Vec::with_capacity(levels);
    for k in 1..=levels {
        let (lo, hi) = (a * ((k - 1) as f64).exp2(), a * (k as f64).exp2());
        acc += log_panel(&q, lo, hi, &mut |t| Ok(g(t)))?;
        if acc.is_nan() {
            return Err(Error::Criterion(format!("condition {name} is not a number at {hi:e}")));
        }
        trace.push((hi, acc));
        x.push((1.0 + (k as f64) * 2f64.ln()).ln());
    }
    let t: Vec<f64> = trace.iter().map(|p| p.1).collect();
    let (divergence, slope) = if acc == f64::INFINITY { (Divergence::Divergent, f64::INFINITY) } else { divergence_of(&x, &t) };
    Ok(ConditionResult { name, divergence, slope, trace })
}

/// The integral conditions that are mutually equivalent for convex `Φ`.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport {
    pub function: String,
    pub conditions: Vec<ConditionResult>,
    pub orlicz: OrliczReport,
    /// All conditions share one decided verdict.
    pub uniform: bool,
}

impl EquivalenceReport {
    pub fn verdicts(&self) -> Vec<Divergence> {
        self.conditions.iter().map(|c| c.divergence).collect()
    }
}

/// `∫H'(t)dt/t`, `∫H(t)dt/t²`, `∫_0 H(1/t)dt`, `∫dη/H⁻¹(η)` and
/// `∫dτ/(τΦ⁻¹(τ))`, each truncated on a dyadic ladder. The last one is
/// integrated in `ln τ`.
pub fn condition_equivalence_suite(phi: &OrliczFunction, delta: f64) -> Result<EquivalenceReport> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter(format!("Delta = {delta} must be positive")));
    }
    let h = |t: f64| phi.log_eval(t);
    let dh = |t: f64| {
        let s = 1e-6 * t.max(1.0);
        (h(t + s) - h((t - s).max(0.0))) / (t + s - (t - s).max(0.0))
    };
    let frer = tail_condition("H'(t)/t", delta, INTEGRAL_LEVELS, |t| dh(t) / t)?;
    let b = tail_condition("H(t)/t^2", delta, INTEGRAL_LEVELS, |t| h(t) / (t * t))?;
    // ∫_{δ*/2^k}^{δ*} H(1/t) dt with δ* = 1/Δ, tabulated against the lower limit.
    let c = {
        let q = rule(TAIL_ORDER);
        let ds = 1.0 / delta;
        let mut acc = 0.0;
        let mut trace = Vec::with_capacity(INTEGRAL_LEVELS);
        let mut x = Vec::with_capacity(INTEGRAL_LEVELS);
        for k in 1..=INTEGRAL_LEVELS {
            let (lo, hi) = (ds * (-(k as f64)).exp2(), ds * (-((k - 1) as f64)).exp2());
            acc += log_panel(&q, lo, hi, &mut |t| Ok(h(1.0 / t)))?;
            trace.push((lo, acc));
            x.push((1.0 + (k as f64) * 2f64.ln()).ln());
        }
        let t: Vec<f64> = trace.iter().map(|p| p.1).collect();
        let (divergence, slope) = divergence_of(&x, &t);
        ConditionResult { name: "H(1/t)", divergence, slope, trace }
    };
    let h0 = h(0.0).max(h(delta) - 1.0);
    let d = inverse_condition("1/H^-1(eta)", h0 + 1.0, |eta| phi.log_inverse(eta))?;
    let a = inverse_condition("1/(tau Phi^-1(tau)) in ln tau", h0 + 2f64.ln(), |s| phi.log_inverse(s))?;
    let conditions = vec![frer, b, c, d, a];
    let first = conditions[0].divergence;
    let uniform = first != Divergence::Inconclusive && conditions.iter().all(|c| c.divergence == first);
    Ok(EquivalenceReport { function: phi.name(), conditions, orlicz: phi.validate(), uniform })
}

/// `∫_{a}^{a + 2^k − 1} dη / inv(η)`, integrated in `w = ln(1 + η − a)`.
fn inverse_condition(name: &'static str, a: f64, inv: impl Fn(f64) -> f64) -> Result<ConditionResult> {
    let q = rule(TAIL_ORDER);
    let mut acc = 0.0;
    let mut trace = Vec::with_capacity(INTEGRAL_LEVELS);
    let mut x = Vec::with_capacity(INTEGRAL_LEVELS);
    for k in 1..=INTEGRAL_LEVELS {
        let (w0, w1) = (((k - 1) as f64) * 2f64.ln(), (k as f64) * 2f64.ln());
        let (mid, half) = (0.5 * (w0 + w1), 0.5 * (w1 - w0));
        let mut s = 0.0;
        for &(xq, wq) in &q {
            let w = mid + half * xq;
            let eta = a + w.exp_m1();
            let iv = inv(eta);
            if !(iv > 0.0) {
                return Err(Error::Criterion(format!("inverse vanishes at {eta:e}; start above H(+0)")));
            }
            s += wq * w.exp() / iv;
        }
        acc += s * half;
        trace.push((a + w1.exp_m1(), acc));
        x.push((1.0 + w1).ln());
    }
    let t: Vec<f64> = trace.iter().map(|p| p.1).collect();
    let (divergence, slope) = divergence_of(&x, &t);
    Ok(ConditionResult { name, divergence, slope, trace })
}

/// `∫_{B(z0,ε₀)} Φ(K) dm < ∞` together with `∫_Δ^∞ log Φ(t) dt/t² = ∞`.
pub fn orlicz_test(k: &Local<'_>, phi: &OrliczFunction, delta: f64, ladder: &Ladder) -> Result<CriterionVerdict> {
    let q = rule(SHELL_ORDER);
    let lphi = |d: C64| phi.log_eval(k(d));
    let mut log_acc = f64::NEG_INFINITY;
    let mut hi = ladder.eps0;
    let mut trace = Vec::with_capacity(ladder.levels);
    for eps in ladder.radii() {
        let (la, lb) = (eps.ln(), hi.ln());
        let (mid, half) = (0.5 * (la + lb), 0.5 * (lb - la));
        let mut terms = Vec::with_capacity(q.len());
        for &(x, w) in &q {
            let r = (mid + half * x).exp();
            terms.push((w * half * TAU).ln() + 2.0 * r.ln() + log_circle_mean(&lphi, r)?);
        }
        log_acc = log_add_exp(log_acc, log_sum_exp(&terms));
        trace.push((eps, log_acc));
        hi = eps;
    }
    let x: Vec<f64> = trace.iter().map(|p| loglog_inv(p.0)).collect();
    let lp: Vec<f64> = trace.iter().map(|p| p.1).collect();
    let n = lp.len();
    let slope = trailing_slope(&x, &lp);
    let rel_tail = -(lp[n - 2] - lp[n - 1]).exp_m1();
    let finite = if lp[n - 1] == f64::INFINITY || slope >= DIVERGENT_SLOPE {
        Divergence::Divergent
    } else if rel_tail < CAUCHY_TAIL {
        Divergence::Convergent
    } else {
        Divergence::Inconclusive
    };
    let tail = match phi.symbolic_log_tail() {
        Some(d) => d,
        None => phi.numeric_log_tail(delta)?.divergence,
    };
    let v = match (finite, tail) {
        (Divergence::Convergent, Divergence::Divergent) => Verdict::Satisfied,
        (Divergence::Divergent, _) | (_, Divergence::Convergent) => Verdict::Violated,
        _ => Verdict::Inconclusive,
    };
    let mut params = vec![("eps0", ladder.eps0), ("delta", delta)];
    let criterion = match phi {
        OrliczFunction::Exp { alpha } => {
            params.push(("alpha", *alpha));
            Criterion::Exp
        }
        _ => Criterion::Orlicz,
    };
    let note = format!("Phi = {}; integral {finite}, log-tail {tail}; trace holds ln of the partial integral", phi.name());
    Ok(verdict(criterion, v, trace, slope, params, &note))
}

/// `e^{αK}` integrable near `z0`.
pub fn exp_test(k: &Local<'_>, alpha: f64, ladder: &Ladder) -> Result<CriterionVerdict> {
    orlicz_test(k, &OrliczFunction::exp(alpha)?, 1.0, ladder)
}

/// Growth of `I(ε) = ∫_{ε<|z−z0|<ε₀} φ dm / (|z−z0| log(1/|z−z0|))²`
/// against `log log(1/ε)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthReport {
    pub trace: Vec<(f64, f64)>,
    /// Least-squares slope of `I` against `log log(1/ε)` over the whole trace.
    pub fitted_slope: f64,
    pub intercept: f64,
    /// Slope over the trailing fit window.
    pub local_slope: f64,
    pub pass: bool,
}

/// Passes when the trailing slope does not outgrow the overall fit, i.e. the
/// ratio `I(ε)/log log(1/ε)` stays bounded.
pub fn fmo_growth_check(phi: &Local<'_>, eps0: f64, eps: &[f64]) -> Result<GrowthReport> {
    let limit = (-E).exp();
    if !(eps0 > 0.0 && eps0 < limit) {
        return Err(Error::InvalidParameter(format!("eps0 = {eps0} must lie in (0, e^-e)")));
    }
    if eps.len() < FIT_POINTS || eps.windows(2).any(|w| !(w[1] < w[0])) || eps[0] > eps0 || !(eps[eps.len() - 1] > 0.0) {
        return Err(Error::InvalidParameter(format!("need >= {FIT_POINTS} strictly decreasing radii in (0, eps0]")));
    }
    let q = rule(SHELL_ORDER);
    let mut g = |r: f64| -> Result<f64> {
        let m = circle_mean(phi, r)?;
        if m < 0.0 {
            return Err(Error::Criterion(format!("phi has negative circle mean {m} at r = {r:e}")));
        }
        let l = (1.0 / r).ln();
        Ok(TAU * m / (r * l * l))
    };
    let mut acc = 0.0;
    let mut hi = eps0;
    let mut trace = Vec::with_capacity(eps.len());
    for &e in eps {
        if e < hi {
            let panels = (hi / e).log2().ceil().max(1.0) as usize;
            let ratio = (hi / e).powf(1.0 / panels as f64);
            let mut top = hi;
            for _ in 0..panels {
                let lo = (top / ratio).max(e);
                acc += log_panel(&q, lo, top, &mut g)?;
                top = lo;
            }
        }
        trace.push((e, acc));
        hi = e;
    }
    let x: Vec<f64> = trace.iter().map(|p| loglog_inv(p.0)).collect();
    let y: Vec<f64> = trace.iter().map(|p| p.1).collect();
    let (fitted_slope, intercept) = full_slope(&x, &y);
    let local_slope = trailing_slope(&x, &y);
    let pass = local_slope.is_finite() && local_slope <= 1.1 * fitted_slope.max(0.0) + 1e-9;
    Ok(GrowthReport { trace, fitted_slope, intercept, local_slope, pass })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ladder() -> Ladder {
        Ladder::new(0.5 * (-E).exp(), INTEGRAL_LEVELS).unwrap()
    }

    fn r(d: C64) -> f64 {
        d.norm()
    }

    #[test]
    fn circle_means() {
        assert!((circle_mean(&|_| 1.0, 0.3).unwrap() - 1.0).abs() < 1e-15);
        let lg = |d: C64| (1.0 / r(d)).ln();
        assert!((circle_mean(&lg, 1e-40).unwrap() - (1e40f64).ln()).abs() < 1e-12);
        let tilt = |d: C64| 1.0 + d.re / r(d);
        assert!((circle_mean(&tilt, 0.1).unwrap() - 1.0).abs() < 1e-14);
        let g = Grid64::centered(1.0, 64).unwrap();
        let f = RealField64::from_fn(g, |_| 2.0);
        assert!(circle_mean_field(&f, C64::new(0.0, 0.0), 1e-3).is_err());
        assert!((circle_mean_field(&f, C64::new(0.0, 0.0), 0.5).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn lehto_examples() {
        assert_eq!(lehto_test(&|_| 3.0, &ladder()).unwrap().verdict, Verdict::Satisfied);
        assert_eq!(lehto_test(&|d| (1.0 / r(d)).ln(), &ladder()).unwrap().verdict, Verdict::Satisfied);
        let v = lehto_test(&|d| 1.0 / r(d), &ladder()).unwrap();
        assert_eq!(v.verdict, Verdict::Violated);
        let l = ladder();
        let (e, t) = v.trace[v.trace.len() - 1];
        assert!((t - (l.eps0 - e)).abs() < 1e-12);
        assert!(lehto_test(&|_| 0.0, &l).is_err());
    }

    #[test]
    fn cz_examples() {
        let l = ladder();
        let v = cz_test(&|_| 1.0, &l).unwrap();
        assert_eq!(v.verdict, Verdict::Satisfied);
        let (e, ratio) = v.trace[10];
        assert!((ratio * (1.0 / e).ln().powi(2) - TAU * (l.eps0 / e).ln()).abs() < 1e-9);
        assert_eq!(cz_test(&|d| (1.0 / r(d)).ln(), &l).unwrap().verdict, Verdict::Violated);
        assert_eq!(cz_test(&|d| (1.0 / r(d)).ln().sqrt(), &l).unwrap().verdict, Verdict::Satisfied);
    }

    #[test]
    fn psi_examples() {
        let l = ladder();
        let v = psi_condition_test(&|_| 1.0, &PsiFamily::Inverse, &l).unwrap();
        assert_eq!(v.verdict, Verdict::Satisfied);
        let (e, ratio) = v.trace[50];
        assert!((ratio - TAU / (l.eps0 / e).ln()).abs() < 1e-9);
        let compat = psi_condition_test(&|d| (E / r(d)).ln(), &PsiFamily::InverseLog, &l).unwrap();
        assert_eq!(compat.verdict, Verdict::Satisfied);
        let bad = psi_condition_test(&|d| r(d).powi(-2), &PsiFamily::Inverse, &l).unwrap();
        assert_eq!(bad.verdict, Verdict::Violated);
        let custom = PsiFamily::Custom { name: "1/t".into(), psi: Arc::new(|t| 1.0 / t) };
        assert!((custom.integral(1e-5, 0.1).unwrap() - 1e4f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn fmo_examples() {
        let eps = fmo_radii(0.05).unwrap();
        let c = fmo_test(&|_| 2.0, &eps).unwrap();
        assert_eq!(c.verdict, Verdict::Satisfied);
        assert!(c.trace.iter().all(|p| p.1 == 0.0));
        assert_eq!(fmo_test(&|d| (1.0 / r(d)).ln(), &eps).unwrap().verdict, Verdict::Satisfied);
        let inv = fmo_test(&|d| 1.0 / r(d), &eps).unwrap();
        assert_eq!(inv.verdict, Verdict::Violated);
        // Dispersion of 1/r scales exactly like 1/ε.
        let (e1, d1) = inv.trace[5];
        let (e2, d2) = inv.trace[6];
        assert!((d2 / d1 - e1 / e2).abs() < 1e-6);
    }

    #[test]
    fn bmo_examples() {
        let disk = DomainSpec::disk(C64::new(0.0, 0.0), 1.0, 128).unwrap();
        let g = Grid64::centered(1.05, 64).unwrap();
        assert!(bmo_norm(&RealField64::from_fn(g, |_| 3.0), &disk).unwrap() < 1e-14);
        let sizes = [64, 128, 256];
        assert_eq!(bmo_refinement_test(&|z| (1.0 / z.norm()).ln(), &disk, &sizes).unwrap().verdict, Verdict::Satisfied);
        assert_eq!(bmo_refinement_test(&|z| 1.0 / z.norm(), &disk, &sizes).unwrap().verdict, Verdict::Violated);
    }

    #[test]
    fn orlicz_presets_are_valid() {
        for phi in [
            OrliczFunction::exp(1.0).unwrap(),
            OrliczFunction::power(2.0).unwrap(),
            OrliczFunction::ExpSqrt,
            OrliczFunction::ExpOverLog,
        ] {
            assert!(phi.validate().valid(), "{phi:?}: {:?}", phi.validate());
        }
        assert!((OrliczFunction::exp(1.0).unwrap().eval(2.0) - E * E).abs() < 1e-12);
        let bad = OrliczFunction::Custom { name: "sqrt".into(), log_eval: Arc::new(|t: f64| 0.5 * t.ln()) };
        assert!(!bad.validate().convex);
        assert!(OrliczFunction::power(0.5).is_err());
        assert_eq!(OrliczFunction::exp(1.0).unwrap().inverse(E), 1.0);
    }

    #[test]
    fn equivalence_suite() {
        use Divergence::*;
        for (phi, expect) in [
            (OrliczFunction::exp(0.7).unwrap(), Divergent),
            (OrliczFunction::power(3.0).unwrap(), Convergent),
            (OrliczFunction::ExpSqrt, Convergent),
            (OrliczFunction::ExpOverLog, Divergent),
        ] {
            let rep = condition_equivalence_suite(&phi, 1.0).unwrap();
            assert!(rep.uniform, "{}: {:?}", rep.function, rep.verdicts());
            assert_eq!(rep.verdicts()[0], expect, "{}", rep.function);
            assert_eq!(phi.numeric_log_tail(1.0).unwrap().divergence, expect);
        }
    }

    #[test]
    fn orlicz_examples() {
        let l = ladder();
        let exp = OrliczFunction::exp(0.5).unwrap();
        assert_eq!(orlicz_test(&|d| (E / r(d)).ln(), &exp, 1.0, &l).unwrap().verdict, Verdict::Satisfied);
        assert_eq!(orlicz_test(&|d| 1.0 / r(d), &exp, 1.0, &l).unwrap().verdict, Verdict::Violated);
        let pw = OrliczFunction::power(2.0).unwrap();
        assert_eq!(orlicz_test(&|_| 1.0, &pw, 1.0, &l).unwrap().verdict, Verdict::Violated);
        assert_eq!(exp_test(&|_| 1.0, 0.5, &l).unwrap().criterion, Criterion::Exp);
    }

    #[test]
    fn growth_examples() {
        let eps0 = (-5f64).exp2();
        let eps: Vec<f64> = (5..=15).map(|k| (-(k as f64)).exp2()).collect();
        let log = fmo_growth_check(&|d| (1.0 / r(d)).ln(), eps0, &eps).unwrap();
        assert!((log.fitted_slope - TAU).abs() < 1e-6 * TAU, "{}", log.fitted_slope);
        assert!(log.pass);
        let one = fmo_growth_check(&|_| 1.0, eps0, &eps).unwrap();
        let (e, i) = one.trace[one.trace.len() - 1];
        assert!((i - TAU * (1.0 / (1.0 / eps0).ln() - 1.0 / (1.0 / e).ln())).abs() < 1e-10);
        assert!(one.pass);
        assert!(fmo_growth_check(&|_| 0.0, eps0, &eps).unwrap().trace.iter().all(|p| p.1 == 0.0));
        let big = fmo_growth_check(&|d| (1.0 / r(d)).ln().powi(2), eps0, &eps).unwrap();
        assert!(!big.pass);
    }

    #[test]
    fn ladder_validation() {
        assert!(Ladder::new(1.5, 10).is_err());
        assert!(Ladder::new(0.1, 2).is_err());
        let r = Ladder::new(0.1, 5).unwrap().radii();
        assert!(r.windows(2).all(|w| w[1] < w[0]));
        assert_eq!(Ladder::resolution_limited(0.1, 0.1 / 64.0).unwrap().levels, 6);
    }
}
