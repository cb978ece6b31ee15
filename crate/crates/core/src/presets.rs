//! Named example families: Beltrami coefficients, dilatation dominants,
//! Orlicz functions, boundary data, sources and domains.

use std::collections::BTreeMap;
use std::f64::consts::E;

use crate::criteria::OrliczFunction;
use crate::domain::{BoundaryData, DomainSpec};
use crate::error::{Error, Result};
use crate::{ComplexField64, Grid64, RealField64, C64};

/// Preset parameters: scalars are length-1 lists, points `[re, im]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Params(pub BTreeMap<String, Vec<f64>>);

impl Params {
    pub fn new() -> Self {
        Params::default()
    }

    pub fn with(mut self, key: &str, v: f64) -> Self {
        self.0.insert(key.to_string(), vec![v]);
        self
    }

    pub fn with_point(mut self, key: &str, z: C64) -> Self {
        self.0.insert(key.to_string(), vec![z.re, z.im]);
        self
    }

    pub fn scalar(&self, key: &str, default: Option<f64>) -> Result<f64> {
        match self.0.get(key) {
            Some(v) if v.len() == 1 && v[0].is_finite() => Ok(v[0]),
            Some(v) => Err(Error::InvalidParameter(format!("parameter `{key}` must be one finite number, got {v:?}"))),
            None => default.ok_or_else(|| Error::InvalidParameter(format!("missing parameter `{key}`"))),
        }
    }

    pub fn point(&self, key: &str, default: Option<C64>) -> Result<C64> {
        match self.0.get(key) {
            Some(v) if v.len() == 2 && v.iter().all(|x| x.is_finite()) => Ok(C64::new(v[0], v[1])),
            Some(v) => Err(Error::InvalidParameter(format!("parameter `{key}` must be a point [re, im], got {v:?}"))),
            None => default.ok_or_else(|| Error::InvalidParameter(format!("missing parameter `{key}`"))),
        }
    }

    pub fn list(&self, key: &str) -> Option<&[f64]> {
        self.0.get(key).map(|v| v.as_slice())
    }

    /// Rejects keys outside `allowed`.
    pub fn expect_keys(&self, allowed: &[&str]) -> Result<()> {
        match self.0.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(Error::InvalidParameter(format!("unknown parameter `{k}` (expected one of {allowed:?})"))),
            None => Ok(()),
        }
    }
}

fn unit(d: C64) -> C64 {
    let r = d.norm();
    if r == 0.0 {
        C64::new(0.0, 0.0)
    } else {
        (d / r) * (d / r)
    }
}

/// Coefficient with dilatation `k ≥ 1` whose tangent dilatation about `z0`
/// is `k`: `μ = −((k−1)/(k+1))·(z−z0)/conj(z−z0)`.
fn tangent_maximal(k: f64, d: C64) -> C64 {
    -unit(d) * ((k - 1.0) / (k + 1.0))
}

/// Beltrami coefficient families.
#[derive(Debug, Clone, PartialEq)]
pub enum MuPreset {
    Zero,
    /// `μ = ((K−1)/(K+1))·z/z̄`, the coefficient of `z|z|^{K−1}`.
    RadialStretch { k: f64 },
    /// `μ = k·(z−z0)/conj(z−z0)` with real `|k| < 1`, so `K^T = (1−k)/(1+k)`.
    Tangent { k: f64, z0: C64 },
    /// `K^T(z, z0) = max(1, log^λ(e/|z−z0|))`, coefficient aligned so `K^T = K`.
    LogDegenerate { lambda: f64, z0: C64 },
    /// `μ = ((K−1)/(K+1))·z/z̄` in the unit disk with `K` from a radial dominant
    /// of `1 − |z|`, and 0 outside.
    RadialDilatation { q: QPreset },
}

impl MuPreset {
    pub fn from_name(name: &str, p: &Params) -> Result<Self> {
        let origin = Some(C64::new(0.0, 0.0));
        let mu = match name {
            "zero" => {
                p.expect_keys(&[])?;
                MuPreset::Zero
            }
            "radial-stretch" => {
                p.expect_keys(&["K"])?;
                MuPreset::RadialStretch { k: p.scalar("K", None)? }
            }
            "tangent" => {
                p.expect_keys(&["k", "z0"])?;
                MuPreset::Tangent { k: p.scalar("k", None)?, z0: p.point("z0", origin)? }
            }
            "log-degenerate" => {
                p.expect_keys(&["lambda", "z0"])?;
                MuPreset::LogDegenerate { lambda: p.scalar("lambda", None)?, z0: p.point("z0", Some(C64::new(1.0, 0.0)))? }
            }
            "exp-class" => {
                p.expect_keys(&[])?;
                MuPreset::RadialDilatation { q: QPreset::ExpIntegrable }
            }
            "boundary-power" => {
                p.expect_keys(&["p"])?;
                MuPreset::RadialDilatation { q: QPreset::BoundaryPower { p: p.scalar("p", None)? } }
            }
            _ => return Err(Error::UnknownPreset(format!("mu preset `{name}`"))),
        };
        mu.validate()?;
        Ok(mu)
    }

    fn validate(&self) -> Result<()> {
        let bad = |what: String| Err(Error::InvalidParameter(what));
        match self {
            MuPreset::RadialStretch { k } if !(*k >= 1.0 && k.is_finite()) => {
                bad(format!("radial-stretch K = {k} must be finite and >= 1 (ellipticity bound |mu| < 1)"))
            }
            MuPreset::Tangent { k, .. } if !(k.abs() < 1.0) => bad(format!("tangent |k| = {} violates the ellipticity bound |mu| < 1", k.abs())),
            MuPreset::LogDegenerate { lambda, .. } if !(*lambda > 0.0 && lambda.is_finite()) => {
                bad(format!("log-degenerate lambda = {lambda} must be positive"))
            }
            MuPreset::RadialDilatation { q } => q.validate(),
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> String {
        match self {
            MuPreset::Zero => "zero".into(),
            MuPreset::RadialStretch { k } => format!("radial-stretch K={k}"),
            MuPreset::Tangent { k, z0 } => format!("tangent k={k} z0={z0}"),
            MuPreset::LogDegenerate { lambda, z0 } => format!("log-degenerate lambda={lambda} z0={z0}"),
            MuPreset::RadialDilatation { q } => format!("radial-dilatation {}", q.name()),
        }
    }

    pub fn eval(&self, z: C64) -> C64 {
        let zero = C64::new(0.0, 0.0);
        match self {
            MuPreset::Zero => zero,
            MuPreset::RadialStretch { k } => unit(z) * ((k - 1.0) / (k + 1.0)),
            MuPreset::Tangent { k, z0 } => unit(z - z0) * *k,
            MuPreset::LogDegenerate { lambda, z0 } => {
                let d = z - z0;
                if d.norm() == 0.0 {
                    return zero;
                }
                tangent_maximal(log_power(d.norm(), *lambda), d)
            }
            MuPreset::RadialDilatation { q } => {
                if z.norm() >= 1.0 {
                    return zero;
                }
                let k = q.radial(1.0 - z.norm());
                unit(z) * ((k - 1.0) / (k + 1.0))
            }
        }
    }

    pub fn field(&self, grid: Grid64) -> ComplexField64 {
        ComplexField64::from_fn(grid, |z| self.eval(z))
    }

    /// Dilatation quotient at `z`, evaluated without forming `μ` where that
    /// would round to modulus 1.
    pub fn dilatation(&self, z: C64) -> f64 {
        match self {
            MuPreset::LogDegenerate { lambda, z0 } => log_power((z - z0).norm(), *lambda),
            MuPreset::RadialDilatation { q } if z.norm() < 1.0 => q.radial(1.0 - z.norm()),
            _ => {
                let m = self.eval(z).norm();
                (1.0 + m) / (1.0 - m)
            }
        }
    }

    /// Local tangent dilatation `d ↦ K^T(z0 + d, z0)`.
    pub fn tangent_local(&self, z0: C64) -> impl Fn(C64) -> f64 + '_ {
        move |d: C64| match self {
            MuPreset::LogDegenerate { lambda, z0: c } if *c == z0 => log_power(d.norm(), *lambda),
            _ => crate::dilatation::tangent_value(self.eval(z0 + d), d, C64::new(0.0, 0.0)),
        }
    }
}

fn log_power(r: f64, lambda: f64) -> f64 {
    if r == 0.0 {
        return f64::INFINITY;
    }
    (E / r).ln().max(1.0).powf(lambda)
}

/// Real dominants `Q` of the tangent dilatation, as functions of the offset
/// from their singular point.
#[derive(Debug, Clone, PartialEq)]
pub enum QPreset {
    Const { c: f64 },
    /// `max(1, log(e/r))`.
    Log,
    /// `max(1, log(e/r))^λ`.
    PowLog { lambda: f64 },
    /// `1/r`.
    InvR,
    /// `1 + log(e/(1−|z|))` in the unit disk, 1 outside; singular on `|z| = 1`.
    ExpIntegrable,
    /// `(1−|z|)^{−p}` in the unit disk, 1 outside.
    BoundaryPower { p: f64 },
}

impl QPreset {
    pub fn from_name(name: &str, p: &Params) -> Result<Self> {
        let q = match name {
            "const" => {
                p.expect_keys(&["c"])?;
                QPreset::Const { c: p.scalar("c", Some(1.0))? }
            }
            "log" => {
                p.expect_keys(&[])?;
                QPreset::Log
            }
            "pow-log" => {
                p.expect_keys(&["lambda"])?;
                QPreset::PowLog { lambda: p.scalar("lambda", None)? }
            }
            "inv-r" => {
                p.expect_keys(&[])?;
                QPreset::InvR
            }
            "exp-integrable" => {
                p.expect_keys(&[])?;
                QPreset::ExpIntegrable
            }
            "boundary-power" => {
                p.expect_keys(&["p"])?;
                QPreset::BoundaryPower { p: p.scalar("p", None)? }
            }
            _ => return Err(Error::UnknownPreset(format!("Q preset `{name}`"))),
        };
        q.validate()?;
        Ok(q)
    }

    fn validate(&self) -> Result<()> {
        match self {
            QPreset::Const { c } if !(*c >= 1.0) => Err(Error::InvalidParameter(format!("const c = {c} must be >= 1"))),
            QPreset::PowLog { lambda } if !(*lambda > 0.0 && lambda.is_finite()) => {
                Err(Error::InvalidParameter(format!("pow-log lambda = {lambda} must be positive")))
            }
            QPreset::BoundaryPower { p } if !(*p > 0.0 && p.is_finite()) => Err(Error::InvalidParameter(format!("boundary-power p = {p} must be positive"))),
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> String {
        match self {
            QPreset::Const { c } => format!("const {c}"),
            QPreset::Log => "log".into(),
            QPreset::PowLog { lambda } => format!("pow-log {lambda}"),
            QPreset::InvR => "inv-r".into(),
            QPreset::ExpIntegrable => "exp-integrable".into(),
            QPreset::BoundaryPower { p } => format!("boundary-power {p}"),
        }
    }

    /// Profile in the distance `s = 1 − |z|` to the unit circle (boundary families).
    fn radial(&self, s: f64) -> f64 {
        match self {
            QPreset::ExpIntegrable => 1.0 + (E / s).ln(),
            QPreset::BoundaryPower { p } => s.powf(-p),
            other => other.local(C64::new(s, 0.0), C64::new(0.0, 0.0)),
        }
    }

    /// `Q(z0 + d)`. Point singularities sit at `d = 0`; boundary families are
    /// evaluated with `1 − |z0 + d|` formed without cancellation.
    pub fn local(&self, d: C64, z0: C64) -> f64 {
        let r = d.norm();
        match self {
            QPreset::Const { c } => *c,
            QPreset::Log => log_power(r, 1.0),
            QPreset::PowLog { lambda } => log_power(r, *lambda),
            QPreset::InvR => 1.0 / r,
            QPreset::ExpIntegrable | QPreset::BoundaryPower { .. } => {
                let z = z0 + d;
                // 1 − |z0 + d| = (1 − |z0|² − 2 Re(z̄0 d) − |d|²) / (1 + |z|)
                let num = (1.0 - z0.norm_sqr()) - 2.0 * (z0.conj() * d).re - d.norm_sqr();
                let s = num / (1.0 + z.norm());
                if s <= 0.0 {
                    1.0
                } else {
                    self.radial(s)
                }
            }
        }
    }

    pub fn at(&self, z: C64) -> f64 {
        self.local(z, C64::new(0.0, 0.0))
    }
}

/// Orlicz function by name.
pub fn orlicz_from_name(name: &str, p: &Params) -> Result<OrliczFunction> {
    match name {
        "exp" => {
            p.expect_keys(&["alpha"])?;
            OrliczFunction::exp(p.scalar("alpha", Some(1.0))?)
        }
        "power" => {
            p.expect_keys(&["p"])?;
            OrliczFunction::power(p.scalar("p", None)?)
        }
        "exp-sqrt" => {
            p.expect_keys(&[])?;
            Ok(OrliczFunction::ExpSqrt)
        }
        "exp-over-log" => {
            p.expect_keys(&[])?;
            Ok(OrliczFunction::ExpOverLog)
        }
        _ => Err(Error::UnknownPreset(format!("Phi preset `{name}`"))),
    }
}

/// Boundary data families.
#[derive(Debug, Clone, PartialEq)]
pub enum PhiPreset {
    Const { c: f64 },
    /// `cos θ` about the domain centroid (the trace of `Re z` on the unit circle).
    CosHarmonic,
    /// Piecewise-linear periodic table of `(θ, value)` about the centroid.
    Table { points: Vec<(f64, f64)> },
}

impl PhiPreset {
    pub fn from_name(name: &str, p: &Params) -> Result<Self> {
        match name {
            "const" => {
                p.expect_keys(&["c"])?;
                Ok(PhiPreset::Const { c: p.scalar("c", Some(0.0))? })
            }
            "cos-harmonic" | "cos" => {
                p.expect_keys(&[])?;
                Ok(PhiPreset::CosHarmonic)
            }
            "table" => {
                p.expect_keys(&["theta", "value"])?;
                let (t, v) = (p.list("theta").unwrap_or(&[]), p.list("value").unwrap_or(&[]));
                if t.len() != v.len() || t.is_empty() {
                    return Err(Error::InvalidParameter("table needs equally long, non-empty `theta` and `value` lists".into()));
                }
                Ok(PhiPreset::Table { points: t.iter().copied().zip(v.iter().copied()).collect() })
            }
            _ => Err(Error::UnknownPreset(format!("phi preset `{name}`"))),
        }
    }

    pub fn boundary_data(&self, domain: &DomainSpec) -> Result<BoundaryData> {
        match self {
            PhiPreset::Const { c } => BoundaryData::constant(domain, *c),
            PhiPreset::CosHarmonic => BoundaryData::cos_angle(domain, domain.centroid()),
            PhiPreset::Table { points } => BoundaryData::from_angle_table(domain, domain.centroid(), points),
        }
    }
}

/// Source families for `σ` and `g`.
#[derive(Debug, Clone, PartialEq)]
pub enum SourcePreset {
    Zero,
    /// `value` on `|z − center| < radius`.
    DiskIndicator { center: C64, radius: f64, value: f64 },
    /// `amplitude·exp(−|z−center|²/width²)`.
    Gaussian { center: C64, width: f64, amplitude: f64 },
}

impl SourcePreset {
    pub fn from_name(name: &str, p: &Params) -> Result<Self> {
        let origin = Some(C64::new(0.0, 0.0));
        let s = match name {
            "zero" => {
                p.expect_keys(&[])?;
                SourcePreset::Zero
            }
            "disk-indicator" => {
                p.expect_keys(&["center", "radius", "value"])?;
                SourcePreset::DiskIndicator {
                    center: p.point("center", origin)?,
                    radius: p.scalar("radius", Some(0.5))?,
                    value: p.scalar("value", Some(1.0))?,
                }
            }
            "gaussian" => {
                p.expect_keys(&["center", "width", "amplitude"])?;
                SourcePreset::Gaussian {
                    center: p.point("center", origin)?,
                    width: p.scalar("width", Some(0.2))?,
                    amplitude: p.scalar("amplitude", Some(1.0))?,
                }
            }
            _ => return Err(Error::UnknownPreset(format!("source preset `{name}`"))),
        };
        match s {
            SourcePreset::DiskIndicator { radius, .. } if !(radius > 0.0) => Err(Error::InvalidParameter(format!("radius = {radius} must be positive"))),
            SourcePreset::Gaussian { width, .. } if !(width > 0.0) => Err(Error::InvalidParameter(format!("width = {width} must be positive"))),
            s => Ok(s),
        }
    }

    pub fn eval(&self, z: C64) -> f64 {
        match self {
            SourcePreset::Zero => 0.0,
            SourcePreset::DiskIndicator { center, radius, value } => {
                if (z - center).norm() < *radius {
                    *value
                } else {
                    0.0
                }
            }
            SourcePreset::Gaussian { center, width, amplitude } => amplitude * (-(z - center).norm_sqr() / (width * width)).exp(),
        }
    }

    pub fn real_field(&self, grid: Grid64) -> RealField64 {
        RealField64::from_fn(grid, |z| self.eval(z))
    }

    pub fn complex_field(&self, grid: Grid64) -> ComplexField64 {
        ComplexField64::from_fn(grid, |z| C64::new(self.eval(z), 0.0))
    }
}

/// Domain families.
#[derive(Debug, Clone, PartialEq)]
pub enum DomainPreset {
    Disk { center: C64, radius: f64 },
    Ellipse { center: C64, a: f64, b: f64 },
    Polygon { vertices: Vec<C64> },
}

/// Default number of boundary samples.
pub const DEFAULT_SAMPLES: usize = 256;

impl DomainPreset {
    pub fn from_name(name: &str, p: &Params) -> Result<Self> {
        let origin = Some(C64::new(0.0, 0.0));
        match name {
            "disk" => {
                p.expect_keys(&["center", "radius", "samples"])?;
                Ok(DomainPreset::Disk { center: p.point("center", origin)?, radius: p.scalar("radius", Some(1.0))? })
            }
            "ellipse" => {
                p.expect_keys(&["center", "a", "b", "samples"])?;
                Ok(DomainPreset::Ellipse { center: p.point("center", origin)?, a: p.scalar("a", None)?, b: p.scalar("b", None)? })
            }
            "polygon" => {
                p.expect_keys(&["vertices", "samples"])?;
                let v = p.list("vertices").ok_or_else(|| Error::InvalidParameter("polygon needs `vertices`".into()))?;
                if v.len() % 2 != 0 || v.len() < 6 {
                    return Err(Error::InvalidParameter("polygon `vertices` must be >= 3 [re, im] pairs".into()));
                }
                Ok(DomainPreset::Polygon { vertices: v.chunks(2).map(|c| C64::new(c[0], c[1])).collect() })
            }
            _ => Err(Error::UnknownPreset(format!("domain preset `{name}`"))),
        }
    }

    pub fn build(&self, samples: usize) -> Result<DomainSpec> {
        match self {
            DomainPreset::Disk { center, radius } => DomainSpec::disk(*center, *radius, samples),
            DomainPreset::Ellipse { center, a, b } => DomainSpec::ellipse(*center, *a, *b, samples),
            DomainPreset::Polygon { vertices } => DomainSpec::polygon(vertices, samples),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn documented_values() {
        let rs = MuPreset::from_name("radial-stretch", &Params::new().with("K", 2.0)).unwrap();
        assert!((rs.eval(C64::new(0.5, 0.0)) - C64::new(1.0 / 3.0, 0.0)).norm() < 1e-15);
        assert!((orlicz_from_name("exp", &Params::new().with("alpha", 1.0)).unwrap().eval(2.0) - E * E).abs() < 1e-12);
        let ld = MuPreset::from_name("log-degenerate", &Params::new().with("lambda", 0.5).with_point("z0", C64::new(1.0, 0.0))).unwrap();
        let z = C64::new(1.0 - (-4f64).exp(), 0.0);
        assert!((ld.dilatation(z) - 5f64.sqrt()).abs() < 1e-12);
        let m = ld.eval(z).norm();
        assert!(((1.0 + m) / (1.0 - m) - 5f64.sqrt()).abs() < 1e-9);
        assert!((ld.tangent_local(C64::new(1.0, 0.0))(z - C64::new(1.0, 0.0)) - 5f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn rejections() {
        assert!(matches!(MuPreset::from_name("nope", &Params::new()), Err(Error::UnknownPreset(_))));
        let e = MuPreset::from_name("tangent", &Params::new().with("k", 1.2)).unwrap_err();
        assert!(e.to_string().contains("ellipticity"));
        assert!(MuPreset::from_name("radial-stretch", &Params::new().with("K", 2.0).with("q", 1.0)).is_err());
        assert!(QPreset::from_name("pow-log", &Params::new().with("lambda", -1.0)).is_err());
        assert!(orlicz_from_name("power", &Params::new().with("p", 0.5)).is_err());
    }

    #[test]
    fn ellipticity_on_lattice() {
        let g = Grid64::centered(1.5, 64).unwrap();
        let presets = [
            MuPreset::Zero,
            MuPreset::RadialStretch { k: 4.0 },
            MuPreset::Tangent { k: -0.7, z0: C64::new(0.3, 0.1) },
            MuPreset::LogDegenerate { lambda: 0.5, z0: C64::new(1.0, 0.0) },
            MuPreset::RadialDilatation { q: QPreset::ExpIntegrable },
            MuPreset::RadialDilatation { q: QPreset::BoundaryPower { p: 2.0 } },
        ];
        for p in &presets {
            assert!(p.field(g).values().iter().all(|m| m.norm() < 1.0), "{}", p.name());
        }
    }

    #[test]
    fn tangent_dilatations() {
        let t = MuPreset::Tangent { k: -0.5, z0: C64::new(0.0, 0.0) };
        assert!((t.tangent_local(C64::new(0.0, 0.0))(C64::new(0.1, 0.2)) - 3.0).abs() < 1e-12);
        let q = QPreset::ExpIntegrable;
        let z0 = C64::new(1.0, 0.0);
        let d = C64::new(-1e-30, 0.0);
        assert!((q.local(d, z0) - (1.0 + (E / 1e-30).ln())).abs() < 1e-9);
        assert_eq!(q.local(C64::new(1e-3, 0.0), z0), 1.0);
        assert!((q.at(C64::new(0.5, 0.0)) - (1.0 + (2.0 * E).ln())).abs() < 1e-12);
    }

    #[test]
    fn sources_and_domains() {
        let s = SourcePreset::from_name("disk-indicator", &Params::new().with("radius", 0.5)).unwrap();
        assert_eq!(s.eval(C64::new(0.2, 0.0)), 1.0);
        assert_eq!(s.eval(C64::new(0.6, 0.0)), 0.0);
        let d = DomainPreset::from_name("polygon", &Params(BTreeMap::from([("vertices".to_string(), vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0])]))).unwrap();
        assert!((d.build(128).unwrap().area() - 0.5).abs() < 2e-3);
        let phi = PhiPreset::from_name("cos-harmonic", &Params::new()).unwrap();
        let disk = DomainPreset::Disk { center: C64::new(0.0, 0.0), radius: 1.0 }.build(64).unwrap();
        let b = phi.boundary_data(&disk).unwrap();
        assert!((b.values()[0] - disk.samples()[0].re).abs() < 1e-12);
    }
}
