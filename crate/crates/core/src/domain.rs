//! Bounded simply connected Jordan domains given by boundary samples, and
//! continuous boundary data on them.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::C64;

pub const MIN_BOUNDARY_SAMPLES: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec {
    boundary: Vec<C64>,
}

impl DomainSpec {
    /// Build from ordered boundary samples. Clockwise input is reversed so the
    /// stored curve is positively oriented.
    pub fn from_samples(mut boundary: Vec<C64>) -> Result<Self> {
        if boundary.len() < MIN_BOUNDARY_SAMPLES {
            return Err(Error::InvalidDomain(format!(
                "need at least {MIN_BOUNDARY_SAMPLES} boundary samples, got {}",
                boundary.len()
            )));
        }
        if boundary.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidDomain("non-finite boundary sample".into()));
        }
        if boundary.first() == boundary.last() {
            boundary.pop();
        }
        let area = signed_area(&boundary);
        if area == 0.0 {
            return Err(Error::InvalidDomain("degenerate boundary (zero area)".into()));
        }
        if area < 0.0 {
            boundary.reverse();
        }
        if let Some((a, b)) = first_self_intersection(&boundary) {
            return Err(Error::InvalidDomain(format!(
                "boundary self-intersects between segments {a} and {b}"
            )));
        }
        Ok(DomainSpec { boundary })
    }

    pub fn disk(center: C64, radius: f64, m: usize) -> Result<Self> {
        Self::ellipse(center, radius, radius, m)
    }

    pub fn ellipse(center: C64, a: f64, b: f64, m: usize) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::InvalidDomain("ellipse semi-axes must be positive".into()));
        }
        let pts = (0..m)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / m as f64;
                center + C64::new(a * t.cos(), b * t.sin())
            })
            .collect();
        Self::from_samples(pts)
    }

    /// Polygon through `vertices`, resampled uniformly in arclength with `m` points.
    pub fn polygon(vertices: &[C64], m: usize) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidDomain("polygon needs at least 3 vertices".into()));
        }
        let nv = vertices.len();
        let lens: Vec<f64> = (0..nv).map(|k| (vertices[(k + 1) % nv] - vertices[k]).norm()).collect();
        let total: f64 = lens.iter().sum();
        let mut pts = Vec::with_capacity(m);
        let mut seg = 0;
        let mut start = 0.0;
        for k in 0..m {
            let s = total * k as f64 / m as f64;
            while seg < nv - 1 && s > start + lens[seg] {
                start += lens[seg];
                seg += 1;
            }
            let t = ((s - start) / lens[seg]).clamp(0.0, 1.0);
            pts.push(vertices[seg] + (vertices[(seg + 1) % nv] - vertices[seg]) * t);
        }
        Self::from_samples(pts)
    }

    pub fn samples(&self) -> &[C64] {
        &self.boundary
    }

    pub fn len(&self) -> usize {
        self.boundary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boundary.is_empty()
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.boundary)
    }

    /// Area centroid of the enclosed region.
    pub fn centroid(&self) -> C64 {
        let b = &self.boundary;
        let m = b.len();
        let mut cx = 0.0;
        let mut cy = 0.0;
        for k in 0..m {
            let p = b[k];
            let q = b[(k + 1) % m];
            let cross = p.re * q.im - q.re * p.im;
            cx += (p.re + q.re) * cross;
            cy += (p.im + q.im) * cross;
        }
        let a = self.area();
        C64::new(cx / (6.0 * a), cy / (6.0 * a))
    }

    pub fn diameter(&self) -> f64 {
        let b = &self.boundary;
        let mut d: f64 = 0.0;
        for (i, p) in b.iter().enumerate() {
            for q in &b[i + 1..] {
                d = d.max((p - q).norm());
            }
        }
        d
    }

    pub fn bounding_box(&self) -> (C64, C64) {
        let mut lo = C64::new(f64::INFINITY, f64::INFINITY);
        let mut hi = C64::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for z in &self.boundary {
            lo.re = lo.re.min(z.re);
            lo.im = lo.im.min(z.im);
            hi.re = hi.re.max(z.re);
            hi.im = hi.im.max(z.im);
        }
        (lo, hi)
    }

    /// Winding number of the boundary polygon about `z` (0 on the exterior, 1 inside).
    pub fn winding_number(&self, z: C64) -> i32 {
        let b = &self.boundary;
        let m = b.len();
        let mut wn = 0;
        for k in 0..m {
            let p = b[k] - z;
            let q = b[(k + 1) % m] - z;
            if p.im <= 0.0 {
                if q.im > 0.0 && p.re * q.im - q.re * p.im > 0.0 {
                    wn += 1;
                }
            } else if q.im <= 0.0 && p.re * q.im - q.re * p.im < 0.0 {
                wn -= 1;
            }
        }
        wn
    }

    pub fn contains(&self, z: C64) -> bool {
        self.winding_number(z) == 1
    }

    /// Euclidean distance from `z` to the boundary polygon.
    pub fn distance_to_boundary(&self, z: C64) -> f64 {
        let b = &self.boundary;
        let m = b.len();
        (0..m)
            .map(|k| segment_distance(z, b[k], b[(k + 1) % m]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Inside flags for every grid node.
    pub fn inside_mask(&self, grid: &Grid<f64>) -> Vec<bool> {
        grid.nodes().map(|z| self.contains(z)).collect()
    }

    /// Inside flags restricted to nodes at least `margin` away from the boundary.
    pub fn interior_mask(&self, grid: &Grid<f64>, margin: f64) -> Vec<bool> {
        grid.nodes()
            .map(|z| self.contains(z) && self.distance_to_boundary(z) >= margin)
            .collect()
    }

    /// First and second derivatives of the boundary with respect to the sample
    /// index scaled to a `2π` period, by spectral differentiation.
    pub fn parameter_derivatives(&self) -> (Vec<C64>, Vec<C64>) {
        let m = self.boundary.len();
        let mut planner = rustfft::FftPlanner::<f64>::new();
        let fwd = planner.plan_fft_forward(m);
        let inv = planner.plan_fft_inverse(m);
        let mut spec = self.boundary.clone();
        fwd.process(&mut spec);
        let mut d1 = spec.clone();
        let mut d2 = spec;
        for k in 0..m {
            let w = if k <= m / 2 { k as f64 } else { k as f64 - m as f64 };
            let first = if 2 * k == m { 0.0 } else { w };
            d1[k] *= C64::new(0.0, first) / m as f64;
            d2[k] *= -w * w / m as f64;
        }
        inv.process(&mut d1);
        inv.process(&mut d2);
        (d1, d2)
    }

    /// Unit inward normals at the samples.
    pub fn inward_normals(&self) -> Vec<C64> {
        let (d1, _) = self.parameter_derivatives();
        d1.iter().map(|t| C64::new(-t.im, t.re) / t.norm()).collect()
    }

    /// Ratio of largest to smallest sample spacing; a geometric quality measure.
    pub fn spacing_ratio(&self) -> f64 {
        let b = &self.boundary;
        let m = b.len();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for k in 0..m {
            let d = (b[(k + 1) % m] - b[k]).norm();
            lo = lo.min(d);
            hi = hi.max(d);
        }
        hi / lo
    }

    pub fn mean_spacing(&self) -> f64 {
        let b = &self.boundary;
        let m = b.len();
        (0..m).map(|k| (b[(k + 1) % m] - b[k]).norm()).sum::<f64>() / m as f64
    }
}

fn signed_area(b: &[C64]) -> f64 {
    let m = b.len();
    0.5 * (0..m)
        .map(|k| {
            let p = b[k];
            let q = b[(k + 1) % m];
            p.re * q.im - q.re * p.im
        })
        .sum::<f64>()
}

fn segment_distance(z: C64, a: C64, b: C64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (z - a).norm();
    }
    let t = (((z - a) * ab.conj()).re / len2).clamp(0.0, 1.0);
    (z - (a + ab * t)).norm()
}

fn orient(a: C64, b: C64, c: C64) -> f64 {
    (b - a).re * (c - a).im - (b - a).im * (c - a).re
}

fn segments_cross(p1: C64, p2: C64, q1: C64, q2: C64) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

fn first_self_intersection(b: &[C64]) -> Option<(usize, usize)> {
    let m = b.len();
    for i in 0..m {
        let (p1, p2) = (b[i], b[(i + 1) % m]);
        for j in i + 2..m {
            if i == 0 && j == m - 1 {
                continue;
            }
            if segments_cross(p1, p2, b[j], b[(j + 1) % m]) {
                return Some((i, j));
            }
        }
    }
    None
}

/// Real boundary values at the domain samples, interpolated piecewise linearly
/// in arclength (periodic across the seam).
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryData {
    values: Vec<f64>,
}

impl BoundaryData {
    pub fn new(domain: &DomainSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.len() {
            return Err(Error::InvalidDomain(format!(
                "boundary data has {} values for {} samples",
                values.len(),
                domain.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("boundary data".into()));
        }
        Ok(BoundaryData { values })
    }

    pub fn from_fn(domain: &DomainSpec, f: impl Fn(C64) -> f64) -> Result<Self> {
        Self::new(domain, domain.samples().iter().map(|&z| f(z)).collect())
    }

    pub fn constant(domain: &DomainSpec, c: f64) -> Result<Self> {
        Self::from_fn(domain, |_| c)
    }

    /// `cos θ` with `θ` the polar angle about `center` (equals `Re ζ` on the unit circle).
    pub fn cos_angle(domain: &DomainSpec, center: C64) -> Result<Self> {
        Self::from_fn(domain, |z| (z - center).arg().cos())
    }

    /// Resample a table of `(angle, value)` pairs (periodic, linear in angle about `center`).
    pub fn from_angle_table(domain: &DomainSpec, center: C64, table: &[(f64, f64)]) -> Result<Self> {
        if table.is_empty() {
            return Err(Error::InvalidParameter("empty boundary table".into()));
        }
        let mut t: Vec<(f64, f64)> = table.iter().map(|&(a, v)| (a.rem_euclid(2.0 * PI), v)).collect();
        t.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self::from_fn(domain, |z| {
            let a = (z - center).arg().rem_euclid(2.0 * PI);
            let n = t.len();
            let idx = t.partition_point(|p| p.0 <= a);
            let (a0, v0) = if idx == 0 { (t[n - 1].0 - 2.0 * PI, t[n - 1].1) } else { t[idx - 1] };
            let (a1, v1) = if idx == n { (t[0].0 + 2.0 * PI, t[0].1) } else { t[idx] };
            if a1 == a0 {
                v0
            } else {
                v0 + (v1 - v0) * (a - a0) / (a1 - a0)
            }
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Value at fractional arclength position `s ∈ [0, 1)` along the sampled curve.
    pub fn at_arclength(&self, domain: &DomainSpec, s: f64) -> f64 {
        let b = domain.samples();
        let m = b.len();
        let lens: Vec<f64> = (0..m).map(|k| (b[(k + 1) % m] - b[k]).norm()).collect();
        let total: f64 = lens.iter().sum();
        let mut target = s.rem_euclid(1.0) * total;
        for (k, &len) in lens.iter().enumerate() {
            if target <= len || k == m - 1 {
                let t = if len > 0.0 { (target / len).clamp(0.0, 1.0) } else { 0.0 };
                return self.values[k] * (1.0 - t) + self.values[(k + 1) % m] * t;
            }
            target -= len;
        }
        self.values[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_geometry() {
        let d = DomainSpec::disk(C64::new(0.0, 0.0), 1.0, 256).unwrap();
        assert!((d.area() - PI).abs() < 1e-3);
        assert!(d.centroid().norm() < 1e-12);
        assert!((d.diameter() - 2.0).abs() < 1e-12);
        assert_eq!(d.winding_number(C64::new(0.3, 0.2)), 1);
        assert_eq!(d.winding_number(C64::new(1.3, 0.2)), 0);
        assert!((d.distance_to_boundary(C64::new(0.5, 0.0)) - 0.5).abs() < 1e-3);
        let n = d.inward_normals();
        assert!((n[0] - C64::new(-1.0, 0.0)).norm() < 1e-6);
    }

    #[test]
    fn clockwise_input_is_reoriented() {
        let pts: Vec<C64> = (0..64).map(|k| C64::from_polar(1.0, -2.0 * PI * k as f64 / 64.0)).collect();
        let d = DomainSpec::from_samples(pts).unwrap();
        assert!(d.area() > 0.0);
        assert!(d.contains(C64::new(0.0, 0.0)));
    }

    #[test]
    fn rejects_bad_boundaries() {
        let few: Vec<C64> = (0..10).map(|k| C64::from_polar(1.0, k as f64)).collect();
        assert!(DomainSpec::from_samples(few).is_err());
        // figure eight
        let eight: Vec<C64> = (0..128)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / 128.0;
                C64::new(t.sin(), (2.0 * t).sin() / 2.0)
            })
            .collect();
        assert!(DomainSpec::from_samples(eight).is_err());
    }

    #[test]
    fn polygon_resampling() {
        let sq = [C64::new(-1.0, -1.0), C64::new(1.0, -1.0), C64::new(1.0, 1.0), C64::new(-1.0, 1.0)];
        let d = DomainSpec::polygon(&sq, 128).unwrap();
        assert_eq!(d.len(), 128);
        assert!((d.area() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn boundary_data_interpolation() {
        let d = DomainSpec::disk(C64::new(0.0, 0.0), 1.0, 64).unwrap();
        let phi = BoundaryData::cos_angle(&d, C64::new(0.0, 0.0)).unwrap();
        assert!((phi.values()[0] - 1.0).abs() < 1e-15);
        assert!((phi.at_arclength(&d, 0.0) - 1.0).abs() < 1e-12);
        assert!((phi.at_arclength(&d, 0.5) + 1.0).abs() < 1e-12);
        // seam continuity
        assert!((phi.at_arclength(&d, 1.0 - 1e-12) - phi.at_arclength(&d, 0.0)).abs() < 1e-9);
        let tab = BoundaryData::from_angle_table(&d, C64::new(0.0, 0.0), &[(0.0, 0.0), (PI, 2.0)]).unwrap();
        assert!((tab.values()[16] - 1.0).abs() < 1e-12);
        assert!(BoundaryData::new(&d, vec![f64::NAN; 64]).is_err());
    }
}
