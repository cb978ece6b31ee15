//! Field exchange: CSV (`x,y,val` / `x,y,re,im`, row-major, masked nodes
//! omitted) with a JSON sidecar for the grid, PGM heatmaps, and run manifests.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::{ComplexField64, Grid64, RealField64, C64};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub center: [f64; 2],
    pub half_width: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn of(g: &Grid64) -> Self {
        GridSpec { center: [g.center().re, g.center().im], half_width: g.half_width(), n: g.n() }
    }

    pub fn grid(&self) -> Result<Grid64> {
        Grid64::new(C64::new(self.center[0], self.center[1]), self.half_width, self.n)
    }
}

/// Sidecar written next to every CSV field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSidecar {
    /// `real` or `complex`.
    pub kind: String,
    pub grid: GridSpec,
    pub rows: usize,
    pub masked: usize,
}

fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

fn write_csv(path: &Path, grid: &Grid64, header: &str, mask: Option<&[bool]>, kind: &str, row: impl Fn(usize) -> String) -> Result<FieldSidecar> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{header}")?;
    let mut rows = 0;
    for k in 0..grid.len() {
        if mask.is_some_and(|m| !m[k]) {
            continue;
        }
        let z = grid.node_at(k);
        writeln!(w, "{},{},{}", z.re, z.im, row(k))?;
        rows += 1;
    }
    w.flush()?;
    let side = FieldSidecar { kind: kind.into(), grid: GridSpec::of(grid), rows, masked: grid.len() - rows };
    fs::write(sidecar_path(path), serde_json::to_string_pretty(&side).expect("sidecar serializes"))?;
    Ok(side)
}

/// `x,y,val`; `Display` of `f64` is the shortest string that round-trips.
pub fn write_real_csv(field: &RealField64, path: &Path) -> Result<FieldSidecar> {
    let v = field.values();
    write_csv(path, field.grid(), "x,y,val", field.mask(), "real", |k| format!("{}", v[k]))
}

/// `x,y,re,im`.
pub fn write_complex_csv(field: &ComplexField64, path: &Path) -> Result<FieldSidecar> {
    let v = field.values();
    write_csv(path, field.grid(), "x,y,re,im", field.mask(), "complex", |k| format!("{},{}", v[k].re, v[k].im))
}

fn read_csv(path: &Path, columns: usize) -> Result<(Grid64, Vec<Vec<f64>>, Vec<bool>)> {
    let side: FieldSidecar = serde_json::from_str(&fs::read_to_string(sidecar_path(path))?)
        .map_err(|e| Error::config(format!("{}: bad sidecar: {e}", sidecar_path(path).display())))?;
    let grid = side.grid.grid()?;
    let h = grid.spacing();
    let mut vals = vec![vec![0.0; grid.len()]; columns];
    let mut mask = vec![false; grid.len()];
    let reader = BufReader::new(fs::File::open(path)?);
    for (ln, line) in reader.lines().enumerate() {
        let line = line?;
        if ln == 0 {
            let expect = if columns == 1 { "x,y,val" } else { "x,y,re,im" };
            if line.trim() != expect {
                return Err(Error::Config { line: Some(1), message: format!("{}: header `{line}`, expected `{expect}`", path.display()) });
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let bad = |m: String| Error::Config { line: Some(ln + 1), message: format!("{}: {m}", path.display()) };
        let nums = line.split(',').map(|s| s.trim().parse::<f64>()).collect::<std::result::Result<Vec<_>, _>>().map_err(|e| bad(e.to_string()))?;
        if nums.len() != 2 + columns {
            return Err(bad(format!("expected {} columns, got {}", 2 + columns, nums.len())));
        }
        let (fi, fj) = grid.fractional_index(C64::new(nums[0], nums[1]));
        let (i, j) = (fi.round(), fj.round());
        if i < 0.0 || j < 0.0 || i >= grid.n() as f64 || j >= grid.n() as f64 || (fi - i).abs() * h > 1e-6 * h || (fj - j).abs() * h > 1e-6 * h {
            return Err(bad(format!("({}, {}) is not a grid node", nums[0], nums[1])));
        }
        let k = grid.index(i as usize, j as usize);
        for c in 0..columns {
            vals[c][k] = nums[2 + c];
        }
        mask[k] = true;
    }
    Ok((grid, vals, mask))
}

fn finish<V: crate::grid::FieldValue<f64>>(grid: Grid64, vals: Vec<V>, mask: Vec<bool>) -> Result<crate::Field<V, f64>> {
    let f = crate::Field::from_values(grid, vals)?;
    if mask.iter().all(|&m| m) {
        Ok(f)
    } else {
        f.with_mask(mask)
    }
}

/// Inverse of [`write_real_csv`]; omitted rows come back masked.
pub fn read_real_csv(path: &Path) -> Result<RealField64> {
    let (g, mut v, m) = read_csv(path, 1)?;
    finish(g, v.remove(0), m)
}

/// Inverse of [`write_complex_csv`].
pub fn read_complex_csv(path: &Path) -> Result<ComplexField64> {
    let (g, v, m) = read_csv(path, 2)?;
    let z = v[0].iter().zip(&v[1]).map(|(&a, &b)| C64::new(a, b)).collect();
    finish(g, z, m)
}

/// Linear gray scale of a heatmap: `gray = 127.5·(1 + v/scale)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatmapScale {
    /// Symmetric bound: `−scale ↦ 0`, `+scale ↦ 255`.
    pub scale: f64,
    pub min: f64,
    pub max: f64,
}

/// Binary PGM, top row = largest `y`; masked nodes are black. A zero field
/// is uniformly mid-gray.
pub fn write_pgm(field: &RealField64, path: &Path) -> Result<HeatmapScale> {
    let g = field.grid();
    let n = g.n();
    let valid = |k: usize| field.is_valid(k) && field.values()[k].is_finite();
    let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
    for k in (0..g.len()).filter(|&k| valid(k)) {
        min = min.min(field.values()[k]);
        max = max.max(field.values()[k]);
    }
    if min > max {
        (min, max) = (0.0, 0.0);
    }
    let scale = min.abs().max(max.abs());
    let mut bytes = format!("P5\n{n} {n}\n255\n").into_bytes();
    for j in (0..n).rev() {
        for i in 0..n {
            let k = g.index(i, j);
            let px = if !valid(k) {
                0
            } else if scale == 0.0 {
                128
            } else {
                (127.5 * (1.0 + field.values()[k] / scale)).round().clamp(0.0, 255.0) as u8
            };
            bytes.push(px);
        }
    }
    fs::write(path, bytes)?;
    Ok(HeatmapScale { scale, min, max })
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let digest = Sha256::digest(fs::read(path)?);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rows: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub masked: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub heatmap: Option<HeatmapScale>,
}

/// Run manifest: versions, parameters, residuals, verdicts and file hashes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub parameters: Value,
    pub residuals: serde_json::Map<String, Value>,
    pub verdicts: Vec<Value>,
    pub warnings: Vec<String>,
    pub status: String,
    pub files: Vec<FileEntry>,
}

impl Manifest {
    pub fn new(command: &str, seed: u64, parameters: Value) -> Self {
        Manifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed,
            parameters,
            residuals: serde_json::Map::new(),
            verdicts: Vec::new(),
            warnings: Vec::new(),
            status: "ok".into(),
            files: Vec::new(),
        }
    }

    pub fn residual(&mut self, name: &str, v: impl Into<Value>) {
        self.residuals.insert(name.into(), v.into());
    }

    /// Writes `name.csv` (+ sidecar) and `name.pgm` for a real field into `dir`.
    pub fn real_field(&mut self, dir: &Path, name: &str, field: &RealField64) -> Result<()> {
        let csv = dir.join(format!("{name}.csv"));
        let side = write_real_csv(field, &csv)?;
        self.record(dir, &csv, Some(&side), None)?;
        let pgm = dir.join(format!("{name}.pgm"));
        let scale = write_pgm(field, &pgm)?;
        self.record(dir, &pgm, None, Some(scale))
    }

    /// Writes `name.csv` plus `name_re.pgm` / `name_im.pgm`.
    pub fn complex_field(&mut self, dir: &Path, name: &str, field: &ComplexField64) -> Result<()> {
        let csv = dir.join(format!("{name}.csv"));
        let side = write_complex_csv(field, &csv)?;
        self.record(dir, &csv, Some(&side), None)?;
        for (part, f) in [("re", field.re()), ("im", field.im())] {
            let pgm = dir.join(format!("{name}_{part}.pgm"));
            let scale = write_pgm(&f, &pgm)?;
            self.record(dir, &pgm, None, Some(scale))?;
        }
        Ok(())
    }

    /// Records an already written file.
    pub fn record(&mut self, dir: &Path, path: &Path, side: Option<&FieldSidecar>, heatmap: Option<HeatmapScale>) -> Result<()> {
        let rel = path.strip_prefix(dir).unwrap_or(path).display().to_string();
        self.files.push(FileEntry { path: rel, sha256: sha256_file(path)?, rows: side.map(|s| s.rows), masked: side.map(|s| s.masked), heatmap });
        Ok(())
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(self).expect("manifest serializes"))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid() -> Grid64 {
        Grid64::new(C64::new(0.25, -0.5), 1.5, 8).unwrap()
    }

    #[test]
    fn zero_field_csv_and_gray() {
        let dir = tempfile::tempdir().unwrap();
        let f = RealField64::zeros(grid());
        let p = dir.path().join("z.csv");
        let side = write_real_csv(&f, &p).unwrap();
        assert_eq!(side.rows, 64);
        let text = fs::read_to_string(&p).unwrap();
        assert!(text.lines().skip(1).all(|l| l.ends_with(",0")));
        let q = dir.path().join("z.pgm");
        let s = write_pgm(&f, &q).unwrap();
        assert_eq!(s.scale, 0.0);
        let bytes = fs::read(&q).unwrap();
        assert!(bytes[bytes.len() - 64..].iter().all(|&b| b == 128));
    }

    #[test]
    fn masked_rows_omitted() {
        let dir = tempfile::tempdir().unwrap();
        let g = grid();
        let mask: Vec<bool> = (0..g.len()).map(|k| k % 3 != 0).collect();
        let f = ComplexField64::from_fn(g, |z| z * z).with_mask(mask.clone()).unwrap();
        let p = dir.path().join("c.csv");
        let side = write_complex_csv(&f, &p).unwrap();
        assert_eq!(side.masked, 22);
        let back = read_complex_csv(&p).unwrap();
        assert_eq!(back.mask().unwrap(), mask.as_slice());
        for k in (0..g.len()).filter(|&k| mask[k]) {
            assert_eq!(back.values()[k], f.values()[k]);
        }
    }

    #[test]
    fn manifest_hashes() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = Manifest::new("test", 7, serde_json::json!({"n": 12}));
        m.real_field(dir.path(), "u", &RealField64::from_fn(grid(), |z| z.re)).unwrap();
        m.residual("err", 1e-3);
        let path = m.write(dir.path()).unwrap();
        let back: Manifest = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.files[0].sha256, sha256_file(&dir.path().join("u.csv")).unwrap());
        assert_eq!(back.files[0].sha256.len(), 64);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn csv_round_trip_is_bit_exact(vals in proptest::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 64)) {
            let dir = tempfile::tempdir().unwrap();
            let f = RealField64::from_values(grid(), vals).unwrap();
            let p = dir.path().join("r.csv");
            write_real_csv(&f, &p).unwrap();
            let back = read_real_csv(&p).unwrap();
            prop_assert!(back.values().iter().zip(f.values()).all(|(a, b)| a.to_bits() == b.to_bits()));
        }
    }
}
