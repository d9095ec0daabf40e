use super::{Lattice, VectorField};
use crate::error::{Error, Result};
use crate::geometry::{Aabb, Vec3};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

/// A vector field sampled on a uniform node grid and read back by trilinear
/// interpolation.
///
/// Node `(i, j, k)` sits at `origin + h·(i, j, k)` and is stored at index
/// `i + nx·(j + ny·k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledField {
    origin: Vec3,
    spacing: f64,
    dims: [usize; 3],
    samples: Vec<Vec3>,
    flux_unit: f64,
}

/// JSON header accompanying the binary sample blob.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledHeader {
    pub origin: Vec3,
    pub spacing: f64,
    pub dims: [usize; 3],
    /// Path of the binary blob, relative to the header file.
    pub data: String,
    #[serde(default = "one")]
    pub flux_unit: f64,
}

fn one() -> f64 {
    1.0
}

impl SampledField {
    pub fn new(origin: Vec3, spacing: f64, dims: [usize; 3], samples: Vec<Vec3>) -> Result<Self> {
        if !(spacing > 0.0 && spacing.is_finite()) || !origin.is_finite() {
            return Err(Error::invalid("grid spacing must be positive and origin finite"));
        }
        if dims.iter().any(|&n| n < 2) {
            return Err(Error::invalid(format!("grid dims {dims:?} must be at least 2")));
        }
        let n = dims[0] * dims[1] * dims[2];
        if samples.len() != n {
            return Err(Error::invalid(format!(
                "expected {n} samples, got {}",
                samples.len()
            )));
        }
        Ok(SampledField {
            origin,
            spacing,
            dims,
            samples,
            flux_unit: 1.0,
        })
    }

    /// Samples `field` on the grid. Nodes that hit a singularity get the zero vector.
    pub fn from_field<F: VectorField + ?Sized>(
        field: &F,
        origin: Vec3,
        spacing: f64,
        dims: [usize; 3],
    ) -> Result<Self> {
        use rayon::prelude::*;
        let n = dims[0] * dims[1] * dims[2];
        let samples = (0..n)
            .into_par_iter()
            .map(|idx| {
                let i = idx % dims[0];
                let j = (idx / dims[0]) % dims[1];
                let k = idx / (dims[0] * dims[1]);
                let x = origin + Vec3::new(i as f64, j as f64, k as f64) * spacing;
                match field.eval(x) {
                    Ok(v) => Ok(v),
                    Err(Error::Singular(_)) => Ok(Vec3::ZERO),
                    Err(e) => Err(e),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let mut s = SampledField::new(origin, spacing, dims, samples)?;
        s.flux_unit = field.flux_unit();
        Ok(s)
    }

    /// Samples `field` on `[-1, 1]³` with `n` nodes per axis.
    pub fn on_unit_box<F: VectorField + ?Sized>(field: &F, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid("need at least 2 nodes per axis"));
        }
        let h = 2.0 / (n - 1) as f64;
        Self::from_field(field, Vec3::splat(-1.0), h, [n, n, n])
    }

    pub fn with_flux_unit(mut self, flux_unit: f64) -> Result<Self> {
        if !(flux_unit > 0.0 && flux_unit.is_finite()) {
            return Err(Error::invalid("flux_unit must be positive"));
        }
        self.flux_unit = flux_unit;
        Ok(self)
    }

    pub fn origin(&self) -> Vec3 {
        self.origin
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn samples(&self) -> &[Vec3] {
        &self.samples
    }

    pub fn node(&self, i: usize, j: usize, k: usize) -> Vec3 {
        self.samples[i + self.dims[0] * (j + self.dims[1] * k)]
    }

    pub fn bounds(&self) -> Aabb {
        let ext = Vec3::new(
            (self.dims[0] - 1) as f64,
            (self.dims[1] - 1) as f64,
            (self.dims[2] - 1) as f64,
        ) * self.spacing;
        Aabb::new(self.origin, self.origin + ext)
    }

    /// Writes the header to `header_path` and the blob next to it with extension `.bin`.
    pub fn write(&self, header_path: &Path) -> Result<()> {
        let blob_path = header_path.with_extension("bin");
        let blob_name = blob_path
            .file_name()
            .and_then(|s| s.to_str())
            .ok_or_else(|| Error::invalid("header path has no file name"))?
            .to_string();
        let header = SampledHeader {
            origin: self.origin,
            spacing: self.spacing,
            dims: self.dims,
            data: blob_name,
            flux_unit: self.flux_unit,
        };
        let mut value = serde_json::to_value(&header)?;
        value["kind"] = serde_json::Value::from("sampled");
        std::fs::write(header_path, serde_json::to_string_pretty(&value)? + "\n")?;
        let mut out = std::io::BufWriter::new(std::fs::File::create(blob_path)?);
        for v in &self.samples {
            for c in v.to_array() {
                out.write_all(&c.to_le_bytes())?;
            }
        }
        out.flush()?;
        Ok(())
    }

    /// Reads a field from its header; the blob path is resolved against `base_dir`.
    pub fn read(header: &SampledHeader, base_dir: &Path) -> Result<Self> {
        let n = header
            .dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::invalid("grid dims overflow"))?;
        let mut bytes = Vec::new();
        std::fs::File::open(base_dir.join(&header.data))?.read_to_end(&mut bytes)?;
        if bytes.len() != n * 24 {
            return Err(Error::invalid(format!(
                "sample blob has {} bytes, expected {}",
                bytes.len(),
                n * 24
            )));
        }
        let samples = bytes
            .chunks_exact(24)
            .map(|c| {
                let f = |o: usize| f64::from_le_bytes(c[o..o + 8].try_into().unwrap());
                Vec3::new(f(0), f(8), f(16))
            })
            .collect();
        SampledField::new(header.origin, header.spacing, header.dims, samples)?
            .with_flux_unit(header.flux_unit)
    }
}

impl VectorField for SampledField {
    fn eval(&self, x: Vec3) -> Result<Vec3> {
        let mut idx = [0usize; 3];
        let mut t = [0.0; 3];
        for a in 0..3 {
            let u = (x[a] - self.origin[a]) / self.spacing;
            let top = (self.dims[a] - 1) as f64;
            // tolerate roundoff at the far face
            if !(u >= -1e-9 && u <= top + 1e-9) {
                return Err(Error::OutOfRange(x));
            }
            let u = u.clamp(0.0, top);
            let i = (u.floor() as usize).min(self.dims[a] - 2);
            idx[a] = i;
            t[a] = u - i as f64;
        }
        let [i, j, k] = idx;
        let mut v = Vec3::ZERO;
        for dk in 0..2 {
            let wk = if dk == 0 { 1.0 - t[2] } else { t[2] };
            for dj in 0..2 {
                let wj = if dj == 0 { 1.0 - t[1] } else { t[1] };
                for di in 0..2 {
                    let wi = if di == 0 { 1.0 - t[0] } else { t[0] };
                    v += self.node(i + di, j + dj, k + dk) * (wi * wj * wk);
                }
            }
        }
        Ok(v)
    }

    fn flux_unit(&self) -> f64 {
        self.flux_unit
    }

    fn piecewise_lattice(&self) -> Option<Lattice> {
        Some(Lattice {
            origin: self.origin,
            spacing: self.spacing,
        })
    }

    fn domain(&self) -> Option<Aabb> {
        Some(self.bounds())
    }
}
