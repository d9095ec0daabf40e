//! Regularization of an integer-flux field: skeleton restriction and
//! smoothing, gauge fixing, harmonic and radial extension, and assembly.

mod assemble;
mod faceform;
mod harmonic;
mod mac;
mod radial;
mod surface;

pub use assemble::{
    approximation_error, assemble, AssembleOptions, CubeDiagnostic, ErrorRegion, RegularizedField,
};
pub use faceform::{restrict_to_skeleton, smooth_skeleton, FaceForm, SkeletonFace, SmoothReport};
pub use harmonic::{
    harmonic_extend, harmonic_extend_with, CubeExtension, ExtensionKind, HarmonicOptions, NormalCondition,
};
pub use mac::MacGrid;
pub use radial::{radial_extend, radial_projection_flux};
pub use surface::{gauge_fix, gauge_fix_on, Boundary1Form, Edge, SurfaceMesh};

use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::flux::rect_flux;
use crate::geometry::Cube;
use crate::quadrature::QuadratureSpec;

/// Outward fluxes through the `n × n` cells of each face of one cube.
///
/// Faces are ordered `−x, +x, −y, +y, −z, +z`; on the face normal to `axis`,
/// cell `(a, b)` is stored at `a + n·b` with `a` along `(axis+1) % 3` and `b`
/// along `(axis+2) % 3`.
#[derive(Debug, Clone, PartialEq)]
pub struct CubeFaceData {
    pub cube: Cube,
    pub n: usize,
    pub faces: [Vec<f64>; 6],
}

impl CubeFaceData {
    pub fn new(cube: Cube, n: usize, faces: [Vec<f64>; 6]) -> Result<Self> {
        if n == 0 || faces.iter().any(|f| f.len() != n * n) {
            return Err(Error::invalid(format!("each face needs {n}² cells")));
        }
        Ok(CubeFaceData { cube, n, faces })
    }

    pub fn zeros(cube: Cube, n: usize) -> Self {
        CubeFaceData {
            cube,
            n,
            faces: std::array::from_fn(|_| vec![0.0; n * n]),
        }
    }

    /// Samples `field`: each cell gets its outward flux.
    pub fn from_field<F: VectorField + ?Sized>(
        field: &F,
        cube: Cube,
        n: usize,
        quad: &QuadratureSpec,
    ) -> Result<Self> {
        let mut out = CubeFaceData::zeros(cube, n);
        let h = cube.side / n as f64;
        let half = cube.half();
        for face in 0..6 {
            let axis = face / 2;
            let sign = if face % 2 == 1 { 1.0 } else { -1.0 };
            let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
            let c = cube.center[axis] + sign * half;
            for b in 0..n {
                for a in 0..n {
                    let lo = [
                        cube.center[u] - half + a as f64 * h,
                        cube.center[v] - half + b as f64 * h,
                    ];
                    let hi = [lo[0] + h, lo[1] + h];
                    out.faces[face][a + n * b] = sign * rect_flux(field, axis, c, lo, hi, quad)?;
                }
            }
        }
        Ok(out)
    }

    /// Cell edge length.
    pub fn cell_size(&self) -> f64 {
        self.cube.side / self.n as f64
    }

    /// Sum of all cell fluxes, face by face.
    pub fn total(&self) -> f64 {
        self.faces.iter().map(|f| f.iter().sum::<f64>()).sum()
    }

    /// All cells in mesh order (face-major).
    pub fn cell_vector(&self) -> Vec<f64> {
        self.faces.iter().flatten().copied().collect()
    }

    pub fn from_cell_vector(cube: Cube, n: usize, v: &[f64]) -> Result<Self> {
        if v.len() != 6 * n * n {
            return Err(Error::invalid("cell vector has the wrong length"));
        }
        let faces = std::array::from_fn(|f| v[f * n * n..(f + 1) * n * n].to_vec());
        CubeFaceData::new(cube, n, faces)
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.faces
            .iter_mut()
            .for_each(|f| f.iter_mut().for_each(|v| *v *= s));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{coulomb_superposition, AnalyticField, Background, Singularity};
    use crate::geometry::Vec3;

    #[test]
    fn constant_field_face_data() {
        let f = AnalyticField::background_only(Background::Constant { value: Vec3::axis(2) });
        let cube = Cube::new(Vec3::new(0.1, 0.0, -0.2), 0.4);
        let d = CubeFaceData::from_field(&f, cube, 4, &QuadratureSpec::gauss(4)).unwrap();
        let cell = 0.01;
        for v in &d.faces[5] {
            assert!((v - cell).abs() < 1e-15);
        }
        for v in &d.faces[4] {
            assert!((v + cell).abs() < 1e-15);
        }
        assert!(d.faces[..4].iter().flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn coulomb_face_data_total() {
        let f = coulomb_superposition(&[Singularity::new(Vec3::new(0.01, -0.02, 0.03), 1)]).unwrap();
        let d = CubeFaceData::from_field(&f, Cube::new(Vec3::ZERO, 0.25), 8, &QuadratureSpec::gauss(8))
            .unwrap();
        assert!((d.total() - 1.0).abs() < 1e-10);
    }
}
