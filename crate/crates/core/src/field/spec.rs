use super::{
    AnalyticField, Background, DField, FieldConvention, Lattice, MapDescriptor, Partials,
    SampledField, Singularity, VectorField,
};
use super::sampled::SampledHeader;
use crate::error::{Error, Result};
use crate::geometry::{Aabb, Vec3};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// On-disk description of a field, tagged by `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldSpec {
    Coulomb {
        #[serde(default)]
        charges: Vec<Singularity>,
        #[serde(default)]
        background: Background,
        #[serde(default = "unit")]
        flux_unit: f64,
        #[serde(default)]
        core_radius: f64,
    },
    Dfield {
        map: MapDescriptor,
        #[serde(default = "yes")]
        normalize: bool,
        #[serde(default)]
        partials: Partials,
    },
    Sampled(SampledHeader),
}

fn unit() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

impl FieldSpec {
    pub fn coulomb(charges: Vec<Singularity>) -> Self {
        FieldSpec::Coulomb {
            charges,
            background: Background::None,
            flux_unit: 1.0,
            core_radius: 0.0,
        }
    }

    /// Builds the field. Sampled blobs are resolved against `base_dir`.
    pub fn build(&self, base_dir: &Path) -> Result<AnyField> {
        Ok(match self {
            FieldSpec::Coulomb {
                charges,
                background,
                flux_unit,
                core_radius,
            } => AnyField::Analytic(
                AnalyticField::new(charges.clone(), *background)?
                    .with_convention(FieldConvention::new(*flux_unit)?)
                    .with_core_radius(*core_radius)?,
            ),
            FieldSpec::Dfield {
                map,
                normalize,
                partials,
            } => AnyField::DField(DField::new(*map, *normalize, *partials)?),
            FieldSpec::Sampled(header) => AnyField::Sampled(SampledField::read(header, base_dir)?),
        })
    }
}

/// Any field that can be described by a [`FieldSpec`].
#[derive(Debug, Clone, PartialEq)]
pub enum AnyField {
    Analytic(AnalyticField),
    DField(DField),
    Sampled(SampledField),
}

impl AnyField {
    fn inner(&self) -> &dyn VectorField {
        match self {
            AnyField::Analytic(f) => f,
            AnyField::DField(f) => f,
            AnyField::Sampled(f) => f,
        }
    }
}

impl VectorField for AnyField {
    fn eval(&self, x: Vec3) -> Result<Vec3> {
        self.inner().eval(x)
    }
    fn flux_unit(&self) -> f64 {
        self.inner().flux_unit()
    }
    fn singularities(&self) -> Vec<Singularity> {
        self.inner().singularities()
    }
    fn singular_radius(&self) -> f64 {
        self.inner().singular_radius()
    }
    fn piecewise_lattice(&self) -> Option<Lattice> {
        self.inner().piecewise_lattice()
    }
    fn domain(&self) -> Option<Aabb> {
        self.inner().domain()
    }
}

/// Reads a field specification file and builds the field.
pub fn load_field(path: &Path) -> Result<AnyField> {
    let text = std::fs::read_to_string(path)?;
    let spec: FieldSpec = serde_json::from_str(&text)
        .map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    spec.build(base)
}
