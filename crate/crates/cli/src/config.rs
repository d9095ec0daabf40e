use intflux::QuadratureSpec;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Parameters shared by all subcommands, read from `--config` and then
/// overridden by the global flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub quadrature: QuadratureSpec,
    /// Integrality tolerance of flux scans and translation selection.
    pub tol: f64,
    pub scan: ScanConfig,
    pub decompose: DecomposeConfig,
    pub regularize: RegularizeConfig,
    pub connect: ConnectConfig,
    pub analyze: AnalyzeConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    pub centers: usize,
    pub radii: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecomposeConfig {
    pub eps: f64,
    /// Sweep list; the sweep is skipped when it has fewer than three entries.
    pub eps_list: Vec<f64>,
    pub n_samples: usize,
    pub label_tol: f64,
    /// Exponent of the translation deviation score.
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegularizeConfig {
    pub m: usize,
    pub delta: Option<f64>,
    pub mollify: bool,
    pub quadrature_n: usize,
    pub solver_tol: f64,
    pub error_p: f64,
    pub error_spacing: f64,
    /// Integrality tolerance of the scan of the output.
    pub scan_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConnectConfig {
    pub gap_tol: f64,
    pub n_test: usize,
    pub residual_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyzeConfig {
    pub k_list: Vec<u32>,
    /// Exponent of the Hölder check; only the pairing table without it.
    pub p: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            quadrature: QuadratureSpec::gauss(16),
            tol: 1e-6,
            scan: ScanConfig::default(),
            decompose: DecomposeConfig::default(),
            regularize: RegularizeConfig::default(),
            connect: ConnectConfig::default(),
            analyze: AnalyzeConfig::default(),
        }
    }
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            centers: 100,
            radii: 10,
        }
    }
}

impl Default for DecomposeConfig {
    fn default() -> Self {
        DecomposeConfig {
            eps: 0.25,
            eps_list: vec![0.2, 0.1, 0.05],
            n_samples: 64,
            label_tol: 1e-6,
            p: 1.0,
        }
    }
}

impl Default for RegularizeConfig {
    fn default() -> Self {
        RegularizeConfig {
            m: 9,
            delta: None,
            mollify: true,
            quadrature_n: 8,
            solver_tol: 1e-8,
            error_p: 1.0,
            error_spacing: 1.0 / 32.0,
            scan_tol: 1e-3,
        }
    }
}

impl Default for ConnectConfig {
    fn default() -> Self {
        ConnectConfig {
            gap_tol: 1e-9,
            n_test: 20,
            residual_tol: 1e-3,
        }
    }
}

impl Default for AnalyzeConfig {
    fn default() -> Self {
        AnalyzeConfig {
            k_list: vec![1, 2, 4, 8, 16],
            p: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("tol", self.tol),
            ("decompose.eps", self.decompose.eps),
            ("regularize.solver_tol", self.regularize.solver_tol),
            ("regularize.error_spacing", self.regularize.error_spacing),
            ("regularize.scan_tol", self.regularize.scan_tol),
            ("connect.gap_tol", self.connect.gap_tol),
            ("connect.residual_tol", self.connect.residual_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("{name} must be positive"));
            }
        }
        if let Some(d) = self.regularize.delta {
            if !(d > 0.0) {
                return Err("regularize.delta must be positive".into());
            }
        }
        if self.quadrature.n_q < 2 || self.regularize.quadrature_n < 2 {
            return Err("quadrature needs at least 2 points".into());
        }
        if self.analyze.k_list.iter().any(|&k| k == 0) {
            return Err("analyze.k_list entries must be positive".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_config_keeps_defaults() {
        let c: RunConfig = serde_json::from_str(r#"{"seed": 7, "scan": {"centers": 5}}"#).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.scan.centers, 5);
        assert_eq!(c.scan.radii, 10);
        assert_eq!(c.decompose, DecomposeConfig::default());
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"sed": 7}"#).is_err());
    }

    #[test]
    fn nonpositive_tol_rejected() {
        let c = RunConfig {
            tol: 0.0,
            ..RunConfig::default()
        };
        assert!(c.validate().is_err());
    }
}
