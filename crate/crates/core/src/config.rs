//! Run configuration: strict TOML parsing with key paths in errors, explicit
//! defaults, and a byte-stable round trip.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::concentration::ConcentrationParams;
use crate::error::{Error, Result};
use crate::evolution::{
    EvolutionParams, DEFAULT_AMPLITUDE_CAP, DEFAULT_BOUNDARY_LIMIT, DEFAULT_KINETIC_CAP,
};
use crate::functionals::{
    NonlinearityParams, ThresholdConstants, DEFAULT_BIG_C_BREVE, DEFAULT_C_A, DEFAULT_C_BREVE,
};
use crate::grid::GridSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub dim: u32,
    #[serde(default = "default_r_max")]
    pub r_max: f64,
    #[serde(default = "default_modes")]
    pub modes: usize,
}

fn default_r_max() -> f64 {
    40.0
}

fn default_modes() -> usize {
    512
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NonlinearitySection {
    pub gamma: f64,
}

impl Default for NonlinearitySection {
    fn default() -> Self {
        NonlinearitySection { gamma: 0.05 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolutionSection {
    /// `1e-3 (R/N)^2` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub t_end: f64,
    pub stride: usize,
    pub amplitude_cap: f64,
    pub kinetic_cap: f64,
    pub boundary_limit: f64,
    /// Regularity index of `H~^k`, shared with the threshold constants.
    pub k: f64,
    pub linear: bool,
}

impl Default for EvolutionSection {
    fn default() -> Self {
        EvolutionSection {
            dt: None,
            t_end: 1.0,
            stride: 1000,
            amplitude_cap: DEFAULT_AMPLITUDE_CAP,
            kinetic_cap: DEFAULT_KINETIC_CAP,
            boundary_limit: DEFAULT_BOUNDARY_LIMIT,
            k: 2.0,
            linear: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThresholdSection {
    pub delta: f64,
    pub c_breve: f64,
    pub big_c_breve: f64,
    pub c_a: f64,
}

impl Default for ThresholdSection {
    fn default() -> Self {
        ThresholdSection {
            delta: 0.05,
            c_breve: DEFAULT_C_BREVE,
            big_c_breve: DEFAULT_BIG_C_BREVE,
            c_a: DEFAULT_C_A,
        }
    }
}

/// Initial-data family and its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSpec {
    /// `a exp(-r^2 / sigma^2)`.
    Gaussian { amplitude: f64, width: f64 },
    /// `a e^{i theta} lambda^{-(n-2)/2} W(r/lambda)`, tapered to zero between
    /// the two fractions of `R`.
    GroundState {
        amplitude: f64,
        scale: f64,
        phase: f64,
        #[serde(default = "default_taper_start")]
        taper_start: f64,
        #[serde(default = "default_taper_end")]
        taper_end: f64,
    },
    /// `a exp(-(r - r0)^2 / sigma^2)`.
    Ring {
        amplitude: f64,
        radius: f64,
        width: f64,
    },
    /// Seeded sum of complex Gaussians rescaled to `||u_0||_{H~^k} = target`.
    RandomSmooth {
        target: f64,
        #[serde(default = "default_components")]
        components: usize,
    },
}

fn default_taper_start() -> f64 {
    0.25
}

fn default_taper_end() -> f64 {
    0.9
}

fn default_components() -> usize {
    6
}

impl Default for DataSpec {
    fn default() -> Self {
        DataSpec::Gaussian {
            amplitude: 0.5,
            width: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSection {
    /// Virial scales `m`; each needs `2m < R`.
    pub virial_m: Vec<f64>,
    pub concentration: bool,
    pub scattering_tol: f64,
    pub eta1: f64,
    pub c_tilde_1: f64,
    pub c_prime: f64,
    pub big_c_prime: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tower_eta: Option<f64>,
    pub c0: f64,
    pub c1: f64,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        let c = ConcentrationParams::default();
        AnalysisSection {
            virial_m: Vec::new(),
            concentration: false,
            scattering_tol: 1e-3,
            eta1: c.eta1,
            c_tilde_1: c.c_tilde_1,
            c_prime: c.c_prime,
            big_c_prime: c.big_c_prime,
            tower_eta: c.tower_eta,
            c0: c.c0,
            c1: c.c1,
        }
    }
}

impl AnalysisSection {
    pub fn concentration_params(&self) -> ConcentrationParams {
        ConcentrationParams {
            eta1: self.eta1,
            c_tilde_1: self.c_tilde_1,
            c_prime: self.c_prime,
            big_c_prime: self.big_c_prime,
            tower_eta: self.tower_eta,
            c0: self.c0,
            c1: self.c1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
    pub grid: GridSection,
    #[serde(default)]
    pub nonlinearity: NonlinearitySection,
    #[serde(default)]
    pub evolution: EvolutionSection,
    #[serde(default)]
    pub threshold: ThresholdSection,
    #[serde(default)]
    pub data: DataSpec,
    #[serde(default)]
    pub analysis: AnalysisSection,
}

fn default_output_dir() -> String {
    "nlslab-out".into()
}

impl RunConfig {
    /// Parses, fills grid-dependent defaults and validates every section.
    pub fn from_toml(text: &str) -> Result<Self> {
        let de = toml::Deserializer::new(text);
        let mut cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let key = e.path().to_string();
            Error::Config {
                key,
                message: e.into_inner().message().trim().to_string(),
            }
        })?;
        cfg.resolve();
        cfg.validate()?;
        Ok(cfg)
    }

    /// Config with every default for dimension `dim`.
    pub fn minimal(dim: u32) -> Result<Self> {
        Self::from_toml(&format!("[grid]\ndim = {dim}\n"))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    fn resolve(&mut self) {
        if self.evolution.dt.is_none() {
            let h = self.grid.r_max / self.grid.modes as f64;
            self.evolution.dt = Some(1e-3 * h * h);
        }
    }

    fn validate(&self) -> Result<()> {
        let at = |key: &'static str| {
            move |e: Error| Error::Config {
                key: key.into(),
                message: e.to_string(),
            }
        };
        self.grid_spec().map_err(at("grid"))?;
        self.nonlinearity().map_err(at("nonlinearity"))?;
        self.evolution_params()?
            .validate()
            .map_err(at("evolution"))?;
        self.threshold_constants().map_err(at("threshold"))?;
        self.analysis
            .concentration_params()
            .validate()
            .map_err(at("analysis"))?;
        if !(self.analysis.scattering_tol > 0.0) {
            return Err(Error::Config {
                key: "analysis.scattering_tol".into(),
                message: "must be positive".into(),
            });
        }
        for &m in &self.analysis.virial_m {
            if !(m > 0.0 && 2.0 * m < self.grid.r_max) {
                return Err(Error::Config {
                    key: "analysis.virial_m".into(),
                    message: format!("m = {m} needs 0 < 2m < {}", self.grid.r_max),
                });
            }
        }
        let positive = |v: f64| v > 0.0 && v.is_finite();
        let ok = match &self.data {
            DataSpec::Gaussian { amplitude, width } => amplitude.is_finite() && positive(*width),
            DataSpec::GroundState {
                amplitude,
                scale,
                phase,
                taper_start,
                taper_end,
            } => {
                amplitude.is_finite()
                    && positive(*scale)
                    && phase.is_finite()
                    && 0.0 <= *taper_start
                    && taper_start < taper_end
                    && *taper_end <= 0.95
            }
            DataSpec::Ring {
                amplitude,
                radius,
                width,
            } => amplitude.is_finite() && *radius >= 0.0 && positive(*width),
            DataSpec::RandomSmooth { target, components } => {
                *target >= 0.0 && target.is_finite() && *components > 0
            }
        };
        if !ok {
            return Err(Error::Config {
                key: "data".into(),
                message: format!("invalid parameters {:?}", self.data),
            });
        }
        Ok(())
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        GridSpec::new(self.grid.dim, self.grid.r_max, self.grid.modes)
    }

    pub fn nonlinearity(&self) -> Result<NonlinearityParams> {
        NonlinearityParams::new(self.nonlinearity.gamma, self.grid.dim)
    }

    pub fn evolution_params(&self) -> Result<EvolutionParams> {
        let e = &self.evolution;
        Ok(EvolutionParams {
            dt: e.dt.expect("resolved"),
            t_end: e.t_end,
            stride: e.stride,
            amplitude_cap: e.amplitude_cap,
            kinetic_cap: e.kinetic_cap,
            boundary_limit: e.boundary_limit,
            k: e.k,
            nonlinearity: self.nonlinearity()?,
            linear: e.linear,
        })
    }

    pub fn threshold_constants(&self) -> Result<ThresholdConstants> {
        let t = &self.threshold;
        ThresholdConstants::new(
            self.grid.dim,
            t.delta,
            self.evolution.k,
            t.c_breve,
            t.big_c_breve,
            t.c_a,
        )
    }
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
        key: path.display().to_string(),
        message: e.to_string(),
    })?;
    RunConfig::from_toml(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_echoes_defaults() {
        let cfg = RunConfig::minimal(3).unwrap();
        let text = cfg.to_toml();
        for key in [
            "seed",
            "output_dir",
            "r_max",
            "modes",
            "gamma",
            "dt",
            "t_end",
            "delta",
            "family",
            "eta1",
        ] {
            assert!(text.contains(key), "{key} missing from\n{text}");
        }
        assert_eq!(cfg.evolution.dt, Some(1e-3 * (40.0f64 / 512.0).powi(2)));
    }

    #[test]
    fn unknown_keys_name_their_path() {
        let err = RunConfig::from_toml("[grid]\ndim = 3\nmodez = 4\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("grid") && err.contains("modez"), "{err}");
        let err = RunConfig::from_toml(
            "[grid]\ndim = 3\n[data]\nfamily = \"gaussian\"\namplitude = 1.0\nwidht = 2.0\n",
        )
        .unwrap_err()
        .to_string();
        assert!(err.contains("data") && err.contains("widht"), "{err}");
        let err = RunConfig::from_toml("[grid]\ndim = \"three\"\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("grid.dim"), "{err}");
        let err = RunConfig::from_toml("[grid]\ndim = 3\n[data]\nfamily = \"spiral\"\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("spiral"), "{err}");
        assert!(RunConfig::from_toml("[grid]\ndim = 3\n[analysis]\nvirial_m = [30.0]\n").is_err());
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let text = "seed = 7\n[grid]\ndim = 4\nr_max = 30.0\nmodes = 256\n[data]\nfamily = \"ring\"\namplitude = 0.3\nradius = 2.0\nwidth = 0.7\n[analysis]\nvirial_m = [3.0, 5.5]\nconcentration = true\n";
        let a = RunConfig::from_toml(text).unwrap();
        let s = a.to_toml();
        let b = RunConfig::from_toml(&s).unwrap();
        assert_eq!(a, b);
        assert_eq!(s, b.to_toml());
    }

    #[test]
    fn missing_file_is_reported() {
        let err = parse_config(Path::new("/nonexistent/nlslab.toml")).unwrap_err();
        assert!(matches!(err, Error::Config { .. }));
    }
}
