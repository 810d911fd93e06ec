//! Run configuration: a flat key-value TOML file with sections, all defaults
//! printable.

use serde::{Deserialize, Serialize};

use blowup_core::error::{Error, Result};
use blowup_core::grid::GridSpec;
use blowup_core::integrator::IntegratorConfig;
use blowup_core::pipeline::{DatumSpec, OmegaSpec};
use blowup_core::surface::{Family1d, SurfaceDescriptor};
use blowup_core::verifier::VerifierConfig;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSection {
    pub n: usize,
    pub points: usize,
    pub length: f64,
    pub origin: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            n: 1,
            points: 256,
            length: std::f64::consts::TAU,
            origin: -std::f64::consts::PI,
        }
    }
}

/// One surface family with its parameters; unset parameters take family
/// defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SurfaceSection {
    pub family: String,
    pub lambda: f64,
    pub amps: Vec<f64>,
    pub amplitude: f64,
    pub center: f64,
    pub width: f64,
}

impl Default for SurfaceSection {
    fn default() -> Self {
        SurfaceSection {
            family: "cosine_well".into(),
            lambda: 0.05,
            amps: vec![],
            amplitude: 0.1,
            center: 0.0,
            width: 1.5,
        }
    }
}

impl SurfaceSection {
    pub fn family(&self) -> Result<Family1d> {
        Ok(match self.family.as_str() {
            "zero" => Family1d::Zero,
            "cosine_well" => Family1d::CosineWell {
                lambda: self.lambda,
            },
            "cosine_series" => Family1d::CosineSeries {
                amps: self.amps.clone(),
            },
            "bump" => Family1d::Bump {
                amplitude: self.amplitude,
                center: self.center,
                width: self.width,
            },
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unknown surface family '{other}' (expected zero | cosine_well | cosine_series | bump)"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct NormsSection {
    pub s0: f64,
    pub sigma: f64,
    pub s: f64,
}

impl Default for NormsSection {
    fn default() -> Self {
        NormsSection {
            s0: 2.0,
            sigma: 8.0,
            s: 4.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct DatumSection {
    pub theta: f64,
    pub center: f64,
    pub width: f64,
}

impl Default for DatumSection {
    fn default() -> Self {
        DatumSection {
            theta: 0.0,
            center: std::f64::consts::FRAC_PI_2,
            width: 1.2,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ControlSection {
    pub epsilon: f64,
}

impl Default for ControlSection {
    fn default() -> Self {
        ControlSection { epsilon: 1.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct OmegaSection {
    pub left: f64,
    pub right: f64,
    pub trace_dt: f64,
    /// Extract the boundary trace during `construct`.
    pub extract_trace: bool,
}

impl Default for OmegaSection {
    fn default() -> Self {
        OmegaSection {
            left: -2.0,
            right: 2.0,
            trace_dt: 0.05,
            extract_trace: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepSection {
    pub lambdas: Vec<f64>,
    pub thetas: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        // multipliers on the configured base surface: with the default
        // cosine well (amplitude 0.05) the effective amplitudes straddle the
        // epsilon = 1 budget boundary
        SweepSection {
            lambdas: vec![0.0, 0.05, 0.1, 0.2],
            thetas: vec![0.0, 1e-6, 1e-5, 1e-4],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RunSection {
    pub out_dir: String,
    pub seed: u64,
    /// Dump trajectory checkpoints as plain-text grids every N recorded
    /// checkpoints (0 = off).
    pub dump_every: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            out_dir: "out".into(),
            seed: 7,
            dump_every: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct RunConfig {
    pub grid: GridSection,
    pub surface: SurfaceSection,
    /// Second-axis family for n = 2 (defaults to zero).
    pub surface_y: Option<SurfaceSection>,
    pub norms: NormsSection,
    pub datum: DatumSection,
    pub control: ControlSection,
    pub integrator: IntegratorConfig,
    pub verifier: VerifierConfig,
    pub omega: OmegaSection,
    pub sweep: SweepSection,
    pub run: RunSection,
}

impl RunConfig {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
        let cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| Error::InvalidConfig(format!("cannot parse {}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.grid.n;
        if self.norms.s0 <= n as f64 / 2.0 + 1.0 {
            return Err(Error::InvalidConfig(format!(
                "s0 = {} must exceed n/2 + 1 = {}",
                self.norms.s0,
                n as f64 / 2.0 + 1.0
            )));
        }
        if self.norms.s < self.norms.s0 + 1.0 {
            return Err(Error::InvalidConfig(format!(
                "s = {} must be at least s0 + 1 = {}",
                self.norms.s,
                self.norms.s0 + 1.0
            )));
        }
        if self.control.epsilon <= 0.0 {
            return Err(Error::InvalidConfig("epsilon must be positive".into()));
        }
        self.surface.family()?;
        self.integrator.validate()?;
        Ok(())
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        match self.grid.n {
            1 => GridSpec::line(self.grid.points, self.grid.length, self.grid.origin),
            2 => GridSpec::square(
                [self.grid.points, self.grid.points],
                [self.grid.length, self.grid.length],
                [self.grid.origin, self.grid.origin],
            ),
            other => Err(Error::InvalidConfig(format!("dimension {other} not supported"))),
        }
    }

    pub fn surface_descriptor(&self) -> Result<SurfaceDescriptor> {
        let mut axes = vec![self.surface.family()?];
        if self.grid.n == 2 {
            axes.push(match &self.surface_y {
                Some(s) => s.family()?,
                None => Family1d::Zero,
            });
        }
        Ok(SurfaceDescriptor { axes })
    }

    pub fn datum_spec(&self) -> DatumSpec {
        DatumSpec {
            theta: self.datum.theta,
            center: vec![self.datum.center; self.grid.n],
            width: self.datum.width,
        }
    }

    pub fn omega_spec(&self) -> OmegaSpec {
        OmegaSpec {
            left: self.omega.left,
            right: self.omega.right,
        }
    }

    /// Integrator config with the energy index tied to [norms].s.
    pub fn integrator_config(&self) -> IntegratorConfig {
        IntegratorConfig {
            energy_s: self.norms.s,
            ..self.integrator.clone()
        }
    }
}
