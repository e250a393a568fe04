//! Scenario files (TOML). Every field has a default so a run can be
//! described by only what differs from it; the fully resolved config is
//! echoed into the report.

use std::path::PathBuf;

use lsinv::domain::{Grid, LatticeSpec, SymmetryTransform, TransformKind};
use lsinv::floquet::{FloquetSettings, PropagatorScheme, DEFAULT_SUBSTEPS, DEFAULT_TIME_SAMPLES};
use lsinv::hamiltonian::{PlaneWaveBasis, DEFAULT_K_MAX};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    StaticDefect,
    ShiftScan,
    Driven,
    Convergence,
    DeltaOracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    #[serde(default)]
    pub lattice: LatticeConfig,
    #[serde(default)]
    pub basis: BasisConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub transform: TransformConfig,
    #[serde(default)]
    pub floquet: FloquetConfig,
    #[serde(default)]
    pub detection: DetectionConfig,
    #[serde(default)]
    pub convergence: ConvergenceConfig,
    #[serde(default)]
    pub delta_oracle: DeltaOracleConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Defect {
    pub position: f64,
    pub strength: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatticeConfig {
    /// Number of barriers; zero gives an empty supercell.
    pub count: usize,
    pub spacing: f64,
    pub strength: f64,
    pub width: f64,
    /// Required for an empty lattice, otherwise `count * spacing`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub supercell: Option<f64>,
    pub tail_threshold: f64,
    pub defects: Vec<Defect>,
    /// Shaking amplitude `A`; only read by the driven scenario.
    pub amplitude: f64,
    pub omega: f64,
}

impl Default for LatticeConfig {
    fn default() -> Self {
        Self {
            count: 5,
            spacing: 5.0,
            strength: 1.0,
            width: 0.5,
            supercell: None,
            tail_threshold: 1e-12,
            defects: Vec::new(),
            amplitude: 0.0,
            omega: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BasisConfig {
    pub k_max: usize,
}

impl Default for BasisConfig {
    fn default() -> Self {
        Self { k_max: DEFAULT_K_MAX }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// Points over the supercell, end points included. Takes precedence
    /// over `spacing`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_points: Option<usize>,
    /// Largest allowed spacing.
    pub spacing: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { n_points: None, spacing: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl ScanRange {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        if !(self.step > 0.0) || !(self.stop >= self.start) {
            return Err(CliError::Config(format!(
                "scan range needs step > 0 and stop >= start, got {self:?}"
            )));
        }
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        if count > 100_000 {
            return Err(CliError::Config(format!("scan range has {count} entries")));
        }
        Ok((0..count).map(|i| self.start + self.step * i as f64).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransformConfig {
    pub kind: TransformKind,
    /// `L` or `α`; defaults to the lattice spacing for translations and the
    /// origin for inversions.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parameter: Option<f64>,
    /// Shift-scan range of `ΔL`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanRange>,
    /// Window on which scan rows are scored.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trim: Option<[f64; 2]>,
}

impl Default for TransformConfig {
    fn default() -> Self {
        Self { kind: TransformKind::Translation, parameter: None, scan: None, trim: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FloquetConfig {
    pub substeps: usize,
    pub n_time_samples: usize,
    pub scheme: PropagatorScheme,
    /// Write every `time_stride`-th sample to the time-resolved outputs.
    pub time_stride: usize,
}

impl Default for FloquetConfig {
    fn default() -> Self {
        Self {
            substeps: DEFAULT_SUBSTEPS,
            n_time_samples: DEFAULT_TIME_SAMPLES,
            scheme: PropagatorScheme::default(),
            time_stride: 8,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectionConfig {
    /// Absolute `|Q'|` floor; the data-driven default when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub floor: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceConfig {
    pub k_max: Vec<usize>,
    pub spacings: Vec<f64>,
    pub domain: [f64; 2],
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self {
            k_max: vec![8, 12, 16, 24, 32, 48, 64, 96, 128],
            spacings: vec![0.1, 0.05, 0.025],
            domain: [3.0, 12.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeltaOracleConfig {
    pub strength: f64,
    pub length: f64,
    pub k: ScanRange,
}

impl Default for DeltaOracleConfig {
    fn default() -> Self {
        Self { strength: 2.5, length: 5.0, k: ScanRange { start: 0.01, stop: 4.0, step: 0.01 } }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub directory: Option<PathBuf>,
    /// Any of `tsv`, `json`.
    pub formats: Vec<String>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { directory: None, formats: vec!["tsv".into(), "json".into()] }
    }
}

impl OutputConfig {
    pub fn wants(&self, format: &str) -> bool {
        self.formats.iter().any(|f| f == format)
    }
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("cannot parse config: {e}")))
    }

    #[cfg(test)]
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    /// Check everything that can be checked before any computation.
    pub fn validate(&self) -> Result<(), CliError> {
        for f in &self.output.formats {
            if f != "tsv" && f != "json" {
                return Err(CliError::Config(format!("unknown output format {f:?}")));
            }
        }
        match self.scenario {
            Scenario::DeltaOracle => {
                let d = &self.delta_oracle;
                if !(d.length > 0.0) || !d.strength.is_finite() {
                    return Err(CliError::Config("delta oracle needs a finite strength and length > 0".into()));
                }
                if !(d.k.start > 0.0) {
                    return Err(CliError::Config("delta oracle wavenumbers must be positive".into()));
                }
                d.k.values()?;
                return Ok(());
            }
            Scenario::Convergence => {
                let c = &self.convergence;
                if c.k_max.is_empty() || c.spacings.is_empty() {
                    return Err(CliError::Config("convergence needs k_max and spacings".into()));
                }
                let lattice = self.lattice()?;
                for &k in &c.k_max {
                    PlaneWaveBasis::new(k, lattice.supercell())?;
                }
                for &dx in &c.spacings {
                    Grid::supercell(lattice.supercell(), dx)?;
                }
                if !(c.domain[1] > c.domain[0]) {
                    return Err(CliError::Config(format!("empty convergence domain {:?}", c.domain)));
                }
            }
            Scenario::ShiftScan => {
                let scan = self
                    .transform
                    .scan
                    .as_ref()
                    .ok_or_else(|| CliError::Config("shift-scan needs transform.scan".into()))?;
                scan.values()?;
                if self.transform.kind != TransformKind::Translation {
                    return Err(CliError::Config("shift-scan needs a translation transform".into()));
                }
            }
            Scenario::Driven => {
                self.floquet_settings().validate()?;
                if self.floquet.time_stride == 0 {
                    return Err(CliError::Config("floquet.time_stride must be at least 1".into()));
                }
                if self.transform.kind != TransformKind::Translation {
                    return Err(CliError::Config("driven scenario analyses translations".into()));
                }
            }
            Scenario::StaticDefect => {}
        }
        let lattice = self.lattice()?;
        self.basis(lattice.supercell())?;
        self.grid(lattice.supercell())?;
        if let Some(floor) = self.detection.floor {
            if !(floor >= 0.0) {
                return Err(CliError::Config(format!("detection floor must be non-negative, got {floor}")));
            }
        }
        Ok(())
    }

    pub fn lattice(&self) -> Result<LatticeSpec, CliError> {
        let c = &self.lattice;
        let mut lattice = if c.count == 0 {
            let r = c
                .supercell
                .ok_or_else(|| CliError::Config("an empty lattice needs lattice.supercell".into()))?;
            LatticeSpec::empty(r)?
        } else {
            let chain = LatticeSpec::chain(c.count, c.spacing, c.strength, c.width)?;
            match c.supercell {
                Some(r) if (r - chain.supercell()).abs() > 1e-12 => {
                    LatticeSpec::new(r, chain.centers().to_vec(), chain.strengths().to_vec(), c.width)?
                }
                _ => chain,
            }
        };
        lattice = lattice.with_tail_threshold(c.tail_threshold)?;
        for d in &c.defects {
            lattice = lattice.with_strength_at(d.position, d.strength)?;
        }
        if self.scenario == Scenario::Driven {
            lattice = lattice.with_driving(c.amplitude, c.omega)?;
        }
        Ok(lattice)
    }

    pub fn basis(&self, supercell: f64) -> Result<PlaneWaveBasis, CliError> {
        Ok(PlaneWaveBasis::new(self.basis.k_max, supercell)?)
    }

    pub fn grid(&self, supercell: f64) -> Result<Grid, CliError> {
        match self.grid.n_points {
            Some(n) => Ok(Grid::new(-0.5 * supercell, 0.5 * supercell, n)?),
            None => Ok(Grid::supercell(supercell, self.grid.spacing)?),
        }
    }

    pub fn transform(&self) -> SymmetryTransform {
        match self.transform.kind {
            TransformKind::Translation => {
                SymmetryTransform::translation(self.transform.parameter.unwrap_or(self.lattice.spacing))
            }
            TransformKind::Inversion => SymmetryTransform::inversion(self.transform.parameter.unwrap_or(0.0)),
        }
    }

    pub fn floquet_settings(&self) -> FloquetSettings {
        FloquetSettings {
            substeps: self.floquet.substeps,
            n_time_samples: self.floquet.n_time_samples,
            scheme: self.floquet.scheme,
        }
    }

    /// Fill in the values the run will actually use, so the echoed config
    /// reproduces it without relying on defaults that might change.
    pub fn resolved(mut self) -> Result<Self, CliError> {
        if self.transform.parameter.is_none() && self.scenario != Scenario::DeltaOracle {
            self.transform.parameter = Some(self.transform().parameter);
        }
        if self.lattice.supercell.is_none() && self.lattice.count > 0 {
            self.lattice.supercell = Some(self.lattice.count as f64 * self.lattice.spacing);
        }
        Ok(self)
    }
}
