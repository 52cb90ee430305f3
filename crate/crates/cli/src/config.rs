//! Experiment configuration files (TOML) and built-in presets.

use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use cmi_core::codegen::{gen_rademacher, BocpSearchOptions, Code};
use cmi_core::geometry::builtin;
use cmi_core::pipeline::select_codes;
use cmi_core::rfchain::DetectionMode;
use cmi_core::{Acquisition, ArrayGeometry, Emitter, Scene, SimParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: Option<String>,
    pub geometry: GeometrySection,
    #[serde(default)]
    pub scene: SceneSection,
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default)]
    pub codes: CodesSection,
    #[serde(default)]
    pub acquisition: AcquisitionSection,
    #[serde(default)]
    pub calibration: CalibrationSection,
    #[serde(default)]
    pub output: OutputSection,
    /// Directory that relative file paths resolve against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub builtin: Option<String>,
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSection {
    pub file: Option<PathBuf>,
    #[serde(default)]
    pub background: f64,
    #[serde(default)]
    pub emitters: Vec<EmitterSpec>,
}

/// An emitter given either by angle (`theta_deg`, optional `phi_deg`) or by
/// direction cosines (`l`, optional `m`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmitterSpec {
    pub theta_deg: Option<f64>,
    pub phi_deg: Option<f64>,
    pub l: Option<f64>,
    pub m: Option<f64>,
    #[serde(default = "one")]
    pub brightness: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSection {
    pub sample_rate: f64,
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub samples_per_chip: usize,
    pub t_receiver: f64,
    pub combiner_gain: f64,
    pub filter_order: usize,
    pub element_taper: bool,
    pub mode: String,
    pub seed: u64,
}

impl Default for SimSection {
    fn default() -> Self {
        let p = SimParams::default();
        Self {
            sample_rate: p.sample_rate,
            carrier_hz: p.carrier_hz,
            bandwidth_hz: p.bandwidth_hz,
            samples_per_chip: p.samples_per_chip,
            t_receiver: p.t_receiver,
            combiner_gain: p.combiner_gain,
            filter_order: p.filter_order,
            element_taper: p.element_taper,
            mode: "envelope".into(),
            seed: p.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CodesSection {
    /// `walsh-bocp` or `rademacher`.
    pub family: String,
    pub length: usize,
    /// Defaults to the number the acquisition mode needs.
    pub count: Option<usize>,
    pub time_limit_s: f64,
}

impl Default for CodesSection {
    fn default() -> Self {
        Self {
            family: "walsh-bocp".into(),
            length: 512,
            count: None,
            time_limit_s: 60.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AcquisitionSection {
    pub mode: String,
}

impl Default for AcquisitionSection {
    fn default() -> Self {
        Self {
            mode: Acquisition::ThreeRun.to_string(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationSection {
    pub zero_baseline: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    pub oracle: bool,
    pub normalized: bool,
    pub dump_streams: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: None,
            oracle: true,
            normalized: false,
            dump_streams: false,
        }
    }
}

/// Everything a run needs, checked and built.
pub struct Resolved {
    pub geometry: ArrayGeometry,
    pub scene: Scene,
    pub params: SimParams,
    pub acquisition: Acquisition,
    pub codes: Vec<Code>,
    pub walsh_indices: Vec<usize>,
}

pub const PRESETS: &[(&str, &str)] = &[
    ("fig-point-source-20deg", include_str!("../presets/fig-point-source-20deg.toml")),
    ("fig-point-source-30deg", include_str!("../presets/fig-point-source-30deg.toml")),
    ("fig-point-source-40deg", include_str!("../presets/fig-point-source-40deg.toml")),
    ("fig-point-source-50deg", include_str!("../presets/fig-point-source-50deg.toml")),
    ("two-sources-20-30", include_str!("../presets/two-sources-20-30.toml")),
    ("two-sources-30-40", include_str!("../presets/two-sources-30-40.toml")),
    ("two-sources-0-10", include_str!("../presets/two-sources-0-10.toml")),
    ("linear-8-31", include_str!("../presets/linear-8-31.toml")),
    ("oracle-check-20deg", include_str!("../presets/oracle-check-20deg.toml")),
    ("planar-8-33", include_str!("../presets/planar-8-33.toml")),
    ("grid-16-169", include_str!("../presets/grid-16-169.toml")),
    ("t-config-81", include_str!("../presets/t-config-81.toml")),
];

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| anyhow!("invalid config: {}", e.message().trim()).context(span_hint(text, &e)))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg = Self::from_toml(&text).with_context(|| format!("in {}", path.display()))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn preset(name: &str) -> Result<Self> {
        let (_, text) = PRESETS
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| anyhow!("unknown preset '{name}'; try one of: {}", preset_names().join(", ")))?;
        Self::from_toml(text)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn display_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| "run".into())
    }

    fn path(&self, p: &Path) -> PathBuf {
        match &self.base_dir {
            Some(base) if p.is_relative() => base.join(p),
            _ => p.to_path_buf(),
        }
    }

    pub fn acquisition(&self) -> Result<Acquisition> {
        self.acquisition
            .mode
            .parse()
            .map_err(|e: String| anyhow!("acquisition.mode: {e}"))
    }

    pub fn geometry(&self) -> Result<ArrayGeometry> {
        match (&self.geometry.builtin, &self.geometry.file) {
            (Some(_), Some(_)) => bail!("geometry: give either 'builtin' or 'file', not both"),
            (None, None) => bail!("geometry: one of 'builtin' or 'file' is required"),
            (Some(name), None) => builtin(name).map_err(|e| anyhow!("geometry.builtin: {e}")),
            (None, Some(file)) => {
                let path = self.path(file);
                let text = std::fs::read_to_string(&path)
                    .with_context(|| format!("geometry.file: reading {}", path.display()))?;
                ArrayGeometry::parse(&text).map_err(|e| anyhow!("geometry.file: {e}"))
            }
        }
    }

    pub fn scene(&self) -> Result<Scene> {
        let s = &self.scene;
        if let Some(file) = &s.file {
            if !s.emitters.is_empty() {
                bail!("scene: give either 'file' or 'emitters', not both");
            }
            let path = self.path(file);
            let text =
                std::fs::read_to_string(&path).with_context(|| format!("scene.file: reading {}", path.display()))?;
            return Scene::parse(&text).map_err(|e| anyhow!("scene.file: {e}"));
        }
        let mut emitters = Vec::with_capacity(s.emitters.len());
        for (i, e) in s.emitters.iter().enumerate() {
            let field = |f: &str| format!("scene.emitters[{i}].{f}");
            let em = match (e.theta_deg, e.l) {
                (Some(_), Some(_)) => bail!("{}: give either theta_deg or l, not both", field("theta_deg")),
                (None, None) => bail!("{}: one of theta_deg or l is required", field("theta_deg")),
                (Some(theta), None) => {
                    if e.m.is_some() {
                        bail!("{}: use phi_deg with theta_deg", field("m"));
                    }
                    if !(-90.0..=90.0).contains(&theta) {
                        bail!("{}: {theta} outside -90..=90", field("theta_deg"));
                    }
                    Emitter::at_direction(theta, e.phi_deg.unwrap_or(0.0), e.brightness)
                }
                (None, Some(l)) => {
                    if e.phi_deg.is_some() {
                        bail!("{}: use m with l", field("phi_deg"));
                    }
                    Emitter {
                        l,
                        m: e.m.unwrap_or(0.0),
                        brightness: e.brightness,
                    }
                }
            };
            emitters.push(em);
        }
        Scene::new(emitters, s.background).map_err(|e| anyhow!("scene: {e}"))
    }

    pub fn params(&self) -> Result<SimParams> {
        let s = &self.sim;
        let mode = match s.mode.as_str() {
            "envelope" => DetectionMode::Envelope,
            "passband" => DetectionMode::Passband,
            other => bail!("sim.mode: unknown detection mode '{other}' (envelope | passband)"),
        };
        let p = SimParams {
            sample_rate: s.sample_rate,
            carrier_hz: s.carrier_hz,
            bandwidth_hz: s.bandwidth_hz,
            code_length: self.codes.length,
            samples_per_chip: s.samples_per_chip,
            t_receiver: s.t_receiver,
            combiner_gain: s.combiner_gain,
            filter_order: s.filter_order,
            element_taper: s.element_taper,
            mode,
            seed: s.seed,
        };
        p.validate().map_err(|e| anyhow!("sim: {e}"))?;
        Ok(p)
    }

    pub fn resolve(&self) -> Result<Resolved> {
        let geometry = self.geometry()?;
        let scene = self.scene()?;
        let acquisition = self.acquisition()?;
        let params = self.params()?;
        let n = geometry.len();
        let needed = acquisition.codes_needed(n);
        let count = self.codes.count.unwrap_or(needed);
        if count < needed {
            bail!("codes.count: {count} codes cannot serve {n} elements in {acquisition} mode (need {needed})");
        }
        let len = self.codes.length;
        if !(self.codes.time_limit_s.is_finite() && self.codes.time_limit_s > 0.0) {
            bail!("codes.time_limit_s: must be positive, got {}", self.codes.time_limit_s);
        }
        let (codes, walsh_indices) = match self.codes.family.as_str() {
            "walsh-bocp" => {
                let opts = BocpSearchOptions {
                    time_limit: Duration::from_secs_f64(self.codes.time_limit_s),
                };
                let set = select_codes(n, acquisition, len, opts)
                    .map_err(|e| anyhow!("codes.length/codes.count: {e}"))?;
                (set.members, set.walsh_indices)
            }
            "rademacher" => {
                let r = gen_rademacher(len).map_err(|e| anyhow!("codes.length: {e}"))?;
                // Row 0 is the all-ones code and carries no modulation.
                if r.len() - 1 < needed {
                    bail!(
                        "codes.length: only {} Rademacher codes at length {len}, need {needed}",
                        r.len() - 1
                    );
                }
                let idx = (1..=needed as u32).map(cmi_core::codegen::rademacher_walsh_index).collect();
                (r[1..=needed].to_vec(), idx)
            }
            other => bail!("codes.family: unknown family '{other}' (walsh-bocp | rademacher)"),
        };
        Ok(Resolved {
            geometry,
            scene,
            params,
            acquisition,
            codes,
            walsh_indices,
        })
    }
}

pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|(n, _)| *n).collect()
}

fn span_hint(text: &str, e: &toml::de::Error) -> String {
    match e.span() {
        Some(span) => {
            let line = text[..span.start.min(text.len())].matches('\n').count() + 1;
            format!("at line {line}")
        }
        None => "in config".into(),
    }
}
