use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use clap::ValueEnum;
use gomboc::{PhaseFunction, Preset, ShapeSpec};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PresetName {
    G1,
    G2,
}

impl From<PresetName> for Preset {
    fn from(p: PresetName) -> Self {
        match p {
            PresetName::G1 => Preset::G1,
            PresetName::G2 => Preset::G2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeshFormat {
    StlBin,
    StlAscii,
    Obj,
}

/// A phase law written either as `kind[:param[:param]]` or as
/// `{"kind": ..., "params": [...]}`.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum PhaseSpec {
    Text(String),
    Structured(StructuredPhase),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructuredPhase {
    kind: String,
    #[serde(default)]
    params: Vec<f64>,
}

impl PhaseSpec {
    pub fn build(&self) -> Result<PhaseFunction> {
        let (kind, params) = match self {
            PhaseSpec::Text(s) => {
                let mut parts = s.split(':');
                let kind = parts.next().unwrap_or_default().to_string();
                let params = parts
                    .map(|p| p.parse::<f64>().with_context(|| format!("bad phase parameter '{p}' in '{s}'")))
                    .collect::<Result<Vec<_>>>()?;
                (kind, params)
            }
            PhaseSpec::Structured(p) => (p.kind.clone(), p.params.clone()),
        };
        let phase = match (kind.as_str(), params.as_slice()) {
            ("linear-wrap", [n]) => {
                if n.fract() != 0.0 || *n < 0.0 || *n > u32::MAX as f64 {
                    bail!("linear-wrap needs an integer wrap number, got {n}");
                }
                PhaseFunction::linear_wrap(*n as u32)?
            }
            ("cosine-cubic", []) => PhaseFunction::CosineCubic,
            ("linear", [slope]) => PhaseFunction::linear(*slope, 0.0)?,
            ("linear", [slope, offset]) => PhaseFunction::linear(*slope, *offset)?,
            _ => bail!(
                "unknown phase '{kind}' with {} parameter(s); expected linear-wrap:<n>, cosine-cubic, or linear:<slope>[:<offset>]",
                params.len()
            ),
        };
        Ok(phase)
    }
}

#[derive(Clone, Copy, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Resolution {
    pub ntheta: Option<usize>,
    pub nphi: Option<usize>,
}

/// Contents of a `--config` file. Every field is optional; flags win.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub preset: Option<PresetName>,
    pub beta: Option<f64>,
    pub phase: Option<PhaseSpec>,
    pub scale: Option<f64>,
    #[serde(default)]
    pub quadrature: Resolution,
    #[serde(default)]
    pub equilibrium_scan: Resolution,
    #[serde(default)]
    pub curvature_scan: Resolution,
    #[serde(default)]
    pub mesh: Resolution,
    pub tol: Option<f64>,
    pub bracket: Option<[f64; 2]>,
    pub format: Option<MeshFormat>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Shape flags shared by every subcommand.
#[derive(Clone, Debug, Default, clap::Args)]
pub struct ShapeArgs {
    /// Built-in shape.
    #[arg(long, value_enum)]
    pub preset: Option<PresetName>,
    /// Perturbation amplitude, 0 < beta < 0.25. Defaults to the preset's value.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Phase law: linear-wrap:<n>, cosine-cubic, or linear:<slope>[:<offset>].
    #[arg(long)]
    pub phase: Option<String>,
    /// Physical scale r0.
    #[arg(long)]
    pub scale: Option<f64>,
    /// JSON config file; flags override its fields.
    #[arg(long)]
    pub config: Option<std::path::PathBuf>,
}

/// The shape after merging the config file and flags.
#[derive(Clone, Debug, Serialize)]
pub struct ShapeEcho {
    pub preset: Option<PresetName>,
    pub beta: f64,
    pub phase: String,
    pub scale_r0: f64,
}

impl ShapeArgs {
    pub fn file(&self) -> Result<ConfigFile> {
        match &self.config {
            Some(p) => ConfigFile::load(p),
            None => Ok(ConfigFile::default()),
        }
    }

    /// The phase law alone, for commands that sweep the amplitude.
    pub fn resolve_phase(&self, file: &ConfigFile) -> Result<(PhaseFunction, Option<PresetName>)> {
        let preset = self.preset.or(file.preset);
        let phase_spec = self.phase.clone().map(PhaseSpec::Text).or_else(|| file.phase.clone());
        let phase = match (&phase_spec, preset) {
            (Some(spec), _) => spec.build()?,
            (None, Some(p)) => Preset::from(p).phase(),
            (None, None) => bail!("no shape given: pass --preset or --phase"),
        };
        Ok((phase, preset))
    }

    pub fn resolve(&self, file: &ConfigFile) -> Result<(ShapeSpec, ShapeEcho)> {
        let (phase, preset) = self.resolve_phase(file)?;
        let beta = self
            .beta
            .or(file.beta)
            .or(preset.map(|p| Preset::from(p).default_beta()))
            .ok_or_else(|| anyhow!("--beta is required when no preset is given"))?;
        let scale = self.scale.or(file.scale).unwrap_or(1.0);
        let shape = ShapeSpec::new(beta, phase)?.with_scale(scale)?;
        let echo = ShapeEcho {
            preset,
            beta,
            phase: shape.phase().name(),
            scale_r0: scale,
        };
        Ok((shape, echo))
    }
}

/// `--ntheta` / `--nphi`, whose meaning depends on the subcommand.
#[derive(Clone, Copy, Debug, Default, clap::Args)]
pub struct GridArgs {
    #[arg(long)]
    pub ntheta: Option<usize>,
    #[arg(long)]
    pub nphi: Option<usize>,
}

impl GridArgs {
    pub fn pick(&self, file: Resolution, default: (usize, usize)) -> (usize, usize) {
        (
            self.ntheta.or(file.ntheta).unwrap_or(default.0),
            self.nphi.or(file.nphi).unwrap_or(default.1),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phase_syntax() {
        let p = |s: &str| PhaseSpec::Text(s.into()).build().map(|p| p.name());
        assert_eq!(p("linear-wrap:5").unwrap(), "linear-wrap(5)");
        assert_eq!(p("cosine-cubic").unwrap(), "cosine-cubic");
        assert_eq!(p("linear:3").unwrap(), "linear(3)");
        assert_eq!(p("linear:3:0.5").unwrap(), "linear(3,0.5)");
        assert!(p("linear-wrap:4").is_err());
        assert!(p("linear-wrap:2.5").is_err());
        assert!(p("spiral").is_err());
        assert!(p("linear:x").is_err());
    }

    #[test]
    fn structured_phase() {
        let c: ConfigFile = serde_json::from_str(r#"{"phase": {"kind": "linear", "params": [3, 0.25]}}"#).unwrap();
        assert_eq!(c.phase.unwrap().build().unwrap().name(), "linear(3,0.25)");
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(serde_json::from_str::<ConfigFile>(r#"{"preset": "g1", "colour": 1}"#).is_err());
        assert!(serde_json::from_str::<ConfigFile>(r#"{"mesh": {"ntheta": 8, "rows": 1}}"#).is_err());
    }

    #[test]
    fn flags_win_over_file() {
        let file: ConfigFile = serde_json::from_str(r#"{"preset": "g2", "beta": 0.1, "scale": 3}"#).unwrap();
        let args = ShapeArgs {
            beta: Some(0.05),
            ..Default::default()
        };
        let (shape, echo) = args.resolve(&file).unwrap();
        assert_eq!(shape.beta(), 0.05);
        assert_eq!(shape.scale_r0(), 3.0);
        assert_eq!(echo.phase, "cosine-cubic");
    }

    #[test]
    fn defaults_to_preset_beta() {
        let args = ShapeArgs {
            preset: Some(PresetName::G1),
            ..Default::default()
        };
        assert_eq!(args.resolve(&ConfigFile::default()).unwrap().0.beta(), 0.15);
        assert!(ShapeArgs::default().resolve(&ConfigFile::default()).is_err());
        let custom = ShapeArgs {
            phase: Some("linear:3".into()),
            ..Default::default()
        };
        assert!(custom.resolve(&ConfigFile::default()).is_err());
    }
}
