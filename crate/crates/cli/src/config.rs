//! TOML run configuration: every numeric knob of the pipeline, validated
//! with the same rules the computational modules enforce. Unknown keys are
//! rejected so typos fail loudly.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::CliError;
use chainwave_core::{validate_chain, ChainGeometry, Variant};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: GeometrySection,
    #[serde(default)]
    pub spectrum: SpectrumSection,
    #[serde(default)]
    pub modes: ModesSection,
    #[serde(default)]
    pub simulate: SimulateSection,
    #[serde(default)]
    pub resolvent: ResolventSection,
    #[serde(default)]
    pub decay: DecaySection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub lengths: Vec<f64>,
    /// Optional cross-check against lengths.len() / 2.
    pub n_pairs: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumSection {
    pub z_min: f64,
    pub z_max: f64,
    pub scan_points: usize,
    pub tol: f64,
    pub k_max: u32,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        Self {
            z_min: 0.5,
            z_max: 12.0,
            scan_points: 9000,
            tol: 1e-12,
            k_max: 2000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModesSection {
    /// How many of the lowest roots to export.
    pub count: usize,
    pub samples_per_edge: usize,
}

impl Default for ModesSection {
    fn default() -> Self {
        Self {
            count: 8,
            samples_per_edge: 200,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateSection {
    pub variant: String,
    pub h: f64,
    /// Zero means "use h/2".
    pub dt: f64,
    pub t_end: f64,
    pub sample_every: usize,
    /// "smooth-bump", "zero-mode:<i>" or "eigenmode:<k>" (1-based).
    pub initial: String,
}

impl Default for SimulateSection {
    fn default() -> Self {
        Self {
            variant: "p2".into(),
            h: 0.025,
            dt: 0.0,
            t_end: 100.0,
            sample_every: 10,
            initial: "smooth-bump".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResolventSection {
    pub beta_min: f64,
    /// Zero means "use the trust horizon".
    pub beta_max: f64,
    pub beta_count: usize,
    /// Explicit list; overrides the grid when nonempty.
    pub betas: Vec<f64>,
}

impl Default for ResolventSection {
    fn default() -> Self {
        Self {
            beta_min: 10.0,
            beta_max: 0.0,
            beta_count: 24,
            betas: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecaySection {
    pub window: [f64; 2],
}

impl Default for DecaySection {
    fn default() -> Self {
        Self {
            window: [10.0, 1000.0],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: String,
    pub emit_svg: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: "out".into(),
            emit_svg: false,
        }
    }
}

/// Which initial state a simulation starts from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialData {
    SmoothBump,
    /// 1-based zero-mode index.
    ZeroMode(usize),
    /// 1-based discrete eigenmode index.
    Eigenmode(usize),
}

impl RunConfig {
    pub fn geometry(&self) -> Result<ChainGeometry, CliError> {
        let geom = validate_chain(&self.geometry.lengths)
            .map_err(|e| CliError::validation("geometry.lengths", &e.to_string()))?;
        if let Some(n) = self.geometry.n_pairs {
            if n != geom.n_pairs() {
                return Err(CliError::validation(
                    "geometry.n_pairs",
                    &format!("states {n} pairs but lengths give {}", geom.n_pairs()),
                ));
            }
        }
        Ok(geom)
    }

    pub fn variant(&self) -> Result<Variant, CliError> {
        match self.simulate.variant.as_str() {
            "p1" => Ok(Variant::P1),
            "p2" => Ok(Variant::P2),
            "pc" => Ok(Variant::Pc),
            other => Err(CliError::validation(
                "simulate.variant",
                &format!("unknown variant {other:?} (expected p1, p2 or pc)"),
            )),
        }
    }

    pub fn initial_data(&self) -> Result<InitialData, CliError> {
        let spec = self.simulate.initial.as_str();
        if spec == "smooth-bump" {
            return Ok(InitialData::SmoothBump);
        }
        if let Some(ix) = spec.strip_prefix("zero-mode:") {
            let i: usize = ix
                .parse()
                .map_err(|_| CliError::validation("simulate.initial", "bad zero-mode index"))?;
            return Ok(InitialData::ZeroMode(i));
        }
        if let Some(ix) = spec.strip_prefix("eigenmode:") {
            let k: usize = ix
                .parse()
                .map_err(|_| CliError::validation("simulate.initial", "bad eigenmode index"))?;
            return Ok(InitialData::Eigenmode(k));
        }
        Err(CliError::validation(
            "simulate.initial",
            &format!("unknown selector {spec:?}"),
        ))
    }

    pub fn dt(&self) -> f64 {
        if self.simulate.dt > 0.0 {
            self.simulate.dt
        } else {
            self.simulate.h / 2.0
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        self.geometry()?;
        self.variant()?;
        self.initial_data()?;
        let s = &self.spectrum;
        if !(s.z_min > 0.0 && s.z_max > s.z_min) {
            return Err(CliError::validation(
                "spectrum.z_range",
                &format!("need 0 < z_min < z_max, got ({}, {})", s.z_min, s.z_max),
            ));
        }
        if s.scan_points < 2 {
            return Err(CliError::validation("spectrum.scan_points", "need >= 2"));
        }
        if !(s.tol > 0.0) {
            return Err(CliError::validation("spectrum.tol", "must be > 0"));
        }
        if !(self.simulate.h > 0.0) {
            return Err(CliError::validation("simulate.h", "must be > 0"));
        }
        if self.simulate.dt < 0.0 {
            return Err(CliError::validation("simulate.dt", "must be >= 0"));
        }
        if !(self.simulate.t_end > 0.0) {
            return Err(CliError::validation("simulate.t_end", "must be > 0"));
        }
        let r = &self.resolvent;
        if !(r.beta_min > 0.0) {
            return Err(CliError::validation("resolvent.beta_min", "must be > 0"));
        }
        if r.beta_max != 0.0 && r.beta_max <= r.beta_min {
            return Err(CliError::validation(
                "resolvent.beta_max",
                "must exceed beta_min (or be 0 for the trust horizon)",
            ));
        }
        let [lo, hi] = self.decay.window;
        if !(lo > 1.0 && hi > lo) {
            return Err(CliError::validation(
                "decay.window",
                &format!("need 1 < lo < hi, got [{lo}, {hi}]"),
            ));
        }
        if self.modes.count == 0 || self.modes.samples_per_edge < 2 {
            return Err(CliError::validation("modes", "count and samples must be positive"));
        }
        Ok(())
    }
}

/// Loads, parses and fully validates a configuration file.
pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
    let config: RunConfig = toml::from_str(&text).map_err(|e| {
        let line = e
            .span()
            .map(|s| text[..s.start.min(text.len())].lines().count())
            .unwrap_or(0);
        CliError::Parse {
            line,
            message: e.message().to_string(),
        }
    })?;
    config.validate()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn load_str(text: &str) -> Result<RunConfig, CliError> {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        load_config(f.path())
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = load_str("[geometry]\nlengths = [1.0, 1.0]\n").unwrap();
        assert_eq!(cfg.spectrum.z_min, 0.5);
        assert_eq!(cfg.dt(), cfg.simulate.h / 2.0);
        assert_eq!(cfg.output.dir, "out");
        assert_eq!(cfg.geometry().unwrap().n_pairs(), 1);
    }

    #[test]
    fn odd_length_count_is_a_validation_error() {
        let err = load_str("[geometry]\nlengths = [1.0, 1.0, 1.0]\n").unwrap_err();
        assert!(matches!(err, CliError::Validation { ref field, .. } if field == "geometry.lengths"));
    }

    #[test]
    fn inverted_z_range_is_rejected() {
        let err = load_str(
            "[geometry]\nlengths = [1.0, 1.0]\n[spectrum]\nz_min = 5.0\nz_max = 2.0\n",
        )
        .unwrap_err();
        assert!(matches!(err, CliError::Validation { ref field, .. } if field == "spectrum.z_range"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = load_str("[geometry]\nlengths = [1.0, 1.0]\nwhatever = 3\n").unwrap_err();
        assert!(matches!(err, CliError::Parse { .. }));
    }

    #[test]
    fn initial_selectors_parse() {
        let cfg = load_str(
            "[geometry]\nlengths = [1.0, 1.0, 1.0, 1.0]\n[simulate]\ninitial = \"zero-mode:1\"\n",
        )
        .unwrap();
        assert_eq!(cfg.initial_data().unwrap(), InitialData::ZeroMode(1));
        let bad = load_str(
            "[geometry]\nlengths = [1.0, 1.0]\n[simulate]\ninitial = \"nonsense\"\n",
        );
        assert!(bad.is_err());
    }
}
