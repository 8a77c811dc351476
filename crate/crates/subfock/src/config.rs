//! Run configuration: system/weight specs from flags or TOML/JSON files.

use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::poly::{parse_poly, HomPoly, PolyMode};
use crate::report::Format;
use crate::subproduct::{named_system, Caps, NamedSystem, SubproductSystem};
use crate::weights::{WeightSystem, DEFAULT_INVARIANCE_TOL};

pub const DEFAULT_SEED: u64 = 0xB3;

/// An ideal description file: `{ n, mode: "free"|"commutative", generators }`.
#[derive(Clone, Debug, Deserialize)]
pub struct IdealFile {
    pub n: usize,
    pub mode: PolyMode,
    pub generators: Vec<String>,
}

impl IdealFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let parsed = if path.extension().and_then(|e| e.to_str()) == Some("json") {
            serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{path:?}: {e}")))?
        } else {
            toml::from_str(&text).map_err(|e| Error::Parse(format!("{path:?}: {e}")))?
        };
        Ok(parsed)
    }

    pub fn parse_generators(&self) -> Result<Vec<HomPoly>> {
        self.generators
            .iter()
            .map(|g| parse_poly(g, self.n, self.mode))
            .collect()
    }
}

/// Optional TOML config mirroring the command-line flags.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub system: Option<String>,
    pub ideal: Option<String>,
    pub n: Option<usize>,
    #[serde(rename = "M")]
    pub m_max: Option<usize>,
    pub q: Option<f64>,
    pub monomials: Option<Vec<String>>,
    pub weights: Option<Vec<f64>>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub format: Option<Format>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Parse(format!("{path:?}: {e}")))
    }
}

/// Fully resolved run configuration.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub system_name: Option<String>,
    pub ideal_path: Option<String>,
    pub n: usize,
    pub m_max: usize,
    pub q: f64,
    pub monomials: Vec<String>,
    pub weights: Option<Vec<f64>>,
    pub tol: Option<f64>,
    pub seed: u64,
    pub format: Format,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            system_name: Some("symmetric".into()),
            ideal_path: None,
            n: 2,
            m_max: 6,
            q: 1.0,
            monomials: Vec::new(),
            weights: None,
            tol: None,
            seed: DEFAULT_SEED,
            format: Format::Csv,
        }
    }
}

impl RunConfig {
    /// Validates the invariants shared by every command.
    pub fn check(&self, needs_limits: bool) -> Result<()> {
        if needs_limits && self.m_max < 2 {
            return Err(Error::Headroom { needed: 2, have: self.m_max });
        }
        if let Some(tol) = self.tol {
            if tol <= 0.0 {
                return Err(Error::NonPositiveTol(tol));
            }
        }
        if let Some(ws) = &self.weights {
            if ws.iter().any(|&w| w <= 0.0) {
                return Err(Error::Parse("weights must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn build_system(&self) -> Result<Arc<SubproductSystem>> {
        let caps = Caps::default();
        let system = if let Some(path) = &self.ideal_path {
            let ideal = IdealFile::load(Path::new(path))?;
            let generators = ideal.parse_generators()?;
            SubproductSystem::build_from_ideal(&generators, ideal.n, self.m_max, &caps)?
        } else {
            let name = self.system_name.as_deref().unwrap_or("symmetric");
            let spec = NamedSystem::parse(name, Some(self.q), &self.monomials)?;
            named_system(&spec, self.n, self.m_max, &caps)?
        };
        Ok(Arc::new(system))
    }

    pub fn build_weights(&self, system: &SubproductSystem) -> Result<WeightSystem> {
        let tol = self.tol.unwrap_or(DEFAULT_INVARIANCE_TOL);
        match &self.weights {
            Some(q) => WeightSystem::build(system, q, tol),
            None => WeightSystem::build(system, &vec![1.0; system.n()], tol),
        }
    }

    /// Applies a config file underneath the current (flag-provided) values.
    pub fn overlay_defaults(&mut self, file: &ConfigFile, flags_set: &FlagsSet) {
        if !flags_set.system {
            if let Some(v) = &file.system {
                self.system_name = Some(v.clone());
            }
        }
        if !flags_set.ideal {
            if let Some(v) = &file.ideal {
                self.ideal_path = Some(v.clone());
                if file.system.is_none() {
                    self.system_name = None;
                }
            }
        }
        if !flags_set.n {
            if let Some(v) = file.n {
                self.n = v;
            }
        }
        if !flags_set.m_max {
            if let Some(v) = file.m_max {
                self.m_max = v;
            }
        }
        if !flags_set.q {
            if let Some(v) = file.q {
                self.q = v;
            }
        }
        if !flags_set.monomials {
            if let Some(v) = &file.monomials {
                self.monomials = v.clone();
            }
        }
        if !flags_set.weights {
            if let Some(v) = &file.weights {
                self.weights = Some(v.clone());
            }
        }
        if !flags_set.tol {
            if let Some(v) = file.tol {
                self.tol = Some(v);
            }
        }
        if !flags_set.seed {
            if let Some(v) = file.seed {
                self.seed = v;
            }
        }
        if !flags_set.format {
            if let Some(v) = file.format {
                self.format = v;
            }
        }
    }

    pub fn system_label(&self) -> String {
        if let Some(path) = &self.ideal_path {
            format!("ideal:{path} (M={})", self.m_max)
        } else {
            let name = self.system_name.as_deref().unwrap_or("symmetric");
            match name {
                "quantum_plane" => format!("quantum_plane(q={}, M={})", self.q, self.m_max),
                "monomial" => format!(
                    "monomial({}; n={}, M={})",
                    self.monomials.join("; "),
                    self.n,
                    self.m_max
                ),
                other => format!("{other}(n={}, M={})", self.n, self.m_max),
            }
        }
    }
}

/// Which flags were given explicitly on the command line (so config files do
/// not override them).
#[derive(Clone, Copy, Debug, Default)]
pub struct FlagsSet {
    pub system: bool,
    pub ideal: bool,
    pub n: bool,
    pub m_max: bool,
    pub q: bool,
    pub monomials: bool,
    pub weights: bool,
    pub tol: bool,
    pub seed: bool,
    pub format: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn ideal_file_toml_and_json() {
        let dir = tempfile::tempdir().unwrap();
        let toml_path = dir.path().join("qp.toml");
        std::fs::File::create(&toml_path)
            .unwrap()
            .write_all(b"n = 2\nmode = \"free\"\ngenerators = [\"z1*z2 - 0.5*z2*z1\"]\n")
            .unwrap();
        let ideal = IdealFile::load(&toml_path).unwrap();
        assert_eq!(ideal.n, 2);
        assert_eq!(ideal.parse_generators().unwrap().len(), 1);

        let json_path = dir.path().join("qp.json");
        std::fs::File::create(&json_path)
            .unwrap()
            .write_all(br#"{"n": 2, "mode": "commutative", "generators": ["z1^2"]}"#)
            .unwrap();
        let ideal = IdealFile::load(&json_path).unwrap();
        assert_eq!(ideal.mode, PolyMode::Commutative);
    }

    #[test]
    fn malformed_ideal_file_is_a_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.toml");
        std::fs::File::create(&path)
            .unwrap()
            .write_all(b"this is not an ideal file")
            .unwrap();
        let err = IdealFile::load(&path).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn config_builds_named_systems() {
        let cfg = RunConfig {
            system_name: Some("quantum_plane".into()),
            q: 0.5,
            m_max: 4,
            ..RunConfig::default()
        };
        let sys = cfg.build_system().unwrap();
        assert_eq!(sys.dims(), &[1, 2, 3, 4, 5]);
        let ws = cfg.build_weights(&sys).unwrap();
        assert_eq!(ws.q(), &[1.0, 1.0]);
    }

    #[test]
    fn overlay_respects_explicit_flags() {
        let mut cfg = RunConfig { m_max: 7, ..RunConfig::default() };
        let file = ConfigFile {
            system: Some("full".into()),
            m_max: Some(3),
            ..ConfigFile::default()
        };
        let flags = FlagsSet { m_max: true, ..FlagsSet::default() };
        cfg.overlay_defaults(&file, &flags);
        assert_eq!(cfg.system_name.as_deref(), Some("full"));
        assert_eq!(cfg.m_max, 7);
    }

    #[test]
    fn limit_commands_require_m2() {
        let cfg = RunConfig { m_max: 1, ..RunConfig::default() };
        assert!(cfg.check(true).is_err());
        assert!(cfg.check(false).is_ok());
    }
}
