use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::fragment::FragmentOptions;
use crate::hf::{ScfOptions, SpinTreatment};
use crate::molio::{Dataset, Identifier, Role};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    /// Entries of the bundled dataset.
    Fixtures,
    /// Every `*.sdf` file in a directory.
    SdfDir,
    /// Compounds fetched by CID or name.
    Pubchem,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    #[default]
    PeptideLevel,
    AminoAcidLevel,
    /// Peptides at peptide level and free amino acids at amino-acid level.
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputConfig {
    pub source: SourceKind,
    /// Dataset labels (fixtures). Empty selects every entry the mode accepts.
    #[serde(default)]
    pub labels: Vec<String>,
    /// Restrict fixtures to one role.
    #[serde(default)]
    pub role: Option<Role>,
    /// Directory of SDF files (sdf_dir).
    #[serde(default)]
    pub dir: Option<PathBuf>,
    /// CIDs or names (pubchem).
    #[serde(default)]
    pub identifiers: Vec<String>,
    /// Dataset directory supplying residue templates, correction species and
    /// reference energies.
    #[serde(default)]
    pub data_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mode: RunMode,
    /// Run whole-molecule SCF for the reference instead of reading it from
    /// the dataset.
    pub compute_ground_truth: bool,
    pub fragmentation: FragmentOptions,
    pub spin: SpinTreatment,
    /// Worker threads; 0 uses one per core.
    pub parallelism: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: RunMode::PeptideLevel,
            compute_ground_truth: false,
            fragmentation: FragmentOptions::default(),
            spin: SpinTreatment::Auto,
            parallelism: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CacheConfig {
    pub enabled: bool,
    pub path: PathBuf,
}

impl Default for CacheConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            path: PathBuf::from(".pepfrag-cache"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("pepfrag-out") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: InputConfig,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub scf: ScfOptions,
    #[serde(default)]
    pub cache: CacheConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("config: {0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    /// Parses a config file; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut c = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(d) = c.input.dir.as_mut() {
            fix(d);
        }
        if let Some(d) = c.input.data_dir.as_mut() {
            fix(d);
        }
        fix(&mut c.cache.path);
        fix(&mut c.output.dir);
        Ok(c)
    }

    pub fn data_dir(&self) -> PathBuf {
        self.input.data_dir.clone().unwrap_or_else(Dataset::default_dir)
    }

    /// Checks everything that can be checked without computing, including
    /// that fixture labels exist and suit the mode.
    pub fn validate(&self, dataset: &Dataset) -> Result<(), ConfigError> {
        let i = &self.input;
        match i.source {
            SourceKind::Fixtures => {
                if i.dir.is_some() || !i.identifiers.is_empty() {
                    return Err(invalid("fixtures input takes labels, not dir or identifiers"));
                }
                if i.role == Some(Role::CorrectionSpecies) {
                    return Err(invalid("correction species cannot be fragmented"));
                }
                for label in &i.labels {
                    let e = dataset
                        .get(label)
                        .ok_or_else(|| invalid(format!("unknown fixture label {label:?}")))?;
                    if let Some(role) = i.role {
                        if e.role != role {
                            return Err(invalid(format!("{label:?} is a {}, not a {role}", e.role)));
                        }
                    }
                    let ok = match (self.run.mode, e.role) {
                        (_, Role::CorrectionSpecies) => false,
                        (RunMode::PeptideLevel, r) => r == Role::Peptide,
                        (RunMode::AminoAcidLevel, r) => r == Role::AminoAcid,
                        (RunMode::Both, _) => true,
                    };
                    if !ok {
                        return Err(invalid(format!(
                            "{label:?} ({}) cannot run in {:?} mode",
                            e.role, self.run.mode
                        )));
                    }
                }
                if let (Some(role), RunMode::PeptideLevel | RunMode::AminoAcidLevel) = (i.role, self.run.mode) {
                    let want = if self.run.mode == RunMode::PeptideLevel { Role::Peptide } else { Role::AminoAcid };
                    if role != want {
                        return Err(invalid(format!("role {role} does not match mode {:?}", self.run.mode)));
                    }
                }
            }
            SourceKind::SdfDir => {
                let dir = i.dir.as_ref().ok_or_else(|| invalid("sdf_dir input needs dir"))?;
                if !dir.is_dir() {
                    return Err(invalid(format!("{} is not a directory", dir.display())));
                }
                if !i.labels.is_empty() || !i.identifiers.is_empty() || i.role.is_some() {
                    return Err(invalid("sdf_dir input takes only dir"));
                }
            }
            SourceKind::Pubchem => {
                if i.identifiers.is_empty() {
                    return Err(invalid("pubchem input needs at least one identifier"));
                }
                if !i.labels.is_empty() || i.dir.is_some() || i.role.is_some() {
                    return Err(invalid("pubchem input takes only identifiers"));
                }
                for id in &i.identifiers {
                    id.parse::<Identifier>().map_err(|e| invalid(format!("identifier {id:?}: {e}")))?;
                }
            }
        }
        if i.source != SourceKind::Fixtures && !self.run.compute_ground_truth {
            log::info!("no dataset reference energies for {:?} input; rows will lack GT", i.source);
        }
        let s = &self.scf;
        if !(s.energy_tol > 0.0 && s.gradient_tol > 0.0) {
            return Err(invalid("scf tolerances must be positive"));
        }
        if s.max_iterations == 0 {
            return Err(invalid("scf.max_iterations must be at least 1"));
        }
        if s.diis && s.diis_size < 2 {
            return Err(invalid("scf.diis_size must be at least 2"));
        }
        if !(0.0..1.0).contains(&s.damping) {
            return Err(invalid("scf.damping must lie in [0, 1)"));
        }
        Ok(())
    }
}
