//! Pipeline configuration: a TOML file plus command-line overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use qcbtafqmc::afqmc::{AfqmcConfig, WalkerInit};
use qcbtafqmc::cbs::Scheme;
use qcbtafqmc::cbt::{CbtConfig, Shots};
use qcbtafqmc::hamio::ActiveSpaceSpec;
use qcbtafqmc::rng::derive_seed;

use crate::Failure;

/// Stage tags for seeds derived from the master seed.
const CBT_TAG: u64 = 10;
const AFQMC_TAG: u64 = 20;
const SWEEP_TAG: u64 = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Relative paths resolve against the config file's directory.
    pub fcidump: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub active_space: Option<ActiveSpaceSpec>,
    /// Input state for `tomograph`; defaults to `<output_dir>/state.txt`.
    pub state_file: Option<PathBuf>,
    /// Trial for `afqmc`; when absent the exact ground state is tomographed.
    pub trial_file: Option<PathBuf>,
    #[serde(default)]
    pub cbt: CbtSection,
    #[serde(default)]
    pub afqmc: AfqmcSection,
    #[serde(default)]
    pub cbs: CbsSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CbtSection {
    /// Budget for every stage unless overridden per stage.
    #[serde(default = "default_shots")]
    pub shots: Shots,
    pub n_f: Option<Shots>,
    pub n_a: Option<Shots>,
    pub n_b: Option<Shots>,
    #[serde(default = "default_r_max")]
    pub r_max: usize,
    /// Shot ladder for a fidelity sweep.
    #[serde(default)]
    pub sweep_shots: Vec<Shots>,
    #[serde(default = "default_sweep_seeds")]
    pub sweep_seeds: usize,
}

fn default_shots() -> Shots {
    Shots::Infinite
}
fn default_r_max() -> usize {
    64
}
fn default_sweep_seeds() -> usize {
    20
}

impl Default for CbtSection {
    fn default() -> Self {
        CbtSection {
            shots: default_shots(),
            n_f: None,
            n_a: None,
            n_b: None,
            r_max: default_r_max(),
            sweep_shots: Vec::new(),
            sweep_seeds: default_sweep_seeds(),
        }
    }
}

/// AFQMC parameters; the seed comes from the master seed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AfqmcSection {
    pub blocks: Option<usize>,
    pub steps_per_block: Option<usize>,
    pub n_walkers: Option<usize>,
    pub dt: Option<f64>,
    pub n_equilibration: Option<usize>,
    pub cholesky_threshold: Option<f64>,
    pub init: Option<WalkerInit>,
    pub reorthonormalize_every: Option<usize>,
    pub force_bias_cap: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceScheme {
    Exponential,
    ScfE,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationScheme {
    Riemann,
    InverseCube,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Reaction {
    pub name: String,
    pub reactants: Vec<String>,
    pub transition_state: String,
    pub product: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CbsSection {
    /// `species,cardinal,e_ref,e_corr` rows; the bundled tables when absent.
    pub csv: Option<PathBuf>,
    #[serde(default = "default_reference_scheme")]
    pub reference_scheme: ReferenceScheme,
    #[serde(default = "default_correlation_scheme")]
    pub correlation_scheme: CorrelationScheme,
    /// Cardinals fed to each scheme; all rows of a species when absent.
    pub reference_cardinals: Option<Vec<f64>>,
    pub correlation_cardinals: Option<Vec<f64>>,
    pub scf_e_beta: Option<f64>,
    pub scf_e_cardinals: Option<(f64, f64)>,
    #[serde(default)]
    pub reactions: Vec<Reaction>,
    /// Also check the bundled published tables.
    #[serde(default)]
    pub regression: bool,
}

fn default_reference_scheme() -> ReferenceScheme {
    ReferenceScheme::Exponential
}
fn default_correlation_scheme() -> CorrelationScheme {
    CorrelationScheme::Riemann
}

impl Default for CbsSection {
    fn default() -> Self {
        CbsSection {
            csv: None,
            reference_scheme: default_reference_scheme(),
            correlation_scheme: default_correlation_scheme(),
            reference_cardinals: None,
            correlation_cardinals: None,
            scf_e_beta: None,
            scf_e_cardinals: None,
            reactions: Vec::new(),
            regression: false,
        }
    }
}

impl CbsSection {
    pub fn reference(&self) -> Option<Scheme> {
        match self.reference_scheme {
            ReferenceScheme::Exponential => Some(Scheme::Exponential),
            ReferenceScheme::ScfE => {
                let Scheme::ScfE { beta, cardinals } = qcbtafqmc::cbs::SCF_E_CALIBRATION else {
                    unreachable!()
                };
                Some(Scheme::ScfE {
                    beta: self.scf_e_beta.unwrap_or(beta),
                    cardinals: self.scf_e_cardinals.unwrap_or(cardinals),
                })
            }
            ReferenceScheme::None => None,
        }
    }

    pub fn correlation(&self) -> Option<Scheme> {
        match self.correlation_scheme {
            CorrelationScheme::Riemann => Some(Scheme::Riemann),
            CorrelationScheme::InverseCube => Some(Scheme::InverseCube),
            CorrelationScheme::None => None,
        }
    }
}

/// Overrides given on the command line.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub shots: Option<Shots>,
    pub output_dir: Option<PathBuf>,
}

/// A loaded configuration with its provenance.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: PipelineConfig,
    /// The file as written.
    pub text: String,
    /// SHA-256 of the file followed by the applied overrides.
    pub hash: String,
    pub base_dir: PathBuf,
    pub output_dir: PathBuf,
}

impl Loaded {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::input(format!("cannot read config {}: {e}", path.display())))?;
        let mut config: PipelineConfig =
            toml::from_str(&text).map_err(|e| Failure::input(format!("invalid config {}: {e}", path.display())))?;
        let mut hasher = Sha256::new();
        hasher.update(text.as_bytes());
        if let Some(seed) = overrides.seed {
            config.seed = seed;
            hasher.update(format!("\n--seed {seed}").as_bytes());
        }
        if let Some(shots) = overrides.shots {
            config.cbt.shots = shots;
            config.cbt.n_f = None;
            config.cbt.n_a = None;
            config.cbt.n_b = None;
            hasher.update(format!("\n--shots {shots}").as_bytes());
        }
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let output_dir = match (&overrides.output_dir, &config.output_dir) {
            (Some(dir), _) => dir.clone(),
            (None, Some(dir)) => base_dir.join(dir),
            (None, None) => PathBuf::from("."),
        };
        Ok(Loaded {
            config,
            text,
            hash: format!("{:x}", hasher.finalize()),
            base_dir,
            output_dir,
        })
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn fcidump(&self) -> Result<PathBuf, Failure> {
        self.config
            .fcidump
            .as_deref()
            .map(|p| self.resolve(p))
            .ok_or_else(|| Failure::input("config has no `fcidump` entry".into()))
    }

    pub fn cbt_seed(&self) -> u64 {
        derive_seed(self.config.seed, CBT_TAG)
    }

    pub fn afqmc_seed(&self) -> u64 {
        derive_seed(self.config.seed, AFQMC_TAG)
    }

    pub fn sweep_seeds(&self) -> Vec<u64> {
        let base = derive_seed(self.config.seed, SWEEP_TAG);
        (0..self.config.cbt.sweep_seeds as u64).map(|i| derive_seed(base, i)).collect()
    }

    pub fn cbt(&self) -> CbtConfig {
        let c = &self.config.cbt;
        CbtConfig {
            n_f: c.n_f.unwrap_or(c.shots),
            n_a: c.n_a.unwrap_or(c.shots),
            n_b: c.n_b.unwrap_or(c.shots),
            r_max: c.r_max,
            seed: self.cbt_seed(),
        }
    }

    pub fn afqmc(&self) -> AfqmcConfig {
        let s = &self.config.afqmc;
        let d = AfqmcConfig::default();
        AfqmcConfig {
            blocks: s.blocks.unwrap_or(d.blocks),
            steps_per_block: s.steps_per_block.unwrap_or(d.steps_per_block),
            n_walkers: s.n_walkers.unwrap_or(d.n_walkers),
            dt: s.dt.unwrap_or(d.dt),
            seed: self.afqmc_seed(),
            n_equilibration: s.n_equilibration.unwrap_or(d.n_equilibration),
            cholesky_threshold: s.cholesky_threshold.unwrap_or(d.cholesky_threshold),
            init: s.init.unwrap_or(d.init),
            reorthonormalize_every: s.reorthonormalize_every.unwrap_or(d.reorthonormalize_every),
            force_bias_cap: s.force_bias_cap.unwrap_or(d.force_bias_cap),
        }
    }

    /// Header lines for text artifacts: hash, seed and the config verbatim.
    pub fn header(&self, command: &str) -> Vec<String> {
        let mut lines = vec![
            format!("qcbtafqmc {command}"),
            format!("config_hash: {}", self.hash),
            format!("seed: {}", self.config.seed),
        ];
        lines.extend(self.text.lines().map(|l| format!("config | {l}")));
        lines
    }

    /// Fields embedded in every JSON artifact.
    pub fn stamp(&self, command: &str) -> serde_json::Value {
        serde_json::json!({
            "command": command,
            "config_hash": self.hash,
            "seed": self.config.seed,
            "config": self.text,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str, overrides: &Overrides) -> Result<Loaded, Failure> {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, text).unwrap();
        Loaded::load(&path, overrides)
    }

    #[test]
    fn defaults_and_overrides() {
        let l = load("fcidump = \"h2.fcidump\"\nseed = 4\n", &Overrides::default()).unwrap();
        assert_eq!(l.config.cbt.shots, Shots::Infinite);
        assert_eq!(l.afqmc().n_walkers, 480);
        assert_eq!(l.afqmc().seed, derive_seed(4, AFQMC_TAG));
        let o = Overrides {
            seed: Some(9),
            shots: Some(Shots::Finite(100)),
            output_dir: None,
        };
        let m = load("fcidump = \"h2.fcidump\"\nseed = 4\n[cbt]\nn_f = 5\n", &o).unwrap();
        assert_eq!(m.config.seed, 9);
        assert_eq!(m.cbt().n_f, Shots::Finite(100));
        assert_ne!(l.hash, m.hash);
    }

    #[test]
    fn shots_accept_inf_and_integers() {
        let l = load("[cbt]\nshots = \"inf\"\nn_a = 1000\nsweep_shots = [1000, \"inf\"]\n", &Overrides::default()).unwrap();
        assert_eq!(l.cbt().n_f, Shots::Infinite);
        assert_eq!(l.cbt().n_a, Shots::Finite(1000));
        assert_eq!(l.config.cbt.sweep_shots.len(), 2);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(load("fcidmp = \"x\"\n", &Overrides::default()).is_err());
        assert!(load("[afqmc]\nseed = 3\n", &Overrides::default()).is_err());
    }

    #[test]
    fn scf_e_defaults_to_calibration() {
        let l = load("[cbs]\nreference_scheme = \"scf_e\"\nscf_e_beta = 2.0\n", &Overrides::default()).unwrap();
        let Some(Scheme::ScfE { beta, cardinals }) = l.config.cbs.reference() else { panic!() };
        assert_eq!((beta, cardinals), (2.0, (3.0, 4.0)));
    }
}
