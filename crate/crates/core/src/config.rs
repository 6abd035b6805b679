//! Run configuration: a sectioned `key = value` file plus `section.key=value`
//! overrides.
//!
//! ```text
//! # comment
//! [train]
//! epochs = 70
//! milestones = 40,50,60
//! ```
//!
//! Unknown sections and keys are errors. Everything is validated by
//! [`RunConfig::finalize`] before any work starts.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::audio::MelConfig;
use crate::augment::{AugmentConfig, MaskMode};
use crate::dataset::{StreamKind, TemporalSelection};
use crate::fusion::{FusionConfig, FusionRule};
use crate::model::{BackboneSpec, TrainConfig};
use crate::{FerError, Result};

const DEFAULT_MILESTONES: [usize; 3] = [40, 50, 60];

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetConfig {
    pub root: Option<PathBuf>,
    /// Side of the square image every stream is resized to.
    pub input_size: usize,
    /// Per-class fraction of labeled training windows kept.
    pub subsample_fraction: f64,
    pub temporal_selection: TemporalSelection,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            root: None,
            input_size: 224,
            subsample_fraction: 0.1,
            temporal_selection: TemporalSelection::Strided,
        }
    }
}

/// Augmentation overrides applied on top of each stream's defaults.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AugmentOverrides {
    pub flip_probability: Option<f64>,
    pub jitter: Option<bool>,
    pub halfmix_probability: Option<f64>,
    pub mask_mode: Option<MaskMode>,
    pub crop_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dataset: DatasetConfig,
    pub mel: MelConfig,
    pub train: TrainConfig,
    pub augment: AugmentOverrides,
    pub fusion: FusionConfig,
    pub seed: u64,
    pub out: Option<PathBuf>,
    milestones_set: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dataset: DatasetConfig::default(),
            mel: MelConfig::default(),
            train: TrainConfig::default(),
            augment: AugmentOverrides::default(),
            fusion: FusionConfig::default(),
            seed: 0,
            out: None,
            milestones_set: false,
        }
    }
}

fn value<T: FromStr>(section: &str, key: &str, raw: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| FerError::Config(format!("{section}.{key}: cannot parse `{raw}`")))
}

fn list<T: FromStr>(section: &str, key: &str, raw: &str) -> Result<Vec<T>> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| value(section, key, s))
        .collect()
}

fn boolean(section: &str, key: &str, raw: &str) -> Result<bool> {
    match raw {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(FerError::Config(format!("{section}.{key}: expected a boolean, got `{raw}`"))),
    }
}

fn optional<T: FromStr>(section: &str, key: &str, raw: &str) -> Result<Option<T>> {
    if raw == "none" || raw.is_empty() {
        Ok(None)
    } else {
        value(section, key, raw).map(Some)
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut config = RunConfig::default();
        config.merge_text(text)?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| FerError::io(path, e))?;
        RunConfig::parse(&text)
    }

    fn merge_text(&mut self, text: &str) -> Result<()> {
        let mut section: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = |e: FerError| FerError::Parse {
                line: line_no,
                message: match e {
                    FerError::Config(m) => m,
                    other => other.to_string(),
                },
            };
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = Some(name.trim().to_string());
                continue;
            }
            let (key, val) = line.split_once('=').ok_or_else(|| FerError::Parse {
                line: line_no,
                message: format!("expected `key = value`, found `{line}`"),
            })?;
            let Some(section) = &section else {
                return Err(FerError::Parse {
                    line: line_no,
                    message: "key outside of any [section]".into(),
                });
            };
            self.set(section, key.trim(), val.trim()).map_err(at)?;
        }
        Ok(())
    }

    /// Apply one `section.key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (path, val) = assignment
            .split_once('=')
            .ok_or_else(|| FerError::Config(format!("override `{assignment}` is not section.key=value")))?;
        let (section, key) = path
            .split_once('.')
            .ok_or_else(|| FerError::Config(format!("override `{assignment}` is not section.key=value")))?;
        self.set(section.trim(), key.trim(), val.trim())
    }

    pub fn set(&mut self, section: &str, key: &str, raw: &str) -> Result<()> {
        let (s, k) = (section, key);
        match (s, k) {
            ("dataset", "root") => self.dataset.root = Some(PathBuf::from(raw)),
            ("dataset", "input_size") => self.dataset.input_size = value(s, k, raw)?,
            ("dataset", "subsample_fraction") => self.dataset.subsample_fraction = value(s, k, raw)?,
            ("dataset", "temporal_selection") => {
                self.dataset.temporal_selection = match raw {
                    "strided" => TemporalSelection::Strided,
                    "random" => TemporalSelection::Random { seed: self.seed },
                    _ => return Err(FerError::Config(format!("{s}.{k}: expected strided or random, got `{raw}`"))),
                }
            }

            ("mel", "n_fft") => self.mel.n_fft = value(s, k, raw)?,
            ("mel", "hop") => self.mel.hop = value(s, k, raw)?,
            ("mel", "n_mels") => self.mel.n_mels = value(s, k, raw)?,
            ("mel", "f_min") => self.mel.f_min = value(s, k, raw)?,
            ("mel", "f_max") => self.mel.f_max = optional(s, k, raw)?,
            ("mel", "log_floor") => self.mel.log_floor = value(s, k, raw)?,
            ("mel", "sample_rate") => self.mel.sample_rate = value(s, k, raw)?,

            ("train", "epochs") => self.train.epochs = value(s, k, raw)?,
            ("train", "batch_size") => self.train.batch_size = value(s, k, raw)?,
            ("train", "lr0") => self.train.lr0 = value(s, k, raw)?,
            ("train", "momentum") => self.train.momentum = value(s, k, raw)?,
            ("train", "gamma") => self.train.gamma = value(s, k, raw)?,
            ("train", "milestones") => {
                self.train.milestones = list(s, k, raw)?;
                self.milestones_set = true;
            }
            ("train", "halfmix") => self.train.halfmix_enabled = boolean(s, k, raw)?,

            ("augment", "flip_probability") => self.augment.flip_probability = Some(value(s, k, raw)?),
            ("augment", "jitter") => self.augment.jitter = Some(boolean(s, k, raw)?),
            ("augment", "halfmix_probability") => self.augment.halfmix_probability = Some(value(s, k, raw)?),
            ("augment", "mask") => {
                self.augment.mask_mode = Some(match raw.split_once(':') {
                    None if raw == "binary" => MaskMode::Binary,
                    Some(("soft", w)) => MaskMode::Soft { weight: value(s, k, w)? },
                    _ => return Err(FerError::Config(format!("{s}.{k}: expected binary or soft:<weight>, got `{raw}`"))),
                })
            }
            ("augment", "crop_fraction") => self.augment.crop_fraction = Some(value(s, k, raw)?),

            ("fusion", "weights") => {
                let w: Vec<f64> = list(s, k, raw)?;
                self.fusion.weights = w
                    .try_into()
                    .map_err(|_| FerError::Config(format!("{s}.{k}: expected three weights, got `{raw}`")))?;
            }
            ("fusion", "rule") => self.fusion.rule = raw.parse::<FusionRule>()?,

            ("run", "seed") => self.set_seed(value(s, k, raw)?),
            ("run", "out") => self.out = Some(PathBuf::from(raw)),

            ("dataset" | "mel" | "train" | "augment" | "fusion" | "run", _) => {
                return Err(FerError::Config(format!("unknown key `{k}` in [{s}]")))
            }
            _ => return Err(FerError::Config(format!("unknown section [{s}]"))),
        }
        Ok(())
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        if let TemporalSelection::Random { .. } = self.dataset.temporal_selection {
            self.dataset.temporal_selection = TemporalSelection::Random { seed };
        }
    }

    /// Fill derived defaults and validate every section.
    pub fn finalize(&mut self) -> Result<()> {
        if !self.milestones_set {
            self.train.milestones = DEFAULT_MILESTONES.iter().copied().filter(|&m| m < self.train.epochs).collect();
        }
        self.train.seed = self.seed;
        self.train.validate()?;
        self.mel.validate(self.mel.sample_rate)?;
        self.fusion.validate()?;
        if !(self.dataset.subsample_fraction > 0.0 && self.dataset.subsample_fraction <= 1.0) {
            return Err(FerError::Config(format!(
                "dataset.subsample_fraction {} outside (0, 1]",
                self.dataset.subsample_fraction
            )));
        }
        self.backbone(StreamKind::Visual).validate()?;
        for stream in StreamKind::ALL {
            self.augment_config(stream).validate()?;
        }
        Ok(())
    }

    /// Training configuration of one stream.
    pub fn train_config(&self, stream: StreamKind) -> TrainConfig {
        TrainConfig {
            stream,
            seed: self.seed,
            ..self.train.clone()
        }
    }

    pub fn backbone(&self, stream: StreamKind) -> BackboneSpec {
        BackboneSpec::for_stream(stream, (self.dataset.input_size, self.dataset.input_size))
    }

    pub fn augment_config(&self, stream: StreamKind) -> AugmentConfig {
        let mut c = AugmentConfig::for_stream(stream);
        let o = &self.augment;
        if let Some(p) = o.flip_probability {
            c.flip_probability = p;
        }
        if o.jitter == Some(false) {
            c.jitter = None;
        }
        if let Some(p) = o.halfmix_probability {
            c.halfmix_probability = p;
        }
        if let Some(m) = o.mask_mode {
            c.mask_mode = m;
        }
        if let (Some(f), StreamKind::Temporal) = (o.crop_fraction, stream) {
            c.crop_fraction = Some(f);
        }
        if stream != StreamKind::Visual || !self.train.halfmix_enabled {
            c.halfmix_enabled = false;
        }
        c
    }

    /// One line with the effective training hyperparameters.
    pub fn echo(&self) -> String {
        let milestones: Vec<String> = self.train.milestones.iter().map(usize::to_string).collect();
        let milestones = if milestones.is_empty() { "none".to_string() } else { milestones.join(",") };
        format!(
            "epochs={} batch={} lr0={} momentum={} milestones={} gamma={} seed={} input_size={} subsample={}",
            self.train.epochs,
            self.train.batch_size,
            self.train.lr0,
            self.train.momentum,
            milestones,
            self.train.gamma,
            self.seed,
            self.dataset.input_size,
            self.dataset.subsample_fraction
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_echo_shows_the_reference_hyperparameters() {
        let mut c = RunConfig::default();
        c.finalize().unwrap();
        assert!(c.echo().contains("epochs=70 batch=32 lr0=0.001"), "{}", c.echo());
        assert!(c.echo().contains("milestones=40,50,60"));
    }

    #[test]
    fn file_then_overrides() {
        let mut c = RunConfig::parse(
            "# comment\n[train]\nepochs = 12\nmilestones = 4, 8\n[fusion]\nweights = 1,0.5,0.25\nrule = log-mean\n[run]\nseed=9\n",
        )
        .unwrap();
        c.apply_override("train.lr0=0.01").unwrap();
        c.apply_override("augment.mask=soft:0.6").unwrap();
        c.finalize().unwrap();
        assert_eq!(c.train.epochs, 12);
        assert_eq!(c.train.milestones, vec![4, 8]);
        assert_eq!(c.train.lr0, 0.01);
        assert_eq!(c.train.seed, 9);
        assert_eq!(c.fusion.weights, [1.0, 0.5, 0.25]);
        assert_eq!(c.fusion.rule, FusionRule::LogMean);
        assert_eq!(c.augment_config(StreamKind::Visual).mask_mode, MaskMode::Soft { weight: 0.6 });
    }

    #[test]
    fn short_runs_drop_unreachable_default_milestones() {
        let mut c = RunConfig::default();
        c.train.epochs = 45;
        c.finalize().unwrap();
        assert_eq!(c.train.milestones, vec![40]);
        let mut c = RunConfig::parse("[train]\nepochs=1\n").unwrap();
        c.finalize().unwrap();
        assert!(c.train.milestones.is_empty());
        let mut c = RunConfig::parse("[train]\nepochs=30\nmilestones=40\n").unwrap();
        assert!(c.finalize().is_err());
    }

    #[test]
    fn unknown_keys_and_sections_are_errors() {
        assert!(matches!(RunConfig::parse("[train]\nepochz=3\n"), Err(FerError::Parse { line: 2, .. })));
        assert!(matches!(RunConfig::parse("[nope]\na=1\n"), Err(FerError::Parse { line: 2, .. })));
        assert!(matches!(RunConfig::parse("epochs=3\n"), Err(FerError::Parse { line: 1, .. })));
        assert!(RunConfig::default().apply_override("train.epochs").is_err());
        assert!(RunConfig::default().apply_override("fusion.weights=1,2").is_err());
    }

    #[test]
    fn invalid_values_fail_validation() {
        for o in ["fusion.weights=0,0,0", "dataset.subsample_fraction=0", "train.gamma=2", "mel.hop=0", "dataset.input_size=4"] {
            let mut c = RunConfig::default();
            c.apply_override(o).unwrap();
            assert!(c.finalize().is_err(), "{o}");
        }
    }

    #[test]
    fn halfmix_only_on_visual() {
        let c = RunConfig::default();
        assert!(c.augment_config(StreamKind::Visual).halfmix_enabled);
        assert!(!c.augment_config(StreamKind::Audio).halfmix_enabled);
        let mut c = RunConfig::default();
        c.apply_override("train.halfmix=false").unwrap();
        assert!(!c.augment_config(StreamKind::Visual).halfmix_enabled);
    }
}
