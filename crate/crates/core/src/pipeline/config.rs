use std::path::{Path, PathBuf};

use super::PipelineError;
use crate::scheduler::{Regime, ScheduleSpec};
use crate::tiering::TierConfig;

/// How corpus rows are laid out.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InputFormat {
    /// One SMILES per line, optionally followed by whitespace and a name.
    Smi,
    /// A delimited file with a header row and a SMILES column.
    Delimited { delimiter: u8, column: String },
}

impl InputFormat {
    /// Guesses from the extension: `.csv` is comma-delimited, `.tsv` is
    /// tab-delimited, anything else is one SMILES per line.
    pub fn for_path(path: &Path) -> InputFormat {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("csv") => InputFormat::Delimited {
                delimiter: b',',
                column: "smiles".into(),
            },
            Some("tsv") => InputFormat::Delimited {
                delimiter: b'\t',
                column: "smiles".into(),
            },
            _ => InputFormat::Smi,
        }
    }
}

/// Settings shared by all commands. Every field can be set from a
/// `key = value` config file and overridden by [`PipelineConfig::set`].
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub input: Option<PathBuf>,
    /// `None` means guess from the input extension.
    pub format: Option<InputFormat>,
    pub workers: usize,
    pub seed: u64,
    pub chunk_size: usize,
    pub output_dir: PathBuf,
    /// Precomputed prevalence table; computed from the input when absent.
    pub prevalence: Option<PathBuf>,
    /// Replacement functional-group library.
    pub library: Option<PathBuf>,
    pub tier: TierConfig,
    pub schedule: ScheduleSpec,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            input: None,
            format: None,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            seed: 0,
            chunk_size: 256,
            output_dir: PathBuf::from("."),
            prevalence: None,
            library: None,
            tier: TierConfig::default(),
            schedule: ScheduleSpec::default(),
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, PipelineError> {
    value
        .parse()
        .map_err(|_| PipelineError::Config(format!("{key}: cannot parse {value:?}")))
}

impl PipelineConfig {
    /// Reads `key = value` lines; `#` starts a comment.
    pub fn from_file(path: &Path) -> Result<PipelineConfig, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(PipelineError::io(path))?;
        let mut cfg = PipelineConfig::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), PipelineError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| PipelineError::Config(format!("line {}: expected key = value", i + 1)))?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Sets one key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), PipelineError> {
        match key {
            "input" => self.input = Some(value.into()),
            "format" => {
                self.format = Some(match value {
                    "smi" => InputFormat::Smi,
                    "csv" | "tsv" => {
                        let column = match &self.format {
                            Some(InputFormat::Delimited { column, .. }) => column.clone(),
                            _ => "smiles".into(),
                        };
                        InputFormat::Delimited {
                            delimiter: if value == "csv" { b',' } else { b'\t' },
                            column,
                        }
                    }
                    _ => return Err(PipelineError::Config(format!("format: expected smi, csv or tsv, got {value:?}"))),
                })
            }
            "smiles_column" => {
                let delimiter = match &self.format {
                    Some(InputFormat::Delimited { delimiter, .. }) => *delimiter,
                    _ => b',',
                };
                self.format = Some(InputFormat::Delimited {
                    delimiter,
                    column: value.into(),
                });
            }
            "workers" => {
                self.workers = parse(key, value)?;
                if self.workers == 0 {
                    return Err(PipelineError::Config("workers must be at least 1".into()));
                }
            }
            "seed" => self.seed = parse(key, value)?,
            "chunk_size" => {
                self.chunk_size = parse(key, value)?;
                if self.chunk_size == 0 {
                    return Err(PipelineError::Config("chunk_size must be at least 1".into()));
                }
            }
            "output_dir" => self.output_dir = value.into(),
            "prevalence" => self.prevalence = Some(value.into()),
            "library" => self.library = Some(value.into()),
            "regime" => self.schedule.regime = value.parse::<Regime>().map_err(|e| PipelineError::Config(e.to_string()))?,
            "epochs" => self.schedule.epochs = parse(key, value)?,
            "hard_start" => self.schedule.hard_start = parse(key, value)?,
            "rarity_threshold" => self.tier.rarity_threshold = parse(key, value)?,
            "top_k" => self.tier.top_k = parse(key, value)?,
            "s_threshold" => self.tier.s_threshold = parse(key, value)?,
            "ct_per_ha_threshold" => self.tier.ct_per_ha_threshold = parse(key, value)?,
            "min_rings_t3" => self.tier.min_rings_t3 = parse(key, value)?,
            "fg_low" => self.tier.fg_low = parse(key, value)?,
            "fg_mid_lo" => self.tier.fg_mid_lo = parse(key, value)?,
            "fg_mid_hi" => self.tier.fg_mid_hi = parse(key, value)?,
            _ => return Err(PipelineError::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Checks cross-field constraints.
    pub fn validate(&self) -> Result<(), PipelineError> {
        self.tier.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        self.schedule.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        Ok(())
    }

    pub fn input_path(&self) -> Result<&Path, PipelineError> {
        self.input
            .as_deref()
            .ok_or_else(|| PipelineError::Config("no input file given".into()))
    }

    pub fn input_format(&self) -> Result<InputFormat, PipelineError> {
        Ok(match &self.format {
            Some(f) => f.clone(),
            None => InputFormat::for_path(self.input_path()?),
        })
    }

    pub(crate) fn log_run(&self, command: &str) {
        log::info!("{command}: seed={} workers={}", self.seed, self.workers);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_value_text() {
        let mut cfg = PipelineConfig::default();
        cfg.apply_text("# run\ninput = a.csv\nworkers=3 # inline\nregime = mixed\nrarity_threshold = 0.8\nsmiles_column = SMILES\n")
            .unwrap();
        assert_eq!(cfg.workers, 3);
        assert_eq!(cfg.schedule.regime, Regime::Mixed);
        assert_eq!(cfg.tier.rarity_threshold, 0.8);
        assert_eq!(
            cfg.input_format().unwrap(),
            InputFormat::Delimited {
                delimiter: b',',
                column: "SMILES".into()
            }
        );
        assert!(cfg.set("workers", "0").is_err());
        assert!(cfg.set("nope", "1").is_err());
        assert!(cfg.apply_text("novalue").is_err());
    }

    #[test]
    fn format_from_extension() {
        assert_eq!(InputFormat::for_path(Path::new("x.smi")), InputFormat::Smi);
        assert!(matches!(
            InputFormat::for_path(Path::new("x.TSV")),
            InputFormat::Delimited { delimiter: b'\t', .. }
        ));
    }
}
