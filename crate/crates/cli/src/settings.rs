//! Shared flags, the optional JSON config file, and their resolution into
//! library types.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use compfade::composite::{EvalPath, SeriesConfig};
use compfade::curves::{Grid, ModelConfig};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelName {
    Akm,
    Am,
    Extreme,
    AkmGamma,
    AmGamma,
    ExtremeGamma,
    GammaShadow,
    KmuGamma,
    KmuExtremeGamma,
}

impl ModelName {
    fn flag(self) -> &'static str {
        match self {
            Self::Akm => "akm",
            Self::Am => "am",
            Self::Extreme => "extreme",
            Self::AkmGamma => "akm-gamma",
            Self::AmGamma => "am-gamma",
            Self::ExtremeGamma => "extreme-gamma",
            Self::GammaShadow => "gamma-shadow",
            Self::KmuGamma => "kmu-gamma",
            Self::KmuExtremeGamma => "kmu-extreme-gamma",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Flags shared by every command. Each may also come from `--config`, whose
/// keys are the flag names without the leading dashes; flags win.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Shared {
    /// Model to evaluate
    #[arg(long, value_enum)]
    pub model: Option<ModelName>,
    /// Non-linearity parameter
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    /// Dominant-to-scattered power ratio
    #[arg(long, allow_negative_numbers = true)]
    pub kappa: Option<f64>,
    /// Number of multipath clusters
    #[arg(long, allow_negative_numbers = true)]
    pub mu: Option<f64>,
    /// Extreme severity parameter
    #[arg(long, allow_negative_numbers = true)]
    pub m: Option<f64>,
    /// Gamma shadowing shape
    #[arg(long, allow_negative_numbers = true)]
    pub b: Option<f64>,
    /// Gamma shadowing scale
    #[arg(long, allow_negative_numbers = true)]
    pub omega: Option<f64>,
    /// Rms envelope of a plain multipath model [default: 1]
    #[arg(long, allow_negative_numbers = true)]
    pub rhat: Option<f64>,
    /// Abscissae as min:max:points [default: 0.01:5:200]
    #[arg(long)]
    pub grid: Option<String>,
    /// Output format [default: csv]
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file (a directory for `figure`); stdout when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Random seed [default: 1]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of samples [default: 100000]
    #[arg(long)]
    pub count: Option<usize>,
    /// Series term cap, or the polynomial degree with --use-gross
    #[arg(long)]
    pub series_n: Option<usize>,
    /// Use the Gross polynomial coefficients in the series
    #[arg(long)]
    #[serde(default)]
    pub use_gross: bool,
    /// Evaluate composites by direct mixture quadrature
    #[arg(long)]
    #[serde(default)]
    pub oracle: bool,
    /// Turn check failures into exit status 1
    #[arg(long)]
    #[serde(default)]
    pub strict: bool,
    /// JSON file with default values for these flags
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

/// Degree used with `--use-gross` when `--series-n` is absent.
pub const DEFAULT_GROSS_DEGREE: usize = 40;
pub const DEFAULT_GRID: &str = "0.01:5:200";

impl Shared {
    /// Fills unset flags from the `--config` file, if any.
    pub fn with_config(self) -> Result<Self, CliError> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let file = read_config(&path)?;
        Ok(Self {
            model: self.model.or(file.model),
            alpha: self.alpha.or(file.alpha),
            kappa: self.kappa.or(file.kappa),
            mu: self.mu.or(file.mu),
            m: self.m.or(file.m),
            b: self.b.or(file.b),
            omega: self.omega.or(file.omega),
            rhat: self.rhat.or(file.rhat),
            grid: self.grid.or(file.grid),
            format: self.format.or(file.format),
            out: self.out.or(file.out),
            seed: self.seed.or(file.seed),
            count: self.count.or(file.count),
            series_n: self.series_n.or(file.series_n),
            use_gross: self.use_gross || file.use_gross,
            oracle: self.oracle || file.oracle,
            strict: self.strict || file.strict,
            config: Some(path),
        })
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or_default()
    }

    pub fn grid(&self) -> Result<Grid, CliError> {
        self.grid
            .as_deref()
            .unwrap_or(DEFAULT_GRID)
            .parse()
            .map_err(|e: compfade::Error| CliError::Usage(format!("--grid: {e}")))
    }

    pub fn path(&self) -> Result<EvalPath, CliError> {
        if self.oracle {
            if self.use_gross || self.series_n.is_some() {
                return Err(CliError::Usage(
                    "--oracle cannot be combined with --use-gross or --series-n".into(),
                ));
            }
            return Ok(EvalPath::Oracle);
        }
        let cfg = match (self.use_gross, self.series_n) {
            (true, n) => SeriesConfig::gross(n.unwrap_or(DEFAULT_GROSS_DEGREE)),
            (false, Some(n)) => SeriesConfig {
                max_terms: n,
                ..SeriesConfig::default()
            },
            (false, None) => SeriesConfig::default(),
        };
        if cfg.max_terms == 0 {
            return Err(CliError::Usage("--series-n must be at least 1".into()));
        }
        Ok(EvalPath::Series(cfg))
    }

    /// The selected model with its parameters; names the first missing one.
    pub fn model(&self) -> Result<ModelConfig, CliError> {
        let model = self
            .model
            .ok_or_else(|| CliError::Usage("--model is required".into()))?;
        let need = |name: &str, v: Option<f64>| {
            v.ok_or_else(|| {
                CliError::Usage(format!("--{name} is required for --model {}", model.flag()))
            })
        };
        let rhat = self.rhat.unwrap_or(1.0);
        let used: &[&str] = match model {
            ModelName::Akm => &["alpha", "kappa", "mu", "rhat"],
            ModelName::Am => &["alpha", "mu", "rhat"],
            ModelName::Extreme => &["alpha", "m", "rhat"],
            ModelName::AkmGamma => &["alpha", "kappa", "mu", "b", "omega"],
            ModelName::AmGamma => &["alpha", "mu", "b", "omega"],
            ModelName::ExtremeGamma => &["alpha", "m", "b", "omega"],
            ModelName::GammaShadow => &["b", "omega"],
            ModelName::KmuGamma => &["kappa", "mu", "b", "omega"],
            ModelName::KmuExtremeGamma => &["m", "b", "omega"],
        };
        for (name, value) in self.parameters() {
            if value.is_some() && !used.contains(&name) {
                return Err(CliError::Usage(format!(
                    "--{name} does not apply to --model {}",
                    model.flag()
                )));
            }
        }
        Ok(match model {
            ModelName::Akm => ModelConfig::Akm {
                alpha: need("alpha", self.alpha)?,
                kappa: need("kappa", self.kappa)?,
                mu: need("mu", self.mu)?,
                rhat,
            },
            ModelName::Am => ModelConfig::Am {
                alpha: need("alpha", self.alpha)?,
                mu: need("mu", self.mu)?,
                rhat,
            },
            ModelName::Extreme => ModelConfig::Extreme {
                alpha: need("alpha", self.alpha)?,
                m: need("m", self.m)?,
                rhat,
            },
            ModelName::AkmGamma => ModelConfig::AkmGamma {
                alpha: need("alpha", self.alpha)?,
                kappa: need("kappa", self.kappa)?,
                mu: need("mu", self.mu)?,
                b: need("b", self.b)?,
                omega: need("omega", self.omega)?,
            },
            ModelName::AmGamma => ModelConfig::AmGamma {
                alpha: need("alpha", self.alpha)?,
                mu: need("mu", self.mu)?,
                b: need("b", self.b)?,
                omega: need("omega", self.omega)?,
            },
            ModelName::ExtremeGamma => ModelConfig::ExtremeGamma {
                alpha: need("alpha", self.alpha)?,
                m: need("m", self.m)?,
                b: need("b", self.b)?,
                omega: need("omega", self.omega)?,
            },
            ModelName::GammaShadow => ModelConfig::GammaShadow {
                b: need("b", self.b)?,
                omega: need("omega", self.omega)?,
            },
            ModelName::KmuGamma => ModelConfig::KmuGamma {
                kappa: need("kappa", self.kappa)?,
                mu: need("mu", self.mu)?,
                b: need("b", self.b)?,
                omega: need("omega", self.omega)?,
            },
            ModelName::KmuExtremeGamma => ModelConfig::KmuExtremeGamma {
                m: need("m", self.m)?,
                b: need("b", self.b)?,
                omega: need("omega", self.omega)?,
            },
        })
    }

    fn parameters(&self) -> [(&'static str, Option<f64>); 7] {
        [
            ("alpha", self.alpha),
            ("kappa", self.kappa),
            ("mu", self.mu),
            ("m", self.m),
            ("b", self.b),
            ("omega", self.omega),
            ("rhat", self.rhat),
        ]
    }
}

fn read_config(path: &Path) -> Result<Shared, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shared(model: ModelName) -> Shared {
        Shared {
            model: Some(model),
            ..Default::default()
        }
    }

    #[test]
    fn missing_parameter_is_named() {
        let s = Shared {
            alpha: Some(2.0),
            ..shared(ModelName::AkmGamma)
        };
        match s.model() {
            Err(CliError::Usage(msg)) => assert!(msg.contains("--kappa"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn foreign_parameter_is_rejected() {
        let s = Shared {
            b: Some(2.0),
            omega: Some(1.0),
            alpha: Some(2.0),
            ..shared(ModelName::GammaShadow)
        };
        assert!(matches!(s.model(), Err(CliError::Usage(msg)) if msg.contains("--alpha")));
    }

    #[test]
    fn config_fills_gaps_and_flags_win() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(
            &path,
            r#"{"model": "am-gamma", "alpha": 3.1, "mu": 1.6, "b": 1.1, "omega": 0.9, "series-n": 12, "use-gross": true}"#,
        )
        .unwrap();
        let s = Shared {
            mu: Some(2.1),
            config: Some(path),
            ..Default::default()
        }
        .with_config()
        .unwrap();
        assert_eq!(
            s.model().unwrap(),
            ModelConfig::AmGamma {
                alpha: 3.1,
                mu: 2.1,
                b: 1.1,
                omega: 0.9
            }
        );
        assert_eq!(s.path().unwrap(), EvalPath::Series(SeriesConfig::gross(12)));
    }

    #[test]
    fn unknown_config_key_is_a_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(&path, r#"{"modle": "am"}"#).unwrap();
        let s = Shared {
            config: Some(path),
            ..Default::default()
        };
        assert!(matches!(s.with_config(), Err(CliError::Usage(_))));
    }

    #[test]
    fn oracle_excludes_series_flags() {
        let s = Shared {
            oracle: true,
            series_n: Some(3),
            ..Default::default()
        };
        assert!(s.path().is_err());
        let s = Shared {
            oracle: true,
            ..Default::default()
        };
        assert_eq!(s.path().unwrap(), EvalPath::Oracle);
    }
}
