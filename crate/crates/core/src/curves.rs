//! Model selection by name, evaluation grids, curve tables and the figure
//! parameter sets.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::composite::{CompositeModel, EvalPath, SeriesConfig};
use crate::error::{Error, Result};
use crate::models::{
    cumulative_mass, total_mass, AkmParams, AmParams, Atom, Density, ExtremeParams,
    GammaShadowParams, MultipathParams, Scaled, ScaledEnvelope,
};
use crate::numerics::QuadOptions;
use crate::specfun::reg_lower_gamma;

/// A fully parameterized model, tagged by its command-line name.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum ModelConfig {
    Akm {
        alpha: f64,
        kappa: f64,
        mu: f64,
        rhat: f64,
    },
    Am {
        alpha: f64,
        mu: f64,
        rhat: f64,
    },
    Extreme {
        alpha: f64,
        m: f64,
        rhat: f64,
    },
    AkmGamma {
        alpha: f64,
        kappa: f64,
        mu: f64,
        b: f64,
        omega: f64,
    },
    AmGamma {
        alpha: f64,
        mu: f64,
        b: f64,
        omega: f64,
    },
    ExtremeGamma {
        alpha: f64,
        m: f64,
        b: f64,
        omega: f64,
    },
    GammaShadow {
        b: f64,
        omega: f64,
    },
    KmuGamma {
        kappa: f64,
        mu: f64,
        b: f64,
        omega: f64,
    },
    KmuExtremeGamma {
        m: f64,
        b: f64,
        omega: f64,
    },
}

/// What a [`ModelConfig`] resolves to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Resolved {
    Plain(MultipathParams, ScaledEnvelope),
    Shadow(GammaShadowParams),
    Composite(CompositeModel),
}

impl ModelConfig {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Akm { .. } => "akm",
            Self::Am { .. } => "am",
            Self::Extreme { .. } => "extreme",
            Self::AkmGamma { .. } => "akm-gamma",
            Self::AmGamma { .. } => "am-gamma",
            Self::ExtremeGamma { .. } => "extreme-gamma",
            Self::GammaShadow { .. } => "gamma-shadow",
            Self::KmuGamma { .. } => "kmu-gamma",
            Self::KmuExtremeGamma { .. } => "kmu-extreme-gamma",
        }
    }

    /// Validates the parameters and builds the model objects.
    pub fn resolve(&self) -> Result<Resolved> {
        let g = |b, omega| GammaShadowParams::new(b, omega);
        Ok(match *self {
            Self::Akm {
                alpha,
                kappa,
                mu,
                rhat,
            } => Resolved::Plain(
                MultipathParams::Akm(AkmParams::new(alpha, kappa, mu)?),
                ScaledEnvelope::new(rhat)?,
            ),
            Self::Am { alpha, mu, rhat } => Resolved::Plain(
                MultipathParams::Am(AmParams::new(alpha, mu)?),
                ScaledEnvelope::new(rhat)?,
            ),
            Self::Extreme { alpha, m, rhat } => Resolved::Plain(
                MultipathParams::Extreme(ExtremeParams::new(alpha, m)?),
                ScaledEnvelope::new(rhat)?,
            ),
            Self::AkmGamma {
                alpha,
                kappa,
                mu,
                b,
                omega,
            } => Resolved::Composite(CompositeModel::akm_gamma(
                AkmParams::new(alpha, kappa, mu)?,
                g(b, omega)?,
            )),
            Self::AmGamma {
                alpha,
                mu,
                b,
                omega,
            } => Resolved::Composite(CompositeModel::am_gamma(
                AmParams::new(alpha, mu)?,
                g(b, omega)?,
            )),
            Self::ExtremeGamma { alpha, m, b, omega } => Resolved::Composite(
                CompositeModel::extreme_gamma(ExtremeParams::new(alpha, m)?, g(b, omega)?),
            ),
            Self::GammaShadow { b, omega } => Resolved::Shadow(g(b, omega)?),
            Self::KmuGamma {
                kappa,
                mu,
                b,
                omega,
            } => Resolved::Composite(CompositeModel::akm_gamma(
                AkmParams::new(2.0, kappa, mu)?,
                g(b, omega)?,
            )),
            Self::KmuExtremeGamma { m, b, omega } => Resolved::Composite(
                CompositeModel::extreme_gamma(ExtremeParams::kappa_mu(m)?, g(b, omega)?),
            ),
        })
    }

    /// The density through `path` (ignored for plain models, which are
    /// evaluated in closed form).
    pub fn density(&self, path: EvalPath) -> Result<Box<dyn Density + Send>> {
        Ok(match self.resolve()? {
            Resolved::Plain(p, s) => Box::new(Scaled::new(p, s)),
            Resolved::Shadow(g) => Box::new(g),
            Resolved::Composite(m) => Box::new(m.density(path)),
        })
    }

    pub fn is_composite(&self) -> bool {
        matches!(self.resolve(), Ok(Resolved::Composite(_)))
    }
}

/// Evenly spaced abscissae `min, ..., max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Grid {
    pub fn new(min: f64, max: f64, points: usize) -> Result<Self> {
        if !(min.is_finite() && max.is_finite()) || min < 0.0 || min >= max || points < 2 {
            return Err(Error::Invalid(format!(
                "grid needs 0 <= min < max and points >= 2 (got {min}:{max}:{points})"
            )));
        }
        Ok(Self { min, max, points })
    }

    pub fn abscissae(&self) -> Vec<f64> {
        let step = (self.max - self.min) / (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                if i + 1 == self.points {
                    self.max
                } else {
                    self.min + step * i as f64
                }
            })
            .collect()
    }
}

impl std::str::FromStr for Grid {
    type Err = Error;

    /// Parses `min:max:points`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::Invalid(format!("grid must look like min:max:points, got {s:?}"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let min = parts[0].trim().parse().map_err(|_| bad())?;
        let max = parts[1].trim().parse().map_err(|_| bad())?;
        let points = parts[2].trim().parse().map_err(|_| bad())?;
        Grid::new(min, max, points)
    }
}

/// Which quantity a curve holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    Pdf,
    Cdf,
}

/// Parameter sweep a figure curve belongs to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepInfo {
    pub figure: u8,
    pub parameter: String,
    pub value: f64,
    pub values: Vec<f64>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveMetadata {
    pub tool_version: String,
    pub quantity: Quantity,
    /// "closed_form", "series" or "oracle".
    pub path: String,
    pub series: Option<SeriesConfig>,
    pub quadrature_rel_tol: f64,
    /// Continuous mass plus atoms, when computed.
    pub total_mass: Option<f64>,
    /// Whether the continuous values rise then fall (or are monotone) over the grid.
    pub unimodal_on_grid: Option<bool>,
    pub sweep: Option<SweepInfo>,
}

/// Tabulated curve with the model that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveTable {
    pub model_descriptor: ModelConfig,
    pub abscissae: Vec<f64>,
    pub values: Vec<f64>,
    pub atoms: Vec<Atom>,
    pub metadata: CurveMetadata,
}

impl CurveTable {
    /// Abscissae strictly increasing, lengths equal, values finite and >= 0.
    pub fn check(&self) -> Result<()> {
        if self.abscissae.len() != self.values.len() {
            return Err(Error::Invalid(
                "abscissae and values differ in length".into(),
            ));
        }
        if self.abscissae.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Invalid(
                "abscissae are not strictly increasing".into(),
            ));
        }
        if let Some(v) = self.values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Invalid(format!("non-finite or negative value {v}")));
        }
        Ok(())
    }
}

/// True when the sequence never rises again after it has started falling.
pub fn is_unimodal(values: &[f64]) -> bool {
    let mut falling = false;
    for w in values.windows(2) {
        if w[1] < w[0] {
            falling = true;
        } else if w[1] > w[0] && falling {
            return false;
        }
    }
    true
}

/// Evaluation options for [`evaluate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    pub quantity: Quantity,
    pub path: EvalPath,
    /// Also integrate the density and report the total mass.
    pub with_mass: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            quantity: Quantity::Pdf,
            path: EvalPath::default(),
            with_mass: false,
        }
    }
}

fn closed_form_cdf(model: &ModelConfig, x: f64) -> Result<Option<f64>> {
    Ok(match model.resolve()? {
        Resolved::Plain(p, s) => Some(p.cdf(x / s.rhat())?),
        Resolved::Shadow(g) => Some(reg_lower_gamma(g.b(), x / g.omega())?),
        Resolved::Composite(_) => None,
    })
}

/// Evaluates a model on a grid (in parallel; output ordered by abscissa).
pub fn evaluate(model: &ModelConfig, grid: &Grid, opts: &EvalOptions) -> Result<CurveTable> {
    let composite = model.is_composite();
    let density = model.density(opts.path)?;
    let xs = grid.abscissae();
    let quad = QuadOptions::default();
    let values: Vec<f64> = match opts.quantity {
        Quantity::Pdf => xs
            .par_iter()
            .map(|&x| density.pdf(x))
            .collect::<Result<_>>()?,
        Quantity::Cdf if !composite => xs
            .par_iter()
            .map(|&x| Ok(closed_form_cdf(model, x)?.expect("plain model")))
            .collect::<Result<_>>()?,
        Quantity::Cdf => {
            let atoms: f64 = density.atoms().iter().map(|a| a.mass).sum();
            let first = cumulative_mass(&*density, xs[0], quad)?;
            let pieces: Vec<f64> = xs
                .par_windows(2)
                .map(|w| cumulative_mass(&Shifted(&*density, w[0]), w[1] - w[0], quad))
                .collect::<Result<_>>()?;
            let mut acc = first;
            let mut out = vec![(atoms + acc).min(1.0)];
            for p in pieces {
                acc += p;
                out.push((atoms + acc).min(1.0));
            }
            out
        }
    };
    let total = if opts.with_mass {
        Some(total_mass(&*density, quad)?)
    } else {
        None
    };
    let path = match (composite, opts.path) {
        (false, _) => "closed_form",
        (true, EvalPath::Oracle) => "oracle",
        (true, EvalPath::Series(_)) => "series",
    };
    let series = match (composite, opts.path) {
        (true, EvalPath::Series(cfg)) => Some(cfg),
        _ => None,
    };
    let unimodal = (opts.quantity == Quantity::Pdf).then(|| is_unimodal(&values));
    let table = CurveTable {
        model_descriptor: *model,
        abscissae: xs,
        values,
        atoms: density.atoms(),
        metadata: CurveMetadata {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            quantity: opts.quantity,
            path: path.to_string(),
            series,
            quadrature_rel_tol: quad.rel_tol,
            total_mass: total,
            unimodal_on_grid: unimodal,
            sweep: None,
        },
    };
    table.check()?;
    Ok(table)
}

/// `d` translated left by `x0`, so that `cumulative_mass` integrates from `x0`.
struct Shifted<'a>(&'a (dyn Density + Send), f64);

impl Density for Shifted<'_> {
    fn pdf(&self, x: f64) -> Result<f64> {
        self.0.pdf(x + self.1)
    }
    fn ln_pdf(&self, x: f64) -> Result<f64> {
        self.0.ln_pdf(x + self.1)
    }
}

/// Default sweep over α for the figures whose captions leave α open.
pub const ALPHA_SWEEP: [f64; 5] = [1.0, 1.5, 2.0, 3.0, 4.0];
/// Default sweep over μ for the figure whose caption leaves μ open.
pub const MU_SWEEP: [f64; 4] = [0.5, 1.0, 2.0, 4.0];
/// κ used for figure 1, whose caption does not fix it.
pub const FIGURE1_KAPPA: f64 = 1.0;
/// Grid shared by all figures.
pub const FIGURE_GRID: Grid = Grid {
    min: 0.005,
    max: 5.0,
    points: 200,
};

/// Models of figure `id` (1 to 4) with the swept parameter and its values.
pub fn figure_models(id: u8) -> Result<(Vec<ModelConfig>, &'static str, Vec<f64>)> {
    Ok(match id {
        1 => (
            ALPHA_SWEEP
                .iter()
                .map(|&alpha| ModelConfig::AkmGamma {
                    alpha,
                    kappa: FIGURE1_KAPPA,
                    mu: 2.1,
                    b: 1.1,
                    omega: 0.9,
                })
                .collect(),
            "alpha",
            ALPHA_SWEEP.to_vec(),
        ),
        2 => (
            MU_SWEEP
                .iter()
                .map(|&mu| ModelConfig::KmuGamma {
                    kappa: 4.0,
                    mu,
                    b: 1.8,
                    omega: 0.7,
                })
                .collect(),
            "mu",
            MU_SWEEP.to_vec(),
        ),
        3 => (
            ALPHA_SWEEP
                .iter()
                .map(|&alpha| ModelConfig::AmGamma {
                    alpha,
                    mu: 2.1,
                    b: 1.1,
                    omega: 0.9,
                })
                .collect(),
            "alpha",
            ALPHA_SWEEP.to_vec(),
        ),
        4 => (
            ALPHA_SWEEP
                .iter()
                .map(|&alpha| ModelConfig::ExtremeGamma {
                    alpha,
                    m: 1.1,
                    b: 1.2,
                    omega: 0.8,
                })
                .collect(),
            "alpha",
            ALPHA_SWEEP.to_vec(),
        ),
        other => {
            return Err(Error::Invalid(format!(
                "figure id must be 1..=4, got {other}"
            )))
        }
    })
}

/// All curves of figure `id`, with total mass and sweep metadata.
pub fn figure(id: u8, path: EvalPath) -> Result<Vec<CurveTable>> {
    let (models, parameter, values) = figure_models(id)?;
    let mut note = format!(
        "{parameter} values are a fixed default sweep; the source only says \"different values\""
    );
    if id == 1 {
        note.push_str(&format!(
            "; kappa = {FIGURE1_KAPPA} is not fixed by the source and was chosen here"
        ));
    }
    models
        .iter()
        .zip(&values)
        .map(|(model, &value)| {
            let opts = EvalOptions {
                quantity: Quantity::Pdf,
                path,
                with_mass: true,
            };
            let mut t = evaluate(model, &FIGURE_GRID, &opts)?;
            t.metadata.sweep = Some(SweepInfo {
                figure: id,
                parameter: parameter.to_string(),
                value,
                values: values.clone(),
                note: note.clone(),
            });
            Ok(t)
        })
        .collect()
}
