//! Exact samplers and goodness-of-fit checks.
//!
//! The α-κ-μ envelope is drawn through its Poisson–gamma structure: with
//! `N ~ Poisson(μκ)` and `G ~ Gamma(μ+N, 1)`, `P = (G / (μ(1+κ)))^{1/α}`.
//! The Extreme model works the same way with `N ~ Poisson(2m)`, a zero
//! envelope when `N = 0`, and `G ~ Gamma(N, rate 2m)`, `P = G^{1/α}`.
//! Composite draws scale a multipath draw by a gamma shadow draw.
//!
//! Generation is split into `partitions` chunks. Chunk `k` holds
//! `count / partitions` values, plus one when `k < count % partitions`, drawn
//! from ChaCha20 seeded with `seed` on stream `k`; the batch is the
//! concatenation of the chunks in order of `k`. The output is therefore a
//! fixed function of `(seed, count, partitions)` regardless of thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use rayon::prelude::*;
use serde::Serialize;

use crate::composite::CompositeModel;
use crate::error::{Error, Result};
use crate::models::{
    cumulative_mass, total_mass, AkmParams, AmParams, Density, ExtremeParams, GammaShadowParams,
    MultipathParams,
};
use crate::numerics::{integrate_finite, QuadOptions};

/// Partition count used by the `sample_*` helpers.
pub const DEFAULT_PARTITIONS: usize = 16;

/// Anything that can be sampled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SampleModel {
    Multipath(MultipathParams),
    Shadow(GammaShadowParams),
    Composite(CompositeModel),
}

/// Generated samples with what is needed to reproduce them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleBatch {
    pub values: Vec<f64>,
    pub seed: u64,
    pub partitions: usize,
    pub model_descriptor: SampleModel,
}

fn gamma(shape: f64, scale: f64) -> Gamma<f64> {
    Gamma::new(shape, scale).expect("validated gamma parameters")
}

fn poisson_count(lambda: f64, rng: &mut ChaCha20Rng) -> f64 {
    if lambda == 0.0 {
        0.0
    } else {
        Poisson::new(lambda)
            .expect("validated Poisson mean")
            .sample(rng)
    }
}

fn draw_akm(p: &AkmParams, rng: &mut ChaCha20Rng) -> f64 {
    let n = poisson_count(p.mu() * p.kappa(), rng);
    let g = gamma(p.mu() + n, 1.0).sample(rng);
    (g / (p.mu() * (1.0 + p.kappa()))).powf(1.0 / p.alpha())
}

fn draw_am(p: &AmParams, rng: &mut ChaCha20Rng) -> f64 {
    (gamma(p.mu(), 1.0).sample(rng) / p.mu()).powf(1.0 / p.alpha())
}

fn draw_extreme(p: &ExtremeParams, rng: &mut ChaCha20Rng) -> f64 {
    let rate = 2.0 * p.m();
    let n = poisson_count(rate, rng);
    if n == 0.0 {
        return 0.0;
    }
    gamma(n, 1.0 / rate).sample(rng).powf(1.0 / p.alpha())
}

fn draw_multipath(p: &MultipathParams, rng: &mut ChaCha20Rng) -> f64 {
    match p {
        MultipathParams::Akm(p) => draw_akm(p, rng),
        MultipathParams::Am(p) => draw_am(p, rng),
        MultipathParams::Extreme(p) => draw_extreme(p, rng),
    }
}

fn draw(model: &SampleModel, rng: &mut ChaCha20Rng) -> f64 {
    match model {
        SampleModel::Multipath(p) => draw_multipath(p, rng),
        SampleModel::Shadow(g) => gamma(g.b(), g.omega()).sample(rng),
        SampleModel::Composite(m) => {
            let y = gamma(m.shadow.b(), m.shadow.omega()).sample(rng);
            y * draw_multipath(&m.multipath, rng)
        }
    }
}

/// Draws `count` values split over `partitions` independent streams.
pub fn sample_partitioned(
    model: SampleModel,
    count: usize,
    seed: u64,
    partitions: usize,
) -> Result<SampleBatch> {
    if partitions == 0 {
        return Err(Error::Invalid("partition count must be >= 1".into()));
    }
    let (base, extra) = (count / partitions, count % partitions);
    let chunks: Vec<Vec<f64>> = (0..partitions)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let n = base + usize::from(k < extra);
            (0..n).map(|_| draw(&model, &mut rng)).collect()
        })
        .collect();
    Ok(SampleBatch {
        values: chunks.concat(),
        seed,
        partitions,
        model_descriptor: model,
    })
}

/// Samples of the model with [`DEFAULT_PARTITIONS`] streams.
pub fn sample(model: SampleModel, count: usize, seed: u64) -> Result<SampleBatch> {
    sample_partitioned(model, count, seed, DEFAULT_PARTITIONS)
}

pub fn sample_akm(p: AkmParams, count: usize, seed: u64) -> Result<SampleBatch> {
    sample(SampleModel::Multipath(MultipathParams::Akm(p)), count, seed)
}

pub fn sample_am(p: AmParams, count: usize, seed: u64) -> Result<SampleBatch> {
    sample(SampleModel::Multipath(MultipathParams::Am(p)), count, seed)
}

pub fn sample_extreme(p: ExtremeParams, count: usize, seed: u64) -> Result<SampleBatch> {
    sample(
        SampleModel::Multipath(MultipathParams::Extreme(p)),
        count,
        seed,
    )
}

pub fn sample_gamma_shadow(g: GammaShadowParams, count: usize, seed: u64) -> Result<SampleBatch> {
    sample(SampleModel::Shadow(g), count, seed)
}

pub fn sample_composite(m: CompositeModel, count: usize, seed: u64) -> Result<SampleBatch> {
    sample(SampleModel::Composite(m), count, seed)
}

/// Kolmogorov distribution survival function `P(K > λ)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.0 {
        // Jacobi-transformed series for the cdf, fast for small λ.
        let c = -std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
        let s: f64 = (1..=20)
            .map(|k| (c * ((2 * k - 1) as f64).powi(2)).exp())
            .sum();
        return 1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * s;
    }
    let s: f64 = (1..=100)
        .map(|k| {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            sign * (-2.0 * (k * k) as f64 * lambda * lambda).exp()
        })
        .sum();
    (2.0 * s).clamp(0.0, 1.0)
}

/// Asymptotic KS critical value for sample size `n` at significance `level`.
pub fn ks_critical_value(n: usize, level: f64) -> f64 {
    let (mut lo, mut hi) = (0.1, 5.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if kolmogorov_sf(mid) > level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi) / (n as f64).sqrt()
}

/// Significance level of the KS checks.
pub const KS_LEVEL: f64 = 1e-3;

/// Outcome of comparing a batch with a density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GofReport {
    /// `None` when every sample sits on the atom.
    pub ks_statistic: Option<f64>,
    pub ks_critical: Option<f64>,
    pub ks_p_value: Option<f64>,
    pub sample_size: usize,
    pub nonzero_count: usize,
    pub atom_frequency_observed: f64,
    pub atom_mass_expected: f64,
    /// `(observed - expected) / standard error`; `None` when the expected
    /// mass is 0 or 1.
    pub atom_z_score: Option<f64>,
}

impl GofReport {
    /// KS below the critical value (when defined) and atom frequency within
    /// 5 standard errors (or exactly matching a 0/1 mass).
    pub fn passes(&self) -> bool {
        let ks = match (self.ks_statistic, self.ks_critical) {
            (Some(d), Some(c)) => d <= c,
            _ => true,
        };
        let atom = match self.atom_z_score {
            Some(z) => z.abs() <= 5.0,
            None => self.atom_frequency_observed == self.atom_mass_expected,
        };
        ks && atom
    }
}

const KS_NODES: usize = 256;

fn segment_mass<D: Density + ?Sized>(d: &D, a: f64, b: f64) -> Result<f64> {
    let err = std::cell::RefCell::new(None);
    let r = integrate_finite(
        |x| match d.pdf(x) {
            Ok(v) => v,
            Err(e) => {
                err.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        },
        a,
        b,
        QuadOptions::default().with_rel_tol(1e-10),
    );
    match err.into_inner() {
        Some(e) => Err(e),
        None => Ok(r?.value),
    }
}

/// Compares a batch with a density: KS statistic of the nonzero samples
/// against the continuous part's cdf (renormalized by 1 - atom mass) and
/// the observed zero frequency against the atom mass at 0.
pub fn gof_compare<D: Density + ?Sized>(batch: &SampleBatch, density: &D) -> Result<GofReport> {
    const MASS_TOL: f64 = 1e-6;
    let mass = total_mass(density, QuadOptions::default())?;
    if (mass - 1.0).abs() > MASS_TOL {
        return Err(Error::NotNormalized {
            mass,
            tolerance: MASS_TOL,
        });
    }
    let n = batch.values.len();
    if n == 0 {
        return Err(Error::Invalid("empty sample batch".into()));
    }
    let atom: f64 = density
        .atoms()
        .iter()
        .filter(|a| a.location == 0.0)
        .fold(0.0, |s, a| s + a.mass);
    let zeros = batch.values.iter().filter(|&&v| v == 0.0).count();
    let observed = zeros as f64 / n as f64;
    let atom_z_score = if atom > 0.0 && atom < 1.0 {
        Some((observed - atom) / (atom * (1.0 - atom) / n as f64).sqrt())
    } else {
        None
    };

    let mut xs: Vec<f64> = batch.values.iter().copied().filter(|&v| v > 0.0).collect();
    xs.sort_by(f64::total_cmp);
    let m = xs.len();
    let mut report = GofReport {
        ks_statistic: None,
        ks_critical: None,
        ks_p_value: None,
        sample_size: n,
        nonzero_count: m,
        atom_frequency_observed: observed,
        atom_mass_expected: atom,
        atom_z_score,
    };
    if m == 0 {
        return Ok(report);
    }

    let cdf = continuous_cdf_at(density, &xs, 1.0 - atom)?;
    let mut d = 0.0f64;
    for (i, f) in cdf.iter().enumerate() {
        d = d
            .max((i + 1) as f64 / m as f64 - f)
            .max(f - i as f64 / m as f64);
    }
    report.ks_statistic = Some(d);
    report.ks_critical = Some(ks_critical_value(m, KS_LEVEL));
    report.ks_p_value = Some(kolmogorov_sf(d * (m as f64).sqrt()));
    Ok(report)
}

/// Normalized continuous cdf at sorted positive abscissae. Masses between
/// quantile nodes are integrated once and the cdf inside each node interval
/// is a cubic Hermite interpolant of (F, f); below the first node it is
/// integrated directly.
fn continuous_cdf_at<D: Density + ?Sized>(d: &D, xs: &[f64], continuous: f64) -> Result<Vec<f64>> {
    let m = xs.len();
    let mut nodes: Vec<f64> = (1..=KS_NODES)
        .map(|i| xs[(i * (m - 1)) / KS_NODES])
        .collect();
    nodes.dedup();
    let head = cumulative_mass(d, nodes[0], QuadOptions::default().with_rel_tol(1e-10))?;
    let seg: Vec<f64> = nodes
        .par_windows(2)
        .map(|w| segment_mass(d, w[0], w[1]))
        .collect::<Result<_>>()?;
    let dens: Vec<f64> = nodes.par_iter().map(|&x| d.pdf(x)).collect::<Result<_>>()?;
    let mut cum = Vec::with_capacity(nodes.len());
    cum.push(head);
    for s in &seg {
        cum.push(cum[cum.len() - 1] + s);
    }

    xs.par_iter()
        .map(|&x| {
            let f = if x <= nodes[0] {
                cumulative_mass(d, x, QuadOptions::default().with_rel_tol(1e-10))?
            } else {
                let k = nodes.partition_point(|&v| v < x).min(nodes.len() - 1);
                let (x0, x1) = (nodes[k - 1], nodes[k]);
                let h = x1 - x0;
                let t = (x - x0) / h;
                let (t2, t3) = (t * t, t * t * t);
                (2.0 * t3 - 3.0 * t2 + 1.0) * cum[k - 1]
                    + (t3 - 2.0 * t2 + t) * h * dens[k - 1]
                    + (-2.0 * t3 + 3.0 * t2) * cum[k]
                    + (t3 - t2) * h * dens[k]
            };
            Ok((f / continuous).clamp(0.0, 1.0))
        })
        .collect()
}
