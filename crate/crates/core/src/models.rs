//! Multipath envelope models and the gamma shadowing law.
//!
//! All multipath densities here are for the *normalized* envelope
//! `ρ = r / r̂`, with `E[ρ^α] = 1`. A physical envelope with rms scale `r̂`
//! is obtained with [`Scaled`] or the `*_envelope` helpers.

use serde::Serialize;

use crate::error::{non_negative, positive, Error, Result};
use crate::numerics::{integrate_finite, try_integrate_log_unimodal, QuadOptions};
use crate::specfun::{kummer_1f1, lgamma, ln_bessel_i, marcum_q, reg_lower_gamma};

/// Below this κ the α-κ-μ density is evaluated through its κ → 0 limit.
pub const KAPPA_LIMIT: f64 = 1e-8;

/// α-κ-μ shape parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AkmParams {
    alpha: f64,
    kappa: f64,
    mu: f64,
}

impl AkmParams {
    pub fn new(alpha: f64, kappa: f64, mu: f64) -> Result<Self> {
        Ok(Self {
            alpha: positive("alpha", alpha)?,
            kappa: non_negative("kappa", kappa)?,
            mu: positive("mu", mu)?,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }
}

/// α-μ shape parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AmParams {
    alpha: f64,
    mu: f64,
}

impl AmParams {
    pub fn new(alpha: f64, mu: f64) -> Result<Self> {
        Ok(Self {
            alpha: positive("alpha", alpha)?,
            mu: positive("mu", mu)?,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }
}

/// α-κ-μ Extreme parameters (α = 2 gives κ-μ Extreme).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtremeParams {
    alpha: f64,
    m: f64,
}

impl ExtremeParams {
    pub fn new(alpha: f64, m: f64) -> Result<Self> {
        Ok(Self {
            alpha: positive("alpha", alpha)?,
            m: positive("m", m)?,
        })
    }

    /// κ-μ Extreme model.
    pub fn kappa_mu(m: f64) -> Result<Self> {
        Self::new(2.0, m)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    /// Probability of a zero envelope, e^{-2m}.
    pub fn atom_mass(&self) -> f64 {
        (-2.0 * self.m).exp()
    }
}

/// Gamma shadowing with shape `b` and scale `Ω`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaShadowParams {
    b: f64,
    omega: f64,
}

impl GammaShadowParams {
    pub fn new(b: f64, omega: f64) -> Result<Self> {
        Ok(Self {
            b: positive("b", b)?,
            omega: positive("omega", omega)?,
        })
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn mean(&self) -> f64 {
        self.b * self.omega
    }

    pub(crate) fn ln_norm(&self) -> f64 {
        lgamma(self.b) + self.b * self.omega.ln()
    }
}

/// Root-mean-square envelope scale r̂.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScaledEnvelope {
    rhat: f64,
}

impl ScaledEnvelope {
    pub fn new(rhat: f64) -> Result<Self> {
        Ok(Self {
            rhat: positive("rhat", rhat)?,
        })
    }

    pub fn unit() -> Self {
        Self { rhat: 1.0 }
    }

    pub fn rhat(&self) -> f64 {
        self.rhat
    }
}

/// A point mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct Atom {
    pub location: f64,
    pub mass: f64,
}

/// A distribution on [0, ∞): continuous part plus point masses.
pub trait Density: Sync {
    /// Continuous part at `x >= 0`.
    fn pdf(&self, x: f64) -> Result<f64>;

    /// Logarithm of the continuous part at `x > 0` (`-inf` where it vanishes).
    fn ln_pdf(&self, x: f64) -> Result<f64> {
        Ok(self.pdf(x)?.ln())
    }

    fn atoms(&self) -> Vec<Atom> {
        Vec::new()
    }

    /// A typical abscissa of the bulk of the distribution.
    fn scale(&self) -> f64 {
        1.0
    }

    /// `(e, ln c)` such that `pdf(x) ≈ c·x^e` as `x -> 0⁺`, when known.
    fn origin(&self) -> Option<(f64, f64)> {
        None
    }
}

impl<D: Density + ?Sized> Density for &D {
    fn pdf(&self, x: f64) -> Result<f64> {
        (**self).pdf(x)
    }
    fn ln_pdf(&self, x: f64) -> Result<f64> {
        (**self).ln_pdf(x)
    }
    fn atoms(&self) -> Vec<Atom> {
        (**self).atoms()
    }
    fn scale(&self) -> f64 {
        (**self).scale()
    }
    fn origin(&self) -> Option<(f64, f64)> {
        (**self).origin()
    }
}

/// ∫₀^∞ of the continuous part, by log-space quadrature in `ln x`.
pub fn continuous_mass<D: Density + ?Sized>(d: &D, opts: QuadOptions) -> Result<f64> {
    let r = try_integrate_log_unimodal(
        |t| {
            let x = t.exp();
            if x == 0.0 || x == f64::INFINITY {
                return Ok(f64::NEG_INFINITY);
            }
            Ok(d.ln_pdf(x)? + t)
        },
        d.scale().ln(),
        0.25,
        opts,
    )?;
    Ok(r.value())
}

/// ∫₀^x of the continuous part, with `u = x·s⁴` to soften an integrable
/// singularity at the origin.
pub fn cumulative_mass<D: Density + ?Sized>(d: &D, x: f64, opts: QuadOptions) -> Result<f64> {
    let x = check_abscissa("x", x)?;
    let err = std::cell::RefCell::new(None);
    let r = integrate_finite(
        |s| {
            let s3 = s * s * s;
            let u = x * s3 * s;
            if u == 0.0 {
                return 0.0;
            }
            match d.ln_pdf(u) {
                Ok(v) => 4.0 * x * s3 * v.exp(),
                Err(e) => {
                    err.borrow_mut().get_or_insert(e);
                    f64::NAN
                }
            }
        },
        0.0,
        1.0,
        opts,
    );
    match err.into_inner() {
        Some(e) => Err(e),
        None => Ok(r?.value),
    }
}

/// Continuous mass plus atom masses.
pub fn total_mass<D: Density + ?Sized>(d: &D, opts: QuadOptions) -> Result<f64> {
    Ok(continuous_mass(d, opts)? + d.atoms().iter().map(|a| a.mass).sum::<f64>())
}

/// Value at the origin of a density behaving as `c·x^e` there.
pub(crate) fn origin_value(e: f64, ln_c: f64, what: &str) -> Result<f64> {
    if e > 0.0 {
        Ok(0.0)
    } else if e == 0.0 {
        Ok(ln_c.exp())
    } else {
        Err(Error::Singular(format!(
            "{what} diverges at 0 (behaves as x^{e})"
        )))
    }
}

fn check_abscissa(name: &'static str, x: f64) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        Err(Error::Domain {
            name,
            value: x,
            reason: "must be >= 0",
        })
    } else {
        Ok(x)
    }
}

// ---------------------------------------------------------------- α-μ

fn am_ln_pdf(alpha: f64, mu: f64, rho: f64) -> f64 {
    if rho == f64::INFINITY {
        return f64::NEG_INFINITY;
    }
    alpha.ln() + mu * mu.ln() + (alpha * mu - 1.0) * rho.ln() - mu * rho.powf(alpha) - lgamma(mu)
}

fn am_origin(alpha: f64, mu: f64) -> (f64, f64) {
    (alpha * mu - 1.0, alpha.ln() + mu * mu.ln() - lgamma(mu))
}

/// α-μ envelope pdf with rms scale r̂.
pub fn am_pdf(p: AmParams, s: ScaledEnvelope, r: f64) -> Result<f64> {
    Scaled::new(MultipathParams::Am(p), s).pdf(check_abscissa("r", r)?)
}

/// α-μ cdf of the normalized envelope, P(μ, μρ^α).
pub fn am_cdf(p: AmParams, rho: f64) -> Result<f64> {
    let rho = check_abscissa("rho", rho)?;
    reg_lower_gamma(p.mu, p.mu * rho.powf(p.alpha))
}

// ---------------------------------------------------------------- α-κ-μ

/// ln p_P(ρ) for ρ > 0.
pub fn akm_ln_pdf_normalized(p: AkmParams, rho: f64) -> Result<f64> {
    let rho = check_abscissa("rho", rho)?;
    let AkmParams { alpha, kappa, mu } = p;
    if kappa < KAPPA_LIMIT {
        return Ok(am_ln_pdf(alpha, mu, rho));
    }
    if rho == 0.0 {
        return Ok(akm_pdf_normalized(p, 0.0)?.ln());
    }
    let power = rho.powf(alpha);
    if power == f64::INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let s = rho.ln();
    let nu = mu - 1.0;
    let ln_z = (2.0 * mu).ln() + 0.5 * (kappa * (1.0 + kappa)).ln() + 0.5 * alpha * s;
    let ln_i = if ln_z < -200.0 {
        nu * (ln_z - std::f64::consts::LN_2) - lgamma(mu)
    } else {
        ln_bessel_i(nu, ln_z.exp())?
    };
    Ok(
        alpha.ln() + mu.ln() + 0.5 * (1.0 + mu) * kappa.ln_1p()
            - 0.5 * nu * kappa.ln()
            - mu * kappa
            + (0.5 * alpha * (1.0 + mu) - 1.0) * s
            - mu * (1.0 + kappa) * power
            + ln_i,
    )
}

fn akm_origin(p: AkmParams) -> (f64, f64) {
    let (e, ln_c) = am_origin(p.alpha, p.mu);
    (e, ln_c + p.mu * p.kappa.ln_1p() - p.mu * p.kappa)
}

/// Normalized α-κ-μ envelope pdf p_P(ρ).
pub fn akm_pdf_normalized(p: AkmParams, rho: f64) -> Result<f64> {
    let rho = check_abscissa("rho", rho)?;
    if rho == 0.0 {
        let (e, ln_c) = akm_origin(p);
        return origin_value(e, ln_c, "alpha-kappa-mu pdf");
    }
    Ok(akm_ln_pdf_normalized(p, rho)?.exp())
}

/// α-κ-μ envelope pdf with rms scale r̂.
pub fn akm_pdf_envelope(p: AkmParams, s: ScaledEnvelope, r: f64) -> Result<f64> {
    let r = check_abscissa("r", r)?;
    Ok(akm_pdf_normalized(p, r / s.rhat)? / s.rhat)
}

/// α-κ-μ cdf, `1 - Q_μ(√(2μκ), ρ^{α/2}√(2μ(1+κ)))`.
pub fn akm_cdf(p: AkmParams, rho: f64) -> Result<f64> {
    let rho = check_abscissa("rho", rho)?;
    let AkmParams { alpha, kappa, mu } = p;
    let a = (2.0 * mu * kappa).sqrt();
    let b = rho.powf(0.5 * alpha) * (2.0 * mu * (1.0 + kappa)).sqrt();
    Ok(1.0 - marcum_q(mu, a, b)?)
}

/// α-κ-μ cdf as the Poisson(μκ)-weighted sum of regularized lower
/// incomplete gamma functions `P(i+μ, μ(1+κ)ρ^α)`.
pub fn akm_cdf_series(p: AkmParams, rho: f64) -> Result<f64> {
    let rho = check_abscissa("rho", rho)?;
    let AkmParams { alpha, kappa, mu } = p;
    let y = mu * (1.0 + kappa) * rho.powf(alpha);
    let lambda = mu * kappa;
    if lambda == 0.0 {
        return reg_lower_gamma(mu, y);
    }
    let (lo, hi) = crate::specfun::poisson_window(lambda, 1e-16);
    let mut sum = 0.0;
    for i in lo..hi {
        let fi = i as f64;
        let w = (-lambda + fi * lambda.ln() - lgamma(fi + 1.0)).exp();
        sum += w * reg_lower_gamma(fi + mu, y)?;
    }
    Ok(sum.clamp(0.0, 1.0))
}

/// Pdf of the normalized power `W = P²`, `p_P(√w) / (2√w)`.
pub fn akm_power_pdf(p: AkmParams, w: f64) -> Result<f64> {
    AkmPower(p).pdf(check_abscissa("w", w)?)
}

/// E[P^l] from the confluent hypergeometric closed form
/// `e^{-μκ} Γ(μ+l/α) ₁F₁(μ+l/α; μ; μκ) / (Γ(μ) (μ(1+κ))^{l/α})`.
pub fn akm_moment(p: AkmParams, l: f64) -> Result<f64> {
    let l = non_negative("l", l)?;
    if l == 0.0 {
        return Ok(1.0);
    }
    let AkmParams { alpha, kappa, mu } = p;
    let q = l / alpha;
    let ln_front = lgamma(mu + q) - lgamma(mu) - q * (mu * (1.0 + kappa)).ln();
    if kappa == 0.0 {
        return Ok(ln_front.exp());
    }
    let f = kummer_1f1(mu + q, mu, mu * kappa)?;
    Ok((ln_front - mu * kappa).exp() * f)
}

/// The moment expression exactly as printed in the source:
/// `Γ(l/α+μ) ₁F₁(l/α; μ; κμ) Γ(μ) / (e^{μκ} (1+κ)^{l/α} μ^{l/α})`,
/// with ₁F₁(0; ·; ·) = 1 at l = 0. Kept for comparison only.
pub fn akm_moment_literal(p: AkmParams, l: f64) -> Result<f64> {
    let l = non_negative("l", l)?;
    let AkmParams { alpha, kappa, mu } = p;
    let q = l / alpha;
    let f = if q == 0.0 {
        1.0
    } else {
        kummer_1f1(q, mu, kappa * mu)?
    };
    Ok((lgamma(q + mu) + lgamma(mu) - mu * kappa - q * kappa.ln_1p() - q * mu.ln()).exp() * f)
}

/// Nakagami-m parameter matching the power variance, `μ(1+κ)²/(1+2κ)`.
pub fn nakagami_m_equiv(kappa: f64, mu: f64) -> Result<f64> {
    let kappa = non_negative("kappa", kappa)?;
    let mu = positive("mu", mu)?;
    Ok(mu * (1.0 + kappa).powi(2) / (1.0 + 2.0 * kappa))
}

// ---------------------------------------------------------------- Extreme

/// ln of the continuous part of the α-κ-μ Extreme pdf for ρ > 0.
pub fn extreme_ln_pdf(p: ExtremeParams, rho: f64) -> Result<f64> {
    let rho = check_abscissa("rho", rho)?;
    let ExtremeParams { alpha, m } = p;
    if rho == 0.0 {
        return Ok(extreme_pdf(p, 0.0)?.ln());
    }
    let power = rho.powf(alpha);
    if power == f64::INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let s = rho.ln();
    let ln_z = (4.0 * m).ln() + 0.5 * alpha * s;
    let ln_i = if ln_z < -200.0 {
        ln_z - std::f64::consts::LN_2
    } else {
        ln_bessel_i(1.0, ln_z.exp())?
    };
    Ok((2.0 * alpha * m).ln() + ln_i + (0.5 * alpha - 1.0) * s - 2.0 * m * (1.0 + power))
}

fn extreme_origin(p: ExtremeParams) -> (f64, f64) {
    (p.alpha - 1.0, (4.0 * p.alpha * p.m * p.m).ln() - 2.0 * p.m)
}

/// Continuous part of the α-κ-μ Extreme pdf,
/// `2αm I₁(4mρ^{α/2}) ρ^{α/2-1} e^{-2m(1+ρ^α)}`; the atom e^{-2m} at 0 is
/// reported separately by [`ExtremeParams::atom_mass`].
pub fn extreme_pdf(p: ExtremeParams, rho: f64) -> Result<f64> {
    let rho = check_abscissa("rho", rho)?;
    if rho == 0.0 {
        let (e, ln_c) = extreme_origin(p);
        return origin_value(e, ln_c, "extreme pdf");
    }
    Ok(extreme_ln_pdf(p, rho)?.exp())
}

/// Extreme cdf including the atom:
/// `e^{-2m} + Σ_{N>=1} Pois(N; 2m) P(N, 2mρ^α)`.
pub fn extreme_cdf(p: ExtremeParams, rho: f64) -> Result<f64> {
    let rho = check_abscissa("rho", rho)?;
    let lambda = 2.0 * p.m;
    let y = lambda * rho.powf(p.alpha);
    let (_, hi) = crate::specfun::poisson_window(lambda, 1e-16);
    let mut sum = p.atom_mass();
    if y == 0.0 {
        return Ok(sum);
    }
    for n in 1..hi.max(2) {
        let nf = n as f64;
        let w = (-lambda + nf * lambda.ln() - lgamma(nf + 1.0)).exp();
        sum += w * reg_lower_gamma(nf, y)?;
    }
    Ok(sum.clamp(0.0, 1.0))
}

/// Density view of the Extreme model: continuous part plus atom at 0.
pub fn extreme_density(p: ExtremeParams) -> MultipathParams {
    MultipathParams::Extreme(p)
}

// ---------------------------------------------------------------- gamma shadow

/// Gamma shadowing density `y^{b-1} e^{-y/Ω} / (Γ(b) Ω^b)`.
pub fn gamma_shadow_pdf(g: GammaShadowParams, y: f64) -> Result<f64> {
    g.pdf(check_abscissa("y", y)?)
}

impl GammaShadowParams {
    pub(crate) fn ln_pdf_unchecked(&self, y: f64) -> f64 {
        (self.b - 1.0) * y.ln() - y / self.omega - self.ln_norm()
    }
}

impl Density for GammaShadowParams {
    fn pdf(&self, y: f64) -> Result<f64> {
        let y = check_abscissa("y", y)?;
        if y == 0.0 {
            let (e, ln_c) = self.origin().expect("known");
            return origin_value(e, ln_c, "gamma shadow pdf");
        }
        Ok(self.ln_pdf_unchecked(y).exp())
    }

    fn ln_pdf(&self, y: f64) -> Result<f64> {
        let y = check_abscissa("y", y)?;
        if y == 0.0 {
            return Ok(self.pdf(0.0)?.ln());
        }
        Ok(self.ln_pdf_unchecked(y))
    }

    fn scale(&self) -> f64 {
        self.mean()
    }

    fn origin(&self) -> Option<(f64, f64)> {
        Some((self.b - 1.0, -self.ln_norm()))
    }
}

// ---------------------------------------------------------------- union

/// Any of the multipath models, normalized to `E[ρ^α] = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum MultipathParams {
    Akm(AkmParams),
    Am(AmParams),
    Extreme(ExtremeParams),
}

impl MultipathParams {
    pub fn alpha(&self) -> f64 {
        match self {
            Self::Akm(p) => p.alpha,
            Self::Am(p) => p.alpha,
            Self::Extreme(p) => p.alpha,
        }
    }

    pub fn atom_mass(&self) -> f64 {
        match self {
            Self::Extreme(p) => p.atom_mass(),
            _ => 0.0,
        }
    }

    /// Cdf of the normalized envelope, atoms included.
    pub fn cdf(&self, rho: f64) -> Result<f64> {
        match *self {
            Self::Akm(p) => akm_cdf(p, rho),
            Self::Am(p) => am_cdf(p, rho),
            Self::Extreme(p) => extreme_cdf(p, rho),
        }
    }

    /// `(e, ln c)` with `pdf(ρ) ≈ c ρ^e` near the origin.
    pub fn origin_behavior(&self) -> (f64, f64) {
        match *self {
            Self::Akm(p) => akm_origin(p),
            Self::Am(p) => am_origin(p.alpha, p.mu),
            Self::Extreme(p) => extreme_origin(p),
        }
    }
}

impl Density for MultipathParams {
    fn pdf(&self, rho: f64) -> Result<f64> {
        match *self {
            Self::Akm(p) => akm_pdf_normalized(p, rho),
            Self::Am(p) => {
                let rho = check_abscissa("rho", rho)?;
                if rho == 0.0 {
                    let (e, ln_c) = am_origin(p.alpha, p.mu);
                    return origin_value(e, ln_c, "alpha-mu pdf");
                }
                Ok(am_ln_pdf(p.alpha, p.mu, rho).exp())
            }
            Self::Extreme(p) => extreme_pdf(p, rho),
        }
    }

    fn ln_pdf(&self, rho: f64) -> Result<f64> {
        match *self {
            Self::Akm(p) => akm_ln_pdf_normalized(p, rho),
            Self::Am(p) => {
                let rho = check_abscissa("rho", rho)?;
                if rho == 0.0 {
                    return Ok(self.pdf(0.0)?.ln());
                }
                Ok(am_ln_pdf(p.alpha, p.mu, rho))
            }
            Self::Extreme(p) => extreme_ln_pdf(p, rho),
        }
    }

    fn atoms(&self) -> Vec<Atom> {
        match self {
            Self::Extreme(p) => vec![Atom {
                location: 0.0,
                mass: p.atom_mass(),
            }],
            _ => Vec::new(),
        }
    }

    fn origin(&self) -> Option<(f64, f64)> {
        Some(self.origin_behavior())
    }
}

/// A density rescaled by r̂: `pdf(r) = inner.pdf(r/r̂)/r̂`.
#[derive(Debug, Clone, Copy)]
pub struct Scaled<D> {
    pub inner: D,
    pub rhat: f64,
}

impl<D: Density> Scaled<D> {
    pub fn new(inner: D, s: ScaledEnvelope) -> Self {
        Self {
            inner,
            rhat: s.rhat,
        }
    }
}

impl<D: Density> Density for Scaled<D> {
    fn pdf(&self, r: f64) -> Result<f64> {
        let r = check_abscissa("r", r)?;
        Ok(self.inner.pdf(r / self.rhat)? / self.rhat)
    }

    fn ln_pdf(&self, r: f64) -> Result<f64> {
        let r = check_abscissa("r", r)?;
        Ok(self.inner.ln_pdf(r / self.rhat)? - self.rhat.ln())
    }

    fn atoms(&self) -> Vec<Atom> {
        self.inner
            .atoms()
            .into_iter()
            .map(|a| Atom {
                location: a.location * self.rhat,
                mass: a.mass,
            })
            .collect()
    }

    fn scale(&self) -> f64 {
        self.inner.scale() * self.rhat
    }

    fn origin(&self) -> Option<(f64, f64)> {
        self.inner
            .origin()
            .map(|(e, ln_c)| (e, ln_c - (e + 1.0) * self.rhat.ln()))
    }
}

/// Power `W = P²` of a normalized α-κ-μ envelope.
#[derive(Debug, Clone, Copy)]
pub struct AkmPower(pub AkmParams);

impl Density for AkmPower {
    fn pdf(&self, w: f64) -> Result<f64> {
        let w = check_abscissa("w", w)?;
        if w == 0.0 {
            let (e, ln_c) = self.origin().expect("known");
            return origin_value(e, ln_c, "alpha-kappa-mu power pdf");
        }
        let root = w.sqrt();
        Ok(akm_pdf_normalized(self.0, root)? / (2.0 * root))
    }

    fn ln_pdf(&self, w: f64) -> Result<f64> {
        let w = check_abscissa("w", w)?;
        if w == 0.0 {
            return Ok(self.pdf(0.0)?.ln());
        }
        Ok(akm_ln_pdf_normalized(self.0, w.sqrt())? - (2.0 * w.sqrt()).ln())
    }

    fn origin(&self) -> Option<(f64, f64)> {
        let (e, ln_c) = akm_origin(self.0);
        Some((0.5 * (e - 1.0), ln_c - std::f64::consts::LN_2))
    }
}

// ---------------------------------------------------------------- special cases

/// Classical model recognised inside the α-κ-μ family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum Classical {
    Rayleigh,
    NakagamiM { m: f64 },
    Rice { k: f64 },
    Weibull { alpha: f64 },
    KappaMu { kappa: f64, mu: f64 },
    AlphaMu { alpha: f64, mu: f64 },
    Generic,
}

/// Identifies the classical special case of `p` (parameter tolerance 1e-9).
pub fn specialize(p: AkmParams) -> Classical {
    const TOL: f64 = 1e-9;
    let a2 = (p.alpha - 2.0).abs() <= TOL;
    let k0 = p.kappa <= TOL;
    let m1 = (p.mu - 1.0).abs() <= TOL;
    match (a2, k0, m1) {
        (true, true, true) => Classical::Rayleigh,
        (true, true, false) => Classical::NakagamiM { m: p.mu },
        (true, false, true) => Classical::Rice { k: p.kappa },
        (false, true, true) => Classical::Weibull { alpha: p.alpha },
        (true, false, false) => Classical::KappaMu {
            kappa: p.kappa,
            mu: p.mu,
        },
        (false, true, false) => Classical::AlphaMu {
            alpha: p.alpha,
            mu: p.mu,
        },
        (false, false, _) => Classical::Generic,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const E: f64 = std::f64::consts::E;

    fn akm(a: f64, k: f64, m: f64) -> AkmParams {
        AkmParams::new(a, k, m).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1e-300)
    }

    #[test]
    fn constructors_reject_bad_parameters() {
        assert!(AkmParams::new(0.0, 1.0, 1.0).is_err());
        assert!(AkmParams::new(2.0, -1.0, 1.0).is_err());
        assert!(AkmParams::new(2.0, 1.0, f64::NAN).is_err());
        assert!(ExtremeParams::new(2.0, 0.0).is_err());
        assert!(GammaShadowParams::new(1.0, f64::INFINITY).is_err());
        assert!(ScaledEnvelope::new(-1.0).is_err());
    }

    #[test]
    fn rayleigh_values() {
        let p = akm(2.0, 0.0, 1.0);
        assert!(close(akm_pdf_normalized(p, 1.0).unwrap(), 2.0 / E, 1e-14));
        assert!(close(akm_cdf(p, 1.0).unwrap(), 1.0 - 1.0 / E, 1e-13));
        assert!(close(akm_power_pdf(p, 1.0).unwrap(), 1.0 / E, 1e-14));
        let tiny = akm(2.0, 1e-12, 1.0);
        assert!(close(
            akm_pdf_normalized(tiny, 1.0).unwrap(),
            2.0 / E,
            1e-10
        ));
    }

    #[test]
    fn origin_limits() {
        assert_eq!(akm_pdf_normalized(akm(2.0, 1.0, 1.5), 0.0).unwrap(), 0.0);
        assert_eq!(akm_cdf(akm(1.3, 2.0, 0.7), 0.0).unwrap(), 0.0);
        assert!(matches!(
            akm_pdf_normalized(akm(1.0, 1.0, 0.5), 0.0),
            Err(Error::Singular(_))
        ));
        // αμ = 1: finite non-zero limit matching small-ρ evaluation.
        let p = akm(2.0, 1.5, 0.5);
        let at0 = akm_pdf_normalized(p, 0.0).unwrap();
        assert!(close(akm_pdf_normalized(p, 1e-9).unwrap(), at0, 1e-7));
        assert!(akm_pdf_normalized(p, -1.0).is_err());
    }

    #[test]
    fn negative_inputs_are_domain_errors() {
        assert!(matches!(
            akm_cdf(akm(2.0, 1.0, 1.0), -0.1),
            Err(Error::Domain { .. })
        ));
        assert!(matches!(
            akm_power_pdf(akm(2.0, 1.0, 1.0), -0.1),
            Err(Error::Domain { .. })
        ));
        assert!(matches!(
            akm_moment(akm(2.0, 1.0, 1.0), -1.0),
            Err(Error::Domain { .. })
        ));
        assert!(gamma_shadow_pdf(GammaShadowParams::new(2.0, 1.0).unwrap(), -1.0).is_err());
    }

    #[test]
    fn generic_akm_normalization() {
        for p in [
            akm(3.5, 2.0, 2.1),
            akm(1.5, 3.0, 1.2),
            akm(1.0, 5.0, 0.5),
            akm(4.0, 0.3, 4.0),
        ] {
            let mass = total_mass(&MultipathParams::Akm(p), QuadOptions::default()).unwrap();
            assert!((mass - 1.0).abs() < 1e-8, "{p:?}: {mass}");
        }
        let env = Scaled::new(
            MultipathParams::Akm(akm(1.5, 3.0, 1.2)),
            ScaledEnvelope::new(0.9).unwrap(),
        );
        assert!((total_mass(&env, QuadOptions::default()).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn envelope_scaling_identity() {
        let p = akm(2.0, 1.0, 2.0);
        let s = ScaledEnvelope::new(2.0).unwrap();
        assert_eq!(
            akm_pdf_envelope(p, s, 1.0).unwrap(),
            akm_pdf_normalized(p, 0.5).unwrap() / 2.0
        );
        let u = ScaledEnvelope::unit();
        assert_eq!(
            akm_pdf_envelope(p, u, 0.7).unwrap(),
            akm_pdf_normalized(p, 0.7).unwrap()
        );
    }

    #[test]
    fn cdf_matches_pdf_quadrature() {
        let p = akm(2.5, 1.7, 1.8);
        let q = integrate_finite(
            |r| akm_pdf_normalized(p, r).unwrap(),
            0.0,
            1.1,
            QuadOptions::default(),
        )
        .unwrap();
        assert!((akm_cdf(p, 1.1).unwrap() - q.value).abs() < 1e-7);
        assert!(akm_cdf(p, 20.0).unwrap() >= 1.0 - 1e-8);
    }

    #[test]
    fn power_pdf_identities() {
        let p = akm(2.0, 2.0, 2.0);
        assert!((total_mass(&AkmPower(p), QuadOptions::default()).unwrap() - 1.0).abs() < 1e-8);
        let q = akm(1.7, 0.4, 1.3);
        assert_eq!(
            akm_power_pdf(q, 4.0).unwrap(),
            akm_pdf_normalized(q, 2.0).unwrap() / 4.0
        );
        assert_eq!(akm_power_pdf(akm(2.0, 1.0, 1.5), 0.0).unwrap(), 0.0);
        assert!(matches!(
            akm_power_pdf(akm(2.0, 1.0, 0.7), 0.0),
            Err(Error::Singular(_))
        ));
    }

    #[test]
    fn moment_examples() {
        assert_eq!(akm_moment(akm(1.3, 2.0, 0.6), 0.0).unwrap(), 1.0);
        assert!(close(
            akm_moment(akm(2.0, 0.0, 3.7), 2.0).unwrap(),
            1.0,
            1e-13
        ));
        // E[ρ^α] = 1 for every parameter set.
        for p in [akm(2.0, 1.5, 2.1), akm(3.1, 0.2, 0.8), akm(1.2, 4.0, 3.3)] {
            assert!(
                close(akm_moment(p, p.alpha()).unwrap(), 1.0, 1e-12),
                "{p:?}"
            );
        }
    }

    #[test]
    fn literal_moment_fails_at_zero_order() {
        let p = akm(2.0, 1.5, 2.1);
        let lit = akm_moment_literal(p, 0.0).unwrap();
        assert!((lit - 1.0).abs() > 1e-3);
    }

    #[test]
    fn nakagami_equivalence_examples() {
        assert_eq!(nakagami_m_equiv(0.0, 2.3).unwrap(), 2.3);
        assert!(close(nakagami_m_equiv(1.0, 1.0).unwrap(), 4.0 / 3.0, 1e-15));
        let p = akm(2.0, 1.5, 2.0);
        let var = akm_moment(p, 4.0).unwrap() - akm_moment(p, 2.0).unwrap().powi(2);
        assert!(close(1.0 / var, nakagami_m_equiv(1.5, 2.0).unwrap(), 1e-10));
    }

    #[test]
    fn extreme_alpha_two_matches_kappa_mu_extreme() {
        let m = 1.1;
        let p = ExtremeParams::kappa_mu(m).unwrap();
        for rho in [0.05, 0.3, 1.0, 1.7, 3.0] {
            let direct = 4.0
                * m
                * (-2.0 * m * (1.0 + rho * rho)).exp()
                * crate::specfun::bessel_i(1.0, 4.0 * m * rho).unwrap();
            assert!(close(extreme_pdf(p, rho).unwrap(), direct, 1e-12), "{rho}");
        }
        assert_eq!(extreme_density(p).atoms()[0].mass, (-2.2f64).exp());
    }

    #[test]
    fn extreme_continuous_mass() {
        let p = ExtremeParams::new(1.7, 0.9).unwrap();
        let mass = continuous_mass(&MultipathParams::Extreme(p), QuadOptions::default()).unwrap();
        assert!((mass - (1.0 - (-1.8f64).exp())).abs() < 1e-7);
        assert!((extreme_cdf(p, 60.0).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(extreme_cdf(p, 0.0).unwrap(), p.atom_mass());
    }

    #[test]
    fn am_examples() {
        let u = ScaledEnvelope::unit();
        assert!(close(
            am_pdf(AmParams::new(2.0, 1.0).unwrap(), u, 1.0).unwrap(),
            2.0 / E,
            1e-14
        ));
        let w = AmParams::new(3.0, 1.0).unwrap();
        for r in [0.2f64, 0.9, 1.6] {
            let weibull: f64 = 3.0 * r * r * (-(r * r * r)).exp();
            assert!(close(am_pdf(w, u, r).unwrap(), weibull, 1e-13));
        }
        let s = ScaledEnvelope::new(1.1).unwrap();
        let d = Scaled::new(MultipathParams::Am(AmParams::new(2.4, 1.7).unwrap()), s);
        assert!((total_mass(&d, QuadOptions::default()).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn gamma_shadow_examples() {
        assert_eq!(
            gamma_shadow_pdf(GammaShadowParams::new(1.0, 2.0).unwrap(), 0.0).unwrap(),
            0.5
        );
        assert!(close(
            gamma_shadow_pdf(GammaShadowParams::new(2.0, 1.0).unwrap(), 1.0).unwrap(),
            1.0 / E,
            1e-14
        ));
        let g = GammaShadowParams::new(1.8, 0.7).unwrap();
        assert!((total_mass(&g, QuadOptions::default()).unwrap() - 1.0).abs() < 1e-9);
        assert!(gamma_shadow_pdf(GammaShadowParams::new(0.5, 1.0).unwrap(), 0.0).is_err());
        assert_eq!(
            gamma_shadow_pdf(GammaShadowParams::new(3.0, 1.0).unwrap(), 0.0).unwrap(),
            0.0
        );
    }

    #[test]
    fn special_cases() {
        assert_eq!(specialize(akm(2.0, 0.0, 1.0)), Classical::Rayleigh);
        assert_eq!(
            specialize(akm(2.0, 0.0, 3.0)),
            Classical::NakagamiM { m: 3.0 }
        );
        assert_eq!(specialize(akm(2.0, 2.5, 1.0)), Classical::Rice { k: 2.5 });
        assert_eq!(
            specialize(akm(3.0, 0.0, 1.0)),
            Classical::Weibull { alpha: 3.0 }
        );
        assert_eq!(
            specialize(akm(2.0, 1.0, 2.0)),
            Classical::KappaMu {
                kappa: 1.0,
                mu: 2.0
            }
        );
        assert_eq!(
            specialize(akm(1.5, 0.0, 2.0)),
            Classical::AlphaMu {
                alpha: 1.5,
                mu: 2.0
            }
        );
        assert_eq!(specialize(akm(1.5, 1.0, 2.0)), Classical::Generic);
        assert_eq!(specialize(akm(2.0 + 1e-10, 0.0, 1.0)), Classical::Rayleigh);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn cdf_forms_agree_and_are_monotone(
            alpha in 0.8f64..4.0, kappa in 0.0f64..5.0, mu in 0.5f64..4.0, rho in 0.01f64..3.0
        ) {
            let p = akm(alpha, kappa, mu);
            let a = akm_cdf(p, rho).unwrap();
            let b = akm_cdf_series(p, rho).unwrap();
            prop_assert!((a - b).abs() < 1e-9, "{} vs {}", a, b);
            prop_assert!(akm_cdf(p, rho * 1.1).unwrap() >= a - 1e-15);
        }

        #[test]
        fn cdf_derivative_matches_pdf(
            alpha in 1.0f64..4.0, kappa in 0.0f64..5.0, mu in 0.5f64..4.0, rho in 0.3f64..1.5
        ) {
            let p = akm(alpha, kappa, mu);
            let h = 1e-4 * rho;
            let d = (akm_cdf_series(p, rho + h).unwrap() - akm_cdf_series(p, rho - h).unwrap()) / (2.0 * h);
            let f = akm_pdf_normalized(p, rho).unwrap();
            prop_assert!((d - f).abs() <= 1e-5 * f.max(1e-3), "{} vs {}", d, f);
        }

        #[test]
        fn pdf_is_non_negative_and_finite(
            alpha in 0.5f64..5.0, kappa in 0.0f64..10.0, mu in 0.2f64..6.0, rho in 1e-6f64..20.0
        ) {
            let v = akm_pdf_normalized(akm(alpha, kappa, mu), rho).unwrap();
            prop_assert!(v.is_finite() && v >= 0.0);
        }
    }
}
