//! Adaptive quadrature and adaptive series summation.
//!
//! Quadrature is a globally adaptive Gauss–Kronrod (10/21-point) scheme in the
//! style of QUADPACK's QAG: the interval with the largest error estimate is
//! bisected until the summed error meets `max(abs_tol, rel_tol·|I|)` or the
//! evaluation budget runs out. Semi-infinite ranges are mapped onto (0, 1)
//! with `x = s·t/(1-t)`.
//!
//! Integrands that are sharply peaked or span many orders of magnitude are
//! best handled on a log scale: [`integrate_log_unimodal`] locates the peak of
//! `ln f` on the real line, splits there and integrates `exp(ln f - max)`
//! outward on both sides, returning the logarithm of the integral.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Tolerances and evaluation budget for adaptive quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub budget: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            budget: 200_000,
        }
    }
}

impl QuadOptions {
    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_abs_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) || self.budget < 21 {
            return Err(Error::Invalid(format!(
                "quadrature tolerances must be > 0 and budget >= 21 (got rel {:e}, abs {:e}, budget {})",
                self.rel_tol, self.abs_tol, self.budget
            )));
        }
        Ok(())
    }
}

/// Outcome of a converged quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

/// Outcome of a log-scale quadrature: the integral is `exp(ln_value)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogQuadrature {
    pub ln_value: f64,
    /// Relative error estimate of `exp(ln_value)`.
    pub rel_error: f64,
    pub evaluations: usize,
}

impl LogQuadrature {
    pub fn value(&self) -> f64 {
        self.ln_value.exp()
    }
}

/// Outcome of an adaptive series summation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesResult {
    pub value: f64,
    pub terms_used: usize,
    pub last_term_magnitude: f64,
}

const XGK: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_2,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_73,
    0.054_755_896_574_352,
    0.075_039_674_810_919_95,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_85,
    0.134_709_217_311_473_33,
    0.142_775_938_577_060_08,
    0.147_739_104_901_338_5,
    0.149_445_554_002_916_9,
];

/// Gauss weights for the nodes XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_35,
    0.295_524_224_714_752_87,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn eval<F: Fn(f64) -> f64>(f: &F, x: f64) -> Result<f64> {
    let v = f(x);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite { at: x })
    }
}

fn gauss_kronrod_21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<Segment> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = eval(f, center)?;
    let mut kronrod = fc * WGK[10];
    let mut gauss = 0.0;
    let mut res_abs = kronrod.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = eval(f, center - dx)?;
        let f2 = eval(f, center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = kronrod * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let mut error = ((kronrod - gauss) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    Ok(Segment { a, b, value, error })
}

fn adaptive<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    pieces: usize,
    opts: &QuadOptions,
) -> Result<QuadratureResult> {
    opts.validate()?;
    let mut heap = BinaryHeap::new();
    let mut evaluations = 0;
    let width = (b - a) / pieces as f64;
    for k in 0..pieces {
        let lo = a + width * k as f64;
        let hi = if k + 1 == pieces { b } else { lo + width };
        heap.push(gauss_kronrod_21(f, lo, hi)?);
        evaluations += 21;
    }
    loop {
        let value: f64 = heap.iter().map(|s| s.value).sum();
        let error: f64 = heap.iter().map(|s| s.error).sum();
        if error <= opts.abs_tol.max(opts.rel_tol * value.abs()) {
            return Ok(QuadratureResult {
                value,
                error_estimate: error,
                evaluations,
            });
        }
        let worst = heap.peek().copied().expect("non-empty segment heap");
        let mid = 0.5 * (worst.a + worst.b);
        let splittable = mid > worst.a && mid < worst.b;
        if evaluations + 42 > opts.budget || !splittable {
            return Err(Error::QuadratureNonConvergence {
                value,
                error_estimate: error,
                evaluations,
            });
        }
        heap.pop();
        heap.push(gauss_kronrod_21(f, worst.a, mid)?);
        heap.push(gauss_kronrod_21(f, mid, worst.b)?);
        evaluations += 42;
    }
}

/// ∫_a^b f(x) dx on a finite interval.
pub fn integrate_finite<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    opts: QuadOptions,
) -> Result<QuadratureResult> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Invalid(format!(
            "finite interval required, got [{a}, {b}]"
        )));
    }
    if a == b {
        return Ok(QuadratureResult {
            value: 0.0,
            error_estimate: 0.0,
            evaluations: 0,
        });
    }
    adaptive(&f, a, b, 1, &opts)
}

/// ∫_0^∞ f(x) dx.
pub fn integrate_semi_infinite<F: Fn(f64) -> f64>(
    f: F,
    opts: QuadOptions,
) -> Result<QuadratureResult> {
    integrate_semi_infinite_scaled(f, 1.0, opts)
}

/// ∫_0^∞ f(x) dx with the map `x = scale·t/(1-t)`; `scale` should be of the
/// order of the integrand's width.
pub fn integrate_semi_infinite_scaled<F: Fn(f64) -> f64>(
    f: F,
    scale: f64,
    opts: QuadOptions,
) -> Result<QuadratureResult> {
    integrate_upper_tail(f, 0.0, scale, opts)
}

/// ∫_a^∞ f(x) dx.
pub fn integrate_upper_tail<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    scale: f64,
    opts: QuadOptions,
) -> Result<QuadratureResult> {
    if !(scale > 0.0 && scale.is_finite()) || !a.is_finite() {
        return Err(Error::Invalid(format!(
            "bad semi-infinite range: a = {a}, scale = {scale}"
        )));
    }
    let mapped = |t: f64| {
        let om = 1.0 - t;
        let x = a + scale * t / om;
        if x.is_infinite() {
            return 0.0;
        }
        let v = f(x);
        if v == 0.0 {
            0.0
        } else {
            v * scale / (om * om)
        }
    };
    adaptive(&mapped, 0.0, 1.0, 8, &opts)
}

/// ∫_{-∞}^{∞} exp(ln_f(t)) dt for a log-integrand peaking at `mode`, with
/// `left_scale` / `right_scale` the distances over which `ln_f` drops by
/// about one unit on each side.
pub fn integrate_log_peak<G: Fn(f64) -> f64>(
    ln_f: G,
    mode: f64,
    left_scale: f64,
    right_scale: f64,
    opts: QuadOptions,
) -> Result<LogQuadrature> {
    let peak = ln_f(mode);
    if !peak.is_finite() {
        return Err(Error::NonFinite { at: mode });
    }
    let r = peak_sides(|d| ln_f(mode + d) - peak, left_scale, right_scale, opts)?;
    Ok(LogQuadrature {
        ln_value: peak + r.ln_value,
        evaluations: r.evaluations + 1,
        ..r
    })
}

/// ∫_{-∞}^{∞} exp(h(d)) dd for a unimodal `h` with its maximum `h(0) = 0`.
/// Supplying the increment `h` directly (rather than `ln f(mode + d) - ln f(mode)`)
/// avoids cancellation when `ln f` is large in magnitude.
pub fn integrate_log_relative<H: Fn(f64) -> f64>(
    h: H,
    width: f64,
    opts: QuadOptions,
) -> Result<LogQuadrature> {
    if !(width > 0.0 && width.is_finite()) {
        return Err(Error::Invalid(format!("bad peak width {width}")));
    }
    let drop_scale = |dir: f64| -> Result<f64> {
        let mut s = width / 64.0;
        for _ in 0..80 {
            let v = finite_or_neg_inf(h(dir * s), dir * s)?;
            if v <= -1.0 {
                return Ok(s);
            }
            s *= 2.0;
        }
        Ok(s)
    };
    let left = drop_scale(-1.0)?;
    let right = drop_scale(1.0)?;
    peak_sides(h, left, right, opts)
}

fn peak_sides<H: Fn(f64) -> f64>(
    h: H,
    left_scale: f64,
    right_scale: f64,
    opts: QuadOptions,
) -> Result<LogQuadrature> {
    // Each side of a unimodal peak-normalized integrand contributes at least
    // scale/e, which bounds the total from below; the side tolerances are
    // taken relative to that bound so a thin side is not over-resolved.
    let floor = (left_scale + right_scale) / std::f64::consts::E;
    let side_opts = opts.with_abs_tol(opts.abs_tol.max(0.5 * opts.rel_tol * floor));
    // Beyond the first doubling of `scale` where h has dropped by TAIL_DROP
    // the integrand is treated as zero; this keeps evaluations away from far
    // tails where h may be expensive or ill-conditioned.
    const TAIL_DROP: f64 = 60.0;
    let cutoff = |dir: f64, scale: f64| -> Result<f64> {
        let mut s = scale;
        for _ in 0..200 {
            let v = finite_or_neg_inf(h(dir * s), dir * s)?;
            if v < -TAIL_DROP {
                return Ok(s);
            }
            s *= 2.0;
        }
        Ok(f64::INFINITY)
    };
    let side = |dir: f64, scale: f64| -> Result<QuadratureResult> {
        let cut = cutoff(dir, scale)?;
        integrate_semi_infinite_scaled(
            |s| {
                if s > cut {
                    return 0.0;
                }
                let v = h(dir * s);
                if v == f64::NEG_INFINITY {
                    0.0
                } else {
                    v.exp()
                }
            },
            scale,
            side_opts,
        )
    };
    let right = side(1.0, right_scale)?;
    let left = side(-1.0, left_scale)?;
    let total = right.value + left.value;
    if !(total > 0.0) {
        return Err(Error::NonFinite { at: 0.0 });
    }
    Ok(LogQuadrature {
        ln_value: total.ln(),
        rel_error: (right.error_estimate + left.error_estimate) / total,
        evaluations: right.evaluations + left.evaluations,
    })
}

fn finite_or_neg_inf(v: f64, at: f64) -> Result<f64> {
    if v.is_nan() || v == f64::INFINITY {
        Err(Error::NonFinite { at })
    } else {
        Ok(v)
    }
}

/// ∫_{-∞}^{∞} exp(ln_f(t)) dt for a unimodal log-integrand. The peak is
/// located by a scan of ±40 `width` around `hint` (extended if the maximum
/// sits on the edge) followed by golden-section refinement.
pub fn integrate_log_unimodal<G: Fn(f64) -> f64>(
    ln_f: G,
    hint: f64,
    width: f64,
    opts: QuadOptions,
) -> Result<LogQuadrature> {
    if !(width > 0.0 && width.is_finite() && hint.is_finite()) {
        return Err(Error::Invalid(format!(
            "bad peak hint {hint} / width {width}"
        )));
    }
    let step = 0.5 * width;
    let mut center = hint;
    let (mut best_t, mut best_v) = (hint, f64::NEG_INFINITY);
    for _ in 0..20 {
        let mut best_k = 0i32;
        best_v = f64::NEG_INFINITY;
        for k in -80..=80 {
            let t = center + step * k as f64;
            let v = finite_or_neg_inf(ln_f(t), t)?;
            if v > best_v {
                best_v = v;
                best_k = k;
            }
        }
        best_t = center + step * best_k as f64;
        if best_v == f64::NEG_INFINITY {
            return Err(Error::Invalid(
                "log-integrand is -inf across the search window".into(),
            ));
        }
        if best_k.abs() < 80 {
            break;
        }
        center = best_t;
    }

    // Golden-section refinement on the bracketing cells.
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (best_t - step, best_t + step);
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = finite_or_neg_inf(ln_f(c), c)?;
    let mut fd = finite_or_neg_inf(ln_f(d), d)?;
    for _ in 0..60 {
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = finite_or_neg_inf(ln_f(c), c)?;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = finite_or_neg_inf(ln_f(d), d)?;
        }
        if hi - lo < 1e-10 * width {
            break;
        }
    }
    let mode = [(best_t, best_v), (c, fc), (d, fd)]
        .into_iter()
        .fold((best_t, best_v), |acc, p| if p.1 > acc.1 { p } else { acc })
        .0;
    integrate_log_at_mode(ln_f, mode, width, opts)
}

/// [`integrate_log_unimodal`] for a fallible log-integrand. Abscissae where
/// `exp(t)`-style arguments degenerate should return `Ok(-inf)`; the first
/// error raised by `ln_f` is returned as is.
pub fn try_integrate_log_unimodal<G: Fn(f64) -> Result<f64>>(
    ln_f: G,
    hint: f64,
    width: f64,
    opts: QuadOptions,
) -> Result<LogQuadrature> {
    let err = std::cell::RefCell::new(None);
    let r = integrate_log_unimodal(
        |t| match ln_f(t) {
            Ok(v) => v,
            Err(e) => {
                err.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        },
        hint,
        width,
        opts,
    );
    match err.into_inner() {
        Some(e) => Err(e),
        None => r,
    }
}

/// Like [`integrate_log_peak`], with the one-unit drop distances on either
/// side of `mode` found by doubling from `width / 64`.
pub fn integrate_log_at_mode<G: Fn(f64) -> f64>(
    ln_f: G,
    mode: f64,
    width: f64,
    opts: QuadOptions,
) -> Result<LogQuadrature> {
    let peak = finite_or_neg_inf(ln_f(mode), mode)?;
    if !peak.is_finite() {
        return Err(Error::NonFinite { at: mode });
    }
    let r = integrate_log_relative(|d| ln_f(mode + d) - peak, width, opts)?;
    Ok(LogQuadrature {
        ln_value: peak + r.ln_value,
        evaluations: r.evaluations + 1,
        ..r
    })
}

/// Adds `term(0) + term(1) + ...` until three consecutive terms satisfy
/// `|term| <= rel_tol·|partial sum|`.
pub fn sum_adaptive<T: FnMut(usize) -> f64>(
    mut term: T,
    rel_tol: f64,
    max_terms: usize,
) -> Result<SeriesResult> {
    try_sum_adaptive(|i| Ok(term(i)), rel_tol, max_terms)
}

/// Fallible variant of [`sum_adaptive`]; the first term error aborts the sum.
pub fn try_sum_adaptive<T: FnMut(usize) -> Result<f64>>(
    mut term: T,
    rel_tol: f64,
    max_terms: usize,
) -> Result<SeriesResult> {
    const RUN: usize = 3;
    if !(rel_tol > 0.0) || max_terms == 0 {
        return Err(Error::Invalid(format!(
            "series needs rel_tol > 0 and max_terms >= 1 (got {rel_tol:e}, {max_terms})"
        )));
    }
    let mut sum = 0.0;
    let mut run = 0;
    let mut last = 0.0f64;
    for i in 0..max_terms {
        let t = term(i)?;
        if !t.is_finite() {
            return Err(Error::NonFinite { at: i as f64 });
        }
        sum += t;
        last = t.abs();
        if last <= rel_tol * sum.abs() {
            run += 1;
            if run >= RUN {
                return Ok(SeriesResult {
                    value: sum,
                    terms_used: i + 1,
                    last_term_magnitude: last,
                });
            }
        } else {
            run = 0;
        }
    }
    Err(Error::SeriesNonConvergence {
        value: sum,
        terms_used: max_terms,
        last_term: last,
    })
}

/// Log-space counterpart of [`try_sum_adaptive`] for series of non-negative
/// terms given by their logarithms (`-inf` for a zero term). Returns the sum
/// as `SeriesResult` with `value` holding the logarithm of the sum and
/// `last_term_magnitude` the last term relative to the sum.
pub fn try_sum_adaptive_ln<T: FnMut(usize) -> Result<f64>>(
    mut ln_term: T,
    rel_tol: f64,
    max_terms: usize,
) -> Result<SeriesResult> {
    const RUN: usize = 3;
    if !(rel_tol > 0.0) || max_terms == 0 {
        return Err(Error::Invalid(format!(
            "series needs rel_tol > 0 and max_terms >= 1 (got {rel_tol:e}, {max_terms})"
        )));
    }
    let ln_tol = rel_tol.ln();
    let mut ln_max = f64::NEG_INFINITY;
    let mut scaled = 0.0;
    let mut run = 0;
    let mut last_rel = 0.0;
    for i in 0..max_terms {
        let t = ln_term(i)?;
        if t.is_nan() || t == f64::INFINITY {
            return Err(Error::NonFinite { at: i as f64 });
        }
        if t > ln_max {
            scaled = scaled * (ln_max - t).exp() + 1.0;
            ln_max = t;
        } else if t > f64::NEG_INFINITY {
            scaled += (t - ln_max).exp();
        }
        let ln_sum = ln_max + scaled.ln();
        last_rel = (t - ln_sum).exp();
        if ln_sum > f64::NEG_INFINITY && t - ln_sum <= ln_tol {
            run += 1;
            if run >= RUN {
                return Ok(SeriesResult {
                    value: ln_sum,
                    terms_used: i + 1,
                    last_term_magnitude: last_rel,
                });
            }
        } else {
            run = 0;
        }
    }
    Err(Error::SeriesNonConvergence {
        value: ln_max + scaled.ln(),
        terms_used: max_terms,
        last_term: last_rel,
    })
}
