//! Closed-form SNR laws, secrecy outage probability and the optimal subset size.
//!
//! Bob's SNR is modelled as Gamma, Eve's as exponential. The outage
//! probability has three evaluators behind [`SopEvaluator`]: direct
//! quadrature (`exact`), the Meijer-G series (`series`) and the closed-form
//! lower bound (`lower_bound`).

pub mod meijerg;
pub mod quad;

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::Serialize;

use crate::channel::SystemParams;
use crate::specfun::{
    ln_gamma, phase_error_char, rayleigh_cdf, rayleigh_pdf, regularized_lower_gamma, upper_incomplete_gamma,
    Probability,
};
use crate::transceiver::CsiKind;
use crate::{Error, Result};

use meijerg::{GError, MeijerG};
use quad::{integrate_pieces, Tolerance};

/// Gamma law with shape `κ` and scale `ω`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaParams {
    pub shape: f64,
    pub scale: f64,
}

impl GammaParams {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        if !(shape > 0.0) || !shape.is_finite() {
            return Err(Error::invalid("shape", shape, "Gamma shape must be finite and > 0"));
        }
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::invalid("scale", scale, "Gamma scale must be finite and > 0"));
        }
        Ok(GammaParams { shape, scale })
    }

    /// Moment match: `κ = E²/V`, `ω = V/E`.
    pub fn from_moments(mean: f64, variance: f64) -> Result<Self> {
        Self::new(mean * mean / variance, variance / mean)
    }

    pub fn mean(&self) -> f64 {
        self.shape * self.scale
    }

    pub fn variance(&self) -> f64 {
        self.shape * self.scale * self.scale
    }

    pub fn cdf(&self, x: f64) -> Result<Probability> {
        regularized_lower_gamma(self.shape, x.max(0.0) / self.scale)
    }
}

/// Exponential law with mean `λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpParams {
    pub mean: f64,
}

impl ExpParams {
    pub fn new(mean: f64) -> Result<Self> {
        if !(mean > 0.0) || !mean.is_finite() {
            return Err(Error::invalid("mean", mean, "exponential mean must be finite and > 0"));
        }
        Ok(ExpParams { mean })
    }

    pub fn cdf(&self, x: f64) -> f64 {
        -(-x.max(0.0) / self.mean).exp_m1()
    }
}

/// Normal approximation to the magnitudes of the `K` strongest of `N`
/// Rayleigh draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrderStats {
    /// Mean magnitude of the selected elements.
    pub mu_bar: f64,
    /// Variance of a selected magnitude.
    pub beta_bar: f64,
    /// Expected magnitude of the weakest selected element.
    pub threshold: f64,
}

/// Mean of the real part (`mean_re`) and the variances of the real and
/// imaginary parts of the coherent sum `Σ conj(h_n) e^{-jφ̃_n} b_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SumMoments {
    pub mean_re: f64,
    pub var_re: f64,
    pub var_im: f64,
}

impl SumMoments {
    /// `E|sum|²`.
    pub fn power(&self) -> f64 {
        self.mean_re * self.mean_re + self.var_re + self.var_im
    }

    /// `Var|sum|²` under a Gaussian approximation of the two components.
    pub fn power_variance(&self) -> f64 {
        let m2 = self.mean_re * self.mean_re;
        2.0 * (2.0 * m2 * self.var_re + self.var_re * self.var_re + self.var_im * self.var_im)
    }
}

fn check_count(k: usize, n: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::invalid("K", k, "must lie in [1, N]"));
    }
    Ok(())
}

/// Order statistics of the `k` largest of `n` Rayleigh magnitudes with
/// `E|h|² = beta`.
pub fn ess_order_stats(n: usize, k: usize, beta: f64) -> Result<OrderStats> {
    check_count(k, n)?;
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::invalid("beta", beta, "must be finite and > 0"));
    }
    let frac = k as f64 / n as f64;
    // t²/β = -ln(K/N)
    let cut = -frac.ln();
    let threshold = (beta * cut).sqrt();
    let mu_bar = beta.sqrt() * upper_incomplete_gamma(1.5, cut)? / frac;
    let p = rayleigh_cdf(mu_bar, beta);
    let density = rayleigh_pdf(mu_bar, beta);
    let beta_bar = p * (1.0 - p) / (n as f64 * density * density);
    if !(beta_bar > 0.0) || !beta_bar.is_finite() {
        return Err(Error::Numerical(format!("order-statistic variance {beta_bar} for K={k}, N={n}")));
    }
    Ok(OrderStats { mu_bar, beta_bar, threshold })
}

/// Moments of Bob's coherent sum over `count` active elements.
///
/// Without `stats` the elements are the full surface (`count = N`) and the
/// magnitudes are plain Rayleigh; with `stats` they follow the order-statistic
/// approximation of the strongest `count`. For perfect CSI the sum runs over
/// the true channel, which adds the estimation error to both components.
pub fn bob_appendix_moments(
    params: &SystemParams,
    count: usize,
    stats: Option<&OrderStats>,
    csi: CsiKind,
) -> Result<SumMoments> {
    let beta = params.beta_bob();
    let mu1 = phase_error_char(1, params.quantization_levels)?;
    let mu2 = phase_error_char(2, params.quantization_levels)?;
    let k = count as f64;
    let outdated = match stats {
        None => SumMoments {
            mean_re: 0.5 * k * (PI * beta).sqrt() * mu1,
            var_re: 0.5 * k * beta * (1.0 + mu2 - 0.5 * PI * mu1 * mu1),
            var_im: 0.5 * k * beta * (1.0 - mu2),
        },
        Some(s) => {
            let second = s.mu_bar * s.mu_bar + s.beta_bar;
            SumMoments {
                mean_re: k * s.mu_bar * mu1,
                var_re: 0.5 * k * second * (1.0 + mu2 - 2.0 * mu1 * mu1) + k * k * s.beta_bar * mu1 * mu1,
                var_im: 0.5 * k * second * (1.0 - mu2),
            }
        }
    };
    Ok(match csi {
        CsiKind::Outdated => outdated,
        CsiKind::Perfect => {
            let rho2 = params.rho * params.rho;
            let error = 0.5 * k * (1.0 - rho2) * beta;
            SumMoments {
                mean_re: params.rho * outdated.mean_re,
                var_re: rho2 * outdated.var_re + error,
                var_im: rho2 * outdated.var_im + error,
            }
        }
    })
}

/// `P M β_H ρ² / σ̂²` (outdated) or `P M β_H / σ²` (perfect) for `count`
/// active elements.
fn snr_prefactor(params: &SystemParams, count: usize, csi: CsiKind, beta_user: f64, noise: f64) -> f64 {
    let array_gain = params.tx_power * params.bs_antennas as f64 * params.beta_h();
    match csi {
        CsiKind::Outdated => {
            let rho2 = params.rho * params.rho;
            array_gain * rho2 / (noise + array_gain * count as f64 * (1.0 - rho2) * beta_user)
        }
        CsiKind::Perfect => array_gain / noise,
    }
}

/// Gamma law of Bob's SNR. `ess_k = None` or `Some(N)` uses the exact
/// full-surface moments; `Some(K < N)` uses the subset-selection law.
pub fn bob_snr_params(params: &SystemParams, csi: CsiKind, ess_k: Option<usize>) -> Result<GammaParams> {
    let n = params.elements();
    match ess_k {
        None => bob_snr_params_full(params, csi),
        Some(k) => {
            check_count(k, n)?;
            if k == n {
                bob_snr_params_full(params, csi)
            } else {
                bob_snr_params_ess(params, csi, k)
            }
        }
    }
}

fn bob_snr_params_full(params: &SystemParams, csi: CsiKind) -> Result<GammaParams> {
    let n = params.elements();
    let c = snr_prefactor(params, n, csi, params.beta_bob(), params.noise_bob);
    let mom = bob_appendix_moments(params, n, None, csi)?;
    GammaParams::from_moments(c * mom.power(), c * c * mom.power_variance())
}

/// Subset-selection law of Bob's SNR for any `1 ≤ K ≤ N`, including `K = N`
/// where it approximates the full-surface law.
pub fn bob_snr_params_ess(params: &SystemParams, csi: CsiKind, k: usize) -> Result<GammaParams> {
    let n = params.elements();
    let stats = ess_order_stats(n, k, params.beta_bob())?;
    let mom = bob_appendix_moments(params, k, Some(&stats), csi)?;
    let c = snr_prefactor(params, k, csi, params.beta_bob(), params.noise_bob);
    let shape = mom.mean_re * mom.mean_re / (4.0 * mom.var_re);
    let mean = c * mom.power();
    GammaParams::new(shape, mean / shape)
}

/// Exponential law of Eve's SNR with `K` (or all `N`) active elements.
pub fn eve_snr_params(params: &SystemParams, csi: CsiKind, ess_k: Option<usize>) -> Result<ExpParams> {
    let n = params.elements();
    let k = match ess_k {
        Some(k) => {
            check_count(k, n)?;
            k
        }
        None => n,
    };
    let beta = params.beta_eve();
    let c = snr_prefactor(params, k, csi, beta, params.noise_eve);
    ExpParams::new(c * k as f64 * beta)
}

fn check_rate(rate: f64) -> Result<()> {
    if !(rate >= 0.0) || !rate.is_finite() {
        return Err(Error::invalid("Rs", rate, "secrecy rate must be finite and >= 0"));
    }
    Ok(())
}

/// Upper end of the integration variable `u = γ_E/λ`; the dropped tail
/// weighs at most `e^{-50}`.
const SOP_U_MAX: f64 = 50.0;

/// `Pr(C_s ≤ R_s) = ∫_0^∞ F_B(2^{R_s}(1 + λu) − 1) e^{-u} du` by adaptive
/// quadrature.
pub fn sop_exact(bob: &GammaParams, eve: &ExpParams, rate: f64) -> Result<Probability> {
    check_rate(rate)?;
    let b = rate.exp2();
    let mut failure = None;
    let integrand = |u: f64| match bob.cdf(b * (1.0 + eve.mean * u) - 1.0) {
        Ok(p) => p.value() * (-u).exp(),
        Err(e) => {
            failure.get_or_insert(e);
            0.0
        }
    };
    // F_B changes where its argument crosses the bulk of the Gamma law; that
    // can be a sliver of [0, 50], so seed the partition geometrically there.
    let mut points = vec![0.0, SOP_U_MAX];
    points.extend([1.0, 5.0, 20.0]);
    for j in -60..=8 {
        let x = bob.mean() * f64::from(j).exp2();
        let u = ((x + 1.0) / b - 1.0) / eve.mean;
        if u > 0.0 && u < SOP_U_MAX {
            points.push(u);
        }
    }
    points.sort_by(f64::total_cmp);
    points.dedup_by(|x, y| *x <= *y * (1.0 + 1e-12));
    let tol = Tolerance { abs: 1e-15, rel: 1e-10, max_intervals: 4000 };
    let result = integrate_pieces(integrand, &points, tol)?;
    if let Some(e) = failure {
        return Err(e);
    }
    Probability::clamped(result.value)
}

/// Closed-form lower bound `(λ / (2^{-R_s} ω + λ))^κ`.
pub fn sop_lower_bound(bob: &GammaParams, eve: &ExpParams, rate: f64) -> Result<Probability> {
    check_rate(rate)?;
    let z = bob.scale / (eve.mean * rate.exp2());
    Probability::clamped((-bob.shape * z.ln_1p()).exp())
}

/// Everything the Meijer-G series produced.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesOutcome {
    pub value: f64,
    /// Signed terms, in order.
    pub terms: Vec<f64>,
    /// Upper bound on `|series − SOP|`.
    pub bias_bound: f64,
}

/// Largest admissible [`SeriesOutcome::bias_bound`] before the series is
/// rejected as not representing the outage probability.
pub const SERIES_BIAS_LIMIT: f64 = 1e-6;

/// Shape perturbation used when an integer `κ` makes poles collide.
const SHAPE_NUDGE: f64 = 1e-9;

/// Term `p` of the series, `(−a/ω)^p / p! · G^{2,2}_{3,3}(z | 1, 1+p−κ, 1+p; 1, p, 1+p) / Γ(κ)`.
fn series_term(shape: f64, z: f64, ln_coeff: f64, p: usize) -> std::result::Result<f64, GError> {
    let pf = p as f64;
    let g = MeijerG::new(vec![1.0, 1.0 + pf - shape, 1.0 + pf], vec![1.0, pf, 1.0 + pf], 2, 2)?;
    let ln_scale = if p == 0 { ln_gamma(shape) } else { ln_gamma(shape) - pf * ln_coeff + ln_gamma(pf + 1.0) };
    let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
    Ok(sign * g.eval_scaled(z, ln_scale)?)
}

/// Meijer-G series for the outage probability with all terms and the bias
/// bound, without the validity check.
///
/// Summed to infinity the series equals `E[exp(−(γ_B − a)/(bλ))]` with
/// `a = 2^{R_s} − 1`, `b = 2^{R_s}`, which overshoots the outage
/// probability by at most `(e^{a/(bλ)} − 1) F_B(a)`.
pub fn sop_series_terms(
    bob: &GammaParams,
    eve: &ExpParams,
    rate: f64,
    p_max: usize,
    tol: f64,
) -> Result<SeriesOutcome> {
    check_rate(rate)?;
    if p_max < 1 {
        return Err(Error::invalid("p_max", p_max, "must be >= 1"));
    }
    let b = rate.exp2();
    let a = b - 1.0;
    let z = bob.scale / (eve.mean * b);
    let ln_coeff = (a / bob.scale).ln();

    let mut shape = bob.shape;
    let mut terms = Vec::new();
    let mut p = 0;
    loop {
        let term = match series_term(shape, z, ln_coeff, p) {
            Ok(t) => t,
            Err(GError::PoleCollision { .. }) if shape == bob.shape => {
                shape = bob.shape + SHAPE_NUDGE;
                terms.clear();
                p = 0;
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        terms.push(term);
        // with a = 0 every later term vanishes
        if a == 0.0 || term.abs() < tol {
            break;
        }
        p += 1;
        if p > p_max {
            return Err(Error::NonConvergence { terms: terms.len(), last_term: term.abs() });
        }
    }
    let value = terms.iter().sum();
    let bias_bound = (a / (b * eve.mean)).exp_m1() * bob.cdf(a)?.value();
    Ok(SeriesOutcome { value, terms, bias_bound })
}

/// Meijer-G series for the outage probability.
///
/// Fails with [`Error::OutsideValidity`] when the series is provably more
/// than [`SERIES_BIAS_LIMIT`] away from the outage probability, and with
/// [`Error::NonConvergence`] when `p_max` terms do not bring a term below `tol`.
pub fn sop_series_meijerg(
    bob: &GammaParams,
    eve: &ExpParams,
    rate: f64,
    p_max: usize,
    tol: f64,
) -> Result<Probability> {
    let out = sop_series_terms(bob, eve, rate, p_max, tol)?;
    if out.bias_bound > SERIES_BIAS_LIMIT {
        return Err(Error::OutsideValidity { bias_bound: out.bias_bound });
    }
    Probability::clamped(out.value)
}

/// A way of turning the two SNR laws into an outage probability.
pub trait SopEvaluator: Send + Sync {
    fn name(&self) -> &'static str;
    fn evaluate(&self, bob: &GammaParams, eve: &ExpParams, rate: f64) -> Result<Probability>;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct ExactSop;

impl SopEvaluator for ExactSop {
    fn name(&self) -> &'static str {
        "exact"
    }
    fn evaluate(&self, bob: &GammaParams, eve: &ExpParams, rate: f64) -> Result<Probability> {
        sop_exact(bob, eve, rate)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SeriesSop {
    pub p_max: usize,
    pub tol: f64,
}

impl Default for SeriesSop {
    fn default() -> Self {
        SeriesSop { p_max: 200, tol: 1e-8 }
    }
}

impl SopEvaluator for SeriesSop {
    fn name(&self) -> &'static str {
        "series"
    }
    fn evaluate(&self, bob: &GammaParams, eve: &ExpParams, rate: f64) -> Result<Probability> {
        sop_series_meijerg(bob, eve, rate, self.p_max, self.tol)
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub struct LowerBoundSop;

impl SopEvaluator for LowerBoundSop {
    fn name(&self) -> &'static str {
        "lower_bound"
    }
    fn evaluate(&self, bob: &GammaParams, eve: &ExpParams, rate: f64) -> Result<Probability> {
        sop_lower_bound(bob, eve, rate)
    }
}

/// Outage evaluators by name.
pub struct SopRegistry {
    entries: BTreeMap<&'static str, Box<dyn SopEvaluator>>,
}

impl SopRegistry {
    pub fn empty() -> Self {
        SopRegistry { entries: BTreeMap::new() }
    }

    pub fn register(&mut self, evaluator: Box<dyn SopEvaluator>) {
        self.entries.insert(evaluator.name(), evaluator);
    }

    pub fn get(&self, name: &str) -> Result<&dyn SopEvaluator> {
        self.entries.get(name).map(|e| e.as_ref()).ok_or_else(|| Error::UnknownStrategy {
            kind: "SOP evaluator",
            name: name.to_string(),
            available: self.names().join(", "),
        })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }
}

impl Default for SopRegistry {
    fn default() -> Self {
        let mut reg = Self::empty();
        reg.register(Box::new(ExactSop));
        reg.register(Box::new(SeriesSop::default()));
        reg.register(Box::new(LowerBoundSop));
        reg
    }
}

/// Analytic outage probability with `K` active elements (`None` = all).
pub fn sop_at(
    params: &SystemParams,
    scenario: crate::transceiver::Scenario,
    ess_k: Option<usize>,
    evaluator: &dyn SopEvaluator,
) -> Result<Probability> {
    let bob = bob_snr_params(params, scenario.bob, ess_k)?;
    let eve = eve_snr_params(params, scenario.eve, ess_k)?;
    evaluator.evaluate(&bob, &eve, params.secrecy_rate)
}

/// Scans `K = 1..=N` and returns the smallest minimiser with its outage
/// probability.
pub fn optimal_k(
    params: &SystemParams,
    scenario: crate::transceiver::Scenario,
    evaluator: &dyn SopEvaluator,
) -> Result<(usize, Probability)> {
    let mut best: Option<(usize, Probability)> = None;
    for k in 1..=params.elements() {
        let sop = sop_at(params, scenario, Some(k), evaluator)?;
        if best.is_none_or(|(_, b)| sop.value() < b.value()) {
            best = Some((k, sop));
        }
    }
    best.ok_or(Error::Degenerate("surface has no elements"))
}
