//! Per-realization signal processing: IRS phase design, MRT beamforming,
//! element subset selection and instantaneous SNRs.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::RngCore;
use serde::Serialize;

use crate::channel::{ChannelRealization, SystemParams};
use crate::{Error, Result};

/// Which channel a receiver detects with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CsiKind {
    Outdated,
    Perfect,
}

impl fmt::Display for CsiKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CsiKind::Outdated => "outdated",
            CsiKind::Perfect => "perfect",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Scenario {
    pub bob: CsiKind,
    pub eve: CsiKind,
}

impl Scenario {
    pub const BOTH_OUTDATED: Scenario = Scenario { bob: CsiKind::Outdated, eve: CsiKind::Outdated };
    pub const BOTH_PERFECT: Scenario = Scenario { bob: CsiKind::Perfect, eve: CsiKind::Perfect };
    /// Bob detects with outdated CSI while Eve knows her channel exactly.
    pub const WORST_CASE: Scenario = Scenario { bob: CsiKind::Outdated, eve: CsiKind::Perfect };

    /// Scenarios 1, 2 and 3.
    pub fn from_number(n: u8) -> Result<Self> {
        match n {
            1 => Ok(Self::BOTH_OUTDATED),
            2 => Ok(Self::BOTH_PERFECT),
            3 => Ok(Self::WORST_CASE),
            _ => Err(Error::invalid("scenario", n, "must be 1, 2 or 3")),
        }
    }

    /// Inverse of [`Scenario::from_number`]; `None` for (Perfect, Outdated).
    pub fn number(&self) -> Option<u8> {
        match (self.bob, self.eve) {
            (CsiKind::Outdated, CsiKind::Outdated) => Some(1),
            (CsiKind::Perfect, CsiKind::Perfect) => Some(2),
            (CsiKind::Outdated, CsiKind::Perfect) => Some(3),
            (CsiKind::Perfect, CsiKind::Outdated) => None,
        }
    }

    pub fn label(&self) -> String {
        match self.number() {
            Some(n) => format!("S{n}"),
            None => format!("bob-{}/eve-{}", self.bob, self.eve),
        }
    }
}

/// Phase settings of every element plus the set of elements switched on.
#[derive(Debug, Clone, PartialEq)]
pub struct IrsConfig {
    phases: Vec<f64>,
    selection: Vec<usize>,
}

impl IrsConfig {
    /// `selection` holds distinct zero-based indices into `phases`.
    pub fn new(phases: Vec<f64>, selection: Vec<usize>) -> Result<Self> {
        if selection.is_empty() {
            return Err(Error::Degenerate("no IRS element is switched on"));
        }
        let mut seen = vec![false; phases.len()];
        for &i in &selection {
            if i >= phases.len() {
                return Err(Error::invalid("selection", i, "element index out of range"));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::invalid("selection", i, "duplicate element index"));
            }
        }
        Ok(IrsConfig { phases, selection })
    }

    /// All elements on.
    pub fn full(phases: Vec<f64>) -> Result<Self> {
        let all = (0..phases.len()).collect();
        Self::new(phases, all)
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn selection(&self) -> &[usize] {
        &self.selection
    }

    /// Number of active elements.
    pub fn active(&self) -> usize {
        self.selection.len()
    }
}

/// Phases that co-phase every reflected path at the designed-for channel:
/// `φ_n = arg(conj(ĥ_n) b_n)`; elements with `ĥ_n = 0` get `arg(b_n)`.
pub fn irs_optimal_phases(h_hat: &[Complex64], irs_steering: &[Complex64]) -> Result<Vec<f64>> {
    if h_hat.len() != irs_steering.len() {
        return Err(Error::invalid("h_hat", h_hat.len(), "length differs from the IRS steering vector"));
    }
    Ok(h_hat
        .iter()
        .zip(irs_steering)
        .map(|(h, b)| if *h == Complex64::new(0.0, 0.0) { b.arg() } else { (h.conj() * b).arg() })
        .collect())
}

/// Unit-norm MRT beamformer `HΦĥ_B / ‖HΦĥ_B‖` over the active elements,
/// evaluated in factored form.
pub fn mrt_beamformer(real: &ChannelRealization, irs: &IrsConfig) -> Result<Vec<Complex64>> {
    let link = &real.link;
    let reflected: Complex64 = irs
        .selection()
        .iter()
        .map(|&n| link.irs_steering[n].conj() * Complex64::from_polar(1.0, irs.phases[n]) * real.h_bob_outdated[n])
        .sum();
    let norm = reflected.norm() * link.beta_h.sqrt() * (link.bs_steering.len() as f64).sqrt();
    if !(norm > 0.0) {
        return Err(Error::Degenerate("beamforming direction is zero"));
    }
    let scale = reflected * link.beta_h.sqrt() / norm;
    Ok(link.bs_steering.iter().map(|a| a * scale).collect())
}

/// `|Σ_{n∈S} conj(h_n) e^{-j(φ_n + Δφ_n)} b_n|²`.
pub fn coherent_gain(h: &[Complex64], irs: &IrsConfig, real: &ChannelRealization) -> f64 {
    let b = &real.link.irs_steering;
    irs.selection()
        .iter()
        .map(|&n| h[n].conj() * Complex64::from_polar(1.0, -(irs.phases[n] + real.phase_errors[n])) * b[n])
        .sum::<Complex64>()
        .norm_sqr()
}

fn receiver_snr(
    params: &SystemParams,
    real: &ChannelRealization,
    irs: &IrsConfig,
    csi: CsiKind,
    outdated: &[Complex64],
    current: &[Complex64],
    beta_user: f64,
    noise: f64,
) -> f64 {
    let array_gain = params.tx_power * real.link.bs_steering.len() as f64 * real.link.beta_h;
    match csi {
        CsiKind::Outdated => {
            let rho2 = params.rho * params.rho;
            let leakage = array_gain * irs.active() as f64 * (1.0 - rho2) * beta_user;
            array_gain * rho2 * coherent_gain(outdated, irs, real) / (noise + leakage)
        }
        CsiKind::Perfect => array_gain * coherent_gain(current, irs, real) / noise,
    }
}

/// Bob's instantaneous SNR. With outdated CSI the channel-estimation error
/// of the `K` active elements is folded into the noise.
pub fn instant_snr_bob(real: &ChannelRealization, irs: &IrsConfig, params: &SystemParams, csi: CsiKind) -> f64 {
    receiver_snr(params, real, irs, csi, &real.h_bob_outdated, &real.h_bob, real.beta_bob, params.noise_bob)
}

/// Eve's instantaneous SNR through the IRS configured for Bob.
pub fn instant_snr_eve(real: &ChannelRealization, irs: &IrsConfig, params: &SystemParams, csi: CsiKind) -> f64 {
    receiver_snr(params, real, irs, csi, &real.h_eve_outdated, &real.h_eve, real.beta_eve, params.noise_eve)
}

/// `(γ_B, γ_E)` under `scenario`.
pub fn scenario_snrs(
    real: &ChannelRealization,
    irs: &IrsConfig,
    params: &SystemParams,
    scenario: Scenario,
) -> (f64, f64) {
    (instant_snr_bob(real, irs, params, scenario.bob), instant_snr_eve(real, irs, params, scenario.eve))
}

/// `max(0, log2(1+γ_B) − log2(1+γ_E))` in bit/s/Hz.
pub fn secrecy_capacity(gamma_bob: f64, gamma_eve: f64) -> f64 {
    ((gamma_bob.ln_1p() - gamma_eve.ln_1p()) / std::f64::consts::LN_2).max(0.0)
}

/// Element indices sorted by decreasing `|ĥ_n|`, ties to the lower index.
pub fn strongest_first(h_hat: &[Complex64]) -> Vec<usize> {
    let mags: Vec<f64> = h_hat.iter().map(|h| h.norm()).collect();
    let mut order: Vec<usize> = (0..h_hat.len()).collect();
    order.sort_by(|&i, &j| mags[j].total_cmp(&mags[i]).then(i.cmp(&j)));
    order
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::invalid("K", k, "must lie in [1, N]"));
    }
    Ok(())
}

/// The `K` strongest elements of `ĥ_B`, strongest first.
pub fn ess_select(h_hat: &[Complex64], k: usize) -> Result<Vec<usize>> {
    check_k(k, h_hat.len())?;
    let mut order = strongest_first(h_hat);
    order.truncate(k);
    Ok(order)
}

/// Chooses which IRS elements stay on.
///
/// A selector ranks every element; a size-`K` selection is the first `K`
/// ranks, so one ranking serves a whole sweep over `K`.
pub trait ElementSelector: Send + Sync {
    fn name(&self) -> &'static str;

    /// Full priority order of all elements.
    fn rank(&self, h_hat: &[Complex64], rng: &mut dyn RngCore) -> Vec<usize>;

    fn select(&self, h_hat: &[Complex64], k: usize, rng: &mut dyn RngCore) -> Result<Vec<usize>> {
        check_k(k, h_hat.len())?;
        let mut order = self.rank(h_hat, rng);
        order.truncate(k);
        Ok(order)
    }
}

/// Keeps the strongest elements (the ESS rule).
#[derive(Debug, Default, Clone, Copy)]
pub struct StrongestSelector;

impl ElementSelector for StrongestSelector {
    fn name(&self) -> &'static str {
        "ess"
    }

    fn rank(&self, h_hat: &[Complex64], _rng: &mut dyn RngCore) -> Vec<usize> {
        strongest_first(h_hat)
    }
}

/// Uniformly random subset, a baseline that ignores the channel.
#[derive(Debug, Default, Clone, Copy)]
pub struct RandomSelector;

impl ElementSelector for RandomSelector {
    fn name(&self) -> &'static str {
        "random"
    }

    fn rank(&self, h_hat: &[Complex64], mut rng: &mut dyn RngCore) -> Vec<usize> {
        let mut order: Vec<usize> = (0..h_hat.len()).collect();
        order.shuffle(&mut rng);
        order
    }
}

/// Selectors by name.
pub struct SelectorRegistry {
    entries: BTreeMap<&'static str, Box<dyn ElementSelector>>,
}

impl SelectorRegistry {
    pub fn empty() -> Self {
        SelectorRegistry { entries: BTreeMap::new() }
    }

    pub fn register(&mut self, selector: Box<dyn ElementSelector>) {
        self.entries.insert(selector.name(), selector);
    }

    pub fn get(&self, name: &str) -> Result<&dyn ElementSelector> {
        self.entries.get(name).map(|s| s.as_ref()).ok_or_else(|| Error::UnknownStrategy {
            kind: "element selector",
            name: name.to_string(),
            available: self.names().join(", "),
        })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }
}

impl Default for SelectorRegistry {
    fn default() -> Self {
        let mut reg = Self::empty();
        reg.register(Box::new(StrongestSelector));
        reg.register(Box::new(RandomSelector));
        reg
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;
    use std::sync::Arc;

    use rand::Rng;

    use super::*;
    use crate::channel::{sample_user_channel, BsIrsChannel};
    use crate::rng::StreamRng;

    const C0: Complex64 = Complex64::new(0.0, 0.0);

    fn draw(params: &SystemParams, seed: u64, trial: u64) -> ChannelRealization {
        let link = Arc::new(BsIrsChannel::new(params));
        ChannelRealization::draw(params, &link, &mut StreamRng::for_trial(seed, trial)).unwrap()
    }

    fn optimal(real: &ChannelRealization, selection: Vec<usize>) -> IrsConfig {
        let phases = irs_optimal_phases(&real.h_bob_outdated, &real.link.irs_steering).unwrap();
        IrsConfig::new(phases, selection).unwrap()
    }

    /// SNR from the dense model: received amplitude `(H Φ̃_S h)^H w` with
    /// `w` built from the error-free `Φ_S`, and the outdated-CSI noise
    /// computed from `E|(H Φ̃_S e)^H w|²`.
    fn dense_snr(params: &SystemParams, real: &ChannelRealization, irs: &IrsConfig, eve: bool, csi: CsiKind) -> f64 {
        let h_mat = real.link.dense();
        let n = real.elements();
        let on: Vec<bool> = (0..n).map(|i| irs.selection().contains(&i)).collect();
        let diag = |with_err: bool| -> Vec<Complex64> {
            (0..n)
                .map(|i| {
                    if !on[i] {
                        return C0;
                    }
                    let e = if with_err { real.phase_errors[i] } else { 0.0 };
                    Complex64::from_polar(1.0, irs.phases()[i] + e)
                })
                .collect()
        };
        let apply = |d: &[Complex64], h: &[Complex64]| -> Vec<Complex64> {
            h_mat.iter().map(|row| (0..n).map(|i| row[i] * d[i] * h[i]).sum()).collect()
        };
        let v = apply(&diag(false), &real.h_bob_outdated);
        let vn = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        let w: Vec<Complex64> = v.iter().map(|x| x / vn).collect();
        let inner = |u: &[Complex64]| -> Complex64 { u.iter().zip(&w).map(|(a, b)| a.conj() * b).sum() };

        let phi_err = diag(true);
        let (outdated, current, beta, noise) = if eve {
            (&real.h_eve_outdated, &real.h_eve, real.beta_eve, params.noise_eve)
        } else {
            (&real.h_bob_outdated, &real.h_bob, real.beta_bob, params.noise_bob)
        };
        match csi {
            CsiKind::Perfect => params.tx_power * inner(&apply(&phi_err, current)).norm_sqr() / noise,
            CsiKind::Outdated => {
                // E|Σ_i conj(e_i) g_i|² = (1-ρ²)β Σ_i |g_i|², g = (H Φ̃_S)^H w
                let g2: f64 = (0..n)
                    .map(|i| {
                        let col: Complex64 = (0..h_mat.len()).map(|m| h_mat[m][i].conj() * w[m]).sum();
                        (phi_err[i].conj() * col).norm_sqr()
                    })
                    .sum();
                let sig = params.rho * params.rho * inner(&apply(&phi_err, outdated)).norm_sqr();
                let eff = noise + params.tx_power * (1.0 - params.rho * params.rho) * beta * g2;
                params.tx_power * sig / eff
            }
        }
    }

    #[test]
    fn scenario_numbers_roundtrip() {
        for n in 1..=3 {
            assert_eq!(Scenario::from_number(n).unwrap().number(), Some(n));
        }
        assert!(Scenario::from_number(4).is_err());
        assert_eq!(Scenario::WORST_CASE.label(), "S3");
        assert_eq!(Scenario { bob: CsiKind::Perfect, eve: CsiKind::Outdated }.number(), None);
    }

    #[test]
    fn irs_config_validation() {
        assert!(matches!(IrsConfig::new(vec![0.0; 3], vec![]), Err(Error::Degenerate(_))));
        assert!(IrsConfig::new(vec![0.0; 3], vec![3]).is_err());
        assert!(IrsConfig::new(vec![0.0; 3], vec![1, 1]).is_err());
        assert_eq!(IrsConfig::full(vec![0.0; 3]).unwrap().active(), 3);
    }

    #[test]
    fn optimal_phase_examples() {
        let b: Vec<Complex64> = (0..5).map(|i| Complex64::from_polar(1.0, 0.3 * i as f64)).collect();
        let phases = irs_optimal_phases(&b, &b).unwrap();
        assert!(phases.iter().all(|p| p.abs() < 1e-15));

        let p = irs_optimal_phases(&[Complex64::new(0.0, 1.0)], &[Complex64::new(1.0, 0.0)]).unwrap();
        assert!((p[0] + PI / 2.0).abs() < 1e-15);

        let b = [Complex64::from_polar(1.0, 0.7)];
        assert_eq!(irs_optimal_phases(&[C0], &b).unwrap(), vec![0.7]);
        assert!(irs_optimal_phases(&[C0; 2], &b).is_err());
    }

    #[test]
    fn optimal_phases_align_every_path() {
        let mut rng = StreamRng::new(4, 0);
        for _ in 0..20 {
            let h = sample_user_channel(64, 1.0, &mut rng);
            let b: Vec<Complex64> = (0..64).map(|_| Complex64::from_polar(1.0, rng.random_range(-PI..PI))).collect();
            let phases = irs_optimal_phases(&h, &b).unwrap();
            let sum: Complex64 = (0..64).map(|n| h[n].conj() * Complex64::from_polar(1.0, -phases[n]) * b[n]).sum();
            let want: f64 = h.iter().map(|x| x.norm()).sum();
            assert!((sum.re - want).abs() < 1e-12 * want && sum.im.abs() < 1e-12 * want);
        }
    }

    #[test]
    fn optimal_phases_beat_random_phases() {
        let params = SystemParams { quantization_levels: u32::MAX, rho: 0.8, ..Default::default() };
        let mut rng = StreamRng::new(9, 0);
        for trial in 0..20 {
            let mut real = draw(&params, 21, trial);
            real.phase_errors.iter_mut().for_each(|e| *e = 0.0);
            let n = real.elements();
            let best = instant_snr_bob(&real, &optimal(&real, (0..n).collect()), &params, CsiKind::Outdated);
            for _ in 0..100 {
                let phases = (0..n).map(|_| rng.random_range(-PI..PI)).collect();
                let irs = IrsConfig::full(phases).unwrap();
                assert!(instant_snr_bob(&real, &irs, &params, CsiKind::Outdated) <= best);
            }
        }
    }

    #[test]
    fn beamformer_is_unit_norm_and_parallel_to_bs_steering() {
        let params = SystemParams::default();
        for trial in 0..50 {
            let real = draw(&params, 3, trial);
            let irs = optimal(&real, ess_select(&real.h_bob_outdated, 1 + trial as usize).unwrap());
            let w = mrt_beamformer(&real, &irs).unwrap();
            let norm: f64 = w.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-12);
            let aw: Complex64 = real.link.bs_steering.iter().zip(&w).map(|(a, x)| a.conj() * x).sum();
            assert!((aw.norm() - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn beamformer_rejects_zero_projection() {
        let params = SystemParams::default();
        let mut real = draw(&params, 3, 0);
        real.h_bob_outdated.iter_mut().for_each(|h| *h = C0);
        let irs = IrsConfig::full(vec![0.0; real.elements()]).unwrap();
        assert!(matches!(mrt_beamformer(&real, &irs), Err(Error::Degenerate(_))));
    }

    #[test]
    fn closed_form_matches_dense_signal_chain() {
        let params = SystemParams { irs_columns: 6, irs_rows: 5, bs_antennas: 3, rho: 0.85, ..Default::default() };
        let mut worst = 0.0f64;
        for trial in 0..1000 {
            let real = draw(&params, 77, trial);
            let n = real.elements();
            let k = if trial % 2 == 0 { n } else { 1 + (trial as usize % n) };
            let irs = optimal(&real, ess_select(&real.h_bob_outdated, k).unwrap());
            for csi in [CsiKind::Outdated, CsiKind::Perfect] {
                for (eve, fast) in [
                    (false, instant_snr_bob(&real, &irs, &params, csi)),
                    (true, instant_snr_eve(&real, &irs, &params, csi)),
                ] {
                    let slow = dense_snr(&params, &real, &irs, eve, csi);
                    worst = worst.max((fast / slow - 1.0).abs());
                }
            }
        }
        assert!(worst < 1e-9, "worst relative gap {worst}");
    }

    #[test]
    fn coherent_limit() {
        let params = SystemParams { rho: 1.0, quantization_levels: u32::MAX, ..Default::default() };
        let mut real = draw(&params, 1, 1);
        real.phase_errors.iter_mut().for_each(|e| *e = 0.0);
        let irs = optimal(&real, (0..real.elements()).collect());
        let sum: f64 = real.h_bob_outdated.iter().map(|h| h.norm()).sum();
        let want = params.tx_power / params.noise_bob * 4.0 * params.beta_h() * sum * sum;
        for csi in [CsiKind::Outdated, CsiKind::Perfect] {
            let got = instant_snr_bob(&real, &irs, &params, csi);
            assert!((got / want - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn eve_snr_depends_only_on_her_own_csi_kind() {
        let params = SystemParams::default();
        for trial in 0..100 {
            let real = draw(&params, 5, trial);
            let irs = optimal(&real, (0..real.elements()).collect());
            let (_, e2) = scenario_snrs(&real, &irs, &params, Scenario::BOTH_PERFECT);
            let (_, e3) = scenario_snrs(&real, &irs, &params, Scenario::WORST_CASE);
            assert_eq!(e2, e3);
        }
    }

    #[test]
    fn secrecy_capacity_examples() {
        assert_eq!(secrecy_capacity(2.0, 2.0), 0.0);
        assert!((secrecy_capacity(3.0, 1.0) - 1.0).abs() < 1e-15);
        assert_eq!(secrecy_capacity(1.0, 3.0), 0.0);
        assert_eq!(secrecy_capacity(0.0, 0.0), 0.0);
    }

    #[test]
    fn ess_select_examples() {
        let h: Vec<Complex64> = [0.1, 0.9, 0.5, 0.9].iter().map(|&x| Complex64::new(x, 0.0)).collect();
        assert_eq!(ess_select(&h, 2).unwrap(), vec![1, 3]);
        let mut all = ess_select(&h, 4).unwrap();
        all.sort();
        assert_eq!(all, vec![0, 1, 2, 3]);
        assert!(ess_select(&h, 0).is_err());
        assert!(ess_select(&h, 5).is_err());
    }

    #[test]
    fn selector_registry() {
        let reg = SelectorRegistry::default();
        assert_eq!(reg.names(), vec!["ess", "random"]);
        assert!(matches!(reg.get("nope"), Err(Error::UnknownStrategy { .. })));
        let mut rng = StreamRng::new(1, 1);
        let h = sample_user_channel(30, 1.0, &mut rng);
        let ess = reg.get("ess").unwrap().select(&h, 7, &mut rng).unwrap();
        assert_eq!(ess, ess_select(&h, 7).unwrap());
        let mut rnd = reg.get("random").unwrap().select(&h, 30, &mut rng).unwrap();
        rnd.sort();
        assert_eq!(rnd, (0..30).collect::<Vec<_>>());
        assert!(reg.get("random").unwrap().select(&h, 31, &mut rng).is_err());
    }
}
