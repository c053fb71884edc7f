//! Channel model: the deterministic, rank-one BS-IRS link and the random
//! IRS-user channels with outdated-CSI evolution and IRS phase errors.
//!
//! Element indices are zero based throughout; element `n` of an `N_H x N_V`
//! surface sits at column `n mod N_H` and row `n / N_H`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::Serialize;

use crate::specfun::bessel_j0;
use crate::{Error, Result};

/// Distance-dependent path loss `C d^-α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathLoss {
    /// Linear intercept `C`.
    pub intercept: f64,
    pub exponent: f64,
    /// Metres.
    pub distance: f64,
}

impl PathLoss {
    pub fn gain(&self) -> f64 {
        self.intercept * self.distance.powf(-self.exponent)
    }
}

/// Linear path-loss gain `C d^-α`.
pub fn path_loss(intercept: f64, distance: f64, exponent: f64) -> Result<f64> {
    if !(intercept > 0.0) {
        return Err(Error::invalid("C", intercept, "path-loss intercept must be > 0"));
    }
    if !(distance > 0.0) {
        return Err(Error::invalid("d", distance, "distance must be > 0"));
    }
    Ok(intercept * distance.powf(-exponent))
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Every physical constant of the link. All quantities are linear (watts,
/// metres, radians); dB conversion happens at the configuration boundary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemParams {
    /// `M`, BS antennas.
    pub bs_antennas: usize,
    /// `N_H`, IRS elements per row.
    pub irs_columns: usize,
    /// `N_V`, IRS rows.
    pub irs_rows: usize,
    /// `L`, phase quantisation levels; the phase error is uniform on `[-π/L, π/L]`.
    pub quantization_levels: u32,
    /// Transmit power `P` (W).
    pub tx_power: f64,
    /// Receiver noise power at Bob (W).
    pub noise_bob: f64,
    /// Receiver noise power at Eve (W).
    pub noise_eve: f64,
    /// Outdated-CSI correlation `ρ`.
    pub rho: f64,
    /// Target secrecy rate `R_s` (bit/s/Hz).
    pub secrecy_rate: f64,
    pub aod_azimuth: f64,
    pub aod_elevation: f64,
    pub aoa_azimuth: f64,
    pub aoa_elevation: f64,
    /// Antenna and element spacings in wavelengths.
    pub spacing_bs: f64,
    pub spacing_h: f64,
    pub spacing_v: f64,
    pub bs_irs: PathLoss,
    /// Shared by Bob and Eve, who sit at the same distance from the IRS.
    pub irs_user: PathLoss,
}

impl Default for SystemParams {
    fn default() -> Self {
        SystemParams {
            bs_antennas: 4,
            irs_columns: 10,
            irs_rows: 10,
            quantization_levels: 4,
            tx_power: dbm_to_watts(5.0),
            noise_bob: dbm_to_watts(-120.0),
            noise_eve: dbm_to_watts(-120.0),
            rho: 0.9,
            secrecy_rate: 3.0,
            aod_azimuth: PI / 4.0,
            aod_elevation: PI / 3.0,
            aoa_azimuth: PI / 4.0,
            aoa_elevation: PI / 3.0,
            spacing_bs: 0.5,
            spacing_h: 0.5,
            spacing_v: 0.5,
            bs_irs: PathLoss { intercept: db_to_linear(-26.0), exponent: 2.2, distance: 10.0 },
            irs_user: PathLoss { intercept: db_to_linear(-28.0), exponent: 3.67, distance: 80.0 },
        }
    }
}

impl SystemParams {
    /// `N = N_H N_V`.
    pub fn elements(&self) -> usize {
        self.irs_columns * self.irs_rows
    }

    /// `β_H`.
    pub fn beta_h(&self) -> f64 {
        self.bs_irs.gain()
    }

    /// `β_B`.
    pub fn beta_bob(&self) -> f64 {
        self.irs_user.gain()
    }

    /// `β_E`.
    pub fn beta_eve(&self) -> f64 {
        self.irs_user.gain()
    }

    /// Copy with an `N`-element surface, square when `N` is a perfect square
    /// and a single row otherwise.
    pub fn with_elements(&self, n: usize) -> Self {
        let side = (n as f64).sqrt().round() as usize;
        let (cols, rows) = if side * side == n { (side, side) } else { (n, 1) };
        SystemParams { irs_columns: cols, irs_rows: rows, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.bs_antennas < 1 {
            return Err(Error::invalid("M", self.bs_antennas, "need at least one BS antenna"));
        }
        if self.irs_columns < 1 {
            return Err(Error::invalid("N_H", self.irs_columns, "must be >= 1"));
        }
        if self.irs_rows < 1 {
            return Err(Error::invalid("N_V", self.irs_rows, "must be >= 1"));
        }
        if self.quantization_levels < 1 {
            return Err(Error::invalid("L", self.quantization_levels, "must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::invalid("rho", self.rho, "must lie in [0, 1]"));
        }
        if !(self.secrecy_rate >= 0.0) || !self.secrecy_rate.is_finite() {
            return Err(Error::invalid("Rs", self.secrecy_rate, "must be finite and >= 0"));
        }
        let positive = [
            ("P", self.tx_power),
            ("sigma2_B", self.noise_bob),
            ("sigma2_E", self.noise_eve),
            ("spacing_bs", self.spacing_bs),
            ("spacing_h", self.spacing_h),
            ("spacing_v", self.spacing_v),
            ("C1", self.bs_irs.intercept),
            ("d1", self.bs_irs.distance),
            ("C2", self.irs_user.intercept),
            ("d2", self.irs_user.distance),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(name, v, "must be finite and > 0"));
            }
        }
        let finite = [
            ("alpha1", self.bs_irs.exponent),
            ("alpha2", self.irs_user.exponent),
            ("phi1", self.aod_azimuth),
            ("theta1", self.aod_elevation),
            ("phi2", self.aoa_azimuth),
            ("theta2", self.aoa_elevation),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(Error::invalid(name, v, "must be finite"));
            }
        }
        Ok(())
    }
}

/// BS steering vector, `a_m = exp(j 2π d_BS m sin φ1 sin θ1)`.
pub fn steering_bs(params: &SystemParams) -> Vec<Complex64> {
    let step = 2.0 * PI * params.spacing_bs * params.aod_azimuth.sin() * params.aod_elevation.sin();
    (0..params.bs_antennas).map(|m| Complex64::from_polar(1.0, step * m as f64)).collect()
}

/// Column and row `(k, l)` of element `n` on a surface with `columns` elements per row.
pub fn irs_element_index(n: usize, columns: usize) -> (usize, usize) {
    (n % columns, n / columns)
}

/// IRS steering vector, `b_n = exp(j 2π (k d_H cos θ2 sin φ2 + l d_V sin θ2))`.
pub fn steering_irs(params: &SystemParams) -> Vec<Complex64> {
    let h_step = 2.0 * PI * params.spacing_h * params.aoa_elevation.cos() * params.aoa_azimuth.sin();
    let v_step = 2.0 * PI * params.spacing_v * params.aoa_elevation.sin();
    (0..params.elements())
        .map(|n| {
            let (k, l) = irs_element_index(n, params.irs_columns);
            Complex64::from_polar(1.0, k as f64 * h_step + l as f64 * v_step)
        })
        .collect()
}

/// The BS-IRS channel `H = sqrt(β_H) a b^H`, kept in factored form.
#[derive(Debug, Clone, PartialEq)]
pub struct BsIrsChannel {
    pub bs_steering: Vec<Complex64>,
    pub irs_steering: Vec<Complex64>,
    pub beta_h: f64,
}

impl BsIrsChannel {
    pub fn new(params: &SystemParams) -> Self {
        BsIrsChannel { bs_steering: steering_bs(params), irs_steering: steering_irs(params), beta_h: params.beta_h() }
    }

    /// Row-major dense `M x N` matrix. Only meant for cross-checks.
    pub fn dense(&self) -> Vec<Vec<Complex64>> {
        let scale = self.beta_h.sqrt();
        self.bs_steering.iter().map(|a| self.irs_steering.iter().map(|b| a * b.conj() * scale).collect()).collect()
    }
}

/// Circularly-symmetric `CN(0, β I_N)` draw.
pub fn sample_user_channel<R: Rng + ?Sized>(n: usize, beta: f64, rng: &mut R) -> Vec<Complex64> {
    let sd = (0.5 * beta).sqrt();
    (0..n)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(re * sd, im * sd)
        })
        .collect()
}

/// `ρ ĥ + e` with `e ~ CN(0, (1-ρ²) β I)`.
///
/// The error vector is always drawn, even for `ρ = 1`, so that streams stay
/// aligned across correlation values. At `ρ = 1` the result equals `h_hat`.
pub fn evolve_channel<R: Rng + ?Sized>(
    h_hat: &[Complex64],
    rho: f64,
    beta: f64,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::invalid("rho", rho, "must lie in [0, 1]"));
    }
    let err = sample_user_channel(h_hat.len(), (1.0 - rho * rho) * beta, rng);
    Ok(h_hat.iter().zip(err).map(|(h, e)| h * rho + e).collect())
}

/// Jakes correlation `J0(2π f_d T_d)`, clamped to `[0, 1]`.
///
/// `J0` turns negative past `f_d T_d ≈ 0.383`; such delays are reported as
/// fully decorrelated (`ρ = 0`).
pub fn rho_from_doppler(fd_td: f64) -> Result<f64> {
    if !(fd_td >= 0.0) || !fd_td.is_finite() {
        return Err(Error::invalid("fd_Td", fd_td, "normalised Doppler must be finite and >= 0"));
    }
    Ok(bessel_j0(2.0 * PI * fd_td).clamp(0.0, 1.0))
}

/// IRS phase errors, i.i.d. uniform on `[-π/L, π/L]`.
pub fn sample_phase_errors<R: Rng + ?Sized>(n: usize, levels: u32, rng: &mut R) -> Result<Vec<f64>> {
    if levels == 0 {
        return Err(Error::invalid("L", levels, "must be >= 1"));
    }
    let half_width = PI / levels as f64;
    let dist = Uniform::new_inclusive(-half_width, half_width).map_err(|e| Error::Numerical(e.to_string()))?;
    Ok((0..n).map(|_| dist.sample(rng)).collect())
}

/// One Monte-Carlo draw of everything random in the link.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub link: Arc<BsIrsChannel>,
    pub beta_bob: f64,
    pub beta_eve: f64,
    /// `ĥ_B`, the CSI the BS designs with.
    pub h_bob_outdated: Vec<Complex64>,
    /// `h_B = ρ ĥ_B + e_B`.
    pub h_bob: Vec<Complex64>,
    pub h_eve_outdated: Vec<Complex64>,
    pub h_eve: Vec<Complex64>,
    /// `Δφ`.
    pub phase_errors: Vec<f64>,
}

impl ChannelRealization {
    /// Draws in a fixed order: `ĥ_B`, `e_B`, `ĥ_E`, `e_E`, `Δφ`.
    pub fn draw<R: Rng + ?Sized>(params: &SystemParams, link: &Arc<BsIrsChannel>, rng: &mut R) -> Result<Self> {
        let n = params.elements();
        let beta_bob = params.beta_bob();
        let beta_eve = params.beta_eve();
        let h_bob_outdated = sample_user_channel(n, beta_bob, rng);
        let h_bob = evolve_channel(&h_bob_outdated, params.rho, beta_bob, rng)?;
        let h_eve_outdated = sample_user_channel(n, beta_eve, rng);
        let h_eve = evolve_channel(&h_eve_outdated, params.rho, beta_eve, rng)?;
        let phase_errors = sample_phase_errors(n, params.quantization_levels, rng)?;
        Ok(ChannelRealization {
            link: Arc::clone(link),
            beta_bob,
            beta_eve,
            h_bob_outdated,
            h_bob,
            h_eve_outdated,
            h_eve,
            phase_errors,
        })
    }

    pub fn elements(&self) -> usize {
        self.h_bob_outdated.len()
    }
}
