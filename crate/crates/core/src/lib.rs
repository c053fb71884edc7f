//! Secrecy-outage analysis for a BS-side intelligent reflecting surface (IRS)
//! serving a legitimate user ("Bob") in the presence of a passive eavesdropper
//! ("Eve"), when the BS only holds outdated IRS-user channel state.
//!
//! The crate is split along the processing chain:
//!
//! * [`specfun`]: scalar special functions (gamma family, Bessel `J0`, sinc).
//! * [`channel`]: system parameters, steering vectors and random channel draws.
//! * [`transceiver`]: IRS phase design, MRT beamforming, element subset
//!   selection (ESS) and instantaneous SNRs.
//! * [`analytics`]: Gamma/exponential SNR laws, order statistics, the secrecy
//!   outage probability (quadrature, Meijer-G series, lower bound) and the
//!   optimal ESS size.
//! * [`mc`]: reproducible, parallel Monte-Carlo estimation.
//!
//! Interchangeable algorithms (SOP evaluators, element selectors) sit behind
//! traits and are looked up by name through small registries, see
//! [`analytics::SopRegistry`] and [`transceiver::SelectorRegistry`].

pub mod analytics;
pub mod channel;
mod error;
pub mod mc;
pub mod rng;
pub mod specfun;
pub mod transceiver;

pub use error::{Error, Result};
pub use specfun::Probability;
