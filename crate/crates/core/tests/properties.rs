use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use irs_secrecy::analytics::meijerg::meijer_g_scaled;
use irs_secrecy::analytics::{
    bob_snr_params, eve_snr_params, sop_exact, sop_lower_bound, sop_series_meijerg, ExpParams, GammaParams,
};
use irs_secrecy::channel::{evolve_channel, SystemParams};
use irs_secrecy::rng::StreamRng;
use irs_secrecy::specfun::ln_gamma;
use irs_secrecy::transceiver::{ess_select, irs_optimal_phases, secrecy_capacity, CsiKind};

fn channel(len: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0).prop_map(|(r, i)| Complex64::new(r, i)), len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn ess_selects_the_strongest(h in (1usize..60).prop_flat_map(channel), frac in 0.0f64..1.0) {
        let k = 1 + ((h.len() - 1) as f64 * frac) as usize;
        let sel = ess_select(&h, k).unwrap();
        prop_assert_eq!(sel.len(), k);
        let mut seen = vec![false; h.len()];
        for &i in &sel {
            prop_assert!(!seen[i]);
            seen[i] = true;
        }
        let weakest_in = sel.iter().map(|&i| h[i].norm()).fold(f64::INFINITY, f64::min);
        let strongest_out = (0..h.len()).filter(|i| !seen[*i]).map(|i| h[i].norm()).fold(0.0, f64::max);
        prop_assert!(weakest_in >= strongest_out);
    }

    #[test]
    fn ess_is_permutation_equivariant(h in (2usize..40).prop_flat_map(channel), seed in any::<u64>(), frac in 0.0f64..1.0) {
        use rand::seq::SliceRandom;
        let n = h.len();
        let k = 1 + ((n - 1) as f64 * frac) as usize;
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut StreamRng::new(seed, 0));
        // permuted[i] = h[perm[i]]
        let permuted: Vec<Complex64> = perm.iter().map(|&j| h[j]).collect();
        let mut direct: Vec<usize> = ess_select(&h, k).unwrap();
        let mut mapped: Vec<usize> = ess_select(&permuted, k).unwrap().into_iter().map(|i| perm[i]).collect();
        direct.sort();
        mapped.sort();
        prop_assert_eq!(direct, mapped);
    }

    #[test]
    fn optimal_phases_make_every_path_real(h in (1usize..50).prop_flat_map(channel), angles in prop::collection::vec(-PI..PI, 50)) {
        let b: Vec<Complex64> = angles[..h.len()].iter().map(|&a| Complex64::from_polar(1.0, a)).collect();
        let phases = irs_optimal_phases(&h, &b).unwrap();
        for n in 0..h.len() {
            let path = h[n].conj() * Complex64::from_polar(1.0, -phases[n]) * b[n];
            prop_assert!((path.re - h[n].norm()).abs() < 1e-12);
            prop_assert!(path.im.abs() < 1e-12);
        }
    }

    #[test]
    fn secrecy_capacity_is_clamped_log_ratio(gb in 0.0f64..1e6, ge in 0.0f64..1e6) {
        let c = secrecy_capacity(gb, ge);
        prop_assert!(c >= 0.0);
        if gb <= ge {
            prop_assert_eq!(c, 0.0);
        } else {
            prop_assert!((c - ((1.0 + gb) / (1.0 + ge)).log2()).abs() < 1e-9);
        }
    }

    #[test]
    fn lower_bound_never_exceeds_exact(shape in 0.5f64..50.0, ratio_log in 0.0f64..4.0, rate in prop::sample::select(vec![1.0, 3.0, 4.0])) {
        let eve = ExpParams::new(1.0).unwrap();
        let bob = GammaParams::new(shape, 10f64.powf(ratio_log) / shape).unwrap();
        let exact = sop_exact(&bob, &eve, rate).unwrap().value();
        let bound = sop_lower_bound(&bob, &eve, rate).unwrap().value();
        prop_assert!(bound <= exact + 1e-12, "bound {} > exact {}", bound, exact);
    }

    #[test]
    fn sop_exact_monotone(shape in 0.5f64..40.0, scale in 0.01f64..100.0, lambda in 0.01f64..100.0, rate in 0.0f64..4.0) {
        let bob = GammaParams::new(shape, scale).unwrap();
        let eve = ExpParams::new(lambda).unwrap();
        let base = sop_exact(&bob, &eve, rate).unwrap().value();
        let slack = 1e-9;
        prop_assert!(sop_exact(&bob, &eve, rate + 0.25).unwrap().value() >= base - slack);
        prop_assert!(sop_exact(&bob, &ExpParams::new(lambda * 1.3).unwrap(), rate).unwrap().value() >= base - slack);
        prop_assert!(sop_exact(&GammaParams::new(shape, scale * 1.3).unwrap(), &eve, rate).unwrap().value() <= base + slack);
    }

    #[test]
    fn series_matches_quadrature_or_refuses(shape in 0.5f64..60.0, scale_log in -1.0f64..4.0, lambda_log in -1.0f64..3.0, rate in 0.0f64..4.0) {
        let bob = GammaParams::new(shape, 10f64.powf(scale_log)).unwrap();
        let eve = ExpParams::new(10f64.powf(lambda_log)).unwrap();
        let exact = sop_exact(&bob, &eve, rate).unwrap().value();
        if let Ok(series) = sop_series_meijerg(&bob, &eve, rate, 200, 1e-8) {
            prop_assert!((series.value() - exact).abs() < 1e-4, "series {} vs exact {}", series, exact);
        }
    }

    #[test]
    fn meijer_kernel_closed_form(shape in 0.2f64..80.0, z_log in -2.0f64..3.0, p in 0usize..15) {
        let z = 10f64.powf(z_log);
        let pf = p as f64;
        let a = [1.0, 1.0 + pf - shape, 1.0 + pf];
        let b = [1.0, pf, 1.0 + pf];
        let ln_scale = ln_gamma(shape) + pf * z.ln() - shape * z.ln_1p();
        match meijer_g_scaled(&a, &b, 2, 2, z, ln_scale) {
            Ok(g) => prop_assert!((g.abs() - 1.0).abs() < 1e-7, "normalised G = {}", g),
            Err(e) => prop_assert!(false, "{}", e),
        }
    }

    #[test]
    fn unit_correlation_collapses_csi_kinds(levels in 1u32..16, n_side in 2usize..12, k_frac in 0.0f64..1.0) {
        let p = SystemParams { rho: 1.0, quantization_levels: levels, irs_columns: n_side, irs_rows: n_side, ..Default::default() };
        let k = 1 + ((p.elements() - 1) as f64 * k_frac) as usize;
        prop_assert_eq!(bob_snr_params(&p, CsiKind::Outdated, Some(k)).unwrap(), bob_snr_params(&p, CsiKind::Perfect, Some(k)).unwrap());
        prop_assert_eq!(eve_snr_params(&p, CsiKind::Outdated, Some(k)).unwrap(), eve_snr_params(&p, CsiKind::Perfect, Some(k)).unwrap());
    }

    #[test]
    fn gamma_mean_is_shape_times_scale(levels in 1u32..16, rho in 0.05f64..1.0, k_frac in 0.0f64..1.0) {
        let p = SystemParams { rho, quantization_levels: levels, ..Default::default() };
        let k = 1 + (99.0 * k_frac) as usize;
        for csi in [CsiKind::Outdated, CsiKind::Perfect] {
            let g = bob_snr_params(&p, csi, Some(k)).unwrap();
            prop_assert!(g.shape > 0.0 && g.scale > 0.0);
            prop_assert!((g.mean() / (g.shape * g.scale) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn evolution_keeps_length_and_identity_at_unit_rho(h in (1usize..30).prop_flat_map(channel), seed in any::<u64>()) {
        let mut rng = StreamRng::new(seed, 0);
        prop_assert_eq!(evolve_channel(&h, 1.0, 2.0, &mut rng).unwrap(), h.clone());
        prop_assert_eq!(evolve_channel(&h, 0.3, 2.0, &mut rng).unwrap().len(), h.len());
    }
}
