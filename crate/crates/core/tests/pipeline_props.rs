use lumispec_core::optics::{OpticalConfig, WavelengthGrid};
use lumispec_core::spectrum::{FAD_BAND_NM, NADH_BAND_NM};
use lumispec_core::{
    band_ratio, normalize_above_cutoff, run_pipeline, smooth_window2, synthesize_spectrum,
    trapz_band, PipelineConfig, SimRng, Spectrum,
};
use proptest::prelude::*;
use statrs::function::erf::erf;

/// ∫ exp(-(x-c)²/(2σ²)) dx over [a, b].
fn gaussian_integral(center: f64, sigma: f64, a: f64, b: f64) -> f64 {
    let k = sigma * std::f64::consts::SQRT_2;
    sigma * (std::f64::consts::PI / 2.0).sqrt() * (erf((b - center) / k) - erf((a - center) / k))
}

fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    WavelengthGrid::new(lo, hi, step).unwrap().wavelengths()
}

fn gaussian_spectrum(center: f64, sigma: f64, step: f64) -> Spectrum {
    let w = grid(400.0, 800.0, step);
    let i = w
        .iter()
        .map(|x| (-(x - center).powi(2) / (2.0 * sigma * sigma)).exp())
        .collect();
    Spectrum::new(w, i).unwrap()
}

#[test]
fn erf_oracle_reference_value() {
    let exact = gaussian_integral(525.0, 30.0, 450.0, 750.0);
    assert!((exact - 74.731_888_558_48).abs() < 1e-9);
}

#[test]
fn trapezoid_matches_gaussian_integral_and_converges() {
    let exact = gaussian_integral(525.0, 30.0, 450.0, 750.0);
    let coarse = trapz_band(&gaussian_spectrum(525.0, 30.0, 0.5), 450.0, 750.0).unwrap();
    let fine = trapz_band(&gaussian_spectrum(525.0, 30.0, 0.1), 450.0, 750.0).unwrap();
    let e_coarse = ((coarse - exact) / exact).abs();
    let e_fine = ((fine - exact) / exact).abs();
    assert!(e_coarse <= 1e-3, "0.5 nm error {e_coarse}");
    assert!(e_fine <= 4e-5, "0.1 nm error {e_fine}");
    let ratio = e_coarse / e_fine;
    assert!((ratio - 25.0).abs() <= 0.3 * 25.0, "error ratio {ratio}");
}

#[test]
fn nadh_band_ratio_matches_analytic_bands() {
    let s = gaussian_spectrum(460.0, 30.0, 0.1);
    let expected =
        gaussian_integral(460.0, 30.0, 450.0, 500.0) / gaussian_integral(460.0, 30.0, 500.0, 570.0);
    // 5.921146 from the erf oracle
    assert!((expected - 5.921_146).abs() < 1e-6);
    let got = band_ratio(&s, NADH_BAND_NM, FAD_BAND_NM).unwrap();
    assert!(((got - expected) / expected).abs() < 1e-4);
}

/// Straight-line re-implementation of normalize, smooth and integrate.
fn scripted_pipeline(w: &[f64], x: &[f64]) -> f64 {
    let mut max = f64::MIN;
    for k in 0..w.len() {
        if w[k] > 450.0 && x[k] > max {
            max = x[k];
        }
    }
    let n = x.len();
    let mut y = vec![0.0; n];
    for k in 0..n {
        let v = x[k] / max;
        y[k] = if k + 1 < n {
            (v + x[k + 1] / max) / 2.0
        } else {
            v
        };
    }
    let mut area = 0.0;
    for k in 0..n - 1 {
        if w[k] >= 450.0 && w[k + 1] <= 750.0 {
            area += (w[k + 1] - w[k]) * (y[k] + y[k + 1]) / 2.0;
        }
    }
    area
}

#[test]
fn pipeline_matches_scripted_recomputation() {
    let s = synthesize_spectrum(&OpticalConfig::noiseless(), 0.0, &mut SimRng::new(0)).unwrap();
    let got = run_pipeline(&s, &PipelineConfig::default()).unwrap();
    let expected = scripted_pipeline(s.wavelengths_nm(), s.intensities());
    assert!(got > 0.0);
    assert!(
        ((got - expected) / expected).abs() < 1e-12,
        "{got} vs {expected}"
    );
}

fn arb_spectrum() -> impl Strategy<Value = Spectrum> {
    (2usize..300, 0.05f64..3.0)
        .prop_flat_map(|(n, step)| {
            (
                Just(step),
                prop::collection::vec(-1.0f64..10.0, n.max(2)),
                0usize..n.max(2),
            )
        })
        .prop_map(|(step, mut values, peak)| {
            let n = values.len();
            // guarantee a positive maximum above the cutoff
            values[peak] = 20.0;
            let lo = 451.0 - step * peak as f64;
            let w: Vec<f64> = (0..n).map(|i| lo + i as f64 * step).collect();
            Spectrum::new(w, values).unwrap()
        })
}

fn total_variation(v: &[f64]) -> f64 {
    v.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

proptest! {
    #[test]
    fn pipeline_is_scale_invariant(s in arb_spectrum(), log_c in -6.0f64..6.0) {
        let c = 10f64.powf(log_c);
        let w = s.wavelengths_nm();
        let cfg = PipelineConfig {
            auc_lo_nm: w[0],
            auc_hi_nm: w[w.len() - 1],
            ..Default::default()
        };
        let a = run_pipeline(&s, &cfg).unwrap();
        let b = run_pipeline(&s.scaled(c).unwrap(), &cfg).unwrap();
        // relative to the area of |signal| so sign cancellation cannot blow it up
        let mass = trapz_band(&s.with_intensities(s.intensities().iter().map(|v| v.abs()).collect()).unwrap(), cfg.auc_lo_nm, cfg.auc_hi_nm).unwrap() / 20.0;
        prop_assert!((a - b).abs() <= 1e-12 * mass.max(a.abs()), "{} vs {}", a, b);
    }

    #[test]
    fn normalization_fixed_point(s in arb_spectrum()) {
        let n = normalize_above_cutoff(&s, 450.0).unwrap();
        let max = n.iter().filter(|(w, _)| *w > 450.0).map(|(_, i)| i).fold(f64::MIN, f64::max);
        prop_assert_eq!(max, 1.0);
        prop_assert_eq!(normalize_above_cutoff(&n, 450.0).unwrap(), n);
    }

    #[test]
    fn smoothing_never_adds_variation(s in arb_spectrum()) {
        let y = smooth_window2(&s);
        prop_assert_eq!(y.len(), s.len());
        prop_assert!(total_variation(y.intensities()) <= total_variation(s.intensities()) + 1e-12);
    }

    #[test]
    fn smoothing_keeps_constants(c in -5.0f64..5.0, n in 2usize..100) {
        let w: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let s = Spectrum::new(w, vec![c; n]).unwrap();
        let y = smooth_window2(&s);
        prop_assert_eq!(y.intensities(), s.intensities());
    }

    #[test]
    fn trapezoid_is_additive(s in arb_spectrum(), cut in 0.1f64..0.9) {
        let w = s.wavelengths_nm();
        let n = w.len();
        prop_assume!(n >= 3);
        let mid = ((n - 1) as f64 * cut).round().clamp(1.0, (n - 2) as f64) as usize;
        let (a, b, c) = (w[0], w[mid], w[n - 1]);
        let whole = trapz_band(&s, a, c).unwrap();
        let parts = trapz_band(&s, a, b).unwrap() + trapz_band(&s, b, c).unwrap();
        let scale = s.intensities().iter().map(|v| v.abs()).sum::<f64>() * (c - a);
        prop_assert!((whole - parts).abs() <= 1e-12 * scale.max(1.0));
    }
}
