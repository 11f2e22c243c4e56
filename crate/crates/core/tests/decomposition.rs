use mfcomp::decomposition::{decompose, family_sweep, DecomposeConfig, Family, ReferenceSource};
use mfcomp::rng::seeded;
use mfcomp::series::{Series, SeriesKind};
use mfcomp::surrogates::{rank_remap, sample_distribution, DistributionSpec, IaaftOptions};
use mfcomp::synthetic::fgn_of_len;

fn config(seed: u64, ensemble: usize) -> DecomposeConfig {
    DecomposeConfig {
        ensemble,
        iaaft: IaaftOptions { max_iter: 300, ..IaaftOptions::default() },
        ..DecomposeConfig::new(seed)
    }
}

fn volatility(values: Vec<f64>) -> Series {
    Series::new(values, SeriesKind::Volatility, "v").unwrap()
}

/// Student-t magnitudes arranged in the rank order of a persistent fGn.
fn long_memory_volatility(n: usize, seed: u64) -> Vec<f64> {
    let order = fgn_of_len(0.8, n, &mut seeded(seed)).unwrap().values;
    rank_remap(&order, &DistributionSpec::StudentAbs { gamma: 3.0 }, &mut seeded(seed + 1)).unwrap()
}

#[test]
fn iid_input_has_no_effective_or_pdf_width() {
    let v = sample_distribution(&DistributionSpec::StudentAbs { gamma: 3.0 }, 1 << 13, &mut seeded(1)).unwrap();
    let r = decompose(&volatility(v), None, &config(2, 12), None).unwrap();
    assert!(r.is_complete(), "{:?}", r.failures);
    let eff = r.delta_alpha_eff.unwrap();
    let pdf = r.delta_alpha_pdf.unwrap();
    assert!(eff.mean.abs() < 2.0 * eff.std, "{eff:?}");
    assert!(pdf.mean.abs() < 2.0 * pdf.std, "{pdf:?}");
    assert_eq!(r.gaussian_reference.source, ReferenceSource::VolatilityFallback);
}

#[test]
fn components_add_up_and_shuffle_leg_is_small() {
    let v = long_memory_volatility(1 << 14, 3);
    let r = decompose(&volatility(v), None, &config(4, 8), None).unwrap();
    let (fse, pdf, nl) = (r.delta_alpha_fse.unwrap(), r.delta_alpha_pdf.unwrap(), r.delta_alpha_nl.unwrap());
    assert!((fse.mean + pdf.mean + nl.mean - r.delta_alpha).abs() < 1e-12);
    let eff = r.delta_alpha_eff.unwrap();
    assert!((eff.mean - (r.delta_alpha - fse.mean)).abs() < 1e-15);
    assert!(r.delta_alpha_sf.unwrap().mean < 0.02);
    assert!(r.delta_alpha_norm_sf.unwrap().mean < 0.02);
    let lm = r.lm_iaaft.unwrap();
    assert!(lm.mean_iterations >= 1.0 && lm.converged <= 8);
}

#[test]
fn report_is_reproducible_and_roundtrips() {
    let v = long_memory_volatility(1 << 12, 5);
    let cfg = config(6, 4);
    let a = decompose(&volatility(v.clone()), None, &cfg, None).unwrap();
    let b = decompose(&volatility(v), None, &cfg, None).unwrap();
    let json = serde_json::to_string(&a).unwrap();
    assert_eq!(json, serde_json::to_string(&b).unwrap());
    let back: mfcomp::ComponentReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back, a);
}

#[test]
fn returns_set_the_gaussian_reference() {
    let v = long_memory_volatility(1 << 12, 7);
    let returns = Series::new(vec![0.01, -0.02, 0.005, 0.0], SeriesKind::Return, "r").unwrap();
    let r = decompose(&volatility(v), Some(&returns), &config(8, 2), None).unwrap();
    assert_eq!(r.gaussian_reference.source, ReferenceSource::Returns);
    assert!((r.gaussian_reference.mu + 0.00125).abs() < 1e-15);
}

#[test]
fn rejects_non_positive_kind() {
    let r = Series::new(vec![0.1, -0.1], SeriesKind::Return, "r").unwrap();
    assert!(decompose(&r, None, &config(1, 2), None).is_err());
}

#[test]
fn student_sweep_width_decreases_with_tail_exponent() {
    let v = long_memory_volatility(1 << 14, 9);
    let table = family_sweep(&volatility(v), None, Family::Student, &[3.0, 6.0, 10.0], &config(10, 6)).unwrap();
    let widths: Vec<_> = table.points.iter().map(|p| p.delta_alpha.unwrap()).collect();
    for w in widths.windows(2) {
        assert!(w[1].mean < w[0].mean + w[0].std.hypot(w[1].std), "{widths:?}");
    }
    assert!(widths[2].mean < widths[0].mean);
    for p in &table.points {
        assert!(p.delta_alpha_sf.unwrap().mean < 0.02);
    }
    assert_eq!(table.to_csv().lines().count(), 4);
}

#[test]
fn sweep_rejects_invalid_grid() {
    let v = long_memory_volatility(1 << 10, 11);
    assert!(family_sweep(&volatility(v), None, Family::Weibull, &[1.5], &config(1, 2)).is_err());
}

#[test]
fn pdf_component_is_not_the_shuffle_difference() {
    let q = mfcomp::analysis::default_q_grid();
    let spec = mfcomp::synthetic::CascadeSpec { p: 0.3, depth: 14 };
    let cascade =
        mfcomp::synthetic::binomial_cascade(&spec, mfcomp::synthetic::Branching::Random, &q, Some(&mut seeded(12)))
            .unwrap();
    let r = decompose(&volatility(cascade.masses), None, &config(13, 12), None).unwrap();
    let (pdf, proxy) = (r.delta_alpha_pdf.unwrap(), r.shuffle_difference.unwrap());
    assert!((pdf.mean - proxy.mean).abs() > 3.0 * pdf.stderr().hypot(proxy.stderr()), "{pdf:?} vs {proxy:?}");
}
