//! Three interactive operations for the static demo page. Each returns a
//! JSON document; the page plots it on a canvas.

use mfcomp::analysis::{analyze, default_q_grid, delta_alpha, AnalysisConfig, IntervalRule, ScaleGrid};
use mfcomp::ensemble::Estimate;
use mfcomp::fse::closed_form_fse;
use mfcomp::rng::{derive_seed, derived};
use mfcomp::surrogates::{
    amplitude_target, iaaft, linear_memory_surrogate, rank_remap, sample_distribution, shuffle, DistributionSpec,
    IaaftOptions,
};
use mfcomp::synthetic::{binomial_cascade, cascade_tau, fgn_of_len, Branching, CascadeSpec};
use mfcomp::Result;
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Browser runs cap IAAFT well below the library default.
const DEMO_IAAFT: IaaftOptions = IaaftOptions {
    max_iter: 200,
    start: mfcomp::surrogates::IaaftStart::Shuffled,
};

#[derive(Debug, Serialize)]
pub struct CascadeDemo {
    pub q: Vec<f64>,
    pub tau: Vec<f64>,
    pub tau_analytic: Vec<f64>,
    pub alpha: Vec<f64>,
    pub f: Vec<f64>,
    pub alpha_analytic: Vec<f64>,
    pub f_analytic: Vec<f64>,
    pub delta_alpha: f64,
    pub delta_alpha_analytic: f64,
}

pub fn cascade_demo(p: f64, depth: u32, seed: u64) -> Result<CascadeDemo> {
    let q = default_q_grid();
    let cascade = binomial_cascade(&CascadeSpec { p, depth }, Branching::Alternating, &q, None)?;
    let n = cascade.masses.len();
    let cfg = AnalysisConfig {
        scales: ScaleGrid::LogSpaced { min: 2, max: n / 4, points: 30 },
        intervals: IntervalRule::PerStart { factor: 2.0 },
        ..AnalysisConfig::default()
    }
    .with_seed(seed);
    let a = analyze(&cascade.masses, &cfg)?;
    let h = 1e-4;
    let alpha_analytic: Vec<f64> = q
        .iter()
        .map(|&x| (cascade_tau(p, x + h) - cascade_tau(p, x - h)) / (2.0 * h))
        .collect();
    let f_analytic = q
        .iter()
        .zip(&alpha_analytic)
        .zip(&cascade.tau_analytic)
        .map(|((x, al), t)| x * al - t)
        .collect();
    let delta_alpha_analytic = alpha_analytic[0] - alpha_analytic[q.len() - 1];
    Ok(CascadeDemo {
        q,
        tau: a.spectrum.tau,
        tau_analytic: cascade.tau_analytic,
        alpha: a.spectrum.alpha,
        f: a.spectrum.f,
        alpha_analytic,
        f_analytic,
        delta_alpha: a.spectrum.delta_alpha,
        delta_alpha_analytic,
    })
}

#[derive(Debug, Serialize)]
pub struct Leg {
    pub widths: Vec<f64>,
    pub estimate: Option<Estimate>,
}

impl Leg {
    fn new(widths: Vec<f64>) -> Self {
        let estimate = Estimate::from_samples(&widths, 0);
        Self { widths, estimate }
    }
}

#[derive(Debug, Serialize)]
pub struct SurrogateDemo {
    pub series: Vec<f64>,
    pub delta_alpha: f64,
    pub alpha: Vec<f64>,
    pub f: Vec<f64>,
    pub linear_memory: Leg,
    pub shuffled: Leg,
}

/// Student-t magnitudes (`gamma`) in the rank order of an fGn with index
/// `hurst`, its width, and the widths of its LM and shuffled surrogates.
pub fn surrogate_demo(hurst: f64, gamma: f64, len: usize, ensemble: usize, seed: u64) -> Result<SurrogateDemo> {
    let order = fgn_of_len(hurst, len, &mut derived(seed, &[0]))?;
    let series = rank_remap(&order.values, &DistributionSpec::StudentAbs { gamma }, &mut derived(seed, &[1]))?;
    let cfg = AnalysisConfig::default().with_seed(derive_seed(seed, &[2]));
    let a = analyze(&series, &cfg)?;
    let mut lm = Vec::with_capacity(ensemble);
    let mut sf = Vec::with_capacity(ensemble);
    for k in 0..ensemble as u64 {
        let (s, _) = linear_memory_surrogate(&series, &mut derived(seed, &[3, k]), DEMO_IAAFT)?;
        lm.push(delta_alpha(&s, &cfg)?);
        sf.push(delta_alpha(&shuffle(&series, &mut derived(seed, &[4, k])), &cfg)?);
    }
    Ok(SurrogateDemo {
        series,
        delta_alpha: a.spectrum.delta_alpha,
        alpha: a.spectrum.alpha,
        f: a.spectrum.f,
        linear_memory: Leg::new(lm),
        shuffled: Leg::new(sf),
    })
}

#[derive(Debug, Serialize)]
pub struct FseDemo {
    pub hurst: f64,
    pub lengths: Vec<usize>,
    pub measured: Vec<Estimate>,
    pub closed_form: Vec<f64>,
}

/// Width of exponential-valued IAAFT surrogates with fGn spectra against `L`,
/// next to the closed-form finite-size law.
pub fn fse_demo(hurst: f64, max_log2: u32, ensemble: usize, seed: u64) -> Result<FseDemo> {
    let lengths: Vec<usize> = (8..=max_log2.clamp(8, 15)).map(|e| 1usize << e).collect();
    let mut measured = Vec::with_capacity(lengths.len());
    for (j, &l) in lengths.iter().enumerate() {
        let mut widths = Vec::with_capacity(ensemble);
        for k in 0..ensemble as u64 {
            let s = derive_seed(seed, &[j as u64, k]);
            let values = sample_distribution(&DistributionSpec::Weibull { beta: 1.0 }, l, &mut derived(s, &[0]))?;
            let fgn = fgn_of_len(hurst, l, &mut derived(s, &[1]))?;
            let target = amplitude_target(&values, &fgn.values)?;
            let (x, _) = iaaft(&values, &target, &mut derived(s, &[2]), DEMO_IAAFT)?;
            widths.push(delta_alpha(&x, &AnalysisConfig::default().with_seed(derive_seed(s, &[3])))?);
        }
        measured.push(Estimate::from_samples(&widths, 0).expect("ensemble is non-empty"));
    }
    Ok(FseDemo {
        hurst,
        closed_form: lengths.iter().map(|&l| closed_form_fse(hurst, l as f64)).collect(),
        lengths,
        measured,
    })
}

fn to_js<T: Serialize>(r: Result<T>) -> std::result::Result<String, JsError> {
    let value = r.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&value).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = cascadeSpectrum)]
pub fn cascade_spectrum(p: f64, depth: u32, seed: u64) -> std::result::Result<String, JsError> {
    to_js(cascade_demo(p, depth, seed))
}

#[wasm_bindgen(js_name = surrogateWidths)]
pub fn surrogate_widths(hurst: f64, gamma: f64, len: usize, ensemble: usize, seed: u64) -> std::result::Result<String, JsError> {
    if ensemble == 0 {
        return Err(JsError::new("ensemble must be positive"));
    }
    to_js(surrogate_demo(hurst, gamma, len, ensemble, seed))
}

#[wasm_bindgen(js_name = fseCurve)]
pub fn fse_curve(hurst: f64, max_log2: u32, ensemble: usize, seed: u64) -> std::result::Result<String, JsError> {
    if ensemble == 0 {
        return Err(JsError::new("ensemble must be positive"));
    }
    to_js(fse_demo(hurst, max_log2, ensemble, seed))
}
