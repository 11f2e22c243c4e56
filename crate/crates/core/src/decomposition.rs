//! Splits the apparent singularity width into finite-size/linear-memory,
//! PDF and nonlinearity components against a Gaussian reference.

use serde::{Deserialize, Serialize};

use crate::analysis::{delta_alpha, AnalysisConfig};
use crate::ensemble::{run_members, Estimate};
use crate::error::{Error, Result};
use crate::fse::{fse_predict, FsePrediction, FseSource, FseTable};
use crate::rng::{derive_seed, derived};
use crate::series::{Series, SeriesKind};
use crate::stats::mean_std;
use crate::surrogates::{linear_memory_surrogate, rank_remap, shuffle, DistributionSpec, IaaftOptions};
use crate::synthetic::{estimate_hurst, MIN_HURST_LEN};

pub const REPORT_SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_ENSEMBLE: usize = 100;

/// Seed-path roots under the master seed.
pub mod legs {
    pub const ORIGINAL: u64 = 0;
    pub const LM: u64 = 1;
    pub const SF: u64 = 2;
    pub const NORM: u64 = 3;
    pub const SWEEP: u64 = 6;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecomposeConfig {
    pub analysis: AnalysisConfig,
    pub ensemble: usize,
    pub seed: u64,
    pub iaaft: IaaftOptions,
    /// Overrides the `(mu, sigma)` of the Gaussian reference.
    #[serde(default)]
    pub gaussian_reference: Option<(f64, f64)>,
}

impl DecomposeConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            analysis: AnalysisConfig::default(),
            ensemble: DEFAULT_ENSEMBLE,
            seed,
            iaaft: IaaftOptions::default(),
            gaussian_reference: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.ensemble == 0 {
            return Err(Error::InvalidParameter("ensemble must be positive".into()));
        }
        self.analysis.validate_q_grid()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceSource {
    Returns,
    /// `mu = 0`, `sigma = sqrt(mean v^2)`: `|r|` of a centred normal with the
    /// same second moment as the volatility.
    VolatilityFallback,
    Given,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianReference {
    pub mu: f64,
    pub sigma: f64,
    pub source: ReferenceSource,
}

impl GaussianReference {
    pub fn spec(&self) -> DistributionSpec {
        DistributionSpec::GaussianAbs {
            mu: self.mu,
            sigma: self.sigma,
        }
    }
}

pub fn gaussian_reference(v: &Series, returns: Option<&Series>, given: Option<(f64, f64)>) -> Result<GaussianReference> {
    let reference = if let Some((mu, sigma)) = given {
        GaussianReference { mu, sigma, source: ReferenceSource::Given }
    } else if let Some(r) = returns {
        let (mu, sigma) = mean_std(r.values());
        GaussianReference { mu, sigma, source: ReferenceSource::Returns }
    } else {
        let v = v.values();
        let sigma = (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt();
        GaussianReference { mu: 0.0, sigma, source: ReferenceSource::VolatilityFallback }
    };
    reference.spec().validate()?;
    Ok(reference)
}

/// Width estimate of one surrogate leg plus IAAFT diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegSummary {
    pub estimate: Option<Estimate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iaaft: Option<IaaftSummary>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IaaftSummary {
    pub converged: usize,
    pub mean_iterations: f64,
    pub mean_spectrum_mismatch: f64,
}

struct MemberOutcome {
    width: f64,
    iaaft: Option<(usize, f64, bool)>,
}

fn summarize(leg: &str, outcomes: Vec<Result<MemberOutcome>>, failures: &mut Vec<String>) -> LegSummary {
    let mut widths = Vec::new();
    let mut reports = Vec::new();
    for (k, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(m) => {
                widths.push(m.width);
                reports.extend(m.iaaft);
            }
            Err(e) => failures.push(format!("{leg} member {k}: {e}")),
        }
    }
    let failed = failures.iter().filter(|f| f.starts_with(&format!("{leg} "))).count();
    let iaaft = (!reports.is_empty()).then(|| {
        let n = reports.len() as f64;
        IaaftSummary {
            converged: reports.iter().filter(|r| r.2).count(),
            mean_iterations: reports.iter().map(|r| r.0 as f64).sum::<f64>() / n,
            mean_spectrum_mismatch: reports.iter().map(|r| r.1).sum::<f64>() / n,
        }
    });
    LegSummary {
        estimate: Estimate::from_samples(&widths, failed),
        iaaft,
    }
}

fn width(values: &[f64], analysis: &AnalysisConfig, seed: u64) -> Result<f64> {
    delta_alpha(values, &analysis.clone().with_seed(seed))
}

fn lm_member(values: &[f64], cfg: &DecomposeConfig, seed: u64) -> Result<MemberOutcome> {
    let (s, report) = linear_memory_surrogate(values, &mut derived(seed, &[0]), cfg.iaaft)?;
    Ok(MemberOutcome {
        width: width(&s, &cfg.analysis, derive_seed(seed, &[1]))?,
        iaaft: Some((report.iterations, report.spectrum_mismatch, report.converged)),
    })
}

fn sf_member(values: &[f64], cfg: &DecomposeConfig, seed: u64) -> Result<MemberOutcome> {
    let s = shuffle(values, &mut derived(seed, &[0]));
    Ok(MemberOutcome {
        width: width(&s, &cfg.analysis, derive_seed(seed, &[1]))?,
        iaaft: None,
    })
}

/// Width, LM and shuffle legs of rank-remapped copies of `v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemappedLegs {
    pub distribution: String,
    pub delta_alpha: LegSummary,
    pub fse: LegSummary,
    pub sf: LegSummary,
}

/// Member `k` remaps `v` with `derive_seed(root, [k, 0])` and runs its three
/// analyses under `[k, 1..]`.
fn remapped_legs(
    v: &[f64],
    spec: &DistributionSpec,
    cfg: &DecomposeConfig,
    root: u64,
    failures: &mut Vec<String>,
    tag: &str,
) -> RemappedLegs {
    type Triple = (Result<MemberOutcome>, Result<MemberOutcome>, Result<MemberOutcome>);
    let members: Vec<Triple> = run_members(cfg.ensemble, |k| {
        let seed = derive_seed(root, &[k as u64]);
        match rank_remap(v, spec, &mut derived(seed, &[0])) {
            Ok(remapped) => (
                width(&remapped, &cfg.analysis, derive_seed(seed, &[1]))
                    .map(|w| MemberOutcome { width: w, iaaft: None }),
                lm_member(&remapped, cfg, derive_seed(seed, &[2])),
                sf_member(&remapped, cfg, derive_seed(seed, &[3])),
            ),
            Err(e) => {
                let msg = e.to_string();
                let fail = || Err(Error::Degenerate(format!("remap failed: {msg}")));
                (fail(), fail(), fail())
            }
        }
    });
    let (mut da, mut lm, mut sf) = (Vec::new(), Vec::new(), Vec::new());
    for (a, b, c) in members {
        da.push(a);
        lm.push(b);
        sf.push(c);
    }
    RemappedLegs {
        distribution: spec.describe(),
        delta_alpha: summarize(tag, da, failures),
        fse: summarize(&format!("{tag}_lm"), lm, failures),
        sf: summarize(&format!("{tag}_sf"), sf, failures),
    }
}

/// Derived components. `nl = norm_eff` and `pdf = eff - norm_eff`, so
/// `fse + pdf + nl` reproduces the apparent width up to rounding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Components {
    pub eff: Estimate,
    pub norm_eff: Estimate,
    pub pdf: Estimate,
    pub nl: Estimate,
}

pub fn assemble(apparent: Estimate, fse: Estimate, norm: Estimate, norm_fse: Estimate) -> Components {
    let eff = apparent.minus(&fse);
    let norm_eff = norm.minus(&norm_fse);
    Components {
        eff,
        norm_eff,
        pdf: eff.minus(&norm_eff),
        nl: norm_eff,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FseCrossCheck {
    pub hurst: f64,
    pub hurst_stderr: f64,
    pub prediction: FsePrediction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentReport {
    pub schema_version: u32,
    pub n: usize,
    pub delta_alpha: f64,
    pub delta_alpha_fse: Option<Estimate>,
    pub delta_alpha_sf: Option<Estimate>,
    pub delta_alpha_eff: Option<Estimate>,
    pub delta_alpha_norm: Option<Estimate>,
    pub delta_alpha_norm_fse: Option<Estimate>,
    pub delta_alpha_norm_sf: Option<Estimate>,
    pub delta_alpha_norm_eff: Option<Estimate>,
    pub delta_alpha_pdf: Option<Estimate>,
    pub delta_alpha_nl: Option<Estimate>,
    /// `sf - norm_sf`, which is not a PDF component estimate.
    pub shuffle_difference: Option<Estimate>,
    pub ensemble_size: usize,
    pub seed: u64,
    pub gaussian_reference: GaussianReference,
    pub lm_iaaft: Option<IaaftSummary>,
    pub norm_lm_iaaft: Option<IaaftSummary>,
    pub fse_cross_check: Option<FseCrossCheck>,
    pub config: DecomposeConfig,
    pub failures: Vec<String>,
}

impl ComponentReport {
    pub fn is_complete(&self) -> bool {
        self.failures.is_empty() && self.delta_alpha_pdf.is_some()
    }
}

fn check_input(v: &Series) -> Result<()> {
    if !v.kind().is_positive() {
        return Err(Error::InvalidParameter(format!(
            "decomposition needs a positive series, got {:?}",
            v.kind()
        )));
    }
    Ok(())
}

/// Full decomposition of a volatility series. `returns` supplies the Gaussian
/// reference parameters; `fse_table` adds a calibrated cross-check of the
/// finite-size component. Failed ensemble members are recorded in
/// `failures` and the affected fields are left empty.
pub fn decompose(
    v: &Series,
    returns: Option<&Series>,
    cfg: &DecomposeConfig,
    fse_table: Option<&FseTable>,
) -> Result<ComponentReport> {
    check_input(v)?;
    cfg.validate()?;
    let values = v.values();
    let reference = gaussian_reference(v, returns, cfg.gaussian_reference)?;
    let apparent = width(values, &cfg.analysis, derive_seed(cfg.seed, &[legs::ORIGINAL]))?;

    let mut failures = Vec::new();
    let lm_root = derive_seed(cfg.seed, &[legs::LM]);
    let lm = summarize(
        "lm",
        run_members(cfg.ensemble, |k| lm_member(values, cfg, derive_seed(lm_root, &[k as u64]))),
        &mut failures,
    );
    let sf_root = derive_seed(cfg.seed, &[legs::SF]);
    let sf = summarize(
        "sf",
        run_members(cfg.ensemble, |k| sf_member(values, cfg, derive_seed(sf_root, &[k as u64]))),
        &mut failures,
    );
    let norm = remapped_legs(
        values,
        &reference.spec(),
        cfg,
        derive_seed(cfg.seed, &[legs::NORM]),
        &mut failures,
        "norm",
    );

    let components = match (lm.estimate, norm.delta_alpha.estimate, norm.fse.estimate) {
        (Some(fse), Some(n), Some(nf)) => Some(assemble(Estimate::exact(apparent), fse, n, nf)),
        _ => None,
    };
    let eff = lm.estimate.map(|fse| Estimate::exact(apparent).minus(&fse));
    let norm_eff = match (norm.delta_alpha.estimate, norm.fse.estimate) {
        (Some(n), Some(nf)) => Some(n.minus(&nf)),
        _ => None,
    };
    let shuffle_difference = match (sf.estimate, norm.sf.estimate) {
        (Some(a), Some(b)) => Some(a.minus(&b)),
        _ => None,
    };
    let fse_cross_check = match fse_table {
        Some(table) if values.len() >= MIN_HURST_LEN => {
            let h = estimate_hurst(values)?;
            let hurst = h.hurst.clamp(1e-3, 1.0 - 1e-3);
            Some(FseCrossCheck {
                hurst: h.hurst,
                hurst_stderr: h.stderr,
                prediction: fse_predict(hurst, values.len() as f64, FseSource::Table(table), true)?,
            })
        }
        _ => None,
    };

    Ok(ComponentReport {
        schema_version: REPORT_SCHEMA_VERSION,
        n: values.len(),
        delta_alpha: apparent,
        delta_alpha_fse: lm.estimate,
        delta_alpha_sf: sf.estimate,
        delta_alpha_eff: eff,
        delta_alpha_norm: norm.delta_alpha.estimate,
        delta_alpha_norm_fse: norm.fse.estimate,
        delta_alpha_norm_sf: norm.sf.estimate,
        delta_alpha_norm_eff: norm_eff,
        delta_alpha_pdf: components.map(|c| c.pdf),
        delta_alpha_nl: components.map(|c| c.nl),
        shuffle_difference,
        ensemble_size: cfg.ensemble,
        seed: cfg.seed,
        gaussian_reference: reference,
        lm_iaaft: lm.iaaft,
        norm_lm_iaaft: norm.fse.iaaft,
        fse_cross_check,
        config: cfg.clone(),
        failures,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Student,
    Weibull,
}

impl Family {
    pub fn spec(self, parameter: f64) -> DistributionSpec {
        match self {
            Family::Student => DistributionSpec::StudentAbs { gamma: parameter },
            Family::Weibull => DistributionSpec::Weibull { beta: parameter },
        }
    }

    /// `gamma = 3..10` step 0.5, or `beta = 0.4..1.0` step 0.1.
    pub fn default_grid(self) -> Vec<f64> {
        match self {
            Family::Student => (0..=14).map(|i| 3.0 + 0.5 * i as f64).collect(),
            Family::Weibull => (4..=10).map(|i| i as f64 / 10.0).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub parameter: f64,
    pub delta_alpha: Option<Estimate>,
    pub delta_alpha_fse: Option<Estimate>,
    pub delta_alpha_sf: Option<Estimate>,
    pub delta_alpha_eff: Option<Estimate>,
    pub delta_alpha_pdf: Option<Estimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub schema_version: u32,
    pub family: Family,
    pub n: usize,
    pub gaussian_reference: GaussianReference,
    pub norm: RemappedLegs,
    pub norm_eff: Option<Estimate>,
    pub points: Vec<SweepPoint>,
    pub config: DecomposeConfig,
    pub failures: Vec<String>,
}

impl SweepTable {
    /// One row per grid point: `parameter` then mean/std of each component.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "parameter,delta_alpha,delta_alpha_std,fse,fse_std,sf,sf_std,eff,eff_std,pdf,pdf_std\n",
        );
        let cell = |e: &Option<Estimate>| match e {
            Some(e) => format!("{},{}", e.mean, e.std),
            None => ",".to_string(),
        };
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                p.parameter,
                cell(&p.delta_alpha),
                cell(&p.delta_alpha_fse),
                cell(&p.delta_alpha_sf),
                cell(&p.delta_alpha_eff),
                cell(&p.delta_alpha_pdf)
            ));
        }
        out
    }
}

/// Decomposition of rank-remapped copies of `v` along a distribution family.
/// The Gaussian chain is shared by all grid points and uses the same seeds
/// as [`decompose`].
pub fn family_sweep(
    v: &Series,
    returns: Option<&Series>,
    family: Family,
    grid: &[f64],
    cfg: &DecomposeConfig,
) -> Result<SweepTable> {
    check_input(v)?;
    cfg.validate()?;
    for &p in grid {
        family.spec(p).validate()?;
    }
    let values = v.values();
    let reference = gaussian_reference(v, returns, cfg.gaussian_reference)?;
    let mut failures = Vec::new();
    let norm = remapped_legs(
        values,
        &reference.spec(),
        cfg,
        derive_seed(cfg.seed, &[legs::NORM]),
        &mut failures,
        "norm",
    );
    let norm_eff = match (norm.delta_alpha.estimate, norm.fse.estimate) {
        (Some(n), Some(nf)) => Some(n.minus(&nf)),
        _ => None,
    };
    let points = grid
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let legs = remapped_legs(
                values,
                &family.spec(p),
                cfg,
                derive_seed(cfg.seed, &[legs::SWEEP, i as u64]),
                &mut failures,
                &format!("{p}"),
            );
            let eff = match (legs.delta_alpha.estimate, legs.fse.estimate) {
                (Some(a), Some(f)) => Some(a.minus(&f)),
                _ => None,
            };
            SweepPoint {
                parameter: p,
                delta_alpha: legs.delta_alpha.estimate,
                delta_alpha_fse: legs.fse.estimate,
                delta_alpha_sf: legs.sf.estimate,
                delta_alpha_eff: eff,
                delta_alpha_pdf: eff.zip(norm_eff).map(|(e, n)| e.minus(&n)),
            }
        })
        .collect();
    Ok(SweepTable {
        schema_version: REPORT_SCHEMA_VERSION,
        family,
        n: values.len(),
        gaussian_reference: reference,
        norm,
        norm_eff,
        points,
        config: cfg.clone(),
        failures,
    })
}

/// Convenience for callers holding raw values.
pub fn volatility_series(values: Vec<f64>) -> Result<Series> {
    Series::new(values, SeriesKind::Volatility, "volatility")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn self_reference_has_zero_pdf_component() {
        let fse = Estimate { mean: 0.2, std: 0.03, count: 20, failures: 0 };
        let c = assemble(Estimate { mean: 0.3, std: 0.004, count: 20, failures: 0 }, fse, Estimate { mean: 0.3, std: 0.004, count: 20, failures: 0 }, fse);
        assert_eq!(c.pdf.mean, 0.0);
    }

    #[test]
    fn accounting_identity_holds() {
        let c = assemble(
            Estimate::exact(0.367),
            Estimate { mean: 0.219, std: 0.038, count: 100, failures: 0 },
            Estimate { mean: 0.185, std: 0.003, count: 100, failures: 0 },
            Estimate { mean: 0.118, std: 0.028, count: 100, failures: 0 },
        );
        assert!((0.219 + c.pdf.mean + c.nl.mean - 0.367).abs() < 1e-15);
        assert!((c.eff.mean - 0.148).abs() < 1e-12);
        assert!((c.nl.mean - 0.067).abs() < 1e-12);
        assert!((c.pdf.mean - 0.081).abs() < 1e-12);
        assert!((c.eff.std - 0.038).abs() < 1e-12);
    }

    #[test]
    fn default_grids() {
        let g = Family::Student.default_grid();
        assert_eq!((g.len(), g[0], g[14]), (15, 3.0, 10.0));
        let b = Family::Weibull.default_grid();
        assert_eq!(b.len(), 7);
        assert!((b[0] - 0.4).abs() < 1e-12 && b[6] == 1.0);
    }

    #[test]
    fn fallback_reference_matches_second_moment() {
        let v = volatility_series(vec![3.0, 4.0]).unwrap();
        let r = gaussian_reference(&v, None, None).unwrap();
        assert_eq!(r.source, ReferenceSource::VolatilityFallback);
        assert!((r.sigma - 12.5f64.sqrt()).abs() < 1e-12);
    }
}
