//! Randomized partition-function multifractal analysis.
//!
//! For a non-negative series `v` of length `N` and an integer scale `l`, `m`
//! window starts `j` are drawn uniformly from `[0, N - l]` and each window
//! carries the normalised measure `E = sum(v[j..j+l]) / sum(v)`. The partition
//! function is `M_q(l) = N / (m l) * sum_i E_i^q`, its log-log slope against
//! `l / N` is `tau(q)`, and the Legendre transform of `tau` gives the
//! singularity spectrum `(alpha, f)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derived, SeededRng};
use crate::stats::{ols, LinearFit};

/// Orders `q` from `min` to `max` in steps of `step`, generated as integer
/// multiples of `step` so that 0 and 1 are hit exactly when they lie on the grid.
pub fn q_grid(min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(max > min) {
        return Err(Error::InvalidParameter(format!(
            "bad q range {min}:{max}:{step}"
        )));
    }
    let lo = (min / step).round() as i64;
    let hi = (max / step).round() as i64;
    Ok((lo..=hi).map(|i| i as f64 * step).collect())
}

pub fn default_q_grid() -> Vec<f64> {
    (-16..=16).map(|i| i as f64 * 0.25).collect()
}

/// Which scales `l` enter the partition function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "type")]
pub enum ScaleGrid {
    /// `points` log-spaced integers in `[N * min_fraction, N * max_fraction]`.
    Fractional {
        min_fraction: f64,
        max_fraction: f64,
        points: usize,
    },
    /// `points` log-spaced integers in `[min, max]`, clamped to `[1, N]`.
    LogSpaced { min: usize, max: usize, points: usize },
    Explicit { scales: Vec<usize> },
}

impl Default for ScaleGrid {
    fn default() -> Self {
        ScaleGrid::Fractional {
            min_fraction: 1.0 / 60.0,
            max_fraction: 1.0 / 3.0,
            points: 30,
        }
    }
}

fn log_spaced(lo: f64, hi: f64, points: usize) -> Vec<usize> {
    let mut out: Vec<usize> = if points <= 1 || hi <= lo {
        vec![lo.round() as usize]
    } else {
        let (a, b) = (lo.ln(), hi.ln());
        (0..points)
            .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp().round() as usize)
            .collect()
    };
    out.dedup();
    out
}

impl ScaleGrid {
    pub fn resolve(&self, n: usize) -> Result<Vec<usize>> {
        let scales = match self {
            ScaleGrid::Fractional {
                min_fraction,
                max_fraction,
                points,
            } => {
                let lo = (n as f64 * min_fraction).max(1.0);
                let hi = (n as f64 * max_fraction).min(n as f64);
                log_spaced(lo, hi, *points)
            }
            ScaleGrid::LogSpaced { min, max, points } => {
                let lo = (*min).max(1) as f64;
                let hi = (*max).min(n) as f64;
                log_spaced(lo, hi, *points)
            }
            ScaleGrid::Explicit { scales } => {
                let mut s = scales.clone();
                s.sort_unstable();
                s.dedup();
                s
            }
        };
        if let Some(&bad) = scales.iter().find(|&&l| l == 0 || l > n) {
            return Err(Error::ScaleOutOfRange { scale: bad, len: n });
        }
        Ok(scales)
    }
}

/// Rule mapping a scale to the number of sampled windows `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "type")]
pub enum IntervalRule {
    /// `m = max(min(ceil(factor * N / l), N - l + 1), min_count)`.
    Coverage { factor: f64, min_count: usize },
    /// `m = ceil(factor * (N - l + 1))` windows drawn with replacement.
    PerStart { factor: f64 },
    Fixed { count: usize },
    /// Every start `0..=N-l` exactly once; no sampling.
    Exhaustive,
}

impl Default for IntervalRule {
    fn default() -> Self {
        IntervalRule::Coverage {
            factor: 2.0,
            min_count: 10,
        }
    }
}

impl IntervalRule {
    pub fn count(&self, n: usize, scale: usize) -> usize {
        let starts = n - scale + 1;
        match *self {
            IntervalRule::Coverage { factor, min_count } => {
                let cover = (factor * n as f64 / scale as f64).ceil() as usize;
                cover.min(starts).max(min_count).max(1)
            }
            IntervalRule::PerStart { factor } => ((factor * starts as f64).ceil() as usize).max(1),
            IntervalRule::Fixed { count } => count.max(1),
            IntervalRule::Exhaustive => starts,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub q_grid: Vec<f64>,
    pub scales: ScaleGrid,
    pub intervals: IntervalRule,
    /// Inclusive `[min, max]` bounds on the scales used for the regression.
    pub fit_range: Option<(usize, usize)>,
    pub seed: u64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            q_grid: default_q_grid(),
            scales: ScaleGrid::default(),
            intervals: IntervalRule::default(),
            fit_range: None,
            seed: 0,
        }
    }
}

impl AnalysisConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate_q_grid(&self) -> Result<()> {
        let q = &self.q_grid;
        if q.len() < 3 {
            return Err(Error::InvalidParameter("q grid needs at least 3 orders".into()));
        }
        if q.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("q grid must be strictly increasing".into()));
        }
        if !q.contains(&0.0) || !q.contains(&1.0) {
            return Err(Error::InvalidParameter("q grid must contain 0 and 1".into()));
        }
        Ok(())
    }
}

/// Prefix sums of a non-negative series for O(1) window measures.
#[derive(Debug, Clone)]
pub struct MeasureIndex {
    prefix: Vec<f64>,
}

impl MeasureIndex {
    pub fn new(values: &[f64]) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::TooShort {
                needed: 2,
                got: values.len(),
            });
        }
        let mut prefix = Vec::with_capacity(values.len() + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for (index, &value) in values.iter().enumerate() {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(Error::NegativeValue { index, value });
            }
            acc += value;
            prefix.push(acc);
        }
        if acc <= 0.0 {
            return Err(Error::ZeroMass);
        }
        Ok(Self { prefix })
    }

    pub fn len(&self) -> usize {
        self.prefix.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn total(&self) -> f64 {
        self.prefix[self.len()]
    }

    /// Normalised measure of `v[start..start + scale]`.
    pub fn window(&self, start: usize, scale: usize) -> f64 {
        let s = self.prefix[start + scale] - self.prefix[start];
        s.max(0.0) / self.total()
    }

    fn check_scale(&self, scale: usize) -> Result<()> {
        if scale == 0 || scale > self.len() {
            return Err(Error::ScaleOutOfRange {
                scale,
                len: self.len(),
            });
        }
        Ok(())
    }

    /// `m` measures with starts drawn uniformly (with replacement).
    pub fn sample(&self, scale: usize, m: usize, rng: &mut SeededRng) -> Result<Vec<f64>> {
        self.check_scale(scale)?;
        let last = self.len() - scale;
        Ok((0..m)
            .map(|_| self.window(rng.random_range(0..=last), scale))
            .collect())
    }

    /// Every window of length `scale` exactly once.
    pub fn enumerate(&self, scale: usize) -> Result<Vec<f64>> {
        self.check_scale(scale)?;
        Ok((0..=self.len() - scale).map(|j| self.window(j, scale)).collect())
    }
}

/// Measures `E_i` of `m` randomly placed windows of length `scale`.
pub fn interval_measures(values: &[f64], scale: usize, m: usize, rng: &mut SeededRng) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(Error::InvalidParameter("interval count must be positive".into()));
    }
    MeasureIndex::new(values)?.sample(scale, m, rng)
}

/// `ln( mean_i E_i^q )`, evaluated with a log-sum-exp so that large negative
/// orders on small measures cannot overflow.
fn log_mean_power(log_e: &[f64], q: f64, scale: usize) -> Result<f64> {
    if q == 0.0 {
        return Ok(0.0);
    }
    let mut peak = f64::NEG_INFINITY;
    for &le in log_e {
        if le == f64::NEG_INFINITY && q < 0.0 {
            return Err(Error::ZeroMeasureNegativeOrder { scale });
        }
        peak = peak.max(q * le);
    }
    if !peak.is_finite() {
        return Err(Error::DegeneratePartition { scale, q });
    }
    let sum: f64 = log_e.iter().map(|&le| (q * le - peak).exp()).sum();
    Ok(peak + sum.ln() - (log_e.len() as f64).ln())
}

/// `M_q(l)` on the (scale, q) grid, stored as natural logarithms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionTable {
    pub q: Vec<f64>,
    pub scales: Vec<usize>,
    /// `log_m[s][k] = ln M_{q[k]}(scales[s])`.
    pub log_m: Vec<Vec<f64>>,
    pub n: usize,
    pub m_used: Vec<usize>,
}

impl PartitionTable {
    pub fn value(&self, scale_index: usize, q_index: usize) -> f64 {
        self.log_m[scale_index][q_index].exp()
    }

    /// `M_q(l)^{1/(q-1)}`, the quantity whose log-log slope is `tau(q)/(q-1)`;
    /// undefined at `q = 1`.
    pub fn generalized_mean(&self, scale_index: usize, q_index: usize) -> Option<f64> {
        let q = self.q[q_index];
        (q != 1.0).then(|| (self.log_m[scale_index][q_index] / (q - 1.0)).exp())
    }
}

fn table_row(
    index: &MeasureIndex,
    q_grid: &[f64],
    scale: usize,
    m: usize,
    exhaustive: bool,
    seed: u64,
    scale_index: usize,
) -> Result<Vec<f64>> {
    let measures = if exhaustive {
        index.enumerate(scale)?
    } else {
        let mut rng = derived(seed, &[scale_index as u64]);
        index.sample(scale, m, &mut rng)?
    };
    let log_e: Vec<f64> = measures.iter().map(|e| e.ln()).collect();
    let base = (index.len() as f64).ln() - (scale as f64).ln();
    q_grid
        .iter()
        .map(|&q| log_mean_power(&log_e, q, scale).map(|lm| base + lm))
        .collect()
}

/// Builds the partition-function table. The measure sample for each scale is
/// drawn once (from a stream derived from `cfg.seed` and the scale index) and
/// reused for every order `q`.
pub fn partition_function(values: &[f64], cfg: &AnalysisConfig) -> Result<PartitionTable> {
    cfg.validate_q_grid()?;
    let index = MeasureIndex::new(values)?;
    let n = index.len();
    let scales = cfg.scales.resolve(n)?;
    let exhaustive = matches!(cfg.intervals, IntervalRule::Exhaustive);
    let m_used: Vec<usize> = scales.iter().map(|&l| cfg.intervals.count(n, l)).collect();

    let job = |(s, (&l, &m)): (usize, (&usize, &usize))| {
        table_row(&index, &cfg.q_grid, l, m, exhaustive, cfg.seed, s)
    };
    #[cfg(feature = "parallel")]
    let rows: Result<Vec<Vec<f64>>> = {
        use rayon::prelude::*;
        scales
            .par_iter()
            .zip(m_used.par_iter())
            .enumerate()
            .map(job)
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let rows: Result<Vec<Vec<f64>>> = scales.iter().zip(m_used.iter()).enumerate().map(job).collect();

    Ok(PartitionTable {
        q: cfg.q_grid.clone(),
        scales,
        log_m: rows?,
        n,
        m_used,
    })
}

/// Scaling exponents with per-order regression diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauFit {
    pub q: Vec<f64>,
    pub tau: Vec<f64>,
    pub tau_stderr: Vec<f64>,
    /// Sum of squared residuals of each log-log fit.
    pub residual: Vec<f64>,
    pub scales_used: Vec<usize>,
}

pub const MIN_FIT_SCALES: usize = 5;

/// OLS slope of `ln M_q(l)` against `ln(l / N)` for each order, over the
/// scales inside `fit_range` (all scales when `None`).
pub fn fit_tau(table: &PartitionTable, fit_range: Option<(usize, usize)>) -> Result<TauFit> {
    let (lo, hi) = fit_range.unwrap_or((0, usize::MAX));
    let used: Vec<usize> = (0..table.scales.len())
        .filter(|&s| (lo..=hi).contains(&table.scales[s]))
        .collect();
    if used.len() < MIN_FIT_SCALES {
        return Err(Error::InsufficientScales {
            needed: MIN_FIT_SCALES,
            got: used.len(),
        });
    }
    let ln_n = (table.n as f64).ln();
    let x: Vec<f64> = used
        .iter()
        .map(|&s| (table.scales[s] as f64).ln() - ln_n)
        .collect();
    let mut tau = Vec::with_capacity(table.q.len());
    let mut tau_stderr = Vec::with_capacity(table.q.len());
    let mut residual = Vec::with_capacity(table.q.len());
    for k in 0..table.q.len() {
        let y: Vec<f64> = used.iter().map(|&s| table.log_m[s][k]).collect();
        let LinearFit {
            slope,
            slope_stderr,
            ssr,
            ..
        } = ols(&x, &y)?;
        tau.push(slope);
        tau_stderr.push(slope_stderr);
        residual.push(ssr);
    }
    Ok(TauFit {
        q: table.q.clone(),
        tau,
        tau_stderr,
        residual,
        scales_used: used.iter().map(|&s| table.scales[s]).collect(),
    })
}

/// Tolerance on increases of `alpha(q)` before a concavity warning is recorded.
pub const MONOTONE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularitySpectrum {
    pub q: Vec<f64>,
    pub tau: Vec<f64>,
    pub tau_stderr: Vec<f64>,
    pub alpha: Vec<f64>,
    pub f: Vec<f64>,
    pub delta_alpha: f64,
    pub alpha_min: f64,
    pub alpha_max: f64,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl SingularitySpectrum {
    pub fn at_q(&self, q: f64) -> Option<usize> {
        self.q.iter().position(|&x| x == q)
    }
}

/// Numerical Legendre transform: `alpha = tau'(q)` by central differences
/// (one-sided at the ends) and `f = q alpha - tau`.
pub fn legendre(q: &[f64], tau: &[f64], tau_stderr: &[f64]) -> Result<SingularitySpectrum> {
    let n = q.len();
    if n < 3 || tau.len() != n {
        return Err(Error::InvalidParameter(
            "legendre transform needs at least 3 matching (q, tau) points".into(),
        ));
    }
    let alpha: Vec<f64> = (0..n)
        .map(|i| {
            let (a, b) = match i {
                0 => (0, 1),
                i if i == n - 1 => (n - 2, n - 1),
                i => (i - 1, i + 1),
            };
            (tau[b] - tau[a]) / (q[b] - q[a])
        })
        .collect();
    let f: Vec<f64> = (0..n).map(|i| q[i] * alpha[i] - tau[i]).collect();
    let alpha_min = alpha.iter().copied().fold(f64::INFINITY, f64::min);
    let alpha_max = alpha.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut warnings = Vec::new();
    if let Some(i) = alpha.windows(2).position(|w| w[1] > w[0] + MONOTONE_TOLERANCE) {
        warnings.push(format!(
            "alpha(q) increases between q={} and q={}; tau is not concave there",
            q[i],
            q[i + 1]
        ));
    }
    Ok(SingularitySpectrum {
        q: q.to_vec(),
        tau: tau.to_vec(),
        tau_stderr: if tau_stderr.len() == n {
            tau_stderr.to_vec()
        } else {
            vec![0.0; n]
        },
        alpha,
        f,
        delta_alpha: alpha_max - alpha_min,
        alpha_min,
        alpha_max,
        warnings,
    })
}

/// `alpha_max - alpha_min`.
pub fn singularity_width(spectrum: &SingularitySpectrum) -> f64 {
    spectrum.delta_alpha
}

/// Full pipeline: partition function, tau fit, and spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub table: PartitionTable,
    pub fit: TauFit,
    pub spectrum: SingularitySpectrum,
}

pub fn analyze(values: &[f64], cfg: &AnalysisConfig) -> Result<Analysis> {
    let table = partition_function(values, cfg)?;
    let fit = fit_tau(&table, cfg.fit_range)?;
    let spectrum = legendre(&fit.q, &fit.tau, &fit.tau_stderr)?;
    Ok(Analysis {
        table,
        fit,
        spectrum,
    })
}

/// Width only; the common case inside ensembles.
pub fn delta_alpha(values: &[f64], cfg: &AnalysisConfig) -> Result<f64> {
    analyze(values, cfg).map(|a| a.spectrum.delta_alpha)
}

pub const SPECTRUM_SCHEMA_VERSION: u32 = 1;

/// Exported spectrum: arrays plus the configuration that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumExport {
    pub schema_version: u32,
    pub q: Vec<f64>,
    pub tau: Vec<f64>,
    pub tau_stderr: Vec<f64>,
    pub alpha: Vec<f64>,
    pub f: Vec<f64>,
    pub delta_alpha: f64,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub n: usize,
    pub scales: Vec<usize>,
    pub m_used: Vec<usize>,
    pub config: AnalysisConfig,
    pub seed: u64,
    pub warnings: Vec<String>,
}

impl SpectrumExport {
    pub fn new(analysis: &Analysis, cfg: &AnalysisConfig) -> Self {
        let s = &analysis.spectrum;
        Self {
            schema_version: SPECTRUM_SCHEMA_VERSION,
            q: s.q.clone(),
            tau: s.tau.clone(),
            tau_stderr: s.tau_stderr.clone(),
            alpha: s.alpha.clone(),
            f: s.f.clone(),
            delta_alpha: s.delta_alpha,
            alpha_min: s.alpha_min,
            alpha_max: s.alpha_max,
            n: analysis.table.n,
            scales: analysis.fit.scales_used.clone(),
            m_used: analysis.table.m_used.clone(),
            config: cfg.clone(),
            seed: cfg.seed,
            warnings: s.warnings.clone(),
        }
    }

    /// Flat `q,tau,alpha,f` table.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("q,tau,alpha,f\n");
        for i in 0..self.q.len() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                self.q[i], self.tau[i], self.alpha[i], self.f[i]
            ));
        }
        out
    }
}

/// Long-format `scale,q,M_q,M_q^(1/(q-1))` table for log-log plots.
pub fn partition_csv(table: &PartitionTable) -> String {
    let mut out = String::from("scale,q,m_q,generalized_mean\n");
    for (s, &l) in table.scales.iter().enumerate() {
        for (k, &q) in table.q.iter().enumerate() {
            let g = table
                .generalized_mean(s, k)
                .map(|g| g.to_string())
                .unwrap_or_default();
            out.push_str(&format!("{l},{q},{},{g}\n", table.value(s, k)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn exhaustive_cfg(scales: Vec<usize>) -> AnalysisConfig {
        AnalysisConfig {
            scales: ScaleGrid::Explicit { scales },
            intervals: IntervalRule::Exhaustive,
            ..AnalysisConfig::default()
        }
    }

    #[test]
    fn default_grid_has_exact_zero_and_one() {
        let q = default_q_grid();
        assert_eq!(q.len(), 33);
        assert!(q.contains(&0.0) && q.contains(&1.0));
        assert_eq!(q[0], -4.0);
        assert_eq!(q_grid(-4.0, 4.0, 0.25).unwrap(), q);
    }

    #[test]
    fn constant_series_measures_are_uniform() {
        let v = vec![3.0; 200];
        let mut rng = seeded(1);
        let e = interval_measures(&v, 7, 50, &mut rng).unwrap();
        assert!(e.iter().all(|&x| x == 7.0 / 200.0));
    }

    #[test]
    fn full_length_window_has_unit_mass() {
        let v = [0.5, 1.5, 2.0, 0.25];
        let e = interval_measures(&v, 4, 5, &mut seeded(0)).unwrap();
        assert!(e.iter().all(|&x| x == 1.0));
    }

    #[test]
    fn enumerated_windows_of_small_series() {
        // Oracle: windows [1,2], [2,3], [3,4] of total 10.
        let idx = MeasureIndex::new(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(idx.enumerate(2).unwrap(), vec![0.3, 0.5, 0.7]);
        let sampled = idx.sample(2, 100, &mut seeded(4)).unwrap();
        assert!(sampled.iter().all(|e| [0.3, 0.5, 0.7].contains(e)));
    }

    #[test]
    fn measure_errors() {
        assert!(matches!(MeasureIndex::new(&[0.0, 0.0, 0.0]), Err(Error::ZeroMass)));
        let err = interval_measures(&[1.0, 2.0], 3, 1, &mut seeded(0)).unwrap_err();
        assert!(matches!(err, Error::ScaleOutOfRange { scale: 3, len: 2 }));
    }

    #[test]
    fn constant_series_partition_function_is_exact_power_law() {
        let n = 600;
        let v = vec![3.0; n];
        let cfg = AnalysisConfig::default().with_seed(9);
        let table = partition_function(&v, &cfg).unwrap();
        for (s, &l) in table.scales.iter().enumerate() {
            for (k, &q) in table.q.iter().enumerate() {
                let expect = (q - 1.0) * (l as f64 / n as f64).ln();
                assert!((table.log_m[s][k] - expect).abs() < 1e-12, "l={l} q={q}");
            }
        }
    }

    #[test]
    fn zeroth_order_is_n_over_l() {
        let v: Vec<f64> = (0..500).map(|i| ((i * 37) % 11) as f64 + 0.5).collect();
        let table = partition_function(&v, &AnalysisConfig::default()).unwrap();
        let k0 = table.q.iter().position(|&q| q == 0.0).unwrap();
        for (s, &l) in table.scales.iter().enumerate() {
            assert_eq!(table.log_m[s][k0], (500f64).ln() - (l as f64).ln());
        }
        let fit = fit_tau(&table, None).unwrap();
        assert_eq!(fit.tau[k0], -1.0);
        assert!(fit.residual[k0] < 1e-28);
    }

    #[test]
    fn zero_window_at_negative_order_errors() {
        let mut v = vec![1.0; 400];
        for x in &mut v[100..300] {
            *x = 0.0;
        }
        let cfg = exhaustive_cfg(vec![2, 4, 8, 16, 32]);
        let err = partition_function(&v, &cfg).unwrap_err();
        assert!(matches!(err, Error::ZeroMeasureNegativeOrder { scale: 2 }), "{err}");
        let positive_only = AnalysisConfig {
            q_grid: vec![0.0, 0.5, 1.0, 2.0],
            ..cfg
        };
        assert!(partition_function(&v, &positive_only).is_ok());
    }

    #[test]
    fn fit_requires_five_scales() {
        let v = vec![1.0; 100];
        let cfg = exhaustive_cfg(vec![2, 4, 8, 16]);
        let table = partition_function(&v, &cfg).unwrap();
        assert!(matches!(
            fit_tau(&table, None),
            Err(Error::InsufficientScales { got: 4, .. })
        ));
        let cfg = exhaustive_cfg(vec![2, 4, 8, 16, 32, 50]);
        let table = partition_function(&v, &cfg).unwrap();
        assert!(fit_tau(&table, Some((4, 50))).is_ok());
        assert!(fit_tau(&table, Some((8, 50))).is_err());
    }

    #[test]
    fn legendre_of_linear_tau_is_a_point() {
        let q = default_q_grid();
        let tau: Vec<f64> = q.iter().map(|q| q - 1.0).collect();
        let s = legendre(&q, &tau, &[]).unwrap();
        assert!(s.alpha.iter().all(|&a| (a - 1.0).abs() < 1e-12));
        assert!(s.f.iter().all(|&f| (f - 1.0).abs() < 1e-12));
        assert!(s.delta_alpha < 1e-12);
        assert!(s.warnings.is_empty());
    }

    #[test]
    fn legendre_linear_segment_of_bifractal() {
        let gamma = 2.5;
        let q: Vec<f64> = (1..10).map(|i| i as f64 * 0.25).collect();
        let tau: Vec<f64> = q.iter().map(|q| q / gamma - 1.0).collect();
        let s = legendre(&q, &tau, &[]).unwrap();
        assert!(s.alpha.iter().all(|&a| (a - 1.0 / gamma).abs() < 1e-12));
    }

    #[test]
    fn legendre_flags_non_concave_tau() {
        let q = [-1.0, 0.0, 1.0, 2.0];
        let tau = [-2.0, -1.0, 0.0, 3.0];
        let s = legendre(&q, &tau, &[]).unwrap();
        assert_eq!(s.warnings.len(), 1);
        assert!(legendre(&q[..2], &tau[..2], &[]).is_err());
    }

    #[test]
    fn apex_of_spectrum_is_one() {
        let q = default_q_grid();
        let tau: Vec<f64> = q.iter().map(|&q: &f64| -(0.3f64.powf(q) + 0.7f64.powf(q)).log2()).collect();
        let s = legendre(&q, &tau, &[]).unwrap();
        let k0 = s.at_q(0.0).unwrap();
        assert!((s.f[k0] - 1.0).abs() < 1e-6);
        assert!(s.alpha.windows(2).all(|w| w[1] <= w[0] + MONOTONE_TOLERANCE));
    }

    #[test]
    fn scale_grid_defaults() {
        let scales = ScaleGrid::default().resolve(6000).unwrap();
        assert_eq!(scales[0], 100);
        assert_eq!(*scales.last().unwrap(), 2000);
        assert_eq!(scales.len(), 30);
        assert!(ScaleGrid::Explicit { scales: vec![0, 3] }.resolve(10).is_err());
    }

    #[test]
    fn interval_counts() {
        let rule = IntervalRule::default();
        assert_eq!(rule.count(6000, 100), 120);
        assert_eq!(rule.count(6000, 2000), 10);
        assert_eq!(IntervalRule::Exhaustive.count(10, 4), 7);
        assert_eq!(IntervalRule::PerStart { factor: 2.0 }.count(10, 4), 14);
    }

    #[test]
    fn q_grid_must_hold_zero_and_one() {
        let cfg = AnalysisConfig {
            q_grid: vec![-1.0, 0.5, 2.0],
            ..AnalysisConfig::default()
        };
        assert!(partition_function(&[1.0; 100], &cfg).is_err());
    }

    #[test]
    fn export_roundtrips() {
        let v: Vec<f64> = (0..400).map(|i| 1.0 + (i % 7) as f64).collect();
        let cfg = AnalysisConfig::default().with_seed(3);
        let a = analyze(&v, &cfg).unwrap();
        let export = SpectrumExport::new(&a, &cfg);
        let json = serde_json::to_string(&export).unwrap();
        let back: SpectrumExport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, export);
        let csv = export.to_csv();
        assert_eq!(csv.lines().count(), 34);
        assert!(partition_csv(&a.table).starts_with("scale,q,m_q"));
    }
}
