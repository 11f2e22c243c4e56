//! Surrogate series: shuffles, IAAFT linear-memory surrogates, empirical
//! inverse-CDF sampling, and rank remapping onto prescribed distributions.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal, StudentT, Weibull};
use rustfft::num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{amplitudes, Fourier};
use crate::rng::SeededRng;
use crate::stats::ranks;

/// Target marginal distribution for sampling and rank remapping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "family")]
pub enum DistributionSpec {
    /// Empirical distribution of a reference sample.
    Empirical { reference: Vec<f64> },
    /// `|r|` with `r ~ N(mu, sigma^2)`.
    GaussianAbs { mu: f64, sigma: f64 },
    /// `|r|` with `r` Student-t, `gamma` degrees of freedom, location 0, unit scale.
    StudentAbs { gamma: f64 },
    /// Density `beta x^(beta-1) exp(-x^beta)`.
    Weibull { beta: f64 },
}

impl DistributionSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DistributionSpec::Empirical { ref reference } => {
                let first = reference.first().copied();
                if reference.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidParameter("non-finite reference value".into()));
                }
                if first.is_none() || reference.iter().all(|&v| Some(v) == first) {
                    return Err(Error::Degenerate(
                        "reference needs at least two distinct values".into(),
                    ));
                }
            }
            DistributionSpec::GaussianAbs { mu, sigma } => {
                if !(sigma > 0.0) || !mu.is_finite() || !sigma.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "gaussian needs sigma > 0, got mu={mu} sigma={sigma}"
                    )));
                }
            }
            DistributionSpec::StudentAbs { gamma } => {
                if !(gamma > 2.0) || !gamma.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "student-t needs gamma > 2, got {gamma}"
                    )));
                }
            }
            DistributionSpec::Weibull { beta } => {
                if !(beta > 0.0 && beta <= 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "weibull needs 0 < beta <= 1, got {beta}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Short human-readable form, e.g. `student-abs(gamma=3)`.
    pub fn describe(&self) -> String {
        match self {
            DistributionSpec::Empirical { reference } => format!("empirical(n={})", reference.len()),
            DistributionSpec::GaussianAbs { mu, sigma } => format!("gaussian-abs(mu={mu}, sigma={sigma})"),
            DistributionSpec::StudentAbs { gamma } => format!("student-abs(gamma={gamma})"),
            DistributionSpec::Weibull { beta } => format!("weibull(beta={beta})"),
        }
    }
}

/// Uniformly random permutation (Fisher-Yates).
pub fn shuffle(values: &[f64], rng: &mut SeededRng) -> Vec<f64> {
    let mut out = values.to_vec();
    out.shuffle(rng);
    out
}

/// Piecewise-linear inverse of the empirical distribution function.
///
/// Knots are the distinct reference values `s_j` with `F(s_j)` equal to the
/// fraction of reference values `<= s_j`.
#[derive(Debug, Clone)]
pub struct EmpiricalCdf {
    values: Vec<f64>,
    cdf: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(reference: &[f64]) -> Result<Self> {
        let mut sorted = reference.to_vec();
        if sorted.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite reference value".into()));
        }
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len() as f64;
        let mut values: Vec<f64> = Vec::new();
        let mut cdf: Vec<f64> = Vec::new();
        for (i, &v) in sorted.iter().enumerate() {
            let f = (i + 1) as f64 / n;
            if values.last() == Some(&v) {
                *cdf.last_mut().unwrap() = f;
            } else {
                values.push(v);
                cdf.push(f);
            }
        }
        if values.len() < 2 {
            return Err(Error::Degenerate(
                "reference needs at least two distinct values".into(),
            ));
        }
        Ok(Self { values, cdf })
    }

    /// `min F`, the mass at the smallest reference value.
    pub fn min_cdf(&self) -> f64 {
        self.cdf[0]
    }

    pub fn max_value(&self) -> f64 {
        *self.values.last().unwrap()
    }

    /// `F^{-1}(y)` for `y` in `[min F, 1]`, clamped outside.
    pub fn inverse(&self, y: f64) -> f64 {
        if y <= self.cdf[0] {
            return self.values[0];
        }
        let hi = self.cdf.partition_point(|&c| c < y);
        if hi >= self.cdf.len() {
            return self.max_value();
        }
        let lo = hi - 1;
        let t = (y - self.cdf[lo]) / (self.cdf[hi] - self.cdf[lo]);
        self.values[lo] + t * (self.values[hi] - self.values[lo])
    }

    /// Transformation-method sample of length `len`. The uniforms are mapped
    /// affinely from `[min x, max x]` onto `[min F, 1]`, so no draw falls
    /// outside the reference range.
    pub fn sample(&self, len: usize, rng: &mut SeededRng) -> Vec<f64> {
        let x: Vec<f64> = (0..len).map(|_| rng.random::<f64>()).collect();
        let x_min = x.iter().copied().fold(f64::INFINITY, f64::min);
        let x_max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let f_min = self.min_cdf();
        x.iter()
            .map(|&xi| {
                let y = if x_max > x_min {
                    (xi - x_min) * (1.0 - f_min) / (x_max - x_min) + f_min
                } else {
                    f_min + xi * (1.0 - f_min)
                };
                self.inverse(y)
            })
            .collect()
    }
}

pub fn empirical_inverse_cdf_sample(reference: &[f64], len: usize, rng: &mut SeededRng) -> Result<Vec<f64>> {
    Ok(EmpiricalCdf::new(reference)?.sample(len, rng))
}

/// i.i.d. draws from `spec`.
pub fn sample_distribution(spec: &DistributionSpec, len: usize, rng: &mut SeededRng) -> Result<Vec<f64>> {
    spec.validate()?;
    let out = match *spec {
        DistributionSpec::Empirical { ref reference } => EmpiricalCdf::new(reference)?.sample(len, rng),
        DistributionSpec::GaussianAbs { mu, sigma } => {
            let d = Normal::new(mu, sigma).map_err(|e| Error::InvalidParameter(e.to_string()))?;
            (0..len).map(|_| d.sample(rng).abs()).collect()
        }
        DistributionSpec::StudentAbs { gamma } => {
            let d = StudentT::new(gamma).map_err(|e| Error::InvalidParameter(e.to_string()))?;
            (0..len).map(|_| d.sample(rng).abs()).collect()
        }
        DistributionSpec::Weibull { beta } => {
            let d = Weibull::new(1.0, beta).map_err(|e| Error::InvalidParameter(e.to_string()))?;
            (0..len).map(|_| d.sample(rng)).collect()
        }
    };
    Ok(out)
}

/// Places `sorted_draws` so that the output has the rank ordering of
/// `reference` (ties in `reference` broken by index).
pub fn remap_by_rank(reference: &[f64], sorted_draws: &[f64]) -> Vec<f64> {
    assert_eq!(reference.len(), sorted_draws.len());
    ranks(reference).into_iter().map(|r| sorted_draws[r]).collect()
}

/// Draws `reference.len()` values from `spec` and rearranges them to share
/// the rank ordering of `reference`, which keeps its ordinal temporal
/// structure while replacing the marginal distribution.
pub fn rank_remap(reference: &[f64], spec: &DistributionSpec, rng: &mut SeededRng) -> Result<Vec<f64>> {
    if reference.is_empty() {
        return Err(Error::TooShort { needed: 1, got: 0 });
    }
    let mut draws = sample_distribution(spec, reference.len(), rng)?;
    draws.sort_by(f64::total_cmp);
    Ok(remap_by_rank(reference, &draws))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IaaftStart {
    /// Random permutation of the source values.
    Shuffled,
    /// The source values in their given order.
    AsGiven,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IaaftOptions {
    pub max_iter: usize,
    pub start: IaaftStart,
}

pub const DEFAULT_IAAFT_MAX_ITER: usize = 1000;

impl Default for IaaftOptions {
    fn default() -> Self {
        Self {
            max_iter: DEFAULT_IAAFT_MAX_ITER,
            start: IaaftStart::Shuffled,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IaaftReport {
    pub iterations: usize,
    /// `||A_out - A_target|| / ||A_target||` over the non-zero frequencies.
    pub spectrum_mismatch: f64,
    pub converged: bool,
}

/// Relative L2 distance between amplitude sequences, excluding the DC term
/// (which is fixed by the value multiset).
pub fn amplitude_mismatch(achieved: &[f64], target: &[f64]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (a, t) in achieved.iter().zip(target).skip(1) {
        num += (a - t) * (a - t);
        den += t * t;
    }
    if den == 0.0 {
        return if num == 0.0 { 0.0 } else { f64::INFINITY };
    }
    (num / den).sqrt()
}

/// Rescales the amplitudes of `template` so that their non-DC energy equals
/// that of `values`, with the DC term taken from `values`. The result is a
/// valid IAAFT target for `values`.
pub fn amplitude_target(values: &[f64], template: &[f64]) -> Result<Vec<f64>> {
    if values.len() != template.len() {
        return Err(Error::InvalidParameter(format!(
            "template length {} differs from series length {}",
            template.len(),
            values.len()
        )));
    }
    let av = amplitudes(values);
    let mut at = amplitudes(template);
    let ev: f64 = av.iter().skip(1).map(|a| a * a).sum();
    let et: f64 = at.iter().skip(1).map(|a| a * a).sum();
    if et == 0.0 {
        return Err(Error::Degenerate("template has no fluctuations".into()));
    }
    let scale = (ev / et).sqrt();
    for a in at.iter_mut().skip(1) {
        *a *= scale;
    }
    at[0] = av[0];
    Ok(at)
}

/// Iterative amplitude-adjusted Fourier transform.
///
/// Each iteration imposes `amplitude_target` on the Fourier transform of the
/// current series (keeping its phases), transforms back, and replaces the
/// result by the sorted source values in the same rank order. Iteration stops
/// once an iteration leaves the series unchanged, or after `max_iter`. The
/// output is always an exact permutation of `values_source`.
pub fn iaaft(
    values_source: &[f64],
    amplitude_target: &[f64],
    rng: &mut SeededRng,
    options: IaaftOptions,
) -> Result<(Vec<f64>, IaaftReport)> {
    let n = values_source.len();
    if amplitude_target.len() != n {
        return Err(Error::InvalidParameter(format!(
            "amplitude target has length {}, series has {n}",
            amplitude_target.len()
        )));
    }
    if n < 2 {
        return Err(Error::TooShort { needed: 2, got: n });
    }
    let mut sorted = values_source.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut x = match options.start {
        IaaftStart::Shuffled => shuffle(values_source, rng),
        IaaftStart::AsGiven => values_source.to_vec(),
    };

    let mut fourier = Fourier::new(n);
    let mut buf = vec![Complex::new(0.0, 0.0); n];
    let mut order: Vec<(f64, u32)> = Vec::with_capacity(n);
    let mut next = vec![0.0; n];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < options.max_iter {
        iterations += 1;
        for (b, &v) in buf.iter_mut().zip(&x) {
            *b = Complex::new(v, 0.0);
        }
        fourier.forward(&mut buf);
        for (b, &a) in buf.iter_mut().zip(amplitude_target) {
            let norm = b.norm();
            *b = if norm > 0.0 {
                *b * (a / norm)
            } else {
                Complex::new(a, 0.0)
            };
        }
        fourier.inverse(&mut buf);

        order.clear();
        order.extend(buf.iter().enumerate().map(|(i, c)| (c.re, i as u32)));
        order.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for (rank, &(_, i)) in order.iter().enumerate() {
            next[i as usize] = sorted[rank];
        }
        if next == x {
            converged = true;
            break;
        }
        std::mem::swap(&mut x, &mut next);
    }

    let achieved: Vec<f64> = fourier.spectrum(&x).iter().map(|c| c.norm()).collect();
    let report = IaaftReport {
        iterations,
        spectrum_mismatch: amplitude_mismatch(&achieved, amplitude_target),
        converged,
    };
    Ok((x, report))
}

pub const MIN_LINEAR_MEMORY_LEN: usize = 64;

/// Same values and (approximately) the same power spectrum as `values`,
/// with any nonlinear temporal structure destroyed.
pub fn linear_memory_surrogate(
    values: &[f64],
    rng: &mut SeededRng,
    options: IaaftOptions,
) -> Result<(Vec<f64>, IaaftReport)> {
    if values.len() < MIN_LINEAR_MEMORY_LEN {
        return Err(Error::TooShort {
            needed: MIN_LINEAR_MEMORY_LEN,
            got: values.len(),
        });
    }
    let target = amplitudes(values);
    iaaft(values, &target, rng, options)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use crate::stats::spearman;

    fn sorted(v: &[f64]) -> Vec<f64> {
        let mut s = v.to_vec();
        s.sort_by(f64::total_cmp);
        s
    }

    #[test]
    fn shuffle_is_seeded_permutation() {
        let v = [1.0, 2.0, 3.0];
        let a = shuffle(&v, &mut seeded(11));
        assert_eq!(a, shuffle(&v, &mut seeded(11)));
        assert_eq!(sorted(&a), v.to_vec());
    }

    #[test]
    fn empirical_sample_stays_in_reference_range() {
        let reference = [5.0, 5.0, 5.0, 5.0, 6.0];
        for seed in 0..20 {
            let z = empirical_inverse_cdf_sample(&reference, 10, &mut seeded(seed)).unwrap();
            assert!(z.iter().all(|&x| (5.0..=6.0).contains(&x)));
        }
    }

    #[test]
    fn empirical_cdf_knots_and_inverse() {
        let cdf = EmpiricalCdf::new(&[5.0, 5.0, 5.0, 5.0, 6.0]).unwrap();
        assert_eq!(cdf.min_cdf(), 0.8);
        assert_eq!(cdf.inverse(0.8), 5.0);
        assert_eq!(cdf.inverse(1.0), 6.0);
        assert!((cdf.inverse(0.9) - 5.5).abs() < 1e-12);
    }

    #[test]
    fn degenerate_reference_rejected() {
        assert!(EmpiricalCdf::new(&[2.0, 2.0, 2.0]).is_err());
        assert!(EmpiricalCdf::new(&[]).is_err());
    }

    #[test]
    fn rank_remap_example() {
        let out = remap_by_rank(&[3.0, 1.0, 2.0], &[10.0, 20.0, 30.0]);
        assert_eq!(out, vec![30.0, 10.0, 20.0]);
    }

    #[test]
    fn rank_remap_preserves_order_and_draws() {
        let reference: Vec<f64> = (0..300).map(|i| ((i * 7919) % 1013) as f64).collect();
        let spec = DistributionSpec::StudentAbs { gamma: 3.0 };
        let out = rank_remap(&reference, &spec, &mut seeded(2)).unwrap();
        assert_eq!(spearman(&out, &reference), 1.0);
        let draws = sample_distribution(&spec, reference.len(), &mut seeded(2)).unwrap();
        assert_eq!(sorted(&out), sorted(&draws));
    }

    #[test]
    fn invalid_specs() {
        let mut rng = seeded(0);
        for spec in [
            DistributionSpec::GaussianAbs { mu: 0.0, sigma: 0.0 },
            DistributionSpec::StudentAbs { gamma: 2.0 },
            DistributionSpec::Weibull { beta: 1.5 },
            DistributionSpec::Weibull { beta: 0.0 },
        ] {
            assert!(sample_distribution(&spec, 5, &mut rng).is_err(), "{spec:?}");
        }
    }

    #[test]
    fn iaaft_fixed_point_of_own_spectrum() {
        let v: Vec<f64> = (0..128).map(|i| ((i * 37) % 17) as f64 + 0.1 * i as f64).collect();
        let target = amplitudes(&v);
        let opts = IaaftOptions {
            max_iter: 10,
            start: IaaftStart::AsGiven,
        };
        let (out, report) = iaaft(&v, &target, &mut seeded(0), opts).unwrap();
        assert!(report.converged);
        assert!(report.iterations <= 2, "{report:?}");
        assert_eq!(out, v);
        assert!(report.spectrum_mismatch < 1e-12);
    }

    #[test]
    fn iaaft_preserves_multiset_and_reports_nonconvergence() {
        let mut rng = seeded(5);
        let v = sample_distribution(&DistributionSpec::Weibull { beta: 0.7 }, 256, &mut rng).unwrap();
        let template: Vec<f64> = (0..256).map(|i| (i as f64 * 0.05).sin()).collect();
        let target = amplitude_target(&v, &template).unwrap();
        let opts = IaaftOptions {
            max_iter: 3,
            start: IaaftStart::Shuffled,
        };
        let (out, report) = iaaft(&v, &target, &mut rng, opts).unwrap();
        assert_eq!(sorted(&out), sorted(&v));
        assert_eq!(report.iterations, 3);
        assert!(!report.converged);
    }

    #[test]
    fn iaaft_rejects_length_mismatch() {
        assert!(iaaft(&[1.0, 2.0, 3.0], &[1.0, 2.0], &mut seeded(0), IaaftOptions::default()).is_err());
    }

    #[test]
    fn linear_memory_needs_64_points() {
        let v = vec![1.0; 63];
        assert!(linear_memory_surrogate(&v, &mut seeded(0), IaaftOptions::default()).is_err());
    }
}
