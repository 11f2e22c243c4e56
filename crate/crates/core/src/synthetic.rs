//! Synthetic inputs with known properties: fractional Gaussian noise,
//! binomial multiplicative cascades, and a DFA Hurst estimator.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::Fourier;
use crate::rng::SeededRng;
use crate::stats::ols;

/// Autocovariance of unit-variance fractional Gaussian noise at lag `k`.
pub fn fgn_autocovariance(hurst: f64, k: usize) -> f64 {
    let h2 = 2.0 * hurst;
    let k = k as f64;
    0.5 * ((k + 1.0).powf(h2) - 2.0 * k.powf(h2) + (k - 1.0).abs().powf(h2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FgnStrategy {
    /// Circulant embedding; fails if the embedding has negative eigenvalues.
    Exact,
    /// Circulant embedding, falling back to spectral synthesis when needed.
    ExactWithFallback,
    /// Power-law spectral synthesis only.
    Spectral,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FgnSpec {
    pub hurst: f64,
    pub len: usize,
    pub strategy: FgnStrategy,
}

impl FgnSpec {
    pub fn new(hurst: f64, len: usize) -> Self {
        Self {
            hurst,
            len,
            strategy: FgnStrategy::ExactWithFallback,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.hurst > 0.0 && self.hurst < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "Hurst index must lie in (0, 1), got {}",
                self.hurst
            )));
        }
        if self.len < 64 || !self.len.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "fGn length must be a power of two >= 64, got {}",
                self.len
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FgnMethod {
    CirculantEmbedding,
    SpectralSynthesis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fgn {
    pub values: Vec<f64>,
    pub method: FgnMethod,
}

fn complex_normal(rng: &mut SeededRng) -> Complex<f64> {
    Complex::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
}

fn circulant_embedding(hurst: f64, len: usize, rng: &mut SeededRng) -> Option<Vec<f64>> {
    let m = 2 * len;
    let mut row: Vec<Complex<f64>> = (0..m)
        .map(|j| {
            let lag = if j <= len { j } else { m - j };
            Complex::new(fgn_autocovariance(hurst, lag), 0.0)
        })
        .collect();
    let mut fourier = Fourier::new(m);
    fourier.forward(&mut row);
    let tol = 1e-10 * row[0].re.abs().max(1.0);
    if row.iter().any(|c| c.re < -tol) {
        return None;
    }
    let mut buf: Vec<Complex<f64>> = row
        .iter()
        .map(|c| complex_normal(rng) * (c.re.max(0.0) / m as f64).sqrt())
        .collect();
    fourier.forward(&mut buf);
    Some(buf[..len].iter().map(|c| c.re).collect())
}

fn spectral_synthesis(hurst: f64, len: usize, rng: &mut SeededRng) -> Vec<f64> {
    let mut buf = vec![Complex::new(0.0, 0.0); len];
    let half = len / 2;
    let density = |k: usize| (k as f64 / len as f64).powf(1.0 - 2.0 * hurst);
    let mut power = 0.0;
    for k in 1..=half {
        let s = density(k);
        if k == half {
            let a: f64 = StandardNormal.sample(rng);
            buf[k] = Complex::new(a * s.sqrt(), 0.0);
            power += s;
        } else {
            let c = complex_normal(rng) * (s / 2.0).sqrt();
            buf[k] = c;
            buf[len - k] = c.conj();
            power += 2.0 * s;
        }
    }
    Fourier::new(len).inverse(&mut buf);
    let scale = 1.0 / power.sqrt();
    buf.iter().map(|c| c.re * scale).collect()
}

/// Stationary Gaussian series with the autocovariance of unit-variance
/// fractional Gaussian noise (Davies-Harte circulant embedding).
pub fn generate_fgn(spec: &FgnSpec, rng: &mut SeededRng) -> Result<Fgn> {
    spec.validate()?;
    match spec.strategy {
        FgnStrategy::Spectral => Ok(Fgn {
            values: spectral_synthesis(spec.hurst, spec.len, rng),
            method: FgnMethod::SpectralSynthesis,
        }),
        strategy => match circulant_embedding(spec.hurst, spec.len, rng) {
            Some(values) => Ok(Fgn {
                values,
                method: FgnMethod::CirculantEmbedding,
            }),
            None if strategy == FgnStrategy::ExactWithFallback => Ok(Fgn {
                values: spectral_synthesis(spec.hurst, spec.len, rng),
                method: FgnMethod::SpectralSynthesis,
            }),
            None => Err(Error::Degenerate(
                "circulant embedding has negative eigenvalues".into(),
            )),
        },
    }
}

/// fGn of arbitrary length: generated at the next power of two (at least 64)
/// and truncated, which keeps the covariance exact.
pub fn fgn_of_len(hurst: f64, len: usize, rng: &mut SeededRng) -> Result<Fgn> {
    let full = len.next_power_of_two().max(64);
    let mut fgn = generate_fgn(&FgnSpec::new(hurst, full), rng)?;
    fgn.values.truncate(len);
    Ok(fgn)
}

/// Exact scaling exponents of the binomial cascade,
/// `tau(q) = -log2(p^q + (1-p)^q)`.
pub fn cascade_tau(p: f64, q: f64) -> f64 {
    -(p.powf(q) + (1.0 - p).powf(q)).log2()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CascadeSpec {
    pub p: f64,
    pub depth: u32,
}

pub const MAX_CASCADE_DEPTH: u32 = 24;

/// How the multipliers `p` and `1 - p` are assigned to the two children of
/// each node. Every arrangement yields the same multiset of cell masses at
/// every level, hence the same exponents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branching {
    /// The left child gets `p` on even levels and `1 - p` on odd levels.
    /// The series ends then carry typical rather than extreme masses.
    Alternating,
    /// The left child always gets `p`.
    LeftLight,
    /// Each node independently swaps its children with probability 1/2.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cascade {
    pub masses: Vec<f64>,
    pub q: Vec<f64>,
    pub tau_analytic: Vec<f64>,
}

/// Leaf masses of a depth-`depth` binomial cascade (length `2^depth`, total 1)
/// together with the analytic `tau(q)` on `q_grid`. `rng` is only consulted
/// for [`Branching::Random`].
pub fn binomial_cascade(
    spec: &CascadeSpec,
    branching: Branching,
    q_grid: &[f64],
    rng: Option<&mut SeededRng>,
) -> Result<Cascade> {
    if !(spec.p > 0.0 && spec.p <= 0.5) {
        return Err(Error::InvalidParameter(format!(
            "cascade weight must lie in (0, 0.5], got {}",
            spec.p
        )));
    }
    if spec.depth > MAX_CASCADE_DEPTH {
        return Err(Error::InvalidParameter(format!(
            "cascade depth {} exceeds {MAX_CASCADE_DEPTH}",
            spec.depth
        )));
    }
    let mut rng = match (branching, rng) {
        (Branching::Random, None) => {
            return Err(Error::InvalidParameter("random branching needs an rng".into()))
        }
        (_, r) => r,
    };
    let (p, w) = (spec.p, 1.0 - spec.p);
    let mut masses = vec![1.0];
    for level in 0..spec.depth {
        let mut next = Vec::with_capacity(masses.len() * 2);
        for &m in &masses {
            let left_light = match branching {
                Branching::Alternating => level % 2 == 0,
                Branching::LeftLight => true,
                Branching::Random => rng.as_deref_mut().expect("checked above").random::<bool>(),
            };
            let (a, b) = if left_light { (p, w) } else { (w, p) };
            next.push(m * a);
            next.push(m * b);
        }
        masses = next;
    }
    Ok(Cascade {
        masses,
        q: q_grid.to_vec(),
        tau_analytic: q_grid.iter().map(|&q| cascade_tau(spec.p, q)).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HurstEstimate {
    pub hurst: f64,
    pub stderr: f64,
    pub scales: Vec<usize>,
    pub fluctuation: Vec<f64>,
}

pub const MIN_HURST_LEN: usize = 1024;

fn detrended_variance(segment: &[f64]) -> f64 {
    let s = segment.len() as f64;
    let x_mean = (s - 1.0) / 2.0;
    let sxx = s * (s * s - 1.0) / 12.0;
    let y_mean = segment.iter().sum::<f64>() / s;
    let (mut syy, mut sxy) = (0.0, 0.0);
    for (i, &y) in segment.iter().enumerate() {
        let dy = y - y_mean;
        syy += dy * dy;
        sxy += (i as f64 - x_mean) * dy;
    }
    ((syy - sxy * sxy / sxx) / s).max(0.0)
}

/// Order-1 detrended fluctuation analysis. Segments are taken from both
/// ends of the profile; the fluctuation function is fitted over ~20
/// log-spaced scales in `[16, N/8]`.
pub fn estimate_hurst(values: &[f64]) -> Result<HurstEstimate> {
    let n = values.len();
    if n < MIN_HURST_LEN {
        return Err(Error::TooShort {
            needed: MIN_HURST_LEN,
            got: n,
        });
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let profile: Vec<f64> = values
        .iter()
        .scan(0.0, |acc, &v| {
            *acc += v - mean;
            Some(*acc)
        })
        .collect();

    let (lo, hi) = (16f64.ln(), (n as f64 / 8.0).ln());
    let mut scales: Vec<usize> = (0..20)
        .map(|i| (lo + (hi - lo) * i as f64 / 19.0).exp().round() as usize)
        .collect();
    scales.dedup();

    let mut fluctuation = Vec::with_capacity(scales.len());
    for &s in &scales {
        let segments = n / s;
        let mut total = 0.0;
        for k in 0..segments {
            total += detrended_variance(&profile[k * s..(k + 1) * s]);
            total += detrended_variance(&profile[n - (k + 1) * s..n - k * s]);
        }
        fluctuation.push((total / (2 * segments) as f64).sqrt());
    }
    if fluctuation.iter().any(|&f| !(f > 0.0)) {
        return Err(Error::Degenerate("constant series has no fluctuations".into()));
    }
    let x: Vec<f64> = scales.iter().map(|&s| (s as f64).ln()).collect();
    let y: Vec<f64> = fluctuation.iter().map(|f| f.ln()).collect();
    let fit = ols(&x, &y)?;
    Ok(HurstEstimate {
        hurst: fit.slope,
        stderr: fit.slope_stderr,
        scales,
        fluctuation,
    })
}
