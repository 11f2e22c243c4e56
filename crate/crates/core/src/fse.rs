//! Finite-size-effect calibration: scan the singularity width of surrogates
//! carrying only linear long memory over a grid of Hurst indices and lengths,
//! then fit the power law in `L` and the linear laws of its coefficients.

use serde::{Deserialize, Serialize};

use crate::analysis::{delta_alpha, AnalysisConfig};
use crate::ensemble::run_members;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, derived};
use crate::stats::{mean_std, ols, LinearFit};
use crate::surrogates::{amplitude_target, iaaft, sample_distribution, DistributionSpec, IaaftOptions};
use crate::synthetic::fgn_of_len;

/// Default fit window on `L`.
pub const DEFAULT_SCALING_WINDOW: (f64, f64) = (1000.0, 138_950.0);

/// IAAFT cap for the desk scan. Longer runs change the widths far less than
/// the ensemble spread.
pub const DESK_IAAFT_MAX_ITER: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FseScanConfig {
    pub pdf: DistributionSpec,
    pub hurst: Vec<f64>,
    pub lengths: Vec<usize>,
    pub ensemble: usize,
    pub seed: u64,
    pub iaaft: IaaftOptions,
    /// Analysis settings per member; the seed field is replaced by a derived one.
    pub analysis: AnalysisConfig,
    pub scaling_window: (f64, f64),
}

impl FseScanConfig {
    /// Desk-scale scan: five Hurst indices, lengths `2^10..2^17`, 20 members.
    pub fn desk(pdf: DistributionSpec, seed: u64) -> Self {
        Self {
            pdf,
            hurst: vec![0.2, 0.35, 0.5, 0.65, 0.8],
            lengths: vec![1 << 10, 1 << 12, 1 << 14, 1 << 16, 1 << 17],
            ensemble: 20,
            seed,
            iaaft: IaaftOptions {
                max_iter: DESK_IAAFT_MAX_ITER,
                ..IaaftOptions::default()
            },
            analysis: AnalysisConfig::default(),
            scaling_window: DEFAULT_SCALING_WINDOW,
        }
    }

    /// Full grid: `H = 0.1..0.9`, 13 lengths log-spaced over `[10^3, 10^7]`,
    /// 100 members. Hours of compute.
    pub fn full(pdf: DistributionSpec, seed: u64) -> Self {
        Self {
            hurst: (1..=9).map(|i| i as f64 / 10.0).collect(),
            lengths: (0..13)
                .map(|i| 10f64.powf(3.0 + i as f64 / 3.0).round() as usize)
                .collect(),
            ensemble: 100,
            iaaft: IaaftOptions::default(),
            ..Self::desk(pdf, seed)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FseRow {
    pub hurst: f64,
    pub length: usize,
    pub mean: f64,
    pub std: f64,
    pub ensemble: usize,
    pub failures: usize,
    /// Members whose IAAFT reached a rank fixed point.
    pub converged: usize,
    pub mean_spectrum_mismatch: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FseTable {
    pub pdf: String,
    pub scaling_window: (f64, f64),
    pub rows: Vec<FseRow>,
    #[serde(default)]
    pub failures: Vec<String>,
}

impl FseTable {
    pub fn hurst_values(&self) -> Vec<f64> {
        let mut h: Vec<f64> = self.rows.iter().map(|r| r.hurst).collect();
        h.sort_by(f64::total_cmp);
        h.dedup();
        h
    }

    pub fn lengths(&self) -> Vec<usize> {
        let mut l: Vec<usize> = self.rows.iter().map(|r| r.length).collect();
        l.sort_unstable();
        l.dedup();
        l
    }

    pub fn get(&self, hurst: f64, length: usize) -> Option<&FseRow> {
        self.rows.iter().find(|r| r.hurst == hurst && r.length == length)
    }

    fn in_window(&self, length: usize) -> bool {
        let l = length as f64;
        l >= self.scaling_window.0 && l <= self.scaling_window.1
    }

    /// `H,L,mean,std` table.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("hurst,length,mean,std\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{}\n", r.hurst, r.length, r.mean, r.std));
        }
        out
    }
}

struct MemberResult {
    delta_alpha: f64,
    converged: bool,
    mismatch: f64,
}

fn scan_member(cfg: &FseScanConfig, hurst: f64, length: usize, seed: u64) -> Result<MemberResult> {
    let values = sample_distribution(&cfg.pdf, length, &mut derived(seed, &[0]))?;
    let fgn = fgn_of_len(hurst, length, &mut derived(seed, &[1]))?;
    let target = amplitude_target(&values, &fgn.values)?;
    let (surrogate, report) = iaaft(&values, &target, &mut derived(seed, &[2]), cfg.iaaft)?;
    let analysis = cfg.analysis.clone().with_seed(derive_seed(seed, &[3]));
    Ok(MemberResult {
        delta_alpha: delta_alpha(&surrogate, &analysis)?,
        converged: report.converged,
        mismatch: report.spectrum_mismatch,
    })
}

/// Singularity widths of IAAFT surrogates with the calibration PDF and fGn
/// amplitudes, for every `(H, L)` on the grid. Member `k` of cell `(i, j)`
/// uses the seed `derive_seed(seed, [i, j, k])`.
pub fn fse_scan(cfg: &FseScanConfig) -> Result<FseTable> {
    cfg.pdf.validate()?;
    if cfg.ensemble == 0 {
        return Err(Error::InvalidParameter("ensemble must be positive".into()));
    }
    if let Some(&h) = cfg.hurst.iter().find(|&&h| !(h > 0.0 && h < 1.0)) {
        return Err(Error::InvalidParameter(format!("Hurst index {h} outside (0, 1)")));
    }
    let cells: Vec<(usize, usize)> = (0..cfg.hurst.len())
        .flat_map(|i| (0..cfg.lengths.len()).map(move |j| (i, j)))
        .collect();
    let jobs = cells.len() * cfg.ensemble;
    let results = run_members(jobs, |job| {
        let (i, j) = cells[job / cfg.ensemble];
        let k = job % cfg.ensemble;
        let seed = derive_seed(cfg.seed, &[i as u64, j as u64, k as u64]);
        scan_member(cfg, cfg.hurst[i], cfg.lengths[j], seed)
    });

    let mut rows = Vec::with_capacity(cells.len());
    let mut failures = Vec::new();
    for (c, chunk) in results.chunks(cfg.ensemble).enumerate() {
        let (i, j) = cells[c];
        let (hurst, length) = (cfg.hurst[i], cfg.lengths[j]);
        let mut widths = Vec::new();
        let mut converged = 0;
        let mut mismatch = 0.0;
        for (k, r) in chunk.iter().enumerate() {
            match r {
                Ok(m) => {
                    widths.push(m.delta_alpha);
                    converged += usize::from(m.converged);
                    mismatch += m.mismatch;
                }
                Err(e) => failures.push(format!("H={hurst} L={length} member {k}: {e}")),
            }
        }
        let (mean, std) = mean_std(&widths);
        rows.push(FseRow {
            hurst,
            length,
            mean,
            std,
            ensemble: widths.len(),
            failures: chunk.len() - widths.len(),
            converged,
            mean_spectrum_mismatch: mismatch / widths.len().max(1) as f64,
        });
    }
    Ok(FseTable {
        pdf: cfg.pdf.describe(),
        scaling_window: cfg.scaling_window,
        rows,
        failures,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerExponent {
    pub hurst: f64,
    pub a: f64,
    pub stderr: f64,
    pub points: usize,
}

pub const MIN_LENGTHS_PER_FIT: usize = 4;
pub const MIN_HURST_PER_FIT: usize = 4;

/// Slope of `ln(mean width)` against `ln L` inside the scaling window, per `H`.
pub fn fit_power_exponent(table: &FseTable) -> Result<Vec<PowerExponent>> {
    table
        .hurst_values()
        .into_iter()
        .map(|h| {
            let rows: Vec<&FseRow> = table
                .rows
                .iter()
                .filter(|r| r.hurst == h && table.in_window(r.length) && r.mean > 0.0)
                .collect();
            if rows.len() < MIN_LENGTHS_PER_FIT {
                return Err(Error::InsufficientPoints {
                    needed: MIN_LENGTHS_PER_FIT,
                    got: rows.len(),
                });
            }
            let x: Vec<f64> = rows.iter().map(|r| (r.length as f64).ln()).collect();
            let y: Vec<f64> = rows.iter().map(|r| r.mean.ln()).collect();
            let fit = ols(&x, &y)?;
            Ok(PowerExponent {
                hurst: h,
                a: fit.slope,
                stderr: fit.slope_stderr,
                points: rows.len(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanPrefactor {
    pub hurst: f64,
    /// `<g(H, L)>` over the scaling window with `a = 2H - 2` imposed.
    pub mean_g: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FseFit {
    pub exponents: Vec<PowerExponent>,
    /// `a` against `H`; expected slope 2 and intercept -2.
    pub exponent_line: LinearFit,
    pub excluded_hurst: Vec<f64>,
    pub prefactors: Vec<MeanPrefactor>,
    /// `ln <g>` against `H`.
    pub prefactor_line: LinearFit,
}

/// Hurst indices left out of the `a(H)` regression by default.
pub const DEFAULT_EXCLUDED_HURST: [f64; 1] = [0.1];

/// Linear laws `a(H)` and `ln <g(H)>`. `g = width * L^-(2H-2)` is averaged
/// over the lengths in the scaling window.
pub fn fit_linear_laws(table: &FseTable, exponents: &[PowerExponent], exclude: &[f64]) -> Result<FseFit> {
    let kept: Vec<&PowerExponent> = exponents
        .iter()
        .filter(|e| !exclude.iter().any(|x| (x - e.hurst).abs() < 1e-9))
        .collect();
    if kept.len() < MIN_HURST_PER_FIT {
        return Err(Error::InsufficientPoints {
            needed: MIN_HURST_PER_FIT,
            got: kept.len(),
        });
    }
    let hx: Vec<f64> = kept.iter().map(|e| e.hurst).collect();
    let ay: Vec<f64> = kept.iter().map(|e| e.a).collect();
    let exponent_line = ols(&hx, &ay)?;

    let mut prefactors = Vec::new();
    for h in table.hurst_values() {
        let g: Vec<f64> = table
            .rows
            .iter()
            .filter(|r| r.hurst == h && table.in_window(r.length) && r.mean > 0.0)
            .map(|r| r.mean * (r.length as f64).powf(-(2.0 * h - 2.0)))
            .collect();
        if !g.is_empty() {
            prefactors.push(MeanPrefactor {
                hurst: h,
                mean_g: g.iter().sum::<f64>() / g.len() as f64,
                points: g.len(),
            });
        }
    }
    if prefactors.len() < MIN_HURST_PER_FIT {
        return Err(Error::InsufficientPoints {
            needed: MIN_HURST_PER_FIT,
            got: prefactors.len(),
        });
    }
    let gx: Vec<f64> = prefactors.iter().map(|p| p.hurst).collect();
    let gy: Vec<f64> = prefactors.iter().map(|p| p.mean_g.ln()).collect();
    let prefactor_line = ols(&gx, &gy)?;
    Ok(FseFit {
        exponents: exponents.to_vec(),
        exponent_line,
        excluded_hurst: exclude.to_vec(),
        prefactors,
        prefactor_line,
    })
}

/// `exp(10(1-H)) * L^(-2(1-H))`, the closed form valid for moderate `L`.
pub fn closed_form_fse(hurst: f64, length: f64) -> f64 {
    (10.0 * (1.0 - hurst)).exp() * length.powf(-2.0 * (1.0 - hurst))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PredictionPath {
    Table,
    Fit,
    ClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FsePrediction {
    pub value: f64,
    pub path: PredictionPath,
}

#[derive(Debug, Clone, Copy)]
pub enum FseSource<'a> {
    Table(&'a FseTable),
    Fit(&'a FseFit),
    ClosedForm,
}

fn bracket<T: Copy + PartialOrd>(grid: &[T], x: T) -> Option<(usize, usize)> {
    if grid.is_empty() || x < grid[0] || x > grid[grid.len() - 1] {
        return None;
    }
    let hi = grid.partition_point(|&g| g < x);
    if grid[hi] == x {
        Some((hi, hi))
    } else {
        Some((hi - 1, hi))
    }
}

fn interpolate_table(table: &FseTable, hurst: f64, length: f64) -> Option<f64> {
    let hs = table.hurst_values();
    let ls: Vec<f64> = table.lengths().iter().map(|&l| l as f64).collect();
    let (h0, h1) = bracket(&hs, hurst)?;
    let (l0, l1) = bracket(&ls, length)?;
    let cell = |i: usize, j: usize| table.get(hs[i], ls[j] as usize).map(|r| r.mean);
    let weight = |a: f64, b: f64, x: f64| if a == b { 0.0 } else { (x - a) / (b - a) };
    let wh = weight(hs[h0], hs[h1], hurst);
    let wl = weight(ls[l0].ln(), ls[l1].ln(), length.ln());
    let along_l = |i: usize| -> Option<f64> {
        let a = cell(i, l0)?;
        if wl == 0.0 {
            return Some(a);
        }
        Some(a + wl * (cell(i, l1)? - a))
    };
    let lo = along_l(h0)?;
    if wh == 0.0 {
        return Some(lo);
    }
    Some(lo + wh * (along_l(h1)? - lo))
}

/// Finite-size width expected for a linear-memory series of Hurst index
/// `hurst` and length `length`. The table is interpolated bilinearly in
/// `(H, ln L)`; queries outside it use the closed form when `fallback` is set.
pub fn fse_predict(hurst: f64, length: f64, source: FseSource<'_>, fallback: bool) -> Result<FsePrediction> {
    if !(hurst > 0.0 && hurst < 1.0) {
        return Err(Error::InvalidParameter(format!("Hurst index {hurst} outside (0, 1)")));
    }
    if !(length > 0.0) {
        return Err(Error::InvalidParameter(format!("length {length} must be positive")));
    }
    let closed = || FsePrediction {
        value: closed_form_fse(hurst, length),
        path: PredictionPath::ClosedForm,
    };
    match source {
        FseSource::ClosedForm => Ok(closed()),
        FseSource::Fit(fit) => {
            let a = fit.exponent_line.intercept + fit.exponent_line.slope * hurst;
            let g = (fit.prefactor_line.intercept + fit.prefactor_line.slope * hurst).exp();
            Ok(FsePrediction {
                value: g * length.powf(a),
                path: PredictionPath::Fit,
            })
        }
        FseSource::Table(table) => match interpolate_table(table, hurst, length) {
            Some(value) => Ok(FsePrediction {
                value,
                path: PredictionPath::Table,
            }),
            None if fallback => Ok(closed()),
            None => Err(Error::OutOfRange(format!(
                "H={hurst}, L={length} outside the calibrated table"
            ))),
        },
    }
}
