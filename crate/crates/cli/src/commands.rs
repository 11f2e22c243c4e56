//! Subcommand implementations.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use mfcomp::analysis::{analyze, partition_csv, q_grid, AnalysisConfig, IntervalRule, ScaleGrid, SpectrumExport};
use mfcomp::decomposition::{decompose, family_sweep, ComponentReport, DecomposeConfig, Family};
use mfcomp::ensemble::Estimate;
use mfcomp::fse::{fit_linear_laws, fit_power_exponent, fse_scan, FseFit, FseScanConfig, FseTable, DEFAULT_EXCLUDED_HURST};
use mfcomp::rng::{derive_seed, derived};
use mfcomp::series::{load_series_csv, log_returns, volatility, Column, Series, SeriesKind};
use mfcomp::surrogates::{
    linear_memory_surrogate, rank_remap, sample_distribution, shuffle, DistributionSpec, IaaftOptions, IaaftReport,
};
use mfcomp::synthetic::{binomial_cascade, fgn_of_len, Branching, CascadeSpec, FgnMethod};
use serde::{Deserialize, Serialize};

use crate::args::*;
use crate::error::{CliError, CliResult};
use crate::output::{series_csv, FileDigest, OutputDir, RunManifest, SeedSource, MANIFEST_SCHEMA_VERSION};

/// Environment variable overriding the worker thread count.
pub const THREADS_ENV: &str = "MFCOMP_THREADS";

pub fn ci_mode() -> bool {
    std::env::var("CI").map(|v| !v.is_empty() && v != "0" && v != "false").unwrap_or(false)
}

pub fn resolve_seed(seed: Option<u64>) -> CliResult<(u64, SeedSource)> {
    match seed {
        Some(s) => Ok((s, SeedSource::Given)),
        None if ci_mode() => Err(CliError::Usage("--seed is required when CI is set".into())),
        None => {
            let nanos = std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_nanos() as u64)
                .unwrap_or(0);
            let seed = derive_seed(nanos, &[u64::from(std::process::id())]);
            eprintln!("generated seed {seed}");
            Ok((seed, SeedSource::Generated))
        }
    }
}

pub fn configure_threads() -> CliResult<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
        // A second call in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Floats from `start:stop:step` (inclusive) or a comma list.
pub fn parse_grid(text: &str) -> CliResult<Vec<f64>> {
    let bad = || CliError::Usage(format!("cannot parse grid {text:?}"));
    if text.contains(':') {
        let parts: Vec<f64> = text
            .split(':')
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<CliResult<_>>()?;
        let [start, stop, step] = parts[..] else { return Err(bad()) };
        if !(step > 0.0) || stop < start {
            return Err(bad());
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize;
        Ok((0..=count)
            .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
            .collect())
    } else {
        text.split(',')
            .filter(|p| !p.trim().is_empty())
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
            .collect()
    }
}

fn parse_list<T: std::str::FromStr>(text: &str) -> CliResult<Vec<T>> {
    text.split(',')
        .map(|p| {
            p.trim()
                .parse::<T>()
                .map_err(|_| CliError::Usage(format!("cannot parse list {text:?}")))
        })
        .collect()
}

pub fn analysis_config(a: &AnalysisArgs, seed: u64) -> CliResult<AnalysisConfig> {
    let parts: Vec<f64> = a
        .q_range
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("--q-range expects min:max:step, got {:?}", a.q_range)))?;
    let [qmin, qmax, qstep] = parts[..] else {
        return Err(CliError::Usage(format!("--q-range expects min:max:step, got {:?}", a.q_range)));
    };
    let cfg = AnalysisConfig {
        q_grid: q_grid(qmin, qmax, qstep).map_err(|e| CliError::Usage(e.to_string()))?,
        scales: ScaleGrid::Fractional {
            min_fraction: a.min_fraction,
            max_fraction: a.max_fraction,
            points: a.scale_points,
        },
        intervals: if a.exhaustive {
            IntervalRule::Exhaustive
        } else {
            IntervalRule::Coverage {
                factor: a.m_factor,
                min_count: a.m_min,
            }
        },
        fit_range: None,
        seed,
    };
    cfg.validate_q_grid().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(cfg)
}

pub struct LoadedInput {
    pub series: Series,
    pub returns: Option<Series>,
    pub digest: FileDigest,
}

fn column(text: &str) -> Column {
    text.parse().expect("column parsing is infallible")
}

pub fn load_input(args: &InputArgs) -> CliResult<LoadedInput> {
    let digest = FileDigest::of(&args.input)?;
    let col = column(&args.column);
    let (series, returns) = match args.input_kind {
        InputKind::Price => {
            let prices = load_series_csv(&args.input, &col, SeriesKind::Price)?;
            let r = log_returns(&prices)?;
            (volatility(&r), Some(r))
        }
        InputKind::Volatility => (load_series_csv(&args.input, &col, SeriesKind::Volatility)?, None),
        InputKind::Positive => (load_series_csv(&args.input, &col, SeriesKind::GenericPositive)?, None),
    };
    Ok(LoadedInput { series, returns, digest })
}

fn load_values(path: &Path, col: &str) -> CliResult<(Vec<f64>, FileDigest)> {
    let digest = FileDigest::of(path)?;
    let s = load_series_csv(path, &column(col), SeriesKind::GenericPositive)?;
    Ok((s.into_values(), digest))
}

/// Distribution from `--dist/--param/--reference`; `fallback` supplies the
/// empirical reference when none is given.
fn distribution(args: &DistArgs, fallback: Option<&[f64]>, inputs: &mut Vec<FileDigest>) -> CliResult<DistributionSpec> {
    let params = match &args.param {
        Some(p) => parse_list::<f64>(p)?,
        None => Vec::new(),
    };
    let need = |n: usize, what: &str| -> CliResult<()> {
        if params.len() == n {
            Ok(())
        } else {
            Err(CliError::Usage(format!("--param expects {what}")))
        }
    };
    let spec = match args.dist.unwrap_or(Dist::Empirical) {
        Dist::Empirical => {
            let reference = match (&args.reference, fallback) {
                (Some(path), _) => {
                    let (values, digest) = load_values(path, "0")?;
                    inputs.push(digest);
                    values
                }
                (None, Some(values)) => values.to_vec(),
                (None, None) => return Err(CliError::Usage("empirical distribution needs --reference or --input".into())),
            };
            DistributionSpec::Empirical { reference }
        }
        Dist::Normal => {
            need(2, "mu,sigma")?;
            DistributionSpec::GaussianAbs { mu: params[0], sigma: params[1] }
        }
        Dist::Student => {
            need(1, "gamma")?;
            DistributionSpec::StudentAbs { gamma: params[0] }
        }
        Dist::Weibull => {
            need(1, "beta")?;
            DistributionSpec::Weibull { beta: params[0] }
        }
    };
    spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(spec)
}

/// Everything a subcommand hands back for the manifest.
pub struct RunRecord {
    pub command: &'static str,
    pub config: serde_json::Value,
    pub seed: u64,
    pub seed_source: SeedSource,
    pub inputs: Vec<FileDigest>,
}

fn to_value<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("config serializes")
}

fn analyze_cmd(a: &AnalyzeArgs, out: &mut OutputDir) -> CliResult<RunRecord> {
    let (seed, seed_source) = resolve_seed(a.common.seed)?;
    let input = load_input(&a.input)?;
    let cfg = analysis_config(&a.analysis, seed)?;
    let result = analyze(input.series.values(), &cfg)?;
    let export = SpectrumExport::new(&result, &cfg);
    if a.common.emit.json() {
        out.write_json("spectrum.json", &export)?;
    }
    if a.common.emit.csv() {
        out.write("spectrum.csv", export.to_csv())?;
        out.write("partition.csv", partition_csv(&result.table))?;
    }
    Ok(RunRecord {
        command: "analyze",
        config: to_value(&cfg),
        seed,
        seed_source,
        inputs: vec![input.digest],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateMember {
    pub file: String,
    pub seed: u64,
    pub iaaft: Option<IaaftReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateSet {
    pub kind: String,
    pub distribution: Option<String>,
    pub members: Vec<SurrogateMember>,
}

fn surrogate_cmd(a: &SurrogateArgs, out: &mut OutputDir) -> CliResult<RunRecord> {
    let (seed, seed_source) = resolve_seed(a.common.seed)?;
    let input = load_input(&a.input)?;
    let mut inputs = vec![input.digest];
    let values = input.series.values();
    let spec = match a.kind {
        SurrogateKind::Remap => Some(distribution(&a.dist, Some(values), &mut inputs)?),
        _ => None,
    };
    let options = IaaftOptions {
        max_iter: a.iaaft_max_iter,
        ..IaaftOptions::default()
    };
    let mut members = Vec::with_capacity(a.count);
    for k in 0..a.count {
        let member_seed = derive_seed(seed, &[k as u64]);
        let mut rng = derived(member_seed, &[]);
        let (series, report) = match a.kind {
            SurrogateKind::Shuffle => (shuffle(values, &mut rng), None),
            SurrogateKind::Lm => {
                let (s, r) = linear_memory_surrogate(values, &mut rng, options)?;
                (s, Some(r))
            }
            SurrogateKind::Remap => (rank_remap(values, spec.as_ref().expect("set above"), &mut rng)?, None),
        };
        let file = format!("surrogate_{k:04}.csv");
        out.write(&file, series_csv(&series))?;
        members.push(SurrogateMember { file, seed: member_seed, iaaft: report });
    }
    let set = SurrogateSet {
        kind: format!("{:?}", a.kind).to_lowercase(),
        distribution: spec.as_ref().map(DistributionSpec::describe),
        members,
    };
    out.write_json("surrogates.json", &set)?;
    Ok(RunRecord {
        command: "surrogate",
        config: serde_json::json!({
            "kind": set.kind,
            "distribution": spec,
            "count": a.count,
            "iaaft": options,
        }),
        seed,
        seed_source,
        inputs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthInfo {
    pub kind: String,
    pub len: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fgn_method: Option<FgnMethod>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cascade_q: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cascade_tau: Option<Vec<f64>>,
}

fn synth_cmd(a: &SynthArgs, out: &mut OutputDir) -> CliResult<RunRecord> {
    let (seed, seed_source) = resolve_seed(a.common.seed)?;
    let mut inputs = Vec::new();
    let mut info = SynthInfo {
        kind: format!("{:?}", a.kind).to_lowercase(),
        len: 0,
        fgn_method: None,
        cascade_q: None,
        cascade_tau: None,
    };
    let values = match a.kind {
        SynthKind::Fgn => {
            let f = fgn_of_len(a.hurst, a.len, &mut derived(seed, &[0]))?;
            info.fgn_method = Some(f.method);
            f.values
        }
        SynthKind::Cascade => {
            let branching = match a.branching {
                BranchingArg::Alternating => Branching::Alternating,
                BranchingArg::LeftLight => Branching::LeftLight,
                BranchingArg::Random => Branching::Random,
            };
            let q = mfcomp::analysis::default_q_grid();
            let c = binomial_cascade(
                &CascadeSpec { p: a.p, depth: a.depth },
                branching,
                &q,
                Some(&mut derived(seed, &[0])),
            )?;
            info.cascade_q = Some(c.q);
            info.cascade_tau = Some(c.tau_analytic);
            c.masses
        }
        SynthKind::LongMemory => {
            let spec = distribution(&a.dist, None, &mut inputs)?;
            let order = fgn_of_len(a.hurst, a.len, &mut derived(seed, &[0]))?;
            info.fgn_method = Some(order.method);
            rank_remap(&order.values, &spec, &mut derived(seed, &[1]))?
        }
        SynthKind::Iid => {
            let spec = distribution(&a.dist, None, &mut inputs)?;
            sample_distribution(&spec, a.len, &mut derived(seed, &[0]))?
        }
    };
    info.len = values.len();
    out.write("series.csv", series_csv(&values))?;
    out.write_json("synth.json", &info)?;
    Ok(RunRecord {
        command: "synth",
        config: serde_json::json!({
            "kind": info.kind,
            "hurst": a.hurst,
            "len": a.len,
            "p": a.p,
            "depth": a.depth,
            "branching": format!("{:?}", a.branching).to_lowercase(),
            "dist": a.dist.dist.map(|d| format!("{d:?}").to_lowercase()),
            "param": a.dist.param,
        }),
        seed,
        seed_source,
        inputs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FseOutput {
    pub table: FseTable,
    pub fit: Option<FseFit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_error: Option<String>,
}

fn fse_cmd(a: &FseArgs, out: &mut OutputDir) -> CliResult<RunRecord> {
    let (seed, seed_source) = resolve_seed(a.common.seed)?;
    let mut inputs = Vec::new();
    let reference = match &a.input {
        Some(path) => {
            let (values, digest) = load_values(path, &a.column)?;
            inputs.push(digest);
            Some(values)
        }
        None => None,
    };
    let pdf = distribution(&a.dist, reference.as_deref(), &mut inputs)?;
    let mut cfg = if a.full { FseScanConfig::full(pdf, seed) } else { FseScanConfig::desk(pdf, seed) };
    if let Some(h) = &a.hurst {
        cfg.hurst = parse_list(h)?;
    }
    if let Some(l) = &a.lengths {
        cfg.lengths = parse_list(l)?;
    }
    if let Some(e) = a.ensemble {
        cfg.ensemble = e;
    }
    if let Some(m) = a.iaaft_max_iter {
        cfg.iaaft.max_iter = m;
    }
    cfg.analysis = analysis_config(&a.analysis, 0)?;
    let table = fse_scan(&cfg)?;
    let fitted = fit_power_exponent(&table).and_then(|exps| fit_linear_laws(&table, &exps, &DEFAULT_EXCLUDED_HURST));
    let (fit, fit_error) = match fitted {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    if a.common.emit.json() {
        out.write_json("fse_table.json", &FseOutput { table: table.clone(), fit: fit.clone(), fit_error })?;
    }
    if a.common.emit.csv() {
        out.write("fse_table.csv", table.to_csv())?;
        if let Some(fit) = &fit {
            let mut text = String::from("hurst,a,a_stderr,mean_g\n");
            for e in &fit.exponents {
                let g = fit.prefactors.iter().find(|p| p.hurst == e.hurst).map(|p| p.mean_g);
                text.push_str(&format!("{},{},{},{}\n", e.hurst, e.a, e.stderr, g.map(|g| g.to_string()).unwrap_or_default()));
            }
            out.write("fse_fit.csv", text)?;
        }
    }
    let mut config = to_value(&cfg);
    if let Some(pdf) = config.get_mut("pdf") {
        if let Some(r) = pdf.get_mut("reference") {
            *r = serde_json::json!(format!("{} values from input", reference.as_ref().map_or(0, Vec::len)));
        }
    }
    Ok(RunRecord {
        command: "fse-calibrate",
        config,
        seed,
        seed_source,
        inputs,
    })
}

fn decompose_config(a: &DecomposeArgs, seed: u64) -> CliResult<DecomposeConfig> {
    let gaussian_reference = match &a.gaussian {
        Some(text) => match parse_list::<f64>(text)?[..] {
            [mu, sigma] => Some((mu, sigma)),
            _ => return Err(CliError::Usage("--gaussian expects mu,sigma".into())),
        },
        None => None,
    };
    if a.ensemble == 0 {
        return Err(CliError::Usage("--ensemble must be positive".into()));
    }
    Ok(DecomposeConfig {
        analysis: analysis_config(&a.analysis, 0)?,
        ensemble: a.ensemble,
        seed,
        iaaft: IaaftOptions {
            max_iter: a.iaaft_max_iter,
            ..IaaftOptions::default()
        },
        gaussian_reference,
    })
}

fn load_fse_table(path: &Path, inputs: &mut Vec<FileDigest>) -> CliResult<FseTable> {
    inputs.push(FileDigest::of(path)?);
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    if let Ok(o) = serde_json::from_str::<FseOutput>(&text) {
        return Ok(o.table);
    }
    serde_json::from_str::<FseTable>(&text).map_err(|e| CliError::Input(format!("{}: not an FSE table: {e}", path.display())))
}

pub fn components_csv(r: &ComponentReport) -> String {
    let mut out = String::from("component,mean,std\n");
    out.push_str(&format!("delta_alpha,{},0\n", r.delta_alpha));
    let rows: [(&str, &Option<Estimate>); 10] = [
        ("fse", &r.delta_alpha_fse),
        ("sf", &r.delta_alpha_sf),
        ("eff", &r.delta_alpha_eff),
        ("norm", &r.delta_alpha_norm),
        ("norm_fse", &r.delta_alpha_norm_fse),
        ("norm_sf", &r.delta_alpha_norm_sf),
        ("norm_eff", &r.delta_alpha_norm_eff),
        ("pdf", &r.delta_alpha_pdf),
        ("nl", &r.delta_alpha_nl),
        ("sf_minus_norm_sf", &r.shuffle_difference),
    ];
    for (name, e) in rows {
        match e {
            Some(e) => out.push_str(&format!("{name},{},{}\n", e.mean, e.std)),
            None => out.push_str(&format!("{name},,\n")),
        }
    }
    out
}

fn decompose_cmd(a: &DecomposeArgs, out: &mut OutputDir) -> CliResult<RunRecord> {
    let (seed, seed_source) = resolve_seed(a.common.seed)?;
    let input = load_input(&a.input)?;
    let cfg = decompose_config(a, seed)?;
    let mut inputs = vec![input.digest];
    let table = a.fse_table.as_deref().map(|p| load_fse_table(p, &mut inputs)).transpose()?;
    let report = decompose(&input.series, input.returns.as_ref(), &cfg, table.as_ref())?;
    if a.common.emit.json() {
        out.write_json("report.json", &report)?;
    }
    if a.common.emit.csv() {
        out.write("components.csv", components_csv(&report))?;
    }
    for f in &report.failures {
        eprintln!("warning: {f}");
    }
    if report.delta_alpha_pdf.is_none() {
        return Err(CliError::Numeric("decomposition incomplete; partial report written".into()));
    }
    Ok(RunRecord {
        command: "decompose",
        config: to_value(&cfg),
        seed,
        seed_source,
        inputs,
    })
}

fn sweep_cmd(a: &SweepArgs, out: &mut OutputDir) -> CliResult<RunRecord> {
    let d = &a.decompose;
    let (seed, seed_source) = resolve_seed(d.common.seed)?;
    let input = load_input(&d.input)?;
    let cfg = decompose_config(d, seed)?;
    let family = match a.family {
        FamilyArg::Student => Family::Student,
        FamilyArg::Weibull => Family::Weibull,
    };
    let grid = match &a.grid {
        Some(g) => parse_grid(g)?,
        None => family.default_grid(),
    };
    for &p in &grid {
        family.spec(p).validate().map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let table = family_sweep(&input.series, input.returns.as_ref(), family, &grid, &cfg)?;
    if d.common.emit.json() {
        out.write_json("sweep.json", &table)?;
    }
    if d.common.emit.csv() {
        out.write("sweep.csv", table.to_csv())?;
    }
    for f in &table.failures {
        eprintln!("warning: {f}");
    }
    let mut config = to_value(&cfg);
    config["family"] = to_value(&family);
    config["grid"] = to_value(&grid);
    Ok(RunRecord {
        command: "sweep",
        config,
        seed,
        seed_source,
        inputs: vec![input.digest],
    })
}

fn common(command: &Command) -> &CommonArgs {
    match command {
        Command::Analyze(a) => &a.common,
        Command::Surrogate(a) => &a.common,
        Command::Synth(a) => &a.common,
        Command::FseCalibrate(a) => &a.common,
        Command::Decompose(a) => &a.common,
        Command::Sweep(a) => &a.decompose.common,
    }
}

/// Runs one parsed command and writes its outputs and manifest.
pub fn run(command: &Command, argv: Vec<String>) -> CliResult<RunManifest> {
    configure_threads()?;
    let started = Instant::now();
    let mut out = OutputDir::create(&common(command).out)?;
    let record = match command {
        Command::Analyze(a) => analyze_cmd(a, &mut out),
        Command::Surrogate(a) => surrogate_cmd(a, &mut out),
        Command::Synth(a) => synth_cmd(a, &mut out),
        Command::FseCalibrate(a) => fse_cmd(a, &mut out),
        Command::Decompose(a) => decompose_cmd(a, &mut out),
        Command::Sweep(a) => sweep_cmd(a, &mut out),
    }?;
    let versions = BTreeMap::from([
        ("mfcomp".to_string(), mfcomp::VERSION.to_string()),
        ("mfcomp-cli".to_string(), env!("CARGO_PKG_VERSION").to_string()),
    ]);
    out.finish(RunManifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        command: record.command.to_string(),
        argv,
        config: record.config,
        seed: record.seed,
        seed_source: record.seed_source,
        versions,
        inputs: record.inputs,
        outputs: Vec::new(),
        threads: rayon::current_num_threads(),
        duration_seconds: started.elapsed().as_secs_f64(),
    })
}
