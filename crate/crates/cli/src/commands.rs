//! Subcommand implementations.

use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};
use simcorr::benchmarks::{estimate as benchmark, BenchmarkKind};
use simcorr::distributions::{omega_n, quantile_table, TABLE_PROBABILITIES, TABLE_SAMPLE_SIZES};
use simcorr::garch::{fit_two_step, FitConfig, ModelKind};
use simcorr::inference::{correlation_ci, standardize, zero_correlation_test, CiOptions, Law, ScaleMethod, Target};
use simcorr::similarity::{equicorr_phi_inverse, gamma_hat, gamma_hat_bias_corrected};
use simcorr::simulation::{equicorrelated_family, mc_sampling_study, FamilyKind, StudyConfig, StudyEstimator};
use simcorr::special::normal_quantile;
use simcorr::MultivariateSample;

use crate::document::{emit, sibling, to_json_17, value, write_atomic, ResultDocument};
use crate::error::CliError;
use crate::panel::{sha256_hex, HeaderMode, PanelFile};

pub struct Input<'a> {
    pub file: &'a Path,
    pub delimiter: u8,
    pub header: HeaderMode,
}

impl Input<'_> {
    fn read(&self) -> Result<PanelFile, CliError> {
        PanelFile::read(self.file, self.delimiter, self.header)
    }

    fn describe(&self) -> Value {
        json!({
            "file": self.file.display().to_string(),
            "delimiter": (self.delimiter as char).to_string(),
            "header": format!("{:?}", self.header).to_lowercase(),
        })
    }
}

/// `none`, `sample` or `scales=s1,s2,...`.
pub fn parse_standardize(s: &str) -> Result<Option<ScaleMethod>, CliError> {
    match s {
        "none" => Ok(None),
        "sample" => Ok(Some(ScaleMethod::SampleStdev)),
        _ => {
            let list = s
                .strip_prefix("scales=")
                .ok_or_else(|| CliError::Usage(format!("--standardize expects none, sample or scales=..., got {s:?}")))?;
            let scales = parse_f64_list(list, "--standardize scales")?;
            if scales.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return Err(CliError::Usage("--standardize scales must be positive and finite".into()));
            }
            Ok(Some(ScaleMethod::External(scales)))
        }
    }
}

fn parse_f64_list(s: &str, flag: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("{flag}: cannot parse {tok:?}")))
        })
        .collect()
}

/// Comma list of sizes; `a-b` expands to an inclusive range.
pub fn parse_t_list(s: &str) -> Result<Vec<usize>, CliError> {
    let bad = |tok: &str| CliError::Usage(format!("--T-list: {tok:?} is not a sample size ≥ 1"));
    let mut out = Vec::new();
    for tok in s.split(',').map(str::trim) {
        let parse = |x: &str| x.trim().parse::<usize>().ok().filter(|v| *v >= 1).ok_or_else(|| bad(tok));
        match tok.split_once('-') {
            Some((a, b)) => {
                let (a, b) = (parse(a)?, parse(b)?);
                if a > b {
                    return Err(bad(tok));
                }
                out.extend(a..=b);
            }
            None => out.push(parse(tok)?),
        }
    }
    Ok(out)
}

fn check_level(level: f64) -> Result<(), CliError> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(CliError::Usage(format!("--level must lie strictly between 0 and 1, got {level}")))
    }
}

fn prepare(panel: &PanelFile, demean: bool, scale: &Option<ScaleMethod>) -> Result<(PanelFile, MultivariateSample), CliError> {
    let panel = if demean { panel.demeaned() } else { panel.clone() };
    let sample = match scale {
        None => panel.sample(),
        Some(m) => standardize(&panel.sample(), m).map_err(|e| CliError::from_core(e, |t| panel.line_of(t)))?,
    };
    Ok((panel, sample))
}

fn rho_range(n: usize) -> (f64, f64) {
    (-1.0 / (n as f64 - 1.0), 1.0)
}

pub struct EstimateArgs<'a> {
    pub input: Input<'a>,
    pub demean: bool,
    pub standardize: &'a str,
    pub bias_correct: bool,
    pub benchmarks: bool,
    pub out: Option<&'a Path>,
}

pub fn estimate(a: &EstimateArgs) -> Result<(), CliError> {
    let scale = parse_standardize(a.standardize)?;
    let raw = a.input.read()?;
    let (panel, sample) = prepare(&raw, a.demean, &scale)?;
    let n = panel.dim();
    if a.benchmarks && n != 2 {
        return Err(CliError::Data(format!("--benchmarks needs a two-column panel, found {n} columns")));
    }
    let lines = |t| panel.line_of(t);
    let est = if a.bias_correct { gamma_hat_bias_corrected(&sample) } else { gamma_hat(&sample) }
        .map_err(|e| CliError::from_core(e, lines))?;
    let point = if n == 2 { est.gamma_hat.tanh() } else { equicorr_phi_inverse(est.gamma_hat, n)? };

    let mut estimates = Map::new();
    estimates.insert("gamma-hat".into(), value(&est.gamma_hat));
    estimates.insert("raw-mean".into(), value(&est.raw_mean));
    estimates.insert("omega".into(), value(&omega_n(n)?));
    estimates.insert("bias-corrected".into(), value(&est.bias_corrected));
    estimates.insert("correlation".into(), value(&point));
    estimates.insert("T".into(), value(&est.t));
    estimates.insert("n".into(), value(&n));
    let mut notes = Vec::new();
    if n > 2 && !a.bias_correct {
        notes.push("correlation maps the uncorrected mean; pass --bias-correct for a consistent estimate".to_string());
    }
    if a.benchmarks {
        let biv = sample.to_bivariate().expect("two columns");
        let mut b = Map::new();
        for kind in BenchmarkKind::ALL {
            match benchmark(&biv, kind) {
                Ok(e) => {
                    b.insert(kind.name().into(), value(&e.value));
                }
                Err(e) => {
                    b.insert(kind.name().into(), Value::Null);
                    notes.push(format!("{}: {e}", kind.name()));
                }
            }
        }
        estimates.insert("benchmarks".into(), Value::Object(b));
    }
    if !(point >= rho_range(n).0 && point <= 1.0) {
        return Err(CliError::Numerical(format!("point estimate {point} outside the correlation range")));
    }

    let mut doc = ResultDocument::new(
        "estimate",
        raw.digest.clone(),
        json!({
            "input": a.input.describe(),
            "demean": a.demean,
            "standardize": value(&scale),
            "bias-correct": a.bias_correct,
            "benchmarks": a.benchmarks,
        }),
    );
    doc.estimates = Value::Object(estimates);
    doc.diagnostics = json!({ "columns": panel.names, "notes": notes });
    emit(a.out, &doc.to_json())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum LawArg {
    Exact,
    Asymptotic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum TargetArg {
    Rho,
    Xi,
}

pub struct CiArgs<'a> {
    pub input: Input<'a>,
    pub level: f64,
    pub law: Option<LawArg>,
    pub target: TargetArg,
    pub demean: bool,
    pub standardize: &'a str,
    pub out: Option<&'a Path>,
}

pub fn ci(a: &CiArgs) -> Result<(), CliError> {
    check_level(a.level)?;
    let scale = parse_standardize(a.standardize)?;
    let raw = a.input.read()?;
    let (panel, sample) = prepare(&raw, a.demean, &scale)?;
    let n = panel.dim();
    if a.target == TargetArg::Xi && n != 2 {
        return Err(CliError::Usage(format!("--target xi needs a two-column panel, found {n} columns")));
    }
    let law = a.law.map(|l| match l {
        LawArg::Exact => Law::ExactT,
        LawArg::Asymptotic => Law::Asymptotic,
    });
    let opts = CiOptions {
        level: a.level,
        law,
        target: match a.target {
            TargetArg::Rho => Target::Rho,
            TargetArg::Xi => Target::Xi,
        },
        standardization: scale.clone(),
    };
    let lines = |t| panel.line_of(t);
    let interval = correlation_ci(&sample, &opts).map_err(|e| CliError::from_core(e, lines))?;
    let test = zero_correlation_test(&sample, a.level, law).map_err(|e| CliError::from_core(e, lines))?;

    let (lo, hi) = rho_range(n);
    let ordered = interval.fisher_lower <= interval.fisher_upper
        && lo <= interval.lower
        && interval.lower <= interval.point
        && interval.point <= interval.upper
        && interval.upper <= hi;
    if !ordered {
        return Err(CliError::Numerical(format!(
            "interval [{}, {}] around {} violates the correlation range",
            interval.lower, interval.upper, interval.point
        )));
    }

    let mut doc = ResultDocument::new(
        "ci",
        raw.digest.clone(),
        json!({
            "input": a.input.describe(),
            "level": a.level,
            "law": value(&interval.law),
            "target": value(&interval.target),
            "demean": a.demean,
            "standardize": value(&scale),
        }),
    );
    doc.estimates = json!({
        "gamma-hat": interval.estimate.gamma_hat,
        "correlation": interval.point,
        "T": interval.estimate.t,
        "n": n,
        "zero-correlation-test": value(&test),
    });
    doc.intervals = json!({
        "correlation": [interval.lower, interval.upper],
        "fisher": [interval.fisher_lower, interval.fisher_upper],
        "level": interval.level,
        "caveats": value(&interval.caveats),
    });
    doc.diagnostics = json!({ "columns": panel.names });
    emit(a.out, &doc.to_json())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum TableFormat {
    Csv,
    Text,
}

pub struct QuantileArgs<'a> {
    pub t_list: Option<&'a str>,
    pub p_list: Option<&'a str>,
    pub format: TableFormat,
    pub out: Option<&'a Path>,
}

pub fn quantiles(a: &QuantileArgs) -> Result<(), CliError> {
    let ts = match a.t_list {
        Some(s) => parse_t_list(s)?,
        None => TABLE_SAMPLE_SIZES.to_vec(),
    };
    let (ps, labels): (Vec<f64>, Vec<String>) = match a.p_list {
        Some(s) => {
            let ps = parse_f64_list(s, "--p-list")?;
            (ps, s.split(',').map(|x| x.trim().to_string()).collect())
        }
        None => (TABLE_PROBABILITIES.to_vec(), TABLE_PROBABILITIES.iter().map(|p| p.to_string()).collect()),
    };
    if let Some(p) = ps.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
        return Err(CliError::Usage(format!("--p-list: probability {p} is not in (0, 1)")));
    }
    let table = quantile_table(&ts, &ps)?;
    let mut rows: Vec<(String, Vec<String>)> = ts
        .iter()
        .zip(&table)
        .map(|(t, r)| (t.to_string(), r.iter().map(|q| format!("{q:.4}")).collect()))
        .collect();
    let normal_label = match a.format {
        TableFormat::Csv => "normal",
        TableFormat::Text => "N(0,1)",
    };
    rows.push((normal_label.into(), ps.iter().map(|p| format!("{:.4}", normal_quantile(*p))).collect()));

    let mut text = String::new();
    match a.format {
        TableFormat::Csv => {
            text.push_str(&format!("T,{}\n", labels.join(",")));
            for (head, cells) in &rows {
                text.push_str(&format!("{head},{}\n", cells.join(",")));
            }
        }
        TableFormat::Text => {
            let first = rows.iter().map(|r| r.0.len()).max().unwrap_or(1).max(1);
            let widths: Vec<usize> = labels
                .iter()
                .enumerate()
                .map(|(j, l)| rows.iter().map(|r| r.1[j].len()).max().unwrap_or(0).max(l.len()))
                .collect();
            let line = |head: &str, cells: &[String]| {
                let mut s = format!("{head:>first$}");
                for (c, w) in cells.iter().zip(&widths) {
                    s.push_str(&format!("  {c:>w$}"));
                }
                s.push('\n');
                s
            };
            text.push_str(&line("T", &labels));
            for (head, cells) in &rows {
                text.push_str(&line(head, cells));
            }
        }
    }
    emit(a.out, &text)
}

/// `gaussian`, `t:<ν>` or `cauchy`.
pub fn parse_family(s: &str) -> Result<FamilyKind, CliError> {
    let lower = s.to_ascii_lowercase();
    let bad = || CliError::Usage(format!("--family expects gaussian, t:<nu> or cauchy, got {s:?}"));
    match lower.as_str() {
        "gaussian" | "normal" => Ok(FamilyKind::Gaussian),
        "cauchy" => Ok(FamilyKind::Cauchy),
        _ => {
            let nu = lower
                .strip_prefix("t:")
                .or_else(|| lower.strip_prefix("student-t:"))
                .ok_or_else(bad)?
                .parse::<f64>()
                .map_err(|_| bad())?;
            if !(nu > 0.0 && nu.is_finite()) {
                return Err(CliError::Usage(format!("--family: degrees of freedom must be positive, got {nu}")));
            }
            Ok(FamilyKind::StudentT { nu })
        }
    }
}

pub fn parse_estimators(s: &str) -> Result<Vec<StudyEstimator>, CliError> {
    if s == "all" {
        let mut all = vec![StudyEstimator::Similarity];
        all.extend(BenchmarkKind::ALL.map(StudyEstimator::Benchmark));
        return Ok(all);
    }
    s.split(',')
        .map(|tok| StudyEstimator::parse(tok.trim()).ok_or_else(|| CliError::Usage(format!("--estimators: unknown estimator {tok:?}"))))
        .collect()
}

pub struct SimulateArgs<'a> {
    pub family: &'a str,
    pub rho: f64,
    pub n: usize,
    pub t: usize,
    pub reps: usize,
    pub seed: u64,
    pub estimators: &'a str,
    pub histogram: Option<&'a Path>,
    pub out: Option<&'a Path>,
}

pub fn simulate(a: &SimulateArgs) -> Result<(), CliError> {
    let kind = parse_family(a.family)?;
    let estimators = parse_estimators(a.estimators)?;
    if a.n < 2 {
        return Err(CliError::Usage(format!("--n must be at least 2, got {}", a.n)));
    }
    let (lo, hi) = rho_range(a.n);
    if !(a.rho > lo && a.rho < hi) {
        return Err(CliError::Usage(format!("--rho must lie in ({lo}, {hi}) for n = {}, got {}", a.n, a.rho)));
    }
    if a.t == 0 || a.reps == 0 {
        return Err(CliError::Usage("--T and --reps must be at least 1".into()));
    }
    if estimators.iter().any(|e| matches!(e, StudyEstimator::Benchmark(_))) && a.n != 2 {
        return Err(CliError::Usage("benchmark estimators need --n 2".into()));
    }
    let family = equicorrelated_family(kind, a.rho, a.n)?;
    let mut cfg = StudyConfig::new(family, a.t, a.reps, a.seed);
    cfg.estimators = estimators;
    let report = mc_sampling_study(&cfg)?;
    if report.summaries.iter().any(|s| !(s.mean.is_finite() && s.variance.is_finite())) {
        return Err(CliError::Numerical("study produced non-finite summaries".into()));
    }

    let parameters = json!({
        "family": value(&kind),
        "rho": a.rho,
        "n": a.n,
        "T": a.t,
        "reps": a.reps,
        "estimators": cfg.estimators.iter().map(|e| e.name()).collect::<Vec<_>>(),
        "histogram-bins": cfg.histogram_bins,
        "histogram-range": [cfg.histogram_range.0, cfg.histogram_range.1],
    });
    let digest = sha256_hex(to_json_17(&parameters).as_bytes());
    let mut doc = ResultDocument::new("simulate", digest, parameters);
    doc.seed = Some(a.seed);
    doc.estimates = value(&report.summaries);
    doc.diagnostics = json!({ "rng-algorithm": report.rng_algorithm, "redraws": report.redraws });

    let hist_path: Option<PathBuf> = a.histogram.map(Path::to_path_buf).or_else(|| a.out.map(|o| sibling(o, "histogram.csv")));
    if let Some(p) = &hist_path {
        let mut csv = String::from("estimator,lower,upper,density\n");
        for s in &report.summaries {
            let h = &s.histogram;
            for (i, d) in h.density.iter().enumerate() {
                csv.push_str(&format!("{},{},{},{}\n", s.estimator.name(), h.edges[i], h.edges[i + 1], d));
            }
        }
        write_atomic(p, csv.as_bytes())?;
        doc.paths = json!({ "histogram": p.display().to_string() });
    }
    emit(a.out, &doc.to_json())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ModeArg {
    Bivariate,
    Deco,
}

pub struct GarchArgs<'a> {
    pub input: Input<'a>,
    pub mode: ModeArg,
    pub emit_paths: bool,
    pub paths_file: Option<&'a Path>,
    pub out: Option<&'a Path>,
}

pub fn garch(a: &GarchArgs) -> Result<(), CliError> {
    let paths_file: Option<PathBuf> = match (a.emit_paths, a.paths_file, a.out) {
        (false, _, _) => None,
        (true, Some(p), _) => Some(p.to_path_buf()),
        (true, None, Some(o)) => Some(sibling(o, "paths.csv")),
        (true, None, None) => return Err(CliError::Usage("--emit-paths needs --out or --paths-file".into())),
    };
    let panel = a.input.read()?;
    let n = panel.dim();
    let kind = match a.mode {
        ModeArg::Bivariate => ModelKind::Bivariate,
        ModeArg::Deco => ModelKind::Deco,
    };
    if kind == ModelKind::Bivariate && n != 2 {
        return Err(CliError::Data(format!("--mode bivariate needs a two-column panel, found {n} columns")));
    }
    let fit = fit_two_step(&panel.sample(), &FitConfig::new(kind)).map_err(|e| CliError::from_core(e, |t| panel.line_of(t)))?;

    let (lo, hi) = rho_range(n);
    if let Some(t) = fit.paths.rho.iter().position(|r| !(*r > lo && *r < hi)) {
        return Err(CliError::Numerical(format!("fitted correlation at row {} is not inside ({lo}, {hi})", t + 1)));
    }
    if fit.paths.h.iter().flatten().any(|h| !(*h > 0.0 && h.is_finite())) {
        return Err(CliError::Numerical("fitted variance path is not positive and finite".into()));
    }

    let mut doc = ResultDocument::new(
        "garch",
        panel.digest.clone(),
        json!({ "input": a.input.describe(), "mode": value(&kind), "emit-paths": a.emit_paths }),
    );
    doc.estimates = json!({
        "assets": panel.names.iter().zip(&fit.assets).map(|(name, f)| json!({ "name": name, "fit": value(f) })).collect::<Vec<_>>(),
        "correlation": value(&fit.corr),
        "loglik": fit.loglik,
    });
    doc.diagnostics = json!({
        "converged": fit.converged,
        "near-boundary": fit.corr.near_boundary,
        "degenerate-rows": fit.paths.degenerate_rows.iter().map(|t| panel.line_of(*t)).collect::<Vec<_>>(),
    });
    if let Some(p) = &paths_file {
        let mut header = vec!["t".to_string()];
        header.extend(panel.names.iter().map(|s| format!("h_{s}")));
        header.extend(panel.names.iter().map(|s| format!("z_{s}")));
        header.extend(["phi".to_string(), "rho".to_string()]);
        let mut csv = header.join(",") + "\n";
        for t in 0..panel.len() {
            let mut cells = vec![(t + 1).to_string()];
            cells.extend(fit.paths.h.iter().map(|h| h[t].to_string()));
            cells.extend(fit.paths.z.iter().map(|z| z[t].to_string()));
            cells.push(fit.paths.phi[t].to_string());
            cells.push(fit.paths.rho[t].to_string());
            csv.push_str(&cells.join(","));
            csv.push('\n');
        }
        write_atomic(p, csv.as_bytes())?;
        doc.paths = json!({ "file": p.display().to_string(), "rows": panel.len() });
    }
    emit(a.out, &doc.to_json())?;
    if !fit.converged {
        return Err(CliError::Numerical("optimizer did not converge; best-so-far estimates were written".into()));
    }
    Ok(())
}
