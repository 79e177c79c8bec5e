//! The `ramdiv` command line.
//!
//! [`run`] takes the argument list and output streams explicitly and returns
//! the exit code: 0 on success, 1 on usage or I/O errors, 2 when the run
//! completed but some estimate was not finite.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{
    bias_curve, chi2_bias_prediction, fit_log_slope, make_family, model_at, run_sweep, BiasPoint, Estimate,
    EstimateRecord, RateColumn, RateTable, SweepConfig, Truth,
};
use crate::fdiv::{lemma_margin, DivergenceKind, DivergenceSpec, DivergenceValue};
use crate::gaussian::{DiagonalGaussian, Gaussian};
use crate::ram::ProposalChoice;
use crate::rng;

/// Exact CSV header of sweep output.
pub const CSV_HEADER: [&str; 10] = ["divergence", "d", "lambda", "N", "M", "proposal", "trial", "seed", "estimate", "truth"];

const NON_FINITE: &str = "NonFinite";
const LEMMA_TOLERANCE: f64 = -1e-12;
const LEMMA_GRID_MAX: f64 = 1e6;

#[derive(Debug, Parser)]
#[command(name = "ramdiv", version, about = "Random-mixture f-divergence estimators")]
struct Cli {
    /// Worker threads; output does not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Repeated RAM-MC estimates for one cell of the synthetic family.
    Estimate(EstimateArgs),
    /// Sweep a grid of the synthetic family and write one row per trial.
    Synthetic(SyntheticArgs),
    /// Measure the bias as a function of N and fit its rate.
    Rates(RatesArgs),
    /// Scan the f'(x)² bounds on a log grid.
    CheckLemmas(LemmaArgs),
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[arg(long)]
    divergence: DivergenceSpec,
    #[arg(long, default_value_t = 1)]
    d: usize,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    lambda: f64,
    #[arg(long = "N", default_value_t = 500)]
    n: usize,
    #[arg(long = "M", default_value_t = 128)]
    m: usize,
    #[arg(long, default_value_t = ProposalChoice::Mixture)]
    proposal: ProposalChoice,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long, env = "RAMDIV_SEED", default_value_t = rng::DEFAULT_SEED)]
    seed: u64,
    /// Encoder noise standard deviation.
    #[arg(long, default_value_t = crate::experiments::DEFAULT_EPS)]
    eps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct SyntheticArgs {
    #[arg(long, value_delimiter = ',', default_value = "kl,chisq,sqhellinger")]
    divergences: Vec<DivergenceSpec>,
    #[arg(long, value_delimiter = ',', default_value = "1,4,16")]
    dims: Vec<usize>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "-2,-1.5,-1,-0.5,0,0.5,1,1.5,2")]
    lambdas: Vec<f64>,
    #[arg(long = "Ns", value_delimiter = ',', default_value = "1,500")]
    ns: Vec<usize>,
    #[arg(long = "Ms", value_delimiter = ',', default_value = "128")]
    ms: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "mixture")]
    proposals: Vec<ProposalChoice>,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long, env = "RAMDIV_SEED", default_value_t = rng::DEFAULT_SEED)]
    seed: u64,
    /// Output file; standard output when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, Args)]
struct RatesArgs {
    #[arg(long, default_value = "chisq")]
    divergence: DivergenceSpec,
    #[arg(long, default_value_t = 1)]
    d: usize,
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    lambda: f64,
    #[arg(long = "Ns", value_delimiter = ',', default_value = "1,2,4,8,16,32,64")]
    ns: Vec<usize>,
    #[arg(long = "M", default_value_t = 8192)]
    m: usize,
    #[arg(long, default_value_t = 2000)]
    trials: usize,
    #[arg(long, default_value_t = ProposalChoice::Prior)]
    proposal: ProposalChoice,
    #[arg(long, env = "RAMDIV_SEED", default_value_t = rng::DEFAULT_SEED)]
    seed: u64,
    /// Input draws used for the χ² bias prediction.
    #[arg(long = "n-x", default_value_t = 200_000)]
    n_x: usize,
    /// Feed exact c/N data through the fitting path instead of sampling.
    #[arg(long)]
    self_test: bool,
}

#[derive(Debug, Args)]
struct LemmaArgs {
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.01")]
    deltas: Vec<f64>,
    #[arg(long, default_value_t = 10_000)]
    grid_points: usize,
    /// Multiplies every bound; values below one should make the check fail.
    #[arg(long, default_value_t = 1.0, hide = true)]
    bound_scale: f64,
}

/// Runs the command line with `args` (including the program name).
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = match cli.threads {
        Some(0) => Err(Error::Usage("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Usage(format!("cannot start thread pool: {e}")))
            .and_then(|pool| {
                // The pool needs a Send closure, so buffer the output.
                let mut buf = Vec::new();
                let code = pool.install(|| dispatch(&cli.command, &mut buf));
                out.write_all(&buf)?;
                code
            }),
        None => dispatch(&cli.command, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

fn dispatch(cmd: &Command, out: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Estimate(a) => cmd_estimate(a, out),
        Command::Synthetic(a) => cmd_synthetic(a, out),
        Command::Rates(a) => cmd_rates(a, out),
        Command::CheckLemmas(a) => cmd_check_lemmas(a, out),
    }
}

fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

fn cmd_estimate(a: &EstimateArgs, out: &mut dyn Write) -> Result<i32> {
    if !(a.eps > 0.0) || !a.eps.is_finite() {
        return Err(Error::Usage(format!("--eps must be positive, got {}", a.eps)));
    }
    if a.d == 0 || a.n == 0 || a.m == 0 || a.trials == 0 {
        return Err(Error::Usage("--d, --N, --M and --trials must all be at least 1".into()));
    }
    if !a.lambda.is_finite() {
        return Err(Error::Usage("--lambda must be finite".into()));
    }
    let mut fam = make_family(a.d, a.seed)?;
    fam.eps = a.eps;
    let model = model_at(&fam, a.lambda)?;
    let truth = crate::experiments::truth_for(&a.divergence, &model)?;
    let prior = Gaussian::from(DiagonalGaussian::standard(a.d)?);

    writeln!(
        out,
        "# divergence={} d={} lambda={} N={} M={} proposal={} eps={} seed={}",
        a.divergence, a.d, a.lambda, a.n, a.m, a.proposal, a.eps, a.seed
    )?;
    writeln!(out, "trial,seed,estimate")?;
    let mut finite = Vec::new();
    let mut non_finite = 0usize;
    for trial in 0..a.trials {
        let mut xr = rng::stream(a.seed, "estimate-inputs", trial as u64);
        let xs = model.sample_inputs(&mut xr, a.n)?;
        let mixture = crate::ram::build_mixture(&model, &xs)?;
        let seed = rng::derive_seed(a.seed, "estimate-mc", trial as u64);
        let e = crate::ram::ram_mc(&a.divergence, &mixture, &prior, a.m, a.proposal, seed)?;
        let shown = if e.is_finite() {
            finite.push(e.value);
            fmt_real(e.value)
        } else {
            non_finite += 1;
            NON_FINITE.to_string()
        };
        writeln!(out, "{trial},{seed},{shown}")?;
    }
    if finite.is_empty() {
        writeln!(out, "# mean={NON_FINITE}")?;
        writeln!(out, "# std={NON_FINITE}")?;
    } else {
        let k = finite.len() as f64;
        let mean = finite.iter().sum::<f64>() / k;
        let sd = if finite.len() > 1 {
            (finite.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
        } else {
            0.0
        };
        writeln!(out, "# mean={}", fmt_real(mean))?;
        writeln!(out, "# std={}", fmt_real(sd))?;
    }
    writeln!(out, "# truth={}", truth_cell(truth))?;
    if non_finite > 0 {
        writeln!(out, "# {NON_FINITE}: {non_finite} of {} trials", a.trials)?;
        return Ok(2);
    }
    Ok(0)
}

fn truth_cell(t: Truth) -> String {
    match t {
        Truth::Finite(v) => fmt_real(v),
        Truth::Infinite => "inf".into(),
        Truth::Unavailable => String::new(),
    }
}

fn cmd_synthetic(a: &SyntheticArgs, out: &mut dyn Write) -> Result<i32> {
    let cfg = SweepConfig {
        divergences: a.divergences.clone(),
        dims: a.dims.clone(),
        lambdas: a.lambdas.clone(),
        ns: a.ns.clone(),
        ms: a.ms.clone(),
        proposals: a.proposals.clone(),
        trials: a.trials,
        master_seed: a.seed,
    };
    cfg.validate()?;
    // Open the destination before the (possibly long) sweep.
    let mut file = match &a.output {
        Some(p) => Some(BufWriter::new(File::create(p)?)),
        None => None,
    };
    let records = run_sweep(&cfg)?;
    let sink: &mut dyn Write = match file.as_mut() {
        Some(f) => f,
        None => out,
    };
    match a.format {
        Format::Csv => write_csv(&records, sink)?,
        Format::Json => write_json(&records, sink)?,
    }
    sink.flush()?;
    let bad = records.iter().any(|r| r.estimate == Estimate::NonFinite);
    Ok(if bad { 2 } else { 0 })
}

/// Writes records as CSV with [`CSV_HEADER`]. Reals use 17 significant digits.
pub fn write_csv(records: &[EstimateRecord], w: &mut dyn Write) -> Result<()> {
    let mut wr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    wr.write_record(CSV_HEADER)?;
    for r in records {
        let estimate = match r.estimate {
            Estimate::Finite(v) => fmt_real(v),
            Estimate::NonFinite => NON_FINITE.to_string(),
        };
        wr.write_record([
            r.divergence.to_string(),
            r.d.to_string(),
            fmt_real(r.lambda),
            r.n.to_string(),
            r.m.to_string(),
            r.proposal.to_string(),
            r.trial.to_string(),
            r.seed.to_string(),
            estimate,
            truth_cell(r.truth),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

fn parse_field<T: std::str::FromStr>(s: &str, name: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Usage(format!("bad {name} value `{s}`")))
}

/// Parses CSV produced by [`write_csv`].
pub fn read_csv<R: Read>(r: R) -> Result<Vec<EstimateRecord>> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let header = rd.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Usage(format!("unexpected CSV header `{}`", header.iter().collect::<Vec<_>>().join(","))));
    }
    let mut records = Vec::new();
    for row in rd.records() {
        let row = row?;
        let estimate = match &row[8] {
            NON_FINITE => Estimate::NonFinite,
            s => Estimate::Finite(parse_field(s, "estimate")?),
        };
        let truth = match &row[9] {
            "" => Truth::Unavailable,
            "inf" => Truth::Infinite,
            s => Truth::Finite(parse_field(s, "truth")?),
        };
        records.push(EstimateRecord {
            divergence: row[0].parse()?,
            d: parse_field(&row[1], "d")?,
            lambda: parse_field(&row[2], "lambda")?,
            n: parse_field(&row[3], "N")?,
            m: parse_field(&row[4], "M")?,
            proposal: row[5].parse()?,
            trial: parse_field(&row[6], "trial")?,
            seed: parse_field(&row[7], "seed")?,
            estimate,
            truth,
        });
    }
    Ok(records)
}

/// JSON form of a record. `estimate` is a number or `"NonFinite"`;
/// `truth` is a number, `"inf"` or `null`.
#[derive(Debug, Serialize, Deserialize)]
struct JsonRecord {
    divergence: String,
    d: usize,
    lambda: f64,
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "M")]
    m: usize,
    proposal: ProposalChoice,
    trial: usize,
    seed: u64,
    estimate: serde_json::Value,
    truth: serde_json::Value,
}

pub fn write_json(records: &[EstimateRecord], w: &mut dyn Write) -> Result<()> {
    let rows: Vec<JsonRecord> = records
        .iter()
        .map(|r| JsonRecord {
            divergence: r.divergence.to_string(),
            d: r.d,
            lambda: r.lambda,
            n: r.n,
            m: r.m,
            proposal: r.proposal,
            trial: r.trial,
            seed: r.seed,
            estimate: match r.estimate {
                Estimate::Finite(v) => serde_json::Value::from(v),
                Estimate::NonFinite => serde_json::Value::from(NON_FINITE),
            },
            truth: match r.truth {
                Truth::Finite(v) => serde_json::Value::from(v),
                Truth::Infinite => serde_json::Value::from("inf"),
                Truth::Unavailable => serde_json::Value::Null,
            },
        })
        .collect();
    serde_json::to_writer_pretty(&mut *w, &rows)?;
    writeln!(w)?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct RatePoint {
    #[serde(rename = "N")]
    n: usize,
    bias: f64,
    se: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    predicted: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    relative_error: Option<f64>,
}

#[derive(Debug, Serialize)]
struct Chi2Comparison {
    c: Option<f64>,
    c_se: f64,
    n_x: usize,
    tolerance: f64,
    pass: bool,
}

#[derive(Debug, Serialize)]
struct RatesReport {
    divergence: String,
    d: usize,
    lambda: f64,
    #[serde(rename = "M")]
    m: usize,
    trials: usize,
    proposal: ProposalChoice,
    seed: u64,
    self_test: bool,
    points: Vec<RatePoint>,
    slope: Option<f64>,
    /// Accepted slope interval; `None` ends are unbounded.
    band: Option<(Option<f64>, Option<f64>)>,
    reference: String,
    reference_psi: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    chi2_prediction: Option<Chi2Comparison>,
    /// `None` when no band is asserted for this divergence.
    pass: Option<bool>,
}

/// Slope bands checked by `rates`: two-sided for χ², one-sided for KL.
pub fn slope_band(spec: &DivergenceSpec) -> Option<(Option<f64>, Option<f64>)> {
    match spec.kind() {
        DivergenceKind::ChiSq => Some((Some(-1.15), Some(-0.85))),
        DivergenceKind::Kl => Some((None, Some(-0.5))),
        _ => None,
    }
}

/// Relative tolerance between measured χ² bias and its prediction.
pub const CHI2_PREDICTION_TOLERANCE: f64 = 0.10;

fn cmd_rates(a: &RatesArgs, out: &mut dyn Write) -> Result<i32> {
    if a.ns.len() < 3 {
        return Err(Error::Usage(format!("--Ns needs at least 3 values, got {}", a.ns.len())));
    }
    let table = RateTable::published();
    let col = RateColumn::for_spec(&a.divergence);
    let fam = make_family(a.d, a.seed)?;
    let model = model_at(&fam, a.lambda)?;

    let (curve, prediction) = if a.self_test {
        let c = 0.75;
        let mut sorted = a.ns.clone();
        sorted.sort_unstable();
        sorted.dedup();
        let curve = sorted.iter().map(|&n| BiasPoint { n, bias: c / n as f64, se: 0.0, trials: 1 }).collect::<Vec<_>>();
        (curve, None)
    } else {
        let cfg = SweepConfig {
            divergences: vec![a.divergence],
            dims: vec![a.d],
            lambdas: vec![a.lambda],
            ns: a.ns.clone(),
            ms: vec![a.m],
            proposals: vec![a.proposal],
            trials: a.trials,
            master_seed: a.seed,
        };
        let records = run_sweep(&cfg)?;
        let curve = bias_curve(&records)?;
        let prediction = if a.divergence.kind() == DivergenceKind::ChiSq {
            let prior = Gaussian::from(DiagonalGaussian::standard(a.d)?);
            Some(chi2_bias_prediction(&model, &prior, a.n_x, rng::derive_seed(a.seed, "rates-prediction", 0))?)
        } else {
            None
        };
        (curve, prediction)
    };

    let ns: Vec<usize> = curve.iter().map(|p| p.n).collect();
    let biases: Vec<f64> = curve.iter().map(|p| p.bias).collect();
    let slope = fit_log_slope(&ns, &biases).ok();
    let band = slope_band(&a.divergence);
    let in_band = |s: f64, (lo, hi): (Option<f64>, Option<f64>)| lo.is_none_or(|l| s >= l) && hi.is_none_or(|h| s <= h);
    let mut pass = band.map(|b| slope.is_some_and(|s| in_band(s, b)));

    let c = prediction.map(|p| p.c());
    let points = curve
        .iter()
        .map(|p| {
            let predicted = match c {
                Some(DivergenceValue::Finite(c)) => Some(c / p.n as f64),
                _ => None,
            };
            RatePoint {
                n: p.n,
                bias: p.bias,
                se: p.se,
                predicted,
                relative_error: predicted.map(|q| (p.bias - q).abs() / q.abs()),
            }
        })
        .collect::<Vec<_>>();
    let chi2 = prediction.map(|p| {
        let ok = p.c().finite().is_some()
            && points.iter().all(|pt| pt.relative_error.is_some_and(|e| e < CHI2_PREDICTION_TOLERANCE));
        Chi2Comparison {
            c: p.c().finite(),
            c_se: p.conditional_se,
            n_x: p.n_x,
            tolerance: CHI2_PREDICTION_TOLERANCE,
            pass: ok,
        }
    });
    if let (Some(ps), Some(ch)) = (pass.as_mut(), chi2.as_ref()) {
        *ps &= ch.pass;
    }

    let report = RatesReport {
        divergence: a.divergence.to_string(),
        d: a.d,
        lambda: a.lambda,
        m: a.m,
        trials: a.trials,
        proposal: a.proposal,
        seed: a.seed,
        self_test: a.self_test,
        points,
        slope,
        band,
        reference: table.bias_reference(col),
        reference_psi: table.psi[&col].to_string(),
        chi2_prediction: chi2,
        pass,
    };
    serde_json::to_writer_pretty(&mut *out, &report)?;
    writeln!(out)?;
    Ok(0)
}

/// Divergences covered by `check-lemmas`.
pub fn lemma_specs() -> Vec<DivergenceSpec> {
    let mut specs = vec![DivergenceSpec::KL, DivergenceSpec::SQ_HELLINGER, DivergenceSpec::JS];
    for b in [0.6, 0.75, 0.9, 1.5, 3.0] {
        specs.push(DivergenceSpec::f_beta(b).expect("valid beta"));
    }
    for al in [-0.9, -0.5, 0.0, 0.5, 0.9] {
        specs.push(DivergenceSpec::f_alpha(al).expect("valid alpha"));
    }
    specs
}

fn cmd_check_lemmas(a: &LemmaArgs, out: &mut dyn Write) -> Result<i32> {
    if let Some(d) = a.deltas.iter().find(|d| !(**d > 0.0 && **d < 1.0)) {
        return Err(Error::Usage(format!("deltas must lie in (0, 1), got {d}")));
    }
    if a.grid_points < 2 {
        return Err(Error::Usage("--grid-points must be at least 2".into()));
    }
    let mut all_ok = true;
    writeln!(out, "divergence,delta,min_margin,at_x,status")?;
    for spec in lemma_specs() {
        for &delta in &a.deltas {
            let (margin, x) = lemma_margin(&spec, delta, LEMMA_GRID_MAX, a.grid_points, a.bound_scale)?;
            let ok = margin >= LEMMA_TOLERANCE;
            all_ok &= ok;
            writeln!(out, "{spec},{delta},{},{},{}", fmt_real(margin), fmt_real(x), if ok { "ok" } else { "VIOLATED" })?;
        }
    }
    Ok(if all_ok { 0 } else { 1 })
}

/// Entry point for the binary.
pub fn main_with_env() -> i32 {
    let stdout = io::stdout();
    let stderr = io::stderr();
    let mut out = stdout.lock();
    let mut err = stderr.lock();
    run(std::env::args_os(), &mut out, &mut err)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let mut full = vec!["ramdiv"];
        full.extend_from_slice(args);
        let code = run(full, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn estimate_rows_and_summary() {
        let args = ["estimate", "--divergence", "kl", "--d", "1", "--lambda", "0", "--N", "1", "--M", "128", "--trials", "10", "--seed", "7"];
        let (code, out, _) = call(&args);
        assert_eq!(code, 0);
        let rows = out.lines().filter(|l| !l.starts_with('#') && !l.starts_with("trial")).count();
        assert_eq!(rows, 10);
        assert!(out.contains("# mean=") && out.contains("# std=") && out.contains("# truth="));
        assert_eq!(call(&args).1, out);
    }

    #[test]
    fn estimate_flags_non_finite() {
        let (code, out, _) = call(&[
            "estimate", "--divergence", "chisq", "--d", "1", "--lambda", "0", "--N", "4", "--M", "128", "--trials", "3",
            "--eps", "30",
        ]);
        assert_eq!(code, 2);
        assert!(out.contains(NON_FINITE));
        assert!(out.contains("# truth=inf"));
    }

    #[test]
    fn usage_errors() {
        assert_eq!(call(&["estimate", "--divergence", "nope"]).0, 1);
        assert_eq!(call(&["estimate", "--divergence", "kl", "--trials", "0"]).0, 1);
        assert_eq!(call(&["rates", "--Ns", "1,2"]).0, 1);
        assert_eq!(call(&["frobnicate"]).0, 1);
        assert_eq!(call(&["--help"]).0, 0);
    }

    #[test]
    fn csv_round_trip() {
        let (code, out, _) = call(&[
            "synthetic", "--divergences", "kl,js,chisq", "--dims", "1,4", "--lambdas", "-1.5,0.25", "--Ns", "1,3", "--Ms", "8",
            "--trials", "2", "--seed", "11",
        ]);
        assert_eq!(code, 0);
        assert!(out.starts_with("divergence,d,lambda,N,M,proposal,trial,seed,estimate,truth\n"));
        let records = read_csv(out.as_bytes()).unwrap();
        assert_eq!(records.len(), 3 * 2 * 2 * 2 * 2);
        let mut again = Vec::new();
        write_csv(&records, &mut again).unwrap();
        assert_eq!(String::from_utf8(again).unwrap(), out);
        for r in records.iter().filter(|r| r.divergence == DivergenceSpec::JS && r.d == 4) {
            assert_eq!(r.truth, Truth::Unavailable);
        }
        assert!(out.lines().filter(|l| l.starts_with("js,4,")).all(|l| l.ends_with(',')));
    }

    #[test]
    fn json_matches_csv_fields() {
        let (code, out, _) = call(&[
            "synthetic", "--divergences", "kl,js", "--dims", "4", "--lambdas", "0", "--Ns", "1", "--Ms", "4", "--trials", "1",
            "--format", "json",
        ]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        let arr = v.as_array().unwrap();
        assert_eq!(arr.len(), 2);
        let keys: Vec<&str> = arr[0].as_object().unwrap().keys().map(|k| k.as_str()).collect();
        let mut expected = CSV_HEADER.to_vec();
        expected.sort_unstable();
        let mut got = keys.clone();
        got.sort_unstable();
        assert_eq!(got, expected);
        assert!(arr[1]["truth"].is_null());
    }

    #[test]
    fn rates_self_test() {
        let (code, out, _) = call(&["rates", "--self-test"]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!((v["slope"].as_f64().unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(v["pass"], serde_json::Value::Bool(true));
        let (_, kl, _) = call(&["rates", "--self-test", "--divergence", "kl"]);
        let v: serde_json::Value = serde_json::from_str(&kl).unwrap();
        assert_eq!(v["reference"], "N^-1 (Thm 1) / N^-1/3 log N (Thm 2)");
    }

    #[test]
    fn lemma_check_and_negative_control() {
        assert_eq!(call(&["check-lemmas"]).0, 0);
        assert_eq!(call(&["check-lemmas", "--deltas", "0.5"]).0, 0);
        let (code, out, _) = call(&["check-lemmas", "--bound-scale", "0.5"]);
        assert_eq!(code, 1);
        assert!(out.contains("VIOLATED"));
        assert_eq!(call(&["check-lemmas", "--deltas", "1.5"]).0, 1);
    }
}
