//! Command-line front end.
//!
//! Exit codes: `0` success, `2` bad input, `3` solver budget exceeded,
//! `4` non-convergence.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use crate::assign::{all_assignments, assignment_id, best_assignment, Assignment};
use crate::entropy::{cost_tensor, mutual_information_with_costs, GridPolicy};
use crate::error::Error;
use crate::model::{ChannelSpec, JointPmf, PrecoderCode};
use crate::noisefree::{self, build_zero_error_code, exhaustive_search, ZeroErrorCode};
use crate::numfmt;
use crate::optimize::{blahut_arimoto, capacity_pipeline, support_bound, uniform_transmission, BaConfig};
use crate::sim::{simulate, SIM_CSV_HEADER};

pub const EXIT_OK: i32 = 0;
pub const EXIT_BAD_INPUT: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;
pub const EXIT_NO_CONVERGENCE: i32 = 4;

/// First line of every sweep CSV.
pub const SWEEP_CSV_VERSION: &str = "#format=precoder-sweep/1";

/// Sweeps list every assignment when there are at most this many.
pub const SWEEP_ASSIGNMENT_LIMIT: usize = 24;

#[derive(Debug, Parser)]
#[command(name = "precoder", version, about = "Optimal precoding for AWGN channels with causally known discrete interference")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Blahut–Arimoto capacity and a support-reduced capacity-achieving pmf.
    Capacity {
        spec: PathBuf,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
        #[arg(long, default_value_t = 10_000)]
        max_iter: usize,
    },
    /// Uniform-transmission LP: optimal pmf, its support and rate.
    Uniform { spec: PathBuf },
    /// Optimal integral uniform-transmission code (Hungarian or multidimensional assignment).
    Assign {
        spec: PathBuf,
        /// Also write the code file here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Zero-error code for the noise-free channel, or a non-existence certificate.
    Noisefree {
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo symbol error rate and mutual information of a code.
    Simulate {
        spec: PathBuf,
        #[arg(long)]
        code: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Worker threads (default: all cores). Results do not depend on it.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Per-SNR rates of every assignment, the uniform LP and optionally BA.
    Sweep {
        spec: PathBuf,
        /// `start:stop:step` in dB, inclusive.
        #[arg(long = "snr-db", allow_hyphen_values = true)]
        snr_db: String,
        /// Include the Blahut–Arimoto capacity column.
        #[arg(long)]
        ba: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug)]
enum Failure {
    Input(String),
    Budget(String),
    NoConvergence(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::BudgetExceeded(_) | Error::AlphabetTooLarge { .. } => Failure::Budget(e.to_string()),
            Error::IterationLimit(_) => Failure::NoConvergence(e.to_string()),
            other => Failure::Input(other.to_string()),
        }
    }
}

fn read_spec(path: &PathBuf) -> Result<ChannelSpec, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    ChannelSpec::from_toml_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn write_file(path: &PathBuf, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

/// Parses `start:stop:step` into the inclusive list of SNR points.
pub fn parse_snr_range(text: &str) -> Result<Vec<f64>, Error> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || Error::Parse(format!("--snr-db expects start:stop:step, got `{text}`"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let nums = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<Vec<_>, _>>()?;
    let (a, b, step) = (nums[0], nums[1], nums[2]);
    if !(a.is_finite() && b.is_finite() && step.is_finite() && step > 0.0 && b >= a) {
        return Err(bad());
    }
    let n = ((b - a) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|k| a + k as f64 * step).collect())
}

/// One SNR point of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub snr_db: f64,
    pub noise_power: f64,
    /// `(assignment id, rate in bits)` in lexicographic order of assignments.
    pub rate_per_assignment: Vec<(String, f64)>,
    pub lp_rate_bits: f64,
    pub ba_capacity_bits: Option<f64>,
    pub chosen_assignment: String,
}

/// Evaluates every SNR point, holding the constellation fixed and setting
/// the noise power from the SNR. Rows come back in input order.
pub fn sweep(spec: &ChannelSpec, snrs: &[f64], with_ba: bool) -> Result<Vec<SweepRow>, Error> {
    let policy = GridPolicy::default();
    let (m, q) = (spec.m(), spec.q());
    let families = all_assignments(m, q, SWEEP_ASSIGNMENT_LIMIT);
    snrs.par_iter()
        .map(|&snr| {
            let s = spec.with_snr_db(snr)?;
            let costs = cost_tensor(&s, &policy)?;
            let uniform = uniform_transmission(&s, &costs, &policy)?;
            let candidates = match &families {
                Some(f) => f.clone(),
                None => vec![best_assignment(&costs)?.tuples],
            };
            let mut rates = Vec::with_capacity(candidates.len());
            for tuples in &candidates {
                let p = JointPmf::uniform_over(tuples, m);
                rates.push((assignment_id(tuples), mutual_information_with_costs(&p, &s, &costs, &policy)?));
            }
            let mut chosen = 0;
            for (k, r) in rates.iter().enumerate() {
                if r.1 > rates[chosen].1 {
                    chosen = k;
                }
            }
            let ba = if with_ba {
                Some(blahut_arimoto(&s, &BaConfig::default())?.capacity_bits)
            } else {
                None
            };
            Ok(SweepRow {
                snr_db: snr,
                noise_power: s.noise_power(),
                chosen_assignment: rates[chosen].0.clone(),
                rate_per_assignment: rates,
                lp_rate_bits: uniform.rate_bits,
                ba_capacity_bits: ba,
            })
        })
        .collect()
}

/// CSV with a version line, a header, and 12-significant-digit numbers.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::new();
    out.push_str(SWEEP_CSV_VERSION);
    out.push('\n');
    let mut header = vec!["snr_db".to_string(), "noise_power".to_string()];
    if let Some(first) = rows.first() {
        header.extend(first.rate_per_assignment.iter().map(|(id, _)| format!("rate[{id}]")));
    }
    header.extend(["lp_rate_bits", "ba_capacity_bits", "chosen_assignment"].map(String::from));
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        let mut cells = vec![numfmt::sig(row.snr_db, 12), numfmt::sig(row.noise_power, 12)];
        cells.extend(row.rate_per_assignment.iter().map(|(_, r)| numfmt::sig(*r, 12)));
        cells.push(numfmt::sig(row.lp_rate_bits, 12));
        cells.push(row.ba_capacity_bits.map(|v| numfmt::sig(v, 12)).unwrap_or_default());
        cells.push(row.chosen_assignment.clone());
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn code_listing(code: &PrecoderCode) -> String {
    code.to_text()
}

fn commented(text: &str) -> String {
    text.lines().map(|l| format!("# {l}\n")).collect()
}

fn zero_error_listing(code: &ZeroErrorCode) -> String {
    commented(&noisefree::certificate(code)) + &code_listing(&code.code)
}

fn run_command(cmd: Command, out: &mut dyn Write) -> Result<i32, Failure> {
    let policy = GridPolicy::default();
    let mut text = String::new();
    let mut status = EXIT_OK;
    match cmd {
        Command::Capacity { spec, tol, max_iter } => {
            let spec = read_spec(&spec)?;
            let cfg = BaConfig { tol, max_iter, ..BaConfig::default() };
            let res = capacity_pipeline(&spec, &cfg, &policy)?;
            text += &format!(
                "capacity_bits (discretized output) = {}\n",
                numfmt::sig(res.ba.capacity_bits, 12)
            );
            text += &format!("upper_bound_bits = {}\n", numfmt::sig(res.ba.upper_bound_bits, 12));
            text += &format!("iterations = {}\nconverged = {}\n", res.ba.iterations, res.ba.converged);
            text += &format!(
                "reduced_support = {} (bound {})\n",
                res.reduced.pmf.support_size(),
                support_bound(spec.m(), spec.q())
            );
            text += &format!("reduced_rate_bits = {}\n", numfmt::sig(res.reduced_rate_bits, 12));
            for t in res.reduced.pmf.support() {
                text += &format!("{t} {}\n", numfmt::sig(res.reduced.pmf.prob(&t), 12));
            }
            if !res.ba.converged {
                status = EXIT_NO_CONVERGENCE;
            }
        }
        Command::Uniform { spec } => {
            let spec = read_spec(&spec)?;
            let costs = cost_tensor(&spec, &policy)?;
            let u = uniform_transmission(&spec, &costs, &policy)?;
            text += &format!("rate_bits = {}\n", numfmt::sig(u.rate_bits, 12));
            text += &format!("objective_nats = {}\n", numfmt::sig(u.lp.objective, 12));
            text += &format!(
                "support = {} (bound {})\n",
                u.lp.pmf.support_size(),
                support_bound(spec.m(), spec.q())
            );
            for t in u.lp.pmf.support() {
                text += &format!("{t} {}\n", numfmt::sig(u.lp.pmf.prob(&t), 12));
            }
        }
        Command::Assign { spec, out: path } => {
            let spec = read_spec(&spec)?;
            let costs = cost_tensor(&spec, &policy)?;
            let a: Assignment = best_assignment(&costs)?;
            let rate = mutual_information_with_costs(&a.pmf(), &spec, &costs, &policy)?;
            let solver = if spec.q() == 2 { "hungarian" } else { "multidimensional assignment" };
            let code = a.to_code(&spec)?;
            text += &format!("# solver: {solver}\n# assignment: {a}\n");
            text += &format!("# total_cost_nats: {}\n", numfmt::sig(a.total_cost, 12));
            text += &format!("# rate_bits: {}\n", numfmt::sig(rate, 12));
            text += &code_listing(&code);
            if let Some(p) = path {
                write_file(&p, &code_listing(&code))?;
            }
        }
        Command::Noisefree { spec, out: path } => {
            let spec = read_spec(&spec)?;
            let bits = (spec.m() as f64).log2();
            let found = match build_zero_error_code(&spec) {
                Ok(code) => {
                    text += "# method: constructive (arithmetic progression)\n";
                    Some(code)
                }
                Err(Error::NotArithmetic) => {
                    text += "# method: exhaustive search\n";
                    exhaustive_search(&spec)?
                }
                Err(e) => return Err(e.into()),
            };
            match found {
                Some(code) => {
                    text += &format!("# zero-error code of rate {} bits\n", numfmt::sig(bits, 12));
                    text += &zero_error_listing(&code);
                    if let Some(p) = path {
                        write_file(&p, &code_listing(&code.code))?;
                    }
                }
                None => {
                    text += &format!("# no zero-error code of rate {} bits\n", numfmt::sig(bits, 12));
                }
            }
        }
        Command::Simulate { spec, code, trials, seed, threads } => {
            let spec = read_spec(&spec)?;
            let code_text = fs::read_to_string(&code)
                .map_err(|e| Failure::Input(format!("{}: {e}", code.display())))?;
            let code = PrecoderCode::parse(&code_text, &spec)?;
            let report = match threads {
                Some(n) => rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| Failure::Input(e.to_string()))?
                    .install(|| simulate(&code, &spec, trials, seed))?,
                None => simulate(&code, &spec, trials, seed)?,
            };
            text += SIM_CSV_HEADER;
            text.push('\n');
            text += &report.csv_row();
            text.push('\n');
        }
        Command::Sweep { spec, snr_db, ba, out: path } => {
            let spec = read_spec(&spec)?;
            let snrs = parse_snr_range(&snr_db)?;
            let rows = sweep(&spec, &snrs, ba)?;
            let csv = sweep_csv(&rows);
            match path {
                Some(p) => write_file(&p, &csv)?,
                None => text += &csv,
            }
        }
    }
    out.write_all(text.as_bytes()).map_err(|e| Failure::Input(e.to_string()))?;
    Ok(status)
}

/// Parses `args` (including the program name) and runs the command.
/// Diagnostics go to `err`; the return value is the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { EXIT_BAD_INPUT } else { EXIT_OK };
        }
    };
    match run_command(cli.command, out) {
        Ok(code) => code,
        Err(Failure::Input(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_BAD_INPUT
        }
        Err(Failure::Budget(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_BUDGET
        }
        Err(Failure::NoConvergence(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_NO_CONVERGENCE
        }
    }
}
