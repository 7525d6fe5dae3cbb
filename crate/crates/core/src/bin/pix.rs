use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use pix::engine::{footprint, pi, select_params, Overrides, MAX_X};
use pix::jobs::{merge_results, run_job, split_jobs, JobResult};
use pix::li::li;
use pix::tables::Ratio;
use pix::verify::verify;
use pix::Error;

#[derive(Parser, Debug)]
#[command(name = "pix", version, about = "Exact prime counting with the combinatorial method")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print π(x).
    Pi {
        /// Decimal, 10^n or 2^m.
        #[arg(value_parser = parse_x)]
        x: u128,
        #[command(flatten)]
        tuning: Tuning,
        /// Also print li(x) − π(x).
        #[arg(long)]
        li: bool,
    },
    /// Compute one job of a split run and write its result file.
    Job {
        #[arg(value_parser = parse_x)]
        x: u128,
        /// Job index and count, as j/J.
        #[arg(long = "job", value_parser = parse_job)]
        job: (u32, u32),
        /// Result file; standard output if absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Merge job result files and print π(x).
    Merge {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Compare against the sieve oracle on random x ≤ limit.
    Verify {
        #[arg(value_parser = parse_x)]
        limit: u128,
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Time π(x) and report data-structure sizes.
    Bench {
        #[arg(required = true, value_parser = parse_x)]
        xs: Vec<u128>,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Print li(x).
    Li {
        #[arg(value_parser = parse_x)]
        x: u128,
    },
}

#[derive(Args, Debug, Clone)]
struct Tuning {
    /// Leaf-bound factor α (integer, decimal or p/q).
    #[arg(long)]
    alpha: Option<Ratio>,
    /// Number of primes in the wheel (1..=8).
    #[arg(long)]
    wheel: Option<usize>,
    /// log₂ of the sieve block length (6..=31).
    #[arg(long)]
    block_log: Option<u32>,
    #[arg(long, env = "PIX_THREADS")]
    threads: Option<usize>,
    /// Bit-packed sieve counters.
    #[arg(long)]
    packed_counters: bool,
}

impl Tuning {
    fn overrides(&self) -> Overrides {
        let threads = self
            .threads
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
        Overrides {
            alpha: self.alpha,
            c: self.wheel,
            block_log: self.block_log,
            threads: Some(threads),
            packed_counters: self.packed_counters,
        }
    }
}

fn parse_x(s: &str) -> Result<u128, String> {
    let s = s.trim();
    let value = if let Some((base, exp)) = s.split_once('^') {
        let base: u128 = match base {
            "10" => 10,
            "2" => 2,
            _ => return Err(format!("`{s}`: only 10^n and 2^m shorthands are supported")),
        };
        let exp: u32 = exp.parse().map_err(|_| format!("`{s}`: bad exponent"))?;
        base.checked_pow(exp)
            .ok_or_else(|| format!("`{s}` exceeds the supported range (x ≤ 2^86)"))?
    } else {
        s.parse::<u128>()
            .map_err(|_| format!("`{s}` is not a non-negative integer"))?
    };
    if value < 2 {
        return Err(format!("x = {value} must be at least 2"));
    }
    if value > MAX_X {
        return Err(format!("x = {value} exceeds the supported range (x ≤ 2^86)"));
    }
    Ok(value)
}

fn parse_job(s: &str) -> Result<(u32, u32), String> {
    let (j, n) = s.split_once('/').ok_or_else(|| format!("`{s}`: expected j/J"))?;
    let j: u32 = j.trim().parse().map_err(|_| format!("`{s}`: bad job index"))?;
    let n: u32 = n.trim().parse().map_err(|_| format!("`{s}`: bad job count"))?;
    if n == 0 || j >= n {
        return Err(format!("`{s}`: need 0 ≤ j < J"));
    }
    Ok((j, n))
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Integrity(_) => 2,
        Error::Incomplete { .. } => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(command: Command) -> pix::Result<ExitCode> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match command {
        Command::Pi { x, tuning, li: with_li } => {
            let params = select_params(x, &tuning.overrides())?;
            eprintln!(
                "y_max = {}, a = {}, c = {}, L = {}, threads = {}",
                params.y_max, params.a, params.c, params.block_log, params.threads
            );
            let value = pi(&params)?;
            writeln!(out, "{value}").map_err(io)?;
            if with_li {
                let diff = li(x as f64)? - value.get() as f64;
                writeln!(out, "{diff:.3}").map_err(io)?;
            }
        }
        Command::Job {
            x,
            job: (j, n),
            out: path,
            tuning,
        } => {
            let ov = tuning.overrides();
            let threads = ov.threads.unwrap_or(1);
            let params = select_params(x, &ov)?;
            let spec = split_jobs(&params, n)?.swap_remove(j as usize);
            eprintln!("job {j}/{n}: chunk [{}, {})", spec.lo, spec.hi);
            let text = run_job(&spec, threads)?.to_text();
            match path {
                Some(p) => fs::write(&p, text)
                    .map_err(|e| Error::Resource(format!("{}: {e}", p.display())))?,
                None => out.write_all(text.as_bytes()).map_err(io)?,
            }
        }
        Command::Merge { files } => {
            let results = files
                .iter()
                .map(|p| {
                    let text = fs::read_to_string(p)
                        .map_err(|e| Error::Argument(format!("{}: {e}", p.display())))?;
                    JobResult::from_text(&text).map_err(|e| match e {
                        Error::Integrity(m) => Error::Integrity(format!("{}: {m}", p.display())),
                        other => other,
                    })
                })
                .collect::<pix::Result<Vec<_>>>()?;
            writeln!(out, "{}", merge_results(&results)?).map_err(io)?;
        }
        Command::Verify { limit, trials, seed } => {
            let limit = u64::try_from(limit).map_err(|_| Error::Argument("limit too large".into()))?;
            let report = verify(limit, trials, seed, 0)?;
            for m in &report.mismatches {
                eprintln!(
                    "mismatch: x = {}, alpha = {}, c = {}, L = {}: expected {}, got {}",
                    m.x, m.alpha, m.c, m.block_log, m.expected, m.got
                );
            }
            let verdict = if report.passed() { "pass" } else { "fail" };
            writeln!(out, "{verdict}: {} checks over {} values", report.checks, report.trials)
                .map_err(io)?;
            if !report.passed() {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Bench { xs, tuning } => {
            writeln!(
                out,
                "{:>28} {:>26} {:>10} {:>12} {:>12} {:>8} {:>12} {:>12}",
                "x", "pi(x)", "seconds", "primes_B", "sparse_pi_B", "wheel_B", "counters_B", "total_B"
            )
            .map_err(io)?;
            for x in xs {
                let params = select_params(x, &tuning.overrides())?;
                let f = footprint(&params)?;
                let start = Instant::now();
                let value = pi(&params)?;
                let secs = start.elapsed().as_secs_f64();
                writeln!(
                    out,
                    "{:>28} {:>26} {:>10.3} {:>12} {:>12} {:>8} {:>12} {:>12}",
                    x, value, secs, f.prime_table, f.sparse_pi, f.wheel, f.counters, f.total()
                )
                .map_err(io)?;
            }
        }
        Command::Li { x } => {
            writeln!(out, "{:.3}", li(x as f64)?).map_err(io)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn io(e: std::io::Error) -> Error {
    Error::Resource(format!("write failed: {e}"))
}
