mod model;
mod strategy;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ctmc_randomness::complexity::{deficiency_report, CompressorProxy};
use ctmc_randomness::crn::{ssa_simulate_runs, SimConfig};
use ctmc_randomness::ctmc::{
    encode_trajectory, mu_traj, parse_cover, self_information_of, verify_null_cover, CtmcModel, EndReason, Trajectory,
    TrajectorySpec,
};
use ctmc_randomness::martingale::{
    run_martingale, verify_duration_fairness, verify_state_fairness, verify_trajectory_fairness, Strategy,
    VerifyOptions,
};
use ctmc_randomness::rational::{exact_log2, parse_rational, render, render_factored};
use ctmc_randomness::rng::PRNG_ID;
use ctmc_randomness::sojourn::{PrecisionConfig, RateSequence};
use ctmc_randomness::trajfile::{content_hash, parse_trajectory_file, render_block, TrajectoryBlock};
use ctmc_randomness::{Error, Result};
use num_traits::Zero;

use model::{parse_model, Model};

#[derive(Parser)]
#[command(
    name = "ctmcrand",
    version,
    about = "Exact measures, martingales and simulation for CTMCs"
)]
struct Cli {
    /// Working precision in bits for enclosures.
    #[arg(long, global = true, default_value_t = 128)]
    precision: u32,
    /// Largest precision tried before a boundary is declared ambiguous.
    #[arg(long, global = true, default_value_t = 4096)]
    max_precision: u32,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a model file and print a summary.
    Parse { model: PathBuf },
    /// Simulate trajectories with the stochastic simulation algorithm.
    Simulate {
        model: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        events: usize,
        #[arg(long)]
        time: Option<f64>,
        /// Bits per sojourn in the encoding column.
        #[arg(long, default_value_t = 8)]
        depth: usize,
        #[arg(long, default_value_t = 1)]
        runs: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact cylinder measure of a specification such as `a:01/b:1`.
    Measure { model: PathBuf, spec: String },
    /// Run a strategy along an encoded trajectory.
    Bet {
        model: PathBuf,
        trajectory: PathBuf,
        #[arg(long)]
        martingale: String,
        #[arg(long, default_value_t = 8)]
        depth: usize,
        #[arg(long, default_value_t = 0)]
        run: usize,
    },
    /// Check the fairness conditions of a strategy exactly.
    Verify {
        model: PathBuf,
        #[arg(long)]
        martingale: String,
        #[arg(long, default_value_t = 5)]
        depth: usize,
        #[arg(long, default_value_t = 1_000_000)]
        budget: usize,
        /// Rate sequence for duration strategies, as `r0,r1,...`; a final 0
        /// marks a finite sequence.
        #[arg(long)]
        rates: Option<String>,
    },
    /// Check the measure bound of every row of a stored null cover.
    CoverCheck { model: PathBuf, cover: PathBuf },
    /// Compression-based randomness deficiency of a specification or trajectory.
    Deficiency {
        model: PathBuf,
        /// A spec, a spec file, or a trajectory file.
        input: String,
        #[arg(long, default_value = "deflate9")]
        proxy: String,
        #[arg(long, default_value_t = 8)]
        depth: usize,
        #[arg(long, default_value_t = 0)]
        run: usize,
    },
}

struct Output {
    text: String,
    pass: bool,
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

fn read_text(path: &Path) -> Result<String> {
    String::from_utf8(read_bytes(path)?).map_err(|_| Error::InvalidInput(format!("{}: not UTF-8", path.display())))
}

fn load(path: &Path) -> Result<(Model, String)> {
    let bytes = read_bytes(path)?;
    let text =
        String::from_utf8(bytes.clone()).map_err(|_| Error::InvalidInput(format!("{}: not UTF-8", path.display())))?;
    let m = parse_model(path, &text).map_err(|e| in_file(path, e))?;
    Ok((m, content_hash(&bytes)))
}

fn in_file(path: &Path, e: Error) -> Error {
    match e {
        Error::Parse { line, column, message } => Error::Parse {
            line,
            column,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    }
}

fn timestamp() -> String {
    if let Ok(s) = std::env::var("SOURCE_DATE_EPOCH") {
        return s;
    }
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
        .to_string()
}

fn manifest(
    command: &str,
    prec: &PrecisionConfig,
    inputs: &[(&Path, &str)],
    extra: &[(&str, String)],
) -> Vec<(String, String)> {
    let mut h = vec![
        ("command".to_string(), command.to_string()),
        ("tool".to_string(), format!("ctmcrand {}", env!("CARGO_PKG_VERSION"))),
    ];
    for (path, hash) in inputs {
        h.push(("input".into(), format!("{} sha256={hash}", path.display())));
    }
    h.push(("precision".into(), format!("{}/{}", prec.working, prec.max)));
    for (k, v) in extra {
        h.push((k.to_string(), v.clone()));
    }
    h.push(("timestamp".into(), timestamp()));
    h
}

fn header_text(headers: &[(String, String)]) -> String {
    headers.iter().fold(String::new(), |mut s, (k, v)| {
        let _ = writeln!(s, "# {k} {v}");
        s
    })
}

fn encode(c: &CtmcModel, tau: &Trajectory, depth: usize, prec: &PrecisionConfig) -> Result<TrajectorySpec> {
    encode_trajectory(c, tau, &vec![depth; tau.positions().len()], prec)
}

fn simulate(
    path: &Path,
    seed: u64,
    events: usize,
    time: Option<f64>,
    depth: usize,
    runs: u64,
    prec: &PrecisionConfig,
) -> Result<String> {
    let (m, hash) = load(path)?;
    let c = m.ctmc()?;
    let mut out = String::new();
    let base = |i: u64| {
        let mut extra = vec![
            ("seed", seed.to_string()),
            ("stream", i.to_string()),
            ("run", format!("{i}/{runs}")),
            ("prng", PRNG_ID.to_string()),
            ("depth", depth.to_string()),
            ("events", events.to_string()),
        ];
        if let Some(t) = time {
            extra.push(("time", format!("{t:?}")));
        }
        manifest("simulate", prec, &[(path, &hash)], &extra)
    };
    if events == 0 {
        let empty = Trajectory::new(Vec::new(), EndReason::MaxEvents)?;
        for i in 0..runs {
            out.push_str(&render_block(&base(i), &empty, None, true));
        }
        return Ok(out);
    }
    let mut cfg = SimConfig::new(seed, events)?;
    cfg.max_time = time;
    cfg.depth = depth;
    let taus = ssa_simulate_runs(&c, &cfg, runs)?;
    for (i, tau) in taus.iter().enumerate() {
        let w = encode(&c, tau, depth, prec)?;
        out.push_str(&render_block(&base(i as u64), tau, Some(&w), false));
    }
    Ok(out)
}

fn measure(path: &Path, spec: &str, prec: &PrecisionConfig) -> Result<String> {
    let (m, hash) = load(path)?;
    let c = m.ctmc()?;
    let w: TrajectorySpec = spec.parse()?;
    let mu = mu_traj(&c, &w)?;
    let mut out = header_text(&manifest("measure", prec, &[(path, &hash)], &[("spec", w.to_string())]));
    let _ = writeln!(out, "measure {}", render(&mu));
    let _ = writeln!(out, "factored {}", render_factored(&mu));
    match self_information_of(&mu, prec) {
        Some(l) => {
            let _ = writeln!(out, "information {l}");
        }
        None => {
            let _ = writeln!(out, "information inf");
        }
    }
    Ok(out)
}

fn trajectory_block(path: &Path, run: usize) -> Result<(TrajectoryBlock, String)> {
    let bytes = read_bytes(path)?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| Error::InvalidInput("trajectory is not UTF-8".into()))?;
    let mut blocks = parse_trajectory_file(&text).map_err(|e| in_file(path, e))?;
    if run >= blocks.len() {
        return Err(Error::InvalidInput(format!(
            "{} has {} runs, asked for run {run}",
            path.display(),
            blocks.len()
        )));
    }
    Ok((blocks.swap_remove(run), content_hash(&bytes)))
}

fn bet(path: &Path, traj: &Path, name: &str, depth: usize, run: usize, prec: &PrecisionConfig) -> Result<String> {
    let (m, hash) = load(path)?;
    let c = m.ctmc()?;
    let (block, thash) = trajectory_block(traj, run)?;
    let Strategy::Trajectory(d) = strategy::build(name, &c)? else {
        return Err(Error::InvalidInput(format!("{name} is not a trajectory strategy")));
    };
    let w = encode(&c, &block.trajectory, depth, prec)?;
    let chain = w.canonical_chain();
    let trace = run_martingale(d.as_ref(), &w, &chain)?;
    let mut out = header_text(&manifest(
        "bet",
        prec,
        &[(path, &hash), (traj, &thash)],
        &[
            ("martingale", d.describe()),
            ("depth", depth.to_string()),
            ("run", run.to_string()),
        ],
    ));
    let _ = writeln!(out, "initial capital={}", render_factored(&trace.entries[0].1));
    for (i, (q, u)) in w.pairs().iter().enumerate() {
        let step = (i + 1) * (depth + 1);
        let capital = &trace.entries[step].1;
        let _ = writeln!(
            out,
            "position {i} state={q} bits={u} capital={}",
            render_factored(capital)
        );
    }
    if let Some(step) = trace.entries.iter().position(|(_, x)| x.is_zero()) {
        let _ = writeln!(
            out,
            "collapse position={}",
            trace.entries[step].0.len().saturating_sub(1)
        );
    }
    for (j, step) in &trace.crossings {
        let at = match trace.entries[*step].0.len() {
            0 => "-".to_string(),
            n => (n - 1).to_string(),
        };
        let _ = writeln!(out, "crossing 2^{j} position={at}");
    }
    let last = trace.final_capital().cloned().unwrap_or_default();
    let log = exact_log2(&last).map_or(String::new(), |e| format!(" log2={e}"));
    let _ = writeln!(
        out,
        "trace positions={} steps={} max_capital={} final_capital={}{log}",
        w.len(),
        trace.entries.len(),
        render_factored(&trace.max_capital),
        render_factored(&last)
    );
    Ok(out)
}

fn parse_rates(text: &str) -> Result<RateSequence> {
    let rates = text
        .split(',')
        .map(|r| parse_rational(r.trim()))
        .collect::<Result<Vec<_>>>()?;
    if rates.last().is_some_and(Zero::is_zero) {
        RateSequence::finite(rates)
    } else {
        RateSequence::infinite_prefix(rates)
    }
}

fn verify(
    path: &Path,
    name: &str,
    depth: usize,
    budget: usize,
    rates: Option<&str>,
    prec: &PrecisionConfig,
) -> Result<Output> {
    let (m, hash) = load(path)?;
    let c = m.ctmc()?;
    let opts = VerifyOptions { depth, budget };
    let strategy = strategy::build(name, &c)?;
    let report = match &strategy {
        Strategy::Trajectory(d) => verify_trajectory_fairness(d.as_ref(), &c, opts)?,
        Strategy::State(d) => verify_state_fairness(d.as_ref(), &c.embedded_chain(), c.init(), opts)?,
        Strategy::Duration(d) => {
            let rates = rates.ok_or_else(|| Error::InvalidInput(format!("{name} needs --rates")))?;
            verify_duration_fairness(d.as_ref(), &parse_rates(rates)?, opts)?
        }
    };
    let mut text = header_text(&manifest(
        "verify",
        prec,
        &[(path, &hash)],
        &[("depth", depth.to_string())],
    ));
    let _ = writeln!(text, "{report}");
    Ok(Output {
        text,
        pass: report.pass(),
    })
}

fn cover_check(path: &Path, cover: &Path, prec: &PrecisionConfig) -> Result<Output> {
    let (m, hash) = load(path)?;
    let c = m.ctmc()?;
    let bytes = read_bytes(cover)?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| Error::InvalidInput("cover is not UTF-8".into()))?;
    let parsed = parse_cover(&text).map_err(|e| in_file(cover, e))?;
    let report = verify_null_cover(&c, &parsed)?;
    let mut out = header_text(&manifest(
        "cover-check",
        prec,
        &[(path, &hash), (cover, &content_hash(&bytes))],
        &[],
    ));
    let _ = writeln!(out, "{report}");
    if let Some(row) = report.first_failure() {
        let _ = writeln!(
            out,
            "first-failure k={} sum={} bound={}",
            row.k,
            render(&row.sum),
            render(&row.bound)
        );
    }
    Ok(Output {
        text: out,
        pass: report.pass(),
    })
}

fn deficiency(
    path: &Path,
    input: &str,
    proxy: &str,
    depth: usize,
    run: usize,
    prec: &PrecisionConfig,
) -> Result<Output> {
    if proxy != "deflate9" && proxy != CompressorProxy::ID {
        return Err(Error::InvalidInput(format!(
            "unknown proxy {proxy:?}; available: deflate9"
        )));
    }
    let (m, hash) = load(path)?;
    let c = m.ctmc()?;
    let as_path = Path::new(input);
    let mut inputs = vec![(path.to_path_buf(), hash)];
    let w: TrajectorySpec = if as_path.is_file() {
        let text = read_text(as_path)?;
        if text.trim_start().starts_with("# format") {
            let (block, thash) = trajectory_block(as_path, run)?;
            inputs.push((as_path.to_path_buf(), thash));
            encode(&c, &block.trajectory, depth, prec)?
        } else {
            inputs.push((as_path.to_path_buf(), content_hash(text.as_bytes())));
            let body: String = text.lines().map(|l| l.split('#').next().unwrap_or("").trim()).collect();
            body.parse().map_err(|e| in_file(as_path, e))?
        }
    } else {
        input.parse()?
    };
    let report = deficiency_report(&c, &w, &CompressorProxy, prec)?;
    let refs: Vec<(&Path, &str)> = inputs.iter().map(|(p, h)| (p.as_path(), h.as_str())).collect();
    let mut out = header_text(&manifest("deficiency", prec, &refs, &[]));
    let _ = writeln!(out, "{report}");
    Ok(Output {
        text: out,
        pass: report.round_trip,
    })
}

fn run(cli: Cli) -> Result<(Output, Option<PathBuf>)> {
    let prec = PrecisionConfig::new(cli.precision, cli.max_precision)?;
    let ok = |text: String| Output { text, pass: true };
    Ok(match cli.command {
        Command::Parse { model } => {
            let (m, hash) = load(&model)?;
            let mut text = header_text(&manifest("parse", &prec, &[(&model, &hash)], &[]));
            text.push_str(&m.summary()?);
            (ok(text), None)
        }
        Command::Simulate {
            model,
            seed,
            events,
            time,
            depth,
            runs,
            out,
        } => (ok(simulate(&model, seed, events, time, depth, runs, &prec)?), out),
        Command::Measure { model, spec } => (ok(measure(&model, &spec, &prec)?), None),
        Command::Bet {
            model,
            trajectory,
            martingale,
            depth,
            run,
        } => (ok(bet(&model, &trajectory, &martingale, depth, run, &prec)?), None),
        Command::Verify {
            model,
            martingale,
            depth,
            budget,
            rates,
        } => (
            verify(&model, &martingale, depth, budget, rates.as_deref(), &prec)?,
            None,
        ),
        Command::CoverCheck { model, cover } => (cover_check(&model, &cover, &prec)?, None),
        Command::Deficiency {
            model,
            input,
            proxy,
            depth,
            run,
        } => (deficiency(&model, &input, &proxy, depth, run, &prec)?, None),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok((out, dest)) => {
            match dest {
                Some(p) => {
                    if let Err(e) = std::fs::write(&p, &out.text) {
                        eprintln!("error: {}: {e}", p.display());
                        return ExitCode::from(2);
                    }
                }
                None => print!("{}", out.text),
            }
            if out.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::BoundaryAmbiguous(_) => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}
