//! `loopcast` command-line front end.
//!
//! Every failure prints one line `error[<kind>]: <reason>` on stderr and
//! exits with 1 (input or config), 2 (result could not be certified) or
//! 3 (internal invariant).

use std::fs;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use loopcast::analytics::{concentration_report, kde, mean_free_loop};
use loopcast::config::{default_deltas, ExperimentConfig};
use loopcast::harness::{run_acceptance, PresetName, Scale, ScenarioPreset};
use loopcast::homotopy::{build_crossing_structure, cyclic_reduce, reduce, word_of};
use loopcast::loops::validate_state;
use loopcast::mcmc::{run_many, ChainTrace, SweepMode};
use loopcast::oracle::shortest_loop;
use loopcast::{Error, PLLoop, Point, PunctureSet, RadialRate};

#[derive(Parser)]
#[command(
    name = "loopcast",
    version,
    about = "Sample and analyse closed loops in a punctured plane"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the shortest loop of the configured class.
    Shortest(Source),
    /// Run the sampler and write a JSON-lines trace.
    Sample {
        #[command(flatten)]
        source: Source,
        /// Independent chains with seeds seed, seed+1, ...
        #[arg(long, default_value_t = 1)]
        chains: u64,
    },
    /// Mean loop, vertex density and concentration report of a trace.
    Analyze {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        trace: PathBuf,
        /// Use only the last `k` saves.
        #[arg(long)]
        last: Option<usize>,
        #[arg(long)]
        bandwidth: Option<f64>,
    },
    /// Print the reduced and cyclically reduced crossing word of a loop.
    Word {
        #[arg(long)]
        punctures: PathBuf,
        #[arg(long = "loop")]
        loop_path: PathBuf,
    },
    /// Check a loop against the state-space constraints.
    Validate {
        #[command(flatten)]
        source: Source,
        #[arg(long = "loop")]
        loop_path: PathBuf,
    },
    /// Evaluate the log-moment generating function and its transform.
    Ratefn {
        #[arg(long = "R", default_value_t = 20.0)]
        radius: f64,
        #[arg(long = "s")]
        s: Vec<f64>,
        #[arg(long = "r")]
        r: Vec<f64>,
        /// Loop file whose rate functional to print.
        #[arg(long = "loop")]
        loop_path: Option<PathBuf>,
    },
    /// Acceptance suite.
    Harness {
        #[command(subcommand)]
        action: HarnessAction,
    },
}

#[derive(Subcommand)]
enum HarnessAction {
    Run {
        #[arg(long, default_value = "square")]
        preset: String,
        #[arg(long, default_value = "tiny")]
        scale: String,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Report file.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        parallel: bool,
    },
}

/// Where the experiment comes from, plus field overrides.
#[derive(Args, Clone)]
struct Source {
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long = "R")]
    radius: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    iterations: Option<u64>,
    #[arg(long)]
    thin: Option<u64>,
    #[arg(long)]
    burnin: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Source {
    fn load(&self) -> Result<ExperimentConfig, Error> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), _) => ExperimentConfig::load(path)?,
            (None, Some(name)) => {
                let p = ScenarioPreset::get(name.parse::<PresetName>()?);
                ExperimentConfig {
                    punctures: p.punctures.clone(),
                    reference_loop_path: None,
                    reference_loop: Some(p.reference.clone()),
                    n: p.n,
                    radius: p.radius,
                    seed: 0,
                    iterations: 1000,
                    thin: 100,
                    burnin: 0,
                    deltas: default_deltas(),
                    output_dir: PathBuf::from("out"),
                    eps: None,
                    sweep_mode: SweepMode::RandomPermutation,
                    check_word_every: 0,
                }
            }
            (None, None) => {
                return Err(Error::InvalidInput(
                    "one of --config or --preset is required".into(),
                ))
            }
        };
        if let Some(v) = self.n {
            cfg.n = v;
        }
        if let Some(v) = self.radius {
            cfg.radius = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.iterations {
            cfg.iterations = v;
        }
        if let Some(v) = self.thin {
            cfg.thin = v;
        }
        if let Some(v) = self.burnin {
            cfg.burnin = v;
        }
        if let Some(v) = &self.out {
            cfg.output_dir = v.clone();
        }
        // overrides go through the same checks as the file
        ExperimentConfig::from_json(&cfg.to_json())
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidInput(_) | Error::TrivialClass | Error::Io(_) | Error::Json(_) => 1,
        Error::NotCertified { .. }
        | Error::DegenerateCrossing { .. }
        | Error::DegenerateGeometry(_)
        | Error::SamplingFailure { .. } => 2,
        Error::Invariant(_) | Error::Integrity(_) => 3,
    }
}

fn kind(e: &Error) -> &'static str {
    match e {
        Error::InvalidInput(_) => "invalid-input",
        Error::TrivialClass => "trivial-class",
        Error::Io(_) => "io",
        Error::Json(_) => "json",
        Error::NotCertified { .. } => "not-certified",
        Error::DegenerateCrossing { .. } => "degenerate-crossing",
        Error::DegenerateGeometry(_) => "degenerate-geometry",
        Error::SamplingFailure { .. } => "sampling-failure",
        Error::Invariant(_) => "invariant",
        Error::Integrity(_) => "integrity",
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn fail(e: &Error) -> ExitCode {
    let mut msg = match e {
        Error::InvalidInput(m) => m.clone(),
        _ => e.to_string(),
    };
    if let Error::NotCertified { length, best, .. } = e {
        msg.push_str(&format!(
            " (best candidate: {} vertices, length {length})",
            best.len()
        ));
    }
    eprintln!("error[{}]: {}", kind(e), one_line(&msg));
    ExitCode::from(exit_code(e))
}

fn ensure_dir(dir: &Path) -> Result<(), Error> {
    fs::create_dir_all(dir).map_err(|e| {
        Error::InvalidInput(format!(
            "cannot create output directory {}: {e}",
            dir.display()
        ))
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Error> {
    fs::write(path, bytes)
        .map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display())))
}

fn cmd_shortest(source: &Source) -> Result<(), Error> {
    let cfg = source.load()?;
    let params = cfg.params()?;
    let sl = shortest_loop(&params)?;
    ensure_dir(&cfg.output_dir)?;
    let path = cfg.output_dir.join("shortest.json");
    write_file(&path, serde_json::to_string_pretty(&sl.polygon)?.as_bytes())?;
    let detail = cfg.output_dir.join("shortest_detail.json");
    write_file(&detail, serde_json::to_string_pretty(&sl)?.as_bytes())?;
    println!("lStar={}", sl.length);
    println!("punctures={:?}", sl.punctures);
    println!("word={}", sl.class_word);
    println!("wrote {} {}", path.display(), detail.display());
    Ok(())
}

fn cmd_sample(source: &Source, chains: u64) -> Result<(), Error> {
    if chains == 0 {
        return Err(Error::InvalidInput("--chains must be at least 1".into()));
    }
    let cfg = source.load()?;
    let base = cfg.sampler()?;
    let initial = base.params.initial_state()?;
    let cfgs: Vec<_> = (0..chains)
        .map(|i| {
            let mut c = base.clone();
            c.seed = base.seed.wrapping_add(i);
            c
        })
        .collect();
    ensure_dir(&cfg.output_dir)?;
    let t0 = Instant::now();
    let results = run_many(&cfgs, &initial, chains > 1);
    let secs = t0.elapsed().as_secs_f64();
    for (i, (res, c)) in results.into_iter().zip(&cfgs).enumerate() {
        let trace = res?;
        let name = if chains == 1 {
            "trace.jsonl".to_string()
        } else {
            format!("trace-{i}.jsonl")
        };
        let path = cfg.output_dir.join(name);
        let file = fs::File::create(&path)
            .map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display())))?;
        trace.write_jsonl(BufWriter::new(file))?;
        println!(
            "seed={} saves={} steps={} noOps={} degenerate={} samplingFailures={} trace={}",
            c.seed,
            trace.len(),
            trace.counters.steps,
            trace.counters.no_ops(),
            trace.counters.degenerate,
            trace.counters.sampling_failures,
            path.display()
        );
    }
    println!("seconds={secs:.3}");
    Ok(())
}

fn cmd_analyze(
    source: &Source,
    trace_path: &Path,
    last: Option<usize>,
    bandwidth: Option<f64>,
) -> Result<(), Error> {
    let cfg = source.load()?;
    let file = fs::File::open(trace_path).map_err(|e| {
        Error::InvalidInput(format!("cannot read trace {}: {e}", trace_path.display()))
    })?;
    let mut trace = ChainTrace::read_jsonl(BufReader::new(file))?;
    if let Some(k) = last {
        let skip = trace.records.len().saturating_sub(k);
        trace.records.drain(..skip);
    }
    if trace.is_empty() {
        return Err(Error::InvalidInput(format!(
            "trace {} has no saved loops",
            trace_path.display()
        )));
    }
    let loops = trace.loops()?;
    let mean = mean_free_loop(&loops)?;
    let density = kde(&loops, None, bandwidth)?;
    let sl = shortest_loop(&cfg.params()?)?;
    let report = concentration_report(&trace, &sl, &cfg.deltas)?;

    ensure_dir(&cfg.output_dir)?;
    let mean_path = cfg.output_dir.join("mean_loop.json");
    write_file(&mean_path, mean.to_json().as_bytes())?;
    let density_path = cfg.output_dir.join("density.csv");
    let mut buf = Vec::new();
    density.write_csv(&mut buf)?;
    write_file(&density_path, &buf)?;
    let report_path = cfg.output_dir.join("concentration.json");
    write_file(
        &report_path,
        serde_json::to_string_pretty(&report)?.as_bytes(),
    )?;

    println!("saves={} lStar={}", report.count, report.l_star);
    for (d, f) in report.deltas.iter().zip(&report.fractions) {
        println!("delta={d} fraction={f}");
    }
    println!(
        "wrote {} {} {}",
        mean_path.display(),
        density_path.display(),
        report_path.display()
    );
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T, Error> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read {what} {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::InvalidInput(format!("cannot parse {what} {}: {e}", path.display())))
}

fn cmd_word(punctures: &Path, loop_path: &Path) -> Result<(), Error> {
    let z = PunctureSet::new(read_json::<Vec<Point>>(punctures, "punctures")?)?;
    let lp = PLLoop::new(read_json::<Vec<Point>>(loop_path, "loop")?)?;
    let structure = build_crossing_structure(&z)?;
    let w = word_of(lp.vertices(), &structure)?;
    println!("{} / {}", reduce(&w), cyclic_reduce(&w));
    Ok(())
}

fn cmd_validate(source: &Source, loop_path: &Path) -> Result<(), Error> {
    let cfg = source.load()?;
    let params = cfg.params()?;
    let lp = PLLoop::load(loop_path).map_err(|e| {
        Error::InvalidInput(format!("cannot load loop {}: {e}", loop_path.display()))
    })?;
    let r = validate_state(&lp, &params);
    let verdict = |ok: bool| if ok { "pass" } else { "fail" };
    println!(
        "vertices: {} ({} vertices, expected {})",
        verdict(r.vertex_count_ok),
        lp.len(),
        params.n + 1
    );
    if r.long_edges.is_empty() {
        println!("edges: pass");
    } else {
        let detail: Vec<String> = r
            .long_edges
            .iter()
            .map(|&i| format!("{i} (length {})", lp.edge_length(i)))
            .collect();
        println!(
            "edges: fail bound {} at edge {}",
            params.edge_bound(),
            detail.join(", ")
        );
    }
    if r.puncture_hits.is_empty() {
        println!("punctures: pass");
    } else {
        println!("punctures: fail at vertex {:?}", r.puncture_hits);
    }
    match (&r.diagnostic, r.class_match) {
        (_, true) => println!("class: pass"),
        (Some(d), false) => println!("class: fail class mismatch ({d})"),
        (None, false) => println!("class: fail class mismatch"),
    }
    println!("valid: {}", r.is_valid());
    Ok(())
}

fn cmd_ratefn(radius: f64, s: &[f64], r: &[f64], loop_path: Option<&Path>) -> Result<(), Error> {
    let rate = RadialRate::new(radius)?;
    for &v in s {
        println!("lmgf s={v} value={}", rate.lmgf(v)?);
    }
    for &v in r {
        let val = rate.rate_star(v);
        println!("rate r={v} value={} saturated={}", val.value, val.saturated);
    }
    if let Some(p) = loop_path {
        let lp = PLLoop::load(p)?;
        println!(
            "loop length={} rate={}",
            lp.length(),
            rate.loop_rate(lp.vertices())
        );
    }
    Ok(())
}

fn cmd_harness(
    preset: &str,
    scale: &str,
    seed: u64,
    out: Option<&Path>,
    parallel: bool,
) -> Result<bool, Error> {
    let preset: PresetName = preset.parse()?;
    let scale: Scale = scale.parse()?;
    let report = run_acceptance(preset, scale, seed, parallel);
    for c in &report.criteria {
        println!("{}", c.summary_line());
    }
    if let Some(path) = out {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            ensure_dir(dir)?;
        }
        write_file(path, serde_json::to_string_pretty(&report)?.as_bytes())?;
    }
    Ok(report.passed)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            eprintln!("error[usage]: {}", first.trim_start_matches("error: "));
            return ExitCode::from(1);
        }
    };
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("LOOPCAST_LOG", "warn")).init();

    let result = match &cli.command {
        Command::Shortest(source) => cmd_shortest(source),
        Command::Sample { source, chains } => cmd_sample(source, *chains),
        Command::Analyze {
            source,
            trace,
            last,
            bandwidth,
        } => cmd_analyze(source, trace, *last, *bandwidth),
        Command::Word {
            punctures,
            loop_path,
        } => cmd_word(punctures, loop_path),
        Command::Validate { source, loop_path } => cmd_validate(source, loop_path),
        Command::Ratefn {
            radius,
            s,
            r,
            loop_path,
        } => cmd_ratefn(*radius, s, r, loop_path.as_deref()),
        Command::Harness {
            action:
                HarnessAction::Run {
                    preset,
                    scale,
                    seed,
                    out,
                    parallel,
                },
        } => match cmd_harness(preset, scale, *seed, out.as_deref(), *parallel) {
            Ok(true) => Ok(()),
            Ok(false) => {
                eprintln!("error[acceptance]: one or more criteria failed");
                return ExitCode::from(2);
            }
            Err(e) => Err(e),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::debug!("{e:?}");
            fail(&e)
        }
    }
}
