use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use addrep::analytic::{condition4_trajectory, identity_check_eq7, radial_eval};
use addrep::bounds::{chernoff_tail, error_series, hoeffding_tail, violation_scan, Which};
use addrep::construct::{block_diagonal_counts, sample_bernoulli_set, sample_block_set, BlockSamplerParams};
use addrep::experiment::{run_experiment, ExperimentConfig};
use addrep::repfn::{cumulative_rep, repfn_auto, repfn_fast, repfn_naive, write_profile_csv, IntegerSet, RepProfile};
use addrep::search::{exhaustive_min_error, greedy_min_error, linear_target_probe, Objective, SearchProblem};
use addrep::setio::{read_set, write_set, SetFormat};
use addrep::{Error, Result, WeightSequence};

#[derive(Parser)]
#[command(
    name = "addrep",
    version,
    about = "Additive representation functions and random set experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a random set and write it to a file.
    #[command(subcommand)]
    Construct(ConstructCmd),
    /// Compute R(n) and S(n) for a set; CSV `n,R,S`.
    Repfn(RepfnArgs),
    /// Error series against a weight target; CSV `n,e,E,norm_pt,norm_cum`.
    Errors(ErrorsArgs),
    /// Tail bounds, threshold scans and block decompositions.
    #[command(subcommand)]
    Bounds(BoundsCmd),
    /// Radial sums and generating-function identities.
    #[command(subcommand)]
    Analytic(AnalyticCmd),
    /// Minimal-error sets by exhaustive or greedy search.
    #[command(subcommand)]
    Search(SearchCmd),
    /// Multi-seed experiment; see `--config`.
    Experiment(ExperimentArgs),
}

#[derive(Subcommand)]
enum ConstructCmd {
    /// p uniform elements from each block of length q.
    Block {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        q: u64,
        #[arg(long)]
        blocks: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "efset1")]
        format: SetFormat,
    },
    /// Each n included independently with probability b_n.
    Bernoulli {
        #[arg(long)]
        weights: String,
        #[arg(long)]
        n_max: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "efset1")]
        format: SetFormat,
    },
}

#[derive(Args)]
struct SetInput {
    /// Set file, text or EFSET1 (detected from the magic bytes).
    #[arg(long)]
    set: PathBuf,
    #[arg(long)]
    format: Option<SetFormat>,
}

impl SetInput {
    fn load(&self) -> Result<IntegerSet> {
        read_set(&self.set, self.format)
    }
}

#[derive(Args)]
struct RepfnArgs {
    #[command(flatten)]
    input: SetInput,
    /// naive, bitset, fft or auto.
    #[arg(long, default_value = "auto")]
    engine: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ErrorsArgs {
    #[command(flatten)]
    input: SetInput,
    #[arg(long)]
    weights: String,
    /// Truncate the set to this horizon first.
    #[arg(long)]
    n_max: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum BoundsCmd {
    /// exp(-2 y^2).
    Hoeffding {
        #[arg(long)]
        y: f64,
    },
    /// 2 exp(-min(eps^2/4, eps/2) E X).
    Chernoff {
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        ex: f64,
    },
    /// Indices where the normalized error reaches a threshold; JSON.
    Scan {
        #[command(flatten)]
        input: SetInput,
        #[arg(long)]
        weights: String,
        #[arg(long)]
        threshold: f64,
        #[arg(long, default_value = "pointwise")]
        which: Which,
        #[arg(long, default_value_t = 2)]
        n_start: usize,
    },
    /// Block-diagonal split of the cumulative count up to a horizon; JSON.
    Diagonals {
        #[command(flatten)]
        input: SetInput,
        #[arg(long)]
        q: usize,
        #[arg(long)]
        horizon: usize,
    },
}

#[derive(Subcommand)]
enum AnalyticCmd {
    /// CSV `r,a_r,f_r,ratio,b_lin,b_sq,tail_bound,reliable`.
    Radial {
        #[command(flatten)]
        input: SetInput,
        #[arg(long)]
        weights: String,
        #[arg(long, value_delimiter = ',', default_value = "0.9,0.99,0.999")]
        r: Vec<f64>,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// CSV `n_max,residual,max_abs_E,tolerance,holds`.
    Eq7 {
        #[command(flatten)]
        input: SetInput,
        #[arg(long)]
        weights: String,
        #[arg(long)]
        n_max: usize,
    },
    /// CSV `N,ratio` with the cumulative error as e.
    Cond4 {
        #[command(flatten)]
        input: SetInput,
        #[arg(long)]
        weights: String,
        #[arg(long, value_delimiter = ',')]
        horizons: Vec<usize>,
    },
}

#[derive(Args)]
struct ProblemArgs {
    #[arg(long)]
    n_max: usize,
    /// zero, interval, constant-linear:c=C or weights:SPEC.
    #[arg(long)]
    target: String,
    /// one or sqrt.
    #[arg(long, default_value = "sqrt")]
    norm: String,
    #[arg(long, default_value_t = 1)]
    n_start: usize,
    #[arg(long, default_value = "pointwise")]
    objective: Objective,
}

impl ProblemArgs {
    fn problem(&self) -> Result<SearchProblem> {
        SearchProblem::from_specs(self.n_max, &self.target, &self.norm, self.n_start, self.objective)
    }
}

#[derive(Subcommand)]
enum SearchCmd {
    /// Branch and bound; JSON `{value, witness, nodes_visited}`.
    Exhaustive(ProblemArgs),
    /// Left-to-right greedy; same JSON.
    Greedy(ProblemArgs),
    /// Minimal value for T(n) = c n over a range of n_max; CSV.
    Probe {
        #[arg(long, value_delimiter = ',', default_value = "0.3,0.5,0.7")]
        c: Vec<f64>,
        #[arg(long, default_value_t = 8)]
        from: usize,
        #[arg(long, default_value_t = 20)]
        to: usize,
    },
}

#[derive(Args)]
struct ExperimentArgs {
    /// JSON config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    p: Option<u64>,
    #[arg(long)]
    q: Option<u64>,
    #[arg(long)]
    weights: Option<String>,
    #[arg(long)]
    quad_factor: Option<f64>,
    #[arg(long)]
    n_max: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    base_seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    checkpoints: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    thresholds: Option<Vec<f64>>,
    #[arg(long)]
    n_start: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    memory_budget_bytes: Option<u64>,
    #[arg(long)]
    out_csv: Option<PathBuf>,
    #[arg(long)]
    out_json: Option<PathBuf>,
}

impl ExperimentArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut fields = match &self.config {
            Some(path) => match serde_json::from_str(&std::fs::read_to_string(path)?) {
                Ok(Value::Object(map)) => map,
                Ok(_) => return Err(Error::Param("experiment config must be a JSON object".into())),
                Err(e) => return Err(Error::Param(format!("bad experiment config: {e}"))),
            },
            None => Map::new(),
        };
        let overrides = [
            ("kind", self.kind.as_ref().map(|v| json!(v))),
            ("p", self.p.map(|v| json!(v))),
            ("q", self.q.map(|v| json!(v))),
            ("weights", self.weights.as_ref().map(|v| json!(v))),
            ("quad_factor", self.quad_factor.map(|v| json!(v))),
            ("n_max", self.n_max.map(|v| json!(v))),
            ("trials", self.trials.map(|v| json!(v))),
            ("base_seed", self.base_seed.map(|v| json!(v))),
            ("checkpoints", self.checkpoints.as_ref().map(|v| json!(v))),
            ("thresholds", self.thresholds.as_ref().map(|v| json!(v))),
            ("n_start", self.n_start.map(|v| json!(v))),
            ("workers", self.workers.map(|v| json!(v))),
            ("memory_budget_bytes", self.memory_budget_bytes.map(|v| json!(v))),
            ("out_csv", self.out_csv.as_ref().map(|v| json!(v))),
            ("out_json", self.out_json.as_ref().map(|v| json!(v))),
        ];
        for (key, value) in overrides {
            if let Some(value) = value {
                fields.insert(key.to_string(), value);
            }
        }
        serde_json::from_value(Value::Object(fields)).map_err(|e| Error::Param(format!("bad experiment config: {e}")))
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn print_json(value: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.into()))?;
    println!("{text}");
    Ok(())
}

fn profile_with(set: &IntegerSet, engine: &str) -> Result<RepProfile> {
    match engine {
        "naive" => Ok(repfn_naive(set)),
        "auto" => Ok(repfn_auto(set)),
        other => repfn_fast(set, other.parse()?),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Construct(ConstructCmd::Block {
            p,
            q,
            blocks,
            seed,
            out,
            format,
        }) => {
            let set = sample_block_set(&BlockSamplerParams {
                p,
                q,
                n_blocks: blocks,
                seed,
            })?;
            write_set(&set, out, format)
        }
        Command::Construct(ConstructCmd::Bernoulli {
            weights,
            n_max,
            seed,
            out,
            format,
        }) => {
            let w = WeightSequence::parse(&weights)?;
            write_set(&sample_bernoulli_set(&w, n_max, seed)?, out, format)
        }
        Command::Repfn(args) => {
            let set = args.input.load()?;
            let profile = profile_with(&set, &args.engine)?;
            let cumulative = cumulative_rep(&profile)?;
            let mut out = output(args.out.as_deref())?;
            write_profile_csv(&mut out, &profile, &cumulative)?;
            out.flush()?;
            Ok(())
        }
        Command::Errors(args) => {
            let mut set = args.input.load()?;
            if let Some(n) = args.n_max {
                if n > set.n_max() {
                    return Err(Error::OutOfRange {
                        index: n,
                        cap: set.n_max(),
                    });
                }
                set = set.truncate(n);
            }
            let w = WeightSequence::parse(&args.weights)?;
            let series = error_series(&repfn_auto(&set), &w)?;
            let mut out = output(args.out.as_deref())?;
            series.write_csv(&mut out)?;
            out.flush()?;
            Ok(())
        }
        Command::Bounds(BoundsCmd::Hoeffding { y }) => {
            println!("{}", hoeffding_tail(y)?);
            Ok(())
        }
        Command::Bounds(BoundsCmd::Chernoff { eps, ex }) => {
            println!("{}", chernoff_tail(eps, ex)?);
            Ok(())
        }
        Command::Bounds(BoundsCmd::Scan {
            input,
            weights,
            threshold,
            which,
            n_start,
        }) => {
            let set = input.load()?;
            let w = WeightSequence::parse(&weights)?;
            let series = error_series(&repfn_auto(&set), &w)?;
            let report = violation_scan(&series, threshold, which, n_start)?;
            print_json(&json!({
                "threshold": report.threshold,
                "which": report.which,
                "n_start": report.n_start,
                "count": report.count(),
                "last": report.last,
                "worst": report.worst,
            }))
        }
        Command::Bounds(BoundsCmd::Diagonals { input, q, horizon }) => {
            let set = input.load()?;
            let counts = block_diagonal_counts(&set, q, horizon)?;
            let cumulative = cumulative_rep(&repfn_auto(&set.truncate(horizon)))?;
            print_json(&json!({
                "horizon": counts.horizon,
                "q": counts.q,
                "interior_total": counts.interior_total,
                "boundary_lower": counts.boundary_lower,
                "boundary_upper": counts.boundary_upper,
                "parts_sum": counts.parts_sum(),
                "cumulative_count": cumulative.get(horizon),
            }))
        }
        Command::Analytic(AnalyticCmd::Radial { input, weights, r, tol }) => {
            let set = input.load()?;
            let w = WeightSequence::parse(&weights)?;
            let mut out = output(None)?;
            writeln!(out, "r,a_r,f_r,ratio,b_lin,b_sq,tail_bound,reliable")?;
            for r in r {
                let d = radial_eval(&set, &w, r, tol)?;
                let ratio = d.ratio.map(|x| x.to_string()).unwrap_or_default();
                writeln!(
                    out,
                    "{},{},{},{ratio},{},{},{},{}",
                    d.r, d.a_r, d.f_r, d.b_lin, d.b_sq, d.tail_bound, d.reliable
                )?;
            }
            out.flush()?;
            Ok(())
        }
        Command::Analytic(AnalyticCmd::Eq7 { input, weights, n_max }) => {
            let set = input.load()?;
            let w = WeightSequence::parse(&weights)?;
            let check = identity_check_eq7(&set, &w, n_max)?;
            println!("n_max,residual,max_abs_E,tolerance,holds");
            println!(
                "{n_max},{},{},{},{}",
                check.residual,
                check.max_abs_cumulative_error,
                check.tolerance(),
                check.holds()
            );
            Ok(())
        }
        Command::Analytic(AnalyticCmd::Cond4 {
            input,
            weights,
            horizons,
        }) => {
            let set = input.load()?;
            let w = WeightSequence::parse(&weights)?;
            let series = error_series(&repfn_auto(&set), &w)?;
            let rows = condition4_trajectory(&w, series.cumulative(), &horizons)?;
            let mut out = output(None)?;
            writeln!(out, "N,ratio")?;
            for (n, ratio) in rows {
                writeln!(out, "{n},{}", ratio.map(|x| x.to_string()).unwrap_or_default())?;
            }
            out.flush()?;
            Ok(())
        }
        Command::Search(SearchCmd::Exhaustive(args)) => print_json(&exhaustive_min_error(&args.problem()?)?),
        Command::Search(SearchCmd::Greedy(args)) => print_json(&greedy_min_error(&args.problem()?)),
        Command::Search(SearchCmd::Probe { c, from, to }) => {
            if from > to {
                return Err(Error::Param(format!("--from {from} exceeds --to {to}")));
            }
            let rows = linear_target_probe(&c, from..=to)?;
            let mut out = output(None)?;
            writeln!(out, "c,n_max,value,witness")?;
            for row in rows {
                writeln!(out, "{},{},{},{}", row.c, row.n_max, row.value, row.witness)?;
            }
            out.flush()?;
            Ok(())
        }
        Command::Experiment(args) => {
            let cfg = args.config()?;
            let report = run_experiment(&cfg)?;
            report.persist()?;
            if cfg.out_json.is_none() {
                println!("{}", report.to_json()?);
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
