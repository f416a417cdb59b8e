use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use gaplab_core::agents::{AgentKind, AgentSpec};
use gaplab_core::bounds::all_bounds;
use gaplab_core::checks::{run_suite, Suite};
use gaplab_core::gaps::{epsilon_threshold, mistake_dp, return_gap, ReturnGapMethod, DEFAULT_POLICY_CAP};
use gaplab_core::presets::{build_appendix_c, build_fig1, build_opt_lb};
use gaplab_core::reproduce::{default_agent, grid, grid_at, Scale};
use gaplab_core::sim::{aggregate_csv, default_stride, run_experiment, trace_csv, ExperimentConfig};
use gaplab_core::{parse_mdp, serialize_mdp, solve, LayeredMdp, Policy};

mod table;

use table::{num, Format, Table};

/// Exit code for failed checks and broken simulation invariants.
const EXIT_FAILED: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "gaplab", version, about = "Exact gap analysis and regret experiments for layered episodic MDPs")]
struct Cli {
    /// Output format for tabular results.
    #[arg(long, value_enum, default_value_t = Format::Table, global = true)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a preset instance and write it as JSON.
    Build(BuildArgs),
    /// Solve an instance exactly.
    Solve { mdp: PathBuf },
    /// Value gaps, return gaps and, for a policy, clipping thresholds.
    Gaps(GapsArgs),
    /// Closed-form bound coefficients.
    Bounds(BoundsArgs),
    /// Run a seeded regret experiment.
    Simulate(SimulateArgs),
    /// Run a property sweep over seeded random instances.
    Check(CheckArgs),
    /// Run the three-layer experiment grid.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Preset {
    Fig1,
    AppendixC,
    OptLb,
}

#[derive(Args, Debug)]
struct BuildArgs {
    #[arg(long, value_enum)]
    preset: Preset,
    #[arg(long, default_value_t = 0.5)]
    c: f64,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long, default_value_t = 0.5)]
    gap: f64,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Auto,
    BruteForce,
    Dp,
}

#[derive(Args, Debug)]
struct GapsArgs {
    mdp: PathBuf,
    #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
    method: MethodArg,
    /// Cap on enumerated deterministic policies.
    #[arg(long, default_value_t = DEFAULT_POLICY_CAP)]
    cap: u128,
    /// Policy as `state=action` pairs separated by commas; unlisted states
    /// take the canonical optimal action.
    #[arg(long)]
    policy: Option<String>,
}

#[derive(Args, Debug)]
struct BoundsArgs {
    mdp: PathBuf,
    /// Also report each coefficient multiplied by ln K.
    #[arg(long)]
    at_k: Option<f64>,
    #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
    method: MethodArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AgentArg {
    UcbviHoeffding,
    UcbviBernstein,
    Random,
    Oracle,
}

impl From<AgentArg> for AgentKind {
    fn from(a: AgentArg) -> Self {
        match a {
            AgentArg::UcbviHoeffding => AgentKind::UcbviHoeffding,
            AgentArg::UcbviBernstein => AgentKind::UcbviBernstein,
            AgentArg::Random => AgentKind::Random,
            AgentArg::Oracle => AgentKind::Oracle,
        }
    }
}

#[derive(Args, Debug)]
struct SeedArgs {
    /// Base seed; the GAPLAB_SEED environment variable takes precedence.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SeedArgs {
    fn resolve(&self) -> Result<u64> {
        match std::env::var("GAPLAB_SEED") {
            Ok(v) => v.trim().parse().with_context(|| format!("GAPLAB_SEED = `{v}` is not an integer")),
            Err(_) => Ok(self.seed),
        }
    }
}

#[derive(Args, Debug)]
struct SimulateArgs {
    mdp: PathBuf,
    #[arg(long, value_enum, default_value_t = AgentArg::UcbviHoeffding)]
    agent: AgentArg,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[arg(long, default_value_t = 1.0)]
    bonus_scale: f64,
    #[arg(long, default_value_t = 10_000)]
    episodes: u64,
    #[arg(long, default_value_t = 5)]
    trials: usize,
    #[command(flatten)]
    seed: SeedArgs,
    /// Worker threads; defaults to the available cores.
    #[arg(long)]
    threads: Option<usize>,
    /// Trace every `stride` episodes; defaults to max(1, episodes / 1000).
    #[arg(long)]
    stride: Option<u64>,
    #[arg(long)]
    audit_clipping: bool,
    #[arg(long)]
    audit_optimism: bool,
    /// Per-trial trace CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Aggregate CSV (mean and std over trials).
    #[arg(long)]
    aggregate_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SuiteArg {
    Decomposition,
    Thresholds,
    Clipping,
    OptLemma,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Decomposition => Suite::Decomposition,
            SuiteArg::Thresholds => Suite::Thresholds,
            SuiteArg::Clipping => Suite::Clipping,
            SuiteArg::OptLemma => Suite::OptLemma,
        }
    }
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[arg(long, value_enum)]
    suite: SuiteArg,
    #[command(flatten)]
    seed: SeedArgs,
    #[arg(long, default_value_t = 200)]
    count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Target {
    AppendixC,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScaleArg {
    Desk,
    Paper,
}

#[derive(Args, Debug)]
struct ReproduceArgs {
    #[arg(long, value_enum, default_value_t = Target::AppendixC)]
    target: Target,
    #[arg(long, value_enum, default_value_t = ScaleArg::Desk)]
    scale: ScaleArg,
    #[arg(long)]
    out_dir: PathBuf,
    #[command(flatten)]
    seed: SeedArgs,
    #[arg(long)]
    threads: Option<usize>,
    /// Override the scale's episode count, for quick runs.
    #[arg(long)]
    episodes: Option<u64>,
}

fn echo(lines: &[String]) {
    for l in lines {
        eprintln!("# resolved: {l}");
    }
}

fn read_mdp(path: &Path) -> Result<LayeredMdp> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_mdp(&text).with_context(|| format!("loading {}", path.display()))
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn method(m: MethodArg, cap: u128) -> ReturnGapMethod {
    match m {
        MethodArg::Auto => ReturnGapMethod::Auto,
        MethodArg::BruteForce => ReturnGapMethod::BruteForce { cap },
        MethodArg::Dp => ReturnGapMethod::DeterministicDp,
    }
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        if t == 0 {
            bail!("--threads must be >= 1");
        }
        b = b.num_threads(t);
    }
    Ok(b.build()?.install(f))
}

fn build(a: &BuildArgs) -> Result<()> {
    let (m, desc) = match a.preset {
        Preset::Fig1 => {
            let eps = a.eps.unwrap_or(0.1);
            (build_fig1(a.c, eps)?, format!("preset=fig1 c={} eps={eps}", a.c))
        }
        Preset::AppendixC => {
            let eps = a.eps.unwrap_or(0.0);
            (build_appendix_c(a.n, a.gap, eps)?, format!("preset=appendix-c n={} gap={} eps={eps}", a.n, a.gap))
        }
        Preset::OptLb => {
            let eps = a.eps.unwrap_or(0.05);
            (build_opt_lb(a.n, eps)?, format!("preset=opt-lb n={} eps={eps}", a.n))
        }
    };
    echo(&[desc, format!("out={}", a.out.as_ref().map_or("-".into(), |p| p.display().to_string()))]);
    write_or_print(a.out.as_deref(), &serialize_mdp(&m))?;
    eprintln!("built {} states, {} state-action pairs", m.num_states(), m.num_pairs());
    Ok(())
}

fn solve_cmd(path: &Path, format: Format) -> Result<()> {
    echo(&[format!("mdp={}", path.display())]);
    let m = read_mdp(path)?;
    let sol = solve(&m);
    let mut t = Table::new(&["state", "action", "layer", "vstar", "qstar", "gap", "variance"]);
    for (s, a) in m.pairs() {
        t.row(vec![
            m.state_id(s).into(),
            m.action_id(s, a).into(),
            m.layer(s).to_string(),
            num(sol.vstar[s]),
            num(sol.qstar[s][a]),
            num(sol.gaps[s][a]),
            num(sol.variance[s][a]),
        ]);
    }
    print!("{}", t.render(format));
    if format == Format::Table {
        println!();
        println!("v* = {}", num(sol.v_opt(&m)));
        println!("gap_min = {}", num(sol.gap_min));
        println!("max variance = {}", num(sol.vmax_variance));
    }
    Ok(())
}

fn parse_policy(m: &LayeredMdp, fallback: &Policy, spec: &str) -> Result<Policy> {
    let mut pairs = Vec::new();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let Some((s, a)) = item.split_once('=') else {
            bail!("policy entry `{item}` is not of the form state=action");
        };
        pairs.push((s.trim(), a.trim()));
    }
    Ok(Policy::from_named(m, &pairs, fallback)?)
}

fn gaps_cmd(a: &GapsArgs, format: Format) -> Result<()> {
    echo(&[format!(
        "mdp={} method={:?} cap={} policy={}",
        a.mdp.display(),
        a.method,
        a.cap,
        a.policy.as_deref().unwrap_or("-")
    )]);
    let m = read_mdp(&a.mdp)?;
    let sol = solve(&m);
    let profile = return_gap(&m, &sol, method(a.method, a.cap))?;
    let policy = a
        .policy
        .as_deref()
        .map(|p| parse_policy(&m, &sol.canonical_policy(), p))
        .transpose()?;
    let mut header = vec!["state", "action", "gap", "return_gap"];
    if policy.is_some() {
        header.extend(["event_prob", "threshold"]);
    }
    let mut t = Table::new(&header);
    let extra = policy.as_ref().map(|pi| (mistake_dp(&m, &sol, pi), epsilon_threshold(&m, &sol, pi)));
    for (s, act) in m.pairs() {
        let mut row = vec![
            m.state_id(s).to_string(),
            m.action_id(s, act).to_string(),
            num(sol.gaps[s][act]),
            num(profile.return_gap[s][act]),
        ];
        if let Some((dp, eps)) = &extra {
            row.push(num(dp.event_prob[s][act]));
            row.push(num(eps[s][act]));
        }
        t.row(row);
    }
    print!("{}", t.render(format));
    if format == Format::Table {
        println!();
        println!("method = {:?}", profile.method);
    }
    Ok(())
}

fn bounds_cmd(a: &BoundsArgs, format: Format) -> Result<()> {
    echo(&[format!(
        "mdp={} method={:?} at_k={}",
        a.mdp.display(),
        a.method,
        a.at_k.map_or("-".into(), |k| k.to_string())
    )]);
    if let Some(k) = a.at_k {
        if !(k > 1.0) {
            bail!("--at-k must be > 1");
        }
    }
    let m = read_mdp(&a.mdp)?;
    let sol = solve(&m);
    let profile = return_gap(&m, &sol, method(a.method, DEFAULT_POLICY_CAP))?;
    let mut t = Table::new(&["name", "applicable", "value", "secondary", "value_at_k", "note"]);
    for r in all_bounds(&m, &sol, &profile) {
        let note = r.reason.clone().into_iter().chain(r.warnings.clone()).collect::<Vec<_>>().join("; ");
        t.row(vec![
            r.name.as_str().into(),
            r.applicable.to_string(),
            num(r.value),
            r.secondary.map_or(String::new(), num),
            a.at_k.map_or(String::new(), |k| num(r.at_k(k))),
            note,
        ]);
    }
    print!("{}", t.render(format));
    Ok(())
}

fn simulate_cmd(a: &SimulateArgs) -> Result<ExitCode> {
    let m = read_mdp(&a.mdp)?;
    let seed = a.seed.resolve()?;
    let spec = AgentSpec {
        kind: a.agent.into(),
        delta: a.delta,
        bonus_scale: a.bonus_scale,
    };
    let mut cfg = ExperimentConfig::new(a.mdp.display().to_string(), spec, a.episodes, a.trials, seed);
    cfg.stride = a.stride.unwrap_or_else(|| default_stride(a.episodes));
    cfg.audit_clipping = a.audit_clipping;
    cfg.audit_optimism = a.audit_optimism;
    echo(&[
        format!("mdp={}", a.mdp.display()),
        format!("agent={} delta={} bonus_scale={}", spec.kind.as_str(), spec.delta, spec.bonus_scale),
        format!("episodes={} trials={} seed={seed} stride={}", cfg.episodes, cfg.trials, cfg.stride),
        format!(
            "threads={} audit_clipping={} audit_optimism={}",
            a.threads.map_or("auto".into(), |t| t.to_string()),
            cfg.audit_clipping,
            cfg.audit_optimism
        ),
    ]);
    let trace = with_threads(a.threads, || run_experiment(&m, &cfg))??;
    write_or_print(a.out.as_deref(), &trace_csv(&cfg, &trace))?;
    if let Some(p) = &a.aggregate_out {
        write_or_print(Some(p), &aggregate_csv(&cfg, &trace))?;
    }
    let last = trace.aggregate.last().copied();
    if let Some(p) = last {
        eprintln!("final cumulative regret: mean {} std {}", num(p.mean), num(p.std));
    }
    if cfg.audit_clipping {
        let c = trace.clipping_total();
        eprintln!("clipping audit: {} of {} episodes flagged ({})", c.violations, c.checked, num(c.fraction()));
    }
    if cfg.audit_optimism {
        let c = trace.optimism_total();
        eprintln!("optimism audit: {} of {} episodes flagged ({})", c.violations, c.checked, num(c.fraction()));
    }
    if trace.invariants_ok() {
        Ok(ExitCode::SUCCESS)
    } else {
        for t in &trace.trials {
            for f in &t.failures {
                eprintln!("invariant failure in trial {}: {f}", t.trial);
            }
        }
        Ok(ExitCode::from(EXIT_FAILED))
    }
}

fn check_cmd(a: &CheckArgs) -> Result<ExitCode> {
    let seed = a.seed.resolve()?;
    let suite: Suite = a.suite.into();
    echo(&[format!("suite={} seed={seed} count={}", suite.as_str(), a.count)]);
    let r = run_suite(suite, seed, a.count);
    println!("{}: {}/{} passed", suite.as_str(), r.passed, r.total);
    if let Some(f) = &r.first_failure {
        println!("first counterexample: {f}");
    }
    Ok(if r.all_passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAILED)
    })
}

fn reproduce_cmd(a: &ReproduceArgs, format: Format) -> Result<ExitCode> {
    let Target::AppendixC = a.target;
    let scale = match a.scale {
        ScaleArg::Desk => Scale::Desk,
        ScaleArg::Paper => Scale::Paper,
    };
    let seed = a.seed.resolve()?;
    let agent = default_agent();
    echo(&[
        format!(
            "target=appendix-c scale={:?} episodes={} out_dir={}",
            a.scale,
            a.episodes.unwrap_or(scale.episodes()),
            a.out_dir.display()
        ),
        format!(
            "agent={} delta={} bonus_scale={} trials={} seed={seed}",
            agent.kind.as_str(),
            agent.delta,
            agent.bonus_scale,
            Scale::TRIALS
        ),
    ]);
    if a.episodes == Some(0) {
        bail!("--episodes must be >= 1");
    }
    if scale == Scale::Paper && a.episodes.is_none() {
        eprintln!("warning: paper scale runs {} episodes per trial and may take hours", scale.episodes());
    }
    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;

    let mut summary = Table::new(&["regime", "n", "p", "gap", "eps", "episodes", "mean_final_regret", "std_final_regret"]);
    let mut ok = true;
    let runs = match a.episodes {
        Some(k) => grid_at(scale, k),
        None => grid(scale),
    };
    for run in runs {
        let cfg = run.config(agent, seed, Scale::TRIALS);
        let mdp = run.build()?;
        let trace = with_threads(a.threads, || run_experiment(&mdp, &cfg))??;
        ok &= trace.invariants_ok();
        let path = a.out_dir.join(format!("{}.csv", run.label()));
        fs::write(&path, aggregate_csv(&cfg, &trace)).with_context(|| format!("writing {}", path.display()))?;
        let last = trace.aggregate.last().copied().expect("at least one episode");
        eprintln!("{}: final mean regret {}", run.label(), num(last.mean));
        summary.row(vec![
            run.regime.as_str().into(),
            run.n.to_string(),
            run.p.to_string(),
            num(run.gap),
            num(run.eps),
            run.episodes.to_string(),
            num(last.mean),
            num(last.std),
        ]);
    }
    fs::write(a.out_dir.join("summary.csv"), summary.render(Format::Csv))?;
    print!("{}", summary.render(format));
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(EXIT_FAILED) })
}

fn run(cli: &Cli) -> Result<ExitCode> {
    eprintln!("# resolved: format={:?}", cli.format);
    match &cli.command {
        Command::Build(a) => build(a)?,
        Command::Solve { mdp } => solve_cmd(mdp, cli.format)?,
        Command::Gaps(a) => gaps_cmd(a, cli.format)?,
        Command::Bounds(a) => bounds_cmd(a, cli.format)?,
        Command::Simulate(a) => return simulate_cmd(a),
        Command::Check(a) => return check_cmd(a),
        Command::Reproduce(a) => return reproduce_cmd(a, cli.format),
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
