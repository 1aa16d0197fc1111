//! Command line front end for planning, pricing, and simulating fused
//! convolution pyramids built on online signed-digit arithmetic.
//!
//! Every run is a pure function of its flags: generated weights and inputs
//! come from the seed, reports embed the parameters that produced them, and
//! repeated invocations print byte-identical output.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use olfuse::cost::{
    cycles, dram_traffic, operational_intensity, performance_gops, pyramid_ops, CycleParams,
    Design, TrafficModel,
};
use olfuse::fixed;
use olfuse::fusion::{self, FusionPlan, PlanError};
use olfuse::io::{parse_network, read_feature_map, read_weights, write_csv, ReportRow};
use olfuse::msdf::OnlineDelays;
use olfuse::net::{LayerKind, NetworkSpec};
use olfuse::sim::{
    random_input, run_fused, Emission, LayerWeights, NetWeights, SimError, SimOptions, SimReport,
};

const BUNDLED: [(&str, &str); 3] = [
    ("lenet5", include_str!("../networks/lenet5.net")),
    ("alexnet-front", include_str!("../networks/alexnet-front.net")),
    ("vgg16-front", include_str!("../networks/vgg16-front.net")),
];

#[derive(Parser)]
#[command(
    name = "olfuse",
    version,
    about = "Plan, price, and digit-simulate fused convolution pyramids",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Pick the uniform tiling plan for a network's fusion pyramid
    Plan(PlanArgs),
    /// Price a plan in cycles under one of the two array designs
    Cycles(CyclesArgs),
    /// Run inputs through a plan digit by digit and report the totals
    Simulate(SimulateArgs),
    /// Emit CSV rows comparing fused and layer-by-layer off-chip traffic
    Roofline(RooflineArgs),
}

#[derive(Args)]
struct NetArg {
    /// Bundled network name (lenet5, alexnet-front, vgg16-front) or a
    /// description file path
    #[arg(long)]
    net: String,
}

#[derive(Args)]
struct OutArgs {
    /// Also write the output to this file; relative paths land in the
    /// report directory
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Directory receiving --out files
    #[arg(long, env = "OLFUSE_REPORT_DIR", default_value = ".", value_name = "DIR")]
    report_dir: PathBuf,
}

#[derive(Args)]
struct PlanSource {
    /// Plan file written by `plan`; alternative to --q/--region
    #[arg(long, value_name = "FILE", conflicts_with_all = ["q", "region"])]
    plan: Option<PathBuf>,
    /// Fuse through the Q-th convolution, counting from one
    #[arg(long, required_unless_present = "plan")]
    q: Option<usize>,
    /// Output pixels per tile side
    #[arg(long, default_value_t = 1)]
    region: usize,
}

#[derive(Args)]
struct PlanArgs {
    #[command(flatten)]
    net: NetArg,
    /// Fuse through the Q-th convolution, counting from one
    #[arg(long)]
    q: usize,
    /// Output pixels per tile side
    #[arg(long, default_value_t = 1)]
    region: usize,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct CyclesArgs {
    #[command(flatten)]
    net: NetArg,
    #[command(flatten)]
    plan: PlanSource,
    /// ds1|spatial (a multiplier per kernel position) or ds2|temporal
    /// (one multiplier per window, reused serially)
    #[arg(long, value_parser = parse_design)]
    design: Design,
    /// Payload digits per stored activation
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u32).range(1..=62))]
    n: u32,
    /// Online multiplier delay
    #[arg(long, default_value_t = 2)]
    dolm: u32,
    /// Online adder delay
    #[arg(long, default_value_t = 2)]
    dola: u32,
    /// Accumulator latency per reused-multiplier product
    #[arg(long, default_value_t = 1)]
    acc: u64,
    /// Pooling comparison latency per tile step
    #[arg(long, default_value_t = 2)]
    mp: u64,
    /// Clock frequency in Hz
    #[arg(long, default_value_t = 100e6)]
    freq: f64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    net: NetArg,
    #[command(flatten)]
    plan: PlanSource,
    /// ds1|spatial or ds2|temporal
    #[arg(long, value_parser = parse_design)]
    design: Design,
    /// Whether the negative-sign monitor cuts rectified pixels short
    #[arg(long, value_enum, default_value_t = EndToggle::On)]
    end: EndToggle,
    /// quantized: truncate pixels to the payload grid; exact: run every
    /// digit and match settled arithmetic bit for bit
    #[arg(long, value_enum, default_value_t = EmissionArg::Quantized)]
    emission: EmissionArg,
    /// Payload digits per stored activation
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u32).range(1..=62))]
    n: u32,
    /// Input raster file; without it, inputs are drawn from the seed
    #[arg(long, value_name = "FILE")]
    input: Option<PathBuf>,
    /// Seed for generated weights (and inputs: image i uses seed+1+i)
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of generated input images
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    images: u64,
    /// Directory of weight rasters named layer<i>.fxt, one per fused
    /// convolution layer; without it, weights are drawn from the seed
    #[arg(long, value_name = "DIR")]
    weights: Option<PathBuf>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct RooflineArgs {
    #[command(flatten)]
    net: NetArg,
    /// Fuse through the Q-th convolution, counting from one
    #[arg(long)]
    q: usize,
    /// Output pixels per tile side
    #[arg(long, default_value_t = 1)]
    region: usize,
    /// ds1|spatial or ds2|temporal
    #[arg(long, value_parser = parse_design)]
    design: Design,
    /// Payload digits per stored activation (also the bytes-per-value scale)
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u32).range(1..=62))]
    n: u32,
    /// Clock frequency in Hz
    #[arg(long, default_value_t = 100e6)]
    freq: f64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EndToggle {
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum EmissionArg {
    Quantized,
    Exact,
}

fn parse_design(s: &str) -> Result<Design, String> {
    Design::from_str(s)
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Plan(PlanError),
    Sim(SimError),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => f.write_str(msg),
            CliError::Plan(e) => write!(f, "planning failed: {e}"),
            CliError::Sim(e) => write!(f, "simulation failed: {e}"),
        }
    }
}

impl From<PlanError> for CliError {
    fn from(e: PlanError) -> CliError {
        CliError::Plan(e)
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> CliError {
        CliError::Sim(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Plan(_) => 2,
            CliError::Sim(_) => 3,
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = u8::from(e.use_stderr());
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Plan(args) => run_plan(args),
        Command::Cycles(args) => run_cycles(args),
        Command::Simulate(args) => run_simulate(args),
        Command::Roofline(args) => run_roofline(args),
    }
}

fn load_network(arg: &str) -> Result<NetworkSpec, CliError> {
    let text = match BUNDLED.iter().find(|(name, _)| *name == arg) {
        Some(&(_, text)) => text.to_string(),
        None => fs::read_to_string(arg).map_err(|e| {
            usage(format!(
                "cannot read network description `{arg}` \
                 (bundled names: lenet5, alexnet-front, vgg16-front): {e}"
            ))
        })?,
    };
    parse_network(&text).map_err(|e| usage(format!("{arg}: {e}")))
}

/// Loads the plan from a file or computes it from --q/--region. File plans
/// must match what the planner would produce, so hand-edited geometry can
/// never reach the simulator.
fn resolve_plan(net: &NetworkSpec, source: &PlanSource) -> Result<FusionPlan, CliError> {
    let Some(path) = &source.plan else {
        let q = source.q.expect("clap requires --q without --plan");
        return Ok(fusion::plan(net, q, source.region)?);
    };
    let text = fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read plan `{}`: {e}", path.display())))?;
    let plan: FusionPlan = serde_json::from_str(&text)
        .map_err(|e| usage(format!("plan `{}` does not parse: {e}", path.display())))?;
    if plan.network != net.name {
        return Err(usage(format!(
            "plan `{}` is for network `{}` but the description names `{}`",
            path.display(),
            plan.network,
            net.name
        )));
    }
    let expected = fusion::plan(net, plan.q, plan.region).map_err(|e| {
        usage(format!(
            "plan `{}` claims q={} region={}, which does not plan: {e}",
            path.display(),
            plan.q,
            plan.region
        ))
    })?;
    if plan != expected {
        return Err(usage(format!(
            "plan `{}` does not match the planner's output for q={} region={}; \
             regenerate it with `olfuse plan`",
            path.display(),
            plan.q,
            plan.region
        )));
    }
    Ok(plan)
}

fn emit(out: &OutArgs, text: &str) -> Result<(), CliError> {
    print!("{text}");
    if let Some(name) = &out.out {
        let path = if name.is_absolute() { name.clone() } else { out.report_dir.join(name) };
        fs::write(&path, text)
            .map_err(|e| usage(format!("cannot write `{}`: {e}", path.display())))?;
    }
    Ok(())
}

fn check_freq(freq: f64) -> Result<f64, CliError> {
    if freq.is_finite() && freq > 0.0 {
        Ok(freq)
    } else {
        Err(usage(format!("--freq wants a positive frequency in Hz, found {freq}")))
    }
}

/// Conv-level tile sides and strides, the pair of per-layer columns the
/// report rows carry.
fn conv_columns(net: &NetworkSpec, plan: &FusionPlan) -> (Vec<usize>, Vec<usize>) {
    let convs: Vec<_> = plan
        .levels
        .iter()
        .filter(|lp| net.layers[lp.layer].kind == LayerKind::Conv)
        .collect();
    (convs.iter().map(|lp| lp.h).collect(), convs.iter().map(|lp| lp.tile_stride).collect())
}

fn run_plan(args: PlanArgs) -> Result<(), CliError> {
    let net = load_network(&args.net.net)?;
    let plan = fusion::plan(&net, args.q, args.region)?;
    let mut text = serde_json::to_string_pretty(&plan)
        .map_err(|e| usage(format!("cannot serialize plan: {e}")))?;
    text.push('\n');
    emit(&args.out, &text)
}

fn run_cycles(args: CyclesArgs) -> Result<(), CliError> {
    let net = load_network(&args.net.net)?;
    let plan = resolve_plan(&net, &args.plan)?;
    let delays = OnlineDelays::new(args.dolm, args.dola)
        .map_err(|e| usage(format!("online delays: {e}")))?;
    let params = CycleParams {
        delays,
        n: args.n,
        acc: args.acc,
        mp: args.mp,
        freq_hz: check_freq(args.freq)?,
    };
    let report = cycles(&net, &plan, args.design, &params);
    let value = serde_json::json!({
        "command": "cycles",
        "network": net.name,
        "q": plan.q,
        "region": plan.region,
        "params": params,
        "report": report,
        "duration_us": report.duration_secs(&params) * 1e6,
    });
    let mut text = serde_json::to_string_pretty(&value)
        .map_err(|e| usage(format!("cannot serialize report: {e}")))?;
    text.push('\n');
    emit(&args.out, &text)
}

/// Reads layer<i>.fxt for every fused convolution level, leaving other
/// slots empty.
fn load_weights(
    net: &NetworkSpec,
    plan: &FusionPlan,
    dir: &Path,
) -> Result<NetWeights, CliError> {
    let mut layers: Vec<Option<LayerWeights>> = vec![None; net.layers.len()];
    for lp in &plan.levels {
        let l = &net.layers[lp.layer];
        if l.kind != LayerKind::Conv {
            continue;
        }
        let path = dir.join(format!("layer{}.fxt", lp.layer));
        let mut file = fs::File::open(&path)
            .map_err(|e| usage(format!("cannot open weights `{}`: {e}", path.display())))?;
        let lw = read_weights(&mut file, l.m_out, l.n_in)
            .map_err(|e| usage(format!("weights `{}`: {e}", path.display())))?;
        if lw.k != l.k {
            return Err(usage(format!(
                "weights `{}` have kernel side {} but layer {} wants {}",
                path.display(),
                lw.k,
                lp.layer,
                l.k
            )));
        }
        layers[lp.layer] = Some(lw);
    }
    Ok(NetWeights { layers })
}

fn run_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let net = load_network(&args.net.net)?;
    let plan = resolve_plan(&net, &args.plan)?;
    let emission = match args.emission {
        EmissionArg::Quantized => Emission::Quantized,
        EmissionArg::Exact => Emission::Exact,
    };
    let opts = SimOptions {
        design: args.design,
        emission,
        params: CycleParams { n: args.n, ..CycleParams::default() },
    };
    let weights = match &args.weights {
        Some(dir) => load_weights(&net, &plan, dir)?,
        None => NetWeights::generate(&net, args.n, args.seed, 0.0),
    };

    let input_map = match &args.input {
        Some(path) => {
            if args.images != 1 {
                return Err(usage("--images applies to generated inputs; a raster is one image"));
            }
            let mut file = fs::File::open(path)
                .map_err(|e| usage(format!("cannot open input `{}`: {e}", path.display())))?;
            let (map, precision) = read_feature_map(&mut file)
                .map_err(|e| usage(format!("input `{}`: {e}", path.display())))?;
            if emission == Emission::Quantized && u32::from(precision) > args.n {
                return Err(usage(format!(
                    "input `{}` carries {precision} fractional bits but the payload is {} \
                     digits; raise --n or pass --emission exact",
                    path.display(),
                    args.n
                )));
            }
            Some(map)
        }
        None => None,
    };

    let first = &net.layers[plan.levels[0].layer];
    let mut report = SimReport::default();
    let mut output_sum = fixed::ZERO;
    for i in 0..args.images {
        let input = match &input_map {
            Some(map) => map.clone(),
            None => random_input(first.ifm, first.n_in, args.n, args.seed + 1 + i),
        };
        let run = run_fused(&net, &plan, &weights, &input, &opts)?;
        report.merge(&run.report);
        for &v in run.output().values() {
            output_sum = output_sum + v;
        }
    }

    let end_on = args.end == EndToggle::On;
    let value = serde_json::json!({
        "command": "simulate",
        "network": net.name,
        "q": plan.q,
        "region": plan.region,
        "alpha": plan.alpha,
        "design": args.design.to_string(),
        "end": if end_on { "on" } else { "off" },
        "emission": match emission {
            Emission::Quantized => "quantized",
            Emission::Exact => "exact",
        },
        "n": args.n,
        "seed": args.seed,
        "input": args.input.as_ref().map(|p| p.display().to_string()),
        "weights": args.weights.as_ref().map(|p| p.display().to_string()),
        "images": report.images,
        "steps": report.steps,
        "cycles": if end_on { report.cycles_end_on } else { report.cycles_end_off },
        "cycles_end_off": report.cycles_end_off,
        "cycles_end_on": report.cycles_end_on,
        "conv_pixels": report.conv_pixels,
        "terminated": report.terminated,
        "digits_with_end": report.digits_with_end,
        "digits_without_end": report.digits_without_end,
        "end_savings": end_on.then(|| report.end_savings()),
        "output_sum": output_sum.to_string(),
    });
    let mut text = serde_json::to_string_pretty(&value)
        .map_err(|e| usage(format!("cannot serialize report: {e}")))?;
    text.push('\n');
    emit(&args.out, &text)
}

fn run_roofline(args: RooflineArgs) -> Result<(), CliError> {
    let net = load_network(&args.net.net)?;
    let plan = fusion::plan(&net, args.q, args.region)?;
    let params =
        CycleParams { n: args.n, freq_hz: check_freq(args.freq)?, ..CycleParams::default() };
    let report = cycles(&net, &plan, args.design, &params);
    let ops = pyramid_ops(&net, &plan);
    let gops = performance_gops(ops, report.total, params.freq_hz);
    let duration_us = report.duration_secs(&params) * 1e6;
    let (h, st) = conv_columns(&net, &plan);

    let rows: Vec<ReportRow> = [("fused", TrafficModel::Fused), ("layerwise", TrafficModel::LayerWise)]
        .into_iter()
        .map(|(mode, model)| {
            let bytes = dram_traffic(&net, &plan, model, &params);
            ReportRow {
                network: net.name.clone(),
                mode: mode.to_string(),
                design: args.design,
                q: plan.q,
                alpha: plan.alpha,
                h: h.clone(),
                st: st.clone(),
                cycles: report.total,
                duration_us,
                ops,
                gops,
                oi_ops_per_byte: operational_intensity(ops, bytes),
                end_savings: None,
            }
        })
        .collect();
    emit(&args.out, &write_csv(&rows))
}
