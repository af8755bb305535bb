use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use dyweights::carleson::{c_intensity, carl_intensity, d_intensity};
use dyweights::norms::{op_norm, Method, NormEstimate, PowerConfig, MAX_ITERS, POWER_TOL};
use dyweights::operators::{OperatorKind, SignAssignment};
use dyweights::verify::{
    default_bspecs, default_corpus, lookup, run_suite, sweep_power_scaling, write_csv,
    write_sweep_csv, BSpec, SuiteOptions, SweepTarget,
};
use dyweights::weights::{char_ainfty, char_doubling, char_joint_a2, char_rh1, Weight, WeightSpec};

/// Exit status when an exact check fails.
pub const EXIT_FAILED: i32 = 1;
/// Exit status for bad arguments or inputs.
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "dyweights", version, about = "Dyadic two-weight toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a weight description as JSON.
    Gen(GenArgs),
    /// Weight characteristics and Carleson intensities.
    Chars(CharsArgs),
    /// Operator norm estimate.
    Norm(NormArgs),
    /// Run registered checks over a corpus.
    Check(CheckArgs),
    /// Scaling sweep over power weights.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Power,
    RandomMartingale,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Dense,
    Power,
    Form,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OpArg {
    Square,
    Paraproduct,
    ParaproductAdjoint,
    Martingale,
    T0,
    Maximal,
    MaximalWeighted,
}

/// A weight given inline by family parameters.
#[derive(Args, Debug, Clone)]
pub struct WeightArgs {
    #[arg(long, value_enum)]
    pub family: Option<FamilyArg>,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub depth: u32,
}

impl WeightArgs {
    fn spec(&self) -> anyhow::Result<WeightSpec> {
        let family = match (self.family, self.alpha, self.delta) {
            (Some(f), _, _) => f,
            (None, Some(_), None) => FamilyArg::Power,
            (None, None, Some(_)) => FamilyArg::RandomMartingale,
            _ => bail!("give --family or exactly one of --alpha/--delta"),
        };
        let spec = match family {
            FamilyArg::Power => {
                let a = self
                    .alpha
                    .context("--alpha is required for the power family")?;
                WeightSpec::power(a, self.depth)
            }
            FamilyArg::RandomMartingale => {
                let d = self
                    .delta
                    .context("--delta is required for the random-martingale family")?;
                WeightSpec::random_martingale(d, self.seed, self.depth)
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// The pair `(u, v)`: files take precedence over inline flags, and `v`
/// defaults to `u`.
#[derive(Args, Debug, Clone)]
pub struct PairArgs {
    /// WeightSpec JSON for `u`.
    #[arg(long)]
    pub u: Option<PathBuf>,
    /// WeightSpec JSON for `v`.
    #[arg(long)]
    pub v: Option<PathBuf>,
    #[command(flatten)]
    pub inline: WeightArgs,
}

impl PairArgs {
    fn specs(&self) -> anyhow::Result<(WeightSpec, WeightSpec)> {
        let u = match &self.u {
            Some(p) => read_spec(p)?,
            None => self.inline.spec()?,
        };
        let v = match &self.v {
            Some(p) => read_spec(p)?,
            None => u.clone(),
        };
        if u.depth != v.depth {
            bail!("depth mismatch: u has {} and v has {}", u.depth, v.depth);
        }
        Ok((u, v))
    }
}

fn read_spec(path: &Path) -> anyhow::Result<WeightSpec> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let spec: WeightSpec = serde_json::from_str(&text)?;
    spec.validate()?;
    Ok(spec)
}

fn read_bspec(path: &Path) -> anyhow::Result<BSpec> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(serde_json::from_str(&text)?)
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[command(flatten)]
    pub weight: WeightArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CharsArgs {
    #[command(flatten)]
    pub pair: PairArgs,
    /// BSpec JSON; adds the symbol's Carleson intensity.
    #[arg(long)]
    pub b: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct NormArgs {
    #[arg(long, value_enum)]
    pub op: OpArg,
    #[arg(long, value_enum, default_value = "power")]
    pub method: MethodArg,
    #[command(flatten)]
    pub pair: PairArgs,
    /// BSpec JSON for the paraproduct symbol; defaults to random Haar
    /// coefficients from `--seed`.
    #[arg(long)]
    pub b: Option<PathBuf>,
    #[arg(long, default_value_t = POWER_TOL)]
    pub tol: f64,
    #[arg(long = "max-iter", default_value_t = MAX_ITERS)]
    pub max_iter: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    /// Check ids; all registered checks when omitted.
    #[arg(long = "id", value_delimiter = ',')]
    pub ids: Vec<String>,
    #[arg(long, value_delimiter = ',', default_values_t = [6, 8, 10])]
    pub depth: Vec<u32>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// JSON array of WeightSpec; the default corpus when omitted.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// JSON array of BSpec; the default symbols when omitted.
    #[arg(long)]
    pub bspecs: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long, value_enum, default_value = "square")]
    pub target: TargetArg,
    #[arg(long, value_delimiter = ',', default_values_t = [0.5, 0.75, 0.9, 0.95])]
    pub alphas: Vec<f64>,
    #[arg(long, default_value_t = 16)]
    pub depth: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = POWER_TOL)]
    pub tol: f64,
    #[arg(long = "max-iter", default_value_t = MAX_ITERS)]
    pub max_iter: usize,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TargetArg {
    Square,
    Paraproduct,
    Martingale,
    Maximal,
}

impl From<TargetArg> for SweepTarget {
    fn from(t: TargetArg) -> Self {
        match t {
            TargetArg::Square => SweepTarget::Square,
            TargetArg::Paraproduct => SweepTarget::Paraproduct,
            TargetArg::Martingale => SweepTarget::Martingale,
            TargetArg::Maximal => SweepTarget::Maximal,
        }
    }
}

fn emit(out: &Option<PathBuf>, bytes: &[u8]) -> anyhow::Result<()> {
    match out {
        Some(p) => fs::write(p, bytes).with_context(|| format!("writing {}", p.display()))?,
        None => io::stdout().lock().write_all(bytes)?,
    }
    Ok(())
}

fn emit_json<T: Serialize>(out: &Option<PathBuf>, value: &T) -> anyhow::Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    emit(out, s.as_bytes())
}

/// Runs a command and returns the process exit code.
pub fn run(cli: Cli) -> anyhow::Result<i32> {
    match cli.command {
        Command::Gen(a) => {
            let spec = a.weight.spec()?;
            emit_json(&a.out, &spec)?;
            Ok(0)
        }
        Command::Chars(a) => chars(a),
        Command::Norm(a) => norm(a),
        Command::Check(a) => check(a),
        Command::Sweep(a) => sweep(a),
    }
}

fn chars(a: CharsArgs) -> anyhow::Result<i32> {
    let (us, vs) = a.pair.specs()?;
    let (u, v) = (us.build()?, vs.build()?);
    let mut carleson = json!({
        "d": d_intensity(&u, &v)?.intensity,
        "c": c_intensity(&u, &v)?.intensity,
    });
    if let Some(p) = &a.b {
        let b = read_bspec(p)?.build(u.tree(), &u)?;
        carleson["b"] = json!(carl_intensity(&b, &u, &v)?.intensity);
    }
    let report = json!({
        "depth": us.depth,
        "one_weight": us == vs,
        "joint_a2": char_joint_a2(&u, &v)?.value,
        "rh1_u_inv": char_rh1(&u.reciprocal()).value,
        "rh1_v": char_rh1(&v).value,
        "ainfty_u": char_ainfty(&u).value,
        "ainfty_v": char_ainfty(&v).value,
        "doubling_u": char_doubling(&u).value,
        "doubling_v": char_doubling(&v).value,
        "carleson": carleson,
    });
    emit_json(&a.out, &report)?;
    Ok(0)
}

fn operator(
    op: OpArg,
    u: &Weight,
    v: &Weight,
    b: Option<&Path>,
    seed: u64,
) -> anyhow::Result<OperatorKind> {
    let symbol = || -> anyhow::Result<_> {
        let spec = match b {
            Some(p) => read_bspec(p)?,
            None => BSpec::RandomHaar { seed },
        };
        Ok(spec.build(u.tree(), u)?)
    };
    Ok(match op {
        OpArg::Square => OperatorKind::SquareFn,
        OpArg::Paraproduct => OperatorKind::Paraproduct(symbol()?),
        OpArg::ParaproductAdjoint => OperatorKind::ParaproductAdjoint(symbol()?),
        OpArg::Martingale => OperatorKind::Martingale(SignAssignment::random(u.tree(), seed)),
        OpArg::T0 => OperatorKind::T0(u.clone(), v.clone()),
        OpArg::Maximal => OperatorKind::MaximalFlat,
        OpArg::MaximalWeighted => OperatorKind::MaximalWeighted(v.clone()),
    })
}

#[derive(Serialize)]
struct NormOutput<'a> {
    op: &'a str,
    method: &'a str,
    depth: u32,
    #[serde(flatten)]
    estimate: NormEstimate,
}

fn norm(a: NormArgs) -> anyhow::Result<i32> {
    let (us, vs) = a.pair.specs()?;
    let (u, v) = (us.build()?, vs.build()?);
    let seed = a.pair.inline.seed;
    let kind = operator(a.op, &u, &v, a.b.as_deref(), seed)?;
    let method = match a.method {
        MethodArg::Dense => Method::Dense,
        MethodArg::Power => Method::Power,
        MethodArg::Form => Method::Form,
    };
    if a.tol <= 0.0 || !a.tol.is_finite() {
        bail!("--tol must be positive");
    }
    let cfg = PowerConfig {
        tol: a.tol,
        max_iters: a.max_iter,
        seed,
    };
    let estimate = op_norm(&kind, &u, &v, method, &cfg)?;
    let out = NormOutput {
        op: kind.name(),
        method: match a.method {
            MethodArg::Dense => "dense",
            MethodArg::Power => "power",
            MethodArg::Form => "form",
        },
        depth: us.depth,
        estimate,
    };
    emit_json(&a.out, &json!(out))?;
    Ok(0)
}

fn check(a: CheckArgs) -> anyhow::Result<i32> {
    let mut unknown = Vec::new();
    let mut ids = Vec::new();
    for id in &a.ids {
        match lookup(id) {
            Ok(_) => ids.push(id.clone()),
            Err(_) => unknown.push(id.clone()),
        }
    }
    for id in &unknown {
        eprintln!("unknown check id `{id}`, skipped");
    }
    if !a.ids.is_empty() && ids.is_empty() {
        return Ok(EXIT_USAGE);
    }
    let corpus: Vec<WeightSpec> = match &a.corpus {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text)?
        }
        None => default_corpus(a.depth.first().copied().unwrap_or(6)),
    };
    for spec in &corpus {
        spec.validate()?;
    }
    let bspecs: Vec<BSpec> = match &a.bspecs {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text)?
        }
        None => default_bspecs(a.seed),
    };
    let opts = SuiteOptions {
        checks: (!ids.is_empty()).then_some(ids),
        ..SuiteOptions::default()
    };
    let out = run_suite(&corpus, &bspecs, &a.depth, a.seed, &opts)?;
    match a.format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_csv(&out.reports, &mut buf)?;
            emit(&a.out, &buf)?;
        }
        Format::Json => emit_json(
            &a.out,
            &json!({ "summary": out.summary, "reports": out.reports }),
        )?,
    }
    eprintln!("{}", serde_json::to_string(&out.summary)?);
    Ok(if out.summary.exact_failures() > 0 {
        EXIT_FAILED
    } else if !unknown.is_empty() {
        EXIT_USAGE
    } else {
        0
    })
}

fn sweep(a: SweepArgs) -> anyhow::Result<i32> {
    let cfg = PowerConfig {
        tol: a.tol,
        max_iters: a.max_iter,
        seed: a.seed,
    };
    let res = sweep_power_scaling(a.target.into(), &a.alphas, a.depth, &cfg)?;
    match a.format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_sweep_csv(&res, &mut buf)?;
            emit(&a.out, &buf)?;
        }
        Format::Json => emit_json(&a.out, &res)?,
    }
    Ok(0)
}

/// Worker count from `DYWEIGHTS_THREADS`, when set.
pub fn configure_threads() -> anyhow::Result<()> {
    if let Ok(s) = std::env::var("DYWEIGHTS_THREADS") {
        let n: usize = s
            .trim()
            .parse()
            .with_context(|| format!("DYWEIGHTS_THREADS must be a positive integer, got `{s}`"))?;
        if n == 0 {
            bail!("DYWEIGHTS_THREADS must be positive");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    Ok(())
}
