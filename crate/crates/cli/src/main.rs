use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use gibbs_transfer::bench::{check_table, cross_check_suite, run_bench, BenchOptions, BenchTable};
use gibbs_transfer::dichotomous::{
    build_ladder, constant_via_dichotomy, dichotomous_marginal, joint_via_dichotomy, state_of_spin, IsingChainParams,
};
use gibbs_transfer::method::{compute_constant, ConstantMethod, Limits};
use gibbs_transfer::model_file::{bundled, load_model, ModelDocument};
use gibbs_transfer::oracle::EnumerationBudget;
use gibbs_transfer::scaled::RandomizedConfig;
use gibbs_transfer::spatial::{spatial_constant, spatial_constant_low_rank, spatial_subset_marginal, SpatialIsingModel};
use gibbs_transfer::transfer::{lift_r_range, TransferChain, DEFAULT_TABLE_CAP};
use gibbs_transfer::{Error, LogValue, MarginalTable};

const EXIT_USAGE: u8 = 2;
const EXIT_CAPACITY: u8 = 3;
const EXIT_CROSS_CHECK: u8 = 4;

/// Normalizing constants and marginals of chain and lattice Gibbs fields.
#[derive(Parser, Debug)]
#[command(name = "gibbs-transfer", version)]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Output::Text)]
    output: Output,
    /// Seed of randomized computations.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Cap on enumerated configurations, dense matrix entries and table cells.
    #[arg(long, global = true)]
    cap: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Output {
    Text,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Normalizing constant of a model file.
    Constant {
        #[command(flatten)]
        model: ModelArg,
        /// auto, power, sweep, eig2x2, eig, future or oracle.
        #[arg(long, default_value = "auto")]
        method: String,
    },
    /// Marginal law of a set of sites.
    Marginal {
        #[command(flatten)]
        model: ModelArg,
        /// Sites, comma separated and increasing (1-based).
        #[arg(long, value_delimiter = ',', required = true)]
        sites: Vec<usize>,
        /// States of the sites; prints a single probability.
        #[arg(long, value_delimiter = ',')]
        config: Option<Vec<usize>>,
    },
    /// Dichotomous thinning of the binary Ising chain on {-1, +1}.
    Dichotomous {
        #[command(subcommand)]
        action: Dichotomy,
    },
    /// Constant of an m x T Ising lattice with spins in {-1, +1}.
    SpatialConstant {
        #[arg(long)]
        m: usize,
        #[arg(long = "T")]
        columns: usize,
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long, allow_hyphen_values = true)]
        beta: f64,
        #[arg(long, allow_hyphen_values = true)]
        delta: f64,
        /// Use a randomized rank-k factorization of the transfer matrix.
        #[arg(long)]
        approx_rank: Option<usize>,
        #[arg(long, default_value_t = 10)]
        oversampling: usize,
        #[arg(long, default_value_t = 1)]
        power_iterations: usize,
    },
    /// Constant of a reference model by every exact method, as CSV.
    Bench {
        /// table1, table2, table3, table4 or random.
        table: String,
        /// Chain lengths (column counts for table4).
        #[arg(long, value_delimiter = ',')]
        sizes: Vec<usize>,
        /// Lattice heights for table4.
        #[arg(long, value_delimiter = ',')]
        heights: Vec<usize>,
        #[arg(long, allow_hyphen_values = true)]
        alpha: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        beta: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        delta: Option<f64>,
        /// Number of models of the random table.
        #[arg(long, default_value_t = 200)]
        models: usize,
        /// Leave out the timing column.
        #[arg(long)]
        no_timing: bool,
    },
    /// Checks every fast route against exhaustive enumeration.
    OracleCheck,
}

#[derive(Args, Debug)]
struct ModelArg {
    /// Model file, or `@example1` / `@example2` for a bundled model.
    model: String,
    /// Replaces the length of a homogeneous model.
    #[arg(long)]
    length: Option<usize>,
}

#[derive(Args, Debug)]
struct ChainParams {
    #[arg(long, allow_hyphen_values = true)]
    alpha: f64,
    #[arg(long, allow_hyphen_values = true)]
    beta: f64,
    /// Depth: the chain has 2^r + 1 sites.
    #[arg(long)]
    r: usize,
}

#[derive(Subcommand, Debug)]
enum Dichotomy {
    /// Thinned parameters of every level.
    Ladder {
        #[command(flatten)]
        params: ChainParams,
    },
    /// Probability of a full configuration.
    Joint {
        #[command(flatten)]
        params: ChainParams,
        /// Spins, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        z: Vec<i32>,
    },
    /// Probability of a configuration of the sites of one level.
    Marginal {
        #[command(flatten)]
        params: ChainParams,
        #[arg(long)]
        level: usize,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        z: Vec<i32>,
    },
    /// Normalizing constant.
    Constant {
        #[command(flatten)]
        params: ChainParams,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            e if e.is_capacity() => EXIT_CAPACITY,
            Error::Numerical(_) => 1,
            _ => EXIT_USAGE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type Outcome = Result<(), Failure>;

struct Context {
    output: Output,
    seed: u64,
    limits: Limits,
    table_cap: usize,
}

fn load(arg: &ModelArg) -> Result<ModelDocument, Error> {
    let doc = match arg.model.strip_prefix('@') {
        Some(name) => bundled(name)?,
        None => load_model(&arg.model)?,
    };
    match arg.length {
        Some(t) => doc.with_length(t),
        None => Ok(doc),
    }
}

fn print_value(ctx: &Context, method: &str, value: LogValue) {
    match ctx.output {
        Output::Text => {
            println!("method   = {method}");
            println!("C        = {}", value.scientific());
            println!("ln C     = {}", value.ln_string());
            println!("log10 C  = {:.10}", value.log10());
        }
        Output::Csv => {
            println!("method,display,ln_c,log10_c");
            println!("{method},{},{},{:.10}", value.scientific(), value.ln_string(), value.log10());
        }
    }
}

fn cmd_constant(ctx: &Context, model: &ModelArg, method: &str) -> Outcome {
    let method: ConstantMethod = method.parse()?;
    let doc = load(model)?;
    let report = compute_constant(&doc, method, ctx.limits)?;
    print_value(ctx, report.method.name(), report.value);
    Ok(())
}

fn marginal_table(ctx: &Context, doc: &ModelDocument, sites: &[usize]) -> Result<MarginalTable, Error> {
    match doc {
        ModelDocument::Chain(_) | ModelDocument::SingletonPair(_) => {
            TransferChain::from_model(&doc.to_chain()?).subset_marginal(sites, ctx.table_cap)
        }
        ModelDocument::RRange(m) => lift_r_range(m, ctx.limits.dense_cap)?.subset_marginal(sites, ctx.table_cap),
        ModelDocument::SpatialIsing(m) => spatial_subset_marginal(m, sites, ctx.table_cap),
    }
}

fn cmd_marginal(ctx: &Context, model: &ModelArg, sites: &[usize], config: Option<&[usize]>) -> Outcome {
    let doc = load(model)?;
    let prefix = sites.iter().enumerate().all(|(i, &s)| s == i + 1);
    let p = match (config, &doc) {
        (Some(z), ModelDocument::Chain(_) | ModelDocument::SingletonPair(_)) if prefix && !sites.is_empty() => {
            let chain = TransferChain::from_model(&doc.to_chain()?);
            Some(chain.prefix_marginal(sites.len(), z)?)
        }
        (Some(z), _) => Some(marginal_table(ctx, &doc, sites)?.get(z)?),
        (None, _) => None,
    };
    if let Some(p) = p {
        match ctx.output {
            Output::Text => println!("{p:.14e}"),
            Output::Csv => println!("probability\n{p:.14e}"),
        }
        return Ok(());
    }
    let table = marginal_table(ctx, &doc, sites)?;
    let label = |state: usize| match &doc {
        ModelDocument::Chain(m) => m.label(state),
        _ => state.to_string(),
    };
    match ctx.output {
        Output::Csv => print!("{}", table.to_csv(label)),
        Output::Text => {
            let header: Vec<String> = sites.iter().map(|s| format!("z{s}")).collect();
            println!("{}  probability", header.join(" "));
            for (z, p) in table.iter() {
                let states: Vec<String> = z.iter().map(|&s| label(s)).collect();
                println!("{}  {p:.14e}", states.join(" "));
            }
            println!("sum  {:.14e}", table.total());
        }
    }
    Ok(())
}

fn spins(z: &[i32]) -> Result<Vec<usize>, Error> {
    z.iter().map(|&s| state_of_spin(s)).collect()
}

fn cmd_dichotomous(ctx: &Context, action: &Dichotomy) -> Outcome {
    let params = match action {
        Dichotomy::Ladder { params }
        | Dichotomy::Joint { params, .. }
        | Dichotomy::Marginal { params, .. }
        | Dichotomy::Constant { params } => params,
    };
    let fp = IsingChainParams::new(params.alpha, params.beta)?;
    match action {
        Dichotomy::Ladder { .. } => {
            let ladder = build_ladder(fp, params.r)?;
            match ctx.output {
                Output::Csv => print!("{}", ladder.to_csv()),
                Output::Text => {
                    println!("{:>3} {:>24} {:>24}", "j", "alpha_j", "beta_j");
                    for j in (1..=params.r + 1).rev() {
                        let l = ladder.level(j)?;
                        println!("{j:>3} {:>24.15e} {:>24.15e}", l.alpha, l.beta);
                    }
                }
            }
        }
        Dichotomy::Joint { z, .. } => {
            let p = joint_via_dichotomy(fp, params.r, &spins(z)?)?;
            println!("{p:.14e}");
        }
        Dichotomy::Marginal { level, z, .. } => {
            let p = dichotomous_marginal(fp, params.r, *level, &spins(z)?)?;
            println!("{p:.14e}");
        }
        Dichotomy::Constant { .. } => {
            let c = constant_via_dichotomy(fp, params.r)?;
            print_value(ctx, "dichotomous", c);
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_spatial(
    ctx: &Context,
    m: usize,
    columns: usize,
    alpha: f64,
    beta: f64,
    delta: f64,
    approx_rank: Option<usize>,
    oversampling: usize,
    power_iterations: usize,
) -> Outcome {
    let sm = SpatialIsingModel::new(m, columns, alpha, beta, delta)?;
    match approx_rank {
        None => {
            if (1usize << m.min(63)) > ctx.limits.column_cap {
                return Err(Error::CapExceeded {
                    what: "column states",
                    needed: 1u128 << m.min(127),
                    cap: ctx.limits.column_cap as u128,
                }
                .into());
            }
            print_value(ctx, "sweep", spatial_constant(&sm)?);
        }
        Some(k) => {
            let config = RandomizedConfig::new(k, oversampling)
                .with_seed(ctx.seed)
                .with_power_iterations(power_iterations);
            let (c, error) = spatial_constant_low_rank(&sm, config, ctx.limits.dense_cap)?;
            print_value(ctx, &format!("rank-{k}"), c);
            match ctx.output {
                Output::Text => println!("relative Frobenius error of the factorization = {error:.6e}"),
                Output::Csv => println!("frobenius_error\n{error:.6e}"),
            }
        }
    }
    Ok(())
}

fn cmd_bench(table: &str, options: BenchOptions, no_timing: bool) -> Outcome {
    let table: BenchTable = table.parse()?;
    let report = run_bench(table, &options)?;
    print!("{}", report.to_csv(!no_timing));
    if !report.all_agree() {
        return Err(Failure {
            code: EXIT_CROSS_CHECK,
            message: "exact methods disagree".into(),
        });
    }
    Ok(())
}

fn cmd_oracle_check(ctx: &Context) -> Outcome {
    let results = cross_check_suite(ctx.seed, ctx.limits)?;
    match ctx.output {
        Output::Text => print!("{}", check_table(&results)),
        Output::Csv => {
            println!("check,cases,worst,tolerance,result");
            for r in &results {
                println!(
                    "{},{},{:.6e},{:.0e},{}",
                    r.name,
                    r.cases,
                    r.worst,
                    r.tolerance,
                    if r.passed() { "pass" } else { "fail" }
                );
            }
        }
    }
    if results.iter().all(|r| r.passed()) {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_CROSS_CHECK,
            message: "cross-check failed".into(),
        })
    }
}

fn run(cli: Cli) -> Outcome {
    let mut limits = Limits::default();
    let mut table_cap = DEFAULT_TABLE_CAP;
    if let Some(cap) = cli.cap {
        let cap_usize = usize::try_from(cap).unwrap_or(usize::MAX);
        limits.budget = EnumerationBudget::new(cap as u128);
        limits.dense_cap = cap_usize;
        limits.column_cap = cap_usize;
        table_cap = cap_usize;
    }
    let ctx = Context {
        output: cli.output,
        seed: cli.seed,
        limits,
        table_cap,
    };
    match &cli.command {
        Command::Constant { model, method } => cmd_constant(&ctx, model, method),
        Command::Marginal { model, sites, config } => cmd_marginal(&ctx, model, sites, config.as_deref()),
        Command::Dichotomous { action } => cmd_dichotomous(&ctx, action),
        Command::SpatialConstant {
            m,
            columns,
            alpha,
            beta,
            delta,
            approx_rank,
            oversampling,
            power_iterations,
        } => cmd_spatial(&ctx, *m, *columns, *alpha, *beta, *delta, *approx_rank, *oversampling, *power_iterations),
        Command::Bench {
            table,
            sizes,
            heights,
            alpha,
            beta,
            delta,
            models,
            no_timing,
        } => {
            let mut options = BenchOptions {
                lengths: sizes.clone(),
                models: *models,
                seed: ctx.seed,
                limits: ctx.limits,
                ..Default::default()
            };
            if !heights.is_empty() {
                options.heights = heights.clone();
            }
            let (a, b, d) = options.lattice;
            options.lattice = (alpha.unwrap_or(a), beta.unwrap_or(b), delta.unwrap_or(d));
            cmd_bench(table, options, *no_timing)
        }
        Command::OracleCheck => cmd_oracle_check(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
