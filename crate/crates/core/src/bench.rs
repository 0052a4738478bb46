//! Method-comparison reports and the cross-validation suite.
//!
//! A report evaluates the same constant with every applicable exact method
//! and flags each row against the first method run on that input. Timings
//! are recorded but carry no meaning for agreement.

use std::fmt::Write as _;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dichotomous::{build_ladder, constant_via_dichotomy, joint_via_dichotomy, IsingChainParams};
use crate::error::{Error, Result};
use crate::future::{constant_via_future, TwoLagModel};
use crate::method::{compute_constant, ConstantMethod, Limits};
use crate::model::{ChainModel, EnergyModel, LogTable, PerSite, RRangeModel, SingletonPairModel};
use crate::model_file::{bundled, ModelDocument};
use crate::oracle::{brute_constant, brute_marginal_table, for_each_configuration};
use crate::scaled::LogValue;
use crate::spatial::{spatial_constant_directed, spatial_subset_marginal, SpatialIsingModel, SweepDirection};
use crate::transfer::{lift_r_range, subset_marginal, TransferChain, DEFAULT_TABLE_CAP};

/// Largest tolerated `|Δ log10 C|` between exact methods.
pub const AGREEMENT_TOLERANCE: f64 = 1e-9;

/// Which comparison to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BenchTable {
    /// Binary chain `z − 0.8 z z'` at short lengths, oracle included.
    Table1,
    /// Binary chain at long lengths.
    Table2,
    /// Bivariate binary chain on `{0, 1}²`.
    Table3,
    /// Lattice Ising fields, sizes given as `(m, T)`.
    Table4,
    /// Seeded random chains.
    Random,
}

impl FromStr for BenchTable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table1" => Ok(BenchTable::Table1),
            "table2" => Ok(BenchTable::Table2),
            "table3" => Ok(BenchTable::Table3),
            "table4" => Ok(BenchTable::Table4),
            "random" => Ok(BenchTable::Random),
            _ => Err(Error::InvalidArgument(format!(
                "unknown table `{s}` (table1, table2, table3, table4, random)"
            ))),
        }
    }
}

impl BenchTable {
    pub fn name(self) -> &'static str {
        match self {
            BenchTable::Table1 => "table1",
            BenchTable::Table2 => "table2",
            BenchTable::Table3 => "table3",
            BenchTable::Table4 => "table4",
            BenchTable::Random => "random",
        }
    }

    /// Lengths evaluated when no grid is given.
    pub fn default_lengths(self) -> Vec<usize> {
        match self {
            BenchTable::Table1 => vec![10, 20, 25, 500],
            BenchTable::Table2 => vec![1000, 10_000, 1_000_000],
            BenchTable::Table3 => vec![500, 1000, 10_000],
            BenchTable::Table4 => vec![4, 10],
            BenchTable::Random => vec![],
        }
    }
}

/// Options of a report run.
#[derive(Clone, Debug)]
pub struct BenchOptions {
    /// Chain lengths (`T`); for lattices, column counts.
    pub lengths: Vec<usize>,
    /// Lattice heights.
    pub heights: Vec<usize>,
    /// Lattice parameters `(α, β, δ)`.
    pub lattice: (f64, f64, f64),
    /// Number of models of the random table.
    pub models: usize,
    pub seed: u64,
    pub limits: Limits,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            lengths: Vec::new(),
            heights: vec![2, 4, 6],
            lattice: (0.2, 0.1, 0.1),
            models: 200,
            seed: 0,
            limits: Limits::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub table: &'static str,
    /// Label of the input, identical for every method run on it.
    pub input: String,
    pub method: String,
    pub seconds: f64,
    pub value: LogValue,
    pub reference: String,
    pub agree: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn all_agree(&self) -> bool {
        self.rows.iter().all(|r| r.agree)
    }

    /// CSV with one row per (input, method). Without timings the output is
    /// byte-stable across runs.
    pub fn to_csv(&self, timings: bool) -> String {
        let mut out = String::from("table,input,method,");
        if timings {
            out.push_str("seconds,");
        }
        out.push_str("log10_c,ln_c,display,reference,agreement\n");
        for r in &self.rows {
            let _ = write!(out, "{},{},{},", r.table, r.input, r.method);
            if timings {
                let _ = write!(out, "{:.6e},", r.seconds);
            }
            let _ = writeln!(
                out,
                "{:.10},{},{},{},{}",
                r.value.log10(),
                r.value.ln_string(),
                r.value.scientific(),
                r.reference,
                if r.agree { "agree" } else { "DISAGREE" }
            );
        }
        out
    }

    /// Runs each named computation on one input and flags the rows.
    fn compare(&mut self, table: &'static str, input: String, runs: Vec<Run<'_>>) -> Result<()> {
        let mut first: Option<(String, f64)> = None;
        for (name, run) in runs {
            let start = Instant::now();
            let value = match run() {
                Ok(v) => v,
                Err(e) if e.is_capacity() => continue,
                Err(e) => return Err(e),
            };
            let seconds = start.elapsed().as_secs_f64();
            let (reference, ref_log10) = first.get_or_insert_with(|| (name.clone(), value.log10())).clone();
            self.rows.push(BenchRow {
                table,
                input: input.clone(),
                method: name,
                seconds,
                value,
                reference,
                agree: (value.log10() - ref_log10).abs() <= AGREEMENT_TOLERANCE,
            });
        }
        Ok(())
    }
}

type Run<'a> = (String, Box<dyn FnOnce() -> Result<LogValue> + 'a>);

fn document_runs<'a>(doc: &'a ModelDocument, methods: &[ConstantMethod], limits: Limits) -> Vec<Run<'a>> {
    methods
        .iter()
        .map(|&m| {
            let run: Box<dyn FnOnce() -> Result<LogValue>> =
                Box::new(move || compute_constant(doc, m, limits).map(|r| r.value));
            (m.name().to_string(), run)
        })
        .collect()
}

/// A seeded random chain: `N ∈ 2..=4`, entries uniform in `[−2, 2]`, half of
/// them homogeneous. Half the lengths fall in `2..=12`, the rest in `13..=64`.
pub fn random_chain(rng: &mut ChaCha8Rng) -> ChainModel {
    let n = rng.random_range(2..=4);
    let length = if rng.random_bool(0.5) {
        rng.random_range(2..=12)
    } else {
        rng.random_range(13..=64)
    };
    let homogeneous = rng.random_bool(0.5);
    let mut table = || LogTable::from_fn(n, |_, _| rng.random_range(-2.0..=2.0)).expect("finite table");
    if homogeneous {
        ChainModel::homogeneous(length, table()).expect("valid length")
    } else {
        ChainModel::explicit((1..length).map(|_| table()).collect()).expect("valid tables")
    }
}

/// The `count` random chains of seed `seed`.
pub fn random_chains(seed: u64, count: usize) -> Vec<ChainModel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_chain(&mut rng)).collect()
}

/// Oracle-checked lengths of random chains.
pub const RANDOM_ORACLE_MAX_LENGTH: usize = 12;

pub fn run_bench(table: BenchTable, options: &BenchOptions) -> Result<BenchReport> {
    let limits = options.limits;
    let lengths = if options.lengths.is_empty() {
        table.default_lengths()
    } else {
        options.lengths.clone()
    };
    let mut report = BenchReport::default();
    use ConstantMethod::*;
    match table {
        BenchTable::Table1 | BenchTable::Table2 | BenchTable::Table3 => {
            let (base, methods): (_, &[ConstantMethod]) = match table {
                BenchTable::Table3 => (bundled("example2")?, &[Sweep, Power, Eig, Future, Oracle]),
                _ => (bundled("example1")?, &[Sweep, Power, Eig2x2, Eig, Future, Oracle]),
            };
            for &t in &lengths {
                let doc = base.with_length(t)?;
                report.compare(table.name(), format!("T={t}"), document_runs(&doc, methods, limits))?;
            }
        }
        BenchTable::Table4 => {
            let (a, b, d) = options.lattice;
            for &m in &options.heights {
                for &t in &lengths {
                    let sm = SpatialIsingModel::new(m, t, a, b, d)?;
                    let runs: Vec<Run> = vec![
                        (
                            "sweep".into(),
                            Box::new(|| spatial_constant_directed(&sm, SweepDirection::LeftToRight, limits.column_cap)),
                        ),
                        (
                            "sweep-reversed".into(),
                            Box::new(|| spatial_constant_directed(&sm, SweepDirection::RightToLeft, limits.column_cap)),
                        ),
                        (
                            "power".into(),
                            Box::new(|| {
                                compute_constant(&ModelDocument::SpatialIsing(sm), Power, limits).map(|r| r.value)
                            }),
                        ),
                        ("oracle".into(), Box::new(|| brute_constant(&sm, limits.budget))),
                    ];
                    report.compare(table.name(), format!("m={m};T={t}"), runs)?;
                }
            }
        }
        BenchTable::Random => {
            for (i, chain) in random_chains(options.seed, options.models).into_iter().enumerate() {
                let doc = ModelDocument::Chain(chain);
                let mut methods = vec![Sweep, Future];
                if doc.to_chain()?.is_homogeneous() {
                    methods.push(Power);
                }
                if doc.length() <= RANDOM_ORACLE_MAX_LENGTH {
                    methods.push(Oracle);
                }
                let ModelDocument::Chain(c) = &doc else { unreachable!() };
                let input = format!("model={i};N={};T={}", c.n_states(), c.length());
                report.compare(table.name(), input, document_runs(&doc, &methods, limits))?;
            }
        }
    }
    Ok(report)
}

/// One line of the cross-validation suite.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub cases: usize,
    pub worst: f64,
    pub tolerance: f64,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.worst <= self.tolerance
    }
}

fn relative_ln(a: LogValue, b: LogValue) -> f64 {
    (a.ln() - b.ln()).abs() / b.ln().abs().max(1.0)
}

fn max_entry_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Every fast route checked against exhaustive enumeration on small inputs.
pub fn cross_check_suite(seed: u64, limits: Limits) -> Result<Vec<CheckResult>> {
    let budget = limits.budget;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();

    let mut worst = 0.0f64;
    let mut cases = 0;
    for chain in random_chains(seed, 60) {
        if chain.length() > 10 {
            continue;
        }
        let o = brute_constant(&chain, budget)?;
        let tc = TransferChain::from_model(&chain);
        worst = worst.max(relative_ln(tc.constant_sweep()?, o));
        worst = worst.max(relative_ln(tc.constant_sweep_reversed()?, o));
        worst = worst.max(relative_ln(constant_via_future(&SingletonPairModel::from_chain(&chain))?, o));
        if tc.is_uniform() {
            worst = worst.max(relative_ln(tc.constant_power()?, o));
        }
        cases += 1;
    }
    out.push(CheckResult {
        name: "chain constants",
        cases,
        worst,
        tolerance: 1e-10,
    });

    let mut worst = 0.0f64;
    let mut cases = 0;
    for n in [2, 3] {
        let length = 6;
        let tables = (1..length)
            .map(|_| LogTable::from_fn(n, |_, _| rng.random_range(-2.0..2.0)))
            .collect::<Result<Vec<_>>>()?;
        let chain = ChainModel::explicit(tables)?;
        for sites in [vec![1], vec![6], vec![2, 4], vec![1, 6], vec![1, 3, 6], vec![2, 3, 5]] {
            let a = subset_marginal(&chain, &sites)?;
            let b = brute_marginal_table(&chain, &sites, budget)?;
            worst = worst.max(max_entry_gap(a.probs(), b.probs()));
            cases += 1;
        }
    }
    out.push(CheckResult {
        name: "subset marginals",
        cases,
        worst,
        tolerance: 1e-12,
    });

    let mut worst = 0.0f64;
    let mut cases = 0;
    for length in [4, 6, 8] {
        let factors = (0..length - 2)
            .map(|_| (0..8).map(|_| rng.random_range(-1.5..1.5)).collect())
            .collect();
        let model = RRangeModel::new(2, length, 2, PerSite::Varying(factors))?;
        let lifted = lift_r_range(&model, limits.dense_cap)?;
        worst = worst.max(relative_ln(lifted.normalizing_constant()?, brute_constant(&model, budget)?));
        let a = lifted.subset_marginal(&[1, length], DEFAULT_TABLE_CAP)?;
        let b = brute_marginal_table(&model, &[1, length], budget)?;
        worst = worst.max(max_entry_gap(a.probs(), b.probs()));
        cases += 1;
    }
    out.push(CheckResult {
        name: "range-2 lift",
        cases,
        worst,
        tolerance: 1e-12,
    });

    let mut worst = 0.0f64;
    let mut cases = 0;
    for length in [3, 5] {
        let theta = rng.random_range(-1.0..1.0);
        let lag = |rng: &mut ChaCha8Rng| LogTable::from_fn(2, |_, _| rng.random_range(-1.0..1.0));
        let (l1, l2) = (lag(&mut rng)?, lag(&mut rng)?);
        let model = TwoLagModel::homogeneous(length, vec![0.0, theta], l1, l2)?;
        worst = worst.max(relative_ln(model.constant(limits.dense_cap)?, brute_constant(&model, budget)?));
        cases += 1;
    }
    out.push(CheckResult {
        name: "two-lag future recursion",
        cases,
        worst,
        tolerance: 1e-10,
    });

    let mut worst = 0.0f64;
    let mut cases = 0;
    for (m, t) in [(1, 3), (2, 3), (2, 4), (3, 3), (4, 4)] {
        let sm = SpatialIsingModel::new(
            m,
            t,
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        )?;
        let o = brute_constant(&sm, budget)?;
        worst = worst.max(relative_ln(spatial_constant_directed(&sm, SweepDirection::LeftToRight, limits.column_cap)?, o));
        worst = worst.max(relative_ln(spatial_constant_directed(&sm, SweepDirection::RightToLeft, limits.column_cap)?, o));
        let a = spatial_subset_marginal(&sm, &[1, t], DEFAULT_TABLE_CAP)?;
        let b = brute_marginal_table(&sm, &[1, t], budget)?;
        worst = worst.max(max_entry_gap(a.probs(), b.probs()));
        cases += 1;
    }
    out.push(CheckResult {
        name: "lattice constants and marginals",
        cases,
        worst,
        tolerance: 1e-10,
    });

    let mut worst = 0.0f64;
    let mut cases = 0;
    for (alpha, beta) in [(1.0, -0.8), (-0.5, 1.2), (0.3, 0.0)] {
        let fp = IsingChainParams::new(alpha, beta)?;
        for r in [2, 3] {
            let ladder = build_ladder(fp, r)?;
            let length = ladder.length();
            let chain = fp.chain_model(length)?;
            let c = brute_constant(&chain, budget)?;
            let mut ok = Ok(());
            for_each_configuration(2, length, |z| {
                if ok.is_err() {
                    return;
                }
                match (joint_via_dichotomy(fp, r, z), chain.energy(z)) {
                    (Ok(p), Ok(e)) => {
                        let exact = (e - c.ln()).exp();
                        worst = worst.max((p - exact).abs() / exact);
                    }
                    (Err(e), _) | (_, Err(e)) => ok = Err(e),
                }
            });
            ok?;
            worst = worst.max(relative_ln(constant_via_dichotomy(fp, r)?, c));
            cases += 1;
        }
    }
    out.push(CheckResult {
        name: "dichotomous joint and constant",
        cases,
        worst,
        tolerance: 1e-10,
    });
    Ok(out)
}

/// Fixed-width summary of the suite.
pub fn check_table(results: &[CheckResult]) -> String {
    let mut out = format!("{:<34} {:>6} {:>12} {:>10}  result\n", "check", "cases", "worst", "tolerance");
    for r in results {
        let _ = writeln!(
            out,
            "{:<34} {:>6} {:>12.3e} {:>10.0e}  {}",
            r.name,
            r.cases,
            r.worst,
            r.tolerance,
            if r.passed() { "pass" } else { "FAIL" }
        );
    }
    out
}
