//! The four subcommands: closed-form exponents (single point and sweep),
//! Monte Carlo simulation, and finite-SNR allocation search.

use std::path::PathBuf;

use dexp_core::montecarlo::{simulate_allocation, SimulationConfig};
use dexp_core::optimizer::{optimize_finite_snr, SearchSpace};
use dexp_core::{exponents, staircase};
use dexp_core::{ChannelSpec, ExponentResult, LayerAllocation, Layers, Scheme};
use serde::Serialize;

use crate::output::{emit, fmt, to_json_string, Table};
use crate::scenario::{OutputFormat, Range3, Scenario, SchemeChoice};

/// A command failure together with the process exit code it maps to:
/// 2 for usage errors, 3 for domain preconditions, 4 for infeasible or
/// oversized computations, 1 for I/O trouble.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(dexp_core::Error),
    Io(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) => match e {
                dexp_core::Error::Infeasible(_) | dexp_core::Error::GridTooLarge { .. } => 4,
                _ => 3,
            },
            CliError::Io(_) => 1,
        }
    }

    pub fn message(&self) -> String {
        match self {
            CliError::Usage(m) => m.clone(),
            CliError::Core(e) => e.to_string(),
            CliError::Io(m) => m.clone(),
        }
    }
}

impl From<dexp_core::Error> for CliError {
    fn from(e: dexp_core::Error) -> Self {
        CliError::Core(e)
    }
}

fn parse_positive(text: &str) -> Result<f64, String> {
    let v: f64 = text.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be positive, got {v}"))
    }
}

#[derive(clap::Args)]
pub struct ChannelArgs {
    /// Transmit antennas
    #[arg(long = "mt", value_name = "N")]
    pub mt: Option<u32>,
    /// Receive antennas
    #[arg(long = "mr", value_name = "N")]
    pub mr: Option<u32>,
    /// Independent fading blocks per codeword
    #[arg(long, value_name = "L")]
    pub blocks: Option<u32>,
}

#[derive(clap::Args)]
pub struct IoArgs {
    /// Scenario file (JSON). A previous JSON output also works; its
    /// embedded scenario is reused. Explicit flags override file values.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Write the result here instead of stdout
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Output format
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
}

#[derive(clap::Args)]
pub struct ExponentArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,
    /// Bandwidth ratio (channel uses per source sample)
    #[arg(long, value_parser = parse_positive)]
    pub b: Option<f64>,
    /// Scheme: ub | single | ls | hls | bs
    #[arg(long)]
    pub scheme: Option<String>,
    /// Layer count (integer, or "inf" for the infinite-layer limit)
    #[arg(long)]
    pub layers: Option<String>,
    #[command(flatten)]
    pub io: IoArgs,
}

#[derive(clap::Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,
    /// Single bandwidth ratio (equivalent to a one-point range)
    #[arg(long, value_parser = parse_positive, conflicts_with = "b_range")]
    pub b: Option<f64>,
    /// Bandwidth-ratio grid MIN:MAX:STEP
    #[arg(long = "b-range", value_name = "MIN:MAX:STEP", value_parser = Range3::parse)]
    pub b_range: Option<Range3>,
    /// Comma-separated schemes, e.g. "ub,ls,bs"
    #[arg(long)]
    pub scheme: Option<String>,
    /// Layer counts, one per scheme or a single broadcast value
    #[arg(long)]
    pub layers: Option<String>,
    #[command(flatten)]
    pub io: IoArgs,
}

#[derive(clap::Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,
    /// Bandwidth ratio (channel uses per source sample)
    #[arg(long, value_parser = parse_positive)]
    pub b: Option<f64>,
    /// Scheme: single | ls | hls | bs
    #[arg(long)]
    pub scheme: Option<String>,
    /// Number of layers (finite)
    #[arg(long)]
    pub layers: Option<String>,
    /// SNR grid MIN:MAX:STEP in dB (or a single value)
    #[arg(long = "snr-db", value_name = "MIN:MAX:STEP", value_parser = Range3::parse,
          allow_hyphen_values = true)]
    pub snr_db: Option<Range3>,
    /// Channel realizations per SNR point
    #[arg(long)]
    pub trials: Option<u64>,
    /// Base seed for the trial generators
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (any value gives bitwise-identical results)
    #[arg(long)]
    pub shards: Option<usize>,
    /// Per-layer power backoff exponent for superposed layers
    #[arg(long)]
    pub epsilon0: Option<f64>,
    #[command(flatten)]
    pub io: IoArgs,
}

#[derive(clap::Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,
    /// Bandwidth ratio (channel uses per source sample)
    #[arg(long, value_parser = parse_positive)]
    pub b: Option<f64>,
    /// Scheme: single | ls | hls | bs
    #[arg(long)]
    pub scheme: Option<String>,
    /// Number of layers (1–3)
    #[arg(long)]
    pub layers: Option<String>,
    /// Operating SNR in dB (a single value)
    #[arg(long = "snr-db", value_name = "DB", value_parser = Range3::parse,
          allow_hyphen_values = true)]
    pub snr_db: Option<Range3>,
    /// Smallest per-layer rate in bits per channel use
    #[arg(long)]
    pub rate_min: Option<f64>,
    /// Largest per-layer rate (defaults to the multiplexing limit)
    #[arg(long)]
    pub rate_max: Option<f64>,
    /// Rate grid step in bits per channel use
    #[arg(long)]
    pub rate_step: Option<f64>,
    /// Time-share / power-fraction grid step (must divide 1)
    #[arg(long)]
    pub share_step: Option<f64>,
    /// Trials per candidate when Monte Carlo scoring is needed
    #[arg(long)]
    pub trials: Option<u64>,
    /// Base seed for Monte Carlo scoring
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for Monte Carlo scoring
    #[arg(long)]
    pub shards: Option<usize>,
    /// Per-layer power backoff exponent for superposed layers
    #[arg(long)]
    pub epsilon0: Option<f64>,
    #[command(flatten)]
    pub io: IoArgs,
}

/// Computes one scheme's exponent (and allocation where one exists).
fn exponent_result(
    spec: &ChannelSpec,
    choice: SchemeChoice,
    b: f64,
) -> Result<ExponentResult, CliError> {
    let result = match (choice.scheme, choice.layers) {
        (Scheme::UpperBound, _) => ExponentResult {
            scheme: Scheme::UpperBound,
            layers: Layers::Infinite,
            bandwidth_ratio: b,
            exponent: exponents::upper_bound(spec, b)?,
            allocation: None,
        },
        (Scheme::SingleLayer, _) => exponents::single_layer(spec, b)?,
        (Scheme::Ls, Layers::Infinite) => exponents::ls_infinite(spec, b)?,
        (Scheme::Hls, Layers::Infinite) => exponents::hls_infinite(spec, b)?,
        (Scheme::Bs, Layers::Infinite) => exponents::bs_infinite(spec, b)?,
        (Scheme::Bs, Layers::Finite(n)) => exponents::bs_finite(spec, b, n)?,
        (Scheme::Ls, Layers::Finite(n)) => {
            let (allocation, exponent) = staircase::solve_ls_staircase(&spec.dmt(), b, n, None)?;
            ExponentResult {
                scheme: Scheme::Ls,
                layers: Layers::Finite(n),
                bandwidth_ratio: b,
                exponent,
                allocation: Some(allocation),
            }
        }
        (Scheme::Hls, Layers::Finite(n)) => {
            let (allocation, exponent) = staircase::solve_hls_staircase(&spec.dmt(), b, n, None)?;
            ExponentResult {
                scheme: Scheme::Hls,
                layers: Layers::Finite(n),
                bandwidth_ratio: b,
                exponent,
                allocation: Some(allocation),
            }
        }
    };
    Ok(result)
}

/// One output row of `exponent`/`sweep`.
#[derive(Serialize)]
struct SweepRow {
    b: f64,
    scheme: Scheme,
    layers: Layers,
    exponent: f64,
}

fn sweep_table(rows: &[SweepRow]) -> Table {
    Table {
        header: ["b", "scheme", "layers", "exponent"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        rows: rows
            .iter()
            .map(|r| {
                vec![
                    fmt(r.b),
                    r.scheme.to_string(),
                    r.layers.to_string(),
                    fmt(r.exponent),
                ]
            })
            .collect(),
    }
}

pub fn cmd_exponent(args: ExponentArgs) -> Result<(), CliError> {
    let mut scenario = Scenario::load_or_default(args.io.config.as_deref())?;
    scenario.apply_channel(args.channel.mt, args.channel.mr, args.channel.blocks);
    scenario.apply_schemes(args.scheme.as_deref(), args.layers.as_deref())?;
    if let Some(b) = args.b {
        scenario.b = Some(b);
        scenario.b_range = None;
    }
    if let Some(f) = args.io.format {
        scenario.format = f;
    }

    let spec = scenario.channel_spec()?;
    let b = scenario
        .b
        .or_else(|| scenario.b_range.and_then(|r| r.single()))
        .ok_or_else(|| CliError::Usage("--b is required".to_string()))?;
    let choice = scenario.single_scheme()?;
    let result = exponent_result(&spec, choice, b)?;

    let row = SweepRow {
        b,
        scheme: result.scheme,
        layers: result.layers,
        exponent: result.exponent,
    };
    let content = match scenario.format {
        OutputFormat::Csv => sweep_table(std::slice::from_ref(&row)).to_csv(),
        OutputFormat::Json => to_json_string(&serde_json::json!({
            "scenario": scenario,
            "rows": [result],
        })),
    };
    emit(args.io.out.as_deref(), &content)?;

    eprint!(
        "{spec}, {} ({} layers), b = {}: exponent {}",
        result.scheme,
        result.layers,
        fmt(b),
        fmt(result.exponent)
    );
    if let Some(alloc) = &result.allocation {
        eprint!("; gains {}", summarize(&alloc.gains));
        if !alloc.time_shares.is_empty() {
            eprint!(", shares {}", summarize(&alloc.time_shares));
        }
        if let Some(a) = alloc.analog_share {
            eprint!(", analog share {a:.4}");
        }
    }
    eprintln!();
    Ok(())
}

pub fn cmd_sweep(args: SweepArgs) -> Result<(), CliError> {
    let mut scenario = Scenario::load_or_default(args.io.config.as_deref())?;
    scenario.apply_channel(args.channel.mt, args.channel.mr, args.channel.blocks);
    scenario.apply_schemes(args.scheme.as_deref(), args.layers.as_deref())?;
    if let Some(b) = args.b {
        scenario.b = Some(b);
        scenario.b_range = None;
    }
    if let Some(r) = args.b_range {
        scenario.b_range = Some(r);
        scenario.b = None;
    }
    if let Some(f) = args.io.format {
        scenario.format = f;
    }

    let spec = scenario.channel_spec()?;
    let range = scenario
        .b_range
        .or(scenario.b.map(|b| Range3 {
            min: b,
            max: b,
            step: 1.0,
        }))
        .ok_or_else(|| CliError::Usage("--b-range (or --b) is required".to_string()))?;
    // Normalize the resolved scenario to the range form.
    scenario.b_range = Some(range);
    scenario.b = None;
    let grid = range.expand().map_err(CliError::Usage)?;
    if scenario.schemes.is_empty() {
        return Err(CliError::Usage(
            "at least one scheme is required (--scheme ub,ls,…)".to_string(),
        ));
    }

    let mut rows = Vec::with_capacity(grid.len() * scenario.schemes.len());
    for &b in &grid {
        for &choice in &scenario.schemes {
            let result = exponent_result(&spec, choice, b)?;
            rows.push(SweepRow {
                b,
                scheme: result.scheme,
                layers: result.layers,
                exponent: result.exponent,
            });
        }
    }

    let content = match scenario.format {
        OutputFormat::Csv => sweep_table(&rows).to_csv(),
        OutputFormat::Json => to_json_string(&serde_json::json!({
            "scenario": scenario,
            "rows": rows,
        })),
    };
    emit(args.io.out.as_deref(), &content)?;
    eprintln!(
        "{spec}: {} rows ({} bandwidth points × {} schemes)",
        rows.len(),
        grid.len(),
        scenario.schemes.len()
    );
    Ok(())
}

/// The asymptotically optimal allocation for a scheme at `n` layers.
fn derive_allocation(
    spec: &ChannelSpec,
    choice: SchemeChoice,
    b: f64,
) -> Result<LayerAllocation, CliError> {
    let n = match choice.layers {
        Layers::Finite(n) => n,
        Layers::Infinite => {
            return Err(CliError::Usage(
                "simulation transmits a concrete allocation; give a finite --layers".to_string(),
            ))
        }
    };
    let allocation = match choice.scheme {
        Scheme::UpperBound => {
            return Err(CliError::Usage(
                "the upper bound cannot be simulated; pick single, ls, hls, or bs".to_string(),
            ))
        }
        Scheme::SingleLayer => {
            if n != 1 {
                return Err(CliError::Usage(format!(
                    "the single-layer scheme has exactly one layer, got {n}"
                )));
            }
            exponents::single_layer(spec, b)?
                .allocation
                .expect("the single-layer solver always returns its allocation")
        }
        Scheme::Ls => staircase::solve_ls_staircase(&spec.dmt(), b, n, None)?.0,
        Scheme::Hls => staircase::solve_hls_staircase(&spec.dmt(), b, n, None)?.0,
        Scheme::Bs => staircase::bs_allocation(spec, b, n)?,
    };
    Ok(allocation)
}

/// The SNR-decay exponent this allocation achieves in theory, computed
/// from the decay terms of the allocation itself (so it also covers
/// explicit allocations that no solver produced).
fn theoretical_exponent(
    spec: &ChannelSpec,
    alloc: &LayerAllocation,
    b: f64,
) -> Result<f64, CliError> {
    let curve = spec.dmt();
    let equal_shares;
    let shares: &[f64] = if alloc.time_shares.is_empty() && !alloc.gains.is_empty() {
        equal_shares = vec![1.0 / alloc.n() as f64; alloc.n()];
        &equal_shares
    } else {
        &alloc.time_shares
    };
    let exponent = match alloc.scheme {
        Scheme::SingleLayer | Scheme::Ls => {
            staircase::ls_decay_exponent(&curve, b, &alloc.gains, shares)?
        }
        Scheme::Hls => staircase::hls_decay_exponent(&curve, b, &alloc.gains, shares)?,
        Scheme::Bs => staircase::bs_decay_terms(spec, b, &alloc.gains)?
            .into_iter()
            .fold(f64::INFINITY, f64::min),
        Scheme::UpperBound => {
            return Err(CliError::Usage(
                "the upper bound has no transmission scheme".to_string(),
            ))
        }
    };
    Ok(exponent)
}

pub fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let mut scenario = Scenario::load_or_default(args.io.config.as_deref())?;
    scenario.apply_channel(args.channel.mt, args.channel.mr, args.channel.blocks);
    scenario.apply_schemes(args.scheme.as_deref(), args.layers.as_deref())?;
    if let Some(b) = args.b {
        scenario.b = Some(b);
        scenario.b_range = None;
    }
    if let Some(r) = args.snr_db {
        scenario.snr_db = Some(r);
    }
    if let Some(v) = args.trials {
        scenario.trials = v;
    }
    if let Some(v) = args.seed {
        scenario.seed = v;
    }
    if let Some(v) = args.shards {
        scenario.shards = v;
    }
    if let Some(v) = args.epsilon0 {
        scenario.epsilon0 = v;
    }
    if let Some(f) = args.io.format {
        scenario.format = f;
    }

    let spec = scenario.channel_spec()?;
    let b = scenario
        .b
        .ok_or_else(|| CliError::Usage("--b is required".to_string()))?;
    let choice = scenario.single_scheme()?;
    let snr = scenario
        .snr_db
        .ok_or_else(|| CliError::Usage("--snr-db is required".to_string()))?;
    let cfg = SimulationConfig {
        snr_grid_db: snr.expand().map_err(CliError::Usage)?,
        trials: scenario.trials,
        seed: scenario.seed,
        epsilon0: scenario.epsilon0,
        shards: scenario.shards,
    };

    let allocation = match &scenario.allocation {
        Some(explicit) => {
            if explicit.scheme != choice.scheme {
                return Err(CliError::Usage(format!(
                    "the configured allocation belongs to scheme {}, but {} was requested",
                    explicit.scheme, choice.scheme
                )));
            }
            explicit.clone()
        }
        None => derive_allocation(&spec, choice, b)?,
    };
    let theoretical = theoretical_exponent(&spec, &allocation, b)?;
    let estimate = simulate_allocation(&spec, &allocation, b, &cfg)?;
    scenario.allocation = Some(allocation.clone());

    let content = match scenario.format {
        OutputFormat::Csv => {
            let mut header = vec![
                "snr_db".to_string(),
                "expected_distortion".to_string(),
                "ed_stderr".to_string(),
            ];
            for k in 1..=allocation.n() {
                header.push(format!("outage_layer_{k}"));
            }
            let rows = estimate
                .per_snr
                .iter()
                .map(|p| {
                    let mut row = vec![fmt(p.snr_db), fmt(p.expected_distortion), fmt(p.ed_stderr)];
                    row.extend(p.layer_outage_rates.iter().map(|&x| fmt(x)));
                    row
                })
                .collect();
            Table { header, rows }.to_csv()
        }
        OutputFormat::Json => to_json_string(&serde_json::json!({
            "scenario": scenario,
            "theoretical_exponent": theoretical,
            "estimate": estimate,
        })),
    };
    emit(args.io.out.as_deref(), &content)?;

    match (estimate.fitted_exponent, estimate.fit_stderr) {
        (Some(slope), Some(stderr)) => {
            let tolerance = (3.0 * stderr).max(0.1);
            let verdict = if (slope - theoretical).abs() <= tolerance {
                "is consistent with"
            } else {
                "DEVIATES from"
            };
            eprintln!(
                "fitted exponent {slope:.4} ± {stderr:.4} {verdict} the theoretical \
                 {theoretical:.4} (tolerance {tolerance:.4})"
            );
        }
        _ => eprintln!(
            "slope fit unavailable (needs ≥ 3 SNR points with positive distortion); \
             theoretical exponent {theoretical:.4}"
        ),
    }
    Ok(())
}

pub fn cmd_optimize(args: OptimizeArgs) -> Result<(), CliError> {
    let mut scenario = Scenario::load_or_default(args.io.config.as_deref())?;
    scenario.apply_channel(args.channel.mt, args.channel.mr, args.channel.blocks);
    scenario.apply_schemes(args.scheme.as_deref(), args.layers.as_deref())?;
    if let Some(b) = args.b {
        scenario.b = Some(b);
        scenario.b_range = None;
    }
    if let Some(r) = args.snr_db {
        scenario.snr_db = Some(r);
    }
    if let Some(v) = args.trials {
        scenario.trials = v;
    }
    if let Some(v) = args.seed {
        scenario.seed = v;
    }
    if let Some(v) = args.shards {
        scenario.shards = v;
    }
    if let Some(v) = args.epsilon0 {
        scenario.epsilon0 = v;
    }
    if let Some(f) = args.io.format {
        scenario.format = f;
    }
    let mut search = scenario.search.unwrap_or_default();
    if let Some(v) = args.rate_min {
        search.rate_min = v;
    }
    if let Some(v) = args.rate_max {
        search.rate_max = Some(v);
    }
    if let Some(v) = args.rate_step {
        search.rate_step = v;
    }
    if let Some(v) = args.share_step {
        search.share_step = v;
    }

    let spec = scenario.channel_spec()?;
    let b = scenario
        .b
        .ok_or_else(|| CliError::Usage("--b is required".to_string()))?;
    let choice = scenario.single_scheme()?;
    let layers = match choice.layers {
        Layers::Finite(n) => n,
        Layers::Infinite => {
            return Err(CliError::Usage(
                "the search optimizes a concrete layer count; give --layers 1..3".to_string(),
            ))
        }
    };
    let snr_db = scenario
        .snr_db
        .and_then(|r| r.single())
        .ok_or_else(|| {
            CliError::Usage("optimize runs at a single SNR; give --snr-db VALUE".to_string())
        })?;
    let snr_lin = 10f64.powf(snr_db / 10.0);
    let rate_max = search
        .rate_max
        .unwrap_or_else(|| spec.m_min() as f64 * snr_lin.log2());
    search.rate_max = Some(rate_max);
    scenario.search = Some(search);

    let space = SearchSpace {
        scheme: choice.scheme,
        layers,
        rate_grid: (search.rate_min, rate_max, search.rate_step),
        share_step: search.share_step,
        snr_db,
        b,
    };
    let cfg = SimulationConfig {
        snr_grid_db: vec![snr_db],
        trials: scenario.trials,
        seed: scenario.seed,
        epsilon0: scenario.epsilon0,
        shards: scenario.shards,
    };
    let (allocation, expected_distortion) = optimize_finite_snr(&spec, &space, &cfg)?;

    let log2_snr = snr_lin.log2();
    let rates: Vec<f64> = allocation.gains.iter().map(|g| g * log2_snr).collect();
    let (weight_label, weights): (&str, Vec<f64>) = match choice.scheme {
        Scheme::Bs => {
            let suffix: Vec<f64> = allocation
                .power_exponents
                .iter()
                .enumerate()
                .map(|(k, &e)| snr_lin.powf(e - k as f64 * scenario.epsilon0 - 1.0))
                .collect();
            let fractions = (0..suffix.len())
                .map(|k| suffix[k] - suffix.get(k + 1).copied().unwrap_or(0.0))
                .collect();
            ("power", fractions)
        }
        _ => ("share", allocation.time_shares.clone()),
    };

    let content = match scenario.format {
        OutputFormat::Csv => {
            let mut header = vec![
                "snr_db".to_string(),
                "b".to_string(),
                "scheme".to_string(),
                "layers".to_string(),
                "expected_distortion".to_string(),
            ];
            for k in 1..=rates.len() {
                header.push(format!("rate_{k}"));
            }
            for k in 1..=weights.len() {
                header.push(format!("{weight_label}_{k}"));
            }
            let mut row = vec![
                fmt(snr_db),
                fmt(b),
                choice.scheme.to_string(),
                layers.to_string(),
                fmt(expected_distortion),
            ];
            row.extend(rates.iter().map(|&r| fmt(r)));
            row.extend(weights.iter().map(|&w| fmt(w)));
            Table {
                header,
                rows: vec![row],
            }
            .to_csv()
        }
        OutputFormat::Json => to_json_string(&serde_json::json!({
            "scenario": scenario,
            "allocation": allocation,
            "rates": rates,
            "expected_distortion": expected_distortion,
        })),
    };
    emit(args.io.out.as_deref(), &content)?;
    eprintln!(
        "{spec}, {} with {layers} layer(s) at {snr_db} dB, b = {}: best ED {} at rates {} \
         ({weight_label}s {})",
        choice.scheme,
        fmt(b),
        fmt(expected_distortion),
        summarize(&rates),
        summarize(&weights),
    );
    Ok(())
}

fn summarize(values: &[f64]) -> String {
    let cells: Vec<String> = values.iter().map(|v| format!("{v:.4}")).collect();
    format!("[{}]", cells.join(", "))
}
