//! Seeded Monte Carlo estimation of expected end-to-end distortion.
//!
//! The estimator draws i.i.d. Rayleigh-fading channels, applies the same
//! successive-decoding rules the closed forms assume, and averages the
//! per-trial distortion over a grid of SNR points. Fitting `−log₁₀ ED`
//! against `log₁₀ SNR` then recovers the decay exponent, which can be
//! compared against the analytical value.
//!
//! Two determinism guarantees hold by construction:
//!
//! * **Trial-exact seeding.** Trial `k` always uses stream `k` of a
//!   ChaCha12 generator keyed by the configured seed, so every trial sees
//!   the same channel no matter how work is scheduled, and the same
//!   realization is reused across all SNR points (common random numbers).
//! * **Shard-independent reduction.** Trials are split into fixed-size
//!   chunks; each chunk is accumulated sequentially, and the per-chunk
//!   partial sums are folded in chunk order. The result is bitwise
//!   identical for any worker-thread count.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::staircase::LayerAllocation;
use crate::{ChannelSpec, Error, Result, Scheme};

/// Trials per work unit. Fixed (rather than derived from the thread count)
/// so the reduction order, and hence the floating-point result, does not
/// depend on how many shards run the simulation.
const CHUNK: u64 = 4096;

fn default_epsilon0() -> f64 {
    0.01
}

fn default_shards() -> usize {
    1
}

/// Parameters of a Monte Carlo run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationConfig {
    /// SNR grid in dB, strictly increasing.
    pub snr_grid_db: Vec<f64>,
    /// Channel realizations per SNR point (shared across points).
    pub trials: u64,
    /// Base seed; trial `k` uses stream `k` of a ChaCha12 generator.
    pub seed: u64,
    /// Power backoff per superposed layer: at finite SNR the cumulative
    /// power of layers `k..` is `snr^(e_k − (k−1)·epsilon0)`, which keeps
    /// the levels strictly ordered when consecutive exponents tie.
    #[serde(default = "default_epsilon0")]
    pub epsilon0: f64,
    /// Worker threads. Any value ≥ 1 produces bitwise-identical results.
    #[serde(default = "default_shards")]
    pub shards: usize,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.snr_grid_db.is_empty() {
            return Err(Error::InvalidSpec("the SNR grid is empty".into()));
        }
        if self.snr_grid_db.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSpec("SNR grid values must be finite".into()));
        }
        if self.snr_grid_db.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSpec(
                "the SNR grid must be strictly increasing".into(),
            ));
        }
        if self.trials == 0 {
            return Err(Error::OutOfRange {
                what: "trials",
                value: 0.0,
                min: 1.0,
                max: f64::INFINITY,
            });
        }
        if !(self.epsilon0 > 0.0 && self.epsilon0 < 1.0) {
            return Err(Error::OutOfRange {
                what: "epsilon0",
                value: self.epsilon0,
                min: f64::MIN_POSITIVE,
                max: 1.0,
            });
        }
        if self.shards == 0 || self.shards > 4096 {
            return Err(Error::OutOfRange {
                what: "shards",
                value: self.shards as f64,
                min: 1.0,
                max: 4096.0,
            });
        }
        Ok(())
    }
}

/// Estimates at one SNR grid point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SnrPoint {
    pub snr_db: f64,
    pub expected_distortion: f64,
    /// Standard error of the distortion mean.
    pub ed_stderr: f64,
    /// `layer_outage_rates[k]` is the fraction of trials in which fewer
    /// than `k + 1` layers were decoded.
    pub layer_outage_rates: Vec<f64>,
}

/// Result of a Monte Carlo run: per-point estimates plus a log-log slope
/// fit over the high-SNR half of the grid (absent when the grid is too
/// short or the distortion hit exactly zero).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub per_snr: Vec<SnrPoint>,
    pub fitted_exponent: Option<f64>,
    pub fit_stderr: Option<f64>,
}

/// The generator for a given trial: stream `trial` of a ChaCha12 keyed by
/// `seed`. Streams are independent, so trials can run in any order.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// One fading realization: `blocks` i.i.d. matrices with CN(0,1) entries,
/// plus the eigenvalues of each block's Gram matrix.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    blocks: Vec<DMatrix<Complex64>>,
    eigenvalues: Vec<Vec<f64>>,
}

/// Draws the channel for one trial. Entries are generated block by block
/// in row-major order, real part before imaginary part, each component
/// `N(0, 1/2)` so the complex entry has unit variance. The draw order is
/// part of the reproducibility contract.
pub fn sample_channel(spec: &ChannelSpec, rng: &mut impl Rng) -> Result<ChannelRealization> {
    let mut real = ChannelRealization::empty(spec);
    real.resample(rng)?;
    Ok(real)
}

/// Nonzero eigenvalues of `H·H†` (equivalently `H†·H`), ascending, written
/// into `out` (length `m_min`). The scalar and 2×2 cases use closed forms
/// computed straight from the entries, so the sampling hot path never
/// touches the heap; larger systems go through a real symmetric embedding
/// of the Hermitian Gram matrix.
fn gram_eigenvalues_into(h: &DMatrix<Complex64>, out: &mut [f64]) -> Result<()> {
    let m_min = h.nrows().min(h.ncols());
    debug_assert_eq!(out.len(), m_min);
    match m_min {
        1 => {
            out[0] = h.iter().map(|z| z.norm_sqr()).sum();
            Ok(())
        }
        2 => {
            // The 2×2 Gram matrix [[a, c], [c̄, d]] along the shorter side.
            let mut a = 0.0;
            let mut d = 0.0;
            let mut c = Complex64::new(0.0, 0.0);
            if h.nrows() <= h.ncols() {
                for j in 0..h.ncols() {
                    let x = h[(0, j)];
                    let y = h[(1, j)];
                    a += x.norm_sqr();
                    d += y.norm_sqr();
                    c += x * y.conj();
                }
            } else {
                for i in 0..h.nrows() {
                    let x = h[(i, 0)];
                    let y = h[(i, 1)];
                    a += x.norm_sqr();
                    d += y.norm_sqr();
                    c += x.conj() * y;
                }
            }
            let mean = 0.5 * (a + d);
            let radius = (0.25 * (a - d) * (a - d) + c.norm_sqr()).sqrt();
            out[0] = (mean - radius).max(0.0);
            out[1] = mean + radius;
            Ok(())
        }
        m => {
            let gram = if h.nrows() <= h.ncols() {
                h * h.adjoint()
            } else {
                h.adjoint() * h
            };
            // [[X, −Y], [Y, X]] is real symmetric with each eigenvalue of
            // X + iY doubled; take one of each pair.
            let mut embed = DMatrix::zeros(2 * m, 2 * m);
            for i in 0..m {
                for j in 0..m {
                    let z = gram[(i, j)];
                    embed[(i, j)] = z.re;
                    embed[(i + m, j + m)] = z.re;
                    embed[(i, j + m)] = -z.im;
                    embed[(i + m, j)] = z.im;
                }
            }
            let trace: f64 = (0..m).map(|i| gram[(i, i)].re).sum();
            let tol = 1e-9 * (1.0 + trace.abs());
            let mut all: Vec<f64> = SymmetricEigen::new(embed).eigenvalues.iter().copied().collect();
            all.sort_by(|x, y| x.partial_cmp(y).unwrap());
            for (slot, pair) in out.iter_mut().zip(all.chunks(2)) {
                let lam = 0.5 * (pair[0] + pair[1]);
                if lam < -tol {
                    return Err(Error::Domain(format!(
                        "Gram matrix produced negative eigenvalue {lam}"
                    )));
                }
                *slot = lam.max(0.0);
            }
            Ok(())
        }
    }
}

fn gram_eigenvalues(h: &DMatrix<Complex64>) -> Result<Vec<f64>> {
    let mut out = vec![0.0; h.nrows().min(h.ncols())];
    gram_eigenvalues_into(h, &mut out)?;
    Ok(out)
}

impl ChannelRealization {
    /// A zero realization of the right shape, ready to be resampled.
    fn empty(spec: &ChannelSpec) -> Self {
        let m_min = spec.m_min() as usize;
        Self {
            blocks: (0..spec.blocks())
                .map(|_| DMatrix::zeros(spec.m_r() as usize, spec.m_t() as usize))
                .collect(),
            eigenvalues: (0..spec.blocks()).map(|_| vec![0.0; m_min]).collect(),
        }
    }

    /// Redraws every entry (same order as [`sample_channel`]) and refreshes
    /// the cached eigenvalues, reusing all existing storage.
    fn resample(&mut self, rng: &mut impl Rng) -> Result<()> {
        for (h, eigen) in self.blocks.iter_mut().zip(&mut self.eigenvalues) {
            let (m_r, m_t) = h.shape();
            for i in 0..m_r {
                for j in 0..m_t {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    h[(i, j)] = Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2);
                }
            }
            gram_eigenvalues_into(h, eigen)?;
        }
        Ok(())
    }

    /// Wraps explicit fading blocks (all `m_r × m_t`) and precomputes the
    /// per-block Gram eigenvalues.
    pub fn from_blocks(blocks: Vec<DMatrix<Complex64>>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidSpec("a realization needs at least one block".into()));
        }
        let shape = blocks[0].shape();
        if shape.0 == 0 || shape.1 == 0 || blocks.iter().any(|b| b.shape() != shape) {
            return Err(Error::InvalidSpec(
                "all fading blocks must share the same nonempty shape".into(),
            ));
        }
        let eigenvalues = blocks
            .iter()
            .map(gram_eigenvalues)
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { blocks, eigenvalues })
    }

    /// Per-block Gram eigenvalues, ascending within each block.
    pub fn eigenvalues(&self) -> &[Vec<f64>] {
        &self.eigenvalues
    }

    /// Mutual information per channel use with total transmit SNR `snr`
    /// split evenly over the transmit antennas and averaged over blocks:
    /// `(1/L)·Σ_blocks Σ_λ log₂(1 + (snr/m_t)·λ)`.
    pub fn instantaneous_capacity(&self, snr: f64) -> f64 {
        let m_t = self.blocks[0].ncols() as f64;
        let mut sum = 0.0;
        for block in &self.eigenvalues {
            for &lam in block {
                sum += (1.0 + snr / m_t * lam).log2();
            }
        }
        sum / self.eigenvalues.len() as f64
    }

    /// MMSE residual factor of the analog branch: the uncoded symbols are
    /// sent once, over `m_min` transmit antennas in the final block (the
    /// leading square submatrix when the transmitter has extra antennas),
    /// giving `(1/m_min)·Σ_i 1/(1 + (snr/m_min)·λ̄_i)`.
    pub fn analog_mmse_factor(&self, snr: f64) -> Result<f64> {
        let h = self.blocks.last().expect("realizations are never empty");
        let m_min = h.nrows().min(h.ncols());
        let eigen_storage;
        let eigen = if h.ncols() > h.nrows() {
            eigen_storage = gram_eigenvalues(&h.columns(0, m_min).into_owned())?;
            &eigen_storage
        } else {
            self.eigenvalues.last().expect("realizations are never empty")
        };
        let scale = snr / m_min as f64;
        Ok(eigen.iter().map(|&lam| 1.0 / (1.0 + scale * lam)).sum::<f64>() / m_min as f64)
    }
}

/// Converts multiplexing gains to rates `R_k = r_k·log₂(snr)` in bits per
/// channel use. Positive gains are meaningless at or below 0 dB, where the
/// log flips sign, so that case is rejected.
fn rates_from_gains(gains: &[f64], snr: f64) -> Result<Vec<f64>> {
    let log2_snr = snr.log2();
    if log2_snr <= 0.0 && gains.iter().any(|&g| g > 0.0) {
        return Err(Error::Domain(format!(
            "multiplexing gains define rates R = r·log2(SNR), which needs SNR above 0 dB \
             (got {:.3} dB)",
            10.0 * snr.log10()
        )));
    }
    Ok(gains.iter().map(|&g| (g * log2_snr).max(0.0)).collect())
}

fn check_bandwidth(b: f64) -> Result<()> {
    if !(b > 0.0) || !b.is_finite() {
        return Err(Error::Domain(format!(
            "bandwidth ratio must be positive and finite, got {b}"
        )));
    }
    Ok(())
}

/// Per-point lookup tables shared by the decode loops: linear SNR, layer
/// rates, and residual distortion after each decodable prefix.
struct PointTable {
    snr: f64,
    rates: Vec<f64>,
    distortion_by_prefix: Vec<f64>,
    cumulative_powers: Vec<f64>,
}

fn prefix_distortions(rates: &[f64], weights: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(rates.len() + 1);
    let mut spent = 0.0;
    out.push(1.0);
    for (r, w) in rates.iter().zip(weights) {
        spent += w * r;
        out.push((-spent).exp2());
    }
    out
}

/// Estimates the expected distortion of a concrete layer allocation over
/// the configured SNR grid, reusing one set of channel realizations across
/// all points, then fits the decay exponent.
pub fn simulate_allocation(
    spec: &ChannelSpec,
    alloc: &LayerAllocation,
    b: f64,
    cfg: &SimulationConfig,
) -> Result<MonteCarloEstimate> {
    cfg.validate()?;
    alloc.validate(spec)?;
    check_bandwidth(b)?;
    let per_snr = match alloc.scheme {
        Scheme::UpperBound => {
            return Err(Error::InvalidSpec(
                "the distortion upper bound is not a transmission scheme; \
                 simulate single, ls, hls, or bs"
                    .into(),
            ))
        }
        Scheme::SingleLayer | Scheme::Ls => simulate_progressive(spec, alloc, b, cfg, false)?,
        Scheme::Hls => simulate_progressive(spec, alloc, b, cfg, true)?,
        Scheme::Bs => simulate_superposed(spec, alloc, b, cfg)?,
    };
    let fit = estimate_exponent(&per_snr).ok();
    Ok(MonteCarloEstimate {
        per_snr,
        fitted_exponent: fit.map(|f| f.0),
        fit_stderr: fit.map(|f| f.1),
    })
}

/// Time-shared progressive layers, optionally followed by the analog
/// refinement branch (the hybrid scheme). Layer `k` is decodable when the
/// instantaneous capacity covers its rate; decoding stops at the first
/// failure. The analog factor applies only when every digital layer
/// decodes.
fn simulate_progressive(
    spec: &ChannelSpec,
    alloc: &LayerAllocation,
    b: f64,
    cfg: &SimulationConfig,
    hybrid: bool,
) -> Result<Vec<SnrPoint>> {
    let n = alloc.n();
    if n == 0 && !hybrid {
        return Err(Error::InvalidSpec("at least one layer is required".into()));
    }
    let digital_b = if hybrid {
        let analog_cost = 1.0 / spec.m_min() as f64;
        if b < analog_cost - 1e-12 {
            return Err(Error::Domain(format!(
                "the hybrid scheme spends 1/m_min = {analog_cost} of the bandwidth ratio on \
                 the analog branch, so it needs b ≥ {analog_cost}, got {b}"
            )));
        }
        (b - analog_cost).max(0.0)
    } else {
        b
    };
    let shares = if alloc.time_shares.is_empty() {
        vec![1.0 / n.max(1) as f64; n]
    } else {
        alloc.time_shares.clone()
    };
    let weights: Vec<f64> = shares.iter().map(|t| digital_b * t).collect();
    let tables = cfg
        .snr_grid_db
        .iter()
        .map(|&db| {
            let snr = 10f64.powf(db / 10.0);
            let rates = rates_from_gains(&alloc.gains, snr)?;
            let distortion_by_prefix = prefix_distortions(&rates, &weights);
            Ok(PointTable {
                snr,
                rates,
                distortion_by_prefix,
                cumulative_powers: Vec::new(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    run_grid(spec, cfg, &tables, n, |real, table| {
        let capacity = real.instantaneous_capacity(table.snr);
        let mut decoded = 0;
        while decoded < n && capacity >= table.rates[decoded] {
            decoded += 1;
        }
        let mut distortion = table.distortion_by_prefix[decoded];
        if hybrid && decoded == n {
            distortion *= real.analog_mmse_factor(table.snr)?;
        }
        Ok((distortion, decoded))
    })
}

/// Superposed layers with successive interference cancellation. Layer `k`
/// is transmitted at cumulative power `snr^(e_k − (k−1)·ε₀)` and decodable
/// when the rate fits between the capacities at its power level and the
/// next one; undecoded layers are treated as noise, so decoding stops at
/// the first failure.
fn simulate_superposed(
    spec: &ChannelSpec,
    alloc: &LayerAllocation,
    b: f64,
    cfg: &SimulationConfig,
) -> Result<Vec<SnrPoint>> {
    let n = alloc.n();
    if n == 0 {
        return Err(Error::InvalidSpec("at least one layer is required".into()));
    }
    let tables = cfg
        .snr_grid_db
        .iter()
        .map(|&db| {
            let snr = 10f64.powf(db / 10.0);
            if n >= 2 && snr <= 1.0 {
                return Err(Error::Domain(format!(
                    "superposition power levels snr^(e_k − (k−1)·ε₀) are only ordered above \
                     0 dB; got {db} dB with {n} layers"
                )));
            }
            let rates = rates_from_gains(&alloc.gains, snr)?;
            let cumulative_powers: Vec<f64> = alloc
                .power_exponents
                .iter()
                .enumerate()
                .map(|(k, &e)| snr.powf(e - k as f64 * cfg.epsilon0))
                .collect();
            if cumulative_powers.windows(2).any(|w| w[0] <= w[1])
                || cumulative_powers.iter().any(|p| !p.is_finite() || *p <= 0.0)
            {
                return Err(Error::Domain(format!(
                    "cumulative layer powers must be positive and strictly decreasing at \
                     {db} dB"
                )));
            }
            let distortion_by_prefix = prefix_distortions(&rates, &vec![b; n]);
            Ok(PointTable {
                snr,
                rates,
                distortion_by_prefix,
                cumulative_powers,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    run_grid(spec, cfg, &tables, n, |real, table| {
        let capacities: Vec<f64> = table
            .cumulative_powers
            .iter()
            .map(|&s| real.instantaneous_capacity(s))
            .collect();
        let mut decoded = 0;
        while decoded < n {
            let floor = if decoded + 1 < n { capacities[decoded + 1] } else { 0.0 };
            if capacities[decoded] - floor >= table.rates[decoded] {
                decoded += 1;
            } else {
                break;
            }
        }
        Ok((table.distortion_by_prefix[decoded], decoded))
    })
}

/// Per-chunk running sums for one SNR point.
#[derive(Clone)]
struct Accumulator {
    sum: f64,
    sum_sq: f64,
    outage: Vec<u64>,
}

/// Runs `cfg.trials` seeded trials against every grid point and reduces
/// the per-chunk partials in a fixed order. `eval` maps a realization and
/// a point table to (distortion, decoded-layer count).
fn run_grid<F>(
    spec: &ChannelSpec,
    cfg: &SimulationConfig,
    tables: &[PointTable],
    n_layers: usize,
    eval: F,
) -> Result<Vec<SnrPoint>>
where
    F: Fn(&ChannelRealization, &PointTable) -> Result<(f64, usize)> + Sync,
{
    let fresh = || {
        vec![
            Accumulator {
                sum: 0.0,
                sum_sq: 0.0,
                outage: vec![0; n_layers],
            };
            tables.len()
        ]
    };
    let chunks: Vec<(u64, u64)> = (0..cfg.trials)
        .step_by(CHUNK as usize)
        .map(|start| (start, (start + CHUNK).min(cfg.trials)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.shards)
        .build()
        .map_err(|e| Error::InvalidSpec(format!("could not start {} shards: {e}", cfg.shards)))?;
    let partials: Vec<Vec<Accumulator>> = pool.install(|| {
        chunks
            .par_iter()
            .map(|&(start, end)| {
                let mut acc = fresh();
                let mut realization = ChannelRealization::empty(spec);
                for trial in start..end {
                    let mut rng = trial_rng(cfg.seed, trial);
                    realization.resample(&mut rng)?;
                    for (slot, table) in acc.iter_mut().zip(tables) {
                        let (distortion, decoded) = eval(&realization, table)?;
                        slot.sum += distortion;
                        slot.sum_sq += distortion * distortion;
                        for counter in slot.outage.iter_mut().skip(decoded) {
                            *counter += 1;
                        }
                    }
                }
                Ok(acc)
            })
            .collect::<Result<_>>()
    })?;
    let mut totals = fresh();
    for part in &partials {
        for (total, piece) in totals.iter_mut().zip(part) {
            total.sum += piece.sum;
            total.sum_sq += piece.sum_sq;
            for (a, b) in total.outage.iter_mut().zip(&piece.outage) {
                *a += b;
            }
        }
    }
    let trials = cfg.trials as f64;
    Ok(cfg
        .snr_grid_db
        .iter()
        .zip(&totals)
        .map(|(&snr_db, acc)| {
            let mean = acc.sum / trials;
            let variance =
                ((acc.sum_sq - acc.sum * acc.sum / trials) / (trials - 1.0).max(1.0)).max(0.0);
            SnrPoint {
                snr_db,
                expected_distortion: mean,
                ed_stderr: (variance / trials).sqrt(),
                layer_outage_rates: acc.outage.iter().map(|&c| c as f64 / trials).collect(),
            }
        })
        .collect())
}

/// Ordinary least squares of `−log₁₀ ED` against `log₁₀ SNR` over the
/// high-SNR half of the grid (at least the last three points). Returns the
/// slope and its standard error.
pub fn estimate_exponent(points: &[SnrPoint]) -> Result<(f64, f64)> {
    if points.len() < 3 {
        return Err(Error::Estimation(
            "need at least three SNR points to fit a slope".into(),
        ));
    }
    let start = (points.len() / 2).min(points.len() - 3);
    let window = &points[start..];
    let mut xs = Vec::with_capacity(window.len());
    let mut ys = Vec::with_capacity(window.len());
    for p in window {
        if !(p.expected_distortion > 0.0) || !p.expected_distortion.is_finite() {
            return Err(Error::Estimation(format!(
                "expected distortion must be positive and finite to fit a slope, got {} at \
                 {} dB",
                p.expected_distortion, p.snr_db
            )));
        }
        xs.push(p.snr_db / 10.0);
        ys.push(-p.expected_distortion.log10());
    }
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x) * (x - mean_x)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - mean_x) * (y - mean_y))
        .sum();
    if sxx <= 0.0 {
        return Err(Error::Estimation("the SNR grid has no spread".into()));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let e = y - intercept - slope * x;
            e * e
        })
        .sum();
    let dof = n - 2.0;
    let stderr = (ss_res / (dof * sxx)).sqrt();
    Ok((slope, stderr))
}
