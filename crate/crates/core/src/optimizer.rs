//! Finite-SNR minimization of expected distortion by exhaustive grid
//! search over layer rates and time-share or power allocations.
//!
//! The asymptotic allocations are optimal only as SNR → ∞; at a concrete
//! operating point the best rates sit somewhat below the multiplexing
//! limit. This module evaluates every candidate on a rate/share grid and
//! returns the argmin. On the scalar channel each candidate's expected
//! distortion has a closed form (see [`crate::exact`]); elsewhere each
//! candidate is scored with the seeded Monte Carlo estimator, so with a
//! fixed seed the search is deterministic and the common random numbers
//! make candidate comparisons low-variance.
//!
//! Ties are broken toward the lexicographically first candidate in
//! (rate tuple, share tuple) order, which makes results stable under grid
//! refinement: halving a step keeps every old candidate in the new grid,
//! so the returned distortion can only improve.

use serde::{Deserialize, Serialize};

use crate::exact;
use crate::montecarlo::{simulate_allocation, SimulationConfig};
use crate::staircase::LayerAllocation;
use crate::{ChannelSpec, Error, Result, Scheme};

/// Hard cap on the number of candidates a single search may evaluate.
const CANDIDATE_LIMIT: u128 = 10_000_000;

/// Tolerance for feasibility cuts on derived multiplexing gains.
const TOL: f64 = 1e-10;

/// An exhaustive-search problem: which scheme and layer count to optimize,
/// the grids to search over, and the operating point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchSpace {
    pub scheme: Scheme,
    /// Number of layers (1–3; the candidate count grows geometrically).
    pub layers: u32,
    /// Per-layer rate grid `(min, max, step)` in bits per channel use.
    pub rate_grid: (f64, f64, f64),
    /// Granularity of the share simplex: time shares (time-shared
    /// schemes) or power fractions (superposed layers) are positive
    /// multiples of this step summing to 1, so it must divide 1.
    pub share_step: f64,
    /// Operating SNR in dB; must be above 0 dB so rates translate to
    /// multiplexing gains.
    pub snr_db: f64,
    /// Bandwidth ratio (channel uses per source sample).
    pub b: f64,
}

impl SearchSpace {
    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 || self.layers > 3 {
            return Err(Error::OutOfRange {
                what: "layers",
                value: self.layers as f64,
                min: 1.0,
                max: 3.0,
            });
        }
        let (min, max, step) = self.rate_grid;
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "rate step must be positive, got {step}"
            )));
        }
        if !(min >= 0.0) || !(max >= min) || !max.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "rate grid needs 0 ≤ min ≤ max, got [{min}, {max}]"
            )));
        }
        if !(self.share_step > 0.0 && self.share_step <= 1.0) {
            return Err(Error::InvalidSpec(format!(
                "share step must lie in (0, 1], got {}",
                self.share_step
            )));
        }
        let units = (1.0 / self.share_step).round();
        if units < 1.0 || (units * self.share_step - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidSpec(format!(
                "share step {} does not divide 1",
                self.share_step
            )));
        }
        if !(self.b > 0.0) || !self.b.is_finite() {
            return Err(Error::Domain(format!(
                "bandwidth ratio must be positive, got {}",
                self.b
            )));
        }
        if !self.snr_db.is_finite() || self.snr_db <= 0.0 {
            return Err(Error::Domain(format!(
                "rates translate to multiplexing gains via log2(SNR), which needs an \
                 operating point above 0 dB; got {} dB",
                self.snr_db
            )));
        }
        Ok(())
    }

    fn rate_values(&self) -> Vec<f64> {
        let (min, max, step) = self.rate_grid;
        let count = ((max - min) / step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| min + i as f64 * step).collect()
    }

    fn share_units(&self) -> u64 {
        (1.0 / self.share_step).round() as u64
    }
}

/// `C(n, k)` in `u128`, saturating (only compared against the guard).
fn binomial(n: u64, k: u64) -> u128 {
    let k = k.min(n - k.min(n));
    let mut out: u128 = 1;
    for i in 0..k {
        out = out.saturating_mul((n - i) as u128) / (i + 1) as u128;
    }
    out
}

/// All ways to split `units` into `parts` positive integers, in
/// lexicographic order, mapped to fractions of 1.
fn share_tuples(units: u64, parts: usize, step: f64) -> Vec<Vec<f64>> {
    fn recurse(left: u64, parts: usize, prefix: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if parts == 1 {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in 1..=left.saturating_sub(parts as u64 - 1) {
            prefix.push(first);
            recurse(left - first, parts - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut raw = Vec::new();
    if units >= parts as u64 {
        recurse(units, parts, &mut Vec::new(), &mut raw);
    }
    raw.into_iter()
        .map(|parts| parts.into_iter().map(|u| u as f64 * step).collect())
        .collect()
}

/// Streams index tuples of length `n` over `0..m` in lexicographic order,
/// optionally restricted to nondecreasing tuples.
struct IndexTuples {
    idx: Vec<usize>,
    m: usize,
    nondecreasing: bool,
    state: TupleState,
}

enum TupleState {
    Fresh,
    Running,
    Done,
}

impl IndexTuples {
    fn new(m: usize, n: usize, nondecreasing: bool) -> Self {
        Self {
            idx: vec![0; n],
            m,
            nondecreasing,
            state: if m == 0 || n == 0 {
                TupleState::Done
            } else {
                TupleState::Fresh
            },
        }
    }

    fn next(&mut self) -> Option<&[usize]> {
        match self.state {
            TupleState::Done => return None,
            TupleState::Fresh => {
                self.state = TupleState::Running;
                return Some(&self.idx);
            }
            TupleState::Running => {}
        }
        let n = self.idx.len();
        for pos in (0..n).rev() {
            if self.idx[pos] + 1 < self.m {
                self.idx[pos] += 1;
                let reset = if self.nondecreasing { self.idx[pos] } else { 0 };
                for later in pos + 1..n {
                    self.idx[later] = reset;
                }
                return Some(&self.idx);
            }
        }
        self.state = TupleState::Done;
        None
    }
}

/// Number of tuples [`IndexTuples`] will yield, for the search guard.
fn tuple_count(m: u64, n: u32, nondecreasing: bool) -> u128 {
    if nondecreasing {
        binomial(m + n as u64 - 1, n as u64)
    } else {
        (0..n).fold(1u128, |acc, _| acc.saturating_mul(m as u128))
    }
}

/// Exhaustively minimizes expected distortion at one SNR over the search
/// grid and returns the best allocation with its distortion. Uses the
/// scalar-channel closed forms when the channel is 1×1 with one block and the
/// seeded Monte Carlo estimator otherwise; either way the result is a
/// deterministic function of the inputs.
pub fn optimize_finite_snr(
    spec: &ChannelSpec,
    space: &SearchSpace,
    cfg: &SimulationConfig,
) -> Result<(LayerAllocation, f64)> {
    space.validate()?;
    let n = space.layers as usize;
    if space.scheme == Scheme::UpperBound {
        return Err(Error::InvalidSpec(
            "the distortion upper bound is not a transmission scheme; \
             optimize single, ls, hls, or bs"
                .into(),
        ));
    }
    if space.scheme == Scheme::SingleLayer && n != 1 {
        return Err(Error::InvalidSpec(format!(
            "the single-layer scheme has exactly one layer, got {n}"
        )));
    }
    let m_min = spec.m_min() as f64;
    if space.scheme == Scheme::Hls && space.b < 1.0 / m_min - 1e-12 {
        return Err(Error::Domain(format!(
            "the hybrid scheme needs b ≥ 1/m_min = {}, got {}",
            1.0 / m_min,
            space.b
        )));
    }

    let snr = 10f64.powf(space.snr_db / 10.0);
    let log2_snr = snr.log2();
    let rate_values = space.rate_values();
    let nondecreasing = matches!(space.scheme, Scheme::SingleLayer | Scheme::Ls | Scheme::Hls);
    let shares = share_tuples(space.share_units(), n, space.share_step);
    if shares.is_empty() {
        return Err(Error::Infeasible(format!(
            "{n} shares of at least {} cannot sum to 1",
            space.share_step
        )));
    }
    let candidates = tuple_count(rate_values.len() as u64, space.layers, nondecreasing)
        .saturating_mul(shares.len() as u128);
    if candidates > CANDIDATE_LIMIT {
        return Err(Error::GridTooLarge {
            points: candidates,
            limit: CANDIDATE_LIMIT,
        });
    }

    // Candidates are only meaningful while each rate is expressible as a
    // multiplexing gain of the channel (and, for superposition, while the
    // gains respect the power-sharing budget); the rest of the grid is cut.
    let per_layer_gain_cap = m_min + TOL;
    let gain_sum_cap = 1.0 / spec.blocks() as f64 + TOL;
    let exact_channel = spec.m_t() == 1 && spec.m_r() == 1 && spec.blocks() == 1;
    let point_cfg = SimulationConfig {
        snr_grid_db: vec![space.snr_db],
        ..cfg.clone()
    };
    point_cfg.validate()?;

    let mut best: Option<(LayerAllocation, f64)> = None;
    let mut rates = vec![0.0; n];
    let mut tuples = IndexTuples::new(rate_values.len(), n, nondecreasing);
    while let Some(idx) = tuples.next() {
        for (slot, &i) in rates.iter_mut().zip(idx) {
            *slot = rate_values[i];
        }
        let gains: Vec<f64> = rates.iter().map(|&r| r / log2_snr).collect();
        if gains.iter().any(|&g| g > per_layer_gain_cap) {
            continue;
        }
        if space.scheme == Scheme::Bs && gains.iter().sum::<f64>() > gain_sum_cap {
            continue;
        }
        for share in &shares {
            let (candidate, ed) = evaluate(
                spec,
                space,
                &point_cfg,
                snr,
                &rates,
                &gains,
                share,
                exact_channel,
            )?;
            if best.as_ref().map_or(true, |(_, incumbent)| ed < *incumbent) {
                best = Some((candidate, ed));
            }
        }
    }
    best.ok_or_else(|| {
        Error::Infeasible(
            "no feasible candidate: every rate tuple exceeds the channel's multiplexing \
             capability at this SNR"
                .into(),
        )
    })
}

/// Scores one candidate and materializes its allocation.
#[allow(clippy::too_many_arguments)]
fn evaluate(
    spec: &ChannelSpec,
    space: &SearchSpace,
    point_cfg: &SimulationConfig,
    snr: f64,
    rates: &[f64],
    gains: &[f64],
    share: &[f64],
    exact_channel: bool,
) -> Result<(LayerAllocation, f64)> {
    let allocation = match space.scheme {
        Scheme::SingleLayer | Scheme::Ls | Scheme::Hls => LayerAllocation {
            scheme: space.scheme,
            gains: gains.to_vec(),
            time_shares: share.to_vec(),
            power_exponents: Vec::new(),
            analog_share: (space.scheme == Scheme::Hls)
                .then(|| 1.0 / (space.b * spec.m_min() as f64)),
        },
        Scheme::Bs => {
            // share[k] is layer k's power fraction; the cumulative power of
            // layers k.. is snr·suffix_k, stored as the exponent that makes
            // the simulator reproduce it exactly (ε₀ backoff included).
            let mut suffix: Vec<f64> = share.to_vec();
            for k in (0..share.len().saturating_sub(1)).rev() {
                suffix[k] += suffix[k + 1];
            }
            let power_exponents: Vec<f64> = suffix
                .iter()
                .enumerate()
                .map(|(k, &s)| 1.0 + s.ln() / snr.ln() + k as f64 * point_cfg.epsilon0)
                .collect();
            LayerAllocation {
                scheme: Scheme::Bs,
                gains: gains.to_vec(),
                time_shares: Vec::new(),
                power_exponents,
                analog_share: None,
            }
        }
        Scheme::UpperBound => unreachable!("rejected before enumeration"),
    };
    let ed = if exact_channel {
        match space.scheme {
            Scheme::SingleLayer | Scheme::Ls => exact::siso_ls_ed(rates, share, space.b, snr)?,
            Scheme::Hls => exact::siso_hls_ed(rates, share, space.b, snr)?,
            Scheme::Bs => {
                let powers: Vec<f64> = {
                    let mut suffix: Vec<f64> = share.to_vec();
                    for k in (0..share.len().saturating_sub(1)).rev() {
                        suffix[k] += suffix[k + 1];
                    }
                    suffix.iter().map(|&s| snr * s).collect()
                };
                exact::siso_bs_ed(rates, &powers, space.b)?
            }
            Scheme::UpperBound => unreachable!(),
        }
    } else {
        let estimate = simulate_allocation(spec, &allocation, space.b, point_cfg)?;
        estimate.per_snr[0].expected_distortion
    };
    Ok((allocation, ed))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> SimulationConfig {
        SimulationConfig {
            snr_grid_db: vec![25.0],
            trials: 2_000,
            seed: 5,
            epsilon0: 0.01,
            shards: 1,
        }
    }

    fn siso() -> ChannelSpec {
        ChannelSpec::new(1, 1, 1).unwrap()
    }

    fn space(scheme: Scheme, layers: u32, rate_grid: (f64, f64, f64), share_step: f64) -> SearchSpace {
        SearchSpace {
            scheme,
            layers,
            rate_grid,
            share_step,
            snr_db: 25.0,
            b: 2.0,
        }
    }

    #[test]
    fn single_candidate_grid_returns_that_candidate() {
        let sp = space(Scheme::SingleLayer, 1, (2.0, 2.0, 0.25), 1.0);
        let (alloc, ed) = optimize_finite_snr(&siso(), &sp, &cfg()).unwrap();
        let snr = 10f64.powf(2.5);
        assert!((alloc.gains[0] - 2.0 / snr.log2()).abs() < 1e-12);
        let expect = exact::siso_ls_ed(&[2.0], &[1.0], 2.0, snr).unwrap();
        assert!((ed - expect).abs() < 1e-15);
    }

    #[test]
    fn best_dominates_every_explicit_candidate() {
        let sp = space(Scheme::Ls, 1, (0.0, 8.0, 0.5), 1.0);
        let (_, ed) = optimize_finite_snr(&siso(), &sp, &cfg()).unwrap();
        let snr = 10f64.powf(2.5);
        for i in 0..=16 {
            let rate = 0.5 * i as f64;
            let candidate = exact::siso_ls_ed(&[rate], &[1.0], 2.0, snr).unwrap();
            assert!(ed <= candidate + 1e-15, "rate {rate}");
        }
    }

    #[test]
    fn two_layers_do_at_least_as_well_as_one() {
        let one = optimize_finite_snr(&siso(), &space(Scheme::Ls, 1, (0.0, 8.0, 0.5), 0.5), &cfg())
            .unwrap()
            .1;
        let two = optimize_finite_snr(&siso(), &space(Scheme::Ls, 2, (0.0, 8.0, 0.5), 0.5), &cfg())
            .unwrap()
            .1;
        assert!(two <= one + 1e-15);
    }

    #[test]
    fn refining_the_grid_never_hurts() {
        let coarse =
            optimize_finite_snr(&siso(), &space(Scheme::Ls, 1, (0.0, 8.0, 1.0), 1.0), &cfg())
                .unwrap()
                .1;
        let fine =
            optimize_finite_snr(&siso(), &space(Scheme::Ls, 1, (0.0, 8.0, 0.5), 1.0), &cfg())
                .unwrap()
                .1;
        assert!(fine <= coarse + 1e-15);
    }

    #[test]
    fn one_superposed_layer_matches_one_progressive_layer() {
        let ls = optimize_finite_snr(&siso(), &space(Scheme::Ls, 1, (0.0, 8.0, 0.5), 1.0), &cfg())
            .unwrap();
        let bs = optimize_finite_snr(&siso(), &space(Scheme::Bs, 1, (0.0, 8.0, 0.5), 1.0), &cfg())
            .unwrap();
        assert!((ls.1 - bs.1).abs() < 1e-15);
        assert!((ls.0.gains[0] - bs.0.gains[0]).abs() < 1e-15);
    }

    #[test]
    fn hybrid_search_beats_its_own_all_digital_candidates_at_low_rates() {
        // Not a deep property, just a sanity check that the hybrid evaluator is
        // wired: with zero digital rate the hybrid ED equals pure analog.
        let sp = space(Scheme::Hls, 1, (0.0, 0.0, 1.0), 1.0);
        let (alloc, ed) = optimize_finite_snr(&siso(), &sp, &cfg()).unwrap();
        let snr = 10f64.powf(2.5);
        assert!((ed - exact::siso_analog_ed(snr).unwrap()).abs() < 1e-15);
        assert!((alloc.analog_share.unwrap() - 1.0 / 2.0).abs() < 1e-15);
    }

    #[test]
    fn guard_rejects_oversized_grids() {
        let sp = space(Scheme::Bs, 3, (0.0, 8.0, 0.001), 0.1);
        assert!(matches!(
            optimize_finite_snr(&siso(), &sp, &cfg()),
            Err(Error::GridTooLarge { .. })
        ));
    }

    #[test]
    fn degenerate_spaces_are_rejected() {
        let mut sp = space(Scheme::Ls, 1, (0.0, 8.0, 0.5), 1.0);
        sp.share_step = 0.3;
        assert!(optimize_finite_snr(&siso(), &sp, &cfg()).is_err());
        let mut sp = space(Scheme::Ls, 1, (0.0, 8.0, 0.5), 1.0);
        sp.snr_db = 0.0;
        assert!(optimize_finite_snr(&siso(), &sp, &cfg()).is_err());
        let mut sp = space(Scheme::Ls, 1, (0.0, 8.0, 0.5), 1.0);
        sp.layers = 4;
        assert!(optimize_finite_snr(&siso(), &sp, &cfg()).is_err());
        // Three positive shares in steps of 0.5 cannot sum to 1.
        let sp = space(Scheme::Ls, 3, (0.0, 8.0, 0.5), 0.5);
        assert!(matches!(
            optimize_finite_snr(&siso(), &sp, &cfg()),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn rates_beyond_the_multiplexing_cap_are_infeasible() {
        // log2(snr) ≈ 8.3 at 25 dB, so rates of 20+ bits are inexpressible.
        let sp = space(Scheme::Ls, 1, (20.0, 22.0, 1.0), 1.0);
        assert!(matches!(
            optimize_finite_snr(&siso(), &sp, &cfg()),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn monte_carlo_path_round_trips_through_the_simulator() {
        let spec = ChannelSpec::new(2, 1, 1).unwrap();
        let sp = SearchSpace {
            scheme: Scheme::Bs,
            layers: 2,
            rate_grid: (1.0, 3.0, 1.0),
            share_step: 0.5,
            snr_db: 20.0,
            b: 1.0,
        };
        let mc = SimulationConfig {
            snr_grid_db: vec![20.0],
            trials: 1_000,
            seed: 11,
            epsilon0: 0.01,
            shards: 2,
        };
        let (alloc, ed) = optimize_finite_snr(&spec, &sp, &mc).unwrap();
        let replay = simulate_allocation(&spec, &alloc, sp.b, &mc).unwrap();
        assert_eq!(
            replay.per_snr[0].expected_distortion.to_bits(),
            ed.to_bits()
        );
    }

    #[test]
    fn index_tuples_enumerate_lexicographically() {
        let mut all = Vec::new();
        let mut it = IndexTuples::new(3, 2, true);
        while let Some(t) = it.next() {
            all.push(t.to_vec());
        }
        assert_eq!(
            all,
            vec![
                vec![0, 0],
                vec![0, 1],
                vec![0, 2],
                vec![1, 1],
                vec![1, 2],
                vec![2, 2]
            ]
        );
        let mut it = IndexTuples::new(2, 2, false);
        let mut all = Vec::new();
        while let Some(t) = it.next() {
            all.push(t.to_vec());
        }
        assert_eq!(
            all,
            vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]
        );
        assert_eq!(tuple_count(3, 2, true), 6);
        assert_eq!(tuple_count(3, 2, false), 9);
    }

    #[test]
    fn share_tuples_cover_the_simplex() {
        let shares = share_tuples(10, 2, 0.1);
        assert_eq!(shares.len(), 9);
        assert!((shares[0][0] - 0.1).abs() < 1e-12 && (shares[0][1] - 0.9).abs() < 1e-12);
        for s in &shares {
            assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert_eq!(share_tuples(10, 3, 0.1).len(), 36);
        assert_eq!(share_tuples(1, 1, 1.0), vec![vec![1.0]]);
        assert!(share_tuples(2, 3, 0.5).is_empty());
    }
}
