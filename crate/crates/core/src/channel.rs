//! Channel descriptions and the diversity–multiplexing tradeoff (DMT).
//!
//! The DMT of an `m_t × m_r` channel over `L` independently fading blocks
//! is the piecewise-linear function connecting the points
//! `(k, L·(m_t−k)·(m_r−k))` for `k = 0 … min(m_t, m_r)`: transmitting at
//! rate `r·log2(SNR)` bits per channel use drives the outage probability to
//! zero like `SNR^{-d*(r)}`. The curve is convex, strictly decreasing on
//! its support, and exact (breakpoints and slopes are small integers), so
//! all downstream solvers intersect lines with it analytically.
//!
//! Counted from the right end of the curve, segment `i` (spanning
//! multiplexing gains `[m_min−i, m_min−i+1]`) has slope magnitude
//! `α_i = L·(|m_t−m_r| + 2i − 1)`. The *climb budgets* `c_i` accumulate
//! `α_i · ln((m_min−i+1)/(m_min−i))`; they are the bandwidth-ratio
//! thresholds at which the infinite-layer solvers finish saturating one
//! segment and move on to the next (see [`crate::exponents`]).
//!
//! For superposed (broadcast-strategy) layers the relevant quantity is not
//! `d*` itself but the *successive-decoding diversity* of layer `k` given
//! that layers `1 … k−1` were decoded and stripped; see
//! [`ChannelSpec::sd_diversity`].

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Slack for clamping floating-point drift at interval endpoints.
const EDGE_TOL: f64 = 1e-12;

/// An `m_t × m_r` MIMO channel that fades independently over a fixed
/// number of equal-length blocks per codeword.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelSpec {
    m_t: u32,
    m_r: u32,
    blocks: u32,
}

impl ChannelSpec {
    /// Creates a spec; all three counts must be at least 1.
    pub fn new(m_t: u32, m_r: u32, blocks: u32) -> Result<Self> {
        if m_t < 1 || m_r < 1 || blocks < 1 {
            return Err(Error::InvalidSpec(format!(
                "antenna and block counts must be positive, got {m_t}x{m_r}, {blocks} block(s)"
            )));
        }
        Ok(Self { m_t, m_r, blocks })
    }

    /// Transmit antennas.
    pub fn m_t(&self) -> u32 {
        self.m_t
    }

    /// Receive antennas.
    pub fn m_r(&self) -> u32 {
        self.m_r
    }

    /// Independent fading blocks per codeword.
    pub fn blocks(&self) -> u32 {
        self.blocks
    }

    /// Smaller of the two antenna counts (the channel's spatial degrees of
    /// freedom, and the right end of the DMT curve).
    pub fn m_min(&self) -> u32 {
        self.m_t.min(self.m_r)
    }

    /// Larger of the two antenna counts.
    pub fn m_max(&self) -> u32 {
        self.m_t.max(self.m_r)
    }

    /// Maximum diversity `L·m_t·m_r`, attained at multiplexing gain 0.
    pub fn max_diversity(&self) -> f64 {
        (self.blocks * self.m_t * self.m_r) as f64
    }

    /// Whether one side has a single antenna (`m_min = 1`); several closed
    /// forms specialize for this case.
    pub fn is_miso_simo(&self) -> bool {
        self.m_min() == 1
    }

    /// Builds the DMT curve of this channel.
    pub fn dmt(&self) -> DmtCurve {
        DmtCurve::new(self)
    }

    /// Successive-decoding diversity of a superposed layer.
    ///
    /// Under the broadcast strategy, layer `k` is transmitted with power
    /// exponent `1 − L·(r_1 + … + r_{k−1})` on top of the (already decoded
    /// and stripped) earlier layers. The outage probability of decoding
    /// layer `k` with gain `r_k`, given gains `r_prefix` for the earlier
    /// layers, then decays with exponent
    ///
    /// ```text
    /// d_sd = L·[ m_max·m_min·(1 − L·Σ r_prefix) − (m_max + m_min − 1)·r_k ]
    /// ```
    ///
    /// This is the limiting value as the power-allocation slack ε → 0 (the
    /// finite-SNR simulation keeps ε explicit). It never exceeds
    /// `d*(Σ r_prefix + r_k)`, with equality when `m_min = 1`: superposed
    /// layers on a MISO/SIMO channel successively refine the DMT curve.
    ///
    /// Requires every gain to be nonnegative and `Σ r_prefix + r_k ≤ 1/L`,
    /// the constraint that keeps the layer powers decreasing.
    pub fn sd_diversity(&self, r_prefix: &[f64], r_k: f64) -> Result<f64> {
        let l = self.blocks as f64;
        if r_k < 0.0 || r_prefix.iter().any(|&r| r < 0.0) {
            return Err(Error::Allocation(
                "multiplexing gains must be nonnegative".into(),
            ));
        }
        let prefix_sum: f64 = r_prefix.iter().sum();
        if prefix_sum + r_k > 1.0 / l + EDGE_TOL {
            return Err(Error::Allocation(format!(
                "superposed gains sum to {} > 1/L = {}",
                prefix_sum + r_k,
                1.0 / l
            )));
        }
        let p = (self.m_max() * self.m_min()) as f64;
        let s = (self.m_max() + self.m_min() - 1) as f64;
        Ok(l * (p * (1.0 - l * prefix_sum) - s * r_k))
    }
}

impl std::fmt::Display for ChannelSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}", self.m_t, self.m_r)?;
        if self.blocks > 1 {
            write!(f, " (L={})", self.blocks)?;
        }
        Ok(())
    }
}

/// The piecewise-linear diversity–multiplexing tradeoff of a channel.
///
/// Stored exactly: breakpoints sit at integer multiplexing gains with
/// integer diversities, and segment slopes are integers scaled by the block
/// count. `climb_budgets` are derived logarithms (see the module docs).
#[derive(Debug, Clone, PartialEq)]
pub struct DmtCurve {
    /// `(r_k, d_k)` for `k = 0 … m_min`, left to right.
    breakpoints: Vec<(f64, f64)>,
    /// Slope magnitudes per segment, left to right (so the entry at index
    /// `j` belongs to the segment spanning `[j, j+1]`).
    segment_slopes: Vec<f64>,
    /// `c_0 … c_{m_min}` with `c_0 = 0` and `c_{m_min} = ∞`, indexed from
    /// the right end of the curve.
    climb_budgets: Vec<f64>,
}

impl DmtCurve {
    /// Builds the curve for a channel spec.
    pub fn new(spec: &ChannelSpec) -> Self {
        let l = spec.blocks();
        let (m_t, m_r) = (spec.m_t(), spec.m_r());
        let m_min = spec.m_min();
        let diff = m_t.abs_diff(m_r);

        let breakpoints: Vec<(f64, f64)> = (0..=m_min)
            .map(|k| (k as f64, (l * (m_t - k) * (m_r - k)) as f64))
            .collect();

        // Slope of the segment ending at breakpoint k (counted from the
        // right, segment i = m_min − k + 1 has magnitude L(|Δm| + 2i − 1));
        // stored left to right to align with `breakpoints`.
        let segment_slopes: Vec<f64> = (0..m_min)
            .map(|j| {
                let i = m_min - j; // right-end numbering
                (l * (diff + 2 * i - 1)) as f64
            })
            .collect();

        let mut climb_budgets = Vec::with_capacity(m_min as usize + 1);
        climb_budgets.push(0.0);
        for i in 1..m_min {
            let alpha = (l * (diff + 2 * i - 1)) as f64;
            let ratio = (m_min - i + 1) as f64 / (m_min - i) as f64;
            let prev = climb_budgets[i as usize - 1];
            climb_budgets.push(prev + alpha * ratio.ln());
        }
        climb_budgets.push(f64::INFINITY);

        Self {
            breakpoints,
            segment_slopes,
            climb_budgets,
        }
    }

    /// Breakpoints `(r_k, d_k)`, left to right.
    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.breakpoints
    }

    /// Slope magnitudes, left to right (index `j` spans `[j, j+1]`).
    pub fn segment_slopes(&self) -> &[f64] {
        &self.segment_slopes
    }

    /// Cumulative climb budgets `c_0 … c_{m_min}` (right-end numbering;
    /// the last entry is `+∞`).
    pub fn climb_budgets(&self) -> &[f64] {
        &self.climb_budgets
    }

    /// Right end of the support (`min(m_t, m_r)` as a float).
    pub fn m_min(&self) -> f64 {
        (self.breakpoints.len() - 1) as f64
    }

    /// Diversity at multiplexing gain 0 (`L·m_t·m_r`).
    pub fn max_diversity(&self) -> f64 {
        self.breakpoints[0].1
    }

    /// Slope magnitude of segment `i` counted from the right end
    /// (`i = 1 … m_min`).
    pub fn alpha_from_right(&self, i: usize) -> f64 {
        self.segment_slopes[self.segment_slopes.len() - i]
    }

    /// Evaluates `d*(r)` by linear interpolation.
    ///
    /// `r` must lie in `[0, m_min]`; values within `1e-12` of the endpoints
    /// are clamped so solvers do not trip on floating-point drift.
    pub fn eval(&self, r: f64) -> Result<f64> {
        let m = self.m_min();
        if !(-EDGE_TOL..=m + EDGE_TOL).contains(&r) {
            return Err(Error::OutOfRange {
                what: "multiplexing gain",
                value: r,
                min: 0.0,
                max: m,
            });
        }
        let r = r.clamp(0.0, m);
        if r == m {
            return Ok(0.0);
        }
        let j = r.floor() as usize;
        let (x_j, d_j) = self.breakpoints[j];
        Ok(d_j - self.segment_slopes[j] * (r - x_j))
    }

    /// Inverts the curve: the unique `r` with `d*(r) = d`.
    ///
    /// `d` must lie in `[0, L·m_t·m_r]` (same `1e-12` clamping as
    /// [`DmtCurve::eval`]). Well-defined because the curve is strictly
    /// decreasing on its support.
    pub fn inverse(&self, d: f64) -> Result<f64> {
        let d_max = self.max_diversity();
        if !(-EDGE_TOL..=d_max + EDGE_TOL).contains(&d) {
            return Err(Error::OutOfRange {
                what: "diversity",
                value: d,
                min: 0.0,
                max: d_max,
            });
        }
        let d = d.clamp(0.0, d_max);
        // Find the segment whose diversity range [d_{j+1}, d_j] contains d,
        // preferring the rightmost segment at breakpoint ties so climbs
        // starting at a breakpoint begin at a segment bottom.
        let j = (0..self.segment_slopes.len())
            .rev()
            .find(|&j| d <= self.breakpoints[j].1)
            .expect("d <= max_diversity guarantees a containing segment");
        let (x_j, d_j) = self.breakpoints[j];
        Ok(x_j + (d_j - d) / self.segment_slopes[j])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(m_t: u32, m_r: u32, blocks: u32) -> ChannelSpec {
        ChannelSpec::new(m_t, m_r, blocks).unwrap()
    }

    #[test]
    fn rejects_degenerate_specs() {
        assert!(ChannelSpec::new(0, 1, 1).is_err());
        assert!(ChannelSpec::new(1, 0, 1).is_err());
        assert!(ChannelSpec::new(1, 1, 0).is_err());
    }

    #[test]
    fn siso_curve_is_the_unit_simplex() {
        let curve = spec(1, 1, 1).dmt();
        assert_eq!(curve.breakpoints(), &[(0.0, 1.0), (1.0, 0.0)]);
        assert_eq!(curve.segment_slopes(), &[1.0]);
        assert_eq!(curve.climb_budgets()[0], 0.0);
        assert!(curve.climb_budgets()[1].is_infinite());
    }

    #[test]
    fn two_by_two_breakpoints_and_slopes() {
        let curve = spec(2, 2, 1).dmt();
        assert_eq!(curve.breakpoints(), &[(0.0, 4.0), (1.0, 1.0), (2.0, 0.0)]);
        assert_eq!(curve.segment_slopes(), &[3.0, 1.0]);
        assert_eq!(curve.alpha_from_right(1), 1.0);
        assert_eq!(curve.alpha_from_right(2), 3.0);
    }

    #[test]
    fn two_by_two_two_blocks_budget() {
        let curve = spec(2, 2, 2).dmt();
        assert_eq!(curve.breakpoints(), &[(0.0, 8.0), (1.0, 2.0), (2.0, 0.0)]);
        // First budget threshold: α_1 · ln(2/1) with α_1 = L·1 = 2.
        let c1 = curve.climb_budgets()[1];
        assert!((c1 - 2.0 * 2.0_f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn eval_interpolates_and_clamps() {
        let curve = spec(2, 2, 1).dmt();
        assert_eq!(curve.eval(0.5).unwrap(), 2.5);
        assert_eq!(curve.eval(0.0).unwrap(), 4.0);
        assert_eq!(curve.eval(1.0).unwrap(), 1.0);
        assert_eq!(curve.eval(2.0).unwrap(), 0.0);
        // Drift just past the right end clamps to zero rather than erroring.
        assert_eq!(curve.eval(2.0 + 5e-13).unwrap(), 0.0);
        assert!(curve.eval(2.1).is_err());
        assert!(curve.eval(-0.1).is_err());
    }

    #[test]
    fn eval_hits_max_diversity_at_zero_for_any_spec() {
        for (m_t, m_r, l) in [(1, 1, 1), (4, 1, 1), (2, 2, 2), (3, 4, 3)] {
            let s = spec(m_t, m_r, l);
            assert_eq!(s.dmt().eval(0.0).unwrap(), s.max_diversity());
        }
    }

    #[test]
    fn inverse_recovers_breakpoints_and_interior() {
        let curve = spec(2, 2, 1).dmt();
        assert_eq!(curve.inverse(1.0).unwrap(), 1.0);
        assert_eq!(curve.inverse(0.0).unwrap(), 2.0);
        assert_eq!(curve.inverse(4.0).unwrap(), 0.0);
        // SISO: d*(r) = 1 − r.
        let siso = spec(1, 1, 1).dmt();
        assert_eq!(siso.inverse(0.5).unwrap(), 0.5);
    }

    #[test]
    fn inverse_round_trip() {
        let curve = spec(4, 3, 2).dmt();
        for i in 0..=300 {
            let r = 3.0 * i as f64 / 300.0;
            let d = curve.eval(r).unwrap();
            assert!(
                (curve.inverse(d).unwrap() - r).abs() < 1e-12,
                "round trip failed at r = {r}"
            );
        }
    }

    #[test]
    fn sd_diversity_matches_hand_values() {
        let miso = spec(4, 1, 1);
        assert_eq!(miso.sd_diversity(&[], 0.2).unwrap(), 3.2);
        assert_eq!(miso.sd_diversity(&[0.2], 0.3).unwrap(), 2.0);
        // Zero-rate layer keeps full diversity for any spec.
        for s in [spec(1, 1, 1), spec(2, 2, 2), spec(4, 3, 1)] {
            assert_eq!(s.sd_diversity(&[], 0.0).unwrap(), s.max_diversity());
        }
    }

    #[test]
    fn sd_diversity_enforces_the_gain_budget() {
        let s = spec(2, 2, 2);
        // 1/L = 0.5: at the boundary the value is still nonnegative.
        let at_edge = s.sd_diversity(&[0.3], 0.2).unwrap();
        assert!(at_edge >= 0.0);
        assert!(s.sd_diversity(&[0.3], 0.21).is_err());
        assert!(s.sd_diversity(&[-0.1], 0.2).is_err());
    }

    #[test]
    fn sd_diversity_never_exceeds_dmt_and_matches_for_single_antenna() {
        let miso = spec(4, 1, 1);
        let curve = miso.dmt();
        for i in 0..=20 {
            let r = i as f64 / 40.0; // prefix + r ≤ 1
            let d_sd = miso.sd_diversity(&[0.25], r).unwrap();
            let d_star = curve.eval(0.25 + r).unwrap();
            assert!((d_sd - d_star).abs() < 1e-12, "MISO refinement at r={r}");
        }
        let mimo = spec(2, 2, 1);
        let curve = mimo.dmt();
        for i in 0..=20 {
            let r = i as f64 / 40.0;
            let d_sd = mimo.sd_diversity(&[0.25], r).unwrap();
            let d_star = curve.eval(0.25 + r).unwrap();
            assert!(d_sd <= d_star + 1e-12);
        }
    }
}
