//! Closed-form distortion exponents of the transmission strategies.
//!
//! The distortion exponent Δ is the high-SNR decay rate of end-to-end
//! expected distortion, `ED ≐ SNR^{−Δ}`, as a function of the bandwidth
//! ratio `b` (channel uses per source sample). This module collects the
//! strategies' exponents in closed form:
//!
//! * [`upper_bound`] — the informed-transmitter bound
//!   `L·Σ_{i=1}^{m_min} min{b/L, 2i−1+|m_t−m_r|}`, which no scheme can beat.
//! * [`single_layer`] — one source layer at the best fixed multiplexing
//!   gain: the fixed point of `b·r = d*(r)`.
//! * [`ls_infinite`] / [`hls_infinite`] — the infinite-layer limits of the
//!   time-shared staircases. As the layer count grows the staircase turns
//!   into a continuous climb up the DMT curve: on a segment with slope `α`,
//!   spending channel-use budget `β` moves the exponent toward the
//!   segment line's ceiling like `1 − e^{−β/α}` (see [`segment_climb`]).
//!   The plain scheme climbs from diversity 0 with budget `b`; the hybrid
//!   scheme starts from the analog floor of 1 with budget `b − 1/m_min`.
//! * [`bs_finite`] / [`bs_infinite`] — superposed layers with successive
//!   decoding, via the geometric assignment of [`crate::staircase`]; with
//!   infinitely many layers the exponent saturates at
//!   `min{b/L, L·m_t·m_r}` (taking `L = 1` for one block).
//!
//! All functions validate `b > 0` (and `b ≥ 1/m_min` for the hybrid
//! scheme, which always spends `1/m_min` channel uses per source sample on
//! the analog part).

use crate::channel::{ChannelSpec, DmtCurve};
use crate::staircase::{self, LayerAllocation};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Transmission strategy identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    /// Informed-transmitter upper bound (not an actual transmission scheme).
    #[serde(rename = "ub")]
    UpperBound,
    /// One source layer at a fixed multiplexing gain.
    #[serde(rename = "single")]
    SingleLayer,
    /// Progressive source layers, time-shared over the channel.
    #[serde(rename = "ls")]
    Ls,
    /// Time-shared layers plus an uncoded analog refinement.
    #[serde(rename = "hls")]
    Hls,
    /// Superposed layers with descending powers and successive decoding.
    #[serde(rename = "bs")]
    Bs,
}

impl Scheme {
    /// The short token used on the command line and in CSV output.
    pub fn token(&self) -> &'static str {
        match self {
            Scheme::UpperBound => "ub",
            Scheme::SingleLayer => "single",
            Scheme::Ls => "ls",
            Scheme::Hls => "hls",
            Scheme::Bs => "bs",
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.token())
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ub" | "bound" => Ok(Scheme::UpperBound),
            "single" => Ok(Scheme::SingleLayer),
            "ls" => Ok(Scheme::Ls),
            "hls" => Ok(Scheme::Hls),
            "bs" => Ok(Scheme::Bs),
            other => Err(Error::Domain(format!(
                "unknown scheme {other:?} (expected ub, single, ls, hls, or bs)"
            ))),
        }
    }
}

/// Layer count: a concrete number or the infinite-layer limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Layers {
    /// Exactly `n` layers.
    Finite(u32),
    /// The closed-form infinite-layer limit.
    Infinite,
}

impl std::fmt::Display for Layers {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Layers::Finite(n) => write!(f, "{n}"),
            Layers::Infinite => f.write_str("inf"),
        }
    }
}

impl std::str::FromStr for Layers {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("infinite") {
            return Ok(Layers::Infinite);
        }
        s.parse::<u32>()
            .map(Layers::Finite)
            .map_err(|_| Error::Domain(format!("layer count must be a nonnegative integer or \"inf\", got {s:?}")))
    }
}

impl Serialize for Layers {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Layers::Finite(n) => serializer.serialize_u32(*n),
            Layers::Infinite => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Layers {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct LayersVisitor;
        impl serde::de::Visitor<'_> for LayersVisitor {
            type Value = Layers;
            fn expecting(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                f.write_str("a nonnegative integer or the string \"inf\"")
            }
            fn visit_u64<E: serde::de::Error>(self, v: u64) -> std::result::Result<Layers, E> {
                u32::try_from(v)
                    .map(Layers::Finite)
                    .map_err(|_| E::custom("layer count out of range"))
            }
            fn visit_i64<E: serde::de::Error>(self, v: i64) -> std::result::Result<Layers, E> {
                u32::try_from(v)
                    .map(Layers::Finite)
                    .map_err(|_| E::custom("layer count out of range"))
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> std::result::Result<Layers, E> {
                v.parse().map_err(|_| E::custom("expected an integer or \"inf\""))
            }
        }
        deserializer.deserialize_any(LayersVisitor)
    }
}

/// A computed distortion exponent, tagged with what produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentResult {
    /// Transmission strategy.
    pub scheme: Scheme,
    /// Layer count the value refers to.
    pub layers: Layers,
    /// Bandwidth ratio `b` (channel uses per source sample).
    pub bandwidth_ratio: f64,
    /// The distortion exponent Δ.
    pub exponent: f64,
    /// The allocation attaining Δ, when one exists in closed form.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allocation: Option<LayerAllocation>,
}

fn check_bandwidth(b: f64) -> Result<()> {
    if !(b > 0.0) || !b.is_finite() {
        return Err(Error::Domain(format!(
            "bandwidth ratio must be positive and finite, got {b}"
        )));
    }
    Ok(())
}

/// Upper bound on the distortion exponent of any scheme:
/// `L·Σ_{i=1}^{m_min} min{b/L, 2i−1+|m_t−m_r|}`. For a single-antenna side
/// this is `min{b, L·m_max}`, and for `b → ∞` it saturates at the maximum
/// diversity `L·m_t·m_r`.
pub fn upper_bound(spec: &ChannelSpec, b: f64) -> Result<f64> {
    check_bandwidth(b)?;
    let l = spec.blocks() as f64;
    let diff = (spec.m_max() - spec.m_min()) as f64;
    let sum: f64 = (1..=spec.m_min())
        .map(|i| (b / l).min(2.0 * i as f64 - 1.0 + diff))
        .sum();
    Ok(l * sum)
}

/// Best single-layer exponent: `Δ = b·r*` at the unique fixed point
/// `b·r* = d*(r*)` of the rising rate line against the falling DMT curve.
pub fn single_layer(spec: &ChannelSpec, b: f64) -> Result<ExponentResult> {
    check_bandwidth(b)?;
    let curve = spec.dmt();
    let r = staircase::intersect_rising_line(&curve, b, 0.0)?;
    Ok(ExponentResult {
        scheme: Scheme::SingleLayer,
        layers: Layers::Finite(1),
        bandwidth_ratio: b,
        exponent: b * r,
        allocation: Some(LayerAllocation {
            scheme: Scheme::SingleLayer,
            gains: vec![r],
            time_shares: vec![1.0],
            power_exponents: Vec::new(),
            analog_share: None,
        }),
    })
}

/// Infinite-layer climb along one DMT segment.
///
/// A segment whose line has slope magnitude `alpha` and x-intercept `x_hi`
/// pulls the exponent toward the ceiling `alpha·x_hi`; spending channel-use
/// budget `budget` starting from exponent `delta_entry` reaches
///
/// ```text
/// alpha·x_hi − (alpha·x_hi − delta_entry)·e^{−budget/alpha}
/// ```
///
/// This is the limit of the equal-share staircase on that segment as the
/// layer count grows.
pub fn segment_climb(alpha: f64, x_hi: f64, delta_entry: f64, budget: f64) -> Result<f64> {
    if budget < 0.0 || !budget.is_finite() {
        return Err(Error::Domain(format!(
            "climb budget must be nonnegative, got {budget}"
        )));
    }
    if !(alpha > 0.0) || !(x_hi > 0.0) {
        return Err(Error::Domain(format!(
            "segment parameters must be positive, got alpha = {alpha}, x_hi = {x_hi}"
        )));
    }
    let ceiling = alpha * x_hi;
    if delta_entry > ceiling + 1e-9 || delta_entry < 0.0 {
        return Err(Error::Domain(format!(
            "entry exponent {delta_entry} is outside the segment's range [0, {ceiling}]"
        )));
    }
    Ok(ceiling - (ceiling - delta_entry.min(ceiling)) * (-budget / alpha).exp())
}

/// Climbs the whole DMT curve from exponent `entry` with budget `budget`,
/// segment by segment from right to left. Exhausting a segment costs
/// exactly `α·ln(x_left_ratio)` of budget (the curve's climb budgets); the
/// leftmost segment is never exhausted because its ceiling is the maximum
/// diversity itself.
fn climb_dmt(curve: &DmtCurve, entry: f64, budget: f64) -> f64 {
    let breakpoints = curve.breakpoints();
    let slopes = curve.segment_slopes();
    // Containing segment: diversity `entry` lies between the endpoints of
    // segment j (ties resolve to the right, so a climb starting at a
    // breakpoint first crosses the zero-budget boundary of the segment
    // below it).
    let mut j = (0..slopes.len())
        .rev()
        .find(|&j| entry <= breakpoints[j].1)
        .expect("entry does not exceed the maximum diversity");
    let mut d = entry;
    let mut remaining = budget;
    loop {
        let alpha = slopes[j];
        let (x_j, d_j) = breakpoints[j];
        let ceiling = alpha * x_j + d_j; // the segment line's value at r = 0
        if j == 0 {
            // ceiling = max diversity; the climb only asymptotes to it.
            return segment_climb(alpha, ceiling / alpha, d, remaining)
                .expect("in-range by construction");
        }
        // Budget needed to lift d to the segment's top d_j.
        let to_top = alpha * ((ceiling - d) / (ceiling - d_j)).ln();
        if remaining < to_top {
            return segment_climb(alpha, ceiling / alpha, d, remaining)
                .expect("in-range by construction");
        }
        remaining -= to_top;
        d = d_j;
        j -= 1;
    }
}

/// Infinite-layer exponent of plain time-shared layering: climb the DMT
/// curve from 0 with budget `b`.
pub fn ls_infinite(spec: &ChannelSpec, b: f64) -> Result<ExponentResult> {
    check_bandwidth(b)?;
    let exponent = climb_dmt(&spec.dmt(), 0.0, b);
    Ok(ExponentResult {
        scheme: Scheme::Ls,
        layers: Layers::Infinite,
        bandwidth_ratio: b,
        exponent,
        allocation: None,
    })
}

/// Infinite-layer exponent of the hybrid scheme: climb the DMT curve from
/// the analog floor of 1 with the digital budget `b − 1/m_min`.
pub fn hls_infinite(spec: &ChannelSpec, b: f64) -> Result<ExponentResult> {
    check_bandwidth(b)?;
    let m_min = spec.m_min() as f64;
    if b < 1.0 / m_min {
        return Err(Error::Domain(format!(
            "the hybrid scheme needs b ≥ 1/m_min = {}, got {b}",
            1.0 / m_min
        )));
    }
    let exponent = climb_dmt(&spec.dmt(), 1.0, b - 1.0 / m_min);
    Ok(ExponentResult {
        scheme: Scheme::Hls,
        layers: Layers::Infinite,
        bandwidth_ratio: b,
        exponent,
        allocation: None,
    })
}

/// Exponent of `n` superposed layers, together with the attaining
/// geometric gain/power assignment.
pub fn bs_finite(spec: &ChannelSpec, b: f64, n: u32) -> Result<ExponentResult> {
    check_bandwidth(b)?;
    if n == 0 {
        return Err(Error::Domain(
            "superposition coding needs at least one layer".into(),
        ));
    }
    let (allocation, exponent) = staircase::bs_solve(spec, b, n)?;
    Ok(ExponentResult {
        scheme: Scheme::Bs,
        layers: Layers::Finite(n),
        bandwidth_ratio: b,
        exponent,
        allocation: Some(allocation),
    })
}

/// Infinite-layer superposition exponent: `b/L` until `b = L²·m_t·m_r`,
/// then the maximum diversity `L·m_t·m_r`. For one block this is
/// `min{b, m_t·m_r}`, which meets [`upper_bound`] whenever one side has a
/// single antenna, and for every channel once `b ≥ m_t·m_r`.
pub fn bs_infinite(spec: &ChannelSpec, b: f64) -> Result<ExponentResult> {
    check_bandwidth(b)?;
    let l = spec.blocks() as f64;
    let p = (spec.m_t() * spec.m_r()) as f64;
    let exponent = if b < l * l * p { b / l } else { l * p };
    Ok(ExponentResult {
        scheme: Scheme::Bs,
        layers: Layers::Infinite,
        bandwidth_ratio: b,
        exponent,
        allocation: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(m_t: u32, m_r: u32, blocks: u32) -> ChannelSpec {
        ChannelSpec::new(m_t, m_r, blocks).unwrap()
    }

    #[test]
    fn upper_bound_examples() {
        // Single-antenna side: min{b, L·m_max}.
        for &b in &[0.5, 1.0, 3.0, 4.0, 7.5] {
            let ub = upper_bound(&spec(4, 1, 1), b).unwrap();
            assert!((ub - b.min(4.0)).abs() < 1e-15, "b={b}");
            let ub2 = upper_bound(&spec(1, 3, 2), b).unwrap();
            assert!((ub2 - b.min(6.0)).abs() < 1e-15, "b={b}");
        }
        // 2×2 at b = 2: min(2,1) + min(2,3) = 3.
        assert!((upper_bound(&spec(2, 2, 1), 2.0).unwrap() - 3.0).abs() < 1e-15);
        // Saturation at the maximum diversity.
        assert!((upper_bound(&spec(3, 2, 2), 1e9).unwrap() - 12.0).abs() < 1e-12);
        assert!(upper_bound(&spec(1, 1, 1), 0.0).is_err());
        assert!(upper_bound(&spec(1, 1, 1), -1.0).is_err());
    }

    #[test]
    fn single_layer_fixed_points() {
        let r = single_layer(&spec(1, 1, 1), 1.0).unwrap();
        assert!((r.exponent - 0.5).abs() < 1e-15);
        assert!((r.allocation.unwrap().gains[0] - 0.5).abs() < 1e-15);

        let r = single_layer(&spec(2, 2, 1), 2.0).unwrap();
        assert!((r.exponent - 1.6).abs() < 1e-12);
        assert!((r.allocation.unwrap().gains[0] - 0.8).abs() < 1e-12);

        // MISO at huge b: r* → 1 and Δ → M.
        let r = single_layer(&spec(4, 1, 1), 1e6).unwrap();
        assert!((r.exponent - 4.0).abs() < 1e-2);
    }

    #[test]
    fn segment_climb_examples() {
        // Unit segment from zero: 1 − e^{−b}.
        for &b in &[0.1, 1.0, 4.0] {
            let d = segment_climb(1.0, 1.0, 0.0, b).unwrap();
            assert!((d - (1.0 - (-b).exp())).abs() < 1e-15);
        }
        // Zero budget climbs nothing.
        assert_eq!(segment_climb(3.0, 2.0, 1.25, 0.0).unwrap(), 1.25);
        // Hybrid single-antenna form: M − (M−1)e^{−(b−1)/M}.
        let (m, b) = (4.0, 3.0);
        let d = segment_climb(m, 1.0, 1.0, b - 1.0).unwrap();
        assert!((d - (m - (m - 1.0) * (-(b - 1.0) / m).exp())).abs() < 1e-15);
        assert!(segment_climb(1.0, 1.0, 0.0, -0.1).is_err());
        assert!(segment_climb(1.0, 1.0, 1.5, 0.1).is_err());
    }

    #[test]
    fn ls_infinite_single_antenna_closed_form() {
        for &(m_t, m_r, l) in &[(1u32, 1u32, 1u32), (4, 1, 1), (1, 3, 1), (2, 1, 3)] {
            let s = spec(m_t, m_r, l);
            let scale = (l * m_t.max(m_r)) as f64;
            for &b in &[0.25, 1.0, 2.5, 6.0] {
                let got = ls_infinite(&s, b).unwrap().exponent;
                let expect = scale * (1.0 - (-b / scale).exp());
                assert!((got - expect).abs() < 1e-12, "{m_t}x{m_r} L={l} b={b}");
            }
        }
    }

    #[test]
    fn ls_infinite_two_by_two_two_blocks_piecewise() {
        let s = spec(2, 2, 2);
        let threshold = 2.0 * 2.0_f64.ln();
        for &b in &[0.3, threshold, 3.0, 6.0] {
            let got = ls_infinite(&s, b).unwrap().exponent;
            let expect = if b <= threshold {
                4.0 * (1.0 - (-b / 2.0).exp())
            } else {
                2.0 + 6.0 * (1.0 - (-(b / 6.0 - 2.0_f64.ln() / 3.0)).exp())
            };
            assert!((got - expect).abs() < 1e-12, "b={b}: {got} vs {expect}");
        }
        // Both branches agree at the threshold (continuity across budgets).
        let lo = ls_infinite(&s, threshold - 1e-12).unwrap().exponent;
        let hi = ls_infinite(&s, threshold + 1e-12).unwrap().exponent;
        assert!((lo - hi).abs() < 1e-9);
    }

    #[test]
    fn ls_infinite_two_by_two_budget_breakpoint() {
        // 2×2, one block: at b = ln 2 the first segment tops out at d = 1.
        let got = ls_infinite(&spec(2, 2, 1), 2.0_f64.ln()).unwrap().exponent;
        assert!((got - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hls_infinite_closed_forms() {
        // 2×2, one block: 1 + 3[1 − e^{−(b−1/2)/3}].
        for &b in &[0.5, 1.0, 2.0, 5.0] {
            let got = hls_infinite(&spec(2, 2, 1), b).unwrap().exponent;
            let expect = 1.0 + 3.0 * (1.0 - (-(b - 0.5) / 3.0).exp());
            assert!((got - expect).abs() < 1e-12, "b={b}");
        }
        // Single-antenna side: M − (M−1)e^{−(b−1)/M}.
        for &b in &[1.0, 2.0, 4.0] {
            let got = hls_infinite(&spec(4, 1, 1), b).unwrap().exponent;
            let expect = 4.0 - 3.0 * (-(b - 1.0) / 4.0).exp();
            assert!((got - expect).abs() < 1e-12, "b={b}");
        }
        // 2×2 over two blocks, below the second-segment threshold.
        let threshold = 0.5 + 2.0 * 1.5_f64.ln();
        for &b in &[0.5, 1.0, threshold] {
            let got = hls_infinite(&spec(2, 2, 2), b).unwrap().exponent;
            let expect = 1.0 + 3.0 * (1.0 - (-(b - 0.5) / 2.0).exp());
            assert!((got - expect).abs() < 1e-12, "b={b}");
        }
        assert!(hls_infinite(&spec(2, 2, 1), 0.49).is_err());
    }

    #[test]
    fn bs_finite_single_antenna_closed_form() {
        // M(1 − (1−b/M)/(1−(b/M)^{n+1})), valid on both sides of b = M.
        for &m in &[1u32, 4] {
            let s = if m == 1 { spec(1, 1, 1) } else { spec(4, 1, 1) };
            let mf = m as f64;
            for &n in &[1u32, 2, 3, 6] {
                for &b in &[0.5, 1.0, 2.0, 6.0, 8.0] {
                    let got = bs_finite(&s, b, n).unwrap().exponent;
                    let x = b / mf;
                    // At x = 1 the ratio (1−x)/(1−x^{n+1}) is the removable
                    // singularity with limit 1/(n+1).
                    let tail = if x == 1.0 {
                        1.0 / (n as f64 + 1.0)
                    } else {
                        (1.0 - x) / (1.0 - x.powi(n as i32 + 1))
                    };
                    let expect = mf * (1.0 - tail);
                    assert!(
                        (got - expect).abs() < 1e-12,
                        "M={m} n={n} b={b}: {got} vs {expect}"
                    );
                }
            }
        }
    }

    #[test]
    fn bs_finite_reduces_to_single_layer_at_one_layer() {
        for &b in &[0.3, 1.0, 2.0] {
            let bs = bs_finite(&spec(1, 1, 1), b, 1).unwrap().exponent;
            let single = single_layer(&spec(1, 1, 1), b).unwrap().exponent;
            assert!((bs - single).abs() < 1e-12, "b={b}");
            assert!((bs - b / (1.0 + b)).abs() < 1e-12, "b={b}");
        }
    }

    #[test]
    fn bs_finite_equal_gain_example() {
        let r = bs_finite(&spec(2, 2, 1), 5.0, 3).unwrap();
        assert!((r.exponent - 3.2).abs() < 1e-12);
        let gains = r.allocation.unwrap().gains;
        for &g in &gains {
            assert!((g - 4.0 / 15.0).abs() < 1e-12);
        }
    }

    #[test]
    fn bs_finite_monotone_in_layers() {
        for s in [spec(1, 1, 1), spec(2, 2, 1), spec(4, 1, 1), spec(2, 3, 2)] {
            for &b in &[0.4, 1.0, 2.7, 6.0] {
                let mut last = 0.0;
                for n in 1..=12 {
                    let d = bs_finite(&s, b, n).unwrap().exponent;
                    assert!(d >= last - 1e-12, "{s} b={b} n={n}");
                    last = d;
                }
            }
        }
    }

    #[test]
    fn bs_finite_continuous_at_equal_gain_junction() {
        // 2×2: at b = 4 the geometric ratio hits 1 and the equal-gain
        // branch takes over with the same value.
        for &n in &[1u32, 2, 5] {
            let below = bs_finite(&spec(2, 2, 1), 4.0 - 1e-10, n).unwrap().exponent;
            let at = bs_finite(&spec(2, 2, 1), 4.0, n).unwrap().exponent;
            assert!((below - at).abs() < 1e-7, "n={n}");
        }
    }

    #[test]
    fn bs_infinite_piecewise() {
        // One block: min{b, m_t·m_r}.
        for &b in &[0.5, 2.0, 4.0, 9.0] {
            let got = bs_infinite(&spec(2, 2, 1), b).unwrap().exponent;
            assert!((got - b.min(4.0)).abs() < 1e-15, "b={b}");
            let got = bs_infinite(&spec(4, 1, 1), b).unwrap().exponent;
            assert!((got - b.min(4.0)).abs() < 1e-15, "b={b}");
        }
        // Two blocks: b/L up to L²·m_t·m_r, then L·m_t·m_r.
        assert!((bs_infinite(&spec(2, 2, 2), 16.0).unwrap().exponent - 8.0).abs() < 1e-15);
        assert!((bs_infinite(&spec(2, 2, 2), 6.0).unwrap().exponent - 3.0).abs() < 1e-15);
        assert!((bs_infinite(&spec(2, 2, 2), 40.0).unwrap().exponent - 8.0).abs() < 1e-15);
    }

    #[test]
    fn scheme_and_layers_round_trip_text() {
        for s in ["ub", "single", "ls", "hls", "bs"] {
            let parsed: Scheme = s.parse().unwrap();
            assert_eq!(parsed.to_string(), s);
        }
        assert!("xyz".parse::<Scheme>().is_err());
        assert_eq!("inf".parse::<Layers>().unwrap(), Layers::Infinite);
        assert_eq!("3".parse::<Layers>().unwrap(), Layers::Finite(3));
        assert!("-2".parse::<Layers>().is_err());
        assert_eq!(
            serde_json::to_string(&Layers::Infinite).unwrap(),
            "\"inf\""
        );
        assert_eq!(serde_json::to_string(&Layers::Finite(4)).unwrap(), "4");
        let l: Layers = serde_json::from_str("\"inf\"").unwrap();
        assert_eq!(l, Layers::Infinite);
        let l: Layers = serde_json::from_str("7").unwrap();
        assert_eq!(l, Layers::Finite(7));
    }
}
