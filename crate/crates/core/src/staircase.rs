//! Finite-layer allocation solvers.
//!
//! Two families of constructions live here, both driven by the exact
//! piecewise-linear DMT algebra from [`crate::channel`]:
//!
//! * **Time-shared progressive layers** (plain layered coding, and its
//!   hybrid digital/analog variant): the optimal multiplexing gains solve a
//!   KKT system with a staircase geometry. The top layer's gain is the
//!   intersection of the rising line `slope·t_n·r` (offset by the analog
//!   diversity floor of 1 in the hybrid case) with the falling DMT curve;
//!   each lower layer's line then starts from the diversity reached by the
//!   layer above it: `d*(r_k) = d*(r_{k+1}) + slope·t_k·r_k`. Every step is
//!   a line/segment intersection solved in closed form, so the returned
//!   gains satisfy the defining equations to machine precision and are
//!   automatically nondecreasing. The achieved distortion exponent is
//!   `d*(r_1)`, the common value of all the equalized decay terms.
//!
//! * **Superposed layers with descending powers** (broadcast-strategy
//!   coding): layer `k` gets cumulative power `SNR^{1−L(r_1+…+r_{k−1})}`
//!   and is decoded successively. Equalizing the SNR decay of the `n+1`
//!   ways a receiver can stop (fail at layer 1, …, fail at layer `n`,
//!   decode everything) forces the gains into a geometric progression
//!   `r_{i+1} = η·r_i` with ratio `η = 1 + (b − L²·P)/(L·s)`, where `P` and
//!   `s` are the diversity parameters of the system the construction runs
//!   on. For one fading block the construction switches to a reduced
//!   antenna system as `b` crosses the thresholds `(m_t−k)(m_r−k)`, and to
//!   an equal-gain assignment once `b` exceeds `m_t·m_r` (where the gain
//!   budget, not the bandwidth, is the binding constraint). For several
//!   blocks the tighter budget `Σ r_i ≤ 1/L` can make the geometric system
//!   infeasible at small `b`; the solver then falls back to a single active
//!   layer carrying the whole budget, which is continuous with the
//!   geometric branch at the changeover.
//!
//! All solvers return both the allocation and the distortion exponent it
//! achieves; the exponent is always evaluated from the allocation's decay
//! terms rather than from a separate formula, so the reported value is
//! exactly what the construction guarantees.

use crate::channel::{ChannelSpec, DmtCurve};
use crate::exponents::Scheme;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Validation slack for sums and orderings.
const TOL: f64 = 1e-9;

/// A concrete per-layer transmission plan.
///
/// Which fields are populated depends on the scheme:
/// time shares for the time-shared schemes (they must sum to 1), power
/// exponents for superposed layers (`power_exponents[k]` is the SNR
/// exponent of the cumulative power of layers `k+1..n`), and the analog
/// channel-use fraction `1/(b·m_min)` for the hybrid scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerAllocation {
    /// Which transmission strategy the allocation belongs to.
    pub scheme: Scheme,
    /// Multiplexing gains `r_1 … r_n`.
    pub gains: Vec<f64>,
    /// Channel-use fractions `t_1 … t_n` (time-shared schemes only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub time_shares: Vec<f64>,
    /// Cumulative-power SNR exponents `e_1 … e_n` (superposed layers
    /// only): layers `k..n` together get power `snr^(e_k − (k−1)·ε₀)`.
    /// The asymptotic construction sets `e_k = 1 − L·(r_1 + … + r_{k−1})`;
    /// the finite-SNR optimizer stores whatever exponents reproduce its
    /// power fractions exactly.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub power_exponents: Vec<f64>,
    /// Fraction of channel uses spent on the uncoded analog part
    /// (hybrid scheme only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analog_share: Option<f64>,
}

impl LayerAllocation {
    /// Number of (digital) layers.
    pub fn n(&self) -> usize {
        self.gains.len()
    }

    /// Checks the structural invariants of the allocation for a channel.
    pub fn validate(&self, spec: &ChannelSpec) -> Result<()> {
        let m_min = spec.m_min() as f64;
        if self
            .gains
            .iter()
            .any(|&r| !r.is_finite() || r < -TOL || r > m_min + TOL)
        {
            return Err(Error::Allocation(format!(
                "multiplexing gains must lie in [0, {m_min}]"
            )));
        }
        match self.scheme {
            Scheme::SingleLayer | Scheme::Ls | Scheme::Hls => {
                if self.gains.windows(2).any(|w| w[1] < w[0] - TOL) {
                    return Err(Error::Allocation(
                        "time-shared layers need nondecreasing gains".into(),
                    ));
                }
                if self.time_shares.len() != self.gains.len() {
                    return Err(Error::Allocation(format!(
                        "{} time shares for {} layers",
                        self.time_shares.len(),
                        self.gains.len()
                    )));
                }
                if self.time_shares.iter().any(|&t| !t.is_finite() || t < -TOL) {
                    return Err(Error::Allocation("time shares must be nonnegative".into()));
                }
                if !self.time_shares.is_empty() {
                    let total: f64 = self.time_shares.iter().sum();
                    if (total - 1.0).abs() > TOL {
                        return Err(Error::Allocation(format!(
                            "time shares sum to {total}, expected 1"
                        )));
                    }
                }
                if !self.power_exponents.is_empty() {
                    return Err(Error::Allocation(
                        "time-shared layers carry no power exponents".into(),
                    ));
                }
                match (self.scheme, self.analog_share) {
                    (Scheme::Hls, Some(a)) if (0.0..=1.0).contains(&a) => {}
                    (Scheme::Hls, _) => {
                        return Err(Error::Allocation(
                            "hybrid allocation needs an analog share in [0, 1]".into(),
                        ));
                    }
                    (_, None) => {}
                    (_, Some(_)) => {
                        return Err(Error::Allocation(
                            "only the hybrid scheme has an analog share".into(),
                        ));
                    }
                }
            }
            Scheme::Bs => {
                let l = spec.blocks() as f64;
                let total: f64 = self.gains.iter().sum();
                if total > 1.0 / l + TOL {
                    return Err(Error::Allocation(format!(
                        "superposed gains sum to {total} > 1/L = {}",
                        1.0 / l
                    )));
                }
                if self.power_exponents.len() != self.gains.len() {
                    return Err(Error::Allocation(format!(
                        "{} power exponents for {} layers",
                        self.power_exponents.len(),
                        self.gains.len()
                    )));
                }
                // The outermost level always carries the full transmit
                // power; later levels may sit anywhere below it (their
                // strict ordering at a concrete SNR depends on the ε₀
                // backoff and is checked where powers are materialized).
                if self.power_exponents.iter().any(|e| !e.is_finite()) {
                    return Err(Error::Allocation("power exponents must be finite".into()));
                }
                if let Some(&first) = self.power_exponents.first() {
                    if (first - 1.0).abs() > TOL {
                        return Err(Error::Allocation(format!(
                            "the first power exponent is {first}, expected 1 (full power)"
                        )));
                    }
                }
                if !self.time_shares.is_empty() || self.analog_share.is_some() {
                    return Err(Error::Allocation(
                        "superposed layers use neither time shares nor an analog part".into(),
                    ));
                }
            }
            Scheme::UpperBound => {
                return Err(Error::Allocation(
                    "the upper bound is not attained by a layer allocation".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Solves `offset + slope·r = d*(r)` for the unique `r ∈ [0, m_min]`.
///
/// The left side rises, the curve falls, and `offset ≤ d*(0)`, so exactly
/// one segment contains the crossing; scanning from the right end finds it
/// without any iterative root-finding. With `slope = 0` this degenerates to
/// curve inversion.
pub(crate) fn intersect_rising_line(curve: &DmtCurve, slope: f64, offset: f64) -> Result<f64> {
    if !slope.is_finite() || slope < 0.0 {
        return Err(Error::Domain(format!(
            "line slope must be nonnegative, got {slope}"
        )));
    }
    if !offset.is_finite() || offset < 0.0 || offset > curve.max_diversity() + TOL {
        return Err(Error::Domain(format!(
            "line offset {offset} is outside the curve's diversity range"
        )));
    }
    if slope == 0.0 {
        return curve.inverse(offset.min(curve.max_diversity()));
    }
    let breakpoints = curve.breakpoints();
    let slopes = curve.segment_slopes();
    // Rightmost segment whose left endpoint still lies on or above the
    // line: the crossing sits inside it (at the segment's right endpoint
    // the line is already at or above the curve, by the previous rejection
    // or because the curve ends at zero).
    for j in (0..slopes.len()).rev() {
        let (x_j, d_j) = breakpoints[j];
        if offset + slope * x_j <= d_j + TOL {
            let r = (d_j + slopes[j] * x_j - offset) / (slopes[j] + slope);
            return Ok(r.clamp(x_j, x_j + 1.0));
        }
    }
    // offset ≥ d*(0): the line starts above the whole curve; the crossing
    // is pinned at the left end.
    Ok(0.0)
}

fn resolve_shares(n: u32, shares: Option<&[f64]>) -> Result<Vec<f64>> {
    match shares {
        None => Ok(vec![1.0 / n as f64; n as usize]),
        Some(t) => {
            if t.len() != n as usize {
                return Err(Error::Allocation(format!(
                    "{} time shares supplied for {n} layers",
                    t.len()
                )));
            }
            if t.iter().any(|&x| !x.is_finite() || x < 0.0) {
                return Err(Error::Allocation(
                    "time shares must be finite and nonnegative".into(),
                ));
            }
            let total: f64 = t.iter().sum();
            if (total - 1.0).abs() > TOL {
                return Err(Error::Allocation(format!(
                    "time shares sum to {total}, expected 1"
                )));
            }
            Ok(t.to_vec())
        }
    }
}

/// Runs the top-down staircase: the layer `n` gain solves
/// `floor + slope·t_n·r = d*(r)`, and each earlier layer `k` solves
/// `d*(r_k) = d*(r_{k+1}) + slope·t_k·r_k`. Returns the gains and
/// `d*(r_1)`, the achieved exponent.
fn staircase_gains(
    curve: &DmtCurve,
    budget_slope: f64,
    shares: &[f64],
    floor: f64,
) -> Result<(Vec<f64>, f64)> {
    let n = shares.len();
    let mut gains = vec![0.0; n];
    let mut d_next = floor;
    for k in (0..n).rev() {
        let r = intersect_rising_line(curve, budget_slope * shares[k], d_next)?;
        gains[k] = r;
        d_next = curve.eval(r)?;
    }
    Ok((gains, d_next))
}

/// Optimal gains for `n` progressively refined, time-shared layers.
///
/// `shares` defaults to the equal split, which is what the infinite-layer
/// closed forms assume; arbitrary nonnegative shares summing to 1 are
/// accepted. Returns the allocation and the distortion exponent `d*(r_1)`.
pub fn solve_ls_staircase(
    curve: &DmtCurve,
    b: f64,
    n: u32,
    shares: Option<&[f64]>,
) -> Result<(LayerAllocation, f64)> {
    if !(b > 0.0) || !b.is_finite() {
        return Err(Error::Domain(format!(
            "bandwidth ratio must be positive, got {b}"
        )));
    }
    if n == 0 {
        return Err(Error::Domain("layered coding needs at least one layer".into()));
    }
    let t = resolve_shares(n, shares)?;
    let (gains, exponent) = staircase_gains(curve, b, &t, 0.0)?;
    Ok((
        LayerAllocation {
            scheme: Scheme::Ls,
            gains,
            time_shares: t,
            power_exponents: Vec::new(),
            analog_share: None,
        },
        exponent,
    ))
}

/// Optimal gains for the hybrid scheme: `n` digital layers over the
/// channel-use budget `b − 1/m_min`, plus an uncoded analog tail whose
/// diversity floor of 1 offsets the top staircase equation. `n = 0` is the
/// pure-analog point with exponent exactly 1.
pub fn solve_hls_staircase(
    curve: &DmtCurve,
    b: f64,
    n: u32,
    shares: Option<&[f64]>,
) -> Result<(LayerAllocation, f64)> {
    let m_min = curve.m_min();
    if !b.is_finite() || b < 1.0 / m_min {
        return Err(Error::Domain(format!(
            "the hybrid scheme needs b ≥ 1/m_min = {}, got {b}",
            1.0 / m_min
        )));
    }
    let analog_share = Some(1.0 / (b * m_min));
    if n == 0 {
        return Ok((
            LayerAllocation {
                scheme: Scheme::Hls,
                gains: Vec::new(),
                time_shares: Vec::new(),
                power_exponents: Vec::new(),
                analog_share,
            },
            1.0,
        ));
    }
    let t = resolve_shares(n, shares)?;
    let (gains, exponent) = staircase_gains(curve, b - 1.0 / m_min, &t, 1.0)?;
    Ok((
        LayerAllocation {
            scheme: Scheme::Hls,
            gains,
            time_shares: t,
            power_exponents: Vec::new(),
            analog_share,
        },
        exponent,
    ))
}

/// Decay exponent achieved by an arbitrary time-shared allocation: the
/// slowest of the `n+1` prefix terms `d*(r_{i+1}) + b·Σ_{k≤i} t_k·r_k`
/// (the final term, with all layers decoded, has no outage factor).
/// At a staircase solution all terms are equal.
pub fn ls_decay_exponent(
    curve: &DmtCurve,
    b: f64,
    gains: &[f64],
    shares: &[f64],
) -> Result<f64> {
    if gains.len() != shares.len() {
        return Err(Error::Allocation(format!(
            "{} gains but {} shares",
            gains.len(),
            shares.len()
        )));
    }
    let mut best = f64::INFINITY;
    let mut acc = 0.0;
    for (&r, &t) in gains.iter().zip(shares) {
        best = best.min(curve.eval(r)? + b * acc);
        acc += t * r;
    }
    Ok(best.min(b * acc))
}

/// Decay exponent achieved by an arbitrary hybrid allocation: like
/// [`ls_decay_exponent`] but with the digital budget reduced to
/// `b − 1/m_min`, and the full-decode term gaining one diversity order
/// from the analog refinement.
pub fn hls_decay_exponent(
    curve: &DmtCurve,
    b: f64,
    gains: &[f64],
    shares: &[f64],
) -> Result<f64> {
    let m_min = curve.m_min();
    if !b.is_finite() || b < 1.0 / m_min {
        return Err(Error::Domain(format!(
            "the hybrid scheme needs b ≥ 1/m_min = {}, got {b}",
            1.0 / m_min
        )));
    }
    if gains.len() != shares.len() {
        return Err(Error::Allocation(format!(
            "{} gains but {} shares",
            gains.len(),
            shares.len()
        )));
    }
    let digital_b = b - 1.0 / m_min;
    let mut best = f64::INFINITY;
    let mut acc = 0.0;
    for (&r, &t) in gains.iter().zip(shares) {
        best = best.min(curve.eval(r)? + digital_b * acc);
        acc += t * r;
    }
    Ok(best.min(1.0 + digital_b * acc))
}

/// Which construction the superposed-layer solver uses at `(spec, b)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BsConstruction {
    /// Geometric gain progression on the antenna system reduced by `band`
    /// (the decay terms of that system are exactly equalized).
    Geometric {
        /// How many antennas are stripped from each side.
        band: u32,
    },
    /// Equal gains `P/(nP+s)`: above `b = m_t·m_r` the gain budget binds
    /// before the bandwidth does, and the decay terms become nondecreasing
    /// with the first one (the full-diversity outage of layer 1) slowest.
    EqualGain,
    /// One layer carrying the whole budget `1/L`: with several blocks and
    /// small `b` the geometric system would need negative gains, and this
    /// degenerate assignment (exponent `b/L`) is the continuous fallback.
    SingleActive,
}

/// Selects the superposed-layer construction for a channel and bandwidth
/// ratio. Band intervals are closed on the left: at `b` exactly
/// `(m_t−k)(m_r−k)` the larger system applies.
pub fn bs_construction(spec: &ChannelSpec, b: f64) -> Result<BsConstruction> {
    if !(b > 0.0) || !b.is_finite() {
        return Err(Error::Domain(format!(
            "bandwidth ratio must be positive, got {b}"
        )));
    }
    let (m_t, m_r) = (spec.m_t(), spec.m_r());
    if spec.blocks() == 1 {
        if spec.m_min() == 1 {
            // Single spatial degree of freedom: the geometric progression
            // stays feasible for every b (the gain sum is < 1 even with
            // ratio above 1), so no other branch is needed.
            return Ok(BsConstruction::Geometric { band: 0 });
        }
        if b >= (m_t * m_r) as f64 {
            return Ok(BsConstruction::EqualGain);
        }
        let band = (0..spec.m_min())
            .find(|&k| b >= ((m_t - k - 1) * (m_r - k - 1)) as f64)
            .expect("the last band starts at 0, so every positive b lands somewhere");
        Ok(BsConstruction::Geometric { band })
    } else {
        let l = spec.blocks() as f64;
        let p = (m_t * m_r) as f64;
        let s = (m_t + m_r - 1) as f64;
        if b < l * (l * p - s) {
            Ok(BsConstruction::SingleActive)
        } else {
            Ok(BsConstruction::Geometric { band: 0 })
        }
    }
}

/// Geometric gain progression equalizing the decay terms of an `L`-block
/// system with diversity parameters `p = m_t·m_r`, `s = m_t+m_r−1`:
/// ratio `η = 1 + δ` with `δ = (b − L²p)/(L·s)`, first gain
/// `r_1 = L·p/(L·s + b·T)` where `T = Σ_{i=0}^{n−1} η^i`. `T` is computed
/// as `expm1(n·ln1p(δ))/δ`, which is exact at the removable singularity
/// `η = 1` and loses no precision nearby. When `η^n` overflows (large
/// layer counts with `η > 1`), the same progression is generated from its
/// last gain `r_n = L·p·(η−1) / (L·s·(η−1)·η^{1−n} + b·(η − η^{1−n}))`,
/// which stays representable because `η^{1−n} ≤ η`.
fn geometric_gains(l: f64, p: f64, s: f64, b: f64, n: u32) -> Result<Vec<f64>> {
    let delta = (b - l * l * p) / (l * s);
    let eta = 1.0 + delta;
    let t = if delta == 0.0 {
        n as f64
    } else {
        ((n as f64) * delta.ln_1p()).exp_m1() / delta
    };
    let mut gains = vec![0.0; n as usize];
    if t.is_finite() {
        if t <= 0.0 {
            return Err(Error::Domain(format!(
                "geometric gain sum is not representable for n = {n} layers at b = {b}"
            )));
        }
        let mut r = l * p / (l * s + b * t);
        for slot in gains.iter_mut() {
            *slot = r;
            r *= eta;
        }
    } else {
        let eta_pow = ((1.0 - n as f64) * eta.ln()).exp();
        let mut r = l * p * (eta - 1.0) / (l * s * (eta - 1.0) * eta_pow + b * (eta - eta_pow));
        for slot in gains.iter_mut().rev() {
            *slot = r;
            r /= eta;
        }
    }
    Ok(gains)
}

/// The `n+1` decay terms of a superposed allocation on system `sys`:
/// term `i < n` is `d_sd(r_{i+1} | r_1..r_i) + b·Σ_{j≤i} r_j` (decode the
/// first `i` layers, fail at the next), and term `n` is `b·Σ r_j` (decode
/// everything). The achieved exponent is their minimum.
pub fn bs_decay_terms(sys: &ChannelSpec, b: f64, gains: &[f64]) -> Result<Vec<f64>> {
    let mut terms = Vec::with_capacity(gains.len() + 1);
    let mut pre_rate = 0.0;
    for (i, &r) in gains.iter().enumerate() {
        terms.push(sys.sd_diversity(&gains[..i], r)? + b * pre_rate);
        pre_rate += r;
    }
    terms.push(b * pre_rate);
    Ok(terms)
}

/// Superposed-layer gain and power assignment, together with the
/// distortion exponent it achieves (the minimum decay term of the
/// construction's reference system).
pub fn bs_solve(spec: &ChannelSpec, b: f64, n: u32) -> Result<(LayerAllocation, f64)> {
    if n == 0 {
        return Err(Error::Domain(
            "superposition coding needs at least one layer".into(),
        ));
    }
    let construction = bs_construction(spec, b)?;
    let l = spec.blocks() as f64;
    let (m_t, m_r) = (spec.m_t(), spec.m_r());
    let (gains, sys) = match construction {
        BsConstruction::Geometric { band } => {
            let p = ((m_t - band) * (m_r - band)) as f64;
            let s = (m_t + m_r - 2 * band - 1) as f64;
            let sys = if spec.blocks() == 1 {
                ChannelSpec::new(m_t - band, m_r - band, 1)?
            } else {
                *spec
            };
            (geometric_gains(l, p, s, b, n)?, sys)
        }
        BsConstruction::EqualGain => {
            let p = (m_t * m_r) as f64;
            let s = (m_t + m_r - 1) as f64;
            (vec![p / (n as f64 * p + s); n as usize], *spec)
        }
        BsConstruction::SingleActive => {
            let mut gains = vec![0.0; n as usize];
            gains[0] = 1.0 / l;
            (gains, *spec)
        }
    };
    debug_assert!(
        gains.iter().sum::<f64>() <= 1.0 / l + TOL,
        "constructed gains must respect the budget"
    );
    let mut power_exponents = Vec::with_capacity(n as usize);
    let mut prefix = 0.0;
    for &r in &gains {
        power_exponents.push(1.0 - l * prefix);
        prefix += r;
    }
    let terms = bs_decay_terms(&sys, b, &gains)?;
    let exponent = terms.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok((
        LayerAllocation {
            scheme: Scheme::Bs,
            gains,
            time_shares: Vec::new(),
            power_exponents,
            analog_share: None,
        },
        exponent,
    ))
}

/// The gain/power assignment alone; see [`bs_solve`].
pub fn bs_allocation(spec: &ChannelSpec, b: f64, n: u32) -> Result<LayerAllocation> {
    bs_solve(spec, b, n).map(|(alloc, _)| alloc)
}
