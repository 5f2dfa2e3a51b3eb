//! Cross-checks between the finite-layer solvers and the closed-form
//! limits: large layer counts approach the infinite-layer expressions,
//! and one-segment channels match the telescoped recursions exactly.

use dexp_core::exponents::{bs_finite, bs_infinite, hls_infinite, ls_infinite};
use dexp_core::staircase::{solve_hls_staircase, solve_ls_staircase};
use dexp_core::ChannelSpec;

fn spec(m_t: u32, m_r: u32, blocks: u32) -> ChannelSpec {
    ChannelSpec::new(m_t, m_r, blocks).unwrap()
}

const SPECS: [(u32, u32, u32); 5] = [(1, 1, 1), (2, 2, 1), (4, 1, 1), (2, 2, 2), (3, 2, 1)];
const BANDWIDTHS: [f64; 5] = [0.5, 1.0, 2.5, 4.0, 7.0];

#[test]
fn ls_staircase_approaches_the_infinite_layer_closed_form() {
    for (t, r, l) in SPECS {
        let s = spec(t, r, l);
        let curve = s.dmt();
        for b in BANDWIDTHS {
            let limit = ls_infinite(&s, b).unwrap().exponent;
            let d1000 = solve_ls_staircase(&curve, b, 1000, None).unwrap().1;
            let d2000 = solve_ls_staircase(&curve, b, 2000, None).unwrap().1;
            assert!(
                d1000 <= limit + 1e-9,
                "{s} b={b}: finite staircase {d1000} above its limit {limit}"
            );
            assert!(
                limit - d1000 <= 5e-3,
                "{s} b={b}: staircase at n=1000 is {d1000}, limit {limit}"
            );
            assert!(
                limit - d2000 <= limit - d1000 + 1e-12,
                "{s} b={b}: doubling the layers moved away from the limit"
            );
        }
    }
}

#[test]
fn hls_staircase_approaches_the_infinite_layer_closed_form() {
    for (t, r, l) in SPECS {
        let s = spec(t, r, l);
        let curve = s.dmt();
        for extra in BANDWIDTHS {
            let b = 1.0 / curve.m_min() + extra;
            let limit = hls_infinite(&s, b).unwrap().exponent;
            let d1000 = solve_hls_staircase(&curve, b, 1000, None).unwrap().1;
            assert!(
                d1000 <= limit + 1e-9 && limit - d1000 <= 5e-3,
                "{s} b={b}: hybrid staircase at n=1000 is {d1000}, limit {limit}"
            );
        }
    }
}

#[test]
fn bs_finite_approaches_the_infinite_layer_closed_form() {
    for (t, r, l) in SPECS {
        let s = spec(t, r, l);
        for b in BANDWIDTHS {
            let limit = bs_infinite(&s, b).unwrap().exponent;
            let d4000 = bs_finite(&s, b, 4000).unwrap().exponent;
            assert!(
                d4000 <= limit + 1e-9 && limit - d4000 <= 2e-3,
                "{s} b={b}: superposed at n=4000 is {d4000}, limit {limit}"
            );
        }
    }
}

/// On a one-segment tradeoff curve (slope α = L·M^*, budget β per scheme)
/// the equal-share staircase telescopes into an affine recursion whose
/// closed form is `Δ_n = A − (A − floor)·q^n` with `q = α/(α + β/n)` and
/// asymptote `A = α·m_min`. The solvers must reproduce it exactly.
#[test]
fn one_segment_staircases_match_the_telescoped_recursion() {
    for m in [2u32, 3, 4] {
        for (t, r) in [(m, 1), (1, m)] {
            let s = spec(t, r, 1);
            let curve = s.dmt();
            let alpha = m as f64;
            for b in [1.5f64, 3.0, 6.0] {
                for n in [1u32, 2, 8, 64] {
                    let q_ls = alpha / (alpha + b / n as f64);
                    let expected_ls = alpha * (1.0 - q_ls.powi(n as i32));
                    let got_ls = solve_ls_staircase(&curve, b, n, None).unwrap().1;
                    assert!(
                        (got_ls - expected_ls).abs() <= 1e-12,
                        "{s} b={b} n={n}: staircase {got_ls} vs telescoped {expected_ls}"
                    );

                    let q_hls = alpha / (alpha + (b - 1.0) / n as f64);
                    let expected_hls = alpha - (alpha - 1.0) * q_hls.powi(n as i32);
                    let got_hls = solve_hls_staircase(&curve, b, n, None).unwrap().1;
                    assert!(
                        (got_hls - expected_hls).abs() <= 1e-12,
                        "{s} b={b} n={n}: hybrid {got_hls} vs telescoped {expected_hls}"
                    );
                }
            }
        }
    }
}

/// The hybrid scheme beats plain layering by exactly one diversity order
/// worth of analog refinement in the infinite-layer limit; with many
/// finite layers the advantage at equal digital layer count stays
/// positive but shrinks.
#[test]
fn hybrid_advantage_is_positive_and_shrinking() {
    let s = spec(1, 1, 1);
    let curve = s.dmt();
    let b = 3.0;
    let mut previous_gap = f64::INFINITY;
    for n in [1u32, 2, 4, 8, 16, 32] {
        let ls = solve_ls_staircase(&curve, b, n, None).unwrap().1;
        let hls = solve_hls_staircase(&curve, b, n, None).unwrap().1;
        let gap = hls - ls;
        assert!(gap > 0.0, "hybrid must beat plain layering at n={n}");
        assert!(
            gap <= previous_gap + 1e-12,
            "hybrid advantage should shrink with more layers"
        );
        previous_gap = gap;
    }
}
