//! Chain geometry: 2N serially connected edges, alternating string / beam.
//!
//! Edge kinds are fixed by index parity (first edge is a string, last is a
//! beam); users supply only the lengths. Also provides the number-theoretic
//! witness used when discussing strong stability: floating-point lengths can
//! never certify irrationality, so the witness reports best rational
//! approximations and their quality instead of a verdict.

use crate::error::{Error, Result};

/// Kind of a chain edge. Strings occupy odd positions (1-based), beams even.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    String,
    Beam,
}

/// Validated geometry of a chain with `2N` edges of positive length.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainGeometry {
    lengths: Vec<f64>,
}

impl ChainGeometry {
    /// Validates raw lengths into a chain geometry. Never truncates: the
    /// input must already contain an even, positive number of positive
    /// lengths.
    pub fn new(raw_lengths: &[f64]) -> Result<Self> {
        if raw_lengths.is_empty() {
            return Err(Error::EmptyInput);
        }
        if raw_lengths.len() % 2 != 0 {
            return Err(Error::OddEdgeCount(raw_lengths.len()));
        }
        for (i, &l) in raw_lengths.iter().enumerate() {
            if !(l > 0.0) || !l.is_finite() {
                return Err(Error::NonPositiveLength {
                    index: i + 1,
                    value: l,
                });
            }
        }
        Ok(Self {
            lengths: raw_lengths.to_vec(),
        })
    }

    /// Number of string/beam pairs (the N in 2N).
    pub fn n_pairs(&self) -> usize {
        self.lengths.len() / 2
    }

    /// Total number of edges, 2N.
    pub fn num_edges(&self) -> usize {
        self.lengths.len()
    }

    /// All edge lengths, string first.
    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    /// Length of edge `idx` (0-based).
    pub fn length(&self, idx: usize) -> f64 {
        self.lengths[idx]
    }

    /// Edge kind by index parity: even 0-based indices are strings.
    pub fn kind(&self, idx: usize) -> EdgeKind {
        if idx % 2 == 0 {
            EdgeKind::String
        } else {
            EdgeKind::Beam
        }
    }
}

/// Validates a raw length list into a [`ChainGeometry`].
pub fn validate_chain(raw_lengths: &[f64]) -> Result<ChainGeometry> {
    ChainGeometry::new(raw_lengths)
}

/// A rational number p/q in lowest terms with q >= 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rational {
    pub p: i64,
    pub q: i64,
}

/// Result of probing a²/(b·π) against values p²/q with bounded q.
#[derive(Debug, Clone, PartialEq)]
pub struct SquarePiTest {
    /// The probed quantity a²/(b·π).
    pub target: f64,
    pub p: i64,
    pub q: i64,
    pub error: f64,
    /// True when the best p²/q lies within `tol` of the target.
    pub plausibly_hit: bool,
}

/// Approximation-quality report for a length ratio a/b.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalityReport {
    /// The ratio a/b that was probed.
    pub ratio: f64,
    /// Best rational approximation with denominator bounded by the request.
    pub best: Rational,
    /// |ratio - p/q|.
    pub error: f64,
    /// True when the approximation error is below `tol`.
    pub plausibly_rational: bool,
    /// The companion test of a²/(bπ) against p²/q values.
    pub square_pi: SquarePiTest,
}

/// Best rational approximation of `x >= 0` with denominator at most `qmax`,
/// through the continued-fraction convergents plus the one semiconvergent
/// that can beat the last in-budget convergent.
fn best_rational(x: f64, qmax: u64) -> Rational {
    debug_assert!(x >= 0.0 && qmax >= 1);
    let (mut p0, mut q0): (i64, i64) = (0, 1); // previous convergent
    let (mut p1, mut q1): (i64, i64) = (1, 0); // current "infinity" seed
    let mut r = x;
    loop {
        let a = r.floor();
        if a >= 1e18 {
            break;
        }
        let ai = a as i64;
        let (p2, q2) = (ai * p1 + p0, ai * q1 + q0);
        if q2 as u64 > qmax {
            // Best semiconvergent: largest k with q0 + k q1 <= qmax.
            let k = ((qmax as i64 - q0) / q1.max(1)).min(ai);
            let (ps, qs) = (k * p1 + p0, k * q1 + q0);
            // Compare semiconvergent against the last full convergent.
            let conv_err = (x - p1 as f64 / q1 as f64).abs();
            let semi_err = (x - ps as f64 / qs as f64).abs();
            if q1 >= 1 && conv_err <= semi_err {
                return Rational { p: p1, q: q1 };
            }
            return Rational { p: ps, q: qs };
        }
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        let frac = r - a;
        if frac <= 1e-18 {
            break;
        }
        r = 1.0 / frac;
    }
    Rational { p: p1, q: q1 }
}

/// Reports the best rational approximation of a/b with bounded denominator
/// and the closest p²/q match for a²/(bπ).
///
/// The two probes mirror the hypotheses under which strong stability of the
/// first dissipative system holds: a ratio of string lengths staying away
/// from rationals, or a squared beam length over a string length staying away
/// from (p²/q)π. A "plausibly rational" flag is evidence, never proof.
pub fn rationality_witness(
    a: f64,
    b: f64,
    max_denominator: u64,
    tol: f64,
) -> Result<RationalityReport> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::Domain(format!(
            "rationality_witness needs positive inputs, got a={a}, b={b}"
        )));
    }
    if max_denominator < 1 {
        return Err(Error::Domain("max_denominator must be >= 1".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain("tol must be > 0".into()));
    }

    let ratio = a / b;
    let best = best_rational(ratio, max_denominator);
    let error = (ratio - best.p as f64 / best.q as f64).abs();

    // (3.9)-style probe: a²/(bπ) against p²/q over the same denominator budget.
    let target = a * a / (b * std::f64::consts::PI);
    let mut sq = SquarePiTest {
        target,
        p: 0,
        q: 1,
        error: target.abs(),
        plausibly_hit: target.abs() < tol,
    };
    for q in 1..=max_denominator as i64 {
        let p_max = (target * q as f64 * (1.0 + tol)).sqrt().ceil() as i64 + 1;
        for p in 0..=p_max {
            let err = (target - (p * p) as f64 / q as f64).abs();
            if err < sq.error {
                sq.p = p;
                sq.q = q;
                sq.error = err;
                sq.plausibly_hit = err < tol;
            }
        }
    }

    Ok(RationalityReport {
        ratio,
        best,
        error,
        plausibly_rational: error < tol,
        square_pi: sq,
    })
}
