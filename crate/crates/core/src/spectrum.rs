//! Transfer matrices of the chain, the characteristic function f(z) = m12(z),
//! its large-z form, root location/refinement/classification and the
//! generalized gap statistic.
//!
//! Eigenvalues of the conservative chain operator are λ = i z² for the
//! positive roots z of f. Per-edge matrices propagate the node vector
//! (value, scaled derivative) along an edge; T and its inverse couple a
//! string to the following beam and a beam to the following string.

use rayon::prelude::*;

use crate::chain::ChainGeometry;
use crate::error::{Error, Result};
use crate::mat2::Mat2;

/// Default magnitude threshold on the rescaled beam denominator below which
/// evaluation reports a (numerically) removable pole.
pub const POLE_THRESHOLD: f64 = 1e-8;

/// Default bisection tolerance on z for root refinement.
pub const DEFAULT_Z_TOL: f64 = 1e-12;

/// Transfer matrix of a string edge: [[c, s], [-s, c]] with c = cos(l z²),
/// s = sin(l z²). Rotation, determinant exactly c² + s².
pub fn string_matrix(z: f64, l: f64) -> Mat2 {
    let (s, c) = (l * z * z).sin_cos();
    Mat2::new(c, s, -s, c)
}

/// Transfer matrix of a beam edge in overflow-safe form.
///
/// The textbook expression carries e^{2lz} factors that overflow doubles near
/// l·z ≈ 355; numerator and denominator are both multiplied by e^{-2lz} so
/// every intermediate stays O(1) and the entries converge for z → ∞ to
/// [[c - s, -2s], [c, c - s]].
pub fn beam_matrix(z: f64, l: f64) -> Result<Mat2> {
    beam_matrix_with(z, l, POLE_THRESHOLD)
}

/// Same as [`beam_matrix`] with an explicit pole threshold.
pub fn beam_matrix_with(z: f64, l: f64, pole_threshold: f64) -> Result<Mat2> {
    let (den, m) = beam_matrix_parts(z, l);
    if den.abs() < pole_threshold {
        return Err(Error::PoleEncountered {
            z,
            l,
            denominator: den,
        });
    }
    Ok(m)
}

/// Rescaled denominator and the assembled matrix (no pole check).
fn beam_matrix_parts(z: f64, l: f64) -> (f64, Mat2) {
    let (s, c) = (l * z).sin_cos();
    let e1 = (-l * z).exp();
    let e2 = e1 * e1;
    let den = 1.0 - 2.0 * e1 * s - e2;
    let m11 = (c - s) - (c + s) * e2;
    let m12 = 2.0 * s * (e2 - 1.0);
    let m21 = c - 2.0 * e1 + c * e2;
    let inv = 1.0 / den;
    (
        den,
        Mat2::new(m11 * inv, m12 * inv, m21 * inv, m11 * inv),
    )
}

/// Node coupling from a string end into the following beam start.
pub fn coupling_t(z: f64) -> Mat2 {
    Mat2::new(1.0, 0.0, 0.0, -1.0 / z)
}

/// Node coupling from a beam end into the following string start.
pub fn coupling_t_inv(z: f64) -> Mat2 {
    Mat2::new(1.0, 0.0, 0.0, -z)
}

/// Full chain product M(z) = A_{2N} T A_{2N-1} ... T⁻¹ A_2 T A_1.
pub fn eval_m(geom: &ChainGeometry, z: f64) -> Result<Mat2> {
    eval_m_detailed(geom, z).map(|d| d.m)
}

pub(crate) struct EvalDetail {
    pub m: Mat2,
    /// Smallest rescaled beam denominator magnitude met along the product.
    pub min_beam_denominator: f64,
}

pub(crate) fn eval_m_detailed(geom: &ChainGeometry, z: f64) -> Result<EvalDetail> {
    if !(z > 0.0) {
        return Err(Error::Domain(format!("eval_m needs z > 0, got {z}")));
    }
    let mut min_den = f64::INFINITY;
    let mut m = string_matrix(z, geom.length(0));
    for idx in 1..geom.num_edges() {
        if idx % 2 == 1 {
            let l = geom.length(idx);
            let (den, a) = beam_matrix_parts(z, l);
            if den.abs() < POLE_THRESHOLD {
                return Err(Error::PoleEncountered {
                    z,
                    l,
                    denominator: den,
                });
            }
            min_den = min_den.min(den.abs());
            m = a * (coupling_t(z) * m);
        } else {
            m = string_matrix(z, geom.length(idx)) * (coupling_t_inv(z) * m);
        }
    }
    Ok(EvalDetail {
        m,
        min_beam_denominator: min_den,
    })
}

/// Characteristic function f(z): the (1,2) entry of M(z). Real for real z;
/// its positive roots are the conservative eigenvalues λ = i z².
pub fn char_fn(geom: &ChainGeometry, z: f64) -> Result<f64> {
    Ok(eval_m(geom, z)?.m12)
}

/// Large-z form of the characteristic function:
/// s₁ c₂ s₃ ⋯ s_{2N-1} (c_{2N} - s_{2N}) in the c/s shorthand
/// (strings evaluate trig at l z², beams at l z).
pub fn asymptotic_char_fn(geom: &ChainGeometry, z: f64) -> f64 {
    let n = geom.n_pairs();
    let mut prod = 1.0;
    for j in 0..n {
        prod *= (geom.length(2 * j) * z * z).sin();
        if j + 1 < n {
            prod *= (geom.length(2 * j + 1) * z).cos();
        }
    }
    let (s, c) = (geom.length(2 * n - 1) * z).sin_cos();
    prod * (c - s)
}

/// Remainder g(z) of the large-z factorization f(z) = (-z)^{N-1}(f_inf + g).
///
/// The prefactor comes from the N-1 grouped node couplings in the chain
/// product: each T⁻¹ A_{2j} T A_{2j-1} block contributes one factor -z to the
/// dominant term. (The source text displays a plain z for every N; expanding
/// its own matrices gives (-z)^{N-1}, which is what the remainder must be
/// measured against for g → 0 to hold.)
pub fn asymptotic_remainder(geom: &ChainGeometry, z: f64) -> Result<f64> {
    let f = char_fn(geom, z)?;
    let n = geom.n_pairs();
    let scale = (-z).powi(n as i32 - 1);
    Ok(f / scale - asymptotic_char_fn(geom, z))
}

/// One dyadic window [z_lo, z_hi) and the largest |g| sampled inside it.
#[derive(Debug, Clone, PartialEq)]
pub struct GapWindow {
    pub z_lo: f64,
    pub z_hi: f64,
    pub max_abs: f64,
}

/// Sampled asymptotic remainder plus a dyadic-window trend summary.
#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    /// (z, g(z)) on the requested grid; pole-flagged points are skipped.
    pub samples: Vec<(f64, f64)>,
    pub windows: Vec<GapWindow>,
}

impl GapReport {
    /// True when the window maxima strictly decrease, the desk-scale proxy
    /// for g → 0.
    pub fn strictly_decreasing(&self) -> bool {
        self.windows.windows(2).all(|w| w[1].max_abs < w[0].max_abs)
    }
}

/// Samples g(z) on the given grid and summarizes |g| over dyadic windows
/// [z0, 2 z0), [2 z0, 4 z0), ... spanning the grid.
pub fn asymptotic_gap_check(geom: &ChainGeometry, z_grid: &[f64]) -> Result<GapReport> {
    if z_grid.is_empty() || z_grid[0] <= 0.0 {
        return Err(Error::Domain("z grid must be positive".into()));
    }
    if z_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("z grid must be strictly increasing".into()));
    }
    let samples: Vec<(f64, f64)> = z_grid
        .par_iter()
        .filter_map(|&z| match asymptotic_remainder(geom, z) {
            Ok(g) => Some((z, g)),
            Err(Error::PoleEncountered { .. }) => None,
            Err(_) => None,
        })
        .collect();
    if samples.is_empty() {
        return Err(Error::Domain(
            "no evaluable grid points (all pole-flagged)".into(),
        ));
    }

    let mut windows = Vec::new();
    let z_end = *z_grid.last().unwrap();
    let mut lo = z_grid[0];
    while lo < z_end {
        let hi = 2.0 * lo;
        let max_abs = samples
            .iter()
            .filter(|(z, _)| *z >= lo && *z < hi)
            .map(|(_, g)| g.abs())
            .fold(0.0, f64::max);
        windows.push(GapWindow {
            z_lo: lo,
            z_hi: hi,
            max_abs,
        });
        lo = hi;
    }
    Ok(GapReport { samples, windows })
}

/// One of the 2N closed-form families the large eigenvalues approach.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    /// String in pair j (1-based): z = sqrt(kπ / l_{2j-1}).
    StringEdge(usize),
    /// Interior beam in pair j (1-based, j < N): z = (π + 2kπ) / (2 l_{2j}).
    InteriorBeam(usize),
    /// Terminal beam: z = (π/4 + kπ) / l_{2N}.
    LastBeam,
}

impl FamilyKind {
    /// Closed-form prediction for the k-th member (k >= 1).
    pub fn predicted_z(&self, geom: &ChainGeometry, k: u32) -> f64 {
        let k = f64::from(k);
        let pi = std::f64::consts::PI;
        match *self {
            FamilyKind::StringEdge(j) => (k * pi / geom.length(2 * j - 2)).sqrt(),
            FamilyKind::InteriorBeam(j) => (pi + 2.0 * k * pi) / (2.0 * geom.length(2 * j - 1)),
            FamilyKind::LastBeam => (pi / 4.0 + k * pi) / geom.length(geom.num_edges() - 1),
        }
    }

    /// All families of a geometry: N strings, N-1 interior beams, last beam.
    pub fn all(geom: &ChainGeometry) -> Vec<FamilyKind> {
        let n = geom.n_pairs();
        let mut fams: Vec<FamilyKind> = (1..=n).map(FamilyKind::StringEdge).collect();
        fams.extend((1..n).map(FamilyKind::InteriorBeam));
        fams.push(FamilyKind::LastBeam);
        fams
    }
}

impl std::fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FamilyKind::StringEdge(j) => write!(f, "string({j})"),
            FamilyKind::InteriorBeam(j) => write!(f, "interior_beam({j})"),
            FamilyKind::LastBeam => write!(f, "last_beam"),
        }
    }
}

/// A family assignment for a root: which family, which member, how far off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyMatch {
    pub kind: FamilyKind,
    pub k: u32,
    pub predicted_z: f64,
    /// |z - predicted| / local family spacing.
    pub rel_offset: f64,
}

/// A refined positive root of the characteristic function.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralRoot {
    pub z: f64,
    /// Imaginary part of the eigenvalue, λ = i z².
    pub lambda_im: f64,
    /// |f(z)| at the refined point.
    pub residual: f64,
    /// Ordinal in the sorted root list.
    pub index: usize,
    /// Filled by [`classify_roots`].
    pub family: Option<FamilyMatch>,
    /// Smallest rescaled beam denominator met while evaluating f here.
    pub min_beam_denominator: f64,
}

/// Non-fatal observations from the scan.
#[derive(Debug, Clone, PartialEq)]
pub enum ScanWarning {
    /// A grid cell where |f| dips near zero without a sign change: an even
    /// number of roots may hide inside.
    PossibleMissedRoots { z_lo: f64, z_hi: f64 },
    /// A grid point was pole-flagged; its neighborhood was re-scanned at half
    /// step and excluded from bracketing where still flagged.
    PoleSkipped { z: f64 },
}

/// Root list plus scan diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumScan {
    pub roots: Vec<SpectralRoot>,
    pub warnings: Vec<ScanWarning>,
}

/// Scans f on a uniform grid over (z_min, z_max), brackets sign changes and
/// refines each bracket by bisection to width below `tol`.
///
/// Bisection rather than Newton: f is cheap, and bracketing cannot be thrown
/// off by the removable beam-denominator poles. Pole-flagged grid points are
/// re-sampled at half step around the point; cells whose midpoint probes
/// reveal hidden sign changes are split, and near-tangent dips are reported
/// as possible missed roots.
pub fn find_spectrum(
    geom: &ChainGeometry,
    z_min: f64,
    z_max: f64,
    scan_points: usize,
    tol: f64,
) -> Result<SpectrumScan> {
    if !(z_min > 0.0) || !(z_max > z_min) {
        return Err(Error::InvalidRange { z_min, z_max });
    }
    if scan_points < 2 {
        return Err(Error::Domain("scan_points must be >= 2".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain("tol must be > 0".into()));
    }

    let step = (z_max - z_min) / (scan_points - 1) as f64;
    let grid: Vec<f64> = (0..scan_points)
        .map(|i| z_min + step * i as f64)
        .collect();

    let mut warnings = Vec::new();

    // Evaluate the grid; pole-flagged points are replaced by half-step
    // neighbors where those evaluate cleanly.
    let raw: Vec<(f64, Option<f64>)> = grid
        .par_iter()
        .map(|&z| (z, char_fn(geom, z).ok()))
        .collect();
    let mut nodes: Vec<(f64, f64)> = Vec::with_capacity(scan_points + 8);
    for &(z, fv) in &raw {
        match fv {
            Some(v) => nodes.push((z, v)),
            None => {
                warnings.push(ScanWarning::PoleSkipped { z });
                for dz in [-0.5 * step, 0.5 * step] {
                    let zn = z + dz;
                    if zn > 0.0 {
                        if let Ok(v) = char_fn(geom, zn) {
                            nodes.push((zn, v));
                        }
                    }
                }
            }
        }
    }
    nodes.sort_by(|a, b| a.0.total_cmp(&b.0));
    nodes.dedup_by(|a, b| a.0 == b.0);

    // Bracket sign changes; probe midpoints of sign-preserving cells.
    let mut brackets: Vec<(f64, f64, f64, f64)> = Vec::new();
    for w in nodes.windows(2) {
        let (za, fa) = w[0];
        let (zb, fb) = w[1];
        if fa == 0.0 {
            continue; // exact grid hit handled by the next cell's endpoint
        }
        if fa * fb < 0.0 {
            brackets.push((za, zb, fa, fb));
        } else if zb - za > 4.0 * tol {
            let zm = 0.5 * (za + zb);
            if let Ok(fm) = char_fn(geom, zm) {
                if fm != 0.0 && fm * fa < 0.0 {
                    brackets.push((za, zm, fa, fm));
                    brackets.push((zm, zb, fm, fb));
                } else if fm.abs() < 0.05 * fa.abs().min(fb.abs()) {
                    warnings.push(ScanWarning::PossibleMissedRoots { z_lo: za, z_hi: zb });
                }
            }
        }
    }

    let mut roots: Vec<SpectralRoot> = brackets
        .par_iter()
        .filter_map(|&(za, zb, fa, _fb)| refine_bracket(geom, za, zb, fa, tol).ok())
        .collect();
    roots.sort_by(|a, b| a.z.total_cmp(&b.z));
    roots.dedup_by(|a, b| (a.z - b.z).abs() <= 10.0 * tol.max(1e-15 * a.z));
    for (i, r) in roots.iter_mut().enumerate() {
        r.index = i;
    }
    Ok(SpectrumScan { roots, warnings })
}

fn refine_bracket(
    geom: &ChainGeometry,
    mut lo: f64,
    mut hi: f64,
    mut f_lo: f64,
    tol: f64,
) -> Result<SpectralRoot> {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // hit floating-point resolution
        }
        let fm = char_fn(geom, mid)?;
        if fm == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if fm * f_lo < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            f_lo = fm;
        }
    }
    let z = 0.5 * (lo + hi);
    let detail = eval_m_detailed(geom, z)?;
    Ok(SpectralRoot {
        z,
        lambda_im: z * z,
        residual: detail.m.m12.abs(),
        index: 0,
        family: None,
        min_beam_denominator: detail.min_beam_denominator,
    })
}

/// Window (fraction of local family spacing) inside which a root is claimed
/// by a family. Asymptotic membership only; reported, never asserted.
pub const CLASSIFY_WINDOW: f64 = 0.25;

/// Tags each root with the nearest family prediction in z when that
/// prediction lies within [`CLASSIFY_WINDOW`] of the family's local spacing;
/// otherwise leaves it unclassified.
pub fn classify_roots(geom: &ChainGeometry, roots: &mut [SpectralRoot], k_max: u32) {
    let fams = FamilyKind::all(geom);
    let pi = std::f64::consts::PI;
    for root in roots.iter_mut() {
        let z = root.z;
        let mut best: Option<FamilyMatch> = None;
        for &kind in &fams {
            // Approximate inverse of the prediction to locate candidate k.
            let k_est = match kind {
                FamilyKind::StringEdge(j) => z * z * geom.length(2 * j - 2) / pi,
                FamilyKind::InteriorBeam(j) => geom.length(2 * j - 1) * z / pi - 0.5,
                FamilyKind::LastBeam => geom.length(geom.num_edges() - 1) * z / pi - 0.25,
            };
            for k in [k_est.floor(), k_est.ceil(), k_est.round()] {
                let k = k.max(1.0);
                if k > f64::from(k_max) {
                    continue;
                }
                let k = k as u32;
                let p = kind.predicted_z(geom, k);
                let above = kind.predicted_z(geom, k + 1) - p;
                let spacing = if k > 1 {
                    above.min(p - kind.predicted_z(geom, k - 1))
                } else {
                    above
                };
                let rel = (z - p).abs() / spacing;
                if rel >= CLASSIFY_WINDOW {
                    continue;
                }
                let closer = best.map_or(true, |b| {
                    (z - p).abs() < (z - b.predicted_z).abs()
                });
                if closer {
                    best = Some(FamilyMatch {
                        kind,
                        k,
                        predicted_z: p,
                        rel_offset: rel,
                    });
                }
            }
        }
        root.family = best;
    }
}

/// Generalized gap estimate over λ = z²: min over n of λ_{n+2N} - λ_n.
pub fn generalized_gap(roots: &[SpectralRoot], n_pairs: usize) -> Result<f64> {
    let window = 2 * n_pairs;
    if roots.len() < window + 1 {
        return Err(Error::InsufficientRoots {
            needed: window + 1,
            got: roots.len(),
        });
    }
    Ok((0..roots.len() - window)
        .map(|i| roots[i + window].lambda_im - roots[i].lambda_im)
        .fold(f64::INFINITY, f64::min))
}

/// Plain consecutive gap min over n of λ_{n+1} - λ_n, reported alongside the
/// generalized one (it may collapse toward zero for N >= 2).
pub fn simple_gap(roots: &[SpectralRoot]) -> Result<f64> {
    if roots.len() < 2 {
        return Err(Error::InsufficientRoots {
            needed: 2,
            got: roots.len(),
        });
    }
    Ok(roots
        .windows(2)
        .map(|w| w[1].lambda_im - w[0].lambda_im)
        .fold(f64::INFINITY, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::validate_chain;
    use approx::assert_relative_eq;

    fn geom(lengths: &[f64]) -> ChainGeometry {
        validate_chain(lengths).unwrap()
    }

    #[test]
    fn string_matrix_special_angles() {
        // l z² = 2π: identity.
        let z = (2.0 * std::f64::consts::PI).sqrt();
        let m = string_matrix(z, 1.0);
        assert_relative_eq!(m.m11, 1.0, epsilon = 1e-12);
        assert!(m.m12.abs() < 1e-12 && m.m21.abs() < 1e-12);
        // l z² = π/2: quarter rotation.
        let z = (std::f64::consts::FRAC_PI_2).sqrt();
        let m = string_matrix(z, 1.0);
        assert!(m.m11.abs() < 1e-12);
        assert_relative_eq!(m.m12, 1.0, epsilon = 1e-12);
        assert_relative_eq!(m.m21, -1.0, epsilon = 1e-12);
    }

    #[test]
    fn string_matrix_generic_point() {
        let m = string_matrix(1.0, 1.0);
        assert_relative_eq!(m.m11, 1f64.cos(), epsilon = 1e-15);
        assert_relative_eq!(m.m12, 1f64.sin(), epsilon = 1e-15);
        assert_relative_eq!(m.m21, -(1f64.sin()), epsilon = 1e-15);
    }

    /// Oracle: the unrescaled textbook formula, valid while e^{2lz} fits in
    /// a double.
    fn beam_matrix_unrescaled(z: f64, l: f64) -> Mat2 {
        let (s, c) = (l * z).sin_cos();
        let e1 = (l * z).exp();
        let e2 = e1 * e1;
        let den = e2 - 2.0 * e1 * s - 1.0;
        Mat2::new(
            (e2 * (c - s) - c - s) / den,
            2.0 * s * (1.0 - e2) / den,
            (e2 * c - 2.0 * e1 + c) / den,
            (e2 * (c - s) - c - s) / den,
        )
    }

    #[test]
    fn beam_matrix_matches_unrescaled_formula() {
        for &(z, l) in &[(1.0, 1.0), (0.7, 2.3), (3.0, 0.5), (10.0, 1.0), (40.0, 3.0)] {
            let a = beam_matrix(z, l).unwrap();
            let b = beam_matrix_unrescaled(z, l);
            assert_relative_eq!(a.m11, b.m11, max_relative = 1e-10);
            assert_relative_eq!(a.m12, b.m12, max_relative = 1e-10);
            assert_relative_eq!(a.m21, b.m21, max_relative = 1e-10);
        }
    }

    #[test]
    fn beam_matrix_at_full_turn() {
        // l z = 2π: closed form [[1, 0], [tanh(lz/2), 1]].
        let (z, l) = (2.0 * std::f64::consts::PI, 1.0);
        let m = beam_matrix(z, l).unwrap();
        assert_relative_eq!(m.m11, 1.0, epsilon = 1e-12);
        assert!(m.m12.abs() < 1e-12);
        assert_relative_eq!(m.m21, (l * z / 2.0).tanh(), epsilon = 1e-12);
        assert_relative_eq!(m.m22, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn beam_matrix_large_z_limit() {
        // At fixed lz mod 2π the entries converge to [[c-s, -2s], [c, c-s]].
        // (Expanding the defining formula gives -2s in the corner; the +2s
        // sometimes quoted next to it does not match the definition.)
        let phase = 1.3f64;
        let two_pi = 2.0 * std::f64::consts::PI;
        let (s, c) = phase.sin_cos();
        let lz = phase + 60.0 * two_pi;
        let m = beam_matrix(lz, 1.0).unwrap();
        assert_relative_eq!(m.m11, c - s, epsilon = 1e-10);
        assert_relative_eq!(m.m12, -2.0 * s, epsilon = 1e-10);
        assert_relative_eq!(m.m21, c, epsilon = 1e-10);
    }

    #[test]
    fn beam_matrix_survives_huge_arguments() {
        // l z ≈ 700 overflows the raw formula; the rescaled one must not.
        let m = beam_matrix(700.0, 1.0).unwrap();
        assert!(m.is_finite());
    }

    #[test]
    fn beam_matrix_reports_pole_for_tiny_lz() {
        // den = 2 e^{-lz}(sinh - sin)(lz) ~ 2(lz)³/3 underflows the threshold
        // for small l·z.
        assert!(matches!(
            beam_matrix(0.5, 1e-3),
            Err(Error::PoleEncountered { .. })
        ));
    }

    #[test]
    fn coupling_matrices_are_inverse() {
        for z in [0.5, 1.0, 2.0, 17.0] {
            let p = coupling_t(z) * coupling_t_inv(z);
            assert_relative_eq!(p.m11, 1.0, epsilon = 1e-15);
            assert_relative_eq!(p.m22, 1.0, epsilon = 1e-15);
            assert!(p.m12 == 0.0 && p.m21 == 0.0);
        }
        assert_eq!(coupling_t(1.0), Mat2::new(1.0, 0.0, 0.0, -1.0));
        assert_eq!(coupling_t_inv(2.0), Mat2::new(1.0, 0.0, 0.0, -2.0));
    }

    #[test]
    fn eval_m_single_pair_is_explicit_product() {
        let g = geom(&[1.0, 1.0]);
        for z in [0.7, 1.3, 2.9, 8.2] {
            let m = eval_m(&g, z).unwrap();
            let explicit = beam_matrix(z, 1.0).unwrap() * (coupling_t(z) * string_matrix(z, 1.0));
            assert_relative_eq!(m.m11, explicit.m11, epsilon = 1e-14);
            assert_relative_eq!(m.m12, explicit.m12, epsilon = 1e-14);
            assert_relative_eq!(m.m21, explicit.m21, epsilon = 1e-14);
            assert_relative_eq!(m.m22, explicit.m22, epsilon = 1e-14);
        }
    }

    #[test]
    fn eval_m_combined_special_point() {
        // l₁ z² = 2π and l₂ z = 2π simultaneously: M = A₂ T.
        let l2 = 1.0;
        let z = 2.0 * std::f64::consts::PI / l2;
        let l1 = l2 * l2 / (2.0 * std::f64::consts::PI);
        let g = geom(&[l1, l2]);
        let m = eval_m(&g, z).unwrap();
        let t = (l2 * z / 2.0).tanh();
        assert_relative_eq!(m.m11, 1.0, epsilon = 1e-10);
        assert!(m.m12.abs() < 1e-10);
        assert_relative_eq!(m.m21, t, epsilon = 1e-10);
        assert_relative_eq!(m.m22, -1.0 / z, epsilon = 1e-10);
    }

    #[test]
    fn char_fn_nonzero_at_generic_point() {
        let g = geom(&[1.0, 1.0]);
        assert!(char_fn(&g, 1.5).unwrap().abs() > 1e-6);
    }

    /// Independent dense-scan bisection oracle around the first string-family
    /// prediction z ≈ sqrt(π).
    #[test]
    fn root_near_first_string_prediction_refines() {
        let g = geom(&[1.0, 1.0]);
        let target = std::f64::consts::PI.sqrt();
        let (lo, hi) = (target - 0.5, target + 0.5);
        let n = 2000;
        let mut bracket = None;
        let mut prev = (lo, char_fn(&g, lo).unwrap());
        for i in 1..=n {
            let z = lo + (hi - lo) * i as f64 / n as f64;
            let fv = char_fn(&g, z).unwrap();
            if prev.1 * fv < 0.0 {
                bracket = Some((prev.0, z, prev.1));
                break;
            }
            prev = (z, fv);
        }
        let (mut a, mut b, mut fa) = bracket.expect("sign change near sqrt(pi)");
        while b - a > 1e-14 {
            let m = 0.5 * (a + b);
            let fm = char_fn(&g, m).unwrap();
            if fm * fa < 0.0 {
                b = m;
            } else {
                a = m;
                fa = fm;
            }
        }
        let z_star = 0.5 * (a + b);
        assert!(char_fn(&g, z_star).unwrap().abs() < 1e-10);
    }

    #[test]
    fn asymptotic_char_fn_single_pair_formula() {
        let g = geom(&[1.0, 1.0]);
        for z in [0.3f64, 1.0, 2.4, 7.7, 31.0] {
            let expect = (z * z).sin() * (z.cos() - z.sin());
            assert_relative_eq!(asymptotic_char_fn(&g, z), expect, epsilon = 1e-12);
        }
        assert!(asymptotic_char_fn(&g, std::f64::consts::PI.sqrt()).abs() < 1e-12);
        assert!(asymptotic_char_fn(&g, std::f64::consts::FRAC_PI_4).abs() < 1e-12);
    }

    #[test]
    fn remainder_small_at_large_z() {
        let g = geom(&[1.0, 1.0]);
        assert!(asymptotic_remainder(&g, 100.0).unwrap().abs() < 0.05);
        // f and its large-z form agree to three digits by z = 200.
        let f = char_fn(&g, 200.0).unwrap();
        let fi = asymptotic_char_fn(&g, 200.0);
        assert!(((f - fi) / fi).abs() < 5e-3);
    }

    #[test]
    fn gap_report_windows_decrease() {
        let g = geom(&[1.0, 1.0]);
        let grid: Vec<f64> = (0..7000).map(|i| 10.0 + 70.0 * i as f64 / 6999.0).collect();
        let rep = asymptotic_gap_check(&g, &grid).unwrap();
        assert_eq!(rep.windows.len(), 3);
        assert!(rep.strictly_decreasing(), "windows: {:?}", rep.windows);
    }

    #[test]
    fn gap_check_rejects_bad_grid() {
        let g = geom(&[1.0, 1.0]);
        assert!(asymptotic_gap_check(&g, &[2.0, 1.0]).is_err());
        assert!(asymptotic_gap_check(&g, &[]).is_err());
    }

    #[test]
    fn find_spectrum_postconditions() {
        let g = geom(&[1.0, 1.0]);
        let scan = find_spectrum(&g, 0.5, 10.0, 4000, 1e-12).unwrap();
        assert!(!scan.roots.is_empty());
        for (i, r) in scan.roots.iter().enumerate() {
            assert!(r.residual < 1e-8, "root {} residual {}", r.z, r.residual);
            assert_eq!(r.index, i);
            assert_relative_eq!(r.lambda_im, r.z * r.z);
            if i > 0 {
                assert!(r.z > scan.roots[i - 1].z);
            }
        }
    }

    #[test]
    fn root_count_stable_under_grid_refinement() {
        let g = geom(&[1.0, 1.0]);
        let coarse = find_spectrum(&g, 0.5, 10.0, 2000, 1e-12).unwrap();
        let fine = find_spectrum(&g, 0.5, 10.0, 8000, 1e-12).unwrap();
        assert_eq!(coarse.roots.len(), fine.roots.len());
        for (a, b) in coarse.roots.iter().zip(&fine.roots) {
            assert!((a.z - b.z).abs() < 1e-9);
        }
    }

    #[test]
    fn find_spectrum_range_validation() {
        let g = geom(&[1.0, 1.0]);
        assert!(matches!(
            find_spectrum(&g, 5.0, 1.0, 100, 1e-12),
            Err(Error::InvalidRange { .. })
        ));
        assert!(matches!(
            find_spectrum(&g, -1.0, 1.0, 100, 1e-12),
            Err(Error::InvalidRange { .. })
        ));
    }

    #[test]
    fn pole_flagged_points_are_skipped_not_fatal() {
        // A micro beam keeps l·z below the pole threshold over much of the
        // range; the scan must survive and report skips.
        let g = geom(&[1.0, 1e-4]);
        let scan = find_spectrum(&g, 20.0, 30.0, 400, 1e-10).unwrap();
        assert!(scan
            .warnings
            .iter()
            .any(|w| matches!(w, ScanWarning::PoleSkipped { .. })));
    }

    #[test]
    fn classification_tags_expected_families() {
        let g = geom(&[1.0, 1.0]);
        let mut scan = find_spectrum(&g, 20.0, 24.0, 6000, 1e-12).unwrap();
        classify_roots(&g, &mut scan.roots, 1000);
        let pi = std::f64::consts::PI;
        for r in &scan.roots {
            let fam = r.family.expect("large roots classify");
            match fam.kind {
                FamilyKind::StringEdge(1) => {
                    let k = (r.z * r.z / pi).round();
                    assert_relative_eq!(r.z, (k * pi).sqrt(), max_relative = 5e-3);
                }
                FamilyKind::LastBeam => {
                    let k = (r.z / pi - 0.25).round();
                    assert_relative_eq!(r.z, pi / 4.0 + k * pi, max_relative = 5e-3);
                }
                other => panic!("unexpected family {other:?} for N=1"),
            }
        }
        assert!(scan
            .roots
            .iter()
            .any(|r| matches!(r.family.unwrap().kind, FamilyKind::StringEdge(1))));
        assert!(scan
            .roots
            .iter()
            .any(|r| matches!(r.family.unwrap().kind, FamilyKind::LastBeam)));
    }

    #[test]
    fn far_off_root_stays_unclassified() {
        let g = geom(&[1.0, 1.0]);
        // Synthetic root parked in the middle of nowhere relative to both
        // family ladders at small z where spacings are wide.
        let mut roots = vec![SpectralRoot {
            z: 0.35,
            lambda_im: 0.35 * 0.35,
            residual: 0.0,
            index: 0,
            family: None,
            min_beam_denominator: 1.0,
        }];
        classify_roots(&g, &mut roots, 100);
        assert!(roots[0].family.is_none());
    }

    #[test]
    fn generalized_gap_positive_for_test_chain() {
        let g = geom(&[1.0, 1.0]);
        let mut scan = find_spectrum(&g, 0.5, 13.0, 20000, 1e-12).unwrap();
        scan.roots.truncate(40);
        assert!(scan.roots.len() >= 40);
        let gap = generalized_gap(&scan.roots, 1).unwrap();
        assert!(gap > 0.0);
    }

    #[test]
    fn generalized_gap_needs_enough_roots() {
        let g = geom(&[1.0, 1.0]);
        let scan = find_spectrum(&g, 0.5, 2.0, 500, 1e-12).unwrap();
        assert!(matches!(
            generalized_gap(&scan.roots[..2.min(scan.roots.len())], 1),
            Err(Error::InsufficientRoots { .. })
        ));
    }

    proptest::proptest! {
        #[test]
        fn string_matrix_det_is_one(z in 0.1f64..50.0, l in 0.05f64..5.0) {
            proptest::prop_assert!((string_matrix(z, l).det() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn char_fn_real_and_finite(z in 0.5f64..40.0, l1 in 0.2f64..3.0, l2 in 0.2f64..3.0) {
            let g = validate_chain(&[l1, l2]).unwrap();
            let f = char_fn(&g, z).unwrap();
            proptest::prop_assert!(f.is_finite());
        }
    }
}
