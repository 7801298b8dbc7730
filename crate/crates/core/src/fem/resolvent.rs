//! Resolvent-norm estimation for the damped generator along the imaginary
//! axis: the frequency-domain quantity behind the polynomial decay rate.
//!
//! ‖(iβ - A)⁻¹‖ is taken in the discrete energy metric G = diag(K, M). One
//! application of the resolvent reduces to a single complex-symmetric solve
//! with Q(β) = K + iβD - β²M, so each β costs one LU factorization; the
//! largest singular value of the resolvent is then found by power iteration
//! on R*R, where the adjoint solve reuses the same factorization through
//! conjugation (Q(β) conjugates to Q(-β)).

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_complex::Complex64;
use rayon::prelude::*;

use super::oracle::generalized_symmetric_eig;
use super::{DiscreteSystem, Variant};
use crate::chain::EdgeKind;
use crate::error::{Error, Result};

/// One sweep sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolventSample {
    pub beta: f64,
    pub norm: f64,
}

impl ResolventSample {
    pub fn norm_over_beta(&self) -> f64 {
        self.norm / self.beta
    }
}

/// Frequency above which the sweep would measure the mesh instead of the
/// operator: a quarter of the string-lattice cutoff frequency. The string
/// elements are the coarsest-converging block (their generalized eigenvalues
/// top out at 12/h²), so their cutoff bounds the band where the discrete
/// operator tracks the continuum.
pub fn trust_horizon(sys: &DiscreteSystem) -> f64 {
    let mut omega_max: f64 = 0.0;
    for (edge, mesh) in sys.dofs.edges.iter().enumerate() {
        if sys.geom.kind(edge) == EdgeKind::String {
            omega_max = omega_max.max(12f64.sqrt() / mesh.h);
        }
    }
    0.25 * omega_max
}

struct EnergyMetric {
    mass_chol: Cholesky<f64, Dyn>,
    stiff_solver: StiffSolver,
    /// M-weighted kernel interpolants and Gram inverse for deflating the
    /// zero eigenspace when the chain has more than one pair.
    kernel: Option<(Vec<DVector<f64>>, Vec<DVector<f64>>, DMatrix<f64>)>,
}

enum StiffSolver {
    Chol(Cholesky<f64, Dyn>),
    /// Spectral pseudo-inverse on the kernel complement.
    Spectral { vectors: DMatrix<f64>, mu: Vec<f64> },
}

impl EnergyMetric {
    fn new(sys: &DiscreteSystem) -> Result<Self> {
        let mass_chol = Cholesky::new(sys.mass.clone())
            .ok_or_else(|| Error::SolverFailure("mass matrix not SPD".into()))?;
        let kernel_dim = sys.geom.n_pairs() - 1;
        let stiff_solver = if kernel_dim == 0 {
            StiffSolver::Chol(Cholesky::new(sys.stiffness.clone()).ok_or_else(|| {
                Error::SolverFailure("stiffness not positive definite".into())
            })?)
        } else {
            let eig = generalized_symmetric_eig(&sys.stiffness, &sys.mass)?;
            StiffSolver::Spectral {
                vectors: eig.vectors.columns(kernel_dim, sys.n_dofs() - kernel_dim).into_owned(),
                mu: eig.mu[kernel_dim..].to_vec(),
            }
        };
        let kernel = if kernel_dim > 0 {
            let zs = sys.zero_mode_interpolants();
            let mz: Vec<DVector<f64>> = zs.iter().map(|z| &sys.mass * z).collect();
            let mut gram = DMatrix::zeros(kernel_dim, kernel_dim);
            for i in 0..kernel_dim {
                for j in 0..kernel_dim {
                    gram[(i, j)] = zs[i].dot(&mz[j]);
                }
            }
            let gram_inv = gram
                .try_inverse()
                .ok_or_else(|| Error::SolverFailure("kernel Gram matrix singular".into()))?;
            Some((zs, mz, gram_inv))
        } else {
            None
        };
        Ok(EnergyMetric {
            mass_chol,
            stiff_solver,
            kernel,
        })
    }

    fn deflate(&self, u: &mut DVector<Complex64>) {
        let Some((zs, mz, gram_inv)) = &self.kernel else {
            return;
        };
        let k = zs.len();
        let mut rhs = DVector::<Complex64>::zeros(k);
        for (i, m) in mz.iter().enumerate() {
            rhs[i] = u
                .iter()
                .zip(m.iter())
                .map(|(ui, mi)| ui * *mi)
                .sum::<Complex64>();
        }
        for i in 0..k {
            let mut c = Complex64::new(0.0, 0.0);
            for j in 0..k {
                c += gram_inv[(i, j)] * rhs[j];
            }
            for (ui, zi) in u.iter_mut().zip(zs[i].iter()) {
                *ui -= c * *zi;
            }
        }
    }

    fn solve_mass(&self, b: &DVector<Complex64>) -> DVector<Complex64> {
        solve_real_spd(&self.mass_chol, b)
    }

    fn solve_stiffness(&self, b: &DVector<Complex64>) -> DVector<Complex64> {
        match &self.stiff_solver {
            StiffSolver::Chol(c) => solve_real_spd(c, b),
            StiffSolver::Spectral { vectors, mu } => {
                let mut out = DVector::<Complex64>::zeros(b.len());
                for (j, m) in mu.iter().enumerate() {
                    let col = vectors.column(j);
                    let proj: Complex64 = b
                        .iter()
                        .zip(col.iter())
                        .map(|(bi, vi)| bi * *vi)
                        .sum();
                    let w = proj / m;
                    for (oi, vi) in out.iter_mut().zip(col.iter()) {
                        *oi += w * *vi;
                    }
                }
                out
            }
        }
    }
}

/// Solves the real SPD system for a complex right-hand side by splitting
/// into real and imaginary parts.
fn solve_real_spd(chol: &Cholesky<f64, Dyn>, b: &DVector<Complex64>) -> DVector<Complex64> {
    let re = DVector::from_iterator(b.len(), b.iter().map(|c| c.re));
    let im = DVector::from_iterator(b.len(), b.iter().map(|c| c.im));
    let xr = chol.solve(&re);
    let xi = chol.solve(&im);
    DVector::from_iterator(b.len(), xr.iter().zip(xi.iter()).map(|(r, i)| Complex64::new(*r, *i)))
}

fn real_matvec(m: &DMatrix<f64>, v: &DVector<Complex64>) -> DVector<Complex64> {
    let re = DVector::from_iterator(v.len(), v.iter().map(|c| c.re));
    let im = DVector::from_iterator(v.len(), v.iter().map(|c| c.im));
    let yr = m * re;
    let yi = m * im;
    DVector::from_iterator(v.len(), yr.iter().zip(yi.iter()).map(|(r, i)| Complex64::new(*r, *i)))
}

/// splitmix64: deterministic start vectors without an RNG dependency.
fn splitmix_fill(n: usize, seed: u64) -> Vec<f64> {
    let mut s = seed;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        s = s.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = s;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^= z >> 31;
        out.push((z >> 11) as f64 / (1u64 << 53) as f64 - 0.5);
    }
    out
}

struct ResolventApplier<'a> {
    sys: &'a DiscreteSystem,
    beta: f64,
    q_lu: nalgebra::LU<Complex64, Dyn, Dyn>,
}

impl<'a> ResolventApplier<'a> {
    fn new(sys: &'a DiscreteSystem, beta: f64) -> Result<Self> {
        let n = sys.n_dofs();
        let mut q = DMatrix::<Complex64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                q[(i, j)] = Complex64::new(
                    sys.stiffness[(i, j)] - beta * beta * sys.mass[(i, j)],
                    0.0,
                );
            }
        }
        for &(_, dof) in &sys.damping {
            q[(dof, dof)] += Complex64::new(0.0, beta);
        }
        let q_lu = nalgebra::LU::new(q);
        Ok(ResolventApplier { sys, beta, q_lu })
    }

    fn solve_q(&self, rhs: &DVector<Complex64>) -> Result<DVector<Complex64>> {
        self.q_lu
            .solve(rhs)
            .ok_or_else(|| Error::SolverFailure("singular shifted operator".into()))
    }

    /// Q(β) is complex symmetric, so conj(Q)x = b solves via x = conj(Q⁻¹ conj(b)).
    fn solve_q_conj(&self, rhs: &DVector<Complex64>) -> Result<DVector<Complex64>> {
        let conj_rhs = rhs.map(|c| c.conj());
        Ok(self.solve_q(&conj_rhs)?.map(|c| c.conj()))
    }

    /// (u, v) = (iβ - A)⁻¹ (f, g) through the second-order reduction:
    /// (K + iβD - β²M) u = M g + iβ M f + D f, then v = iβ u - f.
    fn apply(
        &self,
        f: &DVector<Complex64>,
        g: &DVector<Complex64>,
    ) -> Result<(DVector<Complex64>, DVector<Complex64>)> {
        let ib = Complex64::new(0.0, self.beta);
        let mf = real_matvec(&self.sys.mass, f);
        let mg = real_matvec(&self.sys.mass, g);
        let mut rhs = mg + mf * ib;
        for &(_, dof) in &self.sys.damping {
            rhs[dof] += f[dof];
        }
        let u = self.solve_q(&rhs)?;
        let v = &u * ib - f;
        Ok((u, v))
    }

    /// Standard-metric adjoint R* applied blockwise, with conjugate solves
    /// reusing the one factorization.
    fn apply_adjoint(
        &self,
        a: &DVector<Complex64>,
        b: &DVector<Complex64>,
    ) -> Result<(DVector<Complex64>, DVector<Complex64>)> {
        let minus_ib = Complex64::new(0.0, -self.beta);
        let qa = self.solve_q_conj(a)?;
        let qb = self.solve_q_conj(b)?;
        // R blocks: u = Q⁻¹(iβM + D) f + Q⁻¹M g ; v = iβ u - f. Conjugate
        // transposition swaps the off-diagonal blocks and sends Q⁻¹ to Q̄⁻¹:
        //   t1 = (-iβM + D) qa + (-iβ)((-iβM + D) qb) - b
        //   t2 = M qa + (-iβ) M qb
        let m_qa = real_matvec(&self.sys.mass, &qa);
        let m_qb = real_matvec(&self.sys.mass, &qb);
        let mut t1 = &m_qa * minus_ib + &m_qb * (minus_ib * minus_ib);
        for &(_, dof) in &self.sys.damping {
            t1[dof] += qa[dof] + minus_ib * qb[dof];
        }
        t1 -= b;
        let t2 = m_qa + &m_qb * minus_ib;
        Ok((t1, t2))
    }
}

fn h_inner(
    sys: &DiscreteSystem,
    u1: &DVector<Complex64>,
    v1: &DVector<Complex64>,
    u2: &DVector<Complex64>,
    v2: &DVector<Complex64>,
) -> f64 {
    let ku = real_matvec(&sys.stiffness, u2);
    let mv = real_matvec(&sys.mass, v2);
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..u1.len() {
        acc += u1[i].conj() * ku[i] + v1[i].conj() * mv[i];
    }
    acc.re
}

/// Operator norm of (iβ - A)⁻¹ on the discrete energy space, by power
/// iteration on the metric-adjoint composition.
pub fn resolvent_norm(sys: &DiscreteSystem, beta: f64) -> Result<f64> {
    let metric = EnergyMetric::new(sys)?;
    resolvent_norm_with(sys, &metric, beta)
}

fn resolvent_norm_with(sys: &DiscreteSystem, metric: &EnergyMetric, beta: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(Error::Domain(format!("beta must be positive, got {beta}")));
    }
    let n = sys.n_dofs();
    let applier = ResolventApplier::new(sys, beta)?;

    let raw = splitmix_fill(4 * n, 0x5eed_c4a1_0f00_0001 ^ beta.to_bits());
    let mut f = DVector::from_iterator(n, (0..n).map(|i| Complex64::new(raw[4 * i], raw[4 * i + 1])));
    let mut g = DVector::from_iterator(n, (0..n).map(|i| Complex64::new(raw[4 * i + 2], raw[4 * i + 3])));
    metric.deflate(&mut f);

    let mut norm_sq = 0.0f64;
    let mut prev = f64::INFINITY;
    for iter in 0..60 {
        let denom = h_inner(sys, &f, &g, &f, &g);
        if denom <= 0.0 {
            return Err(Error::SolverFailure("degenerate start vector".into()));
        }
        let (u, v) = applier.apply(&f, &g)?;
        norm_sq = h_inner(sys, &u, &v, &u, &v) / denom;
        // Pull back through the metric: x ← G⁻¹ R* G (u, v).
        let gu = real_matvec(&sys.stiffness, &u);
        let gv = real_matvec(&sys.mass, &v);
        let (t1, t2) = applier.apply_adjoint(&gu, &gv)?;
        let mut nf = metric.solve_stiffness(&t1);
        let ng = metric.solve_mass(&t2);
        metric.deflate(&mut nf);
        let scale = h_inner(sys, &nf, &ng, &nf, &ng).sqrt();
        if !(scale > 0.0) {
            break;
        }
        f = nf / Complex64::new(scale, 0.0);
        g = ng / Complex64::new(scale, 0.0);
        if iter >= 8 && (norm_sq - prev).abs() <= 1e-6 * norm_sq.abs() {
            break;
        }
        prev = norm_sq;
    }
    Ok(norm_sq.max(0.0).sqrt())
}

/// Estimates ‖(iβ - A)⁻¹‖ for each requested β. The factorizations are
/// independent, so the sweep parallelizes over β.
pub fn resolvent_norm_sweep(
    sys: &DiscreteSystem,
    betas: &[f64],
) -> Result<Vec<ResolventSample>> {
    if sys.variant == Variant::Pc {
        return Err(Error::Domain(
            "resolvent sweep targets the damped variants".into(),
        ));
    }
    let metric = EnergyMetric::new(sys)?;
    betas
        .par_iter()
        .map(|&beta| {
            resolvent_norm_with(sys, &metric, beta).map(|norm| ResolventSample { beta, norm })
        })
        .collect()
}

/// Geometric β grid over [beta_min, beta_max]: the standard survey for the
/// boundedness statistic (max against median of norm/β), which presumes an
/// even sampling density in log β.
pub fn default_beta_grid(beta_min: f64, beta_max: f64, points: usize) -> Result<Vec<f64>> {
    if !(beta_min > 0.0 && beta_max > beta_min) {
        return Err(Error::InvalidRange {
            z_min: beta_min,
            z_max: beta_max,
        });
    }
    let points = points.max(2);
    Ok((0..points)
        .map(|i| beta_min * (beta_max / beta_min).powf(i as f64 / (points - 1) as f64))
        .collect())
}

/// Adds the conservative eigenfrequencies in range (where the norm peaks)
/// and the midpoints between consecutive ones (where it dips) to a geometric
/// fill. Resolves the peak/valley structure; the extreme spread this creates
/// is expected, so the flatness statistic does not apply to it.
pub fn resonance_beta_grid(
    sys: &DiscreteSystem,
    beta_min: f64,
    beta_max: f64,
    fill_points: usize,
) -> Result<Vec<f64>> {
    let mut betas = default_beta_grid(beta_min, beta_max, fill_points)?;
    let eig = generalized_symmetric_eig(&sys.stiffness, &sys.mass)?;
    let omegas: Vec<f64> = eig
        .mu
        .iter()
        .filter(|&&mu| mu > 0.0)
        .map(|mu| mu.sqrt())
        .filter(|w| *w >= beta_min && *w <= beta_max)
        .collect();
    betas.extend_from_slice(&omegas);
    for w in omegas.windows(2) {
        betas.push(0.5 * (w[0] + w[1]));
    }
    betas.sort_by(f64::total_cmp);
    betas.dedup_by(|a, b| (*a - *b).abs() < 1e-9 * *b);
    Ok(betas)
}
