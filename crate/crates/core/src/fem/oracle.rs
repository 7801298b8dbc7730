//! Dense generalized symmetric eigensolver over the assembled (K, M) pencil:
//! the independent spectral oracle for the transfer-matrix roots, plus
//! kernel-dimension checks against the explicit zero eigenspace.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{discretize, DiscreteSystem, Variant};
use crate::chain::ChainGeometry;
use crate::error::{Error, Result};

/// Eigenpairs of K x = μ M x, ascending in μ, vectors as columns.
#[derive(Debug, Clone)]
pub struct GeneralizedEig {
    pub mu: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

/// Solves the symmetric generalized problem by Cholesky reduction to
/// standard form: with M = L Lᵗ, the pencil becomes L⁻¹ K L⁻ᵗ.
pub fn generalized_symmetric_eig(k: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<GeneralizedEig> {
    let n = k.nrows();
    if k.ncols() != n || m.nrows() != n || m.ncols() != n {
        return Err(Error::EigSolverFailure("pencil shape mismatch".into()));
    }
    let chol = nalgebra::Cholesky::new(m.clone())
        .ok_or_else(|| Error::EigSolverFailure("mass matrix not SPD".into()))?;
    let l = chol.l();
    let y = l
        .solve_lower_triangular(k)
        .ok_or_else(|| Error::EigSolverFailure("singular Cholesky factor".into()))?;
    let b = l
        .solve_lower_triangular(&y.transpose())
        .ok_or_else(|| Error::EigSolverFailure("singular Cholesky factor".into()))?;
    // Symmetrize away the reduction roundoff before the eigensolve.
    let b = (&b + &b.transpose()) * 0.5;
    let eig = SymmetricEigen::new(b);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let mu: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let lt = l.transpose();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        let y = eig.eigenvectors.column(i).into_owned();
        let x = lt
            .solve_upper_triangular(&y)
            .ok_or_else(|| Error::EigSolverFailure("back substitution failed".into()))?;
        vectors.set_column(col, &x);
    }
    Ok(GeneralizedEig { mu, vectors })
}

/// Number of eigenvalues considered part of the stiffness kernel: the
/// smallest ones are compared against the ninth-smallest as reference scale,
/// which separates kernel roundoff (orders of magnitude below the first
/// flexible mode) from physics for any desk-scale chain.
pub fn stiffness_nullity(sys: &DiscreteSystem) -> Result<usize> {
    let eig = generalized_symmetric_eig(&sys.stiffness, &sys.mass)?;
    Ok(count_kernel(&eig.mu))
}

fn count_kernel(mu: &[f64]) -> usize {
    let probe = mu.len().min(9) - 1;
    let scale = mu[probe].abs().max(f64::MIN_POSITIVE);
    mu.iter().take(8).filter(|m| m.abs() < 1e-4 * scale).count()
}

/// The smallest `count` positive generalized eigenvalues on the complement
/// of the zero eigenspace, reported as √μ = z² for direct comparison with
/// the transfer-matrix roots.
pub fn oracle_spectrum_discrete(sys: &DiscreteSystem, count: usize) -> Result<Vec<f64>> {
    if sys.variant != Variant::Pc {
        return Err(Error::Domain(
            "spectral oracle runs on the conservative variant".into(),
        ));
    }
    let eig = generalized_symmetric_eig(&sys.stiffness, &sys.mass)?;
    let kernel = sys.geom.n_pairs() - 1;
    let measured = count_kernel(&eig.mu);
    if measured != kernel {
        return Err(Error::EigSolverFailure(format!(
            "kernel dimension {measured}, expected {kernel}"
        )));
    }
    let physical = &eig.mu[kernel..];
    if count > physical.len() {
        return Err(Error::EigSolverFailure(format!(
            "requested {count} eigenvalues, only {} available",
            physical.len()
        )));
    }
    physical[..count]
        .iter()
        .map(|&mu| {
            if mu <= 0.0 {
                Err(Error::EigSolverFailure(format!(
                    "nonpositive eigenvalue {mu} past the kernel"
                )))
            } else {
                Ok(mu.sqrt())
            }
        })
        .collect()
}

/// Oracle values at mesh sizes h and 2h combined by one Richardson step for
/// the leading h² error of the string elements (Hermite beams converge
/// faster and are only helped).
pub fn oracle_spectrum_richardson(
    geom: &ChainGeometry,
    h: f64,
    count: usize,
) -> Result<Vec<f64>> {
    let fine = oracle_spectrum_discrete(&discretize(geom, h, Variant::Pc)?, count)?;
    let coarse = oracle_spectrum_discrete(&discretize(geom, 2.0 * h, Variant::Pc)?, count)?;
    Ok(fine
        .iter()
        .zip(&coarse)
        .map(|(f, c)| (4.0 * f - c) / 3.0)
        .collect())
}

/// Worst relative M-norm error between the computed kernel eigenvectors and
/// the span of the exact zero-mode interpolants. Zero for a single pair
/// (empty kernel).
pub fn kernel_match_error(sys: &DiscreteSystem) -> Result<f64> {
    let kernel = sys.geom.n_pairs() - 1;
    if kernel == 0 {
        return Ok(0.0);
    }
    let eig = generalized_symmetric_eig(&sys.stiffness, &sys.mass)?;
    if count_kernel(&eig.mu) != kernel {
        return Err(Error::EigSolverFailure(
            "discrete kernel dimension disagrees with the zero eigenspace".into(),
        ));
    }
    let zs = sys.zero_mode_interpolants();
    let mz: Vec<DVector<f64>> = zs.iter().map(|z| &sys.mass * z).collect();
    let mut gram = DMatrix::zeros(kernel, kernel);
    for i in 0..kernel {
        for j in 0..kernel {
            gram[(i, j)] = zs[i].dot(&mz[j]);
        }
    }
    let gram_inv = gram
        .try_inverse()
        .ok_or_else(|| Error::EigSolverFailure("kernel Gram matrix singular".into()))?;

    let mut worst = 0.0f64;
    for col in 0..kernel {
        let x = eig.vectors.column(col).into_owned();
        let rhs = DVector::from_iterator(kernel, mz.iter().map(|m| m.dot(&x)));
        let coef = &gram_inv * rhs;
        let mut residual = x.clone();
        for (i, z) in zs.iter().enumerate() {
            residual -= z * coef[i];
        }
        let m_norm = |v: &DVector<f64>| (v.dot(&(&sys.mass * v))).sqrt();
        worst = worst.max(m_norm(&residual) / m_norm(&x));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::validate_chain;
    use crate::spectrum::find_spectrum;

    fn geom(lengths: &[f64]) -> ChainGeometry {
        validate_chain(lengths).unwrap()
    }

    #[test]
    fn oracle_matches_transfer_roots_single_pair() {
        let g = geom(&[1.0, 1.0]);
        let scan = find_spectrum(&g, 0.5, 8.0, 6000, 1e-12).unwrap();
        let z2: Vec<f64> = scan.roots.iter().map(|r| r.lambda_im).collect();
        let oracle = oracle_spectrum_richardson(&g, 0.02, 6).unwrap();
        for (a, b) in oracle.iter().zip(&z2) {
            assert!(
                ((a - b) / b).abs() < 1e-2,
                "oracle {a} vs transfer {b}"
            );
        }
    }

    #[test]
    fn string_family_error_contracts_at_second_order() {
        // Refining h halves the error at least 0.3x on the first eigenvalue
        // (second order gives 0.25).
        let g = geom(&[1.0, 1.0]);
        let scan = find_spectrum(&g, 0.5, 3.0, 2000, 1e-12).unwrap();
        let truth = scan.roots[0].lambda_im;
        let coarse = oracle_spectrum_discrete(
            &discretize(&g, 1.0 / 40.0, Variant::Pc).unwrap(),
            1,
        )
        .unwrap()[0];
        let fine = oracle_spectrum_discrete(
            &discretize(&g, 1.0 / 80.0, Variant::Pc).unwrap(),
            1,
        )
        .unwrap()[0];
        let ratio = (fine - truth).abs() / (coarse - truth).abs();
        assert!(ratio <= 0.3, "contraction ratio {ratio}");
    }

    #[test]
    fn requesting_too_many_eigenvalues_fails() {
        let g = geom(&[1.0, 1.0]);
        let sys = discretize(&g, 0.2, Variant::Pc).unwrap();
        let n = sys.n_dofs();
        assert!(matches!(
            oracle_spectrum_discrete(&sys, n + 1),
            Err(Error::EigSolverFailure(_))
        ));
    }

    #[test]
    fn oracle_rejects_damped_variants() {
        let g = geom(&[1.0, 1.0]);
        let sys = discretize(&g, 0.1, Variant::P2).unwrap();
        assert!(oracle_spectrum_discrete(&sys, 3).is_err());
    }

    #[test]
    fn nullity_counts_the_zero_eigenspace() {
        for lengths in [
            vec![1.0, 1.0],
            vec![1.0, 0.8, 1.3, 0.9],
            vec![1.0, 0.8, 1.3, 0.9, 0.7, 1.1],
        ] {
            let g = geom(&lengths);
            let sys = discretize(&g, 0.05, Variant::Pc).unwrap();
            assert_eq!(stiffness_nullity(&sys).unwrap(), g.n_pairs() - 1);
        }
    }

    #[test]
    fn kernel_vectors_match_interpolants() {
        let g = geom(&[1.0, 0.8, 1.3, 0.9]);
        let sys = discretize(&g, 0.05, Variant::Pc).unwrap();
        let err = kernel_match_error(&sys).unwrap();
        assert!(err < 1e-8, "kernel match error {err}");
    }
}
