//! Dense complex linear algebra and operator constructors for the
//! two-qubit ⊗ truncated-Fock composite space.
//!
//! Composite layout: index = qubit·N + fock with the qubit basis ordered
//! (↑↑, ↑↓, ↓↑, ↓↓) and Fock levels |offset .. offset+N).  The Fock index is
//! fastest-varying, i.e. composite operators are `kron(qubit_op, fock_op)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::{C64, COp, CVec};

/// Hard cap on composite operator dimensions; the largest windowed problem in
/// practice is a few hundred.
pub const MAX_DIM: usize = 4096;

/// Qubit basis indices in the fixed (↑↑, ↑↓, ↓↑, ↓↓) ordering.
pub const UP_UP: usize = 0;
pub const UP_DOWN: usize = 1;
pub const DOWN_UP: usize = 2;
pub const DOWN_DOWN: usize = 3;

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(dim: usize) -> COp {
    DMatrix::identity(dim, dim)
}

/// Single-qubit Pauli matrix in the (↑, ↓) basis.
pub fn pauli(axis: Axis) -> COp {
    match axis {
        Axis::X => DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]),
        Axis::Y => DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]),
        Axis::Z => DMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]),
    }
}

/// σ₊ = |↑⟩⟨↓| in the (↑, ↓) basis.
pub fn sigma_plus() -> COp {
    DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(0., 0.), c(0., 0.)])
}

/// Kronecker product matching the composite layout (second factor
/// fastest-varying).
pub fn kron(a: &COp, b: &COp) -> Result<COp> {
    if !a.is_square() || !b.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "kron requires square factors, got {}x{} and {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    let dim = a.nrows() * b.nrows();
    if dim > MAX_DIM {
        return Err(Error::DimensionTooLarge { dim, max: MAX_DIM });
    }
    Ok(a.kronecker(b))
}

/// Collective spin operator S_j = σ_j^(1) + σ_j^(2) on the two-qubit space.
pub fn collective_spin(axis: Axis) -> COp {
    let s = pauli(axis);
    let id = identity(2);
    s.kronecker(&id) + id.kronecker(&s)
}

/// Phonon annihilation operator on the window [offset, offset+n_fock):
/// a|n⟩ = √n |n−1⟩ with absolute level amplitudes.
pub fn lowering(n_fock: usize, offset: usize) -> COp {
    let mut a = DMatrix::zeros(n_fock, n_fock);
    for k in 1..n_fock {
        a[(k - 1, k)] = c(((offset + k) as f64).sqrt(), 0.0);
    }
    a
}

/// Number operator a†a on the window [offset, offset+n_fock).
pub fn number_op(n_fock: usize, offset: usize) -> COp {
    DMatrix::from_diagonal(&DVector::from_iterator(
        n_fock,
        (0..n_fock).map(|k| c((offset + k) as f64, 0.0)),
    ))
}

/// exp(G) for an anti-Hermitian G, via eigendecomposition of the Hermitian
/// matrix iG.
pub fn expm_antihermitian(g: &COp) -> Result<COp> {
    let n = g.nrows();
    let herm = g.map(|z| C64::i() * z);
    let dev = (&herm - herm.adjoint()).norm();
    if dev > 1e-9 * (1.0 + herm.norm()) {
        return Err(Error::InvalidInput(format!(
            "expm_antihermitian: generator not anti-Hermitian (deviation {dev:.3e})"
        )));
    }
    let eig = SymmetricEigen::new(herm);
    // G = -i (iG) so exp(G) = V diag(e^{-i lambda}) V†.
    let phases =
        DVector::from_iterator(n, eig.eigenvalues.iter().map(|&l| c(0.0, -l).exp()));
    let mut scaled = eig.eigenvectors.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= phases[j];
    }
    Ok(&scaled * eig.eigenvectors.adjoint())
}

/// Truncated-space displacement operator D(β) = exp(β a† − β* a) on Fock
/// levels |0..n_fock).
///
/// Rejected when the truncation guard 4|β|² < n_fock is violated; inside the
/// guard the result is unitary to better than 1e-8 in spectral norm.
pub fn displacement_matrix(beta: C64, n_fock: usize) -> Result<COp> {
    if n_fock < 1 {
        return Err(Error::InvalidParameter {
            name: "n_fock",
            reason: "must be >= 1".into(),
        });
    }
    let beta_sq = beta.norm_sqr();
    if 4.0 * beta_sq >= n_fock as f64 {
        return Err(Error::TruncationGuard { beta_sq, n_fock });
    }
    if beta_sq == 0.0 {
        return Ok(identity(n_fock));
    }
    let a = lowering(n_fock, 0);
    let gen = a.adjoint().map(|z| beta * z.conj()) - a.map(|z| beta.conj() * z);
    expm_antihermitian(&gen)
}

/// Eigenprojectors (P₀, P₊₂, P₋₂) of a collective-spin-like operator with
/// spectrum {0, 0, +2, −2}: P₀ = 1 − S²/4, P±2 = (S² ± 2S)/8.
pub fn spin_projectors(s: &COp) -> (COp, COp, COp) {
    let s2 = s * s;
    let id = identity(s.nrows());
    let p0 = &id - s2.map(|z| z / c(4.0, 0.0));
    let pp = (&s2 + s.map(|z| 2.0 * z)).map(|z| z / c(8.0, 0.0));
    let pm = (&s2 - s.map(|z| 2.0 * z)).map(|z| z / c(8.0, 0.0));
    (p0, pp, pm)
}

/// Eigenprojectors of S_y onto eigenvalues {0, +2, −2}.
pub fn sy_projectors() -> (COp, COp, COp) {
    spin_projectors(&collective_spin(Axis::Y))
}

pub fn is_hermitian(m: &COp, tol: f64) -> bool {
    (m - m.adjoint()).norm() <= tol * (1.0 + m.norm())
}

/// Spectral norm via singular values.
pub fn spectral_norm(m: &COp) -> f64 {
    m.clone().svd(false, false).singular_values.max()
}

/// Spectral-norm deviation of U from unitarity, ‖U†U − 1‖₂.
pub fn unitarity_defect(u: &COp) -> f64 {
    spectral_norm(&(u.adjoint() * u - identity(u.nrows())))
}

/// State on the composite two-qubit ⊗ Fock-window space.
#[derive(Clone, Debug)]
pub struct StateVector {
    pub n_fock: usize,
    pub fock_offset: usize,
    pub amps: CVec,
}

impl StateVector {
    /// Basis state |qubit⟩|n⟩ with `n` an absolute Fock level inside the
    /// window.
    pub fn basis(qubit: usize, n: usize, n_fock: usize, fock_offset: usize) -> Result<Self> {
        if qubit > 3 {
            return Err(Error::InvalidParameter {
                name: "qubit",
                reason: format!("index {qubit} out of range 0..4"),
            });
        }
        if n < fock_offset || n >= fock_offset + n_fock {
            return Err(Error::InvalidParameter {
                name: "n",
                reason: format!(
                    "Fock level {n} outside window [{fock_offset}, {})",
                    fock_offset + n_fock
                ),
            });
        }
        let mut amps = DVector::zeros(4 * n_fock);
        amps[qubit * n_fock + (n - fock_offset)] = c(1.0, 0.0);
        Ok(Self {
            n_fock,
            fock_offset,
            amps,
        })
    }

    pub fn dim(&self) -> usize {
        4 * self.n_fock
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    /// Hard failure when the norm drifts more than 1e-6 from one.
    pub fn check_norm(&self) -> Result<()> {
        let drift = (self.norm() - 1.0).abs();
        if drift > 1e-6 {
            return Err(Error::Integration(format!(
                "state norm drifted by {drift:.3e} (> 1e-6)"
            )));
        }
        Ok(())
    }

    /// Reduced two-qubit density matrix, tracing out the motional mode.
    pub fn rho_qubit(&self) -> COp {
        let n = self.n_fock;
        let mut rho = DMatrix::zeros(4, 4);
        for q in 0..4 {
            for q2 in 0..4 {
                let mut acc = c(0.0, 0.0);
                for k in 0..n {
                    acc += self.amps[q * n + k] * self.amps[q2 * n + k].conj();
                }
                rho[(q, q2)] = acc;
            }
        }
        rho
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn qubit_ket(idx: usize) -> CVec {
        let mut v = DVector::zeros(4);
        v[idx] = c(1.0, 0.0);
        v
    }

    #[test]
    fn kron_of_identities_is_identity() {
        let id2 = identity(2);
        let out = kron(&id2, &id2).unwrap();
        assert_eq!(out, identity(4));
    }

    #[test]
    fn kron_sigma_y_pair_on_down_down() {
        // Oracle: direct 4x4 product.  With σ_y|↓⟩ = −i|↑⟩ the product state
        // picks up (−i)² = −1.
        let syy = kron(&pauli(Axis::Y), &pauli(Axis::Y)).unwrap();
        let out = &syy * qubit_ket(DOWN_DOWN);
        let expect = qubit_ket(UP_UP).map(|z| -z);
        assert_relative_eq!((out - expect).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn kron_rejects_oversized_products() {
        let a = identity(128);
        let b = identity(64);
        assert!(matches!(
            kron(&a, &b),
            Err(Error::DimensionTooLarge { .. })
        ));
    }

    #[test]
    fn collective_sz_is_diagonal_with_expected_spectrum() {
        let sz = collective_spin(Axis::Z);
        let expect = DMatrix::from_diagonal(&DVector::from_vec(vec![
            c(2., 0.),
            c(0., 0.),
            c(0., 0.),
            c(-2., 0.),
        ]));
        assert_relative_eq!((sz - expect).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn sy_squared_spectrum() {
        // Eigen-decomposition oracle for the {0, 0, 4, 4} spectrum.
        let sy = collective_spin(Axis::Y);
        let sy2 = &sy * &sy;
        let mut eigs: Vec<f64> = SymmetricEigen::new(sy2)
            .eigenvalues
            .iter()
            .copied()
            .collect();
        eigs.sort_by(f64::total_cmp);
        let expect = [0.0, 0.0, 4.0, 4.0];
        for (e, x) in eigs.iter().zip(expect) {
            assert_relative_eq!(*e, x, epsilon = 1e-12);
        }
    }

    #[test]
    fn collective_spins_are_hermitian_and_close_commutator() {
        let sx = collective_spin(Axis::X);
        let sy = collective_spin(Axis::Y);
        let sz = collective_spin(Axis::Z);
        for s in [&sx, &sy, &sz] {
            assert_eq!(s.adjoint(), s.clone_owned());
        }
        // [S_x, S_y] = 2i S_z (cross-ion terms commute).
        let comm = &sx * &sy - &sy * &sx;
        let expect = sz.map(|z| c(0., 2.) * z);
        assert_relative_eq!((comm - expect).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn displacement_zero_is_identity() {
        let d = displacement_matrix(c(0., 0.), 12).unwrap();
        assert_relative_eq!((d - identity(12)).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn displacement_vacuum_overlap_matches_coherent_state() {
        // ⟨0|D(β)|0⟩ = e^{−|β|²/2}
        let beta = c(0.3, 0.4); // |β| = 0.5
        let d = displacement_matrix(beta, 30).unwrap();
        let expect = (-beta.norm_sqr() / 2.0).exp();
        assert_relative_eq!(d[(0, 0)].re, expect, epsilon = 1e-10);
        assert_relative_eq!(d[(0, 0)].im, 0.0, epsilon = 1e-10);
    }

    #[test]
    fn displacement_n1_overlap_vanishes_at_unit_amplitude() {
        // ⟨1|D(β)|1⟩ = e^{−|β|²/2} L₁(|β|²) and L₁(1) = 0.
        let d = displacement_matrix(c(1.0, 0.0), 40).unwrap();
        assert_relative_eq!(d[(1, 1)].norm(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn displacement_guard_rejects_large_beta() {
        assert!(matches!(
            displacement_matrix(c(3.0, 0.0), 30),
            Err(Error::TruncationGuard { .. })
        ));
    }

    #[test]
    fn displacement_unitary_within_guard() {
        for (beta, n) in [(c(0.5, 0.0), 20), (c(0.0, 1.0), 30), (c(-0.7, 0.7), 50)] {
            let d = displacement_matrix(beta, n).unwrap();
            assert!(unitarity_defect(&d) < 1e-8, "beta = {beta}, n = {n}");
        }
    }

    #[test]
    fn sy_projectors_resolve_identity_and_ranks() {
        let (p0, pp, pm) = sy_projectors();
        let sum = &p0 + &pp + &pm;
        assert_relative_eq!((sum - identity(4)).norm(), 0.0, epsilon = 1e-12);
        // Ranks via trace of idempotent projectors.
        assert_relative_eq!(p0.trace().re, 2.0, epsilon = 1e-12);
        assert_relative_eq!(pp.trace().re, 1.0, epsilon = 1e-12);
        assert_relative_eq!(pm.trace().re, 1.0, epsilon = 1e-12);
        // Orthogonality and eigenprojector property P_λ S_y = λ P_λ.
        let sy = collective_spin(Axis::Y);
        assert_relative_eq!((&p0 * &pp).norm(), 0.0, epsilon = 1e-12);
        assert_relative_eq!((&pp * &pm).norm(), 0.0, epsilon = 1e-12);
        assert_relative_eq!((&p0 * &sy).norm(), 0.0, epsilon = 1e-12);
        assert_relative_eq!((&pp * &sy - pp.map(|z| 2.0 * z)).norm(), 0.0, epsilon = 1e-12);
        assert_relative_eq!(
            (&pm * &sy - pm.map(|z| -2.0 * z)).norm(),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn windowed_lowering_carries_absolute_amplitudes() {
        let a = lowering(3, 5); // levels 5, 6, 7
        assert_relative_eq!(a[(0, 1)].re, 6.0_f64.sqrt(), epsilon = 1e-14);
        assert_relative_eq!(a[(1, 2)].re, 7.0_f64.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn state_vector_basis_and_reduction() {
        let st = StateVector::basis(DOWN_DOWN, 7, 5, 5).unwrap();
        assert_eq!(st.dim(), 20);
        assert_relative_eq!(st.norm(), 1.0, epsilon = 1e-15);
        let rho = st.rho_qubit();
        assert_relative_eq!(rho[(DOWN_DOWN, DOWN_DOWN)].re, 1.0, epsilon = 1e-14);
        assert!(StateVector::basis(DOWN_DOWN, 2, 5, 5).is_err());
    }
}
