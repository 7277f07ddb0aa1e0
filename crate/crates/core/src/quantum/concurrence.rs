use nalgebra::{Matrix4, Vector4};

use super::{PairDensity, QuantumError, C64, POSITIVITY_TOL};

// Eigenvalues of ρ below this are rounding noise; their square roots would
// otherwise leak ~1e-8 into the singular values.
const EIGEN_NOISE: f64 = 1e-14;

/// Two-qubit mixed-state concurrence.
///
/// Writes `ρ = X·X†` from the eigendecomposition and takes the singular
/// values `λ₁ ≥ … ≥ λ₄` of the complex-symmetric `Xᵀ(σy⊗σy)X`; these are the
/// square roots of the eigenvalues of `ρ·ρ̃`, obtained without squaring.
/// Concurrence is invariant under local unitaries, so either basis tag is
/// accepted.
pub fn concurrence(rho: &PairDensity) -> Result<f64, QuantumError> {
    let eig = rho.matrix().symmetric_eigen();
    let min = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if min < -POSITIVITY_TOL {
        return Err(QuantumError::NotPositive(min));
    }
    let roots: Vector4<C64> = eig.eigenvalues.map(|l| {
        if l > EIGEN_NOISE {
            C64::new(l.sqrt(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let x = eig.eigenvectors * Matrix4::from_diagonal(&roots);
    let a = x.transpose() * spin_flip() * x;
    let mut sv: Vec<f64> = a.singular_values().iter().copied().collect();
    sv.sort_by(|p, q| q.total_cmp(p));
    Ok((sv[0] - sv[1] - sv[2] - sv[3]).max(0.0))
}

/// Closed form `2·max(0, |ρ₂₃| − √(ρ₁₁ρ₄₄), |ρ₁₄| − √(ρ₂₂ρ₃₃))` for
/// X-shaped matrices in the computational basis. Returns `None` when the
/// matrix has weight outside the X pattern.
pub fn x_state_concurrence(rho: &PairDensity) -> Option<f64> {
    let m = rho.matrix();
    let on_x = |r: usize, c: usize| r == c || r + c == 3;
    let off_x = (0..4)
        .flat_map(|r| (0..4).map(move |c| (r, c)))
        .filter(|&(r, c)| !on_x(r, c))
        .map(|(r, c)| m[(r, c)].norm())
        .fold(0.0, f64::max);
    if off_x > 1e-12 {
        return None;
    }
    let d = |k: usize| m[(k, k)].re.max(0.0);
    let a = m[(1, 2)].norm() - (d(0) * d(3)).sqrt();
    let b = m[(0, 3)].norm() - (d(1) * d(2)).sqrt();
    Some(2.0 * a.max(b).max(0.0))
}

fn spin_flip() -> Matrix4<C64> {
    let mut y = Matrix4::zeros();
    y[(0, 3)] = C64::new(-1.0, 0.0);
    y[(1, 2)] = C64::new(1.0, 0.0);
    y[(2, 1)] = C64::new(1.0, 0.0);
    y[(3, 0)] = C64::new(-1.0, 0.0);
    y
}
