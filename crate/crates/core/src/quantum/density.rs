use nalgebra::{Matrix2, Matrix4};
use serde::{Deserialize, Serialize};

use super::{
    phase, Outcome, QuantumError, QubitFrequency, SingleExcitationState, ALGEBRA_TOL, C64,
    POSITIVITY_TOL,
};

/// Which single-qubit basis the matrix rows and columns are labeled in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    /// `{|0⟩, |1⟩}` per qubit, the energy eigenbasis.
    Computational,
    /// `{|+⟩, |−⟩}` per qubit.
    Measurement,
}

/// Two-qubit density matrix. Rows are ordered `|00⟩, |01⟩, |10⟩, |11⟩`
/// (or `|++⟩, |+−⟩, |−+⟩, |−−⟩`), the first label belonging to the first
/// qubit of the pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairDensity {
    m: Matrix4<C64>,
    basis: Basis,
}

/// Single-qubit density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitDensity {
    m: Matrix2<C64>,
    basis: Basis,
}

fn hadamard() -> Matrix2<C64> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    Matrix2::new(
        C64::new(h, 0.0),
        C64::new(h, 0.0),
        C64::new(h, 0.0),
        C64::new(-h, 0.0),
    )
}

fn hadamard2() -> Matrix4<C64> {
    let h = hadamard();
    h.kronecker(&h)
}

fn check_physical<const D: usize>(m: &nalgebra::SMatrix<C64, D, D>) -> Result<(), QuantumError>
where
    nalgebra::Const<D>: nalgebra::DimMin<nalgebra::Const<D>, Output = nalgebra::Const<D>>,
    nalgebra::Const<D>: nalgebra::DimSub<nalgebra::U1>,
    nalgebra::DefaultAllocator: nalgebra::allocator::Allocator<
        <nalgebra::Const<D> as nalgebra::DimSub<nalgebra::U1>>::Output,
    >,
{
    if m.iter().any(|z| !z.is_finite()) {
        return Err(QuantumError::NonFinite);
    }
    let herm_dev = (m - m.adjoint())
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if herm_dev > ALGEBRA_TOL {
        return Err(QuantumError::NotHermitian(herm_dev));
    }
    let tr = m.trace();
    if (tr.re - 1.0).abs() > ALGEBRA_TOL || tr.im.abs() > ALGEBRA_TOL {
        return Err(QuantumError::NotUnitTrace(tr.re));
    }
    let min_eig = hermitian_eigenvalues(m)
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if min_eig < -POSITIVITY_TOL {
        return Err(QuantumError::NotPositive(min_eig));
    }
    Ok(())
}

/// Real eigenvalues of the Hermitian part of `m`, ascending.
pub(crate) fn hermitian_eigenvalues<const D: usize>(m: &nalgebra::SMatrix<C64, D, D>) -> Vec<f64>
where
    nalgebra::Const<D>: nalgebra::DimSub<nalgebra::U1>,
    nalgebra::DefaultAllocator: nalgebra::allocator::Allocator<
        <nalgebra::Const<D> as nalgebra::DimSub<nalgebra::U1>>::Output,
    >,
{
    let sym = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let mut ev: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

impl PairDensity {
    /// Validates hermiticity, unit trace and positivity.
    pub fn new(m: Matrix4<C64>, basis: Basis) -> Result<Self, QuantumError> {
        check_physical(&m)?;
        Ok(Self { m, basis })
    }

    pub fn matrix(&self) -> &Matrix4<C64> {
        &self.m
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.m)
    }

    /// Reduced state of the second qubit (traces out the first).
    pub fn second_qubit(&self) -> QubitDensity {
        let m = &self.m;
        let r = Matrix2::new(
            m[(0, 0)] + m[(2, 2)],
            m[(0, 1)] + m[(2, 3)],
            m[(1, 0)] + m[(3, 2)],
            m[(1, 1)] + m[(3, 3)],
        );
        QubitDensity {
            m: r,
            basis: self.basis,
        }
    }

    /// Reduced state of the first qubit (traces out the second).
    pub fn first_qubit(&self) -> QubitDensity {
        let m = &self.m;
        let r = Matrix2::new(
            m[(0, 0)] + m[(1, 1)],
            m[(0, 2)] + m[(1, 3)],
            m[(2, 0)] + m[(3, 1)],
            m[(2, 2)] + m[(3, 3)],
        );
        QubitDensity {
            m: r,
            basis: self.basis,
        }
    }
}

impl QubitDensity {
    pub fn new(m: Matrix2<C64>, basis: Basis) -> Result<Self, QuantumError> {
        check_physical(&m)?;
        Ok(Self { m, basis })
    }

    pub fn matrix(&self) -> &Matrix2<C64> {
        &self.m
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.m)
    }

    /// Diagonal populations `(ρ₀₀, ρ₁₁)`.
    pub fn populations(&self) -> (f64, f64) {
        (self.m[(0, 0)].re, self.m[(1, 1)].re)
    }
}

/// Reduced density matrix of qubits `(i, j)` in the computational basis.
///
/// Tracing the other qubits out of `v|0…0⟩ + Σ a_k|e_k⟩` leaves the pure
/// part `v|00⟩ + a_j|01⟩ + a_i|10⟩` plus the weight of every other
/// excitation on `|00⟩⟨00|`.
pub fn pair_density_computational(
    state: &SingleExcitationState,
    i: usize,
    j: usize,
) -> Result<PairDensity, QuantumError> {
    state.check_index(i)?;
    state.check_index(j)?;
    if i == j {
        return Err(QuantumError::SameQubit(i));
    }
    let (ai, aj) = (state.exc_amp(i), state.exc_amp(j));
    let zero = C64::new(0.0, 0.0);
    let phi = nalgebra::Vector4::new(state.vacuum_amp(), aj, ai, zero);
    let rest: f64 = state
        .exc_amps()
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != i && k != j)
        .map(|(_, a)| a.norm_sqr())
        .sum();
    let mut m = phi * phi.adjoint();
    m[(0, 0)] += rest;
    PairDensity::new(m, Basis::Computational)
}

/// Conjugates by `H⊗H`, relabeling rows as `|++⟩, |+−⟩, |−+⟩, |−−⟩`.
pub fn to_measurement_basis(rho: &PairDensity) -> Result<PairDensity, QuantumError> {
    if rho.basis != Basis::Computational {
        return Err(QuantumError::WrongBasis {
            expected: Basis::Computational,
            found: rho.basis,
        });
    }
    let hh = hadamard2();
    Ok(PairDensity {
        m: hh * rho.m * hh,
        basis: Basis::Measurement,
    })
}

/// Inverse of [`to_measurement_basis`].
pub fn from_measurement_basis(rho: &PairDensity) -> Result<PairDensity, QuantumError> {
    if rho.basis != Basis::Measurement {
        return Err(QuantumError::WrongBasis {
            expected: Basis::Measurement,
            found: rho.basis,
        });
    }
    let hh = hadamard2();
    Ok(PairDensity {
        m: hh * rho.m * hh,
        basis: Basis::Computational,
    })
}

/// Probability that the first qubit of the pair yields `publisher_outcome`,
/// and the normalized state of the second qubit given that it did.
pub fn conditional_receiver_state(
    rho: &PairDensity,
    publisher_outcome: Outcome,
) -> Result<(f64, QubitDensity), QuantumError> {
    if rho.basis != Basis::Measurement {
        return Err(QuantumError::WrongBasis {
            expected: Basis::Measurement,
            found: rho.basis,
        });
    }
    let off = match publisher_outcome {
        Outcome::Plus => 0,
        Outcome::Minus => 2,
    };
    let block: Matrix2<C64> = rho.m.fixed_view::<2, 2>(off, off).into_owned();
    let prob = block.trace().re;
    if prob <= POSITIVITY_TOL {
        return Err(QuantumError::ZeroProbability);
    }
    let m = block / C64::new(prob, 0.0);
    Ok((
        prob,
        QubitDensity {
            m,
            basis: Basis::Measurement,
        },
    ))
}

/// Free evolution of one qubit for standard time `t`.
pub fn evolve_qubit(rho: &QubitDensity, t: f64, omega: QubitFrequency) -> QubitDensity {
    evolve_with(rho, phase(omega.get() * t))
}

/// [`evolve_qubit`] with an explicit phase sign. Only useful for checking
/// that the validation suite notices a flipped convention.
#[doc(hidden)]
pub fn evolve_qubit_signed(
    rho: &QubitDensity,
    t: f64,
    omega: QubitFrequency,
    sign: f64,
) -> QubitDensity {
    evolve_with(rho, C64::from_polar(1.0, sign * omega.get() * t))
}

fn evolve_with(rho: &QubitDensity, excited_phase: C64) -> QubitDensity {
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let u_energy = Matrix2::new(one, zero, zero, excited_phase);
    let u = match rho.basis {
        Basis::Computational => u_energy,
        Basis::Measurement => {
            let h = hadamard();
            h * u_energy * h
        }
    };
    QubitDensity {
        m: u * rho.m * u.adjoint(),
        basis: rho.basis,
    }
}

#[cfg(test)]
mod tests {
    use super::super::w_state;
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn max_dev4(a: &Matrix4<C64>, b: &Matrix4<C64>) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn max_dev2(a: &Matrix2<C64>, b: &Matrix2<C64>) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn real4(scale: f64, rows: [[f64; 4]; 4]) -> Matrix4<C64> {
        Matrix4::from_fn(|r, k| c(rows[r][k] * scale))
    }

    #[test]
    fn pair_density_w4() {
        let rho = pair_density_computational(&w_state(4).unwrap(), 1, 3).unwrap();
        let want = real4(
            0.25,
            [
                [2., 0., 0., 0.],
                [0., 1., 1., 0.],
                [0., 1., 1., 0.],
                [0., 0., 0., 0.],
            ],
        );
        assert!(max_dev4(rho.matrix(), &want) < 1e-12);
    }

    #[test]
    fn pair_density_w2() {
        let rho = pair_density_computational(&w_state(2).unwrap(), 0, 1).unwrap();
        let want = real4(
            0.5,
            [
                [0., 0., 0., 0.],
                [0., 1., 1., 0.],
                [0., 1., 1., 0.],
                [0., 0., 0., 0.],
            ],
        );
        assert!(max_dev4(rho.matrix(), &want) < 1e-12);
    }

    #[test]
    fn pair_density_vacuum_product() {
        let z = c(0.0);
        let s = super::super::generalized_state(c(1.0), &[z, z]).unwrap();
        let rho = pair_density_computational(&s, 0, 1).unwrap();
        let mut want = Matrix4::zeros();
        want[(0, 0)] = c(1.0);
        assert!(max_dev4(rho.matrix(), &want) < 1e-15);
    }

    #[test]
    fn pair_density_rejects_bad_indices() {
        let w = w_state(3).unwrap();
        assert_eq!(
            pair_density_computational(&w, 0, 3),
            Err(QuantumError::QubitIndex { index: 3, n: 3 })
        );
        assert_eq!(
            pair_density_computational(&w, 2, 2),
            Err(QuantumError::SameQubit(2))
        );
    }

    #[test]
    fn measurement_basis_w4_and_w2() {
        let rho = pair_density_computational(&w_state(4).unwrap(), 0, 1).unwrap();
        let m = to_measurement_basis(&rho).unwrap();
        let want = real4(
            1.0 / 16.0,
            [
                [6., 2., 2., -2.],
                [2., 2., 2., 2.],
                [2., 2., 2., 2.],
                [-2., 2., 2., 6.],
            ],
        );
        assert!(max_dev4(m.matrix(), &want) < 1e-12);

        let rho = pair_density_computational(&w_state(2).unwrap(), 0, 1).unwrap();
        let m = to_measurement_basis(&rho).unwrap();
        let want = real4(
            1.0 / 8.0,
            [
                [4., 0., 0., -4.],
                [0., 0., 0., 0.],
                [0., 0., 0., 0.],
                [-4., 0., 0., 4.],
            ],
        );
        assert!(max_dev4(m.matrix(), &want) < 1e-12);
    }

    #[test]
    fn basis_round_trip_and_tag_check() {
        let rho = pair_density_computational(&w_state(5).unwrap(), 2, 4).unwrap();
        let m = to_measurement_basis(&rho).unwrap();
        assert!(to_measurement_basis(&m).is_err());
        let back = from_measurement_basis(&m).unwrap();
        assert!(max_dev4(back.matrix(), rho.matrix()) < 1e-12);
        assert!(from_measurement_basis(&rho).is_err());
    }

    #[test]
    fn conditional_w4_both_outcomes() {
        let rho = pair_density_computational(&w_state(4).unwrap(), 0, 1).unwrap();
        let m = to_measurement_basis(&rho).unwrap();
        let (p, q) = conditional_receiver_state(&m, Outcome::Plus).unwrap();
        assert!((p - 0.5).abs() < 1e-12);
        let want = Matrix2::new(c(6.0), c(2.0), c(2.0), c(2.0)) / c(8.0);
        assert!(max_dev2(q.matrix(), &want) < 1e-12);
        let (p, q) = conditional_receiver_state(&m, Outcome::Minus).unwrap();
        assert!((p - 0.5).abs() < 1e-12);
        let want = Matrix2::new(c(2.0), c(2.0), c(2.0), c(6.0)) / c(8.0);
        assert!(max_dev2(q.matrix(), &want) < 1e-12);
    }

    #[test]
    fn conditional_w2_is_plus() {
        let rho = pair_density_computational(&w_state(2).unwrap(), 0, 1).unwrap();
        let m = to_measurement_basis(&rho).unwrap();
        let (p, q) = conditional_receiver_state(&m, Outcome::Plus).unwrap();
        assert!((p - 0.5).abs() < 1e-12);
        let want = Matrix2::new(c(1.0), c(0.0), c(0.0), c(0.0));
        assert!(max_dev2(q.matrix(), &want) < 1e-12);
    }

    #[test]
    fn conditional_zero_probability() {
        // |++⟩⟨++| never yields − on the first qubit.
        let mut m = Matrix4::zeros();
        m[(0, 0)] = c(1.0);
        let rho = PairDensity::new(m, Basis::Measurement).unwrap();
        assert_eq!(
            conditional_receiver_state(&rho, Outcome::Minus),
            Err(QuantumError::ZeroProbability)
        );
        let comp = PairDensity::new(m, Basis::Computational).unwrap();
        assert!(matches!(
            conditional_receiver_state(&comp, Outcome::Plus),
            Err(QuantumError::WrongBasis { .. })
        ));
    }

    #[test]
    fn evolve_identity_at_zero_and_w2_at_pi() {
        let omega = QubitFrequency::new(1.0).unwrap();
        let rho = pair_density_computational(&w_state(4).unwrap(), 0, 1).unwrap();
        let (_, q) =
            conditional_receiver_state(&to_measurement_basis(&rho).unwrap(), Outcome::Plus)
                .unwrap();
        assert!(max_dev2(evolve_qubit(&q, 0.0, omega).matrix(), q.matrix()) < 1e-15);

        let rho = pair_density_computational(&w_state(2).unwrap(), 0, 1).unwrap();
        let (_, q) =
            conditional_receiver_state(&to_measurement_basis(&rho).unwrap(), Outcome::Plus)
                .unwrap();
        let out = evolve_qubit(&q, std::f64::consts::PI, omega);
        let want = Matrix2::new(c(0.0), c(0.0), c(0.0), c(1.0));
        assert!(max_dev2(out.matrix(), &want) < 1e-12);
    }

    #[test]
    fn evolve_matches_closed_form_off_diagonal_sign() {
        let n = 5.0;
        let omega = QubitFrequency::new(2.0).unwrap();
        let rho = pair_density_computational(&w_state(5).unwrap(), 0, 3).unwrap();
        let (_, q) =
            conditional_receiver_state(&to_measurement_basis(&rho).unwrap(), Outcome::Plus)
                .unwrap();
        let t: f64 = 0.37;
        let (s, co) = (2.0 * t).sin_cos();
        let out = evolve_qubit(&q, t, omega);
        let want = Matrix2::new(
            C64::new(n + 2.0 * co, 0.0),
            C64::new(n - 2.0, 2.0 * s),
            C64::new(n - 2.0, -2.0 * s),
            C64::new(n - 2.0 * co, 0.0),
        ) / c(2.0 * n);
        assert!(max_dev2(out.matrix(), &want) < 1e-12);
        let flipped = evolve_qubit_signed(&q, t, omega, -1.0);
        assert!(max_dev2(flipped.matrix(), &want) > 0.1);
    }

    #[test]
    fn rejects_unphysical() {
        let mut m = Matrix2::zeros();
        m[(0, 0)] = c(1.5);
        m[(1, 1)] = c(-0.5);
        assert!(matches!(
            QubitDensity::new(m, Basis::Computational),
            Err(QuantumError::NotPositive(_))
        ));
        m[(1, 1)] = c(0.0);
        assert!(matches!(
            QubitDensity::new(m, Basis::Computational),
            Err(QuantumError::NotUnitTrace(_))
        ));
        let mut h = Matrix2::zeros();
        h[(0, 0)] = c(1.0);
        h[(0, 1)] = c(0.1);
        assert!(matches!(
            QubitDensity::new(h, Basis::Computational),
            Err(QuantumError::NotHermitian(_))
        ));
    }
}
