use proptest::prelude::*;

use qsync_core::config::OffsetWindow;
use qsync_core::estimation::{estimate, tally_agreement, AgreementCounts};
use qsync_core::oracle::{brute_joint_distribution, brute_pair_density, embed};
use qsync_core::protocol::BulletinRecord;
use qsync_core::quantum::{
    conditional_receiver_state, evolve_qubit, generalized_state, pair_correlation,
    pair_density_computational, to_measurement_basis, w_state, Outcome, QubitFrequency,
    SingleExcitationState, C64,
};
use qsync_core::sampler::{joint_distribution, MeasurementSchedule};
use qsync_core::FreqTag;

fn amp() -> impl Strategy<Value = C64> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| C64::new(re, im))
}

fn state(max_n: usize) -> impl Strategy<Value = SingleExcitationState> {
    (2..=max_n)
        .prop_flat_map(|n| (amp(), prop::collection::vec(amp(), n), any::<bool>()))
        .prop_filter_map("nonzero", |(v, a, vac)| {
            generalized_state(if vac { v } else { C64::new(0.0, 0.0) }, &a).ok()
        })
        .prop_filter("amplitudes not vanishing", |s| s.norm_sqr() > 0.5)
}

fn freq() -> impl Strategy<Value = QubitFrequency> {
    (0.2f64..4.0).prop_map(|w| QubitFrequency::new(w).unwrap())
}

fn max_dev<'a>(a: impl Iterator<Item = &'a C64>, b: impl Iterator<Item = &'a C64>) -> f64 {
    a.zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn pair_densities_are_physical(s in state(9), seed in any::<u64>()) {
        let n = s.n();
        let i = (seed as usize) % n;
        let j = (i + 1 + (seed as usize / n) % (n - 1)) % n;
        let rho = pair_density_computational(&s, i, j).unwrap();
        let m = rho.matrix();
        prop_assert!(max_dev(m.iter(), m.adjoint().iter()) < 1e-12);
        prop_assert!((m.trace().re - 1.0).abs() < 1e-12);
        prop_assert!(rho.eigenvalues()[0] > -1e-10);
    }

    #[test]
    fn measurement_basis_preserves_spectrum(s in state(8)) {
        let rho = pair_density_computational(&s, 0, 1).unwrap();
        let meas = to_measurement_basis(&rho).unwrap();
        for (a, b) in rho.eigenvalues().iter().zip(meas.eigenvalues()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn conditional_mixture_reconstructs_receiver(s in state(7)) {
        let meas = to_measurement_basis(&pair_density_computational(&s, 0, s.n() - 1).unwrap()).unwrap();
        let receiver = meas.second_qubit();
        let mut mix = nalgebra::Matrix2::<C64>::zeros();
        let mut total = 0.0;
        for o in [Outcome::Plus, Outcome::Minus] {
            if let Ok((p, q)) = conditional_receiver_state(&meas, o) {
                mix += q.matrix() * C64::new(p, 0.0);
                total += p;
            }
        }
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!(max_dev(mix.iter(), receiver.matrix().iter()) < 1e-12);
    }

    #[test]
    fn evolution_group_property(s in state(6), w in freq(), t1 in -5.0f64..5.0, t2 in -5.0f64..5.0) {
        let meas = to_measurement_basis(&pair_density_computational(&s, 0, 1).unwrap()).unwrap();
        let q = meas.second_qubit();
        let once = evolve_qubit(&q, t1 + t2, w);
        let twice = evolve_qubit(&evolve_qubit(&q, t1, w), t2, w);
        prop_assert!(max_dev(once.matrix().iter(), twice.matrix().iter()) < 1e-12);
        let (e0, e1) = (q.eigenvalues(), once.eigenvalues());
        prop_assert!((e0[0] - e1[0]).abs() < 1e-12 && (e0[1] - e1[1]).abs() < 1e-12);
        prop_assert!((once.matrix().trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn w_state_marginals_are_half(n in 2usize..12, d in -10.0f64..10.0, w in freq()) {
        let pc = pair_correlation(&w_state(n).unwrap(), 0, n - 1, d, w).unwrap();
        prop_assert!((pc.first_marginal(Outcome::Plus) - 0.5).abs() < 1e-12);
        prop_assert!((pc.second_marginal(Outcome::Plus) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn sector_enumeration_matches_dense(s in state(10), w in freq(), times in prop::collection::vec(-3.0f64..3.0, 10)) {
        let n = s.n();
        let sched = MeasurementSchedule::from_times(&times[..n]).unwrap();
        let fast = joint_distribution(&s, &sched, w).unwrap();
        let brute = brute_joint_distribution(&embed(&s).unwrap(), &sched, w).unwrap();
        prop_assert!(fast.max_abs_diff(&brute) < 1e-10);
        prop_assert!((fast.total() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn analytic_pair_density_matches_partial_trace(s in state(8)) {
        let n = s.n();
        let a = pair_density_computational(&s, n - 1, 0).unwrap();
        let b = brute_pair_density(&embed(&s).unwrap(), n - 1, 0).unwrap();
        prop_assert!(max_dev(a.matrix().iter(), b.matrix().iter()) < 1e-12);
    }

    #[test]
    fn global_time_shift_invariance(n in 2usize..9, w in freq(), shift in -20.0f64..20.0,
                                    amps in prop::collection::vec(amp(), 9),
                                    times in prop::collection::vec(-3.0f64..3.0, 9)) {
        let Ok(s) = generalized_state(C64::new(0.0, 0.0), &amps[..n]) else { return Ok(()) };
        let sched = MeasurementSchedule::from_times(&times[..n]).unwrap();
        let a = joint_distribution(&s, &sched, w).unwrap();
        let b = joint_distribution(&s, &sched.shifted(shift).unwrap(), w).unwrap();
        prop_assert!(a.max_abs_diff(&b) < 1e-12);
    }

    #[test]
    fn exact_probabilities_invert(n in 2usize..10, wd in 0.05f64..3.0, w in freq()) {
        let p = 0.5 + wd.cos() / n as f64;
        let total = 1u64 << 50;
        let agree = (p * total as f64).round() as u64;
        let counts = AgreementCounts::new(agree, total, FreqTag::indexed(0));
        let r = estimate(&counts, n, w, OffsetWindow::one_period(w)).unwrap();
        let delta = wd / w.get();
        prop_assert!((r.principal_delta - delta).abs() < 1e-9, "{} vs {}", r.principal_delta, delta);
        prop_assert!(r.delta_candidates.iter().any(|c| (c - delta).abs() < 1e-9));
    }

    #[test]
    fn tally_ignores_set_labels(outcomes in prop::collection::vec((any::<bool>(), any::<bool>()), 1..200),
                                perm_seed in any::<u64>()) {
        let o = |b: bool| if b { Outcome::Plus } else { Outcome::Minus };
        let mk = |labels: &[u64]| -> (Vec<BulletinRecord>, Vec<BulletinRecord>) {
            outcomes.iter().zip(labels).map(|(&(a, b), &set)| (
                BulletinRecord { set, party: 0, outcome: o(a), freq: FreqTag::indexed(0) },
                BulletinRecord { set, party: 1, outcome: o(b), freq: FreqTag::indexed(0) },
            )).unzip()
        };
        let ids: Vec<u64> = (0..outcomes.len() as u64).collect();
        let mut shuffled = ids.clone();
        let len = shuffled.len();
        for k in (1..len).rev() {
            let j = (perm_seed.wrapping_mul(6364136223846793005).wrapping_add(k as u64) >> 7) as usize % (k + 1);
            shuffled.swap(k, j);
        }
        let (p1, l1) = mk(&ids);
        let (p2, l2) = mk(&shuffled);
        prop_assert_eq!(tally_agreement(&p1, &l1).unwrap(), tally_agreement(&p2, &l2).unwrap());
    }
}
