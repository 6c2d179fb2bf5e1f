//! Closed-form SACS expectations against the explicit Fock-space state,
//! over random points.

use num_complex::Complex64;
use proptest::prelude::*;
use sacs_engine::fock::{build_sacs_vector, expect, state_cutoff, Observable, TruncatedSpace};
use sacs_engine::sacs::{self, AtomOp, FieldOp, SacsPoint};
use sacs_engine::validation::{oracle_deviations, Case};
use sacs_engine::{AtomicConfiguration, CoherentPoint, ParityBranch};

fn complex(max: f64) -> impl Strategy<Value = Complex64> {
    (0.0..max, 0.0..std::f64::consts::TAU).prop_map(|(r, p)| Complex64::from_polar(r, p))
}

fn case() -> impl Strategy<Value = Case> {
    (
        complex(3.0),
        complex(2.0),
        complex(2.0),
        prop::sample::select(ParityBranch::BOTH.to_vec()),
        prop::sample::select(AtomicConfiguration::ALL.to_vec()),
        prop::sample::select(vec![1u32, 2, 4, 6]),
    )
        .prop_map(|(a, g2, g3, branch, config, n_atoms)| Case {
            point: CoherentPoint::new(a, g2, g3),
            branch,
            config,
            n_atoms,
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn every_closed_form_matches_the_state_vector(c in case()) {
        for d in oracle_deviations(&c).unwrap() {
            prop_assert!(d.relative() <= 1e-10, "{} closed {} oracle {}", d.quantity, d.closed, d.oracle);
        }
    }

    #[test]
    fn four_term_assembly_agrees_with_closed_forms(c in case()) {
        let sp = c.sacs();
        let one = sacs::expect_one_body(&sp).unwrap();
        let photons = sacs::assembled_expectation(&sp, FieldOp::Number, AtomOp::Identity).unwrap();
        prop_assert!((photons.re - one.photons).abs() <= 1e-10 * (1.0 + one.photons));
        let (mean, mean_sq) = sacs::assembled_m_moments(&sp).unwrap();
        let m = sacs::expect_m_moments(&sp).unwrap();
        prop_assert!((mean - m.mean).abs() <= 1e-10 * (1.0 + m.mean));
        prop_assert!((mean_sq - m.mean_sq).abs() <= 1e-10 * (1.0 + m.mean_sq));
    }

    #[test]
    fn photon_distribution_matches_state_vector(c in case()) {
        let space = TruncatedSpace::new(c.n_atoms, state_cutoff(c.point.alpha.norm_sqr()));
        let state = build_sacs_vector(&c.point, c.branch, c.config, &space).unwrap();
        for (nu, p) in state.photon_distribution().into_iter().enumerate() {
            let closed = sacs::photon_probability(&c.sacs(), nu as u64).unwrap();
            prop_assert!((closed - p).abs() <= 1e-12, "ν = {nu}: {closed} vs {p}");
        }
    }

    #[test]
    fn wrong_parity_components_vanish(c in case()) {
        let space = TruncatedSpace::new(c.n_atoms, state_cutoff(c.point.alpha.norm_sqr()));
        let state = build_sacs_vector(&c.point, c.branch, c.config, &space).unwrap();
        let parity = expect(&state, &Observable::Parity(c.config)).unwrap();
        prop_assert!((parity.re - c.branch.sign()).abs() <= 1e-12);
    }
}

#[test]
fn scaled_kernel_survives_large_amplitudes() {
    // e^{2|α|²} overflows f64 here; the scaled mantissa must stay finite.
    let point = CoherentPoint::real(30.0, 1.5, 0.7);
    for branch in ParityBranch::BOTH {
        let sp = SacsPoint::new(point, branch, AtomicConfiguration::V, 6);
        let k = sacs::norm_sq(&sp).unwrap();
        assert!(k.mantissa.is_finite() && k.mantissa > 0.0);
        let one = sacs::expect_one_body(&sp).unwrap();
        assert!((one.photons - 900.0).abs() < 1e-8);
    }
}
