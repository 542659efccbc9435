use amred_core::channel::{
    iterate, pure_state_cross_check, target_mass, DensityState, ReloadChannel,
};
use amred_core::oracle::{closed_form_single_call, tv_distance};
use amred_core::rotation::validate_operator;
use amred_core::search::{filter_exclude, rotation_pass, single_call_search, SearchConfig};
use amred_core::{
    AngleSchedule, ArraySpec, PiMultiple, PureState, Register, RegisterLayout, RotationOperator,
    SignMatrix, SignVariant,
};
use proptest::prelude::*;

/// Distinct `n`-bit values for `2^m` counter states, plus a target.
fn distinct_array() -> impl Strategy<Value = ArraySpec> {
    (1u32..=5, 0u32..=2)
        .prop_flat_map(|(m, extra)| {
            let n = m + extra;
            let len = 1usize << m;
            (
                Just(n),
                proptest::sample::subsequence((0..1u64 << n).collect::<Vec<_>>(), len)
                    .prop_shuffle(),
                0..1u64 << n,
            )
        })
        .prop_map(|(n, values, target)| ArraySpec::new(values, target, n).unwrap())
}

fn any_array() -> impl Strategy<Value = ArraySpec> {
    (1u32..=3, 1u32..=4).prop_flat_map(|(m, n)| {
        (
            proptest::collection::vec(0..1u64 << n, 1usize << m),
            0..1u64 << n,
        )
            .prop_map(move |(values, target)| ArraySpec::new(values, target, n).unwrap())
    })
}

fn schedule_for(n: u32, pick: u8) -> AngleSchedule {
    match pick % 3 {
        0 => AngleSchedule::default_for(n),
        1 => AngleSchedule::highest_bit_pi(n),
        _ => AngleSchedule::exact_match(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn statevector_agrees_with_closed_form(array in distinct_array(), pick in 0u8..3) {
        let schedule = schedule_for(array.n_bits(), pick);
        let cfg = SearchConfig::nearest(array.clone()).with_schedule(schedule.clone());
        let p = single_call_search(&cfg).unwrap().distribution;
        let q = closed_form_single_call(&array, &schedule).unwrap();
        prop_assert!(tv_distance(&p, &q) < 1e-12);
        let cap = 2.0 / array.len() as f64 + 1e-12;
        prop_assert!(p.iter().all(|&x| x <= cap));
    }

    #[test]
    fn rotation_pass_preserves_norm(array in any_array(), pick in 0u8..3) {
        let signs = SignMatrix::build(array.counter_bits(), SignVariant::Doubling).unwrap();
        let mut state = PureState::load(&array, RegisterLayout::for_array(&array, 0).unwrap()).unwrap();
        rotation_pass(&mut state, array.target(), &schedule_for(array.n_bits(), pick), &signs).unwrap();
        prop_assert!((state.norm() - 1.0).abs() < 1e-12);
        let total: f64 = state.marginal(Register::Counter).iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn filter_zeroes_a_unique_value(array in distinct_array(), pick in any::<prop::sample::Index>()) {
        let k = pick.index(array.len());
        let value = array.elements()[k];
        let out = filter_exclude(&array, value, SignVariant::Doubling).unwrap();
        prop_assert!(out.distribution[k].abs() < 1e-12);
        let rest = 1.0 / (array.len() - 1) as f64;
        for (j, p) in out.distribution.iter().enumerate() {
            if j != k {
                prop_assert!((p - rest).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn channel_keeps_density_matrices_valid(array in any_array(), picks in proptest::collection::vec(0u8..3, 1..5)) {
        let signs = SignMatrix::build(array.counter_bits(), SignVariant::Doubling).unwrap();
        let mut rho = DensityState::maximally_mixed(array.len());
        for pick in picks {
            let ch = ReloadChannel::build(&array, &schedule_for(array.n_bits(), pick), &signs).unwrap();
            rho = ch.apply(&rho).unwrap();
            prop_assert!(rho.check().is_ok());
        }
    }

    #[test]
    fn unique_match_mass_never_decreases(array in any_array()) {
        let target = array.elements()[0];
        let mut values = array.elements().to_vec();
        for v in values.iter_mut().skip(1) {
            if *v == target {
                *v ^= 1;
            }
        }
        let a = ArraySpec::new(values, target, array.n_bits()).unwrap();
        let signs = SignMatrix::build(a.counter_bits(), SignVariant::Doubling).unwrap();
        let diag = iterate(&a, &[AngleSchedule::exact_match()], 12, &signs).unwrap();
        let mut last = 1.0 / a.len() as f64;
        for p in &diag {
            let now = target_mass(&a, p);
            prop_assert!(now >= last - 1e-12);
            last = now;
        }
    }

    #[test]
    fn first_iteration_is_the_single_call(array in distinct_array(), pick in 0u8..2) {
        let schedule = schedule_for(array.n_bits(), pick);
        let signs = SignMatrix::build(array.counter_bits(), SignVariant::Doubling).unwrap();
        let first = &iterate(&array, std::slice::from_ref(&schedule), 1, &signs).unwrap()[0];
        let single = single_call_search(&SearchConfig::nearest(array.clone()).with_schedule(schedule.clone())).unwrap().distribution;
        for (a, b) in first.iter().zip(&single) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        let cross = pure_state_cross_check(&array, &[schedule], 2, &signs).unwrap();
        prop_assert!(cross.max_discrepancy < 1e-12);
    }
}

#[test]
fn every_supported_operator_family_is_consistent() {
    for m in 1..=6 {
        let mut variants = vec![SignVariant::Doubling];
        variants.extend(SignVariant::reference_for(m));
        for v in variants {
            let s = SignMatrix::build(m, v).unwrap();
            for phi in [0.0, 0.3, 1.0, std::f64::consts::PI] {
                let d = validate_operator(&RotationOperator::new(&s, phi).unwrap(), &s);
                assert!(d.within(1e-12), "m={m} {v}: {d:?}");
            }
        }
    }
}

#[test]
fn schedule_totals_above_pi_are_rejected() {
    assert!(AngleSchedule::per_bit("over", vec![PiMultiple(0.75), PiMultiple(0.5)]).is_err());
    assert!(AngleSchedule::per_bit("neg", vec![PiMultiple(-0.1)]).is_err());
    let s = SignMatrix::build(2, SignVariant::Doubling).unwrap();
    assert!(RotationOperator::new(&s, std::f64::consts::PI + 1e-9).is_err());
}
