mod common;

use common::*;
use ctmc_randomness::bits::Bits;
use ctmc_randomness::ctmc::{mu_traj, refines, spec_compare, spec_join, SpecRelation, TrajectorySpec};
use ctmc_randomness::rational::{pow2, ratio};
use ctmc_randomness::sojourn::{
    approximates, encode_time, mu_duration, quantile_interval, Duration, PrecisionConfig, RateSequence,
};
use ctmc_randomness::transition::{mu_state, ultrametric_distance, ProbabilisticTransitionSystem, StateId};
use ctmc_randomness::{Error, Rational};
use num_traits::{One, Zero};
use proptest::prelude::*;

fn states_of(w: &TrajectorySpec) -> Vec<StateId> {
    w.states()
}

proptest! {
    #[test]
    fn embedded_rows_are_stochastic(p in arb_params(4)) {
        let c = p.build();
        let sys = c.embedded_chain();
        for q in c.states().unwrap() {
            let row = sys.successors(&q).unwrap();
            prop_assert!(row.iter().all(|(r, _)| r != &q));
            prop_assert_eq!(sys.weight(&q, &q).unwrap(), Rational::zero());
            let total: Rational = row.iter().map(|(_, w)| w).sum();
            if c.is_terminal(&q).unwrap() {
                prop_assert!(row.is_empty());
            } else {
                prop_assert_eq!(total, Rational::one());
            }
        }
    }

    #[test]
    fn state_measure_is_additive_and_monotone((p, w) in arb_model_spec(4)) {
        let c = p.build();
        let sys = c.embedded_chain();
        let x = states_of(&w);
        let mu = mu_state(&sys, c.init(), &x).unwrap();
        let terminal = x.last().is_some_and(|q| c.is_terminal(q).unwrap());
        if !terminal {
            let mut sum = Rational::zero();
            for r in c.states().unwrap() {
                let mut y = x.clone();
                y.push(r);
                let m = mu_state(&sys, c.init(), &y).unwrap();
                prop_assert!(m <= mu);
                sum += m;
            }
            prop_assert_eq!(sum, mu.clone());
        }
        for i in 0..x.len() {
            prop_assert!(mu_state(&sys, c.init(), &x[..i]).unwrap() >= mu);
        }
    }

    #[test]
    fn ultrametric_inequality(a in proptest::collection::vec(0usize..3, 0..5),
                              b in proptest::collection::vec(0usize..3, 0..5),
                              z in proptest::collection::vec(0usize..3, 0..5)) {
        let s = |v: &Vec<usize>| v.iter().map(|&i| state(i)).collect::<Vec<_>>();
        let (x, y, z) = (s(&a), s(&b), s(&z));
        let d = ultrametric_distance;
        prop_assert!(d(&x, &z) <= d(&x, &y).max(d(&y, &z)));
        prop_assert_eq!(d(&x, &y), d(&y, &x));
        prop_assert_eq!(d(&x, &x), Rational::zero());
    }

    #[test]
    fn quantile_cells_refine(k in 0usize..6, u in arb_bits(7)) {
        let prec = PrecisionConfig::default();
        let r = rate(k);
        let whole = quantile_interval(&r, &u, &prec).unwrap();
        let left = quantile_interval(&r, &u.with(false), &prec).unwrap();
        let right = quantile_interval(&r, &u.with(true), &prec).unwrap();
        prop_assert_eq!(&left.lower, &whole.lower);
        prop_assert_eq!(&left.upper, &right.lower);
        prop_assert!(left.upper_closed && !right.lower_closed);
        prop_assert_eq!(&right.upper, &whole.upper);
        prop_assert_eq!(right.upper_closed, whole.upper_closed);
    }

    #[test]
    fn encoding_is_consistent(k in 0usize..6, t in 1e-6f64..20.0, n in 1usize..12, m in 0usize..12) {
        let prec = PrecisionConfig::default();
        let r = rate(k);
        let t = Duration::from_f64(t).unwrap();
        match encode_time(&r, &t, n, &prec) {
            Ok(u) => {
                prop_assert_eq!(u.len(), n);
                prop_assert!(approximates(&r, &u, &t, &prec).unwrap());
                if m < n {
                    prop_assert_eq!(encode_time(&r, &t, m, &prec).unwrap(), u.truncated(m));
                }
                let other = Bits::from_bools(u.as_slice().iter().enumerate().map(|(i, &b)| b ^ (i + 1 == n)).collect());
                prop_assert!(!approximates(&r, &other, &t, &prec).unwrap());
            }
            Err(Error::BoundaryAmbiguous(_)) => {}
            Err(e) => prop_assert!(false, "{e}"),
        }
    }

    #[test]
    fn duration_measure_splits_any_component(w in proptest::collection::vec(arb_bits(4), 1..4), i in 0usize..3) {
        let rates = RateSequence::infinite_prefix(vec![ratio(1, 2); 4]).unwrap();
        let i = i % w.len();
        let mu = mu_duration(&rates, &w).unwrap();
        let mut sum = Rational::zero();
        for b in [false, true] {
            let mut v = w.clone();
            v[i] = v[i].with(b);
            sum += mu_duration(&rates, &v).unwrap();
        }
        prop_assert_eq!(sum, mu);
    }

    #[test]
    fn measure_factorizes((p, w) in arb_model_spec(4)) {
        let c = p.nonterminal().build();
        let sys = c.embedded_chain();
        let states = states_of(&w);
        let want = mu_state(&sys, c.init(), &states).unwrap() * pow2(-(w.total_bits() as i64));
        prop_assert_eq!(mu_traj(&c, &w).unwrap(), want);
    }

    #[test]
    fn state_factor_matches_jump_chain((p, w) in arb_model_spec(4)) {
        let c = p.build();
        let states = states_of(&w);
        let bare = TrajectorySpec::new(states.iter().map(|q| (q.clone(), Bits::empty())).collect());
        let mu = mu_traj(&c, &bare).unwrap();
        let seq = mu_state(&c.embedded_chain(), c.init(), &states).unwrap();
        // they differ only when a terminal state is followed by another position
        let early_terminal = states.iter().rev().skip(1).any(|q| c.is_terminal(q).unwrap());
        if !early_terminal {
            prop_assert_eq!(mu, seq);
        } else {
            prop_assert_eq!(mu, Rational::zero());
        }
    }

    #[test]
    fn bit_additivity_at_every_position((p, w) in arb_model_spec(4), i in 0usize..4) {
        let c = p.build();
        prop_assume!(!w.is_empty());
        let i = i % w.len();
        let mu = mu_traj(&c, &w).unwrap();
        let mut sum = Rational::zero();
        for b in [false, true] {
            let mut pairs = w.pairs().to_vec();
            pairs[i].1 = pairs[i].1.with(b);
            sum += mu_traj(&c, &TrajectorySpec::new(pairs)).unwrap();
        }
        prop_assert_eq!(sum, mu);
    }

    #[test]
    fn measure_is_monotone_and_join_is_exact((p, w) in arb_model_spec(3), v_seed in any::<u64>()) {
        let c = p.build();
        let chain = w.canonical_chain();
        for a in &chain {
            prop_assert!(refines(a, &w));
            prop_assert!(mu_traj(&c, a).unwrap() >= mu_traj(&c, &w).unwrap());
        }
        let v = &chain[(v_seed as usize) % chain.len()];
        let other = {
            let mut pairs = w.pairs().to_vec();
            if let Some((q, u)) = pairs.first_mut() {
                if v_seed % 2 == 0 {
                    *u = u.with(v_seed % 4 == 0);
                } else {
                    *q = state((v_seed as usize / 2) % p.n);
                }
            }
            TrajectorySpec::new(pairs)
        };
        for (a, b) in [(v, &w), (&w, &other), (v, &other)] {
            let rel = spec_compare(a, b);
            match spec_join(a, b) {
                None => prop_assert_eq!(rel, SpecRelation::Disjoint),
                Some(j) => {
                    prop_assert!(rel != SpecRelation::Disjoint);
                    prop_assert!(mu_traj(&c, &j).unwrap() <= mu_traj(&c, a).unwrap().min(mu_traj(&c, b).unwrap()));
                    if refines(a, b) {
                        prop_assert_eq!(&j, b);
                    }
                }
            }
        }
    }

    #[test]
    fn spec_text_round_trips((_p, w) in arb_model_spec(4)) {
        let back: TrajectorySpec = w.to_string().parse().unwrap();
        prop_assert_eq!(back, w);
    }
}
