use std::sync::Arc;

use num_traits::{One, Zero};

use super::*;
use crate::ctmc::{mu_traj, parse_ctmc_table, CtmcModel, NullCoverPrefix, TrajectorySpec};
use crate::error::Error;
use crate::rational::{int, pow2, ratio, Rational};
use crate::sojourn::RateSequence;
use crate::transition::{parse_transition_table, Initialization, StateId};

struct FnState<F>(F);

impl<F: Fn(&[StateId]) -> Rational + Send + Sync> StateMartingale for FnState<F> {
    fn capital(&self, x: &[StateId]) -> crate::Result<Rational> {
        Ok((self.0)(x))
    }

    fn describe(&self) -> String {
        "fn".into()
    }
}

struct FnDuration<F>(F);

impl<F: Fn(&[Bits]) -> Rational + Send + Sync> DurationMartingale for FnDuration<F> {
    fn capital(&self, w: &[Bits]) -> crate::Result<Rational> {
        Ok((self.0)(w))
    }

    fn describe(&self) -> String {
        "fn".into()
    }
}

struct FnTraj<F>(F);

impl<F: Fn(&TrajectorySpec) -> Rational + Send + Sync> TrajectoryMartingale for FnTraj<F> {
    fn capital(&self, w: &TrajectorySpec) -> crate::Result<Rational> {
        Ok((self.0)(w))
    }

    fn describe(&self) -> String {
        "fn".into()
    }
}

fn spec(x: &str) -> TrajectorySpec {
    x.parse().unwrap()
}

fn model(text: &str) -> CtmcModel {
    parse_ctmc_table(text).unwrap()
}

/// a -> b or c with probability 1/2 each; b and c alternate back to a.
fn branching() -> CtmcModel {
    model("init a : 1\na -> b @ 1\na -> c @ 1\nb -> a @ 2\nc -> a @ 1/3\n")
}

fn flip_flop() -> CtmcModel {
    model("init a : 1\na -> b @ 1\nb -> a @ 1\n")
}

#[test]
fn state_fairness_examples() {
    let (t, init) = parse_transition_table("init a : 1\na -> b : 1/2\na -> c : 1/2\n").unwrap();
    let opts = VerifyOptions::depth(3);

    let c = Constant(ratio(3, 2));
    assert!(verify_state_fairness(&c, &t, &init, opts).unwrap().pass());

    let one_sided = FnState(|x: &[StateId]| match x.get(1).map(StateId::as_str) {
        None => int(1),
        Some("b") => int(2),
        Some(_) => int(0),
    });
    assert!(verify_state_fairness(&one_sided, &t, &init, opts).unwrap().pass());

    let both = FnState(|x: &[StateId]| if x.len() >= 2 { int(2) } else { int(1) });
    let r = verify_state_fairness(&both, &t, &init, opts).unwrap();
    assert!(!r.pass());
    assert_eq!(r.residuals.len(), 1);
    assert_eq!(r.residuals[0].node, "a");
    // c * mu(a) = 1
    assert_eq!(r.residuals[0].value, int(-1));
}

#[test]
fn duration_fairness_examples() {
    let rates = RateSequence::finite(vec![int(1), ratio(1, 2), int(3), int(0)]).unwrap();
    let opts = VerifyOptions::depth(6);

    assert!(verify_duration_fairness(&Constant(int(5)), &rates, opts)
        .unwrap()
        .pass());

    let fb = duration_first_bit_martingale(3).unwrap();
    assert!(verify_duration_fairness(&fb, &rates, opts).unwrap().pass());

    let drifting = FnDuration(|w: &[Bits]| int(1 + w.len() as i64));
    let r = verify_duration_fairness(&drifting, &rates, opts).unwrap();
    assert!(!r.pass());
    assert!(r.residuals.iter().all(|x| x.condition == Condition::DurationNoBet));
}

#[test]
fn trajectory_fairness_examples() {
    let c = branching();
    let opts = VerifyOptions::depth(6);
    assert!(verify_trajectory_fairness(&Constant(int(7)), &c, opts).unwrap().pass());
    assert!(verify_trajectory_fairness(&zeno_detector(c.clone(), 0), &c, opts)
        .unwrap()
        .pass());

    let pays_both = FnTraj(
        |w: &TrajectorySpec| match w.pairs().first().and_then(|(_, u)| u.first()) {
            Some(false) => int(2),
            _ => int(1),
        },
    );
    let r = verify_trajectory_fairness(&pays_both, &c, opts).unwrap();
    assert!(!r.pass());
    let at_root = r.residuals.iter().find(|x| x.node == "a:").unwrap();
    assert_eq!(at_root.condition, Condition::TrajectoryBit);
    // mu(a:) = 1 and c = 1: c mu - (2c mu/2 + c mu/2) = -mu c / 2
    assert_eq!(at_root.value, ratio(-1, 2));
}

#[test]
fn meet_examples() {
    let w = spec("a:01/b:1");
    assert_eq!(meet(&w, &w), Some(w.clone()));
    assert_eq!(meet(&spec("a:0"), &w), Some(w.clone()));
    assert_eq!(meet(&w, &spec("a:0")), Some(w.clone()));
    assert_eq!(meet(&w, &spec("a:1")), None);
    assert_eq!(meet(&w, &spec("a:01/c:")), None);
}

fn cover_of(rows: &[(u32, &str)]) -> NullCoverPrefix {
    let mut cover = NullCoverPrefix::default();
    for &(k, w) in rows {
        cover.insert(k, spec(w));
    }
    cover
}

#[test]
fn cover_martingale_examples() {
    let c = branching();
    let cover = cover_of(&[(2, "a:0/b:"), (3, "a:00/b:1"), (3, "a:1/c:01")]);

    let d2 = cover_to_martingale(&c, &cover, 2).unwrap();
    assert_eq!(d2.capital(&spec("a:0/b:")).unwrap(), int(1));
    assert_eq!(d2.initial_capital().unwrap(), ratio(1, 4));
    assert_eq!(d2.capital(&spec("a:1")).unwrap(), int(0));

    let d3 = cover_to_martingale(&c, &cover, 3).unwrap();
    let total: Rational = cover.row(3).iter().map(|g| mu_traj(&c, g).unwrap()).sum();
    assert_eq!(d3.initial_capital().unwrap(), total);
    assert!(total <= pow2(-3));
    for g in cover.row(3) {
        assert!(d3.capital(g).unwrap() >= int(1));
    }
    assert!(d3.capital_at_stage(&TrajectorySpec::empty(), 1).unwrap() <= total);

    assert!(matches!(d3.capital(&spec("a:/a:")), Err(Error::ZeroMeasure(_))));
    assert!(cover_to_martingale(&c, &cover, 5).is_err());
    assert!(verify_trajectory_fairness(&d3, &c, VerifyOptions::depth(6))
        .unwrap()
        .pass());
}

#[test]
fn savings_examples() {
    let c = branching();
    let low: Arc<dyn TrajectoryMartingale> = Arc::new(Constant(ratio(1, 2)));
    let s = savings_martingale(low.clone());
    for w in ["()", "a:0", "a:01/b:1"] {
        assert_eq!(s.capital(&spec(w)).unwrap(), low.capital(&spec(w)).unwrap());
    }

    let z: Arc<dyn TrajectoryMartingale> = Arc::new(zeno_detector(c.clone(), 0));
    let s = savings_martingale(z.clone());
    assert_eq!(s.initial_capital().unwrap(), z.initial_capital().unwrap());
    // zeno already sits at 1, so savings freezes at the root.
    assert_eq!(s.capital(&spec("a:1")).unwrap(), int(1));
    assert_eq!(z.capital(&spec("a:1")).unwrap(), int(0));

    let cover = cover_of(&[(2, "a:0/b:")]);
    let d: Arc<dyn TrajectoryMartingale> = Arc::new(cover_to_martingale(&c, &cover, 2).unwrap());
    let s = savings_martingale(d.clone());
    assert_eq!(s.capital(&spec("a:0")).unwrap(), d.capital(&spec("a:0")).unwrap());
    for w in ["a:0/b:", "a:0/b:1", "a:0/b:10/a:11"] {
        assert_eq!(s.capital(&spec(w)).unwrap(), int(1));
    }
    assert!(verify_trajectory_fairness(&s, &c, VerifyOptions::depth(6))
        .unwrap()
        .pass());
}

#[test]
fn sum_examples() {
    let c = branching();
    let z: Arc<dyn TrajectoryMartingale> = Arc::new(zeno_detector(c.clone(), 1));
    let one = sum_martingales(vec![(z.clone(), Rational::one())], None).unwrap();
    for w in ["()", "a:0/b:0", "a:0/b:1"] {
        assert_eq!(one.capital(&spec(w)).unwrap(), z.capital(&spec(w)).unwrap());
    }

    let two = sum_martingales(
        vec![
            (
                Arc::new(Constant(ratio(1, 3))) as Arc<dyn TrajectoryMartingale>,
                Rational::one(),
            ),
            (Arc::new(Constant(ratio(1, 5))), Rational::one()),
        ],
        None,
    )
    .unwrap();
    assert_eq!(two.capital(&spec("a:0110")).unwrap(), ratio(8, 15));
    assert!(sum_martingales(vec![(z, int(-1))], None).is_err());

    // rows of measure exactly 2^-k for k = 1..=4
    let cover = cover_of(&[(1, "a:0"), (2, "a:10"), (3, "a:110"), (4, "a:1110")]);
    let s = cover_savings_sum(&c, &cover, 4).unwrap();
    let init = s.initial_capital().unwrap();
    assert_eq!(init, int(1) - pow2(-4));
    assert!(init < int(2));
    assert!(verify_trajectory_fairness(&s, &c, VerifyOptions::depth(6))
        .unwrap()
        .pass());
}

#[test]
fn prefix_set_examples() {
    let c = branching();
    let schedule = Schedule {
        bits_per_position: 1,
        depth: 4,
    };
    assert!(martingale_to_prefix_set(&c, &Constant(int(1)), 1, schedule)
        .unwrap()
        .is_empty());

    let z = zeno_detector(c.clone(), 0);
    let b = martingale_to_prefix_set(&c, &z, 3, schedule).unwrap();
    // Oracle: each spec is a state path of length 3 with first bit 0 at every
    // position. The paths a-b-a, a-c-a have jump probability 1, so the event
    // "three lower-half sojourns" has probability (1/2)^3.
    assert_eq!(b.len(), 2);
    for w in &b {
        assert_eq!(w.len(), 3);
        assert!(w.pairs().iter().all(|(_, u)| u == &Bits::zeros(1)));
    }
    let total: Rational = b.iter().map(|w| mu_traj(&c, w).unwrap()).sum();
    assert_eq!(total, ratio(1, 8));
    for (i, w) in b.iter().enumerate() {
        for v in &b[i + 1..] {
            assert_eq!(crate::ctmc::spec_compare(w, v), crate::ctmc::SpecRelation::Disjoint);
        }
    }
}

#[test]
fn kraft_examples() {
    let c = branching();
    let one = Constant(int(1));
    let b = vec![spec("a:0/b:"), spec("a:1/c:1"), spec("a:00/c:")];
    let r = kraft_check(&c, &one, &b).unwrap();
    assert!(r.holds);
    let mass: Rational = b.iter().map(|w| mu_traj(&c, w).unwrap()).sum();
    assert_eq!(r.rhs, mass);

    assert!(kraft_check(&c, &one, &[]).unwrap().holds);

    let k = Constant(ratio(2, 7));
    let r = kraft_check(&c, &k, &[spec("a:")]).unwrap();
    assert!(r.holds);
    assert!(r.margin().is_zero());

    assert!(matches!(
        kraft_check(&c, &one, &[spec("a:0"), spec("a:01")]),
        Err(Error::NotAntichain(..))
    ));
}

#[test]
fn lift_examples() {
    let c = branching();
    let on_b = Arc::new(FnState(|x: &[StateId]| match x.get(1).map(StateId::as_str) {
        None => int(1),
        Some("b") => int(2),
        Some(_) => int(0),
    }));
    let lift = lift_state_martingale(on_b);
    for w in ["a:/b:", "a:0/b:", "a:1101/b:0", "a:/b:1/a:"] {
        assert_eq!(lift.capital(&spec(w)).unwrap(), int(2));
    }
    let r = verify_trajectory_fairness(&lift, &c, VerifyOptions::depth(6)).unwrap();
    assert!(r.pass());

    let k = lift_state_martingale(Arc::new(Constant(ratio(1, 9))));
    assert_eq!(k.capital(&spec("a:0/c:1")).unwrap(), ratio(1, 9));
}

#[test]
fn sojourn_index_examples() {
    let c = branching();
    let d0 = sojourn_index_martingale(Arc::new(DoubleOnZero), 0, c.clone()).unwrap();
    assert_eq!(d0.initial_capital().unwrap(), int(1));
    // 2^-0 * 2
    assert_eq!(d0.capital(&spec("a:0")).unwrap(), int(2));
    assert_eq!(d0.capital(&spec("a:1")).unwrap(), int(0));

    let d2 = sojourn_index_martingale(Arc::new(DoubleOnZero), 2, c.clone()).unwrap();
    for w in ["()", "a:0", "a:1/b:01"] {
        assert_eq!(d2.capital(&spec(w)).unwrap(), ratio(1, 4));
    }

    let n = 12;
    let parts = (0..n)
        .map(|i| {
            let d = sojourn_index_martingale(Arc::new(DoubleOnZero), i, c.clone()).unwrap();
            (Arc::new(d) as Arc<dyn TrajectoryMartingale>, Rational::one())
        })
        .collect();
    let sum = sum_martingales(parts, Some(n)).unwrap();
    // partial sum of 2^-i for i < n
    assert_eq!(sum.initial_capital().unwrap(), int(2) - pow2(1 - n as i64));

    assert!(verify_trajectory_fairness(&d0, &c, VerifyOptions::depth(6))
        .unwrap()
        .pass());
    assert!(sojourn_index_martingale(Arc::new(Constant(int(0))), 0, c).is_err());
}

#[test]
fn first_bit_examples() {
    let fb = duration_first_bit_martingale(3).unwrap();
    let zeros: Vec<Bits> = (0..3).map(|_| "0".parse().unwrap()).collect();
    assert_eq!(fb.capital(&zeros).unwrap(), int(8));
    let mut w = zeros.clone();
    w.push("1".parse().unwrap());
    assert_eq!(fb.capital(&w).unwrap(), int(8));
    w[1] = "1".parse().unwrap();
    assert_eq!(fb.capital(&w).unwrap(), int(0));
    let long: Vec<Bits> = ["0110", "01", "0"].iter().map(|x| x.parse().unwrap()).collect();
    assert_eq!(fb.capital(&long).unwrap(), int(8));
    assert!(duration_first_bit_martingale(0).is_err());
}

#[test]
fn zeno_examples() {
    let c = flip_flop();
    let z = zeno_detector(c.clone(), 2);
    assert_eq!(z.initial_capital().unwrap(), int(1));
    assert_eq!(z.capital(&spec("a:1/b:1/a:0/b:01")).unwrap(), int(4));
    assert_eq!(z.capital(&spec("a:0/b:0/a:0/b:1")).unwrap(), int(0));
}

#[test]
fn run_examples() {
    let c = flip_flop();
    let m = 20;
    let pairs = (0..m)
        .map(|i| (StateId::from(if i % 2 == 0 { "a" } else { "b" }), Bits::zeros(1)))
        .collect();
    let target = TrajectorySpec::new(pairs);
    let chain = target.canonical_chain();

    let flat = run_martingale(&Constant(ratio(1, 2)), &target, &chain).unwrap();
    assert!(flat.entries.iter().all(|(_, x)| x == &ratio(1, 2)));
    assert_eq!(flat.largest_crossing(), None);

    let z = zeno_detector(c.clone(), 0);
    let trace = run_martingale(&z, &target, &chain).unwrap();
    assert_eq!(trace.final_capital(), Some(&pow2(m)));
    assert_eq!(trace.largest_crossing(), Some(m as u32));
    assert!(trace.success_at(&pow2(10)).is_some());

    let cover = cover_of(&[(3, "a:0/b:0/a:0")]);
    let d = cover_to_martingale(&c, &cover, 3).unwrap();
    let g = spec("a:0/b:0/a:0");
    let trace = run_martingale(&d, &g, &g.canonical_chain()).unwrap();
    assert!(trace.final_capital().unwrap() >= &int(1));

    let bad = vec![spec("a:0"), spec("a:")];
    assert!(matches!(run_martingale(&z, &target, &bad), Err(Error::NotAChain(1))));
}

#[test]
fn random_trees_are_fair() {
    let c = branching();
    for seed in 0..5 {
        let d = RandomBetTree {
            model: c.clone(),
            seed,
            max_depth: 5,
        };
        assert!(verify_trajectory_fairness(&d, &c, VerifyOptions::depth(6))
            .unwrap()
            .pass());
    }
    let (t, init) =
        parse_transition_table("init a : 1/3\ninit b : 2/3\na -> b : 1/2\na -> c : 1/2\nb -> a : 1\nc -> b : 1\n")
            .unwrap();
    let t = Arc::new(t);
    let d = RandomStateBetTree {
        sys: t.clone(),
        init: init.clone(),
        seed: 3,
        max_depth: 4,
    };
    assert!(verify_state_fairness(&d, t.as_ref(), &init, VerifyOptions::depth(5))
        .unwrap()
        .pass());

    let bit = Arc::new(RandomBitTree { seed: 9, max_depth: 4 });
    let d = sojourn_index_martingale(bit, 1, c.clone()).unwrap();
    assert!(verify_trajectory_fairness(&d, &c, VerifyOptions::depth(6))
        .unwrap()
        .pass());
}

#[test]
fn report_renders_exact_residuals() {
    let c = flip_flop();
    let r = verify_trajectory_fairness(&Constant(int(1)), &c, VerifyOptions::depth(3)).unwrap();
    assert!(r.to_string().ends_with("verdict=pass"));
    let _ = Initialization::point(StateId::from("a"));
}
