use ctmc_randomness::bits::Bits;
use ctmc_randomness::crn::{ssa_simulate, SimConfig};
use ctmc_randomness::ctmc::{
    mu_traj, parse_ctmc_table, spec_compare, spec_matches_trajectory, SpecRelation, TrajectorySpec,
};
use ctmc_randomness::martingale::Schedule;
use ctmc_randomness::rational::ratio;
use ctmc_randomness::rng::Stream;
use ctmc_randomness::sojourn::{encode_time, quantile_interval, Duration, Endpoint, PrecisionConfig};
use num_traits::Zero;

#[test]
fn encoded_cells_are_equiprobable() {
    let prec = PrecisionConfig::default();
    let rate = ratio(3, 2);
    let n = 3;
    let samples = 100_000u64;
    let mut rng = Stream::new(41, 0);
    let mut hits = vec![0u64; 1 << n];
    for _ in 0..samples {
        let t = Duration::from_f64(rng.exponential(1.5)).unwrap();
        let u = encode_time(&rate, &t, n, &prec).unwrap();
        let rank: usize = u.as_slice().iter().fold(0, |acc, &b| 2 * acc + b as usize);
        hits[rank] += 1;
    }
    let p = 1.0 / (1 << n) as f64;
    let expect = samples as f64 * p;
    let tol = 4.0 * (samples as f64 * p * (1.0 - p)).sqrt();
    for (i, &h) in hits.iter().enumerate() {
        assert!(
            (h as f64 - expect).abs() <= tol,
            "cell {i}: {h} hits, expected {expect} +- {tol}"
        );
    }
}

fn specs_upto(c: &ctmc_randomness::ctmc::CtmcModel, depth: usize) -> Vec<TrajectorySpec> {
    let schedule = Schedule {
        bits_per_position: 2,
        depth: 3,
    };
    let mut out = Vec::new();
    let mut stack = vec![TrajectorySpec::empty()];
    while let Some(w) = stack.pop() {
        if w.tree_depth() < depth {
            for v in schedule.children(c, &w).unwrap() {
                if !mu_traj(c, &v).unwrap().is_zero() {
                    stack.push(v);
                }
            }
        }
        out.push(w);
    }
    out
}

#[test]
fn disjoint_specs_share_no_trajectory() {
    let c = parse_ctmc_table("init a : 1\na -> b @ 1\na -> c @ 1\nb -> a @ 2\nc -> a @ 1/3\n").unwrap();
    let prec = PrecisionConfig::default();
    let specs = specs_upto(&c, 4);
    let cfg = SimConfig::new(77, 6).unwrap();
    let mut matched_pairs = 0usize;
    for stream in 0..10_000 {
        let tau = ssa_simulate(&c, &cfg, stream).unwrap();
        let hits: Vec<&TrajectorySpec> = specs
            .iter()
            .filter(|w| spec_matches_trajectory(&c, w, &tau, &prec).unwrap())
            .collect();
        for (i, w) in hits.iter().enumerate() {
            for v in &hits[..i] {
                assert_ne!(
                    spec_compare(w, v),
                    SpecRelation::Disjoint,
                    "{w} and {v} both match run {stream}"
                );
                matched_pairs += 1;
            }
        }
    }
    assert!(matched_pairs > 0);
}

#[test]
fn incomparable_bit_strings_name_disjoint_cells() {
    let prec = PrecisionConfig::default();
    let all: Vec<Bits> = (0..=4usize)
        .flat_map(|n| (0..(1u64 << n)).map(move |i| Bits::from_rank(&i.into(), n)))
        .collect();
    for rate in [ratio(1, 3), ratio(2, 1)] {
        for u in &all {
            for v in &all {
                if u.comparable(v) || u >= v {
                    continue;
                }
                let (a, b) = (
                    quantile_interval(&rate, u, &prec).unwrap(),
                    quantile_interval(&rate, v, &prec).unwrap(),
                );
                // u sorts before v, so a lies entirely to the left of b
                let Endpoint::Finite(a_hi) = &a.upper else {
                    panic!("{u} reaches infinity")
                };
                let Endpoint::Finite(b_lo) = &b.lower else {
                    panic!("{v} starts at infinity")
                };
                if a_hi == b_lo {
                    // a shared endpoint belongs to the left cell only
                    assert!(a.upper_closed && !b.lower_closed, "{u} and {v} share an endpoint");
                } else {
                    assert!(a_hi.hi() < b_lo.lo(), "{u} and {v} overlap");
                }
            }
        }
    }
}
