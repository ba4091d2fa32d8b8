#![allow(dead_code)]

use ctmc_randomness::bits::Bits;
use ctmc_randomness::ctmc::{CtmcModel, RateTable, TrajectorySpec};
use ctmc_randomness::rational::ratio;
use ctmc_randomness::transition::{Initialization, StateId};
use ctmc_randomness::Rational;
use proptest::prelude::*;

pub const RATES: [(i64, i64); 6] = [(1, 3), (1, 2), (1, 1), (2, 1), (3, 1), (5, 2)];

pub fn state(i: usize) -> StateId {
    StateId::from(format!("s{i}").as_str())
}

pub fn rate(i: usize) -> Rational {
    let (a, b) = RATES[i % RATES.len()];
    ratio(a, b)
}

/// Rate matrix entries (`None` for no edge) and initial weights.
#[derive(Clone, Debug)]
pub struct ModelParams {
    pub n: usize,
    pub edges: Vec<Option<usize>>,
    pub weights: Vec<u8>,
}

impl ModelParams {
    pub fn build(&self) -> CtmcModel {
        let mut entries = Vec::new();
        for q in 0..self.n {
            for r in 0..self.n {
                if let (true, Some(k)) = (q != r, self.edges[q * self.n + r]) {
                    entries.push((state(q), state(r), rate(k)));
                }
            }
        }
        let mut table = RateTable::new(entries).unwrap();
        for q in 0..self.n {
            table.add_state(state(q));
        }
        let mut w: Vec<i64> = self.weights.iter().map(|&x| x as i64).collect();
        if w.iter().all(|&x| x == 0) {
            w[0] = 1;
        }
        let total: i64 = w.iter().sum();
        let init = Initialization::new(
            (0..self.n)
                .filter(|&i| w[i] > 0)
                .map(|i| (state(i), ratio(w[i], total)))
                .collect(),
        )
        .unwrap();
        CtmcModel::from_table(table, init)
    }

    /// Gives every state an outgoing edge.
    pub fn nonterminal(mut self) -> Self {
        if self.n < 2 {
            self.n = 2;
            self.edges = vec![None, Some(2), Some(2), None];
            self.weights = vec![1, 1];
        }
        for q in 0..self.n {
            if (0..self.n).all(|r| r == q || self.edges[q * self.n + r].is_none()) {
                self.edges[q * self.n + (q + 1) % self.n] = Some(2);
            }
        }
        self
    }
}

pub fn arb_params(max_states: usize) -> impl Strategy<Value = ModelParams> {
    (1..=max_states).prop_flat_map(|n| {
        (
            Just(n),
            proptest::collection::vec(proptest::option::of(0..RATES.len()), n * n),
            proptest::collection::vec(0u8..3, n),
        )
            .prop_map(|(n, edges, weights)| ModelParams { n, edges, weights })
    })
}

pub fn arb_bits(max: usize) -> impl Strategy<Value = Bits> {
    proptest::collection::vec(any::<bool>(), 0..=max).prop_map(Bits::from_bools)
}

pub fn arb_spec(n: usize, max_len: usize, max_bits: usize) -> impl Strategy<Value = TrajectorySpec> {
    proptest::collection::vec((0..n, arb_bits(max_bits)), 0..=max_len)
        .prop_map(|pairs| TrajectorySpec::new(pairs.into_iter().map(|(q, u)| (state(q), u)).collect()))
}

/// A model together with a spec over its states.
pub fn arb_model_spec(max_states: usize) -> impl Strategy<Value = (ModelParams, TrajectorySpec)> {
    arb_params(max_states).prop_flat_map(|p| {
        let n = p.n;
        (Just(p), arb_spec(n, 4, 3))
    })
}

/// A spec that follows the model's support: each step picks an initial or
/// successor state by index and appends the given bits.
pub fn walk(c: &CtmcModel, steps: &[(usize, Bits)]) -> TrajectorySpec {
    let mut pairs = Vec::new();
    for (pick, u) in steps {
        let next: Vec<StateId> = match pairs.last() {
            None => c.init().support().iter().map(|(q, _)| q.clone()).collect(),
            Some((q, _)) => c.jump_row(q).unwrap().into_iter().map(|(r, _)| r).collect(),
        };
        if next.is_empty() {
            break;
        }
        let q = next[pick % next.len()].clone();
        let u = if c.is_terminal(&q).unwrap() {
            Bits::ones(u.len())
        } else {
            u.clone()
        };
        pairs.push((q, u));
    }
    TrajectorySpec::new(pairs)
}

pub fn arb_steps() -> impl Strategy<Value = Vec<(usize, Bits)>> {
    proptest::collection::vec((0usize..4, arb_bits(3)), 1..=4)
}
