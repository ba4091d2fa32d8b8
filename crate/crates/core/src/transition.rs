//! Boolean and probabilistic transition systems over countable state sets.
//!
//! Systems are intensional: they answer questions about individual states and
//! enumerate finitely many successors, without materializing the state set.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::Deref;
use std::sync::Arc;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::rational::{parse_rational, pow2, Rational};

/// Canonical state name. Equality is byte equality of the rendering.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId(Arc<str>);

impl StateId {
    pub fn new(name: impl Into<Arc<str>>) -> Self {
        StateId(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

impl From<&str> for StateId {
    fn from(s: &str) -> Self {
        StateId::new(s)
    }
}

impl From<String> for StateId {
    fn from(s: String) -> Self {
        StateId::new(s)
    }
}

pub trait BooleanTransitionSystem: Send + Sync {
    fn delta(&self, q: &StateId, r: &StateId) -> Result<bool>;

    /// States `r` with `delta(q, r)`, which must be finitely many.
    fn successor_states(&self, q: &StateId) -> Result<Vec<StateId>>;

    fn is_terminal(&self, q: &StateId) -> Result<bool> {
        Ok(self.successor_states(q)?.is_empty())
    }
}

pub trait ProbabilisticTransitionSystem: Send + Sync {
    /// The `r` with `pi(q, r) > 0`, each with its weight.
    fn successors(&self, q: &StateId) -> Result<Vec<(StateId, Rational)>>;

    fn weight(&self, q: &StateId, r: &StateId) -> Result<Rational> {
        Ok(self
            .successors(q)?
            .into_iter()
            .find(|(s, _)| s == r)
            .map(|(_, p)| p)
            .unwrap_or_else(Rational::zero))
    }

    fn is_terminal(&self, q: &StateId) -> Result<bool> {
        Ok(self.successors(q)?.is_empty())
    }

    /// All states, when the universe is finite and known.
    fn states(&self) -> Option<Vec<StateId>> {
        None
    }
}

/// A discrete initial distribution with finite support.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Initialization {
    support: Vec<(StateId, Rational)>,
}

impl Initialization {
    pub fn new(support: Vec<(StateId, Rational)>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::InvalidModel("initialization has empty support".into()));
        }
        let mut seen = BTreeSet::new();
        let mut total = Rational::zero();
        for (q, w) in &support {
            if w <= &Rational::zero() {
                return Err(Error::InvalidModel(format!("initial weight of {q} is not positive")));
            }
            if !seen.insert(q.clone()) {
                return Err(Error::InvalidModel(format!("state {q} initialized twice")));
            }
            total += w;
        }
        if !total.is_one() {
            return Err(Error::InvalidModel(format!(
                "initial weights sum to {}, not 1",
                crate::rational::render(&total)
            )));
        }
        Ok(Initialization { support })
    }

    pub fn point(q: StateId) -> Self {
        Initialization {
            support: vec![(q, Rational::one())],
        }
    }

    pub fn support(&self) -> &[(StateId, Rational)] {
        &self.support
    }

    pub fn weight(&self, q: &StateId) -> Rational {
        self.support
            .iter()
            .find(|(s, _)| s == q)
            .map(|(_, w)| w.clone())
            .unwrap_or_else(Rational::zero)
    }

    /// The Boolean initialization: membership in the support.
    pub fn contains(&self, q: &StateId) -> bool {
        self.support.iter().any(|(s, _)| s == q)
    }
}

/// A finite state sequence, either complete or a stored prefix of a longer one.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct StateSequence {
    pub states: Vec<StateId>,
    pub complete: bool,
}

impl StateSequence {
    pub fn prefix(states: Vec<StateId>) -> Self {
        StateSequence {
            states,
            complete: false,
        }
    }

    pub fn of(names: &[&str]) -> Self {
        StateSequence::prefix(names.iter().map(|&s| StateId::from(s)).collect())
    }
}

impl Deref for StateSequence {
    type Target = [StateId];

    fn deref(&self) -> &[StateId] {
        &self.states
    }
}

pub fn is_admissible(sys: &dyn BooleanTransitionSystem, init: &Initialization, x: &[StateId]) -> Result<bool> {
    let Some(first) = x.first() else {
        return Ok(true);
    };
    if !init.contains(first) {
        return Ok(false);
    }
    for pair in x.windows(2) {
        if !sys.delta(&pair[0], &pair[1])? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// True iff the admissible sequence `x` ends in a terminal state.
pub fn is_maximal(sys: &dyn BooleanTransitionSystem, init: &Initialization, x: &[StateId]) -> Result<bool> {
    if !is_admissible(sys, init, x)? {
        return Err(Error::NotAdmissible);
    }
    match x.last() {
        None => Ok(false),
        Some(q) => sys.is_terminal(q),
    }
}

/// `2^-|lcp(x, y)|`, and 0 for equal sequences.
pub fn ultrametric_distance(x: &[StateId], y: &[StateId]) -> Rational {
    if x == y {
        return Rational::zero();
    }
    let lcp = x.iter().zip(y).take_while(|(a, b)| a == b).count();
    pow2(-(lcp as i64))
}

/// The Boolean system `delta(q, r) = sgn(pi(q, r))`.
pub struct InducedBoolean(pub Arc<dyn ProbabilisticTransitionSystem>);

impl BooleanTransitionSystem for InducedBoolean {
    fn delta(&self, q: &StateId, r: &StateId) -> Result<bool> {
        Ok(self.0.weight(q, r)? > Rational::zero())
    }

    fn successor_states(&self, q: &StateId) -> Result<Vec<StateId>> {
        Ok(self.0.successors(q)?.into_iter().map(|(r, _)| r).collect())
    }

    fn is_terminal(&self, q: &StateId) -> Result<bool> {
        self.0.is_terminal(q)
    }
}

pub fn induced_boolean(sys: Arc<dyn ProbabilisticTransitionSystem>) -> InducedBoolean {
    InducedBoolean(sys)
}

/// `sigma(x_0) * prod pi(x_i, x_{i+1})`, and 1 for the empty sequence.
pub fn mu_state(sys: &dyn ProbabilisticTransitionSystem, init: &Initialization, x: &[StateId]) -> Result<Rational> {
    let Some(first) = x.first() else {
        return Ok(Rational::one());
    };
    let mut m = init.weight(first);
    for pair in x.windows(2) {
        if m.is_zero() {
            break;
        }
        m *= sys.weight(&pair[0], &pair[1])?;
    }
    Ok(m)
}

pub fn successors(sys: &dyn ProbabilisticTransitionSystem, q: &StateId) -> Result<Vec<(StateId, Rational)>> {
    sys.successors(q)
}

/// A finite probabilistic transition system stored as a table.
#[derive(Clone, Debug, Default)]
pub struct TransitionTable {
    rows: BTreeMap<StateId, Vec<(StateId, Rational)>>,
}

impl TransitionTable {
    /// Builds and validates a table. States that appear only as targets are
    /// terminal.
    pub fn new(entries: Vec<(StateId, StateId, Rational)>) -> Result<Self> {
        let mut rows: BTreeMap<StateId, Vec<(StateId, Rational)>> = BTreeMap::new();
        for (q, r, p) in entries {
            if q == r {
                return Err(Error::InvalidModel(format!("self-transition at {q}")));
            }
            if p < Rational::zero() {
                return Err(Error::InvalidModel(format!("negative weight {q} -> {r}")));
            }
            rows.entry(r.clone()).or_default();
            if p.is_zero() {
                rows.entry(q).or_default();
                continue;
            }
            let row = rows.entry(q.clone()).or_default();
            if row.iter().any(|(s, _)| s == &r) {
                return Err(Error::InvalidModel(format!("duplicate transition {q} -> {r}")));
            }
            row.push((r, p));
        }
        for (q, row) in &rows {
            if row.is_empty() {
                continue;
            }
            let total: Rational = row.iter().map(|(_, p)| p).sum();
            if !total.is_one() {
                return Err(Error::InvalidModel(format!(
                    "weights out of {q} sum to {}, not 1",
                    crate::rational::render(&total)
                )));
            }
        }
        Ok(TransitionTable { rows })
    }

    pub fn add_state(&mut self, q: StateId) {
        self.rows.entry(q).or_default();
    }
}

impl ProbabilisticTransitionSystem for TransitionTable {
    fn successors(&self, q: &StateId) -> Result<Vec<(StateId, Rational)>> {
        Ok(self.rows.get(q).cloned().unwrap_or_default())
    }

    fn states(&self) -> Option<Vec<StateId>> {
        Some(self.rows.keys().cloned().collect())
    }
}

/// Parses the table format: `q -> r : p` lines and `init q : w` lines.
pub fn parse_transition_table(text: &str) -> Result<(TransitionTable, Initialization)> {
    let mut entries = Vec::new();
    let mut init = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line_no = ln + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let col = |needle: &str| raw.find(needle).map_or(1, |i| i + 1);
        if let Some(rest) = line.strip_prefix("init ") {
            let (q, w) = rest
                .split_once(':')
                .ok_or_else(|| Error::parse(line_no, col("init"), "expected `init q : weight`"))?;
            let w = parse_rational(w).map_err(|_| Error::parse(line_no, col(":") + 1, "bad weight"))?;
            init.push((checked_state(q.trim(), line_no, 6)?, w));
            continue;
        }
        let (lhs, p) = line
            .rsplit_once(':')
            .ok_or_else(|| Error::parse(line_no, 1, "expected `q -> r : weight`"))?;
        let (q, r) = lhs
            .split_once("->")
            .ok_or_else(|| Error::parse(line_no, 1, "expected `->`"))?;
        let p = parse_rational(p).map_err(|_| Error::parse(line_no, col(":") + 1, "bad weight"))?;
        entries.push((
            checked_state(q.trim(), line_no, 1)?,
            checked_state(r.trim(), line_no, col("->") + 2)?,
            p,
        ));
    }
    let table = {
        let mut t = TransitionTable::new(entries)?;
        for (q, _) in &init {
            t.add_state(q.clone());
        }
        t
    };
    Ok((table, Initialization::new(init)?))
}

pub fn checked_state(name: &str, line: usize, column: usize) -> Result<StateId> {
    if name.is_empty() {
        return Err(Error::parse(line, column, "empty state name"));
    }
    if name.chars().any(|c| c.is_whitespace() || "/#@".contains(c)) {
        return Err(Error::parse(line, column, format!("invalid state name {name:?}")));
    }
    Ok(StateId::from(name))
}

/// Encodes species count vectors as canonical state names `A:1,B:0`, with
/// species sorted by name.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpeciesCodec {
    names: Vec<String>,
    sorted: Vec<usize>,
}

impl SpeciesCodec {
    pub fn new(names: Vec<String>) -> Self {
        let mut sorted: Vec<usize> = (0..names.len()).collect();
        sorted.sort_by(|&a, &b| names[a].cmp(&names[b]));
        SpeciesCodec { names, sorted }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn encode(&self, counts: &[u64]) -> StateId {
        let parts: Vec<String> = self
            .sorted
            .iter()
            .map(|&i| format!("{}:{}", self.names[i], counts[i]))
            .collect();
        StateId::from(parts.join(","))
    }

    pub fn decode(&self, q: &StateId) -> Result<Vec<u64>> {
        let bad = || Error::InvalidInput(format!("not a species state: {q}"));
        let mut counts = vec![0u64; self.names.len()];
        let text = q.as_str();
        let parts: Vec<&str> = if text.is_empty() {
            Vec::new()
        } else {
            text.split(',').collect()
        };
        if parts.len() != self.names.len() {
            return Err(bad());
        }
        for (part, &i) in parts.iter().zip(&self.sorted) {
            let (name, n) = part.split_once(':').ok_or_else(bad)?;
            if name != self.names[i] {
                return Err(bad());
            }
            counts[i] = n.parse().map_err(|_| bad())?;
        }
        Ok(counts)
    }
}

/// Rate-free reaction network as a Boolean transition system on `N^S`.
#[derive(Clone, Debug)]
pub struct RateFreeCrn {
    codec: SpeciesCodec,
    reactions: Vec<(Vec<u64>, Vec<u64>)>,
}

impl RateFreeCrn {
    pub fn codec(&self) -> &SpeciesCodec {
        &self.codec
    }

    fn apply(&self, q: &[u64]) -> BTreeSet<StateId> {
        self.reactions
            .iter()
            .filter(|(r, _)| q.iter().zip(r).all(|(a, b)| a >= b))
            .map(|(r, p)| {
                let next: Vec<u64> = q.iter().zip(r).zip(p).map(|((x, a), b)| x - a + b).collect();
                self.codec.encode(&next)
            })
            .collect()
    }
}

pub fn ratefree_crn_to_boolean(species: Vec<String>, reactions: Vec<(Vec<u64>, Vec<u64>)>) -> Result<RateFreeCrn> {
    for (i, (r, p)) in reactions.iter().enumerate() {
        if r.len() != species.len() || p.len() != species.len() {
            return Err(Error::InvalidModel(format!("reaction {i} has the wrong arity")));
        }
        if r == p {
            return Err(Error::InvalidModel(format!("reaction {i} has no net effect")));
        }
    }
    Ok(RateFreeCrn {
        codec: SpeciesCodec::new(species),
        reactions,
    })
}

impl BooleanTransitionSystem for RateFreeCrn {
    fn delta(&self, q: &StateId, r: &StateId) -> Result<bool> {
        Ok(self.apply(&self.codec.decode(q)?).contains(r))
    }

    fn successor_states(&self, q: &StateId) -> Result<Vec<StateId>> {
        Ok(self.apply(&self.codec.decode(q)?).into_iter().collect())
    }
}
