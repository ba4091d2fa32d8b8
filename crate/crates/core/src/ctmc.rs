//! Continuous-time Markov chains, trajectories, trajectory specifications and
//! the cylinder measure.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use num_traits::{One, Zero};

use crate::bits::Bits;
use crate::enclosure::{ln, ln2, Enclosure};
use crate::error::{Error, Result};
use crate::rational::{exact_log2, int, parse_rational, pow2, render, Rational};
use crate::sojourn::{approximates, encode_time, Duration, PrecisionConfig};
use crate::transition::{checked_state, Initialization, ProbabilisticTransitionSystem, StateId};

/// Off-diagonal rates out of each state.
pub trait RateModel: Send + Sync {
    /// The `r` with `rate(q, r) > 0`; each target appears once.
    fn rates(&self, q: &StateId) -> Result<Vec<(StateId, Rational)>>;

    fn states(&self) -> Option<Vec<StateId>> {
        None
    }
}

/// A finite rate matrix.
#[derive(Clone, Debug, Default)]
pub struct RateTable {
    rows: BTreeMap<StateId, Vec<(StateId, Rational)>>,
}

impl RateTable {
    /// Repeated `q -> r` entries add up.
    pub fn new(entries: Vec<(StateId, StateId, Rational)>) -> Result<Self> {
        let mut rows: BTreeMap<StateId, Vec<(StateId, Rational)>> = BTreeMap::new();
        for (q, r, k) in entries {
            if q == r {
                return Err(Error::InvalidModel(format!("self-transition at {q}")));
            }
            if k < Rational::zero() {
                return Err(Error::InvalidModel(format!("negative rate {q} -> {r}")));
            }
            rows.entry(r.clone()).or_default();
            let row = rows.entry(q).or_default();
            if k.is_zero() {
                continue;
            }
            match row.iter_mut().find(|(s, _)| s == &r) {
                Some((_, acc)) => *acc += k,
                None => row.push((r, k)),
            }
        }
        Ok(RateTable { rows })
    }

    pub fn add_state(&mut self, q: StateId) {
        self.rows.entry(q).or_default();
    }
}

impl RateModel for RateTable {
    fn rates(&self, q: &StateId) -> Result<Vec<(StateId, Rational)>> {
        Ok(self.rows.get(q).cloned().unwrap_or_default())
    }

    fn states(&self) -> Option<Vec<StateId>> {
        Some(self.rows.keys().cloned().collect())
    }
}

/// A chain `(Q, rate, sigma)`.
#[derive(Clone)]
pub struct CtmcModel {
    rates: Arc<dyn RateModel>,
    init: Initialization,
    rows: Arc<Mutex<HashMap<StateId, Arc<Row>>>>,
}

/// A state's rates with their total and jump probabilities worked out.
struct Row {
    rates: Vec<(StateId, Rational)>,
    total: Rational,
    jumps: Vec<(StateId, Rational)>,
}

const ROW_CACHE_LIMIT: usize = 1 << 16;

impl fmt::Debug for CtmcModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CtmcModel")
            .field("init", &self.init)
            .finish_non_exhaustive()
    }
}

impl CtmcModel {
    pub fn new(rates: Arc<dyn RateModel>, init: Initialization) -> Self {
        CtmcModel {
            rates,
            init,
            rows: Arc::default(),
        }
    }

    pub fn from_table(table: RateTable, init: Initialization) -> Self {
        let mut table = table;
        for (q, _) in init.support() {
            table.add_state(q.clone());
        }
        CtmcModel::new(Arc::new(table), init)
    }

    pub fn init(&self) -> &Initialization {
        &self.init
    }

    pub fn states(&self) -> Option<Vec<StateId>> {
        self.rates.states()
    }

    fn row(&self, q: &StateId) -> Result<Arc<Row>> {
        let mut rows = self.rows.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(r) = rows.get(q) {
            return Ok(r.clone());
        }
        let rates = self.rates.rates(q)?;
        let total: Rational = rates.iter().map(|(_, k)| k).sum();
        let jumps = if total.is_zero() {
            Vec::new()
        } else {
            rates.iter().map(|(r, k)| (r.clone(), k / &total)).collect()
        };
        let row = Arc::new(Row { rates, total, jumps });
        if rows.len() >= ROW_CACHE_LIMIT {
            rows.clear();
        }
        rows.insert(q.clone(), row.clone());
        Ok(row)
    }

    pub fn rate_row(&self, q: &StateId) -> Result<Vec<(StateId, Rational)>> {
        Ok(self.row(q)?.rates.clone())
    }

    pub fn rate(&self, q: &StateId, r: &StateId) -> Result<Rational> {
        Ok(self
            .row(q)?
            .rates
            .iter()
            .find(|(s, _)| s == r)
            .map(|(_, k)| k.clone())
            .unwrap_or_else(Rational::zero))
    }

    pub fn exit_rate(&self, q: &StateId) -> Result<Rational> {
        Ok(self.row(q)?.total.clone())
    }

    pub fn is_terminal(&self, q: &StateId) -> Result<bool> {
        Ok(self.row(q)?.total.is_zero())
    }

    /// Jump probabilities out of `q`; empty for terminal `q`.
    pub fn jump_row(&self, q: &StateId) -> Result<Vec<(StateId, Rational)>> {
        Ok(self.row(q)?.jumps.clone())
    }

    pub fn jump_prob(&self, q: &StateId, r: &StateId) -> Result<Rational> {
        let row = self.row(q)?;
        if row.total.is_zero() {
            return Err(Error::TerminalState(q.to_string()));
        }
        Ok(row
            .jumps
            .iter()
            .find(|(s, _)| s == r)
            .map(|(_, p)| p.clone())
            .unwrap_or_else(Rational::zero))
    }

    pub fn embedded_chain(&self) -> EmbeddedChain {
        EmbeddedChain(self.clone())
    }
}

/// The jump chain `pi(q, r) = p(q, r)`.
#[derive(Clone, Debug)]
pub struct EmbeddedChain(pub CtmcModel);

impl ProbabilisticTransitionSystem for EmbeddedChain {
    fn successors(&self, q: &StateId) -> Result<Vec<(StateId, Rational)>> {
        self.0.jump_row(q)
    }

    fn states(&self) -> Option<Vec<StateId>> {
        self.0.states()
    }
}

pub fn exit_rate(c: &CtmcModel, q: &StateId) -> Result<Rational> {
    c.exit_rate(q)
}

pub fn jump_prob(c: &CtmcModel, q: &StateId, r: &StateId) -> Result<Rational> {
    c.jump_prob(q, r)
}

pub fn embedded_chain(c: &CtmcModel) -> EmbeddedChain {
    c.embedded_chain()
}

/// Parses the rate-table format: `a -> b @ rate` lines and `init a : w` lines.
pub fn parse_ctmc_table(text: &str) -> Result<CtmcModel> {
    let mut entries = Vec::new();
    let mut init = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line_no = ln + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("init ") {
            let (q, w) = rest
                .split_once(':')
                .ok_or_else(|| Error::parse(line_no, 1, "expected `init q : weight`"))?;
            let w = parse_rational(w).map_err(|_| Error::parse(line_no, 1, "bad weight"))?;
            init.push((checked_state(q.trim(), line_no, 6)?, w));
            continue;
        }
        let (lhs, k) = line
            .rsplit_once('@')
            .ok_or_else(|| Error::parse(line_no, 1, "expected `a -> b @ rate`"))?;
        let (q, r) = lhs
            .split_once("->")
            .ok_or_else(|| Error::parse(line_no, 1, "expected `->`"))?;
        let col = raw.find('@').map_or(1, |i| i + 2);
        let k = parse_rational(k).map_err(|_| Error::parse(line_no, col, "bad rate"))?;
        entries.push((
            checked_state(q.trim(), line_no, 1)?,
            checked_state(r.trim(), line_no, raw.find("->").map_or(1, |i| i + 3))?,
            k,
        ));
    }
    Ok(CtmcModel::from_table(
        RateTable::new(entries)?,
        Initialization::new(init)?,
    ))
}

/// A finite approximation `((q_0, u_0), ..., (q_{n-1}, u_{n-1}))`.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TrajectorySpec {
    pairs: Vec<(StateId, Bits)>,
}

impl TrajectorySpec {
    pub fn empty() -> Self {
        TrajectorySpec::default()
    }

    pub fn new(pairs: Vec<(StateId, Bits)>) -> Self {
        TrajectorySpec { pairs }
    }

    pub fn pairs(&self) -> &[(StateId, Bits)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn states(&self) -> Vec<StateId> {
        self.pairs.iter().map(|(q, _)| q.clone()).collect()
    }

    pub fn last(&self) -> Option<&(StateId, Bits)> {
        self.pairs.last()
    }

    pub fn total_bits(&self) -> usize {
        self.pairs.iter().map(|(_, u)| u.len()).sum()
    }

    /// Number of pairs plus number of bits: the distance from the root in the
    /// canonical refinement tree.
    pub fn tree_depth(&self) -> usize {
        self.len() + self.total_bits()
    }

    /// Appends a new pair with an empty bit string.
    pub fn with_state(&self, q: StateId) -> Self {
        let mut pairs = self.pairs.clone();
        pairs.push((q, Bits::empty()));
        TrajectorySpec { pairs }
    }

    /// Appends a bit to the last bit string. Panics on the empty spec.
    pub fn with_bit(&self, b: bool) -> Self {
        let mut pairs = self.pairs.clone();
        pairs.last_mut().expect("bit extension of the empty spec").1.push(b);
        TrajectorySpec { pairs }
    }

    pub fn truncated(&self, n: usize) -> Self {
        TrajectorySpec {
            pairs: self.pairs[..n.min(self.pairs.len())].to_vec(),
        }
    }

    /// Parent in the canonical tree: drop the last bit, or the last pair when
    /// its bit string is empty.
    pub fn parent(&self) -> Option<Self> {
        let (_, u) = self.pairs.last()?;
        let mut pairs = self.pairs.clone();
        if u.is_empty() {
            pairs.pop();
        } else {
            pairs.last_mut().unwrap().1.pop();
        }
        Some(TrajectorySpec { pairs })
    }

    /// The canonical path from the empty spec down to `self`, inclusive.
    pub fn canonical_chain(&self) -> Vec<Self> {
        let mut chain = vec![self.clone()];
        let mut cur = self.clone();
        while let Some(p) = cur.parent() {
            chain.push(p.clone());
            cur = p;
        }
        chain.reverse();
        chain
    }
}

impl fmt::Display for TrajectorySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.pairs.is_empty() {
            return f.write_str("()");
        }
        for (i, (q, u)) in self.pairs.iter().enumerate() {
            if i > 0 {
                f.write_str("/")?;
            }
            write!(f, "{q}:{u}")?;
        }
        Ok(())
    }
}

impl FromStr for TrajectorySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s == "()" {
            return Ok(TrajectorySpec::empty());
        }
        let mut pairs = Vec::new();
        let mut column = 1;
        for token in s.split('/') {
            let (q, u) = token
                .rsplit_once(':')
                .ok_or_else(|| Error::parse(1, column, format!("expected state:bits, got {token:?}")))?;
            let q = checked_state(q, 1, column)?;
            let u: Bits = u
                .parse()
                .map_err(|_| Error::parse(1, column + q.as_str().len() + 1, "bad bit string"))?;
            pairs.push((q, u));
            column += token.len() + 1;
        }
        Ok(TrajectorySpec { pairs })
    }
}

/// Exact cylinder measure `mu_C(Omega_w)`.
///
/// At a terminal last position only all-ones bit strings name a nonempty
/// cylinder (the sojourn there is infinite); other bit strings get measure 0.
pub fn mu_traj(c: &CtmcModel, w: &TrajectorySpec) -> Result<Rational> {
    let pairs = w.pairs();
    let Some((q0, _)) = pairs.first() else {
        return Ok(Rational::one());
    };
    let mut m = c.init().weight(q0);
    let n = pairs.len();
    let mut bits = 0usize;
    for i in 0..n {
        if m.is_zero() {
            return Ok(m);
        }
        let (q, u) = &pairs[i];
        let row = c.row(q)?;
        if row.total.is_zero() {
            if i + 1 < n || !u.all_ones() {
                return Ok(Rational::zero());
            }
        } else {
            bits += u.len();
            if let Some((next, _)) = pairs.get(i + 1) {
                match row.jumps.iter().find(|(r, _)| r == next) {
                    Some((_, p)) => m *= p,
                    None => return Ok(Rational::zero()),
                }
            }
        }
    }
    Ok(m * pow2(-(bits as i64)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpecRelation {
    WPrefixesV,
    VPrefixesW,
    EqualOverlap,
    Disjoint,
}

impl fmt::Display for SpecRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SpecRelation::WPrefixesV => "w-prefixes-v",
            SpecRelation::VPrefixesW => "v-prefixes-w",
            SpecRelation::EqualOverlap => "equal-overlap",
            SpecRelation::Disjoint => "disjoint",
        })
    }
}

fn compatible(w: &TrajectorySpec, v: &TrajectorySpec) -> bool {
    w.pairs()
        .iter()
        .zip(v.pairs())
        .all(|((q, u), (r, t))| q == r && u.comparable(t))
}

/// Compares two specs: comparable when the states agree and the bit strings
/// are prefix-comparable on the common positions.
pub fn spec_compare(w: &TrajectorySpec, v: &TrajectorySpec) -> SpecRelation {
    if !compatible(w, v) {
        return SpecRelation::Disjoint;
    }
    match w.len().cmp(&v.len()) {
        std::cmp::Ordering::Less => SpecRelation::WPrefixesV,
        std::cmp::Ordering::Greater => SpecRelation::VPrefixesW,
        std::cmp::Ordering::Equal => SpecRelation::EqualOverlap,
    }
}

/// True when `v` refines `w`, so that `Omega_v` is contained in `Omega_w`.
pub fn refines(w: &TrajectorySpec, v: &TrajectorySpec) -> bool {
    w.len() <= v.len()
        && w.pairs()
            .iter()
            .zip(v.pairs())
            .all(|((q, u), (r, t))| q == r && u.is_prefix_of(t))
}

/// The spec naming `Omega_w ∩ Omega_v`, or `None` when they are disjoint.
pub fn spec_join(w: &TrajectorySpec, v: &TrajectorySpec) -> Option<TrajectorySpec> {
    if !compatible(w, v) {
        return None;
    }
    let (long, short) = if w.len() >= v.len() { (w, v) } else { (v, w) };
    let pairs = long
        .pairs()
        .iter()
        .enumerate()
        .map(|(i, (q, u))| match short.pairs().get(i) {
            Some((_, t)) if t.len() > u.len() => (q.clone(), t.clone()),
            _ => (q.clone(), u.clone()),
        })
        .collect();
    Some(TrajectorySpec::new(pairs))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EndReason {
    Terminal,
    MaxEvents,
    MaxTime,
}

impl fmt::Display for EndReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EndReason::Terminal => "terminal",
            EndReason::MaxEvents => "max-events",
            EndReason::MaxTime => "max-time",
        })
    }
}

impl FromStr for EndReason {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "terminal" => Ok(EndReason::Terminal),
            "max-events" => Ok(EndReason::MaxEvents),
            "max-time" => Ok(EndReason::MaxTime),
            _ => Err(Error::InvalidInput(format!("unknown end reason {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TrajectoryMeta {
    pub seed: Option<u64>,
    pub stream: Option<u64>,
    pub model_hash: Option<String>,
}

/// A stored trajectory: finite sojourns, followed by the terminal state with
/// an infinite sojourn when the run reached one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trajectory {
    events: Vec<(StateId, Duration)>,
    end: EndReason,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn new(events: Vec<(StateId, Duration)>, end: EndReason) -> Result<Self> {
        let n = events.len();
        for (i, (q, t)) in events.iter().enumerate() {
            let last = i + 1 == n;
            if t.is_infinite() && !(last && end == EndReason::Terminal) {
                return Err(Error::InvalidInput(format!(
                    "infinite sojourn at {q} before the end of the trajectory"
                )));
            }
        }
        if end == EndReason::Terminal && !events.last().is_some_and(|(_, t)| t.is_infinite()) {
            return Err(Error::InvalidInput(
                "terminated trajectory must end with an infinite sojourn".into(),
            ));
        }
        Ok(Trajectory {
            events,
            end,
            meta: TrajectoryMeta::default(),
        })
    }

    /// All stored positions, including the terminal one.
    pub fn positions(&self) -> &[(StateId, Duration)] {
        &self.events
    }

    pub fn end(&self) -> EndReason {
        self.end
    }

    /// Number of finite sojourns.
    pub fn event_count(&self) -> usize {
        if self.end == EndReason::Terminal {
            self.events.len() - 1
        } else {
            self.events.len()
        }
    }

    /// `||tau||` when the run reached a terminal state.
    pub fn terminal_index(&self) -> Option<usize> {
        (self.end == EndReason::Terminal).then(|| self.events.len() - 1)
    }

    pub fn states(&self) -> Vec<StateId> {
        self.events.iter().map(|(q, _)| q.clone()).collect()
    }
}

/// Membership `tau ∈ Omega_w`.
pub fn spec_matches_trajectory(
    c: &CtmcModel,
    w: &TrajectorySpec,
    tau: &Trajectory,
    prec: &PrecisionConfig,
) -> Result<bool> {
    let n = w.len();
    for (i, (q, u)) in w.pairs().iter().enumerate() {
        let Some((state, t)) = tau.positions().get(i) else {
            if tau.end() == EndReason::Terminal {
                return Ok(false);
            }
            return Err(Error::TrajectoryTooShort {
                needed: n,
                available: tau.positions().len(),
            });
        };
        if state != q {
            return Ok(false);
        }
        let rate = c.exit_rate(q)?;
        if rate.is_zero() {
            if i + 1 < n {
                return Ok(false);
            }
            if !approximates(&rate, u, &Duration::Infinite, prec)? {
                return Ok(false);
            }
        } else if !approximates(&rate, u, t, prec)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Encodes the first `depths.len()` positions of `tau`, position `i` with
/// `depths[i]` bits. Terminal positions encode as all ones.
pub fn encode_trajectory(
    c: &CtmcModel,
    tau: &Trajectory,
    depths: &[usize],
    prec: &PrecisionConfig,
) -> Result<TrajectorySpec> {
    if depths.len() > tau.positions().len() {
        return Err(Error::TrajectoryTooShort {
            needed: depths.len(),
            available: tau.positions().len(),
        });
    }
    let mut pairs = Vec::with_capacity(depths.len());
    for ((q, t), &d) in tau.positions().iter().zip(depths) {
        let rate = c.exit_rate(q)?;
        let u = if rate.is_zero() {
            Bits::ones(d)
        } else {
            encode_time(&rate, t, d, prec)?
        };
        pairs.push((q.clone(), u));
    }
    Ok(TrajectorySpec::new(pairs))
}

pub fn profile(w: &TrajectorySpec) -> Vec<usize> {
    w.pairs().iter().map(|(_, u)| u.len()).collect()
}

/// `-log2 mu_C(w)`, exact when the measure is a power of two.
pub fn self_information(c: &CtmcModel, w: &TrajectorySpec, prec: &PrecisionConfig) -> Result<Enclosure> {
    let m = mu_traj(c, w)?;
    self_information_of(&m, prec).ok_or_else(|| Error::ZeroMeasure(w.to_string()))
}

/// `-log2 m` for a positive rational `m`.
pub fn self_information_of(m: &Rational, prec: &PrecisionConfig) -> Option<Enclosure> {
    if m <= &Rational::zero() {
        return None;
    }
    if let Some(e) = exact_log2(m) {
        return Some(Enclosure::exact(int(-e)));
    }
    let bits = prec.working + 16;
    let num = ln(m, bits).neg();
    let l = num.div(&ln2(bits))?;
    Some(l.round_outward(prec.working))
}

/// A finite truncation of a constructive null cover: rows `k -> specs`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NullCoverPrefix {
    pub rows: BTreeMap<u32, Vec<TrajectorySpec>>,
}

impl NullCoverPrefix {
    pub fn row(&self, k: u32) -> &[TrajectorySpec] {
        self.rows.get(&k).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn insert(&mut self, k: u32, w: TrajectorySpec) {
        self.rows.entry(k).or_default().push(w);
    }
}

/// Parses `<k> <spec>` lines; `#` starts a comment.
pub fn parse_cover(text: &str) -> Result<NullCoverPrefix> {
    let mut cover = NullCoverPrefix::default();
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, spec) = line
            .split_once(char::is_whitespace)
            .ok_or_else(|| Error::parse(ln + 1, 1, "expected `<k> <spec>`"))?;
        let k: u32 = k.parse().map_err(|_| Error::parse(ln + 1, 1, "bad row index"))?;
        let spec: TrajectorySpec = spec.trim().parse().map_err(|e| match e {
            Error::Parse { column, message, .. } => Error::parse(ln + 1, column + k.to_string().len() + 1, message),
            other => other,
        })?;
        cover.insert(k, spec);
    }
    Ok(cover)
}

pub fn render_cover(cover: &NullCoverPrefix) -> String {
    let mut out = String::new();
    for (k, row) in &cover.rows {
        for w in row {
            out.push_str(&format!("{k} {w}\n"));
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoverRow {
    pub k: u32,
    pub count: usize,
    pub sum: Rational,
    pub bound: Rational,
    pub pass: bool,
}

impl CoverRow {
    pub fn margin(&self) -> Rational {
        &self.bound - &self.sum
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoverReport {
    pub rows: Vec<CoverRow>,
}

impl CoverReport {
    pub fn pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn first_failure(&self) -> Option<&CoverRow> {
        self.rows.iter().find(|r| !r.pass)
    }
}

impl fmt::Display for CoverReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rows {
            writeln!(
                f,
                "row k={} specs={} sum={} bound={} margin={} {}",
                r.k,
                r.count,
                render(&r.sum),
                render(&r.bound),
                render(&r.margin()),
                if r.pass { "pass" } else { "FAIL" }
            )?;
        }
        write!(f, "cover {}", if self.pass() { "pass" } else { "FAIL" })
    }
}

/// Checks `sum_l mu_C(g(k, l)) <= 2^-k` on every stored row.
pub fn verify_null_cover(c: &CtmcModel, cover: &NullCoverPrefix) -> Result<CoverReport> {
    let mut rows = Vec::new();
    for (&k, specs) in &cover.rows {
        let mut sum = Rational::zero();
        for w in specs {
            sum += mu_traj(c, w)?;
        }
        let bound = pow2(-(k as i64));
        rows.push(CoverRow {
            k,
            count: specs.len(),
            pass: sum <= bound,
            sum,
            bound,
        });
    }
    Ok(CoverReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;
    use crate::transition::mu_state;

    fn s(x: &str) -> StateId {
        StateId::from(x)
    }

    fn spec(x: &str) -> TrajectorySpec {
        x.parse().unwrap()
    }

    fn model(text: &str) -> CtmcModel {
        parse_ctmc_table(text).unwrap()
    }

    #[test]
    fn rates_and_jumps() {
        let c = model("init a : 1\na -> b @ 2\na -> c @ 1\n");
        assert_eq!(c.exit_rate(&s("a")).unwrap(), int(3));
        assert_eq!(c.jump_prob(&s("a"), &s("b")).unwrap(), ratio(2, 3));
        assert_eq!(c.jump_prob(&s("a"), &s("a")).unwrap(), int(0));
        assert_eq!(c.exit_rate(&s("b")).unwrap(), int(0));
        assert!(matches!(c.jump_prob(&s("b"), &s("a")), Err(Error::TerminalState(_))));
        let e = c.embedded_chain();
        assert_eq!(e.weight(&s("a"), &s("c")).unwrap(), ratio(1, 3));
        assert!(e.is_terminal(&s("c")).unwrap());
    }

    #[test]
    fn repeated_rates_add() {
        let c = model("init a : 1\na -> b @ 1\na -> b @ 1/2\n");
        assert_eq!(c.rate(&s("a"), &s("b")).unwrap(), ratio(3, 2));
    }

    #[test]
    fn measure_cases() {
        let both = model("init a : 1\na -> b @ 1\nb -> a @ 1\n");
        let term = model("init a : 1\na -> b @ 1\n");
        assert_eq!(mu_traj(&both, &TrajectorySpec::empty()).unwrap(), int(1));
        assert_eq!(mu_traj(&both, &spec("a:01/b:1")).unwrap(), ratio(1, 8));
        assert_eq!(mu_traj(&term, &spec("a:01/b:1")).unwrap(), ratio(1, 4));
        assert_eq!(mu_traj(&term, &spec("a:01/b:0")).unwrap(), int(0));
        assert_eq!(mu_traj(&term, &spec("a:01/b:")).unwrap(), ratio(1, 4));
        // early terminal and impossible jump
        assert_eq!(mu_traj(&term, &spec("a:/b:/a:")).unwrap(), int(0));
        assert_eq!(mu_traj(&both, &spec("a:/a:")).unwrap(), int(0));
        assert_eq!(mu_traj(&both, &spec("b:")).unwrap(), int(0));
    }

    #[test]
    fn factorization_against_state_measure() {
        let c = model("init a : 1/2\ninit b : 1/2\na -> b @ 2\na -> c @ 1\nb -> a @ 1\nc -> a @ 5\n");
        let w = spec("a:0/c:11/a:");
        let states = w.states();
        let expected = mu_state(&c.embedded_chain(), c.init(), &states).unwrap() * pow2(-3);
        assert_eq!(mu_traj(&c, &w).unwrap(), expected);
    }

    #[test]
    fn compare_examples() {
        use SpecRelation::*;
        let w = spec("a:0");
        assert_eq!(spec_compare(&w, &w), EqualOverlap);
        assert_eq!(spec_compare(&w, &spec("a:1")), Disjoint);
        assert_eq!(spec_compare(&w, &spec("a:01/b:")), WPrefixesV);
        assert_eq!(spec_compare(&spec("a:01/b:"), &w), VPrefixesW);
        assert_eq!(spec_compare(&spec("a:0/b:"), &spec("a:0/c:")), Disjoint);
        assert!(refines(&w, &spec("a:01/b:")));
        assert!(!refines(&spec("a:01"), &spec("a:0/b:")));
    }

    #[test]
    fn join_is_intersection() {
        assert_eq!(spec_join(&spec("a:01"), &spec("a:0/b:1")), Some(spec("a:01/b:1")));
        assert_eq!(spec_join(&spec("a:1"), &spec("a:0/b:1")), None);
        let w = spec("a:0/b:");
        assert_eq!(spec_join(&w, &w), Some(w.clone()));
    }

    #[test]
    fn spec_text_round_trip() {
        for t in ["()", "a:", "a:01/b:1", "X:1,Y:0:0/X:0,Y:2:"] {
            assert_eq!(spec(t).to_string(), t);
        }
        assert_eq!(spec("X:1,Y:0:0").pairs()[0].0, s("X:1,Y:0"));
        assert!("a".parse::<TrajectorySpec>().is_err());
        assert!("a:2".parse::<TrajectorySpec>().is_err());
    }

    #[test]
    fn canonical_chain_walks_to_root() {
        let chain = spec("a:01/b:1").canonical_chain();
        let text: Vec<String> = chain.iter().map(|w| w.to_string()).collect();
        assert_eq!(text, ["()", "a:", "a:0", "a:01", "a:01/b:", "a:01/b:1"]);
        for pair in chain.windows(2) {
            assert!(refines(&pair[0], &pair[1]));
        }
    }

    #[test]
    fn membership_and_encoding() {
        let c = model("init a : 1\na -> b @ 1\n");
        let prec = PrecisionConfig::default();
        let tau = Trajectory::new(
            vec![(s("a"), Duration::from_f64(0.5).unwrap()), (s("b"), Duration::Infinite)],
            EndReason::Terminal,
        )
        .unwrap();
        assert!(spec_matches_trajectory(&c, &TrajectorySpec::empty(), &tau, &prec).unwrap());
        assert!(spec_matches_trajectory(&c, &spec("a:"), &tau, &prec).unwrap());
        assert!(!spec_matches_trajectory(&c, &spec("a:/a:"), &tau, &prec).unwrap());
        assert!(spec_matches_trajectory(&c, &spec("a:01/b:11"), &tau, &prec).unwrap());
        assert!(!spec_matches_trajectory(&c, &spec("a:01/b:10"), &tau, &prec).unwrap());
        assert!(!spec_matches_trajectory(&c, &spec("a:/b:/a:"), &tau, &prec).unwrap());

        let enc = encode_trajectory(&c, &tau, &[3, 2], &prec).unwrap();
        assert_eq!(enc.to_string(), "a:011/b:11");
        assert!(spec_matches_trajectory(&c, &enc, &tau, &prec).unwrap());
        let flat = encode_trajectory(&c, &tau, &[0, 0], &prec).unwrap();
        assert_eq!(mu_traj(&c, &flat).unwrap(), int(1));
        assert!(encode_trajectory(&c, &tau, &[1, 1, 1], &prec).is_err());
    }

    #[test]
    fn too_short_prefix_is_an_error() {
        let c = model("init a : 1\na -> b @ 1\nb -> a @ 1\n");
        let tau = Trajectory::new(vec![(s("a"), Duration::from_f64(0.5).unwrap())], EndReason::MaxEvents).unwrap();
        assert!(matches!(
            spec_matches_trajectory(&c, &spec("a:/b:"), &tau, &PrecisionConfig::default()),
            Err(Error::TrajectoryTooShort { .. })
        ));
    }

    #[test]
    fn trajectory_invariants() {
        assert!(Trajectory::new(
            vec![(s("a"), Duration::Infinite), (s("b"), Duration::Infinite)],
            EndReason::Terminal
        )
        .is_err());
        assert!(Trajectory::new(vec![(s("a"), Duration::finite(int(1)).unwrap())], EndReason::Terminal).is_err());
        let t = Trajectory::new(vec![(s("a"), Duration::Infinite)], EndReason::Terminal).unwrap();
        assert_eq!(t.event_count(), 0);
        assert_eq!(t.terminal_index(), Some(0));
    }

    #[test]
    fn self_information_values() {
        let c = model("init a : 1\na -> b @ 1\na -> c @ 2\nb -> a @ 1\nc -> a @ 1\n");
        let prec = PrecisionConfig::default();
        assert_eq!(profile(&spec("a:01/b:1")), vec![2, 1]);
        let l = self_information(&c, &spec("a:01/c:1"), &prec).unwrap();
        // mu = 2/3 * 1/8
        assert!(l.width() < pow2(-100));
        let v = crate::rational::to_f64(l.lo());
        assert!((v - (3.0 + 1.5f64.log2())).abs() < 1e-12);
        let exact = self_information(&c, &spec("a:01"), &prec).unwrap();
        assert_eq!(exact, Enclosure::exact(int(2)));
        let third = self_information_of(&ratio(1, 3), &prec).unwrap();
        // log2 3 = 1.584962500721156181453738943947816508759814407692481060455...
        let oracle = parse_rational("1.5849625007211561814537389439478165087598144076924810604557").unwrap();
        assert!(third.lo() <= &(&oracle + pow2(-180)) && third.hi() >= &(&oracle - pow2(-180)));
        assert!(matches!(
            self_information(&c, &spec("b:"), &prec),
            Err(Error::ZeroMeasure(_))
        ));
    }

    #[test]
    fn cover_verification() {
        let c = model("init a : 1\na -> b @ 1\nb -> a @ 1\n");
        let good = parse_cover("3 a:001\n").unwrap();
        let r = verify_null_cover(&c, &good).unwrap();
        assert!(r.pass());
        assert_eq!(r.rows[0].margin(), int(0));
        assert!(verify_null_cover(&c, &NullCoverPrefix::default()).unwrap().pass());
        let bad = parse_cover("2 a:00\n2 a:01\n").unwrap();
        let r = verify_null_cover(&c, &bad).unwrap();
        let fail = r.first_failure().unwrap();
        assert_eq!((fail.k, fail.sum.clone()), (2, ratio(1, 2)));
        assert_eq!(render_cover(&bad), "2 a:00\n2 a:01\n");
    }
}
