//! Stochastic chemical reaction networks: the text format, mass-action
//! propensities, compilation to a CTMC, and the stochastic simulation
//! algorithm.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_traits::{Signed, ToPrimitive, Zero};

use crate::bits::Bits;
use crate::ctmc::{CtmcModel, EndReason, RateModel, Trajectory, TrajectoryMeta};
use crate::error::{Error, Result};
use crate::rational::{parse_rational, pow2, render, Rational};
use crate::rng::Stream;
use crate::sojourn::{encode_time, Duration, PrecisionConfig};
use crate::transition::{ratefree_crn_to_boolean, Initialization, RateFreeCrn, SpeciesCodec, StateId};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reaction {
    pub reactants: Vec<u64>,
    pub products: Vec<u64>,
    pub rate: Rational,
}

impl Reaction {
    pub fn applicable(&self, q: &[u64]) -> bool {
        q.iter().zip(&self.reactants).all(|(a, b)| a >= b)
    }

    pub fn apply(&self, q: &[u64]) -> Vec<u64> {
        q.iter()
            .zip(&self.reactants)
            .zip(&self.products)
            .map(|((x, r), p)| x - r + p)
            .collect()
    }

    /// Net effect `p - r`.
    pub fn delta(&self) -> Vec<i64> {
        self.reactants
            .iter()
            .zip(&self.products)
            .map(|(&r, &p)| p as i64 - r as i64)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CrnModel {
    species: Vec<String>,
    reactions: Vec<Reaction>,
    init: Vec<u64>,
    bounds: Vec<Option<u64>>,
}

impl CrnModel {
    pub fn new(species: Vec<String>, reactions: Vec<Reaction>, init: Vec<u64>) -> Result<Self> {
        let n = species.len();
        for (i, r) in reactions.iter().enumerate() {
            if r.reactants.len() != n || r.products.len() != n {
                return Err(Error::InvalidModel(format!("reaction {i} has the wrong arity")));
            }
            if r.reactants == r.products {
                return Err(Error::InvalidModel(format!(
                    "reaction {i}: reactants and products must differ"
                )));
            }
            if !r.rate.is_positive() {
                return Err(Error::InvalidModel(format!("reaction {i}: rate must be positive")));
            }
        }
        if init.len() != n {
            return Err(Error::InvalidModel("initial state has the wrong arity".into()));
        }
        Ok(CrnModel {
            species,
            reactions,
            init,
            bounds: vec![None; n],
        })
    }

    pub fn with_bounds(mut self, bounds: Vec<Option<u64>>) -> Result<Self> {
        if bounds.len() != self.species.len() {
            return Err(Error::InvalidModel("bounds have the wrong arity".into()));
        }
        self.bounds = bounds;
        Ok(self)
    }

    pub fn species(&self) -> &[String] {
        &self.species
    }

    pub fn reactions(&self) -> &[Reaction] {
        &self.reactions
    }

    pub fn initial(&self) -> &[u64] {
        &self.init
    }

    pub fn bounds(&self) -> &[Option<u64>] {
        &self.bounds
    }

    pub fn codec(&self) -> SpeciesCodec {
        SpeciesCodec::new(self.species.clone())
    }

    pub fn initial_state(&self) -> StateId {
        self.codec().encode(&self.init)
    }

    pub fn rate_free(&self) -> RateFreeCrn {
        ratefree_crn_to_boolean(
            self.species.clone(),
            self.reactions
                .iter()
                .map(|r| (r.reactants.clone(), r.products.clone()))
                .collect(),
        )
        .expect("validated on construction")
    }
}

fn side_text(species: &[String], counts: &[u64]) -> String {
    let terms: Vec<String> = species
        .iter()
        .zip(counts)
        .filter(|(_, &c)| c > 0)
        .map(|(s, &c)| if c == 1 { s.clone() } else { format!("{c}{s}") })
        .collect();
    if terms.is_empty() {
        "0".into()
    } else {
        terms.join(" + ")
    }
}

/// Renders in the input format; `parse_crn` reads it back to an equal model.
impl fmt::Display for CrnModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "species {}", self.species.join(" "))?;
        for r in &self.reactions {
            writeln!(
                f,
                "{} -> {} @ {}",
                side_text(&self.species, &r.reactants),
                side_text(&self.species, &r.products),
                render(&r.rate)
            )?;
        }
        for (s, &c) in self.species.iter().zip(&self.init) {
            if c > 0 {
                writeln!(f, "init {s} = {c}")?;
            }
        }
        for (s, b) in self.species.iter().zip(&self.bounds) {
            if let Some(b) = b {
                writeln!(f, "bound {s} <= {b}")?;
            }
        }
        Ok(())
    }
}

struct Line<'a> {
    text: &'a str,
    number: usize,
}

impl Line<'_> {
    fn err(&self, offset: usize, msg: impl Into<String>) -> Error {
        Error::parse(self.number, offset + 1, msg)
    }
}

fn is_name_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_name_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Parses one side of a reaction: `coeff Species (+ coeff Species)*`, or an
/// empty side written as `0`, `∅` or nothing. `base` is the column offset.
fn parse_side(line: &Line, side: &str, base: usize) -> Result<Vec<(String, u64, usize)>> {
    let trimmed = side.trim();
    if trimmed.is_empty() || trimmed == "0" || trimmed == "∅" {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    let mut offset = base;
    for term in side.split('+') {
        let lead = term.len() - term.trim_start().len();
        let t = term.trim();
        let at = offset + lead;
        if t.is_empty() {
            return Err(line.err(at, "missing species term"));
        }
        let digits: String = t.chars().take_while(|c| c.is_ascii_digit()).collect();
        let rest = t[digits.len()..].trim_start();
        let coeff: u64 = if digits.is_empty() {
            1
        } else {
            digits.parse().map_err(|_| line.err(at, "coefficient too large"))?
        };
        let name_at = at + (t.len() - rest.len());
        if !rest.starts_with(is_name_start) || !rest.chars().all(is_name_char) {
            return Err(line.err(name_at, format!("expected a species name, found {rest:?}")));
        }
        if coeff == 0 {
            return Err(line.err(at, "coefficient must be positive"));
        }
        out.push((rest.to_string(), coeff, name_at));
        offset += term.len() + 1;
    }
    Ok(out)
}

/// Parses the reaction-network format.
///
/// ```text
/// # comment
/// species X Y Z            (optional; species also appear implicitly)
/// X + Z -> 2Y + Z @ 1
/// X -> 0 @ 1/2
/// init X = 10
/// bound Y <= 20
/// ```
pub fn parse_crn(text: &str) -> Result<CrnModel> {
    let mut species: Vec<String> = Vec::new();
    let index = |species: &mut Vec<String>, name: &str| -> usize {
        match species.iter().position(|s| s == name) {
            Some(i) => i,
            None => {
                species.push(name.to_string());
                species.len() - 1
            }
        }
    };
    type Side = Vec<(usize, u64)>;
    let mut reactions: Vec<(Side, Side, Rational, usize)> = Vec::new();
    let mut inits: Vec<(String, u64, usize, usize)> = Vec::new();
    let mut bounds: Vec<(String, u64, usize, usize)> = Vec::new();

    for (ln, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("");
        let line = Line {
            text: content,
            number: ln + 1,
        };
        let trimmed = line.text.trim();
        if trimmed.is_empty() {
            continue;
        }
        let lead = line.text.len() - line.text.trim_start().len();
        if let Some(rest) = trimmed.strip_prefix("species ") {
            for name in rest.split([' ', ',']).filter(|s| !s.is_empty()) {
                if !name.starts_with(is_name_start) || !name.chars().all(is_name_char) {
                    let at = line.text.find(name).unwrap_or(0);
                    return Err(line.err(at, format!("invalid species name {name:?}")));
                }
                index(&mut species, name);
            }
            continue;
        }
        for (kw, sep, dest) in [("init ", '=', &mut inits), ("bound ", '<', &mut bounds)] {
            if let Some(rest) = trimmed.strip_prefix(kw) {
                let body_at = lead + kw.len();
                let (name, value) = rest
                    .split_once(sep)
                    .ok_or_else(|| line.err(body_at, format!("expected `{kw}Species {sep} n`")))?;
                let value = if sep == '<' {
                    value
                        .strip_prefix('=')
                        .ok_or_else(|| line.err(body_at + name.len(), "expected `<=`"))?
                } else {
                    value
                };
                let value_at = body_at + name.len() + 1 + (sep == '<') as usize;
                let n: u64 = value
                    .trim()
                    .parse()
                    .map_err(|_| line.err(value_at, "expected a nonnegative integer"))?;
                let name = name.trim();
                let name_at = body_at + rest.find(name).unwrap_or(0);
                dest.push((name.to_string(), n, line.number, name_at));
            }
        }
        if trimmed.starts_with("init ") || trimmed.starts_with("bound ") {
            continue;
        }

        let arrow = line
            .text
            .find("->")
            .ok_or_else(|| line.err(lead, "expected `->` in reaction"))?;
        let at = line.text[arrow..]
            .find('@')
            .map(|i| i + arrow)
            .ok_or_else(|| line.err(line.text.len(), "expected `@ rate` after the products"))?;
        let lhs = parse_side(&line, &line.text[..arrow], 0)?;
        let rhs = parse_side(&line, &line.text[arrow + 2..at], arrow + 2)?;
        let rate_text = &line.text[at + 1..];
        let rate = parse_rational(rate_text).map_err(|_| line.err(at + 1, "bad rate"))?;
        if !rate.is_positive() {
            return Err(line.err(at + 1, "rate must be positive"));
        }
        let mut collect = |side: Vec<(String, u64, usize)>| -> Side {
            let mut v: Side = Vec::new();
            for (name, c, _) in side {
                let i = index(&mut species, &name);
                match v.iter_mut().find(|(j, _)| *j == i) {
                    Some((_, acc)) => *acc += c,
                    None => v.push((i, c)),
                }
            }
            v
        };
        let r = collect(lhs);
        let p = collect(rhs);
        reactions.push((r, p, rate, line.number));
    }

    let n = species.len();
    let dense = |side: &Side| {
        let mut v = vec![0u64; n];
        for &(i, c) in side {
            v[i] = c;
        }
        v
    };
    let mut out = Vec::new();
    for (r, p, rate, number) in &reactions {
        let (r, p) = (dense(r), dense(p));
        if r == p {
            return Err(Error::parse(*number, 1, "reactants and products must differ"));
        }
        out.push(Reaction {
            reactants: r,
            products: p,
            rate: rate.clone(),
        });
    }
    let lookup = |name: &str, number: usize, col: usize| {
        species
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| Error::parse(number, col + 1, format!("unknown species {name:?}")))
    };
    let mut init = vec![0u64; n];
    for (name, c, number, col) in &inits {
        init[lookup(name, *number, *col)?] = *c;
    }
    let mut bound = vec![None; n];
    for (name, c, number, col) in &bounds {
        bound[lookup(name, *number, *col)?] = Some(*c);
    }
    CrnModel::new(species.clone(), out, init)?.with_bounds(bound)
}

/// Mass-action propensity `k * prod_Y q(Y)(q(Y)-1)...(q(Y)-r(Y)+1)`.
pub fn propensity(reaction: &Reaction, q: &[u64]) -> Rational {
    if !reaction.applicable(q) {
        return Rational::zero();
    }
    let mut p = reaction.rate.clone();
    for (&x, &r) in q.iter().zip(&reaction.reactants) {
        for j in 0..r {
            p *= Rational::from_integer((x - j).into());
        }
    }
    p
}

/// A reaction's rate in a given count vector.
pub type Propensity = fn(&Reaction, &[u64]) -> Rational;

/// The CTMC of a reaction network, with successors computed on demand.
pub struct CrnRates {
    codec: SpeciesCodec,
    reactions: Arc<Vec<Reaction>>,
    propensity: Propensity,
}

impl RateModel for CrnRates {
    fn rates(&self, q: &StateId) -> Result<Vec<(StateId, Rational)>> {
        let counts = self.codec.decode(q)?;
        let mut out: BTreeMap<StateId, Rational> = BTreeMap::new();
        for r in self.reactions.iter() {
            let a = (self.propensity)(r, &counts);
            if a.is_zero() {
                continue;
            }
            *out.entry(self.codec.encode(&r.apply(&counts)))
                .or_insert_with(Rational::zero) += a;
        }
        Ok(out.into_iter().collect())
    }
}

/// Compiles under mass-action kinetics.
pub fn crn_to_ctmc(n: &CrnModel) -> CtmcModel {
    crn_to_ctmc_with(n, propensity)
}

pub fn crn_to_ctmc_with(n: &CrnModel, propensity: Propensity) -> CtmcModel {
    let rates = CrnRates {
        codec: n.codec(),
        reactions: Arc::new(n.reactions.clone()),
        propensity,
    };
    CtmcModel::new(Arc::new(rates), Initialization::point(n.initial_state()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub seed: u64,
    pub max_events: usize,
    pub max_time: Option<f64>,
    pub depth: usize,
}

impl SimConfig {
    pub fn new(seed: u64, max_events: usize) -> Result<Self> {
        if max_events == 0 {
            return Err(Error::InvalidInput("max events must be at least 1".into()));
        }
        Ok(SimConfig {
            seed,
            max_events,
            max_time: None,
            depth: 0,
        })
    }
}

/// Simulates one trajectory on stream `stream` of the configured seed.
///
/// Each step draws the sojourn first and then the successor. Sojourns are
/// stored as the exact binary64 values produced.
pub fn ssa_simulate(model: &CtmcModel, cfg: &SimConfig, stream: u64) -> Result<Trajectory> {
    let mut rng = Stream::new(cfg.seed, stream);
    let support = model.init().support();
    let weights: Vec<Rational> = support.iter().map(|(_, w)| w.clone()).collect();
    let mut q = support[rng.choose(&weights)].0.clone();
    let mut events = Vec::new();
    let mut clock = 0.0f64;
    let end = loop {
        let row = model.rate_row(&q)?;
        let total: Rational = row.iter().map(|(_, k)| k).sum();
        if total.is_zero() {
            events.push((q, Duration::Infinite));
            break EndReason::Terminal;
        }
        if events.len() >= cfg.max_events {
            break EndReason::MaxEvents;
        }
        let lambda = total.to_f64().unwrap_or(f64::MAX);
        let t = rng.exponential(lambda);
        if cfg.max_time.is_some_and(|limit| clock + t > limit) {
            break EndReason::MaxTime;
        }
        clock += t;
        let rates: Vec<Rational> = row.iter().map(|(_, k)| k.clone()).collect();
        let next = row[rng.choose(&rates)].0.clone();
        events.push((q, Duration::from_f64(t)?));
        q = next;
    };
    let mut tau = Trajectory::new(events, end)?;
    tau.meta = TrajectoryMeta {
        seed: Some(cfg.seed),
        stream: Some(stream),
        model_hash: None,
    };
    Ok(tau)
}

/// Simulates runs `0..runs` on their own streams, in parallel.
pub fn ssa_simulate_runs(model: &CtmcModel, cfg: &SimConfig, runs: u64) -> Result<Vec<Trajectory>> {
    let workers = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(runs.max(1) as usize);
    let results: Vec<Vec<(u64, Result<Trajectory>)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers as u64)
            .map(|w| {
                scope.spawn(move || {
                    (w..runs)
                        .step_by(workers)
                        .map(|i| (i, ssa_simulate(model, cfg, i)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("simulation thread panicked"))
            .collect()
    });
    let mut flat: Vec<(u64, Result<Trajectory>)> = results.into_iter().flatten().collect();
    flat.sort_by_key(|(i, _)| *i);
    flat.into_iter().map(|(_, r)| r).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ZenoReport {
    /// Index of the first state exceeding a count bound.
    pub first_violation: Option<usize>,
    pub partial_sums: Vec<f64>,
    pub max_exit_rate: Rational,
    /// First encoded bit of each finite sojourn.
    pub first_bits: Vec<bool>,
    /// Length of the longest all-zero suffix of `first_bits`.
    pub zero_suffix: usize,
    /// Capital of the detector started where the zero suffix begins.
    pub detector_capital: Rational,
}

impl ZenoReport {
    pub fn bounds_respected(&self) -> bool {
        self.first_violation.is_none()
    }

    pub fn detector_start(&self) -> usize {
        self.first_bits.len() - self.zero_suffix
    }
}

impl fmt::Display for ZenoReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.first_violation {
            None => writeln!(f, "bounds respected")?,
            Some(i) => writeln!(f, "bound violated at index {i}")?,
        }
        writeln!(f, "events {}", self.first_bits.len())?;
        writeln!(f, "total time {:?}", self.partial_sums.last().copied().unwrap_or(0.0))?;
        writeln!(f, "max exit rate {}", render(&self.max_exit_rate))?;
        let bits: Bits = Bits::from_bools(self.first_bits.clone());
        writeln!(f, "first bits {bits}")?;
        writeln!(
            f,
            "zero suffix {} from index {}",
            self.zero_suffix,
            self.detector_start()
        )?;
        write!(f, "detector capital {}", render(&self.detector_capital))
    }
}

/// Summarizes a trajectory for the non-Zeno analysis. `bound` caps every
/// species; without it the model's own `bound` lines apply.
pub fn zeno_report(crn: &CrnModel, tau: &Trajectory, bound: Option<u64>, prec: &PrecisionConfig) -> Result<ZenoReport> {
    let model = crn_to_ctmc(crn);
    let codec = crn.codec();
    let limits: Vec<Option<u64>> = match bound {
        Some(b) => vec![Some(b); crn.species().len()],
        None => crn.bounds().to_vec(),
    };
    let mut first_violation = None;
    let mut partial_sums = Vec::new();
    let mut max_exit_rate = Rational::zero();
    let mut first_bits = Vec::new();
    let mut clock = 0.0f64;
    for (i, (q, t)) in tau.positions().iter().enumerate() {
        let counts = codec.decode(q)?;
        if first_violation.is_none() && counts.iter().zip(&limits).any(|(c, l)| l.is_some_and(|l| *c > l)) {
            first_violation = Some(i);
        }
        let rate = model.exit_rate(q)?;
        if rate > max_exit_rate {
            max_exit_rate = rate.clone();
        }
        if t.is_infinite() {
            break;
        }
        clock += t.to_f64();
        partial_sums.push(clock);
        let b = encode_time(&rate, t, 1, prec)?;
        first_bits.push(b.first() == Some(true));
    }
    let zero_suffix = first_bits.iter().rev().take_while(|&&one| !one).count();
    Ok(ZenoReport {
        first_violation,
        partial_sums,
        max_exit_rate,
        first_bits,
        zero_suffix,
        detector_capital: pow2(zero_suffix as i64),
    })
}
