use std::fmt;

use num_traits::{Signed, Zero};

use crate::bits::Bits;
use crate::ctmc::{mu_traj, CtmcModel, TrajectorySpec};
use crate::error::{Error, Result};
use crate::rational::{render, Rational};
use crate::sojourn::{mu_duration, RateSequence};
use crate::transition::{mu_state, Initialization, ProbabilisticTransitionSystem, StateId};

use super::{DurationMartingale, Kind, StateMartingale, TrajectoryMartingale};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VerifyOptions {
    /// Maximum size of the checked nodes (see each verifier).
    pub depth: usize,
    /// Maximum number of nodes visited before giving up.
    pub budget: usize,
}

impl VerifyOptions {
    pub fn depth(depth: usize) -> Self {
        VerifyOptions {
            depth,
            budget: 1_000_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Condition {
    /// `d(x) mu(x) = sum_y d(y) mu(y)` over one-step state extensions.
    StateAveraging,
    /// Averaging over the next bit of the last component.
    DurationAveraging,
    /// Appending an empty component does not change capital.
    DurationNoBet,
    /// Averaging over the next state.
    TrajectoryState,
    /// Averaging over the next bit of the last sojourn.
    TrajectoryBit,
    /// Capital is nonnegative.
    Nonnegative,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::StateAveraging => "state",
            Condition::DurationAveraging => "averaging",
            Condition::DurationNoBet => "no-bet",
            Condition::TrajectoryState => "A",
            Condition::TrajectoryBit => "B",
            Condition::Nonnegative => "nonnegative",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Residual {
    pub node: String,
    pub condition: Condition,
    /// Left side minus right side.
    pub value: Rational,
}

const KEPT_RESIDUALS: usize = 32;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FairnessReport {
    pub kind: Kind,
    pub strategy: String,
    pub depth: usize,
    pub nodes: usize,
    pub checks: usize,
    /// The first nonzero residuals, in visiting order.
    pub residuals: Vec<Residual>,
    pub violations: usize,
    pub max_abs_residual: Rational,
    pub exact: bool,
}

impl FairnessReport {
    fn new(kind: Kind, strategy: String, depth: usize) -> Self {
        FairnessReport {
            kind,
            strategy,
            depth,
            nodes: 0,
            checks: 0,
            residuals: Vec::new(),
            violations: 0,
            max_abs_residual: Rational::zero(),
            exact: true,
        }
    }

    pub fn pass(&self) -> bool {
        self.violations == 0
    }

    fn record(&mut self, node: impl FnOnce() -> String, condition: Condition, value: Rational) {
        self.checks += 1;
        if value.is_zero() {
            return;
        }
        self.violations += 1;
        let a = value.abs();
        if a > self.max_abs_residual {
            self.max_abs_residual = a;
        }
        if self.residuals.len() < KEPT_RESIDUALS {
            self.residuals.push(Residual {
                node: node(),
                condition,
                value,
            });
        }
    }

    fn visit(&mut self, budget: usize) -> Result<()> {
        self.nodes += 1;
        if self.nodes > budget {
            return Err(Error::BudgetExceeded(budget));
        }
        Ok(())
    }

    fn nonnegative(&mut self, node: impl FnOnce() -> String, capital: &Rational) {
        if capital.is_negative() {
            self.record(node, Condition::Nonnegative, capital.clone());
        }
    }
}

impl fmt::Display for FairnessReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.residuals {
            writeln!(
                f,
                "residual condition={} node={} value={}",
                r.condition,
                r.node,
                render(&r.value)
            )?;
        }
        write!(
            f,
            "fairness kind={} strategy={} depth={} nodes={} checks={} violations={} max_residual={} exact={} verdict={}",
            self.kind,
            self.strategy,
            self.depth,
            self.nodes,
            self.checks,
            self.violations,
            render(&self.max_abs_residual),
            self.exact,
            if self.pass() { "pass" } else { "FAIL" }
        )
    }
}

fn render_states(x: &[StateId]) -> String {
    if x.is_empty() {
        return "()".into();
    }
    x.iter().map(|q| q.as_str()).collect::<Vec<_>>().join(" ")
}

/// Checks `d(x) mu(x) = sum_y d(y) mu(y)` at every non-terminating admissible
/// `x` with `|x| < depth`.
pub fn verify_state_fairness(
    d: &dyn StateMartingale,
    sys: &dyn ProbabilisticTransitionSystem,
    init: &Initialization,
    opts: VerifyOptions,
) -> Result<FairnessReport> {
    let mut report = FairnessReport::new(Kind::State, d.describe(), opts.depth);
    let mut stack: Vec<Vec<StateId>> = vec![Vec::new()];
    while let Some(x) = stack.pop() {
        report.visit(opts.budget)?;
        let mu = mu_state(sys, init, &x)?;
        if mu.is_zero() {
            continue;
        }
        let dx = d.capital(&x)?;
        report.nonnegative(|| render_states(&x), &dx);
        if x.len() >= opts.depth {
            continue;
        }
        let next: Vec<(StateId, Rational)> = match x.last() {
            None => init.support().to_vec(),
            Some(q) => sys.successors(q)?,
        };
        if next.is_empty() {
            continue;
        }
        let mut rhs = Rational::zero();
        for (q, _) in &next {
            let mut y = x.clone();
            y.push(q.clone());
            let mu_y = mu_state(sys, init, &y)?;
            if !mu_y.is_zero() {
                rhs += d.capital(&y)? * mu_y;
            }
            stack.push(y);
        }
        report.record(|| render_states(&x), Condition::StateAveraging, dx * mu - rhs);
    }
    Ok(report)
}

fn render_tuple(w: &[Bits]) -> String {
    let parts: Vec<String> = w.iter().map(|u| format!("({u})")).collect();
    if parts.is_empty() {
        "()".into()
    } else {
        parts.join("")
    }
}

/// Checks the averaging and no-bet conditions over tuples with
/// `|w| + sum |w_i| < depth` and `|w|` within the rate sequence.
pub fn verify_duration_fairness(
    d: &dyn DurationMartingale,
    rates: &RateSequence,
    opts: VerifyOptions,
) -> Result<FairnessReport> {
    let mut report = FairnessReport::new(Kind::Duration, d.describe(), opts.depth);
    let mut stack: Vec<Vec<Bits>> = vec![Vec::new()];
    while let Some(w) = stack.pop() {
        report.visit(opts.budget)?;
        let dw = d.capital(&w)?;
        report.nonnegative(|| render_tuple(&w), &dw);
        let size = w.len() + w.iter().map(Bits::len).sum::<usize>();
        if size >= opts.depth {
            continue;
        }
        if let Some(last) = w.last() {
            // The measure of each half is exactly half, so averaging capital
            // is the measure-weighted condition.
            let mu = mu_duration(rates, &w)?;
            let mut rhs = Rational::zero();
            for b in [false, true] {
                let mut v = w.clone();
                *v.last_mut().unwrap() = last.with(b);
                rhs += d.capital(&v)? * mu_duration(rates, &v)?;
                stack.push(v);
            }
            report.record(|| render_tuple(&w), Condition::DurationAveraging, &dw * mu - rhs);
        }
        if w.len() < rates.len() {
            let mut v = w.clone();
            v.push(Bits::empty());
            let dv = d.capital(&v)?;
            report.record(|| render_tuple(&w), Condition::DurationNoBet, &dw - dv);
            stack.push(v);
        }
    }
    Ok(report)
}

/// Checks condition (A) at every reachable positive-measure spec whose last
/// state is nonterminal (and at the empty spec), and condition (B) at every
/// nonempty positive-measure spec, over specs with `|w| + sum |u_i| < depth`.
pub fn verify_trajectory_fairness(
    d: &dyn TrajectoryMartingale,
    c: &CtmcModel,
    opts: VerifyOptions,
) -> Result<FairnessReport> {
    let mut report = FairnessReport::new(Kind::Trajectory, d.describe(), opts.depth);
    let mut stack: Vec<(TrajectorySpec, Rational, Rational)> = Vec::new();
    let root = TrajectorySpec::empty();
    let root_mu = mu_traj(c, &root)?;
    let root_d = d.capital(&root)?;
    stack.push((root, root_mu, root_d));
    while let Some((w, mu, dw)) = stack.pop() {
        report.visit(opts.budget)?;
        report.nonnegative(|| w.to_string(), &dw);
        if w.tree_depth() >= opts.depth {
            continue;
        }
        let weighted = &dw * &mu;
        let mut children: Vec<(TrajectorySpec, Rational, Rational)> = Vec::new();

        let state_bets = match w.last() {
            None => Some(c.init().support().iter().map(|(q, _)| q.clone()).collect::<Vec<_>>()),
            Some((q, _)) if !c.is_terminal(q)? => Some(c.jump_row(q)?.into_iter().map(|(r, _)| r).collect()),
            Some(_) => None,
        };
        if let Some(next) = state_bets {
            let mut rhs = Rational::zero();
            for q in next {
                let v = w.with_state(q);
                let mu_v = mu_traj(c, &v)?;
                if !mu_v.is_zero() {
                    let d_v = d.capital(&v)?;
                    rhs += &d_v * &mu_v;
                    children.push((v, mu_v, d_v));
                }
            }
            report.record(|| w.to_string(), Condition::TrajectoryState, &weighted - rhs);
        }

        if !w.is_empty() {
            let mut rhs = Rational::zero();
            for b in [false, true] {
                let v = w.with_bit(b);
                let mu_v = mu_traj(c, &v)?;
                if !mu_v.is_zero() {
                    let d_v = d.capital(&v)?;
                    rhs += &d_v * &mu_v;
                    children.push((v, mu_v, d_v));
                }
            }
            report.record(|| w.to_string(), Condition::TrajectoryBit, &weighted - rhs);
        }
        stack.extend(children);
    }
    Ok(report)
}
