use std::fmt::Write as _;
use std::path::Path;

use ctmc_randomness::crn::{crn_to_ctmc, parse_crn, CrnModel};
use ctmc_randomness::ctmc::{parse_ctmc_table, CtmcModel, RateTable};
use ctmc_randomness::rational::render;
use ctmc_randomness::transition::{
    parse_transition_table, Initialization, ProbabilisticTransitionSystem, TransitionTable,
};
use ctmc_randomness::{Error, Result};

pub enum Model {
    Crn(CrnModel),
    Ctmc(CtmcModel),
    Pts(TransitionTable, Initialization),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Crn,
    Ctmc,
    Pts,
}

fn sniff(path: &Path, text: &str) -> Format {
    match path.extension().and_then(|e| e.to_str()) {
        Some("crn") => return Format::Crn,
        Some("ctmc") => return Format::Ctmc,
        Some("pts") => return Format::Pts,
        _ => {}
    }
    let lines = text.lines().map(|l| l.split('#').next().unwrap_or("").trim());
    let mut saw_rate = false;
    for l in lines {
        if l.starts_with("species") || l.starts_with("bound") || (l.starts_with("init") && l.contains('=')) {
            return Format::Crn;
        }
        if l.contains('+') && l.contains("->") {
            return Format::Crn;
        }
        saw_rate |= l.contains('@');
    }
    if saw_rate {
        Format::Ctmc
    } else {
        Format::Pts
    }
}

pub fn parse_model(path: &Path, text: &str) -> Result<Model> {
    Ok(match sniff(path, text) {
        Format::Crn => Model::Crn(parse_crn(text)?),
        Format::Ctmc => Model::Ctmc(parse_ctmc_table(text)?),
        Format::Pts => {
            let (t, init) = parse_transition_table(text)?;
            Model::Pts(t, init)
        }
    })
}

/// A transition table becomes a chain with unit exit rates, so its jump
/// probabilities are the table's weights.
fn pts_to_ctmc(t: &TransitionTable, init: &Initialization) -> Result<CtmcModel> {
    let states = t.states().unwrap_or_default();
    let mut entries = Vec::new();
    for q in &states {
        for (r, p) in t.successors(q)? {
            entries.push((q.clone(), r, p));
        }
    }
    let mut table = RateTable::new(entries)?;
    for q in states {
        table.add_state(q);
    }
    Ok(CtmcModel::from_table(table, init.clone()))
}

impl Model {
    pub fn ctmc(&self) -> Result<CtmcModel> {
        match self {
            Model::Crn(n) => Ok(crn_to_ctmc(n)),
            Model::Ctmc(c) => Ok(c.clone()),
            Model::Pts(t, init) => pts_to_ctmc(t, init),
        }
    }

    pub fn summary(&self) -> Result<String> {
        let mut out = String::new();
        match self {
            Model::Crn(n) => {
                let c = crn_to_ctmc(n);
                let q0 = n.initial_state();
                let _ = writeln!(out, "model crn");
                let _ = writeln!(out, "species {}", n.species().join(" "));
                let _ = writeln!(out, "reactions {}", n.reactions().len());
                let body = n.to_string();
                for (i, line) in body.lines().filter(|l| l.contains("->")).enumerate() {
                    let _ = writeln!(out, "reaction {i} {line}");
                }
                let _ = writeln!(out, "init {q0}");
                let _ = writeln!(out, "init-exit-rate {}", render(&c.exit_rate(&q0)?));
                let _ = writeln!(out, "init-terminal {}", if c.is_terminal(&q0)? { "yes" } else { "no" });
            }
            Model::Ctmc(c) => table_summary(&mut out, "ctmc", c)?,
            Model::Pts(t, init) => table_summary(&mut out, "pts", &pts_to_ctmc(t, init)?)?,
        }
        Ok(out)
    }
}

fn table_summary(out: &mut String, kind: &str, c: &CtmcModel) -> Result<()> {
    let states = c.states().ok_or_else(|| Error::NotEnumerable("model".into()))?;
    let mut transitions = 0;
    let mut terminal = Vec::new();
    for q in &states {
        let row = c.rate_row(q)?;
        transitions += row.len();
        if row.is_empty() {
            terminal.push(q.as_str());
        }
    }
    let _ = writeln!(out, "model {kind}");
    let names: Vec<&str> = states.iter().map(|q| q.as_str()).collect();
    let _ = writeln!(out, "states {} {}", states.len(), names.join(" "));
    let _ = writeln!(out, "transitions {transitions}");
    for q in &states {
        for (r, k) in c.rate_row(q)? {
            let sep = if kind == "pts" { ":" } else { "@" };
            let _ = writeln!(out, "transition {q} -> {r} {sep} {}", render(&k));
        }
    }
    for (q, w) in c.init().support() {
        let _ = writeln!(out, "init {q} {}", render(w));
    }
    let _ = writeln!(
        out,
        "terminal {}",
        if terminal.is_empty() {
            "-".into()
        } else {
            terminal.join(" ")
        }
    );
    Ok(())
}
