//! Line-oriented trajectory files.
//!
//! ```text
//! # format ctmc-trajectory v1
//! # seed 7
//! X:1,Y:0	f64:0.25	0110@4
//! X:0,Y:1	inf	1111@4
//! # end terminal
//! ```
//!
//! A file holds one or more blocks, each opened by a `# format` line. Header
//! lines are `# key value`; event lines hold a state, a duration token and
//! optionally the encoded bits with their depth. The encoding column is
//! informational and can be recomputed from the durations.

#![allow(clippy::tabs_in_doc_comments)]

use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use crate::bits::Bits;
use crate::ctmc::{EndReason, Trajectory, TrajectorySpec};
use crate::error::{Error, Result};
use crate::sojourn::Duration;
use crate::transition::StateId;

pub const FORMAT: &str = "ctmc-trajectory v1";

/// Lowercase hex SHA-256 of `bytes`.
pub fn content_hash(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrajectoryBlock {
    pub headers: Vec<(String, String)>,
    pub trajectory: Trajectory,
    /// The stored encoding, when every event line carries one.
    pub encoded: Option<TrajectorySpec>,
}

impl TrajectoryBlock {
    pub fn header(&self, key: &str) -> Option<&str> {
        self.headers.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

/// Renders one block. `encoded`, when given, must have one pair per
/// position of `tau`; an empty trajectory with `header_only` set gets no
/// end trailer.
pub fn render_block(
    headers: &[(String, String)],
    tau: &Trajectory,
    encoded: Option<&TrajectorySpec>,
    header_only: bool,
) -> String {
    let mut out = format!("# format {FORMAT}\n");
    for (k, v) in headers {
        let _ = writeln!(out, "# {k} {v}");
    }
    if header_only {
        return out;
    }
    for (i, (q, t)) in tau.positions().iter().enumerate() {
        let _ = write!(out, "{q}\t{t}");
        if let Some((_, u)) = encoded.and_then(|w| w.pairs().get(i)) {
            let _ = write!(out, "\t{u}@{}", u.len());
        }
        out.push('\n');
    }
    let _ = writeln!(out, "# end {}", tau.end());
    out
}

struct Pending {
    headers: Vec<(String, String)>,
    events: Vec<(StateId, Duration)>,
    bits: Vec<Option<Bits>>,
    end: Option<EndReason>,
    start_line: usize,
}

impl Pending {
    fn new(start_line: usize) -> Self {
        Pending {
            headers: Vec::new(),
            events: Vec::new(),
            bits: Vec::new(),
            end: None,
            start_line,
        }
    }

    fn finish(self) -> Result<TrajectoryBlock> {
        let end = match self.end {
            Some(e) => e,
            None if self.events.is_empty() => EndReason::MaxEvents,
            None => return Err(Error::parse(self.start_line, 1, "block has no `# end` trailer")),
        };
        let encoded = if !self.bits.is_empty() && self.bits.iter().all(Option::is_some) {
            let pairs = self
                .events
                .iter()
                .zip(self.bits)
                .map(|((q, _), u)| (q.clone(), u.unwrap()))
                .collect();
            Some(TrajectorySpec::new(pairs))
        } else {
            None
        };
        let trajectory =
            Trajectory::new(self.events, end).map_err(|e| Error::parse(self.start_line, 1, e.to_string()))?;
        Ok(TrajectoryBlock {
            headers: self.headers,
            trajectory,
            encoded,
        })
    }
}

fn parse_bits(field: &str, line: usize, column: usize) -> Result<Bits> {
    let (u, depth) = field
        .split_once('@')
        .ok_or_else(|| Error::parse(line, column, "expected bits@depth"))?;
    let u: Bits = u.parse().map_err(|_| Error::parse(line, column, "bad bit string"))?;
    let depth: usize = depth
        .parse()
        .map_err(|_| Error::parse(line, column + u.len() + 1, "bad depth"))?;
    if depth != u.len() {
        return Err(Error::parse(line, column, "depth does not match the bit count"));
    }
    Ok(u)
}

pub fn parse_trajectory_file(text: &str) -> Result<Vec<TrajectoryBlock>> {
    let mut blocks = Vec::new();
    let mut cur: Option<Pending> = None;
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = raw.trim_end();
        if line.trim().is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            let (key, value) = rest.split_once(' ').unwrap_or((rest, ""));
            if key == "format" {
                if value != FORMAT {
                    return Err(Error::parse(ln, 10, format!("unsupported format {value:?}")));
                }
                if let Some(p) = cur.take() {
                    blocks.push(p.finish()?);
                }
                cur = Some(Pending::new(ln));
                continue;
            }
            let p = cur
                .as_mut()
                .ok_or_else(|| Error::parse(ln, 1, "expected `# format` first"))?;
            if p.end.is_some() {
                return Err(Error::parse(ln, 1, "content after `# end`"));
            }
            if key == "end" {
                p.end = Some(value.parse().map_err(|_| Error::parse(ln, 7, "bad end reason"))?);
            } else {
                p.headers.push((key.to_string(), value.to_string()));
            }
            continue;
        }
        let p = cur
            .as_mut()
            .ok_or_else(|| Error::parse(ln, 1, "expected `# format` first"))?;
        if p.end.is_some() {
            return Err(Error::parse(ln, 1, "content after `# end`"));
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if !(2..=3).contains(&fields.len()) {
            return Err(Error::parse(ln, 1, "expected state, duration and optional bits"));
        }
        let q = crate::transition::checked_state(fields[0], ln, 1)?;
        let col = fields[0].len() + 2;
        let t: Duration = fields[1]
            .parse()
            .map_err(|e: Error| Error::parse(ln, col, e.to_string()))?;
        let bits = match fields.get(2) {
            Some(f) => Some(parse_bits(f, ln, col + fields[1].len() + 1)?),
            None => None,
        };
        p.events.push((q, t));
        p.bits.push(bits);
    }
    if let Some(p) = cur {
        blocks.push(p.finish()?);
    }
    if blocks.is_empty() {
        return Err(Error::parse(1, 1, "no trajectory blocks"));
    }
    Ok(blocks)
}
