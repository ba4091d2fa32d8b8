//! `--martingale NAME:key=value:...` selection.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use ctmc_randomness::ctmc::{parse_cover, CtmcModel};
use ctmc_randomness::martingale::{
    cover_savings_sum, cover_to_martingale, duration_first_bit_martingale, lift_state_martingale, savings_martingale,
    sojourn_index_martingale, sum_martingales, zeno_detector, Constant, DoubleOnZero, RandomBetTree,
    RandomStateBetTree, Strategy, TrajectoryMartingale,
};
use ctmc_randomness::rational::{parse_rational, Rational};
use ctmc_randomness::{Error, Result};
use num_traits::One;

pub const NAMES: &str = "constant:c=R, zeno:i=N, cover:file=PATH:k=N, savings-cover:file=PATH:k=N, \
cover-sum:file=PATH:k=N, sojourn:n=N, sojourn-sum:n=N, lift:seed=N:depth=N, bettree:seed=N:depth=N, firstbit:m=N";

struct Params {
    name: String,
    values: BTreeMap<String, String>,
}

impl Params {
    fn parse(text: &str) -> Result<Self> {
        let mut parts = text.split(':');
        let name = parts.next().unwrap_or("").to_string();
        let mut values = BTreeMap::new();
        for p in parts {
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| Error::InvalidInput(format!("martingale parameter {p:?} is not key=value")))?;
            values.insert(k.to_string(), v.to_string());
        }
        Ok(Params { name, values })
    }

    fn get(&self, key: &str) -> Result<&str> {
        self.values
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::InvalidInput(format!("martingale {} needs {key}=", self.name)))
    }

    fn usize(&self, key: &str) -> Result<usize> {
        let v = self.get(key)?;
        v.parse()
            .map_err(|_| Error::InvalidInput(format!("{key}={v} is not a nonnegative integer")))
    }

    fn u32(&self, key: &str) -> Result<u32> {
        let v = self.get(key)?;
        v.parse()
            .map_err(|_| Error::InvalidInput(format!("{key}={v} is not a nonnegative integer")))
    }
}

fn read(path: &str) -> Result<String> {
    std::fs::read_to_string(Path::new(path)).map_err(|e| Error::InvalidInput(format!("{path}: {e}")))
}

pub fn build(text: &str, c: &CtmcModel) -> Result<Strategy> {
    let p = Params::parse(text)?;
    let traj = |d: Arc<dyn TrajectoryMartingale>| Ok(Strategy::Trajectory(d));
    match p.name.as_str() {
        "constant" => {
            let v: Rational = parse_rational(p.get("c")?)?;
            traj(Arc::new(Constant(v)))
        }
        "zeno" => traj(Arc::new(zeno_detector(c.clone(), p.usize("i")?))),
        "cover" | "savings-cover" | "cover-sum" => {
            let cover = parse_cover(&read(p.get("file")?)?)?;
            let k = p.u32("k")?;
            match p.name.as_str() {
                "cover" => traj(Arc::new(cover_to_martingale(c, &cover, k)?)),
                "savings-cover" => {
                    let d = Arc::new(cover_to_martingale(c, &cover, k)?);
                    traj(Arc::new(savings_martingale(d)))
                }
                _ => traj(Arc::new(cover_savings_sum(c, &cover, k)?)),
            }
        }
        "sojourn" => traj(Arc::new(sojourn_index_martingale(
            Arc::new(DoubleOnZero),
            p.usize("n")?,
            c.clone(),
        )?)),
        "sojourn-sum" => {
            let n = p.usize("n")?;
            let mut parts: Vec<(Arc<dyn TrajectoryMartingale>, Rational)> = Vec::new();
            for i in 0..n {
                parts.push((
                    Arc::new(sojourn_index_martingale(Arc::new(DoubleOnZero), i, c.clone())?),
                    Rational::one(),
                ));
            }
            traj(Arc::new(sum_martingales(parts, Some(n))?))
        }
        "lift" => {
            let d = RandomStateBetTree {
                sys: Arc::new(c.embedded_chain()),
                init: c.init().clone(),
                seed: p
                    .get("seed")?
                    .parse()
                    .map_err(|_| Error::InvalidInput("bad seed".into()))?,
                max_depth: p.usize("depth")?,
            };
            traj(Arc::new(lift_state_martingale(Arc::new(d))))
        }
        "bettree" => traj(Arc::new(RandomBetTree {
            model: c.clone(),
            seed: p
                .get("seed")?
                .parse()
                .map_err(|_| Error::InvalidInput("bad seed".into()))?,
            max_depth: p.usize("depth")?,
        })),
        "firstbit" => Ok(Strategy::Duration(Arc::new(duration_first_bit_martingale(
            p.usize("m")?,
        )?))),
        other => Err(Error::InvalidInput(format!(
            "unknown martingale {other:?}; known: {NAMES}"
        ))),
    }
}
