//! Mallows-style synthetic elections.
//!
//! A cluster `C(σ, n, p)` holds `n` complete ballots, each the end of a random
//! walk from `σ` with a geometric number of uniformly placed adjacent swaps.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};

use crate::ballot::Ballot;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::profile::Profile;

#[derive(Debug, Clone, PartialEq)]
pub struct MallowsSpec {
    center: Ballot,
    n: u64,
    p: f64,
}

impl MallowsSpec {
    pub fn new(center: Ballot, n: u64, p: f64) -> Result<Self> {
        if !center.is_complete() {
            return Err(Error::param("cluster center must be a complete ranking"));
        }
        check_p(p)?;
        if n == 0 {
            return Err(Error::param("cluster size must be positive"));
        }
        Ok(MallowsSpec { center, n, p })
    }

    pub fn center(&self) -> &Ballot {
        &self.center
    }

    pub fn size(&self) -> u64 {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }
}

fn check_p(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::param(format!("p must lie in (0, 1), got {p}")))
    }
}

/// RNG for component `stream` of a seeded mixture.
pub fn component_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws one cluster from `rng`.
pub fn mallows_cluster<R: Rng>(spec: &MallowsSpec, rng: &mut R) -> Vec<Ballot> {
    let m = spec.center.num_candidates();
    let steps = Geometric::new(spec.p).expect("p validated");
    (0..spec.n)
        .map(|_| {
            let mut order = spec.center.ranking().to_vec();
            if m > 1 {
                for _ in 0..steps.sample(rng) {
                    let i = rng.random_range(0..m - 1);
                    order.swap(i, i + 1);
                }
            }
            Ballot::new(&order, m).expect("a permutation of a complete ranking")
        })
        .collect()
}

/// Union of independently drawn clusters; cluster `i` uses stream `i`.
pub fn mallows_mixture(specs: &[MallowsSpec], seed: u64, exec: Exec) -> Result<Profile> {
    let m = specs.first().ok_or_else(|| Error::param("mixture needs a cluster"))?.center.num_candidates();
    if specs.iter().any(|s| s.center.num_candidates() != m) {
        return Err(Error::param("mixture clusters must share candidates"));
    }
    let clusters = exec.map_range(specs.len(), |i| mallows_cluster(&specs[i], &mut component_rng(seed, i as u64)));
    Profile::from_ballots(m, clusters.into_iter().flatten().map(|b| (1, b)))
}

/// The benchmark election families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Benchmark {
    /// Two clusters of 300 and 700 at `p = 0.3` on five candidates.
    E,
    /// Two clusters of 300 and 700 on nine candidates.
    E2(f64),
    /// Three clusters of 200, 200 and 600 on nine candidates.
    E3(f64),
}

impl Benchmark {
    /// Parses `E`, `E2` or `E3`; `p` is required for the latter two.
    pub fn from_name(name: &str, p: Option<f64>) -> Result<Self> {
        let need_p = || p.ok_or_else(|| Error::param(format!("{name} needs a swap parameter p")));
        match name {
            "E" => Ok(Benchmark::E),
            "E2" => Ok(Benchmark::E2(need_p()?)),
            "E3" => Ok(Benchmark::E3(need_p()?)),
            _ => Err(Error::param(format!("unknown benchmark family '{name}'"))),
        }
    }

    /// Ground-truth clusters as (center, size, p).
    pub fn components(self) -> Vec<(&'static str, u64, f64)> {
        match self {
            Benchmark::E => vec![("ABCDE", 300, 0.3), ("EDCBA", 700, 0.3)],
            Benchmark::E2(p) => vec![("ABCDEFGHI", 300, p), ("HGEIFCBAD", 700, p)],
            Benchmark::E3(p) => vec![("ABCDEFGHI", 200, p), ("DFEAHBGCI", 200, p), ("HIGDEFCBA", 600, p)],
        }
    }

    pub fn num_candidates(self) -> usize {
        self.components()[0].0.len()
    }

    pub fn centers(self) -> Vec<Ballot> {
        let m = self.num_candidates();
        self.components().iter().map(|(c, _, _)| Ballot::from_letters(c, m).expect("valid center")).collect()
    }

    pub fn specs(self) -> Result<Vec<MallowsSpec>> {
        let m = self.num_candidates();
        self.components()
            .into_iter()
            .map(|(c, n, p)| MallowsSpec::new(Ballot::from_letters(c, m)?, n, p))
            .collect()
    }
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Benchmark::E => f.write_str("E"),
            Benchmark::E2(p) => write!(f, "E2({p})"),
            Benchmark::E3(p) => write!(f, "E3({p})"),
        }
    }
}

impl FromStr for Benchmark {
    type Err = Error;

    /// Accepts `E`, `E2(0.1)` or `E3(0.25)`.
    fn from_str(s: &str) -> Result<Self> {
        match s.split_once('(') {
            None => Benchmark::from_name(s, None),
            Some((name, rest)) => {
                let p = rest
                    .strip_suffix(')')
                    .and_then(|x| x.parse().ok())
                    .ok_or_else(|| Error::param(format!("bad benchmark '{s}'")))?;
                Benchmark::from_name(name, Some(p))
            }
        }
    }
}

pub fn benchmark_election(family: Benchmark, seed: u64, exec: Exec) -> Result<Profile> {
    mallows_mixture(&family.specs()?, seed, exec)
}
