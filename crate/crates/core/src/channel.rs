//! Bernoulli link failures on directed transmissions and the receiver-side
//! cache of the latest neighbor decisions.

use std::fmt::Write as _;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::NetworkGraph;
use crate::rng::{keyed_rng, stream_rng, Stream};
use crate::Vector;

/// Failure probabilities `p_ij` (transmission from `j` to receiver `i`),
/// indexed by directed pair, with one random substream per pair.
#[derive(Debug, Clone)]
pub struct LinkFailureModel {
    probs: Vec<f64>,
    pair_rngs: Vec<ChaCha8Rng>,
    round: usize,
}

impl LinkFailureModel {
    /// `probs[k]` is the failure probability of directed pair `k` of
    /// `graph.directed_pairs()`.
    pub fn new(graph: &NetworkGraph, probs: Vec<f64>, seed: u64) -> Result<Self> {
        let pairs = graph.directed_pairs();
        if probs.len() != pairs.len() {
            let (i, j) = pairs.get(probs.len()).copied().unwrap_or((0, 0));
            return Err(Error::MissingProbability(i, j));
        }
        for (&(i, j), &p) in pairs.iter().zip(&probs) {
            if !(0.0..1.0).contains(&p) {
                return Err(Error::ProbabilityOutOfRange { i, j, p });
            }
        }
        let pair_rngs = (0..pairs.len())
            .map(|k| keyed_rng(seed, Stream::Channel, k as u64))
            .collect();
        Ok(Self { probs, pair_rngs, round: 0 })
    }

    /// Looks each directed pair up in `lookup`; a `None` is a missing pair.
    pub fn from_lookup(
        graph: &NetworkGraph,
        lookup: impl Fn(usize, usize) -> Option<f64>,
        seed: u64,
    ) -> Result<Self> {
        let probs = graph
            .directed_pairs()
            .into_iter()
            .map(|(i, j)| lookup(i, j).ok_or(Error::MissingProbability(i, j)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(graph, probs, seed)
    }

    pub fn perfect(graph: &NetworkGraph, seed: u64) -> Self {
        Self::new(graph, vec![0.0; graph.num_directed_pairs()], seed).expect("zero probabilities")
    }

    /// Probabilities `lo + (hi - lo) v_k` with `v_k ~ U[0, 1]` drawn from
    /// the seed, so runs sharing a seed see nested failure levels.
    pub fn uniform_range(graph: &NetworkGraph, lo: f64, hi: f64, seed: u64) -> Result<Self> {
        Self::new(graph, uniform_range_probabilities(graph, lo, hi, seed), seed)
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    /// Largest failure probability, `p_bar`.
    pub fn max_probability(&self) -> f64 {
        self.probs.iter().copied().fold(0.0, f64::max)
    }

    /// Rounds exchanged so far.
    pub fn round(&self) -> usize {
        self.round
    }

    /// Delivers every agent's decision over every directed link. Round 1 is
    /// always reliable; afterwards pair `k` fails with probability `p_k`.
    /// Returns one delivery flag per directed pair.
    pub fn exchange_round(
        &mut self,
        graph: &NetworkGraph,
        cache: &mut NeighborCache,
        decisions: &[Vector],
    ) -> Result<Vec<bool>> {
        if decisions.len() != graph.num_agents() {
            return Err(Error::DimensionMismatch {
                expected: graph.num_agents(),
                got: decisions.len(),
            });
        }
        if let Some(x) = decisions.iter().find(|x| x.len() != cache.dim) {
            return Err(Error::DimensionMismatch { expected: cache.dim, got: x.len() });
        }
        self.round += 1;
        let first = self.round == 1;
        let mut flags = Vec::with_capacity(self.probs.len());
        for (k, (i, j)) in graph.directed_pairs().into_iter().enumerate() {
            let delivered = if first {
                true
            } else {
                let u: f64 = self.pair_rngs[k].random();
                u >= self.probs[k]
            };
            debug_assert_eq!(k, graph.pair_index(i, j).unwrap());
            if delivered {
                cache.entries[k].clone_from(&decisions[j]);
                cache.last_success[k] = self.round;
            }
            flags.push(delivered);
        }
        Ok(flags)
    }
}

/// Probability vector used by [`LinkFailureModel::uniform_range`].
pub fn uniform_range_probabilities(graph: &NetworkGraph, lo: f64, hi: f64, seed: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, Stream::Probabilities);
    (0..graph.num_directed_pairs())
        .map(|_| lo + (hi - lo) * rng.random::<f64>())
        .collect()
}

/// Receiver-side copies `x_{j->i}`, indexed by directed pair `(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborCache {
    dim: usize,
    entries: Vec<Vector>,
    last_success: Vec<usize>,
}

impl NeighborCache {
    /// Empty cache; round 0 marks entries that were never delivered.
    pub fn new(graph: &NetworkGraph, dim: usize) -> Self {
        let m = graph.num_directed_pairs();
        Self {
            dim,
            entries: vec![Vector::zeros(dim); m],
            last_success: vec![0; m],
        }
    }

    pub fn get(&self, pair: usize) -> &Vector {
        &self.entries[pair]
    }

    pub fn last_success_round(&self, pair: usize) -> usize {
        self.last_success[pair]
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Delivery flags of a whole run, one row per round.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FlagTrace {
    pub pairs: usize,
    pub rounds: Vec<Vec<bool>>,
}

impl FlagTrace {
    pub fn new(pairs: usize) -> Self {
        Self { pairs, rounds: Vec::new() }
    }

    pub fn push(&mut self, flags: Vec<bool>) {
        debug_assert_eq!(flags.len(), self.pairs);
        self.rounds.push(flags);
    }

    /// Header `pairs=<m>`, then per round `<t> <flag of pair 0> ... <flag of pair m-1>`.
    pub fn to_text(&self) -> String {
        let mut out = format!("pairs={}\n", self.pairs);
        for (t, row) in self.rounds.iter().enumerate() {
            let _ = write!(out, "{}", t + 1);
            for &f in row {
                out.push_str(if f { " 1" } else { " 0" });
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |msg: String| Error::InvalidArgument(format!("flag trace: {msg}"));
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| bad("empty input".into()))?;
        let pairs: usize = header
            .trim()
            .strip_prefix("pairs=")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad(format!("bad header `{header}`")))?;
        let mut trace = Self::new(pairs);
        for (t, line) in lines.enumerate() {
            let mut fields = line.split_whitespace();
            let round: usize = fields
                .next()
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| bad(format!("bad round in `{line}`")))?;
            if round != t + 1 {
                return Err(bad(format!("expected round {}, found {round}", t + 1)));
            }
            let row = fields
                .map(|f| match f {
                    "1" => Ok(true),
                    "0" => Ok(false),
                    other => Err(bad(format!("bad flag `{other}`"))),
                })
                .collect::<Result<Vec<_>>>()?;
            if row.len() != pairs {
                return Err(bad(format!("round {round} has {} flags, expected {pairs}", row.len())));
            }
            trace.rounds.push(row);
        }
        Ok(trace)
    }
}
