use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{bandit_step, full_info_step, AgentState, SolverParams};
use crate::channel::{FlagTrace, LinkFailureModel, NeighborCache};
use crate::error::{Error, Result};
use crate::graph::NetworkGraph;
use crate::metrics::{RoundRecord, RunRecord};
use crate::problems::{project_ball, CostStream, Objective, Problem};
use crate::rng::{stream_rng, Stream};
use crate::Vector;

/// `x_i^{(1)} = P(N(0, I))` onto the ball of the given radius.
pub fn initial_decisions<R: Rng + ?Sized>(rng: &mut R, n: usize, dim: usize, radius: f64) -> Vec<Vector> {
    (0..n)
        .map(|_| {
            let g = Vector::from_fn(dim, |_, _| StandardNormal.sample(rng));
            project_ball(&g, radius).expect("finite gaussian draw")
        })
        .collect()
}

/// Round-by-round driver: decide, reveal, exchange, update.
pub struct Simulation<'g, S: CostStream> {
    graph: &'g NetworkGraph,
    problem: Problem<S>,
    channel: LinkFailureModel,
    params: SolverParams,
    states: Vec<AgentState>,
    cache: NeighborCache,
    bandit_rng: ChaCha8Rng,
    round: usize,
    history: Vec<Vec<S::Cost>>,
    record: RunRecord,
    trace: FlagTrace,
}

/// Everything a finished run leaves behind.
#[derive(Debug, Clone)]
pub struct RunOutput<C> {
    pub record: RunRecord,
    /// Revealed costs, `history[t - 1][i] = f_i^{(t)}`.
    pub history: Vec<Vec<C>>,
    pub trace: FlagTrace,
    pub final_states: Vec<AgentState>,
}

impl<'g, S: CostStream> Simulation<'g, S> {
    pub fn new(
        graph: &'g NetworkGraph,
        problem: Problem<S>,
        channel: LinkFailureModel,
        params: SolverParams,
        seed: u64,
    ) -> Result<Self> {
        let n = graph.num_agents();
        let d = problem.set.dim();
        if problem.stream.num_agents() != n {
            return Err(Error::DimensionMismatch { expected: n, got: problem.stream.num_agents() });
        }
        if problem.stream.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: problem.stream.dim() });
        }
        if problem.constraints.num_pairs() != graph.num_directed_pairs() {
            return Err(Error::DimensionMismatch {
                expected: graph.num_directed_pairs(),
                got: problem.constraints.num_pairs(),
            });
        }
        let radius = match params.bandit {
            Some(b) => (1.0 - b.alpha) * problem.set.radius(),
            None => problem.set.radius(),
        };
        let mut init_rng = stream_rng(seed, Stream::Init);
        let states = initial_decisions(&mut init_rng, n, d, radius)
            .into_iter()
            .enumerate()
            .map(|(i, x)| AgentState { x, lambda: vec![0.0; graph.degree(i)] })
            .collect();
        Ok(Self {
            graph,
            cache: NeighborCache::new(graph, d),
            trace: FlagTrace::new(graph.num_directed_pairs()),
            problem,
            channel,
            params,
            states,
            bandit_rng: stream_rng(seed, Stream::Bandit),
            round: 0,
            history: Vec::with_capacity(params.horizon),
            record: RunRecord::default(),
        })
    }

    /// Replaces the initial decisions (before the first round only).
    pub fn set_decisions(&mut self, xs: Vec<Vector>) -> Result<()> {
        if self.round != 0 || xs.len() != self.states.len() {
            return Err(Error::InvalidArgument("decisions can only be set before round 1".into()));
        }
        for (s, x) in self.states.iter_mut().zip(xs) {
            s.x = x;
        }
        Ok(())
    }

    pub fn states(&self) -> &[AgentState] {
        &self.states
    }

    pub fn cache(&self) -> &NeighborCache {
        &self.cache
    }

    pub fn problem(&self) -> &Problem<S> {
        &self.problem
    }

    /// Rounds completed so far.
    pub fn round(&self) -> usize {
        self.round
    }

    pub fn is_finished(&self) -> bool {
        self.round >= self.params.horizon
    }

    /// Plays one round. The update producing `x^{(t+1)}` is skipped in the
    /// last round.
    pub fn step(&mut self) -> Result<()> {
        if self.is_finished() {
            return Err(Error::InvalidArgument("horizon exhausted".into()));
        }
        self.round += 1;
        let t = self.round;
        let costs = self.problem.stream.next_round();
        let decisions: Vec<Vector> = self.states.iter().map(|s| s.x.clone()).collect();

        let flags = self.channel.exchange_round(self.graph, &mut self.cache, &decisions)?;
        let delivered = flags.iter().filter(|&&f| f).count();
        let delivered_frac = if flags.is_empty() { 1.0 } else { delivered as f64 / flags.len() as f64 };

        let total_cost = costs.iter().zip(&decisions).map(|(f, x)| f.value(x)).sum();
        let pair_values = self
            .graph
            .directed_pairs()
            .into_iter()
            .enumerate()
            .map(|(k, (i, j))| self.problem.constraints.pair_value(k, &decisions[i], &decisions[j]))
            .collect();

        let mut max_query_norm = None;
        if t < self.params.horizon {
            let Problem { set, constraints, .. } = &self.problem;
            if self.params.bandit.is_some() {
                let queries = bandit_step(
                    self.graph,
                    constraints,
                    set,
                    &self.params,
                    &mut self.states,
                    &self.cache,
                    |i, x| costs[i].value(x),
                    &mut self.bandit_rng,
                )?;
                max_query_norm = queries
                    .iter()
                    .flat_map(|q| [q.plus.norm(), q.minus.norm()])
                    .reduce(f64::max);
            } else {
                let grads: Vec<Vector> =
                    costs.iter().zip(&decisions).map(|(f, x)| f.gradient(x)).collect();
                full_info_step(
                    self.graph,
                    constraints,
                    set,
                    &self.params,
                    &mut self.states,
                    &self.cache,
                    &grads,
                )?;
            }
        }

        self.record.rounds.push(RoundRecord {
            t,
            decisions,
            total_cost,
            pair_values,
            delivered_frac,
            max_query_norm,
        });
        self.trace.push(flags);
        self.history.push(costs);
        Ok(())
    }

    pub fn finish(mut self) -> Result<RunOutput<S::Cost>> {
        while !self.is_finished() {
            self.step()?;
        }
        Ok(RunOutput {
            record: self.record,
            history: self.history,
            trace: self.trace,
            final_states: self.states,
        })
    }
}

/// Plays the full horizon `params.horizon`.
pub fn run<S: CostStream>(
    problem: Problem<S>,
    graph: &NetworkGraph,
    channel: LinkFailureModel,
    params: SolverParams,
    seed: u64,
) -> Result<RunOutput<S::Cost>> {
    Simulation::new(graph, problem, channel, params, seed)?.finish()
}
