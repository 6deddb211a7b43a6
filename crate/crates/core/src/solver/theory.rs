use serde::{Deserialize, Serialize};

use super::Feedback;
use crate::error::{Error, Result};
use crate::graph::NetworkGraph;
use crate::problems::ProblemConstants;

/// Quantities entering the stepsize/regularization rule of the regret
/// bounds. `beta` only appears in the analysis and is carried for reporting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    pub omega: f64,
    pub gamma: f64,
    pub beta: f64,
    pub eta: f64,
    /// Admissible `delta` range; both ends solve `2 eta^2 delta^2 - delta + omega = 0`.
    pub delta_interval: (f64, f64),
    /// Smallest horizon with `T >= 8 a^2 omega`.
    pub min_horizon: usize,
}

impl DerivedConstants {
    /// The choice used in theorem mode: the lower end of the interval.
    pub fn theorem_delta(&self) -> f64 {
        self.delta_interval.0
    }
}

/// Midpoint of `(0, 1/p_bar - 1)`; with perfect links any positive value
/// is admissible and 1 is used.
pub fn default_beta(max_failure_probability: f64) -> f64 {
    if max_failure_probability > 0.0 {
        0.5 * (1.0 / max_failure_probability - 1.0)
    } else {
        1.0
    }
}

/// `omega`, `gamma` and `beta` before any horizon requirement is imposed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingConstants {
    pub omega: f64,
    pub gamma: f64,
    pub beta: f64,
}

impl CouplingConstants {
    /// Smallest horizon with `T >= 8 a^2 omega`.
    pub fn min_horizon(&self, a: f64) -> usize {
        (8.0 * a * a * self.omega).ceil().max(1.0) as usize
    }
}

/// `probs[k]` is the failure probability of directed pair `k` of
/// `graph.directed_pairs()`, i.e. `p_ij` for the link `j -> i`.
pub fn coupling_constants(
    constants: &ProblemConstants,
    graph: &NetworkGraph,
    probs: &[f64],
    beta: Option<f64>,
    feedback: Feedback,
) -> Result<CouplingConstants> {
    constants.validate()?;
    if probs.len() != graph.num_directed_pairs() {
        return Err(Error::DimensionMismatch {
            expected: graph.num_directed_pairs(),
            got: probs.len(),
        });
    }
    let p_bar = probs.iter().copied().fold(0.0, f64::max);
    let beta = beta.unwrap_or_else(|| default_beta(p_bar));
    let beta_upper = if p_bar > 0.0 { 1.0 / p_bar - 1.0 } else { f64::INFINITY };
    if !(beta > 0.0 && beta < beta_upper) {
        return Err(Error::BetaOutOfRange { beta, upper: beta_upper });
    }

    let mut gamma = 0.0_f64;
    for i in 0..graph.num_agents() {
        let neighbors = graph.neighbors_of(i);
        let weight = match feedback {
            Feedback::FullInfo => 20.0 * neighbors.len() as f64,
            Feedback::TwoPointBandit => 20.0,
        } * (1.0 + 1.0 / beta);
        // p_ji: agent i's transmission towards neighbor j fails
        let sum: f64 = neighbors
            .iter()
            .map(|&j| {
                let p = probs[graph.pair_index(j, i).expect("symmetric adjacency")];
                weight * p / (1.0 - (1.0 + beta) * p)
            })
            .sum();
        gamma = gamma.max(sum);
    }

    let m = graph.num_directed_pairs() as f64;
    let ProblemConstants { g_tilde, l, radius, .. } = *constants;
    let omega = (2.0 + 4.0 * m + gamma) * g_tilde * g_tilde + 8.0 * radius * radius * l * l;
    Ok(CouplingConstants { omega, gamma, beta })
}

/// Stepsize and admissible `delta` range for horizon `T` and scale `a`.
pub fn derive_params(
    constants: &ProblemConstants,
    graph: &NetworkGraph,
    probs: &[f64],
    horizon: usize,
    a: f64,
    beta: Option<f64>,
    feedback: Feedback,
) -> Result<DerivedConstants> {
    if horizon == 0 || !(a > 0.0) {
        return Err(Error::InvalidArgument("need T >= 1 and a > 0".into()));
    }
    let CouplingConstants { omega, gamma, beta } =
        coupling_constants(constants, graph, probs, beta, feedback)?;

    let t = horizon as f64;
    let bound = 8.0 * a * a * omega;
    let min_horizon = bound.ceil().max(1.0) as usize;
    if t < bound {
        return Err(Error::HorizonTooShort { horizon, bound, min_horizon });
    }
    let eta_sq = a * a / t;
    let disc = (1.0 - bound / t).max(0.0);
    let root = disc.sqrt();
    let delta_interval = ((1.0 - root) / (4.0 * eta_sq), (1.0 + root) / (4.0 * eta_sq));

    Ok(DerivedConstants {
        omega,
        gamma,
        beta,
        eta: a / t.sqrt(),
        delta_interval,
        min_horizon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_constants() -> ProblemConstants {
        ProblemConstants { g: 1.0, g_tilde: 1.0, l: 1.0, c: 1.0, radius: 1.0 }
    }

    fn edge() -> NetworkGraph {
        NetworkGraph::from_edges(2, [(0, 1)]).unwrap()
    }

    #[test]
    fn failure_free_reduction() {
        let g = NetworkGraph::erdos_renyi(8, 0.5, 3).unwrap();
        let k = ProblemConstants { g: 2.0, g_tilde: 1.5, l: 0.7, c: 3.0, radius: 2.0 };
        let probs = vec![0.0; g.num_directed_pairs()];
        let d = derive_params(&k, &g, &probs, 1_000_000, 1.0, None, Feedback::FullInfo).unwrap();
        assert_eq!(d.gamma, 0.0);
        let m = g.num_directed_pairs() as f64;
        let expected = (2.0 + 4.0 * m) * 1.5 * 1.5 + 8.0 * 4.0 * 0.49;
        assert!((d.omega - expected).abs() < 1e-12);
    }

    #[test]
    fn discriminant_zero_collapses_interval() {
        // omega = 18, a = 1 gives 8 a^2 omega = 144
        let d = derive_params(&unit_constants(), &edge(), &[0.0, 0.0], 144, 1.0, None, Feedback::FullInfo)
            .unwrap();
        assert_eq!(d.delta_interval.0, d.delta_interval.1);
        assert!((d.delta_interval.0 - 36.0).abs() < 1e-9);
        assert_eq!(d.min_horizon, 144);
    }

    #[test]
    fn short_horizon_reports_minimum() {
        match derive_params(&unit_constants(), &edge(), &[0.0, 0.0], 143, 1.0, None, Feedback::FullInfo) {
            Err(Error::HorizonTooShort { min_horizon, .. }) => assert_eq!(min_horizon, 144),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn beta_range_is_enforced() {
        let probs = [0.2, 0.1];
        // 1 / 0.2 - 1 = 4
        assert!(matches!(
            derive_params(&unit_constants(), &edge(), &probs, 10_000, 1.0, Some(4.0), Feedback::FullInfo),
            Err(Error::BetaOutOfRange { .. })
        ));
        assert!(matches!(
            derive_params(&unit_constants(), &edge(), &probs, 10_000, 1.0, Some(0.0), Feedback::FullInfo),
            Err(Error::BetaOutOfRange { .. })
        ));
        let d = derive_params(&unit_constants(), &edge(), &probs, 10_000, 1.0, None, Feedback::FullInfo)
            .unwrap();
        assert_eq!(d.beta, 2.0);
    }

    #[test]
    fn gamma_uses_outgoing_failure_probabilities() {
        // pairs (0,1) and (1,0): p_01 = 0.2 (1 -> 0 fails), p_10 = 0.1 (0 -> 1 fails)
        let probs = [0.2, 0.1];
        let beta = 1.0;
        let full = derive_params(&unit_constants(), &edge(), &probs, 1_000_000, 1.0, Some(beta), Feedback::FullInfo)
            .unwrap();
        let term = |p: f64| 20.0 * (1.0 + 1.0 / beta) * p / (1.0 - (1.0 + beta) * p);
        // agent 0 sums p_10 = 0.1, agent 1 sums p_01 = 0.2; degree 1 each
        assert!((full.gamma - term(0.2)).abs() < 1e-12);
        let bandit = derive_params(&unit_constants(), &edge(), &probs, 1_000_000, 1.0, Some(beta), Feedback::TwoPointBandit)
            .unwrap();
        assert!((bandit.gamma - term(0.2)).abs() < 1e-12);

        let star = NetworkGraph::from_edges(3, [(0, 1), (0, 2)]).unwrap();
        // pairs: (0,1) (0,2) (1,0) (2,0)
        let probs = [0.0, 0.0, 0.1, 0.1];
        let full = derive_params(&unit_constants(), &star, &probs, 1_000_000, 1.0, Some(beta), Feedback::FullInfo)
            .unwrap();
        let bandit = derive_params(&unit_constants(), &star, &probs, 1_000_000, 1.0, Some(beta), Feedback::TwoPointBandit)
            .unwrap();
        // the hub has degree 2 and both of its outgoing links fail w.p. 0.1
        assert!((full.gamma - 2.0 * 2.0 * term(0.1)).abs() < 1e-12);
        assert!((bandit.gamma - 2.0 * term(0.1)).abs() < 1e-12);
    }
}
