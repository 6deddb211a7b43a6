mod common;

use common::{check_states, gradient_gap};
use proptest::prelude::*;
use saddle_oco::channel::LinkFailureModel;
use saddle_oco::graph::NetworkGraph;
use saddle_oco::linalg::jacobi_eigen;
use saddle_oco::problems::{
    project_ball, CostStream, FeasibleSet, LogisticCostRound, LogisticSettings, LogisticStream, Objective,
    PairwiseConstraint, QcqpCostRound, QcqpSettings, QcqpStream,
};
use saddle_oco::solver::{SolverParams, Simulation};
use saddle_oco::Vector;

fn vector(d: usize) -> impl Strategy<Value = Vector> {
    prop::collection::vec(-2.0..2.0f64, d).prop_map(Vector::from_vec)
}

fn connected(n: usize, p: f64, seed: u64) -> NetworkGraph {
    (seed..)
        .map(|s| NetworkGraph::erdos_renyi(n, p, s).unwrap())
        .find(|g| g.num_edges() > 0)
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn qcqp_runs_keep_every_invariant(seed in 0u64..1000, hi in 0.0..0.9f64, a in 0.05..2.0f64) {
        let graph = connected(6, 0.5, seed);
        let set = FeasibleSet::new(2f64.sqrt(), 2).unwrap();
        let problem = QcqpStream::init(&graph, set, QcqpSettings::default(), seed).unwrap();
        let constraints = problem.constraints.clone();
        let channel = LinkFailureModel::uniform_range(&graph, 0.0, hi, seed).unwrap();
        let mut sim = Simulation::new(&graph, problem, channel, SolverParams::full_info(60, a, 1.0).unwrap(), seed).unwrap();
        while !sim.is_finished() {
            sim.step().unwrap();
            prop_assert_eq!(check_states(&graph, &constraints, sim.states(), set.radius(), false), Ok(()));
        }
    }

    #[test]
    fn perfect_links_keep_duals_symmetric(seed in 0u64..1000, logistic in any::<bool>()) {
        let graph = connected(6, 0.5, seed);
        let (radius, d) = if logistic { (1.0, 3) } else { (3f64.sqrt(), 3) };
        let set = FeasibleSet::new(radius, d).unwrap();
        let channel = LinkFailureModel::perfect(&graph, seed);
        let params = SolverParams::full_info(60, 0.7, 1.0).unwrap();
        if logistic {
            let problem = LogisticStream::init(&graph, set, LogisticSettings::default(), seed).unwrap();
            let constraints = problem.constraints.clone();
            let mut sim = Simulation::new(&graph, problem, channel, params, seed).unwrap();
            while !sim.is_finished() {
                sim.step().unwrap();
                prop_assert_eq!(check_states(&graph, &constraints, sim.states(), radius, true), Ok(()));
            }
        } else {
            let problem = QcqpStream::init(&graph, set, QcqpSettings::default(), seed).unwrap();
            let constraints = problem.constraints.clone();
            let mut sim = Simulation::new(&graph, problem, channel, params, seed).unwrap();
            while !sim.is_finished() {
                sim.step().unwrap();
                prop_assert_eq!(check_states(&graph, &constraints, sim.states(), radius, true), Ok(()));
            }
        }
    }

    #[test]
    fn qcqp_cost_gradient(x in vector(3), seed in 0u64..1000) {
        let graph = connected(3, 1.0, 0);
        let set = FeasibleSet::new(3f64.sqrt(), 3).unwrap();
        let mut problem = QcqpStream::init(&graph, set, QcqpSettings::default(), seed).unwrap();
        for cost in problem.stream.next_round() {
            prop_assert!(gradient_gap(|y| cost.value(y), &cost.gradient(&x), &x) <= 1e-6);
        }
    }

    #[test]
    fn logistic_cost_gradient(x in vector(3), psi in vector(3), positive in any::<bool>()) {
        let cost = LogisticCostRound { psi, label: if positive { 1.0 } else { -1.0 } };
        prop_assert!(gradient_gap(|y| cost.value(y), &cost.gradient(&x), &x) <= 1e-6);
        let (v, g) = cost.value_and_gradient(&x);
        prop_assert!((v - cost.value(&x)).abs() <= 1e-14);
        prop_assert!((g - cost.gradient(&x)).norm() <= 1e-14);
    }

    #[test]
    fn constraint_gradients(xi in vector(2), xj in vector(2), seed in 0u64..1000, bound in 0.1..2.0f64) {
        let graph = connected(2, 1.0, 0);
        let set = FeasibleSet::new(2f64.sqrt(), 2).unwrap();
        let problem = QcqpStream::init(&graph, set, QcqpSettings::default(), seed).unwrap();
        let quadratic = problem.constraints.edge(0).clone();
        for c in [quadratic, PairwiseConstraint::Proximity { bound }] {
            prop_assert!(gradient_gap(|y| c.value(y, &xj), &c.grad_first(&xi, &xj), &xi) <= 1e-6);
            prop_assert!(gradient_gap(|y| c.value(&xi, y), &c.grad_second(&xi, &xj), &xj) <= 1e-6);
            let swapped = c.value(&xj, &xi);
            prop_assert!((c.value(&xi, &xj) - swapped).abs() <= 1e-12 * (1.0 + swapped.abs()));
        }
    }

    #[test]
    fn projection_lands_in_the_ball(x in vector(4), radius in 0.1..3.0f64) {
        let p = project_ball(&x, radius).unwrap();
        prop_assert!(p.norm() <= radius * (1.0 + 1e-12));
        if x.norm() <= radius {
            prop_assert_eq!(p, x);
        }
    }
}

#[test]
fn qcqp_parameters_stay_clamped() {
    let graph = connected(5, 0.5, 1);
    let set = FeasibleSet::new(2f64.sqrt(), 2).unwrap();
    let settings = QcqpSettings { perturbation: 0.5, ..QcqpSettings::default() };
    let mut problem = QcqpStream::init(&graph, set, settings, 4).unwrap();
    for _ in 0..2000 {
        for QcqpCostRound { a, b } in problem.stream.next_round() {
            assert_eq!(a, a.transpose());
            let values = jacobi_eigen(&a).values;
            assert!(values.iter().all(|&w| (-1e-9..=10.0 + 1e-9).contains(&w)), "{values}");
            assert!(b.iter().all(|&v| (-10.0..=10.0).contains(&v)));
        }
    }
}
