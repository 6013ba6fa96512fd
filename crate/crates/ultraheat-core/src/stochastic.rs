//! Exact simulation of the inhomogeneous jump process generated by the
//! diffusion operator, and Monte-Carlo cross-validation of its marginals
//! against the analytic heat kernel.
//!
//! Simulation uses thinning: candidate events arrive at a constant dominating
//! rate (a sampled supremum of the vertex degrees with a safety margin) and
//! each candidate at time `tau` in ball `I` is accepted with probability
//! `gamma_I(tau) / rate`. Acceptance re-evaluates the exact rate, so the law
//! does not depend on how tight the sampled supremum is. On acceptance the
//! walker jumps to ball `J` with probability `A_IJ(tau) / gamma_I(tau)` and
//! lands Haar-uniformly inside it.
//!
//! Paths use splittable counter-based streams keyed by `(seed, path index)`,
//! so results are independent of execution order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::evolve;
use crate::graph::TimeGraph;
use crate::l2::L2Function;
use crate::padic::PAdicNumber;
use crate::quad::QuadratureConfig;
use crate::tolerances;

/// The stream for one path: ChaCha with the path index as stream id.
pub fn path_rng(seed: u64, path_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path_index);
    rng
}

/// One realized trajectory on `[s, t]`: the position is `initial` before the
/// first jump and `states[k]` after jump `k`.
#[derive(Clone, Debug)]
pub struct PathSample {
    pub initial: PAdicNumber,
    pub jump_times: Vec<f64>,
    pub states: Vec<PAdicNumber>,
}

impl PathSample {
    pub fn jumped(&self) -> bool {
        !self.jump_times.is_empty()
    }

    /// Position at time `tau` (right-continuous).
    pub fn position_at(&self, tau: f64) -> &PAdicNumber {
        let mut current = &self.initial;
        for (time, state) in self.jump_times.iter().zip(&self.states) {
            if *time <= tau {
                current = state;
            } else {
                break;
            }
        }
        current
    }
}

/// Sampled supremum of the jump rates over the window, with the thinning
/// safety margin applied. Zero exactly when every weight vanishes on the grid.
pub fn dominating_rate(graph: &TimeGraph, s: f64, t: f64) -> Result<f64> {
    let grid = tolerances::DOMINATING_RATE_GRID;
    let mut sup: f64 = 0.0;
    for k in 0..=grid {
        let tau = if t > s {
            s + (t - s) * k as f64 / grid as f64
        } else {
            s
        };
        let snapshot = graph.snapshot(tau)?;
        for g in snapshot.gamma {
            sup = sup.max(g);
        }
    }
    Ok(sup * tolerances::DOMINATING_RATE_MARGIN)
}

/// Simulates one path started at `x0` at time `s` up to time `t`.
pub fn simulate_path(
    graph: &TimeGraph,
    s: f64,
    t: f64,
    x0: &PAdicNumber,
    rng: &mut ChaCha8Rng,
) -> Result<PathSample> {
    simulate_path_with_rate(graph, s, t, x0, dominating_rate(graph, s, t)?, rng)
}

fn simulate_path_with_rate(
    graph: &TimeGraph,
    s: f64,
    t: f64,
    x0: &PAdicNumber,
    rate: f64,
    rng: &mut ChaCha8Rng,
) -> Result<PathSample> {
    if t < s {
        return Err(Error::InvalidArgument(
            "simulation runs forward in time".into(),
        ));
    }
    let embedding = graph.embedding();
    let mut vertex = embedding
        .locate(x0)
        .ok_or_else(|| Error::InvalidArgument("start point outside the state space".into()))?;
    let mut path = PathSample {
        initial: x0.clone(),
        jump_times: Vec::new(),
        states: Vec::new(),
    };
    if rate <= 0.0 {
        return Ok(path);
    }
    let n = embedding.vertices();
    let mut tau = s;
    loop {
        let u: f64 = rng.gen();
        tau += -(1.0 - u).ln() / rate;
        if tau > t {
            break;
        }
        let gamma = graph.degree(vertex, tau)?;
        debug_assert!(
            gamma <= rate * (1.0 + 1e-9),
            "dominating rate undershoots the exact rate"
        );
        let accept: f64 = rng.gen();
        if accept * rate >= gamma {
            continue;
        }
        // Jump: target J with probability A_IJ / gamma_I.
        let draw: f64 = rng.gen::<f64>() * gamma;
        let mut cumulative = 0.0;
        let mut target = vertex;
        for j in 0..n {
            if j == vertex {
                continue;
            }
            let w = graph.weight(vertex, j, tau)?;
            if w <= 0.0 {
                continue;
            }
            cumulative += w;
            target = j;
            if cumulative >= draw {
                break;
            }
        }
        let landing = embedding
            .vertex_ball(target)
            .sample(embedding.precision(), rng);
        path.jump_times.push(tau);
        path.states.push(landing);
        vertex = target;
    }
    Ok(path)
}

/// `exp(-int_s^t gamma_I)`: the probability of seeing no jump out of ball `I`.
pub fn survival_probability(
    graph: &TimeGraph,
    s: f64,
    t: f64,
    vertex: usize,
    quad: &QuadratureConfig,
) -> Result<f64> {
    if t < s {
        return Err(Error::InvalidArgument("survival needs t >= s".into()));
    }
    let mut integral = 0.0;
    if t > s {
        let nodes = quad.nodes(s, t);
        let weights = quad.weights(s, t);
        for (&tau, &w) in nodes.iter().zip(&weights) {
            integral += w * graph.degree(vertex, tau)?;
        }
    }
    Ok((-integral).exp())
}

/// Analytic ball occupation probabilities at time `t` for a walker at `x` at
/// time `s`: the closed-form evolution of each ball indicator read at `x`.
/// The vector sums to one up to quadrature accuracy.
pub fn heat_kernel_ball_probs(
    graph: &TimeGraph,
    s: f64,
    x: &PAdicNumber,
    t: f64,
    quad: &QuadratureConfig,
) -> Result<Vec<f64>> {
    let embedding = graph.embedding();
    if embedding.locate(x).is_none() {
        return Err(Error::InvalidArgument(
            "kernel point outside the state space".into(),
        ));
    }
    let resolution = embedding.level() + 1;
    let mut probs = Vec::with_capacity(embedding.vertices());
    for j in 0..embedding.vertices() {
        let indicator = L2Function::ball_indicator(*embedding, resolution, j)?;
        let evolved = evolve::closed_form(graph, s, t, &indicator, quad)?.result;
        probs.push(evolved.evaluate(x)?.re);
    }
    Ok(probs)
}

/// Empirical marginals with their uncertainty.
#[derive(Clone, Debug)]
pub struct KernelEstimate {
    /// Occupation frequency per vertex ball at the final time.
    pub ball_probabilities: Vec<f64>,
    /// Fraction of paths that never jumped.
    pub survival_atom: f64,
    pub paths: usize,
    /// Binomial standard error per ball.
    pub standard_errors: Vec<f64>,
}

/// Monte-Carlo versus analytic comparison, plus an empirical
/// Chapman-Kolmogorov check: paths restarted at the midpoint from their own
/// states must reproduce the direct law at the final time.
#[derive(Clone, Debug)]
pub struct MarkovComparison {
    pub estimate: KernelEstimate,
    pub analytic: Vec<f64>,
    pub tv_distance: f64,
    pub survival_expected: f64,
    /// Binomial sigma of the survival atom at this path count.
    pub survival_sigma: f64,
    pub restart_time: f64,
    pub chapman_kolmogorov_tv: f64,
}

fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

pub fn validate_markov(
    graph: &TimeGraph,
    s: f64,
    t: f64,
    x0: &PAdicNumber,
    paths: usize,
    seed: u64,
    quad: &QuadratureConfig,
) -> Result<MarkovComparison> {
    if paths < 1000 {
        return Err(Error::InvalidArgument(
            "Monte-Carlo validation needs at least 1000 paths".into(),
        ));
    }
    let embedding = graph.embedding();
    let n = embedding.vertices();
    let start_vertex = embedding
        .locate(x0)
        .ok_or_else(|| Error::InvalidArgument("start point outside the state space".into()))?;
    let rate = dominating_rate(graph, s, t)?;
    let restart_time = 0.5 * (s + t);

    // Direct simulation, keeping each path's midpoint state for the restart.
    let samples: Vec<(usize, bool, PAdicNumber)> = (0..paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(seed, i);
            let path = simulate_path_with_rate(graph, s, t, x0, rate, &mut rng)?;
            let final_vertex = embedding
                .locate(path.position_at(t))
                .expect("paths stay in the state space");
            Ok((
                final_vertex,
                !path.jumped(),
                path.position_at(restart_time).clone(),
            ))
        })
        .collect::<Result<_>>()?;

    let mut counts = vec![0usize; n];
    let mut survived = 0usize;
    for &(vertex, no_jump, _) in &samples {
        counts[vertex] += 1;
        if no_jump {
            survived += 1;
        }
    }
    let ball_probabilities: Vec<f64> = counts.iter().map(|&c| c as f64 / paths as f64).collect();
    let standard_errors: Vec<f64> = ball_probabilities
        .iter()
        .map(|&p| (p * (1.0 - p) / paths as f64).sqrt())
        .collect();

    // Restarted simulation: continue each path from its midpoint state with a
    // fresh stream.
    let restart_vertices: Vec<usize> = samples
        .par_iter()
        .enumerate()
        .map(|(i, (_, _, state))| {
            let mut rng = path_rng(seed, paths as u64 + i as u64);
            let path = simulate_path_with_rate(graph, restart_time, t, state, rate, &mut rng)?;
            Ok(embedding
                .locate(path.position_at(t))
                .expect("paths stay in the state space"))
        })
        .collect::<Result<_>>()?;
    let mut restart_counts = vec![0usize; n];
    for vertex in restart_vertices {
        restart_counts[vertex] += 1;
    }
    let restarted: Vec<f64> = restart_counts
        .iter()
        .map(|&c| c as f64 / paths as f64)
        .collect();

    let analytic = heat_kernel_ball_probs(graph, s, x0, t, quad)?;
    let survival_expected = survival_probability(graph, s, t, start_vertex, quad)?;
    let survival_sigma = (survival_expected * (1.0 - survival_expected) / paths as f64).sqrt();

    Ok(MarkovComparison {
        estimate: KernelEstimate {
            ball_probabilities: ball_probabilities.clone(),
            survival_atom: survived as f64 / paths as f64,
            paths,
            standard_errors,
        },
        tv_distance: total_variation(&ball_probabilities, &analytic),
        analytic,
        survival_expected,
        survival_sigma,
        restart_time,
        chapman_kolmogorov_tv: total_variation(&ball_probabilities, &restarted),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use crate::padic::Embedding;

    fn unit_edge() -> TimeGraph {
        let e = Embedding::new(2, 2, None, 32).unwrap();
        TimeGraph::new(e, vec![(0, 1, Expr::parse("1").unwrap())], (0.0, 32.0)).unwrap()
    }

    fn p2t() -> TimeGraph {
        let e = Embedding::new(2, 2, None, 32).unwrap();
        TimeGraph::new(e, vec![(0, 1, Expr::parse("1 + t/2").unwrap())], (0.0, 2.0)).unwrap()
    }

    #[test]
    fn zero_weights_freeze_the_walker() {
        let e = Embedding::new(2, 2, None, 32).unwrap();
        let g = TimeGraph::new(e, vec![], (0.0, 1.0)).unwrap();
        let x0 = e.center(0);
        let mut rng = path_rng(1, 0);
        let path = simulate_path(&g, 0.0, 1.0, &x0, &mut rng).unwrap();
        assert!(!path.jumped());
        assert_eq!(path.position_at(1.0), &x0);
    }

    #[test]
    fn paths_are_deterministic_per_seed_and_stay_inside() {
        let g = unit_edge();
        let x0 = g.embedding().center(0);
        let a = simulate_path(&g, 0.0, 5.0, &x0, &mut path_rng(9, 3)).unwrap();
        let b = simulate_path(&g, 0.0, 5.0, &x0, &mut path_rng(9, 3)).unwrap();
        assert_eq!(a.jump_times, b.jump_times);
        assert_eq!(a.states, b.states);
        for state in &a.states {
            assert!(g.embedding().locate(state).is_some());
        }
        // Jump times are strictly increasing.
        for w in a.jump_times.windows(2) {
            assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn first_jump_time_is_exponential_with_the_vertex_rate() {
        // Constant gamma = 1: the first jump time is Exp(1). Mean over 1e5
        // paths within three sigma, and a KS test at level 0.01 on 1e4 paths.
        let g = unit_edge();
        let x0 = g.embedding().center(0);
        let horizon = 30.0;
        let paths = 100_000usize;
        let mut sum = 0.0;
        let mut first_times = Vec::with_capacity(10_000);
        for i in 0..paths {
            let path = simulate_path(&g, 0.0, horizon, &x0, &mut path_rng(42, i as u64)).unwrap();
            let first = *path.jump_times.first().expect("horizon is long enough");
            sum += first;
            if i < 10_000 {
                first_times.push(first);
            }
        }
        let mean = sum / paths as f64;
        let sigma3 = 3.0 / (paths as f64).sqrt();
        assert!((mean - 1.0).abs() <= sigma3, "mean {mean}");

        first_times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = first_times.len() as f64;
        let mut ks: f64 = 0.0;
        for (i, &x) in first_times.iter().enumerate() {
            let cdf = 1.0 - (-x).exp();
            let hi = (i as f64 + 1.0) / n - cdf;
            let lo = cdf - i as f64 / n;
            ks = ks.max(hi.max(lo));
        }
        // Critical value at alpha = 0.01: 1.628 / sqrt(n).
        assert!(ks <= 1.628 / n.sqrt(), "KS statistic {ks}");
    }

    #[test]
    fn jump_targets_follow_the_weight_ratios() {
        // From vertex 0 with weights 1 and 3 the targets split 1:3.
        let e = Embedding::new(3, 2, None, 32).unwrap();
        let g = TimeGraph::new(
            e,
            vec![
                (0, 1, Expr::parse("1").unwrap()),
                (0, 2, Expr::parse("3").unwrap()),
            ],
            (0.0, 40.0),
        )
        .unwrap();
        let x0 = e.center(0);
        let paths = 10_000usize;
        let mut to_one = 0usize;
        let mut jumps = 0usize;
        for i in 0..paths {
            let path = simulate_path(&g, 0.0, 30.0, &x0, &mut path_rng(7, i as u64)).unwrap();
            if let Some(state) = path.states.first() {
                jumps += 1;
                if e.locate(state) == Some(1) {
                    to_one += 1;
                }
            }
        }
        assert!(jumps > 9_900);
        let freq = to_one as f64 / jumps as f64;
        let sigma3 = 3.0 * (0.25 * 0.75 / jumps as f64).sqrt();
        assert!((freq - 0.25).abs() <= sigma3, "target frequency {freq}");
    }

    #[test]
    fn survival_probability_cases() {
        let quad = QuadratureConfig::default();
        let g = unit_edge();
        assert_eq!(survival_probability(&g, 0.3, 0.3, 0, &quad).unwrap(), 1.0);
        let p = survival_probability(&g, 0.0, 1.0, 0, &quad).unwrap();
        assert!((p - (-1.0f64).exp()).abs() <= 1e-12);
        let g = p2t();
        let p = survival_probability(&g, 0.0, 1.0, 0, &quad).unwrap();
        assert!((p - (-1.25f64).exp()).abs() <= 1e-12);
    }

    #[test]
    fn heat_kernel_probabilities_cases() {
        let quad = QuadratureConfig::default();
        let g = unit_edge();
        let x0 = g.embedding().center(0);
        let at_start = heat_kernel_ball_probs(&g, 0.0, &x0, 0.0, &quad).unwrap();
        assert_eq!(at_start, vec![1.0, 0.0]);
        let probs = heat_kernel_ball_probs(&g, 0.0, &x0, 2f64.ln(), &quad).unwrap();
        assert!((probs[0] - 0.625).abs() <= 1e-12);
        assert!((probs[1] - 0.375).abs() <= 1e-12);
        assert!((probs.iter().sum::<f64>() - 1.0).abs() <= 1e-10);

        let e = Embedding::new(2, 2, None, 32).unwrap();
        let frozen = TimeGraph::new(e, vec![], (0.0, 2.0)).unwrap();
        let probs = heat_kernel_ball_probs(&frozen, 0.0, &x0, 1.5, &quad).unwrap();
        assert_eq!(probs, vec![1.0, 0.0]);
    }

    #[test]
    fn heat_kernel_handles_constant_degenerate_spectra() {
        // The complete triangle has a repeated eigenvalue at every t; being
        // constant in time it is exempt from the degenerate-gap refusal.
        let e = Embedding::new(3, 2, None, 32).unwrap();
        let one = || Expr::parse("1").unwrap();
        let g = TimeGraph::new(
            e,
            vec![(0, 1, one()), (0, 2, one()), (1, 2, one())],
            (0.0, 1.0),
        )
        .unwrap();
        let quad = QuadratureConfig::default();
        let x0 = e.center(0);
        let probs = heat_kernel_ball_probs(&g, 0.0, &x0, 0.8, &quad).unwrap();
        assert!((probs.iter().sum::<f64>() - 1.0).abs() <= 1e-10);
        // Symmetry: the two non-start balls are equally likely.
        assert!((probs[1] - probs[2]).abs() <= 1e-12);
        assert!(probs[0] > probs[1]);
    }

    #[test]
    fn markov_validation_on_the_frozen_graph_is_exact() {
        let quad = QuadratureConfig::default();
        let e = Embedding::new(2, 2, None, 32).unwrap();
        let g = TimeGraph::new(e, vec![], (0.0, 1.0)).unwrap();
        let x0 = e.center(0);
        let cmp = validate_markov(&g, 0.0, 1.0, &x0, 1000, 5, &quad).unwrap();
        assert_eq!(cmp.tv_distance, 0.0);
        assert_eq!(cmp.estimate.survival_atom, 1.0);
        assert_eq!(cmp.chapman_kolmogorov_tv, 0.0);
    }

    #[test]
    fn marginals_match_the_analytic_kernel() {
        let quad = QuadratureConfig::default();
        let g = unit_edge();
        let x0 = g.embedding().center(0);
        let cmp = validate_markov(&g, 0.0, 2f64.ln(), &x0, 100_000, 11, &quad).unwrap();
        assert!(cmp.tv_distance <= 0.02, "TV {}", cmp.tv_distance);
        assert!(cmp.chapman_kolmogorov_tv <= 0.02);
        let survival = (-(2f64.ln())).exp(); // constant rate 1
        assert!((cmp.estimate.survival_atom - survival).abs() <= 3.0 * cmp.survival_sigma);
    }

    #[test]
    fn survival_atom_matches_the_degree_integral_on_p2t() {
        let quad = QuadratureConfig::default();
        let g = p2t();
        let x0 = g.embedding().center(0);
        let cmp = validate_markov(&g, 0.0, 1.0, &x0, 100_000, 23, &quad).unwrap();
        let expected = (-1.25f64).exp();
        assert!((cmp.survival_expected - expected).abs() <= 1e-12);
        assert!(
            (cmp.estimate.survival_atom - expected).abs() <= 3.0 * cmp.survival_sigma,
            "atom {} vs {expected}",
            cmp.estimate.survival_atom
        );
    }

    #[test]
    fn tv_distance_scales_like_the_square_root_of_the_path_count() {
        let quad = QuadratureConfig::default();
        let g = unit_edge();
        let x0 = g.embedding().center(0);
        let t = 2f64.ln();
        // Average the TV over 20 disjoint replicates per size so the ratio
        // estimate concentrates.
        let mut means = Vec::new();
        for (block, &paths) in [1_000usize, 10_000, 100_000].iter().enumerate() {
            let mut total = 0.0;
            for rep in 0..20u64 {
                let seed = 1000 * (block as u64 + 1) + rep;
                let cmp = validate_markov(&g, 0.0, t, &x0, paths, seed, &quad).unwrap();
                total += cmp.tv_distance;
            }
            means.push(total / 20.0);
        }
        let expected = 10f64.sqrt();
        for pair in means.windows(2) {
            let ratio = pair[0] / pair[1];
            assert!(
                ratio >= expected * 0.5 && ratio <= expected * 1.5,
                "scaling ratio {ratio}"
            );
        }
    }
}
