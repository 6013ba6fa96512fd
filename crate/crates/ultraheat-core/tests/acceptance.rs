//! Acceptance suite: one test per release criterion, each printing a
//! PASS line with its measured numbers. Run with
//! `cargo test -p ultraheat-core --test acceptance -- --nocapture`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ultraheat_core::boundary::{
    bound_report, gamma_hat, graph_dirichlet_spectrum, graph_vonneumann_eigenvalue,
    vonneumann_eigenvalue, MeasureNormalization, QuotientEdgeSet, Region,
};
use ultraheat_core::evolve::{
    autonomous, closed_form, evolution_defect, exact_commuting, trotter, trotter_error_sweep,
    Method,
};
use ultraheat_core::expr::Expr;
use ultraheat_core::graph::TimeGraph;
use ultraheat_core::l2::{wavelet_indices, CellVector, L2Function};
use ultraheat_core::ops::{apply_generator, mismatch_witness, spectral_frame};
use ultraheat_core::padic::{Embedding, PAdicNumber};
use ultraheat_core::quad::QuadratureConfig;
use ultraheat_core::stochastic::validate_markov;
use ultraheat_core::Error;

fn unit_edge() -> TimeGraph {
    let e = Embedding::new(2, 2, None, 32).unwrap();
    TimeGraph::new(e, vec![(0, 1, Expr::parse("1").unwrap())], (0.0, 2.0)).unwrap()
}

fn p2t() -> TimeGraph {
    let e = Embedding::new(2, 2, None, 32).unwrap();
    TimeGraph::new(e, vec![(0, 1, Expr::parse("1 + t/2").unwrap())], (0.0, 2.0)).unwrap()
}

fn k3_unit() -> TimeGraph {
    let e = Embedding::new(3, 2, None, 32).unwrap();
    let one = || Expr::parse("1").unwrap();
    TimeGraph::new(
        e,
        vec![(0, 1, one()), (0, 2, one()), (1, 2, one())],
        (0.0, 2.0),
    )
    .unwrap()
}

fn random_cells(
    e: Embedding,
    resolution: i32,
    rng: &mut ChaCha8Rng,
    range: std::ops::Range<f64>,
) -> L2Function {
    let count = e.vertices() * e.cells_per_vertex(resolution);
    let values: Vec<Complex64> = (0..count)
        .map(|_| Complex64::new(rng.gen_range(range.clone()), 0.0))
        .collect();
    L2Function::from_cells(&CellVector::new(e, resolution, values).unwrap())
}

#[test]
fn c01_kozyrev_eigenfunction_identity() {
    // Every wavelet at R = N + 3 on the triangle fixture is an exact
    // eigenfunction of the generator with eigenvalue -gamma_I(t), in
    // coefficient space and under pointwise quadrature.
    let g = k3_unit();
    let e = *g.embedding();
    let r = e.level() + 3;
    let t = 0.7;
    let gamma = g.snapshot(t).unwrap().gamma;
    let per = e.cells_per_vertex(r);
    let cell_volume = (e.prime() as f64).powi(-r);
    let mut worst_residual = 0.0f64;
    let indices = wavelet_indices(&e, r);
    assert_eq!(indices.len(), 3 * (per - 1));
    for index in &indices {
        let psi = L2Function::from_wavelet(e, r, *index).unwrap();
        let out = apply_generator(&g, t, &psi).unwrap();
        // Exact in coefficient space: same map as scaling psi by -gamma_I.
        let expected = {
            let mut f = psi.clone();
            let factor = Complex64::new(-gamma[index.vertex], 0.0);
            for c in f.raw_coefficients_mut().values_mut() {
                *c *= factor;
            }
            f
        };
        assert_eq!(out.raw_coefficients(), expected.raw_coefficients());
        assert!(out.vertex_values().iter().all(|v| v.norm() == 0.0));

        // Pointwise: the literal kernel integral at every cell center.
        let psi_cells = psi.to_cells();
        let out_cells = out.to_cells();
        for vx in 0..e.vertices() {
            for kx in 0..per as u64 {
                let x = e.subball_center(vx, kx);
                let fx = psi_cells.value(vx, kx);
                let mut integral = Complex64::new(0.0, 0.0);
                for vy in 0..e.vertices() {
                    for ky in 0..per as u64 {
                        let y = e.subball_center(vy, ky);
                        let kernel = g.kernel_value(&x, &y, t).unwrap();
                        if kernel != 0.0 {
                            integral += (psi_cells.value(vy, ky) - fx) * kernel * cell_volume;
                        }
                    }
                }
                // The diagonal block is zero, so the integral reduces to
                // -gamma_I fx plus the cross-ball transport of psi (zero mean).
                let residual = (out_cells.value(vx, kx) - integral).norm();
                worst_residual = worst_residual.max(residual);
            }
        }
    }
    assert!(worst_residual <= 1e-10, "residual {worst_residual}");
    println!(
        "[acceptance] C01 kozyrev_eigenfunction_identity: PASS ({} wavelets, residual {worst_residual:.2e})",
        indices.len()
    );
}

#[test]
fn c02_operator_mismatch_witness() {
    let g = unit_edge();
    let a = PAdicNumber::zero(2, 32);
    let x0 = PAdicNumber::from_integer(2, 2, 32).unwrap();
    let (matrix_value, generator_value) = mismatch_witness(&g, 0.0, 0, 2, &a, &x0).unwrap();
    assert_eq!(matrix_value, -0.5);
    assert_eq!(generator_value, 0.0);
    println!(
        "[acceptance] C02 operator_mismatch: PASS (({matrix_value}, {generator_value}) exactly)"
    );
}

#[test]
fn c03_autonomous_solution() {
    let g = unit_edge();
    let e = *g.embedding();
    let u0 = L2Function::ball_indicator(e, e.level() + 2, 0).unwrap();
    let out = autonomous(&g, 0.0, 2f64.ln(), &u0).unwrap();
    let v0 = out.vertex_values()[0];
    let v1 = out.vertex_values()[1];
    assert!((v0.re - 0.625).abs() <= 1e-12 && v0.im.abs() <= 1e-12);
    assert!((v1.re - 0.375).abs() <= 1e-12 && v1.im.abs() <= 1e-12);
    println!(
        "[acceptance] C03 autonomous_solution: PASS (({:.16}, {:.16}))",
        v0.re, v1.re
    );
}

#[test]
fn c04_triangle_golden_numbers() {
    let g = k3_unit();
    let region = Region::parse(*g.embedding(), &["0".into(), "1".into()]).unwrap();
    let spectrum = graph_dirichlet_spectrum(&g, &region, 0.0).unwrap();
    assert!((spectrum[0] - 0.5).abs() <= 1e-12);
    assert!((spectrum[1] - 1.5).abs() <= 1e-12);
    let gamma = gamma_hat(&g, &region, 0.0, MeasureNormalization::UnitBall).unwrap();
    assert_eq!(gamma, 0.25);
    let report = bound_report(
        &g,
        &region,
        0.0,
        g.embedding().level() + 2,
        QuotientEdgeSet::BoundaryOnly,
        MeasureNormalization::UnitBall,
    )
    .unwrap();
    assert!(report.gamma_hat_lt_graph_dirichlet);
    println!(
        "[acceptance] C04 triangle_golden_numbers: PASS (spectrum ({:.12}, {:.12}), gamma_hat {gamma})",
        spectrum[0], spectrum[1]
    );
}

#[test]
fn c05_two_vertex_strict_inequality() {
    let g = unit_edge();
    let region = Region::parse(*g.embedding(), &["0".into()]).unwrap();
    let r = g.embedding().level() + 1;
    let graph_level = graph_vonneumann_eigenvalue(
        &g,
        &region,
        0.0,
        r,
        QuotientEdgeSet::BoundaryOnly,
        MeasureNormalization::UnitBall,
    )
    .unwrap();
    let operator_level = vonneumann_eigenvalue(
        &g,
        &region,
        0.0,
        r,
        QuotientEdgeSet::BoundaryOnly,
        MeasureNormalization::UnitBall,
    )
    .unwrap();
    assert!(graph_level.is_infinite());
    assert!(operator_level.is_finite());
    println!(
        "[acceptance] C05 two_vertex_strict_inequality: PASS (operator {operator_level}, graph inf)"
    );
}

#[test]
fn c06_commuting_family_agreement() {
    let g = p2t();
    let e = *g.embedding();
    let resolution = e.level() + 2;
    let quad = QuadratureConfig::new(64).unwrap();
    // Ball indicator plus a wavelet component so both parts are exercised.
    let mut u0 = L2Function::ball_indicator(e, resolution, 0).unwrap();
    let w = wavelet_indices(&e, resolution)[0];
    u0.set_wavelet_coefficient(w, Complex64::new(0.5, 0.0))
        .unwrap();

    let closed = closed_form(&g, 0.0, 1.0, &u0, &quad).unwrap().result;
    let commuting = exact_commuting(&g, 0.0, 1.0, &u0, &quad).unwrap().result;
    let product = trotter(&g, 0.0, 1.0, 1 << 10, &u0).unwrap().result;
    let d_closed_commuting = closed.distance(&commuting);
    let d_closed_trotter = closed.distance(&product);
    let d_commuting_trotter = commuting.distance(&product);
    assert!(d_closed_commuting <= 1e-8, "{d_closed_commuting}");
    assert!(d_closed_trotter <= 5e-4, "{d_closed_trotter}");
    assert!(d_commuting_trotter <= 5e-4, "{d_commuting_trotter}");
    println!(
        "[acceptance] C06 commuting_family_agreement: PASS (closed~commuting {d_closed_commuting:.2e}, closed~trotter {d_closed_trotter:.2e})"
    );
}

#[test]
fn c07_trotter_first_order_rate() {
    let g = p2t();
    let e = *g.embedding();
    let u0 = L2Function::ball_indicator(e, e.level() + 2, 0).unwrap();
    let quad = QuadratureConfig::new(64).unwrap();
    let steps: Vec<usize> = (3..=10).map(|k| 1usize << k).collect();
    let table = trotter_error_sweep(&g, 0.0, 1.0, &u0, &steps, &quad).unwrap();
    let slope = table.slope.expect("errors above the noise floor");
    assert!((slope + 1.0).abs() <= 0.15, "slope {slope}");
    println!("[acceptance] C07 trotter_first_order_rate: PASS (slope {slope:.4})");
}

#[test]
fn c08_evolution_family_law() {
    let quad = QuadratureConfig::new(64).unwrap();
    let scalar = p2t();
    let e = *scalar.embedding();
    let u0 = L2Function::ball_indicator(e, e.level() + 2, 0).unwrap();
    let scalar_defect =
        evolution_defect(&scalar, Method::ClosedForm, 0.0, 0.5, 1.0, &u0, &quad).unwrap();
    assert!(scalar_defect <= 1e-8, "{scalar_defect}");

    let constant = unit_edge();
    let constant_defect =
        evolution_defect(&constant, Method::ClosedForm, 0.0, 0.5, 1.0, &u0, &quad).unwrap();
    assert!(constant_defect <= 1e-12, "{constant_defect}");
    println!(
        "[acceptance] C08 evolution_family_law: PASS (scalar {scalar_defect:.2e}, constant {constant_defect:.2e})"
    );
}

#[test]
fn c09_feller_property_suite() {
    // 100 random graphs, n <= 6, polynomial weights nonnegative on [0,1]:
    // evolved [0,1]-valued data stays in range, mass is conserved and the
    // L2 norm does not expand.
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let quad = QuadratureConfig::new(32).unwrap();
    let mut closed_runs = 0usize;
    for case in 0..100 {
        let n = rng.gen_range(2..=6usize);
        let e = Embedding::new(n, 2, None, 32).unwrap();
        let mut weights = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.gen_bool(0.7) {
                    let c0 = rng.gen_range(0.0..1.2);
                    let c1 = rng.gen_range(0.0..1.2);
                    let c2 = rng.gen_range(0.0..1.2);
                    let text = format!("{c0} + {c1}*t + {c2}*t^2");
                    weights.push((i, j, Expr::parse(&text).unwrap()));
                }
            }
        }
        let g = TimeGraph::new(e, weights, (0.0, 1.0)).unwrap();
        let resolution = e.level() + 2;
        let u0 = random_cells(e, resolution, &mut rng, 0.0..1.0);

        let mut evolved = vec![trotter(&g, 0.0, 1.0, 64, &u0).unwrap().result];
        match closed_form(&g, 0.0, 1.0, &u0, &quad) {
            Ok(report) => {
                closed_runs += 1;
                evolved.push(report.result);
            }
            Err(Error::DegenerateSpectrum { .. }) => {}
            Err(other) => panic!("case {case}: {other}"),
        }
        for out in evolved {
            assert!(
                (out.integral() - u0.integral()).norm() <= 1e-11,
                "case {case}: mass drift"
            );
            assert!(
                out.norm() <= u0.norm() + 1e-11,
                "case {case}: norm expansion"
            );
            for v in out.to_cells().values() {
                assert!(
                    v.re >= -1e-9 && v.re <= 1.0 + 1e-9 && v.im.abs() <= 1e-9,
                    "case {case}: range violation {v}"
                );
            }
        }
    }
    println!(
        "[acceptance] C09 feller_property_suite: PASS (100 graphs, closed form on {closed_runs})"
    );
}

#[test]
fn c10_monte_carlo_vs_analytic_kernel() {
    let quad = QuadratureConfig::new(64).unwrap();
    let g = unit_edge();
    let x0 = g.embedding().center(0);
    let cmp = validate_markov(&g, 0.0, 2f64.ln(), &x0, 100_000, 11, &quad).unwrap();
    assert!((cmp.analytic[0] - 0.625).abs() <= 1e-10);
    assert!((cmp.analytic[1] - 0.375).abs() <= 1e-10);
    assert!(cmp.tv_distance <= 0.02, "TV {}", cmp.tv_distance);

    let scalar = p2t();
    let cmp2 = validate_markov(&scalar, 0.0, 1.0, &x0, 100_000, 23, &quad).unwrap();
    let expected = (-1.25f64).exp();
    let dev = (cmp2.estimate.survival_atom - expected).abs();
    assert!(dev <= 3.0 * cmp2.survival_sigma, "atom off by {dev}");
    println!(
        "[acceptance] C10 monte_carlo_vs_analytic: PASS (TV {:.4}, survival dev {:.2} sigma)",
        cmp.tv_distance,
        dev / cmp2.survival_sigma
    );
}

#[test]
fn c11_transform_correctness() {
    let g = k3_unit();
    let e = *g.embedding();
    let r = e.level() + 3;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..100 {
        let count = e.vertices() * e.cells_per_vertex(r);
        let values: Vec<Complex64> = (0..count)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let cells = CellVector::new(e, r, values.clone()).unwrap();
        let f = L2Function::from_cells(&cells);
        // Parseval.
        let coeff_norm = f.norm();
        let cell_norm = cells.norm();
        assert!((coeff_norm - cell_norm).abs() <= 1e-12 * cell_norm.max(1.0));
        // Round trip.
        let back = f.to_cells();
        for (a, b) in values.iter().zip(back.values()) {
            assert!((a - b).norm() <= 1e-12);
        }
    }
    // Indicator-wavelet orthogonality: exact in coefficient space, 1e-12 by
    // cell quadrature.
    for vertex in 0..e.vertices() {
        let omega = L2Function::ball_indicator(e, r, vertex).unwrap();
        let omega_cells = omega.to_cells();
        for index in wavelet_indices(&e, r) {
            let psi = L2Function::from_wavelet(e, r, index).unwrap();
            assert_eq!(omega.inner_product(&psi), Complex64::new(0.0, 0.0));
            assert!(omega_cells.inner_product(&psi.to_cells()).norm() <= 1e-12);
        }
    }
    println!("[acceptance] C11 transform_correctness: PASS (100 functions at R = N + 3)");
}

#[test]
fn c12_strong_continuity_bound() {
    let g = p2t();
    let e = *g.embedding();
    let r = e.level() + 2;
    let factor = e.state_space_volume().sqrt() + 1.0;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_ratio = 0.0f64;
    for _ in 0..50 {
        let f = random_cells(e, r, &mut rng, -1.0..1.0);
        let f = f.scale(Complex64::new(1.0 / f.norm(), 0.0));
        let s = rng.gen_range(0.0..2.0);
        let t = rng.gen_range(0.0..2.0);
        let diff = apply_generator(&g, t, &f)
            .unwrap()
            .distance(&apply_generator(&g, s, &f).unwrap());
        let bound = g.continuity_modulus(s, t).unwrap() * factor;
        assert!(diff <= bound + 1e-12, "{diff} > {bound}");
        if bound > 0.0 {
            worst_ratio = worst_ratio.max(diff / bound);
        }
    }
    // Also confirm the tracked frames exist on the same window (diagnostic
    // of the continuity hypothesis the closed form relies on).
    let frame = spectral_frame(&g, 0.0, None).unwrap();
    assert!(!frame.ambiguous_matching);
    println!(
        "[acceptance] C12 strong_continuity_bound: PASS (50 samples, worst ratio {worst_ratio:.3})"
    );
}
