use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use randers::connection::{
    dbeta, difference_tensor, exterior_derivative, extremal_torsion, extremal_torsion_frame,
    integrability_defect, omega, recover_b, torsion_circ,
};
use randers::examples::Example;
use randers::expr::parse;
use randers::geometry::{
    adapted_frame, orthonormal_frame, point_state, tensor12_norm_sq, Basis, DomainBox, FieldSpec,
    PointState, Tensor12,
};
use randers::oracle::{min_norm_a, min_norm_t};
use randers::randers::{gb_criterion, randers_norm};
use randers::transport::{parallel_transport, ConnectionKind, Curve};

fn expression() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        (-2.0f64..2.0).prop_map(|c| format!("{c:.4}")),
        (1usize..=3).prop_map(|i| format!("x{i}")),
    ];
    leaf.prop_recursive(3, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} + {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} - {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} * {b})")),
            inner.clone().prop_map(|a| format!("sin({a})")),
            inner.clone().prop_map(|a| format!("cos({a})")),
            inner.clone().prop_map(|a| format!("exp(sin({a}))")),
            inner.clone().prop_map(|a| format!("sqrt(1 + ({a})^2)")),
            inner.clone().prop_map(|a| format!("({a})^3")),
            inner.clone().prop_map(|a| format!("1/(2 + cos({a}))")),
        ]
    })
}

fn vec3(lo: f64, hi: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(lo..hi, 3)
}

fn gb_example() -> impl Strategy<Value = Example> {
    prop_oneof![
        Just(Example::FlatConst),
        Just(Example::Helical),
        Just(Example::Warped2d)
    ]
}

/// A valid Randers space with a non-diagonal metric and non-constant `|β♯|`.
fn generic_spec() -> FieldSpec {
    let metric = vec![
        vec!["1 + x2^2".to_string(), "0.3*sin(x1)".into(), "0.1*x3".into()],
        vec!["".into(), "2 + cos(x1*x2)".into(), "0.2*x1*x2".into()],
        vec!["".into(), "".into(), "exp(0.3*x1)".into()],
    ];
    let beta = vec!["0.2*cos(x2)".to_string(), "0.1*x1*x3".into(), "0.15 + 0.05*sin(x3)".into()];
    let domain = DomainBox {
        min: vec![-1.0; 3],
        max: vec![1.0; 3],
    };
    FieldSpec::new(3, &metric, &beta, domain).unwrap()
}

/// Point of `example` from unit-cube coordinates.
fn point_in(example: Example, unit: &[f64]) -> Vec<f64> {
    let dom = example.domain();
    dom.map_unit(&unit[..example.dimension()])
}

fn state_at(example: Example, unit: &[f64]) -> PointState {
    point_state(&example.field_spec(), &point_in(example, unit)).unwrap()
}

fn unit_point() -> impl Strategy<Value = Vec<f64>> {
    vec3(0.0, 1.0)
}

/// Random `δ` with `δ` skew and `δ·b̂ = 0`, orthonormal-frame components.
fn feasible_perturbation(rng: &mut ChaCha8Rng, proj: &DMatrix<f64>) -> DMatrix<f64> {
    let n = proj.nrows();
    let scale = 10f64.powf(rng.random_range(-6.0..0.0));
    let raw = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    proj * (&raw - raw.transpose()) * proj * scale
}

fn frame_projector(ps: &PointState, frame_vectors: &DMatrix<f64>) -> DMatrix<f64> {
    let n = ps.dim();
    let b_hat = frame_vectors.transpose() * ps.lower(&ps.beta_sharp) / ps.k();
    DMatrix::identity(n, n) - &b_hat * b_hat.transpose()
}

proptest! {
    #[test]
    fn dual_derivative_matches_finite_difference(
        text in expression(),
        p in vec3(-1.0, 1.0),
        u in vec3(-1.0, 1.0),
    ) {
        let e = parse(&text, 3, false).unwrap();
        let h = 1e-6;
        let (_, d) = e.eval_dual(&p, &u).unwrap();
        let shifted = |s: f64| -> Vec<f64> { p.iter().zip(&u).map(|(x, v)| x + s * h * v).collect() };
        let fd = (e.eval(&shifted(1.0)).unwrap() - e.eval(&shifted(-1.0)).unwrap()) / (2.0 * h);
        prop_assert!((d - fd).abs() <= 1e-6 * d.abs().max(1.0), "{text}: dual {d}, fd {fd}");
    }

    #[test]
    fn dual_derivative_is_linear_in_direction(
        text in expression(),
        p in vec3(-1.0, 1.0),
        u in vec3(-1.0, 1.0),
        w in vec3(-1.0, 1.0),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
    ) {
        let e = parse(&text, 3, false).unwrap();
        let combo: Vec<f64> = u.iter().zip(&w).map(|(x, y)| a * x + b * y).collect();
        let (_, dc) = e.eval_dual(&p, &combo).unwrap();
        let (_, du) = e.eval_dual(&p, &u).unwrap();
        let (_, dw) = e.eval_dual(&p, &w).unwrap();
        let scale = (a * du).abs() + (b * dw).abs();
        prop_assert!((dc - a * du - b * dw).abs() <= 1e-12 * scale.max(1.0));
    }

    #[test]
    fn levi_civita_is_metric_and_symmetric(p in vec3(-1.0, 1.0)) {
        let ps = point_state(&generic_spec(), &p).unwrap();
        let g = &ps.christoffel;
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    prop_assert_eq!(g.get(i, j, k), g.get(j, i, k));
                    let rhs: f64 = (0..3)
                        .map(|l| ps.g[(l, k)] * g.get(i, j, l) + ps.g[(j, l)] * g.get(i, k, l))
                        .sum();
                    prop_assert!((ps.dg[i][(j, k)] - rhs).abs() <= 1e-8);
                }
            }
        }
    }

    #[test]
    fn leibniz_rule_for_length(p in vec3(-1.0, 1.0), x in vec3(-1.0, 1.0)) {
        let ps = point_state(&generic_spec(), &p).unwrap();
        let x = DVector::from_vec(x);
        let lhs = 2.0 * ps.inner(&ps.nabla_beta_sharp_along(&x), &ps.beta_sharp);
        prop_assert!((lhs - ps.length_sq_partials.dot(&x)).abs() <= 1e-8);
    }

    #[test]
    fn tensor_norm_is_basis_independent(
        p in vec3(-1.0, 1.0),
        comps in prop::collection::vec(-1.0f64..1.0, 27),
    ) {
        let ps = point_state(&generic_spec(), &p).unwrap();
        let t = Tensor12::from_fn(3, Basis::Chart, |i, j, k| comps[(i * 3 + j) * 3 + k]);
        let chart = tensor12_norm_sq(&ps, &t);
        let framed: f64 = t
            .to_frame(&ps, &orthonormal_frame(&ps))
            .as_slice()
            .iter()
            .map(|v| v * v)
            .sum();
        prop_assert!((chart - framed).abs() <= 1e-10 * chart.max(1.0));
    }

    #[test]
    fn randers_norm_positive_and_homogeneous(
        p in vec3(-1.0, 1.0),
        v in vec3(-1.0, 1.0),
        lambda in 0.01f64..100.0,
    ) {
        let ps = point_state(&generic_spec(), &p).unwrap();
        let v = DVector::from_vec(v);
        prop_assume!(v.norm() > 1e-6);
        let f = randers_norm(&ps, &v);
        prop_assert!(f > 0.0);
        let scaled = randers_norm(&ps, &(&v * lambda));
        prop_assert!((scaled - lambda * f).abs() <= 1e-12 * (lambda * f).max(1.0));
    }

    #[test]
    fn criterion_verdict_ignores_seed(seed in any::<u64>()) {
        for e in Example::ALL {
            let reference = gb_criterion(&e.field_spec(), 50, 0).unwrap().verdict;
            prop_assert_eq!(gb_criterion(&e.field_spec(), 50, seed).unwrap().verdict, reference);
        }
    }

    #[test]
    fn connection_constraints_hold(example in gb_example(), unit in unit_point()) {
        let ps = state_at(example, &unit);
        let n = ps.dim();
        let a = difference_tensor(&ps).unwrap();
        let b = recover_b(&ps).unwrap();
        let t_circ = torsion_circ(&ps).unwrap();
        let om = omega(&ps).unwrap();
        let t = extremal_torsion(&ps).unwrap();
        prop_assert!(a.skewness_residual(&ps) <= 1e-10);
        prop_assert!(b.skewness_residual(&ps) <= 1e-10);
        for i in 0..n {
            let e = ps.basis_vector(i);
            let nabla = ps.nabla_beta_sharp_along(&e);
            prop_assert!((a.apply(&e, &ps.beta_sharp) + nabla).amax() <= 1e-10);
            prop_assert!(b.apply(&e, &ps.beta_sharp).amax() <= 1e-10);
        }
        for tensor in [&t_circ, &om, &t] {
            prop_assert!(tensor.antisymmetry_residual() <= 1e-10);
        }
        prop_assert_eq!(&t, &t_circ.add(&om));
        prop_assert!(t.max_abs_diff(&t_circ.add(&b.antisymmetrized())) <= 1e-10);
        let d = dbeta(&ps);
        prop_assert!((&d - exterior_derivative(&ps)).amax() <= 1e-8);
        prop_assert!((&d + d.transpose()).amax() <= 1e-10);
    }

    #[test]
    fn frame_components_match_closed_form(example in gb_example(), unit in unit_point()) {
        let ps = state_at(example, &unit);
        let frame = adapted_frame(&ps).unwrap();
        let closed = extremal_torsion(&ps).unwrap().to_frame(&ps, &frame);
        let comps = extremal_torsion_frame(&ps, &frame).unwrap();
        prop_assert!(comps.to_tensor().max_abs_diff(&closed) <= 1e-8);
    }

    #[test]
    fn extremal_norm_drops_exactly_when_not_integrable(example in gb_example(), unit in unit_point()) {
        let ps = state_at(example, &unit);
        let p = point_in(example, &unit);
        let t = tensor12_norm_sq(&ps, &extremal_torsion(&ps).unwrap());
        let t_circ = tensor12_norm_sq(&ps, &torsion_circ(&ps).unwrap());
        let defect = integrability_defect(&example.field_spec(), &p).unwrap();
        prop_assert!(t <= t_circ + 1e-10);
        prop_assert_eq!((t_circ - t).abs() <= 1e-9, defect < 1e-8);
    }

    #[test]
    fn oracle_agrees_with_closed_forms(example in gb_example(), unit in unit_point()) {
        let ps = state_at(example, &unit);
        let a = difference_tensor(&ps).unwrap();
        let frame = orthonormal_frame(&ps);
        for i in 0..ps.dim() {
            let x = frame.vector(i);
            let sol = min_norm_a(&ps, &x);
            prop_assert!(sol.result.feasible);
            prop_assert!((a.slice(&x) - &sol.slice).amax() <= 1e-8);
        }
        let t = extremal_torsion(&ps).unwrap();
        let sol = min_norm_t(&ps).unwrap();
        prop_assert!((tensor12_norm_sq(&ps, &t) - sol.result.objective).abs() <= 1e-8);
        prop_assert!(t.max_abs_diff(&sol.torsion) <= 1e-8);
    }

    #[test]
    fn difference_tensor_beats_feasible_perturbations(
        example in gb_example(),
        unit in unit_point(),
        seed in any::<u64>(),
    ) {
        let ps = state_at(example, &unit);
        let n = ps.dim();
        let frame = orthonormal_frame(&ps);
        let a_f = difference_tensor(&ps).unwrap().to_frame(&ps, &frame);
        let proj = frame_projector(&ps, &frame.vectors);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in 0..n {
            let slice = DMatrix::from_fn(n, n, |j, k| a_f.get(i, j, k));
            for _ in 0..100 {
                let moved = &slice + feasible_perturbation(&mut rng, &proj);
                prop_assert!(moved.norm() >= slice.norm() - 1e-12);
            }
        }
    }

    #[test]
    fn extremal_torsion_beats_feasible_perturbations(
        example in gb_example(),
        unit in unit_point(),
        seed in any::<u64>(),
    ) {
        let ps = state_at(example, &unit);
        let n = ps.dim();
        let frame = orthonormal_frame(&ps);
        let t_f = extremal_torsion(&ps).unwrap().to_frame(&ps, &frame);
        let base = t_f.as_slice().iter().map(|v| v * v).sum::<f64>().sqrt();
        let proj = frame_projector(&ps, &frame.vectors);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..100 {
            let delta: Vec<DMatrix<f64>> = (0..n).map(|_| feasible_perturbation(&mut rng, &proj)).collect();
            let moved = Tensor12::from_fn(n, Basis::Frame, |i, j, k| {
                t_f.get(i, j, k) + delta[i][(j, k)] - delta[j][(i, k)]
            });
            let norm = moved.as_slice().iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assert!(norm >= base - 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn transport_is_linear(
        v in vec3(-1.0, 1.0),
        w in vec3(-1.0, 1.0),
        a in -2.0f64..2.0,
        b in -2.0f64..2.0,
        kind in prop_oneof![
            Just(ConnectionKind::LeviCivita),
            Just(ConnectionKind::NablaCirc),
            Just(ConnectionKind::Extremal)
        ],
    ) {
        let spec = Example::Helical.field_spec();
        let curve = Curve::new(&["0.6*t", "0.3*t^2", "0.8*t"], 3, 0.0, 1.0).unwrap();
        let (v, w) = (DVector::from_vec(v), DVector::from_vec(w));
        let tv = parallel_transport(&spec, &curve, &v, kind, 50).unwrap().final_vector;
        let tw = parallel_transport(&spec, &curve, &w, kind, 50).unwrap().final_vector;
        let tc = parallel_transport(&spec, &curve, &(&v * a + &w * b), kind, 50).unwrap().final_vector;
        for k in 0..3 {
            let expected = a * tv[k] + b * tw[k];
            prop_assert!((tc[k] - expected).abs() <= 1e-10 * expected.abs().max(1.0));
        }
    }

    #[test]
    fn compatible_transport_preserves_norms(
        v in vec3(-1.0, 1.0),
        example in gb_example(),
        kind in prop_oneof![Just(ConnectionKind::NablaCirc), Just(ConnectionKind::Extremal)],
    ) {
        let n = example.dimension();
        let spec = example.field_spec();
        let def = &example.curves()[0];
        let curve = Curve::from_def(def, n).unwrap();
        let v = DVector::from_column_slice(&v[..n]);
        let r = parallel_transport(&spec, &curve, &v, kind, def.steps).unwrap();
        prop_assert!(r.drift_alpha <= 1e-8 && r.drift_beta <= 1e-8 && r.drift_f <= 1e-8);
    }
}

#[test]
fn levi_civita_breaks_beta_only_when_beta_sharp_is_not_parallel() {
    let cases = [
        (Example::Helical, vec!["0", "0", "t"], true),
        (Example::Helical, vec!["t", "0.5*t", "0"], false),
        (Example::FlatConst, vec!["0.6*t", "0.8*t", "0"], false),
        (Example::Shear, vec!["0.5", "t"], false),
        (Example::Shear, vec!["t", "0"], true),
        (Example::Warped2d, vec!["0.6*t", "0.8*t"], true),
    ];
    for (example, comps, breaks) in cases {
        let n = example.dimension();
        let spec = example.field_spec();
        let curve = Curve::new(&comps, n, 0.0, 0.5).unwrap();
        let worst = (0..n)
            .map(|i| {
                let e = DVector::from_fn(n, |r, _| if r == i { 1.0 } else { 0.0 });
                let r = parallel_transport(&spec, &curve, &e, ConnectionKind::LeviCivita, 200).unwrap();
                assert!(r.drift_alpha <= 1e-8, "{example} {comps:?}");
                r.drift_beta
            })
            .fold(0.0, f64::max);
        assert_eq!(worst > 1e-8, breaks, "{example} {comps:?}: drift_beta {worst:e}");
    }
}

#[test]
fn compatible_drift_is_bounded_by_fourth_order() {
    let spec = Example::Helical.field_spec();
    for comps in [["0", "0", "t"], ["0.6*t", "0.3*t^2", "0.8*t"]] {
        let curve = Curve::new(&comps, 3, 0.0, 1.0).unwrap();
        let v0 = DVector::from_column_slice(&[1.0, 0.0, 0.0]);
        for kind in [ConnectionKind::NablaCirc, ConnectionKind::Extremal] {
            let drifts: Vec<[f64; 3]> = [10usize, 100, 1000]
                .iter()
                .map(|&steps| {
                    let r = parallel_transport(&spec, &curve, &v0, kind, steps).unwrap();
                    [r.drift_alpha, r.drift_beta, r.drift_f]
                })
                .collect();
            for (fine, ratio) in [(1, 1e-4), (2, 1e-8)] {
                for q in 0..3 {
                    assert!(
                        drifts[fine][q] <= 1.5 * ratio * drifts[0][q] + 1e-13,
                        "{comps:?} {kind}: {drifts:?}"
                    );
                }
            }
        }
    }
}
