//! Acceptance criteria, each evaluated at its stated tolerance. Prints one
//! PASS/FAIL line per criterion and fails if any criterion fails.

use std::f64::consts::FRAC_PI_2;
use std::process::{Command, ExitCode};
use std::time::Instant;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use randers::cli::config::{PointSelector, RunConfig};
use randers::connection::{
    difference_tensor, extremal_torsion, extremal_torsion_coordinates, extremal_torsion_frame,
    integrability_defect, recover_b, torsion_circ,
};
use randers::examples::Example;
use randers::geometry::{adapted_frame, orthonormal_frame, point_state, tensor12_norm_sq, PointState};
use randers::oracle::{min_norm_a, min_norm_t};
use randers::randers::{gb_criterion, Verdict, DEFAULT_SAMPLES};
use randers::transport::{parallel_transport, ConnectionKind, Curve};

const RANDOM_POINTS: usize = 20;
const GB_EXAMPLES: [Example; 3] = [Example::FlatConst, Example::Helical, Example::Warped2d];

/// Collects failed conditions of one criterion.
#[derive(Default)]
struct Outcome {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Outcome {
    fn ensure(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }

    fn within(&mut self, label: &str, value: f64, expected: f64, tol: f64) {
        self.ensure((value - expected).abs() <= tol, || {
            format!("{label} = {value:e}, expected {expected} ± {tol:e}")
        });
    }

    fn at_most(&mut self, label: &str, value: f64, bound: f64) {
        self.ensure(value <= bound, || format!("{label} = {value:e} exceeds {bound:e}"));
    }

    fn note(&mut self, text: String) {
        self.notes.push(text);
    }
}

fn random_points(example: Example) -> Vec<Vec<f64>> {
    RunConfig::example(example).resolve_points(&[PointSelector::Random(RANDOM_POINTS)])
}

fn state(example: Example, p: &[f64]) -> PointState {
    point_state(&example.field_spec(), p).expect("sample point is valid")
}

fn axis(n: usize, i: usize) -> DVector<f64> {
    DVector::from_fn(n, |r, _| if r == i { 1.0 } else { 0.0 })
}

/// Whether the difference-tensor problem is feasible along every frame vector.
fn oracle_feasible(ps: &PointState) -> bool {
    let frame = orthonormal_frame(ps);
    (0..ps.dim()).all(|a| min_norm_a(ps, &frame.vector(a)).result.feasible)
}

fn criterion_1(out: &mut Outcome) {
    let expected = [
        (Example::FlatConst, Verdict::GeneralizedBerwald),
        (Example::Helical, Verdict::GeneralizedBerwald),
        (Example::Shear, Verdict::NotGeneralizedBerwald),
        (Example::Warped2d, Verdict::GeneralizedBerwald),
    ];
    for (example, verdict) in expected {
        let gb = gb_criterion(&example.field_spec(), DEFAULT_SAMPLES, 0).unwrap();
        out.ensure(gb.verdict == verdict, || {
            format!("{example}: verdict {:?}, expected {verdict:?}", gb.verdict)
        });
        let mut points = vec![example.reference_point()];
        points.extend(random_points(example));
        let mut tested = 0;
        for p in &points {
            let feasible = oracle_feasible(&state(example, p));
            tested += 1;
            out.ensure(feasible == verdict.admits_compatible_connection(), || {
                format!("{example} at {p:?}: oracle feasible = {feasible}, criterion {verdict:?}")
            });
        }
        out.note(format!("{example}: {tested} points agree"));
    }
    let shear_ref = state(Example::Shear, &[0.5, 0.0]);
    out.ensure(!oracle_feasible(&shear_ref), || "shear at (0.5, 0) is feasible".into());
}

fn criterion_2(out: &mut Outcome) {
    let mut worst: f64 = 0.0;
    for example in [Example::Helical, Example::Warped2d] {
        for p in random_points(example) {
            let ps = state(example, &p);
            let a = difference_tensor(&ps).unwrap();
            let frame = orthonormal_frame(&ps);
            let directions = (0..ps.dim())
                .map(|i| frame.vector(i))
                .chain((0..ps.dim()).map(|i| axis(ps.dim(), i)));
            for x in directions {
                let sol = min_norm_a(&ps, &x);
                let diff = (a.slice(&x) - &sol.slice).amax();
                worst = worst.max(diff);
                out.at_most(&format!("{example} at {p:?}: |ι_X A − oracle|"), diff, 1e-8);
            }
        }
    }
    let origin = state(Example::Helical, &[0.0; 3]);
    let objective = min_norm_a(&origin, &axis(3, 2)).result.objective;
    out.within("helical origin objective along ∂3", objective, 2.0, 1e-8);
    out.note(format!("worst componentwise gap {worst:.2e}, origin objective {objective:.12}"));
}

/// Least-squares slope of `log10 y` against `log10 x`.
fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.log10()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.log10()).collect();
    let mx = lx.iter().sum::<f64>() / lx.len() as f64;
    let my = ly.iter().sum::<f64>() / ly.len() as f64;
    let num: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    num / den
}

fn criterion_3(out: &mut Outcome) {
    let spec = Example::Helical.field_spec();
    let curve = Curve::new(&["0", "0", "t"], 3, 0.0, FRAC_PI_2).unwrap();
    let v0 = axis(3, 0);

    let circ = parallel_transport(&spec, &curve, &v0, ConnectionKind::NablaCirc, 1000).unwrap();
    out.at_most("nabla_circ drift_F at 1000 steps", circ.drift_f, 1e-8);
    let lc = parallel_transport(&spec, &curve, &v0, ConnectionKind::LeviCivita, 1000).unwrap();
    out.within("levi_civita drift_beta", lc.drift_beta, 0.5 * (1.0 - FRAC_PI_2.cos()), 1e-6);

    let steps = [10usize, 100, 1000];
    let runs: Vec<_> = steps
        .iter()
        .map(|&n| parallel_transport(&spec, &curve, &v0, ConnectionKind::NablaCirc, n).unwrap())
        .collect();
    let xs: Vec<f64> = steps.iter().map(|&n| n as f64).collect();
    let fits = [
        ("drift_alpha", runs.iter().map(|r| r.drift_alpha).collect::<Vec<_>>()),
        ("drift_beta", runs.iter().map(|r| r.drift_beta).collect()),
        ("drift_F", runs.iter().map(|r| r.drift_f).collect()),
    ];
    for (label, ys) in &fits {
        let order = -loglog_slope(&xs, ys);
        out.within(&format!("fitted {label} order"), order, 4.0, 0.3);
        let shown: Vec<String> = ys.iter().map(|y| format!("{y:.3e}")).collect();
        out.note(format!("{label} order {order:.3} from [{}]", shown.join(", ")));
    }
    let exact = [FRAC_PI_2.cos(), FRAC_PI_2.sin(), 0.0];
    let errors: Vec<f64> = runs
        .iter()
        .map(|r| {
            r.final_vector
                .iter()
                .zip(exact)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    out.note(format!(
        "for reference, final-vector error order {:.3}",
        -loglog_slope(&xs, &errors)
    ));
}

fn criterion_4(out: &mut Outcome) {
    let origin = state(Example::Helical, &[0.0; 3]);
    let t = extremal_torsion(&origin).unwrap();
    let t_circ = torsion_circ(&origin).unwrap();
    out.within("|T|² at helical origin", tensor12_norm_sq(&origin, &t), 3.0, 1e-8);
    out.within("|T°|² at helical origin", tensor12_norm_sq(&origin, &t_circ), 4.0, 1e-8);
    let mut worst: f64 = 0.0;
    for p in random_points(Example::Helical) {
        let ps = state(Example::Helical, &p);
        let norm = tensor12_norm_sq(&ps, &extremal_torsion(&ps).unwrap());
        let objective = min_norm_t(&ps).unwrap().result.objective;
        worst = worst.max((norm - objective).abs());
        out.within(&format!("oracle objective at {p:?}"), objective, norm, 1e-8);
    }
    out.note(format!("worst |T|² gap to oracle {worst:.2e}"));
}

fn criterion_5(out: &mut Outcome) {
    for example in [Example::FlatConst, Example::Warped2d] {
        let mut points = vec![example.reference_point()];
        points.extend(random_points(example));
        for p in &points {
            let ps = state(example, p);
            let defect = integrability_defect(&example.field_spec(), p).unwrap();
            out.at_most(&format!("{example} defect at {p:?}"), defect, 1e-8);
            let t = tensor12_norm_sq(&ps, &extremal_torsion(&ps).unwrap()).sqrt();
            let t_circ = tensor12_norm_sq(&ps, &torsion_circ(&ps).unwrap()).sqrt();
            out.within(&format!("{example} |T| at {p:?}"), t, t_circ, 1e-9);
        }
    }
    let origin = state(Example::Helical, &[0.0; 3]);
    let defect = integrability_defect(&Example::Helical.field_spec(), &[0.0; 3]).unwrap();
    out.within("helical origin defect", defect, 0.5, 1e-6);
    let t = tensor12_norm_sq(&origin, &extremal_torsion(&origin).unwrap());
    let t_circ = tensor12_norm_sq(&origin, &torsion_circ(&origin).unwrap());
    out.ensure(t < t_circ - 0.5, || format!("|T|² = {t} not below |T°|² − 0.5 = {}", t_circ - 0.5));
    out.note(format!("helical origin: defect {defect:.12}, |T|² {t:.12}, |T°|² {t_circ:.12}"));
}

fn criterion_6(out: &mut Outcome) {
    let origin = state(Example::Helical, &[0.0; 3]);
    let frame = adapted_frame(&origin).unwrap();
    let closed = extremal_torsion(&origin).unwrap().to_frame(&origin, &frame);
    let by_frame = extremal_torsion_frame(&origin, &frame).unwrap();
    let by_coords = extremal_torsion_coordinates(&origin).unwrap();
    for (label, comps) in [("frame", &by_frame), ("coordinate", &by_coords)] {
        out.within(&format!("{label} T^n_21"), comps.normal[(1, 0)], 1.0, 1e-8);
        out.within(&format!("{label} T^1_2n"), comps.tangential_mixed[(1, 0)], -0.5, 1e-8);
        out.at_most(
            &format!("{label} components vs closed form"),
            comps.to_tensor().max_abs_diff(&closed),
            1e-8,
        );
    }
    out.within("closed-form T^n_21", closed.get(1, 0, 2), 1.0, 1e-8);
    out.within("closed-form T^1_2n", closed.get(1, 2, 0), -0.5, 1e-8);

    let mut worst: f64 = 0.0;
    for example in GB_EXAMPLES {
        for p in random_points(example) {
            let ps = state(example, &p);
            let frame = adapted_frame(&ps).unwrap();
            let closed = extremal_torsion(&ps).unwrap().to_frame(&ps, &frame);
            let diff = extremal_torsion_frame(&ps, &frame)
                .unwrap()
                .to_tensor()
                .max_abs_diff(&closed);
            worst = worst.max(diff);
            out.at_most(&format!("{example} frame components at {p:?}"), diff, 1e-8);
        }
    }
    out.note(format!("worst frame gap at random points {worst:.2e}"));
}

fn criterion_7(out: &mut Outcome) {
    let mut worst_residual: f64 = 0.0;
    for example in GB_EXAMPLES {
        for p in random_points(example) {
            let ps = state(example, &p);
            let a = difference_tensor(&ps).unwrap();
            let b = recover_b(&ps).unwrap();
            let mut residuals = vec![
                ("A skewness", a.skewness_residual(&ps)),
                ("B skewness", b.skewness_residual(&ps)),
            ];
            for i in 0..ps.dim() {
                let e = axis(ps.dim(), i);
                let nabla = ps.nabla_beta_sharp_along(&e);
                residuals.push(("A(X,β♯) + ∇*_X β♯", (a.apply(&e, &ps.beta_sharp) + nabla).amax()));
                residuals.push(("B(X,β♯)", b.apply(&e, &ps.beta_sharp).amax()));
            }
            for (label, r) in residuals {
                worst_residual = worst_residual.max(r);
                out.at_most(&format!("{example} {label} at {p:?}"), r, 1e-10);
            }
        }
    }

    let h = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_fd: f64 = 0.0;
    let mut count = 0;
    for example in Example::ALL {
        let spec = example.field_spec();
        let n = spec.dim();
        for p in random_points(example) {
            for (label, e) in spec.expressions() {
                let u: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                let (_, d) = e.eval_dual(&p, &u).unwrap();
                let shifted = |s: f64| -> Vec<f64> { p.iter().zip(&u).map(|(x, v)| x + s * h * v).collect() };
                let fd = (e.eval(&shifted(1.0)).unwrap() - e.eval(&shifted(-1.0)).unwrap()) / (2.0 * h);
                let rel = (d - fd).abs() / d.abs().max(1.0);
                worst_fd = worst_fd.max(rel);
                count += 1;
                out.at_most(&format!("{example} {label} derivative at {p:?}"), rel, 1e-6);
            }
        }
    }
    out.note(format!(
        "worst residual {worst_residual:.2e}; worst derivative gap {worst_fd:.2e} over {count} derivatives"
    ));
}

fn criterion_8(out: &mut Outcome) {
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_randers"))
            .args(["verify", "--example", "helical", "--seed", "7", "--json"])
            .output()
            .expect("binary runs")
    };
    let first = run();
    let second = run();
    out.ensure(first.status.code() == Some(0), || format!("first run exited {:?}", first.status));
    out.ensure(!first.stdout.is_empty(), || "empty report".into());
    out.ensure(first.stdout == second.stdout, || "reports differ".into());
    out.note(format!("{} bytes, identical", first.stdout.len()));
}

fn main() -> ExitCode {
    let criteria: [(&str, fn(&mut Outcome)); 8] = [
        ("compatible connection exists exactly when |β♯| is constant", criterion_1),
        ("closed-form difference tensor is the minimum-norm solution", criterion_2),
        ("compatible transport preserves F at fourth order", criterion_3),
        ("extremal torsion is the minimum-norm torsion", criterion_4),
        ("torsion reduction vanishes exactly for integrable distributions", criterion_5),
        ("adapted-frame components match the closed form", criterion_6),
        ("constraint residuals and dual-number derivatives", criterion_7),
        ("verify reports are byte-identical across runs", criterion_8),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (i, (title, run)) in criteria.iter().enumerate() {
        let mut out = Outcome::default();
        run(&mut out);
        let status = if out.failures.is_empty() { "PASS" } else { "FAIL" };
        println!("criterion {}: {status}  {title}", i + 1);
        for note in &out.notes {
            println!("    {note}");
        }
        for f in out.failures.iter().take(10) {
            println!("    failed: {f}");
        }
        if out.failures.len() > 10 {
            println!("    ... {} more", out.failures.len() - 10);
        }
        if !out.failures.is_empty() {
            failed += 1;
        }
    }
    println!(
        "{} of {} criteria passed in {:.2} s",
        criteria.len() - failed,
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
