use std::f64::consts::PI;
use std::sync::Arc;

use helio2d::curve::{ClosedCurve, DiscretizedBoundary};
use helio2d::forward::{
    far_field, measurement_angles, point_source_rhs, scattered_field, solve_cfie, solve_green, BoundarySolver,
    DensityKind, IncidentWave, SolverKind,
};
use helio2d::quadrature::AlpertRule;
use helio2d::specfun::green;
use num_complex::Complex64;

#[derive(serde::Deserialize)]
struct MieCase {
    radius: f64,
    k: f64,
    theta_d: f64,
    angles: Vec<f64>,
    far_field: Vec<[f64; 2]>,
    dudn: Vec<[f64; 2]>,
}

fn mie_cases() -> Vec<MieCase> {
    serde_json::from_str(include_str!("data/mie_circle.json")).unwrap()
}

fn rel_l2(a: &[Complex64], b: &[Complex64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}

fn to_c(v: &[[f64; 2]]) -> Vec<Complex64> {
    v.iter().map(|p| Complex64::new(p[0], p[1])).collect()
}

fn boundary(curve: &ClosedCurve, n: usize) -> Arc<DiscretizedBoundary> {
    Arc::new(curve.sample(n).unwrap())
}

#[test]
fn circle_matches_series_solution() {
    for case in mie_cases() {
        let curve = ClosedCurve::circle(case.radius, [0.0, 0.0], 16).unwrap();
        let b = boundary(&curve, 128);
        let wave = IncidentWave::from_angle(case.k, case.theta_d).unwrap();
        let reference = to_c(&case.far_field);

        let rhs: Vec<Complex64> = b.nodes().iter().map(|&x| -wave.value(x)).collect();
        let phi = solve_cfie(b.clone(), &wave, &rhs, SolverKind::Dense).unwrap();
        let ff = far_field(&phi, &case.angles).unwrap();
        let e_cfie = rel_l2(&ff.values, &reference);

        let psi = solve_green(b.clone(), &wave, SolverKind::Dense).unwrap();
        let ff = far_field(&psi, &case.angles).unwrap();
        let e_green = rel_l2(&ff.values, &reference);

        let stride = 128 / case.dudn.len();
        let sampled: Vec<Complex64> = psi.values.iter().step_by(stride).copied().collect();
        let e_dudn = rel_l2(&sampled, &to_c(&case.dudn));

        assert!(e_cfie <= 1e-10, "k={} cfie {e_cfie:e}", case.k);
        assert!(e_green <= 1e-10, "k={} green {e_green:e}", case.k);
        assert!(e_dudn <= 1e-10, "k={} dudn {e_dudn:e}", case.k);
    }
}

#[test]
fn point_source_benchmark() {
    let curve = ClosedCurve::star7();
    let b = boundary(&curve, 360);
    let k = 1.0;
    let wave = IncidentWave::from_angle(k, 0.0).unwrap();
    let rhs = point_source_rhs(&b, k, [0.0, 0.0]).unwrap();
    let phi = solve_cfie(b, &wave, &rhs, SolverKind::Dense).unwrap();
    let u = scattered_field(&phi, &[[10.0, 8.0]]).unwrap()[0];
    let exact = -green(k, [10.0, 8.0], [0.0, 0.0]).unwrap();
    let err = (u - exact).norm();
    assert!(err <= 1e-10, "{err:e}");
}

#[test]
fn both_representations_agree_for_an_exterior_source() {
    // The field of an exterior point source is an incident field that is
    // regular inside the obstacle, so both formulations apply.
    let curve = ClosedCurve::star7();
    let b = boundary(&curve, 400);
    let k = 3.0;
    let z = [4.0, -1.0];
    let rule = AlpertRule::default();
    let cfie = BoundarySolver::new(b.clone(), k, DensityKind::Cfie, SolverKind::Dense, &rule).unwrap();
    let rhs: Vec<Complex64> = b.nodes().iter().map(|&x| -green(k, x, z).unwrap()).collect();
    let phi = cfie.solve(&rhs, [0.0, 0.0]).unwrap();

    let gr = BoundarySolver::new(b.clone(), k, DensityKind::NormalDerivative, SolverKind::Dense, &rule).unwrap();
    let eta = gr.eta();
    let rhs: Vec<Complex64> = b
        .nodes()
        .iter()
        .zip(b.normals())
        .map(|(&x, &nu)| {
            // gradient of G(x, z) with respect to x
            let g = helio2d::specfun::green_grad(k, z, x).unwrap();
            g[0] * nu[0] + g[1] * nu[1] + Complex64::new(0.0, eta) * green(k, x, z).unwrap()
        })
        .collect();
    let psi = gr.solve(&rhs, [0.0, 0.0]).unwrap();
    let targets = [[6.0, 5.0], [-7.0, 0.5], [0.0, -3.5]];
    let a = scattered_field(&phi, &targets).unwrap();
    let c = scattered_field(&psi, &targets).unwrap();
    assert!(rel_l2(&a, &c) <= 1e-10, "{:e}", rel_l2(&a, &c));
}

#[test]
fn formulations_agree_on_star() {
    let curve = ClosedCurve::star7();
    let angles = measurement_angles(32);
    for (k, n) in [(2.0, 400), (6.0, 800)] {
        let b = boundary(&curve, n);
        let wave = IncidentWave::from_angle(k, 0.4).unwrap();
        let rhs: Vec<Complex64> = b.nodes().iter().map(|&x| -wave.value(x)).collect();
        let a = far_field(&solve_cfie(b.clone(), &wave, &rhs, SolverKind::Dense).unwrap(), &angles).unwrap();
        let c = far_field(&solve_green(b, &wave, SolverKind::Dense).unwrap(), &angles).unwrap();
        let e = rel_l2(&a.values, &c.values);
        assert!(e <= 1e-9, "k={k}: {e:e}");
    }
}

#[test]
fn reciprocity() {
    let curve = ClosedCurve::star7();
    let b = boundary(&curve, 500);
    let k = 2.5;
    let rule = AlpertRule::default();
    let op = BoundarySolver::new(b, k, DensityKind::Cfie, SolverKind::Dense, &rule).unwrap();
    let (alpha, theta) = (0.3, 2.1);
    let u1 = far_field(&op.scatter(&IncidentWave::from_angle(k, alpha).unwrap()).unwrap(), &[theta]).unwrap();
    let u2 = far_field(&op.scatter(&IncidentWave::from_angle(k, theta + PI).unwrap()).unwrap(), &[alpha + PI]).unwrap();
    let e = (u1.values[0] - u2.values[0]).norm() / u1.values[0].norm();
    assert!(e <= 1e-9, "{e:e}");
}

#[test]
fn far_field_converges_spectrally() {
    let curve = ClosedCurve::star7();
    let angles = measurement_angles(16);
    let k = 4.0;
    let wave = IncidentWave::from_angle(k, 0.0).unwrap();
    let run = |n: usize| {
        let b = boundary(&curve, n);
        far_field(&solve_green(b, &wave, SolverKind::Dense).unwrap(), &angles).unwrap().values
    };
    let reference = run(800);
    let e1 = rel_l2(&run(100), &reference);
    let e2 = rel_l2(&run(200), &reference);
    // faster than N^-10 between the two resolutions
    assert!(e2 <= e1 / 1024.0 || e2 <= 1e-13, "{e1:e} {e2:e}");
}
