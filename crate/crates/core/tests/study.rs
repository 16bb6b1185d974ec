use std::sync::Arc;

use stokes_eig::mesh::{generate, DomainKind};
use stokes_eig::study::pressure_gap;
use stokes_eig::*;

#[test]
fn pressure_residual_decreases_over_last_levels() {
    for (domain, scheme, levels) in [
        (DomainKind::Square, Scheme::Rt, vec![4, 6, 8, 10]),
        (DomainKind::Square, Scheme::Bdm, vec![4, 6, 8, 10]),
        (DomainKind::Disk, Scheme::Rt, vec![2, 3, 4, 5]),
        (DomainKind::Lshape, Scheme::Bdm, vec![2, 3, 4, 5]),
    ] {
        let c = StudyConfig::new(domain, scheme, 0, Formulation::Full, &levels);
        let r = run_convergence_study(&c).unwrap();
        let gaps: Vec<f64> = r.levels.iter().map(|l| l.pressure.unwrap().pointwise).collect();
        let tail = &gaps[gaps.len() - 3..];
        assert!(tail[0] > tail[1] && tail[1] > tail[2], "{}: {gaps:?}", c.stem());
        assert!(r.levels.iter().all(|l| l.pressure.unwrap().projected < 1e-8));
    }
}

#[test]
fn recovered_pressure_matches_at_n20() {
    let m = Arc::new(generate(DomainKind::Square, 20).unwrap());
    let sys = build_eig_system(&m, Scheme::Rt, 0, Formulation::Full, 0.5).unwrap();
    let sp = solve_generalized(&sys, 1).unwrap();
    let gap = pressure_gap(&sys, &sp.eigenvectors[0]).unwrap().unwrap();
    assert!(gap.projected < 0.1, "{gap:?}");
}

#[test]
fn reduced_reports_no_pressure() {
    let c = StudyConfig::new(DomainKind::Square, Scheme::Rt, 0, Formulation::Reduced, &[3, 4, 5]);
    let r = run_convergence_study(&c).unwrap();
    assert!(r.levels.iter().all(|l| l.pressure.is_none()));
}

#[test]
fn csv_is_deterministic() {
    let c = StudyConfig::new(DomainKind::Lshape, Scheme::Rt, 1, Formulation::Full, &[4, 2, 3]);
    let a = run_convergence_study(&c).unwrap().to_csv();
    let b = run_convergence_study(&c).unwrap().to_csv();
    assert_eq!(a, b);
    let first = a.lines().nth(1).unwrap();
    assert!(first.starts_with("lshape,rt,1,full,2,5e-1,1,"), "{first}");
}

#[test]
fn spectrum_matches_across_solvers_on_a_study_level() {
    let m = Arc::new(generate(DomainKind::Square, 8).unwrap());
    let sys = build_eig_system(&m, Scheme::Bdm, 1, Formulation::Full, 0.5).unwrap();
    assert!(sys.dim() > eigsolve::DENSE_LIMIT);
    let a = solve_generalized_with(&sys, 6, &SolverOptions { kind: SolverKind::ShiftInvert, ..Default::default() }).unwrap();
    let b = solve_generalized_with(&sys, 6, &SolverOptions { kind: SolverKind::Dense, ..Default::default() }).unwrap();
    for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
        assert!((x - y).abs() <= 1e-9 * y, "{x} vs {y}");
    }
    assert!(a.residuals.iter().all(|r| *r < 1e-8), "{:?}", a.residuals);
}
