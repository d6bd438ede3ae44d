mod common;

use common::{exact_residuals, gradient_oracle, jet_oracle, weight_cap};
use ipinn::harness::{read_record, train, ModelKind, RunConfig};
use ipinn::problems::ProblemId;
use ipinn::refcavity::{benchmark_re100, interpolate_profile, solve_cavity_fd, SolverConfig};

#[test]
fn objective_gradients_match_finite_differences() {
    let r = gradient_oracle(20, 11, 1e-5);
    assert!(r.max_params <= 200);
    assert!(r.worst <= 1e-5, "{r:?}");
    assert!(r.worst_routes <= 1e-10, "{r:?}");
}

#[test]
fn input_jets_match_finite_differences() {
    let worst = jet_oracle(1000, 5);
    assert!(worst <= 1e-4, "worst {worst:e}");
}

#[test]
fn closed_form_solutions_have_zero_residual() {
    let (h, k) = exact_residuals(1000, 3);
    assert!(h <= 1e-10, "helmholtz {h:e}");
    assert!(k <= 1e-10, "kg {k:e}");
}

#[test]
fn capped_weights_stay_in_range() {
    let r = weight_cap(100_000, 9);
    assert!(r.all_in_range, "{r:?}");
    assert!(r.worst_limit_gap <= 1e-6, "{r:?}");
}

#[test]
fn cavity_solver_is_deterministic() {
    let a = solve_cavity_fd(100.0, 65, 1e-8, 200_000).unwrap();
    let b = solve_cavity_fd(100.0, 65, 1e-8, 200_000).unwrap();
    assert_eq!(a.iterations, b.iterations);
    assert_eq!(a.u, b.u);
    assert_eq!(a.v, b.v);
}

#[test]
fn creeping_flow_is_mirror_symmetric() {
    let f = solve_cavity_fd(0.01, 65, 1e-9, 200_000).unwrap();
    let prof = f.centerline_v();
    let (mut num, mut den) = (0.0, 0.0);
    for &(x, v) in &prof {
        let mirrored = interpolate_profile(&prof, 1.0 - x);
        num += (v + mirrored).powi(2);
        den += v * v;
    }
    let rel = (num / den).sqrt();
    assert!(rel <= 0.02, "antisymmetry gap {rel:e}");
}

#[test]
fn cavity_matches_benchmark_table() {
    let cfg = SolverConfig::default();
    let f = ipinn::refcavity::solve_cavity_with(100.0, 129, &cfg).unwrap();
    let table = benchmark_re100();
    let prof = f.centerline_u();
    let dev = table
        .u_vs_y
        .iter()
        .map(|&(y, u)| (interpolate_profile(&prof, y) - u).abs())
        .fold(0.0, f64::max);
    assert!(dev <= 0.02, "max deviation {dev}");
}

#[test]
fn short_run_writes_readable_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::new(ProblemId::Helmholtz, ModelKind::Ipinn, 2, 8, 20, 4);
    cfg.grid = 20;
    cfg.out = Some(dir.path().to_path_buf());
    let rec = train(&cfg).unwrap();
    let back = read_record(&dir.path().join("record.json")).unwrap();
    assert_eq!(back.config.seed, 4);
    assert_eq!(back.rel_l2(), rec.rel_l2());
    for f in ["history.csv", "field.csv", "params.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}
