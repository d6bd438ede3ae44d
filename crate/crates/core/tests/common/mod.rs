#![allow(dead_code)]

use std::f64::consts::PI;

use ipinn::autodiff::Jet2;
use ipinn::network::{eval_jet2, forward, init_params, ArchKind, NetworkDef};
use ipinn::problems::{
    sample_points, Helmholtz, KleinGordon, Objective, Pde, ProblemSpec, SampleCounts,
};
use ipinn::weighting::{lambdas, Scheme, WeightState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `|a - b| / max(|a|, |b|, 1)`.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

#[derive(Debug)]
pub struct GradientReport {
    pub configs: usize,
    pub entries: usize,
    pub worst: f64,
    /// Largest disagreement between the batched and the scalar-tape route.
    pub worst_routes: f64,
    pub max_params: usize,
}

/// Objective gradients against central differences on random small
/// configurations covering both architectures, all schemes, and the
/// Helmholtz and KG problems.
pub fn gradient_oracle(configs: usize, seed: u64, step: f64) -> GradientReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = GradientReport {
        configs,
        entries: 0,
        worst: 0.0,
        worst_routes: 0.0,
        max_params: 0,
    };
    let kinds = [ArchKind::Plain, ArchKind::Improved];
    let schemes = [Scheme::Fixed, Scheme::Aw, Scheme::Iaw];
    for k in 0..configs {
        let kind = kinds[k % 2];
        let scheme = schemes[(k / 2) % 3];
        let pde = if (k / 6) % 2 == 0 {
            Pde::Helmholtz(Helmholtz::default())
        } else {
            Pde::Kg(KleinGordon::default())
        };
        let mut spec = ProblemSpec::new(pde);
        spec.gamma = [1.0, 100.0, 1e6][rng.random_range(0..3)];
        let (layers, units) = loop {
            let l = rng.random_range(1..=3);
            let u = rng.random_range(2..=7);
            let def = NetworkDef::new(kind, 2, 1, l, u).unwrap();
            if def.param_count() <= 200 {
                break (l, u);
            }
        };
        let def = NetworkDef::new(kind, 2, 1, layers, units).unwrap();
        let counts = SampleCounts {
            n_r: 8,
            n_bc: 8,
            n_ic: 8,
        };
        let batch = sample_points(&spec, counts, rng.random()).unwrap();
        let weights = WeightState::build(scheme, &spec.pde.terms(), spec.gamma).unwrap();
        let obj = Objective::new(&spec, &def, &batch, &weights).unwrap();
        let mut theta = init_params(&def, rng.random()).values;
        // nonzero biases and perturbed uncertainties
        for v in theta.iter_mut() {
            *v += 0.1 * rng.random_range(-1.0..1.0);
        }
        theta.extend(weights.raw.iter().map(|s| s + rng.random_range(-0.5..0.5)));
        report.max_params = report.max_params.max(def.param_count());

        let fast = obj.evaluate(&theta).unwrap();
        let tape = obj.evaluate_on_tape(&theta).unwrap();
        for (a, b) in fast.grad.iter().zip(&tape.grad) {
            report.worst_routes = report.worst_routes.max(rel_err(*a, *b));
        }
        for i in 0..theta.len() {
            let mut p = theta.clone();
            p[i] = theta[i] + step;
            let fp = obj.loss(&p).unwrap().0;
            p[i] = theta[i] - step;
            let fm = obj.loss(&p).unwrap().0;
            let fd = (fp - fm) / (2.0 * step);
            report.worst = report.worst.max(rel_err(fast.grad[i], fd));
            report.entries += 1;
        }
    }
    report
}

/// Worst relative disagreement of first and second input derivatives with
/// finite differences over `points` random points on random networks.
pub fn jet_oracle(points: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs = [(0, 0), (0, 1), (1, 1)];
    let mut worst: f64 = 0.0;
    let per_net = 50;
    let mut done = 0;
    while done < points {
        let kind = if rng.random() {
            ArchKind::Plain
        } else {
            ArchKind::Improved
        };
        let def = NetworkDef::new(
            kind,
            2,
            1,
            rng.random_range(1..=4),
            rng.random_range(3..=12),
        )
        .unwrap();
        let params = init_params(&def, rng.random()).values;
        let f = |x: [f64; 2]| forward(&def, &params, &x).unwrap()[0];
        for _ in 0..per_net.min(points - done) {
            let x = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let jet = &eval_jet2(&def, &params, &x, &pairs).unwrap()[0];
            let h1 = 1e-4;
            let h2 = 1e-4;
            let shift = |dx: f64, dy: f64| f([x[0] + dx, x[1] + dy]);
            let gx = (shift(h1, 0.0) - shift(-h1, 0.0)) / (2.0 * h1);
            let gy = (shift(0.0, h1) - shift(0.0, -h1)) / (2.0 * h1);
            let f0 = f(x);
            let xx = (shift(h2, 0.0) - 2.0 * f0 + shift(-h2, 0.0)) / (h2 * h2);
            let yy = (shift(0.0, h2) - 2.0 * f0 + shift(0.0, -h2)) / (h2 * h2);
            let xy = (shift(h2, h2) - shift(h2, -h2) - shift(-h2, h2) + shift(-h2, -h2))
                / (4.0 * h2 * h2);
            for (a, b) in [
                (jet.grad[0], gx),
                (jet.grad[1], gy),
                (jet.second[0], xx),
                (jet.second[1], xy),
                (jet.second[2], yy),
            ] {
                worst = worst.max(rel_err(a, b));
            }
            done += 1;
        }
    }
    worst
}

/// Largest residual of the closed-form Helmholtz and KG solutions, with
/// derivatives propagated exactly through jets.
pub fn exact_residuals(points: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs = [(0, 0), (1, 1)];
    let h = Helmholtz::default();
    let helm = Pde::Helmholtz(h);
    let kg = Pde::Kg(KleinGordon::default());
    let (mut worst_h, mut worst_k): (f64, f64) = (0.0, 0.0);
    for _ in 0..points {
        let x = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let jx = Jet2::variable(x[0], 0, 2, &pairs);
        let jy = Jet2::variable(x[1], 1, 2, &pairs);
        let u = jx.scale(h.a1 * PI).sin().mul(&jy.scale(h.a2 * PI).sin());
        worst_h = worst_h.max(helm.residual(&[u], &x)[0].abs());

        let x = [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
        let jx = Jet2::variable(x[0], 0, 2, &pairs);
        let jt = Jet2::variable(x[1], 1, 2, &pairs);
        let xt = jx.mul(&jt);
        let u = jx.mul(&jt.scale(5.0 * PI).cos()).add(&xt.mul(&xt).mul(&xt));
        worst_k = worst_k.max(kg.residual(&[u], &x)[0].abs());
    }
    (worst_h, worst_k)
}

#[derive(Debug)]
pub struct CapReport {
    pub samples: usize,
    pub all_in_range: bool,
    pub max_lambda: Vec<f64>,
    pub worst_limit_gap: f64,
}

/// IAW multipliers over `samples` random raw uncertainties stay in
/// `(0, gamma]`; at `gamma = 1e12` they match twice the AW multipliers.
pub fn weight_cap(samples: usize, seed: u64) -> CapReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gammas = [1.0, 1e3, 1e6];
    let mut all = true;
    let mut maxes = vec![0.0f64; gammas.len()];
    let mut gap: f64 = 0.0;
    let raw: Vec<f64> = (0..samples)
        .map(|_| rng.random_range(-30.0..30.0))
        .collect();
    for (g, m) in gammas.iter().zip(maxes.iter_mut()) {
        for l in lambdas(Scheme::Iaw, *g, &raw, &[]).unwrap() {
            all &= l > 0.0 && l <= *g;
            *m = m.max(l);
        }
    }
    // the limit is only meaningful where sigma^2 dominates 1/gamma
    let moderate: Vec<f64> = raw.iter().copied().filter(|s| s.abs() <= 10.0).collect();
    let capped = lambdas(Scheme::Iaw, 1e12, &moderate, &[]).unwrap();
    let aw = lambdas(Scheme::Aw, f64::INFINITY, &moderate, &[]).unwrap();
    for (c, a) in capped.iter().zip(&aw) {
        gap = gap.max((c - 2.0 * a).abs() / (2.0 * a));
    }
    CapReport {
        samples,
        all_in_range: all,
        max_lambda: maxes,
        worst_limit_gap: gap,
    }
}
