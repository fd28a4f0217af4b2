//! Randomized property checks for the model types: anisotropy axioms, the
//! polar sweep oracle, and the inverse selection of the speed law.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use mmflow_core::anisotropy::Anisotropy;
use mmflow_core::nonlinearity::{Forcing, Nonlinearity};
use mmflow_core::oracles::{barrier_radius, BallFlow, BarrierModel};
use mmflow_core::perimeter::{CroftonNeighborhood, PerimeterModel};

fn all_anisotropies() -> Vec<Anisotropy> {
    vec![
        Anisotropy::euclidean(),
        Anisotropy::max_norm(),
        Anisotropy::weighted_euclidean(1.7, 0.6).unwrap(),
    ]
}

#[test]
fn psi_even_homogeneous_elliptic() {
    let mut rng = StdRng::seed_from_u64(101);
    for a in all_anisotropies() {
        for _ in 0..1000 {
            let p = [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)];
            let v = a.psi(p);
            assert_eq!(v, a.psi([-p[0], -p[1]]), "psi must be even");
            let doubled = a.psi([2.0 * p[0], 2.0 * p[1]]);
            assert!(
                (doubled - 2.0 * v).abs() <= 1e-12 * doubled.abs().max(1e-300),
                "1-homogeneity failed: {doubled} vs {}",
                2.0 * v
            );
            let norm = (p[0] * p[0] + p[1] * p[1]).sqrt();
            assert!(v <= a.c_psi * norm + 1e-12);
            assert!(v >= norm / a.c_psi - 1e-12);
        }
    }
}

/// The sweep oracle: maximize xi . v over a dense angular sample of the unit
/// ball of psi.
fn polar_by_sweep(a: &Anisotropy, v: [f64; 2]) -> f64 {
    let mut best = 0.0f64;
    for k in 0..3600 {
        let phi = k as f64 * std::f64::consts::TAU / 3600.0;
        let dir = [phi.cos(), phi.sin()];
        let scale = a.psi(dir);
        let xi = [dir[0] / scale, dir[1] / scale];
        best = best.max(xi[0] * v[0] + xi[1] * v[1]);
    }
    best
}

#[test]
fn polar_duality_and_sweep_oracle() {
    let mut rng = StdRng::seed_from_u64(202);
    for a in all_anisotropies() {
        for _ in 0..1000 {
            let v = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
            let xi = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
            assert!(a.psi(v) * a.polar(xi) >= v[0] * xi[0] + v[1] * xi[1] - 1e-12);
        }
        // closed-form polar matches the discretized unit-ball maximization
        for _ in 0..50 {
            let v = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
            let sweep = polar_by_sweep(&a, v);
            let closed = a.polar(v);
            assert!(
                (sweep - closed).abs() <= 1e-5 * closed.max(1e-9) + 1e-12,
                "sweep {sweep} vs closed form {closed}"
            );
            assert!(sweep <= closed + 1e-12, "sweep must lower-bound the sup");
        }
    }
    // the Euclidean norm is self-dual
    let e = Anisotropy::euclidean();
    let mut rng = StdRng::seed_from_u64(203);
    for _ in 0..1000 {
        let v = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
        assert!((e.polar(v) - e.psi(v)).abs() <= 1e-12);
    }
}

fn all_nonlinearities() -> Vec<Nonlinearity> {
    vec![
        Nonlinearity::identity(),
        Nonlinearity::clamp(2.0).unwrap(),
        Nonlinearity::power(3.0).unwrap(),
        Nonlinearity::power(1.0 / 3.0).unwrap(),
        Nonlinearity::negative_part(),
        Nonlinearity::piecewise(vec![(-3.0, -2.0), (-1.0, 0.0), (1.0, 0.0), (3.0, 2.0)]).unwrap(),
    ]
}

#[test]
fn g_is_a_selection_of_the_inverse() {
    let mut rng = StdRng::seed_from_u64(404);
    for n in all_nonlinearities() {
        let lo = if n.a.is_finite() { -n.a + 1e-9 } else { -50.0 };
        let hi = if n.b.is_finite() { n.b - 1e-9 } else { 50.0 };
        let mut finite_samples: Vec<(f64, f64)> = Vec::new();
        for _ in 0..1000 {
            let s = rng.random_range(lo..hi);
            let g = n.inverse(s);
            if g.is_finite() {
                let back = n.speed(g);
                assert!(
                    (back - s).abs() <= 1e-9,
                    "{:?}: G(g({s})) = {back}",
                    n.kind
                );
                finite_samples.push((s, g));
            }
        }
        // strictly increasing on the finite branch
        finite_samples.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in finite_samples.windows(2) {
            if w[1].0 > w[0].0 {
                assert!(
                    w[1].1 > w[0].1,
                    "{:?}: g not strictly increasing at {} vs {}",
                    n.kind,
                    w[0].0,
                    w[1].0
                );
            }
        }
        assert_eq!(n.inverse(0.0), 0.0, "{:?}: g(0) must be 0", n.kind);
        // the extended values carry the saturation
        if n.a.is_finite() {
            assert_eq!(n.inverse(-n.a), f64::NEG_INFINITY);
        }
        if n.b.is_finite() && n.b > 0.0 {
            assert_eq!(n.inverse(n.b), f64::INFINITY);
        }
    }
}

#[test]
fn ball_flow_curves_sample_the_laws() {
    let n = Nonlinearity::identity();
    let times: Vec<f64> = (0..=8).map(|k| k as f64 * 0.05).collect();
    let flow = BallFlow::exact(&n, &Forcing::Zero, 1.0, &times).unwrap();
    assert_eq!(flow.samples.len(), times.len());
    for w in flow.samples.windows(2) {
        assert!(w[1].1 <= w[0].1, "exact shrinking-ball curve must decrease");
    }
    let j = PerimeterModel::crofton(CroftonNeighborhood::N16, 0.01).unwrap();
    let bm = BarrierModel { perimeter: &j, nonlinearity: &n, forcing_bound: 0.0, c_psi: 1.0 };
    let barrier = BallFlow::barrier(&bm, 1.0, &times).unwrap();
    for ((t, b), (_, e)) in barrier.samples.iter().zip(&flow.samples) {
        assert!(b <= e, "barrier above the exact law at t={t}");
        assert!((barrier_radius(&bm, 1.0, *t).unwrap() - b).abs() < 1e-12);
    }
}
