//! Independent reference computations shared by the integration tests.

#![allow(dead_code)]

use covest_core::asf::{Dictionary, KernelAtom};
use covest_core::estimators::{ml_gradient, ml_objective, nnls_init, spice_cost};
use covest_core::geometry::{steering, Aoa, ArrayGeometry};
use covest_core::linalg::{add_scaled_identity, cholesky, frobenius_inner, outer, psd_sqrt, CMat};
use covest_core::SolverConfig;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_pd(rng: &mut impl Rng, m: usize, floor: f64) -> CMat {
    let x = CMat::from_fn(m, m + 2, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    add_scaled_identity(&(&x * x.adjoint()), floor)
}

/// `(1/(u−l)) ∫_l^u a(ξ) a(ξ)ᴴ dξ` by composite Simpson on `panels` panels (even).
pub fn simpson_interval_atom(geom: &ArrayGeometry, l: f64, u: f64, panels: usize) -> CMat {
    let m = geom.m();
    let h = (u - l) / panels as f64;
    let mut acc = CMat::zeros(m, m);
    for k in 0..=panels {
        let w = if k == 0 || k == panels {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let a = steering(geom, &Aoa::Line(l + k as f64 * h)).unwrap();
        acc += outer(&a) * Complex64::new(w, 0.0);
    }
    acc * Complex64::new(h / 3.0 / (u - l), 0.0)
}

/// Largest entrywise gap between closed-form interval atoms and quadrature over `count`
/// random supports.
pub fn quadrature_worst(count: usize, seed: u64) -> f64 {
    let geom = ArrayGeometry::ula(20).unwrap();
    let mut rng = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..count {
        let l: f64 = rng.random_range(-1.0..0.9);
        let u: f64 = rng.random_range(l + 0.01..=1.0);
        let closed = KernelAtom::interval(l, u).unwrap().covariance(&geom).unwrap();
        let quad = simpson_interval_atom(&geom, l, u, 10_000);
        let gap = (closed - quad).iter().map(|z| z.norm()).fold(0.0, f64::max);
        worst = worst.max(gap);
    }
    worst
}

/// Largest per-coordinate gap between NNLS and an exhaustive grid search on random
/// two-atom problems.
pub fn nnls_grid_worst(count: usize, seed: u64) -> f64 {
    let geom = ArrayGeometry::ula(4).unwrap();
    let mut rng = rng(seed);
    let cfg = SolverConfig::default();
    let n0 = 0.1;
    let mut worst = 0.0f64;
    for _ in 0..count {
        let xi: f64 = rng.random_range(-0.9..0.9);
        let l: f64 = rng.random_range(-1.0..0.5);
        let atoms = vec![
            outer(&steering(&geom, &Aoa::Line(xi)).unwrap()),
            KernelAtom::interval(l, l + 0.5).unwrap().covariance(&geom).unwrap(),
        ];
        let truth = [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
        let noise = random_pd(&mut rng, 4, 0.0) * Complex64::new(0.05, 0.0);
        let sigma_y = add_scaled_identity(&(&atoms[0] * Complex64::new(truth[0], 0.0) + &atoms[1] * Complex64::new(truth[1], 0.0) + noise), n0);
        let dict = Dictionary::from_atoms(atoms.clone()).unwrap();
        let fit = nnls_init(&dict, &sigma_y, n0, &cfg).unwrap();

        let target = add_scaled_identity(&sigma_y, -n0);
        let g = |i: usize, j: usize| frobenius_inner(&atoms[i], &atoms[j]);
        let b = [frobenius_inner(&atoms[0], &target), frobenius_inner(&atoms[1], &target)];
        let (g00, g01, g11) = (g(0, 0), g(0, 1), g(1, 1));
        let f = |x: f64, y: f64| g00 * x * x + 2.0 * g01 * x * y + g11 * y * y - 2.0 * (b[0] * x + b[1] * y);
        let step = 5e-4;
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for i in 0..=4000 {
            let x = i as f64 * step;
            for j in 0..=4000 {
                let y = j as f64 * step;
                let v = f(x, y);
                if v < best.0 {
                    best = (v, x, y);
                }
            }
        }
        worst = worst.max((fit.u[0] - best.1).abs()).max((fit.u[1] - best.2).abs());
    }
    worst
}

/// Largest gap in `‖Σ^{-1/2}(Σ̂−Σ)Σ̂^{-1/2}‖_F² = cost − 2M` over random positive pairs.
pub fn bregman_worst(count: usize, seed: u64) -> f64 {
    let mut rng = rng(seed);
    let mut worst = 0.0f64;
    for k in 0..count {
        let m = 2 + k % 6;
        let s = random_pd(&mut rng, m, 0.05);
        let t = random_pd(&mut rng, m, 0.05);
        let si = cholesky(&psd_sqrt(&s)).unwrap().inverse();
        let ti = cholesky(&psd_sqrt(&t)).unwrap().inverse();
        let lhs: f64 = (si * (&t - &s) * ti).iter().map(|z| z.norm_sqr()).sum();
        let rhs = spice_cost(&s, &t).unwrap() - 2.0 * m as f64;
        worst = worst.max((lhs - rhs).abs() / (1.0 + lhs.abs()));
    }
    worst
}

/// Largest relative gap between the ML gradient and central differences.
pub fn gradient_worst(count: usize, seed: u64) -> f64 {
    let geom = ArrayGeometry::ula(8).unwrap();
    let mut rng = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..count {
        let mut atoms: Vec<CMat> = (0..3)
            .map(|_| outer(&steering(&geom, &Aoa::Line(rng.random_range(-1.0..1.0))).unwrap()))
            .collect();
        for i in 0..6 {
            let l = -1.0 + i as f64 / 3.0;
            atoms.push(KernelAtom::interval(l, l + 1.0 / 3.0).unwrap().covariance(&geom).unwrap());
        }
        let dict = Dictionary::from_atoms(atoms).unwrap();
        let sigma_y = random_pd(&mut rng, 8, 0.1);
        let n0 = 0.05;
        let u: Vec<f64> = (0..dict.len()).map(|_| rng.random_range(0.05..1.0)).collect();
        let g = ml_gradient(&u, &dict, &sigma_y, n0).unwrap();
        let scale = g.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        for j in 0..u.len() {
            let h = 1e-6 * (1.0 + u[j]);
            let (mut up, mut dn) = (u.clone(), u.clone());
            up[j] += h;
            dn[j] -= h;
            let fd = (ml_objective(&up, &dict, &sigma_y, n0).unwrap() - ml_objective(&dn, &dict, &sigma_y, n0).unwrap()) / (2.0 * h);
            worst = worst.max((fd - g[j]).abs() / scale);
        }
    }
    worst
}
