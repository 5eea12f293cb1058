use nematic_core::energy::{discrete_gradient, total_energy, Region};
use nematic_core::field::{hedgehog_field, GridSpec};
use nematic_core::{MaterialParams, QField, QTensor};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn random_field(n: usize, seed: u64) -> QField {
    let g = GridSpec::centered(1.0, n).unwrap();
    let mut rng = StdRng::seed_from_u64(seed);
    let mut f = QField::sample(g, |x| hedgehog_field(x, 1.5)).mask_outside_ball(0.9);
    for q in f.values_mut() {
        for c in q.0.iter_mut() {
            *c += rng.random_range(-0.3..0.3);
        }
    }
    f
}

fn energy(f: &QField, p: &MaterialParams) -> f64 {
    total_energy(f, p, &Region::Whole).unwrap().total
}

#[test]
fn gradient_matches_central_differences() {
    let p = MaterialParams::unit(0.2).unwrap();
    let mut f = random_field(32, 11);
    let grad = discrete_gradient(&f, &p);
    let mut rng = StdRng::seed_from_u64(5);
    let free: Vec<usize> = (0..f.grid().len()).filter(|&m| !f.is_dirichlet(m)).collect();
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let m = free[rng.random_range(0..free.len())];
        let c = rng.random_range(0..5);
        let x0 = f.values()[m].0[c];
        let step = 1e-5 * (1.0 + x0.abs());
        f.values_mut()[m].0[c] = x0 + step;
        let ep = energy(&f, &p);
        f.values_mut()[m].0[c] = x0 - step;
        let em = energy(&f, &p);
        f.values_mut()[m].0[c] = x0;
        let fd = (ep - em) / (2.0 * step);
        let an = grad[m].0[c];
        let rel = (fd - an).abs() / an.abs().max(1e-8);
        worst = worst.max(rel);
    }
    assert!(worst < 1e-5, "worst relative error {worst}");
}

#[test]
fn gradient_vanishes_on_dirichlet_nodes() {
    let p = MaterialParams::unit(0.3).unwrap();
    let f = random_field(16, 3);
    let grad = discrete_gradient(&f, &p);
    for m in 0..f.grid().len() {
        if f.is_dirichlet(m) {
            assert_eq!(grad[m], QTensor::ZERO);
        }
    }
}

#[test]
fn constant_field_off_n_has_pure_bulk_gradient() {
    let p = MaterialParams::new(0.7, 1.3, 2.1, 0.4).unwrap();
    let q = QTensor([0.2, -0.1, 0.3, 0.05, -0.4]);
    let g = GridSpec::centered(1.0, 12).unwrap();
    let f = QField::constant(g, q);
    let h = g.spacing();
    let expected = p.bulk_gradient(&q) * (h * h * h / (p.eps() * p.eps()));
    for (m, gq) in discrete_gradient(&f, &p).iter().enumerate() {
        if !f.is_dirichlet(m) {
            assert_eq!(*gq, expected);
        }
    }
}
