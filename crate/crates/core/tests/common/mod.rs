//! Helpers shared by the integration tests.
#![allow(dead_code)]

use gridcoord::QuadraticProgram;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Strictly convex QP with `m` inequalities, feasible by construction.
pub fn random_qp(n: usize, m: usize, seed: u64) -> QuadraticProgram {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = DMatrix::from_fn(n, n, |_, _| normal(&mut rng));
    let h = f.transpose() * f + DMatrix::identity(n, n) * 0.1;
    let g = DVector::from_fn(n, |_, _| 3.0 * normal(&mut rng));
    let a = DMatrix::from_fn(m, n, |_, _| normal(&mut rng));
    let x0 = DVector::from_fn(n, |_, _| normal(&mut rng));
    let b = &a * &x0 + DVector::from_fn(m, |_, _| rng.random_range(0.1..1.0));
    let mut qp = QuadraticProgram::new(n);
    qp.h = h;
    qp.g = g;
    qp.extend_ineq(&a, &b);
    qp
}

pub struct OracleSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Largest inequality violation of `x`.
    pub violation: f64,
}

/// Accelerated projected gradient on the dual of `min ½x'Hx + g'x, Ax <= b`
/// (no equalities, H positive definite). The primal point is recovered as
/// `x = -H^{-1}(g + A'mu)`.
pub fn projected_gradient(qp: &QuadraticProgram) -> OracleSolution {
    assert_eq!(qp.a_eq.nrows(), 0, "oracle handles inequalities only");
    let hinv = qp.h.clone().try_inverse().expect("H invertible");
    let a = &qp.a_ineq;
    let m = a.nrows();
    let q = a * &hinv * a.transpose();
    let lip = q.symmetric_eigenvalues().max().max(1e-12);
    let grad = |mu: &DVector<f64>| -> DVector<f64> {
        let r = &qp.g + a.tr_mul(mu);
        a * (&hinv * r) + &qp.b_ineq
    };
    let mut mu = DVector::zeros(m);
    let mut y = mu.clone();
    let mut t = 1.0f64;
    for _ in 0..400_000 {
        let next = (&y - grad(&y) / lip).map(|v| v.max(0.0));
        let step = (&next - &mu).amax();
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        y = &next + (&next - &mu) * ((t - 1.0) / t_next);
        mu = next;
        t = t_next;
        if step < 1e-15 {
            break;
        }
    }
    let x = -(&hinv * (&qp.g + a.tr_mul(&mu)));
    let xs: Vec<f64> = x.iter().copied().collect();
    OracleSolution { objective: qp.objective(&xs), violation: qp.max_violation(&xs), x: xs }
}
