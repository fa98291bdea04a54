//! Mehrotra predictor-corrector interior point method for dense convex QPs
//!
//! ```text
//!     minimize    1/2 x'Hx + g'x
//!     subject to  Ae x  = be
//!                 Ai x + s = bi,   s >= 0
//! ```
//!
//! The Newton system is reduced to the quasi-definite form
//! `[H + Ai' W Ai, Ae'; Ae, -δI]` with `W = Z/S` and factorized densely.

use nalgebra::{DMatrix, DVector};

pub(crate) struct IpmProblem<'a> {
    pub h: &'a DMatrix<f64>,
    pub g: &'a DVector<f64>,
    pub ai: &'a DMatrix<f64>,
    pub bi: &'a DVector<f64>,
    pub ae: &'a DMatrix<f64>,
    pub be: &'a DVector<f64>,
}

#[derive(Clone, Debug)]
pub(crate) struct Iterate {
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub z: DVector<f64>,
    pub s: DVector<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Exit {
    Converged,
    MaxIter,
    Stalled,
}

pub(crate) struct Output {
    pub iterate: Iterate,
    pub exit: Exit,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Residuals {
    pub dual: f64,
    pub eq: f64,
    pub ineq: f64,
    pub gap: f64,
}

impl Residuals {
    fn merit(&self) -> f64 {
        self.dual.max(self.eq).max(self.ineq).max(self.gap)
    }
}

const PRIMAL_REG: f64 = 1e-11;
const DUAL_REG: f64 = 1e-11;
/// Cap on iterative refinement against the unregularized system.
const REFINE_STEPS: usize = 20;
const STEP_FRACTION: f64 = 0.99;
const DIVERGED: f64 = 1e13;
/// Lower bound on the centering target, relative to the current tolerance.
const MU_FLOOR: f64 = 1e-2;

fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

impl IpmProblem<'_> {
    fn n(&self) -> usize {
        self.g.len()
    }

    fn residuals(&self, it: &Iterate) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
        let mut rd = self.h * &it.x + self.g;
        if self.ae.nrows() > 0 {
            rd += self.ae.tr_mul(&it.y);
        }
        if self.ai.nrows() > 0 {
            rd += self.ai.tr_mul(&it.z);
        }
        let re = self.ae * &it.x - self.be;
        let ri = self.ai * &it.x + &it.s - self.bi;
        (rd, re, ri)
    }

    /// Measures on the actual constraint values, independent of the slack iterate.
    fn measure(&self, it: &Iterate, rd: &DVector<f64>, re: &DVector<f64>) -> Residuals {
        let slack = self.bi - self.ai * &it.x;
        let ineq = slack.iter().fold(0.0, |m: f64, v| m.max(-v));
        let gap = slack.iter().zip(it.z.iter()).map(|(s, z)| (s * z).abs()).sum();
        Residuals { dual: inf_norm(rd), eq: inf_norm(re), ineq, gap }
    }
}

struct Kkt {
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    exact: DMatrix<f64>,
}

impl Kkt {
    fn assemble(p: &IpmProblem, w: &DVector<f64>) -> Option<Kkt> {
        let n = p.n();
        let me = p.ae.nrows();
        let mut m = p.h.clone();
        if p.ai.nrows() > 0 {
            let mut scaled = p.ai.clone();
            for (mut row, wi) in scaled.row_iter_mut().zip(w.iter()) {
                row *= wi.sqrt();
            }
            m += scaled.tr_mul(&scaled);
        }
        let mut exact = DMatrix::zeros(n + me, n + me);
        exact.view_mut((0, 0), (n, n)).copy_from(&m);
        if me > 0 {
            exact.view_mut((n, 0), (me, n)).copy_from(p.ae);
            exact.view_mut((0, n), (n, me)).copy_from(&p.ae.transpose());
        }
        // relative to H only: tying it to Z/S would swamp flat directions
        let scale = (0..n).fold(1.0f64, |a, i| a.max(p.h[(i, i)].abs()));
        let mut reg = 1.0;
        while reg < 1e8 {
            let mut k = exact.clone();
            for i in 0..n {
                k[(i, i)] += PRIMAL_REG * scale * reg;
            }
            for i in n..n + me {
                k[(i, i)] -= DUAL_REG * reg;
            }
            let lu = k.lu();
            if lu.is_invertible() {
                return Some(Kkt { lu, exact });
            }
            reg *= 100.0;
        }
        None
    }

    fn solve(&self, rhs: &DVector<f64>) -> Option<DVector<f64>> {
        let mut sol = self.lu.solve(rhs)?;
        let mut res = rhs - &self.exact * &sol;
        let mut err = inf_norm(&res);
        for _ in 0..REFINE_STEPS {
            if err <= 1e-15 * inf_norm(rhs) {
                break;
            }
            let next = &sol + self.lu.solve(&res)?;
            let next_res = rhs - &self.exact * &next;
            let next_err = inf_norm(&next_res);
            if !(next_err < err) {
                break;
            }
            (sol, res, err) = (next, next_res, next_err);
        }
        sol.iter().all(|v| v.is_finite()).then_some(sol)
    }
}

struct Direction {
    dx: DVector<f64>,
    dy: DVector<f64>,
    dz: DVector<f64>,
    ds: DVector<f64>,
}

fn direction(
    p: &IpmProblem,
    kkt: &Kkt,
    it: &Iterate,
    rd: &DVector<f64>,
    re: &DVector<f64>,
    ri: &DVector<f64>,
    rc: &DVector<f64>,
) -> Option<Direction> {
    let n = p.n();
    let me = p.ae.nrows();
    // t = S^-1 (rc + Z ri)
    let t = DVector::from_iterator(
        it.s.len(),
        (0..it.s.len()).map(|i| (rc[i] + it.z[i] * ri[i]) / it.s[i]),
    );
    let mut r1 = -rd;
    if p.ai.nrows() > 0 {
        r1 -= p.ai.tr_mul(&t);
    }
    let mut rhs = DVector::zeros(n + me);
    rhs.rows_mut(0, n).copy_from(&r1);
    if me > 0 {
        rhs.rows_mut(n, me).copy_from(&(-re));
    }
    let sol = kkt.solve(&rhs)?;
    let dx = sol.rows(0, n).into_owned();
    let dy = sol.rows(n, me).into_owned();
    let adx = p.ai * &dx;
    let ds = -ri - &adx;
    let dz = DVector::from_iterator(
        it.s.len(),
        (0..it.s.len()).map(|i| t[i] + it.z[i] / it.s[i] * adx[i]),
    );
    Some(Direction { dx, dy, dz, ds })
}

/// Residuals of `d` in the unreduced Newton system, as the right-hand side
/// of a correction solve.
fn newton_residual(
    p: &IpmProblem,
    it: &Iterate,
    d: &Direction,
    rd: &DVector<f64>,
    re: &DVector<f64>,
    ri: &DVector<f64>,
    rc: &DVector<f64>,
) -> (DVector<f64>, DVector<f64>, DVector<f64>, DVector<f64>) {
    let mut r1 = rd + p.h * &d.dx;
    if p.ae.nrows() > 0 {
        r1 += p.ae.tr_mul(&d.dy);
    }
    if p.ai.nrows() > 0 {
        r1 += p.ai.tr_mul(&d.dz);
    }
    let r2 = re + p.ae * &d.dx;
    let r3 = ri + p.ai * &d.dx + &d.ds;
    let r4 = DVector::from_iterator(
        it.s.len(),
        (0..it.s.len()).map(|i| rc[i] - it.s[i] * d.dz[i] - it.z[i] * d.ds[i]),
    );
    (r1, r2, r3, r4)
}

/// Newton direction from the reduced factorization, refined against the full
/// system (the reduced form loses accuracy once `Z/S` spans many decades).
fn refined_direction(
    p: &IpmProblem,
    kkt: &Kkt,
    it: &Iterate,
    rd: &DVector<f64>,
    re: &DVector<f64>,
    ri: &DVector<f64>,
    rc: &DVector<f64>,
) -> Option<Direction> {
    let mut d = direction(p, kkt, it, rd, re, ri, rc)?;
    let size = |r: &(DVector<f64>, DVector<f64>, DVector<f64>, DVector<f64>)| {
        inf_norm(&r.0).max(inf_norm(&r.1)).max(inf_norm(&r.2)).max(inf_norm(&r.3))
    };
    let mut res = newton_residual(p, it, &d, rd, re, ri, rc);
    let mut err = size(&res);
    for _ in 0..REFINE_STEPS {
        let (r1, r2, r3, r4) = &res;
        let Some(c) = direction(p, kkt, it, r1, r2, r3, r4) else { break };
        let next = Direction { dx: &d.dx + c.dx, dy: &d.dy + c.dy, dz: &d.dz + c.dz, ds: &d.ds + c.ds };
        let next_res = newton_residual(p, it, &next, rd, re, ri, rc);
        let next_err = size(&next_res);
        if !(next_err < 0.5 * err) {
            break;
        }
        (d, res, err) = (next, next_res, next_err);
    }
    Some(d)
}

fn max_step(v: &DVector<f64>, dv: &DVector<f64>) -> f64 {
    v.iter()
        .zip(dv.iter())
        .filter(|(_, d)| **d < 0.0)
        .fold(1.0f64, |a, (x, d)| a.min(-x / d))
}

fn initial_point(p: &IpmProblem) -> Iterate {
    let n = p.n();
    let mi = p.ai.nrows();
    let me = p.ae.nrows();
    let ones = DVector::from_element(mi, 1.0);
    let fallback = || Iterate {
        x: DVector::zeros(n),
        y: DVector::zeros(me),
        z: DVector::from_element(mi, 1.0),
        s: DVector::from_element(mi, 1.0),
    };
    let Some(kkt) = Kkt::assemble(p, &ones) else {
        return fallback();
    };
    let mut rhs = DVector::zeros(n + me);
    let mut r1 = -p.g;
    if mi > 0 {
        r1 += p.ai.tr_mul(p.bi);
    }
    rhs.rows_mut(0, n).copy_from(&r1);
    if me > 0 {
        rhs.rows_mut(n, me).copy_from(p.be);
    }
    let Some(sol) = kkt.solve(&rhs) else {
        return fallback();
    };
    let x = sol.rows(0, n).into_owned();
    let y = sol.rows(n, me).into_owned();
    let mut s = p.bi - p.ai * &x;
    let mut z = -s.clone();
    for v in [&mut s, &mut z] {
        let lo = v.iter().fold(f64::INFINITY, |a, b| a.min(*b));
        if mi > 0 && lo <= 1e-8 {
            v.add_scalar_mut(1.0 - lo);
        }
    }
    Iterate { x, y, z, s }
}

/// Run the method. `accept` is consulted whenever the internal criteria are
/// met; returning false tightens them and keeps iterating.
pub(crate) fn solve(
    p: &IpmProblem,
    tol: f64,
    max_iter: usize,
    accept: &dyn Fn(&Iterate) -> bool,
) -> Output {
    let mi = p.ai.nrows();
    let mut it = initial_point(p);
    let mut best = it.clone();
    let mut best_merit = f64::INFINITY;
    let mut inner_tol = 0.5 * tol;
    let mut short_steps = 0;

    for k in 0..max_iter {
        let (rd, re, ri) = p.residuals(&it);
        let res = p.measure(&it, &rd, &re);
        let ri_norm = inf_norm(&ri);
        let merit = res.merit().max(ri_norm);
        if merit < best_merit {
            best_merit = merit;
            best = it.clone();
        }
        let mu = if mi > 0 { it.s.dot(&it.z) / mi as f64 } else { 0.0 };
        if res.dual <= inner_tol
            && res.eq <= inner_tol
            && res.ineq <= inner_tol
            && ri_norm <= inner_tol
            && res.gap <= inner_tol
            && mu * (mi as f64) <= inner_tol
        {
            if accept(&it) {
                return Output { iterate: it, exit: Exit::Converged, iterations: k };
            }
            if inner_tol < 1e-15 {
                return Output { iterate: best, exit: Exit::Stalled, iterations: k };
            }
            inner_tol *= 0.1;
        }
        if inf_norm(&it.x) > DIVERGED || inf_norm(&it.z) > DIVERGED * 10.0 {
            return Output { iterate: best, exit: Exit::Stalled, iterations: k };
        }

        let w = DVector::from_iterator(mi, (0..mi).map(|i| it.z[i] / it.s[i]));
        let Some(kkt) = Kkt::assemble(p, &w) else {
            return Output { iterate: best, exit: Exit::Stalled, iterations: k };
        };

        // predictor
        let rc_aff = DVector::from_iterator(mi, (0..mi).map(|i| -it.s[i] * it.z[i]));
        let Some(aff) = refined_direction(p, &kkt, &it, &rd, &re, &ri, &rc_aff) else {
            return Output { iterate: best, exit: Exit::Stalled, iterations: k };
        };
        let dir = if mi > 0 {
            let a_aff = max_step(&it.s, &aff.ds).min(max_step(&it.z, &aff.dz));
            let s_aff = &it.s + a_aff * &aff.ds;
            let z_aff = &it.z + a_aff * &aff.dz;
            let mu_aff = s_aff.dot(&z_aff) / mi as f64;
            let sigma = if mu > 0.0 { (mu_aff / mu).clamp(0.0, 1.0).powi(3) } else { 0.0 };
            // driving mu far below the tolerance only makes Z/S explode
            let target = (sigma * mu).max(MU_FLOOR * inner_tol / mi as f64);
            // corrector
            let rc = DVector::from_iterator(
                mi,
                (0..mi).map(|i| -it.s[i] * it.z[i] - aff.ds[i] * aff.dz[i] + target),
            );
            match refined_direction(p, &kkt, &it, &rd, &re, &ri, &rc) {
                Some(d) => d,
                None => return Output { iterate: best, exit: Exit::Stalled, iterations: k },
            }
        } else {
            aff
        };

        let alpha = if mi > 0 {
            (STEP_FRACTION * max_step(&it.s, &dir.ds).min(max_step(&it.z, &dir.dz))).min(1.0)
        } else {
            1.0
        };
        if alpha < 1e-10 {
            short_steps += 1;
            if short_steps >= 5 {
                return Output { iterate: best, exit: Exit::Stalled, iterations: k };
            }
        } else {
            short_steps = 0;
        }
        it.x += alpha * &dir.dx;
        it.y += alpha * &dir.dy;
        it.z += alpha * &dir.dz;
        it.s += alpha * &dir.ds;
        // keep strictly interior
        for v in it.s.iter_mut().chain(it.z.iter_mut()) {
            if *v < 1e-300 {
                *v = 1e-300;
            }
        }
    }
    Output { iterate: best, exit: Exit::MaxIter, iterations: max_iter }
}
