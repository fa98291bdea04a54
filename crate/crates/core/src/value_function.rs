//! Sampling of DSO value functions over their feasible operating region and
//! quadratic surrogate fitting.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::models::{PolyhedralModel, COUPLING_DIM};
use crate::opt::{solve_qp, OptError, QpStatus, DEFAULT_TOL};
use crate::projection::Polyhedron;

pub const DEFAULT_SAMPLES: usize = 100;
/// Coefficients of a full quadratic in three variables.
pub const N_COEFFS: usize = 10;
/// Floats needed to transmit a value function (Q, c, d).
pub const PAYLOAD_FLOATS: usize = 13;
/// Singular values below this fraction of the largest count as zero.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ValueFnError {
    #[error("region has no interior point")]
    EmptyRegion,
    #[error("region is unbounded")]
    UnboundedRegion,
    #[error("need at least {need} feasible samples, got {got}")]
    TooFewSamples { got: usize, need: usize },
    #[error("samples are affinely degenerate (rank {rank} of {N_COEFFS})")]
    RankDeficient { rank: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Opt(#[from] OptError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueSample {
    pub z: [f64; COUPLING_DIM],
    pub value: f64,
    pub feasible: bool,
}

/// `½ z'Qz + c'z + d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticValueFn {
    pub q: [[f64; 3]; 3],
    pub c: [f64; 3],
    pub d: f64,
    /// Region the function was fitted on.
    pub domain_hint: Option<Polyhedron>,
}

impl QuadraticValueFn {
    pub fn zero() -> Self {
        QuadraticValueFn { q: [[0.0; 3]; 3], c: [0.0; 3], d: 0.0, domain_hint: None }
    }

    pub fn is_zero(&self) -> bool {
        self.q.iter().flatten().all(|v| *v == 0.0) && self.c.iter().all(|v| *v == 0.0) && self.d == 0.0
    }

    pub fn evaluate(&self, z: &[f64]) -> f64 {
        assert_eq!(z.len(), 3, "value functions are defined on coupling triples");
        let mut v = self.d;
        for i in 0..3 {
            v += self.c[i] * z[i];
            for j in 0..3 {
                v += 0.5 * z[i] * self.q[i][j] * z[j];
            }
        }
        v
    }

    pub fn q_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(3, 3, |i, j| self.q[i][j])
    }

    /// Wire format: Q row-major, then c, then d.
    pub fn to_floats(&self) -> [f64; PAYLOAD_FLOATS] {
        let mut out = [0.0; PAYLOAD_FLOATS];
        for i in 0..3 {
            for j in 0..3 {
                out[3 * i + j] = self.q[i][j];
            }
            out[9 + i] = self.c[i];
        }
        out[12] = self.d;
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticFit {
    pub vf: QuadraticValueFn,
    /// RMS residual of the returned (clipped) function on the feasible samples.
    pub rms: f64,
    /// Sum of the eigenvalues removed by clipping, in normalized coordinates.
    pub clipped: f64,
}

impl QuadraticFit {
    pub fn rms_on(&self, samples: &[ValueSample]) -> f64 {
        rms(&self.vf, samples)
    }
}

pub fn rms(vf: &QuadraticValueFn, samples: &[ValueSample]) -> f64 {
    let feas: Vec<&ValueSample> = samples.iter().filter(|s| s.feasible).collect();
    if feas.is_empty() {
        return 0.0;
    }
    let ss: f64 = feas.iter().map(|s| (vf.evaluate(&s.z) - s.value).powi(2)).sum();
    (ss / feas.len() as f64).sqrt()
}

/// `n` hit-and-run points in `region`, started at its Chebyshev center with
/// `3·dim` steps between recorded points.
pub fn hit_and_run(region: &Polyhedron, n: usize, seed: u64) -> Result<Vec<Vec<f64>>, ValueFnError> {
    let (center, radius) = region.chebyshev_center().ok_or(ValueFnError::EmptyRegion)?;
    let dim = region.dim;
    if radius < 1e-12 {
        return Ok(vec![center; n]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = center;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        for _ in 0..3 * dim {
            let d: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let (lo, hi) = chord(region, &x, &d);
            if !lo.is_finite() || !hi.is_finite() {
                return Err(ValueFnError::UnboundedRegion);
            }
            if hi > lo {
                let t = rng.random_range(lo..=hi);
                for (xi, di) in x.iter_mut().zip(&d) {
                    *xi += t * di;
                }
            }
        }
        out.push(x.clone());
    }
    Ok(out)
}

/// Parameter interval of the line `x + t d` inside the region.
fn chord(region: &Polyhedron, x: &[f64], d: &[f64]) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for i in 0..region.rows() {
        let row = region.a.row(i);
        let ad: f64 = row.iter().zip(d).map(|(a, v)| a * v).sum();
        let slack = region.b[i] - row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>();
        let slack = slack.max(0.0);
        if ad > 1e-15 {
            hi = hi.min(slack / ad);
        } else if ad < -1e-15 {
            lo = lo.max(slack / ad);
        }
    }
    (lo, hi)
}

/// Optimal DSO cost at `n` points of `region`, coupling slot 0 pinned per
/// point. Infeasible points are kept and flagged.
pub fn sample_value_function(
    model: &PolyhedralModel,
    region: &Polyhedron,
    n: usize,
    seed: u64,
) -> Result<Vec<ValueSample>, ValueFnError> {
    if region.dim != COUPLING_DIM {
        return Err(ValueFnError::DimensionMismatch(format!("region dimension {}", region.dim)));
    }
    if n < N_COEFFS {
        return Err(ValueFnError::TooFewSamples { got: n, need: N_COEFFS });
    }
    let points = hit_and_run(region, n, seed)?;
    points
        .par_iter()
        .map(|p| {
            let z = [p[0], p[1], p[2]];
            let sol = solve_qp(&model.with_coupling_fixed(0, &z), DEFAULT_TOL)?;
            let feasible = sol.status == QpStatus::Optimal;
            let value = if feasible { model.cost(&sol.x) } else { f64::NAN };
            Ok(ValueSample { z, value, feasible })
        })
        .collect()
}

fn features(u: &[f64; 3]) -> [f64; N_COEFFS] {
    [
        1.0,
        u[0],
        u[1],
        u[2],
        0.5 * u[0] * u[0],
        0.5 * u[1] * u[1],
        0.5 * u[2] * u[2],
        u[0] * u[1],
        u[0] * u[2],
        u[1] * u[2],
    ]
}

/// Least-squares quadratic through the feasible samples, Hessian clipped to
/// positive semidefinite. The regression runs on standardized coordinates.
pub fn fit_quadratic(samples: &[ValueSample]) -> Result<QuadraticFit, ValueFnError> {
    let feas: Vec<&ValueSample> = samples.iter().filter(|s| s.feasible).collect();
    if feas.len() < N_COEFFS {
        return Err(ValueFnError::TooFewSamples { got: feas.len(), need: N_COEFFS });
    }
    let m = feas.len() as f64;
    let mut mu = [0.0; 3];
    let mut sd = [0.0; 3];
    for k in 0..3 {
        mu[k] = feas.iter().map(|s| s.z[k]).sum::<f64>() / m;
        sd[k] = (feas.iter().map(|s| (s.z[k] - mu[k]).powi(2)).sum::<f64>() / m).sqrt();
        if sd[k] == 0.0 {
            return Err(ValueFnError::RankDeficient { rank: 0 });
        }
    }
    let design = DMatrix::from_fn(feas.len(), N_COEFFS, |i, j| {
        let u = [
            (feas[i].z[0] - mu[0]) / sd[0],
            (feas[i].z[1] - mu[1]) / sd[1],
            (feas[i].z[2] - mu[2]) / sd[2],
        ];
        features(&u)[j]
    });
    let y = DVector::from_iterator(feas.len(), feas.iter().map(|s| s.value));
    let svd = SVD::new(design, true, true);
    let smax = svd.singular_values.max();
    let rank = svd.singular_values.iter().filter(|s| **s > RANK_TOL * smax).count();
    if rank < N_COEFFS {
        return Err(ValueFnError::RankDeficient { rank });
    }
    let beta = svd.solve(&y, 0.0).map_err(|_| ValueFnError::RankDeficient { rank })?;

    // normalized-coordinate quadratic ½u'Hu + e'u + f
    let mut h = DMatrix::zeros(3, 3);
    h[(0, 0)] = beta[4];
    h[(1, 1)] = beta[5];
    h[(2, 2)] = beta[6];
    for (k, (i, j)) in [(0, 1), (0, 2), (1, 2)].into_iter().enumerate() {
        h[(i, j)] = beta[7 + k];
        h[(j, i)] = beta[7 + k];
    }
    let eig = SymmetricEigen::new(h);
    let clipped: f64 = eig.eigenvalues.iter().filter(|l| **l < 0.0).map(|l| -l).sum();
    let lam = eig.eigenvalues.map(|l| l.max(0.0));
    let h = &eig.eigenvectors * DMatrix::from_diagonal(&lam) * eig.eigenvectors.transpose();
    let e = [beta[1], beta[2], beta[3]];
    let f = beta[0];

    // back to z = mu + S u
    let mut q = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            q[i][j] = h[(i, j)] / (sd[i] * sd[j]);
        }
    }
    // symmetrize against rounding in the eigen reconstruction
    for i in 0..3 {
        for j in i + 1..3 {
            let v = 0.5 * (q[i][j] + q[j][i]);
            q[i][j] = v;
            q[j][i] = v;
        }
    }
    let mut c = [0.0; 3];
    let mut d = f;
    for i in 0..3 {
        let qmu: f64 = (0..3).map(|j| q[i][j] * mu[j]).sum();
        c[i] = e[i] / sd[i] - qmu;
        d += 0.5 * mu[i] * qmu - e[i] * mu[i] / sd[i];
    }
    let vf = QuadraticValueFn { q, c, d, domain_hint: None };
    let rms = rms(&vf, samples);
    Ok(QuadraticFit { vf, rms, clipped })
}

pub fn samples_csv(samples: &[ValueSample]) -> String {
    let mut s = String::from("p_if,q_if,nu_if,value,feasible\n");
    for v in samples {
        s.push_str(&format!("{},{},{},{},{}\n", v.z[0], v.z[1], v.z[2], v.value, v.feasible));
    }
    s
}
