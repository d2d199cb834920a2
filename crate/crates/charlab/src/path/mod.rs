//! Discretized symplectic paths `γ : [0, τ] → Sp(2n)`, `γ(0) = I`, and the
//! omega-index pair `(i_ω(γ), ν_ω(γ))` computed as a co-oriented crossing
//! count against the degeneracy hypersurface `{D_ω = 0}`.

mod crossing;

pub use crossing::CrossingEngine;

use crate::config::Tolerances;
use crate::sympl::{self, standard_j, SymplError, SymplecticMatrix};
use nalgebra::DMatrix;
use num_complex::Complex;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

type C64 = Complex<f64>;

/// Failures of path-index computations.
#[derive(Debug, thiserror::Error)]
pub enum PathError {
    #[error("crossing count did not converge on [{t_lo}, {t_hi}]: {detail}")]
    NonConvergence { t_lo: f64, t_hi: f64, detail: String },
    #[error("invalid path: {0}")]
    BadPath(String),
    #[error(transparent)]
    Sympl(#[from] SymplError),
}

/// Matrix exponential by scaling and squaring of a truncated series.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let norm = a.iter().fold(0.0f64, |acc, v| acc.max(v.abs())) * a.nrows() as f64;
    let k = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a / 2f64.powi(k as i32);
    let d = a.nrows();
    let mut term = DMatrix::identity(d, d);
    let mut sum = DMatrix::identity(d, d);
    for i in 1..=16 {
        term = &term * &scaled / i as f64;
        sum += &term;
    }
    let mut out = sum;
    for _ in 0..k {
        out = &out * &out;
    }
    out
}

/// Random symplectic matrix `exp(J S)` with `S` symmetric, entries in
/// `(−scale, scale)`.
pub fn random_symplectic(n: usize, scale: f64, rng: &mut impl rand::Rng) -> SymplecticMatrix {
    let d = 2 * n;
    let mut s = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let v = rng.gen_range(-scale..scale);
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    let j = standard_j(n);
    SymplecticMatrix::new(sympl::symplectify(&expm(&(j * s))), 1e-7)
        .expect("exp(JS) is symplectic")
}

/// `D_ω(M) = (−1)^{n−1} ω̄ⁿ det(M − ω I)`, a real-valued function on
/// `Sp(2n) × U`. The imaginary residue of the complex determinant must stay
/// below 1e−10 relative; it is asserted and discarded.
pub fn d_omega(m: &DMatrix<f64>, omega: C64) -> f64 {
    let d = m.nrows();
    let n = d / 2;
    let mc = DMatrix::from_fn(d, d, |i, j| {
        C64::new(m[(i, j)], 0.0) - if i == j { omega } else { C64::new(0.0, 0.0) }
    });
    let det = mc.determinant();
    let sign = if (n - 1) % 2 == 0 { 1.0 } else { -1.0 };
    let val = omega.conj().powu(n as u32) * det * sign;
    debug_assert!(
        val.im.abs() <= 1e-10 * (1.0 + val.norm()),
        "imaginary residue {} too large",
        val.im
    );
    val.re
}

/// How a path produces matrices at arbitrary times.
#[derive(Clone)]
pub struct PathEvaluator(Arc<dyn Fn(f64) -> DMatrix<f64> + Send + Sync>);

impl PathEvaluator {
    pub fn new(f: impl Fn(f64) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        PathEvaluator(Arc::new(f))
    }

    pub fn eval(&self, t: f64) -> DMatrix<f64> {
        (self.0)(t)
    }
}

/// A path in `Sp(2n)` starting at the identity, carried by a dense
/// evaluator plus validated samples.
///
/// Refinement queries go back to the evaluator rather than interpolating
/// stored matrices, which would drift off the group.
#[derive(Clone)]
pub struct SymplecticPath {
    n: usize,
    tau: f64,
    samples: Vec<(f64, SymplecticMatrix)>,
    refinement_depth: u32,
    evaluator: PathEvaluator,
}

/// JSON form: `{"tau": .., "samples": [{"t": .., "M": {..}} ..]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathJson {
    pub tau: f64,
    pub samples: Vec<PathSampleJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathSampleJson {
    pub t: f64,
    #[serde(rename = "M")]
    pub m: crate::sympl::MatrixJson,
}

impl SymplecticPath {
    /// Build a path from a dense evaluator, sampling a uniform base grid and
    /// densifying until consecutive samples differ by at most `step_cap`.
    pub fn from_evaluator(
        n: usize,
        tau: f64,
        evaluator: PathEvaluator,
        base_samples: usize,
        cfg: &Tolerances,
    ) -> Result<Self, PathError> {
        if tau <= 0.0 {
            return Err(PathError::BadPath("tau must be positive".into()));
        }
        let m0 = evaluator.eval(0.0);
        let id = DMatrix::identity(2 * n, 2 * n);
        if (&m0 - &id).iter().fold(0.0f64, |a, v| a.max(v.abs())) > 1e-9 {
            return Err(PathError::BadPath("path must start at the identity".into()));
        }
        let base = base_samples.max(8);
        let mut ts: Vec<f64> = (0..=base).map(|i| tau * i as f64 / base as f64).collect();
        let mut mats: Vec<DMatrix<f64>> = ts.iter().map(|&t| evaluator.eval(t)).collect();
        let mut depth = 0;
        loop {
            let mut inserts = Vec::new();
            for i in 0..ts.len() - 1 {
                let diff = (&mats[i + 1] - &mats[i])
                    .iter()
                    .fold(0.0f64, |a, v| a.max(v.abs()));
                if diff > cfg.step_cap {
                    inserts.push(i);
                }
            }
            if inserts.is_empty() || depth >= cfg.max_depth {
                break;
            }
            for &i in inserts.iter().rev() {
                let tm = 0.5 * (ts[i] + ts[i + 1]);
                ts.insert(i + 1, tm);
                mats.insert(i + 1, evaluator.eval(tm));
            }
            depth += 1;
        }
        let mut samples = Vec::with_capacity(ts.len());
        for (t, m) in ts.into_iter().zip(mats.into_iter()) {
            samples.push((t, SymplecticMatrix::new(m, cfg.tol_sympl.max(1e-12) * 10.0)?));
        }
        Ok(SymplecticPath {
            n,
            tau,
            samples,
            refinement_depth: depth,
            evaluator,
        })
    }

    /// Path `t ↦ exp(t J S)` of the linear Hamiltonian system with constant
    /// (symmetric) coefficient `S`.
    pub fn from_generator(
        n: usize,
        tau: f64,
        sym: DMatrix<f64>,
        cfg: &Tolerances,
    ) -> Result<Self, PathError> {
        let j = standard_j(n);
        let a = j * sym;
        let ev = PathEvaluator::new(move |t| expm(&(&a * t)));
        SymplecticPath::from_evaluator(n, tau, ev, 64, cfg)
    }

    /// Planar rotation path `R(t θ / τ)`.
    pub fn rotation(theta: f64, tau: f64, cfg: &Tolerances) -> Result<Self, PathError> {
        let ev = PathEvaluator::new(move |t| {
            SymplecticMatrix::rotation(theta * t / tau).into_matrix()
        });
        SymplecticPath::from_evaluator(1, tau, ev, 64, cfg)
    }

    /// Pointwise diamond product of two paths over a common `[0, τ]`.
    pub fn diamond(p1: &SymplecticPath, p2: &SymplecticPath, cfg: &Tolerances) -> Result<Self, PathError> {
        assert!(
            (p1.tau - p2.tau).abs() < 1e-12,
            "diamond of paths needs a common period"
        );
        let (e1, e2) = (p1.evaluator.clone(), p2.evaluator.clone());
        let (n1, n2) = (p1.n, p2.n);
        let tol = 1e-6;
        let ev = PathEvaluator::new(move |t| {
            let a = SymplecticMatrix::new(e1.eval(t), tol).expect("factor path symplectic");
            let b = SymplecticMatrix::new(e2.eval(t), tol).expect("factor path symplectic");
            sympl::diamond(&a, &b).into_matrix()
        });
        SymplecticPath::from_evaluator(
            n1 + n2,
            p1.tau,
            ev,
            p1.samples.len().max(p2.samples.len()),
            cfg,
        )
    }

    pub fn dim_half(&self) -> usize {
        self.n
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn samples(&self) -> &[(f64, SymplecticMatrix)] {
        &self.samples
    }

    pub fn refinement_depth(&self) -> u32 {
        self.refinement_depth
    }

    pub fn end(&self) -> &SymplecticMatrix {
        &self.samples.last().expect("nonempty").1
    }

    pub fn eval(&self, t: f64) -> DMatrix<f64> {
        self.evaluator.eval(t)
    }

    pub fn evaluator(&self) -> &PathEvaluator {
        &self.evaluator
    }

    pub fn to_json(&self) -> PathJson {
        PathJson {
            tau: self.tau,
            samples: self
                .samples
                .iter()
                .map(|(t, m)| PathSampleJson {
                    t: *t,
                    m: m.to_json(),
                })
                .collect(),
        }
    }

    /// Rebuild a path from serialized samples. The evaluator interpolates
    /// linearly between stored matrices and projects back onto the group;
    /// adequate for display and coarse checks, not for deep refinement.
    pub fn from_json(json: &PathJson, cfg: &Tolerances) -> Result<Self, PathError> {
        if json.samples.is_empty() {
            return Err(PathError::BadPath("no samples".into()));
        }
        let n = json.samples[0].m.n;
        let mats: Vec<(f64, DMatrix<f64>)> = json
            .samples
            .iter()
            .map(|s| {
                let d = 2 * s.m.n;
                (s.t, DMatrix::from_fn(d, d, |i, j| s.m.rows[i][j]))
            })
            .collect();
        let ev = PathEvaluator::new(move |t| {
            let idx = mats
                .windows(2)
                .position(|w| t <= w[1].0)
                .unwrap_or(mats.len() - 2);
            let (t0, ref m0) = mats[idx];
            let (t1, ref m1) = mats[idx + 1];
            let w = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
            sympl::symplectify(&(m0 * (1.0 - w) + m1 * w))
        });
        SymplecticPath::from_evaluator(n, json.tau, ev, json.samples.len(), cfg)
    }

    /// The m-th iteration `γ^m(t) = γ(t − jτ) γ(τ)^j` on `[0, mτ]`.
    pub fn iterate(&self, m: usize) -> SymplecticPath {
        assert!(m >= 1);
        if m == 1 {
            return self.clone();
        }
        let tau = self.tau;
        let end = self.end().matrix().clone();
        let mut powers = Vec::with_capacity(m);
        powers.push(DMatrix::identity(2 * self.n, 2 * self.n));
        for j in 1..m {
            let next = &powers[j - 1] * &end;
            powers.push(next);
        }
        let base = self.evaluator.clone();
        let ev = PathEvaluator::new(move |t| {
            let mut j = (t / tau).floor() as isize;
            j = j.clamp(0, powers.len() as isize - 1);
            let j = j as usize;
            let local = (t - j as f64 * tau).clamp(0.0, tau);
            base.eval(local) * &powers[j]
        });
        let mut samples = Vec::new();
        let mut prev_pow = DMatrix::identity(2 * self.n, 2 * self.n);
        for j in 0..m {
            for (t, mat) in &self.samples {
                if j > 0 && *t == 0.0 {
                    continue;
                }
                let raw = mat.matrix() * &prev_pow;
                samples.push((
                    j as f64 * tau + t,
                    SymplecticMatrix::new(raw, 1e-5).expect("iterate stays symplectic"),
                ));
            }
            prev_pow = &prev_pow * &end;
        }
        SymplecticPath {
            n: self.n,
            tau: tau * m as f64,
            samples,
            refinement_depth: self.refinement_depth,
            evaluator: ev,
        }
    }
}

/// The reference path `ξ_n(t) = diag(2 − t/τ, (2 − t/τ)⁻¹)^{⋄n}`, running
/// from a hyperbolic matrix to the identity. `D_ω(ξ_n(t)) < 0` on `[0, τ)`
/// for every `ω` on the circle, so it contributes no crossings of its own.
pub fn special_path_xi(n: usize, tau: f64) -> PathEvaluator {
    PathEvaluator::new(move |t| {
        let a = 2.0 - (t / tau).clamp(0.0, 1.0);
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            m[(i, i)] = a;
            m[(n + i, n + i)] = 1.0 / a;
        }
        m
    })
}

/// The omega-index of a path at a point of the unit circle.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OmegaIndex {
    pub omega_angle: f64,
    pub index: i64,
    pub nullity: usize,
    pub degenerate_endpoint: bool,
}

/// Compute `(i_ω(γ), ν_ω(γ))`.
///
/// The path is catenated after the reference path `ξ_n` and the co-oriented
/// crossing count of `t ↦ D_ω` is taken. A degenerate endpoint
/// (`|D_ω(γ(τ))|` below tolerance) is resolved by appending a short terminal
/// arc `γ(τ)·e^{±s ε J}` for both signs and taking the smaller count.
pub fn omega_index(
    path: &SymplecticPath,
    omega: C64,
    cfg: &Tolerances,
) -> Result<OmegaIndex, PathError> {
    let n = path.dim_half();
    let tau = path.tau();
    let m_end = path.end().clone();
    let nu = crate::sympl::nullity(m_end.matrix(), omega, cfg.tol_rank);

    let tau_ref = tau.min(1.0);
    let xi = special_path_xi(n, tau_ref);
    let base = path.evaluator().clone();
    let joined = move |t: f64| -> DMatrix<f64> {
        if t < 0.0 {
            xi.eval(t + tau_ref)
        } else {
            base.eval(t.min(tau))
        }
    };

    // Scale reference and endpoint degeneracy decision.
    let mut grid: Vec<f64> = vec![-tau_ref, -0.75 * tau_ref, -0.5 * tau_ref, -0.25 * tau_ref];
    grid.extend(path.samples().iter().map(|(t, _)| *t));
    let scale = grid
        .iter()
        .map(|&t| d_omega(&joined(t), omega).abs())
        .fold(0.0f64, f64::max)
        .max(1e-300);
    let f_end = d_omega(m_end.matrix(), omega).abs();

    if f_end > cfg.tol_deg * scale && nu == 0 {
        let engine = CrossingEngine::new(Arc::new(joined), omega, cfg.clone());
        let count = engine.count(-tau_ref, tau, &grid)?;
        return Ok(OmegaIndex {
            omega_angle: omega.im.atan2(omega.re),
            index: count,
            nullity: nu,
            degenerate_endpoint: false,
        });
    }

    // Degenerate endpoint: realize the infimum over the two J-rotation
    // perturbations appended on a short terminal arc.
    let spec = crate::sympl::unit_circle_spectrum(&m_end, cfg)?;
    let gap = spec.min_angle_gap(omega.im.atan2(omega.re));
    let eps_arc = (gap / 4.0).min(1e-3).max(1e-9);
    let arc_len = tau_ref * 0.25;
    let mut counts = Vec::new();
    for sign in [1.0f64, -1.0] {
        let joined2 = {
            let xi = special_path_xi(n, tau_ref);
            let base = path.evaluator().clone();
            let endm = m_end.matrix().clone();
            let j = standard_j(n);
            move |t: f64| -> DMatrix<f64> {
                if t < 0.0 {
                    xi.eval(t + tau_ref)
                } else if t <= tau {
                    base.eval(t)
                } else {
                    let s = ((t - tau) / arc_len).clamp(0.0, 1.0);
                    &endm * expm(&(&j * (sign * s * eps_arc)))
                }
            }
        };
        let mut grid2 = grid.clone();
        for k in 1..=8 {
            grid2.push(tau + arc_len * k as f64 / 8.0);
        }
        let engine = CrossingEngine::new(Arc::new(joined2), omega, cfg.clone());
        counts.push(engine.count(-tau_ref, tau + arc_len, &grid2)?);
    }
    Ok(OmegaIndex {
        omega_angle: omega.im.atan2(omega.re),
        index: *counts.iter().min().expect("two arcs"),
        nullity: nu,
        degenerate_endpoint: true,
    })
}
