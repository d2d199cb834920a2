use super::spectrum::{nullity, unit_circle_spectrum};
use super::{SymplError, SymplecticMatrix};
use crate::config::Tolerances;
use crate::sympl::{standard_j, symplectify};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

type C64 = Complex<f64>;

/// A basic normal-form factor, or the residual block carrying whatever the
/// decomposer declines to classify.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum NormalFormFactor {
    /// `D(λ) = diag(λ, 1/λ)`, `λ = ±2` canonical representative.
    D { lambda: f64 },
    /// `N1(λ, b)` with `λ = ±1`, `b ∈ {−1, 0, 1}`.
    N1 { lambda: f64, b: f64 },
    /// Rotation `R(θ)`, `θ ∈ (0,π) ∪ (π,2π)`.
    R { theta: f64 },
    /// Residual symplectic block with `1 ∉ σ(G)`.
    ResidualG {
        dim_half: usize,
        rows: Vec<Vec<f64>>,
        /// Set when a non-semisimple circle cluster off ±1 was swept in.
        non_semisimple_circle: bool,
    },
}

impl NormalFormFactor {
    /// Realize the factor as a symplectic matrix.
    pub fn to_matrix(&self) -> SymplecticMatrix {
        match self {
            NormalFormFactor::D { lambda } => SymplecticMatrix::d_block(*lambda),
            NormalFormFactor::N1 { lambda, b } => SymplecticMatrix::n1_block(*lambda, *b),
            NormalFormFactor::R { theta } => SymplecticMatrix::rotation(*theta),
            NormalFormFactor::ResidualG { dim_half, rows, .. } => {
                let d = 2 * dim_half;
                let m = DMatrix::from_fn(d, d, |i, j| rows[i][j]);
                SymplecticMatrix::new(symplectify(&m), 1e-6)
                    .expect("residual block must stay symplectic")
            }
        }
    }

    pub fn dim_half(&self) -> usize {
        match self {
            NormalFormFactor::ResidualG { dim_half, .. } => *dim_half,
            _ => 1,
        }
    }
}

/// Output of [`normal_form_decompose`]: factor list plus the eigenvalue-one
/// block counts `(p₋, p₀, p₊)` of `N1(1,1)`, `I₂`, `N1(1,−1)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormalFormDecomposition {
    pub factors: Vec<NormalFormFactor>,
    pub p_minus: usize,
    pub p_zero: usize,
    pub p_plus: usize,
    pub warnings: Vec<String>,
}

impl NormalFormDecomposition {
    /// `ν₁` reconstructed from the eigenvalue-one counts.
    pub fn nu_one(&self) -> usize {
        self.p_minus + 2 * self.p_zero + self.p_plus
    }

    /// Rotation angles of the `R(θ)` factors.
    pub fn rotation_angles(&self) -> Vec<f64> {
        self.factors
            .iter()
            .filter_map(|f| match f {
                NormalFormFactor::R { theta } => Some(*theta),
                _ => None,
            })
            .collect()
    }

    /// True when the factor list is exactly `N1(1,1) ⋄ R(θ_1) ⋄ … ⋄ R(θ_{n−1})`.
    pub fn is_one_shear_and_rotations(&self, n: usize) -> bool {
        self.p_minus == 1
            && self.p_zero == 0
            && self.p_plus == 0
            && self.rotation_angles().len() == n - 1
            && self.factors.len() == n
    }
}

/// Decompose the homotopy-component invariants of `m` into basic normal
/// forms: `N1(1,±1)`/`I₂` counts at eigenvalue one, `N1(−1,·)` at minus one,
/// `R(θ)` for semisimple circle pairs, `D(±2)` for real hyperbolic pairs,
/// and a residual block for everything else.
pub fn normal_form_decompose(
    m: &SymplecticMatrix,
    cfg: &Tolerances,
) -> Result<NormalFormDecomposition, SymplError> {
    let two_n = 2 * m.dim_half();
    let a = m.matrix();
    let spec = unit_circle_spectrum(m, cfg)?;
    let mut warnings = Vec::new();

    // Cluster-separation precondition.
    let mut angles: Vec<f64> = spec.entries.iter().map(|e| e.angle).collect();
    angles.sort_by(|x, y| x.partial_cmp(y).unwrap());
    for w in angles.windows(2) {
        let gap = (w[1] - w[0]).abs();
        if gap > 1e-12 && gap < cfg.cluster_gap {
            return Err(SymplError::DecompositionAmbiguity {
                reason: format!("circle clusters separated by {gap:.3e} < cluster_gap"),
            });
        }
    }

    let mut factors: Vec<NormalFormFactor> = Vec::new();
    let (mut p_minus, mut p_zero, mut p_plus) = (0usize, 0usize, 0usize);
    // Real polynomial factors of the kept clusters, for carving out the
    // residual invariant subspace.
    let mut kept = DMatrix::<f64>::identity(two_n, two_n);
    let mut residual_flag = false;

    for e in &spec.entries {
        if e.angle == 0.0 {
            let (pm, pz, pp) = split_one_cluster(a, 1.0, e.alg_mult, e.geo_mult, cfg)?;
            p_minus = pm;
            p_zero = pz;
            p_plus = pp;
            for _ in 0..pm {
                factors.push(NormalFormFactor::N1 { lambda: 1.0, b: 1.0 });
            }
            for _ in 0..pz {
                factors.push(NormalFormFactor::N1 { lambda: 1.0, b: 0.0 });
            }
            for _ in 0..pp {
                factors.push(NormalFormFactor::N1 {
                    lambda: 1.0,
                    b: -1.0,
                });
            }
            let block = a - DMatrix::identity(two_n, two_n);
            for _ in 0..e.alg_mult {
                kept = &kept * &block;
            }
        } else if (e.angle - std::f64::consts::PI).abs() < 1e-12 {
            let (qm, qz, qp) = split_one_cluster(a, -1.0, e.alg_mult, e.geo_mult, cfg)?;
            for _ in 0..qm {
                factors.push(NormalFormFactor::N1 {
                    lambda: -1.0,
                    b: 1.0,
                });
            }
            for _ in 0..qz {
                factors.push(NormalFormFactor::N1 {
                    lambda: -1.0,
                    b: 0.0,
                });
            }
            for _ in 0..qp {
                factors.push(NormalFormFactor::N1 {
                    lambda: -1.0,
                    b: -1.0,
                });
            }
            let block = a + DMatrix::identity(two_n, two_n);
            for _ in 0..e.alg_mult {
                kept = &kept * &block;
            }
        } else if e.angle > 0.0 {
            // Conjugate pairs handled once, from the upper half-plane entry.
            if e.geo_mult == e.alg_mult {
                let (k_plus, k_minus) = krein_split(a, e.angle, e.alg_mult, cfg)?;
                for _ in 0..k_plus {
                    factors.push(NormalFormFactor::R { theta: e.angle });
                }
                for _ in 0..k_minus {
                    factors.push(NormalFormFactor::R {
                        theta: std::f64::consts::TAU - e.angle,
                    });
                }
                let block = a * a - (a * (2.0 * e.angle.cos()))
                    + DMatrix::identity(two_n, two_n);
                for _ in 0..e.alg_mult {
                    kept = &kept * &block;
                }
            } else {
                // Non-semisimple circle pair off ±1: no N2 synthesis, the
                // whole cluster is swept into the residual.
                warnings.push(format!(
                    "non-semisimple circle cluster at angle {:.6} left in residual",
                    e.angle
                ));
                residual_flag = true;
            }
        }
    }

    // Off-circle real pairs become D(±2); complex quadruples stay residual.
    // Same circle band as the spectrum grouping.
    let band = cfg.circle_tol.max(1e-6);
    let ev: DVector<C64> = a.complex_eigenvalues();
    let mut outside: Vec<C64> = ev
        .iter()
        .cloned()
        .filter(|z| (z.norm().ln()).abs() > band)
        .collect();
    outside.sort_by(|x, y| (x.re, x.im).partial_cmp(&(y.re, y.im)).unwrap());
    let mut i = 0;
    while i < outside.len() {
        let z = outside[i];
        if z.im.abs() <= 1e-9 && z.norm() > 1.0 {
            factors.push(NormalFormFactor::D {
                lambda: if z.re > 0.0 { 2.0 } else { -2.0 },
            });
            let block = a * a - (a * (z.re + 1.0 / z.re)) + DMatrix::identity(two_n, two_n);
            kept = &kept * &block;
            i += 1;
        } else if z.im.abs() > 1e-9 {
            if z.norm() > 1.0 && z.im > 0.0 {
                residual_flag = true;
            }
            i += 1;
        } else {
            i += 1;
        }
    }

    if residual_flag {
        // Residual invariant subspace = range of the kept-cluster product.
        let g = residual_block(a, &kept, cfg)?;
        let dim_half = g.nrows() / 2;
        if nullity(&g, C64::new(1.0, 0.0), cfg.tol_rank) > 0 {
            return Err(SymplError::DecompositionAmbiguity {
                reason: "residual block unexpectedly carries eigenvalue 1".into(),
            });
        }
        factors.push(NormalFormFactor::ResidualG {
            dim_half,
            rows: (0..2 * dim_half)
                .map(|r| (0..2 * dim_half).map(|c| g[(r, c)]).collect())
                .collect(),
            non_semisimple_circle: !warnings.is_empty(),
        });
    }

    // Dimension bookkeeping must close.
    let covered: usize = factors.iter().map(|f| f.dim_half()).sum();
    if covered != m.dim_half() {
        return Err(SymplError::DecompositionAmbiguity {
            reason: format!(
                "factor dimensions sum to {covered}, expected {}",
                m.dim_half()
            ),
        });
    }

    Ok(NormalFormDecomposition {
        factors,
        p_minus,
        p_zero,
        p_plus,
        warnings,
    })
}

/// Split an eigenvalue-±1 cluster into Jordan-block counts by the sign of
/// the pairing form `w ↦ ⟨J(M − M⁻¹)w, w⟩/2` on `ker((M ∓ I)²)`.
fn split_one_cluster(
    a: &DMatrix<f64>,
    lambda: f64,
    alg: usize,
    geo: usize,
    cfg: &Tolerances,
) -> Result<(usize, usize, usize), SymplError> {
    if alg % 2 != 0 && alg != geo {
        return Err(SymplError::DecompositionAmbiguity {
            reason: format!("eigenvalue {lambda} cluster has odd algebraic multiplicity {alg}"),
        });
    }
    let two_n = a.nrows();
    let shifted = a - DMatrix::identity(two_n, two_n) * lambda;
    let sq = &shifted * &shifted;
    let k2 = kernel_basis(&sq, cfg.tol_rank);
    if k2.ncols() < alg {
        return Err(SymplError::DecompositionAmbiguity {
            reason: format!(
                "eigenvalue {lambda} cluster has Jordan structure beyond basic normal forms \
                 (dim ker² = {} < algebraic multiplicity {alg})",
                k2.ncols()
            ),
        });
    }
    let q2 = alg - geo; // number of 2×2 Jordan blocks
    if geo + q2 != alg && alg < 2 * geo - alg {
        return Err(SymplError::DecompositionAmbiguity {
            reason: "inconsistent multiplicities at ±1".into(),
        });
    }
    let pz2 = 2 * geo as isize - alg as isize;
    if pz2 < 0 || pz2 % 2 != 0 {
        return Err(SymplError::DecompositionAmbiguity {
            reason: format!("cannot reconcile alg {alg} / geo {geo} at eigenvalue {lambda}"),
        });
    }
    let p_zero = (pz2 / 2) as usize;
    if q2 == 0 {
        return Ok((0, p_zero, 0));
    }

    let j = standard_j(two_n / 2);
    let inv = a
        .clone()
        .try_inverse()
        .ok_or_else(|| SymplError::DecompositionAmbiguity {
            reason: "matrix not invertible".into(),
        })?;
    let s = (&j * (a - inv)).scale(0.5);
    let s_sym = (&s + s.transpose()).scale(0.5);
    let restricted = k2.transpose() * s_sym * &k2;
    let eig = restricted.symmetric_eigen();
    let scale = eig
        .eigenvalues
        .iter()
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
        .max(1e-300);
    let thresh = (cfg.tol_rank * scale).max(1e-12);
    let pos = eig.eigenvalues.iter().filter(|&&v| v > thresh).count();
    let neg = eig.eigenvalues.iter().filter(|&&v| v < -thresh).count();
    let zero = eig.eigenvalues.len() - pos - neg;
    // Each 2×2 Jordan block contributes one signed direction and one
    // structural zero (its kernel vector); each identity block two zeros.
    if pos + neg != q2 || zero != k2.ncols() - q2 {
        return Err(SymplError::DecompositionAmbiguity {
            reason: format!(
                "pairing form signature ({pos},{neg},{zero}) does not match expected \
                 block counts at eigenvalue {lambda}"
            ),
        });
    }
    Ok((pos, p_zero, neg))
}

/// Krein signature of the semisimple eigenspace at `e^{iθ}`, θ ∈ (0,π):
/// positive count goes to `R(θ)` factors, negative to `R(2π−θ)`.
fn krein_split(
    a: &DMatrix<f64>,
    theta: f64,
    mult: usize,
    cfg: &Tolerances,
) -> Result<(usize, usize), SymplError> {
    let d = a.nrows();
    let omega = C64::from_polar(1.0, theta);
    let mc = DMatrix::from_fn(d, d, |i, j| {
        C64::new(a[(i, j)], 0.0) - if i == j { omega } else { C64::new(0.0, 0.0) }
    });
    let svd = mc.svd(false, true);
    let vt = svd.v_t.as_ref().expect("requested V^T");
    let sv = &svd.singular_values;
    let smax = sv.iter().cloned().fold(0.0f64, f64::max).max(1e-300);
    let mut basis: Vec<DVector<C64>> = Vec::new();
    for (idx, &s) in sv.iter().enumerate() {
        if s <= cfg.tol_rank.max(1e-10) * smax {
            basis.push(vt.row(idx).transpose().map(|z| z.conj()));
        }
    }
    if basis.len() != mult {
        return Err(SymplError::DecompositionAmbiguity {
            reason: format!(
                "eigenspace at angle {theta:.6} has numerical dimension {} expected {mult}",
                basis.len()
            ),
        });
    }
    let j = standard_j(d / 2);
    let jc = DMatrix::from_fn(d, d, |i, jx| C64::new(j[(i, jx)], 0.0));
    let mut h = DMatrix::<C64>::zeros(mult, mult);
    for (r, vr) in basis.iter().enumerate() {
        for (c, vc) in basis.iter().enumerate() {
            // Hermitian Krein form v*(−iJ)w.
            let val = (vr.map(|z| z.conj()).transpose() * &jc * vc)[(0, 0)];
            h[(r, c)] = C64::new(0.0, -1.0) * val;
        }
    }
    let h_herm = (h.clone() + h.adjoint()).scale(0.5);
    let eig = h_herm.symmetric_eigen();
    let scale = eig
        .eigenvalues
        .iter()
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
        .max(1e-300);
    let thresh = (cfg.tol_rank * scale).max(1e-10);
    let pos = eig.eigenvalues.iter().filter(|&&v| v > thresh).count();
    let neg = eig.eigenvalues.iter().filter(|&&v| v < -thresh).count();
    if pos + neg != mult {
        return Err(SymplError::DecompositionAmbiguity {
            reason: format!("Krein form degenerate at angle {theta:.6}"),
        });
    }
    Ok((pos, neg))
}

/// Orthonormal kernel basis of `m` at a relative singular-value threshold.
fn kernel_basis(m: &DMatrix<f64>, tol_rank: f64) -> DMatrix<f64> {
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.as_ref().expect("requested V^T");
    let sv = &svd.singular_values;
    let smax = sv.iter().cloned().fold(0.0f64, f64::max).max(1e-300);
    let cols: Vec<usize> = (0..sv.len())
        .filter(|&i| sv[i] <= tol_rank.max(1e-10) * smax)
        .collect();
    let mut out = DMatrix::zeros(m.nrows(), cols.len());
    for (k, &i) in cols.iter().enumerate() {
        out.set_column(k, &vt.row(i).transpose());
    }
    out
}

/// Restrict `m` to the invariant subspace spanned by the range of `kept`
/// (the product of the kept-cluster polynomial factors), returned in a
/// Darboux basis so the restriction is itself symplectic.
fn residual_block(
    a: &DMatrix<f64>,
    kept: &DMatrix<f64>,
    cfg: &Tolerances,
) -> Result<DMatrix<f64>, SymplError> {
    let svd = kept.clone().svd(true, false);
    let u = svd.u.as_ref().expect("requested U");
    let sv = &svd.singular_values;
    let smax = sv.iter().cloned().fold(0.0f64, f64::max).max(1e-300);
    let cols: Vec<usize> = (0..sv.len())
        .filter(|&i| sv[i] > cfg.tol_rank.max(1e-9) * smax)
        .collect();
    if cols.len() % 2 != 0 {
        return Err(SymplError::DecompositionAmbiguity {
            reason: format!("residual subspace has odd dimension {}", cols.len()),
        });
    }
    let mut basis = DMatrix::zeros(a.nrows(), cols.len());
    for (k, &i) in cols.iter().enumerate() {
        basis.set_column(k, &u.column(i));
    }
    let canon = darboux_basis(&basis)?;
    // Coordinates of M·C in the C basis: solve C ξ = M C in least squares.
    let mc = a * &canon;
    let gram = canon.transpose() * &canon;
    let rhs = canon.transpose() * mc;
    let sol = gram
        .lu()
        .solve(&rhs)
        .ok_or_else(|| SymplError::DecompositionAmbiguity {
            reason: "residual restriction solve failed".into(),
        })?;
    Ok(symplectify(&sol))
}

/// Symplectic Gram–Schmidt: canonical (Darboux) basis of the span.
fn darboux_basis(basis: &DMatrix<f64>) -> Result<DMatrix<f64>, SymplError> {
    let two_n = basis.nrows();
    let r = basis.ncols() / 2;
    let j = standard_j(two_n / 2);
    let mut pool: Vec<DVector<f64>> = (0..basis.ncols()).map(|c| basis.column(c).into()).collect();
    let mut us: Vec<DVector<f64>> = Vec::new();
    let mut ws: Vec<DVector<f64>> = Vec::new();
    let omega = |x: &DVector<f64>, y: &DVector<f64>| (x.transpose() * &j * y)[(0, 0)];
    while us.len() < r {
        let u = pool
            .iter()
            .max_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap())
            .cloned()
            .ok_or_else(|| SymplError::DecompositionAmbiguity {
                reason: "ran out of vectors building Darboux basis".into(),
            })?;
        let u = &u / u.norm();
        // Partner with the strongest pairing.
        let (best, val) = pool
            .iter()
            .map(|v| (v, omega(&u, v)))
            .max_by(|x, y| x.1.abs().partial_cmp(&y.1.abs()).unwrap())
            .map(|(v, s)| (v.clone(), s))
            .ok_or_else(|| SymplError::DecompositionAmbiguity {
                reason: "empty pool".into(),
            })?;
        if val.abs() < 1e-10 {
            return Err(SymplError::DecompositionAmbiguity {
                reason: "residual subspace is not symplectic at tolerance".into(),
            });
        }
        // Normalize so that ω(u, w) = −1, matching J's upper-right block.
        let w = best * (-1.0 / val);
        let mut next = Vec::new();
        for v in pool.into_iter() {
            let v2 = &v + &w * omega(&u, &v) - &u * omega(&w, &v);
            if v2.norm() > 1e-12 {
                next.push(v2);
            }
        }
        pool = next;
        us.push(u);
        ws.push(w);
    }
    let mut c = DMatrix::zeros(two_n, 2 * r);
    for (i, u) in us.iter().enumerate() {
        c.set_column(i, u);
    }
    for (i, w) in ws.iter().enumerate() {
        c.set_column(r + i, w);
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sympl::{diamond, diamond_all, elliptic_height};

    fn cfg() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn already_normal_form_is_recognized() {
        let m = diamond(
            &SymplecticMatrix::n1_block(1.0, 1.0),
            &SymplecticMatrix::rotation(std::f64::consts::SQRT_2),
        );
        let d = normal_form_decompose(&m, &cfg()).unwrap();
        assert_eq!((d.p_minus, d.p_zero, d.p_plus), (1, 0, 0));
        let angles = d.rotation_angles();
        assert_eq!(angles.len(), 1);
        assert!((angles[0] - std::f64::consts::SQRT_2).abs() < 1e-7);
        assert!(d.is_one_shear_and_rotations(2));
    }

    #[test]
    fn clockwise_rotation_keeps_its_krein_sign() {
        let theta = 2.3; // in (0, π) after folding? no: θ ∈ (π, 2π) block
        let m = diamond(
            &SymplecticMatrix::rotation(std::f64::consts::TAU - theta),
            &SymplecticMatrix::rotation(theta),
        );
        let d = normal_form_decompose(&m, &cfg()).unwrap();
        let mut angles = d.rotation_angles();
        angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(angles.len(), 2);
        assert!((angles[0] - theta).abs() < 1e-7);
        assert!((angles[1] - (std::f64::consts::TAU - theta)).abs() < 1e-7);
    }

    #[test]
    fn conjugation_preserves_invariants() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let base = diamond(
            &SymplecticMatrix::n1_block(1.0, 1.0),
            &SymplecticMatrix::rotation(1.0),
        );
        for _ in 0..8 {
            let p = crate::path::random_symplectic(2, 0.5, &mut rng);
            let inv = p.matrix().clone().try_inverse().unwrap();
            let conj = SymplecticMatrix::new(
                crate::sympl::symplectify(&(inv * base.matrix() * p.matrix())),
                1e-7,
            )
            .unwrap();
            let d0 = normal_form_decompose(&base, &cfg()).unwrap();
            let d1 = normal_form_decompose(&conj, &cfg()).unwrap();
            assert_eq!(
                (d0.p_minus, d0.p_zero, d0.p_plus),
                (d1.p_minus, d1.p_zero, d1.p_plus)
            );
            let mut a0 = d0.rotation_angles();
            let mut a1 = d1.rotation_angles();
            a0.sort_by(|a, b| a.partial_cmp(b).unwrap());
            a1.sort_by(|a, b| a.partial_cmp(b).unwrap());
            assert_eq!(a0.len(), a1.len());
            for (x, y) in a0.iter().zip(a1.iter()) {
                assert!((x - y).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn nu_one_reconstruction_matches_counts() {
        let m = diamond_all(&[
            SymplecticMatrix::n1_block(1.0, 1.0),
            SymplecticMatrix::identity(1),
            SymplecticMatrix::n1_block(1.0, -1.0),
        ]);
        let d = normal_form_decompose(&m, &cfg()).unwrap();
        assert_eq!((d.p_minus, d.p_zero, d.p_plus), (1, 1, 1));
        assert_eq!(d.nu_one(), 4);
        let nu_direct = nullity(m.matrix(), C64::new(1.0, 0.0), cfg().tol_rank);
        assert_eq!(d.nu_one(), nu_direct);
    }

    #[test]
    fn hyperbolic_pairs_become_d_blocks() {
        let m = diamond(
            &SymplecticMatrix::d_block(3.0),
            &SymplecticMatrix::d_block(-1.5),
        );
        let d = normal_form_decompose(&m, &cfg()).unwrap();
        let mut lambdas: Vec<f64> = d
            .factors
            .iter()
            .filter_map(|f| match f {
                NormalFormFactor::D { lambda } => Some(*lambda),
                _ => None,
            })
            .collect();
        lambdas.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(lambdas, vec![-2.0, 2.0]);
    }

    #[test]
    fn complex_quadruple_goes_to_residual_without_one() {
        // exp(J S) with a generator mixing two planes produces a complex
        // saddle quadruple for suitable S.
        let s = DMatrix::from_row_slice(
            4,
            4,
            &[
                0.9, 0.6, 0.0, 0.0, //
                0.6, -0.8, 0.0, 0.3, //
                0.0, 0.0, -1.1, 0.4, //
                0.0, 0.3, 0.4, 0.7,
            ],
        );
        let j = standard_j(2);
        let g = crate::path::expm(&(j * s));
        let m = SymplecticMatrix::new(g, 1e-7).unwrap();
        let spec = unit_circle_spectrum(&m, &cfg()).unwrap();
        if spec.off_circle_count == 4 && spec.entries.is_empty() {
            let d = normal_form_decompose(&m, &cfg()).unwrap();
            let has_complex_quad = m
                .matrix()
                .complex_eigenvalues()
                .iter()
                .any(|z| z.im.abs() > 1e-6 && (z.norm() - 1.0).abs() > 1e-4);
            if has_complex_quad {
                assert!(d
                    .factors
                    .iter()
                    .any(|f| matches!(f, NormalFormFactor::ResidualG { .. })));
            }
            // Rebuilt product must carry the same elliptic height.
            let rebuilt = diamond_all(
                &d.factors
                    .iter()
                    .map(|f| f.to_matrix())
                    .collect::<Vec<_>>(),
            );
            assert_eq!(
                elliptic_height(&m, &cfg()).unwrap(),
                elliptic_height(&rebuilt, &cfg()).unwrap()
            );
        }
    }

    #[test]
    fn ellipsoid_style_monodromy_has_leading_shear() {
        // Planar-characteristic monodromy shape: conjugated N1(1,1) ⋄ R ⋄ R.
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        let base = diamond_all(&[
            SymplecticMatrix::n1_block(1.0, 1.0),
            SymplecticMatrix::rotation(2.0 * std::f64::consts::PI * 0.3137),
            SymplecticMatrix::rotation(2.0 * std::f64::consts::PI * 0.7151),
        ]);
        let p = crate::path::random_symplectic(3, 0.4, &mut rng);
        let inv = p.matrix().clone().try_inverse().unwrap();
        let m = SymplecticMatrix::new(
            crate::sympl::symplectify(&(inv * base.matrix() * p.matrix())),
            1e-7,
        )
        .unwrap();
        let d = normal_form_decompose(&m, &cfg()).unwrap();
        assert_eq!((d.p_minus, d.p_zero, d.p_plus), (1, 0, 0));
        assert!(matches!(
            d.factors.first(),
            Some(NormalFormFactor::N1 { lambda, b }) if *lambda == 1.0 && *b == 1.0
        ));
        assert_eq!(d.rotation_angles().len(), 2);
    }
}
