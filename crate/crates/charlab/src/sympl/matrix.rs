use super::SymplError;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// The standard symplectic matrix `J = (0 −I; I 0)` of size `2n`.
pub fn standard_j(n: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = -1.0;
        j[(n + i, i)] = 1.0;
    }
    j
}

/// A validated real symplectic matrix with value semantics.
///
/// Construction goes through [`SymplecticMatrix::new`], which checks
/// `‖MᵀJM − J‖_max ≤ tol` and `det M ≈ 1`, recording the residual for
/// diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticMatrix {
    n: usize,
    entries: DMatrix<f64>,
    residual: f64,
}

impl SymplecticMatrix {
    /// Validate `raw` as an element of `Sp(2n)` at tolerance `tol`.
    pub fn new(raw: DMatrix<f64>, tol: f64) -> Result<Self, SymplError> {
        if raw.nrows() != raw.ncols() || raw.nrows() % 2 != 0 || raw.nrows() == 0 {
            return Err(SymplError::BadShape {
                rows: raw.nrows(),
                cols: raw.ncols(),
            });
        }
        let n = raw.nrows() / 2;
        let residual = symplectic_residual(&raw);
        if residual > tol {
            return Err(SymplError::SymplecticViolation { residual, tol });
        }
        // DetM = +1 follows from MᵀJM = J up to rounding; check it anyway so
        // a wildly scaled matrix cannot sneak past a loose tolerance.
        let det = raw.determinant();
        if (det - 1.0).abs() > (tol * 1e3).max(1e-6) * det.abs().max(1.0) {
            return Err(SymplError::SymplecticViolation {
                residual: (det - 1.0).abs(),
                tol,
            });
        }
        Ok(SymplecticMatrix {
            n,
            entries: raw,
            residual,
        })
    }

    /// Identity in `Sp(2n)`.
    pub fn identity(n: usize) -> Self {
        SymplecticMatrix {
            n,
            entries: DMatrix::identity(2 * n, 2 * n),
            residual: 0.0,
        }
    }

    pub fn dim_half(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.entries
    }

    /// Residual of the symplectic identity recorded at construction.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// `D(λ) = diag(λ, 1/λ)` for `λ = ±2` (any nonzero `λ` is accepted).
    pub fn d_block(lambda: f64) -> Self {
        let m = DMatrix::from_row_slice(2, 2, &[lambda, 0.0, 0.0, 1.0 / lambda]);
        SymplecticMatrix {
            n: 1,
            entries: m,
            residual: 0.0,
        }
    }

    /// `N1(λ, b) = (λ b; 0 λ)` with `λ = ±1`.
    pub fn n1_block(lambda: f64, b: f64) -> Self {
        let m = DMatrix::from_row_slice(2, 2, &[lambda, b, 0.0, lambda]);
        SymplecticMatrix {
            n: 1,
            entries: m,
            residual: 0.0,
        }
    }

    /// Rotation `R(θ)`.
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        let m = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        SymplecticMatrix {
            n: 1,
            entries: m,
            residual: 0.0,
        }
    }

    /// Serialize as `{"n": .., "rows": [[..], ..]}`.
    pub fn to_json(&self) -> MatrixJson {
        MatrixJson {
            n: self.n,
            rows: (0..2 * self.n)
                .map(|i| (0..2 * self.n).map(|j| self.entries[(i, j)]).collect())
                .collect(),
        }
    }

    pub fn from_json(json: &MatrixJson, tol: f64) -> Result<Self, SymplError> {
        let d = 2 * json.n;
        if json.rows.len() != d || json.rows.iter().any(|r| r.len() != d) {
            return Err(SymplError::BadShape {
                rows: json.rows.len(),
                cols: json.rows.first().map_or(0, |r| r.len()),
            });
        }
        let m = DMatrix::from_fn(d, d, |i, j| json.rows[i][j]);
        SymplecticMatrix::new(m, tol)
    }
}

/// JSON form of a symplectic matrix; binary64 round-trip exact.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixJson {
    pub n: usize,
    pub rows: Vec<Vec<f64>>,
}

/// `‖MᵀJM − J‖_max`.
pub fn symplectic_residual(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows() / 2;
    let j = standard_j(n);
    let e = m.transpose() * &j * m - &j;
    e.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

/// Block-interleaving diamond product of two symplectic matrices.
///
/// Writing `M_k = (A_k B_k; C_k D_k)` in `n_k × n_k` blocks, the product is
/// the `2(n_1+n_2)` matrix `(A_1 0 B_1 0; 0 A_2 0 B_2; C_1 0 D_1 0; 0 C_2 0 D_2)`.
pub fn diamond(m1: &SymplecticMatrix, m2: &SymplecticMatrix) -> SymplecticMatrix {
    let (n1, n2) = (m1.dim_half(), m2.dim_half());
    let n = n1 + n2;
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    let a = m1.matrix();
    let b = m2.matrix();
    for i in 0..n1 {
        for j in 0..n1 {
            out[(i, j)] = a[(i, j)];
            out[(i, n + j)] = a[(i, n1 + j)];
            out[(n + i, j)] = a[(n1 + i, j)];
            out[(n + i, n + j)] = a[(n1 + i, n1 + j)];
        }
    }
    for i in 0..n2 {
        for j in 0..n2 {
            out[(n1 + i, n1 + j)] = b[(i, j)];
            out[(n1 + i, n + n1 + j)] = b[(i, n2 + j)];
            out[(n + n1 + i, n1 + j)] = b[(n2 + i, j)];
            out[(n + n1 + i, n + n1 + j)] = b[(n2 + i, n2 + j)];
        }
    }
    SymplecticMatrix {
        n,
        entries: out,
        residual: m1.residual().max(m2.residual()),
    }
}

/// Diamond product of a list of factors.
pub fn diamond_all(factors: &[SymplecticMatrix]) -> SymplecticMatrix {
    let mut it = factors.iter();
    let first = it.next().expect("diamond of empty list").clone();
    it.fold(first, |acc, m| diamond(&acc, m))
}

/// Project a near-symplectic matrix back onto `Sp(2n)`.
///
/// Newton iteration on `N ↦ ½(N + J⁻¹ N⁻ᵀ J)`-style correction expressed
/// through the residual; converges quadratically for small drift.
pub fn symplectify(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows() / 2;
    let j = standard_j(n);
    let mut w = m.clone();
    for _ in 0..4 {
        let s = w.transpose() * &j * &w; // should equal J
        let e = &s - &j;
        if e.iter().fold(0.0f64, |a, v| a.max(v.abs())) < 1e-15 {
            break;
        }
        // First-order correction W ← W (I − ½ J⁻¹ E); J⁻¹ = −J.
        let corr = DMatrix::identity(2 * n, 2 * n) + (&j * e).scale(0.5);
        w *= corr;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn tol() -> f64 {
        1e-9
    }

    #[test]
    fn identity_is_symplectic_with_zero_residual() {
        let m = SymplecticMatrix::new(DMatrix::identity(4, 4), tol()).unwrap();
        assert_eq!(m.residual(), 0.0);
        assert_eq!(m.dim_half(), 2);
    }

    #[test]
    fn standard_j_is_symplectic() {
        let j = standard_j(2);
        let m = SymplecticMatrix::new(j, tol()).unwrap();
        assert!(m.residual() <= tol());
    }

    #[test]
    fn broken_pairing_is_rejected() {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 1.0, 1.0, 1.0]));
        match SymplecticMatrix::new(m, tol()) {
            Err(SymplError::SymplecticViolation { .. }) => {}
            other => panic!("expected SymplecticViolation, got {other:?}"),
        }
    }

    #[test]
    fn odd_dimension_is_rejected() {
        let m = DMatrix::identity(3, 3);
        assert!(matches!(
            SymplecticMatrix::new(m, tol()),
            Err(SymplError::BadShape { .. })
        ));
    }

    #[test]
    fn diamond_of_identities_is_identity() {
        let i2 = SymplecticMatrix::identity(1);
        let out = diamond(&i2, &i2);
        assert_eq!(out.matrix(), &DMatrix::identity(4, 4));
    }

    #[test]
    fn diamond_matches_block_interleaving() {
        // N1(1,1) ⋄ R(π/3): A-blocks land in rows/cols {0,1}, B-blocks in
        // {0,1}×{2,3} of the 4×4 result.
        let m1 = SymplecticMatrix::n1_block(1.0, 1.0);
        let m2 = SymplecticMatrix::rotation(std::f64::consts::FRAC_PI_3);
        let d = diamond(&m1, &m2);
        let (a, b) = (m1.matrix(), m2.matrix());
        let e = d.matrix();
        assert_eq!(e[(0, 0)], a[(0, 0)]);
        assert_eq!(e[(0, 2)], a[(0, 1)]);
        assert_eq!(e[(2, 0)], a[(1, 0)]);
        assert_eq!(e[(2, 2)], a[(1, 1)]);
        assert_eq!(e[(1, 1)], b[(0, 0)]);
        assert_eq!(e[(1, 3)], b[(0, 1)]);
        assert_eq!(e[(3, 1)], b[(1, 0)]);
        assert_eq!(e[(3, 3)], b[(1, 1)]);
        assert_eq!(e[(0, 1)], 0.0);
        assert_eq!(e[(2, 3)], 0.0);
        // The product of symplectic factors is symplectic.
        assert!(symplectic_residual(e) < 1e-12);
    }

    #[test]
    fn diamond_is_associative() {
        let a = SymplecticMatrix::rotation(0.7);
        let b = SymplecticMatrix::d_block(2.0);
        let c = SymplecticMatrix::n1_block(-1.0, 1.0);
        let left = diamond(&diamond(&a, &b), &c);
        let right = diamond(&a, &diamond(&b, &c));
        assert_eq!(left.matrix(), right.matrix());
    }

    #[test]
    fn diamond_spectrum_is_union_of_factor_spectra() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let g1 = random_sp2(&mut rng);
            let g2 = random_sp2(&mut rng);
            let d = diamond(&g1, &g2);
            let mut ev: Vec<_> = d
                .matrix()
                .complex_eigenvalues()
                .iter()
                .cloned()
                .collect();
            let mut expect: Vec<_> = g1
                .matrix()
                .complex_eigenvalues()
                .iter()
                .chain(g2.matrix().complex_eigenvalues().iter())
                .cloned()
                .collect();
            let key = |z: &num_complex::Complex<f64>| (z.re, z.im);
            ev.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
            expect.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
            for (x, y) in ev.iter().zip(expect.iter()) {
                assert!((x - y).norm() < 1e-9, "{x} vs {y}");
            }
        }
    }

    pub(crate) fn random_sp2(rng: &mut impl rand::Rng) -> SymplecticMatrix {
        // exp(J S) with S symmetric is symplectic.
        let s = {
            let a: f64 = rng.gen_range(-1.0..1.0);
            let b: f64 = rng.gen_range(-1.0..1.0);
            let c: f64 = rng.gen_range(-1.0..1.0);
            DMatrix::from_row_slice(2, 2, &[a, b, b, c])
        };
        let j = standard_j(1);
        let m = crate::path::expm(&(j * s));
        SymplecticMatrix::new(m, 1e-8).unwrap()
    }

    #[test]
    fn json_round_trip_is_binary_exact() {
        let m = diamond(
            &SymplecticMatrix::rotation(1.234567890123),
            &SymplecticMatrix::d_block(-2.0),
        );
        let j = m.to_json();
        let s = serde_json::to_string(&j).unwrap();
        let back: MatrixJson = serde_json::from_str(&s).unwrap();
        let m2 = SymplecticMatrix::from_json(&back, 1e-9).unwrap();
        assert_eq!(m.matrix(), m2.matrix());
    }

    #[test]
    fn symplectify_removes_drift() {
        let m = SymplecticMatrix::rotation(0.9).into_matrix() * 1.000001;
        assert!(symplectic_residual(&m) > 1e-7);
        let w = symplectify(&m);
        assert!(symplectic_residual(&w) < 1e-12);
    }
}
