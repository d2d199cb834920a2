use super::{SymplError, SymplecticMatrix};
use crate::config::Tolerances;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

type C64 = Complex<f64>;

/// One unit-circle eigenvalue record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UnitEigenvalue {
    /// Eigenvalue on the unit circle, `e^{iθ}`.
    pub angle: f64,
    /// Algebraic multiplicity of the cluster.
    pub alg_mult: usize,
    /// Geometric multiplicity `ν_ω = dim ker(M − ωI)`.
    pub geo_mult: usize,
}

impl UnitEigenvalue {
    pub fn omega(&self) -> C64 {
        C64::from_polar(1.0, self.angle)
    }
}

/// Unit-circle spectral data of a symplectic matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UnitSpectrum {
    pub entries: Vec<UnitEigenvalue>,
    pub off_circle_count: usize,
}

impl UnitSpectrum {
    /// Total algebraic multiplicity on the circle.
    pub fn total_alg(&self) -> usize {
        self.entries.iter().map(|e| e.alg_mult).sum()
    }

    /// `ν_ω` for a given point on the circle, 0 when `ω` is not in the list.
    pub fn nu_at(&self, angle: f64, angle_tol: f64) -> usize {
        self.entries
            .iter()
            .find(|e| angle_dist(e.angle, angle) <= angle_tol)
            .map_or(0, |e| e.geo_mult)
    }

    /// Smallest positive angular gap from `angle` to a spectrum entry not at
    /// `angle` itself (2π when the circle spectrum is empty or singleton).
    pub fn min_angle_gap(&self, angle: f64) -> f64 {
        let mut gap = std::f64::consts::TAU;
        for e in &self.entries {
            let d = angle_dist(e.angle, angle);
            if d > 1e-12 {
                gap = gap.min(d);
            }
        }
        gap
    }
}

fn angle_dist(a: f64, b: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let mut d = (a - b).rem_euclid(tau);
    if d > tau / 2.0 {
        d = tau - d;
    }
    d
}

/// `dim_C ker_C(M − ωI)` by rank-revealing SVD.
pub fn nullity(m: &DMatrix<f64>, omega: C64, threshold_rel: f64) -> usize {
    let d = m.nrows();
    let mc = DMatrix::from_fn(d, d, |i, j| {
        C64::new(m[(i, j)], 0.0) - if i == j { omega } else { C64::new(0.0, 0.0) }
    });
    let sv = mc.singular_values();
    let smax = sv.iter().cloned().fold(0.0f64, f64::max);
    if smax == 0.0 {
        return d;
    }
    sv.iter().filter(|&&s| s <= threshold_rel * smax).count()
}

/// Group the eigenvalues of `m` to the unit circle, cluster by angle,
/// conjugate-symmetrize, and attach geometric multiplicities.
pub fn unit_circle_spectrum(
    m: &SymplecticMatrix,
    cfg: &Tolerances,
) -> Result<UnitSpectrum, SymplError> {
    let two_n = 2 * m.dim_half();
    let ev: DVector<C64> = m.matrix().complex_eigenvalues();
    let moduli: Vec<f64> = ev.iter().map(|z| z.norm()).collect();

    // Circle membership by |ln|λ||, symmetric in λ ↔ 1/λ̄ so that a
    // reciprocal pair cannot straddle the decision. The band is floored at
    // 1e−6: eigensolvers scatter defective clusters by ~sqrt(machine eps),
    // far beyond the nominal circle tolerance. Moduli landing just outside
    // the band are refused rather than guessed.
    let band = cfg.circle_tol.max(1e-6);
    let on: Vec<bool> = moduli.iter().map(|&r| r.ln().abs() <= band).collect();
    for &r in &moduli {
        let d = r.ln().abs();
        if d > band && d < 20.0 * band {
            return Err(SymplError::SpectralAmbiguity { modulus: r });
        }
    }

    // Reciprocal-pair consistency: an on-circle eigenvalue whose nearest
    // reciprocal partner was grouped off-circle signals an unsafe decision.
    for (i, &is_on) in on.iter().enumerate() {
        if !is_on {
            continue;
        }
        let target = 1.0 / ev[i].conj();
        let (j, dist) = ev
            .iter()
            .enumerate()
            .map(|(j, z)| (j, (z - target).norm()))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        if dist <= 10.0 * cfg.cluster_gap && !on[j] {
            return Err(SymplError::SpectralAmbiguity {
                modulus: moduli[j],
            });
        }
    }

    let merge = cfg.cluster_gap.max(1e-7);
    // Upper half-plane angles (fold conjugates), plus the ±1 axes.
    let mut at_one = 0usize;
    let mut at_minus_one = 0usize;
    let mut upper: Vec<f64> = Vec::new();
    let mut lower = 0usize;
    for (i, z) in ev.iter().enumerate() {
        if !on[i] {
            continue;
        }
        let theta = z.im.atan2(z.re);
        if theta.abs() <= merge {
            at_one += 1;
        } else if (theta.abs() - std::f64::consts::PI).abs() <= merge {
            at_minus_one += 1;
        } else if theta > 0.0 {
            upper.push(theta);
        } else {
            lower += 1;
        }
    }
    if upper.len() != lower {
        return Err(SymplError::SpectralAmbiguity { modulus: 1.0 });
    }

    upper.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut clusters: Vec<(f64, usize)> = Vec::new();
    for theta in upper {
        match clusters.last_mut() {
            Some((rep, count)) if angle_dist(*rep, theta) <= merge => {
                *rep = (*rep * *count as f64 + theta) / (*count as f64 + 1.0);
                *count += 1;
            }
            _ => clusters.push((theta, 1)),
        }
    }

    let mut entries = Vec::new();
    let rank_thresh = |cluster_radius: f64| cfg.tol_rank.max(50.0 * cluster_radius).max(1e-12);
    if at_one > 0 {
        let geo = nullity(m.matrix(), C64::new(1.0, 0.0), rank_thresh(merge));
        entries.push(UnitEigenvalue {
            angle: 0.0,
            alg_mult: at_one,
            geo_mult: geo.clamp(1, at_one),
        });
    }
    for (theta, count) in &clusters {
        let omega = C64::from_polar(1.0, *theta);
        let geo = nullity(m.matrix(), omega, rank_thresh(merge));
        let geo = geo.clamp(1, *count);
        entries.push(UnitEigenvalue {
            angle: *theta,
            alg_mult: *count,
            geo_mult: geo,
        });
        entries.push(UnitEigenvalue {
            angle: -*theta,
            alg_mult: *count,
            geo_mult: geo,
        });
    }
    if at_minus_one > 0 {
        let geo = nullity(m.matrix(), C64::new(-1.0, 0.0), rank_thresh(merge));
        entries.push(UnitEigenvalue {
            angle: std::f64::consts::PI,
            alg_mult: at_minus_one,
            geo_mult: geo.clamp(1, at_minus_one),
        });
    }

    let total: usize = entries.iter().map(|e| e.alg_mult).sum();
    Ok(UnitSpectrum {
        entries,
        off_circle_count: two_n - total,
    })
}

/// Elliptic height `e(M)`: total algebraic multiplicity of unit-circle
/// eigenvalues. Always even for a symplectic matrix.
pub fn elliptic_height(m: &SymplecticMatrix, cfg: &Tolerances) -> Result<usize, SymplError> {
    let spec = unit_circle_spectrum(m, cfg)?;
    let e = spec.total_alg();
    if e % 2 != 0 {
        return Err(SymplError::SpectralAmbiguity { modulus: 1.0 });
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sympl::{diamond, diamond_all};

    fn cfg() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn rotation_spectrum_is_conjugate_pair() {
        let m = SymplecticMatrix::rotation(std::f64::consts::FRAC_PI_3);
        let s = unit_circle_spectrum(&m, &cfg()).unwrap();
        assert_eq!(s.off_circle_count, 0);
        assert_eq!(s.entries.len(), 2);
        for e in &s.entries {
            assert_eq!(e.alg_mult, 1);
            assert_eq!(e.geo_mult, 1);
            assert!((e.angle.abs() - std::f64::consts::FRAC_PI_3).abs() < 1e-10);
        }
    }

    #[test]
    fn hyperbolic_block_has_empty_circle_spectrum() {
        let m = SymplecticMatrix::d_block(2.0);
        let s = unit_circle_spectrum(&m, &cfg()).unwrap();
        assert!(s.entries.is_empty());
        assert_eq!(s.off_circle_count, 2);
    }

    #[test]
    fn shear_has_double_one_with_simple_kernel() {
        let m = SymplecticMatrix::n1_block(1.0, 1.0);
        let s = unit_circle_spectrum(&m, &cfg()).unwrap();
        assert_eq!(s.entries.len(), 1);
        assert_eq!(s.entries[0].alg_mult, 2);
        assert_eq!(s.entries[0].geo_mult, 1);
        assert_eq!(s.entries[0].angle, 0.0);
    }

    #[test]
    fn elliptic_height_of_identity_is_full() {
        let m = SymplecticMatrix::identity(3);
        assert_eq!(elliptic_height(&m, &cfg()).unwrap(), 6);
    }

    #[test]
    fn elliptic_height_counts_only_circle_pairs() {
        let m = diamond(
            &SymplecticMatrix::d_block(2.0),
            &SymplecticMatrix::rotation(1.1),
        );
        assert_eq!(elliptic_height(&m, &cfg()).unwrap(), 2);
    }

    #[test]
    fn hyperbolic_monodromy_shape_has_height_two() {
        // N1(1,1) ⋄ D(2)^{⋄(n−1)}: a double Floquet multiplier at 1 and
        // everything else off the circle.
        let m = diamond_all(&[
            SymplecticMatrix::n1_block(1.0, 1.0),
            SymplecticMatrix::d_block(2.0),
            SymplecticMatrix::d_block(2.0),
        ]);
        assert_eq!(elliptic_height(&m, &cfg()).unwrap(), 2);
        let s = unit_circle_spectrum(&m, &cfg()).unwrap();
        assert_eq!(s.entries.len(), 1);
        assert_eq!(s.entries[0].alg_mult, 2);
        assert_eq!(s.off_circle_count, 4);
    }

    #[test]
    fn conjugation_invariance_of_spectrum_and_height() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let base = diamond(
            &SymplecticMatrix::n1_block(1.0, 1.0),
            &SymplecticMatrix::rotation(std::f64::consts::SQRT_2),
        );
        for _ in 0..10 {
            let p = crate::path::random_symplectic(2, 0.6, &mut rng);
            let inv = p.matrix().clone().try_inverse().unwrap();
            let conj = SymplecticMatrix::new(
                crate::sympl::symplectify(&(inv * base.matrix() * p.matrix())),
                1e-7,
            )
            .unwrap();
            let e0 = elliptic_height(&base, &cfg()).unwrap();
            let e1 = elliptic_height(&conj, &cfg()).unwrap();
            assert_eq!(e0, e1);
            let s0 = unit_circle_spectrum(&base, &cfg()).unwrap();
            let s1 = unit_circle_spectrum(&conj, &cfg()).unwrap();
            assert_eq!(s0.entries.len(), s1.entries.len());
            for (a, b) in s0.entries.iter().zip(s1.entries.iter()) {
                assert_eq!(a.alg_mult, b.alg_mult);
                assert_eq!(a.geo_mult, b.geo_mult);
                assert!(angle_dist(a.angle, b.angle) < 1e-6);
            }
        }
    }

    #[test]
    fn nu_is_conjugate_symmetric() {
        let m = diamond(
            &SymplecticMatrix::rotation(0.8),
            &SymplecticMatrix::rotation(0.8),
        );
        let cfg = cfg();
        let s = unit_circle_spectrum(&m, &cfg).unwrap();
        let up = s.nu_at(0.8, 1e-6);
        let down = s.nu_at(-0.8, 1e-6);
        assert_eq!(up, 2);
        assert_eq!(up, down);
    }
}
