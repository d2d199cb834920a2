//! All numerical tolerances in one record, threaded explicitly.

use serde::{Deserialize, Serialize};

/// Tolerance and budget knobs shared across the pipeline.
///
/// Every module takes the record (or the fields it needs) as an explicit
/// argument; there is no global state.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Max-norm bound on `MᵀJM − J` for a matrix to count as symplectic.
    pub tol_sympl: f64,
    /// Relative half-width of the unit-circle band for eigenvalue grouping.
    pub circle_tol: f64,
    /// Relative singular-value threshold for numerical rank / kernel dims.
    pub tol_rank: f64,
    /// Minimal angular separation between eigenvalue clusters accepted by
    /// the normal-form decomposer.
    pub cluster_gap: f64,
    /// |D_ω| below this (relative to path scale) marks a degenerate endpoint.
    pub tol_deg: f64,
    /// Co-orientation derivative below this triggers local bisection and
    /// perturbed recounts instead of the plain sign rule.
    pub tol_co: f64,
    /// Step used for the co-orientation finite difference `D_ω(M e^{±εJ})`.
    pub eps_co: f64,
    /// Maximum adaptive refinement depth in crossing detection.
    pub max_depth: u32,
    /// Cap on `‖M_{i+1} − M_i‖` between consecutive path samples.
    pub step_cap: f64,
    /// Largest denominator tried by the continued-fraction rationality test.
    pub q_max: u64,
    /// Acceptance error for a rational witness `p/q` of `θ/π`.
    pub rat_tol: f64,
    /// Upper bound for the splitting-number probe angle.
    pub eps_split: f64,
    /// Default iteration depth of index profiles.
    pub m_max: usize,
    /// Residual bound for the mean-index regression.
    pub slope_tol: f64,
    /// Extra slack added to the mean-index consistency bound `2n/m_max`.
    pub fit_tol: f64,
    /// Orbit closure tolerance (relative to body diameter).
    pub orbit_tol: f64,
    /// Allowed deviation of `H_α` from 1 along integrated orbits.
    pub energy_tol: f64,
    /// Pre-projection energy drift that aborts the integrator.
    pub drift_cap: f64,
    /// Antipodal-match tolerance for symmetric-orbit detection (relative).
    pub sym_tol: f64,
    /// Minimal orbit-to-negated-orbit distance for a non-symmetric verdict.
    pub sym_gap: f64,
    /// Points with norm below this reject gradient evaluation of `H_α`.
    pub x_min: f64,
    /// Fourier truncation for the dual-action solver.
    pub n_modes: usize,
    /// Gradient norm at which a loop counts as critical.
    pub g_tol: f64,
    /// Eigenvalue band treated as zero when counting Morse data.
    pub eig_tol: f64,
    /// Largest truncation tried while stabilizing Morse counts.
    pub k_max: usize,
    /// Relative action agreement + trajectory distance for duplicate orbits.
    pub dup_tol: f64,
    /// Pairwise relative spread allowed in the mean-index/action ratio law.
    pub ratio_tol: f64,
    /// Φ below this with a stalled gradient raises a Palais–Smale warning.
    pub phi_floor: f64,
    /// Integrator relative error target per step.
    pub ode_rel_tol: f64,
    /// Integrator absolute error target per step.
    pub ode_abs_tol: f64,
    /// Accepted steps between re-symplectifications of the variational flow.
    pub resympl_cadence: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            tol_sympl: 1e-9,
            circle_tol: 1e-8,
            tol_rank: 1e-8,
            cluster_gap: 1e-6,
            tol_deg: 1e-9,
            tol_co: 1e-12,
            eps_co: 1e-5,
            max_depth: 48,
            step_cap: 0.5,
            q_max: 64,
            rat_tol: 1e-9,
            eps_split: 1e-4,
            m_max: 32,
            slope_tol: 0.75,
            fit_tol: 0.5,
            orbit_tol: 1e-6,
            energy_tol: 1e-9,
            drift_cap: 1e-5,
            sym_tol: 1e-6,
            sym_gap: 1e-3,
            x_min: 1e-10,
            n_modes: 64,
            g_tol: 1e-8,
            eig_tol: 1e-9,
            k_max: 96,
            dup_tol: 1e-4,
            ratio_tol: 1e-4,
            phi_floor: -1e6,
            ode_rel_tol: 1e-11,
            ode_abs_tol: 1e-12,
            resympl_cadence: 16,
        }
    }
}
