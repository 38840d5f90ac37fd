//! Numerical thresholds, gathered in one serializable record.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FloquetConfig {
    /// Local error tolerance (relative and absolute) of the integrator.
    pub tol: f64,
    /// `|φ(z, π)|` below this is treated as a Dirichlet point.
    pub dirichlet_tol: f64,
    /// `|√(1 - Δ₊²)|` below this is treated as lying on the spectrum.
    pub near_spectrum_tol: f64,
    /// `|ρ₊| - 1` within this counts as a tie for branch selection.
    pub branch_tie_tol: f64,
}

impl Default for FloquetConfig {
    fn default() -> Self {
        FloquetConfig { tol: 1e-12, dirichlet_tol: 1e-12, near_spectrum_tol: 1e-10, branch_tie_tol: 1e-9 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpectraConfig {
    /// Roots closer than `sep_rel * sqrt(1 + |z|)` are reported as one cluster.
    pub sep_rel: f64,
    /// Newton stopping tolerance, relative to `1 + |z|`.
    pub newton_tol: f64,
    /// Relative tolerance of the contour integrals.
    pub contour_rel: f64,
    pub max_perturbations: usize,
    pub max_depth: usize,
    /// Margin added around the semi-strip.
    pub margin: f64,
}

impl Default for SpectraConfig {
    fn default() -> Self {
        SpectraConfig {
            sep_rel: 2e-6,
            newton_tol: 1e-14,
            contour_rel: 1e-7,
            max_perturbations: 5,
            max_depth: 60,
            margin: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArcConfig {
    /// Largest step in `t`.
    pub h_max: f64,
    /// Singular encounter when `|Δ₊•| < eps_sing * (1 + |λ|)`.
    pub eps_sing: f64,
    /// Corrector residual target for `|Δ₊(λ) - cos t|`.
    pub corrector_tol: f64,
    pub max_halvings: usize,
    /// Offset in `t` used to leave a double point.
    pub t_offset: f64,
}

impl Default for ArcConfig {
    fn default() -> Self {
        ArcConfig {
            h_max: std::f64::consts::PI / 64.0,
            eps_sing: 1e-6,
            corrector_tol: 1e-12,
            max_halvings: 3,
            t_offset: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CriterionConfig {
    /// A critical point is on the spectrum when its distance is below `on_spectrum_rel * (1 + |δ|)`.
    pub on_spectrum_rel: f64,
    /// Zero test for the quadruple-zero pattern, relative to `1 + |δ|`.
    pub l52_tol: f64,
    /// Lower bound on `|Δ₊••|` in the same pattern.
    pub l52_ddot_min: f64,
    /// Removability radius `r = removability_rel * (1 + |δ|)`.
    pub removability_rel: f64,
    /// Pole-order estimates below this count as removable.
    pub removability_order: f64,
    /// Singular values below `rank_rel * ‖M‖` count as zero.
    pub rank_rel: f64,
    /// Growth factor across octaves that flags a distance ratio.
    pub l60_growth: f64,
    /// Window growth factor per octave above which a ratio sup is called superlinear.
    pub superlinear_growth: f64,
    /// Relative slack when comparing successive octave increments.
    pub trend_slack: f64,
    /// `t`-grid size for the fiber multiplicity check.
    pub fiber_t_points: usize,
    /// Exponent above which a ratio is said to blow up at a critical point.
    pub blowup_exponent: f64,
}

impl Default for CriterionConfig {
    fn default() -> Self {
        CriterionConfig {
            on_spectrum_rel: 1e-6,
            l52_tol: 1e-6,
            l52_ddot_min: 1e-8,
            removability_rel: 1e-3,
            removability_order: 0.5,
            rank_rel: 1e-8,
            l60_growth: 10.0,
            superlinear_growth: 2.0,
            trend_slack: 0.05,
            fiber_t_points: 16,
            blowup_exponent: 0.25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProjectionConfig {
    /// Grid points per π-cell.
    pub points_per_cell: usize,
    /// Gauss–Legendre order per arc panel.
    pub arc_order: usize,
    /// Maximum panel width in `t`.
    pub arc_panel: f64,
    /// The resolvent needs `1 - |ρ₊(z)|` at least this large.
    pub resolvent_gap: f64,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        ProjectionConfig { points_per_cell: 256, arc_order: 8, arc_panel: std::f64::consts::PI / 32.0, resolvent_gap: 1e-6 }
    }
}

/// Every tunable threshold in the library.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub floquet: FloquetConfig,
    pub spectra: SpectraConfig,
    pub arcs: ArcConfig,
    pub criterion: CriterionConfig,
    pub projection: ProjectionConfig,
}
