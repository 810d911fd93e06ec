//! End-to-end construction: choose α, build u = 1/t + Φ + T³w, extract the
//! Cauchy data on {t = α}, time-reverse, report the ε-budget, and extract
//! Dirichlet boundary traces.
//!
//! Conventions fixed here (the thresholds depend on them):
//! - pair norms are sums, ‖u‖_{s₀} + ‖u_t‖_{s₀-1};
//! - the ε split is exact part < ε/4, Φ part < ε/4, tail part < ε/2;
//! - budget norms are taken over the full periodic box, which dominates any
//!   sub-domain restriction, so a passing budget stays valid on Ω.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expansion::{compute_coefficients, ExpansionCoefficients};
use crate::grid::{Field, GridSpec};
use crate::integrator::{integrate, IntegratorConfig, ReducedTrajectory};
use crate::reduced::ReducedSystem;
use crate::spectral::{cauchy_pair_norm, sobolev_norm};
use crate::surface::{build_surface, zero_set_indicator, BlowupSurface, SurfaceDescriptor};
use crate::verifier::{march_wave, Boundary, VerifierConfig};

/// Descriptor of the singularity datum w₀ = θ Z(X), Z the standard bump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatumSpec {
    pub theta: f64,
    pub center: Vec<f64>,
    pub width: f64,
}

impl DatumSpec {
    pub fn zero(n: usize) -> Self {
        DatumSpec {
            theta: 0.0,
            center: vec![0.0; n],
            width: 1.0,
        }
    }

    pub fn with_theta(&self, theta: f64) -> Self {
        DatumSpec {
            theta,
            ..self.clone()
        }
    }

    /// Sample θ·Z on the grid; Z = exp(1 - 1/(1-ρ²)) inside the periodic
    /// ball ρ < 1, zero outside, with ρ the scaled distance to the center.
    pub fn sample(&self, grid: &GridSpec) -> Field {
        Field::from_fn(grid, |x| {
            let mut r2 = 0.0;
            for a in 0..grid.n {
                let mut d = x[a] - self.center.get(a).copied().unwrap_or(0.0);
                d -= (d / grid.length[a]).round() * grid.length[a];
                r2 += (d / self.width) * (d / self.width);
            }
            if r2 >= 1.0 - 1e-12 {
                0.0
            } else {
                self.theta * (1.0 - 1.0 / (1.0 - r2)).exp()
            }
        })
    }
}

/// Sub-domain Ω = (left, right) of the periodic box (1-D).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmegaSpec {
    pub left: f64,
    pub right: f64,
}

impl OmegaSpec {
    /// Nearest grid indices of the two boundary points.
    pub fn boundary_indices(&self, grid: &GridSpec) -> (usize, usize) {
        (
            grid.nearest_index(0, self.left),
            grid.nearest_index(0, self.right),
        )
    }

    pub fn strictly_inside_box(&self, grid: &GridSpec) -> bool {
        let lo = grid.origin[0];
        let hi = grid.origin[0] + grid.length[0];
        self.left > lo + grid.dx(0) && self.right < hi - grid.dx(0) && self.left < self.right
    }

    /// Smooth plateau cutoff: 1 on [left, right], 0 beyond a transition band
    /// of the given width, C-infinity in between.
    pub fn cutoff(&self, grid: &GridSpec, transition: f64) -> Field {
        let smooth = |t: f64| -> f64 {
            // standard C^inf step on [0, 1]
            if t <= 0.0 {
                0.0
            } else if t >= 1.0 {
                1.0
            } else {
                let f = (-1.0 / t).exp();
                let g = (-1.0 / (1.0 - t)).exp();
                f / (f + g)
            }
        };
        Field::from_fn(grid, |x| {
            let up = smooth((x[0] - (self.left - transition)) / transition);
            let down = smooth(((self.right + transition) - x[0]) / transition);
            up * down
        })
    }
}

/// Smallest α > 2 on a 0.5-step scan giving the exact solution 1/t Cauchy
/// data norm below ε/4. The data of 1/t are the constants (1/α, -1/α²), so
/// the norm is √|box|(1/α + 1/α²) at every Sobolev index; `_s0` is kept for
/// signature parity.
pub fn choose_alpha(epsilon: f64, _s0: f64, grid: &GridSpec) -> f64 {
    let root_v = grid.volume().sqrt();
    let mut alpha = 2.5;
    loop {
        if root_v * (1.0 / alpha + 1.0 / (alpha * alpha)) < epsilon / 4.0 {
            return alpha;
        }
        alpha += 0.5;
    }
}

/// Slice of the constructed solution at t = α with its budget decomposition
/// and the underlying reduced trajectory.
#[derive(Debug)]
pub struct SliceData {
    pub alpha: f64,
    pub s0: f64,
    pub u: Field,
    pub ut: Field,
    pub norm_exact: f64,
    pub norm_phi: f64,
    pub norm_tail: f64,
    pub trajectory: ReducedTrajectory,
}

/// Build u = 1/t + Φ + T³w on the slice {t = α}.
///
/// Per grid point, T(x) = α - ψ(x); the reduced trajectory is sampled at
/// T(x) and the profile added: u = E_u(x, T(x)) + T³w, u_t = ∂_T E_u +
/// T²w₍₀₎ (∂_t at fixed x equals ∂_T at fixed X under the change of
/// variables).
pub fn construct_solution(
    s: &BlowupSurface,
    c: &ExpansionCoefficients,
    w0_datum: &Field,
    alpha: f64,
    s0: f64,
    cfg: &IntegratorConfig,
) -> Result<SliceData> {
    if alpha <= 2.0 {
        return Err(Error::InvalidConfig(format!("alpha must exceed 2, got {alpha}")));
    }
    if s.max_psi() > 0.0 {
        return Err(Error::ShapeViolation(format!(
            "pipeline requires psi <= 0 (max = {:.3e})",
            s.max_psi()
        )));
    }
    if cfg.b <= alpha + 1.0 {
        return Err(Error::InvalidConfig(format!(
            "slab end b = {} must exceed alpha + 1 = {}",
            cfg.b,
            alpha + 1.0
        )));
    }
    let needed = alpha - s.psi.min();
    if cfg.b < needed {
        return Err(Error::TrajectoryTooShort {
            needed,
            have: cfg.b,
        });
    }

    let system = ReducedSystem::new(s, c)?;
    let trajectory = integrate(&system, w0_datum, cfg)?;

    let grid = s.grid;
    let total = grid.total_points();
    let mut u = Field::zeros(&grid);
    let mut ut = Field::zeros(&grid);
    let mut phi_u = Field::zeros(&grid);
    let mut phi_ut = Field::zeros(&grid);
    let mut tail_u = Field::zeros(&grid);
    let mut tail_ut = Field::zeros(&grid);
    for i in 0..total {
        let t_off = alpha - s.psi.data[i];
        let (w, w0c) = trajectory.sample_point(t_off, i)?;
        let eu = c.eu_at(i, t_off);
        let eut = c.eu_t_at(i, t_off);
        tail_u.data[i] = t_off.powi(3) * w;
        tail_ut.data[i] = t_off * t_off * w0c;
        phi_u.data[i] = eu - 1.0 / alpha;
        phi_ut.data[i] = eut + 1.0 / (alpha * alpha);
        u.data[i] = eu + tail_u.data[i];
        ut.data[i] = eut + tail_ut.data[i];
    }

    let exact_u = Field::constant(&grid, 1.0 / alpha);
    let exact_ut = Field::constant(&grid, -1.0 / (alpha * alpha));
    let norm_exact = cauchy_pair_norm(&exact_u, &exact_ut, s0);
    let norm_phi = cauchy_pair_norm(&phi_u, &phi_ut, s0);
    let norm_tail = cauchy_pair_norm(&tail_u, &tail_ut, s0);

    Ok(SliceData {
        alpha,
        s0,
        u,
        ut,
        norm_exact,
        norm_phi,
        norm_tail,
        trajectory,
    })
}

/// The ε-budget of a Cauchy data record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ControlBudget {
    pub epsilon: f64,
    pub alpha: f64,
    pub norm_exact: f64,
    pub norm_phi: f64,
    pub norm_tail: f64,
    pub total: f64,
    pub pass: bool,
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Provenance {
    pub surface: SurfaceDescriptor,
    pub datum: DatumSpec,
    pub alpha: f64,
    pub grid: GridSpec,
    pub integrator: IntegratorConfig,
    pub s0: f64,
    pub sigma: f64,
}

/// Cauchy data at t = 0 after time reversal, with budget bookkeeping.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CauchyDataRecord {
    /// Slice time after reversal (always 0).
    pub t: f64,
    pub u: Field,
    pub ut: Field,
    pub s0: f64,
    pub norm_exact: f64,
    pub norm_phi: f64,
    pub norm_tail: f64,
    pub budget: Option<ControlBudget>,
    pub provenance: Provenance,
}

impl CauchyDataRecord {
    /// Predicted blow-up time field of the forward evolution: t_b(x) = α - ψ(x).
    pub fn predicted_blowup(&self, psi: &Field) -> Field {
        psi.map(|p| self.provenance.alpha - p)
    }
}

/// Time reversal u(t) ↦ u(α - t): the slice data (u, u_t) at t = α become
/// Cauchy data (u, -u_t) at t = 0, and the solution now blows up on
/// t = α - ψ(x) ≥ α, first on K.
pub fn time_reverse(slice: &SliceData, provenance: Provenance) -> CauchyDataRecord {
    CauchyDataRecord {
        t: 0.0,
        u: slice.u.clone(),
        ut: slice.ut.scaled(-1.0),
        s0: slice.s0,
        norm_exact: slice.norm_exact,
        norm_phi: slice.norm_phi,
        norm_tail: slice.norm_tail,
        budget: None,
        provenance,
    }
}

/// Assemble the ε-budget: components against the ε/4 + ε/4 + ε/2 split, and
/// the total (recomputed from the fields) against their sum.
pub fn budget_report(record: &CauchyDataRecord, epsilon: f64) -> Result<ControlBudget> {
    let total = cauchy_pair_norm(&record.u, &record.ut, record.s0);
    let sum = record.norm_exact + record.norm_phi + record.norm_tail;
    if total > sum + 1e-12 {
        return Err(Error::Internal(format!(
            "triangle inequality violated: total {total} > components {sum}"
        )));
    }
    let pass = record.norm_exact < epsilon / 4.0
        && record.norm_phi < epsilon / 4.0
        && record.norm_tail < epsilon / 2.0;
    Ok(ControlBudget {
        epsilon,
        alpha: record.provenance.alpha,
        norm_exact: record.norm_exact,
        norm_phi: record.norm_phi,
        norm_tail: record.norm_tail,
        total,
        pass,
    })
}

/// Dirichlet data sampled on ∂Ω.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundaryTraceRecord {
    pub omega: OmegaSpec,
    /// Coordinates of the boundary sample points.
    pub boundary_points: Vec<f64>,
    /// Uniform sample times, ending strictly before the first blow-up.
    pub times: Vec<f64>,
    /// values[p][k] = u at boundary point p, time k.
    pub values: Vec<Vec<f64>>,
}

/// Run the direct solver from the record and sample u on ∂Ω at uniform
/// times up to just below the first blow-up.
///
/// Configuration checks: Ω strictly inside the box; when K is point-like it
/// must sit at least three cells inside Ω. At runtime, a blow-up within
/// three cells of ∂Ω (or a boundary sample beyond the top threshold) is the
/// BlowupReachedBoundary error.
pub fn extract_boundary_trace(
    record: &CauchyDataRecord,
    s: &BlowupSurface,
    omega: &OmegaSpec,
    vcfg: &VerifierConfig,
    trace_dt: f64,
) -> Result<BoundaryTraceRecord> {
    let grid = record.u.grid;
    if grid.n != 1 {
        return Err(Error::InvalidConfig("boundary traces are one-dimensional".into()));
    }
    if !omega.strictly_inside_box(&grid) {
        return Err(Error::InvalidConfig(format!(
            "omega ({}, {}) must lie strictly inside the box",
            omega.left, omega.right
        )));
    }
    let (i_lo, i_hi) = omega.boundary_indices(&grid);
    let nx = grid.points[0];
    let ring_dist = |a: usize, b: usize| -> usize {
        let d = (a as i64 - b as i64).unsigned_abs() as usize;
        d.min(nx - d)
    };

    let k_mask = zero_set_indicator(s, 1e-9)?;
    let k_count = k_mask.iter().filter(|&&b| b).count();
    if k_count * 2 <= grid.total_points() {
        // point-like K: enforce the finite-speed margin statically
        for (i, &in_k) in k_mask.iter().enumerate() {
            if !in_k {
                continue;
            }
            let inside = {
                // interior of omega in index terms (no wrap across the cut)
                i > i_lo && i < i_hi
            };
            if !inside || ring_dist(i, i_lo) < 3 || ring_dist(i, i_hi) < 3 {
                return Err(Error::BlowupReachedBoundary { t: 0.0 });
            }
        }
    }

    let mut times = Vec::new();
    let mut lo_vals = Vec::new();
    let mut hi_vals = Vec::new();
    let map = march_wave(
        &record.u,
        &record.ut,
        2.0,
        vcfg,
        Boundary::Periodic,
        |_, t, f| {
            times.push(t);
            lo_vals.push(f.data[i_lo]);
            hi_vals.push(f.data[i_hi]);
        },
    )?;

    let t_first = map
        .t_raw
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
        .min(vcfg.t_max);
    if let Some(i_min) = map.argmin() {
        if ring_dist(i_min, i_lo) <= 3 || ring_dist(i_min, i_hi) <= 3 {
            return Err(Error::BlowupReachedBoundary { t: map.t_blow[i_min] });
        }
    }

    // uniform subsampling strictly below the first blow-up
    let dt = if times.len() > 1 { times[1] - times[0] } else { trace_dt };
    let stride = (trace_dt / dt).round().max(1.0) as usize;
    let mut out_times = Vec::new();
    let mut out_lo = Vec::new();
    let mut out_hi = Vec::new();
    for k in (0..times.len()).step_by(stride) {
        if times[k] >= t_first {
            break;
        }
        let guard = *vcfg.ladder.last().unwrap();
        if lo_vals[k].abs() >= guard || hi_vals[k].abs() >= guard {
            return Err(Error::BlowupReachedBoundary { t: times[k] });
        }
        out_times.push(times[k]);
        out_lo.push(lo_vals[k]);
        out_hi.push(hi_vals[k]);
    }

    Ok(BoundaryTraceRecord {
        omega: omega.clone(),
        boundary_points: vec![grid.coord(0, i_lo), grid.coord(0, i_hi)],
        times: out_times,
        values: vec![out_lo, out_hi],
    })
}

/// One cell of the (λ, θ) sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub theta: f64,
    pub alpha: f64,
    pub norm_exact: f64,
    pub norm_phi: f64,
    pub norm_tail: f64,
    pub total: f64,
    pub pass: bool,
    pub error: Option<String>,
}

/// Sweep the singularity data (λψ, θZ) over the given grids, one full
/// pipeline run per cell. Cell failures become rows with an error tag and
/// never abort the sweep. Rows are sorted by total norm, failures last.
pub fn sweep(
    base: &SurfaceDescriptor,
    lambdas: &[f64],
    thetas: &[f64],
    datum: &DatumSpec,
    epsilon: f64,
    grid: &GridSpec,
    s0: f64,
    cfg: &IntegratorConfig,
) -> Vec<SweepRow> {
    let alpha = choose_alpha(epsilon, s0, grid);
    let cells: Vec<(f64, f64)> = lambdas
        .iter()
        .flat_map(|&l| thetas.iter().map(move |&t| (l, t)))
        .collect();

    let mut rows: Vec<SweepRow> = cells
        .par_iter()
        .map(|&(lambda, theta)| {
            let run = || -> Result<SweepRow> {
                let surf = build_surface(&base.scaled(lambda), grid)?;
                let coeffs = compute_coefficients(&surf)?;
                let w0 = datum.with_theta(theta).sample(grid);
                let slice = construct_solution(&surf, &coeffs, &w0, alpha, s0, cfg)?;
                let record = time_reverse(
                    &slice,
                    Provenance {
                        surface: base.scaled(lambda),
                        datum: datum.with_theta(theta),
                        alpha,
                        grid: *grid,
                        integrator: cfg.clone(),
                        s0,
                        sigma: 0.0,
                    },
                );
                let budget = budget_report(&record, epsilon)?;
                Ok(SweepRow {
                    lambda,
                    theta,
                    alpha,
                    norm_exact: budget.norm_exact,
                    norm_phi: budget.norm_phi,
                    norm_tail: budget.norm_tail,
                    total: budget.total,
                    pass: budget.pass,
                    error: None,
                })
            };
            run().unwrap_or_else(|e| SweepRow {
                lambda,
                theta,
                alpha,
                norm_exact: f64::NAN,
                norm_phi: f64::NAN,
                norm_tail: f64::NAN,
                total: f64::NAN,
                pass: false,
                error: Some(e.to_string()),
            })
        })
        .collect();

    rows.sort_by(|a, b| match (a.error.is_some(), b.error.is_some()) {
        (false, false) => a.total.total_cmp(&b.total),
        (true, true) => (a.lambda, a.theta).partial_cmp(&(b.lambda, b.theta)).unwrap(),
        (false, true) => std::cmp::Ordering::Less,
        (true, false) => std::cmp::Ordering::Greater,
    });
    rows
}

/// For each λ with at least one clean row, the θ minimizing the total norm.
pub fn argmin_theta_by_lambda(rows: &[SweepRow]) -> Vec<(f64, f64, f64)> {
    let mut lambdas: Vec<f64> = rows
        .iter()
        .filter(|r| r.error.is_none())
        .map(|r| r.lambda)
        .collect();
    lambdas.sort_by(|a, b| a.total_cmp(b));
    lambdas.dedup();
    lambdas
        .into_iter()
        .filter_map(|l| {
            rows.iter()
                .filter(|r| r.error.is_none() && r.lambda == l)
                .min_by(|a, b| a.total.total_cmp(&b.total))
                .map(|r| (l, r.theta, r.total))
        })
        .collect()
}

/// ‖ψ‖_σ of the surface, the smallness measure of the singularity data.
pub fn psi_norm(s: &BlowupSurface, sigma: f64) -> f64 {
    sobolev_norm(&s.psi, sigma)
}
