//! The prescribed blow-up surface t = ψ(x) and its derived geometry.
//!
//! ψ is always supplied through an analytic generator (a named family with
//! numeric parameters) so that every derivative field through order four is
//! evaluated exactly via jet arithmetic, never by differencing. In two
//! dimensions generators are separable sums ψ(x, y) = f(x) + g(y), so all
//! mixed partials vanish and per-axis jets describe the full derivative set.
//!
//! Admissibility: sup|∇ψ| < 1 and sup|ψ| < 1 (both strict, checked on the
//! grid). γ = 1 - |∇ψ|² is then bounded away from zero, which is what makes
//! the surface spacelike and the construction well-posed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec};
use crate::jet::Jet;
use crate::spectral;

/// One-axis analytic family. All members vanish at their distinguished zero
/// point and are nonpositive for nonnegative parameters, matching the
/// pipeline convention that ψ ≤ 0 with zero set K.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family1d {
    /// ψ ≡ 0.
    Zero,
    /// -λ (1 - cos x); zero set {x = 0}.
    CosineWell { lambda: f64 },
    /// -Σ_k a_k (1 - cos(k x)) with k = 1, 2, …; nonpositive when all a_k ≥ 0.
    CosineSeries { amps: Vec<f64> },
    /// -a · B((x - center)/width) with B the standard C-infinity bump
    /// exp(1 - 1/(1 - ρ²)) on |ρ| < 1, zero outside.
    Bump { amplitude: f64, center: f64, width: f64 },
}

impl Family1d {
    /// Value and derivatives through order four at `x` (periodic in `length`).
    pub fn eval_jet(&self, x: f64, length: f64) -> Jet {
        match self {
            Family1d::Zero => Jet::constant(0.0),
            Family1d::CosineWell { lambda } => {
                let c = Jet::variable(x).cos();
                // -lambda (1 - cos x)
                Jet::constant(-lambda).mul(&Jet::constant(1.0).sub(&c))
            }
            Family1d::CosineSeries { amps } => {
                let mut acc = Jet::constant(0.0);
                for (i, &a) in amps.iter().enumerate() {
                    let k = (i + 1) as f64;
                    let c = Jet::variable(x).scale(k).cos();
                    acc = acc.sub(&Jet::constant(1.0).sub(&c).scale(a));
                }
                acc
            }
            Family1d::Bump {
                amplitude,
                center,
                width,
            } => {
                // wrap x - center into [-length/2, length/2)
                let mut dx = x - center;
                dx -= (dx / length).round() * length;
                let rho = dx / width;
                if rho.abs() >= 1.0 - 1e-12 {
                    return Jet::constant(0.0);
                }
                let r = Jet::variable(dx).scale(1.0 / width);
                let r2 = r.mul(&r);
                let one_minus = Jet::constant(1.0).sub(&r2);
                let arg = Jet::constant(1.0).sub(&one_minus.recip());
                arg.exp().scale(-amplitude)
            }
        }
    }

    /// Scale the family amplitude by `lambda` (the map ψ ↦ λψ).
    pub fn scaled(&self, lambda: f64) -> Family1d {
        match self {
            Family1d::Zero => Family1d::Zero,
            Family1d::CosineWell { lambda: l } => Family1d::CosineWell { lambda: l * lambda },
            Family1d::CosineSeries { amps } => Family1d::CosineSeries {
                amps: amps.iter().map(|a| a * lambda).collect(),
            },
            Family1d::Bump {
                amplitude,
                center,
                width,
            } => Family1d::Bump {
                amplitude: amplitude * lambda,
                center: *center,
                width: *width,
            },
        }
    }
}

/// Analytic generator for ψ: one family per axis, summed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceDescriptor {
    pub axes: Vec<Family1d>,
}

impl SurfaceDescriptor {
    pub fn one_d(family: Family1d) -> Self {
        SurfaceDescriptor { axes: vec![family] }
    }

    pub fn zero(n: usize) -> Self {
        SurfaceDescriptor {
            axes: vec![Family1d::Zero; n],
        }
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        SurfaceDescriptor {
            axes: self.axes.iter().map(|f| f.scaled(lambda)).collect(),
        }
    }
}

/// ψ sampled on the grid together with exact derivative fields and γ.
#[derive(Debug, Clone)]
pub struct BlowupSurface {
    pub grid: GridSpec,
    pub descriptor: SurfaceDescriptor,
    pub psi: Field,
    /// ∂ψ/∂x_a for the active axes.
    pub grad_psi: Vec<Field>,
    /// Δψ.
    pub lap_psi: Field,
    /// Pure per-axis derivatives ψ^{(k)} for k = 1..4 (mixed partials vanish).
    pub axis_derivs: Vec<[Field; 4]>,
    /// γ = 1 - |∇ψ|².
    pub gamma: Field,
}

impl BlowupSurface {
    pub fn min_gamma(&self) -> f64 {
        self.gamma.min()
    }

    pub fn sup_grad(&self) -> f64 {
        let mut sup: f64 = 0.0;
        for i in 0..self.grid.total_points() {
            let mut g2 = 0.0;
            for gp in &self.grad_psi {
                g2 += gp.data[i] * gp.data[i];
            }
            sup = sup.max(g2.sqrt());
        }
        sup
    }

    /// ‖ψ‖ in the discrete H^σ norm.
    pub fn hs_norm(&self, sigma: f64) -> f64 {
        spectral::sobolev_norm(&self.psi, sigma)
    }

    /// Largest ψ value on the grid; the pipeline requires this ≤ 0.
    pub fn max_psi(&self) -> f64 {
        self.psi.max()
    }
}

/// Sample the generator and validate the standing assumptions.
pub fn build_surface(descriptor: &SurfaceDescriptor, grid: &GridSpec) -> Result<BlowupSurface> {
    if descriptor.axes.len() != grid.n {
        return Err(Error::InvalidConfig(format!(
            "surface descriptor has {} axes, grid has {}",
            descriptor.axes.len(),
            grid.n
        )));
    }

    // per-axis 1-D jet lines
    let mut lines: Vec<Vec<Jet>> = Vec::new();
    for (a, fam) in descriptor.axes.iter().enumerate() {
        let line: Vec<Jet> = (0..grid.points[a])
            .map(|i| fam.eval_jet(grid.coord(a, i), grid.length[a]))
            .collect();
        lines.push(line);
    }

    let total = grid.total_points();
    let nx = grid.points[0];
    let jet_at = |idx: usize, axis: usize| -> &Jet {
        let (ix, iy) = (idx % nx, idx / nx);
        &lines[axis][[ix, iy][axis]]
    };

    let mut psi = Field::zeros(grid);
    for idx in 0..total {
        let mut v = 0.0;
        for a in 0..grid.n {
            v += jet_at(idx, a).d[0];
        }
        psi.data[idx] = v;
    }

    let mut grad_psi = Vec::new();
    let mut axis_derivs = Vec::new();
    for a in 0..grid.n {
        let mut d = [
            Field::zeros(grid),
            Field::zeros(grid),
            Field::zeros(grid),
            Field::zeros(grid),
        ];
        for idx in 0..total {
            let j = jet_at(idx, a);
            for k in 0..4 {
                d[k].data[idx] = j.d[k + 1];
            }
        }
        grad_psi.push(d[0].clone());
        axis_derivs.push(d);
    }

    let mut lap_psi = Field::zeros(grid);
    for a in 0..grid.n {
        lap_psi.axpy(1.0, &axis_derivs[a][1]);
    }

    let mut gamma = Field::constant(grid, 1.0);
    for idx in 0..total {
        let mut g2 = 0.0;
        for gp in &grad_psi {
            g2 += gp.data[idx] * gp.data[idx];
        }
        gamma.data[idx] = 1.0 - g2;
    }

    let s = BlowupSurface {
        grid: *grid,
        descriptor: descriptor.clone(),
        psi,
        grad_psi,
        lap_psi,
        axis_derivs,
        gamma,
    };

    let sup_grad = s.sup_grad();
    if sup_grad >= 1.0 {
        return Err(Error::AssumptionViolation(format!(
            "sup |grad psi| = {sup_grad:.6} >= 1"
        )));
    }
    let sup_psi = s.psi.sup_norm();
    if sup_psi >= 1.0 {
        return Err(Error::AssumptionViolation(format!(
            "sup |psi| = {sup_psi:.6} >= 1"
        )));
    }
    Ok(s)
}

/// The surface generated by λψ. λ = 0 is allowed and yields ψ ≡ 0.
pub fn scale_surface(s: &BlowupSurface, lambda: f64) -> Result<BlowupSurface> {
    if lambda < 0.0 {
        return Err(Error::InvalidConfig(format!("scale factor must be >= 0, got {lambda}")));
    }
    build_surface(&s.descriptor.scaled(lambda), &s.grid)
}

/// Boolean mask of the discrete zero set K = {|ψ| ≤ tol}.
///
/// Enforces the nonpositivity convention: ψ must not take positive values.
pub fn zero_set_indicator(s: &BlowupSurface, tol: f64) -> Result<Vec<bool>> {
    let max_psi = s.max_psi();
    if max_psi > 0.0 {
        return Err(Error::ShapeViolation(format!(
            "psi takes positive values (max = {max_psi:.3e}); the zero-set convention needs psi <= 0"
        )));
    }
    Ok(s.psi.data.iter().map(|&v| v.abs() <= tol).collect())
}
