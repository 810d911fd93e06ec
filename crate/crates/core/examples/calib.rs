// calibration probe (not part of the repo)
use blowup_core::expansion::compute_coefficients;
use blowup_core::grid::{Field, GridSpec};
use blowup_core::integrator::IntegratorConfig;
use blowup_core::pipeline::*;
use blowup_core::surface::{build_surface, Family1d, SurfaceDescriptor};
use blowup_core::spectral::cauchy_pair_norm;

fn main() {
    let g = GridSpec::line_centered(256).unwrap();
    let cfg = IntegratorConfig { dtau_max: 4e-3, checkpoint_dtau: 8e-3, ..Default::default() };
    println!("lambda  feasible  norm_phi  norm_tail  sup_w_end  psi_sigma8");
    for lambda in [0.01, 0.02, 0.04, 0.05, 0.06, 0.07, 0.08, 0.09, 0.1] {
        let s = build_surface(&SurfaceDescriptor::one_d(Family1d::CosineWell { lambda }), &g).unwrap();
        let c = compute_coefficients(&s).unwrap();
        let r = construct_solution(&s, &c, &Field::zeros(&g), 11.0, 2.0, &cfg);
        match r {
            Ok(slice) => {
                let supw = slice.trajectory.checkpoints.last().unwrap().state.sup_norm();
                println!("{lambda:6.3} yes {:.6e} {:.6e} {:.3e} {:.4e}", slice.norm_phi, slice.norm_tail, supw, s.hs_norm(8.0));
            }
            Err(e) => println!("{lambda:6.3} NO: {e}"),
        }
    }
    // theta direction at lambda = 0.05
    let lambda = 0.05;
    let s = build_surface(&SurfaceDescriptor::one_d(Family1d::CosineWell { lambda }), &g).unwrap();
    let c = compute_coefficients(&s).unwrap();
    let datum = DatumSpec { theta: 1.0, center: vec![std::f64::consts::PI/2.0], width: 1.2 };
    println!("theta  feasible  norm_tail  total");
    for theta in [0.0, 1e-6, 1e-5, 3e-5, 1e-4, 3e-4, 1e-3] {
        let w0 = datum.with_theta(theta).sample(&g);
        match construct_solution(&s, &c, &w0, 11.0, 2.0, &cfg) {
            Ok(sl) => {
                let total = cauchy_pair_norm(&sl.u, &sl.ut, 2.0);
                println!("{theta:9.1e} yes {:.6e} {:.6e}", sl.norm_tail, total);
            }
            Err(e) => println!("{theta:9.1e} NO: {e}"),
        }
    }
}
