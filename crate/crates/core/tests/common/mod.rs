//! Shared test utilities: an adaptive Dormand-Prince 5(4) integrator and the
//! scalar reference solution of the homogeneous reduced equation.
//!
//! This oracle is deliberately independent of the production path: different
//! scheme (embedded adaptive pair vs fixed RK4), different variables (a
//! scalar second-order ODE vs the first-order field system), no shared code.

/// One adaptive Dormand-Prince 5(4) solve of y' = f(tau, y).
pub fn dp54<const N: usize>(
    f: impl Fn(f64, &[f64; N]) -> [f64; N],
    mut y: [f64; N],
    tau0: f64,
    tau1: f64,
    tol: f64,
) -> [f64; N] {
    const A21: f64 = 1.0 / 5.0;
    const A31: f64 = 3.0 / 40.0;
    const A32: f64 = 9.0 / 40.0;
    const A41: f64 = 44.0 / 45.0;
    const A42: f64 = -56.0 / 15.0;
    const A43: f64 = 32.0 / 9.0;
    const A51: f64 = 19372.0 / 6561.0;
    const A52: f64 = -25360.0 / 2187.0;
    const A53: f64 = 64448.0 / 6561.0;
    const A54: f64 = -212.0 / 729.0;
    const A61: f64 = 9017.0 / 3168.0;
    const A62: f64 = -355.0 / 33.0;
    const A63: f64 = 46732.0 / 5247.0;
    const A64: f64 = 49.0 / 176.0;
    const A65: f64 = -5103.0 / 18656.0;
    const B1: f64 = 35.0 / 384.0;
    const B3: f64 = 500.0 / 1113.0;
    const B4: f64 = 125.0 / 192.0;
    const B5: f64 = -2187.0 / 6784.0;
    const B6: f64 = 11.0 / 84.0;
    const E1: f64 = 71.0 / 57600.0;
    const E3: f64 = -71.0 / 16695.0;
    const E4: f64 = 71.0 / 1920.0;
    const E5: f64 = -17253.0 / 339200.0;
    const E6: f64 = 22.0 / 525.0;
    const E7: f64 = -1.0 / 40.0;

    let mut tau = tau0;
    let mut h = (tau1 - tau0).abs().min(1e-2) * (tau1 - tau0).signum();
    let add = |y: &[f64; N], parts: &[(f64, &[f64; N])]| {
        let mut out = *y;
        for (c, k) in parts {
            for i in 0..N {
                out[i] += c * k[i];
            }
        }
        out
    };

    while (tau1 - tau) * h.signum() > 1e-14 {
        if (tau + h - tau1) * h.signum() > 0.0 {
            h = tau1 - tau;
        }
        let k1 = f(tau, &y);
        let k2 = f(tau + 0.2 * h, &add(&y, &[(A21 * h, &k1)]));
        let k3 = f(tau + 0.3 * h, &add(&y, &[(A31 * h, &k1), (A32 * h, &k2)]));
        let k4 = f(
            tau + 0.8 * h,
            &add(&y, &[(A41 * h, &k1), (A42 * h, &k2), (A43 * h, &k3)]),
        );
        let k5 = f(
            tau + 8.0 / 9.0 * h,
            &add(
                &y,
                &[(A51 * h, &k1), (A52 * h, &k2), (A53 * h, &k3), (A54 * h, &k4)],
            ),
        );
        let y6 = add(
            &y,
            &[
                (A61 * h, &k1),
                (A62 * h, &k2),
                (A63 * h, &k3),
                (A64 * h, &k4),
                (A65 * h, &k5),
            ],
        );
        let k6 = f(tau + h, &y6);
        let y_new = add(
            &y,
            &[
                (B1 * h, &k1),
                (B3 * h, &k3),
                (B4 * h, &k4),
                (B5 * h, &k5),
                (B6 * h, &k6),
            ],
        );
        let k7 = f(tau + h, &y_new);
        let mut err: f64 = 0.0;
        for i in 0..N {
            let e = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i]
                    + E7 * k7[i]);
            let scale = tol * (1.0 + y[i].abs().max(y_new[i].abs()));
            err = err.max((e / scale).abs());
        }
        if err <= 1.0 {
            tau += h;
            y = y_new;
        }
        let factor = (0.9 * err.powf(-0.2)).clamp(0.2, 5.0);
        h *= factor;
        if h.abs() < 1e-15 {
            panic!("dp54 step collapse at tau = {tau}");
        }
    }
    y
}

/// Reference solution of the homogeneous reduced equation
/// D(D+5)w = 6T⁴w² + 2T⁸w³ in τ = ln T, started deep enough that the
/// forcing is beyond double precision. Returns (w, Dw) at T = t_end.
pub fn reference_reduced_scalar(w0: f64, t_end: f64, tol: f64) -> (f64, f64) {
    let tau0 = -15.0;
    let rhs = |tau: f64, y: &[f64; 2]| -> [f64; 2] {
        let e4 = (4.0 * tau).exp();
        let e8 = (8.0 * tau).exp();
        let w = y[0];
        [y[1], -5.0 * y[1] + 6.0 * e4 * w * w + 2.0 * e8 * w * w * w]
    };
    let y = dp54(rhs, [w0, 0.0], tau0, t_end.ln(), tol);
    (y[0], y[1])
}

/// Lifespan prediction from the first integral u_T² - u⁴ = E with
/// E = -10 w₀: the homogeneous reduced solution exists on [0, T*) only.
#[allow(dead_code)]
pub fn homogeneous_lifespan(w0: f64) -> f64 {
    let e = -10.0 * w0;
    if e == 0.0 {
        return f64::INFINITY;
    }
    // ∫ du/sqrt(u^4 + E) constants: 2·1.31103 for a bounce (E < 0),
    // 3.70815 for a sign crossing (E > 0)
    if e < 0.0 {
        2.0 * 1.3110287771461 / (-e).powf(0.25)
    } else {
        3.7081493546027 / e.powf(0.25)
    }
}
