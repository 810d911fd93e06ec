//! FFT-based operators on the periodic grid: derivatives, the Laplacian,
//! the Sobolev multiplier S = (1 - Δ)^{s/2}, and discrete H^s norms.
//!
//! Conventions. Fourier coefficients are normalized so that
//! f(x) = Σ_k ĉ_k e^{i κ_k · x} with κ_k = 2π k / L, and the discrete H^s
//! norm is (V Σ_k (1 + |κ_k|²)^s |ĉ_k|²)^{1/2} where V is the box volume.
//! With this normalization, s = 0 reproduces the continuum L² norm of the
//! box exactly for band-limited fields.

use std::cell::RefCell;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::grid::{Field, GridSpec};

type C64 = Complex<f64>;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(len)
        } else {
            p.plan_fft_forward(len)
        }
    })
}

/// Signed mode number for index `i` on an axis with `np` points.
#[inline]
fn signed_mode(i: usize, np: usize) -> i64 {
    let i = i as i64;
    let np = np as i64;
    if i <= np / 2 {
        i
    } else {
        i - np
    }
}

/// Physical wavenumber of index `i` along `axis`.
#[inline]
pub fn wavenumber(grid: &GridSpec, axis: usize, i: usize) -> f64 {
    std::f64::consts::TAU * signed_mode(i, grid.points[axis]) as f64 / grid.length[axis]
}

fn fft2(data: &mut [C64], nx: usize, ny: usize, inverse: bool) {
    if nx > 1 {
        let fft = plan(nx, inverse);
        for row in data.chunks_exact_mut(nx) {
            fft.process(row);
        }
    }
    if ny > 1 {
        let fft = plan(ny, inverse);
        let mut col = vec![C64::new(0.0, 0.0); ny];
        for ix in 0..nx {
            for iy in 0..ny {
                col[iy] = data[iy * nx + ix];
            }
            fft.process(&mut col);
            for iy in 0..ny {
                data[iy * nx + ix] = col[iy];
            }
        }
    }
}

/// Forward transform to normalized Fourier coefficients ĉ_k.
pub fn to_spectrum(f: &Field) -> Vec<C64> {
    let [nx, ny] = f.grid.points;
    let mut buf: Vec<C64> = f.data.iter().map(|&v| C64::new(v, 0.0)).collect();
    fft2(&mut buf, nx, ny, false);
    let scale = 1.0 / (nx * ny) as f64;
    for c in &mut buf {
        *c *= scale;
    }
    buf
}

/// Inverse transform of normalized coefficients; imaginary parts are dropped.
pub fn from_spectrum(mut spec: Vec<C64>, grid: &GridSpec) -> Field {
    let [nx, ny] = grid.points;
    fft2(&mut spec, nx, ny, true);
    Field {
        grid: *grid,
        data: spec.into_iter().map(|c| c.re).collect(),
    }
}

/// Apply a real Fourier multiplier m(κ).
pub fn apply_multiplier(f: &Field, m: impl Fn(f64, f64) -> f64) -> Field {
    let [nx, ny] = f.grid.points;
    let mut spec = to_spectrum(f);
    for iy in 0..ny {
        let ky = wavenumber(&f.grid, 1, iy);
        for ix in 0..nx {
            let kx = wavenumber(&f.grid, 0, ix);
            spec[iy * nx + ix] *= m(kx, ky);
        }
    }
    from_spectrum(spec, &f.grid)
}

/// Spectral first derivative along `axis`. The Nyquist mode is zeroed,
/// as usual for odd-order derivatives on an even grid.
pub fn derivative(f: &Field, axis: usize) -> Field {
    let [nx, ny] = f.grid.points;
    let mut spec = to_spectrum(f);
    for iy in 0..ny {
        for ix in 0..nx {
            let i = [ix, iy][axis];
            let np = f.grid.points[axis];
            let k = wavenumber(&f.grid, axis, i);
            let nyquist = np % 2 == 0 && i == np / 2;
            let factor = if nyquist {
                C64::new(0.0, 0.0)
            } else {
                C64::new(0.0, k)
            };
            spec[iy * nx + ix] *= factor;
        }
    }
    from_spectrum(spec, &f.grid)
}

/// Gradient over the active axes.
pub fn gradient(f: &Field) -> Vec<Field> {
    (0..f.grid.n).map(|a| derivative(f, a)).collect()
}

/// Spectral Laplacian.
pub fn laplacian(f: &Field) -> Field {
    apply_multiplier(f, |kx, ky| -(kx * kx + ky * ky))
}

/// The multiplier operator S = (1 - Δ)^{s/2}, i.e. (1 + |κ|²)^{s/2} per mode.
pub fn apply_s(f: &Field, s: f64) -> Field {
    apply_multiplier(f, |kx, ky| (1.0 + kx * kx + ky * ky).powf(s / 2.0))
}

/// Discrete H^s norm of `f`.
pub fn sobolev_norm(f: &Field, s: f64) -> f64 {
    let [nx, ny] = f.grid.points;
    let spec = to_spectrum(f);
    let mut acc = 0.0;
    for iy in 0..ny {
        let ky = wavenumber(&f.grid, 1, iy);
        for ix in 0..nx {
            let kx = wavenumber(&f.grid, 0, ix);
            let w = (1.0 + kx * kx + ky * ky).powf(s);
            acc += w * spec[iy * nx + ix].norm_sqr();
        }
    }
    (acc * f.grid.volume()).sqrt()
}

/// Norm of a Cauchy data pair: ‖u‖_{s0} + ‖u_t‖_{s0-1} (sum convention).
pub fn cauchy_pair_norm(u: &Field, ut: &Field, s0: f64) -> f64 {
    sobolev_norm(u, s0) + sobolev_norm(ut, s0 - 1.0)
}

/// Fourier interpolation onto a grid with different resolution (same box).
/// Upsampling splits the Nyquist coefficient symmetrically so the result is
/// real and agrees with the input at the original points.
pub fn resample(f: &Field, points: [usize; 2]) -> Field {
    let src = f.grid;
    let dst = GridSpec {
        n: src.n,
        points,
        length: src.length,
        origin: src.origin,
    };
    if points == src.points {
        return f.clone();
    }
    let spec = to_spectrum(f);
    let [sx, sy] = src.points;
    let [dx, dy] = points;
    let mut out = vec![C64::new(0.0, 0.0); dx * dy];
    for iy in 0..sy {
        let my = signed_mode(iy, sy);
        for ix in 0..sx {
            let mx = signed_mode(ix, sx);
            let c = spec[iy * sx + ix];
            // distribute each source mode, splitting Nyquist modes when the
            // destination axis can hold both signs
            let xs = split_mode(mx, sx, dx);
            let ys = split_mode(my, sy, dy);
            for &(jx, wx) in &xs {
                for &(jy, wy) in &ys {
                    out[jy * dx + jx] += c * wx * wy;
                }
            }
        }
    }
    from_spectrum(out, &dst)
}

/// Index of signed mode `m` on an axis with `np` points, if representable.
fn mode_index(m: i64, np: usize) -> Option<usize> {
    let np = np as i64;
    if m >= 0 && m <= np / 2 {
        Some(m as usize)
    } else if m < 0 && -m <= (np - 1) / 2 {
        Some((np + m) as usize)
    } else {
        None
    }
}

/// Destination index/weight pairs for a signed source mode. A source Nyquist
/// coefficient is split evenly between +m and -m when upsampling; truncation
/// when downsampling simply drops modes the destination cannot hold.
fn split_mode(m: i64, src_np: usize, dst_np: usize) -> Vec<(usize, f64)> {
    let src_nyquist = src_np % 2 == 0 && m == src_np as i64 / 2;
    if src_nyquist && dst_np > src_np {
        [(m, 0.5), (-m, 0.5)]
            .iter()
            .filter_map(|&(mm, w)| mode_index(mm, dst_np).map(|i| (i, w)))
            .collect()
    } else {
        mode_index(m, dst_np).map(|i| (i, 1.0)).into_iter().collect()
    }
}
