//! Internal quadrature and mesh helpers shared by the physics modules.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Kronrod abscissae for the 7-15 Gauss–Kronrod pair on [-1, 1] (nonnegative half).
const XGK: [f64; 8] = [
    0.991_455_371_120_813,
    0.949_107_912_342_759,
    0.864_864_423_359_769,
    0.741_531_185_599_394,
    0.586_087_235_467_691,
    0.405_845_151_377_397,
    0.207_784_955_007_898,
    0.0,
];

/// Kronrod weights matching `XGK`.
const WGK: [f64; 8] = [
    0.022_935_322_010_529,
    0.063_092_092_629_979,
    0.104_790_010_322_250,
    0.140_653_259_715_525,
    0.169_004_726_639_267,
    0.190_350_578_064_785,
    0.204_432_940_075_298,
    0.209_482_141_084_728,
];

/// Gauss-7 weights for the odd-indexed Kronrod nodes (and the center).
const WG: [f64; 4] = [
    0.129_484_966_168_870,
    0.279_705_391_489_277,
    0.381_830_050_505_119,
    0.417_959_183_673_469,
];

fn gk15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let x = h * XGK[i];
        let sum = f(c + x) + f(c - x);
        kron += WGK[i] * sum;
        if i % 2 == 1 {
            gauss += WG[i / 2] * sum;
        }
    }
    (kron * h, ((kron - gauss) * h).norm())
}

/// Adaptive Gauss–Kronrod refinement over [a, b]; returns the best estimate
/// and the accumulated residual without judging convergence.
fn integrate_raw<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64, tol: f64) -> (Complex64, f64) {
    if a == b {
        return (Complex64::new(0.0, 0.0), 0.0);
    }
    // Work-list adaptive bisection with a fixed interval budget.
    let mut stack = vec![(a, b, tol)];
    let mut total = Complex64::new(0.0, 0.0);
    let mut residual = 0.0_f64;
    let mut budget = 4000usize;
    while let Some((lo, hi, eps)) = stack.pop() {
        let (val, err) = gk15(f, lo, hi);
        if err <= eps.max(1e-300) || (hi - lo).abs() < 1e-14 * (b - a).abs() || budget == 0 {
            total += val;
            residual += err;
            continue;
        }
        budget -= 1;
        let mid = 0.5 * (lo + hi);
        stack.push((lo, mid, 0.5 * eps));
        stack.push((mid, hi, 0.5 * eps));
    }
    (total, residual)
}

/// Adaptive Gauss–Kronrod integration of a complex-valued integrand over
/// [a, b]. Fails with the achieved residual when the refinement budget is
/// exhausted well above the tolerance.
pub fn integrate<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, tol: f64) -> Result<Complex64> {
    let (value, residual) = integrate_raw(&f, a, b, tol);
    if residual > tol.max(1e-13) * 100.0 {
        return Err(Error::QuadratureNonConvergence {
            residual,
            tolerance: tol,
        });
    }
    Ok(value)
}

/// Adaptive integration of a real integrand.
pub fn integrate_real<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    let v = integrate(|x| Complex64::new(f(x), 0.0), a, b, tol)?;
    Ok(v.re)
}

/// Adaptive integration over an explicit panel mesh (panels integrated
/// independently; useful when the integrand has known awkward points that
/// should sit on panel boundaries, where the Kronrod rule never samples).
/// Convergence is judged on the summed residual, so a few stubborn slivers
/// cannot fail an otherwise converged integral.
pub fn integrate_mesh<F: Fn(f64) -> Complex64>(f: F, mesh: &[f64], tol: f64) -> Result<Complex64> {
    let mut total = Complex64::new(0.0, 0.0);
    let mut residual = 0.0;
    let per_panel = tol / mesh.len().max(1) as f64;
    for w in mesh.windows(2) {
        let (v, r) = integrate_raw(&f, w[0], w[1], per_panel);
        total += v;
        residual += r;
    }
    if residual > tol.max(1e-13) * 100.0 {
        return Err(Error::QuadratureNonConvergence {
            residual,
            tolerance: tol,
        });
    }
    Ok(total)
}

pub fn integrate_mesh_real<F: Fn(f64) -> f64>(f: F, mesh: &[f64], tol: f64) -> Result<f64> {
    let v = integrate_mesh(|x| Complex64::new(f(x), 0.0), mesh, tol)?;
    Ok(v.re)
}

/// Mesh of `n + 1` points on [a, b], geometrically graded toward `a` starting
/// from a first panel of width `first`.
pub fn graded_mesh(a: f64, b: f64, first: f64, n: usize) -> Vec<f64> {
    assert!(b > a && first > 0.0 && n >= 1);
    let span = b - a;
    if first * n as f64 >= span {
        return linear_mesh(a, b, n);
    }
    // Solve first * (r^n - 1)/(r - 1) = span for the growth ratio r.
    let mut lo = 1.0 + 1e-12;
    let mut hi = 2.0;
    let total = |r: f64| first * ((r.powi(n as i32) - 1.0) / (r - 1.0));
    while total(hi) < span {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if total(mid) < span {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let r = 0.5 * (lo + hi);
    let mut mesh = Vec::with_capacity(n + 1);
    let mut x = a;
    let mut h = first;
    mesh.push(a);
    for _ in 0..n - 1 {
        x += h;
        mesh.push(x);
        h *= r;
    }
    mesh.push(b);
    mesh
}

/// Uniform mesh of `n + 1` points on [a, b].
pub fn linear_mesh(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..=n)
        .map(|i| a + (b - a) * i as f64 / n as f64)
        .collect()
}

/// Computes F_k = ∫ f(ω) e^{-iω k dt} dω for k = 0..=n_steps over a panel mesh,
/// treating the envelope f as quadratic on each panel (values at the two ends
/// and the midpoint) and integrating the oscillatory factor exactly
/// (Filon-type rule). Accuracy is set by how well the mesh resolves the
/// envelope, independent of k dt.
pub fn fourier_grid<F: Fn(f64) -> f64>(
    f: F,
    mesh: &[f64],
    dt: f64,
    n_steps: usize,
) -> Vec<Complex64> {
    let n_pan = mesh.len().saturating_sub(1);
    let mut out = vec![Complex64::new(0.0, 0.0); n_steps + 1];
    if n_pan == 0 {
        return out;
    }
    let fa: Vec<f64> = mesh.iter().map(|&w| f(w)).collect();
    let fm: Vec<f64> = (0..n_pan)
        .map(|p| f(0.5 * (mesh[p] + mesh[p + 1])))
        .collect();

    // Quadratic fit p(x) = c0 + c1 x + c2 x² through f at x = 0, 1/2, 1.
    let coeffs: Vec<(f64, f64, f64)> = (0..n_pan)
        .map(|p| {
            let (f0, f1) = (fa[p], fa[p + 1]);
            let fmid = fm[p];
            (
                f0,
                -3.0 * f0 + 4.0 * fmid - f1,
                2.0 * f0 - 4.0 * fmid + 2.0 * f1,
            )
        })
        .collect();

    // Per-panel running phases: pa = e^{-i a k dt}, pe = e^{-i h k dt}.
    let mut pa: Vec<Complex64> = vec![Complex64::new(1.0, 0.0); n_pan];
    let mut pe: Vec<Complex64> = vec![Complex64::new(1.0, 0.0); n_pan];
    let step_a: Vec<Complex64> = (0..n_pan)
        .map(|p| Complex64::from_polar(1.0, -mesh[p] * dt))
        .collect();
    let step_e: Vec<Complex64> = (0..n_pan)
        .map(|p| Complex64::from_polar(1.0, -(mesh[p + 1] - mesh[p]) * dt))
        .collect();

    for k in 0..=n_steps {
        let t = k as f64 * dt;
        let mut acc = Complex64::new(0.0, 0.0);
        for p in 0..n_pan {
            let h = mesh[p + 1] - mesh[p];
            let w = Complex64::new(0.0, -t * h);
            let e = pe[p];
            // phi_m = ∫_0^1 x^m e^{w x} dx with e = e^w exactly.
            let (phi0, phi1, phi2) = if w.norm() < 0.05 {
                let w2 = w * w;
                let w3 = w2 * w;
                let w4 = w2 * w2;
                (
                    Complex64::new(1.0, 0.0) + w * 0.5 + w2 / 6.0 + w3 / 24.0 + w4 / 120.0,
                    Complex64::new(0.5, 0.0) + w / 3.0 + w2 * 0.125 + w3 / 30.0 + w4 / 144.0,
                    Complex64::new(1.0 / 3.0, 0.0) + w * 0.25 + w2 * 0.1 + w3 / 36.0 + w4 / 168.0,
                )
            } else {
                let phi0 = (e - 1.0) / w;
                let phi1 = (e * (w - 1.0) + 1.0) / (w * w);
                let phi2 = (e * (w * w - 2.0 * w + 2.0) - 2.0) / (w * w * w);
                (phi0, phi1, phi2)
            };
            let (c0, c1, c2) = coeffs[p];
            acc += pa[p] * h * (phi0 * c0 + phi1 * c1 + phi2 * c2);
        }
        out[k] = acc;
        for p in 0..n_pan {
            pa[p] *= step_a[p];
            pe[p] *= step_e[p];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn integrates_polynomial_exactly() {
        let v = integrate_real(|x| 3.0 * x * x, 0.0, 2.0, 1e-12).unwrap();
        assert_abs_diff_eq!(v, 8.0, epsilon = 1e-12);
    }

    #[test]
    fn integrates_oscillatory_gaussian() {
        // ∫ e^{-x^2} cos(5x) dx over R = sqrt(pi) e^{-25/4}
        let v = integrate_real(|x| (-x * x).exp() * (5.0 * x).cos(), -10.0, 10.0, 1e-12).unwrap();
        let exact = std::f64::consts::PI.sqrt() * (-6.25f64).exp();
        assert_abs_diff_eq!(v, exact, epsilon = 1e-10);
    }

    #[test]
    fn graded_mesh_spans_interval() {
        let mesh = graded_mesh(0.0, 10.0, 1e-6, 60);
        assert_eq!(mesh.len(), 61);
        assert_eq!(mesh[0], 0.0);
        assert_abs_diff_eq!(*mesh.last().unwrap(), 10.0, epsilon = 1e-9);
        assert!(mesh.windows(2).all(|w| w[1] > w[0]));
        assert!(mesh[1] < 1e-5);
    }

    #[test]
    fn fourier_grid_matches_closed_form() {
        // f = e^{-ω} on [0, 60]: F(t) = 1/(1 + i t) up to the truncated tail.
        let mesh = graded_mesh(0.0, 60.0, 1e-4, 800);
        let dt = 0.05;
        let got = fourier_grid(|w| (-w).exp(), &mesh, dt, 400);
        for k in [0usize, 1, 10, 100, 400] {
            let t = k as f64 * dt;
            let exact = 1.0 / Complex64::new(1.0, t);
            assert!(
                (got[k] - exact).norm() < 1e-8,
                "k={k}: got {:?} want {:?}",
                got[k],
                exact
            );
        }
    }
}
