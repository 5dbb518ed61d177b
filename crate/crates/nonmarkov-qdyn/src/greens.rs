//! The two Green functions driving the reduced dynamics.
//!
//! `solve_u` integrates the retarded equation
//!
//! ```text
//! du/dt = -i ω_S u(t) - ∫_{t0}^{t} g(t-τ) u(τ) dτ,   u(t0) = 1,
//! ```
//!
//! with the memory kernel g(τ) = ∫ J(ω) e^{-iωτ} dω / 2π, using a
//! second-order predictor–corrector with trapezoidal memory quadrature on a
//! uniform grid (kernel values precomputed once, O(n²) total work).
//!
//! `solve_v` evaluates the equal-time fluctuation function
//!
//! ```text
//! v(t,t) = ∫_{t0}^{t}∫_{t0}^{t} u(t,τ₁) g̃(τ₁-τ₂) u*(t,τ₂) dτ₁ dτ₂,
//! ```
//!
//! with the thermal kernel g̃(τ) = ∫ J(ω) n̄(ω,T) e^{-iωτ} dω / 2π. Time
//! translation invariance (u(t,τ) = u(t-τ)) turns the double integral into
//! border updates of a running sum, so the whole trace costs the same O(n²)
//! as the propagator itself, with conjugate symmetry halving the work.
//!
//! Steady-state quantities come from the environment-modified density of
//! states D(ε) and the localized-mode residues.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics;
use crate::spectral::{
    occupation, BathParams, LocalizedMode, SpectralDensity, Statistics, SystemParams,
};

/// Uniform time grid: points t_k = t0 + k·dt for k = 0..=n_steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t0: f64,
    pub dt: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, dt: f64, n_steps: usize) -> Result<Self> {
        if !(dt > 0.0) || n_steps < 1 {
            return Err(Error::InvalidParameter(format!(
                "time grid needs dt > 0 and n_steps >= 1, got dt={dt}, n_steps={n_steps}"
            )));
        }
        Ok(Self { t0, dt, n_steps })
    }

    /// Grid from 0 to `horizon` with at most `dt` spacing (dt shrunk to fit).
    pub fn from_horizon(horizon: f64, dt: f64) -> Result<Self> {
        if !(horizon > 0.0) || !(dt > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "horizon and dt must be positive, got {horizon}, {dt}"
            )));
        }
        let n = (horizon / dt).ceil().max(1.0) as usize;
        Self::new(0.0, horizon / n as f64, n)
    }

    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn horizon(&self) -> f64 {
        self.time(self.n_steps)
    }

    /// Index of the grid point closest to `t`.
    pub fn index_of(&self, t: f64) -> usize {
        (((t - self.t0) / self.dt).round().max(0.0) as usize).min(self.n_steps)
    }
}

/// Default step: resolve both the system phase and the kernel's characteristic
/// oscillation. The Ohmic kernel varies on the 1/ω_c scale (its support tail
/// is exponentially empty), the band kernels on the upper band edge.
pub fn default_dt(j: &SpectralDensity, sys: &SystemParams) -> f64 {
    let omega_ker = match j {
        SpectralDensity::OhmicFamily { omega_c, .. } => *omega_c,
        _ => j.support().1,
    };
    (0.01 / sys.omega_s).min(0.1 / omega_ker)
}

/// Dissipative propagator u(t, t0) on a uniform grid, with the exact
/// right-hand-side derivative retained at every point.
#[derive(Debug, Clone)]
pub struct PropagatorTrace {
    pub grid: TimeGrid,
    pub u: Vec<Complex64>,
    pub u_dot: Vec<Complex64>,
}

impl PropagatorTrace {
    pub fn abs(&self) -> Vec<f64> {
        self.u.iter().map(|u| u.norm()).collect()
    }

    /// Mean of |u| over the trailing window of length `window`.
    pub fn tail_mean_abs(&self, window: f64) -> f64 {
        let w = ((window / self.grid.dt).ceil() as usize).clamp(1, self.grid.n_steps);
        let tail = &self.u[self.u.len() - w..];
        tail.iter().map(|u| u.norm()).sum::<f64>() / w as f64
    }

    /// CSV columns: t, Re_u, Im_u, abs_u.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,Re_u,Im_u,abs_u")?;
        for (k, u) in self.u.iter().enumerate() {
            writeln!(w, "{},{},{},{}", self.grid.time(k), u.re, u.im, u.norm())?;
        }
        Ok(())
    }
}

/// Equal-time fluctuation function v(t, t) on a uniform grid.
#[derive(Debug, Clone)]
pub struct CorrelationTrace {
    pub grid: TimeGrid,
    pub v: Vec<f64>,
    pub v_dot: Vec<f64>,
}

impl CorrelationTrace {
    /// Keep every m-th sample (plus the final one if it does not land on the
    /// stride); useful to thin serialized output.
    pub fn decimate(&self, m: usize) -> CorrelationTrace {
        let m = m.max(1);
        let idx: Vec<usize> = (0..=self.grid.n_steps).step_by(m).collect();
        let grid = TimeGrid {
            t0: self.grid.t0,
            dt: self.grid.dt * m as f64,
            n_steps: idx.len() - 1,
        };
        CorrelationTrace {
            grid,
            v: idx.iter().map(|&k| self.v[k]).collect(),
            v_dot: idx.iter().map(|&k| self.v_dot[k]).collect(),
        }
    }

    pub fn tail_mean(&self, window: f64) -> f64 {
        let w = ((window / self.grid.dt).ceil() as usize).clamp(1, self.grid.n_steps);
        let tail = &self.v[self.v.len() - w..];
        tail.iter().sum::<f64>() / w as f64
    }

    /// CSV columns: t, v.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,v")?;
        for (k, v) in self.v.iter().enumerate() {
            writeln!(w, "{},{}", self.grid.time(k), v)?;
        }
        Ok(())
    }
}

/// Late-time structure of the propagator and fluctuations.
#[derive(Debug, Clone)]
pub struct SteadyAsymptotics {
    pub modes: Vec<LocalizedMode>,
    pub v_infinity: f64,
    pub is_oscillatory: bool,
}

/// Memory-kernel values on the grid offsets k·dt.
pub(crate) fn memory_kernel_grid(
    j: &SpectralDensity,
    dt: f64,
    n: usize,
) -> Result<Vec<Complex64>> {
    match j {
        SpectralDensity::Tabulated { .. } => {
            let (lo, hi) = j.quad_support();
            let mesh = j.envelope_mesh(lo, hi, 1200);
            Ok(numerics::fourier_grid(
                |w| j.evaluate(w) / (2.0 * std::f64::consts::PI),
                &mesh,
                dt,
                n,
            ))
        }
        _ => (0..=n).map(|k| j.memory_kernel(k as f64 * dt)).collect(),
    }
}

/// Thermal-kernel values on the grid offsets k·dt.
pub(crate) fn noise_kernel_grid(
    j: &SpectralDensity,
    bath: &BathParams,
    statistics: Statistics,
    dt: f64,
    n: usize,
) -> Result<Vec<Complex64>> {
    j.check_bath(bath, statistics)?;
    if bath.temperature == 0.0 && statistics == Statistics::Boson {
        return Ok(vec![Complex64::new(0.0, 0.0); n + 1]);
    }
    let env = j.thermal_envelope(bath, statistics);
    let mesh = j.noise_mesh(bath, 1200);
    Ok(numerics::fourier_grid(env, &mesh, dt, n))
}

/// Solves the retarded memory-kernel equation for u on the grid.
///
/// Second-order predictor–corrector: the trapezoidal memory integral is
/// shared between the predictor and the corrector (they differ only in the
/// newest endpoint term), so each step costs one pass over the history.
pub fn solve_u(
    j: &SpectralDensity,
    sys: &SystemParams,
    grid: &TimeGrid,
) -> Result<PropagatorTrace> {
    let n = grid.n_steps;
    let dt = grid.dt;
    let g = memory_kernel_grid(j, dt, n)?;
    let m_i_omega = Complex64::new(0.0, -sys.omega_s);
    let half_g0 = 0.5 * dt * g[0];

    let mut u = Vec::with_capacity(n + 1);
    let mut u_dot = Vec::with_capacity(n + 1);
    u.push(Complex64::new(1.0, 0.0));
    u_dot.push(m_i_omega);

    for k in 0..n {
        // memory over the known history: dt·(½ g_{k+1} u_0 + Σ_{j=1}^{k} g_{k+1-j} u_j)
        let hist: Complex64 = g[1..=k]
            .iter()
            .rev()
            .zip(u[1..=k].iter())
            .map(|(gv, uv)| gv * uv)
            .sum();
        let mem = dt * (0.5 * g[k + 1] * u[0] + hist);

        let predicted = u[k] + dt * u_dot[k];
        let f_pred = m_i_omega * predicted - (mem + half_g0 * predicted);
        let next = u[k] + 0.5 * dt * (u_dot[k] + f_pred);
        let f_next = m_i_omega * next - (mem + half_g0 * next);

        let a = next.norm();
        if a > 1.0 + 1e-3 {
            return Err(Error::PropagatorInstability {
                t: grid.time(k + 1),
                abs_u: a,
            });
        }
        u.push(next);
        u_dot.push(f_next);
    }

    Ok(PropagatorTrace {
        grid: *grid,
        u,
        u_dot,
    })
}

/// Equal-time fluctuation function on the propagator's grid.
///
/// The double integral over [t0,t]² is marched by adding one border strip per
/// step; conjugate symmetry of g̃ makes the strip a single dot product per
/// step. Trapezoid end-weight corrections are applied in closed form.
pub fn solve_v(
    j: &SpectralDensity,
    sys: &SystemParams,
    bath: &BathParams,
    prop: &PropagatorTrace,
) -> Result<CorrelationTrace> {
    let n = prop.grid.n_steps;
    let dt = prop.grid.dt;
    let gt = noise_kernel_grid(j, bath, sys.statistics, dt, n)?;
    let u = &prop.u;
    let g0 = gt[0].re;
    let dt2 = dt * dt;

    let mut v = vec![0.0; n + 1];
    let mut v_dot = vec![0.0; n + 1];

    // running unweighted square sum and the i = 0 border row
    let mut m = u[0].norm_sqr() * g0;
    let mut row0 = u[0] * gt[0] * u[0].conj();

    for k in 1..=n {
        let border: Complex64 = u[..k]
            .iter()
            .zip(gt[1..=k].iter().rev())
            .map(|(uv, gv)| uv * gv)
            .sum();
        let full = border + u[k] * g0;
        m += 2.0 * (border * u[k].conj()).re + u[k].norm_sqr() * g0;
        row0 += u[0] * gt[k] * u[k].conj();
        let rowk = u[k] * full.conj();
        let c00 = u[0].norm_sqr() * g0;
        let ckk = u[k].norm_sqr() * g0;
        let c0k = u[0] * gt[k] * u[k].conj();

        let vk = dt2 * (m - row0.re - rowk.re + 0.25 * (c00 + ckk + 2.0 * c0k.re));
        v[k] = vk;
        // trapezoid of ∫_0^t g̃(t-a) u(a) da feeding dv/dt = 2 Re[u*(t) ∫ ...]
        let inner = dt * (full - 0.5 * u[0] * gt[k] - 0.5 * u[k] * g0);
        v_dot[k] = 2.0 * (u[k].conj() * inner).re;

        if vk < -1e-6 {
            return Err(Error::InvalidParameter(format!(
                "fluctuation bound violated: v({}) = {vk}",
                prop.grid.time(k)
            )));
        }
        if sys.statistics == Statistics::Fermion && vk > 1.0 + 1e-6 {
            return Err(Error::InvalidParameter(format!(
                "fermionic fluctuation bound violated: v({}) = {vk}",
                prop.grid.time(k)
            )));
        }
    }

    Ok(CorrelationTrace {
        grid: prop.grid,
        v,
        v_dot,
    })
}

/// Late-time propagator from the localized modes: Σ_j A_j e^{-iω_{b_j}(t-t0)}.
pub fn asymptotic_u(modes: &[LocalizedMode], t: f64, t0: f64) -> Complex64 {
    modes
        .iter()
        .map(|m| m.amplitude * Complex64::from_polar(1.0, -m.omega_b * (t - t0)))
        .sum()
}

/// Principal-value level shift Δ(ε) for ε inside the support, by
/// subtract-the-singularity quadrature on the truncated support:
/// Δ(ε) = (1/2π)[ ∫ (J(ω)-J(ε))/(ε-ω) dω + J(ε) ln|(ε-lo)/(hi-ε)| ].
fn level_shift_inside(j: &SpectralDensity, eps: f64) -> Result<f64> {
    let (lo, hi) = j.quad_support();
    let je = j.evaluate(eps);
    let mut mesh = j.envelope_mesh(lo, hi, 300);
    mesh.push(eps);
    mesh.sort_by(|a, b| a.partial_cmp(b).unwrap());
    mesh.dedup();
    let principal = numerics::integrate_mesh_real(
        |w| {
            let d = eps - w;
            if d.abs() < 1e-14 * (hi - lo) {
                0.0
            } else {
                (j.evaluate(w) - je) / d
            }
        },
        &mesh,
        1e-9,
    )?;
    let log_term = je * ((eps - lo) / (hi - eps)).abs().ln();
    Ok((principal + log_term) / (2.0 * std::f64::consts::PI))
}

/// Environment-modified density of states inside the support:
/// D(ε) = (1/2π) J(ε) / [(ε - ω_S - Δ(ε))² + (J(ε)/2)²].
pub fn density_of_states(j: &SpectralDensity, sys: &SystemParams, epsilon: f64) -> Result<f64> {
    let (lo, hi) = j.support();
    if !(epsilon >= lo && epsilon <= hi) {
        return Err(Error::OutsideSupport {
            omega: epsilon,
            lo,
            hi,
        });
    }
    let je = j.evaluate(epsilon);
    let delta = level_shift_inside(j, epsilon)?;
    let denom = (epsilon - sys.omega_s - delta).powi(2) + (0.5 * je).powi(2);
    Ok(je / (2.0 * std::f64::consts::PI * denom))
}

/// In-band resonances ε* solving ε - ω_S - Δ(ε) = 0, with the local widths
/// J(ε*)/2; used to seed quadrature meshes around sharp quasi-particle peaks.
fn resonances(j: &SpectralDensity, sys: &SystemParams) -> Result<Vec<(f64, f64)>> {
    let (lo, hi) = j.quad_support();
    let margin = 1e-6 * (hi - lo);
    let grid = numerics::linear_mesh(lo + margin, hi - margin, 240);
    let h = |e: f64| -> Result<f64> { Ok(e - sys.omega_s - level_shift_inside(j, e)?) };
    let mut out = Vec::new();
    let mut prev = h(grid[0])?;
    for w in grid.windows(2) {
        let next = h(w[1])?;
        if prev == 0.0 || prev.signum() != next.signum() {
            let (mut a, mut b) = (w[0], w[1]);
            let mut fa = prev;
            for _ in 0..60 {
                let mid = 0.5 * (a + b);
                let fm = h(mid)?;
                if fa.signum() == fm.signum() {
                    a = mid;
                    fa = fm;
                } else {
                    b = mid;
                }
            }
            let e_star = 0.5 * (a + b);
            out.push((e_star, 0.5 * j.evaluate(e_star).max(1e-12)));
        }
        prev = next;
    }
    Ok(out)
}

fn dos_mesh(j: &SpectralDensity, sys: &SystemParams) -> Result<Vec<f64>> {
    let (lo, hi) = j.quad_support();
    let mut mesh = j.envelope_mesh(lo, hi, 160);
    for (e_star, hw) in resonances(j, sys)? {
        for f in [0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0] {
            let (a, b) = (e_star - f * hw, e_star + f * hw);
            if a > lo {
                mesh.push(a);
            }
            if b < hi {
                mesh.push(b);
            }
        }
        mesh.push(e_star.clamp(lo, hi));
    }
    mesh.sort_by(|a, b| a.partial_cmp(b).unwrap());
    mesh.dedup();
    Ok(mesh)
}

/// ∫ D(ε) dε over the support (the continuum part of the sum rule
/// ∫ D dε + Σ_j A_j = 1).
pub fn dos_integral(j: &SpectralDensity, sys: &SystemParams) -> Result<f64> {
    let mesh = dos_mesh(j, sys)?;
    numerics::integrate_mesh_real(
        |e| density_of_states(j, sys, e).unwrap_or(0.0),
        &mesh,
        1e-7,
    )
}

/// Continuum steady-state occupation ∫ D(ε) n̄(ε, T) dε.
#[derive(Debug, Clone, Copy)]
pub struct SteadyV {
    pub value: f64,
    /// set when localized modes exist, whose contribution is not included
    pub continuum_only: bool,
}

pub fn steady_v(j: &SpectralDensity, sys: &SystemParams, bath: &BathParams) -> Result<SteadyV> {
    j.check_bath(bath, sys.statistics)?;
    let modes = j.localized_modes(sys)?;
    let mesh = dos_mesh(j, sys)?;
    let (lo, _) = j.support();
    let off = 1e-12;
    let value = numerics::integrate_mesh_real(
        |e| {
            if e <= lo + off {
                return 0.0;
            }
            let d = match density_of_states(j, sys, e) {
                Ok(d) => d,
                Err(_) => return 0.0,
            };
            let n = occupation(e, bath, sys.statistics).unwrap_or(0.0);
            d * n
        },
        &mesh,
        1e-7,
    )?;
    Ok(SteadyV {
        value,
        continuum_only: !modes.is_empty(),
    })
}

/// Localized modes, continuum steady occupation, and whether the late-time
/// propagator beats (two or more modes).
pub fn steady_asymptotics(
    j: &SpectralDensity,
    sys: &SystemParams,
    bath: &BathParams,
) -> Result<SteadyAsymptotics> {
    let modes = j.localized_modes(sys)?;
    let v = steady_v(j, sys, bath)?;
    Ok(SteadyAsymptotics {
        is_oscillatory: modes.len() >= 2,
        modes,
        v_infinity: v.value,
    })
}

/// Operational steady time: first grid time after which the windowed RMS of
/// |u| changes by less than `tol` (relative to the initial amplitude 1)
/// between consecutive windows, through the end of the trace. `None` when the
/// trace never settles within the horizon (e.g. persistent beats).
pub fn steady_time(prop: &PropagatorTrace, window: f64, tol: f64) -> Option<f64> {
    let w = ((window / prop.grid.dt).ceil() as usize).max(1);
    let n = prop.grid.n_steps;
    if n < 2 * w {
        return None;
    }
    let abs: Vec<f64> = prop.u.iter().map(|u| u.norm_sqr()).collect();
    // prefix sums of |u|² for O(1) window RMS
    let mut prefix = vec![0.0; n + 2];
    for (k, a) in abs.iter().enumerate() {
        prefix[k + 1] = prefix[k] + a;
    }
    let rms = |end: usize| -> f64 {
        let lo = end + 1 - w;
        ((prefix[end + 1] - prefix[lo]) / w as f64).sqrt()
    };
    let mut settled_from: Option<usize> = None;
    for k in (2 * w - 1)..=n {
        let change = (rms(k) - rms(k - w)).abs();
        if change < tol {
            settled_from.get_or_insert(k);
        } else {
            settled_from = None;
        }
    }
    settled_from.map(|k| prop.grid.time(k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use approx::assert_abs_diff_eq;

    fn sys() -> SystemParams {
        SystemParams::boson(1.0).unwrap()
    }

    fn zero_density() -> SpectralDensity {
        SpectralDensity::tabulated(vec![50.0, 51.0], vec![0.0, 0.0]).unwrap()
    }

    #[test]
    fn free_evolution_is_a_pure_phase() {
        let grid = TimeGrid::new(0.0, 0.01, 500).unwrap();
        let trace = solve_u(&zero_density(), &sys(), &grid).unwrap();
        assert_eq!(trace.u[0], Complex64::new(1.0, 0.0));
        for (k, u) in trace.u.iter().enumerate() {
            let expect = Complex64::from_polar(1.0, -grid.time(k));
            // phase error accumulates as t·dt²/6 for the second-order stepper
            assert!((u - expect).norm() < 1e-4, "k={k}");
            assert!((u.norm() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn weak_coupling_decays_at_golden_rule_rate() {
        // κ = J(ω_S)/2 for a flat, wide reservoir
        let j = SpectralDensity::ohmic_family(0.001, 1.0, 10.0).unwrap();
        let grid = TimeGrid::new(0.0, 0.01, 2000).unwrap();
        let trace = solve_u(&j, &sys(), &grid).unwrap();
        let kappa = 0.5 * j.evaluate(1.0);
        // fit the decay rate from the last three quarters of the window
        let k0 = 500;
        let rate = -(trace.u[2000].norm() / trace.u[k0].norm()).ln() / (grid.time(2000) - grid.time(k0));
        assert!(
            (rate - kappa).abs() < 0.05 * kappa,
            "rate {rate} vs golden rule {kappa}"
        );
    }

    #[test]
    fn matches_discretized_bath_propagator() {
        let j = SpectralDensity::ohmic_family(0.1, 1.0, 5.0).unwrap();
        let grid = TimeGrid::new(0.0, 0.01, 2000).unwrap();
        let trace = solve_u(&j, &sys(), &grid).unwrap();
        let bath = oracle::discretize(&j, 400).unwrap();
        let prop = oracle::OraclePropagator::new(&bath, &sys());
        let mut worst = 0.0f64;
        for k in (0..=2000).step_by(20) {
            let d = (trace.u[k] - prop.u(grid.time(k))).norm();
            worst = worst.max(d);
        }
        assert!(worst < 1e-3, "max |Δu| = {worst}");
    }

    #[test]
    fn fluctuations_match_discretized_bath() {
        let j = SpectralDensity::ohmic_family(0.1, 1.0, 5.0).unwrap();
        let bathp = BathParams::new(2.0, 0.0).unwrap();
        let grid = TimeGrid::new(0.0, 0.01, 1500).unwrap();
        let trace = solve_u(&j, &sys(), &grid).unwrap();
        let v = solve_v(&j, &sys(), &bathp, &trace).unwrap();
        assert_eq!(v.v[0], 0.0);
        let bath = oracle::discretize(&j, 400).unwrap();
        let prop = oracle::OraclePropagator::new(&bath, &sys());
        let mut worst = 0.0f64;
        for k in (0..=1500).step_by(50) {
            let exact = prop.v(grid.time(k), &bathp, Statistics::Boson).unwrap();
            worst = worst.max((v.v[k] - exact).abs());
        }
        assert!(worst < 1e-2, "max |Δv| = {worst}");
    }

    #[test]
    fn cold_boson_bath_keeps_v_zero() {
        let j = SpectralDensity::ohmic_family(0.2, 1.0, 5.0).unwrap();
        let bath = BathParams::new(0.0, -0.2).unwrap();
        let grid = TimeGrid::new(0.0, 0.02, 200).unwrap();
        let trace = solve_u(&j, &sys(), &grid).unwrap();
        let v = solve_v(&j, &sys(), &bath, &trace).unwrap();
        assert!(v.v.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn markov_limit_reaches_thermal_occupation() {
        let j = SpectralDensity::ohmic_family(0.001, 1.0, 10.0).unwrap();
        let bath = BathParams::new(2.0, 0.0).unwrap();
        // run long enough that the exponential filling saturates
        let grid = TimeGrid::new(0.0, 0.05, 40000).unwrap();
        let trace = solve_u(&j, &sys(), &grid).unwrap();
        let v = solve_v(&j, &sys(), &bath, &trace).unwrap();
        let nbar = occupation(1.0, &bath, Statistics::Boson).unwrap();
        let v_late = v.tail_mean(5.0);
        assert!(
            (v_late - nbar).abs() < 0.03 * nbar,
            "v(t_s) = {v_late} vs n̄ = {nbar}"
        );
    }

    #[test]
    fn grid_halving_shows_second_order_convergence() {
        let j = SpectralDensity::ohmic_family(0.1, 1.0, 5.0).unwrap();
        let bath = BathParams::new(2.0, 0.0).unwrap();
        let horizon = 10.0;
        let mut u_ends = Vec::new();
        let mut v_ends = Vec::new();
        for steps in [500usize, 1000, 2000] {
            let grid = TimeGrid::new(0.0, horizon / steps as f64, steps).unwrap();
            let trace = solve_u(&j, &sys(), &grid).unwrap();
            let v = solve_v(&j, &sys(), &bath, &trace).unwrap();
            u_ends.push(*trace.u.last().unwrap());
            v_ends.push(*v.v.last().unwrap());
        }
        let order_u = ((u_ends[0] - u_ends[1]).norm() / (u_ends[1] - u_ends[2]).norm()).log2();
        let order_v = ((v_ends[0] - v_ends[1]).abs() / (v_ends[1] - v_ends[2]).abs()).log2();
        assert!(order_u >= 1.9, "u order {order_u}");
        assert!(order_v >= 1.9, "v order {order_v}");
    }

    #[test]
    fn asymptotic_u_examples() {
        assert_eq!(asymptotic_u(&[], 3.0, 0.0), Complex64::new(0.0, 0.0));
        let single = [LocalizedMode {
            omega_b: -0.7,
            amplitude: 0.6,
            at_buffer_edge: false,
        }];
        for &t in &[0.0, 2.0, 11.0] {
            assert_abs_diff_eq!(asymptotic_u(&single, t, 0.0).norm(), 0.6, epsilon = 1e-12);
        }
    }

    #[test]
    fn late_time_envelope_matches_localized_amplitude() {
        let j = SpectralDensity::ohmic_family(0.5, 1.0, 5.0).unwrap();
        let s = sys();
        let modes = j.localized_modes(&s).unwrap();
        assert_eq!(modes.len(), 1);
        let grid = TimeGrid::new(0.0, 0.01, 5000).unwrap();
        let trace = solve_u(&j, &s, &grid).unwrap();
        let tail = trace.tail_mean_abs(5.0);
        assert!(
            (tail - modes[0].amplitude).abs() < 0.02 * modes[0].amplitude,
            "tail {tail} vs amplitude {}",
            modes[0].amplitude
        );
    }

    #[test]
    fn dos_sum_rule_without_modes() {
        let j = SpectralDensity::ohmic_family(0.1, 1.0, 5.0).unwrap();
        let total = dos_integral(&j, &sys()).unwrap();
        assert!((total - 1.0).abs() < 1e-3, "sum rule gives {total}");
    }

    #[test]
    fn dos_sum_rule_with_two_modes() {
        let j = SpectralDensity::tight_binding(3.0, 0.2, 1.0).unwrap();
        let total = dos_integral(&j, &sys()).unwrap();
        assert!((total - 0.125).abs() < 1e-3, "continuum weight {total}");
    }

    #[test]
    fn weak_coupling_dos_peaks_near_system_frequency() {
        let j = SpectralDensity::ohmic_family(0.001, 1.0, 10.0).unwrap();
        let s = sys();
        let peaks = resonances(&j, &s).unwrap();
        assert_eq!(peaks.len(), 1);
        assert!((peaks[0].0 - 1.0).abs() < 0.02);
        // Lorentzian height at the peak: D(ε*) ≈ 2/(π J(ε*))
        let d = density_of_states(&j, &s, peaks[0].0).unwrap();
        let expect = 2.0 / (std::f64::consts::PI * j.evaluate(peaks[0].0));
        assert!((d - expect).abs() < 0.02 * expect);
        assert!(density_of_states(&j, &s, -0.5).is_err());
    }

    #[test]
    fn hot_fermion_steady_occupation_is_half() {
        let j = SpectralDensity::tight_binding(1.0, 0.2, 1.0).unwrap();
        let s = SystemParams::fermion(1.0).unwrap();
        let bath = BathParams::new(1e8, 0.0).unwrap();
        let sv = steady_v(&j, &s, &bath).unwrap();
        assert!(!sv.continuum_only);
        assert!((sv.value - 0.5).abs() < 1e-3, "steady v {}", sv.value);
    }

    #[test]
    fn markov_steady_v_quadrature_matches_occupation() {
        let j = SpectralDensity::ohmic_family(0.001, 1.0, 10.0).unwrap();
        let bath = BathParams::new(2.0, 0.0).unwrap();
        let sv = steady_v(&j, &sys(), &bath).unwrap();
        let nbar = occupation(1.0, &bath, Statistics::Boson).unwrap();
        assert!(
            (sv.value - nbar).abs() < 0.03 * nbar,
            "steady v {} vs n̄ {nbar}",
            sv.value
        );
    }

    #[test]
    fn steady_time_detects_relaxation() {
        // level shift moves the resonance near ε* ≈ 0.43, so the effective
        // decay rate is J(ε*)/2 ≈ 0.11 and settling at 1e-4 needs t ≈ 80
        let j = SpectralDensity::ohmic_family(0.1, 1.0, 5.0).unwrap();
        let grid = TimeGrid::new(0.0, 0.01, 10000).unwrap();
        let trace = solve_u(&j, &sys(), &grid).unwrap();
        let ts = steady_time(&trace, 5.0, 1e-4).expect("settles");
        assert!(ts > 0.0 && ts < 100.0);
        // free evolution never changes |u|: settles immediately
        let free = solve_u(&zero_density(), &sys(), &grid).unwrap();
        let ts_free = steady_time(&free, 5.0, 1e-4).unwrap();
        assert!(ts_free <= 10.0 + 1e-9);
    }
}
