//! Initial states, exact reconstruction of the reduced density matrix from
//! the Green-function pair (u, v), observables, and steady-state
//! classification.
//!
//! Given the propagator value u = u(t, t0) and the equal-time fluctuation
//! v = v(t, t), the reduced state of an initially pure superposition
//! Σ_n c_n |n⟩ is reconstructed in closed form:
//!
//! ```text
//! ρ(t) = Σ_{m,n} c_m c*_n Σ_{k ≤ min(m,n)} d_k A†_{mk} ρ̃ A_{nk},
//! ρ̃   = Σ_{n'} v^{n'} / (1 ± v)^{n' ± 1} |n'⟩⟨n'|,
//! A†_{mk} = √(m!)/[(m-k)!√(k!)] [u/(1 ± v) a†]^{m-k},
//! d_k  = [1 - |u|²/(1 ± v)]^k,
//! ```
//!
//! with the upper (lower) signs for bosons (fermions). Factorial ratios are
//! evaluated in log space so truncations around 30-60 levels stay finite.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::greens::{CorrelationTrace, PropagatorTrace};
use crate::spectral::{occupation, BathParams, LocalizedMode, Statistics, SystemParams};

/// Pure initial state Σ_n c_n |n⟩ (fermions: n ∈ {0, 1}).
#[derive(Debug, Clone)]
pub struct InitialState {
    coefficients: Vec<Complex64>,
}

impl InitialState {
    /// Normalizes the given Fock coefficients; rejects a zero vector.
    pub fn from_coefficients(coefficients: Vec<Complex64>) -> Result<Self> {
        let norm2: f64 = coefficients.iter().map(|c| c.norm_sqr()).sum();
        if !(norm2 > 0.0) || !norm2.is_finite() {
            return Err(Error::InvalidParameter(
                "initial state coefficients must have a positive finite norm".into(),
            ));
        }
        let scale = norm2.sqrt().recip();
        Ok(Self {
            coefficients: coefficients.into_iter().map(|c| c * scale).collect(),
        })
    }

    pub fn vacuum() -> Self {
        Self {
            coefficients: vec![Complex64::new(1.0, 0.0)],
        }
    }

    /// Number state |n⟩.
    pub fn fock(n: usize) -> Self {
        let mut c = vec![Complex64::new(0.0, 0.0); n + 1];
        c[n] = Complex64::new(1.0, 0.0);
        Self { coefficients: c }
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    /// Initial mean particle number Σ n |c_n|².
    pub fn mean_occupation(&self) -> f64 {
        self.coefficients
            .iter()
            .enumerate()
            .map(|(n, c)| n as f64 * c.norm_sqr())
            .sum()
    }

    pub fn max_level(&self) -> usize {
        self.coefficients.len() - 1
    }
}

/// Truncation rule for cat states: levels beyond |α|² + 8|α| + 10 carry less
/// than 1e-10 of the norm.
pub fn cat_truncation_rule(alpha0: Complex64) -> usize {
    let a = alpha0.norm();
    (a * a + 8.0 * a + 10.0).ceil() as usize
}

/// Superposition of opposite coherent states |α₀⟩ + e^{iφ}|-α₀⟩, normalized
/// including the ⟨α₀|-α₀⟩ = e^{-2|α₀|²} overlap.
pub fn cat_state(alpha0: Complex64, relative_phase: f64, n_max: usize) -> Result<InitialState> {
    let needed = cat_truncation_rule(alpha0);
    if n_max < needed {
        return Err(Error::TruncationTooSmall(format!(
            "cat state with |alpha0| = {:.3} needs n_max >= {needed}, got {n_max}",
            alpha0.norm()
        )));
    }
    let a2 = alpha0.norm_sqr();
    let phase = Complex64::from_polar(1.0, relative_phase);
    let mut c = Vec::with_capacity(n_max + 1);
    let mut truncated = 0.0;
    for n in 0..=n_max {
        // α^n/√(n!) e^{-|α|²/2} via logs, keeping the complex phase of α^n
        let coherent = if alpha0.norm() == 0.0 {
            if n == 0 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        } else {
            let log_mag =
                -0.5 * a2 + n as f64 * alpha0.norm().ln() - 0.5 * ln_gamma(n as f64 + 1.0);
            Complex64::from_polar(log_mag.exp(), n as f64 * alpha0.arg())
        };
        let parity = if n % 2 == 0 { 1.0 } else { -1.0 };
        let cn = (Complex64::new(1.0, 0.0) + phase * parity) * coherent;
        truncated += cn.norm_sqr();
        c.push(cn);
    }
    // untruncated squared norm: 2(1 + cos φ e^{-2|α₀|²})
    let full = 2.0 * (1.0 + relative_phase.cos() * (-2.0 * a2).exp());
    if full > 0.0 && (1.0 - truncated / full) > 1e-10 {
        return Err(Error::TruncationTooSmall(format!(
            "cat-state norm deficit {:.3e} exceeds 1e-10 at n_max = {n_max}",
            1.0 - truncated / full
        )));
    }
    InitialState::from_coefficients(c)
}

/// Truncated Fock-basis density matrix (row-major, hermitian, unit trace).
#[derive(Debug, Clone)]
pub struct FockDensityMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl FockDensityMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    /// ρ = |ψ⟩⟨ψ| with ρ_{mn} = c_m c*_n, embedded into `dim` levels.
    pub fn from_pure(state: &InitialState, dim: usize) -> Self {
        let mut rho = Self::zeros(dim);
        let c = state.coefficients();
        for m in 0..c.len().min(dim) {
            for n in 0..c.len().min(dim) {
                *rho.at_mut(m, n) = c[m] * c[n].conj();
            }
        }
        rho
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn at(&self, m: usize, n: usize) -> Complex64 {
        self.data[m * self.dim + n]
    }

    pub fn at_mut(&mut self, m: usize, n: usize) -> &mut Complex64 {
        &mut self.data[m * self.dim + n]
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|k| self.at(k, k)).sum()
    }

    /// max |ρ - ρ†| entry.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for m in 0..self.dim {
            for n in 0..self.dim {
                worst = worst.max((self.at(m, n) - self.at(n, m).conj()).norm());
            }
        }
        worst
    }

    /// Eigenvalues of the hermitian part (ascending), via the real symmetric
    /// embedding [[Re, -Im], [Im, Re]] whose spectrum doubles the complex one.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let d = self.dim;
        let mut m = nalgebra::DMatrix::<f64>::zeros(2 * d, 2 * d);
        for i in 0..d {
            for j in 0..d {
                let z = 0.5 * (self.at(i, j) + self.at(j, i).conj());
                m[(i, j)] = z.re;
                m[(i + d, j + d)] = z.re;
                m[(i + d, j)] = z.im;
                m[(i, j + d)] = -z.im;
            }
        }
        let mut eig: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
        eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // doubled spectrum: take every other value
        eig.into_iter().step_by(2).collect()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Trace distance ½‖ρ - σ‖₁.
    pub fn trace_distance(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let mut diff = self.clone();
        for (a, b) in diff.data.iter_mut().zip(other.data.iter()) {
            *a -= b;
        }
        0.5 * diff.eigenvalues().iter().map(|l| l.abs()).sum::<f64>()
    }

    /// Σ_n n ρ_{nn}.
    pub fn mean_particle_number(&self) -> f64 {
        (0..self.dim).map(|n| n as f64 * self.at(n, n).re).sum()
    }

    /// Frobenius norm of the off-diagonal part, the decoherence monitor.
    pub fn coherence_norm(&self) -> f64 {
        let mut acc = 0.0;
        for m in 0..self.dim {
            for n in 0..self.dim {
                if m != n {
                    acc += self.at(m, n).norm_sqr();
                }
            }
        }
        acc.sqrt()
    }

    /// CSV columns: m, n, Re, Im.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "m,n,Re,Im")?;
        for m in 0..self.dim {
            for n in 0..self.dim {
                let z = self.at(m, n);
                writeln!(w, "{m},{n},{},{}", z.re, z.im)?;
            }
        }
        Ok(())
    }

    /// Compact JSON envelope with metadata.
    pub fn to_json(&self, time: f64, statistics: Statistics) -> serde_json::Value {
        let rows: Vec<Vec<[f64; 2]>> = (0..self.dim)
            .map(|m| {
                (0..self.dim)
                    .map(|n| [self.at(m, n).re, self.at(m, n).im])
                    .collect()
            })
            .collect();
        serde_json::json!({
            "time": time,
            "n_max": self.dim - 1,
            "statistics": match statistics { Statistics::Boson => "boson", Statistics::Fermion => "fermion" },
            "rho": rows,
        })
    }
}

/// Default boson truncation: covers the initial-state tail and the thermal
/// tail with trace deficit below 1e-8 (the geometric kernel leaves
/// (v/(1+v))^{N+1}, so N ≳ 18.5(1+v) at that accuracy).
pub fn default_n_max(init: &InitialState, v_max: f64) -> usize {
    let thermal = (19.0 * (1.0 + v_max)).ceil() as usize;
    30usize.max(init.max_level() + 5).max(thermal)
}

/// Exact reduced state at one time from (u, v); boson kernel truncated at
/// `n_max` with the trace deficit checked against 1e-8.
pub fn evolve_state(
    init: &InitialState,
    u_t: Complex64,
    v_t: f64,
    statistics: Statistics,
    n_max: usize,
) -> Result<FockDensityMatrix> {
    evolve_state_with_tol(init, u_t, v_t, statistics, n_max, 1e-8)
}

/// [`evolve_state`] with an explicit truncation-tail tolerance, for callers
/// pinning a deliberately tight `n_max`.
pub fn evolve_state_with_tol(
    init: &InitialState,
    u_t: Complex64,
    v_t: f64,
    statistics: Statistics,
    n_max: usize,
    tail_tol: f64,
) -> Result<FockDensityMatrix> {
    let au = u_t.norm();
    if au > 1.0 + 1e-9 {
        return Err(Error::InvalidParameter(format!("|u| = {au} > 1")));
    }
    if v_t < -1e-9 {
        return Err(Error::InvalidParameter(format!("v = {v_t} < 0")));
    }
    let v = v_t.max(0.0);
    match statistics {
        Statistics::Fermion => {
            if v > 1.0 + 1e-9 {
                return Err(Error::InvalidParameter(format!("fermionic v = {v} > 1")));
            }
            if init.max_level() > 1 {
                return Err(Error::InvalidParameter(
                    "fermionic states live on levels {0, 1}".into(),
                ));
            }
            let c = init.coefficients();
            let c0 = c[0];
            let c1 = c.get(1).copied().unwrap_or(Complex64::new(0.0, 0.0));
            let n_t = v.min(1.0) + c1.norm_sqr() * au * au;
            let mut rho = FockDensityMatrix::zeros(2);
            *rho.at_mut(0, 0) = Complex64::new(1.0 - n_t, 0.0);
            *rho.at_mut(1, 1) = Complex64::new(n_t, 0.0);
            *rho.at_mut(0, 1) = c0 * c1.conj() * u_t.conj();
            *rho.at_mut(1, 0) = c1 * c0.conj() * u_t;
            Ok(rho)
        }
        Statistics::Boson => {
            let dim = n_max + 1;
            let n0 = init.max_level();
            if n0 > n_max {
                return Err(Error::TruncationTooSmall(format!(
                    "initial state occupies level {n0} beyond n_max = {n_max}"
                )));
            }
            let c = init.coefficients();
            let one_v = 1.0 + v;
            let w_abs = au / one_v;
            let theta = u_t.arg();
            let d1 = (1.0 - au * au / one_v).max(0.0);
            let ln_v = if v > 0.0 { v.ln() } else { f64::NEG_INFINITY };
            let ln_1v = one_v.ln();
            let ln_w = if w_abs > 0.0 {
                w_abs.ln()
            } else {
                f64::NEG_INFINITY
            };
            let ln_d1 = if d1 > 0.0 { d1.ln() } else { f64::NEG_INFINITY };
            let lg = |x: usize| ln_gamma(x as f64 + 1.0);

            let mut rho = FockDensityMatrix::zeros(dim);
            for m in 0..=n0 {
                if c[m].norm_sqr() == 0.0 {
                    continue;
                }
                for n in 0..=n0 {
                    if c[n].norm_sqr() == 0.0 {
                        continue;
                    }
                    let cc = c[m] * c[n].conj();
                    let phase = Complex64::from_polar(1.0, theta * (m as f64 - n as f64));
                    for k in 0..=m.min(n) {
                        if d1 == 0.0 && k > 0 {
                            break;
                        }
                        let (rm, rn) = (m - k, n - k);
                        if w_abs == 0.0 && rm + rn > 0 {
                            continue;
                        }
                        // log magnitude of d1^k · C_mk C_nk |w|^{rm+rn}
                        let l_base = k as f64 * if k > 0 { ln_d1 } else { 0.0 }
                            + 0.5 * lg(m)
                            - lg(rm)
                            - lg(k)
                            + 0.5 * lg(n)
                            - lg(rn)
                            + (rm + rn) as f64 * if rm + rn > 0 { ln_w } else { 0.0 };
                        let np_hi = dim - 1 - rm.max(rn);
                        for np in 0..=np_hi {
                            if v == 0.0 && np > 0 {
                                break;
                            }
                            // ρ̃_{n'} and the two raising-factor magnitudes
                            let l_kernel = np as f64 * if np > 0 { ln_v } else { 0.0 }
                                - (np as f64 + 1.0) * ln_1v
                                + 0.5 * (lg(np + rm) - lg(np))
                                + 0.5 * (lg(np + rn) - lg(np));
                            let mag = (l_base + l_kernel).exp();
                            if mag == 0.0 {
                                continue;
                            }
                            let term = cc * phase * mag;
                            let (p, q) = (np + rm, np + rn);
                            *rho.at_mut(p, q) += term;
                        }
                    }
                }
            }
            let deficit = (1.0 - rho.trace().re).abs();
            if deficit > tail_tol {
                return Err(Error::TruncationTooSmall(format!(
                    "trace deficit {deficit:.3e} exceeds {tail_tol:.1e}; raise n_max beyond {n_max}"
                )));
            }
            Ok(rho)
        }
    }
}

/// The four steady-state scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SteadyLabel {
    Thermal,
    ThermalLike,
    Qumemory,
    OscillatingQumemory,
}

impl std::fmt::Display for SteadyLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SteadyLabel::Thermal => "Thermal",
            SteadyLabel::ThermalLike => "ThermalLike",
            SteadyLabel::Qumemory => "Qumemory",
            SteadyLabel::OscillatingQumemory => "OscillatingQumemory",
        };
        f.write_str(s)
    }
}

/// Numbers backing a classification decision.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassificationEvidence {
    pub n_localized_modes: usize,
    /// Σ A_j when modes exist, otherwise the late-time windowed mean of |u|.
    pub u_asymptote: f64,
    /// late-time windowed mean of v(t, t)
    pub steady_v: f64,
    /// n̄(ω_S, T)
    pub thermal_occupation: f64,
    /// |steady_v - n̄| / n̄
    pub thermal_deviation: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SteadyStateClass {
    pub label: SteadyLabel,
    pub evidence: ClassificationEvidence,
}

/// Classification thresholds; the defaults draw the thermal band at 5% and
/// call a dissipative run converged once its tail power |u|² drops under 5%.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ClassifyOptions {
    /// relative band around n̄(ω_S, T) labelled Thermal
    pub thermal_band: f64,
    /// tail |u|² above which a dissipative run is not yet converged
    pub u_power_cut: f64,
    /// relative settling tolerance for the v tail between windows
    pub v_settle_tol: f64,
    /// averaging window (units of 1/ω_S)
    pub window: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            thermal_band: 0.05,
            u_power_cut: 0.05,
            v_settle_tol: 0.05,
            window: 5.0,
        }
    }
}

/// Sorts the steady state into the four scenarios.
///
/// Localized modes decide the memory classes outright: one mode is a
/// qumemory state, two or more oscillate forever. Without modes the run must
/// have relaxed within its horizon (tail |u|² below the cut and a settled v
/// tail), and the steady v is compared against n̄(ω_S, T).
pub fn classify_steady_state(
    modes: &[LocalizedMode],
    u: &PropagatorTrace,
    v: &CorrelationTrace,
    sys: &SystemParams,
    bath: &BathParams,
    opts: &ClassifyOptions,
) -> Result<SteadyStateClass> {
    let steady_v = v.tail_mean(opts.window);
    let nbar = occupation(sys.omega_s, bath, sys.statistics).unwrap_or(0.0);
    let deviation = (steady_v - nbar).abs() / nbar.max(1e-9);

    if !modes.is_empty() {
        let u_asymptote: f64 = modes.iter().map(|m| m.amplitude).sum();
        let label = if modes.len() >= 2 {
            SteadyLabel::OscillatingQumemory
        } else {
            SteadyLabel::Qumemory
        };
        return Ok(SteadyStateClass {
            label,
            evidence: ClassificationEvidence {
                n_localized_modes: modes.len(),
                u_asymptote,
                steady_v,
                thermal_occupation: nbar,
                thermal_deviation: deviation,
            },
        });
    }

    // dissipative: demand the horizon actually reached a settled tail
    let tail_u = u.tail_mean_abs(opts.window);
    let horizon = u.grid.horizon();
    if tail_u * tail_u > opts.u_power_cut {
        return Err(Error::Inconclusive { horizon });
    }
    let w = ((opts.window / v.grid.dt).ceil() as usize).clamp(1, v.grid.n_steps);
    if v.v.len() > 2 * w {
        let last = v.v[v.v.len() - w..].iter().sum::<f64>() / w as f64;
        let prev = v.v[v.v.len() - 2 * w..v.v.len() - w].iter().sum::<f64>() / w as f64;
        if (last - prev).abs() > opts.v_settle_tol * last.abs().max(1e-9) {
            return Err(Error::Inconclusive { horizon });
        }
    }

    let label = if deviation <= opts.thermal_band {
        SteadyLabel::Thermal
    } else {
        SteadyLabel::ThermalLike
    };
    Ok(SteadyStateClass {
        label,
        evidence: ClassificationEvidence {
            n_localized_modes: 0,
            u_asymptote: tail_u,
            steady_v,
            thermal_occupation: nbar,
            thermal_deviation: deviation,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greens::TimeGrid;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn cat_state_limits() {
        // degenerate cat: the vacuum
        let vac = cat_state(Complex64::new(0.0, 0.0), 0.0, 12).unwrap();
        assert_abs_diff_eq!(vac.coefficients()[0].norm(), 1.0, epsilon = 1e-12);
        // even cat keeps only even levels
        let even = cat_state(Complex64::new(1.0, 0.0), 0.0, 20).unwrap();
        for (n, c) in even.coefficients().iter().enumerate() {
            if n % 2 == 1 {
                assert_eq!(c.norm(), 0.0, "odd level {n} populated");
            }
        }
        let norm: f64 = even.coefficients().iter().map(|c| c.norm_sqr()).sum();
        assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-12);
        // mean particle number of the even cat: |α|² tanh(|α|²)
        assert_abs_diff_eq!(even.mean_occupation(), 1.0f64.tanh(), epsilon = 1e-10);
        assert_abs_diff_eq!(even.mean_occupation(), 0.7616, epsilon = 1e-4);
        // too small a truncation is rejected
        assert!(cat_state(Complex64::new(1.0, 0.0), 0.0, 10).is_err());
    }

    #[test]
    fn no_evolution_reproduces_the_projector() {
        let init = cat_state(Complex64::new(1.0, 0.0), 0.0, 20).unwrap();
        let rho =
            evolve_state(&init, Complex64::new(1.0, 0.0), 0.0, Statistics::Boson, 25).unwrap();
        let direct = FockDensityMatrix::from_pure(&init, 26);
        for m in 0..26 {
            for n in 0..26 {
                assert!(
                    (rho.at(m, n) - direct.at(m, n)).norm() < 1e-12,
                    "({m},{n})"
                );
            }
        }
    }

    #[test]
    fn dead_propagator_gives_thermal_state_for_any_input() {
        let v = 1.5415;
        let cat = cat_state(Complex64::new(1.0, 0.0), 0.0, 20).unwrap();
        let one = InitialState::fock(1);
        let a = evolve_state(&cat, Complex64::new(0.0, 0.0), v, Statistics::Boson, 45).unwrap();
        let b = evolve_state(&one, Complex64::new(0.0, 0.0), v, Statistics::Boson, 45).unwrap();
        assert!(a.trace_distance(&b) < 1e-10);
        // geometric weights and their mean
        for n in 0..6 {
            let expect = v.powi(n as i32) / (1.0 + v).powi(n as i32 + 1);
            assert!((a.at(n, n).re - expect).abs() < 1e-10);
        }
        assert_abs_diff_eq!(a.mean_particle_number(), v, epsilon = 1e-6);
        assert!(a.coherence_norm() < 1e-12);
    }

    #[test]
    fn fermion_two_level_closed_form() {
        let init = InitialState::fock(1);
        let rho =
            evolve_state(&init, Complex64::new(0.5, 0.0), 0.2, Statistics::Fermion, 1).unwrap();
        assert_abs_diff_eq!(rho.at(0, 0).re, 0.55, epsilon = 1e-12);
        assert_abs_diff_eq!(rho.at(1, 1).re, 0.45, epsilon = 1e-12);
        assert_eq!(rho.at(0, 1).norm(), 0.0);
        assert_abs_diff_eq!(rho.mean_particle_number(), 0.45, epsilon = 1e-12);

        // a coherent superposition keeps its off-diagonal ∝ u*
        let plus = InitialState::from_coefficients(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 0.0),
        ])
        .unwrap();
        let u = Complex64::from_polar(0.6, 0.8);
        let rho = evolve_state(&plus, u, 0.1, Statistics::Fermion, 1).unwrap();
        assert!((rho.at(0, 1) - 0.5 * u.conj()).norm() < 1e-12);
    }

    #[test]
    fn mean_number_identity_holds() {
        let init = cat_state(Complex64::new(1.0, 0.0), 0.5, 20).unwrap();
        let n0 = init.mean_occupation();
        for (u, v) in [
            (Complex64::from_polar(0.9, 1.0), 0.3),
            (Complex64::from_polar(0.4, -2.0), 1.7),
            (Complex64::new(0.0, 0.0), 2.5),
        ] {
            let n_max = default_n_max(&init, v);
            let rho = evolve_state(&init, u, v, Statistics::Boson, n_max).unwrap();
            let expect = u.norm_sqr() * n0 + v;
            assert!(
                (rho.mean_particle_number() - expect).abs() < 1e-6,
                "u={u}, v={v}"
            );
        }
    }

    #[test]
    fn evolved_states_are_physical() {
        let init = cat_state(Complex64::new(1.0, 0.0), 0.0, 20).unwrap();
        for (u, v) in [
            (Complex64::from_polar(0.8, 0.3), 0.5),
            (Complex64::from_polar(0.2, 2.9), 1.5415),
        ] {
            let n_max = default_n_max(&init, v);
            let rho = evolve_state(&init, u, v, Statistics::Boson, n_max).unwrap();
            assert!((rho.trace().re - 1.0).abs() < 1e-8);
            assert!(rho.trace().im.abs() < 1e-12);
            assert!(rho.hermiticity_defect() < 1e-15);
            assert!(rho.min_eigenvalue() > -1e-8);
        }
    }

    #[test]
    fn even_cat_parity_survives_unital_damping() {
        let init = cat_state(Complex64::new(1.0, 0.0), 0.0, 20).unwrap();
        let u = Complex64::from_polar(0.7, 0.3);
        let rho = evolve_state(&init, u, 0.0, Statistics::Boson, 30).unwrap();
        for m in 0..=30 {
            for n in 0..=30 {
                if (m + n) % 2 == 1 {
                    assert_eq!(rho.at(m, n).norm(), 0.0, "({m},{n})");
                }
            }
        }
    }

    #[test]
    fn truncation_tail_is_reported() {
        let init = InitialState::vacuum();
        // v = 3 at n_max = 10 leaves a visible geometric tail
        let err = evolve_state(&init, Complex64::new(0.0, 0.0), 3.0, Statistics::Boson, 10);
        assert!(matches!(err, Err(Error::TruncationTooSmall(_))));
    }

    fn synthetic_traces(
        u_fn: impl Fn(f64) -> Complex64,
        v_fn: impl Fn(f64) -> f64,
        horizon: f64,
    ) -> (PropagatorTrace, CorrelationTrace) {
        let grid = TimeGrid::from_horizon(horizon, 0.01).unwrap();
        let u: Vec<Complex64> = (0..=grid.n_steps).map(|k| u_fn(grid.time(k))).collect();
        let v: Vec<f64> = (0..=grid.n_steps).map(|k| v_fn(grid.time(k))).collect();
        let u_dot = vec![Complex64::new(0.0, 0.0); u.len()];
        let v_dot = vec![0.0; v.len()];
        (
            PropagatorTrace { grid, u, u_dot },
            CorrelationTrace { grid, v, v_dot },
        )
    }

    #[test]
    fn classification_rules() {
        let sys = SystemParams::boson(1.0).unwrap();
        let bath = BathParams::new(2.0, 0.0).unwrap();
        let nbar = occupation(1.0, &bath, Statistics::Boson).unwrap();
        let opts = ClassifyOptions::default();

        let decay = |t: f64| Complex64::from_polar((-0.5 * t).exp(), -t);
        let (u, v) = synthetic_traces(decay, |t| nbar * (1.0 - (-t).exp()), 40.0);
        let class = classify_steady_state(&[], &u, &v, &sys, &bath, &opts).unwrap();
        assert_eq!(class.label, SteadyLabel::Thermal);

        let (u, v) = synthetic_traces(decay, |t| 2.0 * nbar * (1.0 - (-t).exp()), 40.0);
        let class = classify_steady_state(&[], &u, &v, &sys, &bath, &opts).unwrap();
        assert_eq!(class.label, SteadyLabel::ThermalLike);
        assert!(class.evidence.thermal_deviation > 0.9);

        // not yet converged: slow decay over a short horizon
        let slow = |t: f64| Complex64::from_polar((-0.01 * t).exp(), -t);
        let (u, v) = synthetic_traces(slow, |t| nbar * (1.0 - (-0.01 * t).exp()), 20.0);
        assert!(matches!(
            classify_steady_state(&[], &u, &v, &sys, &bath, &opts),
            Err(Error::Inconclusive { .. })
        ));

        let mode = LocalizedMode {
            omega_b: -0.4,
            amplitude: 0.7,
            at_buffer_edge: false,
        };
        let (u, v) = synthetic_traces(decay, |t| nbar * (1.0 - (-t).exp()), 40.0);
        let class = classify_steady_state(&[mode], &u, &v, &sys, &bath, &opts).unwrap();
        assert_eq!(class.label, SteadyLabel::Qumemory);
        assert_abs_diff_eq!(class.evidence.u_asymptote, 0.7, epsilon = 1e-12);

        let class = classify_steady_state(&[mode, mode], &u, &v, &sys, &bath, &opts).unwrap();
        assert_eq!(class.label, SteadyLabel::OscillatingQumemory);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn cat_states_are_normalized(a in 0.2f64..1.6, arg in 0.0f64..6.28, phi in 0.0f64..6.28) {
            let alpha = Complex64::from_polar(a, arg);
            let cat = cat_state(alpha, phi, cat_truncation_rule(alpha) + 4).unwrap();
            let norm: f64 = cat.coefficients().iter().map(|c| c.norm_sqr()).sum();
            prop_assert!((norm - 1.0).abs() < 1e-10);
        }

        #[test]
        fn evolution_preserves_physicality(au in 0.0f64..1.0, th in 0.0f64..6.28, v in 0.0f64..2.0) {
            let init = InitialState::from_coefficients(vec![
                Complex64::new(0.6, 0.0),
                Complex64::new(0.0, 0.5),
                Complex64::new(-0.4, 0.2),
            ]).unwrap();
            let u = Complex64::from_polar(au, th);
            let n_max = default_n_max(&init, v);
            let rho = evolve_state(&init, u, v, Statistics::Boson, n_max).unwrap();
            prop_assert!((rho.trace().re - 1.0).abs() < 1e-8);
            prop_assert!(rho.hermiticity_defect() < 1e-14);
            prop_assert!(rho.min_eigenvalue() > -1e-8);
            let expect = u.norm_sqr() * init.mean_occupation() + v;
            prop_assert!((rho.mean_particle_number() - expect).abs() < 1e-6);
        }
    }
}
