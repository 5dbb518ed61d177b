//! Reservoir spectral densities, their time-domain kernels, the off-band
//! self-energy, localized-mode root finding, and critical couplings.
//!
//! The spectral density J(ω) is the only object characterizing the
//! environment. Supported families:
//!
//! * Ohmic family: J(ω) = 2πη ω (ω/ω_c)^{s-1} e^{-ω/ω_c} on ω ≥ 0,
//! * tight-binding band: J(ω) = η² √(4ξ² - (ω-ω_c)²) on |ω - ω_c| ≤ 2ξ,
//! * tabulated data on a monotone frequency grid (linear interpolation).
//!
//! All frequencies are in units of the system frequency ω_S (ħ = k_B = 1).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::numerics;

/// Particle statistics of the system mode and its reservoir.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistics {
    Boson,
    Fermion,
}

/// System mode: frequency ω_S (the energy reference) and statistics.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SystemParams {
    pub omega_s: f64,
    pub statistics: Statistics,
}

impl SystemParams {
    pub fn new(omega_s: f64, statistics: Statistics) -> Result<Self> {
        if !(omega_s > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "omega_s must be positive, got {omega_s}"
            )));
        }
        Ok(Self { omega_s, statistics })
    }

    pub fn boson(omega_s: f64) -> Result<Self> {
        Self::new(omega_s, Statistics::Boson)
    }

    pub fn fermion(omega_s: f64) -> Result<Self> {
        Self::new(omega_s, Statistics::Fermion)
    }
}

/// Reservoir thermal state: temperature T and chemical potential μ
/// (energy units, k_B = 1).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BathParams {
    pub temperature: f64,
    #[serde(default)]
    pub mu: f64,
}

impl BathParams {
    pub fn new(temperature: f64, mu: f64) -> Result<Self> {
        if !(temperature >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "temperature must be nonnegative, got {temperature}"
            )));
        }
        Ok(Self { temperature, mu })
    }
}

/// Mean occupation n̄(ε, T) = 1/[e^{(ε-μ)/T} ∓ 1] (- boson, + fermion).
///
/// T = 0 is the limiting step/zero function. Bosonic occupation diverges at
/// ε ≤ μ and is rejected.
pub fn occupation(epsilon: f64, bath: &BathParams, statistics: Statistics) -> Result<f64> {
    let x = epsilon - bath.mu;
    match statistics {
        Statistics::Boson => {
            if x <= 0.0 {
                return Err(Error::OccupationPole {
                    epsilon,
                    mu: bath.mu,
                });
            }
            if bath.temperature == 0.0 {
                return Ok(0.0);
            }
            let y = x / bath.temperature;
            if y > 700.0 {
                Ok(0.0)
            } else if y < 1e-10 {
                // expm1 keeps precision but the leading form is T/x
                Ok(1.0 / y.exp_m1())
            } else {
                Ok(1.0 / y.exp_m1())
            }
        }
        Statistics::Fermion => {
            if bath.temperature == 0.0 {
                return Ok(if x < 0.0 {
                    1.0
                } else if x > 0.0 {
                    0.0
                } else {
                    0.5
                });
            }
            let y = x / bath.temperature;
            if y > 700.0 {
                Ok(0.0)
            } else if y < -700.0 {
                Ok(1.0)
            } else {
                Ok(1.0 / (y.exp() + 1.0))
            }
        }
    }
}

/// A reservoir-induced bound state outside the spectral support.
///
/// `omega_b` solves ω = ω_S + Δ(ω) off-support and `amplitude` is the residue
/// A = [1 - Δ'(ω_b)]⁻¹ ∈ (0, 1]. `at_buffer_edge` marks roots that landed
/// within the band-edge evaluation buffer and were clamped to it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalizedMode {
    pub omega_b: f64,
    pub amplitude: f64,
    pub at_buffer_edge: bool,
}

/// Reservoir spectral density J(ω) ≥ 0.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SpectralDensity {
    /// J(ω) = 2πη ω (ω/ω_c)^{s-1} e^{-ω/ω_c}, support ω ≥ 0.
    OhmicFamily { eta: f64, s: f64, omega_c: f64 },
    /// J(ω) = η² √(4ξ² - (ω-ω_c)²), support |ω - ω_c| ≤ 2ξ.
    TightBinding { eta: f64, xi: f64, omega_c: f64 },
    /// Piecewise-linear data on a strictly increasing grid.
    Tabulated { omega: Vec<f64>, j: Vec<f64> },
}

/// Fractional width of the evaluation buffer kept around support endpoints
/// (in units of ω_S = 1): the semicircle self-energy derivative has a
/// square-root singularity at the band edge.
pub const EDGE_BUFFER: f64 = 1e-8;

/// Bisection tolerance for localized-mode roots (units of ω_S = 1).
pub const TOL_ROOT: f64 = 1e-10;

impl SpectralDensity {
    pub fn ohmic_family(eta: f64, s: f64, omega_c: f64) -> Result<Self> {
        if !(eta > 0.0 && s > 0.0 && omega_c > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "ohmic family requires eta, s, omega_c > 0, got eta={eta}, s={s}, omega_c={omega_c}"
            )));
        }
        Ok(Self::OhmicFamily { eta, s, omega_c })
    }

    pub fn tight_binding(eta: f64, xi: f64, omega_c: f64) -> Result<Self> {
        if !(eta > 0.0 && xi > 0.0 && omega_c > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tight binding requires eta, xi, omega_c > 0, got eta={eta}, xi={xi}, omega_c={omega_c}"
            )));
        }
        Ok(Self::TightBinding { eta, xi, omega_c })
    }

    pub fn tabulated(omega: Vec<f64>, j: Vec<f64>) -> Result<Self> {
        if omega.len() < 2 || omega.len() != j.len() {
            return Err(Error::InvalidParameter(
                "tabulated density needs matching grids with at least two points".into(),
            ));
        }
        if !omega.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::InvalidParameter(
                "tabulated frequency grid must be strictly increasing".into(),
            ));
        }
        if j.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "tabulated values must be finite and nonnegative".into(),
            ));
        }
        Ok(Self::Tabulated { omega, j })
    }

    /// Reads a two-column CSV `omega,J` with a header line.
    pub fn tabulated_from_csv<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let mut omega = Vec::new();
        let mut j = Vec::new();
        for record in rdr.records() {
            let record = record?;
            if record.len() < 2 {
                return Err(Error::Config("tabulated CSV rows need two columns".into()));
            }
            let w: f64 = record[0]
                .trim()
                .parse()
                .map_err(|e| Error::Config(format!("bad frequency value {:?}: {e}", &record[0])))?;
            let v: f64 = record[1]
                .trim()
                .parse()
                .map_err(|e| Error::Config(format!("bad J value {:?}: {e}", &record[1])))?;
            omega.push(w);
            j.push(v);
        }
        Self::tabulated(omega, j)
    }

    /// Closed support of J. The Ohmic family extends to +∞.
    pub fn support(&self) -> (f64, f64) {
        match self {
            Self::OhmicFamily { .. } => (0.0, f64::INFINITY),
            Self::TightBinding { xi, omega_c, .. } => (omega_c - 2.0 * xi, omega_c + 2.0 * xi),
            Self::Tabulated { omega, .. } => (omega[0], *omega.last().unwrap()),
        }
    }

    /// Finite interval carrying all but a negligible tail of J, used for
    /// quadratures. For the Ohmic family the tail beyond ω_c·max(40, 10s)
    /// carries relative mass below e^{-40}.
    pub fn quad_support(&self) -> (f64, f64) {
        match self {
            Self::OhmicFamily { s, omega_c, .. } => (0.0, omega_c * 40.0f64.max(10.0 * s)),
            _ => self.support(),
        }
    }

    /// J(ω); zero outside the support.
    pub fn evaluate(&self, omega: f64) -> f64 {
        match self {
            Self::OhmicFamily { eta, s, omega_c } => {
                if omega <= 0.0 {
                    0.0
                } else {
                    2.0 * std::f64::consts::PI
                        * eta
                        * omega_c
                        * (omega / omega_c).powf(*s)
                        * (-omega / omega_c).exp()
                }
            }
            Self::TightBinding { eta, xi, omega_c } => {
                let x = omega - omega_c;
                let d = 4.0 * xi * xi - x * x;
                if d <= 0.0 {
                    0.0
                } else {
                    eta * eta * d.sqrt()
                }
            }
            Self::Tabulated { omega: grid, j } => {
                if omega < grid[0] || omega > *grid.last().unwrap() {
                    return 0.0;
                }
                let idx = match grid.binary_search_by(|x| x.partial_cmp(&omega).unwrap()) {
                    Ok(i) => return j[i],
                    Err(i) => i,
                };
                let (x0, x1) = (grid[idx - 1], grid[idx]);
                let t = (omega - x0) / (x1 - x0);
                j[idx - 1] * (1.0 - t) + j[idx] * t
            }
        }
    }

    /// Integral ∫ J(ω) dω / 2π over the support (adaptive quadrature).
    pub fn total_weight(&self) -> Result<f64> {
        let (lo, hi) = self.quad_support();
        let mesh = self.envelope_mesh(lo, hi, 400);
        let v = numerics::integrate_mesh_real(|w| self.evaluate(w), &mesh, 1e-10)?;
        Ok(v / (2.0 * std::f64::consts::PI))
    }

    /// Memory kernel g(τ) = ∫ J(ω) e^{-iωτ} dω / 2π.
    ///
    /// Closed forms for the analytic families; quadrature for tabulated data
    /// (error reported with the achieved residual). Negative τ uses
    /// g(-τ) = g(τ)*.
    pub fn memory_kernel(&self, tau: f64) -> Result<Complex64> {
        if tau < 0.0 {
            return Ok(self.memory_kernel(-tau)?.conj());
        }
        match self {
            Self::OhmicFamily { eta, s, omega_c } => {
                // ∫_0^∞ ω_c (ω/ω_c)^s e^{-ω/ω_c} e^{-iωτ} dω = Γ(s+1) ω_c² / (1 + iω_c τ)^{s+1}
                let z = Complex64::new(1.0, omega_c * tau);
                let pow = Complex64::from_polar(z.norm().powf(-(s + 1.0)), -(s + 1.0) * z.arg());
                Ok(eta * gamma(s + 1.0) * omega_c * omega_c * pow)
            }
            Self::TightBinding { eta, xi, omega_c } => {
                // semicircle transform: g(τ) = η² 2ξ² [J₁(2ξτ)/(2ξτ)] e^{-iω_c τ}
                let x = 2.0 * xi * tau;
                let ratio = if x < 1e-6 {
                    0.5 - x * x / 16.0
                } else {
                    libm::j1(x) / x
                };
                let phase = Complex64::from_polar(1.0, -omega_c * tau);
                Ok(eta * eta * 2.0 * xi * xi * ratio * phase)
            }
            Self::Tabulated { .. } => self.memory_kernel_quadrature(tau),
        }
    }

    /// Direct quadrature of g(τ); the independent route used to validate the
    /// closed forms.
    pub fn memory_kernel_quadrature(&self, tau: f64) -> Result<Complex64> {
        if tau < 0.0 {
            return Ok(self.memory_kernel_quadrature(-tau)?.conj());
        }
        let (lo, hi) = self.quad_support();
        // Resolve both the envelope and the oscillation.
        let n_osc = ((hi - lo) * tau / std::f64::consts::PI).ceil() as usize;
        let mesh = self.envelope_mesh(lo, hi, 200 + 4 * n_osc.min(4000));
        let v = numerics::integrate_mesh(
            |w| Complex64::from_polar(self.evaluate(w), -w * tau),
            &mesh,
            1e-10,
        )?;
        Ok(v / (2.0 * std::f64::consts::PI))
    }

    /// Thermal noise kernel g̃(τ) = ∫ J(ω) n̄(ω, T) e^{-iωτ} dω / 2π.
    ///
    /// Conjugate symmetry g̃(-τ) = g̃(τ)* holds by construction. A bosonic bath
    /// needs μ at or below the support minimum with J vanishing there,
    /// otherwise the occupation pole makes the integral diverge.
    pub fn noise_kernel(
        &self,
        bath: &BathParams,
        statistics: Statistics,
        tau: f64,
    ) -> Result<Complex64> {
        if tau < 0.0 {
            return Ok(self.noise_kernel(bath, statistics, -tau)?.conj());
        }
        self.check_bath(bath, statistics)?;
        if bath.temperature == 0.0 && statistics == Statistics::Boson {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let env = self.thermal_envelope(bath, statistics);
        let (lo, hi) = self.quad_support();
        let n_osc = ((hi - lo) * tau / std::f64::consts::PI).ceil() as usize;
        let mesh = self.noise_mesh(bath, 200 + 4 * n_osc.min(4000));
        let v = numerics::integrate_mesh(|w| Complex64::from_polar(env(w), -w * tau), &mesh, 1e-9)?;
        Ok(v)
    }

    /// Validates bath parameters against this spectral density.
    pub(crate) fn check_bath(&self, bath: &BathParams, statistics: Statistics) -> Result<()> {
        if statistics == Statistics::Fermion {
            return Ok(());
        }
        let (lo, _) = self.support();
        if bath.mu > lo {
            return Err(Error::OccupationPole {
                epsilon: lo,
                mu: bath.mu,
            });
        }
        if bath.mu == lo && self.evaluate(lo) > 0.0 {
            return Err(Error::OccupationPole {
                epsilon: lo,
                mu: bath.mu,
            });
        }
        Ok(())
    }

    /// Envelope J(ω) n̄(ω) / 2π with the ω → μ occupation pole folded into the
    /// product (finite whenever J vanishes fast enough at the edge).
    pub(crate) fn thermal_envelope<'a>(
        &'a self,
        bath: &BathParams,
        statistics: Statistics,
    ) -> impl Fn(f64) -> f64 + 'a {
        let t = bath.temperature;
        let mu = bath.mu;
        move |w: f64| {
            let jw = self.evaluate(w);
            if jw == 0.0 {
                return 0.0;
            }
            let x = w - mu;
            let n = match statistics {
                Statistics::Boson => {
                    if t == 0.0 {
                        0.0
                    } else {
                        let y = x / t;
                        if y > 700.0 {
                            0.0
                        } else {
                            1.0 / y.exp_m1()
                        }
                    }
                }
                Statistics::Fermion => {
                    if t == 0.0 {
                        if x < 0.0 {
                            1.0
                        } else if x > 0.0 {
                            0.0
                        } else {
                            0.5
                        }
                    } else {
                        let y = x / t;
                        if y > 700.0 {
                            0.0
                        } else if y < -700.0 {
                            1.0
                        } else {
                            1.0 / (y.exp() + 1.0)
                        }
                    }
                }
            };
            jw * n / (2.0 * std::f64::consts::PI)
        }
    }

    /// Panel mesh resolving the envelope of J over [lo, hi].
    pub(crate) fn envelope_mesh(&self, lo: f64, hi: f64, n: usize) -> Vec<f64> {
        match self {
            Self::OhmicFamily { s, omega_c, .. } => {
                // grade toward ω = 0 where ω^s has unbounded derivatives for s < 1
                let n_low = n / 5;
                let split = (0.2 * omega_c).min(0.5 * (hi - lo));
                let mut mesh = if *s < 1.0 {
                    numerics::graded_mesh(lo, lo + split, 1e-10 * (hi - lo), n_low.max(8))
                } else {
                    numerics::linear_mesh(lo, lo + split, n_low.max(8))
                };
                mesh.pop();
                mesh.extend(numerics::linear_mesh(lo + split, hi, n - n_low));
                mesh
            }
            Self::TightBinding { .. } => {
                // grade toward both square-root band edges
                let w = hi - lo;
                let n3 = (n / 3).max(8);
                let mut mesh = numerics::graded_mesh(lo, lo + 0.25 * w, 1e-9 * w, n3);
                mesh.pop();
                let mut mid = numerics::linear_mesh(lo + 0.25 * w, hi - 0.25 * w, n3);
                mesh.append(&mut mid);
                mesh.pop();
                // mirror the graded mesh toward the upper edge
                let tmp = numerics::graded_mesh(0.0, 0.25 * w, 1e-9 * w, n3);
                mesh.extend(tmp.iter().rev().map(|&x| hi - x));
                mesh
            }
            Self::Tabulated { omega, .. } => {
                // table nodes are exact kink locations; subdivide long panels
                let mut mesh = Vec::with_capacity(n + omega.len());
                let target = (hi - lo) / n as f64;
                for w in omega.windows(2) {
                    let k = ((w[1] - w[0]) / target).ceil().max(1.0) as usize;
                    let sub = numerics::linear_mesh(w[0], w[1], k);
                    mesh.extend_from_slice(&sub[..sub.len() - 1]);
                }
                mesh.push(*omega.last().unwrap());
                mesh
            }
        }
    }

    /// Mesh for thermal quadratures: avoids the exact support minimum where a
    /// bosonic μ on the edge makes n̄ singular (the omitted sliver carries
    /// negligible integrable mass).
    pub(crate) fn noise_mesh(&self, _bath: &BathParams, n: usize) -> Vec<f64> {
        let (lo, hi) = self.quad_support();
        let off = 1e-12 * (hi - lo);
        let mut mesh = self.envelope_mesh(lo + off, hi, n);
        // prepend extra grading between lo+off and the first envelope panel
        let first = mesh[1];
        let mut graded = numerics::graded_mesh(lo + off, first, off, 24);
        graded.pop();
        graded.append(&mut mesh.split_off(1));
        graded.insert(0, mesh[0]);
        graded
    }

    /// Real self-energy Δ(ω) = ∫ J(ω')/(ω - ω') dω'/2π and its derivative,
    /// for ω strictly outside the closed support (no principal value needed).
    ///
    /// The semicircle band has the closed form
    /// Δ(ω) = (η²/2)[(ω-ω_c) - sgn(ω-ω_c)√((ω-ω_c)²-4ξ²)].
    pub fn self_energy(&self, omega: f64) -> Result<(f64, f64)> {
        let (lo, hi) = self.support();
        if omega >= lo && omega <= hi {
            return Err(Error::InsideSupport { omega, lo, hi });
        }
        match self {
            Self::TightBinding { eta, xi, omega_c } => {
                let x = omega - omega_c;
                let root = (x * x - 4.0 * xi * xi).sqrt();
                let delta = 0.5 * eta * eta * (x - x.signum() * root);
                let dprime = 0.5 * eta * eta * (1.0 - x.abs() / root);
                Ok((delta, dprime))
            }
            _ => {
                let (qlo, qhi) = self.quad_support();
                // grade the mesh toward the support edge the pole sits behind
                let dist = if omega < qlo { qlo - omega } else { omega - qhi };
                let first = (dist * 1e-3).min(1e-4 * (qhi - qlo)).max(1e-300);
                let mut mesh = if omega < qlo {
                    numerics::graded_mesh(qlo, qhi, first, 160)
                } else {
                    let tmp = numerics::graded_mesh(0.0, qhi - qlo, first, 160);
                    tmp.iter().rev().map(|&x| qhi - x).collect()
                };
                if let Self::Tabulated { omega: grid, .. } = self {
                    mesh.extend_from_slice(grid);
                    mesh.sort_by(|a, b| a.partial_cmp(b).unwrap());
                    mesh.dedup();
                }
                let two_pi = 2.0 * std::f64::consts::PI;
                let delta = numerics::integrate_mesh_real(
                    |w| self.evaluate(w) / (omega - w),
                    &mesh,
                    1e-11,
                )? / two_pi;
                let dprime = -numerics::integrate_mesh_real(
                    |w| self.evaluate(w) / ((omega - w) * (omega - w)),
                    &mesh,
                    1e-11,
                )? / two_pi;
                Ok((delta, dprime))
            }
        }
    }

    /// All localized modes: real roots of ω - ω_S - Δ(ω) = 0 outside the
    /// support, sorted ascending, each with residue A = [1 - Δ'(ω_b)]⁻¹.
    ///
    /// Δ' ≤ 0 off-support for any J ≥ 0, so f(ω) = ω - ω_S - Δ(ω) is strictly
    /// increasing on each side of the band and holds at most one root there;
    /// geometric bracket expansion plus bisection is unconditionally safe.
    pub fn localized_modes(&self, sys: &SystemParams) -> Result<Vec<LocalizedMode>> {
        let (lo, hi) = self.support();
        let buffer = EDGE_BUFFER * sys.omega_s;
        let scale = sys.omega_s.max(hi.is_finite().then_some(hi - lo).unwrap_or(0.0));
        let mut modes = Vec::new();

        let f = |w: f64| -> Result<f64> {
            let (delta, _) = self.self_energy(w)?;
            Ok(w - sys.omega_s - delta)
        };

        // side below the support: f increases toward the edge
        {
            let edge = lo - buffer;
            let f_edge = f(edge)?;
            if f_edge >= 0.0 {
                let mut width = scale.max(buffer * 2.0);
                let mut a = edge - width;
                for _ in 0..200 {
                    if f(a)? < 0.0 {
                        break;
                    }
                    width *= 2.0;
                    a = edge - width;
                }
                if f(a)? >= 0.0 {
                    return Err(Error::RootNonConvergence { lo: a, hi: edge });
                }
                let root = bisect(&f, a, edge)?;
                modes.push(self.mode_at(root, lo, hi, buffer)?);
            }
        }

        // side above the support (absent for the Ohmic family)
        if hi.is_finite() {
            let edge = hi + buffer;
            let f_edge = f(edge)?;
            if f_edge <= 0.0 {
                let mut width = scale.max(buffer * 2.0);
                let mut b = edge + width;
                for _ in 0..200 {
                    if f(b)? > 0.0 {
                        break;
                    }
                    width *= 2.0;
                    b = edge + width;
                }
                if f(b)? <= 0.0 {
                    return Err(Error::RootNonConvergence { lo: edge, hi: b });
                }
                let root = bisect(&f, edge, b)?;
                modes.push(self.mode_at(root, lo, hi, buffer)?);
            }
        }

        modes.sort_by(|a, b| a.omega_b.partial_cmp(&b.omega_b).unwrap());
        Ok(modes)
    }

    fn mode_at(&self, omega_b: f64, lo: f64, hi: f64, buffer: f64) -> Result<LocalizedMode> {
        let at_buffer_edge =
            (omega_b - (lo - buffer)).abs() <= buffer || (omega_b - (hi + buffer)).abs() <= buffer;
        let (_, dprime) = self.self_energy(omega_b)?;
        Ok(LocalizedMode {
            omega_b,
            amplitude: 1.0 / (1.0 - dprime),
            at_buffer_edge,
        })
    }

    /// Critical coupling above which at least one localized mode exists.
    ///
    /// Ohmic family: η_c = ω_S / [ω_c Γ(s)]. Tight binding: the first mode
    /// detaches at η² = 2 - |ω_S - ω_c|/ξ (both modes exist from
    /// η² = 2 + |ω_S - ω_c|/ξ); zero when ω_S already lies outside the band.
    /// Tabulated data: the returned value is the critical multiplier λ such
    /// that λ·J first binds a mode.
    pub fn critical_coupling(&self, sys: &SystemParams) -> Result<f64> {
        match self {
            Self::OhmicFamily { s, omega_c, .. } => Ok(sys.omega_s / (omega_c * gamma(*s))),
            Self::TightBinding { xi, omega_c, .. } => {
                let detuning = sys.omega_s - omega_c;
                Ok((2.0 - detuning.abs() / xi).max(0.0).sqrt())
            }
            Self::Tabulated { .. } => {
                let (lo, hi) = self.support();
                let buffer = EDGE_BUFFER * sys.omega_s;
                let mut lambdas = Vec::new();
                // below the band: root appears once λ·Δ(lo) ≤ lo - ω_S
                let (d_lo, _) = self.self_energy(lo - buffer)?;
                let gap_lo = (lo - buffer) - sys.omega_s;
                if gap_lo >= 0.0 {
                    lambdas.push(0.0);
                } else if d_lo < 0.0 {
                    lambdas.push(gap_lo / d_lo);
                }
                let (d_hi, _) = self.self_energy(hi + buffer)?;
                let gap_hi = (hi + buffer) - sys.omega_s;
                if gap_hi <= 0.0 {
                    lambdas.push(0.0);
                } else if d_hi > 0.0 {
                    lambdas.push(gap_hi / d_hi);
                }
                lambdas
                    .into_iter()
                    .min_by(|a, b| a.partial_cmp(b).unwrap())
                    .ok_or_else(|| {
                        Error::InvalidParameter("no coupling scale binds a mode".into())
                    })
            }
        }
    }

    /// Scales the overall coupling: Ohmic multiplies η, tight-binding
    /// multiplies η (J scales as η²), tabulated multiplies J directly.
    pub fn with_coupling(&self, eta_new: f64) -> Result<Self> {
        match self {
            Self::OhmicFamily { s, omega_c, .. } => {
                Self::ohmic_family(eta_new, *s, *omega_c)
            }
            Self::TightBinding { xi, omega_c, .. } => {
                Self::tight_binding(eta_new, *xi, *omega_c)
            }
            Self::Tabulated { omega, j } => {
                Self::tabulated(omega.clone(), j.iter().map(|v| v * eta_new).collect())
            }
        }
    }
}

fn bisect<F: Fn(f64) -> Result<f64>>(f: &F, mut a: f64, mut b: f64) -> Result<f64> {
    // invariant: f(a) < 0 <= f(b) possibly swapped; normalize orientation
    let fa = f(a)?;
    let fb = f(b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::RootNonConvergence { lo: a, hi: b });
    }
    let neg_left = fa < 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if (b - a).abs() < TOL_ROOT {
            return Ok(mid);
        }
        let fm = f(mid)?;
        if (fm < 0.0) == neg_left {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}
