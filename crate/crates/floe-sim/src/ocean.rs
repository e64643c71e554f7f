//! Stochastic spectral ocean surrogate.
//!
//! The ocean surface velocity is a sum of complex Fourier modes, each
//! advanced by a linear damped-oscillatory stochastic equation. Modes come
//! in two classes: geophysically balanced (GB) modes, which are slow and
//! incompressible, and gravity modes, which are fast and compressible. The
//! velocity eigenvectors and the gravity phase speeds come from the linear
//! rotating shallow-water eigenproblem at the configured Rossby number; GB
//! modes carry zero phase speed.
//!
//! Only half of the wavenumber lattice is stored: the mode at `-k` is the
//! implied complex conjugate of the stored mode at `k`, which keeps the
//! reconstructed physical field exactly real. Reported mode counts cover the
//! full lattice, i.e. twice the stored set. Wavenumbers are integers; a
//! wavenumber `k` has wavelength `side / |k|`.
//!
//! Mode coefficients (damping, phase, noise strength, forcing) are expressed
//! per ocean time unit (`time_scale` seconds); amplitudes are in m/s.

use crate::domain::Vec2;
use crate::error::{Error, Result};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::{SQRT_2, TAU};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeClass {
    /// Geophysically balanced: incompressible, zero phase speed.
    Balanced,
    /// Gravity wave, positive frequency branch.
    GravityPlus,
    /// Gravity wave, negative frequency branch.
    GravityMinus,
}

impl ModeClass {
    pub fn is_gravity(self) -> bool {
        !matches!(self, ModeClass::Balanced)
    }
}

/// Deterministic forcing f(t) = amplitude * exp(i * angular_rate * t), with
/// t in ocean time units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Forcing {
    pub amplitude: Complex64,
    pub angular_rate: f64,
}

impl Forcing {
    pub const ZERO: Forcing = Forcing {
        amplitude: Complex64::new(0.0, 0.0),
        angular_rate: 0.0,
    };

    pub fn at(&self, t: f64) -> Complex64 {
        if self.amplitude == Complex64::new(0.0, 0.0) {
            return self.amplitude;
        }
        self.amplitude * Complex64::cis(self.angular_rate * t)
    }
}

/// One stored complex spectral amplitude with its equation coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OceanMode {
    pub wavenumber: (i32, i32),
    pub class: ModeClass,
    /// Damping (1 / time unit), > 0.
    pub damping: f64,
    /// Phase speed (rad / time unit).
    pub phase: f64,
    /// Noise strength (amplitude / sqrt(time unit)), >= 0.
    pub sigma: f64,
    pub forcing: Forcing,
    pub amplitude: Complex64,
    /// Velocity eigenvector, unit norm.
    pub eigenvector: [Complex64; 2],
}

/// Per-class stochastic-equation coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassParams {
    pub damping: f64,
    pub sigma: f64,
    pub forcing: Forcing,
}

impl ClassParams {
    pub fn new(damping: f64, sigma: f64) -> Self {
        ClassParams {
            damping,
            sigma,
            forcing: Forcing::ZERO,
        }
    }
}

/// Construction parameters for [`build_mode_set`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OceanSpec {
    pub max_wavenumber: i32,
    pub rossby: f64,
    /// Domain side (m); sets the fundamental wavelength.
    pub side: f64,
    /// Seconds per ocean time unit.
    pub time_scale: f64,
    pub balanced: ClassParams,
    pub gravity: ClassParams,
    pub gravity_enabled: bool,
}

/// The full set of stored modes plus the ocean clock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OceanState {
    pub modes: Vec<OceanMode>,
    /// Simulation time (s).
    pub time: f64,
    pub rossby: f64,
    /// Seconds per ocean time unit.
    pub time_scale: f64,
    /// Domain side (m).
    pub side: f64,
}

/// Builds the mode set for wavenumbers inside the square lattice
/// `{-K..K}^2`. Every nonzero wavenumber carries one GB mode and two gravity
/// modes; `k = 0` carries the inertial gravity pair only, stored as a single
/// self-conjugate representative. Full-lattice counts are therefore
/// `GB = (2K+1)^2 - 1` and `gravity = 2 ((2K+1)^2 - 1) + 2`.
pub fn build_mode_set(spec: &OceanSpec) -> Result<OceanState> {
    if spec.max_wavenumber < 0 {
        return Err(Error::Parameter("max wavenumber must be >= 0".into()));
    }
    if !(spec.rossby.is_finite() && spec.rossby > 0.0) {
        return Err(Error::Parameter(format!(
            "Rossby number must be positive, got {}",
            spec.rossby
        )));
    }
    for (name, p) in [("balanced", &spec.balanced), ("gravity", &spec.gravity)] {
        if !(p.damping.is_finite() && p.damping > 0.0) {
            return Err(Error::Parameter(format!(
                "{name} damping must be positive, got {}",
                p.damping
            )));
        }
        if !(p.sigma.is_finite() && p.sigma >= 0.0) {
            return Err(Error::Parameter(format!(
                "{name} noise strength must be nonnegative, got {}",
                p.sigma
            )));
        }
    }
    if !(spec.time_scale.is_finite() && spec.time_scale > 0.0) {
        return Err(Error::Parameter("ocean time scale must be positive".into()));
    }

    let k = spec.max_wavenumber;
    let mut modes = Vec::new();

    if spec.gravity_enabled {
        // Inertial pair at k = 0: the stored representative's conjugate is
        // the opposite branch.
        modes.push(gravity_mode(spec, (0, 0), 1.0));
    }
    for k1 in 0..=k {
        for k2 in -k..=k {
            let stored_half = k1 > 0 || (k1 == 0 && k2 > 0);
            if !stored_half {
                continue;
            }
            modes.push(balanced_mode(spec, (k1, k2)));
            if spec.gravity_enabled {
                modes.push(gravity_mode(spec, (k1, k2), 1.0));
                modes.push(gravity_mode(spec, (k1, k2), -1.0));
            }
        }
    }

    Ok(OceanState {
        modes,
        time: 0.0,
        rossby: spec.rossby,
        time_scale: spec.time_scale,
        side: spec.side,
    })
}

fn balanced_mode(spec: &OceanSpec, k: (i32, i32)) -> OceanMode {
    let (k1, k2) = (k.0 as f64, k.1 as f64);
    let norm = (k1 * k1 + k2 * k2).sqrt();
    OceanMode {
        wavenumber: k,
        class: ModeClass::Balanced,
        damping: spec.balanced.damping,
        phase: 0.0,
        sigma: spec.balanced.sigma,
        forcing: spec.balanced.forcing,
        amplitude: Complex64::new(0.0, 0.0),
        eigenvector: [
            Complex64::new(0.0, -k2 / norm),
            Complex64::new(0.0, k1 / norm),
        ],
    }
}

fn gravity_mode(spec: &OceanSpec, k: (i32, i32), branch: f64) -> OceanMode {
    let ro = spec.rossby;
    let (k1, k2) = (k.0 as f64, k.1 as f64);
    let ksq = k1 * k1 + k2 * k2;
    let omega = branch * (1.0 + ro * ro * ksq).sqrt() / ro;

    let eigenvector = if k == (0, 0) {
        // Circular inertial oscillation.
        [
            Complex64::new(1.0 / SQRT_2, 0.0),
            Complex64::new(0.0, branch / SQRT_2),
        ]
    } else {
        let raw = [
            Complex64::new(-omega * k1, k2 / ro),
            Complex64::new(-omega * k2, -k1 / ro),
        ];
        let norm = (raw[0].norm_sqr() + raw[1].norm_sqr()).sqrt();
        [raw[0] / norm, raw[1] / norm]
    };

    OceanMode {
        wavenumber: k,
        class: if branch >= 0.0 {
            ModeClass::GravityPlus
        } else {
            ModeClass::GravityMinus
        },
        damping: spec.gravity.damping,
        phase: omega,
        sigma: spec.gravity.sigma,
        forcing: spec.gravity.forcing,
        amplitude: Complex64::new(0.0, 0.0),
        eigenvector,
    }
}

impl OceanState {
    /// Number of modes over the full lattice (stored plus implied
    /// conjugates).
    pub fn mode_count(&self) -> usize {
        2 * self.modes.len()
    }

    pub fn balanced_count(&self) -> usize {
        2 * self
            .modes
            .iter()
            .filter(|m| m.class == ModeClass::Balanced)
            .count()
    }

    pub fn gravity_count(&self) -> usize {
        2 * self.modes.iter().filter(|m| m.class.is_gravity()).count()
    }

    /// Largest phase speed in 1/s, for the time-step resolution check.
    pub fn max_phase_per_second(&self) -> f64 {
        self.modes
            .iter()
            .map(|m| m.phase.abs())
            .fold(0.0, f64::max)
            / self.time_scale
    }

    /// Errors when an explicit step of `dt` seconds would not resolve the
    /// fastest oscillation.
    pub fn check_time_step(&self, dt: f64) -> Result<()> {
        let margin = self.max_phase_per_second() * dt;
        if margin > 0.5 {
            return Err(Error::Config(format!(
                "time step {dt} s does not resolve the fastest ocean phase (phase * dt = {margin:.3} > 0.5)"
            )));
        }
        Ok(())
    }

    /// One explicit Euler-Maruyama step of `dt` seconds. Each stored mode
    /// receives independent complex white noise normalized so the stationary
    /// amplitude variance is sigma^2 / (2 d).
    pub fn step<R: Rng + ?Sized>(&mut self, dt: f64, rng: &mut R) {
        let dtau = dt / self.time_scale;
        let tau = self.time / self.time_scale;
        let sqrt_dtau = dtau.sqrt();
        for mode in &mut self.modes {
            let drift =
                Complex64::new(-mode.damping, mode.phase) * mode.amplitude + mode.forcing.at(tau);
            let xi1: f64 = rng.sample(StandardNormal);
            let xi2: f64 = rng.sample(StandardNormal);
            let noise = Complex64::new(xi1, xi2) * (mode.sigma * sqrt_dtau / SQRT_2);
            mode.amplitude += drift * dtau + noise;
        }
        self.time += dt;
    }

    /// Reconstructed (real) surface velocity at a point. Each stored mode
    /// contributes twice the real part of its term, standing in for itself
    /// and its implied conjugate at `-k`.
    pub fn velocity_at(&self, x: Vec2) -> Vec2 {
        let scale = TAU / self.side;
        let mut u = Vec2::ZERO;
        for mode in &self.modes {
            let theta = scale * (mode.wavenumber.0 as f64 * x.x + mode.wavenumber.1 as f64 * x.y);
            let z = mode.amplitude * Complex64::cis(theta);
            u.x += 2.0 * (z * mode.eigenvector[0]).re;
            u.y += 2.0 * (z * mode.eigenvector[1]).re;
        }
        u
    }

    /// Spectral curl of the reconstructed velocity at a point (1/s).
    pub fn curl_at(&self, x: Vec2) -> f64 {
        let scale = TAU / self.side;
        let mut curl = 0.0;
        for mode in &self.modes {
            let (k1, k2) = (mode.wavenumber.0 as f64, mode.wavenumber.1 as f64);
            let theta = scale * (k1 * x.x + k2 * x.y);
            let rot = k1 * mode.eigenvector[1] - k2 * mode.eigenvector[0];
            let z = Complex64::new(0.0, scale) * rot * mode.amplitude * Complex64::cis(theta);
            curl += 2.0 * z.re;
        }
        curl
    }

    /// Draws every stored amplitude from its stationary distribution
    /// (circular complex normal with variance sigma^2 / (2 d)).
    pub fn randomize_stationary<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for mode in &mut self.modes {
            let std = (mode.sigma * mode.sigma / (2.0 * mode.damping)).sqrt() / SQRT_2;
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            mode.amplitude = Complex64::new(re * std, im * std);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(k_max: i32) -> OceanSpec {
        OceanSpec {
            max_wavenumber: k_max,
            rossby: 0.1,
            side: 50_000.0,
            time_scale: 86_400.0,
            balanced: ClassParams::new(0.5, 0.1),
            gravity: ClassParams::new(0.5, 0.05),
            gravity_enabled: true,
        }
    }

    #[test]
    fn mode_counts_small_set() {
        let state = build_mode_set(&spec(1)).unwrap();
        assert_eq!(state.mode_count(), 26);
        assert_eq!(state.balanced_count(), 8);
        assert_eq!(state.gravity_count(), 18);
    }

    #[test]
    fn mode_counts_large_set() {
        let state = build_mode_set(&spec(4)).unwrap();
        assert_eq!(state.mode_count(), 242);
        assert_eq!(state.balanced_count(), 80);
        assert_eq!(state.gravity_count(), 162);
    }

    #[test]
    fn mode_counts_inertial_only() {
        let state = build_mode_set(&spec(0)).unwrap();
        assert_eq!(state.balanced_count(), 0);
        assert_eq!(state.gravity_count(), 2);
    }

    #[test]
    fn balanced_only_set() {
        let mut s = spec(1);
        s.gravity_enabled = false;
        let state = build_mode_set(&s).unwrap();
        assert_eq!(state.mode_count(), 8);
        assert_eq!(state.gravity_count(), 0);
    }

    #[test]
    fn balanced_modes_are_spectrally_incompressible() {
        // k . r is zero in exact arithmetic; the two stored components round
        // independently, so the evaluated residual sits at machine zero.
        let state = build_mode_set(&spec(4)).unwrap();
        for mode in &state.modes {
            if mode.class == ModeClass::Balanced {
                let (k1, k2) = (mode.wavenumber.0 as f64, mode.wavenumber.1 as f64);
                let div = k1 * mode.eigenvector[0] + k2 * mode.eigenvector[1];
                assert!(div.norm() < 1e-15 * (k1.abs() + k2.abs()).max(1.0));
            }
        }
    }

    #[test]
    fn gravity_phase_scaling() {
        let state = build_mode_set(&spec(1)).unwrap();
        for mode in &state.modes {
            match mode.class {
                ModeClass::Balanced => assert_eq!(mode.phase, 0.0),
                _ => {
                    let (k1, k2) = (mode.wavenumber.0 as f64, mode.wavenumber.1 as f64);
                    let expected = (1.0 + 0.01 * (k1 * k1 + k2 * k2)).sqrt() / 0.1;
                    assert!((mode.phase.abs() - expected).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn gravity_modes_irrotational_without_rotation() {
        let mut s = spec(2);
        s.rossby = 1e9;
        let state = build_mode_set(&s).unwrap();
        for mode in &state.modes {
            if mode.class.is_gravity() && mode.wavenumber != (0, 0) {
                let (k1, k2) = (mode.wavenumber.0 as f64, mode.wavenumber.1 as f64);
                let rot = (k1 * mode.eigenvector[1] - k2 * mode.eigenvector[0]).norm();
                assert!(rot < 1e-6, "k={:?} rot={rot}", mode.wavenumber);
            }
        }
    }

    #[test]
    fn eigenvectors_unit_norm() {
        let state = build_mode_set(&spec(3)).unwrap();
        for mode in &state.modes {
            let n = (mode.eigenvector[0].norm_sqr() + mode.eigenvector[1].norm_sqr()).sqrt();
            assert!((n - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn deterministic_euler_step() {
        let mut s = spec(0);
        s.time_scale = 1.0;
        s.gravity = ClassParams::new(0.5, 0.0);
        let mut state = build_mode_set(&s).unwrap();
        state.modes[0].amplitude = Complex64::new(1.0, 0.0);
        state.modes[0].phase = 0.0;
        let mut rng = crate::seeds::stream(0, 0);
        state.step(0.1, &mut rng);
        let a = state.modes[0].amplitude;
        assert!((a - Complex64::new(0.95, 0.0)).norm() < 1e-12, "{a}");
    }

    #[test]
    fn rotation_modulus_growth_documented() {
        // Explicit Euler inflates the modulus of an undamped oscillation by
        // sqrt(1 + (phase * dt)^2) per step.
        let mut s = spec(0);
        s.time_scale = 1.0;
        s.gravity = ClassParams::new(1e-300, 0.0);
        let mut state = build_mode_set(&s).unwrap();
        state.modes[0].damping = 0.0;
        state.modes[0].phase = 2.0;
        state.modes[0].amplitude = Complex64::new(0.7, -0.2);
        let before = state.modes[0].amplitude.norm_sqr();
        let mut rng = crate::seeds::stream(0, 0);
        state.step(0.1, &mut rng);
        let after = state.modes[0].amplitude.norm_sqr();
        assert!((after / before - (1.0 + 0.04)).abs() < 1e-12);
    }

    #[test]
    fn stationary_variance_matches_complex_ou() {
        // Pool the time-averaged |u|^2 of 20 independent modes.
        let mut s = spec(0);
        s.time_scale = 1.0;
        s.gravity = ClassParams::new(0.5, 0.1);
        let mut state = build_mode_set(&s).unwrap();
        let template = state.modes[0];
        state.modes = vec![template; 20];
        for m in &mut state.modes {
            m.phase = 0.0;
        }
        let mut rng = crate::seeds::stream(314, 0);
        let dt = 0.01;
        let steps = 200_000;
        let burn = steps / 10;
        let mut acc = 0.0;
        let mut count = 0usize;
        for i in 0..steps {
            state.step(dt, &mut rng);
            if i >= burn {
                acc += state.modes.iter().map(|m| m.amplitude.norm_sqr()).sum::<f64>();
                count += state.modes.len();
            }
        }
        let variance = acc / count as f64;
        let expected = 0.1f64.powi(2) / (2.0 * 0.5);
        assert!(
            (variance - expected).abs() / expected < 0.05,
            "variance {variance} vs {expected}"
        );
    }

    #[test]
    fn stationary_mean_matches_forced_fixed_point() {
        let mut s = spec(0);
        s.time_scale = 1.0;
        s.gravity = ClassParams {
            damping: 0.5,
            sigma: 0.1,
            forcing: Forcing {
                amplitude: Complex64::new(0.05, 0.0),
                angular_rate: 0.0,
            },
        };
        let mut state = build_mode_set(&s).unwrap();
        let template = state.modes[0];
        state.modes = vec![template; 40];
        for m in &mut state.modes {
            m.phase = 0.3;
        }
        let mut rng = crate::seeds::stream(99, 0);
        let dt = 0.01;
        let steps = 200_000;
        let burn = steps / 10;
        let mut acc = Complex64::new(0.0, 0.0);
        let mut count = 0usize;
        for i in 0..steps {
            state.step(dt, &mut rng);
            if i >= burn {
                for m in &state.modes {
                    acc += m.amplitude;
                }
                count += state.modes.len();
            }
        }
        let mean = acc / count as f64;
        let expected = Complex64::new(0.05, 0.0) / Complex64::new(0.5, -0.3);
        assert!(
            (mean - expected).norm() / expected.norm() < 0.05,
            "mean {mean} vs {expected}"
        );
    }

    #[test]
    fn zero_amplitudes_give_zero_fields() {
        let state = build_mode_set(&spec(1)).unwrap();
        let x = Vec2::new(12_345.0, 6_789.0);
        assert_eq!(state.velocity_at(x), Vec2::ZERO);
        assert_eq!(state.curl_at(x), 0.0);
    }

    #[test]
    fn reconstruction_matches_full_lattice_expansion() {
        // Oracle: expand stored modes and their explicit conjugate mirrors
        // as a complex sum; the result must be real and equal velocity_at.
        let mut state = build_mode_set(&spec(2)).unwrap();
        let mut rng = crate::seeds::stream(5, 1);
        state.randomize_stationary(&mut rng);
        let scale = TAU / state.side;
        for trial in 0..1000 {
            let x = Vec2::new(
                (trial as f64 * 37.7) % state.side,
                (trial as f64 * 91.3) % state.side,
            );
            let mut u = [Complex64::new(0.0, 0.0); 2];
            for mode in &state.modes {
                let theta =
                    scale * (mode.wavenumber.0 as f64 * x.x + mode.wavenumber.1 as f64 * x.y);
                for c in 0..2 {
                    let term = mode.amplitude * mode.eigenvector[c] * Complex64::cis(theta);
                    u[c] += term + term.conj();
                }
            }
            let direct = state.velocity_at(x);
            let magnitude = direct.norm().max(1e-12);
            assert!(u[0].im.abs() < 1e-10 * magnitude);
            assert!(u[1].im.abs() < 1e-10 * magnitude);
            assert!((u[0].re - direct.x).abs() < 1e-10 * magnitude);
            assert!((u[1].re - direct.y).abs() < 1e-10 * magnitude);
        }
    }

    #[test]
    fn single_balanced_mode_velocity_pattern() {
        // k = (1,0) with a real amplitude gives u ~ (0, -sin(2 pi x / side)).
        let mut state = build_mode_set(&spec(1)).unwrap();
        let amp = 0.07;
        for m in &mut state.modes {
            m.amplitude = if m.class == ModeClass::Balanced && m.wavenumber == (1, 0) {
                Complex64::new(amp, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
        }
        for i in 0..32 {
            let x = Vec2::new(i as f64 * state.side / 32.0, 17_000.0);
            let u = state.velocity_at(x);
            assert!(u.x.abs() < 1e-15);
            let expected = -2.0 * amp * (TAU * x.x / state.side).sin();
            assert!((u.y - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn balanced_field_divergence_free_on_grid() {
        // Centered finite differences on a 64x64 grid; for the small mode
        // set the discrete divergence of the balanced field vanishes to
        // rounding.
        let mut state = build_mode_set(&spec(1)).unwrap();
        let mut rng = crate::seeds::stream(8, 2);
        state.randomize_stationary(&mut rng);
        for m in &mut state.modes {
            if m.class.is_gravity() {
                m.amplitude = Complex64::new(0.0, 0.0);
            }
        }
        let n = 64;
        let h = state.side / n as f64;
        let mut max_div: f64 = 0.0;
        let mut max_u: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let x = Vec2::new(i as f64 * h, j as f64 * h);
                max_u = max_u.max(state.velocity_at(x).norm());
                let dudx = (state.velocity_at(Vec2::new(x.x + h, x.y)).x
                    - state.velocity_at(Vec2::new(x.x - h, x.y)).x)
                    / (2.0 * h);
                let dvdy = (state.velocity_at(Vec2::new(x.x, x.y + h)).y
                    - state.velocity_at(Vec2::new(x.x, x.y - h)).y)
                    / (2.0 * h);
                max_div = max_div.max((dudx + dvdy).abs());
            }
        }
        assert!(max_div < 1e-6 * max_u, "div {max_div} vs u {max_u}");
    }

    #[test]
    fn curl_matches_finite_differences() {
        let mut state = build_mode_set(&spec(1)).unwrap();
        let mut rng = crate::seeds::stream(21, 3);
        state.randomize_stationary(&mut rng);
        let h = 2.0;
        let mut max_curl: f64 = 0.0;
        let mut max_err: f64 = 0.0;
        for trial in 0..200 {
            let x = Vec2::new(
                (trial as f64 * 211.7) % state.side,
                (trial as f64 * 383.1) % state.side,
            );
            let fd = (state.velocity_at(Vec2::new(x.x + h, x.y)).y
                - state.velocity_at(Vec2::new(x.x - h, x.y)).y)
                / (2.0 * h)
                - (state.velocity_at(Vec2::new(x.x, x.y + h)).x
                    - state.velocity_at(Vec2::new(x.x, x.y - h)).x)
                    / (2.0 * h);
            let spectral = state.curl_at(x);
            max_curl = max_curl.max(spectral.abs());
            max_err = max_err.max((spectral - fd).abs());
        }
        assert!(max_err < 1e-6 * max_curl, "err {max_err} curl {max_curl}");
    }

    #[test]
    fn stationary_velocity_scale_is_decimeters_per_second() {
        let mut state = build_mode_set(&spec(1)).unwrap();
        let mut rng = crate::seeds::stream(33, 4);
        state.randomize_stationary(&mut rng);
        let n = 32;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                let x = Vec2::new(
                    i as f64 * state.side / n as f64,
                    j as f64 * state.side / n as f64,
                );
                acc += state.velocity_at(x).norm_sq();
            }
        }
        let rms = (acc / (n * n) as f64).sqrt();
        assert!((0.03..=0.6).contains(&rms), "rms velocity {rms}");
    }

    #[test]
    fn time_step_resolution_check() {
        let state = build_mode_set(&spec(1)).unwrap();
        state.check_time_step(25.0).unwrap();
        let mut fast = state.clone();
        for m in &mut fast.modes {
            m.phase *= 1e4;
        }
        assert!(fast.check_time_step(25.0).is_err());
    }
}
