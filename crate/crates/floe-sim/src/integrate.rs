//! Explicit Euler-Maruyama integration of the coupled floe-ocean system.
//!
//! Every step accumulates contact loads, samples the ocean velocity and curl
//! at each floe center, applies quadratic ocean drag, and advances positions
//! and velocities explicitly. Hookean contacts at geophysical stiffness
//! oscillate far faster than the outer step, so the floe subsystem is
//! sub-stepped whenever an active contact's oscillation period falls below
//! `substep_margin` outer steps; the ocean samples and mode amplitudes stay
//! frozen within one outer step. Optional per-floe additive noise (the
//! superfloe-derived inflation used by the assimilation forecast model)
//! enters the velocity equation at force scale divided by the mass, and the
//! angular equation at torque scale divided by the moment of inertia.

use crate::contact::{accumulate_loads_full, BodyLoads, ContactObserver, LoadPath};
use crate::domain::{wrap_angle, Vec2};
use crate::error::{Error, Result};
use crate::floe::{Floe, FloeField, MaterialParams};
use crate::ocean::OceanState;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// The unit the integrator advances: floes, ocean modes, and the clock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationState {
    pub field: FloeField,
    pub ocean: OceanState,
    /// Simulation time (s).
    pub time: f64,
}

impl SimulationState {
    pub fn new(field: FloeField, ocean: OceanState) -> Result<Self> {
        if (field.domain.side - ocean.side).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "floe domain side {} does not match ocean side {}",
                field.domain.side, ocean.side
            )));
        }
        Ok(SimulationState {
            field,
            ocean,
            time: 0.0,
        })
    }
}

/// Per-floe additive noise standard deviations; disabled behaves as zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InflationNoise {
    pub enabled: bool,
    /// Force-scale std dev per floe and component (N).
    pub linear: Vec<Vec2>,
    /// Torque-scale std dev per floe (N m).
    pub angular: Vec<f64>,
}

impl InflationNoise {
    pub fn disabled() -> Self {
        InflationNoise {
            enabled: false,
            linear: Vec::new(),
            angular: Vec::new(),
        }
    }

    fn validate(&self, floe_count: usize) -> Result<()> {
        if !self.enabled {
            return Ok(());
        }
        if self.linear.len() != floe_count || self.angular.len() != floe_count {
            return Err(Error::Config(format!(
                "inflation noise covers {} floes but the field has {}",
                self.linear.len(),
                floe_count
            )));
        }
        for (i, (l, a)) in self.linear.iter().zip(&self.angular).enumerate() {
            if l.x < 0.0 || l.y < 0.0 || *a < 0.0 {
                return Err(Error::Config(format!(
                    "negative inflation std dev for floe {i}"
                )));
            }
        }
        Ok(())
    }
}

/// Integrator controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSettings {
    /// Outer time step (s).
    pub dt: f64,
    pub load_path: LoadPath,
    /// Sub-step stiff contacts (on by default).
    pub substepping: bool,
    /// Required ratio of contact oscillation period to sub-step length.
    pub substep_margin: f64,
    pub drag_enabled: bool,
}

impl Default for StepSettings {
    fn default() -> Self {
        StepSettings {
            dt: 25.0,
            load_path: LoadPath::Grid,
            substepping: true,
            substep_margin: 10.0,
            drag_enabled: true,
        }
    }
}

/// Quadratic ocean drag force on a floe (N).
pub fn drag_force(floe: &Floe, ocean_velocity: Vec2, mat: &MaterialParams) -> Vec2 {
    let alpha = mat.ocean_drag * mat.ocean_density * floe.area();
    let slip = ocean_velocity - floe.velocity;
    slip * (alpha * slip.norm())
}

/// Quadratic ocean drag torque on a floe (N m); `curl` is the full curl of
/// the ocean velocity at the floe center.
pub fn drag_torque(floe: &Floe, curl: f64, mat: &MaterialParams) -> f64 {
    let beta = mat.ocean_drag * mat.ocean_density * PI * floe.radius.powi(4);
    let spin_slip = 0.5 * curl - floe.angular_velocity;
    beta * spin_slip * spin_slip.abs()
}

/// Hard cap on sub-steps per outer step; exceeding it means the contact
/// stiffness has collapsed the step beyond anything useful.
const MAX_SUBSTEPS: f64 = 1e7;

/// Advances the coupled system by one outer step. See [`step_observed`].
pub fn step<R: Rng + ?Sized>(
    state: &mut SimulationState,
    settings: &StepSettings,
    mat: &MaterialParams,
    inflation: &InflationNoise,
    rng: &mut R,
) -> Result<()> {
    step_observed(state, settings, mat, inflation, rng, None)
}

/// Advances the coupled system by one outer step, reporting the contacts
/// found at the step start to the observer (one report per outer step, at
/// the integration cadence).
pub fn step_observed<R: Rng + ?Sized>(
    state: &mut SimulationState,
    settings: &StepSettings,
    mat: &MaterialParams,
    inflation: &InflationNoise,
    rng: &mut R,
    mut observer: Option<&mut dyn ContactObserver>,
) -> Result<()> {
    inflation.validate(state.field.len())?;

    // Ocean samples at floe centers, frozen for the whole outer step: floes
    // move meters per step while the ocean varies over kilometers.
    let samples: Vec<(Vec2, f64)> = state
        .field
        .floes
        .iter()
        .map(|f| {
            if settings.drag_enabled {
                (
                    state.ocean.velocity_at(f.position),
                    state.ocean.curl_at(f.position),
                )
            } else {
                (Vec2::ZERO, 0.0)
            }
        })
        .collect();

    // Explicit quadratic drag destabilizes once the linearized drag rate
    // exceeds the sub-step: cap h at a quarter of the fastest drag
    // relaxation time. Inactive at geophysical speeds; it matters only for
    // floes ejected by deep contacts, and must track the velocities as they
    // change within the step.
    let drag_cap = |state: &SimulationState| -> f64 {
        if !settings.drag_enabled {
            return f64::INFINITY;
        }
        state
            .field
            .floes
            .iter()
            .zip(&samples)
            .map(|(f, s)| {
                let slip = (s.0 - f.velocity).norm();
                let alpha = mat.ocean_drag * mat.ocean_density * f.area();
                let spin_slip = (0.5 * s.1 - f.angular_velocity).abs();
                let beta = mat.ocean_drag * mat.ocean_density * PI * f.radius.powi(4);
                let linear = f.mass(mat) / (4.0 * alpha * slip);
                let angular = f.inertia(mat) / (4.0 * beta * spin_slip);
                linear.min(angular)
            })
            .fold(f64::INFINITY, f64::min)
    };

    let mut remaining = settings.dt;
    let mut first = true;
    while remaining > settings.dt * 1e-12 {
        let summary = accumulate_loads_full(
            &state.field,
            mat,
            settings.load_path,
            if first { observer.take() } else { None },
        )?;
        first = false;

        let mut h = remaining;
        if settings.substepping {
            let mut cap = drag_cap(state);
            if let Some(period) = summary.min_period {
                cap = cap.min(period / settings.substep_margin);
            }
            if let Some(approach) = summary.approach_cap {
                cap = cap.min(approach);
            }
            if cap < h {
                let pieces = (h / cap).ceil();
                if pieces > MAX_SUBSTEPS {
                    return Err(Error::Config(format!(
                        "contact stiffness demands more than {MAX_SUBSTEPS} sub-steps per step"
                    )));
                }
                h = remaining / pieces;
            }
        }

        advance_floes(state, h, mat, &samples, &summary.loads, inflation, rng, settings);
        remaining -= h;
    }

    state.ocean.step(settings.dt, rng);
    state.time += settings.dt;

    for floe in &state.field.floes {
        if !floe.is_finite() {
            return Err(Error::NumericalBlowup {
                time: state.time,
                floe_id: floe.id,
            });
        }
    }
    Ok(())
}

/// One explicit Euler sub-step of the floe subsystem: all right-hand sides
/// are evaluated at the current state, then positions advance with the old
/// velocities.
#[allow(clippy::too_many_arguments)]
fn advance_floes<R: Rng + ?Sized>(
    state: &mut SimulationState,
    h: f64,
    mat: &MaterialParams,
    samples: &[(Vec2, f64)],
    loads: &[BodyLoads],
    inflation: &InflationNoise,
    rng: &mut R,
    settings: &StepSettings,
) {
    let domain = state.field.domain;
    let sqrt_h = h.sqrt();
    for (i, floe) in state.field.floes.iter_mut().enumerate() {
        let mass = floe.mass(mat);
        let inertia = floe.inertia(mat);

        let mut force = loads[i].force;
        let mut torque = loads[i].torque;
        if settings.drag_enabled {
            force += drag_force(floe, samples[i].0, mat);
            torque += drag_torque(floe, samples[i].1, mat);
        }

        let mut dv = force * (h / mass);
        let mut domega = torque * (h / inertia);
        if inflation.enabled {
            let xi_x: f64 = rng.sample(StandardNormal);
            let xi_y: f64 = rng.sample(StandardNormal);
            let xi_w: f64 = rng.sample(StandardNormal);
            dv += Vec2::new(inflation.linear[i].x * xi_x, inflation.linear[i].y * xi_y)
                * (sqrt_h / mass);
            domega += inflation.angular[i] * xi_w * sqrt_h / inertia;
        }

        floe.position = domain.wrap_point(floe.position + floe.velocity * h);
        floe.angle = wrap_angle(floe.angle + floe.angular_velocity * h);
        floe.velocity += dv;
        floe.angular_velocity += domega;
    }
}

/// Repeatedly steps until `t_final`, delivering a snapshot to the sink for
/// the initial state and after every `record_every`-th step. A final time
/// equal to the current time yields no snapshots at all.
#[allow(clippy::too_many_arguments)]
pub fn run<R: Rng + ?Sized>(
    state: &mut SimulationState,
    settings: &StepSettings,
    mat: &MaterialParams,
    inflation: &InflationNoise,
    t_final: f64,
    record_every: u64,
    rng: &mut R,
    sink: &mut dyn FnMut(&SimulationState),
) -> Result<()> {
    run_observed(
        state, settings, mat, inflation, t_final, record_every, rng, sink, None,
    )
}

/// [`run`] with a contact observer active on every step.
#[allow(clippy::too_many_arguments)]
pub fn run_observed<R: Rng + ?Sized>(
    state: &mut SimulationState,
    settings: &StepSettings,
    mat: &MaterialParams,
    inflation: &InflationNoise,
    t_final: f64,
    record_every: u64,
    rng: &mut R,
    sink: &mut dyn FnMut(&SimulationState),
    mut observer: Option<&mut dyn ContactObserver>,
) -> Result<()> {
    if t_final < state.time {
        return Err(Error::Config(format!(
            "final time {t_final} lies before the current time {}",
            state.time
        )));
    }
    let steps = ((t_final - state.time) / settings.dt).round() as u64;
    if steps == 0 {
        return Ok(());
    }
    sink(state);
    for s in 0..steps {
        let at = state.time;
        let obs: Option<&mut dyn ContactObserver> = match &mut observer {
            Some(o) => Some(&mut **o),
            None => None,
        };
        step_observed(state, settings, mat, inflation, rng, obs).map_err(|e| {
            Error::StepFailed {
                time: at,
                source: Box::new(e),
            }
        })?;
        if record_every > 0 && (s + 1) % record_every == 0 {
            sink(state);
        }
    }
    Ok(())
}
