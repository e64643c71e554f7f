//! Scenario configuration.
//!
//! Configs are plain-text `key = value` files with explicit unit suffixes
//! (`domain.side = 50 km`, `integrator.time_step = 25 s`). Lengths accept
//! `m`/`km`, times `s`/`min`/`h`/`day`, pressures `Pa`, densities `kg/m3`,
//! angles `rad`; dimensionless keys take bare numbers and flags take
//! `on`/`off`. Everything converts to SI at parse time. An empty file is the
//! default scenario; every deviation from the defaults is echoed back for
//! the run log. Unknown keys, malformed values, and unit mismatches are
//! rejected with the offending line number.

use crate::da::ForecastModel;
use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::floe::{initialize_field, Caps, FieldSpec, MaterialParams, SizeDistribution, ThicknessDistribution};
use crate::integrate::{SimulationState, StepSettings};
use crate::ocean::{build_mode_set, ClassParams, Forcing, OceanSpec};
use crate::superfloe::ReductionConfig;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::path::Path;

/// A fully resolved scenario; all quantities in SI units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub domain_side: f64,
    pub seed: u64,
    pub material: MaterialParams,

    pub floe_count: usize,
    pub large_count: usize,
    pub super_count: usize,
    pub size_exponent: f64,
    pub size_scale: f64,
    pub radius_min: f64,
    pub radius_max: f64,
    pub thickness_shape: f64,
    pub thickness_scale: f64,
    pub thickness_min: f64,
    pub thickness_max: f64,
    pub isolation_factor: f64,
    pub literal_thickness: bool,

    pub max_wavenumber: i32,
    pub rossby: f64,
    pub ocean_time_scale: f64,
    pub gb_damping: f64,
    pub gb_sigma: f64,
    pub gb_forcing_amplitude: f64,
    /// Forcing period in ocean time units; 0 means constant forcing.
    pub gb_forcing_period: f64,
    pub gravity_damping: f64,
    pub gravity_sigma: f64,
    pub gravity_enabled: bool,

    pub dt: f64,
    pub duration: f64,
    pub record_every: u64,
    pub substepping: bool,
    pub substep_margin: f64,
    pub drag_enabled: bool,

    pub ensemble_size: usize,
    pub burn_in_fraction: f64,
    pub bins: usize,

    pub obs_interval_steps: u64,
    pub sigma_position: f64,
    pub sigma_angle: f64,
    pub da_ensemble_size: usize,
    pub da_cycles: usize,
    pub forecast: ForecastModel,
    pub forecast_gravity: bool,
    pub inflation_spinup_steps: u64,
    pub inflation_steps: u64,

    pub grid_resolution: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            domain_side: 50_000.0,
            seed: 0,
            material: MaterialParams::default(),

            floe_count: 18,
            large_count: 6,
            super_count: 6,
            size_exponent: 1.0,
            size_scale: 1_500.0,
            radius_min: 1_000.0,
            radius_max: 4_200.0,
            thickness_shape: 2.0,
            thickness_scale: 1.3,
            thickness_min: 0.1,
            thickness_max: 3.5,
            isolation_factor: std::f64::consts::SQRT_2,
            literal_thickness: false,

            max_wavenumber: 1,
            rossby: 0.1,
            ocean_time_scale: 86_400.0,
            gb_damping: 0.5,
            gb_sigma: 0.1,
            gb_forcing_amplitude: 0.0,
            gb_forcing_period: 14.0,
            gravity_damping: 0.5,
            gravity_sigma: 0.05,
            gravity_enabled: true,

            dt: 25.0,
            duration: 2.0 * 86_400.0,
            record_every: 40,
            substepping: true,
            substep_margin: 10.0,
            drag_enabled: true,

            ensemble_size: 200,
            burn_in_fraction: 0.25,
            bins: 100,

            obs_interval_steps: 100,
            sigma_position: 80.0,
            sigma_angle: 0.01,
            da_ensemble_size: 200,
            da_cycles: 20,
            forecast: ForecastModel::Inflated,
            forecast_gravity: true,
            inflation_spinup_steps: 1_000,
            inflation_steps: 10_000,

            grid_resolution: 64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dimension {
    Length,
    Time,
    Pressure,
    Density,
    Angle,
    Scalar,
    Count,
}

struct RawValue<'a> {
    text: &'a str,
    line: usize,
}

impl<'a> RawValue<'a> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            message: message.into(),
        }
    }

    fn quantity(&self, dimension: Dimension) -> std::result::Result<f64, Error> {
        let mut parts = self.text.split_whitespace();
        let number: f64 = parts
            .next()
            .ok_or_else(|| self.err("missing value"))?
            .parse()
            .map_err(|_| self.err(format!("expected a number, got `{}`", self.text)))?;
        let unit = parts.next();
        if parts.next().is_some() {
            return Err(self.err(format!("trailing tokens in `{}`", self.text)));
        }
        let factor = match (dimension, unit) {
            (Dimension::Length, Some("m")) => 1.0,
            (Dimension::Length, Some("km")) => 1e3,
            (Dimension::Time, Some("s")) => 1.0,
            (Dimension::Time, Some("min")) => 60.0,
            (Dimension::Time, Some("h") | Some("hour") | Some("hours")) => 3_600.0,
            (Dimension::Time, Some("day") | Some("days")) => 86_400.0,
            (Dimension::Pressure, Some("Pa")) => 1.0,
            (Dimension::Density, Some("kg/m3")) => 1.0,
            (Dimension::Angle, Some("rad")) => 1.0,
            (Dimension::Scalar | Dimension::Count, None) => 1.0,
            // A bare number for a dimensioned key is taken as SI.
            (
                Dimension::Length
                | Dimension::Time
                | Dimension::Pressure
                | Dimension::Density
                | Dimension::Angle,
                None,
            ) => 1.0,
            (_, Some(u)) => {
                return Err(self.err(format!("unit `{u}` does not fit this key")));
            }
        };
        Ok(number * factor)
    }

    fn count(&self) -> std::result::Result<u64, Error> {
        let q = self.quantity(Dimension::Count)?;
        if q < 0.0 || q.fract() != 0.0 {
            return Err(self.err(format!("expected a nonnegative integer, got `{}`", self.text)));
        }
        Ok(q as u64)
    }

    fn flag(&self) -> std::result::Result<bool, Error> {
        match self.text {
            "on" | "true" | "yes" => Ok(true),
            "off" | "false" | "no" => Ok(false),
            other => Err(self.err(format!("expected on/off, got `{other}`"))),
        }
    }
}

impl ScenarioConfig {
    /// Parses a config file; returns the config and the list of deviations
    /// from the defaults (for the run log).
    pub fn parse_file(path: &Path) -> Result<(ScenarioConfig, Vec<String>)> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_str(&text)
    }

    pub fn parse_str(text: &str) -> Result<(ScenarioConfig, Vec<String>)> {
        let mut config = ScenarioConfig::default();
        let mut overrides = Vec::new();
        for (index, raw_line) in text.lines().enumerate() {
            let line = index + 1;
            let stripped = match raw_line.find('#') {
                Some(pos) => &raw_line[..pos],
                None => raw_line,
            }
            .trim();
            if stripped.is_empty() {
                continue;
            }
            let (key, value) = stripped.split_once('=').ok_or(Error::Parse {
                line,
                message: format!("expected `key = value`, got `{stripped}`"),
            })?;
            let key = key.trim();
            let value = RawValue {
                text: value.trim(),
                line,
            };
            config.apply(key, &value)?;
            overrides.push(format!("{key} = {}", value.text));
        }
        config.validate()?;
        Ok((config, overrides))
    }

    fn apply(&mut self, key: &str, value: &RawValue) -> Result<()> {
        use Dimension::*;
        match key {
            "domain.side" => self.domain_side = value.quantity(Length)?,
            "seed" => self.seed = value.count()?,

            "material.ice_density" => self.material.ice_density = value.quantity(Density)?,
            "material.ocean_density" => self.material.ocean_density = value.quantity(Density)?,
            "material.youngs_modulus" => self.material.youngs_modulus = value.quantity(Pressure)?,
            "material.shear_modulus" => self.material.shear_modulus = value.quantity(Pressure)?,
            "material.friction" => self.material.friction = value.quantity(Scalar)?,
            "material.ocean_drag" => self.material.ocean_drag = value.quantity(Scalar)?,
            "material.thickness_scaling" => self.material.thickness_scaling = value.flag()?,

            "floes.count" => self.floe_count = value.count()? as usize,
            "floes.large_count" => self.large_count = value.count()? as usize,
            "floes.super_count" => self.super_count = value.count()? as usize,
            "floes.size_exponent" => self.size_exponent = value.quantity(Scalar)?,
            "floes.size_scale" => self.size_scale = value.quantity(Length)?,
            "floes.radius_min" => self.radius_min = value.quantity(Length)?,
            "floes.radius_max" => self.radius_max = value.quantity(Length)?,
            "floes.thickness_shape" => self.thickness_shape = value.quantity(Scalar)?,
            "floes.thickness_scale" => self.thickness_scale = value.quantity(Length)?,
            "floes.thickness_min" => self.thickness_min = value.quantity(Length)?,
            "floes.thickness_max" => self.thickness_max = value.quantity(Length)?,
            "superfloe.isolation_factor" => self.isolation_factor = value.quantity(Scalar)?,
            "superfloe.literal_thickness" => self.literal_thickness = value.flag()?,

            "ocean.max_wavenumber" => self.max_wavenumber = value.count()? as i32,
            "ocean.rossby" => self.rossby = value.quantity(Scalar)?,
            "ocean.time_scale" => self.ocean_time_scale = value.quantity(Time)?,
            "ocean.gb.damping" => self.gb_damping = value.quantity(Scalar)?,
            "ocean.gb.sigma" => self.gb_sigma = value.quantity(Scalar)?,
            "ocean.gb.forcing_amplitude" => self.gb_forcing_amplitude = value.quantity(Scalar)?,
            "ocean.gb.forcing_period" => self.gb_forcing_period = value.quantity(Scalar)?,
            "ocean.gravity.damping" => self.gravity_damping = value.quantity(Scalar)?,
            "ocean.gravity.sigma" => self.gravity_sigma = value.quantity(Scalar)?,
            "ocean.gravity_enabled" => self.gravity_enabled = value.flag()?,

            "integrator.time_step" => self.dt = value.quantity(Time)?,
            "integrator.duration" => self.duration = value.quantity(Time)?,
            "integrator.record_every" => self.record_every = value.count()?,
            "integrator.substepping" => self.substepping = value.flag()?,
            "integrator.substep_margin" => self.substep_margin = value.quantity(Scalar)?,
            "integrator.drag" => self.drag_enabled = value.flag()?,

            "uq.ensemble_size" => self.ensemble_size = value.count()? as usize,
            "uq.burn_in_fraction" => self.burn_in_fraction = value.quantity(Scalar)?,
            "uq.bins" => self.bins = value.count()? as usize,

            "da.observation_interval_steps" => self.obs_interval_steps = value.count()?,
            "da.sigma_x" => self.sigma_position = value.quantity(Length)?,
            "da.sigma_angle" => self.sigma_angle = value.quantity(Angle)?,
            "da.ensemble_size" => self.da_ensemble_size = value.count()? as usize,
            "da.cycles" => self.da_cycles = value.count()? as usize,
            "da.forecast" => {
                self.forecast = match value.text {
                    "full" => ForecastModel::Full,
                    "bare" => ForecastModel::BareTruncation,
                    "inflated" => ForecastModel::Inflated,
                    other => {
                        return Err(value.err(format!(
                            "unknown forecast model `{other}` (full | bare | inflated)"
                        )))
                    }
                }
            }
            "da.forecast_gravity" => self.forecast_gravity = value.flag()?,
            "da.inflation_spinup_steps" => self.inflation_spinup_steps = value.count()?,
            "da.inflation_steps" => self.inflation_steps = value.count()?,

            "output.grid_resolution" => self.grid_resolution = value.count()? as usize,

            other => return Err(value.err(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.material.validate()?;
        if self.large_count + self.super_count >= self.floe_count {
            return Err(Error::Config(format!(
                "large + super floes ({} + {}) must stay below the floe count {}",
                self.large_count, self.super_count, self.floe_count
            )));
        }
        if !(self.dt > 0.0) {
            return Err(Error::Config("time step must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.burn_in_fraction) {
            return Err(Error::Config("burn-in fraction must lie in [0, 1)".into()));
        }
        // Feasibility of the requested concentration and of the caps.
        let spec = self.field_spec()?;
        let expected = spec.count as f64 * std::f64::consts::PI
            * spec.size.mean_radius_sq(spec.radius_caps)?
            / (self.domain_side * self.domain_side);
        if expected > crate::floe::MAX_CONCENTRATION {
            return Err(Error::Config(format!(
                "expected concentration {expected:.3} exceeds {}",
                crate::floe::MAX_CONCENTRATION
            )));
        }
        // The explicit scheme must resolve the fastest ocean phase.
        let ocean = build_mode_set(&self.ocean_spec()?)?;
        ocean.check_time_step(self.dt)?;
        Ok(())
    }

    pub fn domain(&self) -> Result<Domain> {
        Domain::new(self.domain_side)
    }

    pub fn field_spec(&self) -> Result<FieldSpec> {
        Ok(FieldSpec {
            count: self.floe_count,
            size: SizeDistribution::new(self.size_exponent, self.size_scale)?,
            radius_caps: Caps::new(self.radius_min, self.radius_max)?,
            thickness: ThicknessDistribution::new(self.thickness_shape, self.thickness_scale)?,
            thickness_caps: Caps::new(self.thickness_min, self.thickness_max)?,
        })
    }

    pub fn ocean_spec(&self) -> Result<OceanSpec> {
        let forcing_rate = if self.gb_forcing_period != 0.0 {
            TAU / self.gb_forcing_period
        } else {
            0.0
        };
        Ok(OceanSpec {
            max_wavenumber: self.max_wavenumber,
            rossby: self.rossby,
            side: self.domain_side,
            time_scale: self.ocean_time_scale,
            balanced: ClassParams {
                damping: self.gb_damping,
                sigma: self.gb_sigma,
                forcing: Forcing {
                    amplitude: Complex64::new(self.gb_forcing_amplitude, 0.0),
                    angular_rate: forcing_rate,
                },
            },
            gravity: ClassParams::new(self.gravity_damping, self.gravity_sigma),
            gravity_enabled: self.gravity_enabled,
        })
    }

    pub fn step_settings(&self, force_oracle: bool) -> StepSettings {
        StepSettings {
            dt: self.dt,
            load_path: if force_oracle {
                crate::contact::LoadPath::AllPairs
            } else {
                crate::contact::LoadPath::Grid
            },
            substepping: self.substepping,
            substep_margin: self.substep_margin,
            drag_enabled: self.drag_enabled,
        }
    }

    pub fn reduction_config(&self) -> ReductionConfig {
        ReductionConfig {
            large_count: self.large_count,
            super_target: self.super_count,
            isolation_factor: self.isolation_factor,
            literal_thickness: self.literal_thickness,
            relax_sweeps: crate::floe::OVERLAP_SWEEPS,
        }
    }

    /// Initializes the coupled state for this scenario.
    pub fn build_state(&self) -> Result<SimulationState> {
        let field = initialize_field(&self.field_spec()?, self.domain()?, self.seed)?;
        let ocean = build_mode_set(&self.ocean_spec()?)?;
        ocean.check_time_step(self.dt)?;
        SimulationState::new(field, ocean)
    }
}
