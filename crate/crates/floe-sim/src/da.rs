//! Lagrangian data assimilation over the joint floe-ocean state.
//!
//! Noisy position and angle observations of the large floes are assimilated
//! with an ensemble adjustment Kalman filter: scalar observations are
//! processed sequentially, each one shifting and contracting the observed
//! ensemble deterministically (no perturbed observations) and updating every
//! state component by linear regression of its anomalies on the observed
//! anomalies. Positions and angles live on a torus, so innovations and
//! anomalies are taken minimum-image relative to the prior ensemble.
//!
//! The forecast model for the reduced systems is bare truncation of the
//! small floes, optionally with additive noise whose per-floe amplitudes
//! come from the lagged variability of the contact forces that superfloes
//! exert on the large floes in a cheap companion run.

use crate::domain::{wrap_angle, wrap_angle_delta, Domain, Vec2};
use crate::error::{Error, Result};
use crate::floe::{FloeField, MaterialParams};
use crate::integrate::{step, InflationNoise, SimulationState, StepSettings};
use crate::ocean::ModeClass;
use crate::seeds;
use crate::uq::ContactForceSeries;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// One observed floe: position and angular location.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservedFloe {
    pub id: u64,
    pub position: Vec2,
    pub angle: f64,
}

/// Noisy observations of the large floes at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationRecord {
    pub time: f64,
    pub floes: Vec<ObservedFloe>,
    /// Position noise std dev per component (m).
    pub sigma_position: f64,
    /// Angle noise std dev (rad).
    pub sigma_angle: f64,
}

/// Observes the floes with the given ids, adding independent Gaussian noise
/// and wrapping back into the domain. Zero noise yields the exact truth.
pub fn observe<R: Rng + ?Sized>(
    truth: &SimulationState,
    observed_ids: &[u64],
    sigma_position: f64,
    sigma_angle: f64,
    rng: &mut R,
) -> Result<ObservationRecord> {
    if sigma_position < 0.0 || sigma_angle < 0.0 {
        return Err(Error::Parameter("observation noise must be nonnegative".into()));
    }
    let domain = truth.field.domain;
    let mut floes = Vec::with_capacity(observed_ids.len());
    for &id in observed_ids {
        let floe = truth
            .field
            .floes
            .iter()
            .find(|f| f.id == id)
            .ok_or_else(|| Error::Config(format!("observed floe {id} is not in the field")))?;
        let mut position = floe.position;
        let mut angle = floe.angle;
        if sigma_position > 0.0 {
            let nx: f64 = rng.sample(StandardNormal);
            let ny: f64 = rng.sample(StandardNormal);
            position = domain.wrap_point(position + Vec2::new(nx, ny) * sigma_position);
        }
        if sigma_angle > 0.0 {
            let na: f64 = rng.sample(StandardNormal);
            angle = wrap_angle(angle + na * sigma_angle);
        }
        floes.push(ObservedFloe {
            id,
            position,
            angle,
        });
    }
    Ok(ObservationRecord {
        time: truth.time,
        floes,
        sigma_position,
        sigma_angle,
    })
}

/// How a state-vector component wraps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WrapKind {
    /// Periodic in the domain side.
    Position,
    /// Periodic in 2 pi.
    Angle,
    Plain,
}

/// Fixed layout of the flat state vector: positions, angles, velocities,
/// angular velocities of all floes, then real/imaginary parts of every
/// stored ocean mode. Round-trips losslessly with a simulation state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateLayout {
    pub floe_count: usize,
    pub mode_count: usize,
}

impl StateLayout {
    pub fn of(state: &SimulationState) -> StateLayout {
        StateLayout {
            floe_count: state.field.len(),
            mode_count: state.ocean.modes.len(),
        }
    }

    pub fn dim(&self) -> usize {
        6 * self.floe_count + 2 * self.mode_count
    }

    pub fn x1(&self, floe: usize) -> usize {
        floe
    }
    pub fn x2(&self, floe: usize) -> usize {
        self.floe_count + floe
    }
    pub fn angle(&self, floe: usize) -> usize {
        2 * self.floe_count + floe
    }
    pub fn v1(&self, floe: usize) -> usize {
        3 * self.floe_count + floe
    }
    pub fn v2(&self, floe: usize) -> usize {
        4 * self.floe_count + floe
    }
    pub fn angular_velocity(&self, floe: usize) -> usize {
        5 * self.floe_count + floe
    }
    pub fn mode_re(&self, mode: usize) -> usize {
        6 * self.floe_count + 2 * mode
    }
    pub fn mode_im(&self, mode: usize) -> usize {
        6 * self.floe_count + 2 * mode + 1
    }

    pub fn wrap_kind(&self, index: usize) -> WrapKind {
        if index < 2 * self.floe_count {
            WrapKind::Position
        } else if index < 3 * self.floe_count {
            WrapKind::Angle
        } else {
            WrapKind::Plain
        }
    }

    pub fn encode(&self, state: &SimulationState) -> Vec<f64> {
        debug_assert_eq!(state.field.len(), self.floe_count);
        debug_assert_eq!(state.ocean.modes.len(), self.mode_count);
        let mut v = vec![0.0; self.dim()];
        for (i, f) in state.field.floes.iter().enumerate() {
            v[self.x1(i)] = f.position.x;
            v[self.x2(i)] = f.position.y;
            v[self.angle(i)] = f.angle;
            v[self.v1(i)] = f.velocity.x;
            v[self.v2(i)] = f.velocity.y;
            v[self.angular_velocity(i)] = f.angular_velocity;
        }
        for (k, m) in state.ocean.modes.iter().enumerate() {
            v[self.mode_re(k)] = m.amplitude.re;
            v[self.mode_im(k)] = m.amplitude.im;
        }
        v
    }

    /// Writes the vector back into a state, wrapping positions and angles
    /// into their canonical ranges.
    pub fn decode(&self, vector: &[f64], state: &mut SimulationState) {
        debug_assert_eq!(vector.len(), self.dim());
        let domain = state.field.domain;
        for (i, f) in state.field.floes.iter_mut().enumerate() {
            f.position = domain.wrap_point(Vec2::new(vector[self.x1(i)], vector[self.x2(i)]));
            f.angle = wrap_angle(vector[self.angle(i)]);
            f.velocity = Vec2::new(vector[self.v1(i)], vector[self.v2(i)]);
            f.angular_velocity = vector[self.angular_velocity(i)];
        }
        for (k, m) in state.ocean.modes.iter_mut().enumerate() {
            m.amplitude =
                num_complex::Complex64::new(vector[self.mode_re(k)], vector[self.mode_im(k)]);
        }
    }

    /// Human-readable component names, aligned with the vector layout.
    pub fn labels(&self, template: &SimulationState) -> Vec<String> {
        let mut labels = vec![String::new(); self.dim()];
        for (i, f) in template.field.floes.iter().enumerate() {
            labels[self.x1(i)] = format!("x1[{}]", f.id);
            labels[self.x2(i)] = format!("x2[{}]", f.id);
            labels[self.angle(i)] = format!("angle[{}]", f.id);
            labels[self.v1(i)] = format!("v1[{}]", f.id);
            labels[self.v2(i)] = format!("v2[{}]", f.id);
            labels[self.angular_velocity(i)] = format!("omega[{}]", f.id);
        }
        for (k, m) in template.ocean.modes.iter().enumerate() {
            let class = match m.class {
                ModeClass::Balanced => "gb",
                ModeClass::GravityPlus => "gr+",
                ModeClass::GravityMinus => "gr-",
            };
            let (k1, k2) = m.wavenumber;
            labels[self.mode_re(k)] = format!("mode_re[({k1},{k2}),{class}]");
            labels[self.mode_im(k)] = format!("mode_im[({k1},{k2}),{class}]");
        }
        labels
    }
}

/// One scalar observation of a state component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarObservation {
    pub index: usize,
    pub value: f64,
    pub variance: f64,
}

/// Outcome counters for one analysis step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct UpdateOutcome {
    pub processed: usize,
    /// Scalars skipped because the prior ensemble had no spread there.
    pub skipped: usize,
}

/// Sequential scalar ensemble adjustment update. Deterministic: no random
/// numbers are involved. Wrapped components (positions, angles) are
/// unwrapped around the first member before processing and wrapped back
/// afterwards; observed values are unwrapped toward the prior mean.
pub fn eakf_update(
    ensemble: &mut [Vec<f64>],
    layout: &StateLayout,
    observations: &[ScalarObservation],
    domain: Domain,
) -> Result<UpdateOutcome> {
    let members = ensemble.len();
    if members < 2 {
        return Err(Error::Config(format!(
            "ensemble update needs at least 2 members, got {members}"
        )));
    }
    let dim = layout.dim();
    for m in ensemble.iter() {
        if m.len() != dim {
            return Err(Error::Config(
                "ensemble member does not match the state layout".into(),
            ));
        }
    }
    for obs in observations {
        if obs.index >= dim {
            return Err(Error::Config(format!(
                "observation index {} outside the state vector",
                obs.index
            )));
        }
        if !(obs.variance > 0.0) {
            return Err(Error::Parameter(format!(
                "observation variance must be positive, got {}",
                obs.variance
            )));
        }
    }

    // Move wrapped components into a frame where arithmetic means make
    // sense: unwrap every member about member 0.
    let unwrap = |kind: WrapKind, reference: f64, v: f64| -> f64 {
        match kind {
            WrapKind::Position => reference + domain.wrap_delta(v - reference),
            WrapKind::Angle => reference + wrap_angle_delta(v - reference),
            WrapKind::Plain => v,
        }
    };
    for c in 0..dim {
        let kind = layout.wrap_kind(c);
        if kind == WrapKind::Plain {
            continue;
        }
        let reference = ensemble[0][c];
        for member in ensemble.iter_mut() {
            member[c] = unwrap(kind, reference, member[c]);
        }
    }

    let n = members as f64;
    let mut outcome = UpdateOutcome::default();
    for obs in observations {
        let idx = obs.index;
        let prior_mean = ensemble.iter().map(|m| m[idx]).sum::<f64>() / n;
        let prior_var = ensemble
            .iter()
            .map(|m| (m[idx] - prior_mean).powi(2))
            .sum::<f64>()
            / (n - 1.0);
        if prior_var <= 0.0 {
            outcome.skipped += 1;
            continue;
        }

        let y = unwrap(layout.wrap_kind(idx), prior_mean, obs.value);
        let posterior_var = 1.0 / (1.0 / prior_var + 1.0 / obs.variance);
        let posterior_mean = posterior_var * (prior_mean / prior_var + y / obs.variance);
        let shrink = (posterior_var / prior_var).sqrt();

        // Deterministic shift-and-contract of the observed ensemble.
        let increments: Vec<f64> = ensemble
            .iter()
            .map(|m| posterior_mean + shrink * (m[idx] - prior_mean) - m[idx])
            .collect();

        // Every other component moves by its regression on the observed one.
        for c in 0..dim {
            if c == idx {
                continue;
            }
            let mean_c = ensemble.iter().map(|m| m[c]).sum::<f64>() / n;
            let cov = ensemble
                .iter()
                .map(|m| (m[c] - mean_c) * (m[idx] - prior_mean))
                .sum::<f64>()
                / (n - 1.0);
            let beta = cov / prior_var;
            if beta == 0.0 {
                continue;
            }
            for (member, dz) in ensemble.iter_mut().zip(&increments) {
                member[c] += beta * dz;
            }
        }
        for (member, dz) in ensemble.iter_mut().zip(&increments) {
            member[idx] += dz;
        }
        outcome.processed += 1;
    }

    // Back to canonical ranges.
    for c in 0..dim {
        match layout.wrap_kind(c) {
            WrapKind::Position => {
                for member in ensemble.iter_mut() {
                    member[c] = domain.wrap_coord(member[c]);
                }
            }
            WrapKind::Angle => {
                for member in ensemble.iter_mut() {
                    member[c] = wrap_angle(member[c]);
                }
            }
            WrapKind::Plain => {}
        }
    }
    Ok(outcome)
}

/// Expands an observation record into scalar observations against the
/// layout of `template` and applies [`eakf_update`].
pub fn assimilate_observation(
    ensemble: &mut [Vec<f64>],
    layout: &StateLayout,
    template: &SimulationState,
    obs: &ObservationRecord,
) -> Result<UpdateOutcome> {
    let mut scalars = Vec::with_capacity(obs.floes.len() * 3);
    for observed in &obs.floes {
        let slot = template
            .field
            .floes
            .iter()
            .position(|f| f.id == observed.id)
            .ok_or_else(|| {
                Error::Config(format!(
                    "observed floe {} is missing from the forecast model",
                    observed.id
                ))
            })?;
        let var_x = obs.sigma_position * obs.sigma_position;
        let var_a = obs.sigma_angle * obs.sigma_angle;
        scalars.push(ScalarObservation {
            index: layout.x1(slot),
            value: observed.position.x,
            variance: var_x,
        });
        scalars.push(ScalarObservation {
            index: layout.x2(slot),
            value: observed.position.y,
            variance: var_x,
        });
        scalars.push(ScalarObservation {
            index: layout.angle(slot),
            value: observed.angle,
            variance: var_a,
        });
    }
    eakf_update(ensemble, layout, &scalars, template.field.domain)
}

/// Per-large-floe additive noise amplitudes estimated from the lagged
/// variability of superfloe contact forces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InflationCoefficients {
    pub floes: Vec<FloeInflation>,
    /// Lag in steps (the observation interval).
    pub lag: usize,
    /// Length of the series the statistics came from.
    pub series_len: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FloeInflation {
    pub id: u64,
    pub sigma_force: Vec2,
    pub sigma_torque: f64,
}

impl InflationCoefficients {
    /// Maps the coefficients onto a field, zero for floes without an entry.
    pub fn to_noise(&self, field: &FloeField) -> InflationNoise {
        let mut linear = Vec::with_capacity(field.len());
        let mut angular = Vec::with_capacity(field.len());
        for f in &field.floes {
            match self.floes.iter().find(|c| c.id == f.id) {
                Some(c) => {
                    linear.push(c.sigma_force);
                    angular.push(c.sigma_torque);
                }
                None => {
                    linear.push(Vec2::ZERO);
                    angular.push(0.0);
                }
            }
        }
        InflationNoise {
            enabled: true,
            linear,
            angular,
        }
    }
}

/// Standard deviation of the lagged differences f[t + lag] - f[t] over a
/// series, with divisor N - lag - 1.
fn lagged_sd(series: &[f64], lag: usize) -> f64 {
    let n = series.len();
    let diffs: Vec<f64> = (0..n - lag).map(|i| series[i + lag] - series[i]).collect();
    let m = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / m;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (m - 1.0);
    var.sqrt()
}

/// Computes per-floe inflation amplitudes from a recorded contact-force
/// series: for each component, the sample standard deviation of the series
/// differenced at the observation lag.
pub fn compute_inflation(series: &ContactForceSeries, lag: usize) -> Result<InflationCoefficients> {
    let n = series.times.len();
    if lag == 0 {
        return Err(Error::Parameter("lag must be at least 1".into()));
    }
    if n < lag + 2 {
        return Err(Error::InsufficientData(format!(
            "series of length {n} cannot be differenced at lag {lag}"
        )));
    }
    let mut floes = Vec::with_capacity(series.floes.len());
    for f in &series.floes {
        let fx: Vec<f64> = f.force.iter().map(|v| v.x).collect();
        let fy: Vec<f64> = f.force.iter().map(|v| v.y).collect();
        floes.push(FloeInflation {
            id: f.id,
            sigma_force: Vec2::new(lagged_sd(&fx, lag), lagged_sd(&fy, lag)),
            sigma_torque: lagged_sd(&f.torque, lag),
        });
    }
    Ok(InflationCoefficients {
        floes,
        lag,
        series_len: n,
    })
}

/// Root-mean-square error between two equal-length series.
pub fn rmse(truth: &[f64], estimate: &[f64]) -> Result<f64> {
    check_series(truth, estimate)?;
    let n = truth.len() as f64;
    let sum: f64 = truth
        .iter()
        .zip(estimate)
        .map(|(t, e)| (e - t) * (e - t))
        .sum();
    Ok((sum / n).sqrt())
}

/// Pattern correlation coefficient (centered cosine similarity).
pub fn pcc(truth: &[f64], estimate: &[f64]) -> Result<f64> {
    check_series(truth, estimate)?;
    let n = truth.len() as f64;
    let mt = truth.iter().sum::<f64>() / n;
    let me = estimate.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut dt = 0.0;
    let mut de = 0.0;
    for (t, e) in truth.iter().zip(estimate) {
        num += (e - me) * (t - mt);
        dt += (t - mt) * (t - mt);
        de += (e - me) * (e - me);
    }
    if dt == 0.0 || de == 0.0 {
        return Err(Error::ZeroVariance(
            "pattern correlation is undefined for a constant series".into(),
        ));
    }
    Ok(num / (dt.sqrt() * de.sqrt()))
}

fn check_series(truth: &[f64], estimate: &[f64]) -> Result<()> {
    if truth.len() != estimate.len() {
        return Err(Error::Parameter(format!(
            "series lengths differ: {} vs {}",
            truth.len(),
            estimate.len()
        )));
    }
    if truth.len() < 2 {
        return Err(Error::InsufficientData(
            "skill scores need at least 2 points".into(),
        ));
    }
    Ok(())
}

/// Forecast model used by the assimilation ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForecastModel {
    /// All floes, exact dynamics.
    Full,
    /// Only the large floes, no replacement for the rest.
    BareTruncation,
    /// Bare truncation plus superfloe-derived additive noise.
    Inflated,
}

/// Everything one twin experiment needs.
#[derive(Debug, Clone)]
pub struct DaScenario {
    /// Truth initial condition (full system, already spun up).
    pub truth_initial: SimulationState,
    /// The first `large_count` floes (by id) are observed and retained in
    /// the reduced forecast models.
    pub large_count: usize,
    pub forecast: ForecastModel,
    /// Required when `forecast` is `Inflated`.
    pub inflation: Option<InflationCoefficients>,
    /// Keep gravity modes in the forecast ocean.
    pub forecast_gravity: bool,
    pub ensemble_size: usize,
    pub cycles: usize,
    pub obs_interval_steps: u64,
    pub sigma_position: f64,
    pub sigma_angle: f64,
    pub settings: StepSettings,
    pub material: MaterialParams,
    pub seed: u64,
}

/// Posterior summary of one assimilation cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord {
    pub time: f64,
    /// Truth values mapped into the forecast layout.
    pub truth: Vec<f64>,
    pub posterior_mean: Vec<f64>,
    pub posterior_spread: Vec<f64>,
}

/// Mean skill over a variable class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub rmse: f64,
    pub pcc: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkillSummary {
    pub floe_velocities: Scores,
    pub ocean_modes: Scores,
}

/// A finished twin experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DaRun {
    pub labels: Vec<String>,
    pub cycles: Vec<CycleRecord>,
    pub skill: SkillSummary,
    pub update_outcome: UpdateOutcome,
}

/// Builds the forecast template from the truth state: selects the retained
/// floes bit-identically and optionally strips gravity modes from the ocean
/// (their amplitudes are simply absent from the reduced model).
pub fn forecast_template(
    truth: &SimulationState,
    forecast: ForecastModel,
    large_count: usize,
    keep_gravity: bool,
) -> Result<SimulationState> {
    if large_count == 0 || large_count > truth.field.len() {
        return Err(Error::Config(format!(
            "large floe count {} invalid for a {}-floe truth",
            large_count,
            truth.field.len()
        )));
    }
    let mut state = truth.clone();
    if forecast != ForecastModel::Full {
        state
            .field
            .floes
            .retain(|f| f.id < large_count as u64);
        if state.field.len() != large_count {
            return Err(Error::Config(
                "truth field does not contain the expected large-floe ids".into(),
            ));
        }
    }
    if !keep_gravity {
        state
            .ocean
            .modes
            .retain(|m| m.class == ModeClass::Balanced);
    }
    Ok(state)
}

/// Indices in the truth state vector corresponding to each forecast-layout
/// component, matched by floe id and by (wavenumber, class).
fn truth_projection(
    truth: &SimulationState,
    template: &SimulationState,
) -> Result<Vec<usize>> {
    let truth_layout = StateLayout::of(truth);
    let layout = StateLayout::of(template);
    let mut map = vec![0usize; layout.dim()];
    for (i, f) in template.field.floes.iter().enumerate() {
        let ti = truth
            .field
            .floes
            .iter()
            .position(|t| t.id == f.id)
            .ok_or_else(|| Error::Config(format!("floe {} missing from the truth", f.id)))?;
        map[layout.x1(i)] = truth_layout.x1(ti);
        map[layout.x2(i)] = truth_layout.x2(ti);
        map[layout.angle(i)] = truth_layout.angle(ti);
        map[layout.v1(i)] = truth_layout.v1(ti);
        map[layout.v2(i)] = truth_layout.v2(ti);
        map[layout.angular_velocity(i)] = truth_layout.angular_velocity(ti);
    }
    for (k, m) in template.ocean.modes.iter().enumerate() {
        let tk = truth
            .ocean
            .modes
            .iter()
            .position(|t| t.wavenumber == m.wavenumber && t.class == m.class)
            .ok_or_else(|| {
                Error::Config(format!(
                    "mode {:?}/{:?} missing from the truth ocean",
                    m.wavenumber, m.class
                ))
            })?;
        map[layout.mode_re(k)] = truth_layout.mode_re(tk);
        map[layout.mode_im(k)] = truth_layout.mode_im(tk);
    }
    Ok(map)
}

/// Push-apart sweeps applied to each member after an analysis update.
const ANALYSIS_RELAX_SWEEPS: usize = 10;

/// Runs the full twin experiment: the truth advances with the full model
/// while an ensemble of forecast-model states is propagated and adjusted at
/// every observation time. Truth, forecast members, and observation noise
/// each use an independent stream derived from the scenario seed.
pub fn assimilate(scenario: &DaScenario) -> Result<DaRun> {
    if scenario.ensemble_size < 2 {
        return Err(Error::Config("assimilation needs at least 2 members".into()));
    }
    if scenario.forecast == ForecastModel::Inflated && scenario.inflation.is_none() {
        return Err(Error::Config(
            "the inflated forecast model needs inflation coefficients".into(),
        ));
    }
    if scenario.cycles == 0 || scenario.obs_interval_steps == 0 {
        return Err(Error::Config(
            "assimilation needs at least one cycle and a positive interval".into(),
        ));
    }

    let mat = &scenario.material;
    let template = forecast_template(
        &scenario.truth_initial,
        scenario.forecast,
        scenario.large_count,
        scenario.forecast_gravity,
    )?;
    let layout = StateLayout::of(&template);
    let projection = truth_projection(&scenario.truth_initial, &template)?;
    let truth_layout = StateLayout::of(&scenario.truth_initial);
    let labels = layout.labels(&template);

    let noise = match (scenario.forecast, &scenario.inflation) {
        (ForecastModel::Inflated, Some(coeffs)) => coeffs.to_noise(&template.field),
        _ => InflationNoise::disabled(),
    };
    let no_noise = InflationNoise::disabled();

    let mut truth = scenario.truth_initial.clone();
    let mut truth_rng = seeds::stream(scenario.seed, seeds::label::TRUTH);
    let mut obs_rng = seeds::stream(scenario.seed, seeds::label::OBSERVATION);

    let mut members: Vec<(SimulationState, rand_chacha::ChaCha8Rng)> = (0..scenario.ensemble_size)
        .map(|m| {
            (
                template.clone(),
                seeds::stream(scenario.seed, seeds::label::MEMBER_BASE + m as u64),
            )
        })
        .collect();
    let observed_ids: Vec<u64> = (0..scenario.large_count as u64).collect();

    let mut cycles = Vec::with_capacity(scenario.cycles);
    let mut outcome = UpdateOutcome::default();
    for _cycle in 0..scenario.cycles {
        for _ in 0..scenario.obs_interval_steps {
            step(&mut truth, &scenario.settings, mat, &no_noise, &mut truth_rng)?;
        }
        let forecast_errors: Vec<Result<()>> = members
            .par_iter_mut()
            .map(|(state, rng)| {
                for _ in 0..scenario.obs_interval_steps {
                    step(state, &scenario.settings, mat, &noise, rng)?;
                }
                Ok(())
            })
            .collect();
        for e in forecast_errors {
            e?;
        }

        let record = observe(
            &truth,
            &observed_ids,
            scenario.sigma_position,
            scenario.sigma_angle,
            &mut obs_rng,
        )?;

        let mut ensemble: Vec<Vec<f64>> =
            members.iter().map(|(s, _)| layout.encode(s)).collect();
        let step_outcome = assimilate_observation(&mut ensemble, &layout, &template, &record)?;
        outcome.processed += step_outcome.processed;
        outcome.skipped += step_outcome.skipped;
        for ((state, _), vector) in members.iter_mut().zip(&ensemble) {
            layout.decode(vector, state);
            // Position increments can push floes into artificial overlap;
            // releasing that as stored elastic energy would eject them, so
            // the overlap is relaxed away positionally. Displacements stay
            // below the overlap depth (at most the position-update scale).
            crate::floe::relax_overlaps(
                &mut state.field.floes,
                state.field.domain,
                ANALYSIS_RELAX_SWEEPS,
            );
        }

        let truth_vector = truth_layout.encode(&truth);
        let truth_projected: Vec<f64> = projection.iter().map(|&i| truth_vector[i]).collect();
        let n = ensemble.len() as f64;
        let mut mean = vec![0.0; layout.dim()];
        for member in &ensemble {
            for (c, v) in member.iter().enumerate() {
                mean[c] += v;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        let mut spread = vec![0.0; layout.dim()];
        for member in &ensemble {
            for (c, v) in member.iter().enumerate() {
                spread[c] += (v - mean[c]) * (v - mean[c]);
            }
        }
        for s in &mut spread {
            *s = (*s / (n - 1.0)).sqrt();
        }
        cycles.push(CycleRecord {
            time: truth.time,
            truth: truth_projected,
            posterior_mean: mean,
            posterior_spread: spread,
        });
    }

    let skill = score_run(&layout, &cycles)?;
    Ok(DaRun {
        labels,
        cycles,
        skill,
        update_outcome: outcome,
    })
}

/// Mean RMSE and PCC across the floe-velocity components and across the
/// ocean-mode components. Variables whose truth series is constant are
/// skipped for the PCC average.
fn score_run(layout: &StateLayout, cycles: &[CycleRecord]) -> Result<SkillSummary> {
    let velocity_indices: Vec<usize> = (0..layout.floe_count)
        .flat_map(|i| [layout.v1(i), layout.v2(i), layout.angular_velocity(i)])
        .collect();
    let mode_indices: Vec<usize> = (0..layout.mode_count)
        .flat_map(|k| [layout.mode_re(k), layout.mode_im(k)])
        .collect();
    Ok(SkillSummary {
        floe_velocities: class_scores(&velocity_indices, cycles)?,
        ocean_modes: class_scores(&mode_indices, cycles)?,
    })
}

fn class_scores(indices: &[usize], cycles: &[CycleRecord]) -> Result<Scores> {
    let mut rmse_sum = 0.0;
    let mut rmse_count = 0usize;
    let mut pcc_sum = 0.0;
    let mut pcc_count = 0usize;
    for &idx in indices {
        let truth: Vec<f64> = cycles.iter().map(|c| c.truth[idx]).collect();
        let estimate: Vec<f64> = cycles.iter().map(|c| c.posterior_mean[idx]).collect();
        rmse_sum += rmse(&truth, &estimate)?;
        rmse_count += 1;
        match pcc(&truth, &estimate) {
            Ok(p) => {
                pcc_sum += p;
                pcc_count += 1;
            }
            Err(Error::ZeroVariance(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(Scores {
        rmse: rmse_sum / rmse_count.max(1) as f64,
        pcc: if pcc_count > 0 {
            pcc_sum / pcc_count as f64
        } else {
            f64::NAN
        },
    })
}
