//! Scratch scenario prototyping (not part of the deliverable).

use floe_sim::config::ScenarioConfig;
use floe_sim::da::{self, DaScenario, ForecastModel};
use floe_sim::domain::{Domain, Vec2};
use floe_sim::floe::{
    sample_radius, sample_thickness, Caps, Floe, FloeField, SizeDistribution,
    ThicknessDistribution,
};
use floe_sim::integrate::{InflationNoise, SimulationState, StepSettings};
use floe_sim::ocean::{build_mode_set, ClassParams, OceanSpec};
use floe_sim::seeds;
use floe_sim::superfloe::{reduce, ReductionConfig};
use floe_sim::uq;
use rand::Rng;

/// 18 floes with nearly equal radii packed in a patch so their ocean-driven
/// momentum response is coherent.
fn clustered_field(domain: Domain, seed: u64, caps: Caps, patch_radius: f64) -> FloeField {
    let size = SizeDistribution::new(1.0, 1_500.0).unwrap();
    let thick = ThicknessDistribution::new(2.0, 1.3).unwrap();
    let tcaps = Caps::new(0.1, 3.5).unwrap();
    let mut rng = seeds::stream(seed, 99);
    let count = 18;
    let mut radii: Vec<f64> = (0..count)
        .map(|_| sample_radius(&mut rng, &size, caps).unwrap())
        .collect();
    radii.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let _ = patch_radius;
    let center = Vec2::new(domain.side / 2.0, domain.side / 2.0);
    // Deterministic hex-like grid: rows of 5/4/5/4 at a pitch that keeps
    // small gaps between the largest floes.
    let pitch = 2.0 * caps.hi + 60.0;
    let mut slots = Vec::new();
    let rows = [5, 4, 5, 4];
    let mut row_y = -1.5 * pitch * 0.87;
    for (r, &n) in rows.iter().enumerate() {
        let _ = r;
        for c in 0..n {
            slots.push(Vec2::new(
                (c as f64 - (n as f64 - 1.0) / 2.0) * pitch,
                row_y,
            ));
        }
        row_y += pitch * 0.87;
    }
    // The large floes (ids 0..5) go to interior slots surrounded by small
    // floes; the largest sits at the blob center.
    let large_slots = [11usize, 0, 4, 14, 17, 7];
    let small_slots: Vec<usize> = (0..slots.len())
        .filter(|s| !large_slots.contains(s))
        .collect();
    let mut floes: Vec<Floe> = Vec::new();
    for (i, &r) in radii.iter().enumerate() {
        let h = sample_thickness(&mut rng, &thick, tcaps).unwrap();
        let slot = if i < 6 {
            large_slots[i]
        } else {
            small_slots[i - 6]
        };
        let pos = domain.wrap_point(center + slots[slot]);
        floes.push(Floe::new(i as u64, r, h, pos).unwrap());
    }
    FloeField { domain, floes }
}

fn table2_ocean(side: f64, gravity: bool) -> floe_sim::ocean::OceanState {
    build_mode_set(&OceanSpec {
        max_wavenumber: 1,
        rossby: 0.1,
        side,
        time_scale: 86_400.0,
        balanced: ClassParams::new(0.5, 0.1),
        gravity: ClassParams::new(0.5, 0.05),
        gravity_enabled: gravity,
    })
    .unwrap()
}

fn spread_test(seed: u64, caps: Caps, patch: f64) {
    let domain = Domain::new(100_000.0).unwrap();
    let field = clustered_field(domain, seed, caps, patch);
    let mat = floe_sim::floe::MaterialParams::default();
    let mass_share: f64 = {
        let top: f64 = field.floes.iter().take(6).map(|f| f.mass(&mat)).sum();
        let all: f64 = field.floes.iter().map(|f| f.mass(&mat)).sum();
        top / all
    };
    let full = SimulationState::new(field.clone(), table2_ocean(domain.side, true)).unwrap();
    let (reduced, report) = reduce(&full.field, &ReductionConfig::new(6, 6), &mat).unwrap();
    let superfloe = SimulationState::new(reduced, full.ocean.clone()).unwrap();
    let bare = da::forecast_template(&full, ForecastModel::BareTruncation, 6, true).unwrap();

    let settings = StepSettings::default();
    let none = InflationNoise::disabled();
    let t_final = 2.0 * 86_400.0;
    let spread = |state: &SimulationState, salt: u64| {
        uq::ensemble_forecast(
            state,
            &settings,
            &mat,
            &none,
            200,
            t_final,
            64,
            seeds::derive(seed, salt),
        )
        .unwrap()
        .final_linear_spread()
    };
    let s_full = spread(&full, 1);
    let s_super = spread(&superfloe, 2);
    let s_bare = spread(&bare, 3);
    println!(
        "seed {seed}: mass share {mass_share:.3}, deleted {}, spread full {s_full:.3e} super {s_super:.3e} bare {s_bare:.3e} | super/full {:.2} bare/full {:.2}",
        report.deleted_ids.len(),
        s_super / s_full,
        s_bare / s_full
    );
}

fn kurtosis_test(seed: u64, side: f64) {
    let mat = floe_sim::floe::MaterialParams::default();
    let full = {
        let domain = Domain::new(side).unwrap();
        let caps = Caps::new(1_000.0, 1_600.0).unwrap();
        let field = clustered_field(domain, seed, caps, 8_000.0);
        SimulationState::new(field, table2_ocean(domain.side, true)).unwrap()
    };
    let (reduced, _) = reduce(&full.field, &ReductionConfig::new(6, 6), &mat).unwrap();
    let superfloe = SimulationState::new(reduced, full.ocean.clone()).unwrap();
    let settings = StepSettings::default();
    let none = InflationNoise::disabled();
    let steps = (10.0 * 86_400.0 / settings.dt) as u64;
    for (name, state, salt) in [("full", full, 21u64), ("super", superfloe, 22u64)] {
        let mut state = state;
        let mut rng = seeds::stream(seed, salt);
        let series = uq::contact_force_series(
            &mut state, &settings, &mat, &none, 6, steps, &mut rng,
        )
        .unwrap();
        let track = series.by_id(0).unwrap();
        let zeros = track.torque.iter().filter(|t| **t == 0.0).count();
        println!(
            "  seed {seed} {name}: torque kurtosis {:.2}, nonzero fraction {:.4}",
            uq::excess_kurtosis(&track.torque),
            1.0 - zeros as f64 / track.torque.len() as f64
        );
    }
}

fn da_test(seed: u64, caps: Caps, patch: f64, obs_steps: u64) {
    let domain = Domain::new(50_000.0).unwrap();
    let mat = floe_sim::floe::MaterialParams::default();
    let field = clustered_field(domain, seed, caps, patch);
    // GB-only ocean (8 modes), per the simple test experiment.
    let mut truth = SimulationState::new(field, table2_ocean(domain.side, false)).unwrap();
    let settings = StepSettings::default();
    let none = InflationNoise::disabled();
    let mut rng = seeds::stream(seed, 55);
    for _ in 0..1_000 {
        floe_sim::integrate::step(&mut truth, &settings, &mat, &none, &mut rng).unwrap();
    }

    // Inflation coefficients from the superfloe companion run.
    let (reduced, _) = reduce(&truth.field, &ReductionConfig::new(6, 6), &mat).unwrap();
    let mut companion = SimulationState::new(reduced, truth.ocean.clone()).unwrap();
    let mut crng = seeds::stream(seed, 56);
    let series = uq::contact_force_series(
        &mut companion, &settings, &mat, &none, 6, 10_000, &mut crng,
    )
    .unwrap();
    let coeffs = da::compute_inflation(&series, obs_steps as usize).unwrap();
    let max_sigma = coeffs
        .floes
        .iter()
        .map(|f| f.sigma_force.x.max(f.sigma_force.y))
        .fold(0.0f64, f64::max);

    for (name, forecast, inflation) in [
        ("bare", ForecastModel::BareTruncation, None),
        ("infl", ForecastModel::Inflated, Some(coeffs.clone())),
    ] {
        let scenario = DaScenario {
            truth_initial: truth.clone(),
            large_count: 6,
            forecast,
            inflation,
            forecast_gravity: false,
            ensemble_size: 200,
            cycles: 20,
            obs_interval_steps: obs_steps,
            sigma_position: 80.0,
            sigma_angle: 0.01,
            settings,
            material: mat,
            seed,
        };
        let run = da::assimilate(&scenario).unwrap();
        println!(
            "  seed {seed} {name}: ocean rmse {:.4e} pcc {:.3} | vel rmse {:.4e} (max sigma {max_sigma:.2e})",
            run.skill.ocean_modes.rmse,
            run.skill.ocean_modes.pcc,
            run.skill.floe_velocities.rmse
        );
    }
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let what = args.get(1).map(String::as_str).unwrap_or("spread");
    match what {
        "spread" => {
            let caps = Caps::new(1_000.0, 1_600.0).unwrap();
            for seed in [1, 2, 3, 4, 5, 6, 7, 8] {
                spread_test(seed, caps, 8_000.0);
            }
        }
        "kurtosis" => {
            for seed in [1, 2, 3] {
                kurtosis_test(seed, 50_000.0);
            }
        }
        "da" => {
            let caps = Caps::new(1_000.0, 1_600.0).unwrap();
            for seed in [1, 2, 3, 4, 5, 6, 7, 8, 9, 10] {
                da_test(seed, caps, 8_000.0, 200);
            }
        }
        other => eprintln!("unknown prototype {other}"),
    }
}
