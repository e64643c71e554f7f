//! Shared scenario builders for the integration suites.

use floe_sim::domain::{Domain, Vec2};
use floe_sim::floe::{
    sample_radius, sample_thickness, Caps, Floe, FloeField, MaterialParams, SizeDistribution,
    ThicknessDistribution,
};
use floe_sim::integrate::SimulationState;
use floe_sim::ocean::{build_mode_set, ClassParams, OceanSpec, OceanState};
use floe_sim::seeds;

/// Table-2 ocean: 26 modes at the published damping and noise strengths
/// (or the 8 balanced modes only).
pub fn table2_ocean(side: f64, gravity: bool) -> OceanState {
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

/// An 18-floe pack: radii from the published power law capped to nearly
/// equal sizes, thicknesses from the published Gamma law, arranged as a
/// compact hexagonal cluster with small gaps. The six largest floes sit at
/// interior slots surrounded by small floes, the largest at the center.
///
/// The cluster makes the physics of the reduction arguments visible at desk
/// scale: the small floes carry a coherent share of the pack's momentum
/// response, and the large floes feel contact forces from their small
/// neighbors throughout a run.
pub fn clustered_pack(domain: Domain, seed: u64, gap: f64) -> FloeField {
    let size = SizeDistribution::new(1.0, 1_500.0).unwrap();
    let caps = Caps::new(1_000.0, 1_600.0).unwrap();
    let thickness = ThicknessDistribution::new(2.0, 1.3).unwrap();
    let thickness_caps = Caps::new(0.1, 3.5).unwrap();
    let mut rng = seeds::stream(seed, 99);

    let count = 18;
    let mut radii: Vec<f64> = (0..count)
        .map(|_| sample_radius(&mut rng, &size, caps).unwrap())
        .collect();
    radii.sort_by(|a, b| b.partial_cmp(a).unwrap());

    let center = Vec2::new(domain.side / 2.0, domain.side / 2.0);
    let pitch = 2.0 * caps.hi + gap;
    let rows = [5usize, 4, 5, 4];
    let mut slots = Vec::new();
    let mut row_y = -1.5 * pitch * 0.87;
    for &n in rows.iter() {
        for c in 0..n {
            slots.push(Vec2::new((c as f64 - (n as f64 - 1.0) / 2.0) * pitch, row_y));
        }
        row_y += pitch * 0.87;
    }
    let large_slots = [11usize, 0, 4, 14, 17, 7];
    let small_slots: Vec<usize> = (0..slots.len())
        .filter(|s| !large_slots.contains(s))
        .collect();

    let mut floes = Vec::new();
    for (i, &radius) in radii.iter().enumerate() {
        let h = sample_thickness(&mut rng, &thickness, thickness_caps).unwrap();
        let slot = if i < 6 {
            large_slots[i]
        } else {
            small_slots[i - 6]
        };
        let position = domain.wrap_point(center + slots[slot]);
        floes.push(Floe::new(i as u64, radius, h, position).unwrap());
    }
    FloeField { domain, floes }
}

pub fn pack_state(side: f64, seed: u64, gap: f64, gravity: bool) -> SimulationState {
    let domain = Domain::new(side).unwrap();
    let field = clustered_pack(domain, seed, gap);
    SimulationState::new(field, table2_ocean(side, gravity)).unwrap()
}

pub fn material() -> MaterialParams {
    MaterialParams::default()
}
