//! debug scratch
use floe_sim::domain::{Domain, Vec2};
use floe_sim::floe::*;
use floe_sim::integrate::*;
use floe_sim::ocean::{build_mode_set, ClassParams, OceanSpec};
use floe_sim::seeds;
use floe_sim::superfloe::{reduce, ReductionConfig};

fn clustered(domain: Domain, seed: u64) -> FloeField {
    let size = SizeDistribution::new(1.0, 1_500.0).unwrap();
    let caps = Caps::new(1_000.0, 1_600.0).unwrap();
    let thick = ThicknessDistribution::new(2.0, 1.3).unwrap();
    let tcaps = Caps::new(0.1, 3.5).unwrap();
    let mut rng = seeds::stream(seed, 99);
    let mut radii: Vec<f64> = (0..18).map(|_| sample_radius(&mut rng, &size, caps).unwrap()).collect();
    radii.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let center = Vec2::new(domain.side / 2.0, domain.side / 2.0);
    let pitch = 2.0 * 1_600.0 + 300.0;
    let mut slots = Vec::new();
    let rows = [5usize, 4, 5, 4];
    let mut row_y = -1.5 * pitch * 0.87;
    for &n in rows.iter() {
        for c in 0..n {
            slots.push(Vec2::new((c as f64 - (n as f64 - 1.0) / 2.0) * pitch, row_y));
        }
        row_y += pitch * 0.87;
    }
    let large_slots = [11usize, 0, 4, 14, 17, 7];
    let small_slots: Vec<usize> = (0..slots.len()).filter(|s| !large_slots.contains(s)).collect();
    let mut floes = Vec::new();
    for (i, &r) in radii.iter().enumerate() {
        let h = sample_thickness(&mut rng, &thick, tcaps).unwrap();
        let slot = if i < 6 { large_slots[i] } else { small_slots[i - 6] };
        floes.push(Floe::new(i as u64, r, h, domain.wrap_point(center + slots[slot])).unwrap());
    }
    FloeField { domain, floes }
}

fn main() {
    let seed = 3u64;
    let domain = Domain::new(50_000.0).unwrap();
    let mat = MaterialParams::default();
    let none = InflationNoise::disabled();
    let settings = StepSettings::default();
    let field = clustered(domain, seed);
    let ocean = build_mode_set(&OceanSpec {
        max_wavenumber: 1, rossby: 0.1, side: domain.side, time_scale: 86_400.0,
        balanced: ClassParams::new(0.5, 0.1), gravity: ClassParams::new(0.5, 0.05), gravity_enabled: false,
    }).unwrap();
    let mut truth = SimulationState::new(field, ocean).unwrap();
    let mut rng = seeds::stream(seed, 55);
    for _ in 0..1_000 { step(&mut truth, &settings, &mat, &none, &mut rng).unwrap(); }
    let (reduced, report) = reduce(&truth.field, &ReductionConfig::new(6, 6), &mat).unwrap();
    println!("reduced: {} floes, deleted {:?}", reduced.len(), report.deleted_ids);
    // residual overlaps?
    for i in 0..reduced.len() {
        for j in (i+1)..reduced.len() {
            let (a, b) = (&reduced.floes[i], &reduced.floes[j]);
            let d = domain.min_image(a.position, b.position).norm();
            let overlap = (a.radius + b.radius) - d;
            if overlap > 0.0 { println!("  overlap {}-{}: {:.2} m", a.id, b.id, overlap); }
        }
    }
    let mut companion = SimulationState::new(reduced, truth.ocean.clone()).unwrap();
    let mut crng = seeds::stream(seed, 56);
    for s in 0..10_000u64 {
        match step(&mut companion, &settings, &mat, &none, &mut crng) {
            Ok(()) => {
                let maxv = companion.field.floes.iter().map(|f| f.velocity.norm()).fold(0.0, f64::max);
                if s % 1000 == 0 || maxv > 5.0 {
                    println!("step {s}: max|v| {maxv:.3e}");
                    if maxv > 5.0 && s > 20 { break; }
                }
            }
            Err(e) => { println!("step {s}: ERROR {e}");
                for f in &companion.field.floes { println!("  {} r={:.0} v=({:.2e},{:.2e})", f.id, f.radius, f.velocity.x, f.velocity.y); }
                break; }
        }
    }
}
