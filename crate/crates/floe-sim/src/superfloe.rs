//! Physics-constrained coarse-graining of small floes into superfloes.
//!
//! Merging two floes conserves mass, disk area, linear momentum, and spin
//! angular momentum exactly: the merged radius satisfies
//! `r^2 = r_a^2 + r_b^2`, the thickness follows from mass over area, the
//! velocity is the momentum-weighted mean, and the angular velocity is set
//! by matching `I w`. Reduction keeps the largest floes untouched and
//! repeatedly either merges the currently smallest remaining floe with its
//! nearest neighbor or deletes it when it is isolated beyond the threshold
//! `isolation_factor * (r_smallest + r_nearest)`.

use crate::domain::{Domain, Vec2};
use crate::error::{Error, Result};
use crate::floe::{Floe, FloeField, FloeKind, MaterialParams};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// Reduction targets and knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReductionConfig {
    /// Number of largest floes retained untouched (L0).
    pub large_count: usize,
    /// Target superfloe count for the remaining floes (Ls).
    pub super_target: usize,
    /// Deletion threshold multiplier on the sum of radii.
    pub isolation_factor: f64,
    /// Use the printed thickness form with a squared pi, which breaks the
    /// mass-area-thickness identity; off by default.
    pub literal_thickness: bool,
    /// Push-apart sweeps after reduction. A superfloe centered on its
    /// cluster's center of mass can overlap bystanders deeply; releasing
    /// that as elastic energy would eject floes violently, so the overlaps
    /// are relaxed positionally instead. Retained large floes never move.
    pub relax_sweeps: usize,
}

impl ReductionConfig {
    pub fn new(large_count: usize, super_target: usize) -> Self {
        ReductionConfig {
            large_count,
            super_target,
            isolation_factor: std::f64::consts::SQRT_2,
            literal_thickness: false,
            relax_sweeps: crate::floe::OVERLAP_SWEEPS,
        }
    }
}

/// Summary statistics of one floe field, in the shape of the reduction
/// comparison tables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FloeStats {
    pub count: usize,
    pub concentration: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub h_min: f64,
    pub h_max: f64,
}

impl FloeStats {
    pub fn of(field: &FloeField) -> FloeStats {
        let mut stats = FloeStats {
            count: field.len(),
            concentration: field.concentration(),
            r_min: f64::INFINITY,
            r_max: 0.0,
            h_min: f64::INFINITY,
            h_max: 0.0,
        };
        for f in &field.floes {
            stats.r_min = stats.r_min.min(f.radius);
            stats.r_max = stats.r_max.max(f.radius);
            stats.h_min = stats.h_min.min(f.thickness);
            stats.h_max = stats.h_max.max(f.thickness);
        }
        stats
    }
}

/// What the reduction changed: statistics, provenance, and the conservation
/// ledger. All removed-quantity entries are attributable solely to
/// deletions; merging conserves them exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionReport {
    pub before: FloeStats,
    pub after: FloeStats,
    pub deleted_ids: Vec<u64>,
    /// Output superfloe id -> original floe ids composing it.
    pub merge_tree: BTreeMap<u64, Vec<u64>>,
    pub mass_removed: f64,
    pub area_removed: f64,
    pub momentum_removed: Vec2,
    pub spin_momentum_removed: f64,
}

/// Statistics-only comparison of two fields (no provenance), for reporting
/// on fields reduced elsewhere. The deltas are total differences; with a
/// deletion-only ledger they equal the removed sums exactly.
pub fn reduction_report(
    full: &FloeField,
    reduced: &FloeField,
    mat: &MaterialParams,
) -> ReductionReport {
    let totals = |field: &FloeField| {
        let mut mass = 0.0;
        let mut area = 0.0;
        let mut momentum = Vec2::ZERO;
        let mut spin = 0.0;
        for f in &field.floes {
            let m = f.mass(mat);
            mass += m;
            area += f.area();
            momentum += f.velocity * m;
            spin += f.inertia(mat) * f.angular_velocity;
        }
        (mass, area, momentum, spin)
    };
    let (m0, a0, p0, l0) = totals(full);
    let (m1, a1, p1, l1) = totals(reduced);
    ReductionReport {
        before: FloeStats::of(full),
        after: FloeStats::of(reduced),
        deleted_ids: Vec::new(),
        merge_tree: BTreeMap::new(),
        mass_removed: m0 - m1,
        area_removed: a0 - a1,
        momentum_removed: p0 - p1,
        spin_momentum_removed: l0 - l1,
    }
}

/// Merges two floes into one superfloe. The result is independent of the
/// argument order bit for bit: the pair is canonicalized by id and the
/// center of mass is taken in the minimum-image frame of the first floe.
/// The merged id is the smaller constituent id; the angular datum restarts
/// at zero (floes are rotationally symmetric, so it only matters for
/// observation bookkeeping).
pub fn merge_pair(a: &Floe, b: &Floe, domain: Domain, mat: &MaterialParams) -> Floe {
    merge_pair_with(a, b, domain, mat, false)
}

pub fn merge_pair_with(
    a: &Floe,
    b: &Floe,
    domain: Domain,
    mat: &MaterialParams,
    literal_thickness: bool,
) -> Floe {
    let (p, q) = if a.id <= b.id { (a, b) } else { (b, a) };
    let mass_p = p.mass(mat);
    let mass_q = q.mass(mat);
    let mass = mass_p + mass_q;

    let radius = (p.radius * p.radius + q.radius * q.radius).sqrt();
    let area_constant = if literal_thickness { PI * PI } else { PI };
    let thickness = mass / (mat.ice_density * area_constant * radius * radius);

    let offset = domain.min_image(p.position, q.position);
    let position = domain.wrap_point(p.position + offset * (mass_q / mass));

    let velocity = (p.velocity * mass_p + q.velocity * mass_q) * (1.0 / mass);

    let inertia = mass * radius * radius;
    let angular_velocity = (p.inertia(mat) * p.angular_velocity
        + q.inertia(mat) * q.angular_velocity)
        / inertia;

    Floe {
        id: p.id,
        radius,
        thickness,
        position,
        angle: 0.0,
        velocity,
        angular_velocity,
        kind: FloeKind::Super,
    }
}

/// Reduces a field to `large_count + super_target` floes. The largest floes
/// pass through bit-identical; the loop takes the currently smallest
/// remaining floe, finds its nearest neighbor among the remaining floes and
/// superfloes (never among the retained large floes), and either deletes it
/// when isolated or replaces the pair with their merge. Radius ties break
/// toward the lower id, distance ties likewise. A field already at the
/// target size passes through unchanged.
pub fn reduce(
    field: &FloeField,
    cfg: &ReductionConfig,
    mat: &MaterialParams,
) -> Result<(FloeField, ReductionReport)> {
    let target = cfg.large_count + cfg.super_target;
    if cfg.super_target == 0 {
        return Err(Error::Config("superfloe target must be at least 1".into()));
    }
    if !(cfg.isolation_factor.is_finite() && cfg.isolation_factor > 0.0) {
        return Err(Error::Config(format!(
            "isolation factor must be positive, got {}",
            cfg.isolation_factor
        )));
    }
    if field.len() < target {
        return Err(Error::Config(format!(
            "cannot reduce {} floes to {} large + {} super",
            field.len(),
            cfg.large_count,
            cfg.super_target
        )));
    }

    // The large set is the first L0 under (radius desc, id asc) ordering.
    let mut order: Vec<usize> = (0..field.len()).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (&field.floes[i], &field.floes[j]);
        b.radius
            .partial_cmp(&a.radius)
            .unwrap()
            .then(a.id.cmp(&b.id))
    });
    let large: Vec<Floe> = order[..cfg.large_count]
        .iter()
        .map(|&i| field.floes[i])
        .collect();
    let mut working: Vec<Floe> = order[cfg.large_count..]
        .iter()
        .map(|&i| field.floes[i])
        .collect();

    let mut merge_tree: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
    let mut deleted_ids = Vec::new();
    let mut mass_removed = 0.0;
    let mut area_removed = 0.0;
    let mut momentum_removed = Vec2::ZERO;
    let mut spin_momentum_removed = 0.0;

    while cfg.large_count + working.len() > target {
        let smallest = working
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                a.radius
                    .partial_cmp(&b.radius)
                    .unwrap()
                    .then(a.id.cmp(&b.id))
            })
            .map(|(i, _)| i)
            .expect("working set is nonempty");
        let s = working[smallest];

        let nearest = working
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != smallest)
            .map(|(i, f)| {
                let d = field.domain.min_image(s.position, f.position).norm();
                (i, d, f.id)
            })
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.2.cmp(&b.2)))
            .expect("at least two floes remain while above target");
        let (n_idx, distance, _) = nearest;
        let n = working[n_idx];

        if distance > cfg.isolation_factor * (s.radius + n.radius) {
            // Record the original constituents when a superfloe is deleted.
            match merge_tree.remove(&s.id) {
                Some(members) => deleted_ids.extend(members),
                None => deleted_ids.push(s.id),
            }
            mass_removed += s.mass(mat);
            area_removed += s.area();
            momentum_removed += s.velocity * s.mass(mat);
            spin_momentum_removed += s.inertia(mat) * s.angular_velocity;
            working.swap_remove(smallest);
        } else {
            let merged = merge_pair_with(&s, &n, field.domain, mat, cfg.literal_thickness);
            let mut members = merge_tree.remove(&s.id).unwrap_or_else(|| vec![s.id]);
            members.extend(merge_tree.remove(&n.id).unwrap_or_else(|| vec![n.id]));
            members.sort_unstable();
            merge_tree.insert(merged.id, members);

            let (first, second) = (smallest.max(n_idx), smallest.min(n_idx));
            working.swap_remove(first);
            working.swap_remove(second);
            working.push(merged);
        }
    }

    working.sort_by(|a, b| {
        b.radius
            .partial_cmp(&a.radius)
            .unwrap()
            .then(a.id.cmp(&b.id))
    });
    let mut floes = large;
    floes.extend(working);
    let mut reduced = FloeField {
        domain: field.domain,
        floes,
    };
    // Only merging can create fresh overlap; an untouched field (and a
    // deletions-only reduction) passes through with its positions intact.
    if !merge_tree.is_empty() {
        relax_keeping_large(&mut reduced, cfg.large_count, cfg.relax_sweeps);
    }

    let report = ReductionReport {
        before: FloeStats::of(field),
        after: FloeStats::of(&reduced),
        deleted_ids,
        merge_tree,
        mass_removed,
        area_removed,
        momentum_removed,
        spin_momentum_removed,
    };
    Ok((reduced, report))
}

/// Pairwise push-apart sweeps where the first `large_count` floes are
/// immovable: a large-small overlap moves the small floe by the full
/// deficit, small-small overlaps split the deficit evenly, and large-large
/// overlaps (initialization residuals in the originals) stay untouched.
///
/// A superfloe merged from constituents on opposite sides of a large floe
/// lands its center of mass inside that floe, and sweeps cannot free a floe
/// squeezed between immovable neighbors. Such stubborn floes are relocated
/// to the nearest overlap-free position instead (deterministic ring
/// search), then the sweeps finish the cleanup.
fn relax_keeping_large(field: &mut FloeField, large_count: usize, sweeps: usize) {
    push_apart_sweeps(field, large_count, sweeps);

    let stubborn: Vec<usize> = (large_count..field.len())
        .filter(|&i| worst_overlap(field, i) > 1.0)
        .collect();
    if stubborn.is_empty() {
        return;
    }
    for i in stubborn {
        relocate_to_free_spot(field, i);
    }
    push_apart_sweeps(field, large_count, sweeps);
}

fn push_apart_sweeps(field: &mut FloeField, large_count: usize, sweeps: usize) {
    let domain = field.domain;
    let n = field.len();
    for _ in 0..sweeps {
        let mut moved = false;
        for i in 0..n {
            for j in (i + 1)..n {
                if j < large_count {
                    continue;
                }
                let delta = domain.min_image(field.floes[i].position, field.floes[j].position);
                let d = delta.norm();
                let deficit = (field.floes[i].radius + field.floes[j].radius) - d;
                if deficit <= 0.0 {
                    continue;
                }
                let normal = if d > 0.0 {
                    delta * (1.0 / d)
                } else {
                    Vec2::new(1.0, 0.0)
                };
                if i < large_count {
                    field.floes[j].position =
                        domain.wrap_point(field.floes[j].position + normal * deficit);
                } else {
                    field.floes[i].position =
                        domain.wrap_point(field.floes[i].position - normal * (0.5 * deficit));
                    field.floes[j].position =
                        domain.wrap_point(field.floes[j].position + normal * (0.5 * deficit));
                }
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
}

fn worst_overlap(field: &FloeField, index: usize) -> f64 {
    let f = &field.floes[index];
    let mut worst: f64 = 0.0;
    for (j, other) in field.floes.iter().enumerate() {
        if j == index {
            continue;
        }
        let d = field.domain.min_image(f.position, other.position).norm();
        worst = worst.max((f.radius + other.radius) - d);
    }
    worst
}

/// Moves one floe to the closest position (over growing rings of candidate
/// angles) where it overlaps nothing.
fn relocate_to_free_spot(field: &mut FloeField, index: usize) {
    let origin = field.floes[index].position;
    let radius = field.floes[index].radius;
    let step = radius.max(field.domain.side / 256.0);
    for ring in 1..=256 {
        for angle_idx in 0..16 {
            let angle = std::f64::consts::TAU * angle_idx as f64 / 16.0;
            let candidate = field.domain.wrap_point(
                origin + Vec2::new(angle.cos(), angle.sin()) * (ring as f64 * 0.5 * step),
            );
            let free = field.floes.iter().enumerate().all(|(j, other)| {
                j == index
                    || field.domain.min_image(candidate, other.position).norm()
                        >= radius + other.radius
            });
            if free {
                field.floes[index].position = candidate;
                return;
            }
        }
    }
    // No free spot found; leave it and let the sweeps shave what they can.
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::floe::{initialize_field, Caps, FieldSpec, SizeDistribution, ThicknessDistribution};

    fn dom() -> Domain {
        Domain::new(50_000.0).unwrap()
    }

    fn floe(id: u64, r: f64, h: f64, x: f64, y: f64) -> Floe {
        Floe::new(id, r, h, Vec2::new(x, y)).unwrap()
    }

    #[test]
    fn merged_radius_is_root_sum_of_squares() {
        let mat = MaterialParams::default();
        let a = floe(0, 3_000.0, 1.0, 10_000.0, 10_000.0);
        let b = floe(1, 4_000.0, 1.0, 12_000.0, 10_000.0);
        let m = merge_pair(&a, &b, dom(), &mat);
        assert!((m.radius - 5_000.0).abs() < 1e-9);
        assert_eq!(m.kind, FloeKind::Super);
    }

    #[test]
    fn merged_velocity_is_momentum_weighted() {
        let mat = MaterialParams::default();
        // Equal radii, thickness ratio 3 gives an exact 1:3 mass ratio.
        let mut a = floe(0, 1_000.0, 1.0, 10_000.0, 10_000.0);
        let mut b = floe(1, 1_000.0, 3.0, 11_500.0, 10_000.0);
        a.velocity = Vec2::new(2.0, 0.0);
        b.velocity = Vec2::new(0.0, 4.0);
        let m = merge_pair(&a, &b, dom(), &mat);
        assert!((m.velocity - Vec2::new(0.5, 3.0)).norm() < 1e-12);
    }

    #[test]
    fn merged_spin_conserves_angular_momentum() {
        let mat = MaterialParams::default();
        let w0 = 3e-5;
        let mut a = floe(0, 1_000.0, 1.0, 10_000.0, 10_000.0);
        let mut b = floe(1, 1_000.0, 1.0, 11_500.0, 10_000.0);
        a.angular_velocity = w0;
        b.angular_velocity = w0;
        let m = merge_pair(&a, &b, dom(), &mat);
        assert!((m.angular_velocity - w0 / 2.0).abs() < 1e-18);
        let before = a.inertia(&mat) * w0 + b.inertia(&mat) * w0;
        let after = m.inertia(&mat) * m.angular_velocity;
        assert!((after - before).abs() <= 1e-12 * before.abs());
    }

    #[test]
    fn merged_thickness_preserves_mass_area_identity() {
        let mat = MaterialParams::default();
        let a = floe(0, 1_200.0, 0.8, 10_000.0, 10_000.0);
        let b = floe(1, 900.0, 2.1, 11_500.0, 10_000.0);
        let m = merge_pair(&a, &b, dom(), &mat);
        // m = rho pi r^2 h must keep holding for the merged floe.
        assert!((m.mass(&mat) - (a.mass(&mat) + b.mass(&mat))).abs() < 1e-3);
        // The literal printed form divides by pi^2 instead.
        let lit = merge_pair_with(&a, &b, dom(), &mat, true);
        assert!((lit.thickness - m.thickness / PI).abs() < 1e-12 * m.thickness);
    }

    #[test]
    fn merged_thickness_is_convex_in_constituents() {
        let mat = MaterialParams::default();
        let a = floe(0, 1_200.0, 0.5, 10_000.0, 10_000.0);
        let b = floe(1, 700.0, 3.2, 11_500.0, 10_000.0);
        let m = merge_pair(&a, &b, dom(), &mat);
        assert!(m.thickness > 0.5 && m.thickness < 3.2);
    }

    #[test]
    fn merge_is_commutative_bit_for_bit() {
        let mat = MaterialParams::default();
        let mut a = floe(3, 1_342.0, 0.73, 49_100.0, 200.0);
        let mut b = floe(11, 877.0, 2.6, 48_000.0, 49_500.0);
        a.velocity = Vec2::new(0.11, -0.07);
        b.velocity = Vec2::new(-0.02, 0.23);
        a.angular_velocity = 4e-5;
        b.angular_velocity = -9e-5;
        assert_eq!(merge_pair(&a, &b, dom(), &mat), merge_pair(&b, &a, dom(), &mat));
    }

    #[test]
    fn merge_center_of_mass_wraps() {
        let mat = MaterialParams::default();
        // Same mass on both sides of the periodic seam.
        let a = floe(0, 1_000.0, 1.0, 49_900.0, 10_000.0);
        let b = floe(1, 1_000.0, 1.0, 100.0, 10_000.0);
        let m = merge_pair(&a, &b, dom(), &mat);
        assert!(m.position.x < 100.0 || m.position.x > 49_900.0);
        let d = dom().wrap_delta(m.position.x - 0.0);
        assert!(d.abs() < 1.0, "center of mass {:?}", m.position);
    }

    fn crowded_field(count: usize, seed: u64) -> FloeField {
        let spec = FieldSpec {
            count,
            size: SizeDistribution::new(1.0, 1_500.0).unwrap(),
            radius_caps: Caps::new(1_000.0, 4_200.0).unwrap(),
            thickness: ThicknessDistribution::new(2.0, 1.3).unwrap(),
            thickness_caps: Caps::new(0.1, 3.5).unwrap(),
        };
        initialize_field(&spec, dom(), seed).unwrap()
    }

    #[test]
    fn reduce_reaches_target_and_keeps_larges_bit_identical() {
        let mat = MaterialParams::default();
        let field = crowded_field(60, 8);
        let cfg = ReductionConfig::new(10, 15);
        let (reduced, report) = reduce(&field, &cfg, &mat).unwrap();
        assert_eq!(reduced.len(), 25);
        for i in 0..10 {
            assert_eq!(reduced.floes[i], field.floes[i]);
        }
        assert_eq!(report.after.count, 25);
        assert!(report.after.r_min > report.before.r_min);
    }

    #[test]
    fn reduce_identity_at_target_size() {
        let mat = MaterialParams::default();
        let field = crowded_field(30, 4);
        let cfg = ReductionConfig::new(10, 20);
        let (reduced, report) = reduce(&field, &cfg, &mat).unwrap();
        assert_eq!(reduced.len(), 30);
        assert!(report.deleted_ids.is_empty());
        assert!(report.merge_tree.is_empty());
        let mut expected: Vec<Floe> = field.floes.clone();
        expected.sort_by(|a, b| b.radius.partial_cmp(&a.radius).unwrap());
        assert_eq!(reduced.floes, expected);
    }

    #[test]
    fn reduce_below_target_is_rejected() {
        let mat = MaterialParams::default();
        let field = crowded_field(20, 4);
        let cfg = ReductionConfig::new(10, 20);
        assert!(reduce(&field, &cfg, &mat).is_err());
    }

    #[test]
    fn conservation_ledger_matches_deletions_exactly() {
        let mat = MaterialParams::default();
        let mut field = crowded_field(40, 12);
        for (i, f) in field.floes.iter_mut().enumerate() {
            f.velocity = Vec2::new(0.01 * i as f64, -0.005 * i as f64);
            f.angular_velocity = 1e-6 * i as f64;
        }
        let cfg = ReductionConfig::new(8, 8);
        let (reduced, report) = reduce(&field, &cfg, &mat).unwrap();

        let ledger = reduction_report(&field, &reduced, &mat);
        let scale = field.floes.iter().map(|f| f.mass(&mat)).sum::<f64>();
        assert!((ledger.mass_removed - report.mass_removed).abs() < 1e-9 * scale);
        assert!((ledger.area_removed - report.area_removed).abs() < 1e-6);
        assert!(
            (ledger.momentum_removed - report.momentum_removed).norm()
                < 1e-9 * scale.max(1.0)
        );
    }

    #[test]
    fn merge_tree_partitions_the_small_floes() {
        let mat = MaterialParams::default();
        let field = crowded_field(50, 3);
        let cfg = ReductionConfig::new(10, 10);
        let (reduced, report) = reduce(&field, &cfg, &mat).unwrap();

        let mut accounted: Vec<u64> = report.deleted_ids.clone();
        for members in report.merge_tree.values() {
            accounted.extend(members);
        }
        // Survivors that were never merged.
        for f in &reduced.floes[cfg.large_count..] {
            if f.kind == FloeKind::Ordinary {
                accounted.push(f.id);
            }
        }
        accounted.sort_unstable();
        let mut expected: Vec<u64> = (cfg.large_count as u64..field.len() as u64).collect();
        expected.sort_unstable();
        assert_eq!(accounted, expected);
    }

    #[test]
    fn isolated_smallest_floe_is_deleted() {
        let mat = MaterialParams::default();
        // Two big floes close together, one tiny floe far away.
        let floes = vec![
            floe(0, 3_000.0, 1.0, 10_000.0, 10_000.0),
            floe(1, 2_900.0, 1.0, 14_000.0, 10_000.0),
            floe(2, 1_000.0, 1.0, 40_000.0, 40_000.0),
        ];
        let field = FloeField {
            domain: dom(),
            floes,
        };
        let cfg = ReductionConfig::new(1, 1);
        let (reduced, report) = reduce(&field, &cfg, &mat).unwrap();
        assert_eq!(report.deleted_ids, vec![2]);
        assert_eq!(reduced.len(), 2);
        assert!((report.mass_removed - field.floes[2].mass(&mat)).abs() < 1e-3);
    }
}
