//! Pairwise floe contact forces under periodic boundary conditions.
//!
//! Normal forces follow Hooke's law scaled by the circle-circle intersection
//! chord, tangential forces follow a linear shear law capped by Coulomb
//! friction. The normal `n` points from floe `l` toward floe `j`; with the
//! signed overlap negative in contact, the Hooke force is repulsive without
//! extra sign conventions. Loads are accumulated once per unordered pair and
//! applied equal and opposite, either over all pairs or through a uniform
//! cell grid whose cell size is at least twice the largest radius.

use crate::domain::{Domain, Vec2};
use crate::error::{Error, Result};
use crate::floe::{Floe, FloeField, MaterialParams};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Geometry and kinematics of one contact, from floe `l` toward floe `j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactPair {
    pub id_l: u64,
    pub id_j: u64,
    pub radius_l: f64,
    pub radius_j: f64,
    /// Smaller of the two thicknesses (m), for the optional thickness scaling.
    pub min_thickness: f64,
    /// Center distance under the minimum image (m).
    pub distance: f64,
    /// Signed gap d - (r_l + r_j); negative in contact (m).
    pub overlap: f64,
    /// Unit vector from the center of l toward the center of j.
    pub normal: Vec2,
    /// Unit vector 90 degrees counterclockwise from the normal.
    pub tangent: Vec2,
    /// Intersection chord length (m).
    pub chord: f64,
    /// Relative tangential surface speed at the contact (m/s).
    pub tangential_speed: f64,
}

/// Accumulated contact force and torque on one floe.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BodyLoads {
    pub force: Vec2,
    /// Torque about the vertical axis (N m).
    pub torque: f64,
}

/// Which pair-enumeration path to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadPath {
    /// Uniform cell grid; falls back to all pairs when the domain is too
    /// small for an unambiguous 3x3 neighborhood.
    Grid,
    /// The O(L^2) reference path.
    AllPairs,
}

/// Receives every contact found during load accumulation.
pub trait ContactObserver {
    fn on_contact(
        &mut self,
        pair: &ContactPair,
        normal_force: Vec2,
        tangential_force: Vec2,
        torque_l: f64,
        torque_j: f64,
    );
}

/// Load accumulation result plus the stability data the integrator needs.
#[derive(Debug, Clone)]
pub struct LoadSummary {
    pub loads: Vec<BodyLoads>,
    /// Shortest linear-oscillation period implied by any active contact (s).
    pub min_period: Option<f64>,
    /// Tightest step cap implied by any approaching separated pair (s).
    /// Advancing further than this in one sub-step would let the pair form a
    /// contact with enough penetration to inject spurious elastic energy.
    pub approach_cap: Option<f64>,
    pub pair_count: usize,
}

/// Tests two floes for contact and, if they touch with strictly negative
/// gap, returns the fully populated pair. Touching exactly is not contact.
/// Coincident centers are an error: they indicate a broken state.
pub fn detect_contact(l: &Floe, j: &Floe, domain: Domain) -> Result<Option<ContactPair>> {
    let delta = domain.min_image(l.position, j.position);
    let distance = delta.norm();
    if distance == 0.0 {
        return Err(Error::DegenerateContact(l.id, j.id));
    }
    let overlap = distance - (l.radius + j.radius);
    if overlap >= 0.0 {
        return Ok(None);
    }
    let normal = delta * (1.0 / distance);
    let tangent = normal.perp();

    // Circle-circle intersection chord, clamped against rounding and against
    // the (nested) regime where the intersection degenerates.
    let d2 = distance * distance;
    let arg = 4.0 * d2 * l.radius * l.radius
        - (d2 - j.radius * j.radius + l.radius * l.radius).powi(2);
    let chord = (arg.max(0.0).sqrt() / distance).min(2.0 * l.radius.min(j.radius));

    // Surface velocity of j relative to l at the contact, projected on the
    // tangent. The contact arm of j points toward l and vice versa.
    let surface_j = j.velocity + (-j.radius * normal).perp() * j.angular_velocity;
    let surface_l = l.velocity + (l.radius * normal).perp() * l.angular_velocity;
    let tangential_speed = (surface_j - surface_l).dot(tangent);

    Ok(Some(ContactPair {
        id_l: l.id,
        id_j: j.id,
        radius_l: l.radius,
        radius_j: j.radius,
        min_thickness: l.thickness.min(j.thickness),
        distance,
        overlap,
        normal,
        tangent,
        chord,
        tangential_speed,
    }))
}

fn stiffness_scale(pair: &ContactPair, mat: &MaterialParams) -> f64 {
    if mat.thickness_scaling {
        pair.min_thickness
    } else {
        1.0
    }
}

/// Hooke normal force on floe `l` from floe `j` (repulsive for overlapping
/// floes).
pub fn normal_force(pair: &ContactPair, mat: &MaterialParams) -> Vec2 {
    debug_assert!(pair.overlap < 0.0);
    pair.normal * (stiffness_scale(pair, mat) * pair.chord * mat.youngs_modulus * pair.overlap)
}

/// Shear tangential force on floe `l` from floe `j`, with magnitude capped
/// by Coulomb friction at `mu * |f_n|` while preserving direction.
pub fn tangential_force(pair: &ContactPair, mat: &MaterialParams) -> Vec2 {
    let scale = stiffness_scale(pair, mat);
    let raw = scale * pair.chord * mat.shear_modulus * pair.tangential_speed;
    let cap = mat.friction * (scale * pair.chord * mat.youngs_modulus * pair.overlap).abs();
    let magnitude = raw.clamp(-cap, cap);
    pair.tangent * magnitude
}

/// Contact torque on floe `l`: (r_l n x f_t) . z_hat.
pub fn contact_torque(pair: &ContactPair, tangential: Vec2) -> f64 {
    pair.radius_l * pair.normal.cross(tangential)
}

/// Torque the same contact exerts on floe `j`. Both arms see the same
/// sliding direction, so the sign matches `contact_torque` with the arm
/// length swapped.
pub fn contact_torque_other(pair: &ContactPair, tangential: Vec2) -> f64 {
    pair.radius_j * pair.normal.cross(tangential)
}

/// Accumulates contact loads for every floe. See [`accumulate_loads_full`].
pub fn accumulate_loads(
    field: &FloeField,
    mat: &MaterialParams,
    path: LoadPath,
) -> Result<Vec<BodyLoads>> {
    Ok(accumulate_loads_full(field, mat, path, None)?.loads)
}

/// Accumulates contact loads, reporting every pair to an optional observer
/// and returning the shortest contact oscillation period for the stiffness
/// guard. Pair forces are computed once and applied equal and opposite, so
/// the total force over all floes vanishes identically.
pub fn accumulate_loads_full(
    field: &FloeField,
    mat: &MaterialParams,
    path: LoadPath,
    mut observer: Option<&mut dyn ContactObserver>,
) -> Result<LoadSummary> {
    let n = field.len();
    let mut summary = LoadSummary {
        loads: vec![BodyLoads::default(); n],
        min_period: None,
        approach_cap: None,
        pair_count: 0,
    };

    let mut handle = |i: usize, j: usize, summary: &mut LoadSummary| -> Result<()> {
        let (l, r) = (&field.floes[i], &field.floes[j]);
        let Some(pair) = detect_contact(l, r, field.domain)? else {
            if let Some(cap) = approach_step_cap(l, r, field.domain, mat) {
                summary.approach_cap = Some(match summary.approach_cap {
                    Some(c) => c.min(cap),
                    None => cap,
                });
            }
            return Ok(());
        };
        let f_n = normal_force(&pair, mat);
        let f_t = tangential_force(&pair, mat);
        let torque_l = contact_torque(&pair, f_t);
        let torque_j = contact_torque_other(&pair, f_t);
        let total = f_n + f_t;
        summary.loads[i].force += total;
        summary.loads[j].force -= total;
        summary.loads[i].torque += torque_l;
        summary.loads[j].torque += torque_j;
        summary.pair_count += 1;

        let reduced_mass = {
            let (ml, mj) = (l.mass(mat), r.mass(mat));
            ml * mj / (ml + mj)
        };
        let stiffness = stiffness_scale(&pair, mat)
            * pair.chord
            * mat.youngs_modulus.max(mat.shear_modulus);
        if stiffness > 0.0 {
            let period = TAU * (reduced_mass / stiffness).sqrt();
            summary.min_period = Some(match summary.min_period {
                Some(p) => p.min(period),
                None => period,
            });
        }
        if let Some(obs) = observer.as_deref_mut() {
            obs.on_contact(&pair, f_n, f_t, torque_l, torque_j);
        }
        Ok(())
    };

    match path {
        LoadPath::Grid => {
            let grid = CellGrid::build(field);
            match grid {
                Some(grid) => {
                    for (i, j) in grid.candidate_pairs() {
                        handle(i, j, &mut summary)?;
                    }
                }
                None => {
                    for i in 0..n {
                        for j in (i + 1)..n {
                            handle(i, j, &mut summary)?;
                        }
                    }
                }
            }
        }
        LoadPath::AllPairs => {
            for i in 0..n {
                for j in (i + 1)..n {
                    handle(i, j, &mut summary)?;
                }
            }
        }
    }
    Ok(summary)
}

/// Fraction of the incoming kinetic energy a newly formed contact may hold
/// as elastic energy on its first detected sub-step.
const FORMATION_ENERGY_FRACTION: f64 = 0.25;

/// Time cap for a separated, closing pair: the sub-step must not let the
/// pair jump from "no contact" to a penetration deeper than the natural
/// elastic amplitude for its closing speed. The shallow-overlap chord is
/// `2 sqrt(2 r_geo delta)`, so the stored elastic energy grows like
/// `delta^(5/2)`; the returned cap reaches the contact with at most
/// [`FORMATION_ENERGY_FRACTION`] of the pair's kinetic energy stored.
fn approach_step_cap(l: &Floe, j: &Floe, domain: Domain, mat: &MaterialParams) -> Option<f64> {
    let delta = domain.min_image(l.position, j.position);
    let distance = delta.norm();
    let gap = distance - (l.radius + j.radius);
    debug_assert!(gap >= 0.0);
    let closing = -(j.velocity - l.velocity).dot(delta) / distance;
    if closing <= 0.0 {
        return None;
    }
    let (ml, mj) = (l.mass(mat), j.mass(mat));
    let reduced_mass = ml * mj / (ml + mj);
    let r_geo = l.radius * j.radius / (l.radius + j.radius);
    let scale = if mat.thickness_scaling {
        l.thickness.min(j.thickness)
    } else {
        1.0
    };
    let stiffness = scale * mat.youngs_modulus.max(mat.shear_modulus);
    let allow = (5.0 * FORMATION_ENERGY_FRACTION * reduced_mass * closing * closing
        / (8.0 * stiffness * (2.0 * r_geo).sqrt()))
    .powf(0.4);
    Some((gap + allow) / closing)
}

/// Uniform spatial grid with cell size >= 2 r_max, rebuilt from scratch on
/// every call. Contacts can then only involve floes in the same or adjacent
/// cells.
struct CellGrid {
    cells_per_side: usize,
    bins: Vec<Vec<usize>>,
}

impl CellGrid {
    /// Returns `None` when fewer than 3 cells fit per side; the half-shell
    /// enumeration would then alias cells and double-count pairs.
    fn build(field: &FloeField) -> Option<CellGrid> {
        let r_max = field.max_radius();
        if r_max <= 0.0 {
            return None;
        }
        let cells_per_side = (field.domain.side / (2.0 * r_max)).floor() as usize;
        if cells_per_side < 3 {
            return None;
        }
        let cell = field.domain.side / cells_per_side as f64;
        let mut bins = vec![Vec::new(); cells_per_side * cells_per_side];
        for (idx, floe) in field.floes.iter().enumerate() {
            let cx = ((floe.position.x / cell) as usize).min(cells_per_side - 1);
            let cy = ((floe.position.y / cell) as usize).min(cells_per_side - 1);
            bins[cy * cells_per_side + cx].push(idx);
        }
        Some(CellGrid {
            cells_per_side,
            bins,
        })
    }

    /// Unordered candidate pairs: within-cell pairs plus pairs against the
    /// forward half of the 3x3 neighborhood, so each cell pair is visited
    /// exactly once under periodic wrapping.
    fn candidate_pairs(&self) -> Vec<(usize, usize)> {
        const FORWARD: [(isize, isize); 4] = [(1, 0), (1, 1), (0, 1), (-1, 1)];
        let n = self.cells_per_side as isize;
        let mut pairs = Vec::new();
        for cy in 0..self.cells_per_side {
            for cx in 0..self.cells_per_side {
                let own = &self.bins[cy * self.cells_per_side + cx];
                for a in 0..own.len() {
                    for b in (a + 1)..own.len() {
                        pairs.push((own[a].min(own[b]), own[a].max(own[b])));
                    }
                }
                for (dx, dy) in FORWARD {
                    let nx = (cx as isize + dx).rem_euclid(n) as usize;
                    let ny = (cy as isize + dy).rem_euclid(n) as usize;
                    let other = &self.bins[ny * self.cells_per_side + nx];
                    for &a in own {
                        for &b in other {
                            pairs.push((a.min(b), a.max(b)));
                        }
                    }
                }
            }
        }
        pairs
    }
}
