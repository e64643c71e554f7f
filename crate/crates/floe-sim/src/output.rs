//! File formats: field snapshots (JSON and flat CSV), trajectory and
//! contact-log CSV, gridded ocean samples, reduction reports, assimilation
//! tables, and the fixed-layout little-endian binary checkpoint.
//!
//! Every CSV starts with a header row naming the units; JSON is used for
//! structured reports so external plotting stays format-agnostic.

use crate::contact::{ContactObserver, ContactPair};
use crate::da::DaRun;
use crate::domain::{Domain, Vec2};
use crate::error::{Error, Result};
use crate::floe::{Floe, FloeField, FloeKind};
use crate::integrate::SimulationState;
use crate::ocean::{ClassParams, Forcing, ModeClass, OceanMode, OceanSpec, OceanState};
use crate::superfloe::ReductionReport;
use crate::uq::{ContactForceSeries, MomentumSeries, PdfTable};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

/// Flat one-floe record used by the JSON and CSV snapshot forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FloeRow {
    pub id: u64,
    pub radius_m: f64,
    pub thickness_m: f64,
    pub x1_m: f64,
    pub x2_m: f64,
    pub angle_rad: f64,
    pub v1_mps: f64,
    pub v2_mps: f64,
    pub omega_radps: f64,
    pub kind: FloeKind,
}

impl From<&Floe> for FloeRow {
    fn from(f: &Floe) -> Self {
        FloeRow {
            id: f.id,
            radius_m: f.radius,
            thickness_m: f.thickness,
            x1_m: f.position.x,
            x2_m: f.position.y,
            angle_rad: f.angle,
            v1_mps: f.velocity.x,
            v2_mps: f.velocity.y,
            omega_radps: f.angular_velocity,
            kind: f.kind,
        }
    }
}

/// One field snapshot with its domain metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSnapshot {
    pub domain_side_m: f64,
    pub time_s: f64,
    pub concentration: f64,
    pub floes: Vec<FloeRow>,
}

impl FieldSnapshot {
    pub fn of(field: &FloeField, time: f64) -> FieldSnapshot {
        FieldSnapshot {
            domain_side_m: field.domain.side,
            time_s: time,
            concentration: field.concentration(),
            floes: field.floes.iter().map(FloeRow::from).collect(),
        }
    }

    pub fn into_field(self) -> Result<FloeField> {
        let domain = Domain::new(self.domain_side_m)?;
        let mut floes = Vec::with_capacity(self.floes.len());
        for row in self.floes {
            let mut f = Floe::new(
                row.id,
                row.radius_m,
                row.thickness_m,
                domain.wrap_point(Vec2::new(row.x1_m, row.x2_m)),
            )?;
            f.angle = row.angle_rad;
            f.velocity = Vec2::new(row.v1_mps, row.v2_mps);
            f.angular_velocity = row.omega_radps;
            f.kind = row.kind;
            floes.push(f);
        }
        Ok(FloeField { domain, floes })
    }
}

pub fn write_field_json<W: Write>(writer: W, field: &FloeField, time: f64) -> Result<()> {
    serde_json::to_writer_pretty(writer, &FieldSnapshot::of(field, time))?;
    Ok(())
}

pub fn read_field_json<R: Read>(reader: R) -> Result<FloeField> {
    let snapshot: FieldSnapshot = serde_json::from_reader(reader)?;
    snapshot.into_field()
}

pub fn write_field_csv<W: Write>(mut writer: W, field: &FloeField) -> Result<()> {
    writeln!(
        writer,
        "id,radius_m,thickness_m,x1_m,x2_m,angle_rad,v1_mps,v2_mps,omega_radps,kind"
    )?;
    for f in &field.floes {
        let kind = match f.kind {
            FloeKind::Ordinary => "ordinary",
            FloeKind::Super => "super",
        };
        writeln!(
            writer,
            "{},{},{},{},{},{},{},{},{},{}",
            f.id,
            f.radius,
            f.thickness,
            f.position.x,
            f.position.y,
            f.angle,
            f.velocity.x,
            f.velocity.y,
            f.angular_velocity,
            kind
        )?;
    }
    Ok(())
}

/// Streaming trajectory writer: one row per floe per snapshot.
pub struct TrajectoryCsv<W: Write> {
    writer: W,
}

impl<W: Write> TrajectoryCsv<W> {
    pub fn new(mut writer: W) -> Result<Self> {
        writeln!(
            writer,
            "t_s,id,x1_m,x2_m,angle_rad,v1_mps,v2_mps,omega_radps"
        )?;
        Ok(TrajectoryCsv { writer })
    }

    pub fn record(&mut self, state: &SimulationState) -> Result<()> {
        for f in &state.field.floes {
            writeln!(
                self.writer,
                "{},{},{},{},{},{},{},{}",
                state.time,
                f.id,
                f.position.x,
                f.position.y,
                f.angle,
                f.velocity.x,
                f.velocity.y,
                f.angular_velocity
            )?;
        }
        Ok(())
    }
}

/// Per-contact CSV log: `(t, l, j, overlap, |f_n|, |f_t|)`. The caller sets
/// `time` before each step.
pub struct ContactLog<W: Write> {
    writer: W,
    pub time: f64,
}

impl<W: Write> ContactLog<W> {
    pub fn new(mut writer: W) -> Result<Self> {
        writeln!(writer, "t_s,floe_l,floe_j,overlap_m,f_n_N,f_t_N")?;
        Ok(ContactLog { writer, time: 0.0 })
    }
}

impl<W: Write> ContactObserver for ContactLog<W> {
    fn on_contact(
        &mut self,
        pair: &ContactPair,
        normal_force: Vec2,
        tangential_force: Vec2,
        _torque_l: f64,
        _torque_j: f64,
    ) {
        let _ = writeln!(
            self.writer,
            "{},{},{},{},{},{}",
            self.time,
            pair.id_l,
            pair.id_j,
            pair.overlap,
            normal_force.norm(),
            tangential_force.norm()
        );
    }
}

/// Velocity and curl sampled on an n x n grid.
pub fn write_ocean_grid_csv<W: Write>(mut writer: W, ocean: &OceanState, n: usize) -> Result<()> {
    writeln!(writer, "x_m,y_m,u_mps,v_mps,curl_per_s")?;
    let h = ocean.side / n as f64;
    for i in 0..n {
        for j in 0..n {
            let x = Vec2::new(i as f64 * h, j as f64 * h);
            let u = ocean.velocity_at(x);
            let curl = ocean.curl_at(x);
            writeln!(writer, "{},{},{},{},{}", x.x, x.y, u.x, u.y, curl)?;
        }
    }
    Ok(())
}

/// Mode amplitudes for one checkpoint time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeAmplitudes {
    pub time_s: f64,
    pub modes: Vec<ModeAmplitudeRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeAmplitudeRow {
    pub k1: i32,
    pub k2: i32,
    pub class: ModeClass,
    pub re: f64,
    pub im: f64,
}

pub fn mode_amplitudes(ocean: &OceanState) -> ModeAmplitudes {
    ModeAmplitudes {
        time_s: ocean.time,
        modes: ocean
            .modes
            .iter()
            .map(|m| ModeAmplitudeRow {
                k1: m.wavenumber.0,
                k2: m.wavenumber.1,
                class: m.class,
                re: m.amplitude.re,
                im: m.amplitude.im,
            })
            .collect(),
    }
}

/// Momentum band table: mean and 1/2-sigma bands per component.
pub fn write_momentum_bands_csv<W: Write>(mut writer: W, series: &MomentumSeries) -> Result<()> {
    writeln!(
        writer,
        "t_s,p1_mean_kgmps,p1_lo1,p1_hi1,p1_lo2,p1_hi2,\
         p2_mean_kgmps,p2_lo1,p2_hi1,p2_lo2,p2_hi2,\
         ang_mean_kgm2ps,ang_lo1,ang_hi1,ang_lo2,ang_hi2"
    )?;
    for i in 0..series.times.len() {
        let (pm, ps) = (series.linear_mean[i], series.linear_sd[i]);
        let (am, asd) = (series.angular_mean[i], series.angular_sd[i]);
        writeln!(
            writer,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            series.times[i],
            pm.x,
            pm.x - ps.x,
            pm.x + ps.x,
            pm.x - 2.0 * ps.x,
            pm.x + 2.0 * ps.x,
            pm.y,
            pm.y - ps.y,
            pm.y + ps.y,
            pm.y - 2.0 * ps.y,
            pm.y + 2.0 * ps.y,
            am,
            am - asd,
            am + asd,
            am - 2.0 * asd,
            am + 2.0 * asd
        )?;
    }
    Ok(())
}

/// Density table with an optional moment-matched normal overlay.
pub fn write_pdf_csv<W: Write>(
    mut writer: W,
    table: &PdfTable,
    overlay: Option<&[f64]>,
) -> Result<()> {
    match overlay {
        Some(fit) => {
            writeln!(writer, "bin_center,density,normal_fit")?;
            for ((c, d), f) in table.centers.iter().zip(&table.density).zip(fit) {
                writeln!(writer, "{c},{d},{f}")?;
            }
        }
        None => {
            writeln!(writer, "bin_center,density")?;
            for (c, d) in table.centers.iter().zip(&table.density) {
                writeln!(writer, "{c},{d}")?;
            }
        }
    }
    Ok(())
}

pub fn write_contact_series_csv<W: Write>(
    mut writer: W,
    series: &ContactForceSeries,
) -> Result<()> {
    writeln!(writer, "t_s,floe_id,f1_N,f2_N,torque_Nm")?;
    for (i, t) in series.times.iter().enumerate() {
        for floe in &series.floes {
            writeln!(
                writer,
                "{},{},{},{},{}",
                t, floe.id, floe.force[i].x, floe.force[i].y, floe.torque[i]
            )?;
        }
    }
    Ok(())
}

/// Assimilation output: one row per cycle and state variable.
pub fn write_da_cycles_csv<W: Write>(mut writer: W, run: &DaRun) -> Result<()> {
    writeln!(
        writer,
        "cycle,t_s,variable,truth,posterior_mean,posterior_spread"
    )?;
    for (cycle, record) in run.cycles.iter().enumerate() {
        for (v, label) in run.labels.iter().enumerate() {
            writeln!(
                writer,
                "{},{},{},{},{},{}",
                cycle,
                record.time,
                label,
                record.truth[v],
                record.posterior_mean[v],
                record.posterior_spread[v]
            )?;
        }
    }
    Ok(())
}

/// Text table comparing the field statistics before and after reduction,
/// radii in km and thicknesses in m.
pub fn format_reduction_table(report: &ReductionReport) -> String {
    let row = |name: &str, s: &crate::superfloe::FloeStats| {
        format!(
            "{name:>7}  {:>5}  {:>6.2}  {:>6.2}  {:>6.2}  {:>6.2}  {:>6.2}\n",
            s.count,
            s.concentration,
            s.r_min / 1e3,
            s.r_max / 1e3,
            s.h_min,
            s.h_max
        )
    };
    let mut out = String::new();
    out.push_str("         count      c   r_min   r_max   h_min   h_max\n");
    out.push_str(&row("before", &report.before));
    out.push_str(&row("after", &report.after));
    out.push_str(&format!(
        "deleted {} floes; mass removed {:.4e} kg, area removed {:.4e} m^2\n",
        report.deleted_ids.len(),
        report.mass_removed,
        report.area_removed
    ));
    out
}

const CHECKPOINT_MAGIC: &[u8; 8] = b"FLOECKPT";
const CHECKPOINT_VERSION: u32 = 1;

fn class_tag(class: ModeClass) -> u8 {
    match class {
        ModeClass::Balanced => 0,
        ModeClass::GravityPlus => 1,
        ModeClass::GravityMinus => 2,
    }
}

fn class_from_tag(tag: u8) -> Result<ModeClass> {
    match tag {
        0 => Ok(ModeClass::Balanced),
        1 => Ok(ModeClass::GravityPlus),
        2 => Ok(ModeClass::GravityMinus),
        other => Err(Error::Parameter(format!("unknown mode class tag {other}"))),
    }
}

/// Writes the fixed-layout little-endian checkpoint:
/// magic, version, time, domain side, Rossby number, ocean time scale,
/// floe count, per floe (id, kind, r, h, x1, x2, angle, v1, v2, omega),
/// mode count, per mode (k1, k2, class, damping, phase, sigma,
/// forcing re/im/rate, amplitude re/im, eigenvector re/im pairs).
pub fn write_checkpoint<W: Write>(mut writer: W, state: &SimulationState) -> Result<()> {
    writer.write_all(CHECKPOINT_MAGIC)?;
    writer.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    writer.write_all(&state.time.to_le_bytes())?;
    writer.write_all(&state.field.domain.side.to_le_bytes())?;
    writer.write_all(&state.ocean.rossby.to_le_bytes())?;
    writer.write_all(&state.ocean.time_scale.to_le_bytes())?;

    writer.write_all(&(state.field.len() as u64).to_le_bytes())?;
    for f in &state.field.floes {
        writer.write_all(&f.id.to_le_bytes())?;
        writer.write_all(&[match f.kind {
            FloeKind::Ordinary => 0u8,
            FloeKind::Super => 1u8,
        }])?;
        for v in [
            f.radius,
            f.thickness,
            f.position.x,
            f.position.y,
            f.angle,
            f.velocity.x,
            f.velocity.y,
            f.angular_velocity,
        ] {
            writer.write_all(&v.to_le_bytes())?;
        }
    }

    writer.write_all(&(state.ocean.modes.len() as u64).to_le_bytes())?;
    for m in &state.ocean.modes {
        writer.write_all(&m.wavenumber.0.to_le_bytes())?;
        writer.write_all(&m.wavenumber.1.to_le_bytes())?;
        writer.write_all(&[class_tag(m.class)])?;
        for v in [
            m.damping,
            m.phase,
            m.sigma,
            m.forcing.amplitude.re,
            m.forcing.amplitude.im,
            m.forcing.angular_rate,
            m.amplitude.re,
            m.amplitude.im,
            m.eigenvector[0].re,
            m.eigenvector[0].im,
            m.eigenvector[1].re,
            m.eigenvector[1].im,
        ] {
            writer.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_checkpoint<R: Read>(mut reader: R) -> Result<SimulationState> {
    let mut magic = [0u8; 8];
    reader.read_exact(&mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::Parameter("not a checkpoint file".into()));
    }
    let version = read_u32(&mut reader)?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Parameter(format!(
            "unsupported checkpoint version {version}"
        )));
    }
    let time = read_f64(&mut reader)?;
    let side = read_f64(&mut reader)?;
    let rossby = read_f64(&mut reader)?;
    let time_scale = read_f64(&mut reader)?;
    let domain = Domain::new(side)?;

    let floe_count = read_u64(&mut reader)? as usize;
    let mut floes = Vec::with_capacity(floe_count);
    for _ in 0..floe_count {
        let id = read_u64(&mut reader)?;
        let kind = match read_u8(&mut reader)? {
            0 => FloeKind::Ordinary,
            1 => FloeKind::Super,
            other => return Err(Error::Parameter(format!("unknown floe kind tag {other}"))),
        };
        let vals = read_f64_array::<8, _>(&mut reader)?;
        let mut f = Floe::new(id, vals[0], vals[1], Vec2::new(vals[2], vals[3]))?;
        f.angle = vals[4];
        f.velocity = Vec2::new(vals[5], vals[6]);
        f.angular_velocity = vals[7];
        f.kind = kind;
        floes.push(f);
    }

    let mode_count = read_u64(&mut reader)? as usize;
    let mut modes = Vec::with_capacity(mode_count);
    for _ in 0..mode_count {
        let k1 = read_i32(&mut reader)?;
        let k2 = read_i32(&mut reader)?;
        let class = class_from_tag(read_u8(&mut reader)?)?;
        let v = read_f64_array::<12, _>(&mut reader)?;
        modes.push(OceanMode {
            wavenumber: (k1, k2),
            class,
            damping: v[0],
            phase: v[1],
            sigma: v[2],
            forcing: Forcing {
                amplitude: Complex64::new(v[3], v[4]),
                angular_rate: v[5],
            },
            amplitude: Complex64::new(v[6], v[7]),
            eigenvector: [Complex64::new(v[8], v[9]), Complex64::new(v[10], v[11])],
        });
    }

    let ocean = OceanState {
        modes,
        time,
        rossby,
        time_scale,
        side,
    };
    let mut state = SimulationState::new(FloeField { domain, floes }, ocean)?;
    state.time = time;
    Ok(state)
}

fn read_u8<R: Read>(reader: &mut R) -> Result<u8> {
    let mut b = [0u8; 1];
    reader.read_exact(&mut b)?;
    Ok(b[0])
}

fn read_u32<R: Read>(reader: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    reader.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_i32<R: Read>(reader: &mut R) -> Result<i32> {
    let mut b = [0u8; 4];
    reader.read_exact(&mut b)?;
    Ok(i32::from_le_bytes(b))
}

fn read_u64<R: Read>(reader: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    reader.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(reader: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    reader.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn read_f64_array<const N: usize, R: Read>(reader: &mut R) -> Result<[f64; N]> {
    let mut out = [0.0; N];
    for v in &mut out {
        *v = read_f64(reader)?;
    }
    Ok(out)
}

/// Builds an ocean spec matching a stored state's per-class coefficients, so
/// configuration echoes stay faithful after a checkpoint restart.
pub fn ocean_spec_of(state: &OceanState, max_wavenumber: i32) -> OceanSpec {
    let class_params = |class_filter: fn(&OceanMode) -> bool| {
        state
            .modes
            .iter()
            .find(|m| class_filter(m))
            .map(|m| ClassParams {
                damping: m.damping,
                sigma: m.sigma,
                forcing: m.forcing,
            })
            .unwrap_or(ClassParams::new(0.5, 0.0))
    };
    OceanSpec {
        max_wavenumber,
        rossby: state.rossby,
        side: state.side,
        time_scale: state.time_scale,
        balanced: class_params(|m| m.class == ModeClass::Balanced),
        gravity: class_params(|m| m.class.is_gravity()),
        gravity_enabled: state.modes.iter().any(|m| m.class.is_gravity()),
    }
}
