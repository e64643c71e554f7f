//! Cylindrical ice floes: geometry, statistical generation, derived
//! physical properties, and the floe field container.
//!
//! Radii follow a power law and thicknesses a Gamma distribution; both are
//! sampled by rejection into configured caps so the distribution shape inside
//! the caps is preserved (no truncation clipping). Internally everything is
//! SI: meters, seconds, kilograms, radians.

use crate::domain::{Domain, Vec2};
use crate::error::{Error, Result};
use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Ordinary floes come from the generator; super floes from merging.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FloeKind {
    Ordinary,
    Super,
}

/// One cylindrical ice floe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Floe {
    pub id: u64,
    /// Horizontal radius (m).
    pub radius: f64,
    /// Thickness (m).
    pub thickness: f64,
    /// Center position, wrapped into the domain (m).
    pub position: Vec2,
    /// Angular location (rad).
    pub angle: f64,
    /// Velocity (m/s).
    pub velocity: Vec2,
    /// Angular velocity (rad/s).
    pub angular_velocity: f64,
    pub kind: FloeKind,
}

impl Floe {
    pub fn new(id: u64, radius: f64, thickness: f64, position: Vec2) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::Parameter(format!(
                "floe radius must be positive, got {radius}"
            )));
        }
        if !(thickness.is_finite() && thickness > 0.0) {
            return Err(Error::Parameter(format!(
                "floe thickness must be positive, got {thickness}"
            )));
        }
        Ok(Floe {
            id,
            radius,
            thickness,
            position,
            angle: 0.0,
            velocity: Vec2::ZERO,
            angular_velocity: 0.0,
            kind: FloeKind::Ordinary,
        })
    }

    /// Disk area pi r^2 (m^2).
    pub fn area(&self) -> f64 {
        PI * self.radius * self.radius
    }

    /// Mass rho_ice pi r^2 h (kg).
    pub fn mass(&self, mat: &MaterialParams) -> f64 {
        mat.ice_density * self.area() * self.thickness
    }

    /// Moment of inertia m r^2 (kg m^2).
    pub fn inertia(&self, mat: &MaterialParams) -> f64 {
        self.mass(mat) * self.radius * self.radius
    }

    pub fn is_finite(&self) -> bool {
        self.position.is_finite()
            && self.velocity.is_finite()
            && self.angle.is_finite()
            && self.angular_velocity.is_finite()
    }
}

/// Material and coupling constants shared by all floes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams {
    /// Sea-ice density (kg/m^3).
    pub ice_density: f64,
    /// Seawater density (kg/m^3).
    pub ocean_density: f64,
    /// Young's modulus for normal contact (Pa).
    pub youngs_modulus: f64,
    /// Shear modulus for tangential contact (Pa).
    pub shear_modulus: f64,
    /// Coulomb friction coefficient.
    pub friction: f64,
    /// Ocean drag coefficient (dimensionless).
    pub ocean_drag: f64,
    /// Optional variant scaling contact forces by min thickness over 1 m.
    pub thickness_scaling: bool,
}

impl Default for MaterialParams {
    fn default() -> Self {
        MaterialParams {
            ice_density: 900.0,
            ocean_density: 1e3,
            youngs_modulus: 1.25e8,
            shear_modulus: 1.25e8,
            friction: 0.2,
            ocean_drag: 3e-3,
            thickness_scaling: false,
        }
    }
}

impl MaterialParams {
    pub fn validate(&self) -> Result<()> {
        let positives = [
            ("ice_density", self.ice_density),
            ("ocean_density", self.ocean_density),
            ("youngs_modulus", self.youngs_modulus),
            ("shear_modulus", self.shear_modulus),
            ("friction", self.friction),
            ("ocean_drag", self.ocean_drag),
        ];
        for (name, v) in positives {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Parameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Closed sampling interval used to cap radii and thicknesses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Caps {
    pub lo: f64,
    pub hi: f64,
}

impl Caps {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo < hi) {
            return Err(Error::Parameter(format!("invalid caps [{lo}, {hi}]")));
        }
        Ok(Caps { lo, hi })
    }

    pub fn contains(&self, v: f64) -> bool {
        (self.lo..=self.hi).contains(&v)
    }
}

/// Power-law size distribution p(r) = a k^a / r^(a+1) for r >= k.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SizeDistribution {
    /// Exponent a.
    pub exponent: f64,
    /// Scale k (m), also the smallest possible radius.
    pub scale: f64,
}

impl SizeDistribution {
    pub fn new(exponent: f64, scale: f64) -> Result<Self> {
        if !(exponent.is_finite() && exponent > 0.0) {
            return Err(Error::Parameter(format!(
                "size exponent must be positive, got {exponent}"
            )));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::Parameter(format!(
                "size scale must be positive, got {scale}"
            )));
        }
        Ok(SizeDistribution { exponent, scale })
    }

    /// CDF F(r) = 1 - (k/r)^a for r >= k.
    pub fn cdf(&self, r: f64) -> f64 {
        if r <= self.scale {
            0.0
        } else {
            1.0 - (self.scale / r).powf(self.exponent)
        }
    }

    /// Inverse-CDF transform of one uniform deviate, uncapped.
    pub fn radius_from_uniform(&self, u: f64) -> Result<f64> {
        if !u.is_finite() || !(0.0..1.0).contains(&u) {
            return Err(Error::Parameter(format!(
                "uniform deviate must lie in [0, 1), got {u}"
            )));
        }
        Ok(self.scale * (1.0 - u).powf(-1.0 / self.exponent))
    }

    /// Mean of r^2 conditioned on r inside `caps` (used for the
    /// concentration feasibility estimate).
    pub fn mean_radius_sq(&self, caps: Caps) -> Result<f64> {
        let lo = caps.lo.max(self.scale);
        let hi = caps.hi;
        if lo >= hi {
            return Err(Error::Parameter(format!(
                "caps [{}, {}] lie below the size scale {}",
                caps.lo, caps.hi, self.scale
            )));
        }
        let a = self.exponent;
        let k = self.scale;
        let mass = (k / lo).powf(a) - (k / hi).powf(a);
        let raw = if (a - 2.0).abs() < 1e-12 {
            k.powf(a) * (hi / lo).ln() * a
        } else {
            a * k.powf(a) / (2.0 - a) * (hi.powf(2.0 - a) - lo.powf(2.0 - a))
        };
        Ok(raw / mass)
    }
}

/// Gamma thickness distribution with shape k and scale theta (m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThicknessDistribution {
    pub shape: f64,
    pub scale: f64,
}

impl ThicknessDistribution {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        if !(shape.is_finite() && shape > 0.0 && scale.is_finite() && scale > 0.0) {
            return Err(Error::Parameter(format!(
                "gamma parameters must be positive, got shape {shape}, scale {scale}"
            )));
        }
        Ok(ThicknessDistribution { shape, scale })
    }

    /// Gamma density at h.
    pub fn pdf(&self, h: f64) -> f64 {
        if h <= 0.0 {
            return 0.0;
        }
        let k = self.shape;
        let t = self.scale;
        (h / t).powf(k - 1.0) * (-h / t).exp() / (t * gamma_fn(k))
    }
}

/// Lanczos approximation of the Gamma function, g = 7.
fn gamma_fn(x: f64) -> f64 {
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        PI / ((PI * x).sin() * gamma_fn(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut acc = COEF[0];
        for (i, c) in COEF.iter().enumerate().skip(1) {
            acc += c / (x + i as f64);
        }
        let t = x + 7.5;
        (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
    }
}

const MAX_REJECTION_TRIES: usize = 100_000;

/// Draws one radius, rejecting samples outside `caps`.
pub fn sample_radius<R: Rng + ?Sized>(
    rng: &mut R,
    dist: &SizeDistribution,
    caps: Caps,
) -> Result<f64> {
    if caps.hi <= dist.scale {
        return Err(Error::Parameter(format!(
            "radius cap {} is below the distribution scale {}",
            caps.hi, dist.scale
        )));
    }
    for _ in 0..MAX_REJECTION_TRIES {
        let r = dist.radius_from_uniform(rng.gen::<f64>())?;
        if caps.contains(r) {
            return Ok(r);
        }
    }
    Err(Error::Parameter(format!(
        "radius rejection did not terminate for caps [{}, {}]",
        caps.lo, caps.hi
    )))
}

/// Draws one thickness, rejecting samples outside `caps`.
pub fn sample_thickness<R: Rng + ?Sized>(
    rng: &mut R,
    dist: &ThicknessDistribution,
    caps: Caps,
) -> Result<f64> {
    let gamma = Gamma::new(dist.shape, dist.scale)
        .map_err(|e| Error::Parameter(format!("gamma distribution: {e}")))?;
    for _ in 0..MAX_REJECTION_TRIES {
        let h = gamma.sample(rng);
        if caps.contains(h) {
            return Ok(h);
        }
    }
    Err(Error::Parameter(format!(
        "thickness rejection did not terminate for caps [{}, {}]",
        caps.lo, caps.hi
    )))
}

/// The granular state: all floes plus the periodic domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloeField {
    pub domain: Domain,
    pub floes: Vec<Floe>,
}

impl FloeField {
    /// Fraction of the domain area covered by floes.
    pub fn concentration(&self) -> f64 {
        self.floes.iter().map(Floe::area).sum::<f64>() / self.domain.area()
    }

    pub fn len(&self) -> usize {
        self.floes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.floes.is_empty()
    }

    pub fn max_radius(&self) -> f64 {
        self.floes.iter().map(|f| f.radius).fold(0.0, f64::max)
    }
}

/// Generation parameters for [`initialize_field`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub count: usize,
    pub size: SizeDistribution,
    pub radius_caps: Caps,
    pub thickness: ThicknessDistribution,
    pub thickness_caps: Caps,
}

/// Number of pairwise push-apart sweeps run after random placement.
/// Residual overlaps are accepted as part of the model.
pub const OVERLAP_SWEEPS: usize = 50;

/// Infeasibility threshold on the expected concentration.
pub const MAX_CONCENTRATION: f64 = 0.85;

/// Generates a floe field: radii and thicknesses are sampled from the
/// configured laws, positions drawn uniformly and relaxed by a fixed number
/// of overlap-reduction sweeps. Floes are sorted by descending radius and
/// ids assigned in that order, so ids `0..L0` are always the largest floes.
/// Deterministic for a fixed seed.
pub fn initialize_field(spec: &FieldSpec, domain: Domain, seed: u64) -> Result<FloeField> {
    if spec.count == 0 {
        return Err(Error::Config("floe count must be at least 1".into()));
    }
    let expected_area = spec.count as f64 * PI * spec.size.mean_radius_sq(spec.radius_caps)?;
    let expected_concentration = expected_area / domain.area();
    if expected_concentration > MAX_CONCENTRATION {
        return Err(Error::Config(format!(
            "requested concentration {expected_concentration:.3} exceeds the feasible maximum {MAX_CONCENTRATION}"
        )));
    }

    let mut rng = crate::seeds::stream(seed, crate::seeds::label::FIELD_INIT);

    let mut radii = Vec::with_capacity(spec.count);
    for _ in 0..spec.count {
        radii.push(sample_radius(&mut rng, &spec.size, spec.radius_caps)?);
    }
    radii.sort_by(|a, b| b.partial_cmp(a).unwrap());

    let mut floes = Vec::with_capacity(spec.count);
    for (i, &radius) in radii.iter().enumerate() {
        let thickness = sample_thickness(&mut rng, &spec.thickness, spec.thickness_caps)?;
        let position = Vec2::new(
            rng.gen_range(0.0..domain.side),
            rng.gen_range(0.0..domain.side),
        );
        floes.push(Floe::new(i as u64, radius, thickness, position)?);
    }

    relax_overlaps(&mut floes, domain, OVERLAP_SWEEPS);

    Ok(FloeField { domain, floes })
}

/// Pairwise push-apart sweeps: each overlapping pair is separated along the
/// minimum-image normal, half the deficit to each floe. Used at field
/// initialization and to clean up overlap injected by analysis updates.
pub fn relax_overlaps(floes: &mut [Floe], domain: Domain, sweeps: usize) {
    let n = floes.len();
    for _ in 0..sweeps {
        let mut moved = false;
        for i in 0..n {
            for j in (i + 1)..n {
                let delta = domain.min_image(floes[i].position, floes[j].position);
                let d = delta.norm();
                let deficit = (floes[i].radius + floes[j].radius) - d;
                if deficit <= 0.0 {
                    continue;
                }
                let normal = if d > 0.0 {
                    delta * (1.0 / d)
                } else {
                    Vec2::new(1.0, 0.0)
                };
                floes[i].position =
                    domain.wrap_point(floes[i].position - normal * (0.5 * deficit));
                floes[j].position =
                    domain.wrap_point(floes[j].position + normal * (0.5 * deficit));
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table_defaults() -> FieldSpec {
        FieldSpec {
            count: 100,
            size: SizeDistribution::new(1.0, 1_500.0).unwrap(),
            radius_caps: Caps::new(1_000.0, 4_200.0).unwrap(),
            thickness: ThicknessDistribution::new(2.0, 1.3).unwrap(),
            thickness_caps: Caps::new(0.1, 3.5).unwrap(),
        }
    }

    #[test]
    fn inverse_cdf_at_lower_endpoint() {
        let d = SizeDistribution::new(1.0, 1_500.0).unwrap();
        assert_eq!(d.radius_from_uniform(0.0).unwrap(), 1_500.0);
    }

    #[test]
    fn inverse_cdf_at_median() {
        let d = SizeDistribution::new(1.0, 1_500.0).unwrap();
        assert!((d.radius_from_uniform(0.5).unwrap() - 3_000.0).abs() < 1e-9);
    }

    #[test]
    fn size_density_matches_published_form() {
        // a = 1, k = 1.5 km gives p(r) = 1.5 / r^2 with r in km.
        let d = SizeDistribution::new(1.0, 1.5).unwrap();
        for r in [1.6f64, 2.0, 5.0, 9.0] {
            let pdf = d.exponent * d.scale.powf(d.exponent) / r.powf(d.exponent + 1.0);
            assert!((pdf - 1.5 / (r * r)).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_uniform_rejected() {
        let d = SizeDistribution::new(1.0, 1_500.0).unwrap();
        assert!(d.radius_from_uniform(1.0).is_err());
        assert!(d.radius_from_uniform(-0.1).is_err());
        assert!(d.radius_from_uniform(f64::NAN).is_err());
    }

    #[test]
    fn power_law_cdf_matches_samples() {
        // Kolmogorov-Smirnov distance between 10^6 uncapped samples and the
        // analytic CDF 1 - (k/r)^a.
        let d = SizeDistribution::new(1.0, 1_500.0).unwrap();
        let mut rng = crate::seeds::stream(42, 0);
        let n = 1_000_000usize;
        let mut us: Vec<f64> = (0..n)
            .map(|_| d.cdf(d.radius_from_uniform(rng.gen::<f64>()).unwrap()))
            .collect();
        us.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut ks: f64 = 0.0;
        for (i, u) in us.iter().enumerate() {
            ks = ks.max(u - i as f64 / n as f64);
            ks = ks.max((i + 1) as f64 / n as f64 - u);
        }
        assert!(ks < 0.005, "KS statistic {ks}");
    }

    #[test]
    fn gamma_mean_matches_k_theta() {
        let d = ThicknessDistribution::new(2.0, 1.3).unwrap();
        let mut rng = crate::seeds::stream(7, 0);
        let gamma = Gamma::new(d.shape, d.scale).unwrap();
        let n = 1_000_000usize;
        let mean = (0..n).map(|_| gamma.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 2.6).abs() / 2.6 < 0.01, "mean {mean}");
    }

    #[test]
    fn gamma_density_matches_published_form() {
        // Table form 0.59 h exp(-0.77 h) is a rounding of the exact values.
        let d = ThicknessDistribution::new(2.0, 1.3).unwrap();
        let exact = d.pdf(1.3);
        let published = 0.59 * 1.3 * (-0.77f64 * 1.3).exp();
        assert!((exact - published).abs() / exact < 0.01);
    }

    #[test]
    fn thickness_samples_respect_caps() {
        let d = ThicknessDistribution::new(2.0, 1.3).unwrap();
        let caps = Caps::new(0.1, 3.5).unwrap();
        let mut rng = crate::seeds::stream(11, 0);
        for _ in 0..10_000 {
            let h = sample_thickness(&mut rng, &d, caps).unwrap();
            assert!(caps.contains(h));
        }
    }

    #[test]
    fn derived_properties_formulas() {
        let mat = MaterialParams::default();
        let f = Floe::new(0, 1_000.0, 1.0, Vec2::ZERO).unwrap();
        let m = f.mass(&mat);
        assert!((m - 2.827e9).abs() / 2.827e9 < 1e-3, "mass {m}");
        let i = f.inertia(&mat);
        assert!((i - 2.827e15).abs() / 2.827e15 < 1e-3, "inertia {i}");
    }

    #[test]
    fn derived_properties_scale_linearly_in_thickness() {
        let mat = MaterialParams::default();
        let f1 = Floe::new(0, 1_234.0, 0.7, Vec2::ZERO).unwrap();
        let f2 = Floe::new(0, 1_234.0, 1.4, Vec2::ZERO).unwrap();
        assert_eq!(f2.mass(&mat), 2.0 * f1.mass(&mat));
        assert_eq!(f2.inertia(&mat), 2.0 * f1.inertia(&mat));
    }

    #[test]
    fn degenerate_thickness_rejected() {
        assert!(Floe::new(0, 1_000.0, 0.0, Vec2::ZERO).is_err());
    }

    #[test]
    fn initialize_is_deterministic() {
        let spec = table_defaults();
        let domain = Domain::new(50_000.0).unwrap();
        let a = initialize_field(&spec, domain, 99).unwrap();
        let b = initialize_field(&spec, domain, 99).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn initialize_sorts_descending_and_zeroes_velocities() {
        let spec = table_defaults();
        let domain = Domain::new(50_000.0).unwrap();
        let field = initialize_field(&spec, domain, 3).unwrap();
        for w in field.floes.windows(2) {
            assert!(w[0].radius >= w[1].radius);
        }
        for (i, f) in field.floes.iter().enumerate() {
            assert_eq!(f.id, i as u64);
            assert_eq!(f.velocity, Vec2::ZERO);
            assert_eq!(f.angular_velocity, 0.0);
            assert!(domain.contains(f.position));
        }
    }

    #[test]
    fn single_floe_field() {
        let spec = FieldSpec {
            count: 1,
            ..table_defaults()
        };
        let domain = Domain::new(50_000.0).unwrap();
        let field = initialize_field(&spec, domain, 5).unwrap();
        assert_eq!(field.len(), 1);
        let f = field.floes[0];
        assert_eq!(field.concentration(), f.area() / domain.area());
    }

    #[test]
    fn concentration_within_typical_range() {
        let spec = table_defaults();
        let domain = Domain::new(50_000.0).unwrap();
        let field = initialize_field(&spec, domain, 17).unwrap();
        let c = field.concentration();
        assert!((0.1..=0.8).contains(&c), "concentration {c}");
    }

    #[test]
    fn infeasible_concentration_rejected() {
        let spec = FieldSpec {
            count: 200,
            ..table_defaults()
        };
        let domain = Domain::new(50_000.0).unwrap();
        match initialize_field(&spec, domain, 1) {
            Err(Error::Config(_)) => {}
            other => panic!("expected configuration error, got {other:?}"),
        }
    }

    #[test]
    fn concentration_matches_independent_sum() {
        let spec = table_defaults();
        let domain = Domain::new(50_000.0).unwrap();
        let field = initialize_field(&spec, domain, 23).unwrap();
        let mut total = 0.0;
        for f in &field.floes {
            total += PI * f.radius * f.radius;
        }
        assert_eq!(field.concentration(), total / domain.area());
    }

    #[test]
    fn empty_field_concentration_is_zero() {
        let field = FloeField {
            domain: Domain::new(50_000.0).unwrap(),
            floes: vec![],
        };
        assert_eq!(field.concentration(), 0.0);
    }

    #[test]
    fn gamma_fn_sanity() {
        assert!((gamma_fn(1.0) - 1.0).abs() < 1e-10);
        assert!((gamma_fn(2.0) - 1.0).abs() < 1e-10);
        assert!((gamma_fn(5.0) - 24.0).abs() < 1e-8);
        assert!((gamma_fn(0.5) - PI.sqrt()).abs() < 1e-10);
    }
}
