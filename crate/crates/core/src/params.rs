//! Continuous plan parameters: admissible regions, the flat parameter vector
//! of a plan and the sampling distribution refined by the optimizer.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::geometry::{wrap_angle, Vec2, Vec3};

/// Per-sample random stream.
pub type SampleRng = ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub enum ParamKind {
    /// Planar point in a ring `r <= |p - center| <= r_outer`.
    Annulus { center: Vec2, r_inner: f64, r_outer: f64 },
    /// Planar point in an axis-aligned rectangle.
    Rect2 { center: Vec2, size: Vec2 },
    /// (x, y, z, yaw) with the position in a box and yaw in
    /// `[-yaw_halfwidth, yaw_halfwidth]`.
    Box3Yaw { center: Vec3, size: Vec3, yaw_halfwidth: f64 },
    Yaw { center: f64, halfwidth: f64 },
}

impl ParamKind {
    pub fn dim(&self) -> usize {
        match self {
            ParamKind::Annulus { .. } | ParamKind::Rect2 { .. } => 2,
            ParamKind::Box3Yaw { .. } => 4,
            ParamKind::Yaw { .. } => 1,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ParamKind::Annulus { .. } => "annulus",
            ParamKind::Rect2 { .. } => "rect2",
            ParamKind::Box3Yaw { .. } => "box3_yaw",
            ParamKind::Yaw { .. } => "yaw",
        }
    }

    /// Checks the region invariants.
    pub fn validate(&self) -> Result<(), String> {
        let halfwidth_ok = |h: f64| h > 0.0 && h <= PI;
        match *self {
            ParamKind::Annulus { r_inner, r_outer, .. } => {
                if !(0.0 < r_inner && r_inner < r_outer) {
                    return Err(format!("annulus needs 0 < r < R (got r={r_inner}, R={r_outer})"));
                }
            }
            ParamKind::Rect2 { size, .. } => {
                if !(size.x > 0.0 && size.y > 0.0) {
                    return Err("rect2 size must be positive".into());
                }
            }
            ParamKind::Box3Yaw { size, yaw_halfwidth, .. } => {
                if !(size.x > 0.0 && size.y > 0.0 && size.z > 0.0) {
                    return Err("box3yaw size must be positive".into());
                }
                if !halfwidth_ok(yaw_halfwidth) {
                    return Err("yaw halfwidth must lie in (0, pi]".into());
                }
            }
            ParamKind::Yaw { halfwidth, .. } => {
                if !halfwidth_ok(halfwidth) {
                    return Err("yaw halfwidth must lie in (0, pi]".into());
                }
            }
        }
        Ok(())
    }

    /// Region membership, i.e. `h(z) <= 0`.
    pub fn contains(&self, v: &[f64]) -> bool {
        let eps = 1e-12;
        match *self {
            ParamKind::Annulus { center, r_inner, r_outer } => {
                let r = (Vec2::new(v[0], v[1]) - center).norm();
                r >= r_inner - eps && r <= r_outer + eps
            }
            ParamKind::Rect2 { center, size } => (0..2).all(|i| (v[i] - center[i]).abs() <= size[i] * 0.5 + eps),
            ParamKind::Box3Yaw { center, size, yaw_halfwidth } => {
                (0..3).all(|i| (v[i] - center[i]).abs() <= size[i] * 0.5 + eps)
                    && wrap_angle(v[3]).abs() <= yaw_halfwidth + eps
            }
            ParamKind::Yaw { center, halfwidth } => wrap_angle(v[0] - center).abs() <= halfwidth + eps,
        }
    }

    /// Uniform sample over the region (area/volume measure).
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match *self {
            ParamKind::Annulus { center, r_inner, r_outer } => {
                let u: f64 = rng.random();
                let rho = (r_inner * r_inner + u * (r_outer * r_outer - r_inner * r_inner)).sqrt();
                let theta = rng.random_range(-PI..PI);
                vec![center.x + rho * theta.cos(), center.y + rho * theta.sin()]
            }
            ParamKind::Rect2 { center, size } => (0..2)
                .map(|i| center[i] + size[i] * (rng.random::<f64>() - 0.5))
                .collect(),
            ParamKind::Box3Yaw { center, size, yaw_halfwidth } => {
                let mut v: Vec<f64> =
                    (0..3).map(|i| center[i] + size[i] * (rng.random::<f64>() - 0.5)).collect();
                v.push(symmetric_uniform(rng, yaw_halfwidth));
                v
            }
            ParamKind::Yaw { center, halfwidth } => vec![center + symmetric_uniform(rng, halfwidth)],
        }
    }

    /// Characteristic spread of each scalar, used to express std floors in
    /// the scalar's own units.
    pub fn scalar_units(&self) -> Vec<Unit> {
        match self {
            ParamKind::Annulus { .. } | ParamKind::Rect2 { .. } => vec![Unit::Meter; 2],
            ParamKind::Box3Yaw { .. } => vec![Unit::Meter, Unit::Meter, Unit::Meter, Unit::Radian],
            ParamKind::Yaw { .. } => vec![Unit::Radian],
        }
    }
}

fn symmetric_uniform<R: Rng + ?Sized>(rng: &mut R, halfwidth: f64) -> f64 {
    // (-h, h]; with h = pi this covers (-pi, pi]
    halfwidth - 2.0 * halfwidth * rng.random::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Unit {
    Meter,
    Radian,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamSpec {
    pub id: String,
    pub kind: ParamKind,
}

impl ParamSpec {
    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    pub fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.kind.sample_uniform(rng)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutEntry {
    pub spec: String,
    pub offset: usize,
    pub dim: usize,
}

/// Layout of a plan's parameter vector: one entry per bound action parameter,
/// in plan order.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSpace {
    pub specs: Vec<ParamSpec>,
    pub layout: Arc<Vec<LayoutEntry>>,
}

impl ParamSpace {
    pub fn new(specs: Vec<ParamSpec>) -> Self {
        let mut offset = 0;
        let layout = specs
            .iter()
            .map(|s| {
                let e = LayoutEntry { spec: s.id.clone(), offset, dim: s.dim() };
                offset += s.dim();
                e
            })
            .collect();
        Self { specs, layout: Arc::new(layout) }
    }

    pub fn dim(&self) -> usize {
        self.layout.last().map_or(0, |e| e.offset + e.dim)
    }

    pub fn units(&self) -> Vec<Unit> {
        self.specs.iter().flat_map(|s| s.kind.scalar_units()).collect()
    }

    pub fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> ParamVector {
        let values = self.specs.iter().flat_map(|s| s.sample_initial(rng)).collect();
        ParamVector { values, layout: self.layout.clone() }
    }

    pub fn vector(&self, values: Vec<f64>) -> ParamVector {
        assert_eq!(values.len(), self.dim(), "parameter vector length does not match layout");
        ParamVector { values, layout: self.layout.clone() }
    }

    /// True if every block of `v` lies inside its region.
    pub fn contains(&self, v: &ParamVector) -> bool {
        self.specs
            .iter()
            .zip(self.layout.iter())
            .all(|(s, e)| s.kind.contains(&v.values[e.offset..e.offset + e.dim]))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    pub values: Vec<f64>,
    pub layout: Arc<Vec<LayoutEntry>>,
}

impl ParamVector {
    pub fn block(&self, index: usize) -> &[f64] {
        let e = &self.layout[index];
        &self.values[e.offset..e.offset + e.dim]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistributionMode {
    /// Uniform over each parameter region.
    Initial,
    /// Independent normal per scalar.
    Gaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionState {
    pub mode: DistributionMode,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub std_floor: Vec<f64>,
}

impl DistributionState {
    /// Initial-mode distribution. `mean`/`std` are left at the region
    /// midpoint and zero; they are unused until the first refit.
    pub fn initial(space: &ParamSpace, std_floor: f64) -> Self {
        let dim = space.dim();
        let mut mean = Vec::with_capacity(dim);
        for s in &space.specs {
            match &s.kind {
                ParamKind::Annulus { center, .. } | ParamKind::Rect2 { center, .. } => {
                    mean.extend([center.x, center.y])
                }
                ParamKind::Box3Yaw { center, .. } => mean.extend([center.x, center.y, center.z, 0.0]),
                ParamKind::Yaw { center, .. } => mean.push(*center),
            }
        }
        Self { mode: DistributionMode::Initial, mean, std: vec![0.0; dim], std_floor: vec![std_floor; dim] }
    }

    pub fn gaussian(mean: Vec<f64>, std: Vec<f64>, std_floor: Vec<f64>) -> Self {
        let std = std.iter().zip(&std_floor).map(|(s, f)| s.max(*f)).collect();
        Self { mode: DistributionMode::Gaussian, mean, std, std_floor }
    }

    pub fn sample<R: Rng + ?Sized>(&self, space: &ParamSpace, rng: &mut R) -> ParamVector {
        match self.mode {
            DistributionMode::Initial => space.sample_initial(rng),
            DistributionMode::Gaussian => {
                // no clipping to the regions after the first iteration
                let values = self
                    .mean
                    .iter()
                    .zip(&self.std)
                    .map(|(m, s)| m + s * rng.sample::<f64, _>(StandardNormal))
                    .collect();
                space.vector(values)
            }
        }
    }

    pub fn max_std(&self) -> f64 {
        match self.mode {
            DistributionMode::Initial => f64::INFINITY,
            DistributionMode::Gaussian => self.std.iter().copied().fold(0.0, f64::max),
        }
    }
}

/// Refits the Gaussian to elite samples: per-scalar mean and population std,
/// floored. A single elite gets `noise_injection_std` so the next iteration
/// explores around it.
pub fn fit_elites(samples: &[ParamVector], prev: &DistributionState, noise_injection_std: f64) -> DistributionState {
    assert!(!samples.is_empty(), "fit_elites needs at least one sample");
    let dim = samples[0].len();
    let n = samples.len() as f64;
    let mut mean = vec![0.0; dim];
    for s in samples {
        for (m, v) in mean.iter_mut().zip(&s.values) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let std = if samples.len() == 1 {
        vec![noise_injection_std; dim]
    } else {
        let mut var = vec![0.0; dim];
        for s in samples {
            for ((acc, v), m) in var.iter_mut().zip(&s.values).zip(&mean) {
                *acc += (v - m) * (v - m);
            }
        }
        var.into_iter().map(|v| (v / n).sqrt()).collect()
    };
    DistributionState::gaussian(mean, std, prev.std_floor.clone())
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a stream seed from a master seed and a path of indices, so that
/// per-sample randomness does not depend on execution order.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix64(master), |acc, &i| mix64(acc ^ mix64(i.wrapping_add(0xA24B_AED4_963E_E407))))
}

pub fn sample_rng(master: u64, path: &[u64]) -> SampleRng {
    SampleRng::seed_from_u64(derive_seed(master, path))
}
