//! Procedural occluded scene.
//!
//! Tree crowns are horizontal disks at one canopy height. A drone at
//! `(position, altitude)` looks at a ground point through the single point
//! where the line of sight pierces the canopy plane; every crown containing
//! that point attenuates the view by `1 − opacity`. Ground points outside the
//! camera's field of view are not seen at all.

use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::rng;
use crate::visibility::SampleImage;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Occluder {
    pub center: Vec2,
    pub radius: f64,
    pub opacity: f64,
}

impl Occluder {
    pub fn contains(&self, p: Vec2) -> bool {
        (p - self.center).norm_squared() < self.radius * self.radius
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub center: Vec2,
    /// Ground points whose visibility is scored.
    pub footprint: Vec<Vec2>,
}

impl Target {
    /// A `grid × grid` lattice covering a `width × length` rectangle whose long
    /// side points along `heading`.
    pub fn person(center: Vec2, width: f64, length: f64, grid: usize, heading: f64) -> Self {
        let along = Vec2::from_angle(heading);
        let across = along.perp();
        let frac = |k: usize| {
            if grid <= 1 {
                0.0
            } else {
                k as f64 / (grid - 1) as f64 - 0.5
            }
        };
        let footprint = (0..grid)
            .flat_map(|a| (0..grid).map(move |b| (a, b)))
            .map(|(a, b)| center + (frac(a) * length) * along + (frac(b) * width) * across)
            .collect();
        Self { center, footprint }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    /// Ground extent `[0, w] × [0, h]` in meters.
    pub extent: Vec2,
    pub occluders: Vec<Occluder>,
    pub target: Target,
    /// Flight altitude above ground.
    pub altitude: f64,
    /// Height of the crown layer above ground.
    pub canopy_height: f64,
    /// Half opening angle of the downward camera, in degrees.
    pub fov_half_angle_deg: f64,
}

impl Scene {
    pub fn validate(&self) -> Result<()> {
        if !(self.altitude > 0.0) {
            return Err(Error::config("altitude must be positive"));
        }
        if !(self.canopy_height >= 0.0 && self.canopy_height < self.altitude) {
            return Err(Error::config("canopy height must lie in [0, altitude)"));
        }
        if !(self.fov_half_angle_deg > 0.0 && self.fov_half_angle_deg < 90.0) {
            return Err(Error::config(
                "field of view half angle must lie in (0, 90) degrees",
            ));
        }
        if self.target.footprint.is_empty() {
            return Err(Error::config("target footprint is empty"));
        }
        let inside = |p: Vec2| {
            p.is_finite()
                && (0.0..=self.extent.x).contains(&p.x)
                && (0.0..=self.extent.y).contains(&p.y)
        };
        if !self.target.footprint.iter().all(|&p| inside(p)) {
            return Err(Error::config("target footprint leaves the scene extent"));
        }
        for (k, o) in self.occluders.iter().enumerate() {
            if !(o.radius > 0.0) || !(o.opacity > 0.0 && o.opacity <= 1.0) || !o.center.is_finite()
            {
                return Err(Error::config(format!("occluder {k} is malformed")));
            }
        }
        Ok(())
    }

    /// Horizontal distance at which the camera still sees the ground.
    pub fn view_radius(&self) -> f64 {
        self.altitude * self.fov_half_angle_deg.to_radians().tan()
    }

    /// Fraction of light reaching `ground` from a camera above `position`.
    pub fn transmittance(&self, position: Vec2, ground: Vec2) -> f64 {
        let offset = position - ground;
        if offset.norm() > self.view_radius() {
            return 0.0;
        }
        let pierce = ground + offset * (self.canopy_height / self.altitude);
        self.occluders
            .iter()
            .filter(|o| o.contains(pierce))
            .map(|o| 1.0 - o.opacity)
            .product()
    }

    /// Sine of the angle between the vertical and the line of sight to the
    /// target centre; 0 when the target centre is out of view.
    pub fn obliqueness(&self, position: Vec2) -> f64 {
        let horizontal = position.distance(self.target.center);
        if horizontal > self.view_radius() {
            return 0.0;
        }
        (horizontal / horizontal.hypot(self.altitude)).clamp(0.0, 1.0)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let scene: Scene = serde_json::from_str(&text).map_err(|e| Error::format(path, e))?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).expect("scene serializes");
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// Sample the view from `position`.
pub fn capture_sample(scene: &Scene, position: Vec2) -> SampleImage {
    SampleImage {
        capture_position: position,
        mask: scene
            .target
            .footprint
            .iter()
            .map(|&p| scene.transmittance(position, p))
            .collect(),
        obliqueness: scene.obliqueness(position),
        step: 0,
    }
}

/// Parameters of the procedural forest and the target placement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    /// Trees per hectare.
    pub density: f64,
    pub extent: Vec2,
    pub radius_range: (f64, f64),
    pub opacity_range: (f64, f64),
    pub canopy_height: f64,
    pub altitude: f64,
    pub fov_half_angle_deg: f64,
    pub swarm_start: Vec2,
    /// Horizontal distance from the swarm start to the target.
    pub target_distance: f64,
    /// Direction from the swarm start to the target, degrees from +x.
    pub target_bearing_deg: f64,
    pub footprint_width: f64,
    pub footprint_length: f64,
    pub footprint_grid: usize,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            density: 500.0,
            extent: Vec2::new(100.0, 100.0),
            radius_range: (1.5, 3.5),
            opacity_range: (0.6, 1.0),
            canopy_height: 15.0,
            altitude: 35.0,
            fov_half_angle_deg: 30.0,
            swarm_start: Vec2::new(50.0, 10.0),
            target_distance: 40.0,
            target_bearing_deg: 90.0,
            footprint_width: 0.5,
            footprint_length: 2.0,
            footprint_grid: 5,
        }
    }
}

impl ForestConfig {
    pub fn target_center(&self) -> Vec2 {
        self.swarm_start
            + self.target_distance * Vec2::from_angle(self.target_bearing_deg.to_radians())
    }
}

/// Build a forest from `seed`: `round(density · area / 1 ha)` crowns placed
/// uniformly over the extent, and a person-sized target at the configured
/// distance and bearing from the swarm start.
pub fn generate_forest(seed: u64, config: &ForestConfig) -> Result<Scene> {
    if !(config.density >= 0.0) {
        return Err(Error::config("tree density must be non-negative"));
    }
    let (r_lo, r_hi) = config.radius_range;
    let (o_lo, o_hi) = config.opacity_range;
    if !(r_lo > 0.0 && r_lo <= r_hi) || !(o_lo > 0.0 && o_lo <= o_hi && o_hi <= 1.0) {
        return Err(Error::config("crown radius or opacity range is malformed"));
    }
    let area = config.extent.x * config.extent.y;
    let count = (config.density * area / 10_000.0).round() as usize;
    let mut rng = rng::stream(seed, 0);
    let mut draw = |lo: f64, hi: f64| if hi > lo { rng.gen_range(lo..hi) } else { lo };
    let occluders = (0..count)
        .map(|_| Occluder {
            center: Vec2::new(draw(0.0, config.extent.x), draw(0.0, config.extent.y)),
            radius: draw(r_lo, r_hi),
            opacity: draw(o_lo, o_hi),
        })
        .collect();
    let center = config.target_center();
    let heading = draw(0.0, std::f64::consts::PI);
    let scene = Scene {
        extent: config.extent,
        occluders,
        target: Target::person(
            center,
            config.footprint_width,
            config.footprint_length,
            config.footprint_grid,
            heading,
        ),
        altitude: config.altitude,
        canopy_height: config.canopy_height,
        fov_half_angle_deg: config.fov_half_angle_deg,
    };
    scene.validate()?;
    Ok(scene)
}
