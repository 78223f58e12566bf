//! Visibility objective over a set of aerial samples.
//!
//! A footprint point counts as seen if any sample sees it:
//! `1 − Π_k (1 − t_k)`. The integral score is the mean over footprint points,
//! weighted by the obliqueness of the most oblique sample that sees anything,
//! `(1 + obliqueness) / 2`. Adding a sample can only raise both factors.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::geom::Vec2;
use crate::scene::{capture_sample, Scene};

/// One aerial photo reduced to what it reveals of the target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleImage {
    pub capture_position: Vec2,
    /// Transmittance per footprint point, in `[0, 1]`.
    pub mask: Vec<f64>,
    pub obliqueness: f64,
    /// Time step at which the photo was taken.
    #[serde(default)]
    pub step: u64,
}

impl SampleImage {
    pub fn mask_mean(&self) -> f64 {
        if self.mask.is_empty() {
            0.0
        } else {
            self.mask.iter().sum::<f64>() / self.mask.len() as f64
        }
    }

    fn weight(&self) -> f64 {
        (1.0 + self.obliqueness) / 2.0
    }

    fn sees_anything(&self) -> bool {
        self.mask.iter().any(|&t| t > 0.0)
    }
}

/// Running combination of samples.
#[derive(Clone, Debug, Default)]
struct Integral {
    /// Per footprint point, the probability that every sample misses it.
    miss: Vec<f64>,
    weight: Option<f64>,
}

impl Integral {
    fn of<'a>(samples: impl IntoIterator<Item = &'a SampleImage>) -> Self {
        let mut acc = Integral::default();
        for s in samples {
            acc.add(s);
        }
        acc
    }

    fn add(&mut self, sample: &SampleImage) {
        if self.miss.is_empty() {
            self.miss = vec![1.0; sample.mask.len()];
        }
        for (m, &t) in self.miss.iter_mut().zip(&sample.mask) {
            *m *= 1.0 - t;
        }
        if sample.sees_anything() {
            let w = sample.weight();
            self.weight = Some(self.weight.map_or(w, |old| old.max(w)));
        }
    }

    fn value(&self) -> f64 {
        let Some(weight) = self.weight else {
            return 0.0;
        };
        let seen = self.miss.iter().map(|m| 1.0 - m).sum::<f64>() / self.miss.len() as f64;
        seen * weight
    }

    fn value_with(&self, sample: &SampleImage) -> f64 {
        let mut next = self.clone();
        next.add(sample);
        next.value()
    }
}

/// Target visibility of the integral over `samples`; 0 for no samples.
pub fn integral_visibility(samples: &[SampleImage]) -> f64 {
    Integral::of(samples).value()
}

/// Per-footprint-point combined visibility, without obliqueness weighting.
pub fn point_visibility(samples: &[SampleImage]) -> Vec<f64> {
    Integral::of(samples).miss.iter().map(|m| 1.0 - m).collect()
}

/// Samples kept for the integral across time steps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleHistory {
    pub retained: Vec<SampleImage>,
    pub capacity: usize,
}

impl SampleHistory {
    pub fn new(capacity: usize) -> Self {
        Self {
            retained: Vec::new(),
            capacity,
        }
    }

    pub fn visibility(&self) -> f64 {
        integral_visibility(&self.retained)
    }

    /// Keep all of `new`, then re-admit older samples while they strictly
    /// improve visibility and room remains.
    ///
    /// Candidates are tried in order of decreasing mask mean, older first on
    /// ties. A sample taken where the kept set already has one carries no new
    /// information and is skipped.
    pub fn update(&self, new: Vec<SampleImage>) -> SampleHistory {
        let mut kept = new;
        let mut candidates: Vec<&SampleImage> = self.retained.iter().collect();
        candidates.sort_by(|a, b| {
            b.mask_mean()
                .partial_cmp(&a.mask_mean())
                .unwrap_or(Ordering::Equal)
                .then(a.step.cmp(&b.step))
        });
        let mut acc = Integral::of(&kept);
        for candidate in candidates {
            if kept.len() >= self.capacity {
                break;
            }
            if kept
                .iter()
                .any(|s| s.capture_position == candidate.capture_position)
            {
                continue;
            }
            if acc.value_with(candidate) > acc.value() {
                acc.add(candidate);
                kept.push(candidate.clone());
            }
        }
        SampleHistory {
            retained: kept,
            capacity: self.capacity,
        }
    }

    /// Visibility of the retained set extended by one more sample.
    pub fn visibility_with(&self, sample: &SampleImage) -> f64 {
        Integral::of(&self.retained).value_with(sample)
    }
}

pub fn update_history(history: &SampleHistory, new: Vec<SampleImage>) -> SampleHistory {
    history.update(new)
}

/// Visibility of the history extended by a sample taken at `position`.
pub fn evaluate(position: Vec2, history: &SampleHistory, scene: &Scene) -> f64 {
    history.visibility_with(&capture_sample(scene, position))
}

/// Evaluate several positions against the same history.
pub fn evaluate_many(samples: &[SampleImage], history: &SampleHistory) -> Vec<f64> {
    let base = Integral::of(&history.retained);
    samples.iter().map(|s| base.value_with(s)).collect()
}
