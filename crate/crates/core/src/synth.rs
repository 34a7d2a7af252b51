//! Seeded synthetic detection sequences with ground truth.
//!
//! Objects move with constant velocity plus Gaussian noise. Each frame the
//! detector misses an object with probability `miss_rate`; the emitted
//! boxes are interleaved with false positives so that each emitted box is
//! a false positive with probability `fp_rate`. True boxes score around 2,
//! false positives around -1.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::detection::{BBox, Detection};
use crate::error::{Error, Result};
use crate::metrics::FrameBoxes;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub frames: usize,
    /// Objects present in the first frame.
    pub tracks: usize,
    /// Per-frame probability that a new object appears.
    pub spawn_prob: f64,
    /// Per-frame, per-object probability of disappearing.
    pub death_prob: f64,
    /// Standard deviation of the per-frame position noise, in pixels.
    pub motion_noise: f64,
    /// Standard deviation of detector box jitter, in pixels.
    pub box_noise: f64,
    pub fp_rate: f64,
    pub miss_rate: f64,
    pub width: f64,
    pub height: f64,
    pub box_w: f64,
    pub box_h: f64,
    pub max_speed: f64,
    /// Reflect objects at the image border instead of letting them leave.
    pub bounce: bool,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            frames: 100,
            tracks: 5,
            spawn_prob: 0.03,
            death_prob: 0.005,
            motion_noise: 0.3,
            box_noise: 1.0,
            fp_rate: 0.1,
            miss_rate: 0.05,
            width: 1242.0,
            height: 375.0,
            box_w: 40.0,
            box_h: 80.0,
            max_speed: 5.0,
            bounce: false,
        }
    }
}

impl SynthConfig {
    /// Fixed object count, no detector errors: every frame has exactly
    /// `tracks` detections.
    pub fn stationary(frames: usize, tracks: usize) -> Self {
        Self {
            frames,
            tracks,
            spawn_prob: 0.0,
            death_prob: 0.0,
            fp_rate: 0.0,
            miss_rate: 0.0,
            bounce: true,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |name: &str, p: f64, upper_open: bool| {
            let ok = p.is_finite() && p >= 0.0 && if upper_open { p < 1.0 } else { p <= 1.0 };
            if ok {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be a probability, got {p}")))
            }
        };
        prob("spawn_prob", self.spawn_prob, false)?;
        prob("death_prob", self.death_prob, false)?;
        prob("miss_rate", self.miss_rate, false)?;
        prob("fp_rate", self.fp_rate, true)?;
        for (name, v) in [
            ("width", self.width),
            ("height", self.height),
            ("box_w", self.box_w),
            ("box_h", self.box_h),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if self.box_w >= self.width || self.box_h >= self.height {
            return Err(Error::Config("boxes must fit inside the image".into()));
        }
        for (name, v) in [
            ("motion_noise", self.motion_noise),
            ("box_noise", self.box_noise),
            ("max_speed", self.max_speed),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!("{name} must be non-negative")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSequence {
    pub detections: Vec<Detection>,
    /// Ground-truth object of each detection, `None` for false positives.
    pub labels: Vec<Option<u64>>,
    pub ground_truth: FrameBoxes,
}

struct Object {
    id: u64,
    x: f64,
    y: f64,
    vx: f64,
    vy: f64,
}

pub fn generate_synthetic(config: &SynthConfig, seed: u64) -> Result<SyntheticSequence> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let motion = Normal::new(0.0, config.motion_noise).expect("validated");
    let jitter = Normal::new(0.0, config.box_noise).expect("validated");
    let true_score = Normal::new(2.0, 1.0).expect("constant");
    let fp_score = Normal::new(-1.0, 1.0).expect("constant");
    let (max_x, max_y) = (config.width - config.box_w, config.height - config.box_h);

    let mut next_id = 0u64;
    let mut spawn = |rng: &mut ChaCha8Rng| {
        let speed = config.max_speed;
        let o = Object {
            id: next_id,
            x: rng.random_range(0.0..=max_x),
            y: rng.random_range(0.0..=max_y),
            vx: if speed > 0.0 { rng.random_range(-speed..=speed) } else { 0.0 },
            vy: if speed > 0.0 { rng.random_range(-speed..=speed) * 0.25 } else { 0.0 },
        };
        next_id += 1;
        o
    };
    let mut objects: Vec<Object> = (0..config.tracks).map(|_| spawn(&mut rng)).collect();

    let mut out = SyntheticSequence {
        detections: Vec::new(),
        labels: Vec::new(),
        ground_truth: FrameBoxes::new(),
    };
    for t in 0..config.frames as i64 {
        if t > 0 {
            objects.retain(|_| !rng.random_bool(config.death_prob));
            for o in &mut objects {
                o.x += o.vx + motion.sample(&mut rng);
                o.y += o.vy + motion.sample(&mut rng);
                if config.bounce {
                    reflect(&mut o.x, &mut o.vx, max_x);
                    reflect(&mut o.y, &mut o.vy, max_y);
                }
            }
            objects.retain(|o| (0.0..=max_x).contains(&o.x) && (0.0..=max_y).contains(&o.y));
            if rng.random_bool(config.spawn_prob) {
                objects.push(spawn(&mut rng));
            }
        }

        let gt: Vec<(u64, BBox)> = objects
            .iter()
            .map(|o| (o.id, BBox::new(o.x, o.y, config.box_w, config.box_h)))
            .collect();
        let seen: Vec<&(u64, BBox)> = gt.iter().filter(|_| !rng.random_bool(config.miss_rate)).collect();
        if !gt.is_empty() {
            out.ground_truth.insert(t, gt.clone());
        }

        let mut local = 0usize;
        let mut emit = |out: &mut SyntheticSequence, bbox: BBox, score: f64, label: Option<u64>| {
            out.detections.push(Detection::new(t, local, bbox, score));
            out.labels.push(label);
            local += 1;
        };
        let mut pending = seen.into_iter();
        let mut next = pending.next();
        while let Some((id, bbox)) = next {
            if rng.random_bool(config.fp_rate) {
                let b = BBox::new(
                    rng.random_range(0.0..=max_x),
                    rng.random_range(0.0..=max_y),
                    config.box_w,
                    config.box_h,
                );
                emit(&mut out, b, fp_score.sample(&mut rng), None);
            } else {
                let b = BBox::new(
                    bbox.x + jitter.sample(&mut rng),
                    bbox.y + jitter.sample(&mut rng),
                    config.box_w,
                    config.box_h,
                );
                emit(&mut out, b, true_score.sample(&mut rng), Some(*id));
                next = pending.next();
            }
        }
    }
    Ok(out)
}

fn reflect(pos: &mut f64, vel: &mut f64, max: f64) {
    if *pos < 0.0 {
        *pos = -*pos;
        *vel = vel.abs();
    }
    if *pos > max {
        *pos = 2.0 * max - *pos;
        *vel = -vel.abs();
    }
    *pos = pos.clamp(0.0, max);
}
