//! Hand-built and randomized instances with explicit edge costs.
//!
//! Used by the test suites and the oracle cross-checks; detections are
//! keyed by `(frame, local_index)`.

use std::collections::BTreeMap;

use rand::Rng;

use crate::cost::EdgeCosts;
use crate::detection::{BBox, Detection};

pub type DetKey = (i64, usize);

/// Costs looked up from tables instead of geometry.
#[derive(Debug, Clone, Default)]
pub struct TableCosts {
    pub entry: f64,
    pub detection: f64,
    pub exit: f64,
    pub entry_override: BTreeMap<DetKey, f64>,
    pub detection_override: BTreeMap<DetKey, f64>,
    pub exit_override: BTreeMap<DetKey, f64>,
    pub links: BTreeMap<(DetKey, DetKey), f64>,
    /// Cost of links absent from `links`; `None` leaves them out.
    pub default_link: Option<f64>,
}

impl TableCosts {
    pub fn uniform(entry: f64, detection: f64, exit: f64) -> Self {
        Self {
            entry,
            detection,
            exit,
            ..Default::default()
        }
    }

    pub fn with_link(mut self, from: DetKey, to: DetKey, cost: f64) -> Self {
        self.links.insert((from, to), cost);
        self
    }
}

fn key(d: &Detection) -> DetKey {
    (d.frame, d.local_index)
}

impl EdgeCosts for TableCosts {
    fn entry(&self, det: &Detection) -> f64 {
        *self.entry_override.get(&key(det)).unwrap_or(&self.entry)
    }
    fn exit(&self, det: &Detection) -> f64 {
        *self.exit_override.get(&key(det)).unwrap_or(&self.exit)
    }
    fn detection(&self, det: &Detection) -> f64 {
        *self.detection_override.get(&key(det)).unwrap_or(&self.detection)
    }
    fn link(&self, from: &Detection, to: &Detection) -> Option<f64> {
        self.links
            .get(&(key(from), key(to)))
            .copied()
            .or(self.default_link)
    }
}

/// Placeholder detections for table-costed instances.
pub fn grid_detections(per_frame: &[usize]) -> Vec<Detection> {
    let mut out = Vec::new();
    for (t, &n) in per_frame.iter().enumerate() {
        for i in 0..n {
            out.push(Detection::new(
                t as i64,
                i,
                BBox::new(20.0 * i as f64, 0.0, 10.0, 10.0),
                1.0,
            ));
        }
    }
    out
}

/// Two frames with two detections each; matched links cost 0, crossed 1.
///
/// The optimum is both matched pairs at total cost -12.
pub fn canonical_2x2() -> (Vec<Detection>, TableCosts) {
    let costs = TableCosts::uniform(2.0, -5.0, 2.0)
        .with_link((0, 0), (1, 0), 0.0)
        .with_link((0, 1), (1, 1), 0.0)
        .with_link((0, 0), (1, 1), 1.0)
        .with_link((0, 1), (1, 0), 1.0);
    (grid_detections(&[2, 2]), costs)
}

/// Same layout as [`canonical_2x2`] but crossing links are cheaper.
pub fn crossed_2x2() -> (Vec<Detection>, TableCosts) {
    let costs = TableCosts::uniform(2.0, -5.0, 2.0)
        .with_link((0, 0), (1, 0), 2.0)
        .with_link((0, 1), (1, 1), 2.0)
        .with_link((0, 0), (1, 1), -1.0)
        .with_link((0, 1), (1, 0), -1.0);
    (grid_detections(&[2, 2]), costs)
}

/// An instance whose cheapest single path blocks the optimum.
///
/// `a0 -> b1` costs -9 alone, but the optimum pairs `a0 -> b0` and
/// `a1 -> b1` for -12; reaching it needs the second augmenting path to
/// cancel the `a0 -> b1` link. A greedy path picker ends at -11.
pub fn interchange() -> (Vec<Detection>, TableCosts) {
    let costs = TableCosts::uniform(2.0, -5.0, 2.0)
        .with_link((0, 0), (1, 0), 0.0)
        .with_link((0, 0), (1, 1), -3.0)
        .with_link((0, 1), (1, 1), 0.0);
    (grid_detections(&[2, 2]), costs)
}

/// A single detection with the given unary costs.
pub fn single(entry: f64, detection: f64, exit: f64) -> (Vec<Detection>, TableCosts) {
    (grid_detections(&[1]), TableCosts::uniform(entry, detection, exit))
}

/// Random instance with mixed-sign costs.
///
/// Every consecutive-frame pair is linked with probability `link_prob`.
/// `jitter` adds a tiny perturbation to every cost so optima are unique.
pub fn random_instance<R: Rng>(
    rng: &mut R,
    frames: std::ops::RangeInclusive<usize>,
    per_frame: std::ops::RangeInclusive<usize>,
    link_prob: f64,
) -> (Vec<Detection>, TableCosts) {
    let n_frames = rng.random_range(frames);
    let counts: Vec<usize> = (0..n_frames)
        .map(|_| rng.random_range(per_frame.clone()))
        .collect();
    let dets = grid_detections(&counts);
    let mut costs = TableCosts::uniform(0.0, 0.0, 0.0);
    for d in &dets {
        let k = key(d);
        costs.entry_override.insert(k, rng.random_range(-1.0..4.0));
        costs.exit_override.insert(k, rng.random_range(-1.0..4.0));
        costs.detection_override.insert(k, rng.random_range(-8.0..3.0));
    }
    for (t, pair) in counts.windows(2).enumerate() {
        for i in 0..pair[0] {
            for j in 0..pair[1] {
                if rng.random_bool(link_prob) {
                    let c = rng.random_range(-3.0..3.0);
                    costs
                        .links
                        .insert(((t as i64, i), (t as i64 + 1, j)), c);
                }
            }
        }
    }
    (dets, costs)
}

/// Splits detections into contiguous frame layers starting at the first frame.
pub fn by_frame(dets: &[Detection]) -> Vec<(i64, Vec<Detection>)> {
    crate::detection::frame_layers(dets.to_vec())
}
