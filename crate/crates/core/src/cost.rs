//! Edge cost families of the association network.
//!
//! Detection scores pass through a logistic and an affine (or log-odds)
//! map; pairwise geometry is turned into a similarity vector `s` whose
//! link cost is `((1 - s) + o) . w`.

use serde::{Deserialize, Serialize};

use crate::detection::Detection;
use crate::error::{Error, Result};

/// Number of pairwise features derived from box geometry alone.
pub const GEOMETRY_FEATURES: usize = 3;

/// Supplies the four cost families for a graph under construction.
///
/// `link` returns `None` when the pair is not admitted as an edge.
pub trait EdgeCosts {
    fn entry(&self, det: &Detection) -> f64;
    fn exit(&self, det: &Detection) -> f64;
    fn detection(&self, det: &Detection) -> f64;
    fn link(&self, from: &Detection, to: &Detection) -> Option<f64>;
}

impl<T: EdgeCosts + ?Sized> EdgeCosts for &T {
    fn entry(&self, det: &Detection) -> f64 {
        (**self).entry(det)
    }
    fn exit(&self, det: &Detection) -> f64 {
        (**self).exit(det)
    }
    fn detection(&self, det: &Detection) -> f64 {
        (**self).detection(det)
    }
    fn link(&self, from: &Detection, to: &Detection) -> Option<f64> {
        (**self).link(from, to)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DetectionCostForm {
    /// `det_offset + det_weight * 1 / (1 + exp(beta * score))`
    #[default]
    Affine,
    /// `det_offset + det_weight * ln(c / (1 - c))` with `c` the logistic term.
    LogOdds,
}

/// Pairwise similarity vector; the first three entries are
/// (iou_overlap, location_similarity, size_similarity).
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseFeatures(pub Vec<f64>);

impl PairwiseFeatures {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gating {
    pub enabled: bool,
    /// Admission radius as a multiple of the larger box diagonal.
    pub radius_scale: f64,
}

impl Default for Gating {
    fn default() -> Self {
        Self {
            enabled: true,
            radius_scale: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostModel {
    beta: f64,
    entry_cost: f64,
    exit_cost: f64,
    det_offset: f64,
    det_weight: f64,
    det_form: DetectionCostForm,
    feature_offsets: Vec<f64>,
    feature_weights: Vec<f64>,
    gating: Gating,
}

impl Default for CostModel {
    fn default() -> Self {
        Self {
            beta: 1.0,
            entry_cost: 2.0,
            exit_cost: 2.0,
            det_offset: -1.0,
            det_weight: 2.0,
            det_form: DetectionCostForm::Affine,
            feature_offsets: vec![-0.4; GEOMETRY_FEATURES],
            feature_weights: vec![2.0, 1.0, 1.0],
            gating: Gating::default(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct CostModelBuilder {
    model: CostModel,
}

impl CostModelBuilder {
    pub fn beta(mut self, beta: f64) -> Self {
        self.model.beta = beta;
        self
    }
    pub fn entry_cost(mut self, c: f64) -> Self {
        self.model.entry_cost = c;
        self
    }
    pub fn exit_cost(mut self, c: f64) -> Self {
        self.model.exit_cost = c;
        self
    }
    pub fn detection_affine(mut self, offset: f64, weight: f64) -> Self {
        self.model.det_offset = offset;
        self.model.det_weight = weight;
        self
    }
    pub fn detection_form(mut self, form: DetectionCostForm) -> Self {
        self.model.det_form = form;
        self
    }
    pub fn features(mut self, offsets: Vec<f64>, weights: Vec<f64>) -> Self {
        self.model.feature_offsets = offsets;
        self.model.feature_weights = weights;
        self
    }
    pub fn gating(mut self, gating: Gating) -> Self {
        self.model.gating = gating;
        self
    }

    pub fn build(self) -> Result<CostModel> {
        let m = self.model;
        let scalars = [m.beta, m.entry_cost, m.exit_cost, m.det_offset, m.det_weight];
        if scalars.iter().any(|v| !v.is_finite()) {
            return Err(Error::CostModel("parameters must be finite".into()));
        }
        if m.feature_offsets.len() != m.feature_weights.len() {
            return Err(Error::CostModel(format!(
                "{} feature offsets but {} weights",
                m.feature_offsets.len(),
                m.feature_weights.len()
            )));
        }
        if m.feature_offsets.len() < GEOMETRY_FEATURES {
            return Err(Error::CostModel(format!(
                "at least {GEOMETRY_FEATURES} pairwise features are required"
            )));
        }
        if m
            .feature_offsets
            .iter()
            .chain(&m.feature_weights)
            .any(|v| !v.is_finite())
        {
            return Err(Error::CostModel("feature parameters must be finite".into()));
        }
        if m.gating.enabled && !(m.gating.radius_scale.is_finite() && m.gating.radius_scale > 0.0) {
            return Err(Error::CostModel("gating radius scale must be positive".into()));
        }
        Ok(m)
    }
}

impl CostModel {
    pub fn builder() -> CostModelBuilder {
        CostModelBuilder::default()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn entry_cost(&self) -> f64 {
        self.entry_cost
    }

    pub fn exit_cost(&self) -> f64 {
        self.exit_cost
    }

    pub fn feature_count(&self) -> usize {
        self.feature_weights.len()
    }

    pub fn gating(&self) -> &Gating {
        &self.gating
    }

    /// Logistic term `1 / (1 + exp(beta * score))`.
    pub fn logistic(&self, score: f64) -> f64 {
        let z = self.beta * score;
        // exp overflow saturates to 0 / 1 on its own, but keep the branch
        // explicit so the log-odds form never sees an exact 0 or 1 from NaN.
        if z > 700.0 {
            0.0
        } else if z < -700.0 {
            1.0
        } else {
            1.0 / (1.0 + z.exp())
        }
    }

    pub fn detection_cost(&self, score: f64) -> f64 {
        match self.det_form {
            DetectionCostForm::Affine => self.det_offset + self.det_weight * self.logistic(score),
            // ln(c / (1 - c)) reduces to -beta * score for the logistic above.
            DetectionCostForm::LogOdds => self.det_offset + self.det_weight * (-self.beta * score),
        }
    }

    pub fn link_cost(&self, s: &PairwiseFeatures) -> f64 {
        s.0.iter()
            .zip(&self.feature_offsets)
            .zip(&self.feature_weights)
            .map(|((s, o), w)| ((1.0 - s) + o) * w)
            .sum()
    }

    /// Similarities for a detection pair, sized to this model's feature count.
    ///
    /// Features beyond the geometric three compare the detections' extra
    /// columns as `exp(-|a - b|)`; a missing column yields similarity 0.
    pub fn features_for(&self, a: &Detection, b: &Detection) -> PairwiseFeatures {
        let mut s = pairwise_features(a, b).0;
        for k in 0..self.feature_count() - GEOMETRY_FEATURES {
            let v = match (a.extra.get(k), b.extra.get(k)) {
                (Some(x), Some(y)) => (-(x - y).abs()).exp(),
                _ => 0.0,
            };
            s.push(v.clamp(0.0, 1.0));
        }
        PairwiseFeatures(s)
    }

    fn admits(&self, a: &Detection, b: &Detection) -> bool {
        if !self.gating.enabled {
            return true;
        }
        let radius = self.gating.radius_scale * a.bbox.diagonal().max(b.bbox.diagonal());
        a.bbox.center_distance(&b.bbox) <= radius
    }
}

/// Geometry-only similarities of two boxes in consecutive frames.
pub fn pairwise_features(a: &Detection, b: &Detection) -> PairwiseFeatures {
    let iou = a.bbox.iou(&b.bbox);
    let location = (-a.bbox.center_distance(&b.bbox) / a.bbox.diagonal()).exp();
    let (aa, ab) = (a.bbox.area(), b.bbox.area());
    let size = aa.min(ab) / aa.max(ab);
    PairwiseFeatures(vec![
        iou.clamp(0.0, 1.0),
        location.clamp(0.0, 1.0),
        size.clamp(0.0, 1.0),
    ])
}

impl EdgeCosts for CostModel {
    fn entry(&self, _det: &Detection) -> f64 {
        self.entry_cost
    }

    fn exit(&self, _det: &Detection) -> f64 {
        self.exit_cost
    }

    fn detection(&self, det: &Detection) -> f64 {
        self.detection_cost(det.score)
    }

    fn link(&self, from: &Detection, to: &Detection) -> Option<f64> {
        if !self.admits(from, to) {
            return None;
        }
        let c = self.link_cost(&self.features_for(from, to));
        c.is_finite().then_some(c)
    }
}
