use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::bayes::BayesModel;
use crate::centroid::Centroid;
use crate::corpus::{TermId, Vocabulary};
use crate::ga::{GaConfig, GaResult};
use crate::kl::IterationConfig;
use crate::pc::{ClassModel, DEFAULT_COMPONENTS};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    /// Upper bound on principal components per class.
    pub components: usize,
    pub kl: IterationConfig,
    pub smoothing: f64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            components: DEFAULT_COMPONENTS,
            kl: IterationConfig::default(),
            smoothing: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ReductionOutcome {
    Reduced(GaResult),
    Infeasible { containment: f64 },
}

/// GA outcome for one class; genes follow `term_order`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReduction {
    pub term_order: Vec<TermId>,
    pub outcome: ReductionOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionSet {
    pub config: GaConfig,
    pub classes: BTreeMap<String, ClassReduction>,
}

/// Everything `train` and `reduce` produce, as one versioned JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub train_config: TrainOptions,
    pub vocabulary: Vec<String>,
    pub centroids: Vec<Centroid>,
    pub bayes: BayesModel,
    pub class_models: Vec<ClassModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ga_masks: Option<ReductionSet>,
}

impl ModelFile {
    pub fn to_json(&self) -> Result<String, HarnessError> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Parses and cross-checks a model document.
    pub fn from_json(bytes: &[u8]) -> Result<Self, HarnessError> {
        let model: ModelFile = serde_json::from_slice(bytes)?;
        model.validate()?;
        Ok(model)
    }

    pub fn vocabulary(&self) -> Result<Vocabulary, HarnessError> {
        Ok(Vocabulary::from_words(self.vocabulary.clone())?)
    }

    pub fn class_ids(&self) -> Vec<&str> {
        self.centroids.iter().map(|c| c.class_id.as_str()).collect()
    }

    pub fn centroid(&self, class: &str) -> Option<&Centroid> {
        self.centroids.iter().find(|c| c.class_id == class)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Model(m));
        if self.format_version != FORMAT_VERSION {
            return bad(format!(
                "unsupported format version {} (expected {FORMAT_VERSION})",
                self.format_version
            ));
        }
        let dim = self.vocabulary.len();
        self.vocabulary()?;
        let in_vocab = |t: &TermId| t.index() < dim;

        let ids: BTreeSet<&str> = self.class_ids().into_iter().collect();
        if ids.is_empty() || ids.len() != self.centroids.len() {
            return bad("centroid class ids must be non-empty and unique".into());
        }
        for c in &self.centroids {
            if !c.vector.terms().iter().all(|(t, _)| in_vocab(t)) {
                return bad(format!("centroid `{}` references unknown terms", c.class_id));
            }
            if !c.vector.is_unit() || c.support != c.vector.len() {
                return bad(format!("centroid `{}` is not a unit vector of its support", c.class_id));
            }
        }

        let pc_ids: BTreeSet<&str> = self.class_models.iter().map(|m| m.class_id.as_str()).collect();
        if pc_ids != ids || self.class_models.len() != ids.len() {
            return bad("class models do not match centroids".into());
        }
        for m in &self.class_models {
            m.check()
                .map_err(|e| HarnessError::Model(format!("class model `{}`: {e}", m.class_id)))?;
            if !m.term_map.iter().all(in_vocab) {
                return bad(format!("class model `{}` references unknown terms", m.class_id));
            }
        }

        let b = &self.bayes;
        fn keys<V>(m: &BTreeMap<String, V>) -> BTreeSet<&str> {
            m.keys().map(String::as_str).collect()
        }
        if keys(&b.priors) != ids
            || keys(&b.term_counts) != ids
            || keys(&b.class_doc_counts) != ids
            || keys(&b.class_term_totals) != ids
        {
            return bad("bayes model classes do not match centroids".into());
        }
        if b.vocabulary_size != dim || !(b.smoothing > 0.0 && b.smoothing.is_finite()) {
            return bad("bayes model vocabulary size or smoothing invalid".into());
        }
        if b.priors.values().any(|p| !(*p > 0.0 && *p <= 1.0)) || (b.priors.values().sum::<f64>() - 1.0).abs() > 1e-9 {
            return bad("bayes priors must be positive and sum to one".into());
        }
        if b.term_counts.values().any(|m| !m.keys().all(in_vocab)) {
            return bad("bayes counters reference unknown terms".into());
        }

        if let Some(set) = &self.ga_masks {
            set.config.validate().map_err(|e| HarnessError::Model(e.to_string()))?;
            for (class, red) in &set.classes {
                let c = self
                    .centroid(class)
                    .ok_or_else(|| HarnessError::Model(format!("mask for unknown class `{class}`")))?;
                let support: Vec<TermId> = c.vector.terms().iter().map(|&(t, _)| t).collect();
                if red.term_order != support {
                    return bad(format!("mask term order for `{class}` differs from centroid support"));
                }
                if let ReductionOutcome::Reduced(r) = &red.outcome {
                    if r.best.len() != support.len() || r.dimension != support.len() {
                        return bad(format!("mask for `{class}` has wrong length"));
                    }
                }
            }
        }
        Ok(())
    }
}
