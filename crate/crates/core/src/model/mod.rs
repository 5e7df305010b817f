//! The two classifier variants sharing one encoder: a plain head over the
//! pooled pair encoding, and a consistency-aware head that also encodes the
//! claim alone, feeds the claim/pair cosine into the feature vector, and
//! trains against a joint objective.

mod checkpoint;
mod losses;

pub use checkpoint::{load_checkpoint, save_checkpoint, LoadedCheckpoint, ModelKind};
pub use losses::{
    cosine_embedding_loss, cosine_similarity, cross_entropy_loss, joint_loss, CE_EPSILON,
    COSINE_NORM_FLOOR,
};

use serde::{Deserialize, Serialize};

use crate::data::{StanceLabel, StancePair};
use crate::encoder::{pack_claim_only, pack_pair, pack_pair_tokens, Encoder, PackedSequence, Pass};
use crate::error::{Error, Result};
use crate::nn::{NodeId, ParamStore, Tape};
use crate::seeding;

/// Store key of the classifier head weights, shape `[2, D]`.
pub const HEAD_WEIGHT: &str = "head.weight";

pub const NUM_CLASSES: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Base,
    Cons,
}

/// Head weight dimensions: `classes × input_dim`, where the input is the
/// pooled pair encoding (BASE) or that encoding plus the cosine scalar
/// (CONS).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassifierHead {
    pub classes: usize,
    pub input_dim: usize,
}

/// A classified pair: class distribution, argmax label, and (consistency
/// variant only) the claim/pair cosine similarity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub probs: Vec<f64>,
    pub label: StanceLabel,
    pub cosine: Option<f64>,
}

impl Prediction {
    /// Validate the distribution and take the argmax, ties toward SUPPORT.
    pub fn from_probs(probs: Vec<f64>, cosine: Option<f64>) -> Result<Prediction> {
        if probs.len() != NUM_CLASSES {
            return Err(Error::Contract(format!(
                "expected {NUM_CLASSES} probabilities, got {}",
                probs.len()
            )));
        }
        let sum: f64 = probs.iter().sum();
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) || (sum - 1.0).abs() > 1e-6 {
            return Err(Error::Contract(format!(
                "invalid class distribution {probs:?}"
            )));
        }
        if let Some(c) = cosine {
            if !(-1.0..=1.0).contains(&c) {
                return Err(Error::Contract(format!("cosine {c} outside [-1, 1]")));
            }
        }
        let label = if probs[StanceLabel::Oppose.index()] > probs[StanceLabel::Support.index()] {
            StanceLabel::Oppose
        } else {
            StanceLabel::Support
        };
        Ok(Prediction {
            probs,
            label,
            cosine,
        })
    }
}

/// Per-instance training-graph handles.
pub struct InstanceLossNodes {
    pub ce: NodeId,
    pub cos_loss: Option<NodeId>,
    pub probs: NodeId,
}

/// Batch training-graph handles. `joint` is the optimization target:
/// mean cross-entropy plus (CONS) the weighted mean consistency loss.
pub struct BatchLossNodes {
    pub joint: NodeId,
    pub ce_mean: NodeId,
    pub cos_mean: Option<NodeId>,
}

/// A classifier variant bound to an encoder. Parameters live in an external
/// [`ParamStore`] shared with the optimizer.
pub struct StancyModel {
    pub variant: Variant,
    pub encoder: Encoder,
    /// Ablation toggle: when set, the cosine scalar enters the feature
    /// vector as a constant, so no gradient flows into it from the head;
    /// the consistency loss path keeps its gradient either way.
    pub detach_cosine_feature: bool,
}

impl StancyModel {
    pub fn new(variant: Variant, encoder: Encoder) -> StancyModel {
        StancyModel {
            variant,
            encoder,
            detach_cosine_feature: false,
        }
    }

    pub fn head(&self) -> ClassifierHead {
        let h = self.encoder.spec.hidden_size;
        ClassifierHead {
            classes: NUM_CLASSES,
            input_dim: match self.variant {
                Variant::Base => h,
                Variant::Cons => h + 1,
            },
        }
    }

    /// Register encoder and head parameters with fresh random values.
    pub fn init_params(&self, store: &mut ParamStore, seed: u64) {
        self.encoder.init_params(store, seed);
        self.init_head_params(store, seed);
    }

    /// Register only the classifier head, for stores whose encoder
    /// parameters were loaded from a pretrained checkpoint.
    pub fn init_head_params(&self, store: &mut ParamStore, seed: u64) {
        let head = self.head();
        let mut rng = seeding::rng_for(seed, "head-init");
        store.def(
            HEAD_WEIGHT,
            seeding::normal_matrix(head.classes, head.input_dim, 0.02, &mut rng),
        );
    }

    /// Inference for whichever variant this model is.
    pub fn predict(&self, store: &ParamStore, claim: &str, perspective: &str) -> Result<Prediction> {
        match self.variant {
            Variant::Base => self.forward_base(store, claim, perspective),
            Variant::Cons => self.forward_cons(store, claim, perspective),
        }
    }

    pub fn predict_pair(&self, store: &ParamStore, pair: &StancePair) -> Result<Prediction> {
        self.predict(store, &pair.claim_text, &pair.perspective_text)
    }

    /// Plain variant: softmax head over the pooled pair encoding.
    pub fn forward_base(
        &self,
        store: &ParamStore,
        claim: &str,
        perspective: &str,
    ) -> Result<Prediction> {
        if self.variant != Variant::Base {
            return Err(Error::Contract(
                "forward_base called on a consistency-variant model".into(),
            ));
        }
        let seq = pack_pair(claim, perspective, &self.encoder.vocab, self.encoder.spec.max_sequence_length)?;
        self.predict_packed(store, claim, &seq)
    }

    /// Consistency variant: two encoder passes with shared parameters; the
    /// head consumes the pair encoding concatenated with the claim/pair
    /// cosine similarity.
    pub fn forward_cons(
        &self,
        store: &ParamStore,
        claim: &str,
        perspective: &str,
    ) -> Result<Prediction> {
        if self.variant != Variant::Cons {
            return Err(Error::Contract(
                "forward_cons called on a base-variant model".into(),
            ));
        }
        let seq = pack_pair(claim, perspective, &self.encoder.vocab, self.encoder.spec.max_sequence_length)?;
        self.predict_packed(store, claim, &seq)
    }

    /// Score a claim against an explicit perspective token list. An empty
    /// list packs as `[CLS] claim [SEP] [SEP]` and serves as the baseline
    /// for incremental attribution; works for either variant.
    pub fn predict_tokens(
        &self,
        store: &ParamStore,
        claim: &str,
        perspective_tokens: Vec<usize>,
    ) -> Result<Prediction> {
        let seq = pack_pair_tokens(
            claim,
            perspective_tokens,
            &self.encoder.vocab,
            self.encoder.spec.max_sequence_length,
        )?;
        self.predict_packed(store, claim, &seq)
    }

    fn predict_packed(
        &self,
        store: &ParamStore,
        claim: &str,
        pair_seq: &PackedSequence,
    ) -> Result<Prediction> {
        let xpc = self.encoder.encode(store, pair_seq)?;
        match self.variant {
            Variant::Base => {
                let probs = self.head_probs(store, xpc.as_slice())?;
                Prediction::from_probs(probs, None)
            }
            Variant::Cons => {
                let claim_seq = pack_claim_only(
                    claim,
                    &self.encoder.vocab,
                    self.encoder.spec.max_sequence_length,
                )?;
                let xc = self.encoder.encode(store, &claim_seq)?;
                let cos = losses::cosine_similarity(xc.as_slice(), xpc.as_slice())?;
                let mut feature = xpc.as_slice().to_vec();
                feature.push(cos);
                let probs = self.head_probs(store, &feature)?;
                Prediction::from_probs(probs, Some(cos))
            }
        }
    }

    /// Stable softmax of the head logits, outside the tape.
    fn head_probs(&self, store: &ParamStore, feature: &[f64]) -> Result<Vec<f64>> {
        let head = self.head();
        let id = store
            .id(HEAD_WEIGHT)
            .ok_or_else(|| Error::Contract(format!("parameter {HEAD_WEIGHT} not registered")))?;
        let w = store.value(id);
        if w.dim() != (head.classes, head.input_dim) {
            return Err(Error::Contract(format!(
                "head weights are {}x{}, expected {}x{}",
                w.nrows(),
                w.ncols(),
                head.classes,
                head.input_dim
            )));
        }
        let logits: Vec<f64> = (0..head.classes)
            .map(|k| w.row(k).iter().zip(feature).map(|(a, b)| a * b).sum())
            .collect();
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
        let z: f64 = exps.iter().sum();
        Ok(exps.into_iter().map(|e| e / z).collect())
    }

    /// Build the training graph for one instance: cross-entropy on the
    /// log-softmax head, plus (CONS) the piecewise consistency loss with
    /// the gold-label similarity target.
    pub fn instance_loss_nodes(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        pair: &StancePair,
        pass: &mut Pass,
    ) -> Result<InstanceLossNodes> {
        let max = self.encoder.spec.max_sequence_length;
        let pair_seq = pack_pair(&pair.claim_text, &pair.perspective_text, &self.encoder.vocab, max)?;
        let xpc = self.encoder.encode_node(tape, store, &pair_seq, pass)?;

        let head_id = store
            .id(HEAD_WEIGHT)
            .ok_or_else(|| Error::Contract(format!("parameter {HEAD_WEIGHT} not registered")))?;

        let (feature, cos_loss) = match self.variant {
            Variant::Base => (xpc, None),
            Variant::Cons => {
                let claim_seq = pack_claim_only(&pair.claim_text, &self.encoder.vocab, max)?;
                let xc = self.encoder.encode_node(tape, store, &claim_seq, pass)?;
                let cos = tape.cosine_sim(xc, xpc, COSINE_NORM_FLOOR);
                let cos_feature = if self.detach_cosine_feature {
                    let frozen = tape.value(cos).clone();
                    tape.constant(frozen)
                } else {
                    cos
                };
                let feature = tape.concat_cols(&[xpc, cos_feature]);
                let cos_loss = match pair.label {
                    // Similar target: 1 - cos, kept non-negative against
                    // round-off past cosine 1.
                    StanceLabel::Support => {
                        let neg = tape.scale(cos, -1.0);
                        let shifted = tape.add_scalar(neg, 1.0);
                        tape.relu(shifted)
                    }
                    // Dissimilar target: max(0, cos).
                    StanceLabel::Oppose => tape.relu(cos),
                };
                (feature, Some(cos_loss))
            }
        };

        let w = tape.param(store, head_id);
        let logits = tape.matmul_tb(feature, w);
        let log_probs = tape.log_softmax_rows(logits);
        let picked = tape.pick_col(log_probs, pair.label.index());
        let ce = tape.scale(picked, -1.0);
        let probs = tape.softmax_rows(logits);
        Ok(InstanceLossNodes {
            ce,
            cos_loss,
            probs,
        })
    }

    /// Batch objective: arithmetic mean of per-instance losses, consistency
    /// term scaled by `cos_weight` (1.0 reproduces the unweighted sum).
    pub fn batch_loss_nodes(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        pairs: &[StancePair],
        cos_weight: f64,
        pass: &mut Pass,
    ) -> Result<BatchLossNodes> {
        if pairs.is_empty() {
            return Err(Error::Contract("empty training batch".into()));
        }
        let mut ces = Vec::with_capacity(pairs.len());
        let mut coses = Vec::with_capacity(pairs.len());
        for pair in pairs {
            let nodes = self.instance_loss_nodes(tape, store, pair, pass)?;
            ces.push(nodes.ce);
            if let Some(c) = nodes.cos_loss {
                coses.push(c);
            }
        }
        let ce_mean = tape.mean_scalars(&ces);
        match self.variant {
            Variant::Base => Ok(BatchLossNodes {
                joint: ce_mean,
                ce_mean,
                cos_mean: None,
            }),
            Variant::Cons => {
                let cos_mean = tape.mean_scalars(&coses);
                let weighted = tape.scale(cos_mean, cos_weight);
                let joint = tape.add(ce_mean, weighted);
                Ok(BatchLossNodes {
                    joint,
                    ce_mean,
                    cos_mean: Some(cos_mean),
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::{EncoderSpec, Vocabulary, WordLevelVocab};
    use approx::assert_abs_diff_eq;
    use ndarray::Array2;

    fn toy_encoder() -> Encoder {
        let vocab = Vocabulary::WordLevel(WordLevelVocab::build([
            "cats make the best pets",
            "i agree they are wonderful companions",
            "i disagree dogs are better",
        ]));
        Encoder::new(EncoderSpec::toy(), vocab).unwrap()
    }

    fn sample_pair(label: StanceLabel) -> StancePair {
        StancePair::new(
            "t-1",
            "cats make the best pets",
            "i agree they are wonderful companions",
            label,
            crate::data::Split::Train,
        )
        .unwrap()
    }

    #[test]
    fn head_dimensions_follow_variant() {
        let base = StancyModel::new(Variant::Base, toy_encoder());
        let cons = StancyModel::new(Variant::Cons, toy_encoder());
        assert_eq!(base.head().input_dim, 32);
        assert_eq!(cons.head().input_dim, 33);
        assert_eq!(base.head().classes, 2);
    }

    #[test]
    fn zero_head_weights_give_uniform_probabilities() {
        for variant in [Variant::Base, Variant::Cons] {
            let model = StancyModel::new(variant, toy_encoder());
            let mut store = ParamStore::new();
            model.encoder.init_params(&mut store, 4);
            let head = model.head();
            store.def(HEAD_WEIGHT, Array2::zeros((head.classes, head.input_dim)));
            let p = model.predict(&store, "cats make the best pets", "i agree").unwrap();
            assert_eq!(p.probs, vec![0.5, 0.5]);
            // Exact tie resolves toward SUPPORT.
            assert_eq!(p.label, StanceLabel::Support);
            assert_eq!(p.cosine.is_some(), variant == Variant::Cons);
        }
    }

    #[test]
    fn probabilities_are_normalized_and_positive() {
        let model = StancyModel::new(Variant::Cons, toy_encoder());
        let mut store = ParamStore::new();
        model.init_params(&mut store, 9);
        let p = model
            .predict(&store, "cats make the best pets", "i disagree dogs are better")
            .unwrap();
        let sum: f64 = p.probs.iter().sum();
        assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-6);
        assert!(p.probs.iter().all(|&x| x > 0.0 && x < 1.0));
        let c = p.cosine.unwrap();
        assert!((-1.0..=1.0).contains(&c));
    }

    /// Oracle check: recompute the BASE forward by hand from the encoder
    /// output, with explicit loops instead of the model's code path.
    #[test]
    fn base_probabilities_match_straight_line_recomputation() {
        let model = StancyModel::new(Variant::Base, toy_encoder());
        let mut store = ParamStore::new();
        model.init_params(&mut store, 13);
        let claim = "cats make the best pets";
        let persp = "i agree they are wonderful companions";

        let got = model.forward_base(&store, claim, persp).unwrap();

        let seq = pack_pair(claim, persp, &model.encoder.vocab, 64).unwrap();
        let x = model.encoder.encode(&store, &seq).unwrap();
        let w = store.value(store.id(HEAD_WEIGHT).unwrap()).clone();
        let mut logits = [0.0_f64; 2];
        for k in 0..2 {
            for (d, &xv) in x.as_slice().iter().enumerate() {
                logits[k] += w[[k, d]] * xv;
            }
        }
        let z = logits[0].exp() + logits[1].exp();
        let expected = [logits[0].exp() / z, logits[1].exp() / z];
        assert_abs_diff_eq!(got.probs[0], expected[0], epsilon = 1e-12);
        assert_abs_diff_eq!(got.probs[1], expected[1], epsilon = 1e-12);
    }

    /// Same oracle for CONS, with the cosine computed from the raw formula.
    #[test]
    fn cons_probabilities_match_straight_line_recomputation() {
        let model = StancyModel::new(Variant::Cons, toy_encoder());
        let mut store = ParamStore::new();
        model.init_params(&mut store, 17);
        let claim = "cats make the best pets";
        let persp = "i disagree dogs are better";

        let got = model.forward_cons(&store, claim, persp).unwrap();

        let pair_seq = pack_pair(claim, persp, &model.encoder.vocab, 64).unwrap();
        let claim_seq = pack_claim_only(claim, &model.encoder.vocab, 64).unwrap();
        let xpc = model.encoder.encode(&store, &pair_seq).unwrap();
        let xc = model.encoder.encode(&store, &claim_seq).unwrap();
        let dot: f64 = xc.as_slice().iter().zip(xpc.as_slice()).map(|(a, b)| a * b).sum();
        let na: f64 = xc.as_slice().iter().map(|v| v * v).sum::<f64>().sqrt();
        let nb: f64 = xpc.as_slice().iter().map(|v| v * v).sum::<f64>().sqrt();
        let cos = dot / (na * nb);
        assert_abs_diff_eq!(got.cosine.unwrap(), cos, epsilon = 1e-12);

        let mut feature = xpc.as_slice().to_vec();
        feature.push(cos);
        let w = store.value(store.id(HEAD_WEIGHT).unwrap()).clone();
        let mut logits = [0.0_f64; 2];
        for k in 0..2 {
            for (d, &fv) in feature.iter().enumerate() {
                logits[k] += w[[k, d]] * fv;
            }
        }
        let z = logits[0].exp() + logits[1].exp();
        assert_abs_diff_eq!(got.probs[0], logits[0].exp() / z, epsilon = 1e-12);
    }

    #[test]
    fn variant_mismatch_is_a_contract_error() {
        let base = StancyModel::new(Variant::Base, toy_encoder());
        let mut store = ParamStore::new();
        base.init_params(&mut store, 1);
        assert!(matches!(
            base.forward_cons(&store, "a claim", "a view"),
            Err(Error::Contract(_))
        ));
        let cons = StancyModel::new(Variant::Cons, toy_encoder());
        let mut store = ParamStore::new();
        cons.init_params(&mut store, 1);
        assert!(matches!(
            cons.forward_base(&store, "a claim", "a view"),
            Err(Error::Contract(_))
        ));
    }

    /// With the cosine head column zeroed, CONS probabilities reduce to
    /// BASE probabilities under identical encoder parameters.
    #[test]
    fn cons_with_zeroed_cosine_column_matches_base() {
        let base = StancyModel::new(Variant::Base, toy_encoder());
        let mut base_store = ParamStore::new();
        base.init_params(&mut base_store, 23);

        let cons = StancyModel::new(Variant::Cons, toy_encoder());
        let mut cons_store = ParamStore::new();
        for (_, name, value) in base_store.iter() {
            if name == HEAD_WEIGHT {
                let mut extended = Array2::zeros((2, 33));
                extended.slice_mut(ndarray::s![.., ..32]).assign(value);
                cons_store.def(HEAD_WEIGHT, extended);
            } else {
                cons_store.def(name, value.clone());
            }
        }

        let claim = "cats make the best pets";
        let persp = "i agree they are wonderful companions";
        let pb = base.forward_base(&base_store, claim, persp).unwrap();
        let pc = cons.forward_cons(&cons_store, claim, persp).unwrap();
        assert_abs_diff_eq!(pb.probs[0], pc.probs[0], epsilon = 1e-6);
        assert_abs_diff_eq!(pb.probs[1], pc.probs[1], epsilon = 1e-6);
    }

    /// The tape batch objective equals mean(ce) + mean(cos) computed
    /// instance by instance with the plain loss functions.
    #[test]
    fn batch_loss_equals_mean_of_instance_losses() {
        let model = StancyModel::new(Variant::Cons, toy_encoder());
        let mut store = ParamStore::new();
        model.init_params(&mut store, 31);
        let pairs = vec![
            StancePair::new("b-1", "cats make the best pets", "i agree they are wonderful", StanceLabel::Support, crate::data::Split::Train).unwrap(),
            StancePair::new("b-2", "cats make the best pets", "i disagree dogs are better", StanceLabel::Oppose, crate::data::Split::Train).unwrap(),
            StancePair::new("b-3", "dogs are better", "i agree companions are wonderful", StanceLabel::Support, crate::data::Split::Train).unwrap(),
            StancePair::new("b-4", "dogs are better", "i disagree cats are the best", StanceLabel::Oppose, crate::data::Split::Train).unwrap(),
        ];

        let mut tape = Tape::new();
        let batch = model
            .batch_loss_nodes(&mut tape, &store, &pairs, 1.0, &mut Pass::Inference)
            .unwrap();
        let got_joint = tape.scalar(batch.joint);
        let got_ce = tape.scalar(batch.ce_mean);
        let got_cos = tape.scalar(batch.cos_mean.unwrap());

        let mut ce_sum = 0.0;
        let mut cos_sum = 0.0;
        for p in &pairs {
            let pred = model.predict_pair(&store, p).unwrap();
            ce_sum += cross_entropy_loss(&pred.probs, p.label).unwrap();
            let max = model.encoder.spec.max_sequence_length;
            let xpc = model.encoder.encode(&store, &pack_pair(&p.claim_text, &p.perspective_text, &model.encoder.vocab, max).unwrap()).unwrap();
            let xc = model.encoder.encode(&store, &pack_claim_only(&p.claim_text, &model.encoder.vocab, max).unwrap()).unwrap();
            cos_sum += cosine_embedding_loss(xc.as_slice(), xpc.as_slice(), p.label.to_sim_target()).unwrap();
        }
        let n = pairs.len() as f64;
        assert_abs_diff_eq!(got_ce, ce_sum / n, epsilon = 1e-9);
        assert_abs_diff_eq!(got_cos, cos_sum / n, epsilon = 1e-9);
        assert_abs_diff_eq!(got_joint, ce_sum / n + cos_sum / n, epsilon = 1e-9);
    }

    /// Head gradients of the joint CONS objective against finite
    /// differences (the exhaustive version runs in the acceptance suite).
    #[test]
    fn joint_loss_head_gradients_check_out()  {
        use crate::nn::{central_difference, relative_error};
        let model = StancyModel::new(Variant::Cons, toy_encoder());
        let mut store = ParamStore::new();
        model.init_params(&mut store, 37);
        let pair = sample_pair(StanceLabel::Oppose);

        let loss = |store: &ParamStore| -> f64 {
            let mut tape = Tape::new();
            let batch = model
                .batch_loss_nodes(&mut tape, store, std::slice::from_ref(&pair), 1.0, &mut Pass::Inference)
                .unwrap();
            tape.scalar(batch.joint)
        };

        store.zero_grads();
        let mut tape = Tape::new();
        let batch = model
            .batch_loss_nodes(&mut tape, &store, std::slice::from_ref(&pair), 1.0, &mut Pass::Inference)
            .unwrap();
        tape.backward(batch.joint, &mut store);

        let head = store.id(HEAD_WEIGHT).unwrap();
        for r in 0..2 {
            for c in 0..33 {
                let analytic = store.grad(head)[[r, c]];
                let numeric = central_difference(&mut store, head, r, c, 1e-4, loss);
                let rel = relative_error(analytic, numeric);
                assert!(rel < 1e-3, "head [{r},{c}]: {analytic} vs {numeric} (rel {rel})");
            }
        }
    }

    #[test]
    fn detached_cosine_feature_still_reports_cosine_loss() {
        let mut model = StancyModel::new(Variant::Cons, toy_encoder());
        model.detach_cosine_feature = true;
        let mut store = ParamStore::new();
        model.init_params(&mut store, 41);
        let pair = sample_pair(StanceLabel::Support);
        let mut tape = Tape::new();
        let nodes = model
            .instance_loss_nodes(&mut tape, &store, &pair, &mut Pass::Inference)
            .unwrap();
        assert!(tape.scalar(nodes.cos_loss.unwrap()) >= 0.0);
        // Detaching must not change forward values, only gradient flow.
        let mut attached = StancyModel::new(Variant::Cons, toy_encoder());
        attached.detach_cosine_feature = false;
        let mut tape2 = Tape::new();
        let nodes2 = attached
            .instance_loss_nodes(&mut tape2, &store, &pair, &mut Pass::Inference)
            .unwrap();
        assert_eq!(tape.value(nodes.probs), tape2.value(nodes2.probs));
    }
}
