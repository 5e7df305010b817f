//! The three scalar losses, as plain straight-line functions. Training
//! rebuilds the same math on the autodiff tape; these definitions are the
//! reference the tape path is tested against.

use crate::data::StanceLabel;
use crate::error::{Error, Result};

/// Denominator floor guarding cosine against degenerate vectors.
pub const COSINE_NORM_FLOOR: f64 = 1e-8;

/// Probability floor for cross-entropy on a zero probability.
pub const CE_EPSILON: f64 = 1e-12;

/// Cosine similarity, clamped to `[-1, 1]`. Zero-norm inputs are a
/// degeneracy error; near-zero norms are floored at [`COSINE_NORM_FLOOR`].
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Contract(format!(
            "cosine of vectors with lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::Contract("cosine of empty vectors".into()));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::Degenerate(
            "cosine similarity of a zero-norm vector".into(),
        ));
    }
    let cos = dot / (na.max(COSINE_NORM_FLOOR) * nb.max(COSINE_NORM_FLOOR));
    Ok(cos.clamp(-1.0, 1.0))
}

/// Piecewise consistency loss: similar pairs (`y_sim = +1`) are pulled
/// toward cosine 1, dissimilar pairs (`y_sim = -1`) are pushed to
/// non-positive cosine.
pub fn cosine_embedding_loss(xc: &[f64], xpc: &[f64], y_sim: i8) -> Result<f64> {
    let cos = cosine_similarity(xc, xpc)?;
    match y_sim {
        1 => Ok(1.0 - cos),
        -1 => Ok(cos.max(0.0)),
        other => Err(Error::Contract(format!(
            "similarity target must be +1 or -1, got {other}"
        ))),
    }
}

/// Negative log-probability of the gold class. The input must already be a
/// distribution; a zero gold probability is floored at [`CE_EPSILON`] and
/// logged rather than returning infinity.
pub fn cross_entropy_loss(probs: &[f64], gold: StanceLabel) -> Result<f64> {
    validate_distribution(probs)?;
    let p = probs[gold.index()];
    if p == 0.0 {
        log::warn!("gold class probability is exactly zero; clamping to {CE_EPSILON}");
    }
    Ok(-p.max(CE_EPSILON).ln())
}

fn validate_distribution(probs: &[f64]) -> Result<()> {
    if probs.len() != 2 {
        return Err(Error::Contract(format!(
            "expected a 2-class distribution, got {} entries",
            probs.len()
        )));
    }
    if probs.iter().any(|&p| !(0.0..=1.0).contains(&p) || p.is_nan()) {
        return Err(Error::Contract(format!(
            "probabilities outside [0, 1]: {probs:?}"
        )));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(Error::Contract(format!(
            "probabilities sum to {sum}, not 1"
        )));
    }
    Ok(())
}

/// Unweighted sum of the classification and consistency losses.
pub fn joint_loss(ce: f64, cos: f64) -> Result<f64> {
    if ce < 0.0 || cos < 0.0 {
        return Err(Error::Contract(format!(
            "loss terms must be non-negative, got ce={ce}, cos={cos}"
        )));
    }
    Ok(ce + cos)
}
