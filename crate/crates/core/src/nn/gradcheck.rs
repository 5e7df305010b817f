//! Finite-difference probes for validating analytic gradients.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha20Rng;

use super::params::{ParamId, ParamStore};

/// Central difference `(f(x+h) - f(x-h)) / 2h` for one parameter
/// coordinate. `f` re-runs the forward pass against the perturbed store;
/// the coordinate is restored before returning.
pub fn central_difference<F>(
    store: &mut ParamStore,
    id: ParamId,
    row: usize,
    col: usize,
    h: f64,
    mut f: F,
) -> f64
where
    F: FnMut(&ParamStore) -> f64,
{
    let original = store.value(id)[[row, col]];
    store.value_mut(id)[[row, col]] = original + h;
    let plus = f(store);
    store.value_mut(id)[[row, col]] = original - h;
    let minus = f(store);
    store.value_mut(id)[[row, col]] = original;
    (plus - minus) / (2.0 * h)
}

/// Relative error with an absolute floor, so near-zero gradient pairs are
/// compared on an absolute scale instead of blowing up.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

/// Deterministic sample of `k` distinct parameter coordinates, spread across
/// the whole store. Used to spot-check large models where exhaustive
/// finite differencing is too slow.
pub fn sample_coordinates(
    store: &ParamStore,
    k: usize,
    rng: &mut ChaCha20Rng,
) -> Vec<(ParamId, usize, usize)> {
    let mut all = Vec::new();
    for (id, _, v) in store.iter() {
        let (rows, cols) = v.dim();
        for r in 0..rows {
            for c in 0..cols {
                all.push((id, r, c));
            }
        }
    }
    all.shuffle(rng);
    all.truncate(k);
    all
}
