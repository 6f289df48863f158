//! Interpolation primitives: mixing weight, one-hot encoding, padding, mixing.

use ndarray::{s, Array2};
use rand_distr::{Distribution, Gamma};

use crate::corpus::{BioLabel, Vocab};
use crate::error::{Error, Result};
use crate::rng::Rng;

/// One draw from Beta(alpha, alpha) as X / (X + Y) with X, Y ~ Gamma(alpha, 1).
pub fn sample_lambda(alpha: f64, rng: &mut Rng) -> Result<f64> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")));
    }
    let gamma = Gamma::new(alpha, 1.0).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let x = gamma.sample(rng);
    let y = gamma.sample(rng);
    let total = x + y;
    // both draws underflow only for tiny alpha; the limit is symmetric
    if total <= 0.0 {
        return Ok(0.5);
    }
    Ok((x / total).clamp(0.0, 1.0))
}

/// One row per index with a single 1 at that column.
pub fn one_hot_indices(indices: &[usize], classes: usize) -> Array2<f64> {
    let mut out = Array2::zeros((indices.len(), classes));
    for (r, &c) in indices.iter().enumerate() {
        out[[r, c]] = 1.0;
    }
    out
}

pub fn one_hot(labels: &[BioLabel], vocab: &Vocab) -> Result<Array2<f64>> {
    let indices = labels
        .iter()
        .map(|l| {
            let s = l.to_string();
            vocab.get(&s).ok_or(Error::UnknownLabel(s))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(one_hot_indices(&indices, vocab.len()))
}

/// Extend the shorter matrix with zero rows so both have the larger row count.
pub fn pad_to_longer(a: &Array2<f64>, b: &Array2<f64>) -> Result<(Array2<f64>, Array2<f64>)> {
    if a.ncols() != b.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "cannot pad {} columns against {}",
            a.ncols(),
            b.ncols()
        )));
    }
    let rows = a.nrows().max(b.nrows());
    let pad = |m: &Array2<f64>| {
        if m.nrows() == rows {
            return m.clone();
        }
        let mut out = Array2::zeros((rows, m.ncols()));
        out.slice_mut(s![..m.nrows(), ..]).assign(m);
        out
    };
    Ok((pad(a), pad(b)))
}

/// Rows kept from a padded mix of an `own`-row and a `partner`-row segment.
///
/// Padding rows carry no weight when the side they pad against has weight
/// zero, so they are dropped: `lambda = 1` keeps the original length and
/// `lambda = 0` the partner length. Otherwise the longer length wins.
pub fn mixed_len(own: usize, partner: usize, lambda: f64) -> usize {
    if lambda == 1.0 {
        own
    } else if lambda == 0.0 {
        partner
    } else {
        own.max(partner)
    }
}

/// Pad, mix, and drop rows that carry no weight (see [`mixed_len`]).
pub fn mix_segments(own: &Array2<f64>, partner: &Array2<f64>, lambda: f64) -> Result<Array2<f64>> {
    let (a, b) = pad_to_longer(own, partner)?;
    let mixed = mix(&a, &b, lambda)?;
    let rows = mixed_len(own.nrows(), partner.nrows(), lambda);
    if rows == mixed.nrows() {
        Ok(mixed)
    } else {
        Ok(mixed.slice(s![..rows, ..]).to_owned())
    }
}

/// Elementwise `a * lambda + b * (1 - lambda)`.
pub fn mix(a: &Array2<f64>, b: &Array2<f64>, lambda: f64) -> Result<Array2<f64>> {
    if a.dim() != b.dim() {
        return Err(Error::ShapeMismatch(format!(
            "cannot mix {:?} with {:?}",
            a.dim(),
            b.dim()
        )));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidArgument(format!("lambda {lambda} outside [0, 1]")));
    }
    let mut out = a * lambda;
    out.zip_mut_with(b, |o, &bv| *o += bv * (1.0 - lambda));
    Ok(out)
}
