//! Frobenius inner-product space machinery and the span-projection cascade.
//!
//! Given matrices `M1..Mn`, the cascade normalizes `M1..M(n-1)` to `U1..U(n-1)`
//! and replaces each later member by its projection onto the raw (not
//! mutually orthogonalized) normalized predecessors:
//!
//! ```text
//! P_k = Σ_{j<k} <M'_k, U_j> U_j,   M'_k = U_k for k < n,  M'_n = M_n
//! ```
//!
//! The last member is projected unnormalized.

use crate::error::{Error, Result};
use crate::image::Image;

/// `trace(A Bᵀ)`, i.e. the elementwise product sum.
pub fn frob_inner(a: &Image, b: &Image) -> Result<f64> {
    a.ensure_same_dims(b)?;
    Ok(dot(a.pixels(), b.pixels()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn frob_norm(a: &Image) -> f64 {
    dot(a.pixels(), a.pixels()).sqrt()
}

/// Scales `a` to unit Frobenius norm.
pub fn normalize(a: &Image) -> Result<Image> {
    let n = frob_norm(a);
    if n == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok(a.map(|v| v / n))
}

/// Ordered, non-empty list of equally sized matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSequence(Vec<Image>);

impl MatrixSequence {
    pub fn new(items: Vec<Image>) -> Result<Self> {
        let first = items
            .first()
            .ok_or_else(|| Error::Size("matrix sequence is empty".into()))?;
        for m in &items[1..] {
            first.ensure_same_dims(m)?;
        }
        Ok(Self(items))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Image] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<Image> {
        self.0
    }
}

impl std::ops::Index<usize> for MatrixSequence {
    type Output = Image;

    fn index(&self, i: usize) -> &Image {
        &self.0[i]
    }
}

/// Members whose norm is at most this fraction of the largest norm in the
/// sequence are rounding residue and count as zero.
pub const NEGLIGIBLE_NORM: f64 = 1e-12;

/// Runs the projection cascade over `[M1..Mn]`, returning `[P2..Pn]`.
///
/// A zero-norm member among `M1..M(n-1)` is treated as absent: it adds no
/// direction to the span and its own projection is the zero matrix. "Zero"
/// includes norms below [`NEGLIGIBLE_NORM`] relative to the largest member.
pub fn span_cascade(seq: &MatrixSequence) -> Result<MatrixSequence> {
    let n = seq.len();
    if n < 2 {
        return Err(Error::Size(format!(
            "span cascade needs at least 2 matrices, got {n}"
        )));
    }
    let (rows, cols) = seq[0].dims();
    let norms: Vec<f64> = seq.as_slice().iter().map(frob_norm).collect();
    let floor = NEGLIGIBLE_NORM * norms.iter().fold(0.0f64, |m, &v| m.max(v));
    let units: Vec<Option<Image>> = seq.as_slice()[..n - 1]
        .iter()
        .zip(&norms)
        .map(|(m, &norm)| (norm > floor).then(|| m.map(|v| v / norm)))
        .collect();

    let mut out = Vec::with_capacity(n - 1);
    for k in 1..n {
        let target = if k < n - 1 {
            match &units[k] {
                Some(u) => u,
                None => {
                    out.push(Image::zeros(rows, cols));
                    continue;
                }
            }
        } else {
            &seq[k]
        };
        let mut acc = vec![0.0; rows * cols];
        for u in units[..k].iter().flatten() {
            let coef = dot(target.pixels(), u.pixels());
            for (a, &v) in acc.iter_mut().zip(u.pixels()) {
                *a += coef * v;
            }
        }
        out.push(Image::from_raw(rows, cols, acc));
    }
    Ok(MatrixSequence(out))
}
