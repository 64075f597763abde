//! Span-projection superresolution.
//!
//! Four half-resolution observations (or one observation plus three random
//! auxiliary matrices) are fed through the projection cascade to produce the
//! three detail bands of a one-level decomposition; the first observation,
//! scaled by the DC gain of the transform, becomes the approximation band.
//! The inverse DWT then yields an image of twice the observation size.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::image::{Image, Subbands};
use crate::metrics::{psnr, Psnr};
use crate::projection::{frob_norm, normalize, span_cascade, MatrixSequence};
use crate::speckle::{apply_speckle_snr, derive_seed, SpeckleModel};
use crate::wavelet::{idwt2, WaveletBasis};

/// DC gain of a one-level orthonormal 2D DWT (constant `c` maps to `2c` in LL).
const LL_GAIN: f64 = 2.0;

/// One or four equally sized low-resolution observations.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    observations: Vec<Image>,
    /// Set when the observations were synthesized.
    pub seed: Option<u64>,
    pub snr_db: Option<f64>,
}

impl ObservationSet {
    pub fn new(observations: Vec<Image>) -> Result<Self> {
        if !matches!(observations.len(), 1 | 4) {
            return Err(Error::param(
                "obs",
                format!(
                    "expected 1 or 4 observations, got {}",
                    observations.len()
                ),
            ));
        }
        for o in &observations[1..] {
            observations[0].ensure_same_dims(o)?;
        }
        Ok(Self {
            observations,
            seed: None,
            snr_db: None,
        })
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn observations(&self) -> &[Image] {
        &self.observations
    }

    pub fn dims(&self) -> (usize, usize) {
        self.observations[0].dims()
    }
}

/// Three uniform `[0, 1)` matrices standing in for the missing observations.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxiliaryMatrices {
    pub a1: Image,
    pub a2: Image,
    pub a3: Image,
    pub seed: u64,
}

pub fn draw_auxiliary(rows: usize, cols: usize, seed: u64) -> Result<AuxiliaryMatrices> {
    if rows == 0 || cols == 0 {
        return Err(Error::Size(format!("{rows}x{cols} auxiliary matrices")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || Image::from_fn(rows, cols, |_, _| rng.random::<f64>());
    let (a1, a2, a3) = (draw(), draw(), draw());
    Ok(AuxiliaryMatrices { a1, a2, a3, seed })
}

/// Cascade over `[lead, m2, m3, last]` with the last member pre-normalized so
/// every detail band is unit-scale; `lead` becomes `2·lead` in LL.
fn assemble(lead: &Image, m2: &Image, m3: &Image, last: &Image) -> Result<Subbands> {
    if frob_norm(lead) == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let last = normalize(last).unwrap_or_else(|_| Image::zeros(last.rows(), last.cols()));
    let seq = MatrixSequence::new(vec![lead.clone(), m2.clone(), m3.clone(), last])?;
    let [lh, hl, hh]: [Image; 3] = span_cascade(&seq)?
        .into_vec()
        .try_into()
        .expect("cascade over four matrices yields three projections");
    Subbands::new(lead.scale(LL_GAIN), lh, hl, hh)
}

/// Subbands assembled from four observations, before the inverse transform.
pub fn assemble_four(obs: &ObservationSet) -> Result<Subbands> {
    let [o1, o2, o3, o4] = obs.observations() else {
        return Err(Error::param(
            "obs",
            format!("four-observation reconstruction got {}", obs.len()),
        ));
    };
    assemble(o1, o2, o3, o4)
}

/// Subbands assembled from one observation and three auxiliary matrices.
pub fn assemble_one(obs: &Image, aux: &AuxiliaryMatrices) -> Result<Subbands> {
    for a in [&aux.a1, &aux.a2, &aux.a3] {
        obs.ensure_same_dims(a)?;
    }
    assemble(obs, &aux.a1, &aux.a2, &aux.a3)
}

/// Reconstructs a `2R x 2C` image from four `R x C` observations.
pub fn superres_four(obs: &ObservationSet, basis: WaveletBasis) -> Result<Image> {
    idwt2(&assemble_four(obs)?, basis)
}

/// Reconstructs a `2R x 2C` image from one observation plus auxiliaries.
pub fn superres_one(obs: &Image, aux: &AuxiliaryMatrices, basis: WaveletBasis) -> Result<Image> {
    idwt2(&assemble_one(obs, aux)?, basis)
}

/// 2x2 box average with periodic wrap.
fn box_blur(hr: &Image) -> Image {
    let (rows, cols) = hr.dims();
    Image::from_fn(rows, cols, |r, c| {
        let (r1, c1) = ((r + 1) % rows, (c + 1) % cols);
        0.25 * (hr.get(r, c) + hr.get(r, c1) + hr.get(r1, c) + hr.get(r1, c1))
    })
}

/// Offsets of the four sampling phases of a 2x2 sensor array.
pub const PHASES: [(usize, usize); 4] = [(0, 0), (0, 1), (1, 0), (1, 1)];

/// Clean (noise-free) observations: blurred HR image decimated at each phase.
pub fn clean_observations(hr: &Image) -> Result<Vec<Image>> {
    hr.ensure_even()?;
    let blurred = box_blur(hr);
    let (rows, cols) = (hr.rows() / 2, hr.cols() / 2);
    Ok(PHASES
        .iter()
        .map(|&(dr, dc)| Image::from_fn(rows, cols, |r, c| blurred.get(2 * r + dr, 2 * c + dc)))
        .collect())
}

/// Simulates a 2x2 sensor array viewing `hr`, each observation speckled to
/// `snr_db` with its own derived seed.
pub fn synthesize_observations(hr: &Image, model: &SpeckleModel, snr_db: f64) -> Result<ObservationSet> {
    let clean = clean_observations(hr)?;
    let observations = if snr_db == f64::INFINITY {
        clean
    } else {
        clean
            .iter()
            .enumerate()
            .map(|(k, o)| apply_speckle_snr(o, &model.with_seed(derive_seed(model.seed, k as u64)), snr_db))
            .collect::<Result<Vec<_>>>()?
    };
    let mut set = ObservationSet::new(observations)?;
    set.seed = Some(model.seed);
    set.snr_db = Some(snr_db);
    Ok(set)
}

/// Output of [`reconstruct_and_score`].
#[derive(Debug, Clone)]
pub struct SuperresRun {
    pub observations: ObservationSet,
    pub image: Image,
    /// Against the HR input, with its maximum absolute value as peak.
    pub psnr: Psnr,
}

/// Synthesize observations from `hr`, reconstruct, and score against `hr`.
pub fn reconstruct_and_score(
    hr: &Image,
    model: &SpeckleModel,
    snr_db: f64,
    basis: WaveletBasis,
) -> Result<SuperresRun> {
    let observations = synthesize_observations(hr, model, snr_db)?;
    let image = superres_four(&observations, basis)?;
    let psnr = psnr(hr, &image, hr.max_abs())?;
    Ok(SuperresRun {
        observations,
        image,
        psnr,
    })
}
