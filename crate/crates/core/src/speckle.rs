//! Multiplicative speckle synthesis: `I_s = I · S` with `E[S] = 1`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma};

use crate::error::{Error, Result};
use crate::image::Image;

/// Distribution family of the unit-mean speckle field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpeckleKind {
    /// Single-look amplitude: Rayleigh with scale `sqrt(2/pi)`.
    Amplitude,
    /// Single-look intensity: exponential with rate 1.
    Intensity,
    /// L-look intensity: gamma with shape L and scale 1/L.
    Multilook,
}

impl FromStr for SpeckleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "amplitude" => Ok(SpeckleKind::Amplitude),
            "intensity" => Ok(SpeckleKind::Intensity),
            "multilook" => Ok(SpeckleKind::Multilook),
            other => Err(Error::param("model", format!("unknown speckle model `{other}`"))),
        }
    }
}

impl fmt::Display for SpeckleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SpeckleKind::Amplitude => "amplitude",
            SpeckleKind::Intensity => "intensity",
            SpeckleKind::Multilook => "multilook",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpeckleModel {
    pub kind: SpeckleKind,
    /// Number of looks; only meaningful for [`SpeckleKind::Multilook`].
    pub looks: u32,
    pub seed: u64,
}

impl SpeckleModel {
    pub fn amplitude(seed: u64) -> Self {
        Self { kind: SpeckleKind::Amplitude, looks: 1, seed }
    }

    pub fn intensity(seed: u64) -> Self {
        Self { kind: SpeckleKind::Intensity, looks: 1, seed }
    }

    pub fn multilook(looks: u32, seed: u64) -> Self {
        Self { kind: SpeckleKind::Multilook, looks, seed }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    /// Variance of `S`; the mean is always 1.
    pub fn theoretical_variance(&self) -> f64 {
        match self.kind {
            SpeckleKind::Amplitude => (4.0 - std::f64::consts::PI) / std::f64::consts::PI,
            SpeckleKind::Intensity => 1.0,
            SpeckleKind::Multilook => 1.0 / self.looks as f64,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.kind == SpeckleKind::Multilook && self.looks < 1 {
            return Err(Error::param("looks", "must be at least 1"));
        }
        Ok(())
    }
}

/// Derives an independent child seed (splitmix64 finalizer over `seed + stream`).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed.wrapping_add(stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Draws an i.i.d. unit-mean speckle field, deterministic in `(rows, cols, model)`.
pub fn draw_speckle_field(rows: usize, cols: usize, model: &SpeckleModel) -> Result<Image> {
    model.validate()?;
    if rows == 0 || cols == 0 {
        return Err(Error::Size(format!("{rows}x{cols} speckle field")));
    }
    let n = rows * cols;
    let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
    let data: Vec<f64> = match model.kind {
        SpeckleKind::Amplitude => {
            let sigma = (2.0 / std::f64::consts::PI).sqrt();
            (0..n)
                .map(|_| {
                    // 1 - U lies in (0, 1], keeping ln finite.
                    let u: f64 = rng.random();
                    sigma * (-2.0 * (1.0 - u).ln()).sqrt()
                })
                .collect()
        }
        SpeckleKind::Intensity => (0..n).map(|_| Exp1.sample(&mut rng)).collect(),
        SpeckleKind::Multilook => {
            let looks = model.looks as f64;
            let gamma = Gamma::new(looks, 1.0 / looks)
                .map_err(|e| Error::param("looks", e.to_string()))?;
            (0..n).map(|_| gamma.sample(&mut rng)).collect()
        }
    };
    Ok(Image::from_raw(rows, cols, data))
}

/// `I · S` elementwise.
pub fn apply_speckle(img: &Image, model: &SpeckleModel) -> Result<Image> {
    let field = draw_speckle_field(img.rows(), img.cols(), model)?;
    img.zip_map(&field, |i, s| i * s)
}

/// Additive form of the same corruption: `N = I · (S - 1)`.
pub fn additive_noise(img: &Image, model: &SpeckleModel) -> Result<Image> {
    let field = draw_speckle_field(img.rows(), img.cols(), model)?;
    img.zip_map(&field, |i, s| i * (s - 1.0))
}

/// Returns `I + β·N` with `β` chosen so the energy SNR equals `target_snr_db`.
///
/// An infinite target yields `β = 0`.
pub fn apply_speckle_snr(img: &Image, model: &SpeckleModel, target_snr_db: f64) -> Result<Image> {
    if target_snr_db.is_nan() || target_snr_db == f64::NEG_INFINITY {
        return Err(Error::param("snr-db", format!("{target_snr_db} is not a usable target")));
    }
    let noise = additive_noise(img, model)?;
    let signal_energy: f64 = img.pixels().iter().map(|v| v * v).sum();
    let noise_energy: f64 = noise.pixels().iter().map(|v| v * v).sum();
    if noise_energy == 0.0 || signal_energy == 0.0 {
        return Err(Error::Degenerate(
            "speckle contributes no noise energy (image identically zero?)".into(),
        ));
    }
    let beta = (signal_energy / (noise_energy * 10f64.powf(target_snr_db / 10.0))).sqrt();
    img.zip_map(&noise, |i, n| i + beta * n)
}

/// Energy SNR of `noisy` relative to `clean`, in dB. Infinite when identical.
pub fn measured_snr_db(clean: &Image, noisy: &Image) -> Result<f64> {
    clean.ensure_same_dims(noisy)?;
    let signal: f64 = clean.pixels().iter().map(|v| v * v).sum();
    let noise: f64 = clean
        .pixels()
        .iter()
        .zip(noisy.pixels())
        .map(|(a, b)| (b - a) * (b - a))
        .sum();
    Ok(10.0 * (signal / noise).log10())
}
