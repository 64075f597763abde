//! Wavelet-domain span-projection despeckling and the classical baselines it
//! is benchmarked against.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::image::{Image, Subbands};
use crate::projection::{span_cascade, MatrixSequence};
use crate::wavelet::{dwt2, idwt2, WaveletBasis};

/// Replaces each detail band by its projection onto the span of the
/// normalized bands before it, then reconstructs with the original LL.
///
/// The approximation band goes through untouched, so the image mean is
/// preserved exactly up to rounding.
pub fn posashrink(img: &Image, basis: WaveletBasis) -> Result<Image> {
    let bands = dwt2(img, basis)?;
    let Subbands { ll, lh, hl, hh } = bands;
    let seq = MatrixSequence::new(vec![ll, lh, hl, hh])?;
    let projected = span_cascade(&seq)?.into_vec();
    let ll = seq.into_vec().swap_remove(0);
    let [lh_d, hl_d, hh_d]: [Image; 3] = projected
        .try_into()
        .expect("cascade over four bands yields three projections");
    idwt2(&Subbands::new(ll, lh_d, hl_d, hh_d)?, basis)
}

fn check_kernel(kernel: usize) -> Result<()> {
    if kernel < 3 || kernel.is_multiple_of(2) {
        return Err(Error::param("kernel", format!("{kernel} must be odd and at least 3")));
    }
    Ok(())
}

/// Applies `f(window, center)` to every pixel using an edge-replicated
/// `kernel x kernel` neighborhood. `window` is row-major.
fn map_windows(img: &Image, kernel: usize, mut f: impl FnMut(&[f64], f64) -> f64) -> Image {
    let half = (kernel / 2) as isize;
    let mut window = Vec::with_capacity(kernel * kernel);
    Image::from_fn(img.rows(), img.cols(), |r, c| {
        window.clear();
        for dr in -half..=half {
            for dc in -half..=half {
                window.push(img.get_clamped(r as isize + dr, c as isize + dc));
            }
        }
        f(&window, img.get(r, c))
    })
}

struct WindowStats {
    mean: f64,
    var: f64,
    /// Squared coefficient of variation; `None` when the mean is zero.
    ci2: Option<f64>,
}

/// Mean and variance around the first sample, so constant windows return
/// their value exactly. `ci2` is computed on max-scaled values so tiny
/// magnitudes do not underflow into 0/0.
fn window_stats(w: &[f64]) -> WindowStats {
    let n = w.len() as f64;
    let pivot = w[0];
    let shift = w.iter().map(|v| v - pivot).sum::<f64>() / n;
    let mean = pivot + shift;
    let var = w.iter().map(|v| (v - pivot - shift).powi(2)).sum::<f64>() / n;
    let scale = w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let ci2 = if scale == 0.0 {
        None
    } else {
        let ms = w.iter().map(|v| v / scale).sum::<f64>() / n;
        let vs = w.iter().map(|v| (v / scale - ms).powi(2)).sum::<f64>() / n;
        (ms != 0.0 && mean != 0.0).then(|| vs / (ms * ms))
    };
    WindowStats { mean, var, ci2 }
}

pub fn median_filter(img: &Image, kernel: usize) -> Result<Image> {
    check_kernel(kernel)?;
    let mut sorted = Vec::with_capacity(kernel * kernel);
    Ok(map_windows(img, kernel, |w, _| {
        sorted.clear();
        sorted.extend_from_slice(w);
        let mid = sorted.len() / 2;
        *sorted.select_nth_unstable_by(mid, f64::total_cmp).1
    }))
}

/// Shared body of the Lee and Kuan filters: `out = μ + W·(x − μ)` where the
/// weight is derived from the squared coefficients of variation.
fn local_statistics_filter(
    img: &Image,
    kernel: usize,
    looks: u64,
    weight: impl Fn(f64, f64) -> f64,
) -> Result<Image> {
    check_kernel(kernel)?;
    if looks < 1 {
        return Err(Error::param("looks", "must be at least 1"));
    }
    let cu2 = 1.0 / looks as f64;
    Ok(map_windows(img, kernel, |w, x| {
        let WindowStats { mean, var, ci2 } = window_stats(w);
        let Some(ci2) = ci2 else {
            return x;
        };
        if var == 0.0 || ci2 == 0.0 {
            return mean;
        }
        let k = weight(cu2, ci2).clamp(0.0, 1.0);
        mean + k * (x - mean)
    }))
}

/// Lee local-statistics filter, `W = 1 − C_u²/C_i²`.
pub fn lee_filter(img: &Image, kernel: usize, looks: u64) -> Result<Image> {
    local_statistics_filter(img, kernel, looks, |cu2, ci2| 1.0 - cu2 / ci2)
}

/// Kuan filter, `W = (1 − C_u²/C_i²) / (1 + C_u²)`.
pub fn kuan_filter(img: &Image, kernel: usize, looks: u64) -> Result<Image> {
    local_statistics_filter(img, kernel, looks, |cu2, ci2| (1.0 - cu2 / ci2) / (1.0 + cu2))
}

/// Frost filter: weights `exp(−damping · C_i² · d)` with `d` the Euclidean
/// distance to the window center.
pub fn frost_filter(img: &Image, kernel: usize, damping: f64) -> Result<Image> {
    check_kernel(kernel)?;
    if !(damping > 0.0 && damping.is_finite()) {
        return Err(Error::param("damping", format!("{damping} must be positive")));
    }
    let half = (kernel / 2) as isize;
    let dist: Vec<f64> = (-half..=half)
        .flat_map(|dr| (-half..=half).map(move |dc| ((dr * dr + dc * dc) as f64).sqrt()))
        .collect();
    Ok(map_windows(img, kernel, |w, _| {
        let ci2 = window_stats(w).ci2.unwrap_or(0.0);
        // Weighted mean of deviations from the first sample; exact on constants.
        let pivot = w[0];
        let (mut num, mut den) = (0.0, 0.0);
        for (&v, &d) in w.iter().zip(&dist) {
            let m = (-damping * ci2 * d).exp();
            num += m * (v - pivot);
            den += m;
        }
        pivot + num / den
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ThresholdRule {
    Hard,
    Soft,
    /// Firm shrinkage between `T` and `2T`.
    SemiSoft,
}

impl ThresholdRule {
    pub fn apply(self, w: f64, t: f64) -> f64 {
        let a = w.abs();
        match self {
            ThresholdRule::Hard => {
                if a <= t {
                    0.0
                } else {
                    w
                }
            }
            ThresholdRule::Soft => w.signum() * (a - t).max(0.0),
            ThresholdRule::SemiSoft => {
                let t2 = 2.0 * t;
                if a <= t {
                    0.0
                } else if a <= t2 {
                    w.signum() * t2 * (a - t) / (t2 - t)
                } else {
                    w
                }
            }
        }
    }
}

/// Universal threshold `σ̂·sqrt(2 ln M)` with `σ̂ = median(|HH|)/0.6745` and
/// `M` the number of detail coefficients.
pub fn universal_threshold(bands: &Subbands) -> f64 {
    let mut mags: Vec<f64> = bands.hh.pixels().iter().map(|v| v.abs()).collect();
    mags.sort_by(f64::total_cmp);
    let n = mags.len();
    let median = if n % 2 == 1 {
        mags[n / 2]
    } else {
        0.5 * (mags[n / 2 - 1] + mags[n / 2])
    };
    let sigma = median / 0.6745;
    let m = (3 * bands.hh.len()) as f64;
    sigma * (2.0 * m.ln()).sqrt()
}

/// VisuShrink: threshold all detail bands, keep LL.
pub fn wavelet_threshold(img: &Image, rule: ThresholdRule, basis: WaveletBasis) -> Result<Image> {
    let bands = dwt2(img, basis)?;
    let t = universal_threshold(&bands);
    let shrink = |b: &Image| b.map(|w| rule.apply(w, t));
    let out = Subbands::new(bands.ll.clone(), shrink(&bands.lh), shrink(&bands.hl), shrink(&bands.hh))?;
    idwt2(&out, basis)
}

/// `exp(F(ln(img + 1))) − 1`, clamped at zero.
pub fn homomorphic(img: &Image, filter: impl FnOnce(&Image) -> Result<Image>) -> Result<Image> {
    if let Some(i) = img.pixels().iter().position(|&v| v < 0.0) {
        return Err(Error::Domain(format!(
            "homomorphic filtering needs non-negative pixels; ({}, {}) is {}",
            i / img.cols(),
            i % img.cols(),
            img.pixels()[i]
        )));
    }
    let logged = img.map(f64::ln_1p);
    let filtered = filter(&logged)?;
    let out: Vec<f64> = filtered.pixels().iter().map(|&v| v.exp_m1().max(0.0)).collect();
    Image::new(img.rows(), img.cols(), out)
}

/// Runs `spec`'s spatial filter inside the log domain, ignoring its
/// `homomorphic` flag.
pub fn homomorphic_wrap(spec: &FilterSpec, img: &Image) -> Result<Image> {
    homomorphic(img, |x| spec.apply_direct(x))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FilterKind {
    PosaShrink,
    Median,
    Lee,
    Kuan,
    Frost,
    VisuHard,
    VisuSoft,
    VisuSemiSoft,
}

impl FilterKind {
    pub const ALL: [FilterKind; 8] = [
        FilterKind::Median,
        FilterKind::Lee,
        FilterKind::Kuan,
        FilterKind::Frost,
        FilterKind::VisuHard,
        FilterKind::VisuSoft,
        FilterKind::VisuSemiSoft,
        FilterKind::PosaShrink,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FilterKind::PosaShrink => "posashrink",
            FilterKind::Median => "median",
            FilterKind::Lee => "lee",
            FilterKind::Kuan => "kuan",
            FilterKind::Frost => "frost",
            FilterKind::VisuHard => "visu_hard",
            FilterKind::VisuSoft => "visu_soft",
            FilterKind::VisuSemiSoft => "visu_semisoft",
        }
    }

    /// Spatial-domain filters driven by a kernel window.
    pub fn is_local(self) -> bool {
        matches!(self, FilterKind::Median | FilterKind::Lee | FilterKind::Kuan | FilterKind::Frost)
    }

    pub fn is_wavelet(self) -> bool {
        !self.is_local()
    }
}

impl fmt::Display for FilterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FilterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let kind = match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "posa" | "posashrink" => FilterKind::PosaShrink,
            "median" => FilterKind::Median,
            "lee" => FilterKind::Lee,
            "kuan" => FilterKind::Kuan,
            "frost" => FilterKind::Frost,
            "visu_hard" => FilterKind::VisuHard,
            "visu_soft" => FilterKind::VisuSoft,
            "visu_semisoft" => FilterKind::VisuSemiSoft,
            other => return Err(Error::param("filter", format!("unknown filter `{other}`"))),
        };
        Ok(kind)
    }
}

/// A fully parameterized despeckling filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterSpec {
    pub kind: FilterKind,
    pub kernel: usize,
    pub basis: WaveletBasis,
    pub looks: u64,
    pub damping: f64,
    /// Only honored for local filters.
    pub homomorphic: bool,
}

impl FilterSpec {
    /// Benchmark defaults: 3x3 window, 4 looks, damping 1, db1, homomorphic.
    pub fn new(kind: FilterKind) -> Self {
        Self {
            kind,
            kernel: 3,
            basis: WaveletBasis::Db1,
            looks: 4,
            damping: 1.0,
            homomorphic: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind.is_local() {
            check_kernel(self.kernel)?;
        }
        if self.looks < 1 {
            return Err(Error::param("looks", "must be at least 1"));
        }
        if !(self.damping > 0.0 && self.damping.is_finite()) {
            return Err(Error::param("damping", format!("{} must be positive", self.damping)));
        }
        Ok(())
    }

    /// Filters `img`, wrapping local filters homomorphically when requested.
    pub fn apply(&self, img: &Image) -> Result<Image> {
        self.validate()?;
        if self.homomorphic && self.kind.is_local() {
            homomorphic_wrap(self, img)
        } else {
            self.apply_direct(img)
        }
    }

    fn apply_direct(&self, img: &Image) -> Result<Image> {
        match self.kind {
            FilterKind::PosaShrink => posashrink(img, self.basis),
            FilterKind::Median => median_filter(img, self.kernel),
            FilterKind::Lee => lee_filter(img, self.kernel, self.looks),
            FilterKind::Kuan => kuan_filter(img, self.kernel, self.looks),
            FilterKind::Frost => frost_filter(img, self.kernel, self.damping),
            FilterKind::VisuHard => wavelet_threshold(img, ThresholdRule::Hard, self.basis),
            FilterKind::VisuSoft => wavelet_threshold(img, ThresholdRule::Soft, self.basis),
            FilterKind::VisuSemiSoft => wavelet_threshold(img, ThresholdRule::SemiSoft, self.basis),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::image_stats;
    use crate::speckle::{apply_speckle, SpeckleModel};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(rows: usize, cols: usize, seed: u64) -> Image {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Image::from_fn(rows, cols, |_, _| rng.random_range(1.0..255.0))
    }

    fn speckled_constant(n: usize, seed: u64) -> Image {
        apply_speckle(&Image::filled(n, n, 100.0), &SpeckleModel::multilook(4, seed)).unwrap()
    }

    fn max_diff(a: &Image, b: &Image) -> f64 {
        a.pixels().iter().zip(b.pixels()).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }

    /// Explicit clamp-to-edge neighborhood, independent of `map_windows`.
    fn neighborhood(img: &Image, r: usize, c: usize, k: usize) -> Vec<f64> {
        let h = k / 2;
        let mut out = vec![];
        for i in 0..k {
            for j in 0..k {
                let rr = (r + i).saturating_sub(h).min(img.rows() - 1);
                let cc = (c + j).saturating_sub(h).min(img.cols() - 1);
                out.push(img.get(rr, cc));
            }
        }
        out
    }

    #[test]
    fn posashrink_constant_is_identity() {
        let img = Image::filled(16, 16, 42.0);
        for basis in [WaveletBasis::Db1, WaveletBasis::Db4] {
            assert!(max_diff(&posashrink(&img, basis).unwrap(), &img) < 1e-10);
        }
    }

    #[test]
    fn posashrink_preserves_mean() {
        let img = speckled_constant(64, 3);
        let out = posashrink(&img, WaveletBasis::Db1).unwrap();
        assert!(((out.mean() - img.mean()) / img.mean()).abs() < 1e-6);
    }

    #[test]
    fn posashrink_smooths_speckle() {
        let img = speckled_constant(256, 12);
        let out = posashrink(&img, WaveletBasis::Db1).unwrap();
        let nsd_in = image_stats(&img).1.sqrt();
        let nsd_out = image_stats(&out).1.sqrt();
        assert!(nsd_out < 0.8 * nsd_in, "{nsd_out} vs {nsd_in}");
    }

    #[test]
    fn posashrink_rejects_odd() {
        assert!(matches!(posashrink(&Image::zeros(5, 6), WaveletBasis::Db1), Err(Error::Dimension(_))));
    }

    #[test]
    fn median_cases() {
        let c = Image::filled(7, 7, 3.0);
        assert_eq!(median_filter(&c, 5).unwrap(), c);
        let mut px = vec![0.0; 81];
        px[40] = 255.0;
        let imp = Image::new(9, 9, px).unwrap();
        assert_eq!(median_filter(&imp, 3).unwrap().max_abs(), 0.0);
        assert!(median_filter(&imp, 4).is_err());
    }

    #[test]
    fn median_matches_sort_oracle() {
        let img = random_image(13, 11, 2);
        for k in [3, 5, 7] {
            let out = median_filter(&img, k).unwrap();
            for r in 0..img.rows() {
                for c in 0..img.cols() {
                    let mut w = neighborhood(&img, r, c, k);
                    w.sort_by(|a, b| a.partial_cmp(b).unwrap());
                    assert_eq!(out.get(r, c), w[w.len() / 2]);
                }
            }
        }
    }

    #[test]
    fn lee_cases() {
        let c = Image::filled(8, 8, 9.0);
        assert_eq!(lee_filter(&c, 3, 4).unwrap(), c);
        let img = random_image(16, 16, 4);
        assert!(max_diff(&lee_filter(&img, 5, u64::MAX).unwrap(), &img) < 1e-9);
        let noisy = speckled_constant(64, 4);
        let out = lee_filter(&noisy, 5, 4).unwrap();
        assert!(image_stats(&out).1 < image_stats(&noisy).1);
        assert!(lee_filter(&img, 6, 4).is_err());
    }

    #[test]
    fn kuan_flat_region_takes_local_mean() {
        let c = Image::filled(8, 8, 9.0);
        assert_eq!(kuan_filter(&c, 3, 4).unwrap(), c);
        // Mild texture: C_i well below C_u = 1 for a single look.
        let img = Image::from_fn(9, 9, |r, c| 100.0 + ((r + c) % 2) as f64);
        let out = kuan_filter(&img, 3, 1).unwrap();
        for r in 0..9 {
            for c in 0..9 {
                let w = neighborhood(&img, r, c, 3);
                let mu = w.iter().sum::<f64>() / 9.0;
                assert!((out.get(r, c) - mu).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn kuan_matches_direct_formula() {
        let img = speckled_constant(24, 6);
        let out = kuan_filter(&img, 5, 4).unwrap();
        let cu2 = 0.25;
        for r in 0..24 {
            for c in 0..24 {
                let w = neighborhood(&img, r, c, 5);
                let n = w.len() as f64;
                let mu = w.iter().sum::<f64>() / n;
                let sd2 = w.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / n;
                let ci2 = sd2 / (mu * mu);
                let wgt = ((1.0 - cu2 / ci2) / (1.0 + cu2)).clamp(0.0, 1.0);
                let want = mu + wgt * (img.get(r, c) - mu);
                assert!((out.get(r, c) - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn frost_cases() {
        let c = Image::filled(6, 6, 5.0);
        assert!(max_diff(&frost_filter(&c, 3, 1.0).unwrap(), &c) < 1e-12);
        assert!(frost_filter(&c, 2, 1.0).is_err());
        assert!(frost_filter(&c, 3, 0.0).is_err());
    }

    #[test]
    fn frost_matches_double_loop() {
        let img = random_image(12, 10, 8);
        let out = frost_filter(&img, 3, 1.0).unwrap();
        for r in 0..12 {
            for c in 0..10 {
                let w = neighborhood(&img, r, c, 3);
                let mu = w.iter().sum::<f64>() / 9.0;
                let var = w.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / 9.0;
                let ci2 = var / (mu * mu);
                let (mut num, mut den) = (0.0, 0.0);
                for i in 0..3 {
                    for j in 0..3 {
                        let d = (((i as f64) - 1.0).powi(2) + ((j as f64) - 1.0).powi(2)).sqrt();
                        let m = (-ci2 * d).exp();
                        num += m * w[i * 3 + j];
                        den += m;
                    }
                }
                assert!((out.get(r, c) - num / den).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn frost_zero_variation_means_uniform_weights() {
        // Window mean is zero, so C_i is taken as 0 and the output is the mean.
        let img = Image::from_rows(&[[1.0, -1.0, 0.0], [0.0, 0.0, 0.0], [0.0, 2.0, -2.0]]);
        let out = frost_filter(&img, 3, 5.0).unwrap();
        assert!(out.get(1, 1).abs() < 1e-15);
    }

    #[test]
    fn thresholding_cases() {
        let c = Image::filled(8, 8, 12.0);
        for rule in [ThresholdRule::Hard, ThresholdRule::Soft, ThresholdRule::SemiSoft] {
            assert!(max_diff(&wavelet_threshold(&c, rule, WaveletBasis::Db1).unwrap(), &c) < 1e-12);
        }
        assert!(wavelet_threshold(&Image::zeros(7, 8), ThresholdRule::Hard, WaveletBasis::Db1).is_err());
    }

    #[test]
    fn soft_full_shrink_leaves_ll_only() {
        // Equal-magnitude details put the HH median at the common magnitude,
        // and T = median/0.6745 * sqrt(2 ln M) exceeds it.
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let mut detail = || Image::from_fn(8, 8, |_, _| if rng.random::<bool>() { 3.0 } else { -3.0 });
        let ll = random_image(8, 8, 20);
        let bands = Subbands::new(ll.clone(), detail(), detail(), detail()).unwrap();
        let img = idwt2(&bands, WaveletBasis::Db1).unwrap();
        let out = wavelet_threshold(&img, ThresholdRule::Soft, WaveletBasis::Db1).unwrap();
        let z = Image::zeros(8, 8);
        let want = idwt2(&Subbands::new(ll, z.clone(), z.clone(), z).unwrap(), WaveletBasis::Db1).unwrap();
        assert!(max_diff(&out, &want) < 1e-10);
    }

    #[test]
    fn hard_keeps_and_soft_shrinks_coefficients() {
        let img = speckled_constant(32, 9);
        let basis = WaveletBasis::Db1;
        let bands = dwt2(&img, basis).unwrap();
        let t = universal_threshold(&bands);
        assert!(t > 0.0);
        let hard = dwt2(&wavelet_threshold(&img, ThresholdRule::Hard, basis).unwrap(), basis).unwrap();
        let soft = dwt2(&wavelet_threshold(&img, ThresholdRule::Soft, basis).unwrap(), basis).unwrap();
        for (orig, (h, s)) in bands.details().iter().zip(hard.details().iter().zip(soft.details())) {
            for i in 0..orig.len() {
                let w = orig.pixels()[i];
                let (hv, sv) = (h.pixels()[i], s.pixels()[i]);
                if w.abs() > t {
                    assert!((hv - w).abs() < 1e-9);
                    assert!((sv - (w - t * w.signum())).abs() < 1e-9);
                } else {
                    assert!(hv.abs() < 1e-9 && sv.abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn semisoft_ramp() {
        let r = ThresholdRule::SemiSoft;
        assert_eq!(r.apply(0.9, 1.0), 0.0);
        assert!((r.apply(1.5, 1.0) - 1.0).abs() < 1e-15);
        assert!((r.apply(-1.5, 1.0) + 1.0).abs() < 1e-15);
        assert_eq!(r.apply(3.0, 1.0), 3.0);
        assert_eq!(r.apply(0.5, 0.0), 0.5);
    }

    #[test]
    fn homomorphic_identity_and_constants() {
        let img = random_image(10, 10, 3);
        let out = homomorphic(&img, |x| Ok(x.clone())).unwrap();
        assert!(max_diff(&out, &img) < 1e-9);
        let c = Image::filled(9, 9, 40.0);
        for kind in [FilterKind::Median, FilterKind::Lee, FilterKind::Kuan, FilterKind::Frost] {
            let out = homomorphic_wrap(&FilterSpec::new(kind), &c).unwrap();
            assert!(max_diff(&out, &c) < 1e-9, "{kind}");
        }
        assert!(matches!(
            homomorphic(&Image::from_rows(&[[1.0, -1.0]]), |x| Ok(x.clone())),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn log_domain_noise_is_scale_free() {
        let var_at = |scale: f64| {
            let clean = Image::filled(200, 200, scale);
            let noisy = apply_speckle(&clean, &SpeckleModel::multilook(4, 31)).unwrap();
            let diff = noisy.zip_map(&clean, |s, i| s.ln_1p() - i.ln_1p()).unwrap();
            image_stats(&diff).1
        };
        let (a, b) = (var_at(100.0), var_at(1000.0));
        assert!(((a - b) / b).abs() < 0.05, "{a} vs {b}");
    }

    #[test]
    fn filter_spec_parsing_and_dispatch() {
        assert_eq!("posa".parse::<FilterKind>().unwrap(), FilterKind::PosaShrink);
        assert_eq!("visu-semisoft".parse::<FilterKind>().unwrap(), FilterKind::VisuSemiSoft);
        assert!("wiener".parse::<FilterKind>().is_err());
        let img = speckled_constant(16, 2);
        let mut spec = FilterSpec::new(FilterKind::Lee);
        spec.homomorphic = false;
        assert_eq!(spec.apply(&img).unwrap(), lee_filter(&img, 3, 4).unwrap());
        spec.kernel = 4;
        assert!(spec.apply(&img).is_err());
    }

    fn adversarial() -> impl Strategy<Value = Image> {
        prop_oneof![
            Just(Image::zeros(8, 8)),
            Just(Image::from_fn(8, 8, |r, c| if r == 3 && c == 4 { 65535.0 } else { 0.0 })),
            Just(Image::from_fn(8, 8, |r, c| if (r + c) % 2 == 0 { 255.0 } else { 0.0 })),
            Just(Image::from_fn(8, 8, |r, c| if (r + c) % 2 == 0 { 1e-300 } else { 0.0 })),
            prop::collection::vec(0.0f64..1e5, 64).prop_map(|v| Image::new(8, 8, v).unwrap()),
        ]
    }

    proptest! {
        #[test]
        fn filters_stay_finite(img in adversarial()) {
            for kind in FilterKind::ALL {
                for homomorphic in [false, true] {
                    let mut spec = FilterSpec::new(kind);
                    spec.homomorphic = homomorphic;
                    let out = spec.apply(&img).unwrap();
                    prop_assert!(out.pixels().iter().all(|v| v.is_finite()), "{} produced non-finite", kind);
                }
            }
        }

        #[test]
        fn local_filters_fix_constants(v in 0.0f64..1e4, k in prop::sample::select(vec![3usize, 5, 7])) {
            let c = Image::filled(9, 9, v);
            prop_assert_eq!(median_filter(&c, k).unwrap(), c.clone());
            prop_assert_eq!(lee_filter(&c, k, 4).unwrap(), c.clone());
            prop_assert_eq!(kuan_filter(&c, k, 4).unwrap(), c.clone());
            prop_assert!(max_diff(&frost_filter(&c, k, 1.0).unwrap(), &c) <= 1e-12 * (1.0 + v));
        }
    }
}
