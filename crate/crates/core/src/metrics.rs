//! Despeckling and edge-preservation assessment.
//!
//! All statistics use the population form (divide by R·C).

use std::fmt;

use crate::error::{Error, Result};
use crate::image::{image_stats, EdgeMap, Image};

/// Default side length of the ENL tiles.
pub const ENL_TILE: usize = 25;

/// Default distance penalty of Pratt's figure of merit.
pub const FOM_ALPHA: f64 = 1.0 / 9.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseStats {
    pub nmv: f64,
    pub nv: f64,
    pub nsd: f64,
}

/// Noise mean value, noise variance and noise standard deviation.
pub fn nmv_nv_nsd(img: &Image) -> NoiseStats {
    let (nmv, nv) = image_stats(img);
    NoiseStats {
        nmv,
        nv,
        nsd: nv.sqrt(),
    }
}

/// Mean square difference between a noisy image and its filtered version.
pub fn msd(noisy: &Image, despeckled: &Image) -> Result<f64> {
    noisy.ensure_same_dims(despeckled)?;
    let sum: f64 = noisy
        .pixels()
        .iter()
        .zip(despeckled.pixels())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sum / noisy.len() as f64)
}

/// Equivalent number of looks averaged over non-overlapping `tile x tile`
/// blocks. Remainder rows/columns are dropped; zero-variance blocks are
/// excluded from the average.
pub fn enl(img: &Image, tile: usize) -> Result<f64> {
    if tile == 0 {
        return Err(Error::param("tile", "must be positive"));
    }
    let (rows, cols) = img.dims();
    if rows < tile || cols < tile {
        return Err(Error::Size(format!(
            "{rows}x{cols} image holds no {tile}x{tile} tile"
        )));
    }
    let n = (tile * tile) as f64;
    let mut total = 0.0;
    let mut used = 0usize;
    for br in 0..rows / tile {
        for bc in 0..cols / tile {
            let block = || {
                (0..tile).flat_map(move |i| {
                    let r = br * tile + i;
                    img.row(r)[bc * tile..(bc + 1) * tile].iter().copied()
                })
            };
            let mean = block().sum::<f64>() / n;
            let var = block().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            if var > 0.0 {
                total += mean * mean / var;
                used += 1;
            }
        }
    }
    if used == 0 {
        return Err(Error::Degenerate("every ENL tile has zero variance".into()));
    }
    Ok(total / used as f64)
}

/// `(1/RC) Σ (I − NMV) / NSD`, evaluated term by term.
///
/// Analytically zero; what remains is floating-point residue.
pub fn deflection_ratio(img: &Image) -> Result<f64> {
    let NoiseStats { nmv, nsd, .. } = nmv_nv_nsd(img);
    if nsd == 0.0 {
        return Err(Error::Degenerate(
            "deflection ratio undefined for zero standard deviation".into(),
        ));
    }
    let sum: f64 = img.pixels().iter().map(|&v| (v - nmv) / nsd).sum();
    Ok(sum / img.len() as f64)
}

/// Pratt's figure of merit of `detected` edges against `ideal` edges.
///
/// Not symmetric in its arguments.
pub fn pratt_fom(detected: &EdgeMap, ideal: &EdgeMap, alpha: f64) -> Result<f64> {
    if detected.dims() != ideal.dims() {
        return Err(Error::Dimension(format!(
            "edge maps {:?} vs {:?}",
            detected.dims(),
            ideal.dims()
        )));
    }
    let ideal_pts = ideal.points();
    if ideal_pts.is_empty() {
        return Err(Error::Degenerate("ideal edge map is empty".into()));
    }
    let found = detected.points();
    if found.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = found
        .iter()
        .map(|&(r, c)| {
            let d2 = ideal_pts
                .iter()
                .map(|&(ir, ic)| {
                    let dr = r as f64 - ir as f64;
                    let dc = c as f64 - ic as f64;
                    dr * dr + dc * dc
                })
                .fold(f64::INFINITY, f64::min);
            1.0 / (1.0 + alpha * d2)
        })
        .sum();
    Ok(sum / found.len().max(ideal_pts.len()) as f64)
}

/// Sobel gradient magnitude kept at or above its 90th percentile.
///
/// Zero-gradient pixels are never edges, so flat images give an empty map.
pub fn edge_map(img: &Image) -> EdgeMap {
    let (rows, cols) = img.dims();
    let p = |r: usize, c: usize, dr: isize, dc: isize| img.get_clamped(r as isize + dr, c as isize + dc);
    let mag: Vec<f64> = (0..rows)
        .flat_map(|r| (0..cols).map(move |c| (r, c)))
        .map(|(r, c)| {
            let gx = (p(r, c, -1, 1) + 2.0 * p(r, c, 0, 1) + p(r, c, 1, 1))
                - (p(r, c, -1, -1) + 2.0 * p(r, c, 0, -1) + p(r, c, 1, -1));
            let gy = (p(r, c, 1, -1) + 2.0 * p(r, c, 1, 0) + p(r, c, 1, 1))
                - (p(r, c, -1, -1) + 2.0 * p(r, c, -1, 0) + p(r, c, -1, 1));
            (gx * gx + gy * gy).sqrt()
        })
        .collect();
    let mut sorted = mag.clone();
    sorted.sort_by(f64::total_cmp);
    // Nearest-rank percentile.
    let rank = ((0.9 * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    let threshold = sorted[rank - 1];
    let bits = mag.iter().map(|&m| m > 0.0 && m >= threshold).collect();
    EdgeMap::new(rows, cols, bits).expect("edge map matches image shape")
}

/// Peak signal-to-noise ratio; identical images are reported as `Infinite`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Psnr {
    Finite(f64),
    Infinite,
}

impl Psnr {
    /// Decibel value, `f64::INFINITY` for identical images.
    pub fn db(self) -> f64 {
        match self {
            Psnr::Finite(v) => v,
            Psnr::Infinite => f64::INFINITY,
        }
    }
}

impl fmt::Display for Psnr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Psnr::Finite(v) => write!(f, "{v}"),
            Psnr::Infinite => f.write_str("inf"),
        }
    }
}

pub fn psnr(reference: &Image, test: &Image, peak: f64) -> Result<Psnr> {
    if !(peak > 0.0 && peak.is_finite()) {
        return Err(Error::param("peak", format!("{peak} must be positive")));
    }
    let mse = msd(reference, test)?;
    if mse == 0.0 {
        return Ok(Psnr::Infinite);
    }
    Ok(Psnr::Finite(10.0 * (peak * peak / mse).log10()))
}

/// Why a report field is empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gap {
    /// Image smaller than one ENL tile.
    EnlTooSmall,
    /// Every ENL tile is flat.
    EnlFlat,
    /// Zero standard deviation makes DR undefined.
    DrFlat,
    /// The ideal edge map has no edge pixels.
    FomNoIdealEdges,
}

impl Gap {
    pub fn code(self) -> &'static str {
        match self {
            Gap::EnlTooSmall => "enl_too_small",
            Gap::EnlFlat => "enl_flat",
            Gap::DrFlat => "dr_flat",
            Gap::FomNoIdealEdges => "fom_no_ideal_edges",
        }
    }
}

/// One row of a filter comparison table.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsReport {
    pub msd: Option<f64>,
    pub nmv: f64,
    pub nsd: f64,
    pub enl: Option<f64>,
    pub dr: Option<f64>,
    pub fom: Option<f64>,
    pub psnr: Option<Psnr>,
    pub gaps: Vec<Gap>,
}

#[derive(Debug, Clone, Copy)]
pub struct ReportOptions<'a> {
    pub tile: usize,
    /// Edges of the clean scene; FOM is reported only when present.
    pub ideal_edges: Option<&'a EdgeMap>,
    /// Clean scene for PSNR, peak taken as its maximum absolute value.
    pub reference: Option<&'a Image>,
}

impl Default for ReportOptions<'_> {
    fn default() -> Self {
        Self {
            tile: ENL_TILE,
            ideal_edges: None,
            reference: None,
        }
    }
}

/// Assembles a report with default tiling and no PSNR.
pub fn full_report(
    noisy: &Image,
    despeckled: &Image,
    ideal_edges: Option<&EdgeMap>,
) -> Result<MetricsReport> {
    full_report_with(
        noisy,
        despeckled,
        &ReportOptions {
            ideal_edges,
            ..Default::default()
        },
    )
}

pub fn full_report_with(
    noisy: &Image,
    despeckled: &Image,
    opts: &ReportOptions<'_>,
) -> Result<MetricsReport> {
    let msd = msd(noisy, despeckled)?;
    let NoiseStats { nmv, nsd, .. } = nmv_nv_nsd(despeckled);
    let mut gaps = Vec::new();

    let enl = match enl(despeckled, opts.tile) {
        Ok(v) => Some(v),
        Err(Error::Size(_)) => {
            gaps.push(Gap::EnlTooSmall);
            None
        }
        Err(Error::Degenerate(_)) => {
            gaps.push(Gap::EnlFlat);
            None
        }
        Err(e) => return Err(e),
    };
    let dr = match deflection_ratio(despeckled) {
        Ok(v) => Some(v),
        Err(_) => {
            gaps.push(Gap::DrFlat);
            None
        }
    };
    let fom = match opts.ideal_edges {
        Some(ideal) => match pratt_fom(&edge_map(despeckled), ideal, FOM_ALPHA) {
            Ok(v) => Some(v),
            Err(Error::Degenerate(_)) => {
                gaps.push(Gap::FomNoIdealEdges);
                None
            }
            Err(e) => return Err(e),
        },
        None => None,
    };
    let psnr = match opts.reference {
        Some(reference) => {
            let peak = reference.max_abs();
            if peak == 0.0 {
                return Err(Error::Degenerate("PSNR reference is identically zero".into()));
            }
            Some(psnr(reference, despeckled, peak)?)
        }
        None => None,
    };

    Ok(MetricsReport {
        msd: Some(msd),
        nmv,
        nsd,
        enl,
        dr,
        fom,
        psnr,
        gaps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::speckle::{apply_speckle, SpeckleModel};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(rows: usize, cols: usize, seed: u64) -> Image {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Image::from_fn(rows, cols, |_, _| rng.random_range(0.0..255.0))
    }

    fn line(rows: usize, cols: usize, col: usize) -> EdgeMap {
        let mut m = EdgeMap::empty(rows, cols);
        for r in 0..rows {
            m.set(r, col, true);
        }
        m
    }

    #[test]
    fn noise_stats() {
        let s = nmv_nv_nsd(&Image::filled(3, 3, 5.0));
        assert_eq!((s.nmv, s.nv, s.nsd), (5.0, 0.0, 0.0));
        let s = nmv_nv_nsd(&Image::from_rows(&[[0.0, 2.0], [0.0, 2.0]]));
        assert_eq!((s.nmv, s.nv, s.nsd), (1.0, 1.0, 1.0));
        let img = random_image(9, 7, 1);
        let (m, v) = image_stats(&img);
        let s = nmv_nv_nsd(&img);
        assert!((s.nmv - m).abs() < 1e-12 && (s.nv - v).abs() < 1e-12);
    }

    #[test]
    fn msd_cases() {
        let a = random_image(10, 12, 2);
        assert_eq!(msd(&a, &a).unwrap(), 0.0);
        let shifted = a.map(|v| v + 3.0);
        assert!((msd(&a, &shifted).unwrap() - 9.0).abs() < 1e-9);
        let b = random_image(10, 12, 3);
        let mut naive = 0.0;
        for r in 0..10 {
            for c in 0..12 {
                naive += (a.get(r, c) - b.get(r, c)).powi(2);
            }
        }
        naive /= 120.0;
        assert!(((msd(&a, &b).unwrap() - naive) / naive).abs() < 1e-12);
        assert!(msd(&a, &Image::zeros(12, 10)).is_err());
    }

    #[test]
    fn enl_errors_and_tiling() {
        assert!(matches!(enl(&Image::filled(30, 30, 4.0), 25), Err(Error::Degenerate(_))));
        assert!(matches!(enl(&Image::filled(20, 30, 4.0), 25), Err(Error::Size(_))));

        // 50x50 → four blocks; brute-force average of their ENLs.
        let img = random_image(50, 50, 4);
        let mut per_block = vec![];
        for br in 0..2 {
            for bc in 0..2 {
                let px: Vec<f64> = (0..25)
                    .flat_map(|i| (0..25).map(move |j| (i, j)))
                    .map(|(i, j)| img.get(br * 25 + i, bc * 25 + j))
                    .collect();
                let (m, v) = image_stats(&Image::new(25, 25, px).unwrap());
                per_block.push(m * m / v);
            }
        }
        let want = per_block.iter().sum::<f64>() / 4.0;
        assert!((enl(&img, 25).unwrap() - want).abs() < 1e-9 * want);

        // Remainder rows/cols ignored.
        let mut bigger = img.clone().into_pixels();
        bigger.extend(std::iter::repeat_n(1e6, 50 * 10));
        let bigger = Image::new(60, 50, bigger).unwrap();
        assert!((enl(&bigger, 25).unwrap() - want).abs() < 1e-9 * want);
    }

    #[test]
    fn enl_tracks_looks() {
        for looks in [1, 4, 16] {
            let img = apply_speckle(&Image::filled(500, 500, 100.0), &SpeckleModel::multilook(looks, 40 + looks as u64)).unwrap();
            let e = enl(&img, 25).unwrap();
            assert!((e - looks as f64).abs() / (looks as f64) < 0.15, "L={looks}: {e}");
        }
    }

    #[test]
    fn deflection_ratio_is_residue() {
        assert!(deflection_ratio(&random_image(64, 64, 5)).unwrap().abs() < 1e-9);
        assert!(deflection_ratio(&Image::from_rows(&[[0.0, 2.0], [0.0, 2.0]])).unwrap().abs() < 1e-15);
        assert!(deflection_ratio(&Image::filled(4, 4, 2.0)).is_err());
        let img = random_image(32, 32, 6);
        let a = deflection_ratio(&img).unwrap();
        let b = deflection_ratio(&img.map(|v| v + 1000.0)).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn fom_cases() {
        let ideal = line(20, 20, 10);
        assert_eq!(pratt_fom(&ideal, &ideal, FOM_ALPHA).unwrap(), 1.0);
        let shifted = line(20, 20, 11);
        assert!((pratt_fom(&shifted, &ideal, FOM_ALPHA).unwrap() - 0.9).abs() < 1e-12);
        assert_eq!(pratt_fom(&EdgeMap::empty(20, 20), &ideal, FOM_ALPHA).unwrap(), 0.0);
        assert!(pratt_fom(&ideal, &EdgeMap::empty(20, 20), FOM_ALPHA).is_err());
        assert!(pratt_fom(&line(20, 21, 3), &ideal, FOM_ALPHA).is_err());
    }

    #[test]
    fn fom_with_far_spurious_edges() {
        let mut ideal = EdgeMap::empty(100, 100);
        for r in 0..10 {
            ideal.set(r, 0, true);
        }
        let mut detected = ideal.clone();
        for r in 0..10 {
            detected.set(90 + r, 99, true);
        }
        let fom = pratt_fom(&detected, &ideal, FOM_ALPHA).unwrap();
        // Spurious pixels sit at d >= 80, each contributing < 1/(1 + 711).
        assert!((fom - 0.5).abs() < 0.5 * 1.0 / (1.0 + FOM_ALPHA * 6400.0) + 1e-12, "{fom}");
        assert!(fom >= 0.5);
    }

    #[test]
    fn edge_map_cases() {
        assert_eq!(edge_map(&Image::filled(10, 10, 3.0)).count(), 0);
        let step = Image::from_fn(16, 16, |_, c| if c < 8 { 0.0 } else { 100.0 });
        let m = edge_map(&step);
        assert!(m.count() > 0);
        for (_, c) in m.points() {
            assert!((7..=8).contains(&c), "edge at column {c}");
        }
        let img = random_image(20, 20, 7);
        assert_eq!(edge_map(&img), edge_map(&img));
        let n = edge_map(&img).count();
        assert!((40..=60).contains(&n), "{n}");
    }

    #[test]
    fn psnr_cases() {
        let a = random_image(8, 8, 8);
        let b = a.map(|v| v + 25.5);
        let p = psnr(&a, &b, 255.0).unwrap().db();
        assert!((p - 20.0).abs() < 1e-9, "{p}");
        assert_eq!(psnr(&a, &a, 255.0).unwrap(), Psnr::Infinite);
        assert_eq!(Psnr::Infinite.to_string(), "inf");
        let c = random_image(8, 8, 9);
        let mut mse = 0.0;
        for i in 0..64 {
            mse += (a.pixels()[i] - c.pixels()[i]).powi(2);
        }
        mse /= 64.0;
        let want = 10.0 * (255.0f64 * 255.0 / mse).log10();
        assert!((psnr(&a, &c, 255.0).unwrap().db() - want).abs() < 1e-9);
        assert!(psnr(&a, &c, 0.0).is_err());
    }

    #[test]
    fn psnr_decreases_with_noise() {
        let clean = random_image(32, 32, 10);
        let noise = random_image(32, 32, 11).map(|v| v / 255.0 - 0.5);
        let at = |k: f64| psnr(&clean, &clean.zip_map(&noise, |a, n| a + k * n).unwrap(), 255.0).unwrap().db();
        assert!(at(1.0) > at(5.0) && at(5.0) > at(25.0));
    }

    #[test]
    fn report_composition() {
        let noisy = apply_speckle(&Image::filled(50, 50, 80.0), &SpeckleModel::multilook(4, 1)).unwrap();
        let filtered = noisy.map(|v| 0.5 * v + 40.0);
        let ideal = edge_map(&noisy);
        let r = full_report(&noisy, &filtered, Some(&ideal)).unwrap();
        assert_eq!(r.msd, Some(msd(&noisy, &filtered).unwrap()));
        let s = nmv_nv_nsd(&filtered);
        assert_eq!((r.nmv, r.nsd), (s.nmv, s.nsd));
        assert_eq!(r.enl, Some(enl(&filtered, 25).unwrap()));
        assert_eq!(r.dr, Some(deflection_ratio(&filtered).unwrap()));
        assert_eq!(r.fom, Some(pratt_fom(&edge_map(&filtered), &ideal, FOM_ALPHA).unwrap()));
        assert!(r.dr.unwrap().abs() < 1e-9);
        assert!(r.psnr.is_none());

        let id = full_report(&noisy, &noisy, Some(&ideal)).unwrap();
        assert_eq!(id.msd, Some(0.0));
        assert_eq!(id.fom, Some(1.0));
    }

    #[test]
    fn report_gaps() {
        let flat = Image::filled(10, 10, 1.0);
        let r = full_report(&flat, &flat, None).unwrap();
        assert_eq!(r.enl, None);
        assert_eq!(r.dr, None);
        assert_eq!(r.gaps, vec![Gap::EnlTooSmall, Gap::DrFlat]);
    }
}
