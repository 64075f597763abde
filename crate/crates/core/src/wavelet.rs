//! One-level separable 2D orthonormal DWT with periodic extension.
//!
//! Analysis along a line of length `N` (even):
//!
//! ```text
//! approx[k] = Σ_n h[n] · x[(2k + n) mod N]
//! detail[k] = Σ_n g[n] · x[(2k + n) mod N],   g[n] = (-1)^n · h[L-1-n]
//! ```
//!
//! Rows are filtered first, then columns. `LH` is lowpass along rows and
//! highpass along columns (horizontal detail), `HL` the transpose, `HH`
//! highpass both ways.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::image::{Image, Subbands};

const DB1: [f64; 2] = [std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2];

// Daubechies extremal-phase, 4 vanishing moments.
const DB4: [f64; 8] = [
    0.230_377_813_308_896_5,
    0.714_846_570_552_915_6,
    0.630_880_767_929_858_9,
    -0.027_983_769_416_859_854,
    -0.187_034_811_719_093_08,
    0.030_841_381_835_560_764,
    0.032_883_011_666_885_2,
    -0.010_597_401_785_069_032,
];

/// Orthonormal analysis/synthesis filter pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum WaveletBasis {
    /// Haar.
    #[default]
    Db1,
    Db4,
}

impl WaveletBasis {
    pub fn name(self) -> &'static str {
        match self {
            WaveletBasis::Db1 => "db1",
            WaveletBasis::Db4 => "db4",
        }
    }

    pub fn lowpass(self) -> &'static [f64] {
        match self {
            WaveletBasis::Db1 => &DB1,
            WaveletBasis::Db4 => &DB4,
        }
    }

    /// Quadrature-mirror highpass: `g[n] = (-1)^n h[L-1-n]`.
    pub fn highpass(self) -> Vec<f64> {
        let h = self.lowpass();
        let l = h.len();
        (0..l)
            .map(|n| if n % 2 == 0 { h[l - 1 - n] } else { -h[l - 1 - n] })
            .collect()
    }

    pub fn filter_len(self) -> usize {
        self.lowpass().len()
    }
}

impl fmt::Display for WaveletBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WaveletBasis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "db1" | "haar" => Ok(WaveletBasis::Db1),
            "db4" => Ok(WaveletBasis::Db4),
            other => Err(Error::param("wavelet", format!("unknown basis `{other}`"))),
        }
    }
}

fn analyze_line(x: &[f64], h: &[f64], g: &[f64], lo: &mut [f64], hi: &mut [f64]) {
    let n = x.len();
    for k in 0..n / 2 {
        let (mut a, mut d) = (0.0, 0.0);
        for (t, (&hv, &gv)) in h.iter().zip(g).enumerate() {
            let v = x[(2 * k + t) % n];
            a += hv * v;
            d += gv * v;
        }
        lo[k] = a;
        hi[k] = d;
    }
}

fn synthesize_line(lo: &[f64], hi: &[f64], h: &[f64], g: &[f64], out: &mut [f64]) {
    let n = out.len();
    out.fill(0.0);
    for k in 0..n / 2 {
        for (t, (&hv, &gv)) in h.iter().zip(g).enumerate() {
            out[(2 * k + t) % n] += lo[k] * hv + hi[k] * gv;
        }
    }
}

/// Splits each row into (low, high) halves: two `rows x cols/2` buffers.
fn analyze_rows(img: &Image, h: &[f64], g: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let (rows, cols) = img.dims();
    let half = cols / 2;
    let mut lo = vec![0.0; rows * half];
    let mut hi = vec![0.0; rows * half];
    for r in 0..rows {
        analyze_line(
            img.row(r),
            h,
            g,
            &mut lo[r * half..(r + 1) * half],
            &mut hi[r * half..(r + 1) * half],
        );
    }
    (lo, hi)
}

/// Column analysis of a `rows x cols` buffer into two `rows/2 x cols` images.
fn analyze_cols(buf: &[f64], rows: usize, cols: usize, h: &[f64], g: &[f64]) -> (Image, Image) {
    let half = rows / 2;
    let mut lo = vec![0.0; half * cols];
    let mut hi = vec![0.0; half * cols];
    let mut line = vec![0.0; rows];
    let mut l = vec![0.0; half];
    let mut d = vec![0.0; half];
    for c in 0..cols {
        for r in 0..rows {
            line[r] = buf[r * cols + c];
        }
        analyze_line(&line, h, g, &mut l, &mut d);
        for k in 0..half {
            lo[k * cols + c] = l[k];
            hi[k * cols + c] = d[k];
        }
    }
    (Image::from_raw(half, cols, lo), Image::from_raw(half, cols, hi))
}

fn synthesize_cols(lo: &Image, hi: &Image, h: &[f64], g: &[f64]) -> Vec<f64> {
    let (half, cols) = lo.dims();
    let rows = half * 2;
    let mut out = vec![0.0; rows * cols];
    let mut l = vec![0.0; half];
    let mut d = vec![0.0; half];
    let mut line = vec![0.0; rows];
    for c in 0..cols {
        for k in 0..half {
            l[k] = lo.get(k, c);
            d[k] = hi.get(k, c);
        }
        synthesize_line(&l, &d, h, g, &mut line);
        for r in 0..rows {
            out[r * cols + c] = line[r];
        }
    }
    out
}

/// Forward one-level 2D DWT.
pub fn dwt2(img: &Image, basis: WaveletBasis) -> Result<Subbands> {
    img.ensure_even()?;
    let len = basis.filter_len();
    if img.rows() < len || img.cols() < len {
        return Err(Error::Size(format!(
            "{}x{} image is smaller than the {}-tap {} filter",
            img.rows(),
            img.cols(),
            len,
            basis
        )));
    }
    let h = basis.lowpass();
    let g = basis.highpass();
    let (rows, cols) = img.dims();
    let (row_lo, row_hi) = analyze_rows(img, h, &g);
    let (ll, lh) = analyze_cols(&row_lo, rows, cols / 2, h, &g);
    let (hl, hh) = analyze_cols(&row_hi, rows, cols / 2, h, &g);
    Ok(Subbands { ll, lh, hl, hh })
}

/// Inverse of [`dwt2`]; exact up to rounding under periodic extension.
pub fn idwt2(bands: &Subbands, basis: WaveletBasis) -> Result<Image> {
    for band in bands.details() {
        bands.ll.ensure_same_dims(band)?;
    }
    let h = basis.lowpass();
    let g = basis.highpass();
    let (half_r, half_c) = bands.band_dims();
    let (rows, cols) = (half_r * 2, half_c * 2);
    let row_lo = synthesize_cols(&bands.ll, &bands.lh, h, &g);
    let row_hi = synthesize_cols(&bands.hl, &bands.hh, h, &g);
    let mut out = vec![0.0; rows * cols];
    for r in 0..rows {
        synthesize_line(
            &row_lo[r * half_c..(r + 1) * half_c],
            &row_hi[r * half_c..(r + 1) * half_c],
            h,
            &g,
            &mut out[r * cols..(r + 1) * cols],
        );
    }
    Ok(Image::from_raw(rows, cols, out))
}
