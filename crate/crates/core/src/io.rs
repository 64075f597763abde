//! Grayscale raster files (binary PGM, grayscale PNG) and CSV reports.
//!
//! Pixels are read as reals in `[0, maxval]`. Writing clamps to the format's
//! range and rounds half away from zero; nothing else is quantized.

use std::fs;
use std::io::{BufWriter, Cursor, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::metrics::{MetricsReport, Psnr};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RasterFormat {
    Pgm8,
    Pgm16,
    Png8,
    Png16,
}

impl RasterFormat {
    pub fn maxval(self) -> u32 {
        match self {
            RasterFormat::Pgm8 | RasterFormat::Png8 => 255,
            RasterFormat::Pgm16 | RasterFormat::Png16 => 65535,
        }
    }

    pub fn is_16bit(self) -> bool {
        self.maxval() > 255
    }

    /// Same bit depth, container chosen by the extension of `path`
    /// (`.png` → PNG, anything else → PGM).
    pub fn for_path(path: &Path, sixteen_bit: bool) -> Self {
        let png = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("png"));
        match (png, sixteen_bit) {
            (true, false) => RasterFormat::Png8,
            (true, true) => RasterFormat::Png16,
            (false, false) => RasterFormat::Pgm8,
            (false, true) => RasterFormat::Pgm16,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn read_image(path: impl AsRef<Path>) -> Result<Image> {
    read_raster(path).map(|(img, _)| img)
}

/// Reads a raster and reports the format it was stored in.
pub fn read_raster(path: impl AsRef<Path>) -> Result<(Image, RasterFormat)> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(io_err(path))?;
    decode_raster(&bytes)
}

const PNG_SIGNATURE: &[u8] = b"\x89PNG\r\n\x1a\n";

pub fn decode_raster(bytes: &[u8]) -> Result<(Image, RasterFormat)> {
    if bytes.starts_with(b"P5") {
        decode_pgm(bytes)
    } else if bytes.starts_with(PNG_SIGNATURE) {
        decode_png(bytes)
    } else if bytes.len() >= 2 && bytes[0] == b'P' && bytes[1].is_ascii_digit() {
        Err(Error::Unsupported(format!(
            "netpbm variant P{} (only binary P5 graymaps are read)",
            bytes[1] as char
        )))
    } else {
        Err(Error::Unsupported("not a PGM (P5) or PNG file".into()))
    }
}

/// Cursor over a PGM header: whitespace-separated decimal fields with `#`
/// comments running to end of line.
struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    fn skip_space(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.bytes.get(self.pos).is_some_and(|&b| b != b'\n') {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u32> {
        self.skip_space();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(match self.bytes.get(self.pos) {
                None => Error::parse(format!("header ends before {what}"), Some(self.pos)),
                Some(&b) => Error::parse(
                    format!("expected {what}, found byte 0x{b:02x}"),
                    Some(self.pos),
                ),
            });
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .expect("ascii digits")
            .parse()
            .map_err(|_| Error::parse(format!("{what} out of range"), Some(start)))
    }
}

fn decode_pgm(bytes: &[u8]) -> Result<(Image, RasterFormat)> {
    let mut cur = HeaderCursor { bytes, pos: 2 };
    let cols = cur.number("width")? as usize;
    let rows = cur.number("height")? as usize;
    let maxval = cur.number("maxval")?;
    if cols == 0 || rows == 0 {
        return Err(Error::parse(format!("empty {cols}x{rows} raster"), None));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::parse(format!("maxval {maxval} outside 1..=65535"), None));
    }
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        _ => {
            return Err(Error::parse(
                "missing whitespace after maxval",
                Some(cur.pos),
            ))
        }
    }
    let wide = maxval > 255;
    let sample = if wide { 2 } else { 1 };
    let need = rows * cols * sample;
    let data = &bytes[cur.pos..];
    if data.len() < need {
        return Err(Error::parse(
            format!("pixel data truncated: {} of {need} bytes", data.len()),
            Some(bytes.len()),
        ));
    }
    let pixels: Vec<f64> = if wide {
        data[..need]
            .chunks_exact(2)
            .map(|p| u16::from_be_bytes([p[0], p[1]]) as f64)
            .collect()
    } else {
        data[..need].iter().map(|&p| p as f64).collect()
    };
    if let Some(i) = pixels.iter().position(|&v| v > maxval as f64) {
        return Err(Error::parse(
            format!("sample {} exceeds maxval {maxval}", pixels[i]),
            Some(cur.pos + i * sample),
        ));
    }
    let format = if wide { RasterFormat::Pgm16 } else { RasterFormat::Pgm8 };
    Ok((Image::new(rows, cols, pixels)?, format))
}

fn decode_png(bytes: &[u8]) -> Result<(Image, RasterFormat)> {
    let png_err = |e: png::DecodingError| Error::parse(format!("png: {e}"), None);
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder.read_info().map_err(png_err)?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::parse("png: image too large", None))?;
    let mut buf = vec![0; size];
    let info = reader.next_frame(&mut buf).map_err(png_err)?;
    if info.color_type != png::ColorType::Grayscale {
        return Err(Error::Unsupported(format!(
            "png color type {:?}; only grayscale without alpha is read",
            info.color_type
        )));
    }
    let (rows, cols) = (info.height as usize, info.width as usize);
    let (pixels, format): (Vec<f64>, _) = match info.bit_depth {
        png::BitDepth::Sixteen => (
            (0..rows)
                .flat_map(|r| {
                    let line = &buf[r * info.line_size..r * info.line_size + 2 * cols];
                    line.chunks_exact(2)
                        .map(|p| u16::from_be_bytes([p[0], p[1]]) as f64)
                })
                .collect(),
            RasterFormat::Png16,
        ),
        png::BitDepth::Eight => (
            (0..rows)
                .flat_map(|r| buf[r * info.line_size..r * info.line_size + cols].iter().map(|&p| p as f64))
                .collect(),
            RasterFormat::Png8,
        ),
        other => {
            return Err(Error::Unsupported(format!("png bit depth {other:?}")));
        }
    };
    Ok((Image::new(rows, cols, pixels)?, format))
}

fn quantize(v: f64, maxval: u32) -> u32 {
    v.clamp(0.0, maxval as f64).round() as u32
}

/// Serializes `img` with the given format; deterministic bytes.
pub fn encode_raster(img: &Image, format: RasterFormat) -> Result<Vec<u8>> {
    let maxval = format.maxval();
    let samples: Vec<u8> = if format.is_16bit() {
        img.pixels()
            .iter()
            .flat_map(|&v| (quantize(v, maxval) as u16).to_be_bytes())
            .collect()
    } else {
        img.pixels().iter().map(|&v| quantize(v, maxval) as u8).collect()
    };
    match format {
        RasterFormat::Pgm8 | RasterFormat::Pgm16 => {
            let mut out = format!("P5\n{} {}\n{}\n", img.cols(), img.rows(), maxval).into_bytes();
            out.extend_from_slice(&samples);
            Ok(out)
        }
        RasterFormat::Png8 | RasterFormat::Png16 => {
            let png_err = |e: png::EncodingError| Error::Unsupported(format!("png: {e}"));
            let mut out = Vec::new();
            let mut enc = png::Encoder::new(&mut out, img.cols() as u32, img.rows() as u32);
            enc.set_color(png::ColorType::Grayscale);
            enc.set_depth(if format.is_16bit() {
                png::BitDepth::Sixteen
            } else {
                png::BitDepth::Eight
            });
            let mut writer = enc.write_header().map_err(png_err)?;
            writer.write_image_data(&samples).map_err(png_err)?;
            writer.finish().map_err(png_err)?;
            Ok(out)
        }
    }
}

pub fn write_image(img: &Image, path: impl AsRef<Path>, format: RasterFormat) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_raster(img, format)?;
    fs::write(path, bytes).map_err(io_err(path))
}

/// `%g`-style rendering with six significant digits; always '.' decimal.
pub fn format_sig6(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v.is_nan() {
        return "nan".into();
    }
    let sci = format!("{v:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(&format!("{v:.decimals$}")).to_string()
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub const REPORT_COLUMNS: [&str; 7] = ["filter", "MSD", "NMV", "NSD", "ENL", "DR", "FOM"];

/// Renders labeled reports as CSV. The PSNR column is present when any row
/// carries a PSNR; absent values are empty fields.
pub fn report_csv(rows: &[(String, MetricsReport)]) -> Result<Vec<u8>> {
    let with_psnr = rows.iter().any(|(_, r)| r.psnr.is_some());
    let mut wtr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Domain(format!("csv: {e}"));
    let mut header: Vec<&str> = REPORT_COLUMNS.to_vec();
    if with_psnr {
        header.push("PSNR");
    }
    wtr.write_record(&header).map_err(csv_err)?;
    let opt = |v: Option<f64>| v.map(format_sig6).unwrap_or_default();
    for (label, r) in rows {
        let mut rec = vec![
            label.clone(),
            opt(r.msd),
            format_sig6(r.nmv),
            format_sig6(r.nsd),
            opt(r.enl),
            opt(r.dr),
            opt(r.fom),
        ];
        if with_psnr {
            rec.push(match r.psnr {
                Some(Psnr::Infinite) => "inf".into(),
                Some(Psnr::Finite(v)) => format_sig6(v),
                None => String::new(),
            });
        }
        wtr.write_record(&rec).map_err(csv_err)?;
    }
    wtr.into_inner()
        .map_err(|e| Error::Domain(format!("csv: {e}")))
}

pub fn write_report(rows: &[(String, MetricsReport)], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = report_csv(rows)?;
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    w.write_all(&bytes).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}
