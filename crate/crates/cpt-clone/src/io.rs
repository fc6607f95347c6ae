//! On-disk formats: CPTF complex-field snapshots and PGM intensity images.
//!
//! CPTF layout (all integers/floats little-endian):
//!
//! ```text
//! offset  size  field
//! 0       4     magic "CPTF"
//! 4       4     version u32 = 1
//! 8       8     nx u64
//! 16      8     ny u64
//! 24      8     dx f64 (cm)
//! 32      8     dy f64 (cm)
//! 40      8     z  f64 (cm)
//! 48      1     field id u8 (1 = probe, 2 = control)
//! 49      16*nx*ny   payload: (re f64, im f64) row-major
//! ```

use crate::field::ComplexField;
use crate::grid::TransverseGrid;
use num_complex::Complex64;
use std::io::{Read, Write};
use std::path::Path;
use thiserror::Error;

pub const CPTF_MAGIC: [u8; 4] = *b"CPTF";
pub const CPTF_VERSION: u32 = 1;
pub const CPTF_HEADER_LEN: usize = 49;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("bad magic at byte offset 0: expected \"CPTF\", got {got:?}")]
    BadMagic { got: [u8; 4] },
    #[error("unsupported version {got} at byte offset 4")]
    BadVersion { got: u32 },
    #[error("truncated header: {got} bytes, need {need} (at byte offset {got})")]
    TruncatedHeader { got: usize, need: usize },
    #[error("invalid field id {got} at byte offset 48")]
    BadFieldId { got: u8 },
    #[error("payload length mismatch at byte offset {offset}: header implies {expected} bytes, file carries {got}")]
    PayloadLength {
        offset: usize,
        expected: u64,
        got: u64,
    },
    #[error("header describes an invalid grid: {0}")]
    BadGrid(String),
    #[error("pgm: {0}")]
    Pgm(String),
}

fn io_err(path: &Path, source: std::io::Error) -> FormatError {
    FormatError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Which envelope a CPTF file stores.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldId {
    Probe = 1,
    Control = 2,
}

impl FieldId {
    pub fn tag(self) -> u8 {
        self as u8
    }

    pub fn name(self) -> &'static str {
        match self {
            FieldId::Probe => "probe",
            FieldId::Control => "control",
        }
    }

    pub fn from_tag(tag: u8) -> Result<Self, FormatError> {
        match tag {
            1 => Ok(FieldId::Probe),
            2 => Ok(FieldId::Control),
            got => Err(FormatError::BadFieldId { got }),
        }
    }
}

/// Serialize a field snapshot to CPTF bytes.
pub fn encode_cptf(field: &ComplexField, z: f64, id: FieldId) -> Vec<u8> {
    let g = field.grid();
    let mut out = Vec::with_capacity(CPTF_HEADER_LEN + 16 * g.len());
    out.extend_from_slice(&CPTF_MAGIC);
    out.extend_from_slice(&CPTF_VERSION.to_le_bytes());
    out.extend_from_slice(&(g.nx() as u64).to_le_bytes());
    out.extend_from_slice(&(g.ny() as u64).to_le_bytes());
    out.extend_from_slice(&g.dx().to_le_bytes());
    out.extend_from_slice(&g.dy().to_le_bytes());
    out.extend_from_slice(&z.to_le_bytes());
    out.push(id.tag());
    for v in field.values() {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
    out
}

pub fn write_cptf(path: &Path, field: &ComplexField, z: f64, id: FieldId) -> Result<(), FormatError> {
    let bytes = encode_cptf(field, z, id);
    let mut f = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
    f.write_all(&bytes).map_err(|e| io_err(path, e))
}

/// Decode CPTF bytes into a field snapshot.
pub fn decode_cptf(bytes: &[u8]) -> Result<(ComplexField, f64, FieldId), FormatError> {
    if bytes.len() < CPTF_HEADER_LEN {
        return Err(FormatError::TruncatedHeader {
            got: bytes.len(),
            need: CPTF_HEADER_LEN,
        });
    }
    let magic: [u8; 4] = bytes[0..4].try_into().unwrap();
    if magic != CPTF_MAGIC {
        return Err(FormatError::BadMagic { got: magic });
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != CPTF_VERSION {
        return Err(FormatError::BadVersion { got: version });
    }
    let nx = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let ny = u64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let dx = f64::from_le_bytes(bytes[24..32].try_into().unwrap());
    let dy = f64::from_le_bytes(bytes[32..40].try_into().unwrap());
    let z = f64::from_le_bytes(bytes[40..48].try_into().unwrap());
    let id = FieldId::from_tag(bytes[48])?;

    let expected = nx
        .checked_mul(ny)
        .and_then(|n| n.checked_mul(16))
        .ok_or(FormatError::BadGrid("nx*ny overflows".into()))?;
    let got = (bytes.len() - CPTF_HEADER_LEN) as u64;
    if got != expected {
        return Err(FormatError::PayloadLength {
            offset: CPTF_HEADER_LEN,
            expected,
            got,
        });
    }
    let grid = TransverseGrid::new(nx as usize, ny as usize, dx, dy)
        .map_err(|e| FormatError::BadGrid(e.to_string()))?;

    let mut values = Vec::with_capacity(grid.len());
    let payload = &bytes[CPTF_HEADER_LEN..];
    for chunk in payload.chunks_exact(16) {
        let re = f64::from_le_bytes(chunk[0..8].try_into().unwrap());
        let im = f64::from_le_bytes(chunk[8..16].try_into().unwrap());
        values.push(Complex64::new(re, im));
    }
    let field = ComplexField::new(grid, values)
        .map_err(|e| FormatError::BadGrid(e.to_string()))?;
    Ok((field, z, id))
}

pub fn read_cptf(path: &Path) -> Result<(ComplexField, f64, FieldId), FormatError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .map_err(|e| io_err(path, e))?
        .read_to_end(&mut bytes)
        .map_err(|e| io_err(path, e))?;
    decode_cptf(&bytes)
}

/// Grayscale image as normalized luma samples, row 0 at the top.
#[derive(Debug, Clone)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    /// Luma in [0, 1], row-major, `width * height` samples.
    pub luma: Vec<f64>,
}

/// Load a grayscale raster (binary PGM "P5", 8- or 16-bit).
pub fn read_pgm(path: &Path) -> Result<GrayImage, FormatError> {
    let img = image::ImageReader::open(path)
        .map_err(|e| io_err(path, e))?
        .decode()
        .map_err(|e| FormatError::Pgm(format!("{}: {e}", path.display())))?;
    let img = img.into_luma16();
    let (w, h) = (img.width() as usize, img.height() as usize);
    if w == 0 || h == 0 {
        return Err(FormatError::Pgm(format!("{}: empty image", path.display())));
    }
    let luma = img
        .into_raw()
        .into_iter()
        .map(|v| v as f64 / u16::MAX as f64)
        .collect();
    Ok(GrayImage {
        width: w,
        height: h,
        luma,
    })
}

/// Encode a 16-bit binary PGM (P5, maxval 65535, big-endian samples).
pub fn encode_pgm16(width: usize, height: usize, samples: &[u16]) -> Vec<u8> {
    assert_eq!(samples.len(), width * height);
    let mut out = format!("P5\n{width} {height}\n65535\n").into_bytes();
    out.reserve(2 * samples.len());
    for s in samples {
        out.extend_from_slice(&s.to_be_bytes());
    }
    out
}

/// Render |field|^2 as a peak-normalized 16-bit PGM next to a sidecar text
/// file `<path>.scale.txt` holding the peak intensity (gamma^2) used as the
/// normalization constant.
pub fn write_intensity_pgm(path: &Path, field: &ComplexField) -> Result<(), FormatError> {
    let peak = field.peak_intensity();
    let scale = if peak > 0.0 {
        u16::MAX as f64 / peak
    } else {
        0.0
    };
    let samples: Vec<u16> = field
        .values()
        .iter()
        .map(|v| (v.norm_sqr() * scale).round().min(u16::MAX as f64) as u16)
        .collect();
    let bytes = encode_pgm16(field.grid().nx(), field.grid().ny(), &samples);
    std::fs::write(path, bytes).map_err(|e| io_err(path, e))?;
    let sidecar = sidecar_path(path);
    std::fs::write(&sidecar, format!("peak_intensity = {}\n", fmt_f64(peak)))
        .map_err(|e| io_err(&sidecar, e))
}

pub fn sidecar_path(pgm_path: &Path) -> std::path::PathBuf {
    let mut os = pgm_path.as_os_str().to_os_string();
    os.push(".scale.txt");
    std::path::PathBuf::from(os)
}

/// Shortest round-trip decimal form of an f64; locale-independent.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_field() -> ComplexField {
        let grid = TransverseGrid::new(8, 4, 1e-3, 2e-3).unwrap();
        ComplexField::from_fn(grid, |x, y| Complex64::new(x + 0.5, y - 0.25))
    }

    #[test]
    fn cptf_round_trip_is_bit_exact() {
        let f = sample_field();
        let bytes = encode_cptf(&f, 1.25, FieldId::Control);
        let (g, z, id) = decode_cptf(&bytes).unwrap();
        assert_eq!(z, 1.25);
        assert_eq!(id, FieldId::Control);
        let again = encode_cptf(&g, z, id);
        assert_eq!(bytes, again);
    }

    #[test]
    fn cptf_errors_carry_offsets() {
        let f = sample_field();
        let mut bytes = encode_cptf(&f, 0.0, FieldId::Probe);

        let mut bad = bytes.clone();
        bad[0] = b'X';
        let err = decode_cptf(&bad).unwrap_err();
        assert!(err.to_string().contains("offset 0"), "{err}");

        let mut bad = bytes.clone();
        bad[4..8].copy_from_slice(&7u32.to_le_bytes());
        let err = decode_cptf(&bad).unwrap_err();
        assert!(err.to_string().contains("offset 4"), "{err}");

        let mut bad = bytes.clone();
        bad[48] = 9;
        let err = decode_cptf(&bad).unwrap_err();
        assert!(err.to_string().contains("offset 48"), "{err}");

        bytes.truncate(bytes.len() - 5);
        let err = decode_cptf(&bytes).unwrap_err();
        assert!(
            matches!(err, FormatError::PayloadLength { offset: 49, .. }),
            "{err}"
        );
        assert!(err.to_string().contains("mismatch at byte offset 49"));
    }

    #[test]
    fn pgm16_is_big_endian_p5() {
        let bytes = encode_pgm16(2, 1, &[0x0102, 0xfffe]);
        let header_end = bytes.len() - 4;
        assert_eq!(&bytes[..header_end], b"P5\n2 1\n65535\n");
        assert_eq!(&bytes[header_end..], &[0x01, 0x02, 0xff, 0xfe]);
    }

    #[test]
    fn intensity_render_normalizes_to_peak() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.pgm");
        let f = sample_field();
        write_intensity_pgm(&path, &f).unwrap();
        let img = read_pgm(&path).unwrap();
        let max = img.luma.iter().cloned().fold(0.0f64, f64::max);
        assert!((max - 1.0).abs() < 1e-12);
        let sidecar = std::fs::read_to_string(sidecar_path(&path)).unwrap();
        let peak: f64 = sidecar
            .trim()
            .strip_prefix("peak_intensity = ")
            .unwrap()
            .parse()
            .unwrap();
        assert_eq!(peak, f.peak_intensity());
    }
}
