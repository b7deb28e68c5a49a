//! Baseline TIFF / GeoTIFF reader for multi-band rasters.
//!
//! Supported: classic (non-Big) TIFF in either byte order, strips or tiles,
//! chunky or planar sample layout, no compression or Deflate (optionally
//! with horizontal differencing), and uint8 / uint16 / int16 / float32
//! samples. Only the first image directory is read.

use std::collections::HashMap;
use std::io::Read;

use flate2::read::ZlibDecoder;
use thiserror::Error;

use crate::exec::{self, ExecMode};
use crate::model::Crs;

const TAG_IMAGE_WIDTH: u16 = 256;
const TAG_IMAGE_LENGTH: u16 = 257;
const TAG_BITS_PER_SAMPLE: u16 = 258;
const TAG_COMPRESSION: u16 = 259;
const TAG_STRIP_OFFSETS: u16 = 273;
const TAG_SAMPLES_PER_PIXEL: u16 = 277;
const TAG_ROWS_PER_STRIP: u16 = 278;
const TAG_STRIP_BYTE_COUNTS: u16 = 279;
const TAG_PLANAR_CONFIGURATION: u16 = 284;
const TAG_PREDICTOR: u16 = 317;
const TAG_TILE_WIDTH: u16 = 322;
const TAG_TILE_LENGTH: u16 = 323;
const TAG_TILE_OFFSETS: u16 = 324;
const TAG_TILE_BYTE_COUNTS: u16 = 325;
const TAG_SAMPLE_FORMAT: u16 = 339;
const TAG_MODEL_PIXEL_SCALE: u16 = 33550;
const TAG_MODEL_TIEPOINT: u16 = 33922;
const TAG_GEO_KEY_DIRECTORY: u16 = 34735;
const TAG_GDAL_NODATA: u16 = 42113;

const GEOKEY_MODEL_TYPE: u16 = 1024;
const GEOKEY_PROJECTED_CS: u16 = 3072;
const MODEL_TYPE_PROJECTED: u16 = 1;
const MODEL_TYPE_GEOGRAPHIC: u16 = 2;
const EPSG_WORLD_MERCATOR: u16 = 3395;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeoTiffError {
    #[error("not a TIFF file")]
    NotTiff,
    #[error("BigTIFF is not supported")]
    BigTiff,
    #[error("truncated or corrupt TIFF: {0}")]
    Corrupt(String),
    #[error("missing required tag {0}")]
    MissingTag(u16),
    #[error("unsupported compression {0}")]
    UnsupportedCompression(u16),
    #[error("unsupported predictor {0}")]
    UnsupportedPredictor(u16),
    #[error("unsupported sample format: {bits} bits, format {format}")]
    UnsupportedSampleFormat { bits: u16, format: u16 },
    #[error("missing ModelPixelScale/ModelTiepoint tags")]
    MissingGeoTags,
    #[error("invalid georeferencing: {0}")]
    InvalidGeoTags(String),
    #[error("unsupported coordinate system (EPSG {0})")]
    UnsupportedCrs(u16),
    #[error("deflate stream error: {0}")]
    Deflate(String),
}

/// Raster anchor: pixel (i, j) sits at model coordinate (x, y).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tiepoint {
    pub i: f64,
    pub j: f64,
    pub x: f64,
    pub y: f64,
}

/// Decoded raster; every band holds `width * height` row-major samples.
#[derive(Clone, Debug, PartialEq)]
pub struct RasterGrid {
    pub width: usize,
    pub height: usize,
    pub bands: Vec<Vec<f64>>,
    pub pixel_scale: (f64, f64),
    pub tiepoint: Tiepoint,
    pub nodata: Option<f64>,
    pub crs: Crs,
}

impl RasterGrid {
    pub fn band_count(&self) -> usize {
        self.bands.len()
    }

    /// Pixel containing model coordinate (x, y), if inside the raster.
    /// Rows grow southwards (model y decreases).
    pub fn pixel_at(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let (sx, sy) = self.pixel_scale;
        let col = ((x - self.tiepoint.x) / sx + self.tiepoint.i).floor();
        let row = ((self.tiepoint.y - y) / sy + self.tiepoint.j).floor();
        if col < 0.0 || row < 0.0 || col >= self.width as f64 || row >= self.height as f64 {
            return None;
        }
        Some((col as usize, row as usize))
    }

    pub fn value(&self, band: usize, col: usize, row: usize) -> f64 {
        self.bands[band][row * self.width + col]
    }

    pub fn is_nodata(&self, v: f64) -> bool {
        v.is_nan() || self.nodata.is_some_and(|nd| v == nd)
    }
}

#[derive(Clone, Copy)]
enum ByteOrder {
    Little,
    Big,
}

struct Reader<'a> {
    data: &'a [u8],
    order: ByteOrder,
}

impl<'a> Reader<'a> {
    fn bytes(&self, offset: usize, len: usize) -> Result<&'a [u8], GeoTiffError> {
        offset
            .checked_add(len)
            .and_then(|end| self.data.get(offset..end))
            .ok_or_else(|| {
                GeoTiffError::Corrupt(format!("{len} bytes at offset {offset} out of range"))
            })
    }

    fn u16(&self, offset: usize) -> Result<u16, GeoTiffError> {
        let b: [u8; 2] = self.bytes(offset, 2)?.try_into().expect("length checked");
        Ok(match self.order {
            ByteOrder::Little => u16::from_le_bytes(b),
            ByteOrder::Big => u16::from_be_bytes(b),
        })
    }

    fn u32(&self, offset: usize) -> Result<u32, GeoTiffError> {
        let b: [u8; 4] = self.bytes(offset, 4)?.try_into().expect("length checked");
        Ok(match self.order {
            ByteOrder::Little => u32::from_le_bytes(b),
            ByteOrder::Big => u32::from_be_bytes(b),
        })
    }

    fn u64(&self, offset: usize) -> Result<u64, GeoTiffError> {
        let b: [u8; 8] = self.bytes(offset, 8)?.try_into().expect("length checked");
        Ok(match self.order {
            ByteOrder::Little => u64::from_le_bytes(b),
            ByteOrder::Big => u64::from_be_bytes(b),
        })
    }
}

#[derive(Clone, Debug)]
struct Entry {
    field_type: u16,
    count: usize,
    /// Absolute offset of the value bytes (inline or external).
    offset: usize,
}

fn type_size(field_type: u16) -> Option<usize> {
    Some(match field_type {
        1 | 2 | 6 | 7 => 1,
        3 | 8 => 2,
        4 | 9 | 11 => 4,
        5 | 10 | 12 => 8,
        _ => return None,
    })
}

impl Entry {
    fn numbers(&self, r: &Reader<'_>) -> Result<Vec<f64>, GeoTiffError> {
        (0..self.count)
            .map(|i| {
                Ok(match self.field_type {
                    1 | 7 => r.bytes(self.offset + i, 1)?[0] as f64,
                    6 => r.bytes(self.offset + i, 1)?[0] as i8 as f64,
                    3 => r.u16(self.offset + 2 * i)? as f64,
                    8 => r.u16(self.offset + 2 * i)? as i16 as f64,
                    4 => r.u32(self.offset + 4 * i)? as f64,
                    9 => r.u32(self.offset + 4 * i)? as i32 as f64,
                    5 => {
                        r.u32(self.offset + 8 * i)? as f64 / r.u32(self.offset + 8 * i + 4)? as f64
                    }
                    10 => {
                        r.u32(self.offset + 8 * i)? as i32 as f64
                            / r.u32(self.offset + 8 * i + 4)? as i32 as f64
                    }
                    11 => f32::from_bits(r.u32(self.offset + 4 * i)?) as f64,
                    12 => f64::from_bits(r.u64(self.offset + 8 * i)?),
                    t => {
                        return Err(GeoTiffError::Corrupt(format!(
                            "field type {t} is not numeric"
                        )))
                    }
                })
            })
            .collect()
    }

    fn unsigned(&self, r: &Reader<'_>) -> Result<Vec<usize>, GeoTiffError> {
        if !matches!(self.field_type, 1 | 3 | 4) {
            return Err(GeoTiffError::Corrupt(format!(
                "expected unsigned field, got type {}",
                self.field_type
            )));
        }
        Ok(self.numbers(r)?.into_iter().map(|v| v as usize).collect())
    }

    fn text(&self, r: &Reader<'_>) -> Result<String, GeoTiffError> {
        let raw = r.bytes(self.offset, self.count)?;
        Ok(String::from_utf8_lossy(raw)
            .trim_end_matches('\0')
            .trim()
            .to_owned())
    }
}

struct Directory<'a> {
    reader: Reader<'a>,
    entries: HashMap<u16, Entry>,
}

impl<'a> Directory<'a> {
    fn parse(data: &'a [u8]) -> Result<Self, GeoTiffError> {
        let order = match data.get(0..2) {
            Some(b"II") => ByteOrder::Little,
            Some(b"MM") => ByteOrder::Big,
            _ => return Err(GeoTiffError::NotTiff),
        };
        let reader = Reader { data, order };
        match reader.u16(2)? {
            42 => {}
            43 => return Err(GeoTiffError::BigTiff),
            _ => return Err(GeoTiffError::NotTiff),
        }
        let ifd = reader.u32(4)? as usize;
        let count = reader.u16(ifd)? as usize;
        let mut entries = HashMap::with_capacity(count);
        for k in 0..count {
            let base = ifd + 2 + 12 * k;
            let tag = reader.u16(base)?;
            let field_type = reader.u16(base + 2)?;
            let n = reader.u32(base + 4)? as usize;
            // Unknown field types are skipped per the baseline rules.
            let Some(size) = type_size(field_type) else {
                continue;
            };
            let total = size
                .checked_mul(n)
                .ok_or_else(|| GeoTiffError::Corrupt("field size overflow".into()))?;
            let offset = if total <= 4 {
                base + 8
            } else {
                reader.u32(base + 8)? as usize
            };
            entries.insert(
                tag,
                Entry {
                    field_type,
                    count: n,
                    offset,
                },
            );
        }
        Ok(Directory { reader, entries })
    }

    fn get(&self, tag: u16) -> Option<&Entry> {
        self.entries.get(&tag)
    }

    fn required(&self, tag: u16) -> Result<Vec<usize>, GeoTiffError> {
        self.get(tag)
            .ok_or(GeoTiffError::MissingTag(tag))?
            .unsigned(&self.reader)
    }

    fn scalar_or(&self, tag: u16, default: usize) -> Result<usize, GeoTiffError> {
        match self.get(tag) {
            Some(e) => e
                .unsigned(&self.reader)?
                .first()
                .copied()
                .ok_or_else(|| GeoTiffError::Corrupt(format!("tag {tag} is empty"))),
            None => Ok(default),
        }
    }

    fn numbers(&self, tag: u16) -> Result<Option<Vec<f64>>, GeoTiffError> {
        self.get(tag).map(|e| e.numbers(&self.reader)).transpose()
    }
}

#[derive(Clone, Copy, PartialEq)]
enum SampleType {
    U8,
    U16,
    I16,
    F32,
}

impl SampleType {
    fn bytes(self) -> usize {
        match self {
            SampleType::U8 => 1,
            SampleType::U16 | SampleType::I16 => 2,
            SampleType::F32 => 4,
        }
    }
}

/// Layout of one compressed chunk (strip or tile) in the decoded image.
#[derive(Clone, Copy)]
struct Chunk {
    offset: usize,
    len: usize,
    /// Band for planar layout; None for interleaved samples.
    band: Option<usize>,
    col0: usize,
    row0: usize,
    /// Stored chunk dimensions (tiles are padded to full size).
    width: usize,
    rows: usize,
}

fn read_crs(dir: &Directory<'_>) -> Result<Crs, GeoTiffError> {
    let Some(keys) = dir.get(TAG_GEO_KEY_DIRECTORY) else {
        return Ok(Crs::Geographic);
    };
    let keys = keys.unsigned(&dir.reader)?;
    if keys.len() < 4 {
        return Err(GeoTiffError::InvalidGeoTags("short GeoKeyDirectory".into()));
    }
    let mut model_type = None;
    let mut projected = None;
    for entry in keys[4..].chunks_exact(4) {
        let (id, location, value) = (entry[0] as u16, entry[1], entry[3] as u16);
        if location != 0 {
            continue;
        }
        match id {
            GEOKEY_MODEL_TYPE => model_type = Some(value),
            GEOKEY_PROJECTED_CS => projected = Some(value),
            _ => {}
        }
    }
    match (model_type, projected) {
        (Some(MODEL_TYPE_PROJECTED), Some(EPSG_WORLD_MERCATOR)) => Ok(Crs::Mercator),
        (Some(MODEL_TYPE_PROJECTED), code) => Err(GeoTiffError::UnsupportedCrs(code.unwrap_or(0))),
        (Some(MODEL_TYPE_GEOGRAPHIC) | None, _) => Ok(Crs::Geographic),
        (Some(other), _) => Err(GeoTiffError::InvalidGeoTags(format!("model type {other}"))),
    }
}

pub fn parse_geotiff(bytes: &[u8]) -> Result<RasterGrid, GeoTiffError> {
    let dir = Directory::parse(bytes)?;
    let width = dir.scalar_or(TAG_IMAGE_WIDTH, 0)?;
    let height = dir.scalar_or(TAG_IMAGE_LENGTH, 0)?;
    if width == 0 || height == 0 {
        return Err(GeoTiffError::MissingTag(if width == 0 {
            TAG_IMAGE_WIDTH
        } else {
            TAG_IMAGE_LENGTH
        }));
    }
    let spp = dir.scalar_or(TAG_SAMPLES_PER_PIXEL, 1)?;

    let compression = dir.scalar_or(TAG_COMPRESSION, 1)? as u16;
    let deflate = match compression {
        1 => false,
        8 | 32946 => true,
        other => return Err(GeoTiffError::UnsupportedCompression(other)),
    };
    let predictor = dir.scalar_or(TAG_PREDICTOR, 1)? as u16;
    if predictor != 1 && predictor != 2 {
        return Err(GeoTiffError::UnsupportedPredictor(predictor));
    }

    let bits = dir
        .get(TAG_BITS_PER_SAMPLE)
        .map(|e| e.unsigned(&dir.reader))
        .transpose()?
        .unwrap_or(vec![1]);
    let formats = dir
        .get(TAG_SAMPLE_FORMAT)
        .map(|e| e.unsigned(&dir.reader))
        .transpose()?
        .unwrap_or(vec![1]);
    let (b0, f0) = (bits[0] as u16, formats[0] as u16);
    if bits.iter().any(|&b| b as u16 != b0) || formats.iter().any(|&f| f as u16 != f0) {
        return Err(GeoTiffError::UnsupportedSampleFormat {
            bits: b0,
            format: f0,
        });
    }
    let sample = match (b0, f0) {
        (8, 1) => SampleType::U8,
        (16, 1) => SampleType::U16,
        (16, 2) => SampleType::I16,
        (32, 3) => SampleType::F32,
        (bits, format) => return Err(GeoTiffError::UnsupportedSampleFormat { bits, format }),
    };
    if predictor == 2 && sample == SampleType::F32 {
        return Err(GeoTiffError::UnsupportedPredictor(predictor));
    }

    let planar = match dir.scalar_or(TAG_PLANAR_CONFIGURATION, 1)? {
        1 => false,
        2 => true,
        other => {
            return Err(GeoTiffError::Corrupt(format!(
                "planar configuration {other}"
            )))
        }
    };

    let chunks = chunk_layout(&dir, width, height, spp, planar)?;

    let (pixel_scale, tiepoint) = read_georeferencing(&dir)?;
    let nodata = match dir.get(TAG_GDAL_NODATA) {
        Some(e) => {
            let text = e.text(&dir.reader)?;
            Some(
                text.parse::<f64>()
                    .map_err(|_| GeoTiffError::InvalidGeoTags(format!("nodata '{text}'")))?,
            )
        }
        None => None,
    };
    let crs = read_crs(&dir)?;

    let order = dir.reader.order;
    let decoded: Vec<Result<Vec<u8>, GeoTiffError>> =
        exec::map_slice(ExecMode::default(), &chunks, |c| {
            let raw = dir.reader.bytes(c.offset, c.len)?;
            let samples_per_px = if c.band.is_some() { 1 } else { spp };
            let expected = c.width * c.rows * samples_per_px * sample.bytes();
            let mut buf = if deflate {
                let mut out = Vec::with_capacity(expected);
                ZlibDecoder::new(raw)
                    .read_to_end(&mut out)
                    .map_err(|e| GeoTiffError::Deflate(e.to_string()))?;
                out
            } else {
                raw.to_vec()
            };
            if buf.len() < expected {
                return Err(GeoTiffError::Corrupt(format!(
                    "chunk holds {} bytes, expected {expected}",
                    buf.len()
                )));
            }
            buf.truncate(expected);
            if predictor == 2 {
                undo_horizontal_differencing(&mut buf, c.width, samples_per_px, sample, order);
            }
            Ok(buf)
        });

    let mut bands = vec![vec![0.0f64; width * height]; spp];
    for (chunk, data) in chunks.iter().zip(decoded) {
        let data = data?;
        let samples_per_px = if chunk.band.is_some() { 1 } else { spp };
        let sz = sample.bytes();
        for r in 0..chunk.rows {
            let row = chunk.row0 + r;
            if row >= height {
                break;
            }
            for c in 0..chunk.width {
                let col = chunk.col0 + c;
                if col >= width {
                    break;
                }
                for s in 0..samples_per_px {
                    let at = ((r * chunk.width + c) * samples_per_px + s) * sz;
                    let band = chunk.band.unwrap_or(s);
                    bands[band][row * width + col] =
                        decode_sample(&data[at..at + sz], sample, order);
                }
            }
        }
    }

    Ok(RasterGrid {
        width,
        height,
        bands,
        pixel_scale,
        tiepoint,
        nodata,
        crs,
    })
}

fn chunk_layout(
    dir: &Directory<'_>,
    width: usize,
    height: usize,
    spp: usize,
    planar: bool,
) -> Result<Vec<Chunk>, GeoTiffError> {
    let planes = if planar { spp } else { 1 };
    let band_of = |plane: usize| planar.then_some(plane);
    let mut chunks = Vec::new();
    if dir.get(TAG_TILE_OFFSETS).is_some() {
        let tw = dir.scalar_or(TAG_TILE_WIDTH, 0)?;
        let th = dir.scalar_or(TAG_TILE_LENGTH, 0)?;
        if tw == 0 || th == 0 {
            return Err(GeoTiffError::MissingTag(TAG_TILE_WIDTH));
        }
        let offsets = dir.required(TAG_TILE_OFFSETS)?;
        let counts = dir.required(TAG_TILE_BYTE_COUNTS)?;
        let across = width.div_ceil(tw);
        let down = height.div_ceil(th);
        let per_plane = across * down;
        if offsets.len() < per_plane * planes || counts.len() < offsets.len() {
            return Err(GeoTiffError::Corrupt("tile table too short".into()));
        }
        for plane in 0..planes {
            for t in 0..per_plane {
                let k = plane * per_plane + t;
                chunks.push(Chunk {
                    offset: offsets[k],
                    len: counts[k],
                    band: band_of(plane),
                    col0: (t % across) * tw,
                    row0: (t / across) * th,
                    width: tw,
                    rows: th,
                });
            }
        }
    } else {
        let offsets = dir.required(TAG_STRIP_OFFSETS)?;
        let counts = dir.required(TAG_STRIP_BYTE_COUNTS)?;
        let rps = dir.scalar_or(TAG_ROWS_PER_STRIP, height)?.clamp(1, height);
        let per_plane = height.div_ceil(rps);
        if offsets.len() < per_plane * planes || counts.len() < offsets.len() {
            return Err(GeoTiffError::Corrupt("strip table too short".into()));
        }
        for plane in 0..planes {
            for s in 0..per_plane {
                let k = plane * per_plane + s;
                let row0 = s * rps;
                chunks.push(Chunk {
                    offset: offsets[k],
                    len: counts[k],
                    band: band_of(plane),
                    col0: 0,
                    row0,
                    width,
                    rows: rps.min(height - row0),
                });
            }
        }
    }
    Ok(chunks)
}

fn read_georeferencing(dir: &Directory<'_>) -> Result<((f64, f64), Tiepoint), GeoTiffError> {
    let scale = dir.numbers(TAG_MODEL_PIXEL_SCALE)?;
    let tie = dir.numbers(TAG_MODEL_TIEPOINT)?;
    let (Some(scale), Some(tie)) = (scale, tie) else {
        return Err(GeoTiffError::MissingGeoTags);
    };
    if scale.len() < 2 || tie.len() < 6 {
        return Err(GeoTiffError::InvalidGeoTags(
            "short pixel scale or tiepoint".into(),
        ));
    }
    if scale[0] == 0.0 || scale[1] == 0.0 || !scale[0].is_finite() || !scale[1].is_finite() {
        return Err(GeoTiffError::InvalidGeoTags(
            "pixel scale must be nonzero".into(),
        ));
    }
    Ok((
        (scale[0], scale[1]),
        Tiepoint {
            i: tie[0],
            j: tie[1],
            x: tie[3],
            y: tie[4],
        },
    ))
}

fn decode_sample(b: &[u8], sample: SampleType, order: ByteOrder) -> f64 {
    match (sample, order) {
        (SampleType::U8, _) => b[0] as f64,
        (SampleType::U16, ByteOrder::Little) => u16::from_le_bytes([b[0], b[1]]) as f64,
        (SampleType::U16, ByteOrder::Big) => u16::from_be_bytes([b[0], b[1]]) as f64,
        (SampleType::I16, ByteOrder::Little) => i16::from_le_bytes([b[0], b[1]]) as f64,
        (SampleType::I16, ByteOrder::Big) => i16::from_be_bytes([b[0], b[1]]) as f64,
        (SampleType::F32, ByteOrder::Little) => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
        (SampleType::F32, ByteOrder::Big) => f32::from_be_bytes([b[0], b[1], b[2], b[3]]) as f64,
    }
}

/// Reverses predictor 2: each sample stored as the difference from the
/// same sample of the previous pixel in the row.
fn undo_horizontal_differencing(
    buf: &mut [u8],
    width: usize,
    spp: usize,
    sample: SampleType,
    order: ByteOrder,
) {
    let row_samples = width * spp;
    match sample {
        SampleType::U8 => {
            for row in buf.chunks_exact_mut(row_samples) {
                for i in spp..row_samples {
                    row[i] = row[i].wrapping_add(row[i - spp]);
                }
            }
        }
        SampleType::U16 | SampleType::I16 => {
            let get = |b: &[u8], i: usize| match order {
                ByteOrder::Little => u16::from_le_bytes([b[2 * i], b[2 * i + 1]]),
                ByteOrder::Big => u16::from_be_bytes([b[2 * i], b[2 * i + 1]]),
            };
            for row in buf.chunks_exact_mut(row_samples * 2) {
                for i in spp..row_samples {
                    let v = get(row, i).wrapping_add(get(row, i - spp));
                    let bytes = match order {
                        ByteOrder::Little => v.to_le_bytes(),
                        ByteOrder::Big => v.to_be_bytes(),
                    };
                    row[2 * i..2 * i + 2].copy_from_slice(&bytes);
                }
            }
        }
        SampleType::F32 => unreachable!("rejected before decoding"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Hand-assembled little-endian 2x2 uint8 strip image.
    fn tiny_tiff(compression: u16, geo: bool) -> Vec<u8> {
        let mut entries: Vec<(u16, u16, u32, Vec<u8>)> = vec![
            (256, 3, 1, 2u16.to_le_bytes().to_vec()),
            (257, 3, 1, 2u16.to_le_bytes().to_vec()),
            (258, 3, 1, 8u16.to_le_bytes().to_vec()),
            (259, 3, 1, compression.to_le_bytes().to_vec()),
            (273, 4, 1, vec![]), // patched below
            (277, 3, 1, 1u16.to_le_bytes().to_vec()),
            (278, 3, 1, 2u16.to_le_bytes().to_vec()),
            (279, 4, 1, 4u32.to_le_bytes().to_vec()),
        ];
        if geo {
            let scale: Vec<u8> = [10.0f64, 10.0, 0.0]
                .iter()
                .flat_map(|v| v.to_le_bytes())
                .collect();
            let tie: Vec<u8> = [0.0f64, 0.0, 0.0, 100.0, 200.0, 0.0]
                .iter()
                .flat_map(|v| v.to_le_bytes())
                .collect();
            entries.push((33550, 12, 3, scale));
            entries.push((33922, 12, 6, tie));
        }
        let ifd_offset = 8u32;
        let ifd_len = 2 + 12 * entries.len() as u32 + 4;
        let mut external = Vec::new();
        let ext_base = ifd_offset + ifd_len;
        let pixel_offset = ext_base
            + entries
                .iter()
                .filter(|e| e.3.len() > 4)
                .map(|e| e.3.len() as u32)
                .sum::<u32>();
        let mut out = b"II".to_vec();
        out.extend(42u16.to_le_bytes());
        out.extend(ifd_offset.to_le_bytes());
        out.extend((entries.len() as u16).to_le_bytes());
        for (tag, ty, count, mut value) in entries {
            if tag == 273 {
                value = pixel_offset.to_le_bytes().to_vec();
            }
            out.extend(tag.to_le_bytes());
            out.extend(ty.to_le_bytes());
            out.extend(count.to_le_bytes());
            if value.len() <= 4 {
                value.resize(4, 0);
                out.extend(value);
            } else {
                out.extend((ext_base + external.len() as u32).to_le_bytes());
                external.extend(value);
            }
        }
        out.extend(0u32.to_le_bytes());
        out.extend(external);
        out.extend([1u8, 2, 3, 4]);
        out
    }

    #[test]
    fn hand_built_uint8() {
        let grid = parse_geotiff(&tiny_tiff(1, true)).unwrap();
        assert_eq!((grid.width, grid.height), (2, 2));
        assert_eq!(grid.bands, vec![vec![1.0, 2.0, 3.0, 4.0]]);
        assert_eq!(grid.pixel_scale, (10.0, 10.0));
        assert_eq!(grid.crs, Crs::Geographic);
        assert_eq!(grid.pixel_at(105.0, 195.0), Some((0, 0)));
        assert_eq!(grid.pixel_at(115.0, 185.0), Some((1, 1)));
        assert_eq!(grid.pixel_at(125.0, 185.0), None);
    }

    #[test]
    fn rejects_lzw_and_missing_geotags() {
        assert_eq!(
            parse_geotiff(&tiny_tiff(5, true)),
            Err(GeoTiffError::UnsupportedCompression(5))
        );
        assert_eq!(
            parse_geotiff(&tiny_tiff(1, false)),
            Err(GeoTiffError::MissingGeoTags)
        );
        assert_eq!(parse_geotiff(b"GIF89a"), Err(GeoTiffError::NotTiff));
        assert!(matches!(
            parse_geotiff(&tiny_tiff(1, true)[..20]),
            Err(GeoTiffError::Corrupt(_))
        ));
    }
}
