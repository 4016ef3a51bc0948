//! File formats.
//!
//! Map files: a 20-byte little-endian header (`b"FIDT"`, version `1`,
//! height, width, kind, each `u32`) followed by `height * width` `f32`
//! values in row-major order, top row first.
//!
//! Annotations: a JSON object with keys `image_id`, `width`, `height`,
//! `points` (`[[x, y], ...]`) and optionally `boxes` (`[[w, h], ...]`).
//!
//! Point and box lists: headerless CSV, `x,y` or `x,y,s` per line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::boxes::PseudoBox;
use crate::error::{Error, Result};
use crate::types::{DenseMap, HeadBox, Point, PointSet};

pub const MAP_MAGIC: [u8; 4] = *b"FIDT";
pub const MAP_VERSION: u32 = 1;
pub const MAP_HEADER_LEN: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u32)]
pub enum MapKind {
    Distance = 0,
    Idt = 1,
    Fidt = 2,
    Predicted = 3,
}

impl TryFrom<u32> for MapKind {
    type Error = Error;

    fn try_from(v: u32) -> Result<Self> {
        match v {
            0 => Ok(Self::Distance),
            1 => Ok(Self::Idt),
            2 => Ok(Self::Fidt),
            3 => Ok(Self::Predicted),
            other => Err(Error::UnknownMapKind(other)),
        }
    }
}

pub fn encode_map(map: &DenseMap, kind: MapKind) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(MAP_HEADER_LEN + 4 * map.values().len());
    out.extend_from_slice(&MAP_MAGIC);
    for field in [MAP_VERSION, dim_u32(map.height())?, dim_u32(map.width())?, kind as u32] {
        out.extend_from_slice(&field.to_le_bytes());
    }
    for (index, &v) in map.values().iter().enumerate() {
        let narrow = v as f32;
        if !narrow.is_finite() {
            return Err(Error::NonFinite { index, value: v });
        }
        out.extend_from_slice(&narrow.to_le_bytes());
    }
    Ok(out)
}

fn dim_u32(d: usize) -> Result<u32> {
    u32::try_from(d).map_err(|_| Error::InvalidParameter {
        name: "dimension",
        reason: format!("{d} does not fit in u32"),
    })
}

pub fn decode_map(bytes: &[u8]) -> Result<(DenseMap, MapKind)> {
    if bytes.len() < MAP_HEADER_LEN {
        return Err(Error::Truncated {
            expected: MAP_HEADER_LEN,
            actual: bytes.len(),
        });
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let magic: [u8; 4] = bytes[0..4].try_into().unwrap();
    if magic != MAP_MAGIC {
        return Err(Error::BadMagic { found: magic });
    }
    let version = word(4);
    if version != MAP_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let (height, width) = (word(8) as usize, word(12) as usize);
    let kind = MapKind::try_from(word(16))?;
    if height == 0 || width == 0 {
        return Err(Error::EmptyGrid { width, height });
    }
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(MAP_HEADER_LEN))
        .ok_or(Error::EmptyGrid { width, height })?;
    if bytes.len() < expected {
        return Err(Error::Truncated {
            expected,
            actual: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(Error::TrailingBytes);
    }
    let values = bytes[MAP_HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    Ok((DenseMap::new(width, height, values)?, kind))
}

pub fn write_map<W: Write>(map: &DenseMap, kind: MapKind, mut destination: W) -> Result<()> {
    destination.write_all(&encode_map(map, kind)?)?;
    destination.flush()?;
    Ok(())
}

pub fn read_map<R: Read>(mut source: R) -> Result<(DenseMap, MapKind)> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    decode_map(&bytes)
}

pub fn save_map(path: impl AsRef<Path>, map: &DenseMap, kind: MapKind) -> Result<()> {
    write_map(map, kind, BufWriter::new(File::create(path)?))
}

pub fn load_map(path: impl AsRef<Path>) -> Result<(DenseMap, MapKind)> {
    decode_map(&std::fs::read(path)?)
}

/// An annotation file: an image identifier plus its point set.
#[derive(Clone, Debug, PartialEq)]
pub struct AnnotationDocument {
    pub image_id: String,
    pub points: PointSet,
}

#[derive(Serialize, Deserialize)]
struct RawDocument {
    image_id: String,
    width: usize,
    height: usize,
    points: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    boxes: Option<Vec<[f64; 2]>>,
}

const ANNOTATION_KEYS: [&str; 5] = ["image_id", "width", "height", "points", "boxes"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReadOptions {
    /// Reject unknown keys instead of ignoring them with a warning.
    pub strict: bool,
}

impl Default for ReadOptions {
    fn default() -> Self {
        Self { strict: true }
    }
}

pub fn parse_annotations(text: &str, options: ReadOptions) -> Result<AnnotationDocument> {
    let mut value: serde_json::Value = serde_json::from_str(text)?;
    let object = value
        .as_object_mut()
        .ok_or_else(|| Error::Schema("top level must be an object".into()))?;
    let unknown: Vec<String> = object
        .keys()
        .filter(|k| !ANNOTATION_KEYS.contains(&k.as_str()))
        .cloned()
        .collect();
    if !unknown.is_empty() {
        if options.strict {
            return Err(Error::Schema(format!("unknown keys {unknown:?}")));
        }
        log::warn!("ignoring unknown annotation keys {unknown:?}");
        for k in &unknown {
            object.remove(k);
        }
    }
    let raw: RawDocument = serde_json::from_value(value).map_err(|e| Error::Schema(e.to_string()))?;
    let points = raw.points.iter().map(|&[x, y]| Point::new(x, y)).collect();
    let boxes = raw.boxes.map(|b| b.iter().map(|&[w, h]| HeadBox::new(w, h)).collect());
    Ok(AnnotationDocument {
        image_id: raw.image_id,
        points: PointSet::with_boxes(raw.width, raw.height, points, boxes)?,
    })
}

pub fn read_annotations<R: Read>(mut source: R, options: ReadOptions) -> Result<AnnotationDocument> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    parse_annotations(&text, options)
}

pub fn load_annotations(path: impl AsRef<Path>, options: ReadOptions) -> Result<AnnotationDocument> {
    read_annotations(File::open(path)?, options)
}

pub fn write_annotations<W: Write>(doc: &AnnotationDocument, mut destination: W) -> Result<()> {
    let ps = &doc.points;
    let raw = RawDocument {
        image_id: doc.image_id.clone(),
        width: ps.width(),
        height: ps.height(),
        points: ps.points().iter().map(|p| [p.x, p.y]).collect(),
        boxes: ps.boxes().map(|b| b.iter().map(|b| [b.w, b.h]).collect()),
    };
    serde_json::to_writer(&mut destination, &raw)?;
    destination.write_all(b"\n")?;
    destination.flush()?;
    Ok(())
}

fn parse_record<const N: usize>(line: &str, lineno: usize) -> Result<[f64; N]> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() != N {
        return Err(Error::Csv {
            line: lineno,
            message: format!("expected {N} fields, found {}", fields.len()),
        });
    }
    let mut out = [0.0; N];
    for (slot, field) in out.iter_mut().zip(&fields) {
        let v: f64 = field.parse().map_err(|_| Error::Csv {
            line: lineno,
            message: format!("not a number: {field:?}"),
        })?;
        if !v.is_finite() {
            return Err(Error::Csv {
                line: lineno,
                message: format!("non-finite value {field:?}"),
            });
        }
        *slot = v;
    }
    Ok(out)
}

fn read_records<const N: usize, R: Read>(source: R) -> Result<Vec<[f64; N]>> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(source).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse_record::<N>(&line, i + 1)?);
    }
    Ok(out)
}

pub fn read_points_csv<R: Read>(source: R) -> Result<Vec<Point>> {
    Ok(read_records::<2, _>(source)?
        .into_iter()
        .map(|[x, y]| Point::new(x, y))
        .collect())
}

pub fn write_points_csv<W: Write>(points: &[Point], mut destination: W) -> Result<()> {
    for p in points {
        writeln!(destination, "{},{}", p.x, p.y)?;
    }
    destination.flush()?;
    Ok(())
}

pub fn read_boxes_csv<R: Read>(source: R) -> Result<Vec<PseudoBox>> {
    Ok(read_records::<3, _>(source)?
        .into_iter()
        .map(|[x, y, s]| PseudoBox {
            center: Point::new(x, y),
            size: s,
        })
        .collect())
}

pub fn write_boxes_csv<W: Write>(boxes: &[PseudoBox], mut destination: W) -> Result<()> {
    for b in boxes {
        writeln!(destination, "{},{},{}", b.center.x, b.center.y, b.size)?;
    }
    destination.flush()?;
    Ok(())
}
