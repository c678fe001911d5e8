use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grounding::Vocabulary;
use crate::numerics::Grid2D;
use crate::objectness::BBox;
use crate::training::TraceRow;

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn open(path: &Path) -> Result<BufReader<fs::File>> {
    fs::File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

/// One JSON value per line; blank lines are skipped on read.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (n, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line)
            .map_err(|e| Error::format(path, format!("line {}: {e}", n + 1)))?;
        out.push(value);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut w = create(path)?;
    for item in items {
        serde_json::to_writer(&mut w, item).map_err(|e| Error::format(path, e.to_string()))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_reader(open(path)?).map_err(|e| Error::format(path, e.to_string()))
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::format(path, e.to_string()))?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// `word<TAB>frequency` per line, in index order.
pub fn write_vocab(path: &Path, vocab: &Vocabulary) -> Result<()> {
    let mut w = create(path)?;
    for (_, word, freq) in vocab.iter() {
        writeln!(w, "{word}\t{freq}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_vocab(path: &Path) -> Result<Vocabulary> {
    let mut entries = Vec::new();
    for (n, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        let (word, freq) = line
            .split_once('\t')
            .ok_or_else(|| Error::format(path, format!("line {}: expected word<TAB>frequency", n + 1)))?;
        let freq: u64 = freq
            .trim()
            .parse()
            .map_err(|e| Error::format(path, format!("line {}: {e}", n + 1)))?;
        entries.push((word.to_string(), freq));
    }
    Vocabulary::new(entries).map_err(|e| Error::format(path, e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptionRecord {
    pub image_id: String,
    pub caption: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<String>,
}

/// Boxes of one image as stored on disk. Scores and classes are optional on
/// input; classes are words.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxRecord {
    pub image_id: String,
    pub boxes: Vec<[f64; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classes: Option<Vec<String>>,
}

impl BoxRecord {
    pub fn from_boxes(image_id: impl Into<String>, boxes: &[BBox], class_name: impl Fn(usize) -> String) -> Self {
        let classes = if boxes.iter().all(|b| b.class.is_some()) && !boxes.is_empty() {
            Some(boxes.iter().map(|b| class_name(b.class.unwrap_or_default())).collect())
        } else {
            None
        };
        Self {
            image_id: image_id.into(),
            boxes: boxes.iter().map(BBox::coords).collect(),
            scores: Some(boxes.iter().map(|b| b.score).collect()),
            classes,
        }
    }

    /// Convert to boxes; `class_id` maps class words to ids. Unknown words
    /// become `None`. Missing scores default to 1.
    pub fn to_boxes(&self, class_id: impl Fn(&str) -> Option<usize>) -> Result<Vec<BBox>> {
        let n = self.boxes.len();
        let bad = |what: &str, len: usize| {
            Error::InvalidArgument(format!(
                "image {}: {n} boxes but {len} {what}",
                self.image_id
            ))
        };
        if let Some(s) = &self.scores {
            if s.len() != n {
                return Err(bad("scores", s.len()));
            }
        }
        if let Some(c) = &self.classes {
            if c.len() != n {
                return Err(bad("classes", c.len()));
            }
        }
        self.boxes
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let b = BBox::new(c[0], c[1], c[2], c[3])?
                    .with_score(self.scores.as_ref().map_or(1.0, |s| s[i]));
                Ok(b.with_class(self.classes.as_ref().and_then(|cl| class_id(&cl[i]))))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatmapRange {
    pub rows: usize,
    pub cols: usize,
    pub min: f64,
    pub max: f64,
}

/// 8-bit levels after min-max normalization; a constant map is all zero.
pub fn quantize_heat(heat: &Grid2D) -> (Vec<u8>, HeatmapRange) {
    let (min, max) = heat.min_max();
    let span = max - min;
    let pixels = heat
        .data()
        .iter()
        .map(|v| {
            if span > 0.0 {
                (255.0 * (v - min) / span).round().clamp(0.0, 255.0) as u8
            } else {
                0
            }
        })
        .collect();
    let range = HeatmapRange {
        rows: heat.rows(),
        cols: heat.cols(),
        min,
        max,
    };
    (pixels, range)
}

pub fn heatmap_side_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

/// Binary PGM plus a side JSON with the raw value range.
pub fn export_heatmap(heat: &Grid2D, path: &Path) -> Result<()> {
    let (pixels, range) = quantize_heat(heat);
    let mut w = create(path)?;
    write!(w, "P5\n{} {}\n255\n", range.cols, range.rows).map_err(|e| Error::io(path, e))?;
    w.write_all(&pixels).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))?;
    write_json(&heatmap_side_path(path), &range)
}

/// Read a binary 8-bit PGM: `(rows, cols, pixels)`.
pub fn read_pgm(path: &Path) -> Result<(usize, usize, Vec<u8>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::format(path, "truncated PGM header"));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    if fields[0] != "P5" || fields[3] != "255" {
        return Err(Error::format(path, "only 8-bit binary PGM (P5, maxval 255) is supported"));
    }
    let parse = |s: &str| {
        s.parse::<usize>()
            .map_err(|e| Error::format(path, format!("bad PGM dimension {s:?}: {e}")))
    };
    let (cols, rows) = (parse(&fields[1])?, parse(&fields[2])?);
    let pixels = bytes.get(pos..).unwrap_or_default().to_vec();
    if pixels.len() != rows * cols {
        return Err(Error::format(
            path,
            format!("expected {} pixels, found {}", rows * cols, pixels.len()),
        ));
    }
    Ok((rows, cols, pixels))
}

/// `step,loss,retrieval_top1` with a header row.
pub fn write_trace(path: &Path, rows: &[TraceRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::format(path, e.to_string()))?;
    for row in rows {
        w.serialize(row).map_err(|e| Error::format(path, e.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::format(path, e.to_string()))?;
    r.deserialize()
        .map(|row| row.map_err(|e| Error::format(path, e.to_string())))
        .collect()
}

/// Record of one CLI stage: what ran, with which settings, on which files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config: serde_json::Value,
    pub seeds: BTreeMap<String, u64>,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub timings_ms: BTreeMap<String, f64>,
}

impl RunManifest {
    pub fn new(command: impl Into<String>, config: serde_json::Value) -> Self {
        Self {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            seeds: BTreeMap::new(),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            timings_ms: BTreeMap::new(),
        }
    }
}
