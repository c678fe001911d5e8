//! File formats: binary feature maps and checkpoints, JSON Lines captions
//! and boxes, vocabulary TSV, heat-map PGM, loss CSV and run manifests.

mod binary;
mod text;

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use binary::{
    decode_fmap, decode_grounding, decode_mil, encode_fmap, encode_grounding, encode_mil,
    read_fmap, read_grounding, read_mil, write_fmap, write_grounding, write_mil, FMAP_MAGIC,
    FORMAT_VERSION, GPAR_MAGIC, MPAR_MAGIC,
};
pub use text::{
    export_heatmap, heatmap_side_path, quantize_heat, read_json, read_jsonl, read_pgm, read_trace,
    read_vocab, write_json, write_jsonl, write_trace, write_vocab, BoxRecord, CaptionRecord,
    HeatmapRange, RunManifest,
};

use crate::error::{Error, Result};
use crate::synth::{SynthDataset, SynthSpec};

pub const CAPTIONS_FILE: &str = "captions.jsonl";
pub const GT_FILE: &str = "gt.jsonl";
pub const SYNTH_FILE: &str = "synth.json";
pub const FMAP_DIR: &str = "fmaps";

/// Generator settings and class words stored next to a synthetic corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthInfo {
    pub spec: SynthSpec,
    pub class_names: Vec<String>,
}

pub fn fmap_path(data_dir: &Path, image_id: &str) -> PathBuf {
    data_dir.join(FMAP_DIR).join(format!("{image_id}.fmap"))
}

/// Write a corpus as `fmaps/<id>.fmap`, `captions.jsonl`, `gt.jsonl` and
/// `synth.json` under `dir`.
pub fn write_synth(ds: &SynthDataset, dir: &Path) -> Result<()> {
    let fdir = dir.join(FMAP_DIR);
    fs::create_dir_all(&fdir).map_err(|e| Error::io(&fdir, e))?;
    let mut captions = Vec::with_capacity(ds.scenes.len());
    let mut gts = Vec::with_capacity(ds.scenes.len());
    for s in &ds.scenes {
        write_fmap(&fmap_path(dir, &s.image_id), &s.fmap)?;
        captions.push(CaptionRecord {
            image_id: s.image_id.clone(),
            caption: s.caption.clone(),
            split: Some(s.split.as_str().to_string()),
        });
        gts.push(BoxRecord::from_boxes(&s.image_id, &s.gt_boxes(), |c| {
            ds.class_names[c].clone()
        }));
    }
    write_jsonl(&dir.join(CAPTIONS_FILE), &captions)?;
    write_jsonl(&dir.join(GT_FILE), &gts)?;
    write_json(
        &dir.join(SYNTH_FILE),
        &SynthInfo {
            spec: ds.spec.clone(),
            class_names: ds.class_names.clone(),
        },
    )
}

pub fn read_captions(data_dir: &Path) -> Result<Vec<CaptionRecord>> {
    read_jsonl(&data_dir.join(CAPTIONS_FILE))
}
