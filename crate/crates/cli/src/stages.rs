use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use capg_core::evalkit::{evaluate, EvalConfig};
use capg_core::grounding::{
    class_activation_map, mine_vocabulary, ActivationMap, CamConfig, Caption, Exclusion, GroundingParams,
    Vocabulary,
};
use capg_core::io::{
    export_heatmap, fmap_path, read_captions, read_fmap, read_grounding, read_json, read_jsonl, read_mil,
    read_vocab, write_grounding, write_json, write_jsonl, write_mil, write_synth, write_trace, BoxRecord,
    CaptionRecord, RunManifest, SynthInfo, SYNTH_FILE,
};
use capg_core::milhead::{detect_with_maps, extract_labels, match_boxes, train_mil, DetectConfig, InstanceBag, MilTrainConfig};
use capg_core::numerics::Grid3D;
use capg_core::objectness::{grid_proposals, score_proposals, select_pseudo_gt, BBox};
use capg_core::synth::synth_generate;
use capg_core::training::{evaluate_retrieval, train, TraceRow};
use capg_core::Sample;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::args::*;

pub const GROUNDING_FILE: &str = "grounding.gpar";
pub const VOCAB_FILE: &str = "vocab.tsv";
pub const LOSS_FILE: &str = "loss.csv";
pub const MINED_FILE: &str = "mined.json";
pub const MIL_FILE: &str = "mil.mpar";

/// What a stage reports: a JSON summary plus its manifest.
pub struct StageOutput {
    pub summary: Value,
    pub manifest: RunManifest,
    pub manifest_dir: PathBuf,
}

fn parent_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

fn ensure_parent(path: &Path) -> Result<()> {
    let dir = parent_dir(path);
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

/// Class list next to a MIL checkpoint, in class order.
pub fn mil_classes_path(mil: &Path) -> PathBuf {
    mil.with_extension("classes.json")
}

fn in_split(rec: &CaptionRecord, split: &str) -> bool {
    split == "all" || rec.split.as_deref().unwrap_or("train") == split
}

fn load_split(data: &Path, split: &str) -> Result<Vec<CaptionRecord>> {
    let recs: Vec<CaptionRecord> = read_captions(data)?.into_iter().filter(|r| in_split(r, split)).collect();
    ensure!(!recs.is_empty(), "no images in split {split:?} of {}", data.display());
    Ok(recs)
}

struct Model {
    params: GroundingParams,
    vocab: Vocabulary,
}

fn load_model(dir: &Path) -> Result<Model> {
    let params = read_grounding(&dir.join(GROUNDING_FILE))?;
    let vocab = read_vocab(&dir.join(VOCAB_FILE))?;
    ensure!(
        params.vocab_size() == vocab.len(),
        "checkpoint has {} words but the vocabulary has {}",
        params.vocab_size(),
        vocab.len()
    );
    Ok(Model { params, vocab })
}

/// Explicit classes first, then the corpus classes, then mined words.
fn resolve_classes(args: &ModelArgs) -> Result<Vec<String>> {
    if !args.classes.is_empty() {
        return Ok(args.classes.clone());
    }
    let synth = args.data.join(SYNTH_FILE);
    if synth.exists() {
        return Ok(read_json::<SynthInfo>(&synth)?.class_names);
    }
    let mined = args.model.join(MINED_FILE);
    if mined.exists() {
        let words: Vec<capg_core::grounding::MinedWord> = read_json(&mined)?;
        return Ok(words.into_iter().map(|w| w.word).collect());
    }
    bail!("no class words: pass --classes, or run mine-vocab first")
}

fn class_indices(vocab: &Vocabulary, classes: &[String]) -> Result<Vec<usize>> {
    classes
        .iter()
        .map(|c| vocab.index_of(c).with_context(|| format!("class word {c:?} is not in the vocabulary")))
        .collect()
}

struct Proposals {
    grid: Vec<BBox>,
    per_image: Option<HashMap<String, Vec<BBox>>>,
}

impl Proposals {
    fn load(args: &ProposalArgs) -> Result<Self> {
        let per_image = match &args.proposals {
            Some(path) => {
                let recs: Vec<BoxRecord> = read_jsonl(path)?;
                let mut map = HashMap::new();
                for r in recs {
                    let boxes = r.to_boxes(|_| None)?;
                    map.insert(r.image_id, boxes);
                }
                Some(map)
            }
            None => None,
        };
        let grid = if per_image.is_none() {
            let n = args.grid_steps as f64;
            let scales: Vec<f64> = args.scale_cells.iter().map(|c| c / n).collect();
            grid_proposals(args.grid_steps, &scales, &args.aspects)?
        } else {
            Vec::new()
        };
        Ok(Self { grid, per_image })
    }

    fn for_image(&self, id: &str) -> Result<&[BBox]> {
        match &self.per_image {
            None => Ok(&self.grid),
            Some(map) => match map.get(id) {
                Some(b) if !b.is_empty() => Ok(b),
                _ => bail!("no proposals for image {id}"),
            },
        }
    }

    fn describe(&self, args: &ProposalArgs) -> Value {
        match &args.proposals {
            Some(p) => json!({ "file": path_str(p) }),
            None => json!({
                "grid_steps": args.grid_steps,
                "scale_cells": args.scale_cells,
                "aspects": args.aspects,
                "boxes": self.grid.len(),
            }),
        }
    }
}

fn class_maps(fmap: &Grid3D, params: &GroundingParams, words: &[usize], cam: &CamConfig) -> Result<Vec<ActivationMap>> {
    Ok(words
        .iter()
        .map(|&w| class_activation_map(fmap, w, params, cam))
        .collect::<capg_core::Result<_>>()?)
}

fn word_of(vocab: &Vocabulary) -> impl Fn(usize) -> String + '_ {
    |i| vocab.word(i).to_string()
}

pub fn synth(args: &SynthArgs, seed: u64) -> Result<StageOutput> {
    let spec = args.spec(seed);
    let ds = synth_generate(&spec)?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    write_synth(&ds, &args.out)?;
    let mut manifest = RunManifest::new("synth", serde_json::to_value(&spec)?);
    manifest.seeds.insert("synth".into(), seed);
    manifest.outputs.insert("corpus".into(), path_str(&args.out));
    Ok(StageOutput {
        summary: json!({
            "out": path_str(&args.out),
            "train_scenes": spec.train_scenes,
            "test_scenes": spec.test_scenes,
            "classes": ds.class_names,
        }),
        manifest,
        manifest_dir: args.out.clone(),
    })
}

fn tail_mean(trace: &[TraceRow], f: impl Fn(&TraceRow) -> f64) -> f64 {
    let tail = &trace[trace.len().saturating_sub(100)..];
    if tail.is_empty() {
        return f64::NAN;
    }
    tail.iter().map(f).sum::<f64>() / tail.len() as f64
}

fn load_samples(data: &Path, recs: &[CaptionRecord], vocab: &Vocabulary, max_len: usize) -> Result<Vec<Sample>> {
    recs.par_iter()
        .map(|r| {
            Ok(Sample {
                fmap: read_fmap(&fmap_path(data, &r.image_id))?,
                caption: Caption::encode(&r.image_id, &r.caption, vocab, max_len)
                    .with_context(|| format!("caption of {}", r.image_id))?,
            })
        })
        .collect()
}

pub fn train_sim(args: &TrainArgs, seed: u64) -> Result<StageOutput> {
    let train_recs = load_split(&args.data, "train")?;
    let vocab = Vocabulary::from_texts(train_recs.iter().map(|r| r.caption.as_str()));
    let samples = load_samples(&args.data, &train_recs, &vocab, args.max_caption_len)?;
    let feat_dim = samples[0].fmap.channels();

    let mut init = GroundingParams::init_uniform(vocab.len(), feat_dim, args.embed_dim, seed);
    if let Some(path) = &args.embeddings {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let hits = init.import_embeddings(&text, &vocab)?;
        log::info!("initialized {hits} of {} word embeddings from {}", vocab.len(), path.display());
    }
    let cfg = args.config(seed);
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let ckpt = args.out.join(GROUNDING_FILE);
    let loss_path = args.out.join(LOSS_FILE);
    write_vocab_file(&args.out, &vocab)?;

    let started = Instant::now();
    let outcome = match train(&samples, init, &cfg, |row, _| {
        if row.step % 100 == 0 {
            log::info!("step {} loss {:.4} top1 {:.3}", row.step, row.loss, row.retrieval_top1);
        }
    }) {
        Ok(o) => o,
        Err(fail) => {
            write_grounding(&ckpt, &fail.last_good)?;
            write_trace(&loss_path, &fail.trace)?;
            return Err(fail).context(format!("last good parameters saved to {}", ckpt.display()));
        }
    };
    let train_ms = started.elapsed().as_secs_f64() * 1e3;

    let mut params = outcome.params;
    params.round_to_f32();
    write_grounding(&ckpt, &params)?;
    write_trace(&loss_path, &outcome.trace)?;

    let train_top1 = evaluate_retrieval(&samples, &params, cfg.batch_size, args.eval_batches, seed)?;
    let test_recs = load_split(&args.data, "test").unwrap_or_default();
    let test_top1 = if test_recs.len() >= cfg.batch_size {
        let test = load_samples(&args.data, &test_recs, &vocab, args.max_caption_len)?;
        Some(evaluate_retrieval(&test, &params, cfg.batch_size, args.eval_batches, seed)?)
    } else {
        None
    };

    let mut manifest = RunManifest::new("train-sim", serde_json::to_value(&cfg)?);
    manifest.config["embed_dim"] = json!(args.embed_dim);
    manifest.config["max_caption_len"] = json!(args.max_caption_len);
    manifest.seeds.insert("train".into(), seed);
    manifest.inputs.insert("data".into(), path_str(&args.data));
    if let Some(p) = &args.embeddings {
        manifest.inputs.insert("embeddings".into(), path_str(p));
    }
    manifest.outputs.insert("checkpoint".into(), path_str(&ckpt));
    manifest.outputs.insert("vocabulary".into(), path_str(&args.out.join(VOCAB_FILE)));
    manifest.outputs.insert("loss_trace".into(), path_str(&loss_path));
    manifest.timings_ms.insert("train".into(), train_ms);
    Ok(StageOutput {
        summary: json!({
            "checkpoint": path_str(&ckpt),
            "vocabulary_size": vocab.len(),
            "steps": cfg.steps,
            "final_loss": tail_mean(&outcome.trace, |r| r.loss),
            "final_batch_top1": tail_mean(&outcome.trace, |r| r.retrieval_top1),
            "train_retrieval_top1": train_top1,
            "test_retrieval_top1": test_top1,
        }),
        manifest,
        manifest_dir: args.out.clone(),
    })
}

fn write_vocab_file(dir: &Path, vocab: &Vocabulary) -> Result<()> {
    Ok(capg_core::io::write_vocab(&dir.join(VOCAB_FILE), vocab)?)
}

pub fn mine_vocab(args: &MineArgs, seed: u64) -> Result<StageOutput> {
    let model = load_model(&args.model)?;
    ensure!(
        args.k <= model.vocab.len(),
        "cannot keep {} words from a vocabulary of {}",
        args.k,
        model.vocab.len()
    );
    let exclusion = if args.exclude.is_empty() {
        Exclusion::none()
    } else {
        Exclusion {
            seeds: args.exclude.clone(),
            threshold: args.exclude_threshold,
        }
    };
    let mined = mine_vocabulary(&model.vocab, &model.params, args.k, args.min_freq, &exclusion);
    let out = args.out.clone().unwrap_or_else(|| args.model.join(MINED_FILE));
    ensure_parent(&out)?;
    write_json(&out, &mined)?;
    let config = json!({
        "k": args.k,
        "min_freq": args.min_freq,
        "exclusion": exclusion,
    });
    let mut manifest = RunManifest::new("mine-vocab", config);
    manifest.seeds.insert("unused".into(), seed);
    manifest.inputs.insert("model".into(), path_str(&args.model));
    manifest.outputs.insert("mined".into(), path_str(&out));
    Ok(StageOutput {
        summary: json!({
            "out": path_str(&out),
            "words": mined.iter().map(|m| m.word.as_str()).collect::<Vec<_>>(),
        }),
        manifest,
        manifest_dir: parent_dir(&out),
    })
}

pub fn gen_cam(args: &GenCamArgs, seed: u64) -> Result<StageOutput> {
    let model = load_model(&args.model.model)?;
    let classes = resolve_classes(&args.model)?;
    let words = class_indices(&model.vocab, &classes)?;
    let cam = args.cam.config();
    let ids: Vec<String> = if args.images.is_empty() {
        load_split(&args.model.data, &args.split)?
            .into_iter()
            .take(args.limit)
            .map(|r| r.image_id)
            .collect()
    } else {
        args.images.clone()
    };
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let written: Vec<Vec<String>> = ids
        .par_iter()
        .map(|id| {
            let fmap = read_fmap(&fmap_path(&args.model.data, id))?;
            let maps = class_maps(&fmap, &model.params, &words, &cam)?;
            let mut files = Vec::new();
            for (map, class) in maps.iter().zip(&classes) {
                let path = args.out.join(format!("{id}_{class}.pgm"));
                export_heatmap(map.heat(), &path)?;
                files.push(path_str(&path));
            }
            Ok(files)
        })
        .collect::<Result<_>>()?;
    let mut manifest = RunManifest::new("gen-cam", json!({ "cam": cam, "classes": classes, "images": ids }));
    manifest.seeds.insert("unused".into(), seed);
    manifest.inputs.insert("data".into(), path_str(&args.model.data));
    manifest.inputs.insert("model".into(), path_str(&args.model.model));
    manifest.outputs.insert("heatmaps".into(), path_str(&args.out));
    Ok(StageOutput {
        summary: json!({ "out": path_str(&args.out), "heatmaps": written.concat() }),
        manifest,
        manifest_dir: args.out.clone(),
    })
}

/// Boxes per image for one split, computed from the class activation maps.
fn per_image_boxes(
    model: &ModelArgs,
    cam_args: &CamArgs,
    prop_args: &ProposalArgs,
    split: &str,
    f: impl Fn(&[ActivationMap], &[BBox]) -> capg_core::Result<Vec<BBox>> + Sync,
) -> Result<(Vec<BoxRecord>, Value)> {
    let m = load_model(&model.model)?;
    let classes = resolve_classes(model)?;
    let words = class_indices(&m.vocab, &classes)?;
    let cam = cam_args.config();
    let props = Proposals::load(prop_args)?;
    let recs = load_split(&model.data, split)?;
    let out = recs
        .par_iter()
        .map(|r| {
            let fmap = read_fmap(&fmap_path(&model.data, &r.image_id))?;
            let maps = class_maps(&fmap, &m.params, &words, &cam)?;
            let boxes = f(&maps, props.for_image(&r.image_id)?)
                .with_context(|| format!("image {}", r.image_id))?;
            Ok(BoxRecord::from_boxes(&r.image_id, &boxes, word_of(&m.vocab)))
        })
        .collect::<Result<Vec<_>>>()?;
    let config = json!({
        "split": split,
        "classes": classes,
        "cam": cam,
        "proposals": props.describe(prop_args),
    });
    Ok((out, config))
}

fn box_stage(command: &str, out: &Path, records: &[BoxRecord], mut config: Value, extra: Value, model: &ModelArgs, seed: u64) -> Result<StageOutput> {
    ensure_parent(out)?;
    write_jsonl(out, records)?;
    if let (Some(c), Some(e)) = (config.as_object_mut(), extra.as_object()) {
        c.extend(e.clone());
    }
    let mut manifest = RunManifest::new(command, config);
    manifest.seeds.insert("unused".into(), seed);
    manifest.inputs.insert("data".into(), path_str(&model.data));
    manifest.inputs.insert("model".into(), path_str(&model.model));
    manifest.outputs.insert("boxes".into(), path_str(out));
    Ok(StageOutput {
        summary: json!({
            "out": path_str(out),
            "images": records.len(),
            "boxes": records.iter().map(|r| r.boxes.len()).sum::<usize>(),
        }),
        manifest,
        manifest_dir: parent_dir(out),
    })
}

pub fn score_boxes(args: &ScoreBoxesArgs, seed: u64) -> Result<StageOutput> {
    let cfg = args.score.config();
    cfg.validate()?;
    let keep = args.keep;
    let (records, config) = per_image_boxes(&args.model, &args.cam, &args.proposals, &args.split, |maps, props| {
        let mut scored = score_proposals(maps, props, &cfg)?;
        scored.sort_by(|a, b| b.score.total_cmp(&a.score));
        scored.truncate(keep);
        Ok(scored)
    })?;
    let extra = json!({ "scoring": cfg, "keep": keep });
    box_stage("score-boxes", &args.out, &records, config, extra, &args.model, seed)
}

pub fn select_pgt(args: &SelectArgs, seed: u64) -> Result<StageOutput> {
    let cfg = args.score.config();
    cfg.validate()?;
    let (records, config) = per_image_boxes(&args.model, &args.cam, &args.proposals, &args.split, |maps, props| {
        select_pseudo_gt(maps, props, &cfg)
    })?;
    box_stage("select-pgt", &args.out, &records, config, json!({ "scoring": cfg }), &args.model, seed)
}

pub fn train_mil_stage(args: &TrainMilArgs, seed: u64) -> Result<StageOutput> {
    let classes = resolve_classes(&args.model)?;
    let props = Proposals::load(&args.proposals)?;
    let pgt: HashMap<String, Vec<BBox>> = read_jsonl::<BoxRecord>(&args.pgt)?
        .into_iter()
        .map(|r| Ok((r.image_id.clone(), r.to_boxes(|_| None)?)))
        .collect::<Result<_>>()?;
    let recs = load_split(&args.model.data, &args.split)?;
    let bags: Vec<Option<(InstanceBag, Vec<f64>)>> = recs
        .par_iter()
        .map(|r| {
            let Some(pseudo) = pgt.get(&r.image_id).filter(|p| !p.is_empty()) else {
                return Ok(None);
            };
            let mut matched = match_boxes(props.for_image(&r.image_id)?, pseudo);
            if matched.is_empty() {
                matched = pseudo.clone();
            }
            let fmap = read_fmap(&fmap_path(&args.model.data, &r.image_id))?;
            let bag = InstanceBag::from_boxes(&r.image_id, &fmap, matched)?;
            Ok(Some((bag, extract_labels(&r.caption, &classes))))
        })
        .collect::<Result<_>>()?;
    let without_pgt = bags.iter().filter(|b| b.is_none()).count();
    let bags: Vec<(InstanceBag, Vec<f64>)> = bags.into_iter().flatten().collect();
    ensure!(!bags.is_empty(), "no image of split {:?} has pseudo ground-truth", args.split);
    let feat_dim = bags[0].0.features[0].len();
    let cfg = MilTrainConfig {
        learning_rate: args.lr,
        steps: args.steps,
        seed,
    };
    let started = Instant::now();
    let outcome = train_mil(&bags, classes.len(), feat_dim, &cfg)?;
    let train_ms = started.elapsed().as_secs_f64() * 1e3;
    let mut params = outcome.params;
    params.round_to_f32();

    let out = args.out.clone().unwrap_or_else(|| args.model.model.join(MIL_FILE));
    ensure_parent(&out)?;
    write_mil(&out, &params)?;
    write_json(&mil_classes_path(&out), &classes)?;
    let config = json!({
        "mil": cfg,
        "split": args.split,
        "classes": classes,
        "proposals": props.describe(&args.proposals),
    });
    let mut manifest = RunManifest::new("train-mil", config);
    manifest.seeds.insert("mil".into(), seed);
    manifest.inputs.insert("data".into(), path_str(&args.model.data));
    manifest.inputs.insert("pgt".into(), path_str(&args.pgt));
    manifest.outputs.insert("checkpoint".into(), path_str(&out));
    manifest.outputs.insert("classes".into(), path_str(&mil_classes_path(&out)));
    manifest.timings_ms.insert("train".into(), train_ms);
    Ok(StageOutput {
        summary: json!({
            "checkpoint": path_str(&out),
            "bags": bags.len(),
            "skipped_unlabeled": outcome.skipped,
            "skipped_without_pgt": without_pgt,
            "initial_loss": outcome.losses.first(),
            "final_loss": outcome.losses.last(),
        }),
        manifest,
        manifest_dir: parent_dir(&out),
    })
}

pub fn detect_stage(args: &DetectArgs, seed: u64) -> Result<StageOutput> {
    let m = load_model(&args.model.model)?;
    let mil_path = match (&args.mil, args.no_mil) {
        (_, true) => None,
        (Some(p), false) => Some(p.clone()),
        (None, false) => Some(args.model.model.join(MIL_FILE)).filter(|p| p.exists()),
    };
    let (mil, classes) = match &mil_path {
        Some(p) => (Some(read_mil(p)?), read_json::<Vec<String>>(&mil_classes_path(p))?),
        None => {
            log::warn!("detecting without a box classifier; class scores are uniform");
            (None, resolve_classes(&args.model)?)
        }
    };
    let words = class_indices(&m.vocab, &classes)?;
    let cfg = DetectConfig {
        cam: args.cam.config(),
        scoring: args.score.config(),
        class_words: words.clone(),
        top_k: args.score.top_k,
    };
    let props = Proposals::load(&args.proposals)?;
    let recs = load_split(&args.model.data, &args.split)?;
    let records = recs
        .par_iter()
        .map(|r| {
            let fmap = read_fmap(&fmap_path(&args.model.data, &r.image_id))?;
            let maps = class_maps(&fmap, &m.params, &words, &cfg.cam)?;
            let dets = detect_with_maps(&fmap, props.for_image(&r.image_id)?, &maps, mil.as_ref(), &cfg)
                .with_context(|| format!("image {}", r.image_id))?;
            Ok(BoxRecord::from_boxes(&r.image_id, &dets, word_of(&m.vocab)))
        })
        .collect::<Result<Vec<_>>>()?;
    let config = json!({
        "detect": cfg,
        "split": args.split,
        "classes": classes,
        "proposals": props.describe(&args.proposals),
    });
    let mut out = box_stage("detect", &args.out, &records, config, json!({}), &args.model, seed)?;
    if let Some(p) = &mil_path {
        out.manifest.inputs.insert("mil".into(), path_str(p));
    }
    Ok(out)
}

pub fn evaluate_stage(args: &EvalArgs, seed: u64) -> Result<StageOutput> {
    let preds: Vec<BoxRecord> = read_jsonl(&args.pred)?;
    let gts: Vec<BoxRecord> = read_jsonl(&args.gt)?;

    let mut names: Vec<String> = Vec::new();
    let mut ids: BTreeMap<String, usize> = BTreeMap::new();
    for r in gts.iter().chain(&preds) {
        for c in r.classes.iter().flatten() {
            if !ids.contains_key(c) {
                ids.insert(c.clone(), names.len());
                names.push(c.clone());
            }
        }
    }
    let lookup = |w: &str| ids.get(w).copied();

    let mut pred_by_id: HashMap<&str, Vec<BBox>> = HashMap::new();
    for p in &preds {
        ensure!(
            pred_by_id.insert(&p.image_id, p.to_boxes(lookup)?).is_none(),
            "image {} appears twice in {}",
            p.image_id,
            args.pred.display()
        );
    }
    let mut det_lists = Vec::new();
    let mut gt_lists = Vec::new();
    let mut unmatched = pred_by_id.keys().copied().collect::<std::collections::BTreeSet<_>>();
    for g in &gts {
        let dets = pred_by_id.get(g.image_id.as_str());
        if dets.is_none() && !args.all_gt {
            continue;
        }
        unmatched.remove(g.image_id.as_str());
        gt_lists.push(g.to_boxes(lookup)?);
        det_lists.push(dets.cloned().unwrap_or_default());
    }
    if !unmatched.is_empty() {
        log::warn!("{} predicted images have no ground truth and are ignored", unmatched.len());
    }
    ensure!(!gt_lists.is_empty(), "no predicted image has ground truth in {}", args.gt.display());

    let cfg = EvalConfig {
        iou_thresh: args.iou,
        class_aware: !args.class_agnostic,
        interpolation: args.interpolation(),
        pr_ks: args.pr_ks.clone(),
        ar_ks: args.ar_ks.clone(),
    };
    let report = evaluate(&det_lists, &gt_lists, &cfg, |c| names[c].clone());
    ensure_parent(&args.out)?;
    write_json(&args.out, &report)?;
    let mut manifest = RunManifest::new("evaluate", serde_json::to_value(&cfg)?);
    manifest.seeds.insert("unused".into(), seed);
    manifest.inputs.insert("pred".into(), path_str(&args.pred));
    manifest.inputs.insert("gt".into(), path_str(&args.gt));
    manifest.outputs.insert("metrics".into(), path_str(&args.out));
    Ok(StageOutput {
        summary: serde_json::to_value(&report)?,
        manifest,
        manifest_dir: parent_dir(&args.out),
    })
}
