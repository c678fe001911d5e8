//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

#[path = "../../core/tests/support/oracle.rs"]
mod oracle;
#[path = "../../core/tests/support/toy_cases.rs"]
mod toy_cases;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use capg_core::evalkit::MetricsReport;
use capg_core::grounding::{ActivationMap, Caption, GroundingParams, MinedWord, DEFAULT_SMOOTH_KERNEL};
use capg_core::milhead::{mil_gradients, InstanceBag, MilParams};
use capg_core::numerics::{gaussian_smooth, Grid2D, Grid3D, IntegralImage, PixelRect};
use capg_core::objectness::{
    box_objectness, grid_proposals, nms, score_proposals, strip_thickness, BBox, Criterion, ScoringConfig,
};
use capg_core::synth::SynthSpec;
use capg_core::training::{batch_gradients, TripletBatch};
use capg_core::Sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

type Outcome = Result<String, String>;

struct Check {
    id: &'static str,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn main() {
    let criteria: [Check; 8] = [
        Check { id: "1", name: "gradient fidelity", budget: Duration::from_secs(30), run: gradient_fidelity },
        Check { id: "2", name: "integral-image oracle", budget: Duration::from_secs(5), run: integral_oracle },
        Check { id: "3", name: "step-edge exactness", budget: Duration::from_secs(1), run: step_edge },
        Check { id: "4", name: "criterion ordering", budget: Duration::from_secs(120), run: criterion_ordering },
        Check { id: "5", name: "end-to-end learning", budget: Duration::from_secs(300), run: end_to_end },
        Check { id: "6", name: "vocabulary mining", budget: Duration::from_secs(10), run: vocabulary_mining },
        Check { id: "7", name: "metric-kit oracle", budget: Duration::from_secs(10), run: metric_oracle },
        Check { id: "8", name: "pipeline determinism", budget: Duration::from_secs(300), run: determinism },
    ];
    let mut failed = 0;
    for c in &criteria {
        let started = Instant::now();
        let outcome = (c.run)();
        let took = started.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) if took <= c.budget => (true, d),
            Ok(d) => (false, format!("{d}; over time budget")),
            Err(d) => (false, d),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "{} [{}] {}: {} ({:.1} s of {} s)",
            if ok { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            detail,
            took.as_secs_f64(),
            c.budget.as_secs()
        );
    }
    println!("acceptance: {} passed, {} failed", criteria.len() - failed, failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn uniform(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn grounding_instance(rng: &mut ChaCha8Rng) -> (Vec<Sample>, GroundingParams, f64) {
    let (batch, n, d, e, l, vocab) = (
        rng.gen_range(2..5),
        rng.gen_range(2..4),
        rng.gen_range(2..5),
        rng.gen_range(2..4),
        rng.gen_range(1..4),
        rng.gen_range(3..7),
    );
    let mut params = GroundingParams::zeros(vocab, d, e);
    for t in params.tensors_mut() {
        let v = uniform(rng, t.len());
        t.copy_from_slice(&v);
    }
    let samples = (0..batch)
        .map(|b| {
            let fmap = Grid3D::new(n, n, d, uniform(rng, n * n * d)).unwrap();
            let tokens = (0..l).map(|_| rng.gen_range(0..vocab)).collect();
            Sample {
                fmap,
                caption: Caption::new(format!("img{b}"), tokens, "", vocab).unwrap(),
            }
        })
        .collect();
    (samples, params, rng.gen_range(0.05..1.0))
}

/// Hinge signs and negative choices stay fixed within the difference step.
fn hinges_stable(sims: &[Vec<f64>], negatives: &[usize], margin: f64) -> bool {
    sims.iter().enumerate().all(|(a, row)| {
        let gap = row[negatives[a]] - row[a] + margin;
        let mining_gap = row
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != a && j != negatives[a])
            .map(|(_, s)| (s - row[negatives[a]]).abs().min((s - row[a]).abs()))
            .fold(f64::INFINITY, f64::min);
        gap.abs() > 1e-3 && mining_gap > 1e-3
    })
}

fn gradient_fidelity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut triplet, mut triplet_bad, mut coords) = (0, 0, 0);
    while triplet < 100 {
        let (samples, params, margin) = grounding_instance(&mut rng);
        let batch = TripletBatch::new(samples.iter().collect()).map_err(|e| e.to_string())?;
        let out = batch_gradients(&batch, &params, margin).map_err(|e| e.to_string())?;
        if !hinges_stable(&out.sims, &out.negatives, margin) {
            continue;
        }
        let fmaps: Vec<&Grid3D> = samples.iter().map(|s| &s.fmap).collect();
        let caps: Vec<&[usize]> = samples.iter().map(|s| s.caption.tokens.as_slice()).collect();
        let bad = oracle::compare_grounding_gradients(&params, out.grads.params(), |p| {
            oracle::triplet_loss_fixed(&fmaps, &caps, &out.negatives, margin, p)
        });
        coords += params.tensors().iter().map(|t| t.len()).sum::<usize>();
        triplet_bad += usize::from(!bad.is_empty());
        triplet += 1;
    }

    let (mut mil, mut mil_bad) = (0, 0);
    let h = oracle::FD_STEP;
    while mil < 100 {
        let (p, c, d) = (rng.gen_range(1..6), rng.gen_range(2..6), rng.gen_range(1..6));
        let bag = InstanceBag {
            image_id: "bag".into(),
            boxes: vec![BBox::new(0.0, 0.0, 1.0, 1.0).unwrap(); p],
            features: (0..p).map(|_| uniform(&mut rng, d)).collect(),
        };
        let mut y: Vec<f64> = (0..c).map(|_| f64::from(u8::from(rng.gen_bool(0.5)))).collect();
        let total: f64 = y.iter().sum();
        if total == 0.0 {
            continue;
        }
        y.iter_mut().for_each(|v| *v /= total);
        let (w, b) = (uniform(&mut rng, c * d), uniform(&mut rng, c));
        let params = MilParams::from_parts(c, d, w.clone(), b.clone()).unwrap();
        let scores = params.scores(&bag.features);
        let gap = (0..c)
            .map(|k| {
                let mut col: Vec<f64> = scores.iter().map(|r| r[k]).collect();
                col.sort_by(|x, y| y.total_cmp(x));
                if col.len() > 1 { col[0] - col[1] } else { f64::INFINITY }
            })
            .fold(f64::INFINITY, f64::min);
        if gap < 1e-2 {
            continue;
        }
        let (_, grads) = mil_gradients(&params, &bag, &y).map_err(|e| e.to_string())?;
        let loss = |w: &[f64], b: &[f64]| oracle::mil_loss(&bag.features, &y, w, b);
        let mut ok = true;
        for i in 0..w.len() {
            let (mut up, mut down) = (w.clone(), w.clone());
            up[i] += h;
            down[i] -= h;
            ok &= oracle::within_tol(grads.weights[i], (loss(&up, &b) - loss(&down, &b)) / (2.0 * h));
        }
        for i in 0..b.len() {
            let (mut up, mut down) = (b.clone(), b.clone());
            up[i] += h;
            down[i] -= h;
            ok &= oracle::within_tol(grads.bias[i], (loss(&w, &up) - loss(&w, &down)) / (2.0 * h));
        }
        mil_bad += usize::from(!ok);
        mil += 1;
    }
    check(
        triplet_bad == 0 && mil_bad == 0,
        format!(
            "triplet {triplet} instances ({coords} coordinates), {triplet_bad} mismatched; \
             MIL {mil} instances, {mil_bad} mismatched"
        ),
    )
}

fn brute_mean(g: &Grid2D, r: &PixelRect) -> f64 {
    let mut s = 0.0;
    for row in r.row0..r.row1 {
        for col in r.col0..r.col1 {
            s += g.get(row, col);
        }
    }
    s / r.area() as f64
}

fn integral_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    let mut compared = 0;
    for _ in 0..10_000 {
        let (rows, cols) = (rng.gen_range(1..49), rng.gen_range(1..49));
        let g = Grid2D::from_fn(rows, cols, |_, _| rng.gen_range(1.0..2.0));
        let ii = IntegralImage::new(&g);
        let (r0, r1) = (rng.gen_range(0..rows), rng.gen_range(0..rows));
        let (c0, c1) = (rng.gen_range(0..cols), rng.gen_range(0..cols));
        let rect = PixelRect::new(r0.min(r1), r0.max(r1) + 1, c0.min(c1), c0.max(c1) + 1);
        // the rect itself plus its four inner and outer edge strips
        let tw = strip_thickness(rect.width(), 0.1);
        let th = strip_thickness(rect.height(), 0.1);
        let strips = [
            PixelRect::new(rect.row0, rect.row1, rect.col0, rect.col0 + tw),
            PixelRect::new(rect.row0, rect.row1, rect.col0.saturating_sub(tw), rect.col0),
            PixelRect::new(rect.row0, rect.row1, rect.col1 - tw, rect.col1),
            PixelRect::new(rect.row0, rect.row1, rect.col1, (rect.col1 + tw).min(cols)),
            PixelRect::new(rect.row0, rect.row0 + th, rect.col0, rect.col1),
            PixelRect::new(rect.row0.saturating_sub(th), rect.row0, rect.col0, rect.col1),
            PixelRect::new(rect.row1 - th, rect.row1, rect.col0, rect.col1),
            PixelRect::new(rect.row1, (rect.row1 + th).min(rows), rect.col0, rect.col1),
        ];
        for r in std::iter::once(&rect).chain(strips.iter()).filter(|r| r.area() > 0) {
            let got = ii.rect_mean(r).map_err(|e| e.to_string())?;
            let want = brute_mean(&g, r);
            worst = worst.max((got - want).abs() / want.abs());
            compared += 1;
        }
    }
    check(
        worst <= 1e-6,
        format!("10000 maps, {compared} rect and strip means, worst relative error {worst:.2e}"),
    )
}

fn step_map(rows: usize, cols: usize, truth: &PixelRect) -> Grid2D {
    Grid2D::from_fn(rows, cols, |r, c| {
        f64::from(u8::from((truth.row0..truth.row1).contains(&r) && (truth.col0..truth.col1).contains(&c)))
    })
}

fn step_edge() -> Outcome {
    let (rows, cols) = (200, 200);
    let truth = PixelRect::new(50, 150, 60, 140);
    let maps = [ActivationMap::new(0, step_map(rows, cols, &truth))];
    let cfg = ScoringConfig::default();
    let truth_box = BBox::from_pixel_rect(&truth, rows, cols).map_err(|e| e.to_string())?;
    let best = box_objectness(&maps, &truth_box, &cfg).map_err(|e| e.to_string())?.0;
    if best != cfg.beta + 1.0 {
        return Err(format!("true box scored {best}, expected exactly {}", cfg.beta + 1.0));
    }
    let t = strip_thickness(truth.width().min(truth.height()), cfg.margin_fraction) as isize;
    let shifts: Vec<isize> = (-3..=3).map(|k| k * t).collect();
    let (mut displaced, mut beaten) = (0, 0);
    for &a in &shifts {
        for &b in &shifts {
            for &c in &shifts {
                for &d in &shifts {
                    if (a, b, c, d) == (0, 0, 0, 0) {
                        continue;
                    }
                    let at = |v: usize, s: isize| (v as isize + s) as usize;
                    let rect = PixelRect::new(at(truth.row0, a), at(truth.row1, b), at(truth.col0, c), at(truth.col1, d));
                    let bx = BBox::from_pixel_rect(&rect, rows, cols).map_err(|e| e.to_string())?;
                    let s = box_objectness(&maps, &bx, &cfg).map_err(|e| e.to_string())?.0;
                    displaced += 1;
                    beaten += usize::from(s < best);
                }
            }
        }
    }
    check(
        beaten == displaced,
        format!("true box {best} = beta + 1; strictly above {beaten} of {displaced} displaced boxes"),
    )
}

/// Object at a proposal, plus a brighter distractor with sharp edges on
/// three sides whose fourth side fades out linearly.
fn leak_scene(rng: &mut ChaCha8Rng, props: &[BBox], raster: usize) -> (BBox, [Grid2D; 2]) {
    let object = props[rng.gen_range(0..props.len())];
    let obj = object.to_pixel_rect(raster, raster);
    loop {
        let core = props[rng.gen_range(0..props.len())].to_pixel_rect(raster, raster);
        let side = rng.gen_range(0..4);
        let ramp = rng.gen_range(raster / 5..raster / 2);
        let foot = match side {
            0 => PixelRect::new(core.row0, core.row1, core.col0.saturating_sub(ramp), core.col1),
            1 => PixelRect::new(core.row0, core.row1, core.col0, (core.col1 + ramp).min(raster)),
            2 => PixelRect::new(core.row0.saturating_sub(ramp), core.row1, core.col0, core.col1),
            _ => PixelRect::new(core.row0, (core.row1 + ramp).min(raster), core.col0, core.col1),
        };
        let gap = 8;
        let apart = foot.row1 + gap <= obj.row0
            || obj.row1 + gap <= foot.row0
            || foot.col1 + gap <= obj.col0
            || obj.col1 + gap <= foot.col0;
        if !apart {
            continue;
        }
        let v = rng.gen_range(1.2..2.0);
        let distractor = Grid2D::from_fn(raster, raster, |r, c| {
            if !(foot.row0..foot.row1).contains(&r) || !(foot.col0..foot.col1).contains(&c) {
                return 0.0;
            }
            let beyond = match side {
                0 => core.col0.saturating_sub(c),
                1 => (c + 1).saturating_sub(core.col1),
                2 => core.row0.saturating_sub(r),
                _ => (r + 1).saturating_sub(core.row1),
            };
            v * (1.0 - beyond as f64 / ramp as f64).max(0.0)
        });
        return (object, [step_map(raster, raster, &obj), distractor]);
    }
}

fn top1(boxes: &[BBox]) -> BBox {
    let mut best = boxes[0];
    for b in &boxes[1..] {
        if b.score > best.score {
            best = *b;
        }
    }
    best
}

fn criterion_ordering() -> Outcome {
    let raster = 448;
    let props = grid_proposals(10, &[0.2, 0.3, 0.4], &[1.0]).map_err(|e| e.to_string())?;
    let configs = [Criterion::MinEdgeGradient, Criterion::AverageActivation, Criterion::InsideOutsideContrast]
        .map(|criterion| ScoringConfig { criterion, ..ScoringConfig::default() });
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let scenes = 500;
    let mut hits = [0usize; 3];
    for _ in 0..scenes {
        let (object, heats) = leak_scene(&mut rng, &props, raster);
        let maps: Vec<ActivationMap> = heats
            .iter()
            .enumerate()
            .map(|(i, h)| Ok(ActivationMap::new(i, gaussian_smooth(h, DEFAULT_SMOOTH_KERNEL)?)))
            .collect::<capg_core::Result<_>>()
            .map_err(|e| e.to_string())?;
        for (k, cfg) in configs.iter().enumerate() {
            let scored = score_proposals(&maps, &props, cfg).map_err(|e| e.to_string())?;
            hits[k] += usize::from(top1(&scored).iou(&object) > 0.5);
        }
    }
    let p = hits.map(|h| h as f64 / scenes as f64);
    check(
        p[0] - p[1] >= 0.10 && p[0] - p[2] >= 0.10,
        format!(
            "{scenes} scenes, {} proposals; P@1 min-edge-gradient {:.3}, average-activation {:.3}, \
             inside-outside {:.3}",
            props.len(),
            p[0],
            p[1],
            p[2]
        ),
    )
}

fn capg(dir: &Path, args: &[&str]) -> Result<Value, String> {
    capg_env(dir, args, &[])
}

fn capg_env(dir: &Path, args: &[&str], env: &[(&str, &str)]) -> Result<Value, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_capg"))
        .current_dir(dir)
        .args(args)
        .arg("--json")
        .envs(env.iter().copied())
        .output()
        .map_err(|e| format!("spawning capg: {e}"))?;
    if !out.status.success() {
        return Err(format!(
            "capg {} failed: {}",
            args.join(" "),
            String::from_utf8_lossy(&out.stderr).trim()
        ));
    }
    serde_json::from_slice(&out.stdout).map_err(|e| format!("capg {}: bad JSON: {e}", args.join(" ")))
}

fn workdir() -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance")
}

fn end_to_end() -> Outcome {
    let dir = workdir().join("e2e");
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let seed = ["--seed", "7"];
    let run = |args: &[&str]| capg(&dir, &[args, &seed].concat());
    run(&["synth", "--classes", "8", "--scenes", "500", "--test-scenes", "100", "--out", "data"])?;
    let trained = run(&["train-sim", "--data", "data", "--out", "model", "--steps", "2000", "--batch-size", "8"])?;
    run(&["select-pgt", "--data", "data", "--model", "model", "--out", "pgt.jsonl"])?;
    let pgt = run(&["evaluate", "--pred", "pgt.jsonl", "--gt", "data/gt.jsonl", "--class-agnostic", "--out", "pgt-metrics.json"])?;
    run(&["train-mil", "--data", "data", "--model", "model", "--pgt", "pgt.jsonl"])?;
    run(&["detect", "--data", "data", "--model", "model", "--out", "det.jsonl"])?;
    let det = run(&["evaluate", "--pred", "det.jsonl", "--gt", "data/gt.jsonl", "--out", "metrics.json"])?;

    let top1 = trained["train_retrieval_top1"].as_f64().unwrap_or(f64::NAN);
    let loss = trained["final_loss"].as_f64().unwrap_or(f64::NAN);
    let recall = pgt["at_k"]["5"]["recall"].as_f64().unwrap_or(f64::NAN);
    let map = det["map"].as_f64().unwrap_or(f64::NAN);
    check(
        top1 > 0.9 && loss < 0.02 && recall >= 0.8 && map >= 0.5,
        format!(
            "retrieval top-1 {top1:.3} (test {:.3}), final loss {loss:.4}, pseudo-GT recall@5 {recall:.3}, \
             held-out mAP@0.5 {map:.3}",
            trained["test_retrieval_top1"].as_f64().unwrap_or(f64::NAN)
        ),
    )
}

fn vocabulary_mining() -> Outcome {
    let dir = workdir().join("e2e");
    if !dir.join("model").exists() {
        return Err("needs the model trained by criterion 5".into());
    }
    let out = capg(
        &dir,
        &["mine-vocab", "--model", "model", "--k", "8", "--min-freq", "20", "--exclude", "photo,picture", "--exclude-threshold", "0.6"],
    )?;
    let mined: Vec<String> = serde_json::from_value(out["words"].clone()).map_err(|e| e.to_string())?;
    let classes = SynthSpec::default().class_names();
    let found = classes.iter().filter(|c| mined.contains(c)).count();
    let file: Vec<MinedWord> =
        serde_json::from_str(&fs::read_to_string(dir.join("model/mined.json")).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    check(
        found >= 7 && file.len() == 8,
        format!("{found}/8 planted classes in the top 8 among 40 distractors: {}", mined.join(" ")),
    )
}

fn reference_nms(boxes: &[BBox], thr: f64) -> Vec<BBox> {
    let n = boxes.len();
    let mut order: Vec<usize> = (0..n).collect();
    for i in 1..n {
        let mut j = i;
        while j > 0 && boxes[order[j - 1]].score < boxes[order[j]].score {
            order.swap(j - 1, j);
            j -= 1;
        }
    }
    let iou = |a: &BBox, b: &BBox| {
        let w = (a.xmax.min(b.xmax) - a.xmin.max(b.xmin)).max(0.0);
        let h = (a.ymax.min(b.ymax) - a.ymin.max(b.ymin)).max(0.0);
        let inter = w * h;
        inter / ((a.xmax - a.xmin) * (a.ymax - a.ymin) + (b.xmax - b.xmin) * (b.ymax - b.ymin) - inter)
    };
    let mut suppressed = vec![false; n];
    let mut out = Vec::new();
    for (pos, &i) in order.iter().enumerate() {
        if suppressed[i] {
            continue;
        }
        out.push(boxes[i]);
        for &j in &order[pos + 1..] {
            if iou(&boxes[i], &boxes[j]) > thr {
                suppressed[j] = true;
            }
        }
    }
    out
}

fn metric_oracle() -> Outcome {
    let cases = toy_cases::cases();
    let wrong: Vec<String> = cases
        .iter()
        .filter_map(|c| {
            let got = c.compute();
            ((got - c.expected).abs() > toy_cases::TOY_TOL).then(|| format!("{} = {got}, expected {}", c.name, c.expected))
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut nms_bad = 0;
    for trial in 0..1000 {
        let n = rng.gen_range(1..60);
        let boxes: Vec<BBox> = (0..n)
            .map(|_| {
                let (x0, y0) = (rng.gen_range(0.0..0.9), rng.gen_range(0.0..0.9));
                let (w, h) = (rng.gen_range(0.02..0.5), rng.gen_range(0.02..0.5));
                BBox::new(x0, y0, (x0 + w).min(1.0), (y0 + h).min(1.0))
                    .unwrap()
                    .with_score(f64::from(rng.gen_range(0..12u8)) / 12.0)
            })
            .collect();
        let thr = [0.3, 0.5, 0.7][trial % 3];
        nms_bad += usize::from(nms(&boxes, thr) != reference_nms(&boxes, thr));
    }
    check(
        wrong.is_empty() && cases.len() >= 20 && nms_bad == 0,
        format!(
            "{} toy cases, {} off ({}); NMS differs from the quadratic reference on {nms_bad} of 1000 sets",
            cases.len(),
            wrong.len(),
            if wrong.is_empty() { "none".to_string() } else { wrong.join("; ") }
        ),
    )
}

/// Every file under `dir` except run manifests, which carry timings.
fn outputs(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).into_iter().flatten().flatten() {
            let p = entry.path();
            if p.is_dir() {
                stack.push(p);
            } else if !p.to_string_lossy().ends_with(".manifest.json") {
                let bytes = fs::read(&p).unwrap_or_default();
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), bytes);
            }
        }
    }
    out
}

fn pipeline(dir: &Path, threads: &str) -> Result<MetricsReport, String> {
    let _ = fs::remove_dir_all(dir);
    fs::create_dir_all(dir).map_err(|e| e.to_string())?;
    let env = [("CAPG_THREADS", threads)];
    let small = ["--raster", "224", "--smooth-kernel", "16"];
    let run = |args: &[&str]| capg_env(dir, &[args, &["--seed", "11"]].concat(), &env);
    run(&["synth", "--scenes", "60", "--test-scenes", "20", "--out", "data"])?;
    run(&["train-sim", "--data", "data", "--steps", "300"])?;
    run(&[&["gen-cam", "--data", "data", "--limit", "2"][..], &small].concat())?;
    run(&[&["select-pgt", "--data", "data"][..], &small].concat())?;
    run(&["train-mil", "--data", "data", "--pgt", "pgt.jsonl", "--steps", "200"])?;
    run(&[&["detect", "--data", "data"][..], &small].concat())?;
    let report = run(&["evaluate", "--pred", "det.jsonl", "--gt", "data/gt.jsonl"])?;
    serde_json::from_value(report).map_err(|e| e.to_string())
}

fn determinism() -> Outcome {
    let a = workdir().join("det-a");
    let b = workdir().join("det-b");
    let ra = pipeline(&a, "1")?;
    let rb = pipeline(&b, "2")?;
    let (fa, fb) = (outputs(&a), outputs(&b));
    let differing: Vec<String> = fa
        .keys()
        .chain(fb.keys())
        .filter(|k| fa.get(*k) != fb.get(*k))
        .map(|k| k.display().to_string())
        .collect();
    check(
        differing.is_empty() && ra == rb && fa.contains_key(Path::new("model/grounding.gpar")),
        format!(
            "two runs (1 and 2 worker threads), {} output files compared, {} differ{}; mAP {:.3}",
            fa.len(),
            differing.len(),
            if differing.is_empty() { String::new() } else { format!(": {}", differing.join(", ")) },
            ra.map
        ),
    )
}
