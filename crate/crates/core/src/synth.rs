//! Synthetic scenes: feature maps with planted class signatures under
//! cell-aligned boxes, and templated captions padded with non-visual words.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::Sample;
use crate::error::{Error, Result};
use crate::grounding::{Caption, Vocabulary, DEFAULT_MAX_CAPTION_LEN};
use crate::numerics::{dot, norm, Grid3D, PixelRect};
use crate::objectness::BBox;

pub const CLASS_WORDS: [&str; 20] = [
    "bear", "cake", "zebra", "kite", "train", "clock", "pizza", "giraffe", "boat", "horse",
    "umbrella", "laptop", "banana", "bicycle", "elephant", "toilet", "sheep", "airplane", "vase",
    "bench",
];

pub const DISTRACTOR_WORDS: [&str; 40] = [
    "elaborate", "party", "beautiful", "nice", "lovely", "sunny", "quiet", "busy", "happy",
    "old", "new", "big", "small", "bright", "colorful", "amazing", "great", "little", "cozy",
    "famous", "morning", "evening", "weekend", "afternoon", "holiday", "moment", "scene",
    "picture", "view", "day", "wonderful", "strange", "typical", "funny", "simple", "modern",
    "classic", "rare", "calm", "festive",
];

/// Largest allowed |cos| between two class signatures.
pub const MAX_SIGNATURE_COSINE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub classes: usize,
    pub grid: usize,
    pub feat_dim: usize,
    pub objects_min: usize,
    pub objects_max: usize,
    /// Object side range in cells, inclusive.
    pub side_min: usize,
    pub side_max: usize,
    /// Per-channel standard deviation of the background and object noise.
    pub noise: f64,
    pub train_scenes: usize,
    pub test_scenes: usize,
    /// Distractor words per caption, inclusive range.
    pub distractors_min: usize,
    pub distractors_max: usize,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            classes: 8,
            grid: 14,
            feat_dim: 32,
            objects_min: 3,
            objects_max: 3,
            side_min: 3,
            side_max: 5,
            noise: 0.05,
            train_scenes: 500,
            test_scenes: 100,
            distractors_min: 1,
            distractors_max: 3,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Spec(m));
        if self.classes == 0 || self.grid == 0 || self.feat_dim == 0 {
            return fail("classes, grid and feature dimension must be positive".into());
        }
        if self.classes > self.feat_dim {
            return fail(format!(
                "{} near-orthogonal signatures do not fit in {} dimensions",
                self.classes, self.feat_dim
            ));
        }
        if self.objects_min == 0 || self.objects_min > self.objects_max {
            return fail(format!(
                "objects per scene range {}..={} is empty",
                self.objects_min, self.objects_max
            ));
        }
        if self.objects_max > self.classes {
            return fail(format!(
                "{} distinct-class objects need at least that many classes, have {}",
                self.objects_max, self.classes
            ));
        }
        if self.side_min == 0 || self.side_min > self.side_max || self.side_max > self.grid {
            return fail(format!(
                "object side range {}..={} does not fit a {} grid",
                self.side_min, self.side_max, self.grid
            ));
        }
        if self.objects_max * self.side_min * self.side_min > self.grid * self.grid {
            return fail(format!(
                "{} objects of side {} cannot fit without overlap on a {}x{} grid",
                self.objects_max, self.side_min, self.grid, self.grid
            ));
        }
        if self.distractors_min > self.distractors_max || self.distractors_max > DISTRACTOR_WORDS.len() {
            return fail("distractor range is invalid".into());
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return fail(format!("noise must be finite and >= 0, got {}", self.noise));
        }
        Ok(())
    }

    pub fn class_names(&self) -> Vec<String> {
        (0..self.classes)
            .map(|c| match CLASS_WORDS.get(c) {
                Some(w) => w.to_string(),
                None => format!("object{c}"),
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthObject {
    pub class: usize,
    /// Covered cells of the feature grid.
    pub cells: PixelRect,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthScene {
    pub image_id: String,
    pub split: Split,
    pub fmap: Grid3D,
    pub caption: String,
    pub objects: Vec<SynthObject>,
}

impl SynthScene {
    /// Ground-truth boxes in normalized coordinates, class set to the class id.
    pub fn gt_boxes(&self) -> Vec<BBox> {
        let n = self.fmap.rows();
        let m = self.fmap.cols();
        self.objects
            .iter()
            .map(|o| {
                BBox::from_pixel_rect(&o.cells, n, m)
                    .expect("objects cover at least one cell")
                    .with_score(1.0)
                    .with_class(Some(o.class))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthDataset {
    pub spec: SynthSpec,
    pub class_names: Vec<String>,
    /// One unit-norm signature per class.
    pub signatures: Vec<Vec<f64>>,
    pub scenes: Vec<SynthScene>,
}

impl SynthDataset {
    pub fn split(&self, split: Split) -> impl Iterator<Item = &SynthScene> {
        self.scenes.iter().filter(move |s| s.split == split)
    }

    /// Vocabulary over the training captions.
    pub fn vocabulary(&self) -> Vocabulary {
        Vocabulary::from_texts(self.split(Split::Train).map(|s| s.caption.as_str()))
    }

    /// Grounding samples for one split, captions encoded against `vocab`.
    pub fn samples(&self, split: Split, vocab: &Vocabulary) -> Result<Vec<Sample>> {
        self.split(split)
            .map(|s| {
                Ok(Sample {
                    fmap: s.fmap.clone(),
                    caption: Caption::encode(&s.image_id, &s.caption, vocab, DEFAULT_MAX_CAPTION_LEN)?,
                })
            })
            .collect()
    }
}

/// Gram-Schmidt on Gaussian draws.
fn orthonormal_signatures(rng: &mut ChaCha8Rng, count: usize, dim: usize) -> Result<Vec<Vec<f64>>> {
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count {
        attempts += 1;
        if attempts > 100 * count {
            return Err(Error::Spec("could not draw independent class signatures".into()));
        }
        let mut v: Vec<f64> = (0..dim).map(|_| normal.sample(rng)).collect();
        for u in &out {
            let p = dot(&v, u);
            v.iter_mut().zip(u).for_each(|(a, b)| *a -= p * b);
        }
        let n = norm(&v);
        if n < 1e-6 {
            continue;
        }
        v.iter_mut().for_each(|a| *a /= n);
        out.push(v);
    }
    for i in 0..count {
        for j in 0..i {
            let c = dot(&out[i], &out[j]);
            if c.abs() >= MAX_SIGNATURE_COSINE {
                return Err(Error::Spec(format!("signatures {i} and {j} have cosine {c}")));
            }
        }
    }
    Ok(out)
}

fn overlaps(a: &PixelRect, b: &PixelRect) -> bool {
    a.row0 < b.row1 && b.row0 < a.row1 && a.col0 < b.col1 && b.col0 < a.col1
}

fn place_objects(rng: &mut ChaCha8Rng, spec: &SynthSpec, count: usize) -> Option<Vec<PixelRect>> {
    for _ in 0..200 {
        let mut rects: Vec<PixelRect> = Vec::with_capacity(count);
        for _ in 0..count {
            let mut placed = false;
            for _ in 0..200 {
                let h = rng.gen_range(spec.side_min..=spec.side_max);
                let w = rng.gen_range(spec.side_min..=spec.side_max);
                let r0 = rng.gen_range(0..=spec.grid - h);
                let c0 = rng.gen_range(0..=spec.grid - w);
                let rect = PixelRect::new(r0, r0 + h, c0, c0 + w);
                if rects.iter().all(|q| !overlaps(q, &rect)) {
                    rects.push(rect);
                    placed = true;
                    break;
                }
            }
            if !placed {
                break;
            }
        }
        if rects.len() == count {
            return Some(rects);
        }
    }
    None
}

fn caption_text(rng: &mut ChaCha8Rng, spec: &SynthSpec, names: &[String], classes: &[usize]) -> String {
    let n_dist = rng.gen_range(spec.distractors_min..=spec.distractors_max);
    let mut pool: Vec<&str> = DISTRACTOR_WORDS.choose_multiple(rng, n_dist).copied().collect();
    let mut mention: Vec<&str> = classes.iter().map(|&c| names[c].as_str()).collect();
    mention.shuffle(rng);
    let mut words: Vec<String> = Vec::new();
    // distractors are split between a lead-in and a closing phrase
    let lead = rng.gen_range(0..=pool.len());
    let tail = pool.split_off(lead);
    words.push("a".into());
    words.extend(pool.iter().map(|s| s.to_string()));
    if !pool.is_empty() {
        words.push("photo".into());
        words.push("of".into());
    }
    for (i, c) in mention.iter().enumerate() {
        if i > 0 {
            words.push(if i + 1 == mention.len() { "and a" } else { "with a" }.into());
        } else if !pool.is_empty() {
            words.push("a".into());
        }
        words.push(c.to_string());
    }
    if !tail.is_empty() {
        words.push("on a".into());
        words.extend(tail.iter().map(|s| s.to_string()));
    }
    words.join(" ")
}

/// Generate the corpus. Output depends only on `spec`.
pub fn synth_generate(spec: &SynthSpec) -> Result<SynthDataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let signatures = orthonormal_signatures(&mut rng, spec.classes, spec.feat_dim)?;
    let names = spec.class_names();
    let noise = Normal::new(0.0, spec.noise.max(0.0)).expect("finite noise");
    let total = spec.train_scenes + spec.test_scenes;
    let mut scenes = Vec::with_capacity(total);
    let class_ids: Vec<usize> = (0..spec.classes).collect();
    for idx in 0..total {
        let count = rng.gen_range(spec.objects_min..=spec.objects_max);
        let rects = place_objects(&mut rng, spec, count).ok_or_else(|| {
            Error::Spec(format!(
                "could not place {count} non-overlapping objects on a {} grid",
                spec.grid
            ))
        })?;
        let classes: Vec<usize> = class_ids.choose_multiple(&mut rng, count).copied().collect();
        let mut fmap = Grid3D::zeros(spec.grid, spec.grid, spec.feat_dim);
        if spec.noise > 0.0 {
            for v in fmap.data_mut() {
                *v = noise.sample(&mut rng);
            }
        }
        let mut objects = Vec::with_capacity(count);
        for (rect, &class) in rects.iter().zip(&classes) {
            for r in rect.row0..rect.row1 {
                for c in rect.col0..rect.col1 {
                    let cell = fmap.cell_mut(r * spec.grid + c);
                    cell.iter_mut().zip(&signatures[class]).for_each(|(a, s)| *a += s);
                }
            }
            objects.push(SynthObject { class, cells: *rect });
        }
        let caption = caption_text(&mut rng, spec, &names, &classes);
        let split = if idx < spec.train_scenes {
            Split::Train
        } else {
            Split::Test
        };
        scenes.push(SynthScene {
            image_id: format!("scene{idx:05}"),
            split,
            fmap,
            caption,
            objects,
        });
    }
    Ok(SynthDataset {
        spec: spec.clone(),
        class_names: names,
        signatures,
        scenes,
    })
}
