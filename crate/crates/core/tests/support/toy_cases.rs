//! Small detection sets whose metrics were enumerated by hand.
//!
//! Boxes are either identical, disjoint, or shifted by a known amount so that
//! every IoU decision is obvious: `a_shift` overlaps `A` at IoU 0.6 and
//! `a_far` at IoU 1/3.

#![allow(dead_code)]

use capg_core::evalkit::{
    average_precision, average_recall_at_k, mean_average_precision, precision_recall_at_k,
    Interpolation,
};
use capg_core::objectness::BBox;

pub const TOY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
pub enum Metric {
    Precision { k: usize, class_aware: bool },
    Recall { k: usize, class_aware: bool },
    Ap { class: usize, interpolation: Interpolation },
    Map,
    Ar { k: usize },
}

pub struct ToyCase {
    pub name: &'static str,
    pub dets: Vec<Vec<BBox>>,
    pub gts: Vec<Vec<BBox>>,
    pub metric: Metric,
    pub expected: f64,
}

impl ToyCase {
    pub fn compute(&self) -> f64 {
        let iou = 0.5;
        match self.metric {
            Metric::Precision { k, class_aware } => {
                precision_recall_at_k(&self.dets, &self.gts, k, iou, class_aware).0
            }
            Metric::Recall { k, class_aware } => {
                precision_recall_at_k(&self.dets, &self.gts, k, iou, class_aware).1
            }
            Metric::Ap { class, interpolation } => {
                average_precision(&self.dets, &self.gts, class, iou, interpolation).map_or(f64::NAN, |c| c.ap)
            }
            Metric::Map => mean_average_precision(&self.dets, &self.gts, iou, Interpolation::AllPoint).1,
            Metric::Ar { k } => average_recall_at_k(&self.dets, &self.gts, &[k], iou, true)[0],
        }
    }
}

fn bx(c: [f64; 4], score: f64, class: usize) -> BBox {
    BBox::new(c[0], c[1], c[2], c[3]).unwrap().with_score(score).with_class(Some(class))
}

const A: [f64; 4] = [0.0, 0.0, 0.2, 0.2];
const B: [f64; 4] = [0.3, 0.3, 0.5, 0.5];
const C: [f64; 4] = [0.6, 0.6, 0.8, 0.8];
const D: [f64; 4] = [0.0, 0.6, 0.2, 0.8];
const A_SHIFT: [f64; 4] = [0.05, 0.0, 0.25, 0.2];
const A_FAR: [f64; 4] = [0.1, 0.0, 0.3, 0.2];

fn g(c: [f64; 4]) -> BBox {
    bx(c, 1.0, 0)
}

fn mixed_three_images() -> (Vec<Vec<BBox>>, Vec<Vec<BBox>>) {
    (
        vec![
            vec![bx(B, 0.9, 0), bx(A, 0.8, 0)],
            vec![bx(A, 0.7, 0), bx(C, 0.6, 0), bx(B, 0.5, 0)],
            vec![bx(D, 0.95, 0)],
        ],
        vec![vec![g(A)], vec![g(A), g(B)], vec![g(C)]],
    )
}

fn five_ranked() -> (Vec<Vec<BBox>>, Vec<Vec<BBox>>) {
    (
        vec![vec![
            bx(A, 0.9, 0),
            bx(D, 0.8, 0),
            bx(B, 0.7, 0),
            bx(A, 0.6, 0),
            bx(C, 0.5, 0),
        ]],
        vec![vec![g(A), g(B), g(C)]],
    )
}

fn ar_set() -> (Vec<Vec<BBox>>, Vec<Vec<BBox>>) {
    (
        vec![
            vec![bx(A, 0.9, 0), bx(C, 0.8, 0), bx(B, 0.7, 0)],
            vec![bx(D, 0.5, 0)],
            vec![bx(A, 0.9, 0)],
        ],
        vec![vec![g(A), g(B)], vec![g(C)], vec![]],
    )
}

pub fn cases() -> Vec<ToyCase> {
    let pr = |k| Metric::Precision { k, class_aware: true };
    let rc = |k| Metric::Recall { k, class_aware: true };
    let all_point = Metric::Ap {
        class: 0,
        interpolation: Interpolation::AllPoint,
    };
    let (m3d, m3g) = mixed_three_images();
    let (f5d, f5g) = five_ranked();
    let (ard, arg) = ar_set();
    let mut f5_tail = f5d.clone();
    f5_tail[0].push(bx(D, 0.0, 0));
    vec![
        ToyCase {
            name: "top-1 hit on a single-gt image: precision",
            dets: vec![vec![bx(A, 0.9, 0)]],
            gts: vec![vec![g(A)]],
            metric: pr(1),
            expected: 1.0,
        },
        ToyCase {
            name: "k beyond detection count: recall",
            dets: vec![vec![bx(A, 0.9, 0)]],
            gts: vec![vec![g(A), g(B)]],
            metric: rc(5),
            expected: 1.0 / 2.0,
        },
        ToyCase {
            name: "three images, k=1: precision",
            dets: m3d.clone(),
            gts: m3g.clone(),
            metric: pr(1),
            expected: 1.0 / 3.0,
        },
        ToyCase {
            name: "three images, k=1: recall",
            dets: m3d.clone(),
            gts: m3g.clone(),
            metric: rc(1),
            expected: 1.0 / 4.0,
        },
        ToyCase {
            name: "three images, k=2: precision",
            dets: m3d.clone(),
            gts: m3g.clone(),
            metric: pr(2),
            expected: 2.0 / 5.0,
        },
        ToyCase {
            name: "three images, k=3: precision",
            dets: m3d.clone(),
            gts: m3g.clone(),
            metric: pr(3),
            expected: 1.0 / 2.0,
        },
        ToyCase {
            name: "three images, k=3: recall",
            dets: m3d,
            gts: m3g,
            metric: rc(3),
            expected: 3.0 / 4.0,
        },
        ToyCase {
            name: "wrong class is a miss when class aware",
            dets: vec![vec![bx(A, 0.9, 1), bx(B, 0.8, 1)]],
            gts: vec![vec![bx(A, 1.0, 0), bx(B, 1.0, 1)]],
            metric: pr(2),
            expected: 1.0 / 2.0,
        },
        ToyCase {
            name: "wrong class still localizes when class agnostic",
            dets: vec![vec![bx(A, 0.9, 1), bx(B, 0.8, 1)]],
            gts: vec![vec![bx(A, 1.0, 0), bx(B, 1.0, 1)]],
            metric: Metric::Recall {
                k: 2,
                class_aware: false,
            },
            expected: 1.0,
        },
        ToyCase {
            name: "duplicates of one object count once",
            dets: vec![vec![bx(A, 0.9, 0), bx(A, 0.8, 0), bx(A_SHIFT, 0.7, 0)]],
            gts: vec![vec![g(A)]],
            metric: pr(3),
            expected: 1.0 / 3.0,
        },
        ToyCase {
            name: "iou of one third is not a match",
            dets: vec![vec![bx(A_FAR, 0.9, 0)]],
            gts: vec![vec![g(A)]],
            metric: rc(1),
            expected: 0.0,
        },
        ToyCase {
            name: "equal scores keep input order under truncation",
            dets: vec![vec![bx(C, 0.5, 0), bx(A, 0.5, 0)]],
            gts: vec![vec![g(A)]],
            metric: pr(1),
            expected: 0.0,
        },
        ToyCase {
            name: "single matching detection: ap",
            dets: vec![vec![bx(A_SHIFT, 0.3, 0)]],
            gts: vec![vec![g(A)]],
            metric: all_point,
            expected: 1.0,
        },
        ToyCase {
            name: "no detections: ap",
            dets: vec![vec![]],
            gts: vec![vec![g(A)]],
            metric: all_point,
            expected: 0.0,
        },
        ToyCase {
            name: "five ranked detections: all-point ap",
            dets: f5d.clone(),
            gts: f5g.clone(),
            metric: all_point,
            // 1/3 * 1 + 1/3 * 2/3 + 1/3 * 3/5
            expected: 34.0 / 45.0,
        },
        ToyCase {
            name: "five ranked detections: eleven-point ap",
            dets: f5d,
            gts: f5g.clone(),
            metric: Metric::Ap {
                class: 0,
                interpolation: Interpolation::ElevenPoint,
            },
            // (4 * 1 + 3 * 2/3 + 4 * 3/5) / 11
            expected: 42.0 / 55.0,
        },
        ToyCase {
            name: "zero-score miss appended below all hits: ap unchanged",
            dets: f5_tail,
            gts: f5g,
            metric: all_point,
            expected: 34.0 / 45.0,
        },
        ToyCase {
            name: "ranking across images: ap",
            dets: vec![vec![bx(A, 0.6, 0)], vec![bx(C, 0.9, 0), bx(B, 0.4, 0)]],
            gts: vec![vec![g(A)], vec![g(B)]],
            metric: all_point,
            expected: 2.0 / 3.0,
        },
        ToyCase {
            name: "map over classes with gt only",
            dets: vec![vec![bx(A, 0.9, 0), bx(C, 0.8, 1), bx(D, 0.7, 2)]],
            gts: vec![vec![bx(A, 1.0, 0), bx(B, 1.0, 1)]],
            metric: Metric::Map,
            expected: 1.0 / 2.0,
        },
        ToyCase {
            name: "average recall at 1 skips images without gt",
            dets: ard,
            gts: arg,
            metric: Metric::Ar { k: 1 },
            expected: 1.0 / 4.0,
        },
        ToyCase {
            name: "average recall at 3",
            dets: ar_set().0,
            gts: ar_set().1,
            metric: Metric::Ar { k: 3 },
            expected: 1.0 / 2.0,
        },
    ]
}
