//! Evaluation of 2D semantic, 2D panoptic and 3D semantic labels against
//! reference labels, honoring ignore regions. Accumulators are mergeable so
//! frames can be evaluated in parallel and combined.
//!
//! All metrics score the three object classes (pole, traffic light,
//! traffic sign); background is dropped from the means. Classes with zero
//! union (no TP, FP or FN anywhere) are excluded from a mean rather than
//! counted as zero.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use thiserror::Error;

use crate::primitives::SemanticClass;
use crate::render::PanopticPartition;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("prediction and reference shapes differ: {0} vs {1}")]
    ShapeMismatch(usize, usize),
    #[error("segment {0} is inconsistent with its id raster")]
    InconsistentSegments(u32),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClassCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_count: u64,
}

impl ClassCounts {
    pub fn union(&self) -> u64 {
        self.tp + self.fp + self.fn_count
    }

    pub fn iou(&self) -> Option<f64> {
        let union = self.union();
        (union > 0).then(|| self.tp as f64 / union as f64)
    }
}

/// Per-class TP/FP/FN pixel (or point) counts over the thing classes.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfusionAccumulator {
    counts: BTreeMap<SemanticClass, ClassCounts>,
}

impl ConfusionAccumulator {
    /// Accumulates one aligned prediction/reference pair. Ignore positions
    /// contribute to no count.
    pub fn add(
        &mut self,
        predictions: &[SemanticClass],
        references: &[SemanticClass],
        ignore: &[bool],
    ) -> Result<(), MetricsError> {
        if predictions.len() != references.len() {
            return Err(MetricsError::ShapeMismatch(
                predictions.len(),
                references.len(),
            ));
        }
        if predictions.len() != ignore.len() {
            return Err(MetricsError::ShapeMismatch(predictions.len(), ignore.len()));
        }
        for i in 0..predictions.len() {
            if ignore[i] {
                continue;
            }
            let (p, r) = (predictions[i], references[i]);
            if p == r {
                if p != SemanticClass::Background {
                    self.counts.entry(p).or_default().tp += 1;
                }
            } else {
                if p != SemanticClass::Background {
                    self.counts.entry(p).or_default().fp += 1;
                }
                if r != SemanticClass::Background {
                    self.counts.entry(r).or_default().fn_count += 1;
                }
            }
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &ConfusionAccumulator) {
        for (class, counts) in &other.counts {
            let entry = self.counts.entry(*class).or_default();
            entry.tp += counts.tp;
            entry.fp += counts.fp;
            entry.fn_count += counts.fn_count;
        }
    }

    pub fn class_counts(&self, class: SemanticClass) -> ClassCounts {
        self.counts.get(&class).copied().unwrap_or_default()
    }

    pub fn iou(&self, class: SemanticClass) -> Option<f64> {
        self.class_counts(class).iou()
    }

    /// Unweighted mean IoU over the thing classes with nonzero union.
    pub fn miou(&self) -> Option<f64> {
        let ious: Vec<f64> = SemanticClass::THINGS
            .iter()
            .filter_map(|c| self.iou(*c))
            .collect();
        (!ious.is_empty()).then(|| ious.iter().sum::<f64>() / ious.len() as f64)
    }
}

/// Per-class IoU plus mIoU for one evaluation.
pub fn miou(
    predictions: &[SemanticClass],
    references: &[SemanticClass],
    ignore: &[bool],
) -> Result<ConfusionAccumulator, MetricsError> {
    let mut acc = ConfusionAccumulator::default();
    acc.add(predictions, references, ignore)?;
    Ok(acc)
}

/// Point-wise 3D semantic IoU over identical point sets (same ordering).
pub fn miou_3d(
    predictions: &[SemanticClass],
    references: &[SemanticClass],
    ignore: &[bool],
) -> Result<ConfusionAccumulator, MetricsError> {
    miou(predictions, references, ignore)
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PanopticClassCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_count: u64,
    pub sum_matched_iou: f64,
}

impl PanopticClassCounts {
    pub fn present(&self) -> bool {
        self.tp + self.fp + self.fn_count > 0
    }

    /// Segmentation quality: mean matched IoU over true positives.
    pub fn sq(&self) -> f64 {
        if self.tp == 0 {
            0.0
        } else {
            self.sum_matched_iou / self.tp as f64
        }
    }

    /// Recognition quality: TP / (TP + FP/2 + FN/2).
    pub fn rq(&self) -> f64 {
        let denom = self.tp as f64 + 0.5 * self.fp as f64 + 0.5 * self.fn_count as f64;
        if denom == 0.0 {
            0.0
        } else {
            self.tp as f64 / denom
        }
    }

    pub fn pq(&self) -> f64 {
        self.sq() * self.rq()
    }
}

/// Per-class panoptic TP/FP/FN segment counts and summed matched IoU.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PanopticAccumulator {
    counts: BTreeMap<SemanticClass, PanopticClassCounts>,
}

impl PanopticAccumulator {
    pub fn class_counts(&self, class: SemanticClass) -> PanopticClassCounts {
        self.counts.get(&class).copied().unwrap_or_default()
    }

    pub fn merge(&mut self, other: &PanopticAccumulator) {
        for (class, counts) in &other.counts {
            let entry = self.counts.entry(*class).or_default();
            entry.tp += counts.tp;
            entry.fp += counts.fp;
            entry.fn_count += counts.fn_count;
            entry.sum_matched_iou += counts.sum_matched_iou;
        }
    }

    fn mean_over_present(&self, f: impl Fn(&PanopticClassCounts) -> f64) -> Option<f64> {
        let values: Vec<f64> = SemanticClass::THINGS
            .iter()
            .map(|c| self.class_counts(*c))
            .filter(|c| c.present())
            .map(|c| f(&c))
            .collect();
        (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
    }

    /// Mean segmentation quality over the present thing classes.
    pub fn sq_things(&self) -> Option<f64> {
        self.mean_over_present(PanopticClassCounts::sq)
    }

    /// Mean recognition quality over the present thing classes.
    pub fn rq_things(&self) -> Option<f64> {
        self.mean_over_present(PanopticClassCounts::rq)
    }

    /// Mean panoptic quality over the present thing classes.
    pub fn pq_things(&self) -> Option<f64> {
        self.mean_over_present(PanopticClassCounts::pq)
    }
}

fn validate_partition(side: &PanopticPartition) -> Result<(), MetricsError> {
    for seg in &side.segments {
        for &px in &seg.pixels {
            if side.id_raster.get(px) != Some(&seg.instance_id) {
                return Err(MetricsError::InconsistentSegments(seg.instance_id));
            }
        }
    }
    Ok(())
}

/// Panoptic quality: segments match iff they share the class and their IoU
/// over non-ignore pixels exceeds 0.5 (unique by construction). Unmatched
/// prediction segments with more than half their pixels ignored are
/// discarded rather than counted as false positives.
pub fn panoptic_quality(
    prediction: &PanopticPartition,
    reference: &PanopticPartition,
    ignore: &[bool],
) -> Result<PanopticAccumulator, MetricsError> {
    let n = prediction.id_raster.len();
    if n != reference.id_raster.len() {
        return Err(MetricsError::ShapeMismatch(n, reference.id_raster.len()));
    }
    if n != ignore.len() {
        return Err(MetricsError::ShapeMismatch(n, ignore.len()));
    }
    validate_partition(prediction)?;
    validate_partition(reference)?;

    // Joint histogram and per-segment sizes over non-ignore pixels.
    let mut overlap: BTreeMap<(u32, u32), u64> = BTreeMap::new();
    let mut pred_size: BTreeMap<u32, u64> = BTreeMap::new();
    let mut ref_size: BTreeMap<u32, u64> = BTreeMap::new();
    for i in 0..n {
        if ignore[i] {
            continue;
        }
        let (p, r) = (prediction.id_raster[i], reference.id_raster[i]);
        if p != 0 {
            *pred_size.entry(p).or_insert(0) += 1;
        }
        if r != 0 {
            *ref_size.entry(r).or_insert(0) += 1;
        }
        if p != 0 && r != 0 {
            *overlap.entry((p, r)).or_insert(0) += 1;
        }
    }
    let pred_class: BTreeMap<u32, SemanticClass> = prediction
        .segments
        .iter()
        .map(|s| (s.instance_id, s.class))
        .collect();
    let ref_class: BTreeMap<u32, SemanticClass> = reference
        .segments
        .iter()
        .map(|s| (s.instance_id, s.class))
        .collect();

    let mut acc = PanopticAccumulator::default();
    let mut matched_pred: alloc::collections::BTreeSet<u32> = alloc::collections::BTreeSet::new();
    let mut matched_ref: alloc::collections::BTreeSet<u32> = alloc::collections::BTreeSet::new();

    for ((p, r), &inter) in &overlap {
        let (Some(&pc), Some(&rc)) = (pred_class.get(p), ref_class.get(r)) else {
            continue;
        };
        if pc != rc {
            continue;
        }
        let union = pred_size.get(p).copied().unwrap_or(0)
            + ref_size.get(r).copied().unwrap_or(0)
            - inter;
        if union == 0 {
            continue;
        }
        let iou = inter as f64 / union as f64;
        if iou > 0.5 {
            let entry = acc.counts.entry(pc).or_default();
            entry.tp += 1;
            entry.sum_matched_iou += iou;
            matched_pred.insert(*p);
            matched_ref.insert(*r);
        }
    }

    for seg in &reference.segments {
        if !matched_ref.contains(&seg.instance_id) {
            acc.counts.entry(seg.class).or_default().fn_count += 1;
        }
    }
    for seg in &prediction.segments {
        if matched_pred.contains(&seg.instance_id) {
            continue;
        }
        let total = seg.pixels.len() as u64;
        let ignored = seg.pixels.iter().filter(|&&px| ignore[px]).count() as u64;
        if total > 0 && 2 * ignored > total {
            continue; // mostly-ignored prediction: not a false positive
        }
        acc.counts.entry(seg.class).or_default().fp += 1;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::render::{derive_panoptic, LabelImage};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use SemanticClass::{Background as BG, Pole, TrafficLight as TL, TrafficSign as TS};

    #[test]
    fn identical_labels_score_perfect_miou() {
        let labels = [Pole, TL, TS, BG, Pole];
        let acc = miou(&labels, &labels, &[false; 5]).unwrap();
        assert_eq!(acc.miou(), Some(1.0));
        assert_eq!(acc.iou(Pole), Some(1.0));
    }

    #[test]
    fn all_background_prediction_scores_zero() {
        let pred = [BG, BG, BG, BG];
        let reference = [Pole, TS, BG, TL];
        let acc = miou(&pred, &reference, &[false; 4]).unwrap();
        assert_eq!(acc.miou(), Some(0.0));
    }

    #[test]
    fn iou_formula_arithmetic() {
        // 10-pixel reference segment; prediction overlaps 6 and adds 2.
        let mut pred = vec![BG; 32];
        let mut reference = vec![BG; 32];
        for i in 0..10 {
            reference[i] = Pole;
        }
        for i in 4..12 {
            pred[i] = Pole;
        }
        let acc = miou(&pred, &reference, &vec![false; 32]).unwrap();
        assert_eq!(acc.iou(Pole), Some(6.0 / (6.0 + 2.0 + 4.0)));
        assert_eq!(acc.miou(), Some(0.5));
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        assert!(miou(&[BG], &[BG, BG], &[false, false]).is_err());
    }

    #[test]
    fn zero_union_classes_are_excluded_from_the_mean() {
        // Only poles appear anywhere: the mean is over poles alone.
        let pred = [Pole, BG];
        let reference = [Pole, Pole];
        let acc = miou(&pred, &reference, &[false; 2]).unwrap();
        assert_eq!(acc.iou(TL), None);
        assert_eq!(acc.miou(), Some(0.5));
    }

    /// Builds a label image from an instance grid and a class per id.
    fn image_from(
        width: usize,
        ids: &[u32],
        class_of: &BTreeMap<u32, SemanticClass>,
        ignore: &[bool],
    ) -> LabelImage {
        let height = ids.len() / width;
        let mut img = LabelImage::background(width, height);
        for (i, &id) in ids.iter().enumerate() {
            img.instance[i] = id;
            img.semantic[i] = if id == 0 { BG } else { class_of[&id] };
            img.ignore[i] = ignore[i];
        }
        img
    }

    #[test]
    fn panoptic_single_match_formulas() {
        // One reference and one prediction at IoU 0.8, same class.
        let class_of: BTreeMap<u32, SemanticClass> = [(1u32, Pole)].into();
        let mut ref_ids = vec![0u32; 20];
        let mut pred_ids = vec![0u32; 20];
        for i in 0..10 {
            ref_ids[i] = 1;
        }
        // Overlap 8, prediction size 10: union 12... choose sizes for IoU
        // exactly 0.8: |P|=|R|=9, overlap 8, union 10 -> 0.8.
        ref_ids = vec![0u32; 20];
        for i in 0..9 {
            ref_ids[i] = 1;
        }
        for i in 1..10 {
            pred_ids[i] = 1;
        }
        let ignore = vec![false; 20];
        let pred = derive_panoptic(&image_from(20, &pred_ids, &class_of, &ignore));
        let reference = derive_panoptic(&image_from(20, &ref_ids, &class_of, &ignore));
        let acc = panoptic_quality(&pred, &reference, &ignore).unwrap();
        let c = acc.class_counts(Pole);
        assert_eq!(c.tp, 1);
        assert!((c.sq() - 0.8).abs() < 1e-12);
        assert!((c.rq() - 1.0).abs() < 1e-12);
        assert!((c.pq() - 0.8).abs() < 1e-12);
    }

    #[test]
    fn panoptic_unmatched_reference_halves_rq() {
        // Two reference segments, one prediction matching one at IoU 0.8.
        let class_of: BTreeMap<u32, SemanticClass> = [(1u32, Pole), (2u32, Pole)].into();
        let mut ref_ids = vec![0u32; 40];
        let mut pred_ids = vec![0u32; 40];
        for i in 0..9 {
            ref_ids[i] = 1;
        }
        for i in 1..10 {
            pred_ids[i] = 1;
        }
        for i in 20..26 {
            ref_ids[i] = 2;
        }
        let ignore = vec![false; 40];
        let pred = derive_panoptic(&image_from(40, &pred_ids, &class_of, &ignore));
        let reference = derive_panoptic(&image_from(40, &ref_ids, &class_of, &ignore));
        let acc = panoptic_quality(&pred, &reference, &ignore).unwrap();
        let c = acc.class_counts(Pole);
        assert_eq!((c.tp, c.fp, c.fn_count), (1, 0, 1));
        assert!((c.rq() - 1.0 / 1.5).abs() < 1e-12);
        assert!((c.pq() - 0.8 / 1.5).abs() < 1e-12);
        assert!((c.pq() - 0.5333333333333333).abs() < 1e-9);
    }

    /// Exhaustive matching oracle over tiny frames: enumerate all injective
    /// same-class matchings with IoU > 0.5, maximizing the TP count.
    fn exhaustive_pq(
        pred: &PanopticPartition,
        reference: &PanopticPartition,
        ignore: &[bool],
    ) -> PanopticAccumulator {
        let size = |seg: &crate::render::PanopticSegment| {
            seg.pixels.iter().filter(|&&p| !ignore[p]).count() as f64
        };
        let iou_of = |a: &crate::render::PanopticSegment, b: &crate::render::PanopticSegment| {
            let inter = a
                .pixels
                .iter()
                .filter(|&&p| !ignore[p] && b.pixels.contains(&p))
                .count() as f64;
            let union = size(a) + size(b) - inter;
            if union == 0.0 {
                0.0
            } else {
                inter / union
            }
        };
        // Candidate pairs.
        let mut pairs = Vec::new();
        for (ri, r) in reference.segments.iter().enumerate() {
            for (pi, p) in pred.segments.iter().enumerate() {
                if p.class == r.class {
                    let iou = iou_of(p, r);
                    if iou > 0.5 {
                        pairs.push((ri, pi, iou));
                    }
                }
            }
        }
        // Enumerate subsets of pairs forming injective matchings.
        let mut best: Vec<(usize, usize, f64)> = Vec::new();
        let m = pairs.len();
        for mask in 0..(1u32 << m) {
            let mut used_r = alloc::collections::BTreeSet::new();
            let mut used_p = alloc::collections::BTreeSet::new();
            let mut ok = true;
            let mut chosen = Vec::new();
            for (k, pair) in pairs.iter().enumerate() {
                if mask & (1 << k) != 0 {
                    if !used_r.insert(pair.0) || !used_p.insert(pair.1) {
                        ok = false;
                        break;
                    }
                    chosen.push(*pair);
                }
            }
            if ok && chosen.len() > best.len() {
                best = chosen;
            }
        }
        let mut acc = PanopticAccumulator::default();
        let matched_r: alloc::collections::BTreeSet<usize> =
            best.iter().map(|x| x.0).collect();
        let matched_p: alloc::collections::BTreeSet<usize> =
            best.iter().map(|x| x.1).collect();
        for (ri, pi, iou) in &best {
            let class = reference.segments[*ri].class;
            let _ = pi;
            let e = acc.counts.entry(class).or_default();
            e.tp += 1;
            e.sum_matched_iou += iou;
        }
        for (ri, r) in reference.segments.iter().enumerate() {
            if !matched_r.contains(&ri) {
                acc.counts.entry(r.class).or_default().fn_count += 1;
            }
        }
        for (pi, p) in pred.segments.iter().enumerate() {
            if matched_p.contains(&pi) {
                continue;
            }
            let total = p.pixels.len();
            let ignored = p.pixels.iter().filter(|&&px| ignore[px]).count();
            if total > 0 && 2 * ignored > total {
                continue;
            }
            acc.counts.entry(p.class).or_default().fp += 1;
        }
        acc
    }

    fn random_partition(
        rng: &mut ChaCha8Rng,
        width: usize,
        height: usize,
        ignore: &[bool],
    ) -> PanopticPartition {
        let classes = [Pole, TL, TS];
        let n_segments = rng.random_range(0..=3);
        let mut ids = vec![0u32; width * height];
        let mut class_of = BTreeMap::new();
        for id in 1..=n_segments {
            class_of.insert(id as u32, classes[rng.random_range(0..3)]);
            // Random rectangle.
            let x0 = rng.random_range(0..width);
            let y0 = rng.random_range(0..height);
            let x1 = rng.random_range(x0..width);
            let y1 = rng.random_range(y0..height);
            for y in y0..=y1 {
                for x in x0..=x1 {
                    ids[y * width + x] = id as u32;
                }
            }
        }
        derive_panoptic(&image_from(width, &ids, &class_of, ignore))
    }

    #[test]
    fn pq_matches_the_exhaustive_matching_oracle_on_random_frames() {
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        for _ in 0..300 {
            let (w, h) = (6usize, 6usize);
            let ignore: Vec<bool> = (0..w * h).map(|_| rng.random_bool(0.1)).collect();
            let pred = random_partition(&mut rng, w, h, &ignore);
            let reference = random_partition(&mut rng, w, h, &ignore);
            let got = panoptic_quality(&pred, &reference, &ignore).unwrap();
            let want = exhaustive_pq(&pred, &reference, &ignore);
            for class in SemanticClass::THINGS {
                let (g, w_) = (got.class_counts(class), want.class_counts(class));
                assert_eq!((g.tp, g.fp, g.fn_count), (w_.tp, w_.fp, w_.fn_count));
                assert!((g.sum_matched_iou - w_.sum_matched_iou).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn permuting_instance_ids_leaves_pq_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(73);
        let ignore = vec![false; 36];
        let pred = random_partition(&mut rng, 6, 6, &ignore);
        let reference = random_partition(&mut rng, 6, 6, &ignore);
        let base = panoptic_quality(&pred, &reference, &ignore).unwrap();

        // Relabel prediction ids 1..k to 101..100+k.
        let mut permuted_ids = pred.id_raster.clone();
        for id in permuted_ids.iter_mut() {
            if *id != 0 {
                *id += 100;
            }
        }
        let class_of: BTreeMap<u32, SemanticClass> = pred
            .segments
            .iter()
            .map(|s| (s.instance_id + 100, s.class))
            .collect();
        let permuted = derive_panoptic(&image_from(6, &permuted_ids, &class_of, &ignore));
        let perm = panoptic_quality(&permuted, &reference, &ignore).unwrap();
        for class in SemanticClass::THINGS {
            assert_eq!(base.class_counts(class), perm.class_counts(class));
        }
    }

    #[test]
    fn accumulation_is_associative_across_frames() {
        let mut rng = ChaCha8Rng::seed_from_u64(79);
        let frame: Vec<(Vec<SemanticClass>, Vec<SemanticClass>, Vec<bool>)> = (0..4)
            .map(|_| {
                let n = 50;
                let rand_class = |rng: &mut ChaCha8Rng| match rng.random_range(0..4) {
                    0 => BG,
                    1 => Pole,
                    2 => TL,
                    _ => TS,
                };
                (
                    (0..n).map(|_| rand_class(&mut rng)).collect(),
                    (0..n).map(|_| rand_class(&mut rng)).collect(),
                    (0..n).map(|_| rng.random_bool(0.2)).collect(),
                )
            })
            .collect();
        let mut merged = ConfusionAccumulator::default();
        for (p, r, ig) in &frame {
            let mut one = ConfusionAccumulator::default();
            one.add(p, r, ig).unwrap();
            merged.merge(&one);
        }
        let mut concat = ConfusionAccumulator::default();
        let all_p: Vec<_> = frame.iter().flat_map(|f| f.0.clone()).collect();
        let all_r: Vec<_> = frame.iter().flat_map(|f| f.1.clone()).collect();
        let all_i: Vec<_> = frame.iter().flat_map(|f| f.2.clone()).collect();
        concat.add(&all_p, &all_r, &all_i).unwrap();
        assert_eq!(merged, concat);
    }

    #[test]
    fn adding_ignore_pixels_changes_nothing() {
        let pred = [Pole, TL, BG, TS, Pole, BG];
        let reference = [Pole, TS, BG, TS, BG, Pole];
        let base = miou(&pred, &reference, &[false; 6]).unwrap();

        // Append pixels that are all ignored.
        let mut pred2 = pred.to_vec();
        let mut ref2 = reference.to_vec();
        let mut ig2 = vec![false; 6];
        pred2.extend([TL, TL, Pole]);
        ref2.extend([TS, BG, Pole]);
        ig2.extend([true, true, true]);
        let extended = miou(&pred2, &ref2, &ig2).unwrap();
        assert_eq!(base, extended);
    }

    #[test]
    fn swapped_labels_score_zero_in_3d() {
        let pred = [Pole, TL, Pole, TL];
        let reference = [TL, Pole, TL, Pole];
        let acc = miou_3d(&pred, &reference, &[false; 4]).unwrap();
        assert_eq!(acc.iou(Pole), Some(0.0));
        assert_eq!(acc.iou(TL), Some(0.0));
    }

    #[test]
    fn counting_oracle_agrees_on_random_label_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(83);
        for _ in 0..100 {
            let n = 200;
            let rand_class = |rng: &mut ChaCha8Rng| match rng.random_range(0..4) {
                0 => BG,
                1 => Pole,
                2 => TL,
                _ => TS,
            };
            let pred: Vec<_> = (0..n).map(|_| rand_class(&mut rng)).collect();
            let reference: Vec<_> = (0..n).map(|_| rand_class(&mut rng)).collect();
            let ignore: Vec<_> = (0..n).map(|_| rng.random_bool(0.15)).collect();
            let acc = miou_3d(&pred, &reference, &ignore).unwrap();
            for class in SemanticClass::THINGS {
                let mut want = ClassCounts::default();
                for i in 0..n {
                    if ignore[i] {
                        continue;
                    }
                    match (pred[i] == class, reference[i] == class) {
                        (true, true) => want.tp += 1,
                        (true, false) => want.fp += 1,
                        (false, true) => want.fn_count += 1,
                        _ => {}
                    }
                }
                assert_eq!(acc.class_counts(class), want);
            }
        }
    }

    #[test]
    fn quality_scores_stay_in_unit_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(89);
        for _ in 0..100 {
            let ignore: Vec<bool> = (0..36).map(|_| rng.random_bool(0.2)).collect();
            let pred = random_partition(&mut rng, 6, 6, &ignore);
            let reference = random_partition(&mut rng, 6, 6, &ignore);
            let acc = panoptic_quality(&pred, &reference, &ignore).unwrap();
            for class in SemanticClass::THINGS {
                let c = acc.class_counts(class);
                for v in [c.sq(), c.rq(), c.pq()] {
                    assert!((0.0..=1.0).contains(&v), "{v}");
                }
            }
        }
    }
}
