use std::collections::BTreeSet;

use proptest::prelude::*;
use tvs_core::benchgen::{connectable, extract_triplets, group_annotations, instantiate, overlap_ratio, StepAnnotation};
use tvs_core::domain::{score_pair, QaType, SegmentSet, TimeRange, VideoMeta};
use tvs_core::dsl::tools;
use tvs_core::isodata::{isodata_cluster_with, EmbeddingMatrix, IsodataParams};
use tvs_core::viewer::{KeyframeEntry, KeyframeIndex};
use tvs_core::ExecMode;

fn arb_set(max: u32) -> impl Strategy<Value = SegmentSet> {
    prop::collection::vec((0..max, 1..max / 4), 1..4).prop_map(move |v| {
        let pairs: Vec<(f64, f64)> = v.into_iter().map(|(s, l)| (s as f64, (s + l).min(max) as f64)).filter(|p| p.0 < p.1).collect();
        SegmentSet::from_pairs(&pairs).unwrap()
    })
}

fn arb_indices() -> impl Strategy<Value = Vec<u64>> {
    prop::collection::vec(0u64..200, 0..40).prop_map(|v| tools::normalize(&v))
}

fn arb_range() -> impl Strategy<Value = TimeRange> {
    (0u32..2000, 1u32..600).prop_map(|(s, l)| TimeRange::new(s as f64 / 10.0, (s + l) as f64 / 10.0).unwrap())
}

proptest! {
    #[test]
    fn metric_symmetries(a in arb_set(100).prop_filter("non-empty", |s| !s.is_empty()),
                         b in arb_set(100).prop_filter("non-empty", |s| !s.is_empty())) {
        let ab = score_pair(&a, &b).unwrap();
        let ba = score_pair(&b, &a).unwrap();
        prop_assert!((ab.iou - ba.iou).abs() < 1e-12);
        prop_assert!((ab.precision - ba.coverage).abs() < 1e-12);
        prop_assert!((ab.f1 - ba.f1).abs() < 1e-12);
    }

    #[test]
    fn integer_boundaries_match_the_raster_exactly(a in arb_set(60), b in arb_set(60).prop_filter("non-empty", |s| !s.is_empty())) {
        let bins = |s: &SegmentSet| -> BTreeSet<u32> {
            (0..60_000u32).filter(|&ms| s.contains((ms as f64 + 0.5) / 1000.0)).collect()
        };
        let (pa, pb) = (bins(&a), bins(&b));
        let inter = pa.intersection(&pb).count() as f64;
        let union = pa.union(&pb).count() as f64;
        let s = score_pair(&a, &b).unwrap();
        prop_assert!((s.iou - inter / union).abs() < 1e-6);
        prop_assert!((s.coverage - inter / pb.len() as f64).abs() < 1e-6);
    }

    #[test]
    fn index_set_laws(a in arb_indices(), b in arb_indices(), c in arb_indices()) {
        use tools::{concat_and_fill, intersect, union};
        prop_assert_eq!(intersect(&a, &b), intersect(&b, &a));
        prop_assert_eq!(union(&a, &b), union(&b, &a));
        prop_assert_eq!(intersect(&intersect(&a, &b), &c), intersect(&a, &intersect(&b, &c)));
        prop_assert_eq!(union(&union(&a, &b), &c), union(&a, &union(&b, &c)));
        prop_assert_eq!(intersect(&a, &a), a.clone());
        prop_assert_eq!(union(&a, &a), a.clone());
        let fill: BTreeSet<u64> = concat_and_fill(&a, &b).into_iter().collect();
        prop_assert!(union(&a, &b).iter().all(|i| fill.contains(i)));
    }

    #[test]
    fn frame_midpoints_map_back(fps in prop::sample::select(vec![24.0, 25.0, 29.97, 30.0, 60.0]), dur in 1.0f64..600.0) {
        let meta = VideoMeta::derived("m", dur, fps).unwrap();
        for i in (0..meta.total_frames).step_by(7) {
            let mid = (i as f64 + 0.5) / fps;
            prop_assert_eq!(tools::timestamp_to_single_index(&meta, mid), i);
        }
    }

    #[test]
    fn overlap_ratio_stays_below_one(a in arb_range(), b in arb_range()) {
        let r = overlap_ratio(&a, &b);
        prop_assert!((0.0..1.0).contains(&r) || (r == 1.0 && a == b));
    }

    #[test]
    fn grouping_partitions_and_triplets_connect(
        raw in prop::collection::vec((0u32..900, 10u32..200), 1..12),
        theta in prop::sample::select(vec![0.0, 0.1, 0.3]),
    ) {
        let mut ranges: Vec<(f64, f64)> = raw.iter().map(|&(s, l)| (s as f64 / 10.0, (s + l) as f64 / 10.0)).collect();
        ranges.sort_by(|x, y| x.0.total_cmp(&y.0));
        let steps: Vec<StepAnnotation> = ranges
            .iter()
            .enumerate()
            .map(|(i, &(s, e))| StepAnnotation { segment: TimeRange::new(s, e).unwrap(), sentence: format!("step {i}") })
            .collect();
        let groups = group_annotations(&steps, theta).unwrap();
        let flat: Vec<usize> = groups.iter().flatten().copied().collect();
        prop_assert_eq!(flat, (0..steps.len()).collect::<Vec<_>>());
        let meta = VideoMeta::derived("g", 120.0, 25.0).unwrap();
        for g in &groups {
            for (n, [i, j, k]) in extract_triplets(&steps, g, theta).into_iter().enumerate() {
                prop_assert!(connectable(&steps[i].segment, &steps[j].segment, theta));
                prop_assert!(connectable(&steps[j].segment, &steps[k].segment, theta));
                let items = instantiate([&steps[i], &steps[j], &steps[k]], &meta, n).unwrap();
                let types: BTreeSet<QaType> = items.iter().map(|it| it.qa_type).collect();
                prop_assert_eq!(items.len(), 9);
                prop_assert_eq!(types.len(), 9);
                prop_assert!(items.iter().all(|it| it.answer == steps[j].sentence));
            }
        }
    }

    #[test]
    fn prep_is_monotone(stamps in prop::collection::btree_set(0u32..1000, 1..30),
                        s in 0u32..1000, l in 0u32..500, grow in 0u32..300) {
        let meta = VideoMeta::derived("p", 100.0, 10.0).unwrap();
        let entries = stamps
            .iter()
            .enumerate()
            .map(|(k, &t)| KeyframeEntry { timestamp: t as f64 / 10.0, frame_index: t as u64, caption: format!("c{k}"), embedding_row: k })
            .collect();
        let idx = KeyframeIndex::new(meta, entries).unwrap();
        let (a, b) = (s as f64 / 10.0, (s + l) as f64 / 10.0);
        let narrow: BTreeSet<u64> = idx.prep(a, b).unwrap().iter().map(|e| e.frame_index).collect();
        let wide: BTreeSet<u64> = idx.prep(a - grow as f64 / 10.0, b + grow as f64 / 10.0).unwrap().iter().map(|e| e.frame_index).collect();
        prop_assert!(narrow.is_subset(&wide));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// Initial centers are picked by content, so permuting rows permutes the
    /// member sets and nothing else.
    #[test]
    fn isodata_is_row_permutation_equivariant(
        rows in prop::collection::vec(prop::collection::vec(-1.0f32..1.0, 4), 6..40),
        seed in any::<u64>(),
        shuffle in any::<u64>(),
    ) {
        let n = rows.len();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut h = shuffle;
        for i in (1..n).rev() {
            h = h.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (h >> 33) as usize % (i + 1));
        }
        let p = IsodataParams { k_init: 4, k_max: 8, n_min: 1, rng_seed: seed, ..IsodataParams::default() }.fitted_to(n);
        let x = EmbeddingMatrix::from_rows(&rows).unwrap();
        let shuffled: Vec<Vec<f32>> = perm.iter().map(|&i| rows[i].clone()).collect();
        let y = EmbeddingMatrix::from_rows(&shuffled).unwrap();
        let cx = isodata_cluster_with(&x, &p, ExecMode::Sequential).unwrap();
        let cy = isodata_cluster_with(&y, &p, ExecMode::Sequential).unwrap();
        let sets = |c: &tvs_core::isodata::Clustering, map: &dyn Fn(usize) -> usize| -> BTreeSet<BTreeSet<usize>> {
            (0..c.k()).map(|j| c.members(j).into_iter().map(map).collect()).collect()
        };
        prop_assert_eq!(sets(&cx, &|i| i), sets(&cy, &|i| perm[i]));
    }
}
