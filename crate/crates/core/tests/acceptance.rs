//! Acceptance suite. Each criterion runs in isolation and prints one
//! `PASS`/`FAIL` line to stderr; the test fails if any criterion does.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tvs_core::agent::{run_tvs, AgentBackends, AgentConfig};
use tvs_core::backends::{ScriptedChat, ScriptedGrounder};
use tvs_core::benchgen::{
    build_dataset, connectable, load_annotations, overlap_ratio, split_counts, BenchgenConfig, Split,
};
use tvs_core::domain::{score_pair, Resolution, SegmentSet, TimeRange, VideoMeta};
use tvs_core::dsl::{execute_plan, parse_plan, tools, Value};
use tvs_core::isodata::{initial_center_rows, isodata_cluster_with, EmbeddingMatrix, IsodataParams};
use tvs_core::pipeline::{cmd_eval, cmd_screen, load_predictions, ScriptedProvider, Variant};
use tvs_core::prompts::{PromptSet, PromptTemplate};
use tvs_core::viewer::{KeyframeEntry, KeyframeIndex, Viewer};
use tvs_core::{Error, ExecMode};

use common::scenarios;

type Outcome = Result<(), String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Outcome {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

struct Criterion {
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn report(c: &Criterion) -> bool {
    let t0 = Instant::now();
    let res = catch_unwind(AssertUnwindSafe(c.run));
    let dt = t0.elapsed();
    let verdict = match res {
        Ok(Ok(())) if dt <= c.budget => Ok(()),
        Ok(Ok(())) => Err(format!("took longer than {:?}", c.budget)),
        Ok(Err(e)) => Err(e),
        Err(p) => Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into())),
    };
    let line = match &verdict {
        Ok(()) => format!("PASS {} ({:.2}s)", c.name, dt.as_secs_f64()),
        Err(e) => format!("FAIL {} ({:.2}s): {e}", c.name, dt.as_secs_f64()),
    };
    use std::io::Write;
    let _ = writeln!(std::io::stderr(), "{line}");
    verdict.is_ok()
}

#[test]
fn acceptance() {
    let criteria = [
        Criterion { name: "interval-oracle", budget: Duration::from_secs(5), run: interval_oracle },
        Criterion { name: "isodata-correctness", budget: Duration::from_secs(30), run: isodata_correctness },
        Criterion { name: "dsl-oracle", budget: Duration::from_secs(10), run: dsl_oracle },
        Criterion { name: "benchgen-golden", budget: Duration::from_secs(60), run: benchgen_golden },
        Criterion { name: "agent-replay", budget: Duration::from_secs(60), run: agent_replay },
        Criterion { name: "launcher-video-blind", budget: Duration::from_secs(60), run: launcher_blind },
        Criterion { name: "end-to-end-offline", budget: Duration::from_secs(60), run: end_to_end },
    ];
    let _ = std::io::Write::write_all(&mut std::io::stderr(), b"\n");
    let failed: Vec<&str> = criteria.iter().filter(|c| !report(c)).map(|c| c.name).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

// ---------------------------------------------------------------- intervals

fn random_set(rng: &mut ChaCha8Rng, duration: f64) -> SegmentSet {
    let n = rng.random_range(1..=3);
    let pairs: Vec<(f64, f64)> = (0..n)
        .map(|_| {
            let len = rng.random_range(5.0..duration / 3.0);
            let s = rng.random_range(0.0..duration - len);
            (s, s + len)
        })
        .collect();
    SegmentSet::from_pairs(&pairs).unwrap()
}

/// Marks 1 ms bins whose centers fall inside the set.
fn rasterize(set: &SegmentSet, bins: usize) -> Vec<bool> {
    let mut out = vec![false; bins];
    for r in set.segments() {
        let lo = (r.start() * 1000.0 - 0.5).ceil().max(0.0) as usize;
        let hi = ((r.end() * 1000.0 - 0.5).ceil().max(0.0) as usize).min(bins);
        if lo < hi {
            out[lo..hi].fill(true);
        }
    }
    out
}

fn interval_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..1000 {
        let duration = rng.random_range(30.0..90.0);
        let bins = (duration * 1000.0) as usize + 1;
        let (p, g) = (random_set(&mut rng, duration), random_set(&mut rng, duration));
        let (rp, rg) = (rasterize(&p, bins), rasterize(&g, bins));
        let (mut inter, mut pn, mut gn, mut uni) = (0usize, 0usize, 0usize, 0usize);
        for (&a, &b) in rp.iter().zip(&rg) {
            pn += a as usize;
            gn += b as usize;
            inter += (a && b) as usize;
            uni += (a || b) as usize;
        }
        let prec = inter as f64 / pn as f64;
        let cov = inter as f64 / gn as f64;
        let f1 = if inter == 0 { 0.0 } else { 2.0 * prec * cov / (prec + cov) };
        let want = [inter as f64 / uni as f64, prec, cov, f1];
        let s = score_pair(&p, &g).map_err(|e| e.to_string())?;
        let got = [s.iou, s.precision, s.coverage, s.f1];
        for (k, (a, b)) in got.iter().zip(want).enumerate() {
            ensure((a - b).abs() <= 2e-3, || {
                format!("case {case} metric {k}: analytic {a} vs raster {b} for {:?} / {:?}", p.to_pairs(), g.to_pairs())
            })?;
        }
    }
    Ok(())
}

// ----------------------------------------------------------------- isodata

fn unit_rows(rng: &mut ChaCha8Rng, n: usize, dim: usize, blobs: usize) -> Vec<Vec<f32>> {
    let centers: Vec<Vec<f64>> = (0..blobs).map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    (0..n)
        .map(|i| {
            let c = &centers[i % blobs];
            let v: Vec<f64> = c.iter().map(|x| x + rng.random_range(-0.6..0.6)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter().map(|x| (x / norm) as f32).collect()
        })
        .collect()
}

fn normed(v: &[f64]) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / n).collect()
}

fn cos_all(row: &[f64], centers: &[Vec<f64>]) -> Vec<f64> {
    let r = normed(row);
    centers.iter().map(|c| normed(c).iter().zip(&r).map(|(a, b)| a * b).sum()).collect()
}

fn mean_of(rows: &[Vec<f64>], members: impl Iterator<Item = usize>) -> Vec<f64> {
    let mut m = vec![0.0; rows[0].len()];
    let mut k = 0.0;
    for i in members {
        m.iter_mut().zip(&rows[i]).for_each(|(a, v)| *a += v);
        k += 1.0;
    }
    m.iter().map(|v| v / k).collect()
}

/// Lloyd iterations of spherical k-means: nearest center by cosine (lowest
/// id on ties), centers are member means, empty clusters are dropped and ids
/// renumbered in order. Stops when the assignment repeats.
fn reference_kmeans(rows: &[Vec<f64>], init: &[usize]) -> Vec<usize> {
    let mut centers: Vec<Vec<f64>> = init.iter().map(|&i| rows[i].clone()).collect();
    let mut prev: Option<Vec<usize>> = None;
    for _ in 0..10_000 {
        let assign: Vec<usize> = rows
            .iter()
            .map(|r| {
                let sims = cos_all(r, &centers);
                let mut best = 0;
                for j in 1..sims.len() {
                    if sims[j] > sims[best] {
                        best = j;
                    }
                }
                best
            })
            .collect();
        if prev.as_ref() == Some(&assign) {
            return assign;
        }
        let used: Vec<usize> = (0..centers.len()).filter(|j| assign.contains(j)).collect();
        let relabel = |c: usize| used.iter().position(|&u| u == c).unwrap();
        let compact: Vec<usize> = assign.iter().map(|&c| relabel(c)).collect();
        centers = (0..used.len())
            .map(|j| mean_of(rows, (0..rows.len()).filter(|&i| compact[i] == j)))
            .collect();
        prev = Some(compact);
    }
    panic!("reference k-means did not converge")
}

fn isodata_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    // (a) + (c): varied thresholds, exhaustive fixed-point check
    for case in 0..200 {
        let n = rng.random_range(4..=64);
        let dim = rng.random_range(2..=12);
        let blobs = rng.random_range(1..=6);
        let rows = unit_rows(&mut rng, n, dim, blobs);
        let k_max = rng.random_range(1..=n.min(12));
        let k_min = rng.random_range(1..=k_max.min(3));
        let p = IsodataParams {
            k_init: rng.random_range(k_min..=k_max),
            k_min,
            k_max,
            theta_split: rng.random_range(0.3..0.98),
            theta_merge: rng.random_range(0.6..0.999),
            n_min: rng.random_range(1..=3),
            max_iters: rng.random_range(1..=30),
            delta_max: 1e-6,
            rng_seed: rng.random(),
        };
        let x = EmbeddingMatrix::from_rows(&rows).unwrap();
        let c = isodata_cluster_with(&x, &p, ExecMode::Sequential).map_err(|e| e.to_string())?;
        let k = c.k();
        ensure((p.k_min..=p.k_max).contains(&k), || format!("case {case}: k = {k} outside [{}, {}]", p.k_min, p.k_max))?;
        let rows64: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|&v| v as f64).collect()).collect();
        for j in 0..k {
            let members = c.members(j);
            ensure(!members.is_empty(), || format!("case {case}: cluster {j} is empty"))?;
            let m = mean_of(&rows64, members.into_iter());
            let off = m.iter().zip(&c.centers[j]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            ensure(off < 1e-9, || format!("case {case}: center {j} is not its member mean (off by {off})"))?;
        }
        for (i, r) in rows64.iter().enumerate() {
            let sims = cos_all(r, &c.centers);
            let best = sims.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let own = sims[c.assignments[i]];
            ensure(own >= best - 1e-12, || format!("case {case}: row {i} prefers another center ({own} < {best})"))?;
        }
    }
    // (b): thresholds that disable split, merge and the size floor
    for case in 0..200 {
        let n = rng.random_range(8..=120);
        let dim = rng.random_range(2..=16);
        let blobs = rng.random_range(1..=8);
        let rows = unit_rows(&mut rng, n, dim, blobs);
        let k_init = rng.random_range(1..=n.min(10));
        let seed: u64 = rng.random();
        let p = IsodataParams {
            k_init,
            k_min: 1,
            k_max: k_init,
            theta_split: -1.0,
            theta_merge: 1.01,
            n_min: 1,
            max_iters: 20,
            delta_max: 1e-9,
            rng_seed: seed,
        };
        let x = EmbeddingMatrix::from_rows(&rows).unwrap();
        let c = isodata_cluster_with(&x, &p, ExecMode::Parallel).map_err(|e| e.to_string())?;
        let rows64: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|&v| v as f64).collect()).collect();
        let want = reference_kmeans(&rows64, &initial_center_rows(&x, k_init, seed));
        ensure(c.assignments == want, || format!("case {case}: assignments differ from reference k-means"))?;
    }
    Ok(())
}

// --------------------------------------------------------------------- dsl

fn random_list(rng: &mut ChaCha8Rng, total: u64) -> Vec<u64> {
    match rng.random_range(0..4) {
        0 => Vec::new(),
        1 => {
            let s = rng.random_range(0..total);
            let e = (s + rng.random_range(0..50)).min(total - 1);
            (s..=e).collect()
        }
        _ => (0..rng.random_range(1..30)).map(|_| rng.random_range(0..total)).collect(),
    }
}

fn list_text(xs: &[u64]) -> String {
    let parts: Vec<String> = xs.iter().map(u64::to_string).collect();
    format!("[{}]", parts.join(", "))
}

/// Frame index of `m` milliseconds by exhaustive search: the last frame `i`
/// with `i / r <= m / 1000`, clamped to the video.
fn oracle_index(m: u64, fps: u64, total: u64) -> u64 {
    (0..total).filter(|&i| 1000 * i <= m * fps).max().unwrap_or(0)
}

fn oracle_segments(set: &BTreeSet<u64>, fps: u64, meta: &VideoMeta) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    for i in 0..meta.total_frames {
        if !set.contains(&i) {
            continue;
        }
        let (s, e) = (i as f64 / fps as f64, ((i + 1) as f64 / fps as f64).min(meta.duration));
        if s >= e {
            continue;
        }
        match out.last_mut() {
            Some(last) if last.1 >= s => last.1 = e,
            _ => out.push((s, e)),
        }
    }
    out
}

fn dsl_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for case in 0..1000 {
        let fps = *[1u64, 2, 10, 24, 25, 30].choose(&mut rng).unwrap();
        let dur_ms = rng.random_range(1000..=120_000u64);
        let mut meta = VideoMeta::derived("d", dur_ms as f64 / 1000.0, fps as f64).unwrap();
        if rng.random_bool(0.5) {
            meta.resolution = Some(Resolution { width: rng.random_range(1..4000), height: rng.random_range(1..4000) });
        }
        let total = meta.total_frames;
        let (a, b) = (random_list(&mut rng, total), random_list(&mut rng, total));
        let answer = random_list(&mut rng, total);
        let cands = if rng.random_bool(0.3) { None } else { Some(random_list(&mut rng, total)) };
        let m1 = rng.random_range(0..=dur_ms + 5000);
        let (lo, hi) = {
            let x = rng.random_range(0..=dur_ms + 5000);
            let y = rng.random_range(0..=dur_ms + 5000);
            (x.min(y), x.max(y))
        };
        let secs = |m: u64| format!("{}", m as f64 / 1000.0);
        let res_line = if meta.resolution.is_some() { "res = get_resolution()\n" } else { "" };
        let text = format!(
            "d = get_duration()\n{res_line}n = get_total_frame_num()\n\
             g = grounding_select(\"pan\", {})\n\
             i = indices_list_intersect({}, {})\n\
             u = indices_list_union({la}, {lb})\n\
             f = indices_concat_and_fill({la}, {lb})\n\
             c = indices_concat({la}, {lb})\n\
             s = timestamp_to_single_index({})\n\
             w = single_timestamp_to_index_range({})\n\
             r = range_timestamp_to_index_range({}, {})\n",
            cands.as_ref().map_or("None".to_string(), |c| list_text(c)),
            list_text(&a),
            list_text(&b),
            secs(m1),
            secs(m1),
            secs(lo),
            secs(hi),
            la = list_text(&a),
            lb = list_text(&b),
        );
        let plan = parse_plan(&text).map_err(|e| format!("case {case}: {e}\n{text}"))?;
        let printed = plan.to_string();
        let reparsed = parse_plan(&printed).map_err(|e| format!("case {case}: reprint does not parse: {e}"))?;
        ensure(reparsed == plan && reparsed.to_string() == printed, || format!("case {case}: round trip changed the plan"))?;

        let grounder = ScriptedGrounder::new([("pan".to_string(), answer.clone())]);
        let exec = execute_plan(&plan, &meta, Some(&grounder)).map_err(|e| format!("case {case}: {e}"))?;

        let sa: BTreeSet<u64> = a.iter().copied().collect();
        let sb: BTreeSet<u64> = b.iter().copied().collect();
        let all = 0..total;
        let pick = |f: &dyn Fn(u64) -> bool| -> Vec<u64> { all.clone().filter(|&i| f(i)).collect() };
        let ground = {
            let allowed: Option<BTreeSet<u64>> = cands.as_ref().map(|c| c.iter().copied().collect());
            let ans: BTreeSet<u64> = answer.iter().copied().collect();
            pick(&|i| ans.contains(&i) && allowed.as_ref().is_none_or(|s| s.contains(&i)))
        };
        let both: Vec<u64> = a.iter().chain(&b).copied().collect();
        let fill = match (both.iter().min(), both.iter().max()) {
            (Some(&x), Some(&y)) => pick(&|i| x <= i && i <= y),
            _ => Vec::new(),
        };
        let c1 = oracle_index(m1, fps, total) as i64;
        let (r0, r1) = (oracle_index(lo, fps, total), oracle_index(hi, fps, total));
        let range = pick(&|i| r0 <= i && i <= r1);
        let mut want = vec![("d", Value::Num(meta.duration))];
        if let Some(r) = meta.resolution {
            want.push(("res", Value::Resolution(r.width, r.height)));
        }
        want.extend([
            ("n", Value::Count(total)),
            ("g", Value::Indices(ground)),
            ("i", Value::Indices(pick(&|i| sa.contains(&i) && sb.contains(&i)))),
            ("u", Value::Indices(pick(&|i| sa.contains(&i) || sb.contains(&i)))),
            ("f", Value::Indices(fill)),
            ("c", Value::Sequence(both.clone())),
            ("s", Value::Count(c1 as u64)),
            ("w", Value::Indices(pick(&|i| c1 - 30 <= i as i64 && i as i64 <= c1 + 29))),
            ("r", Value::Indices(range.clone())),
        ]);
        ensure(exec.bindings.len() == want.len(), || format!("case {case}: {} bindings", exec.bindings.len()))?;
        for ((name, got), (wname, wv)) in exec.bindings.iter().zip(&want) {
            ensure(name == wname && got == wv, || format!("case {case}: `{name}` = {got:?}, oracle says {wv:?}"))?;
        }
        let rset: BTreeSet<u64> = range.iter().copied().collect();
        let seg = exec.segments.to_pairs();
        let oracle = oracle_segments(&rset, fps, &meta);
        ensure(seg == oracle, || format!("case {case}: segments {seg:?}, oracle {oracle:?}"))?;
        let direct = tools::indices_to_segments(&meta, &a.iter().copied().collect::<BTreeSet<_>>().into_iter().collect::<Vec<_>>());
        ensure(direct.to_pairs() == oracle_segments(&sa, fps, &meta), || format!("case {case}: indices_to_segments"))?;

        if meta.resolution.is_none() {
            let p = parse_plan("res = get_resolution()\nr = range_timestamp_to_index_range(0, 1)").unwrap();
            ensure(matches!(execute_plan(&p, &meta, None), Err(Error::Unavailable(_))), || {
                format!("case {case}: missing resolution must be unavailable")
            })?;
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- benchgen

fn golden_bytes(path: &Path, fresh: &[u8]) -> Outcome {
    if std::env::var_os("TVS_UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(path, fresh).unwrap();
    }
    let want = std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
    ensure(want == fresh, || format!("{} differs from the fresh output", path.display()))
}

/// Groups and triplets per video of the annotation fixture, traced by hand
/// at the default threshold 0.1:
///
/// * v01..v08: three chained steps (gaps of 1 s in v01 and v05 score
///   1/50 and 1/60) form one group and one triplet;
/// * v09: (40, 60) -> (50, 70) scores 10/30, so a second group, one triplet;
/// * v10: listed out of order, one group and one triplet once sorted;
/// * v11: two steps, one group, no triplet;
/// * v12: each pair overlaps by more than 0.6, three groups, no triplet.
const HAND_TRACED: [(&str, usize, usize); 12] = [
    ("v01", 1, 1),
    ("v02", 1, 1),
    ("v03", 1, 1),
    ("v04", 1, 1),
    ("v05", 1, 1),
    ("v06", 1, 1),
    ("v07", 1, 1),
    ("v08", 1, 1),
    ("v09", 2, 1),
    ("v10", 1, 1),
    ("v11", 1, 0),
    ("v12", 3, 0),
];

fn benchgen_golden() -> Outcome {
    let golden = common::fixtures().join("golden/benchgen");
    let tmp = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for (k, mode) in [ExecMode::Sequential, ExecMode::Parallel].into_iter().enumerate() {
        let dir = tmp.path().join(format!("run{k}"));
        let ws = common::prepare(&dir, mode);
        outputs.push((dir, ws));
    }
    let ds = &outputs[0].1.dataset;

    let videos = load_annotations(&common::pipeline_fixture("annotations.json"), None).unwrap();
    let cfg = BenchgenConfig::default();
    let (mut groups, mut triplets) = (0, 0);
    for (v, &(name, g, t)) in videos.iter().zip(&HAND_TRACED) {
        ensure(v.meta.vid_name == name, || format!("unexpected video {}", v.meta.vid_name))?;
        let one = build_dataset(std::slice::from_ref(v), &cfg, ExecMode::Sequential).unwrap();
        ensure((one.report.groups, one.report.triplets) == (g, t), || {
            format!("{name}: {} groups / {} triplets, traced {g} / {t}", one.report.groups, one.report.triplets)
        })?;
        groups += g;
        triplets += t;
    }
    ensure((ds.report.groups, ds.report.triplets, ds.items.len()) == (groups, triplets, 9 * triplets), || {
        format!("totals {} / {} / {}", ds.report.groups, ds.report.triplets, ds.items.len())
    })?;

    for file in ["items.jsonl", "report.json", "train.jsonl", "val.jsonl", "test.jsonl"] {
        let a = std::fs::read(outputs[0].1.dataset_dir.join(file)).unwrap();
        let b = std::fs::read(outputs[1].1.dataset_dir.join(file)).unwrap();
        ensure(a == b, || format!("{file} differs between sequential and parallel runs"))?;
        golden_bytes(&golden.join(file), &a)?;
    }

    let count = |s: Split| ds.items.iter().filter(|i| i.split == Some(s)).count();
    ensure((count(Split::Train), count(Split::Val), count(Split::Test)) == (63, 9, 18), || "split totals".into())?;
    for t in tvs_core::domain::QaType::ALL {
        let of = |s: Split| ds.items.iter().filter(|i| i.qa_type == t && i.split == Some(s)).count();
        ensure((of(Split::Train), of(Split::Val), of(Split::Test)) == (7, 1, 2), || format!("{t:?} is not 7/1/2"))?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for case in 0..1000 {
        let mut r = || {
            let s: f64 = (rng.random_range(0..2000) as f64) / 10.0;
            (s, s + rng.random_range(1..600) as f64 / 10.0)
        };
        let ((s1, e1), (s2, e2)) = (r(), r());
        let theta = [0.0, 0.05, 0.1, 0.3, 1.0][case % 5];
        let (a, b) = (TimeRange::new(s1, e1).unwrap(), TimeRange::new(s2, e2).unwrap());
        let want = (e1.min(e2) - s1.max(s2)).abs() / (e1.max(e2) - s1.min(s2));
        ensure(overlap_ratio(&a, &b) == want, || format!("case {case}: overlap_ratio"))?;
        let want_c = s2 > s1 && e2 > e1 && want <= theta;
        ensure(connectable(&a, &b, theta) == want_c, || format!("case {case}: connectable"))?;
    }

    // full-scale totals: 306 triplets, nine questions each
    let (tr, va, te) = split_counts(306);
    ensure((9 * tr, 9 * va, 9 * te, 9 * 306) == (1926, 270, 558, 2754), || format!("split_counts(306) = {tr}/{va}/{te}"))?;

    if let Some(path) = std::env::var_os("TVS_YOUCOOK2_ANNOTATIONS") {
        let videos = load_annotations(Path::new(&path), Some(30.0)).map_err(|e| e.to_string())?;
        let ds = build_dataset(&videos, &cfg, ExecMode::Parallel).map_err(|e| e.to_string())?;
        eprintln!("youcook2: {} items, splits {:?}", ds.items.len(), ds.report.split_totals);
        ensure(ds.items.len() % 9 == 0, || "item count is not a multiple of 9".into())?;
        if std::env::var("TVS_YOUCOOK2_EXPECT_FULL").as_deref() == Ok("1") {
            let got: Vec<usize> = ["train", "val", "test"].iter().map(|k| ds.report.split_totals[*k]).collect();
            ensure(ds.items.len() == 2754 && got == [1926, 270, 558], || format!("{} items, splits {got:?}", ds.items.len()))?;
        }
    }
    Ok(())
}

// ------------------------------------------------------------------- agent

fn agent_replay() -> Outcome {
    let all = scenarios::scenarios();
    let names: BTreeSet<&str> = all.iter().map(|s| s.name).collect();
    for required in [
        "immediate_stop",
        "single_round_success",
        "fail_then_succeed",
        "view_budget_exhaustion",
        "round_cap",
        "enlargement_flag",
    ] {
        ensure(names.contains(required), || format!("missing scenario {required}"))?;
    }
    let dir = common::fixtures().join("golden/agent");
    for s in &all {
        let r = scenarios::run(s);
        scenarios::check(s, &r).map_err(|e| format!("{}: {e}", s.name))?;
        let json = serde_json::to_string_pretty(&r).unwrap() + "\n";
        golden_bytes(&dir.join(format!("{}.json", s.name)), json.as_bytes())?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let prompts = PromptSet::default();
    for case in 0..100 {
        let duration = rng.random_range(1.0..7200.0);
        let fps = [24.0, 25.0, 29.97, 30.0, 60.0][rng.random_range(0..5)];
        let meta = VideoMeta::derived("id", duration, fps).unwrap();
        let words = ["what", "is", "added", "to", "the", "pan", "after", "chopping", "onions", "?"];
        let query: Vec<&str> = (0..rng.random_range(1..12)).map(|_| *words.choose(&mut rng).unwrap()).collect();
        let query = query.join(" ");
        let index = KeyframeIndex::new(
            meta.clone(),
            vec![KeyframeEntry { timestamp: 0.0, frame_index: 0, caption: "CAP[0]".into(), embedding_row: 0 }],
        )
        .unwrap();
        let launcher = ScriptedChat::replies([scenarios::stop()]).strict();
        let idle = ScriptedChat::replies([]).strict();
        let viewer = Viewer::new(&index, &idle, &prompts);
        let r = run_tvs(&meta, &query, &viewer, AgentBackends { launcher: &launcher, validator: &idle }, &prompts, &AgentConfig::default())
            .map_err(|e| format!("identity case {case}: {e}"))?;
        ensure(r.pair.video == meta.full_extent() && r.pair.query == query && r.rounds == 0, || {
            format!("identity case {case}: output differs from input")
        })?;
    }
    Ok(())
}

fn launcher_blind() -> Outcome {
    let prompts = PromptSet::default();
    PromptSet::check_role("launcher", &prompts.launcher).map_err(|e| e.to_string())?;
    let leaky = PromptTemplate::parse("{query}\n{success_history}\n{failure_history}\n{captions}").unwrap();
    ensure(PromptSet::check_role("launcher", &leaky).is_err(), || "a launcher template with captions was accepted".into())?;

    let mut launcher_prompts = 0;
    let mut viewer_sentinels = 0;
    for s in scenarios::scenarios() {
        let r = scenarios::run(&s);
        for p in scenarios::launcher_prompts(&r) {
            launcher_prompts += 1;
            ensure(!p.contains("CAP["), || format!("{}: caption sentinel in a launcher prompt", s.name))?;
        }
        viewer_sentinels += r
            .transcript
            .entries()
            .iter()
            .filter(|e| e.role.starts_with("viewer") && e.raw.contains("CAP["))
            .count();
    }
    ensure(launcher_prompts > 0 && viewer_sentinels > 0, || "the sentinel check saw no traffic".into())?;
    Ok(())
}

// --------------------------------------------------------------- pipeline

fn screen_and_eval(root: &Path, mode: ExecMode) -> Result<Vec<String>, String> {
    let ws = common::prepare(root, mode);
    let provider = ScriptedProvider::load(&common::pipeline_fixture("scripts.json")).map_err(|e| e.to_string())?;
    let mut reports = Vec::new();
    for variant in [Variant::Full, Variant::Simple, Variant::Blind] {
        let cfg = common::config(variant);
        let out = root.join(format!("runs/{}", variant.name()));
        let s = cmd_screen(&ws.dataset.items, &ws.index_dir, &out, &cfg, &provider, mode).map_err(|e| e.to_string())?;
        ensure(s.is_clean() && s.completed.len() == ws.dataset.items.len(), || format!("{}: {s:?}", variant.name()))?;
        let again = cmd_screen(&ws.dataset.items, &ws.index_dir, &out, &cfg, &provider, mode).map_err(|e| e.to_string())?;
        ensure(again.completed.is_empty() && again.skipped.len() == ws.dataset.items.len(), || {
            format!("{}: resume re-ran items", variant.name())
        })?;
        let preds = load_predictions(&out.join("records")).map_err(|e| e.to_string())?;
        let report = cmd_eval(&preds, &ws.dataset.items, &cfg.hash(), None, mode).map_err(|e| e.to_string())?;
        ensure(report.scored == ws.dataset.items.len(), || format!("{}: scored {}", variant.name(), report.scored))?;
        reports.push(serde_json::to_string_pretty(&report).unwrap());
    }
    Ok(reports)
}

fn end_to_end() -> Outcome {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = screen_and_eval(a.path(), ExecMode::Parallel)?;
    let second = screen_and_eval(b.path(), ExecMode::Sequential)?;
    ensure(first == second, || "metrics reports differ between runs".into())
}
