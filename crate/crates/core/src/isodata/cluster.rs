//! Adaptive cosine-similarity clustering with split and merge steps.
//!
//! Each iteration assigns rows to the most similar center, recomputes centers
//! as raw member means, merges the smallest cluster away when it is below the
//! minimum size, splits incoherent clusters while under the cluster cap, and
//! merges near-duplicate centers while above the floor. Similarities are
//! always computed on l2-normalized vectors.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::matrix::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::exec::ExecMode;

/// Reassignment passes allowed after the main loop to reach a fixed point.
const POLISH_PASSES: usize = 100;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IsodataParams {
    pub k_init: usize,
    pub max_iters: usize,
    /// Clusters whose mean member-to-center similarity falls below this are split.
    pub theta_split: f64,
    /// Center pairs more similar than this are merged.
    pub theta_merge: f64,
    pub k_max: usize,
    pub k_min: usize,
    pub delta_max: f64,
    pub n_min: usize,
    pub rng_seed: u64,
}

impl Default for IsodataParams {
    fn default() -> Self {
        IsodataParams {
            k_init: 8,
            max_iters: 20,
            theta_split: 0.80,
            theta_merge: 0.95,
            k_max: 32,
            k_min: 1,
            delta_max: 1e-4,
            n_min: 2,
            rng_seed: 0,
        }
    }
}

impl IsodataParams {
    pub fn validate(&self, n: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::validation(format!("isodata params: {msg}")));
        if self.k_min < 1 {
            return bad("k_min must be >= 1".into());
        }
        if self.k_min > self.k_init || self.k_init > self.k_max {
            return bad(format!(
                "need k_min <= k_init <= k_max (got {} / {} / {})",
                self.k_min, self.k_init, self.k_max
            ));
        }
        if self.k_init > n {
            return bad(format!("k_init {} exceeds the {n} available rows", self.k_init));
        }
        if self.n_min < 1 || self.max_iters < 1 {
            return bad("n_min and max_iters must be >= 1".into());
        }
        for (name, v) in [("theta_split", self.theta_split), ("theta_merge", self.theta_merge)] {
            if !v.is_finite() {
                return bad(format!("{name} must be finite"));
            }
        }
        if !(self.delta_max.is_finite() && self.delta_max >= 0.0) {
            return bad("delta_max must be a non-negative number".into());
        }
        Ok(())
    }

    /// Shrinks the cluster counts so they fit `n` rows.
    pub fn fitted_to(&self, n: usize) -> Self {
        let mut p = self.clone();
        p.k_max = p.k_max.min(n).max(1);
        p.k_init = p.k_init.min(p.k_max).max(1);
        p.k_min = p.k_min.min(p.k_init).max(1);
        p
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    pub assignments: Vec<usize>,
    pub centers: Vec<Vec<f64>>,
    pub iterations_run: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl Clustering {
    pub fn k(&self) -> usize {
        self.centers.len()
    }

    pub fn members(&self, cluster: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] == cluster)
            .collect()
    }
}

pub(crate) fn unit(v: &[f64]) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter().map(|x| x / norm).collect()
    } else {
        v.to_vec()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn content_hash(row: &[f32], seed: u64) -> u64 {
    // FNV-1a over the f32 bit patterns, salted with the seed.
    let mut h = 0xcbf2_9ce4_8422_2325u64 ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    for v in row {
        for b in v.to_bits().to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

/// Rows used as the initial centers, in cluster-id order.
///
/// Rows are ranked by a seeded content hash and `k` ranks are sampled without
/// replacement, so the chosen vectors do not depend on row order.
pub fn initial_center_rows(x: &EmbeddingMatrix, k: usize, seed: u64) -> Vec<usize> {
    let n = x.rows();
    let mut ranked: Vec<(u64, usize)> = (0..n).map(|i| (content_hash(x.row(i), seed), i)).collect();
    ranked.sort();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picks = sample(&mut rng, n, k.min(n)).into_vec();
    picks.sort_unstable();
    picks.into_iter().map(|p| ranked[p].1).collect()
}

struct Cluster {
    members: Vec<usize>,
    center: Vec<f64>,
}

struct Workspace {
    raw: Vec<Vec<f64>>,
    unit_rows: Vec<Vec<f64>>,
    mode: ExecMode,
}

impl Workspace {
    fn new(x: &EmbeddingMatrix, mode: ExecMode) -> Self {
        let raw: Vec<Vec<f64>> = (0..x.rows())
            .map(|i| x.row(i).iter().map(|&v| v as f64).collect())
            .collect();
        let unit_rows = raw.iter().map(|r| unit(r)).collect();
        Workspace { raw, unit_rows, mode }
    }

    fn n(&self) -> usize {
        self.raw.len()
    }

    /// Argmax cosine similarity per row; ties go to the lowest cluster id.
    fn assign(&self, centers: &[Vec<f64>]) -> Vec<usize> {
        let unit_centers: Vec<Vec<f64>> = centers.iter().map(|c| unit(c)).collect();
        self.mode.map(&self.unit_rows, |row| {
            let mut best = 0;
            let mut best_sim = f64::NEG_INFINITY;
            for (j, c) in unit_centers.iter().enumerate() {
                let s = dot(row, c);
                if s > best_sim {
                    best_sim = s;
                    best = j;
                }
            }
            best
        })
    }

    fn mean(&self, members: &[usize]) -> Vec<f64> {
        let d = self.raw[0].len();
        let mut m = vec![0.0; d];
        for &i in members {
            for (acc, v) in m.iter_mut().zip(&self.raw[i]) {
                *acc += v;
            }
        }
        let k = members.len().max(1) as f64;
        m.iter_mut().for_each(|v| *v /= k);
        m
    }

    /// Groups rows by assignment, recomputing centers; empty clusters vanish.
    fn group(&self, assign: &[usize], k: usize) -> Vec<Cluster> {
        let mut members = vec![Vec::new(); k];
        for (i, &c) in assign.iter().enumerate() {
            members[c].push(i);
        }
        members
            .into_iter()
            .filter(|m| !m.is_empty())
            .map(|m| Cluster {
                center: self.mean(&m),
                members: m,
            })
            .collect()
    }

    fn intra_similarity(&self, c: &Cluster) -> f64 {
        let u = unit(&c.center);
        let total: f64 = c.members.iter().map(|&i| dot(&self.unit_rows[i], &u)).sum();
        total / c.members.len() as f64
    }

    /// Farthest-pair split. `None` when every member points the same way.
    fn split(&self, c: &Cluster) -> Option<(Cluster, Cluster)> {
        let u = unit(&c.center);
        let far = |from: &[f64]| {
            let mut best = c.members[0];
            let mut best_sim = f64::INFINITY;
            for &i in &c.members {
                let s = dot(&self.unit_rows[i], from);
                if s < best_sim {
                    best_sim = s;
                    best = i;
                }
            }
            best
        };
        let a = far(&u);
        let b = far(&self.unit_rows[a]);
        if dot(&self.unit_rows[a], &self.unit_rows[b]) >= 1.0 - 1e-12 {
            return None;
        }
        let (mut ma, mut mb) = (Vec::new(), Vec::new());
        for &i in &c.members {
            let row = &self.unit_rows[i];
            if dot(row, &self.unit_rows[a]) >= dot(row, &self.unit_rows[b]) {
                ma.push(i);
            } else {
                mb.push(i);
            }
        }
        if ma.is_empty() || mb.is_empty() {
            return None;
        }
        Some((
            Cluster { center: self.mean(&ma), members: ma },
            Cluster { center: self.mean(&mb), members: mb },
        ))
    }

    fn merge(&self, clusters: &mut Vec<Cluster>, keep: usize, absorb: usize) {
        let gone = clusters.remove(absorb);
        let keep = if absorb < keep { keep - 1 } else { keep };
        let target = &mut clusters[keep];
        target.members.extend(gone.members);
        target.members.sort_unstable();
        target.center = self.mean(&target.members);
    }

    fn flatten(&self, clusters: &[Cluster]) -> Vec<usize> {
        let mut assign = vec![0; self.n()];
        for (j, c) in clusters.iter().enumerate() {
            for &i in &c.members {
                assign[i] = j;
            }
        }
        assign
    }

    /// Splits the least coherent splittable cluster. Returns false if none can be split.
    fn split_worst(&self, clusters: &mut Vec<Cluster>) -> bool {
        let mut order: Vec<(f64, usize)> = clusters
            .iter()
            .enumerate()
            .map(|(j, c)| (self.intra_similarity(c), j))
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for (_, j) in order {
            if let Some((a, b)) = self.split(&clusters[j]) {
                clusters[j] = a;
                clusters.push(b);
                return true;
            }
        }
        false
    }
}

pub fn isodata_cluster(x: &EmbeddingMatrix, p: &IsodataParams) -> Result<Clustering> {
    isodata_cluster_with(x, p, ExecMode::default())
}

pub fn isodata_cluster_with(
    x: &EmbeddingMatrix,
    p: &IsodataParams,
    mode: ExecMode,
) -> Result<Clustering> {
    p.validate(x.rows())?;
    let ws = Workspace::new(x, mode);
    let mut warnings = Vec::new();
    let mut centers: Vec<Vec<f64>> = initial_center_rows(x, p.k_init, p.rng_seed)
        .into_iter()
        .map(|r| ws.raw[r].clone())
        .collect();

    let mut iterations = 0;
    loop {
        let old = centers.clone();
        let assign = ws.assign(&centers);
        let mut clusters = ws.group(&assign, centers.len());
        // an emptied cluster counts as undersized and is merged away
        let mut structural = clusters.len() != old.len();

        if clusters.len() > 1 {
            let smallest = (0..clusters.len())
                .min_by_key(|&j| (clusters[j].members.len(), j))
                .unwrap();
            if clusters[smallest].members.len() < p.n_min {
                let u = unit(&clusters[smallest].center);
                let nearest = (0..clusters.len())
                    .filter(|&j| j != smallest)
                    .map(|j| (dot(&u, &unit(&clusters[j].center)), j))
                    .fold(None::<(f64, usize)>, |best, cand| match best {
                        Some(b) if b.0 >= cand.0 => Some(b),
                        _ => Some(cand),
                    })
                    .unwrap()
                    .1;
                ws.merge(&mut clusters, nearest, smallest);
                structural = true;
            }
        }
        if clusters.len() < p.k_min {
            warnings.push(format!(
                "iteration {}: minimum-size merges left {} clusters, below k_min {}",
                iterations + 1,
                clusters.len(),
                p.k_min
            ));
        }

        let before_split = clusters.len();
        for j in 0..before_split {
            if clusters.len() >= p.k_max {
                break;
            }
            if ws.intra_similarity(&clusters[j]) < p.theta_split {
                if let Some((a, b)) = ws.split(&clusters[j]) {
                    clusters[j] = a;
                    clusters.push(b);
                    structural = true;
                }
            }
        }

        while clusters.len() > p.k_min {
            let units: Vec<Vec<f64>> = clusters.iter().map(|c| unit(&c.center)).collect();
            let mut best: Option<(f64, usize, usize)> = None;
            for i in 0..units.len() {
                for j in i + 1..units.len() {
                    let s = dot(&units[i], &units[j]);
                    if best.map_or(true, |b| s > b.0) {
                        best = Some((s, i, j));
                    }
                }
            }
            match best {
                Some((s, i, j)) if s > p.theta_merge => {
                    ws.merge(&mut clusters, i, j);
                    structural = true;
                }
                _ => break,
            }
        }

        centers = clusters.into_iter().map(|c| c.center).collect();
        let shift = if structural {
            f64::INFINITY
        } else {
            centers
                .iter()
                .zip(&old)
                .map(|(a, b)| dot(&sub(a, b), &sub(a, b)).sqrt())
                .fold(0.0, f64::max)
        };
        iterations += 1;
        if iterations >= p.max_iters || shift < p.delta_max {
            break;
        }
    }

    // Polish: reassign until the assignment is a fixed point of its centers.
    let mut previous: Option<Vec<usize>> = None;
    let mut converged = false;
    for _ in 0..POLISH_PASSES {
        let assign = ws.assign(&centers);
        if previous.as_ref() == Some(&assign) {
            converged = true;
            break;
        }
        let mut clusters = ws.group(&assign, centers.len());
        while clusters.len() < p.k_min && ws.split_worst(&mut clusters) {}
        previous = Some(ws.flatten(&clusters));
        centers = clusters.into_iter().map(|c| c.center).collect();
    }
    if !converged {
        warnings.push(format!(
            "reassignment did not settle within {POLISH_PASSES} passes; centers are not exact means"
        ));
    }

    let assign = ws.assign(&centers);
    let mut used = vec![false; centers.len()];
    assign.iter().for_each(|&c| used[c] = true);
    let mut remap = vec![usize::MAX; centers.len()];
    let mut kept = Vec::new();
    for (j, c) in centers.into_iter().enumerate() {
        if used[j] {
            remap[j] = kept.len();
            kept.push(c);
        }
    }
    let assignments: Vec<usize> = assign.into_iter().map(|c| remap[c]).collect();
    if kept.len() < p.k_min {
        warnings.push(format!(
            "only {} distinct clusters could be formed (k_min {})",
            kept.len(),
            p.k_min
        ));
    }
    for w in &warnings {
        log::warn!("isodata: {w}");
    }
    Ok(Clustering {
        assignments,
        centers: kept,
        iterations_run: iterations,
        warnings,
    })
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}
