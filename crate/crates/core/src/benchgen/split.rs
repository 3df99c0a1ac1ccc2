use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::items::{QAItem, Split};
use crate::domain::QaType;
use crate::error::{Error, Result};

/// Per-type counts: `floor(0.7 c)` train, `floor(0.1 c)` val, the rest test.
pub fn split_counts(c: usize) -> (usize, usize, usize) {
    let train = c * 7 / 10;
    let val = c / 10;
    (train, val, c - train - val)
}

/// Assigns a split to every item, stratified by type. Membership within a
/// type is a seeded shuffle; the item order is left unchanged.
pub fn split_dataset(items: &mut [QAItem], seed: u64) -> Result<()> {
    let mut by_type: BTreeMap<QaType, Vec<usize>> = BTreeMap::new();
    for (i, it) in items.iter().enumerate() {
        by_type.entry(it.qa_type).or_default().push(i);
    }
    let deficient: Vec<String> = QaType::ALL
        .iter()
        .filter_map(|t| {
            let c = by_type.get(t).map_or(0, Vec::len);
            let (a, b, d) = split_counts(c);
            (a == 0 || b == 0 || d == 0).then(|| format!("{}: {c} item(s)", t.tag()))
        })
        .collect();
    if items.is_empty() {
        return Ok(());
    }
    if !deficient.is_empty() {
        return Err(Error::validation(format!(
            "too few items to stratify 7:1:2 (need at least 10 per type): {}",
            deficient.join(", ")
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for t in QaType::ALL {
        let mut idx = by_type.remove(&t).unwrap_or_default();
        idx.shuffle(&mut rng);
        let (train, val, _) = split_counts(idx.len());
        for (rank, i) in idx.into_iter().enumerate() {
            items[i].split = Some(if rank < train {
                Split::Train
            } else if rank < train + val {
                Split::Val
            } else {
                Split::Test
            });
        }
    }
    Ok(())
}
