use super::annotations::StepAnnotation;
use crate::domain::TimeRange;
use crate::error::{Error, Result};

pub const DEFAULT_THETA: f64 = 0.1;

/// `|min(e1,e2) - max(s1,s2)| / (max(e1,e2) - min(s1,s2))`, absolute value
/// included, so separated ranges score gap / span.
pub fn overlap_ratio(a: &TimeRange, b: &TimeRange) -> f64 {
    let num = (a.end().min(b.end()) - a.start().max(b.start())).abs();
    let den = a.end().max(b.end()) - a.start().min(b.start());
    num / den
}

pub fn connectable(a: &TimeRange, b: &TimeRange, theta: f64) -> bool {
    b.start() > a.start() && b.end() > a.end() && overlap_ratio(a, b) <= theta
}

/// True for connectable pairs that do not touch: the absolute value turned
/// a gap into a small ratio.
pub fn is_gap_case(a: &TimeRange, b: &TimeRange) -> bool {
    a.end().min(b.end()) < a.start().max(b.start())
}

/// Greedy left-to-right grouping: a step joins the current group when it is
/// connectable to the group's last member. Returns index groups.
pub fn group_annotations(steps: &[StepAnnotation], theta: f64) -> Result<Vec<Vec<usize>>> {
    if let Some(i) = steps.windows(2).position(|w| w[1].segment.start() < w[0].segment.start()) {
        return Err(Error::validation(format!("steps are not sorted by start time at #{}", i + 1)));
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, s) in steps.iter().enumerate() {
        match groups.last_mut() {
            Some(g) if connectable(&steps[*g.last().unwrap()].segment, &s.segment, theta) => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    Ok(groups)
}

/// All `i < j < k` within a group whose consecutive pairs are connectable,
/// in lexicographic order. Entries are positions into `steps`.
pub fn extract_triplets(steps: &[StepAnnotation], group: &[usize], theta: f64) -> Vec<[usize; 3]> {
    let c = |a: usize, b: usize| connectable(&steps[a].segment, &steps[b].segment, theta);
    let mut out = Vec::new();
    for (x, &i) in group.iter().enumerate() {
        for (y, &j) in group.iter().enumerate().skip(x + 1) {
            if !c(i, j) {
                continue;
            }
            for &k in &group[y + 1..] {
                if c(j, k) {
                    out.push([i, j, k]);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(s: f64, e: f64) -> TimeRange {
        TimeRange::new(s, e).unwrap()
    }

    fn steps(ranges: &[(f64, f64)]) -> Vec<StepAnnotation> {
        ranges
            .iter()
            .map(|&(s, e)| StepAnnotation { segment: r(s, e), sentence: format!("{s}-{e}") })
            .collect()
    }

    #[test]
    fn ratio_examples() {
        assert!((overlap_ratio(&r(0.0, 10.0), &r(5.0, 15.0)) - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(overlap_ratio(&r(0.0, 10.0), &r(10.0, 20.0)), 0.0);
        assert!((overlap_ratio(&r(0.0, 5.0), &r(8.0, 10.0)) - 0.3).abs() < 1e-12);
        assert!(connectable(&r(0.0, 10.0), &r(10.5, 20.0), 0.1));
        assert!(!connectable(&r(0.0, 10.0), &r(5.0, 15.0), 0.1));
        assert!(!connectable(&r(5.0, 15.0), &r(0.0, 10.0), 0.1));
    }

    #[test]
    fn grouping_examples() {
        let chain = steps(&[(0.0, 10.0), (10.0, 20.0), (20.0, 30.0), (30.0, 40.0)]);
        assert_eq!(group_annotations(&chain, 0.1).unwrap(), vec![vec![0, 1, 2, 3]]);
        // connectable, not connectable (big gap), connectable
        let split = steps(&[(0.0, 10.0), (10.0, 20.0), (60.0, 70.0), (70.0, 80.0)]);
        assert_eq!(group_annotations(&split, 0.1).unwrap(), vec![vec![0, 1], vec![2, 3]]);
        assert_eq!(group_annotations(&steps(&[(1.0, 2.0)]), 0.1).unwrap(), vec![vec![0]]);
        assert!(group_annotations(&steps(&[(5.0, 6.0), (1.0, 2.0)]), 0.1).is_err());
    }

    #[test]
    fn triplet_examples() {
        let chain = steps(&[(0.0, 10.0), (10.0, 20.0), (20.0, 30.0), (30.0, 40.0)]);
        let all = extract_triplets(&chain, &[0, 1, 2, 3], 0.1);
        // skip pairs are gap cases: (0,10)-(20,30) ratio 10/30 > 0.1, so only chains of neighbours
        assert_eq!(all, vec![[0, 1, 2], [1, 2, 3]]);
        let wide = extract_triplets(&chain, &[0, 1, 2, 3], 0.5);
        assert_eq!(wide, vec![[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]]);
        assert!(extract_triplets(&chain, &[0, 1], 0.1).is_empty());
    }
}
