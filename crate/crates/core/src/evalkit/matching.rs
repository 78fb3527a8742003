use serde::{Deserialize, Serialize};

use crate::detector::Detection;
use crate::simdata::Disk;

/// Default matching gate in pixels.
pub const DEFAULT_GATE: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub detection: usize,
    pub truth: usize,
    pub distance: f64,
}

/// Optimal one-to-one matching between detections and ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub pairs: Vec<MatchedPair>,
    /// Detection indices left unmatched.
    pub false_positives: Vec<usize>,
    /// Truth indices left unmatched.
    pub false_negatives: Vec<usize>,
    pub gate: f64,
}

impl MatchResult {
    pub fn true_positives(&self) -> usize {
        self.pairs.len()
    }

    /// Sum of matched distances.
    pub fn total_distance(&self) -> f64 {
        self.pairs.iter().map(|p| p.distance).sum()
    }
}

/// Minimum-cost perfect assignment on a square cost matrix (row `i` gets
/// column `result[i]`). Shortest augmenting paths with potentials, O(n^3).
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    assert!(
        cost.iter().all(|r| r.len() == n),
        "cost matrix must be square"
    );
    // 1-based with a virtual column 0.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut result = vec![0; n];
    for j in 1..=n {
        result[owner[j] - 1] = j - 1;
    }
    result
}

/// Cost of a forbidden or padded entry for `n` points under `gate`: large
/// enough that one more admissible pair always beats any rearrangement of
/// the others.
pub fn forbidden_cost(gate: f64, n: usize) -> f64 {
    gate * (n + 1) as f64 + 1.0
}

/// Gated assignment of `detections` to `truths`: among matchings that use
/// only pairs within `gate`, the one with the most pairs and, among
/// those, the smallest total distance.
pub fn match_points(detections: &[(f64, f64)], truths: &[(f64, f64)], gate: f64) -> MatchResult {
    let n = detections.len().max(truths.len());
    let big = forbidden_cost(gate, n);
    let dist = |i: usize, j: usize| {
        let (a, b) = (detections[i], truths[j]);
        (a.0 - b.0).hypot(a.1 - b.1)
    };
    let cost: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i < detections.len() && j < truths.len() {
                        let d = dist(i, j);
                        if d <= gate {
                            return d;
                        }
                    }
                    big
                })
                .collect()
        })
        .collect();
    let assignment = hungarian(&cost);
    let mut pairs = Vec::new();
    let mut det_used = vec![false; detections.len()];
    let mut truth_used = vec![false; truths.len()];
    for (i, &j) in assignment.iter().enumerate() {
        if i < detections.len() && j < truths.len() {
            let d = dist(i, j);
            if d <= gate {
                pairs.push(MatchedPair {
                    detection: i,
                    truth: j,
                    distance: d,
                });
                det_used[i] = true;
                truth_used[j] = true;
            }
        }
    }
    MatchResult {
        pairs,
        false_positives: (0..detections.len()).filter(|&i| !det_used[i]).collect(),
        false_negatives: (0..truths.len()).filter(|&j| !truth_used[j]).collect(),
        gate,
    }
}

/// [`match_points`] on detection and disk centers.
pub fn match_detections(detections: &[Detection], truths: &[Disk], gate: f64) -> MatchResult {
    let d: Vec<(f64, f64)> = detections.iter().map(|d| (d.x, d.y)).collect();
    let t: Vec<(f64, f64)> = truths.iter().map(|t| (t.x, t.y)).collect();
    match_points(&d, &t, gate)
}

/// `TP / (TP + FP + FN)`. An empty problem (no detections, no truths)
/// scores 1.
pub fn jaccard(m: &MatchResult) -> f64 {
    let tp = m.true_positives();
    let denom = tp + m.false_positives.len() + m.false_negatives.len();
    if denom == 0 {
        1.0
    } else {
        tp as f64 / denom as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rmse {
    pub position: f64,
    pub radius: f64,
}

/// Root-mean-square position and radius error over matched pairs only;
/// `None` without any match.
pub fn rmse(m: &MatchResult, detections: &[Detection], truths: &[Disk]) -> Option<Rmse> {
    if m.pairs.is_empty() {
        return None;
    }
    let n = m.pairs.len() as f64;
    let (mut p, mut r) = (0.0, 0.0);
    for pair in &m.pairs {
        let (d, t) = (&detections[pair.detection], &truths[pair.truth]);
        p += (d.x - t.x).powi(2) + (d.y - t.y).powi(2);
        r += (d.radius - t.radius).powi(2);
    }
    Some(Rmse {
        position: (p / n).sqrt(),
        radius: (r / n).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn det(x: f64, y: f64, radius: f64) -> Detection {
        Detection {
            x,
            y,
            radius,
            score: 1.0,
            scale: 0,
            t_star: 0.0,
        }
    }

    fn disk(x: f64, y: f64, radius: f64) -> Disk {
        Disk {
            x,
            y,
            radius,
            amplitude: 1.0,
        }
    }

    #[test]
    fn hungarian_small_known() {
        let cost = vec![
            vec![4.0, 1.0, 3.0],
            vec![2.0, 0.0, 5.0],
            vec![3.0, 2.0, 2.0],
        ];
        let a = hungarian(&cost);
        let total: f64 = a.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
        assert_eq!(total, 5.0);
        assert!(hungarian(&[]).is_empty());
    }

    #[test]
    fn identical_sets_match_at_zero() {
        let pts = [(1.0, 2.0), (10.0, 3.0), (4.0, 40.0)];
        let m = match_points(&pts, &pts, DEFAULT_GATE);
        assert_eq!(m.true_positives(), 3);
        assert!(m
            .pairs
            .iter()
            .all(|p| p.distance == 0.0 && p.detection == p.truth));
        assert_eq!(jaccard(&m), 1.0);
    }

    #[test]
    fn gate_rejects_far_pair() {
        let m = match_points(&[(6.0, 0.0)], &[(0.0, 0.0)], 5.0);
        assert_eq!(m.true_positives(), 0);
        assert_eq!(m.false_positives, vec![0]);
        assert_eq!(m.false_negatives, vec![0]);
        assert_eq!(jaccard(&m), 0.0);
    }

    #[test]
    fn cardinality_before_distance() {
        // Greedy nearest would pair d0-t0 (distance 1) and strand t1.
        let dets = [(0.0, 0.0), (4.0, 0.0)];
        let truths = [(1.0, 0.0), (-4.0, 0.0)];
        let m = match_points(&dets, &truths, 5.0);
        assert_eq!(m.true_positives(), 2);
        assert!((m.total_distance() - 7.0).abs() < 1e-12);
    }

    #[test]
    fn jaccard_eight_of_twelve() {
        let truths: Vec<(f64, f64)> = (0..10).map(|i| (20.0 * i as f64, 0.0)).collect();
        let mut dets: Vec<(f64, f64)> = truths[..8].iter().map(|&(x, y)| (x + 0.5, y)).collect();
        dets.push((500.0, 500.0));
        dets.push((600.0, 600.0));
        let m = match_points(&dets, &truths, DEFAULT_GATE);
        assert_eq!(
            (
                m.true_positives(),
                m.false_positives.len(),
                m.false_negatives.len()
            ),
            (8, 2, 2)
        );
        assert_eq!(jaccard(&m), 8.0 / 12.0);
    }

    #[test]
    fn jaccard_conventions() {
        assert_eq!(jaccard(&match_points(&[], &[], 5.0)), 1.0);
        let truths: Vec<(f64, f64)> = (0..10).map(|i| (i as f64 * 20.0, 0.0)).collect();
        assert_eq!(jaccard(&match_points(&[], &truths, 5.0)), 0.0);
    }

    #[test]
    fn rmse_three_four_five() {
        let dets = [det(3.0, 4.0, 11.0)];
        let truths = [disk(0.0, 0.0, 10.0)];
        let m = match_detections(&dets, &truths, DEFAULT_GATE);
        let e = rmse(&m, &dets, &truths).unwrap();
        assert!((e.position - 5.0).abs() < 1e-12);
        assert!((e.radius - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rmse_ignores_false_positives() {
        let truths = [disk(0.0, 0.0, 10.0), disk(50.0, 50.0, 12.0)];
        let dets = vec![det(1.0, 0.0, 10.5), det(50.0, 52.0, 12.0)];
        let m = match_detections(&dets, &truths, DEFAULT_GATE);
        let base = rmse(&m, &dets, &truths).unwrap();
        let mut more = dets.clone();
        more.push(det(200.0, 200.0, 30.0));
        let m2 = match_detections(&more, &truths, DEFAULT_GATE);
        assert_eq!(rmse(&m2, &more, &truths).unwrap(), base);
        assert!(rmse(&match_detections(&[], &truths, 5.0), &[], &truths).is_none());
    }
}
