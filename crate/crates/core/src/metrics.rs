//! CLEAR-MOT evaluation.
//!
//! Matching per frame follows the usual two-step scheme. A ground-truth
//! object keeps last frame's hypothesis when both are present and their
//! IoU still reaches the threshold. The remaining objects and hypotheses
//! are matched by a maximum-IoU assignment (Hungarian method) restricted
//! to pairs at or above the threshold.
//!
//! Counting conventions:
//! * an id switch is counted when an object is matched to a hypothesis id
//!   different from the one it was last matched to, at any earlier frame;
//! * a fragmentation is counted each time an object becomes matched again
//!   after having been matched and then missed;
//! * mostly tracked means matched in at least 80% of the object's frames,
//!   mostly lost means matched in less than 20%;
//! * the false alarm rate is false positives per frame, over every frame
//!   from the first to the last frame seen in either input.

use std::collections::BTreeMap;

use crate::detection::BBox;

/// Boxes per frame, each tagged with a track or object id.
pub type FrameBoxes = BTreeMap<i64, Vec<(u64, BBox)>>;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MotReport {
    pub mota: f64,
    pub motp: f64,
    pub mostly_tracked: f64,
    pub partially_tracked: f64,
    pub mostly_lost: f64,
    pub id_switches: usize,
    pub fragmentations: usize,
    pub false_alarm_rate: f64,
    pub ground_truth: usize,
    pub matches: usize,
    pub false_positives: usize,
    pub misses: usize,
    pub frames: usize,
    pub tracks: usize,
}

#[derive(Debug, Default)]
struct ObjectState {
    last_hyp: Option<u64>,
    matched_prev: bool,
    ever_matched: bool,
    present: usize,
    matched: usize,
}

pub fn clear_mot(gt: &FrameBoxes, hyp: &FrameBoxes, iou_threshold: f64) -> MotReport {
    let mut report = MotReport::default();
    let first = gt.keys().chain(hyp.keys()).min().copied();
    let last = gt.keys().chain(hyp.keys()).max().copied();
    let (Some(first), Some(last)) = (first, last) else {
        report.mota = 1.0;
        return report;
    };
    report.frames = (last - first + 1) as usize;

    let mut objects: BTreeMap<u64, ObjectState> = BTreeMap::new();
    let mut iou_sum = 0.0;
    let empty = Vec::new();
    for t in first..=last {
        let g = gt.get(&t).unwrap_or(&empty);
        let h = hyp.get(&t).unwrap_or(&empty);
        let mut g_match: Vec<Option<usize>> = vec![None; g.len()];
        let mut h_used = vec![false; h.len()];

        for (i, (gid, gbox)) in g.iter().enumerate() {
            let Some(state) = objects.get(gid) else { continue };
            if !state.matched_prev {
                continue;
            }
            let Some(prev) = state.last_hyp else { continue };
            if let Some(j) = h.iter().position(|(hid, _)| *hid == prev) {
                if !h_used[j] && gbox.iou(&h[j].1) >= iou_threshold {
                    g_match[i] = Some(j);
                    h_used[j] = true;
                }
            }
        }

        let rows: Vec<usize> = (0..g.len()).filter(|i| g_match[*i].is_none()).collect();
        let cols: Vec<usize> = (0..h.len()).filter(|j| !h_used[*j]).collect();
        if !rows.is_empty() && !cols.is_empty() {
            let weight: Vec<Vec<f64>> = rows
                .iter()
                .map(|&i| {
                    cols.iter()
                        .map(|&j| {
                            let iou = g[i].1.iou(&h[j].1);
                            if iou >= iou_threshold {
                                iou
                            } else {
                                0.0
                            }
                        })
                        .collect()
                })
                .collect();
            for (r, c) in max_weight_assignment(&weight) {
                let (i, j) = (rows[r], cols[c]);
                if g[i].1.iou(&h[j].1) >= iou_threshold {
                    g_match[i] = Some(j);
                    h_used[j] = true;
                }
            }
        }

        for (i, (gid, gbox)) in g.iter().enumerate() {
            let state = objects.entry(*gid).or_default();
            state.present += 1;
            report.ground_truth += 1;
            match g_match[i] {
                Some(j) => {
                    let hid = h[j].0;
                    report.matches += 1;
                    state.matched += 1;
                    iou_sum += gbox.iou(&h[j].1);
                    if state.last_hyp.is_some_and(|p| p != hid) {
                        report.id_switches += 1;
                    }
                    if state.ever_matched && !state.matched_prev {
                        report.fragmentations += 1;
                    }
                    state.last_hyp = Some(hid);
                    state.matched_prev = true;
                    state.ever_matched = true;
                }
                None => {
                    report.misses += 1;
                    state.matched_prev = false;
                }
            }
        }
        // Objects absent from this frame do not break their track.
        report.false_positives += h_used.iter().filter(|u| !**u).count();
    }

    let errors = (report.misses + report.false_positives + report.id_switches) as f64;
    report.mota = 1.0 - errors / report.ground_truth.max(1) as f64;
    report.motp = if report.matches > 0 {
        iou_sum / report.matches as f64
    } else {
        0.0
    };
    report.false_alarm_rate = report.false_positives as f64 / report.frames as f64;
    report.tracks = objects.len();
    if !objects.is_empty() {
        let n = objects.len() as f64;
        let (mut mt, mut ml) = (0usize, 0usize);
        for s in objects.values() {
            let ratio = s.matched as f64 / s.present as f64;
            if ratio >= 0.8 {
                mt += 1;
            } else if ratio < 0.2 {
                ml += 1;
            }
        }
        report.mostly_tracked = mt as f64 / n;
        report.mostly_lost = ml as f64 / n;
        report.partially_tracked = (objects.len() - mt - ml) as f64 / n;
    }
    report
}

/// Maximum-weight assignment on a rectangular matrix of non-negative
/// weights. Returns `(row, column)` pairs; every row or every column is
/// assigned, whichever is fewer.
pub fn max_weight_assignment(weight: &[Vec<f64>]) -> Vec<(usize, usize)> {
    let n = weight.len();
    let m = weight.first().map_or(0, Vec::len);
    if n == 0 || m == 0 {
        return Vec::new();
    }
    if n > m {
        let t: Vec<Vec<f64>> = (0..m).map(|j| (0..n).map(|i| weight[i][j]).collect()).collect();
        return max_weight_assignment(&t).into_iter().map(|(j, i)| (i, j)).collect();
    }
    let max = weight.iter().flatten().fold(0.0f64, |a, b| a.max(*b));
    let cost = |i: usize, j: usize| max - weight[i][j];

    // Shortest augmenting path form of the Hungarian method, 1-based.
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out: Vec<(usize, usize)> = (1..=m).filter(|j| p[*j] != 0).map(|j| (p[j] - 1, j - 1)).collect();
    out.sort_unstable();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(x: f64) -> BBox {
        BBox::new(x, 0.0, 10.0, 10.0)
    }

    fn frames(rows: &[(i64, u64, f64)]) -> FrameBoxes {
        let mut out = FrameBoxes::new();
        for &(t, id, x) in rows {
            out.entry(t).or_default().push((id, b(x)));
        }
        out
    }

    #[test]
    fn identical_input_is_perfect() {
        let gt = frames(&[(0, 1, 0.0), (0, 2, 50.0), (1, 1, 1.0), (1, 2, 51.0)]);
        let r = clear_mot(&gt, &gt, 0.5);
        assert_eq!(r.mota, 1.0);
        assert_eq!(r.motp, 1.0);
        assert_eq!(r.id_switches, 0);
        assert_eq!(r.mostly_tracked, 1.0);
    }

    #[test]
    fn one_switch_over_ten_frames() {
        let gt = frames(&(0..10).map(|t| (t, 7, 0.0)).collect::<Vec<_>>());
        let hyp = frames(&(0..10).map(|t| (t, if t < 5 { 1 } else { 2 }, 0.0)).collect::<Vec<_>>());
        let r = clear_mot(&gt, &hyp, 0.5);
        assert_eq!(r.id_switches, 1);
        assert!((r.mota - 0.9).abs() < 1e-12);
        assert_eq!(r.fragmentations, 0);
    }

    #[test]
    fn no_hypotheses() {
        let gt = frames(&[(0, 1, 0.0), (1, 1, 0.0)]);
        let r = clear_mot(&gt, &FrameBoxes::new(), 0.5);
        assert_eq!(r.mota, 0.0);
        assert_eq!(r.misses, 2);
        assert_eq!(r.mostly_lost, 1.0);
        assert_eq!(r.motp, 0.0);
    }

    #[test]
    fn hungarian_prefers_total_overlap() {
        let w = vec![vec![0.9, 0.8], vec![0.85, 0.0]];
        assert_eq!(max_weight_assignment(&w), vec![(0, 1), (1, 0)]);
        let tall = vec![vec![0.1], vec![0.7], vec![0.3]];
        assert_eq!(max_weight_assignment(&tall), vec![(1, 0)]);
    }

    #[test]
    fn hungarian_matches_brute_force() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let n = rng.random_range(1..=4);
            let m = rng.random_range(1..=4);
            let w: Vec<Vec<f64>> = (0..n).map(|_| (0..m).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
            let got: f64 = max_weight_assignment(&w).iter().map(|&(i, j)| w[i][j]).sum();
            fn best(w: &[Vec<f64>], i: usize, used: &mut Vec<bool>) -> f64 {
                if i == w.len() {
                    return 0.0;
                }
                let mut b = best(w, i + 1, used);
                for j in 0..used.len() {
                    if !used[j] {
                        used[j] = true;
                        b = b.max(w[i][j] + best(w, i + 1, used));
                        used[j] = false;
                    }
                }
                b
            }
            let expected = best(&w, 0, &mut vec![false; m]);
            assert!((got - expected).abs() < 1e-9);
        }
    }
}
