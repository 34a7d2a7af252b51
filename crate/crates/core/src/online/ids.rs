use std::collections::BTreeSet;

use crate::detection::DetId;
use crate::solution::Trajectory;

/// Hands out public track ids. Ids are never reused.
#[derive(Debug, Clone, Default)]
pub struct IdRegistry {
    next: u64,
}

impl IdRegistry {
    pub fn fresh(&mut self) -> u64 {
        let id = self.next;
        self.next += 1;
        id
    }
}

/// Gives each trajectory of `current` a public id, keeping the id of the
/// previous trajectory it continues.
///
/// A trajectory whose entry edge remembers a clipped track inherits that
/// track first; otherwise ids go to the pairs sharing the most detections.
/// Ties fall to the smaller previous id, then the earlier trajectory.
pub fn assign_track_ids(current: &mut [Trajectory], previous: &[Trajectory], registry: &mut IdRegistry) {
    let mut candidates: Vec<(u8, std::cmp::Reverse<usize>, u64, usize)> = Vec::new();
    for (i, t) in current.iter().enumerate() {
        if let Some(origin) = t.origin_track {
            candidates.push((0, std::cmp::Reverse(usize::MAX), origin, i));
        }
        let mine: BTreeSet<DetId> = t.detections.iter().copied().collect();
        for p in previous {
            let shared = p.detections.iter().filter(|d| mine.contains(d)).count();
            if shared > 0 {
                candidates.push((1, std::cmp::Reverse(shared), p.track_id, i));
            }
        }
    }
    candidates.sort();
    let mut taken_ids = BTreeSet::new();
    let mut assigned = vec![None; current.len()];
    for (_, _, id, i) in candidates {
        if assigned[i].is_none() && !taken_ids.contains(&id) {
            assigned[i] = Some(id);
            taken_ids.insert(id);
        }
    }
    for (t, id) in current.iter_mut().zip(assigned) {
        t.track_id = id.unwrap_or_else(|| registry.fresh());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn traj(id: u64, dets: &[u64], origin: Option<u64>) -> Trajectory {
        Trajectory {
            track_id: id,
            detections: dets.iter().map(|d| DetId(*d)).collect(),
            start_frame: 0,
            cost: 0.0,
            origin_track: origin,
        }
    }

    #[test]
    fn continuation_keeps_its_id() {
        let mut reg = IdRegistry::default();
        let prev = vec![traj(reg.fresh(), &[1, 2], None), traj(reg.fresh(), &[3, 4], None)];
        let mut cur = vec![traj(0, &[3, 4, 6], None), traj(0, &[1, 2, 5], None), traj(0, &[7], None)];
        assign_track_ids(&mut cur, &prev, &mut reg);
        assert_eq!(cur.iter().map(|t| t.track_id).collect::<Vec<_>>(), vec![1, 0, 2]);
    }

    #[test]
    fn remembered_origin_wins_over_overlap() {
        let mut reg = IdRegistry::default();
        reg.fresh();
        reg.fresh();
        let prev = vec![traj(1, &[5, 6], None)];
        let mut cur = vec![traj(0, &[6, 7], Some(0)), traj(0, &[8], None)];
        assign_track_ids(&mut cur, &prev, &mut reg);
        assert_eq!(cur[0].track_id, 0);
        assert_eq!(cur[1].track_id, 2);
    }

    #[test]
    fn split_track_keeps_id_on_larger_share() {
        let mut reg = IdRegistry::default();
        let prev = vec![traj(reg.fresh(), &[1, 2, 3], None)];
        let mut cur = vec![traj(0, &[1], None), traj(0, &[2, 3], None)];
        assign_track_ids(&mut cur, &prev, &mut reg);
        assert_eq!(cur[1].track_id, 0);
        assert_eq!(cur[0].track_id, 1);
    }
}
