use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use super::{Path2D, Roadmap};

#[derive(PartialEq)]
struct Item(f64, usize);

impl Eq for Item {}

impl Ord for Item {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.total_cmp(&self.0).then(o.1.cmp(&self.1))
    }
}

impl PartialOrd for Item {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Dijkstra avoiding `blocked` nodes and `banned` directed edges.
fn shortest(r: &Roadmap, from: usize, blocked: &[bool], banned: &HashSet<(usize, usize)>) -> Option<(f64, Vec<usize>)> {
    let n = r.nodes.len();
    let mut d = vec![f64::INFINITY; n];
    let mut prev = vec![usize::MAX; n];
    let mut heap = BinaryHeap::new();
    d[from] = 0.0;
    heap.push(Item(0.0, from));
    while let Some(Item(du, u)) = heap.pop() {
        if du > d[u] {
            continue;
        }
        if u == r.goal_id {
            let mut ids = vec![u];
            let mut c = u;
            while c != from {
                c = prev[c];
                ids.push(c);
            }
            ids.reverse();
            return Some((du, ids));
        }
        for &(v, w) in &r.edges[u] {
            if blocked[v] || banned.contains(&(u, v)) {
                continue;
            }
            let nd = du + w;
            if nd < d[v] || (nd == d[v] && u < prev[v]) {
                d[v] = nd;
                prev[v] = u;
                heap.push(Item(nd, v));
            }
        }
    }
    None
}

fn cost(r: &Roadmap, ids: &[usize]) -> f64 {
    ids.windows(2)
        .map(|w| r.edges[w[0]].iter().find(|e| e.0 == w[1]).map_or(f64::INFINITY, |e| e.1))
        .sum()
}

/// Up to `k_max` loop-free start→goal paths, shortest first.
///
/// Each new path deviates from an accepted one at a spur node: the shared
/// root prefix is fixed, edges leaving the spur along accepted paths with the
/// same root are removed, and the remainder is a fresh shortest path.
/// `budget` caps the number of shortest-path computations.
pub fn search_topo_paths(r: &Roadmap, k_max: usize, budget: usize) -> Vec<Path2D> {
    let n = r.nodes.len();
    let none = HashSet::new();
    let Some(first) = shortest(r, r.start_id, &vec![false; n], &none) else {
        return Vec::new();
    };
    let mut accepted: Vec<(f64, Vec<usize>)> = vec![first];
    let mut pool: Vec<(f64, Vec<usize>)> = Vec::new();
    let mut spent = 1usize;
    'outer: while accepted.len() < k_max {
        let last = accepted.last().expect("non-empty").1.clone();
        for i in 0..last.len() - 1 {
            if spent >= budget {
                break 'outer;
            }
            let root = &last[..=i];
            let spur = last[i];
            let mut banned = HashSet::new();
            for (_, p) in &accepted {
                if p.len() > i && &p[..=i] == root {
                    banned.insert((spur, p[i + 1]));
                }
            }
            let mut blocked = vec![false; n];
            for &v in &root[..i] {
                blocked[v] = true;
            }
            spent += 1;
            if let Some((_, tail)) = shortest(r, spur, &blocked, &banned) {
                let mut ids = root[..i].to_vec();
                ids.extend(tail);
                if !pool.iter().any(|p| p.1 == ids) && !accepted.iter().any(|p| p.1 == ids) {
                    pool.push((cost(r, &ids), ids));
                }
            }
        }
        if pool.is_empty() {
            break;
        }
        let best = (0..pool.len())
            .min_by(|&a, &b| pool[a].0.total_cmp(&pool[b].0).then_with(|| pool[a].1.cmp(&pool[b].1)))
            .expect("non-empty pool");
        accepted.push(pool.swap_remove(best));
    }
    accepted.truncate(k_max);
    accepted.iter().map(|(_, ids)| r.path_of(ids)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute(r: &Roadmap) -> Vec<f64> {
        fn rec(r: &Roadmap, u: usize, len: f64, seen: &mut Vec<bool>, out: &mut Vec<f64>) {
            if u == r.goal_id {
                out.push(len);
                return;
            }
            for &(v, w) in &r.edges[u] {
                if !seen[v] {
                    seen[v] = true;
                    rec(r, v, len + w, seen, out);
                    seen[v] = false;
                }
            }
        }
        let mut seen = vec![false; r.nodes.len()];
        seen[r.start_id] = true;
        let mut out = Vec::new();
        rec(r, r.start_id, 0.0, &mut seen, &mut out);
        out.sort_by(f64::total_cmp);
        out
    }

    fn diamond() -> Roadmap {
        Roadmap::from_edges(vec![[0.0, 0.0], [4.0, 0.0], [2.0, 1.0], [2.0, -3.0]], &[(0, 2), (2, 1), (0, 3), (3, 1)], 0, 1)
    }

    #[test]
    fn chain_has_one_path() {
        let r = Roadmap::from_edges(vec![[0.0, 0.0], [2.0, 0.0], [1.0, 0.5]], &[(0, 2), (2, 1)], 0, 1);
        let p = search_topo_paths(&r, 5, 100);
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].waypoints, vec![[0.0, 0.0], [1.0, 0.5], [2.0, 0.0]]);
    }

    #[test]
    fn diamond_two_paths_shortest_first() {
        let p = search_topo_paths(&diamond(), 5, 100);
        assert_eq!(p.len(), 2);
        assert_eq!(p[0].waypoints[1], [2.0, 1.0]);
        let expect = brute(&diamond());
        assert!((p[0].length - expect[0]).abs() < 1e-12);
        assert!((p[1].length - expect[1]).abs() < 1e-12);
    }

    #[test]
    fn k_one_is_dijkstra() {
        let p = search_topo_paths(&diamond(), 1, 100);
        assert_eq!(p.len(), 1);
        assert!((p[0].length - 2.0 * 5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn disconnected_gives_nothing() {
        let r = Roadmap::from_edges(vec![[0.0, 0.0], [1.0, 0.0], [0.5, 0.5]], &[(0, 2)], 0, 1);
        assert!(search_topo_paths(&r, 3, 100).is_empty());
    }

    proptest! {
        #[test]
        fn matches_brute_force(
            pts in proptest::collection::vec((0.0..10.0f64, 0.0..10.0f64), 3..8),
            mask in proptest::collection::vec(any::<bool>(), 28),
            k in 1usize..8,
        ) {
            let nodes: Vec<[f64; 2]> = pts.iter().map(|&(x, y)| [x, y]).collect();
            let n = nodes.len();
            let mut pairs = Vec::new();
            let mut m = 0;
            for a in 0..n {
                for b in a + 1..n {
                    if mask[m] { pairs.push((a, b)); }
                    m += 1;
                }
            }
            let r = Roadmap::from_edges(nodes, &pairs, 0, 1);
            let want = brute(&r);
            let got = search_topo_paths(&r, k, 10_000);
            prop_assert_eq!(got.len(), want.len().min(k));
            for (g, w) in got.iter().zip(&want) {
                prop_assert!((g.length - w).abs() < 1e-9);
            }
            for p in &got {
                let mut ids: Vec<_> = p.waypoints.iter().map(|w| (w[0].to_bits(), w[1].to_bits())).collect();
                let before = ids.len();
                ids.sort();
                ids.dedup();
                prop_assert_eq!(ids.len(), before);
            }
        }
    }
}
