use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{uvd_equivalent, Path2D, TopoConfig};
use crate::world::GridEsdf;
use crate::{Error, Result};

/// Undirected visibility graph over free base positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Roadmap {
    pub nodes: Vec<[f64; 2]>,
    /// `edges[i]` lists `(neighbour, length)`.
    pub edges: Vec<Vec<(usize, f64)>>,
    pub start_id: usize,
    pub goal_id: usize,
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

impl Roadmap {
    /// Graph from explicit undirected edges with Euclidean lengths.
    pub fn from_edges(nodes: Vec<[f64; 2]>, pairs: &[(usize, usize)], start_id: usize, goal_id: usize) -> Self {
        let mut r = Self { edges: vec![Vec::new(); nodes.len()], nodes, start_id, goal_id };
        for &(a, b) in pairs {
            r.add_edge(a, b);
        }
        r
    }

    pub fn add_edge(&mut self, a: usize, b: usize) {
        if a == b || self.edges[a].iter().any(|e| e.0 == b) {
            return;
        }
        let l = dist(self.nodes[a], self.nodes[b]);
        self.edges[a].push((b, l));
        self.edges[b].push((a, l));
    }

    fn remove_edge(&mut self, a: usize, b: usize) {
        self.edges[a].retain(|e| e.0 != b);
        self.edges[b].retain(|e| e.0 != a);
    }

    pub fn edge_count(&self) -> usize {
        self.edges.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Breadth-first reachability between start and goal.
    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![self.start_id];
        seen[self.start_id] = true;
        while let Some(u) = stack.pop() {
            if u == self.goal_id {
                return true;
            }
            for &(v, _) in &self.edges[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        false
    }

    pub fn path_of(&self, ids: &[usize]) -> Path2D {
        Path2D::new(ids.iter().map(|&i| self.nodes[i]).collect())
    }
}

/// Segment check at half-resolution steps, endpoints included.
pub fn segment_clear(g: &GridEsdf, a: [f64; 2], b: [f64; 2], clearance: f64) -> bool {
    let step = 0.5 * g.resolution;
    let n = (dist(a, b) / step).ceil().max(1.0) as usize;
    (0..=n).all(|i| {
        let t = i as f64 / n as f64;
        let p = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
        let s = g.query(p);
        !s.clamped && s.distance >= clearance
    })
}

/// Climbs the distance field from `p` towards the local ridge.
fn retract(g: &GridEsdf, mut p: [f64; 2]) -> [f64; 2] {
    let step = 0.5 * g.resolution;
    let mut d = g.query(p).distance;
    for _ in 0..200 {
        let s = g.query(p);
        let n = s.gradient[0].hypot(s.gradient[1]);
        if n < 1e-9 {
            break;
        }
        let q = [p[0] + step * s.gradient[0] / n, p[1] + step * s.gradient[1] / n];
        let e = g.query(q);
        if e.clamped || e.distance <= d {
            break;
        }
        p = q;
        d = e.distance;
    }
    p
}

/// Visibility roadmap with guard/connector acceptance.
///
/// A share of the uniform samples (`cfg.retract_fraction`) is first moved up
/// the distance field onto its ridge, which places nodes inside narrow
/// passages. A sample that sees no guard becomes a guard. A sample that sees two or
/// more guards connects the two nearest ones unless an existing connector
/// between them already gives an equivalent route, in which case the shorter
/// of the two is kept. All other samples are discarded.
pub fn build_roadmap(g: &GridEsdf, start: [f64; 2], goal: [f64; 2], cfg: &TopoConfig, seed: u64) -> Result<Roadmap> {
    for (name, p) in [("start", start), ("goal", goal)] {
        let s = g.query(p);
        if s.clamped || !(s.distance > 0.0) {
            return Err(Error::InvalidInput(format!("{name} base position has no clearance")));
        }
    }
    let clr = cfg.clearance_min;
    let mut rm = Roadmap { nodes: vec![start, goal], edges: vec![Vec::new(), Vec::new()], start_id: 0, goal_id: 1 };
    let mut guards = vec![0usize, 1];
    if segment_clear(g, start, goal, clr) {
        rm.add_edge(0, 1);
    }
    let [bx0, by0, bx1, by1] = g.bounds();
    let infl = cfg.sample_inflation;
    let lo = [(start[0].min(goal[0]) - infl).max(bx0), (start[1].min(goal[1]) - infl).max(by0)];
    let hi = [(start[0].max(goal[0]) + infl).min(bx1), (start[1].max(goal[1]) + infl).min(by1)];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..cfg.max_samples {
        let mut p = [rng.gen_range(lo[0]..=hi[0]), rng.gen_range(lo[1]..=hi[1])];
        if rng.gen_bool(cfg.retract_fraction) {
            p = retract(g, p);
        }
        let s = g.query(p);
        if s.clamped || s.distance <= clr {
            continue;
        }
        let mut vis: Vec<(f64, usize)> = guards
            .iter()
            .filter(|&&q| segment_clear(g, p, rm.nodes[q], clr))
            .map(|&q| (dist(p, rm.nodes[q]), q))
            .collect();
        if vis.is_empty() {
            guards.push(rm.nodes.len());
            rm.nodes.push(p);
            rm.edges.push(Vec::new());
            continue;
        }
        if vis.len() < 2 {
            continue;
        }
        vis.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let (ga, gb) = (vis[0].1, vis[1].1);
        let (na, nb) = (rm.nodes[ga], rm.nodes[gb]);
        let cand = Path2D::new(vec![na, p, nb]);
        let shared: Vec<usize> = rm.edges[ga]
            .iter()
            .map(|e| e.0)
            .filter(|&c| !guards.contains(&c) && rm.edges[gb].iter().any(|e| e.0 == c))
            .collect();
        let mut equivalent = false;
        for c in shared {
            let old = Path2D::new(vec![na, rm.nodes[c], nb]);
            if uvd_equivalent(&cand, &old, g, cfg.n_checks) {
                equivalent = true;
                if cand.length < old.length && rm.edges[c].len() == 2 {
                    rm.remove_edge(c, ga);
                    rm.remove_edge(c, gb);
                    rm.nodes[c] = p;
                    rm.add_edge(c, ga);
                    rm.add_edge(c, gb);
                }
                break;
            }
        }
        if !equivalent {
            let c = rm.nodes.len();
            rm.nodes.push(p);
            rm.edges.push(Vec::new());
            rm.add_edge(c, ga);
            rm.add_edge(c, gb);
        }
    }
    if !rm.is_connected() {
        return Err(Error::DisconnectedRoadmap);
    }
    Ok(rm)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// 20 × 10 m grid at 0.1 m with the given occupied rectangles.
    pub(crate) fn grid_with(rects: &[[f64; 4]]) -> GridEsdf {
        let (w, h, res) = (200usize, 100usize, 0.1);
        let mut occ = vec![false; w * h];
        for iy in 0..h {
            for ix in 0..w {
                let c = [(ix as f64 + 0.5) * res, (iy as f64 + 0.5) * res];
                occ[iy * w + ix] = rects.iter().any(|r| c[0] >= r[0] && c[0] <= r[2] && c[1] >= r[1] && c[1] <= r[3]);
            }
        }
        GridEsdf::from_occupancy([0.0, 0.0], res, w, h, &occ)
    }

    fn all_simple_paths(r: &Roadmap) -> Vec<Vec<usize>> {
        fn rec(r: &Roadmap, u: usize, seen: &mut Vec<bool>, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if u == r.goal_id {
                out.push(cur.clone());
                return;
            }
            for &(v, _) in &r.edges[u] {
                if !seen[v] {
                    seen[v] = true;
                    cur.push(v);
                    rec(r, v, seen, cur, out);
                    cur.pop();
                    seen[v] = false;
                }
            }
        }
        let mut seen = vec![false; r.nodes.len()];
        seen[r.start_id] = true;
        let mut out = Vec::new();
        rec(r, r.start_id, &mut seen, &mut vec![r.start_id], &mut out);
        out
    }

    fn edges_clear(r: &Roadmap, g: &GridEsdf, clr: f64) -> bool {
        r.edges
            .iter()
            .enumerate()
            .all(|(a, es)| es.iter().all(|&(b, l)| segment_clear(g, r.nodes[a], r.nodes[b], clr) && (l - dist(r.nodes[a], r.nodes[b])).abs() < 1e-12))
    }

    #[test]
    fn empty_room_has_direct_edge() {
        let g = grid_with(&[]);
        let r = build_roadmap(&g, [2.0, 5.0], [18.0, 5.0], &TopoConfig::default(), 1).unwrap();
        assert!(r.edges[r.start_id].iter().any(|e| e.0 == r.goal_id));
    }

    #[test]
    fn full_wall_disconnects() {
        let g = grid_with(&[[9.5, 0.0, 10.5, 10.0]]);
        let e = build_roadmap(&g, [2.0, 5.0], [18.0, 5.0], &TopoConfig::default(), 1).unwrap_err();
        assert!(matches!(e, Error::DisconnectedRoadmap));
    }

    #[test]
    fn central_obstacle_gives_routes_on_both_sides() {
        let g = grid_with(&[[8.0, 3.0, 12.0, 7.0]]);
        let cfg = TopoConfig { max_samples: 500, ..TopoConfig::default() };
        for seed in 0..5 {
            let r = build_roadmap(&g, [2.0, 5.0], [18.0, 5.0], &cfg, seed).unwrap();
            assert!(edges_clear(&r, &g, cfg.clearance_min));
            let paths = all_simple_paths(&r);
            let side = |p: &Vec<usize>, above: bool| {
                p.iter().any(|&i| {
                    let n = r.nodes[i];
                    n[0] > 7.0 && n[0] < 13.0 && if above { n[1] > 7.0 } else { n[1] < 3.0 }
                })
            };
            assert!(paths.iter().any(|p| side(p, true)), "seed {seed}");
            assert!(paths.iter().any(|p| side(p, false)), "seed {seed}");
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let g = grid_with(&[[8.0, 3.0, 12.0, 7.0], [4.0, 0.0, 5.0, 2.0]]);
        let cfg = TopoConfig::default();
        let a = build_roadmap(&g, [2.0, 5.0], [18.0, 5.0], &cfg, 9).unwrap();
        let b = build_roadmap(&g, [2.0, 5.0], [18.0, 5.0], &cfg, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn start_inside_obstacle_rejected() {
        let g = grid_with(&[[1.0, 4.0, 3.0, 6.0]]);
        assert!(build_roadmap(&g, [2.0, 5.0], [18.0, 5.0], &TopoConfig::default(), 0).is_err());
    }
}
