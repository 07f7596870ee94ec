//! Cell-level connectivity and shortest paths on the ESDF grid.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::{segment_clear, Path2D};
use crate::world::GridEsdf;

fn cell_of(g: &GridEsdf, p: [f64; 2]) -> Option<usize> {
    let ix = ((p[0] - g.origin[0]) / g.resolution).floor();
    let iy = ((p[1] - g.origin[1]) / g.resolution).floor();
    (ix >= 0.0 && iy >= 0.0 && (ix as usize) < g.width && (iy as usize) < g.height).then(|| iy as usize * g.width + ix as usize)
}

fn neighbours(g: &GridEsdf, i: usize) -> impl Iterator<Item = usize> {
    let (x, y, w) = (i % g.width, i / g.width, g.width);
    [
        (x > 0).then(|| i - 1),
        (x + 1 < w).then(|| i + 1),
        (y > 0).then(|| i - w),
        (y + 1 < g.height).then(|| i + w),
    ]
    .into_iter()
    .flatten()
}

/// True when `a` and `b` lie in one 4-connected component of grid cells
/// whose distance is at least `clearance`.
pub fn grid_connected(g: &GridEsdf, a: [f64; 2], b: [f64; 2], clearance: f64) -> bool {
    let (Some(a), Some(b)) = (cell_of(g, a), cell_of(g, b)) else {
        return false;
    };
    let free = |i: usize| g.dist[i] >= clearance;
    if !free(a) || !free(b) {
        return false;
    }
    let mut seen = vec![false; g.dist.len()];
    let mut stack = vec![a];
    seen[a] = true;
    while let Some(i) = stack.pop() {
        if i == b {
            return true;
        }
        for j in neighbours(g, i) {
            if !seen[j] && free(j) {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    false
}

/// Shortest 4-connected chain of cell centers from `a` to `b` through cells
/// with distance at least `clearance`, with the endpoints attached.
///
/// Returns `None` when no chain exists or an endpoint cannot be joined to
/// its cell center at that clearance.
pub fn grid_path(g: &GridEsdf, a: [f64; 2], b: [f64; 2], clearance: f64) -> Option<Path2D> {
    let (ca, cb) = (cell_of(g, a)?, cell_of(g, b)?);
    let free = |i: usize| g.dist[i] >= clearance;
    if !free(ca) || !free(cb) {
        return None;
    }
    let mut prev = vec![usize::MAX; g.dist.len()];
    let mut cost = vec![u64::MAX; g.dist.len()];
    let mut heap = BinaryHeap::new();
    cost[ca] = 0;
    heap.push(Reverse((0u64, ca)));
    while let Some(Reverse((c, i))) = heap.pop() {
        if i == cb {
            break;
        }
        if c > cost[i] {
            continue;
        }
        for j in neighbours(g, i) {
            if free(j) && c + 1 < cost[j] {
                cost[j] = c + 1;
                prev[j] = i;
                heap.push(Reverse((c + 1, j)));
            }
        }
    }
    if cost[cb] == u64::MAX {
        return None;
    }
    let center = |i: usize| {
        [
            g.origin[0] + ((i % g.width) as f64 + 0.5) * g.resolution,
            g.origin[1] + ((i / g.width) as f64 + 0.5) * g.resolution,
        ]
    };
    let mut cells = vec![cb];
    while let Some(&i) = cells.last() {
        if i == ca {
            break;
        }
        cells.push(prev[i]);
    }
    cells.reverse();
    let mut pts = vec![a];
    pts.extend(cells.iter().map(|&i| center(i)));
    pts.push(b);
    if !segment_clear(g, a, pts[1], clearance) || !segment_clear(g, pts[pts.len() - 2], b, clearance) {
        return None;
    }
    Some(Path2D::new(pts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topo::roadmap::tests::grid_with;

    #[test]
    fn wall_with_gap() {
        // wall across x = 10 with a gap at the top
        let g = grid_with(&[[9.9, 0.0, 10.1, 8.0]]);
        let (a, b) = ([5.0, 2.0], [15.0, 2.0]);
        assert!(grid_connected(&g, a, b, 0.3));
        let p = grid_path(&g, a, b, 0.3).unwrap();
        assert_eq!(p.start(), a);
        assert_eq!(p.end(), b);
        for w in p.waypoints.windows(2) {
            assert!(segment_clear(&g, w[0], w[1], 0.3));
        }
        // has to climb to the gap and back down
        assert!(p.length > 10.0 + 2.0 * 6.0);
    }

    #[test]
    fn full_wall_blocks() {
        let g = grid_with(&[[9.9, 0.0, 10.1, 10.0]]);
        assert!(!grid_connected(&g, [5.0, 2.0], [15.0, 2.0], 0.05));
        assert!(grid_path(&g, [5.0, 2.0], [15.0, 2.0], 0.05).is_none());
    }

    #[test]
    fn outside_grid() {
        let g = grid_with(&[]);
        assert!(!grid_connected(&g, [-1.0, 2.0], [15.0, 2.0], 0.0));
        assert!(grid_path(&g, [5.0, 2.0], [15.0, 30.0], 0.0).is_none());
    }

    #[test]
    fn stands_in_for_a_disconnected_roadmap() {
        let g = grid_with(&[[9.9, 0.0, 10.1, 8.0]]);
        let cfg = crate::topo::TopoConfig { max_samples: 0, ..Default::default() };
        let (a, b) = ([5.0, 2.0], [15.0, 2.0]);
        assert!(crate::topo::build_roadmap(&g, a, b, &cfg, 1).is_err());
        let (rm, paths) = crate::topo::candidate_paths(&g, a, b, &cfg, 1).unwrap();
        assert!(rm.is_connected());
        assert_eq!(paths.len(), 1);
        let p = &paths[0];
        assert_eq!((p.start(), p.end()), (a, b));
        for w in p.waypoints.windows(2) {
            assert!(segment_clear(&g, w[0], w[1], cfg.clearance_min));
        }
        // shortening leaves few corners
        assert!(p.waypoints.len() <= 6, "{:?}", p.waypoints);
    }
}
