use super::{segment_clear, Path2D, TopoConfig};
use crate::world::GridEsdf;

const DENSIFY_STEP: f64 = 0.25;

/// Uniform visibility deformation test: corresponding arc-length points of
/// the two paths must see each other through free space.
pub fn uvd_equivalent(p1: &Path2D, p2: &Path2D, g: &GridEsdf, n_checks: usize) -> bool {
    let n = n_checks.max(1);
    (0..=n).all(|i| {
        let u = i as f64 / n as f64;
        segment_clear(g, p1.point_at_fraction(u), p2.point_at_fraction(u), 0.0)
    })
}

fn densify(p: &Path2D) -> Vec<[f64; 2]> {
    let mut out = vec![p.start()];
    for w in p.waypoints.windows(2) {
        let l = (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]);
        let n = (l / DENSIFY_STEP).ceil().max(1.0) as usize;
        for i in 1..=n {
            let t = i as f64 / n as f64;
            out.push([w[0][0] + t * (w[1][0] - w[0][0]), w[0][1] + t * (w[1][1] - w[0][1])]);
        }
    }
    out
}

fn shortcut_pass(pts: &[[f64; 2]], g: &GridEsdf, cfg: &TopoConfig) -> Vec<[f64; 2]> {
    let mut out = vec![pts[0]];
    let mut i = 0;
    while i + 1 < pts.len() {
        let mut next = i + 1;
        for j in (i + 2..pts.len()).rev() {
            if !segment_clear(g, pts[i], pts[j], cfg.clearance_min) {
                continue;
            }
            let chord = Path2D::new(vec![pts[i], pts[j]]);
            let sub = Path2D::new(pts[i..=j].to_vec());
            if chord.length <= sub.length && uvd_equivalent(&chord, &sub, g, cfg.n_checks) {
                next = j;
                break;
            }
        }
        out.push(pts[next]);
        i = next;
    }
    out
}

/// Greedy line-of-sight shortcutting to a fixpoint.
pub fn shorten_path(p: &Path2D, g: &GridEsdf, cfg: &TopoConfig) -> Path2D {
    if p.waypoints.len() < 2 {
        return p.clone();
    }
    let mut pts = shortcut_pass(&densify(p), g, cfg);
    loop {
        let next = shortcut_pass(&pts, g, cfg);
        if next.len() == pts.len() {
            break;
        }
        pts = next;
    }
    let out = Path2D::new(pts);
    if out.length <= p.length {
        out
    } else {
        p.clone()
    }
}

/// One representative per UVD class among paths sorted by length.
pub fn prune_paths(paths: &[Path2D], g: &GridEsdf, cfg: &TopoConfig) -> Vec<Path2D> {
    let Some(first) = paths.first() else {
        return Vec::new();
    };
    let limit = cfg.detour_ratio * first.length;
    let mut kept: Vec<Path2D> = Vec::new();
    for p in paths {
        if kept.len() >= cfg.max_candidates {
            break;
        }
        if p.length > limit {
            continue;
        }
        if kept.iter().all(|k| !uvd_equivalent(k, p, g, cfg.n_checks)) {
            kept.push(p.clone());
        }
    }
    kept
}
