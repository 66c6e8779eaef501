use std::collections::HashMap;

use nalgebra::Point3;

use crate::mesh::Polyline3;

/// Segment endpoints closer than this are merged into one node.
pub const CHAIN_TOLERANCE: f64 = 1e-6;

struct NodeIndex {
    cells: HashMap<(i64, i64, i64), Vec<usize>>,
    points: Vec<Point3<f64>>,
}

impl NodeIndex {
    fn new() -> Self {
        NodeIndex {
            cells: HashMap::new(),
            points: Vec::new(),
        }
    }

    fn cell(p: &Point3<f64>) -> (i64, i64, i64) {
        (
            (p.x / CHAIN_TOLERANCE).floor() as i64,
            (p.y / CHAIN_TOLERANCE).floor() as i64,
            (p.z / CHAIN_TOLERANCE).floor() as i64,
        )
    }

    fn insert(&mut self, p: Point3<f64>) -> usize {
        let (cx, cy, cz) = Self::cell(&p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(ids) = self.cells.get(&(cx + dx, cy + dy, cz + dz)) {
                        for &id in ids {
                            if (self.points[id] - p).norm() <= CHAIN_TOLERANCE {
                                return id;
                            }
                        }
                    }
                }
            }
        }
        let id = self.points.len();
        self.points.push(p);
        self.cells.entry((cx, cy, cz)).or_default().push(id);
        id
    }
}

/// Joins unordered segments into maximal polylines.
///
/// Every non-degenerate segment is used exactly once. Open chains start at
/// odd-degree nodes; what remains is walked into closed loops.
pub fn chain_segments(segments: &[(Point3<f64>, Point3<f64>)]) -> Vec<Polyline3> {
    let mut index = NodeIndex::new();
    let mut edges: Vec<(usize, usize)> = Vec::with_capacity(segments.len());
    for (a, b) in segments {
        let ia = index.insert(*a);
        let ib = index.insert(*b);
        if ia != ib {
            edges.push((ia, ib));
        }
    }
    let nodes = index.points;
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
    for (e, &(a, b)) in edges.iter().enumerate() {
        adjacency[a].push(e);
        adjacency[b].push(e);
    }
    let mut used = vec![false; edges.len()];
    let mut cursor = vec![0usize; nodes.len()];

    let mut next_edge = |node: usize, used: &mut Vec<bool>| -> Option<usize> {
        while cursor[node] < adjacency[node].len() {
            let e = adjacency[node][cursor[node]];
            cursor[node] += 1;
            if !used[e] {
                used[e] = true;
                return Some(e);
            }
        }
        None
    };

    let odd: Vec<usize> = (0..nodes.len())
        .filter(|&n| adjacency[n].len() % 2 == 1)
        .collect();
    let starts = odd.into_iter().chain(0..nodes.len());

    let mut out = Vec::new();
    for start in starts {
        loop {
            let mut path = vec![start];
            let mut cur = start;
            let mut closed = false;
            while let Some(e) = next_edge(cur, &mut used) {
                let (a, b) = edges[e];
                cur = if a == cur { b } else { a };
                if cur == start {
                    closed = true;
                    break;
                }
                path.push(cur);
            }
            if path.len() == 1 && !closed {
                break;
            }
            let points = path.iter().map(|&i| nodes[i]).collect();
            if let Some(p) = Polyline3::new(points, closed) {
                out.push(p);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> Point3<f64> {
        Point3::new(x, y, 0.0)
    }

    #[test]
    fn shuffled_square_closes() {
        let segs = [
            (p(1.0, 1.0), p(0.0, 1.0)),
            (p(0.0, 0.0), p(1.0, 0.0)),
            (p(0.0, 1.0), p(0.0, 0.0)),
            (p(1.0, 0.0), p(1.0, 1.0)),
        ];
        let polys = chain_segments(&segs);
        assert_eq!(polys.len(), 1);
        assert!(polys[0].is_closed());
        assert_eq!(polys[0].len(), 4);
        assert!((polys[0].signed_area_xy().abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn open_chain_starts_at_an_end() {
        let segs = [
            (p(1.0, 0.0), p(2.0, 0.0)),
            (p(0.0, 0.0), p(1.0, 0.0 + 1e-8)),
        ];
        let polys = chain_segments(&segs);
        assert_eq!(polys.len(), 1);
        assert!(!polys[0].is_closed());
        assert_eq!(polys[0].len(), 3);
    }

    #[test]
    fn degenerate_segment_dropped() {
        let polys = chain_segments(&[(p(0.0, 0.0), p(0.0, 0.0))]);
        assert!(polys.is_empty());
    }

    #[test]
    fn figure_eight_uses_every_segment() {
        // two squares sharing the corner (1, 1)
        let segs = [
            (p(0.0, 0.0), p(1.0, 0.0)),
            (p(1.0, 0.0), p(1.0, 1.0)),
            (p(1.0, 1.0), p(0.0, 1.0)),
            (p(0.0, 1.0), p(0.0, 0.0)),
            (p(1.0, 1.0), p(2.0, 1.0)),
            (p(2.0, 1.0), p(2.0, 2.0)),
            (p(2.0, 2.0), p(1.0, 2.0)),
            (p(1.0, 2.0), p(1.0, 1.0)),
        ];
        let polys = chain_segments(&segs);
        let total: usize = polys.iter().map(|p| p.segment_count()).sum();
        assert_eq!(total, 8);
        assert!(polys.iter().all(|p| p.is_closed()));
    }
}
