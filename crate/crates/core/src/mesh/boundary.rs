use std::collections::{BTreeMap, HashMap};

use super::{Polyline3, TriangleMesh};
use crate::error::{Error, Result};

/// Closed chains of edges that belong to exactly one face.
///
/// Loops are sorted by total length, longest first. A watertight mesh has no
/// boundary and yields an empty list.
pub fn boundary_loops(mesh: &TriangleMesh) -> Result<Vec<Polyline3>> {
    let mut edge_faces: HashMap<(usize, usize), u32> = HashMap::with_capacity(mesh.face_count() * 3);
    for f in mesh.faces() {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            let key = (a.min(b), a.max(b));
            let c = edge_faces.entry(key).or_insert(0);
            *c += 1;
            if *c > 2 {
                return Err(Error::NonManifoldEdge(key.0, key.1));
            }
        }
    }

    // Undirected boundary graph; BTreeMap keeps the walk order independent of hashing.
    let mut adjacency: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut boundary_edges: Vec<(usize, usize)> = edge_faces
        .into_iter()
        .filter(|&(_, c)| c == 1)
        .map(|(e, _)| e)
        .collect();
    boundary_edges.sort_unstable();
    for &(a, b) in &boundary_edges {
        adjacency.entry(a).or_default().push(b);
        adjacency.entry(b).or_default().push(a);
    }
    for list in adjacency.values_mut() {
        list.sort_unstable();
    }

    let mut used: HashMap<(usize, usize), bool> =
        boundary_edges.iter().map(|&e| (e, false)).collect();
    let take = |a: usize, b: usize, used: &mut HashMap<(usize, usize), bool>| -> bool {
        let slot = used.get_mut(&(a.min(b), a.max(b))).expect("boundary edge");
        !std::mem::replace(slot, true)
    };

    let mut loops: Vec<(f64, usize, Polyline3)> = Vec::new();
    for &(start, second) in &boundary_edges {
        if !take(start, second, &mut used) {
            continue;
        }
        let mut chain = vec![start, second];
        let mut current = second;
        let mut closed = false;
        loop {
            if current == start {
                closed = true;
                chain.pop();
                break;
            }
            let next = adjacency[&current]
                .iter()
                .copied()
                .find(|&n| !used[&(current.min(n), current.max(n))]);
            match next {
                Some(n) => {
                    take(current, n, &mut used);
                    chain.push(n);
                    current = n;
                }
                None => break,
            }
        }
        if !closed {
            continue;
        }
        let pts = chain.iter().map(|&i| mesh.vertices()[i]).collect();
        if let Some(poly) = Polyline3::new(pts, true) {
            loops.push((poly.length(), start, poly));
        }
    }
    loops.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    Ok(loops.into_iter().map(|(_, _, p)| p).collect())
}
