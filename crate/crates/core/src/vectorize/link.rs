use std::collections::HashMap;

use crate::geom::{self, Vertex};

use super::{Lineament, LineamentSet};

#[derive(Clone, Copy)]
struct End {
    line: usize,
    /// false = first vertex, true = last vertex
    tail: bool,
    at: Vertex,
    /// unit direction pointing out of the polyline
    out: Vertex,
    azimuth: f64,
}

fn ends(i: usize, l: &Lineament) -> [End; 2] {
    let v = l.vertices();
    let n = v.len();
    let make = |tail: bool, at: Vertex, inner: Vertex| {
        let d = geom::distance(inner, at);
        End {
            line: i,
            tail,
            at,
            out: [(at[0] - inner[0]) / d, (at[1] - inner[1]) / d],
            azimuth: geom::segment_azimuth(inner, at),
        }
    };
    [make(false, v[0], v[1]), make(true, v[n - 1], v[n - 2])]
}

fn dot(a: Vertex, b: Vertex) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Whether two free ends may be joined: close enough, axially aligned, facing
/// each other, and with the connecting segment running forward from both.
fn compatible(a: &End, b: &End, angular: f64, gap: f64) -> bool {
    if geom::axial_difference(a.azimuth, b.azimuth) > angular || dot(a.out, b.out) >= 0.0 {
        return false;
    }
    if gap == 0.0 {
        return true;
    }
    let conn = [b.at[0] - a.at[0], b.at[1] - a.at[1]];
    dot(conn, a.out) >= 0.0 && dot(conn, b.out) <= 0.0
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Greedily joins polylines end to end, closest gap first, ties by lower ids.
/// A merged polyline keeps the smallest id of its members.
pub fn link_polylines(set: &LineamentSet, angular_difference: f64, linking_distance: f64) -> LineamentSet {
    let lines = set.lineaments();
    let n = lines.len();
    if n < 2 {
        return set.clone();
    }
    let all: Vec<End> = lines.iter().enumerate().flat_map(|(i, l)| ends(i, l)).collect();

    // bucket endpoints so only nearby pairs are examined
    let cell = linking_distance.max(1.0);
    let key = |v: Vertex| ((v[0] / cell).floor() as i64, (v[1] / cell).floor() as i64);
    let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (k, e) in all.iter().enumerate() {
        buckets.entry(key(e.at)).or_default().push(k);
    }
    let mut cands: Vec<(f64, u32, u32, usize, usize)> = Vec::new();
    for (a, ea) in all.iter().enumerate() {
        let (kx, ky) = key(ea.at);
        for dx in -1..=1 {
            for dy in -1..=1 {
                let Some(bucket) = buckets.get(&(kx + dx, ky + dy)) else { continue };
                for &b in bucket {
                    let eb = &all[b];
                    if b <= a || eb.line == ea.line {
                        continue;
                    }
                    let gap = geom::distance(ea.at, eb.at);
                    if gap <= linking_distance && compatible(ea, eb, angular_difference, gap) {
                        let (ia, ib) = (lines[ea.line].id(), lines[eb.line].id());
                        cands.push((gap, ia.min(ib), ia.max(ib), a, b));
                    }
                }
            }
        }
    }
    cands.sort_by(|x, y| {
        x.0.total_cmp(&y.0)
            .then(x.1.cmp(&y.1))
            .then(x.2.cmp(&y.2))
            .then(x.3.cmp(&y.3))
            .then(x.4.cmp(&y.4))
    });

    // endpoint partner after linking
    let mut partner: Vec<Option<usize>> = vec![None; all.len()];
    let mut parent: Vec<usize> = (0..n).collect();
    for &(_, _, _, a, b) in &cands {
        if partner[a].is_some() || partner[b].is_some() {
            continue;
        }
        let (ra, rb) = (find(&mut parent, all[a].line), find(&mut parent, all[b].line));
        if ra == rb {
            continue;
        }
        parent[ra] = rb;
        partner[a] = Some(b);
        partner[b] = Some(a);
    }

    // assemble each chain of linked polylines from a free end
    let mut used = vec![false; n];
    let mut out = Vec::new();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| lines[i].id());
    for &start in &order {
        if used[start] {
            continue;
        }
        // walk to one terminal of the component, then pick the terminal end
        // owned by the smaller id so the orientation is deterministic
        let terminal = |from_end: usize| {
            let mut e = from_end;
            while let Some(p) = partner[e] {
                e = p ^ 1;
            }
            e
        };
        let t1 = terminal(2 * start);
        let t2 = terminal(2 * start + 1);
        let (e1, e2) = (&all[t1], &all[t2]);
        let entry = if (lines[e1.line].id(), e1.tail) <= (lines[e2.line].id(), e2.tail) { t1 } else { t2 };

        let mut verts: Vec<Vertex> = Vec::new();
        let mut min_id = u32::MAX;
        let mut e = entry;
        loop {
            let li = all[e].line;
            used[li] = true;
            min_id = min_id.min(lines[li].id());
            if all[e].tail {
                verts.extend(lines[li].vertices().iter().rev());
            } else {
                verts.extend_from_slice(lines[li].vertices());
            }
            match partner[e ^ 1] {
                Some(p) => e = p,
                None => break,
            }
        }
        if let Ok(l) = Lineament::new(min_id, verts) {
            out.push(l);
        }
    }
    out.sort_by_key(Lineament::id);
    LineamentSet::new(out, set.georef().clone(), set.provenance()).expect("ids stay unique")
}
