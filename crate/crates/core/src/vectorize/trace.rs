use crate::detect::EdgeMap;
use crate::geom::Vertex;

/// Ordered edge pixels as `(row, col)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelChain {
    pixels: Vec<(usize, usize)>,
}

impl PixelChain {
    pub fn new(pixels: Vec<(usize, usize)>) -> Self {
        PixelChain { pixels }
    }

    pub fn pixels(&self) -> &[(usize, usize)] {
        &self.pixels
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    /// Pixel centres as `[col, row]` vertices.
    pub fn vertices(&self) -> Vec<Vertex> {
        self.pixels.iter().map(|&(r, c)| [c as f64, r as f64]).collect()
    }
}

// E, SE, S, SW, W, NW, N, NE
const OFFSETS: [(isize, isize); 8] = [(0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1), (-1, 0), (-1, 1)];

struct Grid<'a> {
    e: &'a EdgeMap,
    w: usize,
    h: usize,
}

impl Grid<'_> {
    fn on(&self, r: isize, c: isize) -> bool {
        r >= 0 && c >= 0 && (r as usize) < self.h && (c as usize) < self.w && self.e.get(r as usize, c as usize)
    }

    /// m-adjacent edge neighbours: diagonals count only when neither shared
    /// 4-neighbour is an edge, so staircases do not form spurious triangles.
    fn neighbours(&self, r: usize, c: usize) -> impl Iterator<Item = usize> + '_ {
        let (ri, ci) = (r as isize, c as isize);
        OFFSETS.iter().filter_map(move |&(dr, dc)| {
            let (nr, nc) = (ri + dr, ci + dc);
            if !self.on(nr, nc) {
                return None;
            }
            if dr != 0 && dc != 0 && (self.on(ri + dr, ci) || self.on(ri, ci + dc)) {
                return None;
            }
            Some(nr as usize * self.w + nc as usize)
        })
    }

    fn degree(&self, idx: usize) -> usize {
        self.neighbours(idx / self.w, idx % self.w).count()
    }
}

/// Walks from `cur` through unvisited neighbours, stopping after absorbing a
/// junction or when no unvisited neighbour remains.
fn walk(g: &Grid, junction: &[bool], visited: &mut [bool], mut cur: usize, out: &mut Vec<usize>) {
    loop {
        let next = g.neighbours(cur / g.w, cur % g.w).find(|&n| !visited[n]);
        let Some(n) = next else { return };
        visited[n] = true;
        out.push(n);
        if junction[n] {
            return;
        }
        cur = n;
    }
}

/// Splits an edge map into pixel chains. Chains end at endpoints and at
/// junctions (more than two neighbours); a junction pixel joins the first chain
/// that reaches it. Seeding is row-major, so the result is deterministic.
pub fn trace_curves(e: &EdgeMap) -> Vec<PixelChain> {
    let g = Grid { e, w: e.width(), h: e.height() };
    let n = g.w * g.h;
    let degree: Vec<usize> = (0..n).map(|i| if e.cells()[i] { g.degree(i) } else { 0 }).collect();
    let junction: Vec<bool> = degree.iter().map(|&d| d > 2).collect();
    let mut visited = vec![false; n];
    let mut chains = Vec::new();
    let to_chain = |idx: Vec<usize>| PixelChain::new(idx.into_iter().map(|i| (i / g.w, i % g.w)).collect());

    // open curves from their endpoints
    for i in 0..n {
        if e.cells()[i] && !visited[i] && degree[i] <= 1 {
            visited[i] = true;
            let mut out = vec![i];
            walk(&g, &junction, &mut visited, i, &mut out);
            chains.push(to_chain(out));
        }
    }
    // segments between junctions and closed loops, extended both ways
    for i in 0..n {
        if e.cells()[i] && !visited[i] && !junction[i] {
            visited[i] = true;
            let mut fwd = vec![i];
            walk(&g, &junction, &mut visited, i, &mut fwd);
            let mut back = Vec::new();
            walk(&g, &junction, &mut visited, i, &mut back);
            back.reverse();
            back.extend(fwd);
            chains.push(to_chain(back));
        }
    }
    // junctions nobody absorbed
    for (i, seen) in visited.iter_mut().enumerate() {
        if e.cells()[i] && !*seen {
            *seen = true;
            chains.push(to_chain(vec![i]));
        }
    }
    chains
}

#[cfg(test)]
mod tests {
    use super::*;

    fn total(chains: &[PixelChain]) -> usize {
        chains.iter().map(PixelChain::len).sum()
    }

    #[test]
    fn straight_line_is_one_chain() {
        let e = EdgeMap::from_fn(60, 5, |r, c| r == 2 && (5..55).contains(&c));
        let ch = trace_curves(&e);
        assert_eq!(ch.len(), 1);
        assert_eq!(ch[0].len(), 50);
    }

    #[test]
    fn plus_splits_into_four() {
        let e = EdgeMap::from_fn(25, 25, |r, c| (r == 12 && (2..=22).contains(&c)) || (c == 12 && (2..=22).contains(&r)));
        let ch = trace_curves(&e);
        assert_eq!(ch.len(), 4);
        assert_eq!(total(&ch), e.count());
    }

    #[test]
    fn empty_map() {
        assert!(trace_curves(&EdgeMap::from_fn(8, 8, |_, _| false)).is_empty());
    }

    #[test]
    fn diagonal_staircase_is_one_chain() {
        let e = EdgeMap::from_fn(20, 20, |r, c| c == r || c == r + 1);
        let ch = trace_curves(&e);
        assert_eq!(ch.len(), 1);
        assert_eq!(ch[0].len(), e.count());
    }

    #[test]
    fn closed_loop_covers_every_pixel() {
        let e = EdgeMap::from_fn(12, 12, |r, c| {
            ((r == 2 || r == 9) && (2..=9).contains(&c)) || ((c == 2 || c == 9) && (2..=9).contains(&r))
        });
        let ch = trace_curves(&e);
        assert_eq!(ch.len(), 1);
        assert_eq!(ch[0].len(), e.count());
    }

    #[test]
    fn every_pixel_in_exactly_one_chain() {
        // irregular blob-ish pattern
        let e = EdgeMap::from_fn(30, 30, |r, c| (r * 7 + c * 13) % 5 == 0 || (r == 15) || (c == 4));
        let ch = trace_curves(&e);
        let mut seen = std::collections::HashSet::new();
        for c in &ch {
            for p in c.pixels() {
                assert!(seen.insert(*p));
            }
        }
        assert_eq!(seen.len(), e.count());
    }
}
