// Licensed under the Apache License, Version 2.0 (the "License"); you may
// not use this file except in compliance with the License. You may obtain
// a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
// WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
// License for the specific language governing permissions and limitations
// under the License.

//! Bipartite kernels: maximum-weight matching and edge colouring with `Δ`
//! colours.

use std::fmt::Debug;
use std::ops::{Add, Sub};

use crate::error::{Error, Result};

/// Edge weight usable by [`max_weight_matching`].
pub trait Weight: Copy + PartialOrd + Add<Output = Self> + Sub<Output = Self> + Debug {
    const ZERO: Self;
    /// Larger than any reduced cost the assignment routine can produce.
    const INF: Self;
    /// Absent edge marker, below every valuation.
    const ABSENT: Self;
}

impl Weight for i64 {
    const ZERO: Self = 0;
    const INF: Self = i64::MAX / 4;
    const ABSENT: Self = i64::MIN;
}

impl Weight for f64 {
    const ZERO: Self = 0.0;
    const INF: Self = f64::INFINITY;
    const ABSENT: Self = f64::NEG_INFINITY;
}

/// Complete bipartite graph stored as a dense `left x right` weight matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedBipartiteGraph<W> {
    left: usize,
    right: usize,
    weights: Vec<W>,
}

impl<W: Weight> WeightedBipartiteGraph<W> {
    pub fn new(weights: Vec<Vec<W>>) -> Result<Self> {
        let left = weights.len();
        let right = weights.first().map_or(0, Vec::len);
        if weights.iter().any(|r| r.len() != right) {
            return Err(Error::InvalidInstance("ragged weight matrix".into()));
        }
        Ok(WeightedBipartiteGraph {
            left,
            right,
            weights: weights.into_iter().flatten().collect(),
        })
    }

    pub fn from_fn(left: usize, right: usize, mut f: impl FnMut(usize, usize) -> W) -> Self {
        let mut weights = Vec::with_capacity(left * right);
        for a in 0..left {
            for b in 0..right {
                weights.push(f(a, b));
            }
        }
        WeightedBipartiteGraph {
            left,
            right,
            weights,
        }
    }

    pub fn left_size(&self) -> usize {
        self.left
    }

    pub fn right_size(&self) -> usize {
        self.right
    }

    #[inline]
    pub fn weight(&self, l: usize, r: usize) -> W {
        self.weights[l * self.right + r]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Matching<W> {
    /// `(left, right)` pairs sorted by left index.
    pub pairs: Vec<(usize, usize)>,
    pub weight: W,
}

/// Maximum-weight (not necessarily perfect) matching.
///
/// Non-positive weights are floored to zero, the padded square assignment
/// problem is solved with the shortest augmenting path method with
/// potentials, and zero-weight pairs are dropped from the result.
pub fn max_weight_matching<W: Weight>(g: &WeightedBipartiteGraph<W>) -> Matching<W> {
    let size = g.left.max(g.right);
    if size == 0 {
        return Matching {
            pairs: Vec::new(),
            weight: W::ZERO,
        };
    }
    // cost[a][b] = -max(w, 0), stored 1-based as in the classic formulation
    let cost = |a: usize, b: usize| -> W {
        if a < g.left && b < g.right {
            let w = g.weight(a, b);
            if w > W::ZERO {
                W::ZERO - w
            } else {
                W::ZERO
            }
        } else {
            W::ZERO
        }
    };
    let mut u = vec![W::ZERO; size + 1];
    let mut v = vec![W::ZERO; size + 1];
    let mut p = vec![0usize; size + 1];
    let mut way = vec![0usize; size + 1];
    for row in 1..=size {
        p[0] = row;
        let mut j0 = 0usize;
        let mut minv = vec![W::INF; size + 1];
        let mut used = vec![false; size + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = W::INF;
            let mut j1 = 0usize;
            for j in 1..=size {
                if !used[j] {
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
            }
            for j in 0..=size {
                if used[j] {
                    u[p[j]] = u[p[j]] + delta;
                    v[j] = v[j] - delta;
                } else {
                    minv[j] = minv[j] - delta;
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
    let mut pairs = Vec::new();
    let mut weight = W::ZERO;
    for j in 1..=size {
        let (a, b) = (p[j] - 1, j - 1);
        if a < g.left && b < g.right {
            let w = g.weight(a, b);
            if w > W::ZERO {
                pairs.push((a, b));
                weight = weight + w;
            }
        }
    }
    pairs.sort_unstable();
    Matching { pairs, weight }
}

/// Bipartite multigraph given by an edge list; parallel edges allowed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteMultigraph {
    left: usize,
    right: usize,
    edges: Vec<(usize, usize)>,
}

impl BipartiteMultigraph {
    pub fn new(left: usize, right: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if let Some(&(a, b)) = edges.iter().find(|&&(a, b)| a >= left || b >= right) {
            return Err(Error::InvalidInstance(format!(
                "edge ({a}, {b}) outside {left} x {right}"
            )));
        }
        Ok(BipartiteMultigraph { left, right, edges })
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn left_degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.left];
        self.edges.iter().for_each(|&(a, _)| d[a] += 1);
        d
    }

    pub fn right_degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.right];
        self.edges.iter().for_each(|&(_, b)| d[b] += 1);
        d
    }

    pub fn max_degree(&self) -> usize {
        let l = self.left_degrees().into_iter().max().unwrap_or(0);
        let r = self.right_degrees().into_iter().max().unwrap_or(0);
        l.max(r)
    }
}

/// Proper edge colouring with colours `0..num_colors`, returned per edge.
///
/// Edges are inserted one at a time. When the endpoints have no common free
/// colour, the two-coloured alternating path from the right endpoint is
/// swapped, which frees a colour at both ends (König).
pub fn edge_color(g: &BipartiteMultigraph, num_colors: usize) -> Result<Vec<usize>> {
    let delta = g.max_degree();
    if num_colors < delta {
        return Err(Error::TooFewColors {
            needed: delta,
            given: num_colors,
        });
    }
    const FREE: usize = usize::MAX;
    // vertex ids: left a -> a, right b -> left + b
    let nv = g.left + g.right;
    let mut at = vec![FREE; nv * num_colors];
    let mut color = vec![FREE; g.edges.len()];
    let ends = |e: usize| (g.edges[e].0, g.left + g.edges[e].1);

    for e in 0..g.edges.len() {
        let (x, y) = ends(e);
        let free_at = |at: &[usize], v: usize| (0..num_colors).find(|&c| at[v * num_colors + c] == FREE);
        let a = free_at(&at, x).ok_or_else(|| Error::Internal("no free colour at left vertex".into()))?;
        if at[y * num_colors + a] != FREE {
            let b = free_at(&at, y).ok_or_else(|| Error::Internal("no free colour at right vertex".into()))?;
            // walk the a/b path starting at y with colour a
            let mut path = Vec::new();
            let mut cur = y;
            let mut c = a;
            while at[cur * num_colors + c] != FREE {
                let f = at[cur * num_colors + c];
                path.push(f);
                let (fx, fy) = ends(f);
                cur = if fx == cur { fy } else { fx };
                c = if c == a { b } else { a };
            }
            for &f in &path {
                let (fx, fy) = ends(f);
                let old = color[f];
                at[fx * num_colors + old] = FREE;
                at[fy * num_colors + old] = FREE;
            }
            for &f in &path {
                let (fx, fy) = ends(f);
                let new = if color[f] == a { b } else { a };
                color[f] = new;
                at[fx * num_colors + new] = f;
                at[fy * num_colors + new] = f;
            }
        }
        debug_assert_eq!(at[y * num_colors + a], FREE);
        color[e] = a;
        at[x * num_colors + a] = e;
        at[y * num_colors + a] = e;
    }
    Ok(color)
}

/// No two edges sharing an endpoint share a colour.
pub fn is_proper_coloring(g: &BipartiteMultigraph, colors: &[usize]) -> bool {
    if colors.len() != g.edges.len() {
        return false;
    }
    let mut seen = std::collections::HashSet::new();
    g.edges.iter().zip(colors).all(|(&(a, b), &c)| {
        seen.insert((0u8, a, c)) && seen.insert((1u8, b, c))
    })
}
