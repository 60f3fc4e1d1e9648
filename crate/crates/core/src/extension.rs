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

//! Completion of a partial allocation whose occupied items and rounds
//! satisfy `|M'| + |R'| <= n`: greedy fill of `M' x R'`, then two
//! edge-colouring phases that fill the remaining rounds of `M'` and finally
//! the remaining items.

use crate::error::{Error, Result};
use crate::instance::{Allocation, Instance};
use crate::matching::{edge_color, BipartiteMultigraph};

/// Allocation relabelled so that occupied items and rounds come first.
#[derive(Debug, Clone, PartialEq)]
pub struct Rectangularized {
    pub allocation: Allocation,
    /// New item `p` is old item `item_perm[p]`.
    pub item_perm: Vec<usize>,
    /// New round `p` is old round `round_perm[p]`.
    pub round_perm: Vec<usize>,
}

impl Rectangularized {
    /// Maps an allocation in the relabelled coordinates back to the original.
    pub fn restore(&self, a: &Allocation) -> Allocation {
        a.relabel(&inverse(&self.item_perm), &inverse(&self.round_perm))
    }
}

pub fn inverse(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (p, &q) in perm.iter().enumerate() {
        inv[q] = p;
    }
    inv
}

fn leading(n: usize, occupied: &[usize]) -> Vec<usize> {
    let mut perm = occupied.to_vec();
    perm.extend((0..n).filter(|x| !occupied.contains(x)));
    perm
}

/// Moves occupied items and rounds to the front, keeping relative order.
pub fn rectangularize(a: &Allocation) -> Rectangularized {
    let item_perm = leading(a.n(), &a.occupied_items());
    let round_perm = leading(a.n(), &a.occupied_rounds());
    Rectangularized {
        allocation: a.relabel(&item_perm, &round_perm),
        item_perm,
        round_perm,
    }
}

/// Completes `a`; valuations play no role, the instance only fixes the order.
pub fn extend(inst: &Instance, a: &Allocation) -> Result<Allocation> {
    inst.check_order(a)?;
    extend_allocation(a)
}

pub fn extend_allocation(a: &Allocation) -> Result<Allocation> {
    if !a.is_feasible() {
        return Err(Error::Infeasible);
    }
    let n = a.n();
    let items = a.occupied_items();
    let rounds = a.occupied_rounds();
    let (m, r) = (items.len(), rounds.len());
    if m + r > n {
        return Err(Error::ExtensionPrecondition { n, items, rounds });
    }
    let mut out = a.clone();

    // greedy fill of M' x R'
    for &j in &items {
        for &k in &rounds {
            if out.get(j, k).is_some() {
                continue;
            }
            let mut blocked = vec![false; n];
            for t in 0..n {
                if let Some(i) = out.get(j, t) {
                    blocked[i] = true;
                }
                if let Some(i) = out.get(t, k) {
                    blocked[i] = true;
                }
            }
            let i = blocked
                .iter()
                .position(|&b| !b)
                .ok_or_else(|| Error::Internal(format!("greedy fill blocked at ({j}, {k})")))?;
            out.assign(j, k, i);
        }
    }

    // G1: agents vs M', an edge when the agent is still missing from the item
    let free_rounds: Vec<usize> = (0..n).filter(|k| !rounds.contains(k)).collect();
    let mut edges = Vec::new();
    for (p, &j) in items.iter().enumerate() {
        let mut present = vec![false; n];
        for &k in &rounds {
            present[out.get(j, k).expect("filled")] = true;
        }
        edges.extend((0..n).filter(|&i| !present[i]).map(|i| (i, p)));
    }
    color_into(&mut out, n, m, edges, &free_rounds, |out, i, p, slot| {
        out.assign(items[p], slot, i)
    })?;

    // G2: agents vs R, an edge when the agent is still missing from the round
    let free_items: Vec<usize> = (0..n).filter(|j| !items.contains(j)).collect();
    let mut edges = Vec::new();
    for k in 0..n {
        let mut present = vec![false; n];
        for &j in &items {
            present[out.get(j, k).expect("filled")] = true;
        }
        edges.extend((0..n).filter(|&i| !present[i]).map(|i| (i, k)));
    }
    color_into(&mut out, n, n, edges, &free_items, |out, i, k, slot| {
        out.assign(slot, k, i)
    })?;

    if !(out.is_complete() && out.is_feasible() && out.is_superset_of(a)) {
        return Err(Error::Internal("extension produced an invalid allocation".into()));
    }
    Ok(out)
}

/// Colours the agent/target graph with one colour per free slot and places
/// colour `l` on the `l`-th free slot. Every target must see every colour.
fn color_into(
    out: &mut Allocation,
    n: usize,
    targets: usize,
    edges: Vec<(usize, usize)>,
    slots: &[usize],
    mut place: impl FnMut(&mut Allocation, usize, usize, usize),
) -> Result<()> {
    if edges.is_empty() {
        return Ok(());
    }
    let g = BipartiteMultigraph::new(n, targets, edges)?;
    if g.right_degrees().iter().any(|&d| d != 0 && d != slots.len()) {
        return Err(Error::Internal("target degree differs from free slot count".into()));
    }
    let colors = edge_color(&g, slots.len())?;
    for (&(i, t), &c) in g.edges().iter().zip(&colors) {
        place(out, i, t, slots[c]);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{seq::SliceRandom, Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn check(a: &Allocation) -> Allocation {
        let e = extend_allocation(a).unwrap();
        assert!(e.is_complete() && e.is_feasible() && e.is_superset_of(a));
        e
    }

    #[test]
    fn empty_allocation_extends() {
        for n in 1..=8 {
            check(&Allocation::empty(n));
        }
    }

    #[test]
    fn order_two_has_one_completion() {
        let a = Allocation::from_triples(2, [(0, 0, 0)]).unwrap();
        let e = check(&a);
        assert_eq!(e, Allocation::from_triples(2, [(0, 0, 0), (0, 1, 1), (1, 0, 1), (1, 1, 0)]).unwrap());
    }

    #[test]
    fn precondition_is_enforced() {
        let a = Allocation::from_triples(3, [(0, 0, 0), (1, 1, 1)]).unwrap();
        match extend_allocation(&a) {
            Err(Error::ExtensionPrecondition { n, items, rounds }) => {
                assert_eq!((n, items, rounds), (3, vec![0, 1], vec![0, 1]));
            }
            r => panic!("unexpected {r:?}"),
        }
    }

    #[test]
    fn holes_inside_the_rectangle_are_filled() {
        // n = 5, M' = {0, 2}, R' = {1, 3} with a hole at (2, 3)
        let a = Allocation::from_triples(5, [(4, 0, 1), (1, 0, 3), (3, 2, 1)]).unwrap();
        check(&a);
    }

    #[test]
    fn random_rectangles_extend() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..300 {
            let n = rng.gen_range(1..=9);
            let m = rng.gen_range(0..=n);
            let r = rng.gen_range(0..=n - m);
            // rows of a cyclic square restricted to an m x r corner, with holes
            let shift = rng.gen_range(0..n);
            let mut a = Allocation::empty(n);
            for j in 0..m {
                for k in 0..r {
                    if rng.gen_bool(0.8) {
                        a.assign(j, k, (j + k + shift) % n);
                    }
                }
            }
            let mut ip: Vec<usize> = (0..n).collect();
            let mut rp: Vec<usize> = (0..n).collect();
            ip.shuffle(&mut rng);
            rp.shuffle(&mut rng);
            check(&a.relabel(&ip, &rp));
        }
    }

    #[test]
    fn rectangularize_moves_occupied_lines_forward() {
        let a = Allocation::from_triples(3, [(0, 1, 0), (1, 2, 2)]).unwrap();
        let r = rectangularize(&a);
        assert_eq!(r.item_perm, vec![1, 2, 0]);
        assert_eq!(r.round_perm, vec![0, 2, 1]);
        assert_eq!(r.allocation.occupied_items(), vec![0, 1]);
        assert_eq!(r.allocation.occupied_rounds(), vec![0, 1]);
        assert_eq!(r.restore(&r.allocation), a);
    }

    #[test]
    fn rectangular_input_keeps_identity() {
        let a = Allocation::from_triples(4, [(0, 0, 0), (1, 0, 1), (2, 1, 0)]).unwrap();
        let r = rectangularize(&a);
        assert_eq!(r.item_perm, vec![0, 1, 2, 3]);
        assert_eq!(r.round_perm, vec![0, 1, 2, 3]);
    }
}
