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

//! Dense revised simplex for `max c'x  s.t.  Ax = b, x >= 0`, started from a
//! caller-supplied feasible basis. Columns can be appended between solves,
//! which is all the restricted master of the column generation needs.

use crate::error::{Error, Result};

/// After this many consecutive degenerate pivots, pricing switches from
/// Dantzig's rule to Bland's rule until a non-degenerate step happens.
const DEGENERATE_STREAK: usize = 50;
const REFACTOR_EVERY: usize = 64;
const PIVOT_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub(crate) struct RevisedSimplex {
    m: usize,
    rhs: Vec<f64>,
    cols: Vec<Vec<(usize, f64)>>,
    cost: Vec<f64>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    /// Row-major `m x m` basis inverse.
    binv: Vec<f64>,
    x_b: Vec<f64>,
    eps: f64,
    since_refactor: usize,
    pub pivots: usize,
}

impl RevisedSimplex {
    pub fn new(rhs: Vec<f64>, eps: f64) -> Self {
        let m = rhs.len();
        RevisedSimplex {
            m,
            rhs,
            cols: Vec::new(),
            cost: Vec::new(),
            basis: Vec::new(),
            is_basic: Vec::new(),
            binv: Vec::new(),
            x_b: Vec::new(),
            eps,
            since_refactor: 0,
            pivots: 0,
        }
    }

    pub fn num_columns(&self) -> usize {
        self.cols.len()
    }

    pub fn add_column(&mut self, entries: Vec<(usize, f64)>, cost: f64) -> usize {
        debug_assert!(entries.iter().all(|&(r, _)| r < self.m));
        self.cols.push(entries);
        self.cost.push(cost);
        self.is_basic.push(false);
        self.cols.len() - 1
    }

    /// Installs `basis[r]` as the basic column of row `r` and refactors.
    pub fn set_basis(&mut self, basis: Vec<usize>) -> Result<()> {
        if basis.len() != self.m {
            return Err(Error::Lp("basis size mismatch".into()));
        }
        self.is_basic.iter_mut().for_each(|b| *b = false);
        for &c in &basis {
            self.is_basic[c] = true;
        }
        self.basis = basis;
        self.refactor()?;
        if self.x_b.iter().any(|&x| x < -1e-7) {
            return Err(Error::Lp("initial basis is not primal feasible".into()));
        }
        Ok(())
    }

    fn refactor(&mut self) -> Result<()> {
        let m = self.m;
        // Gauss-Jordan on [B | I]
        let mut a = vec![0.0; m * m];
        for (r, &c) in self.basis.iter().enumerate() {
            for &(row, v) in &self.cols[c] {
                a[row * m + r] = v;
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for col in 0..m {
            let piv = (col..m)
                .max_by(|&x, &y| a[x * m + col].abs().total_cmp(&a[y * m + col].abs()))
                .unwrap();
            if a[piv * m + col].abs() < 1e-12 {
                return Err(Error::Lp("singular basis".into()));
            }
            if piv != col {
                for k in 0..m {
                    a.swap(piv * m + k, col * m + k);
                    inv.swap(piv * m + k, col * m + k);
                }
            }
            let d = a[col * m + col];
            for k in 0..m {
                a[col * m + k] /= d;
                inv[col * m + k] /= d;
            }
            for r in 0..m {
                if r != col {
                    let f = a[r * m + col];
                    if f != 0.0 {
                        for k in 0..m {
                            a[r * m + k] -= f * a[col * m + k];
                            inv[r * m + k] -= f * inv[col * m + k];
                        }
                    }
                }
            }
        }
        self.binv = inv;
        self.x_b = (0..m)
            .map(|r| (0..m).map(|k| self.binv[r * m + k] * self.rhs[k]).sum::<f64>())
            .collect();
        for x in &mut self.x_b {
            if x.abs() < 1e-12 {
                *x = 0.0;
            }
        }
        self.since_refactor = 0;
        Ok(())
    }

    /// Simplex multipliers `y = c_B B^-1`.
    pub fn duals(&self) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for (r, &c) in self.basis.iter().enumerate() {
            let cb = self.cost[c];
            if cb != 0.0 {
                for k in 0..m {
                    y[k] += cb * self.binv[r * m + k];
                }
            }
        }
        y
    }

    pub fn reduced_cost(&self, y: &[f64], col: usize) -> f64 {
        self.cost[col] - self.cols[col].iter().map(|&(r, v)| y[r] * v).sum::<f64>()
    }

    pub fn primal(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.cols.len()];
        for (r, &c) in self.basis.iter().enumerate() {
            x[c] = self.x_b[r].max(0.0);
        }
        x
    }

    pub fn objective(&self) -> f64 {
        self.basis
            .iter()
            .zip(&self.x_b)
            .map(|(&c, &x)| self.cost[c] * x)
            .sum()
    }

    /// Runs primal simplex iterations to optimality.
    pub fn optimize(&mut self, max_pivots: usize) -> Result<()> {
        let m = self.m;
        let mut degenerate = 0usize;
        let mut budget = max_pivots;
        loop {
            let y = self.duals();
            let bland = degenerate >= DEGENERATE_STREAK;
            let mut entering = None;
            let mut best = self.eps;
            for c in 0..self.cols.len() {
                if self.is_basic[c] {
                    continue;
                }
                let d = self.reduced_cost(&y, c);
                if d > best {
                    entering = Some(c);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(q) = entering else {
                return Ok(());
            };
            if budget == 0 {
                return Err(Error::Lp("pivot limit reached".into()));
            }
            budget -= 1;

            let mut u = vec![0.0; m];
            for &(row, v) in &self.cols[q] {
                for r in 0..m {
                    u[r] += self.binv[r * m + row] * v;
                }
            }
            let mut leave: Option<usize> = None;
            let mut theta = f64::INFINITY;
            for r in 0..m {
                if u[r] > PIVOT_TOL {
                    let ratio = self.x_b[r].max(0.0) / u[r];
                    let better = match leave {
                        None => true,
                        Some(l) => {
                            ratio < theta - 1e-12
                                || (ratio <= theta + 1e-12 && self.basis[r] < self.basis[l])
                        }
                    };
                    if better {
                        theta = if leave.is_none() { ratio } else { theta.min(ratio) };
                        leave = Some(r);
                    }
                }
            }
            let Some(p) = leave else {
                return Err(Error::Lp("unbounded master problem".into()));
            };
            if theta <= self.eps {
                degenerate += 1;
            } else {
                degenerate = 0;
            }

            for r in 0..m {
                if r != p {
                    self.x_b[r] -= theta * u[r];
                    if self.x_b[r].abs() < 1e-12 {
                        self.x_b[r] = 0.0;
                    }
                }
            }
            self.x_b[p] = theta;
            let up = u[p];
            for k in 0..m {
                self.binv[p * m + k] /= up;
            }
            for r in 0..m {
                if r != p && u[r] != 0.0 {
                    let f = u[r];
                    for k in 0..m {
                        self.binv[r * m + k] -= f * self.binv[p * m + k];
                    }
                }
            }
            self.is_basic[self.basis[p]] = false;
            self.is_basic[q] = true;
            self.basis[p] = q;
            self.pivots += 1;
            self.since_refactor += 1;
            if self.since_refactor >= REFACTOR_EVERY {
                self.refactor()?;
            }
        }
    }
}
