//! Dense two-phase simplex over exact rationals with Bland's rule.
//!
//! All variables are nonnegative. The tableau is stored densely but updates
//! skip zero entries, which keeps the small, sparse programs of the thin-flow
//! search cheap.

use num_traits::{One, Signed, Zero};

use crate::num::Q;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub coeffs: Vec<(usize, Q)>,
    pub relation: Relation,
    pub rhs: Q,
}

#[derive(Clone, Debug, Default)]
pub struct LinearProgram {
    pub num_vars: usize,
    pub constraints: Vec<Constraint>,
    /// Maximized.
    pub objective: Vec<(usize, Q)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LpOutcome {
    Infeasible,
    Unbounded,
    Optimal { values: Vec<Q>, objective: Q },
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        LinearProgram { num_vars, ..Default::default() }
    }

    pub fn add(&mut self, coeffs: Vec<(usize, Q)>, relation: Relation, rhs: Q) {
        debug_assert!(coeffs.iter().all(|(j, _)| *j < self.num_vars));
        self.constraints.push(Constraint { coeffs, relation, rhs });
    }

    pub fn maximize(&mut self, objective: Vec<(usize, Q)>) {
        self.objective = objective;
    }

    /// Exact solve.
    pub fn solve(&self) -> LpOutcome {
        match Tableau::<Q>::build(self).run(self) {
            Outcome::Infeasible => LpOutcome::Infeasible,
            Outcome::Unbounded => LpOutcome::Unbounded,
            Outcome::Optimal(values) => {
                let objective = self.objective.iter().map(|(j, a)| a * &values[*j]).sum();
                LpOutcome::Optimal { values, objective }
            }
        }
    }

    /// Floating-point solve, used only to screen programs before an exact
    /// solve. Returns the optimal objective, `None` if infeasible, and
    /// infinity if unbounded.
    pub fn solve_approx(&self) -> Option<f64> {
        match Tableau::<f64>::build(self).run(self) {
            Outcome::Infeasible => None,
            Outcome::Unbounded => Some(f64::INFINITY),
            Outcome::Optimal(values) => {
                Some(self.objective.iter().map(|(j, a)| crate::num::to_f64(a) * values[*j]).sum())
            }
        }
    }
}

/// Arithmetic the tableau needs. Exact for `Q`; `f64` treats magnitudes
/// below a fixed tolerance as zero.
trait Field: Clone + PartialOrd {
    /// Enter the most negative reduced cost instead of the first one. The
    /// exact solver keeps Bland's rule so its vertex is canonical.
    const DANTZIG: bool;
    fn zero() -> Self;
    fn one() -> Self;
    fn from_q(q: &Q) -> Self;
    fn is_zero(&self) -> bool;
    fn is_positive(&self) -> bool;
    fn is_negative(&self) -> bool;
    fn neg(&self) -> Self;
    fn div(&self, p: &Self) -> Self;
    /// `self -= f * x`.
    fn sub_mul(&mut self, f: &Self, x: &Self);
}

impl Field for Q {
    const DANTZIG: bool = false;
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_q(q: &Q) -> Self {
        q.clone()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn is_positive(&self) -> bool {
        Signed::is_positive(self)
    }
    fn is_negative(&self) -> bool {
        Signed::is_negative(self)
    }
    fn neg(&self) -> Self {
        -self
    }
    fn div(&self, p: &Self) -> Self {
        self / p
    }
    fn sub_mul(&mut self, f: &Self, x: &Self) {
        *self -= f * x;
    }
}

const TOLERANCE: f64 = 1e-9;

impl Field for f64 {
    const DANTZIG: bool = true;
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_q(q: &Q) -> Self {
        crate::num::to_f64(q)
    }
    fn is_zero(&self) -> bool {
        self.abs() <= TOLERANCE
    }
    fn is_positive(&self) -> bool {
        *self > TOLERANCE
    }
    fn is_negative(&self) -> bool {
        *self < -TOLERANCE
    }
    fn neg(&self) -> Self {
        -*self
    }
    fn div(&self, p: &Self) -> Self {
        *self / *p
    }
    fn sub_mul(&mut self, f: &Self, x: &Self) {
        *self -= f * x;
        if self.abs() <= TOLERANCE * 1e-3 {
            *self = 0.0;
        }
    }
}

enum Outcome<F> {
    Infeasible,
    Unbounded,
    Optimal(Vec<F>),
}

struct Tableau<F> {
    rows: Vec<Vec<F>>,
    rhs: Vec<F>,
    basis: Vec<usize>,
    cols: usize,
    artificial_from: usize,
}

impl<F: Field> Tableau<F> {
    fn build(lp: &LinearProgram) -> Self {
        let m = lp.constraints.len();
        let mut slack_count = 0;
        let mut art_count = 0;
        let mut normalized = Vec::with_capacity(m);
        for c in &lp.constraints {
            let flip = Signed::is_negative(&c.rhs);
            let rel = match (c.relation, flip) {
                (Relation::Le, true) => Relation::Ge,
                (Relation::Ge, true) => Relation::Le,
                (r, _) => r,
            };
            match rel {
                Relation::Le => slack_count += 1,
                Relation::Ge => {
                    slack_count += 1;
                    art_count += 1
                }
                Relation::Eq => art_count += 1,
            }
            normalized.push((flip, rel));
        }
        let n = lp.num_vars;
        let artificial_from = n + slack_count;
        let cols = artificial_from + art_count;
        let mut rows = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let mut next_slack = n;
        let mut next_art = artificial_from;
        for (c, (flip, rel)) in lp.constraints.iter().zip(normalized) {
            let mut row: Vec<F> = vec![F::zero(); cols];
            for (j, a) in &c.coeffs {
                row[*j].sub_mul(&F::one().neg(), &F::from_q(a));
            }
            let mut b = F::from_q(&c.rhs);
            if flip {
                row.iter_mut().for_each(|a| *a = a.neg());
                b = b.neg();
            }
            match rel {
                Relation::Le => {
                    row[next_slack] = F::one();
                    basis.push(next_slack);
                    next_slack += 1;
                }
                Relation::Ge => {
                    row[next_slack] = F::one().neg();
                    next_slack += 1;
                    row[next_art] = F::one();
                    basis.push(next_art);
                    next_art += 1;
                }
                Relation::Eq => {
                    row[next_art] = F::one();
                    basis.push(next_art);
                    next_art += 1;
                }
            }
            rows.push(row);
            rhs.push(b);
        }
        Tableau { rows, rhs, basis, cols, artificial_from }
    }

    fn pivot(&mut self, r: usize, c: usize, cost: &mut [F], value: &mut F) {
        let p = self.rows[r][c].clone();
        for a in self.rows[r].iter_mut().filter(|a| !a.is_zero()) {
            *a = a.div(&p);
        }
        self.rows[r][c] = F::one();
        self.rhs[r] = self.rhs[r].div(&p);
        let support: Vec<usize> = (0..self.cols).filter(|&j| !self.rows[r][j].is_zero()).collect();
        let pivot_row = self.rows[r].clone();
        let pivot_rhs = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r || self.rows[i][c].is_zero() {
                continue;
            }
            let f = self.rows[i][c].clone();
            for &j in &support {
                self.rows[i][j].sub_mul(&f, &pivot_row[j]);
            }
            self.rows[i][c] = F::zero();
            self.rhs[i].sub_mul(&f, &pivot_rhs);
        }
        if !cost[c].is_zero() {
            let f = cost[c].clone();
            for &j in &support {
                cost[j].sub_mul(&f, &pivot_row[j]);
            }
            cost[c] = F::zero();
            value.sub_mul(&f, &pivot_rhs);
        }
        self.basis[r] = c;
    }

    /// Minimizes the reduced-cost row over columns `< limit`. `cost[j]` holds
    /// reduced costs and `value` the negated objective. Returns false if unbounded.
    fn optimize(&mut self, cost: &mut [F], value: &mut F, limit: usize) -> bool {
        // past this many pivots Dantzig's rule hands over to Bland's, which cannot cycle
        let switch = 4 * (self.rows.len() + self.cols);
        let mut pivots = 0;
        loop {
            let entering = if F::DANTZIG && pivots < switch {
                (0..limit)
                    .filter(|&j| cost[j].is_negative())
                    .min_by(|&a, &b| cost[a].partial_cmp(&cost[b]).unwrap_or(std::cmp::Ordering::Equal))
            } else {
                (0..limit).find(|&j| cost[j].is_negative())
            };
            let Some(c) = entering else {
                return true;
            };
            pivots += 1;
            let mut best: Option<(usize, F)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][c];
                if !a.is_positive() {
                    continue;
                }
                let ratio = self.rhs[i].div(a);
                let better = match &best {
                    None => true,
                    Some((bi, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi]),
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            let Some((r, _)) = best else {
                return false;
            };
            self.pivot(r, c, cost, value);
        }
    }

    fn run(mut self, lp: &LinearProgram) -> Outcome<F> {
        let m = self.rows.len();
        // phase one: minimize the sum of artificials
        let mut cost = vec![F::zero(); self.cols];
        let mut value = F::zero();
        for c in cost.iter_mut().skip(self.artificial_from) {
            *c = F::one();
        }
        for i in 0..m {
            if self.basis[i] >= self.artificial_from {
                for j in 0..self.cols {
                    if !self.rows[i][j].is_zero() {
                        cost[j].sub_mul(&F::one(), &self.rows[i][j]);
                    }
                }
                value.sub_mul(&F::one(), &self.rhs[i]);
            }
        }
        self.optimize(&mut cost, &mut value, self.cols);
        if !value.is_zero() {
            return Outcome::Infeasible;
        }
        // drive remaining artificials out of the basis, dropping redundant rows
        let mut i = 0;
        while i < self.rows.len() {
            if self.basis[i] < self.artificial_from {
                i += 1;
                continue;
            }
            match (0..self.artificial_from).find(|&j| !self.rows[i][j].is_zero()) {
                Some(c) => {
                    self.pivot(i, c, &mut cost, &mut value);
                    i += 1;
                }
                None => {
                    self.rows.remove(i);
                    self.rhs.remove(i);
                    self.basis.remove(i);
                }
            }
        }
        // phase two over the original and slack columns
        let limit = self.artificial_from;
        let mut cost = vec![F::zero(); self.cols];
        for (j, a) in &lp.objective {
            cost[*j].sub_mul(&F::one(), &F::from_q(a));
        }
        let mut value = F::zero();
        for i in 0..self.rows.len() {
            let b = self.basis[i];
            if cost[b].is_zero() {
                continue;
            }
            let f = cost[b].clone();
            for j in 0..self.cols {
                if !self.rows[i][j].is_zero() {
                    cost[j].sub_mul(&f, &self.rows[i][j]);
                }
            }
            value.sub_mul(&f, &self.rhs[i]);
        }
        if !self.optimize(&mut cost, &mut value, limit) {
            return Outcome::Unbounded;
        }
        let mut values = vec![F::zero(); lp.num_vars];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < lp.num_vars {
                values[b] = self.rhs[i].clone();
            }
        }
        Outcome::Optimal(values)
    }
}
