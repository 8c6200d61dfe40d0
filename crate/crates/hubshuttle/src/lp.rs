//! Primal simplex over the bounded-variable standard form, dense tableau.
//!
//! Input constraints are sparse triplets with <=, >= or = relations; each row
//! gets a logical variable and, when the starting point violates the row, a
//! phase-1 artificial. Pivoting is Dantzig's rule with a switch to Bland's
//! rule after a stall of degenerate pivots, which guarantees termination.
//! Returns primal values, row duals and reduced costs.

use thiserror::Error;

pub const FEAS_TOL: f64 = 1e-7;
pub const OPT_TOL: f64 = 1e-7;
pub const PIVOT_TOL: f64 = 1e-10;
const DEGENERATE_STALL: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub sense: Sense,
    objective: Vec<f64>,
    relations: Vec<Relation>,
    rhs: Vec<f64>,
    entries: Vec<(usize, usize, f64)>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

#[derive(Debug, Error, PartialEq)]
pub enum LpError {
    #[error("column {col} out of range in row {row}")]
    ColumnOutOfRange { row: usize, col: usize },
    #[error("non-finite coefficient at ({row}, {col})")]
    NotFinite { row: usize, col: usize },
    #[error("non-finite objective coefficient at {0}")]
    BadObjective(usize),
    #[error("non-finite right-hand side in row {0}")]
    BadRhs(usize),
    #[error("lower bound exceeds upper bound for variable {0}")]
    BadBounds(usize),
    #[error("simplex iteration limit reached")]
    IterationLimit,
    #[error("numerical failure: phase-1 problem reported unbounded")]
    Numerical,
}

impl LinearProgram {
    pub fn new(sense: Sense, num_vars: usize) -> Self {
        LinearProgram {
            sense,
            objective: vec![0.0; num_vars],
            relations: Vec::new(),
            rhs: Vec::new(),
            entries: Vec::new(),
            lower: vec![0.0; num_vars],
            upper: vec![f64::INFINITY; num_vars],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.relations.len()
    }

    pub fn set_objective(&mut self, var: usize, coef: f64) {
        self.objective[var] = coef;
    }

    pub fn objective_coef(&self, var: usize) -> f64 {
        self.objective[var]
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) {
        self.lower[var] = lower;
        self.upper[var] = upper;
    }

    pub fn bounds(&self, var: usize) -> (f64, f64) {
        (self.lower[var], self.upper[var])
    }

    pub fn add_row(&mut self, relation: Relation, rhs: f64, terms: &[(usize, f64)]) -> usize {
        let row = self.relations.len();
        self.relations.push(relation);
        self.rhs.push(rhs);
        for &(col, coef) in terms {
            self.entries.push((row, col, coef));
        }
        row
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        for (j, &c) in self.objective.iter().enumerate() {
            if !c.is_finite() {
                return Err(LpError::BadObjective(j));
            }
        }
        for (i, &b) in self.rhs.iter().enumerate() {
            if !b.is_finite() {
                return Err(LpError::BadRhs(i));
            }
        }
        for &(row, col, coef) in &self.entries {
            if col >= n {
                return Err(LpError::ColumnOutOfRange { row, col });
            }
            if !coef.is_finite() {
                return Err(LpError::NotFinite { row, col });
            }
        }
        for j in 0..n {
            if self.lower[j] > self.upper[j] || self.lower[j].is_nan() || self.upper[j].is_nan() {
                return Err(LpError::BadBounds(j));
            }
        }
        Ok(())
    }

    /// Line-oriented plain-text dump for debugging, loosely shaped like MPS.
    pub fn dump(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        let _ = writeln!(s, "SENSE {:?}", self.sense);
        let _ = writeln!(s, "VARS {}", self.num_vars());
        for (j, c) in self.objective.iter().enumerate() {
            if *c != 0.0 {
                let _ = writeln!(s, "OBJ x{j} {c}");
            }
        }
        for i in 0..self.num_rows() {
            let rel = match self.relations[i] {
                Relation::Le => "<=",
                Relation::Ge => ">=",
                Relation::Eq => "=",
            };
            let terms: Vec<String> = self
                .entries
                .iter()
                .filter(|e| e.0 == i)
                .map(|&(_, c, v)| format!("{v}*x{c}"))
                .collect();
            let _ = writeln!(s, "ROW r{i}: {} {rel} {}", terms.join(" + "), self.rhs[i]);
        }
        for j in 0..self.num_vars() {
            let _ = writeln!(s, "BOUND x{j} [{}, {}]", self.lower[j], self.upper[j]);
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Structural variable values; empty unless optimal.
    pub primal: Vec<f64>,
    /// One dual value per row; empty unless optimal.
    pub duals: Vec<f64>,
    /// Reduced cost per structural variable; empty unless optimal.
    pub reduced_costs: Vec<f64>,
    pub objective: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Loc {
    Basic(usize),
    AtLower,
    AtUpper,
    /// Free variable resting at zero.
    FreeAtZero,
}

struct Tableau {
    m: usize,
    total: usize,
    tab: Vec<f64>,
    basis: Vec<usize>,
    loc: Vec<Loc>,
    xval: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    dcost: Vec<f64>,
    degenerate_streak: usize,
}

enum LoopEnd {
    Optimal,
    Unbounded,
}

impl Tableau {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.tab[i * self.total + j]
    }

    fn reduced_costs_from(&mut self, costs: &[f64]) {
        let mut d = costs.to_vec();
        for i in 0..self.m {
            let cb = costs[self.basis[i]];
            if cb != 0.0 {
                let row = &self.tab[i * self.total..(i + 1) * self.total];
                for (dj, &a) in d.iter_mut().zip(row) {
                    *dj -= cb * a;
                }
            }
        }
        for i in 0..self.m {
            d[self.basis[i]] = 0.0;
        }
        self.dcost = d;
    }

    fn choose_entering(&self, bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None; // (var, sigma, |d|)
        for j in 0..self.total {
            let d = self.dcost[j];
            let sigma = match self.loc[j] {
                Loc::Basic(_) => continue,
                Loc::AtLower => {
                    if self.upper[j] - self.lower[j] <= PIVOT_TOL {
                        continue; // fixed
                    }
                    if d < -OPT_TOL {
                        1.0
                    } else {
                        continue;
                    }
                }
                Loc::AtUpper => {
                    if self.upper[j] - self.lower[j] <= PIVOT_TOL {
                        continue;
                    }
                    if d > OPT_TOL {
                        -1.0
                    } else {
                        continue;
                    }
                }
                Loc::FreeAtZero => {
                    if d < -OPT_TOL {
                        1.0
                    } else if d > OPT_TOL {
                        -1.0
                    } else {
                        continue;
                    }
                }
            };
            if bland {
                return Some((j, sigma));
            }
            if best.map_or(true, |(_, _, mag)| d.abs() > mag) {
                best = Some((j, sigma, d.abs()));
            }
        }
        best.map(|(j, sigma, _)| (j, sigma))
    }

    /// One simplex phase with the given costs already loaded into `dcost`.
    fn run(&mut self, max_iter: usize) -> Result<LoopEnd, LpError> {
        let mut bland = false;
        for _ in 0..max_iter {
            let Some((enter, sigma)) = self.choose_entering(bland) else {
                return Ok(LoopEnd::Optimal);
            };
            // Ratio test: how far the entering variable can move.
            let mut t = f64::INFINITY;
            let mut leave: Option<usize> = None;
            let range = self.upper[enter] - self.lower[enter];
            if range.is_finite() {
                t = range;
            }
            for i in 0..self.m {
                let a = self.at(i, enter);
                if a.abs() <= PIVOT_TOL {
                    continue;
                }
                let g = sigma * a;
                let b = self.basis[i];
                let cap = if g > 0.0 {
                    if self.lower[b].is_finite() {
                        ((self.xval[b] - self.lower[b]) / g).max(0.0)
                    } else {
                        continue;
                    }
                } else if self.upper[b].is_finite() {
                    ((self.xval[b] - self.upper[b]) / g).max(0.0)
                } else {
                    continue;
                };
                let better = cap < t - 1e-12
                    || (cap < t + 1e-12
                        && leave.map_or(false, |r| {
                            if bland {
                                b < self.basis[r]
                            } else {
                                a.abs() > self.at(r, enter).abs()
                            }
                        }));
                if better {
                    t = cap;
                    leave = Some(i);
                }
            }
            if t.is_infinite() {
                return Ok(LoopEnd::Unbounded);
            }
            if t <= PIVOT_TOL {
                self.degenerate_streak += 1;
                if self.degenerate_streak > DEGENERATE_STALL {
                    bland = true;
                }
            } else {
                self.degenerate_streak = 0;
            }
            // Move the entering variable and shift the basics.
            for i in 0..self.m {
                let a = self.at(i, enter);
                if a != 0.0 {
                    let b = self.basis[i];
                    self.xval[b] -= sigma * t * a;
                }
            }
            self.xval[enter] += sigma * t;
            match leave {
                None => {
                    // Bound flip, no basis change.
                    self.loc[enter] = if sigma > 0.0 { Loc::AtUpper } else { Loc::AtLower };
                    self.xval[enter] =
                        if sigma > 0.0 { self.upper[enter] } else { self.lower[enter] };
                }
                Some(r) => {
                    let out = self.basis[r];
                    // Snap the leaving variable onto the bound it hit.
                    let g = sigma * self.at(r, enter);
                    if g > 0.0 {
                        self.xval[out] = self.lower[out];
                        self.loc[out] = Loc::AtLower;
                    } else {
                        self.xval[out] = self.upper[out];
                        self.loc[out] = Loc::AtUpper;
                    }
                    self.pivot(r, enter);
                }
            }
        }
        Err(LpError::IterationLimit)
    }

    fn pivot(&mut self, row: usize, enter: usize) {
        let total = self.total;
        let piv = self.at(row, enter);
        let inv = 1.0 / piv;
        for v in &mut self.tab[row * total..(row + 1) * total] {
            *v *= inv;
        }
        for i in 0..self.m {
            if i == row {
                continue;
            }
            let f = self.at(i, enter);
            if f != 0.0 {
                for j in 0..total {
                    let upd = self.tab[row * total + j] * f;
                    self.tab[i * total + j] -= upd;
                }
            }
        }
        let f = self.dcost[enter];
        if f != 0.0 {
            for j in 0..total {
                self.dcost[j] -= self.tab[row * total + j] * f;
            }
        }
        self.basis[row] = enter;
        self.loc[enter] = Loc::Basic(row);
        self.dcost[enter] = 0.0;
    }
}

pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    lp.validate()?;
    let n = lp.num_vars();
    let m = lp.num_rows();
    let maximize = lp.sense == Sense::Maximize;
    // Internal orientation is always minimization.
    let min_obj: Vec<f64> =
        lp.objective.iter().map(|&c| if maximize { -c } else { c }).collect();

    // Starting values for structurals: the finite bound nearest zero.
    let start = |l: f64, u: f64| -> (f64, Loc) {
        if l.is_finite() {
            (l, Loc::AtLower)
        } else if u.is_finite() {
            (u, Loc::AtUpper)
        } else {
            (0.0, Loc::FreeAtZero)
        }
    };

    let mut lower = lp.lower.clone();
    let mut upper = lp.upper.clone();
    let mut xval = Vec::with_capacity(n + m);
    let mut loc = Vec::with_capacity(n + m);
    for j in 0..n {
        let (v, l) = start(lower[j], upper[j]);
        xval.push(v);
        loc.push(l);
    }
    // Logical variable per row: A x + s = b.
    for rel in &lp.relations {
        let (l, u, lc) = match rel {
            Relation::Le => (0.0, f64::INFINITY, Loc::AtLower),
            Relation::Ge => (f64::NEG_INFINITY, 0.0, Loc::AtUpper),
            Relation::Eq => (0.0, 0.0, Loc::AtLower),
        };
        lower.push(l);
        upper.push(u);
        xval.push(0.0);
        loc.push(lc);
    }

    // Equilibrate: divide each row by its largest coefficient so the pivot
    // tolerance means the same thing across rows of very different scales.
    // Duals are unscaled on the way out.
    let mut scale = vec![1.0f64; m];
    for &(row, _, coef) in &lp.entries {
        scale[row] = scale[row].max(coef.abs());
    }
    let scaled_rhs: Vec<f64> = lp.rhs.iter().zip(&scale).map(|(b, s)| b / s).collect();

    // Row activities at the starting point.
    let mut resid = scaled_rhs;
    for &(row, col, coef) in &lp.entries {
        resid[row] -= coef / scale[row] * xval[col];
    }
    let mut artificial_rows = Vec::new();
    for i in 0..m {
        let li = lower[n + i];
        let ui = upper[n + i];
        if resid[i] >= li - FEAS_TOL && resid[i] <= ui + FEAS_TOL {
            // Logical can carry the row.
        } else {
            artificial_rows.push(i);
        }
    }
    let n_art = artificial_rows.len();
    let total = n + m + n_art;

    let mut tab = vec![0.0; m * total];
    for &(row, col, coef) in &lp.entries {
        tab[row * total + col] += coef / scale[row];
    }
    for i in 0..m {
        tab[i * total + n + i] = 1.0;
    }
    let mut basis = Vec::with_capacity(m);
    let mut art_of_row = vec![usize::MAX; m];
    for (k, &i) in artificial_rows.iter().enumerate() {
        art_of_row[i] = n + m + k;
    }
    for i in 0..m {
        if art_of_row[i] == usize::MAX {
            basis.push(n + i);
            loc[n + i] = Loc::Basic(i);
            xval[n + i] = resid[i].clamp(lower[n + i], upper[n + i]);
        } else {
            let a = art_of_row[i];
            // Row scaled so the artificial enters the basis at +|resid|.
            if resid[i] < 0.0 {
                for v in &mut tab[i * total..(i + 1) * total] {
                    *v = -*v;
                }
            }
            tab[i * total + a] = 1.0;
            basis.push(a);
            lower.push(0.0);
            upper.push(f64::INFINITY);
            xval.push(resid[i].abs());
            loc.push(Loc::Basic(i));
        }
    }

    let mut t = Tableau {
        m,
        total,
        tab,
        basis,
        loc,
        xval,
        lower,
        upper,
        dcost: vec![0.0; total],
        degenerate_streak: 0,
    };
    let max_iter = 20_000 + 200 * (m + n);

    if n_art > 0 {
        let mut phase1 = vec![0.0; total];
        for k in 0..n_art {
            phase1[n + m + k] = 1.0;
        }
        t.reduced_costs_from(&phase1);
        match t.run(max_iter)? {
            LoopEnd::Optimal => {}
            // The phase-1 objective is bounded below by 0, so a ray can only
            // come from numerical breakdown.
            LoopEnd::Unbounded => return Err(LpError::Numerical),
        }
        let infeas: f64 = (0..n_art).map(|k| t.xval[n + m + k]).sum();
        if infeas > FEAS_TOL {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                primal: Vec::new(),
                duals: Vec::new(),
                reduced_costs: Vec::new(),
                objective: 0.0,
            });
        }
        for k in 0..n_art {
            t.upper[n + m + k] = 0.0;
        }
    }

    let mut phase2 = vec![0.0; total];
    phase2[..n].copy_from_slice(&min_obj);
    t.reduced_costs_from(&phase2);
    match t.run(max_iter)? {
        LoopEnd::Optimal => {}
        LoopEnd::Unbounded => {
            return Ok(LpSolution {
                status: LpStatus::Unbounded,
                primal: Vec::new(),
                duals: Vec::new(),
                reduced_costs: Vec::new(),
                objective: if maximize { f64::INFINITY } else { f64::NEG_INFINITY },
            });
        }
    }

    let primal: Vec<f64> = t.xval[..n].to_vec();
    let objective: f64 =
        primal.iter().zip(&lp.objective).map(|(x, c)| x * c).sum();
    let flip = if maximize { -1.0 } else { 1.0 };
    let duals: Vec<f64> = (0..m).map(|i| flip * -t.dcost[n + i] / scale[i]).collect();
    let reduced_costs: Vec<f64> = (0..n).map(|j| flip * t.dcost[j]).collect();
    Ok(LpSolution { status: LpStatus::Optimal, primal, duals, reduced_costs, objective })
}
