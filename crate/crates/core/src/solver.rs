//! Finite-difference solver for `Delta_X u = w`, `Delta_X w = V u + F` under
//! bi-radial symmetry, on a uniform grid over `[0, S] x [0, T]` in `(s, t)`.

use std::sync::Arc;

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Par};
use serde::Serialize;

use crate::error::{input, Error, Result};
use crate::fields::{AnalyticField, FieldMeta, FieldRef, GridField, GridSpec, ProfileField, RadialData};
use crate::frequency::Potential;
use crate::geometry::{gauge_st, Jet, Point, SpaceParams};
use crate::taylor::Series2;

pub const MIN_NODES: usize = 16;
pub const RESIDUAL_TARGET: f64 = 1e-10;
const MAX_REFINEMENTS: usize = 4;

/// Reduced operator `L u = u_ss + (m-1)/s u_s + s^{2 alpha} (u_tt + (n-1)/t u_t)`
/// on the grid, with limits `m u_ss` at `s = 0` and `n s^{2 alpha} u_tt` at `t = 0`
/// (even reflection). Rows exist for every node off the outer edges.
#[derive(Clone, Debug)]
pub struct BiradialOperator {
    grid: GridSpec,
    sp: SpaceParams,
    /// Per row: node index and `(column, coefficient)` pairs.
    rows: Vec<(usize, Vec<(usize, f64)>)>,
}

impl BiradialOperator {
    pub fn assemble(grid: GridSpec, sp: &SpaceParams) -> Result<Self> {
        grid.validate()?;
        if grid.ns < MIN_NODES || grid.nt < MIN_NODES {
            return input(format!("solver grids need at least {MIN_NODES} nodes per direction"));
        }
        let (h, k) = (grid.hs(), grid.ht());
        let (m, n) = (sp.m() as f64, sp.n() as f64);
        let mut rows = Vec::with_capacity((grid.ns - 1) * (grid.nt - 1));
        for i in 0..grid.ns - 1 {
            let s = grid.s(i);
            let w = s.powf(2.0 * sp.alpha());
            for j in 0..grid.nt - 1 {
                let t = grid.t(j);
                let mut st = Vec::with_capacity(5);
                let me = grid.index(i, j);
                if i == 0 {
                    st.push((me, -2.0 * m / (h * h)));
                    st.push((grid.index(1, j), 2.0 * m / (h * h)));
                    rows.push((me, st));
                    continue;
                }
                let c = (m - 1.0) / (2.0 * h * s);
                st.push((grid.index(i - 1, j), 1.0 / (h * h) - c));
                st.push((grid.index(i + 1, j), 1.0 / (h * h) + c));
                if j == 0 {
                    st.push((me, -2.0 / (h * h) - 2.0 * n * w / (k * k)));
                    st.push((grid.index(i, 1), 2.0 * n * w / (k * k)));
                } else {
                    let d = (n - 1.0) / (2.0 * k * t);
                    st.push((me, -2.0 / (h * h) - 2.0 * w / (k * k)));
                    st.push((grid.index(i, j - 1), w * (1.0 / (k * k) - d)));
                    st.push((grid.index(i, j + 1), w * (1.0 / (k * k) + d)));
                }
                rows.push((me, st));
            }
        }
        Ok(BiradialOperator { grid, sp: *sp, rows })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn space(&self) -> &SpaceParams {
        &self.sp
    }

    pub fn is_outer(&self, i: usize, j: usize) -> bool {
        i + 1 == self.grid.ns || j + 1 == self.grid.nt
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(|r| r.1.len()).sum()
    }

    /// `L u` at every node; outer-edge entries are `NaN`.
    pub fn apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.grid.len() {
            return input(format!("expected {} grid values, got {}", self.grid.len(), u.len()));
        }
        let mut out = vec![f64::NAN; u.len()];
        for (node, st) in &self.rows {
            out[*node] = st.iter().map(|(c, v)| v * u[*c]).sum();
        }
        Ok(out)
    }
}

pub type SourceFn = dyn Fn(f64, f64, &SpaceParams) -> Result<f64> + Send + Sync;

/// Boundary value problem on the grid rectangle. Dirichlet data are read from
/// `u_data` and `w_data` on the outer edges and inside the excised region.
#[derive(Clone)]
pub struct BvpSpec {
    pub grid: GridSpec,
    pub u_data: FieldRef,
    pub w_data: FieldRef,
    pub potential: Arc<dyn Potential>,
    pub source: Option<Arc<SourceFn>>,
    /// Nodes with `rho < excision` are fixed to the data.
    pub excision: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveReport {
    pub unknowns: usize,
    pub nnz: usize,
    pub residual: f64,
    pub refinements: usize,
    pub excised_nodes: usize,
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub u: GridField,
    pub w: GridField,
    pub report: SolveReport,
}

/// Solves the coupled system `[L, -I; -V, L] (u, w) = (0, F)` by sparse LU
/// with iterative refinement, to a relative residual below `RESIDUAL_TARGET`.
pub fn solve(spec: &BvpSpec, op: &BiradialOperator) -> Result<Solution> {
    solve_with_target(spec, op, RESIDUAL_TARGET)
}

pub fn solve_with_target(spec: &BvpSpec, op: &BiradialOperator, target: f64) -> Result<Solution> {
    if !(target > 0.0) {
        return input("residual target must be positive");
    }
    if spec.grid != op.grid {
        return input("operator and problem use different grids");
    }
    let sp = op.sp;
    let grid = op.grid;
    let len = grid.len();
    let mut fixed = vec![false; len];
    let mut excised_nodes = 0;
    for i in 0..grid.ns {
        for j in 0..grid.nt {
            let idx = grid.index(i, j);
            if op.is_outer(i, j) {
                fixed[idx] = true;
            } else if let Some(r) = spec.excision {
                if gauge_st(grid.s(i), grid.t(j), &sp) < r {
                    fixed[idx] = true;
                    excised_nodes += 1;
                }
            }
        }
    }
    let mut u_val = vec![0.0; len];
    let mut w_val = vec![0.0; len];
    let mut slot = vec![usize::MAX; len];
    let mut free = Vec::new();
    for i in 0..grid.ns {
        for j in 0..grid.nt {
            let idx = grid.index(i, j);
            if fixed[idx] {
                u_val[idx] = spec.u_data.value_st(grid.s(i), grid.t(j), &sp)?;
                w_val[idx] = spec.w_data.value_st(grid.s(i), grid.t(j), &sp)?;
                if !(u_val[idx].is_finite() && w_val[idx].is_finite()) {
                    return input(format!("boundary data not finite at (s, t) = ({}, {})", grid.s(i), grid.t(j)));
                }
            } else {
                slot[idx] = free.len();
                free.push((i, j));
            }
        }
    }
    let n_free = free.len();
    if n_free == 0 {
        return input("no free nodes left after excision");
    }
    let stencil: std::collections::HashMap<usize, &Vec<(usize, f64)>> = op.rows.iter().map(|(k, st)| (*k, st)).collect();
    let mut entries: Vec<(usize, usize, f64)> = Vec::with_capacity(2 * op.nnz() + 2 * n_free);
    let mut rhs = vec![0.0; 2 * n_free];
    for (f, &(i, j)) in free.iter().enumerate() {
        let idx = grid.index(i, j);
        let (s, t) = (grid.s(i), grid.t(j));
        let v = spec
            .potential
            .eval(s, t, &sp)
            .map_err(|_| Error::Input(format!("potential is singular at (s, t) = ({s}, {t}); regularize or excise")))?;
        if !v.is_finite() {
            return input(format!("potential is not finite at (s, t) = ({s}, {t})"));
        }
        let src = match &spec.source {
            Some(fun) => fun(s, t, &sp)?,
            None => 0.0,
        };
        let (ru, rw) = (2 * f, 2 * f + 1);
        rhs[rw] = src;
        for &(c, coef) in stencil[&idx].iter() {
            if fixed[c] {
                rhs[ru] -= coef * u_val[c];
                rhs[rw] -= coef * w_val[c];
            } else {
                entries.push((ru, 2 * slot[c], coef));
                entries.push((rw, 2 * slot[c] + 1, coef));
            }
        }
        entries.push((ru, rw, -1.0));
        entries.push((rw, ru, -v));
    }
    let csr = merge(entries, 2 * n_free);
    faer::set_global_parallelism(Par::Seq);
    let triplets: Vec<Triplet<usize, usize, f64>> =
        csr.iter().enumerate().flat_map(|(r, row)| row.iter().map(move |&(c, v)| Triplet { row: r, col: c, val: v })).collect();
    let mat = SparseColMat::<usize, f64>::try_new_from_triplets(2 * n_free, 2 * n_free, &triplets)
        .map_err(|e| Error::SingularSystem(format!("assembly failed: {e:?}")))?;
    let lu = mat.sp_lu().map_err(|e| Error::SingularSystem(format!("sparse LU failed: {e:?}")))?;
    let b_norm = norm(&rhs);
    let mut x = vec![0.0; 2 * n_free];
    let mut r = rhs.clone();
    let mut refinements = 0;
    let mut residual = if b_norm == 0.0 { 0.0 } else { 1.0 };
    for pass in 0..=MAX_REFINEMENTS {
        if residual < target * 1e-2 {
            break;
        }
        let mut rm = Mat::from_fn(2 * n_free, 1, |i, _| r[i]);
        lu.solve_in_place(rm.as_mut());
        for (k, xv) in x.iter_mut().enumerate() {
            *xv += rm[(k, 0)];
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularSystem("non-finite values in the LU solution".into()));
        }
        r = residual_vec(&csr, &x, &rhs);
        residual = norm(&r) / b_norm;
        refinements = pass;
    }
    if residual >= target {
        return Err(Error::SolveFailure { residual, target });
    }
    for (f, &(i, j)) in free.iter().enumerate() {
        let idx = grid.index(i, j);
        u_val[idx] = x[2 * f];
        w_val[idx] = x[2 * f + 1];
    }
    Ok(Solution {
        u: GridField::new(grid, u_val)?,
        w: GridField::new(grid, w_val)?,
        report: SolveReport { unknowns: 2 * n_free, nnz: triplets.len(), residual, refinements, excised_nodes },
    })
}

fn merge(mut entries: Vec<(usize, usize, f64)>, n: usize) -> Vec<Vec<(usize, f64)>> {
    entries.sort_by_key(|e| (e.0, e.1));
    let mut rows = vec![Vec::new(); n];
    for (r, c, v) in entries {
        match rows[r].last_mut() {
            Some((lc, lv)) if *lc == c => *lv += v,
            _ => rows[r].push((c, v)),
        }
    }
    rows
}

fn residual_vec(rows: &[Vec<(usize, f64)>], x: &[f64], b: &[f64]) -> Vec<f64> {
    rows.iter().zip(b).map(|(row, bv)| bv - row.iter().map(|(c, v)| v * x[*c]).sum::<f64>()).collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Manufactured solution `u* = exp(-S) + S^2 exp(-T)` with `S = s^2`, `T = t^2`.
pub fn manufactured_field() -> FieldRef {
    Arc::new(
        ProfileField::new(
            FieldMeta::new("mms"),
            Arc::new(|s: &Series2, t: &Series2, _sp: &SpaceParams| (-*s).exp() + *s * *s * (-*t).exp()),
        )
        .with_exact_laplacian(Arc::new(|s, t, sp| manufactured_laplacian(s * s, t * t, sp))),
    )
}

/// Closed form of `Delta_X u*` in `(S, T)`.
fn manufactured_laplacian(s: f64, t: f64, sp: &SpaceParams) -> f64 {
    let (m, n, al) = (sp.m() as f64, sp.n() as f64, sp.alpha());
    let e = (-t).exp();
    (4.0 * s - 2.0 * m) * (-s).exp() + (4.0 * m + 8.0) * s * e + s.powf(al + 2.0) * (4.0 * t - 2.0 * n) * e
}

/// Closed form of `Delta_X^2 u*` in `(S, T)`.
fn manufactured_bilaplacian(s: f64, t: f64, sp: &SpaceParams) -> f64 {
    let (m, n, al) = (sp.m() as f64, sp.n() as f64, sp.alpha());
    let (es, et) = ((-s).exp(), (-t).exp());
    let h1 = (4.0 + 2.0 * m - 4.0 * s) * es;
    let h2 = (4.0 * s - 8.0 - 2.0 * m) * es;
    let first = 2.0 * m * h1 + 4.0 * s * h2;
    let second = (4.0 * m + 8.0) * (2.0 * m * et + s.powf(al + 1.0) * (4.0 * t - 2.0 * n) * et);
    let b = al + 2.0;
    let q = (4.0 * t - 2.0 * n) * et;
    let q1 = (4.0 + 2.0 * n - 4.0 * t) * et;
    let q2 = (4.0 * t - 8.0 - 2.0 * n) * et;
    let third = b * (2.0 * m + 4.0 * (b - 1.0)) * s.powf(b - 1.0) * q + s.powf(al + b) * (2.0 * n * q1 + 4.0 * t * q2);
    first + second + third
}

/// Problem whose exact solution is `(u*, Delta_X u*)` for the given potential.
pub fn manufactured_problem(grid: GridSpec, potential: Arc<dyn Potential>) -> BvpSpec {
    let u = manufactured_field();
    let w: FieldRef = Arc::new(ProfileField::new(
        FieldMeta::new("lap(mms)"),
        Arc::new(|s: &Series2, t: &Series2, sp: &SpaceParams| {
            let (m, n) = (sp.m() as f64, sp.n() as f64);
            let e = (-*t).exp();
            (s.scale(4.0).add_scalar(-2.0 * m)) * (-*s).exp()
                + (*s * e).scale(4.0 * m + 8.0)
                + s.powf(sp.alpha() + 2.0) * t.scale(4.0).add_scalar(-2.0 * n) * e
        }),
    ));
    let pc = potential.clone();
    let source: Arc<SourceFn> = Arc::new(move |s, t, sp| {
        let (ss, tt) = (s * s, t * t);
        let u = (-ss).exp() + ss * ss * (-tt).exp();
        Ok(manufactured_bilaplacian(ss, tt, sp) - pc.eval(s, t, sp)? * u)
    });
    BvpSpec { grid, u_data: u, w_data: w, potential, source: Some(source), excision: None }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridError {
    pub nodes: usize,
    pub h: f64,
    pub l2: f64,
    pub max: f64,
    pub residual: f64,
}

/// Discrete `L^2(ds dt)` and max errors of `u` against the manufactured solution.
pub fn manufactured_error(sol: &Solution, sp: &SpaceParams) -> Result<GridError> {
    let u = manufactured_field();
    let g = sol.u.spec;
    let (mut l2, mut mx) = (0.0, 0.0f64);
    for i in 0..g.ns {
        for j in 0..g.nt {
            let e = sol.u.at(i, j) - u.value_st(g.s(i), g.t(j), sp)?;
            l2 += e * e;
            mx = mx.max(e.abs());
        }
    }
    Ok(GridError { nodes: g.ns, h: g.hs(), l2: (l2 * g.hs() * g.ht()).sqrt(), max: mx, residual: sol.report.residual })
}

/// Observed orders `log2(e_k / e_{k+1})` of successive errors.
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

/// Tensor cubic spline through grid values, even in `s` and in `t` at the axes
/// and not-a-knot at the outer edges. Stores nodal values and the second
/// derivatives `u_ss`, `u_tt`, `u_sstt`.
#[derive(Clone, Debug)]
pub struct LiftedField {
    meta: FieldMeta,
    spec: GridSpec,
    y: Vec<f64>,
    mss: Vec<f64>,
    mtt: Vec<f64>,
    msstt: Vec<f64>,
}

fn spline_system(n: usize, h: f64) -> faer::linalg::solvers::PartialPivLu<f64> {
    let mut k = Mat::<f64>::zeros(n, n);
    k[(0, 0)] = 4.0 * h / 6.0;
    k[(0, 1)] = 2.0 * h / 6.0;
    for i in 1..n - 1 {
        k[(i, i - 1)] = h / 6.0;
        k[(i, i)] = 4.0 * h / 6.0;
        k[(i, i + 1)] = h / 6.0;
    }
    k[(n - 1, n - 3)] = 1.0;
    k[(n - 1, n - 2)] = -2.0;
    k[(n - 1, n - 1)] = 1.0;
    k.partial_piv_lu()
}

/// Second derivatives along the first index of `vals` (shape `n x lines`).
fn second_derivs(lu: &faer::linalg::solvers::PartialPivLu<f64>, n: usize, lines: usize, h: f64, val: impl Fn(usize, usize) -> f64) -> Mat<f64> {
    let mut rhs = Mat::<f64>::zeros(n, lines);
    for l in 0..lines {
        rhs[(0, l)] = 2.0 * (val(1, l) - val(0, l)) / h;
        for i in 1..n - 1 {
            rhs[(i, l)] = (val(i + 1, l) - 2.0 * val(i, l) + val(i - 1, l)) / h;
        }
    }
    lu.solve_in_place(rhs.as_mut());
    rhs
}

/// Cell index and basis weights `[value, d1, d2]` for `(y_i, y_{i+1}, M_i, M_{i+1})`.
fn basis(x: f64, h: f64, n: usize) -> (usize, [[f64; 4]; 3]) {
    let i = ((x / h).floor() as usize).min(n - 2);
    let a = ((i + 1) as f64 * h - x) / h;
    let b = 1.0 - a;
    let h2 = h * h / 6.0;
    (
        i,
        [
            [a, b, (a * a * a - a) * h2, (b * b * b - b) * h2],
            [-1.0 / h, 1.0 / h, -(3.0 * a * a - 1.0) * h / 6.0, (3.0 * b * b - 1.0) * h / 6.0],
            [0.0, 0.0, a, b],
        ],
    )
}

impl LiftedField {
    pub fn new(name: impl Into<String>, gf: &GridField) -> Result<Self> {
        let spec = gf.spec;
        if spec.ns < 4 || spec.nt < 4 {
            return input("spline lift needs at least 4 nodes per direction");
        }
        let (ns, nt) = (spec.ns, spec.nt);
        let (hs, ht) = (spec.hs(), spec.ht());
        let ls = spline_system(ns, hs);
        let lt = spline_system(nt, ht);
        let at = |i: usize, j: usize| gf.values[spec.index(i, j)];
        let mss_m = second_derivs(&ls, ns, nt, hs, at);
        let mtt_m = second_derivs(&lt, nt, ns, ht, |j, i| at(i, j));
        let msstt_m = second_derivs(&lt, nt, ns, ht, |j, i| mss_m[(i, j)]);
        let mut mss = vec![0.0; spec.len()];
        let mut mtt = vec![0.0; spec.len()];
        let mut msstt = vec![0.0; spec.len()];
        for i in 0..ns {
            for j in 0..nt {
                let k = spec.index(i, j);
                mss[k] = mss_m[(i, j)];
                mtt[k] = mtt_m[(j, i)];
                msstt[k] = msstt_m[(j, i)];
            }
        }
        let mut meta = FieldMeta::new(name);
        meta.smoothness = crate::fields::Smoothness::C(2);
        Ok(LiftedField { meta, spec, y: gf.values.clone(), mss, mtt, msstt })
    }

    /// `d^a/ds^a d^b/dt^b` of the interpolant for `a, b <= 2`.
    pub fn derivative(&self, s: f64, t: f64, a: usize, b: usize) -> Result<f64> {
        let sp = &self.spec;
        if !(s >= 0.0 && t >= 0.0 && s <= sp.s_max * (1.0 + 1e-12) && t <= sp.t_max * (1.0 + 1e-12)) {
            return Err(Error::OutOfDomain { s, t });
        }
        let (i, ws) = basis(s.min(sp.s_max), sp.hs(), sp.ns);
        let (j, wt) = basis(t.min(sp.t_max), sp.ht(), sp.nt);
        let mut v = 0.0;
        for p in 0..2 {
            for q in 0..2 {
                let k = sp.index(i + p, j + q);
                v += ws[a][p] * wt[b][q] * self.y[k]
                    + ws[a][p] * wt[b][2 + q] * self.mtt[k]
                    + ws[a][2 + p] * wt[b][q] * self.mss[k]
                    + ws[a][2 + p] * wt[b][2 + q] * self.msstt[k];
            }
        }
        Ok(v)
    }

    pub fn value_of(&self, s: f64, t: f64) -> Result<f64> {
        self.derivative(s, t, 0, 0)
    }

    /// Reduced `Delta_X` of the interpolant, with axis limits.
    pub fn laplacian_st(&self, s: f64, t: f64, sp: &SpaceParams) -> Result<f64> {
        let (m, n) = (sp.m() as f64, sp.n() as f64);
        let uss = self.derivative(s, t, 2, 0)?;
        let x_part = if s > 0.0 { uss + (m - 1.0) / s * self.derivative(s, t, 1, 0)? } else { m * uss };
        if s == 0.0 {
            return Ok(x_part);
        }
        let utt = self.derivative(s, t, 0, 2)?;
        let y_part = if t > 0.0 { utt + (n - 1.0) / t * self.derivative(s, t, 0, 1)? } else { n * utt };
        Ok(x_part + s.powf(2.0 * sp.alpha()) * y_part)
    }
}

impl AnalyticField for LiftedField {
    fn meta(&self) -> &FieldMeta {
        &self.meta
    }

    /// Level 1 derivatives are central differences of the interpolated Laplacian.
    fn radial(&self, s: f64, t: f64, sp: &SpaceParams, depth: usize) -> Result<RadialData> {
        if depth > 1 {
            return input("spline lift supports Laplacian depth at most 1");
        }
        let mut levels = vec![[self.derivative(s, t, 0, 0)?, self.derivative(s, t, 1, 0)?, self.derivative(s, t, 0, 1)?]];
        if depth == 1 {
            let lap = self.laplacian_st(s, t, sp)?;
            let d = |x: f64, hx: f64, xmax: f64, f: &dyn Fn(f64) -> Result<f64>| -> Result<f64> {
                if x == 0.0 {
                    return Ok(0.0);
                }
                let (lo, hi) = ((x - hx).max(0.0), (x + hx).min(xmax));
                Ok((f(hi)? - f(lo)?) / (hi - lo))
            };
            let hs = 1e-4 * self.spec.hs();
            let ht = 1e-4 * self.spec.ht();
            let ls = d(s, hs, self.spec.s_max, &|x| self.laplacian_st(x, t, sp))?;
            let lt = d(t, ht, self.spec.t_max, &|x| self.laplacian_st(s, x, sp))?;
            levels.push([lap, ls, lt]);
        }
        Ok(RadialData { levels })
    }

    fn value_st(&self, s: f64, t: f64, _sp: &SpaceParams) -> Result<f64> {
        self.derivative(s, t, 0, 0)
    }

    fn laplacian_st(&self, s: f64, t: f64, sp: &SpaceParams) -> Result<f64> {
        LiftedField::laplacian_st(self, s, t, sp)
    }

    fn jet(&self, p: &Point, sp: &SpaceParams, order: usize) -> Result<Jet> {
        if order > 2 {
            return input("spline lift provides jets up to order 2");
        }
        let z = p.flat();
        let d = z.len();
        let (s, t) = (p.s(), p.t());
        let blk = |k: usize| k >= sp.m();
        let r = |k: usize| if blk(k) { t } else { s };
        let us = self.derivative(s, t, 1, 0)?;
        let ut = self.derivative(s, t, 0, 1)?;
        // first radial derivative and the (u_r / r) limit per block
        let g1 = |k: usize| if blk(k) { ut } else { us };
        let grad = (0..d).map(|k| if r(k) > 0.0 { g1(k) * z[k] / r(k) } else { 0.0 }).collect();
        let mut hess = vec![0.0; d * d];
        if order == 2 {
            let uss = self.derivative(s, t, 2, 0)?;
            let utt = self.derivative(s, t, 0, 2)?;
            let ust = self.derivative(s, t, 1, 1)?;
            for a in 0..d {
                for b in 0..d {
                    let (ra, rb) = (r(a), r(b));
                    let (ea, eb) = (if ra > 0.0 { z[a] / ra } else { 0.0 }, if rb > 0.0 { z[b] / rb } else { 0.0 });
                    let v = match (blk(a), blk(b)) {
                        (false, false) => {
                            let over = if s > 0.0 { us / s } else { uss };
                            uss * ea * eb + over * ((a == b) as u8 as f64 - ea * eb)
                        }
                        (true, true) => {
                            let over = if t > 0.0 { ut / t } else { utt };
                            utt * ea * eb + over * ((a == b) as u8 as f64 - ea * eb)
                        }
                        _ => ust * ea * eb,
                    };
                    hess[a * d + b] = v;
                }
            }
            // at the axis the direction is undefined; the even spline gives u_ss I there
            if s == 0.0 {
                for a in 0..sp.m() {
                    for b in 0..sp.m() {
                        hess[a * d + b] = if a == b { uss } else { 0.0 };
                    }
                }
            }
            if t == 0.0 {
                for a in sp.m()..d {
                    for b in sp.m()..d {
                        hess[a * d + b] = if a == b { utt } else { 0.0 };
                    }
                }
            }
        }
        Ok(Jet { value: self.derivative(s, t, 0, 0)?, grad, hess, third: None })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::by_name;
    use crate::fields::sample_to_grid;
    use crate::frequency::{InverseQuartic, ZeroPotential};
    use crate::geometry::laplace_x;

    fn sp() -> SpaceParams {
        SpaceParams::new(5, 1, 1.0).unwrap()
    }

    #[test]
    fn constant_is_in_kernel() {
        let g = GridSpec::new(1.0, 1.0, 17, 19).unwrap();
        let op = BiradialOperator::assemble(g, &sp()).unwrap();
        let lu = op.apply(&vec![3.0; g.len()]).unwrap();
        for i in 0..g.ns - 1 {
            for j in 0..g.nt - 1 {
                assert!(lu[g.index(i, j)].abs() < 1e-9);
            }
        }
    }

    #[test]
    fn quadratic_in_s_is_exact() {
        // L[s^2] = 2 + 2 (m - 1) = 2 m everywhere, including the axes
        let g = GridSpec::new(1.0, 1.0, 17, 17).unwrap();
        let op = BiradialOperator::assemble(g, &sp()).unwrap();
        let u: Vec<f64> = (0..g.len()).map(|k| g.s(k / g.nt).powi(2)).collect();
        let lu = op.apply(&u).unwrap();
        for i in 0..g.ns - 1 {
            for j in 0..g.nt - 1 {
                assert!((lu[g.index(i, j)] - 10.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn rejects_small_grids() {
        let g = GridSpec::new(1.0, 1.0, 8, 32).unwrap();
        assert!(matches!(BiradialOperator::assemble(g, &sp()), Err(Error::Input(_))));
    }

    #[test]
    fn trivial_problem_recovers_constant() {
        let g = GridSpec::new(1.0, 1.0, 33, 33).unwrap();
        let op = BiradialOperator::assemble(g, &sp()).unwrap();
        let spec = BvpSpec {
            grid: g,
            u_data: by_name("one", 1.0).unwrap(),
            w_data: by_name("zero", 1.0).unwrap(),
            potential: Arc::new(ZeroPotential),
            source: None,
            excision: None,
        };
        let sol = solve(&spec, &op).unwrap();
        assert!(sol.report.residual < 1e-10);
        assert!(sol.u.values.iter().all(|v| (v - 1.0).abs() < 1e-10));
        assert!(sol.w.values.iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn singular_potential_needs_regularization() {
        let g = GridSpec::new(1.0, 1.0, 17, 17).unwrap();
        let op = BiradialOperator::assemble(g, &sp()).unwrap();
        let spec = manufactured_problem(g, Arc::new(InverseQuartic { c0: 1.0, eps: 0.0 }));
        assert!(matches!(solve(&spec, &op), Err(Error::Input(_))));
        let spec = BvpSpec { excision: Some(0.05), ..spec };
        assert!(solve(&spec, &op).is_ok());
    }

    #[test]
    fn manufactured_closed_forms_match_series() {
        let u = manufactured_field();
        for alpha in [0.5, 1.0] {
            let sp = SpaceParams::new(5, 1, alpha).unwrap();
            for (s, t) in [(0.3, 0.2), (0.9, 0.7), (0.05, 1.0)] {
                let r = u.radial(s, t, &sp, 2).unwrap();
                let (ss, tt) = (s * s, t * t);
                assert!((r.levels[1][0] - manufactured_laplacian(ss, tt, &sp)).abs() < 1e-11);
                assert!((r.levels[2][0] - manufactured_bilaplacian(ss, tt, &sp)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn spline_reproduces_nodes_and_cubics() {
        let s2 = SpaceParams::new(3, 2, 0.5).unwrap();
        let g = GridSpec::new(1.0, 0.8, 12, 9).unwrap();
        let f = by_name("s2t2", 1.0).unwrap();
        let gf = sample_to_grid(f.as_ref(), g, &s2).unwrap();
        let lf = LiftedField::new("s2t2", &gf).unwrap();
        for i in 0..g.ns {
            for j in 0..g.nt {
                assert!((lf.derivative(g.s(i), g.t(j), 0, 0).unwrap() - gf.at(i, j)).abs() < 1e-13);
            }
        }
        // s^2 t^2 is even and bicubic, so the spline is exact
        let (s, t) = (0.37, 0.51);
        assert!((lf.derivative(s, t, 0, 0).unwrap() - s * s * t * t).abs() < 1e-12);
        assert!((lf.derivative(s, t, 1, 1).unwrap() - 4.0 * s * t).abs() < 1e-10);
        assert!(matches!(lf.derivative(1.2, 0.1, 0, 0), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn lifted_jet_matches_reduced_laplacian() {
        let sp = sp();
        let g = GridSpec::new(1.0, 1.0, 41, 41).unwrap();
        let f = by_name("gauss", 1.0).unwrap();
        let lf = LiftedField::new("gauss", &sample_to_grid(f.as_ref(), g, &sp).unwrap()).unwrap();
        let p = Point::new(vec![0.3, -0.1, 0.2, 0.1, 0.05], vec![0.4]);
        let jet = lf.jet(&p, &sp, 2).unwrap();
        let lap = laplace_x(&jet, &p, &sp);
        let red = lf.laplacian_st(p.s(), p.t(), &sp).unwrap();
        assert!((lap - red).abs() < 1e-10 * (1.0 + red.abs()));
    }
}
