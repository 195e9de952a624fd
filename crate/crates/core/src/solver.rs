//! Multiple solutions of `(|v'|^{p-2} v')' + q f(v) = 0`, `v(0) = v(1) = 0`.
//!
//! Shooting integrates the first-order system `v' = φ_p⁻¹(w)`,
//! `w' = -q(t) f(v)` from `(0, φ_p(s))` with classical RK4; sign changes of
//! `s ↦ v(1; s)` are bracketed on a slope grid and bisected. Roots are
//! interpolated onto the finite-element mesh, optionally polished by energy
//! descent, and deduplicated.

use serde::{Deserialize, Serialize};

use crate::coordinates::{CoordinateMap, Profile, WeightFunction};
use crate::discretization::{norm_p, sup_distance, sup_norm, EnergyBreakdown, FEFunction, Functional, Mesh};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::nonlinearity::Nonlinearity;

/// `φ_p(s) = |s|^{p-2} s`.
#[inline]
pub fn phi_p(s: f64, p: f64) -> f64 {
    if s == 0.0 {
        0.0
    } else {
        s.abs().powf(p - 2.0) * s
    }
}

/// Inverse of [`phi_p`]: `|w|^{1/(p-1) - 1} w`.
#[inline]
pub fn phi_p_inv(w: f64, p: f64) -> f64 {
    if w == 0.0 {
        0.0
    } else {
        w.abs().powf(1.0 / (p - 1.0) - 1.0) * w
    }
}

pub const MIN_STEPS: usize = 64;

/// The two-point problem on `(0, 1)`.
#[derive(Clone, Debug)]
pub struct TwoPointProblem {
    pub p: f64,
    pub weight: WeightFunction,
    pub nl: Nonlinearity,
}

impl TwoPointProblem {
    pub fn new(p: f64, weight: WeightFunction, nl: Nonlinearity) -> Result<Self> {
        if !(p > 1.0) {
            return Err(Error::InvalidParameter(format!("p must exceed 1, got {p}")));
        }
        Ok(TwoPointProblem { p, weight, nl })
    }

    pub fn from_map(map: &CoordinateMap, nl: Nonlinearity) -> Self {
        TwoPointProblem {
            p: map.p(),
            weight: map.weight(),
            nl,
        }
    }

    pub fn functional(&self) -> Functional<'_> {
        Functional::new(self.p, &self.weight, &self.nl)
    }

    /// `10³ · max(b_K, 1)`, or `10³` without sequences.
    pub fn default_divergence_bound(&self) -> f64 {
        let top = self
            .nl
            .sequences()
            .map(|s| s.b.iter().copied().fold(1.0, f64::max))
            .unwrap_or(1.0);
        1e3 * top
    }

    #[inline]
    fn rhs(&self, t: f64, v: f64, w: f64) -> (f64, f64) {
        (phi_p_inv(w, self.p), -self.weight.eval(t) * self.nl.value(v))
    }

    #[inline]
    fn rk4_step(&self, t: f64, h: f64, v: f64, w: f64) -> (f64, f64) {
        let (k1v, k1w) = self.rhs(t, v, w);
        let (k2v, k2w) = self.rhs(t + 0.5 * h, v + 0.5 * h * k1v, w + 0.5 * h * k1w);
        let (k3v, k3w) = self.rhs(t + 0.5 * h, v + 0.5 * h * k2v, w + 0.5 * h * k2w);
        let (k4v, k4w) = self.rhs(t + h, v + h * k3v, w + h * k3w);
        (
            v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v),
            w + h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w),
        )
    }

    /// Integrates from `v(0) = 0`, `v'(0) = slope` and keeps the trajectory.
    pub fn shoot(&self, slope: f64, n_steps: usize, bound: f64) -> Result<ShootingTrajectory> {
        check_steps(n_steps)?;
        let h = 1.0 / n_steps as f64;
        let mut t = Vec::with_capacity(n_steps + 1);
        let mut v = Vec::with_capacity(n_steps + 1);
        let mut w = Vec::with_capacity(n_steps + 1);
        let (mut vi, mut wi) = (0.0, phi_p(slope, self.p));
        t.push(0.0);
        v.push(vi);
        w.push(wi);
        let mut diverged_at = None;
        for i in 0..n_steps {
            (vi, wi) = self.rk4_step(i as f64 * h, h, vi, wi);
            let ti = if i + 1 == n_steps { 1.0 } else { (i + 1) as f64 * h };
            if escaped(vi, wi, bound) {
                diverged_at = Some(ti);
                break;
            }
            t.push(ti);
            v.push(vi);
            w.push(wi);
        }
        Ok(ShootingTrajectory {
            t,
            v,
            w,
            p: self.p,
            diverged_at,
        })
    }

    /// Terminal value `v(1; slope)` without storing the trajectory.
    pub fn terminal(&self, slope: f64, n_steps: usize, bound: f64) -> Result<Shot> {
        check_steps(n_steps)?;
        let h = 1.0 / n_steps as f64;
        let (mut v, mut w) = (0.0, phi_p(slope, self.p));
        for i in 0..n_steps {
            (v, w) = self.rk4_step(i as f64 * h, h, v, w);
            if escaped(v, w, bound) {
                return Ok(Shot::Diverged {
                    t: (i + 1) as f64 * h,
                });
            }
        }
        Ok(Shot::Landed(v))
    }
}

fn check_steps(n_steps: usize) -> Result<()> {
    if n_steps < MIN_STEPS {
        return Err(Error::InvalidParameter(format!(
            "shooting needs at least {MIN_STEPS} steps, got {n_steps}"
        )));
    }
    Ok(())
}

#[inline]
fn escaped(v: f64, w: f64, bound: f64) -> bool {
    !(v.abs() <= bound && w.abs() <= bound)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Shot {
    Landed(f64),
    Diverged { t: f64 },
}

impl Shot {
    pub fn landed(self) -> Option<f64> {
        match self {
            Shot::Landed(v) => Some(v),
            Shot::Diverged { .. } => None,
        }
    }
}

/// RK4 samples of `(v, w)` on a uniform grid of `[0, 1]`.
#[derive(Clone, Debug)]
pub struct ShootingTrajectory {
    pub t: Vec<f64>,
    pub v: Vec<f64>,
    /// Flux `w = φ_p(v')`.
    pub w: Vec<f64>,
    p: f64,
    pub diverged_at: Option<f64>,
}

impl ShootingTrajectory {
    pub fn terminal(&self) -> Option<f64> {
        match self.diverged_at {
            None => self.v.last().copied(),
            Some(_) => None,
        }
    }

    fn steps(&self) -> usize {
        self.t.len() - 1
    }

    /// Samples onto `mesh`: exact nodal values when the mesh is a uniform
    /// coarsening of the shooting grid, cubic Hermite otherwise.
    pub fn to_fe(&self, mesh: Mesh) -> Result<FEFunction> {
        if self.diverged_at.is_some() {
            return Err(Error::InvalidParameter("trajectory diverged".into()));
        }
        let n = mesh.elements();
        let steps = self.steps();
        let uniform = Mesh::uniform(n)? == mesh;
        let values: Vec<f64> = if uniform && steps % n == 0 {
            let stride = steps / n;
            (0..=n).map(|i| self.v[i * stride]).collect()
        } else {
            mesh.nodes().iter().map(|&t| self.value(t)).collect()
        };
        let last = values.len() - 1;
        let mut values = values;
        values[0] = 0.0;
        values[last] = 0.0;
        FEFunction::new(mesh, values)
    }
}

impl Profile for ShootingTrajectory {
    /// Cubic Hermite interpolation using `v` and `v' = φ_p⁻¹(w)`.
    fn value(&self, t: f64) -> f64 {
        let steps = self.steps();
        let x = (t.clamp(0.0, 1.0) * steps as f64).min(steps as f64);
        let e = (x.floor() as usize).min(steps.saturating_sub(1));
        let s = x - e as f64;
        let h = 1.0 / steps as f64;
        let (v0, v1) = (self.v[e], self.v[e + 1]);
        let (d0, d1) = (phi_p_inv(self.w[e], self.p) * h, phi_p_inv(self.w[e + 1], self.p) * h);
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * v0 + (s3 - 2.0 * s2 + s) * d0 + (-2.0 * s3 + 3.0 * s2) * v1 + (s3 - s2) * d1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Shooting,
    Descent,
}

/// A computed weak solution with its diagnostics.
#[derive(Clone, Debug)]
pub struct Solution {
    pub v: FEFunction,
    /// Initial slope of the shooting root, when there is one.
    pub slope: Option<f64>,
    pub p_norm: f64,
    pub energy: EnergyBreakdown,
    pub weak_res: f64,
    pub sup: f64,
    pub min_value: f64,
    pub origin: Origin,
}

impl Solution {
    pub fn evaluate(
        problem: &TwoPointProblem,
        v: FEFunction,
        origin: Origin,
        slope: Option<f64>,
        exec: Execution,
    ) -> Result<Self> {
        let fun = problem.functional().with_execution(exec);
        let energy = fun.energy(&v)?;
        Ok(Solution {
            p_norm: norm_p(&v, problem.p),
            weak_res: fun.weak_residual(&v),
            sup: sup_norm(&v),
            min_value: v.min_value(),
            energy,
            slope,
            origin,
            v,
        })
    }

    pub fn is_trivial(&self) -> bool {
        self.sup == 0.0
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Uniform,
    /// Geometric spacing; needs `s_lo > 0`.
    Log,
}

#[derive(Clone, Debug)]
pub struct SweepOptions {
    pub s_lo: f64,
    pub s_hi: f64,
    /// Number of grid slopes `M`.
    pub grid: usize,
    pub spacing: Spacing,
    /// Subdivisions of each cell next to a detected bracket; `0` disables the
    /// refinement pass.
    pub refine: usize,
    pub n_steps: usize,
    pub root_tol: f64,
    pub elements: usize,
    pub accept_residual: f64,
    pub nonneg_tol: f64,
    pub divergence_bound: Option<f64>,
    pub exec: Execution,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            s_lo: 0.0,
            s_hi: 100.0,
            grid: 400,
            spacing: Spacing::Uniform,
            refine: 0,
            n_steps: 4096,
            root_tol: 1e-10,
            elements: crate::discretization::DEFAULT_ELEMENTS,
            accept_residual: 1e-6,
            nonneg_tol: 1e-8,
            divergence_bound: None,
            exec: Execution::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Rejected {
    pub slope: f64,
    pub reason: String,
}

#[derive(Clone, Debug)]
pub struct SweepReport {
    pub slopes: Vec<f64>,
    /// `v(1; s)` per slope, `None` where the shot diverged.
    pub terminal: Vec<Option<f64>>,
    pub solutions: Vec<Solution>,
    pub rejected: Vec<Rejected>,
}

pub fn slope_grid(opts: &SweepOptions) -> Result<Vec<f64>> {
    let (lo, hi) = (opts.s_lo, opts.s_hi);
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::EmptyRange { lo, hi });
    }
    if opts.grid < 16 {
        return Err(Error::InvalidParameter(format!("slope grid needs M >= 16, got {}", opts.grid)));
    }
    let m = opts.grid;
    Ok(match opts.spacing {
        Spacing::Uniform => (0..m)
            .map(|i| if i + 1 == m { hi } else { lo + (hi - lo) * i as f64 / (m - 1) as f64 })
            .collect(),
        Spacing::Log => {
            if !(lo > 0.0) {
                return Err(Error::InvalidParameter("log spacing needs s_lo > 0".into()));
            }
            (0..m).map(|i| crate::nonlinearity::geometric(lo, hi, i, m)).collect()
        }
    })
}

/// Brackets sign changes of `s ↦ v(1; s)`, bisects each to `root_tol`, and
/// returns the accepted roots as finite-element solutions.
pub fn find_solutions_shooting(problem: &TwoPointProblem, opts: &SweepOptions) -> Result<SweepReport> {
    let bound = opts.divergence_bound.unwrap_or_else(|| problem.default_divergence_bound());
    let shoot = |s: &f64| problem.terminal(*s, opts.n_steps, bound).map(Shot::landed);
    let coarse = slope_grid(opts)?;
    let coarse_terminal = opts.exec.map(&coarse, shoot).into_iter().collect::<Result<Vec<_>>>()?;
    if coarse_terminal.iter().all(Option::is_none) {
        return Err(Error::AllDiverged);
    }

    let mut slopes = coarse.clone();
    let mut terminal = coarse_terminal.clone();
    if opts.refine > 1 {
        let cells = bracket_cells(&coarse_terminal);
        let mut marked = vec![false; coarse.len().saturating_sub(1)];
        for &c in &cells {
            for j in c.saturating_sub(1)..=(c + 1).min(marked.len() - 1) {
                marked[j] = true;
            }
        }
        let extra: Vec<f64> = marked
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .flat_map(|(c, _)| {
                let (l, r) = (coarse[c], coarse[c + 1]);
                (1..opts.refine).map(move |j| l + (r - l) * j as f64 / opts.refine as f64)
            })
            .collect();
        let extra_terminal = opts.exec.map(&extra, shoot).into_iter().collect::<Result<Vec<_>>>()?;
        let mut merged: Vec<(f64, Option<f64>)> = slopes.into_iter().zip(terminal).chain(extra.into_iter().zip(extra_terminal)).collect();
        merged.sort_by(|x, y| x.0.total_cmp(&y.0));
        (slopes, terminal) = merged.into_iter().unzip();
    }

    let mut roots: Vec<(f64, f64)> = Vec::new();
    let mut exact = Vec::new();
    for (i, value) in terminal.iter().enumerate() {
        if *value == Some(0.0) {
            exact.push(slopes[i]);
        }
    }
    for c in bracket_cells(&terminal) {
        roots.push((slopes[c], slopes[c + 1]));
    }

    let bisected = opts.exec.map(&roots, |&(l, r)| bisect(problem, l, r, opts, bound));
    let mut candidates: Vec<(f64, f64)> = exact.into_iter().map(|s| (s, 0.0)).collect();
    let mut rejected = Vec::new();
    for outcome in bisected {
        let (s, v1) = outcome?;
        if v1.abs() < opts.root_tol {
            candidates.push((s, v1));
        } else {
            rejected.push(Rejected {
                slope: s,
                reason: format!("bisection stalled at |v(1)| = {:e}", v1.abs()),
            });
        }
    }
    candidates.sort_by(|x, y| x.0.total_cmp(&y.0));

    let mesh = Mesh::uniform(opts.elements)?;
    let mut solutions = Vec::new();
    for (s, _) in candidates {
        let trajectory = problem.shoot(s, opts.n_steps, bound)?;
        let v = trajectory.to_fe(mesh.clone())?;
        let solution = Solution::evaluate(problem, v, Origin::Shooting, Some(s), opts.exec)?;
        if solution.min_value < -opts.nonneg_tol {
            rejected.push(Rejected {
                slope: s,
                reason: format!("negative nodal value {:e}", solution.min_value),
            });
        } else if !(solution.weak_res < opts.accept_residual) {
            rejected.push(Rejected {
                slope: s,
                reason: format!("weak residual {:e} above {:e}", solution.weak_res, opts.accept_residual),
            });
        } else {
            solutions.push(solution);
        }
    }
    Ok(SweepReport {
        slopes,
        terminal,
        solutions,
        rejected,
    })
}

/// Cells `[i, i+1]` with a strict sign change between landed shots.
fn bracket_cells(terminal: &[Option<f64>]) -> Vec<usize> {
    terminal
        .windows(2)
        .enumerate()
        .filter_map(|(i, w)| match (w[0], w[1]) {
            (Some(a), Some(b)) if a * b < 0.0 => Some(i),
            _ => None,
        })
        .collect()
}

fn bisect(problem: &TwoPointProblem, mut lo: f64, mut hi: f64, opts: &SweepOptions, bound: f64) -> Result<(f64, f64)> {
    let eval = |s: f64| -> Result<f64> {
        problem
            .terminal(s, opts.n_steps, bound)?
            .landed()
            .ok_or_else(|| Error::InvalidParameter(format!("shot diverged inside bracket at s = {s}")))
    };
    let mut f_lo = eval(lo)?;
    let mut f_hi = eval(hi)?;
    let mut best = if f_lo.abs() < f_hi.abs() { (lo, f_lo) } else { (hi, f_hi) };
    for _ in 0..200 {
        if best.1.abs() < opts.root_tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = eval(mid)?;
        if f_mid.abs() < best.1.abs() {
            best = (mid, f_mid);
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
    }
    let _ = f_hi;
    Ok(best)
}

#[derive(Clone, Debug)]
pub struct DescentOptions {
    /// Stop once the weak residual (the dual norm of the gradient) drops
    /// below this.
    pub tol: f64,
    pub max_iter: usize,
    pub exec: Execution,
}

impl Default for DescentOptions {
    fn default() -> Self {
        DescentOptions {
            tol: 1e-8,
            max_iter: 500,
            exec: Execution::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct DescentOutcome {
    pub solution: Solution,
    pub iterations: usize,
    /// Sup-norm distance between start and end.
    pub movement: f64,
}

/// Gradient descent on `E = Φ + Ψ/p` with Armijo backtracking.
///
/// The search direction is the gradient mapped through a symmetric positive
/// definite tridiagonal matrix: the Hessian of `E` (finite differences of the
/// analytic gradient) where it is positive definite, otherwise the weighted
/// stiffness `∫ (p-1)|v'|^{p-2} φ_i' φ_j'` (floored where `v'` vanishes).
/// Near a local minimum this is a damped Newton iteration. Saddle points are
/// not attracting for any descent method.
pub fn refine_descent(problem: &TwoPointProblem, v0: &FEFunction, opts: &DescentOptions) -> Result<DescentOutcome> {
    let fun = problem.functional().with_execution(opts.exec);
    let mesh = v0.mesh().clone();
    let mut v = v0.clone();
    let mut energy = fun.energy(&v)?.energy;
    let mut iterations = 0;
    loop {
        let g = fun.gradient(&v);
        let residual = fun.residual_of_gradient(&mesh, &g);
        if residual < opts.tol {
            break;
        }
        if iterations >= opts.max_iter {
            return Err(Error::IterationCap { iterations, residual });
        }
        let d = newton_direction(&fun, &v, &g).unwrap_or_else(|| precondition(&v, problem.p, &g));
        let decrease: f64 = g.iter().zip(&d).map(|(a, b)| a * b).sum();
        let slack = 8.0 * f64::EPSILON * (energy.abs() + fun.psi(&v));
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial = v.with_values(v.values().iter().zip(&d).map(|(x, y)| x - step * y).collect());
            let e = fun.energy(&trial)?.energy;
            if e <= energy - 1e-4 * step * decrease + slack {
                accepted = Some((trial, e));
                break;
            }
            step *= 0.5;
        }
        match accepted {
            Some((next, e)) => {
                v = next;
                energy = e;
            }
            None => return Err(Error::IterationCap { iterations, residual }),
        }
        iterations += 1;
    }
    let movement = sup_distance(&v, v0);
    let solution = Solution::evaluate(problem, v, Origin::Descent, None, opts.exec)?;
    Ok(DescentOutcome {
        solution,
        iterations,
        movement,
    })
}

/// `H⁻¹ g` with the tridiagonal Hessian assembled from three gradient
/// evaluations (nodes coloured mod 3 are perturbed together). `None` when
/// `H` is not positive definite.
fn newton_direction(fun: &Functional, v: &FEFunction, g: &[f64]) -> Option<Vec<f64>> {
    let n = v.mesh().elements();
    if n < 2 {
        return None;
    }
    let values = v.values();
    let eps = f64::EPSILON.sqrt() * values.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
    let mut diag = vec![0.0; n + 1];
    let mut off = vec![0.0; n + 1];
    for colour in 0..3 {
        let shifted: Vec<f64> = values
            .iter()
            .enumerate()
            .map(|(i, &x)| if i % 3 == colour { x + eps } else { x })
            .collect();
        let gs = fun.gradient(&v.with_values(shifted));
        for i in (1..n).filter(|i| i % 3 == colour) {
            diag[i] = (gs[i] - g[i]) / eps;
            if i + 1 < n {
                off[i] = (gs[i + 1] - g[i + 1]) / eps;
            }
        }
    }
    solve_spd_tridiagonal(&diag, &off, g)
}

/// Solves the weighted-stiffness system on interior nodes.
fn precondition(v: &FEFunction, p: f64, g: &[f64]) -> Vec<f64> {
    let mesh = v.mesh();
    let n = mesh.elements();
    let slopes: Vec<f64> = (0..n).map(|e| v.slope(e).abs()).collect();
    let floor = 1e-3 * slopes.iter().copied().fold(0.0, f64::max) + 1e-12;
    let coeff: Vec<f64> = (0..n)
        .map(|e| (p - 1.0) * slopes[e].max(floor).powf(p - 2.0) / mesh.width(e))
        .collect();
    let mut diag = vec![0.0; n + 1];
    let mut off = vec![0.0; n + 1];
    for i in 1..n {
        diag[i] = coeff[i - 1] + coeff[i];
        off[i] = -coeff[i];
    }
    solve_spd_tridiagonal(&diag, &off, g).unwrap_or_else(|| vec![0.0; n + 1])
}

/// Thomas algorithm on rows `1..n-1` (`n + 1 = diag.len()`), with `off[i]`
/// coupling `i` and `i + 1`. Returns `None` unless every pivot is positive.
fn solve_spd_tridiagonal(diag: &[f64], off: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len() - 1;
    let mut x = vec![0.0; n + 1];
    if n < 2 {
        return Some(x);
    }
    let mut c = vec![0.0; n + 1];
    let mut y = vec![0.0; n + 1];
    for i in 1..n {
        let (lower, prev_c, prev_y) = if i > 1 { (off[i - 1], c[i - 1], y[i - 1]) } else { (0.0, 0.0, 0.0) };
        let pivot = diag[i] - lower * prev_c;
        if !(pivot > 0.0 && pivot.is_finite()) {
            return None;
        }
        c[i] = if i + 1 < n { off[i] / pivot } else { 0.0 };
        y[i] = (rhs[i] - lower * prev_y) / pivot;
    }
    for i in (1..n).rev() {
        x[i] = y[i] - c[i] * x[i + 1];
    }
    Some(x)
}

/// Greedy clustering by sup-norm distance. Candidates are visited by
/// increasing weak residual and kept when farther than `tol_sup` from every
/// kept one, so each cluster is represented by its smallest residual and the
/// output is pairwise separated. Sorted by `‖v‖^p`.
pub fn dedupe(mut solutions: Vec<Solution>, tol_sup: f64) -> Vec<Solution> {
    solutions.sort_by(|x, y| x.weak_res.total_cmp(&y.weak_res));
    let mut kept: Vec<Solution> = Vec::new();
    for s in solutions {
        if kept.iter().all(|k| sup_distance(&k.v, &s.v) > tol_sup) {
            kept.push(s);
        }
    }
    kept.sort_by(|x, y| x.p_norm.total_cmp(&y.p_norm));
    kept
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub sweep: SweepReport,
    pub solutions: Vec<Solution>,
    /// Descent failures, by shooting slope.
    pub descent_notes: Vec<Rejected>,
}

/// Shooting, then optional descent polish, then deduplication. A descent
/// result replaces its shooting seed only if it stays within `tol_sup`, is
/// non-negative, and has a smaller weak residual.
pub fn solve(
    problem: &TwoPointProblem,
    sweep: &SweepOptions,
    descent: Option<&DescentOptions>,
    tol_sup: f64,
) -> Result<SolveReport> {
    let report = find_solutions_shooting(problem, sweep)?;
    let mut notes = Vec::new();
    let mut polished = Vec::with_capacity(report.solutions.len());
    for s in &report.solutions {
        let Some(opts) = descent else {
            polished.push(s.clone());
            continue;
        };
        match refine_descent(problem, &s.v, opts) {
            Ok(out)
                if out.movement <= tol_sup
                    && out.solution.min_value >= -sweep.nonneg_tol
                    && out.solution.weak_res < s.weak_res =>
            {
                let mut refined = out.solution;
                refined.slope = s.slope;
                polished.push(refined);
            }
            Ok(out) => {
                if out.movement > tol_sup {
                    notes.push(Rejected {
                        slope: s.slope.unwrap_or(f64::NAN),
                        reason: format!(
                            "descent left the solution (moved {:e} in sup norm); kept the shooting solution",
                            out.movement
                        ),
                    });
                }
                polished.push(s.clone());
            }
            Err(e) => {
                notes.push(Rejected {
                    slope: s.slope.unwrap_or(f64::NAN),
                    reason: e.to_string(),
                });
                polished.push(s.clone());
            }
        }
    }
    Ok(SolveReport {
        solutions: dedupe(polished, tol_sup),
        sweep: report,
        descent_notes: notes,
    })
}
