//! Piecewise-linear elements on `[0, 1]` with zero boundary values, and the
//! energy `E = Φ + Ψ/p` with `Ψ(v) = ∫|v'|^p` and `Φ(v) = -∫ q F(v)`.
//!
//! The `|v'|^p` terms are exact for P1 functions; the `q F(v)` and `q f(v) φ`
//! terms use five-point Gauss–Legendre per element.

use std::path::Path;

use serde::Serialize;

use crate::coordinates::{Profile, WeightFunction};
use crate::solver::phi_p;
use crate::error::{Error, Result};
use crate::exec::{pairwise_sum, Execution};
use crate::nonlinearity::Nonlinearity;
use crate::quadrature::{GL5_NODES, GL5_WEIGHTS};

pub const DEFAULT_ELEMENTS: usize = 1024;

#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    nodes: Vec<f64>,
}

impl Mesh {
    pub fn uniform(elements: usize) -> Result<Self> {
        if elements == 0 {
            return Err(Error::Mesh("need at least one element".into()));
        }
        let nodes = (0..=elements)
            .map(|i| {
                if i == elements {
                    1.0
                } else {
                    i as f64 / elements as f64
                }
            })
            .collect();
        Ok(Mesh { nodes })
    }

    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 || nodes[0] != 0.0 || *nodes.last().unwrap() != 1.0 {
            return Err(Error::Mesh("nodes must start at 0 and end at 1".into()));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Mesh("nodes must be strictly increasing".into()));
        }
        Ok(Mesh { nodes })
    }

    /// Inserts interior breakpoints; a node closer than `1e-12` to a
    /// breakpoint is moved onto it.
    pub fn with_breakpoints(&self, points: &[f64]) -> Result<Self> {
        let mut nodes = self.nodes.clone();
        for &x in points {
            if !(x > 0.0 && x < 1.0) {
                return Err(Error::Mesh(format!("breakpoint {x} is not interior")));
            }
            let idx = nodes.partition_point(|&n| n < x);
            let last = nodes.len() - 1;
            let snap = [idx, idx.wrapping_sub(1)]
                .into_iter()
                .find(|&j| j > 0 && j < last && (nodes[j] - x).abs() < 1e-12);
            match snap {
                Some(j) => nodes[j] = x,
                None => nodes.insert(idx, x),
            }
        }
        Mesh::from_nodes(nodes)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn elements(&self) -> usize {
        self.nodes.len() - 1
    }

    #[inline]
    pub fn width(&self, e: usize) -> f64 {
        self.nodes[e + 1] - self.nodes[e]
    }
}

/// A P1 function on a mesh with `v(0) = v(1) = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct FEFunction {
    mesh: Mesh,
    values: Vec<f64>,
}

impl FEFunction {
    pub fn new(mesh: Mesh, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.nodes.len() {
            return Err(Error::Mesh(format!(
                "{} values for {} nodes",
                values.len(),
                mesh.nodes.len()
            )));
        }
        let scale = values.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        let last = values.len() - 1;
        if values[0].abs() > 1e-12 * scale || values[last].abs() > 1e-12 * scale {
            return Err(Error::Mesh(format!(
                "boundary values must vanish, got {} and {}",
                values[0], values[last]
            )));
        }
        values[0] = 0.0;
        values[last] = 0.0;
        Ok(FEFunction { mesh, values })
    }

    pub fn zero(mesh: Mesh) -> Self {
        let values = vec![0.0; mesh.nodes.len()];
        FEFunction { mesh, values }
    }

    /// Nodal interpolant of `f` with the boundary values pinned to zero.
    pub fn interpolate<P: Profile + ?Sized>(mesh: Mesh, f: &P) -> Self {
        let last = mesh.nodes.len() - 1;
        let values = mesh
            .nodes
            .iter()
            .enumerate()
            .map(|(i, &t)| if i == 0 || i == last { 0.0 } else { f.value(t) })
            .collect();
        FEFunction { mesh, values }
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        FEFunction {
            mesh: self.mesh.clone(),
            values: self.values.iter().map(|v| alpha * v).collect(),
        }
    }

    /// Replaces the interior values; the boundary stays at zero.
    pub(crate) fn with_values(&self, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        let mut out = FEFunction {
            mesh: self.mesh.clone(),
            values,
        };
        let last = out.values.len() - 1;
        out.values[0] = 0.0;
        out.values[last] = 0.0;
        out
    }

    #[inline]
    pub fn slope(&self, e: usize) -> f64 {
        (self.values[e + 1] - self.values[e]) / self.mesh.width(e)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["t", "v"])?;
        for (t, v) in self.mesh.nodes.iter().zip(&self.values) {
            w.write_record([t.to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let headers = r.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "t" || &headers[1] != "v" {
            return Err(Error::Mesh(format!("expected header `t,v`, got {headers:?}")));
        }
        let mut nodes = Vec::new();
        let mut values = Vec::new();
        for record in r.records() {
            let record = record?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Mesh(format!("bad number {s:?}: {e}")))
            };
            nodes.push(parse(&record[0])?);
            values.push(parse(&record[1])?);
        }
        FEFunction::new(Mesh::from_nodes(nodes)?, values)
    }
}

impl Profile for FEFunction {
    fn value(&self, t: f64) -> f64 {
        let nodes = &self.mesh.nodes;
        if t <= 0.0 {
            return self.values[0];
        }
        if t >= 1.0 {
            return *self.values.last().unwrap();
        }
        let e = nodes.partition_point(|&n| n <= t).saturating_sub(1);
        let e = e.min(nodes.len() - 2);
        let lambda = (t - nodes[e]) / self.mesh.width(e);
        self.values[e] + lambda * (self.values[e + 1] - self.values[e])
    }
}

/// `‖v‖^p = Σ_e |slope_e|^p h_e`.
pub fn norm_p(v: &FEFunction, p: f64) -> f64 {
    let terms: Vec<f64> = (0..v.mesh.elements())
        .map(|e| v.slope(e).abs().powf(p) * v.mesh.width(e))
        .collect();
    pairwise_sum(&terms)
}

pub fn sup_norm(v: &FEFunction) -> f64 {
    v.values.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Largest nodal difference; both functions must share a mesh.
pub fn sup_distance(u: &FEFunction, v: &FEFunction) -> f64 {
    if u.mesh == v.mesh {
        u.values
            .iter()
            .zip(&v.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    } else {
        let d1 = u.mesh.nodes.iter().zip(&u.values).fold(0.0_f64, |m, (&t, a)| m.max((a - v.value(t)).abs()));
        let d2 = v.mesh.nodes.iter().zip(&v.values).fold(0.0_f64, |m, (&t, b)| m.max((b - u.value(t)).abs()));
        d1.max(d2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnergyBreakdown {
    pub phi: f64,
    pub psi: f64,
    pub energy: f64,
}

/// `E = Φ + Ψ/p` for a given weight and nonlinearity.
#[derive(Clone, Copy, Debug)]
pub struct Functional<'a> {
    pub p: f64,
    pub weight: &'a WeightFunction,
    pub nl: &'a Nonlinearity,
    pub exec: Execution,
}

impl<'a> Functional<'a> {
    pub fn new(p: f64, weight: &'a WeightFunction, nl: &'a Nonlinearity) -> Self {
        Functional {
            p,
            weight,
            nl,
            exec: Execution::default(),
        }
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn psi(&self, v: &FEFunction) -> f64 {
        norm_p(v, self.p)
    }

    /// `Φ(v) = -∫_0^1 q(t) F(v(t)) dt`.
    pub fn phi(&self, v: &FEFunction) -> Result<f64> {
        let mesh = &v.mesh;
        let terms = self.exec.map_range(mesh.elements(), |e| {
            let (tl, h) = (mesh.nodes[e], mesh.width(e));
            let (vl, vr) = (v.values[e], v.values[e + 1]);
            let half = 0.5 * h;
            let mut acc = 0.0;
            for (x, w) in GL5_NODES.iter().zip(GL5_WEIGHTS.iter()) {
                let lambda = 0.5 * (1.0 + x);
                let t = tl + lambda * h;
                let vx = vl + lambda * (vr - vl);
                acc += w * self.weight.eval(t) * self.nl.primitive_or_nan(vx);
            }
            -acc * half
        });
        let phi = pairwise_sum(&terms);
        if phi.is_nan() {
            return Err(Error::Quadrature { lo: 0.0, hi: 1.0 });
        }
        Ok(phi)
    }

    pub fn energy(&self, v: &FEFunction) -> Result<EnergyBreakdown> {
        let phi = self.phi(v)?;
        let psi = self.psi(v);
        Ok(EnergyBreakdown {
            phi,
            psi,
            energy: phi + psi / self.p,
        })
    }

    /// Per-element `(∫ q f(v) φ_left, ∫ q f(v) φ_right)`.
    fn loads(&self, v: &FEFunction) -> Vec<(f64, f64)> {
        let mesh = &v.mesh;
        self.exec.map_range(mesh.elements(), |e| {
            let (tl, h) = (mesh.nodes[e], mesh.width(e));
            let (vl, vr) = (v.values[e], v.values[e + 1]);
            let (mut left, mut right) = (0.0, 0.0);
            for (x, w) in GL5_NODES.iter().zip(GL5_WEIGHTS.iter()) {
                let lambda = 0.5 * (1.0 + x);
                let t = tl + lambda * h;
                let vx = vl + lambda * (vr - vl);
                let load = w * self.weight.eval(t) * self.nl.value(vx);
                left += load * (1.0 - lambda);
                right += load * lambda;
            }
            (0.5 * h * left, 0.5 * h * right)
        })
    }

    /// Component `i` is `∫ |v'|^{p-2} v' φ_i' - ∫ q f(v) φ_i` for each
    /// interior hat `φ_i`; boundary components are zero.
    pub fn gradient(&self, v: &FEFunction) -> Vec<f64> {
        let n = v.mesh.elements();
        let loads = self.loads(v);
        let flux: Vec<f64> = (0..n).map(|e| phi_p(v.slope(e), self.p)).collect();
        let mut g = vec![0.0; n + 1];
        for i in 1..n {
            g[i] = (flux[i - 1] - flux[i]) - (loads[i - 1].1 + loads[i].0);
        }
        g
    }

    /// `max_i |⟨E'(v), φ_i⟩| / ‖φ_i‖` over interior hats.
    pub fn weak_residual(&self, v: &FEFunction) -> f64 {
        let g = self.gradient(v);
        self.residual_of_gradient(v.mesh(), &g)
    }

    pub(crate) fn residual_of_gradient(&self, mesh: &Mesh, g: &[f64]) -> f64 {
        let n = mesh.elements();
        (1..n)
            .map(|i| {
                let hat = (mesh.width(i - 1).powf(1.0 - self.p) + mesh.width(i).powf(1.0 - self.p))
                    .powf(1.0 / self.p);
                g[i].abs() / hat
            })
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tent(mesh: Mesh) -> FEFunction {
        FEFunction::interpolate(mesh, &|t: f64| 1.0 - (2.0 * t - 1.0).abs())
    }

    #[test]
    fn tent_norm_and_sup() {
        let v = tent(Mesh::uniform(8).unwrap());
        assert!((norm_p(&v, 2.0) - 4.0).abs() < 1e-14);
        assert_eq!(sup_norm(&v), 1.0);
        let zero = FEFunction::zero(Mesh::uniform(8).unwrap());
        assert_eq!(norm_p(&zero, 2.0), 0.0);
        assert_eq!(sup_norm(&zero), 0.0);
    }

    // ∫ tent² = 1/3, so Φ = -1/6 for f(x) = x, q = 1.
    #[test]
    fn energy_of_tent_with_linear_f() {
        let q = WeightFunction::constant(1.0).unwrap();
        let nl = Nonlinearity::linear(1.0);
        let fun = Functional::new(2.0, &q, &nl);
        let e = fun.energy(&tent(Mesh::uniform(16).unwrap())).unwrap();
        assert!((e.phi + 1.0 / 6.0).abs() < 1e-14);
        assert!((e.psi - 4.0).abs() < 1e-13);
        assert!((e.energy - (2.0 - 1.0 / 6.0)).abs() < 1e-13);

        let q2 = WeightFunction::constant(2.0).unwrap();
        let doubled = Functional::new(2.0, &q2, &nl).energy(&tent(Mesh::uniform(16).unwrap())).unwrap();
        assert!((doubled.phi - 2.0 * e.phi).abs() < 1e-15);
        assert_eq!(doubled.psi, e.psi);
    }

    #[test]
    fn energy_vanishes_at_origin() {
        let q = WeightFunction::constant(1.5).unwrap();
        let nl = Nonlinearity::custom("cube", |x| x * x * x).unwrap();
        let zero = FEFunction::zero(Mesh::uniform(32).unwrap());
        let fun = Functional::new(2.5, &q, &nl);
        let e = fun.energy(&zero).unwrap();
        assert_eq!((e.phi, e.psi, e.energy), (0.0, 0.0, 0.0));
        assert!(fun.gradient(&zero).iter().all(|&g| g == 0.0));
        assert_eq!(fun.weak_residual(&zero), 0.0);
    }

    #[test]
    fn boundary_trace_is_enforced() {
        let mesh = Mesh::uniform(4).unwrap();
        assert!(FEFunction::new(mesh.clone(), vec![0.1, 0.0, 0.0, 0.0, 0.0]).is_err());
        assert!(FEFunction::new(mesh.clone(), vec![0.0; 4]).is_err());
        assert!(FEFunction::new(mesh, vec![0.0, 1.0, 2.0, 1.0, 0.0]).is_ok());
    }

    #[test]
    fn breakpoints_are_inserted_or_snapped() {
        let mesh = Mesh::uniform(4).unwrap();
        let refined = mesh.with_breakpoints(&[0.3, 0.5 + 1e-14, 0.3]).unwrap();
        assert_eq!(refined.nodes(), &[0.0, 0.25, 0.3, 0.5 + 1e-14, 0.75, 1.0]);
        assert!(mesh.with_breakpoints(&[1.0]).is_err());
        assert!(Mesh::from_nodes(vec![0.0, 0.5, 0.5, 1.0]).is_err());
    }

    #[test]
    fn linear_interpolation_profile() {
        let v = tent(Mesh::uniform(4).unwrap());
        assert_eq!(v.value(0.5), 1.0);
        assert!((v.value(0.125) - 0.25).abs() < 1e-15);
        assert_eq!(v.value(1.0), 0.0);
    }

    #[test]
    fn csv_round_trip_is_lossless() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.csv");
        let mesh = Mesh::uniform(64).unwrap().with_breakpoints(&[0.1234567890123]).unwrap();
        let v = FEFunction::interpolate(mesh, &|t: f64| (3.0 * t).sin() * t * (1.0 - t) / 7.0);
        v.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("t,v\n"));
        assert_eq!(FEFunction::read_csv(&path).unwrap(), v);
    }
}
