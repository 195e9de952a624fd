//! Change of variables between radial solutions on the annulus
//! `a < |x| < b` in `R^N` and the two-point problem
//!
//! ```text
//! (|v'|^{p-2} v')' + q(t) f(v) = 0  on (0, 1),   v(0) = v(1) = 0.
//! ```
//!
//! For `N > p` the map is `t = B - A / r^m` with `m = (N - p)/(p - 1)`; for
//! `p = N` it is `r = a (b/a)^t`. In both cases `t = 0` corresponds to
//! `r = a`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_range, Error, Result};
use crate::solver::phi_p;

/// Radial data of the Dirichlet problem on the annulus.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnulusSpec {
    pub dimension: u32,
    pub p: f64,
    pub a: f64,
    pub b: f64,
}

impl AnnulusSpec {
    pub fn new(dimension: u32, p: f64, a: f64, b: f64) -> Result<Self> {
        let spec = AnnulusSpec { dimension, p, a, b };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension < 2 {
            return Err(Error::InvalidSpec(format!(
                "dimension must be at least 2, got {}",
                self.dimension
            )));
        }
        if !(self.p > 1.0) || !self.p.is_finite() {
            return Err(Error::InvalidSpec(format!("p must exceed 1, got {}", self.p)));
        }
        if self.p > f64::from(self.dimension) {
            return Err(Error::InvalidSpec(format!(
                "p = {} exceeds N = {}; only 1 < p <= N is supported",
                self.p, self.dimension
            )));
        }
        if !(self.a > 0.0) || !self.a.is_finite() {
            return Err(Error::InvalidSpec(format!("inner radius must be positive, got {}", self.a)));
        }
        if !(self.b > self.a) || !self.b.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "outer radius {} must exceed inner radius {}",
                self.b, self.a
            )));
        }
        Ok(())
    }

    pub fn n(&self) -> f64 {
        f64::from(self.dimension)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum MapCase {
    /// `N > p`: `t = B - A r^{-m}`.
    Subcritical {
        m: f64,
        #[serde(rename = "A")]
        a_const: f64,
        #[serde(rename = "B")]
        b_const: f64,
    },
    /// `p = N`: `r = a (b/a)^t`.
    Critical { log_ratio: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CoordinateMap {
    pub spec: AnnulusSpec,
    pub case: MapCase,
}

impl CoordinateMap {
    pub fn build(spec: AnnulusSpec) -> Result<Self> {
        spec.validate()?;
        let AnnulusSpec { p, a, b, .. } = spec;
        let n = spec.n();
        let case = if p < n {
            let m = (n - p) / (p - 1.0);
            let am = a.powf(m);
            let bm = b.powf(m);
            MapCase::Subcritical {
                m,
                a_const: (a * b).powf(m) / (bm - am),
                b_const: bm / (bm - am),
            }
        } else {
            MapCase::Critical {
                log_ratio: (b / a).ln(),
            }
        };
        Ok(CoordinateMap { spec, case })
    }

    pub fn p(&self) -> f64 {
        self.spec.p
    }

    /// Radius to interval coordinate; strictly increasing with
    /// `r_to_t(a) = 0` and `r_to_t(b) = 1`.
    pub fn r_to_t(&self, r: f64) -> Result<f64> {
        let AnnulusSpec { a, b, .. } = self.spec;
        ensure_range("r", r, a, b)?;
        Ok(match self.case {
            // B - A r^{-m} rewritten so both endpoints are hit exactly;
            // expm1 keeps small m well conditioned.
            MapCase::Subcritical { m, .. } => (m * (a / r).ln()).exp_m1() / (m * (a / b).ln()).exp_m1(),
            MapCase::Critical { log_ratio } => (r / a).ln() / log_ratio,
        })
    }

    /// Inverse of [`Self::r_to_t`], clamped to `[a, b]` against roundoff.
    pub fn t_to_r(&self, t: f64) -> Result<f64> {
        ensure_range("t", t, 0.0, 1.0)?;
        Ok(self.radius_unchecked(t).clamp(self.spec.a, self.spec.b))
    }

    fn radius_unchecked(&self, t: f64) -> f64 {
        let AnnulusSpec { a, b, .. } = self.spec;
        match self.case {
            MapCase::Subcritical { m, .. } => a * (-(-t * -(m * (a / b).ln()).exp_m1()).ln_1p() / m).exp(),
            MapCase::Critical { log_ratio } => a * (t * log_ratio).exp(),
        }
    }

    /// The weight `q(t)` of the transformed problem.
    pub fn weight_q(&self, t: f64) -> f64 {
        let p = self.spec.p;
        match self.case {
            MapCase::Subcritical { a_const, b_const, .. } => {
                let n = self.spec.n();
                ((p - 1.0) / (n - p)).powf(p) * a_const.powf((p - 1.0) * p / (n - p))
                    / (b_const - t).powf(p * (n - 1.0) / (n - p))
            }
            MapCase::Critical { log_ratio } => (self.radius_unchecked(t) * log_ratio).powf(p),
        }
    }

    /// `q` with bounds taken at the endpoints; `q` is increasing in `t` in
    /// both cases.
    pub fn weight(&self) -> WeightFunction {
        let q0 = self.weight_q(0.0);
        let q1 = self.weight_q(1.0);
        WeightFunction {
            kind: WeightKind::Radial(*self),
            q0,
            q1,
        }
    }

    /// Weights `(h, k, q = h k)` of the problem with right-hand side
    /// `g(|x|) f(u)`: `h(t) = g(r(t))` and `k` is the autonomous weight.
    pub fn weight_nonautonomous(&self, g: &dyn Fn(f64) -> f64, t: f64) -> Result<(f64, f64, f64)> {
        ensure_range("t", t, 0.0, 1.0)?;
        let r = self.radius_unchecked(t);
        let h = g(r);
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "radial weight g({r}) = {h} is not positive"
            )));
        }
        let k = self.weight_q(t);
        Ok((h, k, h * k))
    }

    /// Weight function for `-Δ_p u = g(|x|) f(u)`. `g` is sampled on 1001
    /// points of `[a, b]` for the bounds.
    pub fn nonautonomous_weight(&self, g: RadialWeight) -> Result<WeightFunction> {
        let mut q0 = f64::INFINITY;
        let mut q1 = 0.0_f64;
        for i in 0..=1000 {
            let t = i as f64 / 1000.0;
            let (_, _, q) = self.weight_nonautonomous(&*g, t)?;
            q0 = q0.min(q);
            q1 = q1.max(q);
        }
        Ok(WeightFunction {
            kind: WeightKind::Nonautonomous { map: *self, g },
            q0,
            q1,
        })
    }

    pub fn uniform_r_grid(&self, count: usize) -> Vec<f64> {
        let AnnulusSpec { a, b, .. } = self.spec;
        let last = count.saturating_sub(1).max(1) as f64;
        (0..count)
            .map(|i| {
                if i + 1 == count {
                    b
                } else {
                    a + (b - a) * (i as f64) / last
                }
            })
            .collect()
    }
}

pub type RadialWeight = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum WeightKind {
    Radial(CoordinateMap),
    Nonautonomous { map: CoordinateMap, g: RadialWeight },
    Constant(f64),
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

/// `t ↦ q(t)` on `[0, 1]` together with bounds `0 < q0 <= q <= q1`.
#[derive(Clone)]
pub struct WeightFunction {
    kind: WeightKind,
    pub q0: f64,
    pub q1: f64,
}

impl WeightFunction {
    /// Constant weight, used to test assembly independently of any map.
    pub fn constant(value: f64) -> Result<Self> {
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::InvalidParameter(format!("weight must be positive, got {value}")));
        }
        Ok(WeightFunction {
            kind: WeightKind::Constant(value),
            q0: value,
            q1: value,
        })
    }

    /// Arbitrary positive weight; bounds are sampled on 1001 points.
    pub fn custom(q: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        let (mut q0, mut q1) = (f64::INFINITY, 0.0_f64);
        for i in 0..=1000 {
            let value = q(i as f64 / 1000.0);
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "weight is not positive at t = {}",
                    i as f64 / 1000.0
                )));
            }
            q0 = q0.min(value);
            q1 = q1.max(value);
        }
        Ok(WeightFunction {
            kind: WeightKind::Custom(Arc::new(q)),
            q0,
            q1,
        })
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        match &self.kind {
            WeightKind::Radial(map) => map.weight_q(t),
            WeightKind::Nonautonomous { map, g } => g(map.radius_unchecked(t)) * map.weight_q(t),
            WeightKind::Constant(c) => *c,
            WeightKind::Custom(q) => q(t),
        }
    }

    pub fn map(&self) -> Option<&CoordinateMap> {
        match &self.kind {
            WeightKind::Radial(map) | WeightKind::Nonautonomous { map, .. } => Some(map),
            _ => None,
        }
    }

    /// Multiplies the weight by a positive constant.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0) {
            return Err(Error::InvalidParameter(format!("scale must be positive, got {factor}")));
        }
        let inner = self.clone();
        let mut out = WeightFunction::custom(move |t| factor * inner.eval(t))?;
        out.q0 = factor * self.q0;
        out.q1 = factor * self.q1;
        Ok(out)
    }
}

impl fmt::Debug for WeightFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.kind {
            WeightKind::Radial(_) => "radial",
            WeightKind::Nonautonomous { .. } => "nonautonomous",
            WeightKind::Constant(_) => "constant",
            WeightKind::Custom(_) => "custom",
        };
        f.debug_struct("WeightFunction")
            .field("kind", &kind)
            .field("q0", &self.q0)
            .field("q1", &self.q1)
            .finish()
    }
}

/// Anything that can be evaluated on `[0, 1]`.
pub trait Profile {
    fn value(&self, t: f64) -> f64;
}

impl<F: Fn(f64) -> f64> Profile for F {
    fn value(&self, t: f64) -> f64 {
        self(t)
    }
}

/// Samples of a radial function `u(r)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialProfile {
    pub r: Vec<f64>,
    pub u: Vec<f64>,
}

/// `u(r_i) = v(t(r_i))`.
pub fn pullback<P: Profile + ?Sized>(map: &CoordinateMap, v: &P, r_grid: &[f64]) -> Result<RadialProfile> {
    let u = r_grid
        .iter()
        .map(|&r| map.r_to_t(r).map(|t| v.value(t)))
        .collect::<Result<Vec<_>>>()?;
    Ok(RadialProfile {
        r: r_grid.to_vec(),
        u,
    })
}

/// Right-hand side of the radial equation, `f(u)`.
pub trait Forcing: Sync {
    fn force(&self, u: f64) -> f64;
}

impl<F: Fn(f64) -> f64 + Sync> Forcing for F {
    fn force(&self, u: f64) -> f64 {
        self(u)
    }
}

/// Discrete L1 norm, `Σ |res_i| Δr` over interior points, of
/// `(r^{N-1} φ_p(u'))' + r^{N-1} f(u)` by flux-form centered differences.
///
/// For `p > 2` a solution is only `C^{1,1/(p-1)}` at interior extrema, where
/// the pointwise residual stays O(1) on a few cells; the L1 norm still
/// converges at first order.
pub fn radial_residual(u: &RadialProfile, spec: &AnnulusSpec, f: &dyn Forcing) -> Result<f64> {
    radial_residual_weighted(u, spec, &|_| 1.0, f)
}

/// As [`radial_residual`] with right-hand side `g(r) f(u)`.
pub fn radial_residual_weighted(
    u: &RadialProfile,
    spec: &AnnulusSpec,
    g: &dyn Fn(f64) -> f64,
    f: &dyn Forcing,
) -> Result<f64> {
    let count = u.r.len();
    if count < 8 || u.u.len() != count {
        return Err(Error::InvalidParameter(format!(
            "radial grid needs at least 8 points, got {count}"
        )));
    }
    let step = (u.r[count - 1] - u.r[0]) / (count - 1) as f64;
    let uniform = u
        .r
        .windows(2)
        .all(|w| ((w[1] - w[0]) - step).abs() <= 1e-9 * step.max(1.0));
    if !uniform {
        return Err(Error::InvalidParameter("radial grid is not uniform".into()));
    }
    let p = spec.p;
    let power = spec.n() - 1.0;
    let flux: Vec<f64> = (0..count - 1)
        .map(|i| {
            let mid = 0.5 * (u.r[i] + u.r[i + 1]);
            mid.powf(power) * phi_p((u.u[i + 1] - u.u[i]) / step, p)
        })
        .collect();
    let mut total = 0.0_f64;
    for i in 1..count - 1 {
        let r = u.r[i];
        let res = (flux[i] - flux[i - 1]) / step + r.powf(power) * g(r) * f.force(u.u[i]);
        total += res.abs();
    }
    Ok(total * step)
}
