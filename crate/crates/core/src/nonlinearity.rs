//! The nonlinearity `f`, its primitive `F(ξ) = ∫_0^ξ f`, the constants
//! `σ(p, q0)` and the embedding constant, and a finite-index checker for the
//! oscillation hypotheses.
//!
//! `f` is always extended by zero on the negative axis, whatever the
//! underlying evaluator returns there.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::coordinates::Forcing;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::quadrature;

const PRIMITIVE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrimitiveKind {
    ClosedForm,
    Quadrature,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// Oscillation at infinity; unbounded solution sequences.
    #[default]
    Infinity,
    /// Oscillation at zero; solutions shrinking to zero.
    Zero,
}

/// The two positive sequences `a_k < b_k`, stored for `k = 1..=K` at
/// indices `0..K`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscillationSequences {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl OscillationSequences {
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.len() != b.len() || a.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "sequences need equal nonzero lengths, got {} and {}",
                a.len(),
                b.len()
            )));
        }
        for (k, (&ak, &bk)) in a.iter().zip(&b).enumerate() {
            if !(ak > 0.0 && ak < bk && bk.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "need 0 < a_k < b_k, got a_{0} = {ak}, b_{0} = {bk}",
                    k + 1
                )));
            }
        }
        Ok(OscillationSequences { a, b })
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }
}

/// `height · sin²(π (x - lo)/(hi - lo))` on `(lo, hi)`, zero elsewhere.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub lo: f64,
    pub hi: f64,
    pub height: f64,
}

impl Bump {
    fn width(&self) -> f64 {
        self.hi - self.lo
    }

    fn value(&self, x: f64) -> f64 {
        if x > self.lo && x < self.hi {
            let s = (PI * (x - self.lo) / self.width()).sin();
            self.height * s * s
        } else {
            0.0
        }
    }

    fn mass(&self) -> f64 {
        0.5 * self.height * self.width()
    }

    /// `∫_lo^x` of the bump, for `lo <= x <= hi`.
    fn partial(&self, x: f64) -> f64 {
        let y = x - self.lo;
        let w = self.width();
        self.height * (0.5 * y - w / (4.0 * PI) * (2.0 * PI * y / w).sin())
    }
}

/// One piece `Σ_j c_j (x - lo)^j` on `[lo, hi)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolynomialPiece {
    pub lo: f64,
    pub hi: f64,
    pub coeffs: Vec<f64>,
}

impl PolynomialPiece {
    fn value(&self, x: f64) -> f64 {
        let y = x - self.lo;
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * y + c)
    }

    fn integral_to(&self, x: f64) -> f64 {
        let y = x - self.lo;
        self.coeffs
            .iter()
            .enumerate()
            .rev()
            .fold(0.0, |acc, (j, c)| acc * y + c / (j as f64 + 1.0))
            * y
    }
}

#[derive(Clone)]
enum Shape {
    Zero,
    Linear { slope: f64 },
    Bumps { bumps: Vec<Bump>, cumulative: Vec<f64> },
    Piecewise { pieces: Vec<PolynomialPiece>, cumulative: Vec<f64> },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

/// A continuous `f` with `f(0) = 0`, extended by zero for `x < 0`.
#[derive(Clone)]
pub struct Nonlinearity {
    shape: Shape,
    seqs: Option<OscillationSequences>,
    name: String,
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Nonlinearity")
            .field("name", &self.name)
            .field("kind", &self.kind())
            .field("seqs", &self.seqs)
            .finish()
    }
}

impl Nonlinearity {
    pub fn zero() -> Self {
        Nonlinearity {
            shape: Shape::Zero,
            seqs: None,
            name: "zero".into(),
        }
    }

    /// `f(x) = slope · x` for `x >= 0`.
    pub fn linear(slope: f64) -> Self {
        Nonlinearity {
            shape: Shape::Linear { slope },
            seqs: None,
            name: format!("linear({slope})"),
        }
    }

    /// Sum of disjoint `sin²` bumps. Bumps must be sorted and non-overlapping.
    pub fn bumps(mut bumps: Vec<Bump>) -> Result<Self> {
        bumps.sort_by(|x, y| x.lo.total_cmp(&y.lo));
        for (i, bump) in bumps.iter().enumerate() {
            if !(bump.lo >= 0.0 && bump.hi > bump.lo && bump.height.is_finite()) {
                return Err(Error::InvalidParameter(format!("bump {i} is degenerate: {bump:?}")));
            }
            if i > 0 && bumps[i - 1].hi > bump.lo {
                return Err(Error::InvalidParameter(format!("bumps {} and {i} overlap", i - 1)));
            }
        }
        let cumulative = prefix_sums(bumps.iter().map(Bump::mass));
        Ok(Nonlinearity {
            shape: Shape::Bumps { bumps, cumulative },
            seqs: None,
            name: "bumps".into(),
        })
    }

    /// Piecewise polynomial, zero outside the pieces.
    pub fn piecewise(mut pieces: Vec<PolynomialPiece>) -> Result<Self> {
        pieces.sort_by(|x, y| x.lo.total_cmp(&y.lo));
        for (i, piece) in pieces.iter().enumerate() {
            if !(piece.lo >= 0.0 && piece.hi > piece.lo && piece.hi.is_finite()) {
                return Err(Error::InvalidParameter(format!("piece {i} has an empty interval")));
            }
            if i > 0 && pieces[i - 1].hi > piece.lo {
                return Err(Error::InvalidParameter(format!("pieces {} and {i} overlap", i - 1)));
            }
        }
        let cumulative = prefix_sums(pieces.iter().map(|pc| pc.integral_to(pc.hi)));
        let nl = Nonlinearity {
            shape: Shape::Piecewise { pieces, cumulative },
            seqs: None,
            name: "piecewise".into(),
        };
        nl.ensure_vanishes_at_zero()?;
        Ok(nl)
    }

    /// User-supplied evaluator; `F` goes through adaptive quadrature.
    pub fn custom(name: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        let nl = Nonlinearity {
            shape: Shape::Custom(Arc::new(f)),
            seqs: None,
            name: name.into(),
        };
        nl.ensure_vanishes_at_zero()?;
        Ok(nl)
    }

    /// Checks the right limit `f(0+)`, since `value` is zero for `x <= 0`.
    fn ensure_vanishes_at_zero(&self) -> Result<()> {
        let at_zero = self.value(f64::MIN_POSITIVE);
        if at_zero.abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("f(0) must vanish, got {at_zero}")));
        }
        Ok(())
    }

    pub fn with_sequences(mut self, seqs: OscillationSequences) -> Self {
        self.seqs = Some(seqs);
        self
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn sequences(&self) -> Option<&OscillationSequences> {
        self.seqs.as_ref()
    }

    pub fn kind(&self) -> PrimitiveKind {
        match self.shape {
            Shape::Custom(_) => PrimitiveKind::Quadrature,
            _ => PrimitiveKind::ClosedForm,
        }
    }

    /// `f(x)`, zero for `x < 0`.
    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        if !(x > 0.0) {
            return 0.0;
        }
        match &self.shape {
            Shape::Zero => 0.0,
            Shape::Linear { slope } => slope * x,
            Shape::Bumps { bumps, .. } => match locate(bumps, x, |b| b.lo) {
                Some(i) => bumps[i].value(x),
                None => 0.0,
            },
            Shape::Piecewise { pieces, .. } => match locate(pieces, x, |pc| pc.lo) {
                Some(i) if x < pieces[i].hi => pieces[i].value(x),
                _ => 0.0,
            },
            Shape::Custom(f) => f(x),
        }
    }

    /// `F(ξ) = ∫_0^ξ f`, zero for `ξ <= 0`.
    pub fn primitive(&self, xi: f64) -> Result<f64> {
        if !(xi > 0.0) {
            return Ok(0.0);
        }
        Ok(match &self.shape {
            Shape::Zero => 0.0,
            Shape::Linear { slope } => 0.5 * slope * xi * xi,
            Shape::Bumps { bumps, cumulative } => match locate(bumps, xi, |b| b.lo) {
                None => 0.0,
                Some(i) => cumulative[i] + bumps[i].partial(xi.min(bumps[i].hi)),
            },
            Shape::Piecewise { pieces, cumulative } => match locate(pieces, xi, |pc| pc.lo) {
                None => 0.0,
                Some(i) => cumulative[i] + pieces[i].integral_to(xi.min(pieces[i].hi)),
            },
            Shape::Custom(f) => quadrature::adaptive(&|x: f64| f(x), 0.0, xi, PRIMITIVE_TOL)?,
        })
    }

    /// Primitive for closed forms, panicking only on quadrature failure of
    /// a custom `f`.
    pub(crate) fn primitive_or_nan(&self, xi: f64) -> f64 {
        self.primitive(xi).unwrap_or(f64::NAN)
    }
}

impl Forcing for Nonlinearity {
    fn force(&self, u: f64) -> f64 {
        self.value(u)
    }
}

fn prefix_sums(items: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    items
        .map(|m| {
            let before = acc;
            acc += m;
            before
        })
        .collect()
}

/// Index of the last item whose left end is strictly below `x`.
fn locate<T>(items: &[T], x: f64, lo: impl Fn(&T) -> f64) -> Option<usize> {
    let idx = items.partition_point(|it| lo(it) < x);
    idx.checked_sub(1)
}

/// `σ(p, q0)` with its minimizer and a brute-force grid estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SigmaResult {
    pub sigma: f64,
    pub mu_bar: f64,
    pub grid_sigma: f64,
    pub grid_mu_bar: f64,
}

pub const SIGMA_GRID_POINTS: usize = 100_000;

/// `inf_{μ ∈ (0,1)} 1 / (q0 μ (1 - μ)^{p-1})`, attained at `μ = 1/p`,
/// where it equals `p^p / ((p-1)^{p-1} q0)`.
pub fn sigma(p: f64, q0: f64) -> SigmaResult {
    let objective = |mu: f64| 1.0 / (q0 * mu * (1.0 - mu).powf(p - 1.0));
    let (lo, hi) = (1e-5, 1.0 - 1e-5);
    let step = (hi - lo) / (SIGMA_GRID_POINTS - 1) as f64;
    let (mut grid_sigma, mut grid_mu_bar) = (f64::INFINITY, lo);
    for i in 0..SIGMA_GRID_POINTS {
        let mu = lo + step * i as f64;
        let value = objective(mu);
        if value < grid_sigma {
            grid_sigma = value;
            grid_mu_bar = mu;
        }
    }
    SigmaResult {
        sigma: objective(1.0 / p),
        mu_bar: 1.0 / p,
        grid_sigma,
        grid_mu_bar,
    }
}

/// `c = (1/2)^{(p-1)/p}`, from `|v(t)| <= min(t, 1-t)^{(p-1)/p} ‖v'‖_p`.
pub fn embedding_constant(p: f64) -> f64 {
    0.5_f64.powf((p - 1.0) / p)
}

/// `σ(p, q0) / (p (1/2)^p)`: the lower bound in the growth hypothesis, with
/// `sup dist(t, {0,1}) = 1/2`.
pub fn growth_threshold(p: f64, q0: f64) -> f64 {
    sigma(p, q0).sigma / (p * 0.5_f64.powf(p))
}

/// Placement of the oscillation intervals for the built-in families.
///
/// Infinity branch: `a_1 = base`, `b_k = ratio^k a_k`, `a_{k+1} = gap b_k`.
/// Zero branch: `b_1 = base`, `a_k = b_k / ratio^k`, `b_{k+1} = a_k / gap`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceLayout {
    pub base: f64,
    pub ratio: f64,
    pub gap: f64,
    /// Largest admissible bump height.
    pub height_budget: f64,
}

impl SequenceLayout {
    pub fn infinity() -> Self {
        SequenceLayout {
            base: 1.0,
            ratio: 2.0,
            gap: 2.0,
            height_budget: f64::MAX,
        }
    }

    pub fn zero() -> Self {
        SequenceLayout {
            base: 0.5,
            ..SequenceLayout::infinity()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.base > 0.0 && self.ratio > 1.0 && self.gap > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "layout needs base > 0, ratio > 1, gap > 1: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Builds an `f >= 0` that vanishes on every `[a_k, b_k]`, with
/// `F(a_k) = growth · a_k^p`, reached by a `sin²` bump on each gap
/// `(b_{k-1}, a_k)` (`b_0 = 0`).
pub fn build_oscillating_f(
    p: f64,
    q0: f64,
    growth: f64,
    k_max: usize,
    layout: SequenceLayout,
) -> Result<Nonlinearity> {
    check_growth(p, q0, growth, k_max)?;
    layout.validate()?;
    let mut a = Vec::with_capacity(k_max);
    let mut b = Vec::with_capacity(k_max);
    let mut ak = layout.base;
    for k in 1..=k_max {
        let bk = ak * layout.ratio.powi(k as i32);
        a.push(ak);
        b.push(bk);
        ak = bk * layout.gap;
    }
    let mut bumps = Vec::with_capacity(k_max);
    for k in 0..k_max {
        let lo = if k == 0 { 0.0 } else { b[k - 1] };
        let below = if k == 0 { 0.0 } else { a[k - 1].powf(p) };
        let lift = growth * (a[k].powf(p) - below);
        bumps.push(bump_for(k + 1, lo, a[k], lift, layout.height_budget)?);
    }
    Ok(Nonlinearity::bumps(bumps)?
        .with_sequences(OscillationSequences::new(a, b)?)
        .named("oscillating"))
}

/// Mirror of [`build_oscillating_f`] accumulating at zero: `b_k` decreases
/// to zero, and bumps sit on `(b_{k+1}, a_k)` with a last bump on
/// `(0, a_K)`.
pub fn build_small_oscillating_f(
    p: f64,
    q0: f64,
    growth: f64,
    k_max: usize,
    layout: SequenceLayout,
) -> Result<Nonlinearity> {
    check_growth(p, q0, growth, k_max)?;
    layout.validate()?;
    let mut a = Vec::with_capacity(k_max);
    let mut b = Vec::with_capacity(k_max);
    let mut bk = layout.base;
    for k in 1..=k_max {
        let ak = bk / layout.ratio.powi(k as i32);
        a.push(ak);
        b.push(bk);
        bk = ak / layout.gap;
    }
    if !(a[k_max - 1] > 0.0) {
        return Err(Error::InfeasibleGrowth {
            k: k_max,
            reason: "sequence underflows".into(),
        });
    }
    let mut bumps = Vec::with_capacity(k_max);
    for k in 0..k_max {
        let lo = if k + 1 < k_max { b[k + 1] } else { 0.0 };
        let below = if k + 1 < k_max { a[k + 1].powf(p) } else { 0.0 };
        let lift = growth * (a[k].powf(p) - below);
        bumps.push(bump_for(k + 1, lo, a[k], lift, layout.height_budget)?);
    }
    Ok(Nonlinearity::bumps(bumps)?
        .with_sequences(OscillationSequences::new(a, b)?)
        .named("small_oscillating"))
}

fn check_growth(p: f64, q0: f64, growth: f64, k_max: usize) -> Result<()> {
    if !(p > 1.0 && q0 > 0.0) {
        return Err(Error::InvalidParameter(format!("need p > 1 and q0 > 0, got {p}, {q0}")));
    }
    if k_max == 0 {
        return Err(Error::InvalidParameter("k_max must be positive".into()));
    }
    let threshold = growth_threshold(p, q0);
    if !(growth > threshold) || !growth.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "growth {growth} must exceed the threshold {threshold}"
        )));
    }
    Ok(())
}

fn bump_for(k: usize, lo: f64, hi: f64, lift: f64, budget: f64) -> Result<Bump> {
    let height = 2.0 * lift / (hi - lo);
    if !height.is_finite() || !(hi > lo) {
        return Err(Error::InfeasibleGrowth {
            k,
            reason: format!("bump on ({lo}, {hi}) is not representable"),
        });
    }
    if height > budget {
        return Err(Error::InfeasibleGrowth {
            k,
            reason: format!("bump height {height} exceeds budget {budget}"),
        });
    }
    Ok(Bump { lo, hi, height })
}

/// Samples per interval for the sign check on `[a_k, b_k]`.
pub const SIGN_SAMPLES: usize = 10_000;
const SIGN_REFINEMENTS: usize = 3;
const LIMSUP_SAMPLES: usize = 20_001;

#[derive(Clone, Debug, Default)]
pub struct HypothesisOptions {
    /// Window for the finite limsup proxy; defaults to `[b_1, b_K]` (or
    /// `[b_K, b_1]` for the zero branch).
    pub window: Option<(f64, f64)>,
    pub exec: Execution,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioCheck {
    pub ratios: Vec<f64>,
    pub verdict: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SignCheck {
    /// Largest sampled `f` on each `[a_k, b_k]`.
    pub max_f: Vec<f64>,
    pub samples_per_interval: usize,
    pub verdict: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthCheck {
    pub sigma: f64,
    pub threshold: f64,
    /// `max F(ξ)/ξ^p` over the window; a finite stand-in for the limsup.
    pub limsup_proxy: f64,
    pub window: (f64, f64),
    pub heuristic: bool,
    pub verdict: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Preconditions {
    pub f_at_zero: f64,
    /// Smallest sampled `F(ξ)` for `ξ >= 0`.
    pub inf_primitive: f64,
    pub verdict: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub branch: Branch,
    pub p: f64,
    pub q0: f64,
    pub k_count: usize,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub preconditions: Preconditions,
    pub ratio: RatioCheck,
    pub sign: SignCheck,
    pub growth: GrowthCheck,
    pub all_pass: bool,
}

/// Checks the sign and oscillation hypotheses on `k = 1..=k_count`.
pub fn check_hypotheses(
    nl: &Nonlinearity,
    p: f64,
    q0: f64,
    k_count: usize,
    branch: Branch,
    options: &HypothesisOptions,
) -> Result<HypothesisReport> {
    let seqs = nl.sequences().ok_or(Error::MissingSequences)?;
    if k_count < 3 {
        return Err(Error::InvalidParameter(format!("need K >= 3, got {k_count}")));
    }
    if k_count > seqs.len() {
        return Err(Error::InvalidParameter(format!(
            "K = {k_count} exceeds the {} available sequence terms",
            seqs.len()
        )));
    }
    let a = &seqs.a[..k_count];
    let b = &seqs.b[..k_count];

    let ratios: Vec<f64> = a.iter().zip(b).map(|(x, y)| y / x).collect();
    let increasing = ratios.windows(2).all(|w| w[1] > w[0]);
    let ratio = RatioCheck {
        verdict: increasing && ratios[k_count - 1] > 10.0 * ratios[0],
        ratios,
    };

    let max_f = options.exec.map_range(k_count, |k| max_on_interval(nl, a[k], b[k]));
    let sign = SignCheck {
        verdict: max_f.iter().all(|&m| m <= 0.0),
        max_f,
        samples_per_interval: SIGN_SAMPLES,
    };

    let window = options.window.unwrap_or_else(|| default_window(seqs, k_count, branch));
    let (lo, hi) = (window.0.min(window.1), window.0.max(window.1));
    let proxy = limsup_proxy(nl, p, (lo, hi), options.exec)?;
    let sig = sigma(p, q0).sigma;
    let threshold = growth_threshold(p, q0);
    let growth = GrowthCheck {
        sigma: sig,
        threshold,
        limsup_proxy: proxy,
        window: (lo, hi),
        heuristic: true,
        verdict: proxy.is_finite() && proxy > threshold,
    };

    let span = b.iter().copied().fold(0.0, f64::max);
    let inf_primitive = (0..=SIGN_SAMPLES)
        .map(|i| nl.primitive(span * i as f64 / SIGN_SAMPLES as f64))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let f_at_zero = nl.value(0.0);
    let preconditions = Preconditions {
        f_at_zero,
        inf_primitive,
        verdict: f_at_zero == 0.0 && inf_primitive >= -1e-12,
    };

    let all_pass = preconditions.verdict && ratio.verdict && sign.verdict && growth.verdict;
    Ok(HypothesisReport {
        branch,
        p,
        q0,
        k_count,
        a: a.to_vec(),
        b: b.to_vec(),
        preconditions,
        ratio,
        sign,
        growth,
        all_pass,
    })
}

/// `[b_1, b_K]` for the infinity branch, `[b_K, b_1]` for the zero branch.
pub fn default_window(seqs: &OscillationSequences, k_count: usize, branch: Branch) -> (f64, f64) {
    let (first, last) = (seqs.b[0], seqs.b[k_count.min(seqs.len()) - 1]);
    match branch {
        Branch::Infinity => (first, last),
        Branch::Zero => (last, first),
    }
}

/// `max F(ξ)/ξ^p` over geometrically spaced `ξ` in `window`.
pub fn limsup_proxy(nl: &Nonlinearity, p: f64, window: (f64, f64), exec: Execution) -> Result<f64> {
    let (lo, hi) = (window.0.min(window.1), window.0.max(window.1));
    if !(lo > 0.0) || !hi.is_finite() {
        return Err(Error::InvalidParameter(format!("limsup window must be positive, got {window:?}")));
    }
    Ok(exec
        .map_range(LIMSUP_SAMPLES, |i| {
            let xi = geometric(lo, hi, i, LIMSUP_SAMPLES);
            nl.primitive(xi).map(|big_f| big_f / xi.powf(p))
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max))
}

pub(crate) fn geometric(lo: f64, hi: f64, i: usize, count: usize) -> f64 {
    if i + 1 == count {
        return hi;
    }
    lo * (hi / lo).powf(i as f64 / (count - 1) as f64)
}

/// Dense sampling of `f` on `[lo, hi]`, with a few bisection steps on every
/// cell whose endpoints are close to zero from below.
fn max_on_interval(nl: &Nonlinearity, lo: f64, hi: f64) -> f64 {
    let step = (hi - lo) / SIGN_SAMPLES as f64;
    let xs: Vec<f64> = (0..=SIGN_SAMPLES)
        .map(|i| if i == SIGN_SAMPLES { hi } else { lo + step * i as f64 })
        .collect();
    let fs: Vec<f64> = xs.iter().map(|&x| nl.value(x)).collect();
    let scale = fs.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let near = 1e-9 * scale;
    let mut best = fs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for i in 0..SIGN_SAMPLES {
        if fs[i].max(fs[i + 1]) < -near {
            continue;
        }
        let (mut l, mut r) = (xs[i], xs[i + 1]);
        let (mut fl, mut fr) = (fs[i], fs[i + 1]);
        for _ in 0..SIGN_REFINEMENTS {
            let m = 0.5 * (l + r);
            let fm = nl.value(m);
            best = best.max(fm);
            if fl >= fr {
                r = m;
                fr = fm;
            } else {
                l = m;
                fl = fm;
            }
        }
    }
    best
}
