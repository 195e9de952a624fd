//! Trapezoidal test functions and the finite-index inequality tables behind
//! the multiplicity results.
//!
//! Three certificates are produced:
//!
//! * [`CertificateKind::PhiBound`]: for each `k`, the majorized left side
//!   `F(ξ_k) (∫q - ∫_{t0-γ/2}^{t0+γ/2} q)` against `(r_k - ‖v_k‖^p)/p` with
//!   `r_k = (b_k/c)^p`.
//! * [`CertificateKind::EnergyUnbounded`]: `E(w_k)` against
//!   `2μ̄γ q0 η_k^p (σ/(pγ^p) - h)` for growing plateaus `η_k`.
//! * [`CertificateKind::EnergyNegativeSmall`]: `E(w_k) < 0 = E(0)` with
//!   `‖w_k‖` shrinking to zero.

use serde::{Deserialize, Serialize};

use crate::coordinates::WeightFunction;
use crate::discretization::{norm_p, FEFunction, Functional, Mesh, DEFAULT_ELEMENTS};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::nonlinearity::{
    default_window, embedding_constant, geometric, growth_threshold, limsup_proxy, sigma, Branch, Nonlinearity,
    OscillationSequences,
};
use crate::quadrature;

/// Largest admissible plateau fraction for `w_k`.
pub const MAX_MU_BAR: f64 = 1.0 - 1e-6;
const MAXIMIZER_SAMPLES: usize = 10_000;
const PLATEAU_SAMPLES: usize = 100_000;

/// Trapezoid centred at `t0` with support `(t0 - γ, t0 + γ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TestFnParams {
    pub t0: f64,
    pub gamma: f64,
    /// Plateau height.
    pub plateau: f64,
    /// Plateau half-width as a fraction of `γ`; `None` means `1/2` (the
    /// shape of `v_k`).
    pub mu_bar: Option<f64>,
}

impl TestFnParams {
    pub fn new(t0: f64, gamma: f64, plateau: f64) -> Result<Self> {
        let params = TestFnParams {
            t0,
            gamma,
            plateau,
            mu_bar: None,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_mu_bar(mut self, mu_bar: f64) -> Result<Self> {
        if !(mu_bar > 0.0 && mu_bar <= MAX_MU_BAR) {
            return Err(Error::InvalidParameter(format!(
                "plateau fraction must lie in (0, {MAX_MU_BAR}], got {mu_bar}"
            )));
        }
        self.mu_bar = Some(mu_bar);
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.t0 - self.gamma > 0.0 && self.t0 + self.gamma < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "support ({}, {}) must lie inside (0, 1)",
                self.t0 - self.gamma,
                self.t0 + self.gamma
            )));
        }
        if !(self.plateau > 0.0 && self.plateau.is_finite()) {
            return Err(Error::InvalidParameter(format!("plateau must be positive, got {}", self.plateau)));
        }
        Ok(())
    }

    fn inner(&self, fraction: f64) -> f64 {
        fraction * self.gamma
    }

    fn build(&self, mesh: &Mesh, fraction: f64) -> Result<FEFunction> {
        self.validate()?;
        let (t0, gamma, inner) = (self.t0, self.gamma, self.inner(fraction));
        let mesh = mesh.with_breakpoints(&[t0 - gamma, t0 - inner, t0 + inner, t0 + gamma])?;
        let values = mesh
            .nodes()
            .iter()
            .map(|&t| self.plateau * ((gamma - (t - t0).abs()) / (gamma - inner)).clamp(0.0, 1.0))
            .collect();
        FEFunction::new(mesh, values)
    }
}

/// `v_k`: plateau on `(t0 - γ/2, t0 + γ/2)`. The mesh gains nodes at the four
/// kinks.
pub fn make_vk(params: &TestFnParams, mesh: &Mesh) -> Result<FEFunction> {
    params.build(mesh, 0.5)
}

/// `w_k`: plateau on `(t0 - μ̄γ, t0 + μ̄γ)`.
pub fn make_wk(params: &TestFnParams, mesh: &Mesh) -> Result<FEFunction> {
    let mu_bar = params
        .mu_bar
        .ok_or_else(|| Error::InvalidParameter("w_k needs a plateau fraction".into()))?;
    if !(mu_bar > 0.0 && mu_bar <= MAX_MU_BAR) {
        return Err(Error::InvalidParameter(format!("plateau fraction {mu_bar} outside (0, 1)")));
    }
    params.build(mesh, mu_bar)
}

/// `‖v_k‖^p = 2^p ξ^p / γ^{p-1}`.
pub fn vk_norm_p(p: f64, xi: f64, gamma: f64) -> f64 {
    2.0_f64.powf(p) * xi.powf(p) / gamma.powf(p - 1.0)
}

/// `‖w_k‖^p = 2 η^p / (γ^{p-1} (1 - μ̄)^{p-1})`.
pub fn wk_norm_p(p: f64, eta: f64, gamma: f64, mu_bar: f64) -> f64 {
    2.0 * eta.powf(p) / (gamma.powf(p - 1.0) * (1.0 - mu_bar).powf(p - 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Default,
    Override,
    Fixed,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Resolved {
    pub value: f64,
    pub source: Provenance,
}

/// User choices for the certificates; `None` selects the default.
#[derive(Clone, Debug)]
pub struct CertifyOptions {
    pub k_count: usize,
    pub gamma: Option<f64>,
    pub h: Option<f64>,
    /// Window for the limsup proxy that seeds the default `h`.
    pub window: Option<(f64, f64)>,
    pub elements: usize,
    pub exec: Execution,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            k_count: 5,
            gamma: None,
            h: None,
            window: None,
            elements: DEFAULT_ELEMENTS,
            exec: Execution::default(),
        }
    }
}

/// Constants shared by all three certificates.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertifySetup {
    pub branch: Branch,
    pub p: f64,
    pub q0: f64,
    pub sigma: f64,
    pub mu_bar: f64,
    pub threshold: f64,
    pub embedding_constant: f64,
    pub limsup_proxy: f64,
    pub k_count: usize,
    pub elements: usize,
    pub t0: Resolved,
    /// Absent when no admissible `h` exists (proxy at or below threshold).
    pub h: Option<Resolved>,
    pub gamma: Resolved,
    /// `(σ/(p h))^{1/p}`; `γ` must exceed it.
    pub gamma_lower: Option<f64>,
    #[serde(skip)]
    pub exec: Execution,
}

impl CertifySetup {
    /// Picks `t0 = 1/2`, then `h` strictly above the threshold and `γ`
    /// strictly inside `((σ/(ph))^{1/p}, 1/2)`.
    pub fn resolve(nl: &Nonlinearity, p: f64, q0: f64, branch: Branch, options: &CertifyOptions) -> Result<Self> {
        let seqs = sequences(nl, options.k_count)?;
        let sig = sigma(p, q0);
        let threshold = growth_threshold(p, q0);
        let window = options
            .window
            .unwrap_or_else(|| default_window(seqs, options.k_count, branch));
        let proxy = limsup_proxy(nl, p, window, options.exec)?;
        let t0: f64 = 0.5;
        let dist = t0.min(1.0 - t0);

        let h = match options.h {
            Some(h) => {
                if !(h > threshold && h.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "h = {h} must exceed the threshold {threshold}"
                    )));
                }
                Some(Resolved {
                    value: h,
                    source: Provenance::Override,
                })
            }
            None if proxy > threshold && proxy.is_finite() => Some(Resolved {
                value: (threshold * proxy).sqrt(),
                source: Provenance::Default,
            }),
            None => None,
        };
        let gamma_lower = h.map(|h| (sig.sigma / (p * h.value)).powf(1.0 / p));
        let gamma = match (options.gamma, gamma_lower) {
            (Some(g), lower) => {
                if let Some(lower) = lower {
                    if !(g > lower) {
                        return Err(Error::InvalidParameter(format!(
                            "gamma = {g} must exceed (σ/(p h))^(1/p) = {lower}"
                        )));
                    }
                }
                if !(g > 0.0 && g < dist) {
                    return Err(Error::InvalidParameter(format!("gamma = {g} must lie in (0, {dist})")));
                }
                Resolved {
                    value: g,
                    source: Provenance::Override,
                }
            }
            (None, Some(lower)) => Resolved {
                value: (lower * dist).sqrt(),
                source: Provenance::Default,
            },
            (None, None) => {
                return Err(Error::InvalidParameter(format!(
                    "no admissible h (limsup proxy {proxy} <= threshold {threshold}); supply gamma"
                )))
            }
        };
        if options.elements < 4 {
            return Err(Error::Mesh(format!("need at least 4 elements, got {}", options.elements)));
        }
        Ok(CertifySetup {
            branch,
            p,
            q0,
            sigma: sig.sigma,
            mu_bar: sig.mu_bar,
            threshold,
            embedding_constant: embedding_constant(p),
            limsup_proxy: proxy,
            k_count: options.k_count,
            elements: options.elements,
            t0: Resolved {
                value: t0,
                source: Provenance::Fixed,
            },
            h,
            gamma,
            gamma_lower,
            exec: options.exec,
        })
    }

    fn require_h(&self) -> Result<f64> {
        self.h
            .map(|h| h.value)
            .ok_or_else(|| Error::InvalidParameter("energy certificates need an admissible h".into()))
    }
}

fn sequences(nl: &Nonlinearity, k_count: usize) -> Result<&OscillationSequences> {
    let seqs = nl.sequences().ok_or(Error::MissingSequences)?;
    if k_count == 0 || k_count > seqs.len() {
        return Err(Error::InvalidParameter(format!(
            "K = {k_count} outside 1..={}",
            seqs.len()
        )));
    }
    Ok(seqs)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateKind {
    PhiBound,
    EnergyUnbounded,
    EnergyNegativeSmall,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhiBoundRow {
    pub k: usize,
    pub a_k: f64,
    pub b_k: f64,
    /// Maximizer of `F` on `[0, a_k]`.
    pub xi: f64,
    pub f_xi: f64,
    /// Sampled `max F` on `[0, b_k]`; equals `f_xi` under the sign hypothesis.
    pub max_f_to_b: f64,
    pub r_k: f64,
    pub r_over_xi_p: f64,
    pub vk_norm_p: f64,
    pub vk_norm_p_discrete: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    /// `b_k / a_k` next to `(2c/γ) γ^{1/p}`; informational.
    pub ratio_ba: f64,
    pub ratio_display: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyRow {
    pub k: usize,
    pub window: (f64, f64),
    pub eta: f64,
    pub ratio: f64,
    pub wk_norm_p: f64,
    pub wk_norm_p_discrete: f64,
    pub phi: f64,
    pub energy: f64,
    /// `2μ̄γ q0 η^p (σ/(pγ^p) - h)`.
    pub bound: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Rows {
    PhiBound(Vec<PhiBoundRow>),
    Energy(Vec<EnergyRow>),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub kind: CertificateKind,
    pub setup: CertifySetup,
    pub rows: Rows,
    /// First index from which every later row holds.
    pub k_star: Option<usize>,
    /// Strict monotonicity across `k >= 2` of the quantity the certificate
    /// tracks (`r_k/ξ_k^p` increasing, `E(w_k)` decreasing, `‖w_k‖`
    /// decreasing).
    pub monotone: bool,
    /// `E(0)`, for the small-solution certificate.
    pub baseline_energy: Option<f64>,
    pub verdict: bool,
}

impl Certificate {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn first_stable(holds: &[bool]) -> Option<usize> {
    let tail = holds.iter().rev().take_while(|&&h| h).count();
    (tail > 0).then(|| holds.len() - tail + 1)
}

/// Largest maximizer of `F` on `[0, hi]` over a uniform sample, polished by
/// golden-section search around the best sample.
fn maximize_primitive(nl: &Nonlinearity, hi: f64) -> Result<(f64, f64)> {
    if !(hi > 0.0 && hi.is_finite()) {
        return Err(Error::MaximizerSearch { hi });
    }
    let xs: Vec<f64> = (0..=MAXIMIZER_SAMPLES)
        .map(|i| if i == MAXIMIZER_SAMPLES { hi } else { hi * i as f64 / MAXIMIZER_SAMPLES as f64 })
        .collect();
    let fs = xs.iter().map(|&x| nl.primitive(x)).collect::<Result<Vec<_>>>()?;
    if fs.iter().any(|v| !v.is_finite()) {
        return Err(Error::MaximizerSearch { hi });
    }
    let (mut best_i, mut best) = (0, f64::NEG_INFINITY);
    for (i, &v) in fs.iter().enumerate() {
        if v >= best {
            best = v;
            best_i = i;
        }
    }
    let lo = xs[best_i.saturating_sub(1)];
    let up = xs[(best_i + 1).min(MAXIMIZER_SAMPLES)];
    let (x, v) = golden_max(|x| nl.primitive(x), lo, up)?;
    if v > best {
        Ok((x, v))
    } else {
        Ok((xs[best_i], best))
    }
}

fn golden_max(f: impl Fn(f64) -> Result<f64>, mut lo: f64, mut hi: f64) -> Result<(f64, f64)> {
    let ratio = 0.5 * (5.0_f64.sqrt() - 1.0);
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    for _ in 0..80 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1)?;
        }
    }
    Ok(if f1 >= f2 { (x1, f1) } else { (x2, f2) })
}

/// Compares the majorized supremum gap with `(r_k - ‖v_k‖^p)/p` for
/// `k = 1..=K`.
pub fn check_phi_bound(nl: &Nonlinearity, weight: &WeightFunction, setup: &CertifySetup) -> Result<Certificate> {
    let seqs = sequences(nl, setup.k_count)?;
    let p = setup.p;
    let (t0, gamma) = (setup.t0.value, setup.gamma.value);
    let c = setup.embedding_constant;
    let q = |t: f64| weight.eval(t);
    let total = quadrature::adaptive(&q, 0.0, 1.0, 1e-13)?;
    let core = quadrature::adaptive(&q, t0 - 0.5 * gamma, t0 + 0.5 * gamma, 1e-13)?;
    let mesh = Mesh::uniform(setup.elements)?;

    let rows = setup
        .exec
        .map_range(setup.k_count, |i| -> Result<PhiBoundRow> {
            let (a_k, b_k) = (seqs.a[i], seqs.b[i]);
            let (xi, f_xi) = maximize_primitive(nl, a_k)?;
            let (_, max_f_to_b) = maximize_primitive(nl, b_k)?;
            let r_k = (b_k / c).powf(p);
            let closed = vk_norm_p(p, xi, gamma);
            let discrete = if xi > 0.0 {
                norm_p(&make_vk(&TestFnParams::new(t0, gamma, xi)?, &mesh)?, p)
            } else {
                0.0
            };
            let lhs = f_xi * (total - core);
            let rhs = (r_k - closed) / p;
            Ok(PhiBoundRow {
                k: i + 1,
                a_k,
                b_k,
                xi,
                f_xi,
                max_f_to_b,
                r_k,
                r_over_xi_p: r_k / xi.powf(p),
                vk_norm_p: closed,
                vk_norm_p_discrete: discrete,
                lhs,
                rhs,
                margin: rhs - lhs,
                ratio_ba: b_k / a_k,
                ratio_display: 2.0 * c / gamma * gamma.powf(1.0 / p),
                holds: lhs < rhs && closed < r_k,
            })
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let holds: Vec<bool> = rows.iter().map(|r| r.holds).collect();
    let k_star = first_stable(&holds);
    let monotone = rows.windows(2).skip(1).all(|w| w[1].r_over_xi_p > w[0].r_over_xi_p);
    Ok(Certificate {
        kind: CertificateKind::PhiBound,
        setup: setup.clone(),
        rows: Rows::PhiBound(rows),
        verdict: k_star.is_some(),
        k_star,
        monotone,
        baseline_energy: None,
    })
}

fn energy_row(
    nl: &Nonlinearity,
    weight: &WeightFunction,
    setup: &CertifySetup,
    k: usize,
    window: (f64, f64),
    eta: f64,
    h: f64,
) -> Result<EnergyRow> {
    let p = setup.p;
    let (gamma, mu_bar) = (setup.gamma.value, setup.mu_bar);
    let params = TestFnParams::new(setup.t0.value, gamma, eta)?.with_mu_bar(mu_bar)?;
    let w = make_wk(&params, &Mesh::uniform(setup.elements)?)?;
    let energy = Functional::new(p, weight, nl).energy(&w)?;
    let bound = 2.0 * mu_bar * gamma * setup.q0 * eta.powf(p) * (setup.sigma / (p * gamma.powf(p)) - h);
    Ok(EnergyRow {
        k,
        window,
        eta,
        ratio: nl.primitive(eta)? / eta.powf(p),
        wk_norm_p: wk_norm_p(p, eta, gamma, mu_bar),
        wk_norm_p_discrete: energy.psi,
        phi: energy.phi,
        energy: energy.energy,
        bound,
        holds: energy.energy <= bound && bound < 0.0,
    })
}

fn ratio_exceeds(nl: &Nonlinearity, p: f64, h: f64, x: f64) -> Result<bool> {
    Ok(nl.primitive(x)? / x.powf(p) > h)
}

/// Witnesses `E(w_k) -> -∞` with plateaus `η_k >= max(k, b_{k-1})`, each the
/// first sample of `[max(k, b_{k-1}), 10 b_K]` where `F(η)/η^p > h`.
pub fn check_energy_unbounded(nl: &Nonlinearity, weight: &WeightFunction, setup: &CertifySetup) -> Result<Certificate> {
    let seqs = sequences(nl, setup.k_count)?;
    let h = setup.require_h()?;
    let p = setup.p;
    let top = 10.0 * seqs.b[setup.k_count - 1];
    let rows = setup
        .exec
        .map_range(setup.k_count, |i| -> Result<EnergyRow> {
            let k = i + 1;
            let lo = (k as f64).max(if i == 0 { 0.0 } else { seqs.b[i - 1] });
            if !(lo < top) {
                return Err(Error::NoPlateau { k, lo, hi: top, h });
            }
            let mut eta = None;
            for j in 0..PLATEAU_SAMPLES {
                let x = geometric(lo, top, j, PLATEAU_SAMPLES);
                if ratio_exceeds(nl, p, h, x)? {
                    eta = Some(x);
                    break;
                }
            }
            let eta = eta.ok_or(Error::NoPlateau { k, lo, hi: top, h })?;
            energy_row(nl, weight, setup, k, (lo, top), eta, h)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let holds: Vec<bool> = rows.iter().map(|r| r.holds).collect();
    let monotone = rows.windows(2).skip(1).all(|w| w[1].energy < w[0].energy);
    let verdict = monotone && holds.iter().skip(1).all(|&h| h);
    Ok(Certificate {
        kind: CertificateKind::EnergyUnbounded,
        setup: setup.clone(),
        k_star: first_stable(&holds),
        rows: Rows::Energy(rows),
        monotone,
        baseline_energy: None,
        verdict,
    })
}

/// Witnesses negative energy arbitrarily close to zero: `η_k` is the largest
/// sample of `[a_K/10, min(1/k, b_k)]` with `F(η)/η^p > h`.
pub fn check_small_branch(nl: &Nonlinearity, weight: &WeightFunction, setup: &CertifySetup) -> Result<Certificate> {
    let seqs = sequences(nl, setup.k_count)?;
    let h = setup.require_h()?;
    let p = setup.p;
    let bottom = seqs.a[setup.k_count - 1] / 10.0;
    let baseline = Functional::new(p, weight, nl)
        .energy(&FEFunction::zero(Mesh::uniform(setup.elements)?))?
        .energy;
    let rows = setup
        .exec
        .map_range(setup.k_count, |i| -> Result<EnergyRow> {
            let k = i + 1;
            let hi = (1.0 / k as f64).min(seqs.b[i]);
            if !(bottom < hi) {
                return Err(Error::NoPlateau { k, lo: bottom, hi, h });
            }
            let mut eta = None;
            for j in (0..PLATEAU_SAMPLES).rev() {
                let x = geometric(bottom, hi, j, PLATEAU_SAMPLES);
                if ratio_exceeds(nl, p, h, x)? {
                    eta = Some(x);
                    break;
                }
            }
            let eta = eta.ok_or(Error::NoPlateau { k, lo: bottom, hi, h })?;
            let mut row = energy_row(nl, weight, setup, k, (bottom, hi), eta, h)?;
            row.holds = row.energy < baseline;
            Ok(row)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let holds: Vec<bool> = rows.iter().map(|r| r.holds).collect();
    let monotone = rows.windows(2).all(|w| w[1].wk_norm_p < w[0].wk_norm_p);
    let verdict = monotone && holds.iter().all(|&h| h);
    Ok(Certificate {
        kind: CertificateKind::EnergyNegativeSmall,
        setup: setup.clone(),
        k_star: first_stable(&holds),
        rows: Rows::Energy(rows),
        monotone,
        baseline_energy: Some(baseline),
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coordinates::Profile;
    use crate::nonlinearity::{build_oscillating_f, SequenceLayout};

    /// Independent norm: sum of |slope|^p h over the kinks of the
    /// trapezoid, evaluated directly from its four corner points.
    fn corner_norm(p: f64, t0: f64, gamma: f64, inner: f64, height: f64) -> f64 {
        let corners = [(t0 - gamma, 0.0), (t0 - inner, height), (t0 + inner, height), (t0 + gamma, 0.0)];
        corners
            .windows(2)
            .map(|w| {
                let width = w[1].0 - w[0].0;
                ((w[1].1 - w[0].1) / width).abs().powf(p) * width
            })
            .sum()
    }

    #[test]
    fn vk_norm_example() {
        let params = TestFnParams::new(0.5, 0.25, 1.0).unwrap();
        let v = make_vk(&params, &Mesh::uniform(64).unwrap()).unwrap();
        assert!((norm_p(&v, 2.0) - 16.0).abs() < 1e-12);
        assert_eq!(vk_norm_p(2.0, 1.0, 0.25), 16.0);
        assert_eq!(crate::discretization::sup_norm(&v), 1.0);
        assert_eq!(v.value(0.25), 0.0);
        assert_eq!(v.value(0.75), 0.0);
        assert_eq!(v.value(0.5), 1.0);
    }

    #[test]
    fn wk_norm_example() {
        let params = TestFnParams::new(0.5, 0.25, 1.0).unwrap().with_mu_bar(0.5).unwrap();
        let w = make_wk(&params, &Mesh::uniform(100).unwrap()).unwrap();
        assert!((norm_p(&w, 2.0) - 16.0).abs() < 1e-12);
        assert!((corner_norm(2.0, 0.5, 0.25, 0.125, 1.0) - 16.0).abs() < 1e-12);
        assert_eq!(crate::discretization::sup_norm(&w), 1.0);
    }

    #[test]
    fn closed_forms_match_corner_oracle() {
        for &p in &[2.0, 2.5, 3.0] {
            for &(t0, gamma, height, mu) in &[(0.5, 0.3, 2.0, 0.4), (0.4, 0.1, 0.7, 0.9), (0.6, 0.35, 5.0, 1.0 / p)] {
                let v = corner_norm(p, t0, gamma, 0.5 * gamma, height);
                assert!((vk_norm_p(p, height, gamma) - v).abs() < 1e-12 * v);
                let w = corner_norm(p, t0, gamma, mu * gamma, height);
                assert!((wk_norm_p(p, height, gamma, mu) - w).abs() < 1e-12 * w);
            }
        }
    }

    #[test]
    fn degenerate_parameters_rejected() {
        assert!(TestFnParams::new(0.5, 0.5, 1.0).is_err());
        assert!(TestFnParams::new(0.2, 0.25, 1.0).is_err());
        assert!(TestFnParams::new(0.5, 0.25, 0.0).is_err());
        let params = TestFnParams::new(0.5, 0.25, 1.0).unwrap();
        assert!(params.with_mu_bar(1.0 - 1e-7).is_err());
        assert!(params.with_mu_bar(0.0).is_err());
        assert!(params.with_mu_bar(1.0 - 1e-6).is_ok());
        assert!(make_wk(&params, &Mesh::uniform(8).unwrap()).is_err());
    }

    #[test]
    fn first_stable_index() {
        assert_eq!(first_stable(&[false, true, true]), Some(2));
        assert_eq!(first_stable(&[true, false, true]), Some(3));
        assert_eq!(first_stable(&[true, true, false]), None);
        assert_eq!(first_stable(&[true]), Some(1));
    }

    #[test]
    fn golden_section_finds_interior_peak() {
        let (x, v) = golden_max(|x| Ok(-(x - 0.3) * (x - 0.3)), 0.0, 1.0).unwrap();
        assert!((x - 0.3).abs() < 1e-7);
        assert!(v <= 0.0);
    }

    fn built_in() -> (Nonlinearity, WeightFunction, f64) {
        let map = crate::coordinates::CoordinateMap::build(crate::coordinates::AnnulusSpec::new(3, 2.0, 1.0, 2.0).unwrap())
            .unwrap();
        let weight = map.weight();
        let q0 = weight.q0;
        let nl = build_oscillating_f(2.0, q0, 1.5 * growth_threshold(2.0, q0), 5, SequenceLayout::infinity()).unwrap();
        (nl, weight, q0)
    }

    #[test]
    fn gamma_and_h_validation() {
        let (nl, _, q0) = built_in();
        let setup = CertifySetup::resolve(&nl, 2.0, q0, Branch::Infinity, &CertifyOptions::default()).unwrap();
        let h = setup.h.unwrap();
        assert_eq!(h.source, Provenance::Default);
        assert!(h.value > setup.threshold && h.value < setup.limsup_proxy);
        let lower = setup.gamma_lower.unwrap();
        assert!(setup.gamma.value > lower && setup.gamma.value < 0.5);
        assert!(setup.sigma / (2.0 * setup.gamma.value.powi(2)) - h.value < 0.0);

        let at_lower = CertifyOptions {
            gamma: Some(lower),
            ..Default::default()
        };
        assert!(CertifySetup::resolve(&nl, 2.0, q0, Branch::Infinity, &at_lower).is_err());
        let low_h = CertifyOptions {
            h: Some(setup.threshold),
            ..Default::default()
        };
        assert!(CertifySetup::resolve(&nl, 2.0, q0, Branch::Infinity, &low_h).is_err());
        let too_wide = CertifyOptions {
            gamma: Some(0.5),
            ..Default::default()
        };
        assert!(CertifySetup::resolve(&nl, 2.0, q0, Branch::Infinity, &too_wide).is_err());
    }

    #[test]
    fn zero_forcing_phi_bound_holds() {
        let seqs = OscillationSequences::new(vec![1.0, 4.0, 32.0, 512.0], vec![2.0, 16.0, 256.0, 8192.0]).unwrap();
        let nl = Nonlinearity::zero().with_sequences(seqs);
        let weight = WeightFunction::constant(1.0).unwrap();
        let options = CertifyOptions {
            k_count: 4,
            gamma: Some(0.25),
            elements: 64,
            ..Default::default()
        };
        let setup = CertifySetup::resolve(&nl, 2.0, 1.0, Branch::Infinity, &options).unwrap();
        assert!(setup.h.is_none());
        let cert = check_phi_bound(&nl, &weight, &setup).unwrap();
        assert!(cert.verdict);
        let Rows::PhiBound(rows) = &cert.rows else { panic!() };
        for row in rows.iter().filter(|r| r.r_k > r.vk_norm_p) {
            assert_eq!(row.lhs, 0.0);
            assert!(row.holds);
        }
        assert!(check_energy_unbounded(&nl, &weight, &setup).is_err());
    }

    #[test]
    fn missing_sequences() {
        let options = CertifyOptions::default();
        assert!(matches!(
            CertifySetup::resolve(&Nonlinearity::linear(1.0), 2.0, 1.0, Branch::Infinity, &options),
            Err(Error::MissingSequences)
        ));
    }
}
