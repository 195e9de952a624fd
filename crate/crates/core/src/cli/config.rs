//! TOML run configuration. Every table rejects unknown keys.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::certificates::CertifyOptions;
use crate::coordinates::{AnnulusSpec, CoordinateMap};
use crate::discretization::DEFAULT_ELEMENTS;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::nonlinearity::{
    build_oscillating_f, build_small_oscillating_f, growth_threshold, Branch, Nonlinearity, OscillationSequences,
    PolynomialPiece, SequenceLayout,
};
use crate::solver::{DescentOptions, Spacing, SweepOptions};

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    pub nonlinearity: NonlinearityConfig,
    #[serde(default)]
    pub mesh: MeshConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub certify: CertifyConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub dimension: u32,
    pub p: f64,
    pub a: f64,
    pub b: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Built-in family oscillating at infinity.
    Oscillating,
    /// Built-in family oscillating at zero.
    SmallOscillating,
    Zero,
    Linear,
    Piecewise,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearityConfig {
    pub family: Family,
    /// `F(a_k) / a_k^p` for the built-in families; defaults to 1.5 times the
    /// growth threshold.
    pub growth: Option<f64>,
    pub k_max: Option<usize>,
    pub base: Option<f64>,
    pub ratio: Option<f64>,
    pub gap: Option<f64>,
    pub height_budget: Option<f64>,
    /// `f(v) = slope · v` for `family = "linear"`.
    pub slope: Option<f64>,
    pub pieces: Option<Vec<PieceConfig>>,
    /// Explicit oscillation sequences; not allowed for the built-in families.
    pub a: Option<Vec<f64>>,
    pub b: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceConfig {
    pub lo: f64,
    pub hi: f64,
    /// Monomial coefficients in `(x - lo)`.
    pub coeffs: Vec<f64>,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    pub elements: usize,
}

impl Default for MeshConfig {
    fn default() -> Self {
        MeshConfig {
            elements: DEFAULT_ELEMENTS,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub s_lo: f64,
    pub s_hi: f64,
    pub grid: usize,
    pub spacing: Spacing,
    pub refine: usize,
    pub n_steps: usize,
    pub root_tol: f64,
    pub accept_residual: f64,
    pub divergence_bound: Option<f64>,
    pub dedupe_tol: f64,
    pub descent: bool,
    pub descent_tol: f64,
    pub descent_max_iter: usize,
    /// Points of the uniform r-grid used for the radial residual and the
    /// `r,u` export.
    pub radial_points: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let sweep = SweepOptions::default();
        let descent = DescentOptions::default();
        SolverConfig {
            s_lo: sweep.s_lo,
            s_hi: sweep.s_hi,
            grid: sweep.grid,
            spacing: sweep.spacing,
            refine: sweep.refine,
            n_steps: sweep.n_steps,
            root_tol: sweep.root_tol,
            accept_residual: sweep.accept_residual,
            divergence_bound: None,
            dedupe_tol: 1e-3,
            descent: true,
            descent_tol: descent.tol,
            descent_max_iter: descent.max_iter,
            radial_points: 4096,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CertifyConfig {
    pub k: usize,
    pub branch: Option<Branch>,
    pub gamma: Option<f64>,
    pub h: Option<f64>,
    pub window: Option<[f64; 2]>,
    pub elements: usize,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        CertifyConfig {
            k: 5,
            branch: None,
            gamma: None,
            h: None,
            window: None,
            elements: DEFAULT_ELEMENTS,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("out") }
    }
}

/// Leading `unknown field` messages from serde already name the key; this
/// keeps them and prefixes the file.
pub fn load(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse(text: &str) -> Result<RunConfig> {
    let config: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
    config.validate()?;
    Ok(config)
}

fn range(what: &str, ok: bool, detail: impl std::fmt::Display) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Config(format!("{what}: {detail}")))
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.spec()?;
        let nl = &self.nonlinearity;
        let builtin = matches!(nl.family, Family::Oscillating | Family::SmallOscillating);
        let unused = |key: &str, present: bool| -> Result<()> {
            range(
                &format!("nonlinearity.{key}"),
                !present,
                format_args!("not used by family {:?}", nl.family),
            )
        };
        if !builtin {
            for (key, present) in [
                ("growth", nl.growth.is_some()),
                ("k_max", nl.k_max.is_some()),
                ("base", nl.base.is_some()),
                ("ratio", nl.ratio.is_some()),
                ("gap", nl.gap.is_some()),
                ("height_budget", nl.height_budget.is_some()),
            ] {
                unused(key, present)?;
            }
        } else {
            unused("a", nl.a.is_some())?;
            unused("b", nl.b.is_some())?;
        }
        unused("slope", nl.family != Family::Linear && nl.slope.is_some())?;
        unused("pieces", nl.family != Family::Piecewise && nl.pieces.is_some())?;
        if nl.family == Family::Linear {
            range("nonlinearity.slope", nl.slope.is_some(), "required for family linear")?;
        }
        if nl.family == Family::Piecewise {
            range("nonlinearity.pieces", nl.pieces.is_some(), "required for family piecewise")?;
        }
        range("nonlinearity.a/b", nl.a.is_some() == nl.b.is_some(), "give both sequences or neither")?;
        if let Some(k) = nl.k_max {
            range("nonlinearity.k_max", (1..=64).contains(&k), format_args!("{k} outside 1..=64"))?;
        }

        range("mesh.elements", (4..=1 << 20).contains(&self.mesh.elements), self.mesh.elements)?;

        let s = &self.solver;
        range("solver.s_lo/s_hi", s.s_lo < s.s_hi && s.s_lo.is_finite() && s.s_hi.is_finite(), "need s_lo < s_hi")?;
        range("solver.s_lo", s.spacing != Spacing::Log || s.s_lo > 0.0, "log spacing needs s_lo > 0")?;
        range("solver.grid", s.grid >= 16, format_args!("{} below 16", s.grid))?;
        range("solver.n_steps", s.n_steps >= 64, format_args!("{} below 64", s.n_steps))?;
        range("solver.root_tol", s.root_tol > 0.0, s.root_tol)?;
        range("solver.accept_residual", s.accept_residual > 0.0, s.accept_residual)?;
        range("solver.dedupe_tol", s.dedupe_tol > 0.0, s.dedupe_tol)?;
        range("solver.descent_tol", s.descent_tol > 0.0, s.descent_tol)?;
        range("solver.radial_points", s.radial_points >= 8, s.radial_points)?;
        if let Some(bound) = s.divergence_bound {
            range("solver.divergence_bound", bound > 0.0, bound)?;
        }

        let c = &self.certify;
        range("certify.k", c.k >= 3, format_args!("K = {} but at least 3 indices are needed", c.k))?;
        range("certify.elements", c.elements >= 4, c.elements)?;
        if let Some([lo, hi]) = c.window {
            range("certify.window", lo > 0.0 && lo < hi, format_args!("[{lo}, {hi}]"))?;
        }
        Ok(())
    }

    pub fn spec(&self) -> Result<AnnulusSpec> {
        let p = &self.problem;
        AnnulusSpec::new(p.dimension, p.p, p.a, p.b).map_err(|e| Error::Config(format!("problem: {e}")))
    }

    pub fn map(&self) -> Result<CoordinateMap> {
        CoordinateMap::build(self.spec()?)
    }

    /// Branch for `check`/`certify`: explicit, or inferred from the family.
    pub fn branch(&self) -> Branch {
        self.certify.branch.unwrap_or(match self.nonlinearity.family {
            Family::SmallOscillating => Branch::Zero,
            _ => Branch::Infinity,
        })
    }

    pub fn k_max(&self) -> usize {
        self.nonlinearity.k_max.unwrap_or(self.certify.k.max(5))
    }

    /// Growth factor of the built-in families.
    pub fn growth(&self, q0: f64) -> f64 {
        self.nonlinearity
            .growth
            .unwrap_or_else(|| 1.5 * growth_threshold(self.problem.p, q0))
    }

    pub fn build_nonlinearity(&self, q0: f64) -> Result<Nonlinearity> {
        let cfg = &self.nonlinearity;
        let p = self.problem.p;
        let layout = |default: SequenceLayout| SequenceLayout {
            base: cfg.base.unwrap_or(default.base),
            ratio: cfg.ratio.unwrap_or(default.ratio),
            gap: cfg.gap.unwrap_or(default.gap),
            height_budget: cfg.height_budget.unwrap_or(default.height_budget),
        };
        let nl = match cfg.family {
            Family::Oscillating => {
                return build_oscillating_f(p, q0, self.growth(q0), self.k_max(), layout(SequenceLayout::infinity()))
            }
            Family::SmallOscillating => {
                return build_small_oscillating_f(p, q0, self.growth(q0), self.k_max(), layout(SequenceLayout::zero()))
            }
            Family::Zero => Nonlinearity::zero(),
            Family::Linear => Nonlinearity::linear(cfg.slope.unwrap_or_default()),
            Family::Piecewise => Nonlinearity::piecewise(
                cfg.pieces
                    .iter()
                    .flatten()
                    .map(|pc| PolynomialPiece {
                        lo: pc.lo,
                        hi: pc.hi,
                        coeffs: pc.coeffs.clone(),
                    })
                    .collect(),
            )?,
        };
        Ok(match (&cfg.a, &cfg.b) {
            (Some(a), Some(b)) => nl.with_sequences(OscillationSequences::new(a.clone(), b.clone())?),
            _ => nl,
        })
    }

    pub fn sweep_options(&self, exec: Execution) -> SweepOptions {
        let s = &self.solver;
        SweepOptions {
            s_lo: s.s_lo,
            s_hi: s.s_hi,
            grid: s.grid,
            spacing: s.spacing,
            refine: s.refine,
            n_steps: s.n_steps,
            root_tol: s.root_tol,
            elements: self.mesh.elements,
            accept_residual: s.accept_residual,
            divergence_bound: s.divergence_bound,
            exec,
            ..SweepOptions::default()
        }
    }

    pub fn descent_options(&self, exec: Execution) -> Option<DescentOptions> {
        let s = &self.solver;
        s.descent.then(|| DescentOptions {
            tol: s.descent_tol,
            max_iter: s.descent_max_iter,
            exec,
        })
    }

    pub fn certify_options(&self, exec: Execution) -> CertifyOptions {
        let c = &self.certify;
        CertifyOptions {
            k_count: c.k,
            gamma: c.gamma,
            h: c.h,
            window: c.window.map(|[lo, hi]| (lo, hi)),
            elements: c.elements,
            exec,
        }
    }
}
