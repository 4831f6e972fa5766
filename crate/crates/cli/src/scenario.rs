//! Scenario configuration: TOML schema, validation with defaults echoed
//! back, and the canonical hash identifying a run directory.
//!
//! Unknown keys fail closed. Constraint violations report the offending
//! line where a span is available.

use std::path::Path;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toml::Spanned;

use vortexlab::curve::{build_curve, CurveSpec, PlanarCurve};
use vortexlab::domain::{BoundaryDatum, DomainSpec, StarDomain};
use vortexlab::expr::Expr;
use vortexlab::potential::PotentialW;
use vortexlab::solver::InitStrategy;
use vortexlab::vec2::Vec2;
use vortexlab::Real;

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub curve: CurveConf,
    pub potential: PotentialConf,
    pub domain: DomainConf,
    pub boundary: BoundaryConf,
    #[serde(default)]
    pub solver: SolverConf,
    pub sweep: SweepConf,
    #[serde(default)]
    pub analysis: AnalysisConf,
    #[serde(default)]
    pub output: OutputConf,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CurveConf {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cos: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sin: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConf {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<String>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConf {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<String>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryConf {
    pub degree: i32,
    #[serde(default = "default_eta0")]
    pub eta0: String,
}

fn default_eta0() -> String {
    "0".into()
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConf {
    #[serde(default = "default_dt")]
    pub dt: DtSpec,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_init")]
    pub init: String,
    /// Newton refinement after the flow phase.
    #[serde(default = "default_true")]
    pub newton: bool,
    #[serde(default = "default_lin_tol")]
    pub lin_tol: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
}

impl Default for SolverConf {
    fn default() -> Self {
        toml::from_str("").expect("empty solver section has defaults")
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged)]
pub enum DtSpec {
    Auto(String),
    Value(f64),
}

fn default_dt() -> DtSpec {
    DtSpec::Auto("auto".into())
}
fn default_tol() -> f64 {
    1e-8
}
fn default_max_iters() -> usize {
    200_000
}
fn default_init() -> String {
    "canonical".into()
}
fn default_true() -> bool {
    true
}
fn default_lin_tol() -> f64 {
    1e-8
}
fn default_amplitude() -> f64 {
    0.1
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConf {
    pub eps: Spanned<Vec<f64>>,
    #[serde(default = "default_grid")]
    pub grid: Vec<usize>,
    #[serde(default = "default_true")]
    pub warm_start: bool,
}

fn default_grid() -> Vec<usize> {
    vec![256]
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConf {
    /// Enabled summary checks; empty means every applicable check.
    #[serde(default)]
    pub checks: Vec<String>,
    #[serde(default = "default_mass_radius")]
    pub mass_radius: f64,
    /// Far-set threshold; defaults to half of the potential's delta1.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta2: Option<f64>,
    /// Bad-disc multiplier; defaults to the measured automatic choice,
    /// shared across the sweep.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default = "default_reference_grid")]
    pub reference_grid: usize,
    /// Interior margin excluded from sup-norm comparisons (the cut-cell
    /// boundary layer is first-order).
    #[serde(default = "default_margin")]
    pub compare_margin: f64,
}

impl Default for AnalysisConf {
    fn default() -> Self {
        toml::from_str("").expect("empty analysis section has defaults")
    }
}

fn default_mass_radius() -> f64 {
    0.3
}
fn default_reference_grid() -> usize {
    512
}
fn default_margin() -> f64 {
    0.05
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConf {
    #[serde(default = "default_out_dir")]
    pub dir: String,
    #[serde(default = "default_true")]
    pub svg: bool,
    #[serde(default = "default_true")]
    pub checkpoints: bool,
}

impl Default for OutputConf {
    fn default() -> Self {
        toml::from_str("").expect("empty output section has defaults")
    }
}

fn default_out_dir() -> String {
    "out".into()
}

/// Fully validated scenario with built objects.
pub struct Prepared {
    pub scenario: Scenario,
    pub curve: Arc<PlanarCurve<Real>>,
    pub potential: Arc<PotentialW<Real>>,
    pub domain: Arc<StarDomain<Real>>,
    pub datum: Arc<BoundaryDatum<Real>>,
    pub warnings: Vec<String>,
}

fn line_of(src: &str, byte: usize) -> usize {
    src[..byte.min(src.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

pub fn parse_scenario(path: &Path) -> Result<Prepared> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading scenario {}", path.display()))?;
    parse_scenario_str(&text)
}

pub fn parse_scenario_str(text: &str) -> Result<Prepared> {
    let scenario: Scenario = toml::from_str(text).map_err(|e| {
        let loc = e
            .span()
            .map(|s| format!(" (line {})", line_of(text, s.start)))
            .unwrap_or_default();
        anyhow!("scenario parse error{loc}: {}", e.message())
    })?;
    prepare(scenario, text)
}

fn prepare(scenario: Scenario, text: &str) -> Result<Prepared> {
    let mut warnings = Vec::new();

    // Sweep constraints.
    let eps = scenario.sweep.eps.get_ref();
    let eps_line = line_of(text, scenario.sweep.eps.span().start);
    if eps.is_empty() {
        bail!("sweep.eps is empty (line {eps_line})");
    }
    for w in eps.windows(2) {
        if w[1] >= w[0] {
            bail!(
                "sweep.eps must be strictly decreasing, got {} then {} (line {eps_line})",
                w[0],
                w[1]
            );
        }
    }
    if eps.iter().any(|&e| e <= 0.0) {
        bail!("sweep.eps entries must be positive (line {eps_line})");
    }
    if scenario.sweep.grid.is_empty() {
        bail!("sweep.grid must contain at least one size");
    }

    // Curve.
    let curve_spec = match scenario.curve.kind.as_str() {
        "circle" => CurveSpec::Circle,
        "ellipse" => CurveSpec::Ellipse {
            a: scenario
                .curve
                .a
                .ok_or_else(|| anyhow!("curve.kind = \"ellipse\" requires curve.a"))?,
            b: scenario
                .curve
                .b
                .ok_or_else(|| anyhow!("curve.kind = \"ellipse\" requires curve.b"))?,
        },
        "fourier" => CurveSpec::FourierCircle {
            cos: scenario.curve.cos.clone().unwrap_or_default(),
            sin: scenario.curve.sin.clone().unwrap_or_default(),
        },
        "points" => {
            let p = scenario
                .curve
                .path
                .as_ref()
                .ok_or_else(|| anyhow!("curve.kind = \"points\" requires curve.path"))?;
            CurveSpec::Points(read_points_csv(Path::new(p))?)
        }
        other => bail!("unknown curve.kind \"{other}\""),
    };
    let curve = Arc::new(build_curve(&curve_spec).context("building the vacuum curve")?);

    // Potential.
    let potential = match scenario.potential.kind.as_str() {
        "gl" => {
            if scenario.potential.q.is_some() {
                bail!("potential.q is only meaningful for kind = \"curve\"");
            }
            PotentialW::gl()
        }
        "curve" => {
            let q_src = scenario
                .potential
                .q
                .as_deref()
                .ok_or_else(|| anyhow!("potential.kind = \"curve\" requires potential.q"))?;
            let q = Expr::parse(q_src, "s").context("parsing potential.q")?;
            PotentialW::curve_tube(curve.clone(), move |s: Real| q.eval(s))
                .context("building the tube potential")?
        }
        other => bail!("unknown potential.kind \"{other}\""),
    };
    if scenario.potential.kind == "gl" && !matches!(curve_spec, CurveSpec::Circle) {
        bail!("potential.kind = \"gl\" fixes the unit-circle curve; use curve.kind = \"circle\"");
    }

    // Domain.
    let domain_spec = match scenario.domain.kind.as_str() {
        "disc" => DomainSpec::Disc {
            r: scenario.domain.r.unwrap_or(1.0),
        },
        "radial" => {
            let src = scenario
                .domain
                .rho
                .as_deref()
                .ok_or_else(|| anyhow!("domain.kind = \"radial\" requires domain.rho"))?;
            let rho = Expr::parse(src, "theta").context("parsing domain.rho")?;
            DomainSpec::radial_fn(move |th: Real| rho.eval(th))
        }
        other => bail!("unknown domain.kind \"{other}\""),
    };
    let domain = Arc::new(StarDomain::build(&domain_spec).context("building the domain")?);

    // Boundary datum.
    let eta0 = Expr::parse(&scenario.boundary.eta0, "theta").context("parsing boundary.eta0")?;
    let datum = Arc::new(
        BoundaryDatum::new(curve.clone(), scenario.boundary.degree, move |th: Real| {
            eta0.eval(th)
        })
        .context("building the boundary datum")?,
    );

    // Solver strings.
    match &scenario.solver.dt {
        DtSpec::Auto(s) if s == "auto" => {}
        DtSpec::Auto(s) => bail!("solver.dt must be \"auto\" or a number, got \"{s}\""),
        DtSpec::Value(v) if *v <= 0.0 => bail!("solver.dt must be positive"),
        DtSpec::Value(_) => {}
    }
    match scenario.solver.init.as_str() {
        "canonical" | "radial" | "perturbed" => {}
        other => bail!("unknown solver.init \"{other}\""),
    }
    if scenario.solver.tol <= 0.0 {
        bail!("solver.tol must be positive");
    }

    // Grid resolves the smallest ε?
    let n_max = *scenario.sweep.grid.iter().max().unwrap();
    let h = 2.0 * domain.max_radius() / (n_max as f64 - 1.0);
    let eps_min = *eps.last().unwrap();
    if h > eps_min / 2.0 {
        warnings.push(format!(
            "grid spacing h = {h:.4} exceeds eps/2 = {:.4}; the smallest cores are unresolved",
            eps_min / 2.0
        ));
    }

    for name in &scenario.analysis.checks {
        if !KNOWN_CHECKS.contains(&name.as_str()) {
            bail!("unknown analysis check \"{name}\" (known: {KNOWN_CHECKS:?})");
        }
    }

    Ok(Prepared {
        scenario,
        curve,
        potential: Arc::new(potential),
        domain,
        datum,
        warnings,
    })
}

pub const KNOWN_CHECKS: &[&str] = &[
    "degrees",
    "energy_slope",
    "hopf_mass",
    "boundedness",
    "rates",
    "max_principle",
    "ustar_monotone",
    "linfty_bound",
    "grad_bound",
];

impl Prepared {
    /// Canonicalized scenario text: the validated struct re-serialized with
    /// defaults filled in.
    pub fn canonical_toml(&self) -> String {
        toml::to_string_pretty(&self.scenario).expect("scenario serializes")
    }

    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.canonical_toml().as_bytes());
        let digest = hasher.finalize();
        digest.iter().take(6).map(|b| format!("{b:02x}")).collect()
    }

    pub fn eps_list(&self) -> Vec<f64> {
        self.scenario.sweep.eps.get_ref().clone()
    }

    pub fn init_strategy(&self, _eps: f64) -> InitStrategy<Real> {
        match self.scenario.solver.init.as_str() {
            "radial" => InitStrategy::Radial {
                degree: self.scenario.boundary.degree,
            },
            "perturbed" => InitStrategy::Perturbed {
                seed: self.scenario.solver.seed,
                amplitude: self.scenario.solver.amplitude,
            },
            _ => InitStrategy::Canonical {
                vortices: Vec::new(), // filled by the runner with defaults
            },
        }
    }

    pub fn enabled(&self, check: &str) -> bool {
        let list = &self.scenario.analysis.checks;
        list.is_empty() || list.iter().any(|c| c == check)
    }
}

fn read_points_csv(path: &Path) -> Result<Vec<Vec2<Real>>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading points file {}", path.display()))?;
    let mut pts = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split(',');
        let x: f64 = cols
            .next()
            .ok_or_else(|| anyhow!("line {}: missing x", ln + 1))?
            .trim()
            .parse()
            .with_context(|| format!("line {}: bad x", ln + 1))?;
        let y: f64 = cols
            .next()
            .ok_or_else(|| anyhow!("line {}: missing y", ln + 1))?
            .trim()
            .parse()
            .with_context(|| format!("line {}: bad y", ln + 1))?;
        if cols.next().is_some() {
            bail!("line {}: expected exactly two comma-separated columns", ln + 1);
        }
        pts.push(Vec2::new(x, y));
    }
    Ok(pts)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[curve]
kind = "circle"

[potential]
kind = "gl"

[domain]
kind = "disc"
r = 1.0

[boundary]
degree = 1

[sweep]
eps = [0.2, 0.1]
grid = [64]
"#;

    #[test]
    fn minimal_scenario_fills_defaults() {
        let p = parse_scenario_str(MINIMAL).unwrap();
        assert_eq!(p.scenario.solver.tol, 1e-8);
        assert_eq!(p.scenario.solver.max_iters, 200_000);
        assert!(matches!(p.scenario.solver.dt, DtSpec::Auto(ref s) if s == "auto"));
        assert_eq!(p.scenario.solver.init, "canonical");
        assert_eq!(p.scenario.analysis.mass_radius, 0.3);
        let echoed = p.canonical_toml();
        assert!(echoed.contains("tol = 1e-8") || echoed.contains("tol = 0.00000001"));
        assert!(echoed.contains("max_iters = 200000"));
    }

    #[test]
    fn increasing_eps_rejected_with_line() {
        let bad = MINIMAL.replace("eps = [0.2, 0.1]", "eps = [0.1, 0.2]");
        let err = parse_scenario_str(&bad).unwrap_err().to_string();
        assert!(err.contains("strictly decreasing"), "{err}");
        assert!(err.contains("line"), "{err}");
    }

    #[test]
    fn unknown_keys_fail_closed() {
        let bad = MINIMAL.replace("degree = 1", "degree = 1\nwobble = 3");
        let err = parse_scenario_str(&bad).unwrap_err().to_string();
        assert!(err.contains("wobble") || err.contains("unknown field"), "{err}");
    }

    #[test]
    fn curve_potential_requires_profile() {
        let bad = MINIMAL.replace("kind = \"gl\"", "kind = \"curve\"");
        let err = parse_scenario_str(&bad).unwrap_err().to_string();
        assert!(err.contains("requires potential.q"), "{err}");
    }

    #[test]
    fn hash_is_stable_and_input_sensitive() {
        let a = parse_scenario_str(MINIMAL).unwrap().hash();
        let b = parse_scenario_str(MINIMAL).unwrap().hash();
        assert_eq!(a, b);
        let c = parse_scenario_str(&MINIMAL.replace("[0.2, 0.1]", "[0.2, 0.05]"))
            .unwrap()
            .hash();
        assert_ne!(a, c);
    }
}
