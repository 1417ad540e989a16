//! Experiment configuration.
//!
//! One TOML file, every field optional. Missing fields take the defaults below,
//! unknown fields are rejected. `--set a.b=value` edits the parsed document
//! before it is typed, so overrides go through the same validation.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("bad override `{0}`: expected key=value")]
    Override(String),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

type Result<T> = std::result::Result<T, ConfigError>;

/// Analytic potential families on the box, plus raw grid input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PotentialSpec {
    /// amplitude * (1 - |x - center|²/radius²)^power inside the ball.
    Bump { center: Vec<f64>, radius: f64, power: i32, amplitude: f64 },
    /// amplitude * Π sin(k_a π x_a / L_a).
    SeparableSine { modes: Vec<usize>, amplitude: f64 },
    /// Sum of separable sines.
    BandLimited { terms: Vec<SineTerm> },
    /// Whitespace or comma separated values on the interior grid, row-major.
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SineTerm {
    pub modes: Vec<usize>,
    pub amplitude: f64,
}

impl PotentialSpec {
    pub fn bump(center: [f64; 2], radius: f64, power: i32, amplitude: f64) -> Self {
        PotentialSpec::Bump { center: center.to_vec(), radius, power, amplitude }
    }

    fn validate(&self, dim: usize, what: &str) -> Result<()> {
        let bad = |m: String| Err(ConfigError::Invalid(format!("{what}: {m}")));
        match self {
            PotentialSpec::Bump { center, radius, power, amplitude } => {
                if center.len() != dim {
                    return bad(format!("bump center needs {dim} coordinates"));
                }
                if !(*radius > 0.0) || *power < 1 || !amplitude.is_finite() {
                    return bad("bump needs radius > 0, power >= 1, finite amplitude".into());
                }
            }
            PotentialSpec::SeparableSine { modes, amplitude } => {
                if modes.len() != dim || modes.contains(&0) || !amplitude.is_finite() {
                    return bad(format!("separable-sine needs {dim} positive mode indices"));
                }
            }
            PotentialSpec::BandLimited { terms } => {
                if terms.is_empty() {
                    return bad("band-limited needs at least one term".into());
                }
                for t in terms {
                    if t.modes.len() != dim || t.modes.contains(&0) || !t.amplitude.is_finite() {
                        return bad(format!("band-limited terms need {dim} positive mode indices"));
                    }
                }
            }
            PotentialSpec::File { path } => {
                if !path.is_file() {
                    return bad(format!("potential file {} does not exist", path.display()));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DomainCfg {
    /// Side lengths of the two-dimensional box.
    pub lengths: Vec<f64>,
    /// Length of the one-dimensional interval.
    pub length_1d: f64,
    /// Interior grid nodes per retained mode (G = factor * N).
    pub grid_factor: usize,
}

impl Default for DomainCfg {
    fn default() -> Self {
        Self { lengths: vec![PI, PI], length_1d: PI, grid_factor: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveCfg {
    pub kernel_orders: Vec<f64>,
    pub kernel_modes_1d: usize,
    pub kernel_modes_2d: usize,
    /// Coarse and fine truncations for the Poisson refinement.
    pub poisson_modes: Vec<usize>,
    pub ibp_modes: usize,
    pub ibp_modes_1d: usize,
    pub ibp_order_1d: f64,
    pub born_modes: usize,
    pub born_terms: usize,
    pub born_potential: PotentialSpec,
}

impl Default for SolveCfg {
    fn default() -> Self {
        Self {
            kernel_orders: vec![0.55, 0.75, 0.95],
            kernel_modes_1d: 256,
            kernel_modes_2d: 64,
            poisson_modes: vec![32, 64],
            ibp_modes: 64,
            ibp_modes_1d: 256,
            ibp_order_1d: 0.6,
            born_modes: 32,
            born_terms: 20,
            born_potential: PotentialSpec::bump([1.4, 1.7], 1.0, 4, 1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DnmapCfg {
    pub modes: usize,
    pub basis_modes: usize,
    pub scales: Vec<f64>,
    pub born_terms: usize,
    pub potential: PotentialSpec,
}

impl Default for DnmapCfg {
    fn default() -> Self {
        Self {
            modes: 16,
            basis_modes: 4,
            scales: vec![1e-3, 3e-3, 1e-2, 3e-2, 1e-1],
            born_terms: 3,
            potential: PotentialSpec::bump([1.4, 1.7], 1.0, 4, 1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinearizeCfg {
    /// Coarse and fine truncations; the identity is checked on the fine one.
    pub modes: Vec<usize>,
    pub frequencies: Vec<Vec<f64>>,
    pub potential: PotentialSpec,
}

impl Default for LinearizeCfg {
    fn default() -> Self {
        Self {
            modes: vec![32, 64],
            frequencies: vec![vec![1.0, 0.0], vec![2.0, 1.0], vec![0.0, 3.0], vec![-3.0, 2.0], vec![4.0, 0.0]],
            potential: PotentialSpec::bump([1.5, 1.7], 1.0, 6, 1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReconstructCfg {
    pub band_modes: usize,
    pub band_pad: f64,
    pub band_rho: f64,
    pub band_terms: Vec<SineTerm>,
    pub bump_modes: usize,
    pub bump_pad: f64,
    pub bump_rho: f64,
    pub bump: PotentialSpec,
}

impl Default for ReconstructCfg {
    fn default() -> Self {
        let t = |a: usize, b: usize, amplitude: f64| SineTerm { modes: vec![a, b], amplitude };
        Self {
            band_modes: 32,
            band_pad: 0.0,
            band_rho: 5.0,
            band_terms: vec![t(2, 2, 1.0), t(4, 2, 0.5), t(2, 4, -0.3)],
            bump_modes: 64,
            bump_pad: 1.0,
            bump_rho: 8.0,
            bump: PotentialSpec::bump([PI / 2.0, PI / 2.0], 1.2, 4, 1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilityCfg {
    pub modes: usize,
    pub basis_modes: usize,
    pub pad: f64,
    pub fft: usize,
    /// Sweep in decreasing ε.
    pub eps: Vec<f64>,
    pub base: PotentialSpec,
    pub perturbation: PotentialSpec,
}

impl Default for StabilityCfg {
    fn default() -> Self {
        Self {
            modes: 16,
            basis_modes: 4,
            pad: 1.0,
            fft: 64,
            eps: vec![1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4, 1e-4],
            base: PotentialSpec::bump([1.4, 1.7], 1.0, 4, 1.0),
            perturbation: PotentialSpec::bump([1.8, 1.3], 0.8, 4, 1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CgoCfg {
    /// In-plane half width of the rotated working box.
    pub half_width: f64,
    pub nodes: usize,
    /// Parameter axis (lo, hi, nodes) for y3.
    pub transverse: (f64, f64, usize),
    pub sign: f64,
    /// h used while solving the recursion; amplitudes do not depend on it.
    pub h: f64,
    pub lambda: f64,
    pub recursion_order: usize,
    pub h_sweep: Vec<f64>,
}

impl Default for CgoCfg {
    fn default() -> Self {
        Self {
            half_width: 2.0,
            nodes: 256,
            transverse: (-1.5, 1.5, 25),
            sign: 1.0,
            h: 0.1,
            lambda: 1.0,
            recursion_order: 3,
            h_sweep: vec![0.2, 0.1, 0.05, 0.025],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaugeCfg {
    pub identity_nodes: usize,
    pub flat_power: i32,
    pub random_count: usize,
    pub random_degree: u32,
    pub psi_nodes: usize,
    pub trace_nodes: usize,
    pub stationary_h: Vec<f64>,
    pub stationary_orders: Vec<u32>,
    /// Largest h at which the Wick oracle is cross-checked by quadrature.
    pub quadrature_check_h: Vec<f64>,
}

impl Default for GaugeCfg {
    fn default() -> Self {
        Self {
            identity_nodes: 257,
            flat_power: 12,
            random_count: 20,
            random_degree: 4,
            psi_nodes: 241,
            trace_nodes: 129,
            stationary_h: vec![0.2, 0.1, 0.05, 0.02],
            stationary_orders: vec![1, 2, 3],
            quadrature_check_h: vec![0.2, 0.1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub schema: u32,
    pub seed: u64,
    pub out: PathBuf,
    /// Fractional order used wherever an experiment does not sweep it.
    pub s: f64,
    pub domain: DomainCfg,
    pub solve: SolveCfg,
    pub dnmap: DnmapCfg,
    pub linearize: LinearizeCfg,
    pub reconstruct: ReconstructCfg,
    pub stability: StabilityCfg,
    pub cgo: CgoCfg,
    pub gauge: GaugeCfg,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            schema: SCHEMA_VERSION,
            seed: 7,
            out: PathBuf::from("fraclab-out"),
            s: 0.75,
            domain: DomainCfg::default(),
            solve: SolveCfg::default(),
            dnmap: DnmapCfg::default(),
            linearize: LinearizeCfg::default(),
            reconstruct: ReconstructCfg::default(),
            stability: StabilityCfg::default(),
            cgo: CgoCfg::default(),
            gauge: GaugeCfg::default(),
        }
    }
}

/// Reads the optional file, applies overrides, types and validates.
pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Config> {
    let mut doc = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Io { path: p.to_path_buf(), source })?;
            text.parse::<toml::Table>().map_err(|e| ConfigError::Parse(e.to_string()))?
        }
        None => toml::Table::new(),
    };
    for o in overrides {
        apply_override(&mut doc, o)?;
    }
    let cfg: Config = toml::Value::Table(doc).try_into().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// `a.b.c=value`; the value is read as TOML, falling back to a bare string.
pub fn apply_override(doc: &mut toml::Table, text: &str) -> Result<()> {
    let (key, raw) = text.split_once('=').ok_or_else(|| ConfigError::Override(text.into()))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(ConfigError::Override(text.into()));
    }
    let raw = raw.trim();
    let value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    };
    let mut table = doc;
    for p in &parts[..parts.len() - 1] {
        let entry = table.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = match entry {
            toml::Value::Table(t) => t,
            _ => return Err(ConfigError::Override(format!("{text}: `{p}` is not a table"))),
        };
    }
    table.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

impl Config {
    /// Canonical serialization for the config hash; the output location is left out.
    pub fn canonical(&self) -> String {
        let mut c = self.clone();
        c.out = PathBuf::new();
        toml::to_string(&c).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.into()));
        if self.schema != SCHEMA_VERSION {
            return Err(ConfigError::Invalid(format!("schema {} unsupported (expected {SCHEMA_VERSION})", self.schema)));
        }
        let in_range = |s: f64| s > 0.5 && s < 1.0;
        if !in_range(self.s) {
            return bad("s must lie in (1/2, 1)");
        }
        let d = &self.domain;
        if d.lengths.len() != 2 || d.lengths.iter().any(|l| !(*l > 0.0 && l.is_finite())) || !(d.length_1d > 0.0) {
            return bad("domain lengths must be two positive numbers and length_1d positive");
        }
        if d.grid_factor < 2 {
            return bad("domain.grid_factor must be at least 2");
        }
        let sv = &self.solve;
        if sv.kernel_orders.is_empty() || !sv.kernel_orders.iter().all(|s| *s > 0.0 && *s < 1.0) {
            return bad("solve.kernel_orders must be nonempty and inside (0, 1)");
        }
        if !(0.0..1.0).contains(&sv.ibp_order_1d) || sv.ibp_order_1d == 0.0 {
            return bad("solve.ibp_order_1d must lie in (0, 1)");
        }
        if sv.poisson_modes.len() != 2 || sv.poisson_modes[0] >= sv.poisson_modes[1] {
            return bad("solve.poisson_modes must be [coarse, fine] with coarse < fine");
        }
        if [sv.kernel_modes_1d, sv.kernel_modes_2d, sv.ibp_modes, sv.ibp_modes_1d, sv.born_modes, sv.poisson_modes[0]]
            .contains(&0)
            || sv.born_terms == 0
        {
            return bad("solve mode counts and born_terms must be positive");
        }
        sv.born_potential.validate(2, "solve.born_potential")?;
        let dn = &self.dnmap;
        if dn.modes == 0 || dn.basis_modes == 0 || dn.basis_modes > dn.modes || dn.born_terms == 0 {
            return bad("dnmap needs 0 < basis_modes <= modes and born_terms > 0");
        }
        if dn.scales.len() < 2 || dn.scales.iter().any(|e| !(*e > 0.0)) {
            return bad("dnmap.scales needs at least two positive entries");
        }
        dn.potential.validate(2, "dnmap.potential")?;
        let li = &self.linearize;
        if li.modes.len() != 2 || li.modes[0] == 0 || li.modes[0] >= li.modes[1] {
            return bad("linearize.modes must be [coarse, fine] with 0 < coarse < fine");
        }
        if li.frequencies.is_empty() {
            return bad("linearize.frequencies must be nonempty");
        }
        for xi in &li.frequencies {
            let r = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
            if xi.len() != 2 || r == 0.0 || r > 4.0 + 1e-12 {
                return bad("linearize.frequencies must be nonzero 2-vectors with |ξ| <= 4");
            }
        }
        li.potential.validate(2, "linearize.potential")?;
        let rc = &self.reconstruct;
        if rc.band_modes == 0 || rc.bump_modes == 0 || !(rc.band_rho > 0.0) || !(rc.bump_rho > 0.0) {
            return bad("reconstruct needs positive modes and cutoffs");
        }
        if !(rc.band_pad >= 0.0) || !(rc.bump_pad >= 0.0) {
            return bad("reconstruct padding must be nonnegative");
        }
        PotentialSpec::BandLimited { terms: rc.band_terms.clone() }.validate(2, "reconstruct.band_terms")?;
        rc.bump.validate(2, "reconstruct.bump")?;
        let st = &self.stability;
        if st.modes == 0 || st.basis_modes == 0 || st.basis_modes > st.modes || st.fft < 4 || !(st.pad >= 0.0) {
            return bad("stability needs 0 < basis_modes <= modes, fft >= 4, pad >= 0");
        }
        if st.eps.len() < 2 || st.eps.iter().any(|e| !(*e > 0.0)) || st.eps.windows(2).any(|w| w[1] >= w[0]) {
            return bad("stability.eps must be positive and strictly decreasing");
        }
        st.base.validate(2, "stability.base")?;
        st.perturbation.validate(2, "stability.perturbation")?;
        let cg = &self.cgo;
        if !(cg.half_width > 0.0) || cg.nodes < 16 || cg.transverse.2 < 6 || !(cg.transverse.0 < cg.transverse.1) {
            return bad("cgo grid needs half_width > 0, nodes >= 16 and a transverse axis with >= 6 nodes");
        }
        if cg.sign.abs() != 1.0 || !(cg.h > 0.0) || !cg.lambda.is_finite() || cg.recursion_order < 2 {
            return bad("cgo needs sign = ±1, h > 0, finite lambda and recursion_order >= 2");
        }
        if cg.h_sweep.len() < 2 || cg.h_sweep.iter().any(|h| !(*h > 0.0)) {
            return bad("cgo.h_sweep needs at least two positive entries");
        }
        let ga = &self.gauge;
        if ga.identity_nodes < 33 || ga.psi_nodes < 33 || ga.trace_nodes < 33 {
            return bad("gauge grids need at least 33 nodes per axis");
        }
        if ga.flat_power < 2 || ga.random_count == 0 {
            return bad("gauge needs flat_power >= 2 and random_count > 0");
        }
        if ga.stationary_h.is_empty() || ga.stationary_h.iter().chain(&ga.quadrature_check_h).any(|h| !(*h > 0.0)) {
            return bad("gauge h lists must be positive");
        }
        if ga.stationary_orders.is_empty() || ga.stationary_orders.contains(&0) {
            return bad("gauge.stationary_orders must be positive");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_roundtrip() {
        let c = Config::default();
        c.validate().unwrap();
        let back: Config = toml::from_str(&toml::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        let moved = Config { out: PathBuf::from("/elsewhere"), ..c.clone() };
        assert_eq!(moved.canonical(), c.canonical());
    }

    #[test]
    fn overrides_typed() {
        let c = load(None, &["s=0.6".into(), "dnmap.modes=12".into(), "out=elsewhere".into()]).unwrap();
        assert_eq!(c.s, 0.6);
        assert_eq!(c.dnmap.modes, 12);
        assert_eq!(c.out, PathBuf::from("elsewhere"));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(load(None, &["s=1.5".into()]), Err(ConfigError::Invalid(_))));
        assert!(matches!(load(None, &["nonsense=1".into()]), Err(ConfigError::Parse(_))));
        assert!(matches!(load(None, &["novalue".into()]), Err(ConfigError::Override(_))));
        assert!(matches!(
            load(None, &["linearize.potential={family=\"file\", path=\"/nonexistent/q.txt\"}".into()]),
            Err(ConfigError::Invalid(_))
        ));
    }

    #[test]
    fn readme_example_is_the_default() {
        let readme = include_str!("../../../README.md");
        let start = readme.find("```toml\n").unwrap() + 8;
        let end = start + readme[start..].find("```").unwrap();
        let c: Config = toml::from_str(&readme[start..end]).unwrap();
        assert_eq!(c, Config::default());
    }

    #[test]
    fn potential_families_parse() {
        let text = r#"
            [reconstruct.bump]
            family = "separable-sine"
            modes = [1, 2]
            amplitude = 0.5
        "#;
        let c: Config = toml::from_str(text).unwrap();
        assert_eq!(c.reconstruct.bump, PotentialSpec::SeparableSine { modes: vec![1, 2], amplitude: 0.5 });
    }
}
