//! Experiment configuration: one TOML file with namespaced keys, overridable
//! by `key=value` pairs (dotted paths) from the command line.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fracops::TimeGrid;
use crate::potential::{PotentialSpec, RadialDomain, WeightExponent};
use crate::radial::{BlowupThresholds, RadialGrid};

/// Environment variable holding the default output root.
pub const OUTPUT_ENV: &str = "HARDYFRAC_OUT";
pub const DEFAULT_OUTPUT_ROOT: &str = "hardyfrac-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Fode,
    #[default]
    Pde,
    Sweep,
    Truncation,
    Eigen,
    Verify,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FodeSection {
    pub alpha: f64,
    pub q: f64,
    pub u0: f64,
    pub steps: usize,
    /// `None` runs to `1.05 t_m` of the closed-form estimate.
    pub horizon: Option<f64>,
    pub grading: f64,
    pub threshold: f64,
    /// Random sub/supersolution pairs for the comparison campaign.
    pub pairs: usize,
}

impl Default for FodeSection {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            q: 3.0,
            u0: 2.0,
            steps: 4096,
            horizon: None,
            grading: 1.0,
            threshold: crate::fode::DEFAULT_DIVERGENCE_THRESHOLD,
            pairs: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DomainSection {
    pub n: f64,
    pub p: f64,
    pub radius: f64,
    pub weight: WeightChoice,
}

impl Default for DomainSection {
    fn default() -> Self {
        Self {
            n: 4.0,
            p: 3.0,
            radius: 1.0,
            weight: WeightChoice::PHarmonic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightChoice {
    #[default]
    PHarmonic,
    Printed,
}

impl From<WeightChoice> for WeightExponent {
    fn from(w: WeightChoice) -> Self {
        match w {
            WeightChoice::PHarmonic => WeightExponent::PHarmonic,
            WeightChoice::Printed => WeightExponent::Printed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PdeSection {
    pub alpha: f64,
    /// `mu / Lambda(n, p)`
    pub mu_ratio: f64,
    /// `W_N` level; `inf` evaluates `W` directly.
    pub truncation: f64,
    pub m: usize,
    pub steps: usize,
    pub horizon: f64,
    pub grading: f64,
    /// Multiple of the unit-mass bump `c (1 - (r/R)^2)^2` used as `u0`.
    pub amplitude: f64,
    /// `None` uses `1e-8 R`.
    pub sigma: Option<f64>,
    /// Ordered pairs in the comparison campaign.
    pub pairs: usize,
}

impl Default for PdeSection {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            mu_ratio: 0.5,
            truncation: 1e5,
            m: 200,
            steps: 2000,
            horizon: 1.0,
            grading: 1.0,
            amplitude: 1.0,
            sigma: None,
            pairs: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdSection {
    pub l2_cumulative: f64,
    pub w1p_cumulative: f64,
}

impl Default for ThresholdSection {
    fn default() -> Self {
        let d = BlowupThresholds::default();
        Self {
            l2_cumulative: d.l2_cumulative,
            w1p_cumulative: d.w1p_cumulative,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub mu_ratios: Vec<f64>,
    /// Amplitude used for cells with `mu > Lambda` (below it, `pde.amplitude`).
    pub supercritical_amplitude: f64,
    /// Time-mesh grading for cells with `mu > Lambda`, where large data blow
    /// up within the first uniform step.
    pub supercritical_grading: f64,
    /// Worker cap; 0 uses all cores.
    pub workers: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            mu_ratios: vec![0.25, 0.5, 0.75, 1.5, 2.0, 4.0],
            supercritical_amplitude: 50.0,
            supercritical_grading: 3.0,
            workers: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TruncationSection {
    pub levels: Vec<f64>,
}

impl Default for TruncationSection {
    fn default() -> Self {
        Self {
            levels: vec![10.0, 1e2, 1e3, 1e4, 1e5],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    pub trials: usize,
    pub hardy_m: usize,
    /// Relative slack below `Lambda` tolerated for random profiles.
    pub hardy_slack: f64,
    /// Upper bound on the near-extremal ratio, as a multiple of `Lambda`.
    pub extremal_factor: f64,
    /// Multiplier on the a priori constants.
    pub apriori_slack: f64,
    /// Fractional orders and step counts for `identity-check`.
    pub identity_alpha: f64,
    pub identity_steps: Vec<usize>,
    pub identity_min_order: f64,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self {
            trials: 200,
            hardy_m: 2000,
            hardy_slack: 0.01,
            extremal_factor: 1.05,
            apriori_slack: 1.0,
            identity_alpha: 0.5,
            identity_steps: vec![128, 256, 512],
            identity_min_order: 0.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    /// Records wall-clock time in the manifest; off by default because it
    /// breaks byte-identical reruns.
    pub timing: bool,
    pub fode: FodeSection,
    pub domain: DomainSection,
    pub pde: PdeSection,
    pub thresholds: ThresholdSection,
    pub sweep: SweepSection,
    pub truncation: TruncationSection,
    pub verify: VerifySection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            kind: ExperimentKind::default(),
            seed: 20240607,
            output_dir: None,
            timing: false,
            fode: FodeSection::default(),
            domain: DomainSection::default(),
            pde: PdeSection::default(),
            thresholds: ThresholdSection::default(),
            sweep: SweepSection::default(),
            truncation: TruncationSection::default(),
            verify: VerifySection::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Applies `key=value` overrides; the value is parsed as a TOML value and
    /// falls back to a bare string.
    pub fn with_overrides<S: AsRef<str>>(&self, pairs: &[S]) -> Result<Self> {
        let mut root = toml::Value::try_from(self).map_err(|e| Error::Config(e.to_string()))?;
        for pair in pairs {
            let pair = pair.as_ref();
            let (key, raw) = pair
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override `{pair}` is not key=value")))?;
            let value = parse_value(raw.trim());
            set_path(&mut root, key.trim(), value)?;
        }
        let text = toml::to_string(&root).map_err(|e| Error::Config(e.to_string()))?;
        Self::from_toml_str(&text)
    }

    /// Parameter-domain checks run before any work is dispatched.
    pub fn validate(&self) -> Result<()> {
        let bad = |name: &'static str, reason: String| Err(Error::Config(format!("{name}: {reason}")));
        let unit = |name: &'static str, a: f64| {
            if a > 0.0 && a < 1.0 {
                Ok(())
            } else {
                bad(name, format!("must lie in (0, 1), got {a}"))
            }
        };
        unit("fode.alpha", self.fode.alpha)?;
        unit("pde.alpha", self.pde.alpha)?;
        if !(self.fode.q > 1.0) {
            return bad("fode.q", format!("must exceed 1, got {}", self.fode.q));
        }
        if !(self.fode.u0 > 0.0) {
            return bad("fode.u0", format!("must be positive, got {}", self.fode.u0));
        }
        let d = &self.domain;
        if !(d.p > 2.0) {
            return bad("domain.p", format!("must exceed 2, got {}", d.p));
        }
        if !(d.n > d.p) {
            return bad("domain.n", format!("must exceed p = {}, got {}", d.p, d.n));
        }
        if !(d.radius > 0.0) {
            return bad("domain.radius", format!("must be positive, got {}", d.radius));
        }
        if !(self.pde.mu_ratio >= 0.0) {
            return bad(
                "pde.mu_ratio",
                format!("must be nonnegative, got {}", self.pde.mu_ratio),
            );
        }
        if let Some(r) = self.sweep.mu_ratios.iter().find(|r| !(**r >= 0.0)) {
            return bad("sweep.mu_ratios", format!("entries must be nonnegative, got {r}"));
        }
        if !(self.pde.truncation >= 1.0) {
            return bad("pde.truncation", format!("must be >= 1, got {}", self.pde.truncation));
        }
        if let Some(n) = self.truncation.levels.iter().find(|n| !(**n >= 1.0)) {
            return bad("truncation.levels", format!("entries must be >= 1, got {n}"));
        }
        if self.pde.m < 2 || self.pde.steps < 1 || self.fode.steps < 1 {
            return bad("grid", "need pde.m >= 2, pde.steps >= 1, fode.steps >= 1".into());
        }
        for (name, g) in [
            ("pde.grading", self.pde.grading),
            ("fode.grading", self.fode.grading),
            ("sweep.supercritical_grading", self.sweep.supercritical_grading),
        ] {
            if !(g >= 1.0) {
                return bad(name, format!("must be >= 1, got {g}"));
            }
        }
        if !(self.pde.horizon > 0.0) {
            return bad("pde.horizon", format!("must be positive, got {}", self.pde.horizon));
        }
        if !(self.pde.amplitude >= 0.0) {
            return bad(
                "pde.amplitude",
                format!("must be nonnegative, got {}", self.pde.amplitude),
            );
        }
        Ok(())
    }

    pub fn domain(&self) -> Result<RadialDomain> {
        RadialDomain::new(self.domain.n, self.domain.radius)
    }

    /// `PotentialSpec` with `mu = ratio * Lambda`.
    pub fn spec(&self, mu_ratio: f64) -> Result<PotentialSpec> {
        let base = PotentialSpec::new(self.domain.p, 0.0, self.domain()?)?;
        Ok(base
            .with_exponent(self.domain.weight.into())
            .with_mu(mu_ratio * base.lambda()))
    }

    pub fn radial_grid(&self) -> Result<RadialGrid> {
        RadialGrid::new(self.pde.m, &self.domain()?)
    }

    pub fn pde_time_grid(&self) -> Result<TimeGrid> {
        TimeGrid::graded(self.pde.horizon, self.pde.steps, self.pde.grading)
    }

    pub fn thresholds(&self) -> BlowupThresholds {
        BlowupThresholds {
            l2_cumulative: self.thresholds.l2_cumulative,
            w1p_cumulative: self.thresholds.w1p_cumulative,
        }
    }

    /// Output root: `output_dir`, else `$HARDYFRAC_OUT`, else `./hardyfrac-out`.
    pub fn output_root(&self) -> PathBuf {
        self.output_dir
            .clone()
            .or_else(|| std::env::var_os(OUTPUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_ROOT))
    }
}

/// `c (1 - (r/R)^2)^2` with `int_0^R u r^{n-1} dr = 1`.
pub fn unit_bump(r: f64, n: f64, radius: f64) -> f64 {
    let s = r / radius;
    let mass = radius.powf(n) * 8.0 / (n * (n + 2.0) * (n + 4.0));
    (1.0 - s * s).powi(2) / mass
}

fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn set_path(root: &mut toml::Value, key: &str, value: toml::Value) -> Result<()> {
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let table = node
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("`{key}`: `{part}` is not a section")))?;
        if i + 1 == parts.len() {
            table.insert(part.to_string(), value);
            return Ok(());
        }
        node = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    }
    Err(Error::Config(format!("empty override key `{key}`")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_defaults() {
        let c = ExperimentConfig::default();
        let back = ExperimentConfig::from_toml_str(&c.to_toml_string()).unwrap();
        assert_eq!(c, back);
        let partial = ExperimentConfig::from_toml_str("seed = 3\n[pde]\nmu_ratio = 2.0\n").unwrap();
        assert_eq!(partial.seed, 3);
        assert_eq!(partial.pde.mu_ratio, 2.0);
        assert_eq!(partial.pde.m, 200);
    }

    #[test]
    fn dotted_keys_and_overrides() {
        let c = ExperimentConfig::from_toml_str("pde.mu_ratio = 1.5\nfode.q = 2\n").unwrap();
        assert_eq!((c.pde.mu_ratio, c.fode.q), (1.5, 2.0));
        let o = c
            .with_overrides(&[
                "pde.mu_ratio=3",
                "sweep.mu_ratios=[1, 2.5]",
                "kind=sweep",
                "pde.truncation=inf",
            ])
            .unwrap();
        assert_eq!(o.pde.mu_ratio, 3.0);
        assert_eq!(o.sweep.mu_ratios, vec![1.0, 2.5]);
        assert_eq!(o.kind, ExperimentKind::Sweep);
        assert!(o.pde.truncation.is_infinite());
        assert!(c.with_overrides(&["pde.nope=1"]).is_err());
        assert!(c.with_overrides(&["pde.mu_ratio"]).is_err());
        assert!(c.with_overrides(&["pde.m=abc"]).is_err());
    }

    #[test]
    fn validation() {
        let ok = ExperimentConfig::default();
        ok.validate().unwrap();
        for pair in [
            "pde.alpha=1.0",
            "domain.p=2.0",
            "domain.n=2.5",
            "pde.mu_ratio=-1.0",
            "pde.truncation=0.5",
        ] {
            let c = ok.with_overrides(&[pair]).unwrap();
            assert!(c.validate().is_err(), "{pair}");
        }
    }

    #[test]
    fn bump_has_unit_mass() {
        let d = RadialDomain::new(4.0, 1.0).unwrap();
        let g = RadialGrid::new(4000, &d).unwrap();
        let u = g.sample(|r| unit_bump(r, 4.0, 1.0));
        assert!((g.integrate(&u) - 1.0).abs() < 1e-5);
        assert!((unit_bump(0.0, 4.0, 1.0) - 24.0).abs() < 1e-12);
        let d = RadialDomain::new(5.5, 2.0).unwrap();
        let g = RadialGrid::new(4000, &d).unwrap();
        assert!((g.integrate(&g.sample(|r| unit_bump(r, 5.5, 2.0))) - 1.0).abs() < 1e-5);
    }
}
