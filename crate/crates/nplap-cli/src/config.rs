//! TOML run configuration: strict schema (unknown keys rejected) and a
//! validation pass that reports every violation with its key path.

use serde::Deserialize;

use nplap::grid::DomainSpec;
use nplap::harness::EstimateKind;
use nplap::registry::SourceFn;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: String,
    /// 0 = library default thread count.
    #[serde(default)]
    pub threads: usize,
    #[serde(default = "default_h")]
    pub h: f64,
    #[serde(default = "default_domains")]
    pub domains: Vec<DomainConfig>,
    #[serde(default)]
    pub params: ParamsConfig,
    #[serde(default = "default_functions")]
    pub functions: Vec<String>,
    #[serde(default = "default_estimates")]
    pub estimates: Vec<String>,
    #[serde(default)]
    pub solve: SolveSection,
    #[serde(default)]
    pub check_point: CheckPointSection,
    #[serde(default)]
    pub counterexample: CounterexampleSection,
    #[serde(default)]
    pub holder: HolderSection,
}

fn default_seed() -> u64 {
    42
}
fn default_out() -> String {
    "out".into()
}
fn default_h() -> f64 {
    1.0 / 64.0
}
fn default_functions() -> Vec<String> {
    vec!["sinsin".into()]
}
fn default_estimates() -> Vec<String> {
    vec![
        "miranda-talenti".into(),
        "apriori".into(),
        "gradient-lq".into(),
        "l1".into(),
        "holder-global".into(),
    ]
}
fn default_domains() -> Vec<DomainConfig> {
    vec![DomainConfig {
        kind: "rectangle".into(),
        a: 1.0,
        b: 1.0,
        radius: 1.0,
    }]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub kind: String,
    #[serde(default = "one")]
    pub a: f64,
    #[serde(default = "one")]
    pub b: f64,
    #[serde(default = "one")]
    pub radius: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    #[serde(default = "default_p_list")]
    pub p: Vec<f64>,
    #[serde(default = "default_gamma_list")]
    pub gamma: Vec<f64>,
    #[serde(default = "default_eps_schedule")]
    pub eps: Vec<f64>,
    #[serde(default = "default_beta_list")]
    pub beta: Vec<f64>,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default)]
    pub two_star_fallback: Option<f64>,
}

impl Default for ParamsConfig {
    fn default() -> Self {
        ParamsConfig {
            p: default_p_list(),
            gamma: default_gamma_list(),
            eps: default_eps_schedule(),
            beta: default_beta_list(),
            lambda: 0.0,
            two_star_fallback: None,
        }
    }
}

fn default_p_list() -> Vec<f64> {
    vec![2.0]
}
fn default_gamma_list() -> Vec<f64> {
    vec![0.0]
}
fn default_eps_schedule() -> Vec<f64> {
    vec![1e-1, 1e-2, 1e-3, 1e-4]
}
fn default_beta_list() -> Vec<f64> {
    vec![0.0]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveSection {
    /// "poisson" pins p = 2, gamma = 0, f = 2π² sinsin.
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default = "two")]
    pub p: f64,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default = "default_f")]
    pub f: String,
    #[serde(default = "one")]
    pub f_scale: f64,
    /// Grid dump to load f from; overrides `f` when set.
    #[serde(default)]
    pub f_file: Option<String>,
    #[serde(default = "default_max_picard")]
    pub max_picard: usize,
    #[serde(default = "default_picard_tol")]
    pub picard_tol: f64,
    #[serde(default = "one")]
    pub damping: f64,
    #[serde(default = "default_linear_tol")]
    pub linear_tol: f64,
}

fn two() -> f64 {
    2.0
}
fn default_f() -> String {
    "sinsin".into()
}
fn default_max_picard() -> usize {
    200
}
fn default_picard_tol() -> f64 {
    1e-9
}
fn default_linear_tol() -> f64 {
    1e-10
}

impl Default for SolveSection {
    fn default() -> Self {
        SolveSection {
            preset: None,
            p: 2.0,
            gamma: 0.0,
            f: default_f(),
            f_scale: 1.0,
            f_file: None,
            max_picard: default_max_picard(),
            picard_tol: default_picard_tol(),
            damping: 1.0,
            linear_tol: default_linear_tol(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckPointSection {
    #[serde(default = "default_samples")]
    pub samples: u64,
    #[serde(default = "default_dims")]
    pub dims: Vec<usize>,
}

fn default_samples() -> u64 {
    100_000
}
fn default_dims() -> Vec<usize> {
    vec![2, 3, 5]
}

impl Default for CheckPointSection {
    fn default() -> Self {
        CheckPointSection {
            samples: default_samples(),
            dims: default_dims(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleSection {
    #[serde(default = "four")]
    pub n: usize,
    #[serde(default = "two")]
    pub p: f64,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default = "default_ce_eps")]
    pub eps: Vec<f64>,
}

fn four() -> usize {
    4
}
fn default_ce_eps() -> Vec<f64> {
    vec![1e-2, 1e-3, 1e-4, 1e-5, 1e-6]
}

impl Default for CounterexampleSection {
    fn default() -> Self {
        CounterexampleSection {
            n: 4,
            p: 2.0,
            gamma: 0.0,
            eps: default_ce_eps(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HolderSection {
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default = "default_pair_budget")]
    pub pair_budget: usize,
}

fn default_radius() -> f64 {
    0.25
}
fn default_pair_budget() -> usize {
    100_000
}

impl Default for HolderSection {
    fn default() -> Self {
        HolderSection {
            radius: default_radius(),
            pair_budget: default_pair_budget(),
        }
    }
}

impl RunConfig {
    pub fn default_config() -> RunConfig {
        toml::from_str("").expect("empty config provides all defaults")
    }

    /// Parse and validate; schema violations and every semantic violation
    /// are collected with their key paths.
    pub fn parse(text: &str) -> Result<RunConfig, Vec<String>> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| vec![e.to_string()])?;
        let violations = cfg.validate();
        if violations.is_empty() {
            Ok(cfg)
        } else {
            Err(violations)
        }
    }

    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if !(self.h > 0.0) {
            errs.push(format!("h: must be positive, got {}", self.h));
        }
        if self.domains.is_empty() {
            errs.push("domains: at least one domain is required".into());
        }
        for (i, d) in self.domains.iter().enumerate() {
            match d.kind.as_str() {
                "rectangle" => {
                    if !(d.a > 0.0 && d.b > 0.0) {
                        errs.push(format!("domains[{i}]: rectangle sides must be positive"));
                    }
                }
                "disk" => {
                    if !(d.radius > 0.0) {
                        errs.push(format!("domains[{i}]: disk radius must be positive"));
                    }
                }
                other => errs.push(format!(
                    "domains[{i}].kind: expected \"rectangle\" or \"disk\", got \"{other}\""
                )),
            }
        }
        for (i, &p) in self.params.p.iter().enumerate() {
            if !(p > 1.0) {
                errs.push(format!("params.p[{i}]: p must exceed 1, got {p}"));
            }
        }
        for (i, &g) in self.params.gamma.iter().enumerate() {
            if !(g > -1.0) {
                errs.push(format!("params.gamma[{i}]: gamma must exceed -1, got {g}"));
            }
        }
        if self.params.eps.is_empty() {
            errs.push("params.eps: schedule must be nonempty".into());
        }
        for (i, &e) in self.params.eps.iter().enumerate() {
            if !(e > 0.0 && e <= 1.0) {
                errs.push(format!("params.eps[{i}]: eps must lie in (0, 1], got {e}"));
            }
        }
        if self.params.eps.windows(2).any(|w| w[1] >= w[0]) {
            errs.push("params.eps: schedule must be strictly decreasing".into());
        }
        for (i, &b) in self.params.beta.iter().enumerate() {
            if b < 0.0 {
                errs.push(format!("params.beta[{i}]: beta must be nonnegative, got {b}"));
            }
        }
        if !(self.params.lambda >= 0.0 && self.params.lambda < 1.0) {
            errs.push(format!(
                "params.lambda: lambda must lie in [0, 1), got {}",
                self.params.lambda
            ));
        }
        for (i, name) in self.functions.iter().enumerate() {
            if SourceFn::parse(name).is_none() {
                errs.push(format!("functions[{i}]: unknown function \"{name}\""));
            }
        }
        for (i, name) in self.estimates.iter().enumerate() {
            if EstimateKind::parse(name).is_none() {
                errs.push(format!("estimates[{i}]: unknown estimate \"{name}\""));
            }
        }
        if let Some(preset) = &self.solve.preset {
            if preset != "poisson" {
                errs.push(format!("solve.preset: unknown preset \"{preset}\""));
            }
        }
        if !(self.solve.p > 1.0) {
            errs.push(format!("solve.p: p must exceed 1, got {}", self.solve.p));
        }
        if !(self.solve.gamma > -1.0) {
            errs.push(format!(
                "solve.gamma: gamma must exceed -1, got {}",
                self.solve.gamma
            ));
        }
        if SourceFn::parse(&self.solve.f).is_none() {
            errs.push(format!("solve.f: unknown function \"{}\"", self.solve.f));
        }
        if !(self.solve.damping > 0.0 && self.solve.damping <= 1.0) {
            errs.push(format!(
                "solve.damping: must lie in (0, 1], got {}",
                self.solve.damping
            ));
        }
        if self.check_point.samples == 0 {
            errs.push("check_point.samples: must be positive".into());
        }
        if self.check_point.dims.iter().any(|&n| n < 2) {
            errs.push("check_point.dims: dimensions must be >= 2".into());
        }
        if self.counterexample.n < 3 {
            errs.push(format!(
                "counterexample.n: dimension must be >= 3, got {}",
                self.counterexample.n
            ));
        }
        if !(self.counterexample.gamma > -1.0) {
            errs.push(format!(
                "counterexample.gamma: gamma must exceed -1, got {}",
                self.counterexample.gamma
            ));
        }
        for (i, &e) in self.counterexample.eps.iter().enumerate() {
            if !(e > 0.0 && e < 0.5) {
                errs.push(format!(
                    "counterexample.eps[{i}]: eps must lie in (0, 1/2), got {e}"
                ));
            }
        }
        if !(self.holder.radius > 0.0) {
            errs.push(format!(
                "holder.radius: must be positive, got {}",
                self.holder.radius
            ));
        }
        errs
    }

    pub fn domain_specs(&self) -> Vec<DomainSpec> {
        self.domains
            .iter()
            .map(|d| match d.kind.as_str() {
                "disk" => DomainSpec::Disk { r: d.radius },
                _ => DomainSpec::Rectangle { a: d.a, b: d.b },
            })
            .collect()
    }

    pub fn function_list(&self) -> Vec<SourceFn> {
        self.functions
            .iter()
            .map(|n| SourceFn::parse(n).expect("validated"))
            .collect()
    }

    pub fn estimate_list(&self) -> Vec<EstimateKind> {
        self.estimates
            .iter()
            .map(|n| EstimateKind::parse(n).expect("validated"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = RunConfig::parse("").unwrap();
        assert_eq!(cfg.h, 1.0 / 64.0);
        assert_eq!(cfg.params.eps, vec![1e-1, 1e-2, 1e-3, 1e-4]);
        assert_eq!(cfg.seed, 42);
    }

    #[test]
    fn bad_gamma_is_rejected_with_message() {
        let err = RunConfig::parse("[params]\ngamma = [-1.5]\n").unwrap_err();
        assert!(err.iter().any(|e| e.contains("gamma must exceed -1")), "{err:?}");
    }

    #[test]
    fn unknown_key_is_rejected_by_name() {
        let err = RunConfig::parse("foo = 1\n").unwrap_err();
        assert!(err[0].contains("foo"), "{err:?}");
        let err = RunConfig::parse("[solve]\nbar = 2\n").unwrap_err();
        assert!(err[0].contains("bar"), "{err:?}");
    }

    #[test]
    fn all_violations_are_collected() {
        let err = RunConfig::parse(
            "h = -1.0\n[params]\np = [0.5]\ngamma = [-2.0]\neps = [0.1, 0.1]\n",
        )
        .unwrap_err();
        assert!(err.len() >= 4, "{err:?}");
    }
}
