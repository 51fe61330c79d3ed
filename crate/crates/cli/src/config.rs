//! Experiment description, read from one JSON document.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use hwsn_core::analysis::AnalyticalStub;
use hwsn_core::baselines::BaselineParams;
use hwsn_core::deployment::DeploymentConfig;
use hwsn_core::gfpoly::FieldParams;
use hwsn_core::protocol::SchemeParams;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Stem of the output CSV.
    pub name: String,
    pub seed: u64,
    /// `seed` in here is ignored; each trial's deployment seed is derived
    /// from the experiment seed.
    pub deployment: DeploymentConfig,
    pub schemes: Vec<SchemeSpec>,
    pub metric: Metric,
    pub sweep: Sweep,
    #[serde(default = "one")]
    pub trials: usize,
    /// Nodes captured when `c` is not the swept parameter.
    #[serde(default)]
    pub c: usize,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SchemeSpec {
    Proposed {
        m: usize,
        m_prime: usize,
        t: usize,
        #[serde(default)]
        field: FieldParams,
    },
    Eg {
        pool_size: usize,
        m: usize,
    },
    QComposite {
        pool_size: usize,
        m: usize,
        q_threshold: usize,
    },
    Blundo {
        t: usize,
        #[serde(default)]
        field: FieldParams,
    },
    RandomPairwise {
        m: usize,
        p: f64,
    },
    Lekm,
    Ikdm,
}

pub enum SchemeKind {
    Proposed(SchemeParams),
    Baseline(BaselineParams),
    Stub(AnalyticalStub),
}

impl SchemeSpec {
    pub fn kind(&self) -> SchemeKind {
        match *self {
            SchemeSpec::Proposed { m, m_prime, t, field } => SchemeKind::Proposed(SchemeParams { m, m_prime, t, field }),
            SchemeSpec::Eg { pool_size, m } => SchemeKind::Baseline(BaselineParams::Eg { pool_size, m }),
            SchemeSpec::QComposite { pool_size, m, q_threshold } => {
                SchemeKind::Baseline(BaselineParams::QComposite { pool_size, m, q_threshold })
            }
            SchemeSpec::Blundo { t, field } => SchemeKind::Baseline(BaselineParams::Blundo { t, field }),
            SchemeSpec::RandomPairwise { m, p } => SchemeKind::Baseline(BaselineParams::RandomPairwise { m, p }),
            SchemeSpec::Lekm => SchemeKind::Stub(AnalyticalStub::Lekm),
            SchemeSpec::Ikdm => SchemeKind::Stub(AnalyticalStub::Ikdm),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            SchemeSpec::Proposed { .. } => "proposed",
            SchemeSpec::Eg { .. } => "eg",
            SchemeSpec::QComposite { .. } => "q-composite",
            SchemeSpec::Blundo { .. } => "blundo",
            SchemeSpec::RandomPairwise { .. } => "random-pairwise",
            SchemeSpec::Lekm => "lekm",
            SchemeSpec::Ikdm => "ikdm",
        }
    }

    /// `key=value` pairs joined by `;`.
    pub fn params_string(&self) -> String {
        match *self {
            SchemeSpec::Proposed { m, m_prime, t, field } => format!("m={m};m_prime={m_prime};t={t};q={}", field.modulus()),
            SchemeSpec::Eg { pool_size, m } => format!("pool_size={pool_size};m={m}"),
            SchemeSpec::QComposite { pool_size, m, q_threshold } => {
                format!("pool_size={pool_size};m={m};q_threshold={q_threshold}")
            }
            SchemeSpec::Blundo { t, field } => format!("t={t};q={}", field.modulus()),
            SchemeSpec::RandomPairwise { m, p } => format!("m={m};p={p}"),
            SchemeSpec::Lekm | SchemeSpec::Ikdm => String::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    Connectivity,
    SensorCapture,
    HeadCapture,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    SensorsPerGroup,
    M,
    MPrime,
    PoolSize,
    C,
    MisdeployFraction,
}

impl SweepParam {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParam::SensorsPerGroup => "sensors_per_group",
            SweepParam::M => "m",
            SweepParam::MPrime => "m_prime",
            SweepParam::PoolSize => "pool_size",
            SweepParam::C => "c",
            SweepParam::MisdeployFraction => "misdeploy_fraction",
        }
    }

    fn integral(self) -> bool {
        self != SweepParam::MisdeployFraction
    }

    /// Whether changing it changes the keyed network.
    pub fn reshapes_network(self) -> bool {
        self != SweepParam::C
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub parameter: SweepParam,
    pub values: Vec<f64>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> anyhow::Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).context("parsing experiment config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            bail!("name: must be a non-empty file stem");
        }
        if self.trials == 0 {
            bail!("trials: must be at least 1");
        }
        if self.schemes.is_empty() {
            bail!("schemes: list at least one scheme");
        }
        self.deployment.validate()?;
        for v in &self.sweep.values {
            if !v.is_finite() || *v < 0.0 || (self.sweep.parameter.integral() && v.fract() != 0.0) {
                bail!("sweep.values: {v} is not a valid {}", self.sweep.parameter.as_str());
            }
        }
        for (i, v) in self.sweep.values.iter().enumerate() {
            self.at(*v).check_point().with_context(|| format!("sweep.values[{i}] = {v}"))?;
        }
        if self.sweep.values.is_empty() {
            self.check_point()?;
        }
        Ok(())
    }

    fn check_point(&self) -> anyhow::Result<()> {
        let heads = self.deployment.group_count();
        let sensors = heads * self.deployment.sensors_per_group;
        for (i, s) in self.schemes.iter().enumerate() {
            let ctx = || format!("schemes[{i}] ({})", s.label());
            match (s.kind(), self.metric) {
                (SchemeKind::Proposed(p), _) => p.validate(heads).with_context(ctx)?,
                (SchemeKind::Baseline(b), Metric::HeadCapture) => {
                    bail!("{}: metric head-capture only applies to proposed, lekm and ikdm, not {}", ctx(), b.label())
                }
                (SchemeKind::Baseline(b), _) => b.validate().with_context(ctx)?,
                (SchemeKind::Stub(_), Metric::Connectivity) => {
                    bail!("{}: analytical stubs carry no connectivity model", ctx())
                }
                (SchemeKind::Stub(_), _) => {}
            }
        }
        match self.metric {
            Metric::SensorCapture if self.c > sensors => {
                bail!("c: {} exceeds the {sensors} deployed sensors", self.c)
            }
            Metric::HeadCapture if self.c > heads => bail!("c: {} exceeds the {heads} group heads", self.c),
            _ => Ok(()),
        }
    }

    /// Copy with the swept parameter set to `v`.
    pub fn at(&self, v: f64) -> ExperimentConfig {
        let mut out = self.clone();
        let n = v as usize;
        match self.sweep.parameter {
            SweepParam::SensorsPerGroup => out.deployment.sensors_per_group = n,
            SweepParam::MisdeployFraction => out.deployment.misdeploy_fraction = v,
            SweepParam::C => out.c = n,
            SweepParam::M => {
                for s in &mut out.schemes {
                    match s {
                        SchemeSpec::Proposed { m, .. }
                        | SchemeSpec::Eg { m, .. }
                        | SchemeSpec::QComposite { m, .. }
                        | SchemeSpec::RandomPairwise { m, .. } => *m = n,
                        _ => {}
                    }
                }
            }
            SweepParam::MPrime => {
                for s in &mut out.schemes {
                    if let SchemeSpec::Proposed { m_prime, .. } = s {
                        *m_prime = n;
                    }
                }
            }
            SweepParam::PoolSize => {
                for s in &mut out.schemes {
                    if let SchemeSpec::Eg { pool_size, .. } | SchemeSpec::QComposite { pool_size, .. } = s {
                        *pool_size = n;
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "name": "t",
        "seed": 1,
        "deployment": {"field_side": 300, "groups_per_side": 3, "sensors_per_group": 20, "radio_range_sensor": 30},
        "schemes": [{"kind": "proposed", "m": 10, "m_prime": 15, "t": 12}],
        "metric": "connectivity",
        "sweep": {"parameter": "sensors_per_group", "values": [10, 20]}
    }"#;

    #[test]
    fn parses_minimal() {
        let cfg = ExperimentConfig::from_json(MINIMAL).unwrap();
        assert_eq!(cfg.trials, 1);
        assert_eq!(cfg.deployment.radio_range_head, 150.0);
        let back = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
    }

    fn err_of(patch: &str, with: &str) -> String {
        let text = MINIMAL.replace(patch, with);
        format!("{:#}", ExperimentConfig::from_json(&text).unwrap_err())
    }

    #[test]
    fn diagnostics_name_the_field() {
        assert!(err_of(r#""seed": 1"#, r#""seed": 1, "trials": 0"#).contains("trials"));
        assert!(err_of(r#""t": 12"#, r#""t": 3"#).contains("schemes[0]"));
        assert!(err_of(r#""radio_range_sensor": 30"#, r#""radio_range_sensor": -1"#).contains("radio_range_sensor"));
        assert!(err_of("[10, 20]", "[10, 2.5]").contains("sweep.values"));
        assert!(err_of(r#""seed": 1"#, r#""seed": 1, "bogus": 0"#).contains("bogus"));
        assert!(err_of(r#""connectivity""#, r#""head-capture", "c": 10"#).contains("c:"));
    }

    #[test]
    fn sweep_point_overrides() {
        let cfg = ExperimentConfig::from_json(&MINIMAL.replace("sensors_per_group\", \"values", "m_prime\", \"values").replace("[10, 20]", "[30]")).unwrap();
        let p = cfg.at(30.0);
        assert!(matches!(p.schemes[0], SchemeSpec::Proposed { m_prime: 30, .. }));
    }
}
