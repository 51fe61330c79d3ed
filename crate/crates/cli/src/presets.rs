//! Built-in experiments, one per paper figure.
//!
//! Desk scale keeps `n_i` and the radio geometry but shrinks the field to
//! 3 x 3 groups; `full` restores the 10 x 10 layout.

use anyhow::bail;
use hwsn_core::deployment::DeploymentConfig;
use hwsn_core::gfpoly::FieldParams;

use crate::config::{ExperimentConfig, Metric, SchemeSpec, Sweep, SweepParam};

pub const PRESETS: [&str; 7] = ["fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8"];

pub const DEFAULT_SEED: u64 = 20_240_601;

/// Group size from "a deployment group can have 221 members".
const CAPTURE_GROUP_SIZE: usize = 220;

fn deployment(full: bool, n_i: usize) -> DeploymentConfig {
    if full {
        DeploymentConfig::paper_scale(n_i, 0)
    } else {
        DeploymentConfig::desk_scale(n_i, 0)
    }
}

fn proposed(m: usize, m_prime: usize, full: bool) -> SchemeSpec {
    let heads = if full { 100 } else { 9 };
    SchemeSpec::Proposed { m, m_prime, t: heads + 1, field: FieldParams::default() }
}

fn steps(from: usize, to: usize, by: usize) -> Vec<f64> {
    (from..=to).step_by(by).map(|v| v as f64).collect()
}

/// Configs for a preset; `fig3` yields one per group size.
pub fn preset(name: &str, full: bool) -> anyhow::Result<Vec<ExperimentConfig>> {
    let conn_trials = if full { 10 } else { 2 };
    let capture_trials = if full { 20 } else { 5 };
    let base = |name: &str, n_i: usize, schemes: Vec<SchemeSpec>, metric, sweep, trials| ExperimentConfig {
        name: name.to_string(),
        seed: DEFAULT_SEED,
        deployment: deployment(full, n_i),
        schemes,
        metric,
        sweep,
        trials,
        c: 0,
        output_dir: None,
    };
    let n_sweep = || Sweep { parameter: SweepParam::SensorsPerGroup, values: steps(100, 1000, 100) };
    let c_sweep = || {
        let sensors = if full { 100 } else { 9 } * CAPTURE_GROUP_SIZE;
        Sweep { parameter: SweepParam::C, values: steps(0, (sensors / 2).min(500), 50) }
    };
    let cfgs = match name {
        "fig2" => vec![base("fig2", 100, vec![proposed(200, 200, full)], Metric::Connectivity, n_sweep(), conn_trials)],
        "fig3" => [500, 1000]
            .into_iter()
            .map(|n_i| {
                let sweep = Sweep { parameter: SweepParam::MPrime, values: steps(200, 1000, 100) };
                base(&format!("fig3-n{n_i}"), n_i, vec![proposed(200, 200, full)], Metric::Connectivity, sweep, conn_trials)
            })
            .collect(),
        "fig4" => vec![base("fig4", 100, vec![proposed(200, 200, full)], Metric::Connectivity, n_sweep(), conn_trials)],
        "fig5" => vec![base("fig5", 100, vec![proposed(200, 300, full)], Metric::Connectivity, n_sweep(), conn_trials)],
        "fig6" => {
            let schemes = vec![
                proposed(200, 300, full),
                SchemeSpec::Eg { pool_size: 10_000, m: 200 },
                SchemeSpec::QComposite { pool_size: 5_000, m: 200, q_threshold: 2 },
                SchemeSpec::Lekm,
            ];
            vec![base("fig6", CAPTURE_GROUP_SIZE, schemes, Metric::SensorCapture, c_sweep(), capture_trials)]
        }
        "fig7" => {
            let schemes = vec![
                proposed(200, 300, full),
                SchemeSpec::Blundo { t: 199, field: FieldParams::default() },
                SchemeSpec::Ikdm,
            ];
            vec![base("fig7", CAPTURE_GROUP_SIZE, schemes, Metric::SensorCapture, c_sweep(), capture_trials)]
        }
        "fig8" => {
            let heads = if full { 100 } else { 9 };
            let by = if full { 10 } else { 1 };
            let sweep = Sweep { parameter: SweepParam::C, values: steps(0, heads, by) };
            let schemes = vec![proposed(200, 300, full), SchemeSpec::Lekm, SchemeSpec::Ikdm];
            vec![base("fig8", CAPTURE_GROUP_SIZE, schemes, Metric::HeadCapture, sweep, capture_trials)]
        }
        other => bail!("unknown preset {other:?}; expected one of {}", PRESETS.join(", ")),
    };
    for c in &cfgs {
        c.validate()?;
    }
    Ok(cfgs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_presets_validate() {
        for name in PRESETS {
            for full in [false, true] {
                assert!(!preset(name, full).unwrap().is_empty(), "{name}");
            }
        }
        assert!(preset("fig9", false).is_err());
    }
}
