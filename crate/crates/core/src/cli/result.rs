use serde::{Deserialize, Serialize};

use super::CliError;
use crate::netmodel::ProblemInstance;
use crate::optim::{Method, Termination};

pub const RESULT_VERSION: u32 = 1;

/// Selected alternative and priority of one flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Choice {
    pub flow: String,
    pub alternative: usize,
    pub priority: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delay_bound: Option<f64>,
}

/// Any document with a `choices` list; result files qualify.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentFile {
    pub choices: Vec<Choice>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunEcho {
    pub objective: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utility: Option<String>,
    pub budget: usize,
    pub utilization_cap: f64,
    pub lambda_cap: Option<f64>,
    pub lambda_deadline: Option<f64>,
    /// Penalty weights in effect after calibration; zero for methods that
    /// only evaluate integral points.
    pub lambda_used: [f64; 2],
    pub tasks: usize,
    pub sibling_interference: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultFile {
    pub version: u32,
    pub method: Method,
    pub seed: u64,
    pub options: RunEcho,
    pub choices: Vec<Choice>,
    pub objective: Option<f64>,
    pub feasible: bool,
    pub termination: Termination,
    pub evaluations: usize,
    pub polytope_violations: usize,
    /// Penalized objective per iteration; `null` where it was infinite.
    pub trace: Vec<Option<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_clock_seconds: Option<f64>,
}

/// Choices naming each flow's selected variable.
pub fn choices_of(
    instance: &ProblemInstance,
    chosen: &[usize],
    delays: Option<&[f64]>,
) -> Vec<Choice> {
    chosen
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let info = &instance.vars()[v];
            Choice {
                flow: instance.flows()[i].name.clone(),
                alternative: info.alternative,
                priority: info.priority,
                delay_bound: delays.map(|d| d[i]).filter(|d| d.is_finite()),
            }
        })
        .collect()
}

/// Variable per flow from named choices. Flows without a choice take their
/// first alternative at their highest allowed priority.
pub fn vars_of(instance: &ProblemInstance, choices: &[Choice]) -> Result<Vec<usize>, CliError> {
    let mut chosen: Vec<usize> = instance.blocks().iter().map(|b| b.start).collect();
    for c in choices {
        let i = instance
            .flows()
            .iter()
            .position(|f| f.name == c.flow)
            .ok_or_else(|| CliError::Input(format!("assignment names unknown flow '{}'", c.flow)))?;
        chosen[i] = instance.blocks()[i]
            .clone()
            .find(|&v| {
                let info = &instance.vars()[v];
                info.alternative == c.alternative && info.priority == c.priority
            })
            .ok_or_else(|| {
                CliError::Input(format!(
                    "flow '{}' has no alternative {} at priority {}",
                    c.flow, c.alternative, c.priority
                ))
            })?;
    }
    Ok(chosen)
}
