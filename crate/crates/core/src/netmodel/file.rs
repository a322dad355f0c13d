//! The name-based instance document, as read from and written to disk.

use serde::{Deserialize, Serialize};

use super::{
    Flow, ModelOptions, PriorityMode, ProblemInstance, ServerGraph, ValidationError,
    ValidationErrors, DEFAULT_UTILIZATION_CAP,
};
use crate::curve::{RateLatency, TokenBucket};

pub const FILE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServerEntry {
    pub id: String,
    pub port: String,
    pub priority_level: u32,
    pub rate: f64,
    pub latency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowEntry {
    pub id: String,
    pub rate: f64,
    pub burst: f64,
    pub source: String,
    pub destinations: Vec<String>,
    /// Grouped per destination: `candidate_paths[d]` lists the alternatives
    /// towards `destinations[d]`.
    pub candidate_paths: Vec<Vec<Vec<String>>>,
    pub allowed_priorities: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deadline: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptionsEntry {
    #[serde(default = "default_cap")]
    pub utilization_cap: f64,
    #[serde(default)]
    pub priority_mode: PriorityMode,
}

fn default_cap() -> f64 {
    DEFAULT_UTILIZATION_CAP
}

impl Default for OptionsEntry {
    fn default() -> Self {
        OptionsEntry {
            utilization_cap: DEFAULT_UTILIZATION_CAP,
            priority_mode: PriorityMode::Configured,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub version: u32,
    pub servers: Vec<ServerEntry>,
    pub edges: Vec<[String; 2]>,
    pub flows: Vec<FlowEntry>,
    #[serde(default)]
    pub options: OptionsEntry,
}

impl Default for InstanceFile {
    fn default() -> Self {
        Self::new()
    }
}

impl InstanceFile {
    pub fn new() -> Self {
        InstanceFile {
            version: FILE_VERSION,
            servers: Vec::new(),
            edges: Vec::new(),
            flows: Vec::new(),
            options: OptionsEntry::default(),
        }
    }

    pub fn server(mut self, id: &str, port: &str, level: u32, rate: f64, latency: f64) -> Self {
        self.servers.push(ServerEntry {
            id: id.into(),
            port: port.into(),
            priority_level: level,
            rate,
            latency,
        });
        self
    }

    pub fn edge(mut self, from: &str, to: &str) -> Self {
        self.edges.push([from.into(), to.into()]);
        self
    }

    pub fn flow(mut self, flow: FlowEntry) -> Self {
        self.flows.push(flow);
        self
    }

    pub fn utilization_cap(mut self, cap: f64) -> Self {
        self.options.utilization_cap = cap;
        self
    }

    pub fn priority_mode(mut self, mode: PriorityMode) -> Self {
        self.options.priority_mode = mode;
        self
    }
}

impl FlowEntry {
    /// Unicast flow at priority 0; source and destination are taken from the
    /// first path.
    pub fn unicast(id: &str, rate: f64, burst: f64, paths: Vec<Vec<&str>>) -> Self {
        let source = paths.first().and_then(|p| p.first()).copied().unwrap_or("");
        let dest = paths.first().and_then(|p| p.last()).copied().unwrap_or("");
        FlowEntry {
            id: id.into(),
            rate,
            burst,
            source: source.into(),
            destinations: vec![dest.into()],
            candidate_paths: vec![paths
                .into_iter()
                .map(|p| p.into_iter().map(String::from).collect())
                .collect()],
            allowed_priorities: vec![0],
            deadline: None,
        }
    }

    pub fn priorities(mut self, levels: &[u32]) -> Self {
        self.allowed_priorities = levels.to_vec();
        self
    }

    pub fn deadline(mut self, deadline: f64) -> Self {
        self.deadline = Some(deadline);
        self
    }
}

impl ProblemInstance {
    /// Resolves names and validates. Every problem found is reported.
    pub fn from_file(file: &InstanceFile) -> Result<Self, ValidationErrors> {
        let mut errors = Vec::new();
        if file.version != FILE_VERSION {
            errors.push(ValidationError::InvalidFlow {
                flow: String::new(),
                reason: format!("unsupported file version {}", file.version),
            });
            return Err(ValidationErrors(errors));
        }
        let servers = file
            .servers
            .iter()
            .map(|s| {
                (
                    s.id.clone(),
                    s.port.clone(),
                    s.priority_level,
                    RateLatency {
                        rate: s.rate,
                        latency: s.latency,
                    },
                )
            })
            .collect::<Vec<_>>();
        let mut by_name = std::collections::HashMap::new();
        for (i, s) in file.servers.iter().enumerate() {
            by_name.entry(s.id.as_str()).or_insert(i);
        }
        let lookup = |name: &str, errors: &mut Vec<ValidationError>| -> Option<usize> {
            let idx = by_name.get(name).copied();
            if idx.is_none() {
                let e = ValidationError::UnknownServer(name.to_string());
                if !errors.contains(&e) {
                    errors.push(e);
                }
            }
            idx
        };
        let mut edges = Vec::with_capacity(file.edges.len());
        for [a, b] in &file.edges {
            if let (Some(a), Some(b)) = (lookup(a, &mut errors), lookup(b, &mut errors)) {
                edges.push((a, b));
            }
        }
        let mut flows = Vec::with_capacity(file.flows.len());
        for f in &file.flows {
            let source = lookup(&f.source, &mut errors);
            let destinations: Vec<Option<usize>> = f
                .destinations
                .iter()
                .map(|d| lookup(d, &mut errors))
                .collect();
            let candidate_paths: Vec<Vec<Vec<Option<usize>>>> = f
                .candidate_paths
                .iter()
                .map(|per_dest| {
                    per_dest
                        .iter()
                        .map(|p| p.iter().map(|s| lookup(s, &mut errors)).collect())
                        .collect()
                })
                .collect();
            let (Some(source), Some(destinations), Some(candidate_paths)) = (
                source,
                destinations.into_iter().collect::<Option<Vec<_>>>(),
                candidate_paths
                    .into_iter()
                    .map(|d| {
                        d.into_iter()
                            .map(|p| p.into_iter().collect::<Option<Vec<_>>>())
                            .collect::<Option<Vec<_>>>()
                    })
                    .collect::<Option<Vec<_>>>(),
            ) else {
                continue;
            };
            flows.push(Flow {
                name: f.id.clone(),
                arrival: TokenBucket {
                    rate: f.rate,
                    burst: f.burst,
                },
                source,
                destinations,
                candidate_paths,
                allowed_priorities: f.allowed_priorities.clone(),
                deadline: f.deadline,
            });
        }
        let mut seen = std::collections::HashSet::new();
        for f in &file.flows {
            if !seen.insert(f.id.as_str()) {
                errors.push(ValidationError::InvalidFlow {
                    flow: f.id.clone(),
                    reason: "duplicate flow id".into(),
                });
            }
        }
        if !errors.is_empty() {
            return Err(ValidationErrors(errors));
        }
        let graph = ServerGraph::new(servers, edges)?;
        ProblemInstance::new(
            graph,
            flows,
            ModelOptions {
                utilization_cap: file.options.utilization_cap,
                priority_mode: file.options.priority_mode,
            },
        )
    }

    pub fn to_file(&self) -> InstanceFile {
        let g = self.graph();
        let name = |s: usize| g.server(s).name.clone();
        InstanceFile {
            version: FILE_VERSION,
            servers: g
                .servers()
                .iter()
                .map(|s| ServerEntry {
                    id: s.name.clone(),
                    port: g.ports()[s.port].clone(),
                    priority_level: s.priority_level,
                    rate: s.service.rate,
                    latency: s.service.latency,
                })
                .collect(),
            edges: g.edges().iter().map(|&(a, b)| [name(a), name(b)]).collect(),
            flows: self
                .flows()
                .iter()
                .map(|f| FlowEntry {
                    id: f.name.clone(),
                    rate: f.arrival.rate,
                    burst: f.arrival.burst,
                    source: name(f.source),
                    destinations: f.destinations.iter().map(|&d| name(d)).collect(),
                    candidate_paths: f
                        .candidate_paths
                        .iter()
                        .map(|d| {
                            d.iter()
                                .map(|p| p.iter().map(|&s| name(s)).collect())
                                .collect()
                        })
                        .collect(),
                    allowed_priorities: f.allowed_priorities.clone(),
                    deadline: f.deadline,
                })
                .collect(),
            options: OptionsEntry {
                utilization_cap: self.utilization_cap(),
                priority_mode: self.priority_mode(),
            },
        }
    }
}
