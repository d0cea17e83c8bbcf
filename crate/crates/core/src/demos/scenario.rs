//! Scenario files: the initial file system, the scripted connections and
//! the iteration budget, as JSON with base64 payloads.

use std::collections::BTreeMap;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::effect::World;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{field} is not valid base64: {source}")]
    Base64 {
        field: String,
        source: base64::DecodeError,
    },
    #[error("unknown policy `{0}`")]
    UnknownPolicy(String),
    #[error("max_iterations must be positive")]
    NoIterations,
    #[error("file path `{0}` is not absolute")]
    RelativePath(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ClientId {
    Name(String),
    Number(u64),
}

impl ClientId {
    pub fn label(&self) -> String {
        match self {
            ClientId::Name(s) => s.clone(),
            ClientId::Number(n) => n.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestSpec {
    pub client_id: ClientId,
    pub raw_request_bytes: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default)]
    pub files: BTreeMap<String, String>,
    #[serde(default)]
    pub requests: Vec<RequestSpec>,
    #[serde(default = "default_iterations")]
    pub max_iterations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<String>,
}

fn default_iterations() -> usize {
    32
}

pub const POLICY_NAMES: [&str; 4] = ["webserver", "allow_all_in_tmp", "logging", "zip"];

impl Scenario {
    pub fn from_json(text: &str) -> Result<Scenario, ScenarioError> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.max_iterations == 0 {
            return Err(ScenarioError::NoIterations);
        }
        if let Some(p) = &self.policy {
            if !POLICY_NAMES.contains(&p.as_str()) {
                return Err(ScenarioError::UnknownPolicy(p.clone()));
            }
        }
        if let Some(p) = self.files.keys().find(|p| !p.starts_with('/')) {
            return Err(ScenarioError::RelativePath(p.clone()));
        }
        self.to_world().map(|_| ())
    }

    pub fn to_world(&self) -> Result<World, ScenarioError> {
        let mut w = World::new();
        for (path, content) in &self.files {
            let bytes = B64.decode(content).map_err(|source| ScenarioError::Base64 {
                field: format!("files[{path}]"),
                source,
            })?;
            w = w.with_file(path.clone(), bytes);
        }
        for (i, r) in self.requests.iter().enumerate() {
            let bytes = B64.decode(&r.raw_request_bytes).map_err(|source| ScenarioError::Base64 {
                field: format!("requests[{i}].raw_request_bytes"),
                source,
            })?;
            w = w.with_connection(r.client_id.label(), bytes);
        }
        Ok(w)
    }

    /// Builds a scenario from raw contents; used to write example files.
    pub fn from_parts(files: &[(&str, &[u8])], requests: &[(&str, &[u8])], max_iterations: usize) -> Scenario {
        Scenario {
            files: files.iter().map(|(p, c)| (p.to_string(), B64.encode(c))).collect(),
            requests: requests
                .iter()
                .map(|(id, r)| RequestSpec {
                    client_id: ClientId::Name(id.to_string()),
                    raw_request_bytes: B64.encode(r),
                })
                .collect(),
            max_iterations,
            policy: None,
        }
    }
}
