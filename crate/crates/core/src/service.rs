//! HTTP diagnosis and what-if service over a loaded artifact.
//!
//! The artifact is immutable once loaded, so handlers share it through an
//! `Arc` without locking. `null` attribute values mean missing.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

use crate::data::{AttributeKind, Role};
use crate::error::Error;
use crate::fuzzy::{OutputLabel, Term, VariableKind};
use crate::inference::{infer_with, Diagnosis, InferenceResult, InputValue, PatientInput, RuleActivation};
use crate::pipeline::Artifact;

/// Upper bound on what-if sweep length.
pub const MAX_STEPS: usize = 10_000;

/// An error body: which field is at fault, and why.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub error: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stage: Option<String>,
}

struct Failure(StatusCode, ApiError);

impl IntoResponse for Failure {
    fn into_response(self) -> Response {
        (self.0, Json(self.1)).into_response()
    }
}

fn bad_request(field: Option<&str>, error: String) -> Failure {
    Failure(
        StatusCode::BAD_REQUEST,
        ApiError {
            error,
            field: field.map(str::to_string),
            stage: None,
        },
    )
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        match err {
            Error::UnknownAttribute(ref name) => Failure(
                StatusCode::UNPROCESSABLE_ENTITY,
                ApiError {
                    error: err.to_string(),
                    field: Some(name.clone()),
                    stage: None,
                },
            ),
            Error::Input { ref attribute, .. } => Failure(
                StatusCode::UNPROCESSABLE_ENTITY,
                ApiError {
                    error: err.to_string(),
                    field: Some(attribute.clone()),
                    stage: None,
                },
            ),
            other => {
                let stage = match &other {
                    Error::Stage { stage, .. } => stage.to_string(),
                    _ => "inference".to_string(),
                };
                Failure(
                    StatusCode::INTERNAL_SERVER_ERROR,
                    ApiError {
                        error: other.to_string(),
                        field: None,
                        stage: Some(stage),
                    },
                )
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttributeInfo {
    pub name: String,
    pub role: Role,
    #[serde(rename = "type")]
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    /// Training range widened by the fuzzy spread, for numeric attributes.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub range: Option<[f64; 2]>,
    pub description: String,
    /// Whether any selected rule tests this attribute.
    pub used: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchemaResponse {
    pub attributes: Vec<AttributeInfo>,
    pub decision: String,
    pub threshold: f64,
    pub output_universe: [f64; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RuleInfo {
    pub id: usize,
    pub text: String,
    pub consequent: OutputLabel,
    pub support: usize,
    pub weight: f64,
    pub terms: Vec<Term>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnoseRequest {
    pub attributes: BTreeMap<String, Option<InputValue>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnoseResponse {
    pub percentage: Option<f64>,
    pub label: Diagnosis,
    /// Every rule, strongest first; rules that did not fire show 0.
    pub activations: Vec<RuleActivation>,
    pub uncovered: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub attribute: String,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WhatIfRequest {
    pub attributes: BTreeMap<String, Option<InputValue>>,
    pub sweep: Sweep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhatIfPoint {
    pub value: f64,
    pub percentage: Option<f64>,
    pub label: Diagnosis,
}

/// The engine behind both the CLI and the HTTP handlers.
#[derive(Debug)]
pub struct Engine {
    artifact: Artifact,
}

impl Engine {
    pub fn new(artifact: Artifact) -> Self {
        Engine { artifact }
    }

    pub fn artifact(&self) -> &Artifact {
        &self.artifact
    }

    /// Rejects names that are not condition attributes, listing the legal ones.
    pub fn input(&self, values: &BTreeMap<String, Option<InputValue>>) -> Result<PatientInput, Error> {
        let mut input = PatientInput::new();
        for (name, value) in values {
            if self.artifact.rulebase.variable(name).is_none() {
                let legal: Vec<&str> = self.artifact.rulebase.variables.iter().map(|v| v.attribute.as_str()).collect();
                return Err(Error::Input {
                    attribute: name.clone(),
                    message: format!("unknown attribute; legal names are {}", legal.join(", ")),
                });
            }
            match value {
                Some(v) => input.set(name, v.clone()),
                None => input.set_missing(name),
            };
        }
        Ok(input)
    }

    pub fn infer(&self, input: &PatientInput) -> Result<InferenceResult, Error> {
        let a = &self.artifact;
        infer_with(&a.rulebase, input, a.config.inference, a.rulebase.threshold, a.config.fallback)
    }

    pub fn diagnose(&self, input: &PatientInput) -> Result<DiagnoseResponse, Error> {
        let result = self.infer(input)?;
        let mut activations: Vec<RuleActivation> =
            result.activations.clone();
        activations.sort_by(|x, y| y.activation.total_cmp(&x.activation).then(x.rule_id.cmp(&y.rule_id)));
        Ok(DiagnoseResponse {
            uncovered: result.uncovered(),
            percentage: result.percentage,
            label: result.label,
            activations,
        })
    }

    pub fn whatif(&self, values: &BTreeMap<String, Option<InputValue>>, sweep: &Sweep) -> Result<Vec<WhatIfPoint>, Error> {
        let bad = |message: String| Error::Input {
            attribute: "sweep".into(),
            message,
        };
        if sweep.steps == 0 || sweep.steps > MAX_STEPS {
            return Err(bad(format!("steps must be in 1..={MAX_STEPS}")));
        }
        if !sweep.from.is_finite() || !sweep.to.is_finite() {
            return Err(bad("from and to must be finite".into()));
        }
        let var = self.artifact.rulebase.variable(&sweep.attribute).ok_or_else(|| Error::Input {
            attribute: sweep.attribute.clone(),
            message: "unknown sweep attribute".into(),
        })?;
        if !var.is_numeric() {
            return Err(Error::Input {
                attribute: sweep.attribute.clone(),
                message: "only numeric attributes can be swept".into(),
            });
        }
        let mut input = self.input(values)?;
        (0..sweep.steps)
            .map(|i| {
                let value = if sweep.steps == 1 {
                    sweep.from
                } else {
                    sweep.from + (sweep.to - sweep.from) * i as f64 / (sweep.steps - 1) as f64
                };
                input.set(&sweep.attribute, InputValue::Number(value));
                let r = self.infer(&input)?;
                Ok(WhatIfPoint {
                    value,
                    percentage: r.percentage,
                    label: r.label,
                })
            })
            .collect()
    }

    pub fn schema(&self) -> SchemaResponse {
        let a = &self.artifact;
        let used: std::collections::BTreeSet<&str> = a
            .rulebase
            .rules
            .iter()
            .flat_map(|r| r.terms.iter().map(|t| t.attribute.as_str()))
            .collect();
        let attributes = a
            .schema
            .attributes()
            .iter()
            .map(|attr| {
                let range = a.rulebase.variable(&attr.name).and_then(|v| match &v.kind {
                    VariableKind::Numeric { universe, .. } => Some(*universe),
                    VariableKind::Nominal => None,
                });
                AttributeInfo {
                    name: attr.name.clone(),
                    role: attr.role,
                    kind: match attr.kind {
                        AttributeKind::Numeric => "numeric".into(),
                        AttributeKind::Nominal { .. } => "nominal".into(),
                        AttributeKind::Binary => "binary".into(),
                        AttributeKind::Interval { .. } => "interval".into(),
                    },
                    labels: attr.kind.labels(),
                    range,
                    description: attr.description.clone(),
                    used: used.contains(attr.name.as_str()),
                }
            })
            .collect();
        SchemaResponse {
            attributes,
            decision: a.schema.decision().name.clone(),
            threshold: a.rulebase.threshold,
            output_universe: a.rulebase.output.universe,
        }
    }

    pub fn rules(&self) -> Vec<RuleInfo> {
        let a = &self.artifact;
        a.rules
            .rules
            .iter()
            .zip(&a.rulebase.rules)
            .map(|(crisp, fuzzy)| RuleInfo {
                id: crisp.id,
                text: crisp.to_string(),
                consequent: fuzzy.consequent,
                support: crisp.support,
                weight: fuzzy.weight,
                terms: fuzzy.terms.clone(),
            })
            .collect()
    }
}

fn parse_body<T: serde::de::DeserializeOwned>(body: &Bytes) -> Result<T, Failure> {
    serde_json::from_slice(body).map_err(|e| {
        let message = e.to_string();
        // serde_json names the offending field in backticks
        let field = message.split('`').nth(1).map(str::to_string);
        bad_request(field.as_deref(), message)
    })
}

async fn schema_handler(State(engine): State<Arc<Engine>>) -> Json<SchemaResponse> {
    Json(engine.schema())
}

async fn rules_handler(State(engine): State<Arc<Engine>>) -> Json<Vec<RuleInfo>> {
    Json(engine.rules())
}

async fn diagnose_handler(State(engine): State<Arc<Engine>>, body: Bytes) -> Result<Json<DiagnoseResponse>, Failure> {
    let req: DiagnoseRequest = parse_body(&body)?;
    let input = engine.input(&req.attributes)?;
    Ok(Json(engine.diagnose(&input)?))
}

async fn whatif_handler(State(engine): State<Arc<Engine>>, body: Bytes) -> Result<Json<Vec<WhatIfPoint>>, Failure> {
    let req: WhatIfRequest = parse_body(&body)?;
    Ok(Json(engine.whatif(&req.attributes, &req.sweep)?))
}

/// Routes for the four `/v1` endpoints, plus static files when `static_dir` is set.
pub fn router(engine: Arc<Engine>, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/v1/schema", get(schema_handler))
        .route("/v1/rules", get(rules_handler))
        .route("/v1/diagnose", post(diagnose_handler))
        .route("/v1/whatif", post(whatif_handler))
        .with_state(engine);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}
