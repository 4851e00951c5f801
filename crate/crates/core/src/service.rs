//! Local HTTP API used by the assessor UI.
//!
//! | method | path | body |
//! |---|---|---|
//! | GET | /api/health | |
//! | GET | /api/taxonomy | |
//! | GET | /api/profiles | |
//! | GET | /api/detectors | |
//! | POST | /api/score | `{case, mode?, profile?, detector?}` |
//! | POST | /api/compare | `{case, profile?, detector?}` |
//!
//! `profile` and `detector` are either the name of a loaded profile or a full
//! inline object. A case without an id is scored as `adhoc`. Errors come back
//! as `{"error": {"code", "message"}}` with status 400 for malformed JSON and
//! 422 for everything else.

use std::collections::BTreeSet;
use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::net::TcpListener;

use crate::decimal;
use crate::error::{Error, Result};
use crate::model::{validate_profile, Assessment, Band, CaseDraft, DetectorProfile, Mode, Taxonomy, WeightProfile};
use crate::scoring::{assess_case, compare_modes, ScoreBreakdown};

pub const ADHOC_CASE_ID: &str = "adhoc";

/// Everything the service serves. Immutable once built.
#[derive(Debug, Clone)]
pub struct ServiceConfig {
    taxonomy: Taxonomy,
    profiles: Vec<WeightProfile>,
    detectors: Vec<DetectorProfile>,
}

impl ServiceConfig {
    /// The first profile and detector are the defaults.
    pub fn new(taxonomy: Taxonomy, profiles: Vec<WeightProfile>, detectors: Vec<DetectorProfile>) -> Result<Self> {
        if profiles.is_empty() {
            return Err(Error::InvalidArgument("at least one weight profile is required".into()));
        }
        if detectors.is_empty() {
            return Err(Error::InvalidArgument("at least one detector profile is required".into()));
        }
        let mut names = BTreeSet::new();
        for p in &profiles {
            validate_profile(p).into_result()?;
            if !names.insert(p.name.as_str()) {
                return Err(Error::InvalidArgument(format!("duplicate profile name {}", p.name)));
            }
        }
        let mut names = BTreeSet::new();
        for d in &detectors {
            d.validate()?;
            if !names.insert(d.name.as_str()) {
                return Err(Error::InvalidArgument(format!("duplicate detector name {}", d.name)));
            }
        }
        Ok(Self {
            taxonomy,
            profiles,
            detectors,
        })
    }

    /// Shipped taxonomy, profile and detector.
    pub fn shipped() -> Self {
        Self::new(
            crate::fixtures::default_taxonomy(),
            vec![crate::fixtures::default_profile()],
            vec![crate::fixtures::default_detector()],
        )
        .expect("shipped configuration is valid")
    }

    fn profile(&self, reference: Option<Value>) -> Result<WeightProfile> {
        match reference {
            None | Some(Value::Null) => Ok(self.profiles[0].clone()),
            Some(Value::String(name)) => self
                .profiles
                .iter()
                .find(|p| p.name == name)
                .cloned()
                .ok_or(Error::UnknownProfile(name)),
            Some(inline) => from_value(inline, "profile"),
        }
    }

    fn detector(&self, reference: Option<Value>) -> Result<DetectorProfile> {
        match reference {
            None | Some(Value::Null) => Ok(self.detectors[0].clone()),
            Some(Value::String(name)) => self
                .detectors
                .iter()
                .find(|d| d.name == name)
                .cloned()
                .ok_or(Error::UnknownDetector(name)),
            Some(inline) => from_value(inline, "detector"),
        }
    }
}

fn from_value<T: DeserializeOwned>(value: Value, field: &str) -> Result<T> {
    serde_json::from_value(value).map_err(|e| Error::Parse {
        line: 0,
        column: 0,
        message: format!("{field}: {e}"),
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScoreRequest {
    case: Value,
    #[serde(default)]
    mode: Option<String>,
    #[serde(default)]
    profile: Option<Value>,
    #[serde(default)]
    detector: Option<Value>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CompareRequest {
    case: Value,
    #[serde(default)]
    profile: Option<Value>,
    #[serde(default)]
    detector: Option<Value>,
}

/// Wire form of one assessment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreResponse {
    pub case_id: String,
    pub mode: Mode,
    pub adv: f64,
    pub det: f64,
    pub imp: f64,
    #[serde(serialize_with = "decimal::serialize_2dp")]
    pub score: f64,
    pub score_exact: f64,
    pub band: Band,
    pub breakdown: ScoreBreakdown,
}

impl From<Assessment> for ScoreResponse {
    fn from(a: Assessment) -> Self {
        ScoreResponse {
            case_id: a.case_id,
            mode: a.mode,
            adv: a.adv,
            det: a.det,
            imp: a.imp,
            score: a.score,
            score_exact: a.score,
            band: a.band,
            breakdown: a.breakdown,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareResponse {
    pub with: ScoreResponse,
    pub baseline: ScoreResponse,
    /// with - baseline
    #[serde(serialize_with = "decimal::serialize_2dp")]
    pub delta: f64,
    pub delta_exact: f64,
}

struct ApiError(Error);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match self.0 {
            Error::Parse { line, .. } if line > 0 => StatusCode::BAD_REQUEST,
            ref e if e.is_validation() => StatusCode::UNPROCESSABLE_ENTITY,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let body = json!({"error": {"code": self.0.code(), "message": self.0.to_string()}});
        (status, json_body(&body)).into_response()
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        ApiError(e)
    }
}

fn json_body<T: Serialize>(value: &T) -> Response {
    let text = serde_json::to_string(value).expect("response types serialize");
    ([(header::CONTENT_TYPE, "application/json; charset=utf-8")], text).into_response()
}

type Shared = Arc<ServiceConfig>;

pub fn router(config: ServiceConfig) -> Router {
    Router::new()
        .route("/api/health", get(health))
        .route("/api/taxonomy", get(taxonomy))
        .route("/api/profiles", get(profiles))
        .route("/api/detectors", get(detectors))
        .route("/api/score", post(score))
        .route("/api/compare", post(compare))
        .with_state(Arc::new(config))
}

async fn health() -> Response {
    json_body(&json!({"status": "ok"}))
}

async fn taxonomy(State(config): State<Shared>) -> Response {
    json_body(&config.taxonomy)
}

async fn profiles(State(config): State<Shared>) -> Response {
    json_body(&json!({"default": config.profiles[0].name, "profiles": config.profiles}))
}

async fn detectors(State(config): State<Shared>) -> Response {
    json_body(&json!({"default": config.detectors[0].name, "detectors": config.detectors}))
}

fn parse_body<T: DeserializeOwned>(body: &[u8]) -> Result<T> {
    let text = std::str::from_utf8(body).map_err(|e| Error::Parse {
        line: 1,
        column: e.valid_up_to() + 1,
        message: "request body is not UTF-8".into(),
    })?;
    crate::files::parse_json(text)
}

fn parse_case(value: Value) -> Result<crate::model::CaseRecord> {
    let draft: CaseDraft = from_value(value, "case")?;
    draft.into_record(Some(ADHOC_CASE_ID))
}

/// Scores a request body for `/api/score`.
pub fn score_request(config: &ServiceConfig, body: &[u8]) -> Result<ScoreResponse> {
    let request: ScoreRequest = parse_body(body)?;
    let case = parse_case(request.case)?;
    let mode = match request.mode {
        Some(token) => token.parse()?,
        None => Mode::WithChallenger,
    };
    let profile = config.profile(request.profile)?;
    let detector = config.detector(request.detector)?;
    Ok(assess_case(&case, &config.taxonomy, &profile, &detector, mode)?.into())
}

/// Scores a request body for `/api/compare`.
pub fn compare_request(config: &ServiceConfig, body: &[u8]) -> Result<CompareResponse> {
    let request: CompareRequest = parse_body(body)?;
    let case = parse_case(request.case)?;
    let profile = config.profile(request.profile)?;
    let detector = config.detector(request.detector)?;
    let c = compare_modes(&case, &config.taxonomy, &profile, &detector)?;
    Ok(CompareResponse {
        with: c.with.into(),
        baseline: c.baseline.into(),
        delta: c.delta,
        delta_exact: c.delta,
    })
}

async fn score(State(config): State<Shared>, body: Bytes) -> std::result::Result<Response, ApiError> {
    Ok(json_body(&score_request(&config, &body)?))
}

async fn compare(State(config): State<Shared>, body: Bytes) -> std::result::Result<Response, ApiError> {
    Ok(json_body(&compare_request(&config, &body)?))
}

/// Serves until Ctrl-C.
pub async fn serve(listener: TcpListener, config: ServiceConfig) -> std::io::Result<()> {
    axum::serve(listener, router(config))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

/// Binds `addr`, calls `on_ready` with the bound address, then serves until
/// interrupted.
pub fn serve_blocking(addr: &str, config: ServiceConfig, on_ready: impl FnOnce(SocketAddr)) -> Result<()> {
    let io = |source| Error::Io {
        path: addr.into(),
        source,
    };
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(io)?;
    runtime.block_on(async {
        let listener = TcpListener::bind(addr).await.map_err(|source| Error::Bind {
            addr: addr.to_string(),
            source,
        })?;
        on_ready(listener.local_addr().map_err(io)?);
        serve(listener, config).await.map_err(io)
    })
}
