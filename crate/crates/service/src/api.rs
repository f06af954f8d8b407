use std::sync::Arc;

use axum::extract::{DefaultBodyLimit, FromRequest, Multipart, Path, Request, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::Engine;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::ServiceError;
use crate::service::{CreateSession, EndowChoice, EndowmentService, ItemInput};
use crate::session::{Decision, MAX_IMAGES_PER_TURN};

pub const API_VERSION: &str = "sca-api/1";
const BODY_LIMIT: usize = 16 * 1024 * 1024;

type AppState = Arc<EndowmentService>;

pub fn router(service: Arc<EndowmentService>) -> Router {
    let api = Router::new()
        .route("/profiles", get(list_profiles))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/messages", post(post_message))
        .route("/sessions/{id}/items", post(record_items))
        .route("/sessions/{id}/endow", post(endow))
        .route("/sessions/{id}/decision", post(record_decision))
        .route("/sessions/{id}/export", get(export))
        .route_layer(middleware::from_fn_with_state(service.clone(), require_token));
    Router::new()
        .route("/health", get(health))
        .merge(api)
        .layer(DefaultBodyLimit::max(BODY_LIMIT))
        .with_state(service)
}

async fn require_token(State(service): State<AppState>, request: Request, next: Next) -> Response {
    if let Some(token) = &service.config().token {
        let presented = request
            .headers()
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "));
        if presented != Some(token.as_str()) {
            return ServiceError::Unauthorized.into_response();
        }
    }
    next.run(request).await
}

/// JSON body that reports rejections in the service's error shape.
struct Body<T>(T);

impl<T, S> FromRequest<S> for Body<T>
where
    T: serde::de::DeserializeOwned,
    S: Send + Sync,
{
    type Rejection = ServiceError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        match Json::<T>::from_request(req, state).await {
            Ok(Json(v)) => Ok(Body(v)),
            Err(e) => Err(ServiceError::InvalidRequest(e.body_text())),
        }
    }
}

async fn health() -> Json<serde_json::Value> {
    Json(json!({ "status": "ready", "api": API_VERSION }))
}

async fn list_profiles(State(s): State<AppState>) -> Result<impl IntoResponse, ServiceError> {
    Ok(Json(json!({ "profiles": s.list_profiles()? })))
}

async fn create_session(State(s): State<AppState>, Body(req): Body<CreateSession>) -> Result<impl IntoResponse, ServiceError> {
    let session = s.create_session(req)?;
    Ok((StatusCode::CREATED, Json(session)))
}

async fn get_session(State(s): State<AppState>, Path(id): Path<String>) -> Result<impl IntoResponse, ServiceError> {
    Ok(Json(s.session(&id)?))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MessageBody {
    #[serde(default)]
    text: String,
    /// Base64 PNG or JPEG blobs.
    #[serde(default)]
    images: Vec<String>,
}

async fn read_message(headers: &HeaderMap, request: Request) -> Result<(String, Vec<Vec<u8>>), ServiceError> {
    let is_multipart = headers
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.starts_with("multipart/form-data"));
    if !is_multipart {
        let Body(body) = Body::<MessageBody>::from_request(request, &()).await?;
        if body.images.len() > MAX_IMAGES_PER_TURN {
            return Err(ServiceError::InvalidRequest(format!(
                "at most {MAX_IMAGES_PER_TURN} images per message, got {}",
                body.images.len()
            )));
        }
        let images = body
            .images
            .iter()
            .map(|b| base64::engine::general_purpose::STANDARD.decode(b.trim()))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| ServiceError::InvalidRequest(format!("images: {e}")))?;
        return Ok((body.text, images));
    }
    let mut multipart = Multipart::from_request(request, &())
        .await
        .map_err(|e| ServiceError::InvalidRequest(e.body_text()))?;
    let mut text = String::new();
    let mut images = Vec::new();
    while let Some(field) = multipart.next_field().await.map_err(|e| ServiceError::InvalidRequest(e.body_text()))? {
        match field.name() {
            Some("text") => text = field.text().await.map_err(|e| ServiceError::InvalidRequest(e.body_text()))?,
            Some("images") | Some("image") => {
                if images.len() == MAX_IMAGES_PER_TURN {
                    return Err(ServiceError::InvalidRequest(format!(
                        "at most {MAX_IMAGES_PER_TURN} images per message"
                    )));
                }
                images.push(field.bytes().await.map_err(|e| ServiceError::InvalidRequest(e.body_text()))?.to_vec());
            }
            other => {
                return Err(ServiceError::InvalidRequest(format!("unexpected form field {other:?}")));
            }
        }
    }
    Ok((text, images))
}

async fn post_message(
    State(s): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    request: Request,
) -> Result<impl IntoResponse, ServiceError> {
    let (text, images) = read_message(&headers, request).await?;
    Ok(Json(s.post_message(&id, text, images).await?))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ItemsBody {
    items: Vec<ItemInput>,
}

async fn record_items(
    State(s): State<AppState>,
    Path(id): Path<String>,
    Body(body): Body<ItemsBody>,
) -> Result<impl IntoResponse, ServiceError> {
    Ok(Json(s.record_items(&id, body.items).await?))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ItemSelector {
    Number(usize),
    Word(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EndowBody {
    item: ItemSelector,
    #[serde(default)]
    seed: Option<u64>,
}

async fn endow(
    State(s): State<AppState>,
    Path(id): Path<String>,
    Body(body): Body<EndowBody>,
) -> Result<impl IntoResponse, ServiceError> {
    let choice = match body.item {
        ItemSelector::Number(n) if body.seed.is_none() => EndowChoice::Item(n),
        ItemSelector::Number(_) => {
            return Err(ServiceError::InvalidRequest("seed only applies to \"random\"".into()))
        }
        ItemSelector::Word(w) if w == "random" => EndowChoice::Random { seed: body.seed },
        ItemSelector::Word(w) => {
            return Err(ServiceError::InvalidRequest(format!("item must be a number or \"random\", got {w:?}")))
        }
    };
    Ok(Json(s.endow_and_offer(&id, choice).await?))
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct DecisionBody {
    decision: Decision,
    #[serde(default)]
    rationale: Option<String>,
}

async fn record_decision(
    State(s): State<AppState>,
    Path(id): Path<String>,
    Body(body): Body<DecisionBody>,
) -> Result<impl IntoResponse, ServiceError> {
    let record = s.record_decision(&id, body.decision, body.rationale).await?;
    Ok((StatusCode::CREATED, Json(record)))
}

async fn export(State(s): State<AppState>, Path(id): Path<String>) -> Result<impl IntoResponse, ServiceError> {
    let bytes = s.export(&id)?;
    Ok((
        [
            (header::CONTENT_TYPE, "application/json".to_string()),
            (header::CONTENT_DISPOSITION, format!("attachment; filename=\"{id}.json\"")),
        ],
        bytes,
    ))
}
