//! HTTP interface for knowledge-base editing and consultations.
//!
//! Every response body is JSON; errors carry a code from [`ErrorCode`].
//! Knowledge-base edits use the current version digest as an entity tag
//! and must send it back in `If-Match`.

pub mod config;
pub mod error;
pub mod json;

use std::future::Future;
use std::path::Path;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, HeaderMap, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use dsage_core::kb::RuleId;
use dsage_core::report::consultation_report;
use dsage_store::{AdvisoryStore, KbVersion, StoreError};
use tower_http::cors::{AllowOrigin, CorsLayer};

pub use config::Config;
pub use error::{ApiError, ErrorCode};
use json::{KbJson, ObservationJson, ObservationsBody, Pretty, RebaseJson, RuleBody, SessionJson};

type Store = Arc<AdvisoryStore>;
type ApiResult = Result<Response, ApiError>;

/// Opens the store at `path`, installing the seed knowledge base if it is
/// empty.
pub fn open_store(path: &Path) -> Result<Store, StoreError> {
    let store = AdvisoryStore::open(path)?;
    let (version, created) = store.ensure_seeded()?;
    if created {
        tracing::info!(%version, store = %path.display(), "initialized store with seed knowledge base");
    } else {
        tracing::info!(%version, store = %path.display(), "opened store");
    }
    Ok(Arc::new(store))
}

pub fn app(store: Store, cors_origin: Option<&str>) -> Router {
    let router = Router::new()
        .route("/api/health", get(health))
        .route("/api/kb", get(get_kb))
        .route("/api/kb/rules/{id}", put(put_rule).delete(delete_rule))
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{id}", get(get_session))
        .route("/api/sessions/{id}/observations", put(put_observations))
        .route("/api/sessions/{id}/advise", post(advise))
        .route("/api/sessions/{id}/rebase", post(rebase))
        .fallback(|| async { ApiError::new(ErrorCode::NotFound, "no such endpoint") })
        .method_not_allowed_fallback(|| async {
            ApiError::new(ErrorCode::MethodNotAllowed, "method not allowed on this endpoint")
        })
        .with_state(store);
    match cors_origin.and_then(|o| HeaderValue::from_str(o).ok()) {
        Some(origin) => router.layer(
            CorsLayer::new()
                .allow_origin(AllowOrigin::exact(origin))
                .allow_methods([Method::GET, Method::POST, Method::PUT, Method::DELETE])
                .allow_headers([header::CONTENT_TYPE, header::IF_MATCH])
                .expose_headers([header::ETAG]),
        ),
        None => router,
    }
}

/// Serves `app` until `shutdown` resolves.
pub async fn serve(
    listener: tokio::net::TcpListener,
    app: Router,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await
}

/// Resolves on Ctrl-C.
pub async fn ctrl_c() {
    let _ = tokio::signal::ctrl_c().await;
}

/// Runs blocking store work off the async executor.
async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ApiError> + Send + 'static,
) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(ErrorCode::StorageError, e.to_string()))?
}

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    payload
        .map(|Json(t)| t)
        .map_err(|e| ApiError::invalid(e.body_text()))
}

fn etag(version: &KbVersion) -> HeaderValue {
    HeaderValue::from_str(&format!("\"{version}\"")).expect("hex is a valid header value")
}

/// Reads `If-Match`. `*` stands for the current head; a list matches if
/// any member is the current head.
fn if_match(headers: &HeaderMap, head: &KbVersion) -> Result<KbVersion, ApiError> {
    let raw = headers
        .get(header::IF_MATCH)
        .ok_or_else(|| {
            ApiError::new(
                ErrorCode::PreconditionRequired,
                "knowledge-base edits require If-Match with the current version",
            )
        })?
        .to_str()
        .map_err(|_| ApiError::invalid("If-Match is not ASCII"))?;
    let mut tags = Vec::new();
    for tag in raw.split(',').map(str::trim) {
        if tag == "*" {
            return Ok(head.clone());
        }
        let bare = tag.trim_start_matches("W/").trim_matches('"');
        tags.push(
            KbVersion::parse(bare)
                .ok_or_else(|| ApiError::invalid(format!("`{tag}` is not a version digest")))?,
        );
    }
    tags.iter()
        .find(|t| *t == head)
        .or(tags.first())
        .cloned()
        .ok_or_else(|| ApiError::invalid("empty If-Match"))
}

fn rule_id(id: &str) -> Result<RuleId, ApiError> {
    let id = RuleId::from(id);
    if id.is_well_formed() {
        Ok(id)
    } else {
        Err(ApiError::new(ErrorCode::InvalidRule, format!("malformed rule id `{id}`")))
    }
}

async fn health(State(store): State<Store>) -> ApiResult {
    let head = blocking(move || Ok(store.head()?)).await?;
    Ok(Pretty(serde_json::json!({ "status": "ok", "kb_version": head.as_str() })).into_response())
}

fn kb_response(store: &AdvisoryStore, version: &KbVersion) -> ApiResult {
    let kb = store.kb(version)?;
    let mut resp = Pretty(KbJson::new(version, &kb)).into_response();
    resp.headers_mut().insert(header::ETAG, etag(version));
    Ok(resp)
}

async fn get_kb(State(store): State<Store>) -> ApiResult {
    blocking(move || kb_response(&store, &store.head()?)).await
}

async fn put_rule(
    State(store): State<Store>,
    UrlPath(id): UrlPath<String>,
    headers: HeaderMap,
    payload: Result<Json<RuleBody>, JsonRejection>,
) -> ApiResult {
    let rule_id = rule_id(&id)?;
    let rule = body(payload)?.into_rule(rule_id.as_str())?;
    blocking(move || {
        let expected = if_match(&headers, &store.head()?)?;
        let version = store.edit_kb(&expected, |kb| kb.upsert_rule(rule))?;
        kb_response(&store, &version)
    })
    .await
}

async fn delete_rule(
    State(store): State<Store>,
    UrlPath(id): UrlPath<String>,
    headers: HeaderMap,
) -> ApiResult {
    let id = rule_id(&id)?;
    blocking(move || {
        let expected = if_match(&headers, &store.head()?)?;
        let version = store.edit_kb(&expected, |kb| kb.delete_rule(&id))?;
        kb_response(&store, &version)
    })
    .await
}

async fn create_session(State(store): State<Store>) -> ApiResult {
    let session = blocking(move || Ok(store.create_session()?)).await?;
    Ok((StatusCode::CREATED, Pretty(SessionJson::from(&session))).into_response())
}

async fn get_session(State(store): State<Store>, UrlPath(id): UrlPath<String>) -> ApiResult {
    let session = blocking(move || Ok(store.session(&id)?)).await?;
    Ok(Pretty(SessionJson::from(&session)).into_response())
}

async fn put_observations(
    State(store): State<Store>,
    UrlPath(id): UrlPath<String>,
    payload: Result<Json<ObservationsBody>, JsonRejection>,
) -> ApiResult {
    let observations = body(payload)?
        .observations
        .iter()
        .map(|o| o.observation())
        .collect::<Result<Vec<_>, _>>()?;
    let session = blocking(move || Ok(store.replace_observations(&id, observations)?)).await?;
    Ok(Pretty(SessionJson::from(&session)).into_response())
}

async fn advise(State(store): State<Store>, UrlPath(id): UrlPath<String>) -> ApiResult {
    blocking(move || {
        let (session, kb) = store.advise(&id)?;
        let result = session.last_result.as_ref().expect("advise stores a result");
        let report = consultation_report(&kb, result, Some(session.kb_version.as_str()));
        Ok(Pretty(report).into_response())
    })
    .await
}

async fn rebase(State(store): State<Store>, UrlPath(id): UrlPath<String>) -> ApiResult {
    blocking(move || {
        let r = store.rebase(&id)?;
        Ok(Pretty(RebaseJson {
            kb_rebased: r.changed(),
            from: r.from.to_string(),
            to: r.session.kb_version.to_string(),
            dropped: r.dropped.iter().map(ObservationJson::from).collect(),
            session: SessionJson::from(&r.session),
        })
        .into_response())
    })
    .await
}
