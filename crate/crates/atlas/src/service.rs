//! Read-only HTTP API over the current snapshot.
//!
//! Every handler grabs one `Arc<Snapshot>` up front, so a response never
//! mixes two versions. Bodies are canonical JSON; errors are
//! `{"error": "..."}` with a matching status code.

use std::collections::HashMap;
use std::future::Future;
use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use atlas_core::series::{per_capita, rolling_average, PER_CAPITA_BASE};
use atlas_core::surprise::run_surprise_range;
use atlas_core::{MetricKind, ModelKind, ModelSpec, NaiveDate, RegionGroup, RegionId, Snapshot};
use axum::extract::rejection::QueryRejection;
use axum::extract::{Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use parking_lot::Mutex;
use serde_json::{json, Value};

use crate::boundaries::Boundaries;
use crate::config::ApiConfig;
use crate::store::Store;

const CACHE_LIMIT: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct CacheKey {
    version: u64,
    metric: MetricKind,
    from: NaiveDate,
    to: NaiveDate,
    models: Vec<String>,
}

pub struct AppState {
    store: Arc<Store>,
    boundaries: Boundaries,
    default_from: Option<NaiveDate>,
    default_to: Option<NaiveDate>,
    cache: Mutex<HashMap<CacheKey, Arc<String>>>,
}

impl AppState {
    pub fn new(store: Arc<Store>, boundaries: Boundaries) -> Self {
        Self {
            store,
            boundaries,
            default_from: None,
            default_to: None,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn with_default_range(mut self, from: Option<NaiveDate>, to: Option<NaiveDate>) -> Self {
        self.default_from = from;
        self.default_to = to;
        self
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: Value,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            body: json!({ "error": message.into() }),
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, message)
    }

    fn with(mut self, key: &str, value: Value) -> Self {
        self.body[key] = value;
        self
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        json_body(self.status, crate::canonical::to_string(&self.body), "application/json")
    }
}

fn json_body(status: StatusCode, body: String, content_type: &'static str) -> Response {
    (status, [(header::CONTENT_TYPE, content_type)], body).into_response()
}

fn ok_json(value: &impl serde::Serialize) -> Response {
    json_body(StatusCode::OK, crate::canonical::to_string(value), "application/json")
}

type Params = Result<Query<HashMap<String, String>>, QueryRejection>;
type ApiResult = Result<Response, ApiError>;

fn params(p: Params) -> Result<HashMap<String, String>, ApiError> {
    p.map(|Query(q)| q).map_err(|e| ApiError::bad_request(e.body_text()))
}

fn required<'a>(q: &'a HashMap<String, String>, key: &str) -> Result<&'a str, ApiError> {
    q.get(key)
        .map(String::as_str)
        .filter(|s| !s.is_empty())
        .ok_or_else(|| ApiError::bad_request(format!("missing `{key}` parameter")))
}

fn metric_param(q: &HashMap<String, String>) -> Result<MetricKind, ApiError> {
    let name = required(q, "metric")?;
    name.parse().map_err(|_| {
        ApiError::bad_request(format!("unknown metric `{name}`"))
            .with("available", json!(MetricKind::ALL.map(|m| m.name())))
    })
}

fn date_param(q: &HashMap<String, String>, key: &str) -> Result<Option<NaiveDate>, ApiError> {
    match q.get(key).filter(|s| !s.is_empty()) {
        None => Ok(None),
        Some(s) => atlas_core::time::parse_iso_date(s)
            .map(Some)
            .ok_or_else(|| ApiError::bad_request(format!("`{key}` must be YYYY-MM-DD, got `{s}`"))),
    }
}

/// Models available for this snapshot.
pub fn catalog(snapshot: &Snapshot) -> Vec<ModelSpec> {
    ModelSpec::default_set(snapshot.has_metric(MetricKind::VisitsMonthly))
}

fn model_json(m: &ModelSpec) -> Value {
    let (kind, parameters) = match m.kind {
        ModelKind::Uniform => ("uniform", json!({})),
        ModelKind::PopulationProportional => ("population_proportional", json!({})),
        ModelKind::FootTrafficProportional => ("foot_traffic_proportional", json!({})),
        ModelKind::TrailingBaseRate { window } => ("trailing_base_rate", json!({ "window": window })),
    };
    json!({ "name": m.name, "kind": kind, "parameters": parameters })
}

async fn regions(State(app): State<Arc<AppState>>, q: Params) -> ApiResult {
    let q = params(q)?;
    let group = match q.get("group").filter(|s| !s.is_empty()) {
        None => None,
        Some(g) => Some(RegionGroup::parse(g).ok_or_else(|| {
            ApiError::bad_request(format!("unknown group `{g}`"))
                .with("available", json!(RegionGroup::ALL.map(|g| g.name())))
        })?),
    };
    let snapshot = app.store.snapshot();
    let body = crate::canonical::to_string(&app.boundaries.collection(group, &snapshot));
    Ok(json_body(StatusCode::OK, body, "application/geo+json"))
}

async fn frame(State(app): State<Arc<AppState>>, q: Params) -> ApiResult {
    let q = params(q)?;
    let metric = metric_param(&q)?;
    let date = date_param(&q, "date")?.ok_or_else(|| ApiError::bad_request("missing `date` parameter"))?;
    let per_cap = match q.get("view").map(String::as_str).unwrap_or("raw") {
        "raw" => false,
        "per_capita" => true,
        other => {
            return Err(ApiError::bad_request(format!(
                "unknown view `{other}` (raw|per_capita)"
            )))
        }
    };
    let snapshot = app.store.snapshot();
    let values: serde_json::Map<String, Value> = snapshot
        .values_at(metric, date)
        .into_iter()
        .filter(|(r, _)| r.level() == metric.level())
        .filter_map(|(r, v)| {
            let v = if per_cap {
                v * PER_CAPITA_BASE / snapshot.population(r)? as f64
            } else {
                v
            };
            Some((r.to_string(), json!(v)))
        })
        .collect();
    if values.is_empty() {
        let dates = snapshot.metric_dates(metric);
        let before = dates.range(..date).next_back();
        let after = dates.range(date..).next();
        return Err(ApiError::not_found(format!("no `{metric}` data on {date}"))
            .with("nearest", json!({ "before": before, "after": after })));
    }
    Ok(ok_json(&values))
}

async fn surprise(State(app): State<Arc<AppState>>, q: Params) -> ApiResult {
    let q = params(q)?;
    let metric = metric_param(&q)?;
    let snapshot = app.store.snapshot();
    let available = catalog(&snapshot);
    let models = match q.get("models").filter(|s| !s.trim().is_empty()) {
        None => available.clone(),
        Some(names) => {
            let unknown = |name: &str| {
                ApiError::bad_request(format!("unknown model `{name}`")).with(
                    "available",
                    json!(available.iter().map(|m| &m.name).collect::<Vec<_>>()),
                )
            };
            let mut models = Vec::new();
            for name in names.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                let m = ModelSpec::parse(name).map_err(|_| unknown(name))?;
                if m.kind == ModelKind::FootTrafficProportional && !available.contains(&m) {
                    return Err(unknown(name));
                }
                models.push(m);
            }
            models
        }
    };
    let bounds = snapshot.metric_bounds(metric.surprise_basis());
    let from = date_param(&q, "from")?.or(app.default_from).or(bounds.map(|b| b.0));
    let to = date_param(&q, "to")?.or(app.default_to).or(bounds.map(|b| b.1));
    let (Some(from), Some(to)) = (from, to) else {
        return Ok(json_body(StatusCode::OK, "[]".into(), "application/json"));
    };
    if from > to {
        return Err(ApiError::bad_request("`from` is after `to`"));
    }
    let key = CacheKey {
        version: snapshot.version(),
        metric,
        from,
        to,
        models: models.iter().map(|m| m.name.clone()).collect(),
    };
    if let Some(hit) = app.cache.lock().get(&key) {
        return Ok(json_body(StatusCode::OK, hit.as_str().to_owned(), "application/json"));
    }
    let body = tokio::task::spawn_blocking(move || {
        run_surprise_range(metric, from, to, &models, &snapshot).map(|f| crate::frames::to_json_array(&f))
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
    .map_err(|e| ApiError::bad_request(e.to_string()))?;
    let body = Arc::new(body);
    {
        let mut cache = app.cache.lock();
        if cache.len() >= CACHE_LIMIT {
            cache.clear();
        }
        cache.insert(key, Arc::clone(&body));
    }
    Ok(json_body(StatusCode::OK, body.as_str().to_owned(), "application/json"))
}

async fn series(State(app): State<Arc<AppState>>, q: Params) -> ApiResult {
    let q = params(q)?;
    let fips = required(&q, "fips")?;
    let region = fips
        .parse::<RegionId>()
        .ok()
        .ok_or_else(|| ApiError::not_found(format!("unknown region `{fips}`")))?;
    let metric = metric_param(&q)?;
    let from = date_param(&q, "from")?.unwrap_or(NaiveDate::MIN);
    let to = date_param(&q, "to")?.unwrap_or(NaiveDate::MAX);
    if from > to {
        return Err(ApiError::bad_request("`from` is after `to`"));
    }
    let snapshot = app.store.snapshot();
    if !snapshot.contains_region(region) {
        return Err(ApiError::not_found(format!("unknown region `{region}`")));
    }
    // Transform the whole series, then clip, so windows at `from` see the
    // days before it.
    let mut out = snapshot
        .query_series(region, metric, NaiveDate::MIN, NaiveDate::MAX)
        .map_err(|e| ApiError::bad_request(e.to_string()))?
        .series;
    match q.get("view").map(String::as_str).unwrap_or("raw") {
        "raw" => {}
        "per_capita" => {
            let pop = snapshot
                .population(region)
                .ok_or_else(|| ApiError::not_found(format!("no population for `{region}`")))?;
            out = per_capita(&out, pop, PER_CAPITA_BASE).map_err(|e| ApiError::bad_request(e.to_string()))?;
        }
        other => {
            return Err(ApiError::bad_request(format!(
                "unknown view `{other}` (raw|per_capita)"
            )))
        }
    }
    let smooth = q.get("smooth").filter(|s| !s.is_empty()).map(String::as_str);
    match smooth {
        None => {}
        Some("rolling7") if !metric.is_cumulative() => {
            out = rolling_average(&out, 7).map_err(|e| ApiError::bad_request(e.to_string()))?;
        }
        Some("rolling7") => {
            return Err(ApiError::bad_request(format!(
                "rolling7 does not apply to cumulative `{metric}`"
            )))
        }
        Some(other) => return Err(ApiError::bad_request(format!("unknown smoothing `{other}`"))),
    }
    out.points.retain(|p| (from..=to).contains(&p.date));
    Ok(ok_json(&json!({
        "fips": region,
        "metric": metric,
        "smooth": smooth,
        "points": out.points,
    })))
}

async fn models(State(app): State<Arc<AppState>>) -> Response {
    let snapshot = app.store.snapshot();
    let models: Vec<Value> = catalog(&snapshot).iter().map(model_json).collect();
    ok_json(&json!({ "models": models }))
}

async fn meta(State(app): State<Arc<AppState>>) -> Response {
    let snapshot = app.store.snapshot();
    let bounds = snapshot.date_bounds();
    let metrics: Vec<&str> = MetricKind::ALL
        .iter()
        .filter(|m| snapshot.has_metric(**m))
        .map(|m| m.name())
        .collect();
    ok_json(&json!({
        "min_date": bounds.map(|b| b.0),
        "max_date": bounds.map(|b| b.1),
        "version": snapshot.version(),
        "region_counts": {
            "county": snapshot.region_count(atlas_core::Level::County),
            "state": snapshot.region_count(atlas_core::Level::State),
        },
        "metrics": metrics,
    }))
}

async fn not_found() -> ApiError {
    ApiError::not_found("no such endpoint")
}

async fn method_not_allowed() -> ApiError {
    ApiError::new(StatusCode::METHOD_NOT_ALLOWED, "only GET is supported")
}

pub fn router(state: Arc<AppState>, static_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/regions", get(regions))
        .route("/frame", get(frame))
        .route("/surprise", get(surprise))
        .route("/series", get(series))
        .route("/models", get(models))
        .route("/meta", get(meta))
        .method_not_allowed_fallback(method_not_allowed);
    let api = match static_dir {
        Some(dir) => api.fallback_service(tower_http::services::ServeDir::new(dir)),
        None => api.fallback(not_found),
    };
    api.with_state(state)
}

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error(transparent)]
    Store(#[from] crate::store::StoreError),
    #[error("cannot listen on {addr}: {source}")]
    Bind { addr: String, source: std::io::Error },
    #[error("server: {0}")]
    Server(std::io::Error),
}

/// Run until `shutdown` resolves.
pub async fn serve(config: ApiConfig, shutdown: impl Future<Output = ()> + Send + 'static) -> Result<(), ServeError> {
    let boundaries = config.boundaries()?;
    let store = Arc::new(Store::open(&config.data_dir)?);
    let state = Arc::new(
        AppState::new(Arc::clone(&store), boundaries).with_default_range(config.default_from, config.default_to),
    );
    let addr = format!("{}:{}", config.bind, config.port);
    let listener = tokio::net::TcpListener::bind(&addr)
        .await
        .map_err(|source| ServeError::Bind {
            addr: addr.clone(),
            source,
        })?;
    let local: SocketAddr = listener.local_addr().map_err(ServeError::Server)?;
    tracing::info!(%local, version = store.snapshot().version(), "listening");

    let interval = Duration::from_millis(config.reload_interval_ms.max(100));
    let reloader = Arc::clone(&store);
    let reload_task = tokio::spawn(async move {
        let mut tick = tokio::time::interval(interval);
        loop {
            tick.tick().await;
            let store = Arc::clone(&reloader);
            match tokio::task::spawn_blocking(move || store.reload()).await {
                Ok(Ok(true)) => tracing::info!(version = reloader.snapshot().version(), "snapshot reloaded"),
                Ok(Err(e)) => tracing::warn!("reload failed: {e}"),
                _ => {}
            }
        }
    });

    let app = router(state, config.static_dir.as_deref());
    let result = axum::serve(listener, app)
        .with_graceful_shutdown(shutdown)
        .await
        .map_err(ServeError::Server);
    reload_task.abort();
    tracing::info!("shut down");
    result
}
