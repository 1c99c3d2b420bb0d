//! HTTP surface under `/v1`, plus the thread that paces the control loop.

use std::convert::Infallible;
use std::net::SocketAddr;
use std::path::{Component, Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::stream::Stream;
use serde::Deserialize;
use serde_json::json;
use tokio::sync::{broadcast, watch};

use super::{Ack, Command, CommandKind, HealthStatus, LogCategory, LogQuery, RecipeStore, SharedLog, TelemetrySnapshot};
use crate::config::Config;
use crate::labeling::{load_corpus, session_stats, DatasetManifest, LabelingError};
use crate::plant::ThermalFrame;
use crate::runtime::{CommandGate, Runtime};

const STREAM_CAPACITY: usize = 64;

/// Everything the handlers share. Handlers never touch the runtime
/// directly: commands go through the gate, reads come from published
/// snapshots and the log.
#[derive(Clone)]
pub struct AppState {
    pub gate: CommandGate,
    pub recipes: RecipeStore,
    pub log: SharedLog,
    pub snapshot: watch::Receiver<Arc<TelemetrySnapshot>>,
    pub frame: watch::Receiver<Arc<ThermalFrame>>,
    pub stream: broadcast::Sender<Arc<TelemetrySnapshot>>,
    pub last_publish: Arc<Mutex<Instant>>,
    pub stale_after: Duration,
    pub dataset_root: PathBuf,
    pub cadence: f64,
}

impl AppState {
    fn current_snapshot(&self) -> TelemetrySnapshot {
        let mut snap = (**self.snapshot.borrow()).clone();
        let age = self.last_publish.lock().expect("clock poisoned").elapsed();
        if age > self.stale_after {
            snap.health.stale = true;
            snap.health.status = HealthStatus::Degraded;
        }
        snap
    }
}

/// The control loop running on its own thread.
pub struct ControlLoop {
    pub state: AppState,
    stop: Arc<AtomicBool>,
    handle: Option<thread::JoinHandle<()>>,
    ticks: Arc<AtomicU64>,
}

impl ControlLoop {
    /// Start pacing `runtime` at `tick_hz · speedup` ticks per wall second.
    pub fn spawn(mut runtime: Runtime) -> Self {
        let config = runtime.config().clone();
        let (snap_tx, snap_rx) = watch::channel(Arc::new(runtime.snapshot().clone()));
        let (frame_tx, frame_rx) = watch::channel(Arc::new(runtime.latest_frame().clone()));
        let (stream_tx, _) = broadcast::channel(STREAM_CAPACITY);
        let last_publish = Arc::new(Mutex::new(Instant::now()));
        let state = AppState {
            gate: runtime.gate(),
            recipes: runtime.gate().recipes().clone(),
            log: runtime.log().clone(),
            snapshot: snap_rx,
            frame: frame_rx,
            stream: stream_tx.clone(),
            last_publish: Arc::clone(&last_publish),
            stale_after: Duration::from_secs_f64(config.service.stale_after),
            dataset_root: config.labeling.root.clone(),
            cadence: config.labeling.cadence,
        };
        let stop = Arc::new(AtomicBool::new(false));
        let ticks = Arc::new(AtomicU64::new(0));
        let stop_flag = Arc::clone(&stop);
        let tick_counter = Arc::clone(&ticks);
        let rate = config.control.tick_hz * config.sim.speedup;
        let stream_every = (config.control.tick_hz / config.service.stream_hz).round().max(1.0) as u64;
        let handle = thread::Builder::new()
            .name("control-loop".into())
            .spawn(move || {
                let start = Instant::now();
                let mut done: u64 = 0;
                while !stop_flag.load(Ordering::SeqCst) {
                    let due = (start.elapsed().as_secs_f64() * rate) as u64;
                    // Never try to catch up more than a second of sim at once.
                    let due = due.min(done + rate.ceil() as u64);
                    while done < due {
                        let snap = match runtime.step() {
                            Ok(s) => Arc::new(s.clone()),
                            Err(e) => {
                                log::error!("control tick failed: {e}");
                                stop_flag.store(true, Ordering::SeqCst);
                                break;
                            }
                        };
                        done += 1;
                        tick_counter.store(done, Ordering::SeqCst);
                        let _ = snap_tx.send(Arc::clone(&snap));
                        let _ = frame_tx.send(Arc::new(runtime.latest_frame().clone()));
                        if snap.tick % stream_every == 0 {
                            let _ = stream_tx.send(snap);
                        }
                        *last_publish.lock().expect("clock poisoned") = Instant::now();
                    }
                    thread::sleep(Duration::from_millis(1));
                }
                runtime.shutdown();
            })
            .expect("spawn control loop");
        ControlLoop {
            state,
            stop,
            handle: Some(handle),
            ticks,
        }
    }

    pub fn ticks(&self) -> u64 {
        self.ticks.load(Ordering::SeqCst)
    }

    pub fn stop(mut self) {
        self.halt();
    }

    fn halt(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

impl Drop for ControlLoop {
    fn drop(&mut self) {
        self.halt();
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/v1/health", get(health))
        .route("/v1/telemetry", get(telemetry))
        .route("/v1/telemetry/stream", get(telemetry_stream))
        .route("/v1/thermal/latest", get(thermal_latest))
        .route("/v1/command", post(command))
        .route("/v1/recipes", get(recipes_list))
        .route("/v1/recipes/{id}", get(recipe_get).put(recipe_put))
        .route("/v1/session/start", post(session_start))
        .route("/v1/session/stop", post(session_stop))
        .route("/v1/session/label", post(session_label))
        .route("/v1/dataset/manifest", get(dataset_manifest))
        .route("/v1/dataset/stats", get(dataset_stats))
        .route("/v1/dataset/frame", get(dataset_frame))
        .route("/v1/log", get(log_query))
        .with_state(state)
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(json!({ "error": message.into() }))).into_response()
}

fn ack_response(ack: Ack) -> Response {
    let status = if ack.is_accepted() {
        StatusCode::ACCEPTED
    } else {
        StatusCode::UNPROCESSABLE_ENTITY
    };
    (status, Json(ack)).into_response()
}

async fn health(State(s): State<AppState>) -> Response {
    let snap = s.current_snapshot();
    Json(json!({
        "status": snap.health.status,
        "health": snap.health,
        "tick": snap.tick,
        "time": snap.time,
    }))
    .into_response()
}

async fn telemetry(State(s): State<AppState>) -> Json<TelemetrySnapshot> {
    Json(s.current_snapshot())
}

async fn thermal_latest(State(s): State<AppState>) -> Json<ThermalFrame> {
    Json((**s.frame.borrow()).clone())
}

/// Server-sent events, one per published snapshot. A slow consumer skips
/// snapshots; `dropped` counts how many it has missed so far.
async fn telemetry_stream(
    State(s): State<AppState>,
) -> Sse<impl Stream<Item = Result<Event, Infallible>>> {
    let rx = s.stream.subscribe();
    let stream = futures::stream::unfold((rx, 0u64), |(mut rx, mut dropped)| async move {
        loop {
            match rx.recv().await {
                Ok(snap) => {
                    let body = json!({ "dropped": dropped, "snapshot": &*snap });
                    let event = Event::default().event("telemetry").data(body.to_string());
                    return Some((Ok(event), (rx, dropped)));
                }
                Err(broadcast::error::RecvError::Lagged(n)) => dropped += n,
                Err(broadcast::error::RecvError::Closed) => return None,
            }
        }
    });
    Sse::new(stream).keep_alive(KeepAlive::default())
}

async fn command(State(s): State<AppState>, Json(cmd): Json<Command>) -> Response {
    ack_response(s.gate.submit(cmd))
}

async fn recipes_list(State(s): State<AppState>) -> Response {
    Json(s.recipes.list()).into_response()
}

async fn recipe_get(State(s): State<AppState>, UrlPath(id): UrlPath<String>) -> Response {
    match s.recipes.get(&id) {
        Some(r) => Json(r.document().clone()).into_response(),
        None => error(StatusCode::NOT_FOUND, format!("unknown recipe `{id}`")),
    }
}

async fn recipe_put(
    State(s): State<AppState>,
    UrlPath(id): UrlPath<String>,
    body: String,
) -> Response {
    match s.recipes.put_json(&body, Some(&id)) {
        Ok(r) => (StatusCode::OK, Json(json!({ "id": r.id(), "stored": true }))).into_response(),
        Err(e) => (
            StatusCode::UNPROCESSABLE_ENTITY,
            Json(json!({
                "error": "recipe rejected",
                "diagnostics": e.0.iter().map(|d| json!({
                    "code": d.code,
                    "kind": d.code.as_str(),
                    "message": d.message,
                })).collect::<Vec<_>>(),
            })),
        )
            .into_response(),
    }
}

#[derive(Debug, Default, Deserialize)]
struct SessionBody {
    session_id: Option<String>,
    label: Option<String>,
    issued_by: Option<String>,
}

fn issuer(body: &SessionBody) -> String {
    body.issued_by.clone().unwrap_or_else(|| "api".into())
}

async fn session_start(State(s): State<AppState>, body: Option<Json<SessionBody>>) -> Response {
    let body = body.map(|Json(b)| b).unwrap_or_default();
    let kind = CommandKind::StartSession {
        session_id: body.session_id.clone(),
    };
    ack_response(s.gate.submit(Command::new(kind, &issuer(&body))))
}

async fn session_stop(State(s): State<AppState>, body: Option<Json<SessionBody>>) -> Response {
    let body = body.map(|Json(b)| b).unwrap_or_default();
    ack_response(s.gate.submit(Command::new(CommandKind::StopSession, &issuer(&body))))
}

async fn session_label(State(s): State<AppState>, Json(body): Json<SessionBody>) -> Response {
    let Some(label) = body.label.clone() else {
        return error(StatusCode::BAD_REQUEST, "missing `label`");
    };
    ack_response(s.gate.submit(Command::new(CommandKind::SetLabel { label }, &issuer(&body))))
}

async fn dataset_manifest(State(s): State<AppState>) -> Response {
    let root = s.dataset_root.clone();
    let result = tokio::task::spawn_blocking(move || {
        let records = load_corpus(&root)?;
        DatasetManifest::from_records(&records)
    })
    .await;
    match result {
        Ok(Ok(m)) => ([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], m.render()).into_response(),
        Ok(Err(LabelingError::EmptyDataset)) => error(StatusCode::NOT_FOUND, "empty dataset"),
        Ok(Err(e)) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

async fn dataset_stats(State(s): State<AppState>) -> Response {
    let root = s.dataset_root.clone();
    let cadence = s.cadence;
    let result =
        tokio::task::spawn_blocking(move || load_corpus(&root).map(|r| session_stats(&r, cadence)))
            .await;
    match result {
        Ok(Ok(stats)) => Json(stats).into_response(),
        Ok(Err(e)) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

#[derive(Debug, Deserialize)]
struct FrameQuery {
    path: String,
}

fn safe_relative(path: &str) -> Option<&Path> {
    let p = Path::new(path);
    p.components()
        .all(|c| matches!(c, Component::Normal(_)))
        .then_some(p)
}

async fn dataset_frame(State(s): State<AppState>, Query(q): Query<FrameQuery>) -> Response {
    let Some(rel) = safe_relative(&q.path) else {
        return error(StatusCode::BAD_REQUEST, "frame path must be relative");
    };
    match tokio::fs::read(s.dataset_root.join(rel)).await {
        Ok(bytes) => ([(header::CONTENT_TYPE, "application/json")], bytes).into_response(),
        Err(_) => error(StatusCode::NOT_FOUND, format!("no frame at `{}`", q.path)),
    }
}

#[derive(Debug, Deserialize)]
struct LogParams {
    from: Option<f64>,
    to: Option<f64>,
    /// Comma-separated categories.
    category: Option<String>,
}

async fn log_query(State(s): State<AppState>, Query(p): Query<LogParams>) -> Response {
    let categories = match p.category.as_deref() {
        None | Some("") => None,
        Some(list) => match list
            .split(',')
            .map(|c| c.trim().parse::<LogCategory>())
            .collect::<Result<Vec<_>, _>>()
        {
            Ok(c) => Some(c),
            Err(e) => return error(StatusCode::BAD_REQUEST, e),
        },
    };
    let q = LogQuery {
        from: p.from,
        to: p.to,
        categories,
    };
    let entries = s.log.read().expect("event log poisoned").query(&q);
    Json(entries).into_response()
}

/// A running service: control loop plus HTTP server on a background
/// tokio runtime.
pub struct Service {
    pub addr: SocketAddr,
    control: Option<ControlLoop>,
    shutdown: Option<tokio::sync::oneshot::Sender<()>>,
    server: Option<thread::JoinHandle<()>>,
}

impl Service {
    pub fn start(runtime: Runtime, addr: SocketAddr) -> std::io::Result<Service> {
        let control = ControlLoop::spawn(runtime);
        let app = router(control.state.clone());
        let listener = std::net::TcpListener::bind(addr)?;
        listener.set_nonblocking(true)?;
        let addr = listener.local_addr()?;
        let (tx, rx) = tokio::sync::oneshot::channel::<()>();
        let server = thread::Builder::new()
            .name("http".into())
            .spawn(move || {
                let rt = tokio::runtime::Builder::new_multi_thread()
                    .worker_threads(2)
                    .enable_all()
                    .build()
                    .expect("tokio runtime");
                rt.block_on(async move {
                    let listener =
                        tokio::net::TcpListener::from_std(listener).expect("listener");
                    let _ = axum::serve(listener, app)
                        .with_graceful_shutdown(async {
                            let _ = rx.await;
                        })
                        .await;
                });
                rt.shutdown_timeout(Duration::from_millis(200));
            })?;
        Ok(Service {
            addr,
            control: Some(control),
            shutdown: Some(tx),
            server: Some(server),
        })
    }

    /// Build a runtime from configuration and serve it.
    pub fn from_config(config: Config) -> anyhow::Result<Service> {
        let log = match &config.log.path {
            Some(p) => super::EventLog::open(p, config.log.checkpoint_every)?,
            None => super::EventLog::in_memory(),
        };
        let addr: SocketAddr = format!("{}:{}", config.service.host, config.service.port).parse()?;
        let runtime = Runtime::new(config, RecipeStore::with_bundled(), log.shared())?;
        Ok(Service::start(runtime, addr)?)
    }

    pub fn state(&self) -> &AppState {
        &self.control.as_ref().expect("running").state
    }

    pub fn stop(mut self) {
        self.halt();
    }

    fn halt(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        // Stop producing first so open telemetry streams see the channel close.
        if let Some(c) = self.control.take() {
            c.stop();
        }
        if let Some(h) = self.server.take() {
            let _ = h.join();
        }
    }
}

impl Drop for Service {
    fn drop(&mut self) {
        self.halt();
    }
}
