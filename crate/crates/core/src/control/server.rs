//! HTTP + WebSocket transport for the live loop.
//!
//! * `GET /ws` upgrades to a WebSocket. Each text message carries one or
//!   more newline-delimited frames. The server sends `hello` and the
//!   current `snapshot` on connect.
//! * `GET /metrics.csv` returns the current metrics series as CSV.
//! * Anything else is served from the UI bundle directory when one is
//!   configured.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::http::header;
use axum::response::{Html, IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use futures_util::{SinkExt, StreamExt};
use tokio::net::TcpListener;
use tokio::sync::{broadcast, mpsc, watch};
use tower_http::services::ServeDir;

use super::protocol::{decode_lines, encode_message, Ack, Frame};
use super::service::{run_loop, ClientId, CommandQueue, LiveSim, Outbound, Published};
use crate::metrics::MetricsSeries;

#[derive(Clone)]
struct AppState {
    queue: CommandQueue,
    events: broadcast::Sender<Arc<Outbound>>,
    published: Arc<Mutex<Published>>,
    series: Arc<Mutex<MetricsSeries>>,
    next_client: Arc<AtomicU64>,
}

const PLACEHOLDER: &str = "<!doctype html><title>sitesim</title>\
<p>sitesim is running. Connect a client to <code>/ws</code> or fetch \
<a href=\"/metrics.csv\">/metrics.csv</a>. Start with <code>--ui-dir</code> \
to serve the operator console.</p>";

/// A running server. Dropping it does not stop it; call
/// [`Server::shutdown`].
pub struct Server {
    pub addr: SocketAddr,
    stop: watch::Sender<bool>,
    http: tokio::task::JoinHandle<std::io::Result<()>>,
    sim: tokio::task::JoinHandle<LiveSim>,
    series: Arc<Mutex<MetricsSeries>>,
}

impl Server {
    /// Binds `addr` and starts both the HTTP listener and the simulation
    /// loop on the current tokio runtime.
    pub async fn start(live: LiveSim, addr: SocketAddr, ui_dir: Option<PathBuf>) -> std::io::Result<Self> {
        let listener = TcpListener::bind(addr).await?;
        let addr = listener.local_addr()?;
        let (queue, rx) = live.queue();
        let (events, _) = broadcast::channel(1024);
        let (stop, stop_rx) = watch::channel(false);
        let state = AppState {
            queue,
            events: events.clone(),
            published: live.published_handle(),
            series: live.series_handle(),
            next_client: Arc::new(AtomicU64::new(1)),
        };
        let series = live.series_handle();

        let mut app = Router::new()
            .route("/ws", get(ws_upgrade))
            .route("/metrics.csv", get(metrics_csv));
        app = match ui_dir {
            Some(dir) => app.fallback_service(ServeDir::new(dir)),
            None => app.route("/", get(|| async { Html(PLACEHOLDER) })),
        };
        let app = app.with_state(state);

        let sim = tokio::spawn(run_loop(live, rx, events, stop_rx.clone()));
        let mut http_stop = stop_rx;
        let http = tokio::spawn(async move {
            axum::serve(listener, app)
                .with_graceful_shutdown(async move {
                    let _ = http_stop.wait_for(|s| *s).await;
                })
                .await
        });
        Ok(Self { addr, stop, http, sim, series })
    }

    pub fn series(&self) -> MetricsSeries {
        self.series.lock().expect("series lock").clone()
    }

    /// Stops the loop and the listener; returns the final simulation.
    pub async fn shutdown(self) -> LiveSim {
        let _ = self.stop.send(true);
        let live = self.sim.await.expect("simulation task");
        // Open WebSocket sessions keep the HTTP task alive; do not wait on
        // them past the loop.
        self.http.abort();
        live
    }
}

async fn metrics_csv(State(state): State<AppState>) -> Response {
    let body = state.series.lock().expect("series lock").to_csv();
    ([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], body).into_response()
}

async fn ws_upgrade(ws: WebSocketUpgrade, State(state): State<AppState>) -> Response {
    ws.on_upgrade(move |socket| session(socket, state))
}

fn text(frame: &Frame) -> Message {
    Message::Text(String::from_utf8(encode_message(frame)).expect("json is utf-8"))
}

async fn session(socket: WebSocket, state: AppState) {
    let client: ClientId = state.next_client.fetch_add(1, Ordering::Relaxed);
    let (mut sink, mut stream) = socket.split();
    let mut events = state.events.subscribe();
    let (direct_tx, mut direct_rx) = mpsc::unbounded_channel::<Frame>();

    let (hello, snapshot) = {
        let p = state.published.lock().expect("published lock");
        (p.hello.clone(), p.snapshot.clone())
    };
    if let Some(mut hello) = hello {
        hello.client_id = Some(client);
        let _ = direct_tx.send(Frame::Hello(hello));
    }
    if let Some(snapshot) = snapshot {
        let _ = direct_tx.send(Frame::Snapshot(snapshot));
    }

    let writer = tokio::spawn(async move {
        loop {
            let frame = tokio::select! {
                biased;
                direct = direct_rx.recv() => match direct {
                    Some(f) => f,
                    None => break,
                },
                ev = events.recv() => match ev {
                    Ok(out) if out.is_for(client) => out.frame.clone(),
                    Ok(_) => continue,
                    // Slow client: skip what it missed and carry on.
                    Err(broadcast::error::RecvError::Lagged(_)) => continue,
                    Err(broadcast::error::RecvError::Closed) => break,
                },
            };
            if sink.send(text(&frame)).await.is_err() {
                break;
            }
        }
    });

    while let Some(Ok(msg)) = stream.next().await {
        let body = match msg {
            Message::Text(t) => t,
            Message::Binary(b) => String::from_utf8_lossy(&b).into_owned(),
            Message::Close(_) => break,
            _ => continue,
        };
        for decoded in decode_lines(&body) {
            let reply = match decoded {
                Ok(Frame::Command(command)) => {
                    let tick = state.published.lock().expect("published lock").snapshot.as_ref().map_or(0, |s| s.tick);
                    match state.queue.enqueue(Some(client), command.clone()) {
                        Ok(()) => Frame::Ack(Ack { command, tick }),
                        Err(ev) => Frame::Error(ev),
                    }
                }
                Ok(other) => Frame::Error(super::protocol::ErrorEvent::new(
                    "unexpected_frame",
                    format!("clients may only send command frames, got {}", frame_type(&other)),
                )),
                Err(e) => Frame::Error(e.to_event()),
            };
            if direct_tx.send(reply).is_err() {
                break;
            }
        }
    }
    drop(direct_tx);
    writer.abort();
}

fn frame_type(frame: &Frame) -> &'static str {
    match frame {
        Frame::Command(_) => "command",
        Frame::Ack(_) => "ack",
        Frame::Error(_) => "error",
        Frame::Metrics(_) => "metrics",
        Frame::Snapshot(_) => "snapshot",
        Frame::Hello(_) => "hello",
    }
}
