#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use axum::body::{to_bytes, Body};
use axum::http::{Request, StatusCode};
use axum::Router;
use outfit_core::catalog::parse_catalog;
use outfit_core::config::EngineConfig;
use outfit_core::embedding::SyntheticProvider;
use outfit_core::Engine;
use outfit_service::{router, AppState};
use serde_json::{json, Value};
use tower::ServiceExt;

const COLORS: &[&str] = &["black", "white", "navy", "beige", "red", "cobalt", "emerald", "mustard", "blush", "olive"];
const TAGS: &[&str] = &["classic", "minimal", "edgy", "statement", "casual", "chic", "sporty", "romantic", "streetwear", "elegant"];
const MATERIALS: &[&str] = &["cotton", "wool", "denim", "leather", "silk", "linen"];

pub fn record(id: &str, category: &str, k: usize) -> String {
    let color = COLORS[k % COLORS.len()];
    let tags = [TAGS[k % TAGS.len()], TAGS[(k * 3 + 1) % TAGS.len()]];
    let material = MATERIALS[(k / 2) % MATERIALS.len()];
    json!({
        "id": id,
        "name": format!("{color} {material} {category}"),
        "category": category,
        "color": color,
        "material": material,
        "style_tags": tags,
        "occasion_tags": ["casual"],
    })
    .to_string()
}

/// Small mixed catalog with every category well stocked.
pub fn catalog_jsonl() -> String {
    let mut lines = Vec::new();
    let mut k = 0;
    for (category, n) in [("top", 14), ("bottom", 12), ("shoes", 12), ("layer", 6), ("accessory", 8), ("dress", 4)] {
        for i in 0..n {
            lines.push(record(&format!("{category}-{i:02}"), category, k));
            k += 1;
        }
    }
    lines.join("\n")
}

pub fn engine() -> Engine {
    let config = EngineConfig::default();
    let provider = SyntheticProvider::new(config.embedding.synthetic_seed);
    let catalog = parse_catalog(&catalog_jsonl(), Some(&provider)).unwrap();
    Engine::with_synthetic(config, catalog).unwrap()
}

pub fn app() -> (Arc<AppState>, Router) {
    app_with_state(None)
}

pub fn app_with_state(path: Option<PathBuf>) -> (Arc<AppState>, Router) {
    let state = Arc::new(match path {
        Some(p) => AppState::open(engine(), p).unwrap(),
        None => AppState::new(engine(), None),
    });
    (Arc::clone(&state), router(state))
}

pub struct Reply {
    pub status: StatusCode,
    pub cache: Option<String>,
    pub bytes: Vec<u8>,
}

impl Reply {
    pub fn json(&self) -> Value {
        serde_json::from_slice(&self.bytes).unwrap()
    }

    pub fn code(&self) -> String {
        self.json()["error"]["code"].as_str().unwrap_or_default().to_string()
    }
}

pub async fn send(app: &Router, req: Request<Body>) -> Reply {
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let cache = res.headers().get("x-cache").map(|v| v.to_str().unwrap().to_string());
    let bytes = to_bytes(res.into_body(), usize::MAX).await.unwrap().to_vec();
    Reply { status, cache, bytes }
}

pub async fn get(app: &Router, uri: &str) -> Reply {
    send(app, Request::get(uri).body(Body::empty()).unwrap()).await
}

pub async fn post(app: &Router, uri: &str, body: impl Into<String>, json: bool) -> Reply {
    let mut req = Request::post(uri);
    if json {
        req = req.header("content-type", "application/json");
    }
    send(app, req.body(Body::from(body.into())).unwrap()).await
}

pub async fn ingest(app: &Router, jsonl: &str) -> Reply {
    post(app, "/catalog/items", jsonl, false).await
}

pub async fn like(app: &Router, user: &str, ids: &[&str], liked: bool) -> Reply {
    let body = json!({ "user": user, "item_ids": ids, "liked": liked }).to_string();
    post(app, "/feedback", body, true).await
}

/// Every item id in an outfits response, anchor excluded.
pub fn outfit_item_ids(body: &Value) -> Vec<String> {
    body["directions"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|d| !d["outfit"].is_null())
        .flat_map(|d| d["outfit"]["items"].as_array().unwrap().iter())
        .map(|i| i["id"].as_str().unwrap().to_string())
        .collect()
}
