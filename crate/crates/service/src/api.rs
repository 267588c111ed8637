use std::collections::BTreeSet;
use std::sync::Arc;

use axum::extract::{Query, State};
use axum::http::{HeaderMap, HeaderValue};
use axum::routing::{get, post};
use axum::{Json, Router};
use outfit_core::cache::CacheKey;
use outfit_core::catalog::{parse_catalog_line, Category, Item};
use outfit_core::generator::{DirectionResult, GenerationOutput};
use outfit_core::scoring::{DirectionName, ScoreBreakdown};
use outfit_core::Error;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{ApiError, ApiResult};
use crate::state::{AppState, DEFAULT_SEED};

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/catalog/items", post(ingest))
        .route("/items", get(items))
        .route("/outfits", get(outfits))
        .route("/feedback", post(feedback))
        .route("/health", get(health))
        .route("/config", get(config))
        .with_state(state)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct IngestResponse {
    pub added: usize,
    pub evicted: usize,
    pub evicted_keys: Vec<CacheKey>,
    pub catalog_version: u64,
    pub catalog_size: usize,
}

#[derive(Debug, Serialize)]
struct LineError {
    line: usize,
    message: String,
}

/// Body is JSONL in the catalog file format. Every line is checked before
/// anything is applied.
async fn ingest(State(state): State<Arc<AppState>>, body: String) -> ApiResult<Json<IngestResponse>> {
    let snap = state.snapshot();
    let provider = snap.engine.provider();
    let mut items = Vec::new();
    let mut errors = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, line) in body.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match parse_catalog_line(line, Some(provider)).and_then(|it| snap.engine.prepare(&it).map(|_| it)) {
            Ok(item) => {
                if snap.engine.catalog().contains(&item.id) || !seen.insert(item.id.clone()) {
                    return Err(ApiError::from(Error::DuplicateId(item.id))
                        .with_details(json!({ "line": i + 1 })));
                }
                items.push(item);
            }
            Err(e) => errors.push(LineError {
                line: i + 1,
                message: e.to_string(),
            }),
        }
    }
    drop(snap);
    if !errors.is_empty() {
        return Err(ApiError::bad_request(
            "validation_failed",
            format!("{} record(s) rejected; nothing was added", errors.len()),
        )
        .with_details(errors));
    }
    let s = state.ingest(items).await?;
    Ok(Json(IngestResponse {
        added: s.added,
        evicted: s.evicted.len(),
        evicted_keys: s.evicted,
        catalog_version: s.version,
        catalog_size: s.catalog_size,
    }))
}

#[derive(Debug, Deserialize)]
struct ItemsQuery {
    category: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemView {
    pub id: String,
    pub name: String,
    pub category: Category,
    pub color: String,
    pub material: String,
    pub style_tags: Vec<String>,
    pub occasion_tags: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mood_score: Option<f64>,
}

impl From<&Item> for ItemView {
    fn from(i: &Item) -> Self {
        Self {
            id: i.id.clone(),
            name: i.name.clone(),
            category: i.category,
            color: i.color.clone(),
            material: i.material.clone(),
            style_tags: i.style_tags.clone(),
            occasion_tags: i.occasion_tags.clone(),
            mood_score: None,
        }
    }
}

async fn items(State(state): State<Arc<AppState>>, Query(q): Query<ItemsQuery>) -> ApiResult<Json<serde_json::Value>> {
    let category = q.category.as_deref().map(str::parse::<Category>).transpose()?;
    let snap = state.snapshot();
    let items: Vec<ItemView> = snap
        .engine
        .catalog()
        .items()
        .iter()
        .filter(|i| category.is_none_or(|c| i.category == c))
        .map(ItemView::from)
        .collect();
    Ok(Json(json!({ "catalog_version": snap.version, "items": items })))
}

#[derive(Debug, Deserialize)]
struct OutfitsQuery {
    anchor: String,
    occasion: String,
    mood: Option<String>,
    user: Option<String>,
    seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutfitView {
    pub anchor: ItemView,
    /// Non-anchor items in slot order.
    pub items: Vec<ItemView>,
    pub breakdown: ScoreBreakdown,
    pub candidates_scored: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionView {
    pub direction: DirectionName,
    pub outfit: Option<OutfitView>,
    /// Structured gap: the required slot that had no admissible candidate.
    pub gap: Option<GapView>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapView {
    pub slot: Category,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutfitsResponse {
    pub anchor_id: String,
    pub occasion: String,
    pub mood: Option<String>,
    pub user: Option<String>,
    pub seed: u64,
    pub config_hash: String,
    pub catalog_version: u64,
    pub intent_anchor_cosine: f64,
    pub directions: Vec<DirectionView>,
}

fn direction_view(d: &DirectionResult, mood: &dyn Fn(&str) -> Option<f64>) -> DirectionView {
    let view = |i: &Item| ItemView {
        mood_score: mood(&i.id),
        ..ItemView::from(i)
    };
    DirectionView {
        direction: d.direction,
        outfit: d.outfit.as_ref().map(|o| OutfitView {
            anchor: view(&o.anchor),
            items: o.slots.values().map(view).collect(),
            breakdown: o.breakdown.clone(),
            candidates_scored: d.candidates_scored,
        }),
        gap: d.gap.map(|slot| GapView {
            slot,
            message: format!("no admissible {slot} for this anchor and occasion"),
        }),
    }
}

async fn outfits(
    State(state): State<Arc<AppState>>,
    Query(q): Query<OutfitsQuery>,
) -> ApiResult<(HeaderMap, Json<OutfitsResponse>)> {
    let snap = state.snapshot();
    let engine = &snap.engine;
    if !engine.catalog().contains(&q.anchor) {
        return Err(Error::UnknownItem(q.anchor).into());
    }
    engine.occasion(&q.occasion)?;
    let seed = q.seed.unwrap_or(DEFAULT_SEED);
    let mut req = engine.request(&q.anchor, &q.occasion, seed);
    req.mood = q.mood.clone();

    let cacheable = q.user.is_none() && seed == DEFAULT_SEED;
    let key = CacheKey::new(&q.anchor, &q.occasion);
    let mut hit = false;
    let output: GenerationOutput = match q.user.as_deref() {
        Some(user) => {
            let u = state.user(user).await;
            let out = engine.generate(&req, Some(&u.taste), Some(&u.rotation))?;
            let ids: Vec<String> = out.outfits().flat_map(|o| o.item_ids()).map(str::to_string).collect();
            state.touch_rotation(user, &ids).await?;
            out
        }
        None => match cacheable.then(|| state.cached(&key)).flatten() {
            Some(out) => {
                hit = true;
                out
            }
            None => {
                let out = engine.generate(&req, None, None)?;
                if cacheable {
                    state.store(key, out.clone(), snap.version);
                }
                out
            }
        },
    };

    let scores = match q.mood.as_deref() {
        Some(m) if !m.trim().is_empty() => engine.mood_scores(&output, m)?,
        _ => Vec::new(),
    };
    let mood = |id: &str| scores.iter().find(|s| s.item_id == id).map(|s| s.score);
    let body = OutfitsResponse {
        anchor_id: output.anchor_id.clone(),
        occasion: output.occasion.clone(),
        mood: q.mood,
        user: q.user,
        seed,
        config_hash: engine.config_hash().to_string(),
        catalog_version: snap.version,
        intent_anchor_cosine: output.intent_anchor_cosine,
        directions: output.directions.iter().map(|d| direction_view(d, &mood)).collect(),
    };
    let mut headers = HeaderMap::new();
    if cacheable {
        headers.insert("x-cache", HeaderValue::from_static(if hit { "hit" } else { "miss" }));
    }
    Ok((headers, Json(body)))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FeedbackRequest {
    pub user: String,
    pub item_ids: Vec<String>,
    pub liked: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FeedbackResponse {
    pub user: String,
    pub version: u64,
}

async fn feedback(
    State(state): State<Arc<AppState>>,
    Json(f): Json<FeedbackRequest>,
) -> ApiResult<Json<FeedbackResponse>> {
    if f.user.trim().is_empty() {
        return Err(ApiError::bad_request("validation_failed", "user must be non-empty"));
    }
    let version = state.feedback(&f.user, &f.item_ids, f.liked).await?;
    Ok(Json(FeedbackResponse { user: f.user, version }))
}

async fn health(State(state): State<Arc<AppState>>) -> Json<serde_json::Value> {
    let snap = state.snapshot();
    Json(json!({
        "status": "ok",
        "catalog_size": snap.engine.catalog().len(),
        "catalog_version": snap.version,
        "cache_entries": state.cache_len(),
        "config_hash": snap.engine.config_hash(),
    }))
}

async fn config(State(state): State<Arc<AppState>>) -> Json<serde_json::Value> {
    let snap = state.snapshot();
    let engine = &snap.engine;
    Json(json!({
        "config_hash": engine.config_hash(),
        "occasions": engine.occasion_names().collect::<Vec<_>>(),
        "default_seed": DEFAULT_SEED,
        "config": engine.config(),
    }))
}
