//! Shared service state.
//!
//! The engine (catalog + index) lives in an immutable [`Snapshot`] behind an
//! `Arc`; ingestion builds a new one off to the side and swaps it in under the
//! cache lock, so a request sees one snapshot from start to finish and cache
//! eviction happens together with the swap. Each user has their own mutex.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex as StdMutex, RwLock};

use outfit_core::cache::{invalidate_on_add, CacheEntry, CacheKey, InvalidationMap, OutfitCache};
use outfit_core::catalog::Item;
use outfit_core::generator::GenerationOutput;
use outfit_core::personalization::{touch_rotation, update_taste, RotationQueue, TasteProfile};
use outfit_core::{Engine, Error};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tokio::sync::Mutex;

use crate::error::{ApiError, ApiResult};

/// Seed used when a request names none. Only default-seed anonymous
/// requests are cached.
pub const DEFAULT_SEED: u64 = 42;

pub const STATE_FORMAT: &str = "outfit-service-state";
pub const STATE_VERSION: u32 = 1;

pub struct Snapshot {
    pub engine: Engine,
    /// Bumped on every catalog change.
    pub version: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserState {
    pub taste: TasteProfile,
    /// Number of feedback events applied.
    pub version: u64,
    pub rotation: RotationQueue,
}

impl UserState {
    fn new(engine: &Engine) -> Self {
        let p = &engine.config().personalization;
        Self {
            taste: TasteProfile::new(p.eta),
            version: 0,
            rotation: RotationQueue::new(p.rotation_capacity, p.rotation_multiplier),
        }
    }
}

/// On-disk form of everything the service learns after startup.
#[derive(Debug, Serialize, Deserialize)]
pub struct StateFile {
    pub format: String,
    pub version: u32,
    pub config_hash: String,
    /// Digest of the catalog the service was started with.
    pub base_catalog: String,
    pub snapshot_version: u64,
    pub ingested: Vec<Item>,
    pub users: BTreeMap<String, UserState>,
    pub cache: OutfitCache,
}

pub struct AppState {
    snapshot: RwLock<Arc<Snapshot>>,
    cache: RwLock<OutfitCache>,
    invalidation: InvalidationMap,
    users: StdMutex<HashMap<String, Arc<Mutex<UserState>>>>,
    /// Serializes ingestion so two batches cannot both build on one snapshot.
    ingest: Mutex<()>,
    ingested: StdMutex<Vec<Item>>,
    base_catalog: String,
    state_path: Option<PathBuf>,
    write: Mutex<()>,
}

pub struct IngestSummary {
    pub added: usize,
    pub evicted: Vec<CacheKey>,
    pub version: u64,
    pub catalog_size: usize,
}

pub fn catalog_digest(engine: &Engine) -> String {
    hex::encode(Sha256::digest(engine.catalog().to_jsonl().as_bytes()))
}

impl AppState {
    /// Fresh state around `engine`; `state_path`, when given, is where
    /// mutations are persisted.
    pub fn new(engine: Engine, state_path: Option<PathBuf>) -> Self {
        Self {
            base_catalog: catalog_digest(&engine),
            snapshot: RwLock::new(Arc::new(Snapshot { engine, version: 0 })),
            cache: RwLock::new(OutfitCache::new()),
            invalidation: InvalidationMap::default(),
            users: StdMutex::new(HashMap::new()),
            ingest: Mutex::new(()),
            ingested: StdMutex::new(Vec::new()),
            state_path,
            write: Mutex::new(()),
        }
    }

    /// Like [`new`](Self::new), then replays the state file at `path` if it
    /// exists. The cache is only restored when the configuration and the
    /// base catalog are unchanged.
    pub fn open(engine: Engine, path: PathBuf) -> Result<Self, Error> {
        let state = Self::new(engine, Some(path.clone()));
        if !path.exists() {
            return Ok(state);
        }
        let file: StateFile = serde_json::from_str(&std::fs::read_to_string(&path)?)?;
        if file.format != STATE_FORMAT || file.version != STATE_VERSION {
            return Err(Error::Config(format!(
                "{}: unsupported state file {} v{}",
                path.display(),
                file.format,
                file.version
            )));
        }
        let base = state.snapshot();
        let engine = base.engine.with_added_items(&file.ingested)?;
        let same_world = file.config_hash == engine.config_hash() && file.base_catalog == state.base_catalog;
        *state.snapshot.write().unwrap() = Arc::new(Snapshot {
            engine,
            version: file.snapshot_version,
        });
        *state.ingested.lock().unwrap() = file.ingested;
        if same_world {
            *state.cache.write().unwrap() = file.cache;
        }
        let mut users = state.users.lock().unwrap();
        for (name, u) in file.users {
            users.insert(name, Arc::new(Mutex::new(u)));
        }
        drop(users);
        Ok(state)
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        Arc::clone(&self.snapshot.read().unwrap())
    }

    pub fn cache_len(&self) -> usize {
        self.cache.read().unwrap().len()
    }

    pub fn cached(&self, key: &CacheKey) -> Option<GenerationOutput> {
        self.cache.read().unwrap().get(key).map(|e| e.output.clone())
    }

    /// Stores an output generated from snapshot `version`, unless the
    /// catalog has moved on since.
    pub fn store(&self, key: CacheKey, output: GenerationOutput, version: u64) {
        let mut cache = self.cache.write().unwrap();
        let current = self.snapshot.read().unwrap();
        let Some(anchor) = current.engine.catalog().get(&key.anchor_id) else {
            return;
        };
        if current.version != version || !self.invalidation.covers_anchor(anchor.category) {
            return;
        }
        let anchor_category = anchor.category;
        cache.insert(
            key,
            CacheEntry {
                anchor_category,
                output,
                generated_at: version,
            },
        );
    }

    fn user_slot(&self, name: &str, engine: &Engine) -> Arc<Mutex<UserState>> {
        let mut users = self.users.lock().unwrap();
        Arc::clone(
            users
                .entry(name.to_string())
                .or_insert_with(|| Arc::new(Mutex::new(UserState::new(engine)))),
        )
    }

    /// Current state of a user; a fresh one for unknown names.
    pub async fn user(&self, name: &str) -> UserState {
        let engine = &self.snapshot().engine;
        let slot = self.user_slot(name, engine);
        let u = slot.lock().await;
        u.clone()
    }

    pub fn known_user(&self, name: &str) -> bool {
        self.users.lock().unwrap().contains_key(name)
    }

    pub async fn touch_rotation(&self, name: &str, ids: &[String]) -> ApiResult<()> {
        let engine = &self.snapshot().engine;
        let slot = self.user_slot(name, engine);
        {
            let mut u = slot.lock().await;
            u.rotation = touch_rotation(&u.rotation, ids.iter().map(String::as_str));
        }
        self.persist().await
    }

    /// Applies one like or dislike. Returns the user's new version.
    pub async fn feedback(&self, name: &str, item_ids: &[String], liked: bool) -> ApiResult<u64> {
        let snap = self.snapshot();
        let catalog = snap.engine.catalog();
        let unknown: Vec<&String> = item_ids.iter().filter(|id| !catalog.contains(id)).collect();
        if !unknown.is_empty() {
            return Err(ApiError::bad_request("unknown_item", "feedback names items not in the catalog")
                .with_details(serde_json::json!({ "unknown": unknown })));
        }
        if item_ids.is_empty() {
            return Err(ApiError::bad_request("empty_outfit", "feedback needs at least one item id"));
        }
        let slot = self.user_slot(name, &snap.engine);
        let version = {
            let mut u = slot.lock().await;
            let embeddings = item_ids.iter().filter_map(|id| catalog.get(id)).map(|i| &i.embedding);
            u.taste = update_taste(&u.taste, embeddings, liked)?;
            u.version += 1;
            u.version
        };
        self.persist().await?;
        Ok(version)
    }

    /// Validates and adds `items` as one unit: either all of them land in a
    /// new snapshot (with the cache invalidated to match) or nothing changes.
    pub async fn ingest(&self, items: Vec<Item>) -> ApiResult<IngestSummary> {
        let _guard = self.ingest.lock().await;
        let current = self.snapshot();
        if items.is_empty() {
            return Ok(IngestSummary {
                added: 0,
                evicted: Vec::new(),
                version: current.version,
                catalog_size: current.engine.catalog().len(),
            });
        }
        let build_items = items.clone();
        let base = Arc::clone(&current);
        let next = tokio::task::spawn_blocking(move || base.engine.with_added_items(&build_items))
            .await
            .map_err(|e| ApiError::internal(e.to_string()))??;

        let version = current.version + 1;
        let catalog_size = next.catalog().len();
        let mut evicted = Vec::new();
        {
            let mut cache = self.cache.write().unwrap();
            for item in &items {
                evicted.extend(invalidate_on_add(&mut cache, &self.invalidation, item));
            }
            *self.snapshot.write().unwrap() = Arc::new(Snapshot { engine: next, version });
        }
        self.ingested.lock().unwrap().extend(items.iter().cloned());
        evicted.sort();
        evicted.dedup();
        self.persist().await?;
        Ok(IngestSummary {
            added: items.len(),
            evicted,
            version,
            catalog_size,
        })
    }

    fn state_file(&self) -> StateFile {
        let snap = self.snapshot();
        let users = self
            .users
            .lock()
            .unwrap()
            .iter()
            .map(|(k, v)| (k.clone(), Arc::clone(v)))
            .collect::<Vec<_>>();
        StateFile {
            format: STATE_FORMAT.into(),
            version: STATE_VERSION,
            config_hash: snap.engine.config_hash().to_string(),
            base_catalog: self.base_catalog.clone(),
            snapshot_version: snap.version,
            ingested: self.ingested.lock().unwrap().clone(),
            // A user whose mutex is held is mid-update and gets written by
            // that update's own persist call.
            users: users
                .into_iter()
                .filter_map(|(k, v)| v.try_lock().ok().map(|u| (k, u.clone())))
                .collect(),
            cache: self.cache.read().unwrap().clone(),
        }
    }

    /// Writes the state file, if one is configured, via a temporary file in
    /// the same directory and a rename.
    pub async fn persist(&self) -> ApiResult<()> {
        let Some(path) = self.state_path.clone() else {
            return Ok(());
        };
        let _guard = self.write.lock().await;
        let file = self.state_file();
        tokio::task::spawn_blocking(move || write_atomically(&path, &file))
            .await
            .map_err(|e| ApiError::internal(e.to_string()))?
            .map_err(|e| ApiError::internal(format!("writing state: {e}")))
    }
}

pub fn write_atomically(path: &Path, file: &StateFile) -> std::io::Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    serde_json::to_writer(&mut tmp, file)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
