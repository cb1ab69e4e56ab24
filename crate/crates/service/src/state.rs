use std::collections::{HashMap, VecDeque};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use axum::body::Bytes;
use evtrack_core::scenario::Scenario;

use crate::config::ServiceConfig;
use crate::error::ApiError;

/// One immutable version of a scenario. Every mutation installs a new
/// snapshot under a fresh token; readers keep whichever `Arc` they took.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub token: String,
    pub scenario: Arc<Scenario>,
}

/// Responses keyed by `(token, route, canonical query)`, evicted oldest
/// first.
#[derive(Debug, Default)]
struct Cache {
    entries: HashMap<String, Bytes>,
    order: VecDeque<String>,
}

#[derive(Debug)]
pub struct AppState {
    pub config: ServiceConfig,
    scenarios: RwLock<HashMap<String, Snapshot>>,
    cache: Mutex<Cache>,
    next_token: AtomicU64,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> Self {
        Self {
            config,
            scenarios: RwLock::new(HashMap::new()),
            cache: Mutex::new(Cache::default()),
            next_token: AtomicU64::new(1),
        }
    }

    fn fresh_token(&self) -> String {
        format!("v{}", self.next_token.fetch_add(1, Ordering::Relaxed))
    }

    pub fn get(&self, id: &str) -> Result<Snapshot, ApiError> {
        self.scenarios
            .read()
            .expect("scenario lock poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::NotFound(format!("no scenario `{id}`")))
    }

    /// Like [`get`](Self::get), rejecting a `token` that is not the current one.
    pub fn current(&self, id: &str, token: Option<&str>) -> Result<Snapshot, ApiError> {
        let snap = self.get(id)?;
        match token {
            Some(t) if t != snap.token => Err(ApiError::Conflict(format!(
                "stale snapshot token `{t}`, current is `{}`",
                snap.token
            ))),
            _ => Ok(snap),
        }
    }

    /// Stores a new scenario. With `replace` false an existing id is a
    /// conflict.
    pub fn insert(&self, scenario: Scenario, replace: bool) -> Result<Snapshot, ApiError> {
        let mut map = self.scenarios.write().expect("scenario lock poisoned");
        if !replace && map.contains_key(&scenario.id) {
            return Err(ApiError::Conflict(format!("scenario `{}` already exists", scenario.id)));
        }
        let snap = Snapshot {
            token: self.fresh_token(),
            scenario: Arc::new(scenario),
        };
        map.insert(snap.scenario.id.clone(), snap.clone());
        Ok(snap)
    }

    /// Applies `f` to a copy of the current scenario and installs the result
    /// as a new snapshot. Writers are serialised by the map lock, so
    /// concurrent updates apply in some total order.
    pub fn update<T>(&self, id: &str, f: impl FnOnce(&mut Scenario) -> Result<T, ApiError>) -> Result<(Snapshot, T), ApiError> {
        let mut map = self.scenarios.write().expect("scenario lock poisoned");
        let snap = map.get(id).ok_or_else(|| ApiError::NotFound(format!("no scenario `{id}`")))?;
        let mut scenario = (*snap.scenario).clone();
        let out = f(&mut scenario)?;
        let snap = Snapshot {
            token: self.fresh_token(),
            scenario: Arc::new(scenario),
        };
        map.insert(id.to_string(), snap.clone());
        Ok((snap, out))
    }

    pub fn cached(&self, key: &str) -> Option<Bytes> {
        self.cache.lock().expect("cache lock poisoned").entries.get(key).cloned()
    }

    pub fn store(&self, key: String, body: Bytes) {
        let limit = self.config.cache_entries;
        if limit == 0 {
            return;
        }
        let mut cache = self.cache.lock().expect("cache lock poisoned");
        if cache.entries.insert(key.clone(), body).is_none() {
            cache.order.push_back(key);
        }
        while cache.order.len() > limit {
            if let Some(old) = cache.order.pop_front() {
                cache.entries.remove(&old);
            }
        }
    }
}
