//! Per-user exploration state and the store that holds it.

use std::collections::{HashMap, HashSet};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use serde::Deserialize;
use serde_json::{json, Value};
use tokio::sync::RwLock;
use vizrec_core::emitter::{self, parse_vegalite};
use vizrec_core::recommender::enumerate;
use vizrec_core::{
    BookmarkStore, Channel, ChannelMap, Dataset, EmitOptions, EncodingError, FieldRef, FilterClause,
    SchemaVersion, VarType, VisSpec,
};

use crate::error::ApiError;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum MappingOp {
    Assign { channel: Channel, field: FieldRef },
    Clear { channel: Channel },
    Set { map: ChannelMap },
}

#[derive(Debug, Clone)]
pub struct Session {
    pub id: String,
    pub dataset: Dataset,
    pub map: ChannelMap,
    pub filters: Vec<FilterClause>,
    pub bookmarks: BookmarkStore,
    /// Bumped on every change.
    pub version: u64,
}

impl Session {
    pub fn new(id: String, dataset: Dataset) -> Session {
        Session {
            id,
            dataset,
            map: ChannelMap::new(),
            filters: Vec::new(),
            bookmarks: BookmarkStore::default(),
            version: 1,
        }
    }

    /// Applies all ops or none.
    pub fn apply(&mut self, ops: &[MappingOp]) -> Result<(), ApiError> {
        let mut map = self.map.clone();
        for op in ops {
            map = match op {
                MappingOp::Assign { channel, field } => map.assign(*channel, field.clone(), &self.dataset)?,
                MappingOp::Clear { channel } => map.clear(*channel),
                MappingOp::Set { map: next } => {
                    next.validate(&self.dataset)?;
                    next.clone()
                }
            };
        }
        self.map = map;
        self.version += 1;
        Ok(())
    }

    /// Changes a variable's type. Channels the new type no longer fits are cleared.
    pub fn set_type(&mut self, variable: &str, to: VarType) -> Result<(), ApiError> {
        self.dataset = self.dataset.override_type(variable, to)?;
        let mut map = self.map.clone();
        for channel in Channel::ALL {
            if let Some(field) = map.get(channel) {
                if field.check(channel, &self.dataset).is_err() {
                    map = map.clear(channel);
                }
            }
        }
        self.map = map;
        let d = &self.dataset;
        self.filters.retain(|f| f.validate(d).is_ok());
        self.version += 1;
        Ok(())
    }

    pub fn set_filters(&mut self, filters: Vec<FilterClause>) -> Result<(), ApiError> {
        for f in &filters {
            f.validate(&self.dataset)?;
        }
        self.filters = filters;
        self.version += 1;
        Ok(())
    }

    /// The main chart, once some variable is on x or y.
    pub fn main_spec(&self) -> Result<Option<VisSpec>, ApiError> {
        match self.map.build_spec(&self.dataset) {
            Ok(spec) => Ok(Some(spec.with_filters(&self.filters))),
            Err(EncodingError::NoMapping) => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    pub fn recommendations(&self, schema: SchemaVersion) -> Result<Value, ApiError> {
        let mut recs = enumerate(&self.map.selection(), &self.dataset)?.with_filters(&self.filters);
        for g in &mut recs.groups {
            g.bookmark_ids = self.bookmarks.ids_for(g);
        }
        Ok(recs.to_json(&self.dataset, EmitOptions::url(schema))?)
    }

    pub fn add_bookmark(&mut self, doc: &Value, question: String, schema: SchemaVersion) -> Result<Value, ApiError> {
        let spec = parse_vegalite(doc, self.dataset.name())?;
        emitter::to_vegalite(&spec, &self.dataset, EmitOptions::url(schema))?;
        let b = self.bookmarks.add(spec, question);
        self.version += 1;
        self.bookmark_json(&b.id, schema)
    }

    pub fn bookmark_json(&self, id: &str, schema: SchemaVersion) -> Result<Value, ApiError> {
        let b = self.bookmarks.get(id).ok_or_else(|| bookmark_not_found(id))?;
        Ok(json!({
            "id": b.id,
            "question": b.question,
            "created_at": b.created_at.to_rfc3339(),
            "spec": emitter::to_vegalite(&b.spec, &self.dataset, EmitOptions::url(schema))?,
        }))
    }

    pub fn bookmarks_json(&self, schema: SchemaVersion) -> Result<Value, ApiError> {
        let items = self
            .bookmarks
            .list()
            .iter()
            .map(|b| self.bookmark_json(&b.id, schema))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(json!({ "bookmarks": items }))
    }

    pub fn remove_bookmark(&mut self, id: &str) -> Result<(), ApiError> {
        if !self.bookmarks.remove(id) {
            return Err(bookmark_not_found(id));
        }
        self.version += 1;
        Ok(())
    }

    /// Everything a client needs to redraw.
    pub fn snapshot(&self, schema: SchemaVersion) -> Result<Value, ApiError> {
        let main_spec = match self.main_spec()? {
            Some(spec) => emitter::to_vegalite(&spec, &self.dataset, EmitOptions::url(schema))?,
            None => Value::Null,
        };
        Ok(json!({
            "id": self.id,
            "version": self.version,
            "dataset": self.dataset.summary(),
            "channel_map": self.map,
            "available_channels": self.map.available_channels(),
            "main_spec": main_spec,
            "recommendations": self.recommendations(schema)?,
            "filters": self.filters,
        }))
    }
}

fn bookmark_not_found(id: &str) -> ApiError {
    ApiError::new(axum::http::StatusCode::NOT_FOUND, "bookmark_not_found", "no such bookmark")
        .with_context(json!({ "bookmark": id }))
}

struct Entry {
    session: Arc<RwLock<Session>>,
    last_access: Instant,
}

#[derive(Default)]
struct Inner {
    live: HashMap<String, Entry>,
    expired: HashSet<String>,
}

/// Sessions by id, with a sliding time-to-live.
#[derive(Clone)]
pub struct SessionStore {
    inner: Arc<Mutex<Inner>>,
    ttl: Duration,
}

impl SessionStore {
    pub fn new(ttl: Duration) -> SessionStore {
        SessionStore {
            inner: Arc::default(),
            ttl,
        }
    }

    pub fn create(&self, dataset: Dataset) -> Arc<RwLock<Session>> {
        let id = uuid::Uuid::new_v4().to_string();
        let session = Arc::new(RwLock::new(Session::new(id.clone(), dataset)));
        let entry = Entry {
            session: session.clone(),
            last_access: Instant::now(),
        };
        self.inner.lock().expect("store lock").live.insert(id, entry);
        session
    }

    /// Looks up a session and restarts its clock.
    pub fn get(&self, id: &str) -> Result<Arc<RwLock<Session>>, ApiError> {
        let mut guard = self.inner.lock().expect("store lock");
        let inner = &mut *guard;
        let now = Instant::now();
        match inner.live.get_mut(id) {
            Some(entry) if now.duration_since(entry.last_access) <= self.ttl => {
                entry.last_access = now;
                Ok(entry.session.clone())
            }
            Some(_) => {
                inner.live.remove(id);
                inner.expired.insert(id.to_string());
                Err(ApiError::session_expired(id))
            }
            None if inner.expired.contains(id) => Err(ApiError::session_expired(id)),
            None => Err(ApiError::session_not_found(id)),
        }
    }

    /// Drops sessions idle past the TTL. Returns how many were dropped.
    pub fn sweep(&self) -> usize {
        let mut inner = self.inner.lock().expect("store lock");
        let now = Instant::now();
        let stale: Vec<String> = inner
            .live
            .iter()
            .filter(|(_, e)| now.duration_since(e.last_access) > self.ttl)
            .map(|(id, _)| id.clone())
            .collect();
        for id in &stale {
            inner.live.remove(id);
            inner.expired.insert(id.clone());
        }
        stale.len()
    }

    pub fn len(&self) -> usize {
        self.inner.lock().expect("store lock").live.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
