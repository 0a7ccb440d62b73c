//! Time-aware map from `(address, timestamp)` to data objects.
//!
//! Objects come from static declarations, allocations at or above the size
//! threshold, and analyst-wrapped regions. Allocations that fall inside a
//! live wrapped region are absorbed by it whatever their size, so many tiny
//! blocks can be reported under one label. Address reuse is resolved through
//! lifetimes: a block freed and allocated again at the same base yields two
//! objects with disjoint lifetimes.

use std::collections::{HashMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::trace::{EventPayload, MemorySample, Trace};

/// Experiment default: allocations of at least 32 KiB are tracked.
pub const DEFAULT_THRESHOLD: u64 = 32 * 1024;
/// Larger threshold used by the tracing package when left unconfigured.
pub const PACKAGE_DEFAULT_THRESHOLD: u64 = 1 << 20;
/// Conventional floor for stack classification when one is requested
/// without an explicit address.
pub const CANONICAL_STACK_FLOOR: u64 = 0xffff_8000_0000_0000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ObjectKind {
    Static,
    Dynamic,
    Wrapped,
    Stack,
}

impl ObjectKind {
    pub fn name(self) -> &'static str {
        match self {
            ObjectKind::Static => "static",
            ObjectKind::Dynamic => "dynamic",
            ObjectKind::Wrapped => "wrapped",
            ObjectKind::Stack => "stack",
        }
    }
}

/// Half-open `[start, end)` in trace nanoseconds; `end == None` is unbounded.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Lifetime {
    pub start: u64,
    pub end: Option<u64>,
}

impl Lifetime {
    pub fn contains(&self, t: u64) -> bool {
        t >= self.start && self.end.is_none_or(|e| t < e)
    }

    pub fn intersects(&self, other: &Lifetime) -> bool {
        self.end.is_none_or(|e| other.start < e) && other.end.is_none_or(|e| self.start < e)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DataObject {
    /// Positive and unique within a map, assigned in trace order.
    pub id: u32,
    pub kind: ObjectKind,
    /// Variable name, allocation callsite or wrap label.
    pub label: String,
    pub base: u64,
    pub size: u64,
    pub lifetime: Lifetime,
}

impl DataObject {
    pub fn end(&self) -> u64 {
        self.base.saturating_add(self.size)
    }

    pub fn contains(&self, address: u64, t: u64) -> bool {
        address >= self.base && address < self.end() && self.lifetime.contains(t)
    }
}

impl fmt::Display for DataObject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} object #{} `{}` [{:#x}, {:#x})",
            self.kind.name(),
            self.id,
            self.label,
            self.base,
            self.end()
        )
    }
}

/// Resolution of one sampled address.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ObjectRef {
    Object { id: u32, offset: u64 },
    Stack,
    Unnamed,
}

#[derive(Debug, Error)]
pub enum MapError {
    #[error("size threshold must be positive")]
    ZeroThreshold,
    #[error("overlapping live objects: {first} and {second}")]
    Overlap { first: String, second: String },
    #[error("partial free at {address:#x} (t={timestamp}) inside {object}")]
    PartialFree {
        address: u64,
        timestamp: u64,
        object: String,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MapConfig {
    pub threshold: u64,
    /// Addresses at or above the floor resolve to the stack. `None` disables
    /// stack classification.
    pub stack_floor: Option<u64>,
}

impl Default for MapConfig {
    fn default() -> Self {
        MapConfig {
            threshold: DEFAULT_THRESHOLD,
            stack_floor: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObjectMap {
    objects: Vec<DataObject>,
    /// `objects` indices sorted by base address.
    by_base: Vec<usize>,
    /// Running maximum of object end addresses along `by_base`.
    max_end: Vec<u64>,
    by_id: HashMap<u32, usize>,
    config: MapConfig,
}

struct PendingAlloc {
    id: u32,
    base: u64,
    size: u64,
    label: String,
    start: u64,
}

/// Builds the object map for `trace`.
pub fn build_object_map(trace: &Trace, config: MapConfig) -> Result<ObjectMap, MapError> {
    if config.threshold == 0 {
        return Err(MapError::ZeroThreshold);
    }
    let mut next_id = 1u32;
    let mut objects: Vec<DataObject> = Vec::new();
    // wrapped regions live from their declaration on: (begin, end, start)
    let mut wraps: Vec<(u64, u64, u64)> = Vec::new();
    let mut live: HashMap<u64, PendingAlloc> = HashMap::new();
    let mut untracked: HashSet<u64> = HashSet::new();

    let close = |p: PendingAlloc, end: Option<u64>, objects: &mut Vec<DataObject>| {
        let lifetime = Lifetime { start: p.start, end };
        if end.is_none_or(|e| e > p.start) {
            objects.push(DataObject {
                id: p.id,
                kind: ObjectKind::Dynamic,
                label: p.label,
                base: p.base,
                size: p.size,
                lifetime,
            });
        }
    };

    for ev in &trace.events {
        let ts = ev.timestamp;
        match &ev.payload {
            EventPayload::Static(o) => {
                objects.push(DataObject {
                    id: next_id,
                    kind: ObjectKind::Static,
                    label: o.name.clone(),
                    base: o.base_address,
                    size: o.size,
                    lifetime: Lifetime { start: 0, end: None },
                });
                next_id += 1;
            }
            EventPayload::Wrap(w) => {
                wraps.push((w.begin_address, w.end_address, ts));
                objects.push(DataObject {
                    id: next_id,
                    kind: ObjectKind::Wrapped,
                    label: w.label.clone(),
                    base: w.begin_address,
                    size: w.end_address - w.begin_address,
                    lifetime: Lifetime { start: ts, end: None },
                });
                next_id += 1;
            }
            EventPayload::Alloc(a) => {
                let end = a.base_address.saturating_add(a.size);
                let absorbed = wraps
                    .iter()
                    .any(|&(b, e, start)| start <= ts && a.base_address >= b && end <= e);
                if absorbed || a.size < config.threshold {
                    untracked.insert(a.base_address);
                    continue;
                }
                let pending = PendingAlloc {
                    id: next_id,
                    base: a.base_address,
                    size: a.size,
                    label: a.callsite.clone(),
                    start: ts,
                };
                next_id += 1;
                // a second allocation at a live base ends the first one
                if let Some(prev) = live.insert(a.base_address, pending) {
                    close(prev, Some(ts), &mut objects);
                }
            }
            EventPayload::Free(f) => {
                if let Some(p) = live.remove(&f.base_address) {
                    close(p, Some(ts), &mut objects);
                } else if untracked.remove(&f.base_address) {
                } else if let Some(p) = live
                    .values()
                    .find(|p| f.base_address > p.base && f.base_address < p.base + p.size)
                {
                    return Err(MapError::PartialFree {
                        address: f.base_address,
                        timestamp: ts,
                        object: format!("dynamic object #{} `{}`", p.id, p.label),
                    });
                }
            }
            _ => {}
        }
    }
    let mut remaining: Vec<PendingAlloc> = live.into_values().collect();
    remaining.sort_by_key(|p| p.id);
    for p in remaining {
        close(p, None, &mut objects);
    }
    objects.sort_by_key(|o| o.id);
    ObjectMap::from_objects(objects, config)
}

impl ObjectMap {
    /// Assembles a map from explicit objects, rejecting overlaps.
    pub fn from_objects(objects: Vec<DataObject>, config: MapConfig) -> Result<Self, MapError> {
        let mut by_base: Vec<usize> = (0..objects.len()).collect();
        by_base.sort_by_key(|&i| (objects[i].base, objects[i].lifetime.start, objects[i].id));

        for (pos, &i) in by_base.iter().enumerate() {
            let a = &objects[i];
            for &j in &by_base[pos + 1..] {
                let b = &objects[j];
                if b.base >= a.end() {
                    break;
                }
                if a.lifetime.intersects(&b.lifetime) {
                    let (first, second) = if a.id < b.id { (a, b) } else { (b, a) };
                    return Err(MapError::Overlap {
                        first: first.to_string(),
                        second: second.to_string(),
                    });
                }
            }
        }

        let mut max_end = Vec::with_capacity(by_base.len());
        let mut running = 0u64;
        for &i in &by_base {
            running = running.max(objects[i].end());
            max_end.push(running);
        }
        let by_id = objects.iter().enumerate().map(|(i, o)| (o.id, i)).collect();
        Ok(ObjectMap {
            objects,
            by_base,
            max_end,
            by_id,
            config,
        })
    }

    /// Objects in id order.
    pub fn objects(&self) -> &[DataObject] {
        &self.objects
    }

    pub fn get(&self, id: u32) -> Option<&DataObject> {
        self.by_id.get(&id).map(|&i| &self.objects[i])
    }

    pub fn config(&self) -> MapConfig {
        self.config
    }

    pub fn threshold(&self) -> u64 {
        self.config.threshold
    }

    pub fn stack_floor(&self) -> Option<u64> {
        self.config.stack_floor
    }

    /// The object live at `timestamp` whose range holds `address`.
    pub fn lookup(&self, address: u64, timestamp: u64) -> Option<&DataObject> {
        let upper = self
            .by_base
            .partition_point(|&i| self.objects[i].base <= address);
        for pos in (0..upper).rev() {
            if self.max_end[pos] <= address {
                break;
            }
            let obj = &self.objects[self.by_base[pos]];
            if obj.contains(address, timestamp) {
                return Some(obj);
            }
        }
        None
    }

    pub fn resolve(&self, address: u64, timestamp: u64) -> ObjectRef {
        if let Some(obj) = self.lookup(address, timestamp) {
            return ObjectRef::Object {
                id: obj.id,
                offset: address - obj.base,
            };
        }
        match self.config.stack_floor {
            Some(floor) if address >= floor => ObjectRef::Stack,
            _ => ObjectRef::Unnamed,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankRow {
    pub object_id: u32,
    pub label: String,
    pub size: u64,
    pub count: u64,
    pub share: f64,
}

/// Reference shares per object, with stack and unnamed references kept
/// apart from the object rows.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Ranking {
    pub rows: Vec<RankRow>,
    pub stack_share: f64,
    pub unnamed_share: f64,
    pub total: u64,
}

/// Ranks objects by their share of the sampled references. Counter-only
/// pseudo-samples are skipped.
pub fn rank_objects<'a, I>(map: &ObjectMap, samples: I) -> Ranking
where
    I: IntoIterator<Item = (u64, &'a MemorySample)>,
{
    let mut counts: HashMap<u32, u64> = HashMap::new();
    let (mut stack, mut unnamed, mut total) = (0u64, 0u64, 0u64);
    for (ts, s) in samples {
        if s.is_pseudo() {
            continue;
        }
        total += 1;
        match map.resolve(s.address, ts) {
            ObjectRef::Object { id, .. } => *counts.entry(id).or_default() += 1,
            ObjectRef::Stack => stack += 1,
            ObjectRef::Unnamed => unnamed += 1,
        }
    }
    if total == 0 {
        return Ranking::default();
    }
    let denom = total as f64;
    let mut rows: Vec<RankRow> = counts
        .into_iter()
        .map(|(id, count)| {
            let obj = map.get(id).expect("resolved ids exist in the map");
            RankRow {
                object_id: id,
                label: obj.label.clone(),
                size: obj.size,
                count,
                share: count as f64 / denom,
            }
        })
        .collect();
    rows.sort_by(|a, b| b.count.cmp(&a.count).then(a.object_id.cmp(&b.object_id)));
    Ranking {
        rows,
        stack_share: stack as f64 / denom,
        unnamed_share: unnamed as f64 / denom,
        total,
    }
}
