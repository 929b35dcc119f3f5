use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::lru::LruSet;
use crate::error::{Error, Result};

/// Downstream interface an Interest arrived on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Face {
    /// A consumer request, identified by its global request number.
    Consumer(u64),
    /// The child router in slot `0..k`.
    Child(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Disposition {
    Hit,
    Aggregated,
    Forwarded,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DispositionCounts {
    pub hit: u64,
    pub aggregated: u64,
    pub forwarded: u64,
}

impl DispositionCounts {
    pub fn arrivals(&self) -> u64 {
        self.hit + self.aggregated + self.forwarded
    }

    pub fn add(&mut self, other: &DispositionCounts) {
        self.hit += other.hit;
        self.aggregated += other.aggregated;
        self.forwarded += other.forwarded;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PitEntry {
    pub faces: Vec<Face>,
    pub created: f64,
}

/// Content Store, PIT and per-object tallies of one router.
#[derive(Debug, Clone)]
pub struct RouterState {
    content_store: LruSet,
    pit: HashMap<u32, PitEntry>,
    counts: Vec<DispositionCounts>,
    peak_store_len: usize,
}

impl RouterState {
    pub fn new(capacity: usize, n_objects: usize) -> Self {
        Self {
            content_store: LruSet::new(capacity),
            pit: HashMap::new(),
            counts: vec![Default::default(); n_objects],
            peak_store_len: 0,
        }
    }

    /// Largest Content Store occupancy seen so far.
    pub fn peak_store_len(&self) -> usize {
        self.peak_store_len
    }

    pub fn content_store(&self) -> &LruSet {
        &self.content_store
    }

    pub fn pit_entry(&self, object: u32) -> Option<&PitEntry> {
        self.pit.get(&object)
    }

    pub fn pit_len(&self) -> usize {
        self.pit.len()
    }

    pub fn counts(&self) -> &[DispositionCounts] {
        &self.counts
    }

    /// Classifies an arriving Interest and updates CS recency or the PIT.
    /// The caller delivers Data on a hit and sends the Interest upstream
    /// when it is forwarded. `tally` selects whether the arrival is counted.
    pub fn handle_interest(&mut self, object: u32, face: Face, now: f64, tally: bool) -> Disposition {
        let disposition = if self.content_store.touch(object) {
            Disposition::Hit
        } else if let Some(entry) = self.pit.get_mut(&object) {
            if !entry.faces.contains(&face) {
                entry.faces.push(face);
            }
            Disposition::Aggregated
        } else {
            self.pit.insert(object, PitEntry { faces: vec![face], created: now });
            Disposition::Forwarded
        };
        if tally {
            let c = &mut self.counts[object as usize];
            match disposition {
                Disposition::Hit => c.hit += 1,
                Disposition::Aggregated => c.aggregated += 1,
                Disposition::Forwarded => c.forwarded += 1,
            }
        }
        disposition
    }

    /// Stores the object, clears its PIT entry and returns the faces
    /// waiting for it.
    pub fn handle_data(&mut self, object: u32, _now: f64) -> Result<Vec<Face>> {
        let entry = self
            .pit
            .remove(&object)
            .ok_or_else(|| Error::ProtocolViolation(format!("data for object {object} without a PIT entry")))?;
        self.content_store.insert(object);
        self.peak_store_len = self.peak_store_len.max(self.content_store.len());
        Ok(entry.faces)
    }
}
