use std::collections::HashMap;

const NIL: usize = usize::MAX;

#[derive(Debug, Clone, PartialEq)]
struct Node {
    key: u32,
    prev: usize,
    next: usize,
}

/// Fixed-capacity LRU set of object ids.
///
/// Slots live in a slab threaded by a doubly linked list; `head` is the most
/// recently used entry and `tail` the eviction candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct LruSet {
    capacity: usize,
    index: HashMap<u32, usize>,
    nodes: Vec<Node>,
    head: usize,
    tail: usize,
}

impl LruSet {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            index: HashMap::with_capacity(capacity.min(1 << 20)),
            nodes: Vec::with_capacity(capacity.min(1 << 20)),
            head: NIL,
            tail: NIL,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn contains(&self, key: u32) -> bool {
        self.index.contains_key(&key)
    }

    /// Marks `key` most recently used. Returns false if it is absent.
    pub fn touch(&mut self, key: u32) -> bool {
        match self.index.get(&key) {
            Some(&slot) => {
                self.unlink(slot);
                self.push_front(slot);
                true
            }
            None => false,
        }
    }

    /// Inserts `key` as most recently used, evicting the least recently used
    /// entry when full. Re-inserting a present key only refreshes it.
    /// Returns the evicted key.
    pub fn insert(&mut self, key: u32) -> Option<u32> {
        if self.capacity == 0 || self.touch(key) {
            return None;
        }
        let mut evicted = None;
        let slot = if self.index.len() == self.capacity {
            let victim = self.tail;
            self.unlink(victim);
            let old = self.nodes[victim].key;
            self.index.remove(&old);
            evicted = Some(old);
            self.nodes[victim].key = key;
            victim
        } else {
            self.nodes.push(Node { key, prev: NIL, next: NIL });
            self.nodes.len() - 1
        };
        self.index.insert(key, slot);
        self.push_front(slot);
        assert!(self.index.len() <= self.capacity, "content store over capacity");
        evicted
    }

    /// Keys from most to least recently used.
    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        let mut cur = self.head;
        std::iter::from_fn(move || {
            (cur != NIL).then(|| {
                let node = &self.nodes[cur];
                cur = node.next;
                node.key
            })
        })
    }

    fn unlink(&mut self, slot: usize) {
        let Node { prev, next, .. } = self.nodes[slot];
        if prev != NIL {
            self.nodes[prev].next = next;
        } else {
            self.head = next;
        }
        if next != NIL {
            self.nodes[next].prev = prev;
        } else {
            self.tail = prev;
        }
    }

    fn push_front(&mut self, slot: usize) {
        self.nodes[slot].prev = NIL;
        self.nodes[slot].next = self.head;
        if self.head != NIL {
            self.nodes[self.head].prev = slot;
        }
        self.head = slot;
        if self.tail == NIL {
            self.tail = slot;
        }
    }
}
