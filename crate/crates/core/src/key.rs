//! Canonical identities for vertices of iterated barycentric subdivisions.
//!
//! A vertex of `Sd^0` is one of the base vertices `b<i>`. A vertex of
//! `Sd^(k+1)` is the barycenter of a simplex of `Sd^k`, identified by the
//! sorted set of that simplex's vertices. The barycenter of a single vertex
//! `w` is written `(w)`: same point, one level up.
//!
//! Keys are totally ordered: base keys by index, then face keys by number of
//! children and lexicographically among equal-size faces. At level 1 this
//! gives the familiar `v0, v1, v2, v01, v02, v12, v012` order.

use std::cmp::Ordering as CmpOrdering;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Result, SimapError};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum VertexKey {
    Base(usize),
    Face(Vec<VertexKey>),
}

impl VertexKey {
    /// Builds a face key from any nonempty collection of same-level children,
    /// sorting and deduplicating them.
    pub fn face(children: impl IntoIterator<Item = VertexKey>) -> Self {
        let mut children: Vec<VertexKey> = children.into_iter().collect();
        assert!(!children.is_empty(), "face keys need at least one child");
        children.sort();
        children.dedup();
        VertexKey::Face(children)
    }

    pub fn level(&self) -> usize {
        match self {
            VertexKey::Base(_) => 0,
            VertexKey::Face(children) => 1 + children[0].level(),
        }
    }

    pub fn children(&self) -> &[VertexKey] {
        match self {
            VertexKey::Base(_) => &[],
            VertexKey::Face(children) => children,
        }
    }
}

impl Ord for VertexKey {
    fn cmp(&self, other: &Self) -> CmpOrdering {
        match (self, other) {
            (VertexKey::Base(a), VertexKey::Base(b)) => a.cmp(b),
            (VertexKey::Base(_), VertexKey::Face(_)) => CmpOrdering::Less,
            (VertexKey::Face(_), VertexKey::Base(_)) => CmpOrdering::Greater,
            (VertexKey::Face(a), VertexKey::Face(b)) => {
                a.len().cmp(&b.len()).then_with(|| a.cmp(b))
            }
        }
    }
}

impl PartialOrd for VertexKey {
    fn partial_cmp(&self, other: &Self) -> Option<CmpOrdering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for VertexKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VertexKey::Base(i) => write!(f, "b{i}"),
            VertexKey::Face(children) => {
                f.write_str("(")?;
                for (i, c) in children.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{c}")?;
                }
                f.write_str(")")
            }
        }
    }
}

impl FromStr for VertexKey {
    type Err = SimapError;

    fn from_str(s: &str) -> Result<Self> {
        let bytes = s.as_bytes();
        let mut pos = 0;
        let key = parse_key(bytes, &mut pos).ok_or_else(|| SimapError::ParseKey(s.into()))?;
        // only the canonical spelling is accepted
        if pos != bytes.len() || key.to_string() != s {
            return Err(SimapError::ParseKey(s.into()));
        }
        Ok(key)
    }
}

fn parse_key(s: &[u8], pos: &mut usize) -> Option<VertexKey> {
    match s.get(*pos)? {
        b'b' => {
            *pos += 1;
            let start = *pos;
            while s.get(*pos).is_some_and(u8::is_ascii_digit) {
                *pos += 1;
            }
            std::str::from_utf8(&s[start..*pos])
                .ok()?
                .parse()
                .ok()
                .map(VertexKey::Base)
        }
        b'(' => {
            *pos += 1;
            let mut children = Vec::new();
            loop {
                children.push(parse_key(s, pos)?);
                match s.get(*pos)? {
                    b',' => *pos += 1,
                    b')' => {
                        *pos += 1;
                        break;
                    }
                    _ => return None,
                }
            }
            let level = children[0].level();
            if children.iter().any(|c| c.level() != level) {
                return None;
            }
            Some(VertexKey::face(children))
        }
        _ => None,
    }
}

/// Dense index of an interned vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexId(pub usize);

/// Insertion-ordered bidirectional map between keys and dense ids.
#[derive(Debug, Clone, Default)]
pub struct VertexInterner {
    ids: HashMap<VertexKey, VertexId>,
    keys: Vec<VertexKey>,
}

impl VertexInterner {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the id of `key` and whether it was newly inserted.
    pub fn intern(&mut self, key: &VertexKey) -> (VertexId, bool) {
        if let Some(&id) = self.ids.get(key) {
            return (id, false);
        }
        let id = VertexId(self.keys.len());
        self.keys.push(key.clone());
        self.ids.insert(key.clone(), id);
        (id, true)
    }

    pub fn get(&self, key: &VertexKey) -> Option<VertexId> {
        self.ids.get(key).copied()
    }

    pub fn key(&self, id: VertexId) -> &VertexKey {
        &self.keys[id.0]
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// Keys in id order.
    pub fn keys(&self) -> &[VertexKey] {
        &self.keys
    }
}
