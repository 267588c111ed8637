//! Pre-generated outfits and category-based invalidation.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::catalog::{Category, Item};
use crate::generator::{slot_layout, GenerationOutput};
use crate::Result;

/// New item of category `c` invalidates outfits anchored on `A(c)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvalidationMap {
    rows: BTreeMap<Category, BTreeSet<Category>>,
}

impl Default for InvalidationMap {
    fn default() -> Self {
        use Category::*;
        let rows = [
            (Top, vec![Bottom, Shoes, Dress]),
            (Bottom, vec![Top, Shoes]),
            (Shoes, vec![Top, Bottom, Dress]),
            (Layer, vec![Top, Bottom, Shoes, Dress]),
            (Accessory, vec![Top, Bottom, Shoes, Dress, Layer]),
            (Dress, vec![Shoes]),
        ];
        Self {
            rows: rows
                .into_iter()
                .map(|(c, a)| (c, a.into_iter().collect()))
                .collect(),
        }
    }
}

impl InvalidationMap {
    pub fn anchors_to_invalidate(&self, new_category: Category) -> &BTreeSet<Category> {
        &self.rows[&new_category]
    }

    /// Same as [`anchors_to_invalidate`](Self::anchors_to_invalidate) for a category name.
    pub fn anchors_for_name(&self, new_category: &str) -> Result<&BTreeSet<Category>> {
        Ok(self.anchors_to_invalidate(new_category.parse()?))
    }

    pub fn rows(&self) -> &BTreeMap<Category, BTreeSet<Category>> {
        &self.rows
    }

    /// True when every category that can fill a slot of an `anchor`-anchored
    /// outfit evicts that outfit. The table leaves layer and accessory
    /// anchors exposed to new tops, so those are never cached.
    pub fn covers_anchor(&self, anchor: Category) -> bool {
        let (required, optional) = slot_layout(anchor);
        required
            .iter()
            .chain(&optional)
            .all(|slot| self.rows[slot].contains(&anchor))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CacheKey {
    pub anchor_id: String,
    pub occasion: String,
}

impl CacheKey {
    pub fn new(anchor_id: impl Into<String>, occasion: impl Into<String>) -> Self {
        Self {
            anchor_id: anchor_id.into(),
            occasion: occasion.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub anchor_category: Category,
    pub output: GenerationOutput,
    /// Caller-supplied generation stamp (a counter in the service).
    pub generated_at: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OutfitCache {
    #[serde(with = "entries_as_list")]
    entries: BTreeMap<CacheKey, CacheEntry>,
}

impl OutfitCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: &CacheKey) -> Option<&CacheEntry> {
        self.entries.get(key)
    }

    pub fn insert(&mut self, key: CacheKey, entry: CacheEntry) {
        self.entries.insert(key, entry);
    }

    pub fn keys(&self) -> impl Iterator<Item = &CacheKey> {
        self.entries.keys()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&CacheKey, &CacheEntry)> {
        self.entries.iter()
    }

    pub fn retain(&mut self, mut keep: impl FnMut(&CacheKey, &CacheEntry) -> bool) {
        self.entries.retain(|k, v| keep(k, v));
    }
}

/// Evicts every entry whose anchor category is in `A(new_item.category)` and
/// returns the evicted keys in key order.
pub fn invalidate_on_add(cache: &mut OutfitCache, map: &InvalidationMap, new_item: &Item) -> Vec<CacheKey> {
    let affected = map.anchors_to_invalidate(new_item.category);
    let mut evicted = Vec::new();
    cache.entries.retain(|k, e| {
        let hit = affected.contains(&e.anchor_category);
        if hit {
            evicted.push(k.clone());
        }
        !hit
    });
    evicted
}

mod entries_as_list {
    use super::{CacheEntry, CacheKey};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use std::collections::BTreeMap;

    #[derive(Serialize, Deserialize)]
    struct Row {
        key: CacheKey,
        entry: CacheEntry,
    }

    pub fn serialize<S: Serializer>(m: &BTreeMap<CacheKey, CacheEntry>, s: S) -> Result<S::Ok, S::Error> {
        m.iter()
            .map(|(k, e)| Row {
                key: k.clone(),
                entry: e.clone(),
            })
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<CacheKey, CacheEntry>, D::Error> {
        Ok(Vec::<Row>::deserialize(d)?
            .into_iter()
            .map(|r| (r.key, r.entry))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{Vector, EMBEDDING_DIM};
    use Category::*;

    fn item(id: &str, category: Category) -> Item {
        Item {
            id: id.into(),
            name: String::new(),
            category,
            color: "black".into(),
            material: String::new(),
            style_tags: vec!["classic".into()],
            occasion_tags: Default::default(),
            embedding: Vector::basis(EMBEDDING_DIM, 0),
            image_embedding: None,
            text_embedding: None,
            material_weight: None,
        }
    }

    fn entry(cat: Category) -> CacheEntry {
        CacheEntry {
            anchor_category: cat,
            output: GenerationOutput {
                anchor_id: "x".into(),
                occasion: "casual".into(),
                seed: 0,
                intent_anchor_cosine: 1.0,
                directions: vec![],
            },
            generated_at: 0,
        }
    }

    #[test]
    fn table_rows() {
        let m = InvalidationMap::default();
        assert_eq!(m.rows().len(), 6);
        assert_eq!(m.anchors_to_invalidate(Top), &BTreeSet::from([Bottom, Shoes, Dress]));
        assert_eq!(m.anchors_to_invalidate(Dress), &BTreeSet::from([Shoes]));
        assert_eq!(
            m.anchors_to_invalidate(Accessory),
            &BTreeSet::from([Top, Bottom, Shoes, Dress, Layer])
        );
        assert!(m.anchors_for_name("hat").is_err());
    }

    #[test]
    fn covered_anchor_categories() {
        let m = InvalidationMap::default();
        let covered: Vec<Category> = Category::ALL.into_iter().filter(|&c| m.covers_anchor(c)).collect();
        assert_eq!(covered, vec![Top, Bottom, Shoes, Dress]);
    }

    #[test]
    fn empty_cache_evicts_nothing() {
        let mut cache = OutfitCache::new();
        assert!(invalidate_on_add(&mut cache, &InvalidationMap::default(), &item("n", Top)).is_empty());
    }

    #[test]
    fn new_bottom_evicts_shoes_anchor() {
        let mut cache = OutfitCache::new();
        cache.insert(CacheKey::new("s1", "casual"), entry(Shoes));
        cache.insert(CacheKey::new("d1", "casual"), entry(Dress));
        let evicted = invalidate_on_add(&mut cache, &InvalidationMap::default(), &item("n", Bottom));
        assert_eq!(evicted, vec![CacheKey::new("s1", "casual")]);
        assert_eq!(cache.len(), 1);
    }

    #[test]
    fn unrelated_category_evicts_nothing() {
        let mut cache = OutfitCache::new();
        cache.insert(CacheKey::new("t1", "work"), entry(Top));
        assert!(invalidate_on_add(&mut cache, &InvalidationMap::default(), &item("n", Dress)).is_empty());
    }

    #[test]
    fn serde_round_trip() {
        let mut cache = OutfitCache::new();
        cache.insert(CacheKey::new("t1", "work"), entry(Top));
        let json = serde_json::to_string(&cache).unwrap();
        assert_eq!(serde_json::from_str::<OutfitCache>(&json).unwrap(), cache);
    }
}
