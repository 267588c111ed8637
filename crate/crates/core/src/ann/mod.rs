//! Category-partitioned cosine nearest-neighbor search.
//!
//! Each category gets its own HNSW graph, so a category-filtered query always
//! walks a graph that contains only admissible items and can return `limit`
//! results whenever that many exist. Excluded ids are still traversed (they
//! keep the graph navigable) but are never emitted; the beam is widened by the
//! number of excluded ids present in the partition so that exclusions do not
//! cost recall.

mod hnsw;
mod persist;

use std::collections::{BTreeMap, HashSet};
use std::sync::atomic::{AtomicU64, Ordering};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::catalog::{Catalog, Category};
use crate::embedding::{cosine, mix64, Vector, EMBEDDING_DIM};
use crate::{Error, Result};

use hnsw::Graph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexParams {
    pub m: usize,
    pub ef_construction: usize,
    pub ef_search: usize,
    /// Seed of the level-assignment generator.
    pub seed: u64,
}

impl Default for IndexParams {
    fn default() -> Self {
        Self {
            m: 16,
            ef_construction: 64,
            ef_search: 64,
            seed: 0x5EED,
        }
    }
}

impl IndexParams {
    pub fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(Error::Config("index m must be >= 2".into()));
        }
        if self.ef_construction < self.m {
            return Err(Error::Config("ef_construction must be >= m".into()));
        }
        if self.ef_search < 1 {
            return Err(Error::Config("ef_search must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SearchRequest {
    pub query: Vector,
    pub category: Category,
    pub exclusions: HashSet<String>,
    pub limit: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredId {
    pub id: String,
    /// Cosine distance, `1 - cos`.
    pub distance: f64,
}

fn sort_scored(results: &mut [ScoredId]) {
    results.sort_by(|a, b| a.distance.total_cmp(&b.distance).then_with(|| a.id.cmp(&b.id)));
}

fn unit_query(query: &Vector) -> Vector {
    if query.is_unit() {
        query.clone()
    } else {
        query.normalized().unwrap_or_else(|_| query.clone())
    }
}

#[derive(Debug)]
pub struct AnnIndex {
    params: IndexParams,
    dim: usize,
    graphs: BTreeMap<Category, Graph>,
    searches: AtomicU64,
}

impl Clone for AnnIndex {
    fn clone(&self) -> Self {
        Self {
            params: self.params,
            dim: self.dim,
            graphs: self.graphs.clone(),
            searches: AtomicU64::new(0),
        }
    }
}

impl PartialEq for AnnIndex {
    fn eq(&self, other: &Self) -> bool {
        self.params == other.params && self.dim == other.dim && self.graphs == other.graphs
    }
}

fn level_rng(seed: u64, category: Category) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix64(seed ^ (category.index() as u64 + 1)))
}

fn build_graph(catalog: &Catalog, category: Category, params: &IndexParams) -> Graph {
    let mut graph = Graph::new(EMBEDDING_DIM);
    let mut rng = level_rng(params.seed, category);
    for item in catalog.by_category(category) {
        graph.insert(
            item.id.clone(),
            &item.embedding,
            params.m,
            params.ef_construction,
            &mut rng,
        );
    }
    graph
}

/// Inserts every catalog item, partition by partition, in catalog order.
pub fn build_index(catalog: &Catalog, params: IndexParams) -> Result<AnnIndex> {
    params.validate()?;
    let graphs = Category::ALL
        .into_iter()
        .map(|c| (c, build_graph(catalog, c, &params)))
        .filter(|(_, g)| g.len() > 0)
        .collect();
    Ok(AnnIndex {
        params,
        dim: EMBEDDING_DIM,
        graphs,
        searches: AtomicU64::new(0),
    })
}

impl AnnIndex {
    pub fn params(&self) -> &IndexParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.graphs.values().map(Graph::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of `search` calls served since construction.
    pub fn search_count(&self) -> u64 {
        self.searches.load(Ordering::Relaxed)
    }

    /// A copy with a different search beam width.
    pub fn with_ef_search(&self, ef_search: usize) -> AnnIndex {
        let mut out = self.clone();
        out.params.ef_search = ef_search.max(1);
        out
    }

    /// Rebuilds only the partitions of `categories` from `catalog`. Partitions
    /// are built from independent generator streams, so the result equals a
    /// full rebuild.
    pub fn rebuild_categories(&self, catalog: &Catalog, categories: &[Category]) -> AnnIndex {
        let mut out = self.clone();
        for &c in categories {
            let g = build_graph(catalog, c, &self.params);
            if g.len() > 0 {
                out.graphs.insert(c, g);
            } else {
                out.graphs.remove(&c);
            }
        }
        out
    }

    /// Neighbor lists of one partition, `[node][layer]`, for inspection.
    pub fn adjacency(&self, category: Category) -> Vec<Vec<Vec<u32>>> {
        self.graphs
            .get(&category)
            .map(|g| g.links.clone())
            .unwrap_or_default()
    }

    pub fn search(&self, req: &SearchRequest) -> Vec<ScoredId> {
        self.searches.fetch_add(1, Ordering::Relaxed);
        let Some(graph) = self.graphs.get(&req.category) else {
            return Vec::new();
        };
        if req.limit == 0 {
            return Vec::new();
        }
        let excluded_here = req
            .exclusions
            .iter()
            .filter(|id| graph.positions.contains_key(id.as_str()))
            .count();
        let ef = self.params.ef_search.max(req.limit) + excluded_here;
        let query = unit_query(&req.query);
        let mut results: Vec<ScoredId> = graph
            .search(query.as_slice(), ef)
            .into_iter()
            .map(|n| ScoredId {
                id: graph.ids[n.node as usize].clone(),
                distance: n.distance,
            })
            .filter(|s| !req.exclusions.contains(&s.id))
            .collect();
        sort_scored(&mut results);
        results.truncate(req.limit);
        results
    }
}

/// Exact linear scan with the same contract as [`AnnIndex::search`].
pub fn brute_force_search(catalog: &Catalog, req: &SearchRequest) -> Vec<ScoredId> {
    let mut results: Vec<ScoredId> = catalog
        .by_category(req.category)
        .filter(|item| !req.exclusions.contains(&item.id))
        .filter_map(|item| {
            cosine(&req.query, &item.embedding).ok().map(|c| ScoredId {
                id: item.id.clone(),
                distance: 1.0 - c,
            })
        })
        .collect();
    sort_scored(&mut results);
    results.truncate(req.limit);
    results
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::Item;
    use rand::Rng;

    pub(crate) fn random_unit(rng: &mut ChaCha8Rng) -> Vector {
        let v: Vec<f64> = (0..EMBEDDING_DIM).map(|_| rng.gen::<f64>() - 0.5).collect();
        Vector::new(v).normalized().unwrap()
    }

    fn item(id: &str, category: Category, embedding: Vector) -> Item {
        Item {
            id: id.into(),
            name: String::new(),
            category,
            color: "black".into(),
            material: "cotton".into(),
            style_tags: vec!["casual".into()],
            occasion_tags: Default::default(),
            embedding,
            image_embedding: None,
            text_embedding: None,
            material_weight: None,
        }
    }

    fn random_catalog(n: usize, seed: u64) -> Catalog {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Catalog::from_items((0..n).map(|i| {
            let cat = Category::ALL[i % 3];
            item(&format!("i{i:04}"), cat, random_unit(&mut rng))
        }))
        .unwrap()
    }

    fn request(query: Vector, category: Category, limit: usize) -> SearchRequest {
        SearchRequest {
            query,
            category,
            exclusions: HashSet::new(),
            limit,
        }
    }

    #[test]
    fn single_item_is_found() {
        let e = Vector::basis(EMBEDDING_DIM, 0);
        let c = Catalog::from_items([item("only", Category::Top, e.clone())]).unwrap();
        let idx = build_index(&c, IndexParams::default()).unwrap();
        let r = idx.search(&request(e, Category::Top, 5));
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].id, "only");
        assert!(r[0].distance.abs() < 1e-12);
    }

    #[test]
    fn empty_catalog_yields_empty_results() {
        let idx = build_index(&Catalog::new(), IndexParams::default()).unwrap();
        let q = Vector::basis(EMBEDDING_DIM, 0);
        assert!(idx.search(&request(q.clone(), Category::Top, 3)).is_empty());
        assert!(brute_force_search(&Catalog::new(), &request(q, Category::Top, 3)).is_empty());
    }

    #[test]
    fn excluding_whole_category_yields_nothing() {
        let c = random_catalog(30, 1);
        let idx = build_index(&c, IndexParams::default()).unwrap();
        let mut req = request(c.items()[0].embedding.clone(), Category::Top, 10);
        req.exclusions = c.ids_in(Category::Top).into_iter().map(String::from).collect();
        assert!(idx.search(&req).is_empty());
    }

    #[test]
    fn exact_query_comes_first() {
        let c = random_catalog(60, 2);
        let idx = build_index(&c, IndexParams::default()).unwrap();
        let target = c.by_category(Category::Shoes).nth(4).unwrap();
        let r = idx.search(&request(target.embedding.clone(), Category::Shoes, 1));
        assert_eq!(r[0].id, target.id);
        assert!(r[0].distance.abs() < 1e-9);
    }

    #[test]
    fn orthonormal_query_is_distance_one() {
        let c = Catalog::from_items([item("a", Category::Top, Vector::basis(EMBEDDING_DIM, 0))])
            .unwrap();
        let r = brute_force_search(&c, &request(Vector::basis(EMBEDDING_DIM, 1), Category::Top, 1));
        assert!((r[0].distance - 1.0).abs() < 1e-12);
    }

    #[test]
    fn results_respect_filters_and_order() {
        let c = random_catalog(90, 3);
        let idx = build_index(&c, IndexParams::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut req = request(random_unit(&mut rng), Category::Bottom, 12);
        req.exclusions = c.ids_in(Category::Bottom).into_iter().step_by(3).map(String::from).collect();
        let r = idx.search(&req);
        assert_eq!(r.len(), 12);
        for w in r.windows(2) {
            assert!(w[0].distance <= w[1].distance);
        }
        for s in &r {
            assert_eq!(c.get(&s.id).unwrap().category, Category::Bottom);
            assert!(!req.exclusions.contains(&s.id));
        }
    }

    #[test]
    fn rebuild_is_deterministic() {
        let c = random_catalog(120, 4);
        let a = build_index(&c, IndexParams::default()).unwrap();
        let b = build_index(&c, IndexParams::default()).unwrap();
        for cat in Category::ALL {
            assert_eq!(a.adjacency(cat), b.adjacency(cat));
        }
        assert_eq!(a, b);
    }

    #[test]
    fn partial_rebuild_equals_full_rebuild() {
        let c = random_catalog(60, 5);
        let idx = build_index(&c, IndexParams::default()).unwrap();
        let mut items: Vec<Item> = c.items().to_vec();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        items.push(item("new", Category::Top, random_unit(&mut rng)));
        let c2 = Catalog::from_items(items).unwrap();
        let partial = idx.rebuild_categories(&c2, &[Category::Top]);
        let full = build_index(&c2, IndexParams::default()).unwrap();
        assert_eq!(partial, full);
    }

    #[test]
    fn search_counter_counts() {
        let c = random_catalog(9, 6);
        let idx = build_index(&c, IndexParams::default()).unwrap();
        assert_eq!(idx.search_count(), 0);
        idx.search(&request(c.items()[0].embedding.clone(), Category::Top, 1));
        assert_eq!(idx.search_count(), 1);
    }

    #[test]
    fn invalid_params_are_rejected() {
        let p = IndexParams { m: 1, ..IndexParams::default() };
        assert!(p.validate().is_err());
        let p = IndexParams { ef_construction: 4, ..IndexParams::default() };
        assert!(p.validate().is_err());
    }
}
