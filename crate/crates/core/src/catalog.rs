//! Item model and JSON Lines catalog ingestion.
//!
//! A catalog file holds one JSON object per line. Each record carries the
//! item attributes and either a ready `embedding`, an `image_embedding` +
//! `text_embedding` pair to blend, or neither (in which case a text provider
//! embeds the attribute description). See `schemas/catalog_item.schema.json`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::embedding::{
    blend_embedding, build_item_description, BlendWeights, EmbeddingProvider, Vector,
    EMBEDDING_DIM,
};
use crate::{Error, Result};

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Top,
    Bottom,
    Shoes,
    Dress,
    Layer,
    Accessory,
}

impl Category {
    pub const ALL: [Category; 6] = [
        Category::Top,
        Category::Bottom,
        Category::Shoes,
        Category::Dress,
        Category::Layer,
        Category::Accessory,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Top => "top",
            Category::Bottom => "bottom",
            Category::Shoes => "shoes",
            Category::Dress => "dress",
            Category::Layer => "layer",
            Category::Accessory => "accessory",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        Category::ALL
            .into_iter()
            .find(|c| c.as_str() == lower)
            .ok_or(Error::UnknownCategory(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Item {
    pub id: String,
    #[serde(default)]
    pub name: String,
    pub category: Category,
    #[serde(default)]
    pub color: String,
    #[serde(default)]
    pub material: String,
    pub style_tags: Vec<String>,
    #[serde(default)]
    pub occasion_tags: BTreeSet<String>,
    pub embedding: Vector,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_embedding: Option<Vector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text_embedding: Option<Vector>,
    /// Heaviness score, filled in once at engine build time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub material_weight: Option<f64>,
}

impl Item {
    pub fn validate(&self) -> Result<()> {
        if self.id.trim().is_empty() {
            return Err(Error::Validation("empty item id".into()));
        }
        if self.style_tags.is_empty() {
            return Err(Error::Validation(format!(
                "item {:?} has no style tags",
                self.id
            )));
        }
        for (field, v) in [
            ("embedding", Some(&self.embedding)),
            ("image_embedding", self.image_embedding.as_ref()),
            ("text_embedding", self.text_embedding.as_ref()),
        ] {
            let Some(v) = v else { continue };
            if v.len() != EMBEDDING_DIM {
                return Err(Error::Validation(format!(
                    "{field} of {:?} has {} components, expected {EMBEDDING_DIM}",
                    self.id,
                    v.len()
                )));
            }
            if !v.is_finite() || !v.is_unit() {
                return Err(Error::Validation(format!(
                    "{field} of {:?} is not a finite unit vector",
                    self.id
                )));
            }
        }
        Ok(())
    }

    /// Lowercased words from the name, tags and material.
    pub fn keyword_tokens(&self) -> impl Iterator<Item = String> + '_ {
        self.name
            .split_whitespace()
            .chain(self.style_tags.iter().flat_map(|t| t.split_whitespace()))
            .chain(self.material.split_whitespace())
            .map(str::to_lowercase)
    }
}

fn field<'a>(map: &'a Map<String, Value>, name: &str) -> Option<&'a Value> {
    map.get(name).filter(|v| !v.is_null())
}

fn required_str(map: &Map<String, Value>, name: &str) -> Result<String> {
    match field(map, name) {
        Some(Value::String(s)) => Ok(s.clone()),
        Some(_) => Err(Error::parse(name, "expected a string")),
        None => Err(Error::parse(name, "missing")),
    }
}

fn optional_str(map: &Map<String, Value>, name: &str) -> Result<String> {
    match field(map, name) {
        Some(Value::String(s)) => Ok(s.clone()),
        Some(_) => Err(Error::parse(name, "expected a string")),
        None => Ok(String::new()),
    }
}

fn string_list(map: &Map<String, Value>, name: &str) -> Result<Vec<String>> {
    match field(map, name) {
        Some(Value::Array(values)) => values
            .iter()
            .map(|v| {
                v.as_str()
                    .map(|s| s.trim().to_lowercase())
                    .ok_or_else(|| Error::parse(name, "expected an array of strings"))
            })
            .collect(),
        Some(_) => Err(Error::parse(name, "expected an array of strings")),
        None => Ok(Vec::new()),
    }
}

fn vector(map: &Map<String, Value>, name: &str) -> Result<Option<Vector>> {
    let Some(value) = field(map, name) else {
        return Ok(None);
    };
    let Value::Array(values) = value else {
        return Err(Error::parse(name, "expected an array of numbers"));
    };
    let components = values
        .iter()
        .map(|v| {
            v.as_f64()
                .ok_or_else(|| Error::parse(name, "expected an array of numbers"))
        })
        .collect::<Result<Vec<f64>>>()?;
    if components.len() != EMBEDDING_DIM {
        return Err(Error::parse(
            name,
            format!("expected {EMBEDDING_DIM} components, got {}", components.len()),
        ));
    }
    let v = Vector::new(components);
    if !v.is_finite() {
        return Err(Error::parse(name, "non-finite component"));
    }
    Ok(Some(v))
}

/// Accepts vectors already within tolerance of unit norm as-is so that
/// re-serialized catalogs load bit-identically.
fn to_unit(v: Vector, name: &str) -> Result<Vector> {
    if v.is_unit() {
        return Ok(v);
    }
    v.normalized()
        .map_err(|_| Error::Validation(format!("{name} is a zero vector")))
}

fn ascii_lower(s: &str) -> String {
    s.trim().to_ascii_lowercase()
}

/// Parses and validates one catalog record.
///
/// Embedding resolution, in order: an explicit `embedding`; the default blend
/// of `image_embedding` and `text_embedding`; the blend of `image_embedding`
/// with a provider embedding of the description; `text_embedding` alone; a
/// provider embedding of the description.
pub fn parse_catalog_line(line: &str, provider: Option<&dyn EmbeddingProvider>) -> Result<Item> {
    let value: Value =
        serde_json::from_str(line).map_err(|e| Error::parse("record", e.to_string()))?;
    let Value::Object(map) = value else {
        return Err(Error::parse("record", "expected a JSON object"));
    };

    let id = required_str(&map, "id")?.trim().to_string();
    if id.is_empty() {
        return Err(Error::parse("id", "empty"));
    }
    let category: Category = required_str(&map, "category")?.parse()?;
    let style_tags: Vec<String> = string_list(&map, "style_tags")?
        .into_iter()
        .filter(|t| !t.is_empty())
        .collect();
    if style_tags.is_empty() {
        return Err(Error::Validation(format!("item {id:?} has no style tags")));
    }
    let occasion_tags: BTreeSet<String> = string_list(&map, "occasion_tags")?
        .into_iter()
        .filter(|t| !t.is_empty())
        .collect();
    let material_weight = match field(&map, "material_weight") {
        Some(v) => Some(
            v.as_f64()
                .ok_or_else(|| Error::parse("material_weight", "expected a number"))?,
        ),
        None => None,
    };

    let mut item = Item {
        id,
        name: optional_str(&map, "name")?,
        category,
        color: ascii_lower(&optional_str(&map, "color")?),
        material: ascii_lower(&optional_str(&map, "material")?),
        style_tags,
        occasion_tags,
        embedding: Vector::zeros(0),
        image_embedding: vector(&map, "image_embedding")?
            .map(|v| to_unit(v, "image_embedding"))
            .transpose()?,
        text_embedding: vector(&map, "text_embedding")?
            .map(|v| to_unit(v, "text_embedding"))
            .transpose()?,
        material_weight,
    };

    let embedding = vector(&map, "embedding")?
        .map(|v| to_unit(v, "embedding"))
        .transpose()?;
    item.embedding = match (embedding, &item.image_embedding, &item.text_embedding) {
        (Some(e), _, _) => e,
        (None, Some(img), Some(txt)) => blend_embedding(img, txt, BlendWeights::default())
            .map_err(|_| Error::Validation("blended embedding is a zero vector".into()))?,
        (None, img, txt) => {
            let text = match (txt, provider) {
                (Some(t), _) => t.clone(),
                (None, Some(p)) => {
                    let t = p.embed_text(&build_item_description(&item))?;
                    t.check_dim(EMBEDDING_DIM)?;
                    item.text_embedding = Some(t.clone());
                    t
                }
                (None, None) => {
                    return Err(Error::parse(
                        "embedding",
                        "missing, and no text provider supplied",
                    ))
                }
            };
            match img {
                Some(img) => blend_embedding(img, &text, BlendWeights::default()).map_err(
                    |_| Error::Validation("blended embedding is a zero vector".into()),
                )?,
                None => text,
            }
        }
    };
    item.validate()?;
    Ok(item)
}

/// Items in insertion order, partitioned by category.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Catalog {
    items: Vec<Item>,
    positions: HashMap<String, usize>,
    by_category: BTreeMap<Category, Vec<usize>>,
}

impl Catalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_items(items: impl IntoIterator<Item = Item>) -> Result<Self> {
        let mut catalog = Self::new();
        for item in items {
            catalog.insert(item)?;
        }
        Ok(catalog)
    }

    pub fn insert(&mut self, item: Item) -> Result<()> {
        item.validate()?;
        if self.positions.contains_key(&item.id) {
            return Err(Error::DuplicateId(item.id));
        }
        let pos = self.items.len();
        self.positions.insert(item.id.clone(), pos);
        self.by_category.entry(item.category).or_default().push(pos);
        self.items.push(item);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Item> {
        self.positions.get(id).map(|&p| &self.items[p])
    }

    pub fn contains(&self, id: &str) -> bool {
        self.positions.contains_key(id)
    }

    pub fn items(&self) -> &[Item] {
        &self.items
    }

    /// Items of one category in insertion order.
    pub fn by_category(&self, category: Category) -> impl Iterator<Item = &Item> + '_ {
        self.by_category
            .get(&category)
            .into_iter()
            .flatten()
            .map(|&p| &self.items[p])
    }

    pub fn ids_in(&self, category: Category) -> Vec<&str> {
        self.by_category(category).map(|i| i.id.as_str()).collect()
    }

    /// Applies `f` to every item, keeping ids and categories fixed.
    pub fn map_items(&self, mut f: impl FnMut(&Item) -> Result<Item>) -> Result<Catalog> {
        let mut out = Catalog::new();
        for item in &self.items {
            let mapped = f(item)?;
            if mapped.id != item.id || mapped.category != item.category {
                return Err(Error::Validation(
                    "item mapping must preserve id and category".into(),
                ));
            }
            out.insert(mapped)?;
        }
        Ok(out)
    }

    pub fn write_jsonl(&self, mut out: impl Write) -> Result<()> {
        for item in &self.items {
            serde_json::to_writer(&mut out, item)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }
}

/// Parses a whole JSON Lines document. Blank lines are skipped; the first
/// failing line aborts with its 1-based line number.
pub fn parse_catalog(text: &str, provider: Option<&dyn EmbeddingProvider>) -> Result<Catalog> {
    let mut catalog = Catalog::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let item = parse_catalog_line(line, provider).map_err(|e| e.at_line(n + 1))?;
        catalog.insert(item).map_err(|e| e.at_line(n + 1))?;
    }
    Ok(catalog)
}

pub fn load_catalog(path: &Path, provider: &dyn EmbeddingProvider) -> Result<Catalog> {
    let text = std::fs::read_to_string(path)?;
    parse_catalog(&text, Some(provider))
}

/// Per-category item counts, including zero rows for absent categories.
pub fn category_counts(catalog: &Catalog) -> BTreeMap<Category, usize> {
    Category::ALL
        .into_iter()
        .map(|c| (c, catalog.by_category(c).count()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::SyntheticProvider;

    fn unit_json(axis: usize) -> String {
        let v: Vec<String> = (0..EMBEDDING_DIM)
            .map(|i| if i == axis { "1.0".into() } else { "0.0".into() })
            .collect();
        format!("[{}]", v.join(","))
    }

    fn record(id: &str, category: &str, extra: &str) -> String {
        format!(
            r#"{{"id":"{id}","name":"n","category":"{category}","color":"Gray","material":"Wool","style_tags":["Classic"],"occasion_tags":["work"]{extra}}}"#
        )
    }

    #[test]
    fn unit_embedding_is_accepted() {
        let line = record("a1", "top", &format!(r#","embedding":{}"#, unit_json(3)));
        let item = parse_catalog_line(&line, None).unwrap();
        assert_eq!(item.category, Category::Top);
        assert_eq!(item.color, "gray");
        assert_eq!(item.material, "wool");
        assert_eq!(item.style_tags, vec!["classic"]);
        assert_eq!(item.embedding, Vector::basis(EMBEDDING_DIM, 3));
    }

    #[test]
    fn unknown_category_is_rejected() {
        let line = record("a1", "hat", &format!(r#","embedding":{}"#, unit_json(0)));
        let err = parse_catalog_line(&line, None).unwrap_err();
        assert!(matches!(err, Error::UnknownCategory(ref c) if c == "hat"));
        assert!(err.to_string().contains("unknown category"));
    }

    #[test]
    fn zero_embedding_is_rejected() {
        let zeros = format!("[{}]", vec!["0"; EMBEDDING_DIM].join(","));
        let line = record("a1", "top", &format!(r#","embedding":{zeros}"#));
        assert!(matches!(
            parse_catalog_line(&line, None),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn non_unit_embedding_is_normalized() {
        let mut v = vec!["0".to_string(); EMBEDDING_DIM];
        v[0] = "3".into();
        v[1] = "4".into();
        let line = record("a1", "top", &format!(r#","embedding":[{}]"#, v.join(",")));
        let item = parse_catalog_line(&line, None).unwrap();
        assert!((item.embedding.as_slice()[0] - 0.6).abs() < 1e-12);
        assert!((item.embedding.as_slice()[1] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn malformed_field_is_named() {
        let line = r#"{"id":"a1","category":"top","style_tags":"classic"}"#;
        match parse_catalog_line(line, None) {
            Err(Error::Parse { field, .. }) => assert_eq!(field, "style_tags"),
            other => panic!("unexpected {other:?}"),
        }
        let line = r#"{"category":"top","style_tags":["x"]}"#;
        match parse_catalog_line(line, None) {
            Err(Error::Parse { field, .. }) => assert_eq!(field, "id"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn wrong_dimension_is_a_parse_error() {
        let line = record("a1", "top", r#","embedding":[1.0,0.0]"#);
        assert!(matches!(
            parse_catalog_line(&line, None),
            Err(Error::Parse { ref field, .. }) if field == "embedding"
        ));
    }

    #[test]
    fn attributes_only_needs_a_provider() {
        let line = record("a1", "top", "");
        assert!(parse_catalog_line(&line, None).is_err());
        let p = SyntheticProvider::new(1);
        let item = parse_catalog_line(&line, Some(&p)).unwrap();
        assert_eq!(
            item.embedding,
            p.embed_text("gray classic wool top").unwrap()
        );
    }

    #[test]
    fn empty_document_is_empty_catalog() {
        let c = parse_catalog("", None).unwrap();
        assert!(c.is_empty());
        assert!(category_counts(&c).values().all(|&n| n == 0));
        assert_eq!(category_counts(&c).len(), 6);
    }

    #[test]
    fn duplicate_id_reports_line() {
        let a = record("x1", "top", &format!(r#","embedding":{}"#, unit_json(0)));
        let b = record("x1", "shoes", &format!(r#","embedding":{}"#, unit_json(1)));
        let err = parse_catalog(&format!("{a}\n\n{b}\n"), None).unwrap_err();
        match err {
            Error::AtLine { line, source } => {
                assert_eq!(line, 3);
                assert!(matches!(*source, Error::DuplicateId(ref id) if id == "x1"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn single_top_counts() {
        let a = record("t", "top", &format!(r#","embedding":{}"#, unit_json(0)));
        let c = parse_catalog(&a, None).unwrap();
        let counts = category_counts(&c);
        assert_eq!(counts[&Category::Top], 1);
        assert_eq!(counts.values().sum::<usize>(), 1);
    }

    #[test]
    fn insertion_order_is_preserved_per_category() {
        let lines: Vec<String> = ["b", "a", "c"]
            .iter()
            .enumerate()
            .map(|(i, id)| record(id, "bottom", &format!(r#","embedding":{}"#, unit_json(i))))
            .collect();
        let c = parse_catalog(&lines.join("\n"), None).unwrap();
        assert_eq!(c.ids_in(Category::Bottom), vec!["b", "a", "c"]);
    }

    #[test]
    fn category_parsing_is_case_insensitive() {
        assert_eq!("Shoes".parse::<Category>().unwrap(), Category::Shoes);
        assert!("hat".parse::<Category>().is_err());
    }
}
