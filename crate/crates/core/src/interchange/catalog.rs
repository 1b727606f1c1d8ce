use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maskops::ConceptId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Color,
    Object,
    Part,
    Scene,
    Material,
    Texture,
    Other,
}

impl Category {
    pub const ALL: [Category; 7] = [
        Category::Color,
        Category::Object,
        Category::Part,
        Category::Scene,
        Category::Material,
        Category::Texture,
        Category::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Color => "color",
            Category::Object => "object",
            Category::Part => "part",
            Category::Scene => "scene",
            Category::Material => "material",
            Category::Texture => "texture",
            Category::Other => "other",
        }
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
        Category::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::Format(format!("unknown concept category {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptEntry {
    pub id: ConceptId,
    pub name: String,
    pub category: Category,
}

/// The concept vocabulary. Ids are contiguous from 1 and names are unique.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConceptCatalog {
    entries: Vec<ConceptEntry>,
}

impl ConceptCatalog {
    pub fn new(entries: Vec<ConceptEntry>) -> Result<Self> {
        let cat = ConceptCatalog { entries };
        cat.validate()?;
        Ok(cat)
    }

    /// Builds a catalog from `(name, category)` pairs, assigning ids 1..=n.
    pub fn from_names<S: Into<String>>(items: impl IntoIterator<Item = (S, Category)>) -> Result<Self> {
        let entries = items
            .into_iter()
            .enumerate()
            .map(|(i, (name, category))| ConceptEntry {
                id: ConceptId::from_index(i),
                name: name.into(),
                category,
            })
            .collect();
        Self::new(entries)
    }

    pub fn validate(&self) -> Result<()> {
        let mut names = HashSet::new();
        for (i, e) in self.entries.iter().enumerate() {
            if e.id != ConceptId::from_index(i) {
                return Err(Error::Format(format!(
                    "concept ids must be contiguous from 1: position {} has id {}",
                    i + 1,
                    e.id.0
                )));
            }
            if e.name.is_empty() || e.name.contains(['\t', '\n', '\r']) {
                return Err(Error::Format(format!("invalid concept name {:?}", e.name)));
            }
            if !names.insert(e.name.as_str()) {
                return Err(Error::Format(format!("duplicate concept name {:?}", e.name)));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[ConceptEntry] {
        &self.entries
    }

    pub fn get(&self, id: ConceptId) -> Option<&ConceptEntry> {
        if id.0 == 0 {
            return None;
        }
        self.entries.get(id.index())
    }

    pub fn name(&self, id: ConceptId) -> &str {
        self.get(id).map_or("?", |e| e.name.as_str())
    }

    pub fn category(&self, id: ConceptId) -> Option<Category> {
        self.get(id).map(|e| e.category)
    }

    pub fn find(&self, name: &str) -> Option<ConceptId> {
        self.entries.iter().find(|e| e.name == name).map(|e| e.id)
    }

    pub fn to_tsv(&self) -> String {
        let mut s = String::from("id\tname\tcategory\n");
        for e in &self.entries {
            s.push_str(&format!("{}\t{}\t{}\n", e.id.0, e.name, e.category));
        }
        s
    }

    /// Parses `catalog.tsv`. A leading `id\tname\tcategory` header and
    /// `#` comment lines are skipped.
    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(Error::Format(format!(
                    "catalog line {}: expected 3 tab-separated fields, got {}",
                    lineno + 1,
                    fields.len()
                )));
            }
            if entries.is_empty() && fields[0] == "id" {
                continue;
            }
            let id: u32 = fields[0].parse().map_err(|_| {
                Error::Format(format!("catalog line {}: bad id {:?}", lineno + 1, fields[0]))
            })?;
            entries.push(ConceptEntry {
                id: ConceptId(id),
                name: fields[1].to_string(),
                category: fields[2].parse()?,
            });
        }
        Self::new(entries)
    }
}
