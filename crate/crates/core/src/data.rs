//! Bundled data files.
//!
//! The selector registry, knowledge base, templates and study corpus ship
//! inside the binary. Setting `SIGSEM_DATA_DIR` makes [`DataSet::from_env`]
//! read them from that directory instead.

use std::path::Path;
use std::sync::OnceLock;

use crate::abi::SelectorRegistry;
use crate::explain::TemplateSet;
use crate::kb::KnowledgeBase;

pub const SELECTORS_JSON: &str = include_str!("../data/selectors.json");
pub const KB_JSON: &str = include_str!("../data/kb.json");
pub const TEMPLATES_JSON: &str = include_str!("../data/templates.json");
pub const CORPUS_JSON: &str = include_str!("../data/corpus.json");

pub const DATA_DIR_ENV: &str = "SIGSEM_DATA_DIR";

/// Raw text of the four data files.
#[derive(Debug, Clone)]
pub struct DataSet {
    pub selectors: String,
    pub kb: String,
    pub templates: String,
    pub corpus: String,
}

impl DataSet {
    pub fn bundled() -> Self {
        DataSet {
            selectors: SELECTORS_JSON.into(),
            kb: KB_JSON.into(),
            templates: TEMPLATES_JSON.into(),
            corpus: CORPUS_JSON.into(),
        }
    }

    /// Reads whichever of the files exist in `dir`, falling back to the
    /// bundled copy for the rest.
    pub fn from_dir(dir: &Path) -> std::io::Result<Self> {
        let read = |name: &str, fallback: &str| -> std::io::Result<String> {
            let path = dir.join(name);
            if path.exists() {
                std::fs::read_to_string(path)
            } else {
                Ok(fallback.to_string())
            }
        };
        Ok(DataSet {
            selectors: read("selectors.json", SELECTORS_JSON)?,
            kb: read("kb.json", KB_JSON)?,
            templates: read("templates.json", TEMPLATES_JSON)?,
            corpus: read("corpus.json", CORPUS_JSON)?,
        })
    }

    pub fn from_env() -> std::io::Result<Self> {
        match std::env::var_os(DATA_DIR_ENV) {
            Some(dir) => DataSet::from_dir(Path::new(&dir)),
            None => Ok(DataSet::bundled()),
        }
    }
}

pub fn selectors() -> &'static SelectorRegistry {
    static CELL: OnceLock<SelectorRegistry> = OnceLock::new();
    CELL.get_or_init(|| SelectorRegistry::from_json(SELECTORS_JSON).expect("bundled selectors.json is valid"))
}

pub fn knowledge_base() -> &'static KnowledgeBase {
    static CELL: OnceLock<KnowledgeBase> = OnceLock::new();
    CELL.get_or_init(|| KnowledgeBase::from_json(KB_JSON, selectors()).expect("bundled kb.json is valid"))
}

pub fn templates() -> &'static TemplateSet {
    static CELL: OnceLock<TemplateSet> = OnceLock::new();
    CELL.get_or_init(|| TemplateSet::from_json(TEMPLATES_JSON).expect("bundled templates.json is valid"))
}
