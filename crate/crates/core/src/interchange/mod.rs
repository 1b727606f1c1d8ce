//! Concept catalogs, mask and activation stores, and the bundle format the
//! exporter writes.

mod bundle;
mod catalog;
pub mod rle;
mod store;

pub use bundle::{
    decode_acts, decode_masks, encode_acts, encode_masks, load_bundle, read_acts, write_acts,
    write_bundle, Bundle, LoadOptions, ACTS_FILE, ACTS_MAGIC, CATALOG_FILE, MASKS_FILE,
    MASKS_MAGIC, VERIFY_ENV,
};
pub use catalog::{Category, ConceptCatalog, ConceptEntry};
pub use store::{ActivationStore, LayerKind, MaskMeta, SampleMaskStore};
