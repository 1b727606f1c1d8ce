//! The on-disk bundle: a directory holding `catalog.tsv`, `masks.bin` and
//! `acts.bin`.
//!
//! Binary files start with an 8-byte ASCII magic followed by five
//! little-endian `u32` header fields: `n_samples`, `n_concepts` (or
//! `n_neurons`), `grid_h`, `grid_w`, `layer_kind` (0 = relu, 1 = signed;
//! always 0 in `masks.bin`).
//!
//! `masks.bin` payload, sample-major then concept order, one record each:
//! `u32 n_runs`, `n_runs × u32` run lengths, `u32 card`, `4 × i32` min_ext
//! `(r0, c0, r1, c1)`, `4 × i32` max_ext. Empty rectangles are written as
//! four `-1`s.
//!
//! `acts.bin` payload: `f32` values, neuron-major, then sample, then
//! row-major cells.

use std::fs;
use std::path::Path;

use super::{rle, ActivationStore, ConceptCatalog, LayerKind, MaskMeta, SampleMaskStore};
use crate::error::{Error, Result};
use crate::fsutil::write_atomic;
use crate::maskops::{ConceptId, Rect};

pub const MASKS_MAGIC: &[u8; 8] = b"NDXMASK1";
pub const ACTS_MAGIC: &[u8; 8] = b"NDXACTS1";
pub const CATALOG_FILE: &str = "catalog.tsv";
pub const MASKS_FILE: &str = "masks.bin";
pub const ACTS_FILE: &str = "acts.bin";
pub const VERIFY_ENV: &str = "DISSECTOR_VERIFY_META";

/// The three stores of a bundle, cross-checked for shape.
#[derive(Clone, Debug)]
pub struct Bundle {
    pub catalog: ConceptCatalog,
    pub masks: SampleMaskStore,
    pub acts: ActivationStore,
}

impl Bundle {
    pub fn new(catalog: ConceptCatalog, masks: SampleMaskStore, acts: ActivationStore) -> Result<Self> {
        catalog.validate()?;
        if catalog.len() != masks.n_concepts() {
            return Err(Error::Consistency(format!(
                "catalog lists {} concepts, masks hold {}",
                catalog.len(),
                masks.n_concepts()
            )));
        }
        acts.check_pairs_with(&masks)?;
        Ok(Bundle {
            catalog,
            masks,
            acts,
        })
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct LoadOptions {
    /// Recompute every inscribed rectangle and bounding box and compare.
    pub verify_meta: bool,
}

impl LoadOptions {
    /// Honors `DISSECTOR_VERIFY_META=1`.
    pub fn from_env() -> Self {
        LoadOptions {
            verify_meta: std::env::var(VERIFY_ENV).is_ok_and(|v| v == "1"),
        }
    }
}

pub fn load_bundle(dir: &Path, opts: LoadOptions) -> Result<Bundle> {
    let catalog_path = dir.join(CATALOG_FILE);
    let text = fs::read_to_string(&catalog_path).map_err(|e| Error::io(&catalog_path, e))?;
    let catalog = ConceptCatalog::from_tsv(&text)?;

    let masks_path = dir.join(MASKS_FILE);
    let bytes = fs::read(&masks_path).map_err(|e| Error::io(&masks_path, e))?;
    let masks = decode_masks(&bytes)?;
    if opts.verify_meta {
        masks.verify_meta()?;
    }

    let acts = read_acts(&dir.join(ACTS_FILE))?;
    Bundle::new(catalog, masks, acts)
}

pub fn write_bundle(
    catalog: &ConceptCatalog,
    masks: &SampleMaskStore,
    acts: &ActivationStore,
    dir: &Path,
) -> Result<()> {
    catalog.validate()?;
    if catalog.len() != masks.n_concepts() {
        return Err(Error::Consistency(format!(
            "catalog lists {} concepts, masks hold {}",
            catalog.len(),
            masks.n_concepts()
        )));
    }
    acts.check_pairs_with(masks)?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_atomic(&dir.join(CATALOG_FILE), catalog.to_tsv().as_bytes())?;
    write_atomic(&dir.join(MASKS_FILE), &encode_masks(masks))?;
    write_acts(acts, &dir.join(ACTS_FILE))
}

pub fn write_acts(acts: &ActivationStore, path: &Path) -> Result<()> {
    write_atomic(path, &encode_acts(acts))
}

pub fn read_acts(path: &Path) -> Result<ActivationStore> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_acts(&bytes)
}

struct Header {
    n_samples: usize,
    n_items: usize,
    grid_h: usize,
    grid_w: usize,
    flag: u32,
}

fn put_header(out: &mut Vec<u8>, magic: &[u8; 8], h: Header) {
    out.extend_from_slice(magic);
    for v in [h.n_samples as u32, h.n_items as u32, h.grid_h as u32, h.grid_w as u32, h.flag] {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

fn put_rect(out: &mut Vec<u8>, r: Rect) {
    let fields: [i32; 4] = if r.is_empty() {
        [-1; 4]
    } else {
        [r.r0 as i32, r.c0 as i32, r.r1 as i32, r.c1 as i32]
    };
    for v in fields {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn encode_masks(masks: &SampleMaskStore) -> Vec<u8> {
    let mut out = Vec::new();
    put_header(
        &mut out,
        MASKS_MAGIC,
        Header {
            n_samples: masks.n_samples(),
            n_items: masks.n_concepts(),
            grid_h: masks.grid_height(),
            grid_w: masks.grid_width(),
            flag: 0,
        },
    );
    for s in 0..masks.n_samples() {
        for c in masks.concept_ids() {
            let runs = rle::encode(masks.mask(s, c));
            out.extend_from_slice(&(runs.len() as u32).to_le_bytes());
            for r in runs {
                out.extend_from_slice(&r.to_le_bytes());
            }
            let meta = masks.meta(s, c);
            out.extend_from_slice(&meta.card.to_le_bytes());
            put_rect(&mut out, meta.min_ext);
            put_rect(&mut out, meta.max_ext);
        }
    }
    out
}

pub fn encode_acts(acts: &ActivationStore) -> Vec<u8> {
    let mut out = Vec::with_capacity(28 + acts.values().len() * 4);
    put_header(
        &mut out,
        ACTS_MAGIC,
        Header {
            n_samples: acts.n_samples(),
            n_items: acts.n_neurons(),
            grid_h: acts.grid_height(),
            grid_w: acts.grid_width(),
            flag: acts.layer_kind().flag(),
        },
    );
    for v in acts.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    what: &'static str,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::Corruption(format!(
                "{}: unexpected end of file at byte {}",
                self.what, self.pos
            )));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn i32(&mut self) -> Result<i32> {
        Ok(i32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn header(&mut self, magic: &[u8; 8]) -> Result<Header> {
        if self.bytes.len() < 8 || &self.bytes[..8] != magic {
            return Err(Error::Format(format!(
                "{}: bad magic, expected {:?}",
                self.what,
                String::from_utf8_lossy(magic)
            )));
        }
        self.pos = 8;
        let mut header = || -> Result<Header> {
            Ok(Header {
                n_samples: self.u32()? as usize,
                n_items: self.u32()? as usize,
                grid_h: self.u32()? as usize,
                grid_w: self.u32()? as usize,
                flag: self.u32()?,
            })
        };
        header().map_err(|_| Error::Format(format!("{}: truncated header", self.what)))
    }

    fn rect(&mut self, grid_h: usize, grid_w: usize) -> Result<Rect> {
        let f = [self.i32()?, self.i32()?, self.i32()?, self.i32()?];
        if f == [-1; 4] {
            return Ok(Rect::EMPTY);
        }
        let valid = f.iter().all(|&v| v >= 0)
            && f[0] <= f[2]
            && f[1] <= f[3]
            && (f[2] as usize) < grid_h
            && (f[3] as usize) < grid_w;
        if !valid {
            return Err(Error::Corruption(format!("{}: invalid rectangle {f:?}", self.what)));
        }
        Ok(Rect::new(f[0] as u32, f[1] as u32, f[2] as u32, f[3] as u32))
    }
}

pub fn decode_masks(bytes: &[u8]) -> Result<SampleMaskStore> {
    let mut cur = Cursor {
        bytes,
        pos: 0,
        what: MASKS_FILE,
    };
    let h = cur.header(MASKS_MAGIC)?;
    if h.flag != 0 {
        return Err(Error::Format(format!("{MASKS_FILE}: layer flag must be 0, got {}", h.flag)));
    }
    let cells = h.grid_h * h.grid_w;
    let mut store = SampleMaskStore::new(h.grid_h, h.grid_w, h.n_items);
    for s in 0..h.n_samples {
        let mut masks = Vec::with_capacity(h.n_items);
        let mut metas = Vec::with_capacity(h.n_items);
        for c in 0..h.n_items {
            let n_runs = cur.u32()? as usize;
            if n_runs == 0 || n_runs > cells + 1 || n_runs * 4 > cur.remaining() {
                return Err(Error::Corruption(format!(
                    "{MASKS_FILE}: sample {s}, concept {}: implausible run count {n_runs}",
                    c + 1
                )));
            }
            let runs: Vec<u32> = (0..n_runs).map(|_| cur.u32()).collect::<Result<_>>()?;
            let mask = rle::decode(&runs, h.grid_h, h.grid_w).map_err(|e| {
                Error::Corruption(format!("{MASKS_FILE}: sample {s}, concept {}: {e}", c + 1))
            })?;
            let meta = MaskMeta {
                card: cur.u32()?,
                min_ext: cur.rect(h.grid_h, h.grid_w)?,
                max_ext: cur.rect(h.grid_h, h.grid_w)?,
            };
            meta.check_against(&mask).map_err(|msg| {
                Error::Corruption(format!(
                    "{MASKS_FILE}: sample {s}, concept {}: {msg}",
                    ConceptId::from_index(c).0
                ))
            })?;
            masks.push(mask);
            metas.push(meta);
        }
        store.push_sample_with_meta(masks, metas)?;
    }
    if cur.remaining() != 0 {
        return Err(Error::Corruption(format!(
            "{MASKS_FILE}: {} trailing bytes after last record",
            cur.remaining()
        )));
    }
    Ok(store)
}

pub fn decode_acts(bytes: &[u8]) -> Result<ActivationStore> {
    let mut cur = Cursor {
        bytes,
        pos: 0,
        what: ACTS_FILE,
    };
    let h = cur.header(ACTS_MAGIC)?;
    let kind = LayerKind::from_flag(h.flag)?;
    let n = h.n_items * h.n_samples * h.grid_h * h.grid_w;
    if cur.remaining() != n * 4 {
        return Err(Error::Corruption(format!(
            "{ACTS_FILE}: payload is {} bytes, header implies {}",
            cur.remaining(),
            n * 4
        )));
    }
    let values = cur
        .take(n * 4)?
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
        .collect();
    ActivationStore::new(h.n_items, h.n_samples, h.grid_h, h.grid_w, kind, values).map_err(|e| match e {
        Error::InvalidInput(msg) => Error::Corruption(format!("{ACTS_FILE}: {msg}")),
        other => other,
    })
}
