//! Binary index container. All integers and floats are little-endian with no padding.
//!
//! ```text
//! "GANN" | u32 version | u8 kind | u64 n | u32 d | u32 cap
//! kind 0 flat:        per node: u32 degree, degree x u32 id
//! kind 1 layered:     u32 layers, per layer (base first): flat payload, u32 members, ids; u32 entry
//! kind 2 partitioned: u8 mode, u32 parts, per part: u32 members, ids, d x f32 centroid, flat payload
//! ```
//!
//! Optional trailing sections follow the payload, each `u8 tag | u64 length | bytes`:
//! tag 1 holds build labels, tag 2 a seed structure. Readers skip unknown tags.

use std::fs;
use std::path::Path;

use super::{FlatGraph, Index, LayeredGraph, Partition, PartitionMode, PartitionedIndex};
use crate::distance::NodeId;
use crate::error::{Error, Result};
use crate::seeds::{KdForest, KmTree, SeedIndex, SeedStrategy};

pub const MAGIC: &[u8; 4] = b"GANN";
pub const FORMAT_VERSION: u32 = 1;

const SECTION_META: u8 = 1;
const SECTION_SEEDS: u8 = 2;

/// Labels describing how an index was built.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BuildMeta {
    pub method: String,
    pub nd: String,
    pub ss: String,
}

/// Everything stored in one index file.
#[derive(Clone, Debug, PartialEq)]
pub struct IndexFile {
    pub dim: usize,
    pub index: Index,
    pub seeds: Option<SeedIndex>,
    pub meta: Option<BuildMeta>,
}

impl IndexFile {
    pub fn new(dim: usize, index: Index) -> Self {
        Self { dim, index, seeds: None, meta: None }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = ByteWriter::default();
        w.buf.extend_from_slice(MAGIC);
        w.u32(FORMAT_VERSION);
        let (kind, cap) = match &self.index {
            Index::Flat(g) => (0u8, g.cap()),
            Index::Layered(g) => (1, g.cap()),
            Index::Partitioned(p) => {
                let cap = p.partitions.first().map_or(1, |x| x.graph.cap());
                if p.partitions.iter().any(|x| x.graph.cap() != cap) {
                    return Err(Error::param("partition graphs must share one degree cap"));
                }
                (2, cap)
            }
        };
        w.u8(kind);
        w.u64(self.index.len() as u64);
        w.u32(self.dim as u32);
        w.u32(cap as u32);
        match &self.index {
            Index::Flat(g) => write_flat(&mut w, g),
            Index::Layered(g) => {
                w.u32(g.num_levels() as u32);
                for l in 0..g.num_levels() {
                    write_flat(&mut w, g.level(l));
                    let members = g.members(l);
                    w.u32(members.len() as u32);
                    w.ids(&members);
                }
                w.u32(g.entry());
            }
            Index::Partitioned(p) => {
                if p.partitions.iter().any(|x| x.centroid.len() != self.dim) {
                    return Err(Error::param("centroid dimension differs from the file dimension"));
                }
                w.u8(match p.mode {
                    PartitionMode::Merged => 0,
                    PartitionMode::Separate => 1,
                });
                w.u32(p.partitions.len() as u32);
                for part in &p.partitions {
                    w.u32(part.members.len() as u32);
                    w.ids(&part.members);
                    w.f32s(&part.centroid);
                    write_flat(&mut w, &part.graph);
                }
            }
        }
        if let Some(meta) = &self.meta {
            let mut s = ByteWriter::default();
            for text in [&meta.method, &meta.nd, &meta.ss] {
                s.u32(text.len() as u32);
                s.buf.extend_from_slice(text.as_bytes());
            }
            w.section(SECTION_META, &s.buf);
        }
        if let Some(seeds) = &self.seeds {
            let mut s = ByteWriter::default();
            s.u8(seeds.strategy().tag());
            match seeds {
                SeedIndex::Sn => {}
                SeedIndex::Kd(f) => f.encode(&mut s),
                SeedIndex::Km(t) => t.encode(&mut s),
                SeedIndex::Md(id) | SeedIndex::Sf(id) => s.u32(*id),
                SeedIndex::Ks { seed } => s.u64(*seed),
            }
            w.section(SECTION_SEEDS, &s.buf);
        }
        Ok(w.buf)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(bytes);
        if r.take(4)? != MAGIC {
            return Err(Error::BadMagic);
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        let kind = r.u8()?;
        if kind > 2 {
            return Err(Error::BadKind(kind));
        }
        let n = usize::try_from(r.u64()?).map_err(|_| Error::Corrupt("node count too large".into()))?;
        if n == 0 || n > NodeId::MAX as usize {
            return Err(Error::Corrupt(format!("node count {n} out of range")));
        }
        let dim = r.u32()? as usize;
        let cap = r.u32()? as usize;
        let index = match kind {
            0 => Index::Flat(read_flat(&mut r, n, cap)?),
            1 => {
                let layers = r.u32()? as usize;
                if layers == 0 || layers > 256 {
                    return Err(Error::Corrupt(format!("layer count {layers} out of range")));
                }
                let mut levels = Vec::with_capacity(layers);
                let mut top_level = vec![0u8; n];
                for l in 0..layers {
                    levels.push(read_flat(&mut r, n, cap)?);
                    let count = r.u32()? as usize;
                    for id in r.ids(count, n)? {
                        if top_level[id as usize] as usize + 1 < l {
                            return Err(Error::Corrupt(format!("layer {l} member {id} missing below")));
                        }
                        top_level[id as usize] = l as u8;
                    }
                    if l == 0 && count != n {
                        return Err(Error::Corrupt("base layer must hold every node".into()));
                    }
                }
                let entry = r.u32()?;
                Index::Layered(LayeredGraph::new(levels, top_level, entry).map_err(corrupt)?)
            }
            _ => {
                let mode = match r.u8()? {
                    0 => PartitionMode::Merged,
                    1 => PartitionMode::Separate,
                    m => return Err(Error::Corrupt(format!("unknown partition mode {m}"))),
                };
                let count = r.u32()? as usize;
                let mut partitions = Vec::with_capacity(count.min(n));
                for _ in 0..count {
                    let m = r.u32()? as usize;
                    let members = r.ids(m, n)?;
                    let centroid = r.f32s(dim)?;
                    let graph = read_flat(&mut r, m, cap)?;
                    partitions.push(Partition { members, centroid, graph });
                }
                let p = PartitionedIndex { mode, partitions };
                p.validate(n, dim).map_err(corrupt)?;
                Index::Partitioned(p)
            }
        };
        let mut file = IndexFile::new(dim, index);
        while !r.is_empty() {
            let tag = r.u8()?;
            let len = usize::try_from(r.u64()?).map_err(|_| Error::Truncated(r.offset()))?;
            let body = r.take(len)?;
            let mut s = ByteReader::new(body);
            match tag {
                SECTION_META => {
                    let mut text = || -> Result<String> {
                        let len = s.u32()? as usize;
                        String::from_utf8(s.take(len)?.to_vec())
                            .map_err(|_| Error::Corrupt("metadata is not UTF-8".into()))
                    };
                    file.meta = Some(BuildMeta { method: text()?, nd: text()?, ss: text()? });
                }
                SECTION_SEEDS => {
                    let tag = s.u8()?;
                    let strategy = SeedStrategy::from_tag(tag)
                        .ok_or_else(|| Error::Corrupt(format!("unknown seed kind {tag}")))?;
                    file.seeds = Some(match strategy {
                        SeedStrategy::Sn => SeedIndex::Sn,
                        SeedStrategy::Kd => SeedIndex::Kd(KdForest::decode(&mut s, n)?),
                        SeedStrategy::Km => SeedIndex::Km(KmTree::decode(&mut s, n, dim)?),
                        SeedStrategy::Md => SeedIndex::Md(s.ids(1, n)?[0]),
                        SeedStrategy::Sf => SeedIndex::Sf(s.ids(1, n)?[0]),
                        SeedStrategy::Ks => SeedIndex::Ks { seed: s.u64()? },
                    });
                }
                _ => {}
            }
        }
        Ok(file)
    }
}

fn corrupt(e: Error) -> Error {
    match e {
        Error::Graph(msg) => Error::Corrupt(msg),
        other => other,
    }
}

fn write_flat(w: &mut ByteWriter, g: &FlatGraph) {
    for u in 0..g.len() as NodeId {
        let list = g.neighbors(u);
        w.u32(list.len() as u32);
        w.ids(list);
    }
}

fn read_flat(r: &mut ByteReader<'_>, n: usize, cap: usize) -> Result<FlatGraph> {
    let mut adj = Vec::with_capacity(n);
    for _ in 0..n {
        let degree = r.u32()? as usize;
        if degree > cap {
            return Err(Error::Corrupt(format!("degree {degree} above cap {cap}")));
        }
        adj.push(r.ids(degree, n)?);
    }
    FlatGraph::from_lists(cap, adj).map_err(corrupt)
}

pub fn save_index(path: impl AsRef<Path>, file: &IndexFile) -> Result<()> {
    let path = path.as_ref();
    let bytes = file.to_bytes()?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_index(path: impl AsRef<Path>) -> Result<IndexFile> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    IndexFile::from_bytes(&bytes)
}

#[derive(Default)]
pub(crate) struct ByteWriter {
    pub(crate) buf: Vec<u8>,
}

impl ByteWriter {
    pub(crate) fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub(crate) fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub(crate) fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub(crate) fn f32(&mut self, v: f32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub(crate) fn ids(&mut self, ids: &[NodeId]) {
        ids.iter().for_each(|&id| self.u32(id));
    }

    pub(crate) fn f32s(&mut self, vals: &[f32]) {
        vals.iter().for_each(|&v| self.f32(v));
    }

    fn section(&mut self, tag: u8, body: &[u8]) {
        self.u8(tag);
        self.u64(body.len() as u64);
        self.buf.extend_from_slice(body);
    }
}

pub(crate) struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn offset(&self) -> u64 {
        self.pos as u64
    }

    pub(crate) fn is_empty(&self) -> bool {
        self.pos >= self.bytes.len()
    }

    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(len)
            .filter(|&e| e <= self.bytes.len())
            .ok_or(Error::Truncated(self.pos as u64))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    pub(crate) fn u8(&mut self) -> Result<u8> {
        Ok(self.array::<1>()?[0])
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    pub(crate) fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    pub(crate) fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.array()?))
    }

    /// Reads `count` ids, each required to be below `n`.
    pub(crate) fn ids(&mut self, count: usize, n: usize) -> Result<Vec<NodeId>> {
        let start = self.pos;
        let raw = self.take(count.checked_mul(4).ok_or(Error::Truncated(start as u64))?)?;
        let ids: Vec<NodeId> = raw
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().expect("chunk of 4")))
            .collect();
        if let Some(bad) = ids.iter().find(|&&id| id as usize >= n) {
            return Err(Error::Corrupt(format!("id {bad} out of range near offset {start}")));
        }
        Ok(ids)
    }

    pub(crate) fn f32s(&mut self, count: usize) -> Result<Vec<f32>> {
        (0..count).map(|_| self.f32()).collect()
    }
}
