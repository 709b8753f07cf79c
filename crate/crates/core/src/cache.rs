//! On-disk cache of enumerated group tables.
//!
//! One file per (family, ring) pair:
//!
//! ```text
//! magic "ZETACACH" | u32 format version | u32 header length | header JSON
//! | u64 blob length | blob | sha256 of everything before
//! ```
//!
//! The blob is the element count, the matrix size, every element as
//! little-endian `u32` digit-string indices and the inverse map. The header
//! records the ring and family literals, the generator labels and the
//! structure-constant hash; all must match what the current build would
//! generate. Anything unexpected falls back to recomputation.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::RwLock;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::groups::{GroupError, GroupFamily, GroupTable};
use crate::rings::RingSpec;

pub const FORMAT_VERSION: u32 = 1;
pub const ENV_VAR: &str = "ZETA_CACHE_DIR";
const MAGIC: &[u8; 8] = b"ZETACACH";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Header {
    pub format_version: u32,
    pub ring: String,
    pub family: String,
    pub generators: Vec<String>,
    pub structure_hash: String,
    pub derived: BTreeMap<String, u64>,
}

/// Outcome of a lookup, for callers that want to report it.
#[derive(Debug)]
pub enum Lookup {
    Hit(Box<GroupTable>),
    Miss,
    /// The entry exists but cannot be used; the reason goes into the warning.
    Stale(String),
}

#[derive(Debug, Clone)]
pub struct Cache {
    dir: PathBuf,
    version: u32,
}

static ACTIVE: RwLock<Option<Cache>> = RwLock::new(None);

/// Makes `GroupFamily::build` go through `cache`, or bypass caching with `None`.
pub fn install(cache: Option<Cache>) {
    *ACTIVE.write().expect("cache lock") = cache;
}

pub fn active() -> Option<Cache> {
    ACTIVE.read().expect("cache lock").clone()
}

fn expected_header(
    family: &GroupFamily,
    ring: &RingSpec,
    version: u32,
) -> Result<Header, GroupError> {
    let mut generators: Vec<String> = family
        .generators(ring)?
        .into_iter()
        .map(|g| g.label)
        .collect();
    generators.sort();
    Ok(Header {
        format_version: version,
        ring: ring.literal(),
        family: family.to_string(),
        generators,
        structure_hash: family.structure_hash()?,
        derived: BTreeMap::new(),
    })
}

fn read_u32(b: &[u8], at: &mut usize) -> Option<u32> {
    let v = u32::from_le_bytes(b.get(*at..*at + 4)?.try_into().ok()?);
    *at += 4;
    Some(v)
}

fn read_u64(b: &[u8], at: &mut usize) -> Option<u64> {
    let v = u64::from_le_bytes(b.get(*at..*at + 8)?.try_into().ok()?);
    *at += 8;
    Some(v)
}

impl Cache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Cache {
            dir: dir.into(),
            version: FORMAT_VERSION,
        }
    }

    /// A cache that reads and writes a different format version; entries of
    /// other versions are invisible to it.
    pub fn with_version(dir: impl Into<PathBuf>, version: u32) -> Self {
        Cache {
            dir: dir.into(),
            version,
        }
    }

    /// The cache named by `ZETA_CACHE_DIR`, if set and non-empty.
    pub fn from_env() -> Option<Self> {
        std::env::var_os(ENV_VAR)
            .filter(|v| !v.is_empty())
            .map(Cache::new)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, family: &GroupFamily, ring: &RingSpec) -> PathBuf {
        let key = Sha256::digest(format!("{family}|{}", ring.literal()));
        let hex: String = key[..12].iter().map(|b| format!("{b:02x}")).collect();
        self.dir.join(format!("v{}-{hex}.zgt", self.version))
    }

    pub fn load(&self, family: &GroupFamily, ring: &RingSpec) -> Result<Lookup, GroupError> {
        let path = self.path_for(family, ring);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(_) => return Ok(Lookup::Miss),
        };
        let expected = expected_header(family, ring, self.version)?;
        match self.decode(&bytes, &expected, family, ring) {
            Ok(t) => Ok(Lookup::Hit(Box::new(t))),
            Err(Some(reason)) => Ok(Lookup::Stale(reason)),
            Err(None) => Ok(Lookup::Miss),
        }
    }

    /// `Err(None)` means the entry belongs to another format version.
    fn decode(
        &self,
        bytes: &[u8],
        expected: &Header,
        family: &GroupFamily,
        ring: &RingSpec,
    ) -> Result<GroupTable, Option<String>> {
        let stale = |s: &str| Some(s.to_string());
        if bytes.len() < MAGIC.len() + 4 || &bytes[..8] != MAGIC {
            return Err(stale("bad magic"));
        }
        let mut at = 8;
        let version = read_u32(bytes, &mut at).ok_or_else(|| stale("truncated"))?;
        if version != self.version {
            return Err(None);
        }
        if bytes.len() < at + 32 {
            return Err(stale("truncated"));
        }
        let (body, digest) = bytes.split_at(bytes.len() - 32);
        if Sha256::digest(body).as_slice() != digest {
            return Err(stale("checksum mismatch or truncated file"));
        }
        let hlen = read_u32(body, &mut at).ok_or_else(|| stale("truncated"))? as usize;
        let header: Header = body
            .get(at..at + hlen)
            .and_then(|h| serde_json::from_slice(h).ok())
            .ok_or_else(|| stale("unreadable header"))?;
        at += hlen;
        let mut cmp = header.clone();
        cmp.derived.clear();
        if &cmp != expected {
            return Err(stale("header does not match the current generators"));
        }
        let blen = read_u64(body, &mut at).ok_or_else(|| stale("truncated"))? as usize;
        let blob = body.get(at..at + blen).ok_or_else(|| stale("truncated"))?;
        if at + blen != body.len() {
            return Err(stale("trailing bytes"));
        }
        let mut b = 0;
        let n = read_u32(blob, &mut b).ok_or_else(|| stale("truncated"))? as usize;
        let dim = read_u32(blob, &mut b).ok_or_else(|| stale("truncated"))? as usize;
        if blob.len() != 8 + 4 * (n * dim * dim + n)
            || header.derived.get("order") != Some(&(n as u64))
        {
            return Err(stale("blob size does not match the header"));
        }
        let words: Vec<u32> = blob[8..]
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        let (data, inverse) = words.split_at(n * dim * dim);
        let gens = family.generators(ring).map_err(|e| Some(e.to_string()))?;
        if family.matrix_dim().ok() != Some(dim) {
            return Err(stale("matrix size mismatch"));
        }
        GroupTable::from_parts(ring, dim, gens, data, inverse.to_vec())
            .map_err(|_| stale("element data failed validation"))
    }

    /// Writes the entry atomically: a temporary file in the cache directory
    /// is renamed over the final path, so readers never see partial files.
    pub fn store(&self, family: &GroupFamily, table: &GroupTable) -> std::io::Result<()> {
        let ring = table.ring();
        let mut header = expected_header(family, ring, self.version)
            .map_err(|e| std::io::Error::other(e.to_string()))?;
        header.derived.insert("order".into(), table.len() as u64);
        let hjson = serde_json::to_vec(&header)?;
        let mut blob = Vec::with_capacity(8 + 4 * (table.flat_data().len() + table.len()));
        blob.extend_from_slice(&(table.len() as u32).to_le_bytes());
        blob.extend_from_slice(&(table.dim() as u32).to_le_bytes());
        for w in table.flat_data().iter().chain(table.inverses()) {
            blob.extend_from_slice(&w.to_le_bytes());
        }
        let mut out = Vec::with_capacity(blob.len() + hjson.len() + 64);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&self.version.to_le_bytes());
        out.extend_from_slice(&(hjson.len() as u32).to_le_bytes());
        out.extend_from_slice(&hjson);
        out.extend_from_slice(&(blob.len() as u64).to_le_bytes());
        out.extend_from_slice(&blob);
        let digest = Sha256::digest(&out);
        out.extend_from_slice(&digest);
        fs::create_dir_all(&self.dir)?;
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        tmp.write_all(&out)?;
        tmp.persist(self.path_for(family, ring))
            .map_err(|e| e.error)?;
        Ok(())
    }

    /// Load, or enumerate and store. Cache I/O problems only produce warnings.
    pub fn build(
        &self,
        family: &GroupFamily,
        ring: &RingSpec,
        cap: usize,
    ) -> Result<GroupTable, GroupError> {
        match self.load(family, ring)? {
            Lookup::Hit(t) if t.len() <= cap => return Ok(*t),
            Lookup::Hit(t) => {
                return Err(GroupError::TooLarge {
                    cap,
                    reached: t.len(),
                })
            }
            Lookup::Stale(reason) => eprintln!(
                "warning: cache entry for {family} over {} is unusable ({reason}); recomputing",
                ring.literal()
            ),
            Lookup::Miss => {}
        }
        let t = family.build_uncached(ring, cap)?;
        if let Err(e) = self.store(family, &t) {
            eprintln!("warning: could not write cache entry: {e}");
        }
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::DEFAULT_CAP;
    use crate::rings::{make_ring, RingKind};

    fn setup() -> (tempfile::TempDir, GroupFamily, RingSpec) {
        (
            tempfile::tempdir().unwrap(),
            "chevalley:A1".parse().unwrap(),
            make_ring(RingKind::MixedChar, 3, 1, 1).unwrap(),
        )
    }

    fn same(a: &GroupTable, b: &GroupTable) -> bool {
        a.flat_data() == b.flat_data()
            && a.inverses() == b.inverses()
            && a.generator_indices() == b.generator_indices()
    }

    #[test]
    fn round_trip() {
        let (dir, f, r) = setup();
        let c = Cache::new(dir.path());
        assert!(matches!(c.load(&f, &r).unwrap(), Lookup::Miss));
        let fresh = c.build(&f, &r, DEFAULT_CAP).unwrap();
        match c.load(&f, &r).unwrap() {
            Lookup::Hit(t) => assert!(same(&t, &fresh)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn truncated_and_corrupt_entries_are_recomputed() {
        let (dir, f, r) = setup();
        let c = Cache::new(dir.path());
        let fresh = c.build(&f, &r, DEFAULT_CAP).unwrap();
        let path = c.path_for(&f, &r);
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
        assert!(matches!(c.load(&f, &r).unwrap(), Lookup::Stale(_)));
        assert!(same(&c.build(&f, &r, DEFAULT_CAP).unwrap(), &fresh));
        let mut flipped = fs::read(&path).unwrap();
        let k = flipped.len() - 40;
        flipped[k] ^= 1;
        fs::write(&path, &flipped).unwrap();
        assert!(matches!(c.load(&f, &r).unwrap(), Lookup::Stale(_)));
    }

    #[test]
    fn header_mismatch_is_stale() {
        let (dir, f, r) = setup();
        let c = Cache::new(dir.path());
        c.build(&f, &r, DEFAULT_CAP).unwrap();
        // an entry for another family written under this key
        let other: GroupFamily = "unipotent:A1".parse().unwrap();
        let t = other.build_uncached(&r, DEFAULT_CAP).unwrap();
        c.store(&other, &t).unwrap();
        fs::rename(c.path_for(&other, &r), c.path_for(&f, &r)).unwrap();
        assert!(matches!(c.load(&f, &r).unwrap(), Lookup::Stale(_)));
    }

    #[test]
    fn other_versions_are_ignored() {
        let (dir, f, r) = setup();
        Cache::new(dir.path()).build(&f, &r, DEFAULT_CAP).unwrap();
        let bumped = Cache::with_version(dir.path(), FORMAT_VERSION + 1);
        assert!(matches!(bumped.load(&f, &r).unwrap(), Lookup::Miss));
        // even when the old file sits under the new name
        fs::copy(
            Cache::new(dir.path()).path_for(&f, &r),
            bumped.path_for(&f, &r),
        )
        .unwrap();
        assert!(matches!(bumped.load(&f, &r).unwrap(), Lookup::Miss));
    }
}
