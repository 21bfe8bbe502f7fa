//! KNDS datastore files (little-endian):
//!
//! ```text
//! magic "KNDS" | version u8 = 1 | lang u8 (0 = cn, 1 = en, 2 = all)
//! reserved 2 bytes = 0 | dim u32 | count u64
//! count x dim float32 keys, row-major | count x u32 values
//! ```

use std::path::Path;

use knnctc_core::{Datastore, StoreLang};

use crate::error::{in_file, CliError, Result};
use crate::rw::{read_file, write_file, Reader};

pub const MAGIC: &[u8; 4] = b"KNDS";
pub const VERSION: u8 = 1;

pub fn read_store(path: &Path) -> Result<Datastore> {
    let bytes = read_file(path)?;
    let mut r = Reader::new(path, &bytes);
    r.expect_magic(MAGIC, "KNDS datastore")?;
    let version = r.u8()?;
    if version != VERSION {
        return Err(CliError::data_in(
            path,
            format!("unsupported datastore version {version} at offset 4"),
        ));
    }
    let lang_code = r.u8()?;
    let lang = StoreLang::from_code(lang_code).ok_or_else(|| {
        CliError::data_in(path, format!("unknown language code {lang_code} at offset 5"))
    })?;
    let reserved = r.take(2)?;
    if reserved != [0, 0] {
        return Err(CliError::data_in(
            path,
            "reserved bytes at offset 6 must be zero",
        ));
    }
    let dim = r.u32_le()? as usize;
    if dim == 0 {
        return Err(CliError::data_in(path, "dim must be >= 1 (offset 8)"));
    }
    let count = r.u64_le()? as usize;
    let keys = r.f32_vec(count * dim)?;
    let values = r.u32_vec(count)?;
    r.finish()?;
    Datastore::from_parts(lang, dim, keys, values).map_err(|e| in_file(path, e))
}

pub fn write_store(path: &Path, ds: &Datastore) -> Result<()> {
    let mut out =
        Vec::with_capacity(20 + ds.keys().len() * 4 + ds.values().len() * 4);
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.push(ds.lang().code());
    out.extend_from_slice(&[0, 0]);
    out.extend_from_slice(&(ds.dim() as u32).to_le_bytes());
    out.extend_from_slice(&(ds.count() as u64).to_le_bytes());
    for &k in ds.keys() {
        out.extend_from_slice(&k.to_le_bytes());
    }
    for &v in ds.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    write_file(path, &out)
}
