//! Persistence: the binary index file format and readers/writers for the
//! fvecs/bvecs/ivecs vector file formats.
//!
//! Index file layout, all little-endian:
//!
//! ```text
//! magic "RII1" | version u32 | D u32 | M u32 | Z u32 | N u32 | K u32
//! theta u64 | default_L u32 | flags u32
//! codebook   M*Z*(D/M) f32
//! rotation   D*D f32                  (only when flags bit 0 is set)
//! codes      N*M bytes
//! centers    K*M bytes
//! postings   K x (u32 length, then that many u32 ids)
//! ```
//!
//! The payload after the codebook is `(N+K)*M + 4N` bytes plus the 4-byte
//! posting lengths.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::error::{Result, RiiError};
use crate::index::RiiIndex;
use crate::opq::Rotation;
use crate::pq::{Codebook, MAX_CODEWORDS};

pub const INDEX_MAGIC: [u8; 4] = *b"RII1";
pub const INDEX_VERSION: u32 = 1;

const FLAG_ROTATION: u32 = 1;
const FLAG_ANALYTIC_THETA: u32 = 1 << 1;

const HEADER_BYTES: u64 = 4 + 4 + 5 * 4 + 8 + 4 + 4;

/// Theoretical size of the code/center/posting-id payload: `(N+K)*M + 4N`
/// bytes.
pub fn payload_bytes(n: usize, k: usize, m: usize) -> u64 {
    ((n + k) * m) as u64 + 4 * n as u64
}

struct CountingWriter<W> {
    inner: W,
    written: u64,
}

impl<W: Write> CountingWriter<W> {
    fn new(inner: W) -> Self {
        CountingWriter { inner, written: 0 }
    }
}

impl<W: Write> Write for CountingWriter<W> {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.written += n as u64;
        Ok(n)
    }

    fn flush(&mut self) -> std::io::Result<()> {
        self.inner.flush()
    }
}

/// Serializes the index. Returns the number of bytes written.
pub fn save_index<W: Write>(idx: &RiiIndex, sink: W) -> Result<u64> {
    let mut w = CountingWriter::new(BufWriter::new(sink));
    match write_index(idx, &mut w) {
        Ok(()) => {
            w.flush().map_err(|e| annotate_write_error(e, w.written))?;
            Ok(w.written)
        }
        Err(e) => Err(annotate_write_error(e, w.written)),
    }
}

fn annotate_write_error(e: std::io::Error, written: u64) -> RiiError {
    RiiError::Io(std::io::Error::new(
        e.kind(),
        format!("write failed after {written} bytes: {e}"),
    ))
}

fn write_index<W: Write>(idx: &RiiIndex, w: &mut W) -> std::io::Result<()> {
    let cb = idx.codebook();
    let n = idx.num_vectors() as u32;
    let k = idx.num_centers() as u32;
    let mut flags = 0u32;
    if idx.rotation().is_some() {
        flags |= FLAG_ROTATION;
    }
    if idx.theta_is_analytic() {
        flags |= FLAG_ANALYTIC_THETA;
    }

    w.write_all(&INDEX_MAGIC)?;
    w.write_u32::<LittleEndian>(INDEX_VERSION)?;
    w.write_u32::<LittleEndian>(cb.dim() as u32)?;
    w.write_u32::<LittleEndian>(cb.num_subspaces() as u32)?;
    w.write_u32::<LittleEndian>(cb.num_codewords() as u32)?;
    w.write_u32::<LittleEndian>(n)?;
    w.write_u32::<LittleEndian>(k)?;
    w.write_u64::<LittleEndian>(idx.theta())?;
    w.write_u32::<LittleEndian>(idx.default_l() as u32)?;
    w.write_u32::<LittleEndian>(flags)?;

    for &v in cb.raw_codewords() {
        w.write_f32::<LittleEndian>(v)?;
    }
    if let Some(rot) = idx.rotation() {
        for &v in rot.matrix() {
            w.write_f32::<LittleEndian>(v)?;
        }
    }
    w.write_all(&idx.codes)?;
    w.write_all(&idx.centers)?;
    for list in &idx.postings {
        w.write_u32::<LittleEndian>(list.len() as u32)?;
        for &id in list {
            w.write_u32::<LittleEndian>(id)?;
        }
    }
    Ok(())
}

fn read_error(section: &'static str, e: std::io::Error) -> RiiError {
    RiiError::format(section, format!("read failed: {e}"))
}

/// Deserializes an index. Any malformed section yields a format error
/// naming that section; no partial index is returned.
pub fn load_index<R: Read>(source: R) -> Result<RiiIndex> {
    let mut r = BufReader::new(source);

    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|e| read_error("header", e))?;
    if magic != INDEX_MAGIC {
        return Err(RiiError::format("header", format!("bad magic {magic:?}")));
    }
    let version = r
        .read_u32::<LittleEndian>()
        .map_err(|e| read_error("header", e))?;
    if version != INDEX_VERSION {
        return Err(RiiError::format(
            "header",
            format!("unsupported version {version}"),
        ));
    }
    let dim = r
        .read_u32::<LittleEndian>()
        .map_err(|e| read_error("header", e))? as usize;
    let m = r
        .read_u32::<LittleEndian>()
        .map_err(|e| read_error("header", e))? as usize;
    let z = r
        .read_u32::<LittleEndian>()
        .map_err(|e| read_error("header", e))? as usize;
    let n = r
        .read_u32::<LittleEndian>()
        .map_err(|e| read_error("header", e))? as usize;
    let k = r
        .read_u32::<LittleEndian>()
        .map_err(|e| read_error("header", e))? as usize;
    let theta = r
        .read_u64::<LittleEndian>()
        .map_err(|e| read_error("header", e))?;
    let default_l = r
        .read_u32::<LittleEndian>()
        .map_err(|e| read_error("header", e))? as usize;
    let flags = r
        .read_u32::<LittleEndian>()
        .map_err(|e| read_error("header", e))?;

    if m == 0 || dim == 0 || !dim.is_multiple_of(m) {
        return Err(RiiError::format(
            "header",
            format!("dimension {dim} incompatible with {m} subspaces"),
        ));
    }
    if z == 0 || z > MAX_CODEWORDS {
        return Err(RiiError::format(
            "header",
            format!("codeword count {z} outside 1..={MAX_CODEWORDS}"),
        ));
    }
    if n > 0 && default_l == 0 {
        return Err(RiiError::format("header", "default_L is zero".to_string()));
    }

    let mut codewords = vec![0.0f32; m * z * (dim / m)];
    r.read_f32_into::<LittleEndian>(&mut codewords)
        .map_err(|e| read_error("codebook", e))?;
    let codebook = Codebook::from_parts(dim, m, z, codewords)
        .map_err(|e| RiiError::format("codebook", e.to_string()))?;

    let rotation = if flags & FLAG_ROTATION != 0 {
        let mut matrix = vec![0.0f32; dim * dim];
        r.read_f32_into::<LittleEndian>(&mut matrix)
            .map_err(|e| read_error("rotation", e))?;
        // Rows of an orthonormal matrix are unit vectors; a failed check
        // means the rotation block is missing or corrupt.
        for (i, row) in matrix.chunks_exact(dim).enumerate() {
            let norm: f32 = row.iter().map(|v| v * v).sum();
            if !norm.is_finite() || (norm - 1.0).abs() > 1e-3 {
                return Err(RiiError::format(
                    "rotation",
                    format!("row {i} has squared norm {norm}, expected 1"),
                ));
            }
        }
        Some(
            Rotation::from_matrix(dim, matrix)
                .map_err(|e| RiiError::format("rotation", e.to_string()))?,
        )
    } else {
        None
    };

    let mut codes = vec![0u8; n * m];
    r.read_exact(&mut codes)
        .map_err(|e| read_error("codes", e))?;
    if z < MAX_CODEWORDS {
        if let Some(&bad) = codes.iter().find(|&&s| s as usize >= z) {
            return Err(RiiError::format(
                "codes",
                format!("symbol {bad} out of range for {z} codewords"),
            ));
        }
    }

    let mut centers = vec![0u8; k * m];
    r.read_exact(&mut centers)
        .map_err(|e| read_error("centers", e))?;
    if z < MAX_CODEWORDS {
        if let Some(&bad) = centers.iter().find(|&&s| s as usize >= z) {
            return Err(RiiError::format(
                "centers",
                format!("symbol {bad} out of range for {z} codewords"),
            ));
        }
    }

    let mut postings = Vec::with_capacity(k);
    let mut seen = vec![false; n];
    let mut total = 0usize;
    for li in 0..k {
        let len = r
            .read_u32::<LittleEndian>()
            .map_err(|e| read_error("postings", e))? as usize;
        if len > n {
            return Err(RiiError::format(
                "postings",
                format!("list {li} claims {len} ids, index holds {n}"),
            ));
        }
        let mut list = vec![0u32; len];
        r.read_u32_into::<LittleEndian>(&mut list)
            .map_err(|e| read_error("postings", e))?;
        for w in list.windows(2) {
            if w[0] >= w[1] {
                return Err(RiiError::format(
                    "postings",
                    format!("list {li} is not strictly ascending"),
                ));
            }
        }
        for &id in &list {
            if id as usize >= n {
                return Err(RiiError::format(
                    "postings",
                    format!("list {li} holds out-of-range id {id}"),
                ));
            }
            if seen[id as usize] {
                return Err(RiiError::format(
                    "postings",
                    format!("id {id} appears in more than one list"),
                ));
            }
            seen[id as usize] = true;
        }
        total += len;
        postings.push(list);
    }
    if k > 0 && total != n {
        return Err(RiiError::format(
            "postings",
            format!("lists cover {total} ids, index holds {n}"),
        ));
    }

    // A trailing byte means the writer and reader disagree on the layout.
    let mut probe = [0u8; 1];
    match r.read(&mut probe) {
        Ok(0) => {}
        Ok(_) => {
            return Err(RiiError::format(
                "postings",
                "trailing bytes after posting lists".to_string(),
            ))
        }
        Err(e) => return Err(read_error("postings", e)),
    }

    let sym_tables = codebook.symmetric_tables();
    Ok(RiiIndex {
        codebook,
        rotation,
        codes,
        centers,
        postings,
        sym_tables,
        theta,
        default_l,
        analytic_theta: flags & FLAG_ANALYTIC_THETA != 0,
    })
}

impl RiiIndex {
    pub fn save_to_path<P: AsRef<Path>>(&self, path: P) -> Result<u64> {
        let file = File::create(path)?;
        save_index(self, file)
    }

    pub fn load_from_path<P: AsRef<Path>>(path: P) -> Result<Self> {
        let file = File::open(path)?;
        load_index(file)
    }

    /// Exact size of the serialized index in bytes.
    pub fn serialized_len(&self) -> u64 {
        let cb = self.codebook();
        let n = self.num_vectors() as u64;
        let k = self.num_centers() as u64;
        let m = cb.num_subspaces() as u64;
        let rotation = if self.rotation().is_some() {
            (cb.dim() * cb.dim()) as u64 * 4
        } else {
            0
        };
        HEADER_BYTES
            + cb.raw_codewords().len() as u64 * 4
            + rotation
            + n * m
            + k * m
            + k * 4
            + n * 4
    }
}

/// Vector benchmark file formats: a little-endian `i32` dimension followed
/// by that many elements, repeated per record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VecsFormat {
    /// `f32` elements.
    Fvecs,
    /// `u8` elements.
    Bvecs,
    /// `i32` elements.
    Ivecs,
}

impl VecsFormat {
    /// Guesses the format from a file extension.
    pub fn from_path<P: AsRef<Path>>(path: P) -> Result<Self> {
        match path.as_ref().extension().and_then(|e| e.to_str()) {
            Some("fvecs") => Ok(VecsFormat::Fvecs),
            Some("bvecs") => Ok(VecsFormat::Bvecs),
            Some("ivecs") => Ok(VecsFormat::Ivecs),
            other => Err(RiiError::input(format!(
                "cannot infer vector format from extension {other:?}"
            ))),
        }
    }
}

fn read_records<R, T, F>(mut r: R, section: &'static str, mut read_elems: F) -> Result<Vec<Vec<T>>>
where
    R: Read,
    F: FnMut(&mut R, usize) -> std::io::Result<Vec<T>>,
{
    let mut out: Vec<Vec<T>> = Vec::new();
    let mut dim: Option<usize> = None;
    loop {
        let d = match r.read_i32::<LittleEndian>() {
            Ok(d) => d,
            Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => break,
            Err(e) => return Err(read_error(section, e)),
        };
        let record = out.len();
        if d <= 0 {
            return Err(RiiError::format(
                section,
                format!("record {record}: non-positive dimension {d}"),
            ));
        }
        let d = d as usize;
        match dim {
            None => dim = Some(d),
            Some(expect) if expect != d => {
                return Err(RiiError::format(
                    section,
                    format!("record {record}: dimension {d}, previous records had {expect}"),
                ));
            }
            _ => {}
        }
        let values = read_elems(&mut r, d)
            .map_err(|e| RiiError::format(section, format!("record {record}: truncated ({e})")))?;
        out.push(values);
    }
    Ok(out)
}

pub fn read_fvecs_from<R: Read>(r: R) -> Result<Vec<Vec<f32>>> {
    read_records(r, "fvecs", |r, d| {
        let mut v = vec![0.0f32; d];
        r.read_f32_into::<LittleEndian>(&mut v)?;
        Ok(v)
    })
}

pub fn read_fvecs<P: AsRef<Path>>(path: P) -> Result<Vec<Vec<f32>>> {
    read_fvecs_from(BufReader::new(File::open(path)?))
}

/// Byte vectors, widened to `f32` for use as inputs.
pub fn read_bvecs_from<R: Read>(r: R) -> Result<Vec<Vec<f32>>> {
    read_records(r, "bvecs", |r, d| {
        let mut buf = vec![0u8; d];
        r.read_exact(&mut buf)?;
        Ok(buf.into_iter().map(f32::from).collect())
    })
}

pub fn read_bvecs<P: AsRef<Path>>(path: P) -> Result<Vec<Vec<f32>>> {
    read_bvecs_from(BufReader::new(File::open(path)?))
}

pub fn read_ivecs_from<R: Read>(r: R) -> Result<Vec<Vec<i32>>> {
    read_records(r, "ivecs", |r, d| {
        let mut v = vec![0i32; d];
        r.read_i32_into::<LittleEndian>(&mut v)?;
        Ok(v)
    })
}

pub fn read_ivecs<P: AsRef<Path>>(path: P) -> Result<Vec<Vec<i32>>> {
    read_ivecs_from(BufReader::new(File::open(path)?))
}

/// Reads any supported format as `f32` vectors (ivecs values are widened;
/// use [`read_ivecs`] when exact integers matter).
pub fn read_vectors<P: AsRef<Path>>(path: P, format: VecsFormat) -> Result<Vec<Vec<f32>>> {
    match format {
        VecsFormat::Fvecs => read_fvecs(path),
        VecsFormat::Bvecs => read_bvecs(path),
        VecsFormat::Ivecs => Ok(read_ivecs(path)?
            .into_iter()
            .map(|v| v.into_iter().map(|x| x as f32).collect())
            .collect()),
    }
}

pub fn write_fvecs_to<W: Write>(w: W, vectors: &[Vec<f32>]) -> Result<()> {
    let mut w = BufWriter::new(w);
    for v in vectors {
        w.write_i32::<LittleEndian>(v.len() as i32)?;
        for &x in v {
            w.write_f32::<LittleEndian>(x)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_fvecs<P: AsRef<Path>>(path: P, vectors: &[Vec<f32>]) -> Result<()> {
    write_fvecs_to(File::create(path)?, vectors)
}

pub fn write_ivecs_to<W: Write>(w: W, vectors: &[Vec<i32>]) -> Result<()> {
    let mut w = BufWriter::new(w);
    for v in vectors {
        w.write_i32::<LittleEndian>(v.len() as i32)?;
        for &x in v {
            w.write_i32::<LittleEndian>(x)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_ivecs<P: AsRef<Path>>(path: P, vectors: &[Vec<i32>]) -> Result<()> {
    write_ivecs_to(File::create(path)?, vectors)
}

pub fn write_bvecs_to<W: Write>(w: W, vectors: &[Vec<u8>]) -> Result<()> {
    let mut w = BufWriter::new(w);
    for v in vectors {
        w.write_i32::<LittleEndian>(v.len() as i32)?;
        w.write_all(v)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_bvecs<P: AsRef<Path>>(path: P, vectors: &[Vec<u8>]) -> Result<()> {
    write_bvecs_to(File::create(path)?, vectors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibrate::CalibrationMode;
    use crate::index::BuildOptions;
    use crate::opq::train_rotation_with_iters;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_vectors(n: usize, dim: usize, seed: u64) -> Vec<Vec<f32>> {
        let mut rng = StdRng::seed_from_u64(seed);
        (0..n)
            .map(|_| (0..dim).map(|_| rng.gen::<f32>() * 2.0 - 1.0).collect())
            .collect()
    }

    fn sample_index(seed: u64) -> RiiIndex {
        let data = random_vectors(120, 8, seed);
        let cb = Codebook::train(&data, 4, 16, 10, seed).unwrap();
        RiiIndex::build_with(
            cb,
            &data,
            11,
            seed,
            BuildOptions {
                rotation: None,
                calibration: CalibrationMode::Analytic,
            },
        )
        .unwrap()
    }

    fn to_bytes(idx: &RiiIndex) -> Vec<u8> {
        let mut buf = Vec::new();
        save_index(idx, &mut buf).unwrap();
        buf
    }

    #[test]
    fn save_load_save_is_byte_identical() {
        let idx = sample_index(5);
        let first = to_bytes(&idx);
        let loaded = load_index(first.as_slice()).unwrap();
        let second = to_bytes(&loaded);
        assert_eq!(first, second);
    }

    #[test]
    fn serialized_len_matches_actual_bytes() {
        let idx = sample_index(6);
        let bytes = to_bytes(&idx);
        assert_eq!(bytes.len() as u64, idx.serialized_len());
    }

    #[test]
    fn payload_formula_at_reference_scale() {
        // 10^6 codes, 10^3 centers, 64 bytes per code: about 68 MB.
        let bytes = payload_bytes(1_000_000, 1_000, 64);
        assert_eq!(bytes, 68_064_000);
    }

    #[test]
    fn empty_index_is_header_plus_codebook() {
        let data = random_vectors(120, 8, 7);
        let cb = Codebook::train(&data, 4, 16, 10, 7).unwrap();
        let idx = RiiIndex::build(cb, &[], 0, 0).unwrap();
        let bytes = to_bytes(&idx);
        assert_eq!(bytes.len() as u64, 44 + 16 * 8 * 4);
        let loaded = load_index(bytes.as_slice()).unwrap();
        assert_eq!(loaded.num_vectors(), 0);
        assert_eq!(loaded.num_centers(), 0);
    }

    #[test]
    fn rotation_round_trips() {
        let data = random_vectors(200, 8, 8);
        let (rot, cb) = train_rotation_with_iters(&data, 4, 16, 8, 2, 8).unwrap();
        let idx = RiiIndex::build_with(
            cb,
            &data,
            9,
            8,
            BuildOptions {
                rotation: Some(rot),
                calibration: CalibrationMode::Analytic,
            },
        )
        .unwrap();
        let bytes = to_bytes(&idx);
        assert_eq!(bytes.len() as u64, idx.serialized_len());
        let loaded = load_index(bytes.as_slice()).unwrap();
        assert!(loaded.rotation().is_some());
        assert_eq!(
            loaded.rotation().unwrap().matrix(),
            idx.rotation().unwrap().matrix()
        );
        assert_eq!(to_bytes(&loaded), bytes);
    }

    #[test]
    fn bad_magic_and_version_are_rejected() {
        let idx = sample_index(9);
        let mut bytes = to_bytes(&idx);
        bytes[0] = b'X';
        match load_index(bytes.as_slice()) {
            Err(RiiError::Format { section, .. }) => assert_eq!(section, "header"),
            other => panic!("expected header error, got {other:?}"),
        }

        let mut bytes = to_bytes(&idx);
        bytes[4] = 99;
        assert!(matches!(
            load_index(bytes.as_slice()),
            Err(RiiError::Format {
                section: "header",
                ..
            })
        ));
    }

    #[test]
    fn truncation_names_the_failing_section() {
        let idx = sample_index(10);
        let bytes = to_bytes(&idx);
        // Cut inside the codebook.
        let cut = 44 + 10;
        match load_index(&bytes[..cut]) {
            Err(RiiError::Format { section, .. }) => assert_eq!(section, "codebook"),
            other => panic!("expected codebook error, got {other:?}"),
        }
        // Cut inside the posting lists.
        match load_index(&bytes[..bytes.len() - 2]) {
            Err(RiiError::Format { section, .. }) => assert_eq!(section, "postings"),
            other => panic!("expected postings error, got {other:?}"),
        }
    }

    #[test]
    fn out_of_range_code_symbol_is_rejected() {
        let idx = sample_index(13);
        let mut bytes = to_bytes(&idx);
        // Codes start right after the header and the 16x8 f32 codebook;
        // symbol 200 is out of range for Z=16.
        let codes_start = 44 + 16 * 8 * 4;
        bytes[codes_start] = 200;
        match load_index(bytes.as_slice()) {
            Err(RiiError::Format { section, .. }) => assert_eq!(section, "codes"),
            other => panic!("expected codes error, got {other:?}"),
        }
    }

    #[test]
    fn rotation_flag_without_rotation_block_fails() {
        let idx = sample_index(11);
        let mut bytes = to_bytes(&idx);
        // flags live at offset 40; set bit 0.
        bytes[40] |= 1;
        assert!(load_index(bytes.as_slice()).is_err());
    }

    #[test]
    fn loaded_index_answers_queries_identically() {
        use crate::search::{SubsetIds, Target};
        let idx = sample_index(12);
        let loaded = load_index(to_bytes(&idx).as_slice()).unwrap();
        assert_eq!(loaded.theta(), idx.theta());
        assert_eq!(loaded.default_l(), idx.default_l());
        let queries = random_vectors(10, 8, 13);
        let s = SubsetIds::sample(idx.num_vectors(), 40, 14).unwrap();
        for q in &queries {
            let a = idx.query(q, 5, Target::Subset(&s), None).unwrap();
            let b = loaded.query(q, 5, Target::Subset(&s), None).unwrap();
            assert_eq!(a, b);
            let a = idx.query(q, 5, Target::All, None).unwrap();
            let b = loaded.query(q, 5, Target::All, None).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn fvecs_single_record() {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&4i32.to_le_bytes());
        for v in [1.0f32, 2.0, 3.0, 4.0] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        let got = read_fvecs_from(bytes.as_slice()).unwrap();
        assert_eq!(got, vec![vec![1.0, 2.0, 3.0, 4.0]]);
    }

    #[test]
    fn empty_vecs_file_is_empty_list() {
        assert!(read_fvecs_from(&[][..]).unwrap().is_empty());
        assert!(read_ivecs_from(&[][..]).unwrap().is_empty());
        assert!(read_bvecs_from(&[][..]).unwrap().is_empty());
    }

    #[test]
    fn vecs_round_trips() {
        let mut rng = StdRng::seed_from_u64(15);
        let vectors = random_vectors(100, 12, 15);
        let mut buf = Vec::new();
        write_fvecs_to(&mut buf, &vectors).unwrap();
        assert_eq!(read_fvecs_from(buf.as_slice()).unwrap(), vectors);

        let ints: Vec<Vec<i32>> = (0..50)
            .map(|_| (0..5).map(|_| rng.gen_range(-1000..1000)).collect())
            .collect();
        let mut buf = Vec::new();
        write_ivecs_to(&mut buf, &ints).unwrap();
        assert_eq!(read_ivecs_from(buf.as_slice()).unwrap(), ints);

        let bytes_v: Vec<Vec<u8>> = (0..50)
            .map(|_| (0..6).map(|_| rng.gen()).collect())
            .collect();
        let mut buf = Vec::new();
        write_bvecs_to(&mut buf, &bytes_v).unwrap();
        let got = read_bvecs_from(buf.as_slice()).unwrap();
        for (g, b) in got.iter().zip(&bytes_v) {
            let expect: Vec<f32> = b.iter().map(|&x| f32::from(x)).collect();
            assert_eq!(g, &expect);
        }
    }

    #[test]
    fn vecs_errors_carry_record_index() {
        // Record 1 has a different dimension than record 0.
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&2i32.to_le_bytes());
        bytes.extend_from_slice(&1.0f32.to_le_bytes());
        bytes.extend_from_slice(&2.0f32.to_le_bytes());
        bytes.extend_from_slice(&3i32.to_le_bytes());
        bytes.extend_from_slice(&1.0f32.to_le_bytes());
        bytes.extend_from_slice(&2.0f32.to_le_bytes());
        bytes.extend_from_slice(&3.0f32.to_le_bytes());
        match read_fvecs_from(bytes.as_slice()) {
            Err(RiiError::Format { detail, .. }) => assert!(detail.contains("record 1")),
            other => panic!("expected format error, got {other:?}"),
        }

        // Trailing partial record.
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&2i32.to_le_bytes());
        bytes.extend_from_slice(&1.0f32.to_le_bytes());
        bytes.extend_from_slice(&2.0f32.to_le_bytes());
        bytes.extend_from_slice(&2i32.to_le_bytes());
        bytes.extend_from_slice(&9.0f32.to_le_bytes());
        match read_fvecs_from(bytes.as_slice()) {
            Err(RiiError::Format { detail, .. }) => {
                assert!(detail.contains("record 1") && detail.contains("truncated"))
            }
            other => panic!("expected truncation error, got {other:?}"),
        }
    }

    #[test]
    fn format_from_extension() {
        assert_eq!(
            VecsFormat::from_path("a/b.fvecs").unwrap(),
            VecsFormat::Fvecs
        );
        assert_eq!(VecsFormat::from_path("q.bvecs").unwrap(), VecsFormat::Bvecs);
        assert_eq!(
            VecsFormat::from_path("gt.ivecs").unwrap(),
            VecsFormat::Ivecs
        );
        assert!(VecsFormat::from_path("data.bin").is_err());
    }
}
