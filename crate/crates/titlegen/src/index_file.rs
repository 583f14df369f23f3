//! Binary TF-IDF index.
//!
//! Layout, little-endian:
//!
//! ```text
//! magic "TGTF" | version u32
//! n_terms u32 | n_terms × ( len u32 | utf-8 | df u64 )
//! n_docs u32  | n_docs × ( id u64 | title_len u32 | utf-8 | nnz u32 | nnz × ( term u32 | weight f64 ) )
//! ```

use std::io::{Cursor, Read};

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};
use titlegen_core::baselines::{IndexedDoc, TfIdfIndex};

const MAGIC: &[u8; 4] = b"TGTF";
const VERSION: u32 = 1;

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.write_u32::<LE>(s.len() as u32).unwrap();
    out.extend_from_slice(s.as_bytes());
}

pub fn encode(index: &TfIdfIndex) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.write_u32::<LE>(VERSION).unwrap();
    out.write_u32::<LE>(index.terms().len() as u32).unwrap();
    for (t, &df) in index.terms().iter().zip(index.df()) {
        put_str(&mut out, t);
        out.write_u64::<LE>(df as u64).unwrap();
    }
    out.write_u32::<LE>(index.docs().len() as u32).unwrap();
    for d in index.docs() {
        out.write_u64::<LE>(d.id).unwrap();
        put_str(&mut out, &d.title);
        out.write_u32::<LE>(d.weights.len() as u32).unwrap();
        for &(term, w) in &d.weights {
            out.write_u32::<LE>(term).unwrap();
            out.write_f64::<LE>(w).unwrap();
        }
    }
    out
}

fn get_str(r: &mut Cursor<&[u8]>) -> Result<String, String> {
    let len = r.read_u32::<LE>().map_err(|_| "truncated file")? as usize;
    if len > r.get_ref().len() - r.position() as usize {
        return Err("truncated file".into());
    }
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf).map_err(|_| "truncated file")?;
    String::from_utf8(buf).map_err(|_| "string is not utf-8".into())
}

pub fn decode(bytes: &[u8]) -> Result<TfIdfIndex, String> {
    let mut r = Cursor::new(bytes);
    let eof = |_| "truncated file".to_string();
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(eof)?;
    if &magic != MAGIC {
        return Err("not a tf-idf index".into());
    }
    let version = r.read_u32::<LE>().map_err(eof)?;
    if version != VERSION {
        return Err(format!("unsupported version {version}"));
    }
    let n_terms = r.read_u32::<LE>().map_err(eof)? as usize;
    let mut terms = Vec::new();
    let mut df = Vec::new();
    for _ in 0..n_terms {
        terms.push(get_str(&mut r)?);
        df.push(r.read_u64::<LE>().map_err(eof)? as usize);
    }
    let n_docs = r.read_u32::<LE>().map_err(eof)? as usize;
    let mut docs = Vec::new();
    for _ in 0..n_docs {
        let id = r.read_u64::<LE>().map_err(eof)?;
        let title = get_str(&mut r)?;
        let nnz = r.read_u32::<LE>().map_err(eof)? as usize;
        let mut weights = Vec::new();
        for _ in 0..nnz {
            weights.push((r.read_u32::<LE>().map_err(eof)?, r.read_f64::<LE>().map_err(eof)?));
        }
        docs.push(IndexedDoc { id, title, weights });
    }
    if (r.position() as usize) != bytes.len() {
        return Err("trailing bytes after the last document".into());
    }
    TfIdfIndex::from_parts(terms, df, docs).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use titlegen_core::baselines::TfIdfDocument;

    #[test]
    fn roundtrip() {
        let doc = |id, title: &str, body: &str| TfIdfDocument {
            id,
            title: title.into(),
            tokens: body.split(' ').map(String::from).collect(),
        };
        let index = TfIdfIndex::build(&[doc(3, "t three", "a b c c"), doc(1, "t one", "a d"), doc(2, "t two", "e e a")]).unwrap();
        let bytes = encode(&index);
        let back = decode(&bytes).unwrap();
        assert_eq!(back, index);
        assert!(decode(&bytes[..bytes.len() - 1]).is_err());
        let mut extra = bytes.clone();
        extra.push(1);
        assert!(decode(&extra).is_err());
    }
}
