//! PDF file structure: cross-reference table, trailer, page tree, and
//! stream decoding.
//!
//! Supports classic cross-reference tables (with /Prev chains for
//! incrementally updated files). Files whose xref is damaged or uses an
//! unsupported layout fall back to a full scan for `N G obj` headers.

use std::collections::BTreeMap;

use flate2::read::ZlibDecoder;
use std::io::Read;

use super::object::{find_subsequence, Dict, Lexer, ObjRef, Object};
use super::PdfError;

/// Parsed file skeleton: object table plus the document catalog.
pub struct Document {
    bytes: Vec<u8>,
    /// Byte offset of each indirect object's `N G obj` header.
    offsets: BTreeMap<ObjRef, usize>,
    trailer: Dict,
}

/// One page with inherited attributes applied.
pub struct Page {
    /// Page dictionary (merged view is not kept; lookups go through `Document`).
    pub dict: Dict,
    /// MediaBox after inheritance: [x0, y0, x1, y1].
    pub media_box: [f64; 4],
}

impl Document {
    pub fn parse(bytes: Vec<u8>) -> Result<Self, PdfError> {
        if !bytes.starts_with(b"%PDF-") {
            return Err(PdfError::NotAPdf);
        }
        let (offsets, trailer) = match parse_xref_chain(&bytes) {
            Ok(pair) => pair,
            Err(_) => scan_objects(&bytes)?,
        };
        if trailer.contains_key("Encrypt") {
            return Err(PdfError::EncryptedPdf);
        }
        let doc = Self {
            bytes,
            offsets,
            trailer,
        };
        // Root must resolve for the document to be usable at all.
        doc.catalog()?;
        Ok(doc)
    }

    fn catalog(&self) -> Result<Dict, PdfError> {
        let root = self
            .trailer
            .get("Root")
            .ok_or_else(|| PdfError::Structure("trailer has no /Root".into()))?;
        let obj = self.resolve(root)?;
        obj.as_dict()
            .cloned()
            .ok_or_else(|| PdfError::Structure("/Root is not a dictionary".into()))
    }

    /// Follow references until a direct object is reached.
    pub fn resolve(&self, obj: &Object) -> Result<Object, PdfError> {
        let mut current = obj.clone();
        // Reference chains in practice are short; the bound guards cycles.
        for _ in 0..32 {
            match current {
                Object::Ref(r) => current = self.load_object(r)?,
                other => return Ok(other),
            }
        }
        Err(PdfError::Structure("reference chain too deep".into()))
    }

    fn load_object(&self, r: ObjRef) -> Result<Object, PdfError> {
        let &offset = self
            .offsets
            .get(&r)
            .ok_or(PdfError::MissingObject(r.0, r.1))?;
        let mut lex = Lexer::at(&self.bytes, offset);
        let num = lex
            .parse_object()
            .map_err(|e| PdfError::Structure(e.to_string()))?;
        let gen = lex
            .parse_object()
            .map_err(|e| PdfError::Structure(e.to_string()))?;
        if num.as_int() != Some(r.0 as i64) || gen.as_int() != Some(r.1 as i64) {
            return Err(PdfError::Structure(format!(
                "object header mismatch for {} {}",
                r.0, r.1
            )));
        }
        lex.expect_keyword("obj")
            .map_err(|e| PdfError::Structure(e.to_string()))?;
        lex.parse_object()
            .map_err(|e| PdfError::Structure(e.to_string()))
    }

    /// Look up `key` in `dict`, resolving an indirect value.
    pub fn dict_get(&self, dict: &Dict, key: &str) -> Result<Option<Object>, PdfError> {
        match dict.get(key) {
            None => Ok(None),
            Some(v) => self.resolve(v).map(Some),
        }
    }

    /// Decode a content stream, applying /FlateDecode when present.
    pub fn decode_stream(&self, dict: &Dict, data: &[u8]) -> Result<Vec<u8>, PdfError> {
        let filter = self.dict_get(dict, "Filter")?;
        let names: Vec<String> = match filter {
            None => Vec::new(),
            Some(Object::Name(n)) => vec![n],
            Some(Object::Array(items)) => items
                .iter()
                .filter_map(|o| o.as_name().map(str::to_owned))
                .collect(),
            Some(other) => {
                return Err(PdfError::Structure(format!(
                    "unsupported /Filter value {other:?}"
                )))
            }
        };
        let mut out = data.to_vec();
        for name in names {
            match name.as_str() {
                "FlateDecode" => {
                    let mut decoder = ZlibDecoder::new(out.as_slice());
                    let mut decoded = Vec::new();
                    decoder
                        .read_to_end(&mut decoded)
                        .map_err(|e| PdfError::Structure(format!("flate decode failed: {e}")))?;
                    out = decoded;
                }
                other => return Err(PdfError::UnsupportedFilter(other.to_string())),
            }
        }
        Ok(out)
    }

    /// Walk the page tree in document order, applying MediaBox inheritance.
    pub fn pages(&self) -> Result<Vec<Page>, PdfError> {
        let catalog = self.catalog()?;
        let pages_root = self
            .dict_get(&catalog, "Pages")?
            .ok_or_else(|| PdfError::Structure("catalog has no /Pages".into()))?;
        let root_dict = pages_root
            .as_dict()
            .cloned()
            .ok_or_else(|| PdfError::Structure("/Pages is not a dictionary".into()))?;
        let mut pages = Vec::new();
        self.collect_pages(&root_dict, None, &mut pages, 0)?;
        Ok(pages)
    }

    fn collect_pages(
        &self,
        node: &Dict,
        inherited_media: Option<[f64; 4]>,
        out: &mut Vec<Page>,
        depth: usize,
    ) -> Result<(), PdfError> {
        if depth > 64 {
            return Err(PdfError::Structure("page tree too deep".into()));
        }
        let media = match self.dict_get(node, "MediaBox")? {
            Some(obj) => Some(read_rect(&obj)?),
            None => inherited_media,
        };
        match self.dict_get(node, "Type")?.as_ref().and_then(Object::as_name) {
            Some("Pages") | None => {
                let kids = self
                    .dict_get(node, "Kids")?
                    .ok_or_else(|| PdfError::Structure("page tree node has no /Kids".into()))?;
                let kids = kids
                    .as_array()
                    .ok_or_else(|| PdfError::Structure("/Kids is not an array".into()))?
                    .to_vec();
                for kid in kids {
                    let kid_obj = self.resolve(&kid)?;
                    let kid_dict = kid_obj.as_dict().cloned().ok_or_else(|| {
                        PdfError::Structure("page tree kid is not a dictionary".into())
                    })?;
                    self.collect_pages(&kid_dict, media, out, depth + 1)?;
                }
            }
            Some("Page") => {
                let media_box = media.unwrap_or([0.0, 0.0, 612.0, 792.0]);
                out.push(Page {
                    dict: node.clone(),
                    media_box,
                });
            }
            Some(other) => {
                return Err(PdfError::Structure(format!(
                    "unexpected page tree node type /{other}"
                )))
            }
        }
        Ok(())
    }

    /// Concatenated, decoded content bytes for a page (the /Contents entry
    /// may be a single stream or an array of streams).
    pub fn page_content(&self, page: &Page) -> Result<Vec<u8>, PdfError> {
        let contents = match self.dict_get(&page.dict, "Contents")? {
            None => return Ok(Vec::new()),
            Some(c) => c,
        };
        let mut out = Vec::new();
        let streams: Vec<Object> = match contents {
            Object::Array(items) => items
                .iter()
                .map(|o| self.resolve(o))
                .collect::<Result<_, _>>()?,
            single => vec![single],
        };
        for stream in streams {
            match stream {
                Object::Stream { dict, data } => {
                    out.extend_from_slice(&self.decode_stream(&dict, &data)?);
                    // Streams in an array are implicitly separated.
                    out.push(b'\n');
                }
                other => {
                    return Err(PdfError::Structure(format!(
                        "/Contents entry is not a stream: {other:?}"
                    )))
                }
            }
        }
        Ok(out)
    }

}

fn read_rect(obj: &Object) -> Result<[f64; 4], PdfError> {
    let items = obj
        .as_array()
        .ok_or_else(|| PdfError::Structure("rectangle is not an array".into()))?;
    if items.len() != 4 {
        return Err(PdfError::Structure("rectangle must have 4 numbers".into()));
    }
    let mut vals = [0.0; 4];
    for (i, item) in items.iter().enumerate() {
        vals[i] = item
            .as_f64()
            .ok_or_else(|| PdfError::Structure("rectangle entry is not a number".into()))?;
    }
    // Normalize so x0 <= x1, y0 <= y1.
    Ok([
        vals[0].min(vals[2]),
        vals[1].min(vals[3]),
        vals[0].max(vals[2]),
        vals[1].max(vals[3]),
    ])
}

/// Locate `startxref`, then walk the trailer /Prev chain collecting offsets.
/// Earlier entries must not shadow later ones, so the newest table wins.
fn parse_xref_chain(bytes: &[u8]) -> Result<(BTreeMap<ObjRef, usize>, Dict), PdfError> {
    let tail_start = bytes.len().saturating_sub(1024);
    let tail = &bytes[tail_start..];
    let idx = rfind_subsequence(tail, b"startxref")
        .ok_or_else(|| PdfError::Structure("startxref not found".into()))?;
    let mut lex = Lexer::at(bytes, tail_start + idx + b"startxref".len());
    let offset = lex
        .parse_object()
        .map_err(|e| PdfError::Structure(e.to_string()))?
        .as_int()
        .ok_or_else(|| PdfError::Structure("startxref offset is not an integer".into()))?;

    let mut offsets = BTreeMap::new();
    let mut trailer: Option<Dict> = None;
    let mut next = Some(offset as usize);
    let mut visited = Vec::new();
    while let Some(pos) = next {
        if pos >= bytes.len() || visited.contains(&pos) {
            return Err(PdfError::Structure("bad xref offset".into()));
        }
        visited.push(pos);
        let (section_offsets, section_trailer) = parse_xref_section(bytes, pos)?;
        for (r, off) in section_offsets {
            // First-seen wins: the newest section is parsed first.
            offsets.entry(r).or_insert(off);
        }
        next = match section_trailer.get("Prev").and_then(Object::as_int) {
            Some(p) if p >= 0 => Some(p as usize),
            _ => None,
        };
        if trailer.is_none() {
            trailer = Some(section_trailer);
        }
    }
    let trailer = trailer.ok_or_else(|| PdfError::Structure("no trailer found".into()))?;
    if offsets.is_empty() {
        return Err(PdfError::Structure("empty cross-reference table".into()));
    }
    Ok((offsets, trailer))
}

fn parse_xref_section(
    bytes: &[u8],
    pos: usize,
) -> Result<(BTreeMap<ObjRef, usize>, Dict), PdfError> {
    let mut lex = Lexer::at(bytes, pos);
    if !lex.try_keyword(b"xref") {
        return Err(PdfError::Structure(
            "xref keyword not at expected offset (cross-reference streams are not supported)"
                .into(),
        ));
    }
    let mut offsets = BTreeMap::new();
    loop {
        if lex.try_keyword(b"trailer") {
            break;
        }
        let start = lex
            .parse_object()
            .map_err(|e| PdfError::Structure(e.to_string()))?
            .as_int()
            .ok_or_else(|| PdfError::Structure("bad xref subsection header".into()))?;
        let count = lex
            .parse_object()
            .map_err(|e| PdfError::Structure(e.to_string()))?
            .as_int()
            .ok_or_else(|| PdfError::Structure("bad xref subsection header".into()))?;
        if start < 0 || count < 0 {
            return Err(PdfError::Structure("negative xref subsection header".into()));
        }
        for i in 0..count {
            lex.skip_ws();
            // Entries are fixed-width "nnnnnnnnnn ggggg n\r\n" records, but
            // token-level parsing tolerates loose whitespace.
            let off_tok = lex.read_token().to_vec();
            lex.skip_ws();
            let gen_tok = lex.read_token().to_vec();
            lex.skip_ws();
            let kind = lex.read_token().to_vec();
            if kind == b"n" {
                let off: usize = String::from_utf8_lossy(&off_tok)
                    .parse()
                    .map_err(|_| PdfError::Structure("bad xref entry offset".into()))?;
                let gen: u16 = String::from_utf8_lossy(&gen_tok)
                    .parse()
                    .map_err(|_| PdfError::Structure("bad xref entry generation".into()))?;
                offsets.insert(ObjRef((start + i) as u32, gen), off);
            } else if kind != b"f" {
                return Err(PdfError::Structure("bad xref entry type".into()));
            }
        }
    }
    let trailer_obj = lex
        .parse_object()
        .map_err(|e| PdfError::Structure(e.to_string()))?;
    let trailer = trailer_obj
        .as_dict()
        .cloned()
        .ok_or_else(|| PdfError::Structure("trailer is not a dictionary".into()))?;
    Ok((offsets, trailer))
}

/// Recovery path: scan the whole file for `N G obj` headers and take the
/// last definition of each object. The trailer is recovered from the last
/// `trailer` keyword, or synthesized by locating a /Type /Catalog object.
fn scan_objects(bytes: &[u8]) -> Result<(BTreeMap<ObjRef, usize>, Dict), PdfError> {
    let mut offsets = BTreeMap::new();
    let mut i = 0usize;
    while i < bytes.len() {
        if let Some(rel) = find_subsequence(&bytes[i..], b" obj") {
            let obj_at = i + rel;
            // Walk back over "N G" preceding " obj".
            let header_start = backtrack_object_header(bytes, obj_at);
            if let Some(start) = header_start {
                let mut lex = Lexer::at(bytes, start);
                if let (Ok(Object::Int(num)), Ok(Object::Int(gen))) =
                    (lex.parse_object(), lex.parse_object())
                {
                    if num >= 0 && (0..=u16::MAX as i64).contains(&gen) {
                        offsets.insert(ObjRef(num as u32, gen as u16), start);
                    }
                }
            }
            i = obj_at + 4;
        } else {
            break;
        }
    }
    if offsets.is_empty() {
        return Err(PdfError::Structure("no objects found in file".into()));
    }

    // Prefer a real trailer dictionary if one survives.
    if let Some(idx) = rfind_subsequence(bytes, b"trailer") {
        let mut lex = Lexer::at(bytes, idx + b"trailer".len());
        if let Ok(obj) = lex.parse_object() {
            if let Some(dict) = obj.as_dict() {
                if dict.contains_key("Root") {
                    return Ok((offsets, dict.clone()));
                }
            }
        }
    }
    // Otherwise find the catalog by inspection.
    for (&r, &off) in &offsets {
        let mut lex = Lexer::at(bytes, off);
        let _ = lex.parse_object();
        let _ = lex.parse_object();
        if lex.expect_keyword("obj").is_err() {
            continue;
        }
        if let Ok(obj) = lex.parse_object() {
            if let Some(dict) = obj.as_dict() {
                if dict.get("Type").and_then(Object::as_name) == Some("Catalog") {
                    let mut trailer = Dict::new();
                    trailer.insert("Root".into(), Object::Ref(r));
                    return Ok((offsets, trailer));
                }
            }
        }
    }
    Err(PdfError::Structure("could not locate document catalog".into()))
}

fn backtrack_object_header(bytes: &[u8], obj_at: usize) -> Option<usize> {
    let mut j = obj_at;
    // generation digits
    let gen_end = j;
    while j > 0 && bytes[j - 1].is_ascii_digit() {
        j -= 1;
    }
    if j == gen_end {
        return None;
    }
    // single space
    if j == 0 || bytes[j - 1] != b' ' {
        return None;
    }
    j -= 1;
    // object number digits
    let num_end = j;
    while j > 0 && bytes[j - 1].is_ascii_digit() {
        j -= 1;
    }
    if j == num_end {
        return None;
    }
    Some(j)
}

fn rfind_subsequence(haystack: &[u8], needle: &[u8]) -> Option<usize> {
    if needle.is_empty() || haystack.len() < needle.len() {
        return None;
    }
    (0..=haystack.len() - needle.len()).rev().find(|&i| &haystack[i..i + needle.len()] == needle)
}
