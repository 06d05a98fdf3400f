//! PDF object model and tokenizer.
//!
//! Covers the object syntax needed for text extraction: numbers, names,
//! strings (literal and hex), arrays, dictionaries, streams, and indirect
//! references. Lexing operates on raw bytes since PDF files are binary.

use std::collections::BTreeMap;
use std::fmt;

pub type Dict = BTreeMap<String, Object>;

/// Reference to an indirect object: (object number, generation).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ObjRef(pub u32, pub u16);

#[derive(Debug, Clone, PartialEq)]
pub enum Object {
    Null,
    Bool(bool),
    Int(i64),
    Real(f64),
    /// Decoded bytes of a literal or hex string.
    Str(Vec<u8>),
    Name(String),
    Array(Vec<Object>),
    Dict(Dict),
    /// Stream dictionary plus the raw (still encoded) stream bytes.
    Stream { dict: Dict, data: Vec<u8> },
    Ref(ObjRef),
}

impl Object {
    pub fn as_int(&self) -> Option<i64> {
        match self {
            Object::Int(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Object::Int(v) => Some(*v as f64),
            Object::Real(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_name(&self) -> Option<&str> {
        match self {
            Object::Name(n) => Some(n),
            _ => None,
        }
    }

    pub fn as_dict(&self) -> Option<&Dict> {
        match self {
            Object::Dict(d) => Some(d),
            Object::Stream { dict, .. } => Some(dict),
            _ => None,
        }
    }

    pub fn as_array(&self) -> Option<&[Object]> {
        match self {
            Object::Array(items) => Some(items),
            _ => None,
        }
    }

}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexError {
    pub offset: usize,
    pub message: String,
}

impl fmt::Display for LexError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at byte {}: {}", self.offset, self.message)
    }
}

fn is_whitespace(b: u8) -> bool {
    matches!(b, b'\0' | b'\t' | b'\n' | 0x0c | b'\r' | b' ')
}

fn is_delimiter(b: u8) -> bool {
    matches!(
        b,
        b'(' | b')' | b'<' | b'>' | b'[' | b']' | b'{' | b'}' | b'/' | b'%'
    )
}

fn is_regular(b: u8) -> bool {
    !is_whitespace(b) && !is_delimiter(b)
}

/// Byte-level cursor over PDF object syntax.
pub struct Lexer<'a> {
    pub bytes: &'a [u8],
    pub pos: usize,
}

impl<'a> Lexer<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    pub fn at(bytes: &'a [u8], pos: usize) -> Self {
        Self { bytes, pos }
    }

    fn err(&self, message: impl Into<String>) -> LexError {
        LexError {
            offset: self.pos,
            message: message.into(),
        }
    }

    pub fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    pub fn eof(&self) -> bool {
        self.pos >= self.bytes.len()
    }

    /// Skip whitespace and `%` comments.
    pub fn skip_ws(&mut self) {
        loop {
            while let Some(b) = self.peek() {
                if is_whitespace(b) {
                    self.pos += 1;
                } else {
                    break;
                }
            }
            if self.peek() == Some(b'%') {
                while let Some(b) = self.peek() {
                    self.pos += 1;
                    if b == b'\n' {
                        break;
                    }
                    if b == b'\r' {
                        if self.peek() == Some(b'\n') {
                            self.pos += 1;
                        }
                        break;
                    }
                }
            } else {
                return;
            }
        }
    }

    /// Read the next run of regular characters (keyword or number body).
    pub fn read_token(&mut self) -> &'a [u8] {
        let start = self.pos;
        while let Some(b) = self.peek() {
            if is_regular(b) {
                self.pos += 1;
            } else {
                break;
            }
        }
        &self.bytes[start..self.pos]
    }

    /// Consume `keyword` if it is the next token; leaves position untouched otherwise.
    pub fn try_keyword(&mut self, keyword: &[u8]) -> bool {
        let save = self.pos;
        self.skip_ws();
        let tok = self.read_token();
        if tok == keyword {
            true
        } else {
            self.pos = save;
            false
        }
    }

    pub fn expect_keyword(&mut self, keyword: &str) -> Result<(), LexError> {
        if self.try_keyword(keyword.as_bytes()) {
            Ok(())
        } else {
            Err(self.err(format!("expected keyword '{keyword}'")))
        }
    }

    /// Parse one object. Indirect references (`n g R`) are recognized by lookahead.
    pub fn parse_object(&mut self) -> Result<Object, LexError> {
        self.skip_ws();
        match self.peek() {
            None => Err(self.err("unexpected end of data")),
            Some(b'/') => self.parse_name().map(Object::Name),
            Some(b'(') => self.parse_literal_string().map(Object::Str),
            Some(b'<') => {
                if self.bytes.get(self.pos + 1) == Some(&b'<') {
                    self.parse_dict_or_stream()
                } else {
                    self.parse_hex_string().map(Object::Str)
                }
            }
            Some(b'[') => {
                self.pos += 1;
                let mut items = Vec::new();
                loop {
                    self.skip_ws();
                    if self.peek() == Some(b']') {
                        self.pos += 1;
                        return Ok(Object::Array(items));
                    }
                    if self.eof() {
                        return Err(self.err("unterminated array"));
                    }
                    items.push(self.parse_object()?);
                }
            }
            Some(b) if b == b'+' || b == b'-' || b == b'.' || b.is_ascii_digit() => {
                self.parse_number_or_ref()
            }
            _ => {
                let tok = self.read_token();
                match tok {
                    b"true" => Ok(Object::Bool(true)),
                    b"false" => Ok(Object::Bool(false)),
                    b"null" => Ok(Object::Null),
                    _ => Err(self.err(format!(
                        "unexpected token '{}'",
                        String::from_utf8_lossy(tok)
                    ))),
                }
            }
        }
    }

    fn parse_number_or_ref(&mut self) -> Result<Object, LexError> {
        let first = self.parse_number()?;
        if let Object::Int(num) = first {
            if num >= 0 {
                // Lookahead for "gen R".
                let save = self.pos;
                self.skip_ws();
                let gen_tok = self.read_token().to_vec();
                if !gen_tok.is_empty() && gen_tok.iter().all(|b| b.is_ascii_digit()) {
                    let save2 = self.pos;
                    self.skip_ws();
                    let r_tok = self.read_token();
                    if r_tok == b"R" {
                        let gen: u16 = String::from_utf8_lossy(&gen_tok).parse().unwrap_or(0);
                        return Ok(Object::Ref(ObjRef(num as u32, gen)));
                    }
                    self.pos = save2;
                }
                self.pos = save;
            }
        }
        Ok(first)
    }

    pub fn parse_number(&mut self) -> Result<Object, LexError> {
        self.skip_ws();
        let start = self.pos;
        let tok = self.read_token();
        if tok.is_empty() {
            return Err(self.err("expected number"));
        }
        let text = String::from_utf8_lossy(tok);
        if text.contains('.') {
            // PDF reals allow forms like ".5", "-.5", "4.".
            let normalized = text.trim_end_matches('.');
            let v: f64 = if normalized.is_empty() || normalized == "-" || normalized == "+" {
                0.0
            } else {
                normalized.parse().map_err(|_| LexError {
                    offset: start,
                    message: format!("bad real '{text}'"),
                })?
            };
            Ok(Object::Real(v))
        } else {
            let v: i64 = text.parse().map_err(|_| LexError {
                offset: start,
                message: format!("bad integer '{text}'"),
            })?;
            Ok(Object::Int(v))
        }
    }

    pub fn parse_name(&mut self) -> Result<String, LexError> {
        if self.peek() != Some(b'/') {
            return Err(self.err("expected name"));
        }
        self.pos += 1;
        let mut out = Vec::new();
        while let Some(b) = self.peek() {
            if !is_regular(b) {
                break;
            }
            self.pos += 1;
            if b == b'#' {
                let h1 = self.peek().and_then(hex_val);
                if let Some(h1) = h1 {
                    self.pos += 1;
                    let h2 = self.peek().and_then(hex_val);
                    if let Some(h2) = h2 {
                        self.pos += 1;
                        out.push(h1 * 16 + h2);
                        continue;
                    }
                }
                out.push(b'#');
            } else {
                out.push(b);
            }
        }
        Ok(String::from_utf8_lossy(&out).into_owned())
    }

    fn parse_literal_string(&mut self) -> Result<Vec<u8>, LexError> {
        debug_assert_eq!(self.peek(), Some(b'('));
        self.pos += 1;
        let mut out = Vec::new();
        let mut depth = 1usize;
        while let Some(b) = self.peek() {
            self.pos += 1;
            match b {
                b'(' => {
                    depth += 1;
                    out.push(b);
                }
                b')' => {
                    depth -= 1;
                    if depth == 0 {
                        return Ok(out);
                    }
                    out.push(b);
                }
                b'\\' => {
                    let esc = match self.peek() {
                        Some(e) => e,
                        None => break,
                    };
                    self.pos += 1;
                    match esc {
                        b'n' => out.push(b'\n'),
                        b'r' => out.push(b'\r'),
                        b't' => out.push(b'\t'),
                        b'b' => out.push(0x08),
                        b'f' => out.push(0x0c),
                        b'(' | b')' | b'\\' => out.push(esc),
                        b'\r' => {
                            // Line continuation; swallow optional LF.
                            if self.peek() == Some(b'\n') {
                                self.pos += 1;
                            }
                        }
                        b'\n' => {}
                        b'0'..=b'7' => {
                            let mut v = (esc - b'0') as u32;
                            for _ in 0..2 {
                                match self.peek() {
                                    Some(d @ b'0'..=b'7') => {
                                        v = v * 8 + (d - b'0') as u32;
                                        self.pos += 1;
                                    }
                                    _ => break,
                                }
                            }
                            out.push((v & 0xff) as u8);
                        }
                        other => out.push(other),
                    }
                }
                b'\r' => {
                    // EOL inside a string is recorded as LF.
                    if self.peek() == Some(b'\n') {
                        self.pos += 1;
                    }
                    out.push(b'\n');
                }
                other => out.push(other),
            }
        }
        Err(self.err("unterminated literal string"))
    }

    fn parse_hex_string(&mut self) -> Result<Vec<u8>, LexError> {
        debug_assert_eq!(self.peek(), Some(b'<'));
        self.pos += 1;
        let mut digits = Vec::new();
        while let Some(b) = self.peek() {
            self.pos += 1;
            if b == b'>' {
                if digits.len() % 2 == 1 {
                    digits.push(0);
                }
                return Ok(digits
                    .chunks(2)
                    .map(|pair| pair[0] * 16 + pair[1])
                    .collect());
            }
            if let Some(v) = hex_val(b) {
                digits.push(v);
            } else if !is_whitespace(b) {
                return Err(self.err("bad hex digit in string"));
            }
        }
        Err(self.err("unterminated hex string"))
    }

    fn parse_dict_or_stream(&mut self) -> Result<Object, LexError> {
        self.pos += 2; // <<
        let mut dict = Dict::new();
        loop {
            self.skip_ws();
            if self.peek() == Some(b'>') && self.bytes.get(self.pos + 1) == Some(&b'>') {
                self.pos += 2;
                break;
            }
            if self.eof() {
                return Err(self.err("unterminated dictionary"));
            }
            let key = self.parse_name()?;
            let value = self.parse_object()?;
            dict.insert(key, value);
        }
        // A stream keyword may follow a dictionary.
        let save = self.pos;
        self.skip_ws();
        let tok = self.read_token();
        if tok == b"stream" {
            // Skip the required EOL after the keyword.
            if self.peek() == Some(b'\r') {
                self.pos += 1;
            }
            if self.peek() == Some(b'\n') {
                self.pos += 1;
            }
            let start = self.pos;
            let data = match dict.get("Length").and_then(Object::as_int) {
                Some(len) if len >= 0 && start + len as usize <= self.bytes.len() => {
                    let end = start + len as usize;
                    self.pos = end;
                    self.bytes[start..end].to_vec()
                }
                _ => {
                    // Length missing or indirect: scan for the terminator.
                    let hay = &self.bytes[start..];
                    let idx = find_subsequence(hay, b"endstream")
                        .ok_or_else(|| self.err("stream without endstream"))?;
                    let mut end = start + idx;
                    // Trim the EOL that precedes endstream.
                    if end > start && self.bytes[end - 1] == b'\n' {
                        end -= 1;
                        if end > start && self.bytes[end - 1] == b'\r' {
                            end -= 1;
                        }
                    } else if end > start && self.bytes[end - 1] == b'\r' {
                        end -= 1;
                    }
                    self.pos = end;
                    self.bytes[start..end].to_vec()
                }
            };
            self.skip_ws();
            let _ = self.try_keyword(b"endstream");
            Ok(Object::Stream { dict, data })
        } else {
            self.pos = save;
            Ok(Object::Dict(dict))
        }
    }
}

fn hex_val(b: u8) -> Option<u8> {
    match b {
        b'0'..=b'9' => Some(b - b'0'),
        b'a'..=b'f' => Some(b - b'a' + 10),
        b'A'..=b'F' => Some(b - b'A' + 10),
        _ => None,
    }
}

pub fn find_subsequence(haystack: &[u8], needle: &[u8]) -> Option<usize> {
    if needle.is_empty() || haystack.len() < needle.len() {
        return None;
    }
    haystack
        .windows(needle.len())
        .position(|window| window == needle)
}
