//! Content-stream interpreter for the text operators.
//!
//! Tracks the CTM and text matrices through q/Q, cm, and the BT..ET text
//! object operators, and emits one raw span per shown string. Glyph widths
//! are approximated at 0.5 em since embedded font metrics are not read;
//! files produced by the bundled writer use the same approximation, so
//! positions round-trip exactly.

use super::object::{Lexer, Object};

/// Fraction of the font size charged per glyph advance.
pub const GLYPH_WIDTH_EM: f64 = 0.5;

/// One shown string, positioned on its baseline in page space.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSpan {
    pub text: String,
    pub x0: f64,
    pub x1: f64,
    /// Baseline y (origin at the page's lower-left corner).
    pub baseline: f64,
    /// Font size after matrix scaling.
    pub font_size: f64,
}

#[derive(Debug, Default)]
pub struct InterpretOutput {
    pub spans: Vec<RawSpan>,
    /// Shown strings discarded because the text orientation was not upright.
    pub dropped_rotated: usize,
    /// Lexing or operator problems survived while reading the stream.
    pub parse_warnings: usize,
}

/// Row-vector affine transform [a b c d e f]:
/// x' = a·x + c·y + e, y' = b·x + d·y + f.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Matrix {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
    e: f64,
    f: f64,
}

impl Matrix {
    const IDENTITY: Matrix = Matrix {
        a: 1.0,
        b: 0.0,
        c: 0.0,
        d: 1.0,
        e: 0.0,
        f: 0.0,
    };

    fn translation(tx: f64, ty: f64) -> Matrix {
        Matrix {
            e: tx,
            f: ty,
            ..Matrix::IDENTITY
        }
    }

    /// self × other (apply self first).
    fn mul(self, other: Matrix) -> Matrix {
        Matrix {
            a: self.a * other.a + self.b * other.c,
            b: self.a * other.b + self.b * other.d,
            c: self.c * other.a + self.d * other.c,
            d: self.c * other.b + self.d * other.d,
            e: self.e * other.a + self.f * other.c + other.e,
            f: self.e * other.b + self.f * other.d + other.f,
        }
    }

    fn apply(self, x: f64, y: f64) -> (f64, f64) {
        (
            self.a * x + self.c * y + self.e,
            self.b * x + self.d * y + self.f,
        )
    }
}

#[derive(Debug, Clone, Copy)]
struct TextState {
    font_size: f64,
    char_spacing: f64,
    word_spacing: f64,
    /// Horizontal scaling as a fraction (Tz operand / 100).
    h_scale: f64,
    leading: f64,
    rise: f64,
}

impl Default for TextState {
    fn default() -> Self {
        Self {
            font_size: 0.0,
            char_spacing: 0.0,
            word_spacing: 0.0,
            h_scale: 1.0,
            leading: 0.0,
            rise: 0.0,
        }
    }
}

struct Interpreter {
    ctm: Matrix,
    text: TextState,
    /// (ctm, text) pairs saved by q.
    stack: Vec<(Matrix, TextState)>,
    tm: Matrix,
    tlm: Matrix,
    out: InterpretOutput,
}

const EPS: f64 = 1e-9;

impl Interpreter {
    fn new() -> Self {
        Self {
            ctm: Matrix::IDENTITY,
            text: TextState::default(),
            stack: Vec::new(),
            tm: Matrix::IDENTITY,
            tlm: Matrix::IDENTITY,
            out: InterpretOutput::default(),
        }
    }

    fn next_line(&mut self, tx: f64, ty: f64) {
        self.tlm = Matrix::translation(tx, ty).mul(self.tlm);
        self.tm = self.tlm;
    }

    fn show(&mut self, bytes: &[u8]) {
        if bytes.is_empty() {
            return;
        }
        let m = self.tm.mul(self.ctm);
        let upright = m.b.abs() < EPS && m.c.abs() < EPS && m.a > EPS && m.d > EPS;
        let (start_x, _) = m.apply(0.0, 0.0);
        let (_, baseline) = m.apply(0.0, self.text.rise);

        let mut advance = 0.0f64; // text-space x displacement
        let mut text = String::with_capacity(bytes.len());
        for &b in bytes {
            // Single-byte encodings in the supported subset map through
            // Latin-1; ASCII is the practical alphabet.
            text.push(b as char);
            let mut tx = GLYPH_WIDTH_EM * self.text.font_size + self.text.char_spacing;
            if b == b' ' {
                tx += self.text.word_spacing;
            }
            advance += tx * self.text.h_scale;
        }
        let end = Matrix::translation(advance, 0.0).mul(self.tm);
        let (end_x, _) = end.mul(self.ctm).apply(0.0, 0.0);
        // The advance moves the text matrix whether or not the glyphs were
        // kept, so later positioning stays coherent.
        self.tm = end;

        if !upright {
            self.out.dropped_rotated += 1;
            return;
        }
        self.out.spans.push(RawSpan {
            text,
            x0: start_x,
            x1: end_x,
            baseline,
            font_size: self.text.font_size * m.d,
        });
    }

    fn run(&mut self, content: &[u8]) {
        let mut lex = Lexer::new(content);
        let mut operands: Vec<Object> = Vec::new();
        loop {
            lex.skip_ws();
            let b = match lex.peek() {
                None => break,
                Some(b) => b,
            };
            let is_operand_start = matches!(b, b'/' | b'(' | b'<' | b'[' | b'+' | b'-' | b'.')
                || b.is_ascii_digit();
            if is_operand_start {
                match lex.parse_object() {
                    Ok(obj) => {
                        operands.push(obj);
                        continue;
                    }
                    Err(_) => {
                        self.out.parse_warnings += 1;
                        break;
                    }
                }
            }
            let op = lex.read_token().to_vec();
            if op.is_empty() {
                // A stray delimiter byte; skip it rather than spinning.
                lex.pos += 1;
                self.out.parse_warnings += 1;
                operands.clear();
                continue;
            }
            self.execute(&op, &operands, &mut lex);
            operands.clear();
        }
    }

    fn execute(&mut self, op: &[u8], operands: &[Object], lex: &mut Lexer<'_>) {
        let num = |i: usize| -> Option<f64> { operands.get(i).and_then(Object::as_f64) };
        match op {
            b"q" => self.stack.push((self.ctm, self.text)),
            b"Q" => {
                if let Some((ctm, text)) = self.stack.pop() {
                    self.ctm = ctm;
                    self.text = text;
                }
            }
            b"cm" => {
                if let (Some(a), Some(b), Some(c), Some(d), Some(e), Some(f)) =
                    (num(0), num(1), num(2), num(3), num(4), num(5))
                {
                    self.ctm = Matrix { a, b, c, d, e, f }.mul(self.ctm);
                }
            }
            b"BT" => {
                self.tm = Matrix::IDENTITY;
                self.tlm = Matrix::IDENTITY;
            }
            b"ET" => {}
            b"Tf" => {
                // Operand 0 names the font resource; metrics are not read,
                // so only the size matters here.
                if let Some(size) = num(1) {
                    self.text.font_size = size;
                }
            }
            b"Td" => {
                if let (Some(tx), Some(ty)) = (num(0), num(1)) {
                    self.next_line(tx, ty);
                }
            }
            b"TD" => {
                if let (Some(tx), Some(ty)) = (num(0), num(1)) {
                    self.text.leading = -ty;
                    self.next_line(tx, ty);
                }
            }
            b"Tm" => {
                if let (Some(a), Some(b), Some(c), Some(d), Some(e), Some(f)) =
                    (num(0), num(1), num(2), num(3), num(4), num(5))
                {
                    self.tm = Matrix { a, b, c, d, e, f };
                    self.tlm = self.tm;
                }
            }
            b"T*" => self.next_line(0.0, -self.text.leading),
            b"TL" => {
                if let Some(l) = num(0) {
                    self.text.leading = l;
                }
            }
            b"Tc" => {
                if let Some(c) = num(0) {
                    self.text.char_spacing = c;
                }
            }
            b"Tw" => {
                if let Some(w) = num(0) {
                    self.text.word_spacing = w;
                }
            }
            b"Tz" => {
                if let Some(s) = num(0) {
                    self.text.h_scale = s / 100.0;
                }
            }
            b"Ts" => {
                if let Some(r) = num(0) {
                    self.text.rise = r;
                }
            }
            b"Tj" => {
                if let Some(Object::Str(s)) = operands.first() {
                    self.show(&s.clone());
                } else {
                    self.out.parse_warnings += 1;
                }
            }
            b"'" => {
                self.next_line(0.0, -self.text.leading);
                if let Some(Object::Str(s)) = operands.first() {
                    self.show(&s.clone());
                } else {
                    self.out.parse_warnings += 1;
                }
            }
            b"\"" => {
                if let (Some(aw), Some(ac)) = (num(0), num(1)) {
                    self.text.word_spacing = aw;
                    self.text.char_spacing = ac;
                }
                self.next_line(0.0, -self.text.leading);
                if let Some(Object::Str(s)) = operands.get(2) {
                    self.show(&s.clone());
                } else {
                    self.out.parse_warnings += 1;
                }
            }
            b"TJ" => {
                if let Some(Object::Array(items)) = operands.first() {
                    for item in items.clone() {
                        match item {
                            Object::Str(s) => self.show(&s),
                            Object::Int(_) | Object::Real(_) => {
                                let n = item.as_f64().unwrap_or(0.0);
                                let tx = -n / 1000.0
                                    * self.text.font_size
                                    * self.text.h_scale;
                                self.tm = Matrix::translation(tx, 0.0).mul(self.tm);
                            }
                            _ => self.out.parse_warnings += 1,
                        }
                    }
                } else {
                    self.out.parse_warnings += 1;
                }
            }
            b"BI" => {
                // Inline image: skip past EI. Not produced by the supported
                // subset, but survivable when present.
                let rest = &lex.bytes[lex.pos..];
                match super::object::find_subsequence(rest, b"EI") {
                    Some(idx) => lex.pos += idx + 2,
                    None => lex.pos = lex.bytes.len(),
                }
                self.out.parse_warnings += 1;
            }
            // Path, color, state, and XObject operators carry no text.
            _ => {}
        }
    }
}

/// Interpret decoded content bytes into positioned raw spans.
pub fn interpret(content: &[u8]) -> InterpretOutput {
    let mut interp = Interpreter::new();
    interp.run(content);
    interp.out
}
