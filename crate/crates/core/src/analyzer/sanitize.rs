//! Masks comments and string/template literal text out of JavaScript source.
//!
//! The masked text has the same byte length and line structure as the input:
//! every masked byte becomes a space except `\n` and `\r`. Template literal
//! interpolations (`${ ... }`) are code and stay visible, including nested
//! templates inside them. Regular expression literals are recognized so that
//! quotes inside them do not open strings, but they are not masked.

use std::ops::Range;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sanitized {
    pub masked: String,
    /// Quoted strings (delimiters included) and template text chunks
    /// (from the opening `` ` `` or `}` through the closing `` ` `` or `${`).
    pub string_spans: Vec<Range<usize>>,
    pub comment_spans: Vec<Range<usize>>,
    /// Descriptions of constructs that ran to end of input.
    pub unterminated: Vec<String>,
}

impl Sanitized {
    pub fn in_masked_region(&self, offset: usize) -> bool {
        self.string_spans.iter().chain(&self.comment_spans).any(|r| r.contains(&offset))
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Frame {
    Brace,
    TemplateHole,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Prev {
    Start,
    /// An operand just ended: `/` is division.
    Operand,
    /// An operator, keyword or opening bracket: `/` starts a regex.
    Operator,
}

const REGEX_KEYWORDS: &[&str] = &[
    "return", "typeof", "instanceof", "in", "of", "new", "delete", "void", "throw", "case", "do", "else",
    "yield", "await",
];

fn is_ident_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_' || b == b'$' || b >= 0x80
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    strings: Vec<Range<usize>>,
    comments: Vec<Range<usize>>,
    unterminated: Vec<String>,
    frames: Vec<Frame>,
    prev: Prev,
}

impl<'a> Lexer<'a> {
    fn peek(&self, ahead: usize) -> Option<u8> {
        self.src.get(self.pos + ahead).copied()
    }

    fn line_of(&self, offset: usize) -> usize {
        self.src[..offset].iter().filter(|&&b| b == b'\n').count() + 1
    }

    fn line_comment(&mut self) {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos] != b'\n' {
            self.pos += 1;
        }
        self.comments.push(start..self.pos);
    }

    fn block_comment(&mut self) {
        let start = self.pos;
        self.pos += 2;
        loop {
            if self.pos + 1 >= self.src.len() {
                self.pos = self.src.len();
                self.unterminated.push(format!("block comment at line {}", self.line_of(start)));
                break;
            }
            if self.src[self.pos] == b'*' && self.src[self.pos + 1] == b'/' {
                self.pos += 2;
                break;
            }
            self.pos += 1;
        }
        self.comments.push(start..self.pos);
    }

    fn quoted(&mut self, quote: u8) {
        let start = self.pos;
        self.pos += 1;
        loop {
            match self.peek(0) {
                None => {
                    self.unterminated.push(format!("string at line {}", self.line_of(start)));
                    break;
                }
                Some(b'\\') => self.pos = (self.pos + 2).min(self.src.len()),
                Some(b'\n') => {
                    self.unterminated.push(format!("string at line {}", self.line_of(start)));
                    break;
                }
                Some(b) if b == quote => {
                    self.pos += 1;
                    break;
                }
                Some(_) => self.pos += 1,
            }
        }
        self.strings.push(start..self.pos);
        self.prev = Prev::Operand;
    }

    /// Scans template text starting at the current `` ` `` or `}`.
    fn template_chunk(&mut self) {
        let start = self.pos;
        self.pos += 1;
        loop {
            match self.peek(0) {
                None => {
                    self.unterminated.push(format!("template literal at line {}", self.line_of(start)));
                    self.prev = Prev::Operand;
                    break;
                }
                Some(b'\\') => self.pos = (self.pos + 2).min(self.src.len()),
                Some(b'`') => {
                    self.pos += 1;
                    self.prev = Prev::Operand;
                    break;
                }
                Some(b'$') if self.peek(1) == Some(b'{') => {
                    self.pos += 2;
                    self.frames.push(Frame::TemplateHole);
                    self.prev = Prev::Start;
                    break;
                }
                Some(_) => self.pos += 1,
            }
        }
        self.strings.push(start..self.pos);
    }

    /// Attempts to consume a regex literal; restores position on failure.
    fn regex(&mut self) -> bool {
        let start = self.pos;
        let mut i = self.pos + 1;
        let mut in_class = false;
        while i < self.src.len() {
            match self.src[i] {
                b'\n' => return false,
                b'\\' => i += 1,
                b'[' => in_class = true,
                b']' => in_class = false,
                b'/' if !in_class => {
                    i += 1;
                    while i < self.src.len() && is_ident_byte(self.src[i]) {
                        i += 1;
                    }
                    self.pos = i;
                    self.prev = Prev::Operand;
                    return i > start;
                }
                _ => {}
            }
            i += 1;
        }
        false
    }

    fn run(mut self) -> Sanitized {
        while let Some(b) = self.peek(0) {
            match b {
                b'/' if self.peek(1) == Some(b'/') => self.line_comment(),
                b'/' if self.peek(1) == Some(b'*') => self.block_comment(),
                b'/' => {
                    if self.prev == Prev::Operand || !self.regex() {
                        self.pos += 1;
                        self.prev = Prev::Operator;
                    }
                }
                b'#' if self.pos == 0 && self.peek(1) == Some(b'!') => self.line_comment(),
                b'"' | b'\'' => self.quoted(b),
                b'`' => self.template_chunk(),
                b'{' => {
                    self.frames.push(Frame::Brace);
                    self.pos += 1;
                    self.prev = Prev::Operator;
                }
                b'}' => {
                    if self.frames.pop() == Some(Frame::TemplateHole) {
                        self.template_chunk();
                    } else {
                        self.pos += 1;
                        self.prev = Prev::Operator;
                    }
                }
                b')' | b']' => {
                    self.pos += 1;
                    self.prev = Prev::Operand;
                }
                b if is_ident_byte(b) => {
                    let start = self.pos;
                    while self.peek(0).is_some_and(is_ident_byte) {
                        self.pos += 1;
                    }
                    let word = &self.src[start..self.pos];
                    let is_keyword = REGEX_KEYWORDS.iter().any(|k| k.as_bytes() == word);
                    self.prev = if is_keyword { Prev::Operator } else { Prev::Operand };
                }
                b if b.is_ascii_whitespace() => self.pos += 1,
                _ => {
                    self.pos += 1;
                    self.prev = Prev::Operator;
                }
            }
        }

        let mut out = self.src.to_vec();
        for span in self.strings.iter().chain(&self.comments) {
            for b in &mut out[span.clone()] {
                if *b != b'\n' && *b != b'\r' {
                    *b = b' ';
                }
            }
        }
        Sanitized {
            // spans start and end on ASCII delimiters, so every multi-byte
            // character is either untouched or fully blanked
            masked: String::from_utf8(out).expect("masking preserves UTF-8"),
            string_spans: self.strings,
            comment_spans: self.comments,
            unterminated: self.unterminated,
        }
    }
}

pub fn sanitize_source(js: &str) -> Sanitized {
    Lexer {
        src: js.as_bytes(),
        pos: 0,
        strings: Vec::new(),
        comments: Vec::new(),
        unterminated: Vec::new(),
        frames: Vec::new(),
        prev: Prev::Start,
    }
    .run()
}
