//! Indentation-aware tokenizer.

use super::error::{ScriptError, ScriptErrorKind, Span};

pub const MAX_INDENT_DEPTH: usize = 64;
const TAB_WIDTH: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Name(String),
    Number(f64),
    Str(String),
    /// `# text`; `own_line` is false for a comment trailing code.
    Comment { text: String, own_line: bool },
    Kw(Kw),
    Op(Op),
    Newline,
    Indent,
    Dedent,
    Eof,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kw {
    Def,
    Let,
    If,
    Elif,
    Else,
    For,
    In,
    Try,
    Except,
    As,
    Raise,
    Return,
    Pass,
    And,
    Or,
    Not,
    True,
    False,
    None,
    Import,
    From,
}

impl Kw {
    fn from_ident(s: &str) -> Option<Kw> {
        Some(match s {
            "def" => Kw::Def,
            "let" => Kw::Let,
            "if" => Kw::If,
            "elif" => Kw::Elif,
            "else" => Kw::Else,
            "for" => Kw::For,
            "in" => Kw::In,
            "try" => Kw::Try,
            "except" => Kw::Except,
            "as" => Kw::As,
            "raise" => Kw::Raise,
            "return" => Kw::Return,
            "pass" => Kw::Pass,
            "and" => Kw::And,
            "or" => Kw::Or,
            "not" => Kw::Not,
            "True" => Kw::True,
            "False" => Kw::False,
            "None" => Kw::None,
            "import" => Kw::Import,
            "from" => Kw::From,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Colon,
    Dot,
    Assign,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Star,
    Slash,
    At,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

struct Lexer<'a> {
    src: &'a str,
    chars: Vec<char>,
    pos: usize,
    line: u32,
    col: u32,
    tokens: Vec<Token>,
    indents: Vec<usize>,
    depth: usize,
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, ScriptError> {
    let mut lx = Lexer {
        src,
        chars: src.chars().collect(),
        pos: 0,
        line: 1,
        col: 1,
        tokens: Vec::new(),
        indents: vec![0],
        depth: 0,
    };
    lx.run()?;
    Ok(lx.tokens)
}

impl Lexer<'_> {
    fn err(&self, message: impl Into<String>, span: Span) -> ScriptError {
        ScriptError::new(ScriptErrorKind::Lex, message, span, self.src)
    }

    fn here(&self) -> Span {
        Span::new(self.line, self.col)
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.chars.get(self.pos + n).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn push(&mut self, tok: Tok, span: Span) {
        self.tokens.push(Token { tok, span });
    }

    fn run(&mut self) -> Result<(), ScriptError> {
        let mut at_line_start = true;
        loop {
            if at_line_start && self.depth == 0 {
                at_line_start = false;
                if self.line_start()? {
                    at_line_start = true;
                    continue;
                }
            }
            let Some(c) = self.peek() else { break };
            let span = self.here();
            match c {
                ' ' | '\t' | '\r' => {
                    self.bump();
                }
                '\n' => {
                    self.bump();
                    if self.depth == 0 {
                        self.push(Tok::Newline, span);
                        at_line_start = true;
                    }
                }
                '#' => {
                    let text = self.comment_text();
                    // comments inside brackets are dropped
                    if self.depth == 0 {
                        self.push(Tok::Comment { text, own_line: false }, span);
                    }
                }
                '"' => {
                    let s = self.string()?;
                    self.push(Tok::Str(s), span);
                }
                '\'' => return Err(self.err("strings use double quotes", span)),
                c if c.is_ascii_digit() || (c == '.' && self.peek_at(1).is_some_and(|d| d.is_ascii_digit())) => {
                    let n = self.number()?;
                    self.push(Tok::Number(n), span);
                }
                c if c.is_ascii_alphabetic() || c == '_' => {
                    let mut ident = String::new();
                    while let Some(c) = self.peek() {
                        if c.is_ascii_alphanumeric() || c == '_' {
                            ident.push(c);
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    let tok = match Kw::from_ident(&ident) {
                        Some(kw) => Tok::Kw(kw),
                        None => Tok::Name(ident),
                    };
                    self.push(tok, span);
                }
                _ => {
                    let op = self.operator(span)?;
                    self.push(Tok::Op(op), span);
                }
            }
        }
        // an unclosed bracket is left for the parser to report
        let end = self.here();
        if !matches!(self.tokens.last().map(|t| &t.tok), None | Some(Tok::Newline)) {
            self.push(Tok::Newline, end);
        }
        while self.indents.len() > 1 {
            self.indents.pop();
            self.push(Tok::Dedent, end);
        }
        self.push(Tok::Eof, end);
        Ok(())
    }

    /// Handles indentation at the start of a physical line. Returns true when
    /// the whole line was consumed (blank or comment-only).
    fn line_start(&mut self) -> Result<bool, ScriptError> {
        let mut width = 0usize;
        while let Some(c) = self.peek() {
            match c {
                ' ' => width += 1,
                '\t' => width = (width / TAB_WIDTH + 1) * TAB_WIDTH,
                '\r' => {}
                _ => break,
            }
            self.bump();
        }
        match self.peek() {
            None => return Ok(false),
            Some('\n') => {
                self.bump();
                return Ok(true);
            }
            Some('#') => {
                let span = self.here();
                let text = self.comment_text();
                self.push(Tok::Comment { text, own_line: true }, span);
                if self.peek() == Some('\n') {
                    self.bump();
                }
                self.push(Tok::Newline, span);
                return Ok(true);
            }
            _ => {}
        }
        let span = self.here();
        let current = *self.indents.last().expect("indent stack never empty");
        if width > current {
            if self.indents.len() > MAX_INDENT_DEPTH {
                return Err(self.err("indentation too deep", span));
            }
            self.indents.push(width);
            self.push(Tok::Indent, span);
        } else {
            while width < *self.indents.last().expect("indent stack never empty") {
                self.indents.pop();
                self.push(Tok::Dedent, span);
            }
            if width != *self.indents.last().expect("indent stack never empty") {
                return Err(self.err("unindent does not match any outer indentation level", span));
            }
        }
        Ok(false)
    }

    fn comment_text(&mut self) -> String {
        self.bump(); // '#'
        let mut text = String::new();
        while let Some(c) = self.peek() {
            if c == '\n' {
                break;
            }
            text.push(c);
            self.bump();
        }
        text.trim().to_string()
    }

    fn string(&mut self) -> Result<String, ScriptError> {
        let start = self.here();
        if self.peek_at(1) == Some('"') && self.peek_at(2) == Some('"') {
            self.bump();
            self.bump();
            self.bump();
            let mut s = String::new();
            loop {
                match self.peek() {
                    None => return Err(self.err("unterminated triple-quoted string", start)),
                    Some('"') if self.peek_at(1) == Some('"') && self.peek_at(2) == Some('"') => {
                        self.bump();
                        self.bump();
                        self.bump();
                        return Ok(s);
                    }
                    Some(c) => {
                        s.push(c);
                        self.bump();
                    }
                }
            }
        }
        self.bump();
        let mut s = String::new();
        loop {
            match self.peek() {
                None | Some('\n') => return Err(self.err("unterminated string literal", start)),
                Some('"') => {
                    self.bump();
                    return Ok(s);
                }
                Some('\\') => {
                    let esc_span = self.here();
                    self.bump();
                    let c = match self.peek() {
                        Some('n') => '\n',
                        Some('t') => '\t',
                        Some('r') => '\r',
                        Some('0') => '\0',
                        Some('\\') => '\\',
                        Some('"') => '"',
                        _ => return Err(self.err("unknown escape sequence", esc_span)),
                    };
                    self.bump();
                    s.push(c);
                }
                Some(c) => {
                    s.push(c);
                    self.bump();
                }
            }
        }
    }

    fn number(&mut self) -> Result<f64, ScriptError> {
        let span = self.here();
        let mut text = String::new();
        while let Some(c) = self.peek().filter(char::is_ascii_digit) {
            text.push(c);
            self.bump();
        }
        if self.peek() == Some('.') {
            text.push('.');
            self.bump();
            while let Some(c) = self.peek().filter(char::is_ascii_digit) {
                text.push(c);
                self.bump();
            }
        }
        if matches!(self.peek(), Some('e' | 'E')) {
            let sign = matches!(self.peek_at(1), Some('+' | '-'));
            let digit_at = if sign { 2 } else { 1 };
            if self.peek_at(digit_at).is_some_and(|c| c.is_ascii_digit()) {
                for _ in 0..digit_at {
                    text.push(self.bump().expect("lookahead"));
                }
                while let Some(c) = self.peek().filter(char::is_ascii_digit) {
                    text.push(c);
                    self.bump();
                }
            }
        }
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(self.err(format!("invalid number literal '{text}'"), span)),
        }
    }

    fn operator(&mut self, span: Span) -> Result<Op, ScriptError> {
        let c = self.bump().expect("caller peeked");
        let next = self.peek();
        let two = |lx: &mut Self, op| {
            lx.bump();
            op
        };
        let op = match (c, next) {
            ('=', Some('=')) => two(self, Op::Eq),
            ('!', Some('=')) => two(self, Op::Ne),
            ('<', Some('=')) => two(self, Op::Le),
            ('>', Some('=')) => two(self, Op::Ge),
            ('=', _) => Op::Assign,
            ('<', _) => Op::Lt,
            ('>', _) => Op::Gt,
            ('+', _) => Op::Plus,
            ('-', _) => Op::Minus,
            ('*', _) => Op::Star,
            ('/', _) => Op::Slash,
            ('@', _) => Op::At,
            (',', _) => Op::Comma,
            (':', _) => Op::Colon,
            ('.', _) => Op::Dot,
            ('(' | '[', _) => {
                self.depth += 1;
                if c == '(' { Op::LParen } else { Op::LBracket }
            }
            (')' | ']', _) => {
                if self.depth == 0 {
                    return Err(self.err(format!("unmatched '{c}'"), span));
                }
                self.depth -= 1;
                if c == ')' { Op::RParen } else { Op::RBracket }
            }
            _ => return Err(self.err(format!("unexpected character {c:?}"), span)),
        };
        Ok(op)
    }
}
