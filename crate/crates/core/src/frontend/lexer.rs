use std::fmt;

use super::{FrontendError, Loc};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Ident,
    Keyword,
    IntLit,
    FloatLit,
    Punct,
    Eof,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub loc: Loc,
}

impl Token {
    pub fn is(&self, kind: TokenKind, text: &str) -> bool {
        self.kind == kind && self.text == text
    }

    pub fn is_punct(&self, text: &str) -> bool {
        self.is(TokenKind::Punct, text)
    }

    pub fn is_keyword(&self, text: &str) -> bool {
        self.is(TokenKind::Keyword, text)
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            TokenKind::Eof => f.write_str("end of input"),
            _ => write!(f, "`{}`", self.text),
        }
    }
}

pub const KEYWORDS: &[&str] = &[
    "int",
    "float",
    "double",
    "complex",
    "vector",
    "localint",
    "struct",
    "class",
    "union",
    "public",
    "private",
    "typedef",
    "const",
    "if",
    "else",
    "where",
    "elsewhere",
    "for",
    "while",
    "return",
    "void",
];

// Longest first so that maximal munch is a prefix scan.
const PUNCTUATORS: &[&str] = &[
    "<<=", ">>=", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "+=", "-=",
    "*=", "/=", "%=", "&=", "|=", "^=", "(", ")", "[", "]", "{", "}", ";", ",", ".", "+", "-",
    "*", "/", "%", "=", "<", ">", "!", "~", "&", "|", "^", ":",
];

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

struct Cursor {
    chars: Vec<char>,
    pos: usize,
    line: u32,
    col: u32,
}

impl Cursor {
    fn peek(&self, ahead: usize) -> Option<char> {
        self.chars.get(self.pos + ahead).copied()
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

    fn loc(&self) -> Loc {
        Loc::new(self.line, self.col)
    }
}

/// Splits source text into tokens, ending with an [`TokenKind::Eof`] marker.
pub fn tokenize(source: &str) -> Result<Vec<Token>, FrontendError> {
    let mut cur = Cursor {
        chars: source.chars().collect(),
        pos: 0,
        line: 1,
        col: 1,
    };
    let mut out = Vec::new();
    loop {
        skip_trivia(&mut cur)?;
        let loc = cur.loc();
        let Some(c) = cur.peek(0) else {
            out.push(Token {
                kind: TokenKind::Eof,
                text: String::new(),
                loc,
            });
            return Ok(out);
        };
        let token = if c.is_ascii_alphabetic() || c == '_' {
            let mut text = String::new();
            while let Some(c) = cur.peek(0).filter(|c| c.is_ascii_alphanumeric() || *c == '_') {
                text.push(c);
                cur.bump();
            }
            let kind = if is_keyword(&text) {
                TokenKind::Keyword
            } else {
                TokenKind::Ident
            };
            Token { kind, text, loc }
        } else if c.is_ascii_digit() || (c == '.' && cur.peek(1).is_some_and(|d| d.is_ascii_digit())) {
            lex_number(&mut cur, loc)?
        } else {
            let rest: String = cur.chars[cur.pos..].iter().take(3).collect();
            let Some(p) = PUNCTUATORS.iter().find(|p| rest.starts_with(**p)) else {
                return Err(FrontendError::Lex {
                    loc,
                    message: format!("unrecognized character `{c}`"),
                });
            };
            for _ in 0..p.len() {
                cur.bump();
            }
            Token {
                kind: TokenKind::Punct,
                text: (*p).to_string(),
                loc,
            }
        };
        out.push(token);
    }
}

fn skip_trivia(cur: &mut Cursor) -> Result<(), FrontendError> {
    loop {
        match (cur.peek(0), cur.peek(1)) {
            (Some(c), _) if c.is_whitespace() => {
                cur.bump();
            }
            (Some('/'), Some('/')) => {
                while cur.peek(0).is_some_and(|c| c != '\n') {
                    cur.bump();
                }
            }
            (Some('/'), Some('*')) => {
                let loc = cur.loc();
                cur.bump();
                cur.bump();
                loop {
                    match (cur.peek(0), cur.peek(1)) {
                        (Some('*'), Some('/')) => {
                            cur.bump();
                            cur.bump();
                            break;
                        }
                        (Some(_), _) => {
                            cur.bump();
                        }
                        (None, _) => {
                            return Err(FrontendError::Lex {
                                loc,
                                message: "unterminated block comment".into(),
                            })
                        }
                    }
                }
            }
            _ => return Ok(()),
        }
    }
}

fn lex_number(cur: &mut Cursor, loc: Loc) -> Result<Token, FrontendError> {
    let malformed = |text: &str| FrontendError::Lex {
        loc,
        message: format!("malformed numeric literal `{text}`"),
    };
    let mut text = String::new();
    let mut is_float = false;
    let digits = |cur: &mut Cursor, text: &mut String| {
        let mut n = 0;
        while let Some(c) = cur.peek(0).filter(char::is_ascii_digit) {
            text.push(c);
            cur.bump();
            n += 1;
        }
        n
    };
    let int_digits = digits(cur, &mut text);
    if cur.peek(0) == Some('.') {
        is_float = true;
        text.push('.');
        cur.bump();
        let frac = digits(cur, &mut text);
        if int_digits == 0 && frac == 0 {
            return Err(malformed(&text));
        }
    }
    if matches!(cur.peek(0), Some('e' | 'E')) {
        is_float = true;
        text.push(cur.bump().unwrap());
        if let Some(sign @ ('+' | '-')) = cur.peek(0) {
            text.push(sign);
            cur.bump();
        }
        if digits(cur, &mut text) == 0 {
            return Err(malformed(&text));
        }
    }
    if matches!(cur.peek(0), Some('f' | 'F')) && is_float {
        text.push(cur.bump().unwrap());
    }
    if cur
        .peek(0)
        .is_some_and(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
    {
        text.push(cur.bump().unwrap());
        return Err(malformed(&text));
    }
    if is_float {
        let finite = match text.strip_suffix(['f', 'F']) {
            Some(body) => body.parse::<f32>().is_ok_and(f32::is_finite),
            None => text.parse::<f64>().is_ok_and(f64::is_finite),
        };
        if !finite {
            return Err(malformed(&text));
        }
        Ok(Token {
            kind: TokenKind::FloatLit,
            text,
            loc,
        })
    } else {
        if text.parse::<i32>().is_err() {
            return Err(FrontendError::Lex {
                loc,
                message: format!("integer literal `{text}` does not fit in 32 bits"),
            });
        }
        Ok(Token {
            kind: TokenKind::IntLit,
            text,
            loc,
        })
    }
}
