// SPDX-License-Identifier: Apache-2.0

use std::fmt;

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    Num(f64),
    LParen,
    RParen,
    LBrack,
    RBrack,
    LAngle,
    RAngle,
    LBrace,
    RBrace,
    Comma,
    Semi,
    Dot,
    Colon,
    Backslash,
    LinBackslash,
    Eq,
    Plus,
    Minus,
    Star,
    Bang,
    BangStar,
    At,
    Arrow,
    FatArrow,
    Lolli,
    Turnstile,
    Question,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(s) => return write!(f, "`{}`", s),
            Tok::Num(x) => return write!(f, "number {}", x),
            Tok::LParen => "`(`",
            Tok::RParen => "`)`",
            Tok::LBrack => "`[`",
            Tok::RBrack => "`]`",
            Tok::LAngle => "`<`",
            Tok::RAngle => "`>`",
            Tok::LBrace => "`{`",
            Tok::RBrace => "`}`",
            Tok::Comma => "`,`",
            Tok::Semi => "`;`",
            Tok::Dot => "`.`",
            Tok::Colon => "`:`",
            Tok::Backslash => "`\\`",
            Tok::LinBackslash => "`\\\\`",
            Tok::Eq => "`=`",
            Tok::Plus => "`+`",
            Tok::Minus => "`-`",
            Tok::Star => "`*`",
            Tok::Bang => "`!`",
            Tok::BangStar => "`!*`",
            Tok::At => "`@`",
            Tok::Arrow => "`->`",
            Tok::FatArrow => "`=>`",
            Tok::Lolli => "`-o`",
            Tok::Turnstile => "`|-`",
            Tok::Question => "`?`",
            Tok::Eof => "end of input",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
    /// No whitespace between this token and the previous one.
    pub glued: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{col}: {message}")]
pub struct LexError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

fn ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\'' || c == '#'
}

pub fn lex(src: &str) -> Result<Vec<Token>, LexError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let mut glued = false;
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            glued = false;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            glued = false;
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'-') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            glued = false;
            continue;
        }
        let start_col = col;
        let peek = |k: usize| chars.get(i + k).copied();
        let (tok, len) = if ident_start(c) {
            let mut j = i;
            while j < chars.len() && ident_char(chars[j]) {
                j += 1;
            }
            (Tok::Ident(chars[i..j].iter().collect()), j - i)
        } else if c.is_ascii_digit() {
            let mut j = i;
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
            }
            if j + 1 < chars.len() && chars[j] == '.' && chars[j + 1].is_ascii_digit() {
                j += 1;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
            }
            if j < chars.len() && (chars[j] == 'e' || chars[j] == 'E') {
                let mut k = j + 1;
                if k < chars.len() && (chars[k] == '+' || chars[k] == '-') {
                    k += 1;
                }
                if k < chars.len() && chars[k].is_ascii_digit() {
                    while k < chars.len() && chars[k].is_ascii_digit() {
                        k += 1;
                    }
                    j = k;
                }
            }
            let text: String = chars[i..j].iter().collect();
            let x = text.parse::<f64>().map_err(|e| LexError {
                line,
                col,
                message: format!("bad number `{}`: {}", text, e),
            })?;
            (Tok::Num(x), j - i)
        } else {
            match (c, peek(1)) {
                ('-', Some('>')) => (Tok::Arrow, 2),
                ('-', Some('o')) if !peek(2).is_some_and(ident_char) => (Tok::Lolli, 2),
                ('-', _) => (Tok::Minus, 1),
                ('=', Some('>')) => (Tok::FatArrow, 2),
                ('=', _) => (Tok::Eq, 1),
                ('!', Some('*')) => (Tok::BangStar, 2),
                ('!', _) => (Tok::Bang, 1),
                ('|', Some('-')) => (Tok::Turnstile, 2),
                ('\\', Some('\\')) => (Tok::LinBackslash, 2),
                ('\\', _) => (Tok::Backslash, 1),
                ('(', _) => (Tok::LParen, 1),
                (')', _) => (Tok::RParen, 1),
                ('[', _) => (Tok::LBrack, 1),
                (']', _) => (Tok::RBrack, 1),
                ('<', _) => (Tok::LAngle, 1),
                ('>', _) => (Tok::RAngle, 1),
                ('{', _) => (Tok::LBrace, 1),
                ('}', _) => (Tok::RBrace, 1),
                (',', _) => (Tok::Comma, 1),
                (';', _) => (Tok::Semi, 1),
                ('.', _) => (Tok::Dot, 1),
                (':', _) => (Tok::Colon, 1),
                ('+', _) => (Tok::Plus, 1),
                ('*', _) => (Tok::Star, 1),
                ('@', _) => (Tok::At, 1),
                ('?', _) => (Tok::Question, 1),
                _ => {
                    return Err(LexError {
                        line,
                        col,
                        message: format!("unexpected character `{}`", c),
                    })
                }
            }
        };
        out.push(Token {
            tok,
            line,
            col: start_col,
            glued,
        });
        i += len;
        col += len;
        glued = true;
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        col,
        glued: false,
    });
    Ok(out)
}
