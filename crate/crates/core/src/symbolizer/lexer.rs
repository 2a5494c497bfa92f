use serde::{Deserialize, Serialize};

use super::Lexicon;
use crate::corpus::CodeGadget;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TokenKind {
    Identifier,
    Keyword,
    BaseType,
    StringLiteral,
    CharLiteral,
    NumericLiteral,
    Operator,
    Punctuation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub kind: TokenKind,
    /// 0-based line within the gadget.
    pub line_index: usize,
    /// 0-based character column within the line.
    pub column_index: usize,
}

impl Token {
    pub fn is_literal(&self) -> bool {
        matches!(self.kind, TokenKind::StringLiteral | TokenKind::CharLiteral)
    }
}

/// Longest operators first, so a linear scan implements maximal munch.
const OPERATORS: &[&str] = &[
    ">>=", "<<=", "...", "->*", "<=>", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&",
    "||", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "::", ".*", "##", "+", "-", "*", "/",
    "%", "=", "<", ">", "!", "&", "|", "^", "~", "?", ":", ".",
];
const PUNCTUATION: &[char] = &['(', ')', '[', ']', '{', '}', ';', ',', '#', '\\', '@', '$', '`'];
const LITERAL_PREFIXES: &[&str] = &["L", "u", "U", "u8"];

/// Lex a gadget with the bundled lexicon deciding keyword/base-type kinds.
pub fn tokenize(gadget: &CodeGadget) -> Result<Vec<Token>> {
    tokenize_with(gadget, &Lexicon::default())
}

pub fn tokenize_with(gadget: &CodeGadget, lexicon: &Lexicon) -> Result<Vec<Token>> {
    tokenize_lines(&gadget.lines, lexicon)
}

/// Lex source lines. Block comments may span lines; string literals may not.
pub fn tokenize_lines<S: AsRef<str>>(lines: &[S], lexicon: &Lexicon) -> Result<Vec<Token>> {
    let mut tokens = Vec::new();
    let mut in_block_comment = false;
    for (line_index, line) in lines.iter().enumerate() {
        let chars: Vec<char> = line.as_ref().chars().collect();
        let mut i = 0;
        while i < chars.len() {
            if in_block_comment {
                if chars[i] == '*' && chars.get(i + 1) == Some(&'/') {
                    in_block_comment = false;
                    i += 2;
                } else {
                    i += 1;
                }
                continue;
            }
            let c = chars[i];
            let start = i;
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            if c == '/' && chars.get(i + 1) == Some(&'/') {
                break;
            }
            if c == '/' && chars.get(i + 1) == Some(&'*') {
                in_block_comment = true;
                i += 2;
                continue;
            }

            let push = |tokens: &mut Vec<Token>, end: usize, kind: TokenKind| {
                tokens.push(Token {
                    text: chars[start..end].iter().collect(),
                    kind,
                    line_index,
                    column_index: start,
                });
            };

            if c == '"' || c == '\'' {
                let end = scan_quoted(&chars, i, line_index)?;
                let kind = if c == '"' {
                    TokenKind::StringLiteral
                } else {
                    TokenKind::CharLiteral
                };
                push(&mut tokens, end, kind);
                i = end;
            } else if c.is_alphabetic() || c == '_' {
                let mut end = i + 1;
                while end < chars.len() && (chars[end].is_alphanumeric() || chars[end] == '_') {
                    end += 1;
                }
                let word: String = chars[i..end].iter().collect();
                if LITERAL_PREFIXES.contains(&word.as_str())
                    && matches!(chars.get(end), Some('"') | Some('\''))
                {
                    let quote = chars[end];
                    let lit_end = scan_quoted(&chars, end, line_index)?;
                    let kind = if quote == '"' {
                        TokenKind::StringLiteral
                    } else {
                        TokenKind::CharLiteral
                    };
                    push(&mut tokens, lit_end, kind);
                    i = lit_end;
                    continue;
                }
                let kind = if lexicon.is_keyword(&word) {
                    TokenKind::Keyword
                } else if lexicon.is_base_type(&word) {
                    TokenKind::BaseType
                } else {
                    TokenKind::Identifier
                };
                push(&mut tokens, end, kind);
                i = end;
            } else if c.is_ascii_digit()
                || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()))
            {
                let end = scan_number(&chars, i);
                push(&mut tokens, end, TokenKind::NumericLiteral);
                i = end;
            } else if let Some(op) = OPERATORS.iter().find(|op| matches_at(&chars, i, op)) {
                let end = i + op.chars().count();
                push(&mut tokens, end, TokenKind::Operator);
                i = end;
            } else if PUNCTUATION.contains(&c) {
                push(&mut tokens, i + 1, TokenKind::Punctuation);
                i += 1;
            } else {
                return Err(Error::Lex {
                    line: line_index + 1,
                    column: i + 1,
                    message: format!("unexpected character {c:?}"),
                });
            }
        }
    }
    Ok(tokens)
}

fn matches_at(chars: &[char], i: usize, pat: &str) -> bool {
    let mut k = i;
    for p in pat.chars() {
        if chars.get(k) != Some(&p) {
            return false;
        }
        k += 1;
    }
    true
}

/// Index one past the closing quote of the literal opening at `open`.
fn scan_quoted(chars: &[char], open: usize, line_index: usize) -> Result<usize> {
    let quote = chars[open];
    let mut k = open + 1;
    while k < chars.len() {
        match chars[k] {
            '\\' => k += 2,
            c if c == quote => return Ok(k + 1),
            _ => k += 1,
        }
    }
    let what = if quote == '"' { "string" } else { "character" };
    Err(Error::Lex {
        line: line_index + 1,
        column: open + 1,
        message: format!("unterminated {what} literal"),
    })
}

/// pp-number style scan: digits, letters, `_`, `.`, digit separators, signed exponents.
fn scan_number(chars: &[char], start: usize) -> usize {
    let mut k = start;
    while k < chars.len() {
        let c = chars[k];
        if matches!(c, '+' | '-') && k > start && matches!(chars[k - 1], 'e' | 'E' | 'p' | 'P') {
            let hex = chars[start..k].iter().any(|c| matches!(c, 'x' | 'X'));
            let exponent = if hex {
                matches!(chars[k - 1], 'p' | 'P')
            } else {
                matches!(chars[k - 1], 'e' | 'E')
            };
            if exponent {
                k += 1;
                continue;
            }
            break;
        }
        if c.is_ascii_alphanumeric() || c == '_' || c == '.' {
            k += 1;
        } else if c == '\'' && chars.get(k + 1).is_some_and(|d| d.is_ascii_alphanumeric()) {
            k += 1;
        } else {
            break;
        }
    }
    k
}
