//! Multi-level symbolization of code gadgets.
//!
//! Tokens are classified as user-defined functions (F), variables (V), data
//! types (D), library calls, keywords, literals, or punctuation/operators. A
//! [`SymbolizationGroup`] selects which of F, V, D are renamed; renamed features
//! become `F<n>`, `V<n>`, `T<n>` where `n` counts distinct features of that class
//! in order of first occurrence.
//!
//! ```
//! use gadget_detect::corpus::{CodeGadget, Label};
//! use gadget_detect::symbolizer::{render, symbolize, Lexicon, SymbolizationGroup};
//!
//! let g = CodeGadget::new(0, "", vec!["goodG2BSink ( dataList ) ;".into()], Label::Safe);
//! let s = symbolize(&g, SymbolizationGroup::FV, &Lexicon::default()).unwrap();
//! assert_eq!(render(&s), ["F1 ( V1 ) ;"]);
//! ```

mod lexer;
mod lexicon;

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use lexer::{tokenize, tokenize_lines, tokenize_with, Token, TokenKind};
pub use lexicon::Lexicon;

use crate::corpus::{CodeGadget, Corpus, Label};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SymbolClass {
    /// User-defined function.
    Function,
    Variable,
    DataType,
    LibraryCall,
    Keyword,
    Literal,
    Operator,
    Other,
}

impl SymbolClass {
    /// Prefix of the symbols assigned to renamed features of this class.
    pub fn symbol_prefix(self) -> Option<&'static str> {
        match self {
            SymbolClass::Function => Some("F"),
            SymbolClass::Variable => Some("V"),
            SymbolClass::DataType => Some("T"),
            _ => None,
        }
    }
}

/// Which feature classes are renamed; user functions are always renamed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SymbolizationGroup {
    #[serde(rename = "F")]
    F,
    #[serde(rename = "FV", alias = "F+V")]
    FV,
    #[serde(rename = "FD", alias = "F+D")]
    FD,
    #[serde(rename = "FVD", alias = "F+V+D")]
    FVD,
}

impl SymbolizationGroup {
    pub const ALL: [SymbolizationGroup; 4] = [
        SymbolizationGroup::F,
        SymbolizationGroup::FV,
        SymbolizationGroup::FD,
        SymbolizationGroup::FVD,
    ];

    pub fn renames(self, class: SymbolClass) -> bool {
        match class {
            SymbolClass::Function => true,
            SymbolClass::Variable => matches!(self, Self::FV | Self::FVD),
            SymbolClass::DataType => matches!(self, Self::FD | Self::FVD),
            _ => false,
        }
    }

    /// Symbolization level: 1 for F, 2 for F+V and F+D, 3 for F+V+D.
    pub fn level(self) -> u8 {
        match self {
            Self::F => 1,
            Self::FV | Self::FD => 2,
            Self::FVD => 3,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::F => "F",
            Self::FV => "F+V",
            Self::FD => "F+D",
            Self::FVD => "F+V+D",
        }
    }
}

impl fmt::Display for SymbolizationGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for SymbolizationGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('+', "").to_ascii_uppercase().as_str() {
            "F" => Ok(Self::F),
            "FV" => Ok(Self::FV),
            "FD" => Ok(Self::FD),
            "FVD" => Ok(Self::FVD),
            _ => Err(Error::config(format!(
                "unknown symbolization group {s:?} (expected F, FV, FD or FVD)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolAssignment {
    pub class: SymbolClass,
    pub original: String,
    pub symbol: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolizedGadget {
    pub source_id: u64,
    pub label: Label,
    pub tokens: Vec<Token>,
    /// Number of source lines, so blank lines survive [`render`].
    pub line_count: usize,
    /// Every renaming, in order of first occurrence.
    pub symbol_map: Vec<SymbolAssignment>,
}

impl SymbolizedGadget {
    pub fn token_texts(&self) -> Vec<String> {
        self.tokens.iter().map(|t| t.text.clone()).collect()
    }

    pub fn symbol_for(&self, class: SymbolClass, original: &str) -> Option<&str> {
        self.symbol_map
            .iter()
            .find(|a| a.class == class && a.original == original)
            .map(|a| a.symbol.as_str())
    }
}

fn is_word(t: &Token) -> bool {
    matches!(
        t.kind,
        TokenKind::Identifier | TokenKind::Keyword | TokenKind::BaseType
    )
}

/// Names that the gadget itself introduces as types via `struct`/`class`/`union`/`enum`
/// heads or as the declarator of a `typedef`.
fn introduced_type_names(tokens: &[Token], lexicon: &Lexicon) -> HashSet<String> {
    let mut names = HashSet::new();
    let plain_ident = |t: &Token| {
        is_word(t) && !lexicon.is_keyword(&t.text) && !lexicon.is_base_type(&t.text)
    };
    for (i, t) in tokens.iter().enumerate() {
        if matches!(t.text.as_str(), "struct" | "class" | "union" | "enum") {
            if let Some(next) = tokens.get(i + 1).filter(|n| plain_ident(n)) {
                names.insert(next.text.clone());
            }
        }
        if t.text == "typedef" {
            let end = tokens[i..]
                .iter()
                .position(|t| t.text == ";")
                .map(|p| i + p)
                .unwrap_or(tokens.len());
            if let Some(name) = tokens[i + 1..end].iter().rev().find(|t| plain_ident(t)) {
                names.insert(name.text.clone());
            }
        }
    }
    names
}

/// Identifiers that appear directly before `(` somewhere in the gadget.
fn called_names(tokens: &[Token]) -> HashSet<&str> {
    tokens
        .windows(2)
        .filter(|w| w[1].text == "(" && w[0].kind == TokenKind::Identifier)
        .map(|w| w[0].text.as_str())
        .collect()
}

/// Assign a [`SymbolClass`] to every token.
///
/// Rules, first match wins: reserved word → keyword; base type or gadget-introduced
/// type name → D; identifier called somewhere in the gadget that names a library
/// function → library call; any other called identifier → F; string or character
/// literal → V; numeric literal → literal; any other identifier (declarators
/// included) → V. A called name keeps its class where it appears without `(`.
pub fn classify_tokens(tokens: &[Token], lexicon: &Lexicon) -> Vec<(Token, SymbolClass)> {
    let user_types = introduced_type_names(tokens, lexicon);
    let called = called_names(tokens);
    let mut classified = Vec::with_capacity(tokens.len());
    for tok in tokens {
        let is_called = called.contains(tok.text.as_str());
        let class = match tok.kind {
            TokenKind::StringLiteral | TokenKind::CharLiteral => SymbolClass::Variable,
            TokenKind::NumericLiteral => SymbolClass::Literal,
            TokenKind::Operator => SymbolClass::Operator,
            TokenKind::Punctuation => SymbolClass::Other,
            TokenKind::Identifier | TokenKind::Keyword | TokenKind::BaseType => {
                let text = tok.text.as_str();
                if lexicon.is_keyword(text) {
                    SymbolClass::Keyword
                } else if lexicon.is_base_type(text) || user_types.contains(text) {
                    SymbolClass::DataType
                } else if is_called && lexicon.is_library(text) {
                    SymbolClass::LibraryCall
                } else if is_called {
                    SymbolClass::Function
                } else {
                    // declarators and every other remaining identifier
                    SymbolClass::Variable
                }
            }
        };
        classified.push((tok.clone(), class));
    }
    classified
}

/// Rename the features selected by `group`.
pub fn symbolize(
    gadget: &CodeGadget,
    group: SymbolizationGroup,
    lexicon: &Lexicon,
) -> Result<SymbolizedGadget> {
    let tokens = tokenize_with(gadget, lexicon)?;
    let classified = classify_tokens(&tokens, lexicon);

    let mut counters: HashMap<SymbolClass, usize> = HashMap::new();
    let mut assigned: HashMap<(SymbolClass, String), String> = HashMap::new();
    let mut symbol_map = Vec::new();
    let mut out = Vec::with_capacity(classified.len());

    for (mut tok, class) in classified {
        if let (true, Some(prefix)) = (group.renames(class), class.symbol_prefix()) {
            let key = (class, tok.text.clone());
            let symbol = match assigned.get(&key) {
                Some(s) => s.clone(),
                None => {
                    let n = counters.entry(class).or_insert(0);
                    *n += 1;
                    let s = format!("{prefix}{n}");
                    symbol_map.push(SymbolAssignment {
                        class,
                        original: tok.text.clone(),
                        symbol: s.clone(),
                    });
                    assigned.insert(key, s.clone());
                    s
                }
            };
            tok.text = symbol;
            tok.kind = TokenKind::Identifier;
        }
        out.push(tok);
    }

    Ok(SymbolizedGadget {
        source_id: gadget.id,
        label: gadget.label,
        tokens: out,
        line_count: gadget.lines.len(),
        symbol_map,
    })
}

/// Join tokens with single spaces, one output line per source line.
pub fn render(sg: &SymbolizedGadget) -> Vec<String> {
    let mut lines = vec![String::new(); sg.line_count];
    for tok in &sg.tokens {
        if tok.line_index >= lines.len() {
            lines.resize(tok.line_index + 1, String::new());
        }
        let line = &mut lines[tok.line_index];
        if !line.is_empty() {
            line.push(' ');
        }
        line.push_str(&tok.text);
    }
    lines
}

/// Symbolize every gadget and rebuild a corpus from the rendered lines.
pub fn symbolize_corpus(
    corpus: &Corpus,
    group: SymbolizationGroup,
    lexicon: &Lexicon,
) -> Result<Corpus> {
    let gadgets = corpus
        .gadgets
        .iter()
        .map(|g| {
            let sg = symbolize(g, group, lexicon)?;
            Ok(CodeGadget::new(g.id, g.origin.clone(), render(&sg), g.label))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Corpus::new(corpus.name.clone(), gadgets))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gadget(lines: &[&str]) -> CodeGadget {
        CodeGadget::new(1, "t.c", lines.iter().map(|s| s.to_string()).collect(), Label::Safe)
    }

    fn classes_of(line: &str) -> Vec<(String, SymbolClass)> {
        let lex = Lexicon::default();
        let toks = tokenize_lines(&[line], &lex).unwrap();
        classify_tokens(&toks, &lex)
            .into_iter()
            .map(|(t, c)| (t.text, c))
            .collect()
    }

    fn class_of(line: &str, text: &str) -> SymbolClass {
        classes_of(line)
            .into_iter()
            .find(|(t, _)| t == text)
            .unwrap_or_else(|| panic!("{text} not in {line}"))
            .1
    }

    #[test]
    fn user_function_vs_library_call() {
        assert_eq!(class_of("goodG2BSink ( dataList )", "goodG2BSink"), SymbolClass::Function);
        assert_eq!(class_of("goodG2BSink ( dataList )", "dataList"), SymbolClass::Variable);
        assert_eq!(class_of("sscanf ( data , \"%d\" , & n )", "sscanf"), SymbolClass::LibraryCall);
        // a library name that is not called is just a variable
        assert_eq!(class_of("index = 3 ;", "index"), SymbolClass::Variable);
    }

    #[test]
    fn types_literals_keywords() {
        assert_eq!(class_of("char buf [ 100 ] ;", "char"), SymbolClass::DataType);
        assert_eq!(class_of("char buf [ 100 ] ;", "100"), SymbolClass::Literal);
        assert_eq!(class_of("char buf [ 100 ] ;", "buf"), SymbolClass::Variable);
        assert_eq!(class_of("x = 'A' ;", "'A'"), SymbolClass::Variable);
        assert_eq!(class_of("if ( x ) return ;", "return"), SymbolClass::Keyword);
        assert_eq!(class_of("void f ( )", "void"), SymbolClass::Keyword);
        assert_eq!(class_of("a = b + c ;", "+"), SymbolClass::Operator);
        assert_eq!(class_of("a = b + c ;", ";"), SymbolClass::Other);
    }

    #[test]
    fn introduced_types_are_data_types() {
        let cls = classes_of("struct node * head ; typedef unsigned long word_t ; word_t w ;");
        let get = |name: &str| cls.iter().find(|(t, _)| t == name).unwrap().1;
        assert_eq!(get("node"), SymbolClass::DataType);
        assert_eq!(get("word_t"), SymbolClass::DataType);
        assert_eq!(get("head"), SymbolClass::Variable);
        assert_eq!(get("w"), SymbolClass::Variable);
    }

    #[test]
    fn group_parsing() {
        assert_eq!("FV".parse::<SymbolizationGroup>().unwrap(), SymbolizationGroup::FV);
        assert_eq!("F+V+D".parse::<SymbolizationGroup>().unwrap(), SymbolizationGroup::FVD);
        assert!("FX".parse::<SymbolizationGroup>().is_err());
        assert_eq!(SymbolizationGroup::FD.level(), 2);
    }

    #[test]
    fn numbering_by_first_occurrence() {
        let g = gadget(&["b = a ;", "a = c ( b ) ;", "d ( a ) ;"]);
        let s = symbolize(&g, SymbolizationGroup::FV, &Lexicon::default()).unwrap();
        assert_eq!(render(&s), ["V1 = V2 ;", "V2 = F1 ( V1 ) ;", "F2 ( V2 ) ;"]);
        assert_eq!(s.symbol_for(SymbolClass::Variable, "a"), Some("V2"));
        assert_eq!(s.symbol_for(SymbolClass::Function, "d"), Some("F2"));
    }

    #[test]
    fn render_preserves_blank_lines_and_handles_empty() {
        let g = gadget(&["a ( ) ;", "", "b ;"]);
        let s = symbolize(&g, SymbolizationGroup::F, &Lexicon::default()).unwrap();
        assert_eq!(render(&s), ["F1 ( ) ;", "", "b ;"]);
        let empty = SymbolizedGadget {
            source_id: 0,
            label: Label::Safe,
            tokens: vec![],
            line_count: 0,
            symbol_map: vec![],
        };
        assert!(render(&empty).is_empty());
    }

    #[test]
    fn render_joins_with_single_spaces() {
        let g = gadget(&["F2(V1);"]);
        let s = symbolize(&g, SymbolizationGroup::F, &Lexicon::default()).unwrap();
        assert_eq!(render(&s), ["F1 ( V1 ) ;"]);
    }

    #[test]
    fn lex_errors_propagate() {
        let g = gadget(&["puts(\"unterminated);"]);
        assert!(matches!(
            symbolize(&g, SymbolizationGroup::F, &Lexicon::default()),
            Err(Error::Lex { .. })
        ));
    }
}
