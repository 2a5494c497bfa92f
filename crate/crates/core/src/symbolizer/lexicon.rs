use std::collections::BTreeSet;
use std::path::Path;

use crate::error::{Error, Result};

const DEFAULT_LEXICON: &str = include_str!("../../data/lexicon.txt");

/// Reserved words, built-in type names, and library/API calls that survive symbolization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    pub keywords: BTreeSet<String>,
    pub base_types: BTreeSet<String>,
    pub library_functions: BTreeSet<String>,
}

#[derive(Clone, Copy)]
enum Section {
    Keywords,
    Types,
    Library,
}

impl Default for Lexicon {
    fn default() -> Self {
        Lexicon::parse(DEFAULT_LEXICON).expect("bundled lexicon is valid")
    }
}

impl Lexicon {
    pub fn empty() -> Self {
        Lexicon {
            keywords: BTreeSet::new(),
            base_types: BTreeSet::new(),
            library_functions: BTreeSet::new(),
        }
    }

    /// Parse the sectioned lexicon format. `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lex = Lexicon::empty();
        lex.extend_from_str(text)?;
        Ok(lex)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Lexicon::parse(&text)
    }

    /// The bundled lexicon extended with the names in `path`.
    pub fn default_extended_with(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut lex = Lexicon::default();
        lex.extend_from_str(&text)?;
        Ok(lex)
    }

    pub fn extend_from_str(&mut self, text: &str) -> Result<()> {
        let mut section = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            section = match line {
                "[keywords]" => Some(Section::Keywords),
                "[types]" => Some(Section::Types),
                "[library]" => Some(Section::Library),
                name => {
                    let Some(s) = section else {
                        return Err(Error::parse(idx + 1, "name outside of any section"));
                    };
                    if line.starts_with('[') {
                        return Err(Error::parse(idx + 1, format!("unknown section {name}")));
                    }
                    if name.split_whitespace().count() != 1 {
                        return Err(Error::parse(idx + 1, "expected one name per line"));
                    }
                    self.set_mut(s).insert(name.to_string());
                    section
                }
            };
        }
        self.check_disjoint()
    }

    fn set_mut(&mut self, s: Section) -> &mut BTreeSet<String> {
        match s {
            Section::Keywords => &mut self.keywords,
            Section::Types => &mut self.base_types,
            Section::Library => &mut self.library_functions,
        }
    }

    fn check_disjoint(&self) -> Result<()> {
        let pairs = [
            ("keywords", &self.keywords, "types", &self.base_types),
            ("keywords", &self.keywords, "library", &self.library_functions),
            ("types", &self.base_types, "library", &self.library_functions),
        ];
        for (an, a, bn, b) in pairs {
            if let Some(name) = a.intersection(b).next() {
                return Err(Error::config(format!(
                    "lexicon sections [{an}] and [{bn}] both contain {name:?}"
                )));
            }
        }
        Ok(())
    }

    pub fn is_keyword(&self, s: &str) -> bool {
        self.keywords.contains(s)
    }

    pub fn is_base_type(&self, s: &str) -> bool {
        self.base_types.contains(s)
    }

    pub fn is_library(&self, s: &str) -> bool {
        self.library_functions.contains(s)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (header, set) in [
            ("[keywords]", &self.keywords),
            ("[types]", &self.base_types),
            ("[library]", &self.library_functions),
        ] {
            out.push_str(header);
            out.push('\n');
            for name in set {
                out.push_str(name);
                out.push('\n');
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_lexicon_is_disjoint_and_sized() {
        let lex = Lexicon::default();
        assert!(lex.library_functions.len() >= 300);
        for t in ["char", "short", "int", "long", "float", "double", "signed", "unsigned", "bool", "wchar_t", "size_t"] {
            assert!(lex.is_base_type(t), "{t}");
        }
        for k in ["void", "const", "list", "vector", "string", "if", "sizeof"] {
            assert!(lex.is_keyword(k), "{k}");
        }
        for f in ["sscanf", "strcpy", "memset", "malloc", "back"] {
            assert!(lex.is_library(f), "{f}");
        }
    }

    #[test]
    fn parse_round_trips_and_rejects_overlap() {
        let lex = Lexicon::default();
        assert_eq!(Lexicon::parse(&lex.to_text()).unwrap(), lex);
        let err = Lexicon::parse("[types]\nfoo\n[library]\nfoo\n").unwrap_err();
        assert!(err.to_string().contains("foo"));
        assert!(Lexicon::parse("foo\n").is_err());
        assert!(Lexicon::parse("[bogus]\nfoo\n").is_err());
    }

    #[test]
    fn extension_adds_names() {
        let mut lex = Lexicon::default();
        lex.extend_from_str("[library]\nprintLine\n").unwrap();
        assert!(lex.is_library("printLine"));
        assert!(lex.extend_from_str("[types]\nstrcpy\n").is_err());
    }
}
