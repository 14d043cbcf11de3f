//! Lexer and recursive-descent parser for the declaration DSL.
//!
//! ```text
//! data <TypeName> [<tyvar>...] = <Ctor> [<Field>...] ( '|' <Ctor> [<Field>...] )*
//! Field := TypeName | tyvar | '(' TypeName Field+ ')'
//! ```
//!
//! Line comments start with `--`.

use super::ast::{ConstructorDecl, TypeDecl, TypeExpr};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Upper(String),
    Lower(String),
    Data,
    Eq,
    Bar,
    LParen,
    RParen,
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn lex(source: &str) -> Result<Vec<Token>> {
    let mut tokens = Vec::new();
    let chars: Vec<char> = source.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'-') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (start_line, start_col) = (line, col);
        let tok = match c {
            '=' => Tok::Eq,
            '|' => Tok::Bar,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            c if c.is_alphabetic() || c == '_' => {
                let mut ident = String::new();
                while i < chars.len()
                    && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '\'')
                {
                    ident.push(chars[i]);
                    i += 1;
                    col += 1;
                }
                let tok = if ident == "data" {
                    Tok::Data
                } else if ident.starts_with(|c: char| c.is_uppercase()) {
                    Tok::Upper(ident)
                } else {
                    Tok::Lower(ident)
                };
                tokens.push(Token {
                    tok,
                    line: start_line,
                    column: start_col,
                });
                continue;
            }
            other => {
                return Err(syntax(line, col, format!("unexpected character `{other}`")));
            }
        };
        tokens.push(Token {
            tok,
            line: start_line,
            column: start_col,
        });
        i += 1;
        col += 1;
    }
    tokens.push(Token {
        tok: Tok::Eof,
        line,
        column: col,
    });
    Ok(tokens)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, message: impl Into<String>) -> Error {
        let t = self.peek();
        syntax(t.line, t.column, message)
    }

    fn expect_upper(&mut self, what: &str) -> Result<String> {
        match self.peek().tok.clone() {
            Tok::Upper(name) => {
                self.bump();
                Ok(name)
            }
            other => Err(self.error_here(format!("expected {what}, found {}", describe(&other)))),
        }
    }

    fn decls(&mut self) -> Result<Vec<TypeDecl>> {
        let mut decls = Vec::new();
        loop {
            match self.peek().tok {
                Tok::Eof => return Ok(decls),
                Tok::Data => {
                    self.bump();
                    decls.push(self.decl()?);
                }
                ref other => {
                    return Err(self.error_here(format!(
                        "expected `data`, found {}",
                        describe(other)
                    )))
                }
            }
        }
    }

    fn decl(&mut self) -> Result<TypeDecl> {
        let name = self.expect_upper("type name")?;
        let mut params = Vec::new();
        while let Tok::Lower(v) = self.peek().tok.clone() {
            self.bump();
            params.push(v);
        }
        if self.peek().tok != Tok::Eq {
            let found = describe(&self.peek().tok);
            return Err(self.error_here(format!("expected `=`, found {found}")));
        }
        self.bump();
        let mut constructors = vec![self.constructor()?];
        while self.peek().tok == Tok::Bar {
            self.bump();
            constructors.push(self.constructor()?);
        }
        Ok(TypeDecl {
            name,
            params,
            constructors,
        })
    }

    fn constructor(&mut self) -> Result<ConstructorDecl> {
        let name = self.expect_upper("constructor name")?;
        let mut fields = Vec::new();
        loop {
            match self.peek().tok {
                Tok::Bar | Tok::Data | Tok::Eof => break,
                _ => fields.push(self.field()?),
            }
        }
        Ok(ConstructorDecl { name, fields })
    }

    fn field(&mut self) -> Result<TypeExpr> {
        match self.peek().tok.clone() {
            Tok::Upper(name) => {
                self.bump();
                Ok(TypeExpr::con(name))
            }
            Tok::Lower(v) => {
                self.bump();
                Ok(TypeExpr::Var(v))
            }
            Tok::LParen => {
                self.bump();
                let name = self.expect_upper("type name after `(`")?;
                let mut args = Vec::new();
                while self.peek().tok != Tok::RParen {
                    if matches!(self.peek().tok, Tok::Eof | Tok::Bar | Tok::Data | Tok::Eq) {
                        return Err(self.error_here("unclosed `(`"));
                    }
                    args.push(self.field()?);
                }
                self.bump();
                Ok(TypeExpr::Con { name, args })
            }
            other => Err(self.error_here(format!("expected a field type, found {}", describe(&other)))),
        }
    }
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Upper(s) | Tok::Lower(s) => format!("`{s}`"),
        Tok::Data => "`data`".into(),
        Tok::Eq => "`=`".into(),
        Tok::Bar => "`|`".into(),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Eof => "end of input".into(),
    }
}

/// Parses DSL source into declarations without resolving any names.
pub fn parse_decls(source: &str) -> Result<Vec<TypeDecl>> {
    let tokens = lex(source)?;
    Parser { tokens, pos: 0 }.decls()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_tree() {
        let decls = parse_decls("data Tree = LeafA | LeafB | LeafC | Node Tree Tree").unwrap();
        assert_eq!(decls.len(), 1);
        assert_eq!(decls[0].constructors.len(), 4);
        assert_eq!(decls[0].constructors[3].fields.len(), 2);
    }

    #[test]
    fn parses_generic_application_and_comments() {
        let src = "-- leaves carry data\ndata Maybe a = Nothing | Just a\n\
                   data Bool = False | True\n\
                   data Tree = LeafA (Maybe Bool) -- trailing\n  | Node Tree Tree\n";
        let decls = parse_decls(src).unwrap();
        assert_eq!(decls.len(), 3);
        assert_eq!(decls[0].params, vec!["a".to_string()]);
        assert_eq!(
            decls[2].constructors[0].fields[0],
            TypeExpr::Con {
                name: "Maybe".into(),
                args: vec![TypeExpr::con("Bool")]
            }
        );
    }

    #[test]
    fn reports_position() {
        let err = parse_decls("data T = A\ndata U = B | ").unwrap_err();
        match err {
            Error::Syntax { line, column, .. } => assert_eq!((line, column), (2, 14)),
            e => panic!("unexpected {e}"),
        }
        let err = parse_decls("data T = A $").unwrap_err();
        assert!(matches!(err, Error::Syntax { line: 1, column: 12, .. }));
    }

    #[test]
    fn rejects_missing_equals_and_unclosed_paren() {
        assert!(matches!(parse_decls("data T A"), Err(Error::Syntax { .. })));
        assert!(matches!(parse_decls("data T = A (Maybe Bool"), Err(Error::Syntax { .. })));
        assert!(matches!(parse_decls("T = A"), Err(Error::Syntax { .. })));
    }

    #[test]
    fn empty_source_has_no_decls() {
        assert!(parse_decls("  -- nothing\n").unwrap().is_empty());
    }
}
