use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::adt::{Atom, CtorId, FieldRef, TypeId, Universe};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AtomValue {
    Int(i64),
    Double(f64),
    Char(char),
    Unit,
}

impl AtomValue {
    pub fn atom(&self) -> Atom {
        match self {
            AtomValue::Int(_) => Atom::Int,
            AtomValue::Double(_) => Atom::Double,
            AtomValue::Char(_) => Atom::Char,
            AtomValue::Unit => Atom::Unit,
        }
    }

    fn write_sexp(&self, out: &mut String) {
        match self {
            AtomValue::Int(i) => write!(out, "{i}").unwrap(),
            AtomValue::Double(d) => write!(out, "{d:?}").unwrap(),
            AtomValue::Char(c) => match c {
                '\'' | '\\' => write!(out, "'\\{c}'").unwrap(),
                _ => write!(out, "'{c}'").unwrap(),
            },
            AtomValue::Unit => out.push_str("()"),
        }
    }

    fn write_json(&self, out: &mut String) {
        match self {
            AtomValue::Int(i) => write!(out, "{i}").unwrap(),
            AtomValue::Double(d) => write!(out, "{d:?}").unwrap(),
            AtomValue::Char(c) => out.push_str(&serde_json::to_string(&c.to_string()).unwrap()),
            AtomValue::Unit => out.push_str("null"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Token {
    Ctor(CtorId),
    Atom(AtomValue),
}

/// A generated value, stored as its constructors and atoms in pre-order.
///
/// Each constructor token is followed by the encodings of its fields, so the
/// tree shape follows from constructor arities. The flat layout keeps very
/// deep values (the unbounded strategy can produce millions of nested
/// constructors) cheap to build, walk and drop.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Value {
    tokens: Vec<Token>,
}

impl Value {
    pub fn from_tokens(tokens: Vec<Token>) -> Self {
        Value { tokens }
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    /// Outermost constructor.
    pub fn head(&self) -> Option<CtorId> {
        match self.tokens.first() {
            Some(Token::Ctor(c)) => Some(*c),
            _ => None,
        }
    }

    /// Number of constructors, ground atoms excluded.
    pub fn size(&self) -> usize {
        self.tokens
            .iter()
            .filter(|t| matches!(t, Token::Ctor(_)))
            .count()
    }

    /// Occurrences of every constructor, keyed by qualified name.
    pub fn count_constructors(&self, u: &Universe) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        for t in &self.tokens {
            if let Token::Ctor(c) = t {
                *out.entry(u.qualified(*c).to_string()).or_insert(0) += 1;
            }
        }
        out
    }

    /// Longest chain of nested family constructors, minus one: a lone
    /// constructor has depth 0.
    pub fn family_depth(&self, u: &Universe) -> usize {
        // (remaining fields, family depth of the constructor)
        let mut stack: Vec<(usize, usize)> = Vec::new();
        let mut deepest = 0;
        for t in &self.tokens {
            let parent_depth = stack.last().map(|&(_, d)| d);
            if let Some(top) = stack.last_mut() {
                top.0 -= 1;
            }
            if let Token::Ctor(c) = t {
                let family = u.in_family(u.ctor(*c).owner);
                let depth = match (parent_depth, family) {
                    (Some(d), true) => d + 1,
                    (Some(d), false) => d,
                    (None, _) => 0,
                };
                if family {
                    deepest = deepest.max(depth);
                }
                stack.push((u.ctor(*c).fields.len(), depth));
            }
            while let Some(&(0, _)) = stack.last() {
                stack.pop();
            }
        }
        deepest
    }

    /// Checks arities and field types against the declarations, with the
    /// outermost constructor belonging to `ty`.
    pub fn type_check(&self, u: &Universe, ty: TypeId) -> Result<()> {
        let root = if u.in_family(ty) {
            FieldRef::Family(ty)
        } else {
            FieldRef::Foreign(ty)
        };
        let mut expect = vec![root];
        for (i, t) in self.tokens.iter().enumerate() {
            let want = expect
                .pop()
                .ok_or_else(|| Error::IllTyped(format!("trailing token at position {i}")))?;
            match (t, want) {
                (Token::Ctor(c), FieldRef::Family(t) | FieldRef::Foreign(t)) if u.ctor(*c).owner == t => {
                    expect.extend(u.ctor(*c).fields.iter().rev().copied());
                }
                (Token::Atom(a), FieldRef::Ground(g)) if a.atom() == g => {}
                (t, want) => {
                    return Err(Error::IllTyped(format!(
                        "token {t:?} at position {i} where {want:?} was expected"
                    )))
                }
            }
        }
        if !expect.is_empty() {
            return Err(Error::IllTyped(format!("{} field(s) missing", expect.len())));
        }
        Ok(())
    }

    /// S-expression with bare constructor names, e.g. `(Node (LeafA) (LeafB))`.
    pub fn to_sexp(&self, u: &Universe) -> String {
        let mut out = String::new();
        let mut open: Vec<usize> = Vec::new();
        for t in &self.tokens {
            if let Some(top) = open.last_mut() {
                out.push(' ');
                *top -= 1;
            }
            match t {
                Token::Ctor(c) => {
                    out.push('(');
                    out.push_str(&u.ctor(*c).name);
                    let arity = u.ctor(*c).fields.len();
                    if arity == 0 {
                        out.push(')');
                    } else {
                        open.push(arity);
                    }
                }
                Token::Atom(a) => a.write_sexp(&mut out),
            }
            while let Some(&0) = open.last() {
                open.pop();
                out.push(')');
            }
        }
        out
    }

    /// JSON with `{"con": <qualified name>, "args": [...]}` objects; atoms
    /// are numbers, one-character strings or `null` for unit.
    pub fn to_json_string(&self, u: &Universe) -> String {
        let mut out = String::new();
        // (remaining, arity)
        let mut open: Vec<(usize, usize)> = Vec::new();
        for t in &self.tokens {
            if let Some(top) = open.last_mut() {
                if top.0 < top.1 {
                    out.push(',');
                }
                top.0 -= 1;
            }
            match t {
                Token::Ctor(c) => {
                    out.push_str("{\"con\":");
                    out.push_str(&serde_json::to_string(u.qualified(*c)).unwrap());
                    out.push_str(",\"args\":[");
                    let arity = u.ctor(*c).fields.len();
                    if arity == 0 {
                        out.push_str("]}");
                    } else {
                        open.push((arity, arity));
                    }
                }
                Token::Atom(a) => a.write_json(&mut out),
            }
            while let Some(&(0, _)) = open.last() {
                open.pop();
                out.push_str("]}");
            }
        }
        out
    }
}
