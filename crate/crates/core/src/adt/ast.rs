use std::fmt;

/// A field type as written in the source: a type variable or a (possibly
/// applied) type constructor.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TypeExpr {
    Var(String),
    Con { name: String, args: Vec<TypeExpr> },
}

impl TypeExpr {
    pub fn con(name: impl Into<String>) -> Self {
        TypeExpr::Con {
            name: name.into(),
            args: Vec::new(),
        }
    }

    fn fmt_field(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeExpr::Var(v) => f.write_str(v),
            TypeExpr::Con { name, args } if args.is_empty() => f.write_str(name),
            TypeExpr::Con { name, args } => {
                write!(f, "({name}")?;
                for a in args {
                    f.write_str(" ")?;
                    a.fmt_field(f)?;
                }
                f.write_str(")")
            }
        }
    }
}

impl fmt::Display for TypeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_field(f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstructorDecl {
    pub name: String,
    pub fields: Vec<TypeExpr>,
}

/// One `data` declaration, before monomorphization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeDecl {
    pub name: String,
    pub params: Vec<String>,
    pub constructors: Vec<ConstructorDecl>,
}

impl fmt::Display for TypeDecl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "data {}", self.name)?;
        for p in &self.params {
            write!(f, " {p}")?;
        }
        f.write_str(" =")?;
        for (i, c) in self.constructors.iter().enumerate() {
            if i > 0 {
                f.write_str(" |")?;
            }
            write!(f, " {}", c.name)?;
            for field in &c.fields {
                f.write_str(" ")?;
                field.fmt_field(f)?;
            }
        }
        Ok(())
    }
}

/// Renders declarations back into the DSL, one per line.
pub fn print_decls(decls: &[TypeDecl]) -> String {
    let mut out = String::new();
    for d in decls {
        out.push_str(&d.to_string());
        out.push('\n');
    }
    out
}
