//! Algebraic data type declarations: parsing, monomorphization, the
//! recursive family of a generation root and constructor dependency graphs.

mod ast;
mod cdg;
mod parse;
mod universe;

pub use ast::{print_decls, ConstructorDecl, TypeDecl, TypeExpr};
pub use cdg::{build_cdg, Cdg, CdgEdge};
pub use parse::parse_decls;
pub use universe::{parse_universe, Atom, CtorId, CtorInfo, FieldRef, TypeId, TypeInfo, Universe};
