//! Front end for MCL: lexing, parsing, static checks, printing, patching.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod patch;
pub mod printer;
pub mod token;
pub mod typecheck;

pub use ast::*;
pub use parser::{parse, ParseError};
pub use patch::{render_patch, Edit, PatchError};
pub use typecheck::{typecheck, TypeError, TypedProgram, VarKind};

/// Parse and typecheck in one step.
pub fn load(file: &str, source: &str) -> Result<TypedProgram, FrontEndError> {
    let ast = parse(file, source)?;
    typecheck(ast).map_err(FrontEndError::Type)
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum FrontEndError {
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("{} type error(s)", .0.len())]
    Type(Vec<TypeError>),
}

impl FrontEndError {
    pub fn render(&self, file: &str, source: &str) -> String {
        match self {
            FrontEndError::Parse(e) => e.render(file, source),
            FrontEndError::Type(errs) => errs
                .iter()
                .map(|e| e.render(file, source))
                .collect::<Vec<_>>()
                .join("\n"),
        }
    }
}
