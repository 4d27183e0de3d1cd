use std::fmt;

use thiserror::Error;

/// Stable diagnostic codes for front-end failures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DiagCode {
    Syntax,
    NestedLoop,
    MultipleLoops,
    FloatLiteral,
    UnsupportedType,
    ReturnInLoop,
    Unsupported,
    FunctionCall,
    MissingLoop,
    AssertionCount,
    StatementAfterLoop,
    UndeclaredVariable,
    Type,
    DuplicateDeclaration,
    NoCodeBlock,
}

impl DiagCode {
    pub fn as_str(self) -> &'static str {
        match self {
            DiagCode::Syntax => "E001",
            DiagCode::NestedLoop => "E100",
            DiagCode::MultipleLoops => "E101",
            DiagCode::FloatLiteral => "E102",
            DiagCode::UnsupportedType => "E103",
            DiagCode::ReturnInLoop => "E104",
            DiagCode::Unsupported => "E105",
            DiagCode::FunctionCall => "E106",
            DiagCode::MissingLoop => "E107",
            DiagCode::AssertionCount => "E108",
            DiagCode::StatementAfterLoop => "E109",
            DiagCode::UndeclaredVariable => "E200",
            DiagCode::Type => "E201",
            DiagCode::DuplicateDeclaration => "E202",
            DiagCode::NoCodeBlock => "E300",
        }
    }
}

impl fmt::Display for DiagCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("{line}:{col}: error[{code}]: {message}")]
pub struct LangError {
    pub code: DiagCode,
    pub message: String,
    pub line: usize,
    pub col: usize,
}

impl LangError {
    pub fn new(code: DiagCode, message: impl Into<String>, line: usize, col: usize) -> LangError {
        LangError {
            code,
            message: message.into(),
            line,
            col,
        }
    }
}
