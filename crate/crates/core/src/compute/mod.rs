//! Per-feature computation: a small statically typed expression language
//! evaluated once per feature with results written back as attributes,
//! plus a ray-cast shadow kernel.

mod lexer;
mod parser;
mod program;
mod shadow;
mod typed;

use thiserror::Error;

use crate::model::{FeatureId, ModelError};

pub use parser::{parse_expression, BinOp, Expr};
pub use program::{run_analytical, run_analytical_with, AnalyticalRun, ComputeProgram};
pub use shadow::{
    ray_triangle, run_shadow_kernel, run_shadow_kernel_with, ShadowError, SunDirection,
};
pub use typed::{compile_expression, linfit, Expression, Type, Value};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompileError {
    #[error("syntax error at {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("type error: {0}")]
    Type(String),
    #[error("unknown function '{0}'")]
    UnknownFunction(String),
    #[error("variable '{0}' is not bound")]
    UnboundVariable(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ComputeError {
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error("feature {feature}: variable '{variable}' holds a {found} value")]
    TypeMismatch {
        feature: FeatureId,
        variable: String,
        found: &'static str,
    },
    #[error("program yields {found} value(s) but {expected} result field(s) were named")]
    ArityMismatch { expected: usize, found: usize },
    #[error("invalid result field name '{0}'")]
    InvalidResultField(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}
