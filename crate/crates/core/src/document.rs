//! Strict JSON document loading shared by the structure and questionnaire files.

use serde::de::DeserializeOwned;
use thiserror::Error;

/// Failure to turn document bytes into a typed value.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DocumentError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema error at line {line}, column {column}: {message}")]
    Schema {
        line: usize,
        column: usize,
        message: String,
    },
}

pub(crate) fn from_json<T: DeserializeOwned>(bytes: &[u8]) -> Result<T, DocumentError> {
    serde_json::from_slice(bytes).map_err(|e| {
        let (line, column) = (e.line(), e.column());
        // serde_json appends " at line X column Y"; strip it, the position is kept separately
        let full = e.to_string();
        let message = match full.rfind(" at line ") {
            Some(i) => full[..i].to_string(),
            None => full,
        };
        match e.classify() {
            serde_json::error::Category::Data => DocumentError::Schema {
                line,
                column,
                message,
            },
            _ => DocumentError::Syntax {
                line,
                column,
                message,
            },
        }
    })
}
