use thiserror::Error;

/// A parameter failed validation.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid {field}: {reason}")]
pub struct ConfigError {
    pub field: String,
    pub reason: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self { field: field.into(), reason: reason.into() }
    }
}

pub(crate) fn require_positive(field: &str, value: f64) -> Result<(), ConfigError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::new(field, format!("must be positive and finite, got {value}")))
    }
}

pub(crate) fn require_positive_diag(field: &str, diag: &[f64; 3]) -> Result<(), ConfigError> {
    for (i, v) in diag.iter().enumerate() {
        require_positive(&format!("{field}[{i}]"), *v)?;
    }
    Ok(())
}
