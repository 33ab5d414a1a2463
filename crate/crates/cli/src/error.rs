use serde_json::{json, Value};

use migsim_core::experiment::ExperimentError;
use migsim_core::fleet::FleetError;
use migsim_core::trace::TraceError;
use migsim_core::ModelError;

pub const EXIT_IO: u8 = 1;
pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_MODEL: u8 = 3;

/// An error as reported on standard error, with its process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub kind: &'static str,
    pub message: String,
    pub container: Option<String>,
    pub location: Option<String>,
}

impl CliError {
    pub fn invalid(message: impl Into<String>) -> Self {
        Self { code: EXIT_VALIDATION, kind: "InvalidArgument", message: message.into(), container: None, location: None }
    }

    pub fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        Self { code: EXIT_IO, kind: "Io", message: format!("{}: {err}", path.display()), container: None, location: None }
    }

    fn with_container(mut self, id: &str) -> Self {
        self.container = Some(id.to_string());
        self
    }

    pub fn to_json(&self) -> Value {
        let mut body = json!({ "kind": self.kind, "message": self.message, "exit_code": self.code });
        if let Some(id) = &self.container {
            body["container"] = json!(id);
        }
        if let Some(loc) = &self.location {
            body["location"] = json!(loc);
        }
        json!({ "error": body })
    }
}

fn model_kind(err: &ModelError) -> &'static str {
    match err {
        ModelError::NonPositiveMemory { .. } => "NonPositiveMemory",
        ModelError::NonPositiveRate { .. } => "NonPositiveRate",
        ModelError::NegativeDirtyRate { .. } => "NegativeDirtyRate",
        ModelError::NegativeGap { .. } => "NegativeGap",
        ModelError::LambdaNotLessThanOne { .. } => "LambdaNotLessThanOne",
        ModelError::EmptyTrace => "EmptyTrace",
        ModelError::TraceTooShort { .. } => "TraceTooShort",
        ModelError::InvalidPolicy(_) => "InvalidPolicy",
        ModelError::ZeroRounds => "ZeroRounds",
    }
}

impl From<ModelError> for CliError {
    fn from(err: ModelError) -> Self {
        let code = if err.is_validation() { EXIT_VALIDATION } else { EXIT_MODEL };
        Self { code, kind: model_kind(&err), message: err.to_string(), container: None, location: None }
    }
}

impl From<FleetError> for CliError {
    fn from(err: FleetError) -> Self {
        match err {
            FleetError::Container { id, source } => CliError::from(source).with_container(&id),
            FleetError::InvalidMethod(source) => CliError::from(source),
            FleetError::ZeroContainers => Self { kind: "ZeroContainers", ..CliError::invalid(err.to_string()) },
            FleetError::NonPositiveBandwidth(_) => Self { kind: "NonPositiveBandwidth", ..CliError::invalid(err.to_string()) },
        }
    }
}

impl From<TraceError> for CliError {
    fn from(err: TraceError) -> Self {
        let message = err.to_string();
        match err {
            TraceError::Io { .. } => Self { code: EXIT_IO, kind: "Io", message, container: None, location: None },
            TraceError::SchemaViolation { location, message } => {
                Self { kind: "SchemaViolation", location: Some(location), ..CliError::invalid(message) }
            }
            TraceError::ValidationFailed { id, source } => CliError::from(source).with_container(&id),
            TraceError::EmptySeries => Self { kind: "EmptySeries", ..CliError::invalid(message) },
            TraceError::InvalidSpec(_) => Self { kind: "InvalidSpec", ..CliError::invalid(message) },
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(err: ExperimentError) -> Self {
        match err {
            ExperimentError::Fleet(e) => e.into(),
            ExperimentError::Trace(e) => e.into(),
            ExperimentError::Model(e) => e.into(),
            ExperimentError::InvalidSpec(m) => Self { kind: "InvalidSpec", ..CliError::invalid(m) },
            ExperimentError::NotTraced(id) => {
                Self { kind: "NotTraced", ..CliError::invalid(format!("container {id} has no trace")) }.with_container(&id)
            }
        }
    }
}
