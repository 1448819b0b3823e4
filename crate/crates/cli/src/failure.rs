use std::fmt::Display;
use std::process::ExitCode;
use xmcts::scenario::ScenarioError;
use xmcts::session::SessionError;

/// A command failure, reported as one `error code=... message=...` line.
#[derive(Debug)]
pub struct Failure {
    pub internal: bool,
    pub code: String,
    pub fields: Vec<(&'static str, String)>,
    pub message: String,
}

impl Failure {
    pub fn user(code: &str, message: impl Display) -> Self {
        Self { internal: false, code: code.into(), fields: Vec::new(), message: message.to_string() }
    }

    pub fn internal(message: impl Display) -> Self {
        Self { internal: true, ..Self::user("internal", message) }
    }

    pub fn with(mut self, key: &'static str, value: impl Display) -> Self {
        self.fields.push((key, value.to_string()));
        self
    }

    pub fn line(&self) -> String {
        let mut out = format!("error code={}", self.code);
        for (k, v) in &self.fields {
            out.push_str(&format!(" {k}={v}"));
        }
        let quoted = serde_json::to_string(&self.message).expect("strings serialize");
        out.push_str(&format!(" message={quoted}"));
        out
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(if self.internal { 2 } else { 1 })
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        let failure = Failure::user("invalid_scenario", &e);
        match e.field() {
            "" => failure,
            field => failure.with("field", field),
        }
    }
}

impl From<SessionError> for Failure {
    fn from(e: SessionError) -> Self {
        match e {
            SessionError::Scenario(e) => e.into(),
            SessionError::Model(_) | SessionError::Search(_) => Failure::internal(e),
            other => Failure::user(other.code(), other),
        }
    }
}

pub type Outcome = Result<(), Failure>;
