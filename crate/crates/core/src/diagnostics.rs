//! Findings: the diagnostics emitted by catalog validation, parsing and
//! semantic analysis.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::catalog::ConcernId;

/// 1-based line and column (columns count Unicode scalar values).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Position {
    pub line: u32,
    pub column: u32,
}

impl Position {
    pub fn new(line: u32, column: u32) -> Self {
        Self { line, column }
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

/// Half-open source range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: Position,
    pub end: Position,
}

impl Span {
    pub fn new(start: Position, end: Position) -> Self {
        Self { start, end }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
    Info,
}

impl Severity {
    pub fn as_str(self) -> &'static str {
        match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
            Severity::Info => "info",
        }
    }
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

macro_rules! codes {
    ($( $(#[$doc:meta])* $variant:ident => $text:literal, $sev:ident; )*) => {
        /// The documented index of finding codes.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum Code {
            $( $(#[$doc])* $variant, )*
        }

        impl Code {
            pub const ALL: &'static [Code] = &[$(Code::$variant),*];

            pub fn as_str(self) -> &'static str {
                match self {
                    $( Code::$variant => $text, )*
                }
            }

            pub fn severity(self) -> Severity {
                match self {
                    $( Code::$variant => Severity::$sev, )*
                }
            }

            pub fn parse(s: &str) -> Option<Code> {
                match s {
                    $( $text => Some(Code::$variant), )*
                    _ => None,
                }
            }
        }
    };
}

codes! {
    /// Unknown concern id.
    E001 => "E001", Error;
    /// Concern placed in the block of another perspective.
    E002 => "E002", Error;
    /// Second entry for the same concern.
    E003 => "E003", Error;
    /// Malformed header, relevance or attribute.
    E004 => "E004", Error;
    /// Malformed JSON document or schema violation.
    E005 => "E005", Error;
    /// Applicable entry without specification text.
    W101 => "W101", Warning;
    /// Relationship points from an applicable concern into unaddressed territory.
    W102 => "W102", Warning;
    /// Depended-upon concern excluded without a reason.
    W103 => "W103", Warning;
    /// Both sides of a trade-off marked essential.
    W104 => "W104", Warning;
    /// Experimental concern already approved.
    I201 => "I201", Info;
    CatDup => "E-CAT-DUP", Error;
    CatRef => "E-CAT-REF", Error;
    CatUnknown => "E-CAT-UNKNOWN", Error;
    CatRange => "E-CAT-RANGE", Error;
    CatCount => "E-CAT-COUNT", Error;
    CatPerspective => "E-CAT-PERSPECTIVE", Error;
    CatOrphan => "E-CAT-ORPHAN", Error;
    CatRoles => "E-CAT-ROLES", Error;
    CatEmptyTask => "E-CAT-EMPTY", Error;
    CatColor => "E-CAT-COLOR", Error;
    CatSelf => "E-CAT-SELF", Error;
    CatParse => "E-CAT-PARSE", Error;
    RenOverlay => "E-REN-OVERLAY", Error;
    SesSeed => "E-SES-SEED", Error;
    SesOrder => "E-SES-ORDER", Error;
    SesDecision => "E-SES-DEC", Error;
    SesRevisit => "E-SES-REV", Error;
    SesLog => "E-SES-LOG", Error;
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Code {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Code {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Code::parse(&s).ok_or_else(|| serde::de::Error::custom(format!("unknown finding code {s}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub code: Code,
    pub severity: Severity,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub concern: Option<ConcernId>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub span: Option<Span>,
    pub message: String,
}

impl Finding {
    pub fn new(code: Code, message: impl Into<String>) -> Self {
        let message = message.into();
        debug_assert!(!message.is_empty());
        Self {
            code,
            severity: code.severity(),
            concern: None,
            span: None,
            message,
        }
    }

    pub fn with_concern(mut self, concern: ConcernId) -> Self {
        self.concern = Some(concern);
        self
    }

    pub fn with_span(mut self, span: Span) -> Self {
        self.span = Some(span);
        self
    }

    pub fn at(self, line: u32, column: u32) -> Self {
        let p = Position::new(line, column);
        self.with_span(Span::new(p, p))
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }

    /// Sort key used by every producer: severity, then concern, then code.
    pub(crate) fn sort_key(&self) -> impl Ord + '_ {
        (
            self.severity,
            self.concern,
            self.code,
            self.span.map(|s| s.start),
            self.message.as_str(),
        )
    }
}

/// `CODE severity concern line:col message`; absent fields render as `-`.
impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} ", self.code, self.severity)?;
        match &self.concern {
            Some(c) => write!(f, "{c} ")?,
            None => f.write_str("- ")?,
        }
        match &self.span {
            Some(s) => write!(f, "{} ", s.start)?,
            None => f.write_str("- ")?,
        }
        f.write_str(&self.message)
    }
}

pub fn sort_findings(findings: &mut [Finding]) {
    findings.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
}

pub fn has_errors(findings: &[Finding]) -> bool {
    findings.iter().any(Finding::is_error)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn code_strings_round_trip_and_prefix_matches_severity() {
        for &code in Code::ALL {
            assert_eq!(Code::parse(code.as_str()), Some(code));
            let expected = match code.as_str().as_bytes()[0] {
                b'E' => Severity::Error,
                b'W' => Severity::Warning,
                b'I' => Severity::Info,
                _ => unreachable!(),
            };
            assert_eq!(code.severity(), expected, "{code}");
        }
    }

    #[test]
    fn display_line() {
        let f = Finding::new(Code::E002, "U belongs to perspective ux")
            .with_concern("U3".parse().unwrap())
            .at(7, 1);
        assert_eq!(f.to_string(), "E002 error U3 7:1 U belongs to perspective ux");
        let g = Finding::new(Code::CatRef, "dangling");
        assert_eq!(g.to_string(), "E-CAT-REF error - - dangling");
    }
}
