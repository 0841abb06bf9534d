use serde::{Deserialize, Serialize};
use std::fmt;

/// Byte range into the source text, half open.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn to(self, other: Span) -> Span {
        Span::new(self.start.min(other.start), self.end.max(other.end))
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagKind {
    Lexical,
    Syntax,
    Semantic,
}

/// Semantic rule identifiers. The string forms are stable and appear in
/// service responses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Rule {
    UndeclaredId,
    DuplicateId,
    BadIdentifier,
    KindMismatch,
    UnknownJoint,
    PositionOnJoint,
    NoSteps,
    NoncontiguousSteps,
    NestedFallback,
    FallbackWithoutMonitor,
    EmptyUtterance,
    NonpositiveTimeout,
    HoldExceedsTimeout,
    NonpositiveDuration,
    BadAngleRange,
    NonpositiveRadius,
    CountZero,
    DepthExceeded,
    EmptyCombinator,
    NonfiniteNumber,
}

impl Rule {
    pub fn as_str(self) -> &'static str {
        match self {
            Rule::UndeclaredId => "UNDECLARED_ID",
            Rule::DuplicateId => "DUPLICATE_ID",
            Rule::BadIdentifier => "BAD_IDENTIFIER",
            Rule::KindMismatch => "KIND_MISMATCH",
            Rule::UnknownJoint => "UNKNOWN_JOINT",
            Rule::PositionOnJoint => "POSITION_ON_JOINT",
            Rule::NoSteps => "NO_STEPS",
            Rule::NoncontiguousSteps => "NONCONTIGUOUS_STEPS",
            Rule::NestedFallback => "NESTED_FALLBACK",
            Rule::FallbackWithoutMonitor => "FALLBACK_WITHOUT_MONITOR",
            Rule::EmptyUtterance => "EMPTY_UTTERANCE",
            Rule::NonpositiveTimeout => "NONPOSITIVE_TIMEOUT",
            Rule::HoldExceedsTimeout => "HOLD_EXCEEDS_TIMEOUT",
            Rule::NonpositiveDuration => "NONPOSITIVE_DURATION",
            Rule::BadAngleRange => "BAD_ANGLE_RANGE",
            Rule::NonpositiveRadius => "NONPOSITIVE_RADIUS",
            Rule::CountZero => "COUNT_ZERO",
            Rule::DepthExceeded => "DEPTH_EXCEEDED",
            Rule::EmptyCombinator => "EMPTY_COMBINATOR",
            Rule::NonfiniteNumber => "NONFINITE_NUMBER",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A located problem in DSL source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub kind: DiagKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<Rule>,
    pub message: String,
    pub line: usize,
    pub column: usize,
    pub span: Span,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<u32>,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            DiagKind::Lexical => "lexical error",
            DiagKind::Syntax => "syntax error",
            DiagKind::Semantic => "semantic error",
        };
        write!(f, "{}:{}: {kind}", self.line, self.column)?;
        if let Some(rule) = self.rule {
            write!(f, " [{rule}]")?;
        }
        write!(f, ": {}", self.message)
    }
}

/// 1-based line and column (in characters) of a byte offset.
pub fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(src.len());
    let mut line = 1;
    let mut col = 1;
    for (i, ch) in src.char_indices() {
        if i >= offset {
            break;
        }
        if ch == '\n' {
            line += 1;
            col = 1;
        } else {
            col += 1;
        }
    }
    (line, col)
}
