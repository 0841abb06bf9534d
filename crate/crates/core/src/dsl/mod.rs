//! The intervention-program language: AST, parser, printer and semantic
//! checks.

pub mod ast;
pub mod diag;
pub mod lexer;
pub mod parser;
pub mod printer;
pub mod semantics;

pub use ast::*;
pub use diag::{DiagKind, Diagnostic, Rule, Span};
pub use parser::{parse_syntax, SourceMap};
pub use printer::{print_atom, print_predicate, print_program};
pub use semantics::{validate_semantics, Locus, SemanticIssue, MAX_PRED_DEPTH};

/// Parse and semantically validate. On failure every diagnostic is returned
/// with a line and column.
pub fn parse_program(src: &str) -> Result<Program, Vec<Diagnostic>> {
    parse_with_map(src).map(|(p, _)| p)
}

pub fn parse_with_map(src: &str) -> Result<(Program, SourceMap), Vec<Diagnostic>> {
    let (program, map) = parse_syntax(src)?;
    let issues = validate_semantics(&program);
    if issues.is_empty() {
        return Ok((program, map));
    }
    Err(issues
        .into_iter()
        .map(|i| {
            let span = semantics::locate(&map, &i.locus);
            parser::make_diag(src, DiagKind::Semantic, Some(i.rule), i.message, span, i.step)
        })
        .collect())
}

/// Like [`parse_program`] but for raw bytes, which may not be UTF-8.
pub fn parse_bytes(src: &[u8]) -> Result<Program, Vec<Diagnostic>> {
    match std::str::from_utf8(src) {
        Ok(s) => parse_program(s),
        Err(e) => {
            let at = e.valid_up_to();
            let prefix = std::str::from_utf8(&src[..at]).unwrap_or("");
            let (line, column) = diag::line_col(prefix, at);
            Err(vec![Diagnostic {
                kind: DiagKind::Lexical,
                rule: None,
                message: "source is not valid UTF-8".into(),
                line,
                column,
                span: Span::new(at, at + 1),
                step: None,
            }])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_program() {
        let p = parse_program("program \"p\"\nscene target t1 at (0,0,0)\nstep 1: say \"Rest.\" ").unwrap();
        assert_eq!(p.steps.len(), 1);
        assert!(!p.steps[0].is_monitored());
        assert_eq!(p.scene.len(), 1);
    }

    #[test]
    fn undeclared_id_names_id_and_step() {
        let src = "program \"p\"\nstep 1: say \"a\"\nstep 2: say \"b\" expect within 10s: grasp(green_cube)\n";
        let errs = parse_program(src).unwrap_err();
        assert_eq!(errs.len(), 1);
        let d = &errs[0];
        assert_eq!(d.rule, Some(Rule::UndeclaredId));
        assert_eq!(d.step, Some(2));
        assert!(d.message.contains("green_cube"));
        assert_eq!(&src[d.span.start..d.span.end], "green_cube");
        assert_eq!(d.line, 3);
    }

    #[test]
    fn hold_exceeding_timeout() {
        let src = "program \"p\"\nscene target t1\nstep 1: say \"a\" expect within 20s: hold(hand_at(t1, 5), 30s)\n";
        let errs = parse_program(src).unwrap_err();
        assert_eq!(errs[0].rule, Some(Rule::HoldExceedsTimeout));
        assert_eq!(errs[0].step, Some(1));
    }

    #[test]
    fn gap_in_numbering() {
        let src = "program \"p\"\nstep 1: say \"a\"\nstep 2: say \"b\"\nstep 4: say \"c\"\n";
        let errs = parse_program(src).unwrap_err();
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].rule, Some(Rule::NoncontiguousSteps));
        assert_eq!(errs[0].step, Some(4));
        assert_eq!(&src[errs[0].span.start..errs[0].span.end], "4");
    }

    #[test]
    fn nested_fallback_is_reported_at_the_second_clause() {
        let src = "program \"p\"\nscene target t1\nstep 1: say \"a\" expect within 5s: hand_at(t1, 5)\n  on timeout: say \"b\" expect within 5s: hand_at(t1, 9)\n  on timeout: say \"c\" expect within 5s: hand_at(t1, 12)\n";
        let errs = parse_program(src).unwrap_err();
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].rule, Some(Rule::NestedFallback));
        assert_eq!(errs[0].line, 5);
    }

    #[test]
    fn several_syntax_errors_in_one_pass() {
        let src = "program \"p\"\nstep 1: say oops\nstep 2: say \"fine\"\nstep 3 say \"no colon\"\n";
        let errs = parse_program(src).unwrap_err();
        assert_eq!(errs.len(), 2);
        assert_eq!(errs[0].line, 2);
        assert_eq!(errs[1].line, 4);
    }

    #[test]
    fn kind_mismatch() {
        let src = "program \"p\"\nscene object cup\nstep 1: say \"a\" expect within 5s: hand_at(cup, 5)\n";
        let errs = parse_program(src).unwrap_err();
        assert_eq!(errs[0].rule, Some(Rule::KindMismatch));
    }

    #[test]
    fn depth_cap() {
        let src = "program \"p\"\nscene target t\nstep 1: say \"a\" expect within 5s: all(any(all(any(hand_at(t, 5)))))\n";
        let errs = parse_program(src).unwrap_err();
        assert_eq!(errs[0].rule, Some(Rule::DepthExceeded));
        let ok = "program \"p\"\nscene target t\nstep 1: say \"a\" expect within 5s: all(any(hold(hand_at(t, 5), 1s)))\n";
        assert!(parse_program(ok).is_ok());
    }

    #[test]
    fn invalid_utf8() {
        let errs = parse_bytes(b"program \"p\xff\"").unwrap_err();
        assert_eq!(errs[0].kind, DiagKind::Lexical);
        assert_eq!(errs[0].column, 11);
    }

    #[test]
    fn print_then_parse() {
        let src = "program \"p\"\nscene target t1 at (0.5, -2, 3)\nscene joint right_elbow_flexion\nstep 1: say \"Rest.\"\nstep 2: say \"Go\" expect within 20s: hold(hand_at(t1, 5), 3s)\n  on timeout: say \"Try again\" expect within 10s: joint_angle(right_elbow_flexion, 80, 120)\n";
        let p = parse_program(src).unwrap();
        let printed = print_program(&p);
        assert!(printed.ends_with('\n'));
        assert_eq!(parse_program(&printed).unwrap(), p);
        assert_eq!(print_program(&parse_program(&printed).unwrap()), printed);
    }
}
