//! Recursive-descent parser for the intervention language.
//!
//! Syntax errors inside a scene declaration or a step are recorded and the
//! parser resynchronises at the next `scene` or `step` keyword, so one pass
//! reports every broken statement.

use super::ast::*;
use super::diag::{DiagKind, Diagnostic, Rule, Span};
use super::lexer::{lex, Tok, Token};

/// Spans of a parsed predicate node, mirroring the [`Predicate`] tree.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PredSpans {
    pub span: Span,
    pub children: Vec<PredSpans>,
    /// Identifier argument spans, in the order returned by `Atom::references`.
    pub ids: Vec<Span>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExpectSpans {
    pub span: Span,
    pub timeout: Span,
    pub pred: PredSpans,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepSpans {
    pub span: Span,
    pub index: Span,
    pub say: Span,
    pub expect: Option<ExpectSpans>,
    pub fallback: Option<(Span, Span, ExpectSpans)>,
}

/// Where each construct of a program came from in the source text.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SourceMap {
    pub name: Span,
    pub scene: Vec<Span>,
    pub scene_ids: Vec<Span>,
    pub steps: Vec<StepSpans>,
}

const MAX_NESTING: usize = 64;

struct Parser<'s> {
    src: &'s str,
    toks: Vec<Token>,
    pos: usize,
    diags: Vec<Diagnostic>,
    nesting: usize,
}

struct SyntaxError {
    message: String,
    span: Span,
}

type PResult<T> = Result<T, SyntaxError>;

/// Parse without semantic checks. Returns the program and its source map
/// when the text is syntactically well formed; otherwise every lexical or
/// syntax diagnostic found. Nested fallbacks are reported here because the
/// tree cannot represent them.
pub fn parse_syntax(src: &str) -> Result<(Program, SourceMap), Vec<Diagnostic>> {
    let toks = match lex(src) {
        Ok(t) => t,
        Err(e) => {
            return Err(vec![make_diag(src, DiagKind::Lexical, None, e.message, e.span, None)]);
        }
    };
    let mut p = Parser { src, toks, pos: 0, diags: Vec::new(), nesting: 0 };
    let out = p.program();
    if p.diags.is_empty() {
        Ok(out.expect("no diagnostics implies a program"))
    } else {
        Err(p.diags)
    }
}

pub(crate) fn make_diag(
    src: &str,
    kind: DiagKind,
    rule: Option<Rule>,
    message: String,
    span: Span,
    step: Option<u32>,
) -> Diagnostic {
    let (line, column) = super::diag::line_col(src, span.start);
    Diagnostic { kind, rule, message, line, column, span, step }
}

impl<'s> Parser<'s> {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn at_kw(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    fn err<T>(&self, expected: &str) -> PResult<T> {
        let t = self.peek();
        Err(SyntaxError {
            message: format!("expected {expected}, found {}", t.tok.describe()),
            span: t.span,
        })
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<Span> {
        if self.at_kw(kw) {
            Ok(self.bump().span)
        } else {
            self.err(&format!("`{kw}`"))
        }
    }

    fn expect_tok(&mut self, tok: Tok, what: &str) -> PResult<Span> {
        if self.peek().tok == tok {
            Ok(self.bump().span)
        } else {
            self.err(what)
        }
    }

    fn ident(&mut self) -> PResult<(String, Span)> {
        match &self.peek().tok {
            Tok::Ident(s) => {
                let s = s.clone();
                let span = self.bump().span;
                Ok((s, span))
            }
            _ => self.err("identifier"),
        }
    }

    fn string(&mut self) -> PResult<(String, Span)> {
        match &self.peek().tok {
            Tok::Str(s) => {
                let s = s.clone();
                let span = self.bump().span;
                Ok((s, span))
            }
            _ => self.err("string literal"),
        }
    }

    fn number(&mut self) -> PResult<(f64, Span)> {
        match self.peek().tok {
            Tok::Num { value, .. } => {
                let span = self.bump().span;
                Ok((value, span))
            }
            _ => self.err("number"),
        }
    }

    fn integer(&mut self) -> PResult<(u32, Span)> {
        match self.peek().tok {
            Tok::Num { value, int: true } if value <= u32::MAX as f64 => {
                let span = self.bump().span;
                Ok((value as u32, span))
            }
            _ => self.err("non-negative integer"),
        }
    }

    fn duration(&mut self) -> PResult<(f64, Span)> {
        let (v, span) = self.number()?;
        let s = self.expect_kw("s").map_err(|e| SyntaxError {
            message: format!("{} (durations are written like `3s`)", e.message),
            span: e.span,
        })?;
        Ok((v, span.to(s)))
    }

    fn record(&mut self, e: SyntaxError) {
        let d = make_diag(self.src, DiagKind::Syntax, None, e.message, e.span, None);
        self.diags.push(d);
    }

    /// Skip to the next statement keyword.
    fn synchronize(&mut self) {
        loop {
            match &self.peek().tok {
                Tok::Eof => return,
                Tok::Ident(s) if s == "step" || s == "scene" => return,
                _ => {
                    self.bump();
                }
            }
        }
    }

    fn program(&mut self) -> Option<(Program, SourceMap)> {
        let mut map = SourceMap::default();
        let mut name = String::new();
        let header = (|| -> PResult<()> {
            self.expect_kw("program")?;
            let (n, span) = self.string()?;
            name = n;
            map.name = span;
            Ok(())
        })();
        if let Err(e) = header {
            self.record(e);
            self.synchronize();
        }

        let mut scene = Vec::new();
        while self.at_kw("scene") {
            let start = self.pos;
            match self.scene_decl() {
                Ok((decl, span, id_span)) => {
                    scene.push(decl);
                    map.scene.push(span);
                    map.scene_ids.push(id_span);
                }
                Err(e) => {
                    self.record(e);
                    if self.pos == start {
                        self.bump();
                    }
                    self.synchronize();
                }
            }
        }

        let mut steps = Vec::new();
        loop {
            if self.at_kw("step") {
                let start = self.pos;
                match self.step() {
                    Ok((step, spans)) => {
                        steps.push(step);
                        map.steps.push(spans);
                    }
                    Err(e) => {
                        self.record(e);
                        if self.pos == start {
                            self.bump();
                        }
                        self.synchronize();
                    }
                }
            } else if self.peek().tok == Tok::Eof {
                break;
            } else if self.at_kw("scene") {
                let e = SyntaxError {
                    message: "scene declarations must precede the first step".into(),
                    span: self.peek().span,
                };
                self.record(e);
                self.bump();
                self.synchronize();
            } else {
                let e = self.err::<()>("`step`").unwrap_err();
                self.record(e);
                self.bump();
                self.synchronize();
            }
        }
        if steps.is_empty() && self.diags.is_empty() {
            let end = self.src.len();
            self.record(SyntaxError {
                message: "a program needs at least one step".into(),
                span: Span::new(end, end),
            });
        }
        if self.diags.is_empty() {
            Some((Program { name, scene, steps }, map))
        } else {
            None
        }
    }

    fn scene_decl(&mut self) -> PResult<(SceneDecl, Span, Span)> {
        let start = self.expect_kw("scene")?;
        let (kind_kw, kind_span) = self.ident()?;
        let kind = match kind_kw.as_str() {
            "target" => SceneKind::Target,
            "object" => SceneKind::Object,
            "joint" => SceneKind::Joint,
            _ => {
                return Err(SyntaxError {
                    message: format!("expected `target`, `object` or `joint`, found `{kind_kw}`"),
                    span: kind_span,
                })
            }
        };
        let (id, id_span) = self.ident()?;
        let mut end = id_span;
        let mut position = None;
        if kind != SceneKind::Joint && self.at_kw("at") {
            self.bump();
            self.expect_tok(Tok::LParen, "`(`")?;
            let (x, _) = self.number()?;
            self.expect_tok(Tok::Comma, "`,`")?;
            let (y, _) = self.number()?;
            self.expect_tok(Tok::Comma, "`,`")?;
            let (z, _) = self.number()?;
            end = self.expect_tok(Tok::RParen, "`)`")?;
            position = Some([x, y, z]);
        }
        Ok((SceneDecl { kind, id, position }, start.to(end), id_span))
    }

    fn step(&mut self) -> PResult<(Step, StepSpans)> {
        let start = self.expect_kw("step")?;
        let (index, index_span) = self.integer()?;
        self.expect_tok(Tok::Colon, "`:`")?;
        self.expect_kw("say")?;
        let (say, say_span) = self.string()?;
        let mut spans = StepSpans { span: start.to(say_span), index: index_span, say: say_span, ..Default::default() };
        let mut expect = None;
        if self.at_kw("expect") {
            let (e, es) = self.expectation()?;
            spans.span = spans.span.to(es.span);
            expect = Some(e);
            spans.expect = Some(es);
        }
        let mut fallback = None;
        if self.at_kw("on") {
            let (fb, fb_span, fb_say, fb_es) = self.fallback()?;
            spans.span = spans.span.to(fb_span);
            fallback = Some(fb);
            spans.fallback = Some((fb_span, fb_say, fb_es));
        }
        while self.at_kw("on") {
            let (_, extra, _, _) = self.fallback()?;
            let d = make_diag(
                self.src,
                DiagKind::Semantic,
                Some(Rule::NestedFallback),
                format!("step {index}: a fallback cannot have its own fallback"),
                extra,
                Some(index),
            );
            self.diags.push(d);
        }
        Ok((Step { index, say, expect, fallback }, spans))
    }

    fn fallback(&mut self) -> PResult<(Fallback, Span, Span, ExpectSpans)> {
        let start = self.expect_kw("on")?;
        self.expect_kw("timeout")?;
        self.expect_tok(Tok::Colon, "`:`")?;
        self.expect_kw("say")?;
        let (say, say_span) = self.string()?;
        if !self.at_kw("expect") {
            return self.err("`expect` (a fallback must be monitored)");
        }
        let (expect, es) = self.expectation()?;
        let span = start.to(es.span);
        Ok((Fallback { say, expect }, span, say_span, es))
    }

    fn expectation(&mut self) -> PResult<(Expectation, ExpectSpans)> {
        let start = self.expect_kw("expect")?;
        self.expect_kw("within")?;
        let (within_s, timeout) = self.duration()?;
        self.expect_tok(Tok::Colon, "`:`")?;
        let (pred, ps) = self.pred()?;
        let span = start.to(ps.span);
        Ok((Expectation { within_s, pred }, ExpectSpans { span, timeout, pred: ps }))
    }

    fn pred(&mut self) -> PResult<(Predicate, PredSpans)> {
        self.nesting += 1;
        if self.nesting > MAX_NESTING {
            let span = self.peek().span;
            self.nesting -= 1;
            return Err(SyntaxError { message: "predicate nesting is too deep".into(), span });
        }
        let r = self.pred_inner();
        self.nesting -= 1;
        r
    }

    fn pred_inner(&mut self) -> PResult<(Predicate, PredSpans)> {
        let head = match &self.peek().tok {
            Tok::Ident(s) => s.clone(),
            _ => return self.err("predicate"),
        };
        match head.as_str() {
            "all" | "any" => {
                let start = self.bump().span;
                self.expect_tok(Tok::LParen, "`(`")?;
                let mut items = Vec::new();
                let mut children = Vec::new();
                loop {
                    let (p, s) = self.pred()?;
                    items.push(p);
                    children.push(s);
                    if self.peek().tok == Tok::Comma {
                        self.bump();
                    } else {
                        break;
                    }
                }
                let end = self.expect_tok(Tok::RParen, "`,` or `)`")?;
                let pred = if head == "all" { Predicate::All(items) } else { Predicate::Any(items) };
                Ok((pred, PredSpans { span: start.to(end), children, ids: Vec::new() }))
            }
            "hold" => {
                let start = self.bump().span;
                self.expect_tok(Tok::LParen, "`(`")?;
                let (atom, a) = self.atom()?;
                self.expect_tok(Tok::Comma, "`,`")?;
                let (seconds, _) = self.duration()?;
                let end = self.expect_tok(Tok::RParen, "`)`")?;
                Ok((Predicate::Hold { atom, seconds }, PredSpans { span: start.to(end), children: vec![a], ids: Vec::new() }))
            }
            "count" => {
                let start = self.bump().span;
                self.expect_tok(Tok::LParen, "`(`")?;
                let (atom, a) = self.atom()?;
                self.expect_tok(Tok::Comma, "`,`")?;
                let (n, _) = self.integer()?;
                let end = self.expect_tok(Tok::RParen, "`)`")?;
                Ok((Predicate::Count { atom, n }, PredSpans { span: start.to(end), children: vec![a], ids: Vec::new() }))
            }
            _ => {
                let (atom, s) = self.atom()?;
                Ok((Predicate::Atom(atom), s))
            }
        }
    }

    fn atom(&mut self) -> PResult<(Atom, PredSpans)> {
        let (head, start) = self.ident()?;
        self.expect_tok(Tok::LParen, "`(`")?;
        let mut ids = Vec::new();
        let atom = match head.as_str() {
            "joint_angle" => {
                let (joint, js) = self.ident()?;
                ids.push(js);
                self.expect_tok(Tok::Comma, "`,`")?;
                let (min_deg, _) = self.number()?;
                self.expect_tok(Tok::Comma, "`,`")?;
                let (max_deg, _) = self.number()?;
                Atom::JointAngle { joint, min_deg, max_deg }
            }
            "hand_at" => {
                let (target, ts) = self.ident()?;
                ids.push(ts);
                self.expect_tok(Tok::Comma, "`,`")?;
                let (radius_cm, _) = self.number()?;
                Atom::HandAt { target, radius_cm }
            }
            "grasp" | "release" => {
                let (object, os) = self.ident()?;
                ids.push(os);
                if head == "grasp" {
                    Atom::Grasp { object }
                } else {
                    Atom::Release { object }
                }
            }
            "object_at" => {
                let (object, os) = self.ident()?;
                ids.push(os);
                self.expect_tok(Tok::Comma, "`,`")?;
                let (target, ts) = self.ident()?;
                ids.push(ts);
                self.expect_tok(Tok::Comma, "`,`")?;
                let (radius_cm, _) = self.number()?;
                Atom::ObjectAt { object, target, radius_cm }
            }
            "rest" => {
                let (joint, js) = self.ident()?;
                ids.push(js);
                self.expect_tok(Tok::Comma, "`,`")?;
                let (seconds, _) = self.duration()?;
                Atom::Rest { joint, seconds }
            }
            other => {
                return Err(SyntaxError {
                    message: format!("unknown predicate `{other}`"),
                    span: start,
                })
            }
        };
        let end = self.expect_tok(Tok::RParen, "`)`")?;
        Ok((atom, PredSpans { span: start.to(end), children: Vec::new(), ids }))
    }
}
