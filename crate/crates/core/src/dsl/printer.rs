use std::fmt::Write;

use super::ast::*;

/// Canonical text form. Scene declarations come first, one per line, then a
/// blank line and one step per line; a fallback sits on its own indented
/// line under its step.
pub fn print_program(p: &Program) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "program {}", quote(&p.name));
    if !p.scene.is_empty() {
        out.push('\n');
        for d in &p.scene {
            let _ = write!(out, "scene {} {}", d.kind.keyword(), d.id);
            if let Some([x, y, z]) = d.position {
                let _ = write!(out, " at ({}, {}, {})", num(x), num(y), num(z));
            }
            out.push('\n');
        }
    }
    out.push('\n');
    for s in &p.steps {
        let _ = write!(out, "step {}: say {}", s.index, quote(&s.say));
        if let Some(e) = &s.expect {
            out.push(' ');
            expectation(&mut out, e);
        }
        out.push('\n');
        if let Some(fb) = &s.fallback {
            let _ = write!(out, "  on timeout: say {} ", quote(&fb.say));
            expectation(&mut out, &fb.expect);
            out.push('\n');
        }
    }
    out
}

fn expectation(out: &mut String, e: &Expectation) {
    let _ = write!(out, "expect within {}s: ", num(e.within_s));
    pred(out, &e.pred);
}

pub fn print_predicate(p: &Predicate) -> String {
    let mut s = String::new();
    pred(&mut s, p);
    s
}

fn pred(out: &mut String, p: &Predicate) {
    match p {
        Predicate::All(ps) | Predicate::Any(ps) => {
            out.push_str(if matches!(p, Predicate::All(_)) { "all(" } else { "any(" });
            for (i, c) in ps.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                pred(out, c);
            }
            out.push(')');
        }
        Predicate::Hold { atom: a, seconds } => {
            out.push_str("hold(");
            atom(out, a);
            let _ = write!(out, ", {}s)", num(*seconds));
        }
        Predicate::Count { atom: a, n } => {
            out.push_str("count(");
            atom(out, a);
            let _ = write!(out, ", {n})");
        }
        Predicate::Atom(a) => atom(out, a),
    }
}

pub fn print_atom(a: &Atom) -> String {
    let mut s = String::new();
    atom(&mut s, a);
    s
}

fn atom(out: &mut String, a: &Atom) {
    let _ = match a {
        Atom::JointAngle { joint, min_deg, max_deg } => {
            write!(out, "joint_angle({joint}, {}, {})", num(*min_deg), num(*max_deg))
        }
        Atom::HandAt { target, radius_cm } => write!(out, "hand_at({target}, {})", num(*radius_cm)),
        Atom::Grasp { object } => write!(out, "grasp({object})"),
        Atom::Release { object } => write!(out, "release({object})"),
        Atom::ObjectAt { object, target, radius_cm } => {
            write!(out, "object_at({object}, {target}, {})", num(*radius_cm))
        }
        Atom::Rest { joint, seconds } => write!(out, "rest({joint}, {}s)", num(*seconds)),
    };
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hold_prints_as_written() {
        let p = Predicate::Hold {
            atom: Atom::HandAt { target: "t1".into(), radius_cm: 5.0 },
            seconds: 3.0,
        };
        assert_eq!(print_predicate(&p), "hold(hand_at(t1, 5), 3s)");
    }

    #[test]
    fn quotes_escape() {
        assert_eq!(quote("a\"b\\c\nd"), r#""a\"b\\c\nd""#);
    }

    #[test]
    fn fractional_numbers_keep_precision() {
        assert_eq!(num(0.1), "0.1");
        assert_eq!(num(-2.5), "-2.5");
        assert_eq!(num(25.4), "25.4");
    }
}
