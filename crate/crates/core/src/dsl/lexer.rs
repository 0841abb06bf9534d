use super::diag::Span;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Str(String),
    /// Numeric literal; `int` is set when it has no sign and no fraction.
    Num { value: f64, int: bool },
    LParen,
    RParen,
    Comma,
    Colon,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Str(_) => "string literal".into(),
            Tok::Num { .. } => "number".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LexError {
    pub message: String,
    pub span: Span,
}

pub fn lex(src: &str) -> Result<Vec<Token>, LexError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b' ' | b'\t' | b'\r' | b'\n' => i += 1,
            b'#' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            b'(' => {
                out.push(Token { tok: Tok::LParen, span: Span::new(i, i + 1) });
                i += 1;
            }
            b')' => {
                out.push(Token { tok: Tok::RParen, span: Span::new(i, i + 1) });
                i += 1;
            }
            b',' => {
                out.push(Token { tok: Tok::Comma, span: Span::new(i, i + 1) });
                i += 1;
            }
            b':' => {
                out.push(Token { tok: Tok::Colon, span: Span::new(i, i + 1) });
                i += 1;
            }
            b'"' => {
                let (s, end) = lex_string(src, i)?;
                out.push(Token { tok: Tok::Str(s), span: Span::new(i, end) });
                i = end;
            }
            b'-' | b'0'..=b'9' => {
                let start = i;
                if c == b'-' {
                    i += 1;
                    if i >= bytes.len() || !bytes[i].is_ascii_digit() {
                        return Err(LexError {
                            message: "expected digit after `-`".into(),
                            span: Span::new(start, i),
                        });
                    }
                }
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let mut frac = false;
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    frac = true;
                    if i >= bytes.len() || !bytes[i].is_ascii_digit() {
                        return Err(LexError {
                            message: "expected digit after decimal point".into(),
                            span: Span::new(start, i),
                        });
                    }
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                let text = &src[start..i];
                let value: f64 = text.parse().map_err(|_| LexError {
                    message: format!("malformed number `{text}`"),
                    span: Span::new(start, i),
                })?;
                if !value.is_finite() {
                    return Err(LexError {
                        message: format!("number `{text}` is out of range"),
                        span: Span::new(start, i),
                    });
                }
                out.push(Token {
                    tok: Tok::Num { value, int: c != b'-' && !frac },
                    span: Span::new(start, i),
                });
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push(Token {
                    tok: Tok::Ident(src[start..i].to_string()),
                    span: Span::new(start, i),
                });
            }
            _ => {
                let ch = src[i..].chars().next().unwrap_or('?');
                return Err(LexError {
                    message: format!("unexpected character {ch:?}"),
                    span: Span::new(i, i + ch.len_utf8()),
                });
            }
        }
    }
    out.push(Token { tok: Tok::Eof, span: Span::new(src.len(), src.len()) });
    Ok(out)
}

fn lex_string(src: &str, start: usize) -> Result<(String, usize), LexError> {
    let mut out = String::new();
    let mut chars = src[start + 1..].char_indices();
    while let Some((off, ch)) = chars.next() {
        let pos = start + 1 + off;
        match ch {
            '"' => return Ok((out, pos + 1)),
            '\n' => {
                return Err(LexError {
                    message: "newline in string literal".into(),
                    span: Span::new(start, pos),
                })
            }
            '\\' => match chars.next() {
                Some((_, '"')) => out.push('"'),
                Some((_, '\\')) => out.push('\\'),
                Some((_, 'n')) => out.push('\n'),
                Some((_, 't')) => out.push('\t'),
                Some((o, other)) => {
                    let p = start + 1 + o;
                    return Err(LexError {
                        message: format!("unknown escape `\\{other}`"),
                        span: Span::new(pos, p + other.len_utf8()),
                    });
                }
                None => break,
            },
            c => out.push(c),
        }
    }
    Err(LexError {
        message: "unterminated string literal".into(),
        span: Span::new(start, src.len()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexes_duration_as_number_then_ident() {
        let toks = lex("3s").unwrap();
        assert_eq!(toks[0].tok, Tok::Num { value: 3.0, int: true });
        assert_eq!(toks[1].tok, Tok::Ident("s".into()));
    }

    #[test]
    fn negative_and_fractional_numbers_are_not_ints() {
        let toks = lex("-2 1.5 7").unwrap();
        assert_eq!(toks[0].tok, Tok::Num { value: -2.0, int: false });
        assert_eq!(toks[1].tok, Tok::Num { value: 1.5, int: false });
        assert_eq!(toks[2].tok, Tok::Num { value: 7.0, int: true });
    }

    #[test]
    fn string_escapes() {
        let toks = lex(r#""say \"hi\" \\ now""#).unwrap();
        assert_eq!(toks[0].tok, Tok::Str("say \"hi\" \\ now".into()));
    }

    #[test]
    fn comments_are_skipped() {
        let toks = lex("# hello\nstep # trailing\n").unwrap();
        assert_eq!(toks.len(), 2);
    }

    #[test]
    fn unterminated_string_is_an_error() {
        let err = lex("say \"oops").unwrap_err();
        assert!(err.message.contains("unterminated"));
        assert_eq!(err.span.start, 4);
    }

    #[test]
    fn stray_character_is_located() {
        let err = lex("step 1: say \"a\" @").unwrap_err();
        assert_eq!(err.span, Span::new(16, 17));
    }
}
