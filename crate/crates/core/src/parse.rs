//! Recursive-descent parser for the concrete formula syntax.

use crate::formula::{and, atom, eq, exists, forall, not, or, Formula, LogicError};
use crate::structure::Vocabulary;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Equal,
    Amp,
    Pipe,
    Bang,
}

struct Lexer<'a> {
    src: &'a str,
    toks: Vec<(Tok, usize)>, // token with byte offset
}

fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let mut line = 1;
    let mut col = 1;
    for (i, c) in src.char_indices() {
        if i >= offset {
            break;
        }
        if c == '\n' {
            line += 1;
            col = 1;
        } else {
            col += 1;
        }
    }
    (line, col)
}

fn syntax_err(src: &str, offset: usize, msg: impl Into<String>) -> LogicError {
    let (line, col) = line_col(src, offset);
    LogicError::Syntax { line, col, msg: msg.into() }
}

fn lex(src: &str) -> Result<Lexer<'_>, LogicError> {
    let bytes = src.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\r' | '\n' => i += 1,
            '(' => {
                toks.push((Tok::LParen, i));
                i += 1;
            }
            ')' => {
                toks.push((Tok::RParen, i));
                i += 1;
            }
            ',' => {
                toks.push((Tok::Comma, i));
                i += 1;
            }
            '.' => {
                toks.push((Tok::Dot, i));
                i += 1;
            }
            '=' => {
                toks.push((Tok::Equal, i));
                i += 1;
            }
            '&' => {
                toks.push((Tok::Amp, i));
                i += 1;
            }
            '|' => {
                toks.push((Tok::Pipe, i));
                i += 1;
            }
            '!' => {
                toks.push((Tok::Bang, i));
                i += 1;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len() {
                    let d = bytes[i] as char;
                    if d.is_ascii_alphanumeric() || d == '_' {
                        i += 1;
                    } else {
                        break;
                    }
                }
                toks.push((Tok::Ident(src[start..i].to_string()), start));
            }
            other => return Err(syntax_err(src, i, format!("unexpected character {other:?}"))),
        }
    }
    Ok(Lexer { src, toks })
}

struct Parser<'a> {
    lx: Lexer<'a>,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.lx.toks.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.lx
            .toks
            .get(self.pos)
            .map(|&(_, o)| o)
            .unwrap_or(self.lx.src.len())
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.lx.toks.get(self.pos).map(|(t, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, msg: impl Into<String>) -> LogicError {
        syntax_err(self.lx.src, self.offset(), msg)
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), LogicError> {
        match self.peek() {
            Some(t) if *t == tok => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.err(format!("expected {what}"))),
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, LogicError> {
        match self.bump() {
            Some(Tok::Ident(s)) => Ok(s),
            _ => {
                self.pos = self.pos.saturating_sub(1);
                Err(self.err(format!("expected {what}")))
            }
        }
    }

    fn disjunction(&mut self) -> Result<Formula, LogicError> {
        let mut parts = vec![self.conjunction()?];
        while self.peek() == Some(&Tok::Pipe) {
            self.pos += 1;
            parts.push(self.conjunction()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { or(parts) })
    }

    fn conjunction(&mut self) -> Result<Formula, LogicError> {
        let mut parts = vec![self.unary()?];
        while self.peek() == Some(&Tok::Amp) {
            self.pos += 1;
            parts.push(self.unary()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { and(parts) })
    }

    fn unary(&mut self) -> Result<Formula, LogicError> {
        match self.peek() {
            Some(Tok::Bang) => {
                self.pos += 1;
                Ok(not(self.unary()?))
            }
            Some(Tok::Ident(kw)) if kw == "EX" || kw == "ALL" => {
                let kw = kw.clone();
                self.pos += 1;
                let v = self.ident("a variable after the quantifier")?;
                self.expect(Tok::Dot, "'.' after the quantified variable")?;
                let body = self.disjunction()?;
                Ok(if kw == "EX" { exists(v, body) } else { forall(v, body) })
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Formula, LogicError> {
        match self.peek().cloned() {
            Some(Tok::LParen) => {
                self.pos += 1;
                let f = self.disjunction()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(f)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                match name.as_str() {
                    "true" => return Ok(Formula::True),
                    "false" => return Ok(Formula::False),
                    _ => {}
                }
                match self.peek() {
                    Some(Tok::LParen) => {
                        self.pos += 1;
                        let mut args = vec![self.ident("an argument variable")?];
                        while self.peek() == Some(&Tok::Comma) {
                            self.pos += 1;
                            args.push(self.ident("an argument variable")?);
                        }
                        self.expect(Tok::RParen, "')' after atom arguments")?;
                        Ok(atom(name, args))
                    }
                    Some(Tok::Equal) => {
                        self.pos += 1;
                        let rhs = self.ident("a variable on the right of '='")?;
                        Ok(eq(name, rhs))
                    }
                    _ => Err(self.err("expected '(' or '=' after identifier")),
                }
            }
            _ => Err(self.err("expected a formula")),
        }
    }
}

/// Parses a formula from the concrete syntax.
pub fn parse(src: &str) -> Result<Formula, LogicError> {
    let lx = lex(src)?;
    let mut p = Parser { lx, pos: 0 };
    if p.peek().is_none() {
        return Err(p.err("empty input"));
    }
    let f = p.disjunction()?;
    if p.peek().is_some() {
        return Err(p.err("trailing input after formula"));
    }
    Ok(f)
}

/// Parses and checks all atoms against `vocab` plus the named extra relation
/// variables (e.g. a designated Fagin variable with its arity).
pub fn parse_with_vocab(
    src: &str,
    vocab: &Vocabulary,
    extra: &[(String, usize)],
) -> Result<Formula, LogicError> {
    let f = parse(src)?;
    f.check_vocab(vocab, extra)?;
    Ok(f)
}

/// A formula file: comment lines start with `#`; the optional directive
/// `# setvar X 1` declares the designated free relation variable with its
/// arity; the remaining text is one sentence in the concrete syntax.
pub fn parse_formula_file(text: &str) -> Result<(Formula, Option<(String, usize)>), LogicError> {
    let mut setvar = None;
    let mut body = String::new();
    for line in text.lines() {
        let trimmed = line.trim_start();
        if let Some(rest) = trimmed.strip_prefix('#') {
            let words: Vec<&str> = rest.split_whitespace().collect();
            if words.first() == Some(&"setvar") {
                if words.len() != 3 {
                    return Err(LogicError::Syntax {
                        line: 0,
                        col: 0,
                        msg: "setvar directive needs a name and an arity".into(),
                    });
                }
                let arity: usize = words[2].parse().map_err(|_| LogicError::Syntax {
                    line: 0,
                    col: 0,
                    msg: "setvar arity must be a number".into(),
                })?;
                setvar = Some((words[1].to_string(), arity));
            }
            continue;
        }
        body.push_str(line);
        body.push('\n');
    }
    Ok((parse(&body)?, setvar))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{to_nnf, to_prenex};

    #[test]
    fn parses_sigma1_sentence() {
        let f = parse("EX x. EX y. (E(x,y) & !x=y)").unwrap();
        assert_eq!(f.print(), "EX x. EX y. E(x,y) & !x=y");
        let info = crate::formula::classify(&f).unwrap();
        assert_eq!(info.class, crate::formula::FragmentClass::Sigma(1));
        assert_eq!(info.variable_count, 2);
    }

    #[test]
    fn dangling_quantifier_is_an_error() {
        let err = parse("EX x.").unwrap_err();
        assert!(matches!(err, LogicError::Syntax { .. }));
    }

    #[test]
    fn error_carries_position() {
        match parse("E(x,y) &") {
            Err(LogicError::Syntax { line: 1, col, .. }) => assert!(col >= 9),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn vocab_check_flags_bad_arity() {
        let vocab = Vocabulary::graph();
        assert!(parse_with_vocab("EX x. E(x,x,x)", &vocab, &[]).is_err());
        assert!(parse_with_vocab("EX x. P(x)", &vocab, &[]).is_err());
        assert!(parse_with_vocab("EX x. E(x,x)", &vocab, &[]).is_ok());
    }

    #[test]
    fn formula_file_with_setvar_header() {
        let (f, sv) = parse_formula_file("# setvar X 1\n# a comment\nALL y. X(y)\n").unwrap();
        assert_eq!(sv, Some(("X".to_string(), 1)));
        assert_eq!(f.print(), "ALL y. X(y)");
    }

    #[test]
    fn quantifier_scope_is_maximal() {
        let f = parse("EX x. P(x) & Q(x)").unwrap();
        assert_eq!(f, exists("x", and([atom("P", ["x"]), atom("Q", ["x"])])));
    }

    #[test]
    fn constants_simplify_at_construction() {
        // the smart constructors keep And/Or free of constant operands
        let f = parse("true & (false | P(x))").unwrap();
        assert_eq!(f, atom("P", ["x"]));
        assert_eq!(parse("true").unwrap(), Formula::True);
        assert_eq!(parse("false | false").unwrap(), Formula::False);
    }

    #[test]
    fn print_parse_roundtrip_on_normal_forms() {
        let f = parse("!(EX x. ALL y. (E(x,y) | !x=y) & P(x))").unwrap();
        for g in [to_nnf(&f), to_prenex(&f), f] {
            assert_eq!(parse(&g.print()).unwrap(), g);
        }
    }
}
