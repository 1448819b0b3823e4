//! Recursive-descent parser for the formula language.
//!
//! ```text
//! formula := or
//! or      := and ('||' and)*
//! and     := unary ('&&' unary)*
//! unary   := '!' unary | primary
//! primary := 'true' | 'false' | TEMPORAL '(' formula ')' | '(' formula ')' | atom
//! atom    := 'r_cs' ('=' | '!=') STATUS | expr CMP expr
//! expr    := ['-'] term (('+' | '-') term)*
//! term    := NUMBER ['*' VAR] | VAR
//! ```

use super::formula::{Atom, Comparator, Formula, LinExpr, TemporalOp, Var};
use crate::model::RequestStatus;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("syntax error at byte {offset}: {message}")]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64),
    Not,
    And,
    Or,
    Cmp(Comparator),
    LParen,
    RParen,
    Plus,
    Minus,
    Star,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(name) => format!("'{name}'"),
            Tok::Number(n) => format!("number {n}"),
            Tok::Not => "'!'".into(),
            Tok::And => "'&&'".into(),
            Tok::Or => "'||'".into(),
            Tok::Cmp(c) => format!("'{}'", c.symbol()),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Plus => "'+'".into(),
            Tok::Minus => "'-'".into(),
            Tok::Star => "'*'".into(),
            Tok::End => "end of input".into(),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let mut out = Vec::new();
    let mut chars = text.char_indices().peekable();
    let err = |offset, message: &str| ParseError { offset, message: message.into() };
    while let Some(&(at, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        let two = text.get(at..at + 2).unwrap_or("");
        let tok = match two {
            "&&" => Some(Tok::And),
            "||" => Some(Tok::Or),
            "<=" => Some(Tok::Cmp(Comparator::Le)),
            ">=" => Some(Tok::Cmp(Comparator::Ge)),
            "!=" => Some(Tok::Cmp(Comparator::Ne)),
            "==" => Some(Tok::Cmp(Comparator::Eq)),
            _ => None,
        };
        if let Some(tok) = tok {
            chars.next();
            chars.next();
            out.push((at, tok));
            continue;
        }
        let single = match c {
            '!' => Some(Tok::Not),
            '<' => Some(Tok::Cmp(Comparator::Lt)),
            '>' => Some(Tok::Cmp(Comparator::Gt)),
            '=' => Some(Tok::Cmp(Comparator::Eq)),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            _ => None,
        };
        if let Some(tok) = single {
            chars.next();
            out.push((at, tok));
        } else if c.is_ascii_digit() {
            let mut end = at;
            while let Some(&(i, d)) = chars.peek() {
                if d.is_ascii_digit() || d == '.' {
                    end = i + d.len_utf8();
                    chars.next();
                } else {
                    break;
                }
            }
            let value = text[at..end].parse::<f64>().map_err(|_| err(at, "malformed number"))?;
            out.push((at, Tok::Number(value)));
        } else if c.is_alphabetic() || c == '_' {
            let mut end = at;
            while let Some(&(i, d)) = chars.peek() {
                if d.is_alphanumeric() || d == '_' {
                    end = i + d.len_utf8();
                    chars.next();
                } else {
                    break;
                }
            }
            out.push((at, Tok::Ident(text[at..end].to_string())));
        } else {
            return Err(err(at, &format!("unexpected character '{c}'")));
        }
    }
    out.push((text.len(), Tok::End));
    Ok(out)
}

struct Parser<'a> {
    text: &'a str,
    tokens: Vec<(usize, Tok)>,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].1
    }

    fn offset(&self) -> usize {
        self.tokens[self.pos].0
    }

    fn bump(&mut self) -> Tok {
        let tok = self.tokens[self.pos].1.clone();
        if tok != Tok::End {
            self.pos += 1;
        }
        tok
    }

    fn fail<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError { offset: self.offset(), message: message.into() })
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            self.fail(format!("expected {}, found {}", want.describe(), self.peek().describe()))
        }
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.conjunction()?;
        while *self.peek() == Tok::Or {
            self.bump();
            let rhs = self.conjunction()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.unary()?;
        while *self.peek() == Tok::And {
            self.bump();
            let rhs = self.unary()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        if *self.peek() == Tok::Not {
            self.bump();
            return Ok(Formula::not(self.unary()?));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Formula, ParseError> {
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let inner = self.formula()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            Tok::Ident(word) => match word.as_str() {
                "true" => {
                    self.bump();
                    Ok(Formula::True)
                }
                "false" => {
                    self.bump();
                    Ok(Formula::False)
                }
                _ => {
                    if let Some(op) = TemporalOp::from_keyword(&word) {
                        self.bump();
                        self.expect(Tok::LParen)?;
                        let inner = self.formula()?;
                        self.expect(Tok::RParen)?;
                        return Ok(Formula::temporal(op, inner));
                    }
                    if (word.starts_with('A') || word.starts_with('E')) && Var::from_name(&word).is_none() {
                        return self
                            .fail(format!("'{word}' is not a temporal operator; expected one of AX EX AF EF AG EG"));
                    }
                    self.atom().map(Formula::Atom)
                }
            },
            Tok::Number(_) | Tok::Minus => self.atom().map(Formula::Atom),
            other => self.fail(format!("expected a formula, found {}", other.describe())),
        }
    }

    fn atom(&mut self) -> Result<Atom, ParseError> {
        if *self.peek() == Tok::Ident(Var::RCs.name().into()) {
            self.bump();
            let op = match self.bump() {
                Tok::Cmp(op @ (Comparator::Eq | Comparator::Ne)) => op,
                _ => {
                    self.pos -= 1;
                    return self.fail("r_cs may only be compared with '=' or '!='");
                }
            };
            return Ok(Atom::Status { op, status: self.status_literal()? });
        }
        let lhs = self.expr()?;
        let op = match self.peek() {
            Tok::Cmp(op) => *op,
            other => return self.fail(format!("expected a comparison operator, found {}", other.describe())),
        };
        self.bump();
        let rhs = self.expr()?;
        Ok(Atom::compare(lhs, op, rhs))
    }

    /// Status literals contain hyphens, so they are reassembled from the
    /// adjacent identifier and minus tokens.
    fn status_literal(&mut self) -> Result<RequestStatus, ParseError> {
        let start = self.offset();
        let Tok::Ident(first) = self.peek().clone() else {
            return self.fail(format!("expected a status literal, found {}", self.peek().describe()));
        };
        self.bump();
        let mut end = start + first.len();
        while let (Some((dash_at, Tok::Minus)), Some((word_at, Tok::Ident(word)))) =
            (self.tokens.get(self.pos), self.tokens.get(self.pos + 1))
        {
            if *dash_at != end || *word_at != end + 1 {
                break;
            }
            end = word_at + word.len();
            self.pos += 2;
        }
        let literal = &self.text[start..end];
        RequestStatus::parse(literal).ok_or(ParseError {
            offset: start,
            message: format!("unknown status '{literal}'; expected waiting, assigned, in-transit or dropped-off"),
        })
    }

    fn expr(&mut self) -> Result<LinExpr, ParseError> {
        let mut expr = LinExpr::default();
        let mut sign = 1.0;
        if *self.peek() == Tok::Minus {
            self.bump();
            sign = -1.0;
        }
        self.term(&mut expr, sign)?;
        loop {
            let sign = match self.peek() {
                Tok::Plus => 1.0,
                Tok::Minus => -1.0,
                _ => break,
            };
            self.bump();
            self.term(&mut expr, sign)?;
        }
        Ok(expr)
    }

    fn term(&mut self, expr: &mut LinExpr, sign: f64) -> Result<(), ParseError> {
        match self.peek().clone() {
            Tok::Number(value) => {
                self.bump();
                if *self.peek() == Tok::Star {
                    self.bump();
                    let var = self.variable()?;
                    expr.terms.push((sign * value, var));
                } else {
                    expr.constant += sign * value;
                }
                Ok(())
            }
            Tok::Ident(_) => {
                let var = self.variable()?;
                expr.terms.push((sign, var));
                Ok(())
            }
            other => self.fail(format!("expected a number or variable, found {}", other.describe())),
        }
    }

    fn variable(&mut self) -> Result<Var, ParseError> {
        let Tok::Ident(name) = self.peek().clone() else {
            return self.fail(format!("expected a variable, found {}", self.peek().describe()));
        };
        match Var::from_name(&name) {
            Some(Var::RCs) => self.fail("r_cs cannot appear in arithmetic"),
            Some(var) => {
                self.bump();
                Ok(var)
            }
            None => self.fail(format!("unknown variable '{name}'")),
        }
    }
}

pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let mut parser = Parser { text, tokens: lex(text)?, pos: 0 };
    let formula = parser.formula()?;
    if *parser.peek() != Tok::End {
        return parser.fail(format!("unexpected {}", parser.peek().describe()));
    }
    Ok(formula)
}
