//! Boolean chart-domain predicates such as `x1^2 + x2^2 > 0 && x2 > -1`.

use super::parse::{syntax, ParseError, Parser, Tok};
use super::{EvalError, Expr};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Predicate {
    True,
    False,
    Cmp(CmpOp, Expr, Expr),
    And(Box<Predicate>, Box<Predicate>),
    Or(Box<Predicate>, Box<Predicate>),
    Not(Box<Predicate>),
}

impl Predicate {
    /// Evaluation errors in the operands propagate; callers treat them as
    /// "outside the domain".
    pub fn eval(&self, x: &[f64]) -> Result<bool, EvalError> {
        Ok(match self {
            Predicate::True => true,
            Predicate::False => false,
            Predicate::Cmp(op, a, b) => {
                let (a, b) = (a.eval(x)?, b.eval(x)?);
                match op {
                    CmpOp::Lt => a < b,
                    CmpOp::Le => a <= b,
                    CmpOp::Gt => a > b,
                    CmpOp::Ge => a >= b,
                }
            }
            Predicate::And(a, b) => a.eval(x)? && b.eval(x)?,
            Predicate::Or(a, b) => a.eval(x)? || b.eval(x)?,
            Predicate::Not(a) => !a.eval(x)?,
        })
    }

    /// `true` iff the predicate holds and evaluates without error.
    pub fn holds(&self, x: &[f64]) -> bool {
        self.eval(x).unwrap_or(false)
    }

    pub fn render(&self, names: &[String]) -> String {
        match self {
            Predicate::True => "true".into(),
            Predicate::False => "false".into(),
            Predicate::Cmp(op, a, b) => {
                format!("{} {} {}", a.display(names), op.symbol(), b.display(names))
            }
            Predicate::And(a, b) => format!("({}) && ({})", a.render(names), b.render(names)),
            Predicate::Or(a, b) => format!("({}) || ({})", a.render(names), b.render(names)),
            Predicate::Not(a) => format!("!({})", a.render(names)),
        }
    }
}

/// Parse a domain predicate over the coordinates `names`.
pub fn parse_predicate(src: &str, names: &[String]) -> Result<Predicate, ParseError> {
    let mut p = Parser::new(src, names)?;
    let out = or(&mut p)?;
    if *p.peek() != Tok::Eof {
        return Err(syntax(p.pos(), "trailing input"));
    }
    Ok(out)
}

fn or(p: &mut Parser) -> Result<Predicate, ParseError> {
    let mut lhs = and(p)?;
    while *p.peek() == Tok::OrOr {
        p.bump();
        let rhs = and(p)?;
        lhs = Predicate::Or(Box::new(lhs), Box::new(rhs));
    }
    Ok(lhs)
}

fn and(p: &mut Parser) -> Result<Predicate, ParseError> {
    let mut lhs = not(p)?;
    while *p.peek() == Tok::AndAnd {
        p.bump();
        let rhs = not(p)?;
        lhs = Predicate::And(Box::new(lhs), Box::new(rhs));
    }
    Ok(lhs)
}

fn not(p: &mut Parser) -> Result<Predicate, ParseError> {
    if *p.peek() == Tok::Bang {
        p.bump();
        return Ok(Predicate::Not(Box::new(not(p)?)));
    }
    atom(p)
}

fn atom(p: &mut Parser) -> Result<Predicate, ParseError> {
    match p.peek() {
        Tok::Ident(s) if s == "true" => {
            p.bump();
            return Ok(Predicate::True);
        }
        Tok::Ident(s) if s == "false" => {
            p.bump();
            return Ok(Predicate::False);
        }
        _ => {}
    }
    let start = p.at;
    match comparison(p) {
        Ok(c) => Ok(c),
        Err(e) => {
            if p.toks[start].tok != Tok::LParen {
                return Err(e);
            }
            // `( predicate )`
            p.at = start;
            p.bump();
            let inner = or(p)?;
            p.expect(Tok::RParen, "`)`")?;
            Ok(inner)
        }
    }
}

fn comparison(p: &mut Parser) -> Result<Predicate, ParseError> {
    let lhs = p.expr()?;
    let op = match p.peek() {
        Tok::Lt => CmpOp::Lt,
        Tok::Le => CmpOp::Le,
        Tok::Gt => CmpOp::Gt,
        Tok::Ge => CmpOp::Ge,
        _ => return Err(syntax(p.pos(), "expected comparison operator")),
    };
    p.bump();
    let rhs = p.expr()?;
    Ok(Predicate::Cmp(op, lhs, rhs))
}
