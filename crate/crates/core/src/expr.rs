//! Minimal arithmetic expression language.
//!
//! Expressions define diffeomorphism components, Morse functions and symbol
//! coefficients inside JSON configuration files. The language is a fixed,
//! closed dialect: real literals, a declared variable set, `+ - * / ^`,
//! unary minus, the functions `sin cos exp log sqrt atan2 abs` and the
//! constant `pi`. Precedence is `^` > unary `-` > `* /` > `+ -`, with `^`
//! right-associative.
//!
//! Parsed expressions are immutable and evaluation is pure, so they can be
//! shared freely between concurrent sweeps. Printing an expression and
//! parsing it back yields a structurally identical tree.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Atan2,
    Abs,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Atan2 => "atan2",
            Func::Abs => "abs",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Atan2 => 2,
            _ => 1,
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "atan2" => Func::Atan2,
            "abs" => Func::Abs,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

/// Abstract syntax tree of an expression over a declared variable set.
///
/// Variables carry both their name (for printing) and their index into the
/// declared set (for evaluation against a positional binding slice).
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Pi,
    Var { index: usize, name: String },
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("expr: syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("expr: unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { offset: usize, name: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("expr: domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },
    #[error("expr: variable index {index} has no binding")]
    Unbound { index: usize },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b' ' | b'\t' | b'\r' | b'\n' => i += 1,
            b'+' => {
                toks.push((Tok::Plus, i));
                i += 1;
            }
            b'-' => {
                toks.push((Tok::Minus, i));
                i += 1;
            }
            b'*' => {
                toks.push((Tok::Star, i));
                i += 1;
            }
            b'/' => {
                toks.push((Tok::Slash, i));
                i += 1;
            }
            b'^' => {
                toks.push((Tok::Caret, i));
                i += 1;
            }
            b'(' => {
                toks.push((Tok::LParen, i));
                i += 1;
            }
            b')' => {
                toks.push((Tok::RParen, i));
                i += 1;
            }
            b',' => {
                toks.push((Tok::Comma, i));
                i += 1;
            }
            b'0'..=b'9' | b'.' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                // optional exponent
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let lit = &text[start..i];
                let value: f64 = lit.parse().map_err(|_| ParseError::Syntax {
                    offset: start,
                    message: format!("invalid number literal `{lit}`"),
                })?;
                toks.push((Tok::Num(value), start));
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                toks.push((Tok::Ident(text[start..i].to_string()), start));
            }
            _ => {
                return Err(ParseError::Syntax {
                    offset: i,
                    message: format!("unexpected character `{}`", &text[i..i + 1]),
                })
            }
        }
    }
    Ok(toks)
}

// Binding powers. `^` binds tightest and is right-associative; unary minus
// sits between `^` and `* /`, so `-x^2` is `-(x^2)` and `-x*y` is `(-x)*y`.
const BP_ADD: (u8, u8) = (10, 11);
const BP_MUL: (u8, u8) = (20, 21);
const BP_UNARY: u8 = 26;
const BP_POW: (u8, u8) = (30, 30);

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    vars: &'a [&'a str],
    end: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&(Tok, usize)> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<(Tok, usize)> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        match self.next() {
            Some((t, _)) if t == tok => Ok(()),
            Some((t, o)) => Err(ParseError::Syntax {
                offset: o,
                message: format!("expected {what}, found {t:?}"),
            }),
            None => Err(ParseError::Syntax {
                offset: self.end,
                message: format!("expected {what}, found end of input"),
            }),
        }
    }

    fn parse_expr(&mut self, min_bp: u8) -> Result<Expr, ParseError> {
        let mut lhs = self.parse_prefix()?;
        loop {
            let (op, lbp, rbp) = match self.peek() {
                Some((Tok::Plus, _)) => (BinOp::Add, BP_ADD.0, BP_ADD.1),
                Some((Tok::Minus, _)) => (BinOp::Sub, BP_ADD.0, BP_ADD.1),
                Some((Tok::Star, _)) => (BinOp::Mul, BP_MUL.0, BP_MUL.1),
                Some((Tok::Slash, _)) => (BinOp::Div, BP_MUL.0, BP_MUL.1),
                Some((Tok::Caret, _)) => (BinOp::Pow, BP_POW.0, BP_POW.1),
                _ => break,
            };
            if lbp < min_bp {
                break;
            }
            self.next();
            let rhs = self.parse_expr(rbp)?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_prefix(&mut self) -> Result<Expr, ParseError> {
        match self.next() {
            Some((Tok::Num(v), _)) => Ok(Expr::Num(v)),
            Some((Tok::Minus, _)) => {
                let inner = self.parse_expr(BP_UNARY)?;
                Ok(Expr::Neg(Box::new(inner)))
            }
            Some((Tok::LParen, _)) => {
                let inner = self.parse_expr(0)?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Some((Tok::Ident(name), offset)) => self.parse_ident(name, offset),
            Some((t, o)) => Err(ParseError::Syntax {
                offset: o,
                message: format!("expected an operand, found {t:?}"),
            }),
            None => Err(ParseError::Syntax {
                offset: self.end,
                message: "expected an operand, found end of input".into(),
            }),
        }
    }

    fn parse_ident(&mut self, name: String, offset: usize) -> Result<Expr, ParseError> {
        if let Some((Tok::LParen, _)) = self.peek() {
            let func = Func::from_name(&name).ok_or(ParseError::UnknownIdentifier {
                offset,
                name: name.clone(),
            })?;
            self.next();
            let mut args = vec![self.parse_expr(0)?];
            while let Some((Tok::Comma, _)) = self.peek() {
                self.next();
                args.push(self.parse_expr(0)?);
            }
            self.expect(Tok::RParen, "`)`")?;
            if args.len() != func.arity() {
                return Err(ParseError::Syntax {
                    offset,
                    message: format!(
                        "{} takes {} argument(s), got {}",
                        func.name(),
                        func.arity(),
                        args.len()
                    ),
                });
            }
            return Ok(Expr::Call(func, args));
        }
        if name == "pi" {
            return Ok(Expr::Pi);
        }
        match self.vars.iter().position(|v| *v == name) {
            Some(index) => Ok(Expr::Var { index, name }),
            None => Err(ParseError::UnknownIdentifier { offset, name }),
        }
    }
}

/// Parse `text` against a declared variable set.
///
/// Every identifier must be `pi`, a known function name, or a member of
/// `vars`; anything else is an unknown-identifier error carrying the byte
/// offset of the offender.
pub fn parse(text: &str, vars: &[&str]) -> Result<Expr, ParseError> {
    let toks = lex(text)?;
    if toks.is_empty() {
        return Err(ParseError::Syntax {
            offset: 0,
            message: "empty expression".into(),
        });
    }
    let mut p = Parser {
        toks,
        pos: 0,
        vars,
        end: text.len(),
    };
    let expr = p.parse_expr(0)?;
    if let Some((t, o)) = p.peek() {
        return Err(ParseError::Syntax {
            offset: *o,
            message: format!("unexpected trailing token {t:?}"),
        });
    }
    Ok(expr)
}

impl Expr {
    /// Evaluate with positional bindings matching the declared variable set.
    ///
    /// Domain violations (log of a nonpositive value, division by zero, a
    /// non-real power) are reported as errors rather than silently producing
    /// NaN; any non-finite intermediate is likewise an error.
    pub fn eval(&self, values: &[f64]) -> Result<f64, EvalError> {
        let v = self.eval_inner(values)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::Domain {
                op: "expression",
                detail: format!("non-finite result {v}"),
            })
        }
    }

    fn eval_inner(&self, values: &[f64]) -> Result<f64, EvalError> {
        match self {
            Expr::Num(v) => Ok(*v),
            Expr::Pi => Ok(std::f64::consts::PI),
            Expr::Var { index, .. } => values
                .get(*index)
                .copied()
                .ok_or(EvalError::Unbound { index: *index }),
            Expr::Neg(inner) => Ok(-inner.eval_inner(values)?),
            Expr::Bin(op, lhs, rhs) => {
                let a = lhs.eval_inner(values)?;
                let b = rhs.eval_inner(values)?;
                let v = match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(EvalError::Domain {
                                op: "division",
                                detail: format!("{a} / 0"),
                            });
                        }
                        a / b
                    }
                    BinOp::Pow => {
                        let v = a.powf(b);
                        if v.is_nan() {
                            return Err(EvalError::Domain {
                                op: "power",
                                detail: format!("{a} ^ {b}"),
                            });
                        }
                        v
                    }
                };
                if v.is_nan() {
                    return Err(EvalError::Domain {
                        op: "arithmetic",
                        detail: format!("{a} {} {b}", op.symbol()),
                    });
                }
                Ok(v)
            }
            Expr::Call(func, args) => {
                let mut xs = [0.0; 2];
                for (slot, arg) in xs.iter_mut().zip(args.iter()) {
                    *slot = arg.eval_inner(values)?;
                }
                let x = xs[0];
                match func {
                    Func::Sin => Ok(x.sin()),
                    Func::Cos => Ok(x.cos()),
                    Func::Exp => Ok(x.exp()),
                    Func::Log => {
                        if x <= 0.0 {
                            Err(EvalError::Domain {
                                op: "log",
                                detail: format!("log({x})"),
                            })
                        } else {
                            Ok(x.ln())
                        }
                    }
                    Func::Sqrt => {
                        if x < 0.0 {
                            Err(EvalError::Domain {
                                op: "sqrt",
                                detail: format!("sqrt({x})"),
                            })
                        } else {
                            Ok(x.sqrt())
                        }
                    }
                    Func::Atan2 => Ok(x.atan2(xs[1])),
                    Func::Abs => Ok(x.abs()),
                }
            }
        }
    }
}

// Printing is fully parenthesized so that the printed form re-parses to a
// structurally identical tree regardless of precedence.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Pi => write!(f, "pi"),
            Expr::Var { name, .. } => write!(f, "{name}"),
            Expr::Neg(inner) => write!(f, "(-{inner})"),
            Expr::Bin(op, lhs, rhs) => write!(f, "({lhs} {} {rhs})", op.symbol()),
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn p(text: &str) -> Expr {
        parse(text, &["x1", "x2", "xi1", "xi2"]).unwrap()
    }

    #[test]
    fn spec_shapes() {
        // 2 + sin(2*pi*x1) parses as Add(2, Sin(Mul(Mul(2,pi),x1)))
        let e = p("2 + sin(2*pi*x1)");
        let expected = Expr::Bin(
            BinOp::Add,
            Box::new(Expr::Num(2.0)),
            Box::new(Expr::Call(
                Func::Sin,
                vec![Expr::Bin(
                    BinOp::Mul,
                    Box::new(Expr::Bin(
                        BinOp::Mul,
                        Box::new(Expr::Num(2.0)),
                        Box::new(Expr::Pi),
                    )),
                    Box::new(Expr::Var {
                        index: 0,
                        name: "x1".into(),
                    }),
                )],
            )),
        );
        assert_eq!(e, expected);
    }

    #[test]
    fn pow_is_right_associative() {
        let e = p("x1 ^ 2 ^ 3");
        match e {
            Expr::Bin(BinOp::Pow, lhs, rhs) => {
                assert!(matches!(*lhs, Expr::Var { index: 0, .. }));
                assert!(matches!(*rhs, Expr::Bin(BinOp::Pow, _, _)));
            }
            other => panic!("unexpected tree {other:?}"),
        }
        assert_eq!(p("2 ^ 3 ^ 2").eval(&[]).unwrap(), 512.0);
    }

    #[test]
    fn unknown_identifier_is_reported() {
        let err = parse("xi3", &["xi1", "xi2"]).unwrap_err();
        match err {
            ParseError::UnknownIdentifier { name, offset } => {
                assert_eq!(name, "xi3");
                assert_eq!(offset, 0);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn precedence_fixtures() {
        // Each fixture is (input, canonical fully parenthesized print).
        let fixtures = [
            ("1+2*3", "(1 + (2 * 3))"),
            ("1*2+3", "((1 * 2) + 3)"),
            ("1-2-3", "((1 - 2) - 3)"),
            ("1/2/2", "((1 / 2) / 2)"),
            ("2^3^2", "(2 ^ (3 ^ 2))"),
            ("-x1^2", "(-(x1 ^ 2))"),
            ("-x1*x2", "((-x1) * x2)"),
            ("-x1+x2", "((-x1) + x2)"),
            ("2^-3", "(2 ^ (-3))"),
            ("1--2", "(1 - (-2))"),
            ("2*x1^3", "(2 * (x1 ^ 3))"),
            ("x1^2*3", "((x1 ^ 2) * 3)"),
            ("1+2/4", "(1 + (2 / 4))"),
            ("(1+2)*3", "((1 + 2) * 3)"),
            ("sin(x1)^2", "(sin(x1) ^ 2)"),
            ("-sin(x1)", "(-sin(x1))"),
            ("atan2(x1, x2)*2", "(atan2(x1, x2) * 2)"),
            ("abs(-x1)", "abs((-x1))"),
            ("2*pi*x1", "((2 * pi) * x1)"),
            ("x1--x2", "(x1 - (-x2))"),
        ];
        for (input, canonical) in fixtures {
            let e = p(input);
            assert_eq!(e.to_string(), canonical, "fixture `{input}`");
        }
    }

    #[test]
    fn eval_examples() {
        assert_eq!(p("2+sin(2*pi*x1)").eval(&[0.0, 0.0, 0.0, 0.0]).unwrap(), 2.0);
        assert_eq!(p("sqrt(x1)").eval(&[4.0, 0.0, 0.0, 0.0]).unwrap(), 2.0);
        let err = p("log(x1)").eval(&[0.0, 0.0, 0.0, 0.0]).unwrap_err();
        assert!(matches!(err, EvalError::Domain { op: "log", .. }));
        let err = p("x1/x2").eval(&[1.0, 0.0, 0.0, 0.0]).unwrap_err();
        assert!(matches!(err, EvalError::Domain { op: "division", .. }));
        let err = p("(-1)^0.5").eval(&[]).unwrap_err();
        assert!(matches!(err, EvalError::Domain { op: "power", .. }));
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        match parse("1 + * 2", &[]).unwrap_err() {
            ParseError::Syntax { offset, .. } => assert_eq!(offset, 4),
            other => panic!("unexpected {other:?}"),
        }
        match parse("sin(x1", &["x1"]).unwrap_err() {
            ParseError::Syntax { offset, .. } => assert_eq!(offset, 6),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse("", &[]).is_err());
        assert!(parse("atan2(x1)", &["x1"]).is_err());
    }

    // Random AST generator for the round-trip property. Literals are kept
    // nonnegative so that printed trees re-lex the same way (negation is a
    // Neg node, never part of a literal).
    fn random_expr(rng: &mut StdRng, depth: usize, vars: &[&str]) -> Expr {
        let leaf = depth == 0 || rng.gen_bool(0.3);
        if leaf {
            match rng.gen_range(0..3) {
                0 => Expr::Num((rng.gen_range(0..1000) as f64) / 64.0),
                1 => Expr::Pi,
                _ => {
                    let index = rng.gen_range(0..vars.len());
                    Expr::Var {
                        index,
                        name: vars[index].to_string(),
                    }
                }
            }
        } else {
            match rng.gen_range(0..8) {
                0 => Expr::Neg(Box::new(random_expr(rng, depth - 1, vars))),
                1 => Expr::Call(Func::Sin, vec![random_expr(rng, depth - 1, vars)]),
                2 => Expr::Call(Func::Cos, vec![random_expr(rng, depth - 1, vars)]),
                3 => Expr::Call(Func::Abs, vec![random_expr(rng, depth - 1, vars)]),
                4 => Expr::Call(
                    Func::Atan2,
                    vec![
                        random_expr(rng, depth - 1, vars),
                        random_expr(rng, depth - 1, vars),
                    ],
                ),
                n => {
                    let op = match n {
                        5 => BinOp::Add,
                        6 => BinOp::Sub,
                        _ => BinOp::Mul,
                    };
                    Expr::Bin(
                        op,
                        Box::new(random_expr(rng, depth - 1, vars)),
                        Box::new(random_expr(rng, depth - 1, vars)),
                    )
                }
            }
        }
    }

    #[test]
    fn print_parse_round_trip() {
        let vars = ["x1", "x2", "xi1", "xi2"];
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..1000 {
            let depth = rng.gen_range(1..=6);
            let e = random_expr(&mut rng, depth, &vars);
            let printed = e.to_string();
            let reparsed = parse(&printed, &vars).unwrap();
            assert_eq!(e, reparsed, "round trip failed for `{printed}`");
            let bindings: Vec<f64> = (0..4).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let a = e.eval(&bindings);
            let b = reparsed.eval(&bindings);
            match (a, b) {
                (Ok(x), Ok(y)) => assert_eq!(x.to_bits(), y.to_bits()),
                (Err(x), Err(y)) => assert_eq!(x, y),
                other => panic!("divergent eval {other:?}"),
            }
        }
    }
}
