//! Pratt parser for chart-coordinate expressions.
//!
//! Binding powers, loosest first: `+ -`, `* /`, unary `-`, `^`. The exponent
//! of `^` must fold to an integer constant.

use super::{Expression, Func, Node, ParseError};

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
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    pos: usize,
}

fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '/' => Tok::Slash,
            '^' => Tok::Caret,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            _ if c.is_ascii_digit() || c == '.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                // optional exponent: e/E, sign, digits
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let lit = &text[start..i];
                let value = lit.parse::<f64>().map_err(|_| ParseError::Syntax {
                    pos: start,
                    message: format!("malformed number `{lit}`"),
                })?;
                out.push(Token {
                    tok: Tok::Num(value),
                    pos: start,
                });
                continue;
            }
            _ if c.is_ascii_alphabetic() || c == '_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push(Token {
                    tok: Tok::Ident(text[start..i].to_string()),
                    pos: start,
                });
                continue;
            }
            _ => {
                return Err(ParseError::Syntax {
                    pos: start,
                    message: format!("unexpected character `{c}`"),
                })
            }
        };
        out.push(Token { tok, pos: start });
        i += 1;
    }
    Ok(out)
}

const ADD_BP: (u8, u8) = (1, 2);
const MUL_BP: (u8, u8) = (3, 4);
const UNARY_BP: u8 = 5;
const POW_BP: (u8, u8) = (7, 6);

struct Parser<'a> {
    tokens: Vec<Token>,
    cursor: usize,
    end: usize,
    dimension: usize,
    allow_param: bool,
    text: &'a str,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.cursor)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.cursor).cloned();
        self.cursor += 1;
        t
    }

    fn pos(&self) -> usize {
        self.peek().map_or(self.end, |t| t.pos)
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ParseError> {
        match self.next() {
            Some(t) if t.tok == want => Ok(()),
            Some(t) => Err(ParseError::Syntax {
                pos: t.pos,
                message: format!("expected {what}"),
            }),
            None => Err(ParseError::Syntax {
                pos: self.end,
                message: format!("expected {what}, found end of input"),
            }),
        }
    }

    fn expr(&mut self, min_bp: u8) -> Result<Node, ParseError> {
        let mut lhs = self.prefix()?;
        loop {
            let Some(tok) = self.peek() else { break };
            let (lbp, rbp) = match tok.tok {
                Tok::Plus | Tok::Minus => ADD_BP,
                Tok::Star | Tok::Slash => MUL_BP,
                Tok::Caret => POW_BP,
                Tok::RParen => break,
                _ => {
                    return Err(ParseError::Syntax {
                        pos: tok.pos,
                        message: "expected operator".into(),
                    })
                }
            };
            if lbp < min_bp {
                break;
            }
            let op = self.next().expect("peeked");
            if op.tok == Tok::Caret {
                let exp_pos = self.pos();
                let exponent = self.expr(rbp)?;
                let n = integer_constant(&exponent).ok_or(ParseError::NonIntegerExponent {
                    pos: exp_pos,
                })?;
                lhs = Node::Pow(Box::new(lhs), n);
                continue;
            }
            let rhs = self.expr(rbp)?;
            lhs = match op.tok {
                Tok::Plus => Node::Add(Box::new(lhs), Box::new(rhs)),
                Tok::Minus => Node::Sub(Box::new(lhs), Box::new(rhs)),
                Tok::Star => Node::Mul(Box::new(lhs), Box::new(rhs)),
                Tok::Slash => Node::Div(Box::new(lhs), Box::new(rhs)),
                _ => unreachable!(),
            };
        }
        Ok(lhs)
    }

    fn prefix(&mut self) -> Result<Node, ParseError> {
        let Some(tok) = self.next() else {
            return Err(ParseError::Syntax {
                pos: self.end,
                message: "unexpected end of input".into(),
            });
        };
        match tok.tok {
            Tok::Num(v) => Ok(Node::Const(v)),
            Tok::Minus => Ok(Node::Neg(Box::new(self.expr(UNARY_BP)?))),
            Tok::LParen => {
                let inner = self.expr(0)?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Tok::Ident(name) => self.identifier(&name, tok.pos),
            _ => Err(ParseError::Syntax {
                pos: tok.pos,
                message: "expected operand".into(),
            }),
        }
    }

    fn identifier(&mut self, name: &str, pos: usize) -> Result<Node, ParseError> {
        let func = match name {
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "exp" => Some(Func::Exp),
            "sqrt" => Some(Func::Sqrt),
            _ => None,
        };
        if let Some(func) = func {
            self.expect(Tok::LParen, &format!("`(` after `{name}`"))?;
            let arg = self.expr(0)?;
            self.expect(Tok::RParen, "`)`")?;
            return Ok(Node::Func(func, Box::new(arg)));
        }
        if name == "pi" {
            return Ok(Node::Const(std::f64::consts::PI));
        }
        if name == "t" {
            return if self.allow_param {
                Ok(Node::Param)
            } else {
                Err(ParseError::UnknownIdentifier {
                    name: name.into(),
                    pos,
                })
            };
        }
        if let Some(digits) = name.strip_prefix('x') {
            if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
                let index: usize = digits.parse().map_err(|_| ParseError::Syntax {
                    pos,
                    message: format!("bad variable index in `{name}`"),
                })?;
                if index == 0 || index > self.dimension {
                    return Err(ParseError::VariableOutOfRange {
                        index,
                        dimension: self.dimension,
                        pos,
                    });
                }
                return Ok(Node::Var(index - 1));
            }
        }
        Err(ParseError::UnknownIdentifier {
            name: name.into(),
            pos,
        })
    }
}

fn integer_constant(node: &Node) -> Option<i32> {
    let v = fold_constant(node)?;
    (v.fract() == 0.0 && v.abs() <= f64::from(i32::MAX)).then_some(v as i32)
}

fn fold_constant(node: &Node) -> Option<f64> {
    match node {
        Node::Const(v) => Some(*v),
        Node::Neg(a) => fold_constant(a).map(|v| -v),
        Node::Pow(a, n) => fold_constant(a).map(|v| v.powi(*n)),
        _ => None,
    }
}

pub(super) fn parse(
    text: &str,
    dimension: usize,
    allow_param: bool,
) -> Result<Expression, ParseError> {
    if text.trim().is_empty() {
        return Err(ParseError::Empty);
    }
    if dimension == 0 && !allow_param {
        return Err(ParseError::ZeroDimension);
    }
    let tokens = tokenize(text)?;
    let mut p = Parser {
        tokens,
        cursor: 0,
        end: text.len(),
        dimension,
        allow_param,
        text,
    };
    let root = p.expr(0)?;
    if let Some(t) = p.peek() {
        return Err(ParseError::Syntax {
            pos: t.pos,
            message: format!("unexpected trailing input `{}`", &p.text[t.pos..]),
        });
    }
    Ok(Expression::from_parts(root, dimension, text))
}
