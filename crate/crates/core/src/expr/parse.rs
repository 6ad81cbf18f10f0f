use super::{BinaryOp, Constant, ExprError, ExprErrorKind, Function, Node, NodeKind, Span};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    span: Span,
}

fn lex(src: &str) -> Result<Vec<Token>, ExprError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || (c == '.' && bytes.get(i + 1).is_some_and(|b| b.is_ascii_digit()))
        {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            // exponent part: 1e-3, 2.5E+4
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
            let text = &src[start..i];
            let value: f64 = text
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| ExprError {
                    kind: ExprErrorKind::Syntax(format!("malformed number '{text}'")),
                    span: Span::new(start, i),
                })?;
            out.push(Token {
                tok: Tok::Num(value),
                span: Span::new(start, i),
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token {
                tok: Tok::Ident(src[start..i].to_string()),
                span: Span::new(start, i),
            });
            continue;
        }
        let tok = match c {
            '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            _ => {
                let len = src[i..].chars().next().map_or(1, char::len_utf8);
                return Err(ExprError {
                    kind: ExprErrorKind::Syntax(format!(
                        "unexpected character '{}'",
                        &src[i..i + len]
                    )),
                    span: Span::new(i, i + len),
                });
            }
        };
        i += 1;
        out.push(Token {
            tok,
            span: Span::new(start, i),
        });
    }
    out.push(Token {
        tok: Tok::Eof,
        span: Span::new(src.len(), src.len()),
    });
    Ok(out)
}

/// Recursive descent over
///
/// ```text
/// expr    := term (('+' | '-') term)*
/// term    := unary (('*' | '/') unary)*
/// unary   := '-' unary | power
/// power   := primary ('^' unary)?
/// primary := number | ident | ident '(' expr ')' | '(' expr ')'
/// ```
struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    allowed: &'a [&'a str],
}

pub(super) fn parse(src: &str, allowed: &[&str]) -> Result<Node, ExprError> {
    let mut p = Parser {
        tokens: lex(src)?,
        pos: 0,
        allowed,
    };
    let node = p.expr()?;
    let t = p.peek();
    if t.tok != Tok::Eof {
        return Err(p.unexpected(&t, "operator or end of input"));
    }
    Ok(node)
}

impl Parser<'_> {
    fn peek(&self) -> Token {
        self.tokens[self.pos].clone()
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if t.tok != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, t: &Token, expected: &str) -> ExprError {
        let found = match &t.tok {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier '{s}'"),
            Tok::Op(c) => format!("'{c}'"),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Eof => "end of input".into(),
        };
        ExprError {
            kind: ExprErrorKind::Syntax(format!("expected {expected}, found {found}")),
            span: t.span,
        }
    }

    fn expr(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().tok {
                Tok::Op('+') => BinaryOp::Add,
                Tok::Op('-') => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Node::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek().tok {
                Tok::Op('*') => BinaryOp::Mul,
                Tok::Op('/') => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Node::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Node, ExprError> {
        let t = self.peek();
        if t.tok == Tok::Op('-') {
            self.bump();
            let inner = self.unary()?;
            let span = t.span.join(inner.span);
            return Ok(Node {
                kind: NodeKind::Neg(Box::new(inner)),
                span,
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ExprError> {
        let base = self.primary()?;
        if self.peek().tok == Tok::Op('^') {
            self.bump();
            let exponent = self.unary()?;
            return Ok(Node::binary(BinaryOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Node, ExprError> {
        let t = self.bump();
        match t.tok {
            Tok::Num(v) => Ok(Node {
                kind: NodeKind::Number(v),
                span: t.span,
            }),
            Tok::LParen => {
                let inner = self.expr()?;
                let close = self.bump();
                if close.tok != Tok::RParen {
                    return Err(self.unexpected(&close, "')'"));
                }
                Ok(inner)
            }
            Tok::Ident(name) => {
                if self.peek().tok == Tok::LParen {
                    let func = Function::from_name(&name).ok_or(ExprError {
                        kind: ExprErrorKind::UnknownIdentifier(name.clone()),
                        span: t.span,
                    })?;
                    self.bump();
                    let arg = self.expr()?;
                    let close = self.bump();
                    if close.tok != Tok::RParen {
                        return Err(self.unexpected(&close, "')'"));
                    }
                    return Ok(Node {
                        kind: NodeKind::Call(func, Box::new(arg)),
                        span: t.span.join(close.span),
                    });
                }
                if let Some(c) = Constant::from_name(&name) {
                    return Ok(Node {
                        kind: NodeKind::Constant(c),
                        span: t.span,
                    });
                }
                if self.allowed.contains(&name.as_str()) {
                    return Ok(Node {
                        kind: NodeKind::Variable(name),
                        span: t.span,
                    });
                }
                let kind = if super::KNOWN_VARIABLES.contains(&name.as_str()) {
                    ExprErrorKind::VariableNotAllowed(name)
                } else {
                    ExprErrorKind::UnknownIdentifier(name)
                };
                Err(ExprError { kind, span: t.span })
            }
            _ => Err(self.unexpected(&t, "number, identifier or '('")),
        }
    }
}
