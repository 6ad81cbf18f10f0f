//! User-supplied scalar expressions: metric profiles `f(x1, x2, u)` and
//! position functions `rho(x1, x2)`, `sigma(x1, x2)`.
//!
//! Expressions are parsed once and evaluated either over the jet ring (the
//! production path) or over plain `f64` (used by finite-difference oracles,
//! which must not share code with the jet path).

mod parse;

use std::fmt;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::jets::{BasePoint, Elementary, Jet, JetError, JetSpec, Var};

/// Variables of a metric profile.
pub const METRIC_VARS: &[&str] = &["x1", "x2", "u"];
/// Variables of a position-only function such as `rho` or `sigma`.
pub const POSITION_VARS: &[&str] = &["x1", "x2"];

const KNOWN_VARIABLES: &[&str] = &["x1", "x2", "u"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub const fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    fn join(self, other: Span) -> Span {
        Span::new(self.start.min(other.start), self.end.max(other.end))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unknown identifier '{0}'")]
    UnknownIdentifier(String),
    #[error("variable '{0}' is not allowed here")]
    VariableNotAllowed(String),
    #[error("variable '{0}' is not bound")]
    Unbound(String),
    #[error("domain error: {0}")]
    Domain(#[from] JetError),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{kind} (at {}..{})", span.start, span.end)]
pub struct ExprError {
    pub kind: ExprErrorKind,
    pub span: Span,
}

impl ExprError {
    /// Two-line diagnostic: the source and a caret marker under the span.
    pub fn render(&self, source: &str) -> String {
        let start = self.span.start.min(source.len());
        let width = self.span.end.saturating_sub(start).max(1);
        format!(
            "{}\n  {}\n  {}{}",
            self,
            source,
            " ".repeat(source[..start].chars().count()),
            "^".repeat(width)
        )
    }

    pub fn is_domain(&self) -> bool {
        matches!(self.kind, ExprErrorKind::Domain(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Pow => "^",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinaryOp::Add | BinaryOp::Sub => 1,
            BinaryOp::Mul | BinaryOp::Div => 2,
            BinaryOp::Pow => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Function {
    Exp,
    Ln,
    Sqrt,
    Sin,
    Cos,
    Tan,
    Atan,
    Atanh,
}

impl Function {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => Function::Exp,
            "ln" => Function::Ln,
            "sqrt" => Function::Sqrt,
            "sin" => Function::Sin,
            "cos" => Function::Cos,
            "tan" => Function::Tan,
            "atan" => Function::Atan,
            "atanh" => Function::Atanh,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Function::Exp => "exp",
            Function::Ln => "ln",
            Function::Sqrt => "sqrt",
            Function::Sin => "sin",
            Function::Cos => "cos",
            Function::Tan => "tan",
            Function::Atan => "atan",
            Function::Atanh => "atanh",
        }
    }

    fn elementary(self) -> Elementary {
        match self {
            Function::Exp => Elementary::Exp,
            Function::Ln => Elementary::Ln,
            Function::Sqrt => Elementary::Sqrt,
            Function::Sin => Elementary::Sin,
            Function::Cos => Elementary::Cos,
            Function::Tan => Elementary::Tan,
            Function::Atan => Elementary::Atan,
            Function::Atanh => Elementary::AtanhExt,
        }
    }

    fn eval_f64(self, x: f64) -> Result<f64, JetError> {
        let domain = |ok: bool| {
            if ok {
                Ok(())
            } else {
                Err(JetError::Domain {
                    function: self.name(),
                    value: x,
                })
            }
        };
        Ok(match self {
            Function::Exp => x.exp(),
            Function::Ln => {
                domain(x > 0.0)?;
                x.ln()
            }
            Function::Sqrt => {
                domain(x > 0.0)?;
                x.sqrt()
            }
            Function::Sin => x.sin(),
            Function::Cos => x.cos(),
            Function::Tan => x.tan(),
            Function::Atan => x.atan(),
            Function::Atanh => {
                domain((x.abs() - 1.0).abs() >= 1e-14)?;
                0.5 * ((1.0 + x) / (1.0 - x)).abs().ln()
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constant {
    Pi,
    E,
}

impl Constant {
    fn from_name(name: &str) -> Option<Self> {
        match name {
            "pi" => Some(Constant::Pi),
            "e" => Some(Constant::E),
            _ => None,
        }
    }

    fn value(self) -> f64 {
        match self {
            Constant::Pi => std::f64::consts::PI,
            Constant::E => std::f64::consts::E,
        }
    }
}

#[derive(Debug, Clone)]
pub enum NodeKind {
    Number(f64),
    Constant(Constant),
    Variable(String),
    Neg(Box<Node>),
    Binary(BinaryOp, Box<Node>, Box<Node>),
    Call(Function, Box<Node>),
}

/// AST node. Equality is structural and ignores source spans.
#[derive(Debug, Clone)]
pub struct Node {
    pub kind: NodeKind,
    pub span: Span,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        use NodeKind::*;
        match (&self.kind, &other.kind) {
            (Number(a), Number(b)) => a.to_bits() == b.to_bits(),
            (Constant(a), Constant(b)) => a == b,
            (Variable(a), Variable(b)) => a == b,
            (Neg(a), Neg(b)) => a == b,
            (Binary(o1, l1, r1), Binary(o2, l2, r2)) => o1 == o2 && l1 == l2 && r1 == r2,
            (Call(f1, a1), Call(f2, a2)) => f1 == f2 && a1 == a2,
            _ => false,
        }
    }
}

impl Node {
    fn binary(op: BinaryOp, lhs: Node, rhs: Node) -> Node {
        let span = lhs.span.join(rhs.span);
        Node {
            kind: NodeKind::Binary(op, Box::new(lhs), Box::new(rhs)),
            span,
        }
    }

    fn precedence(&self) -> u8 {
        match &self.kind {
            NodeKind::Binary(op, _, _) => op.precedence(),
            NodeKind::Neg(_) => 3,
            _ => 5,
        }
    }

    fn write(&self, out: &mut String) {
        match &self.kind {
            NodeKind::Number(v) => out.push_str(&format!("{v}")),
            NodeKind::Constant(Constant::Pi) => out.push_str("pi"),
            NodeKind::Constant(Constant::E) => out.push('e'),
            NodeKind::Variable(name) => out.push_str(name),
            NodeKind::Neg(inner) => {
                out.push('-');
                inner.write_wrapped(out, inner.precedence() < 3);
            }
            NodeKind::Call(func, arg) => {
                out.push_str(func.name());
                out.push('(');
                arg.write(out);
                out.push(')');
            }
            NodeKind::Binary(op, lhs, rhs) => {
                let p = op.precedence();
                let (wrap_l, wrap_r) = if *op == BinaryOp::Pow {
                    (lhs.precedence() <= p, rhs.precedence() < 3)
                } else {
                    (lhs.precedence() < p, rhs.precedence() <= p)
                };
                lhs.write_wrapped(out, wrap_l);
                out.push(' ');
                out.push_str(op.symbol());
                out.push(' ');
                rhs.write_wrapped(out, wrap_r);
            }
        }
    }

    fn write_wrapped(&self, out: &mut String, wrap: bool) {
        if wrap {
            out.push('(');
            self.write(out);
            out.push(')');
        } else {
            self.write(out);
        }
    }

    fn visit_variables<'a>(&'a self, seen: &mut Vec<&'a str>) {
        match &self.kind {
            NodeKind::Variable(name) => {
                if !seen.contains(&name.as_str()) {
                    seen.push(name);
                }
            }
            NodeKind::Neg(inner) | NodeKind::Call(_, inner) => inner.visit_variables(seen),
            NodeKind::Binary(_, l, r) => {
                l.visit_variables(seen);
                r.visit_variables(seen);
            }
            NodeKind::Number(_) | NodeKind::Constant(_) => {}
        }
    }
}

/// Variable bindings for jet evaluation. All jets share one spec and base.
#[derive(Debug, Clone)]
pub struct JetEnv {
    spec: JetSpec,
    base: BasePoint,
    bindings: Vec<(String, Jet)>,
}

impl JetEnv {
    pub fn new(spec: JetSpec, base: BasePoint) -> Self {
        Self {
            spec,
            base,
            bindings: Vec::new(),
        }
    }

    /// `x1`, `x2` and `u` bound to their coordinate jets at `base`.
    pub fn coordinates(spec: JetSpec, base: BasePoint) -> Self {
        Self::new(spec, base)
            .bind("x1", Jet::lift(Var::X1, spec, base))
            .bind("x2", Jet::lift(Var::X2, spec, base))
            .bind("u", Jet::lift(Var::U, spec, base))
    }

    pub fn bind(mut self, name: &str, jet: Jet) -> Self {
        self.bindings.retain(|(n, _)| n != name);
        self.bindings.push((name.to_string(), jet));
        self
    }

    fn get(&self, name: &str) -> Option<&Jet> {
        self.bindings
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, j)| j)
    }

    fn constant(&self, v: f64) -> Jet {
        Jet::constant(self.spec, self.base, v)
    }
}

#[derive(Debug, Clone)]
pub struct Expression {
    source: String,
    root: Node,
}

impl PartialEq for Expression {
    fn eq(&self, other: &Self) -> bool {
        self.root == other.root
    }
}

impl Serialize for Expression {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.source)
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.pretty())
    }
}

impl Expression {
    /// Parses `source`, accepting only the variables in `allowed_vars`.
    pub fn parse(source: &str, allowed_vars: &[&str]) -> Result<Self, ExprError> {
        Ok(Self {
            source: source.to_string(),
            root: parse::parse(source, allowed_vars)?,
        })
    }

    pub fn metric(source: &str) -> Result<Self, ExprError> {
        Self::parse(source, METRIC_VARS)
    }

    pub fn position(source: &str) -> Result<Self, ExprError> {
        Self::parse(source, POSITION_VARS)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    /// Canonical text with minimal parentheses; parses back to the same tree.
    pub fn pretty(&self) -> String {
        let mut s = String::new();
        self.root.write(&mut s);
        s
    }

    pub fn variables(&self) -> Vec<&str> {
        let mut seen = Vec::new();
        self.root.visit_variables(&mut seen);
        seen
    }

    pub fn evaluate(&self, env: &JetEnv) -> Result<Jet, ExprError> {
        eval_jet(&self.root, env)
    }

    /// Plain floating-point evaluation, independent of the jet engine.
    pub fn eval_f64(&self, vars: &[(&str, f64)]) -> Result<f64, ExprError> {
        eval_scalar(&self.root, vars)
    }
}

fn domain(span: Span) -> impl Fn(JetError) -> ExprError {
    move |e| ExprError {
        kind: ExprErrorKind::Domain(e),
        span,
    }
}

/// Integer exponents up to this size use repeated multiplication.
const MAX_INTEGER_POWER: f64 = 64.0;

fn eval_jet(node: &Node, env: &JetEnv) -> Result<Jet, ExprError> {
    match &node.kind {
        NodeKind::Number(v) => Ok(env.constant(*v)),
        NodeKind::Constant(c) => Ok(env.constant(c.value())),
        NodeKind::Variable(name) => env.get(name).cloned().ok_or_else(|| ExprError {
            kind: ExprErrorKind::Unbound(name.clone()),
            span: node.span,
        }),
        NodeKind::Neg(inner) => Ok(-eval_jet(inner, env)?),
        NodeKind::Call(func, arg) => {
            let a = eval_jet(arg, env)?;
            a.apply(func.elementary()).map_err(domain(node.span))
        }
        NodeKind::Binary(op, lhs, rhs) => {
            let l = eval_jet(lhs, env)?;
            let r = eval_jet(rhs, env)?;
            match op {
                BinaryOp::Add => Ok(l + r),
                BinaryOp::Sub => Ok(l - r),
                BinaryOp::Mul => Ok(l * r),
                BinaryOp::Div => l.div(&r).map_err(domain(node.span)),
                BinaryOp::Pow => {
                    let p = r.value();
                    if r.is_constant() && p.fract() == 0.0 && p.abs() <= MAX_INTEGER_POWER {
                        l.powi(p as i32).map_err(domain(node.span))
                    } else if r.is_constant() {
                        l.powf(p).map_err(domain(node.span))
                    } else {
                        // a^b = exp(b ln a) with a > 0
                        let ln = l.ln().map_err(domain(node.span))?;
                        Ok((ln * r).exp())
                    }
                }
            }
        }
    }
}

fn eval_scalar(node: &Node, vars: &[(&str, f64)]) -> Result<f64, ExprError> {
    let dom = domain(node.span);
    match &node.kind {
        NodeKind::Number(v) => Ok(*v),
        NodeKind::Constant(c) => Ok(c.value()),
        NodeKind::Variable(name) => vars
            .iter()
            .find(|(n, _)| n == name)
            .map(|&(_, v)| v)
            .ok_or_else(|| ExprError {
                kind: ExprErrorKind::Unbound(name.clone()),
                span: node.span,
            }),
        NodeKind::Neg(inner) => Ok(-eval_scalar(inner, vars)?),
        NodeKind::Call(func, arg) => func.eval_f64(eval_scalar(arg, vars)?).map_err(dom),
        NodeKind::Binary(op, lhs, rhs) => {
            let l = eval_scalar(lhs, vars)?;
            let r = eval_scalar(rhs, vars)?;
            match op {
                BinaryOp::Add => Ok(l + r),
                BinaryOp::Sub => Ok(l - r),
                BinaryOp::Mul => Ok(l * r),
                BinaryOp::Div => {
                    if r == 0.0 {
                        Err(dom(JetError::SingularDivision))
                    } else {
                        Ok(l / r)
                    }
                }
                BinaryOp::Pow => {
                    if r.fract() == 0.0 && r.abs() <= MAX_INTEGER_POWER {
                        if r < 0.0 && l == 0.0 {
                            return Err(dom(JetError::SingularDivision));
                        }
                        Ok(l.powi(r as i32))
                    } else if l > 0.0 {
                        Ok(l.powf(r))
                    } else {
                        Err(dom(JetError::Domain {
                            function: "pow",
                            value: l,
                        }))
                    }
                }
            }
        }
    }
}
