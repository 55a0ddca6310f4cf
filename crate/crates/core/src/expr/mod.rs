//! A small smooth-expression language used to describe generating functions.
//!
//! Expressions are parsed against an explicit list of variable names and
//! evaluated either as plain `f64` values or as second-order forward jets
//! (value, gradient and Hessian) through [`Jet`]. Only C² functions are
//! accepted: `sqrt`, `exp`, `log`, `sin`, `cos`, `atan` and `pow` (also
//! written `a^b`). Non-smooth functions such as `abs` are rejected at parse
//! time.
//!
//! ```
//! use cylfinsler::expr::{Bindings, Expr};
//!
//! let e = Expr::parse("sqrt(1+z^2)", &["z"]).unwrap();
//! let at = Bindings::from_pairs([("z", 2.0)]);
//! let jet = e.eval_jet(&at, &["z"]).unwrap();
//! assert!((jet.value - 5f64.sqrt()).abs() < 1e-15);
//! assert!((jet.d("z").unwrap() - 2.0 / 5f64.sqrt()).abs() < 1e-15);
//! ```

mod jet;
mod parser;

use std::collections::BTreeMap;
use std::fmt;

pub use jet::Jet;

/// Largest number of variables a jet may be taken with respect to.
pub const MAX_JET_VARS: usize = 4;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: expected one of [{}], found {found}", expected.join(", "))]
    Syntax {
        offset: usize,
        expected: Vec<String>,
        found: String,
    },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("unknown or non-smooth function `{name}` at byte {offset}")]
    UnknownFunction { name: String, offset: usize },
    #[error("function `{name}` at byte {offset} takes {expected} argument(s), got {found}")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
        offset: usize,
    },
    #[error("domain error in `{subexpr}`: {reason} (argument {arg})")]
    Domain {
        subexpr: String,
        reason: &'static str,
        arg: f64,
    },
    #[error("variable `{0}` is not bound")]
    Unbound(String),
    #[error("cannot differentiate with respect to `{0}`: not a declared variable")]
    NotDeclared(String),
    #[error("jets support at most {MAX_JET_VARS} variables, got {0}")]
    TooManyVariables(usize),
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

/// Whitelisted unary functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sqrt,
    Exp,
    Log,
    Sin,
    Cos,
    Atan,
}

impl Func {
    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sqrt" => Func::Sqrt,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "atan" => Func::Atan,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Atan => "atan",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    /// Index into the owning expression's variable list.
    Var(usize),
    Neg(Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

impl Node {
    fn has_vars(&self) -> bool {
        match self {
            Node::Const(_) => false,
            Node::Var(_) => true,
            Node::Neg(a) | Node::Call(_, a) => a.has_vars(),
            Node::Binary(_, a, b) => a.has_vars() || b.has_vars(),
        }
    }
}

/// Variable name to value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Bindings(BTreeMap<String, f64>);

impl Bindings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, f64)>) -> Self {
        Bindings(pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
    }

    pub fn set(&mut self, name: &str, value: f64) {
        self.0.insert(name.to_string(), value);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }
}

/// Value, gradient and Hessian of an expression with respect to a chosen
/// set of variables.
#[derive(Debug, Clone, PartialEq)]
pub struct JetValue {
    pub value: f64,
    wrt: Vec<String>,
    grad: Vec<f64>,
    /// Upper triangle, row-major.
    hess: Vec<f64>,
}

impl JetValue {
    fn index(&self, name: &str) -> Option<usize> {
        self.wrt.iter().position(|v| v == name)
    }

    fn packed(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        let k = self.wrt.len();
        i * k - i * (i + 1) / 2 + j
    }

    pub fn wrt(&self) -> &[String] {
        &self.wrt
    }

    /// First partial with respect to `name`.
    pub fn d(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.grad[i])
    }

    /// Second partial with respect to `a` and `b`. Symmetric by storage.
    pub fn d2(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.index(a)?;
        let j = self.index(b)?;
        Some(self.hess[self.packed(i, j)])
    }
}

/// A parsed expression together with its declared variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    root: Node,
    vars: Vec<String>,
}

impl Expr {
    pub fn parse(source: &str, vars: &[&str]) -> Result<Self, ExprError> {
        let vars: Vec<String> = vars.iter().map(|s| s.to_string()).collect();
        let root = parser::parse(source, &vars)?;
        Ok(Expr { root, vars })
    }

    pub fn constant(v: f64, vars: &[&str]) -> Self {
        Expr {
            root: Node::Const(v),
            vars: vars.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    /// True if the expression mentions variable `name`.
    pub fn depends_on(&self, name: &str) -> bool {
        fn walk(n: &Node, idx: usize) -> bool {
            match n {
                Node::Const(_) => false,
                Node::Var(i) => *i == idx,
                Node::Neg(a) | Node::Call(_, a) => walk(a, idx),
                Node::Binary(_, a, b) => walk(a, idx) || walk(b, idx),
            }
        }
        self.vars
            .iter()
            .position(|v| v == name)
            .is_some_and(|idx| walk(&self.root, idx))
    }

    /// Evaluate with values given in declaration order.
    pub fn eval(&self, values: &[f64]) -> Result<f64, ExprError> {
        debug_assert_eq!(values.len(), self.vars.len());
        self.eval_node(&self.root, values)
    }

    pub fn evaluate(&self, at: &Bindings) -> Result<f64, ExprError> {
        let values = self.bind(at)?;
        self.eval(&values)
    }

    /// Exact value, gradient and Hessian with respect to `wrt`; every other
    /// declared variable is held fixed at its binding.
    pub fn eval_jet(&self, at: &Bindings, wrt: &[&str]) -> Result<JetValue, ExprError> {
        let values = self.bind(at)?;
        let mut idx = Vec::with_capacity(wrt.len());
        for w in wrt {
            let i = self
                .vars
                .iter()
                .position(|v| v == w)
                .ok_or_else(|| ExprError::NotDeclared(w.to_string()))?;
            idx.push(i);
        }
        macro_rules! run {
            ($n:literal) => {{
                let seeds: Vec<Jet<$n>> = values
                    .iter()
                    .enumerate()
                    .map(|(vi, &v)| match idx.iter().position(|&i| i == vi) {
                        Some(k) => Jet::variable(v, k),
                        None => Jet::constant(v),
                    })
                    .collect();
                let j = self.jet(&seeds)?;
                let mut hess = Vec::new();
                for a in 0..$n {
                    for b in a..$n {
                        hess.push(j.d2(a, b));
                    }
                }
                (j.value, j.grad.to_vec(), hess)
            }};
        }
        let (value, grad, hess) = match wrt.len() {
            0 => (self.eval(&values)?, Vec::new(), Vec::new()),
            1 => run!(1),
            2 => run!(2),
            3 => run!(3),
            4 => run!(4),
            k => return Err(ExprError::TooManyVariables(k)),
        };
        Ok(JetValue {
            value,
            wrt: wrt.iter().map(|s| s.to_string()).collect(),
            grad,
            hess,
        })
    }

    /// Propagate caller-seeded jets (one per declared variable).
    pub fn jet<const N: usize>(&self, seeds: &[Jet<N>]) -> Result<Jet<N>, ExprError> {
        debug_assert_eq!(seeds.len(), self.vars.len());
        self.jet_node(&self.root, seeds)
    }

    fn bind(&self, at: &Bindings) -> Result<Vec<f64>, ExprError> {
        self.vars
            .iter()
            .map(|v| at.get(v).ok_or_else(|| ExprError::Unbound(v.clone())))
            .collect()
    }

    fn domain(&self, node: &Node, reason: &'static str, arg: f64) -> ExprError {
        ExprError::Domain {
            subexpr: Printed(node, &self.vars).to_string(),
            reason,
            arg,
        }
    }

    fn eval_node(&self, node: &Node, vals: &[f64]) -> Result<f64, ExprError> {
        Ok(match node {
            Node::Const(c) => *c,
            Node::Var(i) => vals[*i],
            Node::Neg(a) => -self.eval_node(a, vals)?,
            Node::Binary(op, a, b) => {
                let x = self.eval_node(a, vals)?;
                let y = self.eval_node(b, vals)?;
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => {
                        if y == 0.0 {
                            return Err(self.domain(node, "division by zero", y));
                        }
                        x / y
                    }
                    BinOp::Pow => self.check_pow(node, x, y)?,
                }
            }
            Node::Call(f, a) => {
                let x = self.eval_node(a, vals)?;
                match f {
                    Func::Sqrt => {
                        if x < 0.0 {
                            return Err(self.domain(node, "sqrt of a negative number", x));
                        }
                        x.sqrt()
                    }
                    Func::Log => {
                        if x <= 0.0 {
                            return Err(self.domain(node, "log of a non-positive number", x));
                        }
                        x.ln()
                    }
                    Func::Exp => x.exp(),
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Atan => x.atan(),
                }
            }
        })
    }

    fn check_pow(&self, node: &Node, x: f64, y: f64) -> Result<f64, ExprError> {
        if x < 0.0 && y.fract() != 0.0 {
            return Err(self.domain(node, "non-integer power of a negative number", x));
        }
        if x == 0.0 && y < 0.0 {
            return Err(self.domain(node, "negative power of zero", x));
        }
        if y.fract() == 0.0 && y.abs() < i32::MAX as f64 {
            Ok(x.powi(y as i32))
        } else {
            Ok(x.powf(y))
        }
    }

    fn jet_node<const N: usize>(&self, node: &Node, seeds: &[Jet<N>]) -> Result<Jet<N>, ExprError> {
        Ok(match node {
            Node::Const(c) => Jet::constant(*c),
            Node::Var(i) => seeds[*i],
            Node::Neg(a) => -self.jet_node(a, seeds)?,
            Node::Binary(op, a, b) => {
                let x = self.jet_node(a, seeds)?;
                let y = self.jet_node(b, seeds)?;
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => {
                        if y.value == 0.0 {
                            return Err(self.domain(node, "division by zero", y.value));
                        }
                        x / y
                    }
                    BinOp::Pow => {
                        if !b.has_vars() {
                            self.check_pow(node, x.value, y.value)?;
                            x.powf_const(y.value)
                        } else {
                            if x.value <= 0.0 {
                                return Err(self.domain(
                                    node,
                                    "variable exponent needs a positive base",
                                    x.value,
                                ));
                            }
                            (y * x.ln()).exp()
                        }
                    }
                }
            }
            Node::Call(f, a) => {
                let x = self.jet_node(a, seeds)?;
                match f {
                    Func::Sqrt => {
                        if x.value < 0.0 {
                            return Err(self.domain(node, "sqrt of a negative number", x.value));
                        }
                        x.sqrt()
                    }
                    Func::Log => {
                        if x.value <= 0.0 {
                            return Err(self.domain(node, "log of a non-positive number", x.value));
                        }
                        x.ln()
                    }
                    Func::Exp => x.exp(),
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Atan => x.atan(),
                }
            }
        })
    }
}

struct Printed<'a>(&'a Node, &'a [String]);

impl fmt::Display for Printed<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let vars = self.1;
        match self.0 {
            Node::Const(c) => write!(f, "{c:?}"),
            Node::Var(i) => f.write_str(&vars[*i]),
            Node::Neg(a) => write!(f, "(-{})", Printed(a, vars)),
            Node::Binary(op, a, b) => {
                write!(f, "({} {} {})", Printed(a, vars), op.symbol(), Printed(b, vars))
            }
            Node::Call(func, a) => write!(f, "{}({})", func.name(), Printed(a, vars)),
        }
    }
}

/// Canonical, fully parenthesised form. Re-parsing it yields the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        Printed(&self.root, &self.vars).fmt(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(src: &str, vars: &[&str]) -> Expr {
        Expr::parse(src, vars).unwrap()
    }

    #[test]
    fn parses_sqrt_of_sum() {
        let e = p("sqrt(1+z^2)", &["z"]);
        let expected = Node::Call(
            Func::Sqrt,
            Box::new(Node::Binary(
                BinOp::Add,
                Box::new(Node::Const(1.0)),
                Box::new(Node::Binary(
                    BinOp::Pow,
                    Box::new(Node::Var(0)),
                    Box::new(Node::Const(2.0)),
                )),
            )),
        );
        assert_eq!(e.root(), &expected);
    }

    #[test]
    fn syntax_error_reports_offset() {
        match Expr::parse("1+*2", &[]) {
            Err(ExprError::Syntax { offset, expected, .. }) => {
                assert_eq!(offset, 2);
                assert!(expected.iter().any(|e| e == "number"));
            }
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_identifier_and_function() {
        assert!(matches!(
            Expr::parse("g(q)", &["z"]),
            Err(ExprError::UnknownIdentifier { ref name, .. }) if name == "q"
        ));
        assert!(matches!(
            Expr::parse("g(z)", &["z"]),
            Err(ExprError::UnknownFunction { ref name, .. }) if name == "g"
        ));
        assert!(matches!(
            Expr::parse("abs(z)", &["z"]),
            Err(ExprError::UnknownFunction { .. })
        ));
    }

    #[test]
    fn precedence_and_associativity() {
        let at = Bindings::from_pairs([("z", 3.0)]);
        assert_eq!(p("-z^2", &["z"]).evaluate(&at).unwrap(), -9.0);
        assert_eq!(p("2^3^2", &[]).evaluate(&at).unwrap(), 512.0);
        assert_eq!(p("8/4/2", &[]).evaluate(&at).unwrap(), 1.0);
        assert_eq!(p("1-2-3", &[]).evaluate(&at).unwrap(), -4.0);
        assert_eq!(p("2*-z", &["z"]).evaluate(&at).unwrap(), -6.0);
        assert_eq!(p("pow(z, 2) + 1e-1", &["z"]).evaluate(&at).unwrap(), 9.1);
    }

    #[test]
    fn evaluate_examples() {
        let at = Bindings::from_pairs([("z", 2.0)]);
        let v = p("sqrt(1+z^2)", &["z"]).evaluate(&at).unwrap();
        assert_eq!(v, 2.23606797749979);
        let at = Bindings::from_pairs([("z", 3.0)]);
        assert_eq!(p("z*0 + 7", &["z"]).evaluate(&at).unwrap(), 7.0);
    }

    #[test]
    fn domain_errors_name_the_subexpression() {
        let err = p("1 + log(-1)", &[]).evaluate(&Bindings::new()).unwrap_err();
        match err {
            ExprError::Domain { subexpr, .. } => assert_eq!(subexpr, "log((-1.0))"),
            other => panic!("{other:?}"),
        }
        let at = Bindings::from_pairs([("z", -1.0)]);
        assert!(p("sqrt(z)", &["z"]).evaluate(&at).is_err());
        assert!(p("sqrt(z)", &["z"]).eval_jet(&at, &["z"]).is_err());
        assert!(p("z^0.5", &["z"]).evaluate(&at).is_err());
    }

    #[test]
    fn unbound_variable() {
        let e = p("z + r", &["z", "r"]);
        let at = Bindings::from_pairs([("z", 1.0)]);
        assert_eq!(e.evaluate(&at), Err(ExprError::Unbound("r".into())));
    }

    #[test]
    fn jet_examples() {
        let at = Bindings::from_pairs([("z", 2.0)]);
        let j = p("sqrt(1+z^2)", &["z"]).eval_jet(&at, &["z"]).unwrap();
        let s5 = 5f64.sqrt();
        assert!((j.value - s5).abs() < 1e-15);
        assert!((j.d("z").unwrap() - 2.0 / s5).abs() < 1e-15);
        assert!((j.d2("z", "z").unwrap() - 5f64.powf(-1.5)).abs() < 1e-15);

        let at = Bindings::from_pairs([("s", 3.0), ("r", 4.0)]);
        let j = p("s*r", &["s", "r"]).eval_jet(&at, &["s", "r"]).unwrap();
        assert_eq!(j.d("s"), Some(4.0));
        assert_eq!(j.d("r"), Some(3.0));
        assert_eq!(j.d2("s", "r"), Some(1.0));
        assert_eq!(j.d2("r", "s"), Some(1.0));
        assert_eq!(j.d2("s", "s"), Some(0.0));
        assert_eq!(j.d2("r", "r"), Some(0.0));
    }

    #[test]
    fn variable_exponent_jet() {
        // x^x at x = 2: d/dx = x^x (ln x + 1), d2 = x^x ((ln x + 1)^2 + 1/x)
        let at = Bindings::from_pairs([("x", 2.0)]);
        let j = p("x^x", &["x"]).eval_jet(&at, &["x"]).unwrap();
        let l = 2f64.ln() + 1.0;
        assert!((j.value - 4.0).abs() < 1e-14);
        assert!((j.d("x").unwrap() - 4.0 * l).abs() < 1e-13);
        assert!((j.d2("x", "x").unwrap() - 4.0 * (l * l + 0.5)).abs() < 1e-13);
    }

    #[test]
    fn print_is_reparseable() {
        let src = "-(z - 2.5e-3)^-2 / atan(r*s) + pow(exp(z), 3) - -1";
        let vars = ["z", "r", "s"];
        let e = p(src, &vars);
        let again = p(&e.to_string(), &vars);
        assert_eq!(e.root(), again.root());
    }

    #[test]
    fn depends_on() {
        let e = p("z*0 + r", &["x0", "z", "r", "s"]);
        assert!(e.depends_on("z"));
        assert!(e.depends_on("r"));
        assert!(!e.depends_on("s"));
        assert!(!e.depends_on("q"));
    }
}
