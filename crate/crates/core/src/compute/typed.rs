use std::collections::BTreeMap;
use std::fmt;

use super::parser::{parse_expression, BinOp, Expr};
use super::CompileError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Type {
    Scalar,
    Bool,
    Array,
    /// Only valid as the type of a whole expression.
    Tuple(usize),
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Scalar => f.write_str("scalar"),
            Type::Bool => f.write_str("boolean"),
            Type::Array => f.write_str("array"),
            Type::Tuple(n) => write!(f, "{n}-tuple"),
        }
    }
}

impl Type {
    /// Number of result fields the type fills.
    pub fn arity(self) -> usize {
        match self {
            Type::Tuple(n) => n,
            _ => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Builtin {
    Sqrt,
    Abs,
    Exp,
    Log,
    Floor,
    Min,
    Max,
    Pow,
    Len,
    Sum,
    Mean,
    Dot,
    At,
    Linfit,
    If,
}

impl Builtin {
    fn lookup(name: &str) -> Option<Builtin> {
        Some(match name {
            "sqrt" => Builtin::Sqrt,
            "abs" => Builtin::Abs,
            "exp" => Builtin::Exp,
            "log" => Builtin::Log,
            "floor" => Builtin::Floor,
            "min" => Builtin::Min,
            "max" => Builtin::Max,
            "pow" => Builtin::Pow,
            "len" => Builtin::Len,
            "sum" => Builtin::Sum,
            "mean" => Builtin::Mean,
            "dot" => Builtin::Dot,
            "at" => Builtin::At,
            "linfit" => Builtin::Linfit,
            "if" => Builtin::If,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug)]
enum Node {
    Num(f64),
    Bool(bool),
    Var(usize),
    Neg(Box<Node>),
    Not(Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
    Call(Builtin, Vec<Node>),
    Tuple(Vec<Node>),
}

/// Runtime value; arrays borrow from the feature's attributes.
#[derive(Clone, Debug, PartialEq)]
pub enum Value<'a> {
    Scalar(f64),
    Bool(bool),
    Array(&'a [f64]),
    Tuple(Vec<Value<'a>>),
}

impl<'a> Value<'a> {
    fn scalar(&self) -> f64 {
        match self {
            Value::Scalar(v) => *v,
            _ => unreachable!("type-checked"),
        }
    }

    fn boolean(&self) -> bool {
        match self {
            Value::Bool(b) => *b,
            _ => unreachable!("type-checked"),
        }
    }

    fn array(&self) -> &'a [f64] {
        match self {
            Value::Array(a) => a,
            _ => unreachable!("type-checked"),
        }
    }
}

/// A parsed and type-checked expression. Variables are bound by position,
/// in the order reported by [`Expression::variables`].
#[derive(Clone, Debug)]
pub struct Expression {
    syntax: Expr,
    root: Node,
    ty: Type,
    variables: Vec<String>,
}

fn type_error(message: String) -> CompileError {
    CompileError::Type(message)
}

struct Checker<'t> {
    types: &'t BTreeMap<String, Type>,
    slots: Vec<String>,
}

impl Checker<'_> {
    fn check(&mut self, e: &Expr, top: bool) -> Result<(Node, Type), CompileError> {
        match e {
            Expr::Num(v) => Ok((Node::Num(*v), Type::Scalar)),
            Expr::Bool(b) => Ok((Node::Bool(*b), Type::Bool)),
            Expr::Var(name) => {
                let ty = *self
                    .types
                    .get(name)
                    .ok_or_else(|| CompileError::UnboundVariable(name.clone()))?;
                if matches!(ty, Type::Tuple(_)) {
                    return Err(type_error(format!("variable '{name}' cannot hold a tuple")));
                }
                let slot = match self.slots.iter().position(|s| s == name) {
                    Some(i) => i,
                    None => {
                        self.slots.push(name.clone());
                        self.slots.len() - 1
                    }
                };
                Ok((Node::Var(slot), ty))
            }
            Expr::Neg(a) => {
                let (n, t) = self.check(a, false)?;
                expect(t, Type::Scalar, "operand of unary '-'")?;
                Ok((Node::Neg(Box::new(n)), Type::Scalar))
            }
            Expr::Not(a) => {
                let (n, t) = self.check(a, false)?;
                expect(t, Type::Bool, "operand of 'not'")?;
                Ok((Node::Not(Box::new(n)), Type::Bool))
            }
            Expr::Binary(op, a, b) => {
                let (na, ta) = self.check(a, false)?;
                let (nb, tb) = self.check(b, false)?;
                let what = format!("operands of '{}'", op.symbol());
                let ty = match op {
                    BinOp::And | BinOp::Or => {
                        expect(ta, Type::Bool, &what)?;
                        expect(tb, Type::Bool, &what)?;
                        Type::Bool
                    }
                    BinOp::Eq | BinOp::Ne if ta == Type::Bool && tb == Type::Bool => Type::Bool,
                    op if op.is_comparison() => {
                        expect(ta, Type::Scalar, &what)?;
                        expect(tb, Type::Scalar, &what)?;
                        Type::Bool
                    }
                    _ => {
                        expect(ta, Type::Scalar, &what)?;
                        expect(tb, Type::Scalar, &what)?;
                        Type::Scalar
                    }
                };
                Ok((Node::Binary(*op, Box::new(na), Box::new(nb)), ty))
            }
            Expr::Tuple(items) => {
                if !top {
                    return Err(type_error(
                        "tuples are only allowed as the whole expression".into(),
                    ));
                }
                let mut nodes = Vec::with_capacity(items.len());
                for item in items {
                    let (n, _) = self.check(item, false)?;
                    nodes.push(n);
                }
                Ok((Node::Tuple(nodes), Type::Tuple(items.len())))
            }
            Expr::Call(name, args) => {
                let f = Builtin::lookup(name)
                    .ok_or_else(|| CompileError::UnknownFunction(name.clone()))?;
                let mut nodes = Vec::with_capacity(args.len());
                let mut types = Vec::with_capacity(args.len());
                for a in args {
                    let (n, t) = self.check(a, false)?;
                    nodes.push(n);
                    types.push(t);
                }
                let ty = signature(name, f, &types, top)?;
                Ok((Node::Call(f, nodes), ty))
            }
        }
    }
}

fn expect(found: Type, wanted: Type, what: &str) -> Result<(), CompileError> {
    if found == wanted {
        Ok(())
    } else {
        Err(type_error(format!(
            "{what} must be {wanted}, found {found}"
        )))
    }
}

fn signature(name: &str, f: Builtin, args: &[Type], top: bool) -> Result<Type, CompileError> {
    use Type::{Array, Scalar};
    let wrong = || {
        let shown: Vec<String> = args.iter().map(Type::to_string).collect();
        type_error(format!("{name}() cannot take ({})", shown.join(", ")))
    };
    let ty = match f {
        Builtin::Sqrt | Builtin::Abs | Builtin::Exp | Builtin::Log | Builtin::Floor => match args {
            [Scalar] => Scalar,
            _ => return Err(wrong()),
        },
        Builtin::Pow => match args {
            [Scalar, Scalar] => Scalar,
            _ => return Err(wrong()),
        },
        Builtin::Min | Builtin::Max => {
            if args.len() < 2 || args.iter().any(|t| *t != Scalar) {
                return Err(wrong());
            }
            Scalar
        }
        Builtin::Len | Builtin::Sum | Builtin::Mean => match args {
            [Array] => Scalar,
            _ => return Err(wrong()),
        },
        Builtin::Dot => match args {
            [Array, Array] => Scalar,
            _ => return Err(wrong()),
        },
        Builtin::At => match args {
            [Array, Scalar] => Scalar,
            _ => return Err(wrong()),
        },
        Builtin::Linfit => match args {
            [Array, Array] if top => Type::Tuple(2),
            [Array, Array] => {
                return Err(type_error(
                    "linfit() yields a tuple and must be the whole expression".into(),
                ))
            }
            _ => return Err(wrong()),
        },
        Builtin::If => match args {
            [Type::Bool, a, b] if a == b && !matches!(a, Type::Tuple(_)) => *a,
            _ => return Err(wrong()),
        },
    };
    Ok(ty)
}

/// Parses `source` and type-checks it against the given variable types.
pub fn compile_expression(
    source: &str,
    types: &BTreeMap<String, Type>,
) -> Result<Expression, CompileError> {
    let syntax = parse_expression(source)?;
    compile_parsed(&syntax, types)
}

pub(crate) fn compile_parsed(
    syntax: &Expr,
    types: &BTreeMap<String, Type>,
) -> Result<Expression, CompileError> {
    let mut checker = Checker {
        types,
        slots: Vec::new(),
    };
    let (root, ty) = checker.check(syntax, true)?;
    Ok(Expression {
        syntax: syntax.clone(),
        root,
        ty,
        variables: checker.slots,
    })
}

/// Closed-form least squares: slope = (nΣxy − ΣxΣy)/(nΣx² − (Σx)²),
/// intercept = (Σy − slope·Σx)/n. Sums run in index order.
pub fn linfit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    if xs.len() != ys.len() || xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let (mut sx, mut sy, mut sxy, mut sxx) = (0.0, 0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        sx += x;
        sy += y;
        sxy += x * y;
        sxx += x * x;
    }
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    (slope, (sy - slope * sx) / n)
}

fn eval<'a>(node: &Node, vars: &[Value<'a>]) -> Value<'a> {
    match node {
        Node::Num(v) => Value::Scalar(*v),
        Node::Bool(b) => Value::Bool(*b),
        Node::Var(i) => vars[*i].clone(),
        Node::Neg(a) => Value::Scalar(-eval(a, vars).scalar()),
        Node::Not(a) => Value::Bool(!eval(a, vars).boolean()),
        Node::Binary(op, a, b) => {
            let a = eval(a, vars);
            match op {
                BinOp::And => return Value::Bool(a.boolean() && eval(b, vars).boolean()),
                BinOp::Or => return Value::Bool(a.boolean() || eval(b, vars).boolean()),
                _ => {}
            }
            let b = eval(b, vars);
            if let (Value::Bool(x), Value::Bool(y)) = (&a, &b) {
                return Value::Bool(if *op == BinOp::Eq { x == y } else { x != y });
            }
            let (x, y) = (a.scalar(), b.scalar());
            match op {
                BinOp::Add => Value::Scalar(x + y),
                BinOp::Sub => Value::Scalar(x - y),
                BinOp::Mul => Value::Scalar(x * y),
                BinOp::Div => Value::Scalar(x / y),
                BinOp::Pow => Value::Scalar(x.powf(y)),
                BinOp::Lt => Value::Bool(x < y),
                BinOp::Le => Value::Bool(x <= y),
                BinOp::Gt => Value::Bool(x > y),
                BinOp::Ge => Value::Bool(x >= y),
                BinOp::Eq => Value::Bool(x == y),
                BinOp::Ne => Value::Bool(x != y),
                BinOp::And | BinOp::Or => unreachable!(),
            }
        }
        Node::Tuple(items) => Value::Tuple(items.iter().map(|n| eval(n, vars)).collect()),
        Node::Call(f, args) => {
            if *f == Builtin::If {
                return if eval(&args[0], vars).boolean() {
                    eval(&args[1], vars)
                } else {
                    eval(&args[2], vars)
                };
            }
            let v: Vec<Value<'a>> = args.iter().map(|n| eval(n, vars)).collect();
            let s = |i: usize| v[i].scalar();
            Value::Scalar(match f {
                Builtin::Sqrt => s(0).sqrt(),
                Builtin::Abs => s(0).abs(),
                Builtin::Exp => s(0).exp(),
                Builtin::Log => s(0).ln(),
                Builtin::Floor => s(0).floor(),
                Builtin::Pow => s(0).powf(s(1)),
                // NaN-propagating, unlike f64::min/max.
                Builtin::Min => v.iter().map(Value::scalar).fold(f64::INFINITY, |m, x| {
                    if x < m || x.is_nan() {
                        x
                    } else {
                        m
                    }
                }),
                Builtin::Max => v.iter().map(Value::scalar).fold(f64::NEG_INFINITY, |m, x| {
                    if x > m || x.is_nan() {
                        x
                    } else {
                        m
                    }
                }),
                Builtin::Len => v[0].array().len() as f64,
                Builtin::Sum => v[0].array().iter().sum(),
                Builtin::Mean => {
                    let a = v[0].array();
                    a.iter().sum::<f64>() / a.len() as f64
                }
                Builtin::Dot => {
                    let (a, b) = (v[0].array(), v[1].array());
                    if a.len() != b.len() {
                        f64::NAN
                    } else {
                        a.iter().zip(b).map(|(x, y)| x * y).sum()
                    }
                }
                Builtin::At => {
                    let (a, i) = (v[0].array(), s(1));
                    if i >= 0.0 && i.fract() == 0.0 && (i as usize) < a.len() {
                        a[i as usize]
                    } else {
                        f64::NAN
                    }
                }
                Builtin::Linfit => {
                    let (slope, intercept) = linfit(v[0].array(), v[1].array());
                    return Value::Tuple(vec![Value::Scalar(slope), Value::Scalar(intercept)]);
                }
                Builtin::If => unreachable!(),
            })
        }
    }
}

impl Expression {
    pub fn result_type(&self) -> Type {
        self.ty
    }

    /// Variables in binding order.
    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn syntax(&self) -> &Expr {
        &self.syntax
    }

    /// Evaluates with `bindings[i]` bound to `variables()[i]`.
    pub fn eval<'a>(&self, bindings: &[Value<'a>]) -> Value<'a> {
        assert_eq!(
            bindings.len(),
            self.variables.len(),
            "one binding per variable"
        );
        eval(&self.root, bindings)
    }
}
