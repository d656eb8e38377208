//! Tree-walking interpreter that runs a checked script against a live state.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::state::{SimError, WorkcellState};
use crate::model::Pose;
use crate::wcs::{self, builtins, source_line, BinOp, Expr, ExprKind, Function, Span, Stmt, StmtKind, UnOp, WcsScript};

/// A runtime failure, formatted exactly as it is fed back to the model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuntimeScriptError {
    /// Exception type name, e.g. `MotionException` or `ZeroDivisionError`.
    pub kind: String,
    pub message: String,
    pub span: Span,
    pub excerpt: String,
}

impl fmt::Display for RuntimeScriptError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        wcs::write_feedback(f, &self.kind, &self.message, self.span, &self.excerpt)
    }
}

impl std::error::Error for RuntimeScriptError {}

/// What a successful run did, beyond mutating the state.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    /// Successful motion commands (move, retract, place, insert).
    pub motions: u32,
    pub detected: BTreeSet<String>,
    pub printed: Vec<String>,
    pub steps: u64,
}

/// Expected effect of a script, verified after it runs and before the run is
/// accepted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "expect", rename_all = "snake_case")]
pub enum Expectation {
    PartHeld { part: String },
    /// Part released at its design pose, either in the world (`relative_to`
    /// absent) or relative to where another part currently is.
    PartAtDesign { part: String, relative_to: Option<String>, tolerance: f64 },
    Detected { part: String },
    Moved,
}

impl Expectation {
    pub fn verify(&self, state: &WorkcellState, trace: &RunTrace) -> Result<(), String> {
        match self {
            Expectation::PartHeld { part } => match state.parts().get(part) {
                Some(p) if p.held_by.is_some() => Ok(()),
                Some(_) => Err(format!("the script finished but {part} is not held by any robot")),
                None => Err(format!("unknown part '{part}'")),
            },
            Expectation::PartAtDesign { part, relative_to, tolerance } => {
                let target = match relative_to {
                    Some(other) => state.design_relative_pose(part, other),
                    None => state.design_pose(part),
                }
                .map_err(|e| e.message)?;
                let now = state.part(part).map_err(|e| e.message)?;
                if now.held_by.is_some() {
                    return Err(format!("the script finished but {part} is still held"));
                }
                let error = now.pose.distance(&target);
                if error > *tolerance {
                    return Err(format!("the script finished but {part} is {error:.4} m from its target pose"));
                }
                Ok(())
            }
            Expectation::Detected { part } => {
                if trace.detected.contains(part) {
                    Ok(())
                } else {
                    Err(format!("the script finished without detecting {part}"))
                }
            }
            Expectation::Moved => {
                if trace.motions > 0 {
                    Ok(())
                } else {
                    Err("the script finished without moving the robot".into())
                }
            }
        }
    }
}

/// Runs `main(workcell)`. On any error the state is restored to what it was
/// on entry, so a failed run has no effect.
pub fn run_script(
    script: &WcsScript,
    source: &str,
    state: &mut WorkcellState,
    expect: Option<&Expectation>,
) -> Result<RunTrace, RuntimeScriptError> {
    let entry = state.clone();
    let result = execute(script, source, state, expect);
    if result.is_err() {
        *state = entry;
    }
    result
}

fn execute(
    script: &WcsScript,
    source: &str,
    state: &mut WorkcellState,
    expect: Option<&Expectation>,
) -> Result<RunTrace, RuntimeScriptError> {
    let to_error = |u: Unwind| RuntimeScriptError {
        kind: u.kind,
        message: u.message,
        span: u.span.unwrap_or(Span::new(1, 1)),
        excerpt: source_line(source, u.span.unwrap_or(Span::new(1, 1)).line),
    };
    let main = script.function("main").ok_or_else(|| RuntimeScriptError {
        kind: "CheckError".into(),
        message: "script must define main(workcell)".into(),
        span: Span::new(1, 1),
        excerpt: source_line(source, 1),
    })?;
    let functions = script.functions().map(|f| (f.name.as_str(), f)).collect();
    let max_steps = state.config().max_steps;
    let mut it = Interp { state, functions, trace: RunTrace::default(), handling: Vec::new(), max_steps };
    it.call_function(main, vec![Value::Workcell]).map_err(to_error)?;
    let trace = it.trace;
    if let Some(expect) = expect {
        expect.verify(state, &trace).map_err(|message| RuntimeScriptError {
            kind: "EffectCheckError".into(),
            message,
            span: main.span,
            excerpt: source_line(source, main.span.line),
        })?;
    }
    Ok(trace)
}

#[derive(Debug, Clone, PartialEq)]
enum Value {
    None,
    Bool(bool),
    Number(f64),
    Str(String),
    List(Vec<Value>),
    Pose(Pose),
    Robot(String),
    Workcell,
    Exception { kind: String, message: String },
}

impl Value {
    fn type_name(&self) -> &'static str {
        match self {
            Value::None => "None",
            Value::Bool(_) => "bool",
            Value::Number(_) => "number",
            Value::Str(_) => "str",
            Value::List(_) => "list",
            Value::Pose(_) => "Pose",
            Value::Robot(_) => "Robot",
            Value::Workcell => "workcell",
            Value::Exception { .. } => "exception",
        }
    }

    fn truthy(&self) -> bool {
        match self {
            Value::None => false,
            Value::Bool(b) => *b,
            Value::Number(n) => *n != 0.0,
            Value::Str(s) => !s.is_empty(),
            Value::List(l) => !l.is_empty(),
            _ => true,
        }
    }

    fn repr(&self) -> String {
        match self {
            Value::Str(s) => format!("{s:?}"),
            other => other.to_string(),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::None => f.write_str("None"),
            Value::Bool(true) => f.write_str("True"),
            Value::Bool(false) => f.write_str("False"),
            Value::Number(n) if n.fract() == 0.0 && n.abs() < 1e15 => write!(f, "{n:.1}"),
            Value::Number(n) => write!(f, "{n}"),
            Value::Str(s) => f.write_str(s),
            Value::List(items) => {
                let parts: Vec<String> = items.iter().map(Value::repr).collect();
                write!(f, "[{}]", parts.join(", "))
            }
            Value::Pose(p) => write!(f, "Pose({p})"),
            Value::Robot(name) => write!(f, "<robot {name}>"),
            Value::Workcell => f.write_str("<workcell>"),
            Value::Exception { message, .. } => f.write_str(message),
        }
    }
}

/// A propagating exception or return.
#[derive(Debug, Clone)]
struct Unwind {
    kind: String,
    message: String,
    /// Statement that raised it; filled in by the innermost statement.
    span: Option<Span>,
    /// Budget exhaustion cannot be caught by the script.
    fatal: bool,
}

impl Unwind {
    fn new(kind: impl Into<String>, message: impl Into<String>) -> Self {
        Self { kind: kind.into(), message: message.into(), span: None, fatal: false }
    }

    fn type_error(message: impl Into<String>) -> Self {
        Self::new("TypeError", message)
    }
}

impl From<SimError> for Unwind {
    fn from(e: SimError) -> Self {
        Unwind::new(e.kind.name(), e.message)
    }
}

enum Flow {
    Normal,
    Return(Value),
}

type Scopes = Vec<HashMap<String, Value>>;

struct Interp<'a> {
    state: &'a mut WorkcellState,
    functions: BTreeMap<&'a str, &'a Function>,
    trace: RunTrace,
    /// Exceptions currently being handled, for bare `raise`.
    handling: Vec<Unwind>,
    max_steps: u64,
}

fn lookup<'s>(scopes: &'s Scopes, name: &str) -> Option<&'s Value> {
    scopes.iter().rev().find_map(|s| s.get(name))
}

impl<'a> Interp<'a> {
    fn call_function(&mut self, f: &'a Function, args: Vec<Value>) -> Result<Value, Unwind> {
        if args.len() != f.params.len() {
            return Err(Unwind::type_error(format!(
                "{}() takes {} argument(s), got {}",
                f.name,
                f.params.len(),
                args.len()
            )));
        }
        let frame: HashMap<String, Value> = f.params.iter().map(|p| p.name.clone()).zip(args).collect();
        let mut scopes = vec![frame];
        match self.block(&f.body, &mut scopes)? {
            Flow::Return(v) => Ok(v),
            Flow::Normal => Ok(Value::None),
        }
    }

    fn block(&mut self, body: &'a [Stmt], scopes: &mut Scopes) -> Result<Flow, Unwind> {
        for stmt in body {
            let flow = self.stmt(stmt, scopes).map_err(|mut u| {
                u.span.get_or_insert(stmt.span);
                u
            })?;
            if let Flow::Return(v) = flow {
                return Ok(Flow::Return(v));
            }
        }
        Ok(Flow::Normal)
    }

    fn scoped(&mut self, body: &'a [Stmt], scopes: &mut Scopes, binding: Option<(String, Value)>) -> Result<Flow, Unwind> {
        scopes.push(binding.into_iter().collect());
        let result = self.block(body, scopes);
        scopes.pop();
        result
    }

    fn tick(&mut self) -> Result<(), Unwind> {
        self.trace.steps += 1;
        if self.trace.steps > self.max_steps {
            let mut u = Unwind::new("RuntimeError", format!("step limit of {} statements exceeded", self.max_steps));
            u.fatal = true;
            return Err(u);
        }
        Ok(())
    }

    fn stmt(&mut self, stmt: &'a Stmt, scopes: &mut Scopes) -> Result<Flow, Unwind> {
        if matches!(stmt.kind, StmtKind::Comment(_)) {
            return Ok(Flow::Normal);
        }
        self.tick()?;
        match &stmt.kind {
            StmtKind::Let { name, value } => {
                let v = self.eval(value, scopes)?;
                scopes.last_mut().expect("frame").insert(name.clone(), v);
            }
            StmtKind::Assign { name, value } => {
                let v = self.eval(value, scopes)?;
                match scopes.iter_mut().rev().find_map(|s| s.get_mut(name)) {
                    Some(slot) => *slot = v,
                    None => return Err(Unwind::new("NameError", format!("name '{name}' is not defined"))),
                }
            }
            StmtKind::Expr(e) => {
                self.eval(e, scopes)?;
            }
            StmtKind::If { branches, else_body } => {
                for (cond, body) in branches {
                    if self.eval(cond, scopes)?.truthy() {
                        return self.scoped(body, scopes, None);
                    }
                }
                if let Some(body) = else_body {
                    return self.scoped(body, scopes, None);
                }
            }
            StmtKind::For { var, range, body } => {
                let (start, stop, step) = self.range_args(range, scopes)?;
                let mut i = start;
                while (step > 0 && i < stop) || (step < 0 && i > stop) {
                    if let Flow::Return(v) = self.scoped(body, scopes, Some((var.clone(), Value::Number(i as f64))))? {
                        return Ok(Flow::Return(v));
                    }
                    i += step;
                }
            }
            StmtKind::Try { body, handlers } => match self.scoped(body, scopes, None) {
                Ok(flow) => return Ok(flow),
                Err(u) if u.fatal => return Err(u),
                Err(u) => {
                    let handler = handlers.iter().find(|h| match h.exception.as_deref() {
                        None | Some("Exception") => true,
                        Some(name) => name == u.kind,
                    });
                    let Some(h) = handler else { return Err(u) };
                    let binding = h.binding.clone().map(|b| {
                        (b, Value::Exception { kind: u.kind.clone(), message: u.message.clone() })
                    });
                    self.handling.push(u);
                    let result = self.scoped(&h.body, scopes, binding);
                    self.handling.pop();
                    return result;
                }
            },
            StmtKind::Raise(None) => {
                return Err(self
                    .handling
                    .last()
                    .cloned()
                    .unwrap_or_else(|| Unwind::new("RuntimeError", "no active exception to re-raise")));
            }
            StmtKind::Raise(Some(e)) => {
                return Err(match self.eval(e, scopes)? {
                    Value::Exception { kind, message } => Unwind::new(kind, message),
                    other => Unwind::type_error(format!(
                        "exceptions must be created with an exception type, e.g. raise Exception(\"...\"), not {}",
                        other.type_name()
                    )),
                });
            }
            StmtKind::Return(e) => {
                let v = match e {
                    Some(e) => self.eval(e, scopes)?,
                    None => Value::None,
                };
                return Ok(Flow::Return(v));
            }
            StmtKind::Print(args) => {
                let parts: Result<Vec<String>, Unwind> =
                    args.iter().map(|a| self.eval(a, scopes).map(|v| v.to_string())).collect();
                let line = parts?.join(" ");
                tracing::debug!(target: "wcs::print", "{line}");
                self.trace.printed.push(line);
            }
            StmtKind::Pass | StmtKind::Comment(_) => {}
        }
        Ok(Flow::Normal)
    }

    fn range_args(&mut self, args: &'a [Expr], scopes: &mut Scopes) -> Result<(i64, i64, i64), Unwind> {
        let mut ints = Vec::with_capacity(args.len());
        for a in args {
            match self.eval(a, scopes)? {
                Value::Number(n) if n.fract() == 0.0 && n.abs() < 9e15 => ints.push(n as i64),
                other => return Err(Unwind::type_error(format!("range() arguments must be integers, got {other}"))),
            }
        }
        let (start, stop, step) = match ints.as_slice() {
            [stop] => (0, *stop, 1),
            [start, stop] => (*start, *stop, 1),
            [start, stop, step] => (*start, *stop, *step),
            _ => return Err(Unwind::type_error("range() takes 1 to 3 arguments")),
        };
        if step == 0 {
            return Err(Unwind::new("ValueError", "range() step must not be zero"));
        }
        Ok((start, stop, step))
    }

    fn eval(&mut self, e: &'a Expr, scopes: &mut Scopes) -> Result<Value, Unwind> {
        Ok(match &e.kind {
            ExprKind::Name(n) => lookup(scopes, n)
                .cloned()
                .ok_or_else(|| Unwind::new("NameError", format!("name '{n}' is not defined")))?,
            ExprKind::Number(n) => Value::Number(*n),
            ExprKind::Str(s) => Value::Str(s.clone()),
            ExprKind::Bool(b) => Value::Bool(*b),
            ExprKind::None => Value::None,
            ExprKind::List(items) => {
                Value::List(items.iter().map(|i| self.eval(i, scopes)).collect::<Result<_, _>>()?)
            }
            ExprKind::Attr { object, name } => {
                let obj = self.eval(object, scopes)?;
                self.property(&obj, name)?
            }
            ExprKind::Call { callee, args } => {
                let mut values = Vec::with_capacity(args.len());
                for a in args {
                    values.push(self.eval(a, scopes)?);
                }
                match &callee.kind {
                    ExprKind::Name(n) => self.call_named(n, values)?,
                    ExprKind::Attr { object, name } => {
                        let receiver = self.eval(object, scopes)?;
                        self.method(&receiver, name, values)?
                    }
                    _ => return Err(Unwind::type_error("only functions and API methods can be called")),
                }
            }
            ExprKind::Index { object, index } => {
                let obj = self.eval(object, scopes)?;
                let idx = self.eval(index, scopes)?;
                index_value(&obj, &idx)?
            }
            ExprKind::Unary { op: UnOp::Neg, operand } => match self.eval(operand, scopes)? {
                Value::Number(n) => Value::Number(-n),
                other => return Err(Unwind::type_error(format!("cannot negate {}", other.type_name()))),
            },
            ExprKind::Unary { op: UnOp::Not, operand } => Value::Bool(!self.eval(operand, scopes)?.truthy()),
            ExprKind::Binary { op: BinOp::And, lhs, rhs } => {
                let l = self.eval(lhs, scopes)?;
                if !l.truthy() {
                    l
                } else {
                    self.eval(rhs, scopes)?
                }
            }
            ExprKind::Binary { op: BinOp::Or, lhs, rhs } => {
                let l = self.eval(lhs, scopes)?;
                if l.truthy() {
                    l
                } else {
                    self.eval(rhs, scopes)?
                }
            }
            ExprKind::Binary { op, lhs, rhs } => {
                let l = self.eval(lhs, scopes)?;
                let r = self.eval(rhs, scopes)?;
                binary(*op, l, r)?
            }
        })
    }

    fn call_named(&mut self, name: &str, args: Vec<Value>) -> Result<Value, Unwind> {
        if let Some(f) = self.functions.get(name).copied() {
            return self.call_function(f, args);
        }
        if builtins::is_exception(name) {
            let message = args.first().map(ToString::to_string).unwrap_or_default();
            return Ok(Value::Exception { kind: name.to_string(), message });
        }
        let numbers = |args: &[Value]| -> Result<Vec<f64>, Unwind> {
            args.iter()
                .map(|a| match a {
                    Value::Number(n) => Ok(*n),
                    other => Err(Unwind::type_error(format!("{name}() expects numbers, got {}", other.type_name()))),
                })
                .collect()
        };
        match (name, args.as_slice()) {
            ("len", [Value::List(l)]) => Ok(Value::Number(l.len() as f64)),
            ("len", [Value::Str(s)]) => Ok(Value::Number(s.chars().count() as f64)),
            ("len", [other]) => Err(Unwind::type_error(format!("len() of {}", other.type_name()))),
            ("str", [v]) => Ok(Value::Str(v.to_string())),
            ("abs", _) => Ok(Value::Number(numbers(&args)?[0].abs())),
            ("min", _) => Ok(Value::Number(numbers(&args)?.into_iter().fold(f64::INFINITY, f64::min))),
            ("max", _) => Ok(Value::Number(numbers(&args)?.into_iter().fold(f64::NEG_INFINITY, f64::max))),
            ("random_uniform", _) => {
                let n = numbers(&args)?;
                if n[0] > n[1] {
                    return Err(Unwind::new("ValueError", "random_uniform(lo, hi) requires lo <= hi"));
                }
                Ok(Value::Number(self.state.random_uniform(n[0], n[1])))
            }
            ("pose", _) => {
                let n = numbers(&args)?;
                Ok(Value::Pose(Pose::from_xyz_rpy(n[0], n[1], n[2], n[3], n[4], n[5])))
            }
            ("translation", _) => {
                let n = numbers(&args)?;
                Ok(Value::Pose(Pose::from_translation(n[0], n[1], n[2])))
            }
            _ => Err(Unwind::new("NameError", format!("name '{name}' is not defined"))),
        }
        .and_then(|v| match v {
            Value::Number(n) if !n.is_finite() => Err(Unwind::new("ValueError", "result is not a finite number")),
            Value::Pose(p) if p.validate().is_err() || !p.xyz().iter().all(|c| c.is_finite()) => {
                Err(Unwind::new("ValueError", "pose arguments must be finite numbers"))
            }
            v => Ok(v),
        })
    }

    fn property(&mut self, obj: &Value, name: &str) -> Result<Value, Unwind> {
        match (obj, name) {
            (Value::Pose(p), "x") => Ok(Value::Number(p.xyz()[0])),
            (Value::Pose(p), "y") => Ok(Value::Number(p.xyz()[1])),
            (Value::Pose(p), "z") => Ok(Value::Number(p.xyz()[2])),
            (Value::Robot(r), "tcp_pose") => Ok(Value::Pose(self.state.robot(r)?.tcp_pose)),
            (Value::Robot(r), "name") => Ok(Value::Str(r.clone())),
            (Value::Robot(r), "gripper") => {
                Ok(self.state.robot(r)?.gripper.clone().map(Value::Str).unwrap_or(Value::None))
            }
            _ => Err(Unwind::type_error(format!("{} has no attribute '{name}'", obj.type_name()))),
        }
    }

    fn method(&mut self, receiver: &Value, name: &str, args: Vec<Value>) -> Result<Value, Unwind> {
        let text = |v: &Value, what: &str| -> Result<String, Unwind> {
            match v {
                Value::Str(s) => Ok(s.clone()),
                other => Err(Unwind::type_error(format!("{name}() expects {what} as a string, got {}", other.type_name()))),
            }
        };
        let pose = |v: &Value| -> Result<Pose, Unwind> {
            match v {
                Value::Pose(p) => Ok(*p),
                other => Err(Unwind::type_error(format!("{name}() expects a Pose, got {}", other.type_name()))),
            }
        };
        let state = &mut *self.state;
        match (receiver, name, args.as_slice()) {
            (Value::Workcell, "get_robot", [n]) => {
                let n = text(n, "a robot name")?;
                state.robot(&n)?;
                Ok(Value::Robot(n))
            }
            (Value::Workcell, "detect", [p]) => {
                let p = text(p, "a part name")?;
                let found = state.detect(&p)?;
                self.trace.detected.insert(p);
                Ok(Value::Pose(found))
            }
            (Value::Workcell, "design_pose", [p]) => Ok(Value::Pose(state.design_pose(&text(p, "a part name")?)?)),
            (Value::Workcell, "anchor_pose", []) => Ok(Value::Pose(state.anchor_pose())),
            (Value::Workcell, "station_pose", [s]) => Ok(Value::Pose(state.station_pose(&text(s, "a station name")?)?)),
            (Value::Workcell, "grasp_pose", [p, g]) => {
                Ok(Value::Pose(state.grasp_pose(&text(p, "a part name")?, &text(g, "a gripper name")?)?))
            }
            (Value::Robot(r), "move_cartesian", [p]) => {
                state.move_cartesian(r, pose(p)?)?;
                self.trace.motions += 1;
                Ok(Value::None)
            }
            (Value::Robot(r), "retract", []) => {
                state.retract(r)?;
                self.trace.motions += 1;
                Ok(Value::None)
            }
            (Value::Robot(r), "attach_gripper", [g]) => {
                state.attach_gripper(r, &text(g, "a gripper name")?)?;
                Ok(Value::None)
            }
            (Value::Robot(r), "pick", [p]) => {
                state.pick(r, &text(p, "a part name")?)?;
                Ok(Value::None)
            }
            (Value::Robot(r), "place", [p, target]) => {
                state.place(r, &text(p, "a part name")?, pose(target)?)?;
                self.trace.motions += 1;
                Ok(Value::None)
            }
            (Value::Robot(r), "insert", [p, t]) => {
                state.insert(r, &text(p, "a part name")?, &text(t, "a target part name")?)?;
                self.trace.motions += 1;
                Ok(Value::None)
            }
            (Value::Pose(p), "inverse", []) => Ok(Value::Pose(p.inverse())),
            _ => Err(Unwind::type_error(format!(
                "{} has no method '{name}' taking {} argument(s)",
                receiver.type_name(),
                args.len()
            ))),
        }
    }
}

fn index_value(obj: &Value, idx: &Value) -> Result<Value, Unwind> {
    let Value::List(items) = obj else {
        return Err(Unwind::type_error(format!("{} is not indexable", obj.type_name())));
    };
    let Value::Number(n) = idx else {
        return Err(Unwind::type_error("list indices must be integers"));
    };
    if n.fract() != 0.0 {
        return Err(Unwind::type_error("list indices must be integers"));
    }
    let len = items.len() as i64;
    let i = *n as i64;
    let i = if i < 0 { i + len } else { i };
    if i < 0 || i >= len {
        return Err(Unwind::new("IndexError", format!("list index {n} out of range for length {len}")));
    }
    Ok(items[i as usize].clone())
}

fn binary(op: BinOp, l: Value, r: Value) -> Result<Value, Unwind> {
    use Value::*;
    let mismatch = |l: &Value, r: &Value| {
        Unwind::type_error(format!(
            "unsupported operand types for {}: {} and {}",
            op.symbol(),
            l.type_name(),
            r.type_name()
        ))
    };
    let v = match (op, &l, &r) {
        (BinOp::Add, Number(a), Number(b)) => Number(a + b),
        (BinOp::Sub, Number(a), Number(b)) => Number(a - b),
        (BinOp::Mul, Number(a), Number(b)) => Number(a * b),
        (BinOp::Div, Number(_), Number(b)) if *b == 0.0 => {
            return Err(Unwind::new("ZeroDivisionError", "division by zero"))
        }
        (BinOp::Div, Number(a), Number(b)) => Number(a / b),
        (BinOp::Add, Str(a), Str(b)) => Str(format!("{a}{b}")),
        (BinOp::Add, List(a), List(b)) => List(a.iter().chain(b).cloned().collect()),
        (BinOp::MatMul, Pose(a), Pose(b)) => Pose(a.compose(b)),
        (BinOp::Eq, _, _) => Bool(l == r),
        (BinOp::Ne, _, _) => Bool(l != r),
        (BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge, Number(a), Number(b)) => Bool(compare(op, a, b)),
        (BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge, Str(a), Str(b)) => Bool(compare(op, a, b)),
        _ => return Err(mismatch(&l, &r)),
    };
    match v {
        Number(n) if !n.is_finite() => Err(Unwind::new("ValueError", "arithmetic produced a non-finite number")),
        v => Ok(v),
    }
}

fn compare<T: PartialOrd + ?Sized>(op: BinOp, a: &T, b: &T) -> bool {
    match op {
        BinOp::Lt => a < b,
        BinOp::Le => a <= b,
        BinOp::Gt => a > b,
        _ => a >= b,
    }
}
