//! Static checks run before a script is executed.

use std::collections::{BTreeMap, BTreeSet};

use super::ast::*;
use super::builtins::{builtin_arity, is_exception};
use super::catalog::ApiCatalog;
use super::error::{ScriptError, ScriptErrorKind, Span};

/// Returns every static problem found; an empty list means the script may run.
pub fn check(script: &WcsScript, api: &ApiCatalog, source: &str) -> Vec<ScriptError> {
    let mut cx = Checker { api, source, errors: Vec::new(), defined: BTreeMap::new(), scopes: Vec::new() };
    cx.script(script);
    cx.errors.sort_by_key(|e| e.span);
    cx.errors
}

fn arity_text(lo: usize, hi: Option<usize>) -> String {
    match hi {
        Some(hi) if hi == lo => format!("{lo}"),
        Some(hi) => format!("{lo} to {hi}"),
        None => format!("at least {lo}"),
    }
}

struct Checker<'a> {
    api: &'a ApiCatalog,
    source: &'a str,
    errors: Vec<ScriptError>,
    /// User functions defined so far, with their parameter counts.
    defined: BTreeMap<String, usize>,
    scopes: Vec<BTreeSet<String>>,
}

impl Checker<'_> {
    fn error(&mut self, message: impl Into<String>, span: Span) {
        self.errors.push(ScriptError::new(ScriptErrorKind::Check, message, span, self.source));
    }

    fn script(&mut self, script: &WcsScript) {
        let mains: Vec<&Function> = script.functions().filter(|f| f.name == "main").collect();
        match mains.as_slice() {
            [] => self.error("script must define main(workcell)", Span::new(1, 1)),
            [main] => {
                if main.params.len() != 1 || main.params[0].name != "workcell" {
                    self.error("main must take exactly one parameter named workcell", main.span);
                }
            }
            [_, extra, ..] => self.error("main is defined more than once", extra.span),
        }
        let mut names = BTreeSet::new();
        for f in script.functions() {
            if !names.insert(f.name.as_str()) && f.name != "main" {
                self.error(format!("function '{}' is defined more than once", f.name), f.span);
            }
            if builtin_arity(&f.name).is_some() || f.name == "range" || f.name == "print" {
                self.error(format!("function name '{}' shadows a builtin", f.name), f.span);
            }
            self.function(f);
            self.defined.entry(f.name.clone()).or_insert(f.params.len());
        }
    }

    fn function(&mut self, f: &Function) {
        let mut params = BTreeSet::new();
        for p in &f.params {
            if !params.insert(p.name.clone()) {
                self.error(format!("duplicate parameter '{}'", p.name), p.span);
            }
        }
        self.scopes.push(params);
        self.block(&f.body, false);
        self.scopes.pop();
    }

    fn declare(&mut self, name: &str) {
        self.scopes.last_mut().expect("inside a function").insert(name.to_string());
    }

    fn is_bound(&self, name: &str) -> bool {
        self.scopes.iter().any(|s| s.contains(name))
    }

    fn block(&mut self, body: &[Stmt], in_except: bool) {
        let mut returned = false;
        for stmt in body {
            if matches!(stmt.kind, StmtKind::Comment(_)) {
                continue;
            }
            if returned {
                self.error("unreachable statement after return", stmt.span);
                returned = false;
            }
            self.stmt(stmt, in_except);
            if matches!(stmt.kind, StmtKind::Return(_)) {
                returned = true;
            }
        }
    }

    fn scoped_block(&mut self, body: &[Stmt], in_except: bool, bound: Option<&str>) {
        let mut scope = BTreeSet::new();
        if let Some(name) = bound {
            scope.insert(name.to_string());
        }
        self.scopes.push(scope);
        self.block(body, in_except);
        self.scopes.pop();
    }

    fn stmt(&mut self, stmt: &Stmt, in_except: bool) {
        match &stmt.kind {
            StmtKind::Let { name, value } => {
                self.expr(value);
                self.declare(name);
            }
            StmtKind::Assign { name, value } => {
                self.expr(value);
                if !self.is_bound(name) {
                    self.error(format!("assignment to undeclared name '{name}'; declare it with let"), stmt.span);
                }
            }
            StmtKind::Expr(e) => self.expr(e),
            StmtKind::If { branches, else_body } => {
                for (cond, body) in branches {
                    self.expr(cond);
                    self.scoped_block(body, in_except, None);
                }
                if let Some(body) = else_body {
                    self.scoped_block(body, in_except, None);
                }
            }
            StmtKind::For { var, range, body } => {
                range.iter().for_each(|e| self.expr(e));
                self.scoped_block(body, in_except, Some(var));
            }
            StmtKind::Try { body, handlers } => {
                self.scoped_block(body, in_except, None);
                for h in handlers {
                    if let Some(name) = &h.exception {
                        if !is_exception(name) {
                            self.error(format!("unknown exception type '{name}'"), h.span);
                        }
                    }
                    self.scoped_block(&h.body, true, h.binding.as_deref());
                }
            }
            StmtKind::Raise(None) if !in_except => self.error("bare raise outside an except block", stmt.span),
            StmtKind::Raise(e) | StmtKind::Return(e) => {
                if let Some(e) = e {
                    self.expr(e);
                }
            }
            StmtKind::Print(args) => args.iter().for_each(|e| self.expr(e)),
            StmtKind::Pass | StmtKind::Comment(_) => {}
        }
    }

    fn expr(&mut self, e: &Expr) {
        match &e.kind {
            ExprKind::Name(n) => {
                if !self.is_bound(n) {
                    if n == "range" {
                        self.error("range() is only allowed in a for loop header", e.span);
                    } else if builtin_arity(n).is_some() || self.defined.contains_key(n) {
                        self.error(format!("'{n}' must be called"), e.span);
                    } else {
                        self.error(format!("undefined name '{n}'"), e.span);
                    }
                }
            }
            ExprKind::Number(_) | ExprKind::Str(_) | ExprKind::Bool(_) | ExprKind::None => {}
            ExprKind::List(items) => items.iter().for_each(|i| self.expr(i)),
            ExprKind::Attr { object, name } => {
                self.expr(object);
                if self.api.property(name).is_none() {
                    if self.api.method(name).is_some() {
                        self.error(format!("API method '{name}' must be called"), e.span);
                    } else {
                        self.error(format!("unknown API attribute '{name}'"), e.span);
                    }
                }
            }
            ExprKind::Call { callee, args } => {
                args.iter().for_each(|a| self.expr(a));
                self.call(callee, args.len());
            }
            ExprKind::Index { object, index } => {
                self.expr(object);
                self.expr(index);
            }
            ExprKind::Unary { operand, .. } => self.expr(operand),
            ExprKind::Binary { lhs, rhs, .. } => {
                self.expr(lhs);
                self.expr(rhs);
            }
        }
    }

    fn call(&mut self, callee: &Expr, argc: usize) {
        match &callee.kind {
            ExprKind::Name(n) if self.is_bound(n) => {
                self.error(format!("'{n}' is a variable, not a function"), callee.span)
            }
            ExprKind::Name(n) => {
                let (lo, hi) = if let Some(&count) = self.defined.get(n) {
                    (count, Some(count))
                } else if let Some(arity) = builtin_arity(n) {
                    arity
                } else if n == "range" {
                    self.error("range() is only allowed in a for loop header", callee.span);
                    return;
                } else {
                    self.error(format!("undefined function '{n}' (functions must be defined before use)"), callee.span);
                    return;
                };
                if argc < lo || hi.is_some_and(|hi| argc > hi) {
                    self.error(
                        format!("{n}() expects {} argument(s), got {argc}", arity_text(lo, hi)),
                        callee.span,
                    );
                }
            }
            ExprKind::Attr { object, name } => {
                self.expr(object);
                match self.api.method(name) {
                    Some(entry) => {
                        let expected = entry.params.len();
                        if expected != argc {
                            self.error(
                                format!("API function '{name}' expects {expected} argument(s), got {argc}"),
                                callee.span,
                            );
                        }
                    }
                    None if self.api.property(name).is_some() => {
                        self.error(format!("'{name}' is a property, not a function"), callee.span)
                    }
                    None => self.error(format!("unknown API function '{name}'"), callee.span),
                }
            }
            _ => {
                self.expr(callee);
                self.error("only functions and API methods can be called", callee.span);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wcs::parse;

    fn errors(src: &str) -> Vec<String> {
        let script = parse(src).unwrap();
        check(&script, &ApiCatalog::builtin(), src).into_iter().map(|e| e.message).collect()
    }

    #[test]
    fn valid_pick_script() {
        let src = r#"
def main(workcell):
    """Pick the Axle."""
    let robot = workcell.get_robot("robot_left")
    robot.attach_gripper("All-Purpose Gripper")
    let target = workcell.grasp_pose("Axle", "All-Purpose Gripper")
    robot.move_cartesian(translation(0, 0, 0.1) @ target)
    robot.move_cartesian(target)
    robot.pick("Axle")
    robot.retract()
"#;
        assert_eq!(errors(src), Vec::<String>::new());
    }

    #[test]
    fn unknown_api_function_has_span() {
        let src = "def main(workcell):\n    workcell.grab_part(\"Axle\")\n";
        let script = parse(src).unwrap();
        let errs = check(&script, &ApiCatalog::builtin(), src);
        assert_eq!(errs.len(), 1);
        assert!(errs[0].message.contains("unknown API function"));
        assert_eq!(errs[0].span, Span::new(2, 14));
        assert_eq!(errs[0].excerpt, "    workcell.grab_part(\"Axle\")");
    }

    #[test]
    fn arity_names_expected_and_actual() {
        let e = errors("def main(workcell):\n    let r = workcell.get_robot(\"robot_left\")\n    r.move_cartesian()\n");
        assert_eq!(e, vec!["API function 'move_cartesian' expects 1 argument(s), got 0"]);
    }

    #[test]
    fn names_must_resolve() {
        let e = errors("def main(workcell):\n    print(x)\n    y = 2\n");
        assert_eq!(e.len(), 2);
        assert!(e[0].contains("undefined name 'x'"));
        assert!(e[1].contains("undeclared name 'y'"));
        // scope ends with the block
        let e = errors("def main(workcell):\n    if True:\n        let a = 1\n    print(a)\n");
        assert_eq!(e, vec!["undefined name 'a'"]);
    }

    #[test]
    fn main_shape() {
        assert_eq!(errors("def helper():\n    pass\n"), vec!["script must define main(workcell)"]);
        assert_eq!(errors("def main(cell):\n    pass\n"), vec!["main must take exactly one parameter named workcell"]);
    }

    #[test]
    fn statement_after_return() {
        let e = errors("def main(workcell):\n    return\n    # fine\n    pass\n");
        assert_eq!(e, vec!["unreachable statement after return"]);
    }

    #[test]
    fn functions_defined_before_use_no_recursion() {
        assert!(errors("def f(a):\n    return a\ndef main(workcell):\n    f(1)\n").is_empty());
        assert_eq!(errors("def main(workcell):\n    f(1)\ndef f(a):\n    return a\n").len(), 1);
        assert_eq!(errors("def f(a):\n    f(a)\ndef main(workcell):\n    f(1)\n").len(), 1);
        assert_eq!(errors("def f(a):\n    return a\ndef main(workcell):\n    f()\n").len(), 1);
    }

    #[test]
    fn exceptions_and_raise() {
        let ok = "def main(workcell):\n    try:\n        raise MotionException(\"x\")\n    except MotionException as e:\n        print(e)\n        raise\n";
        assert!(errors(ok).is_empty());
        assert_eq!(errors("def main(workcell):\n    raise\n"), vec!["bare raise outside an except block"]);
        let bad = "def main(workcell):\n    try:\n        pass\n    except Oops:\n        pass\n";
        assert_eq!(errors(bad), vec!["unknown exception type 'Oops'"]);
    }

    #[test]
    fn range_only_in_for() {
        assert!(errors("def main(workcell):\n    for i in range(3):\n        print(i)\n").is_empty());
        assert_eq!(errors("def main(workcell):\n    let r = range(3)\n").len(), 1);
    }
}
