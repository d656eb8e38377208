//! Canonical pretty-printer: four-space indentation, minimal parentheses.

use std::fmt::Write;

use super::ast::*;

const INDENT: &str = "    ";

pub fn format(script: &WcsScript) -> String {
    let mut out = String::new();
    let mut prev_function = false;
    for (i, item) in script.items.iter().enumerate() {
        let is_function = matches!(item, Item::Function(_));
        if i > 0 && (is_function || prev_function) {
            out.push('\n');
        }
        match item {
            Item::Import { text, .. } => writeln!(out, "{text}").unwrap(),
            Item::Comment { text, .. } => writeln!(out, "{}", comment(text)).unwrap(),
            Item::Function(f) => function(&mut out, f),
        }
        prev_function = is_function;
    }
    out
}

fn comment(text: &str) -> String {
    if text.is_empty() {
        "#".into()
    } else {
        format!("# {text}")
    }
}

fn function(out: &mut String, f: &Function) {
    let params: Vec<&str> = f.params.iter().map(|p| p.name.as_str()).collect();
    writeln!(out, "def {}({}):", f.name, params.join(", ")).unwrap();
    if let Some(doc) = &f.doc {
        writeln!(out, "{INDENT}{}", docstring(doc)).unwrap();
    }
    if f.body.is_empty() && f.doc.is_none() {
        writeln!(out, "{INDENT}pass").unwrap();
    }
    for stmt in &f.body {
        statement(out, stmt, 1);
    }
}

fn docstring(doc: &str) -> String {
    if doc.contains("\"\"\"") || doc.ends_with('"') {
        string_literal(doc)
    } else {
        format!("\"\"\"{doc}\"\"\"")
    }
}

fn string_literal(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            '\0' => out.push_str("\\0"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn number(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:?}")
    }
}

fn block(out: &mut String, body: &[Stmt], level: usize) {
    if body.iter().all(|s| matches!(s.kind, StmtKind::Comment(_))) {
        body.iter().for_each(|s| statement(out, s, level));
        writeln!(out, "{}pass", INDENT.repeat(level)).unwrap();
        return;
    }
    body.iter().for_each(|s| statement(out, s, level));
}

fn statement(out: &mut String, stmt: &Stmt, level: usize) {
    let pad = INDENT.repeat(level);
    let line = match &stmt.kind {
        StmtKind::Let { name, value } => format!("let {name} = {}", expr(value)),
        StmtKind::Assign { name, value } => format!("{name} = {}", expr(value)),
        StmtKind::Expr(e) => expr(e),
        StmtKind::Raise(None) => "raise".into(),
        StmtKind::Raise(Some(e)) => format!("raise {}", expr(e)),
        StmtKind::Return(None) => "return".into(),
        StmtKind::Return(Some(e)) => format!("return {}", expr(e)),
        StmtKind::Print(args) => format!("print({})", list(args)),
        StmtKind::Pass => "pass".into(),
        StmtKind::Comment(text) => comment(text),
        StmtKind::If { branches, else_body } => {
            for (i, (cond, body)) in branches.iter().enumerate() {
                let kw = if i == 0 { "if" } else { "elif" };
                writeln!(out, "{pad}{kw} {}:", expr(cond)).unwrap();
                block(out, body, level + 1);
            }
            if let Some(body) = else_body {
                writeln!(out, "{pad}else:").unwrap();
                block(out, body, level + 1);
            }
            return;
        }
        StmtKind::For { var, range, body } => {
            writeln!(out, "{pad}for {var} in range({}):", list(range)).unwrap();
            block(out, body, level + 1);
            return;
        }
        StmtKind::Try { body, handlers } => {
            writeln!(out, "{pad}try:").unwrap();
            block(out, body, level + 1);
            for h in handlers {
                let mut header = String::from("except");
                if let Some(name) = &h.exception {
                    header.push(' ');
                    header.push_str(name);
                }
                if let Some(b) = &h.binding {
                    header.push_str(" as ");
                    header.push_str(b);
                }
                writeln!(out, "{pad}{header}:").unwrap();
                block(out, &h.body, level + 1);
            }
            return;
        }
    };
    match &stmt.trailing {
        Some(t) => writeln!(out, "{pad}{line}  {}", comment(t)).unwrap(),
        None => writeln!(out, "{pad}{line}").unwrap(),
    }
}

fn list(items: &[Expr]) -> String {
    items.iter().map(expr).collect::<Vec<_>>().join(", ")
}

pub fn expr(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Name(n) => n.clone(),
        ExprKind::Number(v) => number(*v),
        ExprKind::Str(s) => string_literal(s),
        ExprKind::Bool(true) => "True".into(),
        ExprKind::Bool(false) => "False".into(),
        ExprKind::None => "None".into(),
        ExprKind::List(items) => format!("[{}]", list(items)),
        ExprKind::Attr { object, name } => {
            let obj = if matches!(object.kind, ExprKind::Number(_)) {
                format!("({})", expr(object))
            } else {
                wrap(object, 8)
            };
            format!("{obj}.{name}")
        }
        ExprKind::Call { callee, args } => format!("{}({})", wrap(callee, 8), list(args)),
        ExprKind::Index { object, index } => format!("{}[{}]", wrap(object, 8), expr(index)),
        ExprKind::Unary { op: UnOp::Neg, operand } => format!("-{}", wrap(operand, 7)),
        ExprKind::Unary { op: UnOp::Not, operand } => format!("not {}", wrap(operand, 3)),
        ExprKind::Binary { op, lhs, rhs } => {
            let p = op.precedence();
            let left_min = if op.is_comparison() { p + 1 } else { p };
            format!("{} {} {}", wrap(lhs, left_min), op.symbol(), wrap(rhs, p + 1))
        }
    }
}

fn wrap(e: &Expr, min_precedence: u8) -> String {
    if e.precedence() < min_precedence {
        format!("({})", expr(e))
    } else {
        expr(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wcs::parse;

    fn roundtrip(src: &str) -> String {
        let a = parse(src).unwrap();
        let text = format(&a);
        let b = parse(&text).unwrap_or_else(|e| panic!("{e}\n---\n{text}"));
        assert_eq!(a.without_spans(), b.without_spans(), "\n{text}");
        assert_eq!(format(&b), text);
        text
    }

    #[test]
    fn normalizes_indentation_and_keeps_comments() {
        let src = "# header\nimport math\ndef main(workcell):\n\t# first\n\tif True:  # why\n\t  pass  # tail\n\telse:\n\t  return\n";
        let out = roundtrip(src);
        assert_eq!(
            out,
            "# header\nimport math\n\ndef main(workcell):\n    # first\n    if True:\n        # why\n        pass  # tail\n    else:\n        return\n"
        );
    }

    #[test]
    fn minimal_parentheses() {
        let out = roundtrip("def main(workcell):\n    let a = (1 + 2) * -(3 - 4) - (5 - 6)\n    let b = not (a and b) or c\n    let c = (1).x\n");
        assert!(out.contains("let a = (1 + 2) * -(3 - 4) - (5 - 6)"));
        assert!(out.contains("let b = not (a and b) or c"));
        assert!(out.contains("let c = (1).x"));
    }

    #[test]
    fn strings_and_docs() {
        let out = roundtrip("def main(workcell):\n    \"\"\"Say \"hi\\\"\"\"\n    print(\"a\\n\\\"b\\\"\", 1e-7, 0.25, 1e20)\n");
        assert!(out.contains("print(\"a\\n\\\"b\\\"\", 1e-7, 0.25, 1e20)"));
    }
}
