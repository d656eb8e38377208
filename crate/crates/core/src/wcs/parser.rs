//! Recursive-descent parser producing a spanned [`WcsScript`].

use super::ast::*;
use super::error::{ScriptError, ScriptErrorKind, Span};
use super::lexer::{tokenize, Kw, Op, Tok, Token};

const MAX_EXPR_DEPTH: usize = 100;

pub fn parse(source: &str) -> Result<WcsScript, ScriptError> {
    let tokens = tokenize(source)?;
    let mut p = Parser { src: source, tokens, pos: 0, depth: 0 };
    p.script()
}

struct Parser<'a> {
    src: &'a str,
    tokens: Vec<Token>,
    pos: usize,
    depth: usize,
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Name(n) => format!("name '{n}'"),
        Tok::Number(n) => format!("number {n}"),
        Tok::Str(_) => "string literal".into(),
        Tok::Comment { .. } => "comment".into(),
        Tok::Kw(k) => format!("keyword '{}'", format!("{k:?}").to_lowercase()),
        Tok::Op(op) => format!("'{}'", op_text(*op)),
        Tok::Newline => "end of line".into(),
        Tok::Indent => "indent".into(),
        Tok::Dedent => "dedent".into(),
        Tok::Eof => "end of input".into(),
    }
}

fn op_text(op: Op) -> &'static str {
    match op {
        Op::LParen => "(",
        Op::RParen => ")",
        Op::LBracket => "[",
        Op::RBracket => "]",
        Op::Comma => ",",
        Op::Colon => ":",
        Op::Dot => ".",
        Op::Assign => "=",
        Op::Eq => "==",
        Op::Ne => "!=",
        Op::Lt => "<",
        Op::Le => "<=",
        Op::Gt => ">",
        Op::Ge => ">=",
        Op::Plus => "+",
        Op::Minus => "-",
        Op::Star => "*",
        Op::Slash => "/",
        Op::At => "@",
    }
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn span(&self) -> Span {
        self.tokens[self.pos].span
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn err(&self, message: impl Into<String>, span: Span) -> ScriptError {
        ScriptError::new(ScriptErrorKind::Parse, message, span, self.src)
    }

    fn unexpected(&self, wanted: &str) -> ScriptError {
        self.err(format!("expected {wanted}, found {}", describe(self.peek())), self.span())
    }

    fn eat_op(&mut self, op: Op) -> bool {
        if *self.peek() == Tok::Op(op) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_op(&mut self, op: Op) -> Result<Span, ScriptError> {
        let span = self.span();
        if self.eat_op(op) {
            Ok(span)
        } else {
            Err(self.unexpected(&format!("'{}'", op_text(op))))
        }
    }

    fn eat_kw(&mut self, kw: Kw) -> bool {
        if *self.peek() == Tok::Kw(kw) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn name(&mut self, what: &str) -> Result<(String, Span), ScriptError> {
        match self.peek().clone() {
            Tok::Name(n) => {
                let span = self.span();
                self.advance();
                Ok((n, span))
            }
            _ => Err(self.unexpected(what)),
        }
    }

    /// Optional trailing comment then end of line.
    fn end_of_line(&mut self) -> Result<Option<String>, ScriptError> {
        let trailing = match self.peek().clone() {
            Tok::Comment { text, .. } => {
                self.advance();
                Some(text)
            }
            _ => None,
        };
        match self.peek() {
            Tok::Newline => {
                self.advance();
                Ok(trailing)
            }
            Tok::Eof | Tok::Dedent => Ok(trailing),
            _ => Err(self.unexpected("end of line")),
        }
    }

    fn script(&mut self) -> Result<WcsScript, ScriptError> {
        let mut items = Vec::new();
        loop {
            let span = self.span();
            match self.peek().clone() {
                Tok::Eof => break,
                Tok::Newline => {
                    self.advance();
                }
                Tok::Comment { text, .. } => {
                    self.advance();
                    items.push(Item::Comment { text, span });
                }
                Tok::Kw(Kw::Import) | Tok::Kw(Kw::From) => {
                    let text = self.import()?;
                    items.push(Item::Import { text, span });
                }
                Tok::Kw(Kw::Def) => items.push(Item::Function(self.function()?)),
                Tok::Indent => return Err(self.err("unexpected indent", span)),
                _ => {
                    return Err(self.err(
                        "only function definitions, imports and comments are allowed at the top level",
                        span,
                    ))
                }
            }
        }
        Ok(WcsScript { items })
    }

    fn dotted(&mut self) -> Result<String, ScriptError> {
        let (mut name, _) = self.name("module name")?;
        while self.eat_op(Op::Dot) {
            name.push('.');
            name.push_str(&self.name("module name")?.0);
        }
        Ok(name)
    }

    fn import(&mut self) -> Result<String, ScriptError> {
        let text = if self.eat_kw(Kw::Import) {
            let mut names = vec![self.dotted()?];
            while self.eat_op(Op::Comma) {
                names.push(self.dotted()?);
            }
            format!("import {}", names.join(", "))
        } else {
            self.advance(); // from
            let module = self.dotted()?;
            if !self.eat_kw(Kw::Import) {
                return Err(self.unexpected("'import'"));
            }
            let what = if self.eat_op(Op::Star) {
                "*".to_string()
            } else {
                let mut names = vec![self.name("imported name")?.0];
                while self.eat_op(Op::Comma) {
                    names.push(self.name("imported name")?.0);
                }
                names.join(", ")
            };
            format!("from {module} import {what}")
        };
        self.end_of_line()?;
        Ok(text)
    }

    fn function(&mut self) -> Result<Function, ScriptError> {
        let span = self.span();
        self.advance(); // def
        let (name, _) = self.name("function name")?;
        self.expect_op(Op::LParen)?;
        let mut params = Vec::new();
        if !self.eat_op(Op::RParen) {
            loop {
                let (p, pspan) = self.name("parameter name")?;
                params.push(Param { name: p, span: pspan });
                if self.eat_op(Op::RParen) {
                    break;
                }
                self.expect_op(Op::Comma)?;
                if self.eat_op(Op::RParen) {
                    break;
                }
            }
        }
        self.expect_op(Op::Colon)?;
        let mut body = self.block()?;
        let mut doc = None;
        if let Some(Stmt { kind: StmtKind::Expr(Expr { kind: ExprKind::Str(s), .. }), .. }) = body.first() {
            doc = Some(s.clone());
            body.remove(0);
        }
        if let Some(bad) = body.iter().find_map(stray_string) {
            return Err(self.err("string literal statement has no effect", bad));
        }
        Ok(Function { name, params, doc, body, span })
    }

    /// Parses `[# comment] NEWLINE INDENT stmt+ DEDENT` after a header colon.
    fn block(&mut self) -> Result<Vec<Stmt>, ScriptError> {
        let mut stmts = Vec::new();
        if let Tok::Comment { text, .. } = self.peek().clone() {
            let span = self.span();
            self.advance();
            stmts.push(Stmt { kind: StmtKind::Comment(text), span, trailing: None });
        }
        if *self.peek() != Tok::Newline {
            return Err(self.unexpected("end of line after ':'"));
        }
        self.advance();
        while let Tok::Comment { text, .. } = self.peek().clone() {
            let span = self.span();
            self.advance();
            stmts.push(Stmt { kind: StmtKind::Comment(text), span, trailing: None });
            if *self.peek() == Tok::Newline {
                self.advance();
            }
        }
        if *self.peek() != Tok::Indent {
            return Err(self.unexpected("an indented block"));
        }
        self.advance();
        let mut has_code = false;
        loop {
            match self.peek() {
                Tok::Dedent => {
                    self.advance();
                    break;
                }
                Tok::Eof => break,
                Tok::Newline => {
                    self.advance();
                }
                _ => {
                    let stmt = self.statement()?;
                    has_code |= !matches!(stmt.kind, StmtKind::Comment(_));
                    stmts.push(stmt);
                }
            }
        }
        if !has_code {
            return Err(self.unexpected("a statement"));
        }
        Ok(stmts)
    }

    fn statement(&mut self) -> Result<Stmt, ScriptError> {
        let span = self.span();
        let kind = match self.peek().clone() {
            Tok::Comment { text, .. } => {
                self.advance();
                if *self.peek() == Tok::Newline {
                    self.advance();
                }
                return Ok(Stmt { kind: StmtKind::Comment(text), span, trailing: None });
            }
            Tok::Kw(Kw::If) => return self.if_stmt(),
            Tok::Kw(Kw::For) => return self.for_stmt(),
            Tok::Kw(Kw::Try) => return self.try_stmt(),
            Tok::Kw(Kw::Def) => return Err(self.err("nested function definitions are not supported", span)),
            Tok::Kw(Kw::Let) => {
                self.advance();
                let (name, _) = self.name("variable name after 'let'")?;
                self.expect_op(Op::Assign)?;
                StmtKind::Let { name, value: self.expr()? }
            }
            Tok::Kw(Kw::Raise) => {
                self.advance();
                StmtKind::Raise(self.optional_expr()?)
            }
            Tok::Kw(Kw::Return) => {
                self.advance();
                StmtKind::Return(self.optional_expr()?)
            }
            Tok::Kw(Kw::Pass) => {
                self.advance();
                StmtKind::Pass
            }
            Tok::Name(n) if n == "print" && *self.peek_at(1) == Tok::Op(Op::LParen) => {
                self.advance();
                self.advance();
                StmtKind::Print(self.call_args()?)
            }
            Tok::Indent => return Err(self.err("unexpected indent", span)),
            _ => {
                let target = self.expr()?;
                if *self.peek() == Tok::Op(Op::Assign) {
                    let ExprKind::Name(name) = target.kind else {
                        return Err(self.err("can only assign to a plain name", self.span()));
                    };
                    self.advance();
                    StmtKind::Assign { name, value: self.expr()? }
                } else {
                    match target.kind {
                        ExprKind::Call { .. } | ExprKind::Str(_) => StmtKind::Expr(target),
                        _ => return Err(self.err("expression statement must be a call", span)),
                    }
                }
            }
        };
        let trailing = self.end_of_line()?;
        Ok(Stmt { kind, span, trailing })
    }

    fn optional_expr(&mut self) -> Result<Option<Expr>, ScriptError> {
        match self.peek() {
            Tok::Newline | Tok::Comment { .. } | Tok::Eof | Tok::Dedent => Ok(None),
            _ => Ok(Some(self.expr()?)),
        }
    }

    fn if_stmt(&mut self) -> Result<Stmt, ScriptError> {
        let span = self.span();
        self.advance();
        let mut branches = Vec::new();
        let cond = self.expr()?;
        self.expect_op(Op::Colon)?;
        branches.push((cond, self.block()?));
        let mut else_body = None;
        loop {
            if self.eat_kw(Kw::Elif) {
                let cond = self.expr()?;
                self.expect_op(Op::Colon)?;
                branches.push((cond, self.block()?));
            } else if self.eat_kw(Kw::Else) {
                self.expect_op(Op::Colon)?;
                else_body = Some(self.block()?);
                break;
            } else {
                break;
            }
        }
        Ok(Stmt { kind: StmtKind::If { branches, else_body }, span, trailing: None })
    }

    fn for_stmt(&mut self) -> Result<Stmt, ScriptError> {
        let span = self.span();
        self.advance();
        let (var, _) = self.name("loop variable")?;
        if !self.eat_kw(Kw::In) {
            return Err(self.unexpected("'in'"));
        }
        match self.peek() {
            Tok::Name(n) if n == "range" => {
                self.advance();
            }
            _ => return Err(self.unexpected("'range(...)' (only range loops are supported)")),
        }
        let open = self.expect_op(Op::LParen)?;
        let range = self.call_args()?;
        if range.is_empty() || range.len() > 3 {
            return Err(self.err(format!("range() takes 1 to 3 arguments, got {}", range.len()), open));
        }
        self.expect_op(Op::Colon)?;
        let body = self.block()?;
        Ok(Stmt { kind: StmtKind::For { var, range, body }, span, trailing: None })
    }

    fn try_stmt(&mut self) -> Result<Stmt, ScriptError> {
        let span = self.span();
        self.advance();
        self.expect_op(Op::Colon)?;
        let body = self.block()?;
        let mut handlers = Vec::new();
        while *self.peek() == Tok::Kw(Kw::Except) {
            let hspan = self.span();
            self.advance();
            let exception = match self.peek() {
                Tok::Name(_) => Some(self.name("exception name")?.0),
                _ => None,
            };
            let binding = if self.eat_kw(Kw::As) {
                if exception.is_none() {
                    return Err(self.err("'as' requires an exception name", self.span()));
                }
                Some(self.name("name after 'as'")?.0)
            } else {
                None
            };
            self.expect_op(Op::Colon)?;
            let hbody = self.block()?;
            handlers.push(Handler { exception, binding, body: hbody, span: hspan });
        }
        if handlers.is_empty() {
            return Err(self.unexpected("'except'"));
        }
        Ok(Stmt { kind: StmtKind::Try { body, handlers }, span, trailing: None })
    }

    /// Arguments after an already-consumed '('.
    fn call_args(&mut self) -> Result<Vec<Expr>, ScriptError> {
        let mut args = Vec::new();
        if self.eat_op(Op::RParen) {
            return Ok(args);
        }
        loop {
            args.push(self.expr()?);
            if self.eat_op(Op::RParen) {
                return Ok(args);
            }
            self.expect_op(Op::Comma)?;
            if self.eat_op(Op::RParen) {
                return Ok(args);
            }
        }
    }

    fn enter(&mut self) -> Result<(), ScriptError> {
        self.depth += 1;
        if self.depth > MAX_EXPR_DEPTH {
            return Err(self.err("expression nested too deeply", self.span()));
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<Expr, ScriptError> {
        self.enter()?;
        let e = self.or_expr();
        self.depth -= 1;
        e
    }

    fn binary(op: BinOp, lhs: Expr, rhs: Expr, span: Span) -> Expr {
        Expr { kind: ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }, span }
    }

    fn or_expr(&mut self) -> Result<Expr, ScriptError> {
        let mut lhs = self.and_expr()?;
        while *self.peek() == Tok::Kw(Kw::Or) {
            let span = self.advance().span;
            let rhs = self.and_expr()?;
            lhs = Self::binary(BinOp::Or, lhs, rhs, span);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Expr, ScriptError> {
        let mut lhs = self.not_expr()?;
        while *self.peek() == Tok::Kw(Kw::And) {
            let span = self.advance().span;
            let rhs = self.not_expr()?;
            lhs = Self::binary(BinOp::And, lhs, rhs, span);
        }
        Ok(lhs)
    }

    fn not_expr(&mut self) -> Result<Expr, ScriptError> {
        if *self.peek() == Tok::Kw(Kw::Not) {
            let span = self.advance().span;
            self.enter()?;
            let operand = self.not_expr();
            self.depth -= 1;
            return Ok(Expr { kind: ExprKind::Unary { op: UnOp::Not, operand: Box::new(operand?) }, span });
        }
        self.comparison()
    }

    fn comparison_op(&self) -> Option<BinOp> {
        match self.peek() {
            Tok::Op(Op::Eq) => Some(BinOp::Eq),
            Tok::Op(Op::Ne) => Some(BinOp::Ne),
            Tok::Op(Op::Lt) => Some(BinOp::Lt),
            Tok::Op(Op::Le) => Some(BinOp::Le),
            Tok::Op(Op::Gt) => Some(BinOp::Gt),
            Tok::Op(Op::Ge) => Some(BinOp::Ge),
            _ => None,
        }
    }

    fn comparison(&mut self) -> Result<Expr, ScriptError> {
        let lhs = self.additive()?;
        let Some(op) = self.comparison_op() else { return Ok(lhs) };
        let span = self.advance().span;
        let rhs = self.additive()?;
        if self.comparison_op().is_some() {
            return Err(self.err("chained comparisons are not supported", self.span()));
        }
        Ok(Self::binary(op, lhs, rhs, span))
    }

    fn additive(&mut self) -> Result<Expr, ScriptError> {
        let mut lhs = self.multiplicative()?;
        loop {
            let op = match self.peek() {
                Tok::Op(Op::Plus) => BinOp::Add,
                Tok::Op(Op::Minus) => BinOp::Sub,
                _ => return Ok(lhs),
            };
            let span = self.advance().span;
            let rhs = self.multiplicative()?;
            lhs = Self::binary(op, lhs, rhs, span);
        }
    }

    fn multiplicative(&mut self) -> Result<Expr, ScriptError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Op(Op::Star) => BinOp::Mul,
                Tok::Op(Op::Slash) => BinOp::Div,
                Tok::Op(Op::At) => BinOp::MatMul,
                _ => return Ok(lhs),
            };
            let span = self.advance().span;
            let rhs = self.unary()?;
            lhs = Self::binary(op, lhs, rhs, span);
        }
    }

    fn unary(&mut self) -> Result<Expr, ScriptError> {
        if *self.peek() == Tok::Op(Op::Minus) {
            let span = self.advance().span;
            self.enter()?;
            let operand = self.unary();
            self.depth -= 1;
            return Ok(Expr { kind: ExprKind::Unary { op: UnOp::Neg, operand: Box::new(operand?) }, span });
        }
        self.postfix()
    }

    fn postfix(&mut self) -> Result<Expr, ScriptError> {
        let mut e = self.primary()?;
        loop {
            match self.peek() {
                Tok::Op(Op::Dot) => {
                    self.advance();
                    let (name, span) = self.name("attribute name")?;
                    e = Expr { kind: ExprKind::Attr { object: Box::new(e), name }, span };
                }
                Tok::Op(Op::LParen) => {
                    self.advance();
                    let span = e.span;
                    let args = self.call_args()?;
                    e = Expr { kind: ExprKind::Call { callee: Box::new(e), args }, span };
                }
                Tok::Op(Op::LBracket) => {
                    let span = self.advance().span;
                    let index = self.expr()?;
                    self.expect_op(Op::RBracket)?;
                    e = Expr { kind: ExprKind::Index { object: Box::new(e), index: Box::new(index) }, span };
                }
                _ => return Ok(e),
            }
        }
    }

    fn primary(&mut self) -> Result<Expr, ScriptError> {
        let span = self.span();
        let kind = match self.peek().clone() {
            Tok::Name(n) => ExprKind::Name(n),
            Tok::Number(v) => ExprKind::Number(v),
            Tok::Str(s) => ExprKind::Str(s),
            Tok::Kw(Kw::True) => ExprKind::Bool(true),
            Tok::Kw(Kw::False) => ExprKind::Bool(false),
            Tok::Kw(Kw::None) => ExprKind::None,
            Tok::Op(Op::LParen) => {
                self.advance();
                let inner = self.expr()?;
                self.expect_op(Op::RParen)?;
                return Ok(inner);
            }
            Tok::Op(Op::LBracket) => {
                self.advance();
                let mut items = Vec::new();
                if !self.eat_op(Op::RBracket) {
                    loop {
                        items.push(self.expr()?);
                        if self.eat_op(Op::RBracket) {
                            break;
                        }
                        self.expect_op(Op::Comma)?;
                        if self.eat_op(Op::RBracket) {
                            break;
                        }
                    }
                }
                return Ok(Expr { kind: ExprKind::List(items), span });
            }
            _ => return Err(self.unexpected("an expression")),
        };
        self.advance();
        Ok(Expr { kind, span })
    }
}

fn stray_string(stmt: &Stmt) -> Option<Span> {
    match &stmt.kind {
        StmtKind::Expr(Expr { kind: ExprKind::Str(_), span }) => Some(*span),
        StmtKind::If { branches, else_body } => branches
            .iter()
            .flat_map(|(_, b)| b.iter())
            .chain(else_body.iter().flatten())
            .find_map(stray_string),
        StmtKind::For { body, .. } => body.iter().find_map(stray_string),
        StmtKind::Try { body, handlers } => body
            .iter()
            .chain(handlers.iter().flat_map(|h| h.body.iter()))
            .find_map(stray_string),
        _ => None,
    }
}
