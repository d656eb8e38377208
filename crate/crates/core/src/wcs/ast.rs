use super::error::Span;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct WcsScript {
    pub items: Vec<Item>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Item {
    /// Accepted and ignored; kept so formatting round-trips.
    Import { text: String, span: Span },
    Comment { text: String, span: Span },
    Function(Function),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Function {
    pub name: String,
    pub params: Vec<Param>,
    pub doc: Option<String>,
    pub body: Vec<Stmt>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
    pub trailing: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Handler {
    /// `None` catches everything.
    pub exception: Option<String>,
    pub binding: Option<String>,
    pub body: Vec<Stmt>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Let { name: String, value: Expr },
    Assign { name: String, value: Expr },
    /// A call evaluated for its effect.
    Expr(Expr),
    If { branches: Vec<(Expr, Vec<Stmt>)>, else_body: Option<Vec<Stmt>> },
    /// `for var in range(args)` with one to three arguments.
    For { var: String, range: Vec<Expr>, body: Vec<Stmt> },
    Try { body: Vec<Stmt>, handlers: Vec<Handler> },
    Raise(Option<Expr>),
    Return(Option<Expr>),
    Print(Vec<Expr>),
    Pass,
    Comment(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    MatMul,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::MatMul => "@",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "and",
            BinOp::Or => "or",
        }
    }

    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div | BinOp::MatMul => 6,
        }
    }

    pub fn is_comparison(self) -> bool {
        self.precedence() == 4
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Name(String),
    Number(f64),
    Str(String),
    Bool(bool),
    None,
    List(Vec<Expr>),
    Attr { object: Box<Expr>, name: String },
    Call { callee: Box<Expr>, args: Vec<Expr> },
    Index { object: Box<Expr>, index: Box<Expr> },
    Unary { op: UnOp, operand: Box<Expr> },
    Binary { op: BinOp, lhs: Box<Expr>, rhs: Box<Expr> },
}

impl Expr {
    pub fn precedence(&self) -> u8 {
        match &self.kind {
            ExprKind::Binary { op, .. } => op.precedence(),
            ExprKind::Unary { op: UnOp::Not, .. } => 3,
            ExprKind::Unary { op: UnOp::Neg, .. } => 7,
            ExprKind::Attr { .. } | ExprKind::Call { .. } | ExprKind::Index { .. } => 8,
            _ => 9,
        }
    }
}

impl WcsScript {
    pub fn functions(&self) -> impl Iterator<Item = &Function> {
        self.items.iter().filter_map(|i| match i {
            Item::Function(f) => Some(f),
            _ => None,
        })
    }

    pub fn function(&self, name: &str) -> Option<&Function> {
        self.functions().find(|f| f.name == name)
    }

    /// A copy with every span zeroed, for structural comparison.
    pub fn without_spans(&self) -> WcsScript {
        let mut copy = self.clone();
        for item in &mut copy.items {
            match item {
                Item::Import { span, .. } | Item::Comment { span, .. } => *span = Span::default(),
                Item::Function(f) => {
                    f.span = Span::default();
                    f.params.iter_mut().for_each(|p| p.span = Span::default());
                    strip_block(&mut f.body);
                }
            }
        }
        copy
    }
}

fn strip_block(block: &mut [Stmt]) {
    for stmt in block {
        stmt.span = Span::default();
        match &mut stmt.kind {
            StmtKind::Let { value, .. } | StmtKind::Assign { value, .. } | StmtKind::Expr(value) => {
                strip_expr(value)
            }
            StmtKind::If { branches, else_body } => {
                for (cond, body) in branches {
                    strip_expr(cond);
                    strip_block(body);
                }
                if let Some(body) = else_body {
                    strip_block(body);
                }
            }
            StmtKind::For { range, body, .. } => {
                range.iter_mut().for_each(strip_expr);
                strip_block(body);
            }
            StmtKind::Try { body, handlers } => {
                strip_block(body);
                for h in handlers {
                    h.span = Span::default();
                    strip_block(&mut h.body);
                }
            }
            StmtKind::Raise(e) | StmtKind::Return(e) => {
                if let Some(e) = e {
                    strip_expr(e);
                }
            }
            StmtKind::Print(args) => args.iter_mut().for_each(strip_expr),
            StmtKind::Pass | StmtKind::Comment(_) => {}
        }
    }
}

fn strip_expr(expr: &mut Expr) {
    expr.span = Span::default();
    match &mut expr.kind {
        ExprKind::List(items) => items.iter_mut().for_each(strip_expr),
        ExprKind::Attr { object, .. } => strip_expr(object),
        ExprKind::Call { callee, args } => {
            strip_expr(callee);
            args.iter_mut().for_each(strip_expr);
        }
        ExprKind::Index { object, index } => {
            strip_expr(object);
            strip_expr(index);
        }
        ExprKind::Unary { operand, .. } => strip_expr(operand),
        ExprKind::Binary { lhs, rhs, .. } => {
            strip_expr(lhs);
            strip_expr(rhs);
        }
        _ => {}
    }
}
