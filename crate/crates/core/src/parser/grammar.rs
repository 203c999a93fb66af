//! Recursive-descent parser producing surface syntax.

use std::collections::{BTreeMap, BTreeSet};

use super::ast::*;
use super::lexer::{Tok, Token};
use super::ParseError;
use crate::builtins::Prim;
use crate::effects::{EffectAnn, InterruptAnn, SignalSet};
use crate::program::Pos;
use crate::types::{BaseType, CompType, ValueType};

pub struct Parser {
    toks: Vec<Token>,
    i: usize,
    aliases: BTreeMap<String, ValueType>,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    pub fn new(toks: Vec<Token>) -> Self {
        Parser { toks, i: 0, aliases: BTreeMap::new() }
    }

    pub fn with_aliases(mut self, aliases: BTreeMap<String, ValueType>) -> Self {
        self.aliases = aliases;
        self
    }

    pub fn aliases(&self) -> &BTreeMap<String, ValueType> {
        &self.aliases
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.i].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.i + k).min(self.toks.len() - 1)].tok
    }

    pub fn pos(&self) -> Pos {
        self.toks[self.i].pos
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.i].tok.clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn is(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn eat(&mut self, s: &str) -> bool {
        if self.is(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn error<T>(&self, what: &str) -> PResult<T> {
        Err(ParseError::new(self.pos(), format!("expected {what}, found {}", self.peek().describe())))
    }

    fn expect(&mut self, s: &str) -> PResult<()> {
        if self.eat(s) {
            Ok(())
        } else {
            self.error(&format!("`{s}`"))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.error("an identifier"),
        }
    }

    pub fn at_eof(&self) -> bool {
        *self.peek() == Tok::Eof
    }

    pub fn expect_eof(&self) -> PResult<()> {
        if self.at_eof() {
            Ok(())
        } else {
            self.error("end of input")
        }
    }

    // -----------------------------------------------------------------------
    // Modules

    pub fn items(&mut self) -> PResult<Vec<Item>> {
        let mut out = Vec::new();
        while !self.at_eof() {
            out.push(self.item()?);
        }
        Ok(out)
    }

    fn item(&mut self) -> PResult<Item> {
        let pos = self.pos();
        if self.eat("signal") {
            let op = self.ident()?;
            self.expect(":")?;
            let ty = self.ty()?;
            return Ok(Item::Signal(op, ty, pos));
        }
        if self.eat("effect") {
            self.eat("rec");
            let name = self.ident()?;
            self.expect("=")?;
            let ann = self.iann()?;
            return Ok(Item::Effect(name, ann, pos));
        }
        if self.eat("type") {
            let name = self.ident()?;
            self.expect("=")?;
            let ty = self.ty()?;
            self.aliases.insert(name.clone(), ty.clone());
            return Ok(Item::TypeAlias(name, ty));
        }
        if self.is("run") || self.is("interrupt") || self.is("send") || self.is("(") || self.is("↑") || self.is("↓") {
            return Ok(Item::Main(self.process()?, pos));
        }
        if self.eat("let") {
            if self.eat("rec") {
                let (name, lr) = self.letrec_head()?;
                let first = lr.params[0].clone();
                let arg = match &first.0 {
                    Pat::Var(x) => x.clone(),
                    _ => "$arg".to_string(),
                };
                let lr = LetRecExpr { cont: Expr::App(Box::new(Expr::Var(name.clone())), vec![Expr::Var(arg.clone())]), ..lr };
                let body = Expr::Fun(vec![(Pat::Var(arg), first.1)], Box::new(Expr::LetRec(Box::new(lr))));
                return Ok(Item::Def { name, ascription: None, body, pos });
            }
            let name = self.ident()?;
            let params = self.params()?;
            let ascription = if params.is_empty() && self.eat(":") { Some(self.ty()?) } else { None };
            self.expect("=")?;
            let e = self.expr()?;
            let body = if params.is_empty() { e } else { Expr::Fun(params, Box::new(e)) };
            return Ok(Item::Def { name, ascription, body, pos });
        }
        self.error("a declaration, definition or process")
    }

    /// `f params [: Y [! eff]] = body` without the continuation.
    fn letrec_head(&mut self) -> PResult<(String, LetRecExpr)> {
        let name = self.ident()?;
        let params = self.params()?;
        if params.is_empty() {
            return self.error("a parameter `(x : type)`");
        }
        let (mut cod, mut eff) = (None, None);
        if self.eat(":") {
            cod = Some(self.ty()?);
            if self.eat("!") {
                eff = Some(self.effect()?);
            }
        }
        self.expect("=")?;
        let body = self.expr()?;
        Ok((name.clone(), LetRecExpr { name, params, cod, eff, body, cont: Expr::Unit }))
    }

    fn params(&mut self) -> PResult<Vec<Param>> {
        let mut out = Vec::new();
        while self.is("(") {
            if matches!(self.peek_at(1), Tok::Sym(")")) {
                self.bump();
                self.bump();
                out.push((Pat::Wild, ValueType::Unit));
                continue;
            }
            self.bump();
            let pat = self.pattern()?;
            self.expect(":")?;
            let ty = self.ty()?;
            self.expect(")")?;
            out.push((pat, ty));
        }
        Ok(out)
    }

    fn pattern(&mut self) -> PResult<Pat> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(if s == "_" { Pat::Wild } else { Pat::Var(s) })
            }
            Tok::Sym("(") => {
                self.bump();
                if self.eat(")") {
                    return Ok(Pat::Wild);
                }
                let mut items = vec![self.pattern()?];
                while self.eat(",") {
                    items.push(self.pattern()?);
                }
                self.expect(")")?;
                let last = items.pop().unwrap();
                Ok(items.into_iter().rev().fold(last, |acc, x| Pat::Pair(Box::new(x), Box::new(acc))))
            }
            _ => self.error("a pattern"),
        }
    }

    // -----------------------------------------------------------------------
    // Types and annotations

    pub fn ty(&mut self) -> PResult<ValueType> {
        let a = self.ty_sum()?;
        if self.eat("->") {
            let b = self.ty()?;
            let eff = if self.eat("!") { self.effect()? } else { EffectAnn::empty() };
            return Ok(ValueType::fun(a, CompType::new(b, eff)));
        }
        Ok(a)
    }

    pub fn comp_type(&mut self) -> PResult<CompType> {
        let t = self.ty_sum()?;
        if self.eat("->") {
            let b = self.ty()?;
            let eff = if self.eat("!") { self.effect()? } else { EffectAnn::empty() };
            let f = ValueType::fun(t, CompType::new(b, eff));
            return Ok(CompType::pure(f));
        }
        let eff = if self.eat("!") { self.effect()? } else { EffectAnn::empty() };
        Ok(CompType::new(t, eff))
    }

    fn ty_sum(&mut self) -> PResult<ValueType> {
        let mut a = self.ty_prod()?;
        while self.eat("+") {
            let b = self.ty_prod()?;
            a = ValueType::sum(a, b);
        }
        Ok(a)
    }

    fn ty_prod(&mut self) -> PResult<ValueType> {
        let mut a = self.ty_atom()?;
        while self.eat("*") {
            let b = self.ty_atom()?;
            a = ValueType::product(a, b);
        }
        Ok(a)
    }

    fn ty_atom(&mut self) -> PResult<ValueType> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                match s.as_str() {
                    "unit" => Ok(ValueType::Unit),
                    "empty" => Ok(ValueType::Empty),
                    "bool" => Ok(ValueType::bool()),
                    "ref" => Ok(ValueType::Ref(Box::new(self.ty_atom()?))),
                    _ => {
                        if let Some(b) = BaseType::from_name(&s) {
                            Ok(ValueType::Base(b))
                        } else if let Some(t) = self.aliases.get(&s) {
                            Ok(t.clone())
                        } else {
                            Err(ParseError::new(self.toks[self.i - 1].pos, format!("unknown type `{s}`")))
                        }
                    }
                }
            }
            Tok::Sym("<<") => {
                self.bump();
                let t = self.ty()?;
                self.expect(">>")?;
                Ok(ValueType::promise(t))
            }
            Tok::Sym("(") => {
                self.bump();
                let t = self.ty()?;
                self.expect(")")?;
                Ok(t)
            }
            _ => self.error("a type"),
        }
    }

    /// `({op, ...}, I)`.
    pub fn effect(&mut self) -> PResult<EffectAnn> {
        self.expect("(")?;
        let o = self.op_set()?;
        self.expect(",")?;
        let i = self.iann()?;
        self.expect(")")?;
        Ok(EffectAnn::new(o, i))
    }

    fn op_set(&mut self) -> PResult<SignalSet> {
        self.expect("{")?;
        let mut out = BTreeSet::new();
        if !self.is("}") {
            loop {
                out.insert(self.ident()?);
                if !self.eat(",") {
                    break;
                }
            }
        }
        self.expect("}")?;
        Ok(out)
    }

    /// `{op -> (O, I), ...}`, a name, `(I | I ...)`, each optionally
    /// followed by `\{ops}`.
    pub fn iann(&mut self) -> PResult<InterruptAnn> {
        let mut a = match self.peek().clone() {
            Tok::Sym("{") => {
                self.bump();
                let mut m = BTreeMap::new();
                if !self.is("}") {
                    loop {
                        let op = self.ident()?;
                        self.expect("->")?;
                        let e = self.effect()?;
                        m.insert(op, (e.signals, e.handlers));
                        if !self.eat(",") {
                            break;
                        }
                    }
                }
                self.expect("}")?;
                InterruptAnn::Map(m)
            }
            Tok::Ident(n) => {
                self.bump();
                InterruptAnn::named(n)
            }
            Tok::Sym("(") => {
                self.bump();
                let mut acc = self.iann()?;
                while self.eat("|") {
                    acc = acc.join(&self.iann()?);
                }
                self.expect(")")?;
                acc
            }
            _ => return self.error("an interrupt annotation"),
        };
        while self.eat("\\") {
            for op in self.op_set()? {
                a = a.erase(&op);
            }
        }
        Ok(a)
    }

    // -----------------------------------------------------------------------
    // Processes

    pub fn process(&mut self) -> PResult<Proc> {
        let mut p = self.proc_atom()?;
        while self.eat("||") {
            let q = self.proc_atom()?;
            p = Proc::Par(Box::new(p), Box::new(q));
        }
        Ok(p)
    }

    fn proc_atom(&mut self) -> PResult<Proc> {
        if self.eat("run") {
            return Ok(Proc::Run(self.expr()?));
        }
        if self.eat("interrupt") {
            let op = self.ident()?;
            let v = self.app_expr()?;
            self.expect("into")?;
            return Ok(Proc::Interrupt(op, v, Box::new(self.proc_atom()?)));
        }
        if self.eat("send") {
            let op = self.ident()?;
            let v = self.app_expr()?;
            self.expect(";")?;
            return Ok(Proc::Signal(op, v, Box::new(self.proc_atom()?)));
        }
        if self.is("↑") || self.is("↓") {
            let up = self.bump() == Tok::Sym("↑");
            let op = self.ident()?;
            self.expect("(")?;
            let v = self.expr()?;
            self.expect(",")?;
            let p = self.process()?;
            self.expect(")")?;
            return Ok(if up { Proc::Signal(op, v, Box::new(p)) } else { Proc::Interrupt(op, v, Box::new(p)) });
        }
        if self.eat("(") {
            let p = self.process()?;
            self.expect(")")?;
            return Ok(p);
        }
        self.error("a process")
    }

    // -----------------------------------------------------------------------
    // Expressions

    pub fn expr(&mut self) -> PResult<Expr> {
        let a = self.nonseq()?;
        if self.eat(";") {
            let b = self.expr()?;
            return Ok(Expr::Seq(Box::new(a), Box::new(b)));
        }
        Ok(a)
    }

    fn nonseq(&mut self) -> PResult<Expr> {
        match self.peek() {
            Tok::Sym("let") => self.let_expr(),
            Tok::Sym("fun") => {
                self.bump();
                let params = self.params()?;
                if params.is_empty() {
                    return self.error("a parameter `(x : type)`");
                }
                self.expect("|->")?;
                Ok(Expr::Fun(params, Box::new(self.expr()?)))
            }
            Tok::Sym("if") => {
                self.bump();
                let c = self.expr()?;
                self.expect("then")?;
                let a = self.expr()?;
                self.expect("else")?;
                let b = self.nonseq()?;
                Ok(Expr::If(Box::new(c), Box::new(a), Box::new(b)))
            }
            Tok::Sym("promise") => self.promise_expr(),
            Tok::Sym("await") => {
                self.bump();
                let v = self.app_expr()?;
                self.expect("until")?;
                self.expect("<<")?;
                let pat = self.pattern()?;
                self.expect(">>")?;
                self.expect("in")?;
                Ok(Expr::Await(Box::new(v), pat, Box::new(self.expr()?)))
            }
            Tok::Sym("interrupt") => {
                self.bump();
                let op = self.ident()?;
                let v = self.app_expr()?;
                self.expect("into")?;
                Ok(Expr::Interrupt(op, Box::new(v), Box::new(self.expr()?)))
            }
            Tok::Sym("process") => {
                self.bump();
                let op = self.ident()?;
                let promise = self.app_expr()?;
                self.expect("with")?;
                self.expect("(")?;
                self.expect("<<")?;
                let pat = self.pattern()?;
                self.expect(">>")?;
                self.expect("|->")?;
                let comp = self.expr()?;
                self.expect(")")?;
                self.expect("as")?;
                let q = self.pattern()?;
                self.expect("in")?;
                let cont = self.expr()?;
                Ok(Expr::ProcessOp(Box::new(ProcessOpExpr { op, promise, pat, comp, q, cont })))
            }
            _ => self.assign(),
        }
    }

    fn let_expr(&mut self) -> PResult<Expr> {
        self.expect("let")?;
        if self.eat("rec") {
            let (_, mut lr) = self.letrec_head()?;
            self.expect("in")?;
            lr.cont = self.expr()?;
            return Ok(Expr::LetRec(Box::new(lr)));
        }
        if let (Tok::Ident(name), Tok::Sym("(")) = (self.peek().clone(), self.peek_at(1).clone()) {
            self.bump();
            let params = self.params()?;
            self.expect("=")?;
            let body = self.expr()?;
            self.expect("in")?;
            let cont = self.expr()?;
            return Ok(Expr::LetFun(name, params, Box::new(body), Box::new(cont)));
        }
        let pat = self.pattern()?;
        self.expect("=")?;
        let a = self.expr()?;
        self.expect("in")?;
        let b = self.expr()?;
        Ok(Expr::Let(pat, Box::new(a), Box::new(b)))
    }

    fn promise_expr(&mut self) -> PResult<Expr> {
        self.expect("promise")?;
        self.expect("(")?;
        let op = self.ident()?;
        let pat = self.pattern()?;
        let guard = if self.eat("when") { Some(self.expr()?) } else { None };
        self.expect("|->")?;
        let handler = self.expr()?;
        self.expect(")")?;
        self.expect("as")?;
        let p = self.pattern()?;
        self.expect("in")?;
        let cont = self.expr()?;
        Ok(Expr::Promise(Box::new(PromiseExpr { op, pat, guard, handler, p, cont })))
    }

    fn assign(&mut self) -> PResult<Expr> {
        let a = self.or_expr()?;
        if self.eat(":=") {
            let b = self.or_expr()?;
            return Ok(Expr::BinOp(Prim::Assign, Box::new(a), Box::new(b)));
        }
        Ok(a)
    }

    fn or_expr(&mut self) -> PResult<Expr> {
        let mut a = self.and_expr()?;
        while self.eat("or") {
            let b = self.and_expr()?;
            a = Expr::BinOp(Prim::Or, Box::new(a), Box::new(b));
        }
        Ok(a)
    }

    fn and_expr(&mut self) -> PResult<Expr> {
        let mut a = self.cmp_expr()?;
        while self.eat("&&") {
            let b = self.cmp_expr()?;
            a = Expr::BinOp(Prim::And, Box::new(a), Box::new(b));
        }
        Ok(a)
    }

    fn cmp_expr(&mut self) -> PResult<Expr> {
        let a = self.cons_expr()?;
        for (s, p) in [("=", Prim::Eq), ("<>", Prim::Neq), ("<=", Prim::Le), (">=", Prim::Ge), ("<", Prim::Lt), (">", Prim::Gt)] {
            if self.eat(s) {
                let b = self.cons_expr()?;
                return Ok(Expr::BinOp(p, Box::new(a), Box::new(b)));
            }
        }
        Ok(a)
    }

    fn cons_expr(&mut self) -> PResult<Expr> {
        let a = self.add_expr()?;
        for (s, p) in [("::", Prim::Cons), ("@", Prim::Append), ("^", Prim::Concat)] {
            if self.eat(s) {
                let b = self.cons_expr()?;
                return Ok(Expr::BinOp(p, Box::new(a), Box::new(b)));
            }
        }
        Ok(a)
    }

    fn add_expr(&mut self) -> PResult<Expr> {
        let mut a = self.mul_expr()?;
        loop {
            let p = if self.eat("+") {
                Prim::Add
            } else if self.eat("-") {
                Prim::Sub
            } else {
                return Ok(a);
            };
            let b = self.mul_expr()?;
            a = Expr::BinOp(p, Box::new(a), Box::new(b));
        }
    }

    fn mul_expr(&mut self) -> PResult<Expr> {
        let mut a = self.app_expr()?;
        loop {
            let p = if self.eat("*") {
                Prim::Mul
            } else if self.eat("/") {
                Prim::Div
            } else if self.eat("mod") {
                Prim::Mod
            } else {
                return Ok(a);
            };
            let b = self.app_expr()?;
            a = Expr::BinOp(p, Box::new(a), Box::new(b));
        }
    }

    /// Application, `send`, `return`, injections and prefix `!`.
    fn app_expr(&mut self) -> PResult<Expr> {
        match self.peek() {
            Tok::Sym("send") => {
                self.bump();
                let op = self.ident()?;
                let v = self.app_expr()?;
                return Ok(Expr::Send(op, Box::new(v)));
            }
            Tok::Sym("return") => {
                self.bump();
                return Ok(Expr::Return(Box::new(self.app_expr()?)));
            }
            Tok::Sym("inl") | Tok::Sym("inr") => {
                let left = self.bump() == Tok::Sym("inl");
                self.expect("[")?;
                let t = self.ty()?;
                self.expect("]")?;
                let v = self.app_expr()?;
                return Ok(if left { Expr::Inl(t, Box::new(v)) } else { Expr::Inr(t, Box::new(v)) });
            }
            _ => {}
        }
        let head = self.prefix()?;
        let mut args = Vec::new();
        while self.starts_atom() {
            args.push(self.prefix()?);
        }
        Ok(if args.is_empty() { head } else { Expr::App(Box::new(head), args) })
    }

    fn prefix(&mut self) -> PResult<Expr> {
        if self.eat("!") {
            return Ok(Expr::Deref(Box::new(self.prefix()?)));
        }
        self.atom()
    }

    fn starts_atom(&self) -> bool {
        match self.peek() {
            Tok::Ident(_) | Tok::Int(_) | Tok::Str(_) => true,
            Tok::Sym(s) => matches!(*s, "(" | "[" | "<<" | "true" | "false" | "!" | "#" | "match" | "↑" | "↓"),
            Tok::Eof => false,
        }
    }

    fn atom(&mut self) -> PResult<Expr> {
        let pos = self.pos();
        match self.bump() {
            Tok::Ident(s) => Ok(Expr::Var(s)),
            Tok::Int(n) => Ok(Expr::Int(n)),
            Tok::Str(s) => Ok(Expr::Str(s)),
            Tok::Sym("true") => Ok(Expr::Bool(true)),
            Tok::Sym("false") => Ok(Expr::Bool(false)),
            Tok::Sym("[") => Ok(Expr::List(self.int_list()?)),
            Tok::Sym("<<") => {
                let e = self.expr()?;
                self.expect(">>")?;
                Ok(Expr::Fulfilled(Box::new(e)))
            }
            Tok::Sym("#") => self.hash_value(pos),
            Tok::Sym("match") => self.match_expr(),
            Tok::Sym(s @ ("↑" | "↓")) => {
                let op = self.ident()?;
                self.expect("(")?;
                let v = self.expr()?;
                self.expect(",")?;
                let m = self.expr()?;
                self.expect(")")?;
                Ok(if s == "↑" {
                    Expr::Signal(op, Box::new(v), Box::new(m))
                } else {
                    Expr::Interrupt(op, Box::new(v), Box::new(m))
                })
            }
            Tok::Sym("(") => {
                if self.eat(")") {
                    return Ok(Expr::Unit);
                }
                // `(-n)` and operator sections `(+)`.
                if self.is("-") {
                    if let Tok::Int(n) = self.peek_at(1).clone() {
                        if matches!(self.peek_at(2), Tok::Sym(")")) {
                            self.bump();
                            self.bump();
                            self.bump();
                            return Ok(Expr::Int(-n));
                        }
                    }
                }
                if let (Tok::Sym(s), Tok::Sym(")")) = (self.peek().clone(), self.peek_at(1).clone()) {
                    if let Some(p) = Prim::from_name(s) {
                        self.bump();
                        self.bump();
                        return Ok(Expr::PrimVal(p, Vec::new()));
                    }
                }
                // Tuples nest to the right.
                let mut items = vec![self.expr()?];
                while self.eat(",") {
                    items.push(self.expr()?);
                }
                self.expect(")")?;
                let last = items.pop().unwrap();
                Ok(items.into_iter().rev().fold(last, |acc, x| Expr::Pair(Box::new(x), Box::new(acc))))
            }
            t => Err(ParseError::new(pos, format!("expected an expression, found {}", t.describe()))),
        }
    }

    fn int_list(&mut self) -> PResult<Vec<i64>> {
        let mut out = Vec::new();
        if self.eat("]") {
            return Ok(out);
        }
        loop {
            let neg = self.eat("-");
            match self.bump() {
                Tok::Int(n) => out.push(if neg { -n } else { n }),
                t => return Err(ParseError::new(self.pos(), format!("expected an integer, found {}", t.describe()))),
            }
            if self.eat("]") {
                return Ok(out);
            }
            self.expect(";")?;
        }
    }

    /// `#p(args)`, `#loc(n)`, `#ref(n)`, `#heap[...]`.
    fn hash_value(&mut self, pos: Pos) -> PResult<Expr> {
        let name = match self.bump() {
            Tok::Ident(s) => s,
            Tok::Sym(s) => s.to_string(),
            t => return Err(ParseError::new(pos, format!("expected a primitive after `#`, found {}", t.describe()))),
        };
        let index = |p: &mut Parser| -> PResult<usize> {
            p.expect("(")?;
            let n = match p.bump() {
                Tok::Int(n) if n >= 0 => n as usize,
                t => return Err(ParseError::new(p.pos(), format!("expected an index, found {}", t.describe()))),
            };
            p.expect(")")?;
            Ok(n)
        };
        match name.as_str() {
            "loc" => return Ok(Expr::Loc(index(self)?)),
            "ref" if matches!(self.peek_at(1), Tok::Int(_)) => return Ok(Expr::RefLoc(index(self)?)),
            "heap" => {
                self.expect("[")?;
                return Ok(Expr::Heap(self.int_list()?));
            }
            _ => {}
        }
        let p = Prim::from_name(&name).ok_or_else(|| ParseError::new(pos, format!("unknown primitive `{name}`")))?;
        self.expect("(")?;
        let mut args = Vec::new();
        if !self.eat(")") {
            loop {
                args.push(self.expr()?);
                if self.eat(")") {
                    break;
                }
                self.expect(",")?;
            }
        }
        Ok(Expr::PrimVal(p, args))
    }

    /// `match e with { arms }`, already past `match`.
    fn match_expr(&mut self) -> PResult<Expr> {
        let e = self.expr()?;
        self.expect("with")?;
        self.expect("{")?;
        if self.eat("}") {
            self.expect(":")?;
            let t = self.comp_type()?;
            return Ok(Expr::MatchEmpty(Box::new(e), t));
        }
        self.eat("|");
        if self.is("(") {
            let pat = self.pattern()?;
            self.expect("|->")?;
            let body = self.expr()?;
            self.expect("}")?;
            return Ok(Expr::MatchPair(Box::new(e), pat, Box::new(body)));
        }
        self.expect("inl")?;
        let x = self.pattern()?;
        self.expect("|->")?;
        let a = self.expr()?;
        self.expect("|")?;
        self.expect("inr")?;
        let y = self.pattern()?;
        self.expect("|->")?;
        let b = self.expr()?;
        self.expect("}")?;
        Ok(Expr::MatchSum(Box::new(e), x, Box::new(a), y, Box::new(b)))
    }
}
