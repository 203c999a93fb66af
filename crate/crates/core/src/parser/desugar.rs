//! Surface syntax to the fine-grained core: every intermediate result gets a
//! `$n` temporary.

use super::ast::*;
use super::ParseError;
use crate::builtins::Prim;
use crate::effects::{AnnEnv, EffectAnn};
use crate::program::{Pos, SourceModule, TopDef};
use crate::syntax::{Computation, FunAnn, LetRec, Name, Process, Value};
use crate::types::{CompType, Signature, ValueType};

type Binds = Vec<(Name, Computation)>;
type DResult<T> = Result<T, String>;

pub struct Desugarer {
    next: usize,
    bound: Vec<Name>,
}

fn wrap(binds: Binds, m: Computation) -> Computation {
    binds.into_iter().rev().fold(m, |acc, (x, c)| Computation::let_(x, c, acc))
}

impl Desugarer {
    pub fn new(first_temp: usize) -> Self {
        Desugarer { next: first_temp, bound: Vec::new() }
    }

    pub fn bind_global(&mut self, x: &str) {
        self.bound.push(x.to_string());
    }

    fn fresh(&mut self) -> Name {
        let n = format!("${}", self.next);
        self.next += 1;
        n
    }

    fn scoped<T>(&mut self, names: &[Name], f: impl FnOnce(&mut Self) -> T) -> T {
        let depth = self.bound.len();
        self.bound.extend(names.iter().cloned());
        let out = f(self);
        self.bound.truncate(depth);
        out
    }

    /// Builtin named `x`, unless a binder shadows it.
    fn prim_named(&self, x: &str) -> Option<Prim> {
        if self.bound.iter().any(|b| b == x) {
            None
        } else {
            Prim::from_name(x)
        }
    }

    /// Name bound directly by a pattern, or a fresh one when the pattern
    /// has to be destructured.
    fn binder(&mut self, pat: &Pat) -> Name {
        match pat {
            Pat::Var(x) => x.clone(),
            Pat::Wild => "_".to_string(),
            Pat::Pair(..) => self.fresh(),
        }
    }

    fn pat_vars(pat: &Pat, out: &mut Vec<Name>) {
        match pat {
            Pat::Var(x) => out.push(x.clone()),
            Pat::Wild => {}
            Pat::Pair(a, b) => {
                Self::pat_vars(a, out);
                Self::pat_vars(b, out);
            }
        }
    }

    /// Destructure `v` against `pat` around `body`, which sees the pattern's
    /// variables. `v` must already be the binder returned by [`binder`].
    fn under_pat(
        &mut self,
        pat: &Pat,
        v: &Name,
        body: impl FnOnce(&mut Self) -> DResult<Computation>,
    ) -> DResult<Computation> {
        let mut vars = Vec::new();
        Self::pat_vars(pat, &mut vars);
        let inner = self.scoped(&vars, body)?;
        Ok(self.destructure(pat, v, inner))
    }

    fn destructure(&mut self, pat: &Pat, v: &Name, inner: Computation) -> Computation {
        match pat {
            Pat::Pair(a, b) => {
                let x = self.binder(a);
                let y = self.binder(b);
                let inner = self.destructure(b, &y, inner);
                let inner = self.destructure(a, &x, inner);
                Computation::match_pair(Value::var(v.clone()), x, y, inner)
            }
            _ => inner,
        }
    }

    // -----------------------------------------------------------------------

    /// A value plus the computations that must run first to produce it.
    pub fn value(&mut self, e: &Expr) -> DResult<(Binds, Value)> {
        let mut binds = Vec::new();
        let v = self.value_into(e, &mut binds)?;
        Ok((binds, v))
    }

    fn value_into(&mut self, e: &Expr, binds: &mut Binds) -> DResult<Value> {
        Ok(match e {
            Expr::Var(x) => match self.prim_named(x) {
                Some(p) => Value::Prim(p, Vec::new()),
                None => Value::var(x.clone()),
            },
            Expr::Int(n) => Value::Int(*n),
            Expr::Str(s) => Value::Str(s.clone()),
            Expr::List(xs) => Value::List(xs.clone()),
            Expr::Unit => Value::Unit,
            Expr::Bool(b) => Value::bool(*b),
            Expr::Pair(a, b) => {
                let a = self.value_into(a, binds)?;
                let b = self.value_into(b, binds)?;
                Value::pair(a, b)
            }
            Expr::Inl(t, a) => Value::inl(self.value_into(a, binds)?, t.clone()),
            Expr::Inr(t, a) => Value::inr(self.value_into(a, binds)?, t.clone()),
            Expr::Fulfilled(a) => Value::fulfilled(self.value_into(a, binds)?),
            Expr::Fun(params, body) => self.fun(params, body)?,
            Expr::PrimVal(p, args) => {
                if args.len() >= p.arity() {
                    return Err(format!("`#{p}` takes fewer than {} arguments", p.arity()));
                }
                let mut vs = Vec::new();
                for a in args {
                    vs.push(self.value_into(a, binds)?);
                }
                Value::Prim(*p, vs)
            }
            Expr::Loc(l) => Value::Loc(*l),
            Expr::Heap(xs) => Value::Heap(xs.clone()),
            Expr::RefLoc(l) => Value::Ref(*l),
            Expr::App(head, args) if self.partial_prim(head, args.len()).is_some() => {
                let p = self.partial_prim(head, args.len()).unwrap();
                let mut vs = Vec::new();
                for a in args {
                    vs.push(self.value_into(a, binds)?);
                }
                Value::Prim(p, vs)
            }
            _ => {
                let c = self.comp(e)?;
                let t = self.fresh();
                binds.push((t.clone(), c));
                Value::var(t)
            }
        })
    }

    fn partial_prim(&self, head: &Expr, n: usize) -> Option<Prim> {
        match head {
            Expr::Var(x) => self.prim_named(x).filter(|p| n < p.arity()),
            _ => None,
        }
    }

    fn fun(&mut self, params: &[Param], body: &Expr) -> DResult<Value> {
        let (pat, ty) = &params[0];
        let x = self.binder(pat);
        let rest = &params[1..];
        let inner = self.under_pat(pat, &x, |s| {
            if rest.is_empty() {
                s.comp(body)
            } else {
                Ok(Computation::ret(s.fun(rest, body)?))
            }
        })?;
        Ok(Value::fun(x, ty.clone(), inner))
    }

    pub fn comp(&mut self, e: &Expr) -> DResult<Computation> {
        Ok(match e {
            Expr::App(head, args) => {
                let mut binds = Vec::new();
                if let Expr::Var(x) = &**head {
                    if let Some(p) = self.prim_named(x) {
                        let mut vs = Vec::new();
                        for a in args {
                            vs.push(self.value_into(a, &mut binds)?);
                        }
                        if vs.len() < p.arity() {
                            return Ok(wrap(binds, Computation::ret(Value::Prim(p, vs))));
                        }
                        let rest = vs.split_off(p.arity());
                        let last = vs.pop().unwrap();
                        let call = Computation::Apply(Value::Prim(p, vs), last);
                        return Ok(wrap(binds, self.apply_chain(call, rest)));
                    }
                }
                let f = self.value_into(head, &mut binds)?;
                let mut vs = Vec::new();
                for a in args {
                    vs.push(self.value_into(a, &mut binds)?);
                }
                let rest = vs.split_off(1);
                let call = Computation::Apply(f, vs.pop().unwrap());
                wrap(binds, self.apply_chain(call, rest))
            }
            Expr::BinOp(p, a, b) => {
                let mut binds = Vec::new();
                let a = self.value_into(a, &mut binds)?;
                let b = self.value_into(b, &mut binds)?;
                wrap(binds, Computation::Apply(Value::Prim(*p, vec![a]), b))
            }
            Expr::Deref(a) => {
                let (binds, v) = self.value(a)?;
                wrap(binds, Computation::Apply(Value::Prim(Prim::Deref, Vec::new()), v))
            }
            Expr::Return(a) => {
                let (binds, v) = self.value(a)?;
                wrap(binds, Computation::ret(v))
            }
            Expr::Let(pat, a, b) => {
                let a = self.comp(a)?;
                let x = self.binder(pat);
                let body = self.under_pat(pat, &x, |s| s.comp(b))?;
                Computation::let_(x, a, body)
            }
            Expr::LetFun(f, params, body, cont) => {
                let v = self.fun(params, body)?;
                let cont = self.scoped(&[f.clone()], |s| s.comp(cont))?;
                Computation::let_(f.clone(), Computation::ret(v), cont)
            }
            Expr::LetRec(lr) => self.letrec(lr)?,
            Expr::If(c, a, b) => {
                let (binds, v) = self.value(c)?;
                let a = self.comp(a)?;
                let b = self.comp(b)?;
                wrap(binds, Computation::match_sum(v, "_", a, "_", b))
            }
            Expr::MatchSum(e, px, a, py, b) => {
                let (binds, v) = self.value(e)?;
                let x = self.binder(px);
                let a = self.under_pat(px, &x, |s| s.comp(a))?;
                let y = self.binder(py);
                let b = self.under_pat(py, &y, |s| s.comp(b))?;
                wrap(binds, Computation::match_sum(v, x, a, y, b))
            }
            Expr::MatchPair(e, pat, body) => {
                let (binds, v) = self.value(e)?;
                let m = match pat {
                    Pat::Pair(..) => {
                        let t = self.fresh();
                        let inner = self.under_pat(pat, &t, |s| s.comp(body))?;
                        match inner {
                            Computation::MatchPair(Value::Var(ref y), a, b, m) if *y == t => {
                                Computation::MatchPair(v, a, b, m)
                            }
                            other => Computation::let_(t, Computation::ret(v), other),
                        }
                    }
                    _ => {
                        let x = self.binder(pat);
                        let body = self.under_pat(pat, &x, |s| s.comp(body))?;
                        Computation::let_(x, Computation::ret(v), body)
                    }
                };
                wrap(binds, m)
            }
            Expr::MatchEmpty(e, t) => {
                let (binds, v) = self.value(e)?;
                wrap(binds, Computation::MatchEmpty(v, t.clone()))
            }
            Expr::Send(op, a) => {
                let (binds, v) = self.value(a)?;
                wrap(binds, Computation::signal(op.clone(), v, Computation::ret(Value::Unit)))
            }
            Expr::Signal(op, a, m) => {
                let (binds, v) = self.value(a)?;
                wrap(binds, Computation::signal(op.clone(), v, self.comp(m)?))
            }
            Expr::Seq(a, b) => match &**a {
                Expr::Send(op, payload) => {
                    let (binds, v) = self.value(payload)?;
                    wrap(binds, Computation::signal(op.clone(), v, self.comp(b)?))
                }
                _ => {
                    let a = self.comp(a)?;
                    Computation::let_("_", a, self.comp(b)?)
                }
            },
            Expr::Interrupt(op, a, m) => {
                let (binds, v) = self.value(a)?;
                wrap(binds, Computation::interrupt(op.clone(), v, self.comp(m)?))
            }
            Expr::Promise(pe) => self.promise(pe)?,
            Expr::Await(e, pat, m) => {
                let (binds, v) = self.value(e)?;
                let x = self.binder(pat);
                let m = self.under_pat(pat, &x, |s| s.comp(m))?;
                wrap(binds, Computation::await_(v, x, m))
            }
            Expr::ProcessOp(po) => {
                // promise (op _ |-> await p until <<x>> in let y = comp in return <<y>>) as q in cont
                let y = self.fresh();
                let (binds, pv) = self.value(&po.promise)?;
                let x = self.binder(&po.pat);
                let comp = self.under_pat(&po.pat, &x, |s| s.comp(&po.comp))?;
                let handler = wrap(
                    binds,
                    Computation::await_(
                        pv,
                        x,
                        Computation::let_(y.clone(), comp, Computation::ret(Value::fulfilled(Value::var(y)))),
                    ),
                );
                let q = self.promise_binder(&po.q)?;
                let cont = self.scoped(&[q.clone()], |s| s.comp(&po.cont))?;
                Computation::promise(po.op.clone(), "_", handler, q, cont)
            }
            _ => {
                let (binds, v) = self.value(e)?;
                wrap(binds, Computation::ret(v))
            }
        })
    }

    fn apply_chain(&mut self, call: Computation, rest: Vec<Value>) -> Computation {
        let mut cur = call;
        for v in rest {
            let t = self.fresh();
            cur = Computation::let_(t.clone(), cur, Computation::Apply(Value::var(t), v));
        }
        cur
    }

    fn promise_binder(&mut self, pat: &Pat) -> DResult<Name> {
        match pat {
            Pat::Pair(..) => Err("a promise variable cannot be a pair pattern".to_string()),
            p => Ok(self.binder(p)),
        }
    }

    fn letrec(&mut self, lr: &LetRecExpr) -> DResult<Computation> {
        let (pat, dom) = &lr.params[0];
        let x = self.binder(pat);
        let rest = &lr.params[1..];
        let ann = if rest.is_empty() {
            FunAnn { dom: dom.clone(), cod: lr.cod.clone(), eff: lr.eff.clone() }
        } else if let (Some(cod), Some(eff)) = (&lr.cod, &lr.eff) {
            let inner = rest
                .iter()
                .rev()
                .fold((cod.clone(), eff.clone()), |(c, e), (_, t)| {
                    (ValueType::fun(t.clone(), CompType::new(c, e)), EffectAnn::empty())
                });
            FunAnn::new(dom.clone(), inner.0, inner.1)
        } else {
            FunAnn { dom: dom.clone(), cod: None, eff: None }
        };
        let f = lr.name.clone();
        let body = self.scoped(&[f.clone()], |s| {
            s.under_pat(pat, &x, |s| {
                if rest.is_empty() {
                    s.comp(&lr.body)
                } else {
                    Ok(Computation::ret(s.fun(rest, &lr.body)?))
                }
            })
        })?;
        let cont = self.scoped(&[f.clone()], |s| s.comp(&lr.cont))?;
        Ok(Computation::letrec(f, x, ann, body, cont))
    }

    fn promise(&mut self, pe: &PromiseExpr) -> DResult<Computation> {
        let x = self.binder(&pe.pat);
        let Some(guard) = &pe.guard else {
            let handler = self.under_pat(&pe.pat, &x, |s| s.comp(&pe.handler))?;
            let p = self.promise_binder(&pe.p)?;
            let cont = self.scoped(&[p.clone()], |s| s.comp(&pe.cont))?;
            return Ok(Computation::promise(pe.op.clone(), x, handler, p, cont));
        };
        // let rec w () = promise (op x |-> if g then h else w ()) as p' in return p'
        // in let p = w () in cont
        let w = self.fresh();
        let p1 = self.fresh();
        let handler = self.scoped(&[w.clone()], |s| {
            s.under_pat(&pe.pat, &x, |s| {
                let (binds, g) = s.value(guard)?;
                let then = s.comp(&pe.handler)?;
                let reinstall = Computation::Apply(Value::var(w.clone()), Value::Unit);
                Ok(wrap(binds, Computation::match_sum(g, "_", then, "_", reinstall)))
            })
        })?;
        let body = Computation::promise(pe.op.clone(), x, handler, p1.clone(), Computation::ret(Value::var(p1)));
        let p = self.promise_binder(&pe.p)?;
        let cont = self.scoped(&[p.clone()], |s| s.comp(&pe.cont))?;
        let install = Computation::let_(p, Computation::Apply(Value::var(w.clone()), Value::Unit), cont);
        Ok(Computation::LetRec(Box::new(LetRec {
            f: w,
            x: "_".to_string(),
            ann: FunAnn { dom: ValueType::Unit, cod: None, eff: None },
            body,
            cont: install,
        })))
    }

    /// Process payloads must already be values.
    pub fn process(&mut self, p: &Proc) -> DResult<Process> {
        Ok(match p {
            Proc::Run(e) => Process::run(self.comp(e)?),
            Proc::Par(a, b) => Process::par(self.process(a)?, self.process(b)?),
            Proc::Signal(op, e, q) => Process::signal(op.clone(), self.pure_value(e)?, self.process(q)?),
            Proc::Interrupt(op, e, q) => Process::interrupt(op.clone(), self.pure_value(e)?, self.process(q)?),
        })
    }

    pub fn pure_value(&mut self, e: &Expr) -> DResult<Value> {
        let (binds, v) = self.value(e)?;
        if binds.is_empty() {
            Ok(v)
        } else {
            Err("expected a value, found a computation".to_string())
        }
    }
}

/// Assemble a module from parsed items.
pub fn module(items: Vec<Item>, aliases: std::collections::BTreeMap<String, ValueType>, first_temp: usize) -> Result<SourceModule, ParseError> {
    let mut d = Desugarer::new(first_temp);
    let mut sig = Signature::new();
    let mut env = AnnEnv::new();
    let mut defs = Vec::new();
    let mut main: Option<(Process, Pos)> = None;
    for item in items {
        match item {
            Item::Signal(op, ty, pos) => sig.declare(op, ty).map_err(|e| ParseError::new(pos, e.to_string()))?,
            Item::Effect(name, ann, pos) => env.define(name, ann).map_err(|e| ParseError::new(pos, e.to_string()))?,
            Item::TypeAlias(..) => {}
            Item::Def { name, ascription, body, pos } => {
                let value = d.pure_value(&body).map_err(|m| ParseError::new(pos, format!("in `{name}`: {m}")))?;
                d.bind_global(&name);
                defs.push(TopDef { name, value, ascription, pos });
            }
            Item::Main(p, pos) => {
                if main.is_some() {
                    return Err(ParseError::new(pos, "a module has at most one main process"));
                }
                let p = d.process(&p).map_err(|m| ParseError::new(pos, m))?;
                main = Some((p, pos));
            }
        }
    }
    Ok(SourceModule { sig, env, aliases, defs, main })
}
