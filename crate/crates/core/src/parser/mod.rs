//! Concrete syntax: lexing, parsing, desugaring and printing.

mod ast;
mod desugar;
mod grammar;
mod lexer;
mod pretty;

use std::fmt;

use crate::program::{Pos, SourceModule};
use crate::syntax::{Computation, Process, Value};
use crate::types::{CompType, ValueType};

pub use pretty::pretty_module;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub pos: Pos,
    pub message: String,
}

impl ParseError {
    pub fn new(pos: Pos, message: impl Into<String>) -> Self {
        ParseError { pos, message: message.into() }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.pos, self.message)
    }
}

impl std::error::Error for ParseError {}

fn parser(src: &str) -> Result<(grammar::Parser, usize), ParseError> {
    let toks = lexer::lex(src)?;
    let first_temp = lexer::max_temporary(&toks) + 1;
    Ok((grammar::Parser::new(toks), first_temp))
}

pub fn parse_module(src: &str) -> Result<SourceModule, ParseError> {
    let (mut p, first_temp) = parser(src)?;
    let items = p.items()?;
    desugar::module(items, p.aliases().clone(), first_temp)
}

/// Names that shadow builtins while desugaring a standalone term.
fn desugarer(first_temp: usize, globals: &[&str]) -> desugar::Desugarer {
    let mut d = desugar::Desugarer::new(first_temp);
    for g in globals {
        d.bind_global(g);
    }
    d
}

/// A process in the scope of `module`'s definitions and type aliases.
pub fn parse_process_in(module: &SourceModule, src: &str) -> Result<Process, ParseError> {
    let (p, first_temp) = parser(src)?;
    let mut p = p.with_aliases(module.aliases.clone());
    let pos = p.pos();
    let proc = p.process()?;
    p.expect_eof()?;
    let globals: Vec<&str> = module.defs.iter().map(|d| d.name.as_str()).collect();
    desugarer(first_temp, &globals).process(&proc).map_err(|m| ParseError::new(pos, m))
}

pub fn parse_process(src: &str) -> Result<Process, ParseError> {
    parse_process_in(&SourceModule::default(), src)
}

pub fn parse_computation(src: &str) -> Result<Computation, ParseError> {
    let (mut p, first_temp) = parser(src)?;
    let pos = p.pos();
    let e = p.expr()?;
    p.expect_eof()?;
    desugarer(first_temp, &[]).comp(&e).map_err(|m| ParseError::new(pos, m))
}

/// A closed value; computations are rejected.
pub fn parse_value(src: &str) -> Result<Value, ParseError> {
    let (mut p, first_temp) = parser(src)?;
    let pos = p.pos();
    let e = p.expr()?;
    p.expect_eof()?;
    desugarer(first_temp, &[]).pure_value(&e).map_err(|m| ParseError::new(pos, m))
}

pub fn parse_type(src: &str) -> Result<ValueType, ParseError> {
    let (mut p, _) = parser(src)?;
    let t = p.ty()?;
    p.expect_eof()?;
    Ok(t)
}

pub fn parse_comp_type(src: &str) -> Result<CompType, ParseError> {
    let (mut p, _) = parser(src)?;
    let t = p.comp_type()?;
    p.expect_eof()?;
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{alpha_eq, alpha_eq_process};

    fn round_trip(src: &str) {
        let m = parse_computation(src).unwrap();
        let printed = m.to_string();
        let again = parse_computation(&printed).unwrap_or_else(|e| panic!("{printed}\n{e}"));
        assert!(alpha_eq(&m, &again), "{m:?}\n{printed}\n{again:?}");
    }

    #[test]
    fn binary_operators_become_partial_prims() {
        let m = parse_computation("1 + 2").unwrap();
        assert_eq!(m, Computation::Apply(Value::Prim(crate::Prim::Add, vec![Value::Int(1)]), Value::Int(2)));
    }

    #[test]
    fn nested_applications_get_temporaries() {
        let m = parse_computation("return (1 + 2, 3)").unwrap();
        let Computation::Let(t, _, body) = m else { panic!() };
        assert_eq!(t, "$1");
        assert_eq!(*body, Computation::ret(Value::pair(Value::var("$1"), Value::Int(3))));
    }

    #[test]
    fn temporaries_avoid_source_names() {
        let m = parse_computation("let $4 = return 1 in return (1 + 2)").unwrap();
        let Computation::Let(_, _, body) = m else { panic!() };
        let Computation::Let(t, _, _) = *body else { panic!() };
        assert_eq!(t, "$5");
    }

    #[test]
    fn shadowed_builtin_is_a_variable() {
        let m = parse_computation("let map = return 1 in return map").unwrap();
        let Computation::Let(_, _, body) = m else { panic!() };
        assert_eq!(*body, Computation::ret(Value::var("map")));
    }

    #[test]
    fn send_then_continue() {
        let m = parse_computation("send op 1; return 2").unwrap();
        assert_eq!(m, Computation::signal("op", Value::Int(1), Computation::ret(Value::Int(2))));
    }

    #[test]
    fn round_trips() {
        for src in [
            "return ()",
            "let x = return 1 in if x = 2 then return true else send op x; return false",
            "promise (op (x, y) |-> return <<x + y>>) as p in await p until <<z>> in return z",
            "promise (op x when x > 2 |-> return <<x>>) as p in return p",
            "let rec f (n : int) : int ! ({op}, {}) = send op n; f (n + 1) in f 0",
            "let rec g (n : int) (m : int) = return (n * m) in g 1 2",
            "match inl[string] 3 with { inl a |-> return a | inr b |-> return 0 }",
            "interrupt op (-3) into return [1; -2]",
            "let r = ref 0 in let _ = r := !r + 1 in return (map (fun (x : int) |-> return (x * 2)) [1; 2])",
            "return #fold((+))",
            "return (#loc(2), #heap[1; 2], \"a\\n\\\"b\")",
            "process op p with (<<x>> |-> return (x + 1)) as q in return q",
            "match x with {} : int ! ({}, {})",
            "return (fun (f : int -> int ! ({a}, {}) ) |-> f 1)",
        ] {
            round_trip(src);
        }
    }

    #[test]
    fn module_round_trip() {
        let src = "
            type payload = int * string
            signal req : payload
            signal resp : int
            effect rec server = {req -> ({resp}, server)}
            let double (x : int) = return (x + x)
            let rec loop (n : int) : empty ! ({}, {}) = loop n
            run promise (req (n, _) |-> send resp n; return <<()>>) as p in return p
            || send req (1, \"a\"); run return ()
        ";
        let m = parse_module(src).unwrap();
        assert_eq!(m.defs.len(), 2);
        let printed = pretty_module(&m);
        let again = parse_module(&printed).unwrap_or_else(|e| panic!("{printed}\n{e}"));
        assert!(alpha_eq_process(&m.main.as_ref().unwrap().0, &again.main.as_ref().unwrap().0), "{printed}");
        assert_eq!(m.sig, again.sig);
        assert_eq!(m.env, again.env);
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse_computation("let x = in x").unwrap_err();
        assert_eq!(e.pos, Pos { line: 1, col: 9 });
        let e = parse_module("signal op : int\nsignal op : int").unwrap_err();
        assert_eq!(e.pos.line, 2);
        let e = parse_module("let x = 1 + 2").unwrap_err();
        assert!(e.message.contains("value"), "{e}");
    }
}
