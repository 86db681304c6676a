//! Text grammar for expressions.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?
//! primary := number | '(' expr ')' | call | identifier
//! call    := name primes? family? index? '(' args ')'
//! ```
//!
//! Jet coordinates are `u0`, `u1`, ... (`x1_0` when the base ends in a
//! digit); bare `u` is the unexpanded variable. Derivatives are written
//! `du0#t`, `ddu0#t#t` or `d2u0#t2`. Opaque functions: `F(u0)`, `F'(u0)`,
//! `G{1,0}(t,u0)`, family members `xi[1](t,u0)`; antiderivatives
//! `Int(F,u0)`.

use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::Zero;

use super::{Expr, ExprError, JetVar, Q, EPS};

/// Names the parser needs to tell jet coordinates from plain symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Context {
    pub independents: Vec<String>,
    pub dependents: Vec<String>,
    pub constants: Vec<String>,
    /// Reject identifiers that are not declared.
    pub strict: bool,
}

impl Default for Context {
    fn default() -> Self {
        Context {
            independents: vec!["t".into()],
            dependents: vec!["u".into(), "v".into()],
            constants: Vec::new(),
            strict: false,
        }
    }
}

impl Context {
    pub fn new(independents: &[&str], dependents: &[&str]) -> Self {
        Context {
            independents: independents.iter().map(|s| s.to_string()).collect(),
            dependents: dependents.iter().map(|s| s.to_string()).collect(),
            constants: Vec::new(),
            strict: false,
        }
    }

    pub fn with_constants(mut self, constants: &[&str]) -> Self {
        self.constants = constants.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn strict(mut self) -> Self {
        self.strict = true;
        self
    }

    /// Resolve `u`, `u0`, `x1_0` style names.
    fn resolve_jet(&self, name: &str) -> Option<JetVar> {
        let mut best: Option<(&str, Option<u32>)> = None;
        for base in &self.dependents {
            if name == base {
                return Some(JetVar::new(base, None));
            }
            let Some(rest) = name.strip_prefix(base.as_str()) else {
                continue;
            };
            let digits = rest.strip_prefix('_').unwrap_or(rest);
            if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
                continue;
            }
            let Ok(k) = digits.parse::<u32>() else {
                continue;
            };
            if best.is_none_or(|(b, _)| base.len() > b.len()) {
                best = Some((base, Some(k)));
            }
        }
        best.map(|(b, k)| JetVar::new(b, k))
    }
}

/// Parse with the default context (independent `t`, dependents `u`, `v`).
pub fn parse(text: &str) -> Result<Expr, ExprError> {
    parse_with(text, &Context::default())
}

pub fn parse_with(text: &str, ctx: &Context) -> Result<Expr, ExprError> {
    let tokens = lex(text)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        ctx,
    };
    let e = p.expr()?;
    if p.pos < p.tokens.len() {
        return Err(p.error_here("unexpected trailing input"));
    }
    Ok(e)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(String),
    Ident(String, u32),
    Op(char),
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, ExprError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            if s.matches('.').count() > 1 {
                return Err(ExprError::Syntax {
                    line: l0,
                    column: c0,
                    message: format!("malformed number `{s}`"),
                });
            }
            col += i - start;
            out.push(Spanned {
                tok: Tok::Num(s),
                line: l0,
                column: c0,
            });
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '#') {
                i += 1;
            }
            let name: String = chars[start..i].iter().collect();
            let mut primes = 0;
            while i < chars.len() && chars[i] == '\'' {
                primes += 1;
                i += 1;
            }
            col += i - start;
            out.push(Spanned {
                tok: Tok::Ident(name, primes),
                line: l0,
                column: c0,
            });
            continue;
        }
        if "+-*/^(),[]{}".contains(c) {
            out.push(Spanned {
                tok: Tok::Op(c),
                line: l0,
                column: c0,
            });
            i += 1;
            col += 1;
            continue;
        }
        return Err(ExprError::Syntax {
            line: l0,
            column: c0,
            message: format!("unexpected character `{c}`"),
        });
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Spanned>,
    pos: usize,
    ctx: &'a Context,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|s| &s.tok)
    }

    fn error_at(&self, pos: usize, message: impl Into<String>) -> ExprError {
        let (line, column) = match self.tokens.get(pos) {
            Some(s) => (s.line, s.column),
            None => self
                .tokens
                .last()
                .map(|s| (s.line, s.column + 1))
                .unwrap_or((1, 1)),
        };
        ExprError::Syntax {
            line,
            column,
            message: message.into(),
        }
    }

    fn error_here(&self, message: impl Into<String>) -> ExprError {
        self.error_at(self.pos, message)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Op(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ExprError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error_here(format!("expected `{c}`")))
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut acc = self.term()?;
        loop {
            if self.eat('+') {
                acc = &acc + &self.term()?;
            } else if self.eat('-') {
                acc = &acc - &self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut acc = self.unary()?;
        loop {
            if self.eat('*') {
                acc = &acc * &self.unary()?;
            } else if self.eat('/') {
                let at = self.pos;
                let d = self.unary()?;
                if d.is_zero_literal() {
                    return Err(self.error_at(at, "division by zero"));
                }
                acc = &acc / &d;
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat('-') {
            return Ok(-self.unary()?);
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.primary()?;
        if self.eat('^') {
            let at = self.pos;
            let exp = self.unary()?;
            let Some(q) = exp.as_num() else {
                return Err(self.error_at(at, "exponent must be a rational constant"));
            };
            if base.is_zero_literal() && !num_traits::Signed::is_positive(q) {
                return Err(self.error_at(at, "division by zero"));
            }
            return Ok(base.pow(q));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        let at = self.pos;
        match self.peek().cloned() {
            Some(Tok::Num(s)) => {
                self.pos += 1;
                Ok(Expr::num(parse_decimal(&s)))
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(Tok::Ident(name, primes)) => {
                self.pos += 1;
                let is_call = matches!(self.peek(), Some(Tok::Op('(' | '[' | '{')));
                if is_call {
                    self.call(&name, primes, at)
                } else if primes > 0 {
                    Err(self.error_at(at, "primes are only allowed on function names"))
                } else {
                    self.identifier(&name, at)
                }
            }
            _ => Err(self.error_here("expected an expression")),
        }
    }

    fn integer(&mut self) -> Result<u32, ExprError> {
        match self.peek().cloned() {
            Some(Tok::Num(s)) if !s.contains('.') => {
                self.pos += 1;
                s.parse().map_err(|_| self.error_at(self.pos - 1, "index too large"))
            }
            _ => Err(self.error_here("expected a nonnegative integer")),
        }
    }

    fn family(&mut self) -> Result<Option<u32>, ExprError> {
        if self.eat('[') {
            let k = self.integer()?;
            self.expect(']')?;
            Ok(Some(k))
        } else {
            Ok(None)
        }
    }

    fn call(&mut self, name: &str, primes: u32, at: usize) -> Result<Expr, ExprError> {
        let family = self.family()?;
        let mut index = None;
        if self.eat('{') {
            let mut v = vec![self.integer()?];
            while self.eat(',') {
                v.push(self.integer()?);
            }
            self.expect('}')?;
            index = Some(v);
        }
        self.expect('(')?;
        if name == "Int" && primes == 0 && family.is_none() && index.is_none() {
            let fat = self.pos;
            let Some(Tok::Ident(fname, 0)) = self.peek().cloned() else {
                return Err(self.error_here("expected a function name"));
            };
            self.pos += 1;
            let ffam = self.family()?;
            self.expect(',')?;
            let arg = self.expr()?;
            self.expect(')')?;
            if fname.contains('#') {
                return Err(self.error_at(fat, "invalid function name"));
            }
            return Ok(Expr::antiderivative(&fname, ffam, arg));
        }
        let mut args = Vec::new();
        if !self.eat(')') {
            args.push(self.expr()?);
            while self.eat(',') {
                args.push(self.expr()?);
            }
            self.expect(')')?;
        }
        let plain = primes == 0 && family.is_none() && index.is_none();
        if plain && args.len() == 1 {
            let a = args[0].clone();
            match name {
                "sin" => return Ok(Expr::sin(a)),
                "cos" => return Ok(Expr::cos(a)),
                "exp" => return Ok(Expr::exp(a)),
                "log" => return Ok(Expr::log(a)),
                "sqrt" => return Ok(Expr::sqrt(a)),
                _ => {}
            }
        }
        if args.is_empty() {
            return Err(self.error_at(at, "function application needs arguments"));
        }
        let derivs = match (primes, index) {
            (0, None) => vec![0; args.len()],
            (n, None) => {
                if args.len() != 1 {
                    return Err(self.error_at(at, "primes need a unary function; use {..}"));
                }
                vec![n]
            }
            (0, Some(v)) => {
                if v.len() != args.len() {
                    return Err(self.error_at(at, "derivative index length must match arity"));
                }
                v
            }
            _ => return Err(self.error_at(at, "use either primes or {..}, not both")),
        };
        Ok(Expr::apply(name, family, derivs, args))
    }

    fn identifier(&mut self, name: &str, at: usize) -> Result<Expr, ExprError> {
        let ctx = self.ctx;
        if name == EPS
            || ctx.constants.iter().any(|c| c == name)
            || ctx.independents.iter().any(|c| c == name)
        {
            return Ok(Expr::sym(name));
        }
        if name.contains('#') {
            return self.derivative(name, at);
        }
        if let Some(j) = ctx.resolve_jet(name) {
            return Ok(Expr::jet(j));
        }
        if ctx.strict {
            return Err(ExprError::UnknownSymbol(name.to_string()));
        }
        Ok(Expr::sym(name))
    }

    fn derivative(&mut self, token: &str, at: usize) -> Result<Expr, ExprError> {
        let mut parts = token.split('#');
        let head = parts.next().unwrap_or_default();
        let vars: Vec<&str> = parts.collect();
        if vars.iter().any(|v| v.is_empty()) {
            return Err(self.error_at(at, "empty variable in derivative"));
        }
        let mut derivs: Vec<Arc<str>> = Vec::new();
        let core;
        let counted = head
            .strip_prefix('d')
            .filter(|r| r.starts_with(|c: char| c.is_ascii_digit()));
        if let Some(rest) = counted {
            let ndig = rest.bytes().take_while(|b| b.is_ascii_digit()).count();
            let n: usize = rest[..ndig]
                .parse()
                .map_err(|_| self.error_at(at, "bad derivative count"))?;
            core = &rest[ndig..];
            for v in &vars {
                let (var, count) = self.split_counted_var(v, at)?;
                derivs.extend(std::iter::repeat_n(Arc::<str>::from(var), count));
            }
            if derivs.len() != n {
                return Err(self.error_at(at, "derivative count does not match variables"));
            }
        } else {
            let m = vars.len();
            if head.len() < m || !head[..m].bytes().all(|b| b == b'd') {
                return Err(self.error_at(at, "derivative needs one leading `d` per variable"));
            }
            core = &head[m..];
            for v in &vars {
                if !self.ctx.independents.iter().any(|x| x == v) {
                    return Err(self.error_at(at, format!("unknown independent variable `{v}`")));
                }
                derivs.push(Arc::from(*v));
            }
        }
        let Some(j) = self.ctx.resolve_jet(core) else {
            return Err(self.error_at(at, format!("`{core}` is not a dependent variable")));
        };
        Ok(Expr::jet(j.with_derivs(&derivs)))
    }

    fn split_counted_var<'s>(&self, v: &'s str, at: usize) -> Result<(&'s str, usize), ExprError> {
        if self.ctx.independents.iter().any(|x| x == v) {
            return Ok((v, 1));
        }
        let nd = v.bytes().rev().take_while(|b| b.is_ascii_digit()).count();
        let (var, digits) = v.split_at(v.len() - nd);
        if nd == 0 || !self.ctx.independents.iter().any(|x| x == var) {
            return Err(self.error_at(at, format!("unknown independent variable `{v}`")));
        }
        let count = digits
            .parse()
            .map_err(|_| self.error_at(at, "bad derivative count"))?;
        Ok((var, count))
    }
}

fn parse_decimal(s: &str) -> Q {
    match s.split_once('.') {
        None => Q::from_integer(s.parse::<BigInt>().expect("digits")),
        Some((int, frac)) => {
            let int: BigInt = if int.is_empty() {
                BigInt::zero()
            } else {
                int.parse().expect("digits")
            };
            let scale = num_traits::pow(BigInt::from(10), frac.len());
            let frac: BigInt = if frac.is_empty() {
                BigInt::zero()
            } else {
                frac.parse().expect("digits")
            };
            Q::new(int * &scale + frac, scale)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oscillator_lagrangian_order_zero() {
        let e = parse("1/2*(du0#t^2 - u0^2)").unwrap();
        let u0 = Expr::coord("u", 0);
        let du0 = Expr::jet(JetVar::new("u", Some(0)).raised("t"));
        let expected = &(&du0.powi(2) - &u0.powi(2)) * &Expr::rational(1, 2);
        assert_eq!(e, expected);
    }

    #[test]
    fn zero_summand_dropped() {
        assert_eq!(parse("0*x + y").unwrap(), Expr::sym("y"));
    }

    #[test]
    fn derivative_spellings_agree() {
        let a = parse("ddu0#t#t").unwrap();
        let b = parse("d2u0#t2").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.as_jet().unwrap().derivs.len(), 2);
    }

    #[test]
    fn bases_ending_in_digits() {
        let ctx = Context::new(&["t"], &["x1", "y1"]);
        let e = parse_with("x1_0 + dx1_1#t + x1", &ctx).unwrap();
        let jets = e.jets();
        assert!(jets.contains(&JetVar::new("x1", Some(0))));
        assert!(jets.contains(&JetVar::new("x1", None)));
        assert!(jets.contains(&JetVar::new("x1", Some(1)).raised("t")));
    }

    #[test]
    fn decimals_are_exact() {
        assert_eq!(parse("0.25").unwrap(), Expr::rational(1, 4));
    }

    #[test]
    fn syntax_errors_carry_position() {
        match parse("u0 +\n  * 2") {
            Err(ExprError::Syntax { line, column, .. }) => assert_eq!((line, column), (2, 3)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse("sin(").is_err());
        assert!(parse("x^y").is_err());
    }

    #[test]
    fn strict_mode_rejects_unknown_names() {
        let ctx = Context::default().with_constants(&["alpha"]).strict();
        assert!(parse_with("alpha*u0", &ctx).is_ok());
        assert_eq!(
            parse_with("beta*u0", &ctx),
            Err(ExprError::UnknownSymbol("beta".into()))
        );
    }

    #[test]
    fn family_and_multi_index_functions() {
        let e = parse("xi[1]{0,1}(t,u0)").unwrap();
        match e.node() {
            super::super::Node::Apply(app) => {
                assert_eq!(app.family, Some(1));
                assert_eq!(app.derivs, vec![0, 1]);
            }
            _ => panic!("expected application"),
        }
        assert!(parse("F''(u0)").is_ok());
        assert!(parse("G'(t,u0)").is_err());
    }
}
