//! Recursive descent parser for `.flp` programs and for the value
//! literals accepted by the command line `run` front end.

use crate::ast::*;
use crate::lexer::{lex, LexError, Tok, Token};
use crate::value::Value;
use std::collections::HashSet;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub span: Span,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.span, self.message)
    }
}

impl std::error::Error for ParseError {}

impl From<LexError> for ParseError {
    fn from(e: LexError) -> ParseError {
        ParseError { span: e.span, message: e.message }
    }
}

pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    let tokens = lex(src)?;
    let mut p = Parser { tokens, pos: 0 };
    let prog = p.program()?;
    check_unique_names(&prog)?;
    Ok(prog)
}

/// Parses a closed value: the pattern syntax without variables, extended
/// with integer literals for opaque Int values.
pub fn parse_value_literal(src: &str) -> Result<Value, ParseError> {
    let tokens = lex(src)?;
    let mut p = Parser { tokens, pos: 0 };
    let v = p.value_literal()?;
    p.expect(Tok::Eof)?;
    Ok(v)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn span(&self) -> Span {
        self.tokens[self.pos].span
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok) -> Result<Token, ParseError> {
        if *self.peek() == tok {
            Ok(self.bump())
        } else {
            Err(self.err(&format!("expected '{}', found '{}'", tok, self.peek())))
        }
    }

    fn err(&self, msg: &str) -> ParseError {
        ParseError { span: self.span(), message: msg.to_string() }
    }

    fn lower_ident(&mut self, what: &str) -> Result<Ident, ParseError> {
        match self.peek().clone() {
            Tok::Lower(name) => {
                let span = self.span();
                self.bump();
                Ok(Ident { name, span })
            }
            Tok::Underscore => Err(self.err("wildcard '_' is not allowed")),
            other => Err(self.err(&format!("expected {}, found '{}'", what, other))),
        }
    }

    fn upper_ident(&mut self, what: &str) -> Result<Ident, ParseError> {
        match self.peek().clone() {
            Tok::Upper(name) => {
                let span = self.span();
                if name == "Msg" {
                    return Err(self.err("'Msg' is a reserved word"));
                }
                self.bump();
                Ok(Ident { name, span })
            }
            other => Err(self.err(&format!("expected {}, found '{}'", what, other))),
        }
    }

    fn program(&mut self) -> Result<Program, ParseError> {
        let mut decls = Vec::new();
        loop {
            match self.peek() {
                Tok::Eof => break,
                Tok::KwData => decls.push(Decl::Data(self.data_decl()?)),
                Tok::KwExtern => decls.push(Decl::Extern(self.extern_decl()?)),
                Tok::KwFlip => decls.push(Decl::Flip(self.flip_decl()?)),
                other => {
                    return Err(self.err(&format!(
                        "expected 'data', 'extern' or 'flip', found '{}'",
                        other
                    )))
                }
            }
        }
        Ok(Program { decls })
    }

    fn data_decl(&mut self) -> Result<DataDecl, ParseError> {
        self.expect(Tok::KwData)?;
        let name = self.upper_ident("a data type name")?;
        if name.name == "Int" {
            return Err(ParseError {
                span: name.span,
                message: "'Int' conflicts with the built-in type".to_string(),
            });
        }
        let mut params = Vec::new();
        while let Tok::Lower(_) = self.peek() {
            params.push(self.lower_ident("a type parameter")?);
        }
        let mut seen = HashSet::new();
        for p in &params {
            if !seen.insert(p.name.clone()) {
                return Err(ParseError {
                    span: p.span,
                    message: format!("duplicate type parameter '{}'", p.name),
                });
            }
        }
        self.expect(Tok::Equals)?;
        let mut ctors = vec![self.ctor_decl()?];
        while *self.peek() == Tok::Pipe {
            self.bump();
            ctors.push(self.ctor_decl()?);
        }
        Ok(DataDecl { name, params, ctors })
    }

    fn ctor_decl(&mut self) -> Result<CtorDecl, ParseError> {
        let name = self.upper_ident("a constructor name")?;
        if name.name == "Int" {
            return Err(ParseError {
                span: name.span,
                message: "'Int' conflicts with the built-in type".to_string(),
            });
        }
        let mut args = Vec::new();
        while starts_atom_type(self.peek()) {
            args.push(self.atom_type()?);
        }
        Ok(CtorDecl { name, args })
    }

    fn extern_decl(&mut self) -> Result<ExternDecl, ParseError> {
        self.expect(Tok::KwExtern)?;
        let name = self.lower_ident("an extern name")?;
        self.expect(Tok::Colon)?;
        let domain = self.type_expr()?;
        self.expect(Tok::BiArrow)?;
        let codomain = self.type_expr()?;
        Ok(ExternDecl { name, domain, codomain })
    }

    fn flip_decl(&mut self) -> Result<FlipDef, ParseError> {
        self.expect(Tok::KwFlip)?;
        let name = self.lower_ident("a flippable name")?;
        let mut params = Vec::new();
        while *self.peek() == Tok::LParen {
            params.push(self.param()?);
        }
        let mut seen = HashSet::new();
        for p in &params {
            if !seen.insert(p.name.name.clone()) {
                return Err(ParseError {
                    span: p.name.span,
                    message: format!("duplicate parameter '{}'", p.name.name),
                });
            }
        }
        self.expect(Tok::Colon)?;
        let domain = self.type_expr()?;
        self.expect(Tok::BiArrow)?;
        let codomain = self.type_expr()?;
        self.expect(Tok::Equals)?;
        self.expect(Tok::LBrace)?;
        let mut branches = vec![self.branch()?];
        while *self.peek() == Tok::Semi {
            self.bump();
            branches.push(self.branch()?);
        }
        self.expect(Tok::RBrace)?;
        Ok(FlipDef { name, params, domain, codomain, branches, origin: None })
    }

    fn param(&mut self) -> Result<Param, ParseError> {
        self.expect(Tok::LParen)?;
        let name = self.lower_ident("a parameter name")?;
        self.expect(Tok::Colon)?;
        let first = self.type_expr()?;
        let sig = match self.peek() {
            Tok::Arrow => {
                self.bump();
                let dom = self.type_expr()?;
                self.expect(Tok::BiArrow)?;
                let cod = self.type_expr()?;
                ParamSig::Indexed(first, dom, cod)
            }
            Tok::BiArrow => {
                self.bump();
                let cod = self.type_expr()?;
                ParamSig::Flippable(first, cod)
            }
            other => {
                return Err(self.err(&format!("expected '<->' or '->', found '{}'", other)))
            }
        };
        self.expect(Tok::RParen)?;
        Ok(Param { name, sig })
    }

    fn branch(&mut self) -> Result<Branch, ParseError> {
        let span = self.span();
        let lhs = self.pattern()?;
        check_pattern_vars(&lhs)?;
        self.expect(Tok::BiArrow)?;
        let mut steps = Vec::new();
        loop {
            let p = self.pattern()?;
            check_pattern_vars(&p)?;
            if *self.peek() == Tok::Lt {
                self.bump();
                let fexpr = self.fexpr()?;
                self.expect(Tok::Gt)?;
                let into = self.pattern()?;
                check_pattern_vars(&into)?;
                self.expect(Tok::BiArrow)?;
                steps.push(Step { out: p, fexpr, into });
            } else {
                return Ok(Branch { lhs, steps, rhs: p, span });
            }
        }
    }

    fn pattern(&mut self) -> Result<Pattern, ParseError> {
        match self.peek().clone() {
            Tok::Lower(name) => {
                let span = self.span();
                self.bump();
                Ok(Pattern::Var(Ident { name, span }))
            }
            Tok::Underscore => Err(self.err("wildcard '_' is not allowed in patterns")),
            Tok::IntLit(_) => {
                Err(self.err("integer literals are not allowed in patterns"))
            }
            Tok::LParen => {
                self.bump();
                if let Tok::Upper(_) = self.peek() {
                    let name = self.upper_ident("a constructor name")?;
                    let mut args = Vec::new();
                    while starts_pattern(self.peek()) {
                        args.push(self.pattern()?);
                    }
                    self.expect(Tok::RParen)?;
                    Ok(Pattern::Ctor(name, args))
                } else {
                    let a = self.pattern()?;
                    self.expect(Tok::Comma)?;
                    let b = self.pattern()?;
                    self.expect(Tok::RParen)?;
                    Ok(Pattern::pair(a, b))
                }
            }
            other => Err(self.err(&format!("expected a pattern, found '{}'", other))),
        }
    }

    fn fexpr(&mut self) -> Result<FExpr, ParseError> {
        let mut e = self.fatom()?;
        while starts_fatom(self.peek()) {
            let arg = self.fatom()?;
            e = FExpr::app(e, arg);
        }
        Ok(e)
    }

    fn fatom(&mut self) -> Result<FExpr, ParseError> {
        match self.peek().clone() {
            Tok::Lower(name) => {
                let span = self.span();
                self.bump();
                Ok(FExpr::Ref(Ident { name, span }))
            }
            Tok::KwFlip => {
                self.bump();
                let inner = self.fatom()?;
                Ok(FExpr::flip(inner))
            }
            Tok::LParen => {
                self.bump();
                let e = self.fexpr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            other => Err(self.err(&format!("expected a flippable expression, found '{}'", other))),
        }
    }

    fn type_expr(&mut self) -> Result<TypeExpr, ParseError> {
        let span = self.span();
        let first = self.atom_type()?;
        let mut args = Vec::new();
        while starts_atom_type(self.peek()) {
            args.push(self.atom_type()?);
        }
        if args.is_empty() {
            return Ok(first);
        }
        match first {
            TypeExpr::Named(id, mut existing) => {
                existing.extend(args);
                Ok(TypeExpr::Named(id, existing))
            }
            TypeExpr::Var(id) => Ok(TypeExpr::Named(id, args)),
            _ => Err(ParseError {
                span,
                message: "this type cannot be applied to arguments".to_string(),
            }),
        }
    }

    fn atom_type(&mut self) -> Result<TypeExpr, ParseError> {
        match self.peek().clone() {
            Tok::Lower(name) => {
                let span = self.span();
                self.bump();
                Ok(TypeExpr::Var(Ident { name, span }))
            }
            Tok::Upper(name) => {
                let span = self.span();
                self.bump();
                match name.as_str() {
                    "Msg" => Ok(TypeExpr::Msg),
                    "Int" => Ok(TypeExpr::Int),
                    _ => Ok(TypeExpr::Named(Ident { name, span }, Vec::new())),
                }
            }
            Tok::LParen => {
                self.bump();
                let t = self.type_expr()?;
                if *self.peek() == Tok::Comma {
                    self.bump();
                    let u = self.type_expr()?;
                    self.expect(Tok::RParen)?;
                    Ok(TypeExpr::pair(t, u))
                } else {
                    self.expect(Tok::RParen)?;
                    Ok(t)
                }
            }
            other => Err(self.err(&format!("expected a type, found '{}'", other))),
        }
    }

    fn value_literal(&mut self) -> Result<Value, ParseError> {
        match self.peek().clone() {
            Tok::IntLit(n) => {
                self.bump();
                Ok(Value::Int(n))
            }
            Tok::LParen => {
                self.bump();
                if let Tok::Upper(_) = self.peek() {
                    let name = self.upper_ident("a constructor name")?;
                    let mut args = Vec::new();
                    while matches!(self.peek(), Tok::IntLit(_) | Tok::LParen) {
                        args.push(self.value_literal()?);
                    }
                    self.expect(Tok::RParen)?;
                    Ok(Value::Ctor(name.name, args))
                } else {
                    let a = self.value_literal()?;
                    self.expect(Tok::Comma)?;
                    let b = self.value_literal()?;
                    self.expect(Tok::RParen)?;
                    Ok(Value::pair(a, b))
                }
            }
            other => Err(self.err(&format!("expected a value literal, found '{}'", other))),
        }
    }
}

fn starts_pattern(tok: &Tok) -> bool {
    matches!(tok, Tok::Lower(_) | Tok::LParen | Tok::Underscore | Tok::IntLit(_))
}

fn starts_fatom(tok: &Tok) -> bool {
    matches!(tok, Tok::Lower(_) | Tok::KwFlip | Tok::LParen)
}

fn starts_atom_type(tok: &Tok) -> bool {
    matches!(tok, Tok::Lower(_) | Tok::Upper(_) | Tok::LParen)
}

/// Repeated variables inside one pattern drop information and are
/// rejected before the checker ever sees them.
fn check_pattern_vars(p: &Pattern) -> Result<(), ParseError> {
    let mut seen: HashSet<&str> = HashSet::new();
    for v in p.vars() {
        if !seen.insert(v.name.as_str()) {
            return Err(ParseError {
                span: v.span,
                message: format!("variable '{}' occurs twice in one pattern", v.name),
            });
        }
    }
    Ok(())
}

pub(crate) fn check_unique_names(prog: &Program) -> Result<(), ParseError> {
    let mut taken: HashSet<String> = HashSet::new();
    taken.insert("Msg".to_string());
    taken.insert("Int".to_string());
    let claim = |id: &Ident, taken: &mut HashSet<String>| -> Result<(), ParseError> {
        if !taken.insert(id.name.clone()) {
            Err(ParseError {
                span: id.span,
                message: format!("duplicate top-level name '{}'", id.name),
            })
        } else {
            Ok(())
        }
    };
    for d in &prog.decls {
        match d {
            Decl::Data(dd) => {
                claim(&dd.name, &mut taken)?;
                for c in &dd.ctors {
                    claim(&c.name, &mut taken)?;
                }
            }
            Decl::Extern(e) => claim(&e.name, &mut taken)?,
            Decl::Flip(f) => claim(&f.name, &mut taken)?,
        }
    }
    Ok(())
}
