//! Recursive-descent parser for programs, tests, and the term extensions
//! (holes, prefixed indeterminates) used by proof scripts and systems.

use std::collections::HashMap;
use std::sync::Arc;

use thiserror::Error;

use super::lexer::{tokenize, Tok, Token};
use super::{Alphabet, AlphabetError, Expr, Sort, Test};
use crate::prob::Rat;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("undeclared identifier `{0}`")]
    Undeclared(String),
    #[error("identifier `{0}` is declared more than once")]
    DeclaredTwice(String),
    #[error("`{name}` is declared as {found:?} but used as {expected:?}")]
    WrongSort { name: String, expected: Sort, found: Sort },
    #[error("probability {0} is outside [0, 1]")]
    ProbOutOfRange(String),
    #[error("invalid declarations: {0}")]
    Alphabet(String),
}

/// Which extensions of the expression grammar are accepted.
#[derive(Debug, Clone, Copy, Default)]
pub struct TermMode {
    /// `_` as a primary.
    pub holes: bool,
    /// `g . x` at sequencing precedence.
    pub prefixes: bool,
}

/// A parsed expression possibly containing holes and prefixed
/// indeterminates. Fully closed subterms are collapsed into `Closed`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Term {
    Closed(Arc<Expr>),
    Hole,
    Prefix(Box<Term>, String),
    GuardedChoice(Box<Term>, Test, Box<Term>),
    Seq(Box<Term>, Box<Term>),
    GuardedLoop(Box<Term>, Test),
    ProbChoice(Box<Term>, Rat, Box<Term>),
    ProbLoop(Box<Term>, Rat),
}

impl Term {
    fn guarded(a: Term, b: Test, c: Term) -> Term {
        match (a, c) {
            (Term::Closed(x), Term::Closed(y)) => Term::Closed(Arc::new(Expr::GuardedChoice(x, b, y))),
            (a, c) => Term::GuardedChoice(Box::new(a), b, Box::new(c)),
        }
    }

    fn seq(a: Term, c: Term) -> Term {
        match (a, c) {
            (Term::Closed(x), Term::Closed(y)) => Term::Closed(Arc::new(Expr::Seq(x, y))),
            (a, c) => Term::Seq(Box::new(a), Box::new(c)),
        }
    }

    fn prob(a: Term, r: Rat, c: Term) -> Term {
        match (a, c) {
            (Term::Closed(x), Term::Closed(y)) => Term::Closed(Arc::new(Expr::ProbChoice(x, r, y))),
            (a, c) => Term::ProbChoice(Box::new(a), r, Box::new(c)),
        }
    }

    fn while_loop(a: Term, b: Test) -> Term {
        match a {
            Term::Closed(x) => Term::Closed(Arc::new(Expr::GuardedLoop(x, b))),
            a => Term::GuardedLoop(Box::new(a), b),
        }
    }

    fn prob_loop(a: Term, r: Rat) -> Term {
        match a {
            Term::Closed(x) => Term::Closed(Arc::new(Expr::ProbLoop(x, r))),
            a => Term::ProbLoop(Box::new(a), r),
        }
    }

    pub fn hole_count(&self) -> usize {
        match self {
            Term::Closed(_) => 0,
            Term::Hole => 1,
            Term::Prefix(t, _) | Term::GuardedLoop(t, _) | Term::ProbLoop(t, _) => t.hole_count(),
            Term::GuardedChoice(a, _, b) | Term::Seq(a, b) | Term::ProbChoice(a, _, b) => {
                a.hole_count() + b.hole_count()
            }
        }
    }

    /// Replaces every hole by `e`. Panics on prefixed indeterminates, which
    /// cannot occur when parsed without `prefixes`.
    pub fn fill(&self, e: &Arc<Expr>) -> Arc<Expr> {
        match self {
            Term::Closed(x) => x.clone(),
            Term::Hole => e.clone(),
            Term::Prefix(..) => panic!("prefixed indeterminate in a context"),
            Term::GuardedChoice(a, b, c) => Arc::new(Expr::GuardedChoice(a.fill(e), b.clone(), c.fill(e))),
            Term::Seq(a, c) => Arc::new(Expr::Seq(a.fill(e), c.fill(e))),
            Term::GuardedLoop(a, b) => Arc::new(Expr::GuardedLoop(a.fill(e), b.clone())),
            Term::ProbChoice(a, r, c) => Arc::new(Expr::ProbChoice(a.fill(e), r.clone(), c.fill(e))),
            Term::ProbLoop(a, r) => Arc::new(Expr::ProbLoop(a.fill(e), r.clone())),
        }
    }
}

/// Token cursor shared by the program, proof-script, and system parsers.
pub struct Parser {
    toks: Vec<Token>,
    pos: usize,
    alphabet: Alphabet,
    defs: HashMap<String, Arc<Expr>>,
}

impl Parser {
    pub fn new(src: &str) -> Result<Self, ParseError> {
        Ok(Parser { toks: tokenize(src)?, pos: 0, alphabet: Alphabet::default(), defs: HashMap::new() })
    }

    pub fn with_alphabet(src: &str, alphabet: Alphabet) -> Result<Self, ParseError> {
        Ok(Parser { toks: tokenize(src)?, pos: 0, alphabet, defs: HashMap::new() })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub(crate) fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    /// Makes `name` stand for `e` in later expressions. The name must not
    /// be declared in the alphabet or already defined.
    pub fn define(&mut self, name: String, e: Arc<Expr>) -> Result<(), ParseError> {
        if self.alphabet.sort_of(&name).is_some() || self.defs.contains_key(&name) {
            return Err(self.error(ParseErrorKind::DeclaredTwice(name)));
        }
        self.defs.insert(name, e);
        Ok(())
    }

    /// Line and column of the next token.
    pub fn position(&self) -> (usize, usize) {
        let t = &self.toks[self.pos];
        (t.line, t.col)
    }

    pub(crate) fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    pub fn error(&self, kind: ParseErrorKind) -> ParseError {
        let (line, col) = self.position();
        ParseError { line, col, kind }
    }

    pub fn syntax(&self, msg: impl Into<String>) -> ParseError {
        self.error(ParseErrorKind::Syntax(msg.into()))
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        self.syntax(format!("expected {wanted}, found {}", self.peek().describe()))
    }

    pub(crate) fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    pub(crate) fn expect(&mut self, tok: Tok, wanted: &str) -> Result<(), ParseError> {
        if self.eat(&tok) {
            Ok(())
        } else {
            Err(self.unexpected(wanted))
        }
    }

    pub fn expect_eof(&self) -> Result<(), ParseError> {
        if self.at_eof() {
            Ok(())
        } else {
            Err(self.unexpected("end of input"))
        }
    }

    pub fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.unexpected("an identifier")),
        }
    }

    /// Consumes `word` if it is the next identifier.
    pub fn eat_keyword(&mut self, word: &str) -> bool {
        if matches!(self.peek(), Tok::Ident(s) if s == word) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn nat(&mut self) -> Result<usize, ParseError> {
        match self.peek().clone() {
            Tok::Int(s) => {
                let n = s.parse().map_err(|_| self.syntax(format!("number `{s}` is too large")))?;
                self.bump();
                Ok(n)
            }
            _ => Err(self.unexpected("a number")),
        }
    }

    /// Parses the optional `tests`/`actions`/`outputs` declarations.
    pub fn header(&mut self) -> Result<Alphabet, ParseError> {
        let mut sections: [Option<Vec<String>>; 3] = [None, None, None];
        loop {
            let slot = match self.peek() {
                Tok::Ident(s) if s == "tests" => 0,
                Tok::Ident(s) if s == "actions" => 1,
                Tok::Ident(s) if s == "outputs" => 2,
                _ => break,
            };
            if sections[slot].is_some() {
                return Err(self.syntax("declaration section repeated"));
            }
            self.bump();
            let mut names = vec![self.ident()?];
            while self.eat(&Tok::Comma) {
                names.push(self.ident()?);
            }
            self.expect(Tok::Semi, "`;` after declarations")?;
            sections[slot] = Some(names);
        }
        let [t, a, o] = sections.map(Option::unwrap_or_default);
        let alphabet = Alphabet::new(t, a, o).map_err(|e| match e {
            AlphabetError::DeclaredTwice(n) => self.error(ParseErrorKind::DeclaredTwice(n)),
            other => self.error(ParseErrorKind::Alphabet(other.to_string())),
        })?;
        self.alphabet = alphabet.clone();
        Ok(alphabet)
    }

    fn check_sort(&self, name: &str, expected: Sort) -> Result<(), ParseError> {
        match self.alphabet.sort_of(name) {
            Some(found) if found == expected => Ok(()),
            Some(found) => Err(self.error(ParseErrorKind::WrongSort { name: name.to_string(), expected, found })),
            None => Err(self.error(ParseErrorKind::Undeclared(name.to_string()))),
        }
    }

    pub fn rat(&mut self) -> Result<Rat, ParseError> {
        let (line, col) = self.position();
        let text = match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                if self.eat(&Tok::Slash) {
                    match self.bump() {
                        Tok::Int(d) => format!("{n}/{d}"),
                        _ => {
                            return Err(ParseError {
                                line,
                                col,
                                kind: ParseErrorKind::Syntax("expected denominator".into()),
                            })
                        }
                    }
                } else {
                    n
                }
            }
            Tok::Decimal(d) => {
                self.bump();
                d
            }
            _ => return Err(self.unexpected("a probability")),
        };
        let r: Rat = text.parse().map_err(|_| ParseError {
            line,
            col,
            kind: ParseErrorKind::Syntax(format!("invalid rational `{text}`")),
        })?;
        if !r.is_probability() {
            return Err(ParseError { line, col, kind: ParseErrorKind::ProbOutOfRange(text) });
        }
        Ok(r)
    }

    pub fn test(&mut self) -> Result<Test, ParseError> {
        let mut b = self.test_and()?;
        while self.eat(&Tok::Bar) {
            b = Test::or(b, self.test_and()?);
        }
        Ok(b)
    }

    fn test_and(&mut self) -> Result<Test, ParseError> {
        let mut b = self.test_not()?;
        while self.eat(&Tok::Amp) {
            b = Test::and(b, self.test_not()?);
        }
        Ok(b)
    }

    fn test_not(&mut self) -> Result<Test, ParseError> {
        if self.eat(&Tok::Tilde) {
            return Ok(Test::not(self.test_not()?));
        }
        match self.peek().clone() {
            Tok::Int(n) if n == "0" => {
                self.bump();
                Ok(Test::Zero)
            }
            Tok::Int(n) if n == "1" => {
                self.bump();
                Ok(Test::One)
            }
            Tok::Ident(name) => {
                self.check_sort(&name, Sort::Test)?;
                self.bump();
                Ok(Test::Prim(name))
            }
            Tok::LParen => {
                self.bump();
                let b = self.test()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(b)
            }
            _ => Err(self.unexpected("a test")),
        }
    }

    /// Parses a full expression-level term.
    pub fn term(&mut self, mode: TermMode) -> Result<Term, ParseError> {
        let lhs = self.guarded_term(mode)?;
        if self.eat(&Tok::PlusBrace) {
            let r = self.rat()?;
            self.expect(Tok::RBrace, "`}`")?;
            let rhs = self.term(mode)?;
            return Ok(Term::prob(lhs, r, rhs));
        }
        Ok(lhs)
    }

    fn guarded_term(&mut self, mode: TermMode) -> Result<Term, ParseError> {
        let lhs = self.prefix_term(mode)?;
        if self.eat(&Tok::PlusBracket) {
            let b = self.test()?;
            self.expect(Tok::RBracket, "`]`")?;
            let rhs = self.guarded_term(mode)?;
            return Ok(Term::guarded(lhs, b, rhs));
        }
        Ok(lhs)
    }

    fn prefix_term(&mut self, mode: TermMode) -> Result<Term, ParseError> {
        let body = self.seq_term(mode)?;
        if mode.prefixes && self.eat(&Tok::Dot) {
            let x = self.ident()?;
            return Ok(Term::Prefix(Box::new(body), x));
        }
        Ok(body)
    }

    fn seq_term(&mut self, mode: TermMode) -> Result<Term, ParseError> {
        let lhs = self.postfix_term(mode)?;
        if self.eat(&Tok::Semi) {
            let rhs = self.seq_term(mode)?;
            return Ok(Term::seq(lhs, rhs));
        }
        Ok(lhs)
    }

    fn postfix_term(&mut self, mode: TermMode) -> Result<Term, ParseError> {
        let mut t = self.primary_term(mode)?;
        loop {
            if self.eat(&Tok::StarBracket) {
                let b = self.test()?;
                self.expect(Tok::RBracket, "`]`")?;
                t = Term::while_loop(t, b);
            } else if self.eat(&Tok::StarBrace) {
                let r = self.rat()?;
                self.expect(Tok::RBrace, "`}`")?;
                t = Term::prob_loop(t, r);
            } else {
                return Ok(t);
            }
        }
    }

    fn primary_term(&mut self, mode: TermMode) -> Result<Term, ParseError> {
        let closed = |e: Expr| Ok(Term::Closed(Arc::new(e)));
        match self.peek().clone() {
            Tok::Ident(w) if w == "ret" => {
                self.bump();
                let Tok::Ident(v) = self.peek().clone() else {
                    return Err(self.unexpected("an output name after `ret`"));
                };
                self.check_sort(&v, Sort::Output)?;
                self.bump();
                closed(Expr::Return(v))
            }
            Tok::Ident(name) => {
                match self.alphabet.sort_of(&name) {
                    Some(Sort::Action) => {}
                    Some(Sort::Test) => {}
                    Some(Sort::Output) => {
                        return Err(self.syntax(format!("output `{name}` must be written `ret {name}`")))
                    }
                    None => match self.defs.get(&name).cloned() {
                        Some(e) => {
                            self.bump();
                            return Ok(Term::Closed(e));
                        }
                        None => return Err(self.error(ParseErrorKind::Undeclared(name))),
                    },
                }
                self.bump();
                match self.alphabet.sort_of(&name) {
                    Some(Sort::Action) => closed(Expr::Act(name)),
                    _ => closed(Expr::Test(Test::Prim(name))),
                }
            }
            Tok::Int(n) if n == "0" => {
                self.bump();
                closed(Expr::Test(Test::Zero))
            }
            Tok::Int(n) if n == "1" => {
                self.bump();
                closed(Expr::Test(Test::One))
            }
            Tok::LParen => {
                self.bump();
                let t = self.term(mode)?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(t)
            }
            Tok::LBracket => {
                self.bump();
                let b = self.test()?;
                self.expect(Tok::RBracket, "`]`")?;
                closed(Expr::Test(b))
            }
            Tok::Underscore if mode.holes => {
                self.bump();
                Ok(Term::Hole)
            }
            _ => Err(self.unexpected("an expression")),
        }
    }

    /// Parses a closed expression.
    pub fn expr(&mut self) -> Result<Arc<Expr>, ParseError> {
        match self.term(TermMode::default())? {
            Term::Closed(e) => Ok(e),
            _ => unreachable!("closed mode produces closed terms"),
        }
    }
}

fn unwrap_arc(e: Arc<Expr>) -> Expr {
    Arc::try_unwrap(e).unwrap_or_else(|e| (*e).clone())
}

/// Parses a declarations header followed by one expression.
pub fn parse_program(text: &str) -> Result<(Alphabet, Expr), ParseError> {
    let mut p = Parser::new(text)?;
    let alphabet = p.header()?;
    let e = p.expr()?;
    p.expect_eof()?;
    Ok((alphabet, unwrap_arc(e)))
}

/// Parses a bare expression over a known alphabet.
pub fn parse_expr(text: &str, alphabet: &Alphabet) -> Result<Expr, ParseError> {
    let mut p = Parser::with_alphabet(text, alphabet.clone())?;
    let e = p.expr()?;
    p.expect_eof()?;
    Ok(unwrap_arc(e))
}

/// Parses a bare test over a known alphabet.
pub fn parse_test(text: &str, alphabet: &Alphabet) -> Result<Test, ParseError> {
    let mut p = Parser::with_alphabet(text, alphabet.clone())?;
    let b = p.test()?;
    p.expect_eof()?;
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_single_return() {
        let (_, e) = parse_program("outputs v; ret v").unwrap();
        assert_eq!(e, Expr::ret("v"));
    }

    #[test]
    fn parses_sequence() {
        let (_, e) = parse_program("actions p,q; p ; q").unwrap();
        assert_eq!(e, Expr::seq(Expr::act("p"), Expr::act("q")));
    }

    #[test]
    fn parses_three_sided_die() {
        let (_, e) = parse_program("outputs d1,d2,d3; (ret d1 +{1/3} (ret d2 +{1/2} ret d3))").unwrap();
        let inner = Expr::prob(Expr::ret("d2"), Rat::new(1, 2), Expr::ret("d3"));
        assert_eq!(e, Expr::prob(Expr::ret("d1"), Rat::new(1, 3), inner));
    }

    #[test]
    fn precedence_and_associativity() {
        let (a, e) = parse_program("tests t; actions p, q; p ; q +[t] p +{1/2} q *{0.5}").unwrap();
        let expected = Expr::prob(
            Expr::guarded(Expr::seq(Expr::act("p"), Expr::act("q")), Test::prim("t"), Expr::act("p")),
            Rat::half(),
            Expr::prob_loop(Expr::act("q"), Rat::half()),
        );
        assert_eq!(e, expected);
        let e2 = parse_expr("p ; q ; p", &a).unwrap();
        assert_eq!(e2, Expr::seq(Expr::act("p"), Expr::seq(Expr::act("q"), Expr::act("p"))));
        let b = parse_test("~t | t & 0", &a).unwrap();
        assert_eq!(b, Test::or(Test::not(Test::prim("t")), Test::and(Test::prim("t"), Test::Zero)));
    }

    #[test]
    fn bracketed_tests_in_expression_position() {
        let (_, e) = parse_program("tests t, u; [t & ~u] ; t").unwrap();
        assert_eq!(
            e,
            Expr::seq(Expr::test(Test::and(Test::prim("t"), Test::not(Test::prim("u")))), Expr::test(Test::prim("t")))
        );
    }

    #[test]
    fn error_kinds() {
        let kind = |s: &str| parse_program(s).unwrap_err().kind;
        assert!(matches!(kind("actions p; q"), ParseErrorKind::Undeclared(_)));
        assert!(matches!(kind("actions p; outputs p; p"), ParseErrorKind::DeclaredTwice(_)));
        assert!(matches!(kind("actions p; p +{3/2} p"), ParseErrorKind::ProbOutOfRange(_)));
        assert!(matches!(kind("actions p; p ;"), ParseErrorKind::Syntax(_)));
        assert!(matches!(kind("tests t; actions p; p *[p]"), ParseErrorKind::WrongSort { .. }));
        let err = parse_program("actions p;\np +{1/2}\n  q").unwrap_err();
        assert_eq!((err.line, err.col), (3, 3));
    }

    #[test]
    fn holes_and_prefixes_only_when_enabled() {
        let a = Alphabet::new(Vec::<&str>::new(), ["p"], Vec::<&str>::new()).unwrap();
        assert!(parse_expr("_ ; p", &a).is_err());
        let mut p = Parser::with_alphabet("_ ; p", a.clone()).unwrap();
        let t = p.term(TermMode { holes: true, prefixes: false }).unwrap();
        assert_eq!(t.hole_count(), 1);
        let filled = t.fill(&Arc::new(Expr::one()));
        assert_eq!(*filled, Expr::seq(Expr::one(), Expr::act("p")));
        let mut p = Parser::with_alphabet("p ; p . x +{1/2} 1", a).unwrap();
        let t = p.term(TermMode { holes: false, prefixes: true }).unwrap();
        assert!(matches!(t, Term::ProbChoice(ref lhs, _, _) if matches!(**lhs, Term::Prefix(_, ref x) if x == "x")));
    }
}
