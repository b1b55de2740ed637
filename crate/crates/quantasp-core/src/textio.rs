//! Concrete syntax for quantified programs.
//!
//! A document is a sequence of sections introduced by directive lines
//! `%@exists`, `%@forall`, and (optionally, last) `%@constraint`. Each
//! section body is a plain propositional program: `h :- l1, ..., lk.`,
//! facts `h.`, constraints `:- l1, ..., lk.`, and choices
//! `{a1;...;am} :- body.` with `not` for negation. `%` starts a comment
//! unless the line is a directive. Atom ids are assigned in first-occurrence
//! order, so rendering and re-parsing reproduces the same ids.

use std::fmt;

use crate::model::{
    is_reserved_name, Head, Literal, ModelError, Program, QuantifiedProgram, Quantifier, Rule,
    SymbolTable,
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        ParseError { line, column, message: message.into() }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)
    }
}

impl std::error::Error for ParseError {}

#[derive(Copy, Clone, PartialEq, Eq, Debug)]
enum Marker {
    Exists,
    Forall,
    Constraint,
}

struct Section {
    marker: Marker,
    line: usize,
    text: String,
    start_line: usize,
}

/// Split the document on directive lines. Comments are stripped here; rule
/// text keeps its line structure so token positions stay accurate.
fn split_sections(input: &str) -> Result<Vec<Section>, ParseError> {
    let mut sections: Vec<Section> = Vec::new();
    for (idx, raw_line) in input.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw_line.strip_suffix('\r').unwrap_or(raw_line);
        let trimmed = line.trim_start();
        if let Some(rest) = trimmed.strip_prefix("%@") {
            let word = rest.trim();
            let marker = match word {
                "exists" => Marker::Exists,
                "forall" => Marker::Forall,
                "constraint" => Marker::Constraint,
                other => {
                    let col = line.len() - trimmed.len() + 1;
                    return Err(ParseError::new(
                        lineno,
                        col,
                        format!("unknown directive `%@{other}`"),
                    ));
                }
            };
            sections.push(Section {
                marker,
                line: lineno,
                text: String::new(),
                start_line: lineno + 1,
            });
            continue;
        }
        let content = match line.find('%') {
            Some(pos) => &line[..pos],
            None => line,
        };
        match sections.last_mut() {
            Some(section) => {
                section.text.push_str(content);
                section.text.push('\n');
            }
            None => {
                if !content.trim().is_empty() {
                    let col = line.len() - line.trim_start().len() + 1;
                    return Err(ParseError::new(lineno, col, "text before first section directive"));
                }
            }
        }
    }
    Ok(sections)
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Token {
    Ident(String),
    Not,
    If,        // :-
    Dot,
    Comma,
    Semicolon,
    LBrace,
    RBrace,
}

struct Tokenizer<'a> {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    col: usize,
    _source: &'a str,
}

impl<'a> Tokenizer<'a> {
    fn new(source: &'a str, start_line: usize) -> Self {
        Tokenizer {
            chars: source.chars().collect(),
            pos: 0,
            line: start_line,
            col: 1,
            _source: source,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn next_token(&mut self) -> Result<Option<(Token, usize, usize)>, ParseError> {
        while matches!(self.peek(), Some(c) if c.is_whitespace()) {
            self.bump();
        }
        let (line, col) = (self.line, self.col);
        let c = match self.peek() {
            Some(c) => c,
            None => return Ok(None),
        };
        let token = match c {
            '.' => {
                self.bump();
                Token::Dot
            }
            ',' => {
                self.bump();
                Token::Comma
            }
            ';' => {
                self.bump();
                Token::Semicolon
            }
            '{' => {
                self.bump();
                Token::LBrace
            }
            '}' => {
                self.bump();
                Token::RBrace
            }
            ':' => {
                self.bump();
                if self.peek() == Some('-') {
                    self.bump();
                    Token::If
                } else {
                    return Err(ParseError::new(line, col, "expected `:-`"));
                }
            }
            c if c.is_ascii_lowercase() || c == '_' => {
                let mut name = String::new();
                while let Some(c) = self.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' || c == '(' || c == ')' {
                        name.push(c);
                        self.bump();
                    } else {
                        break;
                    }
                }
                if name == "not" {
                    Token::Not
                } else {
                    Token::Ident(name)
                }
            }
            other => {
                return Err(ParseError::new(line, col, format!("unexpected character `{other}`")));
            }
        };
        Ok(Some((token, line, col)))
    }
}

struct RuleParser<'a> {
    tokens: Vec<(Token, usize, usize)>,
    pos: usize,
    symbols: &'a mut SymbolTable,
    end_line: usize,
}

impl<'a> RuleParser<'a> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(t, _, _)| t)
    }

    fn here(&self) -> (usize, usize) {
        self.tokens
            .get(self.pos)
            .map(|&(_, l, c)| (l, c))
            .unwrap_or((self.end_line, 1))
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).map(|(t, _, _)| t.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, expected: &Token, what: &str) -> Result<(), ParseError> {
        let (line, col) = self.here();
        match self.bump() {
            Some(ref t) if t == expected => Ok(()),
            _ => Err(ParseError::new(line, col, format!("expected {what}"))),
        }
    }

    fn atom(&mut self) -> Result<crate::model::Atom, ParseError> {
        let (line, col) = self.here();
        match self.bump() {
            Some(Token::Ident(name)) => {
                if is_reserved_name(&name) {
                    return Err(ParseError::new(
                        line,
                        col,
                        format!("atom `{name}` uses a reserved prefix"),
                    ));
                }
                Ok(self.symbols.intern(&name))
            }
            _ => Err(ParseError::new(line, col, "expected atom")),
        }
    }

    fn literal(&mut self) -> Result<Literal, ParseError> {
        if self.peek() == Some(&Token::Not) {
            self.bump();
            Ok(Literal::neg(self.atom()?))
        } else {
            Ok(Literal::pos(self.atom()?))
        }
    }

    fn body(&mut self) -> Result<Vec<Literal>, ParseError> {
        let mut body = vec![self.literal()?];
        while self.peek() == Some(&Token::Comma) {
            self.bump();
            body.push(self.literal()?);
        }
        Ok(body)
    }

    fn rule(&mut self) -> Result<Rule, ParseError> {
        let head = match self.peek() {
            Some(Token::If) => {
                self.bump();
                let body = self.body()?;
                self.expect(&Token::Dot, "`.`")?;
                return Ok(Rule::constraint(body));
            }
            Some(Token::LBrace) => {
                self.bump();
                let mut atoms = vec![self.atom()?];
                while self.peek() == Some(&Token::Semicolon) {
                    self.bump();
                    atoms.push(self.atom()?);
                }
                self.expect(&Token::RBrace, "`}`")?;
                Head::Choice(atoms)
            }
            _ => Head::Atom(self.atom()?),
        };
        match self.peek() {
            Some(Token::Dot) => {
                self.bump();
                Ok(match head {
                    Head::Atom(a) => Rule::normal(a, vec![]),
                    Head::Choice(atoms) => Rule::choice(atoms, vec![]),
                    Head::None => unreachable!(),
                })
            }
            Some(Token::If) => {
                self.bump();
                let body = self.body()?;
                self.expect(&Token::Dot, "`.`")?;
                Ok(match head {
                    Head::Atom(a) => Rule::normal(a, body),
                    Head::Choice(atoms) => Rule::choice(atoms, body),
                    Head::None => unreachable!(),
                })
            }
            _ => {
                let (line, col) = self.here();
                Err(ParseError::new(line, col, "expected `.` or `:-`"))
            }
        }
    }

    fn rules(&mut self) -> Result<Vec<Rule>, ParseError> {
        let mut rules = Vec::new();
        while self.peek().is_some() {
            rules.push(self.rule()?);
        }
        Ok(rules)
    }
}

fn parse_rules(
    text: &str,
    start_line: usize,
    symbols: &mut SymbolTable,
) -> Result<Vec<Rule>, ParseError> {
    let mut tokenizer = Tokenizer::new(text, start_line);
    let mut tokens = Vec::new();
    while let Some(t) = tokenizer.next_token()? {
        tokens.push(t);
    }
    let end_line = tokenizer.line;
    let mut parser = RuleParser { tokens, pos: 0, symbols, end_line };
    parser.rules()
}

/// Parse a quantified program. The constraint section must be last and at
/// most one; an absent section denotes an empty constraint program.
pub fn parse(input: &str) -> Result<QuantifiedProgram, ParseError> {
    let sections = split_sections(input)?;
    let mut symbols = SymbolTable::new();
    let mut levels = Vec::new();
    let mut constraint: Option<Vec<Rule>> = None;
    for section in &sections {
        if constraint.is_some() {
            return Err(ParseError::new(
                section.line,
                1,
                "constraint section must be the last section",
            ));
        }
        let rules = parse_rules(&section.text, section.start_line, &mut symbols)?;
        match section.marker {
            Marker::Exists => levels.push((Quantifier::Exists, rules)),
            Marker::Forall => levels.push((Quantifier::Forall, rules)),
            Marker::Constraint => constraint = Some(rules),
        }
    }
    QuantifiedProgram::new(levels, constraint.unwrap_or_default(), symbols).map_err(|e| {
        let last = input.lines().count().max(1);
        match e {
            ModelError::EmptyQuantifierList => {
                ParseError::new(1, 1, "no quantified section before the constraint section")
            }
            ModelError::UnstratifiedConstraint => {
                ParseError::new(last, 1, "constraint section is not stratified")
            }
            other => ParseError::new(last, 1, other.to_string()),
        }
    })
}

pub fn render_literal(lit: Literal, symbols: &SymbolTable) -> String {
    if lit.positive {
        symbols.name(lit.atom).to_string()
    } else {
        format!("not {}", symbols.name(lit.atom))
    }
}

pub fn render_rule(rule: &Rule, symbols: &SymbolTable) -> String {
    let head = match &rule.head {
        Head::Atom(a) => symbols.name(*a).to_string(),
        Head::Choice(atoms) => {
            let names: Vec<&str> = atoms.iter().map(|&a| symbols.name(a)).collect();
            format!("{{{}}}", names.join(";"))
        }
        Head::None => String::new(),
    };
    let body = rule
        .body
        .iter()
        .map(|&l| render_literal(l, symbols))
        .collect::<Vec<_>>()
        .join(", ");
    match (head.is_empty(), body.is_empty()) {
        (true, _) => format!(":- {body}."),
        (false, true) => format!("{head}."),
        (false, false) => format!("{head} :- {body}."),
    }
}

pub fn render_program(program: &Program) -> String {
    let mut out = String::new();
    for rule in &program.rules {
        out.push_str(&render_rule(rule, &program.symbols));
        out.push('\n');
    }
    out
}

/// Canonical text form; `parse(render(qp))` is structurally identical to
/// `qp`. Emits LF line endings.
pub fn render(qp: &QuantifiedProgram) -> String {
    let mut out = String::new();
    for (quantifier, rules) in &qp.levels {
        out.push_str(match quantifier {
            Quantifier::Exists => "%@exists\n",
            Quantifier::Forall => "%@forall\n",
        });
        for rule in rules {
            out.push_str(&render_rule(rule, &qp.symbols));
            out.push('\n');
        }
    }
    out.push_str("%@constraint\n");
    for rule in &qp.constraint {
        out.push_str(&render_rule(rule, &qp.symbols));
        out.push('\n');
    }
    out
}

/// Structural equality by atom name: same sections, same rule lists, with
/// atoms compared through their printed names rather than their ids.
pub fn structurally_equal(a: &QuantifiedProgram, b: &QuantifiedProgram) -> bool {
    render(a) == render(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    const APPENDIX_C: &str = "\
%@exists
{a;b}.
:- a, not b.
%@forall
c :- not a, not b.
d :- a, b.
{e}.
%@constraint
:- e, c.
:- e, d.
";

    #[test]
    fn parses_three_section_program() {
        let qp = parse(APPENDIX_C).unwrap();
        assert_eq!(qp.level_count(), 2);
        assert_eq!(qp.quantifier(1), Quantifier::Exists);
        assert_eq!(qp.quantifier(2), Quantifier::Forall);
        assert_eq!(qp.levels[0].1.len(), 2);
        assert_eq!(qp.levels[1].1.len(), 3);
        assert_eq!(qp.constraint.len(), 2);
        // first-occurrence ids
        assert_eq!(qp.symbols.lookup("a").unwrap().index(), 0);
        assert_eq!(qp.symbols.lookup("b").unwrap().index(), 1);
        assert_eq!(qp.symbols.lookup("c").unwrap().index(), 2);
    }

    #[test]
    fn single_level_empty_constraint() {
        let qp = parse("%@exists\na.\n%@constraint\n").unwrap();
        assert_eq!(qp.level_count(), 1);
        assert!(qp.constraint.is_empty());
        assert_eq!(qp.levels[0].1, vec![Rule::fact(qp.symbols.lookup("a").unwrap())]);
    }

    #[test]
    fn constraint_section_may_be_absent() {
        let qp = parse("%@forall\n{x}.\n").unwrap();
        assert_eq!(qp.level_count(), 1);
        assert!(qp.constraint.is_empty());
    }

    #[test]
    fn odd_loop_level_with_stratified_constraint() {
        let qp = parse("%@exists\np :- not p.\n%@constraint\n:- q.\n").unwrap();
        let roundtrip = parse(&render(&qp)).unwrap();
        assert!(structurally_equal(&qp, &roundtrip));
        let q = qp.symbols.lookup("q").unwrap();
        assert!(qp.levels[0].1.iter().all(|r| !r.body.iter().any(|l| l.atom == q)));
    }

    #[test]
    fn rejects_reserved_prefixes() {
        let err = parse("%@exists\n_na_a.\n").unwrap_err();
        assert!(err.message.contains("reserved"));
        assert_eq!(err.line, 2);
    }

    #[test]
    fn rejects_unstratified_constraint_section() {
        let err = parse("%@exists\na.\n%@constraint\nq :- not q.\n").unwrap_err();
        assert!(err.message.contains("stratified"));
    }

    #[test]
    fn rejects_empty_quantifier_list() {
        let err = parse("%@constraint\n:- a.\n").unwrap_err();
        assert!(err.message.contains("no quantified section"));
    }

    #[test]
    fn rejects_text_before_first_section() {
        let err = parse("a.\n%@exists\nb.\n").unwrap_err();
        assert_eq!(err.line, 1);
    }

    #[test]
    fn rejects_misplaced_constraint_section() {
        let err = parse("%@exists\na.\n%@constraint\n%@forall\nb.\n").unwrap_err();
        assert!(err.message.contains("last"));
    }

    #[test]
    fn errors_carry_positions() {
        let err = parse("%@exists\na :- , b.\n").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(err.column > 1);
    }

    #[test]
    fn parenthesized_constant_labels() {
        let qp = parse("%@forall\n{a(1);a(2)}.\n:- a(1), a(2).\n%@constraint\n").unwrap();
        assert!(qp.symbols.lookup("a(1)").is_some());
        assert!(qp.symbols.lookup("a(2)").is_some());
    }

    #[test]
    fn crlf_accepted_lf_emitted() {
        let qp = parse("%@exists\r\na.\r\n%@constraint\r\n:- a.\r\n").unwrap();
        let text = render(&qp);
        assert!(!text.contains('\r'));
        assert!(structurally_equal(&qp, &parse(&text).unwrap()));
    }

    #[test]
    fn render_parse_fixpoint_on_worked_example() {
        let qp = parse(APPENDIX_C).unwrap();
        let once = render(&qp);
        let twice = render(&parse(&once).unwrap());
        assert_eq!(once, twice);
    }

    #[test]
    fn renders_reserved_names_from_desugaring() {
        let qp = parse("%@exists\n{a}.\n%@constraint\n").unwrap();
        let desugared = qp.level_program(1).desugar();
        let text = render_program(&desugared);
        assert!(text.contains("_na_a"));
    }

    #[test]
    fn comments_are_ignored() {
        let qp = parse("%@exists\n% a comment\na. % trailing\n%@constraint\n").unwrap();
        assert_eq!(qp.levels[0].1.len(), 1);
    }
}
