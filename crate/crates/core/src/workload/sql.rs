//! Parser for the conjunctive select-project-join subset:
//!
//! ```text
//! SELECT <ignored> FROM t1 [AS] a1, t2 a2, ...
//! [WHERE cond AND cond ...] [;]
//! cond := colref = colref            -- join, discarded
//!       | colref <op> literal        -- filter
//!       | literal <op> colref        -- filter, operator mirrored
//! ```
//!
//! Anything else (OR, NOT, LIKE, IN, IS NULL, BETWEEN, parentheses in WHERE,
//! subqueries) is rejected with the offending token and its byte offset.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CompareOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CompareOp {
    /// The operator with its operands swapped: `c < x` is `x > c`.
    pub fn mirrored(self) -> Self {
        match self {
            CompareOp::Eq | CompareOp::Ne => self,
            CompareOp::Lt => CompareOp::Gt,
            CompareOp::Le => CompareOp::Ge,
            CompareOp::Gt => CompareOp::Lt,
            CompareOp::Ge => CompareOp::Le,
        }
    }

    pub fn holds(self, ord: std::cmp::Ordering) -> bool {
        use std::cmp::Ordering::*;
        match self {
            CompareOp::Eq => ord == Equal,
            CompareOp::Ne => ord != Equal,
            CompareOp::Lt => ord == Less,
            CompareOp::Le => ord != Greater,
            CompareOp::Gt => ord == Greater,
            CompareOp::Ge => ord != Less,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CompareOp::Eq => "=",
            CompareOp::Ne => "<>",
            CompareOp::Lt => "<",
            CompareOp::Le => "<=",
            CompareOp::Gt => ">",
            CompareOp::Ge => ">=",
        }
    }
}

impl fmt::Display for CompareOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Literal {
    Int(i64),
    Float(f64),
    Text(String),
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Int(v) => write!(f, "{v}"),
            Literal::Float(v) => write!(f, "{v:?}"),
            Literal::Text(s) => write!(f, "'{}'", s.replace('\'', "''")),
        }
    }
}

/// `table.column <op> constant`, with `table` already resolved from any alias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterPredicate {
    pub table: String,
    pub column: String,
    pub op: CompareOp,
    pub constant: Literal,
}

impl fmt::Display for FilterPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{} {} {}", self.table, self.column, self.op, self.constant)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JoinCondition {
    pub left: (String, String),
    pub right: (String, String),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParsedQuery {
    /// Table names in FROM order.
    pub tables: Vec<String>,
    /// Equi-joins; recognized so they can be ignored.
    pub joins: Vec<JoinCondition>,
    pub filters: Vec<FilterPredicate>,
}

impl ParsedQuery {
    pub fn filters_for<'a>(&'a self, table: &'a str) -> impl Iterator<Item = &'a FilterPredicate> + 'a {
        self.filters.iter().filter(move |f| f.table == table)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    Str(String),
    Sym(&'static str),
}

impl Tok {
    fn text(&self) -> String {
        match self {
            Tok::Ident(s) | Tok::Number(s) => s.clone(),
            Tok::Str(s) => format!("'{s}'"),
            Tok::Sym(s) => (*s).to_string(),
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self, Tok::Ident(s) if s.eq_ignore_ascii_case(kw))
    }
}

const REJECTED_KEYWORDS: &[&str] = &[
    "OR", "NOT", "LIKE", "ILIKE", "IN", "IS", "BETWEEN", "EXISTS", "GROUP", "ORDER", "HAVING", "LIMIT",
    "UNION", "JOIN", "ON", "SELECT", "NULL",
];

const RESERVED: &[&str] = &["SELECT", "FROM", "WHERE", "AND", "AS"];

fn parse_err(message: impl Into<String>, token: impl Into<String>, position: usize) -> Error {
    Error::Parse {
        message: message.into(),
        token: token.into(),
        position,
    }
}

fn tokenize(sql: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = sql.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let start = i;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_alphabetic() || c == '_' {
            while i < bytes.len() && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(sql[start..i].to_string()), start));
        } else if c.is_ascii_digit()
            || (c == '-' && bytes.get(i + 1).is_some_and(|b| b.is_ascii_digit() || *b == b'.'))
            || (c == '.' && bytes.get(i + 1).is_some_and(|b| b.is_ascii_digit()))
        {
            i += 1;
            while i < bytes.len() {
                let d = bytes[i] as char;
                let exp_sign = (d == '-' || d == '+') && matches!(bytes[i - 1], b'e' | b'E');
                if d.is_ascii_digit() || d == '.' || d == 'e' || d == 'E' || exp_sign {
                    i += 1;
                } else {
                    break;
                }
            }
            out.push((Tok::Number(sql[start..i].to_string()), start));
        } else if c == '\'' {
            let mut text = String::new();
            i += 1;
            loop {
                match sql[i..].chars().next() {
                    None => return Err(parse_err("unterminated string literal", &sql[start..], start)),
                    Some('\'') if bytes.get(i + 1) == Some(&b'\'') => {
                        text.push('\'');
                        i += 2;
                    }
                    Some('\'') => {
                        i += 1;
                        break;
                    }
                    Some(ch) => {
                        text.push(ch);
                        i += ch.len_utf8();
                    }
                }
            }
            out.push((Tok::Str(text), start));
        } else {
            let two = sql.get(i..i + 2).unwrap_or("");
            let (sym, len): (&'static str, usize) = match two {
                "<>" | "!=" => ("<>", 2),
                "<=" => ("<=", 2),
                ">=" => (">=", 2),
                _ => match c {
                    ',' => (",", 1),
                    '.' => (".", 1),
                    '=' => ("=", 1),
                    '<' => ("<", 1),
                    '>' => (">", 1),
                    ';' => (";", 1),
                    '*' => ("*", 1),
                    '(' => ("(", 1),
                    ')' => (")", 1),
                    _ => {
                        let ch = sql[i..].chars().next().unwrap_or(c);
                        return Err(parse_err("unexpected character", ch.to_string(), i));
                    }
                },
            };
            i += len;
            out.push((Tok::Sym(sym), start));
        }
    }
    Ok(out)
}

enum Operand {
    Column { qualifier: Option<String>, column: String, pos: usize },
    Literal(Literal),
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(_, p)| *p)
    }

    fn next(&mut self) -> Option<(Tok, usize)> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn unexpected(&self, message: &str) -> Error {
        match self.toks.get(self.pos) {
            Some((t, p)) => parse_err(message, t.text(), *p),
            None => parse_err(message, "<end of input>", self.end),
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<()> {
        if self.peek().is_some_and(|t| t.is_keyword(kw)) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.unexpected(&format!("expected {kw}")))
        }
    }

    fn reject_keyword(&self) -> Result<()> {
        if let Some((Tok::Ident(s), p)) = self.toks.get(self.pos) {
            if REJECTED_KEYWORDS.iter().any(|k| s.eq_ignore_ascii_case(k)) {
                return Err(parse_err(
                    format!("`{}` is outside the supported conjunctive subset", s.to_ascii_uppercase()),
                    s.clone(),
                    *p,
                ));
            }
        }
        Ok(())
    }

    fn identifier(&mut self, what: &str) -> Result<(String, usize)> {
        self.reject_keyword()?;
        match self.toks.get(self.pos) {
            Some((Tok::Ident(s), p)) if !RESERVED.iter().any(|k| s.eq_ignore_ascii_case(k)) => {
                let out = (s.clone(), *p);
                self.pos += 1;
                Ok(out)
            }
            _ => Err(self.unexpected(&format!("expected {what}"))),
        }
    }

    fn operand(&mut self) -> Result<Operand> {
        self.reject_keyword()?;
        match self.peek() {
            Some(Tok::Number(_)) | Some(Tok::Str(_)) => {
                let (tok, p) = self.next().expect("peeked");
                Ok(Operand::Literal(literal(tok, p)?))
            }
            Some(Tok::Ident(_)) => {
                let (first, pos) = self.identifier("column")?;
                if self.peek() == Some(&Tok::Sym(".")) {
                    self.pos += 1;
                    let (column, _) = self.identifier("column name after `.`")?;
                    Ok(Operand::Column { qualifier: Some(first), column, pos })
                } else {
                    Ok(Operand::Column { qualifier: None, column: first, pos })
                }
            }
            _ => Err(self.unexpected("expected a column or constant")),
        }
    }

    fn comparison(&mut self) -> Result<CompareOp> {
        self.reject_keyword()?;
        let op = match self.peek() {
            Some(Tok::Sym("=")) => CompareOp::Eq,
            Some(Tok::Sym("<>")) => CompareOp::Ne,
            Some(Tok::Sym("<")) => CompareOp::Lt,
            Some(Tok::Sym("<=")) => CompareOp::Le,
            Some(Tok::Sym(">")) => CompareOp::Gt,
            Some(Tok::Sym(">=")) => CompareOp::Ge,
            _ => return Err(self.unexpected("expected a comparison operator")),
        };
        self.pos += 1;
        Ok(op)
    }
}

fn literal(tok: Tok, pos: usize) -> Result<Literal> {
    match tok {
        Tok::Str(s) => Ok(Literal::Text(s)),
        Tok::Number(n) => {
            if let Ok(v) = n.parse::<i64>() {
                Ok(Literal::Int(v))
            } else {
                n.parse::<f64>()
                    .map(Literal::Float)
                    .map_err(|_| parse_err("malformed number", n, pos))
            }
        }
        other => Err(parse_err("expected a constant", other.text(), pos)),
    }
}

/// Parses one statement of the supported subset.
pub fn parse_query(sql: &str) -> Result<ParsedQuery> {
    let toks = tokenize(sql)?;
    let mut p = Parser { toks, pos: 0, end: sql.len() };

    p.expect_keyword("SELECT")?;
    // the projection does not affect cardinality; skip it but refuse subqueries
    let mut depth = 0usize;
    loop {
        match p.peek() {
            None => return Err(p.unexpected("expected FROM")),
            Some(t) if depth == 0 && t.is_keyword("FROM") => break,
            Some(t) if t.is_keyword("SELECT") => {
                return Err(p.unexpected("subqueries are outside the supported subset"))
            }
            Some(Tok::Sym("(")) => depth += 1,
            Some(Tok::Sym(")")) => depth = depth.saturating_sub(1),
            _ => {}
        }
        p.pos += 1;
    }
    p.expect_keyword("FROM")?;

    let mut query = ParsedQuery::default();
    let mut aliases: HashMap<String, String> = HashMap::new();
    loop {
        if p.peek() == Some(&Tok::Sym("(")) {
            return Err(p.unexpected("subqueries are outside the supported subset"));
        }
        let (table, pos) = p.identifier("table name")?;
        if query.tables.contains(&table) {
            return Err(Error::workload(
                None,
                format!("self-joins unsupported: table `{table}` appears twice in FROM (byte {pos})"),
            ));
        }
        if p.peek().is_some_and(|t| t.is_keyword("AS")) {
            p.pos += 1;
        }
        let alias = match p.peek() {
            Some(Tok::Ident(s)) if !RESERVED.iter().any(|k| s.eq_ignore_ascii_case(k)) => {
                let (a, _) = p.identifier("alias")?;
                Some(a)
            }
            _ => None,
        };
        for name in std::iter::once(table.clone()).chain(alias) {
            if aliases.insert(name.clone(), table.clone()).is_some() {
                return Err(parse_err("duplicate table name or alias", name, pos));
            }
        }
        query.tables.push(table);
        if p.peek() == Some(&Tok::Sym(",")) {
            p.pos += 1;
        } else {
            break;
        }
    }

    let resolve = |qualifier: Option<String>, column: String, pos: usize, q: &ParsedQuery| -> Result<(String, String)> {
        match qualifier {
            Some(name) => aliases
                .get(&name)
                .map(|t| (t.clone(), column))
                .ok_or_else(|| parse_err("unknown table or alias", name, pos)),
            None if q.tables.len() == 1 => Ok((q.tables[0].clone(), column)),
            None => Err(parse_err("unqualified column in a multi-table query", column, pos)),
        }
    };

    if p.peek().is_some_and(|t| t.is_keyword("WHERE")) {
        p.pos += 1;
        loop {
            if p.peek() == Some(&Tok::Sym("(")) {
                return Err(p.unexpected("parenthesized conditions are outside the supported subset"));
            }
            let cond_pos = p.offset();
            let lhs = p.operand()?;
            let op = p.comparison()?;
            let rhs = p.operand()?;
            match (lhs, rhs) {
                (
                    Operand::Column { qualifier: lq, column: lc, pos: lp },
                    Operand::Column { qualifier: rq, column: rc, pos: rp },
                ) => {
                    let left = resolve(lq, lc, lp, &query)?;
                    let right = resolve(rq, rc, rp, &query)?;
                    if op != CompareOp::Eq || left.0 == right.0 {
                        return Err(parse_err(
                            "only equi-joins between different tables may compare two columns",
                            format!("{}.{} {op} {}.{}", left.0, left.1, right.0, right.1),
                            cond_pos,
                        ));
                    }
                    query.joins.push(JoinCondition { left, right });
                }
                (Operand::Column { qualifier, column, pos }, Operand::Literal(constant)) => {
                    let (table, column) = resolve(qualifier, column, pos, &query)?;
                    query.filters.push(FilterPredicate { table, column, op, constant });
                }
                (Operand::Literal(constant), Operand::Column { qualifier, column, pos }) => {
                    let (table, column) = resolve(qualifier, column, pos, &query)?;
                    query.filters.push(FilterPredicate { table, column, op: op.mirrored(), constant });
                }
                (Operand::Literal(_), Operand::Literal(_)) => {
                    return Err(parse_err("condition compares two constants", "", cond_pos));
                }
            }
            if p.peek().is_some_and(|t| t.is_keyword("AND")) {
                p.pos += 1;
            } else {
                break;
            }
        }
    }

    if p.peek() == Some(&Tok::Sym(";")) {
        p.pos += 1;
    }
    p.reject_keyword()?;
    if p.peek().is_some() {
        return Err(p.unexpected("unexpected trailing input"));
    }
    Ok(query)
}
