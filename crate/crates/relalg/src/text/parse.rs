//! Lowering of the textual formats into plans, relations and catalogs.
//!
//! Attribute tokens are either `base` or `base#id`. A bare name introduces a
//! fresh attribute at introduction sites and resolves against the innermost
//! scope at reference sites; the `#id` form round-trips printed plans
//! exactly.

use std::collections::BTreeSet;

use crate::algebra::{validate, AggFn, Attribute, Plan, Relation, ScalarExpr, Value};
use crate::algebra::{analyze, ArithOp, CmpOp};
use crate::eval::Catalog;

use super::lexer::{read_all, read_one, tokenize, Pos, Sexp, Token};
use super::ParseError;

fn split_attr_token(sym: &str, pos: Pos) -> Result<(String, Option<u64>), ParseError> {
    let mut parts = sym.splitn(2, '#');
    let base = parts.next().unwrap_or_default();
    if base.is_empty() || !base.chars().next().unwrap().is_ascii_alphabetic() && !base.starts_with('_') {
        return Err(ParseError::new(pos, format!("bad attribute name '{sym}'")));
    }
    match parts.next() {
        None => Ok((base.to_owned(), None)),
        Some(id) => {
            let id: u64 = id
                .parse()
                .map_err(|_| ParseError::new(pos, format!("bad attribute id in '{sym}'")))?;
            Ok((base.to_owned(), Some(id)))
        }
    }
}

/// Lexical scope for attribute references: a stack of frames, innermost last.
#[derive(Default)]
struct Scope {
    frames: Vec<Vec<Attribute>>,
}

impl Scope {
    fn push(&mut self, frame: impl IntoIterator<Item = Attribute>) {
        self.frames.push(frame.into_iter().collect());
    }

    fn pop(&mut self) {
        self.frames.pop();
    }

    fn resolve(&self, sym: &str, pos: Pos) -> Result<Attribute, ParseError> {
        let (base, id) = split_attr_token(sym, pos)?;
        for frame in self.frames.iter().rev() {
            if let Some(id) = id {
                if let Some(a) = frame.iter().find(|a| a.id() == id) {
                    return Ok(a.clone());
                }
            } else {
                let mut hits = frame.iter().filter(|a| a.base() == base);
                if let Some(first) = hits.next() {
                    if hits.next().is_some() {
                        return Err(ParseError::new(
                            pos,
                            format!("ambiguous attribute '{base}', use the base#id form"),
                        ));
                    }
                    return Ok(first.clone());
                }
            }
        }
        Err(ParseError::new(pos, format!("unknown attribute '{sym}'")))
    }
}

fn introduce_attr(sym: &str, pos: Pos) -> Result<Attribute, ParseError> {
    let (base, id) = split_attr_token(sym, pos)?;
    Ok(match id {
        None => Attribute::fresh(base),
        Some(id) => Attribute::with_id(base, id),
    })
}

fn parse_value(sexp: &Sexp) -> Result<Value, ParseError> {
    match sexp {
        Sexp::Int(n, _) => Ok(Value::Int(*n)),
        Sexp::Str(s, _) => Ok(Value::Str(s.clone())),
        Sexp::Symbol(s, p) => match s.as_str() {
            "NULL" => Ok(Value::Null),
            "true" => Ok(Value::Bool(true)),
            "false" => Ok(Value::Bool(false)),
            other => Err(ParseError::new(*p, format!("expected a value, found '{other}'"))),
        },
        Sexp::List(_, p) => Err(ParseError::new(*p, "expected a value, found a list")),
    }
}

fn lower_expr(sexp: &Sexp, scope: &Scope) -> Result<ScalarExpr, ParseError> {
    match sexp {
        Sexp::Int(n, _) => Ok(ScalarExpr::lit(*n)),
        Sexp::Str(s, _) => Ok(ScalarExpr::lit(s.as_str())),
        Sexp::Symbol(s, p) => match s.as_str() {
            "NULL" => Ok(ScalarExpr::Literal(Value::Null)),
            "true" => Ok(ScalarExpr::lit(true)),
            "false" => Ok(ScalarExpr::lit(false)),
            _ => Ok(ScalarExpr::attr(scope.resolve(s, *p)?)),
        },
        Sexp::List(items, p) => {
            let (head, args) = items
                .split_first()
                .ok_or_else(|| ParseError::new(*p, "empty expression"))?;
            let op = head
                .as_symbol()
                .ok_or_else(|| ParseError::new(head.pos(), "expected an operator symbol"))?;
            let arity = |n: usize| -> Result<(), ParseError> {
                if args.len() == n {
                    Ok(())
                } else {
                    Err(ParseError::new(
                        *p,
                        format!("operator '{op}' expects {n} arguments, got {}", args.len()),
                    ))
                }
            };
            let binary = |op: fn(ScalarExpr, ScalarExpr) -> ScalarExpr,
                          args: &[Sexp],
                          scope: &Scope|
             -> Result<ScalarExpr, ParseError> {
                Ok(op(lower_expr(&args[0], scope)?, lower_expr(&args[1], scope)?))
            };
            match op {
                "+" | "-" | "*" => {
                    arity(2)?;
                    let o = match op {
                        "+" => ArithOp::Add,
                        "-" => ArithOp::Sub,
                        _ => ArithOp::Mul,
                    };
                    Ok(ScalarExpr::arith(
                        o,
                        lower_expr(&args[0], scope)?,
                        lower_expr(&args[1], scope)?,
                    ))
                }
                "=" | "!=" | "<" | "<=" | ">" | ">=" => {
                    arity(2)?;
                    let o = match op {
                        "=" => CmpOp::Eq,
                        "!=" => CmpOp::Ne,
                        "<" => CmpOp::Lt,
                        "<=" => CmpOp::Le,
                        ">" => CmpOp::Gt,
                        _ => CmpOp::Ge,
                    };
                    Ok(ScalarExpr::cmp(
                        o,
                        lower_expr(&args[0], scope)?,
                        lower_expr(&args[1], scope)?,
                    ))
                }
                "<=>" => {
                    arity(2)?;
                    binary(ScalarExpr::null_safe_eq, args, scope)
                }
                "and" | "or" => {
                    if args.len() < 2 {
                        return Err(ParseError::new(*p, format!("'{op}' needs two arguments")));
                    }
                    let mut exprs = args.iter().map(|a| lower_expr(a, scope));
                    let first = exprs.next().unwrap()?;
                    let mut acc = first;
                    for e in exprs {
                        let e = e?;
                        acc = if op == "and" { ScalarExpr::and(acc, e) } else { ScalarExpr::or(acc, e) };
                    }
                    Ok(acc)
                }
                "not" => {
                    arity(1)?;
                    Ok(ScalarExpr::not(lower_expr(&args[0], scope)?))
                }
                "isnull" => {
                    arity(1)?;
                    Ok(ScalarExpr::is_null(lower_expr(&args[0], scope)?))
                }
                other => Err(ParseError::new(head.pos(), format!("unknown operator '{other}'"))),
            }
        }
    }
}

fn child_schema(plan: &Plan, pos: Pos) -> Result<BTreeSet<Attribute>, ParseError> {
    analyze(plan)
        .map(|info| info.schema)
        .map_err(|e| ParseError::new(pos, e.to_string()))
}

fn expect_list<'a>(sexp: &'a Sexp, what: &str) -> Result<&'a [Sexp], ParseError> {
    sexp.as_list().ok_or_else(|| ParseError::new(sexp.pos(), format!("expected {what}")))
}

fn expect_symbol<'a>(sexp: &'a Sexp, what: &str) -> Result<(&'a str, Pos), ParseError> {
    match sexp {
        Sexp::Symbol(s, p) => Ok((s, *p)),
        other => Err(ParseError::new(other.pos(), format!("expected {what}"))),
    }
}

fn lower_plan(sexp: &Sexp, cat: &Catalog, scope: &mut Scope) -> Result<Plan, ParseError> {
    let items = expect_list(sexp, "a plan node")?;
    let pos = sexp.pos();
    let (head, args) = items
        .split_first()
        .ok_or_else(|| ParseError::new(pos, "empty plan node"))?;
    let (kw, kw_pos) = expect_symbol(head, "a plan keyword")?;

    let arity = |n: usize| -> Result<(), ParseError> {
        if args.len() == n {
            Ok(())
        } else {
            Err(ParseError::new(
                pos,
                format!("'{kw}' expects {n} arguments, got {}", args.len()),
            ))
        }
    };

    match kw {
        "scan" => {
            arity(1)?;
            let (name, npos) = expect_symbol(&args[0], "a table name")?;
            let rel = cat
                .get(name)
                .ok_or_else(|| ParseError::new(npos, format!("unknown table '{name}'")))?;
            Ok(Plan::scan(name, rel.schema().iter().cloned()))
        }
        "select" => {
            arity(2)?;
            let child = lower_plan(&args[1], cat, scope)?;
            scope.push(child_schema(&child, pos)?);
            let pred = lower_expr(&args[0], scope);
            scope.pop();
            Ok(Plan::select(pred?, child))
        }
        "map" => {
            arity(2)?;
            let binding = expect_list(&args[0], "a (attr expr) binding")?;
            if binding.len() != 2 {
                return Err(ParseError::new(args[0].pos(), "map binding needs (attr expr)"));
            }
            let (attr_sym, apos) = expect_symbol(&binding[0], "an attribute")?;
            let child = lower_plan(&args[1], cat, scope)?;
            scope.push(child_schema(&child, pos)?);
            let expr = lower_expr(&binding[1], scope);
            scope.pop();
            Ok(Plan::map(introduce_attr(attr_sym, apos)?, expr?, child))
        }
        "project" | "distinct" => {
            arity(2)?;
            let attr_sexps = expect_list(&args[0], "an attribute list")?;
            let child = lower_plan(&args[1], cat, scope)?;
            scope.push(child_schema(&child, pos)?);
            let mut attrs = Vec::new();
            for a in attr_sexps {
                let (sym, apos) = expect_symbol(a, "an attribute")?;
                match scope.resolve(sym, apos) {
                    Ok(attr) => attrs.push(attr),
                    Err(e) => {
                        scope.pop();
                        return Err(e);
                    }
                }
            }
            scope.pop();
            Ok(if kw == "project" {
                Plan::project(attrs, child)
            } else {
                Plan::project_distinct(attrs, child)
            })
        }
        "rename" => {
            arity(2)?;
            let pair = expect_list(&args[0], "a (new old) pair")?;
            if pair.len() != 2 {
                return Err(ParseError::new(args[0].pos(), "rename needs (new old)"));
            }
            let (new_sym, new_pos) = expect_symbol(&pair[0], "an attribute")?;
            let (old_sym, old_pos) = expect_symbol(&pair[1], "an attribute")?;
            let child = lower_plan(&args[1], cat, scope)?;
            scope.push(child_schema(&child, pos)?);
            let old = scope.resolve(old_sym, old_pos);
            scope.pop();
            Ok(Plan::rename(introduce_attr(new_sym, new_pos)?, old?, child))
        }
        "union" | "intersect" | "except" | "cross" => {
            arity(2)?;
            let left = lower_plan(&args[0], cat, scope)?;
            let right = lower_plan(&args[1], cat, scope)?;
            Ok(match kw {
                "union" => Plan::union(left, right),
                "intersect" => Plan::intersect(left, right),
                "except" => Plan::except(left, right),
                _ => Plan::cross(left, right),
            })
        }
        "join" | "semijoin" | "antijoin" | "outerjoin" | "djoin" => {
            arity(3)?;
            let left = lower_plan(&args[1], cat, scope)?;
            let left_schema = child_schema(&left, pos)?;
            let right = if kw == "djoin" {
                // the left side's attributes bind inside a dependent join's
                // right subtree
                scope.push(left_schema.iter().cloned());
                let r = lower_plan(&args[2], cat, scope);
                scope.pop();
                r?
            } else {
                lower_plan(&args[2], cat, scope)?
            };
            let right_schema = child_schema(&right, pos)?;
            scope.push(left_schema.into_iter().chain(right_schema));
            let pred = lower_expr(&args[0], scope);
            scope.pop();
            let pred = pred?;
            Ok(match kw {
                "join" => Plan::join(pred, left, right),
                "semijoin" => Plan::semi_join(pred, left, right),
                "antijoin" => Plan::anti_join(pred, left, right),
                "outerjoin" => Plan::outer_join(pred, left, right),
                _ => Plan::dependent_join(pred, left, right),
            })
        }
        "nullpad" => {
            arity(2)?;
            let attr_sexps = expect_list(&args[0], "an attribute list")?;
            let child = lower_plan(&args[1], cat, scope)?;
            scope.push(child_schema(&child, pos)?);
            let mut attrs = Vec::new();
            for a in attr_sexps {
                let (sym, apos) = expect_symbol(a, "an attribute")?;
                // pad targets may name existing columns or introduce new ones
                match scope.resolve(sym, apos) {
                    Ok(attr) => attrs.push(attr),
                    Err(_) => attrs.push(introduce_attr(sym, apos)?),
                }
            }
            scope.pop();
            Ok(Plan::null_pad(attrs, child))
        }
        "groupby" => {
            arity(3)?;
            let key_sexps = expect_list(&args[0], "a key list")?;
            let agg_sexps = expect_list(&args[1], "an aggregate list")?;
            let child = lower_plan(&args[2], cat, scope)?;
            scope.push(child_schema(&child, pos)?);
            let result = (|| {
                let mut keys = Vec::new();
                for k in key_sexps {
                    let (sym, kpos) = expect_symbol(k, "an attribute")?;
                    keys.push(scope.resolve(sym, kpos)?);
                }
                let mut aggs = Vec::new();
                for agg in agg_sexps {
                    let parts = expect_list(agg, "an (output func) aggregate")?;
                    if parts.len() != 2 {
                        return Err(ParseError::new(agg.pos(), "aggregate needs (output func)"));
                    }
                    let (out_sym, out_pos) = expect_symbol(&parts[0], "an attribute")?;
                    let func = lower_agg_fn(&parts[1], scope)?;
                    aggs.push((introduce_attr(out_sym, out_pos)?, func));
                }
                Ok((keys, aggs))
            })();
            scope.pop();
            let (keys, aggs) = result?;
            Ok(Plan::group_by(keys, aggs, child))
        }
        other => Err(ParseError::new(kw_pos, format!("unknown plan node '{other}'"))),
    }
}

fn lower_agg_fn(sexp: &Sexp, scope: &Scope) -> Result<AggFn, ParseError> {
    match sexp {
        Sexp::Symbol(s, p) => {
            if s == "count*" {
                Ok(AggFn::CountStar)
            } else {
                Err(ParseError::new(*p, format!("unknown aggregate '{s}'")))
            }
        }
        Sexp::List(items, p) => {
            if items.len() != 2 {
                return Err(ParseError::new(*p, "aggregate call needs (func attr)"));
            }
            let (func, _) = expect_symbol(&items[0], "an aggregate name")?;
            let (attr_sym, apos) = expect_symbol(&items[1], "an attribute")?;
            let attr = scope.resolve(attr_sym, apos)?;
            match func {
                "count" => Ok(AggFn::Count(attr)),
                "sum" => Ok(AggFn::Sum(attr)),
                "min" => Ok(AggFn::Min(attr)),
                "max" => Ok(AggFn::Max(attr)),
                other => Err(ParseError::new(*p, format!("unknown aggregate '{other}'"))),
            }
        }
        other => Err(ParseError::new(other.pos(), "expected an aggregate")),
    }
}

/// Parses a single plan expression against an existing catalog.
pub fn parse_plan(text: &str, cat: &Catalog) -> Result<Plan, ParseError> {
    let tokens = tokenize(text)?;
    let sexps = read_all(&tokens)?;
    let sexp = match sexps.as_slice() {
        [one] => one,
        [] => return Err(ParseError::new(Pos::start(), "empty input")),
        [_, extra, ..] => {
            return Err(ParseError::new(extra.pos(), "expected exactly one plan expression"))
        }
    };
    let plan = lower_plan(sexp, cat, &mut Scope::default())?;
    validate(&plan).map_err(|e| ParseError::new(sexp.pos(), e.to_string()))?;
    Ok(plan)
}

/// Parses a plan script: zero or more `(table name (attrs) rows...)`
/// definitions followed by exactly one plan expression.
pub fn parse_script(text: &str) -> Result<(Catalog, Plan), ParseError> {
    let tokens = tokenize(text)?;
    let sexps = read_all(&tokens)?;
    let mut cat = Catalog::new();
    let mut plan = None;
    for sexp in &sexps {
        let is_table =
            sexp.as_list().and_then(|l| l.first()).and_then(Sexp::as_symbol) == Some("table");
        if is_table {
            if plan.is_some() {
                return Err(ParseError::new(
                    sexp.pos(),
                    "table definitions must precede the plan expression",
                ));
            }
            parse_table_def(sexp, &mut cat)?;
        } else {
            if plan.is_some() {
                return Err(ParseError::new(sexp.pos(), "more than one plan expression"));
            }
            let p = lower_plan(sexp, &cat, &mut Scope::default())?;
            validate(&p).map_err(|e| ParseError::new(sexp.pos(), e.to_string()))?;
            plan = Some(p);
        }
    }
    match plan {
        Some(plan) => Ok((cat, plan)),
        None => Err(ParseError::new(Pos::start(), "script has no plan expression")),
    }
}

fn parse_table_def(sexp: &Sexp, cat: &mut Catalog) -> Result<(), ParseError> {
    let items = sexp.as_list().expect("checked by caller");
    if items.len() < 3 {
        return Err(ParseError::new(sexp.pos(), "table definition needs (table name (attrs) ...)"));
    }
    let (name, _) = expect_symbol(&items[1], "a table name")?;
    let attr_sexps = expect_list(&items[2], "an attribute list")?;
    let mut attrs = Vec::new();
    for a in attr_sexps {
        let (sym, apos) = expect_symbol(a, "an attribute")?;
        attrs.push(introduce_attr(sym, apos)?);
    }
    let mut rel = Relation::empty(attrs.iter().cloned());
    let mut rows = items[3..].iter().peekable();
    while let Some(row) = rows.next() {
        let cells = expect_list(row, "a row")?;
        if cells.len() != attrs.len() {
            return Err(ParseError::new(
                row.pos(),
                format!("row has {} values, table {} has {} columns", cells.len(), name, attrs.len()),
            ));
        }
        let mut count = 1;
        if let Some(Sexp::Symbol(s, p)) = rows.peek() {
            if let Some(n) = parse_multiplicity(s) {
                count = n;
                if count == 0 {
                    return Err(ParseError::new(*p, "multiplicity must be positive"));
                }
                rows.next();
            }
        }
        let tuple = crate::algebra::Tuple::from_pairs(
            attrs.iter().cloned().zip(cells.iter().map(parse_value).collect::<Result<Vec<_>, _>>()?),
        )
        .map_err(|e| ParseError::new(row.pos(), e.to_string()))?;
        rel.insert(tuple, count).map_err(|e| ParseError::new(row.pos(), e.to_string()))?;
    }
    cat.add_table(name, rel);
    Ok(())
}

fn parse_multiplicity(sym: &str) -> Option<u64> {
    let digits = sym.strip_prefix('x')?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

/// Parses the single-relation format: `rel (attrs) { rows }`.
pub fn parse_relation(text: &str) -> Result<Relation, ParseError> {
    let tokens = tokenize(text)?;
    let mut idx = 0;
    let end_pos = tokens.last().map(|(_, p)| *p).unwrap_or(Pos::start());

    let expect = |idx: &mut usize, want: Token, what: &str| -> Result<Pos, ParseError> {
        match tokens.get(*idx) {
            Some((tok, p)) if *tok == want => {
                *idx += 1;
                Ok(*p)
            }
            Some((_, p)) => Err(ParseError::new(*p, format!("expected {what}"))),
            None => Err(ParseError::new(end_pos, format!("expected {what}"))),
        }
    };

    expect(&mut idx, Token::Symbol("rel".into()), "'rel'")?;
    expect(&mut idx, Token::LParen, "'('")?;
    let mut attrs = Vec::new();
    loop {
        match tokens.get(idx) {
            Some((Token::RParen, _)) => {
                idx += 1;
                break;
            }
            Some((Token::Symbol(s), p)) => {
                attrs.push(introduce_attr(s, *p)?);
                idx += 1;
            }
            Some((_, p)) => return Err(ParseError::new(*p, "expected an attribute")),
            None => return Err(ParseError::new(end_pos, "unclosed attribute list")),
        }
    }
    expect(&mut idx, Token::LBrace, "'{'")?;
    let mut rel = Relation::empty(attrs.iter().cloned());
    loop {
        match tokens.get(idx) {
            Some((Token::RBrace, _)) => {
                idx += 1;
                break;
            }
            Some((Token::LParen, _)) => {
                let (row, next) = read_one(&tokens, idx)?;
                idx = next;
                let cells = row.as_list().expect("read from LParen");
                if cells.len() != attrs.len() {
                    return Err(ParseError::new(
                        row.pos(),
                        format!("row has {} values, header has {} attributes", cells.len(), attrs.len()),
                    ));
                }
                let mut count = 1;
                if let Some((Token::Symbol(s), p)) = tokens.get(idx) {
                    if let Some(n) = parse_multiplicity(s) {
                        if n == 0 {
                            return Err(ParseError::new(*p, "multiplicity must be positive"));
                        }
                        count = n;
                        idx += 1;
                    }
                }
                let tuple = crate::algebra::Tuple::from_pairs(
                    attrs
                        .iter()
                        .cloned()
                        .zip(cells.iter().map(parse_value).collect::<Result<Vec<_>, _>>()?),
                )
                .map_err(|e| ParseError::new(row.pos(), e.to_string()))?;
                rel.insert(tuple, count).map_err(|e| ParseError::new(row.pos(), e.to_string()))?;
            }
            Some((_, p)) => return Err(ParseError::new(*p, "expected a row or '}'")),
            None => return Err(ParseError::new(end_pos, "unclosed '{'")),
        }
    }
    if idx != tokens.len() {
        return Err(ParseError::new(tokens[idx].1, "trailing input after relation"));
    }
    Ok(rel)
}
