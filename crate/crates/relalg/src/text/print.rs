//! Canonical printers plus the alpha-equivalence checks used by round-trip
//! tests: one plan node per line, two-space indentation, attributes printed
//! as `base#id`, rows sorted by canonical tuple key.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::algebra::{Attribute, Plan, Relation, ScalarExpr};
use crate::eval::Catalog;

fn write_attr_list(attrs: &[Attribute], out: &mut String) {
    out.push('(');
    for (i, a) in attrs.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{a}");
    }
    out.push(')');
}

fn write_plan(plan: &Plan, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    let child_on_new_line = |child: &Plan, out: &mut String| {
        out.push('\n');
        write_plan(child, indent + 1, out);
    };
    out.push_str(&pad);
    match plan {
        Plan::Scan { table, .. } => {
            let _ = write!(out, "(scan {table}");
        }
        Plan::Select { pred, child } => {
            let _ = write!(out, "(select {pred}");
            child_on_new_line(child, out);
        }
        Plan::Map { attr, expr, child } => {
            let _ = write!(out, "(map ({attr} {expr})");
            child_on_new_line(child, out);
        }
        Plan::Project { attrs, child } | Plan::ProjectDistinct { attrs, child } => {
            let kw = if matches!(plan, Plan::Project { .. }) { "project" } else { "distinct" };
            let _ = write!(out, "({kw} ");
            write_attr_list(attrs, out);
            child_on_new_line(child, out);
        }
        Plan::Rename { new, old, child } => {
            let _ = write!(out, "(rename ({new} {old})");
            child_on_new_line(child, out);
        }
        Plan::Union { left, right }
        | Plan::Intersect { left, right }
        | Plan::Except { left, right }
        | Plan::Cross { left, right } => {
            let _ = write!(out, "({}", plan.node_name());
            child_on_new_line(left, out);
            child_on_new_line(right, out);
        }
        Plan::Join { pred, left, right }
        | Plan::DependentJoin { pred, left, right }
        | Plan::SemiJoin { pred, left, right }
        | Plan::AntiJoin { pred, left, right }
        | Plan::OuterJoin { pred, left, right } => {
            let _ = write!(out, "({} {pred}", plan.node_name());
            child_on_new_line(left, out);
            child_on_new_line(right, out);
        }
        Plan::NullPad { attrs, child } => {
            out.push_str("(nullpad ");
            write_attr_list(attrs, out);
            child_on_new_line(child, out);
        }
        Plan::GroupBy { keys, aggs, child } => {
            out.push_str("(groupby ");
            write_attr_list(keys, out);
            out.push_str(" (");
            for (i, agg) in aggs.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                match agg.func.input() {
                    None => {
                        let _ = write!(out, "({} {})", agg.output, agg.func.name());
                    }
                    Some(a) => {
                        let _ = write!(out, "({} ({} {a}))", agg.output, agg.func.name());
                    }
                }
            }
            out.push(')');
            child_on_new_line(child, out);
        }
    }
    out.push(')');
}

/// Canonical text for a plan expression.
pub fn print_plan(plan: &Plan) -> String {
    let mut out = String::new();
    write_plan(plan, 0, &mut out);
    out.push('\n');
    out
}

/// Canonical text for a relation, `rel (attrs) { rows }` with rows in
/// canonical tuple order and explicit `xN` multiplicities for N > 1.
pub fn print_relation(rel: &Relation) -> String {
    let mut out = String::from("rel ");
    let schema: Vec<Attribute> = rel.schema().iter().cloned().collect();
    write_attr_list(&schema, &mut out);
    if rel.is_empty() {
        out.push_str(" { }\n");
        return out;
    }
    out.push_str(" {\n");
    for (t, n) in rel.iter() {
        out.push_str("  (");
        for (i, a) in schema.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{}", t.get(a).expect("schema checked"));
        }
        out.push(')');
        if n > 1 {
            let _ = write!(out, " x{n}");
        }
        out.push('\n');
    }
    out.push_str("}\n");
    out
}

/// A whole script: table definitions (sorted by name) followed by the plan.
pub fn print_script(cat: &Catalog, plan: &Plan) -> String {
    let mut out = String::new();
    for (name, rel) in cat.iter() {
        let _ = write!(out, "(table {name} ");
        let schema: Vec<Attribute> = rel.schema().iter().cloned().collect();
        write_attr_list(&schema, &mut out);
        for (t, n) in rel.iter() {
            out.push_str("\n  (");
            for (i, a) in schema.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                let _ = write!(out, "{}", t.get(a).expect("schema checked"));
            }
            out.push(')');
            if n > 1 {
                let _ = write!(out, " x{n}");
            }
        }
        out.push_str(")\n\n");
    }
    out.push_str(&print_plan(plan));
    out
}

/// Bijection between attribute ids, built while walking two plans in
/// lockstep.
#[derive(Default)]
struct AlphaMap {
    fwd: BTreeMap<u64, u64>,
    rev: BTreeMap<u64, u64>,
}

impl AlphaMap {
    fn bind(&mut self, a: &Attribute, b: &Attribute) -> bool {
        match (self.fwd.get(&a.id()), self.rev.get(&b.id())) {
            (None, None) => {
                self.fwd.insert(a.id(), b.id());
                self.rev.insert(b.id(), a.id());
                true
            }
            (Some(&to), Some(&from)) => to == b.id() && from == a.id(),
            _ => false,
        }
    }

    /// A reference either follows an existing binding or, when both sides are
    /// unbound (a free variable), requires identical ids.
    fn reference(&mut self, a: &Attribute, b: &Attribute) -> bool {
        match self.fwd.get(&a.id()) {
            Some(&to) => to == b.id(),
            None => a.id() == b.id() && self.bind(a, b),
        }
    }

    fn set_eq(&mut self, xs: &[Attribute], ys: &[Attribute]) -> bool {
        if xs.len() != ys.len() {
            return false;
        }
        let ids: std::collections::BTreeSet<u64> = ys.iter().map(Attribute::id).collect();
        xs.iter().all(|a| self.fwd.get(&a.id()).is_some_and(|to| ids.contains(to)))
    }
}

fn alpha_expr(e1: &ScalarExpr, e2: &ScalarExpr, m: &mut AlphaMap) -> bool {
    use ScalarExpr::*;
    match (e1, e2) {
        (Attr(a), Attr(b)) => m.reference(a, b),
        (Literal(a), Literal(b)) => a == b,
        (Arith(o1, l1, r1), Arith(o2, l2, r2)) => {
            o1 == o2 && alpha_expr(l1, l2, m) && alpha_expr(r1, r2, m)
        }
        (Cmp(o1, l1, r1), Cmp(o2, l2, r2)) => {
            o1 == o2 && alpha_expr(l1, l2, m) && alpha_expr(r1, r2, m)
        }
        (NullSafeEq(l1, r1), NullSafeEq(l2, r2))
        | (And(l1, r1), And(l2, r2))
        | (Or(l1, r1), Or(l2, r2)) => alpha_expr(l1, l2, m) && alpha_expr(r1, r2, m),
        (Not(a), Not(b)) | (IsNull(a), IsNull(b)) => alpha_expr(a, b, m),
        _ => false,
    }
}

fn alpha_plan(p1: &Plan, p2: &Plan, m: &mut AlphaMap) -> bool {
    use Plan::*;
    match (p1, p2) {
        (Scan { table: t1, attrs: a1 }, Scan { table: t2, attrs: a2 }) => {
            t1 == t2
                && a1.len() == a2.len()
                && a1.iter().zip(a2).all(|(a, b)| a.base() == b.base() && m.bind(a, b))
        }
        (Select { pred: q1, child: c1 }, Select { pred: q2, child: c2 }) => {
            alpha_plan(c1, c2, m) && alpha_expr(q1, q2, m)
        }
        (Map { attr: a1, expr: e1, child: c1 }, Map { attr: a2, expr: e2, child: c2 }) => {
            alpha_plan(c1, c2, m) && alpha_expr(e1, e2, m) && a1.base() == a2.base() && m.bind(a1, a2)
        }
        (Project { attrs: a1, child: c1 }, Project { attrs: a2, child: c2 })
        | (ProjectDistinct { attrs: a1, child: c1 }, ProjectDistinct { attrs: a2, child: c2 }) => {
            alpha_plan(c1, c2, m) && m.set_eq(a1, a2)
        }
        (
            Rename { new: n1, old: o1, child: c1 },
            Rename { new: n2, old: o2, child: c2 },
        ) => {
            alpha_plan(c1, c2, m)
                && m.reference(o1, o2)
                && n1.base() == n2.base()
                && m.bind(n1, n2)
        }
        (Union { left: l1, right: r1 }, Union { left: l2, right: r2 })
        | (Intersect { left: l1, right: r1 }, Intersect { left: l2, right: r2 })
        | (Except { left: l1, right: r1 }, Except { left: l2, right: r2 })
        | (Cross { left: l1, right: r1 }, Cross { left: l2, right: r2 }) => {
            alpha_plan(l1, l2, m) && alpha_plan(r1, r2, m)
        }
        (
            Join { pred: q1, left: l1, right: r1 },
            Join { pred: q2, left: l2, right: r2 },
        )
        | (
            DependentJoin { pred: q1, left: l1, right: r1 },
            DependentJoin { pred: q2, left: l2, right: r2 },
        )
        | (
            SemiJoin { pred: q1, left: l1, right: r1 },
            SemiJoin { pred: q2, left: l2, right: r2 },
        )
        | (
            AntiJoin { pred: q1, left: l1, right: r1 },
            AntiJoin { pred: q2, left: l2, right: r2 },
        )
        | (
            OuterJoin { pred: q1, left: l1, right: r1 },
            OuterJoin { pred: q2, left: l2, right: r2 },
        ) => alpha_plan(l1, l2, m) && alpha_plan(r1, r2, m) && alpha_expr(q1, q2, m),
        (NullPad { attrs: a1, child: c1 }, NullPad { attrs: a2, child: c2 }) => {
            if !alpha_plan(c1, c2, m) || a1.len() != a2.len() {
                return false;
            }
            // existing columns must correspond; newly introduced pad columns
            // pair up by display name
            let (bound1, new1): (Vec<_>, Vec<_>) =
                a1.iter().partition(|a| m.fwd.contains_key(&a.id()));
            let (bound2, new2): (Vec<_>, Vec<_>) =
                a2.iter().partition(|a| m.rev.contains_key(&a.id()));
            let bound1: Vec<Attribute> = bound1.into_iter().cloned().collect();
            let bound2: Vec<Attribute> = bound2.into_iter().cloned().collect();
            if !m.set_eq(&bound1, &bound2) || new1.len() != new2.len() {
                return false;
            }
            let mut new1: Vec<&Attribute> = new1;
            let mut new2: Vec<&Attribute> = new2;
            new1.sort_by_key(|a| (a.base().to_owned(), a.id()));
            new2.sort_by_key(|a| (a.base().to_owned(), a.id()));
            new1.iter().zip(&new2).all(|(a, b)| a.base() == b.base() && m.bind(a, b))
        }
        (
            GroupBy { keys: k1, aggs: g1, child: c1 },
            GroupBy { keys: k2, aggs: g2, child: c2 },
        ) => {
            if !alpha_plan(c1, c2, m) || !m.set_eq(k1, k2) || g1.len() != g2.len() {
                return false;
            }
            g1.iter().zip(g2).all(|(a, b)| {
                let func_matches = match (&a.func, &b.func) {
                    (crate::algebra::AggFn::CountStar, crate::algebra::AggFn::CountStar) => true,
                    (crate::algebra::AggFn::Count(x), crate::algebra::AggFn::Count(y))
                    | (crate::algebra::AggFn::Sum(x), crate::algebra::AggFn::Sum(y))
                    | (crate::algebra::AggFn::Min(x), crate::algebra::AggFn::Min(y))
                    | (crate::algebra::AggFn::Max(x), crate::algebra::AggFn::Max(y)) => {
                        m.reference(x, y)
                    }
                    _ => false,
                };
                func_matches && a.output.base() == b.output.base() && m.bind(&a.output, &b.output)
            })
        }
        _ => false,
    }
}

/// Structural equality up to a consistent renumbering of attribute ids.
pub fn plan_alpha_eq(p1: &Plan, p2: &Plan) -> bool {
    alpha_plan(p1, p2, &mut AlphaMap::default())
}

/// Multiset equality after matching the two schemas by display name; both
/// schemas must have unique, identical display-name sets. Used to compare a
/// computed relation against one parsed from a golden file, where attribute
/// ids differ.
pub fn relations_match_by_name(r1: &Relation, r2: &Relation) -> bool {
    if r1.schema().len() != r2.schema().len() {
        return false;
    }
    let mut map = BTreeMap::new();
    for a in r1.schema() {
        let mut hits = r2.schema().iter().filter(|b| b.base() == a.base());
        match (hits.next(), hits.next()) {
            (Some(b), None) => {
                map.insert(a.clone(), b.clone());
            }
            _ => return false,
        }
    }
    for (t, n) in r1.iter() {
        let rekeyed = crate::algebra::Tuple::from_pairs(
            t.iter().map(|(a, v)| (map[a].clone(), v.clone())),
        )
        .expect("bijective rename");
        if r2.count(&rekeyed) != n {
            return false;
        }
    }
    r1.distinct_len() == r2.distinct_len()
}
