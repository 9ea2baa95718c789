//! The top-down rewrite: pushing a duplicate-free domain `D` down an
//! arbitrary subtree until nothing below depends on it, then either joining
//! the subtree with a freshly renamed copy of `D` or, when every domain
//! column has a proven local equivalent, substituting the columns with map
//! operators ("perfect" unnesting).

use std::collections::BTreeSet;

use crate::algebra::{
    free_vars_plan, schema_of, Attribute, Plan, ScalarExpr, SchemaError,
};

use super::{PerfectMode, UnnestConfig, UnnestError, UnnestingInfo};

/// Rewrite statistics; `pushdown_visits` counts how many nodes the push-down
/// recursion dispatched on, which the termination argument bounds by the
/// size of the input plan.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct UnnestStats {
    pub pushdown_visits: usize,
}

pub(super) struct Unnester<'c> {
    pub cfg: &'c UnnestConfig,
    pub stats: UnnestStats,
}

impl<'c> Unnester<'c> {
    pub fn new(cfg: &'c UnnestConfig) -> Self {
        Unnester { cfg, stats: UnnestStats::default() }
    }

    /// Top-down walk that rewrites every remaining dependent join.
    pub fn walk(&mut self, plan: Plan) -> Result<Plan, UnnestError> {
        match plan {
            Plan::DependentJoin { pred, left, right } => {
                let left = self.walk(*left)?;
                let left_schema = schema_of(&left)?;
                let corr: BTreeSet<Attribute> = free_vars_plan(&right)?
                    .intersection(&left_schema)
                    .cloned()
                    .collect();
                if corr.is_empty() {
                    // the right side does not depend on the left: plain join
                    let right = self.walk(*right)?;
                    Ok(Plan::join(pred, left, right))
                } else {
                    self.rewrite_correlated(pred, left, *right, corr, 0)
                }
            }
            other => self.walk_children(other),
        }
    }

    fn walk_children(&mut self, plan: Plan) -> Result<Plan, UnnestError> {
        Ok(match plan {
            Plan::Scan { .. } => plan,
            Plan::Select { pred, child } => Plan::select(pred, self.walk(*child)?),
            Plan::Map { attr, expr, child } => Plan::map(attr, expr, self.walk(*child)?),
            Plan::Project { attrs, child } => {
                Plan::Project { attrs, child: Box::new(self.walk(*child)?) }
            }
            Plan::ProjectDistinct { attrs, child } => {
                Plan::ProjectDistinct { attrs, child: Box::new(self.walk(*child)?) }
            }
            Plan::Rename { new, old, child } => Plan::rename(new, old, self.walk(*child)?),
            Plan::Union { left, right } => Plan::union(self.walk(*left)?, self.walk(*right)?),
            Plan::Intersect { left, right } => {
                Plan::intersect(self.walk(*left)?, self.walk(*right)?)
            }
            Plan::Except { left, right } => Plan::except(self.walk(*left)?, self.walk(*right)?),
            Plan::Cross { left, right } => Plan::cross(self.walk(*left)?, self.walk(*right)?),
            Plan::Join { pred, left, right } => {
                Plan::join(pred, self.walk(*left)?, self.walk(*right)?)
            }
            Plan::DependentJoin { .. } => unreachable!("handled by walk"),
            Plan::SemiJoin { pred, left, right } => {
                Plan::semi_join(pred, self.walk(*left)?, self.walk(*right)?)
            }
            Plan::AntiJoin { pred, left, right } => {
                Plan::anti_join(pred, self.walk(*left)?, self.walk(*right)?)
            }
            Plan::OuterJoin { pred, left, right } => {
                Plan::outer_join(pred, self.walk(*left)?, self.walk(*right)?)
            }
            Plan::NullPad { attrs, child } => {
                Plan::NullPad { attrs, child: Box::new(self.walk(*child)?) }
            }
            Plan::GroupBy { keys, aggs, child } => {
                Plan::GroupBy { keys, aggs, child: Box::new(self.walk(*child)?) }
            }
        })
    }

    /// The decomposition of a correlated dependent join: build the domain
    /// `D` of distinct outer-reference values, push it down the right side,
    /// then join the left side back on null-safe equality of the domain
    /// columns, keeping one representative per column.
    pub fn rewrite_correlated(
        &mut self,
        pred: ScalarExpr,
        left: Plan,
        right: Plan,
        corr: BTreeSet<Attribute>,
        depth: usize,
    ) -> Result<Plan, UnnestError> {
        let mut out_schema = schema_of(&left)?;
        out_schema.extend(schema_of(&right)?);

        let domain = super::compute_domain(&left, &corr);
        let info = UnnestingInfo::new(domain)?;
        let (pushed, info) = self.push_down_node(info, right, depth)?;

        let mut conjuncts = Vec::new();
        if !pred.is_true_literal() {
            conjuncts.push(pred);
        }
        for d in &info.outer_refs {
            let repr = info.representative(d)?;
            conjuncts.push(ScalarExpr::null_safe_eq(
                ScalarExpr::attr(d.clone()),
                ScalarExpr::attr(repr),
            ));
        }
        let joined = Plan::join(ScalarExpr::and_all(conjuncts), left, pushed);
        Ok(Plan::project(out_schema, joined))
    }

    fn references_outer(&self, plan: &Plan, info: &UnnestingInfo) -> Result<bool, SchemaError> {
        Ok(!free_vars_plan(plan)?.is_disjoint(&info.outer_refs))
    }

    /// One push-down step. Returns a plan equivalent to `D ▶ subtree`
    /// (schema: the subtree's plus one representative per domain column)
    /// together with the info whose rename map points at those
    /// representatives.
    pub fn push_down_node(
        &mut self,
        info: UnnestingInfo,
        subtree: Plan,
        depth: usize,
    ) -> Result<(Plan, UnnestingInfo), UnnestError> {
        if depth > self.cfg.max_depth {
            return Err(UnnestError::DepthExceeded(self.cfg.max_depth));
        }
        self.stats.pushdown_visits += 1;

        if !self.references_outer(&subtree, &info)? {
            return self.stop(info, subtree);
        }

        match subtree {
            Plan::Scan { .. } => unreachable!("a scan never references outer columns"),
            Plan::Select { pred, child } => {
                let mut info = info;
                info.collect_equivalences(&pred);
                let (child, info) = self.push_down_node(info, *child, depth)?;
                let pred = info.rewrite_columns(&pred)?;
                Ok((Plan::select(pred, child), info))
            }
            Plan::Map { attr, expr, child } => {
                let (child, info) = self.push_down_node(info, *child, depth)?;
                let expr = info.rewrite_columns(&expr)?;
                Ok((Plan::map(attr, expr, child), info))
            }
            Plan::Project { attrs, child } => {
                let (child, info) = self.push_down_node(info, *child, depth)?;
                let attrs = attrs.into_iter().chain(info.representatives()?);
                Ok((Plan::project(attrs, child), info))
            }
            Plan::ProjectDistinct { attrs, child } => {
                let (child, info) = self.push_down_node(info, *child, depth)?;
                let attrs = attrs.into_iter().chain(info.representatives()?);
                Ok((Plan::project_distinct(attrs, child), info))
            }
            Plan::Rename { new, old, child } => {
                // the renamed column is a child column, never a domain column
                let (child, info) = self.push_down_node(info, *child, depth)?;
                Ok((Plan::rename(new, old, child), info))
            }
            Plan::NullPad { attrs, child } => {
                let (child, info) = self.push_down_node(info, *child, depth)?;
                Ok((Plan::null_pad(attrs, child), info))
            }
            Plan::GroupBy { keys, aggs, child } => {
                // aggregate for each binding separately: group also by the
                // domain representatives
                let (child, info) = self.push_down_node(info, *child, depth)?;
                let keys = keys.into_iter().chain(info.representatives()?);
                let aggs = aggs.into_iter().map(|a| (a.output, a.func));
                Ok((Plan::group_by(keys, aggs, child), info))
            }
            Plan::Union { left, right } => self.set_op(info, Plan::union, *left, *right, depth),
            Plan::Intersect { left, right } => {
                self.set_op(info, Plan::intersect, *left, *right, depth)
            }
            Plan::Except { left, right } => self.set_op(info, Plan::except, *left, *right, depth),
            Plan::Cross { left, right } => {
                let ldep = self.references_outer(&left, &info)?;
                let rdep = self.references_outer(&right, &info)?;
                match (ldep, rdep) {
                    (true, true) => self.both_sides(info, None, *left, *right, depth),
                    (false, true) => {
                        let left = self.walk(*left)?;
                        let (right, info) = self.push_down_node(info, *right, depth)?;
                        Ok((Plan::cross(left, right), info))
                    }
                    _ => {
                        let (left, info) = self.push_down_node(info, *left, depth)?;
                        let right = self.walk(*right)?;
                        Ok((Plan::cross(left, right), info))
                    }
                }
            }
            Plan::Join { pred, left, right } => {
                let ldep = self.references_outer(&left, &info)?;
                let rdep = self.references_outer(&right, &info)?;
                match (ldep, rdep) {
                    (true, true) => self.both_sides(info, Some(pred), *left, *right, depth),
                    (false, true) => {
                        let left = self.walk(*left)?;
                        let (right, info) = self.push_down_node(info, *right, depth)?;
                        let pred = info.rewrite_columns(&pred)?;
                        Ok((Plan::join(pred, left, right), info))
                    }
                    _ => {
                        // covers a left-only dependency and a predicate-only
                        // dependency (push into the left, which may stop at
                        // once and produce the cross with D)
                        let (left, info) = self.push_down_node(info, *left, depth)?;
                        let right = self.walk(*right)?;
                        let pred = info.rewrite_columns(&pred)?;
                        Ok((Plan::join(pred, left, right), info))
                    }
                }
            }
            Plan::SemiJoin { pred, left, right } => {
                self.filtering_join(info, Plan::semi_join, pred, *left, *right, depth, false)
            }
            Plan::AntiJoin { pred, left, right } => {
                self.filtering_join(info, Plan::anti_join, pred, *left, *right, depth, false)
            }
            Plan::OuterJoin { pred, left, right } => {
                self.filtering_join(info, Plan::outer_join, pred, *left, *right, depth, true)
            }
            Plan::DependentJoin { pred, left, right } => {
                self.nested_dependent_join(info, pred, *left, *right, depth)
            }
        }
    }

    /// Set operations replicate `D` on both sides. The sides are pushed
    /// independently and the right side's representatives are then renamed
    /// onto the left side's, so both operands expose identical schemas.
    fn set_op(
        &mut self,
        info: UnnestingInfo,
        build: fn(Plan, Plan) -> Plan,
        left: Plan,
        right: Plan,
        depth: usize,
    ) -> Result<(Plan, UnnestingInfo), UnnestError> {
        let (l, linfo) = self.push_down_node(info.clone(), left, depth)?;
        let (mut r, rinfo) = self.push_down_node(info, right, depth)?;
        for d in &linfo.outer_refs {
            let want = linfo.representative(d)?;
            let have = rinfo.representative(d)?;
            r = Plan::rename(want, have, r);
        }
        Ok((build(l, r), linfo))
    }

    /// Cross products and joins whose two sides both reference the domain:
    /// replicate `D` into each side under fresh names, join on null-safe
    /// equality of the copies, and keep the left copy as representative.
    fn both_sides(
        &mut self,
        info: UnnestingInfo,
        pred: Option<ScalarExpr>,
        left: Plan,
        right: Plan,
        depth: usize,
    ) -> Result<(Plan, UnnestingInfo), UnnestError> {
        let (l, linfo) = self.push_down_node(info.clone(), left, depth)?;
        let (r, rinfo) = self.push_down_node(info, right, depth)?;

        let mut conjuncts = Vec::new();
        if let Some(p) = pred {
            let p = linfo.rewrite_columns(&p)?;
            if !p.is_true_literal() {
                conjuncts.push(p);
            }
        }
        let mut drop: BTreeSet<Attribute> = BTreeSet::new();
        for d in &linfo.outer_refs {
            let lrepr = linfo.representative(d)?;
            let rrepr = rinfo.representative(d)?;
            conjuncts.push(ScalarExpr::null_safe_eq(
                ScalarExpr::attr(lrepr),
                ScalarExpr::attr(rrepr.clone()),
            ));
            drop.insert(rrepr);
        }
        let joined = Plan::join(ScalarExpr::and_all(conjuncts), l, r);
        let keep: Vec<Attribute> =
            schema_of(&joined)?.into_iter().filter(|a| !drop.contains(a)).collect();
        Ok((Plan::project(keep, joined), linfo))
    }

    /// Semi, anti and outer joins. With an independent right side the domain
    /// only goes down the left; otherwise both sides carry it and the join
    /// condition gains the null-safe equalities. Outer joins keep their full
    /// schema, so the right-side copies are projected away afterwards.
    #[allow(clippy::too_many_arguments)]
    fn filtering_join(
        &mut self,
        info: UnnestingInfo,
        build: fn(ScalarExpr, Plan, Plan) -> Plan,
        pred: ScalarExpr,
        left: Plan,
        right: Plan,
        depth: usize,
        wide: bool,
    ) -> Result<(Plan, UnnestingInfo), UnnestError> {
        let rdep = self.references_outer(&right, &info)?;
        if !rdep {
            let (l, info) = self.push_down_node(info, left, depth)?;
            let right = self.walk(right)?;
            let pred = info.rewrite_columns(&pred)?;
            return Ok((build(pred, l, right), info));
        }

        let (l, linfo) = self.push_down_node(info.clone(), left, depth)?;
        let (r, rinfo) = self.push_down_node(info, right, depth)?;
        let mut conjuncts = Vec::new();
        let rewritten = linfo.rewrite_columns(&pred)?;
        if !rewritten.is_true_literal() {
            conjuncts.push(rewritten);
        }
        let mut drop: BTreeSet<Attribute> = BTreeSet::new();
        for d in &linfo.outer_refs {
            conjuncts.push(ScalarExpr::null_safe_eq(
                ScalarExpr::attr(linfo.representative(d)?),
                ScalarExpr::attr(rinfo.representative(d)?),
            ));
            drop.insert(rinfo.representative(d)?);
        }
        let node = build(ScalarExpr::and_all(conjuncts), l, r);
        if wide {
            let keep: Vec<Attribute> =
                schema_of(&node)?.into_iter().filter(|a| !drop.contains(a)).collect();
            Ok((Plan::project(keep, node), linfo))
        } else {
            Ok((node, linfo))
        }
    }

    /// A dependent join nested below the one being unnested: push `D` down
    /// its left side only, re-base the right side onto the new
    /// representatives, and restart the decomposition with a fresh domain
    /// computed from the rewritten left side.
    fn nested_dependent_join(
        &mut self,
        info: UnnestingInfo,
        pred: ScalarExpr,
        left: Plan,
        right: Plan,
        depth: usize,
    ) -> Result<(Plan, UnnestingInfo), UnnestError> {
        let (l, linfo) = self.push_down_node(info, left, depth)?;
        let pred = linfo.rewrite_columns(&pred)?;
        let right = right.substitute_attrs(&linfo.rename_map);

        let corr: BTreeSet<Attribute> = free_vars_plan(&right)?
            .intersection(&schema_of(&l)?)
            .cloned()
            .collect();
        if corr.is_empty() {
            let right = self.walk(right)?;
            return Ok((Plan::join(pred, l, right), linfo));
        }
        let rewritten = self.rewrite_correlated(pred, l, right, corr, depth + 1)?;
        Ok((rewritten, linfo))
    }

    /// The recursion's stop rule: the subtree no longer references the
    /// domain columns.
    fn stop(
        &mut self,
        mut info: UnnestingInfo,
        subtree: Plan,
    ) -> Result<(Plan, UnnestingInfo), UnnestError> {
        // dependent joins frozen inside the independent subtree still need
        // unnesting on their own
        let subtree = self.walk(subtree)?;
        let schema = schema_of(&subtree)?;

        let chi_gap = info.outer_refs.iter().find(|d| match info.equivalences.get(d) {
            Some(e) => !e.free_vars().is_subset(&schema),
            None => true,
        });
        let use_chi = match self.cfg.perfect_mode {
            PerfectMode::Never => false,
            PerfectMode::Auto => chi_gap.is_none(),
            PerfectMode::Always => match chi_gap {
                Some(d) => return Err(UnnestError::PerfectUnnestingIncomplete(d.clone())),
                None => true,
            },
        };

        if use_chi {
            // replace the domain columns by their proven local equivalents
            let mut plan = subtree;
            let outer: Vec<Attribute> = info.outer_refs.iter().cloned().collect();
            for d in outer {
                let fresh = d.renamed_copy();
                plan = Plan::map(fresh.clone(), info.equivalences[&d].clone(), plan);
                info.rename_map.insert(d, fresh);
            }
            Ok((plan, info))
        } else {
            // cross the subtree with a freshly renamed copy of the domain
            let mut inst = info.domain.clone();
            let outer: Vec<Attribute> = info.outer_refs.iter().cloned().collect();
            for d in outer {
                let fresh = d.renamed_copy();
                inst = Plan::rename(fresh.clone(), d.clone(), inst);
                info.rename_map.insert(d, fresh);
            }
            Ok((Plan::cross(inst, subtree), info))
        }
    }
}
