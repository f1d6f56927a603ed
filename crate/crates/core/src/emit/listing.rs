//! Neutral pseudo-code listings and the textual IR of units.

use std::fmt::Write as _;

use crate::classify::{AtomicAction, ClassifiedContract, EffectNode, GuardTree};
use crate::logic::BusinessLogicUnit;
use crate::ocl::{print_expr, LetBinding};

/// Renders a guard tree as an OCL-like condition.
pub fn guard_text(g: &GuardTree, leaves: &[AtomicAction]) -> String {
    let wrap = |g: &GuardTree, s: String| match g {
        GuardTree::And(_) | GuardTree::Or(_) | GuardTree::If { .. } => format!("({s})"),
        _ => s,
    };
    match g {
        GuardTree::True => "true".to_string(),
        GuardTree::False => "false".to_string(),
        GuardTree::Leaf(i) => print_expr(&leaves[*i].action.pattern()),
        GuardTree::And(cs) => cs
            .iter()
            .map(|c| wrap(c, guard_text(c, leaves)))
            .collect::<Vec<_>>()
            .join(" and "),
        GuardTree::Or(cs) => cs
            .iter()
            .map(|c| wrap(c, guard_text(c, leaves)))
            .collect::<Vec<_>>()
            .join(" or "),
        GuardTree::Not(c) => format!("not ({})", guard_text(c, leaves)),
        GuardTree::If {
            cond,
            then,
            otherwise,
        } => format!(
            "if {} then {} else {} endif",
            guard_text(cond, leaves),
            guard_text(then, leaves),
            guard_text(otherwise, leaves)
        ),
    }
}

fn line(out: &mut String, depth: usize, text: &str) {
    let _ = writeln!(out, "{:width$}{text}", "", width = depth * 2);
}

fn local(out: &mut String, depth: usize, l: &LetBinding) {
    if let Some(init) = &l.init {
        line(out, depth, &format!("{} := {}", l.name, print_expr(init)));
    }
}

fn action_line(a: &AtomicAction) -> String {
    match a.action.binds() {
        Some(v) => format!("{v} := {}", a.action.call_text()),
        None => a.action.call_text(),
    }
}

fn effects(out: &mut String, depth: usize, nodes: &[EffectNode], c: &ClassifiedContract) {
    for n in nodes {
        match n {
            EffectNode::Action(i) => line(out, depth, &action_line(&c.effect_actions[*i])),
            EffectNode::Branch {
                cond,
                then,
                otherwise,
            } => {
                line(
                    out,
                    depth,
                    &format!("if {} then", guard_text(cond, &c.guard_actions)),
                );
                if then.is_empty() {
                    line(out, depth + 1, "skip");
                }
                effects(out, depth + 1, then, c);
                if !otherwise.is_empty() {
                    line(out, depth, "else");
                    effects(out, depth + 1, otherwise, c);
                }
                line(out, depth, "endif");
            }
        }
    }
}

/// The pseudo-code listing of a unit. A contract with a `true` guard, no
/// effects and a Boolean output gives four lines.
pub fn render_listing(unit: &BusinessLogicUnit) -> String {
    let c = &unit.contract;
    let mut out = String::new();
    line(&mut out, 0, &format!("operation {}", unit.signature));
    for a in &c.definition_actions {
        line(&mut out, 1, &action_line(a));
    }
    for l in &c.pre_locals {
        local(&mut out, 1, l);
    }
    line(
        &mut out,
        1,
        &format!("if {} then", guard_text(&c.guard, &c.guard_actions)),
    );
    for l in &c.post_locals {
        local(&mut out, 2, l);
    }
    effects(&mut out, 2, &c.effects, c);
    let ret = c.result.as_ref().map_or("true".to_string(), print_expr);
    line(&mut out, 2, &format!("return {ret}"));
    line(
        &mut out,
        1,
        &format!(
            "else raise {}(\"{}\")",
            unit.failure.name, unit.failure.operation
        ),
    );
    out
}

/// Lines of code: non-blank listing lines.
pub fn count_loc(listing: &str) -> usize {
    listing.lines().filter(|l| !l.trim().is_empty()).count()
}

fn ir_guard(out: &mut String, depth: usize, g: &GuardTree) {
    match g {
        GuardTree::True => line(out, depth, "true"),
        GuardTree::False => line(out, depth, "false"),
        GuardTree::Leaf(i) => line(out, depth, &format!("leaf g{i}")),
        GuardTree::And(cs) | GuardTree::Or(cs) => {
            line(
                out,
                depth,
                if matches!(g, GuardTree::And(_)) {
                    "and"
                } else {
                    "or"
                },
            );
            for c in cs {
                ir_guard(out, depth + 1, c);
            }
        }
        GuardTree::Not(c) => {
            line(out, depth, "not");
            ir_guard(out, depth + 1, c);
        }
        GuardTree::If {
            cond,
            then,
            otherwise,
        } => {
            line(out, depth, "if");
            ir_guard(out, depth + 1, cond);
            line(out, depth, "then");
            ir_guard(out, depth + 1, then);
            line(out, depth, "else");
            ir_guard(out, depth + 1, otherwise);
        }
    }
}

fn ir_effects(out: &mut String, depth: usize, nodes: &[EffectNode]) {
    for n in nodes {
        match n {
            EffectNode::Action(i) => line(out, depth, &format!("do e{i}")),
            EffectNode::Branch {
                cond,
                then,
                otherwise,
            } => {
                line(out, depth, "branch");
                ir_guard(out, depth + 1, cond);
                line(out, depth, "then");
                ir_effects(out, depth + 1, then);
                line(out, depth, "else");
                ir_effects(out, depth + 1, otherwise);
                line(out, depth, "end");
            }
        }
    }
}

fn ir_action(out: &mut String, tag: &str, i: usize, a: &AtomicAction) {
    line(out, 1, &format!("{tag}{i} {a}"));
    for f in &a.folded {
        line(out, 2, &format!("folds {f}"));
    }
}

/// The unit's intermediate form: numbered actions plus the block
/// structure that refers to them.
pub fn render_ir(unit: &BusinessLogicUnit) -> String {
    let c = &unit.contract;
    let mut out = String::new();
    line(
        &mut out,
        0,
        &format!("unit {}::{}", unit.service, unit.signature),
    );
    line(&mut out, 0, "definitions");
    for (i, a) in c.definition_actions.iter().enumerate() {
        ir_action(&mut out, "d", i, a);
    }
    for (v, e) in &c.fresh {
        line(&mut out, 1, &format!("fresh {v} : {e}"));
    }
    for l in &c.pre_locals {
        if let Some(init) = &l.init {
            line(
                &mut out,
                1,
                &format!("let {} = {}", l.name, print_expr(init)),
            );
        }
    }
    line(&mut out, 0, "guards");
    for (i, a) in c.guard_actions.iter().enumerate() {
        ir_action(&mut out, "g", i, a);
    }
    line(&mut out, 0, "precondition");
    ir_guard(&mut out, 1, &c.guard);
    line(&mut out, 0, "effects");
    for (i, a) in c.effect_actions.iter().enumerate() {
        ir_action(&mut out, "e", i, a);
    }
    line(&mut out, 0, "body");
    for l in &c.post_locals {
        if let Some(init) = &l.init {
            line(
                &mut out,
                1,
                &format!("let {} = {}", l.name, print_expr(init)),
            );
        }
    }
    ir_effects(&mut out, 1, &c.effects);
    let ret = c.result.as_ref().map_or("true".to_string(), print_expr);
    line(&mut out, 0, &format!("return {ret}"));
    line(
        &mut out,
        0,
        &format!(
            "failure {}(\"{}\")",
            unit.failure.name, unit.failure.operation
        ),
    );
    out
}
