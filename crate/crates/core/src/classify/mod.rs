//! Maps every contract clause onto one of the atomic CRUD actions.
//!
//! Definitions become finds, precondition leaves become guard checks
//! arranged in a [`GuardTree`], and postcondition clauses become effects
//! arranged in [`EffectNode`] blocks.

mod action;
mod rules;

use std::fmt::Write as _;

pub use action::{Action, ActionKind, AtomicAction, FindCriterion, Role};
pub use rules::{classify_contract, classify_model};

use crate::model::Param;
use crate::ocl::{Expr, LetBinding, Type};
use crate::span::Span;

/// Boolean structure of a precondition or branch condition. Leaves index
/// into [`ClassifiedContract::guard_actions`].
#[derive(Clone, Debug, PartialEq)]
pub enum GuardTree {
    True,
    False,
    Leaf(usize),
    And(Vec<GuardTree>),
    Or(Vec<GuardTree>),
    Not(Box<GuardTree>),
    If {
        cond: Box<GuardTree>,
        then: Box<GuardTree>,
        otherwise: Box<GuardTree>,
    },
}

impl GuardTree {
    /// Leaf indices in left-to-right order.
    pub fn leaves(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect(&mut out);
        out
    }

    fn collect(&self, out: &mut Vec<usize>) {
        match self {
            GuardTree::True | GuardTree::False => {}
            GuardTree::Leaf(i) => out.push(*i),
            GuardTree::And(cs) | GuardTree::Or(cs) => cs.iter().for_each(|c| c.collect(out)),
            GuardTree::Not(c) => c.collect(out),
            GuardTree::If {
                cond,
                then,
                otherwise,
            } => {
                cond.collect(out);
                then.collect(out);
                otherwise.collect(out);
            }
        }
    }
}

/// A block of effects. `Action` indexes into
/// [`ClassifiedContract::effect_actions`].
#[derive(Clone, Debug, PartialEq)]
pub enum EffectNode {
    Action(usize),
    Branch {
        cond: GuardTree,
        then: Vec<EffectNode>,
        otherwise: Vec<EffectNode>,
    },
}

/// A contract after classification.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassifiedContract {
    pub service: String,
    pub operation: String,
    pub inputs: Vec<Param>,
    pub output: Type,
    pub span: Span,
    pub definition_actions: Vec<AtomicAction>,
    /// Object variables declared without a value, with their entity.
    pub fresh: Vec<(String, String)>,
    pub pre_locals: Vec<LetBinding>,
    pub guard_actions: Vec<AtomicAction>,
    pub guard: GuardTree,
    pub post_locals: Vec<LetBinding>,
    pub effect_actions: Vec<AtomicAction>,
    pub effects: Vec<EffectNode>,
    pub result: Option<Expr>,
}

impl ClassifiedContract {
    /// Definition, guard and effect actions, in that order.
    pub fn actions(&self) -> impl Iterator<Item = &AtomicAction> {
        self.definition_actions
            .iter()
            .chain(&self.guard_actions)
            .chain(&self.effect_actions)
    }

    /// The AA metric: number of atomic actions.
    pub fn action_count(&self) -> usize {
        self.definition_actions.len() + self.guard_actions.len() + self.effect_actions.len()
    }

    pub fn fresh_entity(&self, var: &str) -> Option<&str> {
        self.fresh
            .iter()
            .find(|(v, _)| v == var)
            .map(|(_, e)| e.as_str())
    }
}

/// One line per action: `kind(args) @ file:line:col`.
pub fn dump_actions(c: &ClassifiedContract) -> String {
    let mut out = String::new();
    for a in c.actions() {
        let _ = writeln!(out, "{a}");
    }
    out
}
