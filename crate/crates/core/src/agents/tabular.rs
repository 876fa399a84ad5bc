//! Tabular temporal-difference learners.

use super::{ActionValues, HasKey, Learner, Transition};
use crate::world::Action;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Action values per state. Entries never written read as zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    into = "QTableRecord<K>",
    from = "QTableRecord<K>",
    bound(serialize = "K: Ord + Clone + Serialize", deserialize = "K: Ord + Deserialize<'de>")
)]
pub struct QTable<K: Ord> {
    pub table: BTreeMap<K, ActionValues>,
    pub alpha: f64,
    pub gamma: f64,
}

#[derive(Serialize, Deserialize)]
struct QTableRecord<K> {
    alpha: f64,
    gamma: f64,
    entries: Vec<(K, ActionValues)>,
}

impl<K: Ord + Clone> From<QTable<K>> for QTableRecord<K> {
    fn from(q: QTable<K>) -> Self {
        Self { alpha: q.alpha, gamma: q.gamma, entries: q.table.into_iter().collect() }
    }
}

impl<K: Ord> From<QTableRecord<K>> for QTable<K> {
    fn from(r: QTableRecord<K>) -> Self {
        Self { table: r.entries.into_iter().collect(), alpha: r.alpha, gamma: r.gamma }
    }
}

impl<K: Ord + Clone> QTable<K> {
    pub fn new(alpha: f64, gamma: f64) -> Self {
        assert!(alpha > 0.0 && alpha <= 1.0, "alpha must lie in (0, 1]");
        assert!((0.0..1.0).contains(&gamma), "gamma must lie in [0, 1)");
        Self { table: BTreeMap::new(), alpha, gamma }
    }

    pub fn values(&self, s: &K) -> ActionValues {
        self.table.get(s).copied().unwrap_or([0.0; Action::COUNT])
    }

    pub fn get(&self, s: &K, a: Action) -> f64 {
        self.values(s)[a.index()]
    }

    pub fn max(&self, s: &K) -> f64 {
        self.values(s).into_iter().fold(f64::NEG_INFINITY, f64::max)
    }

    fn nudge(&mut self, s: &K, a: Action, target: f64) {
        let alpha = self.alpha;
        let row = self.table.entry(s.clone()).or_insert([0.0; Action::COUNT]);
        row[a.index()] += alpha * (target - row[a.index()]);
    }
}

/// Off-policy update toward `r + γ·max Q(s',·)`.
pub fn q_update<K: Ord + Clone>(table: &mut QTable<K>, tr: &Transition<K>) {
    let bootstrap = if tr.terminal { 0.0 } else { table.max(&tr.next_state) };
    let target = tr.reward + table.gamma * bootstrap;
    table.nudge(&tr.state, tr.action, target);
}

/// On-policy update toward `r + γ·Q(s',a')` for the action actually taken next.
pub fn sarsa_update<K: Ord + Clone>(table: &mut QTable<K>, tr: &Transition<K>, next_action: Action) {
    let bootstrap = if tr.terminal { 0.0 } else { table.get(&tr.next_state, next_action) };
    let target = tr.reward + table.gamma * bootstrap;
    table.nudge(&tr.state, tr.action, target);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TdRule {
    QLearning,
    Sarsa,
}

/// A Q-table plus the update rule that trains it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "K: Ord + Clone + Serialize", deserialize = "K: Ord + Deserialize<'de>"))]
pub struct TabularAgent<K: Ord> {
    pub rule: TdRule,
    pub table: QTable<K>,
}

impl<K: Ord + Clone> TabularAgent<K> {
    pub fn new(rule: TdRule, alpha: f64, gamma: f64) -> Self {
        Self { rule, table: QTable::new(alpha, gamma) }
    }
}

impl<K: Ord + Clone, O: HasKey<K>> Learner<O> for TabularAgent<K> {
    fn action_values(&self, obs: &O) -> ActionValues {
        self.table.values(&obs.key())
    }

    fn on_policy(&self) -> bool {
        self.rule == TdRule::Sarsa
    }

    fn learn(&mut self, tr: &Transition<O>, next_action: Option<Action>) {
        let keyed = Transition {
            state: tr.state.key(),
            action: tr.action,
            reward: tr.reward,
            next_state: tr.next_state.key(),
            terminal: tr.terminal,
        };
        match (self.rule, next_action) {
            (TdRule::Sarsa, Some(a)) => sarsa_update(&mut self.table, &keyed, a),
            (TdRule::Sarsa, None) if tr.terminal => sarsa_update(&mut self.table, &keyed, Action::Stop),
            (TdRule::Sarsa, None) => panic!("sarsa needs the next action of a non-terminal step"),
            (TdRule::QLearning, _) => q_update(&mut self.table, &keyed),
        }
    }
}
