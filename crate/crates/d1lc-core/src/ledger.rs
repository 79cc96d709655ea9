//! Round accounting for the fully connected message-passing model.
//!
//! Nothing is actually transmitted; each algorithm phase declares its
//! communication pattern and the ledger converts it into a round charge,
//! rejecting phases whose load could not be scheduled within the model's
//! per-node bandwidth assumptions.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

#[derive(Clone, Copy, PartialEq, Debug)]
pub enum LedgerError {
    /// A phase declared more load than the model permits.
    BandwidthViolation { load: u64, cap: u64 },
}

impl fmt::Display for LedgerError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LedgerError::BandwidthViolation { load, cap } => {
                write!(f, "declared load {load} words exceeds cap {cap}")
            }
        }
    }
}

/// Communication pattern of one phase, with loads in words.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum Pattern {
    /// General redistribution: any node sends at most `max_sender` and
    /// receives at most `max_receiver` words.
    Route { max_sender: u64, max_receiver: u64 },
    /// `words` words gathered at a single node.
    Collect { words: u64 },
    /// One word from one node to everyone.
    Broadcast,
}

#[derive(Clone, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Phase {
    pub label: String,
    pub pattern: Pattern,
    pub rounds: u64,
}

/// Accumulates round charges for one run.
#[derive(Clone, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RoundLedger {
    n: u64,
    /// Constant factor charged per unit of routing load.
    routing_constant: u64,
    /// Per-node load cap for routing and collection, as a multiple of n.
    load_cap: u64,
    phases: Vec<Phase>,
    total: u64,
}

impl RoundLedger {
    pub fn new(n: usize, routing_constant: u64, load_cap: u64) -> RoundLedger {
        RoundLedger {
            n: (n as u64).max(1),
            routing_constant: routing_constant.max(1),
            load_cap: load_cap.max(1),
            phases: Vec::new(),
            total: 0,
        }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn total_rounds(&self) -> u64 {
        self.total
    }

    pub fn phases(&self) -> &[Phase] {
        &self.phases
    }

    /// Charges one phase and returns its round cost.
    pub fn charge(&mut self, label: &str, pattern: Pattern) -> Result<u64, LedgerError> {
        let cap = self.load_cap * self.n;
        let rounds = match pattern {
            Pattern::Route { max_sender, max_receiver } => {
                let load = max_sender.max(max_receiver);
                if load > cap {
                    return Err(LedgerError::BandwidthViolation { load, cap });
                }
                self.routing_constant * load.div_ceil(self.n).max(1)
            }
            Pattern::Collect { words } => {
                if words > cap {
                    return Err(LedgerError::BandwidthViolation { load: words, cap });
                }
                words.div_ceil(self.n).max(1)
            }
            Pattern::Broadcast => 1,
        };
        self.total += rounds;
        self.phases.push(Phase { label: String::from(label), pattern, rounds });
        Ok(rounds)
    }

    /// Charges a phase at its provisioned worst case: the declared
    /// loads are validated against the cap, but the round cost is the
    /// fixed amount the synchronous schedule reserves for the slot
    /// (`routing_constant * load_cap` for routing, `load_cap` for
    /// collection).  Lockstep algorithms charge their round program,
    /// not the data that happens to flow through it, which keeps the
    /// total independent of the instance.
    pub fn charge_capacity(&mut self, label: &str, pattern: Pattern) -> Result<u64, LedgerError> {
        let cap = self.load_cap * self.n;
        let load = match pattern {
            Pattern::Route { max_sender, max_receiver } => max_sender.max(max_receiver),
            Pattern::Collect { words } => words,
            Pattern::Broadcast => 0,
        };
        if load > cap {
            return Err(LedgerError::BandwidthViolation { load, cap });
        }
        let rounds = match pattern {
            Pattern::Route { .. } => self.routing_constant * self.load_cap,
            Pattern::Collect { .. } => self.load_cap,
            Pattern::Broadcast => 1,
        };
        self.total += rounds;
        self.phases.push(Phase { label: String::from(label), pattern, rounds });
        Ok(rounds)
    }

    /// Phases whose combined charge pushed the total past `budget`.
    pub fn over_budget(&self, budget: u64) -> Option<BudgetBreach> {
        if self.total <= budget {
            return None;
        }
        Some(BudgetBreach { budget, total: self.total, phases: self.phases.clone() })
    }
}

#[derive(Clone, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct BudgetBreach {
    pub budget: u64,
    pub total: u64,
    pub phases: Vec<Phase>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn route_charges_scaled_ceiling() {
        let mut l = RoundLedger::new(100, 2, 16);
        // load below n: one unit of routing
        assert_eq!(l.charge("a", Pattern::Route { max_sender: 10, max_receiver: 90 }).unwrap(), 2);
        // load 250 over n=100: ceil -> 3 units, times constant
        assert_eq!(
            l.charge("b", Pattern::Route { max_sender: 250, max_receiver: 100 }).unwrap(),
            6
        );
        assert_eq!(l.total_rounds(), 8);
    }

    #[test]
    fn collect_and_broadcast() {
        let mut l = RoundLedger::new(100, 2, 16);
        assert_eq!(l.charge("c", Pattern::Collect { words: 350 }).unwrap(), 4);
        assert_eq!(l.charge("d", Pattern::Broadcast).unwrap(), 1);
        assert_eq!(l.total_rounds(), 5);
    }

    #[test]
    fn overload_is_rejected() {
        let mut l = RoundLedger::new(10, 2, 4);
        let err = l.charge("x", Pattern::Collect { words: 41 }).unwrap_err();
        assert_eq!(err, LedgerError::BandwidthViolation { load: 41, cap: 40 });
        // failed phases are not recorded
        assert_eq!(l.total_rounds(), 0);
        assert!(l.phases().is_empty());
    }

    #[test]
    fn budget_breach_reports_phases() {
        let mut l = RoundLedger::new(10, 1, 16);
        l.charge("a", Pattern::Broadcast).unwrap();
        l.charge("b", Pattern::Broadcast).unwrap();
        assert!(l.over_budget(2).is_none());
        let breach = l.over_budget(1).unwrap();
        assert_eq!(breach.total, 2);
        assert_eq!(breach.phases.len(), 2);
    }
}
