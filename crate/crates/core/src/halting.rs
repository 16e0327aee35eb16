//! Step-bounded Turing machines driving the `r_{n,j}` sequence and the
//! halting-dependent inputs `ω̂ₙ`.
//!
//! `ω̂ₙ` is `ω̄_{qₙ}` when the machine accepts `n` (after `qₙ` steps) and `ω*`
//! otherwise. Its `j`-th approximation `ω̄_{r_{n,j}}` is computable for every
//! `j`, but deciding which limit is reached needs the unbounded run. Every
//! decision here is made at a finite budget; lifting the budget is exactly
//! what cannot be done in general.
//!
//! # Machine format
//!
//! ```text
//! # comment
//! start <state>
//! accept <state>
//! <state> <symbol> -> <state> <symbol> <move>
//! ```
//!
//! Symbols are `0`, `1`, `_` (blank); moves are `L`, `R`, `S`. The table must
//! be total and deterministic on every non-accepting state and empty on the
//! accepting one. Input `n` is written as `n` ones starting under the head.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::adversarial::{limit_solution, omega, omega_star, separation_certificate, Family, FamilyParams};
use crate::qcbp::{embedded_select, Instance};
use crate::rational::{l2_norm_sq, Rational};

const REPORT_BITS: u32 = 32;

pub const EVEN_MACHINE: &str = include_str!("../machines/even.tm");

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MachineError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("missing start directive")]
    MissingStart,
    #[error("missing accept directive")]
    MissingAccept,
    #[error("start state is the accepting state")]
    StartIsAccept,
    #[error("line {line}: second transition for ({state}, {symbol})")]
    Nondeterministic { line: usize, state: String, symbol: char },
    #[error("line {line}: accepting state has a transition")]
    AcceptHasTransition { line: usize },
    #[error("no transition for ({state}, {symbol})")]
    NotTotal { state: String, symbol: char },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Symbol {
    Zero,
    One,
    Blank,
}

impl Symbol {
    const ALL: [Symbol; 3] = [Symbol::Zero, Symbol::One, Symbol::Blank];

    fn parse(s: &str) -> Option<Symbol> {
        match s {
            "0" => Some(Symbol::Zero),
            "1" => Some(Symbol::One),
            "_" => Some(Symbol::Blank),
            _ => None,
        }
    }

    fn index(self) -> usize {
        self as usize
    }

    fn as_char(self) -> char {
        match self {
            Symbol::Zero => '0',
            Symbol::One => '1',
            Symbol::Blank => '_',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Move {
    Left,
    Right,
    Stay,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Transition {
    next: usize,
    write: Symbol,
    mv: Move,
}

#[derive(Debug, Clone)]
pub struct BoundedMachine {
    states: Vec<String>,
    table: Vec<[Option<Transition>; 3]>,
    start: usize,
    accept: usize,
}

impl BoundedMachine {
    pub fn parse(text: &str) -> Result<Self, MachineError> {
        let mut ids: HashMap<String, usize> = HashMap::new();
        let mut states: Vec<String> = Vec::new();
        let mut intern = |name: &str, states: &mut Vec<String>| -> usize {
            *ids.entry(name.to_string()).or_insert_with(|| {
                states.push(name.to_string());
                states.len() - 1
            })
        };
        let mut start = None;
        let mut accept = None;
        let mut rules: Vec<(usize, usize, Symbol, Transition)> = Vec::new();

        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let toks: Vec<&str> = content.split_whitespace().collect();
            let err = |msg: &str| MachineError::Parse { line, msg: msg.to_string() };
            match toks.as_slice() {
                ["start", s] => {
                    if start.is_some() {
                        return Err(err("duplicate start directive"));
                    }
                    start = Some(intern(s, &mut states));
                }
                ["accept", s] => {
                    if accept.is_some() {
                        return Err(err("duplicate accept directive"));
                    }
                    accept = Some(intern(s, &mut states));
                }
                [q, sym, "->", q2, sym2, mv] => {
                    let read = Symbol::parse(sym).ok_or_else(|| err(&format!("unknown symbol '{sym}'")))?;
                    let write = Symbol::parse(sym2).ok_or_else(|| err(&format!("unknown symbol '{sym2}'")))?;
                    let mv = match *mv {
                        "L" => Move::Left,
                        "R" => Move::Right,
                        "S" => Move::Stay,
                        other => return Err(err(&format!("unknown move '{other}'"))),
                    };
                    let from = intern(q, &mut states);
                    let next = intern(q2, &mut states);
                    rules.push((line, from, read, Transition { next, write, mv }));
                }
                _ => return Err(err("expected 'start q', 'accept q' or 'q s -> q s M'")),
            }
        }

        let start = start.ok_or(MachineError::MissingStart)?;
        let accept = accept.ok_or(MachineError::MissingAccept)?;
        if start == accept {
            return Err(MachineError::StartIsAccept);
        }
        let mut table = vec![[None; 3]; states.len()];
        for (line, from, read, t) in rules {
            if from == accept {
                return Err(MachineError::AcceptHasTransition { line });
            }
            let slot = &mut table[from][read.index()];
            if slot.is_some() {
                return Err(MachineError::Nondeterministic {
                    line,
                    state: states[from].clone(),
                    symbol: read.as_char(),
                });
            }
            *slot = Some(t);
        }
        for (q, row) in table.iter().enumerate() {
            if q == accept {
                continue;
            }
            for s in Symbol::ALL {
                if row[s.index()].is_none() {
                    return Err(MachineError::NotTotal { state: states[q].clone(), symbol: s.as_char() });
                }
            }
        }
        Ok(BoundedMachine { states, table, start, accept })
    }

    /// The built-in parity machine: accepts even `n` after `n + 1` steps.
    pub fn even() -> Self {
        Self::parse(EVEN_MACHINE).expect("built-in machine parses")
    }

    /// Accepts `n` iff `k | n`, after `n + 1` steps; loops otherwise.
    pub fn divisible_by(k: usize) -> Self {
        assert!(k >= 1);
        let mut text = String::from("start c0\naccept yes\n");
        for r in 0..k {
            text.push_str(&format!("c{r} 1 -> c{} 1 R\n", (r + 1) % k));
            let blank = if r == 0 { "yes _ S" } else { "loop _ S" };
            text.push_str(&format!("c{r} _ -> {blank}\nc{r} 0 -> loop 0 S\n"));
        }
        text.push_str("loop 0 -> loop 0 S\nloop 1 -> loop 1 S\nloop _ -> loop _ S\n");
        Self::parse(&text).expect("generated machine parses")
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Accepted { steps: u64 },
    StillRunning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOutcome {
    pub status: RunStatus,
    pub steps_executed: u64,
}

impl RunOutcome {
    pub fn accepted_at(&self) -> Option<u64> {
        match self.status {
            RunStatus::Accepted { steps } => Some(steps),
            RunStatus::StillRunning => None,
        }
    }
}

/// Run `M` on unary `n` for at most `j` steps.
pub fn run_bounded(m: &BoundedMachine, n: u64, j: u64) -> RunOutcome {
    let mut tape: Vec<Symbol> = vec![Symbol::One; n as usize];
    let mut head: usize = 0;
    let mut state = m.start;
    let mut steps = 0;
    while steps < j {
        if head >= tape.len() {
            tape.push(Symbol::Blank);
        }
        let t = m.table[state][tape[head].index()].expect("total table");
        tape[head] = t.write;
        state = t.next;
        match t.mv {
            Move::Left => {
                if head == 0 {
                    tape.insert(0, Symbol::Blank);
                } else {
                    head -= 1;
                }
            }
            Move::Right => head += 1,
            Move::Stay => {}
        }
        steps += 1;
        if state == m.accept {
            return RunOutcome { status: RunStatus::Accepted { steps }, steps_executed: steps };
        }
    }
    RunOutcome { status: RunStatus::StillRunning, steps_executed: steps }
}

/// `r_{n,j}`: `qₙ` if `M` accepts `n` within `j` steps, `j` otherwise.
pub fn r_seq(m: &BoundedMachine, n: u64, j: u64) -> u64 {
    run_bounded(m, n, j).accepted_at().unwrap_or(j)
}

/// The family whose selected solutions stay away from `Ξ̃(ω*)`.
///
/// Lowest-index selection puts `Ξ̃(ω*)` on `e₁`, which is where the first
/// family's solutions converge; the second family is the separated one.
pub fn gadget_family(p: &FamilyParams) -> Family {
    let limit = limit_solution(p);
    if limit.get(Family::First.index()).is_zero() {
        Family::First
    } else {
        Family::Second
    }
}

/// `ω̄_i`, the separated family reindexed from its tail: `ω̄_i = ω_{i+1}`.
pub fn omega_bar(i: u64, p: &FamilyParams) -> Instance {
    let n = u32::try_from(i + 1).expect("index fits in u32");
    omega(gadget_family(p), n, p)
}

/// `ω̄_{r_{n,j}}`, the `j`-th approximation of `ω̂ₙ`.
pub fn omega_hat_approx(m: &BoundedMachine, n: u64, j: u64, p: &FamilyParams) -> Instance {
    omega_bar(r_seq(m, n, j), p)
}

/// `ω̂ₙ` given ground truth: `ω̄_{qₙ}` if accepted after `qₙ` steps, `ω*` otherwise.
pub fn omega_hat_limit(q_n: Option<u64>, p: &FamilyParams) -> Instance {
    match q_n {
        Some(q) => omega_bar(q, p),
        None => omega_star(p),
    }
}

/// `‖Ξ̃(inst) − Ξ̃(ω*)‖²` through the exact oracle.
pub fn distance_to_limit_sq(inst: &Instance, p: &FamilyParams) -> Rational {
    let x = embedded_select(inst).expect("family instance");
    l2_norm_sq(&x.checked_sub(&limit_solution(p)).expect("same length"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    In,
    NotHaltedAtBudget,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::In => "IN",
            Verdict::NotHaltedAtBudget => "NOT_HALTED_AT_BUDGET",
        })
    }
}

#[derive(Debug, Clone)]
pub struct Decision {
    pub verdict: Verdict,
    pub q_n: Option<u64>,
    pub dist_sq: Rational,
    /// `(κ*/4)²`.
    pub threshold_sq: Rational,
    /// Smallest `M` with `2⁻ᴹ < κ*/6`, the precision needed to resolve `κ*/4`.
    pub precision: u32,
    pub dist_lower: Rational,
    pub dist_upper: Rational,
    /// The approximation is above threshold although the machine has not
    /// accepted: the input is close to `ω*` but its solution is not.
    pub discontinuity_trap: bool,
}

/// Decide `n ∈ B` at finite budgets.
///
/// `IN` is sound: it requires both an accepting run within `j_budget` and a
/// separation above `κ*/4`. Everything else is `NOT_HALTED_AT_BUDGET`,
/// including the case where `precision_budget` is too small to resolve `κ*/4`.
pub fn decide_membership(
    m: &BoundedMachine,
    n: u64,
    j_budget: u64,
    precision_budget: u32,
    p: &FamilyParams,
) -> Decision {
    let kappa = separation_certificate(p, 1).kappa;
    let threshold = &kappa * Rational::frac(1, 4);
    let sixth = &kappa * Rational::frac(1, 6);
    let mut precision = 0u32;
    while Rational::pow2(-(precision as i64)) >= sixth {
        precision += 1;
    }

    let outcome = run_bounded(m, n, j_budget);
    let q_n = outcome.accepted_at();
    let approx = omega_bar(q_n.unwrap_or(j_budget), p);
    let dist_sq = distance_to_limit_sq(&approx, p);
    let threshold_sq = threshold.square();
    let above = dist_sq > threshold_sq;
    let resolved = precision <= precision_budget;
    let verdict = if above && q_n.is_some() && resolved { Verdict::In } else { Verdict::NotHaltedAtBudget };
    Decision {
        verdict,
        q_n,
        dist_lower: dist_sq.sqrt_floor(REPORT_BITS),
        dist_upper: dist_sq.sqrt_ceil(REPORT_BITS),
        dist_sq,
        threshold_sq,
        precision,
        discontinuity_trap: above && q_n.is_none(),
    }
}

pub const DECISION_HEADER: &str = "n,q_n,decision,dist_lower,dist_upper,threshold";

pub fn decisions_csv(rows: &[(u64, Decision)]) -> String {
    let mut out = String::from(DECISION_HEADER);
    out.push('\n');
    for (n, d) in rows {
        let q = d.q_n.map_or_else(|| "-".to_string(), |q| q.to_string());
        let threshold = d.threshold_sq.sqrt_floor(REPORT_BITS);
        out.push_str(&format!(
            "{n},{q},{},{},{},{}\n",
            d.verdict,
            d.dist_lower.to_decimal(8),
            d.dist_upper.to_decimal(8),
            threshold.to_decimal(8)
        ));
    }
    out
}
