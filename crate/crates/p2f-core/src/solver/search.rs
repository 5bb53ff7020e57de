//! Backtracking enumeration with eager constraint resolution.
//!
//! The verification condition has a functional core: every non-free variable
//! is defined by an expression or branch join over earlier variables. The
//! search therefore only enumerates free variables; defined variables are
//! computed at the level where their support is complete. After every
//! assignment all still-pending constraints are re-evaluated three-valued:
//! a constraint that comes out false prunes the subtree immediately (this is
//! what makes guarded havoc constraints cheap: a false guard settles the
//! implication before the havoc variable is ever enumerated), one that comes
//! out true is retired for the subtree.
//!
//! Free variables relevant to the goal are ordered first so a verified
//! obligation is usually exhausted after a shallow prefix, and unconstrained
//! trailing variables never multiply the work.

use super::SolverConfig;
use crate::lang::ast::{BinOp, Ty};
use crate::vcgen::{Obligation, Term, VarId, VcDef};
use crate::Value;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

/// Integer interval or boolean domain of one enumerated variable.
#[derive(Debug, Clone)]
enum Domain {
    Int { lo: i64, hi: i64 },
    Bool { allowed: [bool; 2] },
}

impl Domain {
    fn size(&self) -> u64 {
        match self {
            Domain::Int { lo, hi } => {
                if lo > hi {
                    0
                } else {
                    (hi - lo + 1) as u64
                }
            }
            Domain::Bool { allowed } => allowed.iter().filter(|b| **b).count() as u64,
        }
    }

    fn value_at(&self, k: u64) -> Value {
        match self {
            Domain::Int { lo, .. } => Value::Int(lo + k as i64),
            Domain::Bool { allowed } => {
                let mut idx = k;
                for (i, a) in allowed.iter().enumerate() {
                    if *a {
                        if idx == 0 {
                            return Value::Bool(i == 1);
                        }
                        idx -= 1;
                    }
                }
                unreachable!("domain index out of range")
            }
        }
    }
}

struct SearchVar {
    id: VarId,
    domain: Domain,
    /// Enumeration permutation `k -> (offset + k * stride) % size`.
    offset: u64,
    stride: u64,
}

impl SearchVar {
    fn value_at(&self, k: u64) -> Value {
        let n = self.domain.size();
        let idx = (self.offset + k.wrapping_mul(self.stride)) % n;
        self.domain.value_at(idx)
    }
}

pub(super) struct Csp {
    vars_len: usize,
    constraints: Vec<Term>,
    order: Vec<SearchVar>,
    /// Defined variables computable once level `i` is assigned.
    defs_at_level: Vec<Vec<(usize, VcDef)>>,
    /// Defined variables with no enumerated support, computed up front.
    pre_defs: Vec<(usize, VcDef)>,
    /// Fixed values for unconstrained non-initial free variables.
    canonical: Vec<(usize, Value)>,
    /// Level at which the initial-state projection is complete.
    blocking_level: Option<usize>,
    initial_ids: Vec<VarId>,
    max_steps: u64,
    steps: u64,
}

enum Flow {
    Continue,
    /// A model was found; unwind to the blocking level (or stop when there
    /// are no initial variables to vary).
    Unwind(usize),
    Stop,
    Budget,
}

impl Csp {
    pub(super) fn build(ob: &Obligation, cfg: &SolverConfig) -> Csp {
        let vc = &ob.vc;
        let n = vc.vars.len();

        // active constraint set: assumption prefix, reach guard, negated goal
        let mut constraints: Vec<Term> = ob.assumptions().to_vec();
        constraints.push(ob.guard.clone());
        constraints.push(Term::not(ob.goal.clone()));

        // free support of every variable
        let mut free_support: Vec<BTreeSet<VarId>> = Vec::with_capacity(n);
        for (i, var) in vc.vars.iter().enumerate() {
            let support = match &var.def {
                None => BTreeSet::from([VarId(i as u32)]),
                Some(VcDef::Expr(t)) => union_support(&free_support, t.vars()),
                Some(VcDef::Join {
                    cond,
                    then_v,
                    else_v,
                }) => {
                    let mut s = union_support(&free_support, cond.vars());
                    s.extend(free_support[then_v.index()].iter().copied());
                    s.extend(free_support[else_v.index()].iter().copied());
                    s
                }
            };
            free_support.push(support);
        }
        let constraint_support: Vec<BTreeSet<VarId>> = constraints
            .iter()
            .map(|c| union_support(&free_support, c.vars()))
            .collect();

        // enumerate the initial-state inputs plus every free variable some
        // constraint depends on
        let initial: BTreeSet<VarId> = vc.initial_vars.iter().copied().collect();
        let mut enumerated: BTreeSet<VarId> = initial.clone();
        for s in &constraint_support {
            enumerated.extend(s.iter().copied());
        }

        // goal-relevant variables first, each group in creation order
        let goal_support = union_support(&free_support, ob.goal.vars());
        let mut order_ids: Vec<VarId> = Vec::new();
        order_ids.extend(enumerated.iter().copied().filter(|v| goal_support.contains(v)));
        order_ids.extend(enumerated.iter().copied().filter(|v| !goal_support.contains(v)));

        // interval narrowing from unguarded unary conjuncts
        let mut domains: Vec<Domain> = order_ids
            .iter()
            .map(|id| match vc.vars[id.index()].ty {
                Ty::Int => Domain::Int {
                    lo: -cfg.bound,
                    hi: cfg.bound,
                },
                Ty::Bool => Domain::Bool {
                    allowed: [true, true],
                },
            })
            .collect();
        for c in &constraints {
            for atom in c.conjuncts() {
                narrow(&mut domains, &order_ids, &atom);
            }
        }

        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let order: Vec<SearchVar> = order_ids
            .iter()
            .zip(domains.into_iter())
            .map(|(id, domain)| {
                let size = domain.size();
                let (offset, stride) = if cfg.seed == 0 || size <= 1 {
                    (0, 1)
                } else {
                    let offset = rng.gen_range(0..size);
                    let mut stride = rng.gen_range(1..size.max(2));
                    while gcd(stride, size) != 1 {
                        stride = (stride % size.max(1)) + 1;
                    }
                    (offset, stride)
                };
                SearchVar {
                    id: *id,
                    domain,
                    offset,
                    stride,
                }
            })
            .collect();

        let rank: Vec<Option<usize>> = {
            let mut r = vec![None; n];
            for (level, sv) in order.iter().enumerate() {
                r[sv.id.index()] = Some(level);
            }
            r
        };
        let level_of_support = |support: &BTreeSet<VarId>| -> Option<usize> {
            support.iter().filter_map(|id| rank[id.index()]).max()
        };

        let canonical: Vec<(usize, Value)> = (0..n)
            .filter(|i| vc.vars[*i].def.is_none() && rank[*i].is_none())
            .map(|i| {
                let v = match vc.vars[i].ty {
                    Ty::Int => Value::Int(0),
                    Ty::Bool => Value::Bool(false),
                };
                (i, v)
            })
            .collect();

        let mut pre_defs = Vec::new();
        let mut defs_at_level: Vec<Vec<(usize, VcDef)>> =
            (0..order.len()).map(|_| Vec::new()).collect();
        for (i, var) in vc.vars.iter().enumerate() {
            if let Some(def) = &var.def {
                match level_of_support(&free_support[i]) {
                    None => pre_defs.push((i, def.clone())),
                    Some(level) => defs_at_level[level].push((i, def.clone())),
                }
            }
        }

        let blocking_level = vc
            .initial_vars
            .iter()
            .filter_map(|id| rank[id.index()])
            .max();

        Csp {
            vars_len: n,
            constraints,
            order,
            defs_at_level,
            pre_defs,
            canonical,
            blocking_level,
            initial_ids: vc.initial_vars.clone(),
            max_steps: cfg.max_steps,
            steps: 0,
        }
    }

    /// Enumerate up to `want` models whose initial projection is not in
    /// `blocked`. Returns `(models, budget_exceeded)`.
    pub(super) fn enumerate(
        &mut self,
        want: usize,
        blocked: &[Vec<Value>],
    ) -> (Vec<Vec<Value>>, bool) {
        let mut state = SearchState {
            values: vec![Value::Int(0); self.vars_len],
            assigned: vec![false; self.vars_len],
            resolved: vec![false; self.constraints.len()],
            blocked: blocked.iter().cloned().collect(),
            models: Vec::new(),
        };
        for (i, v) in &self.canonical {
            state.values[*i] = *v;
            state.assigned[*i] = true;
        }
        for (i, def) in &self.pre_defs {
            if def_support_assigned(def, &state.assigned) {
                state.values[*i] = eval_def_total(def, &state.values);
                state.assigned[*i] = true;
            }
        }
        // settle whatever is already decidable
        for (ci, c) in self.constraints.iter().enumerate() {
            match peval(c, &state.values, &state.assigned) {
                Some(false) => return (Vec::new(), false),
                Some(true) => state.resolved[ci] = true,
                None => {}
            }
        }

        if self.order.is_empty() {
            if state.blocked.is_empty() && state.resolved.iter().all(|r| *r) {
                let values = state.values.clone();
                return (vec![values], false);
            }
            return (Vec::new(), false);
        }

        let flow = self.dfs(0, &mut state, want);
        (state.models, matches!(flow, Flow::Budget))
    }

    fn dfs(&mut self, level: usize, state: &mut SearchState, want: usize) -> Flow {
        let var_index = self.order[level].id.index();
        state.assigned[var_index] = true;
        for (i, _) in &self.defs_at_level[level] {
            state.assigned[*i] = true;
        }

        let size = self.order[level].domain.size();
        let mut k = 0;
        let flow = 'values: loop {
            if k >= size {
                break Flow::Continue;
            }
            self.steps += 1;
            if self.steps > self.max_steps {
                break Flow::Budget;
            }
            state.values[var_index] = self.order[level].value_at(k);
            k += 1;

            for (i, def) in &self.defs_at_level[level] {
                state.values[*i] = eval_def_total(def, &state.values);
            }

            // re-evaluate pending constraints; false prunes, true retires
            let mut newly_resolved: Vec<usize> = Vec::new();
            let mut feasible = true;
            for ci in 0..self.constraints.len() {
                if state.resolved[ci] {
                    continue;
                }
                match peval(&self.constraints[ci], &state.values, &state.assigned) {
                    Some(false) => {
                        feasible = false;
                        break;
                    }
                    Some(true) => {
                        state.resolved[ci] = true;
                        newly_resolved.push(ci);
                    }
                    None => {}
                }
            }
            if feasible && Some(level) == self.blocking_level {
                let projection: Vec<Value> = self
                    .initial_ids
                    .iter()
                    .map(|id| state.values[id.index()])
                    .collect();
                if state.blocked.contains(&projection) {
                    feasible = false;
                }
            }

            if feasible {
                if level + 1 == self.order.len() {
                    debug_assert!(state.resolved.iter().all(|r| *r));
                    state.models.push(state.values.clone());
                    let projection: Vec<Value> = self
                        .initial_ids
                        .iter()
                        .map(|id| state.values[id.index()])
                        .collect();
                    state.blocked.insert(projection);
                    for ci in newly_resolved {
                        state.resolved[ci] = false;
                    }
                    if state.models.len() >= want {
                        break Flow::Stop;
                    }
                    match self.blocking_level {
                        None => break Flow::Stop,
                        Some(bl) if bl == level => continue 'values,
                        Some(bl) => break Flow::Unwind(bl),
                    }
                }
                let inner = self.dfs(level + 1, state, want);
                for ci in newly_resolved {
                    state.resolved[ci] = false;
                }
                match inner {
                    Flow::Continue => {}
                    Flow::Unwind(target) => {
                        if target < level {
                            break Flow::Unwind(target);
                        }
                        // target == level: resume with the next value here
                    }
                    Flow::Stop => break Flow::Stop,
                    Flow::Budget => break Flow::Budget,
                }
            } else {
                for ci in newly_resolved {
                    state.resolved[ci] = false;
                }
            }
        };

        state.assigned[var_index] = false;
        for (i, _) in &self.defs_at_level[level] {
            state.assigned[*i] = false;
        }
        flow
    }
}

struct SearchState {
    values: Vec<Value>,
    assigned: Vec<bool>,
    resolved: Vec<bool>,
    blocked: std::collections::HashSet<Vec<Value>>,
    models: Vec<Vec<Value>>,
}

/// Three-valued evaluation: `None` when unassigned variables keep the value
/// undetermined. Short-circuits settle guarded constraints early.
fn peval(t: &Term, values: &[Value], assigned: &[bool]) -> Option<Value> {
    match t {
        Term::Int(n) => Some(Value::Int(*n)),
        Term::Bool(b) => Some(Value::Bool(*b)),
        Term::Var(v) => {
            if assigned[v.index()] {
                Some(values[v.index()])
            } else {
                None
            }
        }
        Term::Neg(inner) => peval(inner, values, assigned).map(|v| Value::Int(-v.as_int())),
        Term::Not(inner) => peval(inner, values, assigned).map(|v| Value::Bool(!v.as_bool())),
        Term::Bin(op, a, b) => {
            match op {
                BinOp::And => {
                    let va = peval(a, values, assigned);
                    if va == Some(Value::Bool(false)) {
                        return Some(Value::Bool(false));
                    }
                    let vb = peval(b, values, assigned);
                    if vb == Some(Value::Bool(false)) {
                        return Some(Value::Bool(false));
                    }
                    match (va, vb) {
                        (Some(x), Some(y)) => Some(Value::Bool(x.as_bool() && y.as_bool())),
                        _ => None,
                    }
                }
                BinOp::Or => {
                    let va = peval(a, values, assigned);
                    if va == Some(Value::Bool(true)) {
                        return Some(Value::Bool(true));
                    }
                    let vb = peval(b, values, assigned);
                    if vb == Some(Value::Bool(true)) {
                        return Some(Value::Bool(true));
                    }
                    match (va, vb) {
                        (Some(x), Some(y)) => Some(Value::Bool(x.as_bool() || y.as_bool())),
                        _ => None,
                    }
                }
                BinOp::Implies => {
                    let va = peval(a, values, assigned);
                    if va == Some(Value::Bool(false)) {
                        return Some(Value::Bool(true));
                    }
                    let vb = peval(b, values, assigned);
                    if vb == Some(Value::Bool(true)) {
                        return Some(Value::Bool(true));
                    }
                    match (va, vb) {
                        (Some(x), Some(y)) => Some(Value::Bool(!x.as_bool() || y.as_bool())),
                        _ => None,
                    }
                }
                _ => {
                    let va = peval(a, values, assigned)?;
                    let vb = peval(b, values, assigned)?;
                    Some(match op {
                        BinOp::Add => Value::Int(va.as_int().wrapping_add(vb.as_int())),
                        BinOp::Sub => Value::Int(va.as_int().wrapping_sub(vb.as_int())),
                        BinOp::Mul => Value::Int(va.as_int().wrapping_mul(vb.as_int())),
                        BinOp::Mod => Value::Int(crate::euclid_mod(va.as_int(), vb.as_int())),
                        BinOp::Eq => Value::Bool(va == vb),
                        BinOp::Ne => Value::Bool(va != vb),
                        BinOp::Lt => Value::Bool(va.as_int() < vb.as_int()),
                        BinOp::Le => Value::Bool(va.as_int() <= vb.as_int()),
                        BinOp::Gt => Value::Bool(va.as_int() > vb.as_int()),
                        BinOp::Ge => Value::Bool(va.as_int() >= vb.as_int()),
                        BinOp::And | BinOp::Or | BinOp::Implies => unreachable!(),
                    })
                }
            }
        }
    }
}

fn eval_def_total(def: &VcDef, values: &[Value]) -> Value {
    match def {
        VcDef::Expr(t) => t.eval(values),
        VcDef::Join {
            cond,
            then_v,
            else_v,
        } => {
            if cond.eval(values).as_bool() {
                values[then_v.index()]
            } else {
                values[else_v.index()]
            }
        }
    }
}

fn def_support_assigned(def: &VcDef, assigned: &[bool]) -> bool {
    let vars = match def {
        VcDef::Expr(t) => t.vars(),
        VcDef::Join {
            cond,
            then_v,
            else_v,
        } => {
            let mut v = cond.vars();
            v.push(*then_v);
            v.push(*else_v);
            v
        }
    };
    vars.iter().all(|v| assigned[v.index()])
}

fn union_support(free_support: &[BTreeSet<VarId>], vars: Vec<VarId>) -> BTreeSet<VarId> {
    let mut out = BTreeSet::new();
    for v in vars {
        out.extend(free_support[v.index()].iter().copied());
    }
    out
}

/// Tighten the domain of a single enumerated variable from a unary atom.
fn narrow(domains: &mut [Domain], order_ids: &[VarId], atom: &Term) {
    enum Apply {
        Bool(bool),
        Int(BinOp, i64),
    }
    let (id, apply) = match atom {
        Term::Var(v) => (*v, Apply::Bool(true)),
        Term::Not(inner) => match inner.as_ref() {
            Term::Var(v) => (*v, Apply::Bool(false)),
            _ => return,
        },
        Term::Bin(op, a, b) => match (a.as_ref(), b.as_ref()) {
            (Term::Var(v), Term::Int(c)) => (*v, Apply::Int(*op, *c)),
            (Term::Int(c), Term::Var(v)) => {
                let Some(flipped) = flip(*op) else { return };
                (*v, Apply::Int(flipped, *c))
            }
            (Term::Var(v), Term::Bool(c)) => match op {
                BinOp::Eq => (*v, Apply::Bool(*c)),
                BinOp::Ne => (*v, Apply::Bool(!*c)),
                _ => return,
            },
            _ => return,
        },
        _ => return,
    };
    let Some(rank) = order_ids.iter().position(|x| *x == id) else {
        return;
    };
    match apply {
        Apply::Bool(value) => {
            if let Domain::Bool { allowed } = &mut domains[rank] {
                allowed[usize::from(!value)] = false;
            }
        }
        Apply::Int(op, c) => {
            if let Domain::Int { lo, hi } = &mut domains[rank] {
                match op {
                    BinOp::Eq => {
                        *lo = (*lo).max(c);
                        *hi = (*hi).min(c);
                    }
                    BinOp::Lt => *hi = (*hi).min(c - 1),
                    BinOp::Le => *hi = (*hi).min(c),
                    BinOp::Gt => *lo = (*lo).max(c + 1),
                    BinOp::Ge => *lo = (*lo).max(c),
                    _ => {}
                }
            }
        }
    }
}

/// `c op v` rewritten as `v op' c`.
fn flip(op: BinOp) -> Option<BinOp> {
    Some(match op {
        BinOp::Eq => BinOp::Eq,
        BinOp::Ne => BinOp::Ne,
        BinOp::Lt => BinOp::Gt,
        BinOp::Le => BinOp::Ge,
        BinOp::Gt => BinOp::Lt,
        BinOp::Ge => BinOp::Le,
        _ => return None,
    })
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}
