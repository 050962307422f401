//! Round-robin client dynamics on the grid.
//!
//! Costs are kept in units of `1/P`: a client in slot `c` pays
//! `(1 - a)|c - s_j| + a * L` at facility `j` with `L` clients (counting
//! itself after the move). A switch changes the discrete potential by exactly
//! the switching client's cost difference, so every improving switch lowers it.
//!
//! Visiting a client that does not switch has no effect, so a round only needs
//! the clients that would switch, in activation order. For a client of
//! facility `a` the gain from moving to `j` depends on its slot only through
//! `|c - s_j| - |c - s_a|`, which is monotone in `c`. The clients of `a` that
//! would move to `j` therefore form a prefix (`j` to the left) or a suffix
//! (`j` to the right) of the market, and the next switcher is found with a
//! couple of ordered-set queries per facility.

use std::collections::BTreeSet;

use crate::error::{Error, Result};

/// Cost comparisons within this many scaled units count as ties.
pub(crate) const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ActivationOrder {
    #[default]
    Ascending,
    Descending,
}

/// Clients of one facility that would switch somewhere: slots `<= prefix_end`
/// or `>= suffix_start`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Eager {
    prefix_end: Option<usize>,
    suffix_start: Option<usize>,
}

impl Eager {
    const NONE: Eager = Eager {
        prefix_end: None,
        suffix_start: None,
    };

    fn merge(self, other: Eager) -> Eager {
        Eager {
            prefix_end: self.prefix_end.max(other.prefix_end),
            suffix_start: match (self.suffix_start, other.suffix_start) {
                (Some(x), Some(y)) => Some(x.min(y)),
                (x, y) => x.or(y),
            },
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Engine {
    weight: f64,
    alpha: f64,
    precision: usize,
    order: ActivationOrder,
    exhaustive: bool,
    pub(crate) slots: Vec<usize>,
    pub(crate) choice: Vec<usize>,
    pub(crate) counts: Vec<usize>,
    members: Vec<BTreeSet<usize>>,
    /// Per ordered pair `(a, j)`, row-major: which clients of `a` would move to `j`.
    reach: Vec<Eager>,
    eager: Vec<Eager>,
    /// Facilities whose pairs need recomputing; `None` means all of them.
    dirty: Option<Vec<usize>>,
    pub(crate) rounds: usize,
    pub(crate) switches: usize,
}

impl Engine {
    /// Nearest-facility start; ties go to the lowest facility index.
    ///
    /// With `exhaustive` set every client is visited in every round, which is
    /// the literal dynamics and serves as a reference.
    pub(crate) fn new(
        slots: Vec<usize>,
        precision: usize,
        alpha: f64,
        order: ActivationOrder,
        exhaustive: bool,
    ) -> Self {
        let n = slots.len();
        let mut choice = Vec::with_capacity(precision);
        let mut counts = vec![0; n];
        let mut members = vec![BTreeSet::new(); n];
        for c in 0..precision {
            let mut best = 0;
            for (j, &s) in slots.iter().enumerate().skip(1) {
                if s.abs_diff(c) < slots[best].abs_diff(c) {
                    best = j;
                }
            }
            choice.push(best);
            counts[best] += 1;
            members[best].insert(c);
        }
        Self {
            weight: 1.0 - alpha,
            alpha,
            precision,
            order,
            exhaustive,
            slots,
            choice,
            counts,
            members,
            reach: vec![Eager::NONE; n * n],
            eager: vec![Eager::NONE; n],
            dirty: None,
            rounds: 0,
            switches: 0,
        }
    }

    /// Relocates facility `j`, keeping the current assignment as a warm start.
    pub(crate) fn move_facility(&mut self, j: usize, slot: usize) {
        if self.slots[j] != slot {
            self.slots[j] = slot;
            self.mark(j);
        }
    }

    /// Whether moving from `a` to `j` pays for a client with distance
    /// difference `dd = |c - s_j| - |c - s_a|`.
    #[inline]
    fn improving(&self, dd: i64, a: usize, j: usize) -> bool {
        let post = self.counts[j] as i64 + 1;
        let la = self.counts[a] as i64;
        let diff = self.weight * dd as f64 + self.alpha * (post - la) as f64;
        diff < -EPS || (diff.abs() <= EPS && dd == 0 && post < la)
    }

    /// Largest `dd` in `[-span, span]` for which the move pays, if any.
    /// The predicate is monotone: smaller `dd` only helps.
    fn max_improving_dd(&self, span: i64, a: usize, j: usize) -> Option<i64> {
        if !self.improving(-span, a, j) {
            return None;
        }
        if self.improving(span, a, j) {
            return Some(span);
        }
        // Here the weight is positive; start from the real root and correct
        // against the exact predicate.
        let delta = (self.counts[j] as i64 + 1 - self.counts[a] as i64) as f64;
        let root = (-EPS - self.alpha * delta) / self.weight;
        let mut k = (root.ceil() as i64 - 1).clamp(-span, span - 1);
        while k + 1 < span && self.improving(k + 1, a, j) {
            k += 1;
        }
        while !self.improving(k, a, j) {
            k -= 1;
        }
        Some(k)
    }

    fn mark(&mut self, f: usize) {
        if let Some(d) = &mut self.dirty {
            if !d.contains(&f) {
                d.push(f);
            }
        }
    }

    fn pair_reach(&self, a: usize, j: usize) -> Eager {
        let sa = self.slots[a] as i64;
        let sj = self.slots[j] as i64;
        let span = (sa - sj).abs();
        let Some(k) = self.max_improving_dd(span, a, j) else {
            return Eager::NONE;
        };
        if k >= span {
            Eager {
                prefix_end: Some(self.precision - 1),
                suffix_start: Some(0),
            }
        } else if sj < sa {
            // dd = -span + 2(c - s_j) on [s_j, s_a]
            Eager {
                prefix_end: Some((sj + (k + span).div_euclid(2)) as usize),
                suffix_start: None,
            }
        } else {
            // dd = span - 2(c - s_a) on [s_a, s_j]
            Eager {
                prefix_end: None,
                suffix_start: Some((sa + (span - k + 1).div_euclid(2)) as usize),
            }
        }
    }

    fn refresh(&mut self) {
        let n = self.slots.len();
        match self.dirty.take() {
            None => {
                for a in 0..n {
                    for j in 0..n {
                        if j != a {
                            self.reach[a * n + j] = self.pair_reach(a, j);
                        }
                    }
                }
                for a in 0..n {
                    self.aggregate(a);
                }
            }
            Some(d) if d.is_empty() => {
                self.dirty = Some(d);
                return;
            }
            Some(d) => {
                let mut stale = vec![false; n];
                for &f in &d {
                    stale[f] = true;
                    for g in (0..n).filter(|&g| g != f) {
                        self.reach[f * n + g] = self.pair_reach(f, g);
                        let r = self.pair_reach(g, f);
                        if self.reach[g * n + f] != r {
                            self.reach[g * n + f] = r;
                            stale[g] = true;
                        }
                    }
                }
                for a in (0..n).filter(|&a| stale[a]) {
                    self.aggregate(a);
                }
            }
        }
        self.dirty = Some(Vec::new());
    }

    fn aggregate(&mut self, a: usize) {
        let n = self.slots.len();
        self.eager[a] = self.reach[a * n..(a + 1) * n]
            .iter()
            .fold(Eager::NONE, |acc, &r| acc.merge(r));
    }

    /// Next client at or after `from` in activation order that would switch.
    fn next_switcher(&mut self, from: usize) -> Option<usize> {
        self.refresh();
        let mut best: Option<usize> = None;
        for (a, e) in self.eager.iter().enumerate() {
            let set = &self.members[a];
            let hit = match self.order {
                ActivationOrder::Ascending => {
                    let p = e
                        .prefix_end
                        .filter(|&p| p >= from)
                        .and_then(|p| set.range(from..=p).next().copied());
                    let s = e
                        .suffix_start
                        .and_then(|s| set.range(s.max(from)..).next().copied());
                    match (p, s) {
                        (Some(x), Some(y)) => Some(x.min(y)),
                        (x, y) => x.or(y),
                    }
                }
                ActivationOrder::Descending => {
                    let p = e
                        .prefix_end
                        .and_then(|p| set.range(..=p.min(from)).next_back().copied());
                    let s = e
                        .suffix_start
                        .filter(|&s| s <= from)
                        .and_then(|s| set.range(s..=from).next_back().copied());
                    match (p, s) {
                        (Some(x), Some(y)) => Some(x.max(y)),
                        (x, y) => x.or(y),
                    }
                }
            };
            best = match (best, hit) {
                (Some(b), Some(h)) => Some(match self.order {
                    ActivationOrder::Ascending => b.min(h),
                    ActivationOrder::Descending => b.max(h),
                }),
                (b, h) => b.or(h),
            };
        }
        best
    }

    /// Best improving facility for client `c`: largest gain, then smaller
    /// post-move load, then lowest index.
    fn best_move(&self, c: usize) -> Option<usize> {
        let a = self.choice[c];
        let da = self.slots[a].abs_diff(c) as i64;
        let la = self.counts[a] as i64;
        let mut pick: Option<(usize, f64, i64)> = None;
        for (j, &s) in self.slots.iter().enumerate() {
            if j == a {
                continue;
            }
            let dd = s.abs_diff(c) as i64 - da;
            if !self.improving(dd, a, j) {
                continue;
            }
            let post = self.counts[j] as i64 + 1;
            let diff = self.weight * dd as f64 + self.alpha * (post - la) as f64;
            let better = match pick {
                None => true,
                Some((_, bd, bl)) => diff < bd - EPS || (diff <= bd + EPS && post < bl),
            };
            if better {
                pick = Some((j, diff, post));
            }
        }
        pick.map(|(j, _, _)| j)
    }

    fn apply(&mut self, c: usize, to: usize) -> usize {
        let from = self.choice[c];
        self.counts[from] -= 1;
        self.counts[to] += 1;
        self.members[from].remove(&c);
        self.members[to].insert(c);
        self.choice[c] = to;
        self.switches += 1;
        self.mark(from);
        self.mark(to);
        from
    }

    /// Runs rounds until one passes without a switch.
    pub(crate) fn settle(&mut self, max_rounds: usize) -> Result<()> {
        self.settle_observed(max_rounds, |_, _, _| {})
    }

    /// As [`Engine::settle`], reporting every switch as `(client, from, to)`.
    pub(crate) fn settle_observed(
        &mut self,
        max_rounds: usize,
        mut observe: impl FnMut(usize, usize, usize),
    ) -> Result<()> {
        let mut used = 0;
        loop {
            if used == max_rounds {
                return Err(Error::RoundLimit { rounds: max_rounds });
            }
            used += 1;
            self.rounds += 1;
            let switched = if self.exhaustive {
                self.exhaustive_round(&mut observe)
            } else {
                self.targeted_round(&mut observe)
            };
            if switched == 0 {
                return Ok(());
            }
        }
    }

    fn targeted_round(&mut self, observe: &mut impl FnMut(usize, usize, usize)) -> usize {
        let mut switched = 0;
        let mut from = match self.order {
            ActivationOrder::Ascending => 0,
            ActivationOrder::Descending => self.precision - 1,
        };
        while let Some(c) = self.next_switcher(from) {
            let to = self
                .best_move(c)
                .expect("eager client has an improving move");
            let prev = self.apply(c, to);
            observe(c, prev, to);
            switched += 1;
            match self.order {
                ActivationOrder::Ascending if c + 1 < self.precision => from = c + 1,
                ActivationOrder::Descending if c > 0 => from = c - 1,
                _ => break,
            }
        }
        switched
    }

    fn exhaustive_round(&mut self, observe: &mut impl FnMut(usize, usize, usize)) -> usize {
        let mut switched = 0;
        for k in 0..self.precision {
            let c = match self.order {
                ActivationOrder::Ascending => k,
                ActivationOrder::Descending => self.precision - 1 - k,
            };
            if let Some(to) = self.best_move(c) {
                let prev = self.apply(c, to);
                observe(c, prev, to);
                switched += 1;
            }
        }
        switched
    }
}
