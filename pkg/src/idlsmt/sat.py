"""Conflict-driven clause learning SAT core.

Two-watched-literal propagation, first-UIP learning, exponential variable
activities (ties to the lowest index), Luby restarts, phase saving, and
solving under assumptions; the failed-assumption subset of an unsat answer
is what unsat cores and retraction are built from.

A theory plugs in through four seams: every literal appended to the trail
is forwarded to ``on_assert``, backjumps call ``on_backtrack``, implied
literals arrive from ``propagate`` with an opaque explanation handle that
is only cashed in (via ``explain``) if conflict analysis needs it, and
``final_check`` runs once a full assignment is reached. Literals are
signed ints, clauses are lists of them.
"""

from __future__ import annotations

from dataclasses import dataclass, field


class NullTheory:
    """No-op hooks for purely Boolean solving."""

    def on_assert(self, lit, level):
        return None

    def propagate(self):
        return ()

    def explain(self, handle):
        raise RuntimeError("no theory attached")

    def on_backtrack(self, level):
        pass

    def final_check(self):
        return None

    def on_solution(self):
        pass


@dataclass
class SolveResult:
    status: str  # "sat" | "unsat" | "unknown"
    model: dict | None = None  # var -> bool, total over registered vars
    failed: list = field(default_factory=list)  # subset of the assumptions
    reason: str = ""  # for unknown answers


ORIGIN_INPUT = "input"
ORIGIN_TSEITIN = "tseitin"
ORIGIN_LEARNED = "learned"

_RESCALE = 1e100


def _luby(base, x):
    """x-th element (0-based) of the Luby restart sequence, scaled by base."""
    size, seq = 1, 0
    while size < x + 1:
        seq += 1
        size = 2 * size + 1
    while size - 1 != x:
        size = (size - 1) >> 1
        seq -= 1
        x = x % size
    return base * (1 << seq)


class Solver:
    def __init__(self, theory=None):
        self.theory = theory if theory is not None else NullTheory()
        self.values = [0]  # var-indexed: 0 unassigned, 1 true, -1 false
        self.levels = [0]
        self.reasons = [None]  # clause index, ("th", handle), or None
        self.phase = [False]
        self.activity = [0.0]
        self.watches = [[], []]  # literal-indexed (2v / 2v+1)
        self.clauses = []
        self.origins = []
        self.learned = set()
        self.cla_activity = {}
        self.trail = []
        self.trail_lim = []
        self.qhead = 0
        self.th_head = 0
        self.ok = True
        self.var_inc = 1.0
        self.var_decay = 0.95
        self.cla_inc = 1.0
        self.learned_limit = 50000
        self.learned_log = []
        self.stats = {
            "decisions": 0, "conflicts": 0, "propagations": 0,
            "restarts": 0, "theory_conflicts": 0, "theory_propagations": 0,
        }

    # -- construction -------------------------------------------------------

    def new_var(self):
        self.values.append(0)
        self.levels.append(0)
        self.reasons.append(None)
        self.phase.append(False)
        self.activity.append(0.0)
        self.watches.append([])
        self.watches.append([])
        return len(self.values) - 1

    @property
    def n_vars(self):
        return len(self.values) - 1

    def value(self, lit):
        v = self.values[abs(lit)]
        return v if lit > 0 else -v

    def add_clause(self, lits, origin=(ORIGIN_INPUT, -1)):
        """Store and watch a clause; False signals level-0 unsatisfiability.

        Tautologies are dropped, duplicate and level-0-false literals are
        removed, units are enqueued immediately.
        """
        assert not self.trail_lim, "clauses may only be added at level 0"
        if not self.ok:
            return False
        seen = set()
        out = []
        for l in lits:
            if -l in seen:
                return True
            if l in seen:
                continue
            val = self.value(l)
            if val == 1:
                return True
            if val == -1:
                continue
            seen.add(l)
            out.append(l)
        if not out:
            self.ok = False
            return False
        if len(out) == 1:
            if not self._enqueue(out[0], None):
                self.ok = False
                return False
            if self.propagate() is not None:
                self.ok = False
                return False
            return True
        ci = len(self.clauses)
        self.clauses.append(out)
        self.origins.append(origin)
        self._watch(out[0], ci)
        self._watch(out[1], ci)
        return True

    def _watch(self, lit, ci):
        self.watches[2 * abs(lit) + (lit < 0)].append(ci)

    def _enqueue(self, lit, reason):
        v = abs(lit)
        val = self.values[v]
        if val != 0:
            return val == (1 if lit > 0 else -1)
        self.values[v] = 1 if lit > 0 else -1
        self.levels[v] = len(self.trail_lim)
        self.reasons[v] = reason
        self.trail.append(lit)
        return True

    # -- propagation ---------------------------------------------------------

    def propagate(self):
        """Boolean unit propagation to fixpoint; conflict clause index or None."""
        clauses = self.clauses
        while self.qhead < len(self.trail):
            lit = self.trail[self.qhead]
            self.qhead += 1
            fi = 2 * abs(lit) + (lit > 0)  # watchers of the falsified literal
            ws = self.watches[fi]
            i = j = 0
            nw = len(ws)
            while i < nw:
                ci = ws[i]
                i += 1
                c = clauses[ci]
                if c[0] == -lit:
                    c[0], c[1] = c[1], c[0]
                first = c[0]
                if self.value(first) == 1:
                    ws[j] = ci
                    j += 1
                    continue
                moved = False
                for k in range(2, len(c)):
                    if self.value(c[k]) != -1:
                        c[1], c[k] = c[k], c[1]
                        self._watch(c[1], ci)
                        moved = True
                        break
                if moved:
                    continue
                ws[j] = ci
                j += 1
                if self.value(first) == -1:
                    while i < nw:
                        ws[j] = ws[i]
                        j += 1
                        i += 1
                    del ws[j:]
                    self.qhead = len(self.trail)
                    return ci
                self._enqueue(first, ci)
                self.stats["propagations"] += 1
            del ws[j:]
        return None

    def _propagate_full(self):
        """Boolean + theory propagation to a joint fixpoint.

        Returns a conflict as a list of currently-false literals, or None.
        """
        theory = self.theory
        while True:
            ci = self.propagate()
            if ci is not None:
                return list(self.clauses[ci])
            while self.th_head < len(self.trail):
                lit = self.trail[self.th_head]
                self.th_head += 1
                confl = theory.on_assert(lit, self.levels[abs(lit)])
                if confl is not None:
                    self.stats["theory_conflicts"] += 1
                    return [-l for l in confl]
            progressed = False
            for lit, handle in theory.propagate():
                val = self.value(lit)
                if val == 1:
                    continue
                if val == -1:
                    ante = theory.explain(handle)
                    self.stats["theory_conflicts"] += 1
                    return [lit] + [-a for a in ante]
                self._enqueue(lit, ("th", handle))
                self.stats["theory_propagations"] += 1
                progressed = True
            if not progressed and self.qhead >= len(self.trail) \
                    and self.th_head >= len(self.trail):
                return None

    # -- backtracking ----------------------------------------------------------

    def _cancel_until(self, level):
        if len(self.trail_lim) <= level:
            return
        bound = self.trail_lim[level]
        for pos in range(len(self.trail) - 1, bound - 1, -1):
            lit = self.trail[pos]
            v = abs(lit)
            self.phase[v] = lit > 0
            self.values[v] = 0
            self.reasons[v] = None
        del self.trail[bound:]
        del self.trail_lim[level:]
        self.qhead = min(self.qhead, bound)
        self.th_head = min(self.th_head, bound)
        self.theory.on_backtrack(level)

    # -- analysis ----------------------------------------------------------------

    def _bump_var(self, v):
        self.activity[v] += self.var_inc
        if self.activity[v] > _RESCALE:
            inv = 1.0 / _RESCALE
            for k in range(1, len(self.activity)):
                self.activity[k] *= inv
            self.var_inc *= inv

    def _bump_clause(self, ci):
        if ci in self.learned:
            act = self.cla_activity.get(ci, 0.0) + self.cla_inc
            if act > _RESCALE:
                inv = 1.0 / _RESCALE
                for k in list(self.cla_activity):
                    self.cla_activity[k] *= inv
                self.cla_inc *= inv
                act = self.cla_activity.get(ci, 0.0) + self.cla_inc
            self.cla_activity[ci] = act

    def _reason_lits(self, p):
        """False literals feeding the implication of trail literal ``p``."""
        r = self.reasons[abs(p)]
        if isinstance(r, int):
            self._bump_clause(r)
            return [q for q in self.clauses[r] if q != p]
        if isinstance(r, tuple) and r[0] == "th":
            ante = self.theory.explain(r[1])
            return [-a for a in ante]
        raise RuntimeError("asked for the reason of a decision")

    def _analyze(self, confl_lits):
        """First-UIP learning; returns (learned clause, backjump level).

        The asserting literal sits at position 0; position 1 holds a literal
        of the backjump level so the watches stay sound after the jump.
        """
        cur = len(self.trail_lim)
        learned = [None]
        seen = set()
        pathc = 0
        p = None
        idx = len(self.trail) - 1
        reason_side = confl_lits
        first = True
        while True:
            for q in reason_side:
                v = abs(q)
                if v in seen or self.levels[v] == 0:
                    continue
                seen.add(v)
                self._bump_var(v)
                if self.levels[v] >= cur:
                    pathc += 1
                else:
                    learned.append(q)
            if first and pathc == 0:
                raise RuntimeError("conflict without a current-level literal")
            first = False
            while abs(self.trail[idx]) not in seen:
                idx -= 1
            p = self.trail[idx]
            idx -= 1
            seen.discard(abs(p))
            pathc -= 1
            if pathc <= 0:
                break
            reason_side = self._reason_lits(p)
        learned[0] = -p
        backjump = 0
        if len(learned) > 1:
            mi = max(range(1, len(learned)),
                     key=lambda t: self.levels[abs(learned[t])])
            learned[1], learned[mi] = learned[mi], learned[1]
            backjump = self.levels[abs(learned[1])]
        return learned, backjump

    def _analyze_final(self, p):
        """Assumptions responsible for assumption literal ``p`` being false."""
        failed = {p}
        if not self.trail_lim:
            return failed
        seen = {abs(p)}
        for pos in range(len(self.trail) - 1, self.trail_lim[0] - 1, -1):
            lit = self.trail[pos]
            v = abs(lit)
            if v not in seen:
                continue
            if self.reasons[v] is None:
                failed.add(lit)
            else:
                for q in self._reason_lits(lit):
                    if self.levels[abs(q)] > 0:
                        seen.add(abs(q))
            seen.discard(v)
        return failed

    # -- clause database -----------------------------------------------------------

    def _store_learned(self, lits):
        ci = len(self.clauses)
        self.clauses.append(lits)
        self.origins.append((ORIGIN_LEARNED,))
        self.learned.add(ci)
        self.cla_activity[ci] = self.cla_inc
        self._watch(lits[0], ci)
        self._watch(lits[1], ci)
        return ci

    def _reduce_learned(self):
        """Activity-based halving of the learned clause store."""
        locked = set()
        for v in range(1, len(self.values)):
            r = self.reasons[v]
            if isinstance(r, int) and r in self.learned:
                locked.add(r)
        victims = sorted(
            (ci for ci in self.learned if ci not in locked and
             len(self.clauses[ci]) > 2),
            key=lambda ci: (self.cla_activity.get(ci, 0.0), -ci))
        drop = set(victims[: len(victims) // 2])
        if not drop:
            return
        for ci in drop:
            self.clauses[ci] = None
            self.learned.discard(ci)
            self.cla_activity.pop(ci, None)
        for enc in range(2, len(self.watches)):
            self.watches[enc] = []
        for ci, c in enumerate(self.clauses):
            if c is not None:
                self._watch(c[0], ci)
                self._watch(c[1], ci)

    # -- search -----------------------------------------------------------------

    def _pick_branch(self):
        best = None
        besta = -1.0
        activity = self.activity
        values = self.values
        for v in range(1, len(values)):
            if values[v] == 0 and activity[v] > besta:
                best = v
                besta = activity[v]
        return best

    def solve(self, assumptions=(), conflict_budget=None, cancel=None):
        """Search under assumptions.

        Returns sat with a total model, unsat with a failed-assumption
        subset, or unknown when the conflict budget runs out or the cancel
        callback trips (both polled at conflict boundaries).
        """
        if not self.ok:
            return SolveResult("unsat")
        assumptions = list(assumptions)
        self._cancel_until(0)
        conflicts_here = 0
        since_restart = 0
        restarts = 0
        pending = None
        while True:
            confl = pending if pending is not None else self._propagate_full()
            pending = None
            if confl is not None:
                if not self.trail_lim:
                    self.ok = False
                    return SolveResult("unsat")
                if conflict_budget is not None and conflicts_here >= conflict_budget:
                    self._cancel_until(0)
                    return SolveResult("unknown", reason="conflict budget")
                if cancel is not None and cancel():
                    self._cancel_until(0)
                    return SolveResult("unknown", reason="cancelled")
                self.stats["conflicts"] += 1
                conflicts_here += 1
                since_restart += 1
                learned, bj = self._analyze(confl)
                self.learned_log.append(tuple(learned))
                self.var_inc /= self.var_decay
                self.cla_inc /= 0.999
                self._cancel_until(bj)
                if len(learned) == 1:
                    self._enqueue(learned[0], None)
                else:
                    ci = self._store_learned(learned)
                    self._enqueue(learned[0], ci)
                continue
            if since_restart >= _luby(64, restarts):
                restarts += 1
                self.stats["restarts"] += 1
                since_restart = 0
                self._cancel_until(0)
                continue
            if len(self.learned) > self.learned_limit:
                self._reduce_learned()
            level = len(self.trail_lim)
            if level < len(assumptions):
                p = assumptions[level]
                val = self.value(p)
                if val == 1:
                    self.trail_lim.append(len(self.trail))
                elif val == -1:
                    failed = self._analyze_final(p)
                    self._cancel_until(0)
                    return SolveResult(
                        "unsat", failed=[a for a in assumptions if a in failed])
                else:
                    self.trail_lim.append(len(self.trail))
                    self._enqueue(p, None)
                continue
            v = self._pick_branch()
            if v is None:
                tc = self.theory.final_check()
                if tc is not None:
                    self.stats["theory_conflicts"] += 1
                    pending = [-l for l in tc]
                    continue
                model = {u: self.values[u] == 1
                         for u in range(1, len(self.values))}
                self.theory.on_solution()
                self._cancel_until(0)
                return SolveResult("sat", model=model)
            self.stats["decisions"] += 1
            self.trail_lim.append(len(self.trail))
            self._enqueue(v if self.phase[v] else -v, None)
