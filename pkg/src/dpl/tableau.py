"""Labeled tableau calculus over the action-term algebra.

Labels are sequences of atoms naming tentative worlds (the empty sequence is
the root); the algebra module decides which atoms are live modulo the
equations collected on a branch.  Rule classes:

    A    conjunctive: one branch, both components          (&&, ~||, ~->, ~~)
    B    disjunctive: one branch per component             (||, ->, ~&&, <->)
    P    modal possibility:  <α>φ, ~[α]φ — one branch and one fresh child
         label per live atom below α, plus the atom's non-emptiness
    N    modal necessity:    [α]φ, ~<α>φ — adds φ to every existing child
         label whose atom lies below α; creates no labels
    PD   deontic possibility: Pw(α), ~P(α) — one branch per live atom, the
         fact is re-stated at atom granularity, no labels created
    ND   deontic necessity:   P(α), ~Pw(α) — states the fact at every atom
         below α that already carries a deontic-possibility fact
    Per  an atom that is weakly permitted is strongly permitted
    LIT  propositional literals (inert)
    EQL  equations / inequations, recorded on the branch

A branch closes on a propositional clash, a deontic clash (same permission
asserted and denied, or a weak permission against a denied strong permission
on the same single-atom action), or boolean inconsistency of the collected
equations extended with "α & β = 0" for every strong-permission /
denied-weak-permission pair sharing a label.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

from .algebra import (
    BooleanTheory,
    atom_label,
    atom_of_canonical_term,
    atom_term,
    term_truth,
)
from .syntax import (
    EMPTY,
    ActionTerm,
    And,
    Box,
    Diamond,
    Eq,
    Falsity,
    Formula,
    Iff,
    Implies,
    Meet,
    Neq,
    Not,
    Or,
    PermS,
    PermW,
    Prop,
    Truth,
    Vocabulary,
    has_modal_equation,
    pretty_print,
    primitive_actions,
    term_str,
)

Label = tuple[int, ...]


@dataclass(frozen=True)
class LabeledFormula:
    label: Label
    formula: Formula


class RuleClass(Enum):
    A = "A"
    B = "B"
    P = "P"
    N = "N"
    PD = "PD"
    ND = "ND"
    LIT = "LIT"
    EQL = "EQL"


class ClosureStatus(Enum):
    OPEN_SO_FAR = "open"
    CLOSED_PROP = "prop"
    CLOSED_DEONTIC = "deontic"
    CLOSED_BOOLEAN = "boolean"


def classify(f: Formula) -> RuleClass:
    """Map every formula to exactly one rule class."""
    match f:
        case And():
            return RuleClass.A
        case Or() | Implies() | Iff():
            return RuleClass.B
        case Diamond():
            return RuleClass.P
        case Box():
            return RuleClass.N
        case PermW():
            return RuleClass.PD
        case PermS():
            return RuleClass.ND
        case Prop() | Truth() | Falsity():
            return RuleClass.LIT
        case Eq() | Neq():
            return RuleClass.EQL
        case Not(sub):
            match sub:
                case Or() | Implies() | Not():
                    return RuleClass.A
                case And() | Iff():
                    return RuleClass.B
                case Box():
                    return RuleClass.P
                case Diamond():
                    return RuleClass.N
                case PermS():
                    return RuleClass.PD
                case PermW():
                    return RuleClass.ND
                case Prop() | Truth() | Falsity():
                    return RuleClass.LIT
                case Eq() | Neq():
                    return RuleClass.EQL
    raise TypeError(f"not a formula: {f!r}")


def front_action(f: Formula) -> ActionTerm:
    """The action at the outermost modal or deontic node."""
    match f:
        case Box(action, _) | Diamond(action, _) | PermS(action) | PermW(action):
            return action
        case Not(Box(action, _)) | Not(Diamond(action, _)):
            return action
        case Not(PermS(action)) | Not(PermW(action)):
            return action
    raise ValueError(f"formula has no front action: {pretty_print(f)}")


def alpha_components(f: Formula) -> list[Formula]:
    match f:
        case And(left, right):
            return [left, right]
        case Not(Or(left, right)):
            return [Not(left), Not(right)]
        case Not(Implies(left, right)):
            return [left, Not(right)]
        case Not(Not(sub)):
            return [sub]
    raise ValueError(f"not a conjunctive formula: {pretty_print(f)}")


def beta_components(f: Formula) -> list[list[Formula]]:
    match f:
        case Or(left, right):
            return [[left], [right]]
        case Implies(left, right):
            return [[Not(left)], [right]]
        case Not(And(left, right)):
            return [[Not(left)], [Not(right)]]
        case Iff(left, right):
            return [[left, right], [Not(left), Not(right)]]
        case Not(Iff(left, right)):
            return [[left, Not(right)], [Not(left), right]]
    raise ValueError(f"not a disjunctive formula: {pretty_print(f)}")


def label_str(label: Label, vocab: Vocabulary) -> str:
    if not label:
        return "<>"
    return "<" + ", ".join(atom_label(g, vocab) for g in label) + ">"


class Branch:
    """Mutable branch state with snapshot support for backtracking.

    Equations and inequations are collected globally (the algebra is rigid:
    one interpretation per structure, whatever the label).  Rule bookkeeping
    guarantees each (rule, premise, target) fires at most once.
    """

    def __init__(self, vocab: Vocabulary, branch_id: int = 0):
        self.vocab = vocab
        self.id = branch_id
        self.facts: list[LabeledFormula] = []
        self._fact_set: set[LabeledFormula] = set()
        self.labels: list[Label] = [()]
        self._label_set: set[Label] = {()}
        self.equations: list[tuple[ActionTerm, ActionTerm]] = []
        self._equation_set: set = set()
        self.inequations: list[tuple[ActionTerm, ActionTerm]] = []
        self._inequation_set: set = set()
        self.pending: dict[RuleClass, list[LabeledFormula]] = {c: [] for c in RuleClass}
        self.fired: set = set()
        # per-label deontic indexes (terms in insertion order)
        self.strong_pos: dict[Label, list[ActionTerm]] = {}
        self.strong_neg: dict[Label, list[ActionTerm]] = {}
        self.weak_pos: dict[Label, list[ActionTerm]] = {}
        self.weak_neg: dict[Label, list[ActionTerm]] = {}
        self.pd_atoms: dict[Label, set[int]] = {}
        self.n_facts: list[LabeledFormula] = []
        self.nd_facts: list[LabeledFormula] = []
        self.pw_facts: list[LabeledFormula] = []
        self._clash: tuple[ClosureStatus, str] | None = None
        self._polarity: dict[tuple, set[bool]] = {}
        self._theory: BooleanTheory | None = None
        self._theory_key = None
        self.saturated = False

    # -- state growth -------------------------------------------------

    def add(self, label: Label, formula: Formula) -> bool:
        lf = LabeledFormula(label, formula)
        if lf in self._fact_set:
            return False
        self.facts.append(lf)
        self._fact_set.add(lf)
        cls = classify(formula)
        self.pending[cls].append(lf)
        if cls is RuleClass.N:
            self.n_facts.append(lf)
            self.pending[cls].pop()  # generative rules are driven by scans
        elif cls is RuleClass.ND:
            self.nd_facts.append(lf)
            self.pending[cls].pop()
        if isinstance(formula, PermW):
            self.pw_facts.append(lf)
        self._index(label, formula)
        return True

    def _index(self, label: Label, formula: Formula) -> None:
        match formula:
            case Prop(name):
                self._note_polarity((label, "prop", name), True, f"{name} at {self._ls(label)}")
            case Not(Prop(name)):
                self._note_polarity((label, "prop", name), False, f"{name} at {self._ls(label)}")
            case Falsity() | Not(Truth()):
                if self._clash is None:
                    self._clash = (
                        ClosureStatus.CLOSED_PROP,
                        f"falsum at {self._ls(label)}",
                    )
            case PermS(action):
                self.strong_pos.setdefault(label, []).append(action)
                self._note_polarity(
                    (label, "P", action), True, f"P({term_str(action)}) at {self._ls(label)}"
                )
            case Not(PermS(action)):
                self.strong_neg.setdefault(label, []).append(action)
                self._note_polarity(
                    (label, "P", action), False, f"P({term_str(action)}) at {self._ls(label)}"
                )
                self._note_pd_atom(label, action)
            case PermW(action):
                self.weak_pos.setdefault(label, []).append(action)
                self._note_polarity(
                    (label, "Pw", action), True, f"Pw({term_str(action)}) at {self._ls(label)}"
                )
                self._note_pd_atom(label, action)
            case Not(PermW(action)):
                self.weak_neg.setdefault(label, []).append(action)
                self._note_polarity(
                    (label, "Pw", action), False, f"Pw({term_str(action)}) at {self._ls(label)}"
                )

    def _note_polarity(self, key, polarity: bool, what: str) -> None:
        seen = self._polarity.setdefault(key, set())
        seen.add(polarity)
        if len(seen) == 2 and self._clash is None:
            kind = ClosureStatus.CLOSED_PROP if key[1] == "prop" else ClosureStatus.CLOSED_DEONTIC
            self._clash = (kind, f"contradictory {what}")

    def _note_pd_atom(self, label: Label, action: ActionTerm) -> None:
        atom = atom_of_canonical_term(action, self.vocab)
        if atom is not None:
            self.pd_atoms.setdefault(label, set()).add(atom)

    def add_label(self, label: Label) -> bool:
        if label in self._label_set:
            return False
        self.labels.append(label)
        self._label_set.add(label)
        return True

    def add_equation(self, t1: ActionTerm, t2: ActionTerm) -> bool:
        if (t1, t2) in self._equation_set:
            return False
        self.equations.append((t1, t2))
        self._equation_set.add((t1, t2))
        return True

    def add_inequation(self, t1: ActionTerm, t2: ActionTerm) -> bool:
        if (t1, t2) in self._inequation_set:
            return False
        self.inequations.append((t1, t2))
        self._inequation_set.add((t1, t2))
        return True

    # -- derived state ------------------------------------------------

    def theory(self) -> BooleanTheory:
        return eq_star(self)

    def has_pending(self, cls: RuleClass) -> bool:
        return bool(self.pending[cls])

    def is_saturated(self) -> bool:
        return self.saturated

    def _ls(self, label: Label) -> str:
        return label_str(label, self.vocab)

    # -- snapshots ----------------------------------------------------

    def copy(self, branch_id: int) -> "Branch":
        c = Branch.__new__(Branch)
        c.vocab = self.vocab
        c.id = branch_id
        c.facts = list(self.facts)
        c._fact_set = set(self._fact_set)
        c.labels = list(self.labels)
        c._label_set = set(self._label_set)
        c.equations = list(self.equations)
        c._equation_set = set(self._equation_set)
        c.inequations = list(self.inequations)
        c._inequation_set = set(self._inequation_set)
        c.pending = {cls: list(items) for cls, items in self.pending.items()}
        c.fired = set(self.fired)
        c.strong_pos = {k: list(v) for k, v in self.strong_pos.items()}
        c.strong_neg = {k: list(v) for k, v in self.strong_neg.items()}
        c.weak_pos = {k: list(v) for k, v in self.weak_pos.items()}
        c.weak_neg = {k: list(v) for k, v in self.weak_neg.items()}
        c.pd_atoms = {k: set(v) for k, v in self.pd_atoms.items()}
        c.n_facts = list(self.n_facts)
        c.nd_facts = list(self.nd_facts)
        c.pw_facts = list(self.pw_facts)
        c._clash = self._clash
        c._polarity = {k: set(v) for k, v in self._polarity.items()}
        c._theory = self._theory
        c._theory_key = self._theory_key
        c.saturated = False
        return c


def eq_star(branch: Branch) -> BooleanTheory:
    """The branch's equations, extended with "α & β = 0" for every strong
    permission / denied weak permission pair sharing a label."""
    key = (
        len(branch.equations),
        sum(len(v) for v in branch.strong_pos.values()),
        sum(len(v) for v in branch.weak_neg.values()),
    )
    if branch._theory is not None and branch._theory_key == key:
        return branch._theory
    equations = list(branch.equations)
    for label in branch.labels:
        for alpha in branch.strong_pos.get(label, []):
            for beta in branch.weak_neg.get(label, []):
                equations.append((Meet(alpha, beta), EMPTY))
    theory = BooleanTheory(branch.vocab, tuple(equations))
    branch._theory = theory
    branch._theory_key = key
    return theory


def closure_verdict(branch: Branch) -> tuple[ClosureStatus, str]:
    """Closure status of the branch as it stands; monotone under growth."""
    if branch._clash is not None:
        return branch._clash
    theory = eq_star(branch)
    for label in branch.labels:
        weak = branch.weak_pos.get(label, [])
        denied = branch.strong_neg.get(label, [])
        if weak and denied:
            for t1 in weak:
                live1 = theory.live_atoms_below(t1, limit=2)
                if len(live1) != 1:
                    continue
                for t2 in denied:
                    live2 = theory.live_atoms_below(t2, limit=2)
                    if live1 == live2:
                        return (
                            ClosureStatus.CLOSED_DEONTIC,
                            f"Pw({term_str(t1)}) against ~P({term_str(t2)}) on atom "
                            f"{atom_label(live1[0], branch.vocab)} at {branch._ls(label)}",
                        )
    if theory.is_inconsistent():
        return ClosureStatus.CLOSED_BOOLEAN, "equations force 0 = U"
    for t1, t2 in branch.inequations:
        if theory.proves_equal(t1, t2):
            return (
                ClosureStatus.CLOSED_BOOLEAN,
                f"recorded {term_str(t1)} != {term_str(t2)} is refuted",
            )
    return ClosureStatus.OPEN_SO_FAR, ""


def _fmt(branch: Branch, lf: LabeledFormula) -> str:
    return f"{branch._ls(lf.label)} : {pretty_print(lf.formula)}"


def _body(f: Formula) -> Formula:
    """The formula carried through a modal rule (negated for a negated modality)."""
    match f:
        case Box(_, sub) | Diamond(_, sub):
            return sub
        case Not(Box(_, sub)) | Not(Diamond(_, sub)):
            return Not(sub)
    raise ValueError(f"no modal body: {pretty_print(f)}")


def apply_rule(branch, lf, recorder=None, id_alloc=None):
    """Apply the rule for lf's class; returns the resulting branches.

    Non-branching rules mutate and return [branch]; branching rules return
    fresh snapshots, first alternative first.  One-shot rules raise if lf was
    already expanded on this branch.
    """
    cls = classify(lf.formula)
    one_shot_key = (cls.name, lf)
    if cls in (RuleClass.A, RuleClass.B, RuleClass.P, RuleClass.PD, RuleClass.EQL):
        if one_shot_key in branch.fired:
            raise ValueError(f"rule {cls.name} already applied to {_fmt(branch, lf)}")
        branch.fired.add(one_shot_key)
    if id_alloc is None:
        counter = iter(range(branch.id + 1, branch.id + 1_000_000))
        id_alloc = lambda: next(counter)

    if cls is RuleClass.LIT:
        return [branch]

    if cls is RuleClass.EQL:
        facts = []
        match lf.formula:
            case Eq(t1, t2) | Not(Neq(t1, t2)):
                if branch.add_equation(t1, t2):
                    facts.append(f"eq: {term_str(t1)} = {term_str(t2)}")
            case Neq(t1, t2) | Not(Eq(t1, t2)):
                if branch.add_inequation(t1, t2):
                    facts.append(f"ineq: {term_str(t1)} != {term_str(t2)}")
        if recorder and facts:
            recorder({"rule": "EQ", "branch": branch.id, "premise": _fmt(branch, lf), "facts": facts})
        return [branch]

    if cls is RuleClass.A:
        facts = []
        for component in alpha_components(lf.formula):
            if branch.add(lf.label, component):
                facts.append(_fmt(branch, LabeledFormula(lf.label, component)))
        if recorder:
            recorder({"rule": "A", "branch": branch.id, "premise": _fmt(branch, lf), "facts": facts})
        return [branch]

    if cls is RuleClass.B:
        children = []
        child_records = []
        for component_list in beta_components(lf.formula):
            child = branch.copy(id_alloc())
            facts = []
            for component in component_list:
                if child.add(lf.label, component):
                    facts.append(_fmt(child, LabeledFormula(lf.label, component)))
            children.append(child)
            child_records.append({"branch": child.id, "facts": facts})
        if recorder:
            recorder(
                {"rule": "B", "branch": branch.id, "premise": _fmt(branch, lf), "children": child_records}
            )
        return children

    if cls is RuleClass.P:
        theory = eq_star(branch)
        action = front_action(lf.formula)
        body = _body(lf.formula)
        atoms = list(theory.atoms_below(action))
        if not atoms:
            # the front action is provably impossible; the recorded
            # non-emptiness closes the branch at the next closure check
            branch.add_inequation(action, EMPTY)
            if recorder:
                recorder(
                    {
                        "rule": "P",
                        "branch": branch.id,
                        "premise": _fmt(branch, lf),
                        "facts": [f"ineq: {term_str(action)} != 0 (no possible execution)"],
                    }
                )
            return [branch]
        children = []
        child_records = []
        for gamma in atoms:
            child = branch.copy(id_alloc())
            new_label = lf.label + (gamma,)
            child.add_label(new_label)
            child.add(new_label, body)
            gamma_term = atom_term(gamma, branch.vocab)
            child.add_inequation(gamma_term, EMPTY)
            children.append(child)
            child_records.append(
                {
                    "branch": child.id,
                    "facts": [
                        _fmt(child, LabeledFormula(new_label, body)),
                        f"ineq: {term_str(gamma_term)} != 0",
                    ],
                }
            )
        if recorder:
            recorder(
                {"rule": "P", "branch": branch.id, "premise": _fmt(branch, lf), "children": child_records}
            )
        return children

    if cls is RuleClass.PD:
        theory = eq_star(branch)
        action = front_action(lf.formula)
        positive = isinstance(lf.formula, PermW)
        atoms = list(theory.atoms_below(action))
        if not atoms:
            # Pw(0) and ~P(0) are both unsatisfiable
            branch.add_inequation(action, EMPTY)
            if recorder:
                recorder(
                    {
                        "rule": "PD",
                        "branch": branch.id,
                        "premise": _fmt(branch, lf),
                        "facts": [f"ineq: {term_str(action)} != 0 (no possible execution)"],
                    }
                )
            return [branch]
        children = []
        child_records = []
        for gamma in atoms:
            child = branch.copy(id_alloc())
            gamma_term = atom_term(gamma, branch.vocab)
            fact = PermW(gamma_term) if positive else Not(PermS(gamma_term))
            child.add(lf.label, fact)
            child.add_inequation(gamma_term, EMPTY)
            children.append(child)
            child_records.append(
                {
                    "branch": child.id,
                    "facts": [
                        _fmt(child, LabeledFormula(lf.label, fact)),
                        f"ineq: {term_str(gamma_term)} != 0",
                    ],
                }
            )
        if recorder:
            recorder(
                {"rule": "PD", "branch": branch.id, "premise": _fmt(branch, lf), "children": child_records}
            )
        return children

    if cls is RuleClass.N:
        theory = eq_star(branch)
        action = front_action(lf.formula)
        body = _body(lf.formula)
        facts = []
        depth = len(lf.label)
        for label in branch.labels:
            if len(label) != depth + 1 or label[:depth] != lf.label:
                continue
            gamma = label[-1]
            target_key = ("N", lf, label)
            if target_key in branch.fired:
                continue
            if not term_truth(action, gamma, branch.vocab):
                branch.fired.add(target_key)
                continue
            if theory.is_forced_empty(gamma):
                # a dead label atom contradicts its recorded non-emptiness;
                # the closure check settles this branch
                continue
            branch.fired.add(target_key)
            if branch.add(label, body):
                facts.append(_fmt(branch, LabeledFormula(label, body)))
        if recorder and facts:
            recorder({"rule": "N", "branch": branch.id, "premise": _fmt(branch, lf), "facts": facts})
        return [branch]

    if cls is RuleClass.ND:
        theory = eq_star(branch)
        action = front_action(lf.formula)
        positive = isinstance(lf.formula, PermS)
        facts = []
        carried = branch.pd_atoms.get(lf.label, set())
        if carried:
            for gamma in theory.atoms_below(action):
                if gamma not in carried:
                    continue
                target_key = ("ND", lf, gamma)
                if target_key in branch.fired:
                    continue
                branch.fired.add(target_key)
                gamma_term = atom_term(gamma, branch.vocab)
                fact = PermS(gamma_term) if positive else Not(PermW(gamma_term))
                if branch.add(lf.label, fact):
                    facts.append(_fmt(branch, LabeledFormula(lf.label, fact)))
        if recorder and facts:
            recorder({"rule": "ND", "branch": branch.id, "premise": _fmt(branch, lf), "facts": facts})
        return [branch]

    raise AssertionError(f"unhandled rule class {cls}")


def apply_per(branch: Branch, lf: LabeledFormula, recorder=None) -> bool:
    """Weakly-permitted single-atom actions become strongly permitted."""
    key = ("PER", lf)
    if key in branch.fired:
        return False
    theory = eq_star(branch)
    live = theory.live_atoms_below(lf.formula.action, limit=2)
    if len(live) != 1:
        return False
    branch.fired.add(key)
    fact = PermS(lf.formula.action)
    if branch.add(lf.label, fact):
        if recorder:
            recorder(
                {
                    "rule": "Per",
                    "branch": branch.id,
                    "premise": _fmt(branch, lf),
                    "facts": [_fmt(branch, LabeledFormula(lf.label, fact))],
                }
            )
        return True
    return False


@dataclass
class TableauResult:
    """Outcome of a proof search: a closed tree or a saturated open branch."""

    closed: bool
    open_branch: Branch | None
    records: list[dict] = field(repr=False)
    branches_explored: int
    peak_live_formulas: int

    def trace_json(self) -> str:
        return json.dumps(self.records, indent=2, sort_keys=True)

    def trace_text(self) -> str:
        lines = []
        for r in self.records:
            if r["rule"] == "closure":
                lines.append(f"[b{r['branch']}] closed ({r['kind']}): {r['detail']}")
            elif "children" in r:
                parts = " | ".join(
                    f"b{c['branch']}: " + "; ".join(c["facts"]) for c in r["children"]
                )
                lines.append(f"[b{r['branch']}] {r['rule']:<3} {r['premise']}  =>  {parts}")
            else:
                lines.append(
                    f"[b{r['branch']}] {r['rule']:<3} {r['premise']}  =>  "
                    + "; ".join(r["facts"])
                )
        return "\n".join(lines)


class _Search:
    def __init__(self, vocab: Vocabulary):
        self.vocab = vocab
        self.records: list[dict] = []
        self.next_id = 1
        self.peak = 0
        self.explored = 0

    def _rec(self, record: dict) -> None:
        self.records.append(record)

    def _alloc(self) -> int:
        i = self.next_id
        self.next_id += 1
        return i

    def run(self, f: Formula) -> TableauResult:
        root = Branch(self.vocab, 0)
        root.add((), f)
        stack = [root]
        while stack:
            branch = stack.pop()
            self.explored += 1
            outcome = self._saturate(branch)
            if outcome == "closed":
                continue
            if outcome == "open":
                branch.saturated = True
                return TableauResult(False, branch, self.records, self.explored, self.peak)
            stack.extend(reversed(outcome))
        return TableauResult(True, None, self.records, self.explored, self.peak)

    def _saturate(self, branch: Branch):
        while True:
            self.peak = max(self.peak, len(branch.facts))
            progressed = False
            while branch.pending[RuleClass.LIT]:
                apply_rule(branch, branch.pending[RuleClass.LIT].pop(0), self._rec)
            while branch.pending[RuleClass.EQL]:
                apply_rule(branch, branch.pending[RuleClass.EQL].pop(0), self._rec)
                progressed = True
            while branch.pending[RuleClass.A]:
                apply_rule(branch, branch.pending[RuleClass.A].pop(0), self._rec)
                progressed = True
            self.peak = max(self.peak, len(branch.facts))
            status, detail = closure_verdict(branch)
            if status is not ClosureStatus.OPEN_SO_FAR:
                self._rec(
                    {"rule": "closure", "branch": branch.id, "kind": status.value, "detail": detail}
                )
                return "closed"
            if self._generative_pass(branch) or progressed:
                continue
            for cls in (RuleClass.B, RuleClass.PD, RuleClass.P):
                if branch.pending[cls]:
                    lf = branch.pending[cls].pop(0)
                    children = apply_rule(branch, lf, self._rec, self._alloc)
                    if children == [branch]:
                        break  # zero-atom case: re-enter the closure check
                    return children
            else:
                return "open"

    def _generative_pass(self, branch: Branch) -> bool:
        changed = False
        while True:
            round_changed = False
            for lf in list(branch.n_facts):
                before = len(branch.facts)
                apply_rule(branch, lf, self._rec)
                round_changed |= len(branch.facts) > before
            for lf in list(branch.nd_facts):
                before = len(branch.facts)
                apply_rule(branch, lf, self._rec)
                round_changed |= len(branch.facts) > before
            for lf in list(branch.pw_facts):
                round_changed |= apply_per(branch, lf, self._rec)
            self.peak = max(self.peak, len(branch.facts))
            if not round_changed:
                return changed
            changed = True


def prove_tableau(f: Formula, vocab: Vocabulary) -> TableauResult:
    """Depth-first proof search for the labeled formula <> : f.

    Callers pass the negation of the formula they want proved; a fully
    closed tree refutes it, an open saturated branch is a tentative model.
    One branch is live at a time; siblings wait as snapshots.
    """
    if has_modal_equation(f):
        raise ValueError("equations are not allowed inside the scope of a modality")
    undeclared = primitive_actions(f) - set(vocab.actions)
    if undeclared:
        raise ValueError(f"actions not in the vocabulary: {sorted(undeclared)}")
    return _Search(vocab).run(f)
