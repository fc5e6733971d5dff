"""Event-labeled structures, the satisfaction relation, countermodel
extraction from open branches, a bounded-model satisfiability oracle, and
tree-model utilities (unraveling, witness-pruning).

A structure interprets primitive actions as sets of events and propositions
as sets of worlds; the transition relation is functional per event, every
event belongs to some action, and no two events are produced by the same
combination of actions (so each atom of the term algebra denotes at most one
event).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .algebra import atom_label, atom_term, term_truth
from .syntax import (
    ActionTerm,
    And,
    Box,
    Compl,
    Diamond,
    Empty,
    Eq,
    Falsity,
    Formula,
    Iff,
    Implies,
    Join,
    Meet,
    Neq,
    Not,
    Or,
    PermS,
    PermW,
    Prim,
    Prop,
    Truth,
    Univ,
    Vocabulary,
    degree,
    existential_degree,
    flatten_and,
    nnf,
    pretty_print,
    proposition_names,
    subformulae_at_level,
)
from .tableau import Branch, ClosureStatus, closure_verdict, eq_star


@dataclass
class VStructure:
    """An event-labeled Kripke structure with a permission relation.

    Treated as immutable; events are opaque names (countermodels use the
    canonical atom rendering, e.g. "a & !b").
    """

    worlds: tuple[str, ...]
    events: tuple[str, ...]
    transitions: frozenset[tuple[str, str, str]]  # (source, event, target)
    permitted: frozenset[tuple[str, str]]  # (world, event)
    interp_actions: dict[str, frozenset[str]] = field(default_factory=dict)
    interp_props: dict[str, frozenset[str]] = field(default_factory=dict)


def validate_structure(m: VStructure) -> list[str]:
    """Check the structural laws; returns human-readable violations (empty = ok).

    Beyond referential sanity: the transition relation must be functional per
    event, every event must belong to some action, and events must be
    pairwise distinguishable by the exact set of actions containing them
    (one event per action combination, which is what makes every atom of the
    term algebra denote at most one event).
    """
    violations = []
    worlds = set(m.worlds)
    events = set(m.events)
    if not events:
        violations.append("the event set is empty")
    for name, interpretation in m.interp_actions.items():
        stray = interpretation - events
        if stray:
            violations.append(f"I({name}) mentions unknown events {sorted(stray)}")
    for name, interpretation in m.interp_props.items():
        stray = interpretation - worlds
        if stray:
            violations.append(f"I({name}) mentions unknown worlds {sorted(stray)}")
    for w, e, v in m.transitions:
        if w not in worlds or v not in worlds or e not in events:
            violations.append(f"transition ({w}, {e}, {v}) references unknown items")
    for w, e in m.permitted:
        if w not in worlds or e not in events:
            violations.append(f"permitted pair ({w}, {e}) references unknown items")
    targets: dict[tuple[str, str], set[str]] = {}
    for w, e, v in m.transitions:
        targets.setdefault((w, e), set()).add(v)
    for (w, e), vs in sorted(targets.items()):
        if len(vs) > 1:
            violations.append(
                f"functionality violated: event {e} from {w} reaches {sorted(vs)}"
            )
    covered = set()
    for interpretation in m.interp_actions.values():
        covered |= interpretation
    uncovered = events - covered
    if uncovered:
        violations.append(
            f"I.3 violated: events {sorted(uncovered)} belong to no action"
        )
    combo: dict[frozenset[str], list[str]] = {}
    for e in m.events:
        acts = frozenset(a for a, interp in m.interp_actions.items() if e in interp)
        combo.setdefault(acts, []).append(e)
    for acts, shared in sorted(combo.items(), key=lambda kv: sorted(kv[0])):
        if len(shared) > 1 and acts:
            condition = "I.1" if len(acts) == 1 else "I.2"
            violations.append(
                f"{condition} violated: events {sorted(shared)} share the exact "
                f"action combination {sorted(acts)}"
            )
    return violations


def interpret_term(m: VStructure, t: ActionTerm) -> frozenset[str]:
    """Homomorphic extension of the action interpretation to terms."""
    all_events = frozenset(m.events)
    match t:
        case Prim(name):
            try:
                return m.interp_actions[name]
            except KeyError:
                raise ValueError(f"action {name!r} is not interpreted") from None
        case Meet(left, right):
            return interpret_term(m, left) & interpret_term(m, right)
        case Join(left, right):
            return interpret_term(m, left) | interpret_term(m, right)
        case Compl(sub):
            return all_events - interpret_term(m, sub)
        case Empty():
            return frozenset()
        case Univ():
            return all_events
    raise TypeError(f"not an action term: {t!r}")


def satisfies(m: VStructure, w: str, f: Formula) -> bool:
    """The satisfaction relation at a world."""
    match f:
        case Prop(name):
            return w in m.interp_props.get(name, frozenset())
        case Truth():
            return True
        case Falsity():
            return False
        case Not(sub):
            return not satisfies(m, w, sub)
        case And(left, right):
            return satisfies(m, w, left) and satisfies(m, w, right)
        case Or(left, right):
            return satisfies(m, w, left) or satisfies(m, w, right)
        case Implies(left, right):
            return not satisfies(m, w, left) or satisfies(m, w, right)
        case Iff(left, right):
            return satisfies(m, w, left) == satisfies(m, w, right)
        case Box(action, sub):
            events = interpret_term(m, action)
            return all(
                satisfies(m, v, sub)
                for (src, e, v) in m.transitions
                if src == w and e in events
            )
        case Diamond(action, sub):
            events = interpret_term(m, action)
            return any(
                satisfies(m, v, sub)
                for (src, e, v) in m.transitions
                if src == w and e in events
            )
        case PermS(action):
            return all((w, e) in m.permitted for e in interpret_term(m, action))
        case PermW(action):
            return any((w, e) in m.permitted for e in interpret_term(m, action))
        case Eq(left, right):
            return interpret_term(m, left) == interpret_term(m, right)
        case Neq(left, right):
            return interpret_term(m, left) != interpret_term(m, right)
    raise TypeError(f"not a formula: {f!r}")


# ---------------------------------------------------------------------------
# Countermodel extraction


def _world_name(label: tuple[int, ...], vocab: Vocabulary) -> str:
    if not label:
        return "<>"
    return "<" + ", ".join(atom_label(g, vocab) for g in label) + ">"


def extract_countermodel(branch: Branch) -> VStructure:
    """Read a structure off an open saturated branch.

    Worlds are the branch labels, events the atoms used by labels and
    atom-level deontic facts (plus a witness for every recorded inequation,
    and one fallback event so the event set is never empty).  Strong
    permissions permit every event of their action; weak permissions only
    the atom witnesses the search committed to.
    """
    status, _ = closure_verdict(branch)
    if status is not ClosureStatus.OPEN_SO_FAR:
        raise ValueError("branch is closed; it has no model")
    if not branch.is_saturated():
        raise ValueError("branch is not saturated")
    vocab = branch.vocab
    theory = eq_star(branch)

    atoms: set[int] = set()
    for label in branch.labels:
        atoms.update(label)
    for label_atoms in branch.pd_atoms.values():
        atoms.update(label_atoms)
    for t1, t2 in branch.inequations:
        if any(
            term_truth(t1, g, vocab) != term_truth(t2, g, vocab) for g in atoms
        ):
            continue
        witness = next(
            (
                g
                for g in vocab.iter_atoms()
                if term_truth(t1, g, vocab) != term_truth(t2, g, vocab)
                and not theory.is_forced_empty(g)
            ),
            None,
        )
        if witness is None:
            raise AssertionError("open branch with a refuted inequation")
        atoms.add(witness)
    if not atoms:
        atoms.add(next(iter(theory.atoms_below(Univ()))))

    event_of = {g: atom_label(g, vocab) for g in sorted(atoms)}
    worlds = tuple(_world_name(label, vocab) for label in branch.labels)
    transitions = frozenset(
        (
            _world_name(label[:-1], vocab),
            event_of[label[-1]],
            _world_name(label, vocab),
        )
        for label in branch.labels
        if label
    )
    interp_actions = {
        name: frozenset(event_of[g] for g in sorted(atoms) if g >> i & 1)
        for i, name in enumerate(vocab.actions)
    }
    props: dict[str, set[str]] = {}
    for lf in branch.facts:
        if isinstance(lf.formula, Prop):
            props.setdefault(lf.formula.name, set()).add(_world_name(lf.label, vocab))
    permitted: set[tuple[str, str]] = set()
    for label, terms in branch.weak_pos.items():
        w = _world_name(label, vocab)
        for t in terms:
            gamma = _atom_id_of(t, vocab)
            if gamma is not None and gamma in event_of:
                permitted.add((w, event_of[gamma]))
    for label, terms in branch.strong_pos.items():
        w = _world_name(label, vocab)
        for t in terms:
            for g in sorted(atoms):
                if term_truth(t, g, vocab):
                    permitted.add((w, event_of[g]))

    return VStructure(
        worlds=worlds,
        events=tuple(event_of[g] for g in sorted(atoms)),
        transitions=transitions,
        permitted=frozenset(permitted),
        interp_actions=interp_actions,
        interp_props={p: frozenset(ws) for p, ws in props.items()},
    )


def _atom_id_of(t: ActionTerm, vocab: Vocabulary) -> int | None:
    from .algebra import atom_of_canonical_term

    return atom_of_canonical_term(t, vocab)


# ---------------------------------------------------------------------------
# Bounded-model satisfiability oracle

ORACLE_MAX_ACTIONS = 3
ORACLE_MAX_PROPS = 3
ORACLE_MAX_DEGREE = 3


def bounded_sat_oracle(f: Formula, vocab: Vocabulary) -> bool:
    """Exhaustive search for a bounded tree model of f.

    The search space is complete for satisfiability: event universes range
    over the nonempty sets of atoms (which fixes every interpretation shape
    the structure laws allow), trees are cut at the modal degree, out-degree
    is capped by the existential node count, and permissions vary only on
    events of atoms below the actions of permission subformulae — everything
    else cannot influence the formula's truth.  Implemented level by level:
    the achievable truth profiles of bounded subtrees are enumerated from the
    leaves up instead of materializing every tree.
    """
    if vocab.width > ORACLE_MAX_ACTIONS:
        raise ValueError(f"oracle guard: more than {ORACLE_MAX_ACTIONS} actions")
    if len(proposition_names(f)) > ORACLE_MAX_PROPS:
        raise ValueError(f"oracle guard: more than {ORACLE_MAX_PROPS} propositions")
    depth = degree(f)
    if depth > ORACLE_MAX_DEGREE:
        raise ValueError(f"oracle guard: degree above {ORACLE_MAX_DEGREE}")
    out_cap = max(1, existential_degree(nnf(f)))
    levels = _subformula_levels(f)
    atoms = list(vocab.iter_atoms())
    for size in range(1, len(atoms) + 1):
        for universe in itertools.combinations(atoms, size):
            if _satisfiable_over(f, levels, set(universe), depth, out_cap, vocab):
                return True
    return False


def _subformula_levels(f: Formula) -> dict[int, list[Formula]]:
    levels: dict[int, list[Formula]] = {}
    seen: set[tuple[int, Formula]] = set()

    def walk(g: Formula, depth: int) -> None:
        if (depth, g) in seen:
            return
        seen.add((depth, g))
        levels.setdefault(depth, []).append(g)
        match g:
            case Box(_, sub) | Diamond(_, sub):
                walk(sub, depth + 1)
            case Not(sub):
                walk(sub, depth)
            case And(l, r) | Or(l, r) | Implies(l, r) | Iff(l, r):
                walk(l, depth)
                walk(r, depth)
            case _:
                pass

    walk(f, 0)
    return levels


def _satisfiable_over(f, levels, universe, depth, out_cap, vocab) -> bool:
    def events_below(t: ActionTerm) -> frozenset[int]:
        return frozenset(g for g in universe if term_truth(t, g, vocab))

    term_cache: dict[ActionTerm, frozenset[int]] = {}

    def term_events(t: ActionTerm) -> frozenset[int]:
        if t not in term_cache:
            term_cache[t] = events_below(t)
        return term_cache[t]

    profiles_below: set[frozenset[Formula]] = {frozenset()}
    for level in range(depth, -1, -1):
        nodes = levels.get(level, [])
        if not nodes:
            profiles_below = {frozenset()}
            continue
        prop_names = sorted({g.name for g in nodes if isinstance(g, Prop)})
        perm_atoms = sorted(
            {
                g
                for node in nodes
                if isinstance(node, (PermS, PermW))
                for g in term_events(node.action)
            }
        )
        bodies = {node.sub for node in nodes if isinstance(node, (Box, Diamond))}
        has_children = bool(bodies) and level < depth
        if has_children:
            child_profiles = sorted(
                {p & bodies for p in profiles_below},
                key=lambda p: sorted(pretty_print(x) for x in p),
            )
        ordered = sorted(nodes, key=_formula_order_key)
        achieved: set[frozenset[Formula]] = set()
        for true_props in _subsets(prop_names):
            for allowed in _subsets(perm_atoms):
                for children in _child_maps(universe, child_profiles, out_cap) if has_children else ({},):
                    truth: dict[Formula, bool] = {}
                    for node in ordered:
                        truth[node] = _eval_node(
                            node, truth, true_props, allowed, children, term_events
                        )
                    achieved.add(frozenset(n for n in nodes if truth[n]))
        profiles_below = achieved
    return any(f in profile for profile in profiles_below)


def _formula_order_key(g: Formula):
    from .syntax import formula_size

    return (formula_size(g), pretty_print(g))


def _subsets(items):
    for r in range(len(items) + 1):
        yield from (frozenset(c) for c in itertools.combinations(items, r))


def _child_maps(universe, child_profiles, out_cap):
    events = sorted(universe)
    cap = min(out_cap, len(events))
    for r in range(cap + 1):
        for chosen_events in itertools.combinations(events, r):
            for chosen_profiles in itertools.product(child_profiles, repeat=r):
                yield dict(zip(chosen_events, chosen_profiles))


def _eval_node(node, truth, true_props, allowed, children, term_events) -> bool:
    match node:
        case Prop(name):
            return name in true_props
        case Truth():
            return True
        case Falsity():
            return False
        case Not(sub):
            return not truth[sub]
        case And(l, r):
            return truth[l] and truth[r]
        case Or(l, r):
            return truth[l] or truth[r]
        case Implies(l, r):
            return not truth[l] or truth[r]
        case Iff(l, r):
            return truth[l] == truth[r]
        case Box(action, sub):
            events = term_events(action)
            return all(sub in prof for e, prof in children.items() if e in events)
        case Diamond(action, sub):
            events = term_events(action)
            return any(sub in prof for e, prof in children.items() if e in events)
        case PermS(action):
            return term_events(action) <= allowed
        case PermW(action):
            return bool(term_events(action) & allowed)
        case Eq(t1, t2):
            return term_events(t1) == term_events(t2)
        case Neq(t1, t2):
            return term_events(t1) != term_events(t2)
    raise TypeError(f"not a formula: {node!r}")


# ---------------------------------------------------------------------------
# Tree utilities: unraveling, reachability labeling, witness pruning


def _tree_children(m: VStructure, w: str) -> list[tuple[str, str]]:
    return sorted((e, v) for (src, e, v) in m.transitions if src == w)


def _assert_tree(m: VStructure, root: str) -> dict[str, int]:
    """Depths of the worlds reachable from root; raises if not tree-shaped."""
    depths = {root: 0}
    order = [root]
    parents = {root: None}
    i = 0
    while i < len(order):
        w = order[i]
        i += 1
        for _e, v in _tree_children(m, w):
            if v in depths:
                raise ValueError(f"structure is not tree-shaped from {root!r}: {v!r} re-reached")
            depths[v] = depths[w] + 1
            parents[v] = w
            order.append(v)
    return depths


def unravel(m: VStructure, root: str, depth: int) -> VStructure:
    """Unfold a structure into a satisfaction-equivalent tree of bounded depth."""
    worlds = []
    transitions = set()
    permitted = set()
    props: dict[str, set[str]] = {}

    def visit(w: str, path: str, remaining: int) -> None:
        worlds.append(path)
        for p, interp in m.interp_props.items():
            if w in interp:
                props.setdefault(p, set()).add(path)
        for e in m.events:
            if (w, e) in m.permitted:
                permitted.add((path, e))
        if remaining == 0:
            return
        for e, v in _tree_children(m, w):
            child_path = f"{path}/{e}"
            transitions.add((path, e, child_path))
            visit(v, child_path, remaining - 1)

    visit(root, root, depth)
    return VStructure(
        worlds=tuple(worlds),
        events=m.events,
        transitions=frozenset(transitions),
        permitted=frozenset(permitted),
        interp_actions=dict(m.interp_actions),
        interp_props={p: frozenset(ws) for p, ws in props.items()},
    )


def reach_labeling(m: VStructure, root: str, f: Formula) -> dict[str, frozenset[Formula]]:
    """For each world reachable in k <= degree(f) steps, the level-k
    constraint-set members it satisfies."""
    depths = _assert_tree(m, root)
    n = degree(f)
    labeling = {}
    for w, k in sorted(depths.items()):
        if k > n:
            continue
        members = subformulae_at_level(f, k)
        labeling[w] = frozenset(g for g in members if satisfies(m, w, g))
    return labeling


def shrink_model(m: VStructure, root: str, f: Formula) -> VStructure:
    """Prune a tree model down to one witness transition per possibility.

    The input must satisfy f at root; the result keeps, level by level, a
    single successor for each possibility conjunct the world inherits, so its
    out-degree never exceeds the existential degree of f while the labeling
    of every kept world still holds.
    """
    if not satisfies(m, root, f):
        raise ValueError("the structure does not satisfy the formula at the root")
    labeling = reach_labeling(m, root, f)
    n = degree(f)
    kept_transitions: set[tuple[str, str, str]] = set()
    frontier = [root]
    kept_worlds = {root}
    for _level in range(n):
        next_frontier: list[str] = []
        for w in frontier:
            for member in sorted(labeling.get(w, ()), key=pretty_print):
                if not isinstance(member, Diamond):
                    continue
                events = interpret_term(m, member.action)
                witness = next(
                    (
                        (src, e, v)
                        for (src, e, v) in sorted(m.transitions)
                        if src == w and e in events and satisfies(m, v, member.sub)
                    ),
                    None,
                )
                if witness is None:
                    raise AssertionError(
                        f"no witness for {pretty_print(member)} at {w!r}"
                    )
                kept_transitions.add(witness)
                if witness[2] not in kept_worlds:
                    kept_worlds.add(witness[2])
                    next_frontier.append(witness[2])
        frontier = next_frontier
    return VStructure(
        worlds=tuple(w for w in m.worlds if w in kept_worlds),
        events=m.events,
        transitions=frozenset(kept_transitions),
        permitted=frozenset((w, e) for (w, e) in m.permitted if w in kept_worlds),
        interp_actions=dict(m.interp_actions),
        interp_props={
            p: frozenset(ws & kept_worlds) for p, ws in m.interp_props.items()
        },
    )


# ---------------------------------------------------------------------------
# Serialization


def structure_to_json(m: VStructure) -> dict:
    return {
        "worlds": sorted(m.worlds),
        "events": sorted(m.events),
        "transitions": sorted([w, e, v] for (w, e, v) in m.transitions),
        "permitted": sorted([w, e] for (w, e) in m.permitted),
        "actions": {a: sorted(es) for a, es in sorted(m.interp_actions.items())},
        "propositions": {p: sorted(ws) for p, ws in sorted(m.interp_props.items())},
    }


def structure_from_json(data: dict) -> VStructure:
    return VStructure(
        worlds=tuple(data["worlds"]),
        events=tuple(data["events"]),
        transitions=frozenset((w, e, v) for w, e, v in data["transitions"]),
        permitted=frozenset((w, e) for w, e in data["permitted"]),
        interp_actions={a: frozenset(es) for a, es in data["actions"].items()},
        interp_props={p: frozenset(ws) for p, ws in data["propositions"].items()},
    )


def _dot_escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


def structure_to_dot(m: VStructure) -> str:
    """Graphviz rendering: one node per world annotated with its true
    propositions and permitted events, one edge per transition."""
    lines = ["digraph model {", "  rankdir=LR;", '  node [shape=box, fontname="monospace"];']
    for w in sorted(m.worlds):
        true_props = sorted(p for p, ws in m.interp_props.items() if w in ws)
        perms = sorted(e for (pw, e) in m.permitted if pw == w)
        label = w
        if true_props:
            label += "\\n" + ", ".join(true_props)
        if perms:
            label += "\\nperm: " + "; ".join(perms)
        lines.append(f'  "{_dot_escape(w)}" [label="{_dot_escape(label)}"];')
    for w, e, v in sorted(m.transitions):
        lines.append(
            f'  "{_dot_escape(w)}" -> "{_dot_escape(v)}" [label="{_dot_escape(e)}"];'
        )
    lines.append("}")
    return "\n".join(lines) + "\n"
