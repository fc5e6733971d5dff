"""Finite boolean algebra of action terms over a vocabulary.

Atoms are encoded as nonempty bit patterns over the ordered action alphabet
(bit i set = action i participates), so the axiom that the join of all
primitive actions is U holds by construction: the all-zero pattern is not an
atom.  An equational theory is decided through the atoms it forces empty —
an equation t1 = t2 kills exactly the atoms in the symmetric difference of
the two denotations, which is sound and complete in a finite atomic algebra.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterator

from .syntax import (
    ActionTerm,
    Compl,
    Empty,
    Join,
    Meet,
    Prim,
    Univ,
    Vocabulary,
    term_actions,
)


def term_truth(t: ActionTerm, atom: int, vocab: Vocabulary) -> bool:
    """Membership of an atom in a term's denotation, by direct evaluation."""
    match t:
        case Prim(name):
            return bool(atom >> vocab.bit(name) & 1)
        case Meet(left, right):
            return term_truth(left, atom, vocab) and term_truth(right, atom, vocab)
        case Join(left, right):
            return term_truth(left, atom, vocab) or term_truth(right, atom, vocab)
        case Compl(sub):
            return not term_truth(sub, atom, vocab)
        case Empty():
            return False
        case Univ():
            return True
    raise TypeError(f"not an action term: {t!r}")


def check_term(t: ActionTerm, vocab: Vocabulary) -> None:
    for name in term_actions(t):
        vocab.bit(name)


@dataclass(frozen=True)
class AtomSet:
    """A set of atoms of a fixed-width algebra, with boolean set operations."""

    atoms: frozenset[int]
    width: int

    def __post_init__(self):
        universe_end = 1 << self.width
        for atom in self.atoms:
            if not 0 < atom < universe_end:
                raise ValueError(f"atom {atom} out of range for width {self.width}")

    def _like(self, atoms) -> "AtomSet":
        return AtomSet(frozenset(atoms), self.width)

    def __or__(self, other: "AtomSet") -> "AtomSet":
        return self._like(self.atoms | other.atoms)

    def __and__(self, other: "AtomSet") -> "AtomSet":
        return self._like(self.atoms & other.atoms)

    def __sub__(self, other: "AtomSet") -> "AtomSet":
        return self._like(self.atoms - other.atoms)

    def __xor__(self, other: "AtomSet") -> "AtomSet":
        return self._like(self.atoms ^ other.atoms)

    def complement(self) -> "AtomSet":
        return self._like(set(range(1, 1 << self.width)) - self.atoms)

    def is_empty(self) -> bool:
        return not self.atoms

    def __len__(self):
        return len(self.atoms)

    def __contains__(self, atom: int) -> bool:
        return atom in self.atoms

    def __iter__(self):
        return iter(sorted(self.atoms))


def denote(t: ActionTerm, vocab: Vocabulary) -> AtomSet:
    """Denotation of a term as the set of atoms below it (no theory applied)."""
    check_term(t, vocab)
    atoms = frozenset(g for g in vocab.iter_atoms() if term_truth(t, g, vocab))
    return AtomSet(atoms, vocab.width)


def atom_term(atom: int, vocab: Vocabulary) -> ActionTerm:
    """The canonical meet of literals denoting exactly this atom."""
    if not 0 < atom < (1 << vocab.width):
        raise ValueError(f"atom {atom} out of range for width {vocab.width}")
    term: ActionTerm | None = None
    for i, name in enumerate(vocab.actions):
        literal: ActionTerm = Prim(name) if atom >> i & 1 else Compl(Prim(name))
        term = literal if term is None else Meet(term, literal)
    assert term is not None
    return term


def atom_label(atom: int, vocab: Vocabulary) -> str:
    from .syntax import term_str

    return term_str(atom_term(atom, vocab))


def atom_of_canonical_term(t: ActionTerm, vocab: Vocabulary) -> int | None:
    """Inverse of atom_term: the atom id if t has exactly that canonical shape."""
    literals = []
    node = t
    while isinstance(node, Meet):
        literals.append(node.right)
        node = node.left
    literals.append(node)
    literals.reverse()
    if len(literals) != vocab.width:
        return None
    atom = 0
    for i, (literal, name) in enumerate(zip(literals, vocab.actions)):
        if literal == Prim(name):
            atom |= 1 << i
        elif literal != Compl(Prim(name)):
            return None
    return atom if atom else None


@dataclass(frozen=True)
class BooleanTheory:
    """An equational extension of the algebra, decided via forced-empty atoms.

    Immutable: add_equation returns a new theory.  The decision procedures
    walk the atom range one atom at a time, so nothing the size of the full
    powerset is ever materialized.
    """

    vocab: Vocabulary
    equations: tuple[tuple[ActionTerm, ActionTerm], ...] = ()

    def add_equation(self, t1: ActionTerm, t2: ActionTerm) -> "BooleanTheory":
        check_term(t1, self.vocab)
        check_term(t2, self.vocab)
        return BooleanTheory(self.vocab, self.equations + ((t1, t2),))

    def is_forced_empty(self, atom: int) -> bool:
        return any(
            term_truth(t1, atom, self.vocab) != term_truth(t2, atom, self.vocab)
            for t1, t2 in self.equations
        )

    @cached_property
    def forced_empty(self) -> AtomSet:
        atoms = frozenset(g for g in self.vocab.iter_atoms() if self.is_forced_empty(g))
        return AtomSet(atoms, self.vocab.width)

    def atoms_below(self, t: ActionTerm) -> Iterator[int]:
        """Live atoms below a term, ascending bit-pattern order, lazily."""
        check_term(t, self.vocab)
        for atom in self.vocab.iter_atoms():
            if term_truth(t, atom, self.vocab) and not self.is_forced_empty(atom):
                yield atom

    def live_atoms_below(self, t: ActionTerm, limit: int | None = None) -> list[int]:
        out = []
        for atom in self.atoms_below(t):
            out.append(atom)
            if limit is not None and len(out) >= limit:
                break
        return out

    def proves_equal(self, t1: ActionTerm, t2: ActionTerm) -> bool:
        """Equality of the two terms in the quotient algebra."""
        check_term(t1, self.vocab)
        check_term(t2, self.vocab)
        return all(
            term_truth(t1, atom, self.vocab) == term_truth(t2, atom, self.vocab)
            for atom in self.vocab.iter_atoms()
            if not self.is_forced_empty(atom)
        )

    def is_inconsistent(self) -> bool:
        """True when every atom is forced empty, i.e. the theory proves 0 = U."""
        return all(self.is_forced_empty(atom) for atom in self.vocab.iter_atoms())


def empty_theory(vocab: Vocabulary) -> BooleanTheory:
    return BooleanTheory(vocab)
