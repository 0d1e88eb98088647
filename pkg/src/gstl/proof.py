"""Hilbert-style proof objects and their checker.

Proof document, one step per line::

    # comments and blank lines are ignored
    1. a ; premise
    2. a -> b ; premise
    3. b ; mp 1 2
    4. !!a -> a ; axiom P1 {phi := a}
    5. G[0,3] (p -> q) -> (G[0,3] p -> G[0,3] q) ; axiom T1
    6. (m | F[0,2] m) -> b ; premise
    7. b ; irr 6

``mp i j`` needs step ``j`` to be ``step_i -> step_k``.  ``irr i`` needs step
``i`` to be ``(mu | F[I] mu) -> step_k`` with atom ``mu`` absent from step
``k``.  An axiom without a substitution block is accepted when some
substitution reproduces the step.  Substitution values are formulas except
``I`` (interval), ``A`` (scope), ``R`` (pattern), ``rel`` and ``i``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from .algebra import TimeInterval
from .errors import GstlError, GstlSyntaxError
from .schemas import SCHEMAS, instantiate_schema, match_instance
from .syntax import (Atom, CaPattern, Eventually, Implies, Or, Term, TheorySet, atoms_of, parse,
                     to_text)


@dataclass(frozen=True)
class Premise:
    def __str__(self):
        return "premise"


@dataclass(frozen=True)
class ModusPonens:
    i: int
    j: int

    def __str__(self):
        return f"mp {self.i} {self.j}"


@dataclass(frozen=True)
class Irr:
    i: int

    def __str__(self):
        return f"irr {self.i}"


@dataclass(frozen=True)
class Axiom:
    schema: str
    substitution: tuple | None = None   # ((name, value), ...) or None to infer

    def __str__(self):
        if self.substitution is None:
            return f"axiom {self.schema}"
        body = "; ".join(f"{k} := {_value_text(v)}" for k, v in self.substitution)
        return f"axiom {self.schema} {{{body}}}"


@dataclass(frozen=True)
class Step:
    formula: object
    justification: object


@dataclass(frozen=True)
class ProofScript:
    """Steps citing later steps are representable; :func:`check_proof` rejects them."""

    steps: tuple = ()

    def __len__(self):
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)


@dataclass(frozen=True)
class ProofResult:
    valid: bool
    step: int | None = None
    reason: str = ""

    def __bool__(self):
        return self.valid

    def __str__(self):
        return "Valid" if self.valid else f"Invalid at step {self.step}: {self.reason}"


def _refs(j) -> tuple:
    if isinstance(j, ModusPonens):
        return (j.i, j.j)
    if isinstance(j, Irr):
        return (j.i,)
    return ()


def _value_text(v) -> str:
    if isinstance(v, TimeInterval):
        return f"[{v.lo},{'inf' if v.hi is None else v.hi}]"
    if isinstance(v, CaPattern):
        return str(v)
    if isinstance(v, tuple):
        return "[" + ", ".join(v) + "]"
    if isinstance(v, (str, int)):
        return str(v)
    return to_text(v)


# --- checking ---------------------------------------------------------------------

def irr_atom(f):
    """The atom ``mu`` if ``f`` has the shape ``(mu | F[I] mu) -> phi``, else ``None``."""
    if not (isinstance(f, Implies) and isinstance(f.left, Or)):
        return None
    a, b = f.left.left, f.left.right
    if not (isinstance(a, Term) and isinstance(a.term, Atom)):
        return None
    if not (isinstance(b, Eventually) and b.body == a):
        return None
    return a.term.name


def _check_step(k: int, st: Step, formulas: list, premises) -> str | None:
    j, f = st.justification, st.formula
    for ref in _refs(j):
        if not 1 <= ref < k:
            return f"reference {ref} is not an earlier step"
    if isinstance(j, Premise):
        if premises is not None and f not in premises:
            return "not among the premises"
        return None
    if isinstance(j, ModusPonens):
        if formulas[j.j - 1] != Implies(formulas[j.i - 1], f):
            return f"step {j.j} is not step {j.i} -> this formula"
        return None
    if isinstance(j, Irr):
        src = formulas[j.i - 1]
        mu = irr_atom(src)
        if mu is None:
            return f"step {j.i} is not of the form (mu | F[I] mu) -> phi"
        if src.right != f:
            return f"formula is not the consequent of step {j.i}"
        if mu in atoms_of(f):
            return f"atom {mu} occurs in the conclusion"
        return None
    if isinstance(j, Axiom):
        if j.schema.upper() not in SCHEMAS:
            return f"unknown schema {j.schema}"
        if j.substitution is None:
            if match_instance(j.schema, f) is None:
                return f"not an instance of {j.schema.upper()}"
            return None
        try:
            inst = instantiate_schema(j.schema, dict(j.substitution))
        except (GstlError, ValueError, KeyError) as exc:
            return f"bad substitution for {j.schema.upper()}: {exc}"
        if inst != f:
            return f"substitution does not reproduce the formula ({to_text(inst)})"
        return None
    return f"unknown justification {j!r}"


def check_proof(p: ProofScript, premises: TheorySet | None = None) -> ProofResult:
    """Check every step; the first failure is reported with its 1-based index.

    With ``premises=None`` premise steps are open hypotheses and always accepted.
    """
    allowed = None if premises is None else set(premises.formulas)
    formulas = [st.formula for st in p.steps]
    for k, st in enumerate(p.steps, 1):
        reason = _check_step(k, st, formulas, allowed)
        if reason is not None:
            return ProofResult(False, k, reason)
    return ProofResult(True)


# --- text format --------------------------------------------------------------------

_LINE = re.compile(r"^\s*(\d+)\s*\.\s*(.*)$")
_NONFORMULA = {"I", "A", "R", "rel", "i"}


def _parse_substitution(body: str, line: int) -> tuple:
    out = []
    for part in body.split(";"):
        if not part.strip():
            continue
        if ":=" not in part:
            raise GstlSyntaxError(f"expected 'name := value' in {part.strip()!r}", line)
        name, value = (s.strip() for s in part.split(":=", 1))
        if name == "i":
            out.append((name, int(value)))
        elif name in _NONFORMULA:
            out.append((name, value))
        else:
            out.append((name, parse(value)))
    return tuple(out)


def _parse_justification(text: str, line: int):
    words = text.split(None, 2)
    if not words:
        raise GstlSyntaxError("missing justification", line)
    head = words[0].lower()
    try:
        if head == "premise" and len(words) == 1:
            return Premise()
        if head == "mp" and len(words) == 3:
            return ModusPonens(int(words[1]), int(words[2]))
        if head == "irr" and len(words) == 2:
            return Irr(int(words[1]))
    except ValueError:
        raise GstlSyntaxError(f"bad step reference in {text!r}", line) from None
    if head == "axiom" and len(words) >= 2:
        rest = text.split(None, 1)[1]
        m = re.match(r"^(\w+)\s*(?:\{(.*)\})?\s*$", rest, re.S)
        if not m:
            raise GstlSyntaxError(f"bad axiom justification {text!r}", line)
        sub = None if m.group(2) is None else _parse_substitution(m.group(2), line)
        return Axiom(m.group(1).upper(), sub)
    raise GstlSyntaxError(f"unknown justification {text!r}", line)


def parse_proof(text: str) -> ProofScript:
    steps = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        s = raw.split("#", 1)[0].strip()
        if not s:
            continue
        m = _LINE.match(s)
        if not m:
            raise GstlSyntaxError("expected 'k. formula ; justification'", lineno)
        if int(m.group(1)) != len(steps) + 1:
            raise GstlSyntaxError(f"step number {m.group(1)} out of sequence", lineno)
        if ";" not in m.group(2):
            raise GstlSyntaxError("missing ';' before the justification", lineno)
        ftext, jtext = m.group(2).split(";", 1)
        try:
            f = parse(ftext)
        except GstlSyntaxError as exc:
            raise GstlSyntaxError(exc.message, lineno, exc.column) from None
        steps.append(Step(f, _parse_justification(jtext.strip(), lineno)))
    return ProofScript(tuple(steps))


def dump_proof(p: ProofScript) -> str:
    return "".join(f"{k}. {to_text(st.formula)} ; {st.justification}\n"
                   for k, st in enumerate(p.steps, 1))


__all__ = ["Premise", "ModusPonens", "Irr", "Axiom", "Step", "ProofScript", "ProofResult",
           "check_proof", "parse_proof", "dump_proof", "irr_atom", "instantiate_schema"]
