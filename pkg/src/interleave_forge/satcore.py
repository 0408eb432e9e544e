"""3CNF formulas, DIMACS I/O, and small satisfiability oracles.

`Cnf3` enforces width-3 clauses without repeated variables (the reduction
gadgets rely on both). `GeneralCnf` is the loose container used by the
CI-to-CNF export, where Tseitin and parity clauses have width != 3.
"""

from __future__ import annotations

from dataclasses import dataclass, field

Literal = tuple[int, bool]  # (0-based variable index, negated?)

BRUTE_FORCE_VAR_LIMIT = 25


@dataclass(frozen=True)
class Cnf3:
    num_vars: int
    clauses: tuple[tuple[Literal, Literal, Literal], ...]
    comments: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if self.num_vars < 0:
            raise ValueError("negative variable count")
        for clause in self.clauses:
            if len(clause) != 3:
                raise ValueError(f"clause width must be exactly 3, got {len(clause)}")
            seen = set()
            for var, neg in clause:
                if not 0 <= var < self.num_vars:
                    raise ValueError(f"variable {var} out of range")
                if var in seen:
                    raise ValueError(f"clause repeats variable {var}")
                seen.add(var)
                if not isinstance(neg, bool):
                    raise ValueError("negation flag must be a bool")


def parse_dimacs(text: str) -> Cnf3:
    """Parse DIMACS CNF with all clauses of width 3.

    1-based DIMACS variables map to 0-based indices; comment lines are kept
    on the parsed object (and dropped again by emit_dimacs).
    """
    num_vars = None
    num_clauses = None
    comments = []
    literals: list[int] = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("c"):
            comments.append(line[1:].lstrip())
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[0] != "p" or parts[1] != "cnf":
                raise ValueError(f"malformed DIMACS header: {line!r}")
            try:
                num_vars, num_clauses = int(parts[2]), int(parts[3])
            except ValueError as exc:
                raise ValueError(f"malformed DIMACS header: {line!r}") from exc
            continue
        if num_vars is None:
            raise ValueError("clause before DIMACS header")
        try:
            literals.extend(int(tok) for tok in line.split())
        except ValueError as exc:
            raise ValueError(f"malformed clause line: {line!r}") from exc
    if num_vars is None:
        raise ValueError("missing DIMACS header")
    clauses = []
    current: list[Literal] = []
    for lit in literals:
        if lit == 0:
            if len(current) != 3:
                raise ValueError(f"clause width must be exactly 3, got {len(current)}")
            clauses.append(tuple(current))
            current = []
            continue
        var = abs(lit) - 1
        if var >= num_vars:
            raise ValueError(f"variable {abs(lit)} out of range")
        current.append((var, lit < 0))
    if current:
        if len(current) != 3:
            raise ValueError(f"clause width must be exactly 3, got {len(current)}")
        clauses.append(tuple(current))
    if num_clauses is not None and len(clauses) != num_clauses:
        raise ValueError(
            f"header declares {num_clauses} clauses, found {len(clauses)}"
        )
    return Cnf3(num_vars, tuple(clauses), tuple(comments))


def emit_dimacs(formula: Cnf3) -> str:
    """Normalized DIMACS text: header, one clause per line, no comments."""
    lines = [f"p cnf {formula.num_vars} {len(formula.clauses)}"]
    for clause in formula.clauses:
        lits = " ".join(str(-(v + 1) if neg else v + 1) for v, neg in clause)
        lines.append(f"{lits} 0")
    return "\n".join(lines) + "\n"


def eval_assignment(formula: Cnf3, assignment) -> bool:
    """True iff every clause contains a true literal."""
    if len(assignment) != formula.num_vars:
        raise ValueError(
            f"assignment length {len(assignment)} != {formula.num_vars} variables"
        )
    for clause in formula.clauses:
        if not any(assignment[v] != neg for v, neg in clause):
            return False
    return True


def brute_force_sat(formula: Cnf3):
    """First satisfying assignment in all-false-first order, or None.

    Hard-guarded to num_vars <= 25; this is the desk-scale oracle the
    reduction tests are cross-checked against.
    """
    n = formula.num_vars
    if n > BRUTE_FORCE_VAR_LIMIT:
        raise ValueError(f"brute force limited to {BRUTE_FORCE_VAR_LIMIT} variables")
    for mask in range(1 << n):
        assignment = tuple(bool(mask >> k & 1) for k in range(n))
        if eval_assignment(formula, assignment):
            return assignment
    return None


# --- general CNF container (solver bridge) ---------------------------------


@dataclass(frozen=True)
class GeneralCnf:
    """CNF with arbitrary clause widths; literals are DIMACS-signed ints."""

    num_vars: int
    clauses: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        for clause in self.clauses:
            for lit in clause:
                if lit == 0 or abs(lit) > self.num_vars:
                    raise ValueError(f"literal {lit} out of range")


def emit_dimacs_general(cnf: GeneralCnf, comments=()) -> str:
    lines = [f"c {c}" for c in comments]
    lines.append(f"p cnf {cnf.num_vars} {len(cnf.clauses)}")
    for clause in cnf.clauses:
        lines.append(" ".join(str(lit) for lit in clause) + " 0")
    return "\n".join(lines) + "\n"


def dpll_sat(cnf: GeneralCnf):
    """Deterministic DPLL with unit propagation.

    Returns a full model as {var: bool} (unconstrained variables False), or
    None when unsatisfiable. Branches on the lowest unassigned variable,
    False first, so the model found is reproducible.
    """
    assignment: dict[int, bool] = {}

    def propagate(clauses):
        clauses = list(clauses)
        while True:
            unit = None
            next_clauses = []
            for clause in clauses:
                live = []
                satisfied = False
                for lit in clause:
                    var = abs(lit)
                    if var in assignment:
                        if assignment[var] == (lit > 0):
                            satisfied = True
                            break
                    else:
                        live.append(lit)
                if satisfied:
                    continue
                if not live:
                    return None
                if len(live) == 1 and unit is None:
                    unit = live[0]
                next_clauses.append(live)
            if unit is None:
                return next_clauses
            assignment[abs(unit)] = unit > 0
            clauses = next_clauses

    def solve(clauses) -> bool:
        before = dict(assignment)
        reduced = propagate(clauses)
        if reduced is None:
            assignment.clear()
            assignment.update(before)
            return False
        if not reduced:
            return True
        var = min(
            abs(lit) for clause in reduced for lit in clause if abs(lit) not in assignment
        )
        for value in (False, True):
            snapshot = dict(assignment)
            assignment[var] = value
            if solve(reduced):
                return True
            assignment.clear()
            assignment.update(snapshot)
        assignment.clear()
        assignment.update(before)
        return False

    if not solve(list(cnf.clauses)):
        return None
    return {v: assignment.get(v, False) for v in range(1, cnf.num_vars + 1)}
