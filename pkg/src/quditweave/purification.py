"""m-to-1 entanglement purification circuits and their evolutionary search.

A circuit genome is an ordered list of three op kinds acting on pairs:

* ``PermuteOp``   bilateral single-qubit Cliffords (g on Alice, conj(g) on
                  Bob) that permute the Bell error coefficients (x, y, z)
* ``CnotOp``      bilateral CNOT between two pairs, same orientation on both
                  sides, propagating errors into the sacrificial pair
* ``MeasureOp``   both halves of a pair measured in X, Y, or Z; the run is
                  kept only when the outcomes satisfy the basis's
                  coincidence rule, which is what detects errors

Every non-surviving pair is measured exactly once and the CNOTs must
connect all pairs (minimum-entanglement requirement: m-1 CNOTs by default).
Fitness evaluation is an exact density-matrix computation, so repeated
evaluation of a genome is bit-identical and the search needs no sampling.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .states import (
    DensityMatrix,
    PHI_PLUS,
    _as_matrix,
    apply_kraus_raw,
    apply_unitary,
    fidelity,
    partial_trace,
)
from .states import H as H_GATE
from .states import I2, S as S_GATE

CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)

# sqrt(X)-type rotation exchanging the Y and Z error classes
V_GATE = np.array([[1.0, -1.0j], [-1.0j, 1.0]], dtype=complex) / np.sqrt(2.0)

# name -> (Alice gate, coefficient permutation p with new[k] = old[p[k]])
# Bob always applies the elementwise conjugate, which preserves |Phi+>.
PERMUTATIONS = {
    "identity": (I2, (0, 1, 2, 3)),
    "swap_xy": (S_GATE, (0, 2, 1, 3)),
    "swap_xz": (H_GATE, (0, 3, 2, 1)),
    "swap_yz": (V_GATE, (0, 1, 3, 2)),
    "cycle_xyz": (H_GATE @ S_GATE, (0, 3, 1, 2)),
    "cycle_xzy": (S_GATE @ H_GATE, (0, 2, 3, 1)),
}
PERMUTATION_NAMES = tuple(PERMUTATIONS)
BASES = ("X", "Y", "Z")

_BASIS_VECTORS = {
    "Z": (np.array([1.0, 0.0], dtype=complex), np.array([0.0, 1.0], dtype=complex)),
    "X": (
        np.array([1.0, 1.0], dtype=complex) / np.sqrt(2.0),
        np.array([1.0, -1.0], dtype=complex) / np.sqrt(2.0),
    ),
    "Y": (
        np.array([1.0, 1.0j], dtype=complex) / np.sqrt(2.0),
        np.array([1.0, -1.0j], dtype=complex) / np.sqrt(2.0),
    ),
}

# rotation sending each basis's outcome vectors to |0>, |1>
_BASIS_ROTATION = {
    "Z": None,
    "X": H_GATE,
    "Y": np.array([[1.0, -1.0j], [1.0, 1.0j]], dtype=complex) / np.sqrt(2.0),
}

_CNOT_PERMS: dict = {}
_MEASURE_MASKS: dict = {}


def _cnot_perm(n_qubits: int, qc: int, qt: int) -> np.ndarray:
    key = (n_qubits, qc, qt)
    if key not in _CNOT_PERMS:
        idx = np.arange(1 << n_qubits)
        _CNOT_PERMS[key] = idx ^ (((idx >> qc) & 1) << qt)
    return _CNOT_PERMS[key]


def _measure_mask(n_qubits: int, qa: int, qb: int, basis: str) -> np.ndarray:
    """Entries that survive the kept measurement branches, rotated frame.

    After rotating the measured qubits onto the computational basis, the sum
    over kept outcome projectors keeps exactly the matrix entries whose
    measured bits agree between row and column and satisfy the keep rule.
    """
    key = (n_qubits, qa, qb, basis)
    if key not in _MEASURE_MASKS:
        idx = np.arange(1 << n_qubits)
        ba = (idx >> qa) & 1
        bb = (idx >> qb) & 1
        kv = (ba == bb) if basis in ("X", "Z") else (ba != bb)
        pattern = 2 * ba + bb
        _MEASURE_MASKS[key] = (
            kv[:, None] & kv[None, :] & (pattern[:, None] == pattern[None, :])
        )
    return _MEASURE_MASKS[key]


@dataclass(frozen=True)
class BellDiagonalCoeffs:
    """Weights of (Phi+, Psi+, Psi-, Phi-), i.e. no error / X / Y / Z."""

    f: float
    x: float
    y: float
    z: float

    def __post_init__(self):
        vals = (self.f, self.x, self.y, self.z)
        if any(v < -1e-12 for v in vals) or abs(sum(vals) - 1.0) > 1e-9:
            raise ValueError("coefficients must form a probability vector")

    def as_array(self) -> np.ndarray:
        return np.array([self.f, self.x, self.y, self.z])


@dataclass(frozen=True)
class PermuteOp:
    pair: int
    perm: str

    def pairs(self):
        return (self.pair,)


@dataclass(frozen=True)
class CnotOp:
    control: int
    target: int

    def pairs(self):
        return (self.control, self.target)


@dataclass(frozen=True)
class MeasureOp:
    pair: int
    basis: str

    def pairs(self):
        return (self.pair,)


Op = Union[PermuteOp, CnotOp, MeasureOp]


@dataclass(frozen=True)
class PurificationGenome:
    """Ordered op list with a designated surviving pair."""

    m: int
    ops: tuple
    keep_pair: int = 0

    def validate(self, max_cnots: Optional[int] = None) -> None:
        if not 0 <= self.keep_pair < self.m:
            raise ValueError("surviving pair outside register")
        measured = set()
        edges = []
        for op in self.ops:
            for p in op.pairs():
                if not 0 <= p < self.m:
                    raise ValueError(f"op {op} touches pair {p} outside register")
                if p in measured:
                    raise ValueError(f"op {op} touches already measured pair {p}")
            if isinstance(op, MeasureOp):
                if op.pair == self.keep_pair:
                    raise ValueError("surviving pair must not be measured")
                if op.basis not in BASES:
                    raise ValueError(f"unknown basis {op.basis}")
                measured.add(op.pair)
            elif isinstance(op, CnotOp):
                if op.control == op.target:
                    raise ValueError("CNOT needs two distinct pairs")
                edges.append((op.control, op.target))
            elif isinstance(op, PermuteOp):
                if op.perm not in PERMUTATIONS:
                    raise ValueError(f"unknown permutation {op.perm}")
            else:
                raise TypeError(f"unknown op {op}")
        expected = set(range(self.m)) - {self.keep_pair}
        if measured != expected:
            raise ValueError("every non-surviving pair must be measured exactly once")
        if self.m > 1:
            if len(edges) < self.m - 1 or not _spans(edges, self.m):
                raise ValueError("CNOTs must connect all pairs")
        if max_cnots is not None and len(edges) > max_cnots:
            raise ValueError(f"{len(edges)} CNOTs exceed the budget {max_cnots}")


def _spans(edges, m: int) -> bool:
    parent = list(range(m))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b in edges:
        parent[find(a)] = find(b)
    return len({find(p) for p in range(m)}) == 1


@dataclass(frozen=True)
class PurificationResult:
    fidelity: float
    success_probability: float
    genome: PurificationGenome
    state: Optional[DensityMatrix] = None
    degenerate: bool = False


def measurement_keep_rule(basis: str):
    """Predicate on (outcome_A, outcome_B) for keeping the run.

    X and Z keep coincident outcomes, Y keeps anti-coincident ones; the
    discarded branches are exactly the ones flagging the two error classes
    that basis can detect.
    """
    if basis in ("X", "Z"):
        return lambda a, b: a == b
    if basis == "Y":
        return lambda a, b: a != b
    raise ValueError(f"unknown basis {basis}")


def bennett_genome(m: int = 2) -> PurificationGenome:
    """The classic 2-to-1 recurrence: CNOT from the kept pair, Z-check."""
    if m != 2:
        raise ValueError("the recurrence step consumes exactly two pairs")
    return PurificationGenome(2, (CnotOp(0, 1), MeasureOp(1, "Z")), keep_pair=0)


def simulate_circuit(genome: PurificationGenome, rho_in, gate_error: float = 0.0) -> PurificationResult:
    """Run the circuit exactly and post-select on the keep rules.

    Returns the surviving pair's conditional state, its fidelity to |Phi+>,
    and the acceptance probability.  ``gate_error`` optionally adds a
    depolarizing channel on all four qubits of each bilateral CNOT.
    """
    genome.validate()
    data = _as_matrix(rho_in).copy()
    m = genome.m
    n_qubits = 2 * m
    if data.shape[0] != 4**m:
        raise ValueError(f"input covers {data.shape[0].bit_length() - 1} qubits, expected {n_qubits}")
    if gate_error:
        from .decoherence import depolarizing_kraus

        depol_ops = depolarizing_kraus(gate_error).operators
    for op in genome.ops:
        if isinstance(op, PermuteOp):
            gate, _ = PERMUTATIONS[op.perm]
            data = apply_unitary(data, gate, [2 * op.pair])
            data = apply_unitary(data, gate.conj(), [2 * op.pair + 1])
        elif isinstance(op, CnotOp):
            for side in (0, 1):
                qc, qt = 2 * op.control + side, 2 * op.target + side
                perm = _cnot_perm(n_qubits, qc, qt)
                data = data[np.ix_(perm, perm)]
                if gate_error:
                    data = apply_kraus_raw(data, depol_ops, [qc], n_qubits)
                    data = apply_kraus_raw(data, depol_ops, [qt], n_qubits)
        else:
            qa, qb = 2 * op.pair, 2 * op.pair + 1
            rot = _BASIS_ROTATION[op.basis]
            if rot is not None:
                # measured pair stays in the rotated frame; the later partial
                # trace is unitary-invariant per qubit, so nothing rotates back
                data = apply_unitary(data, rot, [qa])
                data = apply_unitary(data, rot, [qb])
            data = data * _measure_mask(n_qubits, qa, qb, op.basis)
    acceptance = float(np.real(np.trace(data)))
    if acceptance < 1e-12:
        return PurificationResult(0.0, 0.0, genome, None, degenerate=True)
    survivor = partial_trace(data, [2 * genome.keep_pair, 2 * genome.keep_pair + 1])
    survivor /= acceptance
    dm = DensityMatrix(survivor)
    return PurificationResult(fidelity(dm, PHI_PLUS), acceptance, genome, dm)


# ---------------------------------------------------------------------------
# Evolutionary search
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EAConfig:
    population_size: int = 40
    elite: int = 8
    mutation_prob: float = 0.1
    max_generations: int = 300
    convergence_window: int = 20
    convergence_delta: float = 1e-6
    max_cnots: Optional[int] = None  # None -> m - 1
    max_permutes: Optional[int] = None  # None -> 3 m
    tournament: int = 3


@dataclass(frozen=True)
class EvolutionResult:
    best: PurificationResult
    generations: int
    evaluations: int
    history: tuple


def _cnot_budget(m: int, cfg: EAConfig) -> int:
    return cfg.max_cnots if cfg.max_cnots is not None else max(m - 1, 0)


def _permute_budget(m: int, cfg: EAConfig) -> int:
    return cfg.max_permutes if cfg.max_permutes is not None else 3 * m


def _random_op(m: int, keep: int, rng: np.random.Generator) -> Op:
    kind = rng.integers(0, 3)
    if kind == 0 and m > 1:
        a, b = rng.choice(m, size=2, replace=False)
        return CnotOp(int(a), int(b))
    if kind == 1:
        return PermuteOp(int(rng.integers(0, m)), PERMUTATION_NAMES[rng.integers(0, len(PERMUTATION_NAMES))])
    candidates = [p for p in range(m) if p != keep]
    return MeasureOp(int(rng.choice(candidates)), BASES[rng.integers(0, 3)])


def _repair(ops, m: int, keep: int, cfg: EAConfig, rng: np.random.Generator) -> tuple:
    """Make an op list valid: drop use-after-measure, complete measurements,
    connect the CNOT graph, and trim budgets."""
    max_cnots = _cnot_budget(m, cfg)
    max_permutes = _permute_budget(m, cfg)
    measured = set()
    kept = []
    n_perm = 0
    for op in ops:
        if any(p in measured or not 0 <= p < m for p in op.pairs()):
            continue
        if isinstance(op, MeasureOp):
            if op.pair == keep:
                continue
            measured.add(op.pair)
            kept.append(op)
        elif isinstance(op, CnotOp):
            if op.control != op.target:
                kept.append(op)
        elif isinstance(op, PermuteOp):
            if n_perm < max_permutes:
                kept.append(op)
                n_perm += 1
    for pair in range(m):
        if pair != keep and pair not in measured:
            kept.append(MeasureOp(pair, BASES[rng.integers(0, 3)]))

    def first_measure_index(oplist, pairs):
        for i, op in enumerate(oplist):
            if isinstance(op, MeasureOp) and op.pair in pairs:
                return i
        return len(oplist)

    # connect components with extra CNOTs inserted before the endpoints die
    while m > 1:
        edges = [(o.control, o.target) for o in kept if isinstance(o, CnotOp)]
        if _spans(edges, m):
            break
        comp = _components(edges, m)
        a = int(rng.choice(sorted(comp[0])))
        b = int(rng.choice(sorted(comp[1])))
        if rng.integers(0, 2):
            a, b = b, a
        new = CnotOp(a, b)
        kept.insert(first_measure_index(kept, {a, b}), new)

    # trim redundant CNOTs beyond the budget where connectivity allows
    while m > 1:
        positions = [i for i, o in enumerate(kept) if isinstance(o, CnotOp)]
        if len(positions) <= max_cnots:
            break
        removed = False
        for i in rng.permutation(positions):
            rest = [
                (o.control, o.target)
                for k, o in enumerate(kept)
                if isinstance(o, CnotOp) and k != i
            ]
            if len(rest) >= m - 1 and _spans(rest, m):
                del kept[int(i)]
                removed = True
                break
        if not removed:
            break
    return tuple(kept)


def _components(edges, m: int):
    parent = list(range(m))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b in edges:
        parent[find(a)] = find(b)
    groups = {}
    for p in range(m):
        groups.setdefault(find(p), set()).add(p)
    return sorted(groups.values(), key=lambda s: min(s))


def random_genome(m: int, cfg: EAConfig, rng: np.random.Generator, keep: Optional[int] = None) -> PurificationGenome:
    keep = int(rng.integers(0, m)) if keep is None else keep
    ops = []
    if m > 1:
        pairs = list(rng.permutation(m))
        for i in range(1, m):
            other = pairs[rng.integers(0, i)]
            a, b = (int(pairs[i]), int(other))
            if rng.integers(0, 2):
                a, b = b, a
            ops.append(CnotOp(a, b))
    for _ in range(int(rng.integers(0, 2 * m + 1))):
        ops.append(PermuteOp(int(rng.integers(0, m)), PERMUTATION_NAMES[rng.integers(0, len(PERMUTATION_NAMES))]))
    for pair in range(m):
        if pair != keep:
            ops.append(MeasureOp(pair, BASES[rng.integers(0, 3)]))
    rng.shuffle(ops)
    genome = PurificationGenome(m, _repair(ops, m, keep, cfg, rng), keep)
    genome.validate(_cnot_budget(m, cfg))
    return genome


def _crossover(a: PurificationGenome, b: PurificationGenome, cfg: EAConfig, rng: np.random.Generator) -> PurificationGenome:
    keep = a.keep_pair if rng.integers(0, 2) else b.keep_pair
    i = int(rng.integers(0, len(a.ops) + 1))
    j = int(rng.integers(0, len(b.ops) + 1))
    ops = a.ops[:i] + b.ops[j:]
    return PurificationGenome(a.m, _repair(ops, a.m, keep, cfg, rng), keep)


def _mutate(g: PurificationGenome, cfg: EAConfig, rng: np.random.Generator) -> PurificationGenome:
    ops = list(g.ops)
    changed = False
    for i in range(len(ops)):
        if rng.random() < cfg.mutation_prob:
            ops[i] = _random_op(g.m, g.keep_pair, rng)
            changed = True
    keep = g.keep_pair
    if rng.random() < cfg.mutation_prob / 2 and g.m > 1:
        keep = int(rng.integers(0, g.m))
        changed = True
    if not changed:
        return g
    return PurificationGenome(g.m, _repair(ops, g.m, keep, cfg, rng), keep)


def evolve(m: int, rho_in, cfg: Optional[EAConfig] = None, seed: int = 0) -> EvolutionResult:
    """Search purification circuits for the given input register state.

    Deterministic under a fixed seed.  Elites survive unchanged, so the best
    fidelity is non-decreasing across generations; the loop stops when it
    has not improved by ``convergence_delta`` over ``convergence_window``
    generations or at the generation budget.
    """
    cfg = cfg or EAConfig()
    if cfg.population_size < 2 or cfg.max_generations < 1:
        raise ValueError("population must be >= 2 and generations >= 1")
    data = _as_matrix(rho_in)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    cache: dict = {}
    evaluations = 0

    def fitness(genome: PurificationGenome) -> PurificationResult:
        nonlocal evaluations
        key = (genome.ops, genome.keep_pair)
        if key not in cache:
            cache[key] = simulate_circuit(genome, data)
            evaluations += 1
        return cache[key]

    population = [random_genome(m, cfg, rng) for _ in range(cfg.population_size)]
    history = []
    best: Optional[PurificationResult] = None
    stall = 0
    generations = 0
    for gen in range(cfg.max_generations):
        generations = gen + 1
        scored = sorted(
            ((fitness(g), g) for g in population),
            key=lambda t: (-t[0].fidelity, repr(t[1].ops)),
        )
        top = scored[0][0]
        if best is None or top.fidelity > best.fidelity + cfg.convergence_delta:
            best = top if best is None or top.fidelity > best.fidelity else best
            stall = 0
        else:
            if top.fidelity > best.fidelity:
                best = top
            stall += 1
        history.append(best.fidelity)
        if stall >= cfg.convergence_window:
            break
        elites = [g for _, g in scored[: cfg.elite]]
        children = list(elites)
        while len(children) < cfg.population_size:
            contenders = [
                scored[int(rng.integers(0, len(scored)))] for _ in range(cfg.tournament)
            ]
            pa = max(contenders, key=lambda t: t[0].fidelity)[1]
            contenders = [
                scored[int(rng.integers(0, len(scored)))] for _ in range(cfg.tournament)
            ]
            pb = max(contenders, key=lambda t: t[0].fidelity)[1]
            child = _crossover(pa, pb, cfg, rng)
            child = _mutate(child, cfg, rng)
            children.append(child)
        population = children
    return EvolutionResult(best, generations, evaluations, tuple(history))
