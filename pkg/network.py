"""
Boolean constraint networks over qubits at desk scale.

Qubit 0 is the most significant bit of a computational-basis index, so the
assignment of index x reads left to right as q0 q1 ... q(n-1).
"""
import enum
import logging
import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ValidationError, field_validator, model_validator

from errors import (
    AmbiguousPairingError,
    ConfigError,
    InfeasibleError,
    NetworkParseError,
    OutputError,
    SizeLimitError,
)
from particle_statistics import DRIVE_SENSE
from schemas import DEFAULT_THETA0, EngineConfig, EngineKind, ExperimentRecord, ScalingRow
from tensor_core import Hamiltonian, StateVector, Subspace

logger = logging.getLogger(__name__)

MAX_QUBITS = 12
SUCCESS_THRESHOLD = 1 - 1e-6


class ElementKind(str, enum.Enum):
    NOT = "NOT"
    WIRE = "WIRE"
    PIN = "PIN"
    CUSTOM = "CUSTOM"


_FIXED_TABLES = {
    ElementKind.NOT: ((0, 1), (1, 0)),
    ElementKind.WIRE: ((0, 0), (1, 1)),
}


class ConstraintElement(BaseModel):
    kind: ElementKind
    qubits: Tuple[int, ...]
    allowed: Tuple[Tuple[int, ...], ...] = ()

    @field_validator('qubits')
    @classmethod
    def validate_qubits(cls, v):
        if not v:
            raise ValueError('an element needs at least one qubit')
        if any(q < 0 for q in v):
            raise ValueError('qubit ids must be >= 0')
        if len(set(v)) != len(v):
            raise ValueError('an element cannot use a qubit twice')
        return v

    @model_validator(mode='after')
    def validate_table(self):
        if self.kind in _FIXED_TABLES:
            if len(self.qubits) != 2:
                raise ValueError(f'{self.kind.value} acts on exactly two qubits')
            table = _FIXED_TABLES[self.kind]
            if self.allowed and tuple(sorted(set(self.allowed))) != table:
                raise ValueError(f'{self.kind.value} allows exactly {table}')
            self.allowed = table
        elif self.kind == ElementKind.PIN:
            if len(self.qubits) != 1:
                raise ValueError('PIN acts on exactly one qubit')
            if len(self.allowed) != 1:
                raise ValueError('PIN allows exactly one value')
        if not self.allowed:
            raise ValueError('allowed assignments cannot be empty')
        for row in self.allowed:
            if len(row) != len(self.qubits) or any(b not in (0, 1) for b in row):
                raise ValueError(f'assignment {row} does not fit qubits {self.qubits}')
        self.allowed = tuple(sorted(set(self.allowed)))
        return self

    @classmethod
    def not_gate(cls, a: int, b: int) -> "ConstraintElement":
        return cls(kind=ElementKind.NOT, qubits=(a, b))

    @classmethod
    def wire(cls, a: int, b: int) -> "ConstraintElement":
        return cls(kind=ElementKind.WIRE, qubits=(a, b))

    @classmethod
    def pin(cls, q: int, value: int) -> "ConstraintElement":
        return cls(kind=ElementKind.PIN, qubits=(q,), allowed=((value,),))

    @classmethod
    def custom(cls, qubits: Sequence[int], allowed: Iterable[Sequence[int]]) -> "ConstraintElement":
        return cls(kind=ElementKind.CUSTOM, qubits=tuple(qubits), allowed=tuple(tuple(r) for r in allowed))

    def describe(self) -> str:
        qubits = " ".join(f"q{q}" for q in self.qubits)
        if self.kind == ElementKind.PIN:
            return f"PIN {qubits} {self.allowed[0][0]}"
        if self.kind == ElementKind.CUSTOM:
            rows = " ".join("".join(map(str, r)) for r in self.allowed)
            return f"CUSTOM {qubits} : {rows}"
        return f"{self.kind.value} {qubits}"


class ConstraintNetwork(BaseModel):
    n_qubits: int
    elements: List[ConstraintElement] = []
    penalty_energy: float = 1.0

    @field_validator('n_qubits')
    @classmethod
    def validate_n_qubits(cls, v):
        if v < 1:
            raise ValueError('a network needs at least one qubit')
        return v

    @field_validator('penalty_energy')
    @classmethod
    def validate_penalty(cls, v):
        if not (math.isfinite(v) and v > 0):
            raise ValueError('penalty energy must be > 0')
        return v

    @model_validator(mode='after')
    def validate_qubit_ids(self):
        for element in self.elements:
            if max(element.qubits) >= self.n_qubits:
                raise ValueError(f'{element.describe()} uses a qubit outside 0..{self.n_qubits - 1}')
        return self

    @property
    def dim(self) -> int:
        return 2 ** self.n_qubits

    def without_pins_on(self, qubit: int) -> "ConstraintNetwork":
        kept = [e for e in self.elements if not (e.kind == ElementKind.PIN and e.qubits == (qubit,))]
        return self.model_copy(update={"elements": kept})

    def pinned_value(self, qubit: int) -> Optional[int]:
        for e in self.elements:
            if e.kind == ElementKind.PIN and e.qubits == (qubit,):
                return e.allowed[0][0]
        return None


def _check_size(net: ConstraintNetwork):
    if net.n_qubits > MAX_QUBITS:
        raise SizeLimitError(f"{net.n_qubits} qubits exceed the {MAX_QUBITS}-qubit limit")


def bitstring(x: int, n: int) -> str:
    return format(x, f"0{n}b")


def qubit_value(x: int, qubit: int, n: int) -> int:
    return (x >> (n - 1 - qubit)) & 1


def _bit_table(n: int) -> np.ndarray:
    idx = np.arange(2 ** n)
    shifts = n - 1 - np.arange(n)
    return (idx[:, None] >> shifts[None, :]) & 1


def violation_counts(net: ConstraintNetwork) -> np.ndarray:
    """Number of elements each assignment violates."""
    _check_size(net)
    bits = _bit_table(net.n_qubits)
    counts = np.zeros(net.dim, dtype=int)
    for element in net.elements:
        cols = bits[:, list(element.qubits)]
        weights = 1 << np.arange(len(element.qubits))[::-1]
        codes = cols @ weights
        allowed = [int(np.dot(row, weights)) for row in element.allowed]
        counts += ~np.isin(codes, allowed)
    return counts


class ConstrainedSpace(NamedTuple):
    subspace: Subspace
    assignments: Tuple[int, ...]
    n_qubits: int

    @property
    def satisfiable(self) -> bool:
        return self.subspace.rank > 0

    def bitstrings(self) -> List[str]:
        return [bitstring(x, self.n_qubits) for x in self.assignments]


def constrained_subspace(net: ConstraintNetwork) -> ConstrainedSpace:
    counts = violation_counts(net)
    sat = tuple(int(x) for x in np.flatnonzero(counts == 0))
    logger.debug("%d of %d assignments satisfy %d elements", len(sat), net.dim, len(net.elements))
    return ConstrainedSpace(Subspace.coordinate(net.dim, sat), sat, net.n_qubits)


def network_penalty_hamiltonian(net: ConstraintNetwork) -> Hamiltonian:
    """Diagonal; each assignment pays penalty_energy per violated element."""
    counts = violation_counts(net)
    return Hamiltonian(np.diag(net.penalty_energy * counts.astype(float)), (2,) * net.n_qubits, "H_net")


def not_chain(k: int, penalty_energy: float = 1.0) -> ConstraintNetwork:
    """k NOT gates in series on k+1 qubits."""
    if k < 1:
        raise ConfigError("a NOT chain needs at least one gate")
    if k + 1 > MAX_QUBITS:
        raise SizeLimitError(f"a chain of {k} gates needs {k + 1} qubits, limit is {MAX_QUBITS}")
    return ConstraintNetwork(
        n_qubits=k + 1,
        elements=[ConstraintElement.not_gate(i, i + 1) for i in range(k)],
        penalty_energy=penalty_energy,
    )


def not_gate_network(penalty_energy: float = 1.0) -> ConstraintNetwork:
    """Qubit r is q0, qubit s is q1."""
    return not_chain(1, penalty_energy)


# Network files
_QUBIT_TOKEN = re.compile(r"^q?(\d+)$", re.IGNORECASE)


def _parse_qubit(token: str, line_no: int) -> int:
    m = _QUBIT_TOKEN.match(token)
    if not m:
        raise NetworkParseError(f"bad qubit id {token!r}", line_no)
    return int(m.group(1))


def _parse_bit(token: str, line_no: int) -> int:
    if token not in ("0", "1"):
        raise NetworkParseError(f"bad bit value {token!r}", line_no)
    return int(token)


def _parse_element(keyword: str, args: List[str], line_no: int) -> ConstraintElement:
    if keyword in ("NOT", "WIRE"):
        if len(args) != 2:
            raise NetworkParseError(f"{keyword} takes two qubits", line_no)
        a, b = (_parse_qubit(t, line_no) for t in args)
        return ConstraintElement.not_gate(a, b) if keyword == "NOT" else ConstraintElement.wire(a, b)
    if keyword == "PIN":
        if len(args) != 2:
            raise NetworkParseError("PIN takes a qubit and a value", line_no)
        return ConstraintElement.pin(_parse_qubit(args[0], line_no), _parse_bit(args[1], line_no))
    if keyword == "CUSTOM":
        if ":" not in args:
            raise NetworkParseError("CUSTOM needs ':' between qubits and allowed rows", line_no)
        split = args.index(":")
        qubits = [_parse_qubit(t, line_no) for t in args[:split]]
        rows = args[split + 1:]
        if not qubits or not rows:
            raise NetworkParseError("CUSTOM needs qubits and at least one allowed row", line_no)
        allowed = []
        for row in rows:
            if len(row) != len(qubits):
                raise NetworkParseError(f"row {row!r} does not match {len(qubits)} qubits", line_no)
            allowed.append([_parse_bit(ch, line_no) for ch in row])
        return ConstraintElement.custom(qubits, allowed)
    raise NetworkParseError(f"unknown element {keyword!r}", line_no)


def parse_network(text: str) -> ConstraintNetwork:
    """
    One element per line: ``NOT qa qb``, ``WIRE qa qb``, ``PIN qa v`` or
    ``CUSTOM qa qb ... : bits bits ...``; optional ``QUBITS n`` and
    ``PENALTY e``. ``#`` starts a comment.
    """
    elements = []
    element_lines = []
    n_qubits = None
    penalty = 1.0
    lines = text.splitlines()
    for line_no, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].replace(":", " : ").strip()
        if not line:
            continue
        keyword, *args = line.split()
        keyword = keyword.upper()
        if keyword == "QUBITS":
            if len(args) != 1 or not args[0].isdigit() or int(args[0]) < 1:
                raise NetworkParseError("QUBITS takes a positive count", line_no)
            n_qubits = int(args[0])
            continue
        if keyword == "PENALTY":
            try:
                penalty = float(args[0]) if len(args) == 1 else float("nan")
            except ValueError:
                penalty = float("nan")
            if not (math.isfinite(penalty) and penalty > 0):
                raise NetworkParseError("PENALTY takes a positive energy", line_no)
            continue
        try:
            elements.append(_parse_element(keyword, args, line_no))
        except ValidationError as e:
            raise NetworkParseError(e.errors()[0]["msg"], line_no) from e
        element_lines.append(line_no)

    last_line = max(1, len(lines))
    if n_qubits is None:
        if not elements:
            raise NetworkParseError("network has no elements and no QUBITS line", last_line)
        n_qubits = max(max(e.qubits) for e in elements) + 1
    for element, line_no in zip(elements, element_lines):
        if max(element.qubits) >= n_qubits:
            raise NetworkParseError(f"qubit id outside 0..{n_qubits - 1}", line_no)
    if n_qubits > MAX_QUBITS:
        raise NetworkParseError(f"{n_qubits} qubits exceed the {MAX_QUBITS}-qubit limit", last_line)
    return ConstraintNetwork(n_qubits=n_qubits, elements=elements, penalty_energy=penalty)


def load_network(path: str) -> ConstraintNetwork:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise OutputError(f"cannot read network file {path}: {e}") from e
    return parse_network(text)


def format_network(net: ConstraintNetwork) -> str:
    lines = [f"QUBITS {net.n_qubits}", f"PENALTY {net.penalty_energy!r}"]
    lines.extend(e.describe() for e in net.elements)
    return "\n".join(lines) + "\n"


# Drive embedding
@dataclass(frozen=True, eq=False)
class EmbeddedDrive:
    driven_qubit: int
    omega: float
    n_qubits: int
    pairs: Tuple[Tuple[int, int], ...]  # (driven bit 0, driven bit 1)
    unmatched: Tuple[int, ...]
    generator: Hamiltonian

    @property
    def total(self) -> bool:
        return not self.unmatched

    def pair_bitstrings(self) -> List[Tuple[str, str]]:
        return [(bitstring(x, self.n_qubits), bitstring(y, self.n_qubits)) for x, y in self.pairs]

    def unmatched_bitstrings(self) -> List[str]:
        return [bitstring(x, self.n_qubits) for x in self.unmatched]


def _nearest(x: int, candidates: Sequence[int], n: int) -> int:
    distances = [bin(x ^ y).count("1") for y in candidates]
    best = min(distances)
    winners = [y for y, d in zip(candidates, distances) if d == best]
    if len(winners) > 1:
        raise AmbiguousPairingError(
            f"{bitstring(x, n)} has {len(winners)} partners at distance {best}: "
            + ", ".join(bitstring(y, n) for y in winners)
        )
    return winners[0]


def embed_drive(net: ConstraintNetwork, driven_qubit: int, omega: float) -> EmbeddedDrive:
    """
    Transport omega sigma_y on one qubit onto the constrained subspace.

    Each satisfying assignment is paired with its unique nearest (Hamming)
    satisfying assignment of opposite driven bit; only mutual pairs are kept.
    """
    if not 0 <= driven_qubit < net.n_qubits:
        raise ConfigError(f"driven qubit {driven_qubit} outside 0..{net.n_qubits - 1}")
    space = constrained_subspace(net)
    if not space.satisfiable:
        raise InfeasibleError("network is unsatisfiable, nothing to drive")
    n = net.n_qubits
    zeros = [x for x in space.assignments if qubit_value(x, driven_qubit, n) == 0]
    ones = [x for x in space.assignments if qubit_value(x, driven_qubit, n) == 1]
    partner = {}
    if zeros and ones:
        for x in zeros:
            partner[x] = _nearest(x, ones, n)
        for y in ones:
            partner[y] = _nearest(y, zeros, n)
    pairs = tuple((x, partner[x]) for x in zeros if x in partner and partner[partner[x]] == x)
    matched = {v for pair in pairs for v in pair}
    unmatched = tuple(x for x in space.assignments if x not in matched)
    if unmatched:
        logger.warning(
            "drive on q%d leaves %d assignments unmatched: %s",
            driven_qubit, len(unmatched), ", ".join(bitstring(x, n) for x in unmatched),
        )
    g = np.zeros((net.dim, net.dim), dtype=complex)
    for x, y in pairs:
        g[x, y] = 1j * omega
        g[y, x] = -1j * omega
    return EmbeddedDrive(
        driven_qubit=driven_qubit,
        omega=omega,
        n_qubits=n,
        pairs=pairs,
        unmatched=unmatched,
        generator=Hamiltonian(g, (2,) * n, f"G[q{driven_qubit}]"),
    )


def initial_preparation(net: ConstraintNetwork, driven_qubit: int, theta0: float = DEFAULT_THETA0) -> StateVector:
    """
    Real superposition of every satisfying assignment: weight cos(theta0) spread
    uniformly over driven bit 0, sin(theta0) over driven bit 1.
    """
    space = constrained_subspace(net)
    if not space.satisfiable:
        raise InfeasibleError("network is unsatisfiable, no initial state")
    n = net.n_qubits
    groups = {0: [], 1: []}
    for x in space.assignments:
        groups[qubit_value(x, driven_qubit, n)].append(x)
    weights = {0: math.cos(theta0), 1: math.sin(theta0)}
    psi = np.zeros(net.dim, dtype=complex)
    for bit, members in groups.items():
        for x in members:
            psi[x] = weights[bit] / math.sqrt(len(members))
    if np.linalg.norm(psi) < 1e-12:
        raise InfeasibleError(f"mixing angle {theta0!r} puts all weight on an empty group")
    return StateVector.from_amplitudes(psi, dims=(2,) * n, names=[f"q{i}" for i in range(n)], normalize=True)


@dataclass(frozen=True, eq=False)
class DriveOutputResult:
    record: ExperimentRecord
    trajectory: Optional[object] = None
    success: Optional[np.ndarray] = None
    violation: Optional[np.ndarray] = None
    energy: Optional[np.ndarray] = None


def run_drive_output(
    net: ConstraintNetwork,
    cfg: EngineConfig,
    driven_qubit: Optional[int] = None,
    target_bit: Optional[int] = None,
    theta0: float = DEFAULT_THETA0,
) -> DriveOutputResult:
    """Drive the output qubit toward its target value and watch the constraints hold."""
    import dynamics

    driven = net.n_qubits - 1 if driven_qubit is None else driven_qubit
    if not 0 <= driven < net.n_qubits:
        raise ConfigError(f"driven qubit {driven} outside 0..{net.n_qubits - 1}")
    if target_bit is None:
        target_bit = net.pinned_value(driven)
        if target_bit is None:
            target_bit = 1
    if not 0 < theta0 < math.pi / 2:
        raise ConfigError("mixing angle must lie strictly between 0 and pi/2")
    free = net.without_pins_on(driven)
    space = constrained_subspace(free)
    if not space.satisfiable:
        raise InfeasibleError("network is unsatisfiable even without the output PIN")

    base = dict(driven_qubit=driven, target_bit=target_bit, engine=cfg.engine.value, theta0=theta0, dt=cfg.dt)
    n = free.n_qubits
    if not any(qubit_value(x, driven, n) == target_bit for x in space.assignments):
        logger.info("no satisfying assignment has q%d=%d", driven, target_bit)
        return DriveOutputResult(ExperimentRecord(status="unsatisfiable-with-pin", **base))

    omega = abs(cfg.omega)
    travel = (math.pi / 2 - theta0) if target_bit == 1 else theta0
    arrival = travel / omega
    steps = max(1, int(round(arrival / cfg.dt)))
    dt = arrival / steps
    if abs(dt - cfg.dt) > 1e-9 * cfg.dt:
        logger.warning("dt adjusted from %r to %r so the grid ends at arrival %r", cfg.dt, dt, arrival)
    drive_omega = DRIVE_SENSE * omega * (1 if target_bit == 1 else -1)
    run_cfg = cfg.model_copy(update={"dt": dt, "T": arrival, "omega": drive_omega, "drive_target": driven})

    state0 = initial_preparation(free, driven, theta0)
    base["dt"] = dt
    try:
        drive = embed_drive(free, driven, drive_omega)
    except AmbiguousPairingError:
        if cfg.engine == EngineKind.generator:
            raise
        logger.info("drive on q%d has tied partners, unmatched assignments not recorded", driven)
        drive = None
    if cfg.engine == EngineKind.generator:
        if not drive.total:
            raise AmbiguousPairingError(
                "generator engine needs a total pairing; unmatched: " + ", ".join(drive.unmatched_bitstrings())
            )
        traj = dynamics.evolve_generator(state0, drive.generator, run_cfg)
    elif cfg.engine == EngineKind.variational:
        target = dynamics.DiagonalTarget.for_drive(driven, theta0, drive_omega)
        try:
            traj = dynamics.evolve_variational(state0, target, space.subspace, run_cfg)
        except InfeasibleError:
            return DriveOutputResult(ExperimentRecord(status="unsatisfiable-with-pin", **base))
    else:
        raise ConfigError("the drive-output experiment runs the generator or variational engine")

    h_net = network_penalty_hamiltonian(free)
    violated = np.flatnonzero(violation_counts(free) > 0)
    success = np.array([s.marginal(driven)[target_bit] for s in traj.states])
    violation = np.array([float(s.probabilities()[violated].sum()) for s in traj.states])
    energy = np.array([h_net.expectation(s) for s in traj.states])
    hits = np.flatnonzero(success >= SUCCESS_THRESHOLD)
    t_star = float(traj.times[hits[0]]) if hits.size else None
    record = ExperimentRecord(
        status="ok" if t_star is not None else "not-reached",
        arrival_time=arrival,
        t_star=t_star,
        terminal_success=float(success[-1]),
        max_violation=float(violation.max()),
        max_energy=float(np.abs(energy).max()),
        unmatched=drive.unmatched_bitstrings() if drive is not None else [],
        **base,
    )
    return DriveOutputResult(record, traj, success, violation, energy)


def drive_output_experiment(
    net: ConstraintNetwork,
    cfg: EngineConfig,
    driven_qubit: Optional[int] = None,
    target_bit: Optional[int] = None,
    theta0: float = DEFAULT_THETA0,
) -> ExperimentRecord:
    return run_drive_output(net, cfg, driven_qubit, target_bit, theta0).record


def scaling_experiment(
    k_values: Sequence[int],
    cfg: EngineConfig,
    theta0: float = DEFAULT_THETA0,
    workers: int = 1,
) -> List[ScalingRow]:
    """Drive the output of NOT chains of each length; rows come back in k order."""
    for k in k_values:
        if k + 1 > MAX_QUBITS:
            raise SizeLimitError(f"a chain of {k} gates needs {k + 1} qubits, limit is {MAX_QUBITS}")

    def one(k):
        record = drive_output_experiment(not_chain(k), cfg, theta0=theta0)
        return ScalingRow(
            k=k,
            status=record.status,
            t_star=record.t_star,
            terminal_success=record.terminal_success,
            max_energy=record.max_energy,
            max_violation=record.max_violation,
        )

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        rows = list(pool.map(one, k_values))
    return rows


def t_star_spread(rows: Sequence[ScalingRow]) -> Optional[float]:
    times = [r.t_star for r in rows if r.t_star is not None]
    if len(times) != len(rows) or not times:
        return None
    return max(times) - min(times)
