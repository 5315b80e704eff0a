"""
Evolution engines.

  zeno         unitary drive step, projection, renormalization (conventional reading)
  generator    exact propagation under a Hermitian generator
  variational  per-step overlap maximization under a subspace constraint and a
               scheduled diagonal of one subsystem's reduced density matrix

All engines return a Trajectory of phase-normalized states on the grid
t_k = k dt, k = 0..round(T/dt).
"""
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from errors import (
    AnnihilationError,
    ConfigError,
    DegenerateOptimumError,
    DimensionError,
    InfeasibleError,
    SectorError,
)
from particle_statistics import (
    DRIVE_SENSE,
    SIGMA_Y,
    TwoParticleSpace,
    not_gate_closed_form,
    pair_drive,
    single_drive,
    triplet_closed_form,
)
from schemas import DivergenceRecord, DriveSpec, EngineConfig, EngineKind, EngineRun
from tensor_core import (
    Hamiltonian,
    StateVector,
    Subspace,
    kron,
    mat_exp,
)

logger = logging.getLogger(__name__)

ANNIHILATION_NORM = 1e-12
PRECONDITION_TOL = 1e-8
NODE_TOL = 1e-12
EDGE_TOL = 1e-14

Reference = Callable[[float], StateVector]


@dataclass(frozen=True)
class DiagonalTarget:
    """Scheduled populations (cos^2, sin^2) of phi(t) = theta0 + omega t on one subsystem."""

    subsystem: int
    theta0: float
    omega: float

    @classmethod
    def for_drive(cls, subsystem: int, theta0: float, drive_omega: float) -> "DiagonalTarget":
        """Schedule traced by a sigma_y drive of frequency drive_omega."""
        return cls(subsystem, theta0, DRIVE_SENSE * drive_omega)

    def angle(self, t: float) -> float:
        return self.theta0 + self.omega * t

    def amplitudes(self, t: float) -> Tuple[float, float]:
        phi = self.angle(t)
        return math.cos(phi), math.sin(phi)

    def schedule(self, t: float) -> Tuple[float, float]:
        c, s = self.amplitudes(t)
        return c * c, s * s


@dataclass(frozen=True)
class ObservableRecord:
    t: float
    diagonals: Tuple[np.ndarray, ...]
    energy: Optional[float]
    fidelity: Optional[float]


@dataclass(frozen=True, eq=False)
class Trajectory:
    engine: str
    times: np.ndarray
    states: List[StateVector]
    survival: np.ndarray
    observables: Tuple[ObservableRecord, ...] = field(default=())

    @property
    def initial(self) -> StateVector:
        return self.states[0]

    @property
    def final(self) -> StateVector:
        return self.states[-1]

    @property
    def dims(self):
        return self.states[0].dims

    @property
    def labels(self):
        return self.states[0].labels

    def with_observables(self, records: Sequence[ObservableRecord]) -> "Trajectory":
        return replace(self, observables=tuple(records))


def _grid(cfg: EngineConfig) -> np.ndarray:
    return cfg.dt * np.arange(cfg.n_steps + 1)


def _snapshot(psi: np.ndarray, like: StateVector) -> StateVector:
    return StateVector.from_amplitudes(psi, dims=like.dims, labels=like.labels, normalize=True)


def _check_dims(state0: StateVector, matrix: np.ndarray, what: str):
    if matrix.shape[0] != state0.dim:
        raise DimensionError(f"{what} has dimension {matrix.shape[0]}, state has {state0.dim}")


def evolve_generator(state0: StateVector, g: Hamiltonian, cfg: EngineConfig) -> Trajectory:
    _check_dims(state0, g.matrix, "generator")
    times = _grid(cfg)
    step = mat_exp(g, cfg.dt)
    psi = state0.amplitudes.copy()
    states = [state0]
    for _ in range(cfg.n_steps):
        psi = step @ psi
        states.append(_snapshot(psi, state0))
    logger.debug("generator run: %d steps of %r", cfg.n_steps, cfg.dt)
    return Trajectory(EngineKind.generator.value, times, states, np.ones(times.size))


def evolve_zeno(state0: StateVector, local_drive: Hamiltonian, proj: Subspace, cfg: EngineConfig) -> Trajectory:
    """Per step: psi <- P U(dt) psi, survival *= |P U psi|^2, renormalize."""
    _check_dims(state0, local_drive.matrix, "drive")
    _check_dims(state0, proj.projector, "projector")
    times = _grid(cfg)
    psi = proj.project(state0.amplitudes)
    retained = float(np.vdot(psi, psi).real)
    if math.sqrt(retained) <= 1e-9:
        raise AnnihilationError("initial state has no weight in the projected subspace", step=0, time=0.0)
    psi = psi / math.sqrt(retained)
    survival = [retained]
    states = [_snapshot(psi, state0)]
    step = mat_exp(local_drive, cfg.dt)
    for k in range(1, cfg.n_steps + 1):
        psi = proj.project(step @ psi)
        p = float(np.vdot(psi, psi).real)
        if math.sqrt(p) < ANNIHILATION_NORM:
            raise AnnihilationError("projection annihilated the state", step=k, time=float(times[k]))
        psi = psi / math.sqrt(p)
        survival.append(survival[-1] * p)
        states.append(_snapshot(psi, state0))
    logger.debug("zeno run: %d steps, survival %.12f", cfg.n_steps, survival[-1])
    return Trajectory(EngineKind.zeno.value, times, states, np.array(survival))


def _subsystem_values(dims: Sequence[int], subsystem: int, indices: np.ndarray) -> np.ndarray:
    return np.unravel_index(indices, tuple(dims))[subsystem]


class _GroupSolver:
    """
    Feasible set spanned by basis states: the overlap optimum rescales each
    driven-value group to its scheduled amplitude and keeps its shape and phases.
    A group's unit shape is fixed the first time it carries weight, so signed
    amplitudes pass through schedule nodes.
    """

    def __init__(self, dims, subsystem, support):
        values = _subsystem_values(dims, subsystem, support)
        self.groups = (support[values == 0], support[values == 1])
        self.shapes: List[Optional[np.ndarray]] = [None, None]

    def _shape(self, bit, psi, a_prev, phase_ref, k, t):
        if self.shapes[bit] is not None:
            return self.shapes[bit]
        members = self.groups[bit]
        old = psi[members]
        norm = float(np.linalg.norm(old))
        if norm > 0.0:
            shape = (-1.0 if a_prev < 0 else 1.0) * old / norm
        elif members.size == 1:
            shape = np.array([phase_ref], dtype=complex)
        else:
            raise DegenerateOptimumError(
                f"{members.size} feasible states with driven value {bit} and no prior weight", step=k, time=t
            )
        self.shapes[bit] = shape
        return shape

    def step(self, psi, prev_amps, new_amps, k, t):
        new = np.zeros_like(psi)
        lead = np.flatnonzero(np.abs(psi) > 1e-12)
        phase_ref = psi[lead[0]] / abs(psi[lead[0]]) if lead.size else 1.0
        for bit, members in enumerate(self.groups):
            a_new = new_amps[bit]
            if a_new == 0.0:
                continue
            if members.size == 0:
                if abs(a_new) <= 1e-15:
                    continue
                raise InfeasibleError(
                    f"no feasible state has driven value {bit}, schedule asks {a_new * a_new:.3e}", step=k, time=t
                )
            new[members] = a_new * self._shape(bit, psi, prev_amps[bit], phase_ref, k, t)
        return new / np.linalg.norm(new)


def _leaves_node(a_prev: float, a_new: float) -> bool:
    return a_prev * a_new < 0 or (abs(a_prev) <= NODE_TOL < abs(a_new))


class _SecularSolver:
    """
    Feasible subspace not aligned with the driven projector: maximize Re<guide|psi>
    subject to <psi|Pi_0|psi> = p0 via psi ~ (1 + gamma M)^-1 a, M the compressed Pi_0.

    The guide is the previous state. Populations cannot tell a schedule amplitude
    from its negative, so on a step that crosses or leaves a node the guide is the
    linear extrapolation 2 psi_k - psi_(k-1) of the last two states.
    """

    def __init__(self, dims, subsystem, basis):
        n = basis.shape[0]
        mask = (_subsystem_values(dims, subsystem, np.arange(n)) == 0).astype(float)
        self.basis = basis
        m = basis.conj().T @ (mask[:, None] * basis)
        self.m_vals, self.m_vecs = np.linalg.eigh((m + m.conj().T) / 2)
        self.m_vals = np.clip(self.m_vals, 0.0, 1.0)
        self.before: Optional[np.ndarray] = None

    def _guide(self, psi, prev_amps, new_amps, k, t):
        if not any(_leaves_node(a, b) for a, b in zip(prev_amps, new_amps)):
            return psi
        if self.before is None:
            raise DegenerateOptimumError("schedule leaves a node with no earlier state to follow", step=k, time=t)
        return 2.0 * psi - self.before

    def _solve(self, b, p0, k, t):
        weights = np.abs(b) ** 2
        m = self.m_vals
        m_max, m_min = float(m.max()), float(m.min())
        if p0 > m_max + NODE_TOL or p0 < m_min - NODE_TOL:
            raise InfeasibleError(
                f"schedule asks {p0:.3e} of driven value 0, feasible range is [{m_min:.3e}, {m_max:.3e}]",
                step=k,
                time=t,
            )
        if p0 >= m_max - EDGE_TOL or p0 <= m_min + EDGE_TOL:
            edge = m_max if p0 >= m_max - EDGE_TOL else m_min
            kept = np.where(np.abs(m - edge) <= NODE_TOL, b, 0.0)
            if np.linalg.norm(kept) <= 1e-12:
                raise DegenerateOptimumError("no weight on the eigenspace the schedule asks for", step=k, time=t)
            return kept

        def excess(gamma):
            q = 1.0 / (1.0 + gamma * m)
            w = weights * q * q
            return float(w @ m / w.sum()) - p0

        lo = -(1.0 - 1e-12) / m_max
        hi = 1.0
        if excess(lo) < 0:
            raise DegenerateOptimumError("schedule outside the reachable branch of the optimum", step=k, time=t)
        while excess(hi) > 0:
            hi *= 2.0
            if hi > 1e12:
                raise DegenerateOptimumError("schedule outside the reachable branch of the optimum", step=k, time=t)
        gamma = brentq(excess, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
        return b / (1.0 + gamma * m)

    def step(self, psi, prev_amps, new_amps, k, t):
        guide = self._guide(psi, prev_amps, new_amps, k, t)
        b = self.m_vecs.conj().T @ (self.basis.conj().T @ guide)
        coords = self.m_vecs @ self._solve(b, new_amps[0] ** 2, k, t)
        self.before = psi
        new = self.basis @ coords
        return new / np.linalg.norm(new)


def evolve_variational(state0: StateVector, target: DiagonalTarget, proj: Subspace, cfg: EngineConfig) -> Trajectory:
    """
    Per step, the unit vector closest to the previous state that lies in `proj`
    (when cfg.enforce_subspace) and gives the target subsystem the scheduled
    populations.
    """
    dims = state0.dims
    if not 0 <= target.subsystem < len(dims):
        raise DimensionError(f"subsystem {target.subsystem} out of range for dims {dims}")
    if dims[target.subsystem] != 2:
        raise DimensionError("the scheduled subsystem must be a qubit")
    _check_dims(state0, proj.projector, "projector")
    feasible = proj if cfg.enforce_subspace else Subspace.full(state0.dim)

    if cfg.enforce_subspace and not proj.contains(state0, PRECONDITION_TOL):
        raise SectorError("initial state is outside the constraint subspace")
    p0 = target.schedule(0.0)[0]
    if abs(state0.marginal(target.subsystem)[0] - p0) > PRECONDITION_TOL:
        raise ConfigError("initial state does not match the scheduled populations at t=0")

    if feasible.is_coordinate():
        solver = _GroupSolver(dims, target.subsystem, feasible.support())
    else:
        solver = _SecularSolver(dims, target.subsystem, feasible.basis)

    times = _grid(cfg)
    psi = state0.amplitudes.copy()
    states = [state0]
    prev = target.amplitudes(0.0)
    for k in range(1, cfg.n_steps + 1):
        t = float(times[k])
        amps = target.amplitudes(t)
        psi = solver.step(psi, prev, amps, k, t)
        prev = amps
        states.append(_snapshot(psi, state0))
    logger.debug("variational run: %d steps, %s solver", cfg.n_steps, type(solver).__name__)
    return Trajectory(EngineKind.variational.value, times, states, np.ones(times.size))


def observables(
    traj: Trajectory,
    h: Optional[Hamiltonian] = None,
    reference: Optional[Reference] = None,
) -> List[ObservableRecord]:
    """Per time: diagonals of every reduced density matrix, <h>, fidelity against reference(t)."""
    if h is not None:
        _check_dims(traj.initial, h.matrix, "observable")
    records = []
    for t, state in zip(traj.times, traj.states):
        diagonals = tuple(state.marginal(i) for i in range(len(state.dims)))
        energy = h.expectation(state) if h is not None else None
        fidelity = state.fidelity(reference(float(t))) if reference is not None else None
        records.append(ObservableRecord(float(t), diagonals, energy, fidelity))
    return records


def trajectory_error(traj: Trajectory, reference: Reference) -> float:
    """Largest phase-aligned distance to the reference over the grid."""
    return max(state.phase_distance(reference(float(t))) for t, state in zip(traj.times, traj.states))


def convergence_order(dts: Sequence[float], errors: Sequence[float], floor: float = 1e-13) -> Optional[float]:
    """Slope of log(error) against log(dt); None when the errors sit at round-off."""
    points = [(dt, e) for dt, e in zip(dts, errors) if e > floor]
    if len(points) < 2:
        return None
    x = np.log([p[0] for p in points])
    y = np.log([p[1] for p in points])
    return float(np.polyfit(x, y, 1)[0])


def local_drive_leakage(theta0: float, omega: float, t: float) -> float:
    """Weight on |00>, |11> after driving qubit r alone, without projection."""
    psi = not_gate_closed_form(theta0, 0.0, 0.0).amplitudes
    u = mat_exp(omega * kron(SIGMA_Y, np.eye(2)), t)
    out = u @ psi
    return float(abs(out[0]) ** 2 + abs(out[3]) ** 2)


@dataclass(frozen=True, eq=False)
class PolarizerResult:
    final_state: StateVector
    survival: float
    trajectory: Trajectory


def polarizer_drag(n_steps: int, total_angle: float) -> PolarizerResult:
    """
    |0> through n_steps polarizers, the k-th at angle k total_angle / n_steps.
    Survival is the product of the per-filter transmission probabilities.
    """
    if n_steps < 1:
        raise ConfigError("the polarizer needs at least one filter")
    psi = np.array([1.0, 0.0], dtype=complex)
    angles = total_angle * np.arange(n_steps + 1) / n_steps
    survival = [1.0]
    states = [StateVector.from_amplitudes(psi)]
    for k in range(1, n_steps + 1):
        axis = np.array([math.cos(angles[k]), math.sin(angles[k])], dtype=complex)
        amp = np.vdot(axis, psi)
        p = float(abs(amp) ** 2)
        survival.append(survival[-1] * p)
        psi = axis * (amp / abs(amp)) if abs(amp) > 0 else axis
        states.append(StateVector.from_amplitudes(psi, normalize=True))
    if survival[-1] < 1e-12:
        logger.info("polarizer with %d filters blocks the beam, survival %.3e", n_steps, survival[-1])
    traj = Trajectory("polarizer", angles, states, np.array(survival))
    return PolarizerResult(states[-1], survival[-1], traj)


# Divergence scenarios
NOT_GATE_SCENARIO = {"theta0": math.pi / 4, "T": math.pi / 2}
TRIPLET_SCENARIO = {"theta0": math.pi / 6, "T": 0.4}


@dataclass(frozen=True, eq=False)
class ScenarioSetup:
    """Everything the three engines need to run one scenario."""

    name: str
    state0: StateVector
    local_drive: Hamiltonian
    generator: Hamiltonian
    projector: Subspace
    target: DiagonalTarget
    reference: Reference


def not_gate_setup(theta0: float, omega: float) -> ScenarioSetup:
    from network import constrained_subspace, embed_drive, not_gate_network

    net = not_gate_network()
    return ScenarioSetup(
        name="not-gate",
        state0=not_gate_closed_form(theta0, 0.0, 0.0),
        local_drive=single_drive(DriveSpec(omega=omega, theta0=theta0, target=1)),
        generator=embed_drive(net, driven_qubit=0, omega=omega).generator,
        projector=constrained_subspace(net).subspace,
        target=DiagonalTarget.for_drive(0, theta0, omega),
        reference=lambda t: not_gate_closed_form(theta0, DRIVE_SENSE * omega, t),
    )


def triplet_setup(theta0: float, omega: float) -> ScenarioSetup:
    drive = pair_drive(omega)
    return ScenarioSetup(
        name="triplet",
        state0=triplet_closed_form(theta0, 0.0, 0.0),
        local_drive=drive,
        generator=drive,
        projector=TwoParticleSpace(2).symmetric_subspace(),
        target=DiagonalTarget.for_drive(0, theta0, omega),
        reference=lambda t: triplet_closed_form(theta0, DRIVE_SENSE * omega, t),
    )


def schedule_target_redundancy(theta0: float, omega: float, dt: float, T: float) -> float:
    """Largest distance between triplet runs scheduled on particle 1 and on particle 2."""
    setup = triplet_setup(theta0, omega)
    cfg = EngineConfig(dt=dt, T=T, omega=omega, engine=EngineKind.variational)
    first = evolve_variational(setup.state0, setup.target, setup.projector, cfg)
    second = evolve_variational(setup.state0, replace(setup.target, subsystem=1), setup.projector, cfg)
    return max(a.distance(b) for a, b in zip(first.states, second.states))


SCENARIOS = {"not-gate": not_gate_setup, "triplet": triplet_setup}


def divergence_report(
    scenario: str,
    dt: float = 1e-3,
    theta0: Optional[float] = None,
    T: Optional[float] = None,
    omega: float = 1.0,
) -> DivergenceRecord:
    """Run zeno, generator and variational on one setup and compare their endpoints."""
    if scenario not in SCENARIOS:
        raise ConfigError(f"unknown divergence scenario {scenario!r}; choose from {sorted(SCENARIOS)}")
    defaults = NOT_GATE_SCENARIO if scenario == "not-gate" else TRIPLET_SCENARIO
    theta0 = defaults["theta0"] if theta0 is None else theta0
    T = defaults["T"] if T is None else T
    setup = SCENARIOS[scenario](theta0, omega)
    cfg = EngineConfig(dt=dt, T=T, omega=omega)

    trajectories = {
        "zeno": evolve_zeno(setup.state0, setup.local_drive, setup.projector, cfg),
        "generator": evolve_generator(setup.state0, setup.generator, cfg),
        "variational": evolve_variational(setup.state0, setup.target, setup.projector, cfg),
    }
    runs = []
    for name, traj in trajectories.items():
        ref = setup.reference(float(traj.times[-1]))
        runs.append(
            EngineRun(
                engine=name,
                fidelity_to_reference=traj.final.fidelity(ref),
                fidelity_to_initial=traj.final.fidelity(setup.state0),
                survival=float(traj.survival[-1]),
            )
        )
    by_name = {r.engine: r for r in runs}
    record = DivergenceRecord(
        scenario=scenario,
        dt=dt,
        T=T,
        theta0=theta0,
        omega=omega,
        runs=runs,
        local_leakage=local_drive_leakage(theta0, omega, T) if scenario == "not-gate" else None,
        a_freezes=by_name["zeno"].fidelity_to_initial >= 1 - 1e-12,
        a_matches_b=trajectories["zeno"].final.phase_distance(trajectories["generator"].final) <= 1e-9,
        b_c_rotate=(
            by_name["generator"].fidelity_to_reference >= 1 - 1e-9
            and by_name["variational"].fidelity_to_reference >= 1 - 10 * dt
        ),
    )
    logger.info(
        "%s divergence: zeno frozen=%s, zeno matches generator=%s, generator/variational rotate=%s",
        scenario, record.a_freezes, record.a_matches_b, record.b_c_rotate,
    )
    return record
