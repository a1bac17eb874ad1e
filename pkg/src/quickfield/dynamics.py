"""Cellular-automaton movement coupled to the static and dynamic fields.

Each one-second tick recomputes the dynamic field from the current
occupancy, then visits the active agents in a fresh random order. An agent
picks a destination among the cells it can reach within ``speed`` steps
with probability proportional to

    exp(-k_S * S_static(c)) * exp(-k_Sdyn * S_dyn(c))

and jumps there if the cell is still free. Agents standing on a destination
cell at the end of the tick leave the simulation.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .fields import PotentialField, compute_static, s_dyn_array
from .geometry import Cell, CellKind, ExitLabel, Neighborhood, Scenario, neighbors

SPEED_MEAN = 3.5
SPEED_SD = 1.0
SPEED_MIN = 1
SPEED_MAX = 4


class StuckAgent(RuntimeError):
    """No candidate cell, not even the agent's own, has a finite potential."""


@dataclass(frozen=True)
class ModelParams:
    k_S: float = 1.0
    k_Sdyn: float = 1.0
    s_add: float = 10.0
    max_time: int = 3600

    def __post_init__(self):
        if self.k_S < 0 or self.k_Sdyn < 0:
            raise ValueError("coupling constants must be non-negative")
        if self.s_add < 1:
            raise ValueError(f"s_add must be >= 1, got {self.s_add}")
        if self.max_time < 0:
            raise ValueError("max_time must be non-negative")

    def with_(self, **changes) -> "ModelParams":
        return replace(self, **changes)


@dataclass
class Agent:
    id: int
    position: Cell
    speed: int
    exit_time: int | None = None
    exit_taken: ExitLabel | None = None

    @property
    def active(self) -> bool:
        return self.exit_time is None


def quantize_speed(raw: float) -> int:
    """Round half up to whole cells/s, then clamp to [1, 4]."""
    return int(min(SPEED_MAX, max(SPEED_MIN, math.floor(raw + 0.5))))


def sample_speed(rng: np.random.Generator) -> int:
    return quantize_speed(rng.normal(SPEED_MEAN, SPEED_SD))


@dataclass
class SimulationState:
    """Mutable run state. Agent data lives in parallel arrays indexed by id."""

    scenario: Scenario
    params: ModelParams
    rng: np.random.Generator
    static_field: PotentialField
    s_dyn: PotentialField
    pos_x: np.ndarray
    pos_y: np.ndarray
    speed: np.ndarray
    exit_time: np.ndarray  # -1 while active
    exit_label: np.ndarray  # 0 while active
    occ: np.ndarray  # agent id per cell, -1 if empty
    clock: int = 0
    exit_order: list = field(default_factory=list)

    @property
    def n_agents(self) -> int:
        return self.speed.shape[0]

    @property
    def active(self) -> np.ndarray:
        return self.exit_time < 0

    @property
    def n_active(self) -> int:
        return int(self.active.sum())

    @property
    def n_exited(self) -> int:
        return self.n_agents - self.n_active

    def occupancy(self) -> np.ndarray:
        return self.occ >= 0

    def agent(self, i: int) -> Agent:
        t = int(self.exit_time[i])
        lab = int(self.exit_label[i])
        return Agent(i, (int(self.pos_x[i]), int(self.pos_y[i])), int(self.speed[i]),
                     None if t < 0 else t, ExitLabel(lab) if lab else None)

    @property
    def agents(self) -> list[Agent]:
        return [self.agent(i) for i in range(self.n_agents)]

    def copy(self) -> "SimulationState":
        rng = np.random.Generator(type(self.rng.bit_generator)())
        rng.bit_generator.state = self.rng.bit_generator.state
        return replace(self, rng=rng, pos_x=self.pos_x.copy(), pos_y=self.pos_y.copy(),
                       speed=self.speed.copy(), exit_time=self.exit_time.copy(),
                       exit_label=self.exit_label.copy(), occ=self.occ.copy(),
                       exit_order=list(self.exit_order))

    def same_as(self, other: "SimulationState") -> bool:
        return (self.clock == other.clock
                and np.array_equal(self.pos_x, other.pos_x)
                and np.array_equal(self.pos_y, other.pos_y)
                and np.array_equal(self.speed, other.speed)
                and np.array_equal(self.exit_time, other.exit_time)
                and np.array_equal(self.exit_label, other.exit_label)
                and np.array_equal(self.occ, other.occ)
                and self.s_dyn == other.s_dyn
                and self.rng.bit_generator.state == other.rng.bit_generator.state)


def init_state(scenario: Scenario, params: ModelParams | None = None,
               seed: int = 0) -> SimulationState:
    """Place agents row-major over the start region and draw their speeds."""
    params = params or ModelParams()
    rng = np.random.default_rng(seed)
    n = scenario.agent_count
    cells = scenario.start_region[:n]
    pos_x = np.array([c[0] for c in cells], dtype=np.int64)
    pos_y = np.array([c[1] for c in cells], dtype=np.int64)
    raw = rng.normal(SPEED_MEAN, SPEED_SD, size=n)
    speed = np.clip(np.floor(raw + 0.5), SPEED_MIN, SPEED_MAX).astype(np.int64)
    occ = np.full(scenario.grid.shape, -1, dtype=np.int64)
    occ[pos_y, pos_x] = np.arange(n)
    static = compute_static(scenario.grid)
    return SimulationState(
        scenario=scenario, params=params, rng=rng, static_field=static,
        s_dyn=PotentialField(np.zeros(scenario.grid.shape)),
        pos_x=pos_x, pos_y=pos_y, speed=speed,
        exit_time=np.full(n, -1, dtype=np.int64), exit_label=np.zeros(n, dtype=np.int8),
        occ=occ)


def _refresh_s_dyn(state: SimulationState) -> None:
    p = state.params
    if p.k_Sdyn == 0:
        # k_Sdyn * S_dyn vanishes whatever the field holds; skip both fills.
        return
    state.s_dyn = PotentialField(s_dyn_array(
        state.scenario.grid.cells, state.occupancy(), state.static_field.values, p.s_add))


def _remove_arrivals(state: SimulationState) -> None:
    grid = state.scenario.grid.cells
    active = np.flatnonzero(state.active)
    on_dest = active[grid[state.pos_y[active], state.pos_x[active]] == CellKind.DESTINATION]
    if on_dest.size == 0:
        return
    labels = state.scenario.label_array()
    state.exit_time[on_dest] = state.clock + 1
    state.exit_label[on_dest] = labels[state.pos_y[on_dest], state.pos_x[on_dest]]
    state.occ[state.pos_y[on_dest], state.pos_x[on_dest]] = -1
    state.exit_order.extend(int(i) for i in on_dest)


def step(state: SimulationState) -> SimulationState:
    """Advance ``state`` by one tick in place and return it."""
    # Agents already standing on a destination (only possible in hand-built
    # states) leave without moving.
    _remove_arrivals(state)
    _refresh_s_dyn(state)
    active = np.flatnonzero(state.active)
    order = active[state.rng.permutation(active.size)]
    draws = state.rng.random(active.size)
    _kernels.move_agents(
        state.scenario.grid.cells, state.occ, state.static_field.values, state.s_dyn.values,
        state.pos_x, state.pos_y, state.speed, order, draws,
        float(state.params.k_S), float(state.params.k_Sdyn))
    _remove_arrivals(state)
    state.clock += 1
    return state


def advance(state: SimulationState, until: int | None = None) -> SimulationState:
    """Step until egress completes, ``max_time`` or the clock reaches ``until``."""
    stop = state.params.max_time if until is None else min(until, state.params.max_time)
    while state.clock < stop and state.n_active > 0:
        step(state)
    return state


# --- single-agent view (reference semantics, plain Python) ----------------

@dataclass(frozen=True)
class TransitionDistribution:
    """Candidate cells with their probabilities.

    ``weights`` are the unnormalised weights, shifted so the most likely
    candidate has weight 1; ``normalizer`` is ``1 / sum(weights)``.
    """

    candidates: tuple[tuple[Cell, float], ...]
    normalizer: float
    weights: tuple[float, ...] = ()

    @property
    def cells(self) -> list[Cell]:
        return [c for c, _ in self.candidates]

    @property
    def probabilities(self) -> list[float]:
        return [p for _, p in self.candidates]

    def sample(self, u: float) -> Cell:
        """Inverse-CDF draw for ``u`` in [0, 1), walking cells in order."""
        return self.candidates[pick_index(self.weights, u)][0]


def pick_index(weights, u: float) -> int:
    total = sum(weights)
    threshold = u * total
    acc = 0.0
    for i, w in enumerate(weights):
        acc += w
        if threshold < acc:
            return i
    return len(weights) - 1


def candidate_cells(state: SimulationState, agent: Agent | int) -> list[Cell]:
    """Cells within ``speed`` Moore steps over non-wall cells, free or own.

    Occupied cells on the way do not block; only the target must be free.
    """
    if isinstance(agent, int):
        agent = state.agent(agent)
    grid = state.scenario.grid
    start = agent.position
    depth = {start: 0}
    queue = deque([start])
    while queue:
        cell = queue.popleft()
        if depth[cell] == agent.speed:
            continue
        for nb in neighbors(cell, grid, Neighborhood.MOORE):
            if nb not in depth:
                depth[nb] = depth[cell] + 1
                queue.append(nb)
    out = [c for c in depth if c == start or state.occ[c[1], c[0]] < 0]
    return sorted(out, key=lambda c: (c[1], c[0]))


def transition_probabilities(candidates, static_field: PotentialField,
                             s_dyn: PotentialField | None,
                             params: ModelParams) -> TransitionDistribution:
    """Normalised selection probabilities over ``candidates``.

    Cells with infinite static value are dropped. Raises :class:`StuckAgent`
    if none remain.
    """
    cells = [c for c in candidates if math.isfinite(static_field[c])]
    if not cells:
        raise StuckAgent("no candidate with a finite potential")
    energies = []
    for c in cells:
        dyn = s_dyn[c] if s_dyn is not None else 0.0
        energies.append(params.k_S * static_field[c] + params.k_Sdyn * dyn)
    best = min(energies)
    weights = [math.exp(best - e) for e in energies]
    total = 0.0
    for w in weights:
        total += w
    norm = 1.0 / total
    return TransitionDistribution(tuple((c, w * norm) for c, w in zip(cells, weights)), norm,
                                  tuple(weights))


# --- whole runs -----------------------------------------------------------

@dataclass(frozen=True)
class RunResult:
    seed: int
    T: float
    T_i: float | None
    right_exit_count: int
    left_exit_count: int
    completed: bool
    agent_count: int = 0
    agents: tuple[Agent, ...] = ()

    def trace_rows(self):
        """Per-agent rows: id, speed, exit_time, exit_taken."""
        for a in self.agents:
            yield (a.id, a.speed, "" if a.exit_time is None else a.exit_time,
                   "" if a.exit_taken is None else a.exit_taken.name.lower())


def summarize(state: SimulationState, seed: int, keep_agents: bool = False) -> RunResult:
    exited = state.exit_time[state.exit_time >= 0]
    labels = state.exit_label
    return RunResult(
        seed=seed,
        T=float(exited.max()) if exited.size else 0.0,
        T_i=float(exited.mean()) if exited.size else None,
        right_exit_count=int((labels == ExitLabel.RIGHT).sum()),
        left_exit_count=int((labels == ExitLabel.LEFT).sum()),
        completed=state.n_active == 0,
        agent_count=state.n_agents,
        agents=tuple(state.agents) if keep_agents else (),
    )


def run(scenario: Scenario, params: ModelParams | None = None, seed: int = 0,
        keep_agents: bool = False) -> RunResult:
    state = advance(init_state(scenario, params, seed))
    return summarize(state, seed, keep_agents)
