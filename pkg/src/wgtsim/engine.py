"""Distributed-optimization engine: update laws, runs, transcripts, replay.

Two update laws are implemented over a shared message-passing kernel.

Baseline tracking ("ab"): every agent mixes neighbor states with a
row-stochastic A_k, takes a step along its tracker with one common constant
alpha, and mixes trackers with a column-stochastic B_k plus the fresh
gradient increment. Trackers then conserve the exact sum of local gradients.

Weighted tracking ("wgt"): each agent first applies its own step size to its
tracker and then mixes (adapt-then-combine), while the gradient increments
entering the tracker are scaled by a vanishing sequence lambda_k. Trackers
conserve lambda_k times the gradient sum, which is what makes the on-channel
information dry up over time.

Every message placed on a channel during a run can be recorded into a
Transcript. Mixing accumulates per-edge contributions in canonical edge
order, so replaying a transcript through the same kernel reproduces the
recorded trajectory bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import monitor
from .errors import ConfigError, DivergenceError
from .graph import DirectedGraph
from .objective import ObjectiveEnsemble
from .weights import WeightSchedule, phi_static

__all__ = [
    "LambdaSchedule",
    "ConstantLambda",
    "StepSizes",
    "NetworkState",
    "Transcript",
    "Scenario",
    "RunReport",
    "ab_step",
    "wgt_step",
    "run",
    "replay",
]

MODES = ("ab", "wgt")


@dataclass(frozen=True)
class LambdaSchedule:
    """Vanishing gradient weights lambda_k = 1 / (k^e + m).

    Positive and nonincreasing for any e > 0, m >= 0; the running sum
    diverges exactly when e <= 1, which is the regime the convergence
    theory needs.
    """

    e: float
    m: float = 0.0

    def __post_init__(self):
        if not self.e > 0.0:
            raise ValueError(f"decay exponent must be positive, got e={self.e}")
        if self.m < 0.0:
            raise ValueError(f"offset must be >= 0, got m={self.m}")

    def value(self, k: int) -> float:
        return 1.0 / (float(k) ** self.e + self.m)

    @property
    def sum_diverges(self) -> bool:
        return self.e <= 1.0

    @property
    def decays(self) -> bool:
        return True

    def describe(self) -> str:
        return f"1/(k^{self.e:g} + {self.m:g})"


@dataclass(frozen=True)
class ConstantLambda:
    """Constant gradient weight, for experiments only.

    Does not vanish, so the privacy mechanism is disabled and the
    diminishing-weight convergence theory does not cover it.
    """

    c: float

    def __post_init__(self):
        if not self.c > 0.0:
            raise ValueError(f"constant weight must be positive, got {self.c}")

    def value(self, k: int) -> float:
        return self.c

    @property
    def sum_diverges(self) -> bool:
        return True

    @property
    def decays(self) -> bool:
        return False

    def describe(self) -> str:
        return f"constant {self.c:g} (non-vanishing; outside the convergence theory)"


@dataclass(frozen=True)
class StepSizes:
    """Per-agent step sizes; alpha_check is the largest one."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size < 1:
            raise ValueError("step sizes must be a non-empty 1-d array")
        if np.any(v <= 0.0):
            raise ValueError("step sizes must be positive")
        object.__setattr__(self, "values", v)

    @classmethod
    def homogeneous(cls, alpha: float, n: int) -> "StepSizes":
        return cls(np.full(n, float(alpha)))

    @property
    def alpha_check(self) -> float:
        return float(self.values.max())

    @property
    def is_homogeneous(self) -> bool:
        return bool(np.all(self.values == self.values[0]))


@dataclass
class NetworkState:
    """Stacked agent states at iteration k: row i of x / y belongs to agent i+1."""

    k: int
    x: np.ndarray  # (n, p)
    y: np.ndarray  # (n, p)


@dataclass
class Transcript:
    """Everything that crossed a channel during a run.

    For iteration k (1-based) and edge index e, x_msgs[k-1, e] is the
    x-channel payload sent along edges[e] and y_msgs[k-1, e] the tracker
    payload, already scaled by the sender's column weight. Self-weighted
    tracker terms never appear because they never leave the agent.
    """

    mode: str
    n: int
    p: int
    edges: tuple[tuple[int, int], ...]
    x_msgs: np.ndarray  # (K, E, p)
    y_msgs: np.ndarray  # (K, E, p)

    @property
    def K(self) -> int:
        return self.x_msgs.shape[0]

    def out_edge_indices(self, i: int) -> np.ndarray:
        self._check_agent(i)
        return np.array([e for e, (a, b) in enumerate(self.edges) if a == i], dtype=np.intp)

    def in_edge_indices(self, i: int) -> np.ndarray:
        self._check_agent(i)
        return np.array([e for e, (a, b) in enumerate(self.edges) if b == i], dtype=np.intp)

    def _check_agent(self, i: int) -> None:
        if not (1 <= i <= self.n):
            raise ValueError(f"agent id {i} outside 1..{self.n}")


@dataclass
class Scenario:
    """A fully constructed experiment: who talks to whom, about what."""

    graph: DirectedGraph
    weights: WeightSchedule
    ensemble: ObjectiveEnsemble
    steps: StepSizes
    lam: LambdaSchedule | ConstantLambda | None = None
    init_seed: int = 0

    def __post_init__(self):
        if self.weights.graph is not self.graph and self.weights.graph != self.graph:
            raise ConfigError("weight schedule was built for a different graph")
        if self.ensemble.n != self.graph.n:
            raise ConfigError(
                f"ensemble has {self.ensemble.n} agents, graph has {self.graph.n}"
            )
        if self.steps.values.size != self.graph.n:
            raise ConfigError(
                f"{self.steps.values.size} step sizes for {self.graph.n} agents"
            )

    def initial_x(self) -> np.ndarray:
        """Seeded i.i.d. uniform start in [0, 1]^(n x p)."""
        rng = np.random.default_rng(self.init_seed)
        return rng.uniform(size=(self.graph.n, self.ensemble.p))


@dataclass
class RunReport:
    """Per-iteration metrics plus summary data for a finished run.

    Row t corresponds to iteration k = t + 1; a K-step run has K + 1 rows,
    the first describing the initial state. residuals are squared distances
    to the consensus optimum, normalized by the initial one.
    """

    mode: str
    K: int
    n: int
    p: int
    xbar_weighting: str  # "phi" or "uniform"
    threshold: float
    ks: np.ndarray
    residuals: np.ndarray
    consensus_errors: np.ndarray
    tracking_errors: np.ndarray
    lambdas: np.ndarray
    conservation_residuals: np.ndarray
    grad_norms: np.ndarray
    x_star: np.ndarray
    pis: np.ndarray  # (K+1, n)
    final_state: NetworkState
    info: dict = field(default_factory=dict)
    states: tuple[np.ndarray, np.ndarray] | None = None  # (xs, ys), if recorded

    def iterations_to_threshold(self) -> int | None:
        hit = np.nonzero(self.residuals <= self.threshold)[0]
        return int(self.ks[hit[0]]) if hit.size else None

    def summary(self) -> dict:
        its = self.iterations_to_threshold()
        return {
            "mode": self.mode,
            "iterations_run": self.K,
            "terminal_residual": float(self.residuals[-1]),
            "terminal_consensus_error": float(self.consensus_errors[-1]),
            "terminal_tracking_error": float(self.tracking_errors[-1]),
            "residual_threshold": self.threshold,
            "iterations_to_threshold": its,
            "converged": its is not None,
            "xbar_weighting": self.xbar_weighting,
        }


def _edge_arrays(graph: DirectedGraph) -> tuple[np.ndarray, np.ndarray]:
    return graph.edge_index_arrays()


def _edges_from_matrix(B: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Recover canonical (src, dst) edge arrays from B's off-diagonal pattern."""
    rows, cols = np.nonzero(B)
    pairs = sorted((int(c), int(r)) for r, c in zip(rows, cols) if r != c)
    src = np.array([a for a, b in pairs], dtype=np.intp)
    dst = np.array([b for a, b in pairs], dtype=np.intp)
    return src, dst


def _accumulate(own: np.ndarray, dst: np.ndarray, msgs: np.ndarray) -> np.ndarray:
    """Add per-edge messages onto receiver rows, in edge order.

    np.add.at applies the additions sequentially in index order, which pins
    the floating-point summation order; replay relies on that.
    """
    np.add.at(own, dst, msgs)
    return own


def _step(
    mode: str,
    x: np.ndarray,
    y: np.ndarray,
    g_prev: np.ndarray,
    A: np.ndarray,
    B: np.ndarray,
    src: np.ndarray,
    dst: np.ndarray,
    alphas: np.ndarray,
    lam,
    k: int,
    ensemble: ObjectiveEnsemble,
):
    """One synchronous iteration; returns new (x, y, grad) and the messages."""
    a_edge = A[dst, src][:, None]
    if mode == "wgt":
        combined = x - alphas[:, None] * y
        x_msgs = combined[src]
        x_next = _accumulate(np.diag(A)[:, None] * combined, dst, a_edge * x_msgs)
    else:
        x_msgs = x[src]
        x_next = _accumulate(np.diag(A)[:, None] * x, dst, a_edge * x_msgs)
        x_next = x_next - alphas[0] * y
    y_msgs = B[dst, src][:, None] * y[src]
    y_mix = _accumulate(np.diag(B)[:, None] * y, dst, y_msgs)
    g_next = ensemble.gradients(x_next)
    if mode == "wgt":
        y_next = y_mix + lam.value(k + 1) * g_next - lam.value(k) * g_prev
    else:
        y_next = y_mix + g_next - g_prev
    return x_next, y_next, g_next, x_msgs, y_msgs


def _replay_step(
    mode: str,
    x: np.ndarray,
    y: np.ndarray,
    g_prev: np.ndarray,
    A: np.ndarray,
    B: np.ndarray,
    src: np.ndarray,
    dst: np.ndarray,
    alphas: np.ndarray,
    lam,
    k: int,
    ensemble: ObjectiveEnsemble,
    x_msgs: np.ndarray,
    y_msgs: np.ndarray,
):
    """Same arithmetic as _step, but messages come from a transcript."""
    a_edge = A[dst, src][:, None]
    if mode == "wgt":
        combined = x - alphas[:, None] * y
        x_next = _accumulate(np.diag(A)[:, None] * combined, dst, a_edge * x_msgs)
    else:
        x_next = _accumulate(np.diag(A)[:, None] * x, dst, a_edge * x_msgs)
        x_next = x_next - alphas[0] * y
    y_mix = _accumulate(np.diag(B)[:, None] * y, dst, y_msgs)
    g_next = ensemble.gradients(x_next)
    if mode == "wgt":
        y_next = y_mix + lam.value(k + 1) * g_next - lam.value(k) * g_prev
    else:
        y_next = y_mix + g_next - g_prev
    return x_next, y_next, g_next


def _normalize_steps(alpha, n: int) -> StepSizes:
    if isinstance(alpha, StepSizes):
        return alpha
    arr = np.asarray(alpha, dtype=float)
    if arr.ndim == 0:
        return StepSizes.homogeneous(float(arr), n)
    return StepSizes(arr)


def ab_step(
    state: NetworkState,
    A_k: np.ndarray,
    B_k: np.ndarray,
    alpha: float,
    ensemble: ObjectiveEnsemble,
) -> NetworkState:
    """One baseline-tracking iteration with a common constant step size.

    The channel structure is inferred from B_k's off-diagonal pattern.
    """
    if not np.isscalar(alpha) and np.asarray(alpha).ndim != 0:
        raise ValueError("baseline tracking uses one common scalar step size")
    src, dst = _edges_from_matrix(B_k)
    alphas = np.full(state.x.shape[0], float(alpha))
    g_prev = ensemble.gradients(state.x)
    x2, y2, _, _, _ = _step(
        "ab", state.x, state.y, g_prev, A_k, B_k, src, dst, alphas, None, state.k, ensemble
    )
    return NetworkState(state.k + 1, x2, y2)


def wgt_step(
    state: NetworkState,
    A_k: np.ndarray,
    B_k: np.ndarray,
    steps,
    lam,
    ensemble: ObjectiveEnsemble,
) -> NetworkState:
    """One weighted-tracking iteration with per-agent step sizes.

    lam must expose value(k); the gradient increment uses lam at k and k+1,
    and a schedule that increases between the two is rejected.
    """
    if lam.value(state.k + 1) > lam.value(state.k):
        raise ValueError("gradient-weight schedule must be nonincreasing")
    src, dst = _edges_from_matrix(B_k)
    alphas = _normalize_steps(steps, state.x.shape[0]).values
    g_prev = ensemble.gradients(state.x)
    x2, y2, _, _, _ = _step(
        "wgt", state.x, state.y, g_prev, A_k, B_k, src, dst, alphas, lam, state.k, ensemble
    )
    return NetworkState(state.k + 1, x2, y2)


def run(
    scenario: Scenario,
    mode: str,
    K: int,
    *,
    record_transcript: bool = True,
    record_states: bool = False,
    residual_threshold: float = 1e-6,
    divergence_cap: float = 1e12,
    stop_when_below: float | None = None,
) -> tuple[RunReport, Transcript | None]:
    """Execute K synchronous iterations and collect per-iteration metrics.

    Returns (report, transcript); the transcript is None when recording is
    disabled (long runs: messages cost K * E * 2 * p floats). The report has
    one row per visited iterate including the initial state: K + 1 rows,
    fewer if stop_when_below is set and the residual crosses it first. A
    non-finite or cap-exceeding residual aborts with DivergenceError.
    """
    if mode not in MODES:
        raise ValueError(f"mode {mode!r} not in {MODES}")
    if K < 0:
        raise ValueError(f"iteration count must be >= 0, got {K}")
    lam = scenario.lam
    if mode == "wgt" and lam is None:
        raise ConfigError("weighted tracking needs a gradient-weight schedule")
    if mode == "ab" and not scenario.steps.is_homogeneous:
        raise ConfigError("baseline tracking uses one common constant step size")
    ens = scenario.ensemble
    ws = scenario.weights
    n, p = ens.n, ens.p
    src, dst = _edge_arrays(scenario.graph)
    E = src.size
    alphas = scenario.steps.values

    x = scenario.initial_x()
    g = ens.gradients(x)
    y = (lam.value(1) * g) if mode == "wgt" else g.copy()
    x_star = ens.global_optimum()

    if ws.mode == "static":
        phi = phi_static(ws.matrices_at(1)[0])
        weighting = "phi"
    else:
        phi = None
        weighting = "uniform"

    ks = np.arange(1, K + 2)
    residuals = np.empty(K + 1)
    consensus = np.empty(K + 1)
    tracking = np.empty(K + 1)
    lambdas = np.empty(K + 1)
    conservation = np.empty(K + 1)
    grad_norms = np.empty(K + 1)
    pis = np.empty((K + 1, n))

    x_msgs = np.empty((K, E, p)) if record_transcript else None
    y_msgs = np.empty((K, E, p)) if record_transcript else None
    xs = np.empty((K + 1, n, p)) if record_states else None
    ys = np.empty((K + 1, n, p)) if record_states else None

    pi = np.full(n, 1.0 / n)
    init_dist = float(np.linalg.norm(x - x_star) ** 2)
    norm_by = init_dist if init_dist > 0.0 else 1.0

    def fill_row(t: int, k: int) -> float:
        res = float(np.linalg.norm(x - x_star) ** 2) / norm_by
        mv = monitor.metric_vector(NetworkState(k, x, y), x_star, phi, pi)
        w = lam.value(k) if mode == "wgt" else 1.0
        residuals[t] = res
        consensus[t] = mv.s2
        tracking[t] = mv.s3
        lambdas[t] = w
        conservation[t] = float(np.linalg.norm(y.sum(axis=0) - w * g.sum(axis=0)))
        grad_norms[t] = float(np.linalg.norm(g))
        pis[t] = pi
        if record_states:
            xs[t] = x
            ys[t] = y
        return res

    K_run = K
    fill_row(0, 1)
    for k in range(1, K + 1):
        A, B = ws.matrices_at(k)
        x, y, g, xm, ym = _step(mode, x, y, g, A, B, src, dst, alphas, lam, k, ens)
        if record_transcript:
            x_msgs[k - 1] = xm
            y_msgs[k - 1] = ym
        pi = B @ pi
        res = fill_row(k, k + 1)
        if not np.isfinite(res) or res > divergence_cap:
            raise DivergenceError(k + 1, res)
        if stop_when_below is not None and res <= stop_when_below:
            K_run = k
            break

    if K_run < K:
        rows = K_run + 1
        ks = ks[:rows]
        residuals = residuals[:rows]
        consensus = consensus[:rows]
        tracking = tracking[:rows]
        lambdas = lambdas[:rows]
        conservation = conservation[:rows]
        grad_norms = grad_norms[:rows]
        pis = pis[:rows]
        if record_transcript:
            x_msgs = x_msgs[:K_run]
            y_msgs = y_msgs[:K_run]
        if record_states:
            xs = xs[:rows]
            ys = ys[:rows]

    report = RunReport(
        mode=mode,
        K=K_run,
        n=n,
        p=p,
        xbar_weighting=weighting,
        threshold=residual_threshold,
        ks=ks,
        residuals=residuals,
        consensus_errors=consensus,
        tracking_errors=tracking,
        lambdas=lambdas,
        conservation_residuals=conservation,
        grad_norms=grad_norms,
        x_star=x_star,
        pis=pis,
        final_state=NetworkState(K_run + 1, x, y),
        info={
            "mode": mode,
            "n": n,
            "p": p,
            "weight_mode": ws.mode,
            "alpha": [float(a) for a in alphas],
            "lambda": lam.describe() if (mode == "wgt" and lam is not None) else "1 (constant)",
            "init_seed": scenario.init_seed,
        },
        states=(xs, ys) if record_states else None,
    )
    transcript = None
    if record_transcript:
        transcript = Transcript(
            mode=mode, n=n, p=p, edges=scenario.graph.edges, x_msgs=x_msgs, y_msgs=y_msgs
        )
    return report, transcript


def replay(scenario: Scenario, mode: str, transcript: Transcript) -> tuple[np.ndarray, np.ndarray]:
    """Rebuild the full state trajectory from a transcript.

    Each agent is advanced using only its own state, its own weights and
    gradients, and the recorded incoming messages. The result is bit-exact
    against the recording run because the kernel and summation order are
    identical. Returns (xs, ys) of shape (K + 1, n, p).
    """
    if transcript.mode != mode:
        raise ValueError(f"transcript was recorded in mode {transcript.mode!r}")
    if transcript.edges != scenario.graph.edges:
        raise ValueError("transcript edges do not match the scenario graph")
    ens = scenario.ensemble
    lam = scenario.lam
    if mode == "wgt" and lam is None:
        raise ConfigError("weighted tracking needs a gradient-weight schedule")
    src, dst = _edge_arrays(scenario.graph)
    K = transcript.K
    n, p = ens.n, ens.p
    xs = np.empty((K + 1, n, p))
    ys = np.empty((K + 1, n, p))
    x = scenario.initial_x()
    g = ens.gradients(x)
    y = (lam.value(1) * g) if mode == "wgt" else g.copy()
    xs[0], ys[0] = x, y
    alphas = scenario.steps.values
    for k in range(1, K + 1):
        A, B = scenario.weights.matrices_at(k)
        x, y, g = _replay_step(
            mode, x, y, g, A, B, src, dst, alphas, lam, k, ens,
            transcript.x_msgs[k - 1], transcript.y_msgs[k - 1],
        )
        xs[k], ys[k] = x, y
    return xs, ys
