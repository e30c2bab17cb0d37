"""Attacker models evaluated against recorded message transcripts.

Two threat models are covered. An eavesdropper reads every message on every
channel and sums an agent's net tracker outflow over time; under baseline
tracking that running sum converges to the agent's private gradient at the
optimum, while under weighted tracking it converges to zero. An
honest-but-curious neighbor additionally knows the update protocol and can
stack the update equations of a victim whose entire neighborhood it
controls; the audits build those stacked linear systems and measure how
underdetermined they are.

Everything here is read-only over transcripts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import Transcript

__all__ = [
    "z_stream",
    "AttackReport",
    "infer_gradient",
    "TwoAgentObservations",
    "AuditReport",
    "audit_state_system",
    "audit_gradient_system",
]

_TRUE_GRADIENT_FLOOR = 1e-12


def z_stream(transcript: Transcript, i: int) -> np.ndarray:
    """Net tracker outflow of agent i per iteration, shape (K, p).

    Computed purely from on-channel tracker messages: the sum of what i
    sent minus the sum of what i received. Self-weighted tracker terms
    never cross a channel and so never enter.
    """
    if transcript.K < 1:
        raise ValueError("transcript is empty; nothing to observe")
    out_idx = transcript.out_edge_indices(i)
    in_idx = transcript.in_edge_indices(i)
    sent = transcript.y_msgs[:, out_idx, :].sum(axis=1)
    received = transcript.y_msgs[:, in_idx, :].sum(axis=1)
    return sent - received


@dataclass
class AttackReport:
    """Outcome of a transcript-based gradient-inference attempt.

    inferred_gradient is the attacker's estimate (the summed net outflow).
    conclusive reflects the attacker's own convergence detector: the run is
    only trusted if the last `window` iterations moved every message by
    less than the stabilization tolerance. relative_error compares against
    the victim's true gradient at its final iterate when that oracle is
    available; if the true gradient is numerically zero the error is
    reported in absolute terms and flagged.
    """

    target: int
    mode: str
    iterations: int
    inferred_gradient: np.ndarray
    conclusive: bool
    max_recent_message_delta: float
    stabilization_tol: float
    window: int
    true_gradient_at_final: np.ndarray | None = None
    relative_error: float | None = None
    error_is_absolute: bool = False

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "mode": self.mode,
            "iterations": self.iterations,
            "inferred_gradient": [float(v) for v in self.inferred_gradient],
            "inferred_norm": float(np.linalg.norm(self.inferred_gradient)),
            "conclusive": self.conclusive,
            "max_recent_message_delta": self.max_recent_message_delta,
            "stabilization_tol": self.stabilization_tol,
            "window": self.window,
            "true_gradient_at_final": (
                None
                if self.true_gradient_at_final is None
                else [float(v) for v in self.true_gradient_at_final]
            ),
            "relative_error": self.relative_error,
            "error_is_absolute": self.error_is_absolute,
        }


def infer_gradient(
    transcript: Transcript,
    target: int,
    mode: str | None = None,
    *,
    final_state=None,
    ensemble=None,
    stabilization_tol: float = 1e-10,
    window: int = 50,
) -> AttackReport:
    """Eavesdropper attack: sum agent `target`'s net tracker outflow.

    The attacker cannot see states, so convergence is judged from the
    channel itself: the attack is conclusive only when no message moved by
    more than stabilization_tol over the last `window` iterations. The
    tolerance is configurable because message deltas shrink much more
    slowly under a vanishing gradient-weight sequence than under baseline
    tracking.

    final_state and ensemble are evaluation-only oracles (the attacker has
    neither); when both are given the report carries the victim's true
    gradient at its final iterate and the error of the estimate.
    """
    if mode is None:
        mode = transcript.mode
    elif mode != transcript.mode:
        raise ValueError(
            f"requested mode {mode!r} but transcript was recorded in {transcript.mode!r}"
        )
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    K = transcript.K
    inferred = z_stream(transcript, target).sum(axis=0)

    if K >= 2:
        tail_x = transcript.x_msgs[-(window + 1):]
        tail_y = transcript.y_msgs[-(window + 1):]
        max_delta = max(
            float(np.abs(np.diff(tail_x, axis=0)).max()),
            float(np.abs(np.diff(tail_y, axis=0)).max()),
        )
    else:
        max_delta = float("inf")
    conclusive = K >= window + 1 and max_delta < stabilization_tol

    report = AttackReport(
        target=target,
        mode=mode,
        iterations=K,
        inferred_gradient=inferred,
        conclusive=conclusive,
        max_recent_message_delta=max_delta,
        stabilization_tol=stabilization_tol,
        window=window,
    )
    if final_state is not None and ensemble is not None:
        true_g = ensemble.gradients(final_state.x)[target - 1]
        diff = float(np.linalg.norm(inferred - true_g))
        true_norm = float(np.linalg.norm(true_g))
        report.true_gradient_at_final = true_g
        if true_norm < _TRUE_GRADIENT_FLOOR:
            report.relative_error = diff
            report.error_is_absolute = True
        else:
            report.relative_error = diff / true_norm
    return report


@dataclass(frozen=True)
class TwoAgentObservations:
    """What an attacker controlling a victim's whole neighborhood sees.

    In the worst-case reduction the victim (honest agent) exchanges
    messages with a single counterparty that is both an eavesdropper and a
    protocol-aware participant. Per iteration k the four observed vectors
    are the victim's outgoing state message (its state after applying its
    private step to its tracker), the attacker's own outgoing state
    message, and the two column-weighted tracker messages.
    """

    honest: int
    attacker: int
    K: int
    p: int
    x_from_honest: np.ndarray  # (K, p)
    x_from_attacker: np.ndarray  # (K, p)
    y_from_honest: np.ndarray  # (K, p)
    y_from_attacker: np.ndarray  # (K, p)

    @classmethod
    def from_transcript(
        cls, transcript: Transcript, honest: int, attacker: int
    ) -> "TwoAgentObservations":
        if transcript.mode != "wgt":
            raise ValueError(
                "the reduction models the weighted-tracking protocol; "
                f"transcript was recorded in mode {transcript.mode!r}"
            )
        if honest == attacker:
            raise ValueError("honest agent and attacker must differ")
        if transcript.K < 1:
            raise ValueError("transcript is empty; nothing to observe")
        edges = transcript.edges
        try:
            idx_ha = edges.index((honest, attacker))
            idx_ah = edges.index((attacker, honest))
        except ValueError:
            raise ValueError(
                f"transcript has no bidirectional channel between {honest} and {attacker}"
            ) from None
        touching = [e for e, (a, b) in enumerate(edges) if honest in (a, b)]
        if set(touching) != {idx_ha, idx_ah}:
            raise ValueError(
                f"agent {honest} has channels beyond agent {attacker}; "
                "the worst-case reduction needs the attacker to cover its whole neighborhood"
            )
        return cls(
            honest=honest,
            attacker=attacker,
            K=transcript.K,
            p=transcript.p,
            x_from_honest=transcript.x_msgs[:, idx_ha, :],
            x_from_attacker=transcript.x_msgs[:, idx_ah, :],
            y_from_honest=transcript.y_msgs[:, idx_ha, :],
            y_from_attacker=transcript.y_msgs[:, idx_ah, :],
        )


@dataclass
class AuditReport:
    """Size and rank accounting for one stacked attacker system.

    nullity is the dimension of the solution set of the stacked linear
    system (unknowns minus rank); any positive value means the attacker's
    data admits infinitely many consistent explanations. method records
    whether the rank came from the block structure alone ("structural") or
    from a rank computation on observed numbers ("numeric").
    consistency_residual, when set, is the max-norm defect of the true run
    values plugged into the system.
    """

    system: str
    K: int
    p: int
    equations: int
    unknowns: int
    rank: int
    nullity: int
    method: str
    consistency_residual: float | None = None

    def to_dict(self) -> dict:
        return {
            "system": self.system,
            "K": self.K,
            "p": self.p,
            "equations": self.equations,
            "unknowns": self.unknowns,
            "rank": self.rank,
            "nullity": self.nullity,
            "method": self.method,
            "consistency_residual": self.consistency_residual,
        }


def _state_system_matrices(
    K: int, p: int, obs: TwoAgentObservations
) -> tuple[np.ndarray, np.ndarray]:
    """Stacked system over unknowns [victim states 2..K, mixing weights 1..K-1]."""
    blocks = K - 1
    M = np.zeros((blocks * p, blocks * (p + 1)))
    rhs = np.empty(blocks * p)
    for k in range(1, blocks + 1):
        r = (k - 1) * p
        M[r : r + p, r : r + p] = np.eye(p)
        M[r : r + p, blocks * p + (k - 1)] = -(
            obs.x_from_attacker[k - 1] - obs.x_from_honest[k - 1]
        )
        rhs[r : r + p] = obs.x_from_honest[k - 1]
    return M, rhs


def audit_state_system(
    K: int,
    p: int,
    observations: TwoAgentObservations | None = None,
    truth: tuple[np.ndarray, np.ndarray] | None = None,
) -> AuditReport:
    """Audit the attacker's system for the victim's intermediate states.

    Over a K-iteration horizon the attacker relates each next state of the
    victim to observed state messages, with the victim's mixing weight per
    iteration unknown: (K-1)p equations in (K-1)(p+1) unknowns (the states
    at iterations 2..K plus K-1 weights). Each block carries an identity
    sub-block, so the rank is (K-1)p regardless of the observed numbers
    and the solution set has dimension at least K-1.

    With observations the rank is recomputed numerically from the actual
    stacked matrix. truth = (states, weights) — the victim's real states
    at iterations 2..K, shape (K-1, p), and its real mixing weights, shape
    (K-1,) — yields the consistency residual of the genuine trajectory.
    """
    if K < 2:
        raise ValueError(f"state audit needs K >= 2, got {K}")
    if p < 1:
        raise ValueError(f"dimension must be >= 1, got {p}")
    blocks = K - 1
    equations = blocks * p
    unknowns = blocks * (p + 1)
    if observations is None:
        if truth is not None:
            raise ValueError("a consistency check needs observations")
        return AuditReport(
            system="state",
            K=K,
            p=p,
            equations=equations,
            unknowns=unknowns,
            rank=equations,
            nullity=unknowns - equations,
            method="structural",
        )
    if observations.K < K or observations.p != p:
        raise ValueError(
            f"observations cover K={observations.K}, p={observations.p}; "
            f"audit needs K={K}, p={p}"
        )
    M, rhs = _state_system_matrices(K, p, observations)
    rank = int(np.linalg.matrix_rank(M))
    residual = None
    if truth is not None:
        states, weights = truth
        states = np.asarray(states, dtype=float)
        weights = np.asarray(weights, dtype=float)
        if states.shape != (blocks, p) or weights.shape != (blocks,):
            raise ValueError(
                f"truth shapes {states.shape}, {weights.shape}; "
                f"expected ({blocks}, {p}) and ({blocks},)"
            )
        u = np.concatenate([states.ravel(), weights])
        residual = float(np.abs(M @ u - rhs).max())
    return AuditReport(
        system="state",
        K=K,
        p=p,
        equations=equations,
        unknowns=unknowns,
        rank=rank,
        nullity=unknowns - rank,
        method="numeric",
        consistency_residual=residual,
    )


def _gradient_system_matrices(
    K: int, p: int, obs: TwoAgentObservations, lam, y_final: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Stacked system over unknowns [trackers 2..K, gradients 2..K+1].

    The tracker at iteration K+1 sits on the known side: a converged run
    pins it (the attacker takes it as zero; a consistency check passes the
    real value).
    """
    n_y = K - 1
    M = np.zeros((K * p, (n_y + K) * p))
    rhs = np.empty(K * p)

    def y_col(j: int) -> int:  # tracker at iteration j, 2 <= j <= K
        return (j - 2) * p

    def g_col(j: int) -> int:  # gradient at iteration j, 2 <= j <= K+1
        return (n_y + j - 2) * p

    eye = np.eye(p)
    for k in range(1, K + 1):
        r = (k - 1) * p
        c = obs.y_from_attacker[k - 1] - obs.y_from_honest[k - 1]
        if k >= 2:
            M[r : r + p, y_col(k) : y_col(k) + p] -= eye
            M[r : r + p, g_col(k) : g_col(k) + p] += lam.value(k) * eye
        M[r : r + p, g_col(k + 1) : g_col(k + 1) + p] -= lam.value(k + 1) * eye
        if k <= K - 1:
            M[r : r + p, y_col(k + 1) : y_col(k + 1) + p] += eye
            rhs[r : r + p] = c
        else:
            rhs[r : r + p] = c - y_final
    return M, rhs


def audit_gradient_system(
    K: int,
    p: int,
    observations: TwoAgentObservations | None = None,
    lam=None,
    y_final: np.ndarray | None = None,
    truth: tuple[np.ndarray, np.ndarray] | None = None,
) -> AuditReport:
    """Audit the attacker's system for the victim's gradients.

    Chaining the victim's tracker update over K iterations (with the
    initial tracker eliminated through its known scaling) gives Kp
    equations in (2K-1)p unknowns: the trackers at iterations 2..K and the
    gradients at iterations 2..K+1. Each block introduces a fresh unknown
    with an invertible coefficient, so the rank is Kp and the solution set
    has dimension at least (K-1)p.

    The numeric path needs observations, the gradient-weight schedule, and
    a value for the tracker at iteration K+1 (defaults to zero — what an
    attacker assumes of a converged run). truth = (trackers, gradients)
    with shapes (K-1, p) and (K, p) — the victim's real trackers at
    iterations 2..K and gradients at 2..K+1 — yields the consistency
    residual; pass the real final tracker as y_final to make the genuine
    trajectory exactly consistent.
    """
    if K < 1:
        raise ValueError(f"gradient audit needs K >= 1, got {K}")
    if p < 1:
        raise ValueError(f"dimension must be >= 1, got {p}")
    equations = K * p
    unknowns = (2 * K - 1) * p
    if observations is None:
        if truth is not None:
            raise ValueError("a consistency check needs observations")
        return AuditReport(
            system="gradient",
            K=K,
            p=p,
            equations=equations,
            unknowns=unknowns,
            rank=equations,
            nullity=unknowns - equations,
            method="structural",
        )
    if lam is None:
        raise ValueError("numeric gradient audit needs the gradient-weight schedule")
    if observations.K < K or observations.p != p:
        raise ValueError(
            f"observations cover K={observations.K}, p={observations.p}; "
            f"audit needs K={K}, p={p}"
        )
    if y_final is None:
        y_final = np.zeros(p)
    y_final = np.asarray(y_final, dtype=float)
    if y_final.shape != (p,):
        raise ValueError(f"final tracker has shape {y_final.shape}, expected ({p},)")
    M, rhs = _gradient_system_matrices(K, p, observations, lam, y_final)
    rank = int(np.linalg.matrix_rank(M))
    residual = None
    if truth is not None:
        trackers, gradients = truth
        trackers = np.asarray(trackers, dtype=float)
        gradients = np.asarray(gradients, dtype=float)
        if trackers.shape != (K - 1, p) or gradients.shape != (K, p):
            raise ValueError(
                f"truth shapes {trackers.shape}, {gradients.shape}; "
                f"expected ({K - 1}, {p}) and ({K}, {p})"
            )
        u = np.concatenate([trackers.ravel(), gradients.ravel()])
        residual = float(np.abs(M @ u - rhs).max())
    return AuditReport(
        system="gradient",
        K=K,
        p=p,
        equations=equations,
        unknowns=unknowns,
        rank=rank,
        nullity=unknowns - rank,
        method="numeric",
        consistency_residual=residual,
    )
