"""Convergence-theory diagnostics.

The analysis tracks a three-component error vector per iteration: distance
of the weighted mean to the optimum, consensus error, and tracker deviation
from its stationary profile. One iteration multiplies that vector by a
nonnegative 3x3 matrix (plus a forcing term fed by the decrement of the
gradient-weight sequence), so convergence questions reduce to spectral
questions about small matrices.

Matrix norms here are evaluated with spectral-norm surrogates and unit
norm-equivalence constants. That keeps every inequality a true statement
about Euclidean quantities at the price of slightly different constants
than any hand-constructed weighted norm would give.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .weights import WeightSchedule, phi_static

__all__ = [
    "MetricVector",
    "ContractionEstimates",
    "metric_vector",
    "error_propagation",
    "limit_propagation",
    "spectral_radius",
    "det_criterion",
    "admissibility_report",
    "AdmissibilityReport",
    "scalar_recursion_bounds",
]

FLAVORS = ("spectral_norm", "spectral_radius")


@dataclass(frozen=True)
class MetricVector:
    """(s1, s2, s3) at iteration k: optimality gap of the weighted mean,
    consensus error, and tracker deviation, all in Euclidean norms."""

    k: int
    s1: float
    s2: float
    s3: float
    weighting: str  # "phi" or "uniform"

    def as_array(self) -> np.ndarray:
        return np.array([self.s1, self.s2, self.s3])


def metric_vector(state, x_star: np.ndarray, phi: np.ndarray | None, pi_k: np.ndarray) -> MetricVector:
    """Evaluate the three error components for a network state.

    state needs attributes k, x, y with x, y of shape (n, p). phi=None falls
    back to the uniform average for the mean (the honest choice when no
    stationary left vector is available, e.g. time-varying weights).
    """
    x = state.x
    y = state.y
    n = x.shape[0]
    if phi is None:
        xbar = x.mean(axis=0)
        weighting = "uniform"
    else:
        xbar = phi @ x
        weighting = "phi"
    y_hat = y.sum(axis=0)
    s1 = float(np.linalg.norm(xbar - x_star))
    s2 = float(np.linalg.norm(x - np.outer(np.ones(n), xbar)))
    s3 = float(np.linalg.norm(y - np.outer(pi_k, y_hat)))
    return MetricVector(state.k, s1, s2, s3, weighting)


@dataclass(frozen=True)
class ContractionEstimates:
    """Per-iteration contraction and coupling quantities.

    sigma_A / sigma_B measure how strongly mixing shrinks disagreement,
    in the chosen flavor: the spectral norm of the deflated matrix (makes
    the propagation inequality a true Euclidean statement) or its spectral
    radius (always < 1 for admissible static matrices, but only an
    asymptotic contraction factor). delta_AB and delta_B2 are the
    norm-equivalence constants, both 1 under the surrogate convention.
    """

    k: int
    sigma_A: float
    sigma_B: float
    xi: float  # ||I - pi_{k+1} 1^T||
    phi_norm: float
    pi_norm: float
    A_norm: float
    A_minus_I_norm: float
    alpha_tilde: float  # phi^T diag(alpha) pi_k
    theta: float  # alpha_tilde / alpha_check
    alpha_check: float
    delta_AB: float = 1.0
    delta_B2: float = 1.0
    flavor: str = "spectral_norm"

    @classmethod
    def compute(
        cls,
        A: np.ndarray,
        B: np.ndarray,
        phi: np.ndarray,
        pi_k: np.ndarray,
        pi_next: np.ndarray,
        alphas: np.ndarray,
        k: int = 1,
        flavor: str = "spectral_norm",
        delta_AB: float = 1.0,
        delta_B2: float = 1.0,
    ) -> "ContractionEstimates":
        if flavor not in FLAVORS:
            raise ValueError(f"flavor {flavor!r} not in {FLAVORS}")
        n = A.shape[0]
        one = np.ones(n)
        A_defl = A - np.outer(one, phi)
        B_defl = B - np.outer(pi_k, one)
        if flavor == "spectral_norm":
            sigma_A = float(np.linalg.norm(A_defl, 2))
            sigma_B = float(np.linalg.norm(B_defl, 2))
        else:
            sigma_A = float(np.max(np.abs(np.linalg.eigvals(A_defl))))
            sigma_B = float(np.max(np.abs(np.linalg.eigvals(B_defl))))
        alphas = np.asarray(alphas, dtype=float)
        alpha_check = float(alphas.max())
        alpha_tilde = float(phi @ (alphas * pi_k))
        return cls(
            k=k,
            sigma_A=sigma_A,
            sigma_B=sigma_B,
            xi=float(np.linalg.norm(np.eye(n) - np.outer(pi_next, one), 2)),
            phi_norm=float(np.linalg.norm(phi)),
            pi_norm=float(np.linalg.norm(pi_k)),
            A_norm=float(np.linalg.norm(A, 2)),
            A_minus_I_norm=float(np.linalg.norm(A - np.eye(n), 2)),
            alpha_tilde=alpha_tilde,
            theta=alpha_tilde / alpha_check,
            alpha_check=alpha_check,
            delta_AB=delta_AB,
            delta_B2=delta_B2,
            flavor=flavor,
        )


def error_propagation(
    est: ContractionEstimates,
    lam_k: float,
    lam_next: float,
    L: float,
    mu_hat: float,
    L_hat: float,
    n: int,
    grad_opt_norm: float,
) -> tuple[np.ndarray, np.ndarray]:
    """One-step bound: s_{k+1} <= M s_k + d componentwise.

    Returns (M, d). Requires alpha_tilde * lam_k <= 2 / (mu_hat + L_hat)
    for the first diagonal entry to be a genuine contraction; a violation
    is flagged with a warning but the matrix is still returned.
    """
    if est.alpha_tilde * lam_k > 2.0 / (mu_hat + L_hat):
        warnings.warn(
            "effective step exceeds 2/(mu_hat + L_hat); the mean-error row "
            "is not a contraction at this iteration",
            RuntimeWarning,
            stacklevel=2,
        )
    rn = np.sqrt(n)
    ac = est.alpha_check
    dlam = lam_k - lam_next
    cross = rn * ac * L * lam_k * lam_next * est.A_norm * est.pi_norm
    M = np.array(
        [
            [
                1.0 - mu_hat * est.alpha_tilde * lam_k,
                rn * L * est.alpha_tilde * lam_k,
                ac * est.phi_norm,
            ],
            [
                ac * L_hat * est.sigma_A * est.pi_norm * lam_k,
                est.sigma_A * (1.0 + rn * ac * L * est.pi_norm * lam_k),
                ac * est.delta_AB * est.sigma_A,
            ],
            [
                rn * L * est.delta_B2 * est.xi * (cross + dlam),
                L * est.delta_B2 * est.xi * (cross + lam_next * est.A_minus_I_norm + dlam),
                est.sigma_B + ac * L * est.delta_B2 * est.xi * lam_next * est.A_norm,
            ],
        ]
    )
    d = np.array([0.0, 0.0, est.delta_B2 * est.xi * dlam * grad_opt_norm])
    return M, d


def limit_propagation(est: ContractionEstimates) -> np.ndarray:
    """The upper-triangular limit of the propagation matrix as lam -> 0."""
    return np.array(
        [
            [1.0, 0.0, est.alpha_check * est.phi_norm],
            [0.0, est.sigma_A, est.alpha_check * est.delta_AB * est.sigma_A],
            [0.0, 0.0, est.sigma_B],
        ]
    )


def spectral_radius(M: np.ndarray) -> float:
    """Largest eigenvalue modulus."""
    return float(np.max(np.abs(np.linalg.eigvals(np.asarray(M, dtype=float)))))


def det_criterion(M: np.ndarray, c_star: float) -> bool:
    """Determinant test for the spectral radius of a small nonnegative matrix.

    For a nonnegative irreducible M whose diagonal entries all lie below
    c_star, the radius satisfies rho(M) < c_star if and only if
    det(c_star I - M) > 0. Only that determinant is evaluated here.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("need a square matrix")
    return bool(np.linalg.det(c_star * np.eye(M.shape[0]) - M) > 0.0)


@dataclass
class AdmissibilityReport:
    """Outcome of the sufficient-condition check over a horizon.

    window_ok[k-1] says whether the ratio of consecutive gradient weights
    stays inside its admissible window at iteration k; window_first_k is
    the first iteration from which the window holds through the horizon.
    alpha_bound is the largest provably safe max step size over that tail
    (None when the window never holds), computed as the minimum of four
    per-iteration terms; binding_term names the minimizer.
    """

    K: int
    n: int
    flavor: str
    sigma_A: float
    alpha_check: float
    sum_diverges: bool
    lam_description: str
    sigma_B: np.ndarray
    xi: np.ndarray
    theta: np.ndarray
    lam: np.ndarray
    ratio: np.ndarray
    window_lb: np.ndarray
    window_ok: np.ndarray
    margin: np.ndarray  # constant coefficient of the step-size quadratic
    alpha_terms: np.ndarray  # (K, 4)
    window_first_k: int | None
    alpha_bound: float | None
    binding_term: str | None
    admissible: bool

    TERM_NAMES = (
        "mean_contraction",
        "consensus_coupling",
        "tracker_coupling",
        "quadratic_margin",
    )

    def to_dict(self) -> dict:
        return {
            "horizon": self.K,
            "flavor": self.flavor,
            "sigma_A": self.sigma_A,
            "sigma_B_range": [float(self.sigma_B.min()), float(self.sigma_B.max())],
            "alpha_check": self.alpha_check,
            "lambda": self.lam_description,
            "lambda_sum_diverges": self.sum_diverges,
            "window_violations": int(np.count_nonzero(~self.window_ok)),
            "window_first_k": self.window_first_k,
            "alpha_bound": self.alpha_bound,
            "binding_term": self.binding_term,
            "admissible": self.admissible,
        }

    def render(self) -> str:
        d = self.to_dict()
        lines = [
            f"admissibility over horizon K={d['horizon']} ({d['flavor']} surrogates)",
            f"  sigma_A={d['sigma_A']:.6f}  sigma_B in [{d['sigma_B_range'][0]:.6f}, {d['sigma_B_range'][1]:.6f}]",
            f"  lambda_k = {d['lambda']}  (divergent sum: {d['lambda_sum_diverges']})",
            f"  ratio window: {d['window_violations']} violations, holds from k={d['window_first_k']}",
            f"  step bound: {d['alpha_bound']}  (binding: {d['binding_term']})",
            f"  configured max step {d['alpha_check']:g} admissible: {d['admissible']}",
        ]
        return "\n".join(lines)


def admissibility_report(
    weights: WeightSchedule,
    ensemble,
    steps,
    lam,
    K: int,
    flavor: str = "spectral_norm",
    delta_AB: float = 1.0,
    delta_B2: float = 1.0,
) -> AdmissibilityReport:
    """Check the sufficient convergence conditions over iterations 1..K.

    Static weights only: the stationary left vector of A anchors the mean.
    Per iteration this evaluates the ratio window for consecutive gradient
    weights and four upper bounds on the max step size; the final bound is
    the minimum over the tail where the window holds. The configured steps
    are judged against that bound. Failing is not fatal for a run (the
    conditions are sufficient, not necessary) and is reported, not raised.
    """
    if weights.mode != "static":
        raise ConfigError("admissibility analysis requires static weights")
    if K < 1:
        raise ValueError(f"need K >= 1, got {K}")
    alphas = np.asarray(getattr(steps, "values", steps), dtype=float)
    A, B = weights.matrices_at(1)
    n = A.shape[0]
    phi = phi_static(A)
    L, mu = ensemble.L, ensemble.mu
    L_hat, mu_hat = ensemble.L_hat, ensemble.mu_hat
    alpha_check = float(alphas.max())
    rn = np.sqrt(n)

    lam_vals = np.array([lam.value(k) for k in range(1, K + 2)])
    pi = np.full(n, 1.0 / n)
    sigma_B = np.empty(K)
    xi = np.empty(K)
    theta = np.empty(K)
    pi_norm = np.empty(K)
    margin = np.empty(K)
    window_lb = np.empty(K)
    terms = np.full((K, 4), np.inf)

    one = np.ones(n)
    A_defl = A - np.outer(one, phi)
    if flavor == "spectral_norm":
        sigma_A = float(np.linalg.norm(A_defl, 2))
    elif flavor == "spectral_radius":
        sigma_A = float(np.max(np.abs(np.linalg.eigvals(A_defl))))
    else:
        raise ValueError(f"flavor {flavor!r} not in {FLAVORS}")
    A_norm = float(np.linalg.norm(A, 2))
    AmI_norm = float(np.linalg.norm(A - np.eye(n), 2))
    phi_norm = float(np.linalg.norm(phi))

    for k in range(1, K + 1):
        lam_k, lam_next = lam_vals[k - 1], lam_vals[k]
        dlam = lam_k - lam_next
        pi_next = B @ pi
        if flavor == "spectral_norm":
            sB = float(np.linalg.norm(B - np.outer(pi, one), 2))
        else:
            sB = float(np.max(np.abs(np.linalg.eigvals(B - np.outer(pi, one)))))
        xk = float(np.linalg.norm(np.eye(n) - np.outer(pi_next, one), 2))
        pn = float(np.linalg.norm(pi))
        at = float(phi @ (alphas * pi))
        th = at / alpha_check

        quad = (
            n * rn * L**2 * sigma_A * delta_B2 * xk * A_norm * pn
            * lam_k**2 * lam_next
            * (L * delta_AB * th + L * phi_norm * pn + mu * delta_AB * th)
        )
        lin = (
            n * L * sigma_A * delta_B2 * xk * lam_k * dlam
            * ((L + mu) * delta_AB * th + L * phi_norm * pn)
            + n * L * delta_B2 * xk * lam_k * lam_next
            * (
                0.5 * L * phi_norm * (1.0 - sigma_A) * A_norm * pn
                + (L * sigma_A * phi_norm * pn + mu * delta_AB * sigma_A * th) * (A_norm + 1.0)
            )
            + 0.5 * n * rn * L**2 * sigma_A * pn * (1.0 - sB) * th * lam_k**2
        )
        mrg = (
            0.25 * mu_hat * (1.0 - sigma_A) * (1.0 - sB) * th * lam_k
            - 0.5 * rn * L * delta_B2 * xk * phi_norm * (1.0 - sigma_A) * dlam
        )

        terms[k - 1, 0] = 2.0 / (th * lam_k * (mu_hat + L_hat))
        terms[k - 1, 1] = (1.0 - sigma_A) / (2.0 * rn * L * sigma_A * lam_k * pn)
        terms[k - 1, 2] = (1.0 - sB) / (2.0 * L * delta_B2 * xk * lam_next * A_norm)
        if mrg > 0.0:
            terms[k - 1, 3] = 2.0 * mrg / (lin + np.sqrt(lin**2 + 4.0 * quad * mrg))

        sigma_B[k - 1] = sB
        xi[k - 1] = xk
        theta[k - 1] = th
        pi_norm[k - 1] = pn
        margin[k - 1] = mrg
        window_lb[k - 1] = 1.0 - rn * mu * (1.0 - sB) * th / (2.0 * L * delta_B2 * xk * phi_norm)
        pi = pi_next

    ratio = lam_vals[1:] / lam_vals[:-1]
    window_ok = (margin > 0.0) & (ratio <= 1.0)

    # first k from which the window holds through the full horizon
    window_first_k: int | None = None
    ok_from_here = True
    for k in range(K, 0, -1):
        ok_from_here = ok_from_here and bool(window_ok[k - 1])
        if ok_from_here:
            window_first_k = k
        else:
            break

    alpha_bound = None
    binding = None
    if window_first_k is not None:
        tail = terms[window_first_k - 1 :]
        flat = int(np.argmin(tail))
        alpha_bound = float(tail.flat[flat])
        binding = AdmissibilityReport.TERM_NAMES[flat % 4]

    return AdmissibilityReport(
        K=K,
        n=n,
        flavor=flavor,
        sigma_A=sigma_A,
        alpha_check=alpha_check,
        sum_diverges=bool(lam.sum_diverges),
        lam_description=lam.describe(),
        sigma_B=sigma_B,
        xi=xi,
        theta=theta,
        lam=lam_vals[:-1],
        ratio=ratio,
        window_lb=window_lb,
        window_ok=window_ok,
        margin=margin,
        alpha_terms=terms,
        window_first_k=window_first_k,
        alpha_bound=alpha_bound,
        binding_term=binding,
        admissible=window_first_k is not None and alpha_check < alpha_bound,
    )


def scalar_recursion_bounds(c: float, lam, K: int, r=None):
    """Closed-form pieces of u_{K+1} <= prod * u_1 + sum_i r_i * suffix_i.

    For the scalar recursion u_{k+1} <= (1 - c lam_k) u_k + r_k these are
    the full product prod_{j=1..K} (1 - c lam_j), the plain suffix-product
    sum, and the r-weighted suffix-product sum (None when r is omitted).
    Every factor must be nonnegative; a c lam_k > 1 is a domain error.
    """
    if K < 1:
        raise ValueError(f"need K >= 1, got {K}")
    if hasattr(lam, "value"):
        lam_vals = np.array([lam.value(k) for k in range(1, K + 1)])
    else:
        lam_vals = np.asarray(lam, dtype=float)
        if lam_vals.shape != (K,):
            raise ValueError(f"lambda values have shape {lam_vals.shape}, expected ({K},)")
    factors = 1.0 - c * lam_vals
    if np.any(factors < 0.0):
        k_bad = int(np.argmax(factors < 0.0)) + 1
        raise ValueError(f"1 - c*lambda_k is negative at k={k_bad}")
    # suffix[i] = prod_{j > i} factors[j], with the empty product equal to 1
    suffix = np.ones(K)
    if K > 1:
        suffix[:-1] = np.cumprod(factors[::-1])[:-1][::-1]
    product = float(factors[0] * suffix[0])
    tail_sum = float(suffix.sum())
    weighted = None
    if r is not None:
        r_vals = np.asarray(r, dtype=float)
        if r_vals.shape != (K,):
            raise ValueError(f"r has shape {r_vals.shape}, expected ({K},)")
        weighted = float(suffix @ r_vals)
    return product, tail_sum, weighted
