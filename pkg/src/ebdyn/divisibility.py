"""Eventual divisibility: do the propagators enter a cone and stay there?

For each start time s on a grid, the scan looks for Delta(s) > s such that
V_{t,s} lies in the target cone for every t >= Delta(s).  Two structural
shortcuts avoid the generic sweep: a semigroup has V_{t,s} = Lambda_{t-s},
so Delta(s) = s + tau with tau the arrival time of Lambda itself; and for a
CP-divisible family one instant inside the cone keeps all later propagators
inside, because composing with completely positive maps preserves every cone
in the hierarchy.

Refutation is by witness limits: when the propagator's asymptotic witness at
some fixed s is strictly negative, no Delta(s) exists and eventual
divisibility fails at that s.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import asymptotics, evolve, superop, tolerances
from .errors import NoLimitError, NotReachedError, SingularMapError

__all__ = [
    "DivisibilityReport",
    "ChainCheck",
    "default_s_grid",
    "scan_divisibility",
    "check_implication_chain",
]


@dataclass(frozen=True, eq=False)
class DivisibilityReport:
    """Per-start-time arrival of the propagators into one cone.

    ``delta[k]`` is Delta(s_grid[k]); ``math.inf`` marks start times where
    the tail witness refutes arrival, ``None`` start times left undecided by
    the horizon.
    """

    cone: str
    s_grid: tuple
    delta: tuple
    certificates: tuple
    verdict: str
    shortcut_used: str
    details: dict = field(default_factory=dict)


def default_s_grid(search, n=16):
    """Geometric grid of start times on [0, t_max / 2], anchored at 0."""
    top = search.t_max / 2.0
    return np.concatenate([[0.0], np.geomspace(top / 200.0, top, n - 1)])


_STRONG_CERTS = (
    "analytic_monotone",
    "analytic_tail",
    "cp_divisible_one_instant",
    "asymptotic_interior",
)


def scan_divisibility(
    handle_or_family, cone, s_grid=None, search=None, tol=None, use_shortcuts=True
) -> DivisibilityReport:
    """Eventual-divisibility scan for one cone over a grid of start times."""
    handle = evolve._as_handle(handle_or_family)
    family = handle.family
    if cone not in asymptotics.CONES:
        raise ValueError(f"unknown cone {cone!r}")
    if tol is None:
        tol = tolerances.PSD_TOL
    if search is None:
        search = asymptotics.default_search(family)
    if s_grid is None:
        s_grid = default_s_grid(search)
    s_grid = tuple(float(s) for s in s_grid)
    details = {}

    if use_shortcuts and family.constant:
        return _semigroup_scan(handle, cone, s_grid, search, tol)

    deltas = []
    certs = []
    refuted = False
    for s in s_grid:
        delta, cert = _arrival_at_start(handle, cone, s, search, tol)
        deltas.append(delta)
        certs.append(cert)
        if delta == math.inf:
            refuted = True
    if refuted:
        verdict = "refuted"
    elif all(
        d is not None and math.isfinite(d) and c in _STRONG_CERTS
        for d, c in zip(deltas, certs)
    ):
        verdict = "certified"
    else:
        verdict = "undetermined"
    shortcut = (
        "cp_divisible_one_instant"
        if use_shortcuts and family.cp_divisible and verdict == "certified"
        else "none"
    )
    return DivisibilityReport(
        cone=cone,
        s_grid=s_grid,
        delta=tuple(deltas),
        certificates=tuple(certs),
        verdict=verdict,
        shortcut_used=shortcut,
        details=details,
    )


def _semigroup_scan(handle, cone, s_grid, search, tol):
    family = handle.family
    details = {}
    try:
        base = asymptotics.arrival_time(handle, cone, search=search, tol=tol)
    except NotReachedError as exc:
        details["arrival"] = "not_reached"
        verdict = "undetermined"
        try:
            limit = asymptotics.asymptotic_map(family, handle=handle,
                                               horizon=search.t_max)
            w_inf = asymptotics.cone_witness(limit, cone)
            details["asymptotic_witness"] = w_inf
            if w_inf < -tolerances.REFUTE_FACTOR * tol:
                verdict = "refuted"
        except NoLimitError:
            pass
        never = math.inf if verdict == "refuted" else None
        return DivisibilityReport(
            cone=cone,
            s_grid=s_grid,
            delta=tuple(never for _ in s_grid),
            certificates=tuple("none" for _ in s_grid),
            verdict=verdict,
            shortcut_used="semigroup",
            details={**details, "horizon_witness": exc.witness},
        )
    tau = base.tau
    details["lambda_tau"] = tau
    details["lambda_certificate"] = base.retention_certificate
    if tau is None:
        verdict = "undetermined"
        deltas = tuple(None for _ in s_grid)
    else:
        verdict = (
            "certified" if base.retention_certificate in _STRONG_CERTS
            else "undetermined"
        )
        deltas = tuple(s + tau for s in s_grid)
    return DivisibilityReport(
        cone=cone,
        s_grid=s_grid,
        delta=deltas,
        certificates=tuple(base.retention_certificate for _ in s_grid),
        verdict=verdict,
        shortcut_used="semigroup",
        details=details,
    )


def _propagator_tail(handle, cone, s, search, tol):
    """Witness limit of t -> V_{t,s}, or None when unavailable."""
    family = handle.family
    cf = family.closed_form
    # the closed-form tail is an eigenvalue witness: meaningless for P
    if cone != "P" and cf is not None and cf.propagator_tail_witness is not None:
        return float(cf.propagator_tail_witness(s)), "analytic_tail"
    try:
        limit = asymptotics.asymptotic_map(family, handle=handle, horizon=search.t_max)
    except NoLimitError:
        return None, None
    if isinstance(limit, asymptotics.PeriodicMap):
        try:
            lam_s_inv = np.linalg.inv(handle.solve(s).matrix)
        except np.linalg.LinAlgError:
            return None, None
        w = min(
            asymptotics.cone_witness(
                superop.Superoperator(phi.matrix @ lam_s_inv, family.d), cone
            )
            for phi in limit.sample()
        )
        return float(w), "asymptotic_interior"
    try:
        lam_s_inv = np.linalg.inv(handle.solve(s).matrix)
    except np.linalg.LinAlgError:
        return None, None
    v_inf = superop.Superoperator(limit.matrix @ lam_s_inv, family.d)
    return float(asymptotics.cone_witness(v_inf, cone)), "asymptotic_interior"


def _arrival_at_start(handle, cone, s, search, tol):
    """Delta(s) and its certificate for one start time."""
    family = handle.family
    tail, tail_kind = _propagator_tail(handle, cone, s, search, tol)
    if tail is not None and tail < -tolerances.REFUTE_FACTOR * tol:
        return math.inf, "refuted_tail"
    ts = np.linspace(s, s + search.t_max, search.grid_n)
    try:
        vs = handle.propagator_many(ts, s)
    except SingularMapError:
        return None, "singular"
    ws = np.array([asymptotics.cone_witness(v, cone) for v in vs])

    def witness_at(t):
        return asymptotics.cone_witness(handle.propagator(t, s), cone)

    try:
        delta, _bracket = asymptotics._scan_for_arrival(
            ts, ws, witness_at, tol, search.resolved_bisect_tol(), cone
        )
    except NotReachedError:
        return None, "not_reached"
    delta = max(float(delta), s)  # the scan reports 0.0 when never negative
    if family.cp_divisible:
        cert = "cp_divisible_one_instant"
    elif tail is not None and tail > tolerances.REFUTE_FACTOR * tol:
        cert = tail_kind
    else:
        cert = "sampled_grid"
    return delta, cert


@dataclass(frozen=True)
class ChainCheck:
    """Consistency of reports across the cone hierarchy."""

    consistent: bool
    messages: tuple


def check_implication_chain(reports, slack=None) -> ChainCheck:
    """Verify EB => PPT => CP => P across a set of divisibility reports.

    ``reports``: mapping from cone name to :class:`DivisibilityReport`.
    A stronger cone being certified while a weaker one is refuted is a
    violation, as is a weaker cone arriving later than a stronger one at the
    same start time (beyond numerical slack).
    """
    order = ["EB", "PPT", "CP", "P"]
    present = [c for c in order if c in reports]
    messages = []
    for i in range(len(present)):
        for j in range(i + 1, len(present)):
            strong = reports[present[i]]
            weak = reports[present[j]]
            if strong.verdict == "certified" and weak.verdict == "refuted":
                messages.append(
                    f"{present[i]}-divisibility certified but "
                    f"{present[j]}-divisibility refuted"
                )
            if strong.s_grid == weak.s_grid:
                pair_slack = slack
                if pair_slack is None:
                    pair_slack = 1e-3 if "P" in (present[i], present[j]) else 1e-6
                for s, ds, dw in zip(strong.s_grid, strong.delta, weak.delta):
                    if (
                        ds is not None and dw is not None
                        and math.isfinite(ds) and math.isfinite(dw)
                        and dw > ds + pair_slack
                    ):
                        messages.append(
                            f"at s={s:g}: {present[j]} arrival {dw:.6g} later than "
                            f"{present[i]} arrival {ds:.6g}"
                        )
    return ChainCheck(consistent=not messages, messages=tuple(messages))
