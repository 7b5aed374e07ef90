"""Catalog of time-local generator families and their closed-form solutions.

A family bundles the generator t -> L_t (as a superoperator matrix) with
structural flags the solvers and certificate machinery rely on: whether the
generators at different times commute, whether the family is a semigroup,
whether the propagators are known to be completely positive, and, when one
exists, a closed-form solution for the evolved map itself.

Closed forms are stored as spectral data where the family admits fixed
spectral components,

    Lambda_t = sum_k c_k(t) Q_k,

with idempotent superoperators Q_k and scalar trajectories c_k(t), plus an
explicit ``map_at`` builder that is always present.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.integrate

from . import classify, matcore, superop
from .errors import (
    CovarianceViolationError,
    DimensionMismatchError,
    EbdynError,
    InvalidRateMatrixError,
    InvalidStateError,
    NonHermitianHamiltonianError,
    SingularMapError,
)

__all__ = [
    "ClosedFormSolution",
    "GeneratorFamily",
    "gkls",
    "pauli_channel",
    "pauli_p_divisible",
    "eternal_nm",
    "phase_covariant",
    "depolarizing",
    "detailed_balance",
    "floquet_product",
    "pure_decoherence",
    "diagonally_covariant",
]


@dataclass(frozen=True, eq=False)
class ClosedFormSolution:
    """Exact solution data for a generator family.

    ``map_at`` is always usable.  The spectral fields are optional: when
    ``components`` is set, ``coefficients(t)`` returns the matching scalar
    trajectories and ``asymptotic_coefficients`` their limits (None when a
    limit must be found numerically).  ``diverges`` marks families whose
    trajectories are unbounded, so no asymptotic map exists.
    """

    map_at: Callable[[float], superop.Superoperator]
    components: tuple | None = None
    coefficients: Callable[[float], np.ndarray] | None = None
    asymptotic_coefficients: np.ndarray | None = None
    asymptotic_builder: Callable[[], superop.Superoperator] | None = None
    limit_cycle: Callable[[float], superop.Superoperator] | None = None
    period: float | None = None
    propagator_at: Callable[[float, float], superop.Superoperator] | None = None
    propagator_tail_witness: Callable[[float], float] | None = None
    ppt_arrival_time: float | None = None
    witness_single_crossing: bool = False
    diverges: bool = False


@dataclass(frozen=True, eq=False)
class GeneratorFamily:
    """A time-local generator t -> L_t with structural metadata."""

    d: int
    kind: str
    generator_matrix: Callable[[float], np.ndarray] = field(repr=False)
    commutative: bool = False
    constant: bool = False
    closed_form: ClosedFormSolution | None = None
    stationary_state: np.ndarray | None = None
    cp_divisible: bool = False
    params: dict = field(default_factory=dict)

    def evaluate(self, t) -> superop.Superoperator:
        """The generator L_t as a superoperator."""
        return superop.Superoperator(self.generator_matrix(float(t)), self.d)


# ---------------------------------------------------------------------------
# building blocks


def _hamiltonian_part(h):
    """Superoperator matrix of rho -> -i [H, rho]."""
    h = matcore.as_matrix(h, square=True)
    eye = np.eye(h.shape[0], dtype=complex)
    return -1j * (np.kron(eye, h) - np.kron(h.T, eye))


def _dissipator(v):
    """Superoperator matrix of rho -> V rho V^dag - {V^dag V, rho}/2."""
    v = matcore.as_matrix(v, square=True)
    eye = np.eye(v.shape[0], dtype=complex)
    vv = v.conj().T @ v
    return np.kron(v.conj(), v) - 0.5 * (np.kron(eye, vv) + np.kron(vv.T, eye))


class _Rate:
    """A scalar rate, either constant or a callable of time.

    Carries an antiderivative: exact for constants, the supplied one when
    given, adaptive quadrature otherwise.
    """

    def __init__(self, value, antiderivative=None):
        if callable(value):
            self.func = value
            self.constant = None
        else:
            c = float(value)
            self.func = lambda t: c
            self.constant = c
        if antiderivative is not None:
            self._anti = antiderivative
        elif self.constant is not None:
            c = self.constant
            self._anti = lambda t: c * t
        else:
            self._anti = None

    def __call__(self, t):
        return float(self.func(t))

    def integral(self, t):
        if self._anti is not None:
            return float(self._anti(t))
        value, _ = scipy.integrate.quad(
            self.func, 0.0, t, epsabs=1e-10, epsrel=1e-10, limit=200
        )
        return float(value)


def _sample_times(horizon=3.0):
    return (0.0, 0.37 * horizon, 0.71 * horizon, horizon)


def _check_trace_annihilating(gen, d, times=_sample_times()):
    lid = matcore.vec(np.eye(d, dtype=complex)).conj()
    for t in times:
        m = gen(t)
        scale = max(1.0, float(np.abs(m).max()))
        if float(np.abs(lid @ m).max()) > 1e-10 * scale:
            raise EbdynError(f"generator does not annihilate the trace at t={t:g}")


def _sampled_commutative(gen, times=(0.31, 0.9, 2.17)) -> bool:
    mats = [gen(t) for t in times]
    scale = max(1.0, max(float(np.abs(m).max()) for m in mats))
    for i in range(len(mats)):
        for j in range(i + 1, len(mats)):
            comm = mats[i] @ mats[j] - mats[j] @ mats[i]
            if float(np.abs(comm).max()) > 1e-9 * scale * scale:
                return False
    return True


def _sampled_nonnegative(rates, times=np.linspace(0.0, 10.0, 41)) -> bool:
    return all(r(t) >= -1e-12 for r in rates for t in times)


# ---------------------------------------------------------------------------
# generic GKLS


def gkls(hamiltonian, lindblads) -> GeneratorFamily:
    """Generator L_t(rho) = -i[H, rho] + sum_k g_k(t) D[V_k](rho).

    Parameters
    ----------
    hamiltonian : array_like
        Hermitian d x d matrix.
    lindblads : sequence of (V_k, g_k)
        Jump operators with rates; each rate is a number or a callable of t.
    """
    h = matcore.as_matrix(hamiltonian, square=True)
    if not matcore.is_hermitian(h, tol=1e-10):
        raise NonHermitianHamiltonianError("Hamiltonian must be Hermitian")
    d = h.shape[0]
    ops = []
    rates = []
    for v, g in lindblads:
        v = matcore.as_matrix(v, square=True)
        if v.shape[0] != d:
            raise DimensionMismatchError("jump operator dimension mismatch")
        ops.append(v)
        rates.append(_Rate(g))
    ham_part = _hamiltonian_part(h)
    diss = [_dissipator(v) for v in ops]
    constant = all(r.constant is not None for r in rates)

    def gen(t):
        m = ham_part.copy()
        for r, dmat in zip(rates, diss):
            m += r(t) * dmat
        return m

    _check_trace_annihilating(gen, d)
    if constant:
        commutative = True
        cp_div = all(r.constant >= 0.0 for r in rates)
        basis = "constant_rates"
    else:
        commutative = _sampled_commutative(gen)
        cp_div = _sampled_nonnegative(rates)
        basis = "sampled_rates"
    return GeneratorFamily(
        d=d,
        kind="gkls",
        generator_matrix=gen,
        commutative=commutative,
        constant=constant,
        closed_form=None,
        stationary_state=None,
        cp_divisible=cp_div,
        params={"n_lindblads": len(ops), "cp_divisible_basis": basis},
    )


# ---------------------------------------------------------------------------
# qubit Pauli families


def _pauli_components():
    comps = []
    for s in matcore.PAULIS:
        v = matcore.vec(s)
        comps.append(0.5 * np.outer(v, v.conj()))
    return tuple(comps)


_PAULI_PAIRS = ((1, 2), (0, 2), (0, 1))  # complementary index pairs


def pauli_channel(gammas, antiderivatives=None) -> GeneratorFamily:
    """Qubit generator L_t(rho) = sum_k g_k(t) (s_k rho s_k - rho).

    The evolved map has the fixed spectral components (tr s_k rho) s_k / 2
    with trajectories

        c_k(t) = exp(-2 [G_i(t) + G_j(t)]),   {i, j} = the other two indices,

    where G_k is the antiderivative of g_k (supplied, or computed by
    quadrature for callable rates).

    Parameters
    ----------
    gammas : length-3 sequence
        Rates g_1, g_2, g_3, numbers or callables of t.
    antiderivatives : length-3 sequence of callables, optional
        Exact antiderivatives G_k with G_k(0) = 0.
    """
    if len(gammas) != 3:
        raise DimensionMismatchError("need exactly three rates")
    if antiderivatives is None:
        antiderivatives = (None, None, None)
    rates = [_Rate(g, a) for g, a in zip(gammas, antiderivatives)]
    comps = _pauli_components()
    diss = [np.kron(s.conj(), s) - np.eye(4, dtype=complex) for s in matcore.PAULIS[:3]]

    def gen(t):
        m = np.zeros((4, 4), dtype=complex)
        for r, dmat in zip(rates, diss):
            m += r(t) * dmat
        return m

    def coefficients(t):
        c = np.empty(4, dtype=complex)
        for k, (i, j) in enumerate(_PAULI_PAIRS):
            c[k] = math.exp(-2.0 * (rates[i].integral(t) + rates[j].integral(t)))
        c[3] = 1.0
        return c

    def map_at(t):
        c = coefficients(t)
        s = np.zeros((4, 4), dtype=complex)
        for ck, q in zip(c, comps):
            s += ck * q
        return superop.Superoperator(s, 2)

    constant = all(r.constant is not None for r in rates)
    asym = None
    diverges = False
    if constant:
        asym = np.empty(4, dtype=complex)
        for k, (i, j) in enumerate(_PAULI_PAIRS):
            s_k = rates[i].constant + rates[j].constant
            if s_k > 1e-12:
                asym[k] = 0.0
            elif s_k >= -1e-12:
                asym[k] = 1.0
            else:
                diverges = True
        asym[3] = 1.0
        if diverges:
            asym = None
        cp_div = all(r.constant >= 0.0 for r in rates)
    else:
        cp_div = _sampled_nonnegative(rates)
    cf = ClosedFormSolution(
        map_at=map_at,
        components=comps,
        coefficients=coefficients,
        asymptotic_coefficients=asym,
        diverges=diverges,
    )
    return GeneratorFamily(
        d=2,
        kind="pauli",
        generator_matrix=gen,
        commutative=True,
        constant=constant,
        closed_form=cf,
        stationary_state=np.eye(2, dtype=complex) / 2.0,
        cp_divisible=cp_div,
        params={"rates": [r.constant for r in rates]},
    )


def pauli_p_divisible(family: GeneratorFamily, times) -> bool:
    """Whether all pairwise rate sums g_i + g_j are nonnegative on ``times``.

    For Pauli families this is equivalent to P-divisibility of the evolution.
    """
    if family.kind not in ("pauli", "eternal_nm"):
        raise EbdynError("P-divisibility test is specific to Pauli families")
    gen = family.generator_matrix
    for t in times:
        m = gen(t)
        # recover the rates from the generator's action on the Pauli basis:
        # L(s_k) = -2 (g_i + g_j) s_k
        for k, s in enumerate(matcore.PAULIS[:3]):
            lam = np.vdot(matcore.vec(s), m @ matcore.vec(s)) / 2.0
            if lam.real > 4e-12:
                return False
    return True


def _log_cosh(t):
    # overflow-safe log(cosh(t))
    a = abs(t)
    return a + math.log1p(math.exp(-2.0 * a)) - math.log(2.0)


def eternal_nm(alpha) -> GeneratorFamily:
    """Pauli family with rates (a/2, a/2, -(a/2) tanh t).

    The third rate is negative for every t > 0, yet the evolved map is
    completely positive for all times; the spectral trajectories are

        c_1 = c_2 = ((1 + e^{-2t}) / 2)^a,   c_3 = e^{-2 a t},   c_4 = 1,

    with limits (2^-a, 2^-a, 0, 1).  Closed-form propagators and their
    witness limit as t -> infinity are included.
    """
    alpha = float(alpha)
    if alpha <= 0.0:
        raise EbdynError("alpha must be positive")
    base = pauli_channel(
        (alpha / 2.0, alpha / 2.0, lambda t: -(alpha / 2.0) * math.tanh(t)),
        antiderivatives=(
            lambda t: alpha * t / 2.0,
            lambda t: alpha * t / 2.0,
            lambda t: -(alpha / 2.0) * _log_cosh(t),
        ),
    )
    comps = base.closed_form.components

    def coefficients(t):
        c12 = ((1.0 + math.exp(-2.0 * t)) / 2.0) ** alpha
        return np.array([c12, c12, math.exp(-2.0 * alpha * t), 1.0], dtype=complex)

    def map_at(t):
        c = coefficients(t)
        s = np.zeros((4, 4), dtype=complex)
        for ck, q in zip(c, comps):
            s += ck * q
        return superop.Superoperator(s, 2)

    def propagator_at(t, s):
        c = np.empty(4, dtype=complex)
        c[0] = c[1] = ((1.0 + math.exp(-2.0 * t)) / (1.0 + math.exp(-2.0 * s))) ** alpha
        c[2] = math.exp(-2.0 * alpha * (t - s))
        c[3] = 1.0
        m = np.zeros((4, 4), dtype=complex)
        for ck, q in zip(c, comps):
            m += ck * q
        return superop.Superoperator(m, 2)

    def tail_witness(s):
        # limit of the propagator's smallest Choi / partial-transpose
        # eigenvalue as t -> infinity, at fixed s
        return 0.5 - (1.0 + math.exp(-2.0 * s)) ** (-alpha)

    cf = ClosedFormSolution(
        map_at=map_at,
        components=comps,
        coefficients=coefficients,
        asymptotic_coefficients=np.array(
            [2.0 ** -alpha, 2.0 ** -alpha, 0.0, 1.0], dtype=complex
        ),
        propagator_at=propagator_at,
        propagator_tail_witness=tail_witness,
        # both Choi witnesses are increasing in t for alpha >= 1
        witness_single_crossing=alpha >= 1.0,
    )
    return GeneratorFamily(
        d=2,
        kind="eternal_nm",
        generator_matrix=base.generator_matrix,
        commutative=True,
        constant=False,
        closed_form=cf,
        stationary_state=np.eye(2, dtype=complex) / 2.0,
        cp_divisible=False,
        params={"alpha": alpha},
    )


# ---------------------------------------------------------------------------
# phase-covariant qubit semigroup


def phase_covariant(omega_freq, gamma_plus, gamma_minus, gamma_z) -> GeneratorFamily:
    """Qubit semigroup with absorption, emission and dephasing channels.

    L(rho) = -i (w/2) [s_z, rho] + g+ D[s_+] + g- D[s_-] + g_z D[s_z].

    Populations relax toward (p+, p-) = (g+, g-)/(g+ + g-) at rate
    G_L = g+ + g-; coherences decay at rate G_T = G_L/2 + 2 g_z with phase
    rotation w.  Rates outside the positivity domain are accepted and only
    flagged in ``params``.
    """
    w = float(omega_freq)
    gp, gm, gz = float(gamma_plus), float(gamma_minus), float(gamma_z)
    gl = gp + gm
    gt = 0.5 * gl + 2.0 * gz
    sigma_p = np.array([[0, 1], [0, 0]], dtype=complex)
    sigma_m = sigma_p.conj().T
    gen_matrix = (
        _hamiltonian_part(0.5 * w * matcore.PAULI_Z)
        + gp * _dissipator(sigma_p)
        + gm * _dissipator(sigma_m)
        + gz * _dissipator(matcore.PAULI_Z)
    )

    def gen(t):
        return gen_matrix

    def map_at(t):
        s = np.zeros((4, 4), dtype=complex)
        decay = 1.0 - math.exp(-gl * t)
        if gl > 0.0:
            pp, pm = gp / gl, gm / gl
        else:
            pp = pm = 0.0  # decay == 0, populations frozen
        s[0, 0] = 1.0 - pm * decay
        s[0, 3] = pp * decay
        s[3, 0] = pm * decay
        s[3, 3] = 1.0 - pp * decay
        s[1, 1] = np.exp(-(gt - 1j * w) * t)
        s[2, 2] = np.exp(-(gt + 1j * w) * t)
        return superop.Superoperator(s, 2)

    if gl > 0.0:
        pp, pm = gp / gl, gm / gl
        omega = np.diag([pp, pm]).astype(complex)
        q1 = np.outer(matcore.vec(omega), matcore.vec(np.eye(2, dtype=complex)).conj())
        x2 = np.diag([1.0, -1.0]).astype(complex)
        y2 = np.diag([pm, -pp]).astype(complex)
        q2 = np.outer(matcore.vec(x2), matcore.vec(y2).conj())
    else:
        omega = None
        q1 = np.zeros((4, 4), dtype=complex)
        q1[0, 0] = 1.0
        q2 = np.zeros((4, 4), dtype=complex)
        q2[3, 3] = 1.0
    q3 = np.zeros((4, 4), dtype=complex)
    q3[1, 1] = 1.0
    q4 = np.zeros((4, 4), dtype=complex)
    q4[2, 2] = 1.0
    comps = (q1, q2, q3, q4)

    def coefficients(t):
        pop2 = math.exp(-gl * t) if gl > 0.0 else 1.0
        return np.array(
            [1.0, pop2, np.exp(-(gt - 1j * w) * t), np.exp(-(gt + 1j * w) * t)],
            dtype=complex,
        )

    diverges = gl < 0.0 or gt < 0.0 or (gt == 0.0 and w != 0.0)
    asym = None
    if not diverges:
        asym = np.array(
            [
                1.0,
                0.0 if gl > 0.0 else 1.0,
                0.0 if gt > 0.0 else 1.0,
                0.0 if gt > 0.0 else 1.0,
            ],
            dtype=complex,
        )
    cf = ClosedFormSolution(
        map_at=map_at,
        components=comps,
        coefficients=coefficients,
        asymptotic_coefficients=asym,
        diverges=diverges,
    )
    positive_domain = gp >= 0.0 and gm >= 0.0 and gz >= -0.5 * math.sqrt(max(gp * gm, 0.0))
    return GeneratorFamily(
        d=2,
        kind="phase_covariant",
        generator_matrix=gen,
        commutative=True,
        constant=True,
        closed_form=cf,
        stationary_state=omega,
        cp_divisible=gp >= 0.0 and gm >= 0.0 and gz >= 0.0,
        params={
            "omega_freq": w,
            "gamma_plus": gp,
            "gamma_minus": gm,
            "gamma_z": gz,
            "longitudinal_rate": gl,
            "transverse_rate": gt,
            "positive_domain": positive_domain,
        },
    )


# ---------------------------------------------------------------------------
# generalized depolarizing


def depolarizing(gamma, omega) -> GeneratorFamily:
    """Relaxation straight toward a fixed state: L(rho) = g (tr(rho) w - rho).

    The solution is Lambda_t = e^{-g t} id + (1 - e^{-g t}) P_w.  When w is
    strictly positive the partial-transpose witness crosses zero exactly once,
    at

        tau = (1/g) ln(1 + 1/sqrt(min_{i<j} w_i w_j)),

    with w_i the eigenvalues of w; the time is stored on the closed form.
    """
    g = float(gamma)
    if g <= 0.0:
        raise InvalidStateError("gamma must be positive")
    w = matcore.as_matrix(omega, square=True)
    if not matcore.is_hermitian(w, tol=1e-10):
        raise InvalidStateError("omega must be Hermitian")
    if abs(np.trace(w) - 1.0) > 1e-10:
        raise InvalidStateError("omega must have unit trace")
    evals = np.linalg.eigvalsh(w)
    if evals[0] < -1e-10:
        raise InvalidStateError("omega must be positive semi-definite")
    d = w.shape[0]
    proj = classify.projector_onto_state(w).matrix
    eye = np.eye(d * d, dtype=complex)
    gen_matrix = g * (proj - eye)

    def gen(t):
        return gen_matrix

    def map_at(t):
        u = math.exp(-g * t)
        return superop.Superoperator(u * eye + (1.0 - u) * proj, d)

    def coefficients(t):
        return np.array([1.0, math.exp(-g * t)], dtype=complex)

    interior = evals[0] > 1e-12
    tau = None
    if interior:
        pair_min = float(evals[0] * evals[1])  # two smallest eigenvalues
        tau = math.log(1.0 + 1.0 / math.sqrt(pair_min)) / g
    cf = ClosedFormSolution(
        map_at=map_at,
        components=(proj, eye - proj),
        coefficients=coefficients,
        asymptotic_coefficients=np.array([1.0, 0.0], dtype=complex),
        asymptotic_builder=lambda: superop.Superoperator(proj.copy(), d),
        ppt_arrival_time=tau,
        witness_single_crossing=interior,
    )
    return GeneratorFamily(
        d=d,
        kind="depolarizing",
        generator_matrix=gen,
        commutative=True,
        constant=True,
        closed_form=cf,
        stationary_state=w,
        cp_divisible=True,
        params={"gamma": g, "omega_eigenvalues": [float(x) for x in evals]},
    )


# ---------------------------------------------------------------------------
# detailed balance


def detailed_balance(hamiltonian, jumps, beta) -> GeneratorFamily:
    """Thermal generator with KMS-weighted forward and backward processes.

    Parameters
    ----------
    hamiltonian : array_like
        Hermitian d x d matrix.
    jumps : sequence of (V, w)
        Energy-resolved jump operators with their Bohr frequencies w >= 0;
        each V must satisfy e^{iHt} V e^{-iHt} = e^{-iwt} V.
    beta : float
        Inverse temperature, beta >= 0.

    The generator is -i[H, .] + sum (D[V] + e^{-beta w} D[V^dag]); its kernel
    contains the Gibbs state of H at inverse temperature beta, which is
    checked at construction.
    """
    h = matcore.as_matrix(hamiltonian, square=True)
    if not matcore.is_hermitian(h, tol=1e-10):
        raise NonHermitianHamiltonianError("Hamiltonian must be Hermitian")
    beta = float(beta)
    if beta < 0.0:
        raise EbdynError("beta must be nonnegative")
    d = h.shape[0]
    energies, basis = matcore.herm_eig(h)

    def _exp_iht(t):
        return (basis * np.exp(1j * energies * t)) @ basis.conj().T

    gen_matrix = _hamiltonian_part(h)
    freqs = []
    for v, w in jumps:
        v = matcore.as_matrix(v, square=True)
        if v.shape[0] != d:
            raise DimensionMismatchError("jump operator dimension mismatch")
        w = float(w)
        if w < -1e-12:
            raise EbdynError("Bohr frequencies must be nonnegative")
        scale = max(1.0, float(np.abs(v).max()))
        for t in (0.5, 1.0):
            u = _exp_iht(t)
            dev = np.abs(u @ v @ u.conj().T - np.exp(-1j * w * t) * v).max()
            if dev > 1e-8 * scale:
                raise CovarianceViolationError(
                    f"jump operator violates covariance at w={w:g} (dev {dev:.2e})"
                )
        gen_matrix = gen_matrix + _dissipator(v) + math.exp(-beta * w) * _dissipator(
            v.conj().T
        )
        freqs.append(w)

    shifted = -beta * (energies - energies.min())
    gibbs_diag = np.exp(shifted)
    gibbs_diag /= gibbs_diag.sum()
    gibbs = (basis * gibbs_diag) @ basis.conj().T
    residual = float(np.abs(gen_matrix @ matcore.vec(gibbs)).max())
    if residual > 1e-9 * max(1.0, float(np.abs(gen_matrix).max())):
        raise CovarianceViolationError(
            f"Gibbs state is not stationary (residual {residual:.2e})"
        )

    def gen(t):
        return gen_matrix

    return GeneratorFamily(
        d=d,
        kind="detailed_balance",
        generator_matrix=gen,
        commutative=True,
        constant=True,
        closed_form=None,
        stationary_state=gibbs,
        cp_divisible=True,
        params={"beta": beta, "bohr_frequencies": freqs},
    )


# ---------------------------------------------------------------------------
# periodic Floquet product


def floquet_product(p_of_t, period, core, dp_of_t=None) -> GeneratorFamily:
    """Evolution of the product form Lambda_t = P_t o e^{tX}.

    Parameters
    ----------
    p_of_t : callable
        t -> unitary d x d matrix p_t with p_0 = I and period ``period``;
        P_t is the conjugation rho -> p_t rho p_t^dag.
    period : float
        Period of ``p_of_t``.
    core : GeneratorFamily
        Constant family supplying X.
    dp_of_t : callable, optional
        Exact derivative of ``p_of_t``; a central difference is used when
        absent (only the time-local generator needs it, not the closed form).

    When the core has a unique full-rank stationary state w, the evolved map
    approaches the periodic limit cycle Z_t = P_{w(t)} with w(t) = p_t w
    p_t^dag, available as ``closed_form.limit_cycle``.
    """
    if not core.constant:
        raise EbdynError("core family must be constant")
    period = float(period)
    if period <= 0.0:
        raise EbdynError("period must be positive")
    d = core.d
    x = core.generator_matrix(0.0)
    p0 = matcore.as_matrix(p_of_t(0.0), square=True)
    if float(np.abs(p0 - np.eye(d)).max()) > 1e-10:
        raise EbdynError("p_of_t(0) must be the identity")
    for t in (period, 0.33 * period, 0.77 * period):
        pt = matcore.as_matrix(p_of_t(t), square=True)
        if float(np.abs(pt @ pt.conj().T - np.eye(d)).max()) > 1e-10:
            raise EbdynError(f"p_of_t({t:g}) is not unitary")
    if float(np.abs(matcore.as_matrix(p_of_t(period)) - p0).max()) > 1e-8:
        raise EbdynError("p_of_t is not periodic with the declared period")

    def conj_matrix(pm):
        return np.kron(pm.conj(), pm)

    def map_at(t):
        pm = matcore.as_matrix(p_of_t(t), square=True)
        return superop.Superoperator(conj_matrix(pm) @ matcore.expm(t * x), d)

    def propagator_at(t, s):
        pt = matcore.as_matrix(p_of_t(t), square=True)
        ps = matcore.as_matrix(p_of_t(s), square=True)
        inv = np.kron(ps.T, ps.conj().T)
        return superop.Superoperator(
            conj_matrix(pt) @ matcore.expm((t - s) * x) @ inv, d
        )

    omega = core.stationary_state
    if omega is None:
        omega = _kernel_state(x, d)
    limit_cycle = None
    if omega is not None:
        def limit_cycle(t):
            pm = matcore.as_matrix(p_of_t(t), square=True)
            return classify.projector_onto_state(pm @ omega @ pm.conj().T)

    if dp_of_t is None:
        h = 1e-6 * max(1.0, period)

        def dp_of_t(t, _h=h):
            pa = matcore.as_matrix(p_of_t(t + _h), square=True)
            pb = matcore.as_matrix(p_of_t(t - _h), square=True)
            return (pa - pb) / (2.0 * _h)

    def gen(t):
        pm = matcore.as_matrix(p_of_t(t), square=True)
        pd = matcore.as_matrix(dp_of_t(t), square=True)
        pmat = conj_matrix(pm)
        pinv = np.kron(pm.T, pm.conj().T)
        pdot = np.kron(pd.conj(), pm) + np.kron(pm.conj(), pd)
        return pdot @ pinv + pmat @ x @ pinv

    cf = ClosedFormSolution(
        map_at=map_at,
        limit_cycle=limit_cycle,
        period=period,
        propagator_at=propagator_at,
    )
    return GeneratorFamily(
        d=d,
        kind="floquet_product",
        generator_matrix=gen,
        commutative=False,
        constant=False,
        closed_form=cf,
        stationary_state=None,
        cp_divisible=core.cp_divisible,
        params={"period": period, "core_kind": core.kind},
    )


def _kernel_state(gen_matrix, d):
    """State spanning the generator kernel, or None when not unique."""
    w, v = np.linalg.eig(gen_matrix)
    scale = max(1.0, float(np.abs(gen_matrix).max()))
    idx = np.where(np.abs(w) <= 1e-9 * scale)[0]
    if len(idx) != 1:
        return None
    x = matcore.unvec(v[:, idx[0]], d)
    tr = np.trace(x)
    if abs(tr) < 1e-10:
        return None
    x = x / tr
    return (x + x.conj().T) / 2.0


# ---------------------------------------------------------------------------
# pure decoherence and its diagonally covariant extension


def _as_matrix_rate(a):
    """Constant matrix or callable t -> matrix, normalized to (func, const)."""
    if callable(a):
        return a, None
    m = matcore.as_matrix(a, square=True)
    return (lambda t: m), m


def pure_decoherence(h=None, a=None, cutoff=None) -> GeneratorFamily:
    """Hamiltonian-diagonal dephasing: the map multiplies rho entrywise.

    The generator acts on matrix units as L(E_ij) = l_ij(t) E_ij with

        l_ij = -i (h_i - h_j) + a_ij - (a_ii + a_jj) / 2,

    so the solution is a Schur multiplier with entries
    exp(integral_0^t l_ij).  The decoherence matrix a(t) must be Hermitian
    and positive semi-definite.

    Parameters
    ----------
    h : sequence of numbers or callables, optional
        Level energies h_i(t); zero when omitted.
    a : array_like or callable
        Decoherence rate matrix, constant or time dependent.
    cutoff : float, optional
        Time t_* past which all coherences are treated as exactly zero; the
        map becomes the (non-invertible) projection onto the diagonal and the
        family is eventually entanglement breaking by construction.
    """
    a_func, a_const = _as_matrix_rate(a)
    a0 = matcore.as_matrix(a_func(0.0), square=True)
    d = a0.shape[0]
    if h is None:
        h = [0.0] * d
    if len(h) != d:
        raise DimensionMismatchError("h must have one entry per level")
    h_rates = [_Rate(x) for x in h]
    for t in (0.0, 0.4, 1.3):
        at = matcore.as_matrix(a_func(t), square=True)
        if not matcore.is_hermitian(at, tol=1e-10):
            raise InvalidRateMatrixError(f"a({t:g}) is not Hermitian")
        if np.linalg.eigvalsh((at + at.conj().T) / 2.0)[0] < -1e-10:
            raise InvalidRateMatrixError(f"a({t:g}) is not positive semi-definite")
        if a_const is not None:
            break
    if cutoff is not None:
        cutoff = float(cutoff)
        if cutoff <= 0.0:
            raise EbdynError("cutoff must be positive")

    def ell(t):
        at = matcore.as_matrix(a_func(t), square=True)
        hv = np.array([r(t) for r in h_rates])
        diag = np.real(np.diag(at))
        m = -1j * (hv[:, None] - hv[None, :]) + at - 0.5 * (
            diag[:, None] + diag[None, :]
        )
        np.fill_diagonal(m, 0.0)
        return m

    if a_const is not None and all(r.constant is not None for r in h_rates):
        ell0 = ell(0.0)

        def ell_integral(t):
            return t * ell0
    else:
        def ell_integral(t):
            val, _ = scipy.integrate.quad_vec(
                lambda s: ell(s).ravel(), 0.0, t, epsabs=1e-10, epsrel=1e-10
            )
            return val.reshape(d, d)

    def schur_diagonal(lam):
        # Schur multiplier as a superoperator: diagonal in the unit basis
        s = np.zeros(d * d, dtype=complex)
        for i in range(d):
            for j in range(d):
                s[i + d * j] = lam[i, j]
        return np.diag(s)

    def coefficients(t):
        if cutoff is not None and t >= cutoff:
            lam = np.eye(d, dtype=complex)
        else:
            lam = np.exp(ell_integral(t))
            np.fill_diagonal(lam, 1.0)
        return lam.ravel(order="F")

    def map_at(t):
        lam = coefficients(t).reshape((d, d), order="F")
        return superop.Superoperator(schur_diagonal(lam), d)

    def gen(t):
        if cutoff is not None and t >= cutoff:
            raise SingularMapError("generator is singular past the coherence cutoff")
        return schur_diagonal(ell(t))

    comps = tuple(
        np.diag((np.arange(d * d) == k).astype(complex)) for k in range(d * d)
    )
    asym = None
    diverges = False
    if cutoff is not None:
        lam_inf = np.eye(d, dtype=complex)
        asym = lam_inf.ravel(order="F").astype(complex)
    elif a_const is not None and all(r.constant is not None for r in h_rates):
        ell0 = ell(0.0)
        lam_inf = np.zeros((d, d), dtype=complex)
        for i in range(d):
            for j in range(d):
                if i == j:
                    lam_inf[i, j] = 1.0
                elif ell0[i, j].real < -1e-12:
                    lam_inf[i, j] = 0.0
                elif abs(ell0[i, j]) <= 1e-12:
                    lam_inf[i, j] = 1.0
                else:  # purely oscillatory coherence
                    diverges = True
        if diverges:
            asym = None
        else:
            asym = lam_inf.ravel(order="F")
    cf = ClosedFormSolution(
        map_at=map_at,
        components=comps,
        coefficients=coefficients,
        asymptotic_coefficients=asym,
        diverges=diverges,
    )
    constant = (
        a_const is not None
        and cutoff is None
        and all(r.constant is not None for r in h_rates)
    )
    return GeneratorFamily(
        d=d,
        kind="pure_decoherence",
        generator_matrix=gen,
        commutative=True,
        constant=constant,
        closed_form=cf,
        stationary_state=None,
        cp_divisible=True,
        params={"cutoff": cutoff, "eventually_eb": cutoff is not None},
    )


def diagonally_covariant(h, a, b) -> GeneratorFamily:
    """Pure decoherence plus classical population transfer.

    Adds to the dephasing generator the term
    sum_{i != j} b_ij(t) (E_ij rho E_ji - {E_jj, rho}/2), a classical master
    equation on the populations with transition rates b_ij >= 0 (into i,
    out of j).
    """
    dec = pure_decoherence(h, a)
    d = dec.d
    b_func, b_const = _as_matrix_rate(b)
    for t in (0.0, 0.4, 1.3):
        bt = matcore.as_matrix(b_func(t), square=True)
        if bt.shape[0] != d:
            raise DimensionMismatchError("b dimension mismatch")
        off = bt - np.diag(np.diag(bt))
        if float(np.abs(off.imag).max()) > 1e-12 or float(off.real.min()) < -1e-12:
            raise InvalidRateMatrixError(f"b({t:g}) has invalid off-diagonal rates")
        if b_const is not None:
            break
    hop = [
        (i, j, _dissipator(matcore.matrix_unit(d, i, j)))
        for i in range(d)
        for j in range(d)
        if i != j
    ]

    def gen(t):
        m = dec.generator_matrix(t).copy()
        bt = matcore.as_matrix(b_func(t), square=True)
        for i, j, dmat in hop:
            m += bt[i, j].real * dmat
        return m

    constant = dec.constant and b_const is not None
    _check_trace_annihilating(gen, d)
    return GeneratorFamily(
        d=d,
        kind="diagonally_covariant",
        generator_matrix=gen,
        commutative=True if constant else _sampled_commutative(gen),
        constant=constant,
        closed_form=None,
        stationary_state=None,
        cp_divisible=True,
        params={},
    )
