"""Shared random-instance generators for the test suite.

Everything takes an explicit ``numpy.random.Generator`` so each test pins
its own seed; there is no module-level randomness.
"""

import numpy as np

from ebdyn import families, matcore, superop


def ginibre(rng, rows, cols=None):
    if cols is None:
        cols = rows
    return rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))


def random_hermitian(rng, d, scale=1.0):
    g = ginibre(rng, d)
    return scale * (g + g.conj().T) / 2


def random_density(rng, d):
    """Full-rank density matrix (Hilbert-Schmidt measure)."""
    g = ginibre(rng, d)
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_unitary(rng, d):
    """Haar-distributed unitary via QR with phase correction."""
    q, r = np.linalg.qr(ginibre(rng, d))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_kraus(rng, d, n_kraus=None):
    """Kraus operators of a random CPTP map (Stinespring blocks)."""
    if n_kraus is None:
        n_kraus = d
    q, _ = np.linalg.qr(ginibre(rng, n_kraus * d, d))
    return [q[k * d : (k + 1) * d, :] for k in range(n_kraus)]


def random_cptp(rng, d, n_kraus=None):
    ks = random_kraus(rng, d, n_kraus)
    return superop.from_action(d, lambda x: sum(k @ x @ k.conj().T for k in ks))


def random_eb_map(rng, d, n_outcomes=None):
    """Measure-and-prepare channel: entanglement breaking by construction."""
    if n_outcomes is None:
        n_outcomes = d * d
    gs = []
    for _ in range(n_outcomes):
        g = ginibre(rng, d)
        gs.append(g @ g.conj().T)
    s = sum(gs)
    vals, vecs = np.linalg.eigh(s)
    s_inv_half = vecs @ np.diag(vals ** -0.5) @ vecs.conj().T
    povm = [s_inv_half @ g @ s_inv_half for g in gs]
    prep = [random_density(rng, d) for _ in range(n_outcomes)]
    return superop.from_action(
        d,
        lambda x: sum(np.trace(m @ x) * sig for m, sig in zip(povm, prep)),
    )


def random_hp_map(rng, d, shift=0.0):
    """Hermiticity-preserving map from a random Hermitian Choi matrix.

    ``shift`` moves the Choi spectrum up, letting callers sweep from
    indefinite (entangled-ish) to comfortably positive instances.
    """
    c = random_hermitian(rng, d * d) + shift * np.eye(d * d)
    return superop.from_choi(superop.ChoiMatrix(c, d))


def random_gkls_family(rng, d, n_jumps=2, with_hamiltonian=True):
    """Random GKLS semigroup; dense jumps make the kernel generically simple."""
    h = random_hermitian(rng, d) if with_hamiltonian else np.zeros((d, d))
    jumps = [(ginibre(rng, d) / np.sqrt(d), rng.uniform(0.5, 1.5)) for _ in range(n_jumps)]
    return families.gkls(h, jumps)


def generator_kernel(family, tol=1e-9):
    """Kernel dimension and hermitized kernel state of a constant generator.

    Independent of the package's own spectral analysis: plain ``eig`` on the
    generator matrix, used by tests to verify eligibility assumptions.
    """
    gen = family.generator_matrix(0.0)
    vals, vecs = np.linalg.eig(gen)
    idx = [i for i, v in enumerate(vals) if abs(v) < tol]
    if len(idx) != 1:
        return len(idx), None
    x = matcore.unvec(vecs[:, idx[0]], family.d)
    x = (x + x.conj().T) / 2
    tr = np.trace(x).real
    if abs(tr) < 1e-12:
        return 1, None
    return 1, x / tr


def choi_min_eig(phi):
    return matcore.min_herm_eig(superop.to_choi(phi).matrix)


def choi_pt_min_eig(phi):
    return matcore.min_herm_eig(superop.to_choi(phi).partial_transpose().matrix)
