"""Dense operator construction for the disordered XYZ spin-1/2 chain.

Basis convention: basis index ``i`` encodes the spin string with site 0 as
the most significant bit, and ``sigma^z|0> = +|0>``. All operators are dense
``complex128`` arrays of shape ``(2**L, 2**L)``; Hamiltonians are Hermitian
to 1e-12 by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)


@dataclass(frozen=True, eq=False)
class ModelParams:
    """Couplings of the chain Hamiltonian.

    gamma = 1 is the U(1)-symmetric point; any other value breaks the
    symmetry. ``fields`` is the per-site longitudinal field vector h_j and
    may be None in templates that get their disorder filled in later.
    """

    L: int
    gamma: float
    mu: float = -0.5
    W: float = 1.0
    fields: np.ndarray | None = None
    periodic: bool = True

    def __post_init__(self):
        if int(self.L) != self.L or self.L < 3:
            raise ValueError(f"L must be an integer >= 3, got {self.L}")
        if self.W < 0:
            raise ValueError(f"W must be >= 0, got {self.W}")
        if self.fields is not None:
            h = np.ascontiguousarray(np.asarray(self.fields, dtype=float))
            if h.shape != (self.L,):
                raise ValueError(
                    f"fields must have length L={self.L}, got shape {h.shape}"
                )
            h.setflags(write=False)
            object.__setattr__(self, "fields", h)

    def with_fields(self, fields) -> "ModelParams":
        return ModelParams(self.L, self.gamma, self.mu, self.W, fields, self.periodic)

    def with_gamma(self, gamma) -> "ModelParams":
        return ModelParams(self.L, gamma, self.mu, self.W, self.fields, self.periodic)


@dataclass(frozen=True, eq=False)
class ChargeSector:
    """Total-charge eigenvalue Q and the basis indices carrying it."""

    Q: int
    indices: np.ndarray


def _site_bits(L: int) -> np.ndarray:
    """(2**L, L) array of bits, site 0 in column 0 (most significant)."""
    idx = np.arange(2**L, dtype=np.uint64)
    shifts = np.arange(L - 1, -1, -1, dtype=np.uint64)
    return ((idx[:, None] >> shifts[None, :]) & 1).astype(np.int64)


def sz_diagonal(L: int) -> np.ndarray:
    """(2**L, L) array of sigma^z eigenvalues (+1 for bit 0, -1 for bit 1)."""
    return 1 - 2 * _site_bits(L)


def charge_diagonal(L: int) -> np.ndarray:
    """Diagonal of the total charge operator Q = sum_j sigma^z_j."""
    idx = np.arange(2**L, dtype=np.uint64)
    return L - 2 * np.bitwise_count(idx).astype(np.int64)


def _bonds(L: int, periodic: bool) -> list[tuple[int, int]]:
    bonds = [(j, j + 1) for j in range(L - 1)]
    if periodic:
        bonds.append((L - 1, 0))
    return bonds


def build_hamiltonian(p: ModelParams) -> np.ndarray:
    """Dense chain Hamiltonian.

    H = -sum_j (sx_j sx_{j+1} + gamma sy_j sy_{j+1} + mu sz_j sz_{j+1})
        + sum_j h_j sz_j

    with sigma_{L+1} = sigma_1 under periodic boundaries. Matrix elements
    are accumulated per bond with bit arithmetic: the xx+yy part couples
    ``i`` to ``i ^ mask`` with weight ``-1 + gamma * sz_a(i) * sz_b(i)``,
    everything else is diagonal.
    """
    if p.fields is None:
        raise ValueError("ModelParams.fields must be set to build a Hamiltonian")
    L = p.L
    dim = 2**L
    sz = sz_diagonal(L)
    idx = np.arange(dim)

    H = np.zeros((dim, dim), dtype=complex)
    diag = sz.astype(float) @ p.fields
    for a, b in _bonds(L, p.periodic):
        diag -= p.mu * (sz[:, a] * sz[:, b])
        mask = (1 << (L - 1 - a)) | (1 << (L - 1 - b))
        H[idx ^ mask, idx] += -1.0 + p.gamma * sz[:, a] * sz[:, b]
    H[idx, idx] += diag
    return H


def hamiltonian_sector_block(p: ModelParams, indices: np.ndarray) -> np.ndarray:
    """One invariant diagonal block of H, built directly in the sector basis.

    ``indices`` must span an invariant subspace (a charge sector at
    gamma = 1); any bond amplitude that would leave the subspace must
    vanish identically, which is verified. Returns a real symmetric block,
    the form consumed by the spectral diagnostics.
    """
    if p.fields is None:
        raise ValueError("ModelParams.fields must be set to build a Hamiltonian")
    L = p.L
    idx = np.asarray(indices, dtype=np.int64)
    m = idx.size
    pos = np.full(2**L, -1, dtype=np.int64)
    pos[idx] = np.arange(m)
    shifts = np.arange(L - 1, -1, -1, dtype=np.int64)
    sz = 1 - 2 * ((idx[:, None] >> shifts[None, :]) & 1)

    B = np.zeros((m, m))
    rows = np.arange(m)
    diag = sz.astype(float) @ p.fields
    for a, b in _bonds(L, p.periodic):
        diag -= p.mu * (sz[:, a] * sz[:, b])
        mask = (1 << (L - 1 - a)) | (1 << (L - 1 - b))
        partner = pos[idx ^ mask]
        coeff = -1.0 + p.gamma * sz[:, a] * sz[:, b]
        inside = partner >= 0
        if np.abs(coeff[~inside]).max(initial=0.0) > 1e-14:
            raise ValueError("indices do not span an invariant subspace of H")
        B[partner[inside], rows[inside]] += coeff[inside]
    B[rows, rows] += diag
    return B


def build_charge_operator(L: int) -> np.ndarray:
    """Total charge Q = sum_j sigma^z_j as a dense diagonal operator."""
    if L < 1:
        raise ValueError("L must be >= 1")
    return np.diag(charge_diagonal(L).astype(complex))


def charge_sectors(L: int) -> list[ChargeSector]:
    """Partition of the basis by total charge, ordered by ascending Q."""
    if L < 1:
        raise ValueError("L must be >= 1")
    q = charge_diagonal(L)
    sectors = []
    for Q in range(-L, L + 1, 2):
        indices = np.flatnonzero(q == Q)
        indices.setflags(write=False)
        sectors.append(ChargeSector(Q=Q, indices=indices))
    return sectors


def parity_sectors(L: int) -> list[np.ndarray]:
    """Index partition by spin-flip parity (-1)^(number of down spins).

    Every bond term flips zero or two spins, so this parity is conserved
    for all couplings; it halves the diagonalization blocks when the finer
    charge partition is unavailable (gamma != 1).
    """
    counts = np.bitwise_count(np.arange(2**L, dtype=np.uint64))
    return [np.flatnonzero(counts % 2 == 0), np.flatnonzero(counts % 2 == 1)]


def build_rotation(L: int, theta: float) -> np.ndarray:
    """Global y-rotation U = exp(-i theta/2 sum_j sigma^y_j).

    Tensor power of [[cos(t/2), -sin(t/2)], [sin(t/2), cos(t/2)]].
    """
    if L < 1:
        raise ValueError("L must be >= 1")
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    site = np.array([[c, -s], [s, c]], dtype=complex)
    U = np.array([[1.0]], dtype=complex)
    for _ in range(L):
        U = np.kron(U, site)
    return U


def build_transformed_hamiltonian(p: ModelParams, theta: float) -> np.ndarray:
    """Closed form of U_theta^dag H U_theta.

    With U_theta = exp(-i t/2 sum sy), conjugation sends sx -> sx cos t +
    sz sin t and sz -> sz cos t - sx sin t, so

    H' = -sum_j [ (cos^2 t + mu sin^2 t) sx sx + gamma sy sy
                  + (sin^2 t + mu cos^2 t) sz sz ]
         - sum_j (sx_j sz_{j+1} + sz_j sx_{j+1}) (1 - mu) sin t cos t
         + sum_j h_j (sz_j cos t - sx_j sin t)
    """
    if p.fields is None:
        raise ValueError("ModelParams.fields must be set to build a Hamiltonian")
    L = p.L
    dim = 2**L
    sz = sz_diagonal(L)
    idx = np.arange(dim)
    ct, st = np.cos(theta), np.sin(theta)
    cxx = ct**2 + p.mu * st**2
    czz = st**2 + p.mu * ct**2
    cxz = -(1.0 - p.mu) * st * ct

    H = np.zeros((dim, dim), dtype=complex)
    diag = ct * (sz.astype(float) @ p.fields)
    for a, b in _bonds(L, p.periodic):
        diag -= czz * (sz[:, a] * sz[:, b])
        mask_a = 1 << (L - 1 - a)
        mask_b = 1 << (L - 1 - b)
        # two-site flips: xx with the tilted coefficient, yy unchanged
        H[idx ^ (mask_a | mask_b), idx] += -cxx + p.gamma * sz[:, a] * sz[:, b]
        # single-site flips from the sx sz + sz sx cross terms
        H[idx ^ mask_a, idx] += cxz * sz[:, b]
        H[idx ^ mask_b, idx] += cxz * sz[:, a]
    for j in range(L):
        H[idx ^ (1 << (L - 1 - j)), idx] += -p.fields[j] * st
    H[idx, idx] += diag
    return H
