"""Measured quantities: reduced density matrices, entanglement asymmetry,
energies, charge statistics, and eigenstate-overlap histograms.

The subsystem for entanglement quantities is the first ``l`` contiguous
sites (the most significant bits of the basis index); with periodic
boundaries and disorder averaging the block position carries no
information, so it is fixed for determinism.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .evolution import SpectralDecomposition, apply_matrix
from .hilbert import charge_diagonal

ENTROPY_FLOOR = 1e-14
NEGATIVE_EIGENVALUE_TOL = 1e-10


def _infer_sites(dim: int) -> int:
    L = int(round(np.log2(dim)))
    if 2**L != dim:
        raise ValueError(f"dimension {dim} is not a power of two")
    return L


def partial_trace(psi: np.ndarray, l: int) -> np.ndarray:
    """Reduced density matrix of the first l sites of a pure state."""
    L = _infer_sites(psi.shape[0])
    if not 1 <= l < L:
        raise ValueError(f"subsystem size must satisfy 1 <= l < {L}, got {l}")
    M = psi.reshape(2**l, 2 ** (L - l))
    return M @ M.conj().T


def von_neumann_entropy(rho: np.ndarray) -> float:
    """S = -Tr(rho ln rho) in nats.

    Eigenvalues in [-1e-10, 0) are clamped to zero; anything more negative
    signals a broken density matrix and raises. Weights below 1e-14
    contribute nothing.
    """
    w = np.linalg.eigvalsh(rho)
    if w.min() < -NEGATIVE_EIGENVALUE_TOL:
        raise ValueError(f"density matrix has eigenvalue {w.min():.3e} < -1e-10")
    w = w[w > ENTROPY_FLOOR]
    return float(-(w @ np.log(w)))


def symmetry_resolved_rdm(rho: np.ndarray) -> np.ndarray:
    """Project out coherences between subsystem charge sectors.

    Equivalent to sum_q Pi_q rho Pi_q; in the computational basis this
    just zeroes every element connecting different Q_A eigenvalues, so the
    trace and the diagonal are untouched.
    """
    l = _infer_sites(rho.shape[0])
    qa = charge_diagonal(l)
    return np.where(qa[:, None] == qa[None, :], rho, 0.0)


def entanglement_asymmetry(psi: np.ndarray, l: int) -> float:
    """Delta S_A = S(rho_{A,Q}) - S(rho_A) for the first l sites."""
    rho = partial_trace(psi, l)
    return von_neumann_entropy(symmetry_resolved_rdm(rho)) - von_neumann_entropy(rho)


def energy_expectation(psi: np.ndarray, H: np.ndarray) -> float:
    """Real <psi|H|psi>; asserts the imaginary part is numerical noise."""
    if psi.shape[0] != H.shape[0]:
        raise ValueError(f"state dim {psi.shape[0]} != operator dim {H.shape[0]}")
    value = np.vdot(psi, H @ psi)
    scale = 1.0 + abs(value)
    if abs(value.imag) > 1e-10 * scale:
        raise ValueError(f"<H> has imaginary part {value.imag:.3e}")
    return float(value.real)


def charge_variance(psi: np.ndarray) -> float:
    """sigma_Q^2 = <Q^2> - <Q>^2 for the total charge."""
    q = charge_diagonal(_infer_sites(psi.shape[0]))
    p = np.abs(psi) ** 2
    mean = q @ p
    return float((q.astype(float) ** 2) @ p - mean**2)


def charge_sector_probs(psi: np.ndarray) -> dict[int, float]:
    """P_Q = sum of |amplitude|^2 over the basis states of each sector."""
    L = _infer_sites(psi.shape[0])
    counts = np.bitwise_count(np.arange(2**L, dtype=np.uint64)).astype(np.int64)
    weights = np.bincount(counts, weights=np.abs(psi) ** 2, minlength=L + 1)
    return {L - 2 * k: float(weights[k]) for k in range(L + 1)}


@dataclass(frozen=True, eq=False)
class OverlapHistogram:
    """Binned |<n|psi>|^2 weights over the eigenenergy axis; mass-normalized."""

    bin_edges: np.ndarray
    weights: np.ndarray

    @property
    def bin_centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])

    def mean_energy(self) -> float:
        return float(self.bin_centers @ self.weights)


def eigenstate_overlap_hist(psi: np.ndarray, sd: SpectralDecomposition, bins=60) -> OverlapHistogram:
    """Histogram of eigenstate overlap weights |c_n|^2 over energy.

    ``bins`` is either a count (uniform bins spanning [E_min, E_max] of the
    decomposition) or an explicit edge array, which must cover the whole
    spectrum.
    """
    if psi.shape[0] != sd.dim:
        raise ValueError(f"state dim {psi.shape[0]} != operator dim {sd.dim}")
    E = sd.eigenvalues
    if np.isscalar(bins):
        edges = np.linspace(E[0], E[-1], int(bins) + 1)
    else:
        edges = np.asarray(bins, dtype=float)
        if E[0] < edges[0] or E[-1] > edges[-1]:
            raise ValueError("bin edges do not cover the full spectrum")
    c = apply_matrix(sd.eigenvectors.conj().T, psi.astype(complex, copy=False))
    weights, _ = np.histogram(E, bins=edges, weights=np.abs(c) ** 2)
    return OverlapHistogram(bin_edges=edges, weights=weights)
