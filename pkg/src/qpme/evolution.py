"""Spectral decomposition and real/imaginary time propagation.

Propagation goes through a full eigendecomposition: exact at these sizes,
and one decomposition per Hamiltonian serves every time point and protocol
variant. Imaginary-time weights are computed as exp(-(E - E_min) tau) so
large tau never underflows the retained spectral weight.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hilbert import ModelParams, build_hamiltonian

HERMITICITY_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Eigenvalues (ascending) and eigenvector columns of a Hermitian operator.

    Eigenvectors stay float64 when the operator is numerically real; all
    consumers handle either dtype.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    @property
    def ground_energy(self) -> float:
        return float(self.eigenvalues[0])


def apply_matrix(M: np.ndarray, x: np.ndarray) -> np.ndarray:
    """M @ x without upcasting a large real M to complex.

    numpy would otherwise materialize a complex copy of M when x is
    complex; splitting x into real and imaginary parts keeps the BLAS call
    on the real matrix.
    """
    if np.iscomplexobj(x) and not np.iscomplexobj(M):
        return M @ np.ascontiguousarray(x.real) + 1j * (M @ np.ascontiguousarray(x.imag))
    return M @ x


def _to_modes(sd: SpectralDecomposition, x: np.ndarray) -> np.ndarray:
    return apply_matrix(sd.eigenvectors.conj().T, x)


def _from_modes(sd: SpectralDecomposition, c: np.ndarray) -> np.ndarray:
    return apply_matrix(sd.eigenvectors, c)


def spectral_decompose(H: np.ndarray, sectors=None) -> SpectralDecomposition:
    """Eigendecomposition of a Hermitian operator.

    Parameters
    ----------
    H : (d, d) Hermitian array.
    sectors : optional list of index arrays partitioning range(d) into
        invariant subspaces; each block is diagonalized separately and the
        results merged. The caller asserts invariance (charge sectors at
        gamma = 1, parity sectors otherwise); a residual probe guards
        against a wrong partition.

    Raises
    ------
    ValueError on non-Hermitian input (max-norm asymmetry > 1e-10) or a
    sector list that is not a partition / not invariant.
    """
    H = np.asarray(H)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {H.shape}")
    work = H
    if np.iscomplexobj(H) and abs(H.imag).max() < 1e-12:
        # numerically real: check symmetry of the real part (the imaginary
        # part is already bounded far below the Hermiticity tolerance) and
        # diagonalize with the ~3x faster real solver
        work = np.ascontiguousarray(H.real)
        if np.abs(work - work.T).max() > HERMITICITY_TOL:
            raise ValueError("matrix is not Hermitian within 1e-10")
    elif np.abs(H - H.conj().T).max() > HERMITICITY_TOL:
        raise ValueError("matrix is not Hermitian within 1e-10")

    if sectors is None:
        eigenvalues, eigenvectors = np.linalg.eigh(work)
    else:
        dim = H.shape[0]
        counts = np.zeros(dim, dtype=int)
        for idx in sectors:
            counts[np.asarray(idx)] += 1
        if not np.all(counts == 1):
            raise ValueError("sectors do not partition the basis")
        eigenvalues = np.empty(dim, dtype=float)
        eigenvectors = np.zeros((dim, dim), dtype=work.dtype)
        col = 0
        for idx in sectors:
            idx = np.asarray(idx)
            w, v = np.linalg.eigh(work[np.ix_(idx, idx)])
            eigenvalues[col : col + idx.size] = w
            eigenvectors[idx, col : col + idx.size] = v
            col += idx.size
        order = np.argsort(eigenvalues, kind="stable")
        eigenvalues = eigenvalues[order]
        eigenvectors = eigenvectors[:, order]
        _check_block_residual(H, eigenvalues, eigenvectors)
    return SpectralDecomposition(eigenvalues=eigenvalues, eigenvectors=eigenvectors)


def _check_block_residual(H, eigenvalues, eigenvectors):
    """Probe ||H v - V E V^dag v|| on fixed random vectors.

    Cheap O(d^2) insurance that the supplied sectors really are invariant
    subspaces of H.
    """
    rng = np.random.default_rng(1234)
    scale = 1.0 + abs(eigenvalues).max()
    for _ in range(2):
        v = rng.standard_normal(H.shape[0])
        lhs = apply_matrix(H, v)
        rhs = apply_matrix(eigenvectors, eigenvalues * apply_matrix(eigenvectors.conj().T, v))
        if np.abs(lhs - rhs).max() > 1e-8 * scale:
            raise ValueError("sector partition is not invariant under H")


def propagate_real(psi: np.ndarray, sd: SpectralDecomposition, t: float) -> np.ndarray:
    """Unitary evolution psi(t) = V exp(-i E t) V^dag psi."""
    if psi.shape[0] != sd.dim:
        raise ValueError(f"state dim {psi.shape[0]} != operator dim {sd.dim}")
    if t < 0:
        raise ValueError("t must be >= 0")
    c = _to_modes(sd, psi.astype(complex, copy=False))
    return _from_modes(sd, np.exp(-1j * sd.eigenvalues * t) * c)


def propagate_imag(psi: np.ndarray, sd: SpectralDecomposition, tau: float) -> np.ndarray:
    """Normalized imaginary-time evolution exp(-H tau) psi / ||.||.

    The exponent is shifted by E_min, which cancels in the normalization
    but keeps the weights representable at any tau.
    """
    if psi.shape[0] != sd.dim:
        raise ValueError(f"state dim {psi.shape[0]} != operator dim {sd.dim}")
    if tau < 0:
        raise ValueError("tau must be >= 0")
    if np.linalg.norm(psi) < 1e-12:
        raise ValueError("cannot propagate a zero state")
    c = _to_modes(sd, psi.astype(complex, copy=False))
    c = np.exp(-(sd.eigenvalues - sd.eigenvalues[0]) * tau) * c
    out = _from_modes(sd, c)
    return out / np.linalg.norm(out)


@dataclass(frozen=True, eq=False)
class ProtocolStage:
    """One piecewise-constant leg of a protocol."""

    params: ModelParams
    duration: float
    kind: str  # "real" | "imaginary"

    def __post_init__(self):
        if self.kind not in ("real", "imaginary"):
            raise ValueError(f"kind must be 'real' or 'imaginary', got {self.kind!r}")
        if self.duration < 0:
            raise ValueError("stage duration must be >= 0")


def _stage_states(psi_start, sd, kind, local_times):
    """States at several local times of one stage, batched into one GEMM."""
    c = _to_modes(sd, psi_start)
    times = np.asarray(local_times, dtype=float)
    if kind == "real":
        weights = np.exp(np.outer(sd.eigenvalues, -1j * times))
    else:
        weights = np.exp(np.outer(sd.eigenvalues - sd.eigenvalues[0], -times))
    block = _from_modes(sd, weights * c[:, None])
    if kind == "imaginary":
        block = block / np.linalg.norm(block, axis=0, keepdims=True)
    return block


def run_protocol(
    psi0: np.ndarray,
    stages: list[ProtocolStage],
    grid,
    decompositions: list[SpectralDecomposition] | None = None,
) -> list[tuple[float, np.ndarray]]:
    """Evolve psi0 through ordered stages, observing at the grid times.

    The grid is strictly increasing and lives within the total protocol
    duration; the time axis is cumulative across stages. A grid point that
    lands exactly on a stage boundary is evaluated from the end of the
    earlier stage (left-continuous, which is also what continuity of the
    state gives). Each stage's Hamiltonian is decomposed once; precomputed
    decompositions can be passed to share them across protocols.
    """
    if not stages:
        raise ValueError("protocol needs at least one stage")
    sizes = {st.params.L for st in stages}
    if len(sizes) != 1:
        raise ValueError(f"stages mix system sizes: {sorted(sizes)}")
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("grid must be a nonempty 1-d sequence")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")
    if grid[0] < 0:
        raise ValueError("grid times must be >= 0")
    boundaries = np.concatenate([[0.0], np.cumsum([st.duration for st in stages])])
    if grid[-1] > boundaries[-1] + 1e-9:
        raise ValueError(
            f"grid point {grid[-1]} exceeds total protocol duration {boundaries[-1]}"
        )
    if decompositions is None:
        decompositions = [spectral_decompose(build_hamiltonian(st.params)) for st in stages]
    if len(decompositions) != len(stages):
        raise ValueError("need one decomposition per stage")

    psi0 = psi0.astype(complex, copy=False)
    out: list[tuple[float, np.ndarray]] = [(float(t), psi0.copy()) for t in grid[grid <= 0]]
    psi_start = psi0
    for i, (stage, sd) in enumerate(zip(stages, decompositions)):
        lo, hi = boundaries[i], boundaries[i + 1]
        if i == len(stages) - 1:
            hi += 1e-9  # grid[-1] may sit a rounding error past the end
        in_stage = (grid > lo) & (grid <= hi)
        local = list(np.minimum(grid[in_stage] - lo, stage.duration))
        # always step to the stage end to seed the next stage
        block = _stage_states(psi_start, sd, stage.kind, local + [stage.duration])
        for k, t in enumerate(grid[in_stage]):
            out.append((float(t), block[:, k].copy()))
        psi_start = block[:, -1]
    return out
