"""Disorder sampling, seeded realization sweeps, and protocol comparison.

Within one realization every protocol sees the identical field vector, so
protocol curves are paired samples and their crossings are meaningful.
Several ensemble specs that share the model template, seed, and
realization count can be evaluated in one sweep (`run_ensemble_batch`),
which also shares each Hamiltonian's eigendecomposition across all
protocols and specs that use it; at L = 12 this dominates the runtime.

Disorder streams are counter-based: realization i of master seed s is
drawn from Philox keyed by (s, i), so any single realization is
reproducible in isolation and results are independent of worker count.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from functools import partial

import numpy as np

from .evolution import ProtocolStage, apply_matrix, run_protocol, spectral_decompose
from .hilbert import (
    ModelParams,
    build_hamiltonian,
    charge_diagonal,
    charge_sectors,
    parity_sectors,
)
from .observables import entanglement_asymmetry
from .states import tilted_ferromagnet, tilted_neel

OBSERVABLES = ("ea", "energy", "cv", "pq", "pe")
STATE_KINDS = ("ferro", "neel")


@dataclass(frozen=True)
class StageSpec:
    """Stage of a protocol: anisotropy, duration, and time kind."""

    gamma: float
    duration: float
    kind: str  # "real" | "imaginary"


@dataclass(frozen=True)
class ProtocolSpec:
    name: str
    stages: tuple[StageSpec, ...]

    def total_duration(self) -> float:
        return sum(st.duration for st in self.stages)


@dataclass(frozen=True, eq=False)
class EnsembleSpec:
    """One comparable experiment: shared initial state, grid, and disorder.

    ``model`` is a template whose ``fields`` stay None; each realization
    fills them from the seeded stream. All protocols share the initial
    state and observation grid so their curves are directly comparable.
    """

    model: ModelParams
    state_kind: str
    theta_over_pi: float
    protocols: tuple[ProtocolSpec, ...]
    grid: tuple[float, ...]
    observables: tuple[str, ...]
    subsystem_size: int | None = None
    pe_bins: int = 60
    n_realizations: int = 100
    master_seed: int = 0

    def subsystem(self) -> int:
        if self.subsystem_size is not None:
            return self.subsystem_size
        return max(1, round(self.model.L / 3))


@dataclass(eq=False)
class EnsembleSeries:
    """Per-time mean and standard error of one observable curve.

    For the overlap histogram observable the ``times`` axis holds bin
    centers instead of times.
    """

    protocol: str
    observable: str
    times: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    n_realizations: int


def sample_fields(master_seed: int, realization_index: int, L: int, W: float) -> np.ndarray:
    """L i.i.d. uniform draws on [-W, W] from the (seed, index) keyed stream."""
    if W < 0:
        raise ValueError("W must be >= 0")
    key = (int(master_seed) % 2**64) * 2**64 + (int(realization_index) % 2**64)
    rng = np.random.Generator(np.random.Philox(key=key))
    return rng.uniform(-W, W, size=L)


def _validate_spec(spec: EnsembleSpec):
    if spec.model.fields is not None:
        raise ValueError("EnsembleSpec.model is a template; leave fields unset")
    if spec.state_kind not in STATE_KINDS:
        raise ValueError(f"unknown state kind {spec.state_kind!r}")
    if spec.state_kind == "neel" and spec.model.L % 2 != 0:
        raise ValueError("neel initial state needs even L")
    if not 0.0 <= spec.theta_over_pi <= 1.0:
        raise ValueError("theta_over_pi must lie in [0, 1]")
    if not spec.protocols:
        raise ValueError("spec needs at least one protocol")
    names = [p.name for p in spec.protocols]
    if len(set(names)) != len(names):
        raise ValueError(f"protocol names must be unique, got {names}")
    for obs in spec.observables:
        if obs not in OBSERVABLES:
            raise ValueError(f"unknown observable {obs!r}; expected one of {OBSERVABLES}")
    if not spec.observables:
        raise ValueError("spec needs at least one observable")
    grid = np.asarray(spec.grid, dtype=float)
    if grid.size == 0 or np.any(np.diff(grid) <= 0) or grid[0] < 0:
        raise ValueError("grid must be nonempty, strictly increasing, and >= 0")
    for proto in spec.protocols:
        for st in proto.stages:
            if st.kind not in ("real", "imaginary"):
                raise ValueError(f"bad stage kind {st.kind!r} in protocol {proto.name!r}")
        if grid[-1] > proto.total_duration() + 1e-9:
            raise ValueError(
                f"grid exceeds duration of protocol {proto.name!r} "
                f"({grid[-1]} > {proto.total_duration()})"
            )
    if "ea" in spec.observables and not 1 <= spec.subsystem() < spec.model.L:
        raise ValueError(f"subsystem size {spec.subsystem()} out of range for L={spec.model.L}")
    if spec.n_realizations < 1:
        raise ValueError("need at least one realization")


def _initial_state(spec: EnsembleSpec) -> np.ndarray:
    theta = spec.theta_over_pi * np.pi
    if spec.state_kind == "ferro":
        return tilted_ferromagnet(spec.model.L, theta)
    return tilted_neel(spec.model.L, theta)


class _DecompositionCache:
    """Per-realization eigendecompositions keyed by stage gamma.

    gamma = 1 diagonalizes inside charge sectors, anything else inside the
    two spin-flip-parity sectors; both partitions are exactly invariant for
    these Hamiltonians and much cheaper than the full dense problem.
    """

    def __init__(self, template: ModelParams, fields: np.ndarray):
        self.template = template
        self.fields = fields
        self._cache = {}

    def get(self, gamma: float):
        key = float(gamma)
        if key not in self._cache:
            params = replace(self.template, gamma=key, fields=None).with_fields(self.fields)
            H = build_hamiltonian(params)
            if key == 1.0:
                sectors = [s.indices for s in charge_sectors(params.L)]
            else:
                sectors = parity_sectors(params.L)
            self._cache[key] = spectral_decompose(H, sectors=sectors)
        return self._cache[key]


def _evaluate_protocol(spec, proto, psi0, cache, grid):
    stages = [
        ProtocolStage(
            params=replace(spec.model, gamma=st.gamma, fields=None).with_fields(cache.fields),
            duration=st.duration,
            kind=st.kind,
        )
        for st in proto.stages
    ]
    decomps = [cache.get(st.gamma) for st in proto.stages]
    states = run_protocol(psi0, stages, grid, decompositions=decomps)
    Psi = np.column_stack([psi for _, psi in states])

    out = {}
    L = spec.model.L
    if "energy" in spec.observables:
        sym = cache.get(1.0)
        modes = np.abs(apply_matrix(sym.eigenvectors.conj().T, Psi)) ** 2
        out["energy"] = sym.eigenvalues @ modes
    if "ea" in spec.observables:
        l = spec.subsystem()
        out["ea"] = np.array([entanglement_asymmetry(Psi[:, k], l) for k in range(Psi.shape[1])])
    if "cv" in spec.observables or "pq" in spec.observables:
        probs = np.abs(Psi) ** 2
        q = charge_diagonal(L).astype(float)
        if "cv" in spec.observables:
            out["cv"] = (q**2) @ probs - (q @ probs) ** 2
        if "pq" in spec.observables:
            counts = np.bitwise_count(np.arange(2**L, dtype=np.uint64)).astype(np.int64)
            pq = np.zeros((L + 1, probs.shape[1]))
            for k in range(L + 1):
                pq[k] = probs[counts == k].sum(axis=0)
            out["pq"] = pq  # row k <-> charge Q = L - 2k
    if "pe" in spec.observables:
        sd0 = decomps[0]
        c0 = apply_matrix(sd0.eigenvectors.conj().T, psi0)
        out["pe"] = (sd0.eigenvalues.copy(), np.abs(c0) ** 2)
    return out


def _run_realization(specs: tuple[EnsembleSpec, ...], r: int):
    """All protocol/observable values of realization r, for every spec."""
    try:
        base = specs[0]
        fields = sample_fields(base.master_seed, r, base.model.L, base.model.W)
        cache = _DecompositionCache(base.model, fields)
        results = []
        for spec in specs:
            psi0 = _initial_state(spec)
            grid = np.asarray(spec.grid, dtype=float)
            results.append(
                {proto.name: _evaluate_protocol(spec, proto, psi0, cache, grid) for proto in spec.protocols}
            )
        return results
    except Exception as exc:
        raise RuntimeError(f"realization {r} failed: {exc}") from exc


def _aggregate(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Mean and standard error over the realization axis (axis 0)."""
    n = values.shape[0]
    mean = values.mean(axis=0)
    if n > 1:
        stderr = values.std(axis=0, ddof=1) / np.sqrt(n)
    else:
        stderr = np.zeros_like(mean)
    return mean, stderr


def _collect_series(spec: EnsembleSpec, per_real: list[dict]) -> list[EnsembleSeries]:
    grid = np.asarray(spec.grid, dtype=float)
    n = spec.n_realizations
    series: list[EnsembleSeries] = []
    for proto in spec.protocols:
        for obs in spec.observables:
            rows = [per_real[r][proto.name][obs] for r in range(n)]
            if obs in ("ea", "energy", "cv"):
                mean, err = _aggregate(np.stack(rows))
                series.append(EnsembleSeries(proto.name, obs, grid.copy(), mean, err, n))
            elif obs == "pq":
                stacked = np.stack(rows)  # (n, L+1, n_times)
                for k in range(spec.model.L + 1):
                    Q = spec.model.L - 2 * k
                    mean, err = _aggregate(stacked[:, k, :])
                    series.append(EnsembleSeries(proto.name, f"pq{Q:+d}", grid.copy(), mean, err, n))
            elif obs == "pe":
                lo = min(row[0][0] for row in rows)
                hi = max(row[0][-1] for row in rows)
                edges = np.linspace(lo, hi, spec.pe_bins + 1)
                hists = np.stack(
                    [np.histogram(E, bins=edges, weights=w)[0] for E, w in rows]
                )
                mean, err = _aggregate(hists)
                centers = 0.5 * (edges[:-1] + edges[1:])
                series.append(EnsembleSeries(proto.name, "pe", centers, mean, err, n))
    return series


def run_ensemble_batch(specs, threads: int = 1) -> list[list[EnsembleSeries]]:
    """Evaluate several specs over one shared disorder sweep.

    All specs must agree on the model template, master seed, and
    realization count; each realization then samples its field vector once
    and reuses every Hamiltonian decomposition across specs and protocols.
    """
    specs = tuple(specs)
    if not specs:
        raise ValueError("no specs given")
    for spec in specs:
        _validate_spec(spec)
    base = specs[0]
    for spec in specs[1:]:
        same = (
            spec.model.L == base.model.L
            and spec.model.mu == base.model.mu
            and spec.model.W == base.model.W
            and spec.model.periodic == base.model.periodic
            and spec.master_seed == base.master_seed
            and spec.n_realizations == base.n_realizations
        )
        if not same:
            raise ValueError("batched specs must share model template, seed, and realizations")

    n = base.n_realizations
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            per_real = list(pool.map(partial(_run_realization, specs), range(n)))
    else:
        per_real = [_run_realization(specs, r) for r in range(n)]
    return [
        _collect_series(spec, [per_real[r][i] for r in range(n)])
        for i, spec in enumerate(specs)
    ]


def run_ensemble(spec: EnsembleSpec, threads: int = 1) -> list[EnsembleSeries]:
    """Run one ensemble spec; see `run_ensemble_batch` for the sweep engine."""
    return run_ensemble_batch([spec], threads=threads)[0]


def find_series(series: list[EnsembleSeries], protocol: str, observable: str) -> EnsembleSeries:
    for s in series:
        if s.protocol == protocol and s.observable == observable:
            return s
    raise KeyError(f"no series for protocol={protocol!r} observable={observable!r}")


def series_difference(a: EnsembleSeries, b: EnsembleSeries) -> EnsembleSeries:
    """Pointwise a - b with standard errors combined in quadrature."""
    if not np.array_equal(a.times, b.times):
        raise ValueError("series grids differ")
    return EnsembleSeries(
        protocol=f"{a.protocol}-{b.protocol}",
        observable=a.observable,
        times=a.times.copy(),
        mean=a.mean - b.mean,
        stderr=np.sqrt(a.stderr**2 + b.stderr**2),
        n_realizations=min(a.n_realizations, b.n_realizations),
    )
