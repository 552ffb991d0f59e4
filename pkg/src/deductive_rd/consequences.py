"""Channel-side consequences: separation verdicts, depth budgets, converses, Fano."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from .distortion import check_core_disjoint, recon_sets
from .info import InfeasibleError, ba_capacity, binary_entropy, mutual_information
from .rates import (
    AssumptionError,
    direct_rd_curve,
    direct_zero_rate,
    rate_depth_distortion,
    rate_depth_sweep,
    rate_depth_zero,
    rd_function,
    zero_rate_general,
)
from .source import DeductiveSource, extract_core

BOUNDARY_TOL = 1e-12


@dataclass(frozen=True)
class ChannelModel:
    """Discrete memoryless channel; row ``x`` is ``W(. | x)``."""

    matrix: np.ndarray = field(repr=False)
    inputs: tuple[str, ...] = ()
    outputs: tuple[str, ...] = ()

    def __post_init__(self):
        w = np.asarray(self.matrix, dtype=float)
        if w.ndim != 2 or np.any(w < 0) or not np.allclose(w.sum(axis=1), 1.0, atol=1e-9):
            raise ValueError("channel rows must be probability vectors")
        object.__setattr__(self, "matrix", w)
        if not self.inputs:
            object.__setattr__(self, "inputs", tuple(f"x{i}" for i in range(w.shape[0])))
        if not self.outputs:
            object.__setattr__(self, "outputs", tuple(f"y{j}" for j in range(w.shape[1])))
        if len(self.inputs) != w.shape[0] or len(self.outputs) != w.shape[1]:
            raise ValueError("label counts must match the matrix shape")

    @cached_property
    def capacity(self) -> float:
        return ba_capacity(self.matrix)

    @classmethod
    def bsc(cls, crossover: float) -> "ChannelModel":
        e = crossover
        return cls(np.array([[1 - e, e], [e, 1 - e]]), ("0", "1"), ("0", "1"))

    @classmethod
    def from_csv(cls, text: str) -> "ChannelModel":
        """Header row of output labels; each row optionally starts with an input label."""
        rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
        if len(rows) < 2:
            raise ValueError("channel CSV needs a header and at least one row")
        header = [c.strip() for c in rows[0]]
        labelled = header[0] == ""
        outputs = tuple(header[1:] if labelled else header)
        inputs, values = [], []
        for r in rows[1:]:
            r = [c.strip() for c in r]
            if len(r) == len(outputs) + 1:
                inputs.append(r[0])
                r = r[1:]
            elif len(r) != len(outputs):
                raise ValueError(f"row {r} does not match {len(outputs)} outputs")
            values.append([float(v) for v in r])
        if inputs and len(inputs) != len(values):
            raise ValueError("label every input row or none")
        return cls(np.array(values), tuple(inputs), outputs)

    @classmethod
    def load(cls, path: str | Path) -> "ChannelModel":
        return cls.from_csv(Path(path).read_text())

    def to_csv(self) -> str:
        lines = ["," + ",".join(self.outputs)]
        for x, row in zip(self.inputs, self.matrix):
            lines.append(x + "," + ",".join(f"{v:.12g}" for v in row))
        return "\n".join(lines) + "\n"


def _capacity(channel) -> float:
    if isinstance(channel, ChannelModel):
        return channel.capacity
    c = float(channel)
    if c < 0:
        raise ValueError("capacity must be nonnegative")
    return c


# ---------------------------------------------------------------------------
# separation


@dataclass(frozen=True)
class SeparationReport:
    rate: float
    kappa: float
    budget: float  # kappa * C(W)
    verdict: str
    mode: str = "unbounded"
    D: float = 0.0
    delta: int | None = None


def separation_verdict(rate: float, budget: float, tol: float = BOUNDARY_TOL) -> str:
    """``achievable`` if rate < budget, ``not-achievable`` if rate > budget, else ``boundary``."""
    if math.isinf(rate):
        return "not-achievable" if not math.isinf(budget) else "boundary"
    if abs(rate - budget) <= tol:
        return "boundary"
    return "achievable" if rate < budget else "not-achievable"


def _source_rate(source: DeductiveSource, D: float, delta: int | None) -> float:
    if delta is None:
        if D == 0:
            return zero_rate_general(source).value
        try:
            return rd_function(source, D)
        except AssumptionError:
            try:
                return direct_rd_curve(source, [D]).points[0].R
            except InfeasibleError:
                return math.inf
    if D == 0:
        try:
            return rate_depth_zero(source, delta).value
        except AssumptionError:
            return direct_zero_rate(source, delta=delta).value
    try:
        return rate_depth_distortion(source, D, delta)
    except InfeasibleError:
        return math.inf


def separation_check(
    source: DeductiveSource, channel, kappa: float, D: float = 0.0, delta: int | None = None
) -> SeparationReport:
    """Compare ``R_sem(D)`` (or ``R_sem(D, delta)``) with ``kappa * C(W)``."""
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    if D < 0:
        raise ValueError("distortion must be nonnegative")
    rate = _source_rate(source, D, delta)
    budget = kappa * _capacity(channel)
    return SeparationReport(
        rate, kappa, budget, separation_verdict(rate, budget),
        "unbounded" if delta is None else "depth", D, delta,
    )


@dataclass(frozen=True)
class ThresholdReport:
    achievable: float  # smallest depth with phi < budget, inf if none
    necessary: float  # smallest depth with phi <= budget, inf if none
    phi: tuple[float, ...]
    budget: float
    max_depth: int
    regime: str

    def as_dict(self) -> dict:
        return {
            "delta_ach": self.achievable, "delta_nec": self.necessary, "phi": list(self.phi),
            "budget": self.budget, "max_depth": self.max_depth, "regime": self.regime,
        }


def _first(phi: Sequence[float], pred) -> float:
    return next((d for d, v in enumerate(phi) if pred(v)), math.inf)


def depth_thresholds(source: DeductiveSource, channel, kappa: float) -> ThresholdReport:
    """Minimal inference-depth budgets for zero depth-bounded distortion over a channel.

    ``phi`` is the table from :func:`rate_depth_sweep`; it is constant past its
    last entry, so scanning it decides both minima exactly.
    """
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    budget = kappa * _capacity(channel)
    sweep = rate_depth_sweep(source)
    phi = sweep.phi
    ach = _first(phi, lambda v: v < budget and abs(v - budget) > BOUNDARY_TOL)
    nec = _first(phi, lambda v: v <= budget or abs(v - budget) <= BOUNDARY_TOL)
    if phi[0] < budget:
        regime = "classical-suffices"
    elif phi[-1] > budget:
        regime = "no-finite-depth"
    elif phi[-1] < budget < phi[0]:
        regime = "depth-limited"
    else:
        regime = "boundary"
    return ThresholdReport(ach, nec, phi, budget, sweep.max_depth, regime)


# ---------------------------------------------------------------------------
# message-set converse and blocklength benchmarks


@dataclass(frozen=True)
class ConverseReport:
    bound: float  # max log2 of the message set, bits
    log_size: float
    consistent: bool
    mode: str


def message_converse(n: int, capacity: float, eps: float, size: int, mode: str = "hamming") -> ConverseReport:
    """``log2 M <= (n C + 1) / (1 - eps)``; in closure mode ``size`` is ``|A|``."""
    if n < 1:
        raise ValueError("blocklength must be at least 1")
    if not 0.0 <= eps < 1.0:
        raise ValueError("error probability must lie in [0, 1)")
    if size < 1:
        raise ValueError("message set must be nonempty")
    if mode not in ("hamming", "closure"):
        raise ValueError(f"unknown mode {mode!r}")
    bound = (n * capacity + 1.0) / (1.0 - eps)
    log_size = math.log2(size)
    return ConverseReport(bound, log_size, log_size <= bound, mode)


def closure_converse(source: DeductiveSource, n: int, capacity: float, eps: float) -> ConverseReport:
    """Closure-mode converse for ``source``; needs a nonempty core with disjoint zero sets."""
    core = extract_core(source).core
    if not core:
        raise AssumptionError("closure converse needs a nonempty core")
    verdict = check_core_disjoint(source)
    if not verdict:
        raise AssumptionError("closure converse needs disjoint core zero-distortion sets", verdict)
    return message_converse(n, capacity, eps, len(core), "closure")


@dataclass(frozen=True)
class Benchmarks:
    n_hamming: int
    n_closure: int
    ratio: float
    note: str = "heuristic"


def blocklength_benchmarks(n_stored: int, n_core: int, capacity: float) -> Benchmarks:
    """``ceil(log2|S_O| / C)``, ``ceil(log2|A| / C)`` and ``log2|A| / log2|S_O|`` (heuristic)."""
    if n_core < 1 or n_stored < n_core:
        raise ValueError("need 1 <= |A| <= |S_O|")
    if capacity <= 0:
        raise ValueError("capacity must be positive")
    ratio = 1.0 if n_stored == 1 else math.log2(n_core) / math.log2(n_stored)
    return Benchmarks(math.ceil(math.log2(n_stored) / capacity), math.ceil(math.log2(n_core) / capacity), ratio)


# ---------------------------------------------------------------------------
# Fano


@dataclass(frozen=True)
class FanoReport:
    information: float
    eps: float
    bound: float

    @property
    def holds(self) -> bool:
        return self.information >= self.bound


def fano_bound(source: DeductiveSource, kernel) -> FanoReport:
    """Closure-adapted Fano bound for a test kernel (rows: stored facts, cols: ``source.recon``)."""
    kernel = np.asarray(kernel, dtype=float)
    if kernel.shape != (len(source.stored), len(source.recon)):
        raise ValueError("kernel must have one row per stored fact and one column per reconstruction")
    if np.any(kernel < 0) or not np.allclose(kernel.sum(axis=1), 1.0, atol=1e-9):
        raise ValueError("kernel rows must be probability vectors")
    if np.any(source.p <= 0):
        raise AssumptionError("the Fano bound needs a full-support source")
    outside = [t for t in source.recon if t not in source.cn]
    if outside:
        raise AssumptionError(f"reconstruction alphabet leaves Cn(S_O): {outside[0]}")
    dec = extract_core(source)
    sets = recon_sets(source)
    if len(dec.core) >= 2:
        verdict = check_core_disjoint(source, sets)
        if not verdict:
            raise AssumptionError("the Fano bound needs disjoint core zero-distortion sets", verdict)
    col = {t: j for j, t in enumerate(source.recon)}
    eps = 0.0
    for i, s in enumerate(source.stored):
        hit = sum(kernel[i, col[t]] for t in sets[s])
        eps += source.probs[i] * (1.0 - hit)
    eps = min(max(eps, 0.0), 1.0)
    info = mutual_information(source.p, kernel)
    if len(dec.core) <= 1:
        bound = 0.0
    else:
        bound = dec.entropy_term - binary_entropy(eps) - eps * math.log2(len(dec.core) - 1)
    return FanoReport(info, eps, bound)


def random_kernel(n_rows: int, n_cols: int, g: np.random.Generator) -> np.ndarray:
    """Dirichlet rows with a random sparsity pattern (zero-error and deterministic kernels included)."""
    k = g.dirichlet(np.full(n_cols, float(g.choice([0.2, 1.0, 5.0]))), size=n_rows)
    if g.random() < 0.3:
        k = np.eye(n_cols)[g.integers(n_cols, size=n_rows)]
    return k / k.sum(axis=1, keepdims=True)


def identity_kernel(source: DeductiveSource) -> np.ndarray:
    """Kernel that outputs each stored fact unchanged (needs ``S_O`` inside the alphabet)."""
    col = {t: j for j, t in enumerate(source.recon)}
    k = np.zeros((len(source.stored), len(source.recon)))
    for i, s in enumerate(source.stored):
        if s not in col:
            raise ValueError(f"{s} is not in the reconstruction alphabet")
        k[i, col[s]] = 1.0
    return k
