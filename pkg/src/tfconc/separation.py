"""Coherence counting, well-separated subsets and covering-number bounds.

Two unit vectors with ``|<e_m, e_n>| < 1/2`` are more than distance 1 apart, so a
radius-1/2 ball contains at most one member of a separated subset.  If no element
correlates at level 1/2 with ``D`` or more others, a greedy scan keeps at least
``(k - 1) / (ceil(D) + 1)`` of ``k`` elements; combined with a covering of a
compact set this bounds how many such elements the set can hold.
"""

from __future__ import annotations

import io
import math
import os
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import HypothesisWarning, InvalidArgument
from .grid import SampledFunction
from .moments import ConcentrationReport

__all__ = [
    "SeparationResult",
    "THRESHOLD",
    "coherence_count",
    "coherence_counts",
    "tchebyshev_D",
    "greedy_separated_subset",
    "max_separated_subset",
    "covering_number_bound",
    "greedy_half_net",
    "inner_product_bound",
    "growth_certificate",
    "write_gram_csv",
    "read_gram_csv",
]

THRESHOLD = 0.5
DIAG_TOL = 1e-6


@dataclass(frozen=True)
class SeparationResult:
    selected: list[int]
    threshold: float
    d_count: float
    guarantee: int
    k: int
    hypothesis_ok: bool

    def to_dict(self) -> dict:
        return {
            "selected": list(self.selected),
            "threshold": self.threshold,
            "d_count": self.d_count,
            "guarantee": self.guarantee,
            "k": self.k,
            "hypothesis_ok": self.hypothesis_ok,
        }


def _as_gram(gram) -> np.ndarray:
    G = np.asarray(gram, dtype=np.complex128)
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise InvalidArgument(f"Gram matrix must be square, got shape {G.shape}")
    if np.max(np.abs(np.diag(G) - 1), initial=0.0) > DIAG_TOL:
        raise InvalidArgument("Gram matrix must have unit diagonal (unit-norm system)")
    return G


def coherence_counts(gram) -> np.ndarray:
    """Per column m: #{n : |gram[n, m]| >= 1/2}, the diagonal included."""
    G = _as_gram(gram)
    return np.sum(np.abs(G) >= THRESHOLD, axis=0)


def coherence_count(gram, m: int) -> int:
    G = _as_gram(gram)
    if not 0 <= m < G.shape[0]:
        raise InvalidArgument(f"index {m} out of range for size {G.shape[0]}")
    return int(np.sum(np.abs(G[:, m]) >= THRESHOLD))


def tchebyshev_D(C: float, s: float) -> float:
    """Coherence bound ``2^s C^s + 1`` implied by an l^s Bessel bound with constant C."""
    if not (C > 0 and s > 0):
        raise InvalidArgument(f"C and s must be positive, got C={C}, s={s}")
    return 2.0**s * C**s + 1.0


def greedy_separated_subset(gram, D: float) -> SeparationResult:
    """Scan in input order, keeping an index and discarding later ones correlated with it.

    If some coherence count reaches ``D`` the cardinality guarantee no longer applies; the greedy
    subset is still returned, with ``hypothesis_ok=False`` and a warning.
    """
    G = _as_gram(gram)
    if not D > 0:
        raise InvalidArgument(f"D must be positive, got {D}")
    k = G.shape[0]
    hypothesis_ok = bool(np.all(coherence_counts(G) < D))
    if not hypothesis_ok:
        warnings.warn(
            f"some element correlates at level 1/2 with >= D = {D} elements",
            HypothesisWarning,
            stacklevel=2,
        )
    A = np.abs(G)
    selected = []
    remaining = list(range(k))
    while remaining:
        i = remaining.pop(0)
        selected.append(i)
        remaining = [j for j in remaining if A[i, j] < THRESHOLD]
    return SeparationResult(
        selected=selected,
        threshold=THRESHOLD,
        d_count=float(D),
        guarantee=math.ceil((k - 1) / (math.ceil(D) + 1)),
        k=k,
        hypothesis_ok=hypothesis_ok,
    )


def max_separated_subset(gram) -> list[int]:
    """Largest pairwise-separated subset by exhaustive search (small k only)."""
    A = np.abs(_as_gram(gram))
    k = A.shape[0]
    if k > 20:
        raise InvalidArgument(f"exhaustive search limited to k <= 20, got {k}")
    conflict = [0] * k
    for i in range(k):
        for j in range(k):
            if i != j and A[i, j] >= THRESHOLD:
                conflict[i] |= 1 << j
    best = 0
    for mask in range(1 << k):
        if mask.bit_count() <= best.bit_count():
            continue
        ok = True
        m = mask
        while m:
            i = (m & -m).bit_length() - 1
            if conflict[i] & mask:
                ok = False
                break
            m &= m - 1
        if ok:
            best = mask
    return [i for i in range(k) if best >> i & 1]


def covering_number_bound(M: int, D: float) -> int:
    """``M (ceil(D) + 1) + 1``: max elements of a coherence-D system inside M half-balls."""
    if int(M) != M or M < 1:
        raise InvalidArgument(f"M must be a positive integer, got {M}")
    if not D > 0:
        raise InvalidArgument(f"D must be positive, got {D}")
    return int(M) * (math.ceil(D) + 1) + 1


def greedy_half_net(points: Sequence[SampledFunction]) -> list[int]:
    """Indices of a greedy 1/2-net: each point lies within 1/2 of a kept one."""
    kept: list[int] = []
    for i, f in enumerate(points):
        if kept and f.grid != points[kept[0]].grid:
            raise InvalidArgument("points live on different grids")
        if all((f - points[j]).norm >= 0.5 for j in kept):
            kept.append(i)
    return kept


def inner_product_bound(rf: ConcentrationReport, rg: ConcentrationReport) -> float:
    """Upper bound on |<f, g>| from means and dispersions; ``inf`` when vacuous."""
    if rf.p != rg.p or rf.q != rg.q:
        raise InvalidArgument("reports must use the same exponents p and q")
    p, q = rf.p, rf.q
    num = 2 ** (p / 2) * (rf.time_dispersion + rg.time_dispersion) + 2 ** (q / 2) * (
        rf.freq_dispersion + rg.freq_dispersion
    )
    den = abs(rf.time_mean - rg.time_mean) ** (p / 2) + abs(rf.freq_mean - rg.freq_mean) ** (q / 2)
    if den == 0:
        return math.inf
    return num / den


def growth_certificate(freq_means: Sequence[float]) -> float:
    """``min_n |mu_n| / n`` (1-based); positive values certify linear growth."""
    if len(freq_means) == 0:
        raise InvalidArgument("need at least one frequency mean")
    return min(abs(float(x)) / n for n, x in enumerate(freq_means, start=1))


def write_gram_csv(gram, path) -> None:
    """One header line ``k=<size>`` then rows of complex entries ``re+imj``."""
    G = np.asarray(gram, dtype=np.complex128)
    lines = [f"k={G.shape[0]}"]
    for row in G:
        lines.append(",".join(f"{z.real:.17g}{z.imag:+.17g}j" for z in row))
    text = "\n".join(lines) + "\n"
    if isinstance(path, (str, os.PathLike)):
        with open(path, "w") as fh:
            fh.write(text)
    else:
        path.write(text)


def read_gram_csv(path) -> np.ndarray:
    if isinstance(path, (str, os.PathLike)):
        with open(path) as fh:
            text = fh.read()
    else:
        text = path.read()
    lines = [ln.strip() for ln in io.StringIO(text) if ln.strip()]
    if not lines or not lines[0].startswith("k="):
        raise InvalidArgument("expected a 'k=<size>' header line")
    k = int(lines[0][2:])
    try:
        rows = [[complex(c.strip()) for c in ln.split(",")] for ln in lines[1:]]
    except ValueError as exc:
        raise InvalidArgument(f"bad complex entry: {exc}") from exc
    G = np.array(rows, dtype=np.complex128)
    if G.shape != (k, k):
        raise InvalidArgument(f"header says k={k} but found shape {G.shape}")
    return G
