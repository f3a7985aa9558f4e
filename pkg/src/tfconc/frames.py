"""Finite-section frame diagnostics, (l^r, l^s) inequality checks and the obstruction report.

A system ``{e_n}`` satisfying

    B (sum |<f, e_n>|^s)^(1/s) <= ||f|| <= C (sum |<f, e_n>|^r)^(1/r)

for every ``f`` cannot, when ``qr > 2``, keep all of ``|mu_p(e_n)|``, ``Delta_p(e_n)``
and ``Delta_q(ehat_n)`` below a common bound ``A``: the coefficients of a far
translate ``g(. - N)`` are dominated by a convergent series whose sum tends to 0
with ``N``.  Frames and Schauder bases satisfy such an inequality with ``r = s = 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import special

from .errors import HypothesisViolation, InvalidArgument
from .grid import SampledFunction, modulate, sample
from .moments import ConcentrationReport, concentration_report
from .separation import growth_certificate

__all__ = [
    "FrameDiagnostics",
    "RSCheck",
    "TailSum",
    "ElementEntry",
    "ObstructionReport",
    "gram_matrix",
    "frame_bounds_finite",
    "frame_diagnostics",
    "section_profile",
    "rs_check",
    "default_test_functions",
    "tail_sum",
    "tail_sum_detail",
    "obstruction_report",
]

HERMITIAN_TOL = 1e-9
ZERO_EIG_RTOL = 1e-9  # eigenvalues below this fraction of the largest span the kernel
ZERO_COEFF_TOL = 1e-10
CAP_SLACK = 1e-9  # quadrature noise allowance when a value sits exactly on a cap
_CHUNK = 1 << 20


@dataclass(frozen=True)
class FrameDiagnostics:
    """Finite-section estimates; ``gram`` is kept for inspection, not serialized."""

    gram: np.ndarray = field(repr=False)
    lower_bound_est: float
    upper_bound_est: float
    smallest_singular_value: float
    section_size: int

    def to_dict(self) -> dict:
        return {
            "lower_bound_est": self.lower_bound_est,
            "upper_bound_est": self.upper_bound_est,
            "smallest_singular_value": self.smallest_singular_value,
            "section_size": self.section_size,
        }


@dataclass(frozen=True)
class RSCheck:
    r: float
    s: float
    lower_const_est: float
    upper_const_est: float
    n_tests: int
    zero_coefficient_tests: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "r": self.r,
            "s": self.s,
            "lower_const_est": self.lower_const_est,
            "upper_const_est": self.upper_const_est,
            "n_tests": self.n_tests,
            "zero_coefficient_tests": list(self.zero_coefficient_tests),
        }


def _common_grid(system: Sequence[SampledFunction]):
    if not system:
        raise InvalidArgument("empty system")
    grid = system[0].grid
    for f in system[1:]:
        if f.grid != grid:
            raise InvalidArgument("system elements live on different grids")
    return grid


def gram_matrix(system: Sequence[SampledFunction]) -> np.ndarray:
    """``G[m, n] = <e_m, e_n>``, made exactly hermitian."""
    grid = _common_grid(system)
    V = np.array([f.values for f in system])
    G = grid.spacing * (V @ V.conj().T)
    return 0.5 * (G + G.conj().T)


def _check_hermitian(gram) -> np.ndarray:
    G = np.asarray(gram, dtype=np.complex128)
    if G.ndim != 2 or G.shape[0] != G.shape[1] or G.shape[0] == 0:
        raise InvalidArgument(f"Gram matrix must be square and nonempty, got shape {G.shape}")
    if np.max(np.abs(G - G.conj().T)) > HERMITIAN_TOL:
        raise InvalidArgument("Gram matrix is not hermitian")
    return G


def _spectrum(G: np.ndarray) -> np.ndarray:
    eig = np.linalg.eigvalsh(0.5 * (G + G.conj().T))
    if eig[0] < -HERMITIAN_TOL * max(1.0, eig[-1]):
        raise InvalidArgument(f"Gram matrix is not positive semidefinite (eigenvalue {eig[0]:.3g})")
    return np.clip(eig, 0.0, None)


def frame_bounds_finite(gram) -> tuple[float, float]:
    """Extreme nonzero Gram eigenvalues: the optimal frame bounds on the span of the section.

    Zero eigenvalues belong to linear dependencies among the elements and say nothing
    about the frame inequality, so they are skipped.  A duplicated orthonormal basis
    therefore gives ``(2, 2)``.
    """
    eig = _spectrum(_check_hermitian(gram))
    top = float(eig[-1])
    if top == 0:
        return 0.0, 0.0
    nonzero = eig[eig > ZERO_EIG_RTOL * top]
    return float(nonzero[0]), top


def frame_diagnostics(system: Sequence[SampledFunction]) -> FrameDiagnostics:
    G = gram_matrix(system)
    lo, hi = frame_bounds_finite(G)
    sv = float(np.linalg.svd(G, compute_uv=False)[-1])
    return FrameDiagnostics(G, lo, hi, sv, len(system))


def section_profile(system: Sequence[SampledFunction], sizes: Sequence[int]) -> dict:
    """Frame estimates of the leading sections with their monotonicity flags.

    By eigenvalue interlacing the smallest eigenvalue cannot increase and the largest
    cannot decrease as a section grows; the flags report whether the estimates show it.
    """
    sizes = sorted(set(int(k) for k in sizes))
    if not sizes or sizes[0] < 1 or sizes[-1] > len(system):
        raise InvalidArgument(f"section sizes must lie in 1..{len(system)}")
    G = gram_matrix(system)
    rows = []
    for k in sizes:
        lo, hi = frame_bounds_finite(G[:k, :k])
        sv = float(np.linalg.svd(G[:k, :k], compute_uv=False)[-1])
        rows.append(FrameDiagnostics(G[:k, :k], lo, hi, sv, k))
    return {
        "sections": rows,
        "lower_nonincreasing": all(a.lower_bound_est >= b.lower_bound_est for a, b in zip(rows, rows[1:])),
        "upper_nondecreasing": all(a.upper_bound_est <= b.upper_bound_est for a, b in zip(rows, rows[1:])),
    }


def rs_check(
    system: Sequence[SampledFunction],
    test_functions: Sequence[SampledFunction],
    r: float,
    s: float,
) -> RSCheck:
    """Empirical constants of the (l^r, l^s) inequality over a test set.

    ``lower_const_est`` is the largest ``B`` with ``B ||c||_s <= ||f||`` on every test
    function and ``upper_const_est`` the smallest ``C`` with ``||f|| <= C ||c||_r``.
    A test function with (numerically) zero coefficients witnesses incompleteness and
    makes ``C`` infinite.
    """
    if not (r > 0 and s > 0):
        raise InvalidArgument(f"r and s must be positive, got r={r}, s={s}")
    if not test_functions:
        raise InvalidArgument("need at least one test function")
    grid = _common_grid(list(system) + list(test_functions))
    V = np.array([e.values for e in system])
    B, C = math.inf, 0.0
    zero = []
    for k, f in enumerate(test_functions):
        c = np.abs(grid.spacing * (V.conj() @ f.values))
        if float(np.max(c)) <= ZERO_COEFF_TOL * f.norm:
            zero.append(k)
            C = math.inf
            continue
        B = min(B, f.norm / float(np.sum(c**s)) ** (1 / s))
        C = max(C, f.norm / float(np.sum(c**r)) ** (1 / r))
    if len(zero) == len(test_functions):
        B = math.inf
    return RSCheck(float(r), float(s), B, C, len(test_functions), zero)


def default_test_functions(
    system: Sequence[SampledFunction], n_random: int = 10, seed: int = 0
) -> list[SampledFunction]:
    """System elements, random unit combinations of them, and translated/modulated Gaussians."""
    grid = _common_grid(system)
    rng = np.random.default_rng(seed)
    out = [f.normalized() for f in system]
    V = np.array([f.values for f in system])
    for _ in range(n_random):
        w = rng.normal(size=len(system)) + 1j * rng.normal(size=len(system))
        u = SampledFunction(grid, w @ V)
        if u.norm > 0:
            out.append(u.normalized())
    half_t = int(grid.extent / 2) - 4
    half_f = int(grid.dual_extent / 2) - 4
    for N in range(0, max(half_t, 0) + 1, max(1, half_t // 4)):
        gN = sample(grid, lambda t, N=N: 2**0.25 * np.exp(-np.pi * (t - N) ** 2))
        out.append(gN)
        if half_f > 0:
            out.append(modulate(gN, min(N, half_f)))
    return out


# --- tail sums -------------------------------------------------------------------------


@dataclass(frozen=True)
class TailSum:
    N: float
    partial: float
    remainder: float

    @property
    def total(self) -> float:
        return self.partial + self.remainder


def tail_sum_detail(
    N: float, A: float, c: float, p: float, q: float, r: float, n_max: int = 10**6
) -> TailSum:
    """Partial sum of ``1 / (|N - A|^(p/2) + (c n)^(q/2))^r`` to ``n_max`` plus an integral bound on the rest."""
    if not q * r > 2:
        raise HypothesisViolation(f"qr = {q * r:g} <= 2: the series need not converge")
    if not N > A:
        raise InvalidArgument(f"need N > A, got N = {N}, A = {A}")
    if not (A >= 0 and c > 0 and p > 1 and q > 1 and r > 0):
        raise InvalidArgument("need A >= 0, c > 0, p > 1, q > 1 and r > 0")
    if int(n_max) != n_max or n_max < 1:
        raise InvalidArgument(f"n_max must be a positive integer, got {n_max}")
    n_max = int(n_max)
    K = abs(N - A) ** (p / 2)

    def term(x):
        return (K + (c * x) ** (q / 2)) ** -r

    partial = 0.0
    # sum small terms first for accuracy
    for hi in range(n_max, 0, -_CHUNK):
        n = np.arange(max(1, hi - _CHUNK + 1), hi + 1, dtype=float)
        partial += float(np.sum(term(n)[::-1]))
    # terms decrease in n, so the sum beyond n_max is at most the integral from n_max;
    # w = K / (K + (c x)^b) turns that integral into an incomplete beta function
    b = q / 2
    w0 = K / (K + (c * n_max) ** b)
    a1, b1 = r - 1 / b, 1 / b
    rem = K ** (1 / b - r) / (c * b) * special.beta(a1, b1) * special.betainc(a1, b1, w0)
    return TailSum(float(N), partial, float(rem))


def tail_sum(
    N: float, A: float, c: float, p: float, q: float, r: float, n_max: int = 10**6
) -> float:
    """Certified upper estimate of the full series (partial sum plus integral remainder)."""
    return tail_sum_detail(N, A, c, p, q, r, n_max).total


# --- obstruction report ------------------------------------------------------------------


@dataclass(frozen=True)
class ElementEntry:
    index: int
    report: ConcentrationReport
    mean_ok: bool
    time_disp_ok: bool
    freq_disp_ok: bool
    kaq_member: bool

    @property
    def premise_flags(self) -> list[bool]:
        return [self.mean_ok, self.time_disp_ok, self.freq_disp_ok]

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "report": self.report.to_dict(),
            "premise_flags": self.premise_flags,
            "kaq_member": self.kaq_member,
        }


@dataclass(frozen=True)
class ObstructionReport:
    p: float
    q: float
    r: float
    s: float
    A: float
    elements: list[ElementEntry]
    growth_certificate: float
    obstruction_flag: bool
    narrative: str | None = None
    rs: RSCheck | None = None

    @property
    def failing(self) -> dict[int, list[str]]:
        """Element index -> names of the premises it violates."""
        names = ("mean", "time_dispersion", "freq_dispersion")
        return {
            e.index: [n for n, ok in zip(names, e.premise_flags) if not ok]
            for e in self.elements
            if not all(e.premise_flags)
        }

    def to_dict(self) -> dict:
        d = {
            "p": self.p,
            "q": self.q,
            "r": self.r,
            "s": self.s,
            "A": self.A,
            "elements": [e.to_dict() for e in self.elements],
            "growth_certificate": self.growth_certificate,
            "obstruction_flag": self.obstruction_flag,
            "narrative": self.narrative,
        }
        if self.rs is not None:
            d["rs_check"] = self.rs.to_dict()
        return d


def obstruction_report(
    system: Sequence[SampledFunction],
    p: float,
    q: float,
    r: float,
    s: float,
    A: float,
    test_functions: Sequence[SampledFunction] | None = None,
) -> ObstructionReport:
    """Check each element against the three caps ``|mu_p| <= A``, ``Delta_p <= A``, ``Delta_q(hat) <= A``.

    When every element meets them (and also keeps its frequency mean below ``A``, so the
    whole system sits inside the compact set K_A^{p,q}) and ``qr > 2``, the system
    cannot satisfy the (l^r, l^s) inequality; with ``r = s = 2`` it is neither a frame
    nor a Schauder basis of L2(R).  The flag is a proven consequence of the premises, not a measurement, while
    ``rs`` holds the empirical constants over ``test_functions`` when given.
    """
    if not A > 0:
        raise InvalidArgument(f"A must be positive, got {A}")
    _common_grid(system)
    entries = []
    for k, f in enumerate(system, start=1):
        if not f.is_unit_norm(1e-6):
            raise InvalidArgument(f"element {k} is not unit norm (norm {f.norm})")
        rep = concentration_report(f, p, q)
        cap = A + CAP_SLACK
        mean_ok = abs(rep.time_mean) <= cap
        td_ok = rep.time_dispersion <= cap
        fd_ok = rep.freq_dispersion <= cap
        member = mean_ok and td_ok and fd_ok and abs(rep.freq_mean) <= cap
        entries.append(ElementEntry(k, rep, mean_ok, td_ok, fd_ok, member))
    growth = growth_certificate([e.report.freq_mean for e in entries])
    flag = q * r > 2 and all(e.kaq_member for e in entries)
    narrative = None
    if flag:
        narrative = (
            f"every element satisfies the caps with A = {A:g} and qr = {q * r:g} > 2, so the "
            f"system cannot satisfy the (l^{r:g}, l^{s:g}) inequality"
        )
        if r == 2 and s == 2:
            narrative += "; it can be neither a frame nor a Schauder basis of L2(R)"
    rs = rs_check(system, test_functions, r, s) if test_functions else None
    return ObstructionReport(
        float(p), float(q), float(r), float(s), float(A), entries, growth, flag, narrative, rs
    )
