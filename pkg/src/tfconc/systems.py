"""Gaussian Gabor systems and the perturbed exact system with bounded concentration.

The integer-lattice Gabor system ``g_{m,n}(t) = exp(2 pi i m t) g(t - n)`` with the
unit Gaussian ``g(t) = 2^(1/4) exp(-pi t^2)`` becomes exact once ``g_{1,1}`` is
removed.  Enumerating that system as ``e_1 = g, e_2, ...`` and setting

    f_n = (e_1 + alpha_n e_{n+1}) / ||e_1 + alpha_n e_{n+1}||

with small enough ``alpha_n`` keeps all four means and dispersions of every
``f_n`` within ``epsilon`` of the Gaussian's while preserving exactness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ConstructionFailure, InvalidArgument, OutOfWindowError
from .grid import Grid, SampledFunction, fourier, sample
from .moments import ConcentrationReport, concentration_report

__all__ = [
    "GaborIndex",
    "SystemSpec",
    "EnvelopePair",
    "SYSTEM_KINDS",
    "gaussian",
    "gabor_atom",
    "enumerate_gabor",
    "enumerate_exact_G0",
    "build_system",
    "build_perturbed_exact",
    "bound_checks",
    "envelopes",
    "reconstruct_e",
]

SYSTEM_KINDS = ("gabor_full", "gabor_exact_G0", "perturbed_exact", "explicit")
EXCLUDED = (1, 1)
ATOM_MARGIN = 4.0
ALPHA_CAP = 0.08
MAX_HALVINGS = 60


class GaborIndex(NamedTuple):
    m: int  # modulation
    n: int  # translation


@dataclass
class SystemSpec:
    """Enumeration and construction parameters of a system.

    For ``perturbed_exact`` systems ``indices`` lists the Gabor indices of
    ``e_1, ..., e_{count+1}``; ``alphas[k]`` and ``norms[k]`` belong to element
    ``k + 1`` (``norms`` are the normalizers ``||e_1 + alpha e_{k+2}||``).
    """

    kind: str
    count: int
    epsilon: float | None = None
    indices: list[GaborIndex] = field(default_factory=list)
    alphas: list[float] = field(default_factory=list)
    norms: list[float] = field(default_factory=list)

    def __post_init__(self):
        if self.kind not in SYSTEM_KINDS:
            raise InvalidArgument(f"unknown system kind {self.kind!r}")
        if int(self.count) != self.count or self.count < 1:
            raise InvalidArgument(f"count must be a positive integer, got {self.count}")
        self.count = int(self.count)
        self.indices = [GaborIndex(int(m), int(n)) for m, n in self.indices]
        if self.kind == "gabor_exact_G0" and EXCLUDED in self.indices:
            raise InvalidArgument("G0 excludes the index (1, 1)")
        for k, a in enumerate(self.alphas):
            if not 0 < a < 2.0 ** -(k + 1):
                raise InvalidArgument(f"alpha_{k + 1} = {a} outside (0, 2^-{k + 1})")

    def to_dict(self) -> dict:
        d = {
            "kind": self.kind,
            "count": self.count,
            "epsilon": self.epsilon,
            "indices": [[i.m, i.n] for i in self.indices],
            "alphas": list(self.alphas),
        }
        if self.norms:
            d["norms"] = list(self.norms)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> SystemSpec:
        try:
            return cls(
                kind=d["kind"],
                count=d["count"],
                epsilon=d.get("epsilon"),
                indices=[tuple(i) for i in d.get("indices", [])],
                alphas=[float(a) for a in d.get("alphas", [])],
                norms=[float(a) for a in d.get("norms", [])],
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidArgument(f"malformed system spec: {exc}") from exc


@dataclass(frozen=True)
class EnvelopePair:
    grid: Grid
    time_envelope: np.ndarray
    freq_envelope: np.ndarray
    time_envelope_norm: float
    freq_envelope_norm: float


def gaussian(grid: Grid) -> SampledFunction:
    return sample(grid, lambda t: 2**0.25 * np.exp(-np.pi * t**2))


def gabor_atom(grid: Grid, idx) -> SampledFunction:
    """``exp(2 pi i m t) g(t - n)`` for ``idx = (m, n)``."""
    m, n = GaborIndex(*idx)
    if abs(n) + ATOM_MARGIN >= grid.extent / 2 or abs(m) + ATOM_MARGIN >= grid.dual_extent / 2:
        raise OutOfWindowError(
            f"atom ({m}, {n}) needs |n| + {ATOM_MARGIN:g} < {grid.extent / 2:g} "
            f"and |m| + {ATOM_MARGIN:g} < {grid.dual_extent / 2:g}"
        )
    return sample(
        grid,
        lambda t: 2**0.25 * np.exp(-np.pi * (t - n) ** 2) * np.exp(2j * np.pi * m * t),
    )


def enumerate_gabor(count: int, exclude: Sequence = ()) -> list[GaborIndex]:
    """First ``count`` lattice points ordered by square shell, then lexicographically."""
    exclude = {tuple(e) for e in exclude}
    out: list[GaborIndex] = []
    r = 0
    while len(out) < count:
        shell = sorted(
            (m, n)
            for m in range(-r, r + 1)
            for n in range(-r, r + 1)
            if max(abs(m), abs(n)) == r and (m, n) not in exclude
        )
        out.extend(GaborIndex(m, n) for m, n in shell)
        r += 1
    return out[:count]


def enumerate_exact_G0(count: int) -> SystemSpec:
    if count < 1:
        raise InvalidArgument(f"count must be >= 1, got {count}")
    return SystemSpec("gabor_exact_G0", count, indices=enumerate_gabor(count, exclude=[EXCLUDED]))


def _perturbed(e1: SampledFunction, e: SampledFunction, alpha: float) -> tuple[SampledFunction, float]:
    u = e1 + alpha * e
    return u / u.norm, u.norm


def build_system(grid: Grid, spec: SystemSpec) -> list[SampledFunction]:
    """Materialize the elements described by ``spec`` on ``grid``."""
    if spec.kind in ("gabor_full", "gabor_exact_G0"):
        return [gabor_atom(grid, i) for i in spec.indices[: spec.count]]
    if spec.kind == "perturbed_exact":
        if len(spec.indices) < spec.count + 1 or len(spec.alphas) < spec.count:
            raise InvalidArgument("perturbed_exact spec needs count + 1 indices and count alphas")
        e1 = gabor_atom(grid, spec.indices[0])
        return [
            _perturbed(e1, gabor_atom(grid, spec.indices[k + 1]), spec.alphas[k])[0]
            for k in range(spec.count)
        ]
    raise InvalidArgument("explicit systems carry their own samples")


def bound_checks(
    rep: ConcentrationReport, ref: ConcentrationReport, epsilon: float
) -> dict[str, bool]:
    """The four closeness conditions of a perturbed element against the Gaussian."""
    return {
        "time_mean": abs(rep.time_mean) < epsilon,
        "freq_mean": abs(rep.freq_mean) < epsilon,
        "time_dispersion": rep.time_dispersion < ref.time_dispersion + epsilon,
        "freq_dispersion": rep.freq_dispersion < ref.freq_dispersion + epsilon,
    }


def build_perturbed_exact(
    grid: Grid, count: int, epsilon: float, p: float = 2, q: float = 2
) -> tuple[SystemSpec, list[SampledFunction]]:
    """Construct ``f_1, ..., f_count`` with all four quantities within ``epsilon``.

    Each ``alpha_n`` starts at ``min(2^-n, 0.08) / 2`` and is halved until the
    bounds hold.  Raises :class:`ConstructionFailure` after 60 halvings.
    """
    if not epsilon > 0:
        raise InvalidArgument(f"epsilon must be positive, got {epsilon}")
    if count < 1:
        raise InvalidArgument(f"count must be >= 1, got {count}")
    indices = enumerate_exact_G0(count + 1).indices
    atoms = [gabor_atom(grid, i) for i in indices]
    e1 = atoms[0]
    ref = concentration_report(e1, p, q)

    alphas, norms, elements = [], [], []
    for n in range(1, count + 1):
        alpha = min(2.0**-n, ALPHA_CAP) / 2
        for _ in range(MAX_HALVINGS):
            f, nu = _perturbed(e1, atoms[n], alpha)
            checks = bound_checks(concentration_report(f, p, q), ref, epsilon)
            if all(checks.values()):
                break
            alpha /= 2
        else:
            failed = [k for k, ok in checks.items() if not ok]
            raise ConstructionFailure(
                f"element {n}: {', '.join(failed)} bound still violated after "
                f"{MAX_HALVINGS} halvings (epsilon = {epsilon:g})",
                condition=failed[0],
                element=n,
            )
        alphas.append(alpha)
        norms.append(nu)
        elements.append(f)

    spec = SystemSpec(
        "perturbed_exact", count, epsilon=float(epsilon), indices=indices, alphas=alphas, norms=norms
    )
    return spec, elements


def envelopes(system: Sequence[SampledFunction]) -> EnvelopePair:
    """Pointwise suprema of |f_n| and |fhat_n| with their L2 norms."""
    if not system:
        raise InvalidArgument("empty system")
    grid = system[0].grid
    for f in system[1:]:
        if f.grid != grid:
            raise InvalidArgument("system elements live on different grids")
    phi = np.max([np.abs(f.values) for f in system], axis=0)
    psi = np.max([np.abs(fourier(f).values) for f in system], axis=0)
    return EnvelopePair(
        grid=grid,
        time_envelope=phi,
        freq_envelope=psi,
        time_envelope_norm=math.sqrt(grid.spacing * float(np.sum(phi**2))),
        freq_envelope_norm=math.sqrt(grid.dual_spacing * float(np.sum(psi**2))),
    )


def reconstruct_e(
    system: tuple[SystemSpec, Sequence[SampledFunction]], n: int, alpha: float | None = None
) -> SampledFunction:
    """Recover ``e_{n+1} = (||e_1 + alpha_n e_{n+1}|| f_n - e_1) / alpha_n``.

    ``alpha`` overrides the stored ``alpha_n`` (sensitivity checks).
    """
    spec, elements = system
    if spec.kind != "perturbed_exact":
        raise InvalidArgument(f"reconstruction needs a perturbed_exact system, got {spec.kind}")
    if not 1 <= n <= spec.count:
        raise InvalidArgument(f"n must lie in 1..{spec.count}, got {n}")
    f = elements[n - 1]
    e1 = gabor_atom(f.grid, spec.indices[0])
    a = spec.alphas[n - 1] if alpha is None else alpha
    return (spec.norms[n - 1] * f - e1) / a
