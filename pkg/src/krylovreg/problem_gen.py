"""Synthetic discrete ill-posed test problems with prescribed spectra.

A problem is ``A = U diag(sigma) V^T`` with seeded random orthonormal
factors, an exact solution ``x_true``, ``b_true = A x_true`` and Gaussian
white noise rescaled so that ``||e|| / ||b_true||`` equals the requested
level exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "SpectrumSpec",
    "ProblemSpec",
    "TestProblem",
    "DistinctGroup",
    "make_spectrum",
    "assemble_problem",
    "group_distinct",
    "random_orthonormal",
]

_KINDS = ("severe", "power", "explicit")


@dataclass(frozen=True)
class SpectrumSpec:
    """Description of a singular value sequence.

    Parameters
    ----------
    kind : {"severe", "power", "explicit"}
        ``severe`` gives ``zeta * rho**-k``, ``power`` gives
        ``zeta * k**-alpha`` (``k`` runs over distinct values).
        ``explicit`` uses ``values`` as the distinct singular values.
    n : int
        Total number of singular values, multiplicities included.
    multiplicities : sequence of int, optional
        Multiplicity of each distinct value; must sum to ``n``.
        Defaults to all ones.
    """

    kind: str
    n: int
    zeta: float = 1.0
    rho: Optional[float] = None
    alpha: Optional[float] = None
    values: Optional[tuple] = None
    multiplicities: Optional[tuple] = None

    def __post_init__(self):
        # normalise list inputs so the spec stays hashable
        if self.values is not None:
            object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if self.multiplicities is not None:
            object.__setattr__(
                self, "multiplicities", tuple(int(c) for c in self.multiplicities)
            )
        self.validate()

    @property
    def counts(self) -> tuple:
        if self.multiplicities is None:
            if self.kind == "explicit" and self.values is not None:
                return (1,) * len(self.values)
            return (1,) * self.n
        return self.multiplicities

    @property
    def s(self) -> int:
        """Number of distinct singular values."""
        return len(self.counts)

    def validate(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown spectrum kind {self.kind!r}; expected one of {_KINDS}")
        if self.n < 1:
            raise ValueError(f"n must be positive, got {self.n}")
        if not self.zeta > 0:
            raise ValueError(f"zeta must be positive, got {self.zeta}")
        if self.kind == "severe":
            if self.rho is None or not self.rho > 1:
                raise ValueError(f"severe spectrum requires rho > 1, got rho={self.rho}")
        elif self.kind == "power":
            if self.alpha is None or not self.alpha > 0:
                raise ValueError(f"power spectrum requires alpha > 0, got alpha={self.alpha}")
        else:
            if not self.values:
                raise ValueError("explicit spectrum requires a non-empty list of values")
            vals = np.asarray(self.values)
            if np.any(~np.isfinite(vals)) or np.any(vals <= 0):
                raise ValueError("explicit singular values must be finite and positive")
        if self.multiplicities is not None:
            if any(c < 1 for c in self.multiplicities):
                raise ValueError("multiplicities must be positive integers")
            if sum(self.multiplicities) != self.n:
                raise ValueError(
                    f"multiplicities sum to {sum(self.multiplicities)}, expected n={self.n}"
                )
        if self.kind == "explicit":
            if len(self.values) != self.s:
                raise ValueError(
                    f"explicit spectrum lists {len(self.values)} values "
                    f"but the multiplicities describe {self.s} distinct values"
                )
            if sum(self.counts) != self.n:
                raise ValueError(f"explicit spectrum has {sum(self.counts)} values, expected n={self.n}")
            d = np.diff(np.asarray(self.values))
            if self.multiplicities is None:
                if np.any(d > 0):
                    raise ValueError("explicit singular values must be nonincreasing")
            elif np.any(d >= 0):
                raise ValueError("distinct explicit singular values must be strictly decreasing")

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "n": self.n, "zeta": self.zeta}
        if self.rho is not None:
            out["rho"] = self.rho
        if self.alpha is not None:
            out["alpha"] = self.alpha
        if self.values is not None:
            out["values"] = list(self.values)
        if self.multiplicities is not None:
            out["multiplicities"] = list(self.multiplicities)
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "SpectrumSpec":
        return cls(**d)


@dataclass(frozen=True)
class ProblemSpec:
    """Dimensions, spectrum, noise level and seed of a test problem."""

    m: int
    n: int
    spectrum: SpectrumSpec
    noise_level: float = 1e-3
    seed: int = 0
    x_true: Optional[tuple] = None  # None means ones(n)

    def __post_init__(self):
        if self.x_true is not None:
            object.__setattr__(self, "x_true", tuple(float(v) for v in self.x_true))
        self.validate()

    def validate(self):
        if self.m < self.n:
            raise ValueError(f"require m >= n, got m={self.m}, n={self.n}")
        if self.spectrum.n != self.n:
            raise ValueError(f"spectrum has n={self.spectrum.n} but problem has n={self.n}")
        if not 0 <= self.noise_level < 1:
            raise ValueError(f"noise_level must lie in [0, 1), got {self.noise_level}")
        if self.x_true is not None and len(self.x_true) != self.n:
            raise ValueError(f"x_true has length {len(self.x_true)}, expected {self.n}")

    @property
    def x_true_kind(self) -> str:
        return "ones" if self.x_true is None else "custom"

    def to_dict(self) -> dict:
        out = {
            "m": self.m,
            "n": self.n,
            "spectrum": self.spectrum.to_dict(),
            "noise_level": self.noise_level,
            "seed": self.seed,
            "x_true_kind": self.x_true_kind,
        }
        if self.x_true is not None:
            out["x_true"] = list(self.x_true)
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "ProblemSpec":
        return cls(
            m=int(d["m"]),
            n=int(d["n"]),
            spectrum=SpectrumSpec.from_dict(d["spectrum"]),
            noise_level=float(d["noise_level"]),
            seed=int(d["seed"]),
            x_true=d.get("x_true"),
        )


@dataclass
class TestProblem:
    """A generated problem together with its exact factors."""

    __test__ = False  # keep pytest from collecting this class

    A: np.ndarray
    U: np.ndarray
    V: np.ndarray
    sigma: np.ndarray
    x_true: np.ndarray
    b_true: np.ndarray
    e: np.ndarray
    b: np.ndarray
    spec: Optional[ProblemSpec] = field(default=None, repr=False)

    @property
    def groups(self) -> list:
        """Distinct-value groups taken from the generating spectrum."""
        if self.spec is not None:
            return _groups_from_counts(self.sigma, self.spec.spectrum.counts)
        return group_distinct(self.sigma, 0.0)


@dataclass(frozen=True)
class DistinctGroup:
    value: float
    multiplicity: int
    start: int
    stop: int

    @property
    def index_range(self) -> range:
        return range(self.start, self.stop)

    def __iter__(self):
        # allows ``value, mult = group`` style unpacking
        return iter((self.value, self.multiplicity))


def make_spectrum(spec: SpectrumSpec) -> np.ndarray:
    """Expand ``spec`` into a nonincreasing vector of length ``spec.n``."""
    spec.validate()
    idx = np.arange(1, spec.s + 1, dtype=float)
    if spec.kind == "severe":
        distinct = spec.zeta * spec.rho ** (-idx)
    elif spec.kind == "power":
        distinct = spec.zeta * idx ** (-spec.alpha)
    else:
        distinct = np.asarray(spec.values, dtype=float)
    return np.repeat(distinct, spec.counts)


def random_orthonormal(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    """Orthonormal columns from the QR factor of a standard normal matrix.

    Columns are sign-normalised so that ``R`` has a positive diagonal, which
    makes the result a deterministic function of the random draw.
    """
    G = rng.standard_normal((rows, cols))
    Q, R = np.linalg.qr(G)
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return Q * signs


def assemble_problem(
    spec: ProblemSpec,
    U: Optional[np.ndarray] = None,
    V: Optional[np.ndarray] = None,
) -> TestProblem:
    """Build a :class:`TestProblem` from ``spec``.

    ``U`` and ``V`` override the random factors (useful for diagonal toy
    problems). The random stream is consumed in a fixed order (U, V, noise)
    so every quantity is a deterministic function of ``spec.seed``.
    """
    spec.validate()
    m, n = spec.m, spec.n
    sigma = make_spectrum(spec.spectrum)
    rng = np.random.default_rng(spec.seed)
    U_rand = random_orthonormal(rng, m, n)
    V_rand = random_orthonormal(rng, n, n)
    U = U_rand if U is None else np.asarray(U, dtype=float)
    V = V_rand if V is None else np.asarray(V, dtype=float)
    if U.shape != (m, n) or V.shape != (n, n):
        raise ValueError(f"factor shapes {U.shape}, {V.shape} do not match m={m}, n={n}")

    A = (U * sigma) @ V.T
    x_true = np.ones(n) if spec.x_true is None else np.array(spec.x_true, dtype=float)
    b_true = A @ x_true
    bt_norm = np.linalg.norm(b_true)
    e = rng.standard_normal(m)
    if spec.noise_level > 0:
        if bt_norm == 0:
            raise ValueError("relative noise level is undefined for a zero b_true")
        e *= spec.noise_level * bt_norm / np.linalg.norm(e)
    else:
        e[:] = 0.0
    return TestProblem(
        A=A, U=U, V=V, sigma=sigma, x_true=x_true, b_true=b_true, e=e, b=b_true + e, spec=spec
    )


def _groups_from_counts(sigma: np.ndarray, counts: Sequence[int]) -> list:
    groups = []
    start = 0
    for c in counts:
        groups.append(DistinctGroup(float(np.mean(sigma[start:start + c])), int(c), start, start + c))
        start += c
    return groups


def group_distinct(sigma, rel_tol: float = 0.0) -> list:
    """Group a nonincreasing positive vector into runs of equal values.

    Adjacent entries whose relative difference is at most ``rel_tol`` are
    merged; ``rel_tol=0`` groups exact duplicates only. The group value is
    the mean of its members.

    Returns
    -------
    list of DistinctGroup
        Each group unpacks as ``(value, multiplicity)`` and carries its
        ``start:stop`` index range.
    """
    sigma = np.asarray(sigma, dtype=float)
    if sigma.size == 0:
        return []
    counts = [1]
    for prev, cur in zip(sigma[:-1], sigma[1:]):
        scale = max(abs(prev), abs(cur))
        if abs(prev - cur) <= rel_tol * scale:
            counts[-1] += 1
        else:
            counts.append(1)
    return _groups_from_counts(sigma, counts)
