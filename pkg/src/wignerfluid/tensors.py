"""Fully symmetric tensors over three spatial indices, and fluid moments.

A rank-r symmetric tensor is stored by its independent components only,
addressed by the sorted index tuple (``(0, 0, 2)`` stands for xxz, zxx and
xzx alike). Ranks 2..5 carry 6, 10, 15 and 21 components. A leading batch
shape is allowed, so a profile of tensors on a grid is a single object.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import csvio

__all__ = [
    "SymTensor",
    "symmetrize",
    "canonical_indices",
    "scalar_pressure",
    "heat_flux_vector",
    "projection_tensor",
    "GyrotropicDecomposition",
    "decompose_gyrotropic",
    "MomentSet",
    "moments_from_phase_space",
    "isotropic_rank4_residual",
]

_AXES = "xyz"


@lru_cache(maxsize=None)
def canonical_indices(rank: int) -> tuple[tuple[int, ...], ...]:
    return tuple(itertools.combinations_with_replacement(range(3), rank))


@lru_cache(maxsize=None)
def _dense_map(rank: int) -> np.ndarray:
    """Position in component storage of every dense index, in C order."""
    lookup = {idx: pos for pos, idx in enumerate(canonical_indices(rank))}
    return np.array(
        [lookup[tuple(sorted(idx))] for idx in itertools.product(range(3), repeat=rank)],
        dtype=np.intp,
    )


@lru_cache(maxsize=None)
def _gather_first(rank: int) -> np.ndarray:
    """Flat dense offsets of each canonical index (used to read components)."""
    return np.array(
        [np.ravel_multi_index(idx, (3,) * rank) for idx in canonical_indices(rank)]
        if rank
        else [0],
        dtype=np.intp,
    )


def symmetrize(arr, rank: int | None = None) -> np.ndarray:
    """Average a dense array over all permutations of its last ``rank`` axes."""
    arr = np.asarray(arr)
    if rank is None:
        rank = arr.ndim
    if rank <= 1:
        return arr.copy()
    lead = arr.ndim - rank
    perms = list(itertools.permutations(range(rank)))
    out = np.zeros_like(arr)
    for p in perms:
        out = out + np.transpose(arr, tuple(range(lead)) + tuple(lead + i for i in p))
    return out / len(perms)


class SymTensor:
    """Symmetric rank-``rank`` tensor (optionally batched) in canonical storage."""

    __slots__ = ("rank", "components")

    def __init__(self, rank: int, components):
        components = np.asarray(components)
        ncomp = math.comb(rank + 2, 2)
        if components.shape[-1:] != (ncomp,):
            raise ValueError(f"rank {rank} needs {ncomp} components, got shape {components.shape}")
        self.rank = rank
        self.components = components

    # construction ---------------------------------------------------------
    @classmethod
    def zeros(cls, rank: int, batch_shape=(), dtype=float) -> "SymTensor":
        return cls(rank, np.zeros(tuple(batch_shape) + (math.comb(rank + 2, 2),), dtype=dtype))

    @classmethod
    def from_dense(cls, arr, symmetric: bool = False) -> "SymTensor":
        """Build from a dense ``(..., 3, ..., 3)`` array.

        Unless ``symmetric`` is set the input is symmetrized first, so the
        stored components are the permutation average.
        """
        arr = np.asarray(arr)
        rank = 0
        while rank < arr.ndim and arr.shape[arr.ndim - 1 - rank] == 3:
            rank += 1
        return cls.from_dense_rank(arr, rank, symmetric=symmetric)

    @classmethod
    def from_dense_rank(cls, arr, rank: int, symmetric: bool = False) -> "SymTensor":
        arr = np.asarray(arr)
        if not symmetric:
            arr = symmetrize(arr, rank)
        batch = arr.shape[: arr.ndim - rank]
        flat = arr.reshape(batch + (3**rank,))
        return cls(rank, flat[..., _gather_first(rank)])

    @classmethod
    def from_function(cls, rank: int, func, dtype=float) -> "SymTensor":
        """Components from ``func(index_tuple)`` evaluated on canonical indices."""
        return cls(rank, np.array([func(idx) for idx in canonical_indices(rank)], dtype=dtype))

    # access ---------------------------------------------------------------
    @property
    def ncomp(self) -> int:
        return self.components.shape[-1]

    @property
    def batch_shape(self) -> tuple:
        return self.components.shape[:-1]

    @property
    def dtype(self):
        return self.components.dtype

    def position(self, index) -> int:
        index = tuple(sorted(int(i) for i in index))
        if len(index) != self.rank or any(i < 0 or i > 2 for i in index):
            raise IndexError(f"bad index {index} for rank {self.rank}")
        return canonical_indices(self.rank).index(index)

    def __getitem__(self, index):
        if isinstance(index, str):
            index = tuple(_AXES.index(c) for c in index)
        return self.components[..., self.position(index)]

    def to_dense(self) -> np.ndarray:
        dense = self.components[..., _dense_map(self.rank)]
        return dense.reshape(self.batch_shape + (3,) * self.rank)

    def multiplicities(self) -> np.ndarray:
        """Number of dense entries each stored component stands for."""
        out = []
        for idx in canonical_indices(self.rank):
            counts = np.bincount(idx, minlength=3)
            out.append(math.factorial(self.rank) // math.prod(math.factorial(c) for c in counts))
        return np.array(out)

    def norm(self) -> np.ndarray:
        """Frobenius norm over the dense tensor (batched)."""
        return np.sqrt(np.sum(self.multiplicities() * np.abs(self.components) ** 2, axis=-1))

    # arithmetic -----------------------------------------------------------
    def _check(self, other: "SymTensor"):
        if not isinstance(other, SymTensor) or other.rank != self.rank:
            raise TypeError("operands must be SymTensors of equal rank")

    def __add__(self, other):
        self._check(other)
        return SymTensor(self.rank, self.components + other.components)

    def __sub__(self, other):
        self._check(other)
        return SymTensor(self.rank, self.components - other.components)

    def __neg__(self):
        return SymTensor(self.rank, -self.components)

    def __mul__(self, scalar):
        # array scalars broadcast against the batch shape
        s = np.asarray(scalar)
        if s.ndim:
            s = s[..., None]
        return SymTensor(self.rank, self.components * s)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / np.asarray(scalar))

    def allclose(self, other: "SymTensor", rtol=1e-12, atol=0.0) -> bool:
        self._check(other)
        return bool(np.allclose(self.components, other.components, rtol=rtol, atol=atol))

    def __repr__(self):
        return f"SymTensor(rank={self.rank}, batch={self.batch_shape}, dtype={self.dtype})"

    # serialization --------------------------------------------------------
    def csv_rows(self):
        if self.batch_shape:
            raise ValueError("CSV export is for a single tensor, not a batch")
        for idx, val in zip(canonical_indices(self.rank), self.components):
            label = "".join(_AXES[i] for i in idx)
            if np.iscomplexobj(self.components):
                yield (label, val.real, val.imag)
            else:
                yield (label, val)

    def to_csv(self, path=None) -> str:
        header = ["indices", "re", "im"] if np.iscomplexobj(self.components) else ["indices", "value"]
        return csvio.write(path, header, self.csv_rows())

    @classmethod
    def from_csv(cls, path) -> "SymTensor":
        header, rows = csvio.read(path)
        labels = [r[0] for r in rows]
        rank = len(labels[0])
        if header == ["indices", "re", "im"]:
            vals = np.array([float(r[1]) + 1j * float(r[2]) for r in rows])
        elif header == ["indices", "value"]:
            vals = np.array([float(r[1]) for r in rows])
        else:
            raise ValueError(f"unexpected header {header}")
        expect = ["".join(_AXES[i] for i in idx) for idx in canonical_indices(rank)]
        if labels != expect:
            raise ValueError("rows are not in canonical order")
        return cls(rank, vals)


# ---------------------------------------------------------------------------
# contractions and decompositions


def _as_dense(t, rank):
    if isinstance(t, SymTensor):
        if t.rank != rank:
            raise ValueError(f"expected rank {rank}, got {t.rank}")
        return t.to_dense()
    return np.asarray(t)


def scalar_pressure(P) -> np.ndarray:
    """p = P_ii / 3."""
    d = _as_dense(P, 2)
    return np.trace(d, axis1=-2, axis2=-1) / 3.0


def heat_flux_vector(Q) -> np.ndarray:
    """q_i = Q_jji / 2."""
    d = _as_dense(Q, 3)
    return 0.5 * np.einsum("...jji->...i", d)


def projection_tensor(axis=(0.0, 0.0, 1.0)) -> np.ndarray:
    """h_ij = delta_ij - b_i b_j for the unit vector b along ``axis``."""
    b = np.asarray(axis, dtype=float)
    b = b / np.linalg.norm(b)
    return np.eye(3) - np.outer(b, b)


@dataclass(frozen=True)
class GyrotropicDecomposition:
    p_perp: float
    p_par: float
    axis: tuple
    residual: float

    def reconstruct(self) -> np.ndarray:
        b = np.asarray(self.axis, dtype=float)
        return self.p_perp * projection_tensor(b) + self.p_par * np.outer(b, b)


def decompose_gyrotropic(P, axis=(0.0, 0.0, 1.0)) -> GyrotropicDecomposition:
    """Split P into P_perp h + P_par b b about ``axis``.

    The Frobenius norm of what the gyrotropic form cannot represent is
    reported as ``residual``; a large residual is not an error.
    """
    d = _as_dense(P, 2)
    if d.shape != (3, 3):
        raise ValueError("decompose_gyrotropic takes a single rank-2 tensor")
    b = np.asarray(axis, dtype=float)
    b = b / np.linalg.norm(b)
    p_par = float(b @ d @ b)
    p_perp = float((np.trace(d) - p_par) / 2.0)
    recon = p_perp * projection_tensor(b) + p_par * np.outer(b, b)
    resid = float(np.linalg.norm(d - recon))
    return GyrotropicDecomposition(p_perp, p_par, tuple(b), resid)


# ---------------------------------------------------------------------------
# moments of a sampled velocity distribution


@dataclass
class MomentSet:
    n: float
    u: np.ndarray
    P: SymTensor
    Q: SymTensor
    R: SymTensor | None = None
    S: SymTensor | None = None


def _axis_weights(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    w = np.empty_like(v)
    dv = np.diff(v)
    w[1:-1] = 0.5 * (dv[1:] + dv[:-1])
    w[0] = 0.5 * dv[0]
    w[-1] = 0.5 * dv[-1]
    return w


def moments_from_phase_space(vx, vy, vz, f, mass: float = 1.0, max_rank: int = 4,
                             edge_tol: float = 1e-6) -> MomentSet:
    """Velocity moments n, u, P, Q, R of f sampled on a tensor-product grid.

    Trapezoidal quadrature along each axis. Mass sitting on the outermost
    layer of grid cells above ``edge_tol`` of the total means the grid does
    not contain the support, and raises ``ValueError``.
    """
    f = np.asarray(f, dtype=float)
    axes = [np.asarray(a, dtype=float) for a in (vx, vy, vz)]
    if f.shape != tuple(a.size for a in axes):
        raise ValueError("f shape does not match the velocity axes")
    w = np.einsum("i,j,k->ijk", *[_axis_weights(a) for a in axes])
    fw = f * w
    n = fw.sum()
    if n <= 0:
        raise ValueError("distribution has non-positive density")
    edge = np.zeros(f.shape, dtype=bool)
    edge[[0, -1], :, :] = True
    edge[:, [0, -1], :] = True
    edge[:, :, [0, -1]] = True
    if np.abs(fw[edge]).sum() > edge_tol * abs(n):
        raise ValueError("velocity grid does not contain the support of f")

    V = np.meshgrid(*axes, indexing="ij")
    u = np.array([(fw * Vi).sum() / n for Vi in V])
    C = [Vi - ui for Vi, ui in zip(V, u)]

    def centered(rank):
        comps = []
        for idx in canonical_indices(rank):
            prod = fw
            for i in idx:
                prod = prod * C[i]
            comps.append(mass * prod.sum())
        return SymTensor(rank, np.array(comps))

    P = centered(2)
    Q = centered(3)
    R = centered(4) if max_rank >= 4 else None
    S = centered(5) if max_rank >= 5 else None
    return MomentSet(n=float(n), u=u, P=P, Q=Q, R=R, S=S)


def isotropic_rank4_residual(R) -> tuple[float, float]:
    """Project a rank-4 tensor on the symmetric isotropic form.

    Returns ``(alpha, rel_residual)`` with R ~ alpha (dd + dd + dd).
    """
    d = _as_dense(R, 4)
    I = np.eye(3)
    T = (np.einsum("ij,kl->ijkl", I, I) + np.einsum("ik,jl->ijkl", I, I)
         + np.einsum("il,jk->ijkl", I, I))
    alpha = float(np.sum(d * T) / np.sum(T * T))
    scale = np.linalg.norm(d)
    resid = float(np.linalg.norm(d - alpha * T) / scale) if scale else 0.0
    return alpha, resid
