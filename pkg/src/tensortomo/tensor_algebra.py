"""Symmetric tensor algebra with canonical multi-index storage.

A symmetric rank-``m`` tensor in dimension ``n`` is stored as one complex value
per nondecreasing multi-index, i.e. ``C(n+m-1, m)`` values instead of ``n**m``.
Indices are 0-based throughout the package (``e_1`` is axis 0).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np


class TensorSizeError(ValueError):
    """Raised on rank or dimension mismatches."""


class TensorRankError(ValueError):
    """Raised when an operation needs a larger rank."""


@lru_cache(maxsize=None)
def multi_indices(n: int, m: int) -> tuple[tuple[int, ...], ...]:
    """Canonical (nondecreasing) multi-indices of length ``m`` over ``range(n)``."""
    return tuple(itertools.combinations_with_replacement(range(n), m))


@lru_cache(maxsize=None)
def _position(n: int, m: int) -> dict[tuple[int, ...], int]:
    return {idx: k for k, idx in enumerate(multi_indices(n, m))}


def canonical(index) -> tuple[int, ...]:
    return tuple(sorted(index))


def multiplicity(index) -> int:
    """Number of distinct permutations of ``index``."""
    counts = np.bincount(np.asarray(index, dtype=int)) if len(index) else []
    out = math.factorial(len(index))
    for c in counts:
        out //= math.factorial(int(c))
    return out


def num_components(n: int, m: int) -> int:
    return math.comb(n + m - 1, m)


@lru_cache(maxsize=None)
def multiplicities(n: int, m: int) -> np.ndarray:
    arr = np.array([multiplicity(i) for i in multi_indices(n, m)], dtype=float)
    arr.flags.writeable = False
    return arr


def component_position(n: int, index) -> int:
    """Storage position of an arbitrary (not necessarily sorted) multi-index."""
    return _position(n, len(index))[canonical(index)]


@lru_cache(maxsize=None)
def _power_exponents(n: int, m: int) -> np.ndarray:
    # exps[c, i] = how many times axis i occurs in canonical index c
    exps = np.zeros((num_components(n, m), n), dtype=int)
    for c, idx in enumerate(multi_indices(n, m)):
        for i in idx:
            exps[c, i] += 1
    return exps


def power_weights(n: int, m: int, w) -> np.ndarray:
    """Weights ``c`` with ``eval_power(f, w) == c @ f.components``.

    ``w`` may carry leading batch axes: shape ``(..., n)`` gives ``(..., N)``.
    """
    w = np.asarray(w, dtype=complex)
    if w.shape[-1] != n:
        raise TensorSizeError(f"direction has length {w.shape[-1]}, expected {n}")
    exps = _power_exponents(n, m)
    prod = np.ones(w.shape[:-1] + (exps.shape[0],), dtype=complex)
    for i in range(n):
        e = exps[:, i]
        if e.any():
            prod = prod * w[..., i : i + 1] ** e
    return prod * multiplicities(n, m)


def distinct_permutations(index) -> list[tuple[int, ...]]:
    return sorted(set(itertools.permutations(index)))


def mixed_weights(n: int, vectors) -> np.ndarray:
    """Weights ``c`` with ``c @ f.components == sum_I f_I v1_{i1} ... vm_{im}``.

    The sum runs over all ``n**m`` index tuples; ``f`` is symmetric, so this is
    the contraction of ``f`` with the symmetrized product of the vectors.
    """
    vecs = [np.asarray(v, dtype=complex) for v in vectors]
    m = len(vecs)
    out = np.zeros(num_components(n, m), dtype=complex)
    for c, idx in enumerate(multi_indices(n, m)):
        for perm in distinct_permutations(idx):
            term = 1.0 + 0j
            for v, i in zip(vecs, perm):
                term *= v[i]
            out[c] += term
    return out


@dataclass(frozen=True)
class SymTensor:
    """Symmetric complex tensor of rank ``m`` in dimension ``n``."""

    n: int
    m: int
    components: np.ndarray

    def __post_init__(self):
        comps = np.array(self.components, dtype=complex).reshape(-1)
        if self.n < 1 or self.m < 0:
            raise TensorSizeError(f"invalid (n, m) = ({self.n}, {self.m})")
        if comps.size != num_components(self.n, self.m):
            raise TensorSizeError(
                f"{comps.size} components given, rank {self.m} in dim {self.n} "
                f"needs {num_components(self.n, self.m)}"
            )
        comps.flags.writeable = False
        object.__setattr__(self, "components", comps)

    @classmethod
    def zeros(cls, n: int, m: int) -> "SymTensor":
        return cls(n, m, np.zeros(num_components(n, m), dtype=complex))

    @classmethod
    def from_dense(cls, dense, check: bool = True) -> "SymTensor":
        """Read canonical components of an already symmetric dense array."""
        dense = np.asarray(dense, dtype=complex)
        m = dense.ndim
        n = dense.shape[0] if m else 1
        if m and any(s != n for s in dense.shape):
            raise TensorSizeError(f"dense shape {dense.shape} is not n^m")
        if check and m > 1 and not np.allclose(symmetrize(dense, n).to_dense(), dense, atol=1e-12):
            raise ValueError("dense array is not symmetric")
        comps = [dense[idx] for idx in multi_indices(n, m)] if m else [dense[()]]
        return cls(n, m, np.array(comps))

    def __getitem__(self, index) -> complex:
        if isinstance(index, (int, np.integer)):
            index = (index,)
        if len(index) != self.m:
            raise TensorSizeError(f"index of length {len(index)} for rank {self.m}")
        return self.components[component_position(self.n, index)]

    def to_dense(self) -> np.ndarray:
        out = np.empty((self.n,) * self.m, dtype=complex)
        if self.m == 0:
            out[()] = self.components[0]
            return out
        for value, idx in zip(self.components, multi_indices(self.n, self.m)):
            for perm in set(itertools.permutations(idx)):
                out[perm] = value
        return out

    def norm(self) -> float:
        """Frobenius norm of the dense tensor."""
        w = multiplicities(self.n, self.m)
        return float(np.sqrt(np.sum(w * np.abs(self.components) ** 2)))

    def _check(self, other: "SymTensor"):
        if not isinstance(other, SymTensor) or (self.n, self.m) != (other.n, other.m):
            raise TensorSizeError("operands differ in rank or dimension")

    def __add__(self, other):
        self._check(other)
        return SymTensor(self.n, self.m, self.components + other.components)

    def __sub__(self, other):
        self._check(other)
        return SymTensor(self.n, self.m, self.components - other.components)

    def __mul__(self, alpha):
        return SymTensor(self.n, self.m, self.components * complex(alpha))

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1


def symmetrize_dense(raw: np.ndarray) -> np.ndarray:
    """Average a dense array over all permutations of its axes."""
    raw = np.asarray(raw, dtype=complex)
    m = raw.ndim
    if m <= 1:
        return raw.copy()
    acc = np.zeros_like(raw)
    perms = list(itertools.permutations(range(m)))
    for p in perms:
        acc += np.transpose(raw, p)
    return acc / len(perms)


def symmetrize(raw, n: int, m: int | None = None) -> SymTensor:
    """Symmetrization of a dense rank-``m`` array with ``n**m`` entries.

    ``raw`` is shaped ``(n,)*m``, or flat with ``m`` given explicitly.
    """
    raw = np.asarray(raw, dtype=complex)
    if m is None:
        if raw.ndim and raw.shape != (n,) * raw.ndim:
            raise TensorSizeError(f"array of shape {raw.shape} is not (n,)*m for n={n}")
        m = raw.ndim
    if raw.size != n**m:
        raise TensorSizeError(f"array of size {raw.size} does not hold rank {m} in dim {n}")
    raw = raw.reshape((n,) * m)
    sym = symmetrize_dense(raw)
    if m == 0:
        return SymTensor(n, 0, [sym[()]])
    return SymTensor(n, m, np.array([sym[idx] for idx in multi_indices(n, m)]))


def _product_table(n: int, m: int, k: int):
    """For each canonical index of rank m+k: list of (pos_f, pos_g, weight).

    Implements sigma(f x g) on canonical storage: the average over all splits of
    the output index into an m-part and a k-part.
    """
    return _product_table_cached(n, m, k)


@lru_cache(maxsize=None)
def _product_table_cached(n: int, m: int, k: int):
    pos_f = _position(n, m)
    pos_g = _position(n, k)
    total = math.comb(m + k, m)
    rows = []
    for idx in multi_indices(n, m + k):
        acc: dict[tuple[int, int], float] = {}
        for sel in itertools.combinations(range(m + k), m):
            fi = tuple(idx[s] for s in sel)
            gi = tuple(idx[s] for s in range(m + k) if s not in sel)
            key = (pos_f[fi], pos_g[gi])
            acc[key] = acc.get(key, 0.0) + 1.0 / total
        rows.append(tuple((a, b, w) for (a, b), w in acc.items()))
    return tuple(rows)


def sym_product_components(f: np.ndarray, g: np.ndarray, n: int, m: int, k: int) -> np.ndarray:
    """Symmetric product on raw component arrays with arbitrary leading axes."""
    table = _product_table(n, m, k)
    out = np.zeros(np.broadcast_shapes(f.shape[:-1], g.shape[:-1]) + (len(table),), dtype=complex)
    for c, row in enumerate(table):
        for a, b, w in row:
            out[..., c] += w * f[..., a] * g[..., b]
    return out


def sym_product(f: SymTensor, g: SymTensor) -> SymTensor:
    """Symmetrized tensor product ``f (.) g = sigma(f (x) g)``."""
    if f.n != g.n:
        raise TensorSizeError(f"dimension mismatch {f.n} vs {g.n}")
    comps = sym_product_components(f.components, g.components, f.n, f.m, g.m)
    return SymTensor(f.n, f.m + g.m, comps)


def kronecker_delta(n: int) -> SymTensor:
    return SymTensor.from_dense(np.eye(n), check=False)


def i_delta(f: SymTensor) -> SymTensor:
    """``i_delta f = sigma(f (x) delta)``, raising the rank by two."""
    return sym_product(f, kronecker_delta(f.n))


def i_delta_components(f: np.ndarray, n: int, m: int) -> np.ndarray:
    """:func:`i_delta` on raw components with leading (e.g. grid) axes."""
    return sym_product_components(f, kronecker_delta(n).components, n, m, 2)


def eval_power(f: SymTensor, w) -> complex:
    """``<f, w^m> = sum f_{i1..im} w_i1 ... w_im`` for a complex vector ``w``."""
    w = np.asarray(w, dtype=complex)
    if w.shape != (f.n,):
        raise TensorSizeError(f"vector of shape {w.shape} for dimension {f.n}")
    return complex(power_weights(f.n, f.m, w) @ f.components)


def eval_power_dense(raw: np.ndarray, w) -> complex:
    """Full ``n**m`` multilinear sum; independent of canonical storage."""
    out = np.asarray(raw, dtype=complex)
    w = np.asarray(w, dtype=complex)
    while out.ndim:
        out = out @ w
    return complex(out)


@lru_cache(maxsize=None)
def _i_delta_matrix(n: int, m: int) -> np.ndarray:
    # columns: i_delta applied to the canonical basis of S^{m-2}
    ncol = num_components(n, m - 2)
    eye = np.eye(ncol, dtype=complex)
    mat = i_delta_components(eye, n, m - 2).T
    mat.flags.writeable = False
    return mat


def isotropy_project_components(f: np.ndarray, n: int, m: int):
    """Batched least-squares projection onto the range of ``i_delta``.

    ``f`` has shape ``(..., N_m)``; returns ``(v, residual)`` with ``v`` of shape
    ``(..., N_{m-2})`` and residual the Frobenius distance ``|f - i_delta v|``.
    """
    if m < 2:
        raise TensorRankError(f"isotropy projection needs rank >= 2, got {m}")
    B = _i_delta_matrix(n, m)
    wts = multiplicities(n, m)
    # normal equations in the Frobenius inner product: B^H W B v = B^H W f
    gram = B.conj().T @ (wts[:, None] * B)
    rhs = np.einsum("cj,c,...c->...j", B.conj(), wts, f)
    v = np.linalg.solve(gram, rhs[..., None])[..., 0]
    r = f - v @ B.T
    residual = np.sqrt(np.sum(wts * np.abs(r) ** 2, axis=-1))
    return v, residual


def isotropy_project(f: SymTensor) -> tuple[SymTensor, float]:
    """Closest partially isotropic tensor ``i_delta(v)`` to ``f``.

    Returns
    -------
    v : SymTensor
        Rank ``m - 2`` minimizer of ``|f - i_delta(v)|``.
    residual : float
        The attained Frobenius distance; zero iff ``f`` is partially isotropic.
    """
    v, res = isotropy_project_components(f.components, f.n, f.m)
    return SymTensor(f.n, f.m - 2, v), float(res)
