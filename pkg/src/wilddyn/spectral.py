"""Spectral diagnostics on truncations.

Exact structure is used where it exists (the diagonal truncation is
triangular, the cycle blocks are permutations); eigensolves only confirm it.
Operator norms: SVD for p = 2, column/row sums for p = 1/inf, Boyd's power
iteration otherwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import Field, PlanePoint, SparseVector, project_P
from .diagonal import DiagonalOperator, ModulusSchedule, TruncatedMatrix, lambda_k
from .hajek_smith import HSLayout
from .separating import SeparatingSequence

EIG_CAP = 512
CYCLE_CAP = 4096


def diagonal_spectrum(schedule: ModulusSchedule, depth: int | None = None) -> list[complex]:
    depth = schedule.depth if depth is None else depth
    return [lambda_k(k, schedule) for k in range(1, depth + 1)]


def eigenvalues(A: np.ndarray) -> np.ndarray:
    if A.shape[0] > CYCLE_CAP:
        raise ValueError(f"dimension {A.shape[0]} above the dense eigensolve cap")
    return np.linalg.eigvals(A)


def match_distance(a, b) -> float:
    """Largest distance under the optimal pairing of two equal-size point sets."""
    a, b = np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise ValueError("point sets differ in size")
    cost = np.abs(a[:, None] - b[None, :])
    r, c = linear_sum_assignment(cost)
    return float(cost[r, c].max()) if len(r) else 0.0


def cycle_matrix(H: int) -> np.ndarray:
    """S e_i = e_{i+1}, S e_H = e_1."""
    return np.roll(np.eye(H), 1, axis=0)


def roots_of_unity(H: int) -> np.ndarray:
    return np.exp(2j * np.pi * np.arange(H) / H)


@dataclass
class CycleSpectrum:
    H: int
    eigs: np.ndarray
    error: float

    @property
    def passed(self) -> bool:
        return self.error <= 1e-9


def hs_block_spectrum(H: int) -> CycleSpectrum:
    if H < 1:
        raise ValueError("H must be positive")
    if H > CYCLE_CAP:
        raise ValueError(f"H = {H} above the cap {CYCLE_CAP}")
    eigs = eigenvalues(cycle_matrix(H))
    return CycleSpectrum(H, eigs, match_distance(eigs, roots_of_unity(H)))


def roots_nest(H_small: int, H_big: int) -> bool:
    """U_{H_small} inside U_{H_big}, on exponents: j/H_small = (j q)/H_big."""
    if H_big % H_small:
        return False
    q = H_big // H_small
    big = set(range(H_big))
    return all((j * q) % H_big in big and (j * q) * H_small == j * H_big for j in range(H_small))


def root_union_gap(Hs) -> float:
    """Largest gap between consecutive arguments of the union of the U_H."""
    Hs = [int(h) for h in Hs]
    if all(Hs[i + 1] % Hs[i] == 0 for i in range(len(Hs) - 1)):
        # nested chain: the union is U_{max H}
        return 2 * math.pi / Hs[-1]
    if sum(Hs) > 10 ** 6:
        raise ValueError("non-nested union too large to enumerate")
    args = np.unique(np.concatenate([2 * np.pi * np.arange(h) / h for h in Hs]))
    return float(np.diff(np.append(args, 2 * np.pi)).max())


def spectral_radius(A: np.ndarray) -> float:
    if A.shape[0] > EIG_CAP:
        raise ValueError(f"dimension {A.shape[0]} above {EIG_CAP}")
    return float(np.abs(eigenvalues(A)).max())


def _lp(v: np.ndarray, p: float) -> float:
    a = np.abs(v)
    if p == math.inf:
        return float(a.max())
    return float(np.sum(a ** p) ** (1 / p))


def operator_norm(A: np.ndarray, p: float = 2.0, iters: int = 200, seed: int = 0, restarts: int = 8) -> float:
    """||A||_{l^p -> l^p}; for p not in {1, 2, inf} a lower estimate from power iteration.

    Boyd's iteration can stall at a local maximum, so it is restarted from the
    top right singular vector, the basis vectors and random vectors.
    """
    if p == 2:
        return float(np.linalg.norm(A, 2))
    if p == 1:
        return float(np.abs(A).sum(axis=0).max())
    if p == math.inf:
        return float(np.abs(A).sum(axis=1).max())
    q = p / (p - 1)
    dual = lambda v, r: np.abs(v) ** (r - 1) * np.exp(1j * np.angle(v))
    n = A.shape[1]
    rng = np.random.default_rng(seed)
    starts = [np.linalg.svd(A)[2][0].conj()]
    starts += list(np.eye(n)[:min(n, 32)])
    starts += [rng.standard_normal(n) for _ in range(restarts)]
    best = 0.0
    for x in starts:
        x = x + 0j
        x /= _lp(x, p)
        for _ in range(iters):
            y = A @ x
            best = max(best, _lp(y, p))
            z = A.conj().T @ dual(y, p)
            if not np.any(z):
                break
            x_new = dual(z, q)
            x_new /= _lp(x_new, p)
            if np.allclose(x_new, x, rtol=0, atol=1e-14):
                break
            x = x_new
    return best


def mv_partial_sums(A: np.ndarray, T: int, p: float = 2.0) -> np.ndarray:
    """Partial sums of 1/||A^k||, k = 1..T."""
    if A.shape[0] > EIG_CAP:
        raise ValueError(f"dimension {A.shape[0]} above {EIG_CAP}")
    out = np.empty(T)
    P = np.eye(A.shape[0], dtype=A.dtype)
    s = 0.0
    for k in range(T):
        P = P @ A
        n = operator_norm(P, p)
        s += 1.0 / n if n > 0 else math.inf
        out[k] = s
    return out


def prajitura_perturbation(M: TruncatedMatrix | np.ndarray, epsilon: float, lam: complex = 1.0) -> TruncatedMatrix:
    """R + 2 eps lam I; lam must be a unimodular eigenvalue of the truncation,
    so lam (1 + 2 eps) is an eigenvalue of the result."""
    if abs(abs(lam) - 1) > 1e-12:
        raise ValueError("lambda must lie on the unit circle")
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    A = M.matrix if isinstance(M, TruncatedMatrix) else np.asarray(M)
    if np.abs(eigenvalues(A) - lam).min() > 1e-9:
        raise ValueError(f"{lam} is not an eigenvalue of the truncation")
    prov = M.provenance if isinstance(M, TruncatedMatrix) else "matrix"
    B = A.astype(complex) + 2 * epsilon * lam * np.eye(A.shape[0])
    return TruncatedMatrix(B, f"{prov} + 2*{epsilon}*lambda*I")


def orbit_growth(A: np.ndarray, n_vectors: int, T: int, seed: int = 0) -> np.ndarray:
    """||A^t x||_2 for random unit x, shape (n_vectors, T + 1)."""
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((A.shape[0], n_vectors)) + 1j * rng.standard_normal((A.shape[0], n_vectors))
    X /= np.linalg.norm(X, axis=0)
    out = np.empty((n_vectors, T + 1))
    for t in range(T + 1):
        out[:, t] = np.linalg.norm(X, axis=0)
        X = A @ X
    return out


def hs_truncation(layout: HSLayout, forms: SeparatingSequence, n_blocks: int = 1) -> TruncatedMatrix:
    """R_HS on span(e_1, e_2, blocks 1..n_blocks)."""
    n = 2 + sum(layout.period(k) for k in range(1, n_blocks + 1))
    if n > CYCLE_CAP:
        raise ValueError(f"dimension {n} above {CYCLE_CAP}")
    A = np.zeros((n, n), dtype=complex)
    A[0, 0] = A[1, 1] = 1
    for k in range(1, n_blocks + 1):
        H, m, e = layout.period(k), layout.modulus(k), layout.epsilon(k)
        o = layout.offset(k) - 1
        A[o:o + H, o:o + H] = cycle_matrix(H)
        b1, b2 = forms.form(k).coefficients
        v = np.zeros(H)
        v[:m], v[m:2 * m] = e, -e
        A[o:o + H, 0] += v * b1
        A[o:o + H, 1] += v * b2
    return TruncatedMatrix(A, f"R_HS, {n_blocks} blocks")


@dataclass
class KernelProbe:
    degenerate: bool
    kernel_vector: SparseVector | None = None
    residual: float = 0.0
    rows: list[tuple[int, float, float, float]] = field(default_factory=list)  # k, |f_k|, |x_k| forced, 15|f_k|/pi

    def subsequence(self, eps: float) -> list[tuple[int, float, float, float]]:
        return [r for r in self.rows if r[1] >= eps]


def kernel_triviality_probe(op: DiagonalOperator, c: PlanePoint | None = None,
                            depth: int | None = None) -> KernelProbe:
    """N = R - I. A kernel vector with Px = c != 0 needs |x_k| = |f_k(c)| / (m_{k-1} |lambda_k - 1|).

    For F a single line through e_1 the degenerate kernel vector e_1 is returned.
    This is a demonstration of the forcing inequality, not a proof about the
    infinite operator.
    """
    F = op.forms.F
    depth = op.trunc_cap if depth is None else min(depth, op.trunc_cap)
    if F.is_single_line():
        e1 = PlanePoint(1.0, 0.0)
        res = max((abs(op.forms.form(k)(e1)) for k in range(3, depth + 1)), default=0.0)
        if F.field is Field.REAL and F.distance(e1) == 0:
            return KernelProbe(True, SparseVector.basis(1, Field.COMPLEX), res)
        return KernelProbe(True, None, res)
    if c is None:
        c = PlanePoint(1.0, 0.0)
    s = op.schedule
    rows = []
    for k in range(3, depth + 1):
        f = abs(op.forms.form(k)(c))
        gap = abs(lambda_k(k, s) - 1)
        forced = f / (s.modulus(k - 1) * gap) if gap > 0 else math.inf
        rows.append((k, f, forced, 15 * f / math.pi))
    return KernelProbe(False, None, 0.0, rows)


def backward_shift_matrix(n: int, p: float = 2.0) -> np.ndarray:
    """B e_i = (i / (i-1))^(1/p) e_{i-1}, B e_1 = 0, on span(e_1..e_n)."""
    if not 1 <= p < math.inf:
        raise ValueError("backward shift demo needs 1 <= p < inf")
    B = np.zeros((n, n))
    for i in range(2, n + 1):
        B[i - 2, i - 1] = (i / (i - 1)) ** (1 / p)
    return B


def backward_shift_apply(x: SparseVector, t: int, p: float = 2.0) -> SparseVector:
    out = {}
    for i, v in x:
        if i > t:
            # weights telescope: prod_{j=i-t+1}^{i} j/(j-1) = i/(i-t)
            out[i - t] = v * (i / (i - t)) ** (1 / p)
    return SparseVector(out, x.field)


@dataclass
class BackwardShiftReport:
    p: float
    horizon: int
    annihilated: bool
    shift_norms: list[float]
    predicted_norms: list[float]
    partial_sums: list[float]

    @property
    def passed(self) -> bool:
        ok = all(abs(a - b) <= 1e-9 * b for a, b in zip(self.shift_norms, self.predicted_norms))
        return ok and self.annihilated


def backward_shift_demo(p: float = 2.0, horizon: int = 50, seed: int = 0) -> BackwardShiftReport:
    """Finitely supported vectors die, yet ||B^t|| = (t+1)^(1/p) grows and sum 1/||B^t|| diverges."""
    rng = np.random.default_rng(seed)
    killed = True
    for _ in range(10):
        n = int(rng.integers(1, horizon + 1))
        x = SparseVector.from_dense(rng.standard_normal(n))
        killed &= len(backward_shift_apply(x, x.max_index, p)) == 0
    n = horizon + 1
    B = backward_shift_matrix(n, p)
    norms, pred, sums = [], [], []
    P = np.eye(n)
    s = 0.0
    for t in range(1, horizon + 1):
        P = B @ P
        # on l^p, ||B^t|| is attained at e_{t+1}
        v = P[:, t]
        norms.append(_lp(v, p))
        pred.append((t + 1) ** (1 / p))
        s += 1 / norms[-1]
        sums.append(s)
    return BackwardShiftReport(p, horizon, bool(killed), norms, pred, sums)
