"""Small dense symmetric-matrix toolkit used by the rest of the package.

Everything here is sized for the regimes this package works in (d <= 64):
a cyclic Jacobi eigensolver for symmetric matrices, closed-form 2x2 matrix
exponentials (the per-mode blocks of the momentum systems), a scaling-and-
squaring exponential for small dense matrices, planted-spectrum SPD test
matrices, and the reduction of block-structured 2d x 2d systems to per-mode
2x2 blocks sharing one eigenbasis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rng

MAX_DIM = 64
_JACOBI_SWEEPS = 100
_JACOBI_TOL = 1e-14


class MatkitError(ValueError):
    pass


def check_symmetric(H, tol=1e-12, name="H"):
    """Validate and return a float copy of a finite symmetric matrix."""
    a = np.array(H, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise MatkitError("%s must be a square matrix, got shape %s" % (name, (a.shape,)))
    if not np.all(np.isfinite(a)):
        raise MatkitError("%s contains non-finite entries" % name)
    scale = max(1.0, float(np.max(np.abs(a))))
    if np.max(np.abs(a - a.T)) > tol * scale:
        raise MatkitError("%s is not symmetric (max asymmetry %.3e)"
                          % (name, float(np.max(np.abs(a - a.T)))))
    return 0.5 * (a + a.T)


@dataclass(frozen=True)
class SpectralDecomp:
    """Eigenvalues in descending order and the orthogonal eigenbasis.

    H = basis @ diag(eigenvalues) @ basis.T with basis orthogonal.
    """

    eigenvalues: np.ndarray
    basis: np.ndarray

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=float)
        q = np.asarray(self.basis, dtype=float)
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "basis", q)
        d = lam.shape[0]
        if q.shape != (d, d):
            raise MatkitError("basis shape %s does not match %d eigenvalues" % ((q.shape,), d))
        if np.any(np.diff(lam) > 0):
            raise MatkitError("eigenvalues must be in descending order")
        if np.max(np.abs(q.T @ q - np.eye(d))) > 1e-10:
            raise MatkitError("basis is not orthogonal")

    @property
    def dim(self):
        return self.eigenvalues.shape[0]

    def matrix(self):
        return (self.basis * self.eigenvalues) @ self.basis.T

    def to_eigen(self, x):
        """Coordinates of x in the eigenbasis (y = Q^T x)."""
        return self.basis.T @ np.asarray(x, dtype=float)

    def from_eigen(self, y):
        return self.basis @ np.asarray(y, dtype=float)


def sym_eig(H):
    """Spectral decomposition of a symmetric matrix by cyclic Jacobi sweeps.

    Plane rotations are applied in row-cyclic order until the off-diagonal
    Frobenius norm falls below 1e-14 * ||H||_F; raises after 100 sweeps with
    the residual in the message.  Eigenvalues are returned in descending
    order.  Matrices up to 64 x 64.
    """
    a = check_symmetric(H)
    n = a.shape[0]
    if n > MAX_DIM:
        raise MatkitError("sym_eig supports matrices up to %d, got %d" % (MAX_DIM, n))
    q = np.eye(n)
    hnorm = float(np.linalg.norm(a))
    if hnorm == 0.0 or n == 1:
        return SpectralDecomp(np.diag(a).copy(), q)
    thresh = _JACOBI_TOL * hnorm
    off = math.inf
    for _ in range(_JACOBI_SWEEPS):
        # off-diagonal Frobenius norm, summed directly (the textbook
        # ||A||^2 - ||diag||^2 form cancels and floors out near sqrt(eps))
        strict = a - np.diag(np.diag(a))
        off = float(np.linalg.norm(strict))
        if off <= thresh:
            break
        for p in range(n - 1):
            for r in range(p + 1, n):
                apq = a[p, r]
                if apq == 0.0:
                    continue
                diff = a[r, r] - a[p, p]
                if abs(apq) < 1e-150 * abs(diff):
                    # rotation angle at the underflow edge: small-angle form
                    t = apq / diff
                else:
                    tau = diff / (2.0 * apq)
                    t = math.copysign(1.0, tau) / (abs(tau) + math.hypot(1.0, tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                rot = np.array([[c, s], [-s, c]])
                a[[p, r], :] = rot.T @ a[[p, r], :]
                a[:, [p, r]] = a[:, [p, r]] @ rot
                q[:, [p, r]] = q[:, [p, r]] @ rot
    else:
        raise MatkitError("Jacobi iteration did not converge in %d sweeps "
                          "(off-diagonal residual %.3e)" % (_JACOBI_SWEEPS, off))
    lam = np.diag(a).copy()
    order = np.argsort(-lam, kind="stable")
    return SpectralDecomp(lam[order], q[:, order])


def mat_exp_2x2(M, t=1.0):
    """exp(t M) for a real 2x2 matrix, in closed form.

    Writes M = (tr/2) I + K with K^2 = (Delta/4) I, Delta = tr^2 - 4 det, and
    dispatches on the sign of Delta (cosh/sinh, cos/sin, or the defective
    I + tK branch when |Delta| <= 1e-12 * max(1, tr^2)).
    """
    a = np.asarray(M, dtype=float)
    if a.shape != (2, 2) or not np.all(np.isfinite(a)):
        raise MatkitError("mat_exp_2x2 needs a finite 2x2 matrix")
    t = float(t)
    tr = a[0, 0] + a[1, 1]
    det = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
    delta = tr * tr - 4.0 * det
    half = 0.5 * tr
    K = a - half * np.eye(2)
    scale = math.exp(half * t)
    if abs(delta) <= 1e-12 * max(1.0, tr * tr):
        return scale * (np.eye(2) + t * K)
    if delta > 0.0:
        om = 0.5 * math.sqrt(delta)
        return scale * (math.cosh(om * t) * np.eye(2) + (math.sinh(om * t) / om) * K)
    om = 0.5 * math.sqrt(-delta)
    return scale * (math.cos(om * t) * np.eye(2) + (math.sin(om * t) / om) * K)


def mat_exp_dense(M, t=1.0):
    """exp(t M) for a small dense matrix by scaling-and-squaring of a Taylor sum."""
    a = np.asarray(M, dtype=float) * float(t)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise MatkitError("mat_exp_dense needs a square matrix")
    n = a.shape[0]
    if n > MAX_DIM:
        raise MatkitError("mat_exp_dense supports matrices up to %d, got %d" % (MAX_DIM, n))
    if not np.all(np.isfinite(a)):
        raise MatkitError("mat_exp_dense: non-finite input")
    norm1 = float(np.max(np.abs(a).sum(axis=0))) if n else 0.0
    squarings = max(0, int(math.ceil(math.log2(norm1 / 0.5))) if norm1 > 0.5 else 0)
    b = a / (2.0 ** squarings)
    out = np.eye(n)
    term = np.eye(n)
    for k in range(1, 60):
        term = term @ b / k
        out = out + term
        if float(np.max(np.abs(term))) <= 1e-18 * max(1.0, float(np.max(np.abs(out)))):
            break
    for _ in range(squarings):
        out = out @ out
    return out


def condition_spectrum(d, kappa):
    """Planted eigenvalues lambda_i = kappa^{-(i-1)/(d-1)}, descending from 1 to 1/kappa."""
    if d < 1:
        raise MatkitError("dimension must be >= 1")
    if kappa < 1.0:
        raise MatkitError("condition number must be >= 1")
    if d == 1:
        if kappa != 1.0:
            raise MatkitError("d = 1 admits only kappa = 1")
        return np.array([1.0])
    return kappa ** (-np.arange(d) / (d - 1.0))


def haar_orthogonal(d, seed):
    """Haar-distributed orthogonal matrix from the counter RNG (QR sign fix)."""
    g = rng.normals(seed, rng.STREAM_SPD, 0, 0, 0, d * d).reshape(d, d)
    q, r = np.linalg.qr(g)
    return q * np.sign(np.diag(r))


def spd_with_condition(d, kappa, seed):
    """Random SPD matrix with planted spectrum condition_spectrum(d, kappa).

    Deterministic in (d, kappa, seed); the eigenbasis is Haar and the matrix
    is explicitly symmetrized.
    """
    lam = condition_spectrum(d, kappa)
    if d > MAX_DIM:
        raise MatkitError("spd_with_condition supports d up to %d" % MAX_DIM)
    q = haar_orthogonal(d, seed)
    h = (q * lam) @ q.T
    return 0.5 * (h + h.T)


@dataclass(frozen=True)
class Block2x2Family:
    """A 2d x 2d block matrix reduced to d independent 2x2 blocks.

    Represents A = [[a11 I + b11 H, a12 I + b12 H], [a21 I + b21 H,
    a22 I + b22 H]] in the eigenbasis of H: one 2x2 block per eigenvalue.
    blocks has shape (d, 2, 2), ordered like spec.eigenvalues.
    """

    blocks: np.ndarray
    spec: SpectralDecomp

    def __post_init__(self):
        b = np.asarray(self.blocks, dtype=float)
        object.__setattr__(self, "blocks", b)
        if b.shape != (self.spec.dim, 2, 2):
            raise MatkitError("blocks shape %s does not match dimension %d"
                              % ((b.shape,), self.spec.dim))

    @property
    def dim(self):
        return self.spec.dim

    def assemble(self):
        """Dense 2d x 2d matrix in the original coordinates, state order (v, x)."""
        q = self.spec.basis
        out = np.zeros((2 * self.dim, 2 * self.dim))
        for i in range(2):
            for j in range(2):
                out[i * self.dim:(i + 1) * self.dim, j * self.dim:(j + 1) * self.dim] = \
                    (q * self.blocks[:, i, j]) @ q.T
        return out

    def block_exp(self, t):
        """exp(t A_i) for every block, shape (d, 2, 2)."""
        return np.stack([mat_exp_2x2(self.blocks[i], t) for i in range(self.dim)])

    def block_eigenvalues(self):
        """Complex eigenvalue pair of each 2x2 block, shape (d, 2)."""
        tr = self.blocks[:, 0, 0] + self.blocks[:, 1, 1]
        det = (self.blocks[:, 0, 0] * self.blocks[:, 1, 1]
               - self.blocks[:, 0, 1] * self.blocks[:, 1, 0])
        disc = np.asarray(tr * tr - 4.0 * det, dtype=complex)
        root = np.sqrt(disc)
        return np.stack([(tr + root) / 2.0, (tr - root) / 2.0], axis=1)


def block_reduce(p11, p12, p21, p22, spec):
    """Build the Block2x2Family for aI + bH entries.

    Each p is a coefficient pair (a, b) meaning the corresponding block of the
    2d x 2d matrix equals a I + b H; per eigenvalue the entry is a + b lam_i.
    """
    lam = spec.eigenvalues
    blocks = np.empty((spec.dim, 2, 2))
    for (i, j), (a, b) in zip(((0, 0), (0, 1), (1, 0), (1, 1)), (p11, p12, p21, p22)):
        blocks[:, i, j] = a + b * lam
    return Block2x2Family(blocks, spec)
