"""Second generalized eigenpair of L x = lambda D x for a SparseGraph.

The problem is solved in the symmetric form

    A u = lambda u,   A = D^-1/2 L D^-1/2,   x = D^-1/2 u

with a single-vector LOBPCG iteration. The trivial direction D^1/2 1 is
projected out of every search vector, so the smallest eigenpair of the
deflated operator is the Fiedler pair. Only products with the sparse
adjacency are used, and the inner loop works in preallocated buffers:
at megapixel sizes a fresh temporary costs ten times more than the BLAS
call that fills it.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg.blas import daxpy, ddot, dnrm2, dscal

from .graph import SparseGraph, apply_laplacian

try:
    from scipy.sparse._sparsetools import csr_matvec as _csr_matvec
except ImportError:  # pragma: no cover - private scipy kernel moved
    _csr_matvec = None

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITERS = 2000
# eigenvalues of A live in [0, 2]; below this the graph is treated as disconnected
DEGENERATE_EIGENVALUE = 1e-9
_REFRESH_EVERY = 25
# drop the previous direction once it is numerically inside span(u, w)
_P_KEEP = 1e-8


@dataclass
class EigenResult:
    vector: np.ndarray  # D-normalized, over all n + k nodes
    value: float
    residual: float  # ||L x - lambda D x||_2 / ||x||_D
    iterations: int
    converged: bool
    degenerate: bool = False


def rayleigh(g: SparseGraph, z) -> float:
    """(z' L z) / (z' D z)."""
    z = np.asarray(z, dtype=np.float64)
    denom = float(np.dot(z * g.degree, z))
    if denom <= 0:
        raise ValueError("Rayleigh quotient of a zero vector")
    return float(np.dot(z, apply_laplacian(g, z))) / denom


def _fix_sign(x: np.ndarray) -> np.ndarray:
    """Make the largest-magnitude entry positive; near-ties go to the first index."""
    mag = np.abs(x)
    i = int(np.argmax(mag >= mag.max() * (1 - 1e-9)))
    return -x if x[i] < 0 else x


class _NormalizedOperator:
    """u -> (I - D^-1/2 W D^-1/2) u, plus deflation and Jacobi scaling."""

    def __init__(self, g: SparseGraph, deflate: bool):
        if np.any(g.degree <= 0):
            raise ValueError("graph has isolated nodes")
        self.n = g.n_nodes
        self.sqrt_d = np.sqrt(g.degree)
        self.inv_sqrt_d = 1.0 / self.sqrt_d
        A = g.adjacency.tocsr(copy=True)
        rows = np.repeat(np.arange(self.n), np.diff(A.indptr))
        A.data = -A.data * self.inv_sqrt_d[rows] * self.inv_sqrt_d[A.indices]
        self.neg_scaled_adj = A
        self.null = self.sqrt_d / dnrm2(self.sqrt_d) if deflate else None
        # diag(A) = L_ii / d_i; identically 1 without self-loops
        inv_diag = g.degree / (g.degree - g.adjacency.diagonal())
        self.inv_diag = None if np.all(inv_diag == 1.0) else inv_diag

    def matvec(self, u: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
        if out is None:
            out = np.empty(self.n)
        np.copyto(out, u)
        A = self.neg_scaled_adj
        if _csr_matvec is not None:
            _csr_matvec(self.n, self.n, A.indptr, A.indices, A.data, u, out)
        else:
            out += A @ u
        return out

    def project(self, v: np.ndarray) -> np.ndarray:
        """Remove the nullspace component of `v` in place."""
        if self.null is not None:
            daxpy(self.null, v, a=-ddot(self.null, v))
        return v

    def residual_norm(self, u, au, lam, r, scratch) -> float:
        """||L x - lam D x|| for x = D^-1/2 u, ||u|| = 1. Leaves A u - lam u in r."""
        np.multiply(u, -lam, out=r)
        r += au
        np.multiply(r, self.sqrt_d, out=scratch)
        return float(dnrm2(scratch))


def fiedler(g: SparseGraph, tol: float = DEFAULT_TOL, max_iters: int = DEFAULT_MAX_ITERS,
            seed: int = 0, deflate: bool = True) -> EigenResult:
    """Fiedler vector of `g` by Jacobi-preconditioned LOBPCG (block size 1).

    With ``deflate=False`` the iteration runs on the full operator and
    converges to the trivial constant eigenvector instead.

    Returns the best iterate flagged ``converged=False`` if `max_iters` is
    reached first, and ``degenerate=True`` when the eigenvalue is numerically
    zero (disconnected graph).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    op = _NormalizedOperator(g, deflate)
    rng = np.random.default_rng(seed)
    N = g.n_nodes

    u = op.project(rng.standard_normal(N))
    nu = dnrm2(u)
    if nu == 0:
        raise ValueError("deflated space is empty (single-node graph)")
    dscal(1.0 / nu, u)
    au = op.matvec(u)
    w, aw = np.empty(N), np.empty(N)
    p, ap = np.empty(N), np.empty(N)
    scratch, best_u = np.empty(N), np.empty(N)
    have_p = False
    best_res = np.inf
    it = 0

    while True:
        lam = ddot(u, au)
        res = op.residual_norm(u, au, lam, w, scratch)
        if res <= tol and it % _REFRESH_EVERY != 0:
            # au is only tracked; confirm with an exact product before stopping
            op.matvec(u, out=au)
            lam = ddot(u, au)
            res = op.residual_norm(u, au, lam, w, scratch)
        if res < best_res:
            best_res = res
            np.copyto(best_u, u)
        if res <= tol or it >= max_iters:
            break
        it += 1

        # w holds A u - lam u; precondition and orthogonalize in place
        if op.inv_diag is not None:
            w *= op.inv_diag
        op.project(w)
        scale = dnrm2(w)
        daxpy(u, w, a=-ddot(u, w))
        nw = dnrm2(w)
        if nw <= 1e-12 * scale or nw == 0:
            break  # residual direction lost to roundoff
        op.matvec(w, out=aw)
        norms = [1.0, nw]

        use_p = False
        if have_p:
            # p = c1 w' + c2 p' from orthonormal w', p', so |p| = p_norm;
            # orthogonalize against u and w, carrying A p along by linearity
            for q, aq, qq in ((u, au, 1.0), (w, aw, nw * nw)):
                c = ddot(q, p) / qq
                daxpy(q, p, a=-c)
                daxpy(aq, ap, a=-c)
            npn = dnrm2(p)
            if npn > _P_KEEP * p_norm:
                norms.append(npn)
                use_p = True

        # Rayleigh-Ritz on span(u, w, p); the basis is orthogonal, so only
        # its norms enter
        basis = [u, w, p] if use_p else [u, w]
        abasis = [au, aw, ap] if use_p else [au, aw]
        m = len(basis)
        H = np.empty((m, m))
        for i in range(m):
            for j in range(i, m):
                H[i, j] = H[j, i] = ddot(basis[i], abasis[j]) / (norms[i] * norms[j])
        _, C = np.linalg.eigh(H)
        c = C[:, 0] / np.array(norms)

        # next search direction c1 w + c2 p, assembled in the w buffers
        p_norm = float(np.hypot(*C[1:, 0])) if m == 3 else abs(C[1, 0])
        dscal(c[1], w)
        dscal(c[1], aw)
        if use_p:
            daxpy(p, w, a=c[2])
            daxpy(ap, aw, a=c[2])
        dscal(c[0], u)
        daxpy(w, u)
        dscal(c[0], au)
        daxpy(aw, au)
        p, w = w, p
        ap, aw = aw, ap
        have_p = p_norm > 0

        if it % _REFRESH_EVERY == 0:
            op.project(u)
            dscal(1.0 / dnrm2(u), u)
            op.matvec(u, out=au)

    u = op.project(best_u)
    dscal(1.0 / dnrm2(u), u)
    au = op.matvec(u)
    lam = float(ddot(u, au))
    res = op.residual_norm(u, au, lam, w, scratch)
    x = _fix_sign(op.inv_sqrt_d * u)
    converged = res <= tol
    degenerate = deflate and lam < DEGENERATE_EIGENVALUE
    if not converged:
        log.warning("fiedler: no convergence after %d iterations (residual %.3g)", it, res)
    return EigenResult(x, lam, res, it, converged, degenerate)
