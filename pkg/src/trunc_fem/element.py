"""Kernels of the TRUNC element.

Shape functions are cubic polynomials in the barycentric coordinates. Every
member of the local space is stored as coefficients over a fixed term basis

    lambda_i                          (d+1 linear terms)
    lambda_i lambda_j,  i < j         (quadratic terms)
    lambda_i^2 lambda_j - lambda_i lambda_j^2,  i < j   (bubble terms)

so the quadratic projection is "drop the bubble coefficients" and its residue
is "keep only the bubble coefficients". Products of terms are integrated in
closed form, hence the stiffness matrices are exact.

Local DOF order: the d+1 vertex values, then for each vertex the d Cartesian
gradient components.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

import numpy as np

from .simplex import BaryFrame, Face, FrameBatch, face, monomial_factor

MODES = ("trunc", "full")


class NonSymmetricMatrixWarning(UserWarning):
    """A non-symmetric matrix was symmetrized before use."""


# --- local DOF layout --------------------------------------------------------

@dataclass(frozen=True)
class LocalDofLayout:
    dim: int

    @property
    def nverts(self) -> int:
        return self.dim + 1

    @property
    def size(self) -> int:
        return (self.dim + 1) ** 2

    def value(self, i: int) -> int:
        return i

    def grad(self, i: int, k: int) -> int:
        return self.nverts + i * self.dim + k

    def slot(self, flat: int):
        """Inverse map: ``('value', i)`` or ``('grad', i, k)``."""
        if not 0 <= flat < self.size:
            raise IndexError(flat)
        if flat < self.nverts:
            return ("value", flat)
        i, k = divmod(flat - self.nverts, self.dim)
        return ("grad", i, k)

    def global_offsets(self) -> np.ndarray:
        """Per local slot: (local vertex, offset inside the vertex's global block)."""
        n, d = self.nverts, self.dim
        vert = np.concatenate([np.arange(n), np.repeat(np.arange(n), d)])
        off = np.concatenate([np.zeros(n, int), np.tile(np.arange(1, d + 1), n)])
        return np.stack([vert, off], axis=1)


# --- reference tables (depend on d only) ---------------------------------------

@dataclass(frozen=True)
class _Tables:
    dim: int
    pairs: tuple
    monomials: np.ndarray       # (nm, d+1) exponents, |alpha| <= 3
    terms: np.ndarray           # (m, nm) term coefficients
    d1: np.ndarray              # (m, d+1, nm) formal first derivatives
    d2: np.ndarray              # (m, d+1, d+1, nm)
    phi_value: np.ndarray       # (d+1, m)
    phi_edge: np.ndarray        # (d+1, d+1, m); zero on the diagonal
    grad_gram: np.ndarray       # (m, m, d+1, d+1): int(d_i T_a d_j T_b) / |K|
    hess_gram: np.ndarray       # (mq, mq, (d+1)**4) over non-linear terms

    @property
    def nlin(self) -> int:
        return self.dim + 1

    @property
    def nterms(self) -> int:
        return (self.dim + 1) ** 2

    @property
    def quad_slice(self) -> slice:
        return slice(self.nlin, self.nlin + len(self.pairs))

    @property
    def bubble_slice(self) -> slice:
        return slice(self.nlin + len(self.pairs), self.nterms)

    def is_bubble(self) -> np.ndarray:
        mask = np.zeros(self.nterms, bool)
        mask[self.bubble_slice] = True
        return mask

    def bubble_index(self, i: int, j: int):
        """(term index, sign) of lambda_i^2 lambda_j - lambda_i lambda_j^2."""
        if i < j:
            return self.nlin + len(self.pairs) + self.pairs.index((i, j)), 1.0
        return self.nlin + len(self.pairs) + self.pairs.index((j, i)), -1.0

    def quad_index(self, i: int, j: int) -> int:
        return self.nlin + self.pairs.index((min(i, j), max(i, j)))

    def eval_monomials(self, lam) -> np.ndarray:
        lam = np.atleast_2d(lam)
        return np.prod(lam[:, None, :] ** self.monomials[None, :, :], axis=-1)


def _monomials(n, maxdeg):
    out = []
    for deg in range(maxdeg + 1):
        for combo in _compositions(deg, n):
            out.append(combo)
    return np.array(out, dtype=int)


def _compositions(total, parts):
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


@lru_cache(maxsize=None)
def tables(dim: int) -> _Tables:
    n = dim + 1
    pairs = tuple(combinations(range(n), 2))
    mons = _monomials(n, 3)
    index = {tuple(a): k for k, a in enumerate(mons)}
    nm = len(mons)
    m = n * n

    def unit(*idx):
        a = [0] * n
        for i in idx:
            a[i] += 1
        return index[tuple(a)]

    terms = np.zeros((m, nm))
    for i in range(n):
        terms[i, unit(i)] = 1.0
    for p, (i, j) in enumerate(pairs):
        terms[n + p, unit(i, j)] = 1.0
        terms[n + len(pairs) + p, unit(i, i, j)] = 1.0
        terms[n + len(pairs) + p, unit(i, j, j)] = -1.0

    # formal partial derivative d/d(lambda_i) as a matrix on monomial coefficients
    dop = np.zeros((n, nm, nm))
    for k, a in enumerate(mons):
        for i in range(n):
            if a[i]:
                b = a.copy()
                b[i] -= 1
                dop[i, index[tuple(b)], k] = a[i]
    d1 = np.einsum("ipk,tk->tip", dop, terms)
    d2 = np.einsum("jqp,tip->tijq", dop, d1)

    mass = np.array([[monomial_factor(tuple(a + b), dim) for b in mons] for a in mons])
    grad_gram = np.einsum("aip,pq,bjq->abij", d1, mass, d1, optimize=True)
    nl = slice(n, m)
    h = d2[nl].reshape(m - n, n * n, nm)
    hess_gram = np.einsum("aIp,pq,bJq->abIJ", h, mass, h, optimize=True)
    # axes (i, j, k, l) of d_ij T_a d_kl T_b; contracted against g_ik g_jl
    hess_gram = hess_gram.reshape(m - n, m - n, n**4)

    nb = n + len(pairs)
    phi_value = np.zeros((n, m))
    phi_edge = np.zeros((n, n, m))
    for i in range(n):
        phi_value[i, i] = 1.0
        for j in range(n):
            if j == i:
                continue
            p = pairs.index((min(i, j), max(i, j)))
            s = 1.0 if i < j else -1.0
            phi_value[i, nb + p] += s
            phi_edge[i, j, n + p] = 0.5
            phi_edge[i, j, nb + p] = 0.5 * s
    tab = _Tables(dim, pairs, mons, terms, d1, d2, phi_value, phi_edge, grad_gram, hess_gram)
    return tab


# --- shape functions -----------------------------------------------------------

def shape_coefficients(grads_or_edges_dim, edges) -> np.ndarray:
    """Coefficients of the nodal basis over the term basis, batched over cells.

    ``edges[..., i, j, :] = a_j - a_i``. Returns ``(..., (d+1)**2, (d+1)**2)``.
    """
    d = grads_or_edges_dim
    tab = tables(d)
    n = d + 1
    lead = edges.shape[:-3]
    value = np.broadcast_to(tab.phi_value, lead + tab.phi_value.shape)
    grad = np.einsum("...ijk,ijt->...ikt", edges, tab.phi_edge)
    grad = grad.reshape(lead + (n * d, tab.nterms))
    return np.concatenate([value, grad], axis=-2)


class LocalPolynomial:
    """A member of the local space on one cell, held as term coefficients."""

    def __init__(self, frame: BaryFrame, coeffs):
        self.frame = frame
        self.coeffs = np.asarray(coeffs, dtype=float)
        self._tab = tables(frame.dim)

    def _lam(self, x=None, lam=None):
        if lam is None:
            lam = self.frame.barycentric(x)
        return np.atleast_2d(np.asarray(lam, dtype=float))

    def __call__(self, x=None, *, lam=None):
        lam = self._lam(x, lam)
        mon = self._tab.eval_monomials(lam)
        return mon @ (self._tab.terms.T @ self.coeffs)

    def gradient(self, x=None, *, lam=None):
        lam = self._lam(x, lam)
        mon = self._tab.eval_monomials(lam)
        formal = np.einsum("qp,tip,t->qi", mon, self._tab.d1, self.coeffs)
        return formal @ self.frame.grads

    def hessian(self, x=None, *, lam=None):
        lam = self._lam(x, lam)
        mon = self._tab.eval_monomials(lam)
        formal = np.einsum("qp,tijp,t->qij", mon, self._tab.d2, self.coeffs)
        g = self.frame.grads
        return np.einsum("qij,ik,jl->qkl", formal, g, g)

    def quadratic_part(self) -> "LocalPolynomial":
        c = self.coeffs.copy()
        c[self._tab.bubble_slice] = 0.0
        return LocalPolynomial(self.frame, c)

    def bubble_part(self) -> "LocalPolynomial":
        c = np.zeros_like(self.coeffs)
        c[self._tab.bubble_slice] = self.coeffs[self._tab.bubble_slice]
        return LocalPolynomial(self.frame, c)

    def dofs(self) -> np.ndarray:
        """Nodal DOFs (values then gradients at the vertices)."""
        n = self.frame.dim + 1
        lam = np.eye(n)
        return np.concatenate([self(lam=lam), self.gradient(lam=lam).ravel()])


class ShapeSet:
    """Nodal basis of the TRUNC element on one cell.

    Row ``r`` of :attr:`coeffs` is the shape function dual to local DOF ``r``.
    """

    def __init__(self, frame: BaryFrame):
        self.frame = frame
        self.layout = LocalDofLayout(frame.dim)
        self.coeffs = shape_coefficients(frame.dim, frame.edges())
        self._tab = tables(frame.dim)

    def __len__(self):
        return self.layout.size

    def function(self, r: int) -> LocalPolynomial:
        return LocalPolynomial(self.frame, self.coeffs[r])

    def combine(self, local_coeffs) -> LocalPolynomial:
        local_coeffs = np.asarray(local_coeffs, dtype=float)
        if local_coeffs.shape != (self.layout.size,):
            raise ValueError(f"expected {self.layout.size} local coefficients")
        return LocalPolynomial(self.frame, local_coeffs @ self.coeffs)

    def values(self, lam) -> np.ndarray:
        """All shape functions at barycentric points, shape ``(q, ndof)``."""
        mon = self._tab.eval_monomials(lam)
        return mon @ (self.coeffs @ self._tab.terms).T

    def gradients(self, lam) -> np.ndarray:
        mon = self._tab.eval_monomials(lam)
        formal = np.einsum("qp,rip->qri", mon, np.tensordot(self.coeffs, self._tab.d1, 1))
        return formal @ self.frame.grads

    def hessians(self, lam) -> np.ndarray:
        mon = self._tab.eval_monomials(lam)
        formal = np.einsum("qp,tijp,rt->qrij", mon, self._tab.d2, self.coeffs)
        g = self.frame.grads
        return np.einsum("qrij,ik,jl->qrkl", formal, g, g)


def shape_set(frame: BaryFrame) -> ShapeSet:
    return ShapeSet(frame)


def project_quadratic(shape: ShapeSet, local_coeffs) -> LocalPolynomial:
    """The local quadratic interpolant of the element function with these DOFs."""
    return shape.combine(local_coeffs).quadratic_part()


def interpolate(frame: BaryFrame, value_fn, grad_fn) -> np.ndarray:
    """Local DOF vector of a function given by its value and gradient callables."""
    v = frame.vertices
    vals = np.array([value_fn(p) for p in v], dtype=float)
    grads = np.array([grad_fn(p) for p in v], dtype=float)
    return np.concatenate([vals, grads.ravel()])


# --- stiffness -------------------------------------------------------------------

@dataclass(frozen=True)
class LocalMatrices:
    A: np.ndarray
    b: np.ndarray
    mode: str
    eps: float
    grad: np.ndarray = None
    hess_quadratic: np.ndarray = None
    hess_bubble: np.ndarray = None
    hess_mixed: np.ndarray = None


def _check_eps_mode(eps, mode):
    if not eps >= 0:
        raise ValueError(f"eps must be non-negative, got {eps}")
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")


def term_grams(dim, metric, measure):
    """Exact gradient and Hessian Gram matrices of the term basis, batched.

    ``metric[..., i, j] = grad(lambda_i) . grad(lambda_j)``. The Hessian Gram
    only covers the non-linear terms (linear terms have zero Hessian).
    """
    tab = tables(dim)
    n = dim + 1
    lead = metric.shape[:-2]
    mq = tab.nterms - n
    G = np.einsum("abij,...ij->...ab", tab.grad_gram, metric)
    gg = np.einsum("...ik,...jl->...ijkl", metric, metric).reshape(lead + (n**4,))
    H = (gg @ tab.hess_gram.reshape(mq * mq, n**4).T).reshape(lead + (mq, mq))
    measure = np.asarray(measure)[..., None, None]
    return G * measure, H * measure


def element_matrices(batch: FrameBatch, eps: float, mode: str = "trunc",
                     components: bool = False):
    """Element stiffness matrices for every cell of ``batch``.

    Returns ``A`` of shape ``(nc, ndof, ndof)``; with ``components=True`` also a
    dict with the gradient matrix and the quadratic/bubble/mixed Hessian blocks.
    """
    _check_eps_mode(eps, mode)
    d = batch.dim
    tab = tables(d)
    n = d + 1
    C = shape_coefficients(d, batch.edges())
    Gt, Ht = term_grams(d, batch.metric(), batch.measure)
    grad = C @ Gt @ C.swapaxes(-1, -2)
    Cn = C[..., n:]
    q = slice(0, len(tab.pairs))
    b = slice(len(tab.pairs), tab.nterms - n)
    Cq, Cb = Cn[..., q], Cn[..., b]
    hq = Cq @ Ht[..., q, q] @ Cq.swapaxes(-1, -2)
    hb = Cb @ Ht[..., b, b] @ Cb.swapaxes(-1, -2)
    A = grad + eps**2 * (hq + hb)
    hm = None
    if mode == "full" or components:
        hm = Cq @ Ht[..., q, b] @ Cb.swapaxes(-1, -2)
        if mode == "full":
            A = A + eps**2 * (hm + hm.swapaxes(-1, -2))
    if components:
        return A, {"grad": grad, "hess_quadratic": hq, "hess_bubble": hb, "hess_mixed": hm}
    return A


def local_matrices(frame: BaryFrame, eps: float, mode: str = "trunc") -> LocalMatrices:
    """Exact local stiffness of b_h (``trunc``) or the plain broken form (``full``)."""
    batch = FrameBatch(frame.vertices[None], frame.grads[None],
                       np.array([frame.measure]), np.array([frame.signed_det]))
    A, parts = element_matrices(batch, eps, mode, components=True)
    return LocalMatrices(A[0], np.zeros(A.shape[-1]), mode, float(eps),
                         parts["grad"][0], parts["hess_quadratic"][0],
                         parts["hess_bubble"][0], parts["hess_mixed"][0])


# --- face quadrature and weak continuity ----------------------------------------------

def face_quadrature(f: Face, vertex_values) -> np.ndarray:
    """Vertex-average rule ``|F|/d * sum_j v(a_j)``; values may be vector-valued."""
    vals = np.asarray(vertex_values, dtype=float)
    d = len(f.vertices)
    if vals.shape[0] != d:
        raise ValueError(f"need values at the {d} face vertices")
    return f.area / d * vals.sum(axis=0)


def weak_continuity_residual(frame: BaryFrame, S, local_coeffs, *, return_scale=False):
    """``sum_i n_i^T S Q_{F_i}(grad of the bubble residue)`` for one cell.

    With ``return_scale=True`` also returns the sum of the absolute values of
    the individual terms, the natural yardstick for round-off.
    """
    S = np.asarray(S, dtype=float)
    if not np.allclose(S, S.T, rtol=0, atol=0):
        warnings.warn("S is not symmetric; using (S + S^T)/2", NonSymmetricMatrixWarning,
                      stacklevel=2)
        S = 0.5 * (S + S.T)
    shape = ShapeSet(frame)
    residue = shape.combine(local_coeffs).bubble_part()
    n = frame.dim + 1
    vgrad = residue.gradient(lam=np.eye(n))
    total, scale = 0.0, 0.0
    for i in range(n):
        fi = face(frame, i)
        q = face_quadrature(fi, np.delete(vgrad, i, axis=0))
        term = fi.normal @ S @ q
        total += term
        scale += np.abs(fi.normal) @ np.abs(S) @ np.abs(q)
    if return_scale:
        return float(total), float(scale)
    return float(total)


# --- batched evaluation -----------------------------------------------------------

@lru_cache(maxsize=32)
def _term_tables_at(dim, lam_bytes, shape):
    lam = np.frombuffer(lam_bytes).reshape(shape)
    tab = tables(dim)
    mon = tab.eval_monomials(lam)
    return (mon @ tab.terms.T,
            np.einsum("qp,tip->qti", mon, tab.d1),
            np.einsum("qp,tijp->qtij", mon, tab.d2))


def term_tables_at(dim: int, lam):
    """Values, formal gradients and formal Hessians of the term basis at ``lam``."""
    lam = np.ascontiguousarray(lam, dtype=float)
    return _term_tables_at(dim, lam.tobytes(), lam.shape)


def evaluate_batch(batch: FrameBatch, local_dofs, lam, *, coeffs=None):
    """Value, gradient and Hessian of element functions at barycentric points.

    ``local_dofs`` has shape ``(nc, ndof)``; the result arrays have leading
    shape ``(nc, q)``.
    """
    d = batch.dim
    if coeffs is None:
        coeffs = shape_coefficients(d, batch.edges())
    tau = np.einsum("cr,crt->ct", local_dofs, coeffs)
    TV, TD1, TD2 = term_tables_at(d, lam)
    val = tau @ TV.T
    g = batch.grads
    grad = np.einsum("ct,qti,cik->cqk", tau, TD1, g, optimize=True)
    formal = np.einsum("ct,qtij->cqij", tau, TD2, optimize=True)
    hess = np.einsum("cqij,cik,cjl->cqkl", formal, g, g, optimize=True)
    return val, grad, hess


def shape_values_batch(batch: FrameBatch, lam, *, coeffs=None):
    """All shape functions at barycentric points, shape ``(nc, ndof, q)``."""
    d = batch.dim
    if coeffs is None:
        coeffs = shape_coefficients(d, batch.edges())
    TV, _, _ = term_tables_at(d, lam)
    return coeffs @ TV.T
