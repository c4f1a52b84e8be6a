"""Finite-dimensional operator engine.

Operators live on the weighted l2 space of a `PairedSystem`, expressed in the
orthonormalized basis e_x/sqrt(mu(x)).  Because both actions preserve the
weights, the group unitaries are plain permutation matrices in this basis and
the multiplicators stay diagonal, so the flat matrix trace, Hilbert-Schmidt
inner product and SVD apply without weight bookkeeping.

Algebras are stored as bases that are orthonormal under the normalized
Hilbert-Schmidt inner product <A,B> = Tr(A^* B)/N; with this normalization
the identity and every unitary are unit vectors.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import systems
from .errors import (ContractViolationError, DimensionCapError, NotAFactorError,
                     StructuralError)

DIM_CAP = 200
RANK_RTOL = 1e-8          # relative SVD threshold for rank decisions
CLOSURE_RESIDUAL = 1e-9   # new-direction threshold during closure iteration
SPAN_TOL = 1e-8


def _vec(mats):
    mats = np.asarray(mats, dtype=complex)
    return mats.reshape(mats.shape[0], -1)


def _orthonormal_rows(rows, rtol=1e-12):
    """Orthonormal basis (standard dot) of the row span, via SVD."""
    rows = np.atleast_2d(np.asarray(rows, dtype=complex))
    if rows.size == 0:
        return np.zeros((0, rows.shape[1]), dtype=complex)
    u, s, vh = np.linalg.svd(rows, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return np.zeros((0, rows.shape[1]), dtype=complex)
    rank = int(np.sum(s > rtol * s[0]))
    return vh[:rank]


def rank_of(stack, rtol=RANK_RTOL):
    """Numerical rank of a stack of vectors with threshold rtol * sigma_max."""
    stack = np.atleast_2d(np.asarray(stack, dtype=complex))
    s = np.linalg.svd(stack, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def hs_inner(a, b):
    """Normalized Hilbert-Schmidt inner product Tr(a^* b)/N."""
    n = a.shape[0]
    return np.vdot(a, b) / n


def hs_norm(a):
    return float(np.sqrt(abs(hs_inner(a, a))))


class MatrixAlgebra:
    """Unital self-adjoint-generated subalgebra of M_N, as an orthonormal basis.

    `basis` has shape (k, N, N) and satisfies Tr(B_i^* B_j)/N = delta_ij to
    1e-10; the span contains the identity and is closed under products to
    residual 1e-8.  `generators` keeps the raw generating matrices so
    downstream solvers can use either description of the same span.
    """

    def __init__(self, basis, generators=(), generator_log=()):
        basis = np.asarray(basis, dtype=complex)
        if basis.ndim != 3 or basis.shape[1] != basis.shape[2]:
            raise StructuralError("basis must be a stack of square matrices")
        self.basis = basis
        self.dim = basis.shape[1]
        self.generators = tuple(np.asarray(g, dtype=complex) for g in generators)
        self.generator_log = tuple(generator_log)

    @property
    def dimension(self):
        """Linear dimension of the algebra."""
        return self.basis.shape[0]

    def _rows(self):
        # rows unit-normalized in the standard dot (divide HS-normalized by sqrt(N))
        return _vec(self.basis) / np.sqrt(self.dim)

    def contains(self, mat, tol=SPAN_TOL):
        return self.residual(mat) <= tol

    def residual(self, mat):
        """Normalized-HS distance from mat to the span."""
        v = np.asarray(mat, dtype=complex).reshape(-1) / np.sqrt(self.dim)
        rows = self._rows()
        r = v - rows.T @ (rows.conj() @ v)
        return float(np.linalg.norm(r))

    def orthonormality_defect(self):
        rows = self._rows()
        gram = rows @ rows.conj().T
        return float(np.max(np.abs(gram - np.eye(rows.shape[0]))))

    def contains_identity(self, tol=1e-10):
        return self.residual(np.eye(self.dim)) <= tol

    def closure_defect(self, max_pairs=65536, seed=0):
        """Largest residual of a basis product against the span."""
        k = self.dimension
        rows = self._rows()
        left = np.repeat(np.arange(k), k)
        right = np.tile(np.arange(k), k)
        if left.size > max_pairs:
            rng = np.random.default_rng(seed)
            pick = rng.choice(left.size, size=max_pairs, replace=False)
            left, right = left[pick], right[pick]
        worst = 0.0
        for start in range(0, left.size, 4096):
            li, ri = left[start:start + 4096], right[start:start + 4096]
            prods = np.einsum("aij,ajk->aik", self.basis[li], self.basis[ri])
            v = _vec(prods) / np.sqrt(self.dim)
            resid = v - (v @ rows.conj().T) @ rows
            worst = max(worst, float(np.max(np.linalg.norm(resid, axis=1))))
        return worst

    def is_abelian(self, tol=1e-10):
        for i in range(self.dimension):
            for j in range(i + 1, self.dimension):
                if np.max(np.abs(self.basis[i] @ self.basis[j]
                                 - self.basis[j] @ self.basis[i])) > tol:
                    return False
        return True


def _check_dim(n):
    if n > DIM_CAP:
        raise DimensionCapError(f"ambient dimension {n} exceeds the cap {DIM_CAP}")


def algebra_closure(generators, generator_log=(), residual=CLOSURE_RESIDUAL) -> MatrixAlgebra:
    """Smallest unital algebra (linear span closed under products) containing
    the generators.

    Iteratively multiplies basis pairs, projects out the known span and
    orthonormalizes what remains, until no product leaves a residual above
    the threshold.  Capped at N^2 basis elements, which is always enough.
    """
    gens = [np.asarray(g, dtype=complex) for g in generators]
    if not gens:
        raise StructuralError("need at least one generator")
    n = gens[0].shape[0]
    for g in gens:
        if g.ndim != 2 or g.shape != (n, n):
            raise StructuralError("generators must be square matrices of equal dimension")
    _check_dim(n)
    seed_mats = [np.eye(n, dtype=complex)] + gens
    rows = _orthonormal_rows(_vec(np.stack(seed_mats)) / np.sqrt(n))
    fresh = rows
    while rows.shape[0] < n * n:
        old = rows.reshape(-1, n, n)
        new = fresh.reshape(-1, n, n)
        prods = np.concatenate([
            np.einsum("aij,bjk->abik", new, old).reshape(-1, n, n),
            np.einsum("aij,bjk->abik", old, new).reshape(-1, n, n),
        ])
        v = _vec(prods)
        resid = v - (v @ rows.conj().T) @ rows
        norms = np.linalg.norm(resid, axis=1)
        keep = resid[norms > residual]
        if keep.shape[0] == 0:
            break
        fresh = _orthonormal_rows(keep)
        # re-project: SVD of the residuals can reintroduce tiny span components
        fresh = fresh - (fresh @ rows.conj().T) @ rows
        fresh = _orthonormal_rows(fresh)
        if fresh.shape[0] == 0:
            break
        rows = np.concatenate([rows, fresh])
    basis = rows.reshape(-1, n, n) * np.sqrt(n)
    return MatrixAlgebra(basis, generators=gens, generator_log=generator_log)


def _commutant_rows(constraints, n):
    """Orthonormal rows spanning {vec(X) : [X, B] = 0 for all B}.

    Uses the PSD Gram operator sum_B L_B^* L_B with
    L_B = I (x) B^T - B (x) I (row-major vec), assembled from Kronecker
    blocks, and takes its numerical null space by Hermitian eigendecomposition.
    """
    eye = np.eye(n, dtype=complex)
    gram = np.zeros((n * n, n * n), dtype=complex)
    for b in constraints:
        b = np.asarray(b, dtype=complex)
        bc = b.conj()
        gram += np.kron(eye, (bc @ b.T))
        gram += np.kron((b.conj().T @ b), eye)
        gram -= np.kron(b, bc)
        gram -= np.kron(b.conj().T, b.T)
    evals, evecs = np.linalg.eigh(gram)
    top = max(float(evals[-1]), 0.0)
    tol = (RANK_RTOL ** 2) * top if top > 0 else 1e-24
    null = evecs[:, evals <= max(tol, 1e-20)]
    return null.T  # rows are orthonormal eigenvectors


def commutant(alg: MatrixAlgebra, check_closed=True) -> MatrixAlgebra:
    """All matrices commuting with every basis element of the algebra."""
    n = alg.dim
    _check_dim(n)
    rows = _commutant_rows(alg.basis, n)
    basis = rows.reshape(-1, n, n) * np.sqrt(n)
    out = MatrixAlgebra(basis, generator_log=("commutant",) + alg.generator_log)
    if check_closed:
        defect = out.closure_defect()
        if defect > SPAN_TOL:
            raise ContractViolationError(f"commutant not closed under products (defect {defect:g})")
    return out


def span_distance(a: MatrixAlgebra, b: MatrixAlgebra):
    """Symmetric max residual between the two spans (0 when equal)."""
    ra, rb = a._rows(), b._rows()
    da = ra - (ra @ rb.conj().T) @ rb
    db = rb - (rb @ ra.conj().T) @ ra
    worst = 0.0
    if da.size:
        worst = max(worst, float(np.max(np.linalg.norm(da, axis=1))))
    if db.size:
        worst = max(worst, float(np.max(np.linalg.norm(db, axis=1))))
    return worst


def same_span(a: MatrixAlgebra, b: MatrixAlgebra, tol=SPAN_TOL):
    return a.dimension == b.dimension and span_distance(a, b) <= tol


def rep_unitary(sys: systems.PairedSystem, side: str, element):
    """Permutation unitary of a group element on the weighted l2 basis."""
    n = sys.size
    mat = np.zeros((n, n), dtype=complex)
    if side == systems.LEFT:
        if element not in sys.left:
            raise StructuralError(f"unknown G element {element!r}")
        for x in sys.points:
            mat[sys.point_index[sys.left[element][x]], sys.point_index[x]] = 1.0
    elif side == systems.RIGHT:
        if element not in sys.right:
            raise StructuralError(f"unknown H element {element!r}")
        inv = sys.H.inv(element)
        for x in sys.points:
            mat[sys.point_index[sys.right[inv][x]], sys.point_index[x]] = 1.0
    else:
        raise ValueError("side must be 'G' or 'H'")
    return mat


def multiplicator(sys: systems.PairedSystem, phi, side: str,
                  partition: systems.OrbitPartition | None = None):
    """Diagonal operator from a function given per orbit block of `side`."""
    part = partition if partition is not None else systems.orbits(sys, side)
    if isinstance(phi, dict):
        values = [phi[i] for i in range(len(part.blocks))]
    else:
        values = list(phi)
    if len(values) != len(part.blocks):
        raise StructuralError(
            f"phi has {len(values)} values but the {side}-orbit partition has {len(part.blocks)} blocks")
    diag = np.zeros(sys.size, dtype=complex)
    for x in sys.points:
        diag[sys.point_index[x]] = values[part.point_to_block[x]]
    return np.diag(diag)


def block_indicator(sys: systems.PairedSystem, side: str, block_index: int,
                    partition: systems.OrbitPartition | None = None):
    part = partition if partition is not None else systems.orbits(sys, side)
    phi = [1.0 if i == block_index else 0.0 for i in range(len(part.blocks))]
    return multiplicator(sys, phi, side, part)


def side_algebra(sys: systems.PairedSystem, side: str) -> MatrixAlgebra:
    """The G-side algebra is generated by the G-unitaries and the
    multiplicators constant on H-orbits (and symmetrically for H)."""
    other = systems.RIGHT if side == systems.LEFT else systems.LEFT
    part = systems.orbits(sys, other)
    gens = []
    log = []
    for el in (sys.G if side == systems.LEFT else sys.H):
        gens.append(rep_unitary(sys, side, el))
        log.append(f"U[{side}:{el!r}]")
    for bidx in range(len(part.blocks)):
        gens.append(block_indicator(sys, other, bidx, part))
        log.append(f"chi[{other}-block {bidx}]")
    return algebra_closure(gens, generator_log=tuple(log))


def joint_diagonal_algebra(sys: systems.PairedSystem) -> MatrixAlgebra:
    """Algebra generated by all G-invariant and H-invariant multiplicators."""
    gens = []
    log = []
    for side in (systems.LEFT, systems.RIGHT):
        part = systems.orbits(sys, side)
        for bidx in range(len(part.blocks)):
            gens.append(block_indicator(sys, side, bidx, part))
            log.append(f"chi[{side}-block {bidx}]")
    return algebra_closure(gens, generator_log=tuple(log))


def is_maximal_abelian(alg: MatrixAlgebra, tol=SPAN_TOL):
    return alg.is_abelian() and same_span(commutant(alg), alg, tol)


def is_irreducible(algebras):
    """True iff only scalars commute with every listed algebra; otherwise a
    non-scalar commuting witness matrix is returned."""
    if not algebras:
        raise StructuralError("need at least one algebra")
    n = algebras[0].dim
    for a in algebras:
        if a.dim != n:
            raise StructuralError("ambient dimension mismatch")
    constraints = np.concatenate([a.basis for a in algebras])
    rows = _commutant_rows(constraints, n)
    if rows.shape[0] == 1:
        return True, None
    # witness: a commutant direction orthogonal to the identity
    eye_row = np.eye(n, dtype=complex).reshape(-1) / np.sqrt(n)
    coeffs = rows @ eye_row.conj()
    resid = rows - np.outer(coeffs, eye_row)
    norms = np.linalg.norm(resid, axis=1)
    witness = resid[int(np.argmax(norms))].reshape(n, n) * np.sqrt(n)
    return False, witness


def random_unit_vector(n, rng):
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return v / np.linalg.norm(v)


@dataclass(frozen=True)
class CouplingCertificate:
    value: float
    value_exact: Fraction        # ratio of subspace dimensions
    witness_values: tuple
    spread: float
    cyclic_exists: bool
    separating_exists: bool
    bicyclic_exists: bool
    seed: int

    def to_json(self):
        return {"lambda": self.value, "spread": self.spread,
                "flags": {"cyclic": self.cyclic_exists,
                          "separating": self.separating_exists,
                          "bicyclic": self.bicyclic_exists},
                "seed": self.seed}


def center_intersection(alg: MatrixAlgebra, com: MatrixAlgebra):
    """Orthonormal rows spanning span(alg) ∩ span(com)."""
    ra, rb = alg._rows(), com._rows()
    outside = ra - (ra @ rb.conj().T) @ rb
    u, s, _ = np.linalg.svd(outside, full_matrices=True)
    if s.size == 0:
        inside_coeff = u.conj().T
    else:
        small = np.concatenate([s <= RANK_RTOL * max(s[0], 1e-300),
                                np.ones(u.shape[1] - s.size, dtype=bool)])
        inside_coeff = u[:, small].conj().T
    return inside_coeff @ ra


def _ensure_factor(alg: MatrixAlgebra, com: MatrixAlgebra):
    n = alg.dim
    inter = center_intersection(alg, com)
    if inter.shape[0] == 1:
        return
    eye_row = np.eye(n, dtype=complex).reshape(-1) / np.sqrt(n)
    coeffs = inter @ eye_row.conj()
    resid = inter - np.outer(coeffs, eye_row)
    norms = np.linalg.norm(resid, axis=1)
    witness = resid[int(np.argmax(norms))].reshape(n, n) * np.sqrt(n)
    raise NotAFactorError(
        f"center has dimension {inter.shape[0]}, not a factor", witness=witness)


def mvn_coupling(alg: MatrixAlgebra, h="auto", witnesses=5, seed=1729,
                 com: MatrixAlgebra | None = None) -> CouplingCertificate:
    """Matrix coupling constant tr(P_h)/tr'(P'_h).

    P_h projects onto span(B'h) and P'_h onto span(Bh); with the normalized
    trace Tr/N on both sides the ratio reduces to the dimension ratio of the
    two cyclic subspaces.  With h="auto" the value is taken as the modal
    value over several seeded rotation-invariant unit vectors and the spread
    across witnesses is reported.
    """
    n = alg.dim
    if com is None:
        com = commutant(alg)
    _ensure_factor(alg, com)
    rng = np.random.default_rng(seed)
    if h == "auto":
        vectors = [random_unit_vector(n, rng) for _ in range(max(5, witnesses))]
    else:
        v = np.asarray(h, dtype=complex)
        if np.linalg.norm(v) == 0:
            raise StructuralError("witness vector must be nonzero")
        vectors = [v / np.linalg.norm(v)]
    values = []
    ranks = []
    for v in vectors:
        span_com = com.basis @ v      # (k', n): orbit of v under the commutant
        span_alg = alg.basis @ v
        r_com = rank_of(span_com)
        r_alg = rank_of(span_alg)
        if r_alg == 0:
            raise StructuralError("witness vector generates a zero cyclic subspace")
        values.append(Fraction(r_com, r_alg))
        ranks.append((r_com, r_alg))
    modal = Counter(values).most_common(1)[0][0]
    spread = max(abs(float(v - modal)) / float(modal) for v in values)
    lam = float(modal)
    cyclic_rank = max(r[1] for r in ranks)
    separating_rank = max(r[0] for r in ranks)
    cyclic = modal <= 1
    separating = modal >= 1
    if cyclic != (cyclic_rank == n) or separating != (separating_rank == n):
        raise ContractViolationError(
            "span-rank witness disagrees with the lambda-vs-1 criterion "
            f"(lambda={modal}, ranks={ranks})")
    return CouplingCertificate(lam, modal, tuple(float(v) for v in values), spread,
                               cyclic, separating, cyclic and separating, seed)


@dataclass(frozen=True)
class BicyclicReport:
    cyclic_for_algebra: bool
    cyclic_for_commutant: bool

    @property
    def bicyclic(self):
        return self.cyclic_for_algebra and self.cyclic_for_commutant


def bicyclic_witness(alg: MatrixAlgebra, v, com: MatrixAlgebra | None = None) -> BicyclicReport:
    """Does v generate the whole space under the algebra / its commutant?"""
    v = np.asarray(v, dtype=complex)
    if np.linalg.norm(v) == 0:
        raise StructuralError("witness vector must be nonzero")
    if com is None:
        com = commutant(alg)
    n = alg.dim
    return BicyclicReport(rank_of(alg.basis @ v) == n, rank_of(com.basis @ v) == n)


def matrix_to_json(mat):
    mat = np.asarray(mat, dtype=complex)
    return {"dim": int(mat.shape[0]),
            "entries": [[float(z.real), float(z.imag)] for z in mat.reshape(-1)]}


def matrix_from_json(obj):
    n = int(obj["dim"])
    flat = np.array([complex(re, im) for re, im in obj["entries"]], dtype=complex)
    if flat.size != n * n:
        raise StructuralError("matrix entry count does not match dim header")
    return flat.reshape(n, n)
