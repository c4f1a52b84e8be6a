"""Heisenberg group elements, commuting lattices, Weyl systems, and the
rational torus models that feed the operator engine.

Central phases are stored as turn counts (fractions of a full rotation) and
kept as exact `Fraction` values whenever the inputs are rational, so lattice
commutation statements are integer arithmetic rather than float comparisons.
"""

from __future__ import annotations

import cmath
import itertools
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import operators, systems
from .errors import DimensionCapError, DiscretizationError, StructuralError


def mod1(t):
    """Reduce a turn count into [0, 1), preserving Fraction exactness."""
    if isinstance(t, Fraction):
        return t - (t.numerator // t.denominator)
    if isinstance(t, int):
        return Fraction(0)
    return t - math.floor(t)


def turns_to_complex(t):
    return cmath.exp(2j * cmath.pi * float(t))


@dataclass(frozen=True)
class HeisenbergElement:
    """Element (a, b, alpha) with alpha = exp(2 pi i turns)."""
    a: object
    b: object
    turns: object

    def __post_init__(self):
        object.__setattr__(self, "turns", mod1(self.turns))

    @property
    def alpha(self):
        return turns_to_complex(self.turns)

    def is_central(self):
        return self.a == 0 and self.b == 0


H_IDENTITY = HeisenbergElement(0, 0, 0)


def h_multiply(x: HeisenbergElement, y: HeisenbergElement) -> HeisenbergElement:
    """(a,b,alpha)(a',b',alpha') = (a+a', b+b', alpha alpha' e^{2 pi i a b'})."""
    return HeisenbergElement(x.a + y.a, x.b + y.b, mod1(x.turns + y.turns + x.a * y.b))


def h_inverse(x: HeisenbergElement) -> HeisenbergElement:
    return HeisenbergElement(-x.a, -x.b, mod1(-x.turns + x.a * x.b))


def h_commutator(x: HeisenbergElement, y: HeisenbergElement) -> HeisenbergElement:
    return h_multiply(h_multiply(x, y), h_multiply(h_inverse(x), h_inverse(y)))


@dataclass(frozen=True)
class LatticeIndex:
    """Integer coordinates (m, n, r) in the lattice built from (lambda1, lambda2)."""
    m: int
    n: int
    r: int
    lambda1: Fraction
    lambda2: Fraction

    def __post_init__(self):
        object.__setattr__(self, "lambda1", Fraction(self.lambda1))
        object.__setattr__(self, "lambda2", Fraction(self.lambda2))
        if self.lambda1 <= 0 or self.lambda2 <= 0:
            raise StructuralError("lattice scale parameters must be positive")

    def swapped(self):
        """Index with the same integers in the companion lattice."""
        return LatticeIndex(self.m, self.n, self.r, self.lambda2, self.lambda1)


def lattice_embed(idx: LatticeIndex, swap=False) -> HeisenbergElement:
    """(m, n, r) -> (m lambda1, n / lambda2, r lambda1/lambda2 turns); with
    swap=True the companion lattice with the two scales interchanged."""
    l1, l2 = (idx.lambda2, idx.lambda1) if swap else (idx.lambda1, idx.lambda2)
    return HeisenbergElement(idx.m * l1, Fraction(idx.n) / l2, mod1(Fraction(idx.r) * l1 / l2))


def cross_lattice_commutator(idx1: LatticeIndex, idx2: LatticeIndex):
    """Central phase (in turns) of the group commutator of two embedded
    lattice elements.  Zero whenever the indices live in companion lattices;
    (m n' - m' n) lambda1/lambda2 mod 1 within a single lattice."""
    x = lattice_embed(idx1)
    y = lattice_embed(idx2)
    c = h_commutator(x, y)
    if not c.is_central():
        raise StructuralError("commutator of lattice elements must be central")
    return c.turns


# ---------------------------------------------------------------------------
# Sampled-line representation

@dataclass(frozen=True)
class GridSpec:
    """Periodic window of `points` samples with rational spacing."""
    points: int
    spacing: Fraction

    def __post_init__(self):
        object.__setattr__(self, "spacing", Fraction(self.spacing))
        if self.points < 1 or self.spacing <= 0:
            raise StructuralError("grid needs at least one point and positive spacing")

    @property
    def length(self):
        return self.points * self.spacing

    def phase_step(self, n):
        """Smallest a > 0 with n*a*length integral; multiples of it keep the
        periodic wrap of the phase factor exact."""
        return Fraction(1) / (abs(n) * self.length)


def rho_n_operator(n: int, a, b, alpha_turns, grid: GridSpec) -> np.ndarray:
    """Unitary of the group element (a, b, alpha) in the weight-n family on
    the sampled periodic window: (Uf)(x) = alpha^n e^{2 pi i n a (x-b)} f(x-b).

    The shift b must be an exact multiple of the grid spacing (no silent
    rounding).  The phase factor wraps exactly when n*a*length is an integer;
    `GridSpec.phase_step` gives the compatible lattice of a-values.
    """
    if n == 0:
        raise StructuralError("weight n must be a nonzero integer")
    if not isinstance(b, (int, Fraction)):
        raise DiscretizationError(
            f"shift {b!r} must be an exact rational, never a float")
    shift = Fraction(b) / grid.spacing
    if shift.denominator != 1:
        raise DiscretizationError(
            f"shift {b} is not an exact multiple of the grid spacing {grid.spacing}")
    s = shift.numerator % grid.points
    m = grid.points
    out = np.zeros((m, m), dtype=complex)
    for j in range(m):
        k = (j - s) % m
        t = mod1(n * alpha_turns + n * a * (k * grid.spacing))
        out[j, k] = turns_to_complex(t)
    return out


def rho_n_element(n: int, el: HeisenbergElement, grid: GridSpec) -> np.ndarray:
    return rho_n_operator(n, el.a, el.b, el.turns, grid)


# ---------------------------------------------------------------------------
# Exact finite Weyl systems on a finite abelian group

WEYL_SIZE_CAP = 4096


class WeylSystem:
    """Translations and character multiplicators on l2 of a product of
    cyclic groups; the commutation phase of T_x against M_chi is the exact
    duality pairing <chi, x>."""

    def __init__(self, orders):
        self.orders = tuple(int(q) for q in orders)
        if not self.orders or any(q < 1 for q in self.orders):
            raise StructuralError("orders must be positive integers")
        self.size = math.prod(self.orders)
        if self.size > WEYL_SIZE_CAP:
            raise DimensionCapError(f"|A| = {self.size} exceeds {WEYL_SIZE_CAP}")
        self.elements = list(itertools.product(*[range(q) for q in self.orders]))
        self.index = {x: i for i, x in enumerate(self.elements)}

    def add(self, x, y):
        return tuple((xi + yi) % q for xi, yi, q in zip(x, y, self.orders))

    def pairing_turns(self, chi, x) -> Fraction:
        return mod1(sum(Fraction(c * xi, q) for c, xi, q in zip(chi, x, self.orders)))

    def translation(self, x) -> np.ndarray:
        mat = np.zeros((self.size, self.size), dtype=complex)
        for y in self.elements:
            mat[self.index[self.add(y, x)], self.index[y]] = 1.0
        return mat

    def character(self, chi) -> np.ndarray:
        diag = [turns_to_complex(self.pairing_turns(chi, y)) for y in self.elements]
        return np.diag(np.array(diag, dtype=complex))

    def commutation_turns(self, chi, x) -> Fraction:
        """Exact phase with M_chi T_x = e^{2 pi i phase} T_x M_chi."""
        return self.pairing_turns(chi, x)


@dataclass(frozen=True)
class WeylReport:
    orders: tuple
    size: int
    cocycle_exact: bool
    max_phase_residual: float
    translation_dim: int | None
    character_dim: int | None
    joint_irreducible: bool | None
    mutual_commutants: bool | None
    coupling_pair: tuple | None

    def to_json(self):
        return {"orders": list(self.orders), "size": self.size,
                "cocycle_exact": self.cocycle_exact,
                "max_phase_residual": self.max_phase_residual,
                "translation_dim": self.translation_dim,
                "character_dim": self.character_dim,
                "joint_irreducible": self.joint_irreducible,
                "mutual_commutants": self.mutual_commutants,
                "coupling_pair": None if self.coupling_pair is None
                else [str(c) for c in self.coupling_pair]}


def weyl_check(orders, split=None, seed=11, pair_cap=2000) -> WeylReport:
    """Verify the commutation phases of a Weyl system and, when the ambient
    dimension permits, feed the translation/character subalgebras to the
    operator engine.

    `split` cuts the coordinate tuple after `split` positions; the two
    sub-pairs (translations of one part with matching characters) are then
    tested for mutual commutation and their coupling constants reported.
    """
    w = WeylSystem(orders)
    pairs = [(chi, x) for chi in w.elements for x in w.elements]
    if len(pairs) > pair_cap:
        rng = np.random.default_rng(seed)
        pick = rng.choice(len(pairs), size=pair_cap, replace=False)
        pairs = [pairs[i] for i in pick]
    # exact content of the commutation relation: the entrywise phase offset
    # <chi, y+x> - <chi, y> equals <chi, x> at every basis state y
    ys = w.elements
    if w.size > 64:
        rng = np.random.default_rng(seed + 1)
        ys = [w.elements[i] for i in rng.choice(w.size, size=64, replace=False)]
    cocycle_exact = True
    for chi, x in pairs:
        expected = w.pairing_turns(chi, x)
        for y in ys:
            if mod1(w.pairing_turns(chi, w.add(y, x)) - w.pairing_turns(chi, y)) != expected:
                cocycle_exact = False
                break
        if not cocycle_exact:
            break
    max_resid = 0.0
    translation_dim = character_dim = None
    joint_irreducible = mutual = None
    coupling_pair = None
    if w.size <= operators.DIM_CAP:
        for chi, x in pairs:
            t = w.translation(x)
            m = w.character(chi)
            phase = turns_to_complex(w.commutation_turns(chi, x))
            resid = np.max(np.abs(m @ t - phase * (t @ m)))
            max_resid = max(max_resid, float(resid))
        cocycle_exact = cocycle_exact and max_resid <= 1e-12
        trans = operators.algebra_closure([w.translation(x) for x in w.elements],
                                          generator_log=("weyl-translations",))
        chars = operators.algebra_closure([w.character(chi) for chi in w.elements],
                                          generator_log=("weyl-characters",))
        translation_dim = trans.dimension
        character_dim = chars.dimension
        joint = operators.algebra_closure(
            [w.translation(x) for x in w.elements] + [w.character(c) for c in w.elements],
            generator_log=("weyl-joint",))
        joint_irreducible, _ = operators.is_irreducible([joint])
        if split is not None:
            if not 0 < split < len(w.orders):
                raise StructuralError("split must cut the coordinate tuple properly")
            part1 = [x for x in w.elements if all(c == 0 for c in x[split:])]
            part2 = [x for x in w.elements if all(c == 0 for c in x[:split])]
            b1 = operators.algebra_closure(
                [w.translation(x) for x in part1] + [w.character(c) for c in part1],
                generator_log=("weyl-subpair-1",))
            b2 = operators.algebra_closure(
                [w.translation(x) for x in part2] + [w.character(c) for c in part2],
                generator_log=("weyl-subpair-2",))
            c1 = operators.commutant(b1)
            c2 = operators.commutant(b2)
            mutual = operators.same_span(c1, b2) and operators.same_span(c2, b1)
            lam1 = operators.mvn_coupling(b1, com=c1).value_exact
            lam2 = operators.mvn_coupling(b2, com=c2).value_exact
            coupling_pair = (lam1, lam2)
    return WeylReport(w.orders, w.size, cocycle_exact, max_resid,
                      translation_dim, character_dim, joint_irreducible,
                      mutual, coupling_pair)


# ---------------------------------------------------------------------------
# Clock and shift pair

@dataclass(frozen=True)
class ClockShiftPair:
    """U = diag(e^{2 pi i k p/N}), V = cyclic shift; UV = e^{2 pi i p/N} VU."""
    n: int
    p: int

    def __post_init__(self):
        if not 1 <= self.p < self.n:
            raise StructuralError("need 1 <= p < N")

    @property
    def theta_turns(self) -> Fraction:
        return Fraction(self.p, self.n)

    def clock(self) -> np.ndarray:
        return np.diag(np.array([turns_to_complex(Fraction(k * self.p, self.n))
                                 for k in range(self.n)], dtype=complex))

    def shift(self) -> np.ndarray:
        mat = np.zeros((self.n, self.n), dtype=complex)
        for k in range(self.n):
            mat[(k + 1) % self.n, k] = 1.0
        return mat


def clock_shift_residual(cs: ClockShiftPair) -> float:
    u, v = cs.clock(), cs.shift()
    phase = turns_to_complex(cs.theta_turns)
    return float(np.max(np.abs(u @ v - phase * (v @ u))))


# ---------------------------------------------------------------------------
# Rational torus models

def rational_torus_model(p: int, q: int) -> systems.PairedSystem:
    """Commensurable shift pair on the refinement circle Z_{pq}: the left
    group is generated by +q (order p), the right group by +p (order q).

    The dynamical coupling is p/q; downstream, the algebra generated by the
    right-side unitaries and left-invariant multiplicators attains the same
    matrix coupling constant and has a cyclic vector exactly when p < q.
    """
    if p < 1 or q < 1:
        raise StructuralError("p and q must be positive")
    if math.gcd(p, q) != 1:
        raise StructuralError(
            f"p={p}, q={q} are not coprime: the orbit lattices share cosets, transversality fails")
    size = p * q
    ambient = FiniteGroupCache.cyclic(size)
    g_elems = sorted({(k * q) % size for k in range(p)})
    h_elems = sorted({(k * p) % size for k in range(q)})
    G = ambient.subgroup(g_elems, name=f"<{q}>")
    H = ambient.subgroup(h_elems, name=f"<{p}>")
    points = list(range(size))
    left = {g: {x: (x + g) % size for x in points} for g in G}
    right = {h: {x: (x + h) % size for x in points} for h in H}
    weights = {x: Fraction(1) for x in points}
    return systems.PairedSystem(points, weights, G, H, left, right,
                                name=f"torus-{p}-{q}")


class FiniteGroupCache:
    """Cyclic groups are rebuilt across sweeps; cache the validated tables."""
    _cyclic = {}

    @classmethod
    def cyclic(cls, n):
        if n not in cls._cyclic:
            cls._cyclic[n] = systems.FiniteGroup.cyclic(n)
        return cls._cyclic[n]


def torus_shift_spec(p: int, q: int) -> systems.ShiftPairSpec:
    """Shift lengths whose refinement lattice is the Z_{pq} model: the ratio
    lambda2/lambda1 = p/q is the first factor's coupling constant."""
    return systems.ShiftPairSpec(Fraction(q), Fraction(p))


def k0_positive(m: int, n: int, theta) -> bool:
    """Positivity predicate m*theta + n > 0 for the ordered K0 lattice."""
    if isinstance(theta, (int, Fraction)):
        warnings.warn("theta is rational; the positivity cone is meant for irrational theta",
                      stacklevel=2)
    if not 0 < float(theta) < 1:
        warnings.warn("theta outside (0,1); predicate still evaluated", stacklevel=2)
    return m * theta + n > 0


def cf_convergents(value, count: int):
    """Continued-fraction convergents of a rational target as Fractions.

    Decimal strings and floats are converted exactly, so an irrational target
    must be supplied as a close rational (the lab only ever works along
    convergent streams, never "at" an irrational point).
    """
    if isinstance(value, str):
        x = Fraction(value)
    else:
        x = Fraction(value)
    out = []
    p_prev, p_cur = 1, None
    q_prev, q_cur = 0, None
    first = True
    for _ in range(count):
        a = x.numerator // x.denominator
        if first:
            p_cur, q_cur = a, 1
            first = False
        else:
            p_cur, p_prev = a * p_cur + p_prev, p_cur
            q_cur, q_prev = a * q_cur + q_prev, q_cur
        out.append(Fraction(p_cur, q_cur))
        frac = x - a
        if frac == 0:
            break
        x = 1 / frac
    return out
