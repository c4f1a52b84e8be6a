"""Pairs of commuting group actions on finite measured spaces.

A `PairedSystem` is a finite point set with positive rational weights and
two commuting actions: a left action of a group G and a right action of a
group H, both given by full lookup tables.  All measures are exact
`fractions.Fraction` values, so coupling ratios satisfy reciprocity
identically rather than to tolerance.
"""

from __future__ import annotations

import configparser
import itertools
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import ContractViolationError, DegenerateInputError, StructuralError

LEFT = "G"
RIGHT = "H"


def _as_fraction(x):
    if isinstance(x, float):
        raise StructuralError("weights must be exact rationals, got float %r" % x)
    return Fraction(x)


class FiniteGroup:
    """A finite group given by an explicit multiplication table.

    `elements` is an ordered list of hashable ids; `mul` maps pairs of ids to
    ids.  Identity and inverses are derived and the group laws are verified
    on construction (desk scale keeps the O(n^3) associativity sweep cheap).
    """

    def __init__(self, elements, mul, name=""):
        self.elements = list(elements)
        self.name = name
        elems = set(self.elements)
        if len(elems) != len(self.elements):
            raise StructuralError("duplicate group element ids")
        self._mul = dict(mul)
        for a in self.elements:
            for b in self.elements:
                if (a, b) not in self._mul:
                    raise StructuralError(f"multiplication table missing ({a!r},{b!r})")
                if self._mul[(a, b)] not in elems:
                    raise StructuralError("multiplication table leaves the element set")
        identity = None
        for e in self.elements:
            if all(self._mul[(e, a)] == a and self._mul[(a, e)] == a for a in self.elements):
                identity = e
                break
        if identity is None:
            raise StructuralError("no identity element")
        self.identity = identity
        self.inverse = {}
        for a in self.elements:
            inv = [b for b in self.elements if self._mul[(a, b)] == identity]
            if len(inv) != 1 or self._mul[(inv[0], a)] != identity:
                raise StructuralError(f"element {a!r} has no two-sided inverse")
            self.inverse[a] = inv[0]
        for a, b, c in itertools.product(self.elements, repeat=3):
            if self._mul[(self._mul[(a, b)], c)] != self._mul[(a, self._mul[(b, c)])]:
                raise StructuralError(f"associativity fails at ({a!r},{b!r},{c!r})")

    def mul(self, a, b):
        return self._mul[(a, b)]

    def inv(self, a):
        return self.inverse[a]

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __repr__(self):
        return f"FiniteGroup({self.name or len(self.elements)}, n={len(self.elements)})"

    @staticmethod
    def cyclic(n, name=None):
        els = list(range(n))
        mul = {(a, b): (a + b) % n for a in els for b in els}
        return FiniteGroup(els, mul, name or f"Z{n}")

    @staticmethod
    def symmetric(n, name=None):
        """Permutations of range(n) as tuples; composition (s*t)(i) = s[t[i]]."""
        els = list(itertools.permutations(range(n)))
        mul = {(s, t): tuple(s[t[i]] for i in range(n)) for s in els for t in els}
        return FiniteGroup(els, mul, name or f"S{n}")

    @staticmethod
    def product(g1: "FiniteGroup", g2: "FiniteGroup", name=None):
        els = [(a, b) for a in g1.elements for b in g2.elements]
        mul = {}
        for (a, b), (c, d) in itertools.product(els, repeat=2):
            mul[((a, b), (c, d))] = (g1.mul(a, c), g2.mul(b, d))
        return FiniteGroup(els, mul, name or f"{g1.name}x{g2.name}")

    def subgroup(self, subset, name=None):
        subset = list(dict.fromkeys(subset))
        sset = set(subset)
        if self.identity not in sset:
            raise StructuralError("subset does not contain the identity")
        for a in subset:
            if self.inverse[a] not in sset:
                raise StructuralError(f"subset not closed under inversion at {a!r}")
            for b in subset:
                if self._mul[(a, b)] not in sset:
                    raise StructuralError(f"subset not closed under multiplication at ({a!r},{b!r})")
        mul = {(a, b): self._mul[(a, b)] for a in subset for b in subset}
        return FiniteGroup(subset, mul, name or f"{self.name}-sub{len(subset)}")


class PairedSystem:
    """Finite measured space with a left G-action and a right H-action.

    Actions are dicts `element -> {point: image}` ("full tables").  The
    constructor verifies that every table is a bijection of the point set,
    that both actions satisfy their composition laws, and that weights are
    preserved; the five axiom flags (freeness, commutation, transversality,
    ergodicity) are computed separately by `check_axioms`.
    """

    def __init__(self, points, weights, group_g, group_h, left_action, right_action,
                 name="", note=""):
        self.points = list(points)
        self.point_index = {x: i for i, x in enumerate(self.points)}
        if len(self.point_index) != len(self.points):
            raise StructuralError("duplicate point ids")
        self.G = group_g
        self.H = group_h
        self.name = name
        self.note = note
        if isinstance(weights, dict):
            self.weights = {x: _as_fraction(weights[x]) for x in self.points}
        else:
            wl = list(weights)
            if len(wl) != len(self.points):
                raise StructuralError("weight list length mismatch")
            self.weights = {x: _as_fraction(w) for x, w in zip(self.points, wl)}
        if any(w <= 0 for w in self.weights.values()):
            raise StructuralError("weights must be positive")
        self.left = {g: dict(left_action[g]) for g in self.G}
        self.right = {h: dict(right_action[h]) for h in self.H}
        self._check_tables(self.left, self.G, "left")
        self._check_tables(self.right, self.H, "right")
        self._check_laws()

    def _check_tables(self, tables, group, label):
        pts = set(self.points)
        for g in group:
            if g not in tables:
                raise StructuralError(f"{label} action missing table for {g!r}")
            t = tables[g]
            if set(t.keys()) != pts or set(t.values()) != pts:
                raise StructuralError(f"{label} action table for {g!r} is not a bijection of the point set")

    def _check_laws(self):
        e = self.G.identity
        for x in self.points:
            if self.left[e][x] != x:
                raise StructuralError("left action: identity does not act trivially")
        for g, gp in itertools.product(self.G, repeat=2):
            prod = self.G.mul(g, gp)
            for x in self.points:
                if self.left[g][self.left[gp][x]] != self.left[prod][x]:
                    raise StructuralError(f"left action not a homomorphism at ({g!r},{gp!r})")
        e = self.H.identity
        for x in self.points:
            if self.right[e][x] != x:
                raise StructuralError("right action: identity does not act trivially")
        for h, hp in itertools.product(self.H, repeat=2):
            prod = self.H.mul(h, hp)
            for x in self.points:
                if self.right[hp][self.right[h][x]] != self.right[prod][x]:
                    raise StructuralError(f"right action law (xh)h' = x(hh') fails at ({h!r},{hp!r})")
        for g in self.G:
            for x in self.points:
                if self.weights[self.left[g][x]] != self.weights[x]:
                    raise StructuralError(f"left action does not preserve weights at {g!r}")
        for h in self.H:
            for x in self.points:
                if self.weights[self.right[h][x]] != self.weights[x]:
                    raise StructuralError(f"right action does not preserve weights at {h!r}")

    def act_left(self, g, x):
        return self.left[g][x]

    def act_right(self, x, h):
        return self.right[h][x]

    @property
    def size(self):
        return len(self.points)

    def total_weight(self):
        return sum(self.weights.values())

    def with_reversed_points(self):
        """Same system with the point list reversed (tie-break regression aid)."""
        return PairedSystem(list(reversed(self.points)), self.weights, self.G, self.H,
                            self.left, self.right, name=self.name + "-rev", note=self.note)

    def __repr__(self):
        return f"PairedSystem({self.name or 'unnamed'}, |X|={len(self.points)}, |G|={len(self.G)}, |H|={len(self.H)})"


@dataclass(frozen=True)
class AxiomReport:
    free_g: bool
    free_h: bool
    commuting: bool
    transversal: bool
    ergodic: bool

    @property
    def all_hold(self):
        return self.free_g and self.free_h and self.commuting and self.transversal and self.ergodic

    def to_json(self):
        return {"free_G": self.free_g, "free_H": self.free_h, "commuting": self.commuting,
                "transversal": self.transversal, "ergodic": self.ergodic}


@dataclass(frozen=True)
class OrbitPartition:
    side: str
    blocks: tuple           # tuple of tuples of point ids, each sorted by point index
    point_to_block: dict    # point id -> block index

    def __len__(self):
        return len(self.blocks)


@dataclass(frozen=True)
class FundamentalDomain:
    points: tuple
    for_group: str
    measure: Fraction


@dataclass(frozen=True)
class CouplingReport:
    lambda_gh: Fraction
    lambda_hg: Fraction
    mu_fg: Fraction
    mu_fh: Fraction
    orientation_note: str

    def to_json(self):
        return {"lambdaGH": str(self.lambda_gh), "lambdaHG": str(self.lambda_hg),
                "muFG": str(self.mu_fg), "muFH": str(self.mu_fh),
                "orientationNote": self.orientation_note}


@dataclass(frozen=True)
class ShiftPairSpec:
    """Two commensurable shift step lengths; irrational targets are handled
    by feeding a stream of rational convergents, never floats."""
    lambda1: Fraction
    lambda2: Fraction

    def __post_init__(self):
        object.__setattr__(self, "lambda1", _as_fraction(self.lambda1))
        object.__setattr__(self, "lambda2", _as_fraction(self.lambda2))
        if self.lambda1 <= 0 or self.lambda2 <= 0:
            raise StructuralError("shift lengths must be positive")

    def rotation_numbers(self):
        """Fractional parts ({lambda2/lambda1}, {lambda1/lambda2}) as exact rationals."""
        r1 = self.lambda2 / self.lambda1
        r2 = self.lambda1 / self.lambda2
        return (r1 - (r1.numerator // r1.denominator), r2 - (r2.numerator // r2.denominator))


def check_axioms(sys: PairedSystem) -> AxiomReport:
    """Compute the five axiom flags for a paired system.

    `ergodic` is the finite surrogate: the joint action is transitive on the
    support of the measure.
    """
    free_g = all(sys.left[g][x] != x for g in sys.G if g != sys.G.identity for x in sys.points)
    free_h = all(sys.right[h][x] != x for h in sys.H if h != sys.H.identity for x in sys.points)
    commuting = all(sys.left[g][sys.right[h][x]] == sys.right[h][sys.left[g][x]]
                    for g in sys.G for h in sys.H for x in sys.points)
    gpart = orbits(sys, LEFT)
    hpart = orbits(sys, RIGHT)
    seen_pairs = set()
    transversal = True
    for x in sys.points:
        pair = (gpart.point_to_block[x], hpart.point_to_block[x])
        if pair in seen_pairs:
            transversal = False
            break
        seen_pairs.add(pair)
    support = [x for x in sys.points if sys.weights[x] > 0]
    ergodic = False
    if support:
        reached = {support[0]}
        frontier = [support[0]]
        while frontier:
            x = frontier.pop()
            for g in sys.G:
                y = sys.left[g][x]
                if y not in reached:
                    reached.add(y)
                    frontier.append(y)
            for h in sys.H:
                y = sys.right[h][x]
                if y not in reached:
                    reached.add(y)
                    frontier.append(y)
        ergodic = all(x in reached for x in support)
    return AxiomReport(free_g, free_h, commuting, transversal, ergodic)


def orbits(sys: PairedSystem, side: str) -> OrbitPartition:
    if side not in (LEFT, RIGHT):
        raise ValueError("side must be 'G' or 'H'")
    move = (lambda x: [sys.left[g][x] for g in sys.G]) if side == LEFT else \
           (lambda x: [sys.right[h][x] for h in sys.H])
    blocks = []
    assigned = {}
    for x in sys.points:
        if x in assigned:
            continue
        block = {x}
        frontier = [x]
        while frontier:
            y = frontier.pop()
            for z in move(y):
                if z not in block:
                    block.add(z)
                    frontier.append(z)
        idx = len(blocks)
        ordered = tuple(sorted(block, key=sys.point_index.get))
        blocks.append(ordered)
        for y in ordered:
            assigned[y] = idx
    return OrbitPartition(side, tuple(blocks), assigned)


def fundamental_domain(sys: PairedSystem, side: str,
                       partition: OrbitPartition | None = None) -> FundamentalDomain:
    """One representative per orbit; the tie-break is the least point id in
    the system's point order, which the coupling constant cannot see."""
    part = partition if partition is not None else orbits(sys, side)
    reps = tuple(block[0] for block in part.blocks)
    measure = sum((sys.weights[x] for x in reps), Fraction(0))
    return FundamentalDomain(reps, side, measure)


ORIENTATION_NOTE = (
    "lambdaGH = mu(F_H)/mu(F_G); pinned by regression: it equals the matrix "
    "coupling constant of the algebra generated by the H-unitaries together "
    "with the G-invariant multiplicators (the transposed assignment holds for "
    "the G-side algebra)."
)


def dyn_coupling(sys: PairedSystem) -> CouplingReport:
    fg = fundamental_domain(sys, LEFT)
    fh = fundamental_domain(sys, RIGHT)
    if fg.measure == 0 or fh.measure == 0:
        raise DegenerateInputError("zero-measure fundamental domain")
    lam = fh.measure / fg.measure
    return CouplingReport(lam, 1 / lam, fg.measure, fh.measure, ORIENTATION_NOTE)


@dataclass(frozen=True)
class InducedAction:
    """Action of the other group on the orbit blocks of the quotiented side."""
    quotient_side: str
    acting_group: FiniteGroup
    partition: OrbitPartition
    perms: dict = field(hash=False)   # acting element -> tuple: block index -> block index

    def rotation_turns(self, element):
        """If the element permutes the blocks in a single cycle consistent
        with a rotation of Z_k, return the rotation as a Fraction of a turn."""
        perm = self.perms[element]
        k = len(perm)
        step = perm[0]
        if all(perm[i] == (i + step) % k for i in range(k)):
            return Fraction(step, k)
        return None


def induced_quotient_action(sys: PairedSystem, side: str) -> InducedAction:
    """Quotient by the orbits of `side`; the other group acts on the blocks.

    Raises ContractViolationError when the candidate action is not
    well-defined on blocks (the actions do not commute).
    """
    part = orbits(sys, side)
    if side == LEFT:
        group = sys.H
        move = lambda el, x: sys.right[el][x]
    else:
        group = sys.G
        move = lambda el, x: sys.left[el][x]
    perms = {}
    for el in group:
        perm = [None] * len(part.blocks)
        for bidx, block in enumerate(part.blocks):
            targets = {part.point_to_block[move(el, x)] for x in block}
            if len(targets) != 1:
                raise ContractViolationError(
                    f"induced action of {el!r} not well-defined on block {bidx}: actions do not commute")
            perm[bidx] = targets.pop()
        perms[el] = tuple(perm)
    return InducedAction(side, group, part, perms)


def translation_pair(k_group: FiniteGroup, g_elements, h_elements,
                     name="") -> PairedSystem:
    """Left translation by a subgroup G and right translation by a subgroup H
    on the ambient group with uniform weights."""
    G = k_group.subgroup(g_elements, name="G")
    H = k_group.subgroup(h_elements, name="H")
    inter = set(G.elements) & set(H.elements)
    note = ""
    if inter != {k_group.identity}:
        note = f"G and H intersect in {len(inter)} elements (trivial intersection recommended)"
    left = {g: {x: k_group.mul(g, x) for x in k_group} for g in G}
    right = {h: {x: k_group.mul(x, h) for x in k_group} for h in H}
    weights = {x: Fraction(1) for x in k_group}
    return PairedSystem(list(k_group), weights, G, H, left, right,
                        name=name or f"translation-{k_group.name}", note=note)


def product_model(m: int, n: int) -> PairedSystem:
    """X = Z_m x Z_n with Z_m translating the first coordinate on the left
    and Z_n the second on the right; uniform weights."""
    G = FiniteGroup.cyclic(m)
    H = FiniteGroup.cyclic(n)
    points = [(i, j) for i in range(m) for j in range(n)]
    left = {g: {(i, j): ((i + g) % m, j) for (i, j) in points} for g in G}
    right = {h: {(i, j): (i, (j + h) % n) for (i, j) in points} for h in H}
    weights = {x: Fraction(1) for x in points}
    return PairedSystem(points, weights, G, H, left, right, name=f"product-{m}x{n}")


# ---------------------------------------------------------------------------
# System description files (INI-style, explicit tables)

def parse_system(text: str) -> PairedSystem:
    """Parse the system description format.

    Sections: [space] with `points` and `weights`, [group_g]/[group_h] with
    `elements`, `identity` and `mul A B = C` rows, [left_action]/[right_action]
    with `ELEMENT POINT = POINT` rows.  Identity tables may be omitted.
    """
    cp = configparser.ConfigParser(delimiters=("=",), interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise StructuralError(f"unparseable system description: {exc}") from exc
    for sect in ("space", "group_g", "group_h", "left_action", "right_action"):
        if sect not in cp:
            raise StructuralError(f"missing section [{sect}]")
    points = cp["space"].get("points", "").split()
    weight_tokens = cp["space"].get("weights", "").split()
    if not points:
        raise StructuralError("no points declared")
    if len(weight_tokens) != len(points):
        raise StructuralError("weights list does not match points list")
    weights = {p: Fraction(w) for p, w in zip(points, weight_tokens)}

    def read_group(section):
        sec = cp[section]
        els = sec.get("elements", "").split()
        if not els:
            raise StructuralError(f"[{section}] has no elements")
        ident = sec.get("identity")
        if ident not in els:
            raise StructuralError(f"[{section}] identity missing or unknown")
        mul = {}
        for key, value in sec.items():
            if not key.startswith("mul "):
                continue
            parts = key.split()
            if len(parts) != 3:
                raise StructuralError(f"[{section}] bad mul row {key!r}")
            mul[(parts[1], parts[2])] = value.strip()
        for a in els:
            mul.setdefault((ident, a), a)
            mul.setdefault((a, ident), a)
        return FiniteGroup(els, mul, name=section)

    G = read_group("group_g")
    H = read_group("group_h")

    def read_action(section, group):
        sec = cp[section]
        tables = {g: {} for g in group}
        for key, value in sec.items():
            parts = key.split()
            if len(parts) != 2:
                raise StructuralError(f"[{section}] bad action row {key!r}")
            el, pt = parts
            if el not in tables:
                raise StructuralError(f"[{section}] unknown group element {el!r}")
            tables[el][pt] = value.strip()
        tables[group.identity] = {p: p for p in points}
        return tables

    left = read_action("left_action", G)
    right = read_action("right_action", H)
    return PairedSystem(points, weights, G, H, left, right, name="file")


def load_system(path) -> PairedSystem:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_system(fh.read())
