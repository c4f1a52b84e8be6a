"""Formal crossed-product elements, their trace, and the regular model.

An element is a finite sum  sum_g phi_g . U_g  where each coefficient phi_g
lives on the orbit space of the *other* side (for the G-side product the
coefficients are H-orbit functions), which enforces the invariance constraint
by construction.  Multiplication uses the covariance relation
U_g M_phi U_g^{-1} = M_{phi o g^{-1}} through the induced quotient action.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import operators, systems
from .errors import StructuralError, TagMismatchError


class CrossedProductContext:
    """Binds a paired system and a group side; builds and combines elements."""

    def __init__(self, sys: systems.PairedSystem, group_side: str):
        if group_side not in (systems.LEFT, systems.RIGHT):
            raise ValueError("group_side must be 'G' or 'H'")
        self.sys = sys
        self.group_side = group_side
        self.quotient_side = systems.RIGHT if group_side == systems.LEFT else systems.LEFT
        self.group = sys.G if group_side == systems.LEFT else sys.H
        induced = systems.induced_quotient_action(sys, self.quotient_side)
        self.partition = induced.partition
        self._perm = induced.perms      # g -> tuple: block index -> image block index
        self.block_measures = tuple(sys.weights[block[0]] for block in self.partition.blocks)
        self.total_measure = sum(self.block_measures, Fraction(0))

    @property
    def n_blocks(self):
        return len(self.partition.blocks)

    def element(self, terms) -> "CrossedElement":
        clean = {}
        for g, coeffs in terms.items():
            if g not in self._perm:
                raise StructuralError(f"unknown group element {g!r}")
            arr = np.asarray(coeffs, dtype=complex)
            if arr.shape != (self.n_blocks,):
                raise StructuralError(
                    f"coefficients for {g!r} indexed by {arr.shape}, expected ({self.n_blocks},)")
            if np.any(arr != 0):
                clean[g] = arr
        return CrossedElement(self, clean)

    def unit(self) -> "CrossedElement":
        return self.element({self.group.identity: np.ones(self.n_blocks)})

    def zero(self) -> "CrossedElement":
        return CrossedElement(self, {})

    def conjugate_coeff(self, coeffs, g):
        """Coefficient function of W_g M_phi W_g^{-1}.

        On the left side this is phi(g^{-1}.b); on the right side, where the
        unitaries satisfy (V_h f)(x) = f(xh), it is phi(b.g).
        """
        if self.group_side == systems.LEFT:
            perm = self._perm[self.group.inv(g)]
        else:
            perm = self._perm[g]
        out = np.empty_like(coeffs)
        for b in range(self.n_blocks):
            out[b] = coeffs[perm[b]]
        return out

    def random_element(self, rng, support=3):
        els = list(self.group)
        idx = rng.choice(len(els), size=min(support, len(els)), replace=False)
        terms = {}
        for i in idx:
            terms[els[i]] = rng.standard_normal(self.n_blocks) + 1j * rng.standard_normal(self.n_blocks)
        return self.element(terms)


@dataclass(frozen=True)
class CrossedElement:
    context: CrossedProductContext
    terms: dict   # group element -> complex ndarray over quotient blocks

    def __mul__(self, other):
        return cp_multiply(self, other)

    def __add__(self, other):
        _same_context(self, other)
        out = {g: arr.copy() for g, arr in self.terms.items()}
        for g, arr in other.terms.items():
            out[g] = out.get(g, 0) + arr
        return self.context.element(out)

    def adjoint(self):
        return cp_adjoint(self)

    def to_json(self):
        return [{"group_element": str(g),
                 "coefficients_by_block": [[float(z.real), float(z.imag)] for z in arr]}
                for g, arr in self.terms.items()]


def _same_context(a: CrossedElement, b: CrossedElement):
    ca, cb = a.context, b.context
    if ca.sys is not cb.sys or ca.group_side != cb.group_side:
        raise TagMismatchError("crossed elements bound to different group/quotient tags")


def cp_multiply(a: CrossedElement, b: CrossedElement) -> CrossedElement:
    """(sum phi_g W_g)(sum psi_h W_h) = sum_k (sum_{gh=k} phi_g . Ad(W_g)psi_h) W_k,
    with the conjugated coefficient taken through the induced quotient action."""
    _same_context(a, b)
    ctx = a.context
    out = {}
    for g, phi in a.terms.items():
        for h, psi in b.terms.items():
            k = ctx.group.mul(g, h)
            contrib = phi * ctx.conjugate_coeff(psi, g)
            if k in out:
                out[k] = out[k] + contrib
            else:
                out[k] = contrib
    return ctx.element(out)


def cp_adjoint(a: CrossedElement) -> CrossedElement:
    """(phi . W_g)^* = Ad(W_{g^{-1}})(conj phi) . W_{g^{-1}}; on the left side
    that is (conj(phi) o g) . U_{g^{-1}}."""
    ctx = a.context
    out = {}
    for g, phi in a.terms.items():
        ginv = ctx.group.inv(g)
        shifted = ctx.conjugate_coeff(np.conj(phi), ginv)
        if ginv in out:
            out[ginv] = out[ginv] + shifted
        else:
            out[ginv] = shifted
    return ctx.element(out)


def cp_trace(a: CrossedElement, normalized=True) -> complex:
    """Integral of the identity coefficient against the quotient measure;
    zero when the identity term is absent."""
    ctx = a.context
    e = ctx.group.identity
    if e not in a.terms:
        return 0j
    phi = a.terms[e]
    total = complex(sum(float(m) * z for m, z in zip(ctx.block_measures, phi)))
    if normalized:
        total /= float(ctx.total_measure)
    return total


def cp_represent(a: CrossedElement) -> np.ndarray:
    """Matrix sum_g M_{phi_g} U_g on the weighted l2 space of the system."""
    ctx = a.context
    n = ctx.sys.size
    out = np.zeros((n, n), dtype=complex)
    for g, phi in a.terms.items():
        mult = operators.multiplicator(ctx.sys, phi, ctx.quotient_side, ctx.partition)
        out += mult @ operators.rep_unitary(ctx.sys, ctx.group_side, g)
    return out


# ---------------------------------------------------------------------------
# Regular model: one base action, doubled into a commuting left/right pair

@dataclass(frozen=True)
class RegularModel:
    system: systems.PairedSystem
    base_points: tuple
    base_group: systems.FiniteGroup
    domain: tuple              # the common fundamental domain X0 x {e}

    def domain_indicator(self):
        chi = np.zeros(self.system.size)
        for x in self.domain:
            chi[self.system.point_index[x]] = 1.0
        return chi


def regular_model(base_points, base_group: systems.FiniteGroup, base_action,
                  base_weights=None, name="regular"):
    """Double a free right action of G0 on X0 into the commuting pair on
    X0 x G0: left g.(x,q) = (x, gq), right (x,q).h = (x.h, qh).

    `base_action` maps group element -> {x: image} and must satisfy the right
    action law and be free; weights must be invariant (uniform by default).
    """
    base_points = list(base_points)
    G0 = base_group
    act = {g: dict(base_action[g]) for g in G0}
    pts = set(base_points)
    for g in G0:
        if set(act[g].keys()) != pts or set(act[g].values()) != pts:
            raise StructuralError(f"base action table for {g!r} is not a bijection")
    for g in G0:
        for h in G0:
            for x in base_points:
                if act[h][act[g][x]] != act[G0.mul(g, h)][x]:
                    raise StructuralError("base action violates the right action law")
    for g in G0:
        if g == G0.identity:
            continue
        for x in base_points:
            if act[g][x] == x:
                raise StructuralError(f"base action is not free: {g!r} fixes {x!r}")
    if base_weights is None:
        base_weights = {x: Fraction(1) for x in base_points}
    else:
        base_weights = {x: Fraction(base_weights[x]) for x in base_points}
    for g in G0:
        for x in base_points:
            if base_weights[act[g][x]] != base_weights[x]:
                raise StructuralError("base weights are not invariant")

    points = [(x, q) for x in base_points for q in G0]
    weights = {(x, q): base_weights[x] for (x, q) in points}
    left = {g: {(x, q): (x, G0.mul(g, q)) for (x, q) in points} for g in G0}
    right = {h: {(x, q): (act[h][x], G0.mul(q, h)) for (x, q) in points} for h in G0}
    sys = systems.PairedSystem(points, weights, G0, G0, left, right, name=name)
    domain = tuple((x, G0.identity) for x in base_points)
    return RegularModel(sys, tuple(base_points), G0, domain)
