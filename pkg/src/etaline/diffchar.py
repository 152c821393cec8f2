"""Cheeger-Simons differential characters on model manifolds.

A degree-k character is a U(1)-valued homomorphism on smooth (k-1)-cycles
together with a curvature k-form R: on boundaries, phi(boundary c) =
exp(2 pi i int_c R).  The degree-4 character refining half the first
Pontrjagin class evaluates through a spin trivialization Q valid near the
cycle:

    phi(z) = exp(-pi i int_z eta^3(W_{t_Q}))

and its transgression along a surface bundle E = F x B is the degree-2
character whose value on a 1-cycle is the same expression with the eta form
pushed down the fiber.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .cw import chern_forms
from .eta import build_taming, eta_form
from .forms import ScalarFormField
from .geom import Chain, Cycle, chain_integrate, cycle_integrate, fiber_integrate

__all__ = [
    "DifferentialCharacter", "p1half_character", "transgress_character",
    "boundary_defect", "NoTrivializationError",
]


class NoTrivializationError(ValueError):
    """No trivialization was supplied for the requested cycle."""


@dataclass
class DifferentialCharacter:
    """Degree-k character: evaluator on (k-1)-cycles plus curvature k-form."""

    degree: int
    evaluator: Callable
    curvature: ScalarFormField

    def __call__(self, z):
        """Evaluate on a cycle or a formal sum [(coef, cycle), ...]."""
        if isinstance(z, Cycle):
            val = complex(self.evaluator(z))
            return val / abs(val)
        total = 1.0 + 0.0j
        for coef, cyc in z:
            v = self(cyc)
            total *= v ** coef
        return total


def _resolve_trivialization(supply, cycle):
    """A supply is a global Q field, or an object with ``for_cycle(z)``
    returning one (or None / raising when the cycle is not covered)."""
    if hasattr(supply, "for_cycle"):
        q = supply.for_cycle(cycle)
        if q is None:
            raise NoTrivializationError(
                "no trivialization available for the requested cycle")
        return q
    return supply


def p1half_character(V, trivialization):
    """Degree-4 character z -> exp(-pi i int_z eta^3(W_{t_Q})).

    ``trivialization`` is either a global Q field or a one-argument callable
    ``cycle -> Q field`` (raising :class:`NoTrivializationError` when no
    trivialization covers the cycle's trace).  The curvature is half the
    first Pontrjagin form; trivialization independence is a consequence of
    the evenness of eta-form differences and is verified by the test suite,
    not assumed.
    """
    curv = chern_forms(V)["p1"].scale(0.5)

    def evaluator(z):
        if z.dim != 3:
            raise ValueError("degree-4 characters evaluate on 3-cycles")
        Q = _resolve_trivialization(trivialization, z)
        tam = build_taming(V, Q)
        e3 = eta_form(tam, 3)
        return np.exp(-1j * np.pi * cycle_integrate(z, e3))

    return DifferentialCharacter(4, evaluator, curv)


def transgress_character(E, V, Q):
    """Degree-2 character on the base of E = F x B: the transgression of the
    p1/2 character, z -> exp(-pi i int_z int_{E/B} eta^3(W_{t_Q}))."""
    if E.fiber_dim() != 2:
        raise ValueError("transgression requires a two-dimensional fiber")
    tam = build_taming(V, Q)
    e3 = eta_form(tam, 3)
    pushed = fiber_integrate(E, e3)
    curv = fiber_integrate(E, chern_forms(V)["p1"]).scale(0.5)

    def evaluator(z):
        if z.dim != 1:
            raise ValueError("degree-2 characters evaluate on 1-cycles")
        return np.exp(-1j * np.pi * cycle_integrate(z, pushed))

    return DifferentialCharacter(2, evaluator, curv)


def boundary_defect(char, chain):
    """|phi(boundary c) - exp(2 pi i int_c R(phi))| for a test chain."""
    val = 1.0 + 0.0j
    for sgn, cyc in chain.boundary():
        val *= char(cyc) ** sgn
    flux = chain_integrate(chain, char.curvature)
    return abs(val - np.exp(2j * np.pi * flux))
