"""Blow-up lower bounds for the critical functionals."""

from __future__ import annotations

import numpy as np

from ..functional import Weights
from ..green import Expansion, GreenFunction
from .expansions import GreenIntegrals


def lower_bound_partial(green: GreenFunction, coeffs: Expansion, w: Weights, rho2: float,
                        h1_at_best: float) -> float:
    """−8π − 8π log π − 4π(A + 2log h₁) − (ρ₂/2)β₂∫h₂Ge^{−G} − ρ₂ log∫h₂e^{−G}.

    ``coeffs`` and ``h1_at_best`` belong to the maximizer of A + 2log h₁ over
    the positive set of h₁; the caller chooses it.
    """
    gi = GreenIntegrals.of(green, w)
    return float(-8 * np.pi - 8 * np.pi * np.log(np.pi) - 4 * np.pi * (coeffs.A + 2 * np.log(h1_at_best))
                 - rho2 / 2 * gi.beta2 * gi.int_G - rho2 * gi.log_int)


def lower_bound_full(green: GreenFunction, h1x1: float, h2x2: float) -> float:
    e1, e2 = green.regulars
    return float(-16 * np.pi - 16 * np.pi * np.log(np.pi) - 4 * np.pi * (2 * np.log(h1x1) + e1.A)
                 - 4 * np.pi * (2 * np.log(h2x2) - e2.A))
