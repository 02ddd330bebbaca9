"""Condition checkers, bubbles, glued test functions, expansions, bounds and the certificate."""

from .bounds import lower_bound_full, lower_bound_partial
from .bubble import BubbleSpec, bubble_family, bubble_field, ramp, scale_rule_L
from .certify import Certificate, certificate
from .conditions import djlw_check, neck_bound, pohozaev_admissible, pohozaev_roots
from .expansions import ExpansionReport, measure, n_coefficient, predict_full, predict_partial
from .testfunctions import TestFunctionFull, TestFunctionPartial, build_full, build_partial

__all__ = [
    "BubbleSpec", "Certificate", "ExpansionReport", "TestFunctionFull", "TestFunctionPartial",
    "bubble_family", "bubble_field", "build_full", "build_partial", "certificate", "djlw_check",
    "lower_bound_full", "lower_bound_partial", "measure", "n_coefficient", "neck_bound",
    "pohozaev_admissible", "pohozaev_roots", "predict_full", "predict_partial", "ramp", "scale_rule_L",
]
