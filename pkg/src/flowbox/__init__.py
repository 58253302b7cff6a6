"""Quasi-transversality of foliations to subvarieties, with numerical flow-box checks."""
from .kernels import BACKEND
from .polyring import GREVLEX, LEX, Ideal, MonomialOrder, Polynomial, groebner_basis, ideal_contains, normal_form
from .geometry import (
    Distribution,
    FoliatedSystem,
    VectorField,
    derivative_ideal,
    fitting_order,
    geometric_qt_at,
    geometric_qt_scan,
    is_analytically_qt,
    is_involutive,
    lie_bracket,
    tangency_locus,
)
from .analytic import AnalyticField, AnalyticMap
from .blowup import BlowupSpec, blowup_chart, polar_blowup, verify_transform_identity
from .dynamics import SRQuery, detect_returns, estimate_flowbox_delta, integrate, sr_ball_probe, sr_distance
from .splitting import extract_connection, leaf_split, verify_split
from .sysfile import load_text, parse_system

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "GREVLEX",
    "LEX",
    "AnalyticField",
    "AnalyticMap",
    "BlowupSpec",
    "Distribution",
    "FoliatedSystem",
    "Ideal",
    "MonomialOrder",
    "Polynomial",
    "SRQuery",
    "VectorField",
    "blowup_chart",
    "derivative_ideal",
    "detect_returns",
    "estimate_flowbox_delta",
    "extract_connection",
    "fitting_order",
    "geometric_qt_at",
    "geometric_qt_scan",
    "groebner_basis",
    "ideal_contains",
    "integrate",
    "is_analytically_qt",
    "is_involutive",
    "leaf_split",
    "lie_bracket",
    "load_text",
    "normal_form",
    "parse_system",
    "polar_blowup",
    "sr_ball_probe",
    "sr_distance",
    "tangency_locus",
    "verify_split",
    "verify_transform_identity",
]
