"""Finite real spectral triples at desk scale.

Classification of finite real spectral triples by decorated graphs
(Krajewski diagrams), inclusion steps of AF-algebras in normal form
(Bratteli arrows), lifts of those steps to maps between Hilbert spaces,
compatibility checking, and finite spectral-action bookkeeping with
inherited / non-inherited term splitting.
"""

from .algebra import AlgebraProfile, AlgebraElement, VertexLayout, right_action, DEFAULT_TOL
from .krajewski import (
    KOSignature,
    Vertex,
    Edge,
    KrajewskiDiagram,
    RealSpectralTriple,
    epsilon_factor,
    validate,
    realize,
    verify_axioms,
    detect_ko,
    classify,
)
from .bratteli import BratteliArrow, apply_phi, phi_component, unit_defect, lift_unitary, compose
from .lifting import (
    DiagramLift,
    PhiHMap,
    SigmaData,
    CompatReport,
    build_phiH,
    sigma,
    diagonalize_bases,
    normalize,
    compat_check,
    real_grading_check,
    inherited_split,
)
from .differential import (
    UniversalOneForm,
    UniversalNForm,
    represent,
    fluctuate,
    gauge_transform,
    gauge_covariance_check,
    pushforward,
)
from .action import (
    CutoffFunction,
    GaugeConfiguration,
    ActionReport,
    spectral_action,
    bosonic_lagrangian,
    fermionic_pairing,
    compare_actions,
)
from .bundle import Bundle, load_bundle, save_bundle
from .dot import render_dot

__version__ = "0.1.0"
