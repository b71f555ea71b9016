"""Mode-by-mode fermionic projector of a Dirac field in a closed FRW universe."""

from ._diracsea import (
    PI,
    DegenerateSignature,
    DiracSeaError,
    Mode,
    Scenario,
    ScaleFunction,
    Segment,
    TestFunction,
    bloch_components,
    build_six_segment,
    build_twelve_segment,
    bump,
    causal_classes,
    dust_scale,
    evolve,
    project,
    signature_operator,
    study,
    table_scale,
    wkb_eigenvalues_closed_form,
)

__all__ = [
    "PI",
    "DegenerateSignature",
    "DiracSeaError",
    "Mode",
    "Scenario",
    "ScaleFunction",
    "Segment",
    "TestFunction",
    "bloch_components",
    "build_six_segment",
    "build_twelve_segment",
    "bump",
    "causal_classes",
    "dust_scale",
    "evolve",
    "project",
    "signature_operator",
    "study",
    "table_scale",
    "wkb_eigenvalues_closed_form",
]
