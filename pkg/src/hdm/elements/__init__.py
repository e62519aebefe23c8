"""Local element constructions behind the Hessian discretisations."""
from .adini import AdiniElement, AdiniLocal, adini_local_basis
from .gr import (GrElement, GrStructures, gr_apply_q, gr_build, gr_p5_residual,
                 gr_p5_residuals, gr_property_report, q_stability)
from .morley import MorleyElement, MorleyLocal, morley_local_basis

ELEMENTS = {"morley": MorleyElement, "adini": AdiniElement, "gr": GrElement}

__all__ = [
    "AdiniElement", "AdiniLocal", "ELEMENTS", "GrElement", "GrStructures", "MorleyElement",
    "MorleyLocal", "adini_local_basis", "gr_apply_q", "gr_build", "gr_p5_residual",
    "gr_p5_residuals", "gr_property_report", "morley_local_basis", "q_stability",
]
