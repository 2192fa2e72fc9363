"""Literature-driven reagent discovery with a human gate, followed by
closed-loop batch optimization against a simulated colorimetric lab."""

__version__ = "0.1.0"

from .domain import (  # noqa: F401
    ArticleRecord,
    Recipe,
    ResponseCurve,
    RHProgram,
    Role,
    ScoreBreakdown,
    SubstanceRecord,
    normalize_recipe,
    quantize_recipe,
)
from .errors import ChromalabError  # noqa: F401
