"""Graph-QA topology representation forms: generation, rendering, probing and routing."""

__version__ = "0.1.0"

from .graph import GenConfig, GraphInstance, QaInstance, TaskKind  # noqa: E402
from .metrics import GreParams, gre, preferred_set  # noqa: E402
from .render import TRF_ORDER, TrfKind  # noqa: E402

__all__ = [
    "GenConfig", "GraphInstance", "QaInstance", "TaskKind", "GreParams", "gre",
    "preferred_set", "TRF_ORDER", "TrfKind", "__version__",
]
