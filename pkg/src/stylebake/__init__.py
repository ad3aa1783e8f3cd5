"""Style-reference construction, multi-view rendering, and UV texture baking.

Deterministic library + CLI: patch-shuffle ("jigsaw") style references with
exact pixel-statistics preservation, style-similarity metrics over a seeded
multi-scale feature bank, a software rasterizer producing geometry condition
maps, style-texture dataset generation, reference/multi-view attention
kernels, and visibility-aware baking of multi-view images into a UV atlas.
"""
from ._kernels import active_backend

__version__ = "0.1.0"

__all__ = ["active_backend", "__version__"]
