"""spinchain: fast samplers for hardcore and Ising models on graphs, plus
an exact small-system oracle that verifies the chains' defining identities.
"""

from .graphs import (Graph, load_graph, save_graph, random_neighbor,
                     generate_random_regular)
from .models import (HardcoreParams, TwoSpinParams, hardcore_params, ising_params,
                     two_spin_params, hardcore_critical_fugacity)

__version__ = "0.1.0"

__all__ = [
    "Graph", "load_graph", "save_graph", "random_neighbor", "generate_random_regular",
    "HardcoreParams", "TwoSpinParams", "hardcore_params", "ising_params",
    "two_spin_params", "hardcore_critical_fugacity", "__version__",
]
