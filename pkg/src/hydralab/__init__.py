"""Simulation and verification lab for a tree survival game and the
generalized k-server problem on uniform metrics."""

__version__ = "0.1.0"

from .trees import (  # noqa: F401
    Tree,
    build_complete_kary_tree,
    build_factorial_tree,
    build_path_tree,
    dist,
    from_parents,
    load_tree,
    save_tree,
)
from .hydra import GameState, kill, new_game  # noqa: F401
from .herc import FractionalHerc, play_verified, potential  # noqa: F401
