"""Position features: the vector every fitted model consumes.

All counting features are differences from the mover's perspective
(mover count minus opponent count) so that swapping colours and
toggling the mover negates them. The first entry is a constant 1 so the
linear models can carry an offset; `parity` is +1 when the number of
empty squares is odd (the mover gets the last move if nobody passes).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import board
from .board import CORNERS, FULL, Position, legal_mask
from .errors import OthlearnError

FEATURE_VERSION = "sfc-basic-1"

FEATURE_NAMES = (
    "const",
    "disc_diff",
    "mobility_diff",
    "potential_mobility_diff",
    "corner_diff",
    "x_square_diff",
    "c_square_diff",
    "frontier_diff",
    "stable_edge_diff",
    "parity",
)

N_FEATURES = len(FEATURE_NAMES)

# Inclusive bounds per feature, asserted by the property suite.
FEATURE_BOUNDS = {
    "const": (1, 1),
    "disc_diff": (-64, 64),
    "mobility_diff": (-60, 60),
    "potential_mobility_diff": (-60, 60),
    "corner_diff": (-4, 4),
    "x_square_diff": (-4, 4),
    "c_square_diff": (-8, 8),
    "frontier_diff": (-64, 64),
    "stable_edge_diff": (-28, 28),
    "parity": (-1, 1),
}

_X_SQUARES = sum(1 << board.square_index(s) for s in ("b2", "g2", "b7", "g7"))
_C_SQUARES = sum(
    1 << board.square_index(s)
    for s in ("b1", "g1", "a2", "h2", "a7", "h7", "b8", "g8")
)

# (corner, step along one of its two edges); runs of the corner's colour
# along these rays can never be flipped.
_CORNER_RAYS = (
    (0, 1), (0, 8),
    (7, -1), (7, 8),
    (56, 1), (56, -8),
    (63, -1), (63, -8),
)


class TerminalPosition(OthlearnError):
    """Terminal positions are labeled by their outcome, never evaluated."""


@dataclass(frozen=True)
class FeatureSetDescriptor:
    version: str
    names: tuple[str, ...]


def describe() -> FeatureSetDescriptor:
    return FeatureSetDescriptor(version=FEATURE_VERSION, names=FEATURE_NAMES)


def _stable_edge_masks(black: int, white: int) -> tuple[int, int]:
    stable_black = 0
    stable_white = 0
    for corner, step in _CORNER_RAYS:
        bit = 1 << corner
        if black & bit:
            own = black
        elif white & bit:
            own = white
        else:
            continue
        sq = corner
        for _ in range(8):
            b = 1 << sq
            if not (own & b):
                break
            if own is black:
                stable_black |= b
            else:
                stable_white |= b
            sq += step
    return stable_black, stable_white


def extract(p: Position) -> np.ndarray:
    """Feature vector for a non-terminal position, intercept first."""
    me, opp = p.mover_mask, p.opponent_mask
    my_moves = legal_mask(me, opp)
    opp_moves = legal_mask(opp, me)
    if not my_moves and not opp_moves:
        raise TerminalPosition("cannot extract features from a terminal position")

    empty = ~(me | opp) & FULL
    near_empty = board.dilate(empty)

    disc_diff = me.bit_count() - opp.bit_count()
    mobility_diff = my_moves.bit_count() - opp_moves.bit_count()
    potential_mobility_diff = (
        (empty & board.dilate(opp)).bit_count()
        - (empty & board.dilate(me)).bit_count()
    )
    corner_diff = (me & CORNERS).bit_count() - (opp & CORNERS).bit_count()
    x_square_diff = (me & _X_SQUARES).bit_count() - (opp & _X_SQUARES).bit_count()
    c_square_diff = (me & _C_SQUARES).bit_count() - (opp & _C_SQUARES).bit_count()
    frontier_diff = (me & near_empty).bit_count() - (opp & near_empty).bit_count()

    stable_black, stable_white = _stable_edge_masks(p.black, p.white)
    if p.to_move == board.Color.BLACK:
        stable_edge_diff = stable_black.bit_count() - stable_white.bit_count()
    else:
        stable_edge_diff = stable_white.bit_count() - stable_black.bit_count()

    parity = 1 if empty.bit_count() % 2 == 1 else -1

    return np.array(
        [
            1.0,
            disc_diff,
            mobility_diff,
            potential_mobility_diff,
            corner_diff,
            x_square_diff,
            c_square_diff,
            frontier_diff,
            stable_edge_diff,
            parity,
        ],
        dtype=np.float64,
    )
