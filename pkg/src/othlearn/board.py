"""Othello rules engine on 64-bit bitboards.

Squares are indexed a1 = 0 .. h8 = 63, row-major from rank 1
(index = 8*(rank-1) + file, file a = 0). Positions are immutable values
and every operation is a pure function, so everything here is safe to
call from any number of threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

from .errors import OthlearnError

FULL = 0xFFFF_FFFF_FFFF_FFFF
FILE_A = 0x0101_0101_0101_0101
FILE_H = 0x8080_8080_8080_8080
CORNERS = (1 << 0) | (1 << 7) | (1 << 56) | (1 << 63)

_INNER = FULL & ~(FILE_A | FILE_H)

# (shift, pre-shift mask) pairs for walking a single bit without wrapping.
_WALKS = (
    (8, FULL),
    (-8, FULL),
    (1, FULL & ~FILE_H),
    (-1, FULL & ~FILE_A),
    (9, FULL & ~FILE_H),
    (-9, FULL & ~FILE_A),
    (7, FULL & ~FILE_A),
    (-7, FULL & ~FILE_H),
)


class IllegalMove(OthlearnError):
    """Move is not legal in the given position."""


class Color(IntEnum):
    BLACK = 0
    WHITE = 1

    @property
    def opponent(self) -> "Color":
        return Color(1 - self.value)


class Label(IntEnum):
    """Game-theoretic value from the perspective of the side to move."""

    WIN = 1
    DRAW = 0
    LOSS = -1

    @property
    def negated(self) -> "Label":
        return Label(-self.value)


def square_index(name: str) -> int:
    """Parse 'a1'..'h8' (case-insensitive) to a square index."""
    if len(name) != 2:
        raise ValueError(f"bad square name {name!r}")
    file = ord(name[0].lower()) - ord("a")
    rank = ord(name[1]) - ord("1")
    if not (0 <= file < 8 and 0 <= rank < 8):
        raise ValueError(f"bad square name {name!r}")
    return rank * 8 + file


def square_name(square: int) -> str:
    return "abcdefgh"[square & 7] + "12345678"[square >> 3]


@dataclass(frozen=True)
class Move:
    """A board square to play on, or None for an explicit pass."""

    square: int | None = None

    @property
    def is_pass(self) -> bool:
        return self.square is None

    @classmethod
    def from_name(cls, name: str) -> "Move":
        if name in ("--", "pass"):
            return PASS
        return cls(square_index(name))

    def __str__(self) -> str:
        return "--" if self.square is None else square_name(self.square)


PASS = Move(None)


@dataclass(frozen=True)
class Outcome:
    """Final result from the perspective of the side to move."""

    label: Label
    disc_differential: int | None = None


@dataclass(frozen=True)
class Position:
    black: int
    white: int
    to_move: Color = Color.BLACK

    @property
    def mover_mask(self) -> int:
        return self.black if self.to_move == Color.BLACK else self.white

    @property
    def opponent_mask(self) -> int:
        return self.white if self.to_move == Color.BLACK else self.black


def legal_mask(me: int, opp: int) -> int:
    """Bitmask of squares where `me` has a flipping move against `opp`."""
    empty = ~(me | opp) & FULL
    o = opp & _INNER
    moves = 0

    t = (me << 1) & o
    t |= (t << 1) & o
    t |= (t << 1) & o
    t |= (t << 1) & o
    t |= (t << 1) & o
    t |= (t << 1) & o
    moves |= (t << 1) & empty

    t = (me >> 1) & o
    t |= (t >> 1) & o
    t |= (t >> 1) & o
    t |= (t >> 1) & o
    t |= (t >> 1) & o
    t |= (t >> 1) & o
    moves |= (t >> 1) & empty

    t = (me << 8) & opp
    t |= (t << 8) & opp
    t |= (t << 8) & opp
    t |= (t << 8) & opp
    t |= (t << 8) & opp
    t |= (t << 8) & opp
    moves |= (t << 8) & empty

    t = (me >> 8) & opp
    t |= (t >> 8) & opp
    t |= (t >> 8) & opp
    t |= (t >> 8) & opp
    t |= (t >> 8) & opp
    t |= (t >> 8) & opp
    moves |= (t >> 8) & empty

    t = (me << 7) & o
    t |= (t << 7) & o
    t |= (t << 7) & o
    t |= (t << 7) & o
    t |= (t << 7) & o
    t |= (t << 7) & o
    moves |= (t << 7) & empty

    t = (me >> 7) & o
    t |= (t >> 7) & o
    t |= (t >> 7) & o
    t |= (t >> 7) & o
    t |= (t >> 7) & o
    t |= (t >> 7) & o
    moves |= (t >> 7) & empty

    t = (me << 9) & o
    t |= (t << 9) & o
    t |= (t << 9) & o
    t |= (t << 9) & o
    t |= (t << 9) & o
    t |= (t << 9) & o
    moves |= (t << 9) & empty

    t = (me >> 9) & o
    t |= (t >> 9) & o
    t |= (t >> 9) & o
    t |= (t >> 9) & o
    t |= (t >> 9) & o
    t |= (t >> 9) & o
    moves |= (t >> 9) & empty

    return moves & FULL


def flip_mask(me: int, opp: int, square: int) -> int:
    """Discs flipped if `me` plays `square`; 0 means the move is illegal."""
    flips = 0
    for shift, pre in _WALKS:
        b = 1 << square
        run = 0
        while True:
            b &= pre
            b = (b << shift) & FULL if shift > 0 else b >> -shift
            if b & opp:
                run |= b
            else:
                break
        if b & me:
            flips |= run
    return flips


def dilate(mask: int) -> int:
    """All squares orthogonally or diagonally adjacent to `mask`."""
    acc = 0
    for shift, pre in _WALKS:
        b = mask & pre
        acc |= (b << shift) & FULL if shift > 0 else b >> -shift
    return acc


def initial_position() -> Position:
    """Standard start: White on d4/e5, Black on d5/e4, Black to move."""
    white = (1 << square_index("d4")) | (1 << square_index("e5"))
    black = (1 << square_index("d5")) | (1 << square_index("e4"))
    return Position(black=black, white=white, to_move=Color.BLACK)


def legal_moves(p: Position) -> set[Move]:
    """Flipping moves for the mover; {PASS} if only the opponent can move;
    empty set if the game is over."""
    mask = legal_mask(p.mover_mask, p.opponent_mask)
    if mask:
        moves = set()
        while mask:
            low = mask & -mask
            moves.add(Move(low.bit_length() - 1))
            mask ^= low
        return moves
    if legal_mask(p.opponent_mask, p.mover_mask):
        return {PASS}
    return set()


def apply_move(p: Position, m: Move) -> Position:
    me, opp = p.mover_mask, p.opponent_mask
    if m.is_pass:
        if legal_mask(me, opp) or not legal_mask(opp, me):
            raise IllegalMove("pass is only legal when forced")
        return Position(p.black, p.white, p.to_move.opponent)
    occupied = p.black | p.white
    if occupied >> m.square & 1:
        raise IllegalMove(f"square {square_name(m.square)} is occupied")
    flips = flip_mask(me, opp, m.square)
    if not flips:
        raise IllegalMove(f"move {square_name(m.square)} flips nothing")
    me |= flips | (1 << m.square)
    opp &= ~flips
    if p.to_move == Color.BLACK:
        return Position(me, opp, Color.WHITE)
    return Position(opp, me, Color.BLACK)


def disc_count(p: Position) -> int:
    return (p.black | p.white).bit_count()


def empty_count(p: Position) -> int:
    return 64 - disc_count(p)


def terminal_outcome(p: Position) -> Outcome | None:
    """Outcome for the mover if neither side can move, else None."""
    if legal_mask(p.mover_mask, p.opponent_mask):
        return None
    if legal_mask(p.opponent_mask, p.mover_mask):
        return None
    diff = p.mover_mask.bit_count() - p.opponent_mask.bit_count()
    label = Label.WIN if diff > 0 else Label.LOSS if diff < 0 else Label.DRAW
    return Outcome(label=label, disc_differential=diff)


def is_terminal(p: Position) -> bool:
    return terminal_outcome(p) is not None


def swap_colors(p: Position) -> Position:
    """Mirror position: the mover now owns what the opponent owned."""
    return Position(black=p.white, white=p.black, to_move=p.to_move)
