"""Shared test oracles and generators.

Everything here is deliberately naive and independent of the package's
fast paths: per-square ray scanning instead of bitboard shifts, full
tree enumeration instead of alpha-beta, recursive graph minimax instead
of the level sweep. The slow versions define correctness.
"""

from __future__ import annotations

import random

from othlearn import board
from othlearn.board import Color, Label, Move, PASS, Position

_DIRS = ((0, 1), (0, -1), (1, 0), (-1, 0), (1, 1), (1, -1), (-1, 1), (-1, -1))


def _at(mask: int, rank: int, file: int) -> bool:
    return bool(mask >> (rank * 8 + file) & 1)


def rayscan_moves(p: Position) -> set[Move]:
    """Naive per-square legal move oracle (spec semantics, no bit tricks)."""
    me, opp = p.mover_mask, p.opponent_mask
    flipping = set()
    for rank in range(8):
        for file in range(8):
            if _at(me | opp, rank, file):
                continue
            for dr, df in _DIRS:
                r, f = rank + dr, file + df
                seen_opp = False
                while 0 <= r < 8 and 0 <= f < 8 and _at(opp, r, f):
                    seen_opp = True
                    r += dr
                    f += df
                if seen_opp and 0 <= r < 8 and 0 <= f < 8 and _at(me, r, f):
                    flipping.add(Move(rank * 8 + file))
                    break
    if flipping:
        return flipping
    if rayscan_has_move(p.opponent_mask, p.mover_mask):
        return {PASS}
    return set()


def rayscan_has_move(me: int, opp: int) -> bool:
    return bool(rayscan_moves(Position(me, opp, Color.BLACK)))


def random_playout_positions(games: int, seed: int, min_discs: int = 4, max_discs: int = 64):
    """Every non-terminal state visited in `games` uniformly random games."""
    rng = random.Random(seed)
    out = []
    for _ in range(games):
        p = board.initial_position()
        while True:
            if board.is_terminal(p):
                break
            if min_discs <= board.disc_count(p) <= max_discs:
                out.append(p)
            moves = sorted(board.legal_moves(p), key=lambda m: (m.is_pass, m.square or 0))
            p = board.apply_move(p, rng.choice(moves))
    return out


def random_position(rng: random.Random, target_discs: int) -> Position:
    """One random-playout position at (or just before) `target_discs`."""
    while True:
        p = board.initial_position()
        while board.disc_count(p) < target_discs and not board.is_terminal(p):
            moves = sorted(board.legal_moves(p), key=lambda m: (m.is_pass, m.square or 0))
            p = board.apply_move(p, rng.choice(moves))
        if not board.is_terminal(p) and board.disc_count(p) >= target_discs - 1:
            return p


def random_endgame(rng: random.Random, empties: int) -> Position:
    """A non-terminal position with exactly `empties` empty squares."""
    while True:
        p = board.initial_position()
        while board.empty_count(p) > empties and not board.is_terminal(p):
            moves = sorted(board.legal_moves(p), key=lambda m: (m.is_pass, m.square or 0))
            p = board.apply_move(p, rng.choice(moves))
        if not board.is_terminal(p) and board.empty_count(p) == empties:
            return p


def exhaustive_wdl(p: Position) -> Label:
    """Game value by full enumeration of every line to the end (no pruning)."""
    diff = _exhaustive_diff(p)
    return Label.WIN if diff > 0 else Label.LOSS if diff < 0 else Label.DRAW


def _exhaustive_diff(p: Position) -> int:
    moves = board.legal_moves(p)
    if not moves:
        return p.mover_mask.bit_count() - p.opponent_mask.bit_count()
    best = None
    for m in sorted(moves, key=lambda m: (m.is_pass, m.square or 0)):
        v = -_exhaustive_diff(board.apply_move(p, m))
        if best is None or v > best:
            best = v
    return best


def graph_minimax(graph, key, memo=None) -> Label:
    """Recursive minimax over the observed edges of a game graph."""
    if memo is None:
        memo = {}
    if key in memo:
        return memo[key]
    node = graph.nodes[key]
    if node.is_terminal:
        memo[key] = node.label
        return node.label
    best = None
    for succ in node.successors:
        v = graph_minimax(graph, succ, memo).negated
        if best is None or v > best:
            best = v
    memo[key] = best
    return best


def pass_forced_position() -> Position:
    """A position where only the opponent can move, found by playout search."""
    rng = random.Random(11)
    while True:
        p = board.initial_position()
        while not board.is_terminal(p):
            if board.legal_moves(p) == {PASS}:
                return p
            moves = sorted(board.legal_moves(p), key=lambda m: (m.is_pass, m.square or 0))
            p = board.apply_move(p, rng.choice(moves))
