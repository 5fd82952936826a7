"""Move selection: iterative-deepening NegaScout plus an exact endgame solver.

Search values are winning probabilities in [0, 1], so negation at a
ply boundary is v -> 1 - v and terminal positions score exactly 1, 1/2,
or 0. Keeping every model on the probability scale is what makes values
from different game phases (and different models) comparable.

Endgames at few empties are solved exactly on the win/draw/loss scale
{-1, 0, +1} by alpha-beta with an early cutoff once a win is proven.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import board
from .board import CORNERS, Color, Label, Move, PASS, Position, flip_mask, legal_mask
from .errors import OthlearnError
from .estimators import evaluator

_NULL_EPS = 1e-9


class TooManyEmpties(OthlearnError):
    pass


@dataclass(frozen=True)
class SearchLimits:
    max_depth: int = 4
    wdl_empties_threshold: int = 12
    node_budget: int | None = None


@dataclass(frozen=True)
class SearchResult:
    best_move: Move
    score: float
    depth_reached: int
    nodes: int
    exact: bool = False


class _Counter:
    __slots__ = ("n",)

    def __init__(self) -> None:
        self.n = 0


def _terminal_value(me: int, opp: int) -> float:
    d = me.bit_count() - opp.bit_count()
    return 1.0 if d > 0 else 0.5 if d == 0 else 0.0


def negamax_eval(p: Position, depth: int, model) -> float:
    """Plain full-width negamax; the reference value for NegaScout."""
    eval_fn = evaluator(model)
    return _negamax(p, depth, eval_fn)


def _negamax(p: Position, depth: int, eval_fn) -> float:
    moves = board.legal_moves(p)
    if not moves:
        return _terminal_value(p.mover_mask, p.opponent_mask)
    if depth <= 0:
        return eval_fn(p)
    best = -1.0
    for m in sorted(moves, key=_move_key):
        child = board.apply_move(p, m)
        best = max(best, 1.0 - _negamax(child, depth - 1, eval_fn))
    return best


def _move_key(m: Move) -> int:
    return -1 if m.is_pass else m.square


def negascout(p: Position, depth: int, alpha: float, beta: float, model) -> float:
    """NegaScout value of `p`; exact inside (alpha, beta), a bound outside."""
    if not alpha < beta:
        raise ValueError("need alpha < beta")
    eval_fn = evaluator(model)
    counter = _Counter()
    return _ns(
        p.black, p.white, p.to_move == Color.BLACK, depth, alpha, beta, eval_fn, counter
    )


def _children(me: int, opp: int, mask: int) -> list[tuple[int, int, int]]:
    out = []
    while mask:
        low = mask & -mask
        sq = low.bit_length() - 1
        mask ^= low
        flips = flip_mask(me, opp, sq)
        out.append((sq, me | flips | low, opp & ~flips))
    return out


def _order_static(children: list[tuple[int, int, int]]) -> None:
    # Corners first, then moves leaving the opponent the fewest replies.
    children.sort(
        key=lambda c: (
            0 if (1 << c[0]) & CORNERS else 1,
            legal_mask(c[2], c[1]).bit_count(),
        )
    )


def _ns(
    black: int,
    white: int,
    black_to_move: bool,
    depth: int,
    alpha: float,
    beta: float,
    eval_fn,
    counter: _Counter,
) -> float:
    counter.n += 1
    me, opp = (black, white) if black_to_move else (white, black)
    mask = legal_mask(me, opp)
    if not mask:
        if not legal_mask(opp, me):
            return _terminal_value(me, opp)
        if depth <= 0:
            return eval_fn(Position(black, white, Color.BLACK if black_to_move else Color.WHITE))
        return 1.0 - _ns(
            black, white, not black_to_move, depth - 1, 1.0 - beta, 1.0 - alpha,
            eval_fn, counter,
        )
    if depth <= 0:
        return eval_fn(Position(black, white, Color.BLACK if black_to_move else Color.WHITE))

    children = _children(me, opp, mask)
    if depth >= 2:
        _order_static(children)

    best = -1.0
    a = alpha
    first = True
    for _, nme, nopp in children:
        if black_to_move:
            cb, cw = nme, nopp
        else:
            cb, cw = nopp, nme
        if first:
            v = 1.0 - _ns(cb, cw, not black_to_move, depth - 1, 1.0 - beta, 1.0 - a, eval_fn, counter)
            first = False
        else:
            null_hi = a + _NULL_EPS
            v = 1.0 - _ns(cb, cw, not black_to_move, depth - 1, 1.0 - null_hi, 1.0 - a, eval_fn, counter)
            if a < v < beta:
                v = 1.0 - _ns(cb, cw, not black_to_move, depth - 1, 1.0 - beta, 1.0 - a, eval_fn, counter)
        if v > best:
            best = v
        if v > a:
            a = v
        if a >= beta:
            break
    return best


def _root_fixed_depth(p, depth, eval_fn, order, counter):
    """Full-window root search; returns (move, value). Ties keep the
    earliest move in `order`."""
    me, opp = p.mover_mask, p.opponent_mask
    black = p.to_move == Color.BLACK
    best_move = None
    best = -1.0
    a = 0.0
    for m in order:
        low = 1 << m.square
        flips = flip_mask(me, opp, m.square)
        nme, nopp = me | flips | low, opp & ~flips
        cb, cw = (nme, nopp) if black else (nopp, nme)
        if best_move is None:
            v = 1.0 - _ns(cb, cw, not black, depth - 1, 0.0, 1.0 - a, eval_fn, counter)
        else:
            null_hi = min(a + _NULL_EPS, 1.0)
            v = 1.0 - _ns(cb, cw, not black, depth - 1, 1.0 - null_hi, 1.0 - a, eval_fn, counter)
            if v > a:
                v = 1.0 - _ns(cb, cw, not black, depth - 1, 0.0, 1.0 - a, eval_fn, counter)
        if v > best:
            best = v
            best_move = m
        if v > a:
            a = v
    return best_move, best


def _default_root_order(p: Position, prev_best: Move | None) -> list[Move]:
    me, opp = p.mover_mask, p.opponent_mask
    moves = sorted((m for m in board.legal_moves(p) if not m.is_pass), key=_move_key)

    def key(m: Move):
        low = 1 << m.square
        flips = flip_mask(me, opp, m.square)
        reply = legal_mask(opp & ~flips, me | flips | low).bit_count()
        return (
            0 if m == prev_best else 1,
            0 if low & CORNERS else 1,
            reply,
        )

    moves.sort(key=key)
    return moves


def iterative_deepening(p: Position, limits: SearchLimits, model, root_order=None) -> SearchResult:
    """Deepen from 1 to max_depth, seeding each iteration's move order with
    the previous best move; delegate to the exact solver near the end."""
    eval_fn = evaluator(model)
    counter = _Counter()
    if board.empty_count(p) <= limits.wdl_empties_threshold:
        return _solve_root(p, counter, root_order)

    moves = [m for m in board.legal_moves(p) if not m.is_pass]
    if not moves:
        # Forced pass: score is the negated value of handing over the turn.
        depth = max(limits.max_depth, 1)
        v = 1.0 - _ns(
            p.black, p.white, p.to_move != Color.BLACK, depth - 1, 0.0, 1.0,
            eval_fn, counter,
        )
        return SearchResult(PASS, v, depth, counter.n)

    best_move = None
    best = 0.5
    reached = 0
    for depth in range(1, max(limits.max_depth, 1) + 1):
        if root_order is not None:
            order = list(root_order)
            if best_move is not None and best_move in order:
                order.remove(best_move)
                order.insert(0, best_move)
        else:
            order = _default_root_order(p, best_move)
        best_move, best = _root_fixed_depth(p, depth, eval_fn, order, counter)
        reached = depth
        if limits.node_budget is not None and counter.n >= limits.node_budget:
            break
    return SearchResult(best_move, best, reached, counter.n)


def solve_wdl(p: Position, max_empties: int = 20) -> Label:
    """Exact win/draw/loss for the mover under perfect play."""
    empties = board.empty_count(p)
    if empties > max_empties:
        raise TooManyEmpties(f"{empties} empties exceeds the {max_empties} limit")
    out = board.terminal_outcome(p)
    if out is not None:
        return out.label
    counter = _Counter()
    value = _wdl(p.mover_mask, p.opponent_mask, -1, 1, False, counter)
    return Label(value)


def _wdl(me: int, opp: int, alpha: int, beta: int, passed: bool, counter: _Counter) -> int:
    counter.n += 1
    mask = legal_mask(me, opp)
    if not mask:
        if passed or not legal_mask(opp, me):
            d = me.bit_count() - opp.bit_count()
            return 1 if d > 0 else 0 if d == 0 else -1
        return -_wdl(opp, me, -beta, -alpha, True, counter)

    children = _children(me, opp, mask)
    if 64 - (me | opp).bit_count() > 6:
        _order_static(children)
    best = -2
    for _, nme, nopp in children:
        v = -_wdl(nopp, nme, -beta, -alpha, False, counter)
        if v > best:
            best = v
        if v > alpha:
            alpha = v
        if alpha >= beta:
            break
    return best


def _solve_root(p: Position, counter: _Counter, root_order=None) -> SearchResult:
    empties = board.empty_count(p)
    me, opp = p.mover_mask, p.opponent_mask
    mask = legal_mask(me, opp)
    if not mask:
        if not legal_mask(opp, me):
            raise ValueError("cannot search a terminal position")
        v = -_wdl(opp, me, -1, 1, True, counter)
        return SearchResult(PASS, _wdl_score(v), empties, counter.n, exact=True)

    if root_order is not None:
        moves = list(root_order)
    else:
        children = _children(me, opp, mask)
        _order_static(children)
        moves = [Move(sq) for sq, _, _ in children]

    best = -2
    best_move = None
    alpha = -1
    for m in moves:
        low = 1 << m.square
        flips = flip_mask(me, opp, m.square)
        v = -_wdl(opp & ~flips, me | flips | low, -1, -alpha, False, counter)
        if v > best:
            best = v
            best_move = m
        if v > alpha:
            alpha = v
        if best == 1:
            break
    return SearchResult(best_move, _wdl_score(best), empties, counter.n, exact=True)


def _wdl_score(value: int) -> float:
    return {1: 1.0, 0: 0.5, -1: 0.0}[value]
