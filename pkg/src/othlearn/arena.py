"""Paired-game tournaments between engine configurations.

Each opening is played twice with colours reversed to cancel first-
mover and opening bias. Winning percentage counts draws as half. The
significance test is deliberately conservative: it takes the larger of
an exact two-sided binomial sign test on decisive games and a two-sided
normal test on draws-as-half scores with the maximal per-game standard
deviation of 1/2.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction

from . import board, search
from .board import Color, Move, PASS, Position
from .errors import OthlearnError
from .estimators import evaluator


class InsufficientBalancedOpenings(OthlearnError):
    pass


@dataclass(frozen=True)
class EngineConfig:
    name: str
    model: object
    limits: search.SearchLimits


@dataclass(frozen=True)
class GameLog:
    opening_index: int
    black_name: str
    white_name: str
    moves: tuple[Move, ...]
    final_differential: int  # Black minus White
    result_for_a: int  # +1 win / 0 draw / -1 loss from engine A's side


@dataclass
class MatchTally:
    a_name: str
    b_name: str
    wins: int = 0
    draws: int = 0
    losses: int = 0
    logs: list[GameLog] = field(default_factory=list)

    @property
    def total(self) -> int:
        return self.wins + self.draws + self.losses

    def add(self, log: GameLog) -> None:
        self.logs.append(log)
        if log.result_for_a > 0:
            self.wins += 1
        elif log.result_for_a < 0:
            self.losses += 1
        else:
            self.draws += 1


def winning_percentage(t: MatchTally) -> float:
    """(wins + draws/2) / games."""
    if t.total < 1:
        raise ValueError("no games played")
    return (t.wins + t.draws / 2.0) / t.total


def percentage_display(t: MatchTally) -> str:
    """One-decimal percent with exact half-up rounding, e.g. '61.8%'."""
    tenths_num = (2 * t.wins + t.draws) * 1000 + t.total
    tenths = tenths_num // (2 * t.total)
    return f"{tenths // 10}.{tenths % 10}%"


def _binomial_sign_test(wins: int, losses: int) -> float:
    """Exact two-sided sign test on decisive games under p = 1/2."""
    m = wins + losses
    if m == 0:
        return 1.0
    lower = sum(math.comb(m, i) for i in range(0, wins + 1))
    upper = sum(math.comb(m, i) for i in range(wins, m + 1))
    tail = min(lower, upper)
    p = 2 * Fraction(tail, 2**m)
    return float(min(p, Fraction(1)))


def _normal_score_test(t: MatchTally) -> float:
    """Two-sided normal test on the draws-as-half score, sd 1/2 per game."""
    z = (t.wins + t.draws / 2.0 - t.total / 2.0) / (0.5 * math.sqrt(t.total))
    return math.erfc(abs(z) / math.sqrt(2.0))


def significance(t: MatchTally, level: float = 0.05) -> tuple[float, bool]:
    """Conservative p-value: the larger of the two component tests."""
    if t.total < 1:
        raise ValueError("no games played")
    p = max(_binomial_sign_test(t.wins, t.losses), _normal_score_test(t))
    return p, p < level


def select_openings(book, model, count: int) -> list[Position]:
    """The `count` book positions the model rates closest to even, all
    within the [0.4, 0.6] probability band; ties keep input order."""
    eval_fn = evaluator(model)
    scored = []
    for i, p in enumerate(book):
        prob = eval_fn(p)
        if 0.4 <= prob <= 0.6:
            scored.append((abs(prob - 0.5), i, p))
    if len(scored) < count:
        raise InsufficientBalancedOpenings(
            f"only {len(scored)} of {len(book)} openings rate within [0.4, 0.6]"
        )
    scored.sort(key=lambda s: (s[0], s[1]))
    return [p for _, _, p in scored[:count]]


def _play_game(opening: Position, engines: dict[Color, EngineConfig]) -> tuple[tuple[Move, ...], int]:
    p = opening
    moves = []
    while not board.is_terminal(p):
        legal = board.legal_moves(p)
        if PASS in legal:
            p = board.apply_move(p, PASS)
            continue
        cfg = engines[p.to_move]
        result = search.iterative_deepening(p, cfg.limits, cfg.model)
        p = board.apply_move(p, result.best_move)
        moves.append(result.best_move)
    return tuple(moves), p.black.bit_count() - p.white.bit_count()


def play_pair(
    opening: Position, a: EngineConfig, b: EngineConfig, opening_index: int = 0
) -> list[GameLog]:
    """The opening and its return game with colours reversed; results are
    reported from engine `a`'s perspective."""
    logs = []
    first = opening.to_move
    for a_colour in (first, first.opponent):
        engines = {a_colour: a, a_colour.opponent: b}
        moves, diff = _play_game(opening, engines)
        sign = 1 if diff > 0 else -1 if diff < 0 else 0
        result_for_a = sign if a_colour == Color.BLACK else -sign
        logs.append(
            GameLog(
                opening_index=opening_index,
                black_name=engines[Color.BLACK].name,
                white_name=engines[Color.WHITE].name,
                moves=moves,
                final_differential=diff,
                result_for_a=result_for_a,
            )
        )
    return logs


@dataclass(frozen=True)
class TournamentRow:
    pairing: str
    tally: MatchTally
    win_pct: str
    p_value: float
    significant: bool


@dataclass(frozen=True)
class TournamentReport:
    rows: tuple[TournamentRow, ...]

    def render_text(self) -> str:
        header = ("Pairing", "Result (Win-Draw-Loss)", "Winning Percentage", "p-value")
        body = []
        for r in self.rows:
            result = f"{r.tally.wins} - {r.tally.draws} - {r.tally.losses}"
            mark = " *" if r.significant else ""
            body.append((r.pairing, result, r.win_pct, f"{r.p_value:.4f}{mark}"))
        widths = [max(len(h), *(len(row[i]) for row in body)) for i, h in enumerate(header)]
        lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths))]
        lines.append("  ".join("-" * w for w in widths))
        for row in body:
            lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)))
        lines.append("(* significant at the 5% level)")
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        lines = ["pairing,wins,draws,losses,win_pct,p_value,significant"]
        for r in self.rows:
            t = r.tally
            lines.append(
                f"{r.pairing},{t.wins},{t.draws},{t.losses},"
                f"{r.win_pct.rstrip('%')},{r.p_value:.6g},{str(r.significant).lower()}"
            )
        return "\n".join(lines) + "\n"


def run_tournament(
    openings,
    engines: list[EngineConfig],
    pairings: list[tuple[str, str]],
    level: float = 0.05,
) -> TournamentReport:
    """All opening pairs for every pairing, aggregated in opening order."""
    if not openings:
        raise ValueError("need at least one opening")
    by_name = {e.name: e for e in engines}
    if len(by_name) != len(engines):
        raise ValueError("engine names must be unique")
    rows = []
    for name_a, name_b in pairings:
        a, b = by_name[name_a], by_name[name_b]
        tally = MatchTally(a_name=name_a, b_name=name_b)
        for i, opening in enumerate(openings):
            for log in play_pair(opening, a, b, opening_index=i):
                tally.add(log)
        p_value, sig = significance(tally, level=level)
        rows.append(
            TournamentRow(
                pairing=f"{name_a} - {name_b}",
                tally=tally,
                win_pct=percentage_display(tally),
                p_value=p_value,
                significant=sig,
            )
        )
    return TournamentReport(rows=tuple(rows))


def random_opening_book(
    count: int, discs: int = 14, seed: int = 0, max_tries: int = 100_000
) -> list[tuple[Move, ...]]:
    """Distinct random-playout move prefixes reaching `discs` discs."""
    rng = random.Random(seed)
    seen = set()
    books = []
    tries = 0
    while len(books) < count and tries < max_tries:
        tries += 1
        p = board.initial_position()
        moves = []
        ok = True
        while board.disc_count(p) < discs:
            legal = [m for m in board.legal_moves(p) if not m.is_pass]
            if not legal:
                ok = False
                break
            m = rng.choice(sorted(legal, key=lambda mv: mv.square))
            p = board.apply_move(p, m)
            moves.append(m)
        if not ok or board.is_terminal(p):
            continue
        key = (p.black, p.white, int(p.to_move))
        if key in seen:
            continue
        seen.add(key)
        books.append(tuple(moves))
    if len(books) < count:
        raise InsufficientBalancedOpenings(
            f"could only build {len(books)} of {count} openings"
        )
    return books
