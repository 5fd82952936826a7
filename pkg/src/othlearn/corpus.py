"""Training-corpus construction.

Games are stored one per line as concatenated lowercase coordinates
("f5d6c3...") with an optional signed final disc differential (Black
minus White). Passes are never stored; they are inferred on replay.

Labeling merges all games into one graph keyed by canonical position
(occupancy masks plus mover), labels terminal nodes by their final
result, and propagates those results to every interior node: a node's
label is the best of its observed successors' negated labels. Because
a position's classification then depends on every successor seen in
any game, repeated lines sharpen earlier labels.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

import numpy as np

from . import board, features, search
from .board import Label, Move, PASS, Position
from .errors import OthlearnError
from .estimators import LabeledExample, ModelKind, clamp_boundary_labels, evaluator


class ParseError(OthlearnError):
    pass


class IllegalGame(OthlearnError):
    pass


class IncompleteGame(OthlearnError):
    pass


class DifferentialMismatch(OthlearnError):
    pass


@dataclass(frozen=True)
class GameRecord:
    """Non-pass moves from the standard start, plus Black's final margin."""

    moves: tuple[Move, ...]
    final_differential: int


def replay_positions(moves, line: int | None = None) -> list[Position]:
    """Every state visited while replaying `moves`, passes inferred.

    Raises IllegalGame if a recorded move is not legal when reached.
    """
    where = f"line {line}: " if line is not None else ""
    p = board.initial_position()
    path = [p]
    for i, m in enumerate(moves):
        if not board.legal_mask(p.mover_mask, p.opponent_mask):
            if not board.legal_mask(p.opponent_mask, p.mover_mask):
                raise IllegalGame(f"{where}move {i + 1} ({m}) played after game end")
            p = board.apply_move(p, PASS)
            path.append(p)
        try:
            p = board.apply_move(p, m)
        except board.IllegalMove as exc:
            raise IllegalGame(f"{where}move {i + 1} ({m}) is illegal") from exc
        path.append(p)
    # A trailing forced pass before a terminal state still belongs to the game.
    if not board.is_terminal(p) and not board.legal_mask(p.mover_mask, p.opponent_mask):
        p = board.apply_move(p, PASS)
        path.append(p)
    return path


def _black_differential(p: Position) -> int:
    return p.black.bit_count() - p.white.bit_count()


def parse_games(text: str) -> list[GameRecord]:
    """Parse and fully validate a game file; errors carry line numbers."""
    records = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped:
            continue
        parts = stripped.split()
        if len(parts) > 2:
            raise ParseError(f"line {lineno}: expected 'moves [differential]'")
        movetext = parts[0]
        if len(movetext) % 2 != 0:
            raise ParseError(f"line {lineno}: odd-length move text")
        moves = []
        for off in range(0, len(movetext), 2):
            try:
                moves.append(Move.from_name(movetext[off : off + 2]))
            except ValueError as exc:
                raise ParseError(
                    f"line {lineno}: bad coordinate {movetext[off:off+2]!r} "
                    f"at offset {off}"
                ) from exc

        path = replay_positions(moves, line=lineno)
        final = path[-1]
        if not board.is_terminal(final):
            raise IncompleteGame(
                f"line {lineno}: record stops before the game is over"
            )
        diff = _black_differential(final)
        if len(parts) == 2:
            try:
                stated = int(parts[1])
            except ValueError as exc:
                raise ParseError(f"line {lineno}: bad differential {parts[1]!r}") from exc
            if stated != diff:
                raise DifferentialMismatch(
                    f"line {lineno}: stated differential {stated:+d}, replay gives {diff:+d}"
                )
        records.append(GameRecord(moves=tuple(moves), final_differential=diff))
    return records


def serialize_games(records) -> str:
    return "".join(
        "".join(str(m) for m in r.moves) + f" {r.final_differential:+d}\n"
        for r in records
    )


def enumerate_openings(length: int) -> list[tuple[Move, ...]]:
    """All move sequences of `length` plies, deduplicated by the position
    they reach (first sequence in square order wins)."""
    start = board.initial_position()
    positions: dict[tuple[Move, ...], Position] = {(): start}
    frontier: list[tuple[Move, ...]] = [()]
    for _ in range(length):
        seen: set[tuple[int, int, int]] = set()
        next_frontier: list[tuple[Move, ...]] = []
        for seq in frontier:
            p = positions[seq]
            for m in sorted(board.legal_moves(p), key=lambda mv: mv.square or 0):
                if m.is_pass:
                    continue
                child = board.apply_move(p, m)
                key = (child.black, child.white, int(child.to_move))
                if key in seen:
                    continue
                seen.add(key)
                child_seq = seq + (m,)
                next_frontier.append(child_seq)
                positions[child_seq] = child
        frontier = next_frontier
    return frontier


def selfplay_generate(
    model,
    openings,
    depth: int,
    seed: int,
    wdl_empties: int = 12,
) -> list[GameRecord]:
    """One completed game per opening, both sides searching `depth` plies.

    Endgames at <= `wdl_empties` empties are solved exactly, so late
    labels are exact by construction. Root moves are examined in a
    per-opening seeded random order and the first strictly-best move is
    kept, which both breaks evaluation ties randomly and makes reruns
    with the same seed byte-identical.
    """
    eval_fn = evaluator(model)
    limits = search.SearchLimits(max_depth=depth, wdl_empties_threshold=wdl_empties)
    records = []
    for idx, opening in enumerate(openings):
        rng = random.Random(seed * 1_000_003 + idx)
        path = replay_positions(opening)
        p = path[-1]
        moves = list(opening)
        while not board.is_terminal(p):
            legal = board.legal_moves(p)
            if PASS in legal:
                p = board.apply_move(p, PASS)
                continue
            order = sorted(legal, key=lambda mv: mv.square)
            rng.shuffle(order)
            result = search.iterative_deepening(p, limits, eval_fn, root_order=order)
            p = board.apply_move(p, result.best_move)
            moves.append(result.best_move)
        records.append(
            GameRecord(moves=tuple(moves), final_differential=_black_differential(p))
        )
    return records


@dataclass
class GraphNode:
    black: int
    white: int
    to_move: board.Color
    discs: int
    successors: set = field(default_factory=set)
    label: Label | None = None
    terminal_differential: int | None = None

    @property
    def is_terminal(self) -> bool:
        return self.terminal_differential is not None

    def position(self) -> Position:
        return Position(self.black, self.white, self.to_move)


@dataclass
class GameGraph:
    nodes: dict

    def __len__(self) -> int:
        return len(self.nodes)


def _key(p: Position) -> tuple[int, int, int]:
    return (p.black, p.white, int(p.to_move))


def build_graph(records) -> GameGraph:
    """Merge all game paths into one graph; transpositions share a node."""
    nodes: dict[tuple[int, int, int], GraphNode] = {}
    for rec in records:
        path = replay_positions(rec.moves)
        prev_key = None
        for p in path:
            key = _key(p)
            node = nodes.get(key)
            if node is None:
                node = GraphNode(
                    black=p.black,
                    white=p.white,
                    to_move=p.to_move,
                    discs=board.disc_count(p),
                )
                nodes[key] = node
            if prev_key is not None:
                nodes[prev_key].successors.add(key)
            prev_key = key
        final = path[-1]
        out = board.terminal_outcome(final)
        node = nodes[_key(final)]
        node.terminal_differential = out.disc_differential
        node.label = out.label
    return GameGraph(nodes=nodes)


def propagate_labels(graph: GameGraph) -> GameGraph:
    """Label every interior node from its observed successors.

    Nodes are swept in decreasing disc order; within one disc count the
    targets of pass edges (which have real moves, hence successors one
    disc deeper) are labeled before the nodes that pass into them. The
    result is a fixpoint: re-running changes nothing.
    """
    by_discs: dict[int, list[GraphNode]] = {}
    for node in graph.nodes.values():
        by_discs.setdefault(node.discs, []).append(node)

    for discs in sorted(by_discs, reverse=True):
        level = by_discs[discs]
        movers_first = [n for n in level if not _has_pass_edge(n)]
        passers = [n for n in level if _has_pass_edge(n)]
        for node in movers_first + passers:
            if node.is_terminal:
                continue
            best = None
            for succ_key in node.successors:
                succ = graph.nodes[succ_key]
                if succ.label is None:
                    continue
                value = succ.label.negated
                if best is None or value > best:
                    best = value
            if best is not None:
                node.label = best
    return graph


def _has_pass_edge(node: GraphNode) -> bool:
    return any(key[0] == node.black and key[1] == node.white for key in node.successors)


def extract_examples(graph: GameGraph) -> list[LabeledExample]:
    """One example per labeled non-terminal node; draws get y = 1/2."""
    y_of = {Label.WIN: 1.0, Label.DRAW: 0.5, Label.LOSS: 0.0}
    out = []
    for key in sorted(graph.nodes):
        node = graph.nodes[key]
        if node.is_terminal or node.label is None:
            continue
        out.append(
            LabeledExample(
                x=features.extract(node.position()),
                y=y_of[node.label],
                n=1,
                discs=node.discs,
            )
        )
    out.sort(key=lambda e: e.discs)
    return out


def expand_draws(examples, kind: ModelKind) -> list[LabeledExample]:
    """Resolve draws per model family.

    Logistic: a draw becomes y = n/2 and every single-trial observation
    is rescaled to the 100-trial encoding (win 99, draw 50, loss 1).
    Gaussian models: wins and losses are doubled and each draw enters
    once as a win and once as a loss, which shifts the fit the same way.
    """
    out = []
    if kind == ModelKind.LOGIT:
        for e in examples:
            if e.is_draw and e.n == 1:
                out.append(LabeledExample(x=e.x, y=50.0, n=100, discs=e.discs))
            elif e.is_draw:
                out.append(LabeledExample(x=e.x, y=e.n / 2.0, n=e.n, discs=e.discs))
            else:
                out.append(e)
        return clamp_boundary_labels(out)
    for e in examples:
        if e.is_draw:
            out.append(LabeledExample(x=e.x, y=float(e.n), n=e.n, discs=e.discs))
            out.append(LabeledExample(x=e.x, y=0.0, n=e.n, discs=e.discs))
        else:
            out.append(e)
            out.append(e)
    return out


@dataclass(frozen=True)
class PhaseBucket:
    lo: int
    hi: int
    examples: tuple
    wins: int
    draws: int
    losses: int


@dataclass(frozen=True)
class PhaseBuckets:
    width: int
    overlap: int
    buckets: tuple[PhaseBucket, ...]


def bucket_by_phase(examples, width: int = 4, overlap: int = 2) -> PhaseBuckets:
    """Group examples by disc count; each bucket's training set also takes
    examples within `overlap` discs on either side to smooth the fit."""
    if width < 1 or overlap < 0:
        raise ValueError("width must be >= 1 and overlap >= 0")
    buckets = []
    for lo in range(4, 64, width):
        hi = min(lo + width - 1, 63)
        members = tuple(
            e for e in examples if lo - overlap <= e.discs <= hi + overlap
        )
        wins = sum(1 for e in members if e.is_win)
        losses = sum(1 for e in members if e.is_loss)
        draws = len(members) - wins - losses
        buckets.append(
            PhaseBucket(lo=lo, hi=hi, examples=members, wins=wins, draws=draws, losses=losses)
        )
    return PhaseBuckets(width=width, overlap=overlap, buckets=tuple(buckets))


def bucket_report_csv(buckets: PhaseBuckets) -> str:
    lines = ["bucket_lo,bucket_hi,examples,wins,draws,losses"]
    for b in buckets.buckets:
        lines.append(f"{b.lo},{b.hi},{len(b.examples)},{b.wins},{b.draws},{b.losses}")
    return "\n".join(lines) + "\n"


def write_examples_csv(examples, path) -> None:
    names = ",".join(f"f{i}" for i in range(features.N_FEATURES))
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"discs,y,n,{names}\n")
        for e in examples:
            feats = ",".join(format(v, ".17g") for v in e.x)
            fh.write(f"{e.discs},{format(e.y, '.17g')},{e.n},{feats}\n")


def read_examples_csv(path) -> list[LabeledExample]:
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip()
        expected = "discs,y,n," + ",".join(f"f{i}" for i in range(features.N_FEATURES))
        if header != expected:
            raise ParseError(f"{path}: unexpected header {header!r}")
        out = []
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 3 + features.N_FEATURES:
                raise ParseError(f"{path}:{lineno}: wrong column count")
            try:
                discs = int(parts[0])
                y = float(parts[1])
                n = int(parts[2])
                x = np.array([float(v) for v in parts[3:]])
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: bad value") from exc
            out.append(LabeledExample(x=x, y=y, n=n, discs=discs))
    return out
