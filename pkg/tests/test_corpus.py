import random

import numpy as np
import pytest

from othlearn import board, corpus, estimators
from othlearn.board import Label
from othlearn.corpus import (
    DifferentialMismatch,
    GameRecord,
    IllegalGame,
    IncompleteGame,
    ParseError,
    build_graph,
    bucket_by_phase,
    enumerate_openings,
    expand_draws,
    extract_examples,
    parse_games,
    propagate_labels,
    replay_positions,
    selfplay_generate,
    serialize_games,
)
from othlearn.estimators import LabeledExample, ModelKind

from helpers import graph_minimax


def random_complete_game(seed: int, prefix=()) -> GameRecord:
    """Uniformly random legal completion of `prefix`."""
    rng = random.Random(seed)
    p = replay_positions(prefix)[-1]
    moves = list(prefix)
    while not board.is_terminal(p):
        legal = sorted(board.legal_moves(p), key=lambda m: (m.is_pass, m.square or 0))
        m = rng.choice(legal)
        p = board.apply_move(p, m)
        if not m.is_pass:
            moves.append(m)
    return GameRecord(
        moves=tuple(moves),
        final_differential=p.black.bit_count() - p.white.bit_count(),
    )


class TestParseGames:
    def test_roundtrip(self):
        records = [random_complete_game(s) for s in range(5)]
        text = serialize_games(records)
        assert parse_games(text) == records

    def test_differential_computed_when_omitted(self):
        rec = random_complete_game(1)
        text = "".join(str(m) for m in rec.moves) + "\n"
        (got,) = parse_games(text)
        assert got.final_differential == rec.final_differential

    def test_incomplete_game(self):
        with pytest.raises(IncompleteGame, match="line 1"):
            parse_games("f5d6\n")

    def test_bad_coordinate_with_offset(self):
        with pytest.raises(ParseError, match="offset 0"):
            parse_games("z9f5\n")

    def test_illegal_move(self):
        with pytest.raises(IllegalGame, match="line 1"):
            parse_games("f5f5" + "".join(str(m) for m in random_complete_game(2).moves) + "\n")

    def test_differential_mismatch(self):
        rec = random_complete_game(3)
        text = "".join(str(m) for m in rec.moves) + f" {rec.final_differential + 2:+d}\n"
        with pytest.raises(DifferentialMismatch):
            parse_games(text)

    def test_line_numbers_in_errors(self):
        good = serialize_games([random_complete_game(4)])
        with pytest.raises(IncompleteGame, match="line 3"):
            parse_games(good + "\nf5d6\n")

    def test_blank_lines_skipped(self):
        records = [random_complete_game(5)]
        assert parse_games("\n" + serialize_games(records) + "\n\n") == records


class TestEnumerateOpenings:
    def test_length_zero(self):
        assert enumerate_openings(0) == [()]

    def test_length_one(self):
        openings = enumerate_openings(1)
        assert len(openings) == 4

    def test_deduplication_by_position(self):
        openings = enumerate_openings(3)
        seen = set()
        for seq in openings:
            p = replay_positions(seq)[-1]
            key = (p.black, p.white, int(p.to_move))
            assert key not in seen
            seen.add(key)
        # fewer opening positions than raw move sequences
        raw = 1
        counts = []
        frontier = [board.initial_position()]
        for _ in range(3):
            nxt = []
            for p in frontier:
                for m in board.legal_moves(p):
                    nxt.append(board.apply_move(p, m))
            counts.append(len(nxt))
            frontier = nxt
        assert len(openings) <= counts[-1]


class TestSelfplay:
    def test_no_openings_single_game(self):
        recs = selfplay_generate(
            estimators.heuristic_model(), [()], depth=1, seed=0, wdl_empties=6
        )
        assert len(recs) == 1

    def test_four_games_from_length_one(self):
        recs = selfplay_generate(
            estimators.heuristic_model(), enumerate_openings(1), depth=1, seed=0, wdl_empties=6
        )
        assert len(recs) == 4

    def test_same_seed_is_byte_identical(self):
        openings = enumerate_openings(1)
        a = selfplay_generate(estimators.heuristic_model(), openings, depth=2, seed=9, wdl_empties=8)
        b = selfplay_generate(estimators.heuristic_model(), openings, depth=2, seed=9, wdl_empties=8)
        assert serialize_games(a) == serialize_games(b)

    def test_records_replay_clean(self):
        recs = selfplay_generate(
            estimators.heuristic_model(), enumerate_openings(1), depth=1, seed=2, wdl_empties=6
        )
        assert parse_games(serialize_games(recs)) == recs


def overlapping_games():
    """Three complete games sharing prefixes, giving a small branchy graph."""
    base = random_complete_game(100)
    g2 = random_complete_game(101, prefix=base.moves[:6])
    g3 = random_complete_game(102, prefix=base.moves[:10])
    return [base, g2, g3]


class TestBuildGraph:
    def test_single_game_is_a_chain(self):
        rec = random_complete_game(7)
        graph = build_graph([rec])
        assert len(graph) == len(replay_positions(rec.moves))
        terminals = [n for n in graph.nodes.values() if n.is_terminal]
        assert len(terminals) == 1
        for node in graph.nodes.values():
            assert len(node.successors) == (0 if node.is_terminal else 1)

    def test_shared_prefix_stored_once(self):
        games = overlapping_games()
        graph = build_graph(games)
        separate = sum(len(replay_positions(g.moves)) for g in games)
        assert len(graph) < separate

    def test_transposition_merges(self):
        # Two distinct 4-ply sequences reaching the same position, extended
        # with one common continuation: the meeting point becomes one node
        # with two predecessors.
        seqs = {}
        pair = None
        frontier = [((), board.initial_position())]
        for _ in range(4):
            nxt = []
            for seq, p in frontier:
                for m in sorted(board.legal_moves(p), key=lambda m: m.square):
                    child = board.apply_move(p, m)
                    nxt.append((seq + (m,), child))
            frontier = nxt
        for seq, p in frontier:
            key = (p.black, p.white, int(p.to_move))
            if key in seqs and pair is None:
                pair = (seqs[key], seq)
            seqs.setdefault(key, seq)
        assert pair is not None, "4-ply transpositions must exist"
        a, b = pair

        tail = random_complete_game(103, prefix=a)
        game_a = tail
        game_b = GameRecord(
            moves=b + tail.moves[4:], final_differential=tail.final_differential
        )
        graph = build_graph([game_a, game_b])

        # Locate where the two prefixes reconverge after diverging.
        path_a = [corpus._key(p) for p in replay_positions(a)]
        path_b = [corpus._key(p) for p in replay_positions(b)]
        diverged = [i for i, (x, y) in enumerate(zip(path_a, path_b)) if x != y]
        assert diverged, "prefixes must actually diverge"
        merge_key = path_a[diverged[-1] + 1]
        assert merge_key == path_b[diverged[-1] + 1]

        predecessors = [n for n in graph.nodes.values() if merge_key in n.successors]
        assert len(predecessors) == 2
        # everything after the merge is shared, so only the divergent
        # prefix states add nodes beyond the single-game chain
        assert len(graph) == len(replay_positions(game_a.moves)) + len(diverged)

    def test_order_independent(self):
        games = overlapping_games()
        g1 = propagate_labels(build_graph(games))
        g2 = propagate_labels(build_graph(list(reversed(games))))
        assert g1.nodes.keys() == g2.nodes.keys()
        for key, node in g1.nodes.items():
            other = g2.nodes[key]
            assert node.successors == other.successors
            assert node.label == other.label


class TestPropagateLabels:
    def test_chain_alternates(self):
        rec = random_complete_game(11)
        graph = propagate_labels(build_graph([rec]))
        for node in graph.nodes.values():
            if node.is_terminal:
                continue
            (succ_key,) = node.successors
            succ = graph.nodes[succ_key]
            assert node.label == succ.label.negated

    def test_negamax_rule_win_from_opponent_loss(self):
        games = overlapping_games()
        graph = propagate_labels(build_graph(games))
        for node in graph.nodes.values():
            if node.is_terminal:
                continue
            values = [graph.nodes[s].label.negated for s in node.successors]
            assert node.label == max(values)

    def test_matches_minimax_oracle(self):
        games = overlapping_games()
        graph = propagate_labels(build_graph(games))
        assert len(graph) >= 25
        memo = {}
        for key, node in graph.nodes.items():
            assert node.label == graph_minimax(graph, key, memo)

    def test_idempotent(self):
        graph = propagate_labels(build_graph(overlapping_games()))
        before = {k: n.label for k, n in graph.nodes.items()}
        propagate_labels(graph)
        assert before == {k: n.label for k, n in graph.nodes.items()}

    def test_everything_labeled(self):
        graph = propagate_labels(build_graph(overlapping_games()))
        assert all(n.label is not None for n in graph.nodes.values())

    def test_repeated_game_keeps_oracle_agreement(self):
        games = overlapping_games()
        enlarged = games + [games[1]]
        graph = propagate_labels(build_graph(enlarged))
        memo = {}
        for key, node in graph.nodes.items():
            assert node.label == graph_minimax(graph, key, memo)


class TestExtractExamples:
    def test_one_example_per_interior_node(self):
        graph = propagate_labels(build_graph([random_complete_game(13)]))
        examples = extract_examples(graph)
        interior = sum(1 for n in graph.nodes.values() if not n.is_terminal)
        assert len(examples) == interior

    def test_single_trial_encoding(self):
        graph = propagate_labels(build_graph(overlapping_games()))
        for e in extract_examples(graph):
            assert e.n == 1
            assert e.y in (0.0, 0.5, 1.0)

    def test_encoding_matches_labels(self):
        graph = propagate_labels(build_graph(overlapping_games()))
        examples = extract_examples(graph)
        wins = sum(1 for n in graph.nodes.values() if not n.is_terminal and n.label == Label.WIN)
        assert sum(1 for e in examples if e.y == 1.0) == wins


def make_example(y, n, discs=20):
    return LabeledExample(x=np.array([1.0, 2.0]), y=float(y), n=n, discs=discs)


class TestExpandDraws:
    def test_logistic_draw_encoding(self):
        (got,) = expand_draws([make_example(0.5, 1)], ModelKind.LOGIT)
        assert (got.y, got.n) == (50.0, 100)

    def test_logistic_win_loss_clamped(self):
        win, loss = expand_draws(
            [make_example(1, 1), make_example(0, 1)], ModelKind.LOGIT
        )
        assert (win.y, win.n) == (99.0, 100)
        assert (loss.y, loss.n) == (1.0, 100)

    def test_qda_three_wins_one_draw(self):
        examples = [make_example(1, 1)] * 3 + [make_example(0.5, 1)]
        got = expand_draws(examples, ModelKind.QDA)
        assert len(got) == 8
        assert sum(1 for e in got if e.is_win) == 7
        assert sum(1 for e in got if e.is_loss) == 1

    def test_no_draws_logistic_only_clamps(self):
        got = expand_draws([make_example(1, 1)] * 2, ModelKind.LOGIT)
        assert all((e.y, e.n) == (99.0, 100) for e in got)


class TestBuckets:
    def test_fifteen_buckets(self):
        buckets = bucket_by_phase([], width=4, overlap=0)
        assert len(buckets.buckets) == 15
        assert buckets.buckets[0].lo == 4 and buckets.buckets[0].hi == 7
        assert buckets.buckets[-1].lo == 60 and buckets.buckets[-1].hi == 63

    def test_membership_with_overlap(self):
        e = make_example(1, 1, discs=20)
        buckets = bucket_by_phase([e], width=4, overlap=2)
        holding = [(b.lo, b.hi) for b in buckets.buckets if e in b.examples]
        assert holding == [(16, 19), (20, 23)]
        for b in buckets.buckets:
            if (b.lo, b.hi) in holding:
                assert b.lo - 2 <= 20 <= b.hi + 2

    def test_zero_overlap_partitions(self):
        rng = random.Random(5)
        examples = [make_example(1, 1, discs=rng.randint(4, 63)) for _ in range(200)]
        buckets = bucket_by_phase(examples, width=4, overlap=0)
        assert sum(len(b.examples) for b in buckets.buckets) == len(examples)

    def test_counts_reported(self):
        examples = [make_example(1, 1), make_example(0, 1), make_example(0.5, 1)]
        buckets = bucket_by_phase(examples, width=60, overlap=0)
        b = buckets.buckets[0]
        assert (b.wins, b.draws, b.losses) == (1, 1, 1)

    def test_report_csv_header(self):
        text = corpus.bucket_report_csv(bucket_by_phase([], width=4, overlap=0))
        assert text.splitlines()[0] == "bucket_lo,bucket_hi,examples,wins,draws,losses"
        assert len(text.splitlines()) == 16


class TestExamplesCsv:
    def test_roundtrip(self, tmp_path):
        graph = propagate_labels(build_graph([random_complete_game(17)]))
        examples = extract_examples(graph)
        path = tmp_path / "examples.csv"
        corpus.write_examples_csv(examples, path)
        back = corpus.read_examples_csv(path)
        assert len(back) == len(examples)
        for a, b in zip(examples, back):
            assert (a.discs, a.y, a.n) == (b.discs, b.y, b.n)
            assert np.array_equal(a.x, b.x)

    def test_header_check(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("nope\n")
        with pytest.raises(ParseError):
            corpus.read_examples_csv(path)
