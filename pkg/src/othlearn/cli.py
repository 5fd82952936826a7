"""Command-line pipeline: generate -> label -> train -> eval/tournament.

Every run echoes its resolved configuration (seed included) to stderr
so results can be reproduced. Exit codes: 0 success, 1 data or model
errors, 2 usage errors.
"""

from __future__ import annotations

import argparse
import itertools
import os
import sys

import numpy as np

from . import arena, board, corpus, estimators, features, plots, search
from .errors import OthlearnError


def _echo(args: argparse.Namespace) -> None:
    shown = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    pairs = " ".join(f"{k}={v}" for k, v in shown.items())
    print(f"othlearn config: {pairs}", file=sys.stderr)


def _load_model_arg(args) -> object:
    if getattr(args, "models", None):
        kind = estimators.ModelKind(args.kind.upper()) if getattr(args, "kind", None) else None
        return estimators.load_phase_table(args.models, kind=kind)
    if getattr(args, "model", None):
        return estimators.load_model(args.model)
    return estimators.heuristic_model()


def cmd_generate(args) -> int:
    openings = corpus.enumerate_openings(args.length)
    model = _load_model_arg(args)
    records = corpus.selfplay_generate(
        model, openings, depth=args.depth, seed=args.seed, wdl_empties=args.wdl_empties
    )
    with open(args.out, "w", encoding="ascii") as fh:
        fh.write(corpus.serialize_games(records))
    print(f"wrote {len(records)} games to {args.out}")
    return 0


def cmd_label(args) -> int:
    with open(args.games, "r", encoding="ascii") as fh:
        records = corpus.parse_games(fh.read())
    graph = corpus.propagate_labels(corpus.build_graph(records))
    examples = corpus.extract_examples(graph)
    corpus.write_examples_csv(examples, args.out)
    print(
        f"labeled {len(examples)} positions from {len(records)} games "
        f"({len(graph)} graph nodes) -> {args.out}"
    )
    return 0


def _fit_bucket(kind: estimators.ModelKind, training, args):
    if kind == estimators.ModelKind.LOGIT:
        return estimators.fit_logistic(training, tol=args.tol, max_iter=args.max_iter)
    pooled = kind == estimators.ModelKind.FISHER
    return estimators.fit_gaussian(training, pooled=pooled)


def cmd_train(args) -> int:
    examples = corpus.read_examples_csv(args.in_path)
    buckets = corpus.bucket_by_phase(examples, width=args.width, overlap=args.overlap)
    kind = estimators.ModelKind(args.kind.upper())

    models = []
    skipped = []
    for b in buckets.buckets:
        if not b.examples:
            skipped.append((b, "no examples"))
            continue
        training = corpus.expand_draws(list(b.examples), kind)
        try:
            payload = _fit_bucket(kind, training, args)
        except OthlearnError as exc:
            skipped.append((b, str(exc)))
            continue
        models.append(
            estimators.ModelParams(
                kind=kind, payload=payload, bucket_lo=b.lo, bucket_hi=b.hi
            )
        )
    if not models:
        raise OthlearnError("no bucket could be fitted")
    for b, why in skipped:
        print(f"bucket {b.lo}-{b.hi}: skipped ({why})", file=sys.stderr)

    table = estimators.PhaseTable(models=tuple(models))
    paths = estimators.save_phase_table(table, args.out)
    report = os.path.join(args.out, "buckets.csv")
    with open(report, "w", encoding="ascii") as fh:
        fh.write(corpus.bucket_report_csv(buckets))
    plots.save_bucket_plot(buckets, os.path.join(args.out, "buckets.png"))
    print(f"fitted {len(paths)} bucket models into {args.out}")
    return 0


def _read_position_lines(path):
    """Move-prefix transcripts, one per line; returns (lineno, prefix, position)."""
    out = []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, raw in enumerate(fh, start=1):
            text = raw.strip()
            if not text:
                continue
            if len(text) % 2 != 0:
                raise corpus.ParseError(f"line {lineno}: odd-length move text")
            try:
                moves = tuple(
                    board.Move.from_name(text[i : i + 2]) for i in range(0, len(text), 2)
                )
            except ValueError as exc:
                raise corpus.ParseError(f"line {lineno}: {exc}") from exc
            position = corpus.replay_positions(moves, line=lineno)[-1]
            out.append((lineno, moves, position))
    return out


def cmd_eval(args) -> int:
    model = _load_model_arg(args)
    eval_fn = estimators.evaluator(model)
    rows = ["line,discs,probability"]
    for lineno, _, position in _read_position_lines(args.positions):
        prob = eval_fn(position)
        rows.append(f"{lineno},{board.disc_count(position)},{prob:.6f}")
    text = "\n".join(rows) + "\n"
    if args.out:
        with open(args.out, "w", encoding="ascii") as fh:
            fh.write(text)
        print(f"wrote {len(rows) - 1} evaluations to {args.out}")
    else:
        print(text, end="")
    return 0


def cmd_curve(args) -> int:
    if args.feature:
        if args.feature not in features.FEATURE_NAMES or args.feature == "const":
            raise OthlearnError(f"unknown feature {args.feature!r}")
        model = _load_model_arg(args)
        if isinstance(model, estimators.PhaseTable):
            model = model.model_for(args.discs)
        k = features.FEATURE_NAMES.index(args.feature)
        lo, hi = (
            (args.lo, args.hi)
            if args.lo is not None
            else features.FEATURE_BOUNDS[args.feature]
        )
        xs = np.arange(lo, hi + args.step / 2, args.step)
        ys = []
        for v in xs:
            x = np.zeros(features.N_FEATURES)
            x[0] = 1.0
            x[k] = v
            ys.append(estimators.win_probability(estimators.score_features(model, x)))
        header = f"{args.feature},probability"
        xlabel = args.feature
    else:
        lo = args.lo if args.lo is not None else -6.0
        hi = args.hi if args.hi is not None else 6.0
        xs = np.arange(lo, hi + args.step / 2, args.step)
        ys = [estimators.win_probability(s) for s in xs]
        header = "score,probability"
        xlabel = "score"

    lines = [header] + [f"{x:.6g},{y:.6f}" for x, y in zip(xs, ys)]
    with open(args.out, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")
    png = os.path.splitext(args.out)[0] + ".png"
    plots.save_curve_plot(xs, ys, png, xlabel, "winning probability curve")
    print(f"wrote {len(xs)} curve points to {args.out} (figure: {png})")
    return 0


def parse_engine_config(path: str) -> arena.EngineConfig:
    values: dict[str, str] = {}
    with open(path, "r", encoding="ascii") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise OthlearnError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            values[key.strip()] = value.strip()
    try:
        name = values["name"]
    except KeyError:
        raise OthlearnError(f"{path}: missing 'name'") from None
    if "models" in values:
        kind = estimators.ModelKind(values["kind"].upper()) if "kind" in values else None
        model = estimators.load_phase_table(values["models"], kind=kind)
    elif "model" in values:
        model = estimators.load_model(values["model"])
    else:
        model = estimators.heuristic_model()
    limits = search.SearchLimits(
        max_depth=int(values.get("depth", 4)),
        wdl_empties_threshold=int(values.get("wdl_empties", 12)),
        node_budget=int(values["node_budget"]) if "node_budget" in values else None,
    )
    return arena.EngineConfig(name=name, model=model, limits=limits)


def cmd_tournament(args) -> int:
    engines = [parse_engine_config(p) for p in args.engines.split(",")]
    if len(engines) < 2:
        raise OthlearnError("need at least two engines")
    book = [pos for _, _, pos in _read_position_lines(args.openings)]
    balance_name = args.balance_with or engines[0].name
    balance = next((e for e in engines if e.name == balance_name), None)
    if balance is None:
        raise OthlearnError(f"no engine named {balance_name!r}")
    openings = arena.select_openings(book, balance.model, args.pairs)
    pairings = [(a.name, b.name) for a, b in itertools.combinations(engines, 2)]
    report = arena.run_tournament(openings, engines, pairings, level=args.level)
    print(report.render_text(), end="")
    if args.out:
        with open(args.out, "w", encoding="ascii") as fh:
            fh.write(report.to_csv())
        png = os.path.splitext(args.out)[0] + ".png"
        plots.save_tournament_plot(report, png)
        print(f"report written to {args.out} (figure: {png})")
    return 0


def cmd_book(args) -> int:
    prefixes = arena.random_opening_book(
        args.candidates, discs=args.discs, seed=args.seed
    )
    model = _load_model_arg(args)
    positions = [corpus.replay_positions(m)[-1] for m in prefixes]
    by_key = {
        (p.black, p.white, int(p.to_move)): m for p, m in zip(positions, prefixes)
    }
    chosen = arena.select_openings(positions, model, args.count)
    with open(args.out, "w", encoding="ascii") as fh:
        for p in chosen:
            moves = by_key[(p.black, p.white, int(p.to_move))]
            fh.write("".join(str(m) for m in moves) + "\n")
    print(f"wrote {len(chosen)} balanced openings to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="othlearn",
        description="Train and compare Othello evaluation functions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="self-play a corpus of games")
    p.add_argument("--length", type=int, default=4, help="opening length in plies (default 4)")
    p.add_argument("--depth", type=int, default=4, help="search depth per move (default 4)")
    p.add_argument("--wdl-empties", type=int, default=12, dest="wdl_empties",
                   help="solve exactly at this many empties (default 12)")
    p.add_argument("--seed", type=int, default=0, help="tie-break seed (default 0)")
    p.add_argument("--models", help="phase-table directory to play with (default: fixed heuristic)")
    p.add_argument("--out", required=True, help="game file to write")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("label", help="label a game file by result propagation")
    p.add_argument("--games", required=True, help="game file")
    p.add_argument("--out", required=True, help="labeled-example CSV to write")
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("train", help="fit per-bucket models from labeled examples")
    p.add_argument("--kind", required=True, choices=["logit", "fisher", "qda"])
    p.add_argument("--in", dest="in_path", required=True, help="labeled-example CSV")
    p.add_argument("--out", required=True, help="directory for model files")
    p.add_argument("--width", type=int, default=4, help="bucket width in discs (default 4)")
    p.add_argument("--overlap", type=int, default=2, help="smoothing overlap in discs (default 2)")
    p.add_argument("--tol", type=float, default=1e-8, help="IRLS tolerance (default 1e-8)")
    p.add_argument("--max-iter", type=int, default=50, dest="max_iter",
                   help="IRLS iteration cap (default 50)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate positions with a model")
    p.add_argument("--models", help="phase-table directory")
    p.add_argument("--model", help="single model file")
    p.add_argument("--kind", choices=["logit", "fisher", "qda"], help="filter phase table by kind")
    p.add_argument("--positions", required=True, help="move-prefix transcripts, one per line")
    p.add_argument("--out", help="CSV output path (default: stdout)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("curve", help="dump a score/feature -> probability curve")
    p.add_argument("--models", help="phase-table directory (for --feature curves)")
    p.add_argument("--model", help="single model file (for --feature curves)")
    p.add_argument("--kind", choices=["logit", "fisher", "qda"], help="filter phase table by kind")
    p.add_argument("--feature", help="sweep this feature instead of the raw score")
    p.add_argument("--discs", type=int, default=32, help="phase bucket to use (default 32)")
    p.add_argument("--lo", type=float, default=None)
    p.add_argument("--hi", type=float, default=None)
    p.add_argument("--step", type=float, default=0.05)
    p.add_argument("--out", required=True, help="CSV output path (PNG written alongside)")
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("tournament", help="paired-game tournament between engines")
    p.add_argument("--engines", required=True, help="comma-separated engine config files")
    p.add_argument("--openings", required=True, help="opening book file (move prefixes)")
    p.add_argument("--pairs", type=int, default=50, help="openings to play, 2 games each (default 50)")
    p.add_argument("--balance-with", dest="balance_with",
                   help="engine whose model picks balanced openings (default: first)")
    p.add_argument("--level", type=float, default=0.05, help="significance level (default 0.05)")
    p.add_argument("--out", help="CSV report path (PNG written alongside)")
    p.set_defaults(func=cmd_tournament)

    p = sub.add_parser("book", help="build a balanced opening book")
    p.add_argument("--count", type=int, default=100, help="openings to keep (default 100)")
    p.add_argument("--discs", type=int, default=14, help="discs per opening (default 14)")
    p.add_argument("--candidates", type=int, default=1000,
                   help="random candidates to draw from (default 1000)")
    p.add_argument("--seed", type=int, default=0, help="playout seed (default 0)")
    p.add_argument("--models", help="phase-table directory for balance scoring")
    p.add_argument("--model", help="single model file for balance scoring")
    p.add_argument("--kind", choices=["logit", "fisher", "qda"])
    p.add_argument("--out", required=True, help="book file to write")
    p.set_defaults(func=cmd_book)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _echo(args)
    try:
        return args.func(args)
    except (OthlearnError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
