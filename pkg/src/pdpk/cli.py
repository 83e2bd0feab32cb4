"""Command-line pipeline: generate, stats, split and embed-eval."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .analysis import compute_stats, detect_biases
from .config import GeneratorConfig, config_fields, load_config
from .dataset import (
    PROCESS_FILE,
    dataset_texts,
    generate_dataset,
    kg_file,
    load_dataset,
    write_files_atomically,
)
from .embedding import SCORERS, random_model, train
from .errors import ConfigError, PdpkError, SplitInfeasibleError, TrainingDivergedError, TurtleParseError
from .kg import REPRESENTATIONS, KnowledgeGraph, Literal
from .metrics import MatchesConfig, amri, hits_at_k, matches_at_k, rank
from .rng import substream, substream_seed
from .serialize import parse_turtle, process_csv_text, turtle_text
from .splits import DOWNSTREAM, LINK_PREDICTION, process_subset, split_downstream, split_link_prediction

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_SPLIT, EXIT_TRAINING = 0, 1, 2, 3, 4
EXIT_USAGE = 64
SEED_ENV = "PDPK_SEED"
KIND_ALIASES = {"lp": LINK_PREDICTION, LINK_PREDICTION: LINK_PREDICTION, "downstream": DOWNSTREAM}
STATS_FILE = "stats.json"
EVAL_FILE = "eval.json"
HITS_K = (1, 5, 10)
MATCHES_K = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _epilog() -> str:
    lines = ["config keys (JSON object; missing keys take these defaults):"]
    for key, value in config_fields().items():
        lines.append(f"  {key} = {json.dumps(value)}")
    lines += [
        "",
        f"seed precedence: --seed flag > ${SEED_ENV} > config 'seed'",
        "",
        "exit codes:",
        f"  {EXIT_OK}  success",
        f"  {EXIT_CONFIG}  invalid configuration",
        f"  {EXIT_IO}  missing or unreadable files",
        f"  {EXIT_SPLIT}  split infeasible",
        f"  {EXIT_TRAINING}  training diverged",
        f"  {EXIT_USAGE} usage error",
    ]
    return "\n".join(lines)


def _fraction(text: str) -> float:
    try:
        value = float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from exc
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError("fraction must lie strictly between 0 and 1")
    return value


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from exc
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="pdpk",
        description="Synthetic process data and procedural knowledge graphs.",
        epilog=_epilog(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="generate process data and the four knowledge graphs",
                       epilog=_epilog(), formatter_class=argparse.RawDescriptionHelpFormatter)
    g.add_argument("--config", help="JSON config file (defaults reproduce the benchmark)")
    g.add_argument("--out", required=True, help="output directory")
    g.add_argument("--seed", type=int, help="override the root seed")

    s = sub.add_parser("stats", help="graph statistics and bias report (stats.json)")
    s.add_argument("dataset", help="dataset directory")
    s.add_argument("--out", help="output directory (default: the dataset directory)")
    s.add_argument("--representation", choices=REPRESENTATIONS, action="append")
    s.add_argument("--standard-degree", action="store_true",
                   help="report deg/(|V|-1) instead of the benchmark table's (|V|-1)/deg")

    sp = sub.add_parser("split", help="write train/ and test/ split artifacts")
    sp.add_argument("dataset", help="dataset directory")
    sp.add_argument("--kind", choices=sorted(KIND_ALIASES), default="lp")
    sp.add_argument("--fraction", type=_fraction, help="test share (default: from the config)")
    sp.add_argument("--seed", type=int, help="override the root seed")
    sp.add_argument("--out", help="output directory (default: the dataset directory)")
    sp.add_argument("--representation", choices=REPRESENTATIONS, action="append")

    e = sub.add_parser("embed-eval", help="train embeddings, evaluate link prediction and matches@3")
    e.add_argument("dataset", help="dataset directory holding an LP split")
    e.add_argument("--scorer", choices=(*SCORERS, "all"), default="all")
    e.add_argument("--runs", type=_positive_int, default=30)
    e.add_argument("--representation", choices=REPRESENTATIONS, action="append")
    e.add_argument("--seed", type=int, help="override the root seed")
    e.add_argument("--split", help="directory holding train/ and test/ (default: the dataset directory)")
    e.add_argument("--out", help="output directory (default: the dataset directory)")
    e.add_argument("--epochs", type=_positive_int, help="override the per-scorer epoch default")
    return parser


def resolve_seed(flag: int | None, config_seed: int) -> int:
    if flag is not None:
        return flag
    env = os.environ.get(SEED_ENV)
    if env not in (None, ""):
        try:
            return int(env)
        except ValueError as exc:
            raise ConfigError([(SEED_ENV, f"expected integer, got {env!r}")]) from exc
    return config_seed


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _require_dir(path) -> Path:
    p = Path(path)
    if not p.is_dir():
        raise FileNotFoundError(f"no such directory: {p}")
    return p


def cmd_generate(args) -> int:
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            config = load_config(fh.read())
    else:
        config = GeneratorConfig()
    seed = resolve_seed(args.seed, config.seed)
    if seed != config.seed:
        config = config.replace(seed=seed)
    ds = generate_dataset(config)
    write_files_atomically(args.out, dataset_texts(ds))
    counts = ds.manifest["counts"]
    print(f"wrote {len(ds.manifest['files'])} files to {args.out}: {counts['processes']} processes, "
          f"{counts['iterations']} iterations, {counts['rules']} rules")
    return EXIT_OK


def cmd_stats(args) -> int:
    ds = load_dataset(_require_dir(args.dataset))
    reps = args.representation or [r for r in REPRESENTATIONS if r in ds.kgs]
    if not reps or any(r not in ds.kgs for r in reps):
        raise FileNotFoundError("dataset has no knowledge graph files for the requested representations")
    variant = "standard" if args.standard_degree else "printed"
    report = {"degree_centrality": variant, "representations": {}}
    for rep in reps:
        kg = ds.kgs[rep]
        bias = detect_biases(kg)
        report["representations"][rep] = {
            "stats": compute_stats(kg, variant).to_dict(),
            "bias": {**bias.to_dict(kg), "flagged_total": len(bias.flagged_any())},
        }
        st = report["representations"][rep]["stats"]
        print(f"{rep}: {st['edge_count']} edges, {st['vertex_count']} vertices, "
              f"{st['relation_count']} relations, {len(bias.flagged_any())} biased triples")
    write_files_atomically(args.out or args.dataset, {STATS_FILE: _dump(report)})
    return EXIT_OK


def cmd_split(args) -> int:
    ds = load_dataset(_require_dir(args.dataset))
    kind = KIND_ALIASES[args.kind]
    seed = resolve_seed(args.seed, ds.config.seed)
    texts = {}
    if kind == LINK_PREDICTION:
        fraction = args.fraction or ds.config.lp_test_fraction
        reps = args.representation or [r for r in REPRESENTATIONS if r in ds.kgs]
        report = {"kind": kind, "seed": seed, "fraction": fraction, "representations": {}}
        for rep in reps:
            if rep not in ds.kgs:
                raise FileNotFoundError(f"dataset has no {kg_file(rep)}")
            kg = ds.kgs[rep]
            result = split_link_prediction(kg, fraction, substream(seed, f"lp_split/{rep}"))
            texts[f"train/{kg_file(rep)}"] = turtle_text(kg.subset(result.train))
            texts[f"test/{kg_file(rep)}"] = turtle_text(kg.subset(result.test))
            report["representations"][rep] = result.report
            rest = result.report["source_triples"] - len(result.test)
            print(f"{rep}: {len(result.test)} test / {rest} train triples "
                  f"(achieved fraction {result.report['achieved_fraction']:.3f})")
    else:
        fraction = args.fraction or ds.config.downstream_test_fraction
        result = split_downstream(ds, fraction, substream(seed, "downstream_split"))
        p, q = len(ds.space.parameters), len(ds.space.qualities)
        texts[f"train/{PROCESS_FILE}"] = process_csv_text(process_subset(ds.processes, result.train), p, q)
        texts[f"test/{PROCESS_FILE}"] = process_csv_text(process_subset(ds.processes, result.test), p, q)
        report = {"kind": kind, "seed": seed, "fraction": fraction, **result.report}
        print(f"downstream: {len(result.test)} test / {len(result.train)} train iterations; {result.report['pruning']}")
    texts[f"split_{kind}.json"] = _dump(report)
    write_files_atomically(args.out or args.dataset, texts)
    return EXIT_OK


def _ids_in(kg: KnowledgeGraph, other: KnowledgeGraph) -> list[tuple]:
    """Triples of ``other`` expressed in ``kg``'s id space."""
    ent = {e: i for i, e in enumerate(kg.entities)}
    rel = {r: i for i, r in enumerate(kg.relations)}
    out = []
    for h, r, t in other.iri_triples():
        try:
            out.append((ent[h], rel[r], t if isinstance(t, Literal) else ent[t]))
        except KeyError as exc:
            raise FileNotFoundError(f"split refers to {exc.args[0]} which is not in the dataset graph") from exc
    return out


def _mean_std(values) -> dict:
    a = np.asarray(values, dtype=float)
    return {"mean": float(a.mean()), "std": float(a.std())}


def evaluate_representation(ds, rep: str, train_kg, test_kg, scorer: str, runs: int, seed: int,
                            epochs: int | None = None) -> dict:
    kg = ds.kgs[rep]
    train_ids = _ids_in(kg, train_kg)
    test_ids = [tr for tr in _ids_in(kg, test_kg) if not isinstance(tr[2], Literal)]
    known = {tr for tr in train_ids + test_ids if not isinstance(tr[2], Literal)}
    per_side = {side: {"amri": [], **{f"hits@{k}": [] for k in HITS_K}} for side in ("head", "tail", "both")}
    matches = {"h": [], "h_bar": []}
    baseline = {"h": [], "h_bar": []}
    for run in range(runs):
        rng = np.random.default_rng(substream_seed(seed, f"embeddings/{rep}/{scorer}/{run}"))
        model = train(kg, scorer, epochs=epochs, rng=rng, triples=train_ids)
        ranks = {side: rank(model, test_ids, known, side) for side in ("head", "tail")}
        ranks["both"] = ranks["head"] + ranks["tail"]
        for side, rs in ranks.items():
            per_side[side]["amri"].append(amri(rs))
            for k in HITS_K:
                per_side[side][f"hits@{k}"].append(hits_at_k(rs, k))
        # matches@k is an in-sample measure: fit on the whole graph
        full = train(kg, scorer, epochs=epochs, rng=rng)
        for key, include in (("h", True), ("h_bar", False)):
            matches[key].append(matches_at_k(full, kg, ds.rules, MatchesConfig(MATCHES_K, include)))
            base = random_model(kg, scorer, full.dim, rng)
            baseline[key].append(matches_at_k(base, kg, ds.rules, MatchesConfig(MATCHES_K, include)))
    out = {side: {m: _mean_std(v) for m, v in metrics.items()} for side, metrics in per_side.items()}
    out[f"matches@{MATCHES_K}"] = {k: _mean_std(v) for k, v in matches.items()}
    out[f"matches@{MATCHES_K}_random_baseline"] = {k: _mean_std(v) for k, v in baseline.items()}
    out["runs"] = runs
    out["test_triples"] = len(test_ids)
    return out


def cmd_embed_eval(args) -> int:
    ds = load_dataset(_require_dir(args.dataset))
    split_dir = Path(args.split or args.dataset)
    seed = resolve_seed(args.seed, ds.config.seed)
    scorers = SCORERS if args.scorer == "all" else (args.scorer,)
    reps = args.representation or [r for r in REPRESENTATIONS if (split_dir / "train" / kg_file(r)).exists()]
    if not reps:
        raise FileNotFoundError(f"no link-prediction split under {split_dir}; run 'pdpk split' first")
    report = {"seed": seed, "runs": args.runs, "results": {}}
    for rep in reps:
        graphs = []
        for part in ("train", "test"):
            path = split_dir / part / kg_file(rep)
            with open(path, encoding="utf-8") as fh:
                graphs.append(parse_turtle(fh.read(), rep))
        report["results"][rep] = {}
        for scorer in scorers:
            res = evaluate_representation(ds, rep, graphs[0], graphs[1], scorer, args.runs, seed, args.epochs)
            report["results"][rep][scorer] = res
            both = res["both"]
            print(f"{rep}/{scorer}: AMRI {both['amri']['mean']:.3f} +- {both['amri']['std']:.3f}, "
                  f"hits@10 {both['hits@10']['mean']:.3f}, matches@{MATCHES_K} "
                  f"{res[f'matches@{MATCHES_K}']['h']['mean']:.3f}")
    write_files_atomically(args.out or args.dataset, {EVAL_FILE: _dump(report)})
    return EXIT_OK


COMMANDS = {"generate": cmd_generate, "stats": cmd_stats, "split": cmd_split, "embed-eval": cmd_embed_eval}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SplitInfeasibleError as exc:
        print(f"split error: {exc}", file=sys.stderr)
        return EXIT_SPLIT
    except TrainingDivergedError as exc:
        print(f"training error: {exc}", file=sys.stderr)
        return EXIT_TRAINING
    except (OSError, TurtleParseError, KeyError, json.JSONDecodeError) as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except PdpkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
