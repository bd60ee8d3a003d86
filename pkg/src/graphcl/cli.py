"""Command-line interface.

Subcommands: validate, augment, extract-huse, evaluate, filter, loss.
Exit codes: 0 on success, 1 on configuration errors, 2 on data errors.
Options can come from a TOML config file (``--config``); oracle endpoints
can additionally be overridden by the GRAPHCL_STANCE_URL and
GRAPHCL_SCORER_URL environment variables.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field, fields
from typing import Optional

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib  # type: ignore[no-redef]

from . import losses, negfilter, pipeline
from .codec import ParseError
from .graphs import RelationSet, RelationSetError, validate_structure
from .lexicon import FormatError, load_embeddings, load_lexicon
from .metrics import exact_match_similarity, token_f1_similarity
from .oracle import (
    SCORER_URL_ENV,
    STANCE_URL_ENV,
    HttpEdgeScorer,
    HttpStanceOracle,
    OracleUnavailable,
)
from .perturb import PerturbationKind
from .pipeline import ConfigError, DataError

DEFAULT_KINDS = (
    PerturbationKind.DISCONNECT,
    PerturbationKind.MAKE_CYCLIC,
    PerturbationKind.DISCONNECT_AND_CYCLIC,
    PerturbationKind.NODE_REMOVAL,
    PerturbationKind.RELATION_SWAP,
)


@dataclass
class RunConfig:
    """Run options; TOML keys mirror the field names, with per-kind
    multiplicities under a [multiplicity] table."""

    seed: int = 42
    relations: Optional[str] = None
    lexicon: Optional[str] = None
    embeddings: Optional[str] = None
    stance_oracle_url: Optional[str] = None
    edge_scorer_url: Optional[str] = None
    oracle_timeout: float = 10.0
    ged_size_cap: int = 8
    ae_min: float = 0.4
    ip_min: float = 0.5
    multiplicity: dict = field(default_factory=dict)

    @classmethod
    def load(cls, path: str) -> "RunConfig":
        try:
            with open(path, "rb") as handle:
                data = tomllib.load(handle)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"bad config {path}: {exc}") from exc
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"{path}: unknown config keys {sorted(unknown)}")
        return cls(**data)


def _require_file(path: Optional[str], what: str) -> str:
    if not path:
        raise ConfigError(f"missing required {what}")
    if not os.path.exists(path):
        raise ConfigError(f"{what} not found: {path}")
    return path


def _load_config(args: argparse.Namespace) -> RunConfig:
    config = RunConfig.load(args.config) if args.config else RunConfig()
    if getattr(args, "seed", None) is not None:
        config.seed = args.seed
    if getattr(args, "relations", None):
        config.relations = args.relations
    return config


def _load_relations(config: RunConfig) -> RelationSet:
    path = _require_file(config.relations, "relation-set file")
    try:
        return RelationSet.from_file(path)
    except RelationSetError as exc:
        raise ConfigError(str(exc)) from exc


def _stance_oracle(args: argparse.Namespace, config: RunConfig) -> Optional[HttpStanceOracle]:
    url = (
        os.environ.get(STANCE_URL_ENV)
        or getattr(args, "oracle_url", None)
        or config.stance_oracle_url
    )
    return HttpStanceOracle(url, config.oracle_timeout) if url else None


def _edge_scorer(args: argparse.Namespace, config: RunConfig) -> Optional[HttpEdgeScorer]:
    url = (
        os.environ.get(SCORER_URL_ENV)
        or getattr(args, "scorer_url", None)
        or config.edge_scorer_url
    )
    return HttpEdgeScorer(url, config.oracle_timeout) if url else None


def _parse_kinds(spec: Optional[str]) -> list[PerturbationKind]:
    if not spec:
        return list(DEFAULT_KINDS)
    kinds = []
    for name in spec.split(","):
        name = name.strip()
        try:
            kinds.append(PerturbationKind(name))
        except ValueError as exc:
            raise ConfigError(f"unknown perturbation kind {name!r}") from exc
    return kinds


def cmd_validate(args: argparse.Namespace) -> int:
    config = _load_config(args)
    relation_set = _load_relations(config)
    records, issues = pipeline.ingest(
        _require_file(args.input, "input file"), args.format
    )
    reports = [
        (record.id, validate_structure(record.gold_graph, relation_set))
        for record in records
    ]
    stca = sum(1 for _, r in reports if r.structurally_correct) / len(reports)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as handle:
            for record_id, report in reports:
                row = {"id": record_id, **report.as_dict()}
                handle.write(json.dumps(row, sort_keys=True) + "\n")
    print(f"records={len(records)} parse_errors={len(issues)} stca={stca:.4f}")
    return 0


def cmd_augment(args: argparse.Namespace) -> int:
    config = _load_config(args)
    relation_set = _load_relations(config)
    records, issues = pipeline.ingest(
        _require_file(args.input, "input file"), args.format
    )
    kinds = _parse_kinds(args.kinds)

    multiplicities = {}
    for kind in kinds:
        multiplicities[kind] = int(config.multiplicity.get(kind.value, args.multiplicity))
    lexicon = embeddings = None
    if multiplicities.get(PerturbationKind.POSITIVE, 0) > 0:
        lexicon = load_lexicon(_require_file(config.lexicon, "lexicon file"))
        embeddings = load_embeddings(_require_file(config.embeddings, "embedding file"))

    plan = pipeline.AugmentPlan(
        relation_set=relation_set,
        multiplicities=multiplicities,
        seed=config.seed,
        lexicon=lexicon,
        embeddings=embeddings,
    )
    augmented, attrition = pipeline.augment(records, plan)
    pipeline.emit(augmented, args.output, args.emit_format)
    if args.attrition:
        pipeline.emit(attrition, args.attrition, pipeline.FORMAT_JSONL)
    if args.refinement_pairs:
        pairs = pipeline.refinement_pairs(records, augmented)
        pipeline.emit(pairs, args.refinement_pairs, args.emit_format)
    counts = {kind: attrition.emitted[kind] for kind in sorted(attrition.emitted)}
    print(
        f"records={len(records)} parse_errors={len(issues)} "
        f"emitted={sum(counts.values())} per_kind={json.dumps(counts, sort_keys=True)}"
    )
    return 0


def cmd_extract_huse(args: argparse.Namespace) -> int:
    config = _load_config(args)
    records, issues = pipeline.ingest(
        _require_file(args.input, "input file"), pipeline.FORMAT_REFINEMENT
    )
    negatives = pipeline.extract_huse(records)
    pipeline.emit(negatives, args.output, args.emit_format)
    print(f"records={len(records)} parse_errors={len(issues)} huse_negatives={len(negatives)}")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    config = _load_config(args)
    relation_set = _load_relations(config)
    records, _ = pipeline.ingest(_require_file(args.gold, "gold file"), args.format)
    predictions, invalid = pipeline.read_predictions(
        _require_file(args.pred, "prediction file")
    )
    if args.sim == "exact":
        sim = exact_match_similarity
    elif args.sim == "token-f1":
        sim = token_f1_similarity
    else:
        scorer = _edge_scorer(args, config)
        if scorer is None:
            raise ConfigError("--sim http needs an edge-scorer URL")
        sim = scorer
    oracle = _stance_oracle(args, config)
    summary = pipeline.evaluate(
        predictions,
        records,
        relation_set,
        sim=sim,
        oracle=oracle,
        ged_size_cap=config.ged_size_cap,
        invalid_predictions=invalid,
    )
    if args.output:
        with open(args.output, "w", encoding="utf-8") as handle:
            handle.write(json.dumps(summary.as_dict(), sort_keys=True) + "\n")
    report = summary.report
    line = f"count={summary.count} stca={report.stca:.4f} g_bs={report.g_bs:.4f} ged={report.ged:.4f}"
    if report.seca is not None:
        line += f" seca={report.seca:.4f}"
    if report.ea is not None:
        line += f" ea={report.ea:.4f}"
    print(line)
    return 0


def cmd_filter(args: argparse.Namespace) -> int:
    config = _load_config(args)
    relation_set = _load_relations(config)
    records, _ = pipeline.ingest(_require_file(args.gold, "gold file"), args.format)
    candidate_sets = negfilter.load_candidate_sets(
        _require_file(args.candidates, "candidate file")
    )
    thresholds = negfilter.FilterThresholds(
        ae_min=args.ae_min if args.ae_min is not None else config.ae_min,
        ip_min=args.ip_min if args.ip_min is not None else config.ip_min,
    )
    oracle = _stance_oracle(args, config)
    if args.strategy in (negfilter.STRATEGY_IP, negfilter.STRATEGY_BOTH) and oracle is None:
        raise ConfigError(f"strategy {args.strategy!r} needs a stance-oracle URL")

    kept_records: list[pipeline.AugmentedRecord] = []
    rejected = 0
    scored_count = 0
    for record in records:
        candidates = candidate_sets.get(record.id)
        if not candidates:
            continue
        ae = negfilter.acceptable_edge_fraction(candidates, record.gold_graph, relation_set)
        try:
            assembled = negfilter.assemble_negative(
                record.gold_graph, candidates, relation_set
            )
        except negfilter.RejectedError:
            rejected += 1
            continue
        ip = (
            negfilter.score_incorrect_probability(assembled, record.belief, oracle)
            if oracle is not None
            else None
        )
        scored_count += 1
        kept = negfilter.filter_candidates(
            [negfilter.ScoredNegative(assembled, ae, ip)], thresholds, args.strategy
        )
        if kept:
            kept_records.append(
                pipeline.AugmentedRecord(
                    record.id, pipeline.KIND_HUSE_GEN, pipeline.LABEL_NEGATIVE, 0, assembled
                )
            )
    pipeline.emit(kept_records, args.output, args.emit_format)
    print(f"assembled={scored_count} rejected={rejected} kept={len(kept_records)}")
    return 0


def cmd_loss(args: argparse.Namespace) -> int:
    loss_config = losses.LossConfig(
        alpha=args.alpha, beta=args.beta, mm_mode=args.mode, temperature=args.tau
    )
    rows = []
    with open(_require_file(args.input, "loss input file"), encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
                rows.append(_loss_row(record, loss_config, lineno))
            except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
                raise DataError(f"{args.input}:{lineno}: {exc}") from exc
    if not rows:
        raise DataError(f"{args.input}: no loss records")
    with open(args.output, "w", encoding="utf-8") as handle:
        for row in rows:
            handle.write(json.dumps(row, sort_keys=True) + "\n")
    mean_ce = sum(r["cross_entropy"] for r in rows) / len(rows)
    print(f"records={len(rows)} mean_cross_entropy={mean_ce:.4f}")
    return 0


def _loss_row(record: dict, config: losses.LossConfig, lineno: int) -> dict:
    gold_logprobs = record["gold_logprobs"]
    row: dict = {
        "id": record.get("id", str(lineno)),
        "cross_entropy": losses.cross_entropy(gold_logprobs),
    }
    if "neg_logprobs" in record:
        mm = losses.max_margin(
            gold_logprobs, record["neg_logprobs"], beta=config.beta, mode=config.mm_mode
        )
        row["max_margin"] = mm
        row["combined_max_margin"] = losses.combined_loss(
            row["cross_entropy"], mm, config.alpha
        )
    vector_keys = ("gold_vectors", "positive_vectors", "negative_vectors")
    if all(key in record for key in vector_keys):
        gold = losses.pool_representation(record["gold_vectors"])
        positive = losses.pool_representation(record["positive_vectors"])
        negatives = [
            losses.pool_representation(tokens) for tokens in record["negative_vectors"]
        ]
        batch = losses.ContrastiveBatch(
            gold=gold,
            positive=positive,
            negatives=negatives,
            temperature=config.temperature,
        )
        value, _ = losses.info_nce(batch)
        row["info_nce"] = value
        row["combined_info_nce"] = losses.combined_loss(
            row["cross_entropy"], value, config.alpha
        )
    return row


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="graphcl",
        description="Explanation-graph dataset tooling: validation, augmentation, metrics, filtering, losses.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="TOML config file")
        p.add_argument("--relations", help="relation-set file (one relation per line)")
        p.add_argument("--seed", type=int, default=None, help="master random seed")
        p.add_argument(
            "--emit-format",
            choices=list(pipeline.EMIT_FORMATS),
            default=pipeline.FORMAT_JSONL,
        )

    p = sub.add_parser("validate", help="check structural constraints over a dataset")
    add_common(p)
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=list(pipeline.INGEST_FORMATS), default=pipeline.FORMAT_EXPLAGRAPHS)
    p.add_argument("--output", help="per-record JSONL report")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("augment", help="generate positive/negative graphs")
    add_common(p)
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=list(pipeline.INGEST_FORMATS), default=pipeline.FORMAT_EXPLAGRAPHS)
    p.add_argument("--kinds", help="comma-separated perturbation kinds")
    p.add_argument("--multiplicity", type=int, default=1, help="default per-kind multiplicity")
    p.add_argument("--output", required=True)
    p.add_argument("--attrition", help="write per-kind attrition accounting (JSON)")
    p.add_argument("--refinement-pairs", help="also write refiner training pairs")
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("extract-huse", help="extract refinement-chain negatives")
    add_common(p)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_extract_huse)

    p = sub.add_parser("evaluate", help="score predictions against gold graphs")
    add_common(p)
    p.add_argument("--pred", required=True, help="one linearized graph per line")
    p.add_argument("--gold", required=True)
    p.add_argument("--format", choices=list(pipeline.INGEST_FORMATS), default=pipeline.FORMAT_EXPLAGRAPHS)
    p.add_argument("--sim", choices=["exact", "token-f1", "http"], default="token-f1")
    p.add_argument("--oracle-url", help="stance oracle endpoint (enables SeCA and EA)")
    p.add_argument("--scorer-url", help="edge similarity endpoint for --sim http")
    p.add_argument("--output", help="summary JSON path")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("filter", help="assemble and filter human-like negatives")
    add_common(p)
    p.add_argument("--candidates", required=True, help="JSONL candidate edge sets")
    p.add_argument("--gold", required=True)
    p.add_argument("--format", choices=list(pipeline.INGEST_FORMATS), default=pipeline.FORMAT_EXPLAGRAPHS)
    p.add_argument("--strategy", choices=list(negfilter.STRATEGIES), default=negfilter.STRATEGY_AE)
    p.add_argument("--ae-min", type=float, default=None, help="AE keep threshold (default 0.4)")
    p.add_argument("--ip-min", type=float, default=None, help="IP keep threshold (default 0.5)")
    p.add_argument("--oracle-url", help="stance oracle endpoint for IP scores")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("loss", help="compute losses from exported model outputs")
    add_common(p)
    p.add_argument("--input", required=True, help="JSONL with log-probs and vectors")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--mode", choices=list(losses.MM_MODES), default=losses.MM_CONVENTIONAL)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_loss)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except FormatError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except RelationSetError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except ParseError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except OracleUnavailable as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
