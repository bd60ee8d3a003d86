"""Dataset ingestion, augmentation runs, metric evaluation, and report emission.

Everything here is deterministic: a master seed is mixed with the record
index, perturbation kind, and repetition number to derive per-output seeds,
and all emitted files are sorted, so identical configurations produce
byte-identical outputs.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from .codec import ParseError, parse_dot, parse_linearized, serialize_linearized
from .graphs import (
    Graph,
    RelationSet,
    ValidationReport,
    tag_provenance,
    validate_structure,
)
from .lexicon import EmbeddingTable, Lexicon
from .metrics import (
    MetricReport,
    SizeCapExceeded,
    edge_accuracy,
    graph_bertscore,
    graph_edit_distance,
    semantic_accuracy,
    structural_accuracy,
)
from .oracle import StanceOracle
from .perturb import PerturbationKind, apply_perturbation

FORMAT_EXPLAGRAPHS = "explagraphs"
FORMAT_REFINEMENT = "refinement"
FORMAT_TEMPORAL_DOT = "temporal-dot"
INGEST_FORMATS = (FORMAT_EXPLAGRAPHS, FORMAT_REFINEMENT, FORMAT_TEMPORAL_DOT)

LABEL_POSITIVE = "positive"
LABEL_NEGATIVE = "negative"

KIND_HUSE = "huse"
KIND_HUSE_GEN = "huse-gen"

STANCES = ("support", "counter")

_MASK64 = (1 << 64) - 1
_KIND_CODE = {kind: i for i, kind in enumerate(PerturbationKind)}


class ConfigError(ValueError):
    """Bad run configuration: missing files, unknown kinds, invalid values."""


class DataError(ValueError):
    """Unusable input data, e.g. zero parseable records or count mismatches."""


def mix_seed(*parts: int) -> int:
    """Stable splitmix64-style mixing of integers into a 64-bit seed."""
    x = 0x9E3779B97F4A7C15
    for part in parts:
        x = (x + (part & _MASK64) + 0x9E3779B97F4A7C15) & _MASK64
        z = x
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        x = z ^ (z >> 31)
    return x


def derive_seed(master_seed: int, record_index: int, kind: PerturbationKind, repetition: int) -> int:
    return mix_seed(master_seed, record_index, _KIND_CODE[kind], repetition)


@dataclass(frozen=True)
class DatasetRecord:
    """One task instance: context texts, gold graph, and (for refinement
    data) the ordered chain of graph versions ending in the final one."""

    id: str
    belief: str
    argument: str
    stance: str
    gold_graph: Graph
    refinement_chain: tuple[Graph, ...] = ()


@dataclass(frozen=True)
class AugmentedRecord:
    """A generated graph tied back to its source record."""

    source_id: str
    kind: str
    label: str
    ordinal: int
    graph: Graph

    def as_dict(self) -> dict:
        return {
            "source_id": self.source_id,
            "kind": self.kind,
            "label": self.label,
            "ordinal": self.ordinal,
            "graph": serialize_linearized(self.graph),
        }


@dataclass(frozen=True)
class RefinementPair:
    """Training pair for an external refiner: noisy graph in, gold graph out."""

    source_id: str
    belief: str
    argument: str
    stance: str
    source_graph: Graph
    target_graph: Graph

    def as_dict(self) -> dict:
        return {
            "source_id": self.source_id,
            "belief": self.belief,
            "argument": self.argument,
            "stance": self.stance,
            "source_graph": serialize_linearized(self.source_graph),
            "target_graph": serialize_linearized(self.target_graph),
        }


@dataclass(frozen=True)
class IngestIssue:
    line: int
    message: str


@dataclass
class AttritionReport:
    """Per-kind accounting: attempts = emitted + inapplicable + guarantee_failed."""

    attempts: Counter = field(default_factory=Counter)
    emitted: Counter = field(default_factory=Counter)
    inapplicable: Counter = field(default_factory=Counter)
    guarantee_failed: Counter = field(default_factory=Counter)

    def attrition(self, kind: str) -> int:
        return self.inapplicable[kind] + self.guarantee_failed[kind]

    def as_dict(self) -> dict:
        kinds = sorted(
            set(self.attempts) | set(self.emitted) | set(self.inapplicable) | set(self.guarantee_failed)
        )
        return {
            kind: {
                "attempts": self.attempts[kind],
                "emitted": self.emitted[kind],
                "inapplicable": self.inapplicable[kind],
                "guarantee_failed": self.guarantee_failed[kind],
            }
            for kind in kinds
        }


_DEFAULT_COLUMNS: dict[str, dict[str, int]] = {
    FORMAT_EXPLAGRAPHS: {"belief": 0, "argument": 1, "stance": 2, "graph": 3},
    FORMAT_REFINEMENT: {"belief": 0, "argument": 1, "stance": 2, "graphs_from": 3},
    FORMAT_TEMPORAL_DOT: {"context": 0, "graph": 1},
}


def _parse_graph_cell(cell: str, fmt: str) -> Graph:
    if fmt == FORMAT_TEMPORAL_DOT:
        # DOT bodies are stored on one TSV line with escaped newlines
        return parse_dot(cell.replace("\\n", "\n"))
    return parse_linearized(cell)


def ingest(
    path: str,
    fmt: str,
    column_map: Optional[Mapping[str, int]] = None,
) -> tuple[list[DatasetRecord], list[IngestIssue]]:
    """Parse a TSV dataset file into records.

    Malformed lines are skipped and reported as issues; a
    :class:`DataError` is raised only when zero records parse. Graphs in
    belief/argument formats get provenance tagged immediately.
    """
    if fmt not in INGEST_FORMATS:
        raise ConfigError(f"unknown ingest format {fmt!r}")
    columns = dict(_DEFAULT_COLUMNS[fmt])
    columns.update(column_map or {})

    records: list[DatasetRecord] = []
    issues: list[IngestIssue] = []
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            cells = line.split("\t")
            try:
                records.append(_parse_record(cells, fmt, columns, lineno))
            except (ParseError, DataError, IndexError) as exc:
                issues.append(IngestIssue(lineno, str(exc)))
    if not records:
        raise DataError(f"{path}: no records could be parsed ({len(issues)} bad lines)")
    return records, issues


def _parse_record(
    cells: list[str], fmt: str, columns: Mapping[str, int], lineno: int
) -> DatasetRecord:
    record_id = str(lineno)
    if fmt == FORMAT_TEMPORAL_DOT:
        context = cells[columns["context"]].strip()
        graph = _parse_graph_cell(cells[columns["graph"]].strip(), fmt)
        return DatasetRecord(
            id=record_id,
            belief=context,
            argument="",
            stance="",
            gold_graph=tag_provenance(graph, "", ""),
        )

    belief = cells[columns["belief"]].strip()
    argument = cells[columns["argument"]].strip()
    stance = cells[columns["stance"]].strip().lower()
    if stance not in STANCES:
        raise DataError(f"line {lineno}: unknown stance {stance!r}")

    if fmt == FORMAT_EXPLAGRAPHS:
        graph = _parse_graph_cell(cells[columns["graph"]].strip(), fmt)
        gold = tag_provenance(graph, belief, argument)
        return DatasetRecord(record_id, belief, argument, stance, gold)

    start = columns["graphs_from"]
    chain = [
        tag_provenance(_parse_graph_cell(cell.strip(), fmt), belief, argument)
        for cell in cells[start:]
        if cell.strip()
    ]
    if not chain:
        raise DataError(f"line {lineno}: no graph columns")
    return DatasetRecord(
        record_id, belief, argument, stance, chain[-1], tuple(chain)
    )


def extract_huse(records: Sequence[DatasetRecord]) -> list[AugmentedRecord]:
    """Every non-final graph of each refinement chain, as a negative."""
    out: list[AugmentedRecord] = []
    for record in records:
        for ordinal, graph in enumerate(record.refinement_chain[:-1]):
            out.append(
                AugmentedRecord(record.id, KIND_HUSE, LABEL_NEGATIVE, ordinal, graph)
            )
    return out


def guarantee_satisfied(
    kind: PerturbationKind, before: ValidationReport, after: ValidationReport
) -> bool:
    """Check a perturbation output against its kind's validator signature.

    Stated relative to the input report so that the check also makes sense
    when a source graph already violates a constraint; on structurally
    correct inputs it reduces to the absolute signatures (disconnect gives
    not-connected and acyclic, make-cyclic gives connected and cyclic, the
    combined kind fails both, node-removal fails the provenance count, and
    the positive kinds stay fully valid).
    """
    if kind == PerturbationKind.DISCONNECT:
        return not after.connected and after.acyclic == before.acyclic
    if kind == PerturbationKind.MAKE_CYCLIC:
        return not after.acyclic and after.connected == before.connected
    if kind == PerturbationKind.DISCONNECT_AND_CYCLIC:
        return not after.connected and not after.acyclic
    if kind == PerturbationKind.NODE_REMOVAL:
        return not after.provenance_ok
    if kind == PerturbationKind.POSITIVE:
        return after == before
    if kind == PerturbationKind.RELATION_SWAP:
        return (
            after.connected == before.connected
            and after.acyclic == before.acyclic
            and after.provenance_ok == before.provenance_ok
            and (after.relations_valid or not before.relations_valid)
        )
    # temporal kinds keep (or restore) connected-DAG validity
    return after.connected and after.acyclic and after.relations_valid


@dataclass
class AugmentPlan:
    """What to generate: per-kind multiplicities plus the resources needed."""

    relation_set: RelationSet
    multiplicities: Mapping[PerturbationKind, int]
    seed: int = 42
    lexicon: Optional[Lexicon] = None
    embeddings: Optional[EmbeddingTable] = None

    def __post_init__(self) -> None:
        for kind, count in self.multiplicities.items():
            if count < 0:
                raise ConfigError(f"negative multiplicity for {kind}")
        needs_lexicon = self.multiplicities.get(PerturbationKind.POSITIVE, 0) > 0
        if needs_lexicon and (self.lexicon is None or self.embeddings is None):
            raise ConfigError("positive perturbations need a lexicon and embeddings")


def augment(
    records: Sequence[DatasetRecord], plan: AugmentPlan
) -> tuple[list[AugmentedRecord], AttritionReport]:
    """Run every enabled perturbation kind at its multiplicity over all records.

    Outputs are re-validated against their kind's guarantee before emission;
    failures are counted, never silently emitted. Fully deterministic for a
    fixed plan.
    """
    augmented: list[AugmentedRecord] = []
    attrition = AttritionReport()
    kinds = [k for k in PerturbationKind if plan.multiplicities.get(k, 0) > 0]
    for index, record in enumerate(records):
        before = validate_structure(record.gold_graph, plan.relation_set)
        for kind in kinds:
            relation_set = plan.relation_set
            for repetition in range(plan.multiplicities[kind]):
                attrition.attempts[kind.value] += 1
                seed = derive_seed(plan.seed, index, kind, repetition)
                result = apply_perturbation(
                    record.gold_graph,
                    kind,
                    seed,
                    relation_set,
                    lexicon=plan.lexicon,
                    embeddings=plan.embeddings,
                    belief=record.belief,
                    argument=record.argument,
                )
                if result is None:
                    attrition.inapplicable[kind.value] += 1
                    continue
                after = validate_structure(result, relation_set)
                if not guarantee_satisfied(kind, before, after):
                    attrition.guarantee_failed[kind.value] += 1
                    continue
                label = LABEL_POSITIVE if kind.is_positive else LABEL_NEGATIVE
                augmented.append(
                    AugmentedRecord(record.id, kind.value, label, repetition, result)
                )
                attrition.emitted[kind.value] += 1
    return augmented, attrition


def refinement_pairs(
    records: Sequence[DatasetRecord], augmented: Sequence[AugmentedRecord]
) -> list[RefinementPair]:
    """Pair every augmented graph with its record's gold graph, as training
    data for an external refiner model."""
    by_id = {record.id: record for record in records}
    pairs = []
    for item in augmented:
        record = by_id.get(item.source_id)
        if record is None:
            raise DataError(f"augmented record references unknown id {item.source_id!r}")
        pairs.append(
            RefinementPair(
                record.id,
                record.belief,
                record.argument,
                record.stance,
                item.graph,
                record.gold_graph,
            )
        )
    return pairs


@dataclass(frozen=True)
class EvaluationSummary:
    """A MetricReport plus accounting for pairs the metrics had to skip."""

    report: MetricReport
    count: int
    invalid_predictions: int = 0
    ged_skipped: int = 0

    def as_dict(self) -> dict:
        return {
            "report": self.report.as_dict(),
            "count": self.count,
            "invalid_predictions": self.invalid_predictions,
            "ged_skipped": self.ged_skipped,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EvaluationSummary":
        return cls(
            report=MetricReport.from_dict(data["report"]),
            count=data["count"],
            invalid_predictions=data.get("invalid_predictions", 0),
            ged_skipped=data.get("ged_skipped", 0),
        )


def read_predictions(path: str) -> tuple[list[Graph], int]:
    """One linearized graph per line; unparseable lines become empty graphs
    (they score as maximally wrong) and are counted."""
    graphs: list[Graph] = []
    invalid = 0
    with open(path, encoding="utf-8") as handle:
        for raw in handle:
            line = raw.rstrip("\n")
            try:
                graphs.append(parse_linearized(line))
            except ParseError:
                graphs.append(Graph())
                invalid += 1
    return graphs, invalid


def evaluate(
    predictions: Sequence[Graph],
    records: Sequence[DatasetRecord],
    relation_set: RelationSet,
    sim=None,
    oracle: Optional[StanceOracle] = None,
    ged_size_cap: int = 8,
    invalid_predictions: int = 0,
) -> EvaluationSummary:
    """Score predictions against gold records.

    GED pairs above the exact-solver cap are skipped and counted rather
    than estimated. SeCA and EA are included only when an oracle is given.
    """
    if sim is None:
        from .metrics import token_f1_similarity

        sim = token_f1_similarity
    if len(predictions) != len(records):
        raise DataError(
            f"prediction count {len(predictions)} != gold count {len(records)}"
        )
    if not records:
        raise DataError("nothing to evaluate")

    tagged = [
        tag_provenance(pred, record.belief, record.argument)
        for pred, record in zip(predictions, records)
    ]
    reports = [validate_structure(graph, relation_set) for graph in tagged]
    stca = structural_accuracy(reports)

    g_bs_values = [
        graph_bertscore(pred, record.gold_graph, sim)
        for pred, record in zip(tagged, records)
    ]
    g_bs = sum(g_bs_values) / len(g_bs_values)

    ged_values = []
    ged_skipped = 0
    for pred, record in zip(tagged, records):
        try:
            ged_values.append(
                graph_edit_distance(pred, record.gold_graph, size_cap=ged_size_cap)
            )
        except SizeCapExceeded:
            ged_skipped += 1
    ged = sum(ged_values) / len(ged_values) if ged_values else 0.0

    seca = None
    ea = None
    if oracle is not None:
        items = [
            (record.belief, pred, record.stance, report)
            for pred, record, report in zip(tagged, records, reports)
        ]
        seca = semantic_accuracy(items, oracle)
        ea_values = [
            edge_accuracy(pred, record.belief, record.stance, oracle)
            for pred, record in zip(tagged, records)
        ]
        ea = sum(ea_values) / len(ea_values)

    report = MetricReport(stca=stca, g_bs=g_bs, ged=ged, seca=seca, ea=ea)
    return EvaluationSummary(
        report=report,
        count=len(records),
        invalid_predictions=invalid_predictions,
        ged_skipped=ged_skipped,
    )


FORMAT_JSONL = "jsonl"
FORMAT_TSV = "tsv"
EMIT_FORMATS = (FORMAT_JSONL, FORMAT_TSV)

_AUGMENTED_TSV_COLUMNS = ("source_id", "kind", "label", "ordinal", "graph")
_PAIR_TSV_COLUMNS = (
    "source_id",
    "belief",
    "argument",
    "stance",
    "source_graph",
    "target_graph",
)


def _sorted_augmented(items: Iterable[AugmentedRecord]) -> list[AugmentedRecord]:
    return sorted(items, key=lambda r: (r.source_id, r.kind, r.ordinal))


def emit(items, path: str, fmt: str = FORMAT_JSONL) -> None:
    """Write augmented records, refinement pairs, or an evaluation summary.

    Output is deterministic: records are sorted and JSON keys are ordered.
    Graphs are stored in linearized form.
    """
    if fmt not in EMIT_FORMATS:
        raise ConfigError(f"unknown emit format {fmt!r}")
    if isinstance(items, (EvaluationSummary, MetricReport, AttritionReport)):
        rows = [items.as_dict()]
        columns: tuple[str, ...] = ()
    else:
        items = list(items)
        if items and isinstance(items[0], AugmentedRecord):
            rows = [r.as_dict() for r in _sorted_augmented(items)]
            columns = _AUGMENTED_TSV_COLUMNS
        elif items and isinstance(items[0], RefinementPair):
            rows = [p.as_dict() for p in items]
            columns = _PAIR_TSV_COLUMNS
        else:
            rows = list(items)
            columns = ()
    with open(path, "w", encoding="utf-8") as handle:
        for row in rows:
            if fmt == FORMAT_JSONL:
                handle.write(json.dumps(row, sort_keys=True, ensure_ascii=False) + "\n")
            else:
                if columns:
                    handle.write(
                        "\t".join(str(row[c]) for c in columns) + "\n"
                    )
                else:
                    handle.write(
                        "\t".join(f"{k}={json.dumps(v, sort_keys=True)}" for k, v in sorted(row.items()))
                        + "\n"
                    )


def load_augmented(path: str) -> list[AugmentedRecord]:
    """Read back a JSONL file written by :func:`emit`."""
    out: list[AugmentedRecord] = []
    with open(path, encoding="utf-8") as handle:
        for raw in handle:
            line = raw.strip()
            if not line:
                continue
            data = json.loads(line)
            out.append(
                AugmentedRecord(
                    source_id=data["source_id"],
                    kind=data["kind"],
                    label=data["label"],
                    ordinal=data["ordinal"],
                    graph=parse_linearized(data["graph"]),
                )
            )
    return out


def load_summary(path: str) -> EvaluationSummary:
    with open(path, encoding="utf-8") as handle:
        return EvaluationSummary.from_dict(json.loads(handle.read()))
