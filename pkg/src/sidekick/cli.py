"""Command-line surface: train, consult, summarize, mine, rank-ward,
normalize, serve.

Usage errors exit 2 (argparse's convention); data and domain errors exit 1
with the message on stderr.  ``--config`` points at an engine config JSON
file and ``--seed`` overrides its sampler seed wherever randomness exists.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Any, Optional, Sequence

from .antisyndrome import itemize_dataset, mine_antisyndromes
from .config import EngineConfig, load_config, with_overrides
from .consult import (
    AnswerProvided,
    Close,
    DecisionEntered,
    FinalNote,
    SessionState,
    ShowMismatchQuestion,
    Silent,
    consult_step,
    new_session,
)
from .dataset import CENTROID, all_marginals, load_dataset, typical_representative
from .normalization import ThresholdSet, band_of, normalize
from .registry import load_records, load_registry_schema
from .rules import load_rules
from .schema import ParameterSchema, PartialObservation, load_schema
from .summary import generate_summary, render_text
from .tree import TreeConfig, model_from_dict, model_to_dict, train_tree
from .ward import (
    Intervention,
    PrognosisRecord,
    TreatmentRecord,
    WardIndices,
    f_components,
    n1,
    n2,
    n3,
    rank_ward,
    severity,
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sidekick",
        description="decision-support engine: training, consults, audits",
    )
    parser.add_argument("--config", help="engine config JSON file")
    parser.add_argument("--seed", type=int, help="sampler seed override")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit a decision model from labeled data")
    p.add_argument("data", help="CSV file: parameter columns + label column")
    p.add_argument("--schema", required=True, help="parameter schema JSON")
    p.add_argument("--out", help="write the model JSON here")
    p.add_argument("--max-depth", type=int, default=12)
    p.add_argument("--min-leaf", type=int, default=1)

    p = sub.add_parser("consult", help="interactive decision-support loop")
    p.add_argument("data", help="training CSV (marginals + prototypes)")
    p.add_argument("--schema", required=True, help="parameter schema JSON")
    p.add_argument("--model", help="pre-trained model JSON (default: train now)")
    p.add_argument("--patient", default="patient-1")

    p = sub.add_parser("summarize", help="render a follow-up summary")
    p.add_argument("record", help="record id inside --records")
    p.add_argument("--registry", required=True, help="registry schema JSON")
    p.add_argument("--records", required=True, help="records JSON file")
    p.add_argument("--rules", help="rule definitions JSON")
    p.add_argument("--layout", help="comma-separated key field ids")

    p = sub.add_parser("mine", help="mine absent symptom combinations")
    p.add_argument("data", help="CSV file: parameter columns + label column")
    p.add_argument("class_label", help="class whose absences to mine")
    p.add_argument("--schema", required=True, help="parameter schema JSON")
    p.add_argument("--max-size", type=int)
    p.add_argument("--ratio", type=float)
    p.add_argument("--min-expected", type=float)
    p.add_argument("--global-marginals", action="store_true", default=None)

    p = sub.add_parser("rank-ward", help="order patients by composite index")
    p.add_argument("ward", help="ward state JSON (snapshots, prognoses, ...)")
    p.add_argument("--schema", required=True, help="parameter schema JSON")

    p = sub.add_parser("normalize", help="map one value onto the unified scale")
    p.add_argument("value", type=float)
    p.add_argument("thresholds", help="a1,a2,a3,a4")

    p = sub.add_parser("serve", help="run the JSON-over-HTTP service")
    p.add_argument("--service-config", help="service config JSON file")

    return parser


def _engine_config(args: argparse.Namespace) -> EngineConfig:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = with_overrides(cfg, sampler_seed=args.seed)
    return cfg


# --------------------------------------------------------------------------
# subcommands


def _cmd_train(args: argparse.Namespace, cfg: EngineConfig) -> int:
    schema = load_schema(args.schema)
    dataset = load_dataset(args.data, schema)
    model = train_tree(
        dataset, TreeConfig(max_depth=args.max_depth, min_leaf=args.min_leaf)
    )
    payload = model_to_dict(model)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
        print(f"model written to {args.out}")
    else:
        json.dump(payload, sys.stdout, indent=2)
        print()
    print(
        f"depth {model.depth()}, decisions: {', '.join(model.decision_set)}",
        file=sys.stderr,
    )
    return 0


def _parse_typed(schema: ParameterSchema, param_id: str, text: str) -> Any:
    spec = schema.spec(param_id)
    if spec.is_quantitative:
        return float(text)
    return text


def _read_observations(schema: ParameterSchema, line: str) -> dict[str, Any]:
    known: dict[str, Any] = {}
    line = line.strip()
    if not line:
        return known
    for chunk in line.split(","):
        if "=" not in chunk:
            raise ValueError(f"expected param=value, got {chunk.strip()!r}")
        key, _, raw = chunk.partition("=")
        known[key.strip()] = _parse_typed(schema, key.strip(), raw.strip())
    return known


def _cmd_consult(args: argparse.Namespace, cfg: EngineConfig) -> int:
    schema = load_schema(args.schema)
    dataset = load_dataset(args.data, schema)
    if args.model:
        with open(args.model, "r", encoding="utf-8") as fh:
            model = model_from_dict(json.load(fh), schema)
    else:
        model = train_tree(dataset)
    marginals = all_marginals(dataset)
    representatives = {
        label: typical_representative(dataset, label, CENTROID)
        for label in dataset.decision_set
    }

    def ask(prompt: str) -> Optional[str]:
        try:
            return input(prompt)
        except EOFError:
            return None

    print(f"decisions: {', '.join(dataset.decision_set)}", file=sys.stderr)
    line = ask("observations (param=value, comma-separated)> ")
    if line is None:
        return 0
    known = PartialObservation(schema, _read_observations(schema, line))
    decision = ask("decision> ")
    if decision is None:
        return 0

    session = new_session(
        "cli", args.patient, model, marginals, representatives, known, cfg
    )
    out = consult_step(session, DecisionEntered(decision.strip()))
    while True:
        if isinstance(out, Silent):
            print("ok")
            break
        if isinstance(out, FinalNote):
            print(out.text)
            break
        if isinstance(out, ShowMismatchQuestion):
            q = out.question
            if q.mismatching_parameter_ids:
                print(f"mismatching: {', '.join(q.mismatching_parameter_ids)}")
            answer = ask(f"{q.prompt} [value]> ")
            if answer is None:
                break
            value = _parse_typed(schema, q.parameter_id, answer.strip())
            out = consult_step(session, AnswerProvided(q.parameter_id, value))
            continue
        raise RuntimeError(f"unexpected output {type(out).__name__}")
    if session.state is not SessionState.CLOSED:
        consult_step(session, Close())
    return 0


def _cmd_summarize(args: argparse.Namespace, cfg: EngineConfig) -> int:
    registry = load_registry_schema(args.registry)
    records = {r.record_id: r for r in load_records(args.records, registry)}
    record = records.get(args.record)
    if record is None:
        raise ValueError(f"record {args.record!r} not present in {args.records}")
    rules = load_rules(args.rules, registry) if args.rules else []
    layout = (
        [f.strip() for f in args.layout.split(",") if f.strip()]
        if args.layout
        else [f.id for f in registry.fields]
    )
    summary = generate_summary(
        record,
        rules,
        layout,
        conventions=cfg.date_formats.get(registry.registry_id),
        canonical_order=cfg.chronology_order,
        required_predecessors=cfg.required_predecessors,
    )
    print(render_text(summary))
    return 0


def _cmd_mine(args: argparse.Namespace, cfg: EngineConfig) -> int:
    schema = load_schema(args.schema)
    dataset = load_dataset(args.data, schema)
    rows, labels = itemize_dataset(dataset)
    report = mine_antisyndromes(
        rows,
        labels,
        args.class_label,
        max_size=args.max_size if args.max_size is not None else cfg.mining_max_size,
        ratio=args.ratio if args.ratio is not None else cfg.mining_ratio,
        min_expected=(
            args.min_expected
            if args.min_expected is not None
            else cfg.mining_min_expected
        ),
        global_marginals=(
            args.global_marginals
            if args.global_marginals is not None
            else cfg.mining_global_marginals
        ),
    )
    if not report.minimal and not report.suspicious:
        print("no antisyndromes found")
        return 0
    for m in report.minimal:
        terms = " & ".join(f"{f}={v}" for f, v in m.items)
        print(f"minimal: {terms} (expected {m.expected:.6g})")
    for c in report.suspicious:
        terms = " & ".join(f"{f}={v}" for f, v in c.items)
        print(
            f"suspicious: {terms} (observed {c.observed}, "
            f"expected {c.expected:.6g}, ratio {c.ratio:.3g})"
        )
    return 0


def _cmd_rank_ward(args: argparse.Namespace, cfg: EngineConfig) -> int:
    schema = load_schema(args.schema)
    with open(args.ward, "r", encoding="utf-8") as fh:
        patients = json.load(fh)
    indices = []
    for entry in patients:
        pid = entry["patient_id"]
        snaps = entry.get("snapshots", [])
        if len(snaps) < 2:
            print(f"{pid}: fewer than two snapshots, skipped", file=sys.stderr)
            continue
        scores = [severity(s["values"], schema, s["t"]) for s in snaps]
        i_prev, i_t = scores[-2], scores[-1]
        prognoses = [
            PrognosisRecord(
                author=p.get("author", ""),
                made_at=p["made_at"],
                horizon=p["horizon"],
                predicted=p["predicted"],
                predicted_syndrome=p.get("predicted_syndrome"),
                explanation=p.get("explanation"),
            )
            for p in entry.get("prognoses", [])
        ]
        f = f_components(
            prognoses,
            schema,
            snaps[-2]["values"],
            snaps[-1]["values"],
            i_prev,
            i_t,
            coordination_flags=entry.get("flags", []),
            direction_tolerance=cfg.prognosis_direction_tolerance,
        )
        treatments = TreatmentRecord(
            pid,
            tuple(
                Intervention(iv["id"], iv["start"], iv.get("end"))
                for iv in entry.get("interventions", [])
            ),
        )
        indices.append(
            WardIndices(
                patient_id=pid,
                t=i_t.timestamp,
                n1=n1(f),
                n2=n2(i_t, i_prev),
                n3=n3(treatments, cfg.intervention_weights, i_t.timestamp),
                f1=f[0],
                f2=f[1],
                f3=f[2],
            )
        )
    for place, entry in enumerate(rank_ward(indices, cfg.composite_weights), 1):
        ix = entry.indices
        print(
            f"{place}. {entry.patient_id}  composite={entry.composite:.4g}  "
            f"n1={ix.n1:g} n2={ix.n2:.4g} n3={ix.n3:g}"
        )
    return 0


def _cmd_normalize(args: argparse.Namespace, cfg: EngineConfig) -> int:
    parts = [p.strip() for p in args.thresholds.split(",")]
    if len(parts) != 4:
        raise ValueError("thresholds must be four comma-separated numbers")
    thresholds = ThresholdSet(*(float(p) for p in parts))
    value = normalize(args.value, thresholds)
    print(f"{value:g} {band_of(value).value}")
    return 0


def _cmd_serve(args: argparse.Namespace, cfg: EngineConfig) -> int:
    from .service import ServiceConfig, load_service_config, serve

    if args.service_config:
        service_cfg = load_service_config(args.service_config)
    else:
        service_cfg = ServiceConfig(engine=cfg)
    serve(service_cfg)
    return 0


_COMMANDS = {
    "train": _cmd_train,
    "consult": _cmd_consult,
    "summarize": _cmd_summarize,
    "mine": _cmd_mine,
    "rank-ward": _cmd_rank_ward,
    "normalize": _cmd_normalize,
    "serve": _cmd_serve,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _engine_config(args)
        return _COMMANDS[args.command](args, cfg)
    except (OSError, ValueError, RuntimeError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
