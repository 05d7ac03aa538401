"""JSON-over-HTTP surface binding the engine modules together.

``create_app`` wires one in-memory :class:`ServiceState` — ingested
datasets, trained models, live consult sessions, per-patient observation
histories, and the confidential archive — into a FastAPI application.
Every response body carries the wire schema version.  Consult sessions
are serialized: one lock per session means one event at a time; training
takes a per-model write lock.

Startup is fail-fast: a configured schema, registry, rules, or expert
file that does not exist or parse aborts with the offending path in the
message.
"""

from __future__ import annotations

import itertools
import json
import logging
import threading
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Any, Mapping, Optional

import numpy as np
from fastapi import Depends, FastAPI, Header, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict

from . import attention, ward
from .antisyndrome import MiningError, MiningReport, itemize_dataset, mine_antisyndromes
from .archive import AccessDenied, Archive, ArchiveError, ScreeningError
from .attention import ParameterSeries, ViewEvent
from .config import ConfigError, EngineConfig, config_from_dict
from .consult import (
    AnswerProvided,
    ConsultSession,
    DecisionEntered,
    FinalNote,
    SessionError,
    ShowMismatchQuestion,
    Silent,
    consult_step,
    new_session,
)
from .dataset import (
    CENTROID,
    DatasetError,
    LabeledDataset,
    all_marginals,
    typical_representative,
)
from .observation import EntryRejected, ObservationPlan, validate_entry
from .registry import (
    RegistryError,
    RegistryRecord,
    RegistrySchema,
    load_registry_schema,
    record_from_dict,
    registry_schema_from_dict,
)
from .rules import RuleDef, load_rules, rule_from_dict
from .schema import (
    FeatureVector,
    ParameterSchema,
    PartialObservation,
    SchemaError,
    load_schema,
    schema_from_dict,
    schema_to_dict,
)
from .summary import FollowUpSummary, generate_summary, render_text
from .tree import DecisionTreeModel, TreeConfig, TreeError, model_to_dict, train_tree
from .ward import (
    Intervention,
    PrognosisRecord,
    TreatmentRecord,
    WardError,
    WardIndices,
    f_components,
    n1,
    n2,
    n3,
    rank_ward,
    severity,
)

logger = logging.getLogger(__name__)


# --------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class ServiceConfig:
    """Deployment wrapper around the engine knobs.

    ``auth_tokens`` maps bearer tokens to user ids; the performance
    endpoint requires one.  File paths are resolved and parsed at startup.
    """

    engine: EngineConfig = dc_field(default_factory=EngineConfig)
    schema_path: Optional[str] = None
    registry_path: Optional[str] = None
    rules_path: Optional[str] = None
    host: str = "127.0.0.1"
    port: int = 8000
    auth_tokens: Mapping[str, str] = dc_field(default_factory=dict)
    observation_interval: float = 24.0

    def __post_init__(self) -> None:
        if self.observation_interval <= 0:
            raise ConfigError("observation_interval must be positive")
        if not 0 < self.port < 65536:
            raise ConfigError("port must lie in (0, 65536)")


def load_service_config(path: str | Path) -> ServiceConfig:
    """Parse the service config file, failing fast on bad references."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"service config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"service config {path} does not parse: {exc}") from None
    known = {
        "engine", "schema", "registry", "rules", "host", "port",
        "auth_tokens", "observation_interval",
    }
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown service config fields: {sorted(unknown)}")
    engine = config_from_dict(data.get("engine", {}))
    return ServiceConfig(
        engine=engine,
        schema_path=data.get("schema"),
        registry_path=data.get("registry"),
        rules_path=data.get("rules"),
        host=data.get("host", "127.0.0.1"),
        port=int(data.get("port", 8000)),
        auth_tokens=dict(data.get("auth_tokens", {})),
        observation_interval=float(data.get("observation_interval", 24.0)),
    )


def _load_startup_files(
    config: ServiceConfig,
) -> tuple[Optional[ParameterSchema], Optional[RegistrySchema], tuple[RuleDef, ...]]:
    """Resolve the configured file references or die with the path."""
    param_schema = None
    if config.schema_path is not None:
        if not Path(config.schema_path).exists():
            raise ConfigError(f"schema file not found: {config.schema_path}")
        param_schema = load_schema(config.schema_path)
    registry_schema = None
    if config.registry_path is not None:
        if not Path(config.registry_path).exists():
            raise ConfigError(f"registry file not found: {config.registry_path}")
        registry_schema = load_registry_schema(config.registry_path)
    rules: tuple[RuleDef, ...] = ()
    if config.rules_path is not None:
        if not Path(config.rules_path).exists():
            raise ConfigError(f"rules file not found: {config.rules_path}")
        if registry_schema is None:
            raise ConfigError("rules file configured without a registry schema")
        rules = tuple(load_rules(config.rules_path, registry_schema))
    return param_schema, registry_schema, rules


# --------------------------------------------------------------------------
# shared state


@dataclass
class _ModelEntry:
    model: DecisionTreeModel
    dataset_id: str
    marginals: Mapping[str, Any]
    representatives: Mapping[str, Any]
    lock: threading.Lock = dc_field(default_factory=threading.Lock)


@dataclass
class _RegistrySet:
    schema: RegistrySchema
    records: dict[str, RegistryRecord]
    layout: tuple[str, ...]
    rules: tuple[RuleDef, ...]


@dataclass
class _PatientState:
    plan: ObservationPlan
    quantitative: dict[str, list[tuple[float, float]]] = dc_field(default_factory=dict)
    qualitative: dict[str, Any] = dc_field(default_factory=dict)
    checkpoints: list[ward.SeverityScore] = dc_field(default_factory=list)
    snapshots: list[dict[str, Any]] = dc_field(default_factory=list)
    prognoses: list[PrognosisRecord] = dc_field(default_factory=list)
    interventions: list[Intervention] = dc_field(default_factory=list)
    flags: list[str] = dc_field(default_factory=list)
    views: list[ViewEvent] = dc_field(default_factory=list)
    baseline: dict[str, Any] = dc_field(default_factory=dict)


class _NotFound(KeyError):
    """Internal marker mapped to HTTP 404."""


class _Unauthenticated(PermissionError):
    """Missing credentials; mapped to HTTP 401."""


class ServiceState:
    """Everything one running service instance knows."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        self.engine = config.engine
        schema, registry_schema, rules = _load_startup_files(config)
        self.param_schema: Optional[ParameterSchema] = schema
        self.registry_schema = registry_schema
        self.rules = rules
        self.datasets: dict[str, LabeledDataset] = {}
        self.registry_sets: dict[str, _RegistrySet] = {}
        self.models: dict[str, _ModelEntry] = {}
        self.sessions: dict[str, ConsultSession] = {}
        self.session_locks: dict[str, threading.Lock] = {}
        self.patients: dict[str, _PatientState] = {}
        self.archive = Archive(
            self.engine.archive_path,
            retain_minutes=self.engine.transcript_retain_minutes,
            patient_id_pattern=self.engine.patient_id_pattern,
        )
        self._counter = itertools.count(1)
        self._lock = threading.Lock()
        for user_id in set(config.auth_tokens.values()):
            if not self.archive.has_user(user_id):
                self.archive.add_user(user_id, "clinician", "")

    def next_id(self, prefix: str) -> str:
        return f"{prefix}-{next(self._counter)}"

    def require_schema(self) -> ParameterSchema:
        if self.param_schema is None:
            raise SchemaError(
                "no parameter schema configured; ingest a labeled dataset "
                "or set schema_path"
            )
        return self.param_schema

    def patient(self, patient_id: str, create: bool = False) -> _PatientState:
        with self._lock:
            state = self.patients.get(patient_id)
            if state is None:
                if not create:
                    raise _NotFound(f"unknown patient {patient_id!r}")
                schema = self.require_schema()
                plan = ObservationPlan(
                    patient_id,
                    schema,
                    {pid: self.config.observation_interval for pid in schema.ids},
                )
                state = self.patients[patient_id] = _PatientState(plan=plan)
            return state


# --------------------------------------------------------------------------
# request bodies


class DatasetRequest(BaseModel):
    kind: str = "labeled"
    schema_def: Optional[dict] = None
    rows: Optional[list[dict]] = None
    labels: Optional[list[str]] = None
    registry_schema: Optional[dict] = None
    records: Optional[list[dict]] = None
    layout: Optional[list[str]] = None
    rules: Optional[list[dict]] = None


class TrainRequest(BaseModel):
    dataset_id: str
    max_depth: int = 12
    min_leaf: int = 1
    representative: str = CENTROID
    expert_vectors: Optional[dict[str, dict[str, Any]]] = None


class ConsultRequest(BaseModel):
    model_config = ConfigDict(protected_namespaces=())

    model_id: str
    patient_id: str
    observations: dict[str, Any]
    decision: str
    session_id: Optional[str] = None


class AnswerRequest(BaseModel):
    value: Any = None
    parameter_id: Optional[str] = None


class CloseRequest(BaseModel):
    user_id: Optional[str] = None


class ObservationRequest(BaseModel):
    parameter_id: str
    value: Any = None
    timestamp: float
    flag: Optional[str] = None


class PrognosisRequest(BaseModel):
    author: str
    made_at: float
    horizon: float
    predicted: str
    predicted_syndrome: Optional[str] = None
    explanation: Optional[str] = None


class InterventionRequest(BaseModel):
    intervention_id: str
    start: float
    end: Optional[float] = None


class MineRequest(BaseModel):
    dataset_id: str
    class_label: str
    max_size: Optional[int] = None
    ratio: Optional[float] = None
    min_expected: Optional[float] = None
    global_marginals: Optional[bool] = None


# --------------------------------------------------------------------------
# serialization helpers


def _output_payload(out: Any) -> dict[str, Any]:
    if isinstance(out, Silent):
        return {"kind": "silent"}
    if isinstance(out, ShowMismatchQuestion):
        q = out.question
        return {
            "kind": "question",
            "parameter_id": q.parameter_id,
            "prompt": q.prompt,
            "mismatching_parameter_ids": list(q.mismatching_parameter_ids),
        }
    if isinstance(out, FinalNote):
        return {
            "kind": "final_note",
            "session_id": out.session_id,
            "alpha_holmes": out.alpha_holmes,
            "alpha_engine": out.alpha_engine,
            "mismatching_parameter_ids": list(out.mismatching_parameter_ids),
            "text": out.text,
        }
    raise TypeError(f"unserializable consult output {type(out).__name__}")


def _mining_payload(report: MiningReport) -> dict[str, Any]:
    return {
        "class_label": report.class_label,
        "minimal": [
            {
                "items": [list(item) for item in m.items],
                "expected": m.expected,
            }
            for m in report.minimal
        ],
        "suspicious": [
            {
                "items": [list(item) for item in c.items],
                "expected": c.expected,
                "observed": c.observed,
                "ratio": c.ratio,
            }
            for c in report.suspicious
        ],
    }


def _summary_payload(summary: FollowUpSummary) -> dict[str, Any]:
    return {
        "record_id": summary.record_id,
        "key_fields": [
            {"field_id": k.field_id, "rendered": k.rendered, "emphasis": k.emphasis}
            for k in summary.key_fields
        ],
        "chronology": {
            "entries": [
                {
                    "kind": e.kind,
                    "date": e.date.isoformat(),
                    "attributes": dict(e.attributes),
                    "flags": list(e.flags),
                }
                for e in summary.chronology.entries
            ],
            "excluded": [
                {"kind": e.kind, "date_text": e.date_text, "flag": e.flag}
                for e in summary.chronology.excluded
            ],
        },
        "possible_errors": [
            {
                "rule_id": p.rule_id,
                "message": p.message,
                "likelihood_note": p.likelihood_note,
            }
            for p in summary.possible_errors
        ],
        "rendered": render_text(summary),
    }


# --------------------------------------------------------------------------
# application


def create_app(config: Optional[ServiceConfig] = None) -> FastAPI:
    config = config or ServiceConfig()
    state = ServiceState(config)
    app = FastAPI(title="sidekick", version=state.engine.schema_version)
    app.state.sidekick = state

    def ok(payload: dict[str, Any], status: int = 200) -> JSONResponse:
        return JSONResponse(
            {"schema_version": state.engine.schema_version, **payload},
            status_code=status,
        )

    def fail(status: int, exc: Exception) -> JSONResponse:
        body = {
            "schema_version": state.engine.schema_version,
            "error": type(exc).__name__,
            "detail": str(exc).strip("'\""),
        }
        return JSONResponse(body, status_code=status)

    _STATUS: tuple[tuple[type[Exception], int], ...] = (
        (_NotFound, 404),
        (_Unauthenticated, 401),
        (AccessDenied, 403),
        (ScreeningError, 422),
        (EntryRejected, 422),
        (SessionError, 409),
        (ArchiveError, 409),
        (SchemaError, 400),
        (DatasetError, 400),
        (TreeError, 400),
        (WardError, 400),
        (MiningError, 400),
        (RegistryError, 400),
        (ConfigError, 400),
        (ValueError, 400),
    )

    def _make_handler(status: int):
        async def handler(request: Request, exc: Exception) -> JSONResponse:
            return fail(status, exc)

        return handler

    # Most-specific class wins: the lookup walks the exception's mro.
    for klass, status in _STATUS:
        app.add_exception_handler(klass, _make_handler(status))

    def current_user(authorization: Optional[str] = Header(default=None)) -> str:
        if not authorization or not authorization.startswith("Bearer "):
            raise _Unauthenticated("missing bearer token")
        token = authorization.removeprefix("Bearer ").strip()
        user = config.auth_tokens.get(token)
        if user is None:
            raise AccessDenied("unrecognized token")
        return user

    # --- meta -----------------------------------------------------------

    @app.get("/health")
    def health() -> JSONResponse:
        return ok({"status": "ok", "backend": _backend_name()})

    def _backend_name() -> str:
        from . import _kernels

        return _kernels.backend()

    # --- datasets & models ----------------------------------------------

    @app.post("/datasets")
    def ingest(req: DatasetRequest) -> JSONResponse:
        if req.kind == "labeled":
            if req.schema_def is None or req.rows is None or req.labels is None:
                raise DatasetError(
                    "labeled ingest needs schema_def, rows, and labels"
                )
            schema = schema_from_dict(req.schema_def)
            records = tuple(
                FeatureVector.from_mapping(schema, row) for row in req.rows
            )
            ds = LabeledDataset(schema, records, tuple(req.labels))
            dataset_id = state.next_id("d")
            state.datasets[dataset_id] = ds
            if state.param_schema is None:
                state.param_schema = schema
            return ok(
                {"dataset_id": dataset_id, "kind": "labeled", "size": len(records)},
                status=201,
            )
        if req.kind == "registry":
            if req.registry_schema is None or req.records is None:
                raise DatasetError("registry ingest needs registry_schema and records")
            schema = registry_schema_from_dict(req.registry_schema)
            rules = tuple(
                rule_from_dict(r, schema) for r in (req.rules or [])
            ) or state.rules
            records = {}
            for entry in req.records:
                rec = record_from_dict(entry, schema)
                records[rec.record_id] = rec
            dataset_id = state.next_id("d")
            state.registry_sets[dataset_id] = _RegistrySet(
                schema=schema,
                records=records,
                layout=tuple(req.layout or ()),
                rules=rules,
            )
            return ok(
                {"dataset_id": dataset_id, "kind": "registry", "size": len(records)},
                status=201,
            )
        raise DatasetError(f"unknown dataset kind {req.kind!r}")

    @app.post("/models/train")
    def train(req: TrainRequest) -> JSONResponse:
        ds = state.datasets.get(req.dataset_id)
        if ds is None:
            raise _NotFound(f"unknown dataset {req.dataset_id!r}")
        model_id = state.next_id("m")
        entry = _ModelEntry(
            model=None,  # type: ignore[arg-type]
            dataset_id=req.dataset_id,
            marginals={},
            representatives={},
        )
        state.models[model_id] = entry
        with entry.lock:
            model = train_tree(
                ds, TreeConfig(max_depth=req.max_depth, min_leaf=req.min_leaf)
            )
            reps = {
                label: typical_representative(
                    ds, label, req.representative, expert_vectors=req.expert_vectors
                )
                for label in ds.decision_set
            }
            entry.model = model
            entry.marginals = all_marginals(ds)
            entry.representatives = reps
        return ok(
            {
                "model_id": model_id,
                "dataset_id": req.dataset_id,
                "decision_set": list(model.decision_set),
                "depth": model.depth(),
            },
            status=201,
        )

    @app.get("/models/{model_id}")
    def get_model(model_id: str) -> JSONResponse:
        entry = state.models.get(model_id)
        if entry is None or entry.model is None:
            raise _NotFound(f"unknown model {model_id!r}")
        return ok(
            {
                "model_id": model_id,
                "dataset_id": entry.dataset_id,
                "decision_set": list(entry.model.decision_set),
                "model": model_to_dict(entry.model),
                "parameter_schema": schema_to_dict(entry.model.schema),
            }
        )

    # --- consult ---------------------------------------------------------

    @app.post("/consult")
    def start_consult(req: ConsultRequest) -> JSONResponse:
        entry = state.models.get(req.model_id)
        if entry is None or entry.model is None:
            raise _NotFound(f"unknown model {req.model_id!r}")
        session_id = req.session_id or state.next_id("c")
        if session_id in state.sessions:
            raise SessionError(f"session {session_id!r} already exists")
        known = PartialObservation(entry.model.schema, req.observations)
        session = new_session(
            session_id,
            req.patient_id,
            entry.model,
            entry.marginals,
            entry.representatives,
            known,
            state.engine,
        )
        lock = threading.Lock()
        with lock:
            state.sessions[session_id] = session
            state.session_locks[session_id] = lock
            out = consult_step(session, DecisionEntered(req.decision))
        return ok(
            {
                "session_id": session_id,
                "state": session.state.value,
                "questions_asked": session.questions_asked,
                "output": _output_payload(out),
            },
            status=201,
        )

    def _session(session_id: str) -> tuple[ConsultSession, threading.Lock]:
        session = state.sessions.get(session_id)
        if session is None:
            raise _NotFound(f"unknown session {session_id!r}")
        return session, state.session_locks[session_id]

    @app.get("/consult/{session_id}")
    def consult_view(session_id: str) -> JSONResponse:
        session, lock = _session(session_id)
        with lock:
            return ok(
                {
                    "session_id": session_id,
                    "patient_id": session.patient_id,
                    "state": session.state.value,
                    "questions_asked": session.questions_asked,
                    "pending_parameter": session.pending_param,
                    "transcript": list(session.transcript),
                }
            )

    @app.post("/consult/{session_id}/answer")
    def answer(session_id: str, req: AnswerRequest) -> JSONResponse:
        session, lock = _session(session_id)
        with lock:
            param = req.parameter_id or session.pending_param
            if param is None:
                raise SessionError("no question is pending")
            out = consult_step(session, AnswerProvided(param, req.value))
            return ok(
                {
                    "session_id": session_id,
                    "state": session.state.value,
                    "questions_asked": session.questions_asked,
                    "output": _output_payload(out),
                }
            )

    @app.post("/consult/{session_id}/close")
    def close_consult(session_id: str, req: Optional[CloseRequest] = None) -> JSONResponse:
        session, lock = _session(session_id)
        with lock:
            entry = state.archive.close_session(
                session, user_id=req.user_id if req else None
            )
            del state.sessions[session_id]
            del state.session_locks[session_id]
        return ok(
            {
                "session_id": session_id,
                "alpha_holmes": entry["alpha_holmes"],
                "alpha_engine": entry["alpha_engine"],
                "question_count": entry["question_count"],
                "disagreement": entry["disagreement"],
            }
        )

    # --- patients ---------------------------------------------------------

    @app.post("/patients/{patient_id}/observation")
    def observe(patient_id: str, req: ObservationRequest) -> JSONResponse:
        patient = state.patient(patient_id, create=True)
        schema = state.require_schema()
        result = validate_entry(patient.plan, req.parameter_id, req.value, req.timestamp)
        spec = schema.spec(req.parameter_id)
        if spec.is_quantitative:
            history = patient.quantitative.setdefault(req.parameter_id, [])
            if history and req.timestamp <= history[-1][0]:
                raise SchemaError(
                    f"timestamp {req.timestamp:g} is not after the last "
                    f"recorded sample for {req.parameter_id!r}"
                )
            history.append((req.timestamp, float(req.value)))
        else:
            patient.qualitative[req.parameter_id] = req.value
        patient.baseline.setdefault(req.parameter_id, req.value)
        if req.flag:
            patient.flags.append(req.flag)

        snapshot = {
            pid: series[-1][1]
            for pid, series in patient.quantitative.items()
            if schema.spec(pid).thresholds is not None
        }
        if snapshot:
            patient.checkpoints.append(severity(snapshot, schema, req.timestamp))
            patient.snapshots.append(snapshot)
        return ok({"accepted": result.accepted, "warnings": list(result.warnings)})

    @app.post("/patients/{patient_id}/prognosis")
    def add_prognosis(patient_id: str, req: PrognosisRequest) -> JSONResponse:
        patient = state.patient(patient_id, create=True)
        record = PrognosisRecord(
            author=req.author,
            made_at=req.made_at,
            horizon=req.horizon,
            predicted=req.predicted,
            predicted_syndrome=req.predicted_syndrome,
            explanation=req.explanation,
        )
        patient.prognoses.append(record)
        return ok({"patient_id": patient_id, "prognoses": len(patient.prognoses)}, 201)

    @app.post("/patients/{patient_id}/intervention")
    def add_intervention(patient_id: str, req: InterventionRequest) -> JSONResponse:
        patient = state.patient(patient_id, create=True)
        if req.intervention_id not in state.engine.intervention_weights:
            raise WardError(
                f"no invasiveness weight configured for {req.intervention_id!r}"
            )
        patient.interventions.append(
            Intervention(req.intervention_id, req.start, req.end)
        )
        return ok(
            {"patient_id": patient_id, "interventions": len(patient.interventions)},
            201,
        )

    @app.get("/patients/{patient_id}/attention")
    def attention_view(
        patient_id: str, case: str = "", affected: str = ""
    ) -> JSONResponse:
        patient = state.patient(patient_id)
        schema = state.require_schema()
        series_map: dict[str, ParameterSeries] = {
            pid: ParameterSeries(pid, tuple(samples))
            for pid, samples in patient.quantitative.items()
        }
        for pid, value in patient.qualitative.items():
            series_map[pid] = ParameterSeries(pid, ((0.0, value),))

        trend = _severity_trend(patient, state.engine.trend_window)
        memberships = attention.assign_groups(
            series_map,
            schema,
            affected_organs=[o for o in affected.split(",") if o],
            severity_trend=trend,
            baseline=patient.baseline,
            view_history=patient.views,
            current_case=case,
            config=state.engine,
        )
        normalized_current: dict[str, Optional[float]] = {}
        slopes: dict[str, float] = {}
        for pid, series in series_map.items():
            spec = schema.spec(pid)
            norm = attention.normalized_values(series, spec)
            normalized_current[pid] = float(norm[-1]) if norm is not None else None
            slopes[pid] = attention.trend_slope(series, spec, state.engine.trend_window)
        ranks = attention.rank_attention(memberships, normalized_current, slopes, state.engine)
        display = attention.select_display(ranks, schema, state.engine)
        pairs = attention.detect_unusual_pairs(series_map, schema, state.engine)
        if case:
            shown = display.quantitative + display.qualitative
            patient.views.append(ViewEvent(case, shown))
        bands = {}
        for pid, series in series_map.items():
            band = attention.current_band(series, schema.spec(pid))
            bands[pid] = band.value if band is not None else None
        return ok(
            {
                "patient_id": patient_id,
                "groups": {p: sorted(m.groups) for p, m in memberships.items()},
                "ranks": {p: r.rank for p, r in ranks.items()},
                "display": {
                    "quantitative": list(display.quantitative),
                    "qualitative": list(display.qualitative),
                },
                "unusual_pairs": [
                    {
                        "parameter_id": f.param_id,
                        "other_id": f.other_id,
                        "expected_sign": f.expected_sign,
                        "delta": f.delta,
                        "other_delta": f.other_delta,
                    }
                    for f in pairs
                ],
                "values": {p: s.last_value for p, s in series_map.items()},
                "normalized": normalized_current,
                "bands": bands,
                "severity_trend": trend,
            }
        )

    def _severity_trend(patient: _PatientState, window: int) -> float:
        points = patient.checkpoints[-window:]
        if len(points) < 2:
            return 0.0
        times = np.array([p.timestamp for p in points])
        values = np.array([p.value for p in points])
        if np.ptp(times) == 0:
            return 0.0
        slope, _ = np.polyfit(times, values, 1)
        return float(slope)

    # --- ward -------------------------------------------------------------

    @app.get("/ward/leaderboard")
    def leaderboard() -> JSONResponse:
        schema = state.require_schema()
        indices: list[WardIndices] = []
        skipped: list[str] = []
        for patient_id, patient in state.patients.items():
            if len(patient.checkpoints) < 2:
                skipped.append(patient_id)
                continue
            i_prev, i_t = patient.checkpoints[-2], patient.checkpoints[-1]
            snap_prev, snap_t = patient.snapshots[-2], patient.snapshots[-1]
            f = f_components(
                patient.prognoses,
                schema,
                snap_prev,
                snap_t,
                i_prev,
                i_t,
                coordination_flags=patient.flags,
                direction_tolerance=state.engine.prognosis_direction_tolerance,
            )
            indices.append(
                WardIndices(
                    patient_id=patient_id,
                    t=i_t.timestamp,
                    n1=n1(f),
                    n2=n2(i_t, i_prev),
                    n3=n3(
                        TreatmentRecord(patient_id, tuple(patient.interventions)),
                        state.engine.intervention_weights,
                        i_t.timestamp,
                    ),
                    f1=f[0],
                    f2=f[1],
                    f3=f[2],
                )
            )
        board = rank_ward(indices, state.engine.composite_weights)
        latest = {
            pid: p.checkpoints[-1].value
            for pid, p in state.patients.items()
            if p.checkpoints
        }
        return ok(
            {
                "board": [
                    {
                        "patient_id": e.patient_id,
                        "composite": e.composite,
                        "n1": e.indices.n1,
                        "n2": e.indices.n2,
                        "n3": e.indices.n3,
                        "severity": latest[e.patient_id],
                    }
                    for e in board
                ],
                "skipped": skipped,
            }
        )

    # --- records & mining --------------------------------------------------

    @app.get("/records/{record_id}/summary")
    def record_summary(record_id: str) -> JSONResponse:
        for rset in state.registry_sets.values():
            record = rset.records.get(record_id)
            if record is None:
                continue
            conventions = state.engine.date_formats.get(rset.schema.registry_id)
            summary = generate_summary(
                record,
                rset.rules,
                rset.layout,
                conventions=conventions,
                canonical_order=state.engine.chronology_order,
                required_predecessors=state.engine.required_predecessors,
            )
            return ok(_summary_payload(summary))
        raise _NotFound(f"unknown record {record_id!r}")

    @app.post("/mine/antisyndromes")
    def mine(req: MineRequest) -> JSONResponse:
        ds = state.datasets.get(req.dataset_id)
        if ds is None:
            raise _NotFound(f"unknown dataset {req.dataset_id!r}")
        rows, labels = itemize_dataset(ds)
        report = mine_antisyndromes(
            rows,
            labels,
            req.class_label,
            max_size=req.max_size if req.max_size is not None else state.engine.mining_max_size,
            ratio=req.ratio if req.ratio is not None else state.engine.mining_ratio,
            min_expected=(
                req.min_expected
                if req.min_expected is not None
                else state.engine.mining_min_expected
            ),
            global_marginals=(
                req.global_marginals
                if req.global_marginals is not None
                else state.engine.mining_global_marginals
            ),
        )
        return ok(_mining_payload(report))

    # --- performance --------------------------------------------------------

    @app.get("/users/{user_id}/performance")
    def performance(
        user_id: str,
        start: Optional[float] = None,
        end: Optional[float] = None,
        requester: str = Depends(current_user),
    ) -> JSONResponse:
        window = None
        if start is not None or end is not None:
            window = (start or 0.0, end if end is not None else float("inf"))
        report = state.archive.user_performance(requester, user_id, window)
        return ok({"user_id": user_id, **report})

    return app


def serve(config: Optional[ServiceConfig] = None) -> None:
    """Run the service under uvicorn; exits nonzero on config failure."""
    import uvicorn

    config = config or ServiceConfig()
    app = create_app(config)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
