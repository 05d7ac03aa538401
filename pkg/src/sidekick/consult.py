"""Consultation sessions: silent agreement, clarifying questions, final notes.

A session watches one decision entry.  The engine keeps quiet when both its
sampled completions and the prototype-imputed vector agree with the user.
Otherwise it asks about the most significant parameter, merges each answer,
and re-evaluates — never asking more than the configured question budget
(two by default).  Persistent storage of outcomes lives in the archive
module; here the transcript is ephemeral and is destroyed on close.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Mapping, Optional, Union

import numpy as np

from .attribution import AttributionVector, local_attribution
from .config import EngineConfig
from .dataset import Marginal, TypicalRepresentative
from .normalization import Band
from .sampling import SamplerConfig, detect_alternative, impute_with_typical
from .schema import FeatureVector, PartialObservation
from .tree import DecisionTreeModel, predict

logger = logging.getLogger(__name__)


class SessionError(RuntimeError):
    """Raised when an event is illegal in the session's current state."""


class SessionState(Enum):
    AWAITING_DECISION = "awaiting_decision"
    AGREEMENT = "agreement"
    QUESTION_PENDING = "question_pending"
    EXHAUSTED = "exhausted"
    CLOSED = "closed"


# --- events -----------------------------------------------------------------

@dataclass(frozen=True)
class DecisionEntered:
    label: str


@dataclass(frozen=True)
class AnswerProvided:
    param_id: str
    value: Any


@dataclass(frozen=True)
class Close:
    pass


Event = Union[DecisionEntered, AnswerProvided, Close]


# --- outputs ----------------------------------------------------------------

@dataclass(frozen=True)
class Silent:
    """No user-visible output; the engine stays out of the way."""


@dataclass(frozen=True)
class QuestionSpec:
    parameter_id: str
    mismatching_parameter_ids: tuple[str, ...]
    prompt: str


@dataclass(frozen=True)
class ShowMismatchQuestion:
    question: QuestionSpec


@dataclass(frozen=True)
class FinalNote:
    """Recorded disagreement after the question budget is spent."""

    session_id: str
    alpha_holmes: str
    alpha_engine: str
    mismatching_parameter_ids: tuple[str, ...]
    text: str


Output = Union[Silent, ShowMismatchQuestion, FinalNote]


@dataclass
class ConsultSession:
    """Mutable per-consult state; one logical writer per session."""

    session_id: str
    patient_id: str
    model: DecisionTreeModel
    marginals: Mapping[str, Marginal]
    representatives: Mapping[str, TypicalRepresentative]
    known: PartialObservation
    sampler: SamplerConfig
    max_questions: int = 2
    question_template: str = "Are you expecting the {name} to remain {direction}?"
    question_template_qualitative: str = "Does {value!r} for {name} match your reading?"
    alpha_holmes: Optional[str] = None
    alpha_watson: Optional[str] = None
    questions_asked: int = 0
    pending_param: Optional[str] = None
    state: SessionState = SessionState.AWAITING_DECISION
    transcript: list[dict[str, Any]] = field(default_factory=list)

    def record(self, kind: str, **detail: Any) -> None:
        if self.state is not SessionState.CLOSED:
            self.transcript.append({"kind": kind, **detail})


def new_session(
    session_id: str,
    patient_id: str,
    model: DecisionTreeModel,
    marginals: Mapping[str, Marginal],
    representatives: Mapping[str, TypicalRepresentative],
    known: PartialObservation,
    config: Optional[EngineConfig] = None,
) -> ConsultSession:
    cfg = config or EngineConfig()
    sampler = SamplerConfig(
        draws=cfg.sampler_draws,
        seed=cfg.sampler_seed,
        exhaustive=cfg.sampler_exhaustive,
        resamples=cfg.attribution_resamples,
    )
    return ConsultSession(
        session_id=session_id,
        patient_id=patient_id,
        model=model,
        marginals=marginals,
        representatives=representatives,
        known=known,
        sampler=sampler,
        max_questions=cfg.max_questions,
        question_template=cfg.question_template,
        question_template_qualitative=cfg.question_template_qualitative,
    )


# --- question selection --------------------------------------------------

def mismatching_parameters(
    known: PartialObservation, prototype: FeatureVector
) -> tuple[str, ...]:
    """Known parameters whose value conflicts with the decision's prototype.

    Quantitative parameters conflict when their normalization bands differ;
    qualitative ones when the values differ.  Parameters without thresholds
    carry no band, so they cannot conflict quantitatively.
    """
    out = []
    for i, spec in enumerate(known.schema):
        if spec.id not in known.known:
            continue
        ours, theirs = known.known[spec.id], prototype.values[i]
        if spec.is_quantitative:
            if spec.thresholds is not None and spec.band(ours) != spec.band(theirs):
                out.append(spec.id)
        elif ours != theirs:
            out.append(spec.id)
    return tuple(out)


def _direction_phrase(spec, value: Any) -> str:
    band = spec.band(value) if spec.is_quantitative else None
    if band in (Band.ABNORMAL_HIGH, Band.STRONG_HIGH):
        return "this high"
    if band in (Band.ABNORMAL_LOW, Band.STRONG_LOW):
        return "this low"
    if band is Band.NORMAL:
        return "in the normal range"
    return "at this level"


def select_question(
    session: ConsultSession,
    attr_user: AttributionVector,
    attr_watson: Optional[AttributionVector],
    imputed_prediction: str,
) -> Optional[QuestionSpec]:
    """Pick the parameter to ask about, or None when nothing warrants one.

    (a) The prototype-imputed vector itself disagrees: ask about the
        highest-scoring parameter of the disagreeing label's attribution,
        across all parameters (known ones included).
    (b) Otherwise, with a remembered alternative: ask about the unknown
        parameter with the largest combined |user| + |alternative|
        attribution.
    (c) Otherwise: no question.  Ties resolve to the lowest parameter index.
    """
    schema = session.known.schema
    rep = session.representatives[session.alpha_holmes]
    if imputed_prediction != session.alpha_holmes:
        assert attr_watson is not None
        j = int(np.argmax(attr_watson.scores))
    elif session.alpha_watson is not None:
        assert attr_watson is not None
        unknown = [i for i, p in enumerate(schema) if p.id not in session.known.known]
        if not unknown:
            return None
        combined = [abs(attr_user.scores[i]) + abs(attr_watson.scores[i]) for i in unknown]
        j = unknown[int(np.argmax(combined))]
    else:
        return None

    spec = schema.parameters[j]
    imputed = impute_with_typical(session.known, rep)
    belief = imputed.values[j]
    if spec.is_quantitative:
        prompt = session.question_template.format(
            name=spec.name, direction=_direction_phrase(spec, belief)
        )
    else:
        prompt = session.question_template_qualitative.format(
            name=spec.name, value=belief
        )
    return QuestionSpec(
        parameter_id=spec.id,
        mismatching_parameter_ids=mismatching_parameters(session.known, rep.vector),
        prompt=prompt,
    )


# --- state machine -----------------------------------------------------------

def consult_step(session: ConsultSession, event: Event) -> Output:
    """Advance the session by one event and return the visible output."""
    if session.state is SessionState.CLOSED:
        raise SessionError("session is closed")

    if isinstance(event, Close):
        session.record("close")
        session.state = SessionState.CLOSED
        session.transcript = []  # the working transcript dies with the session
        session.pending_param = None
        return Silent()

    if isinstance(event, DecisionEntered):
        if session.state is not SessionState.AWAITING_DECISION:
            raise SessionError(f"decision not accepted in state {session.state.value}")
        if event.label not in session.model.decision_set:
            raise SessionError(f"unknown decision label {event.label!r}")
        if event.label not in session.representatives:
            raise SessionError(f"no typical representative for {event.label!r}")
        session.alpha_holmes = event.label
        session.record("decision_entered", label=event.label)
        return _evaluate(session)

    if isinstance(event, AnswerProvided):
        if session.state is not SessionState.QUESTION_PENDING:
            raise SessionError("no question is pending")
        if event.param_id != session.pending_param:
            raise SessionError(
                f"answer names {event.param_id!r}, but the pending question "
                f"is about {session.pending_param!r}"
            )
        session.known = session.known.with_value(event.param_id, event.value)
        session.record("answer_provided", parameter=event.param_id, value=event.value)
        session.pending_param = None
        return _evaluate(session)

    raise SessionError(f"unsupported event {event!r}")


def _evaluate(session: ConsultSession) -> Output:
    """Run the detection/imputation/attribution pipeline once."""
    model = session.model
    alt = detect_alternative(
        model, session.known, session.alpha_holmes, session.marginals, session.sampler
    )
    rep = session.representatives[session.alpha_holmes]
    imputed = impute_with_typical(session.known, rep)
    imputed_label, _ = predict(model, imputed)

    if alt is None and imputed_label == session.alpha_holmes:
        session.alpha_watson = None
        session.state = SessionState.AGREEMENT
        session.record("silent")
        return Silent()

    session.alpha_watson = alt[0] if alt is not None else None
    attr_user = local_attribution(
        model, imputed, session.alpha_holmes, session.marginals, session.sampler
    )
    attr_watson: Optional[AttributionVector] = None
    if imputed_label != session.alpha_holmes:
        attr_watson = local_attribution(
            model, imputed, imputed_label, session.marginals, session.sampler
        )
    elif alt is not None:
        attr_watson = local_attribution(
            model, alt[1], alt[0], session.marginals, session.sampler
        )

    question = select_question(session, attr_user, attr_watson, imputed_label)
    if question is None or session.questions_asked >= session.max_questions:
        return _exhaust(session, imputed_label)

    session.questions_asked += 1
    session.pending_param = question.parameter_id
    session.state = SessionState.QUESTION_PENDING
    session.record(
        "question",
        parameter=question.parameter_id,
        prompt=question.prompt,
        mismatching=list(question.mismatching_parameter_ids),
    )
    return ShowMismatchQuestion(question)


def _exhaust(session: ConsultSession, imputed_label: str) -> FinalNote:
    alpha_engine = session.alpha_watson or imputed_label
    rep = session.representatives[session.alpha_holmes]
    note = FinalNote(
        session_id=session.session_id,
        alpha_holmes=session.alpha_holmes,
        alpha_engine=alpha_engine,
        mismatching_parameter_ids=mismatching_parameters(session.known, rep.vector),
        text=(
            f"Disagreement stands after {session.questions_asked} clarifying "
            f"question(s): user entered {session.alpha_holmes!r}, the model "
            f"still favors {alpha_engine!r}."
        ),
    )
    session.state = SessionState.EXHAUSTED
    session.record("final_note", text=note.text, alpha_engine=alpha_engine)
    logger.info("session %s exhausted: %s", session.session_id, note.text)
    return note
