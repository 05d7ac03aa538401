"""Confidential archival: session closure, case finalization, performance.

Backed by an embedded SQLite store in WAL mode.  Closing a session keeps
only aggregate facts (decision, question count, disagreement marker) and
destroys the Q&A transcript — optionally after a short configured undo
window.  Retrospective explanations are stored with no patient reference
at all: the table has no such column, and free text is screened against
the configured patient-id pattern before insertion.  Performance series
are append-only and fully readable only by their owner; everyone else
gets cohort aggregates.
"""

from __future__ import annotations

import json
import logging
import re
import sqlite3
import threading
import time
from typing import Any, Mapping, Optional, Sequence

from .consult import Close, ConsultSession, SessionState, consult_step

logger = logging.getLogger(__name__)

DECISION = "decision"
PROGNOSIS = "prognosis"


class ArchiveError(RuntimeError):
    """Raised on contract violations: double close, double finalize, etc."""


class AccessDenied(ArchiveError):
    """Raised when a requester may not see the requested data."""


class ScreeningError(ArchiveError):
    """Raised when free text appears to reference a patient."""


_SCHEMA = """
CREATE TABLE IF NOT EXISTS users (
    user_id TEXT PRIMARY KEY,
    role TEXT NOT NULL,
    credential_hash TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS sessions (
    session_id TEXT PRIMARY KEY,
    patient_id TEXT NOT NULL,
    user_id TEXT,
    alpha_holmes TEXT,
    alpha_engine TEXT,
    question_count INTEGER NOT NULL,
    disagreement INTEGER NOT NULL,
    closed_at REAL NOT NULL
);
CREATE TABLE IF NOT EXISTS transcripts (
    session_id TEXT PRIMARY KEY,
    payload TEXT NOT NULL,
    expires_at REAL NOT NULL
);
CREATE TABLE IF NOT EXISTS performance (
    entry_id INTEGER PRIMARY KEY AUTOINCREMENT,
    user_id TEXT NOT NULL,
    case_ref TEXT NOT NULL,
    kind TEXT NOT NULL,
    prediction TEXT NOT NULL,
    outcome TEXT NOT NULL,
    correct INTEGER NOT NULL,
    timestamp REAL NOT NULL
);
CREATE TABLE IF NOT EXISTS cases (
    case_id TEXT PRIMARY KEY,
    patient_id TEXT NOT NULL,
    final_record TEXT NOT NULL,
    finalized_at REAL NOT NULL
);
CREATE TABLE IF NOT EXISTS breakpoints (
    case_id TEXT NOT NULL,
    ts REAL NOT NULL,
    annotation TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS explanations (
    expl_id INTEGER PRIMARY KEY AUTOINCREMENT,
    text TEXT NOT NULL,
    syndrome TEXT NOT NULL,
    band_pattern TEXT NOT NULL
);
"""


class Archive:
    """Single-node transactional store; one lock serializes writers."""

    def __init__(
        self,
        path: str = ":memory:",
        retain_minutes: int = 0,
        patient_id_pattern: str = r"\b(?:PT|MRN)[-:]?\d{4,}\b",
    ):
        self._con = sqlite3.connect(path, check_same_thread=False)
        self._con.row_factory = sqlite3.Row
        self._lock = threading.Lock()
        self._retain_seconds = retain_minutes * 60.0
        self._id_pattern = re.compile(patient_id_pattern)
        with self._lock, self._con:
            self._con.execute("PRAGMA journal_mode=WAL")
            self._con.executescript(_SCHEMA)

    def close(self) -> None:
        self._con.close()

    # --- users ---------------------------------------------------------

    def add_user(self, user_id: str, role: str, credential_hash: str) -> None:
        with self._lock, self._con:
            try:
                self._con.execute(
                    "INSERT INTO users VALUES (?, ?, ?)",
                    (user_id, role, credential_hash),
                )
            except sqlite3.IntegrityError:
                raise ArchiveError(f"user {user_id!r} already exists") from None

    def has_user(self, user_id: str) -> bool:
        row = self._con.execute(
            "SELECT 1 FROM users WHERE user_id = ?", (user_id,)
        ).fetchone()
        return row is not None

    # --- session closure -------------------------------------------------

    def close_session(
        self,
        session: ConsultSession,
        user_id: Optional[str] = None,
        now: Optional[float] = None,
    ) -> dict[str, Any]:
        """Archive the aggregate outcome and destroy the transcript.

        With a positive retain window the transcript survives — readable
        via transcript_of — until it expires; otherwise it is gone the
        moment the session closes.  Closing twice is an error.
        """
        now = time.time() if now is None else now
        if session.state is SessionState.CLOSED:
            raise ArchiveError(f"session {session.session_id!r} is already closed")
        disagreement = session.state is SessionState.EXHAUSTED
        entry = {
            "session_id": session.session_id,
            "patient_id": session.patient_id,
            "user_id": user_id,
            "alpha_holmes": session.alpha_holmes,
            "alpha_engine": session.alpha_watson,
            "question_count": session.questions_asked,
            "disagreement": disagreement,
            "closed_at": now,
        }
        transcript = list(session.transcript)
        with self._lock, self._con:
            try:
                self._con.execute(
                    "INSERT INTO sessions VALUES (?, ?, ?, ?, ?, ?, ?, ?)",
                    (
                        entry["session_id"],
                        entry["patient_id"],
                        user_id,
                        entry["alpha_holmes"],
                        entry["alpha_engine"],
                        entry["question_count"],
                        int(disagreement),
                        now,
                    ),
                )
            except sqlite3.IntegrityError:
                raise ArchiveError(
                    f"session {session.session_id!r} is already closed"
                ) from None
            if self._retain_seconds > 0:
                self._con.execute(
                    "INSERT INTO transcripts VALUES (?, ?, ?)",
                    (
                        session.session_id,
                        json.dumps(transcript),
                        now + self._retain_seconds,
                    ),
                )
        consult_step(session, Close())
        logger.info("session %s archived (questions=%d)", session.session_id,
                    entry["question_count"])
        return entry

    def session_summary(self, session_id: str) -> Optional[dict[str, Any]]:
        row = self._con.execute(
            "SELECT * FROM sessions WHERE session_id = ?", (session_id,)
        ).fetchone()
        return dict(row) if row else None

    def transcript_of(self, session_id: str, now: Optional[float] = None) -> Optional[list]:
        """The retained transcript, or None once destroyed or expired."""
        now = time.time() if now is None else now
        with self._lock, self._con:
            self._con.execute(
                "DELETE FROM transcripts WHERE expires_at <= ?", (now,)
            )
            row = self._con.execute(
                "SELECT payload FROM transcripts WHERE session_id = ?",
                (session_id,),
            ).fetchone()
        return json.loads(row["payload"]) if row else None

    # --- performance ------------------------------------------------------

    def record_outcome(
        self,
        user_id: str,
        case_ref: str,
        prediction: str,
        outcome: str,
        kind: str = DECISION,
        timestamp: Optional[float] = None,
    ) -> dict[str, Any]:
        """Append one prediction/outcome pair; correctness is equality
        under the kind's matching rule (labels for decisions, directions
        for prognoses — both plain equality on their vocabulary)."""
        if kind not in (DECISION, PROGNOSIS):
            raise ArchiveError(f"unknown outcome kind {kind!r}")
        timestamp = time.time() if timestamp is None else timestamp
        correct = prediction == outcome
        with self._lock, self._con:
            self._con.execute(
                "INSERT INTO performance (user_id, case_ref, kind, prediction,"
                " outcome, correct, timestamp) VALUES (?, ?, ?, ?, ?, ?, ?)",
                (user_id, case_ref, kind, prediction, outcome, int(correct), timestamp),
            )
        return {"user_id": user_id, "case_ref": case_ref, "correct": correct}

    def user_performance(
        self,
        requesting_user: str,
        target_user: str,
        window: Optional[tuple[float, float]] = None,
    ) -> dict[str, Any]:
        """Full series for self-queries; cohort aggregates for anyone else."""
        if not self.has_user(requesting_user):
            raise AccessDenied(f"unknown requester {requesting_user!r}")
        clause, args = "", []
        if window is not None:
            clause = " AND timestamp >= ? AND timestamp < ?"
            args = [window[0], window[1]]

        cohort = self._con.execute(
            f"SELECT COUNT(*) AS n, COALESCE(AVG(correct), 0.0) AS acc "
            f"FROM performance WHERE 1=1{clause}",
            args,
        ).fetchone()
        aggregate = {
            "cohort_entries": cohort["n"],
            "cohort_accuracy": cohort["acc"],
        }
        if requesting_user != target_user:
            return {"access": "aggregate", **aggregate}

        rows = self._con.execute(
            f"SELECT case_ref, kind, prediction, outcome, correct, timestamp "
            f"FROM performance WHERE user_id = ?{clause} ORDER BY entry_id",
            [target_user, *args],
        ).fetchall()
        entries = [dict(r) for r in rows]
        accuracy = (
            sum(e["correct"] for e in entries) / len(entries) if entries else 0.0
        )
        return {
            "access": "full",
            "entries": entries,
            "accuracy": accuracy,
            "peer_comparison": accuracy - aggregate["cohort_accuracy"],
            **aggregate,
        }

    # --- case finalization -----------------------------------------------

    def _screen(self, text: str, patient_id: str) -> None:
        if self._id_pattern.search(text):
            raise ScreeningError(
                "explanation text matches the patient-id pattern; "
                "de-identify before archiving"
            )
        if patient_id and patient_id in text:
            raise ScreeningError(
                "explanation text contains the patient identifier; "
                "de-identify before archiving"
            )

    def finalize_case(
        self,
        case_id: str,
        patient_id: str,
        final_record: Mapping[str, Any],
        breakpoints: Sequence[tuple[float, str]] = (),
        explanations: Sequence[Mapping[str, str]] = (),
        now: Optional[float] = None,
    ) -> dict[str, Any]:
        """Create the immutable case archive and the de-identified
        explanation rows (screened; stored with no patient reference)."""
        now = time.time() if now is None else now
        for expl in explanations:
            self._screen(expl["text"], patient_id)
        with self._lock, self._con:
            try:
                self._con.execute(
                    "INSERT INTO cases VALUES (?, ?, ?, ?)",
                    (case_id, patient_id, json.dumps(dict(final_record)), now),
                )
            except sqlite3.IntegrityError:
                raise ArchiveError(f"case {case_id!r} is already finalized") from None
            for ts, annotation in breakpoints:
                self._con.execute(
                    "INSERT INTO breakpoints VALUES (?, ?, ?)",
                    (case_id, ts, annotation),
                )
            for expl in explanations:
                self._con.execute(
                    "INSERT INTO explanations (text, syndrome, band_pattern)"
                    " VALUES (?, ?, ?)",
                    (
                        expl["text"],
                        expl.get("syndrome", ""),
                        expl.get("band_pattern", ""),
                    ),
                )
        return {
            "case_id": case_id,
            "breakpoints": len(breakpoints),
            "explanations": len(explanations),
        }

    def case_archive(self, case_id: str) -> Optional[dict[str, Any]]:
        row = self._con.execute(
            "SELECT * FROM cases WHERE case_id = ?", (case_id,)
        ).fetchone()
        if row is None:
            return None
        points = self._con.execute(
            "SELECT ts, annotation FROM breakpoints WHERE case_id = ? ORDER BY ts",
            (case_id,),
        ).fetchall()
        out = dict(row)
        out["final_record"] = json.loads(out["final_record"])
        out["breakpoints"] = [dict(p) for p in points]
        return out

    def explanations_by_syndrome(self, syndrome: str) -> list[dict[str, Any]]:
        """Context-based retrieval; there is no patient-based lookup —
        the explanations table stores no patient key."""
        rows = self._con.execute(
            "SELECT text, syndrome, band_pattern FROM explanations WHERE syndrome = ?",
            (syndrome,),
        ).fetchall()
        return [dict(r) for r in rows]
