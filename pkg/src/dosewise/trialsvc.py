"""Trial-conduct service: live sessions driven cohort by cohort.

Each session is an event-sourced record of one trial.  Recommendations are
recomputed from state on every read (never stored), so an engine fix can
never leave stale advice in storage; the finalized MTD, once emitted, is a
frozen clinical decision and IS stored.  Session ids are random 128-bit
tokens.
"""

from __future__ import annotations

import secrets
import threading
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware

from dosewise import crm, keyboard
from dosewise.config import ConfigError, parse_design
from dosewise.eventlog import ConflictError, EventStore, IntegrityError, SessionEvent, verify_dense
from dosewise.schedule import CohortSchedule, build_fixed_schedule, build_unequal_schedule
from dosewise.simkit import CrmEngine, DesignConfig, Engine, KeyboardEngine
from dosewise.trial import TrialState

AWAITING = "awaiting-cohort"
COMPLETE = "complete"


class RangeError(ValueError):
    """A DLT count outside 0..cohort size."""


@dataclass(frozen=True)
class Recommendation:
    cohort_number: int  # 1-based ordinal of the cohort this advice is for
    dose: int
    cohort_size: int


@dataclass(frozen=True)
class Session:
    id: str
    design_name: str
    design: DesignConfig
    design_raw: dict
    n_doses: int
    schedule_mode: str
    fixed_cohort: int | None
    schedule: CohortSchedule
    state: TrialState
    status: str
    selected_mtd: int | None
    created_at: str
    updated_at: str
    last_seq: int


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def validate_session_request(raw: Any) -> tuple[str, DesignConfig, int, dict, str, int | None, CohortSchedule]:
    """Parse and validate a session-creation payload: a design section under
    the same rules as the simulation config, plus a schedule section."""
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "expected a JSON object")
    unknown = set(raw) - {"design", "schedule"}
    if unknown:
        raise ConfigError("<root>", f"unknown keys {sorted(unknown)}")
    design_raw = raw.get("design")
    if not isinstance(design_raw, dict):
        raise ConfigError("design", "missing or not an object")
    allowed = {"design", "target", "skeleton", "interval", "prior_variance", "estimator", "doses"}
    unknown = set(design_raw) - allowed
    if unknown:
        raise ConfigError("design", f"unknown keys {sorted(unknown)}")
    doses = design_raw.get("doses")
    design_name, design = parse_design(
        {k: v for k, v in design_raw.items() if k != "doses"}, field_prefix="design."
    )
    if design_name == "crm":
        if doses is not None and doses != design.n_doses:
            raise ConfigError("design.doses", "contradicts the skeleton length")
        n_doses = design.n_doses
    else:
        if doses is None:
            raise ConfigError("design.doses", "required for the keyboard design")
        if isinstance(doses, bool) or not isinstance(doses, int) or doses < 1:
            raise ConfigError("design.doses", f"expected a positive integer, got {doses!r}")
        n_doses = doses
    schedule_raw = raw.get("schedule")
    if not isinstance(schedule_raw, dict):
        raise ConfigError("schedule", "missing or not an object")
    unknown = set(schedule_raw) - {"mode", "n", "cohort"}
    if unknown:
        raise ConfigError("schedule", f"unknown keys {sorted(unknown)}")
    mode = schedule_raw.get("mode")
    if mode not in ("unequal", "fixed"):
        raise ConfigError("schedule.mode", f"expected 'unequal' or 'fixed', got {mode!r}")
    n_total = schedule_raw.get("n")
    if isinstance(n_total, bool) or not isinstance(n_total, int) or n_total < 1:
        raise ConfigError("schedule.n", f"expected a positive integer, got {n_total!r}")
    if mode == "unequal":
        if "cohort" in schedule_raw:
            raise ConfigError("schedule.cohort", "only valid for mode 'fixed'")
        schedule = build_unequal_schedule(n_total)
        fixed_cohort = None
    else:
        fixed_cohort = schedule_raw.get("cohort")
        if isinstance(fixed_cohort, bool) or not isinstance(fixed_cohort, int) or fixed_cohort < 1:
            raise ConfigError("schedule.cohort", f"expected a positive integer, got {fixed_cohort!r}")
        schedule = build_fixed_schedule(n_total, fixed_cohort)
    return design_name, design, n_doses, design_raw, mode, fixed_cohort, schedule


def replay(events: list[SessionEvent]) -> Session:
    """Fold an event log back into a session; any gap or malformed event
    raises an integrity error naming the sequence number."""
    if not events:
        raise IntegrityError("empty event log")
    verify_dense(events)
    first = events[0]
    if first.kind != "created":
        raise IntegrityError(f"seq 1 must be 'created', found {first.kind!r}")
    try:
        design_name, design, n_doses, design_raw, mode, fixed_cohort, schedule = (
            validate_session_request(
                {"design": first.payload["design"], "schedule": first.payload["schedule"]}
            )
        )
    except (KeyError, ConfigError) as exc:
        raise IntegrityError(f"seq 1: invalid created payload: {exc}") from exc
    session = Session(
        id=first.session_id,
        design_name=design_name,
        design=design,
        design_raw=design_raw,
        n_doses=n_doses,
        schedule_mode=mode,
        fixed_cohort=fixed_cohort,
        schedule=schedule,
        state=TrialState.empty(n_doses),
        status=AWAITING,
        selected_mtd=None,
        created_at=first.timestamp,
        updated_at=first.timestamp,
        last_seq=1,
    )
    for event in events[1:]:
        if session.status == COMPLETE and event.kind != "finalized":
            raise IntegrityError(f"seq {event.seq}: event after completion")
        if event.kind == "cohort-recorded":
            payload = event.payload
            try:
                state = session.state.after_cohort(
                    payload["dose"], payload["size"], payload["dlts"]
                )
            except (KeyError, ValueError) as exc:
                raise IntegrityError(f"seq {event.seq}: bad cohort payload: {exc}") from exc
            if state.cohort_index > session.schedule.n_cohorts:
                raise IntegrityError(f"seq {event.seq}: more cohorts than scheduled")
            session = replace(session, state=state, updated_at=event.timestamp, last_seq=event.seq)
        elif event.kind == "finalized":
            if session.selected_mtd is not None:
                raise IntegrityError(f"seq {event.seq}: duplicate finalization")
            mtd = event.payload.get("selected_mtd")
            if not isinstance(mtd, int) or not 1 <= mtd <= session.n_doses:
                raise IntegrityError(f"seq {event.seq}: bad selected_mtd {mtd!r}")
            session = replace(
                session,
                status=COMPLETE,
                selected_mtd=mtd,
                updated_at=event.timestamp,
                last_seq=event.seq,
            )
        else:
            raise IntegrityError(f"seq {event.seq}: unknown event kind {event.kind!r}")
    return session


class SessionManager:
    """Holds live sessions in memory, with the event store as the source of
    truth; every mutation goes through a compare-and-append on the log."""

    def __init__(self, store: EventStore):
        self.store = store
        self._lock = threading.Lock()
        self._sessions: dict[str, Session] = {}
        # keyed by (design, dose count): the keyboard config alone does not
        # pin the dose ladder, and the escalation clamp depends on it
        self._engines: dict[tuple[DesignConfig, int], Engine] = {}
        for sid in store.session_ids():
            session = replay(store.read(sid))
            self._sessions[sid] = session

    def _engine(self, session: Session) -> Engine:
        key = (session.design, session.n_doses)
        engine = self._engines.get(key)
        if engine is None:
            if isinstance(session.design, crm.CrmConfig):
                engine = CrmEngine(session.design)
            else:
                engine = KeyboardEngine(session.design, session.n_doses)
            self._engines[key] = engine
        return engine

    def session_ids(self) -> list[str]:
        with self._lock:
            return sorted(self._sessions)

    def get(self, session_id: str) -> Session:
        with self._lock:
            session = self._sessions.get(session_id)
        if session is None:
            raise KeyError(session_id)
        return session

    def recommendation(self, session: Session) -> Recommendation | None:
        """Advice for the next cohort, recomputed from state on every call.

        The first cohort always goes to the lowest dose; afterwards the
        engine moves at most one level from the current dose.
        """
        if session.status == COMPLETE:
            return None
        k = session.state.cohort_index
        size = session.schedule.sizes[k]
        if k == 0:
            dose = 1
        else:
            dose = self._engine(session).next_dose(session.state)
        return Recommendation(cohort_number=k + 1, dose=dose, cohort_size=size)

    def create_session(self, raw: Any) -> Session:
        design_name, design, n_doses, design_raw, mode, fixed_cohort, schedule = (
            validate_session_request(raw)
        )
        sid = secrets.token_hex(16)
        now = _now()
        schedule_payload: dict[str, Any] = {"mode": mode, "n": schedule.total}
        if fixed_cohort is not None:
            schedule_payload["cohort"] = fixed_cohort
        event = SessionEvent(
            session_id=sid,
            seq=1,
            kind="created",
            payload={"design": design_raw, "schedule": schedule_payload},
            timestamp=now,
        )
        self.store.append(sid, [event], expected_last_seq=0)
        session = Session(
            id=sid,
            design_name=design_name,
            design=design,
            design_raw=design_raw,
            n_doses=n_doses,
            schedule_mode=mode,
            fixed_cohort=fixed_cohort,
            schedule=schedule,
            state=TrialState.empty(n_doses),
            status=AWAITING,
            selected_mtd=None,
            created_at=now,
            updated_at=now,
            last_seq=1,
        )
        with self._lock:
            self._sessions[sid] = session
        return session

    def _next_cohort(self, session: Session, dlt: int) -> tuple[TrialState, int, int, int | None]:
        """(new state, dose, size, selected MTD if this completes the trial)."""
        rec = self.recommendation(session)
        assert rec is not None
        if not isinstance(dlt, int) or isinstance(dlt, bool):
            raise RangeError(f"dlt must be an integer, got {dlt!r}")
        if not 0 <= dlt <= rec.cohort_size:
            raise RangeError(f"dlt count {dlt} outside 0..{rec.cohort_size}")
        state = session.state.after_cohort(rec.dose, rec.cohort_size, dlt)
        selected = None
        if state.cohort_index == session.schedule.n_cohorts:
            selected = self._engine(session).select_mtd(state)
        return state, rec.dose, rec.cohort_size, selected

    def record_cohort(self, session_id: str, dlt: int, expected_seq: int | None = None) -> Session:
        session = self.get(session_id)
        if session.status == COMPLETE:
            raise ConflictError(f"session {session_id} already complete")
        state, dose, size, selected = self._next_cohort(session, dlt)
        base_seq = session.last_seq if expected_seq is None else expected_seq
        now = _now()
        events = [
            SessionEvent(
                session_id=session_id,
                seq=base_seq + 1,
                kind="cohort-recorded",
                payload={"dose": dose, "size": size, "dlts": dlt},
                timestamp=now,
            )
        ]
        if selected is not None:
            events.append(
                SessionEvent(
                    session_id=session_id,
                    seq=base_seq + 2,
                    kind="finalized",
                    payload={"selected_mtd": selected},
                    timestamp=now,
                )
            )
        self.store.append(session_id, events, expected_last_seq=base_seq)
        updated = replace(
            session,
            state=state,
            status=COMPLETE if selected is not None else AWAITING,
            selected_mtd=selected,
            updated_at=now,
            last_seq=events[-1].seq,
        )
        with self._lock:
            self._sessions[session_id] = updated
        return updated

    def whatif(self, session_id: str, dlt: int) -> dict:
        """Preview of what recording ``dlt`` would do; no state change and no
        events written."""
        session = self.get(session_id)
        if session.status == COMPLETE:
            raise ConflictError(f"session {session_id} already complete")
        state, dose, size, selected = self._next_cohort(session, dlt)
        preview: dict[str, Any] = {
            "dlt": dlt,
            "cohort_dose": dose,
            "cohort_size": size,
            "would_complete": selected is not None,
            "selected_mtd": selected,
            "next_dose": None,
        }
        if selected is None:
            hypothetical = replace(session, state=state)
            rec = self.recommendation(hypothetical)
            assert rec is not None
            preview["next_dose"] = rec.dose
        return preview

    def finalize(self, session_id: str) -> int:
        """Selected MTD of a completed session; idempotent once complete."""
        session = self.get(session_id)
        if session.status != COMPLETE or session.selected_mtd is None:
            raise ConflictError(f"session {session_id} still has cohorts to dose")
        return session.selected_mtd


def session_to_dict(manager: SessionManager, session: Session) -> dict:
    rec = manager.recommendation(session)
    return {
        "id": session.id,
        "status": session.status,
        "design": session.design_raw,
        "schedule": {
            "mode": session.schedule_mode,
            "n": session.schedule.total,
            "cohort": session.fixed_cohort,
            "sizes": list(session.schedule.sizes),
        },
        "state": {
            "n": list(session.state.n),
            "y": list(session.state.y),
            "current_dose": session.state.current_dose,
            "cohort_index": session.state.cohort_index,
        },
        "recommendation": None
        if rec is None
        else {
            "cohort_number": rec.cohort_number,
            "dose": rec.dose,
            "cohort_size": rec.cohort_size,
        },
        "selected_mtd": session.selected_mtd,
        "created_at": session.created_at,
        "updated_at": session.updated_at,
        "last_seq": session.last_seq,
    }


def build_app(manager: SessionManager) -> FastAPI:
    app = FastAPI(title="dosewise trial service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    def _get_or_404(session_id: str) -> Session:
        try:
            return manager.get(session_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"no session {session_id}")

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok"}

    @app.post("/sessions", status_code=201)
    def create_session(body: dict) -> dict:
        try:
            session = manager.create_session(body)
        except ConfigError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return session_to_dict(manager, session)

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str) -> dict:
        session = _get_or_404(session_id)
        resource = session_to_dict(manager, session)
        resource["history"] = [
            {"seq": e.seq, "kind": e.kind, "payload": e.payload, "timestamp": e.timestamp}
            for e in manager.store.read(session_id)
        ]
        return resource

    @app.post("/sessions/{session_id}/cohorts")
    def record_cohort(session_id: str, body: dict) -> dict:
        _get_or_404(session_id)
        if "dlt" not in body:
            raise HTTPException(status_code=422, detail="body must contain 'dlt'")
        extra = set(body) - {"dlt", "expected_seq"}
        if extra:
            raise HTTPException(status_code=422, detail=f"unknown body keys {sorted(extra)}")
        try:
            session = manager.record_cohort(
                session_id, body["dlt"], expected_seq=body.get("expected_seq")
            )
        except RangeError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        except ConflictError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        return session_to_dict(manager, session)

    @app.get("/sessions/{session_id}/whatif")
    def whatif(session_id: str, dlt: int) -> dict:
        _get_or_404(session_id)
        try:
            return manager.whatif(session_id, dlt)
        except RangeError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        except ConflictError as exc:
            raise HTTPException(status_code=409, detail=str(exc))

    @app.post("/sessions/{session_id}/finalize")
    def finalize(session_id: str) -> dict:
        _get_or_404(session_id)
        try:
            mtd = manager.finalize(session_id)
        except ConflictError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        return {"selected_mtd": mtd}

    return app


def serve(host: str = "127.0.0.1", port: int = 8411, data_dir: str | Path = "./trial-data") -> None:
    """Run the service with uvicorn; binds to localhost unless told otherwise
    (put a reverse proxy in front for anything beyond a workstation)."""
    import uvicorn

    manager = SessionManager(EventStore(data_dir))
    uvicorn.run(build_app(manager), host=host, port=port, log_level="warning")
