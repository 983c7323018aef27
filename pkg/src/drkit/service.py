"""Blind pairwise review service.

Serves anonymized report pairs under short-lived leases, collects five-way
verdicts with sub-dimension scores, and maintains an Elo leaderboard derived
from an append-only record log. The log is the source of truth: in-memory
state is rebuilt from it on startup, so a crash between submit and snapshot
loses nothing that was acknowledged.
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import HTMLResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from drkit.evaluation import (
    INITIAL_RATING,
    SUB_DIMENSIONS,
    Pairing,
    PairwiseRecord,
    Verdict,
    leaderboard,
    schedule_pairings,
)

DEFAULT_LEASE_SECONDS = 30 * 60


@dataclass
class Lease:
    reviewer_id: str
    expires_at: float


@dataclass
class Session:
    session_id: str
    systems: list[str]
    queries: list[dict]  # {"id", "text"}
    reports: dict[str, dict[str, str]]  # system -> query_id -> report text
    mode: str
    seed: int
    pairings: dict[str, Pairing] = field(default_factory=dict)  # pair_id -> Pairing
    pair_order: list[str] = field(default_factory=list)
    completed: set[str] = field(default_factory=set)
    records: list[dict] = field(default_factory=list)  # record dicts incl. pair_id
    leases: dict[str, Lease] = field(default_factory=dict)

    def query_text(self, query_id: str) -> str:
        for q in self.queries:
            if q["id"] == query_id:
                return q["text"]
        raise KeyError(query_id)


class SessionStore:
    """Disk-backed sessions: definition JSON plus an append-only record log."""

    def __init__(self, data_dir: str | Path, lease_seconds: float = DEFAULT_LEASE_SECONDS):
        self.data_dir = Path(data_dir)
        self.lease_seconds = lease_seconds
        self.sessions: dict[str, Session] = {}
        self._lock = threading.Lock()  # single writer for log append + Elo state
        self._last_timestamp = ""
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self._load_all()

    # -- persistence ------------------------------------------------------

    def _session_dir(self, session_id: str) -> Path:
        return self.data_dir / "sessions" / session_id

    def _load_all(self) -> None:
        root = self.data_dir / "sessions"
        if not root.exists():
            return
        for session_dir in sorted(root.iterdir()):
            definition = session_dir / "session.json"
            if not definition.exists():
                continue
            data = json.loads(definition.read_text(encoding="utf-8"))
            session = Session(
                session_id=data["session_id"],
                systems=data["systems"],
                queries=data["queries"],
                reports=data["reports"],
                mode=data["mode"],
                seed=data["seed"],
            )
            for pid, p in data["pairings"].items():
                session.pairings[pid] = Pairing(
                    query_id=p["query_id"],
                    left_system=p["left_system"],
                    right_system=p["right_system"],
                    side_order_seed=p["side_order_seed"],
                )
            session.pair_order = data["pair_order"]
            log = session_dir / "records.jsonl"
            if log.exists():
                for line in log.read_text(encoding="utf-8").splitlines():
                    if not line.strip():
                        continue
                    row = json.loads(line)
                    session.records.append(row)
                    session.completed.add(row["pair_id"])
            self.sessions[session.session_id] = session

    def _persist_definition(self, session: Session) -> None:
        session_dir = self._session_dir(session.session_id)
        session_dir.mkdir(parents=True, exist_ok=True)
        payload = {
            "session_id": session.session_id,
            "systems": session.systems,
            "queries": session.queries,
            "reports": session.reports,
            "mode": session.mode,
            "seed": session.seed,
            "pairings": {
                pid: {
                    "query_id": p.query_id,
                    "left_system": p.left_system,
                    "right_system": p.right_system,
                    "side_order_seed": p.side_order_seed,
                }
                for pid, p in session.pairings.items()
            },
            "pair_order": session.pair_order,
        }
        (session_dir / "session.json").write_text(
            json.dumps(payload, ensure_ascii=False, indent=2), encoding="utf-8"
        )

    def _append_record(self, session: Session, row: dict) -> None:
        log = self._session_dir(session.session_id) / "records.jsonl"
        with open(log, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def _next_timestamp(self) -> str:
        # strictly increasing so replay order is total
        now = datetime.now(timezone.utc).isoformat(timespec="microseconds")
        if now <= self._last_timestamp:
            bumped = datetime.fromisoformat(self._last_timestamp) + timedelta(microseconds=1)
            now = bumped.isoformat(timespec="microseconds")
        self._last_timestamp = now
        return now

    # -- operations -------------------------------------------------------

    def create_session(
        self,
        systems: list[str],
        queries: list[dict],
        reports: dict[str, dict[str, str]],
        mode: str,
        subject: Optional[str] = None,
        seed: int = 0,
    ) -> Session:
        missing = []
        pairings = schedule_pairings(
            systems, [q["id"] for q in queries], mode=mode, subject=subject, seed=seed
        )
        needed = {(p.left_system, p.query_id) for p in pairings} | {
            (p.right_system, p.query_id) for p in pairings
        }
        for system, query_id in sorted(needed):
            if reports.get(system, {}).get(query_id) is None:
                missing.append({"system": system, "query_id": query_id})
        if missing:
            raise MissingReportsError(missing)

        session_id = f"s{int(time.time() * 1000):x}-{len(self.sessions)}"
        session = Session(
            session_id=session_id,
            systems=list(systems),
            queries=list(queries),
            reports=reports,
            mode=mode,
            seed=seed,
        )
        for i, pairing in enumerate(pairings):
            pid = f"pair-{i:04d}"
            session.pairings[pid] = pairing
            session.pair_order.append(pid)
        with self._lock:
            self.sessions[session_id] = session
            self._persist_definition(session)
        return session

    def get(self, session_id: str) -> Session:
        session = self.sessions.get(session_id)
        if session is None:
            raise KeyError(session_id)
        return session

    def next_pair(self, session_id: str, reviewer_id: str) -> Optional[dict]:
        session = self.get(session_id)
        with self._lock:
            now = time.monotonic()
            # a reviewer's own live lease is simply served again
            for pid, lease in session.leases.items():
                if lease.reviewer_id == reviewer_id and lease.expires_at > now and pid not in session.completed:
                    lease.expires_at = now + self.lease_seconds
                    return self._blind_pair(session, pid)
            for pid in session.pair_order:
                if pid in session.completed:
                    continue
                lease = session.leases.get(pid)
                if lease is not None and lease.expires_at > now:
                    continue
                session.leases[pid] = Lease(reviewer_id=reviewer_id, expires_at=now + self.lease_seconds)
                return self._blind_pair(session, pid)
        return None

    def _blind_pair(self, session: Session, pair_id: str) -> dict:
        pairing = session.pairings[pair_id]
        return {
            "pair_id": pair_id,
            "query": session.query_text(pairing.query_id),
            "left_report": session.reports[pairing.left_system][pairing.query_id],
            "right_report": session.reports[pairing.right_system][pairing.query_id],
        }

    def submit_verdict(
        self,
        session_id: str,
        pair_id: str,
        reviewer_id: str,
        verdict: str,
        sub_scores: dict[str, int],
        justification: str,
    ) -> dict:
        session = self.get(session_id)
        if pair_id not in session.pairings:
            raise KeyError(pair_id)
        missing = [d for d in SUB_DIMENSIONS if d not in sub_scores]
        if missing:
            raise ValueError(f"missing sub-dimension scores: {missing}")
        bad = {d: v for d, v in sub_scores.items() if not 1 <= int(v) <= 5}
        if bad:
            raise ValueError(f"sub-dimension scores must be 5-point ordinals (1..5): {bad}")
        if not justification.strip():
            raise ValueError("justification must be nonempty")
        Verdict(verdict)  # raises ValueError on unknown labels

        with self._lock:
            for row in session.records:  # idempotent retry
                if row["pair_id"] == pair_id and row["reviewer_id"] == reviewer_id:
                    return {"status": "accepted", "duplicate": True}
            if pair_id in session.completed:
                raise PermissionError("pairing already completed by another reviewer")
            lease = session.leases.get(pair_id)
            if lease is None or lease.reviewer_id != reviewer_id:
                raise PermissionError("caller does not hold the lease for this pairing")
            if lease.expires_at <= time.monotonic():
                raise PermissionError("lease expired; fetch the pairing again")

            pairing = session.pairings[pair_id]
            record = PairwiseRecord(
                query_id=pairing.query_id,
                left_system=pairing.left_system,
                right_system=pairing.right_system,
                verdict=Verdict(verdict),
                sub_scores=sub_scores,
                justification=justification,
                reviewer_id=reviewer_id,
                side_order_seed=pairing.side_order_seed,
                timestamp=self._next_timestamp(),
            )
            row = {"pair_id": pair_id, **record.to_dict()}
            self._append_record(session, row)
            session.records.append(row)
            session.completed.add(pair_id)
            session.leases.pop(pair_id, None)
        return {"status": "accepted", "duplicate": False}

    def snapshot(self, session_id: str) -> dict:
        session = self.get(session_id)
        with self._lock:
            records = [PairwiseRecord.from_dict(r) for r in session.records]
            rows = leaderboard(records, systems=session.systems)
            return {
                "ratings": [
                    {
                        "system": r.system,
                        "rating": r.rating,
                        "wins": r.wins,
                        "ties": r.ties,
                        "losses": r.losses,
                    }
                    for r in rows
                ],
                "progress": {
                    "completed": len(session.completed),
                    "queued": len(session.pair_order),
                },
            }

    def export(self, session_id: str) -> str:
        session = self.get(session_id)
        with self._lock:
            return "\n".join(json.dumps(r, ensure_ascii=False) for r in session.records)


class MissingReportsError(Exception):
    def __init__(self, missing: list[dict]):
        self.missing = missing
        super().__init__(f"missing reports: {missing}")


class CreateSessionBody(BaseModel):
    systems: list[str]
    queries: list[dict]
    reports: dict[str, dict[str, str]]
    mode: str = "round_robin"
    subject: Optional[str] = None
    seed: int = 0


class VerdictBody(BaseModel):
    pair_id: str
    reviewer_id: str
    verdict: str
    sub_scores: dict[str, int] = Field(default_factory=dict)
    justification: str = ""


def create_app(
    data_dir: str | Path,
    lease_seconds: float = DEFAULT_LEASE_SECONDS,
    reviewer_tokens: Optional[dict[str, str]] = None,
    static_dir: Optional[str | Path] = None,
) -> FastAPI:
    """App factory. reviewer_tokens maps bearer token -> reviewer id; when
    omitted, the reviewer identity is taken from the request itself."""
    store = SessionStore(data_dir, lease_seconds=lease_seconds)
    app = FastAPI(title="blind pairwise review service")
    app.state.store = store

    def resolve_reviewer(request: Request, fallback: Optional[str]) -> str:
        if reviewer_tokens is not None:
            header = request.headers.get("authorization", "")
            token = header.removeprefix("Bearer ").strip()
            reviewer = reviewer_tokens.get(token)
            if reviewer is None:
                raise HTTPException(status_code=401, detail="unknown reviewer token")
            return reviewer
        if not fallback:
            raise HTTPException(status_code=400, detail="reviewer identity required")
        return fallback

    @app.post("/sessions")
    def create_session(body: CreateSessionBody):
        try:
            session = store.create_session(
                systems=body.systems,
                queries=body.queries,
                reports=body.reports,
                mode=body.mode,
                subject=body.subject,
                seed=body.seed,
            )
        except MissingReportsError as exc:
            raise HTTPException(status_code=400, detail={"missing_reports": exc.missing})
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {"session_id": session.session_id, "queued": len(session.pair_order)}

    @app.get("/sessions/{session_id}/next")
    def next_pair(session_id: str, request: Request, reviewer: Optional[str] = None):
        reviewer_id = resolve_reviewer(request, reviewer)
        try:
            pair = store.next_pair(session_id, reviewer_id)
        except KeyError:
            raise HTTPException(status_code=404, detail="unknown session")
        if pair is None:
            return {"status": "none_remaining"}
        return {"status": "ok", **pair}

    @app.post("/sessions/{session_id}/verdicts")
    def submit_verdict(session_id: str, body: VerdictBody, request: Request):
        reviewer_id = resolve_reviewer(request, body.reviewer_id)
        try:
            return store.submit_verdict(
                session_id,
                pair_id=body.pair_id,
                reviewer_id=reviewer_id,
                verdict=body.verdict,
                sub_scores=body.sub_scores,
                justification=body.justification,
            )
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=f"unknown id: {exc}")
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        except PermissionError as exc:
            raise HTTPException(status_code=409, detail=str(exc))

    @app.get("/sessions/{session_id}/leaderboard")
    def get_leaderboard(session_id: str):
        try:
            return store.snapshot(session_id)
        except KeyError:
            raise HTTPException(status_code=404, detail="unknown session")

    @app.get("/sessions/{session_id}/export")
    def export(session_id: str):
        try:
            return PlainTextResponse(store.export(session_id), media_type="application/jsonl")
        except KeyError:
            raise HTTPException(status_code=404, detail="unknown session")

    if static_dir is not None and Path(static_dir).exists():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="frontend")
    else:

        @app.get("/", response_class=HTMLResponse)
        def root():
            return "<html><body>blind pairwise review service (frontend assets not installed)</body></html>"

    return app
