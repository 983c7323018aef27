"""Budgeted ReAct episode runtime.

One episode is a single reasoning-action-observation loop under hard turn,
token, and tool-call budgets. Every step is recorded so a finished episode
serializes to a replayable trajectory; with scripted policies and tools the
serialized form is byte-identical across runs.
"""

from __future__ import annotations

import json
import re
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Optional

from drkit.model_client import ModelClient, ModelResponse, TransportError, estimate_tokens
from drkit.tools.registry import Observation, ToolRegistry

DEFAULT_MAX_TURNS = 30
DEFAULT_MAX_TOKENS_PER_TURN = 16384

TOOL_CALL_OPEN = "<tool_call>"
TOOL_CALL_CLOSE = "</tool_call>"
_TOOL_CALL_BLOCK = re.compile(re.escape(TOOL_CALL_OPEN) + r"(.*?)" + re.escape(TOOL_CALL_CLOSE), re.DOTALL)


class Phase(str, Enum):
    PLANNING_REFLECTION = "planning_reflection"
    TOOL_EXECUTION = "tool_execution"
    FEEDBACK_VALIDATION = "feedback_validation"


class Termination(str, Enum):
    REPORT_DELIVERED = "report_delivered"
    TURN_BUDGET = "turn_budget"
    TOKEN_BUDGET = "token_budget"
    TOOL_BUDGET = "tool_budget"
    ERROR = "error"


@dataclass(frozen=True)
class EpisodeConfig:
    max_turns: int = DEFAULT_MAX_TURNS
    max_tokens_per_turn: int = DEFAULT_MAX_TOKENS_PER_TURN
    tool_call_budget: int = 100
    total_token_budget: int = 1_000_000
    clock_now: datetime = field(
        default_factory=lambda: datetime(2026, 1, 1, tzinfo=timezone.utc)
    )

    def __post_init__(self) -> None:
        if self.max_turns < 1:
            raise ValueError("max_turns must be >= 1")
        for name in ("max_tokens_per_turn", "tool_call_budget", "total_token_budget"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")


@dataclass
class AgentState:
    turn_index: int = 0  # 0-based internally; logs are 1-based
    message_history: list[tuple[str, str]] = field(default_factory=list)
    tokens_spent: int = 0
    tool_calls_made: int = 0
    phase: Phase = Phase.PLANNING_REFLECTION

    def snapshot(self) -> dict:
        return {
            "turn": self.turn_index + 1,
            "tokens_spent": self.tokens_spent,
            "tool_calls_made": self.tool_calls_made,
            "phase": self.phase.value,
        }


class ParseError(Exception):
    def __init__(self, message: str, span: tuple[int, int]):
        self.span = span
        super().__init__(f"{message} (chars {span[0]}..{span[1]})")


@dataclass(frozen=True)
class TurnAction:
    kind: str  # "tool_calls" | "final_report"
    calls: tuple[tuple[str, dict], ...] = ()
    report_text: str = ""
    reasoning: str = ""

    def __post_init__(self) -> None:
        if self.kind == "tool_calls" and not self.calls:
            raise ValueError("tool_calls action requires at least one call")
        if self.kind == "final_report" and self.calls:
            raise ValueError("final_report action must carry no calls")


def parse_model_turn(raw: str) -> TurnAction:
    """Deterministic parse of one policy turn.

    Tool calls are <tool_call>{"name": ..., "arguments": {...}}</tool_call>
    blocks; any text outside the blocks is kept as reasoning. A turn without
    blocks is a final report. Malformed or truncated blocks raise ParseError
    rather than silently degrading into a report.
    """
    open_count = raw.count(TOOL_CALL_OPEN)
    blocks = list(_TOOL_CALL_BLOCK.finditer(raw))
    if open_count != len(blocks):
        start = raw.rfind(TOOL_CALL_OPEN)
        raise ParseError("truncated tool-call block", (start, len(raw)))

    if not blocks:
        return TurnAction(kind="final_report", report_text=raw)

    calls = []
    for match in blocks:
        body = match.group(1).strip()
        try:
            payload = json.loads(body)
            name = payload["name"]
            arguments = payload.get("arguments", {})
            if not isinstance(name, str) or not isinstance(arguments, dict):
                raise ValueError("bad shapes")
        except (json.JSONDecodeError, KeyError, TypeError, ValueError):
            raise ParseError("malformed tool-call payload", match.span()) from None
        calls.append((name, arguments))
    reasoning = _TOOL_CALL_BLOCK.sub("", raw).strip()
    return TurnAction(kind="tool_calls", calls=tuple(calls), reasoning=reasoning)


@dataclass(frozen=True)
class BudgetDecision:
    allow: bool
    reason: Optional[Termination] = None


def enforce_budget(state: AgentState, proposed: TurnAction, config: EpisodeConfig) -> BudgetDecision:
    """Pure check: terminate exactly when executing proposed would exceed a budget.

    Delivering a final report consumes nothing further, so an exactly
    exhausted token budget never blocks it; tool calls do, since their
    observations force another generation turn.
    """
    if state.turn_index >= config.max_turns:
        return BudgetDecision(allow=False, reason=Termination.TURN_BUDGET)
    if proposed.kind == "tool_calls":
        if state.tokens_spent >= config.total_token_budget:
            return BudgetDecision(allow=False, reason=Termination.TOKEN_BUDGET)
        if state.tool_calls_made + len(proposed.calls) > config.tool_call_budget:
            return BudgetDecision(allow=False, reason=Termination.TOOL_BUDGET)
    return BudgetDecision(allow=True)


@dataclass
class Step:
    state_before: dict
    raw_output: str
    action_kind: str
    calls: list[dict] = field(default_factory=list)
    observations: list[dict] = field(default_factory=list)
    output_truncated: bool = False
    parse_error: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "state": self.state_before,
            "raw_output": self.raw_output,
            "action_kind": self.action_kind,
            "calls": self.calls,
            "observations": self.observations,
            "output_truncated": self.output_truncated,
            "parse_error": self.parse_error,
        }


@dataclass
class Trajectory:
    episode_id: str
    query: str
    started_at: str  # RFC 3339, from the injected clock
    steps: list[Step] = field(default_factory=list)
    final_report: Optional[str] = None
    termination: Optional[Termination] = None
    termination_cause: str = ""
    citations: list[dict] = field(default_factory=list)
    tokens_spent: int = 0
    tool_calls_made: int = 0

    @property
    def n_turns(self) -> int:
        return len(self.steps)

    def reasoning_step_count(self) -> int:
        return len(self.steps)

    def search_queries(self) -> list[str]:
        queries = []
        for step in self.steps:
            for call in step.calls:
                args = call.get("arguments", {})
                if "query" in args:
                    queries.append(str(args["query"]))
                for q in args.get("queries", []) or []:
                    queries.append(str(q))
        return queries

    def prose_segments(self) -> list[str]:
        """Reasoning text and report paragraphs; tool payloads are not prose."""
        segments = []
        for step in self.steps:
            raw = step.raw_output
            raw = _TOOL_CALL_BLOCK.sub("", raw).strip()
            if raw:
                segments.extend(p for p in re.split(r"\n\s*\n", raw) if p.strip())
        if self.final_report:
            segments.extend(p for p in re.split(r"\n\s*\n", self.final_report) if p.strip())
        return segments

    def to_dict(self) -> dict:
        return {
            "episode_id": self.episode_id,
            "query": self.query,
            "started_at": self.started_at,
            "steps": [s.to_dict() for s in self.steps],
            "final_report": self.final_report,
            "termination": self.termination.value if self.termination else None,
            "termination_cause": self.termination_cause,
            "citations": self.citations,
            "tokens_spent": self.tokens_spent,
            "tool_calls_made": self.tool_calls_made,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "Trajectory":
        traj = cls(
            episode_id=d["episode_id"],
            query=d["query"],
            started_at=d.get("started_at", ""),
            final_report=d.get("final_report"),
            termination=Termination(d["termination"]) if d.get("termination") else None,
            termination_cause=d.get("termination_cause", ""),
            citations=list(d.get("citations", [])),
            tokens_spent=int(d.get("tokens_spent", 0)),
            tool_calls_made=int(d.get("tool_calls_made", 0)),
        )
        for s in d.get("steps", []):
            traj.steps.append(
                Step(
                    state_before=s["state"],
                    raw_output=s["raw_output"],
                    action_kind=s["action_kind"],
                    calls=list(s.get("calls", [])),
                    observations=list(s.get("observations", [])),
                    output_truncated=bool(s.get("output_truncated", False)),
                    parse_error=s.get("parse_error"),
                )
            )
        return traj


_CITE = re.compile(r"\\cite\{([^}]*)\}")


@dataclass(frozen=True)
class CitationReport:
    resolved: int
    dangling: tuple[str, ...]


def extract_cite_keys(report: str) -> list[str]:
    keys = []
    for match in _CITE.finditer(report):
        for key in match.group(1).split(","):
            key = key.strip()
            if key:
                keys.append(key)
    return keys


def validate_report_citations(report: str, sources: list[dict]) -> CitationReport:
    """Classify every \\cite{} key as resolved against observed sources or dangling."""
    known = {s["key"] for s in sources}
    resolved = 0
    dangling = []
    for key in extract_cite_keys(report):
        if key in known:
            resolved += 1
        elif key not in dangling:
            dangling.append(key)
    return CitationReport(resolved=resolved, dangling=tuple(dangling))


def _rfc3339(dt: datetime) -> str:
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.isoformat()


SYSTEM_PROMPT = (
    "You are a deep-research agent. Work in turns: reason about the task, "
    "then either emit tool calls as <tool_call>{{\"name\": ..., \"arguments\": {{...}}}}</tool_call> "
    "blocks or write the final report (no tool-call blocks). Cite sources with \\cite{{key}}. "
    "Available tools: {tools}. Current time: {now}."
)


def run_episode(
    query: str,
    config: EpisodeConfig,
    policy: ModelClient,
    tools: ToolRegistry,
    episode_id: Optional[str] = None,
) -> Trajectory:
    """Run one episode to a definite termination; never raises for policy or
    tool failures (those end the trajectory with termination=error)."""
    if not query.strip():
        raise ValueError("query must be nonempty")

    state = AgentState()
    trajectory = Trajectory(
        episode_id=episode_id or uuid.uuid4().hex,
        query=query,
        started_at=_rfc3339(config.clock_now),
    )
    system = SYSTEM_PROMPT.format(tools=", ".join(tools.names()) or "none", now=_rfc3339(config.clock_now))
    state.message_history.append(("system", system))
    state.message_history.append(("user", query))

    while True:
        if state.turn_index >= config.max_turns:
            trajectory.termination = Termination.TURN_BUDGET
            break

        state.phase = Phase.PLANNING_REFLECTION
        messages = [{"role": role, "content": content} for role, content in state.message_history]
        try:
            response = policy.complete(messages, max_tokens=config.max_tokens_per_turn)
        except TransportError as exc:
            trajectory.termination = Termination.ERROR
            trajectory.termination_cause = str(exc)
            break

        raw = response.text
        tokens = response.usage_tokens if response.usage_tokens is not None else estimate_tokens(raw)
        truncated = False
        if tokens > config.max_tokens_per_turn:
            raw = raw[: config.max_tokens_per_turn * 4]
            tokens = config.max_tokens_per_turn
            truncated = True
        if state.tokens_spent + tokens > config.total_token_budget:
            # hard ceiling: trim to the remaining allowance, record, stop
            allowance = config.total_token_budget - state.tokens_spent
            raw = raw[: allowance * 4]
            tokens = allowance
            truncated = True
            step = Step(
                state_before=state.snapshot(),
                raw_output=raw,
                action_kind="truncated",
                output_truncated=True,
            )
            trajectory.steps.append(step)
            state.tokens_spent += tokens
            trajectory.termination = Termination.TOKEN_BUDGET
            break

        step = Step(
            state_before=state.snapshot(),
            raw_output=raw,
            action_kind="",
            output_truncated=truncated,
        )
        trajectory.steps.append(step)
        state.tokens_spent += tokens
        state.message_history.append(("assistant", raw))

        try:
            action = parse_model_turn(raw)
        except ParseError as exc:
            step.action_kind = "parse_error"
            step.parse_error = str(exc)
            feedback = f"parse error: {exc}. Re-emit a well-formed turn."
            step.observations.append({"tool": "parser", "content": feedback, "is_error": True})
            state.message_history.append(("user", feedback))
            state.turn_index += 1
            continue

        step.action_kind = action.kind
        decision = enforce_budget(state, action, config)
        if not decision.allow:
            trajectory.termination = decision.reason
            break

        if action.kind == "final_report":
            trajectory.final_report = action.report_text
            report = validate_report_citations(action.report_text, trajectory.citations)
            step.observations.append(
                {
                    "tool": "citation_check",
                    "content": f"resolved={report.resolved} dangling={list(report.dangling)}",
                    "is_error": False,
                }
            )
            trajectory.termination = Termination.REPORT_DELIVERED
            state.turn_index += 1
            break

        state.phase = Phase.TOOL_EXECUTION
        step.calls = [{"name": name, "arguments": args} for name, args in action.calls]
        observations = tools.dispatch(list(action.calls))
        state.tool_calls_made += len(action.calls)

        state.phase = Phase.FEEDBACK_VALIDATION
        for obs in observations:
            step.observations.append(
                {
                    "tool": obs.tool_name,
                    "content": obs.content,
                    "is_error": obs.is_error,
                    **({"spill_path": obs.spill_path} if obs.spill_path else {}),
                }
            )
            for source in obs.sources:
                if source not in trajectory.citations:
                    trajectory.citations.append(source)
            state.message_history.append(("user", f"[{obs.tool_name}] {obs.content}"))
        state.turn_index += 1

    trajectory.tokens_spent = state.tokens_spent
    trajectory.tool_calls_made = state.tool_calls_made
    return trajectory


def write_trajectories_jsonl(trajectories: list[Trajectory], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for traj in trajectories:
            fh.write(traj.to_json() + "\n")


def read_trajectories_jsonl(path) -> list[Trajectory]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(Trajectory.from_dict(json.loads(line)))
    return out
