"""Tool registry and dispatch: names to callables, failure-safe observations.

Calls within one turn may execute in parallel, but observations are always
returned in call order. Oversized results are offloaded and replaced by
their summaries before they reach the model's context.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Protocol, Union

from drkit.tools.offload import DEFAULT_THRESHOLD, OffloadRecord, head_tail_summary, offload_result


class ToolError(Exception):
    pass


@dataclass(frozen=True)
class Observation:
    tool_name: str
    content: str
    is_error: bool = False
    spill_path: Optional[str] = None
    sources: tuple[dict, ...] = ()  # citation keys contributed by this result


class CommandExecutor(Protocol):
    """Abstract command execution surface (the sandbox stand-in)."""

    def run(self, command: str) -> str: ...


class ScriptedExecutor:
    """Deterministic executor for tests: canned outputs keyed by command."""

    def __init__(self, outputs: dict[str, str], default: str = ""):
        self.outputs = dict(outputs)
        self.default = default
        self.calls: list[str] = []

    def run(self, command: str) -> str:
        self.calls.append(command)
        return self.outputs.get(command, self.default)


class ToolRegistry:
    def __init__(
        self,
        spill_dir: Union[str, Path, None] = None,
        offload_threshold: int = DEFAULT_THRESHOLD,
        summarizer=head_tail_summary,
        max_workers: int = 8,
    ):
        self._tools: dict[str, Callable[..., str]] = {}
        self.spill_dir = Path(spill_dir) if spill_dir else None
        self.offload_threshold = offload_threshold
        self.summarizer = summarizer
        self.max_workers = max_workers
        self._spill_counter = 0

    def register(self, name: str, fn: Callable[..., str]) -> None:
        if name in self._tools:
            raise ValueError(f"tool {name!r} already registered")
        self._tools[name] = fn

    def names(self) -> list[str]:
        return sorted(self._tools)

    def _invoke(self, name: str, arguments: dict) -> Observation:
        fn = self._tools.get(name)
        if fn is None:
            return Observation(name, f"tool failure: unknown tool {name!r}", is_error=True)
        try:
            result = fn(**arguments)
        except Exception as exc:
            return Observation(name, f"tool failure: {exc}", is_error=True)
        sources: tuple[dict, ...] = ()
        if isinstance(result, tuple) and len(result) == 2:
            result, raw_sources = result
            sources = tuple(raw_sources)
        return self._wrap(name, result if isinstance(result, str) else str(result), sources)

    def _wrap(self, name: str, content: str, sources: tuple[dict, ...] = ()) -> Observation:
        payload = content.encode("utf-8")
        if self.spill_dir is None or len(payload) <= self.offload_threshold:
            return Observation(name, content, sources=sources)
        self._spill_counter += 1
        try:
            record = offload_result(
                payload,
                threshold=self.offload_threshold,
                summarizer=self.summarizer,
                spill_dir=self.spill_dir,
                name=f"{name}-{self._spill_counter}",
            )
        except OSError as exc:  # unwritable spill dir surfaces as a tool failure
            return Observation(name, f"tool failure: offload failed: {exc}", is_error=True)
        assert isinstance(record, OffloadRecord)
        return Observation(name, record.summary, spill_path=record.spill_path, sources=sources)

    def dispatch(self, calls: list[tuple[str, dict]], parallel: bool = True) -> list[Observation]:
        """Execute calls; observations come back in call order regardless of
        completion order."""
        if not calls:
            return []
        if not parallel or len(calls) == 1:
            return [self._invoke(name, args) for name, args in calls]
        with ThreadPoolExecutor(max_workers=min(self.max_workers, len(calls))) as pool:
            futures = [pool.submit(self._invoke, name, args) for name, args in calls]
            return [f.result() for f in futures]
