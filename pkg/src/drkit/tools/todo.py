"""Unified todo state: create / rewrite / destroy behind one entry point.

State is persisted to a per-episode JSON document (under a file lock) before
the mutation's observation is returned, so progress survives restarts.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Union

from filelock import FileLock

STATUSES = ("pending", "in_progress", "done", "cancelled")


class UnknownTodoIdError(KeyError):
    pass


@dataclass(frozen=True)
class TodoItem:
    id: str
    title: str
    status: str = "pending"


@dataclass(frozen=True)
class TodoState:
    items: tuple[TodoItem, ...] = ()
    revision: int = 0

    def to_dict(self) -> dict:
        return {
            "items": [{"id": i.id, "title": i.title, "status": i.status} for i in self.items],
            "revision": self.revision,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TodoState":
        return cls(
            items=tuple(TodoItem(i["id"], i["title"], i["status"]) for i in d["items"]),
            revision=int(d["revision"]),
        )


def todo_apply(state: TodoState, instruction: dict, persist_path: Optional[Union[str, Path]] = None) -> TodoState:
    """Apply one structured mutation; rejected mutations leave state untouched.

    instruction is one of:
      {"create": [title, ...]}
      {"rewrite": {"id": ..., "title"?: ..., "status"?: ...}}
      {"destroy": [id, ...]}
    """
    if len(instruction) != 1:
        raise ValueError("instruction must contain exactly one of create/rewrite/destroy")
    (op, arg), = instruction.items()

    if op == "create":
        # revision is unique per applied mutation, so ids never collide
        new_items = tuple(
            TodoItem(id=f"t{state.revision + 1}_{i}", title=title) for i, title in enumerate(arg)
        )
        new_state = TodoState(items=state.items + new_items, revision=state.revision + 1)
    elif op == "rewrite":
        target = arg["id"]
        known = {i.id for i in state.items}
        if target not in known:
            raise UnknownTodoIdError(target)
        if "status" in arg and arg["status"] not in STATUSES:
            raise ValueError(f"unknown status {arg['status']!r}")
        new_items = tuple(
            replace(i, title=arg.get("title", i.title), status=arg.get("status", i.status))
            if i.id == target
            else i
            for i in state.items
        )
        new_state = TodoState(items=new_items, revision=state.revision + 1)
    elif op == "destroy":
        ids = list(arg)
        known = {i.id for i in state.items}
        missing = [i for i in ids if i not in known]
        if missing:
            raise UnknownTodoIdError(missing[0])
        new_items = tuple(i for i in state.items if i.id not in set(ids))
        new_state = TodoState(items=new_items, revision=state.revision + 1)
    else:
        raise ValueError(f"unknown todo operation {op!r}")

    if persist_path is not None:
        _persist(new_state, Path(persist_path))
    return new_state


def _persist(state: TodoState, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with FileLock(str(path) + ".lock"):
        path.write_text(json.dumps(state.to_dict(), indent=2), encoding="utf-8")


def load_todo_state(path: Union[str, Path]) -> TodoState:
    path = Path(path)
    if not path.exists():
        return TodoState()
    return TodoState.from_dict(json.loads(path.read_text(encoding="utf-8")))
