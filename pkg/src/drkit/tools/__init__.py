from drkit.tools.offload import OffloadRecord, offload_result, read_page
from drkit.tools.patch import (
    AmbiguousAnchorError,
    AnchorTooShortError,
    NoMatchError,
    PatchError,
    PatchRequest,
    PatchResult,
    apply_patch,
)
from drkit.tools.phash import PerceptualHash, hamming_distance, phash64, should_suppress_image
from drkit.tools.registry import ToolError, ToolRegistry
from drkit.tools.todo import TodoItem, TodoState, UnknownTodoIdError, todo_apply

__all__ = [
    "AmbiguousAnchorError",
    "AnchorTooShortError",
    "NoMatchError",
    "OffloadRecord",
    "PatchError",
    "PatchRequest",
    "PatchResult",
    "PerceptualHash",
    "TodoItem",
    "TodoState",
    "ToolError",
    "ToolRegistry",
    "UnknownTodoIdError",
    "apply_patch",
    "hamming_distance",
    "offload_result",
    "phash64",
    "read_page",
    "should_suppress_image",
    "todo_apply",
]
