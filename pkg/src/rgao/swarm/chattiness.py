"""Sliding-window repetition detector for tool calls and tool outputs."""

from __future__ import annotations

from collections import Counter, deque
from collections.abc import Iterable

WINDOW = 6
THRESHOLD = 3
OUTPUT_PREFIX_CHARS = 500


def normalize_output(text: str) -> str:
    return text[:OUTPUT_PREFIX_CHARS].strip().lower()


class ChattinessDetector:
    """Flags a stall once any action or output prefix fills ``threshold`` of the last ``window`` slots."""

    def __init__(self, window: int = WINDOW, threshold: int = THRESHOLD) -> None:
        if window < 1 or threshold < 1:
            raise ValueError("window and threshold must be positive")
        self.window = window
        self.threshold = threshold
        self._actions: deque[str] = deque(maxlen=window)
        self._outputs: deque[str] = deque(maxlen=window)

    def record_action(self, names: str | Iterable[str]) -> None:
        self._actions.extend([names] if isinstance(names, str) else names)

    def record_output(self, outputs: str | Iterable[str]) -> None:
        for text in [outputs] if isinstance(outputs, str) else outputs:
            prefix = normalize_output(text)
            if prefix:
                self._outputs.append(prefix)

    @staticmethod
    def _peak(buffer: deque[str]) -> int:
        return max(Counter(buffer).values(), default=0)

    @property
    def is_chatty(self) -> bool:
        return self._peak(self._actions) >= self.threshold or self._peak(self._outputs) >= self.threshold

    def reset(self) -> None:
        self._actions.clear()
        self._outputs.clear()


# name -> (action, output) sequence; expected detection in the second slot.
GOLDEN_SCENARIOS: dict[str, tuple[list[tuple[str, str]], bool]] = {
    "No repetition": (
        [("read_file", "a"), ("grep", "b"), ("list_dir", "c"), ("write_file", "d"), ("run_tests", "e"),
         ("git_diff", "f")], False),
    "Mild repetition": (
        [("read_file", "module a"), ("grep", "3 hits"), ("read_file", "module b"), ("write_file", "ok"),
         ("run_tests", "2 passed"), ("git_diff", "+1 -1")], False),
    "High repetition": ([("read_file", "same contents")] * 5, True),
    "Tool loop": (
        [("read_file", "v1"), ("write_file", "saved"), ("read_file", "v2"), ("write_file", "saved again"),
         ("read_file", "v3"), ("write_file", "saved once more")], True),
    "Varied actions": (
        [(name, f"{name} output {i}") for i in range(3)
         for name in ("read_file", "grep", "list_dir", "write_file", "run_tests", "git_diff")], False),
}


def run_scenario(steps: Iterable[tuple[str, str]], window: int = WINDOW, threshold: int = THRESHOLD) -> bool:
    det = ChattinessDetector(window, threshold)
    for action, output in steps:
        det.record_action(action)
        det.record_output(output)
        if det.is_chatty:
            return True
    return False
