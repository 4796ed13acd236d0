from __future__ import annotations

import functools
import traceback
from dataclasses import asdict, dataclass, field
from typing import Any

PASS, FAIL, WARN = "pass", "fail", "warn"
STATUSES = (PASS, FAIL, WARN)


@dataclass(frozen=True)
class MrVerdict:
    mr_id: str
    status: str
    observed: Any
    expected: str
    tolerance: float
    details: str = ""

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"status must be one of {STATUSES}")

    @property
    def failed(self) -> bool:
        return self.status == FAIL

    def to_dict(self) -> dict:
        return asdict(self)


def guarded(mr_id: str, expected: str, tolerance: float):
    """Turn an unexpected exception raised by the subject into a failing verdict."""

    def wrap(fn):
        @functools.wraps(fn)
        def inner(*args, **kwargs):
            try:
                return fn(*args, **kwargs)
            except Exception as exc:  # noqa: BLE001 - any crash is a failed relation
                tb = traceback.extract_tb(exc.__traceback__)[-1]
                return MrVerdict(
                    mr_id, FAIL, None, expected, tolerance,
                    f"subject raised {type(exc).__name__}: {exc} ({tb.name}:{tb.lineno})",
                )

        return inner

    return wrap
