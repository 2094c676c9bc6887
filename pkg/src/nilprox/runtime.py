"""Process-wide knobs: worker cap from the NILPROX_THREADS variable.

Restart-parallel code paths ask ``worker_cap()`` how many threads they may
use; results are merged by minimum over independently seeded restarts, so
the outcome does not depend on scheduling.
"""

from __future__ import annotations

import os

_ENV = "NILPROX_THREADS"
_cap: int | None = None


def worker_cap() -> int:
    global _cap
    if _cap is None:
        try:
            _cap = max(1, int(os.environ.get(_ENV, "1")))
        except ValueError:
            _cap = 1
    return _cap


def set_worker_cap(n: int) -> None:
    global _cap
    _cap = max(1, int(n))
