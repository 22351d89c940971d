from .models import (
    CurveCell,
    CurvePoint,
    EventRecord,
    RunManifest,
    MismatchReport,
    RegretTrace,
    TailRow,
    TailTable,
)

__all__ = [
    "CurveCell",
    "CurvePoint",
    "EventRecord",
    "RunManifest",
    "MismatchReport",
    "RegretTrace",
    "TailRow",
    "TailTable",
]
