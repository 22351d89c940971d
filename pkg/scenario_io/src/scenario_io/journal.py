from pathlib import Path
from typing import Any, Dict, Iterator, Optional

from .ir.models import EventRecord


def append_record(
    kind: str, payload: Dict[str, Any], file_path: Path, code: Optional[str] = None
) -> EventRecord:
    """Append an event record to a JSONL file. Returns the record written."""
    record = EventRecord(kind=kind, code=code, payload=payload)
    p = Path(file_path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with p.open("a", encoding="utf-8") as f:
        f.write(record.json() + "\n")
    return record


def read_records(file_path: Path) -> Iterator[EventRecord]:
    p = Path(file_path)
    if not p.exists():
        return
    with p.open("r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                yield EventRecord.parse_raw(line)
