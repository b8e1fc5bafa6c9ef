"""
Trace reports.

A run produces a header describing the world it ran in, an append-only list of event records and, once
checked, the property verdicts. Serialized as JSON lines: the header line, one line per event, and a final
verdicts line. Keys are sorted and no wall-clock data is written unless the caller adds it, so identical runs
serialize to identical bytes.
"""

__all__ = ["TraceReport"]

import json
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Optional


def _dumps(record: Dict[str, Any]) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


@dataclass
class TraceReport:
    """
    Event log of one simulator run.

    Attributes:
        header (Dict[str, Any]): Scenario name, seed and the world's configuration.
        events (List[Dict[str, Any]]): Event records in order, each with "tick" and "event" keys.
        verdicts (Optional[Dict[str, Any]]): Property verdicts as produced by `PropertyVerdicts.to_dict`.
    """

    header: Dict[str, Any] = field(default_factory=dict)
    events: List[Dict[str, Any]] = field(default_factory=list)
    verdicts: Optional[Dict[str, Any]] = None

    def of_kind(self, *names: str) -> Iterator[Dict[str, Any]]:
        return (event for event in self.events if event["event"] in names)

    def to_jsonl(self) -> str:
        lines = [_dumps({"header": self.header})]
        lines.extend(_dumps(event) for event in self.events)
        if self.verdicts is not None:
            lines.append(_dumps({"verdicts": self.verdicts}))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str) -> "TraceReport":
        """
        Parse a report written by `to_jsonl`.

        Args:
            text (str): JSON lines.

        Returns:
            TraceReport: The report. Blank lines are skipped.

        Raises:
            ValueError: If a line is not JSON or the header is missing.
        """
        report, seen_header = cls(), False
        for line in text.splitlines():
            if not line.strip():
                continue
            record = json.loads(line)
            if "header" in record and not seen_header:
                report.header, seen_header = record["header"], True
            elif "verdicts" in record:
                report.verdicts = record["verdicts"]
            else:
                report.events.append(record)
        if not seen_header:
            raise ValueError("Trace has no header line")
        return report
