"""
StageTrace: the append-only record of every construction decision.

A trace file is one header line followed by one record per line. Every
line is a sequence of `key=value` fields separated by single spaces:

    engine=poset-diag horizon=7 adversaries=mirror,chain
    stage=1 kind=exp j=1 leaf=0 length=1 chain=0 first=1
    stage=2 kind=strat req=0 verdict=not-ready reason=previous move=withdraw

Values never contain whitespace. Lists are comma separated, absent values
are written as `-`. Field order is part of the format, so rendering the
same run twice gives byte-identical text.
"""

from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List, Optional, Tuple

from .errors import ConfigError


def format_value(value: Any) -> str:
    if value is None:
        return "-"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (list, tuple, set, frozenset)):
        items = sorted(value) if isinstance(value, (set, frozenset)) else value
        return ",".join(format_value(v) for v in items) if items else "-"
    text = str(value)
    if not text or any(ch.isspace() for ch in text):
        raise ValueError(f"trace value {text!r} must be non-empty and free of whitespace")
    return text


class TraceRecord:
    """One line of a trace: ordered key=value fields."""

    def __init__(self, fields: Iterable[Tuple[str, str]]):
        self.fields: Tuple[Tuple[str, str], ...] = tuple(fields)
        self._index = dict(self.fields)

    def __getitem__(self, key: str) -> str:
        return self._index[key]

    def __contains__(self, key: str) -> bool:
        return key in self._index

    def __eq__(self, other) -> bool:
        return isinstance(other, TraceRecord) and self.fields == other.fields

    def __repr__(self) -> str:
        return f"TraceRecord({self.render()!r})"

    def get(self, key: str, default: Optional[str] = None) -> Optional[str]:
        value = self._index.get(key, default)
        return default if value == "-" else value

    def as_int(self, key: str, default: Optional[int] = None) -> Optional[int]:
        value = self.get(key)
        return default if value is None else int(value)

    def as_ints(self, key: str) -> Tuple[int, ...]:
        value = self.get(key)
        return tuple(int(v) for v in value.split(",")) if value else ()

    def items(self, key: str) -> Tuple[str, ...]:
        value = self.get(key)
        return tuple(value.split(",")) if value else ()

    @property
    def stage(self) -> Optional[int]:
        return self.as_int("stage")

    def render(self) -> str:
        return " ".join(f"{k}={v}" for k, v in self.fields)

    @classmethod
    def parse(cls, line: str, number: int = 0) -> "TraceRecord":
        fields = []
        for token in line.split(" "):
            key, sep, value = token.partition("=")
            if not sep or not key or not value:
                raise ConfigError(f"trace line {number}: malformed field {token!r}")
            fields.append((key, value))
        return cls(fields)


class StageTrace:
    """
    Header plus records of one engine run.

    Records are appended with keyword arguments; their order is kept.
    """

    def __init__(self, engine: str, horizon: int, **meta: Any):
        self.header = TraceRecord(
            [("engine", engine), ("horizon", str(horizon))]
            + [(k, format_value(v)) for k, v in meta.items()]
        )
        self.records: List[TraceRecord] = []

    @property
    def engine(self) -> str:
        return self.header["engine"]

    @property
    def horizon(self) -> int:
        return int(self.header["horizon"])

    def append(self, **fields: Any) -> TraceRecord:
        record = TraceRecord((k, format_value(v)) for k, v in fields.items())
        self.records.append(record)
        return record

    def __iter__(self) -> Iterator[TraceRecord]:
        return iter(self.records)

    def __len__(self) -> int:
        return len(self.records)

    def select(self, **match: Any) -> List[TraceRecord]:
        """Records whose fields equal every given value."""
        wanted = {k: format_value(v) for k, v in match.items()}
        return [r for r in self.records if all(r._index.get(k) == v for k, v in wanted.items())]

    def last(self, **match: Any) -> Optional[TraceRecord]:
        found = self.select(**match)
        return found[-1] if found else None

    def stages(self) -> List[int]:
        return sorted({r.stage for r in self.records if r.stage is not None})

    def render(self) -> str:
        return "\n".join([self.header.render()] + [r.render() for r in self.records]) + "\n"

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.render())
        return path

    @classmethod
    def parse(cls, text: str) -> "StageTrace":
        """Inverse of render; raises ConfigError on corrupt text."""
        lines = [line for line in text.splitlines() if line.strip()]
        if not lines:
            raise ConfigError("empty trace")
        header = TraceRecord.parse(lines[0].strip(), 1)
        if "engine" not in header or "horizon" not in header:
            raise ConfigError("trace header needs engine= and horizon=")
        try:
            int(header["horizon"])
        except ValueError as e:
            raise ConfigError(f"bad horizon in trace header: {header['horizon']!r}") from e

        trace = cls.__new__(cls)
        trace.header = header
        trace.records = []
        for number, line in enumerate(lines[1:], start=2):
            record = TraceRecord.parse(line.strip(), number)
            if "stage" in record:
                try:
                    int(record["stage"])
                except ValueError as e:
                    raise ConfigError(f"trace line {number}: bad stage {record['stage']!r}") from e
            trace.records.append(record)
        return trace

    @classmethod
    def load(cls, path: str | Path) -> "StageTrace":
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as e:
            raise ConfigError(f"cannot read trace {path}: {e}") from e
        return cls.parse(text)

    def meta(self) -> Dict[str, str]:
        return dict(self.header.fields)
