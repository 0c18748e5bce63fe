"""Per-epoch training trajectory records and their CSV round-trip.

The CSV schema is ``epoch,loss,alignment,uniformity,seconds`` with one
header row. Floats are written with ``repr`` so a re-parse reproduces the
in-memory values exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError

CSV_HEADER = "epoch,loss,alignment,uniformity,seconds"


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    loss: float
    alignment: float
    uniformity: float
    seconds: float


@dataclass
class TrainTrajectory:
    records: list[EpochRecord]

    def __len__(self) -> int:
        return len(self.records)

    def append(self, record: EpochRecord) -> None:
        if self.records and record.epoch <= self.records[-1].epoch:
            raise ValueError("epoch indices must be strictly increasing")
        self.records.append(record)

    def column(self, name: str) -> list[float]:
        return [getattr(r, name) for r in self.records]


def write_trajectory_csv(traj: TrainTrajectory, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [CSV_HEADER]
    for r in traj.records:
        lines.append(f"{r.epoch},{r.loss!r},{r.alignment!r},{r.uniformity!r},{r.seconds!r}")
    path.write_text("\n".join(lines) + "\n")
    return path


def read_trajectory_csv(path: str | Path) -> TrainTrajectory:
    lines = Path(path).read_text().strip().splitlines()
    if not lines or lines[0] != CSV_HEADER:
        raise ConfigError(f"{path}: not a trajectory CSV (expected header {CSV_HEADER!r})")
    records = []
    for lineno, line in enumerate(lines[1:], start=2):
        try:
            epoch, loss, alignment, uniformity, seconds = line.split(",")
            records.append(
                EpochRecord(int(epoch), float(loss), float(alignment), float(uniformity), float(seconds))
            )
        except ValueError:
            raise ConfigError(f"{path}:{lineno}: malformed trajectory row {line!r}") from None
    return TrainTrajectory(records)
