"""Per-tick run records shared by the integrator, surrogate drivers, and loop."""

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

# Fixed CSV schema. Every run writes all columns; drivers without internal
# velocity/acceleration states record NaN there.
COLUMNS = (
    "step",
    "t_s",
    "gm_mm_s2",
    "command_mm",
    "compensated_mm",
    "measured_mm",
    "force_kn",
    "vel_mm_s",
    "acc_mm_s2",
)


class StepRecord(NamedTuple):
    step: int
    t: float
    gm_accel: float
    command: float
    compensated: float
    measured: float
    force: float
    vel: float
    acc: float


@dataclass
class PacingStats:
    """Wall-clock behavior of a paced run."""

    rate_hz: float
    ticks: int
    missed: int
    max_latency_s: float
    mean_latency_s: float

    def to_json_dict(self):
        return {
            "rate_hz": self.rate_hz,
            "ticks": self.ticks,
            "missed": self.missed,
            "miss_fraction": self.missed / self.ticks if self.ticks else 0.0,
            "max_latency_s": self.max_latency_s,
            "mean_latency_s": self.mean_latency_s,
        }


@dataclass
class RunHistory:
    """Column store for one simulation run, one row per tick at spacing dt."""

    dt: float
    gm_accel: np.ndarray
    command: np.ndarray
    compensated: np.ndarray
    measured: np.ndarray
    force: np.ndarray
    vel: np.ndarray
    acc: np.ndarray
    name: str = "run"
    pacing: Optional[PacingStats] = None

    @classmethod
    def allocate(cls, n, dt, name="run"):
        mk = lambda: np.zeros(n)
        h = cls(
            dt=dt,
            gm_accel=mk(),
            command=mk(),
            compensated=mk(),
            measured=mk(),
            force=mk(),
            vel=np.full(n, np.nan),
            acc=np.full(n, np.nan),
            name=name,
        )
        return h

    def __len__(self):
        return len(self.command)

    @property
    def t(self):
        return np.arange(len(self.command)) * self.dt

    def row(self, i):
        return StepRecord(
            step=i,
            t=i * self.dt,
            gm_accel=self.gm_accel[i],
            command=self.command[i],
            compensated=self.compensated[i],
            measured=self.measured[i],
            force=self.force[i],
            vel=self.vel[i],
            acc=self.acc[i],
        )

    def __iter__(self):
        for i in range(len(self)):
            yield self.row(i)

    def write_csv(self, path):
        # %.17g round-trips IEEE doubles exactly, so rewritten files are
        # byte-identical and re-parsed values are bit-equal.
        t = self.t
        with open(path, "w") as fh:
            fh.write(",".join(COLUMNS) + "\n")
            for i in range(len(self)):
                fh.write(
                    f"{i},{t[i]:.17g},{self.gm_accel[i]:.17g},{self.command[i]:.17g},"
                    f"{self.compensated[i]:.17g},{self.measured[i]:.17g},"
                    f"{self.force[i]:.17g},{self.vel[i]:.17g},{self.acc[i]:.17g}\n"
                )

    @classmethod
    def read_csv(cls, path, name=None):
        with open(path, "r") as fh:
            header = fh.readline().strip().split(",")
            if tuple(header) != COLUMNS:
                raise ValueError(f"unexpected history header {header}")
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
        if data.shape[0] < 2:
            raise ValueError("history needs at least two rows to recover dt")
        dt = data[1, 1] - data[0, 1]
        return cls(
            dt=dt,
            gm_accel=data[:, 2],
            command=data[:, 3],
            compensated=data[:, 4],
            measured=data[:, 5],
            force=data[:, 6],
            vel=data[:, 7],
            acc=data[:, 8],
            name=name or str(path),
        )
