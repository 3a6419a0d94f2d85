"""Ground-motion records: parsing, unit conversion, resampling, and file emission.

Internal units are fixed across the package: displacement mm, force kN,
time s, acceleration mm/s^2. Records arrive in g or m/s^2 and are converted
once at parse time.
"""

import json
import math
import re
from dataclasses import dataclass, field

import numpy as np

G_TO_MM_S2 = 9806.65
_UNIT_SCALES = {
    "g": G_TO_MM_S2,
    "m/s2": 1000.0,
    "m/s^2": 1000.0,
    "mm/s2": 1.0,
    "mm/s^2": 1.0,
}

_NPTS_RE = re.compile(r"NPTS\s*=\s*(\d+)", re.IGNORECASE)
_DT_RE = re.compile(r"DT\s*=\s*([0-9.eE+\-]+)", re.IGNORECASE)


@dataclass
class GroundMotion:
    """Uniformly sampled ground acceleration in mm/s^2."""

    dt: float
    accel: np.ndarray
    name: str = "record"
    source_units: str = "mm/s2"
    scale: float = 1.0

    def __post_init__(self):
        self.accel = np.asarray(self.accel, dtype=float)
        if self.dt <= 0.0:
            raise ValueError(f"sampling interval must be positive, got {self.dt}")
        if self.accel.ndim != 1:
            raise ValueError("acceleration history must be one-dimensional")

    @property
    def duration(self):
        return (len(self.accel) - 1) * self.dt

    @property
    def times(self):
        return np.arange(len(self.accel)) * self.dt

    @classmethod
    def zeros(cls, dt, n, name="quiet"):
        return cls(dt=dt, accel=np.zeros(n), name=name)


def _unit_factor(units):
    key = str(units).strip().lower()
    if key not in _UNIT_SCALES:
        raise ValueError(
            f"unknown acceleration units {units!r}; expected one of {sorted(_UNIT_SCALES)}"
        )
    return _UNIT_SCALES[key]


def parse_record(path, fmt=None, units=None, scale=1.0, dt=None, name=None):
    """Read a ground-motion file and return a GroundMotion in mm/s^2.

    fmt is "at2" or "csv"; inferred from the file extension when omitted.
    AT2 bodies default to g (the conventional unit for that layout); CSV
    requires an explicit `units` argument. Single-column CSV additionally
    needs `dt`; two-column CSV carries its own time axis.
    """
    path = str(path)
    if fmt is None:
        lower = path.lower()
        if lower.endswith(".at2"):
            fmt = "at2"
        elif lower.endswith((".csv", ".txt")):
            fmt = "csv"
        else:
            raise ValueError(f"cannot infer record format from {path!r}; pass fmt=")
    with open(path, "r") as fh:
        text = fh.read()
    if name is None:
        name = path.rsplit("/", 1)[-1]
    if fmt == "at2":
        return _parse_at2(text, units or "g", scale, name)
    if fmt == "csv":
        if units is None:
            raise ValueError("CSV records carry no unit metadata; pass units=")
        return _parse_csv(text, units, scale, dt, name)
    raise ValueError(f"unknown record format {fmt!r}")


def _parse_at2(text, units, scale, name):
    lines = text.splitlines()
    npts = None
    dt = None
    body_start = 0
    # Header: scan until the line carrying NPTS and DT (line 4 in the
    # conventional layout, but position is not trusted).
    for i, line in enumerate(lines[:8]):
        m_n = _NPTS_RE.search(line)
        m_dt = _DT_RE.search(line)
        if m_n and m_dt:
            npts = int(m_n.group(1))
            dt = float(m_dt.group(1))
            body_start = i + 1
            break
    if npts is None:
        raise ValueError("AT2 header missing 'NPTS=' / 'DT=' line")
    values = []
    for lineno, line in enumerate(lines[body_start:], start=body_start + 1):
        for token in line.split():
            try:
                values.append(float(token))
            except ValueError:
                raise ValueError(
                    f"line {lineno}: unparseable acceleration value {token!r}"
                ) from None
    if len(values) != npts:
        raise ValueError(
            f"AT2 header declares NPTS={npts} but body holds {len(values)} values"
        )
    factor = _unit_factor(units) * scale
    return GroundMotion(
        dt=dt, accel=np.array(values) * factor, name=name, source_units=units, scale=scale
    )


def _parse_csv(text, units, scale, dt, name):
    ones = []
    pairs = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p for p in line.replace(",", " ").split() if p]
        try:
            row = [float(p) for p in parts]
        except ValueError:
            raise ValueError(f"line {lineno}: unparseable value in {raw!r}") from None
        if len(row) == 1:
            ones.append(row[0])
        elif len(row) == 2:
            pairs.append(row)
        else:
            raise ValueError(f"line {lineno}: expected 1 or 2 columns, got {len(row)}")
    if ones and pairs:
        raise ValueError("mixed 1-column and 2-column rows in CSV record")
    factor = _unit_factor(units) * scale
    if pairs:
        arr = np.array(pairs)
        t, a = arr[:, 0], arr[:, 1]
        if len(t) < 2:
            raise ValueError("need at least two samples to infer dt")
        steps = np.diff(t)
        dt_inferred = float(steps[0])
        if not np.allclose(steps, dt_inferred, rtol=1e-6, atol=1e-12):
            raise ValueError("time column is not uniformly spaced")
        return GroundMotion(
            dt=dt_inferred, accel=a * factor, name=name, source_units=units, scale=scale
        )
    if dt is None:
        raise ValueError("single-column CSV records need an explicit dt=")
    return GroundMotion(
        dt=dt, accel=np.array(ones) * factor, name=name, source_units=units, scale=scale
    )


def resample(gm, target_dt):
    """Linear-interpolation resampling onto a uniform grid of target_dt.

    The output has floor(duration/target_dt) + 1 samples: the start point is
    always kept, the end point is kept exactly when the duration is an
    integer multiple of target_dt, and any shorter tail is dropped. Only
    refinement is supported (target_dt <= source dt): coarsening would alias
    and extrapolation beyond the source duration is never performed.
    """
    if target_dt <= 0.0:
        raise ValueError("target_dt must be positive")
    if target_dt > gm.dt * (1.0 + 1e-12):
        raise ValueError(
            f"resample only refines: target_dt={target_dt} exceeds source dt={gm.dt}"
        )
    n_new = int(math.floor(gm.duration / target_dt + 1e-9)) + 1
    t_new = np.arange(n_new) * target_dt
    out = np.interp(t_new, gm.times, gm.accel)
    return GroundMotion(
        dt=target_dt, accel=out, name=gm.name, source_units=gm.source_units, scale=gm.scale
    )


def default_record_path():
    """Path of the bundled benchmark motion (synthetic El-Centro-class, AT2 layout)."""
    from importlib import resources

    return str(resources.files("rthslab").joinpath("data/elcentro_class_synthetic.at2"))


def load_default_record():
    return parse_record(default_record_path(), fmt="at2", units="g")


# --- emission -------------------------------------------------------------

def write_json(payload, path):
    """Emit a report-style dict as deterministic JSON (no timestamps, stable order)."""
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=False, allow_nan=True)
        fh.write("\n")


def plot_series(path, curves, xlabel="time [s]", ylabel="", title=None):
    """Write an SVG time-series overlay. curves = [(label, t, y), ...]."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "rthslab"
    fig, ax = plt.subplots(figsize=(9, 3.2))
    for label, t, y in curves:
        ax.plot(t, y, linewidth=0.8, label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def emit(obj, path, fmt=None):
    """Write a history, report dict, model, or record to disk.

    Formats: csv (histories, records), json (reports, models), svg (overlay
    plot of a history's displacement and force). Inferred from the path
    extension when fmt is omitted.
    """
    path = str(path)
    if fmt is None:
        fmt = path.rsplit(".", 1)[-1].lower()
    if fmt == "csv":
        if hasattr(obj, "write_csv"):
            obj.write_csv(path)
            return
        if isinstance(obj, GroundMotion):
            with open(path, "w") as fh:
                fh.write("# t_s,accel_mm_s2\n")
                for t, a in zip(obj.times, obj.accel):
                    fh.write(f"{t:.17g},{a:.17g}\n")
            return
        raise TypeError(f"cannot emit {type(obj).__name__} as CSV")
    if fmt == "json":
        payload = obj.to_json_dict() if hasattr(obj, "to_json_dict") else obj
        if not isinstance(payload, dict):
            raise TypeError(f"cannot emit {type(obj).__name__} as JSON")
        write_json(payload, path)
        return
    if fmt == "svg":
        if hasattr(obj, "t") and hasattr(obj, "command"):
            plot_series(
                path,
                [
                    ("command [mm]", obj.t, obj.command),
                    ("measured [mm]", obj.t, obj.measured),
                ],
                ylabel="displacement [mm]",
                title=getattr(obj, "name", None),
            )
            return
        raise TypeError(f"cannot emit {type(obj).__name__} as SVG")
    raise ValueError(f"unknown emission format {fmt!r}")
