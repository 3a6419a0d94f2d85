"""Named experiment scenarios and the batch matrix.

Every scenario is compared against the pure analytical run (`pure-fe`) on
the same record and configuration. Scenarios form a small dependency chain:
the linear-surrogate ones need the phase-1 model (trained on the pure run),
and `lr-online` additionally needs the feedback history recorded by
`lr-offline` for its phase-2 retraining. `run_matrix` resolves those
prerequisites lazily, so requesting a single downstream scenario still
works; only the requested names are reported.

A scenario failure is captured in the report (name + error) and the batch
continues with the remaining ones.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .config import ExperimentConfig
from .history import RunHistory
from .integrator import run_pure_fe
from .metrics import compute_metrics
from .plant import PlantMode
from .runner import FeDriver, LrDriver, RunConfig, run_hybrid
from .surrogate_lr import build_lr_dataset, replay_lr, train_lr

SCENARIO_NAMES = (
    "pure-fe",
    "fe-offline",
    "fe-online-uncompensated",
    "fe-online-ats",
    "lr-pure",
    "lr-offline",
    "lr-online",
    "rnn-sweep",
)

DESCRIPTIONS = {
    "pure-fe": "analytical substructure alone, no plant in the loop (reference)",
    "fe-offline": "integrator driving the plant with force taken from the command",
    "fe-online-uncompensated": "integrator against the delayed plant, no compensation",
    "fe-online-ats": "integrator against the delayed plant with adaptive compensation",
    "lr-pure": "phase-1 linear surrogate replayed closed loop on its own feedback",
    "lr-offline": "phase-1 linear surrogate driving the plant, feedback recorded",
    "lr-online": "phase-2 linear surrogate in the loop on live plant feedback",
    "rnn-sweep": "recurrent surrogate hidden-size sweep, open-loop replay",
}

# phase-2 retraining sees plant outputs one tick late (loop causality)
RECORDED_FEEDBACK_LAG = 1


@dataclass
class ScenarioContext:
    """Lazily computed shared artifacts for one matrix invocation."""

    config: ExperimentConfig
    _gm: object = None
    _model: object = None
    _icfg: object = None
    _pure: Optional[RunHistory] = None
    _lr_phase1: object = None
    _lr_phase1_extra: dict = field(default_factory=dict)
    _lr_offline_hist: Optional[RunHistory] = None
    _lr_phase2: object = None
    _lr_phase2_extra: dict = field(default_factory=dict)

    @property
    def gm(self):
        if self._gm is None:
            self._gm = self.config.load_motion()
        return self._gm

    @property
    def model(self):
        if self._model is None:
            self._model = self.config.build_model()
        return self._model

    @property
    def icfg(self):
        if self._icfg is None:
            self._icfg = self.config.build_integrator(self.model)
        return self._icfg

    @property
    def n_ticks(self):
        cfg = self.config
        if cfg.duration is None:
            return len(self.gm.accel)
        return int(cfg.duration / cfg.dt + 1e-9) + 1

    def pure(self):
        if self._pure is None:
            self._pure = run_pure_fe(
                self.model, self.icfg, self.gm, n=self.n_ticks, name="pure-fe"
            )
        return self._pure

    def run_config(self, name, plant_mode, ats=False, delay_steps=None, pace=None):
        cfg = self.config
        return RunConfig(
            model=self.model,
            integrator=self.icfg,
            actuator=cfg.build_actuator(delay_steps=delay_steps),
            plant_mode=plant_mode,
            ats=cfg.build_ats(delay_steps=delay_steps) if ats else None,
            duration=cfg.duration,
            pace=cfg.pace if pace is None else pace,
            rate_hz=cfg.rate_hz,
            name=name,
        )

    def lr_phase1(self):
        """Linear surrogate trained on the pure run with synthetic delay."""
        if self._lr_phase1 is None:
            ds = build_lr_dataset(self.pure(), self.config.delay_steps)
            model = train_lr(ds)
            self._lr_phase1 = model
            self._lr_phase1_extra = {
                "phase": "synthetic",
                "rows": len(ds.targets),
                "delay_steps": ds.delay_steps,
                "condition_number": model.condition_number,
                "effective_rank": model.effective_rank,
            }
        return self._lr_phase1

    def lr_offline_history(self):
        """Loop run of the phase-1 model on its own feedback, plant recording."""
        if self._lr_offline_hist is None:
            driver = LrDriver(
                self.lr_phase1(),
                self.model.brace_stiffness,
                feedback="self",
            )
            rc = self.run_config("lr-offline", PlantMode.ONLINE)
            self._lr_offline_hist = run_hybrid(rc, self.gm, driver)
        return self._lr_offline_hist

    def lr_phase2(self):
        """Surrogate retrained on feedback the plant actually produced."""
        if self._lr_phase2 is None:
            ds = build_lr_dataset(self.lr_offline_history(), RECORDED_FEEDBACK_LAG)
            model = train_lr(ds)
            self._lr_phase2 = model
            self._lr_phase2_extra = {
                "phase": "recorded",
                "rows": len(ds.targets),
                "delay_steps": ds.delay_steps,
                "condition_number": model.condition_number,
                "effective_rank": model.effective_rank,
            }
        return self._lr_phase2


def _entry(ctx, name, history, extra=None):
    pure = ctx.pure()
    metrics = compute_metrics(
        pure.command,
        history.command,
        ctx.config.dt,
        reference_id="pure-fe",
        test_id=name,
    )
    entry = {
        "scenario": name,
        "description": DESCRIPTIONS[name],
        "metrics": metrics.to_json_dict(),
        "pacing": history.pacing.to_json_dict() if history.pacing else None,
    }
    if extra:
        entry["extra"] = extra
    return entry


def _scenario_pure_fe(ctx):
    hist = ctx.pure()
    entry = _entry(ctx, "pure-fe", hist)
    return entry, hist


def _scenario_fe_offline(ctx):
    rc = ctx.run_config("fe-offline", PlantMode.OFFLINE)
    hist = run_hybrid(rc, ctx.gm, FeDriver(ctx.model, ctx.icfg))
    pure = ctx.pure()
    extra = {
        "bit_identical_to_pure": bool(
            np.array_equal(hist.command, pure.command)
            and np.array_equal(hist.force, pure.force)
        )
    }
    return _entry(ctx, "fe-offline", hist, extra), hist


def _scenario_fe_online_uncompensated(ctx):
    rc = ctx.run_config("fe-online-uncompensated", PlantMode.ONLINE)
    hist = run_hybrid(rc, ctx.gm, FeDriver(ctx.model, ctx.icfg))
    return _entry(ctx, "fe-online-uncompensated", hist), hist


def _scenario_fe_online_ats(ctx):
    rc = ctx.run_config("fe-online-ats", PlantMode.ONLINE, ats=True)
    hist = run_hybrid(rc, ctx.gm, FeDriver(ctx.model, ctx.icfg))
    return _entry(ctx, "fe-online-ats", hist), hist


def _scenario_lr_pure(ctx):
    model = ctx.lr_phase1()
    hist = replay_lr(
        model, ctx.gm, ctx.model.brace_stiffness, n=ctx.n_ticks, name="lr-pure"
    )
    return _entry(ctx, "lr-pure", hist, dict(ctx._lr_phase1_extra)), hist


def _scenario_lr_offline(ctx):
    hist = ctx.lr_offline_history()
    return _entry(ctx, "lr-offline", hist, dict(ctx._lr_phase1_extra)), hist


def _scenario_lr_online(ctx):
    model = ctx.lr_phase2()
    driver = LrDriver(model, ctx.model.brace_stiffness, feedback="plant")
    rc = ctx.run_config("lr-online", PlantMode.ONLINE)
    hist = run_hybrid(rc, ctx.gm, driver)
    return _entry(ctx, "lr-online", hist, dict(ctx._lr_phase2_extra)), hist


def _scenario_rnn_sweep(ctx):
    from .surrogate_rnn import build_rnn_dataset, evaluate_hidden_size_sweep, rnn_forward

    pure = ctx.pure()
    ds = build_rnn_dataset(pure, ctx.config.delay_steps)
    base = ctx.config.build_rnn_train_config()
    sweep, models = evaluate_hidden_size_sweep(ds, base_config=base)
    best = models[sweep["best_size"]]
    pred = rnn_forward(best, ds.inputs)
    hist = RunHistory(
        dt=ctx.config.dt,
        gm_accel=pure.gm_accel.copy(),
        command=pred,
        compensated=pred.copy(),
        measured=pred.copy(),
        force=pure.force.copy(),
        vel=np.full(len(pred), np.nan),
        acc=np.full(len(pred), np.nan),
        name="rnn-sweep",
    )
    return _entry(ctx, "rnn-sweep", hist, sweep), hist


_SCENARIOS = {
    "pure-fe": _scenario_pure_fe,
    "fe-offline": _scenario_fe_offline,
    "fe-online-uncompensated": _scenario_fe_online_uncompensated,
    "fe-online-ats": _scenario_fe_online_ats,
    "lr-pure": _scenario_lr_pure,
    "lr-offline": _scenario_lr_offline,
    "lr-online": _scenario_lr_online,
    "rnn-sweep": _scenario_rnn_sweep,
}


def run_scenario(config, name, context=None):
    """Run one named scenario; returns (report entry, RunHistory)."""
    if name not in _SCENARIOS:
        known = ", ".join(SCENARIO_NAMES)
        raise ValueError(f"unknown scenario {name!r} (known: {known})")
    ctx = context or ScenarioContext(config)
    return _SCENARIOS[name](ctx)


def run_matrix(config, scenarios=None):
    """Run the requested scenarios (default: all) against one shared context.

    Returns (report, histories). The report is JSON-ready; histories maps
    scenario name to its RunHistory for artifact writing. Failures land in
    report["failed"] with the error message inline, and the rest of the
    batch still runs.
    """
    names = list(scenarios) if scenarios is not None else list(SCENARIO_NAMES)
    for name in names:
        if name not in _SCENARIOS:
            known = ", ".join(SCENARIO_NAMES)
            raise ValueError(f"unknown scenario {name!r} (known: {known})")
    ctx = ScenarioContext(config)
    ctx.gm  # unreadable/invalid records abort the batch up front
    entries = {}
    histories = {}
    failed = []
    for name in names:
        try:
            entry, hist = _SCENARIOS[name](ctx)
        except Exception as exc:
            entries[name] = {
                "scenario": name,
                "description": DESCRIPTIONS[name],
                "error": f"{type(exc).__name__}: {exc}",
            }
            failed.append(name)
            continue
        entries[name] = entry
        histories[name] = hist
    gm = ctx.gm
    report = {
        "config": config.echo(),
        "record": {
            "name": gm.name,
            "dt": gm.dt,
            "samples": len(gm.accel),
            "duration_s": gm.duration,
        },
        "scenarios": entries,
        "comparison": [
            {
                "scenario": name,
                "nrmse_percent": entries[name]["metrics"]["nrmse_percent"],
                "peak_error_percent": entries[name]["metrics"]["peak_error_percent"],
                "lag_ticks": entries[name]["metrics"]["lag_ticks"],
            }
            for name in names
            if "metrics" in entries[name]
        ],
        "failed": failed,
    }
    return report, histories


REPORT_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "required": ["config", "record", "scenarios", "comparison", "failed"],
    "additionalProperties": False,
    "properties": {
        "config": {"type": "object"},
        "record": {
            "type": "object",
            "required": ["name", "dt", "samples", "duration_s"],
            "properties": {
                "name": {"type": "string"},
                "dt": {"type": "number"},
                "samples": {"type": "integer"},
                "duration_s": {"type": "number"},
            },
        },
        "scenarios": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "required": ["scenario", "description"],
                "properties": {
                    "scenario": {"type": "string"},
                    "description": {"type": "string"},
                    "metrics": {
                        "type": "object",
                        "required": [
                            "nrmse_percent",
                            "peak_error_percent",
                            "max_abs_error_mm",
                            "lag_ticks",
                            "lag_s",
                            "reference_id",
                            "test_id",
                        ],
                    },
                    "pacing": {"type": ["object", "null"]},
                    "extra": {"type": "object"},
                    "error": {"type": "string"},
                },
            },
        },
        "comparison": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["scenario", "nrmse_percent", "peak_error_percent", "lag_ticks"],
            },
        },
        "failed": {"type": "array", "items": {"type": "string"}},
    },
}
