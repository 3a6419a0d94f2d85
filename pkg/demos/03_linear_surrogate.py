"""Replacing the analytical substructure with a linear regression.

Two-phase protocol. Phase 1 trains on the pure analytical run with a
synthetic feedback delay matched to the plant, then validates the model
both in open-loop replay and in the closed loop on its own feedback
(lr-offline) while the plant records what actually happened. Phase 2
retrains on that recording and deploys against live plant feedback
(lr-online).
"""

import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

import rthslab as lab

OUT = pathlib.Path(__file__).resolve().parent / "output"
OUT.mkdir(exist_ok=True)

cfg = lab.ExperimentConfig()
model = cfg.build_model()
icfg = cfg.build_integrator(model)
gm = cfg.load_motion()
ke = model.brace_stiffness

pure = lab.run_pure_fe(model, icfg, gm)

# --- 1. phase-1 dataset and fit ------------------------------------------
#
# Features per tick i (predicting displacement x[i]):
#   ground accel, delayed displacement feedback, delayed force feedback,
#   and the two previous predictions. On pure-run data the force column is
#   exactly k_e times the displacement column, so the design matrix is
#   rank deficient by construction; the minimum-norm solve handles it and
#   the model records the diagnosis.

ds1 = lab.build_lr_dataset(pure, cfg.delay_steps)
print(f"phase-1 dataset: {len(ds1)} rows, delay {ds1.delay_steps} ticks, "
      f"checksum {ds1.checksum[:12]}")

lr1 = lab.train_lr(ds1)
print("phase-1 model:")
for name, w in zip(lr1.feature_names, lr1.weights):
    print(f"  {name:18s} {w: .6e}")
print(f"  effective rank {lr1.effective_rank} of {len(lr1.weights)}, "
      f"condition number {lr1.condition_number:.3e}")

# --- 2. open-loop replay --------------------------------------------------

replay = lab.replay_lr(lr1, gm, ke, n=len(pure))
err_replay = lab.nrmse(pure.command, replay.command)
print(f"open-loop replay vs pure: nRMSE = {err_replay:.6f} %")

# --- 3. closed loop on self feedback (lr-offline) -------------------------
#
# The driver consumes its own delayed predictions; the plant runs in
# measured-force mode purely to record genuine actuator feedback for
# phase 2.

drv = lab.LrDriver(lr1, ke, feedback="self")
rc = lab.RunConfig(model=model, integrator=icfg,
                   actuator=cfg.build_actuator(),
                   plant_mode=lab.PlantMode.ONLINE, name="lr-offline")
offline = lab.run_hybrid(rc, gm, drv)
err_off = lab.nrmse(pure.command, offline.command)
print(f"lr-offline (self feedback) vs pure: nRMSE = {err_off:.6f} %")

# --- 4. phase 2: retrain on the recording, deploy on plant feedback -------
#
# During a live run the driver sees the previous tick's plant outputs, so
# the recorded feedback columns lag the commands by one tick.

ds2 = lab.build_lr_dataset(offline, 1)
lr2 = lab.train_lr(ds2)
drv2 = lab.LrDriver(lr2, ke, feedback="plant")
rc = lab.RunConfig(model=model, integrator=icfg,
                   actuator=cfg.build_actuator(),
                   plant_mode=lab.PlantMode.ONLINE, name="lr-online")
online = lab.run_hybrid(rc, gm, drv2)
err_on = lab.nrmse(pure.command, online.command)
print(f"lr-online (plant feedback, delay 28, no compensator) vs pure: "
      f"nRMSE = {err_on:.6f} %")

# --- 5. figures ------------------------------------------------------------

t = pure.t
fig, axes = plt.subplots(2, 1, figsize=(10, 6.5), sharex=True)
sel = (t >= 4.0) & (t <= 12.0)
axes[0].plot(t[sel], pure.command[sel], lw=1.8, color="0.78", label="pure")
axes[0].plot(t[sel], replay.command[sel], lw=0.6, color="C0",
             label=f"replay ({err_replay:.3f} %)")
axes[0].plot(t[sel], online.command[sel], lw=0.6, color="C2", ls="--",
             label=f"lr-online ({err_on:.3f} %)")
axes[0].set_ylabel("displacement [mm]")
axes[0].set_title("linear surrogate vs analytical reference")
axes[0].legend(loc="upper right")
axes[1].plot(t, replay.command - pure.command, lw=0.4, color="C0",
             label="replay error")
axes[1].plot(t, online.command - pure.command, lw=0.4, color="C2",
             label="lr-online error")
axes[1].set_xlabel("time [s]")
axes[1].set_ylabel("error [mm]")
axes[1].legend(loc="upper right")
fig.tight_layout()
fig.savefig(OUT / "03_lr_surrogate.png", dpi=150)
print(f"wrote {OUT / '03_lr_surrogate.png'}")

fig, ax = plt.subplots(figsize=(7, 4))
idx = np.arange(len(lr1.weights))
ax.bar(idx - 0.2, lr1.weights, width=0.4, label="phase 1 (synthetic)")
ax.bar(idx + 0.2, lr2.weights, width=0.4, label="phase 2 (recorded)")
ax.set_xticks(idx)
ax.set_xticklabels(lr1.feature_names, rotation=20, ha="right")
ax.set_ylabel("weight")
ax.set_title("fitted weights by training phase")
ax.legend()
fig.tight_layout()
fig.savefig(OUT / "03_lr_weights.png", dpi=150)
print(f"wrote {OUT / '03_lr_weights.png'}")
