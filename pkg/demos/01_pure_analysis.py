"""Tour of the analytical side: model, integrator, and the exact oracle.

Builds the default one-story braced-frame model, advances it through the
bundled ground motion with the explicit integrator at 2048 Hz, and scores
the result against the piecewise-exact solution of the same linear system.
Run it from anywhere; figures land in demos/output/.
"""

import pathlib
import time

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

import rthslab as lab

OUT = pathlib.Path(__file__).resolve().parent / "output"
OUT.mkdir(exist_ok=True)

# --- 1. the structural model -------------------------------------------
#
# One story, one DOF. The frame (mass, damping, frame stiffness) is the
# analytical substructure; the diagonal brace is the part a physical rig
# would test, so its stiffness is carried separately.

cfg = lab.ExperimentConfig()
model = cfg.build_model()

print("model:")
print(f"  mass              m   = {model.mass} kN s^2/mm")
print(f"  frame stiffness   k_f = {model.frame_stiffness} kN/mm")
print(f"  brace stiffness   k_e = {model.brace_stiffness:.6f} kN/mm")
print(f"  damping ratio     z   = 0.02  ->  c = {model.damping:.6f} kN s/mm")
print(f"  natural period    T   = {model.period:.6f} s")

icfg = cfg.build_integrator(model)
print(f"integrator ({icfg.scheme.value}):")
print(f"  dt    = {icfg.dt} s  ({1.0 / icfg.dt:.0f} Hz)")
print(f"  beta1 = {icfg.beta1!r}")
print(f"  beta2 = {icfg.beta2!r}")

# --- 2. the ground motion ----------------------------------------------
#
# The bundled record is a synthetic El-Centro-class motion (40 s at 100 Hz,
# PGA 0.35 g). load_motion() parses it and resamples onto the loop grid.

gm = cfg.load_motion()
print("record:")
print(f"  {gm.name}: {len(gm.accel)} samples at dt = {gm.dt} s "
      f"({gm.duration:.1f} s)")
print(f"  PGA = {np.max(np.abs(gm.accel)):.4f} mm/s^2 "
      f"= {np.max(np.abs(gm.accel)) / 9806.65:.3f} g")

# --- 3. pure analytical run --------------------------------------------
#
# No plant in the loop: the brace force is k_e times the commanded
# displacement. This trajectory is the reference every hybrid run is
# scored against, and the training source for both surrogates.

t0 = time.perf_counter()
pure = lab.run_pure_fe(model, icfg, gm)
runtime = time.perf_counter() - t0
print(f"pure run: {len(pure)} ticks in {runtime:.3f} s wall "
      f"({gm.duration / runtime:.0f}x real time)")
print(f"  peak displacement = {np.max(np.abs(pure.command)):.4f} mm")
print(f"  peak brace force  = {np.max(np.abs(pure.force)):.4f} kN")

# --- 4. exact oracle ----------------------------------------------------
#
# The same linear ODE has a piecewise-exact solution for piecewise-linear
# excitation. The integrator should track it to a small fraction of a
# percent at this rate.

exact = lab.exact_linear_response(model, gm)
m = lab.compute_metrics(exact.x, pure.command, icfg.dt,
                        reference_id="exact", test_id="chang")
print("integrator vs exact solution:")
print(f"  nRMSE = {m.nrmse_percent:.6f} %")
print(f"  peak  = {m.peak_error_percent:.6f} %")
print(f"  lag   = {m.lag_ticks} ticks")

# --- 5. a second scheme as cross-check ----------------------------------

icfg_cd = lab.IntegratorConfig.for_model(model, cfg.dt,
                                         lab.Scheme.CENTRAL_DIFFERENCE)
pure_cd = lab.run_pure_fe(model, icfg_cd, gm, name="pure-cd")
m_cd = lab.compute_metrics(exact.x, pure_cd.command, icfg.dt)
print(f"central difference vs exact: nRMSE = {m_cd.nrmse_percent:.6f} %")

# --- 6. figures ----------------------------------------------------------

t = pure.t
fig, axes = plt.subplots(3, 1, figsize=(10, 8), sharex=True)
axes[0].plot(t, pure.gm_accel / 9806.65, lw=0.4, color="0.3")
axes[0].set_ylabel("ground accel [g]")
axes[0].set_title("bundled record and pure analytical response")
axes[1].plot(t, exact.x, lw=1.2, label="exact", color="0.7")
axes[1].plot(t, pure.command, lw=0.5, label="integrator", color="C0")
axes[1].set_ylabel("displacement [mm]")
axes[1].legend(loc="upper right")
axes[2].plot(t, pure.command - exact.x, lw=0.4, color="C3")
axes[2].set_ylabel("error [mm]")
axes[2].set_xlabel("time [s]")
fig.tight_layout()
fig.savefig(OUT / "01_pure_vs_exact.png", dpi=150)
print(f"wrote {OUT / '01_pure_vs_exact.png'}")

# zoom on the strong-motion window where the peaks live
fig, ax = plt.subplots(figsize=(10, 3.5))
sel = (t >= 4.0) & (t <= 12.0)
ax.plot(t[sel], exact.x[sel], lw=1.6, color="0.75", label="exact")
ax.plot(t[sel], pure.command[sel], lw=0.6, color="C0", label="integrator")
ax.set_xlabel("time [s]")
ax.set_ylabel("displacement [mm]")
ax.set_title("strong-motion window")
ax.legend(loc="upper right")
fig.tight_layout()
fig.savefig(OUT / "01_strong_motion_zoom.png", dpi=150)
print(f"wrote {OUT / '01_strong_motion_zoom.png'}")
