"""Regenerate the bundled benchmark ground motion.

The packaged record is synthetic: a seeded, band-limited stochastic motion
shaped to the familiar strong-motion template (Kanai-Tajimi-type spectrum
around 2.2 Hz, ramp/hold/decay envelope, PGA scaled to 0.35 g, 40 s at
dt = 0.02 s). It stands in for a classic El-Centro-class NS record; every
comparison in the package is internal, so any fixed record serves. Content
is capped at 8 Hz so linear-interpolation resampling onto the 2048 Hz
simulation grid preserves signal energy to well within 1%.

Running this script rewrites src/rthslab/data/elcentro_class_synthetic.at2
byte-identically (fixed seed).
"""

import pathlib

import numpy as np

SEED = 20260814
DT = 0.02
N_OUT = 2001          # 40 s inclusive of both endpoints
N_FFT = 4096
PGA_G = 0.35


def synthesize():
    rng = np.random.default_rng(SEED)
    freqs = np.fft.rfftfreq(N_FFT, DT)
    w = 2.0 * np.pi * freqs

    # Kanai-Tajimi-shaped amplitude around 2.2 Hz
    wg = 2.0 * np.pi * 2.2
    zg = 0.55
    num = wg ** 4 + (2.0 * zg * wg * w) ** 2
    den = (wg ** 2 - w ** 2) ** 2 + (2.0 * zg * wg * w) ** 2
    amp = np.sqrt(num / den)

    # high-pass below 0.3 Hz (drift control), low-pass 5 -> 8 Hz
    hp = np.clip((freqs - 0.10) / 0.20, 0.0, 1.0)
    hp = hp * hp * (3.0 - 2.0 * hp)
    lp = np.clip((8.0 - freqs) / 3.0, 0.0, 1.0)
    lp = lp * lp * (3.0 - 2.0 * lp)
    amp = amp * hp * lp

    phases = rng.uniform(0.0, 2.0 * np.pi, len(freqs))
    spectrum = amp * np.exp(1j * phases)
    spectrum[0] = 0.0
    x = np.fft.irfft(spectrum, n=N_FFT)[:N_OUT]

    t = np.arange(N_OUT) * DT
    env = np.ones(N_OUT)
    rise = t < 2.0
    env[rise] = (t[rise] / 2.0) ** 2
    tail = t > 10.0
    env[tail] = np.exp(-0.12 * (t[tail] - 10.0))
    x = x * env

    # remove residual mean/trend, then scale the peak to the target PGA
    coeffs = np.polyfit(t, x, 1)
    x = x - np.polyval(coeffs, t)
    x = PGA_G * x / np.max(np.abs(x))
    return x


def write_at2(path, accel_g):
    lines = [
        "SYNTHETIC BROADBAND GROUND MOTION, EL-CENTRO CLASS (SEEDED STOCHASTIC MODEL)",
        "BENCHMARK INPUT FOR THE VIRTUAL RTHS LABORATORY, HORIZONTAL COMPONENT",
        "ACCELERATION TIME SERIES IN UNITS OF G",
        f"NPTS= {len(accel_g):5d}, DT= {DT:.4f} SEC",
    ]
    body = []
    for i in range(0, len(accel_g), 5):
        chunk = accel_g[i : i + 5]
        body.append("".join(f"{v:15.7E}" for v in chunk))
    pathlib.Path(path).write_text("\n".join(lines + body) + "\n")


if __name__ == "__main__":
    here = pathlib.Path(__file__).resolve().parent
    target = here.parent / "src" / "rthslab" / "data" / "elcentro_class_synthetic.at2"
    target.parent.mkdir(parents=True, exist_ok=True)
    accel = synthesize()
    write_at2(target, accel)
    print(f"wrote {target} (PGA {np.max(np.abs(accel)):.3f} g, {len(accel)} pts)")
