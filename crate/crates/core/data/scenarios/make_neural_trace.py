"""Writes neural_trace.csv: 800 ms of synthetic extracellular signal at 10 kS/s.

Background is a few LFP rhythms plus band-limited noise; three units fire
Poisson spike trains with distinct biphasic waveforms. Fixed seed, standard
library only, so the file is reproducible byte for byte.
"""
import math
import random

FS = 10_000.0
DURATION = 0.8
rng = random.Random(20)
n = int(FS * DURATION)

lfp = [(8.0, 250e-6), (21.0, 90e-6), (63.0, 40e-6)]
phases = [rng.uniform(0, 2 * math.pi) for _ in lfp]
x = [sum(a * math.sin(2 * math.pi * f * i / FS + p) for (f, a), p in zip(lfp, phases)) for i in range(n)]

# one-pole low-passed white noise, ~20 uV rms
y = 0.0
for i in range(n):
    y = 0.7 * y + 0.3 * rng.gauss(0.0, 45e-6)
    x[i] += y


def spike(t, width, amp):
    # negative Gaussian-derivative-like biphasic shape
    u = t / width
    return -amp * (1 - u * u) * math.exp(-u * u / 2)


units = [(12.0, 0.25e-3, 320e-6), (25.0, 0.18e-3, 180e-6), (6.0, 0.35e-3, 450e-6)]
for rate, width, amp in units:
    t = rng.expovariate(rate)
    while t < DURATION:
        k0 = int(t * FS)
        for k in range(max(0, k0 - 20), min(n, k0 + 30)):
            x[k] += spike(k / FS - t, width, amp)
        t += 2e-3 + rng.expovariate(rate)

with open("neural_trace.csv", "w", newline="\n") as f:
    f.write("time_s,volts\n")
    for i, v in enumerate(x):
        f.write(f"{i / FS:.6f},{v:.9e}\n")
