"""Regenerates data/example_survival.csv: 75 simulated patients, times in years.

Mixture cure model (cure fraction 0.5, uncured survival exponential with
rate 1.2/year), administrative censoring uniform on 4.5-35.1 months.
"""
import numpy as np

rng = np.random.default_rng(20180624)
n = 75
cured = rng.random(n) < 0.5
event_time = np.where(cured, np.inf, rng.exponential(1 / 1.2, n))
censor = rng.uniform(4.5, 35.1, n) / 12.0
time = np.minimum(event_time, censor)
status = (event_time <= censor).astype(int)

with open("data/example_survival.csv", "w") as f:
    f.write("time,status\n")
    for t, s in zip(time, status):
        f.write(f"{t:.4f},{s}\n")
