"""Detecting entanglement from random-setting correlations.

Simulate the four 4-qubit reference states, estimate second moments with the
finite-shot bias removed, and print the witness table for each.
"""
import numpy as np

from randcorr import make_reference_state, run_experiment, witness_report
from randcorr.io import pretty_report
from randcorr.quantum import correlation_tensor
from randcorr.witnesses import exact_report

N_SETTINGS = 10_000
N_SHOTS = 475

# %% GHZ: exact numbers first
ghz = make_reference_state("ghz")
exact = exact_report(correlation_tensor(ghz))
print("exact GHZ witness", exact.witness, "vs 2/27 =", 2 / 27)

# %% the same from simulated data
for kind, phi in [("ghz", None), ("cluster", None), ("trisep", None), ("bisep", 0.2)]:
    ds = run_experiment(make_reference_state(kind, phi), N_SETTINGS, N_SHOTS, seed=1)
    rep = witness_report(ds)
    print()
    print(f"== {kind} ==")
    print(pretty_report(rep))

# %% how the raw estimate is biased by shot noise
ds = run_experiment(ghz, N_SETTINGS, N_SHOTS, seed=2)
e = ds.values([1, 2, 3, 4])
print()
print("raw m_1234      ", np.mean(e**2))
print("expected bias    ", (1 - 1 / 9) / N_SHOTS)
