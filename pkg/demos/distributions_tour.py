"""Histograms of |E| for product, Bell and maximally mixed states.

Writes TSV histograms next to the reference curves so any plotting tool can
overlay them, and runs the product-distribution test on a few cuts.
"""
from pathlib import Path

import numpy as np

from randcorr import DensityMatrix, bell_state, make_reference_state, product_state, run_experiment
from randcorr.distributions import histogram, law_test, product_distribution_test, theoretical_density
from randcorr.io import write_curve, write_histogram

out = Path("demo_out")
out.mkdir(exist_ok=True)

# %% pure products: |E| is a product of n uniforms
for n in range(1, 5):
    ds = run_experiment(product_state(*[[1, 0]] * n), 20_000, seed=n)
    e = ds.values((1 << n) - 1)
    write_histogram(histogram(ds, (1 << n) - 1, density=True), out / f"product_{n}.tsv")
    grid = np.linspace(0, 1, 201)[1:]
    write_curve(grid, theoretical_density("product-pure", grid, n), out / f"product_{n}_curve.tsv")
    print(n, law_test(e, "product-pure", n))

# %% Bell pair is flat; maximally mixed is a narrow spike set by the shot count
print("bell", law_test(run_experiment(bell_state(), 20_000, seed=0).values(3), "uniform"))
mixed = run_experiment(DensityMatrix.maximally_mixed(1), 20_000, 475, seed=0)
print("mixed qubit std", mixed.values(1).std(), "~ 1/sqrt(475) =", 1 / np.sqrt(475))

# %% product-distribution test on the trisep state
ds = run_experiment(make_reference_state("trisep"), 5000, seed=3)
for a, b in [([1, 2], [3, 4]), ([1], [2]), ([3], [4])]:
    res = product_distribution_test(ds, a, b)
    print(a, b, res.verdict, round(res.statistic, 4))
