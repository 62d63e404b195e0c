"""
Experiment sweeps
=================

The experiment harness writes one CSV per sweep; the same runs are available
from the command line as ``floatpoly experiment <name>``.
"""
# %%
from floatpoly import run

result = run({"experiment": "thm1", "n_grid": [1000, 10_000], "trials": 5, "master_seed": 1})
for r in result.select(row="summary"):
    print(r["metric"], r["n"], r["value"])

# %%
lemma = run({"experiment": "lemma2", "density": {"class": "gaussian"}, "n_grid": [100, 1000], "trials": 2000})
print(lemma.csv())
