"""
How likely is growth?
=====================

For random killing the answer depends on the environment.  Here we estimate
the probability of a positive eigenvalue by sampling, and sandwich it between
the analytic bounds, over a range of source intensities.
"""

# %%
from brwre.env import EnvironmentSpec, MuDistribution
from brwre.probability import CSV_HEADER, BoundsConfig, bounds_report

spec = EnvironmentSpec(0.0, 1.0, 1.0, MuDistribution.bernoulli(0.5))
config = BoundsConfig(n_envs=1000, seed=1)

# %%
# Every row is checked for the ordering lower <= estimate <= upper
# (up to three standard errors) before it is returned.
print(",".join(CSV_HEADER))
for lam in (0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8):
    r = bounds_report(spec.with_lambda(lam), config)
    print(",".join("" if v == "" else f"{v:.4g}" if isinstance(v, float) else str(v)
                   for v in r.csv_row()))

# %%
# The same rows are available from the command line:
#   brwre sweep --lambda-grid 0.2:0.8:0.1 --seed 1 --n-envs 1000
