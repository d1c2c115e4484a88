"""
Closed-form criteria
====================

Several environments are simple enough to decide by formula: all sites
killed at the maximum rate, only the two neighbours of the origin killed,
or a killing-free island around the origin.
"""

# %%
import math

from brwre.criteria import (as_supercritical_threshold, eigenvalue_interval, find_l_hat,
                            island_lambda, two_point_eigenvalue_symmetric, two_point_threshold)
from brwre.env import EnvironmentSpec, island_environment, two_point_environment
from brwre.spectral import build_hamiltonian, has_positive_eigenvalue, top_eigenvalue

# %%
# Above this source intensity every environment with killing <= c grows.
print("threshold for kappa=1, c=1:", as_supercritical_threshold(1.0, 1.0), math.sqrt(3) - 1)
iv = eigenvalue_interval(2.0, 1.0, 1.0)
print(f"eigenvalue range at source 2: [{iv.lower:.6f}, {iv.upper:.6f}]")

# %%
# Two killing neighbours: the verdict flips exactly at the formula.
kappa, mu = 2.0, 1.0
thr = two_point_threshold(kappa, mu, mu)
w = two_point_environment(mu, mu, 400)
for lam in (thr - 0.05, thr + 0.05):
    print(f"source {lam:.2f}: positive eigenvalue? {has_positive_eigenvalue(w, EnvironmentSpec(lam, kappa, 1.0))}")
print("cubic root   ", two_point_eigenvalue_symmetric(1.5, kappa, mu))
print("eigensolver  ", top_eigenvalue(build_hamiltonian(w, EnvironmentSpec(1.5, kappa, 1.0))))

# %%
# Islands: the smallest radius whose equation has a root.
for lam_src in (0.1, 0.2, 0.4, 0.8):
    l_hat = find_l_hat(lam_src, 1.0, 1.0, 60)
    print(f"source {lam_src}: l_hat = {l_hat}")

# %%
# The island root is a lower bound for the island environment's eigenvalue.
for l in (2, 4, 8):
    root = island_lambda(0.4, 1.0, 1.0, l)
    exact = top_eigenvalue(build_hamiltonian(island_environment(l, 1.0, 400),
                                             EnvironmentSpec(0.4, 1.0, 1.0)))
    print(f"l={l}: island bound {root:.6f} <= eigenvalue {exact:.6f}")
