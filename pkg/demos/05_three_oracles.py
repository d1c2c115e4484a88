"""
Three ways to measure one growth rate
=====================================

The top eigenvalue, the slope of the mean particle number from the moment
equation, and the slope of replica-averaged particle simulations should all
agree for a fixed supercritical environment.
"""

# %%
import numpy as np

from brwre.brw_sim import empirical_growth_rate, run_replicas
from brwre.env import EnvironmentSpec, MuDistribution, sample_environment
from brwre.evolver import evolution_half_width, growth_rate, integrate_moments
from brwre.spectral import build_hamiltonian, top_eigenvalue

spec = EnvironmentSpec(1.0, 1.0, 1.0, MuDistribution.bernoulli(0.5))
lam = top_eigenvalue(build_hamiltonian(sample_environment(spec, 400, seed=11), spec))
t_end = 50 / lam
w = sample_environment(spec, evolution_half_width(spec.kappa, t_end), seed=11)

# %%
traj = integrate_moments(w, spec, 0, t_end)
print(f"spectral   {lam:.6f}")
print(f"evolver    {growth_rate(traj, 0):.6f}  (site 3: {growth_rate(traj, 3):.6f})")
print(f"simulator  {empirical_growth_rate(spec, w, 5000, 20.0, seed=5):.6f}")

# %%
# Site by site at t = 5: simulated means against the moment equation.
times = np.linspace(0, 5, 6)
s = run_replicas(w, spec, times, 5000, seed=6)
m = integrate_moments(w, spec, 0, 5.0, n_records=6)
for x in range(-3, 4):
    print(f"x={x:+d}  simulated {s.site_mean(x)[-1]:.4f} +- {s.site_stderr(x)[-1]:.4f}"
          f"   moment equation {m.at_site(x)[-1]:.4f}")
