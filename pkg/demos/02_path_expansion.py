"""
Sums over paths
===============

Away from the origin the eigenfunction solves a recursion whose solution is
a sum over lattice paths that avoid the origin.  Counting those paths gives
Catalan numbers; summing them gives the closed form.
"""

# %%
from brwre.env import EnvironmentSpec, MuDistribution, constant_environment, sample_environment
from brwre.paths import (catalan, path_count, u1_constant_closed_form, u_path_profile,
                         u_path_series, verify_resolvent_identity)
from brwre.spectral import build_hamiltonian, eigenfunction, top_eigenvalue

# %%
# First-passage paths from 1 to 0 of odd length 2k+1 are counted by C_k.
print([path_count(1, 2 * k + 1) for k in range(8)])
print([catalan(k) for k in range(8)])
print("paths from 3 to 0 in 9 steps:", path_count(3, 9))

# %%
# In a constant environment the series has a closed form.
kappa, lam = 2.0, 1.0
res = u_path_series(constant_environment(0.0, 200), EnvironmentSpec(1.0, kappa, 0.0), lam, 1)
print(f"series {res.value:.15f} ({res.terms_used} steps, tail <= {res.tail_bound:.1e})")
print(f"closed {u1_constant_closed_form(kappa, lam, 0.0):.15f}")

# %%
# At the operator's own eigenvalue the path series is the eigenfunction.
spec = EnvironmentSpec(1.0, 1.0, 1.0, MuDistribution(0.3, 0.3, 0.4))
w = sample_environment(spec, 400, seed=11)
op = build_hamiltonian(w, spec)
lam = top_eigenvalue(op)
u_eig, _ = eigenfunction(op, lam)
u_path, _ = u_path_profile(w, spec, lam)
for x in range(-3, 4):
    print(f"x={x:+d}  eigenvector {u_eig[400 + x]:.10f}  path series {u_path[400 + x]:.10f}")
print("recursion residual:", verify_resolvent_identity(w, spec, lam, u_path))
