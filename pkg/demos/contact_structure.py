# %% [markdown]
# # Jacobi defect of the contact bracket
#
# A particle in R^3 obeys the contact constraint zdot = x ydot.  We build
# its constrained almost-Poisson bracket from the Heisenberg frame, measure
# the Jacobi defect [B, B], and ask whether a Jacobi structure or a
# conformal factor exists before and after dropping the z fiber.

# %%
from almostpoisson import jacobi, presets
from almostpoisson.exterior import exterior_derivative, invert_bivector

system = presets.build_preset("contact-euclidean")
print("Hamiltonian in quasi-momenta:", system.hamiltonian)
print("u3 on the constraint:", system.constrained.elimination["u3"])

# %% [markdown]
# ## Constrained bracket on (x, y, z, u1, u2)

# %%
B = system.constrained.bivector
print(B)
print("[B, B] =", jacobi.jacobi_defect(B))
verdict = jacobi.classify(B)
print(verdict)
residuals = [r for _, r in verdict.diagnostics["pointwise"]]
print(f"least-squares residual of 2 E^B = [B,B] over {len(residuals)} points: "
      f"{min(residuals):.3f} .. {max(residuals):.3f}")

# %% [markdown]
# ## Compressed bracket on (x, y, u1, u2)
#
# The z fiber is a symmetry, so it can be dropped.  The remaining bracket
# fails Jacobi too, but only by a conformal factor.

# %%
Bbar = system.compressed.bivector
print("[Bbar, Bbar] =", jacobi.jacobi_defect(Bbar))
E = jacobi.solve_E_symbolic_compressed(Bbar)
print("E =", E)
print("L_E Bbar =", jacobi.check_LE(Bbar, E))
v = jacobi.classify(Bbar)
print(v)

Omega = invert_bivector(Bbar)
closed = exterior_derivative(Omega.scale(v.f.expr))
print("d(f Omega) vanishes:", closed.is_zero(tol=1e-9))

# %% [markdown]
# ## The other presets

# %%
for name in ("contact-orthonormal", "contact-heisenberg", "contact-general-metric"):
    s = presets.build_preset(name)
    print(f"{name:24} constrained: {jacobi.classify(s.constrained.bivector).tag:12} "
          f"compressed: {jacobi.classify(s.compressed.bivector)}")
