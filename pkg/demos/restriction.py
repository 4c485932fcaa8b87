# %% [markdown]
# # When does the compressed bracket stay Jacobi?
#
# For a Hamiltonian whose u3 mixing gives ratios r13 = gamma13/gamma33 and
# r23 = gamma23/gamma33, the compressed bivector carries
# (r13 u1 + r23 u2) du1^du2.  The candidate E = r23 d/du1 - r13 d/du2
# always solves 2 E^B = [B, B]; Jacobi then needs
# d(r13)/dx + d(r23)/dy = 0.

# %%
from almostpoisson import framecraft as fc
from almostpoisson import jacobi, presets
from almostpoisson.config import loads

TEMPLATE = """
[system]
name = mixing
chart = x, y, z
m = 2
fiber = z

[frame]
e1 = 1, 0, 0
e2 = 0, 1, x
e3 = 0, 0, 1

[hamiltonian]
expr = 1/2*(u1^2 + u2^2 + u3^2) + ({c})*u1*u3
"""

for c in ("0", "x", "y", "x*y", "1/(1 + y^2)"):
    s = presets.build(loads(TEMPLATE.format(c=c)))
    a, b = jacobi.compressed_ratios(s.compressed.bivector)
    r = jacobi.restriction_condition(a, b)
    print(f"gamma13 = {c:12} restriction = {str(r):12} verdict = {jacobi.classify(s.compressed.bivector)}")

# %% [markdown]
# ## Metrics
#
# The ratios also follow from the metric through cofactors.  For the
# Euclidean and Heisenberg metrics the restriction holds.

# %%
for name in ("contact-euclidean", "contact-heisenberg", "contact-general-metric"):
    s = presets.build_preset(name)
    r13, r23 = fc.gamma_ratios_closed_form(s.metric)
    print(f"{name:24} r13 = {r13}, r23 = {r23}, restriction = {jacobi.restriction_condition(r13, r23)}")
