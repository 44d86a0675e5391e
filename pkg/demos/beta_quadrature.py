"""
Expected failure degree of a continuous model
=============================================

A Beta(a, b) failure degree has mean a / (a + b).  The library gets it by
adaptive Gauss-Kronrod quadrature, which also works for densities with no
closed form.
"""

# %%
import numpy as np

from mitigation_sil.expectation import BetaDensity, adaptive_quadrature, expect_continuous, expect_failure

# With a or b below 1 the density is infinite at an end point.  The mapping
# x = t^2 (3 - 2t) flattens both ends, and the upper half is integrated in
# 1 - x, which BetaDensity supplies through reflected_pdf.
for a, b in [(2, 8), (1, 1), (0.5, 0.5), (8, 0.5), (0.3, 0.2)]:
    print(a, b, expect_failure(BetaDensity(a, b)), a / (a + b))

# %%
# Any vectorised density on [0, 1] works, e.g. a triangular one peaking at 0.2.
def triangular(x, c=0.2):
    return np.where(x < c, 2 * x / c, 2 * (1 - x) / (1 - c))

print(expect_continuous(triangular), (0 + 1 + 0.2) / 3)

# %%
# The integrator itself.  The 15-point Kronrod rule is exact for
# polynomials up to degree 22, so one interval is enough here.
value, err = adaptive_quadrature(lambda x: x**22, 0.0, 1.0)
print(value, 1 / 23, err)

# %%
# A density that does not integrate to one is rejected.
try:
    expect_continuous(lambda x: 3 * np.ones_like(x))
except ValueError as exc:
    print(type(exc).__name__, exc)
