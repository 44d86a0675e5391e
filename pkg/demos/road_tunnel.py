"""
Road tunnel fire: five functions sharing ten subsystems
=======================================================

Severity is on a fatality-equivalent scale, and the tolerable risk comes
from five consequence segments rather than a single number.
"""

# %%
import numpy as np

from mitigation_sil.allocate import allocate
from mitigation_sil.model import subsystems_of
from mitigation_sil.risk import (
    assess,
    function_success,
    severity_from_fwi,
    tolerable_expected_consequence,
    tolerable_risk,
)
from mitigation_sil.scenario_io import emit_report, load_fixture

tunnel = load_fixture("tunnel")
print(tunnel.function_ids, tunnel.contributions)

# %%
# Which subsystems does each function need?
for fid in tunnel.function_ids:
    print(fid, subsystems_of(tunnel, fid))

print(tunnel.mapping.array)

# %%
# Segment severities come from the weighted-injury scale.  The default
# weights are one national convention; pass your own table where needed.
for category in ("fatality", "permanent_disability", "hospitalisation", "medical_treatment", "first_aid"):
    print(category, round(severity_from_fwi({category: 1}), 3))

# %%
r_bar = tolerable_risk(tunnel.consequence)          # sum of tolerable frequency x severity
ec_bar = tolerable_expected_consequence(tunnel, r_bar)
print(r_bar, ec_bar)

# %%
# The agreed expected failure degrees.
eq = np.array([1.2e-4, 9.0e-5, 1.0e-2, 9.0e-5, 1.4e-2, 2.0e-3, 2.0e-3, 2.0e-4, 1.4e-2, 3.6e-2])
for k, fid in enumerate(tunnel.function_ids):
    print(fid, function_success(eq, tunnel.mapping, k))

print(emit_report(assess(tunnel, eq)))

# %%
# What if every subsystem got half its agreed value?  And double?
for factor in (0.5, 2.0):
    a = assess(tunnel, eq * factor)
    print(factor, a.verdict, a.expected_consequence)

# %%
# Keep the agreed proportions and let the solver find how far they can be
# scaled.  The published vector has a little room left.
res = allocate(tunnel, eq)
print(res.scale, res.slack)
