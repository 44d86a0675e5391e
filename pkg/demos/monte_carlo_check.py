"""
Checking the analytic expectation by simulation
===============================================

Because subsystems fail independently, E[C] only needs E[q] of each
subsystem.  Sampling the full failure models should agree with that.
"""

# %%
import numpy as np

from mitigation_sil.expectation import BetaDensity, Binary, ModularBinomial, mc_expected_consequence, sample_failure
from mitigation_sil.model import validate_scenario
from mitigation_sil.risk import expected_consequence
from mitigation_sil.scenario_io import load_fixture, scenario_to_document

tunnel = load_fixture("tunnel")
eq = [1.2e-4, 9.0e-5, 1.0e-2, 9.0e-5, 1.4e-2, 2.0e-3, 2.0e-3, 2.0e-4, 1.4e-2, 3.6e-2]

# %%
analytic = expected_consequence(eq, tunnel)
est = mc_expected_consequence(tunnel, 200_000, seed=2024)
print(analytic, est.mean, est.stderr, (est.mean - analytic) / est.stderr)

# %%
# Same seed, different chunking and threads: same answer, bit for bit.
print(mc_expected_consequence(tunnel, 200_000, 2024, chunk_size=5000, workers=4) == est)

# %%
# Swap the operator and user models for proportional ones with a spread.
# The mean is unchanged, so the analytic E[C] is too.
doc = scenario_to_document(tunnel)
for sub in doc["subsystems"]:
    if sub["id"] in ("TOp", "TUs"):
        q = sub["model"]["expected_fraction"]
        sub["model"]["params"] = {"distribution": "beta", "alpha": 0.5, "beta": 0.5 * (1 - q) / q}
spread = validate_scenario(doc)
est = mc_expected_consequence(spread, 200_000, seed=7)
print(analytic, est.mean, est.stderr)

# %%
# Individual draws.
print(sample_failure(Binary(0.1), 1, size=10))
print(sample_failure(ModularBinomial(0.3, 4), 1, size=10))
draws = sample_failure(BetaDensity(2, 8), 1, size=100_000)
print(draws.mean(), np.quantile(draws, [0.05, 0.5, 0.95]))
