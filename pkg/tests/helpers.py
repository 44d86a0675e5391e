"""Scenario builders shared by the test modules."""

from mitigation_sil.model import (
    ConsequenceModel,
    FunctionSpec,
    MappingMatrix,
    Scenario,
    SubsystemSpec,
    validate_scenario,
)
from mitigation_sil.expectation import Binary


def make_scenario(models, mapping, contributions, c_min=0.0, c_max=1.0, frequency=1.0,
                  tolerable_risk=0.1, external=()):
    from mitigation_sil.model import ExternalFactor

    return validate_scenario(Scenario(
        name="test",
        hazardous_event_frequency=frequency,
        consequence=ConsequenceModel(c_min, c_max, "u", (), tolerable_risk),
        functions=tuple(FunctionSpec(f"F{k}", u) for k, u in enumerate(contributions)),
        subsystems=tuple(SubsystemSpec(f"S{j}", m) for j, m in enumerate(models)),
        mapping=MappingMatrix(tuple(tuple(int(v) for v in row) for row in mapping)),
        external_factors=tuple(ExternalFactor(f"x{i}", p) for i, p in enumerate(external)),
    ))


def single_function(b, c_max=1.0, tolerable_risk=0.1):
    """One function over ``b`` identical binary subsystems."""
    return make_scenario([Binary(0.0)] * b, [[1]] * b, [1.0], c_max=c_max, tolerable_risk=tolerable_risk)
