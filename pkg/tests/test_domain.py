"""Domain types, condition models, and instance validation."""
from __future__ import annotations

import numpy as np
import pytest

from emsdivert import (
    Action,
    Capability,
    ConditionModel,
    DIVERTING_ACTIONS,
    rural_condition_model,
    urban_condition_model,
    validate,
)
from emsdivert.domain import (
    ACTUAL_DEFAULT,
    BELIEVED_DEFAULT,
    KEY_SEP,
    RURAL_BELIEVED_SHARES,
    URBAN_BELIEVED_SHARES,
    renormalize_rows,
)
from conftest import make_instance, tiny_instance


def test_enum_values_are_stable():
    assert Action.TRANSPORT_ED.value == "transport_ed"
    assert Action.TRANSPORT_AD.value == "transport_ad"
    assert Action.TREAT_IN_PLACE.value == "treat_in_place"
    assert Action.SUPPORT.value == "support"
    assert set(DIVERTING_ACTIONS) == {Action.TRANSPORT_AD, Action.TREAT_IN_PLACE}
    assert Capability.TRADITIONAL.value != Capability.DIVERSION_CAPABLE.value


def test_default_class_labels():
    assert BELIEVED_DEFAULT == ("likely_eligible", "likely_not_eligible")
    assert ACTUAL_DEFAULT == ("ed", "ad", "tip")
    assert KEY_SEP == ":"
    assert abs(sum(URBAN_BELIEVED_SHARES) - 1.0) < 1e-12
    assert abs(sum(RURAL_BELIEVED_SHARES) - 1.0) < 1e-12


def test_renormalize_rows_rescales_and_notes():
    mat, notes = renormalize_rows([[0.2, 0.2], [0.5, 0.5]], ["a", "b"])
    assert mat[0] == pytest.approx([0.5, 0.5])
    assert mat[1] == pytest.approx([0.5, 0.5])
    assert len(notes) == 1 and "'a'" in notes[0]


def test_renormalize_rows_rejects_empty_mass():
    with pytest.raises(ValueError):
        renormalize_rows([[0.0, 0.0]], ["dead"])


def test_urban_condition_model():
    cm = urban_condition_model()
    assert cm.believed == BELIEVED_DEFAULT
    assert cm.actual == ACTUAL_DEFAULT
    sums = cm.p.sum(axis=1)
    assert np.allclose(sums, 1.0, atol=1e-12)
    # published first row sums to 1 exactly; second row sums to 0.999
    # and is rescaled, which the model records
    assert cm.row("likely_eligible") == pytest.approx([0.627, 0.019, 0.354])
    assert cm.row("likely_not_eligible") == pytest.approx(
        np.array([0.932, 0.004, 0.063]) / 0.999
    )
    assert any("likely_not_eligible" in note for note in cm.renormalization_notes)


def test_rural_condition_model():
    cm = rural_condition_model()
    assert np.allclose(cm.p.sum(axis=1), 1.0, atol=1e-12)
    assert cm.row("likely_eligible")[0] == pytest.approx(0.612, abs=1e-9)
    # rural screening is slightly better at ruling in eligibles
    urban = urban_condition_model()
    assert cm.row("likely_not_eligible")[0] > urban.row("likely_eligible")[0]


def test_condition_model_row_lookup():
    cm = urban_condition_model()
    with pytest.raises(ValueError):
        cm.row("no_such_class")


def test_instance_accessors():
    inst = make_instance(
        station_positions=[(0.0, 0.0), (3.0, 0.0)],
        node_positions=[(1.0, 0.0), (2.0, 2.0), (4.0, 1.0)],
        rates=[(0.1, 0.2), (0.3, 0.4), (0.5, 0.6)],
    )
    assert inst.n_stations == 2
    assert inst.n_nodes == 3
    assert inst.n_types == 2
    assert inst.believed == BELIEVED_DEFAULT
    assert inst.actual == ACTUAL_DEFAULT
    assert inst.rate(1, 0) == pytest.approx(0.3)
    assert inst.total_rate_per_hour() == pytest.approx(2.1)


def test_validate_accepts_well_formed_instance():
    assert validate(tiny_instance()) == []


def test_validate_flags_duplicate_ids():
    inst = tiny_instance()
    stations = (inst.stations[0], inst.stations[0])
    bad = inst.replace(stations=stations)
    assert any("duplicate" in p for p in validate(bad))


def test_validate_flags_separator_in_id():
    inst = tiny_instance()
    from emsdivert import Station

    bad = inst.replace(stations=(Station(id="S:1", position=(0.0, 0.0)),))
    assert any("S:1" in p for p in validate(bad))


def test_validate_flags_bad_condition_rows():
    inst = tiny_instance()
    cm = inst.condition_model
    bad_rows = ConditionModel(cm.believed, cm.actual, np.array([[0.6, 0.2, 0.1], [0.3, 0.3, 0.4]]))
    problems = validate(inst.replace(condition_model=bad_rows))
    assert any("sums to" in p for p in problems)

    bad_shape = ConditionModel(cm.believed, cm.actual, np.ones((2, 2)) * 0.5)
    problems = validate(inst.replace(condition_model=bad_shape))
    assert any("shape" in p for p in problems)


def test_validate_flags_fleet_problems():
    from emsdivert import UnitType

    inst = tiny_instance()
    zero = (
        UnitType("trad", Capability.TRADITIONAL, 0),
        UnitType("cap", Capability.DIVERSION_CAPABLE, 0),
    )
    assert any("zero" in p for p in validate(inst.replace(unit_types=zero)))
    negative = (
        UnitType("trad", Capability.TRADITIONAL, -1),
        UnitType("cap", Capability.DIVERSION_CAPABLE, 1),
    )
    assert any("negative fleet" in p for p in validate(inst.replace(unit_types=negative)))


def test_validate_flags_rate_problems():
    from emsdivert import DemandNode

    inst = tiny_instance()
    node = inst.demand_nodes[0]
    short = DemandNode(node.id, node.position, (0.3,))
    assert any("rates" in p for p in validate(inst.replace(demand_nodes=(short,))))
    negative = DemandNode(node.id, node.position, (-0.1, 0.5))
    assert any(
        "negative or non-finite" in p
        for p in validate(inst.replace(demand_nodes=(negative,)))
    )


def test_validate_flags_travel_matrix_mismatch():
    from emsdivert import TravelMatrix

    inst = tiny_instance()
    wrong = TravelMatrix(minutes=np.zeros((3, 3)))
    assert any("travel matrix shape" in p for p in validate(inst.replace(travel=wrong)))
    nan = TravelMatrix(minutes=np.full((1, 1), np.nan))
    assert any(
        "finite and nonnegative" in p for p in validate(inst.replace(travel=nan))
    )


def test_validate_flags_missing_ed_and_bad_scalars():
    inst = tiny_instance()
    assert any("no ED" in p for p in validate(inst.replace(ed_facilities=())))
    assert any("alpha" in p for p in validate(inst.replace(alpha=1.5)))
    assert any(
        "threshold" in p for p in validate(inst.replace(coverage_threshold=0.0))
    )


def test_replace_returns_modified_copy():
    inst = tiny_instance()
    other = inst.replace(alpha=0.12)
    assert other.alpha == 0.12
    assert inst.alpha == 0.3
    assert other.stations is inst.stations
