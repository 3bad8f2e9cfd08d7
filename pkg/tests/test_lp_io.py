"""LP text format and solution files: round trips and parse errors."""
from __future__ import annotations

import io

import numpy as np
import pytest

from emsdivert import (
    BuildOptions,
    LpParseError,
    build_extensive_form,
    read_solution_text,
    write_solution_text,
)
from emsdivert.lp_io import read_lp, write_lp
from conftest import tiny_instance


def render(model, index) -> str:
    buf = io.StringIO()
    write_lp(model, index, buf)
    return buf.getvalue()


@pytest.fixture()
def small_model():
    inst = tiny_instance()
    return build_extensive_form(inst, BuildOptions(availability=True))


def test_lp_text_is_deterministic(small_model):
    model, index = small_model
    assert render(model, index) == render(model, index)


def test_lp_sections_present(small_model):
    model, index = small_model
    text = render(model, index)
    for section in ("Maximize", "Subject To", "Bounds", "Binaries", "End"):
        assert section in text
    assert "obj:" in text
    # names keep their structure with colons flattened to underscores
    assert "z_S1_trad_1" in text


def test_lp_round_trip_is_stable(small_model):
    model, index = small_model
    text = render(model, index)
    model2, index2 = read_lp(io.StringIO(text))
    assert model2.n_variables == model.n_variables
    assert model2.n_constraints == model.n_constraints
    assert len(model2.binary_ids()) == len(model.binary_ids())
    # the reader numbers variables by first mention, so the first re-write
    # may reorder declaration blocks; after that the text is a fixed point
    text2 = render(model2, index2)
    model3, index3 = read_lp(io.StringIO(text2))
    assert render(model3, index3) == text2


def test_lp_round_trip_preserves_semantics(small_model):
    model, index = small_model
    model2, index2 = read_lp(io.StringIO(render(model, index)))
    rng = np.random.default_rng(5)
    position = {index2.id_of(index.lp_name(v)): v for v in range(len(index))}
    for _ in range(5):
        x = rng.uniform(0.0, 1.0, model.n_variables)
        x2 = np.empty_like(x)
        for vid2, vid in position.items():
            x2[vid2] = x[vid]
        assert model2.objective_value(x2) == pytest.approx(
            model.objective_value(x), abs=1e-12
        )
        assert len(model2.check_assignment(x2)) == len(model.check_assignment(x))


def test_read_lp_rejects_minimization():
    with pytest.raises(LpParseError):
        read_lp(io.StringIO("Minimize\n obj: x\nSubject To\nEnd\n"))


def test_read_lp_rejects_general_integers():
    text = "Maximize\n obj: x\nSubject To\n c1: x <= 1\nGeneral\n x\nEnd\n"
    with pytest.raises(LpParseError):
        read_lp(io.StringIO(text))


def test_read_lp_rejects_loose_content():
    with pytest.raises(LpParseError):
        read_lp(io.StringIO("x + y <= 1\n"))


def test_solution_text_round_trip(small_model):
    model, index = small_model
    rng = np.random.default_rng(11)
    x = rng.uniform(0.0, 1.0, model.n_variables)
    text = write_solution_text(model, index, x)
    assert text.startswith("# objective ")
    values = read_solution_text(text)
    back = np.array([values[index.lp_name(v)] for v in range(len(index))])
    assert np.array_equal(back, x)


def test_solution_text_skips_comments_and_markers():
    values = read_solution_text(
        "# a comment\n\\ another\n=obj= 4.0\n\nx_one 1.5\nx_two 0\n"
    )
    assert values == {"x_one": 1.5, "x_two": 0.0}


def test_solution_text_rejects_malformed_lines():
    with pytest.raises(LpParseError):
        read_solution_text("x_one 1.0 extra\n")
    with pytest.raises(LpParseError):
        read_solution_text("x_one notanumber\n")
