import math

import pytest

from app.core.exceptions import SpecValidationError, UnknownEntryError
from app.services.gallery_service import (
    ENTRIES, abs_lipschitz_witness, list_entries, restriction_witness_ratio, run_all, run_entry
)

BUDGET = 1000


def test_list_entries():
    names = [entry.name for entry in list_entries()]
    assert names == ["bbody", "bbody-vnorm", "vpullback", "vpullback-rectangularized", "pnorm-reference"]


@pytest.mark.parametrize("name", list(ENTRIES))
def test_entry_passes(name):
    table = run_entry(name, seed=0, budget=BUDGET)
    failed = [row.label for row in table.rows if not row.passed]
    assert failed == []
    assert table.passed


def test_bbody_rows():
    table = run_entry("bbody", budget=BUDGET)
    observed = {row.label: row.observed for row in table.rows}
    assert observed["‖(1,1)‖_B"] == pytest.approx(math.sqrt(2.0), abs=1e-9)
    assert observed["‖(-1,1)‖_B"] == pytest.approx(2.0, abs=1e-9)
    assert observed["riesz violation ratio"] >= math.sqrt(2.0) - 1e-6
    assert all(row.provenance.value == "PUBLISHED" for row in table.rows)


@pytest.mark.parametrize("n", [2, 4, 8, 16])
def test_restriction_witness_grows_linearly(n):
    assert restriction_witness_ratio(n) == pytest.approx(n, rel=1e-12)


@pytest.mark.parametrize("n", [4, 8, 16])
def test_abs_lipschitz_witness(n):
    ratio, distance = abs_lipschitz_witness(n)
    assert ratio >= n
    assert ratio == pytest.approx(n * math.sqrt(4.0 + 1.0 / n ** 2), rel=1e-12)
    assert distance == pytest.approx(1.0 / n, rel=1e-12)


def test_vpullback_growth_diagnostics():
    table = run_entry("vpullback", dimension=2)
    assert table.monotone_growth
    dims = sorted({d.dimension for d in table.diagnostics})
    assert dims == [4, 8, 16]
    labels = {row.label for row in table.rows}
    assert "monotone witness ‖(1,2)‖/‖(2,2)‖" in labels


def test_vpullback_rectangularized_small_case():
    table = run_entry("vpullback-rectangularized", dimension=2, budget=BUDGET)
    assert table.rows[0].label == "‖(1,1)‖_r"
    assert table.rows[0].observed == pytest.approx(math.sqrt(5.0) / 2, rel=1e-12)
    assert table.passed


def test_unknown_entry():
    with pytest.raises(UnknownEntryError) as exc:
        run_entry("nosuch")
    assert exc.value.exit_code == 2


def test_dimension_constraints():
    with pytest.raises(SpecValidationError):
        run_entry("bbody", dimension=3)
    with pytest.raises(SpecValidationError):
        run_entry("vpullback", dimension=1)


def test_run_all():
    tables = run_all(budget=BUDGET)
    assert [t.entry for t in tables] == list(ENTRIES)
    assert all(t.passed for t in tables)
