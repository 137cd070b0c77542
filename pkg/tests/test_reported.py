from importlib import resources
from pathlib import Path

import pytest

from graphtrf import reported
from graphtrf.client import SimProfile
from graphtrf.graph import IN_DOMAIN_TASKS, TaskKind
from graphtrf.render import TRF_ORDER, TrfKind

ROOT = Path(__file__).resolve().parents[1]

# cells whose printed GRE does not follow from the printed Acc(Tok) pair
KNOWN_MISMATCHES = {
    ("main/gemini25pro", "CoT", TaskKind.CONN),
    ("main/gemini25pro", "GITA", TaskKind.CONN),
    ("trf/gpt4o", "Vfdp", TaskKind.CONN),
    ("trf/gemini25pro", "Vcirco", TaskKind.HP),
    ("trf/gemini25pro", "Vfdp", TaskKind.CONN),
    ("trf/gemini25pro", "Vsfdp", TaskKind.CONN),
}


def test_table_shapes():
    for name, rows in reported.AUDIT_TABLES.items():
        for row, cells in rows.items():
            assert len(cells) == len(IN_DOMAIN_TASKS), (name, row)
    for table in (reported.TRF_GPT4O, reported.TRF_GEMINI):
        assert [t.value for t in TRF_ORDER] == list(table)[:8]


def test_audit_mismatches_are_the_known_ones():
    rows = list(reported.audit_rows())
    assert len(rows) == 2 * 5 * 7 + 2 * 10 * 7
    bad = {(table, row, task) for table, row, task, *_, ok in rows if not ok}
    assert bad == KNOWN_MISMATCHES


def test_repairs_match_printed_gre():
    for (model, trf, task), (acc, tok) in reported.PRESET_REPAIRS.items():
        table = reported.TRF_GPT4O if model == "gpt4o" else reported.TRF_GEMINI
        printed = table[trf.value][IN_DOMAIN_TASKS.index(task)][2]
        assert abs(acc / tok ** 0.5 - printed) <= 0.1


@pytest.mark.parametrize("model", reported.PRESETS)
def test_bundled_presets_match_tables(model):
    expected = reported.preset_profile(model)
    bundled = SimProfile.from_toml(resources.files("graphtrf").joinpath(f"presets/{model}.toml").read_text())
    assert bundled.cells == expected.cells
    top = SimProfile.load(ROOT / "presets" / f"{model}.toml")
    assert top.cells == expected.cells


def test_preset_cells_are_valid():
    prof = reported.preset_profile("gemini25pro")
    for (task, trf), cell in prof.cells.items():
        assert 0.0 <= cell.accuracy_p <= 1.0 and cell.token_mean > 0
    assert prof.cell(TaskKind.HP, TrfKind.VCIRCO).accuracy_p == pytest.approx(0.226)
    assert prof.cell(TaskKind.NC, TrfKind.TSET).accuracy_p == pytest.approx(0.605)
