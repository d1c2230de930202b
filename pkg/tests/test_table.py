import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iriscd.graph import Variable
from iriscd.table import MISSING, ObservationTable, TableError, encode_numeric

SMOKER = Variable("smoker")
TERN = Variable("attitude", domain=("-1", "0", "1"))


def test_set_and_read():
    t = ObservationTable([SMOKER], ["d1"])
    assert t.get("d1", "smoker") is MISSING
    t.set_cell("d1", "smoker", "True")
    assert t.get("d1", "Smoker") == "True"


def test_out_of_domain_and_unknown_cells():
    t = ObservationTable([SMOKER], ["d1"])
    with pytest.raises(TableError):
        t.set_cell("d1", "smoker", "Maybe")
    with pytest.raises(TableError):
        t.set_cell("d9", "smoker", "True")
    with pytest.raises(TableError):
        t.set_cell("d1", "age", "True")


def test_fresh_table_all_missing_and_sized():
    t = ObservationTable([SMOKER, TERN], ["d1", "d2", "d3"])
    assert t.shape == (3, 2)
    assert all(t.get(d, v) is MISSING for d in t.doc_ids for v in t.names)
    assert t.missing_counts() == {"smoker": 3, "attitude": 3}


def test_complete_rows():
    a, b, c = Variable("a"), Variable("b"), Variable("c")
    t = ObservationTable([a, b, c], ["r1", "r2", "r3"])
    for r in t.doc_ids:
        for v in "abc":
            t.set_cell(r, v, "True")
    t.set_cell("r2", "a", MISSING)
    assert t.complete_rows(["a", "b"]) == ["r1", "r3"]
    assert t.complete_rows([]) == ["r1", "r2", "r3"]
    assert t.complete_rows(["b"]) == ["r1", "r2", "r3"]
    t.set_cell("r3", "c", MISSING)
    assert t.complete_rows(["c"]) == ["r1", "r2"]
    assert t.complete_cases().doc_ids == ["r1"]


@settings(max_examples=100, deadline=None)
@given(st.lists(st.lists(st.sampled_from(["True", "False", None]), min_size=3, max_size=3), min_size=1, max_size=12))
def test_complete_rows_partition(rows):
    vs = [Variable(n) for n in "xyz"]
    t = ObservationTable(vs, [f"d{i}" for i in range(len(rows))])
    for i, row in enumerate(rows):
        for v, cell in zip(vs, row):
            t.set_cell(f"d{i}", v.name, cell)
    full = t.complete_rows(t.names)
    with_missing = [d for i, d in enumerate(t.doc_ids) if None in rows[i]]
    assert sorted(full + with_missing) == sorted(t.doc_ids)
    assert not set(full) & set(with_missing)


def test_encode_numeric_conventions():
    t = ObservationTable([TERN, SMOKER, Variable("color", domain=("red", "blue", "green"))], ["a", "b"])
    t.set_cell("a", "attitude", "0").set_cell("a", "smoker", "False").set_cell("a", "color", "green")
    t.set_cell("b", "attitude", "1").set_cell("b", "smoker", "True").set_cell("b", "color", "red")
    X = encode_numeric(t)
    # raw: attitude (0, 1), smoker (0, 1), color (2, 0); two rows standardize to -1/+1
    np.testing.assert_allclose(X, [[-1, -1, 1], [1, 1, -1]])


def test_encode_numeric_four_binary_rows_drops_missing():
    vs = [Variable("p"), Variable("q")]
    t = ObservationTable(vs, list("abcde"))
    for d, (p, q) in zip("abcd", [("True", "True"), ("True", "False"), ("False", "False"), ("True", "True")]):
        t.set_cell(d, "p", p).set_cell(d, "q", q)
    t.set_cell("e", "p", "True")
    X = encode_numeric(t)
    assert X.shape == (4, 2)
    np.testing.assert_allclose(X.mean(axis=0), 0, atol=1e-9)
    np.testing.assert_allclose(X.var(axis=0), 1, atol=1e-9)


def test_encode_constant_column_is_zero():
    t = ObservationTable([Variable("p"), Variable("q")], ["a", "b", "c"])
    for d, p in zip("abc", ["True", "False", "True"]):
        t.set_cell(d, "p", p).set_cell(d, "q", "True")
    X = encode_numeric(t)
    assert np.all(X[:, 1] == 0.0)
    assert np.all(np.isfinite(X))


def test_encode_no_complete_rows():
    with pytest.raises(TableError):
        encode_numeric(ObservationTable([SMOKER], ["d1"]))


def test_csv_round_trip():
    t = ObservationTable([SMOKER, TERN], ["d1", "d2"])
    t.set_cell("d1", "smoker", "True").set_cell("d2", "attitude", "-1")
    text = t.to_csv()
    assert text == "doc_id,smoker,attitude\nd1,True,NA\nd2,NA,-1\n"
    assert ObservationTable.from_csv(text, [TERN, SMOKER]) == t


def test_csv_errors():
    with pytest.raises(TableError):
        ObservationTable.from_csv("id,smoker\nd1,True\n", [SMOKER])
    with pytest.raises(TableError):
        ObservationTable.from_csv("doc_id,mystery\nd1,True\n", [SMOKER])
    with pytest.raises(TableError):
        ObservationTable.from_csv("doc_id,smoker\nd1,Maybe\n", [SMOKER])
