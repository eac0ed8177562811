import math

import numpy as np
import pytest

from msfuzzy.exceptions import EmptySeries, ParseError
from msfuzzy.io import load_csv


def _write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_growth_transform(tmp_path):
    path = _write(tmp_path, "DATE,GDP\n1947-01-01,100\n1947-04-01,101\n")
    ts = load_csv(path, transform="growth")
    assert ts.values.tolist() == pytest.approx([400 * math.log(1.01)])
    assert round(ts.values[0], 3) == 3.980
    assert ts.labels == ("1947-04-01",)
    alias = load_csv(path, transform="pct_annualized_growth")
    assert alias.values.tolist() == ts.values.tolist()


def test_labels_and_range_filter(tmp_path):
    path = _write(tmp_path, "date,a,b\n2000Q1,1.5,9\n2000Q2,2.5,8\n2000Q3,3.5,7\n")
    ts = load_csv(path, value_column="b", start="2000Q2")
    assert ts.values.tolist() == [8.0, 7.0]
    assert ts.labels == ("2000Q2", "2000Q3")
    with pytest.raises(ParseError):
        load_csv(path)  # two candidate value columns
    with pytest.raises(ParseError):
        load_csv(path, value_column="c")


def test_unlabelled_single_column(tmp_path):
    ts = load_csv(_write(tmp_path, "y\n1\n-2.5\n3e1\n"))
    assert ts.values.tolist() == [1.0, -2.5, 30.0]
    assert ts.labels is None


def test_missing_cell_names_row(tmp_path):
    path = _write(tmp_path, "date,y\nq1,1.0\nq2,\nq3,2.0\n")
    with pytest.raises(ParseError, match="row 3"):
        load_csv(path)


def test_empty_inputs(tmp_path):
    with pytest.raises(EmptySeries):
        load_csv(_write(tmp_path, "date,y\n"))
    with pytest.raises(EmptySeries):
        load_csv(_write(tmp_path, "date,y\nq1,1\n", "one.csv"), transform="growth")
    with pytest.raises(EmptySeries):
        load_csv(_write(tmp_path, "date,y\n2001,1\n", "old.csv"), end="1999")


def test_nonpositive_levels_rejected(tmp_path):
    with pytest.raises(ParseError):
        load_csv(_write(tmp_path, "y\n1\n0\n"), transform="growth")


def test_unknown_transform(tmp_path):
    with pytest.raises(ValueError):
        load_csv(_write(tmp_path, "y\n1\n"), transform="log")


def test_growth_of_exponential_levels_is_constant(tmp_path):
    levels = 100 * np.exp(0.01 * np.arange(12))
    text = "y\n" + "\n".join(repr(float(v)) for v in levels) + "\n"
    ts = load_csv(_write(tmp_path, text), transform="growth")
    np.testing.assert_allclose(ts.values, 4.0, atol=1e-10)
