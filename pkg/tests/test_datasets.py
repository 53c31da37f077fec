from __future__ import annotations

import numpy as np
import pytest

from robavg.datasets import (
    CHECKSUMS,
    _HALD,
    _STACKLOSS,
    hald_cement,
    load_csv,
    resolve,
    stackloss,
    table_digest,
    write_csv,
)
from robavg.errors import MissingColumn, NonNumericCell, ParseError


def test_stackloss_cells():
    ds = stackloss()
    d = ds.data
    assert (d.n, d.p) == (21, 3)
    assert d.response[0] == 42 and d.design[0].tolist() == [80, 27, 89]
    assert d.response[4] == 18 and d.design[4].tolist() == [62, 22, 87]
    assert d.response[20] == 15 and d.design[20].tolist() == [70, 20, 91]
    assert ds.outlier_indices == frozenset({20})


def test_stackloss_column_sums():
    arr = np.array(_STACKLOSS, dtype=float)
    assert arr.sum(axis=0).tolist() == [368.0, 1269.0, 443.0, 1812.0]


def test_hald_cells():
    ds = hald_cement()
    d = ds.data
    assert (d.n, d.p) == (13, 4)
    assert d.response[0] == 78.5 and d.design[0].tolist() == [7, 26, 6, 60]
    assert d.response[9] == 115.9 and d.design[9].tolist() == [21, 47, 4, 26]
    assert d.response[12] == 109.4 and d.design[12].tolist() == [10, 68, 8, 12]
    assert ds.outlier_indices == frozenset()
    assert np.corrcoef(d.design[:, 0], d.design[:, 2])[0, 1] < -0.7


def test_hald_column_sums():
    arr = np.array(_HALD, dtype=float)
    assert np.allclose(arr.sum(axis=0), [1240.5, 97, 626, 153, 390])


def test_pinned_digests():
    assert table_digest(_STACKLOSS) == CHECKSUMS["stackloss"]
    assert table_digest(_HALD) == CHECKSUMS["hald"]


def test_candidates_from_named():
    assert len(stackloss().candidates()) == 8
    assert len(hald_cement().candidates()) == 16


def test_csv_round_trip(tmp_path):
    ds = hald_cement()
    path = tmp_path / "hald.csv"
    write_csv(ds, path)
    back = load_csv(path, "y")
    assert np.array_equal(back.data.design, ds.data.design)
    assert np.array_equal(back.data.response, ds.data.response)
    assert back.data.column_names == ds.data.column_names


def test_csv_errors(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("y,a,b\n1,2,3\n4,NA,6\n")
    with pytest.raises(NonNumericCell) as info:
        load_csv(p, "y")
    assert (info.value.row, info.value.column) == (2, "a")
    p.write_text("y,a\n")
    with pytest.raises(ParseError):
        load_csv(p, "y")
    p.write_text("y,a\n1,2\n")
    with pytest.raises(MissingColumn):
        load_csv(p, "z")
    p.write_text("y,a\n1,2,3\n")
    with pytest.raises(ParseError):
        load_csv(p, "y")
    p.write_text("")
    with pytest.raises(ParseError):
        load_csv(p, "y")


def test_resolve(tmp_path):
    assert resolve("stackloss", outliers=[0]).outlier_indices == frozenset({0})
    path = tmp_path / "d.csv"
    write_csv(stackloss(), path, response_column="loss")
    ds = resolve(f"csv:{path}", [1, 2], response="loss")
    assert ds.data.n == 21 and ds.outlier_indices == frozenset({1, 2})
    with pytest.raises(ValueError):
        resolve("nope")
