import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import minplus as mp
from minplus import INF, MAX_ENTRY, BDMatrix, FormatError, Matrix


def bd_holds_brute(data, delta):
    n = len(data)
    for i in range(n):
        for j in range(n):
            if j + 1 < n and abs(int(data[i][j]) - int(data[i][j + 1])) >= delta:
                return False
            if i + 1 < n and abs(int(data[i][j]) - int(data[i + 1][j])) >= delta:
                return False
    return True


FINITE = st.integers(min_value=-(1 << 59), max_value=1 << 59)


@given(FINITE, FINITE)
def test_sat_add_finite(x, y):
    assert mp.sat_add(x, y) == x + y


@given(FINITE)
def test_sat_add_absorbing(x):
    assert mp.sat_add(x, INF) == INF
    assert mp.sat_add(INF, x) == INF
    assert mp.sat_add(INF, INF) == INF


def test_matrix_validation():
    with pytest.raises(ValueError):
        Matrix(np.zeros((2, 2, 2), dtype=np.int64))
    with pytest.raises(ValueError):
        Matrix(np.array([[0.5]]))
    with pytest.raises(ValueError):
        Matrix(np.array([[MAX_ENTRY + 1]]))
    m = Matrix(np.array([[1, INF], [0, -MAX_ENTRY]]))
    assert m.shape == (2, 2) and not m.all_finite()
    with pytest.raises(ValueError):
        m.data[0, 0] = 5  # immutable


def test_generate_single_entry():
    m = mp.generate_bd(1, 1, 0)
    assert m.n == 1 and m.base.data[0, 0] == 0


def test_generate_deterministic():
    a = mp.generate_bd(64, 3, 7)
    b = mp.generate_bd(64, 3, 7)
    assert a == b
    assert a != mp.generate_bd(64, 3, 8)


def test_generate_validates():
    m = mp.generate_bd(64, 3, 7)
    assert mp.validate_bd(m.base, 3)


@pytest.mark.parametrize("n", [2, 8, 16])
@pytest.mark.parametrize("delta", [1, 2, 5])
def test_generate_brute_oracle(n, delta):
    for seed in range(10):
        m = mp.generate_bd(n, delta, seed)
        assert bd_holds_brute(m.base.data.tolist(), delta)


def test_generate_property_sweep():
    # generator output always passes validation with the same delta
    for seed in range(100):
        delta = 1 + seed % 5
        m = mp.generate_bd(16, delta, seed)
        assert mp.validate_bd(m.base, delta)


def test_generate_rejects():
    with pytest.raises(ValueError):
        mp.generate_bd(3, 1, 0)
    with pytest.raises(ValueError):
        mp.generate_bd(0, 1, 0)
    with pytest.raises(ValueError):
        mp.generate_bd(4, 0, 0)


def test_validate_examples():
    assert mp.validate_bd(Matrix(np.zeros((4, 4), dtype=np.int64)), 1)
    assert not mp.validate_bd(Matrix(np.array([[0, 5], [0, 0]])), 3)


def test_validate_contract_errors():
    with pytest.raises(ValueError):
        mp.validate_bd(Matrix(np.zeros((2, 3), dtype=np.int64)), 1)
    with pytest.raises(ValueError):
        mp.validate_bd(Matrix(np.array([[0, INF], [0, 0]])), 1)


def test_bdmatrix_rejects_bad_input():
    with pytest.raises(ValueError):
        BDMatrix(Matrix(np.array([[0, 5], [0, 0]])), 3)
    with pytest.raises(ValueError):
        BDMatrix(Matrix(np.zeros((3, 3), dtype=np.int64)), 1)  # not a power of two


def test_roundtrip_with_inf(tmp_path):
    m = Matrix(np.array([[1, INF], [-3, 7]]))
    path = tmp_path / "m.mpm"
    mp.write_matrix(m, path)
    assert mp.read_matrix(path) == m


def test_roundtrip_bd(tmp_path):
    m = mp.generate_bd(8, 2, 3)
    path = tmp_path / "bd.mpm"
    mp.write_matrix(m, path)
    back = mp.read_matrix(path)
    assert isinstance(back, BDMatrix) and back == m


def test_read_inf_token(tmp_path):
    path = tmp_path / "t.mpm"
    path.write_text("MPM1 1 2\n4 inf\n")
    m = mp.read_matrix(path)
    assert m.data[0, 0] == 4 and m.data[0, 1] == INF


def test_read_extra_row(tmp_path):
    path = tmp_path / "t.mpm"
    path.write_text("MPM1 2 2\n0 0\n0 0\n0 0\n")
    with pytest.raises(FormatError) as ei:
        mp.read_matrix(path)
    assert ei.value.line == 4


def test_read_errors(tmp_path):
    cases = [
        ("garbage\n", 1),
        ("MPM1 2\n", 1),
        ("MPM1 2 2\n0 0 0\n0 0\n", 2),
        ("MPM1 2 2\n0 0\n", 3),
        ("MPM1 1 1\nfoo\n", 2),
        (f"MPM1 1 1\n{(1 << 61)}\n", 2),
        ("MPM1 1 1\nDELTA x\n0\n", 2),
    ]
    for text, line in cases:
        path = tmp_path / "bad.mpm"
        path.write_text(text)
        with pytest.raises(FormatError) as ei:
            mp.read_matrix(path)
        assert ei.value.line == line


@settings(max_examples=40)
@given(
    st.integers(1, 5),
    st.integers(1, 5),
    st.integers(0, 2**32),
)
def test_roundtrip_random(tmp_path_factory, rows, cols, seed):
    rng = np.random.default_rng(seed)
    data = rng.integers(-1000, 1000, size=(rows, cols))
    data = np.where(rng.random((rows, cols)) < 0.2, INF, data)
    m = Matrix(data)
    path = tmp_path_factory.mktemp("rt") / "m.mpm"
    mp.write_matrix(m, path)
    assert mp.read_matrix(path) == m
