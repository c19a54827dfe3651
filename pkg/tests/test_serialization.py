import numpy as np
import pytest

from conftest import random_density
from qde import serialization as ser
from qde.dynamics import cone_map, convergence_in_volume
from qde.errors import ValidationError
from qde.hamiltonian import Term, heisenberg, ising, xy
from qde.operators import Window, pauli
from qde.partitions import random_partition
from qde.states import ChainState, EntropyReport


def test_potential_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(5)
    g = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    phi = xy(0.3, 0.77, 1 / 3).with_term(Term.on_support(g + g.conj().T, (0, 2)))
    back = ser.load_potential(ser.save_potential(phi, tmp_path / "phi.json"))
    assert len(back.terms) == len(phi.terms)
    for a, b in zip(phi.terms, back.terms):
        assert a.support == b.support
        assert np.array_equal(a.operator.matrix, b.operator.matrix)


def test_state_and_partition_round_trip(tmp_path, rng):
    st = ChainState(Window(-1, 0), random_density(rng, 4))
    back = ser.load_state(ser.save_state(st, tmp_path / "s.json"))
    assert back.window == st.window and np.array_equal(back.rho, st.rho)
    p = random_partition(3, Window(2, 3), rng)
    q = ser.load_partition(ser.save_partition(p, tmp_path / "p.json"))
    assert q.window == p.window
    assert all(np.array_equal(a.matrix, b.matrix) for a, b in zip(p.elements, q.elements))


def test_bad_matrix_document():
    with pytest.raises(ValidationError):
        ser.matrix_from_dict({"real": [[1.0]]})
    with pytest.raises(ValidationError):
        ser.matrix_from_dict({"real": [[1.0, 0.0]], "imag": [[0.0]]})


def test_csv_twelve_significant_digits(tmp_path):
    f = ser.write_csv(tmp_path / "t.csv", ["a", "b"], [[1, 2 / 3]])
    lines = f.read_text().splitlines()
    assert lines == ["a,b", "1,6.66666666667e-01"]


def test_cone_and_convergence_tables(tmp_path):
    cm = cone_map(ising(), pauli("z"), pauli("z"), [0.0, 0.5], [0, 1, 2], Window(-2, 2))
    f = ser.write_cone_csv(cm, tmp_path / "cone.csv")
    header, rows = ser.read_csv(f)
    assert header == ["t", "x=0", "x=1", "x=2"]
    assert len(rows) == 2 and rows[1][0] == 0.5
    assert rows[1][2] == pytest.approx(cm.cells[1, 1], rel=1e-11)
    tabs = [convergence_in_volume(heisenberg(), pauli("z"), t, [0, 1, 2]) for t in (0.2, 0.4)]
    header, rows = ser.read_csv(ser.write_convergence_csv(tabs, tmp_path / "conv.csv"))
    assert header == ["t", "R=0", "R=1", "R=2"] and rows[1][0] == 0.4


def test_entropy_csv(tmp_path):
    rep = EntropyReport([1, 2], [0.5, 1.0], "product")
    header, rows = ser.read_csv(ser.write_entropy_csv(rep, tmp_path / "e.csv"))
    assert header == ["size", "entropy", "entropy_per_site"]
    assert rows == [[1, 0.5, 0.5], [2, 1.0, 0.5]]
