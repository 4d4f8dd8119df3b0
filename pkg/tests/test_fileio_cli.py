from pathlib import Path

import numpy as np
import pytest

from hyperstab.catalog import get_carrier, get_group, get_hypergroup, q8_controlled_sign_circuit, q8_pair_quadratic_circuit
from hyperstab.circuits import random_restricted_circuit, simulate_dense
from hyperstab.cli import main
from hyperstab.fileio import (
    ParseError,
    circuits_equal,
    read_circuit,
    read_group,
    read_hypergroup,
    write_circuit,
    write_group,
    write_hypergroup,
)

SAMPLES = Path(__file__).resolve().parent.parent / "samples"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


# -- round trips ---------------------------------------------------------------------------------------


@pytest.mark.parametrize("name", ["q8classes", "conj-s4", "conj-heisenberg3", "q8classes2", "conj-z7"])
def test_hypergroup_round_trip(name):
    t = get_hypergroup(name)
    again = read_hypergroup(write_hypergroup(t, name))
    assert again == t
    assert np.allclose(again.weights, t.weights)


def test_sample_hypergroup_file_matches_catalog():
    assert read_hypergroup(SAMPLES / "q8-classes.hg") == get_group("q8").table


def test_group_round_trip():
    for name in ("q8", "s4", "heisenberg3"):
        g = get_group(name).group
        again = read_group(write_group(g, name))
        assert again.order == g.order
        assert np.array_equal(again.mul(np.arange(g.order)[:, None], np.arange(g.order)[None, :]),
                              g.mul(np.arange(g.order)[:, None], np.arange(g.order)[None, :]))


@pytest.mark.parametrize("build", [q8_pair_quadratic_circuit, q8_controlled_sign_circuit])
def test_fixture_circuit_round_trip(tmp_path, build):
    c = build()
    again = read_circuit(write_circuit(c, tmp_path))
    assert circuits_equal(c, again)
    assert np.allclose(simulate_dense(c).amplitudes, simulate_dense(again).amplitudes, atol=1e-15)


def test_random_circuit_round_trip(tmp_path):
    rng = np.random.default_rng(12)
    for k in range(5):
        c = random_restricted_circuit((get_carrier("q8"), get_carrier("conj-s3")), 8, rng)
        assert circuits_equal(c, read_circuit(write_circuit(c, tmp_path, f"c{k}")))


def test_malformed_inputs_raise_parse_errors(tmp_path):
    with pytest.raises(ParseError):
        read_hypergroup("hypergroup broken 2\nidentity 0\nn 0 0 x 1\n")
    bad = tmp_path / "bad.circ"
    bad.write_text("circuit\nregisters q8\ninput sideways 0\n")
    with pytest.raises(ParseError):
        read_circuit(bad)
    headless = tmp_path / "headless.circ"
    headless.write_text("registers q8\ninput element 0\n")
    with pytest.raises(ParseError):
        read_circuit(headless)


# -- command line ------------------------------------------------------------------------------------


def test_validate_sample_hypergroup(capsys):
    code, out, _ = run(capsys, "hg", "validate", SAMPLES / "q8-classes.hg")
    assert code == 0 and "associativity\tpass" in out


def test_unknown_name_is_a_usage_error(capsys):
    code, _, err = run(capsys, "hg", "validate", "no-such-hypergroup")
    assert code == 2 and "usage error" in err


def test_unsupported_circuit_is_an_error(capsys):
    code, _, err = run(capsys, "circuit", "sample", SAMPLES / "q8-cz.circ", "--shots", 5)
    assert code == 1 and err.startswith("error:")


def test_pair_phase_circuit_amplitudes(capsys):
    code, out, _ = run(capsys, "circuit", "run", SAMPLES / "q8-cz.circ")
    rows = [line.split("\t") for line in out.strip().splitlines()[1:]]
    assert code == 0 and len(rows) == 5
    assert {r[1] for r in rows} == {"C1,X1", "C-1,X1", "Ci,Xi", "Cj,Xj", "Ck,Xk"}


def test_heisenberg_distribution_rows(capsys):
    code, out, _ = run(capsys, "hshp", "dist", "--group", "heisenberg3", "--hidden", "e")
    rows = out.strip().splitlines()[1:]
    assert code == 0 and len(rows) == 11
    assert sum(r.endswith("25/243") for r in rows) == 9 and sum(r.endswith("1/27") for r in rows) == 2


def test_seeded_commands_are_byte_identical(capsys):
    args = ("circuit", "sample", SAMPLES / "q8-restricted.circ", "--shots", 200, "--seed", 9)
    first, second = run(capsys, *args), run(capsys, *args)
    assert first == second and first[0] == 0
    args = ("hshp", "akr", "--group", "heisenberg3", "--hidden", "e", "--runs", 3, "--seed", 4, "--format", "json")
    assert run(capsys, *args) == run(capsys, *args)


def test_akr_command_recovers_the_center(capsys):
    code, out, _ = run(capsys, "hshp", "akr", "--group", "q8", "--hidden", "C1,C-1", "--seed", 3)
    assert code == 0 and "\ttrue\tC1,C-1\t" in out


def test_missing_group_is_rejected():
    with pytest.raises(SystemExit) as exc:
        main(["hshp", "akr"])
    assert exc.value.code == 2


def test_labels_with_commas_parse(capsys):
    code, out, _ = run(capsys, "hshp", "nilpotent", "--group", "z3xq8", "--oracle", "hidden:C(0,-1)", "--seed", 1)
    assert code == 0 and "\ttrue\tC(0,1),C(0,-1)\t" in out
