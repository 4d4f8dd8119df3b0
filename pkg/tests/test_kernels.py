import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hyperstab import _pykernels as py
from hyperstab import kernels
from hyperstab.catalog import get_group, group_names, hypergroup_names, get_hypergroup

compiled = kernels.compiled_backend
needs_compiled = pytest.mark.skipif(compiled is None, reason="compiled extension not built")
GROUPS = group_names(max_order=32)


@needs_compiled
@pytest.mark.parametrize("name", GROUPS)
def test_class_labels_agree(name):
    g = get_group(name).group
    assert np.array_equal(py.conjugacy_class_labels(g.table, g.inverse), compiled.conjugacy_class_labels(g.table, g.inverse))


@needs_compiled
@given(st.sampled_from(GROUPS), st.data())
def test_pair_histograms_agree(name, data):
    entry = get_group(name)
    g, part = entry.group, entry.partition
    x = data.draw(st.integers(0, g.order - 1))
    row = g.mul(x, np.arange(g.order))
    expected = py.pair_class_histogram(row, part.class_of, part.size)
    assert np.array_equal(expected, compiled.pair_class_histogram(row, part.class_of, part.size))
    assert expected.sum() == g.order


@needs_compiled
@given(st.sampled_from(hypergroup_names(max_size=16)), st.data())
def test_support_closures_agree(name, data):
    t = get_hypergroup(name)
    ptr, idx = t.support_csr
    seed = np.zeros(t.size, dtype=np.uint8)
    seed[data.draw(st.lists(st.integers(0, t.size - 1), min_size=1, max_size=3))] = 1
    expected = py.support_closure(ptr, idx, t.involution, seed)
    assert np.array_equal(expected, np.asarray(compiled.support_closure(ptr, idx, t.involution, seed)))


def test_fallback_labels_are_a_class_partition():
    g = get_group("s4").group
    labels = py.conjugacy_class_labels(g.table, g.inverse)
    assert labels.max() + 1 == 5
    for x in range(g.order):
        for h in range(g.order):
            assert labels[g.conjugate(x, h)] == labels[x]


def test_environment_variable_forces_the_fallback():
    env = dict(os.environ, HYPERSTAB_PURE_PYTHON="1")
    code = "from hyperstab import kernels; print(kernels.BACKEND_NAME, kernels.compiled_backend is None)"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["python", "True"]
