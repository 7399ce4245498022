import pytest

from mvalloc import engine


def test_python_backend_is_always_available():
    assert "python" in engine.available_backends()


def test_auto_prefers_the_compiled_backend(monkeypatch):
    monkeypatch.delenv("MVALLOC_BACKEND", raising=False)
    expected = "c" if "c" in engine.available_backends() else "python"
    assert engine.get_backend("auto").name == expected


def test_explicit_python():
    assert engine.get_backend("python").name == "python"


def test_unknown_backend_name():
    with pytest.raises(ValueError, match="unknown backend"):
        engine.get_backend("fortran")


def test_env_var_overrides_auto(monkeypatch):
    monkeypatch.setenv("MVALLOC_BACKEND", "python")
    assert engine.get_backend("auto").name == "python"


def test_env_var_does_not_override_explicit_names(monkeypatch):
    monkeypatch.setenv("MVALLOC_BACKEND", "python")
    if "c" in engine.available_backends():
        assert engine.get_backend("c").name == "c"


@pytest.mark.skipif("c" not in engine.available_backends(), reason="extension not built")
def test_kernels_return_identical_tuples():
    # one unit with two variants, one with one, two nodes
    args = (
        [2, 1],  # nv
        [0, 2],  # off
        [3, 1, 2],  # vmem
        [1, 1, 1],  # vcpu
        [0, 0, 0],  # vgpu
        [5, 9, 4],  # vcost
        [4, 2],  # cap_mem
        [9, 9],  # cap_cpu
        [0, 0],  # cap_gpu
    )
    suffix = [9, 4, 0]
    c = engine.get_backend("c")
    py = engine.get_backend("python")
    assert c.solve_search(*args, suffix, None) == py.solve_search(*args, suffix, None)
    assert c.brute_search(*args) == py.brute_search(*args)
