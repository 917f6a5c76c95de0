import numpy as np
import pytest

from quantum_slide import build_chain, eigendecompose, hp_chain
from quantum_slide.analytic import p_of_a, period_scale
from quantum_slide.errors import InvalidSizeError
from quantum_slide.jacobi import JacobiChain


def test_pst_couplings_and_transfer():
    chain = build_chain("pst", 11)
    n = np.arange(1, 11)
    assert np.allclose(chain.couplings, np.sqrt(n * (11 - n)))
    psi = eigendecompose(chain).propagate(np.eye(11)[0], np.pi / 2)
    assert abs(psi[-1]) ** 2 > 1 - 1e-12


def test_pst_spectrum_is_equally_spaced():
    # [DERIVED] the PST chain is 2 S_x for spin N/2: eigenvalues -N, -N+2, ..., N
    w = eigendecompose(build_chain("pst", 21)).eigenvalues
    assert np.allclose(w, np.arange(-20, 21, 2), atol=1e-10)


def test_field_chain_is_rescaled_hp_chain():
    # [DERIVED] H_a = (H_p - p N) / sqrt(p(1-p)) with a = (1-2p)/sqrt(p(1-p))
    for a in (-2.0, 0.5, 3.0):
        big_n = 30
        p = p_of_a(a)
        assert np.isclose((1 - 2 * p) / np.sqrt(p * (1 - p)), a)
        hp = eigendecompose(hp_chain(big_n, p)).eigenvalues
        ha = eigendecompose(build_chain("field", big_n + 1, a=a)).eigenvalues
        assert np.allclose(ha, (hp - p * big_n) / np.sqrt(p * (1 - p)), atol=1e-9)
        assert np.allclose(np.diff(ha), 1 / period_scale(a), atol=1e-9)


def test_half_slide_junction_and_fields():
    chain = build_chain("half_slide", 50, a=-2)
    assert chain.junction_coupling == 50
    assert np.isclose(chain.couplings[-1], np.sqrt(49 * 51))
    assert np.allclose(chain.fields, -2 * np.arange(50))


def test_matrix_and_reconstruct():
    chain = build_chain("field", 8, a=0.7)
    spec = eigendecompose(chain)
    assert np.allclose(spec.reconstruct(), chain.matrix(), atol=1e-12)
    assert np.isclose(chain.trace(), np.sum(spec.eigenvalues))


def test_uniform_chain():
    chain = build_chain("uniform", 5, j_uniform=2.5)
    assert np.all(chain.couplings == 2.5) and np.all(chain.fields == 0)


def test_chain_is_immutable():
    chain = build_chain("pst", 5)
    with pytest.raises(ValueError):
        chain.couplings[0] = 3.0


@pytest.mark.parametrize("kwargs", [dict(kind="pst", n_sites=1), dict(kind="uniform", n_sites=0)])
def test_too_small(kwargs):
    with pytest.raises(InvalidSizeError):
        build_chain(**kwargs)


def test_bad_inputs():
    with pytest.raises(ValueError):
        build_chain("nonsense", 5)
    with pytest.raises(ValueError):
        build_chain("field", 5, a=float("nan"))
    with pytest.raises(ValueError):
        JacobiChain(3, [1.0, -1.0], [0, 0, 0])
    with pytest.raises(InvalidSizeError):
        JacobiChain(3, [1.0], [0, 0, 0])
    with pytest.raises(ValueError):
        hp_chain(5, 1.0)


def test_field_chain_trace():
    for big_n, a in ((10, -2.0), (37, 0.25)):
        assert build_chain("field", big_n + 1, a=a).trace() == a * big_n * (big_n + 1) / 2
