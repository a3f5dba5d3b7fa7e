import numpy as np
import pytest

import dcsplit as d
from dcsplit.subsolvers import compiled_kernel_available

needs_kernel = pytest.mark.skipif(not compiled_kernel_available(),
                                  reason="compiled kernel not built")


@needs_kernel
class TestCompiledKernel:
    def test_agrees_with_python_path(self, bz201):
        cfg = d.SubsolverConfig(rtol=1e-8, atol=1e-10)
        compiled = d.reaction_propagator(bz201, cfg, backend="compiled")
        python = d.reaction_propagator(bz201, cfg, backend="python")
        u0 = bz201.initial_state
        for dt in (1e-5, 1e-4, 1e-3):
            a = compiled.advance(u0, 0.0, dt)
            b = python.advance(u0, 0.0, dt)
            scale = cfg.atol + cfg.rtol * np.abs(a)
            assert np.max(np.abs(a - b) / scale) < 1e-1  # both inside tolerance band

    def test_agreement_within_tolerance_band(self, bz201):
        u0 = bz201.initial_state
        for rtol in (1e-6, 1e-9):
            cfg = d.SubsolverConfig(rtol=rtol, atol=rtol * 1e-2)
            for dt in (2e-4, 1e-3):
                a = d.reaction_propagator(bz201, cfg, backend="compiled").advance(u0, 0.0, dt)
                b = d.reaction_propagator(bz201, cfg, backend="python").advance(u0, 0.0, dt)
                scale = cfg.atol + rtol * np.abs(a)
                assert np.max(np.abs(a - b) / scale) < 5.0

    def test_zero_span(self, bz201):
        prop = d.reaction_propagator(bz201, backend="compiled")
        out = prop.advance(bz201.initial_state, 0.0, 0.0)
        np.testing.assert_array_equal(out, bz201.initial_state)

    def test_deterministic(self, bz201):
        cfg = d.SubsolverConfig(rtol=1e-7, atol=1e-9)
        prop = d.reaction_propagator(bz201, cfg, backend="compiled")
        a = prop.advance(bz201.initial_state, 0.0, 3e-4)
        b = prop.advance(bz201.initial_state, 0.0, 3e-4)
        np.testing.assert_array_equal(a, b)

    def test_env_override_disables_kernel(self, bz201, monkeypatch):
        monkeypatch.setenv("DCSPLIT_PURE_PYTHON", "1")
        assert not compiled_kernel_available()
