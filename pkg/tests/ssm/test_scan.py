# -*- coding: utf-8 -*-
import numpy as np
import pytest

from apps.enums import ScanModeEnum
from apps.harness.verify import run_verify, suite_scan
from apps.ssm.bench import random_scan_inputs, scan_oracle_grid
from apps.ssm.scan import NAIVE, ScanConfig, max_rel_err, scan_states, selective_scan, ssm_scan_chunked, ssm_scan_naive
from apps.tensor import ops
from apps.tensor.grad_check import gradient_check
from apps.tensor.tensor import Tensor
from utils.exceptions import ShapeError


def _scan_inputs(rng, batch, length, channels, state_size):
    a = Tensor(rng.uniform(0.5, 0.99, size=(batch, length, channels, state_size)))
    b = Tensor(rng.standard_normal((batch, length, channels, state_size)))
    c = Tensor(rng.standard_normal((batch, length, state_size)))
    x = Tensor(rng.standard_normal((batch, length, channels)))
    return a, b, c, x


def _convolution_form(a, b, c, x):
    """ y_l = Σ_{k≤l} C_l · (Π_{k<j≤l} Ā_j) ⊙ B̄_k · x_k """
    batch, length, channels, state_size = a.shape
    y = np.zeros((batch, length, channels))
    for l in range(length):
        for k in range(l + 1):
            decay = np.prod(a[:, k + 1:l + 1], axis=1)
            y[:, l] += np.einsum("bcn,bn->bc", decay * b[:, k] * x[:, k, :, None], c[:, l])
    return y


class TestScan:

    def test_geometric_decay(self):
        a = Tensor(np.full((1, 3, 1, 1), 0.5))
        b = Tensor(np.ones((1, 3, 1, 1)))
        c = Tensor(np.ones((1, 3, 1)))
        x = Tensor(np.array([1.0, 0.0, 0.0]).reshape(1, 3, 1))
        for cfg in (NAIVE, ScanConfig(chunk_len=2)):
            assert selective_scan(a, b, c, x, cfg).data.reshape(-1).tolist() == [1.0, 0.5, 0.25]

    def test_zero_input(self, rng):
        a, b, c, _ = _scan_inputs(rng, 2, 6, 3, 2)
        y = ssm_scan_chunked(a, b, c, Tensor(np.zeros((2, 6, 3))))
        assert not y.data.any()

    def test_matches_convolution_form(self, rng):
        a, b, c, x = _scan_inputs(rng, 2, 7, 3, 4)
        expected = _convolution_form(a.data, b.data, c.data, x.data)
        assert np.allclose(ssm_scan_naive(a, b, c, x).data, expected, rtol=1e-10, atol=1e-12)
        assert np.allclose(ssm_scan_chunked(a, b, c, x, ScanConfig(chunk_len=3)).data, expected, rtol=1e-10, atol=1e-12)

    @pytest.mark.parametrize("chunk_len", [1, 7, 100])
    def test_degenerate_chunks_are_exact(self, rng, chunk_len):
        a, u = random_scan_inputs(rng, 2, 7, 3, 2, np.float64)
        reference = scan_states(a, u, NAIVE)
        assert np.array_equal(scan_states(a, u, ScanConfig(chunk_len=chunk_len)), reference)

    def test_float32_long_sequence(self, rng):
        a, u = random_scan_inputs(rng, 2, 1000, 8, 4, np.float32)
        chunked = scan_states(a, u, ScanConfig(chunk_len=64))
        assert chunked.dtype == np.float32
        assert max_rel_err(chunked, scan_states(a, u, NAIVE)) <= 1e-5

    def test_length_not_multiple_of_chunk(self, rng):
        a, u = random_scan_inputs(rng, 1, 10, 2, 3, np.float64)
        chunked = scan_states(a, u, ScanConfig(mode=ScanModeEnum.chunked, chunk_len=4))
        assert chunked.shape == u.shape
        assert max_rel_err(chunked, scan_states(a, u, NAIVE)) <= 1e-12

    def test_shape_errors(self, rng):
        a, b, c, x = _scan_inputs(rng, 1, 4, 2, 3)
        with pytest.raises(ShapeError):
            selective_scan(a, b, Tensor(np.ones((1, 4, 2))), x)
        with pytest.raises(ShapeError):
            selective_scan(a, b, c, Tensor(np.ones((1, 4, 3))))

    @pytest.mark.parametrize("cfg", [NAIVE, ScanConfig(chunk_len=3)])
    def test_gradient(self, rng, cfg):
        a, b, c, x = _scan_inputs(rng, 2, 7, 3, 2)
        for tensor in (a, b, c, x):
            tensor.requires_grad = True
        projection = Tensor(rng.standard_normal((2, 7, 3)))
        report = gradient_check(
            lambda: ops.sum(ops.mul(selective_scan(a, b, c, x, cfg), projection)),
            [("a", a), ("b", b), ("c", c), ("x", x)], rng=rng
        )
        assert report.passed, report


class TestScanOracle:

    def test_small_grid_passes(self):
        assert scan_oracle_grid(seeds=range(1), dtype="float64", lengths=(1, 7, 64)) <= 1e-12

    def test_broken_combine_is_caught(self, monkeypatch):
        monkeypatch.setattr("apps.ssm.scan.combine_pairs", lambda left, right: (left[0] * right[0], left[1] + right[1]))
        assert not all(check.passed for check in suite_scan(seeds=range(1)))
        assert not run_verify(["scan"], seeds=range(1)).passed

    @pytest.mark.slow
    def test_full_grid(self):
        assert run_verify(["scan"]).passed
