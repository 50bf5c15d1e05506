# -*- coding: utf-8 -*-
import numpy as np
import pytest

from apps.decoder.encoder import EncoderFeatures, ToyEncoder, check_image_size, toy_encoder_forward
from apps.decoder.stage import DecoderStage, stage_forward
from apps.ssm.scan import ScanConfig
from apps.tensor.tensor import Tensor, no_grad
from utils.exceptions import ConfigError, ShapeError


class TestToyEncoder:

    def test_feature_shapes(self, rng):
        encoder = ToyEncoder(16).reset_parameters(0)
        with no_grad():
            feats = toy_encoder_forward(Tensor(rng.standard_normal((1, 64, 64, 3))), encoder)
        assert isinstance(feats, EncoderFeatures)
        assert [item.shape for item in feats] == [(1, 16, 16, 16), (1, 8, 8, 32), (1, 4, 4, 64), (1, 2, 2, 128)]

    def test_zero_image_gives_zero_features(self):
        encoder = ToyEncoder(4).reset_parameters(0)
        for layer in [encoder.stem] + encoder.downs + encoder.convs:
            layer.bias.data[:] = 0.0
        with no_grad():
            feats = toy_encoder_forward(Tensor(np.zeros((2, 32, 64, 3))), encoder)
        assert all(not item.data.any() for item in feats)

    def test_image_size_padding_hint(self):
        with pytest.raises(ConfigError) as error:
            check_image_size(60, 64)
        assert "64×64" in str(error.value)
        check_image_size(32, 96)

    def test_rejects_wrong_channels(self):
        with pytest.raises(ShapeError):
            ToyEncoder(4)(Tensor(np.ones((1, 32, 32, 1))))


class TestDecoderStage:

    def test_shape_trace(self, rng):
        stage = DecoderStage(16, 2, stm_count=1, alpha=1, state_size=2, scan_cfg=ScanConfig(chunk_len=8)).reset_parameters(0)
        prev = [Tensor(rng.standard_normal((1, 2, 2, 16))) for _ in range(2)]
        with no_grad():
            outputs = stage_forward(prev, Tensor(rng.standard_normal((1, 4, 4, 8))), stage)
        assert [item.shape for item in outputs] == [(1, 4, 4, 8), (1, 4, 4, 8)]
        assert stage.out_width == 8

    def test_skip_wiring_error(self, rng):
        stage = DecoderStage(16, 1, stm_count=1, alpha=1, state_size=2).reset_parameters(0)
        with pytest.raises(ShapeError) as error:
            stage_forward([Tensor(rng.standard_normal((1, 2, 2, 16)))], Tensor(rng.standard_normal((1, 4, 4, 16))), stage)
        assert "(1, 4, 4, 8)" in str(error.value)

    def test_stage_without_ctm_is_branch_output(self, rng):
        stage = DecoderStage(8, 2, stm_count=1, ctm_enabled=False, alpha=1, state_size=2).reset_parameters(0)
        prev = [Tensor(rng.standard_normal((1, 2, 2, 8))) for _ in range(2)]
        skip = Tensor(rng.standard_normal((1, 4, 4, 4)))
        with no_grad():
            outputs = stage_forward(prev, skip, stage)
            expected = [branch(feature, skip) for branch, feature in zip(stage.branch, prev)]
        assert all(np.array_equal(out.data, ref.data) for out, ref in zip(outputs, expected))
        assert stage.ctm is None

    def test_config_errors(self, rng):
        with pytest.raises(ConfigError):
            DecoderStage(15, 1)
        with pytest.raises(ConfigError):
            DecoderStage(16, 1, stm_count=0)
        stage = DecoderStage(8, 2, stm_count=1, alpha=1, state_size=2)
        with pytest.raises(ConfigError):
            stage_forward([Tensor(np.ones((1, 2, 2, 8)))], Tensor(np.ones((1, 4, 4, 4))), stage)
