import numpy as np
import pytest

from hybridstream.artifact import (
    ArtifactError,
    ChecksumError,
    ModelArtifact,
    deserialize,
    serialize,
)
from hybridstream.lstm import NetworkConfig, init_params


@pytest.fixture
def artifact():
    return ModelArtifact(params=init_params(NetworkConfig(seed=4)), version=3, trained_on_window=7)


class TestRoundtrip:
    def test_identity(self, artifact):
        back = deserialize(serialize(artifact))
        assert back.version == 3
        assert back.trained_on_window == 7
        assert back.checksum == artifact.checksum
        assert back.config == artifact.config
        for name in ("w_x", "w_h", "b_g", "w_d", "b_d", "w_o", "b_o"):
            assert np.array_equal(getattr(back.params, name), getattr(artifact.params, name))

    def test_payload_size_matches_parameter_count(self, artifact):
        data = serialize(artifact)
        # 10,981 little-endian float64 values plus a modest header
        assert len(data) >= 10_981 * 8
        assert len(data) - 10_981 * 8 < 1024

    def test_serialize_deterministic(self, artifact):
        assert serialize(artifact) == serialize(artifact)


class TestCorruption:
    def test_flipped_payload_byte_fails_checksum(self, artifact):
        data = bytearray(serialize(artifact))
        data[-100] ^= 0xFF
        with pytest.raises(ChecksumError):
            deserialize(bytes(data))

    def test_bad_magic(self, artifact):
        data = bytearray(serialize(artifact))
        data[0] = 0
        with pytest.raises(ArtifactError, match="magic"):
            deserialize(bytes(data))

    def test_unsupported_format_version(self, artifact):
        data = bytearray(serialize(artifact))
        data[4] = 99
        with pytest.raises(ArtifactError, match="format"):
            deserialize(bytes(data))

    def test_truncated_payload(self, artifact):
        data = serialize(artifact)
        with pytest.raises(ArtifactError):
            deserialize(data[: len(data) - 16])


class TestInvariants:
    def test_checksum_computed_on_construction(self):
        params = init_params(NetworkConfig(input_dim=4, lstm_units=2, dense_units=2))
        art = ModelArtifact(params=params, version=1)
        assert len(art.checksum) == 64

    def test_negative_version_rejected(self):
        params = init_params(NetworkConfig(input_dim=4, lstm_units=2, dense_units=2))
        with pytest.raises(ValueError):
            ModelArtifact(params=params, version=-1)
