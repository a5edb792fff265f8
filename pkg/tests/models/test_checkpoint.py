import numpy as np
import pytest
from omegaconf import OmegaConf

from oracle_kd.data.file_handler import U32
from oracle_kd.errors import BadMagicError, BadVersionError, ConfigurationError, TruncationError
from oracle_kd.models import ParameterStore, build_model, load_model, save_model
from oracle_kd.models.checkpoint import decode_store, encode_store, load_checkpoint, meta_path, save_checkpoint


@pytest.fixture
def store(rng):
    store = ParameterStore()
    store.add('encoder.weight', rng.normal(size=(3, 4)))
    store.add('encoder.bias', rng.normal(size=4))
    store.add('scale', np.array(2.5))
    return store


def test_round_trip(store, tmp_path):
    path = str(tmp_path / 'model.ckpt')
    save_checkpoint(store, path)
    loaded = load_checkpoint(path)
    assert loaded.manifest() == store.manifest()
    assert list(loaded) == list(store)
    for name, tensor in store.items():
        expected = tensor.data
        assert np.all(np.abs(loaded[name].data - expected) <= 2.0 ** -24 * np.abs(expected))


def test_empty_store_is_a_bare_header():
    assert len(encode_store(ParameterStore())) == 12
    assert len(decode_store(encode_store(ParameterStore()))) == 0


def test_every_truncation_is_detected(store):
    payload = encode_store(store)
    for cut in range(len(payload)):
        with pytest.raises(TruncationError):
            decode_store(payload[:cut])


def test_understated_count(store):
    payload = encode_store(store)
    with pytest.raises(TruncationError):
        decode_store(payload[:8] + U32.pack(len(store) - 1) + payload[12:])


def test_trailing_bytes(store):
    with pytest.raises(TruncationError):
        decode_store(encode_store(store) + b'\x00')


def test_bad_magic(store):
    with pytest.raises(BadMagicError):
        decode_store(b'XXXX' + encode_store(store)[4:])


def test_bad_version(store):
    payload = encode_store(store)
    with pytest.raises(BadVersionError):
        decode_store(payload[:4] + U32.pack(2) + payload[8:])


@pytest.mark.parametrize('kind', ['oracle', 'student', 'conventional'])
def test_model_round_trip(kind, tiny_cfg, tmp_path, rng):
    path = str(tmp_path / f'{kind}.ckpt')
    model = build_model(kind, tiny_cfg, seed=0)
    save_model(model, path)
    loaded = load_model(path)

    assert loaded.kind == kind
    assert loaded.params.manifest() == model.params.manifest()
    x = rng.normal(size=(12, 6))
    np.testing.assert_allclose(loaded.predict(x, [1, 2]).grid.data, model.predict(x, [1, 2]).grid.data, atol=1e-4)


def test_missing_metadata(tiny_cfg, tmp_path):
    path = str(tmp_path / 'student.ckpt')
    save_checkpoint(build_model('student', tiny_cfg, seed=0).params, path)
    with pytest.raises(ConfigurationError):
        load_model(path)


def test_metadata_must_match_parameters(tiny_cfg, tmp_path):
    path = str(tmp_path / 'student.ckpt')
    save_model(build_model('student', tiny_cfg, seed=0), path)
    meta = OmegaConf.load(meta_path(path))
    meta.channels = 12
    OmegaConf.save(meta, meta_path(path))
    with pytest.raises(ConfigurationError):
        load_model(path)
