import numpy as np
import pytest

from oracle_kd.ctc.alignment import is_feasible
from oracle_kd.ctc.decoding import is_normalized
from oracle_kd.config import default_config
from oracle_kd.data.task import TaskSpec, generate_dataset
from oracle_kd.errors import InfeasibleAlignmentError, UsageError
from oracle_kd.evaluator import evaluate
from oracle_kd.models import TEACHER_KINDS, OracleTeacher, StudentCTC, build_model


def random_pair(rng, feature_dim, vocab_size, downsample=4):
    frames = int(rng.integers(4, 41))
    x = rng.normal(size=(frames, feature_dim))
    while True:
        y = rng.integers(0, vocab_size, size=int(rng.integers(0, 4))).tolist()
        if is_feasible(y, -(-frames // downsample)):
            return x, y


@pytest.mark.parametrize('kind', TEACHER_KINDS + ('student',))
def test_grid_has_a_quarter_of_the_frames(kind, tiny_cfg, rng):
    model = build_model(kind, tiny_cfg, seed=0)
    out = model.predict(rng.normal(size=(100, 6)), [0, 1, 2])
    assert out.grid.shape == (25, 5)
    assert is_normalized(out.grid.data)


def test_oracle_grid_length_ignores_the_target(tiny_cfg):
    model = build_model('oracle', tiny_cfg, seed=0)
    rng = np.random.default_rng(7)
    for _ in range(20):
        x, y = random_pair(rng, 6, 4)
        assert model.predict(x, y).grid.shape[0] == model.output_length(len(x))


def test_oracle_decoder_is_not_autoregressive(tiny_cfg, rng):
    model = build_model('oracle', tiny_cfg, seed=0)
    x = rng.normal(size=(16, 6))
    first = model.predict(x, [0, 1, 2]).grid.data
    second = model.predict(x, [0, 1, 3]).grid.data
    assert not np.allclose(first[0], second[0])


def test_without_target_ignores_token_values(tiny_cfg, rng):
    model = build_model('oracle_wo_target', tiny_cfg, seed=0)
    x = rng.normal(size=(16, 6))
    np.testing.assert_array_equal(model.predict(x, [0, 1]).grid.data, model.predict(x, [3, 2]).grid.data)


def test_without_source_ignores_frame_values(tiny_cfg, rng):
    model = build_model('oracle_wo_source', tiny_cfg, seed=0)
    first = model.predict(rng.normal(size=(16, 6)), [0, 1]).grid.data
    second = model.predict(rng.normal(size=(16, 6)), [0, 1]).grid.data
    np.testing.assert_array_equal(first, second)


def test_oracle_accepts_an_empty_target(tiny_cfg, rng):
    out = build_model('oracle', tiny_cfg, seed=0).predict(rng.normal(size=(9, 6)), [])
    assert out.grid.shape == (3, 5)
    assert out.attention.shape == (3, 2)


def test_attention_spans_the_wrapped_target(tiny_cfg, rng):
    out = build_model('oracle', tiny_cfg, seed=0).predict(rng.normal(size=(12, 6)), [1, 2])
    assert out.attention.shape == (3, 4)
    np.testing.assert_allclose(out.attention.sum(axis=1), 1.0)


def test_oracle_needs_a_target(tiny_cfg, rng):
    with pytest.raises(UsageError):
        build_model('oracle', tiny_cfg, seed=0).predict(rng.normal(size=(8, 6)))


def test_infeasible_target(tiny_cfg, rng):
    with pytest.raises(InfeasibleAlignmentError):
        build_model('oracle', tiny_cfg, seed=0).predict(rng.normal(size=(4, 6)), [1, 1, 1])


def test_hidden_states(tiny_cfg, rng):
    x = rng.normal(size=(20, 6))
    assert build_model('oracle', tiny_cfg, seed=0).predict(x, [1]).hidden.shape == (5, 8)
    assert build_model('student', tiny_cfg, seed=0).predict(x).hidden.shape == (5, 6)


def test_same_seed_same_weights(tiny_cfg):
    a, b = build_model('student', tiny_cfg, seed=3), build_model('student', tiny_cfg, seed=3)
    c = build_model('student', tiny_cfg, seed=4)
    for name in a.params:
        np.testing.assert_array_equal(a.params[name].data, b.params[name].data)
    assert any(not np.array_equal(a.params[n].data, c.params[n].data) for n in a.params)


def test_kinds_and_sizes(tiny_cfg):
    models = {kind: build_model(kind, tiny_cfg, seed=0) for kind in TEACHER_KINDS + ('student',)}
    assert isinstance(models['oracle'], OracleTeacher)
    assert isinstance(models['conventional'], StudentCTC) and isinstance(models['student'], StudentCTC)
    assert models['student'].params.num_parameters() < models['conventional'].params.num_parameters()
    sizes = {models[k].params.num_parameters() for k in ('oracle', 'oracle_wo_target', 'oracle_wo_source')}
    assert len(sizes) == 1
    assert models['student'].downsample == 4


def test_unknown_kind(tiny_cfg):
    with pytest.raises(UsageError):
        build_model('transducer', tiny_cfg, seed=0)


def test_untrained_student_is_poor():
    cfg = default_config()
    samples = generate_dataset(TaskSpec(num_samples=32))
    report = evaluate(build_model('student', cfg, seed=0), samples)
    assert report.cer >= 0.5
