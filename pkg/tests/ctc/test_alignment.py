import itertools

import pytest

from oracle_kd.ctc.alignment import (
    collapse, count_alignments, enumerate_inverse, extend_with_blanks, is_feasible, min_frames, repeat_count
)
from oracle_kd.ctc.vocab import Vocab

VOCAB = Vocab(['a', 'b'])
A, B, BLANK = 0, 1, VOCAB.blank


@pytest.mark.parametrize('pi,expected', [
    ([A, A, BLANK, B], [A, B]),
    ([BLANK, BLANK, BLANK], []),
    ([A, BLANK, A], [A, A]),
    ([], []),
])
def test_collapse(pi, expected):
    assert collapse(pi, VOCAB) == expected


def test_collapse_is_idempotent_through_lift():
    y = collapse([A, A, BLANK, B, BLANK, A], VOCAB)
    assert y == [A, B, A]
    assert collapse(VOCAB.lift(y), VOCAB) == y


def test_inverse_of_ab_in_three_frames():
    expected = {(A, A, B), (A, B, B), (A, B, BLANK), (A, BLANK, B), (BLANK, A, B)}
    assert enumerate_inverse([A, B], 3, VOCAB) == expected


def test_inverse_of_repeat_needs_a_blank():
    assert enumerate_inverse([A, A], 3, VOCAB) == {(A, BLANK, A)}


def test_inverse_of_single_frame():
    assert enumerate_inverse([A], 1, VOCAB) == {(A,)}


def test_inverse_with_blank_first_vocab():
    vocab = Vocab(['a', 'b'], blank_last=False)
    a, b = vocab.class_of(0), vocab.class_of(1)
    assert vocab.blank == 0
    assert enumerate_inverse([0, 1], 3, vocab) == {(a, a, b), (a, b, b), (a, b, 0), (a, 0, b), (0, a, b)}


def all_targets(vocab, max_length):
    for length in range(max_length + 1):
        yield from (list(t) for t in itertools.product(range(len(vocab)), repeat=length))


@pytest.mark.parametrize('frames', range(0, 7))
def test_feasibility_law(frames):
    for y in all_targets(VOCAB, 3):
        assert bool(enumerate_inverse(y, frames, VOCAB)) == is_feasible(y, frames) == (frames >= min_frames(y))


@pytest.mark.parametrize('frames', range(0, 9))
def test_path_count_matches_enumeration(frames):
    vocab = Vocab(['a', 'b'])
    for y in all_targets(vocab, 3):
        paths = enumerate_inverse(y, frames, vocab)
        assert all(collapse(pi, vocab) == y for pi in paths)
        assert count_alignments(y, frames, vocab) == len(paths)


def test_repeat_count_and_min_frames():
    assert repeat_count([A, A, B, B, B]) == 3
    assert min_frames([A, A, B]) == 4
    assert min_frames([]) == 0


def test_extended_sequence():
    assert extend_with_blanks([A, B], VOCAB) == [BLANK, A, BLANK, B, BLANK]
