import numpy as np

from oracle_kd.ctc.decoding import best_path, greedy_decode, is_normalized
from oracle_kd.ctc.vocab import Vocab

VOCAB = Vocab(['a', 'b'])
A, B, BLANK = 0, 1, VOCAB.blank


def one_hot_grid(path, classes=3):
    grid = np.full((len(path), classes), np.log(0.1 / (classes - 1)))
    grid[np.arange(len(path)), path] = np.log(0.9)
    return grid


def test_greedy_decode_merges_then_drops_blanks():
    assert greedy_decode(one_hot_grid([A, A, BLANK, B]), VOCAB) == [A, B]
    assert greedy_decode(one_hot_grid([BLANK] * 4), VOCAB) == []
    assert greedy_decode(one_hot_grid([A, BLANK, A, A]), VOCAB) == [A, A]


def test_ties_go_to_the_lowest_class():
    grid = np.log(np.full((2, 3), 1.0 / 3.0))
    assert best_path(grid) == [0, 0]


def test_empty_grid():
    assert greedy_decode(np.zeros((0, 3)), VOCAB) == []


def test_normalisation_check():
    assert is_normalized(one_hot_grid([A, B]))
    assert not is_normalized(np.zeros((2, 3)))
