"""The collapse mapping B and its inverse."""
import itertools
from typing import List, Sequence, Set, Tuple

from oracle_kd.ctc.vocab import Vocab

Alignment = Tuple[int, ...]
LabelSeq = List[int]


def collapse(pi: Sequence[int], vocab: Vocab) -> LabelSeq:
    """Merge consecutive repeats, then drop blanks."""
    out: LabelSeq = []
    previous = None
    for cls in pi:
        cls = int(cls)
        if cls != previous and cls != vocab.blank:
            out.append(vocab.token_of(cls))
        previous = cls
    return out


def repeat_count(y: Sequence[int]) -> int:
    return sum(1 for a, b in zip(y, y[1:]) if a == b)


def min_frames(y: Sequence[int]) -> int:
    """Shortest alignment length that collapses to `y`."""
    return len(y) + repeat_count(y)


def is_feasible(y: Sequence[int], frames: int) -> bool:
    return frames >= min_frames(y)


def enumerate_inverse(y: Sequence[int], frames: int, vocab: Vocab) -> Set[Alignment]:
    """B^-1(y) restricted to length `frames`, by exhaustive search over I'^T."""
    target = [int(t) for t in y]
    return {
        pi for pi in itertools.product(range(vocab.num_classes), repeat=frames)
        if collapse(pi, vocab) == target
    }


def extend_with_blanks(y: Sequence[int], vocab: Vocab) -> List[int]:
    """Blank-interleaved class sequence of length 2L+1."""
    ext = [vocab.blank]
    for token in y:
        ext.extend([vocab.class_of(int(token)), vocab.blank])
    return ext


def count_alignments(y: Sequence[int], frames: int, vocab: Vocab) -> int:
    """|B^-1(y)| for length `frames`, counted over the extended label lattice."""
    ext = extend_with_blanks(y, vocab)
    states = len(ext)
    if frames == 0:
        return 1 if not y else 0

    counts = [0] * states
    counts[0] = 1
    if states > 1:
        counts[1] = 1

    for _ in range(1, frames):
        nxt = [0] * states
        for s in range(states):
            total = counts[s]
            if s >= 1:
                total += counts[s - 1]
            if s >= 2 and ext[s] != vocab.blank and ext[s] != ext[s - 2]:
                total += counts[s - 2]
            nxt[s] = total
        counts = nxt

    return counts[-1] + (counts[-2] if states > 1 else 0)
