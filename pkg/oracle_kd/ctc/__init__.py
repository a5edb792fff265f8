from oracle_kd.ctc.alignment import (
    collapse, count_alignments, enumerate_inverse, extend_with_blanks, is_feasible, min_frames, repeat_count
)
from oracle_kd.ctc.decoding import best_path, greedy_decode, is_normalized
from oracle_kd.ctc.loss import ctc_loss, ctc_loss_bruteforce, ctc_loss_op
from oracle_kd.ctc.vocab import Vocab
