from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from repocompose.errors import ConfigurationError, ExampleRejected
from repocompose.tokenization import (
    PackedExample,
    TruncationPolicy,
    make_tokenizer,
    pack_training_example,
    prepare_eval_sequence,
    reference_tokenizer,
)

TOK = reference_tokenizer()
POLICY = TruncationPolicy()


# -- reference tokenizer ------------------------------------------------------

def test_encode_bytes():
    assert TOK.encode("ab") == [97, 98]


def test_encode_special_token():
    assert TOK.encode("<file_sep>x") == [256, 120]


def test_vocab_and_specials():
    assert TOK.vocab_size == 257
    assert TOK.special_ids == frozenset({256})


@given(st.text(max_size=200))
def test_roundtrip_arbitrary_text(s):
    assert TOK.decode(TOK.encode(s)) == s


def test_roundtrip_1000_random_utf8_strings():
    import random

    rng = random.Random(1234)
    for _ in range(1000):
        s = "".join(chr(rng.randrange(0x20, 0x2FFF)) for _ in range(rng.randrange(0, 40)))
        assert TOK.decode(TOK.encode(s)) == s


def test_mid_character_slice_reencodes_exactly():
    ids = TOK.encode("héllo жизнь")
    for cut in range(len(ids)):
        suffix = ids[cut:]
        assert TOK.encode(TOK.decode(suffix)) == suffix


def test_make_tokenizer_selector():
    assert make_tokenizer("reference").name == "reference"
    with pytest.raises(ConfigurationError):
        make_tokenizer("bpe-gigantic")


# -- packing ------------------------------------------------------------------

def text_of_tokens(n, fill="a"):
    return fill * n


def test_pack_within_budget_no_truncation():
    packed = pack_training_example(text_of_tokens(100), text_of_tokens(10), POLICY, TOK)
    assert packed.context_len == 100
    assert packed.completion_len == 10
    assert sum(packed.loss_mask) == 10
    assert packed.loss_mask[-10:] == (1,) * 10


def test_pack_large_both_hits_exact_three_to_one():
    packed = pack_training_example(
        text_of_tokens(20_000), text_of_tokens(5_000), POLICY, TOK
    )
    assert packed.completion_len == 4096
    assert packed.context_len == 12_288
    assert len(packed.input_ids) == 16_384
    assert packed.context_len == 3 * packed.completion_len


def test_pack_short_context_truncates_completion_by_ratio():
    packed = pack_training_example(text_of_tokens(6), text_of_tokens(10), POLICY, TOK)
    assert packed.completion_len == 2
    assert packed.context_len == 6


def test_pack_empty_context_has_no_ratio_constraint():
    packed = pack_training_example("", text_of_tokens(10), POLICY, TOK)
    assert packed.context_len == 0
    assert packed.completion_len == 10


def test_pack_rejects_empty_completion():
    with pytest.raises(ExampleRejected):
        pack_training_example(text_of_tokens(10), "", POLICY, TOK, example_id="e1")


def test_pack_rejects_ratio_zeroed_completion():
    with pytest.raises(ExampleRejected):
        pack_training_example(text_of_tokens(2), text_of_tokens(10), POLICY, TOK)


def test_pack_context_is_suffix_of_full_encoding():
    context = "".join(chr(97 + i % 26) for i in range(30_000))
    packed = pack_training_example(context, text_of_tokens(100), POLICY, TOK)
    full = TOK.encode(context)
    assert list(packed.input_ids[: packed.context_len]) == full[-packed.context_len :]


def test_pack_full_loss_mode():
    packed = pack_training_example(
        text_of_tokens(30), text_of_tokens(10), POLICY, TOK, mask_mode="full"
    )
    assert packed.loss_mask == (1,) * 40


@given(st.integers(0, 30_000), st.integers(1, 6_000))
def test_pack_invariants_hold(context_len, completion_len):
    try:
        packed = pack_training_example(
            text_of_tokens(context_len), text_of_tokens(completion_len), POLICY, TOK
        )
    except ExampleRejected:
        assert context_len < POLICY.min_ratio  # only tiny contexts can zero out
        return
    assert len(packed.input_ids) <= POLICY.total_max
    assert packed.completion_len <= POLICY.completion_max
    if packed.context_len > 0:
        assert packed.context_len >= POLICY.min_ratio * packed.completion_len
    assert sum(packed.loss_mask) == packed.completion_len


def test_packed_example_invariants_enforced():
    with pytest.raises(ValueError):
        PackedExample("e", (1, 2), (1,), 1, 1)
    with pytest.raises(ValueError):
        PackedExample("e", (1, 2), (0, 1), 0, 1)


def test_policy_validation():
    with pytest.raises(ConfigurationError):
        TruncationPolicy(total_max=100, completion_max=200)


# -- evaluation-mode preparation ----------------------------------------------

def test_eval_sequence_unchanged_when_short():
    ids = prepare_eval_sequence(text_of_tokens(4), text_of_tokens(6), 16, TOK)
    assert len(ids) == 10


def test_eval_sequence_left_truncates():
    ids = prepare_eval_sequence(text_of_tokens(19_000), text_of_tokens(1_000), 16_384, TOK)
    assert len(ids) == 16_384
    full = TOK.encode(text_of_tokens(19_000) + text_of_tokens(1_000))
    assert ids == full[-16_384:]


def test_eval_sequence_empty_context_fl4k_shape():
    prefix = "line one\n" * 800
    ids = prepare_eval_sequence("", prefix, 4_096, TOK)
    assert ids == TOK.encode(prefix)[-4_096:]


def test_eval_sequence_requires_positive_length():
    with pytest.raises(ConfigurationError):
        prepare_eval_sequence("a", "b", 0, TOK)


# -- external tokenizer protocol ------------------------------------------------

def test_subprocess_tokenizer_protocol():
    import pathlib
    import sys

    script = pathlib.Path(__file__).parent / "fixtures" / "toy_tokenizer.py"
    tok = make_tokenizer(f"external:{sys.executable} {script}")
    try:
        assert tok.name == "toy-shift"
        assert tok.vocab_size == 1257
        assert tok.special_ids == frozenset({1256})
        assert tok.encode("ab") == [1097, 1098]
        assert tok.encode("<file_sep>x") == [1256, 1120]
        assert tok.decode(tok.encode("mixed <file_sep> text")) == "mixed <file_sep> text"
    finally:
        tok.close()
