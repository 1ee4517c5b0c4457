import copy
import math

import numpy as np
import pytest

from rnntagger.architectures import ModelSpec, decode_window, encode, full_forward, init_model
from rnntagger.corpus import Sentence, Token, build_vocab
from rnntagger.evaluation import EvalReport
from rnntagger.linalg import SeededRng
from rnntagger.model import Model
from rnntagger.representation import EmbeddingTable, FeatureConfig
from rnntagger.tagging import BIO2, make_tagset
from rnntagger import training
from rnntagger.training import (
    ExampleWindow,
    TrainConfig,
    analytic_total_grads,
    fit,
    gradient_check,
    nll_loss,
    total_windowed_nll,
    train_epoch,
    train_example,
)


def sent(words, tags, doc="0"):
    return Sentence([Token(w, t) for w, t in zip(words, tags)], doc_id=doc)


TRAIN_SENTS = [
    sent(["anna", "visited", "acme", "corp", "today"],
         ["B-PER", "O", "B-ORG", "I-ORG", "O"]),
    sent(["bob", "left", "anna", "alone"],
         ["B-PER", "O", "B-PER", "O"]),
]


def build_model(sentences, arch="basic", decoder="ELMAN", encoder=None,
                hidden=6, dim=4, v_c=1, seed=3, fconf=None):
    vocab = build_vocab(sentences)
    rng = SeededRng(seed)
    table = EmbeddingTable.random(vocab, dim, rng)
    fconf = fconf or FeatureConfig()
    tagset = make_tagset(["ORG", "PER"], BIO2)
    n_in = (dim + fconf.width) * (2 * v_c + 1)
    spec = ModelSpec(arch=arch, n_in=n_in, hidden=hidden, n_tags=len(tagset),
                     decoder_cell=decoder, encoder_cell=encoder)
    params = init_model(spec, rng)
    return Model(spec=spec, params=params, table=table, fconf=fconf,
                 tagset=tagset, scheme=BIO2, v_c=v_c)


def first_window(model, si=0, pos=0):
    s = TRAIN_SENTS[si]
    y = model.tag_to_index[s.tokens[pos].gold_tag]
    return ExampleWindow(s, pos, y)


def model_state(model):
    arrays = [(b, n, a.copy()) for b in sorted(model.params)
              for n, a in sorted(model.params[b].items())]
    return arrays, model.table.matrix.copy()


def states_equal(a, b):
    (pa, ma), (pb, mb) = a, b
    return (all(np.array_equal(x[2], y[2]) for x, y in zip(pa, pb))
            and np.array_equal(ma, mb))


# ---------------------------------------------------------------- config

def test_config_defaults():
    cfg = TrainConfig()
    assert cfg.learning_rate == 0.01
    assert cfg.v_d == 9 and cfg.v_c == 5
    assert cfg.hidden == 200
    assert cfg.shuffle and cfg.fine_tune_embeddings
    assert cfg.clip is False and cfg.clip_threshold == 5.0


@pytest.mark.parametrize("kwargs", [
    {"learning_rate": 0.0},
    {"learning_rate": -0.1},
    {"v_d": -1},
    {"v_c": -2},
    {"epochs": -1},
    {"dev_eval_every": 0},
])
def test_config_rejects_bad_values(kwargs):
    with pytest.raises(ValueError):
        TrainConfig(**kwargs)


# ------------------------------------------------------------------ loss

def test_nll_of_half_is_ln_two():
    assert nll_loss(np.array([0.25, 0.25, 0.5]), 2) == pytest.approx(math.log(2), abs=1e-12)


def test_nll_of_certain_correct_is_zero():
    assert nll_loss(np.array([0.0, 1.0, 0.0]), 1) == 0.0


def test_nll_of_uniform_is_ln_classes():
    o = np.full(4, 0.25)
    assert nll_loss(o, 3) == pytest.approx(math.log(4), abs=1e-12)


def test_nll_clamps_zero_probability():
    assert nll_loss(np.array([1.0, 0.0]), 1) == pytest.approx(-math.log(1e-12))


def test_nll_index_out_of_range():
    with pytest.raises(IndexError):
        nll_loss(np.array([0.5, 0.5]), 2)
    with pytest.raises(IndexError):
        nll_loss(np.array([0.5, 0.5]), -1)


# --------------------------------------------------------- train_example

def test_zero_lr_changes_nothing():
    model = build_model(TRAIN_SENTS)
    before = model_state(model)
    loss = train_example(model, first_window(model), 0.0, TrainConfig())
    assert loss > 0.0
    assert states_equal(before, model_state(model))


def test_loss_is_preupdate_windowed_nll():
    model = build_model(TRAIN_SENTS, arch="bidirectional", decoder="JORDAN",
                        encoder="ELMAN")
    probe = copy.deepcopy(model)
    w = first_window(model, si=0, pos=3)
    cfg = TrainConfig(learning_rate=0.1, v_d=2)
    loss = train_example(model, w, cfg.learning_rate, cfg)

    enc_in = probe.encode_input(w.sentence)
    enc = encode(probe.spec, probe.params, enc_in.xs)
    dec = decode_window(probe.spec, probe.params, enc, 1, 3)  # max(0, 3-2)..3
    assert loss == nll_loss(dec.dists[-1], w.gold_index)


def test_first_position_is_single_step_from_zero_state():
    model = build_model(TRAIN_SENTS)
    probe = copy.deepcopy(model)
    w = first_window(model, pos=0)
    loss = train_example(model, w, 0.01, TrainConfig())
    enc_in = probe.encode_input(w.sentence)
    enc = encode(probe.spec, probe.params, enc_in.xs)
    dec = decode_window(probe.spec, probe.params, enc, 0, 0)
    assert len(dec.dists) == 1
    assert loss == nll_loss(dec.dists[0], w.gold_index)


@pytest.mark.parametrize("arch,decoder,encoder", [
    ("basic", "ELMAN", None),
    ("basic", "JORDAN_GRU", None),
    ("contextual", "JORDAN", "ELMAN"),
    ("bidirectional", "ELMAN_GRU", "JORDAN"),
    ("mesnil", None, "ELMAN"),
])
def test_repeated_training_decreases_loss_monotonically(arch, decoder, encoder):
    model = build_model(TRAIN_SENTS, arch=arch, decoder=decoder, encoder=encoder)
    w = first_window(model, si=0, pos=2)
    cfg = TrainConfig(learning_rate=0.02)
    losses = [train_example(model, w, 0.02, cfg) for _ in range(100)]
    for a, b in zip(losses, losses[1:]):
        assert b <= a + 1e-9
    assert losses[-1] < losses[0] - 1e-4


def test_fine_tuning_updates_only_reachable_rows():
    # v_c=0 and v_d=0: the example at position 2 sees exactly one word
    model = build_model(TRAIN_SENTS, v_c=0)
    before = model.table.matrix.copy()
    w = first_window(model, si=0, pos=2)
    cfg = TrainConfig(learning_rate=0.5, v_d=0)
    train_example(model, w, 0.5, cfg)

    touched = model.table.vocab.index("acme")
    assert not np.array_equal(model.table.matrix[touched], before[touched])
    for word in ["anna", "visited", "corp", "today", "bob"]:
        i = model.table.vocab.index(word)
        assert np.array_equal(model.table.matrix[i], before[i]), word
    assert np.all(model.table.matrix[0] == 0.0)  # PAD stays frozen


def test_fine_tune_flag_off_freezes_embeddings():
    model = build_model(TRAIN_SENTS)
    before = model.table.matrix.copy()
    cfg = TrainConfig(learning_rate=0.5, fine_tune_embeddings=False)
    train_example(model, first_window(model), 0.5, cfg)
    assert np.array_equal(model.table.matrix, before)


def test_window_truncation_limits_embedding_reach():
    # with v_d=0 and v_c=1 the receptive field of position 3 is tokens 2..4
    model = build_model(TRAIN_SENTS, v_c=1)
    before = model.table.matrix.copy()
    cfg = TrainConfig(learning_rate=0.5, v_d=0)
    w = first_window(model, si=0, pos=3)
    train_example(model, w, 0.5, cfg)
    changed = {word for word in ["anna", "visited", "acme", "corp", "today"]
               if not np.array_equal(model.table.matrix[model.table.vocab.index(word)],
                                     before[model.table.vocab.index(word)])}
    assert changed == {"acme", "corp", "today"}


def test_nonfinite_parameters_abort():
    model = build_model(TRAIN_SENTS)
    model.params["decoder"]["U"][0, 0] = float("nan")
    with pytest.raises(FloatingPointError):
        train_example(model, first_window(model), 0.01, TrainConfig())


def test_nonfinite_gradient_names_block():
    acc = {"decoder": {"U": np.array([[float("inf")]])}}
    with pytest.raises(FloatingPointError, match=r"decoder\.U"):
        training._check_finite(acc, {})


def test_clip_caps_global_update_norm():
    model = build_model(TRAIN_SENTS)
    reference = copy.deepcopy(model)
    cfg = TrainConfig(learning_rate=1.0, clip=True, clip_threshold=1e-3)
    train_example(model, first_window(model), 1.0, cfg)

    sq = 0.0
    for b in model.params:
        for n in model.params[b]:
            d = model.params[b][n] - reference.params[b][n]
            sq += float(np.sum(d * d))
    d = model.table.matrix - reference.table.matrix
    sq += float(np.sum(d * d))
    # update = lr * clipped gradient, whose norm is exactly the threshold
    assert math.sqrt(sq) == pytest.approx(1e-3, rel=1e-9)


def test_huge_clip_threshold_is_identity():
    m1 = build_model(TRAIN_SENTS)
    m2 = copy.deepcopy(m1)
    w = first_window(m1)
    train_example(m1, w, 0.1, TrainConfig(learning_rate=0.1, clip=True,
                                          clip_threshold=1e9))
    train_example(m2, w, 0.1, TrainConfig(learning_rate=0.1))
    assert states_equal(model_state(m1), model_state(m2))


# ----------------------------------------------------------- train_epoch

def test_epoch_visits_every_position_once():
    model = build_model(TRAIN_SENTS)
    stats = train_epoch(model, TRAIN_SENTS, TrainConfig(learning_rate=0.01))
    assert stats.n_examples == sum(len(s) for s in TRAIN_SENTS)
    assert stats.mean_loss > 0.0
    assert stats.examples_per_sec > 0.0


def test_single_token_dataset_is_one_update():
    data = [sent(["anna"], ["B-PER"])]
    m1 = build_model(data)
    m2 = copy.deepcopy(m1)
    stats = train_epoch(m1, data, TrainConfig(learning_rate=0.05))
    assert stats.n_examples == 1
    y = m2.tag_to_index["B-PER"]
    train_example(m2, ExampleWindow(data[0], 0, y), 0.05, TrainConfig(learning_rate=0.05))
    assert states_equal(model_state(m1), model_state(m2))


def test_empty_dataset_rejected():
    model = build_model(TRAIN_SENTS)
    with pytest.raises(ValueError):
        train_epoch(model, [], TrainConfig())


def test_epoch_without_shuffle_is_corpus_order():
    m1 = build_model(TRAIN_SENTS)
    m2 = copy.deepcopy(m1)
    cfg = TrainConfig(learning_rate=0.05, shuffle=False)
    train_epoch(m1, TRAIN_SENTS, cfg)
    # replay manually in corpus order
    for s in TRAIN_SENTS:
        for pos in range(len(s)):
            y = m2.tag_to_index[s.tokens[pos].gold_tag]
            train_example(m2, ExampleWindow(s, pos, y), 0.05, cfg)
    assert states_equal(model_state(m1), model_state(m2))


def test_same_seed_same_parameters():
    cfg = TrainConfig(learning_rate=0.05, epochs=2, seed=11)
    m1 = build_model(TRAIN_SENTS, seed=4)
    m2 = build_model(TRAIN_SENTS, seed=4)
    fit(m1, TRAIN_SENTS, [], cfg)
    fit(m2, TRAIN_SENTS, [], cfg)
    assert states_equal(model_state(m1), model_state(m2))


def test_shuffled_epochs_differ_across_epochs_but_replay_bitwise():
    # the rng is threaded through fit, so epoch 2's order differs from
    # epoch 1's; replaying fit from scratch reproduces both exactly
    cfg = TrainConfig(learning_rate=0.05, epochs=2, seed=9)
    m1 = build_model(TRAIN_SENTS, seed=4)
    one_epoch = build_model(TRAIN_SENTS, seed=4)
    fit(m1, TRAIN_SENTS, [], cfg)
    rng = SeededRng(cfg.seed)
    train_epoch(one_epoch, TRAIN_SENTS, cfg, rng)
    train_epoch(one_epoch, TRAIN_SENTS, cfg, rng)
    assert states_equal(model_state(m1), model_state(one_epoch))


def test_gold_cache_snapshots_follow_documents():
    tagset = make_tagset(["ORG", "PER"], BIO2)
    fconf = FeatureConfig(cache_tagset=tagset)
    data = [
        sent(["anna", "smiled"], ["B-PER", "O"], doc="a"),
        sent(["anna", "left"], ["B-PER", "O"], doc="a"),
        sent(["anna", "again"], ["O", "O"], doc="b"),
    ]
    model = build_model(data, fconf=fconf)
    snaps = training._cache_snapshots(model, data)
    assert snaps[0].get("anna") is None
    assert snaps[1].get("anna") == model.tag_to_index["B-PER"]
    assert snaps[1].get("smiled") == model.tag_to_index["O"]
    assert snaps[2].get("anna") is None  # new document


def test_untagged_training_data_rejected():
    model = build_model(TRAIN_SENTS)
    bad = [Sentence([Token("anna")])]
    with pytest.raises(ValueError):
        train_epoch(model, bad, TrainConfig())


# ------------------------------------------------------------------- fit

def test_fit_single_epoch_equals_train_epoch():
    cfg = TrainConfig(learning_rate=0.05, epochs=1, seed=5)
    m1 = build_model(TRAIN_SENTS, seed=4)
    m2 = build_model(TRAIN_SENTS, seed=4)
    result = fit(m1, TRAIN_SENTS, [], cfg)
    train_epoch(m2, TRAIN_SENTS, cfg, SeededRng(cfg.seed))
    assert states_equal(model_state(m1), model_state(m2))
    assert result.best_epoch == 1
    assert len(result.history) == 1


def fake_dev_scores(scores, monkeypatch, record):
    seq = iter(scores)

    def stub(model, dev, gold_spans):
        record.append(copy.deepcopy(model.params))
        f1 = next(seq)
        return EvalReport(f1, f1, f1, 1, 1, 1, {})

    monkeypatch.setattr(training, "_dev_f1", stub)


def test_fit_keeps_best_dev_epoch(monkeypatch):
    record = []
    fake_dev_scores([50.0, 80.0, 70.0], monkeypatch, record)
    cfg = TrainConfig(learning_rate=0.05, epochs=3, seed=2)
    model = build_model(TRAIN_SENTS)
    dev = [sent(["anna"], ["B-PER"])]
    result = fit(model, TRAIN_SENTS, dev, cfg)
    assert result.best_epoch == 2
    assert [row["dev_f1"] for row in result.history] == [50.0, 80.0, 70.0]
    for b in record[1]:
        for n in record[1][b]:
            assert np.array_equal(model.params[b][n], record[1][b][n])


def test_fit_tie_keeps_earlier_epoch(monkeypatch):
    record = []
    fake_dev_scores([70.0, 70.0], monkeypatch, record)
    cfg = TrainConfig(learning_rate=0.05, epochs=2, seed=2)
    model = build_model(TRAIN_SENTS)
    result = fit(model, TRAIN_SENTS, [sent(["anna"], ["B-PER"])], cfg)
    assert result.best_epoch == 1
    for b in record[0]:
        for n in record[0][b]:
            assert np.array_equal(model.params[b][n], record[0][b][n])


def test_fit_empty_dev_returns_last_epoch():
    cfg = TrainConfig(learning_rate=0.05, epochs=3, seed=2)
    m1 = build_model(TRAIN_SENTS, seed=4)
    m2 = build_model(TRAIN_SENTS, seed=4)
    result = fit(m1, TRAIN_SENTS, [], cfg)
    rng = SeededRng(cfg.seed)
    for _ in range(3):
        train_epoch(m2, TRAIN_SENTS, cfg, rng)
    assert result.best_epoch == 3
    assert states_equal(model_state(m1), model_state(m2))
    assert all("dev_f1" not in row for row in result.history)


def test_fit_dev_eval_every_thins_evaluations(monkeypatch):
    record = []
    fake_dev_scores([60.0, 61.0], monkeypatch, record)
    cfg = TrainConfig(learning_rate=0.05, epochs=3, seed=2, dev_eval_every=2)
    model = build_model(TRAIN_SENTS)
    result = fit(model, TRAIN_SENTS, [sent(["anna"], ["B-PER"])], cfg)
    evaluated = [row["epoch"] for row in result.history if "dev_f1" in row]
    assert evaluated == [2, 3]  # every 2nd epoch plus the final one


def test_fit_real_dev_scores_are_span_f1():
    cfg = TrainConfig(learning_rate=0.06, epochs=2, seed=3)
    model = build_model(TRAIN_SENTS, hidden=8)
    result = fit(model, TRAIN_SENTS, TRAIN_SENTS, cfg)
    for row in result.history:
        assert 0.0 <= row["dev_f1"] <= 100.0
        assert 0.0 <= row["dev_p"] <= 100.0
        assert 0.0 <= row["dev_r"] <= 100.0


# ---------------------------------------------------- windowed vs full

@pytest.mark.parametrize("arch,decoder,encoder", [
    ("basic", "ELMAN", None),
    ("basic", "JORDAN", None),
    ("contextual", "ELMAN_GRU", "ELMAN"),
    ("bidirectional", "JORDAN_GRU", "ELMAN_GRU"),
])
def test_long_window_matches_full_decode_exactly(arch, decoder, encoder):
    model = build_model(TRAIN_SENTS, arch=arch, decoder=decoder, encoder=encoder)
    s = TRAIN_SENTS[0]
    n = len(s)
    enc_in = model.encode_input(s)
    enc = encode(model.spec, model.params, enc_in.xs)
    lo = max(0, (n - 1) - 9)  # v_d=9 >= n-1, so lo == 0
    assert lo == 0
    dec = decode_window(model.spec, model.params, enc, lo, n - 1)
    full = full_forward(model.spec, model.params, enc_in.xs)
    assert np.array_equal(dec.dists[-1], full[-1])


# --------------------------------------------------------- grad checker

@pytest.mark.parametrize("kind", ["ELMAN", "JORDAN", "ELMAN_GRU", "JORDAN_GRU"])
def test_gradient_check_basic_cells(kind):
    spec = ModelSpec(arch="basic", n_in=6, hidden=5, n_tags=3, decoder_cell=kind)
    report = gradient_check(spec, seed=42, n_tokens=4)
    assert report.ok(1e-4), report.blocks
    assert all(v < 1e-4 for v in report.blocks.values())


def test_gradient_check_reports_every_block():
    spec = ModelSpec(arch="basic", n_in=6, hidden=5, n_tags=3, decoder_cell="ELMAN")
    report = gradient_check(spec, seed=42, n_tokens=4)
    assert set(report.blocks) == {"decoder.U", "decoder.V", "decoder_out.W"}
    assert report.n_tokens == 4 and report.seed == 42


def test_gradient_check_best_bidirectional_combo():
    spec = ModelSpec(arch="bidirectional", n_in=5, hidden=4, n_tags=3,
                     decoder_cell="JORDAN_GRU", encoder_cell="ELMAN_GRU")
    report = gradient_check(spec, seed=42, n_tokens=3)
    assert report.ok(1e-4), report.blocks


def test_gradient_check_truncated_window():
    spec = ModelSpec(arch="basic", n_in=4, hidden=4, n_tags=3, decoder_cell="ELMAN")
    report = gradient_check(spec, seed=7, n_tokens=5, v_d=1)
    assert report.ok(1e-4), report.blocks


def test_zero_parameters_give_symmetric_point_gradient():
    spec = ModelSpec(arch="basic", n_in=4, hidden=3, n_tags=3, decoder_cell="ELMAN")
    rng = SeededRng(1)
    params = init_model(spec, rng)
    for b in params:
        for n in params[b]:
            params[b][n][:] = 0.0
    xs = [rng.uniform(4, -0.5, 0.5) for _ in range(4)]
    golds = [0, 2, 1, 0]

    total = total_windowed_nll(spec, params, xs, golds, v_d=9)
    assert total == pytest.approx(4 * math.log(3), abs=1e-12)

    acc = analytic_total_grads(spec, params, xs, golds, v_d=9)
    # W = 0 makes the output uniform no matter what h is, so U and V get
    # no gradient, and dW = sum_i outer(1/O - onehot(y_i), 0.5 * ones)
    assert np.all(acc["decoder"]["U"] == 0.0)
    assert np.all(acc["decoder"]["V"] == 0.0)
    want = np.zeros((3, 3))
    for y in golds:
        d = np.full(3, 1.0 / 3.0)
        d[y] -= 1.0
        want += np.outer(d, np.full(3, 0.5))
    assert np.allclose(acc["decoder_out"]["W"], want, atol=1e-12)


def test_gradient_check_is_deterministic():
    spec = ModelSpec(arch="basic", n_in=4, hidden=3, n_tags=2, decoder_cell="ELMAN")
    r1 = gradient_check(spec, seed=5, n_tokens=3)
    r2 = gradient_check(spec, seed=5, n_tokens=3)
    assert r1.blocks == r2.blocks
