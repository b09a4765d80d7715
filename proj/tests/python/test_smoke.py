import json
import math
import random

import pytest

import seasonal


def test_rates_sum_to_one_and_zero_is_undefined():
    rates = seasonal.compute_rates([0] * 7 + [30] + [0] * 7)
    assert rates[7] == 1.0
    assert seasonal.compute_rates([0] * 15) is None
    rates = seasonal.compute_rates(list(range(15)))
    assert abs(sum(rates) - 1.0) <= 1e-12


def test_window_days_wraps_the_year():
    days = seasonal.window_days("01-03", 7, 2013)
    assert days[0] == "2012-12-31"
    assert days[-1] == "2013-01-06"
    with pytest.raises(seasonal.SeasonalError):
        seasonal.window_days("02-29", 3, 2013)


def test_labels_use_normalized_substring():
    assert seasonal.label_track("MERRY CHRISTMAS EVERYONE", "", "christmas")
    assert seasonal.label_track("Jingle Bells", "A Christmas Album", "Christmas")
    assert not seasonal.label_track("Christ mas", "", "christmas")
    assert seasonal.normalize_text("No\u00ebl") == seasonal.normalize_text("Noe\u0308l")
    with pytest.raises(seasonal.SeasonalError):
        seasonal.label_track("x", "", "")


def test_aggregate_lines_counts_window_and_malformed():
    rows, stats = seasonal.aggregate_lines(
        [
            "user_id\ttimestamp\ttrack_id",
            "u1\t2012-12-25 10:00:00\ta",
            "u2\t2012-06-01 10:00:00\ta",
            "u3\tbad\tb",
        ]
    )
    total, days = rows["a"]
    assert total == 2
    assert days[7] == 1 and sum(days) == 1
    assert stats["record_count"] == 3
    assert stats["malformed_lines"] == 1
    with pytest.raises(seasonal.SeasonalError):
        seasonal.aggregate_lines(["u3\tbad\tb"], strict=True)


def test_auc_matches_pair_count():
    rng = random.Random(3)
    scores = [rng.choice([0.0, 0.5, 1.0, 1.5]) for _ in range(40)] + [0.5, 0.5]
    labels = [rng.random() < 0.4 for _ in range(40)] + [True, False]
    pos = [s for s, l in zip(scores, labels) if l]
    neg = [s for s, l in zip(scores, labels) if not l]
    pairs = sum(1.0 if p > n else 0.5 if p == n else 0.0 for p in pos for n in neg)
    expected = pairs / (len(pos) * len(neg))
    assert abs(seasonal.auc_from_scores(scores, labels) - expected) <= 1e-12
    fpr, tpr, thresholds, auc = seasonal.roc_curve(scores, labels)
    assert (fpr[0], tpr[0]) == (0.0, 0.0) and (fpr[-1], tpr[-1]) == (1.0, 1.0)
    assert math.isinf(thresholds[0])
    assert abs(auc - expected) <= 1e-12


def test_gmm_fit_score_and_json_round_trip():
    rng = random.Random(5)
    data = [[rng.gauss(-5, 1)] for _ in range(300)] + [[rng.gauss(5, 1)] for _ in range(300)]
    cfg = seasonal.GmmConfig()
    cfg.components = 2
    cfg.seed = 11
    model = seasonal.fit(data, cfg)
    assert sorted(round(m[0]) for m in model.means) == [-5, 5]
    assert abs(sum(model.weights) - 1.0) <= 1e-12
    trace = model.loglik_trace
    assert all(b >= a - 1e-9 for a, b in zip(trace, trace[1:]))
    assert model.train_loglik == trace[-1]
    assert model.score(None) == -math.inf
    again = seasonal.GmmModel.from_json(model.to_json())
    assert again.score([0.3]) == model.score([0.3])
    assert seasonal.fit(data, cfg, threads=3).to_json() == model.to_json()


def test_cli_pipeline_end_to_end(tmp_path):
    corpus = tmp_path / "corpus"
    code, _, err = seasonal.run_cli(
        ["synth", "--out", str(corpus), "--n-tracks", "400", "--n-users", "40", "--seasonal-fraction", "0.1"]
    )
    assert code == 0, err
    out = tmp_path / "run"
    args = [
        "pipeline",
        "--listens", str(corpus / "listens.tsv"),
        "--metadata", str(corpus / "metadata.tsv"),
        "--truth", str(corpus / "truth.tsv"),
        "--thresholds", "20,0",
        "--ridge", "1e-3",
        "--out", str(out),
    ]
    code, log, err = seasonal.run_cli(args)
    assert code == 0, err
    assert "AUC" in log
    report = json.loads((out / "report.json").read_text())
    assert [e["min_listens"] for e in report["entries"]] == [20, 0]
    for entry in report["entries"]:
        assert entry["status"] == "ok"
        assert 0.0 <= entry["auc_latent"] <= 1.0
    code, _, err = seasonal.run_cli(["aggregate", "--listens", str(tmp_path / "missing.tsv"), "--out", str(out)])
    assert code == 2
    assert "missing.tsv" in err
