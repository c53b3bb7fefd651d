import itertools

import numpy as np
import pytest

from rbcx.errors import IrmaParseError, ValidationError
from rbcx.irma import (
    BranchingScheme,
    IrmaCode,
    axis_error,
    code_error,
    evaluate_run,
    load_ground_truth,
    parse_code,
    parse_ground_truth,
    parse_scheme,
)

from oracles import toy_irma_error

TRUTH = parse_code("1121-127-700-500")


class TestParse:
    def test_hyphenated(self):
        assert TRUTH.axes == ("1121", "127", "700", "500")
        assert str(TRUTH) == "1121-127-700-500"
        assert TRUTH.compact == "1121127700500"

    def test_compact(self):
        assert parse_code("1121127700500") == TRUTH

    def test_wildcards_and_letters(self):
        assert parse_code("1121-4a*-91*-7**").axes[1] == "4a*"

    @pytest.mark.parametrize("text", ["11-2-3", "1121-127-700", "112-1127-700-500", "112112770050", ""])
    def test_shape_errors(self, text):
        with pytest.raises(IrmaParseError):
            parse_code(text)

    def test_illegal_character_position(self):
        with pytest.raises(IrmaParseError) as info:
            parse_code("1121-1?7-700-500")
        assert info.value.position == 6


class TestAxisError:
    def test_exact(self):
        assert axis_error("127", "127") == 0.0

    def test_first_position_wrong(self):
        assert axis_error("127", "327") == 1.0

    def test_wildcard_then_mismatch_cascades(self):
        b = 10
        worst = 1 / b + 1 / (2 * b) + 1 / (3 * b)
        raw = 0.5 / (2 * b) + 1 / (3 * b)
        assert axis_error("127", "1*9") == pytest.approx(raw / worst)

    def test_all_wildcard_half_of_all_wrong(self):
        for truth in ("127", "1121", "5"):
            wild = "*" * len(truth)
            assert axis_error(truth, wild, normalize=False) == pytest.approx(
                0.5 * axis_error(truth, "9" * len(truth) if truth[0] != "9" else "0" * len(truth), normalize=False)
            )
            assert axis_error(truth, wild) == pytest.approx(0.5)

    def test_toy_hierarchy_brute_force(self):
        """Every (truth, prediction) pair on a 2-position tree with branching (3, 2)."""
        branching = (3, 2)
        truths = ["".join(p) for p in itertools.product("012", "01")]
        preds = ["".join(p) for p in itertools.product("012*", "01*")]
        for t in truths:
            worst = toy_irma_error(t, "99", branching)
            for p in preds:
                assert axis_error(t, p, branching, normalize=False) == pytest.approx(toy_irma_error(t, p, branching))
                assert axis_error(t, p, branching) == pytest.approx(toy_irma_error(t, p, branching) / worst)
            assert toy_irma_error(t, "**", branching) == pytest.approx(0.5 * worst)

    def test_length_mismatch(self):
        with pytest.raises(ValidationError):
            axis_error("12", "123")
        with pytest.raises(ValidationError):
            axis_error("12", "13", (10,))


class TestCodeError:
    def test_identical(self):
        assert code_error(TRUTH, TRUTH) == 0.0

    def test_all_wrong(self):
        assert code_error(TRUTH, parse_code("2222-222-222-222")) == 1.0

    def test_one_axis_wrong(self):
        assert code_error(TRUTH, parse_code("1121-127-800-500")) == pytest.approx(0.25)

    def test_scheme_changes_weights(self):
        pred = parse_code("1121-137-700-500")
        scheme = parse_scheme("D: 2 20 4")
        assert code_error(TRUTH, pred, scheme) != code_error(TRUTH, pred)

    def test_random_pairs_bounded(self, rng):
        alphabet = np.array(list("0123*"))
        for _ in range(2000):
            a = IrmaCode(tuple("".join(rng.choice(alphabet[:4], n)) for n in (4, 3, 3, 3)))
            b = IrmaCode(tuple("".join(rng.choice(alphabet, n)) for n in (4, 3, 3, 3)))
            assert 0.0 <= code_error(a, b) <= 1.0


class TestScheme:
    def test_uniform(self):
        assert BranchingScheme.uniform().axes[0] == (10, 10, 10, 10)

    def test_parse(self):
        s = parse_scheme("# comment\nT: 9 8 7 6\nanatomical: 3 3 3  # tail\n")
        assert s.axes[0] == (9, 8, 7, 6)
        assert s.axes[2] == (3, 3, 3)
        assert s.axes[1] == (10, 10, 10)

    @pytest.mark.parametrize("text", ["T 1 2 3 4", "X: 1 2 3", "D: 1 2", "D: a b c", "D: 0 1 1"])
    def test_errors(self, text):
        with pytest.raises(ValidationError):
            parse_scheme(text)


class TestEvaluateRun:
    def test_all_correct(self):
        report = evaluate_run([(TRUTH, TRUTH)] * 3)
        assert report.e_total == 0 and report.n_zero_fraction == 1.0

    def test_arithmetic(self):
        half = parse_code("1121-127-800-500")
        half2 = parse_code("1121-127-800-600")  # 0.5 in total
        report = evaluate_run([("q1", "a", TRUTH, TRUTH), ("q2", "b", TRUTH, half2)])
        assert code_error(TRUTH, half) == pytest.approx(0.25)
        assert report.e_total == pytest.approx(0.5)
        assert report.n_zero_fraction == 0.5
        assert report.summary()["n_zero"] == 50.0

    def test_unlabeled_and_missing(self):
        report = evaluate_run([("q1", "a", None, TRUTH), ("q2", "b", TRUTH, None)])
        assert report.unlabeled == ["q1"]
        assert report.e_total == 1.0 and report.n_labeled == 1

    def test_empty(self):
        with pytest.raises(ValidationError):
            evaluate_run([])


class TestGroundTruth:
    def test_parse(self, tmp_path):
        text = "image_id;irma_code\n# note\n1001;1121-127-700-500\n1002;x;1121127700500\n1003;\n\n"
        path = tmp_path / "codes.csv"
        path.write_text(text)
        labels = load_ground_truth(path)
        assert labels == {"1001": TRUTH, "1002": TRUTH, "1003": None}

    def test_bad_line_reports_number(self):
        with pytest.raises(IrmaParseError, match="line 2"):
            parse_ground_truth("1;1121-127-700-500\n2;bogus\n")
