import json

import pytest

from rmtorus.cli import main


def _run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def _run_json(capsys, *argv):
    code, out, err = _run(capsys, *argv)
    assert code == 0, err
    return json.loads(out)


def test_validate_outputs_exact_surd_data(capsys):
    payload = _run_json(capsys, "validate", "--g", "5", "-1", "6", "-1")
    assert payload["g"] == [5, -1, 6, -1]
    assert payload["theta"] == {"p": 3, "q": -1, "r": 6, "D": 3}
    assert payload["theta_conjugate"] == {"p": 3, "q": 1, "r": 6, "D": 3}
    assert payload["lambda_plus"] == {"p": 2, "q": -1, "r": 1, "D": 3}
    assert payload["l"] == 24
    assert payload["w"] == 2


def test_validate_accepts_trace_shorthand(capsys):
    payload = _run_json(capsys, "validate", "--trace", "4")
    assert payload["g"] == [5, -1, 6, -1]


def test_hilbert_coefficients(capsys):
    payload = _run_json(capsys, "hilbert", "--g", "5", "-1", "6", "-1", "--n", "3")
    assert payload["coefficients"] == [1, 6, 24, 90]


def test_theta_value(capsys):
    payload = _run_json(capsys, "theta", "--r", "0", "--s", "0", "--tau", "0", "1")
    assert abs(payload["value"]["re"] - 1.0864348112133082) < 1e-12
    assert payload["value"]["im"] == 0.0


def test_present_monic_leads_are_one(capsys):
    payload = _run_json(capsys, "present", "--g", "5", "-1", "6", "-1",
                        "--tau", "0", "2", "--normalize", "monic")
    assert len(payload["relations"]) == 12
    for rel in payload["relations"]:
        lead = rel["terms"][0]["coeff"]
        assert lead == {"re": 1.0, "im": 0.0}


def test_present_rational_is_real_on_imaginary_axis(capsys):
    payload = _run_json(capsys, "present", "--g", "5", "-1", "6", "-1",
                        "--tau", "0", "2", "--normalize", "rational")
    worst = max(abs(term["coeff"]["im"])
                for rel in payload["relations"] for term in rel["terms"])
    assert worst < 1e-10


def test_present_output_is_byte_deterministic(capsys):
    args = ("present", "--g", "4", "-1", "5", "-1", "--tau", "0.3", "1.7")
    _, first, _ = _run(capsys, *args)
    _, second, _ = _run(capsys, *args)
    assert first == second


def test_basis_words(capsys):
    payload = _run_json(capsys, "basis", "--g", "5", "-1", "6", "-1",
                        "--tau", "0", "2", "--degree", "3")
    assert payload["count"] == 90
    words = [tuple(w) for w in payload["words"]]
    assert len(words) == 90
    assert not any(w[:2] == (5, 3) for w in words)
    assert sum(1 for w in words if w[:2] == (4, 1)) == 6


def test_average_reports_quadrature_error(capsys):
    payload = _run_json(capsys, "average", "--g", "5", "-1", "6", "-1",
                        "--tol", "1e-6")
    assert payload["quadrature_error"] < 1e-4
    assert len(payload["relations"]) == 12


def test_geom_counts_and_cap(capsys):
    payload = _run_json(capsys, "geom", "--g", "4", "-1", "5", "-1",
                        "--tau", "0", "2", "--cap", "300")
    assert payload["count"] == 252
    code, out, err = _run(capsys, "geom", "--g", "4", "-1", "5", "-1",
                          "--tau", "0", "2", "--cap", "100")
    assert code == 1 and out == ""
    assert err.startswith("CombinatorialCap:")


def test_out_flag_writes_file_and_keeps_stdout_clean(capsys, tmp_path):
    target = tmp_path / "payload.json"
    code, out, err = _run(capsys, "hilbert", "--g", "4", "-1", "5", "-1",
                          "--n", "4", "--out", str(target))
    assert code == 0 and out == ""
    assert json.loads(target.read_text())["coefficients"] == [1, 5, 15, 40, 105]


def test_module_errors_become_single_diagnostic_line(capsys):
    code, out, err = _run(capsys, "validate", "--g", "1", "1", "0", "1")
    assert code == 1 and out == ""
    lines = err.strip().splitlines()
    assert len(lines) == 1
    assert lines[0].startswith("NotHyperbolic:")


def test_usage_errors_exit_two(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["present", "--g", "5", "-1", "6", "-1", "--tau", "0", "-1"])
    assert exc.value.code == 2
    capsys.readouterr()
    with pytest.raises(SystemExit) as exc:
        main(["no-such-command"])
    assert exc.value.code == 2
    capsys.readouterr()
    with pytest.raises(SystemExit) as exc:
        main(["theta", "--r", "nonsense", "--s", "0", "--tau", "0", "1"])
    assert exc.value.code == 2
    capsys.readouterr()
