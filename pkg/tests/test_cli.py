import json

import pytest

from maxperim import records
from maxperim.cli import main

from reference_values import PERIMETERS, QUARTER_CODES


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


# ---------------------------------------------------------------- codes

def test_codes_count_only(capsys):
    code, out, _ = run_cli(capsys, "codes", "--n", "16", "--count-only")
    assert code == 0
    assert out.strip() == "1087"


def test_codes_listing_and_limit(capsys):
    code, out, _ = run_cli(capsys, "codes", "--n", "8")
    assert code == 0
    lines = out.strip().splitlines()
    assert len(lines) == 11
    assert all(set(l) <= {"+", "-"} and len(l) == 8 for l in lines)
    code, out, _ = run_cli(capsys, "codes", "--n", "8", "--limit", "3")
    assert len(out.strip().splitlines()) == 3


def test_codes_compositions(capsys):
    code, out, _ = run_cli(capsys, "codes", "--n", "8", "--compositions")
    lines = out.strip().splitlines()
    assert len(lines) == 11
    assert all(sum(int(p) for p in l.split(",")) == 8 for l in lines)


# --------------------------------------------------------------- phase1

def test_phase1_record_schema(capsys):
    code, out, _ = run_cli(capsys, "phase1", "--n", "16")
    assert code == 0
    rec = json.loads(out.strip())
    assert set(rec) == {
        "n", "quarter_code", "gap_decimal", "gap_numerator", "nodes", "seconds",
    }
    assert rec["n"] == 16
    assert rec["gap_decimal"].startswith("2.0697")


def test_phase1_top_k(capsys):
    code, out, _ = run_cli(capsys, "phase1", "--n", "16", "--top", "3")
    lines = out.strip().splitlines()
    assert len(lines) == 3


def test_phase1_float_mode(capsys):
    code, out, _ = run_cli(capsys, "phase1", "--n", "16", "--mode", "float")
    assert code == 0
    rec = json.loads(out.strip())
    assert rec["gap_decimal"].startswith("2.0697")
    assert rec["gap_numerator"] is None


def test_phase1_jobs_merge(capsys):
    code, out, _ = run_cli(capsys, "phase1", "--n", "16", "--jobs", "4")
    assert code == 0
    rec = json.loads(out.strip())
    code, out, _ = run_cli(capsys, "phase1", "--n", "16")
    plain = json.loads(out.strip())
    assert rec["gap_numerator"] == plain["gap_numerator"]
    assert rec["quarter_code"] == plain["quarter_code"]


# ---------------------------------------------------------- phase2/solve

@pytest.fixture(scope="module")
def solved_record(tmp_path_factory):
    import io
    from contextlib import redirect_stderr, redirect_stdout

    buf_out, buf_err = io.StringIO(), io.StringIO()
    with redirect_stdout(buf_out), redirect_stderr(buf_err):
        rc = main(["solve", "--n", "8"])
    assert rc == 0
    rec = json.loads(buf_out.getvalue())
    path = tmp_path_factory.mktemp("rec") / "sol8.json"
    path.write_text(json.dumps(rec))
    return rec, path


def test_solve_record_matches_published_digits(solved_record):
    rec, _ = solved_record
    assert rec["schema_version"] == 1
    assert rec["perimeter"].startswith(PERIMETERS[8][:92])
    assert rec["n"] == 8
    assert rec["variant"] == "schur"
    assert len(rec["angles"]) == 9
    assert "timings" not in rec  # canonical payload on stdout


def test_solve_deterministic_output(capsys):
    rc1, out1, _ = run_cli(capsys, "solve", "--n", "4")
    rc2, out2, _ = run_cli(capsys, "solve", "--n", "4")
    assert rc1 == rc2 == 0
    assert out1 == out2


def test_phase2_fixed_code(capsys):
    rc, out, _ = run_cli(capsys, "phase2", "--code", "+--+-++-")
    assert rc == 0
    rec = json.loads(out)
    assert rec["perimeter"].startswith(PERIMETERS[8][:60])
    assert rec["quarter_code"] is None


def test_phase2_code_from_file(capsys, tmp_path):
    p = tmp_path / "code.txt"
    p.write_text("+--+-++-\n")
    rc, out, _ = run_cli(capsys, "phase2", "--code", f"@{p}")
    assert rc == 0
    assert json.loads(out)["perimeter"].startswith(PERIMETERS[8][:40])


def test_solve_n128_uses_record_code(capsys):
    rc, out, _ = run_cli(capsys, "solve", "--n", "128", "--variant", "simplified-schur")
    assert rc == 0
    rec = json.loads(out)
    assert rec["quarter_code"] == QUARTER_CODES[128]
    assert rec["perimeter"].startswith(PERIMETERS[128][:92])


# --------------------------------------------------------------- verify

def test_verify_confirms_squared_perimeter(capsys, solved_record):
    _, path = solved_record
    rc, out, _ = run_cli(capsys, "verify", "--poly", "P8", "--value-from", str(path))
    assert rc == 0
    assert "root confirmed" in out


def test_verify_rejects_wrong_value(capsys):
    rc, out, _ = run_cli(capsys, "verify", "--poly", "P8", "--value", "3.0")
    assert rc == 1
    assert "not a root" in out


def test_verify_usage_error(capsys):
    rc, out, err = run_cli(capsys, "verify", "--poly", "P8")
    assert rc == 2


# --------------------------------------------------------------- export

def test_export_json_roundtrip_byte_identical(solved_record, tmp_path):
    rec, path = solved_record
    data1 = records.export(rec, "json")
    rec2 = json.loads(data1)
    data2 = records.export(rec2, "json")
    assert data1 == data2


def test_export_svg_structure(solved_record):
    rec, _ = solved_record
    svg = records.export(rec, "svg").decode()
    assert svg.count('class="edge"') == 8
    assert svg.count('class="chord"') == 8
    assert svg.startswith("<svg")


def test_export_tikz_structure(solved_record):
    rec, _ = solved_record
    tikz = records.export(rec, "tikz").decode()
    assert tikz.count("\\draw[semithick, gray]") == 8
    assert "\\draw[very thick, black]" in tikz


def test_export_csv_vertices(solved_record):
    rec, _ = solved_record
    csv = records.export(rec, "csv").decode().strip().splitlines()
    assert csv[0] == "index,x,y"
    assert len(csv) == 9


def test_export_refuses_unverified(solved_record, tmp_path, capsys):
    rec, _ = solved_record
    bad = dict(rec)
    bad["angles"] = []
    with pytest.raises(records.UnverifiedRecordError):
        records.export(bad, "svg")
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(bad))
    rc, out, err = run_cli(capsys, "export", "--input", str(p), "--format", "svg")
    assert rc == 1


def test_export_cli_to_file(solved_record, tmp_path, capsys):
    _, path = solved_record
    out_path = tmp_path / "out.svg"
    rc, _, _ = run_cli(
        capsys, "export", "--input", str(path), "--format", "svg",
        "--output", str(out_path),
    )
    assert rc == 0
    assert out_path.read_text().startswith("<svg")


# -------------------------------------------------------------- usage

def test_unknown_subcommand_exits_2():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_enumerate_solve_cli(capsys):
    rc, out, _ = run_cli(capsys, "enumerate-solve", "--n", "4")
    assert rc == 0
    rec = json.loads(out.strip().splitlines()[0])
    assert rec["rank"] == 1
    assert rec["perimeter"].startswith("3.0352761804100830493955953504961933133962")


def test_record_decimals_roundtrip_at_stated_precision(solved_record):
    # angle decimals reparse to the exact stored mpfr values
    import gmpy2
    from maxperim.precision import workprec
    from maxperim.records import angles_from_record

    rec, _ = solved_record
    av = angles_from_record(rec)
    with workprec(rec["precision_bits"]):
        for dec, val in zip(rec["angles"][1:-1], av.phi[1:-1]):
            assert gmpy2.mpfr(dec) == val
