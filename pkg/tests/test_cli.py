import json
import subprocess
import sys

import pytest

from holorecon import __version__, cli
from holorecon.directions import read_jsonl
from holorecon.errors import IdentityViolation


def run(*argv):
    return cli.main([str(a) for a in argv])


def points(path):
    seq, meta = read_jsonl(path)
    return [complex(v) for v in seq.values], meta


class TestGen:
    def test_square_net_head(self, tmp_path):
        out = tmp_path / "sq.jsonl"
        assert run("gen", "--family", "square-net", "--count", 25, "--output", out) == 0
        pts, meta = points(out)
        assert pts[:4] == [0, 1, 1 + 1j, 1j]
        assert meta["version"] == __version__
        assert meta["config"]["sequence"]["count"] == 25

    def test_theta(self, tmp_path):
        out = tmp_path / "th.jsonl"
        run("gen", "--family", "theta", "--count", 4, "--output", out)
        pts, _ = points(out)
        assert all(abs(a - b) < 1e-15 for a, b in zip(pts, [1j, -0.5, -1j / 3, 0.25]))

    def test_dense_sigma_c(self, tmp_path):
        out = tmp_path / "dc.jsonl"
        run("gen", "--family", "dense-sigma-c", "--count", 3, "--output", out)
        pts, _ = points(out)
        sup = [max(abs(z.real), abs(z.imag)) for z in pts]
        assert sup[0] <= 1 and sup[1] <= 1 and 1 < sup[2] <= 2

    def test_numbers_are_decimal_strings(self, tmp_path):
        out = tmp_path / "k.jsonl"
        run("gen", "--family", "kappa", "--count", 2, "--output", out)
        rec = json.loads(out.read_text().splitlines()[1])
        assert isinstance(rec["re"], str) and isinstance(rec["im"], str)

    def test_byte_deterministic(self, tmp_path):
        out = tmp_path / "a.jsonl"
        run("gen", "--family", "dense", "--count", 50, "--output", out)
        first = out.read_bytes()
        run("gen", "--family", "dense", "--count", 50, "--output", out)
        assert out.read_bytes() == first

    def test_config_file_and_override(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"sequence": {"family": "kappa", "count": 5}, "precision_bits": 128}))
        out = tmp_path / "o.jsonl"
        assert run("gen", "--config", cfg, "--count", 7, "--output", out) == 0
        pts, meta = points(out)
        assert len(pts) == 7
        assert meta["config"]["precision_bits"] == 128
        assert meta["config"]["sequence"]["family"] == "kappa"

    def test_env_precision(self, tmp_path, monkeypatch):
        monkeypatch.setenv("HOLORECON_PRECISION_BITS", "96")
        out = tmp_path / "e.jsonl"
        run("gen", "--family", "theta", "--count", 2, "--output", out)
        seq, _ = read_jsonl(out)
        assert seq.precision_bits == 96


class TestConfigErrors:
    def test_missing_count(self, tmp_path):
        assert run("gen", "--family", "theta", "--output", tmp_path / "x") == 2

    def test_missing_output(self):
        assert run("gen", "--family", "theta", "--count", 3) == 2

    def test_bad_config_file(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert run("gen", "--config", bad, "--output", tmp_path / "x") == 2

    def test_low_precision(self, tmp_path):
        assert run("gen", "--family", "theta", "--count", 3, "--precision-bits", 8, "--output", tmp_path / "x") == 2

    def test_two_modes(self, tmp_path):
        assert run("permute", "--sigma1", "--sigma2", "--output", tmp_path / "x") == 2

    def test_abbreviations_rejected(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            run("gen", "--fam", "theta", "--count", 2, "--output", tmp_path / "x")
        assert exc.value.code == 2


class TestCriterion:
    def test_theta_growing(self, tmp_path):
        out = tmp_path / "cr.json"
        assert run("criterion", "--family", "theta", "--p-max", 24, "--q-max", 8, "--output", out) == 0
        doc = json.loads(out.read_text())
        assert doc["result"]["verdict"] == "GROWING"
        assert isinstance(doc["result"]["R_hat"], str)

    def test_bounded_is_still_exit_zero(self, tmp_path):
        out = tmp_path / "cr.json"
        assert run("criterion", "--family", "kappa", "--p-max", 20, "--q-max", 4, "--output", out) == 0
        assert json.loads(out.read_text())["result"]["verdict"] == "BOUNDED"

    def test_homography(self, tmp_path):
        out = tmp_path / "h.json"
        run("criterion", "--family", "kappa", "--p-max", 16, "--q-max", 4, "--homography", "5i", "--reciprocal",
            "--output", out)
        doc = json.loads(out.read_text())["result"]
        assert [m["map"] for m in doc["maps"]] == ["identity", "h_u u=5j", "reciprocal"]

    def test_precision_failure_exit(self, tmp_path):
        code = run("criterion", "--family", "theta", "--count", 41, "--precision-bits", 64,
                   "--max-precision-bits", 128, "--output", tmp_path / "pf.json")
        assert code == 3
        assert not (tmp_path / "pf.json").exists()

    def test_from_input_file(self, tmp_path):
        seqf = tmp_path / "t.jsonl"
        run("gen", "--family", "theta", "--count", 25, "--output", seqf)
        out = tmp_path / "c.json"
        assert run("criterion", "--input", seqf, "--p-max", 24, "--q-max", 8, "--output", out) == 0
        assert json.loads(out.read_text())["result"]["verdict"] == "GROWING"


class TestReconstruct:
    def test_curve_and_report(self, tmp_path):
        out = tmp_path / "rc.csv"
        rep = tmp_path / "rc.json"
        assert run("reconstruct", "--family", "kappa", "--n-list", "2,4,8", "--output", out, "--report", rep) == 0
        lines = out.read_text().splitlines()
        assert lines[0].startswith("# ")
        meta = json.loads(lines[0][2:])
        assert meta["version"] == __version__
        assert lines[1] == "N,sup_error,mean_error,precision_bits,M,wall_time_ms"
        assert all(line.endswith(",NA") for line in lines[2:])
        doc = json.loads(rep.read_text())
        assert doc["result"]["classification"] == "DECREASING"

    def test_deterministic(self, tmp_path):
        out = tmp_path / "rc.csv"
        args = ("reconstruct", "--family", "theta", "--n-list", "2,4", "--function", "exp-product", "--output", out)
        run(*args)
        first = out.read_bytes()
        run(*args)
        assert out.read_bytes() == first

    def test_function_json(self, tmp_path):
        out = tmp_path / "p.csv"
        fn = json.dumps({"name": "polynomial", "coeffs": [[1, 1, "1", "0"]]})
        assert run("reconstruct", "--family", "square-net", "--n-list", "3,4", "--function", fn, "--output", out) == 0

    def test_unknown_function(self, tmp_path):
        assert run("reconstruct", "--family", "kappa", "--function", "nope", "--output", tmp_path / "x") == 2

    def test_identity_violation_exit(self, tmp_path, monkeypatch):
        def boom(*a, **k):
            raise IdentityViolation("forced")

        monkeypatch.setattr(cli, "verify_identity", boom)
        assert run("reconstruct", "--family", "kappa", "--n-list", "2", "--output", tmp_path / "x.csv") == 4


class TestPermute:
    def test_sigma1_then_criterion_bounded(self, tmp_path):
        seqf = tmp_path / "s1.jsonl"
        assert run("permute", "--sigma1", "--theta-count", 200, "--kappa-count", 200, "--count", 25,
                   "--output", seqf) == 0
        out = tmp_path / "c1.json"
        run("criterion", "--input", seqf, "--p-max", 24, "--q-max", 6, "--output", out)
        assert json.loads(out.read_text())["result"]["verdict"] == "BOUNDED"

    def test_sigma2_then_criterion_growing(self, tmp_path):
        seqf = tmp_path / "s2.jsonl"
        assert run("permute", "--sigma2", "--theta-count", 100, "--kappa-count", 100, "--count", 25,
                   "--output", seqf) == 0
        _, meta = points(seqf)
        assert meta["permutation"]["witnesses"]
        out = tmp_path / "c2.json"
        run("criterion", "--input", seqf, "--p-max", 24, "--q-max", 6, "--output", out)
        assert json.loads(out.read_text())["result"]["verdict"] == "GROWING"

    def test_delete_odd_recovers_theta(self, tmp_path):
        seqf = tmp_path / "d.jsonl"
        run("permute", "--delete-odd", "--theta-count", 30, "--kappa-count", 30, "--count", 25, "--output", seqf)
        ref = tmp_path / "t.jsonl"
        run("gen", "--family", "theta", "--count", 25, "--output", ref)
        assert points(seqf)[0] == points(ref)[0]
        out = tmp_path / "c.json"
        run("criterion", "--input", seqf, "--p-max", 24, "--q-max", 8, "--output", out)
        assert json.loads(out.read_text())["result"]["verdict"] == "GROWING"

    def test_sigma1_delete_kappa(self, tmp_path):
        seqf = tmp_path / "dk.jsonl"
        assert run("permute", "--sigma1", "--delete-kappa", "--theta-count", 300, "--kappa-count", 300,
                   "--count", 20, "--output", seqf) == 0
        ref = tmp_path / "t.jsonl"
        run("gen", "--family", "theta", "--count", 20, "--output", ref)
        assert points(seqf)[0] == points(ref)[0]

    def test_not_enough_points_is_config_error(self, tmp_path):
        code = run("permute", "--sigma1", "--delete-kappa", "--theta-count", 100, "--kappa-count", 300,
                   "--count", 20, "--output", tmp_path / "x")
        assert code == 2

    def test_sigma_c(self, tmp_path):
        seqf = tmp_path / "sc.jsonl"
        assert run("permute", "--sigma-c", "--count", 64, "--output", seqf) == 0
        assert len(points(seqf)[0]) == 64


def test_check_bounds(tmp_path):
    out = tmp_path / "cb.json"
    assert run("check-bounds", "--checks", "product,riemann,net", "--net-n-list", "64,256", "--output", out) == 0
    doc = json.loads(out.read_text())
    assert [r["name"] for r in doc["result"]] == [
        "node-product-lower-bound",
        "riemann-integral-anchors",
        "annulus-net-statistics",
    ]
    assert all(r["pass"] for r in doc["result"])


def test_console_entry_point(tmp_path):
    out = tmp_path / "k.jsonl"
    proc = subprocess.run(
        [sys.executable, "-m", "holorecon.cli", "gen", "--family", "kappa", "--count", "3", "--output", str(out)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert len(out.read_text().splitlines()) == 4
    version = subprocess.run([sys.executable, "-m", "holorecon.cli", "--version"], capture_output=True, text=True)
    assert __version__ in version.stdout
