import json
from fractions import Fraction as F

import pytest

from mosaicverify.cli import EXIT_USAGE, main
from mosaicverify.driver import EXIT_CODES, Options, Report, verify
from mosaicverify.parser import parse
from mosaicverify.replay import PlantConfig, replay_region

from conftest import FIXTURES, fixture_net, fixture_spec


def _abs_spec(lo, hi, prop="x > 1/2", mode="falsify"):
    return parse("inputs: z [%s, %s]; outputs: x [-3, 3]; %s: %s" % (lo, hi, mode, prop))


class TestVerdicts:
    def test_abs_unsafe(self, abs_net):
        rep = verify(fixture_spec("abs_gt_half.txt"), abs_net)
        assert rep.verdict == "unsafe" and rep.exit_code == 1
        (r,) = rep.concrete()
        assert abs(r.witness[0]) > F(1, 2) and r.outputs == (abs(r.witness[0]),)

    def test_abs_safe_no_regions(self, abs_net):
        rep = verify(fixture_spec("abs_gt_two.txt"), abs_net)
        assert rep.verdict == "safe" and rep.exit_code == 0
        assert rep.regions == []

    def test_exhaustive_counts_all(self, abs_net):
        rep = verify(fixture_spec("abs_gt_half.txt"), abs_net, Options(exhaustive=True))
        assert len(rep.concrete()) == 2
        assert not rep.stats["stopped_early"]

    def test_prove_mode(self, abs_net):
        assert verify(_abs_spec(-1, 1, "x >= 0", "prove"), abs_net).verdict == "safe"
        assert verify(_abs_spec(-1, 1, "x > 0", "prove"), abs_net).verdict == "unsafe"

    def test_nonlinear_square(self, abs_net):
        assert verify(fixture_spec("abs_above_square.txt"), abs_net).verdict == "unsafe"
        assert verify(fixture_spec("abs_below_square.txt"), abs_net).verdict == "safe"

    def test_argmax_fixture(self):
        spec, net = fixture_spec("argmax_disc.txt"), fixture_net("argmax_2x5x2.json")
        rep = verify(spec, net)
        assert rep.verdict == "unsafe"
        full = verify(spec, net, Options(exhaustive=True))
        assert len(full.regions) == 6 and len(full.concrete()) == 2
        assert full.stats["spurious"] == 4

    @pytest.mark.parametrize("c", ["1/4", "1/2", "51/100", "1"])
    def test_range_monotonicity(self, abs_net, c):
        # |z| > 1/2 has a solution in [-c, c] exactly when c > 1/2
        expect = "unsafe" if F(c) > F(1, 2) else "safe"
        assert verify(_abs_spec("-" + c, c), abs_net).verdict == expect

    def test_engines_and_jobs_agree(self):
        spec, net = fixture_spec("argmax_disc.txt"), fixture_net("argmax_2x5x2.json")
        base = verify(spec, net, Options(exhaustive=True))
        for opts in (Options(exhaustive=True, engine="exclusion"), Options(exhaustive=True, jobs=2)):
            other = verify(spec, net, opts)
            assert other.verdict == base.verdict
            assert sorted(r.pattern for r in other.regions) == sorted(r.pattern for r in base.regions)
            assert sorted(r.outcome for r in other.regions) == sorted(r.outcome for r in base.regions)

    def test_arity_mismatch(self, abs_net):
        spec = parse("inputs: a [0, 1], b [0, 1]; outputs: x [0, 1]; falsify: x > a")
        with pytest.raises(ValueError):
            verify(spec, abs_net)

    def test_undecided_gives_unknown(self):
        spec, net = fixture_spec("argmax_disc.txt"), fixture_net("argmax_2x5x2.json")
        rep = verify(spec, net, Options(exhaustive=True, filter_timeout=0.0))
        assert rep.verdict == "unknown" and rep.exit_code == 2
        assert all(r.outcome == "unknown" for r in rep.regions)


class TestAcc:
    def test_brake_safe(self):
        rep = verify(fixture_spec("acc.txt"), fixture_net("acc_brake.json"))
        assert rep.verdict == "safe"
        assert rep.stats["queries"] <= 200

    def test_accelerate_unsafe_and_crashes(self):
        net = fixture_net("acc_accelerate.json")
        rep = verify(fixture_spec("acc.txt"), net)
        assert rep.verdict == "unsafe"
        w = rep.concrete()[0].witness
        assert w[0] > 0 and 200 * w[0] >= w[1] ** 2
        tr = replay_region(net, PlantConfig(), w, 100)
        assert tr.crashed and tr.verified


class TestReport:
    def test_json_round_trip(self, abs_net):
        rep = verify(fixture_spec("abs_gt_half.txt"), abs_net, Options(exhaustive=True))
        back = Report.from_json(rep.emit("json"))
        assert back.verdict == rep.verdict
        assert back.regions == rep.regions
        assert back.to_json() == json.loads(rep.emit("json"))

    def test_region_contains(self, abs_net):
        rep = verify(fixture_spec("abs_gt_half.txt"), abs_net, Options(exhaustive=True))
        for r in rep.regions:
            assert r.contains(r.witness)

    def test_text(self, abs_net):
        txt = verify(fixture_spec("abs_gt_half.txt"), abs_net).emit("text").decode()
        assert txt.startswith("verdict: unsafe\n")
        assert "counterexample at" in txt and "time:" in txt
        with pytest.raises(ValueError):
            Report("safe").emit("xml")

    def test_exit_codes(self):
        assert EXIT_CODES == {"safe": 0, "unsafe": 1, "unknown": 2}


class TestCli:
    def test_verify_exit_codes(self, capsys):
        assert main(["--nn", str(FIXTURES / "abs.json"), "--query", str(FIXTURES / "abs_gt_half.txt")]) == 1
        assert "verdict: unsafe" in capsys.readouterr().out
        assert main(["verify", "--nn", str(FIXTURES / "abs.json"),
                     "--query", str(FIXTURES / "abs_gt_two.txt"), "--jobs", "1"]) == 0

    def test_usage_errors(self, tmp_path, capsys):
        assert main([]) == EXIT_USAGE
        assert main(["--nn", str(tmp_path / "missing.json"), "--query", str(FIXTURES / "abs_gt_half.txt")]) == EXIT_USAGE
        bad = tmp_path / "bad.txt"
        bad.write_text("inputs: z [0, 1]; outputs: x [0, 1]; falsify: x >")
        assert main(["--nn", str(FIXTURES / "abs.json"), "--query", str(bad)]) == EXIT_USAGE
        mism = tmp_path / "m.txt"
        mism.write_text("inputs: a [0, 1], b [0, 1]; outputs: x [0, 1]; falsify: x > a")
        assert main(["--nn", str(FIXTURES / "abs.json"), "--query", str(mism)]) == EXIT_USAGE
        assert main(["--nn", str(FIXTURES / "abs.json"), "--query", str(FIXTURES / "abs_gt_half.txt"),
                     "--approx", "0"]) == EXIT_USAGE
        assert main(["--nn", "x", "--query", "y", "--icp-min-width", "abc"]) == EXIT_USAGE
        capsys.readouterr()

    def test_report_json_and_dump(self, tmp_path, capsys):
        rep_path = tmp_path / "r.json"
        dump = tmp_path / "q"
        code = main(["--nn", str(FIXTURES / "abs.json"), "--query", str(FIXTURES / "abs_above_square.txt"),
                     "--report", str(rep_path), "--dump-queries", str(dump), "--json", "--exhaustive",
                     "--icp-max-boxes", "5000", "--icp-min-width", "1/1000000", "--approx", "2"])
        assert code == 1
        printed = json.loads(capsys.readouterr().out)
        assert printed["verdict"] == "unsafe"
        assert Report.from_json(rep_path.read_text()).verdict == "unsafe"
        files = sorted(dump.iterdir())
        assert files and all(f.name.startswith("query_") for f in files)
        q = json.loads(files[0].read_text())
        assert q["inputs"] == ["z"] and q["outputs"] == ["x"]

    def test_mode_override(self, capsys):
        code = main(["--nn", str(FIXTURES / "abs.json"), "--query", str(FIXTURES / "abs_gt_two.txt"),
                     "--mode", "prove"])
        # proving x > 2 fails everywhere
        assert code == 1
        capsys.readouterr()

    def test_replay_init_csv(self, tmp_path, capsys):
        out = tmp_path / "t.csv"
        code = main(["replay", "--nn", str(FIXTURES / "acc_accelerate.json"), "--init", "2,-10",
                     "--csv", str(out)])
        assert code == 0
        text = capsys.readouterr().out
        assert "control decisions: 2" in text and "crash" in text and "0.123607" in text
        assert len(out.read_text().splitlines()) == 3

    def test_replay_brake(self, capsys):
        assert main(["replay", "--nn", str(FIXTURES / "acc_brake.json"), "--init", "2,-10", "--steps", "3"]) == 0
        text = capsys.readouterr().out
        assert "final state: t=3/10 r=7/2 rv=20" in text and "no crash" in text

    def test_replay_from_report(self, tmp_path, capsys):
        rep_path = tmp_path / "r.json"
        main(["--nn", str(FIXTURES / "acc_accelerate.json"), "--query", str(FIXTURES / "acc.txt"),
              "--report", str(rep_path)])
        capsys.readouterr()
        assert main(["replay", "--nn", str(FIXTURES / "acc_accelerate.json"),
                     "--from-report", str(rep_path)]) == 0
        assert "crash (r <= 0)" in capsys.readouterr().out

    def test_replay_usage(self, capsys):
        net = str(FIXTURES / "acc_brake.json")
        assert main(["replay", "--nn", net]) == EXIT_USAGE
        assert main(["replay", "--nn", net, "--init", "1"]) == EXIT_USAGE
        assert main(["replay", "--nn", net, "--init", "1,2", "--steps", "0"]) == EXIT_USAGE
        assert main(["replay", "--nn", net, "--init", "1,2", "--T", "0"]) == EXIT_USAGE
        capsys.readouterr()
