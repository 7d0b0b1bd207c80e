import json
from fractions import Fraction

import pytest

from riphard.construction import ReductionParams
from riphard.errors import CapacityError, InputError
from riphard.generators import random_e13
from riphard.rational import read_matrix
from riphard.sat import Cnf3Instance, E13Instance
from riphard.verify import CheckRecord, VerificationReport, report_emit, report_load, run_pipeline

DEMO = ReductionParams.demo()
UNSAT = E13Instance(3, ((1, 2, 3), (1, 2), (3,)))


class TestReport:
    def test_empty(self):
        rep = VerificationReport()
        doc = json.loads(report_emit(rep))
        assert doc["checks"] == [] and doc["summary"] == {"PASS": 0, "FAIL": 0, "SKIP": 0}
        assert report_load(report_emit(rep)) == rep
        assert report_emit(rep, "text") == b"# summary: 0 passed, 0 failed, 0 skipped\n"

    def test_fail_line(self):
        rep = VerificationReport()
        rep.add("made up", "a fabricated failing check", Fraction(1, 3), 0.5, False)
        assert b"[FAIL] made up: claimed 1/3, measured 0.5\n" in report_emit(rep, "text")
        assert not rep.passed

    def test_skip_does_not_fail(self):
        rep = VerificationReport()
        rep.add("skipped", "anchor", 1, 2, None)
        assert rep.passed and rep.counts()["SKIP"] == 1

    def test_anchor_required(self):
        with pytest.raises(InputError):
            VerificationReport().add("orphan", "", 1, 1, True)
        with pytest.raises(InputError):
            CheckRecord("x", "a", "1", "1", "MAYBE", "exact")

    def test_round_trip(self):
        rep = run_pipeline(random_e13(3, seed=0, planted=True), DEMO)
        back = report_load(report_emit(rep))
        assert back == rep and back.timestamp == rep.timestamp

    def test_unknown_format(self):
        with pytest.raises(InputError):
            report_emit(VerificationReport(), "xml")


class TestPipeline:
    def test_satisfiable(self):
        rep = run_pipeline(random_e13(3, seed=2, planted=True), DEMO)
        status = {c.name: c.status for c in rep.checks}
        assert rep.passed
        assert status["scaled restricted minimum"] == "PASS"
        assert status["satisfying assignment value"] == "PASS"
        assert status["gap verdict"] == "SKIP"  # rho < 0 at these parameters
        assert all(c.anchor for c in rep.checks)

    def test_unsatisfiable(self):
        rep = run_pipeline(UNSAT, DEMO)
        margin = next(c for c in rep.checks if c.name == "unsatisfiable margin")
        assert margin.status == "PASS" and float(margin.measured) > 0
        assert rep.instance["max_val"] == "2/3"
        assert any("measured" in n for n in rep.notes)

    def test_hardness_parameters(self):
        params = ReductionParams.hardness(Fraction(1, 100))
        for phi, verdict in ((E13Instance(2, ((1, 2),)), "FarFromRip"), (UNSAT, "IsRip")):
            rep = run_pipeline(phi, params)
            gap = next(c for c in rep.checks if c.name == "gap verdict")
            assert rep.passed and gap.status == "PASS" and gap.measured == verdict

    def test_cnf_input(self):
        rep = run_pipeline(Cnf3Instance(1, ((1, 1, 1),)), DEMO)
        names = [c.name for c in rep.checks]
        assert names[:3] == ["output variable count", "output clause count", "output occurrences"]
        assert rep.instance["n"] == 6 and rep.passed

    def test_deterministic(self):
        phi = random_e13(3, seed=5)
        a = report_emit(run_pipeline(phi, DEMO, seed=1), with_timestamp=False)
        b = report_emit(run_pipeline(phi, DEMO, seed=1), with_timestamp=False)
        assert a == b
        assert report_emit(run_pipeline(phi, DEMO, seed=1), "text", with_timestamp=False) == report_emit(
            run_pipeline(phi, DEMO, seed=1), "text", with_timestamp=False
        )

    def test_max_n(self):
        with pytest.raises(CapacityError, match="stage build"):
            run_pipeline(random_e13(7, seed=0), DEMO)

    def test_stage_named_on_budget(self):
        with pytest.raises(CapacityError, match="stage restricted spectrum"):
            run_pipeline(random_e13(4, seed=0), DEMO, budget=100)

    def test_artifacts(self, tmp_path):
        rep = run_pipeline(random_e13(2, seed=0), DEMO, artifacts_dir=tmp_path)
        files = rep.artifacts["files"]
        assert read_matrix(files["matrix"]).shape == (4 * 2 + 2, 6)
        assert json.loads(open(files["rip_report"]).read())["k"] == 4
