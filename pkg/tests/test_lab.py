import csv
import io
import json

import jsonschema
import numpy as np
import pytest

from statdisc import discs, quadric
from statdisc.exceptions import GenerationError, PreconditionError
from statdisc.lab import experiment, generators, schema, search
from statdisc.lab.experiment import ExperimentConfig, TrialRecord
from statdisc.quadric import QuadricModel


@pytest.mark.parametrize("n, d", [(1, 1), (2, 2), (3, 2), (4, 3), (2, 4)])
def test_pseudoconvex_generator(n, d):
    for seed in range(5):
        Q = generators.random_quadric("pseudoconvex", n, d, seed)
        assert quadric.find_positive_combination(Q) is not None
        assert quadric.validate(Q).generating


@pytest.mark.parametrize("n, d", [(2, 1), (2, 3), (3, 2), (4, 3)])
def test_indefinite_generator(n, d):
    for seed in range(5):
        Q = generators.random_quadric("strongly-nondeg-indefinite", n, d, seed)
        cls = quadric.validate(Q)
        assert cls.generating
        assert generators.choose_b(Q, "strongly-nondeg-indefinite", seed) is not None
        assert quadric.find_positive_combination(Q, budget=20) is None


@pytest.mark.parametrize("n, d", [(1, 1), (2, 1), (3, 2)])
def test_degenerate_generator(n, d):
    Q = generators.random_quadric("levi-degenerate", n, d, 3)
    assert not quadric.levi_nondegenerate(Q)


@pytest.mark.parametrize("kind", generators.KINDS)
def test_generator_determinism(kind):
    Q1 = generators.random_quadric(kind, 3, 2, 42)
    Q2 = generators.random_quadric(kind, 3, 2, 42)
    assert all(np.array_equal(A, B) for A, B in zip(Q1.matrices, Q2.matrices))
    assert Q1 != generators.random_quadric(kind, 3, 2, 43)


def test_generator_errors():
    with pytest.raises(GenerationError):
        generators.random_quadric("pseudoconvex", 1, 2, 0)
    with pytest.raises(GenerationError):
        generators.random_quadric("strongly-nondeg-indefinite", 1, 1, 0)
    with pytest.raises(GenerationError):
        generators.random_quadric("spherical", 2, 1, 0)


def test_random_instance_admissible():
    from statdisc import equations
    for seed in range(20):
        inst = generators.random_instance(seed, 3, 2)
        assert np.linalg.norm(inst.a) <= 0.05
        assert np.linalg.norm(inst.V) <= 2.0
        assert equations.contraction_guard(inst.Q, inst.a, inst.b)


def test_search_scalar(scalar_quadric):
    res = search.search_stationary_minimal(scalar_quadric, [1.0], budget=100)
    assert res.found and res.stage == 2 and res.evaluations <= 2


def test_search_diag(diag_quadric):
    res = search.search_stationary_minimal(diag_quadric, [1.0, 0.0], budget=1000, seed=3)
    assert res.found
    again = discs.stationary_minimal(diag_quadric, res.a, [1.0, 0.0], res.V)
    assert again.minimal
    # V=(1,1) is already minimal at a=0
    assert discs.stationary_minimal(diag_quadric, [0, 0], [1, 0], [1, 1]).minimal


def test_search_zero_budget(diag_quadric):
    res = search.search_stationary_minimal(diag_quadric, [1.0, 0.0], budget=0)
    assert not res.found and res.evaluations == 0


def test_search_precondition(diag_quadric):
    with pytest.raises(PreconditionError):
        search.search_stationary_minimal(diag_quadric, [0.0, 1.0], budget=10)


def test_search_on_skewed_coordinates():
    # a pd combination far from I: the result must certify in the original coordinates
    Q = generators.random_quadric("pseudoconvex", 3, 3, 8)
    C = np.diag([1.0, 5.0, 0.3]) @ np.array([[1, 2, 0], [0, 1, 1], [1, 0, 1]], float)
    Qc = Q.congruent(C)
    b = quadric.find_positive_combination(Qc)
    res = search.search_stationary_minimal(Qc, b, seed=1)
    assert res.found
    assert discs.stationary_minimal(Qc, res.a, b, res.V).minimal


def test_trial_consistent_search_path():
    Q = generators.random_quadric("pseudoconvex", 3, 2, 5)
    b = quadric.find_positive_combination(Q)
    res = search.search_stationary_minimal(Q, b, seed=5)
    rec = experiment.conjecture_trial(Q, b, res.a, res.V)
    assert rec.flags["stationary_minimal"] and rec.flags["diffeo"]
    assert rec.flags["sym_part_pd"]
    assert rec.status == experiment.CONSISTENT


def test_trial_diag_degenerate(diag_quadric):
    rec = experiment.conjecture_trial(diag_quadric, [1, 0], [0, 0], [1, 0])
    f = rec.flags
    assert (f["stationary_minimal"], f["da_nondeg"], f["diffeo"]) == (False, False, False)
    assert f["defective"] is True
    assert rec.status == experiment.CONSISTENT


def test_trial_true_flags_carry_margins(diag_quadric):
    rec = experiment.conjecture_trial(diag_quadric, [1, 0], [0.01, 0.02j], [1, 1])
    need = {"pseudoconvex": "pseudoconvex_min_eig", "stationary_minimal": "minimality_sv",
            "da_nondeg": "da_rel_min_abs_eig", "diffeo": "block_margin",
            "sym_part_pd": "sym_part_min_eig", "guard": "guard_margin"}
    for flag, margin in need.items():
        assert rec.flags[flag] is True
        assert rec.margins[margin] is not None


def test_trial_records_failures(scalar_quadric):
    rec = experiment.conjecture_trial(scalar_quadric, [1.0], [10.0], [1.0])
    assert rec.status == experiment.FAILED and "RegimeError" in rec.error


def test_no_da_means_consistent(monkeypatch, diag_quadric):
    real = experiment.jets.block_verdict
    monkeypatch.setattr(experiment.jets, "block_verdict",
                        lambda B, tol: (False,) + real(B, tol)[1:])
    rec = experiment.conjecture_trial(diag_quadric, [1, 0], [0, 0], [1, 0])
    assert not rec.flags["da_nondeg"] and not rec.flags["diffeo"]
    assert rec.status == experiment.CONSISTENT
    rec = experiment.conjecture_trial(diag_quadric, [1, 0], [0, 0], [1, 1])
    assert rec.status == experiment.CANDIDATE


def test_trial_seed_counter():
    seeds = [experiment.trial_seed(7, i) for i in range(100)]
    assert len(set(seeds)) == 100
    assert experiment.trial_seed(7, 3) == seeds[3]
    assert experiment.trial_seed(8, 3) != seeds[3]


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(trials=0)
    with pytest.raises(ValueError):
        ExperimentConfig(kind="nope")
    with pytest.raises(ValueError):
        ExperimentConfig(n=[3, 2])


def test_pseudoconvex_campaign():
    report, code = experiment.run_experiment(ExperimentConfig(trials=10, seed=1, n=[2, 3],
                                                              d=[1, 3]))
    s = report["summary"]
    assert code == 0
    assert s["failed"] == 0
    assert s["pd_certificate"]["applicable"] == 10 and s["pd_certificate"]["violations"] == 0
    schema.validate_report(report)


def test_indefinite_campaign_cells():
    report, code = experiment.run_experiment(
        ExperimentConfig(kind="strongly-nondeg-indefinite", trials=12, seed=2, n=[2, 3],
                         d=[1, 2], v_mode="kernel"))
    cells = report["summary"]["cells"]
    assert sum(cells.values()) == 12 - report["summary"]["failed"]
    assert report["summary"]["implication"]["violations"] == 0


def test_determinism(tmp_path):
    out = tmp_path / "r.json"
    cfg = dict(kind="mixed", trials=8, seed=11, n=[2, 3], d=[1, 2], output_path=str(out))
    texts = []
    for _ in range(2):
        experiment.run_experiment(ExperimentConfig(**cfg))
        texts.append(out.read_text())
    r1, r2 = (json.loads(t) for t in texts)
    assert set(r1.pop("header")) == set(r2.pop("header")) == {"created", "wall_ms"}
    assert experiment.dumps_report(r1) == experiment.dumps_report(r2)


def test_parallel_matches_serial():
    cfg = dict(kind="mixed", trials=6, seed=5, n=[2, 3], d=[1, 2])
    r1, _ = experiment.run_experiment(ExperimentConfig(**cfg))
    r2, _ = experiment.run_experiment(ExperimentConfig(workers=2, **cfg))
    assert r1["trials"] == r2["trials"]


def test_schema_rejects_bad_report():
    report, _ = experiment.run_experiment(ExperimentConfig(trials=2, seed=0))
    bad = json.loads(json.dumps(report))
    bad["schema"] = "statdisc-report/0"
    with pytest.raises(jsonschema.ValidationError):
        schema.validate_report(bad)
    bad = json.loads(json.dumps(report))
    bad["trials"][0]["status"] = "MAYBE"
    with pytest.raises(jsonschema.ValidationError):
        schema.validate_report(bad)


def test_csv_report(tmp_path):
    out = tmp_path / "r.csv"
    experiment.run_experiment(ExperimentConfig(trials=3, seed=0, output_path=str(out),
                                               format="csv"))
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert len(rows) == 3
    assert {"trial_id", "n", "d", "verdict", "wall_ms", "diffeo"} <= set(rows[0])
    assert all(r["verdict"] == "CONSISTENT" for r in rows)


def test_unwritable_output_fails_before_compute(monkeypatch, tmp_path):
    calls = []
    monkeypatch.setattr(experiment, "run_trial", lambda *a, **k: calls.append(a))
    with pytest.raises(OSError):
        experiment.run_experiment(ExperimentConfig(
            trials=2, output_path=str(tmp_path / "missing" / "r.json")))
    assert calls == []


def _fake_trials(monkeypatch, survive):
    real = experiment.conjecture_trial

    def fake(Q, b, a, V, tol=1e-8, record=None):
        rec = real(Q, b, a, V, tol, record)
        if tol >= 1e-8 or survive:
            rec.flags["diffeo"] = False
            rec.flags["da_nondeg"] = True
            rec.status = experiment.CANDIDATE
        return rec

    monkeypatch.setattr(experiment, "conjecture_trial", fake)


@pytest.mark.parametrize("survive, code", [(True, 2), (False, 0)])
def test_exit_code_follows_quarantine(monkeypatch, survive, code):
    _fake_trials(monkeypatch, survive)
    report, rc = experiment.run_experiment(ExperimentConfig(trials=3, seed=0, search=False))
    s = report["summary"]
    assert s["candidates_raw"] == 3
    assert rc == code
    assert s["candidates_surviving"] == (3 if survive else 0)
    assert len(report["candidates"]) == s["candidates_surviving"]
    for t in report["trials"]:
        assert t["quarantine"]["rank_tol"] == pytest.approx(1e-10)
    schema.validate_report(report)


def test_quarantine_reproduces_from_stored_inputs(diag_quadric):
    rec = experiment.conjecture_trial(diag_quadric, [1, 0], [0.01, 0.0], [1, 1])
    experiment.quarantine(rec, 1e-8)
    assert rec.quarantine["flags"] == rec.flags
    assert rec.quarantine["status"] == rec.status


def test_record_roundtrip_json(diag_quadric):
    rec = experiment.conjecture_trial(diag_quadric, [1, 0], [0.01, 0.0], [1, 1])
    doc = json.loads(json.dumps(rec.to_dict()))
    jsonschema.validate(doc, schema.TRIAL_SCHEMA)
    assert QuadricModel.from_dict(doc["quadric"]) == diag_quadric
    assert isinstance(TrialRecord(**doc), TrialRecord)
