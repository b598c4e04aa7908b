import math

import pytest

from mbbo_bench.agents import QAgent, ReinforceAgent, load_checkpoint
from mbbo_bench.metrics import RunRecord
from mbbo_bench.testsuite import LogicalClock, make_instance, split_dataset
from mbbo_bench.workflow import (
    ConfigError,
    ExperimentConfig,
    MissingCheckpointError,
    checkpoint_interval,
    cost_curves,
    derive_seed,
    fmt_sci,
    gap,
    load_config,
    perf_table,
    read_aei,
    run_classic,
    run_experiment,
    run_seed,
    tester_test as run_tester,
    trainer_train,
)
from mbbo_bench.workflow.logger import read_cost_curves
from mbbo_bench.workflow.trainer import read_validation


def tiny(tmp_path, **kw):
    base = dict(dim=2, max_learning_steps=200, test_runs=2, max_fes=200, pop_size=10,
                baselines=("random-search", "de"), clock="logical", out=str(tmp_path / "exp"))
    base.update(kw)
    return ExperimentConfig(**base)


# -- config and seeds ---------------------------------------------------------------------


def test_config_defaults():
    cfg = ExperimentConfig()
    assert (cfg.test_runs, cfg.max_fes, cfg.backbone) == (51, 20_000, "de")
    dock = ExperimentConfig(problem_type="protein-docking")
    assert dock.max_fes == 1000 and dock.dim == 12
    assert ExperimentConfig(agent="reinforce").agent_name == "reinforce-pso"


@pytest.mark.parametrize("kw,msg", [
    (dict(difficulty="medium"), "easy, difficult"),
    (dict(problem_type="cec"), "synthetic"),
    (dict(test_runs=0), "test-runs"),
    (dict(baselines=("de",)), "random-search"),
    (dict(baselines=("random-search", "bo")), "bo"),
    (dict(agent="qlearning", backbone="pso"), "backbone"),
    (dict(max_fes=5, pop_size=10), "population"),
])
def test_config_validation_errors(kw, msg):
    with pytest.raises(ConfigError, match=msg):
        ExperimentConfig(**kw).validate()


def test_aei_optional_without_random_search():
    ExperimentConfig(baselines=("de",), compute_aei=False).validate()


def test_config_snapshot_round_trip(tmp_path):
    cfg = tiny(tmp_path, gap_reference="de")
    (tmp_path / "c.txt").write_text(cfg.to_text())
    assert load_config(tmp_path / "c.txt") == cfg
    with pytest.raises(ConfigError, match="colour"):
        ExperimentConfig.from_text("colour = red\n")
    with pytest.raises(ConfigError, match="dim"):
        ExperimentConfig.from_text("dim = two\n")


def test_seed_derivation():
    assert derive_seed(0, 1, 2) == derive_seed(0, 1, 2)
    assert derive_seed(0, 1, 2) != derive_seed(0, 2, 1)
    assert derive_seed(1, 1, 2) != derive_seed(0, 1, 2)
    assert 0 <= derive_seed(7) < 2**63
    seeds = {run_seed(0, "synthetic:1:5:0", n) for n in range(50)}
    assert len(seeds) == 50
    assert run_seed(0, "synthetic:1:5:0", 3) != run_seed(0, "synthetic:2:5:0", 3)


# -- trainer ------------------------------------------------------------------------------


def test_budget_below_one_episode_runs_one_episode():
    agent = QAgent(seed=0, pop_size=10)
    log = trainer_train(agent, split_dataset("synthetic", 2, "easy").train, 1, 0, max_fes=200, clock=LogicalClock())
    assert len(log.episodes) == 1
    assert agent.learning_step > 1


def test_checkpoint_count_and_history(tmp_path):
    agent = ReinforceAgent(seed=0, pop_size=10)
    problems = split_dataset("synthetic", 2, "easy").train
    M = 150
    log = trainer_train(agent, problems, M, 3, max_fes=200, out_dir=tmp_path, clock=LogicalClock())
    C = checkpoint_interval(M)
    assert len(log.checkpoints) == math.ceil(agent.learning_step / C)
    assert sorted(p.name for p in (tmp_path / "checkpoints").iterdir()) == sorted(
        f"step-{s}.ckpt" for s, _, _ in log.checkpoints)
    last = load_checkpoint(log.checkpoints[-1][2])
    assert last.history == [(s, r) for s, r, _ in log.checkpoints]
    assert [(s, r) for s, r, _ in read_validation(tmp_path / "validation.csv")] == last.history
    assert (tmp_path / "returns.csv").read_text().startswith("episode,instance,return,learning_step\n")
    # problems are visited round-robin in order
    keys = [k for _, k, _, _ in log.episodes]
    assert keys == [problems[i % len(problems)].key for i in range(len(keys))]


def test_trainer_rejects_empty_split():
    with pytest.raises(ValueError):
        trainer_train(QAgent(), [], 10, 0)


# -- tester -------------------------------------------------------------------------------


def test_record_count_and_pairing():
    problems = split_dataset("synthetic", 2, "easy").test[:2]
    agent = QAgent(seed=0, pop_size=10)
    roster = ("random-search", "de", "q")
    recs = run_tester(roster, problems, 3, 0, 200, {"q": agent}, LogicalClock(), 10)
    assert len(recs) == len(roster) * len(problems) * 3
    assert {(r.algorithm, r.problem, r.run) for r in recs} == {
        (a, p.key, n) for a in roster for p in problems for n in range(3)}
    assert all(r.v_fes_raw <= 200 + 10 for r in recs)


def test_paired_runs_share_the_initial_population():
    p = make_instance("synthetic", 3, 4)
    s = run_seed(0, p.key, 0)
    de, pso = run_classic("de", p, s, max_fes=100, pop_size=10), run_classic("pso", p, s, max_fes=100, pop_size=10)
    assert de.trace[0] == pso.trace[0]


def test_random_search_spends_the_whole_budget():
    p = make_instance("synthetic", 15, 5)
    for n in range(5):
        assert run_classic("random-search", p, run_seed(0, p.key, n), n, 500, pop_size=50).v_fes_raw == 500


def test_missing_checkpoint_names_algorithm(tmp_path):
    problems = split_dataset("synthetic", 2, "easy").test[:1]
    with pytest.raises(MissingCheckpointError, match="qlearning-de"):
        run_tester(["qlearning-de"], problems, 1, 0, 100)
    with pytest.raises(MissingCheckpointError, match="qlearning-de"):
        run_tester(["qlearning-de"], problems, 1, 0, 100, {"qlearning-de": tmp_path / "nope.ckpt"})


def test_docking_records_score_against_best_found():
    p = make_instance("protein-docking", 1, 12)
    recs = run_tester(["random-search", "de"], [p], 2, 0, 100, clock=LogicalClock(), pop_size=10)
    assert min(r.v_obj_raw for r in recs) == pytest.approx(1e-12)
    assert all(r.v_obj_raw > 0 for r in recs)


# -- logger -------------------------------------------------------------------------------


def test_fmt_sci_matches_table_style():
    assert fmt_sci(7.689e-9) == "7.689E-9"
    assert fmt_sci(20100.0) == "2.010E+4"
    assert fmt_sci(0.0) == "0.000E+0"


def test_gap_anchors():
    assert gap(3.0, 3.0, 10.0) == 0.0
    assert gap(10.0, 3.0, 10.0) == 1.0


def _recs():
    out = []
    for a, scale in (("random-search", 10.0), ("de", 1.0), ("cma-es", 0.1)):
        for k in ("p1", "p2"):
            for n in range(3):
                final = scale * (n + 1)
                out.append(RunRecord(a, k, n, final, 100.0, 0.0, 0.0,
                                     ((10, 100.0), (50, 5 * final), (100, final))))
    return out


def test_perf_table_gap_rows():
    text = perf_table(_recs(), ["random-search", "de", "cma-es"])
    gaps = [line for line in text.splitlines() if "| Gap |" in line]
    assert len(gaps) == 2
    for line in gaps:
        cells = [c.strip() for c in line.strip("|").split("|")][2:]
        assert cells[0] == "1.000" and cells[2] == "0.000"
    assert "2.000E+1<br>(8.165E+0)" in text


def test_cost_curves_are_monotone_and_normalized():
    rows = cost_curves(_recs(), ["random-search", "de", "cma-es"], 100)
    for a in ("random-search", "de", "cma-es"):
        vals = [v for name, _, v in rows if name == a]
        assert len(vals) == 51
        assert all(b <= x + 1e-15 for x, b in zip(vals, vals[1:]))
        assert all(0.0 <= v <= 1.0 for v in vals)


# -- run_experiment -----------------------------------------------------------------------


def test_run_experiment_end_to_end(tmp_path):
    cfg = tiny(tmp_path)
    ledger = run_experiment(cfg)
    out = tmp_path / "exp"
    for name in ("aei.csv", "perf_table.md", "walltime.csv", "cost_curves.csv"):
        assert (out / "reports" / name).is_file()
    assert (out / "config.snapshot").read_text() == cfg.to_text()
    assert len(ledger.records) == 3 * 6 * 2
    assert {r.algorithm for r in ledger.records} <= set(cfg.roster)
    scores = read_aei(out / "reports" / "aei.csv")
    assert scores["random-search"] == 1.0 and set(scores) == set(cfg.roster)
    curves = read_cost_curves(out / "reports" / "cost_curves.csv")
    for a in cfg.roster:
        vals = [v for name, _, v in curves if name == a]
        assert all(b <= x + 1e-15 for x, b in zip(vals, vals[1:]))


def test_resume_skips_completed_phases(tmp_path):
    cfg = tiny(tmp_path)
    run_experiment(cfg, until="train")
    out = tmp_path / "exp"
    stamp = (out / "train" / "returns.csv").stat().st_mtime_ns
    assert not (out / "test").exists()
    ledger = run_experiment(cfg)
    assert (out / "train" / "returns.csv").stat().st_mtime_ns == stamp
    assert ledger.best_checkpoint and (out / "reports" / "aei.csv").is_file()


def test_changed_config_in_same_directory_is_rejected(tmp_path):
    run_experiment(tiny(tmp_path), until="train")
    with pytest.raises(ConfigError, match="different configuration"):
        run_experiment(tiny(tmp_path, seed=1), until="train")


def test_failure_leaves_error_marker(tmp_path):
    cfg = tiny(tmp_path)
    run_experiment(cfg, until="test")
    out = tmp_path / "exp"
    (out / "test" / "records.csv").write_text("broken\n")
    with pytest.raises(Exception):
        run_experiment(cfg)
    marker = (out / "ERROR").read_text()
    assert marker.startswith("phase: test")
    assert (out / "train" / "validation.csv").is_file()


def test_invalid_config_does_no_work(tmp_path):
    with pytest.raises(ConfigError):
        run_experiment(tiny(tmp_path, baselines=("de",)))
    assert not (tmp_path / "exp").exists()
