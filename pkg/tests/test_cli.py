"""Command line behavior: parsing, validation, files, exit codes."""

from mwmlab import cli


def run_cli(argv, capsys):
    code = cli.main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


SIM_FLAGS = [
    "--queues", "2", "--servers", "2", "--p", "0.5", "--lambda", "0.2",
    "--horizon", "32", "--replications", "4", "--seed", "42",
]


class TestParsing:
    def test_probability_out_of_range_names_key(self, capsys, tmp_path):
        code, out, err = run_cli(
            ["simulate", *SIM_FLAGS[:4], "--p", "1.5", "--lambda", "0.2",
             "--horizon", "8", "--replications", "2",
             "--out-dir", str(tmp_path)],
            capsys,
        )
        assert code == 2
        assert "p" in err and "[0, 1]" in err

    def test_empty_simulate_lists_required_flags(self, capsys):
        code, out, err = run_cli(["simulate"], capsys)
        assert code == 2
        for key in ("queues", "servers", "p", "lambda", "horizon", "replications"):
            assert key in err

    def test_unknown_policy_named(self, capsys, tmp_path):
        code, out, err = run_cli(
            ["simulate", *SIM_FLAGS, "--policy", "mystery",
             "--out-dir", str(tmp_path)],
            capsys,
        )
        assert code == 2
        assert "mystery" in err

    def test_unknown_config_key_named(self, capsys, tmp_path):
        cfg = tmp_path / "exp.cfg"
        cfg.write_text("queues = 2\nwidgets = 9\n", encoding="utf-8")
        code, out, err = run_cli(["simulate", "--config", str(cfg)], capsys)
        assert code == 2
        assert "widgets" in err

    def test_config_file_with_comments_and_flag_override(self, capsys, tmp_path):
        cfg = tmp_path / "exp.cfg"
        cfg.write_text(
            "# experiment\n"
            "queues = 2\n"
            "servers = 2\n"
            "p = 0.5\n"
            "lambda = 0.9   # overridden by the flag below\n"
            "horizon = 16\n"
            "replications = 2\n"
            "policy = mwm,fixed_order\n"
            f"out_dir = {tmp_path}\n",
            encoding="utf-8",
        )
        code, out, err = run_cli(
            ["simulate", "--config", str(cfg), "--lambda", "0.0"], capsys
        )
        assert code == 0
        assert "lambda=0.0" in out

    def test_defaults_echoed(self, capsys, tmp_path):
        code, out, err = run_cli(
            ["simulate", *SIM_FLAGS[:-2], "--out-dir", str(tmp_path)], capsys
        )
        assert code == 0
        assert "default applied: seed = 42" in out
        assert "default applied: policy" in out
        assert "default applied: cost = total_occupancy" in out

    def test_bad_initial_state(self, capsys, tmp_path):
        code, out, err = run_cli(
            ["simulate", *SIM_FLAGS, "--initial-state", "1,oops",
             "--out-dir", str(tmp_path)],
            capsys,
        )
        assert code == 2
        assert "initial_state" in err


class TestSolveMatching:
    def test_example_matrix(self, capsys, tmp_path):
        f = tmp_path / "w.txt"
        f.write_text("2 2\n3 1\n2 4\n", encoding="utf-8")
        code, out, err = run_cli(["solve-matching", str(f)], capsys)
        assert code == 0
        assert out.strip() == "pairs (0,0),(1,1) weight 7"

    def test_all_zero_matrix(self, capsys, tmp_path):
        f = tmp_path / "w.txt"
        f.write_text("1 2\n0 0\n", encoding="utf-8")
        code, out, err = run_cli(["solve-matching", str(f)], capsys)
        assert code == 0
        assert out.strip() == "pairs none weight 0"

    def test_malformed_file(self, capsys, tmp_path):
        f = tmp_path / "w.txt"
        f.write_text("2 2\n3 1\n", encoding="utf-8")
        code, out, err = run_cli(["solve-matching", str(f)], capsys)
        assert code == 2
        assert "expected 2 weight rows" in err

    def test_missing_file(self, capsys, tmp_path):
        code, out, err = run_cli(["solve-matching", str(tmp_path / "no.txt")], capsys)
        assert code == 2


class TestVerifyLemmas:
    def test_tiny_sweep_exit_zero(self, capsys, tmp_path):
        out_file = tmp_path / "report.txt"
        code, out, err = run_cli(
            ["verify-lemmas", "--max-n", "2", "--max-k", "1", "--max-x", "2",
             "--out", str(out_file)],
            capsys,
        )
        assert code == 0
        assert "total violations: 0" in out
        text = out_file.read_text(encoding="utf-8")
        assert text.endswith("\n")
        assert "total violations: 0" in text

    def test_exit_nonzero_when_a_violation_is_reported(self, capsys, monkeypatch):
        from mwmlab import balance

        def fake_sweep(max_n, max_k, max_x):
            report = balance.LemmaSweepReport(max_n=max_n, max_k=max_k, max_x=max_x)
            report.biconditional_violations.append("synthetic instance")
            return report

        monkeypatch.setattr(balance, "sweep_lemmas", fake_sweep)
        code, out, err = run_cli(["verify-lemmas"], capsys)
        assert code == 1
        assert "total violations: 1" in out


class TestAuditOrder:
    def test_runs_and_writes_report(self, capsys, tmp_path):
        code, out, err = run_cli(
            ["audit-order", "--queues", "2", "--servers", "1", "--p", "0.5",
             "--lambda", "0.2", "--horizon", "20", "--replications", "3",
             "--baseline", "fixed_order", "--out-dir", str(tmp_path)],
            capsys,
        )
        assert code == 0
        assert "fraction holding" in out
        assert (tmp_path / "audit_order.txt").read_text(encoding="utf-8").endswith("\n")

    def test_missing_baseline(self, capsys, tmp_path):
        code, out, err = run_cli(
            ["audit-order", "--queues", "2", "--servers", "1", "--p", "0.5",
             "--lambda", "0.2", "--horizon", "20", "--replications", "3",
             "--out-dir", str(tmp_path)],
            capsys,
        )
        assert code == 2
        assert "baseline" in err

    def test_guard_violation_reported(self, capsys, tmp_path):
        code, out, err = run_cli(
            ["audit-order", "--queues", "2", "--servers", "1", "--p", "0.5",
             "--lambda", "0.2", "--horizon", "80", "--replications", "3",
             "--baseline", "fixed_order", "--out-dir", str(tmp_path)],
            capsys,
        )
        assert code == 2
        assert "horizon" in err


class TestSimulateFiles:
    def test_outputs_written_with_trailing_newlines(self, capsys, tmp_path):
        code, out, err = run_cli(
            ["simulate", *SIM_FLAGS, "--policy", "mwm", "--policy", "fixed_order",
             "--out-dir", str(tmp_path)],
            capsys,
        )
        assert code == 0
        trace = (tmp_path / "trace.csv").read_text(encoding="utf-8")
        dom = (tmp_path / "dominance_total_occupancy.csv").read_text(encoding="utf-8")
        summary = (tmp_path / "summary.txt").read_text(encoding="utf-8")
        assert trace.splitlines()[0] == (
            "replication,slot,policy,cost_name,cost_value,mw_index,x_0,x_1"
        )
        assert dom.splitlines()[0] == "slot,r,policy,ccdf,ci_low,ci_high"
        for text in (trace, dom, summary):
            assert text.endswith("\n")

    def test_zero_arrivals_zero_cost_column(self, capsys, tmp_path):
        code, out, err = run_cli(
            ["simulate", "--queues", "2", "--servers", "2", "--p", "0.5",
             "--lambda", "0.0", "--horizon", "16", "--replications", "2",
             "--record-interval", "4", "--out-dir", str(tmp_path)],
            capsys,
        )
        assert code == 0
        rows = (tmp_path / "trace.csv").read_text(encoding="utf-8").splitlines()[1:]
        assert rows
        for row in rows:
            assert row.split(",")[4] == "0"

    def test_byte_identical_across_runs_and_worker_counts(
        self, capsys, tmp_path, monkeypatch
    ):
        outputs = []
        for idx, threads in enumerate(("1", "2")):
            monkeypatch.setenv("MWMLAB_THREADS", threads)
            out_dir = tmp_path / f"run{idx}"
            code, out, err = run_cli(
                ["simulate", *SIM_FLAGS, "--out-dir", str(out_dir)], capsys
            )
            assert code == 0
            outputs.append(
                {
                    name: (out_dir / name).read_bytes()
                    for name in ("trace.csv", "dominance_total_occupancy.csv", "summary.txt")
                }
            )
        assert outputs[0] == outputs[1]

    def test_bad_threads_env(self, capsys, tmp_path, monkeypatch):
        monkeypatch.setenv("MWMLAB_THREADS", "many")
        code, out, err = run_cli(
            ["simulate", *SIM_FLAGS, "--out-dir", str(tmp_path)], capsys
        )
        assert code == 2
        assert "MWMLAB_THREADS" in err
